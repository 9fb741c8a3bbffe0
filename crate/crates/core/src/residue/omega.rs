use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, primes_up_to};
use crate::{Error, Result};

/// Residue classes `Ω_p ⊂ Z/pZ` removed at each prime `p <= Q`.
///
/// Primes without an entry carry the empty condition. `|Ω_p| = p` is
/// rejected: every integer would be sifted out and the weights
/// `|Ω_p| / (p - |Ω_p|)` become singular.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OmegaJson", into = "OmegaJson")]
pub struct OmegaSystem {
    q: u64,
    sets: BTreeMap<u64, BTreeSet<u64>>,
}

#[derive(Serialize, Deserialize)]
struct OmegaJson {
    #[serde(rename = "Q")]
    q: u64,
    sets: BTreeMap<String, Vec<u64>>,
}

impl TryFrom<OmegaJson> for OmegaSystem {
    type Error = Error;

    fn try_from(j: OmegaJson) -> Result<Self> {
        let mut sets = BTreeMap::new();
        for (k, v) in j.sets {
            let p: u64 = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("prime key {k:?} is not an integer")))?;
            sets.insert(p, v.into_iter().collect());
        }
        OmegaSystem::new(j.q, sets)
    }
}

impl From<OmegaSystem> for OmegaJson {
    fn from(o: OmegaSystem) -> Self {
        OmegaJson {
            q: o.q,
            sets: o
                .sets
                .into_iter()
                .map(|(p, s)| (p.to_string(), s.into_iter().collect()))
                .collect(),
        }
    }
}

impl OmegaSystem {
    pub fn new(q: u64, sets: BTreeMap<u64, BTreeSet<u64>>) -> Result<Self> {
        if q == 0 {
            return Err(Error::Invalid("sieve bound Q must be at least 1".into()));
        }
        for (&p, set) in &sets {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            if p > q {
                return Err(Error::PrimeAboveBound { p, bound: q });
            }
            if let Some(&r) = set.iter().find(|&&r| r >= p) {
                return Err(Error::ResidueOutOfRange { p, residue: r });
            }
            if set.len() as u64 >= p {
                return Err(Error::FullResidueSet { p, size: set.len() });
            }
        }
        let mut full = BTreeMap::new();
        for p in primes_up_to(q).iter() {
            full.insert(p, sets.get(&p).cloned().unwrap_or_default());
        }
        Ok(Self { q, sets: full })
    }

    /// No conditions at any prime.
    pub fn empty(q: u64) -> Result<Self> {
        Self::new(q, BTreeMap::new())
    }

    /// `Ω_p = {0}`: sifts out multiples of small primes.
    pub fn zero(q: u64) -> Result<Self> {
        let sets = primes_up_to(q).iter().map(|p| (p, BTreeSet::from([0]))).collect();
        Self::new(q, sets)
    }

    /// `Ω_p` = quadratic non-residues mod `p`, so that every perfect square
    /// survives the sieve. Empty at `p = 2`, `(p - 1) / 2` classes otherwise.
    pub fn squares(q: u64) -> Result<Self> {
        let sets = primes_up_to(q)
            .iter()
            .map(|p| {
                let residues: BTreeSet<u64> = (0..p).map(|x| x * x % p).collect();
                (p, (0..p).filter(|r| !residues.contains(r)).collect())
            })
            .collect();
        Self::new(q, sets)
    }

    /// Independent random subsets with `|Ω_p| < p`, reproducible from `seed`.
    pub fn random(q: u64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sets = primes_up_to(q)
            .iter()
            .map(|p| {
                let size = rng.random_range(0..p);
                let mut residues: Vec<u64> = (0..p).collect();
                for i in 0..size as usize {
                    let j = rng.random_range(i..p as usize);
                    residues.swap(i, j);
                }
                (p, residues[..size as usize].iter().copied().collect())
            })
            .collect();
        Self::new(q, sets)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("omega system serializes")
    }

    pub fn bound(&self) -> u64 {
        self.q
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.sets.keys().copied()
    }

    pub fn set(&self, p: u64) -> Option<&BTreeSet<u64>> {
        self.sets.get(&p)
    }

    /// `|Ω_p|` (zero for primes outside the system).
    pub fn size(&self, p: u64) -> u64 {
        self.sets.get(&p).map_or(0, |s| s.len() as u64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &BTreeSet<u64>)> + '_ {
        self.sets.iter().map(|(&p, s)| (p, s))
    }

    /// Whether `n` survives the condition at every prime.
    pub fn survives(&self, n: u64) -> bool {
        self.sets.iter().all(|(&p, s)| !s.contains(&(n % p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_matches_documented_layout() {
        let o = OmegaSystem::from_json_str(r#"{"Q": 5, "sets": {"2": [0], "3": [0, 1]}}"#).unwrap();
        assert_eq!(o.size(2), 1);
        assert_eq!(o.size(3), 2);
        assert_eq!(o.size(5), 0);
        let back = OmegaSystem::from_json_str(&o.to_json_string()).unwrap();
        assert_eq!(back, o);
        assert!(o
            .to_json_string()
            .starts_with(r#"{"Q":5,"sets":{"2":[0],"3":[0,1],"5":[]}"#));
    }

    #[test]
    fn rejects_invalid_systems() {
        let full = BTreeMap::from([(3, BTreeSet::from([0, 1, 2]))]);
        assert!(matches!(
            OmegaSystem::new(3, full),
            Err(Error::FullResidueSet { p: 3, .. })
        ));
        let big = BTreeMap::from([(5, BTreeSet::from([5]))]);
        assert!(matches!(OmegaSystem::new(5, big), Err(Error::ResidueOutOfRange { .. })));
        let comp = BTreeMap::from([(4, BTreeSet::from([0]))]);
        assert!(matches!(OmegaSystem::new(5, comp), Err(Error::NotPrime(4))));
        let above = BTreeMap::from([(7, BTreeSet::from([0]))]);
        assert!(matches!(OmegaSystem::new(5, above), Err(Error::PrimeAboveBound { .. })));
        assert!(OmegaSystem::from_json_str(r#"{"Q": 3, "sets": {"two": [0]}}"#).is_err());
    }

    #[test]
    fn square_preset_keeps_perfect_squares() {
        let o = OmegaSystem::squares(50).unwrap();
        assert_eq!(o.size(2), 0);
        assert_eq!(o.size(7), 3);
        assert!((1..200u64).all(|k| o.survives(k * k)));
    }

    #[test]
    fn random_preset_is_seeded_and_valid() {
        let a = OmegaSystem::random(97, 11).unwrap();
        assert_eq!(a, OmegaSystem::random(97, 11).unwrap());
        assert_ne!(a, OmegaSystem::random(97, 12).unwrap());
        assert!(a.iter().all(|(p, s)| (s.len() as u64) < p));
    }
}
