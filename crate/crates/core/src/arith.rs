//! Integer primitives: prime tables, factorization, Möbius function,
//! squarefree and friable enumeration.

use num_integer::Integer;
use once_cell::sync::Lazy;
use serde::Serialize;

/// Primes below this bound are cached for trial division, which covers
/// every input up to `SMALL_PRIME_BOUND^2 = 10^10`.
const SMALL_PRIME_BOUND: u64 = 100_000;

static SMALL_PRIMES: Lazy<PrimeTable> = Lazy::new(|| primes_up_to(SMALL_PRIME_BOUND));

/// Complete ascending list of the primes up to `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeTable {
    bound: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes.iter().copied()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(bound: u64) -> PrimeTable {
    if bound < 2 {
        return PrimeTable {
            bound,
            primes: Vec::new(),
        };
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    PrimeTable { bound, primes }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n <= SMALL_PRIME_BOUND {
        return SMALL_PRIMES.contains(n);
    }
    let f = factorize(n);
    f.len() == 1 && f[0].1 == 1
}

/// Prime factorization `[(p, e), ...]` in ascending order of `p`, by trial
/// division over the cached prime table.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut out = Vec::new();
    for p in SMALL_PRIMES.iter() {
        if p * p > n {
            break;
        }
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    // Inputs beyond 10^10 fall through to odd trial divisors.
    let mut d = SMALL_PRIME_BOUND + 1;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 2;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Möbius function and radical of `n >= 1`.
pub fn mobius_and_radical(n: u64) -> (i8, u64) {
    let f = factorize(n);
    let rad = f.iter().map(|&(p, _)| p).product();
    let mu = if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    };
    (mu, rad)
}

pub fn mobius(n: u64) -> i8 {
    mobius_and_radical(n).0
}

pub fn radical(n: u64) -> u64 {
    mobius_and_radical(n).1
}

/// Number of distinct prime factors.
pub fn omega(n: u64) -> usize {
    factorize(n).len()
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn is_squarefree(n: u64) -> bool {
    n >= 1 && factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Squarefree integers `1 <= q <= bound`, ascending; `q = 1` is included.
pub fn squarefree_up_to(bound: u64) -> Vec<u64> {
    if bound == 0 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut ok = vec![true; n + 1];
    let mut p = 2usize;
    while p * p <= n {
        let sq = p * p;
        let mut j = sq;
        while j <= n {
            ok[j] = false;
            j += sq;
        }
        p += 1;
    }
    (1..=n).filter(|&i| ok[i]).map(|i| i as u64).collect()
}

/// `Q`-friable integers `m <= N` coprime with `q_excluded`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FriableSet {
    pub n: u64,
    pub q: u64,
    pub q_excluded: u64,
    members: Vec<u64>,
}

impl FriableSet {
    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: u64) -> bool {
        self.members.binary_search(&m).is_ok()
    }

    /// Squarefree members, i.e. the divisors `d <= N` of the primorial.
    pub fn squarefree(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied().filter(|&m| is_squarefree(m))
    }
}

/// Enumerates `Ψ_q(N, Q)` by depth-first multiplication over the admissible
/// primes, so the cost is proportional to the output size.
pub fn friable_up_to(n: u64, q: u64, q_excluded: u64) -> FriableSet {
    let admissible: Vec<u64> = primes_up_to(q.min(n))
        .iter()
        .filter(|p| q_excluded.gcd(p) == 1)
        .collect();
    let mut members = Vec::new();
    if n >= 1 {
        let mut stack = vec![(1u64, 0usize)];
        while let Some((m, start)) = stack.pop() {
            members.push(m);
            for (i, &p) in admissible.iter().enumerate().skip(start) {
                match m.checked_mul(p) {
                    Some(next) if next <= n => stack.push((next, i)),
                    _ => break,
                }
            }
        }
    }
    members.sort_unstable();
    FriableSet {
        n,
        q,
        q_excluded,
        members,
    }
}

/// Multiplicative inverse of `a` modulo `m` (requires `gcd(a, m) = 1`).
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let g = (a as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}
