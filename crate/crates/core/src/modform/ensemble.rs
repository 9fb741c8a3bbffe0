use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, primes_up_to};
use crate::sato_tate::LocalTuple;
use crate::{Error, Result};

/// One eigenform: a positive weight and its eigenvalues `λ_f(p) ∈ [-2, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    id: String,
    weight: f64,
    local: LocalTuple,
}

impl Form {
    pub fn new(id: impl Into<String>, weight: f64, eigenvalues: BTreeMap<u64, f64>) -> Result<Self> {
        let id = id.into();
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidForm {
                form: id,
                reason: format!("weight {weight} is not positive"),
            });
        }
        let local = LocalTuple::new(eigenvalues)?;
        Ok(Self { id, weight, local })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn lambda(&self, p: u64) -> Option<f64> {
        self.local.get(p)
    }

    /// Eigenvalues as a local tuple for [`crate::sato_tate::lambda_big`].
    pub fn local(&self) -> &LocalTuple {
        &self.local
    }

    pub(crate) fn require(&self, p: u64) -> Result<f64> {
        self.lambda(p).ok_or_else(|| Error::IncompleteEnsemble {
            form: self.id.clone(),
            p,
        })
    }
}

/// A finite family of weighted forms standing in for a Hecke basis of level
/// `level_q`, with eigenvalues at every prime `p <= Q_max`, `p ∤ level_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    label: String,
    level_q: u64,
    prime_bound: u64,
    weight_k: Option<u32>,
    forms: Vec<Form>,
}

impl Ensemble {
    pub fn new(label: impl Into<String>, level_q: u64, prime_bound: u64, forms: Vec<Form>) -> Result<Self> {
        if level_q == 0 {
            return Err(Error::Invalid("level must be at least 1".into()));
        }
        let needed: Vec<u64> = primes_up_to(prime_bound)
            .iter()
            .filter(|p| level_q.gcd(p) == 1)
            .collect();
        for f in &forms {
            if let Some((p, _)) = f.local.iter().find(|&(p, _)| level_q.gcd(&p) != 1) {
                return Err(Error::InvalidForm {
                    form: f.id.clone(),
                    reason: format!("prime {p} divides the level {level_q}"),
                });
            }
            if let Some(&p) = needed.iter().find(|&&p| f.lambda(p).is_none()) {
                return Err(Error::IncompleteEnsemble { form: f.id.clone(), p });
            }
        }
        Ok(Self {
            label: label.into(),
            level_q,
            prime_bound,
            weight_k: None,
            forms,
        })
    }

    /// Tags the ensemble with the weight `k` of its forms.
    pub fn with_weight_k(mut self, k: u32) -> Self {
        self.weight_k = Some(k);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level_q(&self) -> u64 {
        self.level_q
    }

    pub fn prime_bound(&self) -> u64 {
        self.prime_bound
    }

    pub fn weight_k(&self) -> Option<u32> {
        self.weight_k
    }

    /// Weight 2 loses an extra `log N` in the large sieve; only reported.
    pub fn log_factor_flag(&self) -> bool {
        self.weight_k == Some(2)
    }

    pub fn forms(&self) -> &[Form] {
        &self.forms
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// `Σ_f w_f`; only approximately 1 for harmonic weights.
    pub fn total_mass(&self) -> f64 {
        self.forms.iter().map(|f| f.weight).sum()
    }

    /// `E(g) = Σ_f w_f g(f)`, summed in form order.
    pub fn expect<G: Fn(&Form) -> f64>(&self, g: G) -> f64 {
        self.forms.iter().map(|f| f.weight * g(f)).sum()
    }

    /// [`Ensemble::expect`] with the standard error of the weighted mean,
    /// `sqrt(Σ w_f² (g(f) - ḡ)²)` where `ḡ` is the normalized mean.
    pub fn expect_with_error<G: Fn(&Form) -> f64>(&self, g: G) -> (f64, f64) {
        let values: Vec<f64> = self.forms.iter().map(g).collect();
        self.weighted_stats(&values)
    }

    pub(crate) fn weighted_stats(&self, values: &[f64]) -> (f64, f64) {
        let mass = self.total_mass();
        let mean: f64 = self.forms.iter().zip(values).map(|(f, v)| f.weight * v).sum();
        let centre = mean / mass;
        let var: f64 = self
            .forms
            .iter()
            .zip(values)
            .map(|(f, v)| (f.weight * (v - centre)).powi(2))
            .sum();
        (mean, var.sqrt())
    }

    /// Raw `P(event) = Σ_{f in event} w_f`.
    pub fn probability<G: Fn(&Form) -> bool>(&self, event: G) -> f64 {
        self.expect(|f| if event(f) { 1.0 } else { 0.0 })
    }

    /// `P(event)` renormalized by the total mass.
    pub fn probability_normalized<G: Fn(&Form) -> bool>(&self, event: G) -> f64 {
        self.probability(event) / self.total_mass()
    }

    /// Writes `form_id,weight,p,lambda`, one row per form and prime.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for f in &self.forms {
            for (p, lambda) in f.local.iter() {
                w.serialize(Row {
                    form_id: f.id.clone(),
                    weight: f.weight,
                    p,
                    lambda,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    form_id: String,
    weight: f64,
    p: u64,
    lambda: f64,
}

/// Reads an eigenvalue CSV (`form_id,weight,p,lambda`). Rows for primes
/// above `prime_bound` are skipped; forms keep their first-seen order.
pub fn load_ensemble_reader<R: Read>(reader: R, prime_bound: u64, level_q: u64, label: &str) -> Result<Ensemble> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["form_id", "weight", "p", "lambda"] {
        return Err(Error::Parse(format!(
            "unexpected header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut data: BTreeMap<String, (f64, BTreeMap<u64, f64>)> = BTreeMap::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        if !is_prime(row.p) {
            return Err(Error::NotPrime(row.p));
        }
        if row.lambda.abs() > 2.0 || row.lambda.is_nan() {
            return Err(Error::OutOfRange(row.lambda));
        }
        let entry = data.entry(row.form_id.clone()).or_insert_with(|| {
            order.push(row.form_id.clone());
            (row.weight, BTreeMap::new())
        });
        if entry.0 != row.weight {
            return Err(Error::InvalidForm {
                form: row.form_id,
                reason: "weight differs between rows".into(),
            });
        }
        if row.p > prime_bound {
            continue;
        }
        if entry.1.insert(row.p, row.lambda).is_some() {
            return Err(Error::InvalidForm {
                form: row.form_id,
                reason: format!("duplicate row for p = {}", row.p),
            });
        }
    }
    let forms = order
        .into_iter()
        .map(|id| {
            let (w, eig) = data.remove(&id).expect("recorded form");
            Form::new(id, w, eig)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(label, level_q, prime_bound, forms)
}

pub fn load_ensemble(path: impl AsRef<Path>, prime_bound: u64, level_q: u64) -> Result<Ensemble> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    load_ensemble_reader(file, prime_bound, level_q, &path.display().to_string())
}

/// Inverts `F(θ) = (2θ - sin 2θ) / (2π)`, the Sato–Tate distribution
/// function in the angle, and returns `2cos θ`.
///
/// The upper half is mapped to the lower one through `λ ↦ -λ`; `F` is flat
/// at both ends and only the lower end is resolved accurately.
pub fn sato_tate_quantile(u: f64) -> f64 {
    if u > 0.5 {
        return -sato_tate_quantile(1.0 - u);
    }
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::FRAC_PI_2);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let f = (2.0 * mid - (2.0 * mid).sin()) / std::f64::consts::TAU;
        if f < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (2.0 * (0.5 * (lo + hi)).cos()).clamp(-2.0, 2.0)
}

/// Independent Sato–Tate eigenvalues for each form and prime `p <= Q_max`
/// coprime to the level, with uniform weights `1 / num_forms`.
///
/// Form `i` draws from its own ChaCha stream `i` under `seed`, so the
/// result does not depend on how generation is scheduled.
pub fn synthetic_ensemble(num_forms: usize, prime_bound: u64, level_q: u64, seed: u64) -> Result<Ensemble> {
    if num_forms == 0 {
        return Err(Error::Invalid("an ensemble needs at least one form".into()));
    }
    let primes: Vec<u64> = primes_up_to(prime_bound)
        .iter()
        .filter(|p| level_q.gcd(p) == 1)
        .collect();
    let weight = 1.0 / num_forms as f64;
    let forms = (0..num_forms)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let eig = primes
                .iter()
                .map(|&p| (p, sato_tate_quantile(rng.random::<f64>())))
                .collect();
            Form::new(format!("synthetic-{i}"), weight, eig)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(format!("synthetic(seed={seed})"), level_q, prime_bound, forms)
}
