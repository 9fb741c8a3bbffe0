use largesieve::harmonic::{dls_ratio, gram_extreme, hls_ratio, FareyCoeffs, FareyIndex, SequenceCoeffs};
use largesieve::modform::{
    cor1_check, cor2_bound, load_ensemble, sign_change_experiment, sign_change_parameters, synthetic_ensemble,
    Ensemble, LocalPolys,
};
use largesieve::residue::{sift_bruteforce, verify_sieve, OmegaSystem};
use largesieve::sato_tate::{self, minorant_graph, st_probability_below, Target};
use largesieve::{parse_rational, Complex64, Rational, Scalar};
use num_integer::Roots;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{CliError, Outcome, Table};
use crate::{
    ClassicalArgs, Cor1Args, Cor2Args, DualArgs, EnsembleArgs, MinorantArgs, SiftArgs, SignChangeArgs, SquaresArgs,
};

fn insert(outcome: &mut Outcome, key: &str, v: Value) {
    if let Value::Object(m) = &mut outcome.report {
        m.insert(key.to_string(), v);
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn classical_bound(a: &ClassicalArgs) -> Result<Outcome, CliError> {
    let omega = a.omega.build(a.q).map_err(CliError::Validation)?;
    let delta = a.delta.as_deref().map(parse_rational).transpose()?;
    let v = verify_sieve(&omega, a.n, delta);
    let mut out = Outcome::new(&v)?
        .check("als_holds", v.als_holds)
        .check("rls_holds", v.rls_holds.unwrap_or(true))
        .check("weaker_dominates", v.weaker_dominates);
    insert(&mut out, "omega", json!(a.omega.label()));
    Ok(out)
}

#[derive(Serialize)]
struct SiftReport {
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "Q")]
    q: u64,
    omega: String,
    count: usize,
    sifted: Vec<u64>,
}

pub fn sift(a: &SiftArgs) -> Result<Outcome, CliError> {
    let omega = a.omega.build(a.q).map_err(CliError::Validation)?;
    let sifted = sift_bruteforce(&omega, a.n);
    let table = Table {
        headers: vec!["n".into()],
        rows: sifted.iter().map(|n| vec![n.to_string()]).collect(),
    };
    let report = SiftReport {
        n: a.n,
        q: omega.bound(),
        omega: a.omega.label(),
        count: sifted.len(),
        sifted,
    };
    Ok(Outcome::new(&report)?.with_table(table))
}

#[derive(Serialize)]
struct DualRow {
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "Q")]
    q: u64,
    /// `N - 1 + Q²`.
    delta: u64,
    gram_extreme: f64,
    max_hls_ratio: f64,
    max_dls_ratio: f64,
    gram_within_delta: bool,
    ratios_within_gram: bool,
}

const SLACK: f64 = 1e-6;

fn random_complex(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn dual_check(a: &DualArgs) -> Result<Outcome, CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in &a.n {
        for &q in &a.q {
            if n == 0 || q == 0 {
                return Err(CliError::Usage("--N and --Q must be positive".into()));
            }
            let gram = gram_extreme(n, q)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            rng.set_stream(rows.len() as u64);
            let index = FareyIndex::new(q);
            let (mut hls, mut dls) = (0.0f64, 0.0f64);
            for _ in 0..a.trials {
                let seq = SequenceCoeffs(random_complex(&mut rng, n as usize));
                hls = hls.max(hls_ratio(&seq, q)?);
                let beta = FareyCoeffs {
                    index: index.clone(),
                    values: random_complex(&mut rng, index.len()),
                };
                dls = dls.max(dls_ratio(&beta, n)?);
            }
            let delta = n - 1 + q * q;
            rows.push(DualRow {
                n,
                q,
                delta,
                gram_extreme: gram,
                max_hls_ratio: hls,
                max_dls_ratio: dls,
                gram_within_delta: gram <= delta as f64 + SLACK,
                ratios_within_gram: hls <= gram + SLACK && dls <= gram + SLACK,
            });
        }
    }
    let table = Table {
        headers: [
            "N",
            "Q",
            "delta",
            "gram_extreme",
            "max_hls_ratio",
            "max_dls_ratio",
            "gram_within_delta",
            "ratios_within_gram",
        ]
        .map(String::from)
        .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.q.to_string(),
                    r.delta.to_string(),
                    num(r.gram_extreme),
                    num(r.max_hls_ratio),
                    num(r.max_dls_ratio),
                    r.gram_within_delta.to_string(),
                    r.ratios_within_gram.to_string(),
                ]
            })
            .collect(),
    };
    let gram_ok = rows.iter().all(|r| r.gram_within_delta);
    let ratios_ok = rows.iter().all(|r| r.ratios_within_gram);
    Ok(
        Outcome::new(&json!({ "trials": a.trials, "seed": a.seed, "rows": rows }))?
            .check("gram_within_delta", gram_ok)
            .check("ratios_within_gram", ratios_ok)
            .with_table(table),
    )
}

#[derive(Serialize)]
struct SquaresRow {
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "Q")]
    q: u64,
    count: u64,
    sqrt_n: u64,
    squares_survive: bool,
    als_holds: bool,
    #[serde(rename = "H")]
    h: f64,
    bound_als: f64,
    bound_weaker: f64,
    als_over_sqrt_n: f64,
    weaker_over_als: f64,
    log_n_quarter: f64,
    /// `als_over_sqrt_n / (C_als · (log N)^{1/4})`.
    als_fit_ratio: f64,
    /// `weaker_over_als / (C_trend · (log N)^{1/4})`.
    trend_fit_ratio: f64,
}

/// Least-squares constant in `y ≈ C x` on a log scale.
fn log_fit(pairs: &[(f64, f64)]) -> f64 {
    let mean = pairs.iter().map(|(y, x)| (y / x).ln()).sum::<f64>() / pairs.len() as f64;
    mean.exp()
}

pub fn squares_demo(a: &SquaresArgs) -> Result<Outcome, CliError> {
    let mut ns = a.n.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() || ns[0] < 4 {
        return Err(CliError::Usage("--N values must be at least 4".into()));
    }
    let mut rows = Vec::new();
    for &n in &ns {
        let q = n.sqrt();
        let omega = OmegaSystem::squares(q)?;
        let v = verify_sieve(&omega, n, None);
        let r = &v.report;
        let (als, weaker) = (Scalar::to_f64(&r.bound_als), Scalar::to_f64(&r.bound_weaker));
        let ratio: Rational = r.bound_weaker.clone() / r.bound_als.clone();
        rows.push(SquaresRow {
            n,
            q,
            count: v.count,
            sqrt_n: q,
            squares_survive: (1..=q).all(|k| omega.survives(k * k)),
            als_holds: v.pass,
            h: Scalar::to_f64(&r.h),
            bound_als: als,
            bound_weaker: weaker,
            als_over_sqrt_n: als / (n as f64).sqrt(),
            weaker_over_als: Scalar::to_f64(&ratio),
            log_n_quarter: (n as f64).ln().powf(0.25),
            als_fit_ratio: 0.0,
            trend_fit_ratio: 0.0,
        });
    }
    let c_als = log_fit(
        &rows
            .iter()
            .map(|r| (r.als_over_sqrt_n, r.log_n_quarter))
            .collect::<Vec<_>>(),
    );
    let c_trend = log_fit(
        &rows
            .iter()
            .map(|r| (r.weaker_over_als, r.log_n_quarter))
            .collect::<Vec<_>>(),
    );
    for r in &mut rows {
        r.als_fit_ratio = r.als_over_sqrt_n / (c_als * r.log_n_quarter);
        r.trend_fit_ratio = r.weaker_over_als / (c_trend * r.log_n_quarter);
    }
    let increasing = rows.windows(2).all(|w| w[1].als_over_sqrt_n > w[0].als_over_sqrt_n);
    let table = Table {
        headers: [
            "N",
            "Q",
            "count",
            "sqrt_n",
            "H",
            "bound_als",
            "bound_weaker",
            "als_over_sqrt_n",
            "weaker_over_als",
            "log_n_quarter",
            "als_fit_ratio",
            "trend_fit_ratio",
        ]
        .map(String::from)
        .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.q.to_string(),
                    r.count.to_string(),
                    r.sqrt_n.to_string(),
                    num(r.h),
                    num(r.bound_als),
                    num(r.bound_weaker),
                    num(r.als_over_sqrt_n),
                    num(r.weaker_over_als),
                    num(r.log_n_quarter),
                    num(r.als_fit_ratio),
                    num(r.trend_fit_ratio),
                ]
            })
            .collect(),
    };
    let all = |f: &dyn Fn(&SquaresRow) -> bool| rows.iter().all(f);
    let checks = [
        ("squares_survive", all(&|r| r.squares_survive && r.count >= r.sqrt_n)),
        ("als_holds", all(&|r| r.als_holds)),
        ("als_over_sqrt_n_increasing", increasing),
        (
            "als_within_factor_10_of_fit",
            all(&|r| (0.1..=10.0).contains(&r.als_fit_ratio)),
        ),
        (
            "weaker_trend_within_20pct_of_fit",
            all(&|r| (r.trend_fit_ratio - 1.0).abs() <= 0.2),
        ),
    ];
    let mut out = Outcome::new(&json!({ "fit_als": c_als, "fit_trend": c_trend, "rows": rows }))?;
    for (name, ok) in checks {
        out = out.check(name, ok);
    }
    Ok(out.with_table(table))
}

fn ensemble(args: &EnsembleArgs, prime_bound: u64) -> Result<(Ensemble, bool), CliError> {
    let (e, synthetic) = match &args.ensemble {
        Some(path) => (
            load_ensemble(path, args.prime_bound.unwrap_or(prime_bound), args.level)?,
            false,
        ),
        None => {
            if args.forms == 0 {
                return Err(CliError::Usage("--forms must be positive".into()));
            }
            (
                synthetic_ensemble(args.forms, prime_bound, args.level, args.seed)?,
                true,
            )
        }
    };
    let e = match args.weight_k {
        Some(k) => e.with_weight_k(k),
        None => e,
    };
    if let Some(path) = &args.save_ensemble {
        e.write_csv(std::fs::File::create(path)?)?;
    }
    Ok((e, synthetic))
}

pub fn modform_cor1(a: &Cor1Args) -> Result<Outcome, CliError> {
    let (e, synthetic) = ensemble(&a.ensemble, a.q)?;
    let y = a.poly.build()?;
    let ys = LocalPolys::uniform(a.q, e.level_q(), &y);
    let rep = cor1_check(&e, &ys)?;
    let mut out = Outcome::new(&rep)?;
    if synthetic {
        // Independent Sato–Tate eigenvalues: the variances add up.
        let expected = rep.total_mass * Scalar::to_f64(&rep.sigma2_sum);
        let tolerance = 5.0 * rep.lhs_standard_error;
        insert(
            &mut out,
            "model",
            json!({ "expected_lhs": expected, "tolerance": tolerance }),
        );
        out = out.check("model_agreement", (rep.lhs - expected).abs() <= tolerance);
    }
    Ok(out)
}

pub fn modform_cor2(a: &Cor2Args) -> Result<Outcome, CliError> {
    let (e, synthetic) = ensemble(&a.ensemble, a.q)?;
    let y = a.poly.build()?;
    let ys = LocalPolys::uniform(a.q, e.level_q(), &y);
    let rep = cor2_bound(&e, &ys, a.n)?;
    let mut out = Outcome::new(&rep)?.check("chain_holds", rep.chain_holds);
    if synthetic {
        let model: f64 = ys
            .iter()
            .map(|(_, y)| st_probability_below(y.series(), Scalar::to_f64(&y.threshold())))
            .product();
        let se = (model * (1.0 - model) / e.len() as f64).sqrt();
        let tolerance = (3.0 * se).max(1e-12);
        insert(
            &mut out,
            "model",
            json!({ "probability": model, "standard_error": se, "tolerance": tolerance }),
        );
        out = out
            .check(
                "model_agreement",
                (rep.probability_normalized - model).abs() <= tolerance,
            )
            .check("ls_const_at_most_2", rep.ls_const <= 2.0);
    }
    Ok(out)
}

pub fn sign_change(a: &SignChangeArgs) -> Result<Outcome, CliError> {
    let (q, _, _) = sign_change_parameters(a.ensemble.level, a.a)?;
    let (e, _) = ensemble(&a.ensemble, q.max(2))?;
    let rep = sign_change_experiment(&e, a.a)?;
    Ok(Outcome::new(&rep)?
        .check("event_matches_sign", rep.event_matches_sign)
        .check("within_bound", rep.within_bound)
        .check("within_h_bound", rep.within_h_bound)
        .check("diagnostic_holds", rep.diagnostic_holds))
}

pub fn verify_minorant(a: &MinorantArgs) -> Result<Outcome, CliError> {
    let y = a.poly.build()?;
    let rep = sato_tate::verify_minorant(&y, Target::Sign, a.grid);
    let table = Table {
        headers: ["x", "Y", "sgn"].map(String::from).to_vec(),
        rows: minorant_graph(&y, Target::Sign, a.graph_points)
            .into_iter()
            .map(|(x, v, s)| vec![num(x), num(v), num(s)])
            .collect(),
    };
    let mut out = Outcome::new(&rep)?
        .check("minorizes", rep.minorizes)
        .check("beta0_above_minus_one", rep.beta0_above_minus_one)
        .check("detects_event", rep.detects_event)
        .with_table(table);
    insert(&mut out, "json", json!(y.to_json_string()));
    Ok(out)
}
