//! Cross-module runs: amplifier, dual sieve and sifted count for residue
//! classes; ensemble, event and bound for eigenvalue systems.

use std::collections::BTreeMap;
use std::io::Cursor;

use largesieve::harmonic::{amplifier_family, gram_extreme};
use largesieve::modform::{
    cor2_bound, load_ensemble, load_ensemble_reader, sign_change_experiment, synthetic_ensemble, Ensemble, Form,
    LocalPolys,
};
use largesieve::residue::{optimal_weights, sieve_bounds, sift_bruteforce, OmegaSystem};
use largesieve::{ExactMinorantPoly, ExactSieveBoundReport, Rational, Scalar};
use proptest::prelude::*;

/// `|S| H² <= Σ_{n<=N} |A(n)|² <= ‖Gram‖ Σ|β|² <= Δ H`.
fn amplifier_chain(omega: &OmegaSystem, n: u64) {
    let weights = optimal_weights::<Rational>(omega);
    let family = amplifier_family(omega, &weights).unwrap();
    let rep: ExactSieveBoundReport = sieve_bounds(omega, n, None);
    let h = Scalar::to_f64(&rep.h);
    let sifted = sift_bruteforce(omega, n);
    for &m in &sifted {
        let v = family.evaluate(m as i64);
        assert!(
            (v.re - h).abs() < 1e-8 * h.max(1.0) && v.im.abs() < 1e-8 * h.max(1.0),
            "n={m}: {v}"
        );
    }
    let energy: f64 = (1..=n as i64).map(|m| family.evaluate(m).norm_sqr()).sum();
    let norm = family.norm_sqr();
    assert!((norm - h).abs() < 1e-8 * h.max(1.0));
    let gram = gram_extreme(n, omega.bound()).unwrap();
    let tol = 1e-7 * energy.max(1.0);
    assert!(sifted.len() as f64 * h * h <= energy + tol);
    assert!(energy <= gram * norm + tol);
    assert!(gram <= Scalar::to_f64(&rep.delta) + 1e-6);
}

#[test]
fn amplifier_chain_for_presets() {
    amplifier_chain(&OmegaSystem::zero(3).unwrap(), 30);
    amplifier_chain(&OmegaSystem::squares(11).unwrap(), 150);
    amplifier_chain(&OmegaSystem::random(12, 9).unwrap(), 200);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn amplifier_chain_for_random_systems(q in 2u64..14, n in 10u64..250, seed in any::<u64>()) {
        amplifier_chain(&OmegaSystem::random(q, seed).unwrap(), n);
    }

    #[test]
    fn omega_json_round_trip(q in 1u64..60, seed in any::<u64>()) {
        let omega = OmegaSystem::random(q, seed).unwrap();
        let back = OmegaSystem::from_json_str(&omega.to_json_string()).unwrap();
        prop_assert_eq!(back, omega);
    }
}

/// Weighted share of forms with `λ(p) <= 0` for every prime `p <= q`.
fn direct_sign_probability(ens: &Ensemble, q: u64) -> f64 {
    let hit: f64 = ens
        .forms()
        .iter()
        .filter(|f| f.local().iter().filter(|(p, _)| *p <= q).all(|(_, l)| l <= 0.0))
        .map(Form::weight)
        .sum();
    hit / ens.total_mass()
}

#[test]
fn cor2_event_matches_a_direct_count() {
    let ens = synthetic_ensemble(3000, 13, 1_000_003, 21).unwrap();
    let ys = LocalPolys::uniform(13, ens.level_q(), &ExactMinorantPoly::default_sign());
    let rep = cor2_bound(&ens, &ys, 100).unwrap();
    let direct = direct_sign_probability(&ens, 13);
    assert!((rep.probability_normalized - direct).abs() < 1e-12);
    assert!(rep.chain_holds);
    assert!(rep.probability_normalized * Scalar::to_f64(&rep.b1).powi(2) <= rep.amp_second_moment * (1.0 + 1e-12));
}

#[test]
fn sign_change_on_a_small_level() {
    let ens = synthetic_ensemble(2000, 40, 10_007, 3).unwrap();
    let rep = sign_change_experiment(&ens, 1.5).unwrap();
    assert_eq!(rep.q, (10_007f64).ln().powf(1.5).floor() as u64);
    assert!(rep.event_matches_sign);
    assert!((rep.sieve.probability_normalized - direct_sign_probability(&ens, rep.q)).abs() < 1e-12);
}

#[test]
fn ensemble_csv_round_trip_preserves_statistics() {
    let ens = synthetic_ensemble(400, 30, 1_000_003, 8).unwrap();
    let mut buf = Vec::new();
    ens.write_csv(&mut buf).unwrap();
    let back = load_ensemble_reader(Cursor::new(&buf), 30, 1_000_003, "copy").unwrap();
    assert_eq!(back.len(), ens.len());
    for (a, b) in ens.forms().iter().zip(back.forms()) {
        assert_eq!(a.id(), b.id());
        assert_eq!(a.weight(), b.weight());
        assert_eq!(a.local(), b.local());
    }
    let ys = LocalPolys::uniform(30, ens.level_q(), &ExactMinorantPoly::default_sign());
    let (r1, r2) = (cor2_bound(&ens, &ys, 50).unwrap(), cor2_bound(&back, &ys, 50).unwrap());
    assert_eq!(r1.event_count, r2.event_count);
    assert_eq!(r1.amp_second_moment, r2.amp_second_moment);

    // A tighter prime bound drops the larger primes on load.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("forms.csv");
    std::fs::write(&path, &buf).unwrap();
    let small = load_ensemble(&path, 7, 1_000_003).unwrap();
    let primes: Vec<u64> = small.forms()[0].local().iter().map(|(p, _)| p).collect();
    assert_eq!(primes, [2, 3, 5, 7]);
}

#[test]
fn hand_built_ensemble() {
    let form = |id: &str, l2: f64, l3: f64| Form::new(id, 1.0, BTreeMap::from([(2, l2), (3, l3)])).unwrap();
    let ens = Ensemble::new(
        "four",
        101,
        3,
        vec![
            form("a", -1.0, -0.5),
            form("b", 0.0, 1.0),
            form("c", 1.5, -2.0),
            form("d", -2.0, 0.0),
        ],
    )
    .unwrap();
    let ys = LocalPolys::uniform(3, 101, &ExactMinorantPoly::default_sign());
    let rep = cor2_bound(&ens, &ys, 6).unwrap();
    assert_eq!(rep.event_count, 2);
    assert!((rep.probability_normalized - 0.5).abs() < 1e-15);
}
