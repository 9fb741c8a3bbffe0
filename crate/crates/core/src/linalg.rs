//! Top eigenvalue of a symmetric positive semidefinite operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const POWER_TOLERANCE: f64 = 1e-8;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

/// Vectors iterated together. Nearly equal top eigenvalues are common for
/// Gram matrices; the block makes the rate `λ_{b+1}/λ_1` instead of
/// `λ_2/λ_1`.
const BLOCK: usize = 8;

/// Largest eigenvalue and a unit eigenvector, by block power iteration
/// with Rayleigh–Ritz extraction.
///
/// Stops once the residual `‖Av - λv‖` of the top Ritz pair falls below
/// `tol · λ`. Start vectors come from a fixed seed, so results are
/// reproducible.
pub fn top_eigenpair<F>(dim: usize, matvec: F, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Ok((0.0, Vec::new()));
    }
    let b = dim.min(BLOCK);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Vec<f64>> = (0..b).map(|_| random_vec(&mut rng, dim)).collect();
    orthonormalize(&mut v, &mut rng);
    let mut w = vec![vec![0.0; dim]; b];
    for _ in 0..max_iter {
        for (vi, wi) in v.iter().zip(w.iter_mut()) {
            matvec(vi, wi);
        }
        let h: Vec<f64> = (0..b * b).map(|k| dot(&v[k / b], &w[k % b])).collect();
        let (evals, evecs) = jacobi_eigen(h, b);
        let top = (0..b).max_by(|&i, &j| evals[i].total_cmp(&evals[j])).unwrap();
        let lambda = evals[top];
        let combine = |basis: &[Vec<f64>]| -> Vec<f64> {
            (0..dim)
                .map(|r| (0..b).map(|j| evecs[j * b + top] * basis[j][r]).sum())
                .collect()
        };
        let (x, ax) = (combine(&v), combine(&w));
        let residual = ax
            .iter()
            .zip(&x)
            .map(|(a, c)| (a - lambda * c).powi(2))
            .sum::<f64>()
            .sqrt();
        if lambda <= 0.0 && residual == 0.0 {
            return Ok((0.0, x));
        }
        if residual <= tol * lambda.abs() {
            let mut x = x;
            normalize(&mut x);
            return Ok((lambda, x));
        }
        std::mem::swap(&mut v, &mut w);
        orthonormalize(&mut v, &mut rng);
    }
    Err(Error::NotConverged(max_iter))
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Modified Gram–Schmidt, twice for stability; a vector that collapses
/// (the operator has small rank) is replaced by a fresh random one.
fn orthonormalize(vs: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let dim = vs[0].len();
    for i in 0..vs.len() {
        for _attempt in 0..8 {
            let before = dot(&vs[i], &vs[i]).sqrt();
            for _ in 0..2 {
                for j in 0..i {
                    let c = dot(&vs[i], &vs[j]);
                    let (head, tail) = vs.split_at_mut(i);
                    tail[0].iter_mut().zip(&head[j]).for_each(|(a, b)| *a -= c * b);
                }
            }
            let after = dot(&vs[i], &vs[i]).sqrt();
            if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 0.0 {
                normalize(&mut vs[i]);
                break;
            }
            vs[i] = random_vec(rng, dim);
        }
    }
}

/// Eigenvalues and column eigenvectors (row-major `n × n`) of a small
/// symmetric matrix, by cyclic Jacobi rotations.
fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    // Symmetrize against rounding in the projected matrix.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Dense row-major symmetric matrix.
pub fn top_eigenvalue_dense(matrix: &[f64], dim: usize) -> Result<f64> {
    assert_eq!(matrix.len(), dim * dim);
    top_eigenpair(
        dim,
        |x, y| {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = dot(&matrix[i * dim..(i + 1) * dim], x);
            }
        },
        POWER_TOLERANCE,
        POWER_MAX_ITERATIONS,
    )
    .map(|(l, _)| l)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn matches_full_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [1, 2, 5, 17, 40] {
            let b: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = DMatrix::from_row_slice(dim, dim, &b);
            let a = &b * b.transpose();
            let want = a.clone().symmetric_eigen().eigenvalues.max();
            let got = top_eigenvalue_dense(a.transpose().as_slice(), dim).unwrap();
            assert!((got / want - 1.0).abs() < 1e-7, "dim={dim}: {got} vs {want}");
        }
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0];
        let (evals, v) = jacobi_eigen(a.clone(), 3);
        let mut sorted = evals.clone();
        sorted.sort_by(f64::total_cmp);
        let r2 = 2f64.sqrt();
        for (got, want) in sorted.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert!((got - want).abs() < 1e-12);
        }
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i * 3 + j] * v[j * 3 + k]).sum();
                assert!((av - evals[k] * v[i * 3 + k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clustered_top_eigenvalues_converge() {
        // Gap 1e-4 at the top: single-vector iteration would need ~10^5 steps.
        let dim = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = DMatrix::from_row_slice(dim, dim, &b).qr().q();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| match i {
            0 => 10.0,
            1 => 9.999,
            2 => 9.998,
            _ => 5.0 / (i as f64),
        }));
        let a = &q * d * q.transpose();
        let got = top_eigenvalue_dense(a.transpose().as_slice(), dim).unwrap();
        assert!((got - 10.0).abs() < 1e-7, "{got}");
    }

    #[test]
    fn low_rank_operator() {
        let dim = 20;
        let u: Vec<f64> = (0..dim).map(|i| i as f64 + 1.0).collect();
        let a: Vec<f64> = (0..dim * dim).map(|k| u[k / dim] * u[k % dim]).collect();
        let want = dot(&u, &u);
        assert!((top_eigenvalue_dense(&a, dim).unwrap() / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_and_identity() {
        assert_eq!(top_eigenvalue_dense(&[0.0; 4], 2).unwrap(), 0.0);
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert!((top_eigenvalue_dense(&id, 3).unwrap() - 1.0).abs() < 1e-12);
    }
}
