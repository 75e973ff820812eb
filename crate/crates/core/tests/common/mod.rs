#![allow(dead_code)]

use clare::{DataMatrix, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `mean + scores · factorsᵀ` with Gaussian scores and factors, no noise.
pub fn low_rank(n: usize, t: usize, rank: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let scores: Vec<f64> = (0..n * rank).map(|_| normal(&mut r)).collect();
    let factors: Vec<f64> = (0..t * rank).map(|_| normal(&mut r)).collect();
    let mean: Vec<f64> = (0..t).map(|j| (j as f64 / 7.0).sin()).collect();
    let values = (0..n * t)
        .map(|idx| {
            let (i, j) = (idx / t, idx % t);
            mean[j] + (0..rank).map(|a| scores[i * rank + a] * factors[j * rank + a]).sum::<f64>()
        })
        .collect();
    DataMatrix::from_rows(values, n, Grid::one_d(t).unwrap()).unwrap()
}

pub fn uniform_matrix(n: usize, t: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let values = (0..n * t).map(|_| r.gen_range(-1.0..1.0)).collect();
    DataMatrix::from_rows(values, n, Grid::one_d(t).unwrap()).unwrap()
}

/// Cyclic Jacobi eigendecomposition of a symmetric `n × n` row-major
/// matrix. Returns eigenvalues (descending) and eigenvectors as columns of
/// a row-major matrix.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance (divisor N) of the rows.
pub fn covariance(data: &DataMatrix) -> Vec<f64> {
    let (n, t) = (data.n(), data.t());
    let mean: Vec<f64> = (0..t)
        .map(|j| data.rows().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![0.0; t * t];
    for r in data.rows() {
        for a in 0..t {
            for b in 0..t {
                cov[a * t + b] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    cov.iter().map(|c| c / n as f64).collect()
}

/// Double-loop relative energy scree, summing in index order.
pub fn brute_scree(c: &[f64], n: usize, len: usize) -> Vec<f64> {
    let mut scree = vec![0.0; len];
    for i in 0..n {
        let row = &c[i * len..(i + 1) * len];
        let mut total = 0.0;
        for v in row {
            total += v * v;
        }
        for k in 0..len {
            let mut s = 0.0;
            for kp in 0..len {
                if row[kp].abs() >= row[k].abs() {
                    s += row[kp] * row[kp];
                }
            }
            scree[k] += s / total;
        }
    }
    scree.iter().map(|s| s / n as f64).collect()
}

/// Textbook Pearson 1 - r², with the constant convention.
pub fn naive_sq_corr(x: &[f64], y: &[f64]) -> f64 {
    let t = x.len() as f64;
    let mx = x.iter().sum::<f64>() / t;
    let my = y.iter().sum::<f64>() / t;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        1.0
    } else {
        1.0 - cov * cov / (vx * vy)
    }
}
