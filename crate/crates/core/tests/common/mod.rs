//! Independent oracles for the property and acceptance suites. Nothing here
//! calls into the code paths it checks.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Payoffs drawn from U[-1, 1], indexed by coalition bitmask.
pub fn random_table(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..1usize << n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn index_of(members: &[bool]) -> usize {
    let mut idx = 0;
    let mut place = 1;
    for &m in members {
        if m {
            idx += place;
        }
        place *= 2;
    }
    idx
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Straight double loop over every coalition of the universe, skipping those
/// that contain i or j, with plain summation.
fn naive_interaction(table: &[f64], n: usize, i: usize, j: usize, weight: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    for code in 0..(1usize << n) {
        let members: Vec<bool> = (0..n).map(|k| (code / (1usize << k)) % 2 == 1).collect();
        if members[i] || members[j] {
            continue;
        }
        let size = members.iter().filter(|&&m| m).count();
        let with = |extra: &[usize]| {
            let mut m = members.clone();
            for &e in extra {
                m[e] = true;
            }
            table[index_of(&m)]
        };
        let bracket = with(&[i, j]) + with(&[]) - with(&[i]) - with(&[j]);
        total += weight(size) * bracket;
    }
    total
}

pub fn naive_banzhaf(table: &[f64], n: usize, i: usize, j: usize) -> f64 {
    let p = 1.0 / 2f64.powi(n as i32 - 2);
    naive_interaction(table, n, i, j, |_| p)
}

pub fn naive_shapley(table: &[f64], n: usize, i: usize, j: usize) -> f64 {
    naive_interaction(table, n, i, j, |s| factorial(s) * factorial(n - s - 2) / factorial(n - 1))
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut ua: Vec<usize> = a.to_vec();
    ua.sort_unstable();
    ua.dedup();
    let mut ub: Vec<usize> = b.to_vec();
    ub.sort_unstable();
    ub.dedup();
    let mut sum_ij = 0.0;
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for &x in &ua {
        let na = a.iter().filter(|&&v| v == x).count();
        sum_a += choose2(na as f64);
        for &y in &ub {
            let nij = (0..n).filter(|&k| a[k] == x && b[k] == y).count();
            sum_ij += choose2(nij as f64);
        }
    }
    for &y in &ub {
        sum_b += choose2(b.iter().filter(|&&v| v == y).count() as f64);
    }
    let expected = sum_a * sum_b / choose2(n as f64);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (sum_ij - expected) / (max - expected)
}

/// Two isotropic Gaussian blobs whose means are `separation` apart.
/// Returns the flattened points and the true blob of each point.
pub fn two_blobs(
    rng: &mut ChaCha8Rng,
    per_blob: usize,
    dim: usize,
    sigma: f64,
    separation: f64,
) -> (Vec<f64>, Vec<usize>, [Vec<f64>; 2]) {
    let noise = Normal::new(0.0, sigma).unwrap();
    // random direction for the offset between the blobs
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    dir.iter_mut().for_each(|x| *x /= len);
    let base: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
    let means = [base.clone(), base.iter().zip(&dir).map(|(b, d)| b + separation * d).collect()];
    let mut points = Vec::new();
    let mut truth = Vec::new();
    // interleave so blob membership is not contiguous in index order
    for _ in 0..per_blob {
        for (blob, mean) in means.iter().enumerate() {
            points.extend(mean.iter().map(|m| m + noise.sample(rng)));
            truth.push(blob);
        }
    }
    (points, truth, means)
}

/// Row-softmax of logits/tau followed by mean-over-rows KL(p || q), written
/// out directly.
pub fn kl_of_logits(p: &[Vec<f64>], logits: &[Vec<f64>], tau: f64) -> f64 {
    let mut total = 0.0;
    for (p_row, l_row) in p.iter().zip(logits) {
        let max = l_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = l_row.iter().map(|l| ((l - max) / tau).exp()).sum();
        for (pi, li) in p_row.iter().zip(l_row) {
            if *pi > 0.0 {
                let log_q = (li - max) / tau - z.ln();
                total += pi * (pi.ln() - log_q);
            }
        }
    }
    total / p.len() as f64
}

/// Central finite-difference gradient of [`kl_of_logits`].
pub fn fd_gradient(p: &[Vec<f64>], logits: &[Vec<f64>], tau: f64, h: f64) -> Vec<Vec<f64>> {
    let mut grad = vec![vec![0.0; logits[0].len()]; logits.len()];
    for i in 0..logits.len() {
        for j in 0..logits[0].len() {
            let mut plus = logits.to_vec();
            plus[i][j] += h;
            let mut minus = logits.to_vec();
            minus[i][j] -= h;
            grad[i][j] = (kl_of_logits(p, &plus, tau) - kl_of_logits(p, &minus, tau)) / (2.0 * h);
        }
    }
    grad
}

/// `|a - b| <= tol * max(|a|, |b|, 1)`.
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
