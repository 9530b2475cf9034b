//! Random instances and brute-force oracles shared by the test targets.
#![allow(dead_code)]

use fwtopic::model::{Corpus, Document, Vocabulary};
use fwtopic::objective::Objective;
use fwtopic::TopicMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rows with entries drawn from `U(0.05, 1)` and normalized.
pub fn positive_topics(rng: &mut ChaCha8Rng, k: usize, v: usize) -> TopicMatrix {
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let row: Vec<f64> = (0..v).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();
    TopicMatrix::from_weights(k, v, rows.concat()).unwrap()
}

/// Each term present with probability `density`, counts in `1..=max_count`.
pub fn random_document(rng: &mut ChaCha8Rng, v: usize, density: f64, max_count: u32) -> Document {
    let mut entries = Vec::new();
    for j in 0..v {
        if rng.random::<f64>() < density {
            entries.push((j, rng.random_range(1..=max_count) as f64));
        }
    }
    if entries.is_empty() {
        entries.push((rng.random_range(0..v), 1.0));
    }
    Document::new(entries).unwrap()
}

pub fn flat_dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

/// Half a flat Dirichlet draw, half the barycenter: every coordinate >= 1/(2K).
pub fn interior_point(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    flat_dirichlet(rng, k)
        .into_iter()
        .map(|x| 0.5 * x + 0.5 / k as f64)
        .collect()
}

/// `A A^T + 0.1 I` with `A` uniform on `[-1, 1]`.
pub fn random_spd(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(k, k) * 0.1
}

/// `A A^T + 0.1 I` with `A` uniform on `[0, 1]`, so every entry is nonnegative.
pub fn nonnegative_spd(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(0.0..1.0));
    &a * a.transpose() + DMatrix::identity(k, k) * 0.1
}

/// Central differences with step `h * max(1, |theta_k|)`.
pub fn fd_gradient(f: &dyn Objective, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|k| {
            let step = h * theta[k].abs().max(1.0);
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[k] += step;
            down[k] -= step;
            (f.value(&up).unwrap() - f.value(&down).unwrap()) / (2.0 * step)
        })
        .collect()
}

/// Frank-Wolfe duality gap over the simplex: `max_k g_k - g . theta`.
/// For concave `f` it bounds `max f - f(theta)` from above.
pub fn simplex_gap(f: &dyn Objective, theta: &[f64]) -> f64 {
    let mut g = vec![0.0; theta.len()];
    f.gradient(theta, &mut g).unwrap();
    let best = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best - g.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()
}

/// Largest value of `f` on `{n / steps : n in N^K, sum n = steps}`.
pub fn grid_max(f: &dyn Objective, k: usize, steps: usize) -> f64 {
    fn walk(f: &dyn Objective, theta: &mut Vec<f64>, pos: usize, left: usize, steps: usize, best: &mut f64) {
        let k = theta.len();
        if pos == k - 1 {
            theta[pos] = left as f64 / steps as f64;
            let v = f.value(theta).unwrap_or(f64::NEG_INFINITY);
            if v > *best {
                *best = v;
            }
            return;
        }
        for n in 0..=left {
            theta[pos] = n as f64 / steps as f64;
            walk(f, theta, pos + 1, left - n, steps, best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    walk(f, &mut vec![0.0; k], 0, steps, steps, &mut best);
    best
}

/// `max c.x` over `{x : sum x = 1, 0 <= x <= u}` by enumerating vertices:
/// all coordinates but one sit at a bound, the free one closes the sum.
pub fn capped_lp_brute_force(c: &[f64], u: &[f64]) -> f64 {
    let k = c.len();
    let mut best = f64::NEG_INFINITY;
    for free in 0..k {
        for mask in 0u32..(1 << (k - 1)) {
            let mut x = vec![0.0; k];
            for (bit, i) in (0..k).filter(|&i| i != free).enumerate() {
                if mask >> bit & 1 == 1 {
                    x[i] = u[i];
                }
            }
            let rest = 1.0 - x.iter().sum::<f64>();
            if rest < -1e-12 || rest > u[free] + 1e-12 {
                continue;
            }
            x[free] = rest.clamp(0.0, u[free]);
            best = best.max(c.iter().zip(&x).map(|(a, b)| a * b).sum());
        }
    }
    best
}

/// Two topics over disjoint halves of the vocabulary; each document is drawn
/// from exactly one of them. Returns the corpus and each document's cluster.
pub fn two_cluster_corpus(rng: &mut ChaCha8Rng, vocab: usize, docs: usize, len: usize) -> (Corpus, Vec<usize>) {
    let half = vocab / 2;
    let mut documents = Vec::with_capacity(docs);
    let mut labels = Vec::with_capacity(docs);
    for d in 0..docs {
        let cluster = d % 2;
        let mut counts = vec![0.0; vocab];
        for _ in 0..len {
            counts[cluster * half + rng.random_range(0..half)] += 1.0;
        }
        let entries = counts.into_iter().enumerate().filter(|(_, c)| *c > 0.0).collect();
        documents.push(Document::new(entries).unwrap());
        labels.push(cluster);
    }
    (Corpus::new(Vocabulary::anonymous(vocab).unwrap(), documents).unwrap(), labels)
}

/// Best grid point (step `1/steps`) within `radius` grid steps of `center`
/// in every free coordinate; a lower bound on [`grid_max`].
pub fn local_grid_max(f: &dyn Objective, center: &[f64], steps: usize, radius: i64) -> f64 {
    let k = center.len();
    let base: Vec<i64> = center.iter().map(|x| (x * steps as f64).round() as i64).collect();
    let mut offset = vec![-radius; k - 1];
    let mut best = f64::NEG_INFINITY;
    let mut theta = vec![0.0; k];
    loop {
        let mut used = 0i64;
        let mut ok = true;
        for i in 0..k - 1 {
            let n = base[i] + offset[i];
            ok &= n >= 0;
            used += n;
            theta[i] = n as f64 / steps as f64;
        }
        let last = steps as i64 - used;
        if ok && last >= 0 {
            theta[k - 1] = last as f64 / steps as f64;
            best = best.max(f.value(&theta).unwrap_or(f64::NEG_INFINITY));
        }
        let mut i = 0;
        while i < k - 1 && offset[i] == radius {
            offset[i] = -radius;
            i += 1;
        }
        if i == k - 1 {
            return best;
        }
        offset[i] += 1;
    }
}
