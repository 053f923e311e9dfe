//! Independent reference implementations used by the integration tests.
//! Deliberately naive: no shared code with the library beyond input types.

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Squared-hinge SVM objective written straight from its definition.
/// `u = [w; b]`, bias regularized.
pub struct SvmOracle {
    pub pos: Vec<Vec<f64>>,
    pub neg: Vec<Vec<f64>>,
    pub c: f64,
}

impl SvmOracle {
    fn terms(&self) -> impl Iterator<Item = (&Vec<f64>, f64, f64)> {
        let total = (self.pos.len() + self.neg.len()) as f64;
        let cp = self.c * total / self.pos.len() as f64;
        let cn = self.c * total / self.neg.len() as f64;
        self.pos
            .iter()
            .map(move |x| (x, 1.0, cp))
            .chain(self.neg.iter().map(move |x| (x, -1.0, cn)))
    }

    fn margin(u: &[f64], x: &[f64]) -> f64 {
        let d = x.len();
        (0..d).map(|k| u[k] * x[k]).sum::<f64>() + u[d]
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        let mut f = 0.5 * u.iter().map(|v| v * v).sum::<f64>();
        for (x, y, c) in self.terms() {
            let slack = 1.0 - y * Self::margin(u, x);
            if slack > 0.0 {
                f += c * slack * slack;
            }
        }
        f
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = u.to_vec();
        for (x, y, c) in self.terms() {
            let slack = 1.0 - y * Self::margin(u, x);
            if slack > 0.0 {
                let s = -2.0 * c * slack * y;
                for k in 0..x.len() {
                    g[k] += s * x[k];
                }
                g[x.len()] += s;
            }
        }
        g
    }

    /// Plain gradient descent with Armijo backtracking from zero. The
    /// objective is 1-strongly convex, so `f − f* ≤ ‖∇f‖² / 2`; iteration
    /// stops once that bound is below `gap_tol · f` or progress stalls.
    /// Returns the point and its certified gap bound.
    pub fn gradient_descent(&self, gap_tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
        let dim = self.pos.first().or(self.neg.first()).unwrap().len() + 1;
        let mut u = vec![0.0; dim];
        let mut f = self.objective(&u);
        let mut step = 1.0;
        let mut gap = f64::INFINITY;
        for _ in 0..max_iter {
            let g = self.gradient(&u);
            let gg: f64 = g.iter().map(|v| v * v).sum();
            gap = 0.5 * gg;
            if gap <= gap_tol * f {
                break;
            }
            step *= 2.0;
            let mut moved = false;
            while step > 1e-300 {
                let cand: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                let fc = self.objective(&cand);
                if fc < f && fc <= f - 0.5 * step * gg {
                    u = cand;
                    f = fc;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (u, gap)
    }
}

/// `(a, b, height, size)` per merge, recomputing every average linkage from
/// the original matrix. Cluster ids follow the leaves-then-merges numbering;
/// ties go to the smallest `(min id, max id)`.
pub fn naive_average_linkage(d: &[Vec<f64>]) -> Vec<(usize, usize, f64, usize)> {
    let n = d.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for p in 0..clusters.len() {
            for q in p + 1..clusters.len() {
                let (ip, mp) = &clusters[p];
                let (iq, mq) = &clusters[q];
                let mut sum = 0.0;
                for &a in mp {
                    for &b in mq {
                        sum += d[a][b];
                    }
                }
                let avg = sum / (mp.len() * mq.len()) as f64;
                let (lo, hi) = ((*ip).min(*iq), (*ip).max(*iq));
                let better = match best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => (avg, lo, hi) < (bd, blo, bhi),
                };
                if better {
                    best = Some((avg, lo, hi, p, q));
                }
            }
        }
        let (h, lo, hi, p, q) = best.unwrap();
        let mut merged = clusters[p].1.clone();
        merged.extend(&clusters[q].1);
        clusters.remove(q);
        clusters.remove(p);
        out.push((lo, hi, h, merged.len()));
        clusters.push((n + step, merged));
    }
    out
}

/// Pairwise precision and recall by enumerating every pair.
pub fn brute_precision_recall(assignment: &[usize], labels: &[i64]) -> (f64, f64) {
    let (mut sc, mut sl, mut both) = (0u64, 0u64, 0u64);
    for i in 0..assignment.len() {
        for j in i + 1..assignment.len() {
            let c = assignment[i] == assignment[j];
            let l = labels[i] == labels[j];
            sc += u64::from(c);
            sl += u64::from(l);
            both += u64::from(c && l);
        }
    }
    let p = if sc == 0 { 1.0 } else { both as f64 / sc as f64 };
    let r = if sl == 0 { 1.0 } else { both as f64 / sl as f64 };
    (p, r)
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: i64) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

pub fn pahc_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pahc"))
}

pub fn run(args: &[&str]) -> Output {
    pahc_bin().args(args).output().expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}
