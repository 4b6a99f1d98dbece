//! Irreducibility, period and stationary distribution.

use std::collections::VecDeque;
use std::hash::Hash;

use serde::Serialize;

use crate::chain::kernel::SparseKernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Stationary {
    pub pi: Vec<f64>,
    /// `max |pi P - pi|`
    pub residual: f64,
    pub iterations: usize,
}

impl Stationary {
    /// `1 / pi_j`, the mean return time for a positive recurrent state.
    pub fn mean_return_time(&self, j: usize) -> f64 {
        1.0 / self.pi[j]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainDiagnostics {
    pub states: usize,
    pub transitions: usize,
    pub absorbing: usize,
    /// Every non-absorbing state reaches every other one.
    pub irreducible: bool,
    /// Period of the class containing state 0.
    pub period: u64,
    pub stationary: Option<Stationary>,
}

fn left_multiply<S: Clone + Eq + Hash>(k: &SparseKernel<S>, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        if k.is_absorbing(i) {
            out[i] += vi;
            continue;
        }
        for (j, p) in k.row(i) {
            out[j] += vi * p;
        }
    }
}

/// Power iteration for `pi P = pi`. Periodic chains are handled by iterating
/// the lazy chain `(I + P) / 2`, which has the same stationary vector.
pub fn stationary<S: Clone + Eq + Hash>(kernel: &SparseKernel<S>, tol: f64, max_iter: usize) -> Result<Stationary> {
    let n = kernel.len();
    if n == 0 {
        return Err(Error::InvalidConfig("empty chain".into()));
    }
    let lazy = period_from(kernel, 0) != 1;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut step = vec![0.0; n];
    for it in 1..=max_iter {
        left_multiply(kernel, &pi, &mut step);
        if lazy {
            for i in 0..n {
                next[i] = 0.5 * (pi[i] + step[i]);
            }
        } else {
            next.copy_from_slice(&step);
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let delta = next
            .iter()
            .zip(&pi)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut pi, &mut next);
        if delta < tol * 1e-2 || it == max_iter {
            left_multiply(kernel, &pi, &mut step);
            let residual = step
                .iter()
                .zip(&pi)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if residual <= tol {
                return Ok(Stationary {
                    pi,
                    residual,
                    iterations: it,
                });
            }
            if it == max_iter {
                return Err(Error::Solver(format!(
                    "power iteration stalled at residual {residual:e}"
                )));
            }
        }
    }
    unreachable!()
}

/// Period of the communicating class of `from`: gcd over in-class edges of
/// `level(u) + 1 - level(v)` for BFS levels.
pub fn period_from<S: Clone + Eq + Hash>(kernel: &SparseKernel<S>, from: usize) -> u64 {
    let fwd = {
        let mut r = kernel.reachable_from(from);
        r[from] = true;
        r
    };
    let mut target = vec![false; kernel.len()];
    target[from] = true;
    let back = kernel.can_reach(&target, |_| true);
    let in_class: Vec<bool> = fwd.iter().zip(&back).map(|(a, b)| *a && *b).collect();
    let mut level = vec![u64::MAX; kernel.len()];
    level[from] = 0;
    let mut queue = VecDeque::from([from]);
    let mut g = 0u64;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in kernel.weights(u) {
            if !in_class[v] {
                continue;
            }
            if level[v] == u64::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let d = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, d);
            }
        }
    }
    g
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

pub fn is_irreducible<S: Clone + Eq + Hash>(kernel: &SparseKernel<S>) -> bool {
    let live: Vec<usize> = (0..kernel.len()).filter(|&i| !kernel.is_absorbing(i)).collect();
    let Some(&first) = live.first() else {
        return false;
    };
    let fwd = kernel.reachable_from(first);
    let mut target = vec![false; kernel.len()];
    target[first] = true;
    let back = kernel.can_reach(&target, |i| !kernel.is_absorbing(i));
    live.iter().all(|&i| fwd[i] && back[i])
}

/// Structural checks, plus the stationary vector when the chain has no
/// absorbing states and is irreducible.
pub fn diagnostics<S: Clone + Eq + Hash>(kernel: &SparseKernel<S>) -> Result<ChainDiagnostics> {
    let irreducible = is_irreducible(kernel);
    let absorbing = kernel.absorbing_states().count();
    let stationary = if irreducible && absorbing == 0 {
        Some(stationary(kernel, 1e-12, 1_000_000)?)
    } else {
        None
    };
    Ok(ChainDiagnostics {
        states: kernel.len(),
        transitions: kernel.nnz(),
        absorbing,
        irreducible,
        period: if kernel.is_empty() { 0 } else { period_from(kernel, 0) },
        stationary,
    })
}
