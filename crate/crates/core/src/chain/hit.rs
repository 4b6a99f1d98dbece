//! Hitting probabilities and return times.

use std::fmt::Debug;
use std::hash::Hash;

use crate::chain::kernel::SparseKernel;
use crate::chain::solve::{solve_first_passage, DEFAULT_TOL};
use crate::error::{Error, Result};

/// Probability of reaching `target` before `avoid` from `start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HitQuery<S> {
    pub start: S,
    pub target: Vec<S>,
    pub avoid: Vec<S>,
    /// Ignore set membership of the start at time 0, so the chain must
    /// take at least one step.
    pub first_step_exempt: bool,
}

impl<S> HitQuery<S> {
    pub fn new(start: S, target: Vec<S>, avoid: Vec<S>) -> Self {
        Self {
            start,
            target,
            avoid,
            first_step_exempt: false,
        }
    }

    pub fn exempt(mut self) -> Self {
        self.first_step_exempt = true;
        self
    }
}

fn marks<S: Clone + Eq + Hash + Debug>(
    kernel: &SparseKernel<S>,
    target: &[usize],
    avoid: &[usize],
) -> Result<Vec<Option<f64>>> {
    let mut fixed = vec![None; kernel.len()];
    for &t in target {
        fixed[t] = Some(1.0);
    }
    for &a in avoid {
        if fixed[a].is_some() {
            return Err(Error::InvalidConfig("target and avoid sets overlap".into()));
        }
        fixed[a] = Some(0.0);
    }
    Ok(fixed)
}

/// Like [`hit_prob`] but with the sets given as kernel indices.
pub fn hit_prob_indexed<S: Clone + Eq + Hash + Debug>(
    kernel: &SparseKernel<S>,
    start: usize,
    target: &[usize],
    avoid: &[usize],
    first_step_exempt: bool,
) -> Result<f64> {
    let fixed = marks(kernel, target, avoid)?;
    if !first_step_exempt {
        if let Some(v) = fixed[start] {
            return Ok(v);
        }
    }
    let boundary: Vec<bool> = fixed.iter().map(Option::is_some).collect();
    let reach = kernel.can_reach(&boundary, |_| true);
    let reachable = if first_step_exempt {
        kernel.weights(start).iter().any(|&(j, _)| reach[j])
    } else {
        reach[start]
    };
    if !reachable {
        return Err(Error::Undefined(
            "neither target nor avoid set is reachable from the start".into(),
        ));
    }
    let h = solve_first_passage(kernel, &fixed, 0.0, DEFAULT_TOL)?;
    if first_step_exempt {
        Ok(kernel.row(start).map(|(j, p)| p * h.values[j]).sum())
    } else {
        Ok(h.values[start])
    }
}

pub fn hit_prob<S: Clone + Eq + Hash + Debug>(kernel: &SparseKernel<S>, q: &HitQuery<S>) -> Result<f64> {
    let start = kernel.require(&q.start)?;
    let target = q.target.iter().map(|s| kernel.require(s)).collect::<Result<Vec<_>>>()?;
    let avoid = q.avoid.iter().map(|s| kernel.require(s)).collect::<Result<Vec<_>>>()?;
    hit_prob_indexed(kernel, start, &target, &avoid, q.first_step_exempt)
}

/// Expected number of steps to come back to `state`, end states flowing
/// through like any other.
pub fn mean_return_time<S: Clone + Eq + Hash + Debug>(kernel: &SparseKernel<S>, state: &S) -> Result<f64> {
    let s = kernel.require(state)?;
    if kernel.is_absorbing(s) {
        return Ok(1.0);
    }
    let mut fixed = vec![None; kernel.len()];
    fixed[s] = Some(0.0);
    let t = solve_first_passage(kernel, &fixed, 1.0, DEFAULT_TOL)?;
    let mu = 1.0 + kernel.row(s).map(|(j, p)| p * t.values[j]).sum::<f64>();
    if !mu.is_finite() {
        return Err(Error::Undefined("state is transient; return time is infinite".into()));
    }
    Ok(mu)
}
