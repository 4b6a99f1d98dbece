use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use crate::error::{Error, Result};

/// Row-sparse stochastic matrix over an interned state space.
///
/// Probabilities are stored as integer weights over a common denominator
/// (a power of four for every chain built here), so the float view is exact
/// and the rational solver can work from the same data.
#[derive(Debug, Clone)]
pub struct SparseKernel<S> {
    states: Vec<S>,
    index: HashMap<S, usize>,
    rows: Vec<Vec<(usize, u64)>>,
    absorbing: Vec<bool>,
    denom: u64,
}

impl<S: Clone + Eq + Hash> SparseKernel<S> {
    /// Breadth-first construction from `starts`. `step` returns the weighted
    /// successors of a state, or `None` for an absorbing state.
    pub fn explore(
        starts: impl IntoIterator<Item = S>,
        denom: u64,
        mut step: impl FnMut(&S) -> Option<Vec<(S, u64)>>,
    ) -> Result<Self> {
        let mut k = Self {
            states: Vec::new(),
            index: HashMap::new(),
            rows: Vec::new(),
            absorbing: Vec::new(),
            denom,
        };
        let mut queue = VecDeque::new();
        for s in starts {
            let (i, fresh) = k.intern(s);
            if fresh {
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let s = k.states[i].clone();
            match step(&s) {
                None => k.absorbing[i] = true,
                Some(succ) => {
                    let mut row: Vec<(usize, u64)> = Vec::with_capacity(succ.len());
                    for (t, w) in succ {
                        if w == 0 {
                            continue;
                        }
                        let (j, fresh) = k.intern(t);
                        if fresh {
                            queue.push_back(j);
                        }
                        match row.iter_mut().find(|(c, _)| *c == j) {
                            Some(e) => e.1 += w,
                            None => row.push((j, w)),
                        }
                    }
                    row.sort_unstable_by_key(|e| e.0);
                    k.rows[i] = row;
                }
            }
        }
        k.check_stochastic()?;
        Ok(k)
    }

    fn intern(&mut self, s: S) -> (usize, bool) {
        if let Some(&i) = self.index.get(&s) {
            return (i, false);
        }
        let i = self.states.len();
        self.index.insert(s.clone(), i);
        self.states.push(s);
        self.rows.push(Vec::new());
        self.absorbing.push(false);
        (i, true)
    }

    pub fn check_stochastic(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if self.absorbing[i] {
                if !row.is_empty() {
                    return Err(Error::Validation(format!("absorbing state {i} has successors")));
                }
                continue;
            }
            let total: u64 = row.iter().map(|e| e.1).sum();
            if total != self.denom || row.iter().any(|e| e.1 == 0) {
                return Err(Error::Validation(format!(
                    "row {i} sums to {total}/{}",
                    self.denom
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &S {
        &self.states[i]
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn require(&self, s: &S) -> Result<usize>
    where
        S: std::fmt::Debug,
    {
        self.index_of(s)
            .ok_or_else(|| Error::InvalidConfig(format!("state {s:?} is not in the chain")))
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.absorbing[i]
    }

    pub fn absorbing_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.absorbing[i])
    }

    /// `(successor, weight)` pairs; probability is `weight / denom`.
    pub fn weights(&self, i: usize) -> &[(usize, u64)] {
        &self.rows[i]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let d = self.denom as f64;
        self.rows[i].iter().map(move |&(j, w)| (j, w as f64 / d))
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|e| e.0 == j)
            .map_or(0.0, |e| e.1 as f64 / self.denom as f64)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Two-step kernel restricted to states satisfying `keep`, which must be
    /// closed under two steps.
    pub fn square_on(&self, keep: impl Fn(&S) -> bool) -> Result<SparseKernel<S>> {
        let starts: Vec<S> = self.states.iter().filter(|s| keep(s)).cloned().collect();
        let squared = SparseKernel::explore(starts, self.denom * self.denom, |s| {
            let i = self.index[s];
            if self.absorbing[i] {
                return None;
            }
            let mut out = Vec::new();
            for &(j, w1) in &self.rows[i] {
                if self.absorbing[j] {
                    // Stay absorbed for the second step.
                    out.push((self.states[j].clone(), w1 * self.denom));
                    continue;
                }
                for &(l, w2) in &self.rows[j] {
                    out.push((self.states[l].clone(), w1 * w2));
                }
            }
            Some(out)
        })?;
        if squared.states.iter().any(|s| !keep(s)) {
            return Err(Error::Validation("two-step restriction is not closed".into()));
        }
        Ok(squared)
    }

    /// Largest difference between the kernel and its image under the state
    /// relabeling `map` (which must be a bijection of the state space).
    pub fn relabel_residual(&self, map: impl Fn(&S) -> S) -> Result<f64> {
        let d = self.denom as f64;
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            let mi = self
                .index_of(&map(&self.states[i]))
                .ok_or_else(|| Error::Validation("relabeling leaves the state space".into()))?;
            if self.absorbing[i] != self.absorbing[mi] {
                return Ok(1.0);
            }
            let mut mapped: Vec<(usize, u64)> = Vec::with_capacity(self.rows[i].len());
            for &(j, w) in &self.rows[i] {
                let mj = self
                    .index_of(&map(&self.states[j]))
                    .ok_or_else(|| Error::Validation("relabeling leaves the state space".into()))?;
                mapped.push((mj, w));
            }
            mapped.sort_unstable_by_key(|e| e.0);
            let target = &self.rows[mi];
            let (mut a, mut b) = (0, 0);
            while a < mapped.len() || b < target.len() {
                let diff = match (mapped.get(a), target.get(b)) {
                    (Some(x), Some(y)) if x.0 == y.0 => {
                        a += 1;
                        b += 1;
                        x.1.abs_diff(y.1)
                    }
                    (Some(x), Some(y)) if x.0 < y.0 => {
                        a += 1;
                        x.1
                    }
                    (Some(_), Some(y)) => {
                        b += 1;
                        y.1
                    }
                    (Some(x), None) => {
                        a += 1;
                        x.1
                    }
                    (None, Some(y)) => {
                        b += 1;
                        y.1
                    }
                    (None, None) => unreachable!(),
                };
                worst = worst.max(diff as f64 / d);
            }
        }
        Ok(worst)
    }

    /// States reachable from `from` in one or more steps.
    pub fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = self.rows[from].iter().map(|e| e.0).collect();
        for &j in &queue {
            seen[j] = true;
        }
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.rows[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// States that can reach some state in `targets` (including the targets).
    pub fn can_reach(&self, targets: &[bool], through: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                preds[j].push(i);
            }
        }
        let mut seen = targets.to_vec();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| targets[i]).collect();
        while let Some(j) = queue.pop_front() {
            for &i in &preds[j] {
                if !seen[i] && through(i) {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        seen
    }
}
