//! First-passage linear systems `x_i = c + sum_j P_ij x_j` over the free
//! states of a kernel, with fixed values on a boundary set.
//!
//! The float path uses Jacobi-preconditioned BiCGSTAB with periodic
//! true-residual checks and falls back to Gauss-Seidel. Convergence means
//! `max |r_i| <= tol * max(1, max |x_i|)`.

use std::hash::Hash;

use crate::chain::kernel::SparseKernel;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BiCgStab,
    GaussSeidel,
    Trivial,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// One value per kernel state; `f64::INFINITY` where an expected time
    /// diverges.
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
}

/// Which states take part in the solve, and how the rest are valued.
pub(crate) struct Layout {
    /// kernel index -> unknown index
    pub local: Vec<Option<usize>>,
    /// unknown index -> kernel index
    pub global: Vec<usize>,
    pub values: Vec<f64>,
}

/// Sorts states into fixed, unknown, and trapped. With a positive cost a
/// state that can reach a trap has an infinite expected time; with zero cost
/// a trap simply never reaches the boundary and scores zero.
pub(crate) fn layout<S: Clone + Eq + Hash>(
    kernel: &SparseKernel<S>,
    fixed: &[Option<f64>],
    cost: f64,
) -> Layout {
    let n = kernel.len();
    assert_eq!(fixed.len(), n);
    let is_fixed: Vec<bool> = fixed.iter().map(Option::is_some).collect();
    let reaches = kernel.can_reach(&is_fixed, |i| !is_fixed[i] && !kernel.is_absorbing(i));
    let mut values = vec![0.0; n];
    let mut trapped = vec![false; n];
    for i in 0..n {
        if let Some(v) = fixed[i] {
            values[i] = v;
        } else if !reaches[i] {
            trapped[i] = true;
        }
    }
    if cost != 0.0 {
        let doomed = kernel.can_reach(&trapped, |i| !is_fixed[i]);
        for i in 0..n {
            if !is_fixed[i] && doomed[i] {
                trapped[i] = true;
                values[i] = f64::INFINITY;
            }
        }
    }
    let mut local = vec![None; n];
    let mut global = Vec::new();
    for i in 0..n {
        if !is_fixed[i] && !trapped[i] {
            local[i] = Some(global.len());
            global.push(i);
        }
    }
    Layout {
        local,
        global,
        values,
    }
}

/// `A = I - Q` on the unknowns in CSR form, with right-hand side.
struct System {
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
}

impl System {
    fn build<S: Clone + Eq + Hash>(kernel: &SparseKernel<S>, lay: &Layout, cost: f64) -> Self {
        let m = lay.global.len();
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        let mut diag = vec![1.0; m];
        let mut rhs = vec![cost; m];
        row_ptr.push(0);
        for (a, &i) in lay.global.iter().enumerate() {
            col.push(a);
            val.push(1.0);
            let diag_pos = val.len() - 1;
            for (j, p) in kernel.row(i) {
                match lay.local[j] {
                    Some(b) if b == a => {
                        val[diag_pos] -= p;
                    }
                    Some(b) => {
                        col.push(b);
                        val.push(-p);
                    }
                    None => rhs[a] += p * lay.values[j],
                }
            }
            diag[a] = val[diag_pos];
            row_ptr.push(val.len());
        }
        Self {
            row_ptr,
            col,
            val,
            diag,
            rhs,
        }
    }

    fn len(&self) -> usize {
        self.rhs.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[p] * x[self.col[p]];
            }
            *o = s;
        }
    }

    fn residual(&self, x: &[f64], r: &mut [f64]) -> f64 {
        self.apply(x, r);
        let mut worst = 0.0f64;
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri = bi - *ri;
            worst = worst.max(ri.abs());
        }
        worst
    }

    fn gauss_seidel_sweep(&self, x: &mut [f64]) {
        for r in 0..self.len() {
            let mut s = self.rhs[r];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[p];
                if c != r {
                    s -= self.val[p] * x[c];
                }
            }
            x[r] = s / self.diag[r];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn converged(res: f64, x: &[f64], tol: f64) -> bool {
    res <= tol * max_abs(x).max(1.0)
}

fn bicgstab(sys: &System, x: &mut [f64], tol: f64, max_iter: usize) -> (f64, usize) {
    let m = sys.len();
    let mut r = vec![0.0; m];
    let mut res = sys.residual(x, &mut r);
    if converged(res, x, tol) {
        return (res, 0);
    }
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut v = vec![0.0; m];
    let mut p = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut s = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut t = vec![0.0; m];
    let mut best = (res, x.to_vec());
    let mut last_gain = 0;
    for it in 1..=max_iter {
        if it - last_gain > 300 {
            break;
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() || omega == 0.0 {
            // Breakdown: restart from the best iterate so far.
            x.copy_from_slice(&best.1);
            sys.residual(x, &mut r);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            if dot(&r_hat, &r) == 0.0 {
                break;
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..m {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] / sys.diag[i];
        }
        sys.apply(&y, &mut v);
        alpha = rho_new / dot(&r_hat, &v);
        for i in 0..m {
            s[i] = r[i] - alpha * v[i];
            z[i] = s[i] / sys.diag[i];
        }
        sys.apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..m {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        if it % 25 == 0 || max_abs(&r) <= tol * max_abs(x).max(1.0) {
            res = sys.residual(x, &mut r);
            if res < best.0 {
                best = (res, x.to_vec());
                last_gain = it;
            }
            if converged(res, x, tol) {
                return (res, it);
            }
            if !res.is_finite() {
                break;
            }
        }
    }
    x.copy_from_slice(&best.1);
    (best.0, max_iter.min(last_gain + 300))
}

fn gauss_seidel(sys: &System, x: &mut [f64], tol: f64, max_sweeps: usize) -> (f64, usize) {
    let mut r = vec![0.0; sys.len()];
    for sweep in 1..=max_sweeps {
        sys.gauss_seidel_sweep(x);
        if sweep % 16 == 0 {
            let res = sys.residual(x, &mut r);
            if converged(res, x, tol) {
                return (res, sweep);
            }
        }
    }
    (sys.residual(x, &mut r), max_sweeps)
}

/// Solves `x_i = cost + sum_j P_ij x_j` on every state without a fixed
/// value.
pub fn solve_first_passage<S: Clone + Eq + Hash>(
    kernel: &SparseKernel<S>,
    fixed: &[Option<f64>],
    cost: f64,
    tol: f64,
) -> Result<Solution> {
    let lay = layout(kernel, fixed, cost);
    let mut values = lay.values.clone();
    if lay.global.is_empty() {
        return Ok(Solution {
            values,
            residual: 0.0,
            iterations: 0,
            method: Method::Trivial,
        });
    }
    let sys = System::build(kernel, &lay, cost);
    if sys.diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Solver("a free state only loops to itself".into()));
    }
    let mut x = vec![if cost > 0.0 { cost } else { 0.0 }; sys.len()];
    // Aim well below the acceptance tolerance so the solution error, which
    // is the residual times the condition number, stays small too.
    let target = tol * 1e-2;
    let max_iter = 20 * sys.len() + 2000;
    let (mut res, mut iters) = bicgstab(&sys, &mut x, target, max_iter);
    for _ in 0..4 {
        if converged(res, &x, target) {
            break;
        }
        let (r2, i2) = bicgstab(&sys, &mut x, target, max_iter);
        iters += i2;
        if r2 >= res {
            break;
        }
        res = r2;
    }
    let mut method = Method::BiCgStab;
    if !converged(res, &x, tol) {
        let (r2, i2) = gauss_seidel(&sys, &mut x, tol, 2_000_000);
        res = r2;
        iters += i2;
        method = Method::GaussSeidel;
    }
    if !converged(res, &x, tol) {
        return Err(Error::Solver(format!(
            "residual {res:e} above tolerance after {iters} iterations"
        )));
    }
    for (a, &i) in lay.global.iter().enumerate() {
        values[i] = x[a];
    }
    Ok(Solution {
        values,
        residual: res,
        iterations: iters,
        method,
    })
}
