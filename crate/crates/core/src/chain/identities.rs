//! Complementarity, translation invariance and duality of hitting
//! probabilities between pot-2 states.

use serde::Serialize;

use crate::chain::hit::hit_prob_indexed;
use crate::chain::kernel::SparseKernel;
use crate::chain::mod_chain::{build_mod_chain, Flavor, ModChainSpec, ModState};
use crate::error::Result;
use crate::report::{BoundEntry, BoundReport};
use crate::rng::SpinRng;

pub const IDENTITY_TOL: f64 = 1e-10;

/// `P[y1,z1; y2,z2; y3,z3]` at pot 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub start: (i64, u8),
    pub target: (i64, u8),
    pub avoid: (i64, u8),
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResult {
    pub n: i64,
    pub flavor: Flavor,
    pub queries: usize,
    pub complementarity: f64,
    pub translation: f64,
    /// Largest kernel entry change under `y -> y + 1`.
    pub kernel_translation: f64,
    pub duality: f64,
}

/// Deterministic grid of queries with three distinct states.
pub fn query_grid(n: i64, count: usize, seed: u64) -> Vec<Triple> {
    let lambda = 2 * n + 3;
    let mut rng = SpinRng::for_trial(seed, n as u64);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut pick = || ((rng.below(lambda as u64) as i64), 1 + rng.below(2) as u8);
        let (a, b, c) = (pick(), pick(), pick());
        if a != b && b != c && a != c {
            out.push(Triple {
                start: a,
                target: b,
                avoid: c,
            });
        }
    }
    out
}

struct Eval<'a> {
    spec: &'a ModChainSpec,
    kernel: &'a SparseKernel<ModState>,
}

impl Eval<'_> {
    fn p(&self, t: &Triple) -> Result<f64> {
        let at = |(y, z): (i64, u8)| self.kernel.require(&self.spec.at2(y, z));
        hit_prob_indexed(self.kernel, at(t.start)?, &[at(t.target)?], &[at(t.avoid)?], false)
    }
}

fn shift(t: &Triple, m: i64) -> Triple {
    let s = |(y, z): (i64, u8)| (y + m, z);
    Triple {
        start: s(t.start),
        target: s(t.target),
        avoid: s(t.avoid),
    }
}

fn dual(t: &Triple) -> Triple {
    let d = |(y, z): (i64, u8)| (-y - 2, 3 - z);
    Triple {
        start: d(t.start),
        target: d(t.target),
        avoid: d(t.avoid),
    }
}

pub fn check_identities(n: i64, flavor: Flavor, p_max: Option<i64>, count: usize, seed: u64) -> Result<IdentityResult> {
    let spec = ModChainSpec::new(n, p_max.unwrap_or_else(|| ModChainSpec::default_p_max(n)), flavor)?;
    let kernel = build_mod_chain(&spec)?;
    let ev = Eval { spec: &spec, kernel: &kernel };
    let lambda = spec.lambda;
    let kernel_translation = kernel.relabel_residual(|s| ModState::new(s.x, spec.wrap(s.y + 1), s.z))?;
    let mut shift_rng = SpinRng::for_trial(seed ^ 0x5eed, n as u64);
    let (mut comp, mut trans, mut duality) = (0.0f64, 0.0f64, 0.0f64);
    let grid = query_grid(n, count, seed);
    for t in &grid {
        let p = ev.p(t)?;
        let swapped = Triple {
            target: t.avoid,
            avoid: t.target,
            ..*t
        };
        comp = comp.max((p + ev.p(&swapped)? - 1.0).abs());
        let m = 1 + shift_rng.below(lambda as u64 - 1) as i64;
        trans = trans.max((p - ev.p(&shift(t, m))?).abs());
        duality = duality.max((p - ev.p(&dual(t))?).abs());
    }
    Ok(IdentityResult {
        n,
        flavor,
        queries: grid.len(),
        complementarity: comp,
        translation: trans,
        kernel_translation,
        duality,
    })
}

pub fn identity_report(results: &[IdentityResult]) -> BoundReport {
    let mut r = BoundReport::new("hitting-probability identities");
    for res in results {
        let tag = |s: &str| format!("{s}_{}", res.flavor.as_str());
        r.push(
            BoundEntry::at_most(&tag("complementarity"), "|P[a;b;c] + P[a;c;b] - 1|", IDENTITY_TOL, res.complementarity, 0.0)
                .with_index(res.n),
        );
        r.push(
            BoundEntry::at_most(&tag("translation"), "|P[a;b;c] - P[a+m;b+m;c+m]|", IDENTITY_TOL, res.translation, 0.0)
                .with_index(res.n),
        );
        r.push(
            BoundEntry::at_most(&tag("kernel_translation"), "kernel fixed by y -> y+1", 0.0, res.kernel_translation, 0.0)
                .with_index(res.n),
        );
        r.push(BoundEntry::report(&tag("duality"), "|P[a;b;c] - P[dual]|", 0.0, res.duality).with_index(res.n));
    }
    r
}
