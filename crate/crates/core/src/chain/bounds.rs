//! Hitting-probability tables and the duration bound for two players.

use serde::Serialize;

use crate::chain::game_chain::{absorption_stats, build_game_chain, game_start};
use crate::chain::hit::{hit_prob_indexed, mean_return_time};
use crate::chain::kernel::SparseKernel;
use crate::chain::mod_chain::{build_mod_chain, Flavor, ModChainSpec, ModState};
use crate::error::{Error, Result};
use crate::report::{BoundEntry, BoundReport};

/// Tolerance on probability bounds; covers solver round-off only.
pub const PROB_TOL: f64 = 1e-10;
/// Tolerance on the return-time and duration bounds.
pub const TIME_TOL: f64 = 1e-6;
/// Relative change allowed between successive pot caps.
pub const STABILITY_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: u32 = 8;

#[derive(Debug, Clone, Serialize)]
pub struct ChainValues {
    pub p_max: i64,
    /// `A_m`, `m = 1..=n+1`
    pub a: Vec<f64>,
    /// `B_m`, `m = 1..=n+1`
    pub b: Vec<f64>,
    pub omega1: f64,
    pub omega2: f64,
    /// Reach an end state before returning to the start.
    pub p_f: f64,
    /// Reach `(2, 2n+1, 2)` before returning to the start.
    pub p_f_target: f64,
    pub mu0: f64,
}

impl ChainValues {
    fn flat(&self) -> Vec<f64> {
        let mut v = self.a.clone();
        v.extend(&self.b);
        v.extend([self.omega1, self.omega2, self.p_f, self.p_f_target, self.mu0]);
        v
    }

    /// Largest relative change against another table.
    pub fn max_change(&self, other: &ChainValues) -> f64 {
        self.flat()
            .iter()
            .zip(other.flat())
            .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

struct Ctx<'a> {
    spec: &'a ModChainSpec,
    kernel: &'a SparseKernel<ModState>,
}

impl Ctx<'_> {
    fn at(&self, y: i64, z: u8) -> Result<usize> {
        self.kernel.require(&self.spec.at2(y, z))
    }

    fn p(&self, start: (i64, u8), target: &[(i64, u8)], avoid: &[(i64, u8)], exempt: bool) -> Result<f64> {
        let s = self.at(start.0, start.1)?;
        let t = target.iter().map(|&(y, z)| self.at(y, z)).collect::<Result<Vec<_>>>()?;
        let a = avoid.iter().map(|&(y, z)| self.at(y, z)).collect::<Result<Vec<_>>>()?;
        hit_prob_indexed(self.kernel, s, &t, &a, exempt)
    }
}

/// All tabulated quantities at one pot cap. `A_m` and `B_m` are taken at
/// `y1 = n - 1`; by translation invariance the choice does not matter.
pub fn chain_values(spec: &ModChainSpec) -> Result<ChainValues> {
    let kernel = build_mod_chain(spec)?;
    let ctx = Ctx { spec, kernel: &kernel };
    let n = spec.n;
    let y1 = n - 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for m in 1..=n + 1 {
        a.push(ctx.p((y1, 1), &[(y1 + m, 2)], &[(y1 - 1, 1)], false)?);
        b.push(ctx.p((y1, 1), &[(y1 - m, 2)], &[(y1 + 1, 1)], false)?);
    }
    let omega1 = ctx.p((n - 1, 1), &[(n, 1)], &[(n - 1, 1), (n - 2, 1)], true)?;
    let omega2 = ctx.p((n - 1, 1), &[(n - 2, 1)], &[(n - 1, 1), (n, 1)], true)?;
    let s0 = kernel.require(&spec.start())?;
    let ends: Vec<usize> = (0..kernel.len())
        .filter(|&i| spec.is_end_state(kernel.state(i)))
        .collect();
    let p_f = hit_prob_indexed(&kernel, s0, &ends, &[s0], true)?;
    let p_f_target = ctx.p((n - 1, 1), &[(2 * n + 1, 2)], &[(n - 1, 1)], true)?;
    let mu0 = mean_return_time(&kernel, &spec.start())?;
    Ok(ChainValues {
        p_max: spec.p_max,
        a,
        b,
        omega1,
        omega2,
        p_f,
        p_f_target,
        mu0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundTables {
    pub n: i64,
    pub flavor: Flavor,
    pub values: ChainValues,
    /// Relative change between the last two pot caps.
    pub stability: f64,
    /// Exact mean game duration.
    pub mu_d: f64,
    pub report: BoundReport,
}

/// Grows the pot cap by doubling from `p_max` (default `8n`) until every
/// value moves by less than [`STABILITY_TOL`].
pub fn stable_values(n: i64, flavor: Flavor, p_max: Option<i64>) -> Result<(ChainValues, f64)> {
    let mut cap = p_max.unwrap_or_else(|| ModChainSpec::default_p_max(n));
    let mut prev = chain_values(&ModChainSpec::new(n, cap, flavor)?)?;
    for _ in 0..MAX_DOUBLINGS {
        cap *= 2;
        let cur = chain_values(&ModChainSpec::new(n, cap, flavor)?)?;
        let change = cur.max_change(&prev);
        if change < STABILITY_TOL {
            return Ok((cur, change));
        }
        prev = cur;
    }
    Err(Error::Unstable(format!(
        "values still moving at pot cap {cap} for n = {n}"
    )))
}

pub fn bound_tables(n: i64, flavor: Flavor, p_max: Option<i64>) -> Result<BoundTables> {
    if n < 2 {
        return Err(Error::InvalidConfig("bound tables need n >= 2".into()));
    }
    let (v, stability) = stable_values(n, flavor, p_max)?;
    let game = build_game_chain(n)?;
    let mu_d = absorption_stats(&game, &game_start(n))?.expected_time;
    let nf = n as f64;
    let mut r = BoundReport::new(format!("hitting bounds, n = {n}, {} flavor", flavor.as_str()));
    r.push(BoundEntry::at_least("A_1", "A_1 >= 1/4", 0.25, v.a[0], PROB_TOL));
    r.push(BoundEntry::at_least("B_1", "B_1 >= 1/64", 1.0 / 64.0, v.b[0], PROB_TOL));
    for (i, &a) in v.a.iter().enumerate() {
        let m = i as f64 + 1.0;
        r.push(BoundEntry::at_least("A_m", "A_m >= 1/(m+3)", 1.0 / (m + 3.0), a, PROB_TOL).with_index(i as i64 + 1));
    }
    for (i, &b) in v.b.iter().enumerate() {
        let m = i as f64 + 1.0;
        r.push(BoundEntry::at_least("B_m", "B_m >= 1/(m+63)", 1.0 / (m + 63.0), b, PROB_TOL).with_index(i as i64 + 1));
    }
    r.push(BoundEntry::at_least("omega_1", "omega_1 >= 1/8", 0.125, v.omega1, PROB_TOL));
    r.push(BoundEntry::at_least("omega_2", "omega_2 >= 1/8", 0.125, v.omega2, PROB_TOL));
    r.push(BoundEntry::at_least("p_f", "p_f >= 1/(4(n+63))", 1.0 / (4.0 * (nf + 63.0)), v.p_f, PROB_TOL));
    r.push(BoundEntry::at_least(
        "p_f_vs_target",
        "p_f >= P[n-1,1; 2n+1,2; n-1,1]",
        v.p_f_target,
        v.p_f,
        PROB_TOL,
    ));
    r.push(BoundEntry::at_most("mu_0", "mu_0 <= 13(2n+3)/3", 13.0 * (2.0 * nf + 3.0) / 3.0, v.mu0, TIME_TOL));
    r.push(BoundEntry::at_most("mu_d", "mu_d <= mu_0/p_f", v.mu0 / v.p_f, mu_d, TIME_TOL));
    r.push(BoundEntry::report("mu_d_asymptotic", "mu_d vs 104n^2/3", 104.0 * nf * nf / 3.0, mu_d));
    r.push(BoundEntry::at_most("pot_cap_stability", "relative change under cap doubling", STABILITY_TOL, stability, 0.0));
    if flavor == Flavor::FormalLambda {
        r.entries.iter_mut().for_each(|e| e.hard = false);
    }
    Ok(BoundTables {
        n,
        flavor,
        values: v,
        stability,
        mu_d,
        report: r,
    })
}
