//! Gamelet enumeration, the counting bounds, and the four-phase long-game
//! construction for metaslowdel.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameConfig, GameState, SpinOutcome, StepEvent, Transcript};
use crate::report::{csv_err, finish_csv, BoundEntry, BoundReport};
use crate::rng::SpinRng;
use crate::variants::{metaslowdel_start, run_metaslowdel_with, StoppingRecord};

/// Largest player count handled by the enumerators.
pub const MAX_K: usize = 8;
/// Largest gamelet body `pk` accepted by [`enumerate_signatures`].
pub const MAX_PK: usize = 14;
/// Largest `ks` accepted by [`count_low_epoch_games`].
pub const MAX_KS: usize = 12;

/// Overdraft dynamics on payoffs only; stacks never matter under overdraft.
#[derive(Clone, Copy)]
struct Sim {
    k: usize,
    pot: i64,
    pay: [i64; MAX_K],
    turn: usize,
}

impl Sim {
    fn canonical(k: usize) -> Self {
        Self {
            k,
            pot: k as i64,
            pay: [0; MAX_K],
            turn: 0,
        }
    }

    /// Returns true when the spin was a Ganz.
    fn spin(&mut self, o: SpinOutcome) -> bool {
        let p = self.turn;
        let ganz = match o {
            SpinOutcome::Nisht => false,
            SpinOutcome::Ganz => {
                self.pay[p] += self.pot;
                self.pot = 0;
                true
            }
            SpinOutcome::Halb => {
                self.pay[p] += self.pot / 2;
                self.pot -= self.pot / 2;
                false
            }
            SpinOutcome::Shtel => {
                self.pay[p] -= 1;
                self.pot += 1;
                false
            }
        };
        if self.pot == 0 {
            for v in &mut self.pay[..self.k] {
                *v -= 1;
            }
            self.pot = self.k as i64;
        }
        self.turn = (self.turn + 1) % self.k;
        ganz
    }
}

type Key = [i32; MAX_K - 1];

fn key_of(sim: &Sim) -> Key {
    let mut key = [0i32; MAX_K - 1];
    for (i, slot) in key.iter_mut().enumerate().take(sim.k - 1) {
        *slot = sim.pay[i] as i32;
    }
    key
}

fn decode(entries: impl Iterator<Item = (Key, u64)>, k: usize) -> BTreeMap<Vec<i64>, u64> {
    let mut out = BTreeMap::new();
    for (key, c) in entries {
        *out.entry(key[..k - 1].iter().map(|&v| v as i64).collect()).or_insert(0) += c;
    }
    out
}

fn check_k(k: usize) -> Result<()> {
    if !(2..=MAX_K).contains(&k) {
        return Err(Error::InvalidConfig(format!("k = {k} outside 2..={MAX_K}")));
    }
    Ok(())
}

/// Counts of gamelet payoff signatures `(u_1, ..., u_{k-1})`.
#[derive(Debug, Clone, Serialize)]
pub struct SignatureTable {
    pub k: usize,
    pub p: usize,
    pub counts: BTreeMap<Vec<i64>, u64>,
    #[serde(serialize_with = "ser_big")]
    pub total: BigUint,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl SignatureTable {
    /// Inclusive range every coordinate must lie in.
    pub fn range_box(&self) -> (i64, i64) {
        let (k, p) = (self.k as i64, self.p as i64);
        (-p * k - 1, (k - 1) * (2 * p + 1))
    }

    pub fn out_of_box(&self) -> usize {
        let (lo, hi) = self.range_box();
        self.counts
            .keys()
            .filter(|u| u.iter().any(|&v| v < lo || v > hi))
            .count()
    }

    /// `4^{pk}`
    pub fn expected_total(&self) -> BigUint {
        BigUint::from(4u32).pow((self.p * self.k) as u32)
    }

    /// `u_1,...,u_{k-1},count`
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..self.k).map(|i| format!("u{i}")).collect();
        header.push("count".into());
        w.write_record(&header).map_err(csv_err)?;
        for (u, c) in &self.counts {
            let mut rec: Vec<String> = u.iter().map(i64::to_string).collect();
            rec.push(c.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

fn dfs_signatures(sim: Sim, depth: usize, acc: &mut HashMap<Key, u64>) {
    if depth == 0 {
        let mut last = sim;
        last.spin(SpinOutcome::Ganz);
        *acc.entry(key_of(&last)).or_insert(0) += 1;
        return;
    }
    for o in SpinOutcome::ALL {
        let mut next = sim;
        next.spin(o);
        dfs_signatures(next, depth - 1, acc);
    }
}

fn prefixes(len: usize) -> Vec<Vec<SpinOutcome>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                SpinOutcome::ALL.map(|o| {
                    let mut q = p.clone();
                    q.push(o);
                    q
                })
            })
            .collect();
    }
    out
}

/// Every gamelet of `pk` free spins followed by a Ganz, from pot `k` with
/// seat 0 as the first spinner, grouped by signature.
pub fn enumerate_signatures(k: usize, p: usize) -> Result<SignatureTable> {
    check_k(k)?;
    let pk = p * k;
    if pk > MAX_PK {
        return Err(Error::TooLarge(format!("pk = {pk} exceeds {MAX_PK}")));
    }
    let split = pk.min(5);
    let merged = prefixes(split)
        .into_par_iter()
        .map(|prefix| {
            let mut sim = Sim::canonical(k);
            for &o in &prefix {
                sim.spin(o);
            }
            let mut acc = HashMap::new();
            dfs_signatures(sim, pk - split, &mut acc);
            decode(acc.into_iter(), k)
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (u, c) in b {
                *a.entry(u).or_insert(0) += c;
            }
            a
        });
    let total = merged.values().fold(BigUint::zero(), |t, &c| t + c);
    Ok(SignatureTable {
        k,
        p,
        counts: merged,
        total,
    })
}

fn big_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// `measured >= bound` decided exactly, reported in floating point.
fn exact_at_least(name: &str, anchor: &str, bound: &BigUint, measured: &BigUint) -> BoundEntry {
    let mut e = BoundEntry::at_least(name, anchor, big_f64(bound), big_f64(measured), 0.0);
    e.verdict = if measured >= bound {
        crate::report::Verdict::Pass
    } else {
        crate::report::Verdict::Fail
    };
    e
}

fn exact_at_most(name: &str, anchor: &str, bound: &BigUint, measured: &BigUint) -> BoundEntry {
    let mut e = BoundEntry::at_most(name, anchor, big_f64(bound), big_f64(measured), 0.0);
    e.verdict = if measured <= bound {
        crate::report::Verdict::Pass
    } else {
        crate::report::Verdict::Fail
    };
    e
}

/// Totals, range box, and both Minkowski lower bounds on `sum x^k`.
pub fn minkowski_check(table: &SignatureTable) -> BoundReport {
    let k = table.k as u32;
    let mut r = BoundReport::new(format!("gamelet signatures, k = {}, p = {}", table.k, table.p));
    let expected = table.expected_total();
    let mut total = BoundEntry::equal(
        "signature_total",
        "sum x = 4^(pk)",
        big_f64(&expected),
        big_f64(&table.total),
        0.0,
    );
    if table.total != expected {
        total.verdict = crate::report::Verdict::Fail;
    }
    r.push(total);
    r.push(BoundEntry::at_most(
        "signature_range",
        "-pk-1 <= u_i <= (k-1)(2p+1)",
        0.0,
        table.out_of_box() as f64,
        0.0,
    ));
    let power_sum = table
        .counts
        .values()
        .fold(BigUint::zero(), |t, &c| t + BigUint::from(c).pow(k));
    let cells = BigUint::from(table.counts.len());
    // sum x^k >= (sum x)^k / cells^(k-1), compared after clearing the divisor.
    let lhs = &power_sum * cells.pow(k - 1);
    let rhs = table.total.pow(k);
    let mut e = exact_at_least(
        "minkowski_occupied",
        "sum x^k >= (sum x)^k / cells^(k-1)",
        &(&rhs / cells.pow(k - 1)),
        &power_sum,
    );
    e.verdict = if lhs >= rhs {
        crate::report::Verdict::Pass
    } else {
        crate::report::Verdict::Fail
    };
    r.push(e);
    let pk = (table.p * table.k) as u32;
    if pk > 0 {
        let target = BigUint::from(4u32).pow(pk * k);
        // At most (3pk)^(k-1) cells are occupied, so the power mean gives the
        // divisor (3pk)^((k-1)^2). The single power (3pk)^(k-1) coincides
        // with it only for two players.
        let displayed = BigUint::from(3 * pk).pow(k - 1);
        let mut e = exact_at_least(
            "minkowski_box",
            "sum x^k >= (4^(pk))^k / (3pk)^(k-1)",
            &(&target / &displayed),
            &power_sum,
        );
        e.verdict = if &power_sum * &displayed >= target {
            crate::report::Verdict::Pass
        } else {
            crate::report::Verdict::Fail
        };
        r.push(if k == 2 { e } else { e.soft() });
        let cells_bound = BigUint::from(3 * pk).pow((k - 1) * (k - 1));
        let mut e = exact_at_least(
            "minkowski_box_cells",
            "sum x^k >= (4^(pk))^k / (3pk)^((k-1)^2)",
            &(&target / &cells_bound),
            &power_sum,
        );
        e.verdict = if &power_sum * &cells_bound >= target {
            crate::report::Verdict::Pass
        } else {
            crate::report::Verdict::Fail
        };
        r.push(e);
    }
    r
}

/// One gamelet: `pk` random spins then a Ganz.
pub fn random_gamelet(k: usize, p: usize, rng: &mut SpinRng) -> Vec<SpinOutcome> {
    let mut g: Vec<SpinOutcome> = (0..p * k).map(|_| rng.spin()).collect();
    g.push(SpinOutcome::Ganz);
    g
}

pub fn signature(k: usize, gamelet: &[SpinOutcome]) -> Vec<i64> {
    let mut sim = Sim::canonical(k);
    for &o in gamelet {
        sim.spin(o);
    }
    sim.pay[..k - 1].to_vec()
}

/// `k` gamelets sharing one signature: the first uniform, the rest by
/// rejection. The expected number of draws per extra gamelet equals the
/// number of occupied signatures.
pub fn matched_tuple(k: usize, p: usize, rng: &mut SpinRng) -> Vec<Vec<SpinOutcome>> {
    let first = random_gamelet(k, p, rng);
    let sig = signature(k, &first);
    let mut out = vec![first];
    while out.len() < k {
        let g = random_gamelet(k, p, rng);
        if signature(k, &g) == sig {
            out.push(g);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcatCheck {
    pub k: usize,
    pub p: usize,
    pub n: i64,
    pub tuples: usize,
    /// Tuples whose concatenation left some seat with a nonzero payoff.
    pub nonzero: usize,
    /// Tuples that forced a player out under ordinary rules.
    pub illegal: usize,
    pub unknown_signatures: usize,
}

impl ConcatCheck {
    pub fn passed(&self) -> bool {
        self.nonzero == 0 && self.illegal == 0 && self.unknown_signatures == 0
    }
}

/// Plays `tuples` random signature-matched concatenations under ordinary
/// rules from the standard start with `n = pk^2 + k + 1` tokens each.
pub fn concat_check(table: &SignatureTable, tuples: usize, rng: &mut SpinRng) -> Result<ConcatCheck> {
    let (k, p) = (table.k, table.p);
    let n = (p * k * k + k + 1) as i64;
    let config = GameConfig::dreidel(k, n)?;
    let mut res = ConcatCheck {
        k,
        p,
        n,
        tuples,
        nonzero: 0,
        illegal: 0,
        unknown_signatures: 0,
    };
    for _ in 0..tuples {
        let tuple = matched_tuple(k, p, rng);
        if !table.counts.contains_key(&signature(k, &tuple[0])) {
            res.unknown_signatures += 1;
        }
        let start = GameState::new_game(config)?;
        let mut st = start.clone();
        let mut events = Vec::new();
        let mut legal = true;
        for &o in tuple.iter().flatten() {
            events.clear();
            st.step(o, Some(&mut events))?;
            if st.is_over() || events.iter().any(|e| matches!(e, StepEvent::Eliminated { .. })) {
                legal = false;
                break;
            }
        }
        if !legal {
            res.illegal += 1;
        } else if st.stacks != start.stacks || st.pot != start.pot || st.turn != 0 {
            res.nonzero += 1;
        }
    }
    Ok(res)
}

/// `log((a / 64^k)^a (1 - a)^(1 - a))`
fn alpha_log_margin(k: usize, a: f64) -> f64 {
    a * (a.ln() - k as f64 * 64f64.ln()) + (1.0 - a) * (1.0 - a).ln()
}

pub const ALPHA_STEP: f64 = 1e-4;
const ALPHA_TARGET: f64 = 0.76;

/// Largest `a` on the grid `i * 1e-4 < 1/2` with
/// `(a / 64^k)^a (1 - a)^(1 - a) > 0.76`.
pub fn choose_alpha(k: usize) -> Result<f64> {
    check_k(k)?;
    let target = ALPHA_TARGET.ln();
    (1..5000)
        .rev()
        .map(|i| i as f64 / 10_000.0)
        .find(|&a| alpha_log_margin(k, a) > target)
        .ok_or_else(|| Error::Infeasible("no grid value of alpha qualifies".into()))
}

/// The value of `(a / 64^k)^a (1 - a)^(1 - a)`.
pub fn alpha_expression(k: usize, a: f64) -> f64 {
    alpha_log_margin(k, a).exp()
}

pub fn alpha_report(k: usize) -> Result<BoundReport> {
    let a = choose_alpha(k)?;
    let mut r = BoundReport::new(format!("alpha choice, k = {k}"));
    r.push(BoundEntry::at_least(
        "alpha_expression",
        "(a/64^k)^a (1-a)^(1-a) > 0.76",
        ALPHA_TARGET,
        alpha_expression(k, a),
        0.0,
    ));
    r.push(BoundEntry::at_most("alpha", "a < 1/2", 0.5, a, 0.0));
    // 0.76 / (a^a (1-a)^(1-a)) < 4^(-3ka) is the same inequality rearranged.
    let lhs = ALPHA_TARGET.ln() - (a * a.ln() + (1.0 - a) * (1.0 - a).ln());
    r.push(BoundEntry::report(
        "alpha_consequence",
        "log(0.76 / (a^a (1-a)^(1-a))) vs log 4^(-3ka)",
        -3.0 * k as f64 * a * 4f64.ln(),
        lhs,
    ));
    Ok(r)
}

fn argmax(v: &[i64]) -> usize {
    let m = *v.iter().max().expect("non-empty");
    v.iter().position(|&x| x == m).unwrap()
}

fn argmin(v: &[i64]) -> usize {
    let m = *v.iter().min().expect("non-empty");
    v.iter().position(|&x| x == m).unwrap()
}

fn spread(v: &[i64]) -> i64 {
    v.iter().max().unwrap() - v.iter().min().unwrap()
}

#[derive(Debug, Clone, Serialize)]
pub struct Restorative {
    pub outcomes: Vec<SpinOutcome>,
    pub end: GameState,
    /// Every stack ends as `m + eps[i]`.
    pub m: i64,
    pub eps: Vec<i64>,
}

/// Deterministic spins driving any overdraft configuration to pot `k`,
/// stacks within one of each other, and seat 0 to spin.
pub fn restorative_sequence(state: &GameState) -> Result<Restorative> {
    if !state.config.overdraft {
        return Err(Error::InvalidConfig("restorative phase needs overdraft rules".into()));
    }
    if state.pot < 1 {
        return Err(Error::InvalidConfig("restorative phase needs a non-empty pot".into()));
    }
    let k = state.k();
    let mut st = state.clone();
    let mut out = Vec::new();
    let mut spin = |st: &mut GameState, o: SpinOutcome| -> Result<()> {
        out.push(o);
        st.step(o, None)
    };
    if st.pot == 1 {
        spin(&mut st, SpinOutcome::Shtel)?;
    }
    while st.pot > 2 {
        spin(&mut st, SpinOutcome::Halb)?;
    }
    while st.turn != 0 {
        spin(&mut st, SpinOutcome::Nisht)?;
    }
    while spread(&st.stacks) > 1 {
        let (hi, lo) = (argmax(&st.stacks), argmin(&st.stacks));
        for seat in 0..k {
            let o = if seat == hi {
                SpinOutcome::Shtel
            } else if seat == lo {
                SpinOutcome::Halb
            } else {
                SpinOutcome::Nisht
            };
            spin(&mut st, o)?;
        }
    }
    for _ in 0..k.saturating_sub(2) {
        let hi = argmax(&st.stacks);
        for seat in 0..k {
            spin(&mut st, if seat == hi { SpinOutcome::Shtel } else { SpinOutcome::Nisht })?;
        }
    }
    if st.pot != k as i64 || st.turn != 0 || spread(&st.stacks) > 1 {
        return Err(Error::Validation(format!(
            "restorative endpoint invalid: pot {}, seat {}, stacks {:?}",
            st.pot, st.turn, st.stacks
        )));
    }
    let m = *st.stacks.iter().min().unwrap();
    let eps = st.stacks.iter().map(|s| s - m).collect();
    Ok(Restorative {
        outcomes: out,
        end: st,
        m,
        eps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasePlan {
    pub k: usize,
    pub n: i64,
    pub s: u64,
    pub alpha: f64,
    pub t_s: u64,
    pub p: usize,
    pub m: i64,
    pub eps: Vec<i64>,
    pub restorative_spins: u64,
    pub ganz_spins: u64,
    pub gamelet_tuples: u64,
    pub gamelet_spins: u64,
    pub nisht_spins: u64,
    pub closing_spins: u64,
}

impl PhasePlan {
    pub fn total(&self) -> u64 {
        self.restorative_spins + self.ganz_spins + self.gamelet_spins + self.nisht_spins + self.closing_spins
    }
}

/// `floor((n - k - 1) / k^2)`
pub fn gamelet_p(k: usize, n: i64) -> Result<usize> {
    let v = n - k as i64 - 1;
    if v < 0 {
        return Err(Error::InvalidConfig(format!("n = {n} must exceed k = {k}")));
    }
    Ok((v / (k * k) as i64) as usize)
}

pub fn t_s(alpha: f64, s: u64) -> u64 {
    (alpha * s as f64).floor() as u64
}

/// Spin budgets for a game of exactly `ks` spins from `start`.
pub fn plan_phases(start: &GameState, n: i64, s: u64, alpha: f64) -> Result<(PhasePlan, Restorative)> {
    let k = start.k();
    let rest = restorative_sequence(start)?;
    let p = gamelet_p(k, n)?;
    let ts = t_s(alpha, s);
    if 2 * ts >= s {
        return Err(Error::Infeasible(format!("T_s = {ts} is not below s/2")));
    }
    let ku = k as u64;
    let phase3_end = (s as i64 - rest.m - 2) * k as i64;
    let used = rest.outcomes.len() as i64 + (ku * ts) as i64;
    if rest.m < 0 || phase3_end < used {
        return Err(Error::Infeasible(format!(
            "s = {s} too small: phases 1-2 need {used} spins, phase 3 must end by {phase3_end}"
        )));
    }
    let budget = (phase3_end - used) as u64;
    let tuple_len = ku * (p as u64 * ku + 1);
    let tuples = budget / tuple_len;
    let plan = PhasePlan {
        k,
        n,
        s,
        alpha,
        t_s: ts,
        p,
        m: rest.m,
        eps: rest.eps.clone(),
        restorative_spins: rest.outcomes.len() as u64,
        ganz_spins: ku * ts,
        gamelet_tuples: tuples,
        gamelet_spins: tuples * tuple_len,
        nisht_spins: budget - tuples * tuple_len,
        closing_spins: ku * (rest.m as u64 + 2),
    };
    debug_assert_eq!(plan.total(), ku * s);
    Ok((plan, rest))
}

/// Smallest `s` for which all four phase budgets are non-negative.
pub fn min_feasible_s(start: &GameState, n: i64, alpha: f64) -> Result<u64> {
    let rest = restorative_sequence(start)?;
    let lo = (rest.m + 3).max(1) as u64;
    (lo..lo + 1_000_000)
        .find(|&s| plan_phases(start, n, s, alpha).is_ok())
        .ok_or_else(|| Error::Infeasible("no feasible s found".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstructedGame {
    pub plan: PhasePlan,
    pub outcomes: Vec<SpinOutcome>,
    pub epochs: u64,
    pub stopping: StoppingRecord,
    pub transcript: Transcript,
}

/// Plays `outcomes` as metaslowdel from `start` and requires the last seat
/// to go home on exactly the final spin.
pub fn validate_metaslowdel(start: &GameState, n: i64, outcomes: &[SpinOutcome]) -> Result<StoppingRecord> {
    let mut it = outcomes.iter().copied();
    let rec = run_metaslowdel_with(start, n, outcomes.len() as u64 + 1, || it.next(), |_, _| {})?
        .ok_or_else(|| Error::Validation("the last seat never went home".into()))?;
    if rec.u != outcomes.len() as u64 {
        return Err(Error::Validation(format!(
            "the last seat went home after {} of {} spins",
            rec.u,
            outcomes.len()
        )));
    }
    Ok(rec)
}

/// Restorative phase, `T_s` all-Ganz rounds, zero-payoff gamelet tuples
/// padded with Nisht rounds, then `m + 2` closing rounds.
pub fn construct_long_game_from(
    start: &GameState,
    n: i64,
    s: u64,
    alpha: f64,
    rng: &mut SpinRng,
) -> Result<ConstructedGame> {
    let k = start.k();
    let (plan, rest) = plan_phases(start, n, s, alpha)?;
    let mut out = rest.outcomes.clone();
    for _ in 0..plan.ganz_spins {
        out.push(SpinOutcome::Ganz);
    }
    for _ in 0..plan.gamelet_tuples {
        for g in matched_tuple(k, plan.p, rng) {
            out.extend(g);
        }
    }
    for _ in 0..plan.nisht_spins {
        out.push(SpinOutcome::Nisht);
    }
    for _ in 0..rest.m * k as i64 {
        out.push(SpinOutcome::Shtel);
    }
    for &e in &rest.eps {
        out.push(if e > 0 { SpinOutcome::Shtel } else { SpinOutcome::Nisht });
    }
    for seat in 0..k {
        out.push(if seat + 1 == k { SpinOutcome::Ganz } else { SpinOutcome::Nisht });
    }
    if out.len() as u64 != k as u64 * s {
        return Err(Error::Validation(format!("{} spins, expected {}", out.len(), k as u64 * s)));
    }
    let stopping = validate_metaslowdel(start, n, &out)?;
    if stopping.t < plan.t_s {
        return Err(Error::Validation(format!("{} epochs, fewer than T_s = {}", stopping.t, plan.t_s)));
    }
    let mut transcript = Transcript::new(start);
    let mut st = start.clone();
    for &o in &out {
        transcript.push(&mut st, o)?;
    }
    Ok(ConstructedGame {
        epochs: stopping.t,
        plan,
        outcomes: out,
        stopping,
        transcript,
    })
}

/// Construction from the balanced start.
pub fn construct_long_game(k: usize, n: i64, s: u64, alpha: f64, rng: &mut SpinRng) -> Result<ConstructedGame> {
    let start = metaslowdel_start(k, n, n - 1)?;
    construct_long_game_from(&start, n, s, alpha, rng)
}

#[derive(Debug, Clone, Serialize)]
pub struct LowEpochCount {
    pub k: usize,
    pub s: u64,
    pub t_s: u64,
    pub n: i64,
    /// Outcome sequences of `ks` spins in which the last seat goes home at
    /// the final spin.
    pub games: u64,
    pub low: u64,
    pub high: u64,
    pub epoch_sum: u64,
    #[serde(serialize_with = "ser_big")]
    pub bound: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub chain_bound: BigUint,
}

impl LowEpochCount {
    /// Mean epoch count among games of exactly `ks` spins.
    pub fn e_s(&self) -> f64 {
        if self.games == 0 {
            f64::NAN
        } else {
            self.epoch_sum as f64 / self.games as f64
        }
    }
}

#[derive(Clone, Copy)]
struct MetaSim {
    k: usize,
    pot: i64,
    stacks: [i64; MAX_K],
    spins: usize,
    epochs: u64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    games: u64,
    low: u64,
    epoch_sum: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            games: self.games + o.games,
            low: self.low + o.low,
            epoch_sum: self.epoch_sum + o.epoch_sum,
        }
    }
}

/// Returns `Some(true)` if the last seat went home on this spin.
fn meta_spin(st: &mut MetaSim, o: SpinOutcome, top: i64) -> bool {
    let k = st.k;
    let seat = st.spins % k;
    st.spins += 1;
    match o {
        SpinOutcome::Nisht => {}
        SpinOutcome::Ganz => {
            st.stacks[seat] += st.pot;
            st.pot = 0;
        }
        SpinOutcome::Halb => {
            st.stacks[seat] += st.pot / 2;
            st.pot -= st.pot / 2;
        }
        SpinOutcome::Shtel => {
            st.stacks[seat] -= 1;
            st.pot += 1;
        }
    }
    if st.pot == 0 {
        for v in &mut st.stacks[..k] {
            *v -= 1;
        }
        st.pot = k as i64;
    }
    if o == SpinOutcome::Ganz && seat == k - 1 {
        st.epochs += 1;
        let w = st.stacks[k - 1];
        return w < 0 || w > top;
    }
    false
}

fn dfs_games(st: MetaSim, left: usize, t_s: u64, top: i64) -> Tally {
    let mut t = Tally::default();
    for o in SpinOutcome::ALL {
        let mut next = st;
        let home = meta_spin(&mut next, o, top);
        if left == 1 {
            if home {
                t.games += 1;
                t.epoch_sum += next.epochs;
                if next.epochs < t_s {
                    t.low += 1;
                }
            }
        } else if !home {
            t = t.merge(dfs_games(next, left - 1, t_s, top));
        }
    }
    t
}

fn binom(n: u64, r: u64) -> BigUint {
    (0..r).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// Exhaustive count of `ks`-spin metaslowdel games from the balanced start,
/// split by whether they have fewer than `t_s` epochs.
pub fn count_low_epoch_games(k: usize, s: u64, t_s: u64, n: i64) -> Result<LowEpochCount> {
    check_k(k)?;
    let ks = k * s as usize;
    if ks > MAX_KS {
        return Err(Error::TooLarge(format!("ks = {ks} exceeds {MAX_KS}")));
    }
    if s == 0 {
        return Err(Error::InvalidConfig("s must be positive".into()));
    }
    let start = metaslowdel_start(k, n, n - 1)?;
    let top = k as i64 * (n - 1);
    let mut root = MetaSim {
        k,
        pot: start.pot,
        stacks: [0; MAX_K],
        spins: 0,
        epochs: 0,
    };
    root.stacks[..k].copy_from_slice(&start.stacks);
    let split = ks.min(4) - 1;
    let tally = prefixes(split)
        .into_par_iter()
        .map(|prefix| {
            let mut st = root;
            for &o in &prefix {
                if meta_spin(&mut st, o, top) {
                    return Tally::default();
                }
            }
            dfs_games(st, ks - split, t_s, top)
        })
        .reduce(Tally::default, Tally::merge);
    let four = BigUint::from(4u32).pow((s * (k as u64 - 1)) as u32);
    let sum = (0..t_s).fold(BigUint::zero(), |acc, r| {
        acc + binom(s, r) * BigUint::from(3u32).pow((s - r) as u32)
    });
    let chain = &four * BigUint::from(t_s) * BigUint::from(3u32).pow(s as u32) * binom(s, t_s);
    Ok(LowEpochCount {
        k,
        s,
        t_s,
        n,
        games: tally.games,
        low: tally.low,
        high: tally.games - tally.low,
        epoch_sum: tally.epoch_sum,
        bound: four * sum,
        chain_bound: chain,
    })
}

pub fn low_epoch_report(c: &LowEpochCount, alpha: f64) -> BoundReport {
    let mut r = BoundReport::new(format!("low-epoch games, k = {}, s = {}, T_s = {}", c.k, c.s, c.t_s));
    let low = BigUint::from(c.low);
    r.push(exact_at_most("low_epoch_count", "M <= 4^(s(k-1)) sum_(r<T_s) C(s,r) 3^(s-r)", &c.bound, &low));
    if 2 * c.t_s <= c.s {
        r.push(exact_at_most("low_epoch_chain", "M <= 4^(s(k-1)) T_s 3^s C(s,T_s)", &c.chain_bound, &low));
    }
    r.push(BoundEntry::equal(
        "epoch_partition",
        "low + high = games",
        c.games as f64,
        (c.low + c.high) as f64,
        0.0,
    ));
    r.push(BoundEntry::report("E_s", "E_s vs alpha s / 2", alpha * c.s as f64 / 2.0, c.e_s()));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn k2_p1_table() {
        let t = enumerate_signatures(2, 1).unwrap();
        assert_eq!(t.total, BigUint::from(16u32));
        assert_eq!(t.range_box(), (-3, 3));
        assert_eq!(t.out_of_box(), 0);
        assert!(minkowski_check(&t).all_hard_pass());
    }

    #[test]
    fn p0_gamelet_is_a_lone_ganz() {
        let t = enumerate_signatures(3, 0).unwrap();
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.counts.get(&vec![2, -1]), Some(&1));
    }

    #[test]
    fn fast_sim_matches_engine() {
        let mut rng = SpinRng::new(11);
        for k in 2..=4 {
            let cfg = GameConfig::slowdel(k, 5).unwrap();
            for _ in 0..200 {
                let g = random_gamelet(k, 2, &mut rng);
                let mut st = GameState::new_game(cfg).unwrap();
                let start = st.stacks.clone();
                for &o in &g {
                    st.step(o, None).unwrap();
                }
                let pay: Vec<i64> = st.stacks.iter().zip(&start).map(|(a, b)| a - b).collect();
                assert_eq!(signature(k, &g), pay[..k - 1].to_vec());
                assert_eq!(pay.iter().sum::<i64>(), 0);
            }
        }
    }

    #[test]
    fn concatenations_are_zero_sum_and_legal() {
        let t = enumerate_signatures(2, 2).unwrap();
        let c = concat_check(&t, 30, &mut SpinRng::new(3)).unwrap();
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn alpha_for_two_players() {
        assert!(alpha_expression(2, 0.01) > 0.86 && alpha_expression(2, 0.01) < 0.88);
        let a2 = choose_alpha(2).unwrap();
        assert!((0.01..0.5).contains(&a2));
        assert!(choose_alpha(3).unwrap() <= a2);
        assert!(alpha_expression(2, a2 + ALPHA_STEP) <= 0.76);
    }

    #[test]
    fn restorative_trivial_and_single_token() {
        let st = GameState::from_parts(GameConfig::slowdel(2, 5).unwrap(), 2, vec![4, 4], 0).unwrap();
        assert!(restorative_sequence(&st).unwrap().outcomes.is_empty());
        let st = GameState::from_parts(GameConfig::slowdel(2, 5).unwrap(), 1, vec![4, 5], 0).unwrap();
        assert_eq!(restorative_sequence(&st).unwrap().outcomes[0], SpinOutcome::Shtel);
    }

    #[test]
    fn constructed_game_has_exact_length() {
        let a = choose_alpha(2).unwrap();
        let g = construct_long_game(2, 30, 200, a, &mut SpinRng::new(5)).unwrap();
        assert_eq!(g.outcomes.len(), 400);
        assert!(g.epochs >= t_s(a, 200));
        assert_eq!(g.plan.total(), 400);
        g.transcript.replay().unwrap();
    }

    #[test]
    fn infeasible_s_rejected() {
        let a = choose_alpha(2).unwrap();
        assert!(matches!(
            construct_long_game(2, 30, 20, a, &mut SpinRng::new(5)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn low_epoch_counts() {
        let c = count_low_epoch_games(2, 5, 2, 3).unwrap();
        assert!(c.low <= c.games);
        assert!(low_epoch_report(&c, 0.02).all_hard_pass());
        let z = count_low_epoch_games(2, 3, 0, 3).unwrap();
        assert_eq!(z.low, 0);
    }

    #[test]
    fn low_epoch_dfs_matches_engine() {
        // Cross-check the fast counter against the epoch engine on every
        // sequence of 6 spins.
        let (k, s, n) = (2usize, 3u64, 2i64);
        let c = count_low_epoch_games(k, s, 2, n).unwrap();
        let start = metaslowdel_start(k, n, n - 1).unwrap();
        let (mut games, mut low, mut sum) = (0u64, 0u64, 0u64);
        for code in 0..4u32.pow(6) {
            let seq: Vec<SpinOutcome> = (0..6).map(|i| SpinOutcome::from_bits(((code >> (2 * i)) & 3) as u8)).collect();
            if let Ok(rec) = validate_metaslowdel(&start, n, &seq) {
                games += 1;
                sum += rec.t;
                low += u64::from(rec.t < 2);
            }
        }
        assert_eq!((c.games, c.low, c.epoch_sum), (games, low, sum));
    }

    proptest! {
        #[test]
        fn restorative_endpoint_valid(k in 2usize..=5, pot in 1i64..=100, raw in proptest::collection::vec(-50i64..=50, 5)) {
            let stacks = raw[..k].to_vec();
            let st = GameState::from_parts(GameConfig::slowdel(k, 1).unwrap(), pot, stacks.clone(), 0).unwrap();
            let r = restorative_sequence(&st).unwrap();
            prop_assert_eq!(r.end.pot, k as i64);
            prop_assert!(r.eps.iter().all(|&e| e == 0 || e == 1));
            let n_eff = stacks.iter().map(|s| s.abs()).max().unwrap().max((pot + k as i64 - 1) / k as i64).max(1);
            prop_assert!(r.outcomes.len() as i64 <= 6 * k as i64 * n_eff);
        }
    }
}
