//! The fourteen acceptance criteria, run in order with one summary line
//! each. Every criterion is evaluated even when an earlier one fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use dreidel_core::chain::bounds::{bound_tables, PROB_TOL, STABILITY_TOL, TIME_TOL};
use dreidel_core::chain::game_chain::{absorption_stats, build_game_chain, exact_mean_duration_rational, game_start};
use dreidel_core::chain::exact::to_f64;
use dreidel_core::chain::identities::check_identities;
use dreidel_core::chain::{build_pot_chain, diagnostics, Flavor};
use dreidel_core::game::halb_split;
use dreidel_core::gamelet::{
    choose_alpha, concat_check, construct_long_game, count_low_epoch_games, enumerate_signatures, restorative_sequence,
    t_s,
};
use dreidel_core::mc_lab::{self, PayoffStats};
use dreidel_core::{cli, GameConfig, GameState, SpinOutcome, SpinRng, StepEvent, Terminal};

const SIGMAS: f64 = 3.0;

#[derive(Default)]
struct Check {
    fails: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn require(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.fails.push(msg.into());
        }
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    fn within(&mut self, elapsed: Duration, limit: f64, what: &str) {
        let s = elapsed.as_secs_f64();
        self.require(s < limit, format!("{what} took {s:.2} s, limit {limit} s"));
    }
}

fn run_criterion(id: u32, title: &str, f: impl FnOnce(&mut Check)) -> bool {
    let t0 = Instant::now();
    let mut c = Check::default();
    if let Err(p) = catch_unwind(AssertUnwindSafe(|| f(&mut c))) {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        c.fails.push(format!("panicked: {msg}"));
    }
    let pass = c.fails.is_empty();
    println!(
        "criterion {id:>2}: {} {title} ({:.1} s)",
        if pass { "PASS" } else { "FAIL" },
        t0.elapsed().as_secs_f64()
    );
    for n in &c.notes {
        println!("      {n}");
    }
    for f in &c.fails {
        println!("      FAILED: {f}");
    }
    pass
}

fn rules(c: &mut Check) {
    let t0 = Instant::now();
    // The spinner takes floor(pot/2).
    for pot in 0..40i64 {
        let (take, left) = halb_split(pot);
        c.require(take + left == pot && take == pot / 2 && left >= take, format!("halb_split({pot})"));
    }
    c.require(halb_split(5) == (2, 3) && halb_split(1) == (0, 1), "halb_split(5), halb_split(1)");

    // Ganz empties the pot and everyone antes one.
    let cfg = GameConfig::dreidel(3, 4).unwrap();
    let mut st = GameState::new_game(cfg).unwrap();
    c.require(st.pot == 3 && st.stacks == vec![3, 3, 3], "opening ante");
    let mut ev = Vec::new();
    st.step(SpinOutcome::Ganz, Some(&mut ev)).unwrap();
    c.require(st.pot == 3 && st.stacks == vec![5, 2, 2] && st.turn == 1, "Ganz then ante");
    c.require(ev.iter().any(|e| matches!(e, StepEvent::AnteCollected { payers } if payers.len() == 3)), "ante event");

    // Halb from 1 takes nothing; Shtel from zero tokens eliminates and
    // leaves the pot alone.
    let mut st = GameState::from_parts(GameConfig::dreidel(2, 2).unwrap(), 1, vec![0, 3], 0).unwrap();
    st.step(SpinOutcome::Halb, None).unwrap();
    c.require(st.pot == 1 && st.stacks == vec![0, 3], "Halb at pot 1");
    let mut st = GameState::from_parts(GameConfig::dreidel(2, 2).unwrap(), 1, vec![0, 3], 0).unwrap();
    let mut ev = Vec::new();
    st.step(SpinOutcome::Shtel, Some(&mut ev)).unwrap();
    c.require(
        st.pot == 1 && ev.contains(&StepEvent::Eliminated { player: 0 }) && st.terminal() == Terminal::Winner { player: 1 },
        "failed Shtel eliminates",
    );
    // Failing to ante eliminates.
    let mut st = GameState::from_parts(GameConfig::dreidel(3, 2).unwrap(), 2, vec![0, 1, 1], 1).unwrap();
    let mut ev = Vec::new();
    st.step(SpinOutcome::Ganz, Some(&mut ev)).unwrap();
    c.require(!st.alive[0] && st.alive[1] && st.alive[2] && st.stacks == vec![0, 2, 0], "failed ante eliminates");
    // Turns skip eliminated seats.
    c.require(st.turn == 2, "turn skips the eliminated seat");

    // Conservation over random games in both modes.
    let mut rng = SpinRng::new(42);
    for (i, overdraft) in [(0, false), (1, true)] {
        for k in 2..=5 {
            let cfg = GameConfig::new(k, 4, overdraft).unwrap();
            let mut st = GameState::new_game(cfg).unwrap();
            let total = cfg.total_tokens();
            for _ in 0..5_000 {
                if st.is_over() {
                    break;
                }
                st.step(rng.spin(), None).unwrap();
                if st.tokens() != total || (!overdraft && st.stacks.iter().any(|&s| s < 0)) || (st.pot < 1 && !st.is_over()) {
                    c.require(false, format!("conservation broken, mode {i}, k = {k}"));
                    break;
                }
            }
        }
    }
    c.within(t0.elapsed(), 1.0, "rules checks");
}

fn ganz_wait(c: &mut Check) {
    let t0 = Instant::now();
    let w = mc_lab::ganz_wait(1_000_000, 2024, None).unwrap();
    c.note(format!("mean wait {:.4}", w.mean));
    c.require((3.98..=4.02).contains(&w.mean), format!("mean {} outside [3.98, 4.02]", w.mean));
    c.within(t0.elapsed(), 10.0, "1e6 waits");
}

fn samples() -> Vec<(usize, PayoffStats)> {
    [2usize, 3, 4]
        .into_iter()
        .map(|k| (k, mc_lab::payoff_sample(k, 10, 1_000_000, 100 + k as u64).unwrap()))
        .collect()
}

fn binom_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn tails(c: &mut Check, s: &[(usize, PayoffStats)]) {
    for (k, st) in s {
        let mut worst = f64::INFINITY;
        for q in 0..=15u64 {
            let m = *k as u64 * q + 1;
            let hits: u64 = st.length_hist.range(m..).map(|(_, &c)| c).sum();
            let p = hits as f64 / st.count as f64;
            let bound = 0.75f64.powi(q as i32);
            let slack = bound + SIGMAS * binom_se(bound, st.count) - p;
            worst = worst.min(slack);
            c.require(slack >= 0.0, format!("k = {k}, q = {q}: tail {p} above {bound}"));
        }
        c.note(format!("k = {k}: smallest slack {worst:.2e}"));
    }
}

fn landslides(c: &mut Check, s: &[(usize, PayoffStats)]) {
    for (k, st) in s.iter().filter(|(k, _)| *k <= 3) {
        let p = 0.25f64.powi(*k as i32);
        let f = st.landslides as f64 / st.count as f64;
        let se = binom_se(p, st.count);
        c.note(format!("k = {k}: frequency {f:.5} vs {p:.5}"));
        c.require((f - p).abs() <= SIGMAS * se, format!("k = {k}: landslide frequency {f} vs {p}"));
        c.require(st.landslide_payoff_mismatches == 0, format!("k = {k}: landslide payoff not 2k - 2"));
    }
}

fn moments(c: &mut Check, s: &[(usize, PayoffStats)]) {
    for (k, st) in s {
        let n = st.count as f64;
        let (mut s1, mut s2, mut s4) = (0f64, 0f64, 0f64);
        for (&y, &cnt) in &st.payoff_hist {
            let (y, w) = (y as f64, cnt as f64);
            s1 += w * y;
            s2 += w * y * y;
            s4 += w * y.powi(4);
        }
        let (mu, m2) = (s1 / n, s2 / n);
        let var = m2 - mu * mu;
        let se_m2 = ((s4 / n - m2 * m2) / n).sqrt();
        let kf = *k as f64;
        c.note(format!("k = {k}: E(Y^2) {m2:.4}, mean {mu:.4}, variance {var:.3}"));
        c.require(m2 >= 0.25 - SIGMAS * se_m2, format!("k = {k}: E(Y^2) = {m2}"));
        c.require(mu.abs() <= 5.0 * kf, format!("k = {k}: |mean| = {}", mu.abs()));
        c.require(var <= 41.0 * kf * kf, format!("k = {k}: variance {var}"));
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn wald(c: &mut Check) {
    let (k, n, w0) = (2usize, 4i64, 3i64);
    let recs = mc_lab::stopping_sample(k, n, w0, 100_000, 77, None).unwrap();
    let st = mc_lab::payoff_sample(k, n, 1_000_000, 78).unwrap();
    let mu = st.mean();
    let sigma2 = st.variance();
    let se_mu = (sigma2 / st.count as f64).sqrt();
    let se_sigma2 = ((st.central_moment4() - sigma2 * sigma2) / st.count as f64).sqrt();
    let r = recs.len() as f64;
    let t: Vec<f64> = recs.iter().map(|x| x.t as f64).collect();
    let (et, var_t) = mean_var(&t);
    let d: Vec<f64> = recs.iter().map(|x| x.s_t as f64 - mu * x.t as f64).collect();
    let (ed, var_d) = mean_var(&d);
    let se1 = (var_d / r + (et * se_mu).powi(2)).sqrt();
    c.note(format!("E(S_T) - mu E(T) = {ed:.4}, tolerance {:.4}", SIGMAS * se1));
    c.require(ed.abs() <= SIGMAS * se1, format!("first identity off by {ed}"));
    let d2: Vec<f64> = d.iter().map(|x| x * x).collect();
    let (ed2, var_d2) = mean_var(&d2);
    let se2 = (var_d2 / r + (et * se_sigma2).powi(2) + (sigma2 * (var_t / r).sqrt()).powi(2)).sqrt();
    let gap = ed2 - sigma2 * et;
    c.note(format!("E[(S_T - mu T)^2] = {ed2:.3}, sigma^2 E(T) = {:.3}, tolerance {:.3}", sigma2 * et, SIGMAS * se2));
    c.require(gap.abs() <= SIGMAS * se2, format!("second identity off by {gap}"));
    let st2: Vec<f64> = recs.iter().map(|x| (x.s_t as f64).powi(2)).collect();
    c.note(format!("report only: E(S_T^2) = {:.3} against sigma^2 E(T) = {:.3}", mean_var(&st2).0, sigma2 * et));
}

fn oracle(c: &mut Check) {
    for n in 2..=8i64 {
        let kern = build_game_chain(n).unwrap();
        let exact = absorption_stats(&kern, &game_start(n)).unwrap().expected_time;
        let est = mc_lab::estimate_mean_duration(GameConfig::dreidel(2, n).unwrap(), 100_000, 500 + n as u64, None).unwrap();
        let (lo, hi) = est.ci99.unwrap();
        c.note(format!("n = {n}: exact {exact:.4}, MC {:.4} [{lo:.4}, {hi:.4}]", est.mean));
        c.require(lo <= exact && exact <= hi, format!("n = {n}: exact {exact} outside 99% interval"));
        let rational = to_f64(&exact_mean_duration_rational(n).unwrap());
        let rel = (rational - exact).abs() / rational.abs().max(1.0);
        c.require(rel <= 1e-9, format!("n = {n}: rational {rational} vs float {exact}"));
    }
}

fn scaling(c: &mut Check) {
    let ns = [5i64, 10, 15, 20, 30, 40];
    let mut pts = Vec::new();
    for &n in &ns {
        let mu = absorption_stats(&build_game_chain(n).unwrap(), &game_start(n)).unwrap().expected_time;
        c.note(format!("n = {n}: mu_d = {mu:.3}, mu_d / (104 n^2 / 3) = {:.4}", mu / (104.0 * (n * n) as f64 / 3.0)));
        pts.push(((n as f64).ln(), mu.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    c.note(format!("log-log slope {slope:.4}"));
    c.require((1.7..=2.2).contains(&slope), format!("slope {slope} outside [1.7, 2.2]"));
}

fn pot_chain(c: &mut Check) {
    let kern = build_pot_chain(200).unwrap();
    let d = diagnostics(&kern).unwrap();
    let st = d.stationary.expect("pot chain is ergodic");
    let i2 = kern.index_of(&2).unwrap();
    let pi2 = st.pi[i2];
    // Independent residual of pi P = pi.
    let mut next = vec![0.0; kern.len()];
    for (i, &p) in st.pi.iter().enumerate() {
        for (j, w) in kern.row(i) {
            next[j] += p * w;
        }
    }
    let res = next.iter().zip(&st.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    c.note(format!("pi_2 = {pi2:.6}, residual {res:.1e}, return time {:.4}", 1.0 / pi2));
    c.require(pi2 >= 6.0 / 13.0 - 1e-9, format!("pi_2 = {pi2} below 6/13"));
    c.require(pi2 > 0.25, "pi_2 not above 1/4");
    c.require(res < 1e-10, format!("residual {res}"));
    c.require(1.0 / pi2 <= 4.0 + 1e-9, format!("return time {}", 1.0 / pi2));
}

fn identities(c: &mut Check) {
    for n in 3..=8 {
        for f in [Flavor::GameFaithful, Flavor::FormalLambda] {
            let r = check_identities(n, f, None, 100, 9000 + n as u64).unwrap();
            c.require(r.queries == 100, "query count");
            c.require(r.complementarity < 1e-10, format!("n = {n} {}: complementarity {:e}", f.as_str(), r.complementarity));
            c.require(r.translation < 1e-10, format!("n = {n} {}: translation {:e}", f.as_str(), r.translation));
            c.note(format!(
                "n = {n} {:<6}: complementarity {:.1e}, translation {:.1e}, duality {:.1e} (reported)",
                f.as_str(),
                r.complementarity,
                r.translation,
                r.duality
            ));
        }
    }
}

fn bounds(c: &mut Check) {
    for n in 3..=8i64 {
        let t = bound_tables(n, Flavor::GameFaithful, None).unwrap();
        let v = &t.values;
        let nf = n as f64;
        c.require(v.a[0] >= 0.25 - PROB_TOL, format!("n = {n}: A_1 = {}", v.a[0]));
        c.require(v.b[0] >= 1.0 / 64.0 - PROB_TOL, format!("n = {n}: B_1 = {}", v.b[0]));
        c.require(v.a.len() == n as usize + 1 && v.b.len() == n as usize + 1, "table length");
        for m in 1..=n as usize + 1 {
            let mf = m as f64;
            c.require(v.a[m - 1] >= 1.0 / (mf + 3.0) - PROB_TOL, format!("n = {n}: A_{m} = {}", v.a[m - 1]));
            c.require(v.b[m - 1] >= 1.0 / (mf + 63.0) - PROB_TOL, format!("n = {n}: B_{m} = {}", v.b[m - 1]));
        }
        c.require(v.omega1 >= 0.125 - PROB_TOL, format!("n = {n}: omega_1 = {}", v.omega1));
        c.require(v.omega2 >= 0.125 - PROB_TOL, format!("n = {n}: omega_2 = {}", v.omega2));
        c.require(v.p_f >= 1.0 / (4.0 * (nf + 63.0)) - PROB_TOL, format!("n = {n}: p_f = {}", v.p_f));
        c.require(v.mu0 <= 13.0 * (2.0 * nf + 3.0) / 3.0 + TIME_TOL, format!("n = {n}: mu_0 = {}", v.mu0));
        c.require(t.mu_d <= v.mu0 / v.p_f + TIME_TOL, format!("n = {n}: mu_d = {} > {}", t.mu_d, v.mu0 / v.p_f));
        c.require(t.stability < STABILITY_TOL, format!("n = {n}: cap doubling moved values by {}", t.stability));
        c.note(format!(
            "n = {n}: A_1 {:.3}, B_1 {:.3}, omega {:.3}/{:.3}, p_f {:.3}, mu_0 {:.2}, mu_d {:.2}",
            v.a[0], v.b[0], v.omega1, v.omega2, v.p_f, v.mu0, t.mu_d
        ));
        let formal = bound_tables(n, Flavor::FormalLambda, None).unwrap();
        let misses: Vec<String> = formal
            .report
            .entries
            .iter()
            .filter(|e| !e.passed())
            .map(|e| e.name.clone())
            .collect();
        if !misses.is_empty() {
            c.note(format!("n = {n}: formal flavor misses (reported) {}", misses.join(", ")));
        }
    }
}

fn gamelets(c: &mut Check) {
    let t0 = Instant::now();
    for (k, p_max) in [(2usize, 6usize), (3, 3)] {
        for p in 1..=p_max {
            let t = enumerate_signatures(k, p).unwrap();
            let total = t.counts.values().fold(BigUint::zero(), |a, &x| a + x);
            let expected = BigUint::from(4u32).pow((p * k) as u32);
            c.require(total == expected && t.total == expected, format!("k = {k}, p = {p}: total {total}"));
            let (lo, hi) = (-((p * k) as i64) - 1, (k as i64 - 1) * (2 * p as i64 + 1));
            c.require(
                t.counts.keys().all(|u| u.iter().all(|&v| (lo..=hi).contains(&v))),
                format!("k = {k}, p = {p}: signature outside [{lo}, {hi}]"),
            );
            let kk = k as u32;
            let pow_sum = t.counts.values().fold(BigUint::zero(), |a, &x| a + BigUint::from(x).pow(kk));
            let cells = BigUint::from(t.counts.len());
            c.require(
                &pow_sum * cells.pow(kk - 1) >= expected.pow(kk),
                format!("k = {k}, p = {p}: power-mean inequality fails"),
            );
            let displayed = &pow_sum * BigUint::from(3 * p * k).pow(kk - 1) >= expected.pow(kk);
            if k == 2 {
                c.require(displayed, format!("k = 2, p = {p}: sum x^2 below 16^(2p) / 6p"));
            } else {
                let ratio = pow_sum.to_f64().unwrap() * ((3 * p * k) as f64).powi(kk as i32 - 1) / expected.to_f64().unwrap().powi(kk as i32);
                c.note(format!("k = {k}, p = {p}: displayed box bound ratio {ratio:.3} (reported)"));
            }
        }
        let t = enumerate_signatures(k, 2).unwrap();
        let cc = concat_check(&t, 100, &mut SpinRng::new(31 + k as u64)).unwrap();
        c.require(cc.passed(), format!("k = {k}: concatenations {cc:?}"));
    }
    c.within(t0.elapsed(), 300.0, "gamelet checks");
}

fn construction(c: &mut Check) {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    });
    let strat = (2usize..=5, 1i64..=100, proptest::collection::vec(-50i64..=50, 5));
    let worst = std::cell::Cell::new(0.0f64);
    let res = runner.run(&strat, |(k, pot, raw)| {
        let stacks = raw[..k].to_vec();
        let st = GameState::from_parts(GameConfig::slowdel(k, 1).unwrap(), pot, stacks.clone(), 0).unwrap();
        let r = restorative_sequence(&st).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let kk = k as i64;
        prop_assert_eq!(r.end.pot, kk);
        prop_assert_eq!(r.end.turn, 0);
        let (mx, mn) = (*r.end.stacks.iter().max().unwrap(), *r.end.stacks.iter().min().unwrap());
        prop_assert!(mx - mn <= 1);
        let n_eff = stacks.iter().map(|s| s.abs()).max().unwrap().max((pot + kk - 1) / kk).max(1);
        let len = r.outcomes.len() as f64;
        worst.set(worst.get().max(len / (6 * kk * n_eff) as f64));
        prop_assert!(len <= (6 * kk * n_eff) as f64);
        Ok(())
    });
    c.require(res.is_ok(), format!("restorative phase: {res:?}"));
    c.note(format!("restorative length at most {:.3} of 6kn", worst.get()));

    for k in [2usize, 3] {
        let alpha = choose_alpha(k).unwrap();
        for n in [20i64, 40] {
            for s in [100u64, 200, 400] {
                match construct_long_game(k, n, s, alpha, &mut SpinRng::new(s + n as u64)) {
                    Ok(g) => {
                        let replay = g.transcript.replay();
                        c.require(replay.is_ok(), format!("k = {k}, n = {n}, s = {s}: replay {replay:?}"));
                        c.require(g.outcomes.len() as u64 == k as u64 * s, format!("k = {k}, n = {n}, s = {s}: length"));
                        c.require(g.epochs >= t_s(alpha, s), format!("k = {k}, n = {n}, s = {s}: epochs {}", g.epochs));
                        c.require(g.stopping.u == k as u64 * s, format!("k = {k}, n = {n}, s = {s}: stop at {}", g.stopping.u));
                    }
                    Err(e) => c.require(false, format!("k = {k}, n = {n}, s = {s}: {e}")),
                }
            }
        }
    }

    for s in 1..=6u64 {
        for t in 0..=s {
            for n in [2i64, 3, 4] {
                let cnt = count_low_epoch_games(2, s, t, n).unwrap();
                c.require(BigUint::from(cnt.low) <= cnt.bound, format!("s = {s}, T_s = {t}, n = {n}: {} > {}", cnt.low, cnt.bound));
                c.require(cnt.low + cnt.high == cnt.games, "partition");
            }
        }
    }
}

fn reproducibility(c: &mut Check) {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["simulate", "--k", "2", "--n", "2..5", "--trials", "5000", "--seed", "7"],
        &["simulate", "--k", "3", "--n", "4", "--trials", "3000", "--format", "json"],
        &["epochs", "--k", "3", "--n", "5", "--epochs", "20000"],
        &["wald", "--k", "2", "--n", "4", "--trials", "2000", "--epochs", "20000"],
        &["exact", "--n", "2..6"],
        &["pot-chain", "--pmax", "100"],
        &["hitprob", "--n", "4", "--start", "3,1", "--target", "5,2", "--avoid", "2,1", "--flavor", "formal"],
        &["bounds", "--n", "3", "--queries", "10"],
        &["gamelets", "--k", "3", "--p", "1", "--trials", "20"],
        &["construct", "--k", "2", "--n", "20", "--format", "json"],
        &["scaling", "--n", "5,10,20", "--trials", "0"],
        &["scaling", "--k", "3", "--n", "3,4", "--trials", "2000"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let out = dir.path().join(format!("run{i}.out"));
        let plots = dir.path().join(format!("plots{i}"));
        let mut files = Vec::new();
        for jobs in ["1", "4"] {
            let mut argv = vec!["dreidel"];
            argv.extend_from_slice(args);
            argv.extend(["--out", out.to_str().unwrap(), "--plot-dir", plots.to_str().unwrap(), "--jobs", jobs]);
            let code = cli::dispatch(argv);
            c.require(code == 0, format!("{} exited {code}", args.join(" ")));
            let mut snapshot = vec![std::fs::read(&out).unwrap_or_default()];
            let mut names: Vec<_> = std::fs::read_dir(&plots).map(|d| d.flatten().map(|e| e.path()).collect()).unwrap_or_default();
            names.sort();
            for p in names {
                snapshot.push(std::fs::read(p).unwrap());
            }
            files.push(snapshot);
        }
        c.require(!files[0][0].is_empty() && files[0][0].starts_with(b"#") || files[0][0].starts_with(b"{"), format!("{}: header", args[0]));
        c.require(files[0] == files[1], format!("{} differs between runs", args.join(" ")));
    }
    c.note(format!("{} command lines repeated with 1 and 4 threads", runs.len()));
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    results.push(run_criterion(1, "rules semantics", rules));
    results.push(run_criterion(2, "waiting time for Ganz", ganz_wait));
    let s = samples();
    results.push(run_criterion(3, "epoch length tails", |c| tails(c, &s)));
    results.push(run_criterion(4, "landslide epochs", |c| landslides(c, &s)));
    results.push(run_criterion(5, "payoff moments", |c| moments(c, &s)));
    results.push(run_criterion(6, "Wald identities", wald));
    results.push(run_criterion(7, "exact against Monte Carlo durations", oracle));
    results.push(run_criterion(8, "duration scaling", scaling));
    results.push(run_criterion(9, "pot chain", pot_chain));
    results.push(run_criterion(10, "chain identities", identities));
    results.push(run_criterion(11, "hitting-bound tables", bounds));
    results.push(run_criterion(12, "gamelet signatures", gamelets));
    results.push(run_criterion(13, "long-game construction", construction));
    results.push(run_criterion(14, "reproducible CLI output", reproducibility));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    assert_eq!(passed, results.len(), "some acceptance criteria failed");
}
