//! Monte Carlo estimators and bound checks for the epoch analysis.
//!
//! Every accumulator is integer-valued (counts, sums, sums of squares), so
//! merging partial results from parallel workers is exact and the final
//! numbers do not depend on scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::game_chain;
use crate::error::{Error, Result};
use crate::game::{game_duration, GameConfig, SpinOutcome, DEFAULT_SPIN_CAP};
use crate::report::{csv_err, finish_csv, fmt_num, BoundEntry, BoundReport};
use crate::rng::SpinRng;
use crate::variants::{self, EpochStream, StoppingRecord};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.576;
/// Tolerance multiplier for pass/fail checks.
pub const SIGMAS: f64 = 3.0;

/// Runs `f` on a pool of `jobs` threads, or the global pool when `None`.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Exact running sums of a non-negative integer sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Moments {
    pub count: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl Moments {
    pub fn push(&mut self, x: u64) {
        self.count += 1;
        self.sum += x as u128;
        self.sum_sq += (x as u128) * (x as u128);
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.count as f64
    }

    /// Unbiased sample variance; `None` below two samples.
    pub fn sample_variance(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        let n = self.count as f64;
        let mean = self.mean();
        Some(((self.sum_sq as f64) - n * mean * mean).max(0.0) / (n - 1.0))
    }

    pub fn se(&self) -> Option<f64> {
        self.sample_variance()
            .map(|v| (v / self.count as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationEstimate {
    pub k: usize,
    pub n: i64,
    pub trials: u64,
    pub mean: f64,
    /// Undefined for a single trial.
    pub se: Option<f64>,
    pub ci99: Option<(f64, f64)>,
}

impl DurationEstimate {
    pub fn half_width(&self) -> Option<f64> {
        self.se.map(|s| Z99 * s)
    }

    pub fn covers(&self, value: f64) -> bool {
        match self.ci99 {
            Some((lo, hi)) => lo <= value && value <= hi,
            None => false,
        }
    }
}

/// Mean game duration in spins over `trials` independent ordinary games.
pub fn estimate_mean_duration(
    config: GameConfig,
    trials: u64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<DurationEstimate> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let m = with_jobs(jobs, || {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = SpinRng::for_trial(seed, i);
                game_duration(config, &mut rng, DEFAULT_SPIN_CAP).map(|d| {
                    let mut m = Moments::default();
                    m.push(d);
                    m
                })
            })
            .try_reduce(Moments::default, |a, b| Ok(a.merge(b)))
    })?;
    let se = m.se();
    Ok(DurationEstimate {
        k: config.k,
        n: config.n,
        trials,
        mean: m.mean(),
        se,
        ci99: se.map(|s| (m.mean() - Z99 * s, m.mean() + Z99 * s)),
    })
}

/// Statistics of the last seat's epoch payoff `Y` in free-running slowdel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PayoffStats {
    pub k: usize,
    pub count: u64,
    pub payoff_hist: BTreeMap<i64, u64>,
    pub length_hist: BTreeMap<u64, u64>,
    pub landslides: u64,
    /// Landslide epochs whose last-seat payoff differed from `2k - 2`.
    pub landslide_payoff_mismatches: u64,
    /// `sum of Y_i * Y_{i+1}` over consecutive epochs.
    pub lag1_sum: i128,
}

impl PayoffStats {
    fn raw_moment(&self, p: i32) -> f64 {
        let n = self.count as f64;
        self.payoff_hist
            .iter()
            .map(|(&y, &c)| (y as f64).powi(p) * c as f64)
            .sum::<f64>()
            / n
    }

    pub fn mean(&self) -> f64 {
        let s: i128 = self
            .payoff_hist
            .iter()
            .map(|(&y, &c)| y as i128 * c as i128)
            .sum();
        s as f64 / self.count as f64
    }

    pub fn second_moment(&self) -> f64 {
        let s: i128 = self
            .payoff_hist
            .iter()
            .map(|(&y, &c)| (y as i128) * (y as i128) * c as i128)
            .sum();
        s as f64 / self.count as f64
    }

    /// `E(Y^2) - E(Y)^2`.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.second_moment() - mu * mu
    }

    pub fn abs_mean(&self) -> f64 {
        self.payoff_hist
            .iter()
            .map(|(&y, &c)| y.unsigned_abs() as f64 * c as f64)
            .sum::<f64>()
            / self.count as f64
    }

    pub fn central_moment4(&self) -> f64 {
        let mu = self.mean();
        self.payoff_hist
            .iter()
            .map(|(&y, &c)| (y as f64 - mu).powi(4) * c as f64)
            .sum::<f64>()
            / self.count as f64
    }

    pub fn se_mean(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn se_second_moment(&self) -> f64 {
        let m2 = self.second_moment();
        ((self.raw_moment(4) - m2 * m2).max(0.0) / self.count as f64).sqrt()
    }

    pub fn se_variance(&self) -> f64 {
        let v = self.variance();
        ((self.central_moment4() - v * v).max(0.0) / self.count as f64).sqrt()
    }

    pub fn se_abs_mean(&self) -> f64 {
        let m = self.abs_mean();
        ((self.second_moment() - m * m).max(0.0) / self.count as f64).sqrt()
    }

    pub fn lag1_autocorrelation(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let mu = self.mean();
        let cov = self.lag1_sum as f64 / (self.count - 1) as f64 - mu * mu;
        cov / self.variance()
    }

    /// Empirical `P(epoch length >= m)`.
    pub fn length_tail(&self, m: u64) -> f64 {
        let hits: u64 = self.length_hist.range(m..).map(|(_, &c)| c).sum();
        hits as f64 / self.count as f64
    }

    /// Empirical `P(|Y| >= t)`.
    pub fn abs_payoff_tail(&self, t: i64) -> f64 {
        let hits: u64 = self
            .payoff_hist
            .iter()
            .filter(|(&y, _)| y.abs() >= t)
            .map(|(_, &c)| c)
            .sum();
        hits as f64 / self.count as f64
    }

    pub fn landslide_frequency(&self) -> f64 {
        self.landslides as f64 / self.count as f64
    }

    pub fn max_length(&self) -> u64 {
        self.length_hist.keys().next_back().copied().unwrap_or(0)
    }
}

/// Binomial standard error of an empirical frequency.
pub fn freq_se(p: f64, count: u64) -> f64 {
    (p * (1.0 - p) / count as f64).sqrt()
}

/// Statistics over `epochs` consecutive epochs of one slowdel stream.
pub fn payoff_sample(k: usize, n: i64, epochs: u64, seed: u64) -> Result<PayoffStats> {
    let start = variants::metaslowdel_start(k, n, n - 1)?;
    let mut rng = SpinRng::new(seed);
    let stream = EpochStream::new(start, &mut rng)?;
    let mut stats = PayoffStats {
        k,
        ..Default::default()
    };
    let mut prev: Option<i64> = None;
    let landslide_payoff = 2 * k as i64 - 2;
    for rec in stream.take(epochs as usize) {
        let rec = rec?;
        let y = rec.last_seat_payoff();
        stats.count += 1;
        *stats.payoff_hist.entry(y).or_default() += 1;
        *stats.length_hist.entry(rec.spins).or_default() += 1;
        if rec.classify().landslide {
            stats.landslides += 1;
            if y != landslide_payoff {
                stats.landslide_payoff_mismatches += 1;
            }
        }
        if let Some(p) = prev {
            stats.lag1_sum += p as i128 * y as i128;
        }
        prev = Some(y);
    }
    Ok(stats)
}

/// Epoch-length tail against `(3/4)^q` for `m = kq + 1`, and the `|Y|` tail
/// against `(3/4)^(u-1)` for `t = ku + v`.
pub fn tail_report(stats: &PayoffStats, k: usize, q_max: u64) -> BoundReport {
    let mut r = BoundReport::new(format!("epoch tails, k = {k}"));
    let n = stats.count;
    for q in 0..=q_max {
        let m = k as u64 * q + 1;
        let p = stats.length_tail(m);
        let bound = 0.75f64.powi(q as i32);
        r.push(
            BoundEntry::at_most(
                "epoch_length_tail",
                "P(len >= kq+1) <= (3/4)^q",
                bound,
                p,
                SIGMAS * freq_se(p, n),
            )
            .with_index(q as i64),
        );
    }
    let t_max = (k as u64 * (q_max + 1)) as i64;
    for t in 1..=t_max {
        let u = (t - 1) / k as i64;
        let bound = 0.75f64.powi(u as i32 - 1);
        let p = stats.abs_payoff_tail(t);
        r.push(
            BoundEntry::at_most(
                "abs_payoff_tail",
                "P(|Y| >= t) <= (3/4)^(u-1), t = ku+v",
                bound,
                p,
                SIGMAS * freq_se(p, n),
            )
            .with_index(t),
        );
    }
    r
}

/// Moment bounds on `Y`: `E(Y^2) >= 1/4`, `|mu| <= E|Y| <= 5k`,
/// `sigma^2 <= 41k^2`, and the landslide frequency `4^-k`.
pub fn moment_report(stats: &PayoffStats, k: usize) -> BoundReport {
    let mut r = BoundReport::new(format!("payoff moments, k = {k}"));
    let kf = k as f64;
    let mu = stats.mean();
    r.push(BoundEntry::at_least(
        "second_moment",
        "E(Y^2) >= 1/4",
        0.25,
        stats.second_moment(),
        SIGMAS * stats.se_second_moment(),
    ));
    r.push(BoundEntry::at_most(
        "abs_mean",
        "|mu| <= 5k",
        5.0 * kf,
        mu.abs(),
        SIGMAS * stats.se_mean(),
    ));
    r.push(BoundEntry::at_most(
        "mean_abs_payoff",
        "E|Y| <= 5k",
        5.0 * kf,
        stats.abs_mean(),
        SIGMAS * stats.se_abs_mean(),
    ));
    r.push(BoundEntry::at_most(
        "variance",
        "sigma^2 <= 41k^2",
        41.0 * kf * kf,
        stats.variance(),
        SIGMAS * stats.se_variance(),
    ));
    // Only claimed when |mu| < 1/10.
    r.push(BoundEntry::report(
        "variance_lower",
        "sigma^2 > 6/25 when |mu| < 1/10",
        6.0 / 25.0,
        stats.variance(),
    ));
    let freq = stats.landslide_frequency();
    let expect = 4f64.powi(-(k as i32));
    r.push(BoundEntry::equal(
        "landslide_frequency",
        "P(S^(k-1) G epoch) = 4^-k",
        expect,
        freq,
        SIGMAS * freq_se(expect, stats.count),
    ));
    r.push(BoundEntry::equal(
        "landslide_payoff_mismatches",
        "landslide payoff = 2k-2",
        0.0,
        stats.landslide_payoff_mismatches as f64,
        0.0,
    ));
    r
}

/// Stopping records for metaslowdel from `W0`, one independent stream each.
pub fn stopping_sample(
    k: usize,
    n: i64,
    w0: i64,
    runs: u64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<Vec<StoppingRecord>> {
    let start = variants::metaslowdel_start(k, n, w0)?;
    with_jobs(jobs, || {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let mut rng = SpinRng::for_trial(seed, i);
                variants::run_metaslowdel(&start, n, &mut rng)
            })
            .collect()
    })
}

fn mean_and_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = xs.clone().count();
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, var, n)
}

/// Wald identities on stopping records against an independent payoff
/// sample.
pub fn wald_report(
    records: &[StoppingRecord],
    stats: &PayoffStats,
    k: usize,
    n: i64,
) -> BoundReport {
    let mut r = BoundReport::new(format!("Wald identities, k = {k}, n = {n}"));
    let mu = stats.mean();
    let sigma2 = stats.variance();
    let epochs = stats.count as f64;
    let rc = records.len() as f64;

    let (e_t, var_t, _) = mean_and_var(records.iter().map(|x| x.t as f64));
    let (e_st, _, _) = mean_and_var(records.iter().map(|x| x.s_t as f64));

    // S_T - mu T per record, plus the uncertainty in mu itself.
    let (d_mean, d_var, _) =
        mean_and_var(records.iter().map(|x| x.s_t as f64 - mu * x.t as f64));
    let se1 = (d_var / rc + e_t * e_t * sigma2 / epochs).sqrt();
    r.push(BoundEntry::equal(
        "wald_first",
        "E(S_T) = mu E(T)",
        mu * e_t,
        e_st,
        SIGMAS * se1,
    ));
    r.push(BoundEntry::report(
        "wald_first_residual",
        "E(S_T - mu T)",
        0.0,
        d_mean,
    ));

    // (S_T - mu T)^2 - sigma^2 T per record, plus the uncertainty in sigma^2.
    let (q_mean, _, _) = mean_and_var(records.iter().map(|x| {
        let d = x.s_t as f64 - mu * x.t as f64;
        d * d
    }));
    let (_, q_var, _) = mean_and_var(records.iter().map(|x| {
        let d = x.s_t as f64 - mu * x.t as f64;
        d * d - sigma2 * x.t as f64
    }));
    let se_sigma2 = stats.se_variance();
    let se2 = (q_var / rc + e_t * e_t * se_sigma2 * se_sigma2).sqrt();
    r.push(BoundEntry::equal(
        "wald_second",
        "E[(S_T - mu T)^2] = sigma^2 E(T)",
        sigma2 * e_t,
        q_mean,
        SIGMAS * se2,
    ));

    let (e_st2, _, _) = mean_and_var(records.iter().map(|x| (x.s_t as f64).powi(2)));
    let (e_t2, _, _) = mean_and_var(records.iter().map(|x| (x.t as f64).powi(2)));
    r.push(BoundEntry::report(
        "wald_second_variant",
        "E(S_T^2) vs sigma^2 E(T) + mu^2 E(T^2)",
        sigma2 * e_t + mu * mu * e_t2,
        e_st2,
    ));

    let kf = k as f64;
    let nf = n as f64;
    let (e_abs, var_abs, _) = mean_and_var(records.iter().map(|x| x.s_t.unsigned_abs() as f64));
    // kn + k * sum_{q >= n} (3/4)^q = kn + 4k (3/4)^n
    let abs_bound = kf * nf + 4.0 * kf * 0.75f64.powf(nf);
    r.push(BoundEntry::at_most(
        "abs_stopped_sum",
        "E|S_T| <= kn + k sum_{q>=n} (3/4)^q",
        abs_bound,
        e_abs,
        SIGMAS * (var_abs / rc).sqrt(),
    ));
    // k^2 n^2 / 4 + 2k sum_{q >= n} (q+1)(3/4)^q, summed in closed form.
    let sq_bound = kf * kf * nf * nf / 4.0 + 2.0 * kf * 0.75f64.powf(nf) * (4.0 * (nf + 1.0) + 12.0);
    r.push(BoundEntry::report(
        "stopped_sum_second_moment",
        "E(S_T^2) <= k^2 n^2/4 + 2k sum_{q>=n} (q+1)(3/4)^q",
        sq_bound,
        e_st2,
    ));
    r.push(BoundEntry::at_least(
        "triangle",
        "E|S_T| >= |E(S_T)|",
        e_st.abs(),
        e_abs,
        0.0,
    ));
    r.push(BoundEntry::report("mean_epochs", "E(T)", 0.0, e_t));
    r.push(BoundEntry::report(
        "mean_epochs_se",
        "SE of E(T)",
        0.0,
        (var_t / rc).sqrt(),
    ));
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanzWait {
    pub trials: u64,
    pub mean: f64,
    pub se: Option<f64>,
    /// wait length -> count
    pub hist: BTreeMap<u64, u64>,
}

fn merge_hist(mut a: BTreeMap<u64, u64>, b: BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    for (key, c) in b {
        *a.entry(key).or_default() += c;
    }
    a
}

/// Spins until the first Ganz, one stream per trial.
pub fn ganz_wait(trials: u64, seed: u64, jobs: Option<usize>) -> Result<GanzWait> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let (m, hist) = with_jobs(jobs, || {
        (0..trials)
            .into_par_iter()
            .fold(
                || (Moments::default(), BTreeMap::new()),
                |(mut m, mut h), i| {
                    let mut rng = SpinRng::for_trial(seed, i);
                    let mut wait = 1u64;
                    while rng.spin() != SpinOutcome::Ganz {
                        wait += 1;
                    }
                    m.push(wait);
                    *h.entry(wait).or_default() += 1;
                    (m, h)
                },
            )
            .reduce(
                || (Moments::default(), BTreeMap::new()),
                |(ma, ha), (mb, hb)| (ma.merge(mb), merge_hist(ha, hb)),
            )
    });
    Ok(GanzWait {
        trials,
        mean: m.mean(),
        se: m.se(),
        hist,
    })
}

pub fn ganz_report(w: &GanzWait, j_max: u64) -> BoundReport {
    let mut r = BoundReport::new("waiting time for a Ganz");
    r.push(BoundEntry::equal(
        "ganz_wait_mean",
        "E_g = sum j (3/4)^(j-1) (1/4) = 4",
        4.0,
        w.mean,
        // Fixed window at large samples, three standard errors at small ones.
        w.se.map_or(0.02, |se| (SIGMAS * se).max(0.02)),
    ));
    for j in 1..=j_max {
        let p = 0.75f64.powi(j as i32 - 1) * 0.25;
        let freq = w.hist.get(&j).copied().unwrap_or(0) as f64 / w.trials as f64;
        r.push(
            BoundEntry::equal(
                "ganz_wait_pmf",
                "P(wait = j) = (3/4)^(j-1)/4",
                p,
                freq,
                SIGMAS * freq_se(p, w.trials),
            )
            .with_index(j as i64),
        );
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingSource {
    /// Exact absorption times (two players only).
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: i64,
    pub mean: f64,
    pub se: Option<f64>,
    pub exact: Option<f64>,
    pub ratio_to_n2: f64,
    /// mean / (104 n^2 / 3)
    pub ratio_to_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub k: usize,
    pub rows: Vec<ScalingRow>,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from regression residuals (0 for two
    /// points).
    pub slope_se: f64,
}

/// Largest `n` for which the exact column is filled in automatically.
pub const EXACT_AUTO_LIMIT: i64 = 40;

/// Least-squares fit of `log(mean duration)` against `log(n)`.
pub fn scaling_report(
    k: usize,
    ns: &[i64],
    source: ScalingSource,
    jobs: Option<usize>,
) -> Result<ScalingReport> {
    if ns.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "scaling needs at least 2 values of n, got {}",
            ns.len()
        )));
    }
    if source == ScalingSource::Exact && k != 2 {
        return Err(Error::InvalidConfig("exact durations exist only for k = 2".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let exact = if k == 2 && (source == ScalingSource::Exact || n <= EXACT_AUTO_LIMIT) {
            Some(game_chain::exact_mean_duration(n)?)
        } else {
            None
        };
        let (mean, se) = match source {
            ScalingSource::Exact => (exact.unwrap(), None),
            ScalingSource::MonteCarlo { trials, seed } => {
                let est =
                    estimate_mean_duration(GameConfig::dreidel(k, n)?, trials, seed, jobs)?;
                (est.mean, est.se)
            }
        };
        let n2 = (n * n) as f64;
        rows.push(ScalingRow {
            n,
            mean,
            se,
            exact,
            ratio_to_n2: mean / n2,
            ratio_to_bound: mean / (104.0 * n2 / 3.0),
        });
    }
    let (slope, intercept, slope_se) = log_log_fit(&rows);
    Ok(ScalingReport {
        k,
        rows,
        slope,
        intercept,
        slope_se,
    })
}

fn log_log_fit(rows: &[ScalingRow]) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.mean.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if pts.len() > 2 {
        let rss: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (rss / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, slope_se)
}

impl ScalingReport {
    /// `n,mean,se,exact,ratio_to_n2`
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "mean", "se", "exact", "ratio_to_n2"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_num(r.mean),
                r.se.map(fmt_num).unwrap_or_default(),
                r.exact.map(fmt_num).unwrap_or_default(),
                fmt_num(r.ratio_to_n2),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }

    pub fn bound_report(&self) -> BoundReport {
        let mut r = BoundReport::new(format!("duration scaling, k = {}", self.k));
        r.push(BoundEntry::report(
            "loglog_slope",
            "mean duration = O(n^2)",
            2.0,
            self.slope,
        ));
        for row in &self.rows {
            r.push(
                BoundEntry::report(
                    "duration_vs_104n2_over_3",
                    "mu_d <= 104 n^2/3 + o(n^2)",
                    104.0 * (row.n * row.n) as f64 / 3.0,
                    row.mean,
                )
                .with_index(row.n),
            );
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_is_exact() {
        let mut a = Moments::default();
        let mut b = Moments::default();
        let mut all = Moments::default();
        for x in 0..100u64 {
            if x % 3 == 0 { a.push(x) } else { b.push(x) }
            all.push(x);
        }
        assert_eq!(a.merge(b), all);
        assert_eq!(all.mean(), 49.5);
    }

    #[test]
    fn single_trial_has_no_se() {
        let cfg = GameConfig::dreidel(2, 3).unwrap();
        let est = estimate_mean_duration(cfg, 1, 5, Some(1)).unwrap();
        let mut rng = SpinRng::for_trial(5, 0);
        let d = game_duration(cfg, &mut rng, DEFAULT_SPIN_CAP).unwrap();
        assert_eq!(est.mean, d as f64);
        assert!(est.se.is_none() && est.ci99.is_none());
        assert!(estimate_mean_duration(cfg, 0, 5, None).is_err());
    }

    #[test]
    fn duration_estimate_independent_of_thread_count() {
        let cfg = GameConfig::dreidel(3, 3).unwrap();
        let a = estimate_mean_duration(cfg, 2000, 17, Some(1)).unwrap();
        let b = estimate_mean_duration(cfg, 2000, 17, Some(4)).unwrap();
        assert_eq!(a, b);
        let (lo, hi) = a.ci99.unwrap();
        assert!((hi - lo - 2.0 * Z99 * a.se.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn payoff_stats_identities() {
        let s = payoff_sample(2, 5, 20_000, 3).unwrap();
        assert_eq!(s.count, 20_000);
        let mu = s.mean();
        assert!((s.variance() - (s.second_moment() - mu * mu)).abs() < 1e-12);
        assert_eq!(s.length_tail(1), 1.0);
        assert!(s.length_hist.keys().all(|l| l % 2 == 0));
        assert_eq!(s.landslide_payoff_mismatches, 0);
    }

    #[test]
    fn tail_report_trivial_rows() {
        let s = payoff_sample(2, 5, 5_000, 8).unwrap();
        let r = tail_report(&s, 2, 3);
        let q0 = r.get_indexed("epoch_length_tail", 0).unwrap();
        assert_eq!(q0.bound, 1.0);
        assert!(q0.passed());
        let t3 = r.get_indexed("abs_payoff_tail", 3).unwrap();
        assert_eq!(t3.bound, 1.0);
        assert_eq!(r.get_indexed("epoch_length_tail", 2).unwrap().bound, 9.0 / 16.0);
    }

    #[test]
    fn ganz_wait_single_trial() {
        // Find a seed whose first spin is a Ganz, then a one-trial run must
        // report a wait of exactly 1.
        let seed = (0..1000u64)
            .find(|&s| SpinRng::for_trial(s, 0).spin() == SpinOutcome::Ganz)
            .unwrap();
        let w = ganz_wait(1, seed, Some(1)).unwrap();
        assert_eq!(w.mean, 1.0);
        assert_eq!(w.hist.get(&1), Some(&1));
    }

    #[test]
    fn wald_symmetric_toy() {
        // Y = +-1 fair coin, window (-3, 3]: E(S_T) should be near zero.
        let mut rng = SpinRng::new(12);
        let mut records = Vec::new();
        let mut hist = BTreeMap::new();
        for _ in 0..20_000 {
            let (mut s, mut t) = (0i64, 0u64);
            loop {
                let y = if rng.two_bits() & 1 == 0 { 1 } else { -1 };
                *hist.entry(y).or_insert(0u64) += 1;
                s += y;
                t += 1;
                if !(-3..=3).contains(&s) {
                    break;
                }
            }
            records.push(StoppingRecord {
                w0: 3,
                t,
                s_t: s,
                u: 2 * t,
                side: if s < 0 { variants::StopSide::Lower } else { variants::StopSide::Upper },
            });
        }
        let count = hist.values().sum();
        let stats = PayoffStats {
            k: 2,
            count,
            payoff_hist: hist,
            ..Default::default()
        };
        assert!(stats.mean().abs() < 0.02);
        let r = wald_report(&records, &stats, 2, 4);
        let first = r.get("wald_first").unwrap();
        assert!(first.passed(), "{first:?}");
        assert!(first.measured.abs() < 0.2);
        assert!(r.get("wald_second").unwrap().passed());
    }

    #[test]
    fn scaling_needs_two_points() {
        assert!(scaling_report(2, &[5], ScalingSource::Exact, None).is_err());
        assert!(scaling_report(3, &[5, 6], ScalingSource::Exact, None).is_err());
    }

    #[test]
    fn fit_recovers_exact_power() {
        let rows: Vec<ScalingRow> = [2i64, 4, 8, 16]
            .iter()
            .map(|&n| ScalingRow {
                n,
                mean: 3.0 * (n as f64).powi(2),
                se: None,
                exact: None,
                ratio_to_n2: 3.0,
                ratio_to_bound: 0.0,
            })
            .collect();
        let (slope, intercept, se) = log_log_fit(&rows);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 3f64.ln()).abs() < 1e-12);
        assert!(se < 1e-9);
    }
}
