//! Epoch machinery for the overdraft variants.
//!
//! A round is `k` spins starting with seat 0. An epoch closes on the first
//! round whose last spin (by seat `k - 1`) is a Ganz; the ante that Ganz
//! triggers belongs to the same epoch, so every epoch boundary has `pot = k`
//! and seat 0 to spin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameConfig, GameState, SpinOutcome, DEFAULT_SPIN_CAP};
use crate::report::{csv_err, finish_csv};
use crate::rng::SpinRng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch_index: u64,
    pub spins: u64,
    /// Net token change per seat over the epoch, ante included.
    pub payoff: Vec<i64>,
    pub end_stacks: Vec<i64>,
    pub outcomes: Vec<SpinOutcome>,
}

impl EpochRecord {
    /// Payoff of the last seat, the player the stopping analysis follows.
    pub fn last_seat_payoff(&self) -> i64 {
        *self.payoff.last().unwrap()
    }

    /// Seats holding a negative stack at the end of the epoch; these lose
    /// under the slowdel rule.
    pub fn losers(&self) -> Vec<usize> {
        self.end_stacks
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn classify(&self) -> EpochFlags {
        classify_epoch(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochFlags {
    /// Exactly one round: `k - 1` Shtels then the last seat's Ganz.
    pub landslide: bool,
    /// Some seat ends the epoch below zero.
    pub slowdel_loss: bool,
}

pub fn classify_epoch(record: &EpochRecord) -> EpochFlags {
    let k = record.payoff.len();
    let o = &record.outcomes;
    let landslide = o.len() == k
        && o[..k - 1].iter().all(|&x| x == SpinOutcome::Shtel)
        && o[k - 1] == SpinOutcome::Ganz;
    EpochFlags {
        landslide,
        slowdel_loss: record.end_stacks.iter().any(|&s| s < 0),
    }
}

/// Metadreidel / metaslowdel start: everyone antes one token from the given
/// stacks and seat 0 spins first.
pub fn new_custom(stacks: &[i64], config: GameConfig) -> Result<GameState> {
    config.validate()?;
    if stacks.len() != config.k {
        return Err(Error::InvalidConfig(format!(
            "{} stacks for k = {}",
            stacks.len(),
            config.k
        )));
    }
    if !config.overdraft {
        if let Some(p) = stacks.iter().position(|&s| s < 1) {
            return Err(Error::InvalidConfig(format!(
                "seat {p} cannot pay the opening ante with {} tokens",
                stacks[p]
            )));
        }
    }
    let after: Vec<i64> = stacks.iter().map(|s| s - 1).collect();
    GameState::from_parts(config, config.k as i64, after, 0)
}

/// Epoch-boundary state where the last seat holds `w0` tokens and the other
/// seats split the remaining `k(n - 1) - w0` as evenly as possible.
pub fn metaslowdel_start(k: usize, n: i64, w0: i64) -> Result<GameState> {
    let config = GameConfig::slowdel(k, n)?;
    let others_total = k as i64 * (n - 1) - w0;
    if w0 < 0 || others_total < 0 {
        return Err(Error::InvalidConfig(format!(
            "W0 = {w0} outside [0, {}]",
            k as i64 * (n - 1)
        )));
    }
    let rest = (k - 1) as i64;
    let mut stacks: Vec<i64> = (0..rest)
        .map(|i| others_total / rest + i64::from(i < others_total % rest))
        .collect();
    stacks.push(w0);
    GameState::from_parts(config, k as i64, stacks, 0)
}

fn check_boundary(state: &GameState) -> Result<()> {
    if !state.config.overdraft {
        return Err(Error::InvalidConfig("epochs need overdraft rules".into()));
    }
    if state.pot != state.k() as i64 || state.turn != 0 {
        return Err(Error::NotAtEpochBoundary(format!(
            "pot = {}, seat {} to spin",
            state.pot, state.turn
        )));
    }
    Ok(())
}

/// Plays one epoch in place, drawing outcomes from `next` until it closes.
/// Returns `Ok(None)` if `next` runs dry first.
pub fn play_epoch(
    state: &mut GameState,
    epoch_index: u64,
    cap: u64,
    mut next: impl FnMut() -> Option<SpinOutcome>,
) -> Result<Option<EpochRecord>> {
    check_boundary(state)?;
    let k = state.k();
    let start = state.stacks.clone();
    let first_spin = state.spin_index;
    let mut outcomes = Vec::with_capacity(4 * k);
    loop {
        for seat in 0..k {
            if state.spin_index >= cap {
                return Err(Error::SpinCapExceeded(cap));
            }
            let Some(o) = next() else {
                return Ok(None);
            };
            debug_assert_eq!(state.turn, seat);
            state.step(o, None)?;
            outcomes.push(o);
            if seat == k - 1 && o == SpinOutcome::Ganz {
                let payoff = state
                    .stacks
                    .iter()
                    .zip(&start)
                    .map(|(e, s)| e - s)
                    .collect();
                return Ok(Some(EpochRecord {
                    epoch_index,
                    spins: state.spin_index - first_spin,
                    payoff,
                    end_stacks: state.stacks.clone(),
                    outcomes,
                }));
            }
        }
    }
}

/// Pure epoch step with random outcomes.
pub fn run_epoch(state: &GameState, rng: &mut SpinRng) -> Result<(EpochRecord, GameState)> {
    let mut next = state.clone();
    let rec = play_epoch(&mut next, 0, DEFAULT_SPIN_CAP, || Some(rng.spin()))?
        .expect("random source never runs dry");
    Ok((rec, next))
}

/// Runs epochs from `start` forever; the iterator stops only on error.
pub struct EpochStream<'a> {
    state: GameState,
    rng: &'a mut SpinRng,
    index: u64,
    cap: u64,
}

impl<'a> EpochStream<'a> {
    pub fn new(start: GameState, rng: &'a mut SpinRng) -> Result<Self> {
        check_boundary(&start)?;
        Ok(Self {
            state: start,
            rng,
            index: 0,
            cap: u64::MAX,
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }
}

impl Iterator for EpochStream<'_> {
    type Item = Result<EpochRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.index += 1;
        let rng = &mut *self.rng;
        match play_epoch(&mut self.state, self.index, self.cap, || Some(rng.spin())) {
            Ok(Some(rec)) => Some(Ok(rec)),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopSide {
    /// The last seat fell below zero.
    Lower,
    /// The last seat holds more than `k(n - 1)`: everyone else is ruined.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingRecord {
    pub w0: i64,
    /// Number of epochs until the stop.
    pub t: u64,
    pub s_t: i64,
    /// Total spins.
    pub u: u64,
    pub side: StopSide,
}

/// Thresholds on the partial sums `S_j`: stop once `S_j < lower` or
/// `S_j > upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopWindow {
    pub lower: i64,
    pub upper: i64,
}

impl StopWindow {
    pub fn new(k: usize, n: i64, w0: i64) -> Result<Self> {
        let top = k as i64 * (n - 1);
        if w0 < 0 || w0 > top {
            return Err(Error::InvalidConfig(format!("W0 = {w0} outside [0, {top}]")));
        }
        Ok(Self {
            lower: -w0,
            upper: top - w0,
        })
    }

    pub fn exit(&self, s: i64) -> Option<StopSide> {
        if s < self.lower {
            Some(StopSide::Lower)
        } else if s > self.upper {
            Some(StopSide::Upper)
        } else {
            None
        }
    }
}

/// Plays metaslowdel epochs from `start` until the last seat goes home.
/// `on_epoch` sees every epoch together with the partial sum after it.
pub fn run_metaslowdel_with(
    start: &GameState,
    n: i64,
    cap: u64,
    mut next: impl FnMut() -> Option<SpinOutcome>,
    mut on_epoch: impl FnMut(&EpochRecord, i64),
) -> Result<Option<StoppingRecord>> {
    check_boundary(start)?;
    let k = start.k();
    let w0 = start.stacks[k - 1];
    let window = StopWindow::new(k, n, w0)?;
    let mut state = start.clone();
    let first_spin = state.spin_index;
    let mut s = 0i64;
    let mut t = 0u64;
    loop {
        let Some(rec) = play_epoch(&mut state, t + 1, first_spin.saturating_add(cap), &mut next)?
        else {
            return Ok(None);
        };
        t += 1;
        s += rec.last_seat_payoff();
        on_epoch(&rec, s);
        if let Some(side) = window.exit(s) {
            return Ok(Some(StoppingRecord {
                w0,
                t,
                s_t: s,
                u: state.spin_index - first_spin,
                side,
            }));
        }
    }
}

pub fn run_metaslowdel(start: &GameState, n: i64, rng: &mut SpinRng) -> Result<StoppingRecord> {
    run_metaslowdel_capped(start, n, rng, DEFAULT_SPIN_CAP)
}

pub fn run_metaslowdel_capped(
    start: &GameState,
    n: i64,
    rng: &mut SpinRng,
    cap: u64,
) -> Result<StoppingRecord> {
    Ok(run_metaslowdel_with(start, n, cap, || Some(rng.spin()), |_, _| {})?
        .expect("random source never runs dry"))
}

pub fn epochs_csv(records: &[EpochRecord], k: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["epoch_index".to_string(), "spins".to_string()];
    header.extend((1..=k).map(|i| format!("payoff_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.epoch_index.to_string(), r.spins.to_string()];
        row.extend(r.payoff.iter().map(|p| p.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    finish_csv(w)
}

pub fn stopping_csv(records: &[StoppingRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["W0", "T", "S_T", "U", "side"]).map_err(csv_err)?;
    for r in records {
        let side = match r.side {
            StopSide::Lower => "lower",
            StopSide::Upper => "upper",
        };
        w.write_record([
            r.w0.to_string(),
            r.t.to_string(),
            r.s_t.to_string(),
            r.u.to_string(),
            side.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}
