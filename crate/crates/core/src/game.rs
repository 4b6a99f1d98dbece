//! Spin-by-spin rules engine.
//!
//! Players are indexed from 0 in seat order; "P1" in the usual notation is
//! seat 0 and "P_k" is seat `k - 1`. All token counts are signed so that the
//! same state type serves both the ordinary game and the overdraft variants.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SpinRng;

/// Default per-game spin cap.
pub const DEFAULT_SPIN_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpinOutcome {
    /// Nisht: nothing happens.
    #[serde(rename = "N")]
    Nisht,
    /// Ganz: the spinner takes the whole pot.
    #[serde(rename = "G")]
    Ganz,
    /// Halb: the spinner takes the smaller half of the pot.
    #[serde(rename = "H")]
    Halb,
    /// Shtel: the spinner puts one token in.
    #[serde(rename = "S")]
    Shtel,
}

impl SpinOutcome {
    pub const ALL: [SpinOutcome; 4] = [
        SpinOutcome::Nisht,
        SpinOutcome::Ganz,
        SpinOutcome::Halb,
        SpinOutcome::Shtel,
    ];

    #[inline]
    pub fn from_bits(bits: u8) -> Self {
        Self::ALL[(bits & 3) as usize]
    }

    pub fn symbol(self) -> char {
        match self {
            SpinOutcome::Nisht => 'N',
            SpinOutcome::Ganz => 'G',
            SpinOutcome::Halb => 'H',
            SpinOutcome::Shtel => 'S',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'N' => Some(SpinOutcome::Nisht),
            'G' => Some(SpinOutcome::Ganz),
            'H' => Some(SpinOutcome::Halb),
            'S' => Some(SpinOutcome::Shtel),
            _ => None,
        }
    }

    /// Parses a compact string such as `"SNG"`.
    pub fn parse_seq(s: &str) -> Option<Vec<Self>> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(Self::from_symbol)
            .collect()
    }
}

impl fmt::Display for SpinOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameConfig {
    pub k: usize,
    pub n: i64,
    pub overdraft: bool,
}

impl GameConfig {
    pub fn new(k: usize, n: i64, overdraft: bool) -> Result<Self> {
        let cfg = Self { k, n, overdraft };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dreidel(k: usize, n: i64) -> Result<Self> {
        Self::new(k, n, false)
    }

    pub fn slowdel(k: usize, n: i64) -> Result<Self> {
        Self::new(k, n, true)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k = {} < 2", self.k)));
        }
        if self.n < 1 {
            return Err(Error::InvalidConfig(format!("n = {} < 1", self.n)));
        }
        Ok(())
    }

    pub fn total_tokens(&self) -> i64 {
        self.k as i64 * self.n
    }
}

/// `(taken, remaining)`: the spinner takes the smaller half.
#[inline]
pub fn halb_split(pot: i64) -> (i64, i64) {
    debug_assert!(pot >= 0);
    (pot / 2, pot - pot / 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepEvent {
    AnteCollected { payers: Vec<usize> },
    Eliminated { player: usize },
    Won { player: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Terminal {
    Running,
    Winner { player: usize },
    NoSurvivor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    pub pot: i64,
    pub stacks: Vec<i64>,
    pub turn: usize,
    pub alive: Vec<bool>,
    pub spin_index: u64,
}

impl GameState {
    /// Everyone antes one token from `n`; seat 0 spins first.
    pub fn new_game(config: GameConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            pot: config.k as i64,
            stacks: vec![config.n - 1; config.k],
            turn: 0,
            alive: vec![true; config.k],
            spin_index: 0,
        })
    }

    /// Raw state with no opening ante applied. Used by the analysis code.
    pub fn from_parts(config: GameConfig, pot: i64, stacks: Vec<i64>, turn: usize) -> Result<Self> {
        config.validate()?;
        if stacks.len() != config.k {
            return Err(Error::InvalidConfig(format!(
                "{} stacks for k = {}",
                stacks.len(),
                config.k
            )));
        }
        if pot < 0 {
            return Err(Error::InvalidConfig(format!("negative pot {pot}")));
        }
        if turn >= config.k {
            return Err(Error::InvalidConfig(format!("turn {turn} out of range")));
        }
        if !config.overdraft && stacks.iter().any(|&s| s < 0) {
            return Err(Error::InvalidConfig("negative stack without overdraft".into()));
        }
        Ok(Self {
            config,
            pot,
            stacks,
            turn,
            alive: vec![true; config.k],
            spin_index: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn terminal(&self) -> Terminal {
        match self.alive_count() {
            0 => Terminal::NoSurvivor,
            1 => Terminal::Winner {
                player: self.alive.iter().position(|&a| a).unwrap(),
            },
            _ => Terminal::Running,
        }
    }

    pub fn is_over(&self) -> bool {
        self.alive_count() < 2
    }

    /// Sum of pot and all stacks; constant over a game.
    pub fn tokens(&self) -> i64 {
        self.pot + self.stacks.iter().sum::<i64>()
    }

    /// Pure form of [`GameState::step`].
    pub fn apply_spin(&self, outcome: SpinOutcome) -> Result<(GameState, Vec<StepEvent>)> {
        let mut next = self.clone();
        let mut events = Vec::new();
        next.step(outcome, Some(&mut events))?;
        Ok((next, events))
    }

    /// Resolves one spin by the current spinner in place.
    pub fn step(&mut self, outcome: SpinOutcome, mut events: Option<&mut Vec<StepEvent>>) -> Result<()> {
        if self.is_over() {
            return Err(Error::GameOver);
        }
        let spinner = self.turn;
        match outcome {
            SpinOutcome::Nisht => {}
            SpinOutcome::Ganz => {
                self.stacks[spinner] += self.pot;
                self.pot = 0;
            }
            SpinOutcome::Halb => {
                let (taken, remaining) = halb_split(self.pot);
                self.stacks[spinner] += taken;
                self.pot = remaining;
            }
            SpinOutcome::Shtel => {
                if !self.config.overdraft && self.stacks[spinner] <= 0 {
                    self.alive[spinner] = false;
                    if let Some(ev) = events.as_deref_mut() {
                        ev.push(StepEvent::Eliminated { player: spinner });
                    }
                } else {
                    self.stacks[spinner] -= 1;
                    self.pot += 1;
                }
            }
        }
        if self.pot == 0 {
            self.collect_ante(events.as_deref_mut());
        }
        self.spin_index += 1;
        self.finish_turn(spinner, events);
        Ok(())
    }

    /// Standalone ante on an empty pot.
    pub fn ante(&self) -> Result<(GameState, Vec<StepEvent>)> {
        if self.pot != 0 {
            return Err(Error::PotNotEmpty(self.pot));
        }
        if self.is_over() {
            return Err(Error::GameOver);
        }
        let mut next = self.clone();
        let mut events = Vec::new();
        next.collect_ante(Some(&mut events));
        if next.is_over() {
            next.announce_end(Some(&mut events));
        } else if !next.alive[next.turn] {
            next.turn = next.next_alive_after(next.turn);
        }
        Ok((next, events))
    }

    fn collect_ante(&mut self, mut events: Option<&mut Vec<StepEvent>>) {
        let overdraft = self.config.overdraft;
        let mut payers = events.as_ref().map(|_| Vec::with_capacity(self.k()));
        for p in 0..self.k() {
            if !self.alive[p] {
                continue;
            }
            if overdraft || self.stacks[p] >= 1 {
                self.stacks[p] -= 1;
                self.pot += 1;
                if let Some(v) = payers.as_mut() {
                    v.push(p);
                }
            } else {
                self.alive[p] = false;
                if let Some(ev) = events.as_deref_mut() {
                    ev.push(StepEvent::Eliminated { player: p });
                }
            }
        }
        if let (Some(ev), Some(payers)) = (events, payers) {
            ev.push(StepEvent::AnteCollected { payers });
        }
    }

    fn finish_turn(&mut self, spinner: usize, events: Option<&mut Vec<StepEvent>>) {
        if self.is_over() {
            self.announce_end(events);
        } else {
            self.turn = self.next_alive_after(spinner);
        }
    }

    fn announce_end(&mut self, events: Option<&mut Vec<StepEvent>>) {
        if let Terminal::Winner { player } = self.terminal() {
            self.turn = player;
            if let Some(ev) = events {
                ev.push(StepEvent::Won { player });
            }
        }
    }

    fn next_alive_after(&self, seat: usize) -> usize {
        let k = self.k();
        (1..=k)
            .map(|d| (seat + d) % k)
            .find(|&p| self.alive[p])
            .unwrap_or(seat)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinRecord {
    pub i: u64,
    pub player: usize,
    pub outcome: SpinOutcome,
    pub pot: i64,
    pub stacks: Vec<i64>,
    pub events: Vec<StepEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub config: GameConfig,
    /// State before the first recorded spin.
    pub start: StartState,
    pub spins: Vec<SpinRecord>,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartState {
    pub pot: i64,
    pub stacks: Vec<i64>,
    pub turn: usize,
}

impl Transcript {
    pub fn new(initial: &GameState) -> Self {
        Self {
            config: initial.config,
            start: StartState {
                pot: initial.pot,
                stacks: initial.stacks.clone(),
                turn: initial.turn,
            },
            spins: Vec::new(),
            terminal: initial.terminal(),
        }
    }

    /// Records a spin taken from `state`, returning the successor.
    pub fn push(&mut self, state: &mut GameState, outcome: SpinOutcome) -> Result<()> {
        let player = state.turn;
        let i = state.spin_index;
        let mut events = Vec::new();
        state.step(outcome, Some(&mut events))?;
        self.spins.push(SpinRecord {
            i,
            player,
            outcome,
            pot: state.pot,
            stacks: state.stacks.clone(),
            events,
        });
        self.terminal = state.terminal();
        Ok(())
    }

    pub fn outcomes(&self) -> Vec<SpinOutcome> {
        self.spins.iter().map(|s| s.outcome).collect()
    }

    pub fn duration(&self) -> u64 {
        self.spins.len() as u64
    }

    pub fn initial_state(&self) -> Result<GameState> {
        GameState::from_parts(
            self.config,
            self.start.pot,
            self.start.stacks.clone(),
            self.start.turn,
        )
    }

    /// Replays the outcomes from the recorded start and checks every
    /// recorded intermediate state.
    pub fn replay(&self) -> Result<GameState> {
        let mut state = self.initial_state()?;
        let total = state.tokens();
        for rec in &self.spins {
            if state.turn != rec.player || state.spin_index != rec.i {
                return Err(Error::Validation(format!(
                    "spin {}: expected player {} at index {}, transcript says player {} at {}",
                    rec.i, state.turn, state.spin_index, rec.player, rec.i
                )));
            }
            let mut events = Vec::new();
            state.step(rec.outcome, Some(&mut events))?;
            if state.pot != rec.pot || state.stacks != rec.stacks || events != rec.events {
                return Err(Error::Validation(format!("spin {} does not replay", rec.i)));
            }
            if state.tokens() != total {
                return Err(Error::Validation(format!("spin {}: tokens not conserved", rec.i)));
            }
            if !state.config.overdraft && state.stacks.iter().any(|&s| s < 0) {
                return Err(Error::Validation(format!("spin {}: negative stack", rec.i)));
            }
        }
        if state.terminal() != self.terminal {
            return Err(Error::Validation("terminal status mismatch".into()));
        }
        Ok(state)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Plays an ordinary game from the standard start, recording every spin.
pub fn play_game(config: GameConfig, seed: u64) -> Result<Transcript> {
    let mut rng = SpinRng::new(seed);
    play_recorded(config, &mut rng, DEFAULT_SPIN_CAP)
}

pub fn play_recorded(config: GameConfig, rng: &mut SpinRng, cap: u64) -> Result<Transcript> {
    if config.overdraft {
        return Err(Error::InvalidConfig("play_game needs the non-overdraft rules".into()));
    }
    let mut state = GameState::new_game(config)?;
    let mut transcript = Transcript::new(&state);
    while !state.is_over() {
        if state.spin_index >= cap {
            return Err(Error::SpinCapExceeded(cap));
        }
        transcript.push(&mut state, rng.spin())?;
    }
    Ok(transcript)
}

/// Number of spins in one ordinary game, without recording a transcript.
pub fn game_duration(config: GameConfig, rng: &mut SpinRng, cap: u64) -> Result<u64> {
    if config.overdraft {
        return Err(Error::InvalidConfig("duration is defined for the non-overdraft rules".into()));
    }
    let mut state = GameState::new_game(config)?;
    while !state.is_over() {
        if state.spin_index >= cap {
            return Err(Error::SpinCapExceeded(cap));
        }
        state.step(rng.spin(), None)?;
    }
    Ok(state.spin_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SpinOutcome::*;

    fn state(k: usize, overdraft: bool, pot: i64, stacks: &[i64], turn: usize) -> GameState {
        let n = ((pot + stacks.iter().sum::<i64>()) / k as i64).max(1);
        let cfg = GameConfig { k, n, overdraft };
        GameState::from_parts(cfg, pot, stacks.to_vec(), turn).unwrap()
    }

    #[test]
    fn new_game_antes_everyone() {
        let g = GameState::new_game(GameConfig::dreidel(2, 5).unwrap()).unwrap();
        assert_eq!((g.pot, g.stacks.clone(), g.turn), (2, vec![4, 4], 0));

        let g = GameState::new_game(GameConfig::dreidel(4, 1).unwrap()).unwrap();
        assert_eq!((g.pot, g.stacks.clone()), (4, vec![0, 0, 0, 0]));

        let g = GameState::new_game(GameConfig::dreidel(3, 10).unwrap()).unwrap();
        assert_eq!(g.stacks, vec![9, 9, 9]);
        assert_eq!(g.tokens(), 30);
        assert!(g.alive.iter().all(|&a| a));
        assert_eq!(g.spin_index, 0);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(GameConfig::dreidel(1, 5).is_err());
        assert!(GameConfig::dreidel(2, 0).is_err());
        let bad = GameConfig { k: 1, n: 3, overdraft: false };
        assert!(GameState::new_game(bad).is_err());
    }

    #[test]
    fn halb_takes_smaller_half() {
        assert_eq!(halb_split(5), (2, 3));
        assert_eq!(halb_split(1), (0, 1));
        assert_eq!(halb_split(2), (1, 1));
        assert_eq!(halb_split(0), (0, 0));
    }

    #[test]
    fn ganz_triggers_ante() {
        let s = state(2, false, 3, &[4, 3], 0);
        let (next, events) = s.apply_spin(Ganz).unwrap();
        assert_eq!(next.pot, 2);
        assert_eq!(next.stacks, vec![6, 2]);
        assert_eq!(next.turn, 1);
        assert_eq!(events, vec![StepEvent::AnteCollected { payers: vec![0, 1] }]);
    }

    #[test]
    fn shtel_with_empty_stack_eliminates() {
        let s = state(2, false, 2, &[0, 5], 0);
        let (next, events) = s.apply_spin(Shtel).unwrap();
        assert_eq!(next.pot, 2);
        assert_eq!(next.stacks, vec![0, 5]);
        assert_eq!(
            events,
            vec![StepEvent::Eliminated { player: 0 }, StepEvent::Won { player: 1 }]
        );
        assert_eq!(next.terminal(), Terminal::Winner { player: 1 });
        assert!(matches!(next.apply_spin(Nisht), Err(Error::GameOver)));
    }

    #[test]
    fn halb_on_single_token() {
        let s = state(2, false, 1, &[3, 4], 0);
        let (next, events) = s.apply_spin(Halb).unwrap();
        assert_eq!((next.pot, next.stacks.clone()), (1, vec![3, 4]));
        assert!(events.is_empty());
    }

    #[test]
    fn ante_eliminates_simultaneously() {
        let s = state(3, false, 0, &[2, 0, 5], 0);
        let (next, events) = s.ante().unwrap();
        assert_eq!(next.pot, 2);
        assert_eq!(next.stacks, vec![1, 0, 4]);
        assert_eq!(next.alive, vec![true, false, true]);
        assert_eq!(
            events,
            vec![
                StepEvent::Eliminated { player: 1 },
                StepEvent::AnteCollected { payers: vec![0, 2] }
            ]
        );
    }

    #[test]
    fn overdraft_ante_always_pays() {
        let s = state(2, true, 0, &[0, -3], 0);
        let (next, _) = s.ante().unwrap();
        assert_eq!((next.pot, next.stacks.clone()), (2, vec![-1, -4]));
    }

    #[test]
    fn all_broke_ante_has_no_survivor() {
        let s = state(2, false, 0, &[0, 0], 0);
        let (next, events) = s.ante().unwrap();
        assert_eq!(next.terminal(), Terminal::NoSurvivor);
        assert_eq!(next.pot, 0);
        assert!(!events.iter().any(|e| matches!(e, StepEvent::Won { .. })));
    }

    #[test]
    fn ante_needs_empty_pot() {
        let s = state(2, false, 1, &[1, 1], 0);
        assert!(matches!(s.ante(), Err(Error::PotNotEmpty(1))));
    }

    #[test]
    fn turn_skips_eliminated_seats() {
        // Seat 1 is gone; seat 0's spin passes to seat 2.
        let mut s = state(3, false, 2, &[3, 0, 3], 0);
        s.alive[1] = false;
        let (next, _) = s.apply_spin(Nisht).unwrap();
        assert_eq!(next.turn, 2);
        let (next, _) = next.apply_spin(Nisht).unwrap();
        assert_eq!(next.turn, 0);
    }

    #[test]
    fn game_with_one_token_each_ends() {
        let cfg = GameConfig::dreidel(2, 1).unwrap();
        for seed in 0..50 {
            let t = play_game(cfg, seed).unwrap();
            assert!(t.duration() >= 1);
            assert!(matches!(t.terminal, Terminal::Winner { .. }));
            t.replay().unwrap();
        }
    }

    #[test]
    fn play_game_is_deterministic() {
        let cfg = GameConfig::dreidel(2, 4).unwrap();
        let a = play_game(cfg, 11).unwrap();
        let b = play_game(cfg, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let mut rng = SpinRng::new(11);
        assert_eq!(game_duration(cfg, &mut rng, DEFAULT_SPIN_CAP).unwrap(), a.duration());
    }

    #[test]
    fn spin_cap_is_an_error() {
        let cfg = GameConfig::dreidel(2, 50).unwrap();
        let mut rng = SpinRng::new(3);
        assert!(matches!(
            game_duration(cfg, &mut rng, 5),
            Err(Error::SpinCapExceeded(5))
        ));
    }

    #[test]
    fn transcript_json_shape() {
        let t = play_game(GameConfig::dreidel(2, 2).unwrap(), 5).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert!(v["config"]["k"].is_number());
        let first = &v["spins"][0];
        for key in ["i", "player", "outcome", "pot", "stacks", "events"] {
            assert!(!first[key].is_null(), "missing {key}");
        }
        assert!(["N", "G", "H", "S"].contains(&first["outcome"].as_str().unwrap()));
        assert_eq!(v["terminal"]["status"], "winner");
        let back: Transcript = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn tampered_transcript_fails_replay() {
        let mut t = play_game(GameConfig::dreidel(2, 3).unwrap(), 2).unwrap();
        t.spins[0].pot += 1;
        assert!(t.replay().is_err());
    }

    fn outcome_strategy() -> impl Strategy<Value = SpinOutcome> {
        (0u8..4).prop_map(SpinOutcome::from_bits)
    }

    proptest! {
        #[test]
        fn conservation_and_nonnegativity(
            k in 2usize..6,
            n in 1i64..8,
            overdraft in any::<bool>(),
            spins in prop::collection::vec(outcome_strategy(), 1..300),
        ) {
            let cfg = GameConfig::new(k, n, overdraft).unwrap();
            let mut s = GameState::new_game(cfg).unwrap();
            let mut alive_before = s.alive.clone();
            for o in spins {
                if s.is_over() { break; }
                let before = s.clone();
                let (next, events) = s.apply_spin(o).unwrap();
                prop_assert_eq!(next.tokens(), cfg.total_tokens());
                if !overdraft {
                    prop_assert!(next.stacks.iter().all(|&x| x >= 0));
                    for e in &events {
                        if let StepEvent::Eliminated { player } = e {
                            prop_assert_eq!(next.stacks[*player], 0);
                        }
                    }
                }
                if !next.is_over() {
                    prop_assert!(next.pot >= 1);
                    prop_assert!(next.alive[next.turn]);
                }
                if o == Halb && before.pot >= 1 {
                    prop_assert!(next.pot >= 1);
                }
                for (b, a) in alive_before.iter().zip(&next.alive) {
                    prop_assert!(*b || !*a);
                }
                prop_assert_eq!(next.spin_index, before.spin_index + 1);
                let (again, events2) = before.apply_spin(o).unwrap();
                prop_assert_eq!(&again, &next);
                prop_assert_eq!(events2, events);
                alive_before = next.alive.clone();
                s = next;
            }
        }
    }
}
