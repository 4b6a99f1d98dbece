//! The exact two-player dreidel chain: (pot, P1 stack, turn) with the
//! finished game as absorbing states.

use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::chain::exact::{self, IntSystem};
use crate::chain::kernel::SparseKernel;
use crate::chain::solve::{solve_first_passage, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::game::{GameConfig, GameState, SpinOutcome, Terminal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameChainState {
    /// `turn` is the 0-based seat to spin.
    Play { pot: i64, p1: i64, turn: u8 },
    Over { winner: Option<u8> },
}

fn config(n: i64) -> Result<GameConfig> {
    GameConfig::dreidel(2, n)
}

/// Successor under one outcome, using the rules engine itself.
pub fn game_successor(n: i64, s: &GameChainState, o: SpinOutcome) -> GameChainState {
    let GameChainState::Play { pot, p1, turn } = *s else {
        return *s;
    };
    let cfg = config(n).expect("validated at build time");
    let mut st = GameState::from_parts(cfg, pot, vec![p1, 2 * n - pot - p1], turn as usize)
        .expect("chain states are valid game states");
    st.step(o, None).expect("running state");
    match st.terminal() {
        Terminal::Running => GameChainState::Play {
            pot: st.pot,
            p1: st.stacks[0],
            turn: st.turn as u8,
        },
        Terminal::Winner { player } => GameChainState::Over {
            winner: Some(player as u8),
        },
        Terminal::NoSurvivor => GameChainState::Over { winner: None },
    }
}

pub fn game_start(n: i64) -> GameChainState {
    GameChainState::Play {
        pot: 2,
        p1: n - 1,
        turn: 0,
    }
}

/// Reachable game configurations from the opening state, four outcomes at
/// weight 1 each over denominator 4.
pub fn build_game_chain(n: i64) -> Result<SparseKernel<GameChainState>> {
    config(n)?;
    SparseKernel::explore([game_start(n)], 4, |s| match s {
        GameChainState::Over { .. } => None,
        GameChainState::Play { .. } => Some(
            SpinOutcome::ALL
                .iter()
                .map(|&o| (game_successor(n, s, o), 1))
                .collect(),
        ),
    })
}

/// `from_x,from_y,from_z,...` with z = seat + 1, and z = 0 (x, y blank) for
/// a finished game.
pub fn game_chain_csv(n: i64, kernel: &SparseKernel<GameChainState>) -> Result<String> {
    super::transitions_csv(kernel, |s, o| game_successor(n, s, o), |s| match *s {
        GameChainState::Play { pot, p1, turn } => [Some(pot), Some(p1), Some(turn as i64 + 1)],
        GameChainState::Over { .. } => [None, None, Some(0)],
    })
}

#[derive(Debug, Clone)]
pub struct AbsorptionStats<S> {
    pub expected_time: f64,
    /// Probability of ending in each absorbing state.
    pub absorption: Vec<(S, f64)>,
    pub residual: f64,
}

pub fn absorption_stats<S: Clone + Eq + Hash + Debug>(
    kernel: &SparseKernel<S>,
    start: &S,
) -> Result<AbsorptionStats<S>> {
    let s = kernel.require(start)?;
    let fixed: Vec<Option<f64>> = (0..kernel.len())
        .map(|i| kernel.is_absorbing(i).then_some(0.0))
        .collect();
    let t = solve_first_passage(kernel, &fixed, 1.0, DEFAULT_TOL)?;
    if t.values[s].is_infinite() {
        return Err(Error::Solver("start state does not reach absorption".into()));
    }
    let mut residual = t.residual;
    let mut absorption = Vec::new();
    for a in kernel.absorbing_states() {
        let fixed: Vec<Option<f64>> = (0..kernel.len())
            .map(|i| kernel.is_absorbing(i).then_some(if i == a { 1.0 } else { 0.0 }))
            .collect();
        let h = solve_first_passage(kernel, &fixed, 0.0, DEFAULT_TOL)?;
        residual = residual.max(h.residual);
        absorption.push((kernel.state(a).clone(), h.values[s]));
    }
    Ok(AbsorptionStats {
        expected_time: t.values[s],
        absorption,
        residual,
    })
}

/// Expected absorption time in exact rationals.
pub fn absorption_time_exact<S: Clone + Eq + Hash + Debug>(
    kernel: &SparseKernel<S>,
    start: &S,
) -> Result<BigRational> {
    let s = kernel.require(start)?;
    if kernel.is_absorbing(s) {
        return Ok(BigRational::from_integer(BigInt::from(0)));
    }
    let transient: Vec<usize> = (0..kernel.len()).filter(|&i| !kernel.is_absorbing(i)).collect();
    let mut local = vec![usize::MAX; kernel.len()];
    for (a, &i) in transient.iter().enumerate() {
        local[i] = a;
    }
    let d = kernel.denom() as i64;
    // d t_i - sum_j w_ij t_j = d
    let rows = transient
        .iter()
        .map(|&i| {
            let mut row = vec![(local[i], d)];
            for &(j, w) in kernel.weights(i) {
                if !kernel.is_absorbing(j) {
                    row.push((local[j], -(w as i64)));
                }
            }
            row
        })
        .collect();
    let sys = IntSystem {
        rows,
        rhs: vec![d; transient.len()],
    };
    let x = exact::solve_rational(&sys)?;
    Ok(x[local[s]].clone())
}

/// Largest n accepted by the exact rational path.
pub const EXACT_RATIONAL_LIMIT: i64 = 12;

/// Expected number of spins in a two-player game from the standard start.
pub fn exact_mean_duration(n: i64) -> Result<f64> {
    let k = build_game_chain(n)?;
    Ok(absorption_stats(&k, &game_start(n))?.expected_time)
}

pub fn exact_mean_duration_rational(n: i64) -> Result<BigRational> {
    if n > EXACT_RATIONAL_LIMIT {
        return Err(Error::TooLarge(format!(
            "rational solve limited to n <= {EXACT_RATIONAL_LIMIT}"
        )));
    }
    let k = build_game_chain(n)?;
    absorption_time_exact(&k, &game_start(n))
}
