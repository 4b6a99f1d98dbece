//! C ABI over `dreidel-core`.
//!
//! Every fallible function returns a [`DreidelStatus`] and writes its result
//! through an out-pointer. After a non-zero status the message is available
//! from [`dreidel_last_error`] on the same thread. Games are opaque handles
//! created by [`dreidel_game_new`] and released by [`dreidel_game_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dreidel_core::chain::game_chain::exact_mean_duration;
use dreidel_core::mc_lab::estimate_mean_duration;
use dreidel_core::{Error, GameConfig, GameState, SpinOutcome, SpinRng, Terminal};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DreidelStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GameOver = 3,
    SolverFailure = 4,
    TooLarge = 5,
    Internal = 6,
}

/// Opaque game handle.
pub struct DreidelGame {
    state: GameState,
    rng: SpinRng,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DreidelStatus {
    match e {
        Error::GameOver => DreidelStatus::GameOver,
        Error::Solver(_) | Error::Undefined(_) | Error::Unstable(_) => DreidelStatus::SolverFailure,
        Error::TooLarge(_) | Error::SpinCapExceeded(_) => DreidelStatus::TooLarge,
        Error::Io(_) | Error::Json(_) => DreidelStatus::Internal,
        _ => DreidelStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DreidelStatus, String)>) -> DreidelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DreidelStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside dreidel");
            DreidelStatus::Internal
        }
    }
}

fn core<T>(r: dreidel_core::Result<T>) -> Result<T, (DreidelStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DreidelStatus, String) {
    (DreidelStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn dreidel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dreidel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New game with `k` players holding `n` tokens each, after the opening
/// ante. `overdraft != 0` allows negative stacks. `seed` drives
/// [`dreidel_game_spin_random`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dreidel_game_new(
    k: u32,
    n: i64,
    overdraft: i32,
    seed: u64,
    out: *mut *mut DreidelGame,
) -> DreidelStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = core(GameConfig::new(k as usize, n, overdraft != 0))?;
        let state = core(GameState::new_game(config))?;
        let game = Box::new(DreidelGame {
            state,
            rng: SpinRng::new(seed),
        });
        *out = Box::into_raw(game);
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `game` must come from [`dreidel_game_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dreidel_game_free(game: *mut DreidelGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

unsafe fn game_mut<'a>(game: *mut DreidelGame) -> Result<&'a mut DreidelGame, (DreidelStatus, String)> {
    game.as_mut().ok_or_else(|| null("game"))
}

/// Applies one spin for the current player: 0 Nisht, 1 Ganz, 2 Halb,
/// 3 Shtel.
///
/// # Safety
/// `game` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dreidel_game_spin(game: *mut DreidelGame, outcome: u32) -> DreidelStatus {
    guard(|| {
        let g = game_mut(game)?;
        if outcome > 3 {
            return Err((DreidelStatus::InvalidArgument, format!("outcome code {outcome} outside 0..=3")));
        }
        core(g.state.step(SpinOutcome::from_bits(outcome as u8), None))
    })
}

/// Spins with the handle's own random stream; writes the outcome code.
///
/// # Safety
/// `game` must be a live handle; `outcome` may be null.
#[no_mangle]
pub unsafe extern "C" fn dreidel_game_spin_random(game: *mut DreidelGame, outcome: *mut u32) -> DreidelStatus {
    guard(|| {
        let g = game_mut(game)?;
        let o = g.rng.spin();
        core(g.state.step(o, None))?;
        if let Some(out) = outcome.as_mut() {
            *out = SpinOutcome::ALL.iter().position(|&x| x == o).unwrap() as u32;
        }
        Ok(())
    })
}

/// Current pot, the player to spin, and spins so far. Any out-pointer may
/// be null.
///
/// # Safety
/// `game` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dreidel_game_status(
    game: *const DreidelGame,
    pot: *mut i64,
    turn: *mut u32,
    spins: *mut u64,
) -> DreidelStatus {
    guard(|| {
        let g = game.as_ref().ok_or_else(|| null("game"))?;
        if let Some(p) = pot.as_mut() {
            *p = g.state.pot;
        }
        if let Some(t) = turn.as_mut() {
            *t = g.state.turn as u32;
        }
        if let Some(s) = spins.as_mut() {
            *s = g.state.spin_index;
        }
        Ok(())
    })
}

/// Stack of player `seat`, counting from 0.
///
/// # Safety
/// `game` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dreidel_game_stack(game: *const DreidelGame, seat: u32, out: *mut i64) -> DreidelStatus {
    guard(|| {
        let g = game.as_ref().ok_or_else(|| null("game"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = *g
            .state
            .stacks
            .get(seat as usize)
            .ok_or_else(|| (DreidelStatus::InvalidArgument, format!("seat {seat} out of range")))?;
        Ok(())
    })
}

/// -1 while the game runs, -2 if nobody survived, otherwise the winner.
///
/// # Safety
/// `game` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dreidel_game_winner(game: *const DreidelGame, out: *mut i32) -> DreidelStatus {
    guard(|| {
        let g = game.as_ref().ok_or_else(|| null("game"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = match g.state.terminal() {
            Terminal::Running => -1,
            Terminal::NoSurvivor => -2,
            Terminal::Winner { player } => player as i32,
        };
        Ok(())
    })
}

/// Exact expected number of spins in two-player dreidel with `n` tokens.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dreidel_exact_mean_duration(n: i64, out: *mut f64) -> DreidelStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = core(exact_mean_duration(n))?;
        Ok(())
    })
}

/// Monte Carlo mean duration and its standard error over `trials` games.
/// `se` may be null; it is NaN for a single trial.
///
/// # Safety
/// `mean` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dreidel_mc_mean_duration(
    k: u32,
    n: i64,
    trials: u64,
    seed: u64,
    mean: *mut f64,
    se: *mut f64,
) -> DreidelStatus {
    guard(|| {
        let mean = mean.as_mut().ok_or_else(|| null("mean"))?;
        let config = core(GameConfig::dreidel(k as usize, n))?;
        let est = core(estimate_mean_duration(config, trials, seed, None))?;
        *mean = est.mean;
        if let Some(s) = se.as_mut() {
            *s = est.se.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}
