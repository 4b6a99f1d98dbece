//! The pot-size chain: G -> 2, H -> ceil(x/2), N -> x, S -> x + 1, with a
//! Shtel at the cap looping back onto the cap.

use crate::chain::kernel::SparseKernel;
use crate::error::{Error, Result};
use crate::game::SpinOutcome;

pub fn pot_successor(x_max: i64, x: i64, o: SpinOutcome) -> i64 {
    match o {
        SpinOutcome::Ganz => 2,
        SpinOutcome::Halb => x - x / 2,
        SpinOutcome::Nisht => x,
        SpinOutcome::Shtel => (x + 1).min(x_max),
    }
}

pub fn build_pot_chain(x_max: i64) -> Result<SparseKernel<i64>> {
    if x_max < 4 {
        return Err(Error::InvalidConfig(format!("pot cap {x_max} is below 4")));
    }
    SparseKernel::explore(1..=x_max, 4, |&x| {
        Some(SpinOutcome::ALL.iter().map(|&o| (pot_successor(x_max, x, o), 1)).collect())
    })
}

/// Transition dump with blank y and z columns.
pub fn pot_chain_csv(x_max: i64, kernel: &SparseKernel<i64>) -> Result<String> {
    super::transitions_csv(kernel, |&x, o| pot_successor(x_max, x, o), |&x| [Some(x), None, None])
}
