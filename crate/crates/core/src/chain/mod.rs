//! Exact Markov-chain analysis of two-player dreidel.

pub mod bounds;
pub mod diagnostics;
pub mod exact;
pub mod game_chain;
pub mod hit;
pub mod identities;
pub mod kernel;
pub mod mod_chain;
pub mod pot_chain;
pub mod solve;

pub use bounds::{bound_tables, BoundTables};
pub use diagnostics::{diagnostics, stationary, ChainDiagnostics};
pub use game_chain::{absorption_stats, build_game_chain, AbsorptionStats, GameChainState};
pub use hit::{hit_prob, mean_return_time, HitQuery};
pub use kernel::SparseKernel;
pub use mod_chain::{build_mod_chain, Flavor, ModChainSpec, ModState};
pub use pot_chain::build_pot_chain;

use crate::game::SpinOutcome;
use crate::report::{csv_err, finish_csv};
use crate::error::Result;

/// Per-outcome transition dump:
/// `from_x,from_y,from_z,outcome,to_x,to_y,to_z,prob`.
/// Absorbing states get no rows. Blank coordinates are written as empty
/// fields.
pub(crate) fn transitions_csv<S: Clone + Eq + std::hash::Hash>(
    kernel: &SparseKernel<S>,
    succ: impl Fn(&S, SpinOutcome) -> S,
    coords: impl Fn(&S) -> [Option<i64>; 3],
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from_x", "from_y", "from_z", "outcome", "to_x", "to_y", "to_z", "prob"])
        .map_err(csv_err)?;
    let field = |v: Option<i64>| v.map(|v| v.to_string()).unwrap_or_default();
    for (i, s) in kernel.states().iter().enumerate() {
        if kernel.is_absorbing(i) {
            continue;
        }
        let from = coords(s);
        for o in SpinOutcome::ALL {
            let to = coords(&succ(s, o));
            let mut rec: Vec<String> = from.iter().map(|&v| field(v)).collect();
            rec.push(o.symbol().to_string());
            rec.extend(to.iter().map(|&v| field(v)));
            rec.push("0.25".into());
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    finish_csv(w)
}
