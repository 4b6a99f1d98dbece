//! The chain on (pot, P1 tokens mod 2n+3, next spinner).

use serde::{Deserialize, Serialize};

use crate::chain::kernel::SparseKernel;
use crate::error::{Error, Result};
use crate::game::SpinOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    /// P1's count moves only on P1's spins and on antes.
    GameFaithful,
    /// The four update maps applied to y whoever spins.
    FormalLambda,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::GameFaithful => "game",
            Flavor::FormalLambda => "formal",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "game" | "game-faithful" => Ok(Flavor::GameFaithful),
            "formal" | "formal-lambda" => Ok(Flavor::FormalLambda),
            _ => Err(Error::InvalidConfig(format!("unknown flavor {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModState {
    pub x: i64,
    pub y: i64,
    /// 1 or 2: who spins next.
    pub z: u8,
}

impl ModState {
    pub fn new(x: i64, y: i64, z: u8) -> Self {
        Self { x, y, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModChainSpec {
    pub n: i64,
    pub lambda: i64,
    pub p_max: i64,
    pub flavor: Flavor,
}

impl ModChainSpec {
    pub fn new(n: i64, p_max: i64, flavor: Flavor) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidConfig(format!("n = {n} must be at least 1")));
        }
        if p_max < 4 {
            return Err(Error::InvalidConfig(format!("pot cap {p_max} is below 4")));
        }
        Ok(Self {
            n,
            lambda: 2 * n + 3,
            p_max,
            flavor,
        })
    }

    /// Pot cap used when none is given.
    pub fn default_p_max(n: i64) -> i64 {
        (8 * n).max(4)
    }

    pub fn wrap(&self, y: i64) -> i64 {
        y.rem_euclid(self.lambda)
    }

    pub fn start(&self) -> ModState {
        ModState::new(2, self.wrap(self.n - 1), 1)
    }

    /// `(2, y, z)` with y reduced.
    pub fn at2(&self, y: i64, z: u8) -> ModState {
        ModState::new(2, self.wrap(y), z)
    }

    pub fn step(&self, s: &ModState, o: SpinOutcome) -> ModState {
        let ModState { x, y, z } = *s;
        let zs = 3 - z;
        let p1_moves = self.flavor == Flavor::FormalLambda || z == 1;
        let (nx, ny) = match (o, p1_moves) {
            (SpinOutcome::Ganz, true) => (2, y + x - 1),
            // P2 takes the pot; P1 only pays the ante.
            (SpinOutcome::Ganz, false) => (2, y - 1),
            (SpinOutcome::Halb, true) => (x - x / 2, y + x / 2),
            (SpinOutcome::Halb, false) => (x - x / 2, y),
            (SpinOutcome::Nisht, _) => (x, y),
            (SpinOutcome::Shtel, true) => ((x + 1).min(self.p_max), y - 1),
            (SpinOutcome::Shtel, false) => ((x + 1).min(self.p_max), y),
        };
        ModState::new(nx, self.wrap(ny), zs)
    }

    /// A state that no legal two-player game passes through.
    pub fn is_end_state(&self, s: &ModState) -> bool {
        let y = self.wrap(s.y);
        y > 2 * self.n || s.x + y > 2 * self.n
    }
}

pub fn build_mod_chain(spec: &ModChainSpec) -> Result<SparseKernel<ModState>> {
    let starts = (1..=spec.p_max)
        .flat_map(|x| (0..spec.lambda).flat_map(move |y| [1u8, 2].map(|z| ModState::new(x, y, z))));
    SparseKernel::explore(starts, 4, |s| {
        Some(SpinOutcome::ALL.iter().map(|&o| (spec.step(s, o), 1)).collect())
    })
}

pub fn mod_chain_csv(spec: &ModChainSpec, kernel: &SparseKernel<ModState>) -> Result<String> {
    super::transitions_csv(kernel, |s, o| spec.step(s, o), |s| {
        [Some(s.x), Some(s.y), Some(s.z as i64)]
    })
}
