//! Model grid and pinned tolerances shared by the acceptance suite.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssep::ModelParams;

pub const ORACLE_TOL: f64 = 1e-10;
pub const MARGINAL_TOL: f64 = 1e-12;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const BALANCE_TOL: f64 = 1e-12;
pub const NEGATIVE_CONTROL_MIN: f64 = 1e-3;
pub const REVERSED_TOL: f64 = 1e-12;
pub const UNIFORM_TOL: f64 = 1e-10;
pub const INDEPENDENCE_TOL: f64 = 1e-10;
pub const Z_LIMIT: f64 = 3.0;

pub const GRID_SEED: u64 = 20_240_601;
pub const DRAWS: usize = 3;
pub const STATE_CAP: u64 = ssep::exact::DEFAULT_STATE_CAP;

pub struct GridModel {
    /// Structural parameters without the draw number.
    pub family: String,
    pub params: ModelParams,
}

/// Counts repeated detail lines so each distinct message is printed once.
#[derive(Default)]
pub struct Tally(BTreeMap<String, usize>);

impl Tally {
    pub fn add(&mut self, line: String) {
        *self.0.entry(line).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn lines(&self) -> Vec<String> {
        self.0.iter().map(|(l, n)| format!("{l} (x{n})")).collect()
    }
}

/// `N ∈ {2,3,4}`, `K ∈ {1,2}`, both hop policies, [`DRAWS`] rate draws each.
/// With `balanced`, every type has `α_k = β_k`.
pub fn grid(balanced: bool) -> Vec<GridModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED + balanced as u64);
    let mut out = Vec::new();
    for n in 2..=4 {
        for k in 1..=2 {
            for hops in [true, false] {
                for _ in 0..DRAWS {
                    let mut rates = || {
                        (0..k)
                            .map(|_| rng.random_range(0.2..3.0))
                            .collect::<Vec<f64>>()
                    };
                    let alpha = rates();
                    let beta = if balanced { alpha.clone() } else { rates() };
                    let delta = rates();
                    out.push(GridModel {
                        family: format!("N={n} K={k} hops={hops}"),
                        params: ModelParams::new(n, k, alpha, beta, delta, hops).unwrap(),
                    });
                }
            }
        }
    }
    out
}
