//! Exact tabular reference for the intent-conditioned value function.
//!
//! For each intent z: value iteration with reward I(s = z) yields the optimal
//! z-reaching policy; that policy is then evaluated against reward I(s = g)
//! under the same termination convention. The z-policy is deterministic
//! (first argmax in action order) away from z; at z itself, where its own
//! episode has ended, evaluation takes a uniform step over all actions.

use worlds::{Geometry, ACTIONS};

use crate::error::{IcvfError, Result};

const CONVERGENCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 100_000;
const STATE_LIMIT: usize = 1000;

/// Dense V*(s, g, z) over the free-cell state enumeration.
#[derive(Debug, Clone)]
pub struct OracleTable {
    pub n: usize,
    values: Vec<f64>,
}

impl OracleTable {
    pub fn get(&self, s: usize, g: usize, z: usize) -> f64 {
        self.values[(s * self.n + g) * self.n + z]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sup-norm gap against a table with identical (s, g, z) indexing.
    pub fn sup_gap(&self, other: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn tabular_icvf_oracle(
    geometry: &Geometry,
    gamma: f64,
    terminate_at_goal: bool,
) -> Result<OracleTable> {
    let states = geometry.free_cells();
    let n = states.len();
    if n == 0 {
        return Err(IcvfError::InvalidConfig("no free cells".into()));
    }
    if n > STATE_LIMIT {
        return Err(IcvfError::StateSpaceTooLarge { states: n });
    }
    let index_of = |cell: (usize, usize)| states.iter().position(|&c| c == cell).unwrap();

    // next[s][a] in state indices.
    let next: Vec<[usize; 5]> = states
        .iter()
        .map(|&cell| {
            let mut row = [0usize; 5];
            for (a, &action) in ACTIONS.iter().enumerate() {
                row[a] = index_of(geometry.nav_next(cell, action));
            }
            row
        })
        .collect();

    let mut values = vec![0.0; n * n * n];
    for z in 0..n {
        // Value iteration for reaching z.
        let mut vz = vec![0.0; n];
        for _ in 0..MAX_SWEEPS {
            let mut delta: f64 = 0.0;
            for s in 0..n {
                let r = if s == z { 1.0 } else { 0.0 };
                let bootstrap = if terminate_at_goal && s == z {
                    0.0
                } else {
                    next[s].iter().map(|&t| vz[t]).fold(f64::NEG_INFINITY, f64::max)
                };
                let updated = r + gamma * bootstrap;
                delta = delta.max((updated - vz[s]).abs());
                vz[s] = updated;
            }
            if delta < CONVERGENCE {
                break;
            }
        }
        // Deterministic greedy policy toward z; first argmax wins.
        let policy: Vec<usize> = (0..n)
            .map(|s| {
                let mut best = 0usize;
                let mut best_v = f64::NEG_INFINITY;
                for (a, &t) in next[s].iter().enumerate() {
                    if vz[t] > best_v {
                        best_v = vz[t];
                        best = a;
                    }
                }
                best
            })
            .collect();

        // Evaluate the z-policy against every goal g.
        for g in 0..n {
            let mut vg = vec![0.0; n];
            for _ in 0..MAX_SWEEPS {
                let mut delta: f64 = 0.0;
                for s in 0..n {
                    let r = if s == g { 1.0 } else { 0.0 };
                    let bootstrap = if terminate_at_goal && s == g {
                        0.0
                    } else if s == z {
                        next[s].iter().map(|&t| vg[t]).sum::<f64>() / 5.0
                    } else {
                        vg[next[s][policy[s]]]
                    };
                    let updated = r + gamma * bootstrap;
                    delta = delta.max((updated - vg[s]).abs());
                    vg[s] = updated;
                }
                if delta < CONVERGENCE {
                    break;
                }
            }
            for s in 0..n {
                values[(s * n + g) * n + z] = vg[s];
            }
        }
    }
    Ok(OracleTable { n, values })
}
