//! Detailed balance, time reversal and the Kolmogorov cycle criterion.
//!
//! The product-form law balances every transition against its inverse
//! (`p_i λ_ij = p_j λ_ji` for arrivals/departures and for hops alike), so the
//! reversed chain `λ̃_ij = p_j λ_ji / p_i` coincides with the forward one for
//! any rates, and under `α = β` every state is equally likely.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsepError};
use crate::exact::{
    build_generator, solve_stationary, Distribution, Generator, Transition, TransitionLabel,
};
use crate::model::{state_space_size, ModelParams, StateIndex, TransitionClass};

/// Exhaustive cycle enumeration up to this many states; sampling above.
pub const EXHAUSTIVE_CYCLE_LIMIT: usize = 729;

/// Tolerance on the global balance residual accepted by [`reversed_generator`].
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResidual {
    pub class: TransitionClass,
    pub max_abs_residual: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// max over ordered pairs with `λ_ij > 0` of `|p_i λ_ij − p_j λ_ji|`.
    pub max_abs_residual: f64,
    pub worst_pair: Option<(StateIndex, StateIndex)>,
    pub by_class: Vec<ClassResidual>,
}

impl BalanceReport {
    pub fn class_residual(&self, class: TransitionClass) -> f64 {
        self.by_class
            .iter()
            .find(|c| c.class == class)
            .map_or(0.0, |c| c.max_abs_residual)
    }
}

fn check_dims(gen: &Generator, dist: &Distribution) -> Result<()> {
    if gen.dim() != dist.len() {
        return Err(SsepError::DimensionMismatch {
            expected: gen.dim(),
            found: dist.len(),
        });
    }
    Ok(())
}

pub fn detailed_balance_residual(gen: &Generator, dist: &Distribution) -> Result<BalanceReport> {
    check_dims(gen, dist)?;
    let p = dist.probs();
    let classes = [
        TransitionClass::Arrival,
        TransitionClass::Departure,
        TransitionClass::Hop,
    ];
    let mut by_class: Vec<ClassResidual> = classes
        .iter()
        .map(|&class| ClassResidual {
            class,
            max_abs_residual: 0.0,
            pairs: 0,
        })
        .collect();
    let mut max = 0.0;
    let mut worst = None;
    for t in gen.transitions() {
        let r = (p[t.from] * t.rate - p[t.to] * gen.rate(t.to, t.from)).abs();
        let slot = by_class
            .iter_mut()
            .find(|c| c.class == t.label.class)
            .expect("every class has a slot");
        slot.pairs += 1;
        slot.max_abs_residual = slot.max_abs_residual.max(r);
        if worst.is_none() || r > max {
            max = r;
            worst = Some((StateIndex(t.from as u64), StateIndex(t.to as u64)));
        }
    }
    Ok(BalanceReport {
        max_abs_residual: max,
        worst_pair: worst,
        by_class,
    })
}

/// Rates of the time-reversed chain, in the same sparse layout as [`Generator`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReversedGenerator(Generator);

impl ReversedGenerator {
    pub fn generator(&self) -> &Generator {
        &self.0
    }

    pub fn into_generator(self) -> Generator {
        self.0
    }

    /// Largest entrywise |λ̃_ij − λ_ij| over the union of both supports.
    pub fn max_abs_diff(&self, forward: &Generator) -> Result<f64> {
        if self.0.dim() != forward.dim() {
            return Err(SsepError::DimensionMismatch {
                expected: forward.dim(),
                found: self.0.dim(),
            });
        }
        let mut max: f64 = 0.0;
        for t in self.0.transitions() {
            max = max.max((t.rate - forward.rate(t.from, t.to)).abs());
        }
        for t in forward.transitions() {
            max = max.max((t.rate - self.0.rate(t.from, t.to)).abs());
        }
        Ok(max)
    }
}

/// `λ̃_ij = p_j λ_ji / p_i`; zero wherever `λ_ji` is.
pub fn reversed_generator(gen: &Generator, dist: &Distribution) -> Result<ReversedGenerator> {
    check_dims(gen, dist)?;
    let p = dist.probs();
    if let Some(i) = p.iter().position(|&x| x <= 0.0) {
        return Err(SsepError::ZeroProbability { state: i as u64 });
    }
    let residual = gen.balance_residual(dist)?;
    if residual > STATIONARITY_TOLERANCE {
        return Err(SsepError::NotStationary {
            residual,
            tolerance: STATIONARITY_TOLERANCE,
        });
    }
    let transitions = gen
        .transitions()
        .map(|t| Transition {
            from: t.to,
            to: t.from,
            rate: p[t.from] * t.rate / p[t.to],
            label: TransitionLabel {
                class: t.label.class.paired(),
                ptype: t.label.ptype,
            },
        })
        .collect();
    Ok(ReversedGenerator(Generator::from_transitions(
        gen.dim(),
        transitions,
    )?))
}

/// Copy of `gen` with the transition carrying the largest probability flow
/// `p_i λ_ij` scaled by `factor`. Used as a negative control: the result no
/// longer satisfies detailed balance with `dist`.
pub fn perturb_strongest_transition(
    gen: &Generator,
    dist: &Distribution,
    factor: f64,
) -> Result<(Generator, (StateIndex, StateIndex))> {
    check_dims(gen, dist)?;
    let p = dist.probs();
    let t = gen
        .transitions()
        .max_by(|a, b| (p[a.from] * a.rate).total_cmp(&(p[b.from] * b.rate)))
        .ok_or_else(|| SsepError::InvalidArgument("generator has no transitions".into()))?;
    let perturbed = gen.with_scaled_rate(t.from, t.to, factor)?;
    Ok((
        perturbed,
        (StateIndex(t.from as u64), StateIndex(t.to as u64)),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    /// max over checked cycles of `|Π forward − Π reverse| / Π forward`.
    pub max_residual: f64,
    pub cycles_checked: u64,
    pub exhaustive: bool,
    pub max_cycle_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOptions {
    pub exhaustive_limit: usize,
    /// Closed walks drawn when sampling.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            exhaustive_limit: EXHAUSTIVE_CYCLE_LIMIT,
            samples: 20_000,
            seed: 0x5eed_c1c1e,
        }
    }
}

fn cycle_residual(gen: &Generator, path: &[usize]) -> f64 {
    let mut forward = 1.0;
    let mut reverse = 1.0;
    for w in 0..path.len() {
        let a = path[w];
        let b = path[(w + 1) % path.len()];
        forward *= gen.rate(a, b);
        reverse *= gen.rate(b, a);
    }
    (forward - reverse).abs() / forward
}

pub fn kolmogorov_cycle_residual(gen: &Generator, max_cycle_len: usize) -> Result<f64> {
    Ok(kolmogorov_cycle_check(gen, max_cycle_len, &CycleOptions::default())?.max_residual)
}

/// Compares the rate product around directed cycles with the product around
/// the same cycle traversed backwards.
///
/// Small generators get every simple cycle of length `2..=max_cycle_len`
/// (each enumerated once from its smallest state). Larger ones get closed
/// walks built from a random outward walk and a shortest path home that
/// avoids retracing the last step.
pub fn kolmogorov_cycle_check(
    gen: &Generator,
    max_cycle_len: usize,
    opts: &CycleOptions,
) -> Result<CycleReport> {
    if max_cycle_len < 3 {
        return Err(SsepError::InvalidArgument(format!(
            "max_cycle_len must be at least 3, got {max_cycle_len}"
        )));
    }
    if gen.dim() <= opts.exhaustive_limit {
        let mut report = CycleReport {
            max_residual: 0.0,
            cycles_checked: 0,
            exhaustive: true,
            max_cycle_len,
        };
        let mut path = Vec::with_capacity(max_cycle_len);
        for start in 0..gen.dim() {
            path.clear();
            path.push(start);
            enumerate_from(gen, start, max_cycle_len, &mut path, &mut report);
        }
        Ok(report)
    } else {
        Ok(sample_cycles(gen, max_cycle_len, opts))
    }
}

fn enumerate_from(
    gen: &Generator,
    start: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    report: &mut CycleReport,
) {
    let last = *path.last().expect("path starts at `start`");
    for t in gen.row(last) {
        if t.to == start && path.len() >= 2 {
            report.cycles_checked += 1;
            report.max_residual = report.max_residual.max(cycle_residual(gen, path));
        } else if t.to > start && path.len() < max_len && !path.contains(&t.to) {
            path.push(t.to);
            enumerate_from(gen, start, max_len, path, report);
            path.pop();
        }
    }
}

fn sample_cycles(gen: &Generator, max_len: usize, opts: &CycleOptions) -> CycleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = CycleReport {
        max_residual: 0.0,
        cycles_checked: 0,
        exhaustive: false,
        max_cycle_len: max_len,
    };
    let out_len = max_len.div_ceil(2);
    for _ in 0..opts.samples {
        let start = rng.random_range(0..gen.dim());
        let mut walk = vec![start];
        for _ in 0..out_len {
            let here = *walk.last().unwrap();
            let row: Vec<Transition> = gen.row(here).collect();
            if row.is_empty() {
                break;
            }
            walk.push(row[rng.random_range(0..row.len())].to);
        }
        if walk.len() < 2 {
            continue;
        }
        let end = *walk.last().unwrap();
        let banned = (end, walk[walk.len() - 2]);
        let budget = max_len - (walk.len() - 1);
        if let Some(home) = shortest_path(gen, end, start, budget, banned) {
            // `home` runs end -> ... -> start; drop both endpoints already in `walk`.
            walk.extend_from_slice(&home[1..home.len() - 1]);
            if walk.len() >= 2 {
                report.cycles_checked += 1;
                report.max_residual = report.max_residual.max(cycle_residual(gen, &walk));
            }
        }
    }
    report
}

fn shortest_path(
    gen: &Generator,
    from: usize,
    to: usize,
    max_steps: usize,
    banned: (usize, usize),
) -> Option<Vec<usize>> {
    if from == to {
        return Some(vec![from]);
    }
    let mut parent = std::collections::HashMap::from([(from, usize::MAX)]);
    let mut queue = VecDeque::from([(from, 0usize)]);
    while let Some((u, depth)) = queue.pop_front() {
        if depth == max_steps {
            continue;
        }
        for t in gen.row(u) {
            if (u, t.to) == banned || parent.contains_key(&t.to) {
                continue;
            }
            parent.insert(t.to, u);
            if t.to == to {
                let mut path = vec![to];
                let mut cur = to;
                while parent[&cur] != usize::MAX {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back((t.to, depth + 1));
        }
    }
    None
}

/// Whether arrival and departure rates coincide for every type.
pub fn rates_balanced(params: &ModelParams) -> bool {
    params
        .alpha()
        .iter()
        .zip(params.beta())
        .all(|(a, b)| a == b)
}

/// Max deviation of the solved stationary law from `(K+1)^(−N)`; requires
/// `α_k = β_k` for every type.
pub fn uniformity_check(params: &ModelParams) -> Result<f64> {
    if let Some(k) = params
        .alpha()
        .iter()
        .zip(params.beta())
        .position(|(a, b)| a != b)
    {
        return Err(SsepError::RatesNotEqual { ptype: k + 1 });
    }
    let m = state_space_size(params)?;
    let dist = solve_stationary(&build_generator(params)?)?;
    let target = 1.0 / m as f64;
    Ok(dist
        .probs()
        .iter()
        .fold(0.0, |acc, p| acc.max((p - target).abs())))
}
