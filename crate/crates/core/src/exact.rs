//! Exact stationary analysis: the transition-rate generator over all
//! `(K+1)^N` states, a numerical solve of the global balance equations, and
//! the closed-form product-form distribution with its site marginals.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsepError};
use crate::model::{
    apply_to_sites, decode_into, encode_digits, for_each_enabled, state_space_size, ModelParams,
    StateIndex, TransitionClass,
};

/// Largest state space the exact engine will build (2^24 states).
pub const DEFAULT_STATE_CAP: u64 = 1 << 24;

/// Dense direct solve up to this many states; power iteration above.
pub const DENSE_SOLVE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionLabel {
    pub class: TransitionClass,
    pub ptype: usize,
}

/// One off-diagonal generator entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub label: TransitionLabel,
}

/// Sparse generator in compressed-row form. Columns are sorted within each
/// row; the diagonal is implied as minus the row's off-diagonal sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    dim: usize,
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    rates: Vec<f64>,
    labels: Vec<TransitionLabel>,
}

impl Generator {
    /// Builds a generator from an arbitrary list of off-diagonal entries.
    /// Entries with rate zero are dropped.
    pub fn from_transitions(dim: usize, mut transitions: Vec<Transition>) -> Result<Self> {
        for t in &transitions {
            if t.from >= dim || t.to >= dim {
                return Err(SsepError::InvalidArgument(format!(
                    "transition {} -> {} outside {dim} states",
                    t.from, t.to
                )));
            }
            if t.from == t.to {
                return Err(SsepError::InvalidArgument(format!(
                    "self transition at state {}",
                    t.from
                )));
            }
            if !(t.rate.is_finite() && t.rate >= 0.0) {
                return Err(SsepError::InvalidArgument(format!(
                    "rate {} for {} -> {} is not a non-negative number",
                    t.rate, t.from, t.to
                )));
            }
        }
        transitions.retain(|t| t.rate > 0.0);
        transitions.sort_by_key(|t| (t.from, t.to));
        if let Some(w) = transitions
            .windows(2)
            .find(|w| (w[0].from, w[0].to) == (w[1].from, w[1].to))
        {
            return Err(SsepError::InvalidArgument(format!(
                "duplicate transition {} -> {}",
                w[0].from, w[0].to
            )));
        }
        let mut row_offsets = vec![0usize; dim + 1];
        for t in &transitions {
            row_offsets[t.from + 1] += 1;
        }
        for i in 0..dim {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            dim,
            row_offsets,
            cols: transitions.iter().map(|t| t.to).collect(),
            rates: transitions.iter().map(|t| t.rate).collect(),
            labels: transitions.iter().map(|t| t.label).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of positive off-diagonal entries.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, from: usize) -> impl Iterator<Item = Transition> + '_ {
        let span = self.row_offsets[from]..self.row_offsets[from + 1];
        span.map(move |e| Transition {
            from,
            to: self.cols[e],
            rate: self.rates[e],
            label: self.labels[e],
        })
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i))
    }

    fn find(&self, from: usize, to: usize) -> Option<usize> {
        let lo = self.row_offsets[from];
        let hi = self.row_offsets[from + 1];
        self.cols[lo..hi].binary_search(&to).ok().map(|p| lo + p)
    }

    /// Off-diagonal rate `from -> to`, zero when absent.
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from >= self.dim || to >= self.dim {
            return 0.0;
        }
        self.find(from, to).map_or(0.0, |e| self.rates[e])
    }

    pub fn label(&self, from: usize, to: usize) -> Option<TransitionLabel> {
        self.find(from, to).map(|e| self.labels[e])
    }

    /// Total rate out of `from` (minus the diagonal entry).
    pub fn exit_rate(&self, from: usize) -> f64 {
        self.rates[self.row_offsets[from]..self.row_offsets[from + 1]]
            .iter()
            .sum()
    }

    /// Copy with the entry `from -> to` multiplied by `factor`.
    pub fn with_scaled_rate(&self, from: usize, to: usize, factor: f64) -> Result<Self> {
        let e = self
            .find(from, to)
            .ok_or_else(|| SsepError::InvalidArgument(format!("no transition {from} -> {to}")))?;
        if !(factor.is_finite() && factor > 0.0) {
            return Err(SsepError::InvalidArgument(format!(
                "scale factor {factor} must be positive"
            )));
        }
        let mut g = self.clone();
        g.rates[e] *= factor;
        Ok(g)
    }

    /// Largest |row sum| with the implied diagonal included.
    pub fn max_row_sum_abs(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let diag = -self.exit_rate(i);
                (self.row(i).map(|t| t.rate).sum::<f64>() + diag).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Whether `rate(i, j) > 0` exactly when `rate(j, i) > 0`.
    pub fn is_structurally_symmetric(&self) -> bool {
        self.transitions()
            .all(|t| self.find(t.to, t.from).is_some())
    }

    /// Whether every state reaches every other state.
    pub fn is_strongly_connected(&self) -> bool {
        if self.dim == 0 {
            return false;
        }
        let forward: Vec<&[usize]> = (0..self.dim)
            .map(|u| &self.cols[self.row_offsets[u]..self.row_offsets[u + 1]])
            .collect();
        let transposed = self.transpose_adjacency();
        let backward: Vec<&[usize]> = transposed.iter().map(Vec::as_slice).collect();
        reaches_all(&forward) && reaches_all(&backward)
    }

    fn transpose_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.dim];
        for t in self.transitions() {
            adj[t.to].push(t.from);
        }
        adj
    }

    /// `p Q` as a dense vector: entry j is the net probability flow into j.
    pub fn apply_left(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let pi = p[i];
            let mut exit = 0.0;
            for e in self.row_offsets[i]..self.row_offsets[i + 1] {
                out[self.cols[e]] += pi * self.rates[e];
                exit += self.rates[e];
            }
            out[i] -= pi * exit;
        }
        out
    }

    /// Max over states of |outflow − inflow| for `dist`.
    pub fn balance_residual(&self, dist: &Distribution) -> Result<f64> {
        if dist.len() != self.dim {
            return Err(SsepError::DimensionMismatch {
                expected: self.dim,
                found: dist.len(),
            });
        }
        Ok(self
            .apply_left(dist.probs())
            .iter()
            .fold(0.0, |m, v| m.max(v.abs())))
    }
}

/// Probability vector over all states, indexed by [`StateIndex`].
/// Breadth-first search from state 0 over `adj`.
fn reaches_all(adj: &[&[usize]]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adj.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Accepts a non-negative vector summing to one within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(SsepError::InvalidArgument("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(SsepError::InvalidArgument(format!(
                "invalid probability {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SsepError::InvalidArgument(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, index: StateIndex) -> f64 {
        self.probs[index.as_usize()]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(SsepError::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Total-variation distance.
    pub fn tv_distance(&self, other: &Distribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(SsepError::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Marginal law of one site, obtained by summing the joint distribution.
    pub fn site_marginal(&self, params: &ModelParams, site: usize) -> Result<SiteMarginal> {
        params.check_site(site)?;
        let m = state_space_size(params)?;
        if m as usize != self.len() {
            return Err(SsepError::DimensionMismatch {
                expected: m as usize,
                found: self.len(),
            });
        }
        let base = params.n_types() as u64 + 1;
        let stride = base.pow((params.n_sites() - site) as u32);
        let mut probs = vec![0.0; params.n_types() + 1];
        for (i, &p) in self.probs.iter().enumerate() {
            probs[((i as u64 / stride) % base) as usize] += p;
        }
        Ok(SiteMarginal { probs })
    }
}

/// Law of a single site: entry 0 is vacancy, entry k occupation by type k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteMarginal {
    probs: Vec<f64>,
}

impl SiteMarginal {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vacancy(&self) -> f64 {
        self.probs[0]
    }

    pub fn occupancy(&self, ptype: usize) -> f64 {
        self.probs[ptype]
    }

    pub fn max_abs_diff(&self, other: &SiteMarginal) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Builds the generator, refusing state spaces above [`DEFAULT_STATE_CAP`].
pub fn build_generator(params: &ModelParams) -> Result<Generator> {
    build_generator_capped(params, DEFAULT_STATE_CAP)
}

pub fn build_generator_capped(params: &ModelParams, cap: u64) -> Result<Generator> {
    let m = checked_size(params, cap)?;
    let n = params.n_sites();
    let k = params.n_types();
    let mut row_offsets = Vec::with_capacity(m + 1);
    let mut cols = Vec::new();
    let mut rates = Vec::new();
    let mut labels = Vec::new();
    let mut sites = vec![0u8; n];
    let mut next = vec![0u8; n];
    let mut row: Vec<(usize, f64, TransitionLabel)> = Vec::new();
    row_offsets.push(0);
    for i in 0..m {
        decode_into(i as u64, k, &mut sites);
        row.clear();
        for_each_enabled(&sites, params, |event, rate| {
            next.copy_from_slice(&sites);
            apply_to_sites(&mut next, &event);
            let j = encode_digits(&next, k) as usize;
            row.push((
                j,
                rate,
                TransitionLabel {
                    class: event.class(),
                    ptype: event.ptype,
                },
            ));
        });
        row.sort_by_key(|e| e.0);
        for &(j, r, l) in &row {
            cols.push(j);
            rates.push(r);
            labels.push(l);
        }
        row_offsets.push(cols.len());
    }
    Ok(Generator {
        dim: m,
        row_offsets,
        cols,
        rates,
        labels,
    })
}

fn checked_size(params: &ModelParams, cap: u64) -> Result<usize> {
    let m = state_space_size(params)?;
    if m > cap {
        return Err(SsepError::CapExceeded { states: m, cap });
    }
    usize::try_from(m).map_err(|_| SsepError::CapExceeded { states: m, cap })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Use the dense direct solve up to this many states.
    pub dense_limit: usize,
    /// Target ‖pQ‖∞ for the iterative path.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            dense_limit: DENSE_SOLVE_LIMIT,
            tolerance: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

pub fn solve_stationary(gen: &Generator) -> Result<Distribution> {
    solve_stationary_with(gen, &SolveOptions::default())
}

/// Solves `pQ = 0`, `Σp = 1`. Fails on reducible generators, since the
/// stationary law is then not unique or not strictly positive.
pub fn solve_stationary_with(gen: &Generator, opts: &SolveOptions) -> Result<Distribution> {
    if !gen.is_strongly_connected() {
        return Err(SsepError::Reducible);
    }
    let mut probs = if gen.dim() <= opts.dense_limit {
        solve_dense(gen)?
    } else {
        solve_power(gen, opts)?
    };
    if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
        return Err(SsepError::Singular(format!(
            "non-finite solution at state {i}"
        )));
    }
    if let Some(i) = probs.iter().position(|&p| p <= 0.0) {
        return Err(SsepError::ZeroProbability { state: i as u64 });
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(Distribution { probs })
}

fn solve_dense(gen: &Generator) -> Result<Vec<f64>> {
    let m = gen.dim();
    // Row j of the system is the balance equation of state j: Σ_i p_i Q_ij = 0.
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let mut exit = 0.0;
        for t in gen.row(i) {
            a[(t.to, i)] += t.rate;
            exit += t.rate;
        }
        a[(i, i)] -= exit;
    }
    for i in 0..m {
        a[(0, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[0] = 1.0;
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SsepError::Singular("LU factorization found a zero pivot".into()))?;
    Ok(x.iter().copied().collect())
}

fn solve_power(gen: &Generator, opts: &SolveOptions) -> Result<Vec<f64>> {
    let m = gen.dim();
    let max_exit = (0..m).map(|i| gen.exit_rate(i)).fold(0.0, f64::max);
    // Strictly above the largest exit rate so the uniformized chain is aperiodic.
    let lambda = 1.05 * max_exit;
    let mut p = vec![1.0 / m as f64; m];
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let flow = gen.apply_left(&p);
        residual = flow.iter().fold(0.0, |acc, v| acc.max(v.abs()));
        if residual <= opts.tolerance {
            return Ok(p);
        }
        for (pi, fi) in p.iter_mut().zip(&flow) {
            *pi += fi / lambda;
        }
        if it % 64 == 0 {
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
        }
    }
    Err(SsepError::NotConverged {
        iterations: opts.max_iterations,
        residual,
    })
}

/// `C = (1 + Σ_k α_k/β_k)^(−N)`, the probability of the all-vacant state.
pub fn normalization_constant(params: &ModelParams) -> f64 {
    let z = 1.0 + params.load_ratios().iter().sum::<f64>();
    z.powi(-(params.n_sites() as i32))
}

/// Closed-form stationary law: `p(x) = C · Π_{i: x_i ≠ 0} α_{x_i}/β_{x_i}`.
pub fn product_form(params: &ModelParams) -> Result<Distribution> {
    let m = checked_size(params, DEFAULT_STATE_CAP)?;
    let c = normalization_constant(params);
    let ratios = params.load_ratios();
    let mut sites = vec![0u8; params.n_sites()];
    let probs = (0..m)
        .map(|i| {
            decode_into(i as u64, params.n_types(), &mut sites);
            sites
                .iter()
                .filter(|&&v| v != 0)
                .fold(c, |acc, &v| acc * ratios[v as usize - 1])
        })
        .collect();
    Ok(Distribution { probs })
}

/// Closed-form marginal of `site`; the same for every site.
pub fn site_marginal(params: &ModelParams, site: usize) -> Result<SiteMarginal> {
    params.check_site(site)?;
    let ratios = params.load_ratios();
    let z = 1.0 + ratios.iter().sum::<f64>();
    let mut probs = Vec::with_capacity(ratios.len() + 1);
    probs.push(1.0 / z);
    probs.extend(ratios.iter().map(|r| r / z));
    Ok(SiteMarginal { probs })
}

/// Joint law built as the product of the closed-form site marginals.
pub fn joint_from_marginals(params: &ModelParams) -> Result<Distribution> {
    let m = checked_size(params, DEFAULT_STATE_CAP)?;
    let marginals = (1..=params.n_sites())
        .map(|s| site_marginal(params, s))
        .collect::<Result<Vec<_>>>()?;
    let mut sites = vec![0u8; params.n_sites()];
    let probs = (0..m)
        .map(|i| {
            decode_into(i as u64, params.n_types(), &mut sites);
            sites
                .iter()
                .zip(&marginals)
                .map(|(&v, marg)| marg.probs[v as usize])
                .product()
        })
        .collect();
    Ok(Distribution { probs })
}
