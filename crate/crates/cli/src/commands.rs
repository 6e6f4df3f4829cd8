//! The four commands. Each builds a serializable document; nothing here
//! touches stdout or the filesystem.

use serde::Serialize;
use ssep::analytics::{
    arrival_rate_boundary_form, arrival_rate_closed_form, estimate_from_stats, sojourn_closed_form,
    sojourn_littles_law, FluxReport, MarginalEstimate, SojournReport,
};
use ssep::exact::{
    build_generator_capped, joint_from_marginals, normalization_constant, product_form,
    site_marginal, solve_stationary,
};
use ssep::model::{decode, state_space_size};
use ssep::reversibility::{
    detailed_balance_residual, kolmogorov_cycle_check, perturb_strongest_transition,
    rates_balanced, reversed_generator, CycleOptions,
};
use ssep::simulate::{run_replicas, RNG_ALGORITHM};
use ssep::{Distribution, Generator, ModelParams, SimConfig, StateIndex};

use crate::config::{RunConfig, Tolerances};
use crate::error::{CliError, Result};
use crate::output::{to_json, Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Condition under which the balanced-rate checks apply.
pub const BALANCED_RATES: &str = "alpha == beta for every type";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub params: ModelParams,
    pub seed: u64,
    pub sim: SimConfig,
    pub tolerances: Tolerances,
    pub rng_algorithm: &'static str,
    pub state_cap: u64,
}

impl Provenance {
    fn new(command: &'static str, config: &RunConfig, state_cap: u64) -> Self {
        Self {
            tool: "ssep",
            version: VERSION,
            command,
            params: config.model.clone(),
            seed: config.sim.seed,
            sim: config.sim.clone(),
            tolerances: config.tolerances,
            rng_algorithm: RNG_ALGORITHM,
            state_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalRow {
    pub site: usize,
    pub closed_form: Vec<f64>,
    pub solved: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRow {
    pub state_index: u64,
    pub state: String,
    pub p_closed_form: f64,
    pub p_solved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResult {
    pub n_states: u64,
    pub normalization_constant: f64,
    /// `max_x |p_solved(x) − p_closed_form(x)|`.
    pub max_deviation: f64,
    pub marginals: Vec<MarginalRow>,
    pub distribution: Vec<StateRow>,
    #[serde(skip)]
    solved: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub result: ExactResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub replicas: usize,
    pub events_per_replica: u64,
    pub warmup_events_per_replica: u64,
    pub measured_events: u64,
    pub measurement_time: f64,
    pub arrivals_by_type: Vec<u64>,
    pub departures_by_type: Vec<u64>,
    pub completed_sojourns_by_type: Vec<u64>,
    pub particles_conserved: bool,
    pub flux: FluxReport,
    pub sojourn: SojournReport,
    pub marginals: Vec<MarginalEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub result: SimulationResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub condition: Option<String>,
    pub detail: Option<String>,
}

impl Check {
    fn within(name: &'static str, measured: f64, tolerance: f64) -> Self {
        let status = if measured <= tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            name,
            status,
            measured: Some(measured),
            tolerance: Some(tolerance),
            condition: None,
            detail: None,
        }
    }

    fn status(name: &'static str, status: CheckStatus, detail: impl Into<String>) -> Self {
        Self {
            name,
            status,
            measured: None,
            tolerance: None,
            condition: None,
            detail: Some(detail.into()),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    fn with_condition(mut self, condition: impl Into<String>) -> Self {
        self.condition = Some(condition.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perturbation {
    pub factor: f64,
    pub from: StateIndex,
    pub to: StateIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub provenance: Provenance,
    pub perturbation: Option<Perturbation>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub quantity: &'static str,
    pub ptype: Option<usize>,
    pub site: Option<usize>,
    pub state: Option<usize>,
    pub closed_form: f64,
    pub exact_engine: f64,
    pub empirical: Option<f64>,
    pub stderr: Option<f64>,
    pub zscore: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullReport {
    pub provenance: Provenance,
    pub exact: ExactResult,
    pub simulation: SimulationResult,
    pub comparison: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableName {
    Marginals,
    Distribution,
    Flux,
    Sojourn,
    Checks,
    Comparison,
}

impl TableName {
    pub fn as_str(self) -> &'static str {
        match self {
            TableName::Marginals => "marginals",
            TableName::Distribution => "distribution",
            TableName::Flux => "flux",
            TableName::Sojourn => "sojourn",
            TableName::Checks => "checks",
            TableName::Comparison => "comparison",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Exact(ExactReport),
    Simulate(SimulateReport),
    Verify(VerifyReport),
    Report(Box<FullReport>),
}

impl Document {
    pub fn command(&self) -> &'static str {
        match self {
            Document::Exact(_) => "exact",
            Document::Simulate(_) => "simulate",
            Document::Verify(_) => "verify",
            Document::Report(_) => "report",
        }
    }

    /// Exit status implied by the document: only `verify` can fail.
    pub fn exit_code(&self) -> i32 {
        match self {
            Document::Verify(v) if !v.passed => 1,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        match self {
            Document::Exact(d) => to_json(d),
            Document::Simulate(d) => to_json(d),
            Document::Verify(d) => to_json(d),
            Document::Report(d) => to_json(d),
        }
    }

    pub fn default_table(&self) -> TableName {
        match self {
            Document::Exact(_) => TableName::Distribution,
            Document::Simulate(_) => TableName::Flux,
            Document::Verify(_) => TableName::Checks,
            Document::Report(_) => TableName::Comparison,
        }
    }

    pub fn table(&self, name: TableName) -> Result<Table> {
        let unsupported = || CliError::UnsupportedTable {
            table: name.as_str().into(),
            command: self.command().into(),
        };
        match (self, name) {
            (Document::Exact(d), TableName::Distribution) => Ok(distribution_table(&d.result)),
            (Document::Report(d), TableName::Distribution) => Ok(distribution_table(&d.exact)),
            (Document::Exact(d), TableName::Marginals) => Ok(solved_marginal_table(&d.result)),
            (Document::Simulate(d), TableName::Marginals) => {
                Ok(empirical_marginal_table(&d.result))
            }
            (Document::Report(d), TableName::Marginals) => {
                Ok(empirical_marginal_table(&d.simulation))
            }
            (Document::Simulate(d), TableName::Flux) => Ok(flux_table(&d.result.flux)),
            (Document::Report(d), TableName::Flux) => Ok(flux_table(&d.simulation.flux)),
            (Document::Simulate(d), TableName::Sojourn) => Ok(sojourn_table(&d.result.sojourn)),
            (Document::Report(d), TableName::Sojourn) => Ok(sojourn_table(&d.simulation.sojourn)),
            (Document::Verify(d), TableName::Checks) => Ok(checks_table(d)),
            (Document::Report(d), TableName::Comparison) => Ok(comparison_table(&d.comparison)),
            _ => Err(unsupported()),
        }
    }
}

fn distribution_table(r: &ExactResult) -> Table {
    let mut t = Table::new(vec![
        "state_index",
        "state_string",
        "p_closed_form",
        "p_solved",
    ]);
    for row in &r.distribution {
        t.push(vec![
            Cell::Int(row.state_index),
            Cell::Text(row.state.clone()),
            Cell::Float(row.p_closed_form),
            Cell::Float(row.p_solved),
        ]);
    }
    t
}

fn marginal_table<'a>(rows: impl Iterator<Item = (usize, &'a [f64])>) -> Table {
    let mut t = Table::new(vec!["site", "state", "probability"]);
    for (site, probs) in rows {
        for (state, p) in probs.iter().enumerate() {
            t.push(vec![
                Cell::Int(site as u64),
                Cell::Int(state as u64),
                Cell::Float(*p),
            ]);
        }
    }
    t
}

fn solved_marginal_table(r: &ExactResult) -> Table {
    marginal_table(r.marginals.iter().map(|m| (m.site, m.solved.as_slice())))
}

fn empirical_marginal_table(r: &SimulationResult) -> Table {
    marginal_table(r.marginals.iter().map(|m| (m.site, m.empirical.as_slice())))
}

fn flux_table(f: &FluxReport) -> Table {
    let mut t = Table::new(vec![
        "type",
        "j_closed",
        "j_boundary",
        "j_empirical",
        "stderr",
        "zscore",
    ]);
    for e in &f.entries {
        t.push(vec![
            Cell::Int(e.ptype as u64),
            Cell::Float(e.closed_form),
            Cell::Float(e.boundary_form),
            Cell::OptFloat(e.empirical),
            Cell::OptFloat(e.stderr),
            Cell::OptFloat(e.zscore),
        ]);
    }
    t
}

fn sojourn_table(s: &SojournReport) -> Table {
    let mut t = Table::new(vec![
        "type",
        "u_closed",
        "u_littles",
        "u_empirical",
        "stderr",
        "zscore",
        "samples",
    ]);
    for e in &s.entries {
        t.push(vec![
            Cell::Int(e.ptype as u64),
            Cell::Float(e.closed_form),
            Cell::Float(e.littles_law),
            Cell::OptFloat(e.empirical),
            Cell::OptFloat(e.stderr),
            Cell::OptFloat(e.zscore),
            Cell::Int(e.samples),
        ]);
    }
    t
}

fn checks_table(v: &VerifyReport) -> Table {
    let mut t = Table::new(vec![
        "check",
        "status",
        "measured",
        "tolerance",
        "condition",
        "detail",
    ]);
    for c in &v.checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        };
        t.push(vec![
            Cell::Text(c.name.into()),
            Cell::Text(status.into()),
            Cell::OptFloat(c.measured),
            Cell::OptFloat(c.tolerance),
            Cell::Text(c.condition.clone().unwrap_or_default()),
            Cell::Text(c.detail.clone().unwrap_or_default()),
        ]);
    }
    t
}

fn comparison_table(rows: &[ComparisonRow]) -> Table {
    let mut t = Table::new(vec![
        "quantity",
        "type",
        "site",
        "state",
        "closed_form",
        "exact_engine",
        "empirical",
        "stderr",
        "zscore",
    ]);
    let idx =
        |v: Option<usize>| v.map_or_else(|| Cell::Text(String::new()), |x| Cell::Int(x as u64));
    for r in rows {
        t.push(vec![
            Cell::Text(r.quantity.into()),
            idx(r.ptype),
            idx(r.site),
            idx(r.state),
            Cell::Float(r.closed_form),
            Cell::Float(r.exact_engine),
            Cell::OptFloat(r.empirical),
            Cell::OptFloat(r.stderr),
            Cell::OptFloat(r.zscore),
        ]);
    }
    t
}

fn solve_exact(model: &ModelParams, state_cap: u64) -> Result<ExactResult> {
    let n_states = state_space_size(model)?;
    let gen = build_generator_capped(model, state_cap)?;
    let solved = solve_stationary(&gen)?;
    let closed = product_form(model)?;
    let max_deviation = solved.max_abs_diff(&closed)?;
    let marginals = (1..=model.n_sites())
        .map(|site| {
            Ok(MarginalRow {
                site,
                closed_form: site_marginal(model, site)?.probs().to_vec(),
                solved: solved.site_marginal(model, site)?.probs().to_vec(),
            })
        })
        .collect::<Result<_>>()?;
    let distribution = (0..n_states)
        .map(|i| {
            let index = StateIndex(i);
            Ok(StateRow {
                state_index: i,
                state: decode(index, model)?.to_string(),
                p_closed_form: closed.get(index),
                p_solved: solved.get(index),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExactResult {
        n_states,
        normalization_constant: normalization_constant(model),
        max_deviation,
        marginals,
        distribution,
        solved,
    })
}

pub fn exact(config: &RunConfig, state_cap: u64) -> Result<ExactReport> {
    Ok(ExactReport {
        provenance: Provenance::new("exact", config, state_cap),
        result: solve_exact(&config.model, state_cap)?,
    })
}

fn run_simulation(config: &RunConfig) -> Result<SimulationResult> {
    let model = &config.model;
    let stats = run_replicas(model, &config.sim)?;
    let est = estimate_from_stats(&stats, model)?;
    Ok(SimulationResult {
        replicas: stats.replica_ids.len(),
        events_per_replica: config.sim.max_events,
        warmup_events_per_replica: config.sim.warmup_events(),
        measured_events: stats.event_count,
        measurement_time: stats.total_time,
        arrivals_by_type: stats.arrivals_by_type.clone(),
        departures_by_type: stats.departures_by_type.clone(),
        completed_sojourns_by_type: stats
            .completed_sojourns
            .iter()
            .map(|s| s.len() as u64)
            .collect(),
        particles_conserved: stats.conserves_particles(),
        flux: est.flux,
        sojourn: est.sojourn,
        marginals: est.marginals,
    })
}

pub fn simulate(config: &RunConfig, state_cap: u64) -> Result<SimulateReport> {
    Ok(SimulateReport {
        provenance: Provenance::new("simulate", config, state_cap),
        result: run_simulation(config)?,
    })
}

/// `(J_k, U_k)` for every type, read off a solved distribution.
fn engine_flux_sojourn(model: &ModelParams, dist: &Distribution) -> Result<Vec<(f64, f64)>> {
    let marginals = (1..=model.n_sites())
        .map(|s| dist.site_marginal(model, s))
        .collect::<ssep::Result<Vec<_>>>()?;
    let vacancy = marginals[0].vacancy() + marginals[model.n_sites() - 1].vacancy();
    Ok((1..=model.n_types())
        .map(|k| {
            let j = model.alpha_of(k) * vacancy;
            let occupied: f64 = marginals.iter().map(|m| m.occupancy(k)).sum();
            (j, occupied / j)
        })
        .collect())
}

pub fn report(config: &RunConfig, state_cap: u64) -> Result<FullReport> {
    let model = &config.model;
    let exact = solve_exact(model, state_cap)?;
    let simulation = run_simulation(config)?;
    let engine = engine_flux_sojourn(model, &exact.solved)?;

    let mut comparison = Vec::new();
    for (e, (j, _)) in simulation.flux.entries.iter().zip(&engine) {
        comparison.push(ComparisonRow {
            quantity: "flux",
            ptype: Some(e.ptype),
            site: None,
            state: None,
            closed_form: e.closed_form,
            exact_engine: *j,
            empirical: e.empirical,
            stderr: e.stderr,
            zscore: e.zscore,
        });
    }
    for (e, (_, u)) in simulation.sojourn.entries.iter().zip(&engine) {
        comparison.push(ComparisonRow {
            quantity: "sojourn",
            ptype: Some(e.ptype),
            site: None,
            state: None,
            closed_form: e.closed_form,
            exact_engine: *u,
            empirical: e.empirical,
            stderr: e.stderr,
            zscore: e.zscore,
        });
    }
    for (est, solved) in simulation.marginals.iter().zip(&exact.marginals) {
        for state in 0..est.closed_form.len() {
            comparison.push(ComparisonRow {
                quantity: "marginal",
                ptype: None,
                site: Some(est.site),
                state: Some(state),
                closed_form: est.closed_form[state],
                exact_engine: solved.solved[state],
                empirical: Some(est.empirical[state]),
                stderr: est.stderr[state],
                zscore: est.zscore[state],
            });
        }
    }
    Ok(FullReport {
        provenance: Provenance::new("report", config, state_cap),
        exact,
        simulation,
        comparison,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Test mode: scale the transition carrying the largest stationary flow
    /// by this factor before running the battery.
    pub perturb: Option<f64>,
}

/// Longest cycle examined by the cycle check.
pub fn cycle_length(model: &ModelParams) -> usize {
    (model.n_sites() + 1).clamp(3, 6)
}

/// Solves every model variant that is irreducible and reports the largest
/// deviation from `reference`; reducible variants are listed in the detail.
fn independence_check(
    name: &'static str,
    variants: Vec<(String, ModelParams)>,
    reference: &Distribution,
    tolerance: f64,
    state_cap: u64,
) -> Result<Check> {
    let mut worst: Option<f64> = None;
    let mut compared = Vec::new();
    let mut skipped = Vec::new();
    for (label, params) in variants {
        let gen = build_generator_capped(&params, state_cap)?;
        if !gen.is_strongly_connected() {
            skipped.push(label);
            continue;
        }
        let dev = solve_stationary(&gen)?.max_abs_diff(reference)?;
        worst = Some(worst.map_or(dev, |w| w.max(dev)));
        compared.push(label);
    }
    let mut detail = format!("compared: {}", list_or_none(&compared));
    if !skipped.is_empty() {
        detail.push_str(&format!(
            "; not compared (reducible): {}",
            skipped.join(", ")
        ));
    }
    Ok(match worst {
        Some(w) => Check::within(name, w, tolerance).with_detail(detail),
        None => Check::status(name, CheckStatus::Skipped, detail),
    })
}

fn list_or_none(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}

fn fmt_rates(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn delta_variants(model: &ModelParams) -> Result<Vec<(String, ModelParams)>> {
    let d = model.delta();
    let k = model.n_types();
    let mut candidates: Vec<Vec<f64>> = vec![
        d.iter().map(|x| 0.5 * x).collect(),
        d.iter().map(|x| 3.0 * x).collect(),
        (0..k).map(|i| 0.25 + i as f64).collect(),
        vec![0.0; k],
    ];
    if k > 1 {
        let mut one_zero = d.to_vec();
        one_zero[0] = 0.0;
        candidates.push(one_zero);
    }
    candidates.retain(|c| c.as_slice() != d);
    candidates.dedup();
    candidates
        .into_iter()
        .map(|c| Ok((format!("delta={}", fmt_rates(&c)), model.with_delta(c)?)))
        .collect()
}

pub fn verify(config: &RunConfig, state_cap: u64, opts: &VerifyOptions) -> Result<VerifyReport> {
    let model = &config.model;
    let tol = &config.tolerances;
    let closed = product_form(model)?;
    let forward = build_generator_capped(model, state_cap)?;
    let (gen, perturbation): (Generator, Option<Perturbation>) = match opts.perturb {
        Some(factor) => {
            let (g, (from, to)) = perturb_strongest_transition(&forward, &closed, factor)?;
            (g, Some(Perturbation { factor, from, to }))
        }
        None => (forward, None),
    };
    let mut checks = Vec::new();

    checks.push(Check::within(
        "generator_row_sums",
        gen.max_row_sum_abs(),
        tol.balance,
    ));

    let connected = gen.is_strongly_connected();
    checks.push(Check::status(
        "irreducibility",
        if connected {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        if connected {
            "transition graph is strongly connected"
        } else {
            "transition graph is not strongly connected; the stationary law is not unique"
        },
    ));

    let solved = solve_stationary(&gen);
    checks.push(match &solved {
        Ok(d) => Check::within("oracle_equivalence", d.max_abs_diff(&closed)?, tol.oracle)
            .with_detail("max elementwise |solved - product form|"),
        Err(e) => Check::status(
            "oracle_equivalence",
            CheckStatus::Fail,
            format!("solve failed: {e}"),
        ),
    });
    let solved = solved.ok();

    checks.push(match &solved {
        Some(d) => {
            let min = d.probs().iter().copied().fold(f64::INFINITY, f64::min);
            let mut c = Check::status(
                "positivity",
                if min > 0.0 {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                "smallest solved state probability",
            );
            c.measured = Some(min);
            c
        }
        None => Check::status("positivity", CheckStatus::Fail, "no solved distribution"),
    });

    checks.push(
        Check::within(
            "global_balance",
            gen.balance_residual(&closed)?,
            tol.balance,
        )
        .with_detail("max |(pQ)_j| for the product form"),
    );

    let closed_marginals = (1..=model.n_sites())
        .map(|s| site_marginal(model, s))
        .collect::<ssep::Result<Vec<_>>>()?;
    match &solved {
        Some(d) => {
            let mut vs_closed = 0.0f64;
            let mut across = 0.0f64;
            let first = d.site_marginal(model, 1)?;
            for (i, cm) in closed_marginals.iter().enumerate() {
                let m = d.site_marginal(model, i + 1)?;
                vs_closed = vs_closed.max(m.max_abs_diff(cm));
                across = across.max(m.max_abs_diff(&first));
            }
            checks.push(Check::within(
                "marginals_closed_form",
                vs_closed,
                tol.marginal,
            ));
            checks.push(Check::within(
                "marginals_site_uniform",
                across,
                tol.marginal,
            ));
        }
        None => {
            checks.push(Check::status(
                "marginals_closed_form",
                CheckStatus::Fail,
                "no solved distribution",
            ));
            checks.push(Check::status(
                "marginals_site_uniform",
                CheckStatus::Fail,
                "no solved distribution",
            ));
        }
    }

    checks.push(
        Check::within(
            "product_of_marginals",
            closed.max_abs_diff(&joint_from_marginals(model)?)?,
            tol.marginal,
        )
        .with_detail("product form vs product of closed-form site marginals"),
    );

    let balance = detailed_balance_residual(&gen, &closed)?;
    let worst = balance
        .worst_pair
        .map(|(a, b)| format!("worst pair {} -> {}", a.0, b.0))
        .unwrap_or_else(|| "no transitions".into());
    let per_class: Vec<String> = balance
        .by_class
        .iter()
        .map(|c| format!("{:?}: {:e}", c.class, c.max_abs_residual).to_lowercase())
        .collect();
    checks.push(
        Check::within("detailed_balance", balance.max_abs_residual, tol.balance)
            .with_detail(format!("{worst}; {}", per_class.join(", "))),
    );

    let reversed = reversed_generator(&gen, &closed).and_then(|r| r.max_abs_diff(&gen));
    let reversed_check = |name: &'static str| match &reversed {
        Ok(diff) => Check::within(name, *diff, tol.reversed)
            .with_detail("max entrywise |reversed rate - forward rate|"),
        Err(e) => Check::status(
            name,
            CheckStatus::Fail,
            format!("reversed chain unavailable: {e}"),
        ),
    };
    checks.push(reversed_check("reversed_rates_general"));
    let balanced = rates_balanced(model);
    checks.push(if balanced {
        reversed_check("reversed_rates_balanced")
            .with_condition(format!("{BALANCED_RATES}: satisfied"))
    } else {
        Check::status(
            "reversed_rates_balanced",
            CheckStatus::Skipped,
            "not applicable",
        )
        .with_condition(format!("{BALANCED_RATES}: not satisfied"))
    });

    checks.push(if !balanced {
        Check::status("uniformity", CheckStatus::Skipped, "not applicable")
            .with_condition(format!("{BALANCED_RATES}: not satisfied"))
    } else {
        match &solved {
            Some(d) => {
                let target = 1.0 / d.len() as f64;
                let dev = d
                    .probs()
                    .iter()
                    .fold(0.0f64, |acc, p| acc.max((p - target).abs()));
                Check::within("uniformity", dev, tol.uniformity)
                    .with_condition(format!("{BALANCED_RATES}: satisfied"))
                    .with_detail("max |p(x) - (K+1)^-N|")
            }
            None => Check::status("uniformity", CheckStatus::Fail, "no solved distribution")
                .with_condition(format!("{BALANCED_RATES}: satisfied")),
        }
    });

    let engine = solved
        .as_ref()
        .map(|d| engine_flux_sojourn(model, d))
        .transpose()?;
    let mut flux_dev = 0.0f64;
    let mut little_dev = 0.0f64;
    for k in 1..=model.n_types() {
        let j = arrival_rate_closed_form(model, k)?;
        let u = sojourn_closed_form(model, k)?;
        flux_dev = flux_dev.max((j - arrival_rate_boundary_form(model, k)?).abs());
        little_dev = little_dev.max((sojourn_littles_law(model, k)? - u).abs());
        if let Some(e) = &engine {
            flux_dev = flux_dev.max((e[k - 1].0 - j).abs());
            little_dev = little_dev.max((e[k - 1].1 - u).abs());
        }
    }
    let source = if engine.is_some() {
        "closed forms and solved distribution"
    } else {
        "closed forms only; no solved distribution"
    };
    checks.push(Check::within("flux_identity", flux_dev, tol.identity).with_detail(source));
    checks.push(Check::within("littles_law", little_dev, tol.identity).with_detail(source));

    let reference = solved.as_ref().unwrap_or(&closed);
    checks.push(independence_check(
        "delta_independence",
        delta_variants(model)?,
        reference,
        tol.independence,
        state_cap,
    )?);
    let flipped = model.with_boundary_hops(!model.boundary_hops());
    checks.push(independence_check(
        "boundary_hop_independence",
        vec![(
            format!("boundary_hops={}", flipped.boundary_hops()),
            flipped,
        )],
        reference,
        tol.independence,
        state_cap,
    )?);

    let len = cycle_length(model);
    let cycles = kolmogorov_cycle_check(
        &gen,
        len,
        &CycleOptions {
            seed: config.sim.seed,
            ..CycleOptions::default()
        },
    )?;
    checks.push(
        Check::within("kolmogorov_cycles", cycles.max_residual, tol.cycle).with_detail(format!(
            "{} {} cycles of length <= {len}",
            cycles.cycles_checked,
            if cycles.exhaustive {
                "enumerated"
            } else {
                "sampled"
            }
        )),
    );

    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(VerifyReport {
        provenance: Provenance::new("verify", config, state_cap),
        perturbation,
        passed,
        checks,
    })
}
