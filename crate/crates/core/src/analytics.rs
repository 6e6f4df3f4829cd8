//! Flux and sojourn-time observables.
//!
//! Closed forms, for `Z = 1 + Σ_l α_l/β_l`:
//!
//! - arrival rate of type k: `J_k = 2 α_k / Z`, equivalently
//!   `α_k (P_1(0) + P_N(0))`, the arrival rate times the vacancy of the two
//!   boundary sites;
//! - mean sojourn time of type k: `U_k = N / (2 β_k)`, equivalently mean
//!   number in system over arrival rate (Little's law).
//!
//! Empirical counterparts come from [`SimStats`]. When the measurement
//! window was split into two or more batches, standard errors are batch
//! means of ratio estimators; otherwise arrival counts are treated as
//! Poisson and sojourns as independent samples.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SsepError};
use crate::exact::site_marginal;
use crate::model::ModelParams;
use crate::simulate::SimStats;

pub fn arrival_rate_closed_form(params: &ModelParams, k: usize) -> Result<f64> {
    params.check_type(k)?;
    let z = 1.0 + params.load_ratios().iter().sum::<f64>();
    Ok(2.0 * params.alpha_of(k) / z)
}

/// Arrival rate times the vacancy probability of sites 1 and N.
pub fn arrival_rate_boundary_form(params: &ModelParams, k: usize) -> Result<f64> {
    params.check_type(k)?;
    let left = site_marginal(params, 1)?.vacancy();
    let right = site_marginal(params, params.n_sites())?.vacancy();
    Ok(params.alpha_of(k) * (left + right))
}

pub fn sojourn_closed_form(params: &ModelParams, k: usize) -> Result<f64> {
    params.check_type(k)?;
    Ok(params.n_sites() as f64 / (2.0 * params.beta_of(k)))
}

/// Mean number of type-k particles on the lattice divided by `J_k`.
pub fn sojourn_littles_law(params: &ModelParams, k: usize) -> Result<f64> {
    params.check_type(k)?;
    let mut occupancy = 0.0;
    for site in 1..=params.n_sites() {
        occupancy += site_marginal(params, site)?.occupancy(k);
    }
    Ok(occupancy / arrival_rate_closed_form(params, k)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeMethod {
    BatchMeans,
    Poisson,
    SampleVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataStatus {
    Ok,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxEntry {
    pub ptype: usize,
    pub closed_form: f64,
    pub boundary_form: f64,
    pub empirical: Option<f64>,
    pub stderr: Option<f64>,
    pub zscore: Option<f64>,
    pub se_method: Option<SeMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub entries: Vec<FluxEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournEntry {
    pub ptype: usize,
    pub closed_form: f64,
    pub littles_law: f64,
    pub empirical: Option<f64>,
    pub stderr: Option<f64>,
    pub zscore: Option<f64>,
    pub samples: u64,
    pub status: DataStatus,
    pub se_method: Option<SeMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournReport {
    pub entries: Vec<SojournEntry>,
}

/// Time-weighted occupancy of one site against its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub site: usize,
    pub closed_form: Vec<f64>,
    pub empirical: Vec<f64>,
    pub stderr: Vec<Option<f64>>,
    pub zscore: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub flux: FluxReport,
    pub sojourn: SojournReport,
    pub marginals: Vec<MarginalEstimate>,
}

/// Closed-form flux table with empirical columns left empty.
pub fn flux_report(params: &ModelParams) -> Result<FluxReport> {
    let entries = (1..=params.n_types())
        .map(|k| {
            Ok(FluxEntry {
                ptype: k,
                closed_form: arrival_rate_closed_form(params, k)?,
                boundary_form: arrival_rate_boundary_form(params, k)?,
                empirical: None,
                stderr: None,
                zscore: None,
                se_method: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FluxReport { entries })
}

pub fn sojourn_report(params: &ModelParams) -> Result<SojournReport> {
    let entries = (1..=params.n_types())
        .map(|k| {
            Ok(SojournEntry {
                ptype: k,
                closed_form: sojourn_closed_form(params, k)?,
                littles_law: sojourn_littles_law(params, k)?,
                empirical: None,
                stderr: None,
                zscore: None,
                samples: 0,
                status: DataStatus::InsufficientData,
                se_method: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SojournReport { entries })
}

fn zscore(estimate: f64, target: f64, stderr: Option<f64>) -> Option<f64> {
    match stderr {
        Some(se) if se > 0.0 => Some((estimate - target) / se),
        _ => None,
    }
}

/// Standard error of `Σy / Σx` from per-batch pairs `(y_b, x_b)`.
fn ratio_stderr(pairs: &[(f64, f64)]) -> Option<f64> {
    let b = pairs.len();
    if b < 2 {
        return None;
    }
    let sum_y: f64 = pairs.iter().map(|p| p.0).sum();
    let sum_x: f64 = pairs.iter().map(|p| p.1).sum();
    if sum_x <= 0.0 {
        return None;
    }
    let ratio = sum_y / sum_x;
    let mean_x = sum_x / b as f64;
    let ss: f64 = pairs
        .iter()
        .map(|(y, x)| ((y - ratio * x) / mean_x).powi(2))
        .sum();
    Some((ss / (b as f64 * (b as f64 - 1.0))).sqrt())
}

fn sample_stderr(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Some((var / n as f64).sqrt())
}

pub fn estimate_from_stats(stats: &SimStats, params: &ModelParams) -> Result<Estimates> {
    if &stats.params != params {
        return Err(SsepError::MixedModels);
    }
    if stats.total_time.is_nan() || stats.total_time <= 0.0 {
        return Err(SsepError::EmptyMeasurement);
    }
    let t = stats.total_time;
    let batched = stats.batches.len() >= 2;

    let mut flux = flux_report(params)?;
    for e in &mut flux.entries {
        let k = e.ptype - 1;
        let count = stats.arrivals_by_type[k];
        let rate = count as f64 / t;
        let (se, method) = if batched {
            let pairs: Vec<_> = stats
                .batches
                .iter()
                .map(|b| (b.arrivals[k] as f64, b.time))
                .collect();
            (ratio_stderr(&pairs), SeMethod::BatchMeans)
        } else {
            (Some((count as f64).sqrt() / t), SeMethod::Poisson)
        };
        e.empirical = Some(rate);
        e.stderr = se;
        e.zscore = zscore(rate, e.closed_form, se);
        e.se_method = Some(method);
    }

    let mut sojourn = sojourn_report(params)?;
    for e in &mut sojourn.entries {
        let k = e.ptype - 1;
        let samples = &stats.completed_sojourns[k];
        e.samples = samples.len() as u64;
        if samples.is_empty() {
            continue;
        }
        e.status = DataStatus::Ok;
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let usable_batches = stats
            .batches
            .iter()
            .filter(|b| b.sojourn_count[k] > 0)
            .count();
        let (se, method) = if batched && usable_batches >= 2 {
            let pairs: Vec<_> = stats
                .batches
                .iter()
                .map(|b| (b.sojourn_sum[k], b.sojourn_count[k] as f64))
                .collect();
            (ratio_stderr(&pairs), SeMethod::BatchMeans)
        } else {
            (sample_stderr(samples), SeMethod::SampleVariance)
        };
        e.empirical = Some(mean);
        e.stderr = se;
        e.zscore = zscore(mean, e.closed_form, se);
        e.se_method = Some(method);
    }

    let mut marginals = Vec::with_capacity(params.n_sites());
    for site in 1..=params.n_sites() {
        let closed = site_marginal(params, site)?.probs().to_vec();
        let row = &stats.site_occupancy_time[site - 1];
        let empirical: Vec<f64> = row.iter().map(|x| x / t).collect();
        let stderr: Vec<Option<f64>> = (0..row.len())
            .map(|state| {
                let pairs: Vec<_> = stats
                    .batches
                    .iter()
                    .map(|b| (b.occupancy[site - 1][state], b.time))
                    .collect();
                ratio_stderr(&pairs)
            })
            .collect();
        let zscore = empirical
            .iter()
            .zip(&closed)
            .zip(&stderr)
            .map(|((e, c), s)| zscore(*e, *c, *s))
            .collect();
        marginals.push(MarginalEstimate {
            site,
            closed_form: closed,
            empirical,
            stderr,
            zscore,
        });
    }

    Ok(Estimates {
        flux,
        sojourn,
        marginals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{run_replica, SimConfig};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn two_type(n: usize) -> ModelParams {
        ModelParams::new(n, 2, vec![1.0, 2.0], vec![1.0, 1.0], vec![1.0, 1.0], true).unwrap()
    }

    #[test]
    fn arrival_rate_examples() {
        for n in [2, 5, 9] {
            let p = ModelParams::single(n, 1.0, 1.0, 1.0, true).unwrap();
            assert!(close(arrival_rate_closed_form(&p, 1).unwrap(), 1.0, 1e-15));
        }
        let p = two_type(3);
        assert!(close(arrival_rate_closed_form(&p, 1).unwrap(), 0.5, 1e-15));
        assert!(close(arrival_rate_closed_form(&p, 2).unwrap(), 1.0, 1e-15));
        assert!(matches!(
            arrival_rate_closed_form(&p, 3),
            Err(SsepError::TypeOutOfRange { .. })
        ));
        assert!(matches!(
            arrival_rate_boundary_form(&p, 0),
            Err(SsepError::TypeOutOfRange { .. })
        ));
        let tiny = ModelParams::new(
            3,
            2,
            vec![1e-300, 2.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            true,
        )
        .unwrap();
        assert!(arrival_rate_closed_form(&tiny, 1).unwrap() < 1e-299);
    }

    #[test]
    fn boundary_form_examples() {
        let p = ModelParams::single(4, 1.0, 2.0, 1.0, true).unwrap();
        assert!(close(
            arrival_rate_boundary_form(&p, 1).unwrap(),
            4.0 / 3.0,
            1e-15
        ));
        assert!(close(
            arrival_rate_closed_form(&p, 1).unwrap(),
            4.0 / 3.0,
            1e-15
        ));
        // alpha = beta: vacancy 1/(K+1) at each boundary, so J_k = 2 alpha_k / (K+1).
        let p = ModelParams::new(
            3,
            3,
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![1.0; 3],
            true,
        )
        .unwrap();
        for k in 1..=3 {
            assert!(close(
                arrival_rate_boundary_form(&p, k).unwrap(),
                0.5,
                1e-15
            ));
        }
        let p = ModelParams::new(
            3,
            3,
            vec![0.4, 2.0, 7.0],
            vec![0.4, 2.0, 7.0],
            vec![1.0; 3],
            true,
        )
        .unwrap();
        for k in 1..=3 {
            assert!(close(
                arrival_rate_boundary_form(&p, k).unwrap(),
                0.5 * p.alpha_of(k),
                1e-14
            ));
        }
    }

    #[test]
    fn sojourn_examples() {
        let p = ModelParams::single(4, 1.0, 2.0, 1.0, true).unwrap();
        assert_eq!(sojourn_closed_form(&p, 1).unwrap(), 1.0);
        let p = ModelParams::single(2, 1.0, 2.0, 1.0, true).unwrap();
        assert_eq!(sojourn_closed_form(&p, 1).unwrap(), 0.5);
        assert!(close(sojourn_littles_law(&p, 1).unwrap(), 0.5, 1e-15));
        let p = two_type(3);
        for k in 1..=2 {
            assert_eq!(sojourn_closed_form(&p, k).unwrap(), 1.5);
            assert!(close(sojourn_littles_law(&p, k).unwrap(), 1.5, 1e-15));
        }
        let p =
            ModelParams::new(6, 2, vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], true).unwrap();
        assert!(close(sojourn_littles_law(&p, 2).unwrap(), 3.0, 1e-15));
    }

    fn stats_with_counts(arrivals: u64, time: f64) -> SimStats {
        let p = ModelParams::single(2, 1.0, 1.0, 1.0, true).unwrap();
        let cfg = SimConfig {
            max_events: 10,
            warmup_fraction: 0.0,
            replicas: 1,
            batches: 1,
            ..SimConfig::default()
        };
        let mut s = run_replica(&p, &cfg, 0).unwrap();
        s.arrivals_by_type = vec![arrivals];
        s.total_time = time;
        s.completed_sojourns = vec![Vec::new()];
        s
    }

    #[test]
    fn empirical_flux_is_count_over_time() {
        let s = stats_with_counts(1000, 500.0);
        let est = estimate_from_stats(&s, &s.params.clone()).unwrap();
        let e = &est.flux.entries[0];
        assert_eq!(e.empirical, Some(2.0));
        assert_eq!(e.se_method, Some(SeMethod::Poisson));
        assert!(close(e.stderr.unwrap(), 1000f64.sqrt() / 500.0, 1e-15));
    }

    #[test]
    fn missing_sojourns_are_flagged() {
        let s = stats_with_counts(3, 10.0);
        let est = estimate_from_stats(&s, &s.params.clone()).unwrap();
        let e = &est.sojourn.entries[0];
        assert_eq!(e.status, DataStatus::InsufficientData);
        assert_eq!(e.samples, 0);
        assert_eq!(e.empirical, None);
        assert_eq!(e.zscore, None);
    }

    #[test]
    fn empty_window_is_an_error() {
        let s = stats_with_counts(0, 0.0);
        assert_eq!(
            estimate_from_stats(&s, &s.params.clone()).unwrap_err(),
            SsepError::EmptyMeasurement
        );
        let other = ModelParams::single(3, 1.0, 1.0, 1.0, true).unwrap();
        assert_eq!(
            estimate_from_stats(&s, &other).unwrap_err(),
            SsepError::MixedModels
        );
    }

    #[test]
    fn ratio_stderr_matches_hand_computation() {
        // Equal batch lengths: reduces to the SE of the batch ratios.
        let pairs = [(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)];
        let ratios = [0.5, 1.0, 1.5];
        assert!(close(
            ratio_stderr(&pairs).unwrap(),
            sample_stderr(&ratios).unwrap(),
            1e-15
        ));
        assert!(ratio_stderr(&pairs[..1]).is_none());
    }

    #[test]
    fn two_site_sojourn_estimate() {
        let p = ModelParams::single(2, 1.0, 2.0, 1.0, true).unwrap();
        let cfg = SimConfig {
            max_events: 1_000_000,
            replicas: 1,
            ..SimConfig::default()
        };
        let s = run_replica(&p, &cfg, 0).unwrap();
        let est = estimate_from_stats(&s, &p).unwrap();
        let e = &est.sojourn.entries[0];
        assert!(e.zscore.unwrap().abs() < 3.0, "{e:?}");
        assert!(
            est.flux.entries[0].zscore.unwrap().abs() < 3.0,
            "{:?}",
            est.flux.entries[0]
        );
    }

    fn any_params() -> impl Strategy<Value = ModelParams> {
        (
            2usize..=12,
            1usize..=4,
            prop::collection::vec(0.01f64..50.0, 12),
        )
            .prop_map(|(n, k, r)| {
                ModelParams::new(
                    n,
                    k,
                    r[0..k].to_vec(),
                    r[4..4 + k].to_vec(),
                    r[8..8 + k].to_vec(),
                    true,
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn flux_forms_agree(p in any_params()) {
            for k in 1..=p.n_types() {
                let a = arrival_rate_closed_form(&p, k).unwrap();
                let b = arrival_rate_boundary_form(&p, k).unwrap();
                prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
            }
        }

        #[test]
        fn littles_law_agrees(p in any_params()) {
            for k in 1..=p.n_types() {
                let a = sojourn_closed_form(&p, k).unwrap();
                let b = sojourn_littles_law(&p, k).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{} vs {}", a, b);
            }
        }

        #[test]
        fn flux_increases_with_alpha(p in any_params(), bump in 0.01f64..10.0) {
            let k = 1;
            let mut alpha = p.alpha().to_vec();
            alpha[0] += bump;
            let q = ModelParams::new(p.n_sites(), p.n_types(), alpha, p.beta().to_vec(), p.delta().to_vec(), true).unwrap();
            prop_assert!(arrival_rate_closed_form(&q, k).unwrap() > arrival_rate_closed_form(&p, k).unwrap());
        }

        #[test]
        fn sojourn_decreases_with_beta(p in any_params(), bump in 0.01f64..10.0) {
            let mut beta = p.beta().to_vec();
            beta[0] += bump;
            let q = ModelParams::new(p.n_sites(), p.n_types(), p.alpha().to_vec(), beta, p.delta().to_vec(), true).unwrap();
            prop_assert!(sojourn_closed_form(&q, 1).unwrap() < sojourn_closed_form(&p, 1).unwrap());
        }

        #[test]
        fn sojourn_ignores_alpha_and_delta(p in any_params(), scale in 0.01f64..100.0) {
            let k = p.n_types();
            let alpha: Vec<f64> = p.alpha().iter().map(|a| a * scale).collect();
            let delta: Vec<f64> = p.delta().iter().map(|d| d * scale + 1.0).collect();
            let q = ModelParams::new(p.n_sites(), k, alpha, p.beta().to_vec(), delta, false).unwrap();
            for t in 1..=k {
                prop_assert_eq!(sojourn_closed_form(&p, t).unwrap(), sojourn_closed_form(&q, t).unwrap());
            }
        }
    }
}
