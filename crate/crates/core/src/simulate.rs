//! Kinetic Monte Carlo (direct method) simulation of the exclusion process.
//!
//! One aggregated exponential clock per state: the holding time is drawn
//! with rate `R = Σ enabled rates`, and the event is picked with probability
//! proportional to its rate. Every replica starts from the all-vacant
//! lattice, discards a warm-up prefix measured in events, and accumulates
//! time-weighted site occupancies, per-type arrival/departure counts and the
//! lifetimes of tagged particles that both arrive and leave inside the
//! measurement window.
//!
//! Replica `r` of a run seeded with `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `r`, so replicas are
//! independent and each one is bit-reproducible on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsepError};
use crate::exact::Distribution;
use crate::model::{
    encode_digits, for_each_enabled, state_space_size, Event, EventKind, LatticeState, ModelParams,
};

/// Identifies the pinned generator and stream derivation in reports.
pub const RNG_ALGORITHM: &str =
    "chacha8 (rand_chacha 0.9): seed_from_u64(seed), set_stream(replica_index)";

/// Joint state-occupancy times are tracked for state spaces up to this size.
pub const JOINT_TRACK_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    /// Events per replica, warm-up included.
    pub max_events: u64,
    /// Fraction of each replica's events discarded before measuring.
    pub warmup_fraction: f64,
    pub replicas: usize,
    pub record_trajectory: bool,
    /// Number of equal-event batches the measurement window is split into
    /// for batch-means standard errors.
    pub batches: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            max_events: 1_000_000,
            warmup_fraction: 0.2,
            replicas: 10,
            record_trajectory: false,
            batches: 20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_events == 0 {
            return Err(SsepError::InvalidConfig(
                "max_events must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(SsepError::InvalidConfig(format!(
                "warmup_fraction must lie in [0, 1), got {}",
                self.warmup_fraction
            )));
        }
        if self.replicas == 0 {
            return Err(SsepError::InvalidConfig(
                "replicas must be at least 1".into(),
            ));
        }
        if self.batches == 0 {
            return Err(SsepError::InvalidConfig(
                "batches must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Events discarded at the start of each replica.
    pub fn warmup_events(&self) -> u64 {
        (self.warmup_fraction * self.max_events as f64).floor() as u64
    }
}

/// Generator for replica `replica_index` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, replica_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica_index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedParticle {
    pub id: u64,
    pub ptype: usize,
    pub arrival_time: f64,
    pub departure_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// Time at which `event` fired.
    pub time: f64,
    pub event: Event,
    /// State right after `event`.
    pub state: LatticeState,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    /// Every particle that entered, in arrival order.
    pub particles: Vec<TaggedParticle>,
}

/// Statistics of one slice of the measurement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub time: f64,
    /// `occupancy[site - 1][state]`.
    pub occupancy: Vec<Vec<f64>>,
    pub arrivals: Vec<u64>,
    pub sojourn_sum: Vec<f64>,
    pub sojourn_count: Vec<u64>,
}

impl BatchStats {
    fn new(n_sites: usize, n_types: usize) -> Self {
        Self {
            time: 0.0,
            occupancy: vec![vec![0.0; n_types + 1]; n_sites],
            arrivals: vec![0; n_types],
            sojourn_sum: vec![0.0; n_types],
            sojourn_count: vec![0; n_types],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub params: ModelParams,
    /// Replica indices merged into these statistics, ascending.
    pub replica_ids: Vec<u64>,
    /// Length of the measurement window(s).
    pub total_time: f64,
    /// `site_occupancy_time[site - 1][state]`: time site spent in `state`.
    pub site_occupancy_time: Vec<Vec<f64>>,
    pub arrivals_by_type: Vec<u64>,
    pub departures_by_type: Vec<u64>,
    /// Lifetimes of particles that arrived and departed inside the window.
    pub completed_sojourns: Vec<Vec<f64>>,
    /// Events inside the measurement window(s).
    pub event_count: u64,
    pub warmup_events: u64,
    /// Particles of each type present when measurement started.
    pub initial_counts: Vec<u64>,
    /// Particles of each type present at the end.
    pub final_counts: Vec<u64>,
    /// Time spent in each lattice state, when the state space is small enough.
    pub state_time: Option<Vec<f64>>,
    pub batches: Vec<BatchStats>,
    pub trajectory: Option<Trajectory>,
}

impl SimStats {
    /// `arrivals − departures = present at end − present at start`, per type.
    pub fn conserves_particles(&self) -> bool {
        (0..self.params.n_types()).all(|k| {
            self.arrivals_by_type[k] as i128 - self.departures_by_type[k] as i128
                == self.final_counts[k] as i128 - self.initial_counts[k] as i128
        })
    }

    /// Time-weighted empirical law over lattice states, if tracked.
    pub fn empirical_distribution(&self) -> Option<Distribution> {
        let times = self.state_time.as_ref()?;
        if self.total_time <= 0.0 {
            return None;
        }
        let total: f64 = times.iter().sum();
        Distribution::new(times.iter().map(|t| t / total).collect()).ok()
    }
}

/// Reusable scratch space for event sampling.
struct EventSampler {
    events: Vec<(Event, f64)>,
}

impl EventSampler {
    fn new() -> Self {
        Self {
            events: Vec::with_capacity(16),
        }
    }

    fn sample<R: Rng + ?Sized>(
        &mut self,
        sites: &[u8],
        params: &ModelParams,
        rng: &mut R,
    ) -> (f64, Event) {
        self.events.clear();
        let mut total = 0.0;
        for_each_enabled(sites, params, |e, r| {
            total += r;
            self.events.push((e, r));
        });
        // A boundary site is always vacant (arrival) or occupied (departure).
        debug_assert!(total > 0.0);
        let dt = rng.sample::<f64, _>(Exp1) / total;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for &(e, r) in &self.events {
            acc += r;
            if target < acc {
                return (dt, e);
            }
        }
        (dt, self.events[self.events.len() - 1].0)
    }
}

/// Draws the holding time in `state` and the event that ends it.
pub fn sample_next_event<R: Rng + ?Sized>(
    state: &LatticeState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<(f64, Event)> {
    state.validate(params)?;
    Ok(EventSampler::new().sample(state.sites(), params, rng))
}

pub fn run_replica(
    params: &ModelParams,
    config: &SimConfig,
    replica_index: u64,
) -> Result<SimStats> {
    config.validate()?;
    let n = params.n_sites();
    let k_types = params.n_types();
    let warmup = config.warmup_events();
    let measured = config.max_events - warmup;
    let n_batches = (config.batches as u64).min(measured) as usize;
    let track_joint = state_space_size(params).is_ok_and(|m| m <= JOINT_TRACK_LIMIT);

    let mut rng = replica_rng(config.seed, replica_index);
    let mut sampler = EventSampler::new();
    let mut state = LatticeState::vacant(n);
    let mut tags: Vec<Option<TaggedParticle>> = vec![None; n];
    let mut counts = vec![0u64; k_types];
    let mut next_id = 0u64;
    let mut now = 0.0f64;
    let mut window_start = 0.0f64;

    let mut stats = SimStats {
        params: params.clone(),
        replica_ids: vec![replica_index],
        total_time: 0.0,
        site_occupancy_time: vec![vec![0.0; k_types + 1]; n],
        arrivals_by_type: vec![0; k_types],
        departures_by_type: vec![0; k_types],
        completed_sojourns: vec![Vec::new(); k_types],
        event_count: 0,
        warmup_events: warmup,
        initial_counts: vec![0; k_types],
        final_counts: vec![0; k_types],
        state_time: track_joint.then(|| vec![0.0; state_space_size(params).unwrap_or(0) as usize]),
        batches: vec![BatchStats::new(n, k_types); n_batches],
        trajectory: config.record_trajectory.then(Trajectory::default),
    };

    for step in 0..config.max_events {
        if step == warmup {
            stats.initial_counts.clone_from(&counts);
            window_start = now;
        }
        let (dt, event) = sampler.sample(state.sites(), params, &mut rng);
        let in_window = step >= warmup;
        let batch = if in_window {
            let b = ((step - warmup) as u128 * n_batches as u128 / measured as u128) as usize;
            Some(b)
        } else {
            None
        };

        if let Some(b) = batch {
            let slot = &mut stats.batches[b];
            for (i, &v) in state.sites().iter().enumerate() {
                stats.site_occupancy_time[i][v as usize] += dt;
                slot.occupancy[i][v as usize] += dt;
            }
            slot.time += dt;
            stats.total_time += dt;
            stats.event_count += 1;
            if let Some(times) = stats.state_time.as_mut() {
                times[encode_digits(state.sites(), k_types) as usize] += dt;
            }
        }

        now += dt;
        let s = event.site - 1;
        let k = event.ptype - 1;
        match event.kind {
            EventKind::Arrival => {
                tags[s] = Some(TaggedParticle {
                    id: next_id,
                    ptype: event.ptype,
                    arrival_time: now,
                    departure_time: None,
                });
                next_id += 1;
                counts[k] += 1;
                if let Some(b) = batch {
                    stats.arrivals_by_type[k] += 1;
                    stats.batches[b].arrivals[k] += 1;
                }
            }
            EventKind::Departure => {
                let mut tag = tags[s].take().expect("departing site carries a tag");
                tag.departure_time = Some(now);
                counts[k] -= 1;
                if let Some(b) = batch {
                    stats.departures_by_type[k] += 1;
                    if tag.arrival_time > window_start {
                        let lifetime = now - tag.arrival_time;
                        stats.completed_sojourns[k].push(lifetime);
                        stats.batches[b].sojourn_sum[k] += lifetime;
                        stats.batches[b].sojourn_count[k] += 1;
                    }
                }
                if let Some(tr) = stats.trajectory.as_mut() {
                    tr.particles.push(tag);
                }
            }
            EventKind::HopLeft => tags.swap(s, s - 1),
            EventKind::HopRight => tags.swap(s, s + 1),
        }
        state.apply_unchecked(&event);
        if let Some(tr) = stats.trajectory.as_mut() {
            tr.steps.push(TrajectoryStep {
                time: now,
                event,
                state: state.clone(),
            });
        }
    }

    stats.final_counts = counts;
    if let Some(tr) = stats.trajectory.as_mut() {
        tr.particles.extend(tags.into_iter().flatten());
        tr.particles.sort_by_key(|p| p.id);
    }
    Ok(stats)
}

/// Runs `config.replicas` replicas in parallel and merges them.
pub fn run_replicas(params: &ModelParams, config: &SimConfig) -> Result<SimStats> {
    let runs = run_replicas_separately(params, config)?;
    merge_replicas(&runs)
}

pub fn run_replicas_separately(params: &ModelParams, config: &SimConfig) -> Result<Vec<SimStats>> {
    config.validate()?;
    (0..config.replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(params, config, r))
        .collect()
}

/// Sums times and counts, concatenates sojourns and batches.
///
/// Inputs are combined in ascending order of their replica ids, so the
/// result does not depend on the order of `stats`. Trajectories survive only
/// a merge of a single input.
pub fn merge_replicas(stats: &[SimStats]) -> Result<SimStats> {
    let first = stats
        .first()
        .ok_or_else(|| SsepError::InvalidArgument("nothing to merge".into()))?;
    if stats.iter().any(|s| s.params != first.params) {
        return Err(SsepError::MixedModels);
    }
    if stats.len() == 1 {
        return Ok(first.clone());
    }
    let mut ordered: Vec<&SimStats> = stats.iter().collect();
    ordered.sort_by(|a, b| a.replica_ids.cmp(&b.replica_ids));

    let params = first.params.clone();
    let n = params.n_sites();
    let k_types = params.n_types();
    let mut out = SimStats {
        params,
        replica_ids: Vec::new(),
        total_time: 0.0,
        site_occupancy_time: vec![vec![0.0; k_types + 1]; n],
        arrivals_by_type: vec![0; k_types],
        departures_by_type: vec![0; k_types],
        completed_sojourns: vec![Vec::new(); k_types],
        event_count: 0,
        warmup_events: 0,
        initial_counts: vec![0; k_types],
        final_counts: vec![0; k_types],
        state_time: ordered
            .iter()
            .all(|s| s.state_time.is_some())
            .then(|| vec![0.0; first.state_time.as_ref().map_or(0, Vec::len)]),
        batches: Vec::new(),
        trajectory: None,
    };
    for s in ordered {
        out.replica_ids.extend_from_slice(&s.replica_ids);
        out.total_time += s.total_time;
        for (acc, row) in out
            .site_occupancy_time
            .iter_mut()
            .zip(&s.site_occupancy_time)
        {
            acc.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        for k in 0..k_types {
            out.arrivals_by_type[k] += s.arrivals_by_type[k];
            out.departures_by_type[k] += s.departures_by_type[k];
            out.initial_counts[k] += s.initial_counts[k];
            out.final_counts[k] += s.final_counts[k];
            out.completed_sojourns[k].extend_from_slice(&s.completed_sojourns[k]);
        }
        out.event_count += s.event_count;
        out.warmup_events += s.warmup_events;
        if let (Some(acc), Some(times)) = (out.state_time.as_mut(), s.state_time.as_ref()) {
            acc.iter_mut().zip(times).for_each(|(a, b)| *a += b);
        }
        out.batches.extend(s.batches.iter().cloned());
    }
    out.replica_ids.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{product_form, site_marginal};

    fn config(events: u64) -> SimConfig {
        SimConfig {
            max_events: events,
            replicas: 1,
            ..SimConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig {
            max_events: 0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            warmup_fraction: 1.0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            warmup_fraction: -0.1,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            replicas: 0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(
            SimConfig {
                max_events: 10,
                warmup_fraction: 0.25,
                ..SimConfig::default()
            }
            .warmup_events(),
            2
        );
    }

    #[test]
    fn empty_two_site_lattice_sampling() {
        let p = ModelParams::single(2, 1.0, 2.0, 1.0, true).unwrap();
        let s = LatticeState::vacant(2);
        let mut rng = replica_rng(7, 0);
        let draws = 200_000;
        let mut sum_dt = 0.0;
        let mut left = 0u32;
        for _ in 0..draws {
            let (dt, e) = sample_next_event(&s, &p, &mut rng).unwrap();
            assert_eq!(e.kind, EventKind::Arrival);
            sum_dt += dt;
            if e.site == 1 {
                left += 1;
            }
        }
        // Exp(2): mean 0.5, sd 0.5; Bernoulli(1/2) for the site.
        let mean = sum_dt / draws as f64;
        assert!(
            (mean - 0.5).abs() < 4.0 * 0.5 / (draws as f64).sqrt(),
            "{mean}"
        );
        let frac = left as f64 / draws as f64;
        assert!(
            (frac - 0.5).abs() < 4.0 * 0.5 / (draws as f64).sqrt(),
            "{frac}"
        );
    }

    #[test]
    fn interior_particle_events_equally_likely() {
        let p = ModelParams::single(3, 1.0, 1.0, 1.0, true).unwrap();
        let s = LatticeState::new(vec![0, 1, 0], &p).unwrap();
        let mut rng = replica_rng(11, 3);
        let draws = 200_000;
        let mut hits = std::collections::HashMap::new();
        let mut sum_dt = 0.0;
        for _ in 0..draws {
            let (dt, e) = sample_next_event(&s, &p, &mut rng).unwrap();
            sum_dt += dt;
            *hits.entry(e).or_insert(0u32) += 1;
        }
        assert_eq!(hits.len(), 4);
        let sd = (0.25f64 * 0.75 / draws as f64).sqrt();
        for (e, c) in hits {
            let f = c as f64 / draws as f64;
            assert!((f - 0.25).abs() < 4.0 * sd, "{e:?}: {f}");
        }
        let mean = sum_dt / draws as f64;
        assert!((mean - 0.25).abs() < 4.0 * 0.25 / (draws as f64).sqrt());
    }

    #[test]
    fn full_lattice_departures_split_evenly() {
        let p = ModelParams::single(4, 1.0, 3.0, 1.0, true).unwrap();
        let s = LatticeState::new(vec![1; 4], &p).unwrap();
        let mut rng = replica_rng(5, 0);
        let draws = 100_000;
        let mut left = 0u32;
        for _ in 0..draws {
            let (_, e) = sample_next_event(&s, &p, &mut rng).unwrap();
            assert_eq!(e.kind, EventKind::Departure);
            if e.site == 1 {
                left += 1;
            }
        }
        let f = left as f64 / draws as f64;
        assert!((f - 0.5).abs() < 4.0 * 0.5 / (draws as f64).sqrt());
    }

    #[test]
    fn replica_is_deterministic() {
        let p =
            ModelParams::new(3, 2, vec![1.0, 0.5], vec![0.7, 1.2], vec![1.0, 2.0], true).unwrap();
        let c = config(20_000);
        assert_eq!(
            run_replica(&p, &c, 4).unwrap(),
            run_replica(&p, &c, 4).unwrap()
        );
        assert_ne!(
            run_replica(&p, &c, 4).unwrap(),
            run_replica(&p, &c, 5).unwrap()
        );
    }

    #[test]
    fn bookkeeping_invariants() {
        let p =
            ModelParams::new(4, 2, vec![1.0, 0.5], vec![0.7, 1.2], vec![1.0, 0.0], false).unwrap();
        let c = SimConfig {
            record_trajectory: true,
            ..config(30_000)
        };
        let s = run_replica(&p, &c, 0).unwrap();
        assert!(s.conserves_particles());
        assert_eq!(s.event_count, 30_000 - 6_000);
        for row in &s.site_occupancy_time {
            let sum: f64 = row.iter().sum();
            assert!((sum - s.total_time).abs() <= 1e-9 * s.total_time);
        }
        let batch_time: f64 = s.batches.iter().map(|b| b.time).sum();
        assert!((batch_time - s.total_time).abs() <= 1e-9 * s.total_time);
        let batch_arrivals: u64 = s
            .batches
            .iter()
            .map(|b| b.arrivals.iter().sum::<u64>())
            .sum();
        assert_eq!(batch_arrivals, s.arrivals_by_type.iter().sum::<u64>());

        let tr = s.trajectory.as_ref().unwrap();
        assert_eq!(tr.steps.len(), 30_000);
        let mut prev = 0.0;
        for step in &tr.steps {
            step.state.validate(&p).unwrap();
            assert!(step.time > prev);
            prev = step.time;
        }
        let mut ids: Vec<_> = tr.particles.iter().map(|q| q.id).collect();
        ids.dedup();
        assert_eq!(ids.len(), tr.particles.len());
        for q in &tr.particles {
            if let Some(d) = q.departure_time {
                assert!(d > q.arrival_time);
            }
        }
        let present = tr
            .particles
            .iter()
            .filter(|q| q.departure_time.is_none())
            .count() as u64;
        assert_eq!(present, s.final_counts.iter().sum::<u64>());
    }

    #[test]
    fn trajectory_replays_from_vacant_state() {
        let p = ModelParams::single(3, 1.0, 1.0, 1.0, true).unwrap();
        let c = SimConfig {
            record_trajectory: true,
            ..config(2_000)
        };
        let s = run_replica(&p, &c, 0).unwrap();
        let mut state = LatticeState::vacant(3);
        for step in &s.trajectory.unwrap().steps {
            state = crate::model::apply_event(&state, &step.event).unwrap();
            assert_eq!(state, step.state);
        }
    }

    #[test]
    fn two_site_vacancy_fraction() {
        // 10^6 events; exact target is the closed-form vacancy 2/3.
        let p = ModelParams::single(2, 1.0, 2.0, 1.0, true).unwrap();
        let s = run_replica(&p, &config(1_000_000), 0).unwrap();
        let target = site_marginal(&p, 1).unwrap().vacancy();
        let fractions: Vec<f64> = s
            .batches
            .iter()
            .map(|b| b.occupancy[0][0] / b.time)
            .collect();
        let nb = fractions.len() as f64;
        let mean_b = fractions.iter().sum::<f64>() / nb;
        let var = fractions.iter().map(|f| (f - mean_b).powi(2)).sum::<f64>() / (nb - 1.0);
        let se = (var / nb).sqrt();
        let est = s.site_occupancy_time[0][0] / s.total_time;
        assert!(
            (est - target).abs() < 3.0 * se,
            "{est} vs {target} (se {se})"
        );
    }

    #[test]
    fn equal_rates_give_uniform_state_occupancy() {
        let p = ModelParams::single(2, 1.0, 1.0, 1.0, true).unwrap();
        let s = run_replicas(
            &p,
            &SimConfig {
                max_events: 200_000,
                replicas: 4,
                ..SimConfig::default()
            },
        )
        .unwrap();
        let emp = s.empirical_distribution().unwrap();
        for &x in emp.probs() {
            assert!((x - 0.25).abs() < 0.01, "{x}");
        }
        assert!(emp.tv_distance(&product_form(&p).unwrap()).unwrap() < 0.01);
    }

    #[test]
    fn merge_contract() {
        let p = ModelParams::single(3, 1.0, 2.0, 0.5, true).unwrap();
        let c = config(5_000);
        let a = run_replica(&p, &c, 0).unwrap();
        let b = run_replica(&p, &c, 1).unwrap();
        assert_eq!(merge_replicas(std::slice::from_ref(&a)).unwrap(), a);
        let ab = merge_replicas(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab, merge_replicas(&[b.clone(), a.clone()]).unwrap());
        assert_eq!(ab.total_time, a.total_time + b.total_time);
        assert_eq!(ab.replica_ids, vec![0, 1]);
        assert!(ab.conserves_particles());
        assert_eq!(
            ab.completed_sojourns[0].len(),
            a.completed_sojourns[0].len() + b.completed_sojourns[0].len()
        );

        let q = ModelParams::single(3, 1.0, 2.5, 0.5, true).unwrap();
        let other = run_replica(&q, &c, 2).unwrap();
        assert_eq!(
            merge_replicas(&[a, other]).unwrap_err(),
            SsepError::MixedModels
        );
        assert!(merge_replicas(&[]).is_err());
    }

    #[test]
    fn parallel_run_equals_merge_of_single_runs() {
        let p =
            ModelParams::new(3, 2, vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 1.0], true).unwrap();
        let c = SimConfig {
            max_events: 10_000,
            replicas: 4,
            ..SimConfig::default()
        };
        let merged = run_replicas(&p, &c).unwrap();
        let singles: Vec<_> = (0..4)
            .rev()
            .map(|r| run_replica(&p, &c, r).unwrap())
            .collect();
        assert_eq!(merged, merge_replicas(&singles).unwrap());
    }
}
