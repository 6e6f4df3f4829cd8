//! State space, event algebra and rate function of the open-boundary
//! multi-type symmetric exclusion process.
//!
//! Sites are numbered `1..=N` from left to right. A site is vacant (`0`) or
//! holds one particle of type `k` in `1..=K`. Particles of type `k`
//!
//! - arrive at a vacant boundary site (site 1 or site N) at rate `alpha[k]`,
//! - leave the lattice from a boundary site at rate `beta[k]`,
//! - hop to a vacant nearest neighbour at rate `delta[k]` in either direction.
//!
//! With `boundary_hops` disabled, bonds touching a boundary site carry no
//! hops at all, so every hop still has its mirror hop.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SsepError};

/// Largest type count representable in a [`LatticeState`] entry.
pub const MAX_TYPES: usize = u8::MAX as usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    n_sites: usize,
    n_types: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    delta: Vec<f64>,
    boundary_hops: bool,
}

#[derive(Deserialize)]
struct RawParams {
    n_sites: usize,
    n_types: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    delta: Vec<f64>,
    #[serde(default = "default_boundary_hops")]
    boundary_hops: bool,
}

fn default_boundary_hops() -> bool {
    true
}

impl TryFrom<RawParams> for ModelParams {
    type Error = SsepError;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(
            raw.n_sites,
            raw.n_types,
            raw.alpha,
            raw.beta,
            raw.delta,
            raw.boundary_hops,
        )
    }
}

impl ModelParams {
    pub fn new(
        n_sites: usize,
        n_types: usize,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        delta: Vec<f64>,
        boundary_hops: bool,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(SsepError::InvalidParams(format!(
                "n_sites must be at least 2, got {n_sites}"
            )));
        }
        if n_types == 0 || n_types > MAX_TYPES {
            return Err(SsepError::InvalidParams(format!(
                "n_types must be in 1..={MAX_TYPES}, got {n_types}"
            )));
        }
        for (name, v) in [("alpha", &alpha), ("beta", &beta), ("delta", &delta)] {
            if v.len() != n_types {
                return Err(SsepError::InvalidParams(format!(
                    "{name} has {} entries, expected {n_types}",
                    v.len()
                )));
            }
        }
        for (k, (&a, &b)) in alpha.iter().zip(&beta).enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return Err(SsepError::InvalidParams(format!(
                    "alpha[{}] must be positive and finite, got {a}",
                    k + 1
                )));
            }
            if !(b.is_finite() && b > 0.0) {
                return Err(SsepError::InvalidParams(format!(
                    "beta[{}] must be positive and finite, got {b}",
                    k + 1
                )));
            }
        }
        for (k, &d) in delta.iter().enumerate() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(SsepError::InvalidParams(format!(
                    "delta[{}] must be non-negative and finite, got {d}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            n_sites,
            n_types,
            alpha,
            beta,
            delta,
            boundary_hops,
        })
    }

    /// Single-type convenience constructor.
    pub fn single(
        n_sites: usize,
        alpha: f64,
        beta: f64,
        delta: f64,
        boundary_hops: bool,
    ) -> Result<Self> {
        Self::new(
            n_sites,
            1,
            vec![alpha],
            vec![beta],
            vec![delta],
            boundary_hops,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn boundary_hops(&self) -> bool {
        self.boundary_hops
    }

    /// Arrival rate of type `k` (1-based).
    pub fn alpha_of(&self, k: usize) -> f64 {
        self.alpha[k - 1]
    }

    pub fn beta_of(&self, k: usize) -> f64 {
        self.beta[k - 1]
    }

    pub fn delta_of(&self, k: usize) -> f64 {
        self.delta[k - 1]
    }

    /// Copy with a different hop-rate vector.
    pub fn with_delta(&self, delta: Vec<f64>) -> Result<Self> {
        Self::new(
            self.n_sites,
            self.n_types,
            self.alpha.clone(),
            self.beta.clone(),
            delta,
            self.boundary_hops,
        )
    }

    pub fn with_boundary_hops(&self, boundary_hops: bool) -> Self {
        Self {
            boundary_hops,
            ..self.clone()
        }
    }

    /// `alpha[k] / beta[k]` for every type, in type order.
    pub fn load_ratios(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| a / b)
            .collect()
    }

    pub fn check_type(&self, ptype: usize) -> Result<()> {
        if ptype == 0 || ptype > self.n_types {
            return Err(SsepError::TypeOutOfRange {
                ptype,
                n_types: self.n_types,
            });
        }
        Ok(())
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            return Err(SsepError::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        Ok(())
    }

    fn is_boundary(&self, site: usize) -> bool {
        site == 1 || site == self.n_sites
    }

    /// Whether the bond between neighbouring sites `from` and `to` carries hops.
    fn bond_active(&self, from: usize, to: usize) -> bool {
        self.boundary_hops || !(self.is_boundary(from) || self.is_boundary(to))
    }
}

/// Occupation of every site; entry `i - 1` is the state of site `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeState {
    sites: Vec<u8>,
}

impl LatticeState {
    pub fn new(sites: Vec<u8>, params: &ModelParams) -> Result<Self> {
        let state = Self { sites };
        state.validate(params)?;
        Ok(state)
    }

    /// All sites vacant.
    pub fn vacant(n_sites: usize) -> Self {
        Self {
            sites: vec![0; n_sites],
        }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.sites.len() != params.n_sites {
            return Err(SsepError::DimensionMismatch {
                expected: params.n_sites,
                found: self.sites.len(),
            });
        }
        for (i, &v) in self.sites.iter().enumerate() {
            if v as usize > params.n_types {
                return Err(SsepError::EntryOutOfRange {
                    site: i + 1,
                    value: v as usize,
                    n_types: params.n_types,
                });
            }
        }
        Ok(())
    }

    pub fn sites(&self) -> &[u8] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// State of site `site` (1-based).
    pub fn get(&self, site: usize) -> u8 {
        self.sites[site - 1]
    }

    /// Number of particles of each type, indexed `0..K` for types `1..=K`.
    pub fn particle_counts(&self, n_types: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n_types];
        for &v in &self.sites {
            if v > 0 {
                counts[v as usize - 1] += 1;
            }
        }
        counts
    }

    /// Applies `event` without checking that it is enabled.
    pub(crate) fn apply_unchecked(&mut self, event: &Event) {
        apply_to_sites(&mut self.sites, event);
    }
}

pub(crate) fn apply_to_sites(sites: &mut [u8], event: &Event) {
    let s = event.site - 1;
    match event.kind {
        EventKind::Arrival => sites[s] = event.ptype as u8,
        EventKind::Departure => sites[s] = 0,
        EventKind::HopLeft => sites.swap(s, s - 1),
        EventKind::HopRight => sites.swap(s, s + 1),
    }
}

impl std::fmt::Display for LatticeState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.sites.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Arrival,
    Departure,
    HopLeft,
    HopRight,
}

/// The three transition classes: arrivals, departures and hops of one type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionClass {
    Arrival,
    Departure,
    Hop,
}

impl TransitionClass {
    /// Class of the transition that undoes one of this class.
    pub fn paired(self) -> Self {
        match self {
            Self::Arrival => Self::Departure,
            Self::Departure => Self::Arrival,
            Self::Hop => Self::Hop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    /// Site the particle occupies (or enters), 1-based.
    pub site: usize,
    /// Particle type, 1-based.
    pub ptype: usize,
}

impl Event {
    pub fn arrival(ptype: usize, site: usize) -> Self {
        Self {
            kind: EventKind::Arrival,
            site,
            ptype,
        }
    }

    pub fn departure(ptype: usize, site: usize) -> Self {
        Self {
            kind: EventKind::Departure,
            site,
            ptype,
        }
    }

    pub fn hop_left(ptype: usize, site: usize) -> Self {
        Self {
            kind: EventKind::HopLeft,
            site,
            ptype,
        }
    }

    pub fn hop_right(ptype: usize, site: usize) -> Self {
        Self {
            kind: EventKind::HopRight,
            site,
            ptype,
        }
    }

    pub fn class(&self) -> TransitionClass {
        match self.kind {
            EventKind::Arrival => TransitionClass::Arrival,
            EventKind::Departure => TransitionClass::Departure,
            EventKind::HopLeft | EventKind::HopRight => TransitionClass::Hop,
        }
    }

    /// The event that undoes this one.
    pub fn inverse(&self) -> Self {
        match self.kind {
            EventKind::Arrival => Self::departure(self.ptype, self.site),
            EventKind::Departure => Self::arrival(self.ptype, self.site),
            EventKind::HopLeft => Self::hop_right(self.ptype, self.site - 1),
            EventKind::HopRight => Self::hop_left(self.ptype, self.site + 1),
        }
    }

    /// Rate of this event under `params`, ignoring whether it is enabled.
    pub fn rate(&self, params: &ModelParams) -> f64 {
        match self.kind {
            EventKind::Arrival => params.alpha_of(self.ptype),
            EventKind::Departure => params.beta_of(self.ptype),
            EventKind::HopLeft | EventKind::HopRight => params.delta_of(self.ptype),
        }
    }
}

/// Canonical index of a state: base-(K+1) digits, site 1 most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateIndex(pub u64);

impl StateIndex {
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

/// Number of lattice states, `(K+1)^N`.
pub fn state_space_size(params: &ModelParams) -> Result<u64> {
    let base = params.n_types + 1;
    u32::try_from(params.n_sites)
        .ok()
        .and_then(|n| (base as u64).checked_pow(n))
        .ok_or(SsepError::Overflow {
            base,
            n_sites: params.n_sites,
        })
}

pub fn encode(state: &LatticeState, params: &ModelParams) -> Result<StateIndex> {
    state.validate(params)?;
    state_space_size(params)?;
    Ok(StateIndex(encode_digits(state.sites(), params.n_types)))
}

/// Base-(K+1) value of `sites`; callers guarantee it fits in u64.
pub(crate) fn encode_digits(sites: &[u8], n_types: usize) -> u64 {
    let base = n_types as u64 + 1;
    sites.iter().fold(0u64, |acc, &v| acc * base + v as u64)
}

pub fn decode(index: StateIndex, params: &ModelParams) -> Result<LatticeState> {
    let size = state_space_size(params)?;
    if index.0 >= size {
        return Err(SsepError::IndexOutOfRange {
            index: index.0,
            size,
        });
    }
    let mut sites = vec![0u8; params.n_sites];
    decode_into(index.0, params.n_types, &mut sites);
    Ok(LatticeState { sites })
}

pub(crate) fn decode_into(mut index: u64, n_types: usize, sites: &mut [u8]) {
    let base = n_types as u64 + 1;
    for slot in sites.iter_mut().rev() {
        *slot = (index % base) as u8;
        index /= base;
    }
}

/// Calls `visit` once for every positive-rate transition out of `sites`.
///
/// Order: sites left to right; at a vacant boundary site the arrivals of
/// types `1..=K`; at an occupied site its departure (boundary only), then
/// its left hop, then its right hop.
pub(crate) fn for_each_enabled(
    sites: &[u8],
    params: &ModelParams,
    mut visit: impl FnMut(Event, f64),
) {
    let n = params.n_sites;
    for (idx, &v) in sites.iter().enumerate() {
        let site = idx + 1;
        let boundary = params.is_boundary(site);
        if v == 0 {
            if boundary {
                for (k, &a) in params.alpha.iter().enumerate() {
                    visit(Event::arrival(k + 1, site), a);
                }
            }
            continue;
        }
        let k = v as usize;
        if boundary {
            visit(Event::departure(k, site), params.beta[k - 1]);
        }
        let d = params.delta[k - 1];
        if d > 0.0 {
            if site > 1 && sites[idx - 1] == 0 && params.bond_active(site, site - 1) {
                visit(Event::hop_left(k, site), d);
            }
            if site < n && sites[idx + 1] == 0 && params.bond_active(site, site + 1) {
                visit(Event::hop_right(k, site), d);
            }
        }
    }
}

/// Every transition out of `state` with positive rate, paired with its rate.
pub fn enabled_events(state: &LatticeState, params: &ModelParams) -> Result<Vec<(Event, f64)>> {
    state.validate(params)?;
    let mut out = Vec::new();
    for_each_enabled(state.sites(), params, |e, r| out.push((e, r)));
    Ok(out)
}

/// Checks that `event` is structurally possible in `state`: the source site
/// holds the right particle (or is vacant, for arrivals) and the target is
/// vacant. Rate-level policy (zero hop rates, inactive bonds) is the
/// business of [`enabled_events`].
fn check_applicable(state: &LatticeState, event: &Event) -> Result<()> {
    let n = state.len();
    let bad = || Err(SsepError::EventNotEnabled(*event));
    if event.site == 0 || event.site > n || event.ptype == 0 || event.ptype > MAX_TYPES {
        return bad();
    }
    let here = state.get(event.site) as usize;
    let boundary = event.site == 1 || event.site == n;
    let ok = match event.kind {
        EventKind::Arrival => boundary && here == 0,
        EventKind::Departure => boundary && here == event.ptype,
        EventKind::HopLeft => {
            event.site >= 2 && here == event.ptype && state.get(event.site - 1) == 0
        }
        EventKind::HopRight => {
            event.site < n && here == event.ptype && state.get(event.site + 1) == 0
        }
    };
    if ok {
        Ok(())
    } else {
        bad()
    }
}

pub fn apply_event(state: &LatticeState, event: &Event) -> Result<LatticeState> {
    check_applicable(state, event)?;
    let mut next = state.clone();
    next.apply_unchecked(event);
    Ok(next)
}
