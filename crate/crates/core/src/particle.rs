//! Exact event-driven simulation of the n-particle system and of its
//! dominating linear Hawkes process.
//!
//! Particle i thins grain stream i. Candidates of all particles sit in one
//! min-heap keyed by (time, particle). Stale candidates are dropped lazily by
//! a per-particle version counter.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};
use crate::model::{InteractionMatrix, KernelSpec, Model};
use crate::thinning::{audit, Grain, GrainStream};

/// Default cap on the total number of accepted events in one run.
pub const DEFAULT_EVENT_CAP: usize = 1_000_000;

/// One particle's points: the past (times ≤ 0) and the events in (0, θ].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointPath {
    pub past: Vec<f64>,
    pub events: Vec<f64>,
    pub horizon: f64,
}

impl PointPath {
    pub fn with_past(past: Vec<f64>) -> Self {
        PointPath { past, events: Vec::new(), horizon: 0.0 }
    }

    pub fn new(past: Vec<f64>, events: Vec<f64>, horizon: f64) -> Result<Self> {
        if past.iter().any(|&p| !(p <= 0.0)) || past.windows(2).any(|w| w[1] <= w[0]) {
            return domain("past must be strictly increasing times <= 0");
        }
        if events.iter().any(|&e| !(e > 0.0 && e <= horizon)) || events.windows(2).any(|w| w[1] <= w[0]) {
            return domain("events must be strictly increasing times in (0, horizon]");
        }
        Ok(PointPath { past, events, horizon })
    }

    /// Last past point, i.e. T₀.
    pub fn last_past(&self) -> Option<f64> {
        self.past.last().copied()
    }

    /// Last point ≤ t (or < t when `strict`).
    pub fn last_point(&self, t: f64, strict: bool) -> Option<f64> {
        let k = if strict {
            self.events.partition_point(|&e| e < t)
        } else {
            self.events.partition_point(|&e| e <= t)
        };
        if k > 0 {
            return Some(self.events[k - 1]);
        }
        let k = if strict {
            self.past.partition_point(|&p| p < t)
        } else {
            self.past.partition_point(|&p| p <= t)
        };
        (k > 0).then(|| self.past[k - 1])
    }

    /// Number of events in (0, t].
    pub fn count_until(&self, t: f64) -> usize {
        self.events.partition_point(|&e| e <= t)
    }
}

/// S_t (or S_{t−} when `predictable`).
pub fn age_at(path: &PointPath, t: f64, predictable: bool) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("age requested at negative time {t}"));
    }
    // At t = 0 the predictable age is extended by continuity, so both agree.
    let strict = predictable && t > 0.0;
    match path.last_point(t, strict) {
        Some(p) => Ok(t - p),
        None => domain(format!("undefined age at t = {t}: no point before it")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditEntry {
    pub time: f64,
    pub particle: usize,
    pub intensity: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Adrhp,
    DominatingLinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub event_cap: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { event_cap: DEFAULT_EVENT_CAP }
    }
}

#[derive(Debug, Clone)]
pub struct ParticleSystemRun {
    pub kind: RunKind,
    pub n: usize,
    pub theta: f64,
    pub seed: u64,
    pub paths: Vec<PointPath>,
    pub matrix: InteractionMatrix,
    pub audit: Vec<AuditEntry>,
    /// Candidate grains evaluated, accepted or not.
    pub candidates: usize,
}

impl ParticleSystemRun {
    pub fn total_events(&self) -> usize {
        self.paths.iter().map(|p| p.events.len()).sum()
    }
}

/// Interaction sums Σ_j w_ij·h(t − T) over all points T < t of all particles.
enum Field {
    /// α·e^{−βt}: per-receiver aggregates decayed to a common stamp.
    Exp { alpha: f64, beta: f64, stamp: f64, signed: Vec<f64>, abs: Vec<f64> },
    General { base: KernelSpec, log: Vec<(f64, usize)> },
}

impl Field {
    fn new(base: &KernelSpec, n: usize) -> Self {
        match *base {
            KernelSpec::Exponential { alpha, beta } => {
                Field::Exp { alpha, beta, stamp: 0.0, signed: vec![0.0; n], abs: vec![0.0; n] }
            }
            KernelSpec::Zero => Field::Exp { alpha: 0.0, beta: 0.0, stamp: 0.0, signed: vec![0.0; n], abs: vec![0.0; n] },
            _ => Field::General { base: base.clone(), log: Vec::new() },
        }
    }

    /// Adds a point of particle j at time t; points arrive in time order,
    /// except the virtual past points which are all added first.
    fn add(&mut self, m: &InteractionMatrix, j: usize, t: f64) {
        match self {
            Field::Exp { beta, stamp, signed, abs, .. } => {
                let (factor, scale) = if t > *stamp {
                    let f = (-*beta * (t - *stamp)).exp();
                    *stamp = t;
                    (f, 1.0)
                } else {
                    (1.0, (-*beta * (*stamp - t)).exp())
                };
                let n = m.n;
                for i in 0..n {
                    let w = m.weights[i * n + j];
                    signed[i] = signed[i] * factor + w * scale;
                    abs[i] = abs[i] * factor + w.abs() * scale;
                }
            }
            Field::General { log, .. } => log.push((t, j)),
        }
    }

    fn signed(&self, m: &InteractionMatrix, i: usize, t: f64) -> f64 {
        match self {
            Field::Exp { alpha, beta, stamp, signed, .. } => alpha * signed[i] * (-beta * (t - stamp)).exp(),
            Field::General { base, log } => log
                .iter()
                .filter(|(s, _)| *s < t)
                .map(|&(s, j)| m.weight(i, j) * base.value(t - s))
                .sum(),
        }
    }

    fn abs(&self, m: &InteractionMatrix, i: usize, t: f64) -> f64 {
        match self {
            Field::Exp { alpha, beta, stamp, abs, .. } => alpha.abs() * abs[i] * (-beta * (t - stamp)).exp(),
            Field::General { base, log } => log
                .iter()
                .filter(|(s, _)| *s < t)
                .map(|&(s, j)| (m.weight(i, j) * base.value(t - s)).abs())
                .sum(),
        }
    }

    /// Σ_j |w_ij|·M̂(t − T) with M̂ the non-increasing majorant of |h|; points
    /// at T = t are included so the value dominates on (t, ·).
    fn majorant(&self, m: &InteractionMatrix, i: usize, t: f64) -> f64 {
        match self {
            Field::Exp { .. } => self.abs(m, i, t),
            Field::General { base, log } => log
                .iter()
                .filter(|(s, _)| *s <= t)
                .map(|&(s, j)| m.weight(i, j).abs() * base.decreasing_envelope(t - s))
                .sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slot {
    t: f64,
    i: usize,
    version: u64,
}

impl Eq for Slot {}

impl Ord for Slot {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t.total_cmp(&other.t).then(self.i.cmp(&other.i)).then(self.version.cmp(&other.version))
    }
}

impl PartialOrd for Slot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Initial pasts of all particles; T₀ⁱ is sampled from `(seed, i)`.
pub fn sample_pasts(model: &Model, n: usize, seed: u64) -> Result<Vec<PointPath>> {
    (0..n).map(|i| crate::model::sample_initial_past(&model.initial, seed, i as u64)).collect()
}

/// Grain streams of all particles.
pub fn make_streams(seed: u64, n: usize, theta: f64) -> Vec<GrainStream> {
    (0..n).map(|i| GrainStream::new(seed, i as u64, theta)).collect()
}

fn check_inputs(model: &Model, n: usize, theta: f64) -> Result<()> {
    model.validate()?;
    if n == 0 {
        return domain("need n >= 1 particles");
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return domain(format!("horizon must be finite and > 0, got {theta}"));
    }
    Ok(())
}

fn simulate(
    kind: RunKind,
    model: &Model,
    n: usize,
    theta: f64,
    seed: u64,
    opts: SimOptions,
) -> Result<ParticleSystemRun> {
    check_inputs(model, n, theta)?;
    let matrix = model.sample_matrix(n, seed)?;
    let mut paths = sample_pasts(model, n, seed)?;
    let mut streams = make_streams(seed, n, theta);
    let psi = &model.psi;
    let inv_n = 1.0 / n as f64;
    let lip = psi.lip();
    let phi0 = psi.sup_at_zero();
    let sup = psi.sup_bound();
    let kernel_zero = model.interaction.base.is_zero() || model.interaction.weight_law.w_max() == 0.0;
    let dynamic = match kind {
        RunKind::Adrhp => sup.is_none() && lip > 0.0 && !kernel_zero,
        RunKind::DominatingLinear => lip > 0.0 && !kernel_zero,
    };

    let mut field = Field::new(&model.interaction.base, n);
    for (j, p) in paths.iter().enumerate() {
        if let Some(v) = p.last_past().and_then(|t0| model.virtual_point(t0)) {
            field.add(&matrix, j, v);
        }
    }
    let mut last: Vec<f64> = paths.iter().map(|p| p.last_past().unwrap_or(f64::NEG_INFINITY)).collect();

    let envelope = |field: &Field, i: usize, c: f64| -> f64 {
        match (kind, sup) {
            (RunKind::Adrhp, Some(s)) => s,
            _ if !dynamic => phi0,
            _ => phi0 + lip * inv_n * field.majorant(&matrix, i, c),
        }
    };

    let mut cursor = vec![0.0f64; n];
    let mut level = vec![0.0f64; n];
    let mut version = vec![0u64; n];
    let mut cand: Vec<Option<Grain>> = vec![None; n];
    let mut heap: BinaryHeap<Reverse<Slot>> = BinaryHeap::new();

    let schedule = |i: usize,
                    field: &Field,
                    cursor: &[f64],
                    level: &mut [f64],
                    version: &mut [u64],
                    cand: &mut [Option<Grain>],
                    streams: &mut [GrainStream],
                    heap: &mut BinaryHeap<Reverse<Slot>>| {
        level[i] = envelope(field, i, cursor[i]);
        version[i] += 1;
        cand[i] = streams[i].next_grain(cursor[i], theta, level[i]);
        if let Some(g) = cand[i] {
            heap.push(Reverse(Slot { t: g.t, i, version: version[i] }));
        }
    };

    for i in 0..n {
        schedule(i, &field, &cursor, &mut level, &mut version, &mut cand, &mut streams, &mut heap);
    }

    let mut audit_log = Vec::new();
    let mut candidates = 0usize;
    while let Some(Reverse(slot)) = heap.pop() {
        let i = slot.i;
        if slot.version != version[i] {
            continue;
        }
        let g = cand[i].expect("scheduled candidate");
        candidates += 1;
        let lam = match kind {
            RunKind::Adrhp => psi.value(g.t - last[i], inv_n * field.signed(&matrix, i, g.t)),
            RunKind::DominatingLinear => phi0 + lip * inv_n * field.abs(&matrix, i, g.t),
        };
        audit(lam, level[i], g.t).map_err(|e| match e {
            Error::Envelope(msg) => Error::Envelope(format!("particle {i}: {msg}")),
            other => other,
        })?;
        cursor[i] = g.t;
        if g.x <= lam {
            paths[i].events.push(g.t);
            last[i] = g.t;
            audit_log.push(AuditEntry { time: g.t, particle: i, intensity: lam, envelope: level[i] });
            if audit_log.len() > opts.event_cap {
                return Err(Error::Explosion(format!(
                    "more than {} events before t = {} (n = {n}); the intensity likely violates the \
                     well-posedness hypotheses",
                    opts.event_cap, g.t
                )));
            }
            field.add(&matrix, i, g.t);
            if dynamic {
                for k in 0..n {
                    cursor[k] = cursor[k].max(g.t);
                    schedule(k, &field, &cursor, &mut level, &mut version, &mut cand, &mut streams, &mut heap);
                }
                continue;
            }
        }
        schedule(i, &field, &cursor, &mut level, &mut version, &mut cand, &mut streams, &mut heap);
    }

    for p in &mut paths {
        p.horizon = theta;
    }
    Ok(ParticleSystemRun { kind, n, theta, seed, paths, matrix, audit: audit_log, candidates })
}

/// Exact sample of the n-particle system on (0, θ].
///
/// Matrix, pasts and grain streams are all keyed by `seed`.
pub fn simulate_adrhp(model: &Model, n: usize, theta: f64, seed: u64, opts: SimOptions) -> Result<ParticleSystemRun> {
    simulate(RunKind::Adrhp, model, n, theta, seed, opts)
}

/// The linear Hawkes process with baseline sup_s Ψ(s,0) + Lip·(1/n)Σ_j|F_ij|
/// and kernels Lip·|H_ij|, driven by the same grains as [`simulate_adrhp`].
pub fn simulate_dominating_linear(
    model: &Model,
    n: usize,
    theta: f64,
    seed: u64,
    opts: SimOptions,
) -> Result<ParticleSystemRun> {
    simulate(RunKind::DominatingLinear, model, n, theta, seed, opts)
}

/// Whether every event of `inner` is an event of `outer`, path by path.
pub fn contained_in(inner: &ParticleSystemRun, outer: &ParticleSystemRun) -> Vec<usize> {
    let mut violations = Vec::new();
    for (i, (a, b)) in inner.paths.iter().zip(&outer.paths).enumerate() {
        let missing = a.events.iter().filter(|e| b.events.binary_search_by(|x| x.total_cmp(e)).is_err()).count();
        if missing > 0 {
            violations.push(i);
        }
    }
    violations
}
