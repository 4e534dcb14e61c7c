//! Coupled particle/limit runs, convergence diagnostics, rate fits and the
//! explicit linear-in-θ bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::limit::{limit_envelope, simulate_limit_process, LimitSolution, Regime};
use crate::model::Model;
use crate::particle::{age_at, make_streams, sample_pasts, simulate_adrhp, ParticleSystemRun, PointPath, SimOptions};
use crate::pde::SolverOptions;
use crate::rng::{derive_seed, tag};
use crate::stats::mean_se;
use crate::thinning::PiecewiseEnvelope;

/// Symmetric-difference count of the event sets in (0, θ], exact matching.
pub fn delta_count(a: &PointPath, b: &PointPath, theta: f64) -> usize {
    let ea = &a.events[..a.events.partition_point(|&t| t <= theta)];
    let eb = &b.events[..b.events.partition_point(|&t| t <= theta)];
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < ea.len() && j < eb.len() {
        if ea[i] == eb[j] {
            common += 1;
            i += 1;
            j += 1;
        } else if ea[i] < eb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    ea.len() + eb.len() - 2 * common
}

/// sup_{t ∈ [0, θ]} |S^A_{t−} − S^B_{t−}|.
///
/// Both ages grow with slope one, so the gap is piecewise constant and only
/// changes right after an event of either path.
pub fn sup_age_gap(a: &PointPath, b: &PointPath, theta: f64) -> Result<f64> {
    if a.last_past() != b.last_past() {
        return Err(Error::Contract(format!(
            "paths have different pasts ({:?} vs {:?})",
            a.last_past(),
            b.last_past()
        )));
    }
    let Some(t0) = a.last_past() else {
        return Err(Error::Contract("paths have no past point".into()));
    };
    let ea = &a.events[..a.events.partition_point(|&t| t < theta)];
    let eb = &b.events[..b.events.partition_point(|&t| t < theta)];
    let (mut i, mut j) = (0, 0);
    let (mut la, mut lb) = (t0, t0);
    let mut sup = 0.0f64;
    while i < ea.len() || j < eb.len() {
        let next_a = ea.get(i).copied().unwrap_or(f64::INFINITY);
        let next_b = eb.get(j).copied().unwrap_or(f64::INFINITY);
        if next_a <= next_b {
            la = next_a;
            i += 1;
        }
        if next_b <= next_a {
            lb = next_b;
            j += 1;
        }
        sup = sup.max((la - lb).abs());
    }
    Ok(sup)
}

/// Cumulative distribution at the nodes of a grid density, normalized to end at 1.
fn grid_cdf(density: &[f64], dx: f64) -> Result<Vec<f64>> {
    if density.len() < 2 {
        return domain("density needs at least two nodes");
    }
    let mut cdf = vec![0.0; density.len()];
    for j in 1..density.len() {
        cdf[j] = cdf[j - 1] + 0.5 * dx * (density[j - 1] + density[j]);
    }
    let total = cdf[cdf.len() - 1];
    if !(total > 0.0) {
        return domain("density has zero mass");
    }
    cdf.iter_mut().for_each(|v| *v /= total);
    Ok(cdf)
}

/// ∫ |ℓ(s) − c| over an interval where ℓ goes linearly from a to b.
fn abs_linear_minus_const(a: f64, b: f64, c: f64, len: f64) -> f64 {
    let (da, db) = (a - c, b - c);
    if da * db >= 0.0 {
        len * 0.5 * (da + db).abs()
    } else {
        len * (da * da + db * db) / (2.0 * (da - db).abs())
    }
}

/// W₁ between the empirical law of `samples` and the density given on the
/// nodes s_j = jΔ, as ∫|F_emp − F_grid| with F_grid the node-wise trapezoid
/// CDF interpolated linearly.
pub fn w1_empirical_vs_density(samples: &[f64], density: &[f64], dx: f64) -> Result<f64> {
    if samples.is_empty() {
        return domain("W1 needs at least one sample");
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return domain("W1 samples must be finite");
    }
    let cdf = grid_cdf(density, dx)?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let s_end = (cdf.len() - 1) as f64 * dx;
    let g = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= s_end {
            return 1.0;
        }
        let pos = s / dx;
        let k = (pos.floor() as usize).min(cdf.len() - 2);
        let w = pos - k as f64;
        cdf[k] + w * (cdf[k + 1] - cdf[k])
    };
    // Samples below zero contribute their distance to the origin.
    let mut total = 0.0;
    let mut idx = 0usize;
    let hi = xs[xs.len() - 1].max(s_end);
    let mut cur = xs[0].min(0.0);
    let nodes = cdf.len() - 1;
    let mut node = 0usize;
    while cur < hi {
        while idx < xs.len() && xs[idx] <= cur {
            idx += 1;
        }
        while node <= nodes && node as f64 * dx <= cur {
            node += 1;
        }
        let next_node = if node <= nodes { (node as f64 * dx).min(s_end) } else { f64::INFINITY };
        let next_sample = xs.get(idx).copied().unwrap_or(f64::INFINITY);
        let next = next_node.min(next_sample).min(hi);
        let c = idx as f64 / n;
        total += abs_linear_minus_const(g(cur), g(next), c, next - cur);
        cur = next;
    }
    Ok(total)
}

/// Transport cost of min(|x − y|, 1) under the monotone coupling of the two
/// laws. This is an upper bound on the truncated-cost distance W̃₁.
pub fn w1_truncated_upper(samples: &[f64], density: &[f64], dx: f64) -> Result<f64> {
    if samples.is_empty() {
        return domain("W1 needs at least one sample");
    }
    let cdf = grid_cdf(density, dx)?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let quantile = |q: f64| -> f64 {
        let k = cdf.partition_point(|&c| c < q);
        if k == 0 {
            return 0.0;
        }
        if k >= cdf.len() {
            return (cdf.len() - 1) as f64 * dx;
        }
        let (c0, c1) = (cdf[k - 1], cdf[k]);
        let w = if c1 > c0 { (q - c0) / (c1 - c0) } else { 0.0 };
        ((k - 1) as f64 + w) * dx
    };
    let per_sample = 16usize;
    let m = xs.len() * per_sample;
    let mut acc = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        for r in 0..per_sample {
            let q = (i * per_sample + r) as f64 + 0.5;
            acc += (x - quantile(q / m as f64)).abs().min(1.0);
        }
    }
    Ok(acc / m as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares in log space.
    pub residual: f64,
}

/// Least squares of log(value) on log(n).
pub fn fit_rate(ns: &[f64], values: &[f64]) -> Result<RateFit> {
    if ns.len() != values.len() {
        return domain("fit_rate needs as many values as n");
    }
    if let Some(k) = values.iter().position(|v| !(*v > 0.0)) {
        return domain(format!("fit_rate needs positive values; got {} at n = {}", values[k], ns[k]));
    }
    if ns.iter().any(|n| !(*n > 0.0)) {
        return domain("fit_rate needs positive n");
    }
    let mut distinct = ns.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return domain("fit_rate needs at least 3 distinct n");
    }
    let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(RateFit { slope, intercept, residual })
}

/// Standard error of the fitted slope given per-point standard errors of the values.
pub fn slope_standard_error(ns: &[f64], values: &[f64], ses: &[f64]) -> f64 {
    let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    x.iter()
        .zip(values.iter().zip(ses))
        .map(|(xi, (v, s))| ((xi - mx) / sxx).powi(2) * (s / v).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// The explicit bound δ_n(θ) ≤ β·θ·n^{−1/2} with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaBound {
    /// β·θ when the preconditions hold.
    pub value: Option<f64>,
    pub beta: Option<f64>,
    pub regime: Option<&'static str>,
    pub reason: String,
    pub lip: f64,
    pub alpha: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub v_sup: f64,
    pub lambda_sup: Option<f64>,
}

fn sup_on(f: impl Fn(f64) -> f64, t_end: f64, points: usize) -> f64 {
    (0..=points).map(|k| f(t_end * k as f64 / points as f64).abs()).fold(0.0, f64::max)
}

/// Horizon on which sup ‖m_F‖ and sup V_F are searched.
const SUP_SEARCH_END: f64 = 50.0;

pub fn theoretical_beta(model: &Model, theta: f64) -> BetaBound {
    let lip = model.psi.lip();
    let law = &model.interaction;
    let m1 = law.envelope_l1();
    let m2 = law.envelope_l2();
    let t_end = SUP_SEARCH_END.max(theta);
    let points = 4000;
    let v_sup = sup_on(|t| model.past_variance(t), t_end, points);
    let f_sup = sup_on(|t| model.past_mean(t), t_end, points);
    let mut out = BetaBound {
        value: None,
        beta: None,
        regime: None,
        reason: String::new(),
        lip,
        alpha: m1.map(|m| lip * m),
        m1,
        m2,
        v_sup,
        lambda_sup: None,
    };
    if lip == 0.0 {
        out.value = Some(0.0);
        out.beta = Some(0.0);
        out.regime = Some("lip = 0");
        out.reason = "Lipschitz constant is zero, both systems coincide".into();
        return out;
    }
    let (Some(m1), Some(m2)) = (m1, m2) else {
        out.reason = "kernel envelope is not integrable or not square integrable".into();
        return out;
    };
    let alpha = lip * m1;
    if alpha >= 1.0 {
        out.reason = format!("alpha = Lip * |M|_1 = {alpha:.4} >= 1");
        return out;
    }
    let (h1, h2) = crate::limit::regimes(model);
    let mut reasons = Vec::new();
    let mut best: Option<(f64, &'static str)> = None;
    if h2 {
        let h_l1 = law.mean_kernel_l1().unwrap_or(f64::INFINITY);
        let phi0 = model.psi.phi.value(0.0);
        if lip * h_l1 < 1.0 {
            let lam = (phi0 + lip * f_sup) / (1.0 - lip * h_l1);
            out.lambda_sup = Some(lam);
            let b = lip / (1.0 - alpha) * (m2 * lam.sqrt() + m1 * lam + v_sup.sqrt());
            best = Some((b, "H2"));
        } else {
            reasons.push(format!("Lip * |m|_1 = {:.4} >= 1", lip * h_l1));
        }
    }
    if h1 {
        let sup = model.psi.sup_bound().expect("H1 has a bounded intensity");
        let limit = (1.0 - alpha) / sup;
        if theta < limit {
            let b = lip / (1.0 - (alpha + sup * theta))
                * (m2 * sup.sqrt() + 3f64.sqrt() * m1 * sup + v_sup.sqrt());
            if best.is_none_or(|(v, _)| b < v) {
                best = Some((b, "H1"));
            }
        } else {
            reasons.push(format!("theta = {theta} is not below (1 - alpha) / |Psi|_inf = {limit:.4}"));
        }
    }
    if !h1 && !h2 {
        reasons.push("model satisfies neither H1 nor H2".into());
    }
    match best {
        Some((b, regime)) => {
            out.beta = Some(b);
            out.value = Some(b * theta);
            out.regime = Some(regime);
            out.reason = format!("regime {regime}");
        }
        None => out.reason = reasons.join("; "),
    }
    out
}

/// The particle system and the n limit copies built on identical pasts and streams.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub n: usize,
    pub theta: f64,
    pub seed: u64,
    pub particles: ParticleSystemRun,
    pub limits: Vec<PointPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessOptions {
    pub dx: f64,
    pub solver: SolverOptions,
    pub sim: SimOptions,
    /// Times at which particle ages are compared with u(t, ·).
    pub w1_times: Vec<f64>,
    /// Use the PDE pipeline whenever it applies, even when Ψ ignores the age.
    pub force_pde: bool,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            dx: 1e-3,
            solver: SolverOptions::default(),
            sim: SimOptions::default(),
            w1_times: Vec::new(),
            force_pde: false,
        }
    }
}

/// A model with its limit curve solved once, ready to produce coupled runs.
pub struct CouplingHarness {
    pub model: Model,
    pub theta: f64,
    pub options: HarnessOptions,
    pub limit: LimitSolution,
    pub envelope: PiecewiseEnvelope,
}

impl CouplingHarness {
    pub fn new(model: &Model, theta: f64, options: HarnessOptions) -> Result<Self> {
        let mut solver = options.solver.clone();
        solver.snapshot_times.extend(options.w1_times.iter().copied());
        let limit = crate::limit::solve_limit(model, options.dx, theta, &solver, options.force_pde)?;
        let envelope = limit_envelope(&limit.curve, &model.psi, theta)?;
        Ok(CouplingHarness { model: model.clone(), theta, options, limit, envelope })
    }

    pub fn regime(&self) -> Regime {
        self.limit.regime
    }

    /// Limit copies i = 0..count, each on the past and stream it would share with particle i.
    pub fn limit_copies(&self, count: usize, seed: u64) -> Result<Vec<PointPath>> {
        let pasts = sample_pasts(&self.model, count, seed)?;
        let mut streams = make_streams(seed, count, self.theta);
        pasts
            .iter()
            .zip(streams.iter_mut())
            .map(|(p, s)| {
                simulate_limit_process(&self.limit.curve, &self.model.psi, p, s, self.theta, &self.envelope)
            })
            .collect()
    }

    pub fn build(&self, n: usize, seed: u64) -> Result<CoupledRun> {
        let particles = simulate_adrhp(&self.model, n, self.theta, seed, self.options.sim)?;
        let limits = self.limit_copies(n, seed)?;
        Ok(CoupledRun { n, theta: self.theta, seed, particles, limits })
    }

    /// Diagnostics of one coupled replica.
    pub fn replica(&self, n: usize, replica: usize, base_seed: u64) -> Result<ReplicaMetrics> {
        let seed = replica_seed(base_seed, n, replica);
        let run = self.build(n, seed)?;
        let mut delta = 0usize;
        let mut gap = 0.0;
        let mut differ = 0usize;
        for (a, b) in run.particles.paths.iter().zip(&run.limits) {
            let d = delta_count(a, b, self.theta);
            delta += d;
            differ += usize::from(d > 0);
            gap += sup_age_gap(a, b, self.theta)?;
        }
        let mut w1 = Vec::new();
        if let Some(density) = &self.limit.density {
            for &t in &self.options.w1_times {
                let (_, row) = density
                    .snapshot(t)
                    .ok_or_else(|| Error::Domain(format!("no density snapshot at t = {t}")))?;
                let ages = ages_at(&run.particles.paths, t)?;
                w1.push(w1_empirical_vs_density(&ages, row, density.grid.dx)?);
            }
        }
        let nf = n as f64;
        Ok(ReplicaMetrics {
            n,
            replica,
            seed,
            delta_n: delta as f64 / nf,
            age_gap: gap / nf,
            differ_fraction: differ as f64 / nf,
            w1,
        })
    }
}

/// Predictable ages S_{t−} of every path.
pub fn ages_at(paths: &[PointPath], t: f64) -> Result<Vec<f64>> {
    paths.iter().map(|p| age_at(p, t, true)).collect()
}

pub fn build_coupled_run(model: &Model, n: usize, theta: f64, seed: u64, options: HarnessOptions) -> Result<CoupledRun> {
    CouplingHarness::new(model, theta, options)?.build(n, seed)
}

pub fn replica_seed(base: u64, n: usize, replica: usize) -> u64 {
    derive_seed(&[base, tag::REPLICA, n as u64, replica as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaMetrics {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub delta_n: f64,
    pub age_gap: f64,
    /// Fraction of pairs whose paths differ on (0, θ].
    pub differ_fraction: f64,
    pub w1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NSummary {
    pub n: usize,
    pub replicas: usize,
    pub delta_mean: f64,
    pub delta_se: f64,
    pub age_gap_mean: f64,
    pub age_gap_se: f64,
    pub differ_mean: f64,
    pub w1_mean: Vec<f64>,
    pub w1_se: Vec<f64>,
    /// β·θ·n^{−1/2}, when available.
    pub bound: Option<f64>,
    pub bound_ok: Option<bool>,
    /// SE target reached.
    pub powered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub theta: f64,
    pub regime: &'static str,
    pub w1_times: Vec<f64>,
    pub rows: Vec<ReplicaMetrics>,
    pub per_n: Vec<NSummary>,
    pub fit: Option<RateFit>,
    pub slope_se: Option<f64>,
    pub fit_note: String,
    pub underpowered: bool,
    pub beta: BetaBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaBudget {
    pub min: usize,
    pub max: usize,
    /// Target SE(mean δ_n) / mean δ_n.
    pub target_rel_se: f64,
}

impl Default for ReplicaBudget {
    fn default() -> Self {
        ReplicaBudget { min: 32, max: 8192, target_rel_se: 0.1 }
    }
}

fn summarize(rows: &[ReplicaMetrics], n: usize, budget: &ReplicaBudget, beta: &BetaBound, w1_len: usize) -> NSummary {
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta_n).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.age_gap).collect();
    let differ: Vec<f64> = rows.iter().map(|r| r.differ_fraction).collect();
    let (dm, dse) = mean_se(&deltas);
    let (gm, gse) = mean_se(&gaps);
    let (fm, _) = mean_se(&differ);
    let mut w1_mean = Vec::new();
    let mut w1_se = Vec::new();
    for k in 0..w1_len {
        let v: Vec<f64> = rows.iter().map(|r| r.w1[k]).collect();
        let (m, s) = mean_se(&v);
        w1_mean.push(m);
        w1_se.push(s);
    }
    let bound = beta.value.map(|b| b / (n as f64).sqrt());
    NSummary {
        n,
        replicas: rows.len(),
        delta_mean: dm,
        delta_se: dse,
        age_gap_mean: gm,
        age_gap_se: gse,
        differ_mean: fm,
        w1_mean,
        w1_se,
        bound,
        bound_ok: bound.map(|b| dm <= b + 4.0 * dse),
        powered: dse <= budget.target_rel_se * dm,
    }
}

impl CouplingHarness {
    /// Replicas for one n, grown in doubling batches until the SE target or the cap.
    pub fn replicas_for(&self, n: usize, base_seed: u64, budget: &ReplicaBudget) -> Result<Vec<ReplicaMetrics>> {
        let mut rows: Vec<ReplicaMetrics> = Vec::new();
        let mut target = budget.min.max(2).min(budget.max.max(2));
        loop {
            let start = rows.len();
            let batch: Vec<ReplicaMetrics> = (start..target)
                .into_par_iter()
                .map(|r| self.replica(n, r, base_seed))
                .collect::<Result<_>>()?;
            rows.extend(batch);
            let deltas: Vec<f64> = rows.iter().map(|r| r.delta_n).collect();
            let (m, se) = mean_se(&deltas);
            if se <= budget.target_rel_se * m || rows.len() >= budget.max {
                return Ok(rows);
            }
            target = (2 * rows.len()).min(budget.max);
        }
    }

    /// Coupling report over an n ladder.
    pub fn sweep(&self, ns: &[usize], base_seed: u64, budget: &ReplicaBudget) -> Result<CouplingReport> {
        if ns.is_empty() || ns.contains(&0) {
            return domain("sweep needs a non-empty list of n >= 1");
        }
        let beta = theoretical_beta(&self.model, self.theta);
        let mut rows = Vec::new();
        let mut per_n = Vec::new();
        for &n in ns {
            let r = self.replicas_for(n, base_seed, budget)?;
            per_n.push(summarize(&r, n, budget, &beta, self.options_w1_len()));
            rows.extend(r);
        }
        Ok(self.finish_report(rows, per_n, beta))
    }

    /// Report for a fixed replica count at one n.
    pub fn couple(&self, n: usize, replicas: usize, base_seed: u64) -> Result<CouplingReport> {
        let beta = theoretical_beta(&self.model, self.theta);
        let rows: Vec<ReplicaMetrics> =
            (0..replicas).into_par_iter().map(|r| self.replica(n, r, base_seed)).collect::<Result<_>>()?;
        let budget = ReplicaBudget { min: replicas, max: replicas, ..Default::default() };
        let per_n = vec![summarize(&rows, n, &budget, &beta, self.options_w1_len())];
        Ok(self.finish_report(rows, per_n, beta))
    }

    fn options_w1_len(&self) -> usize {
        if self.limit.density.is_some() {
            self.options.w1_times.len()
        } else {
            0
        }
    }

    fn finish_report(&self, rows: Vec<ReplicaMetrics>, per_n: Vec<NSummary>, beta: BetaBound) -> CouplingReport {
        let ns: Vec<f64> = per_n.iter().map(|s| s.n as f64).collect();
        let vals: Vec<f64> = per_n.iter().map(|s| s.delta_mean).collect();
        let ses: Vec<f64> = per_n.iter().map(|s| s.delta_se).collect();
        let (fit, slope_se, fit_note) = match fit_rate(&ns, &vals) {
            Ok(f) => (Some(f), Some(slope_standard_error(&ns, &vals, &ses)), String::new()),
            Err(e) => (None, None, e.to_string()),
        };
        let underpowered = per_n.iter().any(|s| !s.powered);
        CouplingReport {
            theta: self.theta,
            regime: match self.limit.regime {
                Regime::H1 => "H1",
                Regime::H2 => "H2",
            },
            w1_times: if self.options_w1_len() > 0 { self.options.w1_times.clone() } else { Vec::new() },
            rows,
            per_n,
            fit,
            slope_se,
            fit_note,
            underpowered,
            beta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(past: f64, events: &[f64]) -> PointPath {
        PointPath { past: vec![past], events: events.to_vec(), horizon: 10.0 }
    }

    #[test]
    fn delta_count_examples() {
        let a = path(-1.0, &[0.5, 1.2]);
        let b = path(-1.0, &[0.5, 1.7]);
        assert_eq!(delta_count(&a, &b, 2.0), 2);
        assert_eq!(delta_count(&a, &a, 2.0), 0);
        assert_eq!(delta_count(&a, &b, 1.5), 1);
        assert_eq!(delta_count(&a, &b, 1.0), 0);
    }

    #[test]
    fn sup_age_gap_examples() {
        let a = path(-0.5, &[1.0]);
        let b = path(-0.5, &[]);
        assert_eq!(sup_age_gap(&a, &b, 2.0).unwrap(), 1.5);
        assert_eq!(sup_age_gap(&a, &a, 2.0).unwrap(), 0.0);
        let c = path(-0.7, &[]);
        assert!(matches!(sup_age_gap(&a, &c, 2.0), Err(Error::Contract(_))));
    }

    #[test]
    fn w1_spikes() {
        let dx = 1e-3;
        let mut spike = vec![0.0; 2001];
        spike[1000] = 1.0 / dx;
        let w = w1_empirical_vs_density(&vec![1.0; 5], &spike, dx).unwrap();
        assert!(w <= dx, "{w}");
        let w = w1_empirical_vs_density(&[0.0], &spike, dx).unwrap();
        assert!((w - 1.0).abs() <= dx, "{w}");
        assert!(w1_empirical_vs_density(&[], &spike, dx).is_err());
    }

    #[test]
    fn w1_point_vs_uniform() {
        // W1(δ_0, U[0,1]) = 1/2 and W1(δ_{1/2}, U[0,1]) = 1/4
        let dx = 1e-3;
        let mut u = vec![1.0; 1001];
        u.extend(vec![0.0; 10]);
        assert!((w1_empirical_vs_density(&[0.0], &u, dx).unwrap() - 0.5).abs() < 1e-3);
        assert!((w1_empirical_vs_density(&[0.5], &u, dx).unwrap() - 0.25).abs() < 1e-3);
        assert!((w1_truncated_upper(&[0.5], &u, dx).unwrap() - 0.25).abs() < 1e-3);
    }

    #[test]
    fn fit_rate_examples() {
        let ns = [8.0, 16.0, 32.0, 64.0];
        let half: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(-0.5)).collect();
        let f = fit_rate(&ns, &half).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && f.residual < 1e-12);
        assert!(fit_rate(&ns, &[2.0; 4]).unwrap().slope.abs() < 1e-12);
        let inv: Vec<f64> = ns.iter().map(|n| 1.0 / n).collect();
        assert!((fit_rate(&ns, &inv).unwrap().slope + 1.0).abs() < 1e-12);
        assert!(fit_rate(&ns, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_rate(&[8.0, 8.0, 16.0], &[1.0, 1.0, 1.0]).is_err());
    }
}
