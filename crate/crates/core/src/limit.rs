//! Limit mean intensity λ̄ in both regimes and exact sampling of the limit
//! point process against an injected grain stream.

use crate::error::{domain, Error, Result};
use crate::model::{InitialLaw, IntensityFn, Model};
use crate::particle::PointPath;
use crate::pde::{discretize_initial, solve_pps, DensityGrid, Grid1D, SolverOptions};
use crate::thinning::{thin_next_event, GrainStream, PiecewiseEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// λ̄(t) = u(t, 0) of the PPS system.
    FromPde,
    /// Volterra equation of the age-independent case.
    FromVolterra,
}

/// λ̄ and γ̄ on the nodes t_k = kΔ; linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanIntensityCurve {
    pub dx: f64,
    pub lambda: Vec<f64>,
    /// γ̄(t) = ∫₀ᵗ m(t − z) λ̄(z) dz + m_F(t).
    pub gamma: Vec<f64>,
    pub provenance: Provenance,
}

fn interp(values: &[f64], dx: f64, t: f64) -> f64 {
    let last = values.len() - 1;
    let pos = (t / dx).max(0.0);
    let k = pos.floor() as usize;
    if k >= last {
        return values[last];
    }
    let w = pos - k as f64;
    values[k] + w * (values[k + 1] - values[k])
}

impl MeanIntensityCurve {
    pub fn horizon(&self) -> f64 {
        (self.lambda.len() - 1) as f64 * self.dx
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.lambda.len()).map(|k| k as f64 * self.dx).collect()
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        interp(&self.lambda, self.dx, t)
    }

    pub fn gamma_at(&self, t: f64) -> f64 {
        interp(&self.gamma, self.dx, t)
    }

    pub fn sup_lambda(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    /// (min, max) of γ̄ over [t0, t1]; exact for the piecewise-linear curve.
    pub fn gamma_range(&self, t0: f64, t1: f64) -> (f64, f64) {
        let a = self.gamma_at(t0);
        let b = self.gamma_at(t1);
        let (mut lo, mut hi) = (a.min(b), a.max(b));
        let k0 = (t0 / self.dx).ceil().max(0.0) as usize;
        let k1 = ((t1 / self.dx).floor() as usize).min(self.gamma.len() - 1);
        for &g in self.gamma.get(k0..=k1).unwrap_or(&[]) {
            lo = lo.min(g);
            hi = hi.max(g);
        }
        (lo, hi)
    }
}

fn curve_grid(dx: f64, horizon: f64) -> Result<usize> {
    Grid1D::new(dx, horizon, horizon).map(|g| g.steps())
}

/// Bounded-intensity regime: λ̄ = u(·, 0), returned with the density.
pub fn mean_intensity_bounded(
    psi: &IntensityFn,
    m_kernel: impl Fn(f64) -> f64,
    m_past: impl Fn(f64) -> f64,
    u_in: &InitialLaw,
    dx: f64,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<(MeanIntensityCurve, DensityGrid)> {
    let grid = Grid1D::for_law(u_in, dx, horizon)?;
    let (u, factor) = discretize_initial(u_in, &grid)?;
    let mut sol = solve_pps(psi, m_kernel, m_past, &u, &grid, opts)?;
    sol.meta.renormalization = factor;
    let gamma = sol.x.iter().zip(&sol.f0).map(|(x, f)| x + f).collect();
    let curve = MeanIntensityCurve { dx, lambda: sol.u0.clone(), gamma, provenance: Provenance::FromPde };
    Ok((curve, sol))
}

/// Age-independent regime: λ̄(t) = Ψ₀(∫₀ᵗ m(t − z) λ̄(z) dz + m_F(t)).
pub fn mean_intensity_age_independent(
    psi: &IntensityFn,
    m_kernel: impl Fn(f64) -> f64,
    m_past: impl Fn(f64) -> f64,
    dx: f64,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<MeanIntensityCurve> {
    psi.validate()?;
    if !psi.age_independent() {
        return Err(Error::Hypothesis(format!(
            "age-independent pipeline needs delta = 0, got {}",
            psi.refractory_delta
        )));
    }
    let k_max = curve_grid(dx, horizon)?;
    let hk: Vec<f64> = (0..=k_max).map(|k| m_kernel(k as f64 * dx)).collect();
    let f0k: Vec<f64> = (0..=k_max).map(|k| m_past(k as f64 * dx)).collect();
    if hk.iter().chain(&f0k).any(|v| !v.is_finite()) {
        return domain("kernel or past term is not finite on the grid");
    }
    let h_l1 = dx * (0.5 * hk[0].abs() + hk[1..].iter().map(|v| v.abs()).sum::<f64>());
    let phi = &psi.phi;
    let mut lambda = vec![0.0; k_max + 1];
    let mut gamma = vec![0.0; k_max + 1];
    lambda[0] = phi.value(f0k[0]);
    gamma[0] = f0k[0];
    let c = 0.5 * dx * hk[0];
    for k in 1..=k_max {
        let mut mem = 0.5 * hk[k] * lambda[0];
        for i in 1..k {
            mem += hk[k - i] * lambda[i];
        }
        let a = dx * mem + f0k[k];
        let mut l = lambda[k - 1];
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..opts.max_iter {
            let next = phi.value(a + c * l);
            residual = (next - l).abs();
            l = next;
            if residual <= opts.fp_tol * l.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !l.is_finite() {
            let unstable = psi.lip() * h_l1 >= 1.0;
            return Err(Error::Convergence(format!(
                "mean intensity step at t = {} did not converge (residual {residual:e}); Lip*|h|_1 = {:.4}{}",
                k as f64 * dx,
                psi.lip() * h_l1,
                if unstable { " >= 1, beyond the stability threshold" } else { "" }
            )));
        }
        lambda[k] = l;
        gamma[k] = a + c * l;
    }
    Ok(MeanIntensityCurve { dx, lambda, gamma, provenance: Provenance::FromVolterra })
}

/// Which of the two limit regimes a model falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Bounded Ψ and an initial age density.
    H1,
    /// Ψ does not depend on the age.
    H2,
}

pub fn regimes(model: &Model) -> (bool, bool) {
    let h1 = model.psi.sup_bound().is_some() && model.initial.has_density();
    let h2 = model.psi.age_independent();
    (h1, h2)
}

/// λ̄ for a model, with the density when the PDE pipeline is used.
#[derive(Debug, Clone)]
pub struct LimitSolution {
    pub regime: Regime,
    pub curve: MeanIntensityCurve,
    pub density: Option<DensityGrid>,
}

/// Picks the Volterra pipeline when Ψ ignores the age, the PDE otherwise.
/// `force_pde` selects the PDE whenever H1 holds.
pub fn solve_limit(model: &Model, dx: f64, horizon: f64, opts: &SolverOptions, force_pde: bool) -> Result<LimitSolution> {
    model.validate()?;
    let (h1, h2) = regimes(model);
    let mk = |t: f64| model.mean_kernel(t);
    let mp = |t: f64| model.past_mean(t);
    if h1 && (force_pde || !h2) {
        let (curve, density) = mean_intensity_bounded(&model.psi, mk, mp, &model.initial, dx, horizon, opts)?;
        Ok(LimitSolution { regime: Regime::H1, curve, density: Some(density) })
    } else if h2 {
        let curve = mean_intensity_age_independent(&model.psi, mk, mp, dx, horizon, opts)?;
        Ok(LimitSolution { regime: Regime::H2, curve, density: None })
    } else {
        Err(Error::Hypothesis(
            "model is outside both regimes: the intensity is unbounded and depends on the age (delta > 0), \
             or the initial law has no density"
                .into(),
        ))
    }
}

/// Block length of the piecewise envelope used for unbounded Ψ.
pub const ENVELOPE_BLOCK: f64 = 0.25;

/// Dominating rate for the limit intensity Ψ(S̄, γ̄(t)) on [0, θ].
///
/// Uses ‖Ψ‖∞ when finite, otherwise the exact sup of the monotone Φ over
/// the range of γ̄ on each block.
pub fn limit_envelope(curve: &MeanIntensityCurve, psi: &IntensityFn, theta: f64) -> Result<PiecewiseEnvelope> {
    if theta > curve.horizon() + 1e-9 {
        return domain(format!("curve covers [0, {}], horizon {theta} requested", curve.horizon()));
    }
    if let Some(s) = psi.sup_bound() {
        return PiecewiseEnvelope::constant(s, 0.0, theta);
    }
    let blocks = (theta / ENVELOPE_BLOCK).ceil().max(1.0) as usize;
    let mut breaks = Vec::with_capacity(blocks + 1);
    let mut levels = Vec::with_capacity(blocks);
    breaks.push(0.0);
    for b in 0..blocks {
        let t0 = b as f64 * ENVELOPE_BLOCK;
        let t1 = if b + 1 == blocks { theta } else { (b + 1) as f64 * ENVELOPE_BLOCK };
        let (lo, hi) = curve.gamma_range(t0, t1);
        levels.push(psi.phi.value(lo).max(psi.phi.value(hi)));
        breaks.push(t1);
    }
    PiecewiseEnvelope::new(breaks, levels)
}

/// Exact sample of the limit process on (0, θ] from the given past and stream.
pub fn simulate_limit_process(
    curve: &MeanIntensityCurve,
    psi: &IntensityFn,
    past: &PointPath,
    stream: &mut GrainStream,
    theta: f64,
    envelope: &PiecewiseEnvelope,
) -> Result<PointPath> {
    let mut last = past
        .last_past()
        .ok_or_else(|| Error::Domain("limit process needs a past point".into()))?;
    let mut events = Vec::new();
    let mut t = 0.0;
    while let Some(a) = thin_next_event(stream, t, theta, envelope, |s| psi.value(s - last, curve.gamma_at(s)))? {
        events.push(a.t);
        last = a.t;
        t = a.t;
    }
    Ok(PointPath { past: past.past.clone(), events, horizon: theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Phi;

    #[test]
    fn constant_psi_gives_constant_curve() {
        let psi = IntensityFn::new(Phi::Constant { c: 1.7 }, 0.0);
        let c = mean_intensity_age_independent(&psi, |t| (-t).exp(), |_| 0.0, 1e-2, 2.0, &SolverOptions::default())
            .unwrap();
        assert!(c.lambda.iter().all(|v| *v == 1.7));
    }

    #[test]
    fn no_kernel_gives_phi_of_past() {
        let psi = IntensityFn::new(Phi::Affine { mu: 1.0, slope: 2.0 }, 0.0);
        let f0 = |t: f64| (-t).exp() - 0.3;
        let c = mean_intensity_age_independent(&psi, |_| 0.0, f0, 1e-2, 2.0, &SolverOptions::default()).unwrap();
        for (k, v) in c.lambda.iter().enumerate() {
            assert_eq!(*v, psi.phi.value(f0(k as f64 * 1e-2)));
        }
    }

    #[test]
    fn linear_hawkes_closed_form() {
        let psi = IntensityFn::new(Phi::Affine { mu: 1.0, slope: 1.0 }, 0.0);
        let c = mean_intensity_age_independent(&psi, |t| (-2.0 * t).exp(), |_| 0.0, 1e-3, 5.0, &SolverOptions::default())
            .unwrap();
        let err = c
            .lambda
            .iter()
            .enumerate()
            .map(|(k, v)| (v - (2.0 - (-(k as f64) * 1e-3).exp())).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn refractory_gaps_in_limit_copies() {
        let psi = IntensityFn::new(Phi::ClippedAffine { mu: 3.0, slope: 1.0, cap: 4.0 }, 0.2);
        let curve = MeanIntensityCurve {
            dx: 0.5,
            lambda: vec![1.0; 21],
            gamma: vec![0.5; 21],
            provenance: Provenance::FromVolterra,
        };
        let env = limit_envelope(&curve, &psi, 10.0).unwrap();
        for id in 0..20 {
            let mut s = GrainStream::new(4, id, 10.0);
            let p = simulate_limit_process(&curve, &psi, &PointPath::with_past(vec![-0.05]), &mut s, 10.0, &env).unwrap();
            let mut prev = -0.05;
            for &e in &p.events {
                assert!(e - prev >= 0.2);
                prev = e;
            }
        }
    }

    #[test]
    fn envelope_dominates_unbounded_phi() {
        let psi = IntensityFn::new(Phi::Affine { mu: 1.0, slope: 1.0 }, 0.0);
        let gamma: Vec<f64> = (0..=100).map(|k| (k as f64 * 0.05).sin()).collect();
        let curve = MeanIntensityCurve { dx: 0.05, lambda: gamma.clone(), gamma, provenance: Provenance::FromVolterra };
        let env = limit_envelope(&curve, &psi, 5.0).unwrap();
        for k in 0..=5000 {
            let t = k as f64 * 1e-3;
            assert!(psi.phi.value(curve.gamma_at(t)) <= env.level_at(t) + 1e-15);
        }
    }
}
