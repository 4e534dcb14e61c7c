//! Age-structured PPS system solved along characteristics.
//!
//! Time and age share one step Δ, so transport is an exact index shift and
//! only the integrating factor and the boundary integral use quadrature.
//! Node values are u[k][j] ≈ u(kΔ, jΔ).

use crate::error::{domain, Error, Result};
use crate::model::{InitialLaw, IntensityFn};
use crate::numeric::trapezoid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub dx: f64,
    pub horizon: f64,
    pub s_max: f64,
}

impl Grid1D {
    pub fn new(dx: f64, horizon: f64, s_max: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return domain(format!("grid step must be finite and > 0, got {dx}"));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return domain(format!("grid horizon must be finite and >= 0, got {horizon}"));
        }
        let k = (horizon / dx).round();
        if (k * dx - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return domain(format!("horizon {horizon} is not a multiple of the step {dx}"));
        }
        if !(s_max >= horizon) {
            return domain(format!("age cutoff {s_max} must be >= horizon {horizon}"));
        }
        Ok(Grid1D { dx, horizon, s_max })
    }

    /// Grid whose age cutoff clears the support of `law` plus the horizon.
    pub fn for_law(law: &InitialLaw, dx: f64, horizon: f64) -> Result<Self> {
        Self::new(dx, horizon, law.support_bound() + horizon + 2.0 * dx)
    }

    /// Number of time steps K; nodes t_0..t_K.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dx).round() as usize
    }

    /// Index J of the last age node.
    pub fn last_age(&self) -> usize {
        (self.s_max / self.dx).ceil() as usize
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dx
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }
}

/// Initial density at the age nodes, renormalized to unit trapezoid mass.
///
/// Returns the node values and the factor applied.
pub fn discretize_initial(law: &InitialLaw, grid: &Grid1D) -> Result<(Vec<f64>, f64)> {
    law.validate()?;
    if !law.has_density() {
        return Err(Error::Hypothesis(
            "the PDE pipeline needs an initial age law with a bounded density (Dirac given)".into(),
        ));
    }
    let support = law.support_bound();
    let jmax = grid.last_age();
    let mut u: Vec<f64> = (0..=jmax)
        .map(|j| {
            let s = grid.s(j);
            if s > support + 1e-12 {
                0.0
            } else {
                law.density(s).unwrap_or(0.0)
            }
        })
        .collect();
    let mass = trapezoid(&u, grid.dx);
    if !(mass > 0.0) {
        return domain("initial density has zero mass on the grid");
    }
    let factor = 1.0 / mass;
    u.iter_mut().for_each(|v| *v *= factor);
    Ok((u, factor))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Picard tolerance on X in sup norm.
    pub fp_tol: f64,
    pub max_iter: usize,
    /// Times whose age profiles are kept (nearest grid row).
    pub snapshot_times: Vec<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { fp_tol: 1e-10, max_iter: 50, snapshot_times: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveMetadata {
    pub description: String,
    pub renormalization: f64,
    /// max_k |mass_k − 1|.
    pub max_mass_defect: f64,
    pub u_max: f64,
    pub u_min: f64,
    /// Mass that left through the age cutoff.
    pub outflow: f64,
    pub max_fp_iterations: usize,
    pub max_fp_residual: f64,
    /// max_k |u0[k] − ∫ f u[k]| (trapezoid).
    pub max_boundary_residual: f64,
    /// max_k |u0[k] − u0[k−1]|.
    pub max_boundary_increment: f64,
}

/// Solution samples: boundary trace and X on every time node, age profiles
/// on the requested snapshot rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: Grid1D,
    pub u0: Vec<f64>,
    pub x: Vec<f64>,
    pub f0: Vec<f64>,
    pub snapshot_rows: Vec<usize>,
    pub snapshots: Vec<Vec<f64>>,
    pub meta: SolveMetadata,
}

impl DensityGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..self.u0.len()).map(|k| self.grid.t(k)).collect()
    }

    /// Age profile at the snapshot row closest to t.
    pub fn snapshot(&self, t: f64) -> Option<(f64, &[f64])> {
        let k = (t / self.grid.dx).round() as usize;
        let idx = self.snapshot_rows.iter().position(|&r| r == k)?;
        Some((self.grid.t(k), &self.snapshots[idx]))
    }

    /// Checks the mass and a priori bound invariants; `mass_tol` is also the
    /// slack allowed above `bound`.
    pub fn check_invariants(&self, mass_tol: f64, bound: f64) -> Result<()> {
        if self.meta.max_mass_defect > mass_tol {
            return Err(Error::Convergence(format!(
                "mass defect {} exceeds {mass_tol}",
                self.meta.max_mass_defect
            )));
        }
        if self.meta.u_min < 0.0 || self.meta.u_max > bound + mass_tol {
            return Err(Error::Convergence(format!(
                "density range [{}, {}] outside [0, {bound} + {mass_tol}]",
                self.meta.u_min, self.meta.u_max
            )));
        }
        Ok(())
    }
}

fn snapshot_rows(grid: &Grid1D, times: &[f64]) -> Vec<usize> {
    let k_max = grid.steps();
    let mut rows: Vec<usize> = times
        .iter()
        .filter(|t| t.is_finite() && **t >= 0.0)
        .map(|t| ((t / grid.dx).round() as usize).min(k_max))
        .collect();
    rows.sort_unstable();
    rows.dedup();
    rows
}

fn check_u_in(u_in: &[f64], grid: &Grid1D, mass_tol: f64) -> Result<()> {
    let jmax = grid.last_age();
    if u_in.len() != jmax + 1 {
        return domain(format!("initial density has {} nodes, grid needs {}", u_in.len(), jmax + 1));
    }
    if let Some(j) = u_in.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return domain(format!("initial density is negative or non-finite at node {j}"));
    }
    let mass = trapezoid(u_in, grid.dx);
    if (mass - 1.0).abs() > mass_tol {
        return domain(format!("initial density mass {mass} is not within {mass_tol} of 1"));
    }
    let k = grid.steps();
    if jmax >= k && u_in[jmax + 1 - k..].iter().any(|v| *v > 0.0) {
        return domain("age cutoff too small: initial mass would reach it before the horizon");
    }
    Ok(())
}

/// Time-stepping state shared by the linear and nonlinear solves.
struct March {
    dx: f64,
    prev: Vec<f64>,
    next: Vec<f64>,
    rate_prev: Vec<f64>,
    rate_cur: Vec<f64>,
}

impl March {
    /// Transports `prev` one step with rates (`rate_prev`, `rate_cur`) and
    /// solves the implicit boundary value. Returns (u0, outflow mass).
    fn step(&mut self) -> f64 {
        let h = 0.5 * self.dx;
        let jmax = self.prev.len() - 1;
        let mut last_sum = f64::NAN;
        let mut last_factor = 1.0;
        let mut integral = 0.0;
        for j in 1..=jmax {
            let a = self.rate_prev[j - 1] + self.rate_cur[j];
            if a != last_sum {
                last_sum = a;
                last_factor = (-h * a).exp();
            }
            let v = self.prev[j - 1] * last_factor;
            self.next[j] = v;
            let w = if j == jmax { 0.5 } else { 1.0 };
            integral += w * self.rate_cur[j] * v;
        }
        let u0 = self.dx * integral / (1.0 - h * self.rate_cur[0]);
        self.next[0] = u0;
        u0
    }

    /// Boundary integral Δ Σ' w_j r_j u_j for the boundary identity check.
    fn boundary_integral(&self) -> f64 {
        let jmax = self.next.len() - 1;
        let mut acc = 0.5 * self.rate_cur[0] * self.next[0] + 0.5 * self.rate_cur[jmax] * self.next[jmax];
        for j in 1..jmax {
            acc += self.rate_cur[j] * self.next[j];
        }
        self.dx * acc
    }
}

fn row_stats(meta: &mut SolveMetadata, row: &[f64], dx: f64) {
    let mass = trapezoid(row, dx);
    meta.max_mass_defect = meta.max_mass_defect.max((mass - 1.0).abs());
    for &v in row {
        meta.u_max = meta.u_max.max(v);
        meta.u_min = meta.u_min.min(v);
    }
}

fn check_rates(rates: &[f64], dx: f64, t: f64) -> Result<()> {
    if let Some(j) = rates.iter().position(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Domain(format!("rate is negative or unbounded at t = {t}, age node {j}")));
    }
    if 0.5 * dx * rates[0] >= 1.0 {
        return Err(Error::Domain(format!("rate {} at age 0 too large for step {dx}", rates[0])));
    }
    Ok(())
}

/// Linear system ∂_t u + ∂_s u + f u = 0, u(t,0) = ∫ f(t,s) u(t,s) ds.
pub fn solve_linear_pps(
    f: impl Fn(f64, f64) -> f64,
    u_in: &[f64],
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<DensityGrid> {
    check_u_in(u_in, grid, 10.0 * grid.dx)?;
    let dx = grid.dx;
    let jmax = grid.last_age();
    let k_max = grid.steps();
    let rows = snapshot_rows(grid, &opts.snapshot_times);
    let mut meta = SolveMetadata {
        description: "linear PPS".into(),
        renormalization: 1.0,
        u_min: f64::INFINITY,
        ..Default::default()
    };

    let rates_at = |t: f64, out: &mut Vec<f64>| {
        for (j, r) in out.iter_mut().enumerate() {
            *r = f(t, j as f64 * dx);
        }
    };
    let mut m = March {
        dx,
        prev: u_in.to_vec(),
        next: vec![0.0; jmax + 1],
        rate_prev: vec![0.0; jmax + 1],
        rate_cur: vec![0.0; jmax + 1],
    };
    rates_at(0.0, &mut m.rate_prev);
    check_rates(&m.rate_prev, dx, 0.0)?;

    let mut u0 = Vec::with_capacity(k_max + 1);
    u0.push(trapezoid(&m.rate_prev.iter().zip(u_in).map(|(r, u)| r * u).collect::<Vec<_>>(), dx));
    let mut snapshots = Vec::new();
    if rows.first() == Some(&0) {
        snapshots.push(u_in.to_vec());
    }
    row_stats(&mut meta, u_in, dx);

    for k in 1..=k_max {
        let t = grid.t(k);
        rates_at(t, &mut m.rate_cur);
        check_rates(&m.rate_cur, dx, t)?;
        meta.outflow += dx * m.prev[jmax];
        let b = m.step();
        meta.max_boundary_residual = meta.max_boundary_residual.max((b - m.boundary_integral()).abs());
        meta.max_boundary_increment = meta.max_boundary_increment.max((b - u0[k - 1]).abs());
        u0.push(b);
        row_stats(&mut meta, &m.next, dx);
        if rows.binary_search(&k).is_ok() {
            snapshots.push(m.next.clone());
        }
        std::mem::swap(&mut m.prev, &mut m.next);
        std::mem::swap(&mut m.rate_prev, &mut m.rate_cur);
    }
    Ok(DensityGrid {
        grid: *grid,
        x: vec![0.0; k_max + 1],
        f0: vec![0.0; k_max + 1],
        u0,
        snapshot_rows: rows,
        snapshots,
        meta,
    })
}

/// Nonlinear system with rate Ψ(s, X(t) + f0(t)) and
/// X(t) = ∫₀ᵗ h(t − z) u(z, 0) dz.
pub fn solve_pps(
    psi: &IntensityFn,
    h: impl Fn(f64) -> f64,
    f0: impl Fn(f64) -> f64,
    u_in: &[f64],
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<DensityGrid> {
    psi.validate()?;
    let Some(sup) = psi.sup_bound() else {
        return Err(Error::Hypothesis(
            "the PPS solver needs a bounded intensity; use the age-independent pipeline for unbounded Ψ".into(),
        ));
    };
    if 0.5 * grid.dx * sup >= 1.0 {
        return domain(format!("step {} too large for intensity bound {sup}", grid.dx));
    }
    check_u_in(u_in, grid, 10.0 * grid.dx)?;
    let dx = grid.dx;
    let jmax = grid.last_age();
    let k_max = grid.steps();
    let rows = snapshot_rows(grid, &opts.snapshot_times);
    let mut meta = SolveMetadata {
        description: format!("nonlinear PPS, psi = {:?}, delta = {}", psi.phi, psi.refractory_delta),
        renormalization: 1.0,
        u_min: f64::INFINITY,
        ..Default::default()
    };

    let hk: Vec<f64> = (0..=k_max).map(|k| h(grid.t(k))).collect();
    let f0k: Vec<f64> = (0..=k_max).map(|k| f0(grid.t(k))).collect();
    if let Some(k) = hk.iter().chain(&f0k).position(|v| !v.is_finite()) {
        return domain(format!("kernel or past term is not finite at node {}", k % (k_max + 1)));
    }
    // Rate rows only depend on the age through the refractory mask.
    let ages: Vec<f64> = (0..=jmax).map(|j| grid.s(j)).collect();
    let fill = |x: f64, out: &mut Vec<f64>| {
        for (r, &s) in out.iter_mut().zip(&ages) {
            *r = psi.value(s, x);
        }
    };

    let mut m = March {
        dx,
        prev: u_in.to_vec(),
        next: vec![0.0; jmax + 1],
        rate_prev: vec![0.0; jmax + 1],
        rate_cur: vec![0.0; jmax + 1],
    };
    let mut x = vec![0.0; k_max + 1];
    fill(f0k[0], &mut m.rate_prev);
    let mut u0 = Vec::with_capacity(k_max + 1);
    u0.push(trapezoid(&m.rate_prev.iter().zip(u_in).map(|(r, u)| r * u).collect::<Vec<_>>(), dx));
    let mut snapshots = Vec::new();
    if rows.first() == Some(&0) {
        snapshots.push(u_in.to_vec());
    }
    row_stats(&mut meta, u_in, dx);

    for k in 1..=k_max {
        // History part of the trapezoid convolution; the u0[k] term is implicit.
        let mut hist = 0.5 * hk[k] * u0[0];
        for i in 1..k {
            hist += hk[k - i] * u0[i];
        }
        hist *= dx;
        let implicit = 0.5 * dx * hk[0];
        let mut guess = if k >= 2 { 2.0 * x[k - 1] - x[k - 2] } else { x[k - 1] };
        let mut converged = false;
        let mut residual = f64::INFINITY;
        let mut b = 0.0;
        for iter in 1..=opts.max_iter {
            fill(guess + f0k[k], &mut m.rate_cur);
            b = m.step();
            let updated = hist + implicit * b;
            residual = (updated - guess).abs();
            meta.max_fp_iterations = meta.max_fp_iterations.max(iter);
            if residual <= opts.fp_tol {
                converged = true;
                break;
            }
            guess = updated;
        }
        if !converged {
            return Err(Error::Convergence(format!(
                "X fixed point at t = {} not within {} after {} iterations (residual {residual:e})",
                grid.t(k),
                opts.fp_tol,
                opts.max_iter
            )));
        }
        meta.max_fp_residual = meta.max_fp_residual.max(residual);
        x[k] = guess;
        meta.outflow += dx * m.prev[jmax];
        meta.max_boundary_residual = meta.max_boundary_residual.max((b - m.boundary_integral()).abs());
        meta.max_boundary_increment = meta.max_boundary_increment.max((b - u0[k - 1]).abs());
        u0.push(b);
        row_stats(&mut meta, &m.next, dx);
        if rows.binary_search(&k).is_ok() {
            snapshots.push(m.next.clone());
        }
        std::mem::swap(&mut m.prev, &mut m.next);
        std::mem::swap(&mut m.rate_prev, &mut m.rate_cur);
    }
    Ok(DensityGrid { grid: *grid, u0, x, f0: f0k, snapshot_rows: rows, snapshots, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Phi;

    fn exp_grid(dx: f64, horizon: f64) -> (Grid1D, Vec<f64>) {
        let law = InitialLaw::Exponential { rate: 1.0 };
        let grid = Grid1D::for_law(&law, dx, horizon).unwrap();
        let (u, _) = discretize_initial(&law, &grid).unwrap();
        (grid, u)
    }

    #[test]
    fn zero_rate_is_pure_transport() {
        let (grid, u_in) = exp_grid(1e-2, 2.0);
        let opts = SolverOptions { snapshot_times: vec![2.0], ..Default::default() };
        let sol = solve_linear_pps(|_, _| 0.0, &u_in, &grid, &opts).unwrap();
        assert!(sol.u0.iter().all(|v| *v == 0.0));
        let (_, row) = sol.snapshot(2.0).unwrap();
        assert_eq!(row[150], 0.0);
        assert_eq!(row[250], u_in[50]);
    }

    #[test]
    fn stationary_rate_one() {
        let (grid, u_in) = exp_grid(1e-3, 1.0);
        let opts = SolverOptions { snapshot_times: vec![1.0], ..Default::default() };
        let sol = solve_linear_pps(|_, _| 1.0, &u_in, &grid, &opts).unwrap();
        let err = sol.u0.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "u0 error {err}");
        let (_, row) = sol.snapshot(1.0).unwrap();
        let sup = row.iter().enumerate().map(|(j, v)| (v - (-grid.s(j)).exp()).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-2, "sup error {sup}");
        assert!(sol.meta.max_boundary_residual < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (grid, mut u_in) = exp_grid(1e-2, 1.0);
        u_in[3] = -1.0;
        assert!(solve_linear_pps(|_, _| 1.0, &u_in, &grid, &SolverOptions::default()).is_err());
        let (grid, u_in) = exp_grid(1e-2, 1.0);
        assert!(solve_linear_pps(|_, _| f64::INFINITY, &u_in, &grid, &SolverOptions::default()).is_err());
        let affine = IntensityFn::new(Phi::Affine { mu: 1.0, slope: 1.0 }, 0.0);
        let r = solve_pps(&affine, |_| 0.0, |_| 0.0, &u_in, &grid, &SolverOptions::default());
        assert!(matches!(r, Err(Error::Hypothesis(_))));
        let dirac = InitialLaw::Dirac { age: 1.0 };
        assert!(matches!(discretize_initial(&dirac, &grid), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn constant_psi_decouples() {
        let (grid, u_in) = exp_grid(2e-3, 2.0);
        let psi = IntensityFn::new(Phi::Constant { c: 1.0 }, 0.0);
        let h = |t: f64| 0.5 * (-2.0 * t).exp();
        let sol = solve_pps(&psi, h, |_| 0.0, &u_in, &grid, &SolverOptions::default()).unwrap();
        let lin = solve_linear_pps(|_, _| 1.0, &u_in, &grid, &SolverOptions::default()).unwrap();
        assert_eq!(sol.u0, lin.u0);
        // X(t) = ∫₀ᵗ h ≈ 0.25 (1 − e^{−2t}) since u0 ≈ 1
        for k in [100, 500, 1000] {
            let t = grid.t(k);
            assert!((sol.x[k] - 0.25 * (1.0 - (-2.0 * t).exp())).abs() < 1e-2);
        }
    }

    #[test]
    fn zero_kernel_matches_linear() {
        let (grid, u_in) = exp_grid(2e-3, 2.0);
        let psi = IntensityFn::new(Phi::ClippedAffine { mu: 0.5, slope: 1.0, cap: 2.0 }, 0.1);
        let f0 = |t: f64| (3.0 * t).sin();
        let sol = solve_pps(&psi, |_| 0.0, f0, &u_in, &grid, &SolverOptions::default()).unwrap();
        assert!(sol.x.iter().all(|v| *v == 0.0));
        let lin = solve_linear_pps(|t, s| psi.value(s, f0(t)), &u_in, &grid, &SolverOptions::default()).unwrap();
        for (a, b) in sol.u0.iter().zip(&lin.u0) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
