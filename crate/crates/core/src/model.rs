//! Model ingredients: interaction kernels, random-kernel laws, firing-rate
//! maps, initial-age laws and past-influence laws.
//!
//! Every type here is an immutable value. The serde representation is the
//! `model` section of the config file.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::{erlang_cdf, factorial, simpson};
use crate::rng::{keyed_rng, tag};

/// Density level below which an unbounded initial-age law is truncated.
pub const DENSITY_CUTOFF: f64 = 1e-12;

const QUAD_PANELS: usize = 4000;

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite, got {v}"))
    }
}

/// Base interaction function h(t), t ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// α·e^{−βt}.
    Exponential { alpha: f64, beta: f64 },
    /// α·β^k t^{k−1} e^{−βt} / (k−1)!, so that ∫h = α.
    Erlang { alpha: f64, beta: f64, order: u32 },
    /// values[k] on [breakpoints[k], breakpoints[k+1]), zero elsewhere.
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
    Zero,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Exponential { alpha, beta } => {
                check_finite("kernel.alpha", *alpha)?;
                check_finite("kernel.beta", *beta)?;
                if *beta < 0.0 {
                    return domain("kernel.beta must be >= 0");
                }
            }
            KernelSpec::Erlang { alpha, beta, order } => {
                check_finite("kernel.alpha", *alpha)?;
                check_finite("kernel.beta", *beta)?;
                if *beta <= 0.0 {
                    return domain("erlang kernel needs beta > 0");
                }
                if *order == 0 || *order > 64 {
                    return domain("erlang order must be in 1..=64");
                }
            }
            KernelSpec::PiecewiseConstant { breakpoints, values } => {
                if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
                    return domain("piecewise kernel needs len(breakpoints) = len(values) + 1 >= 2");
                }
                if breakpoints[0] < 0.0 {
                    return domain("piecewise kernel breakpoints must be >= 0");
                }
                for v in breakpoints.iter().chain(values) {
                    check_finite("piecewise kernel entry", *v)?;
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return domain("piecewise kernel breakpoints must be strictly increasing");
                }
            }
            KernelSpec::Zero => {}
        }
        Ok(())
    }

    /// h(t) with a domain check on t.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("kernel evaluated at negative time {t}"));
        }
        Ok(self.value(t))
    }

    /// h(t) for t ≥ 0, unchecked.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            KernelSpec::Exponential { alpha, beta } => alpha * (-beta * t).exp(),
            KernelSpec::Erlang { alpha, beta, order } => {
                let k = *order as i32;
                alpha * beta.powi(k) * t.powi(k - 1) * (-beta * t).exp() / factorial(order - 1)
            }
            KernelSpec::PiecewiseConstant { breakpoints, values } => {
                if t < breakpoints[0] || t >= breakpoints[breakpoints.len() - 1] {
                    return 0.0;
                }
                let idx = breakpoints.partition_point(|&b| b <= t) - 1;
                values[idx]
            }
            KernelSpec::Zero => 0.0,
        }
    }

    /// Envelope M(t) = |h(t)|.
    #[inline]
    pub fn envelope(&self, t: f64) -> f64 {
        self.value(t).abs()
    }

    /// Non-increasing majorant sup_{u ≥ t} |h(u)|, used by the thinning envelopes.
    pub fn decreasing_envelope(&self, t: f64) -> f64 {
        match self {
            KernelSpec::Exponential { .. } | KernelSpec::Zero => self.envelope(t),
            KernelSpec::Erlang { beta, order, .. } => {
                let peak = (*order as f64 - 1.0) / beta;
                self.envelope(t.max(peak))
            }
            KernelSpec::PiecewiseConstant { breakpoints, values } => {
                let mut best = 0.0f64;
                for (k, v) in values.iter().enumerate() {
                    if breakpoints[k + 1] > t {
                        best = best.max(v.abs());
                    }
                }
                best
            }
        }
    }

    /// True when |h| itself is non-increasing on [0, ∞).
    pub fn envelope_is_monotone(&self) -> bool {
        match self {
            KernelSpec::Exponential { .. } | KernelSpec::Zero => true,
            KernelSpec::Erlang { order, .. } => *order == 1,
            KernelSpec::PiecewiseConstant { breakpoints, values } => {
                breakpoints[0] == 0.0 && values.windows(2).all(|w| w[1].abs() <= w[0].abs())
            }
        }
    }

    /// ∫₀^T M(t) dt in closed form.
    pub fn envelope_integral(&self, horizon: f64) -> f64 {
        let t = horizon.max(0.0);
        match self {
            KernelSpec::Exponential { alpha, beta } => {
                if *beta == 0.0 {
                    alpha.abs() * t
                } else {
                    alpha.abs() * (1.0 - (-beta * t).exp()) / beta
                }
            }
            KernelSpec::Erlang { alpha, beta, order } => alpha.abs() * erlang_cdf(*order, beta * t),
            KernelSpec::PiecewiseConstant { breakpoints, values } => values
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let lo = breakpoints[k].min(t);
                    let hi = breakpoints[k + 1].min(t);
                    v.abs() * (hi - lo)
                })
                .sum(),
            KernelSpec::Zero => 0.0,
        }
    }

    /// ‖M‖₁ on [0, ∞), or None when infinite.
    pub fn l1_norm(&self) -> Option<f64> {
        match self {
            KernelSpec::Exponential { alpha, beta } => {
                if *alpha == 0.0 {
                    Some(0.0)
                } else if *beta > 0.0 {
                    Some(alpha.abs() / beta)
                } else {
                    None
                }
            }
            KernelSpec::Erlang { alpha, .. } => Some(alpha.abs()),
            KernelSpec::PiecewiseConstant { breakpoints, .. } => {
                Some(self.envelope_integral(breakpoints[breakpoints.len() - 1]))
            }
            KernelSpec::Zero => Some(0.0),
        }
    }

    /// ‖M‖₂ on [0, ∞), or None when infinite.
    pub fn l2_norm(&self) -> Option<f64> {
        match self {
            KernelSpec::Exponential { alpha, beta } => {
                if *alpha == 0.0 {
                    Some(0.0)
                } else if *beta > 0.0 {
                    Some(alpha.abs() / (2.0 * beta).sqrt())
                } else {
                    None
                }
            }
            KernelSpec::Erlang { alpha, beta, order } => {
                let k = *order;
                // ∫ t^{2k-2} e^{-2βt} dt = (2k-2)! / (2β)^{2k-1}
                let c = beta.powi(2 * k as i32) / factorial(k - 1).powi(2);
                let i = factorial(2 * k - 2) / (2.0 * beta).powi(2 * k as i32 - 1);
                Some(alpha.abs() * (c * i).sqrt())
            }
            KernelSpec::PiecewiseConstant { breakpoints, values } => Some(
                values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * v * (breakpoints[k + 1] - breakpoints[k]))
                    .sum::<f64>()
                    .sqrt(),
            ),
            KernelSpec::Zero => Some(0.0),
        }
    }

    /// sup_t |h(t)|.
    pub fn sup_abs(&self) -> f64 {
        self.decreasing_envelope(0.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            KernelSpec::Zero => true,
            KernelSpec::Exponential { alpha, .. } | KernelSpec::Erlang { alpha, .. } => *alpha == 0.0,
            KernelSpec::PiecewiseConstant { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// True when h jumps somewhere on (0, ∞).
    pub fn is_discontinuous(&self) -> bool {
        match self {
            KernelSpec::PiecewiseConstant { breakpoints, values } => {
                let n = values.len();
                let mut jumps = values[n - 1] != 0.0;
                jumps |= values.windows(2).any(|w| w[0] != w[1]);
                jumps |= breakpoints[0] > 0.0 && values[0] != 0.0;
                jumps
            }
            _ => false,
        }
    }
}

/// Law of the random weight w in H = w·h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WeightLaw {
    Deterministic { w: f64 },
    Uniform { a: f64, b: f64 },
    Bernoulli { p: f64, w: f64 },
}

impl WeightLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightLaw::Deterministic { w } => check_finite("weights.w", *w),
            WeightLaw::Uniform { a, b } => {
                check_finite("weights.a", *a)?;
                check_finite("weights.b", *b)?;
                if b < a {
                    return domain("uniform weights need a <= b");
                }
                Ok(())
            }
            WeightLaw::Bernoulli { p, w } => {
                check_finite("weights.w", *w)?;
                if !(0.0..=1.0).contains(p) {
                    return domain("bernoulli weights need p in [0, 1]");
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            WeightLaw::Deterministic { w } => *w,
            WeightLaw::Uniform { a, b } => 0.5 * (a + b),
            WeightLaw::Bernoulli { p, w } => p * w,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            WeightLaw::Deterministic { w } => w * w,
            WeightLaw::Uniform { a, b } => (a * a + a * b + b * b) / 3.0,
            WeightLaw::Bernoulli { p, w } => p * w * w,
        }
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment() - self.mean().powi(2)).max(0.0)
    }

    /// Almost-sure bound on |w|.
    pub fn w_max(&self) -> f64 {
        match self {
            WeightLaw::Deterministic { w } => w.abs(),
            WeightLaw::Uniform { a, b } => a.abs().max(b.abs()),
            WeightLaw::Bernoulli { p, w } => {
                if *p > 0.0 {
                    w.abs()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Deterministic { w } => *w,
            WeightLaw::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            WeightLaw::Bernoulli { p, w } => {
                if rng.random::<f64>() < *p {
                    *w
                } else {
                    0.0
                }
            }
        }
    }
}

/// H = w·base with w drawn i.i.d. per matrix entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomKernelLaw {
    #[serde(rename = "kernel")]
    pub base: KernelSpec,
    #[serde(rename = "weights")]
    pub weight_law: WeightLaw,
}

impl RandomKernelLaw {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.weight_law.validate()
    }

    /// Mean kernel m(t) = E[w]·h(t).
    #[inline]
    pub fn mean_kernel(&self, t: f64) -> f64 {
        self.weight_law.mean() * self.base.value(t)
    }

    /// Dominating envelope w_max·M_base(t).
    #[inline]
    pub fn envelope(&self, t: f64) -> f64 {
        self.weight_law.w_max() * self.base.envelope(t)
    }

    pub fn envelope_l1(&self) -> Option<f64> {
        self.base.l1_norm().map(|v| v * self.weight_law.w_max())
    }

    pub fn envelope_l2(&self) -> Option<f64> {
        self.base.l2_norm().map(|v| v * self.weight_law.w_max())
    }

    pub fn mean_kernel_l1(&self) -> Option<f64> {
        let m = self.weight_law.mean().abs();
        if m == 0.0 {
            Some(0.0)
        } else {
            self.base.l1_norm().map(|v| v * m)
        }
    }
}

/// (m, M) at time t.
pub fn kernel_mean_and_envelope(law: &RandomKernelLaw, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return domain(format!("kernel evaluated at negative time {t}"));
    }
    Ok((law.mean_kernel(t), law.envelope(t)))
}

/// A realized n×n interaction matrix, H_ij = weights[i·n + j]·base.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub n: usize,
    pub base: KernelSpec,
    pub weights: Vec<f64>,
}

impl InteractionMatrix {
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn eval(&self, i: usize, j: usize, t: f64) -> f64 {
        self.weight(i, j) * self.base.value(t)
    }
}

/// Draws the n×n matrix. Pure function of (law, n, seed).
pub fn sample_interaction_matrix(law: &RandomKernelLaw, n: usize, seed: u64) -> Result<InteractionMatrix> {
    if n == 0 {
        return domain("interaction matrix needs n >= 1");
    }
    law.validate()?;
    let mut rng = keyed_rng(&[seed, tag::MATRIX, n as u64]);
    let weights = (0..n * n).map(|_| law.weight_law.sample(&mut rng)).collect();
    Ok(InteractionMatrix { n, base: law.base.clone(), weights })
}

/// Φ in Ψ(s, x) = Φ(x)·1{s ≥ δ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phi", rename_all = "snake_case")]
pub enum Phi {
    /// max(0, μ + a·x).
    Affine { mu: f64, slope: f64 },
    /// min(cap, max(0, μ + a·x)).
    ClippedAffine { mu: f64, slope: f64, cap: f64 },
    /// scale / (1 + e^{−gain (x − center)}).
    Sigmoid { scale: f64, gain: f64, center: f64 },
    Constant { c: f64 },
}

impl Phi {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Phi::Affine { mu, slope } => (mu + slope * x).max(0.0),
            Phi::ClippedAffine { mu, slope, cap } => (mu + slope * x).max(0.0).min(*cap),
            Phi::Sigmoid { scale, gain, center } => scale / (1.0 + (-gain * (x - center)).exp()),
            Phi::Constant { c } => *c,
        }
    }

    pub fn lip(&self) -> f64 {
        match self {
            Phi::Affine { slope, .. } | Phi::ClippedAffine { slope, .. } => slope.abs(),
            Phi::Sigmoid { scale, gain, .. } => (scale * gain).abs() / 4.0,
            Phi::Constant { .. } => 0.0,
        }
    }

    /// sup_x Φ(x), or None when unbounded.
    pub fn sup(&self) -> Option<f64> {
        match self {
            Phi::Affine { mu, slope } => (*slope == 0.0).then(|| mu.max(0.0)),
            Phi::ClippedAffine { cap, .. } => Some(*cap),
            Phi::Sigmoid { scale, .. } => Some(*scale),
            Phi::Constant { c } => Some(*c),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Phi::Affine { mu, slope } => {
                check_finite("psi.mu", *mu)?;
                check_finite("psi.slope", *slope)
            }
            Phi::ClippedAffine { mu, slope, cap } => {
                check_finite("psi.mu", *mu)?;
                check_finite("psi.slope", *slope)?;
                check_finite("psi.cap", *cap)?;
                if *cap < 0.0 {
                    return domain("psi.cap must be >= 0");
                }
                Ok(())
            }
            Phi::Sigmoid { scale, gain, center } => {
                check_finite("psi.scale", *scale)?;
                check_finite("psi.gain", *gain)?;
                check_finite("psi.center", *center)?;
                if *scale < 0.0 {
                    return domain("psi.scale must be >= 0");
                }
                Ok(())
            }
            Phi::Constant { c } => {
                check_finite("psi.c", *c)?;
                if *c < 0.0 {
                    return domain("psi.c must be >= 0");
                }
                Ok(())
            }
        }
    }
}

/// Firing-rate map Ψ(s, x) = Φ(x)·1{s ≥ δ}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityFn {
    #[serde(flatten)]
    pub phi: Phi,
    #[serde(default, rename = "delta")]
    pub refractory_delta: f64,
}

impl IntensityFn {
    pub fn new(phi: Phi, refractory_delta: f64) -> Self {
        IntensityFn { phi, refractory_delta }
    }

    pub fn validate(&self) -> Result<()> {
        self.phi.validate()?;
        check_finite("psi.delta", self.refractory_delta)?;
        if self.refractory_delta < 0.0 {
            return domain("psi.delta must be >= 0");
        }
        Ok(())
    }

    /// Ψ(s, x) with a domain check on s.
    pub fn eval(&self, s: f64, x: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return domain(format!("intensity evaluated at negative age {s}"));
        }
        Ok(self.value(s, x))
    }

    #[inline]
    pub fn value(&self, s: f64, x: f64) -> f64 {
        if s < self.refractory_delta {
            0.0
        } else {
            self.phi.value(x)
        }
    }

    pub fn lip(&self) -> f64 {
        self.phi.lip()
    }

    /// ‖Ψ‖∞, or None when unbounded.
    pub fn sup_bound(&self) -> Option<f64> {
        self.phi.sup()
    }

    /// sup_s Ψ(s, 0).
    pub fn sup_at_zero(&self) -> f64 {
        self.phi.value(0.0)
    }

    pub fn age_independent(&self) -> bool {
        self.refractory_delta == 0.0
    }
}

/// Law of the initial age A; the past is the single point T₀ = −A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "age0", rename_all = "snake_case")]
pub enum InitialLaw {
    Exponential { rate: f64 },
    Uniform { max: f64 },
    Dirac { age: f64 },
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::Exponential { rate } => {
                check_finite("initial.rate", *rate)?;
                if *rate <= 0.0 {
                    return domain("initial.rate must be > 0");
                }
            }
            InitialLaw::Uniform { max } => {
                check_finite("initial.max", *max)?;
                if *max <= 0.0 {
                    return domain("initial.max must be > 0");
                }
            }
            InitialLaw::Dirac { age } => {
                check_finite("initial.age", *age)?;
                if *age <= 0.0 {
                    return domain("initial.age must be > 0");
                }
            }
        }
        Ok(())
    }

    pub fn has_density(&self) -> bool {
        !matches!(self, InitialLaw::Dirac { .. })
    }

    /// u_in(s); None for the Dirac law.
    pub fn density(&self, s: f64) -> Option<f64> {
        match self {
            InitialLaw::Exponential { rate } => Some(if s < 0.0 { 0.0 } else { rate * (-rate * s).exp() }),
            InitialLaw::Uniform { max } => Some(if (0.0..=*max).contains(&s) { 1.0 / max } else { 0.0 }),
            InitialLaw::Dirac { .. } => None,
        }
    }

    pub fn density_bound(&self) -> Option<f64> {
        match self {
            InitialLaw::Exponential { rate } => Some(*rate),
            InitialLaw::Uniform { max } => Some(1.0 / max),
            InitialLaw::Dirac { .. } => None,
        }
    }

    /// Almost-sure bound M_{T₀} on A, when one exists.
    pub fn age_bound(&self) -> Option<f64> {
        match self {
            InitialLaw::Exponential { .. } => None,
            InitialLaw::Uniform { max } => Some(*max),
            InitialLaw::Dirac { age } => Some(*age),
        }
    }

    /// Age beyond which the density is below [`DENSITY_CUTOFF`].
    pub fn support_bound(&self) -> f64 {
        match self {
            InitialLaw::Exponential { rate } => (rate / DENSITY_CUTOFF).ln().max(0.0) / rate,
            InitialLaw::Uniform { max } => *max,
            InitialLaw::Dirac { age } => *age,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            InitialLaw::Exponential { rate } => 1.0 / rate,
            InitialLaw::Uniform { max } => 0.5 * max,
            InitialLaw::Dirac { age } => *age,
        }
    }

    /// Draws A > 0.
    pub fn sample_age<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InitialLaw::Exponential { rate } => {
                let d = Exp::new(*rate).expect("validated rate");
                loop {
                    let a: f64 = d.sample(rng);
                    if a > 0.0 {
                        return a;
                    }
                }
            }
            InitialLaw::Uniform { max } => max * (1.0 - rng.random::<f64>()),
            InitialLaw::Dirac { age } => *age,
        }
    }

    /// E[g(A)] by closed form for the Dirac law and quadrature otherwise.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        match self {
            InitialLaw::Dirac { age } => g(*age),
            InitialLaw::Uniform { max } => simpson(|a| g(a) / max, 0.0, *max, QUAD_PANELS),
            InitialLaw::Exponential { rate } => {
                simpson(|a| g(a) * rate * (-rate * a).exp(), 0.0, self.support_bound(), QUAD_PANELS)
            }
        }
    }

    /// E[e^{−cA}].
    pub fn laplace(&self, c: f64) -> f64 {
        match self {
            InitialLaw::Exponential { rate } => rate / (rate + c),
            InitialLaw::Uniform { max } => {
                let x = c * max;
                if x.abs() < 1e-12 {
                    1.0
                } else {
                    -(-x).exp_m1() / x
                }
            }
            InitialLaw::Dirac { age } => (-c * age).exp(),
        }
    }
}

/// Influence of the past on the positive time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PastInfluenceLaw {
    /// F_ij(t) = H_ij(t − T₀ʲ).
    HawkesPast,
    /// F_ij(t) = H_ij(t − τ), τ ≤ 0.
    CommonStimulus { tau: f64 },
    Zero,
}

impl PastInfluenceLaw {
    pub fn validate(&self) -> Result<()> {
        if let PastInfluenceLaw::CommonStimulus { tau } = self {
            check_finite("past.tau", *tau)?;
            if *tau > 0.0 {
                return domain("past.tau must be <= 0");
            }
        }
        Ok(())
    }
}

fn default_true() -> bool {
    true
}

/// The full model specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    #[serde(flatten)]
    pub interaction: RandomKernelLaw,
    pub psi: IntensityFn,
    pub initial: InitialLaw,
    pub past: PastInfluenceLaw,
    /// Keep H_ii; when false the diagonal weights are zeroed.
    #[serde(default = "default_true")]
    pub self_interaction: bool,
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        self.interaction.validate()?;
        self.psi.validate()?;
        self.initial.validate()?;
        self.past.validate()
    }

    #[inline]
    pub fn mean_kernel(&self, t: f64) -> f64 {
        self.interaction.mean_kernel(t)
    }

    /// E_A[h(t + A)^p], p ∈ {1, 2}.
    fn past_kernel_moment(&self, t: f64, p: i32) -> f64 {
        let base = &self.interaction.base;
        match base {
            KernelSpec::Zero => 0.0,
            KernelSpec::Exponential { alpha, beta } => {
                let c = p as f64 * beta;
                alpha.powi(p) * (-c * t).exp() * self.initial.laplace(c)
            }
            _ => self.initial.expect(|a| base.value(t + a).powi(p)),
        }
    }

    /// m_F(t) = E[F_ij(t)].
    pub fn past_mean(&self, t: f64) -> f64 {
        let w = &self.interaction.weight_law;
        match &self.past {
            PastInfluenceLaw::Zero => 0.0,
            PastInfluenceLaw::CommonStimulus { tau } => w.mean() * self.interaction.base.value(t - tau),
            PastInfluenceLaw::HawkesPast => w.mean() * self.past_kernel_moment(t, 1),
        }
    }

    /// V_F(t) = Var(F_ij(t)).
    pub fn past_variance(&self, t: f64) -> f64 {
        let w = &self.interaction.weight_law;
        match &self.past {
            PastInfluenceLaw::Zero => 0.0,
            PastInfluenceLaw::CommonStimulus { tau } => w.variance() * self.interaction.base.value(t - tau).powi(2),
            PastInfluenceLaw::HawkesPast => {
                let m1 = self.past_kernel_moment(t, 1);
                let m2 = self.past_kernel_moment(t, 2);
                (w.second_moment() * m2 - (w.mean() * m1).powi(2)).max(0.0)
            }
        }
    }

    /// Location of the virtual past point of particle j (weight w_ij), if any.
    pub fn virtual_point(&self, t0_j: f64) -> Option<f64> {
        match &self.past {
            PastInfluenceLaw::Zero => None,
            PastInfluenceLaw::HawkesPast => Some(t0_j),
            PastInfluenceLaw::CommonStimulus { tau } => Some(*tau),
        }
    }

    /// Realized interaction matrix with the self-interaction flag applied.
    pub fn sample_matrix(&self, n: usize, seed: u64) -> Result<InteractionMatrix> {
        let mut m = sample_interaction_matrix(&self.interaction, n, seed)?;
        if !self.self_interaction {
            for i in 0..n {
                m.weights[i * n + i] = 0.0;
            }
        }
        Ok(m)
    }
}

/// Draws the single past point T₀ = −A of particle `particle`.
pub fn sample_initial_past(law: &InitialLaw, seed: u64, particle: u64) -> Result<crate::particle::PointPath> {
    law.validate()?;
    let mut rng = keyed_rng(&[seed, tag::PAST, particle]);
    let a = law.sample_age(&mut rng);
    Ok(crate::particle::PointPath::with_past(vec![-a]))
}
