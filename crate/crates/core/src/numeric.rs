//! Small quadrature helpers shared by the model and analysis code.

/// Composite Simpson rule on `[a, b]` with `panels` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = panels.max(2) + panels % 2;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Trapezoid rule for samples on a uniform grid with spacing `dx`.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dx * (0.5 * values[0] + values[1..n - 1].iter().sum::<f64>() + 0.5 * values[n - 1]),
    }
}

/// Regularized lower incomplete gamma P(k, x) for integer k ≥ 1.
pub fn erlang_cdf(k: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..k {
        term *= x / m as f64;
        sum += term;
    }
    (1.0 - (-x).exp() * sum).clamp(0.0, 1.0)
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, m| acc * m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 2);
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_linear() {
        let v: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        assert!((trapezoid(&v, 0.1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn erlang_cdf_order_one_is_exponential() {
        for x in [0.1, 1.0, 3.0] {
            assert!((erlang_cdf(1, x) - (1.0 - (-x as f64).exp())).abs() < 1e-14);
        }
        // P(2, x) = 1 - e^{-x}(1 + x)
        let x: f64 = 1.7;
        assert!((erlang_cdf(2, x) - (1.0 - (-x).exp() * (1.0 + x))).abs() < 1e-14);
    }
}
