use adrhp::analysis::{delta_count, fit_rate, w1_empirical_vs_density};
use adrhp::model::{sample_interaction_matrix, IntensityFn, KernelSpec, Phi, RandomKernelLaw, WeightLaw};
use adrhp::particle::PointPath;
use adrhp::thinning::GrainStream;
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (-3.0..3.0f64, 0.0..5.0f64).prop_map(|(alpha, beta)| KernelSpec::Exponential { alpha, beta }),
        (-3.0..3.0f64, 0.1..5.0f64, 1u32..8).prop_map(|(alpha, beta, order)| KernelSpec::Erlang { alpha, beta, order }),
        prop::collection::vec((0.05..2.0f64, -2.0..2.0f64), 1..6).prop_map(|steps| {
            let mut breakpoints = vec![0.0];
            let mut values = Vec::new();
            for (w, v) in steps {
                breakpoints.push(breakpoints.last().unwrap() + w);
                values.push(v);
            }
            KernelSpec::PiecewiseConstant { breakpoints, values }
        }),
        Just(KernelSpec::Zero),
    ]
}

fn phi() -> impl Strategy<Value = Phi> {
    prop_oneof![
        (0.0..3.0f64, 0.0..3.0f64).prop_map(|(mu, slope)| Phi::Affine { mu, slope }),
        (0.0..3.0f64, 0.0..3.0f64, 3.0..6.0f64).prop_map(|(mu, slope, cap)| Phi::ClippedAffine { mu, slope, cap }),
        (0.1..4.0f64, 0.0..3.0f64, -2.0..2.0f64).prop_map(|(scale, gain, center)| Phi::Sigmoid { scale, gain, center }),
        (0.0..4.0f64).prop_map(|c| Phi::Constant { c }),
    ]
}

fn path(events: Vec<f64>) -> PointPath {
    let mut e: Vec<f64> = events;
    e.sort_by(f64::total_cmp);
    e.dedup();
    PointPath::new(vec![-1.0], e, 10.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_below_envelope(k in kernel(), ts in prop::collection::vec(0.0..10.0f64, 1000)) {
        for t in ts {
            prop_assert!(k.value(t).abs() <= k.envelope(t) + 1e-12);
            prop_assert!(k.envelope(t) <= k.decreasing_envelope(t) + 1e-12);
        }
    }

    #[test]
    fn intensity_lipschitz_and_bounded(
        p in phi(),
        delta in 0.0..1.0f64,
        pts in prop::collection::vec((0.0..5.0f64, -10.0..10.0f64, -10.0..10.0f64), 1000),
    ) {
        let psi = IntensityFn::new(p, delta);
        for (s, x, y) in pts {
            let (a, b) = (psi.value(s, x), psi.value(s, y));
            prop_assert!((a - b).abs() <= psi.lip() * (x - y).abs() + 1e-12);
            prop_assert!(a >= 0.0);
            if let Some(sup) = psi.sup_bound() {
                prop_assert!(a <= sup + 1e-12);
            }
        }
    }

    #[test]
    fn refractory_is_exactly_zero(p in phi(), delta in 0.01..1.0f64, frac in 0.0..1.0f64, x in -10.0..10.0f64) {
        let psi = IntensityFn::new(p, delta);
        prop_assert_eq!(psi.value(frac * delta * 0.999_999, x), 0.0);
    }

    #[test]
    fn band_consistency(seed in any::<u64>(), id in 0u64..100, l1 in 0.1..3.0f64, extra in 0.0..4.0f64, t0 in 0.0..5.0f64) {
        let l2 = l1 + extra;
        let mut s = GrainStream::new(seed, id, 10.0);
        let high = s.grains_in(t0, 10.0, l2).unwrap();
        let mut fresh = GrainStream::new(seed, id, 10.0);
        let low = fresh.grains_in(t0, 10.0, l1).unwrap();
        let filtered: Vec<_> = high.into_iter().filter(|g| g.x <= l1).collect();
        prop_assert_eq!(low, filtered);
    }

    #[test]
    fn delta_count_monotone_in_horizon(
        a in prop::collection::vec(0.001..10.0f64, 0..30),
        b in prop::collection::vec(0.001..10.0f64, 0..30),
        t1 in 0.0..10.0f64,
        dt in 0.0..10.0f64,
    ) {
        let (pa, pb) = (path(a), path(b));
        let t2 = (t1 + dt).min(10.0);
        prop_assert!(delta_count(&pa, &pb, t1) <= delta_count(&pa, &pb, t2));
        prop_assert_eq!(delta_count(&pa, &pa, t2), 0);
        prop_assert_eq!(delta_count(&pa, &pb, t2), delta_count(&pb, &pa, t2));
    }

    #[test]
    fn fit_rate_exact_on_power_laws(c in 0.01..100.0f64, p in -2.0..2.0f64, k in 3usize..8) {
        let ns: Vec<f64> = (0..k).map(|i| (8usize << i) as f64).collect();
        let v: Vec<f64> = ns.iter().map(|n| c * n.powf(p)).collect();
        let f = fit_rate(&ns, &v).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-10);
        prop_assert!(f.residual < 1e-12);
    }

    #[test]
    fn interaction_matrix_is_pure(seed in any::<u64>(), n in 1usize..20, a in -1.0..0.0f64, w in 0.0..1.0f64) {
        let law = RandomKernelLaw {
            base: KernelSpec::Exponential { alpha: 1.0, beta: 1.0 },
            weight_law: WeightLaw::Uniform { a, b: a + w + 1e-3 },
        };
        let m1 = sample_interaction_matrix(&law, n, seed).unwrap();
        let m2 = sample_interaction_matrix(&law, n, seed).unwrap();
        prop_assert_eq!(m1, m2);
    }

    #[test]
    fn w1_shift_of_a_point_mass(a in 0.0..2.0f64, shift in 0.0..3.0f64) {
        // Density of the uniform law on [a, a+1] against the point mass at a+1+shift.
        let dx = 1e-3;
        let nodes = 6001;
        let dens: Vec<f64> = (0..nodes)
            .map(|j| {
                let s = j as f64 * dx;
                if s >= a && s <= a + 1.0 { 1.0 } else { 0.0 }
            })
            .collect();
        let w = w1_empirical_vs_density(&[a + 1.0 + shift], &dens, dx).unwrap();
        prop_assert!((w - (0.5 + shift)).abs() < 5e-3, "w1 {w}");
    }
}
