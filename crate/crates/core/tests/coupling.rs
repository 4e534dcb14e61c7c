use adrhp::analysis::{delta_count, sup_age_gap, CouplingHarness, HarnessOptions, ReplicaBudget};
use adrhp::model::{InitialLaw, IntensityFn, KernelSpec, Model, PastInfluenceLaw, Phi, RandomKernelLaw, WeightLaw};
use adrhp::particle::{contained_in, simulate_adrhp, simulate_dominating_linear, SimOptions};
use proptest::prelude::*;

fn model(phi: Phi, delta: f64, base: KernelSpec, weights: WeightLaw, past: PastInfluenceLaw) -> Model {
    Model {
        interaction: RandomKernelLaw { base, weight_law: weights },
        psi: IntensityFn::new(phi, delta),
        initial: InitialLaw::Exponential { rate: 1.0 },
        past,
        self_interaction: true,
    }
}

fn refractory() -> Model {
    model(
        Phi::ClippedAffine { mu: 0.5, slope: 1.0, cap: 2.0 },
        0.1,
        KernelSpec::Exponential { alpha: 0.5, beta: 2.0 },
        WeightLaw::Deterministic { w: 1.0 },
        PastInfluenceLaw::Zero,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_lip_couples_exactly(seed in any::<u64>(), n in 1usize..40, c in 0.1..3.0f64, delta in 0.0..0.3f64) {
        let m = model(
            Phi::Constant { c },
            delta,
            KernelSpec::Erlang { alpha: 1.0, beta: 1.0, order: 3 },
            WeightLaw::Uniform { a: -1.0, b: 1.0 },
            PastInfluenceLaw::CommonStimulus { tau: -0.5 },
        );
        let h = CouplingHarness::new(&m, 4.0, HarnessOptions { dx: 1e-2, ..Default::default() }).unwrap();
        let run = h.build(n, seed).unwrap();
        for (a, b) in run.particles.paths.iter().zip(&run.limits) {
            prop_assert_eq!(delta_count(a, b, 4.0), 0);
            prop_assert_eq!(sup_age_gap(a, b, 4.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn dominating_process_contains_every_event(seed in any::<u64>(), n in 1usize..24, a in -1.0..0.0f64) {
        let m = model(
            Phi::Sigmoid { scale: 3.0, gain: 2.0, center: 0.5 },
            0.05,
            KernelSpec::PiecewiseConstant { breakpoints: vec![0.0, 0.5, 2.0], values: vec![0.8, -0.3] },
            WeightLaw::Uniform { a, b: 1.0 },
            PastInfluenceLaw::HawkesPast,
        );
        let inner = simulate_adrhp(&m, n, 4.0, seed, SimOptions::default()).unwrap();
        let outer = simulate_dominating_linear(&m, n, 4.0, seed, SimOptions::default()).unwrap();
        prop_assert!(contained_in(&inner, &outer).is_empty());
    }
}

#[test]
fn differing_paths_are_bounded_by_mean_delta() {
    let h = CouplingHarness::new(&refractory(), 5.0, HarnessOptions::default()).unwrap();
    let rep = h.couple(32, 64, 3).unwrap();
    for r in &rep.rows {
        assert!(r.differ_fraction <= r.delta_n + 1e-15, "{r:?}");
    }
    let s = &rep.per_n[0];
    assert!(s.differ_mean <= s.delta_mean);
}

#[test]
fn linear_regime_respects_the_bound() {
    let m = model(
        Phi::Affine { mu: 1.0, slope: 1.0 },
        0.0,
        KernelSpec::Exponential { alpha: 1.0, beta: 4.0 },
        WeightLaw::Deterministic { w: 1.0 },
        PastInfluenceLaw::Zero,
    );
    let h = CouplingHarness::new(&m, 5.0, HarnessOptions::default()).unwrap();
    let rep = h.sweep(&[16, 64], 8, &ReplicaBudget { min: 32, max: 32, target_rel_se: 0.1 }).unwrap();
    for s in &rep.per_n {
        assert_eq!(s.bound_ok, Some(true), "{s:?}");
    }
}

#[test]
fn reports_are_deterministic() {
    let h = CouplingHarness::new(
        &refractory(),
        5.0,
        HarnessOptions { w1_times: vec![2.5], ..Default::default() },
    )
    .unwrap();
    let a = h.couple(16, 12, 5).unwrap();
    let b = h.couple(16, 12, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows[0].w1.len(), 1);
}

#[test]
fn small_budgets_are_flagged() {
    let h = CouplingHarness::new(&refractory(), 5.0, HarnessOptions::default()).unwrap();
    let rep = h.sweep(&[8, 16, 32], 1, &ReplicaBudget { min: 2, max: 2, target_rel_se: 0.01 }).unwrap();
    assert!(rep.underpowered);
    assert!(rep.per_n.iter().all(|s| !s.powered));
}

#[test]
fn age_gap_needs_a_shared_past() {
    let h = CouplingHarness::new(&refractory(), 5.0, HarnessOptions::default()).unwrap();
    let a = h.build(4, 1).unwrap();
    let b = h.build(4, 2).unwrap();
    assert!(sup_age_gap(&a.particles.paths[0], &b.limits[0], 5.0).is_err());
}
