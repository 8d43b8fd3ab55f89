//! Property-based checks of the geometric and algorithmic invariants.

use proptest::prelude::*;

use anytime_core::conversion::{anytime_identity_audit, run, AnytimeState, Feedback, Weights};
use anytime_core::geometry::{pairing, DualVector, FeasibleSet, MirrorMap, Norm, Vector};
use anytime_core::learners::{ftrl_step, smd_step, MirrorDescent, StepSchedule};
use anytime_core::objectives::{solve_reference, Objective};
use anytime_core::oracles::{NoiseFamily, NoiseSpec, SyntheticOracle};
use anytime_core::robust::{process, Anchor, ThresholdSchedule};

fn coords(dim: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, dim)
}

fn simplex_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, dim).prop_map(|v| {
        let total: f64 = v.iter().sum();
        v.iter().map(|x| x / total).collect()
    })
}

fn vec_of(x: &[f64]) -> Vector {
    Vector::new(x.to_vec()).unwrap()
}

fn dual_of(x: &[f64]) -> DualVector {
    DualVector::new(x.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn ball_projection_is_feasible_idempotent_and_nonexpansive(
        (p, q) in (1usize..6).prop_flat_map(|d| (coords(d, -5.0, 5.0), coords(d, -5.0, 5.0))),
        radius in 0.1f64..3.0,
    ) {
        let set = FeasibleSet::centered_ball(p.len(), radius).unwrap();
        let (pp, pq) = (set.project(&vec_of(&p)).unwrap(), set.project(&vec_of(&q)).unwrap());
        prop_assert!(set.contains(&pp));
        prop_assert!(set.project(&pp).unwrap().sub(&pp).unwrap().l2_norm() <= 1e-12);
        let dist = vec_of(&p).sub(&vec_of(&q)).unwrap().l2_norm();
        prop_assert!(pp.sub(&pq).unwrap().l2_norm() <= dist + 1e-12);
    }

    #[test]
    fn simplex_projection_lands_on_simplex(p in (1usize..7).prop_flat_map(|d| coords(d, -3.0, 3.0))) {
        let set = FeasibleSet::simplex(p.len()).unwrap();
        let h = set.project(&vec_of(&p)).unwrap();
        prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(h.iter().all(|&x| x >= 0.0));
        prop_assert!(set.contains(&h));
    }

    #[test]
    fn pairing_obeys_cauchy_schwarz_in_each_norm(
        (g, h) in (1usize..6).prop_flat_map(|d| (coords(d, -4.0, 4.0), coords(d, -4.0, 4.0))),
    ) {
        let (g, h) = (dual_of(&g), vec_of(&h));
        let inner = pairing(&g, &h).unwrap().abs();
        for norm in [Norm::L2, Norm::L1] {
            prop_assert!(inner <= g.dual_norm(norm) * h.norm(norm) * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn entropy_three_point_identity(
        (x, y, z) in (2usize..6).prop_flat_map(|d| (simplex_point(d), simplex_point(d), simplex_point(d))),
    ) {
        let map = MirrorMap::NegativeEntropy;
        let (x, y, z) = (vec_of(&x), vec_of(&y), vec_of(&z));
        let cross = pairing(
            &map.gradient(&y).unwrap().sub(&map.gradient(&z).unwrap()).unwrap(),
            &x.sub(&y).unwrap(),
        )
        .unwrap();
        let lhs = map.bregman(&x, &z).unwrap();
        let rhs = map.bregman(&x, &y).unwrap() + map.bregman(&y, &z).unwrap() + cross;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn entropy_bregman_dominates_half_l1_squared(
        (x, y) in (2usize..6).prop_flat_map(|d| (simplex_point(d), simplex_point(d))),
    ) {
        let (x, y) = (vec_of(&x), vec_of(&y));
        let l1 = x.sub(&y).unwrap().l1_norm();
        prop_assert!(MirrorMap::NegativeEntropy.bregman(&x, &y).unwrap() >= 0.5 * l1 * l1 - 1e-12);
    }

    #[test]
    fn quadratic_is_convex_and_smooth(
        (diag, b, u, v) in (1usize..5).prop_flat_map(|d| (
            coords(d, 0.0, 3.0),
            coords(d, -2.0, 2.0),
            coords(d, -1.0, 1.0),
            coords(d, -1.0, 1.0),
        )),
    ) {
        let set = FeasibleSet::centered_ball(diag.len(), 10.0).unwrap();
        let obj = Objective::diagonal_quadratic(&diag, vec_of(&b), set).unwrap();
        let (u, v) = (vec_of(&u), vec_of(&v));
        let gap = obj.bregman(&u, &v).unwrap();
        let dist = u.sub(&v).unwrap().l2_norm();
        prop_assert!(gap >= -1e-12);
        prop_assert!(gap <= 0.5 * obj.smoothness() * dist * dist + 1e-12);
    }

    #[test]
    fn processed_gradient_stays_within_threshold_of_anchor(
        (g, anchor_g) in (1usize..6).prop_flat_map(|d| (coords(d, -50.0, 50.0), coords(d, -2.0, 2.0))),
        c in 0.1f64..20.0,
    ) {
        let dim = g.len();
        let anchor = Anchor::new(Vector::zeros(dim), dual_of(&anchor_g), 0.0, 0.05).unwrap();
        let (out, truncated) = process(&dual_of(&g), &anchor, c, Norm::L2).unwrap();
        let dist = out.sub(&anchor.g_tilde).unwrap().dual_norm(Norm::L2);
        prop_assert!(dist <= c + 1e-12);
        prop_assert_eq!(truncated, dual_of(&g).sub(&anchor.g_tilde).unwrap().dual_norm(Norm::L2) > c);
    }

    #[test]
    fn smooth_threshold_is_lipschitz_in_the_query_point(
        (a, b) in (1usize..5).prop_flat_map(|d| (coords(d, -1.0, 1.0), coords(d, -1.0, 1.0))),
        lambda in 0.1f64..5.0,
        offset in 0.1f64..5.0,
    ) {
        let dim = a.len();
        let anchor = Anchor::new(Vector::zeros(dim), DualVector::zeros(dim), 0.3, 0.05).unwrap();
        let schedule = ThresholdSchedule::smooth_theory(0.3, lambda, offset).unwrap();
        let (a, b) = (vec_of(&a), vec_of(&b));
        let ca = schedule.threshold_at(&a, &anchor, Norm::L2).unwrap();
        let cb = schedule.threshold_at(&b, &anchor, Norm::L2).unwrap();
        prop_assert!((ca - cb).abs() <= lambda * a.sub(&b).unwrap().l2_norm() + 1e-12);
        prop_assert!(ca >= offset);
    }

    #[test]
    fn weighted_average_stays_in_convex_hull(
        points in prop::collection::vec(coords(3, -1.0, 1.0), 1..20),
        weights in prop::collection::vec(0.01f64..5.0, 20),
    ) {
        let mut state = AnytimeState::new(vec_of(&points[0]), weights[0]).unwrap();
        for (p, &w) in points.iter().zip(&weights).skip(1) {
            state.weighting_update(vec_of(p), w).unwrap();
        }
        let total: f64 = weights[..points.len()].iter().sum();
        for i in 0..3 {
            let direct: f64 = points.iter().zip(&weights).map(|(p, w)| w * p[i]).sum::<f64>() / total;
            prop_assert!((state.h_bar()[i] - direct).abs() <= 1e-12);
            let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(state.h_bar()[i] >= lo - 1e-12 && state.h_bar()[i] <= hi + 1e-12);
        }
    }

    #[test]
    fn mirror_steps_stay_feasible(
        (h, g) in (2usize..6).prop_flat_map(|d| (simplex_point(d), coords(d, -100.0, 100.0))),
        beta in 0.001f64..10.0,
    ) {
        let set = FeasibleSet::simplex(h.len()).unwrap();
        let step = smd_step(MirrorMap::NegativeEntropy, &set, &vec_of(&h), beta, &dual_of(&g)).unwrap();
        prop_assert!(step.next.iter().all(|x| x.is_finite() && *x > 0.0));
        prop_assert!((step.next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ftrl_step_minimises_its_objective_on_the_ball(
        theta in (1usize..5).prop_flat_map(|d| coords(d, -10.0, 10.0)),
        strength in 0.1f64..5.0,
        probe in (0usize..1000),
    ) {
        let set = FeasibleSet::centered_ball(theta.len(), 1.0).unwrap();
        let h = ftrl_step(&set, strength, &dual_of(&theta)).unwrap();
        let f = |x: &Vector| 0.5 * strength * x.l2_norm().powi(2) + pairing(&dual_of(&theta), x).unwrap();
        // compare against a feasible point derived from the probe index
        let angle = probe as f64 * 0.0123;
        let mut other = vec![0.0; theta.len()];
        other[0] = angle.cos() * 0.9;
        if theta.len() > 1 {
            other[1] = angle.sin() * 0.9;
        }
        prop_assert!(f(&h) <= f(&vec_of(&other)) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn anytime_identity_holds_for_random_runs(
        seed in any::<u64>(),
        weights in prop::collection::vec(0.05f64..2.0, 1..30),
        beta in 0.05f64..1.0,
    ) {
        let set = FeasibleSet::centered_ball(3, 1.0).unwrap();
        let obj = Objective::diagonal_quadratic(&[1.0, 0.4, 0.1], vec_of(&[0.9, -0.6, 0.5]), set).unwrap();
        let h_star = solve_reference(&obj, 1e-10).unwrap().h_star;
        let mut learner = MirrorDescent::sgd(obj.feasible().clone(), StepSchedule::constant(beta).unwrap(), Vector::zeros(3)).unwrap();
        let noise = NoiseSpec::new(NoiseFamily::StudentT { dof: 3.0 }, 0.5).unwrap();
        let mut oracle = SyntheticOracle::new(noise, seed).unwrap();
        let horizon = weights.len();
        let trace = run(&obj, &mut oracle, &mut learner, Feedback::Raw, Weights::explicit(weights).unwrap(), horizon).unwrap();
        let audit = anytime_identity_audit(&trace, &obj, &h_star).unwrap();
        prop_assert!(audit.identity_gap() <= 1e-9 * (1.0 + audit.lhs.abs()));
        prop_assert!((audit.decomposition - audit.rhs).abs() <= 1e-9 * (1.0 + audit.rhs.abs()));
        prop_assert!(obj.feasible().contains(&trace.output));
    }
}
