//! Randomized identities for fidelity, negativity, speed limits and
//! dynamics; 1000 cases each.

mod common;

use common::*;
use medqsl_core::dynamics::{search, UnitaryPropagator};
use medqsl_core::hamiltonian::{
    direct_optimal, energy_moments, ground_ket, resource_equality_scale, Hamiltonian,
};
use medqsl_core::linalg::hermitian_eigenvalues;
use medqsl_core::qsl::{di_bound, unified_bound};
use medqsl_core::randgen::{
    haar_pure_on, random_hermitian, random_mediated_hamiltonian, RngStream,
};
use medqsl_core::state::{
    bures_angle, negativity, negativity_plan_pair, partial_trace, uhlmann_fidelity,
};
use medqsl_core::{Bipartition, DensityState, Error};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(1000)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn fidelity_is_multiplicative(seed: u64, da in 2usize..4, db in 2usize..4) {
        let mut rng = RngStream::new(seed, 0);
        let (la, lb) = (layout(&[("A", da)]), layout(&[("B", db)]));
        let r1 = any_state(la.clone(), &mut rng);
        let s1 = any_state(la, &mut rng);
        let r2 = any_state(lb.clone(), &mut rng);
        let s2 = any_state(lb, &mut rng);
        let joint = uhlmann_fidelity(&r1.tensor(&r2).unwrap(), &s1.tensor(&s2).unwrap()).unwrap();
        let product = uhlmann_fidelity(&r1, &s1).unwrap() * uhlmann_fidelity(&r2, &s2).unwrap();
        prop_assert!((joint - product).abs() <= 1e-9, "{joint} vs {product}");
    }

    #[test]
    fn fidelity_is_monotone_under_partial_trace(seed: u64) {
        let mut rng = RngStream::new(seed, 1);
        let l = layout(&[("A", 2), ("B", 2), ("C", 2)]);
        let rho = any_state(l.clone(), &mut rng);
        let sigma = any_state(l, &mut rng);
        let full = uhlmann_fidelity(&rho, &sigma).unwrap();
        let reduced = uhlmann_fidelity(
            &partial_trace(&rho, &["A", "B"]).unwrap(),
            &partial_trace(&sigma, &["A", "B"]).unwrap(),
        )
        .unwrap();
        prop_assert!(full <= reduced + 1e-10, "{full} > {reduced}");
    }

    #[test]
    fn bures_angle_triangle_inequality(seed: u64, dim in 2usize..5) {
        let mut rng = RngStream::new(seed, 2);
        let l = layout(&[("S", dim)]);
        let a = any_state(l.clone(), &mut rng);
        let b = any_state(l.clone(), &mut rng);
        let c = any_state(l, &mut rng);
        let direct = bures_angle(&a, &c).unwrap();
        let via = bures_angle(&a, &b).unwrap() + bures_angle(&b, &c).unwrap();
        prop_assert!(direct <= via + 1e-9, "{direct} > {via}");
    }

    #[test]
    fn negativity_vanishes_on_products(seed: u64, da in 2usize..4, db in 2usize..4) {
        let mut rng = RngStream::new(seed, 3);
        let s = any_state(layout(&[("A", da)]), &mut rng)
            .tensor(&any_state(layout(&[("B", db)]), &mut rng))
            .unwrap();
        prop_assert!(negativity(&s, &Bipartition::pair("A", "B")).unwrap() <= 1e-10);
    }

    #[test]
    fn negativity_is_local_unitary_invariant(seed: u64, da in 2usize..4, db in 2usize..4) {
        let mut rng = RngStream::new(seed, 4);
        let s = any_state(layout(&[("A", da), ("B", db)]), &mut rng);
        let u = local_unitary(da, db, &mut rng);
        let p = Bipartition::pair("A", "B");
        let before = negativity(&s, &p).unwrap();
        let after = negativity(&conjugate(&s, &u), &p).unwrap();
        prop_assert!((before - after).abs() <= 1e-10, "{before} vs {after}");
    }

    #[test]
    fn negativity_matches_schmidt_formula(seed: u64, d in 2usize..5) {
        let mut rng = RngStream::new(seed, 5);
        let psi = haar_pure_on(layout(&[("A", d), ("B", d)]), &mut rng).unwrap();
        // squared Schmidt coefficients are the marginal's eigenvalues
        let marginal = partial_trace(&psi, &["A"]).unwrap();
        let sum: f64 = marginal.eigenvalues().iter().map(|p| p.max(0.0).sqrt()).sum();
        let schmidt = (sum * sum - 1.0) / 2.0;
        let n = negativity(&psi, &Bipartition::pair("A", "B")).unwrap();
        prop_assert!((n - schmidt).abs() <= 1e-10, "{n} vs {schmidt}");
    }

    #[test]
    fn bures_angle_stays_below_elapsed_time(seed: u64) {
        // Θ ≤ ΔM·T holds for every trajectory; after normalization it reads
        // Θ ≤ T whenever ΔM is the smaller moment.
        let mut rng = RngStream::new(seed, 6);
        let h = random_mediated_hamiltonian(2, 2, 2, &mut rng).unwrap();
        let s0 = any_state(h.layout().clone(), &mut rng);
        let (h, _) = match resource_equality_scale(&h, &s0) {
            Ok(pair) => pair,
            Err(Error::StationaryState { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let m = energy_moments(&h, &s0).unwrap();
        let u = UnitaryPropagator::new(&h, &s0).unwrap();
        for i in 0..=40 {
            let t = i as f64 * 0.05;
            let theta = bures_angle(&s0, &u.state_at(t)).unwrap();
            prop_assert!(theta <= m.std_dev * t + 1e-8, "Θ={theta} at T={t}, ΔM={}", m.std_dev);
            if m.std_dev <= m.mean_above_ground {
                prop_assert!(theta <= t + 1e-8, "Θ={theta} at T={t}");
            }
        }
    }

    #[test]
    fn optimal_direct_dynamics_is_a_geodesic(d in 2usize..6, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let h = direct_optimal(d).unwrap();
        let u = UnitaryPropagator::new(&h, &ground_ket(h.layout().clone())).unwrap();
        let di = di_bound(d).unwrap();
        let (t1, t2) = (a.min(b) * di, a.max(b) * di);
        let theta = bures_angle(&u.state_at(t1), &u.state_at(t2)).unwrap();
        prop_assert!((theta - (t2 - t1)).abs() <= 1e-9, "Θ={theta}, ΔT={}", t2 - t1);
    }

    #[test]
    fn unitary_evolution_preserves_spectrum(seed: u64, t in 0.0f64..10.0) {
        let mut rng = RngStream::new(seed, 7);
        let h = random_mediated_hamiltonian(2, 2, 2, &mut rng).unwrap();
        let s0 = medqsl_core::randgen::random_density_on(h.layout().clone(), &mut rng).unwrap();
        let st = UnitaryPropagator::new(&h, &s0).unwrap().state_at(t);
        let before = hermitian_eigenvalues(s0.matrix()).unwrap();
        let after = hermitian_eigenvalues(st.matrix()).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn no_dynamics_beats_the_direct_bound(seed: u64) {
        let mut rng = RngStream::new(seed, 8);
        let l = layout(&[("A", 2), ("B", 2)]);
        let m = random_hermitian(4, &mut rng).unwrap();
        let h = Hamiltonian::new(l.clone(), m, "random").unwrap();
        let s0 = haar_pure_on(layout(&[("A", 2)]), &mut rng)
            .unwrap()
            .tensor(&haar_pure_on(layout(&[("B", 2)]), &mut rng).unwrap())
            .unwrap();
        let (h, _) = resource_equality_scale(&h, &s0).unwrap();
        let u = UnitaryPropagator::new(&h, &s0).unwrap();
        let (trace, plan) = negativity_plan_pair(&l, &Bipartition::pair("A", "B")).unwrap();
        let horizon = di_bound(2).unwrap() - 1e-4;
        let hit = search::first_crossing(
            |t| plan.negativity(&u.reduced_at(t, &trace)),
            0.0,
            horizon,
            1e-3,
            0.5 - 1e-6,
        );
        prop_assert!(hit.is_none(), "{hit:?}");
    }

    #[test]
    fn unified_bound_is_angle_under_resource_equality(seed: u64) {
        let mut rng = RngStream::new(seed, 9);
        let l = layout(&[("A", 2), ("B", 3)]);
        let s0 = any_state(l.clone(), &mut rng);
        let target = any_state(l.clone(), &mut rng);
        let h = Hamiltonian::new(l, random_hermitian(6, &mut rng).unwrap(), "random").unwrap();
        let raw = unified_bound(&s0, &target, &h).unwrap();
        prop_assert!(raw.bound >= 0.0);
        let (scaled, k) = resource_equality_scale(&h, &s0).unwrap();
        let report = unified_bound(&s0, &target, &scaled).unwrap();
        prop_assert!((report.bound - report.theta).abs() <= 1e-10);
        prop_assert!((raw.bound - k * report.theta).abs() <= 1e-9 * raw.bound.max(1.0));
    }

    #[test]
    fn resource_scaling_is_idempotent_and_covariant(seed: u64, k in 0.1f64..10.0) {
        let mut rng = RngStream::new(seed, 10);
        let h = random_mediated_hamiltonian(2, 2, 2, &mut rng).unwrap();
        let s0 = any_state(h.layout().clone(), &mut rng);
        let (scaled, _) = resource_equality_scale(&h, &s0).unwrap();
        let (_, k2) = resource_equality_scale(&scaled, &s0).unwrap();
        prop_assert!((k2 - 1.0).abs() <= 1e-12);
        let m = energy_moments(&h, &s0).unwrap();
        let mk = energy_moments(&h.scaled(k), &s0).unwrap();
        prop_assert!((mk.mean_above_ground - k * m.mean_above_ground).abs() <= 1e-10 * k.max(1.0));
        prop_assert!((mk.std_dev - k * m.std_dev).abs() <= 1e-10 * k.max(1.0));
    }
}

#[test]
fn pure_bures_angle_is_precise_near_zero() {
    let h = direct_optimal(2).unwrap();
    let u = UnitaryPropagator::new(&h, &ground_ket(h.layout().clone())).unwrap();
    for dt in [1e-12, 1e-9, 1e-6] {
        let theta = bures_angle(&u.state_at(0.3), &u.state_at(0.3 + dt)).unwrap();
        assert!((theta - dt).abs() < 1e-15 + 1e-9 * dt, "{theta} vs {dt}");
    }
    let _: DensityState = u.state_at(0.0);
}

/// When the mean energy is the smaller moment, Θ ≤ T fails at short times:
/// cos a|0> + sin a|1> under diag(0, 1) has <M> = sin²a < ΔM = sin a cos a.
#[test]
fn mean_energy_normalization_does_not_bound_short_times() {
    let l = layout(&[("S", 2)]);
    let a: f64 = 0.2;
    let psi = DensityState::from_pure(
        l.clone(),
        vec![
            medqsl_core::linalg::C64::new(a.cos(), 0.0),
            medqsl_core::linalg::C64::new(a.sin(), 0.0),
        ],
    )
    .unwrap();
    let h = Hamiltonian::new(
        l,
        medqsl_core::linalg::ComplexMatrix::real_diagonal(&[0.0, 1.0]),
        "gap",
    )
    .unwrap();
    let (h, k) = resource_equality_scale(&h, &psi).unwrap();
    assert!((k - 1.0 / (a.sin() * a.sin())).abs() < 1e-9);
    let u = UnitaryPropagator::new(&h, &psi).unwrap();
    let t = 0.01;
    let theta = bures_angle(&psi, &u.state_at(t)).unwrap();
    assert!(theta > 4.0 * t, "Θ={theta}");
    let m = energy_moments(&h, &psi).unwrap();
    assert!(theta <= m.std_dev * t + 1e-12);
}
