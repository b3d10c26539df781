//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};
use std::process::ExitCode;
use std::time::Instant;

use medqsl::io::{envelope_csv, to_json_pretty};
use medqsl::sweep::{
    fig2_closed_form, run_cmi_uncorrelated, run_commuting_null, run_fig2, run_rate_zero,
    run_smi_protocol, run_sweep, Experiment, SweepConfig, SweepReport,
};
use medqsl_core::dynamics::{first_max_entanglement_time, negativity_across, UnitaryPropagator};
use medqsl_core::hamiltonian::{
    builtin, classical_mediator_example, cmi_product_example, direct_optimal, energy_moments,
    entangled_mediator_example, ground_ket, open_system_example, resource_equality_scale,
};
use medqsl_core::linalg::{expm_i_hermitian, kron};
use medqsl_core::qsl::{di_bound, smi_bound, swap_stage_fidelity};
use medqsl_core::randgen::{
    haar_pure_on, random_density_on, random_hermitian, random_mediated_hamiltonian,
};
use medqsl_core::state::{
    bures_angle, is_classically_correlated_on, mutual_information, negativity, partial_trace,
    purity, reduced_mutual_information, uhlmann_fidelity,
};
use medqsl_core::{Bipartition, DensityState, RngStream, SystemLayout, TimeGrid};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ab() -> Bipartition {
    Bipartition::pair("A", "B")
}

fn grid_points(stop: f64, step: f64) -> Vec<f64> {
    TimeGrid::from_zero(stop, step).unwrap().points()
}

fn fig2() -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_peak = 0.0f64;
    for d in 2..=5 {
        let grid = TimeGrid::from_zero(FRAC_PI_2, 1e-3).map_err(|e| e.to_string())?;
        let traj = run_fig2(d, &grid).map_err(|e| e.to_string())?;
        let n = traj.negativity().ok_or("no negativity column")?;
        for (t, v) in traj.times().iter().zip(&n) {
            worst = worst.max((v - fig2_closed_form(d, *t)).abs());
        }
        let h = direct_optimal(d).unwrap();
        let s0 = ground_ket(h.layout().clone());
        let t = first_max_entanglement_time(&h, &s0, &ab(), d, 2.0)
            .map_err(|e| e.to_string())?
            .ok_or(format!("d={d}: maximum not reached"))?;
        let expected = (1.0 / (d as f64).sqrt()).acos();
        worst_peak = worst_peak.max((t - expected).abs());
        let peak = negativity_across(&UnitaryPropagator::new(&h, &s0).unwrap().state_at(t), &ab())
            .unwrap();
        worst_peak = worst_peak.max((peak - (d as f64 - 1.0) / 2.0).abs());
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && worst_peak <= 1e-6 && secs < 10.0,
        format!("max |N - closed form| = {worst:.2e}, peak time/value error {worst_peak:.2e}, {secs:.2} s"),
    )
}

fn resource_equality() -> Outcome {
    let mut worst = 0.0f64;
    for name in [
        "direct-optimal",
        "cmi-product",
        "cmi-entangled",
        "cmi-classical",
    ] {
        let (h, s) = builtin(name).unwrap();
        worst = worst.max((energy_moments(&h, &s).unwrap().denominator() - 1.0).abs());
    }
    check(
        worst <= 1e-10,
        format!("max |min{{<M>, ΔM}} - 1| = {worst:.2e}"),
    )
}

fn entangled_mediator() -> Outcome {
    let (h, s0) = entangled_mediator_example();
    let n0 = negativity(&s0, &Bipartition::new(&["A", "B"], &["C"]).unwrap()).unwrap();
    let u = UnitaryPropagator::new(&h, &s0).unwrap();
    let worst = grid_points(FRAC_PI_4, 1e-3)
        .into_iter()
        .map(|t| (negativity_across(&u.state_at(t), &ab()).unwrap() - 0.5 * (2.0 * t).sin()).abs())
        .fold(0.0, f64::max);
    check(
        (n0 - 0.5).abs() <= 1e-10 && worst <= 1e-8,
        format!("N_AB:C(0) = {n0:.12}, max |N_A:B - sin(2T)/2| = {worst:.2e}"),
    )
}

fn classical_mediator() -> Outcome {
    let (h, s0) = classical_mediator_example();
    let info = mutual_information(&s0, &Bipartition::new(&["A", "B"], &["C"]).unwrap()).unwrap();
    let u = UnitaryPropagator::new(&h, &s0).unwrap();
    let classical = [0.0, FRAC_PI_4 / 2.0, FRAC_PI_4]
        .iter()
        .all(|&t| is_classically_correlated_on(&u.state_at(t), "C").unwrap());
    let end = u.state_at(FRAC_PI_4);
    let n = negativity_across(&end, &ab()).unwrap();
    let p0 = purity(&partial_trace(&s0, &["A", "B"]).unwrap());
    let p1 = purity(&partial_trace(&end, &["A", "B"]).unwrap());
    check(
        (info - 1.0).abs() <= 1e-8
            && classical
            && (n - 0.5).abs() <= 1e-8
            && (p0 - 0.5).abs() <= 1e-8
            && (p1 - 1.0).abs() <= 1e-8,
        format!("I_AB:C(0) = {info:.10}, classical = {classical}, N_A:B(π/4) = {n:.10}, purity {p0:.6} -> {p1:.6}"),
    )
}

fn open_system() -> Outcome {
    let (h, s0) = open_system_example();
    let u = UnitaryPropagator::new(&h, &s0).unwrap();
    let end = u.state_at(FRAC_PI_4);
    let i0 = reduced_mutual_information(&s0, &ab()).unwrap();
    let i1 = reduced_mutual_information(&end, &ab()).unwrap();
    let n = negativity_across(&end, &ab()).unwrap();
    check(
        (i0 - 1.0).abs() <= 1e-8 && (i1 - 2.0).abs() <= 1e-8 && (n - 0.5).abs() <= 1e-8,
        format!("I_A:B {i0:.10} -> {i1:.10}, N_A:B(π/4) = {n:.10}"),
    )
}

fn cmi_product() -> Outcome {
    let (h, s0) = cmi_product_example();
    let t = first_max_entanglement_time(&h, &s0, &ab(), 2, 3.0)
        .map_err(|e| e.to_string())?
        .ok_or("maximum not reached")?;
    let n = negativity_across(
        &UnitaryPropagator::new(&h, &s0).unwrap().state_at(FRAC_PI_4),
        &ab(),
    )
    .unwrap();
    check(
        (t - FRAC_PI_2).abs() <= 1e-6 && n < 0.4,
        format!("first maximum at {t:.9}, N_A:B(π/4) = {n:.6}"),
    )
}

fn cmi_sweep(d: usize) -> Result<SweepReport, String> {
    let cfg = SweepConfig::new(Experiment::CmiUncorrelated, d).map_err(|e| e.to_string())?;
    run_cmi_uncorrelated(&cfg, None).map_err(|e| e.to_string())
}

fn uncorrelated_sweeps() -> Outcome {
    let started = Instant::now();
    let r2 = cmi_sweep(2)?;
    let r3 = cmi_sweep(3)?;
    let at_half_pi = r2
        .summary
        .get("envelope_max_at_half_pi")
        .copied()
        .unwrap_or(0.0);
    let until_di = r2.summary["envelope_max_until_di"];
    let at_conjecture = r3
        .summary
        .get("envelope_max_at_conjecture")
        .copied()
        .unwrap_or(f64::INFINITY);
    check(
        r2.instances.len() == 10_000
            && r3.instances.len() == 10_000
            && r2.violations.is_empty()
            && r3.violations.is_empty()
            && at_half_pi >= 0.5 - 1e-6
            && at_conjecture <= 0.9,
        format!(
            "d=2: {} violations, max until π/4 {until_di:.4}, max at π/2 {at_half_pi:.9}; d=3: {} violations, max at conjecture time {at_conjecture:.4}; {:.0} s",
            r2.violations.len(),
            r3.violations.len(),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn rate_zero() -> Outcome {
    let cfg = SweepConfig::new(Experiment::RateZero, 2).map_err(|e| e.to_string())?;
    let r = run_rate_zero(&cfg, None).map_err(|e| e.to_string())?;
    let closed = r.summary["max_abs_change_closed"];
    let dephasing = r.summary["max_change_dephasing"];
    let damping = r.summary["max_change_damping"];
    check(
        r.instances.len() == 1000 && closed <= 1e-6 && dephasing <= 1e-8 && damping <= 1e-8,
        format!("closed max |ΔN| {closed:.2e}, dephasing max ΔN {dephasing:.2e}, damping max ΔN {damping:.2e}"),
    )
}

fn smi() -> Outcome {
    let mut worst_fidelity = 0.0f64;
    let mut details = Vec::new();
    let mut ok = true;
    for d in 2..=4 {
        worst_fidelity =
            worst_fidelity.max((swap_stage_fidelity(d).unwrap() - 1.0 / d as f64).abs());
        let cfg = SweepConfig::new(Experiment::SmiProtocol, d).map_err(|e| e.to_string())?;
        let r = run_smi_protocol(&cfg, None).map_err(|e| e.to_string())?;
        let bound = (1.0 / d as f64).acos();
        let best = r.summary.get("best_stage2_time").copied();
        ok &= r.violations.is_empty() && best.is_none_or(|t| t >= bound - 1e-6);
        details.push(format!(
            "d={d}: fastest stage 2 {} vs {bound:.6}",
            best.map_or("none".into(), |t| format!("{t:.6}"))
        ));
    }
    let bound2 = (smi_bound(2).unwrap() - (FRAC_PI_4 + FRAC_PI_3)).abs();
    check(
        ok && worst_fidelity <= 1e-12 && bound2 <= 1e-12,
        format!(
            "swap fidelity error {worst_fidelity:.1e}, smi_bound(2) error {bound2:.1e}; {}",
            details.join(", ")
        ),
    )
}

fn commuting_null() -> Outcome {
    let cfg = SweepConfig::new(Experiment::CommutingNull, 2).map_err(|e| e.to_string())?;
    let r = run_commuting_null(&cfg, None).map_err(|e| e.to_string())?;
    let growth = r.summary["max_growth"];
    check(
        r.instances.len() == 1000 && r.violations.is_empty() && growth <= 1e-10,
        format!(
            "max growth of N_A:B {growth:.2e} over {} instances",
            r.instances.len()
        ),
    )
}

fn any_state(layout: SystemLayout, rng: &mut RngStream) -> DensityState {
    if rng.uniform() < 0.3 {
        haar_pure_on(layout, rng).unwrap()
    } else {
        random_density_on(layout, rng).unwrap()
    }
}

fn qubit(label: &str) -> SystemLayout {
    SystemLayout::new([(label, 2)]).unwrap()
}

fn properties() -> Outcome {
    const CASES: u64 = 1000;
    let mut failures = Vec::new();
    let mut fail = |name: &str, k: u64, what: String| failures.push(format!("{name}#{k}: {what}"));
    let abc = SystemLayout::uniform(&["A", "B", "C"], 2).unwrap();
    let l_ab = SystemLayout::uniform(&["A", "B"], 2).unwrap();
    let mut qsl_strict = 0;
    for k in 0..CASES {
        let mut rng = RngStream::new(2024, k);
        let (r1, s1) = (
            any_state(qubit("A"), &mut rng),
            any_state(qubit("A"), &mut rng),
        );
        let (r2, s2) = (
            any_state(qubit("B"), &mut rng),
            any_state(qubit("B"), &mut rng),
        );
        let joint = uhlmann_fidelity(&r1.tensor(&r2).unwrap(), &s1.tensor(&s2).unwrap()).unwrap();
        let product = uhlmann_fidelity(&r1, &s1).unwrap() * uhlmann_fidelity(&r2, &s2).unwrap();
        if (joint - product).abs() > 1e-9 {
            fail("multiplicativity", k, format!("{joint} vs {product}"));
        }

        let (rho, sigma) = (
            any_state(abc.clone(), &mut rng),
            any_state(abc.clone(), &mut rng),
        );
        let full = uhlmann_fidelity(&rho, &sigma).unwrap();
        let reduced = uhlmann_fidelity(
            &partial_trace(&rho, &["A", "B"]).unwrap(),
            &partial_trace(&sigma, &["A", "B"]).unwrap(),
        )
        .unwrap();
        if full > reduced + 1e-10 {
            fail("monotonicity", k, format!("{full} > {reduced}"));
        }

        let tau = any_state(abc.clone(), &mut rng);
        let direct = bures_angle(&rho, &tau).unwrap();
        let via = bures_angle(&rho, &sigma).unwrap() + bures_angle(&sigma, &tau).unwrap();
        if direct > via + 1e-9 {
            fail("triangle", k, format!("{direct} > {via}"));
        }

        let s = any_state(l_ab.clone(), &mut rng);
        let u = kron(
            &expm_i_hermitian(&random_hermitian(2, &mut rng).unwrap(), 1.0).unwrap(),
            &expm_i_hermitian(&random_hermitian(2, &mut rng).unwrap(), 1.0).unwrap(),
        );
        let rotated = DensityState::from_density(
            l_ab.clone(),
            u.matmul(s.matrix()).matmul(&u.adjoint()).hermitian_part(),
        )
        .unwrap();
        let (n0, n1) = (
            negativity(&s, &ab()).unwrap(),
            negativity(&rotated, &ab()).unwrap(),
        );
        if (n0 - n1).abs() > 1e-10 {
            fail("local-unitary", k, format!("{n0} vs {n1}"));
        }

        let psi = haar_pure_on(SystemLayout::uniform(&["A", "B"], 3).unwrap(), &mut rng).unwrap();
        let roots: f64 = partial_trace(&psi, &["A"])
            .unwrap()
            .eigenvalues()
            .iter()
            .map(|p| p.max(0.0).sqrt())
            .sum();
        let (schmidt, n) = (
            (roots * roots - 1.0) / 2.0,
            negativity(&psi, &ab()).unwrap(),
        );
        if (n - schmidt).abs() > 1e-10 {
            fail("schmidt", k, format!("{n} vs {schmidt}"));
        }

        let h = random_mediated_hamiltonian(2, 2, 2, &mut rng).unwrap();
        let s0 = any_state(h.layout().clone(), &mut rng);
        if let Ok((h, _)) = resource_equality_scale(&h, &s0) {
            let m = energy_moments(&h, &s0).unwrap();
            let strict = m.std_dev <= m.mean_above_ground;
            qsl_strict += usize::from(strict);
            let prop = UnitaryPropagator::new(&h, &s0).unwrap();
            for t in grid_points(2.0, 0.05) {
                let theta = bures_angle(&s0, &prop.state_at(t)).unwrap();
                if theta > m.std_dev * t + 1e-8 || (strict && theta > t + 1e-8) {
                    fail("qsl", k, format!("Θ={theta} at T={t}, ΔM={}", m.std_dev));
                }
            }
        }

        let d = 2 + (k % 4) as usize;
        let h = direct_optimal(d).unwrap();
        let prop = UnitaryPropagator::new(&h, &ground_ket(h.layout().clone())).unwrap();
        let di = di_bound(d).unwrap();
        let (a, b) = (rng.uniform() * di, rng.uniform() * di);
        let (t1, t2) = (a.min(b), a.max(b));
        let theta = bures_angle(&prop.state_at(t1), &prop.state_at(t2)).unwrap();
        if (theta - (t2 - t1)).abs() > 1e-9 {
            fail("geodesic", k, format!("d={d}: Θ={theta} vs {}", t2 - t1));
        }
    }
    let shown: Vec<_> = failures.iter().take(3).cloned().collect();
    check(
        failures.is_empty(),
        format!(
            "{CASES} cases x 7 suites, {} failures {shown:?}; QSL as Θ ≤ ΔM·T on all cases, Θ ≤ T on the {qsl_strict} with ΔM ≤ <M> (the <M>-normalized branch does not bound Θ, see README)",
            failures.len()
        ),
    )
}

fn report_bytes(cfg: &SweepConfig, workers: usize) -> Result<(String, String), String> {
    let r = run_sweep(cfg, Some(workers)).map_err(|e| e.to_string())?;
    Ok((
        to_json_pretty(&r).map_err(|e| e.to_string())?,
        envelope_csv(&r.envelope),
    ))
}

fn determinism() -> Outcome {
    let mut configs = Vec::new();
    for (experiment, d, n) in [
        (Experiment::CmiUncorrelated, 2, 400),
        (Experiment::RateZero, 2, 100),
        (Experiment::CommutingNull, 2, 200),
        (Experiment::SmiProtocol, 2, 20),
    ] {
        let mut cfg = SweepConfig::new(experiment, d).map_err(|e| e.to_string())?;
        cfg.n_instances = n;
        configs.push(cfg);
    }
    let mut identical = 0;
    for cfg in &configs {
        let one = report_bytes(cfg, 1)?;
        let three = report_bytes(cfg, 3)?;
        identical += usize::from(one == three);
    }
    check(
        identical == configs.len(),
        format!(
            "{identical}/{} sweeps byte-identical for 1 vs 3 workers",
            configs.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("fig2 closed form and first maximum", fig2),
        ("resource equality of builtin examples", resource_equality),
        ("entangled-mediator example", entangled_mediator),
        ("classical-mediator example", classical_mediator),
        ("open-system example", open_system),
        ("CMI product example", cmi_product),
        ("uncorrelated-mediator sweeps d=2,3", uncorrelated_sweeps),
        ("zero entangling rate", rate_zero),
        ("sequential mediated protocol", smi),
        ("commuting-Hamiltonian null", commuting_null),
        ("property suites", properties),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
