use daestruct_core::mna::{assemble, index_bound, reduce_to_ode, BoundOptions, CircuitModel, TheoremBound};
use daestruct_core::sim::{consistent_initial, integrate, integrate_ode, perturbation_probe, two_grid_check};
use daestruct_core::waveform::Waveform;

fn rc() -> CircuitModel {
    let mut m = CircuitModel::new(3);
    m.vsource("V1", 1, 0, Waveform::dc(1.0)).resistor("R1", 1, 2, 1.0).capacitor("C1", 2, 0, 1.0);
    m
}

fn cv_parallel() -> CircuitModel {
    let mut m = CircuitModel::new(3);
    m.vsource("V1", 1, 0, Waveform::sin(0.0, 1.0, 1.0))
        .capacitor("C1", 1, 0, 1.0)
        .resistor("R1", 1, 2, 1.0)
        .capacitor("C2", 2, 0, 2.0);
    m
}

fn li_cutset() -> CircuitModel {
    let mut m = CircuitModel::new(3);
    m.isource("I1", 0, 1, Waveform::sin(0.0, 1.0, 1.0))
        .inductor("L1", 1, 2, 1.0)
        .resistor("R1", 2, 0, 1.0)
        .capacitor("C1", 2, 0, 1.0);
    m
}

fn rlc() -> CircuitModel {
    let mut m = CircuitModel::new(4);
    m.vsource("V1", 1, 0, Waveform::sin(0.0, 1.0, 1.0))
        .resistor("R1", 1, 2, 1.0)
        .capacitor("C1", 2, 3, 1.0)
        .inductor("L1", 3, 0, 1.0);
    m
}

#[test]
fn rc_charging_matches_closed_form() {
    let sys = assemble(&rc()).unwrap();
    let ode = reduce_to_ode(&sys, &BoundOptions::default()).unwrap();
    let z0 = consistent_initial(&sys, 0.0, &vec![0.0; sys.size()]).unwrap();
    let run = integrate_ode(&ode, &sys, 0.0, 1.0, 1e-4, &z0).unwrap();
    let k = run.names.iter().position(|n| n == "e2").unwrap();
    let exact = 1.0 - (-1.0f64).exp();
    assert!((run.last()[k] - exact).abs() < 1e-3, "{}", run.last()[k]);
}

#[test]
fn ode_tracks_dae_on_benchmarks() {
    for (name, m, bound) in [
        ("rc", rc(), TheoremBound::AtMost1),
        ("rlc", rlc(), TheoremBound::AtMost1),
        ("cv", cv_parallel(), TheoremBound::AtMost2),
        ("li", li_cutset(), TheoremBound::AtMost2),
    ] {
        let sys = assemble(&m).unwrap();
        let rep = index_bound(&sys, &BoundOptions::default()).unwrap();
        assert_eq!(rep.theorem_bound, bound, "{name}");
        assert_eq!(rep.agreement, Some(true), "{name}");
        let ode = reduce_to_ode(&sys, &BoundOptions::default()).unwrap();
        assert_eq!(ode.second_stage, bound == TheoremBound::AtMost2, "{name}");
        let chk = two_grid_check(&sys, &ode, 0.5, 1e-3).unwrap();
        eprintln!("{name}: {chk:?}");
        assert!(chk.pass, "{name}: {chk:?}");
    }
}

#[test]
fn identity_defect_vanishes_without_li_cutset() {
    let sys = assemble(&cv_parallel()).unwrap();
    let ode = reduce_to_ode(&sys, &BoundOptions::default()).unwrap();
    assert!(ode.chain.identity_defect < 1e-12);
}

#[test]
fn probe_separates_index_two_from_index_one() {
    let sys = assemble(&cv_parallel()).unwrap();
    let rep = perturbation_probe(&sys, "V1", &[1e-3], &[10.0, 100.0, 1000.0]).unwrap();
    assert_eq!(rep.label, "empirical");
    let p = rep.p_for(1e-3, "i_C1").unwrap();
    assert!(p > 0.8, "{p}");

    let sys = assemble(&rlc()).unwrap();
    let rep = perturbation_probe(&sys, "V1", &[1e-3], &[10.0, 100.0, 1000.0]).unwrap();
    let p = rep.p_for(1e-3, "i_L1").unwrap();
    assert!(p < 0.2, "{p}");
}

#[test]
fn zero_perturbation_gives_zero_deviation() {
    let sys = assemble(&rc()).unwrap();
    let rep = perturbation_probe(&sys, "V1", &[0.0], &[10.0]).unwrap();
    assert_eq!(rep.rows[0].max_deviation, 0.0);
    assert!(rep.fits[0].p_overall.is_none());
}

#[test]
fn divider_stays_constant() {
    let mut m = CircuitModel::new(3);
    m.vsource("V1", 1, 0, Waveform::dc(2.0)).resistor("R1", 1, 2, 1.0).resistor("R2", 2, 0, 1.0);
    let sys = assemble(&m).unwrap();
    let run = integrate(&sys, 0.0, 0.1, 1e-2, None).unwrap();
    let e2 = run.series("e2").unwrap();
    assert!(e2.iter().all(|v| (v - 1.0).abs() < 1e-12));
}
