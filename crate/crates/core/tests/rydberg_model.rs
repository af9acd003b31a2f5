use procmat::circuit::{qubit_chi_from_choi, simulate_schedule};
use procmat::mcwf::{schedule_propagator, ScheduleItem, TrajectoryConfig};
use procmat::process::{trace_distance, OperatorBasis, ProcessMatrix};
use procmat::rydberg::{
    adiabatic_eliminate, build_cknot_sequence, build_cnot_sequence, build_corrected_cknot,
    build_pi_pulse, ideal_cknot, jump_operators, AtomParams, AtomParamsHz, LevelScheme,
    RegisterModel, SchemeKind, StarkMode, Transition, IDEAL_BLOCKADE_RATIO, TWO_PI,
};
use procmat::tensor::ComplexMatrix;
use procmat::C64;
use procmat_testkit::{self as tk, gates};

fn closed(n: usize) -> RegisterModel {
    RegisterModel::effective3(n, AtomParams::table1().closed()).unwrap()
}

fn ket(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[index] = C64::new(1.0, 0.0);
    v
}

fn single_pulse(reg: &RegisterModel, atom: usize, t: Transition) -> ComplexMatrix {
    let mut s = procmat::mcwf::PulseSchedule::new(reg.shape());
    s.push_segment(build_pi_pulse(reg, atom, t).unwrap())
        .unwrap();
    schedule_propagator(&s, &[], &TrajectoryConfig::default()).unwrap()
}

#[test]
fn pi_pulse_transfers_population() {
    let reg = closed(1);
    let u = single_pulse(&reg, 0, Transition::OneR);
    let out = u.matvec(&ket(3, 1));
    assert!(out[2].norm_sqr() >= 1.0 - 1e-6, "{}", out[2].norm_sqr());
    let idle = u.matvec(&ket(3, 0));
    assert!((idle[0].norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn uncompensated_stark_shifts_spoil_transfer() {
    let reg = RegisterModel::new(
        1,
        LevelScheme::new(SchemeKind::Effective3, false),
        AtomParams::table1().closed(),
    )
    .unwrap()
    .with_stark(StarkMode::Uncompensated);
    let out = single_pulse(&reg, 0, Transition::OneR).matvec(&ket(3, 1));
    assert!(out[2].norm_sqr() < 0.99);
}

#[test]
fn blockade_suppresses_transfer_like_a_detuned_rabi_flop() {
    let p = AtomParamsHz {
        omega_b: 100e6,
        ..AtomParamsHz::table1()
    }
    .to_rad()
    .closed();
    let reg = RegisterModel::effective3(2, p).unwrap();
    let omega = adiabatic_eliminate(&p, 1).unwrap().omega_eff;
    let t = reg.pulse_duration().unwrap();
    // Atom 0 parked in |r⟩, atom 1 in |1⟩: index r·3 + 1.
    let u = single_pulse(&reg, 1, Transition::OneR);
    let out = u.matvec(&ket(9, 2 * 3 + 1));
    let transferred = out[2 * 3 + 2].norm_sqr();
    let b = p.blockade;
    let w = (omega * omega + b * b).sqrt();
    let oracle = omega * omega / (w * w) * (0.5 * w * t).sin().powi(2);
    assert!(
        (transferred - oracle).abs() < 1e-6,
        "{transferred} vs {oracle}"
    );
    assert!(transferred <= omega * omega / (omega * omega + b * b) + 1e-9);
}

#[test]
fn ideal_limit_cnot_truth_table() {
    let reg = closed(2).ideal_limit().unwrap();
    let u = schedule_propagator(
        &build_cnot_sequence(&reg, 0, 1).unwrap(),
        &[],
        &TrajectoryConfig::default(),
    )
    .unwrap();
    let q = reg.shape().qubit_indices();
    let uq = u.select(&q, &q);
    // |1_c 0_t⟩ → |1_c 1_t⟩ and |0_c 0_t⟩ stays put, up to phases.
    assert!(uq[(3, 2)].norm() > 1.0 - 1e-6);
    assert!(uq[(0, 0)].norm() > 1.0 - 1e-6);
    assert!(uq[(2, 3)].norm() > 1.0 - 1e-6);
    assert!(uq[(1, 1)].norm() > 1.0 - 1e-6);
}

fn closed_gate_distance(n: usize, controls: &[usize], target: usize) -> f64 {
    let reg = closed(n).ideal_limit().unwrap();
    let cfg = TrajectoryConfig::with_trajectories(1, 0);
    let sched = build_corrected_cknot(&reg, controls, target, &cfg).unwrap();
    let sim = simulate_schedule(&sched, &reg, &cfg).unwrap();
    let ideal =
        ProcessMatrix::from_unitary(&ideal_cknot(n, controls, target), &OperatorBasis::qubits(n))
            .unwrap();
    trace_distance(&sim.chi, &ideal).unwrap()
}

#[test]
fn frame_corrected_gates_are_canonical() {
    assert!(closed_gate_distance(2, &[0], 1) < 1e-6);
    assert!(closed_gate_distance(2, &[1], 0) < 1e-6);
    assert!(closed_gate_distance(3, &[0, 1], 2) < 1e-6);
    // Canonical matrices are the textbook permutations.
    assert_eq!(ideal_cknot(2, &[0], 1), gates::cnot());
    assert_eq!(ideal_cknot(3, &[0, 1], 2), gates::toffoli());
}

#[test]
fn blockade_ratio_is_large_enough() {
    let reg = closed(2).ideal_limit().unwrap();
    let omega = adiabatic_eliminate(&reg.params, 0).unwrap().omega_eff;
    assert!(reg.params.blockade >= 1e4 * omega);
    assert_eq!(reg.params.blockade, IDEAL_BLOCKADE_RATIO * omega);
}

#[test]
fn finite_blockade_closed_system_is_trace_preserving() {
    let reg = closed(2);
    let cfg = TrajectoryConfig::with_trajectories(1, 0);
    let sched = build_corrected_cknot(&reg, &[0], 1, &cfg).unwrap();
    let sim = simulate_schedule(&sched, &reg, &cfg).unwrap();
    let full = sim
        .ensemble
        .chi(&OperatorBasis::matrix_units(reg.shape()))
        .unwrap();
    assert!((full.trace() - 1.0).abs() < 1e-10);
    // Coherent leakage shows up in the projection only.
    assert!(sim.leakage > 0.0);
}

#[test]
fn cknot_with_one_control_is_the_cnot() {
    let reg = RegisterModel::effective3(3, AtomParams::table1()).unwrap();
    let a = build_cknot_sequence(&reg, &[2], 0).unwrap();
    let b = build_cnot_sequence(&reg, 2, 0).unwrap();
    assert_eq!(a.segment_count(), 5);
    for (x, y) in a.segments().zip(b.segments()) {
        assert_eq!(x.h, y.h);
        assert_eq!(x.label, y.label);
        assert_eq!(x.duration, y.duration);
    }
    assert_eq!(
        build_cknot_sequence(&reg, &[0, 1], 2)
            .unwrap()
            .segment_count(),
        7
    );
}

#[test]
fn segments_are_hermitian_with_pi_durations() {
    for scheme in [SchemeKind::Effective3, SchemeKind::Full4] {
        for dump in [false, true] {
            let reg = RegisterModel::new(3, LevelScheme::new(scheme, dump), AtomParams::table1())
                .unwrap();
            let omega = adiabatic_eliminate(&reg.params, 0).unwrap().omega_eff;
            let sched = build_cknot_sequence(&reg, &[0, 1], 2).unwrap();
            for item in sched.items() {
                if let ScheduleItem::Segment(seg) = item {
                    assert!(seg.h.max_abs_diff(&seg.h.adjoint()) == 0.0);
                    assert!(
                        (seg.duration - std::f64::consts::PI / omega).abs() < 1e-12 * seg.duration
                    );
                }
            }
        }
    }
}

#[test]
fn two_atom_operators_come_in_pairs() {
    let reg = RegisterModel::effective3(2, AtomParams::table1()).unwrap();
    let ops = jump_operators(&reg);
    for atom in 0..2 {
        assert_eq!(
            ops.iter()
                .filter(|j| j.label.ends_with(&format!("[{atom}]")))
                .count(),
            3
        );
    }
    // √γ_d(1 − 2|r⟩⟨r|) on atom 1 acts as identity on atom 0.
    let deph = &ops.iter().find(|j| j.label == "dephasing[1]").unwrap().l;
    let g = reg.params.gamma_d.sqrt();
    let local = ComplexMatrix::diagonal(&[C64::new(g, 0.0), C64::new(g, 0.0), C64::new(-g, 0.0)]);
    assert!(deph.max_abs_diff(&tk::kron_na(&ComplexMatrix::identity(3), &local)) < 1e-12);
}

#[test]
fn full_four_level_scheme_agrees_with_elimination_at_50_mhz() {
    let p = AtomParams::table1();
    let cfg = TrajectoryConfig::with_trajectories(500, 3);
    let ideal =
        ProcessMatrix::from_unitary(&ideal_cknot(2, &[0], 1), &OperatorBasis::qubits(2)).unwrap();
    let run = |kind: SchemeKind| {
        let reg = RegisterModel::new(2, LevelScheme::new(kind, false), p).unwrap();
        let sched = build_corrected_cknot(&reg, &[0], 1, &cfg).unwrap();
        let sim = simulate_schedule(&sched, &reg, &cfg).unwrap();
        let (t, se) = sim
            .ensemble
            .jackknife(20, |choi| {
                Ok(trace_distance(&qubit_chi_from_choi(choi, &reg)?, &ideal)?)
            })
            .unwrap();
        (t, se, sim.chi)
    };
    let (t3, se3, chi3) = run(SchemeKind::Effective3);
    let (t4, se4, chi4) = run(SchemeKind::Full4);
    let tol = 3.0 * (se3 * se3 + se4 * se4).sqrt();
    assert!(
        (t3 - t4).abs() < tol,
        "effective-3 {t3} ± {se3}, full-4 {t4} ± {se4}"
    );
    // Same channel up to Monte Carlo noise.
    assert!(trace_distance(&chi3, &chi4).unwrap() < t3 + t4);
}

#[test]
fn table_one_values() {
    let hz = AtomParamsHz::table1();
    assert_eq!((hz.delta, hz.omega_r, hz.blockade), (2.0e9, 118e6, 20e6));
    assert_eq!((hz.gamma_p, hz.gamma_r, hz.gamma_d), (6.07e6, 530.0, 1.0e3));
    let back = hz.to_rad().to_hz();
    assert!((back.omega_r - hz.omega_r).abs() < 1e-6);
    assert!((AtomParams::table1().omega_r / TWO_PI - 118e6).abs() < 1e-6);
}
