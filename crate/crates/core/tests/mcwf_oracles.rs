use std::f64::consts::PI;

use procmat::mcwf::{
    evolve_trajectory, extract_chi, no_jump_estimate, run_choi_ensemble, run_ensemble,
    HamiltonianSegment, JumpOperator, McwfError, PulseSchedule, TrajectoryConfig,
};
use procmat::process::{chi_from_kraus, from_choi, trace_distance, OperatorBasis, ProcessMatrix};
use procmat::tensor::{lawson_rk4_step_operator, norm_sqr, ComplexMatrix, SubsystemShape};
use procmat::C64;
use procmat_testkit::{self as tk, gates};

const TWO_PI: f64 = 2.0 * PI;

fn shape(d: usize) -> SubsystemShape {
    SubsystemShape::new(vec![d]).unwrap()
}

fn segment(h: ComplexMatrix, duration: f64) -> HamiltonianSegment {
    HamiltonianSegment {
        h,
        duration,
        label: "seg".into(),
        jumps: vec![],
    }
}

fn schedule(h: ComplexMatrix, duration: f64) -> PulseSchedule {
    let mut s = PulseSchedule::new(shape(h.rows()));
    s.push_segment(segment(h, duration)).unwrap();
    s
}

/// `√γ |0⟩⟨1|` on a two-level system with excited state 1.
fn decay(gamma: f64) -> JumpOperator {
    JumpOperator::new(
        ComplexMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]),
        "decay",
    )
}

fn rabi(omega: f64) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 0.5 * omega], &[0.5 * omega, 0.0]])
}

fn ket(amps: &[(f64, f64)]) -> Vec<C64> {
    amps.iter().map(|&(re, im)| C64::new(re, im)).collect()
}

fn excited() -> Vec<C64> {
    ket(&[(0.0, 0.0), (1.0, 0.0)])
}

#[test]
fn closed_system_matches_exponential() {
    let h = tk::random_hermitian(&mut tk::rng(1), 4, 2.0e6);
    let t = 3e-6;
    let psi0 = ket(&[(0.5, 0.0), (0.0, 0.5), (0.5, 0.0), (0.0, -0.5)]);
    // About 100 rad of phase: a 0.01 rad step keeps the fourth-order error below 1e-8.
    let cfg = TrajectoryConfig {
        max_phase_per_step: 0.01,
        ..TrajectoryConfig::with_trajectories(1, 0)
    };
    let (psi, record) = evolve_trajectory(&schedule(h.clone(), t), &[], &psi0, 3, &cfg).unwrap();
    let want = tk::expm(&h.scale(C64::new(0.0, -t))).matvec(&psi0);
    let err = psi
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
    assert!(record.events.is_empty());
}

#[test]
fn closed_ensemble_is_a_pure_state() {
    let h = rabi(TWO_PI * 1e6);
    let cfg = TrajectoryConfig::with_trajectories(20, 4);
    let res = run_ensemble(&schedule(h, 0.3e-6), &[], &excited(), &cfg).unwrap();
    let first = &res.final_states[0];
    assert!(
        res.rho_avg
            .max_abs_diff(&ComplexMatrix::outer(first, first))
            < 1e-14
    );
    assert_eq!(res.no_jump_fraction, 1.0);
}

#[test]
fn decay_times_follow_exponential_law() {
    let gamma = TWO_PI * 0.1e6;
    let t = 2e-6;
    let n = 2000;
    let cfg = TrajectoryConfig::with_trajectories(n, 17);
    let res = run_ensemble(
        &schedule(ComplexMatrix::zeros(2, 2), t),
        &[decay(gamma)],
        &excited(),
        &cfg,
    )
    .unwrap();
    let p = 1.0 - (-gamma * t).exp();
    let observed = 1.0 - res.no_jump_fraction;
    assert!(
        (observed - p).abs() < 3.0 * tk::binomial_se(p, n),
        "{observed} vs {p}"
    );
    assert!((res.no_jump_fraction - (-gamma * t).exp()).abs() < 3.0 * tk::binomial_se(p, n));
}

#[test]
fn driven_lossy_atom_matches_master_equation() {
    let omega = TWO_PI * 1e6;
    let gamma = TWO_PI * 0.1e6;
    let t = 5e-6;
    let n = 1000;
    let h = rabi(omega);
    let psi0 = ket(&[(1.0, 0.0), (0.0, 0.0)]);
    let cfg = TrajectoryConfig::with_trajectories(n, 5);
    let res = run_ensemble(&schedule(h.clone(), t), &[decay(gamma)], &psi0, &cfg).unwrap();
    let pops: Vec<f64> = res.final_states.iter().map(|s| s[1].norm_sqr()).collect();
    let mean = pops.iter().sum::<f64>() / n as f64;
    let var = pops.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let rho0 = ComplexMatrix::outer(&psi0, &psi0);
    let oracle = tk::master_equation(&h, &[decay(gamma).l], &rho0, t)[(1, 1)].re;
    assert!((res.rho_avg[(1, 1)].re - mean).abs() < 1e-12);
    assert!(
        (mean - oracle).abs() < 3.0 * se,
        "{mean} ± {se} vs {oracle}"
    );
}

#[test]
fn qutrit_choi_matches_liouvillian() {
    // Λ system with dephasing of the top level; every Choi entry is checked.
    let mut h = ComplexMatrix::zeros(3, 3);
    let (w1, w2) = (TWO_PI * 0.8e6, TWO_PI * 0.5e6);
    h[(0, 2)] = C64::new(0.5 * w1, 0.0);
    h[(2, 0)] = C64::new(0.5 * w1, 0.0);
    h[(1, 2)] = C64::new(0.5 * w2, 0.0);
    h[(2, 1)] = C64::new(0.5 * w2, 0.0);
    h[(2, 2)] = C64::new(TWO_PI * 0.2e6, 0.0);
    let g = TWO_PI * 0.15e6;
    let mut l1 = ComplexMatrix::zeros(3, 3);
    l1[(0, 2)] = C64::new(g.sqrt(), 0.0);
    let mut l2 = ComplexMatrix::identity(3);
    l2[(2, 2)] = C64::new(-1.0, 0.0);
    let l2 = l2.scale_real((0.5 * g).sqrt());
    let jumps = [
        JumpOperator::new(l1.clone(), "decay"),
        JumpOperator::new(l2.clone(), "dephasing"),
    ];
    let t = 1.5e-6;
    let n = 1000;
    let cfg = TrajectoryConfig::with_trajectories(n, 23);
    let ens = run_choi_ensemble(&schedule(h.clone(), t), &jumps, &cfg).unwrap();
    let oracle = tk::master_equation_choi(&h, &[l1, l2], t);
    let states = ens.states();
    let choi = ens.choi();
    for r in 0..9 {
        for c in 0..9 {
            let samples: Vec<C64> = states.iter().map(|s| s[r] * s[c].conj()).collect();
            let mean = samples.iter().sum::<C64>() / n as f64;
            let var = samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let diff = (choi[(r, c)] - oracle[(r, c)]).norm();
            assert!(diff <= 3.0 * se + 1e-9, "entry ({r},{c}): {diff} > 3·{se}");
        }
    }
    assert!((choi.trace().re - 1.0).abs() < 1e-10);
}

#[test]
fn jump_probability_per_short_step() {
    let gamma = TWO_PI * 1e6;
    let dt = 0.1 / gamma;
    let n = 20_000;
    let s = 0.5f64.sqrt();
    let psi0 = ket(&[(s, 0.0), (0.0, s)]);
    let cfg = TrajectoryConfig::with_trajectories(n, 99);
    let res = run_ensemble(
        &schedule(ComplexMatrix::zeros(2, 2), dt),
        &[decay(gamma)],
        &psi0,
        &cfg,
    )
    .unwrap();
    // Σ⟨L†L⟩ = γ/2; exact short-time probability ½(1 − e^{−γ dt}).
    let p = 0.5 * (1.0 - (-gamma * dt).exp());
    let observed = 1.0 - res.no_jump_fraction;
    assert!(
        (observed - p).abs() < 3.0 * tk::binomial_se(p, n),
        "{observed} vs {p}"
    );
}

#[test]
fn norm_never_grows_between_jumps() {
    let h = tk::random_hermitian(&mut tk::rng(8), 4, 1.0);
    let mut rng = tk::rng(9);
    let jumps: Vec<ComplexMatrix> = (0..2)
        .map(|_| tk::from_na(&tk::gaussian(&mut rng, 4, 4)).scale_real(0.4))
        .collect();
    let mut decay = ComplexMatrix::zeros(4, 4);
    for l in &jumps {
        decay += &l.adjoint().matmul(l);
    }
    let h_eff = &h - &decay.scale(C64::new(0.0, 0.5));
    let m = lawson_rk4_step_operator(&h_eff, 0.05);
    let mut psi = tk::from_na(&tk::gaussian(&mut rng, 4, 1)).into_vec();
    let n0 = norm_sqr(&psi);
    psi.iter_mut().for_each(|z| *z /= n0.sqrt());
    let mut last = 1.0;
    for _ in 0..500 {
        psi = m.matvec(&psi);
        let now = norm_sqr(&psi);
        assert!(now <= last + 1e-10);
        last = now;
    }
}

#[test]
fn identity_and_hadamard_extraction() {
    let basis = OperatorBasis::qubits(1);
    let cfg = TrajectoryConfig::with_trajectories(3, 0);
    let idle = schedule(ComplexMatrix::zeros(2, 2), 1e-6);
    let chi = extract_chi(&idle, &[], &basis, &cfg).unwrap();
    assert!(trace_distance(&chi, &ProcessMatrix::identity(&basis)).unwrap() < 1e-10);

    // exp(−i(π/2)(H − 1)) = H.
    let t = 1e-6;
    let h = (&gates::h() - &ComplexMatrix::identity(2)).scale_real(PI / (2.0 * t));
    let chi = extract_chi(&schedule(h, t), &[], &basis, &cfg).unwrap();
    let want = chi_from_kraus(&[gates::h()], &basis).unwrap();
    assert!(trace_distance(&chi, &want).unwrap() < 1e-8);
}

#[test]
fn decay_only_extraction_is_amplitude_damping() {
    let gamma = TWO_PI * 0.1e6;
    let t = 1.5e-6;
    let basis = OperatorBasis::qubits(1);
    let n = 2000;
    let cfg = TrajectoryConfig::with_trajectories(n, 31);
    let ens = run_choi_ensemble(
        &schedule(ComplexMatrix::zeros(2, 2), t),
        &[decay(gamma)],
        &cfg,
    )
    .unwrap();
    let want = chi_from_kraus(&gates::amplitude_damping(1.0 - (-gamma * t).exp()), &basis).unwrap();
    let (dist, se) = ens
        .jackknife(20, |choi| {
            Ok(trace_distance(&from_choi(choi, &basis)?, &want)?)
        })
        .unwrap();
    // The estimator is biased upward by its own noise; a few standard errors cover it.
    assert!(dist < 4.0 * se.max(1.0 / n as f64), "{dist} ± {se}");
}

#[test]
fn no_jump_estimates() {
    let basis = OperatorBasis::qubits(1);
    let cfg = TrajectoryConfig::default();
    let h = rabi(TWO_PI * 1e6);
    let closed = no_jump_estimate(&schedule(h.clone(), 0.4e-6), &[], &basis, &cfg).unwrap();
    assert!(closed.bound.abs() < 1e-12);
    let exact = extract_chi(
        &schedule(h, 0.4e-6),
        &[],
        &basis,
        &TrajectoryConfig::with_trajectories(1, 0),
    )
    .unwrap();
    assert!(trace_distance(&closed.chi, &exact).unwrap() < 1e-12);

    // γt = 0.01; the excited level carries half the Choi weight.
    let gamma = 1e4;
    let nj = no_jump_estimate(
        &schedule(ComplexMatrix::zeros(2, 2), 1e-6),
        &[decay(gamma)],
        &basis,
        &cfg,
    )
    .unwrap();
    let want = 0.5 * (1.0 - (-0.01f64).exp());
    assert!((nj.bound - want).abs() < 1e-12, "{} vs {want}", nj.bound);
    assert!((nj.survival + nj.bound - 1.0).abs() < 1e-15);
    assert!((nj.choi_unnormalized.trace().re - nj.survival).abs() < 1e-12);
}

#[test]
fn ensembles_are_deterministic_across_thread_counts() {
    let h = rabi(TWO_PI * 1e6);
    let s = schedule(h, 2e-6);
    let jumps = [decay(TWO_PI * 0.3e6)];
    let cfg = TrajectoryConfig::with_trajectories(64, 12345);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&s, &jumps, &excited(), &cfg).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.rho_avg, b.rho_avg);
    assert_eq!(a.final_states, b.final_states);
    assert_eq!(a.jump_counts, b.jump_counts);
    let other = run_ensemble(
        &s,
        &jumps,
        &excited(),
        &TrajectoryConfig {
            base_seed: 1,
            ..cfg
        },
    )
    .unwrap();
    assert_ne!(other.final_states, a.final_states);
}

#[test]
fn non_finite_jump_aborts_with_segment_label() {
    let mut l = ComplexMatrix::zeros(2, 2);
    l[(0, 1)] = C64::new(f64::NAN, 0.0);
    let s = schedule(ComplexMatrix::zeros(2, 2), 1e-6);
    let err = run_ensemble(
        &s,
        &[JumpOperator::new(l, "bad")],
        &excited(),
        &TrajectoryConfig::with_trajectories(2, 0),
    );
    assert!(matches!(err, Err(McwfError::NonFinite(label)) if label == "seg"));
}

#[test]
fn unnormalised_initial_state_is_rejected() {
    let s = schedule(ComplexMatrix::zeros(2, 2), 1e-6);
    let psi = ket(&[(1.0, 0.0), (1.0, 0.0)]);
    assert!(run_ensemble(&s, &[], &psi, &TrajectoryConfig::with_trajectories(1, 0)).is_err());
}

#[test]
fn instant_unitaries_apply_atomically() {
    let mut s = PulseSchedule::new(shape(2));
    s.push_unitary(gates::x(), "X").unwrap();
    s.push_segment(segment(ComplexMatrix::zeros(2, 2), 1e-6))
        .unwrap();
    let cfg = TrajectoryConfig::with_trajectories(1, 0);
    let (psi, _) = evolve_trajectory(&s, &[], &excited(), 0, &cfg).unwrap();
    assert!((psi[0].norm() - 1.0).abs() < 1e-12);
    assert!(s
        .push_unitary(
            ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]),
            "bad"
        )
        .is_err());
}
