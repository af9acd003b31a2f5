use procmat::process::{
    chi_from_kraus, embed, from_choi, parallel_concat, pauli_matrices, serial_concat,
    serial_concat_structure, structure_constants, to_choi, trace_distance, BasisKind,
    OperatorBasis, ProcessMatrix, Tolerance,
};
use procmat::tensor::{ComplexMatrix, SubsystemShape};
use procmat::C64;
use procmat_testkit::{self as tk, gates};
use proptest::prelude::*;
use rand::Rng;

fn qubits(n: usize) -> OperatorBasis {
    OperatorBasis::qubits(n)
}

fn chi(kraus: &[ComplexMatrix], basis: &OperatorBasis) -> ProcessMatrix {
    chi_from_kraus(kraus, basis).unwrap()
}

/// Trace distance computed from the Choi oracle and nalgebra's SVD.
fn oracle_distance(p: &ProcessMatrix, kraus: &[ComplexMatrix]) -> f64 {
    tk::half_trace_norm_diff(&to_choi(p), &tk::choi_from_kraus(kraus))
}

fn random_channel(rng: &mut impl Rng, n_qubits: usize) -> Vec<ComplexMatrix> {
    let rank = rng.random_range(1..=4);
    tk::random_kraus(rng, 1 << n_qubits, rank)
}

/// Applies the Kraus map to every matrix unit and assembles the Choi state.
fn choi_by_action(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let d = kraus[0].rows();
    let mut out = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = ComplexMatrix::zeros(d, d);
            e[(i, j)] = C64::new(1.0, 0.0);
            let mut image = ComplexMatrix::zeros(d, d);
            for k in kraus {
                image += &k.matmul(&e).matmul(&k.adjoint());
            }
            for a in 0..d {
                for b in 0..d {
                    out[(a * d + i, b * d + j)] += image[(a, b)] / d as f64;
                }
            }
        }
    }
    out
}

#[test]
fn kraus_chi_matches_choi_oracle() {
    let mut rng = tk::rng(1);
    for n in [1, 2] {
        for _ in 0..10 {
            let k = random_channel(&mut rng, n);
            let p = chi(&k, &qubits(n));
            assert!(oracle_distance(&p, &k) < 1e-12);
            assert!(to_choi(&p).max_abs_diff(&choi_by_action(&k)) < 1e-12);
            p.validate(Tolerance::Exact).unwrap();
            assert!((p.trace() - 1.0).abs() < 1e-12);
            assert!(p.trace_preserving());
        }
    }
}

#[test]
fn rank_is_bounded_by_kraus_count() {
    let mut rng = tk::rng(2);
    for rank in 1..=3 {
        let k = tk::random_kraus(&mut rng, 4, rank);
        let ev = tk::eigenvalues(chi(&k, &qubits(2)).chi());
        let nonzero = ev.iter().filter(|&&x| x > 1e-10).count();
        assert_eq!(nonzero, rank);
    }
}

#[test]
fn depolarizing_is_diagonal_in_pauli_basis() {
    let p = 0.5;
    let k = gates::depolarizing(p);
    let pauli = chi(
        &k,
        &OperatorBasis::pauli(SubsystemShape::uniform(2, 1).unwrap()),
    );
    let want = [1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0];
    for r in 0..4 {
        for col in 0..4 {
            let target = if r == col { want[r] } else { 0.0 };
            assert!((pauli.chi()[(r, col)] - C64::new(target, 0.0)).norm() < 1e-12);
        }
    }
    assert!(to_choi(&pauli).max_abs_diff(&choi_by_action(&k)) < 1e-12);
}

#[test]
fn sigma_z_choi() {
    let z = &pauli_matrices()[3];
    let p = chi(std::slice::from_ref(z), &qubits(1));
    let s = 1.0 / 2f64.sqrt();
    // (σz ⊗ 1)|Φ⁺⟩ in output·D + input order.
    let v = [
        C64::new(s, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-s, 0.0),
    ];
    assert!(to_choi(&p).max_abs_diff(&ComplexMatrix::outer(&v, &v)) < 1e-15);
}

#[test]
fn sigma_x_twice_is_identity() {
    let x = chi(&[gates::x()], &qubits(1));
    let id = ProcessMatrix::identity(&qubits(1));
    assert!(trace_distance(&serial_concat(&x, &x).unwrap(), &id).unwrap() < 1e-10);
    assert!((trace_distance(&x, &id).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn random_unitaries_compose() {
    let mut rng = tk::rng(3);
    for _ in 0..10 {
        let u = tk::random_unitary(&mut rng, 4);
        let v = tk::random_unitary(&mut rng, 4);
        let got = serial_concat(
            &chi(std::slice::from_ref(&u), &qubits(2)),
            &chi(std::slice::from_ref(&v), &qubits(2)),
        )
        .unwrap();
        assert!(oracle_distance(&got, &[v.matmul(&u)]) < 1e-10);
    }
}

#[test]
fn amplitude_damping_composes() {
    let (g1, g2) = (0.3, 0.45);
    let a = chi(&gates::amplitude_damping(g1), &qubits(1));
    let b = chi(&gates::amplitude_damping(g2), &qubits(1));
    let want = chi(
        &gates::amplitude_damping(1.0 - (1.0 - g1) * (1.0 - g2)),
        &qubits(1),
    );
    assert!(trace_distance(&serial_concat(&a, &b).unwrap(), &want).unwrap() < 1e-12);
}

#[test]
fn parallel_examples() {
    let id1 = ProcessMatrix::identity(&qubits(1));
    let (both, wires) = parallel_concat(&id1, &[0], &id1, &[1]).unwrap();
    assert_eq!(wires, vec![0, 1]);
    assert!(trace_distance(&both, &ProcessMatrix::identity(&qubits(2))).unwrap() < 1e-12);

    let h = chi(&[gates::h()], &qubits(1));
    let (hi, _) = parallel_concat(&h, &[0], &id1, &[1]).unwrap();
    assert!(
        oracle_distance(
            &hi,
            &[tk::kron_na(&gates::h(), &ComplexMatrix::identity(2))]
        ) < 1e-12
    );
    // Listed in reverse wire order: the result is still register-ordered.
    let (ih, w) = parallel_concat(&h, &[1], &id1, &[0]).unwrap();
    assert_eq!(w, vec![0, 1]);
    assert!(
        oracle_distance(
            &ih,
            &[tk::kron_na(&ComplexMatrix::identity(2), &gates::h())]
        ) < 1e-12
    );

    assert!(parallel_concat(&h, &[0], &id1, &[0]).is_err());
}

#[test]
fn embed_examples() {
    let reg = SubsystemShape::uniform(2, 3).unwrap();
    let id3 = ProcessMatrix::identity(&qubits(3));
    for pos in 0..3 {
        let e = embed(&ProcessMatrix::identity(&qubits(1)), &reg, &[pos]).unwrap();
        assert!(trace_distance(&e, &id3).unwrap() < 1e-12);
    }
    let cnot = chi(&[gates::cnot()], &qubits(2));
    let e = embed(&cnot, &reg, &[1, 2]).unwrap();
    assert!(
        oracle_distance(
            &e,
            &[tk::kron_na(&ComplexMatrix::identity(2), &gates::cnot())]
        ) < 1e-12
    );
    // Control on wire 2, target on wire 0.
    let reversed = gates::permutation(3, |x| if x & 1 != 0 { x ^ 0b100 } else { x });
    let e = embed(&cnot, &reg, &[2, 0]).unwrap();
    assert!(oracle_distance(&e, &[reversed]) < 1e-12);
    assert!(embed(&cnot, &reg, &[1, 1]).is_err());
    assert!(embed(&cnot, &reg, &[1, 3]).is_err());
}

#[test]
fn structure_constants_reconstruct_products() {
    let mut rng = tk::rng(5);
    for kind in [BasisKind::MatrixUnit, BasisKind::PauliLike] {
        for shape in [
            SubsystemShape::uniform(2, 2).unwrap(),
            SubsystemShape::new(vec![3]).unwrap(),
        ] {
            let basis = OperatorBasis::new(shape, kind);
            let sc = structure_constants(&basis);
            for _ in 0..25 {
                let p = rng.random_range(0..basis.len());
                let m = rng.random_range(0..basis.len());
                let mut sum = ComplexMatrix::zeros(basis.dim(), basis.dim());
                for &(r, c) in sc.terms(p, m) {
                    sum += &basis.element(r).scale(c);
                }
                assert!(sum.max_abs_diff(&basis.element(p).matmul(&basis.element(m))) < 1e-12);
                if kind == BasisKind::MatrixUnit {
                    assert!(sc.terms(p, m).len() <= 1);
                }
            }
        }
    }
}

#[test]
fn pauli_basis_is_orthogonal() {
    let basis = OperatorBasis::pauli(SubsystemShape::new(vec![3]).unwrap());
    for m in 0..basis.len() {
        for n in 0..basis.len() {
            let ip = basis.element(m).adjoint().matmul(&basis.element(n)).trace();
            let want = if m == n { 3.0 } else { 0.0 };
            assert!((ip - C64::new(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn json_round_trip_is_bit_exact() {
    let mut rng = tk::rng(6);
    for kind in [BasisKind::MatrixUnit, BasisKind::PauliLike] {
        let p = chi(&random_channel(&mut rng, 2), &qubits(2))
            .to_kind(kind)
            .with_metadata("label", "x");
        let back = ProcessMatrix::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json(), p.to_json());
    }
}

#[test]
fn choi_round_trip() {
    let mut rng = tk::rng(7);
    let p = chi(&random_channel(&mut rng, 2), &qubits(2)).to_kind(BasisKind::PauliLike);
    let back = from_choi(&to_choi(&p), p.basis()).unwrap();
    assert!(back.chi().max_abs_diff(p.chi()) < 1e-12);
}

#[test]
fn trace_distance_of_non_tp_maps() {
    // Half the |1⟩ population leaks to a third level, seen as a qubit map.
    let eps: f64 = 0.3;
    let mut k0 = ComplexMatrix::identity(3);
    k0[(1, 1)] = C64::new((1.0 - eps).sqrt(), 0.0);
    let mut k1 = ComplexMatrix::zeros(3, 3);
    k1[(2, 1)] = C64::new(eps.sqrt(), 0.0);
    let p = chi(
        &[k0, k1],
        &OperatorBasis::matrix_units(SubsystemShape::new(vec![3]).unwrap()),
    );
    let (q, leak) = p.project_to_qubit_subspace();
    assert!((q.trace() - (1.0 - eps / 2.0)).abs() < 1e-12);
    assert!((leak - (p.trace() - q.trace())).abs() < 1e-15);
    assert!(!q.trace_preserving());
}

const CHANNELS: usize = 200;

#[test]
fn serial_and_parallel_match_kraus_oracles() {
    let mut rng = tk::rng(8);
    let mut worst: f64 = 0.0;
    for i in 0..CHANNELS / 2 {
        let n = 1 + i % 2;
        let (a, b) = (random_channel(&mut rng, n), random_channel(&mut rng, n));
        let s = serial_concat(&chi(&a, &qubits(n)), &chi(&b, &qubits(n))).unwrap();
        worst = worst.max(oracle_distance(&s, &tk::compose_kraus(&a, &b)));
        let nb = 1 + (i / 2) % 2;
        let c = random_channel(&mut rng, nb);
        let wires_b: Vec<usize> = (n..n + nb).collect();
        let wires_a: Vec<usize> = (0..n).collect();
        let (par, _) = parallel_concat(
            &chi(&a, &qubits(n)),
            &wires_a,
            &chi(&c, &qubits(nb)),
            &wires_b,
        )
        .unwrap();
        worst = worst.max(oracle_distance(&par, &tk::tensor_kraus(&a, &c)));
    }
    assert!(worst < 1e-10, "{worst}");
}

fn two_qubit_channel(seed: u64) -> ProcessMatrix {
    let mut rng = tk::rng(seed);
    chi(&random_channel(&mut rng, 2), &qubits(2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn serial_concat_is_associative(seed in any::<u64>()) {
        let (a, b, c) = (two_qubit_channel(seed), two_qubit_channel(seed ^ 1), two_qubit_channel(seed ^ 2));
        let left = serial_concat(&serial_concat(&a, &b).unwrap(), &c).unwrap();
        let right = serial_concat(&a, &serial_concat(&b, &c).unwrap()).unwrap();
        prop_assert!(trace_distance(&left, &right).unwrap() < 1e-10);
    }

    #[test]
    fn structure_route_equals_superoperator_route(seed in any::<u64>(), pauli in any::<bool>()) {
        let kind = if pauli { BasisKind::PauliLike } else { BasisKind::MatrixUnit };
        let (a, b) = (two_qubit_channel(seed).to_kind(kind), two_qubit_channel(seed ^ 9).to_kind(kind));
        let sc = structure_constants(a.basis());
        let via_sc = serial_concat_structure(&a, &b, &sc).unwrap();
        prop_assert!(trace_distance(&via_sc, &serial_concat(&a, &b).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn interchange_law(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let ks: Vec<Vec<ComplexMatrix>> = (0..4).map(|_| random_channel(&mut rng, 1)).collect();
        let c: Vec<ProcessMatrix> = ks.iter().map(|k| chi(k, &qubits(1))).collect();
        let (a1, a2, b1, b2) = (&c[0], &c[1], &c[2], &c[3]);
        let left = parallel_concat(&serial_concat(a1, a2).unwrap(), &[0], &serial_concat(b1, b2).unwrap(), &[1]).unwrap().0;
        let first = parallel_concat(a1, &[0], b1, &[1]).unwrap().0;
        let second = parallel_concat(a2, &[0], b2, &[1]).unwrap().0;
        let right = serial_concat(&first, &second).unwrap();
        prop_assert!(trace_distance(&left, &right).unwrap() < 1e-10);
    }

    #[test]
    fn trace_distance_is_bounded_and_symmetric(seed in any::<u64>()) {
        let (a, b) = (two_qubit_channel(seed), two_qubit_channel(seed ^ 3));
        let t = trace_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-10).contains(&t));
        prop_assert!((t - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn trace_distance_is_basis_independent(seed in any::<u64>()) {
        let mut rng = tk::rng(seed);
        let u = chi(&[tk::random_unitary(&mut rng, 4)], &qubits(2));
        let v = chi(&[tk::random_unitary(&mut rng, 4)], &qubits(2));
        let mu = trace_distance(&u, &v).unwrap();
        let pl = trace_distance(&u.to_kind(BasisKind::PauliLike), &v.to_kind(BasisKind::PauliLike)).unwrap();
        prop_assert!((mu - pl).abs() < 1e-10);
    }
}
