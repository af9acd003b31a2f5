use procmat::circuit::{
    chi_via_concatenation, chi_via_full_simulation, simulate_cnot, toffoli_circuit, Circuit,
    CircuitError, Gate, GateKind, GateLibrary,
};
use procmat::mcwf::TrajectoryConfig;
use procmat::process::{trace_distance, OperatorBasis, ProcessMatrix};
use procmat::rydberg::{AtomParams, RegisterModel, SingleQubitGate};
use procmat::tensor::ComplexMatrix;
use procmat_testkit::{self as tk, gates};
use proptest::prelude::*;

fn full_library() -> GateLibrary {
    GateLibrary::ideal(&[
        GateKind::Cnot,
        GateKind::H,
        GateKind::T,
        GateKind::Tdg,
        GateKind::X,
    ])
    .unwrap()
}

/// Unitary of `gate` on `n` qubits built from Kronecker products and
/// classical permutations.
fn oracle_gate(gate: &Gate, n: usize) -> ComplexMatrix {
    match gate.kind {
        GateKind::Cnot => {
            let (c, t) = (gate.wires[0], gate.wires[1]);
            let (cb, tb) = (1 << (n - 1 - c), 1 << (n - 1 - t));
            gates::permutation(n, |x| if x & cb != 0 { x ^ tb } else { x })
        }
        kind => {
            let m = match kind {
                GateKind::H => gates::h(),
                GateKind::X => gates::x(),
                GateKind::T => SingleQubitGate::T.matrix(),
                GateKind::Tdg => SingleQubitGate::Tdg.matrix(),
                _ => unreachable!(),
            };
            let id = ComplexMatrix::identity(2);
            let mut acc = ComplexMatrix::identity(1);
            for w in 0..n {
                acc = tk::kron_na(&acc, if w == gate.wires[0] { &m } else { &id });
            }
            acc
        }
    }
}

fn oracle_unitary(c: &Circuit) -> ComplexMatrix {
    let n = c.n_wires();
    c.gates().fold(ComplexMatrix::identity(1 << n), |u, g| {
        oracle_gate(g, n).matmul(&u)
    })
}

#[test]
fn ideal_library_gives_the_toffoli() {
    let chi = chi_via_concatenation(&toffoli_circuit(), &full_library()).unwrap();
    let want = ProcessMatrix::from_unitary(&gates::toffoli(), &OperatorBasis::qubits(3)).unwrap();
    assert!(trace_distance(&chi, &want).unwrap() < 1e-8);
    assert!(tk::phase_distance(&oracle_unitary(&toffoli_circuit()), &gates::toffoli()) < 1e-12);
}

#[test]
fn moment_split_does_not_change_the_map() {
    let mut rng = tk::rng(3);
    let k = tk::random_kraus(&mut rng, 4, 3);
    let mut lib = full_library();
    lib.insert(
        GateKind::Cnot,
        procmat::process::chi_from_kraus(&k, &OperatorBasis::qubits(2)).unwrap(),
    );
    let c = toffoli_circuit();
    assert!(c.moments().len() < c.serialized().moments().len());
    let packed = chi_via_concatenation(&c, &lib).unwrap();
    let serial = chi_via_concatenation(&c.serialized(), &lib).unwrap();
    assert!(trace_distance(&packed, &serial).unwrap() < 1e-10);
}

#[test]
fn library_instances_cycle() {
    let x = ProcessMatrix::from_unitary(&gates::x(), &OperatorBasis::qubits(1)).unwrap();
    let id = ProcessMatrix::identity(&OperatorBasis::qubits(1));
    let mut lib = GateLibrary::new();
    lib.insert_many(GateKind::X, vec![x.clone(), id]);
    let mut c = Circuit::new(1);
    for _ in 0..3 {
        c.push(Gate::one(GateKind::X, 0)).unwrap();
    }
    // X, 1, X → identity.
    let chi = chi_via_concatenation(&c, &lib).unwrap();
    assert!(
        trace_distance(&chi, &ProcessMatrix::identity(&OperatorBasis::qubits(1))).unwrap() < 1e-12
    );
}

#[test]
fn wrong_library_dimension_is_reported() {
    let mut lib = full_library();
    lib.insert(
        GateKind::H,
        ProcessMatrix::identity(&OperatorBasis::qubits(2)),
    );
    assert!(matches!(
        chi_via_concatenation(&toffoli_circuit(), &lib),
        Err(CircuitError::LibraryDimension { .. })
    ));
}

#[test]
fn one_cnot_circuit_equals_the_standalone_cnot() {
    let reg = RegisterModel::effective3(2, AtomParams::table1()).unwrap();
    let cfg = TrajectoryConfig::with_trajectories(100, 8);
    let mut c = Circuit::new(2);
    c.push(Gate::cnot(0, 1)).unwrap();
    let cir = chi_via_full_simulation(&c, &reg, &cfg).unwrap();
    let alone = simulate_cnot(&reg, &cfg).unwrap();
    assert_eq!(cir.chi, alone.chi);
    assert_eq!(cir.leakage, alone.leakage);
}

#[test]
fn ideal_register_runs_the_toffoli_circuit() {
    let reg = RegisterModel::effective3(3, AtomParams::table1().closed())
        .unwrap()
        .ideal_limit()
        .unwrap();
    let cfg = TrajectoryConfig::with_trajectories(1, 0);
    let sim = chi_via_full_simulation(&toffoli_circuit(), &reg, &cfg).unwrap();
    let want = ProcessMatrix::from_unitary(&gates::toffoli(), &OperatorBasis::qubits(3)).unwrap();
    assert!(trace_distance(&sim.chi, &want).unwrap() < 1e-6);
}

fn gate_strategy() -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0usize..3, 0usize..4).prop_map(|(w, k)| Gate::one(
            [GateKind::H, GateKind::T, GateKind::Tdg, GateKind::X][k],
            w
        )),
        (0usize..3, 1usize..3).prop_map(|(c, off)| Gate::cnot(c, (c + off) % 3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_circuits_match_the_unitary_oracle(gs in prop::collection::vec(gate_strategy(), 1..12)) {
        let mut c = Circuit::new(3);
        for g in gs {
            c.push(g).unwrap();
        }
        let chi = chi_via_concatenation(&c, &full_library()).unwrap();
        let want = ProcessMatrix::from_unitary(&oracle_unitary(&c), &OperatorBasis::qubits(3)).unwrap();
        prop_assert!(trace_distance(&chi, &want).unwrap() < 1e-9);
        prop_assert!(tk::phase_distance(&c.unitary(), &oracle_unitary(&c)) < 1e-12);
    }
}
