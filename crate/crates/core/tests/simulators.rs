//! Stabilizer tableau against the state-vector engine.

use blindver::circuit::{Basis, Circuit, Gate};
use blindver::dense::{circuit_distribution, total_variation, StateVector};
use blindver::lattice::{Boundary, RhgLattice};
use blindver::pauli::{PauliString, Phase, SinglePauli};
use blindver::stab::{outcome_distribution, prepare_graph_state, Tableau};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_expectation(psi: &StateVector, p: &PauliString) -> f64 {
    let mut image = psi.clone();
    image.apply_pauli(p).unwrap();
    psi.amplitudes().dotc(image.amplitudes()).re
}

// i^c (XZ)^c with c factors XZ is the Hermitian Y^c
fn hermitian(p: PauliString) -> PauliString {
    let (_, _, c) = p.counts();
    p.with_phase(Phase::new(c as u32))
}

fn graph_state_vector(n: usize, edges: &[(usize, usize)]) -> StateVector {
    let mut psi = StateVector::zero(n).unwrap();
    for q in 0..n {
        psi.apply_unitary(&Gate::H(q)).unwrap();
    }
    for &(a, b) in edges {
        psi.apply_unitary(&Gate::CZ(a, b)).unwrap();
    }
    psi
}

fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.4) {
                edges.push((a, b));
            }
        }
    }
    edges
}

fn stabilizer_of(n: usize, v: usize, edges: &[(usize, usize)]) -> PauliString {
    let mut k = PauliString::single(n, v, SinglePauli::X).unwrap();
    for &(a, b) in edges {
        let w = if a == v {
            b
        } else if b == v {
            a
        } else {
            continue;
        };
        k.set_factor(w, SinglePauli::Z).unwrap();
    }
    k
}

fn check_symplectic(t: &Tableau) {
    let (stab, destab) = (t.stabilizers(), t.destabilizers());
    for i in 0..stab.len() {
        for j in 0..stab.len() {
            assert!(stab[i].commutes_with(&stab[j]).unwrap());
            assert_eq!(destab[i].commutes_with(&stab[j]).unwrap(), i != j, "pair ({i}, {j})");
            if i != j {
                assert!(destab[i].commutes_with(&destab[j]).unwrap());
            }
        }
    }
}

#[test]
fn lattice_subcell_graph_state_matches_dense() {
    // the six faces of one cell plus the four edges bonded to one face
    let lattice = RhgLattice::build_with([1, 1, 1], Boundary::Open).unwrap();
    let faces = lattice.cell_faces([0, 0, 0]).unwrap();
    let mut qubits = faces.clone();
    qubits.extend(lattice.neighbours(faces[0]));
    assert_eq!(qubits.len(), 10);
    let local = |q: usize| qubits.iter().position(|&r| r == q);
    let edges: Vec<(usize, usize)> =
        lattice.graph_edges().into_iter().filter_map(|(a, b)| Some((local(a)?, local(b)?))).collect();
    // each edge bonds to the chosen face and one side face of the cell
    assert_eq!(edges.len(), 8);
    let n = qubits.len();
    let tableau = prepare_graph_state(n, &edges).unwrap();
    let psi = graph_state_vector(n, &edges);
    for v in 0..n {
        let k = stabilizer_of(n, v, &edges);
        assert_eq!(tableau.expectation(&k).unwrap(), 1.0);
        assert!((dense_expectation(&psi, &k) - 1.0).abs() < 1e-10, "K_{v}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let p = hermitian(PauliString::random(n, &mut rng));
        let (a, b) = (tableau.expectation(&p).unwrap(), dense_expectation(&psi, &p));
        assert!((a - b).abs() < 1e-10, "{p}: tableau {a}, dense {b}");
    }
}

#[test]
fn cell_syndrome_operator_stabilizes_the_lattice_state() {
    let lattice = RhgLattice::build_with([2, 1, 1], Boundary::Open).unwrap();
    let n = lattice.num_qubits();
    let tableau = prepare_graph_state(n, &lattice.graph_edges()).unwrap();
    for x in 0..2 {
        let mut op = PauliString::identity(n);
        for q in lattice.cell_faces([x, 0, 0]).unwrap() {
            op.set_factor(q, SinglePauli::X).unwrap();
        }
        assert_eq!(tableau.expectation(&op).unwrap(), 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn exact_distributions_agree(n in 1usize..=6, depth in 1usize..=40, seed in any::<u64>()) {
        let c = Circuit::random(n, depth, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let stab = outcome_distribution(&c).unwrap();
        let dense = circuit_distribution(&c).unwrap();
        prop_assert!(total_variation(&stab, &dense) < 1e-9);
    }

    #[test]
    fn sampled_records_are_possible(n in 1usize..=6, depth in 1usize..=40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Circuit::random(n, depth, &mut rng).unwrap();
        for q in 0..n {
            c.push(Gate::Measure(q, Basis::ALL[rng.random_range(0..3)])).unwrap();
        }
        let dense = circuit_distribution(&c).unwrap();
        for _ in 0..20 {
            let record = Tableau::new(n).run(&c, &mut rng).unwrap();
            prop_assert!(dense.get(&record).is_some_and(|&p| p > 1e-9));
        }
    }

    #[test]
    fn tableau_stays_symplectic(n in 1usize..=70, depth in 1usize..=300, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Circuit::random(n, depth, &mut rng).unwrap();
        let mut t = Tableau::new(n);
        t.run(&c, &mut rng).unwrap();
        check_symplectic(&t);
        prop_assert_eq!(Tableau::from_bytes(&t.to_bytes()).unwrap().to_bytes(), t.to_bytes());
    }

    #[test]
    fn measured_operator_joins_the_stabilizer(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tableau::new(n);
        t.run(&Circuit::random(n, 30, &mut rng).unwrap(), &mut rng).unwrap();
        let a = rng.random_range(0..n);
        let basis = Basis::ALL[rng.random_range(0..3)];
        let o = t.measure(a, basis, &mut rng).unwrap();
        let factor = match basis {
            Basis::X => SinglePauli::X,
            Basis::Z => SinglePauli::Z,
            Basis::Y => SinglePauli::XZ,
        };
        let mut p = PauliString::single(n, a, factor).unwrap();
        if basis == Basis::Y {
            // XZ = -iY
            p = p.with_phase(Phase::new(1));
        }
        prop_assert_eq!(t.expectation(&p).unwrap(), o.sign() as f64);
        prop_assert_eq!(t.peek(a, basis).unwrap(), Some(o));
    }

    #[test]
    fn graph_state_parities_hold(n in 2usize..=9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_graph(n, &mut rng);
        let v = rng.random_range(0..n);
        let mut t = prepare_graph_state(n, &edges).unwrap();
        let mut parity = t.measure(v, Basis::X, &mut rng).unwrap().is_minus();
        for w in 0..n {
            if w != v {
                let o = t.measure(w, Basis::Z, &mut rng).unwrap();
                if edges.contains(&(v.min(w), v.max(w))) {
                    parity ^= o.is_minus();
                }
            }
        }
        prop_assert!(!parity);
    }

    #[test]
    fn graph_states_match_dense(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_graph(n, &mut rng);
        let t = prepare_graph_state(n, &edges).unwrap();
        let psi = graph_state_vector(n, &edges);
        for _ in 0..20 {
            let p = hermitian(PauliString::random(n, &mut rng));
            prop_assert!((t.expectation(&p).unwrap() - dense_expectation(&psi, &p)).abs() < 1e-10);
        }
    }
}
