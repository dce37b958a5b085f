//! Clifford + measurement circuits understood by both simulators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn from_minus(minus: bool) -> Self {
        if minus {
            Outcome::Minus
        } else {
            Outcome::Plus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Outcome::Minus
    }

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    CZ(usize, usize),
    CX(usize, usize),
    Measure(usize, Basis),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => {
                vec![q]
            }
            Gate::Measure(q, _) => vec![q],
            Gate::CZ(a, b) | Gate::CX(a, b) => vec![a, b],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_measurements(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Measure(..))).count()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qs = gate.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= self.n) {
            return Err(Error::OutOfRange { index: q, len: self.n });
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::InvalidArgument(format!("two-qubit gate on a single qubit {}", qs[0])));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn measure_all(&mut self, basis: Basis) {
        for q in 0..self.n {
            self.gates.push(Gate::Measure(q, basis));
        }
    }

    /// `depth` gates drawn uniformly from the nine gate kinds, with random
    /// operands and measurement bases.
    pub fn random<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("random circuit needs at least one qubit".into()));
        }
        let mut circuit = Circuit::new(n);
        let kinds = if n >= 2 { 9 } else { 7 };
        for _ in 0..depth {
            let a = rng.random_range(0..n);
            let gate = match rng.random_range(0..kinds) {
                0 => Gate::H(a),
                1 => Gate::S(a),
                2 => Gate::Sdg(a),
                3 => Gate::X(a),
                4 => Gate::Y(a),
                5 => Gate::Z(a),
                6 => Gate::Measure(a, Basis::ALL[rng.random_range(0..3)]),
                k => {
                    let mut b = rng.random_range(0..n - 1);
                    if b >= a {
                        b += 1;
                    }
                    if k == 7 {
                        Gate::CZ(a, b)
                    } else {
                        Gate::CX(a, b)
                    }
                }
            };
            circuit.gates.push(gate);
        }
        Ok(circuit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn push_validates_operands() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::H(2)).is_err());
        assert!(c.push(Gate::CX(1, 1)).is_err());
        c.push(Gate::CZ(0, 1)).unwrap();
        c.measure_all(Basis::Z);
        assert_eq!(c.num_measurements(), 2);
    }

    #[test]
    fn random_circuits_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=6 {
            let c = Circuit::random(n, 40, &mut rng).unwrap();
            assert_eq!(c.gates().len(), 40);
            for g in c.gates() {
                let qs = g.qubits();
                assert!(qs.iter().all(|&q| q < n));
                if qs.len() == 2 {
                    assert_ne!(qs[0], qs[1]);
                }
            }
        }
    }
}
