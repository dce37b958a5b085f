//! The error-detecting layer under the resource state.

use std::fmt::Debug;

use crate::lattice::{ChainClass, DefectSpec, RhgLattice};
use crate::pauli::SinglePauli;
use crate::{Error, Result};

/// What the client needs from the code carried by the resource qubits:
/// a classification of the residual error and a minimum-weight logical
/// string for targeted attacks.
pub trait ResourceCode: Send + Sync + Debug {
    fn num_qubits(&self) -> usize;

    fn distance(&self) -> usize;

    /// Classifies a residual Pauli error given as `(code qubit, factor)`
    /// pairs and returns the class with the number of flipped checks.
    fn classify(&self, residual: &[(usize, SinglePauli)]) -> Result<(ChainClass, usize)>;

    /// Support of a shortest Logical string.
    fn logical_chain(&self) -> Result<Vec<usize>>;

    fn describe(&self) -> String;

    fn as_rhg(&self) -> Option<&RhgCode> {
        None
    }
}

/// Bare `|+⟩` qubits read out in the X basis: any Z content corrupts the
/// result and nothing is detected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unencoded {
    pub qubits: usize,
}

impl ResourceCode for Unencoded {
    fn num_qubits(&self) -> usize {
        self.qubits
    }

    fn distance(&self) -> usize {
        1
    }

    fn classify(&self, residual: &[(usize, SinglePauli)]) -> Result<(ChainClass, usize)> {
        let mut logical = false;
        for &(q, f) in residual {
            if q >= self.qubits {
                return Err(Error::UnknownQubit(q));
            }
            logical |= f.z();
        }
        Ok((if logical { ChainClass::Logical } else { ChainClass::Trivial }, 0))
    }

    fn logical_chain(&self) -> Result<Vec<usize>> {
        if self.qubits == 0 {
            return Err(Error::MissingLogicalReps);
        }
        Ok(vec![0])
    }

    fn describe(&self) -> String {
        format!("unencoded({})", self.qubits)
    }
}

/// The RHG graph state with defect tubes.
///
/// Z content is classified directly. An X factor on qubit `v` acts on the
/// graph state like Z on the neighbours of `v`, so it is rewritten that way
/// before classification; for active qubits this is always Trivial.
#[derive(Clone, Debug)]
pub struct RhgCode {
    lattice: RhgLattice,
    defects: DefectSpec,
    distance: usize,
    chain: Vec<usize>,
}

impl RhgCode {
    pub fn new(lattice: RhgLattice, defects: DefectSpec) -> Result<Self> {
        let reps = defects.logical_reps()?;
        let report = reps.distances();
        let distance = report.min().ok_or(Error::MissingLogicalReps)?;
        let chain = [&reps.connecting, &reps.encircling]
            .into_iter()
            .flatten()
            .min_by_key(|c| c.weight())
            .ok_or(Error::MissingLogicalReps)?
            .qubits()
            .to_vec();
        Ok(RhgCode { lattice, defects, distance, chain })
    }

    pub fn lattice(&self) -> &RhgLattice {
        &self.lattice
    }

    pub fn defects(&self) -> &DefectSpec {
        &self.defects
    }

    /// Z support equivalent to the residual on the graph state.
    pub fn z_support(&self, residual: &[(usize, SinglePauli)]) -> Result<Vec<usize>> {
        let n = self.lattice.num_qubits();
        let mut z = Vec::with_capacity(residual.len());
        for &(q, f) in residual {
            if q >= n {
                return Err(Error::UnknownQubit(q));
            }
            if f.z() {
                z.push(q);
            }
            if f.x() {
                z.extend(self.lattice.neighbours(q));
            }
        }
        Ok(z)
    }
}

impl ResourceCode for RhgCode {
    fn num_qubits(&self) -> usize {
        self.lattice.num_qubits()
    }

    fn distance(&self) -> usize {
        self.distance
    }

    fn classify(&self, residual: &[(usize, SinglePauli)]) -> Result<(ChainClass, usize)> {
        self.defects.classify_qubits(&self.z_support(residual)?)
    }

    fn logical_chain(&self) -> Result<Vec<usize>> {
        Ok(self.chain.clone())
    }

    fn describe(&self) -> String {
        let [x, y, z] = self.lattice.dims();
        format!("rhg({x}x{y}x{z}, {} tubes, d={})", self.defects.tubes().len(), self.distance)
    }

    fn as_rhg(&self) -> Option<&RhgCode> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::CanonicalGeometry;

    #[test]
    fn unencoded_reads_z_content() {
        let code = Unencoded { qubits: 2 };
        assert_eq!(code.classify(&[(0, SinglePauli::X)]).unwrap().0, ChainClass::Trivial);
        assert_eq!(code.classify(&[(1, SinglePauli::XZ)]).unwrap().0, ChainClass::Logical);
        assert!(code.classify(&[(2, SinglePauli::Z)]).is_err());
    }

    #[test]
    fn rhg_chain_is_logical() {
        let (lattice, defects) = CanonicalGeometry::for_distance(3).unwrap().build().unwrap();
        let code = RhgCode::new(lattice, defects).unwrap();
        assert_eq!(code.distance(), 3);
        let chain = code.logical_chain().unwrap();
        assert_eq!(chain.len(), 3);
        let residual: Vec<_> = chain.iter().map(|&q| (q, SinglePauli::Z)).collect();
        assert_eq!(code.classify(&residual).unwrap(), (ChainClass::Logical, 0));
    }

    #[test]
    fn x_on_active_qubits_is_harmless() {
        let (lattice, defects) = CanonicalGeometry::for_distance(2).unwrap().build().unwrap();
        let code = RhgCode::new(lattice, defects).unwrap();
        for q in 0..code.num_qubits() {
            if code.defects().is_active(q) {
                assert_eq!(code.classify(&[(q, SinglePauli::X)]).unwrap().0, ChainClass::Trivial, "qubit {q}");
            }
        }
    }
}
