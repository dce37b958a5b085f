//! Exact dense linear algebra on at most ten qubits.
//!
//! Qubit `j` is bit `j` of the computational basis index, so a Pauli string
//! is the Kronecker product `M_{n-1} ⊗ … ⊗ M_0`. Everything here is written
//! straight from the matrix definitions and serves as the reference the
//! faster Pauli-frame and tableau code is tested against.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::circuit::{Basis, Circuit, Gate, Outcome};
use crate::pauli::{PauliString, Phase, SinglePauli};
use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Largest qubit count the dense engine accepts.
pub const MAX_QUBITS: usize = 10;
/// Largest qubit count for exact sums over all `4^N` byproducts.
pub const MAX_TWIRL_QUBITS: usize = 6;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

fn check_size(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::TooLarge { n, max });
    }
    Ok(())
}

pub fn phase_value(phase: Phase) -> Complex64 {
    [C1, CI, -C1, -CI][phase.exponent() as usize]
}

fn single_matrix(f: SinglePauli) -> CMat {
    let (x, z) = (CMat::from_row_slice(2, 2, &[C0, C1, C1, C0]), CMat::from_row_slice(2, 2, &[C1, C0, C0, -C1]));
    match f {
        SinglePauli::I => CMat::identity(2, 2),
        SinglePauli::X => x,
        SinglePauli::Z => z,
        SinglePauli::XZ => x * z,
    }
}

/// Dense matrix of `p` including its phase.
pub fn pauli_matrix(p: &PauliString) -> Result<CMat> {
    check_size(p.num_qubits(), MAX_QUBITS)?;
    let mut m = CMat::identity(1, 1);
    for j in (0..p.num_qubits()).rev() {
        m = m.kronecker(&single_matrix(p.factor(j)?));
    }
    Ok(m * phase_value(p.phase()))
}

/// Pauli string number `index` of `4^n`: bit `j` is `x_j`, bit `n + j` is
/// `z_j`, phase `+1`.
pub fn pauli_from_index(n: usize, index: usize) -> PauliString {
    let xs: Vec<bool> = (0..n).map(|j| (index >> j) & 1 == 1).collect();
    let zs: Vec<bool> = (0..n).map(|j| (index >> (n + j)) & 1 == 1).collect();
    PauliString::from_bits(&xs, &zs, Phase::ONE).expect("equal lengths")
}

/// A matrix with one nonzero entry per column: `M[perm[b], b] = coef[b]`.
#[derive(Clone, Debug)]
pub struct Monomial {
    perm: Vec<usize>,
    coef: Vec<Complex64>,
}

impl Monomial {
    pub fn from_dense(m: &CMat) -> Result<Self> {
        let dim = m.ncols();
        let mut perm = Vec::with_capacity(dim);
        let mut coef = Vec::with_capacity(dim);
        for b in 0..dim {
            let col = m.column(b);
            let rows: Vec<usize> = (0..dim).filter(|&r| col[r].norm() > 1e-14).collect();
            if rows.len() != 1 {
                return Err(Error::InvalidArgument("matrix is not monomial".into()));
            }
            perm.push(rows[0]);
            coef.push(col[rows[0]]);
        }
        Ok(Monomial { perm, coef })
    }

    pub fn pauli(p: &PauliString) -> Result<Self> {
        Monomial::from_dense(&pauli_matrix(p)?)
    }

    /// `self · other`.
    pub fn compose(&self, other: &Monomial) -> Monomial {
        let perm = other.perm.iter().map(|&r| self.perm[r]).collect();
        let coef = other.perm.iter().zip(&other.coef).map(|(&r, &c)| self.coef[r] * c).collect();
        Monomial { perm, coef }
    }

    pub fn adjoint(&self) -> Monomial {
        let mut perm = vec![0; self.perm.len()];
        let mut coef = vec![C0; self.perm.len()];
        for (b, (&r, &c)) in self.perm.iter().zip(&self.coef).enumerate() {
            perm[r] = b;
            coef[r] = c.conj();
        }
        Monomial { perm, coef }
    }

    /// `self · m`.
    pub fn left_mul(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for (b, (&r, &c)) in self.perm.iter().zip(&self.coef).enumerate() {
            for col in 0..m.ncols() {
                out[(r, col)] = c * m[(b, col)];
            }
        }
        out
    }

    /// `m · self`.
    pub fn right_mul(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for (b, (&r, &c)) in self.perm.iter().zip(&self.coef).enumerate() {
            for row in 0..m.nrows() {
                out[(row, b)] = m[(row, r)] * c;
            }
        }
        out
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(v.len());
        for (b, (&r, &c)) in self.perm.iter().zip(&self.coef).enumerate() {
            out[r] = c * v[b];
        }
        out
    }
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Haar-like random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let qr = ginibre(dim, dim, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    // fix the phases of R's diagonal so the distribution is Haar
    let d = CMat::from_diagonal(&CVec::from_fn(dim, |i, _| {
        let v = r[(i, i)];
        if v.norm() > 0.0 {
            v / v.norm()
        } else {
            C1
        }
    }));
    q * d
}

/// A validated `N`-qubit density matrix.
#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    rho: CMat,
}

impl DenseState {
    pub fn from_matrix(n: usize, rho: CMat) -> Result<Self> {
        check_size(n, MAX_QUBITS)?;
        let dim = 1usize << n;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rho.nrows() });
        }
        let herm = max_abs(&(&rho - rho.adjoint()));
        if herm > 1e-10 {
            return Err(Error::NotDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - C1).norm() > 1e-10 {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        let hermitian = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let min = hermitian.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(DenseState { n, rho })
    }

    pub fn pure(n: usize, psi: &CVec) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotDensityMatrix(format!("state vector norm {norm}")));
        }
        DenseState::from_matrix(n, psi * psi.adjoint())
    }

    /// Random full-rank state `G G† / tr(G G†)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_size(n, MAX_QUBITS)?;
        let dim = 1usize << n;
        let g = ginibre(dim, dim, rng);
        let m = &g * g.adjoint();
        let tr = m.trace();
        DenseState::from_matrix(n, m / tr)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }
}

/// Orthonormal basis stored as the columns of a unitary matrix.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    vectors: CMat,
}

impl OrthonormalBasis {
    pub fn new(vectors: CMat) -> Result<Self> {
        let dim = vectors.ncols();
        if vectors.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: vectors.nrows() });
        }
        let err = max_abs(&(vectors.adjoint() * &vectors - CMat::identity(dim, dim)));
        if err > 1e-12 {
            return Err(Error::NotOrthonormal(err));
        }
        Ok(OrthonormalBasis { vectors })
    }

    pub fn computational(n: usize) -> Self {
        let dim = 1usize << n;
        OrthonormalBasis { vectors: CMat::identity(dim, dim) }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        OrthonormalBasis { vectors: random_unitary(1 << n, rng) }
    }

    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }
}

/// A list of Kraus operators with `Σ E†E = I`.
#[derive(Clone, Debug)]
pub struct KrausSet {
    n: usize,
    ops: Vec<CMat>,
}

impl KrausSet {
    pub fn new(n: usize, ops: Vec<CMat>) -> Result<Self> {
        check_size(n, MAX_QUBITS)?;
        let dim = 1usize << n;
        if let Some(bad) = ops.iter().find(|e| e.nrows() != dim || e.ncols() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.nrows() });
        }
        let set = KrausSet { n, ops };
        let err = set.completeness_error();
        if err > 1e-12 {
            return Err(Error::IncompleteKraus(err));
        }
        Ok(set)
    }

    /// Random channel with `k` Kraus operators from a random isometry
    /// `C^d → C^{dk}`.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        check_size(n, MAX_QUBITS)?;
        let dim = 1usize << n;
        let u = random_unitary(dim * k, rng);
        let ops = (0..k).map(|j| u.view((j * dim, 0), (dim, dim)).into_owned()).collect();
        KrausSet::new(n, ops)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    /// `max |Σ E†E − I|`.
    pub fn completeness_error(&self) -> f64 {
        let dim = 1usize << self.n;
        let sum = self.ops.iter().fold(CMat::zeros(dim, dim), |acc, e| acc + e.adjoint() * e);
        max_abs(&(sum - CMat::identity(dim, dim)))
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let dim = rho.nrows();
        self.ops.iter().fold(CMat::zeros(dim, dim), |acc, e| acc + e * rho * e.adjoint())
    }

    /// The Kraus set `{2^{-N} σ_q† E_j σ_q}` of the byproduct-averaged channel.
    pub fn byproduct_averaged(&self) -> Result<KrausSet> {
        check_size(self.n, MAX_TWIRL_QUBITS)?;
        let scale = Complex64::new((0.5f64).powi(self.n as i32), 0.0);
        let mut ops = Vec::with_capacity(self.ops.len() << (2 * self.n));
        for q in 0..1usize << (2 * self.n) {
            let s = Monomial::pauli(&pauli_from_index(self.n, q))?;
            let sd = s.adjoint();
            for e in &self.ops {
                ops.push(sd.left_mul(&s.right_mul(e)) * scale);
            }
        }
        KrausSet::new(self.n, ops)
    }
}

/// Kraus operators `√λ_j |λ_j⟩⟨φ_k|` that send every input to `target`.
pub fn kraus_from_target(target: &DenseState, basis: &OrthonormalBasis) -> Result<KrausSet> {
    let dim = target.rho.nrows();
    if basis.vectors.nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: basis.vectors.nrows() });
    }
    OrthonormalBasis::new(basis.vectors.clone())?;
    let eig = target.rho.clone().symmetric_eigen();
    let mut ops = Vec::new();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -1e-10 {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {lambda:e}")));
        }
        if lambda <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(j);
        for k in 0..dim {
            let phi = basis.vectors.column(k);
            ops.push(v * phi.adjoint() * Complex64::new(lambda.sqrt(), 0.0));
        }
    }
    KrausSet::new(target.n, ops)
}

/// `4^{-N} Σ_q σ_q† σ_α σ_q ρ σ_q† σ_β† σ_q` over all `4^N` byproducts.
pub fn twirl_sum(alpha: &PauliString, beta: &PauliString, rho: &DenseState) -> Result<CMat> {
    let n = rho.n;
    check_size(n, MAX_TWIRL_QUBITS)?;
    for p in [alpha, beta] {
        if p.num_qubits() != n {
            return Err(Error::DimensionMismatch { expected: n, found: p.num_qubits() });
        }
    }
    let a = Monomial::pauli(alpha)?;
    let bd = Monomial::pauli(beta)?.adjoint();
    let dim = 1usize << n;
    let mut acc = CMat::zeros(dim, dim);
    for q in 0..1usize << (2 * n) {
        let s = Monomial::pauli(&pauli_from_index(n, q))?;
        let sd = s.adjoint();
        let left = sd.compose(&a).compose(&s);
        let right = sd.compose(&bd).compose(&s);
        acc += right.right_mul(&left.left_mul(&rho.rho));
    }
    Ok(acc / Complex64::new((1u64 << (2 * n)) as f64, 0.0))
}

/// Weights `C̃_α` of a Pauli channel, indexed as in [`pauli_from_index`].
#[derive(Clone, Debug, PartialEq)]
pub struct PauliChannelWeights {
    n: usize,
    weights: Vec<f64>,
}

impl PauliChannelWeights {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != 1usize << (2 * n) {
            return Err(Error::DimensionMismatch { expected: 1 << (2 * n), found: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
            return Err(Error::InvalidArgument(format!("negative Pauli weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("Pauli weights sum to {total}")));
        }
        Ok(PauliChannelWeights { n, weights })
    }

    /// Weights given for explicit strings; all others are zero.
    pub fn from_strings(n: usize, entries: &[(PauliString, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; 1usize << (2 * n)];
        for (p, w) in entries {
            if p.num_qubits() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.num_qubits() });
            }
            weights[pauli_index(p)] += *w;
        }
        PauliChannelWeights::new(n, weights)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, p: &PauliString) -> f64 {
        self.weights[pauli_index(p)]
    }

    pub fn sampler(&self) -> Result<WeightedIndex<f64>> {
        WeightedIndex::new(&self.weights).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// `Σ_α C̃_α σ_α ρ σ_α†`.
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        let dim = rho.nrows();
        let mut acc = CMat::zeros(dim, dim);
        for (idx, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let s = Monomial::pauli(&pauli_from_index(self.n, idx))?;
            acc += s.adjoint().right_mul(&s.left_mul(rho)) * Complex64::new(w, 0.0);
        }
        Ok(acc)
    }
}

/// Inverse of [`pauli_from_index`]; the phase is ignored.
pub fn pauli_index(p: &PauliString) -> usize {
    let n = p.num_qubits();
    p.support().fold(0, |acc, (j, f)| acc | ((f.x() as usize) << j) | ((f.z() as usize) << (n + j)))
}

/// `C_j^α = tr(σ_α† E_j) / 2^N` for every Kraus operator (rows) and Pauli
/// index (columns).
pub fn pauli_coefficients(kraus: &KrausSet) -> Result<Vec<Vec<Complex64>>> {
    let n = kraus.n;
    check_size(n, MAX_TWIRL_QUBITS)?;
    let dim = 1usize << n;
    let paulis: Vec<CMat> = (0..1usize << (2 * n))
        .map(|a| pauli_matrix(&pauli_from_index(n, a)).map(|m| m.adjoint()))
        .collect::<Result<_>>()?;
    Ok(kraus
        .ops
        .iter()
        .map(|e| paulis.iter().map(|sd| (sd * e).trace() / Complex64::new(dim as f64, 0.0)).collect())
        .collect())
}

/// `C̃_α = Σ_j |C_j^α|²`.
pub fn pauli_channel_weights(kraus: &KrausSet) -> Result<PauliChannelWeights> {
    let err = kraus.completeness_error();
    if err > 1e-12 {
        return Err(Error::IncompleteKraus(err));
    }
    let coeffs = pauli_coefficients(kraus)?;
    let mut weights = vec![0.0; 1usize << (2 * kraus.n)];
    for row in &coeffs {
        for (w, c) in weights.iter_mut().zip(row) {
            *w += c.norm_sqr();
        }
    }
    PauliChannelWeights::new(kraus.n, weights)
}

/// `χ_{αβ} = Σ_j C_j^α conj(C_j^β)`.
pub fn chi_matrix(kraus: &KrausSet) -> Result<CMat> {
    let coeffs = pauli_coefficients(kraus)?;
    let m = 1usize << (2 * kraus.n);
    Ok(CMat::from_fn(m, m, |a, b| coeffs.iter().map(|row| row[a] * row[b].conj()).sum()))
}

/// `4^{-N} Σ_q σ_q† E(σ_q ρ σ_q†) σ_q`, evaluated with dense products.
pub fn byproduct_averaged_channel(kraus: &KrausSet, rho: &CMat) -> Result<CMat> {
    let n = kraus.n;
    check_size(n, MAX_TWIRL_QUBITS)?;
    let dim = 1usize << n;
    let mut acc = CMat::zeros(dim, dim);
    for q in 0..1usize << (2 * n) {
        let s = pauli_matrix(&pauli_from_index(n, q))?;
        let sd = s.adjoint();
        acc += &sd * kraus.apply(&(&s * rho * &sd)) * &s;
    }
    Ok(acc / Complex64::new((1u64 << (2 * n)) as f64, 0.0))
}

/// Projector onto outcome `o` of the single-qubit observable `basis` on
/// `qubit`, as a dense matrix.
pub fn outcome_projector(n: usize, qubit: usize, basis: Basis, o: Outcome) -> Result<CMat> {
    let f = match basis {
        Basis::X => (SinglePauli::X, Phase::ONE),
        Basis::Y => (SinglePauli::XZ, Phase::I),
        Basis::Z => (SinglePauli::Z, Phase::ONE),
    };
    let obs = pauli_matrix(&PauliString::single(n, qubit, f.0)?.with_phase(f.1))?;
    let dim = 1usize << n;
    let sign = Complex64::new(o.sign() as f64, 0.0);
    Ok((CMat::identity(dim, dim) + obs * sign) * Complex64::new(0.5, 0.0))
}

/// Joint distribution of measuring each listed qubit in its basis.
pub fn measurement_distribution(
    rho: &CMat,
    n: usize,
    measurements: &[(usize, Basis)],
) -> Result<BTreeMap<Vec<Outcome>, f64>> {
    let mut dist = BTreeMap::new();
    let mut branches = vec![(Vec::new(), rho.clone())];
    for &(q, basis) in measurements {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for (rec, r) in branches {
            for o in [Outcome::Plus, Outcome::Minus] {
                let p = outcome_projector(n, q, basis, o)?;
                let post = &p * &r * &p;
                if post.trace().re > 1e-15 {
                    let mut rec = rec.clone();
                    rec.push(o);
                    next.push((rec, post));
                }
            }
        }
        branches = next;
    }
    for (rec, r) in branches {
        *dist.entry(rec).or_insert(0.0) += r.trace().re;
    }
    Ok(dist)
}

/// Pure-state circuit simulator.
#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: CVec,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        check_size(n, MAX_QUBITS)?;
        let mut amps = CVec::zeros(1 << n);
        amps[0] = C1;
        Ok(StateVector { n, amps })
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    fn apply_single(&mut self, q: usize, u: [[Complex64; 2]; 2]) {
        let bit = 1usize << q;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | bit]);
                self.amps[b] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[b | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    pub fn apply_unitary(&mut self, gate: &Gate) -> Result<()> {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        for q in gate.qubits() {
            if q >= self.n {
                return Err(Error::OutOfRange { index: q, len: self.n });
            }
        }
        match *gate {
            Gate::H(q) => self.apply_single(q, [[h, h], [h, -h]]),
            Gate::S(q) => self.apply_single(q, [[C1, C0], [C0, CI]]),
            Gate::Sdg(q) => self.apply_single(q, [[C1, C0], [C0, -CI]]),
            Gate::X(q) => self.apply_single(q, [[C0, C1], [C1, C0]]),
            Gate::Y(q) => self.apply_single(q, [[C0, -CI], [CI, C0]]),
            Gate::Z(q) => self.apply_single(q, [[C1, C0], [C0, -C1]]),
            Gate::CZ(a, b) => {
                let mask = (1usize << a) | (1usize << b);
                for i in 0..self.amps.len() {
                    if i & mask == mask {
                        self.amps[i] = -self.amps[i];
                    }
                }
            }
            Gate::CX(c, t) => {
                let (cb, tb) = (1usize << c, 1usize << t);
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap_rows(i, i | tb);
                    }
                }
            }
            Gate::Measure(..) => return Err(Error::Unsupported("measurement is not unitary".into())),
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.num_qubits() });
        }
        self.amps = Monomial::pauli(p)?.apply(&self.amps);
        Ok(())
    }

    /// Projects onto outcome `o`; returns its probability and leaves the
    /// normalised post-measurement state (unchanged if the probability is 0).
    pub fn project(&mut self, q: usize, basis: Basis, o: Outcome) -> Result<f64> {
        let proj = outcome_projector(self.n, q, basis, o)?;
        let post = proj * &self.amps;
        let p = post.norm_squared();
        if p > 1e-15 {
            self.amps = post / Complex64::new(p.sqrt(), 0.0);
        }
        Ok(p)
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<Outcome> {
        let mut plus = self.clone();
        let p = plus.project(q, basis, Outcome::Plus)?;
        if rng.random::<f64>() < p {
            *self = plus;
            Ok(Outcome::Plus)
        } else {
            self.project(q, basis, Outcome::Minus)?;
            Ok(Outcome::Minus)
        }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, circuit: &Circuit, rng: &mut R) -> Result<Vec<Outcome>> {
        let mut out = Vec::new();
        for g in circuit.gates() {
            match *g {
                Gate::Measure(q, basis) => out.push(self.measure(q, basis, rng)?),
                _ => self.apply_unitary(g)?,
            }
        }
        Ok(out)
    }
}

/// Exact distribution of the measurement record of `circuit` on `|0…0⟩`.
pub fn circuit_distribution(circuit: &Circuit) -> Result<BTreeMap<Vec<Outcome>, f64>> {
    let mut dist = BTreeMap::new();
    let mut stack = vec![(StateVector::zero(circuit.num_qubits())?, 0usize, Vec::new(), 1.0f64)];
    let gates = circuit.gates();
    while let Some((mut psi, mut pc, record, prob)) = stack.pop() {
        let mut finished = true;
        while pc < gates.len() {
            if let Gate::Measure(q, basis) = gates[pc] {
                for o in [Outcome::Plus, Outcome::Minus] {
                    let mut branch = psi.clone();
                    let p = branch.project(q, basis, o)?;
                    if p > 1e-12 {
                        let mut rec = record.clone();
                        rec.push(o);
                        stack.push((branch, pc + 1, rec, prob * p));
                    }
                }
                finished = false;
                break;
            }
            psi.apply_unitary(&gates[pc])?;
            pc += 1;
        }
        if finished {
            *dist.entry(record).or_insert(0.0) += prob;
        }
    }
    Ok(dist)
}

/// `½ Σ |p(x) − q(x)|`.
pub fn total_variation<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut tv = 0.0;
    for (k, a) in p {
        tv += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            tv += b.abs();
        }
    }
    tv / 2.0
}

/// Runs a small measurement trace through both the tableau and the dense
/// engine and reports whether the exact outcome distributions coincide
/// (total variation below 1e-10).
pub fn dense_protocol_check(trace: &Circuit) -> Result<bool> {
    check_size(trace.num_qubits(), MAX_QUBITS)?;
    let dense = circuit_distribution(trace)?;
    let stab = crate::stab::outcome_distribution(trace)?;
    Ok(total_variation(&dense, &stab) < 1e-10)
}
