//! Cross-checks of the Pauli-frame protocols against state-level
//! simulation.
//!
//! * [`trap_trial_crosscheck`]: one trap-protocol trial on bare qubits, run
//!   as a circuit through the tableau and the dense engine.
//! * [`twirl_crosscheck`]: the residual of the topological protocol against
//!   the dense product `K† σ_q† σ_α σ_q K`.
//! * [`lattice_crosscheck`]: syndrome and logical parities of an error on
//!   the RHG graph state, read off tableau measurement outcomes.
//! * [`kraus_reduction`]: a general attack simulated densely versus its
//!   extracted Pauli channel run through the frame-level protocol.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    evaluate_protocol1, run_trial1, AdversaryModel, PauliChannel, ProtocolKind, Roles, Setup, TrialOutcome, TrialRngs,
    Unencoded, Verdict,
};
use crate::circuit::{Basis, Circuit, Gate, Outcome};
use crate::dense::{self, CMat, KrausSet};
use crate::lattice::ChainClass;
use crate::pauli::{ByproductKey, PauliString, Role, RolePermutation, SinglePauli, TwirlKey};
use crate::protocols::RhgCode;
use crate::stab::{self, Tableau};
use crate::{Error, Result};

fn push_pauli(c: &mut Circuit, p: &PauliString) -> Result<()> {
    // X^x Z^z acts as Z first, then X
    for (j, f) in p.support() {
        if f.z() {
            c.push(Gate::Z(j))?;
        }
        if f.x() {
            c.push(Gate::X(j))?;
        }
    }
    Ok(())
}

fn basis_for(role: Role) -> Basis {
    match role {
        Role::ZeroTrap => Basis::Z,
        _ => Basis::X,
    }
}

/// The circuit of one trap-protocol trial on bare qubits: prepare
/// `|Ψ_P⟩`, apply `σ_q`, the attack, the correction, then measure every
/// qubit in its role's basis (in position order).
pub fn trap_circuit(sigma: &PauliString, roles: &RolePermutation, q: &ByproductKey) -> Result<Circuit> {
    let n = roles.len();
    let mut c = Circuit::new(n);
    for j in 0..n {
        if roles.role(j) != Role::ZeroTrap {
            c.push(Gate::H(j))?;
        }
    }
    let qp = q.as_pauli();
    push_pauli(&mut c, &qp)?;
    push_pauli(&mut c, sigma)?;
    push_pauli(&mut c, &qp)?;
    for j in 0..n {
        c.push(Gate::Measure(j, basis_for(roles.role(j))))?;
    }
    Ok(c)
}

fn outcome_from_record(roles: &RolePermutation, record: &[Outcome]) -> (usize, bool) {
    let mut flips = 0;
    let mut logical = false;
    for (j, o) in record.iter().enumerate() {
        match roles.role(j) {
            Role::Resource => logical |= o.is_minus(),
            _ => flips += o.is_minus() as usize,
        }
    }
    (flips, logical)
}

/// Runs one trial through the frame, the tableau and the dense engine and
/// reports whether all three agree. Only for the bare-qubit trap protocol.
pub fn trap_trial_crosscheck(
    setup: &Setup,
    sigma: &PauliString,
    roles: &RolePermutation,
    q: &ByproductKey,
) -> Result<bool> {
    if setup.kind() != ProtocolKind::Trap || setup.code().as_rhg().is_some() {
        return Err(Error::Unsupported("state-level cross-check needs the bare-qubit trap protocol".into()));
    }
    let frame = evaluate_protocol1(setup, sigma, Roles::Full(roles), q)?;
    let circuit = trap_circuit(sigma, roles, q)?;
    let stab_dist = stab::outcome_distribution(&circuit)?;
    let dense_dist = dense::circuit_distribution(&circuit)?;
    if dense::total_variation(&stab_dist, &dense_dist) >= 1e-10 || stab_dist.len() != 1 {
        return Ok(false);
    }
    let record = stab_dist.keys().next().expect("one outcome");
    let (flips, logical) = outcome_from_record(roles, record);
    Ok(flips == frame.trap_flips && logical == frame.logical)
}

fn twirl_matrix(k: &TwirlKey) -> CMat {
    let c0 = Complex64::new(0.0, 0.0);
    let c1 = Complex64::new(1.0, 0.0);
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let h = CMat::from_row_slice(2, 2, &[r, r, r, -r]);
    let s = CMat::from_row_slice(2, 2, &[c1, c0, c0, Complex64::new(0.0, 1.0)]);
    let mut m = CMat::identity(1, 1);
    for j in (0..k.len()).rev() {
        let mut f = CMat::identity(2, 2);
        if k.t(j) {
            f = &f * &s;
        }
        if k.h(j) {
            f = &f * &h;
        }
        m = m.kronecker(&f);
    }
    m
}

/// Largest entry of `K† σ_q† σ_α σ_q K − residual`, where `K = ⊗ S^t H^h`
/// and the residual comes from the Pauli conjugation rules.
pub fn twirl_crosscheck(sigma: &PauliString, k: &TwirlKey, q: &ByproductKey) -> Result<f64> {
    let residual = sigma.conjugate_by_byproduct(q)?.conjugate_by_twirlkey(k)?;
    let km = twirl_matrix(k);
    let qm = dense::pauli_matrix(&q.as_pauli())?;
    let lhs = km.adjoint() * qm.adjoint() * dense::pauli_matrix(sigma)? * qm * km;
    let diff = lhs - dense::pauli_matrix(&residual)?;
    Ok(diff.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Checks and logical parities read from measurement outcomes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeReadout {
    pub class: ChainClass,
    pub syndrome_count: usize,
    pub mask: u64,
}

/// Parity of `∏_{v∈S} K_v = X_S Z_T` with `T` the qubits adjacent to an
/// odd number of members of `S`. Every member of `T` must be Z-measured.
fn stabilizer_parity(code: &RhgCode, set: &[usize], minus: &[bool]) -> Result<bool> {
    let lattice = code.lattice();
    let mut touched: BTreeMap<usize, bool> = BTreeMap::new();
    let mut parity = false;
    for &v in set {
        parity ^= minus[v];
        for w in lattice.neighbours(v) {
            *touched.entry(w).or_insert(false) ^= true;
        }
    }
    for (w, odd) in touched {
        if !odd {
            continue;
        }
        if code.defects().is_active(w) {
            return Err(Error::Unsupported(format!("qubit {w} would need a Z readout but is measured in X")));
        }
        parity ^= minus[w];
    }
    Ok(parity)
}

/// Prepares the lattice graph state, applies `error`, measures active
/// qubits in X and defect qubits in Z, and evaluates every live cell,
/// every vertex and every cocycle from the outcomes.
pub fn lattice_crosscheck<R: Rng + ?Sized>(code: &RhgCode, error: &PauliString, rng: &mut R) -> Result<LatticeReadout> {
    let lattice = code.lattice();
    let defects = code.defects();
    let n = lattice.num_qubits();
    if error.num_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: error.num_qubits() });
    }
    let mut t = Tableau::graph_state(n, &lattice.graph_edges())?;
    t.apply_pauli(error)?;
    let mut minus = vec![false; n];
    for (v, m) in minus.iter_mut().enumerate() {
        let basis = if defects.is_active(v) { Basis::X } else { Basis::Z };
        *m = t.measure(v, basis, rng)?.is_minus();
    }
    let [lx, ly, lz] = lattice.dims();
    let mut syndrome_count = 0;
    for id in 0..lattice.num_cells() {
        let cell = lattice.cell_of_id(id);
        if defects.tube_of_cell(lattice, cell).is_some() {
            continue;
        }
        syndrome_count += stabilizer_parity(code, &lattice.cell_faces(cell)?, &minus)? as usize;
    }
    let vz = match lattice.boundary() {
        crate::lattice::Boundary::Open => lz + 1,
        crate::lattice::Boundary::PeriodicZ => lz,
    };
    for x in 0..=lx {
        for y in 0..=ly {
            for z in 0..vz {
                let edges: Vec<usize> =
                    lattice.vertex_edges([x, y, z]).into_iter().filter(|&e| defects.is_active(e)).collect();
                syndrome_count += stabilizer_parity(code, &edges, &minus)? as usize;
            }
        }
    }
    let reps = defects.logical_reps()?;
    let mut mask = 0u64;
    for (b, cocycle) in reps.cocycles.iter().enumerate() {
        if stabilizer_parity(code, cocycle.qubits(), &minus)? {
            mask |= 1 << b;
        }
    }
    let class = if syndrome_count > 0 {
        ChainClass::Detected
    } else if mask != 0 {
        ChainClass::Logical
    } else {
        ChainClass::Trivial
    };
    Ok(LatticeReadout { class, syndrome_count, mask })
}

/// Frame-level prediction matching [`lattice_crosscheck`].
pub fn lattice_prediction(code: &RhgCode, error: &PauliString) -> Result<LatticeReadout> {
    let residual: Vec<(usize, SinglePauli)> = error.support().collect();
    let z = code.z_support(&residual)?;
    let (class, syndrome_count) = code.defects().classify_qubits(&z)?;
    let reps = code.defects().logical_reps()?;
    let mask = z.iter().filter(|&&q| code.defects().is_active(q)).fold(0, |m, &q| m ^ reps.mask(q));
    Ok(LatticeReadout { class, syndrome_count, mask })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Abort,
    AcceptOk,
    AcceptFooled,
}

impl Category {
    pub fn of(o: &TrialOutcome) -> Self {
        match (o.verdict, o.logical) {
            (Verdict::Abort, _) => Category::Abort,
            (Verdict::Accept, false) => Category::AcceptOk,
            (Verdict::Accept, true) => Category::AcceptFooled,
        }
    }
}

fn role_sequences(left: [usize; 3], prefix: &mut Vec<Role>, out: &mut Vec<Vec<Role>>) {
    if left == [0, 0, 0] {
        out.push(prefix.clone());
        return;
    }
    for k in 0..3 {
        if left[k] > 0 {
            let mut next = left;
            next[k] -= 1;
            prefix.push(Role::ALL[k]);
            role_sequences(next, prefix, out);
            prefix.pop();
        }
    }
}

/// Every role assignment of `n` qubits, each equally likely.
pub fn all_role_permutations(n: usize) -> Result<Vec<RolePermutation>> {
    if !n.is_multiple_of(3) {
        return Err(Error::NotDivisibleByThree(n));
    }
    let mut out = Vec::new();
    role_sequences([n / 3; 3], &mut Vec::new(), &mut out);
    out.into_iter().map(RolePermutation::from_roles).collect()
}

/// Exact outcome distribution of the bare-qubit trap protocol under a
/// general attack, averaged over all byproducts and role assignments.
pub fn dense_attack_distribution(kraus: &KrausSet) -> Result<BTreeMap<Category, f64>> {
    let n = kraus.num_qubits();
    let perms = all_role_permutations(n)?;
    let mut dist = BTreeMap::new();
    let weight = 1.0 / perms.len() as f64;
    for roles in &perms {
        let mut psi = dense::StateVector::zero(n)?;
        for j in 0..n {
            if roles.role(j) != Role::ZeroTrap {
                psi.apply_unitary(&Gate::H(j))?;
            }
        }
        let rho = dense::DenseState::pure(n, psi.amplitudes())?;
        let out = dense::byproduct_averaged_channel(kraus, rho.matrix())?;
        let bases: Vec<(usize, Basis)> = (0..n).map(|j| (j, basis_for(roles.role(j)))).collect();
        for (record, p) in dense::measurement_distribution(&out, n, &bases)? {
            let (flips, logical) = outcome_from_record(roles, &record);
            let cat = match (flips, logical) {
                (0, false) => Category::AcceptOk,
                (0, true) => Category::AcceptFooled,
                _ => Category::Abort,
            };
            *dist.entry(cat).or_insert(0.0) += weight * p;
        }
    }
    Ok(dist)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub exact: BTreeMap<Category, f64>,
    pub sampled: BTreeMap<Category, f64>,
    pub total_variation: f64,
}

/// Compares the dense distribution of a general attack with `shots`
/// frame-level trials driven by its Pauli-channel weights.
pub fn kraus_reduction(kraus: &KrausSet, shots: u64, seed: u64) -> Result<ReductionReport> {
    let n = kraus.num_qubits();
    let exact = dense_attack_distribution(kraus)?;
    let setup = Setup::with_code(ProtocolKind::Trap, std::sync::Arc::new(Unencoded { qubits: n / 3 }))?;
    let adversary = AdversaryModel::RandomPauliChannel(PauliChannel::Explicit(dense::pauli_channel_weights(kraus)?));
    let mut counts: BTreeMap<Category, u64> = BTreeMap::new();
    for i in 0..shots {
        let o = run_trial1(&setup, &adversary, &mut TrialRngs::for_trial(seed, i))?;
        *counts.entry(Category::of(&o)).or_insert(0) += 1;
    }
    let sampled: BTreeMap<Category, f64> = counts.into_iter().map(|(c, k)| (c, k as f64 / shots as f64)).collect();
    let total_variation = dense::total_variation(&exact, &sampled);
    Ok(ReductionReport { exact, sampled, total_variation })
}

/// Outcome of re-running trials at state level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub checked: u64,
    pub agreed: u64,
}

impl CrosscheckReport {
    pub fn passed(&self) -> bool {
        self.checked == self.agreed
    }
}

/// Largest register the state-level paths accept.
pub const CROSSCHECK_MAX_LATTICE: usize = 5000;

/// Draws `count` fresh trials (attack from the adversary, full secrets)
/// and checks each one at state level: the tableau and the dense engine
/// for bare qubits, the dense twirl product for the bare topological
/// protocol, and tableau readout of the lattice for RHG codes.
pub fn crosscheck_trials(setup: &Setup, adversary: &AdversaryModel, seed: u64, count: u64) -> Result<CrosscheckReport> {
    let n = setup.num_qubits();
    let mut report = CrosscheckReport::default();
    for i in 0..count {
        let mut rngs = TrialRngs::for_trial(seed, i);
        let sigma = adversary.draw(&setup.public_view(), &mut rngs.bob)?;
        let ok = match (setup.kind(), setup.code().as_rhg()) {
            (ProtocolKind::Trap, None) => {
                let q = ByproductKey::sample(n, &mut rngs.alice);
                let roles = RolePermutation::sample(n, &mut rngs.alice)?;
                trap_trial_crosscheck(setup, &sigma, &roles, &q)?
            }
            (ProtocolKind::Topological, None) => {
                let k = TwirlKey::sample(n, &mut rngs.alice);
                let q = ByproductKey::sample(n, &mut rngs.alice);
                twirl_crosscheck(&sigma, &k, &q)? < 1e-12
            }
            (kind, Some(code)) => {
                if code.lattice().num_qubits() > CROSSCHECK_MAX_LATTICE {
                    return Err(Error::TooLarge { n: code.lattice().num_qubits(), max: CROSSCHECK_MAX_LATTICE });
                }
                let m = code.lattice().num_qubits();
                let mut error = PauliString::identity(m);
                let frame = match kind {
                    ProtocolKind::Trap => {
                        let q = ByproductKey::sample(n, &mut rngs.alice);
                        let roles = RolePermutation::sample(n, &mut rngs.alice)?;
                        for (j, f) in sigma.conjugate_by_byproduct(&q)?.support() {
                            if roles.role(j) == Role::Resource {
                                error.set_factor(roles.register_of(j), f)?;
                            }
                        }
                        evaluate_protocol1(setup, &sigma, Roles::Full(&roles), &q)?
                    }
                    ProtocolKind::Topological => {
                        let k = TwirlKey::sample(n, &mut rngs.alice);
                        let q = ByproductKey::sample(n, &mut rngs.alice);
                        for (j, f) in sigma.conjugate_by_byproduct(&q)?.conjugate_by_twirlkey(&k)?.support() {
                            if f != SinglePauli::X {
                                error.set_factor(j, f)?;
                            }
                        }
                        super::evaluate_protocol2(setup, &sigma, &k, &q)?
                    }
                };
                let readout = lattice_crosscheck(code, &error, &mut rngs.alice)?;
                readout == lattice_prediction(code, &error)?
                    && readout.syndrome_count == frame.syndrome_count
                    && (readout.class == ChainClass::Logical) == frame.logical
            }
        };
        report.checked += 1;
        report.agreed += ok as u64;
    }
    Ok(report)
}
