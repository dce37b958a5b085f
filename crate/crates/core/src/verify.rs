//! Verification suites. Each suite checks a family of identities against
//! an independent route (the dense engine, exhaustive enumeration or
//! state-level simulation) and reports one [`CheckLine`] per identity.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytics::{self, AttackProfile};
use crate::circuit::{Circuit, Outcome};
use crate::dense::{self, CMat, DenseState, KrausSet, OrthonormalBasis};
use crate::lattice::{self, Boundary, ChainClass, Check, DefectSpec, QubitKind, RhgLattice, Tube, ZChain};
use crate::pauli::{PauliString, SinglePauli};
use crate::protocols::check::{crosscheck_trials, kraus_reduction};
use crate::protocols::{AdversaryModel, PauliChannel, ProtocolKind, RhgCode, Setup, Unencoded};
use crate::stab::{self, Tableau};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Twirl,
    Kraus,
    Trapprob,
    Lattice,
    Crosscheck,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Twirl, Suite::Kraus, Suite::Trapprob, Suite::Lattice, Suite::Crosscheck];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Twirl => "twirl",
            Suite::Kraus => "kraus",
            Suite::Trapprob => "trapprob",
            Suite::Lattice => "lattice",
            Suite::Crosscheck => "crosscheck",
        }
    }

    pub fn run(self, seed: u64) -> Result<Vec<CheckLine>> {
        match self {
            Suite::Twirl => twirl_suite(seed),
            Suite::Kraus => {
                let mut lines = cptp_suite(seed)?;
                lines.extend(reduction_suite(seed)?);
                Ok(lines)
            }
            Suite::Trapprob => trapprob_suite(seed),
            Suite::Lattice => lattice_suite(),
            Suite::Crosscheck => crosscheck_suite(seed),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            Error::Parse(format!("unknown suite `{s}` (expected twirl, kraus, trapprob, lattice or crosscheck)"))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckLine { name: name.to_string(), passed, detail }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn conjugated(p: &PauliString, rho: &DenseState) -> Result<CMat> {
    let s = dense::pauli_matrix(p)?;
    Ok(&s * rho.matrix() * s.adjoint())
}

/// Byproduct averaging kills every cross term: `α ≠ β` sums to zero and
/// `α = β` leaves `σ_α ρ σ_α†`.
pub fn twirl_suite(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut off1, mut diag1) = (0.0f64, 0.0f64);
    for a in 0..4 {
        for b in 0..4 {
            let (pa, pb) = (dense::pauli_from_index(1, a), dense::pauli_from_index(1, b));
            let rho = DenseState::random(1, &mut rng)?;
            let sum = dense::twirl_sum(&pa, &pb, &rho)?;
            if a == b {
                diag1 = diag1.max(max_abs(&(sum - conjugated(&pa, &rho)?)));
            } else {
                off1 = off1.max(max_abs(&sum));
            }
        }
    }
    let (mut off2, mut diag2) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let a = rng.random_range(0..16);
        let mut b = rng.random_range(0..15);
        if b >= a {
            b += 1;
        }
        let (pa, pb) = (dense::pauli_from_index(2, a), dense::pauli_from_index(2, b));
        let rho = DenseState::random(2, &mut rng)?;
        off2 = off2.max(max_abs(&dense::twirl_sum(&pa, &pb, &rho)?));
        diag2 = diag2.max(max_abs(&(dense::twirl_sum(&pa, &pa, &rho)? - conjugated(&pa, &rho)?)));
    }
    let tol = 1e-12;
    Ok(vec![
        CheckLine::new("twirl: 12 ordered single-qubit pairs vanish", off1 < tol, format!("max entry {off1:.3e}")),
        CheckLine::new("twirl: 50 random two-qubit pairs vanish", off2 < tol, format!("max entry {off2:.3e}")),
        CheckLine::new(
            "twirl: equal pairs give the conjugated state",
            diag1.max(diag2) < tol,
            format!("max deviation {:.3e}", diag1.max(diag2)),
        ),
    ])
}

/// The constant-output channel built from a target state: complete, and
/// every input is sent to the target.
pub fn cptp_suite(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0de);
    let (mut completeness, mut output) = (0.0f64, 0.0f64);
    for t in 0..20 {
        let n = 1 + t % 3;
        let target = if t % 4 == 3 {
            let u = dense::random_unitary(1 << n, &mut rng);
            DenseState::pure(n, &u.column(0).into_owned())?
        } else {
            DenseState::random(n, &mut rng)?
        };
        let basis = OrthonormalBasis::random(n, &mut rng);
        let kraus = match dense::kraus_from_target(&target, &basis) {
            Ok(k) => k,
            Err(Error::IncompleteKraus(e)) => {
                completeness = completeness.max(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        completeness = completeness.max(kraus.completeness_error());
        for _ in 0..10 {
            let eta = DenseState::random(n, &mut rng)?;
            output = output.max((kraus.apply(eta.matrix()) - target.matrix()).norm());
        }
    }
    Ok(vec![
        CheckLine::new(
            "kraus: constant-output maps are complete (20 targets)",
            completeness < 1e-12,
            format!("max |sum E^dag E - I| {completeness:.3e}"),
        ),
        CheckLine::new(
            "kraus: constant-output maps return the target (200 inputs)",
            output < 1e-10,
            format!("max Frobenius error {output:.3e}"),
        ),
    ])
}

/// General attacks simulated densely against their extracted Pauli
/// channels run through the frame-level trap protocol.
pub fn reduction_suite(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57);
    let mut worst = 0.0f64;
    let mut non_pauli = 0;
    for i in 0..10 {
        let kraus = KrausSet::random(3, 2 + i % 3, &mut rng)?;
        let weights = dense::pauli_channel_weights(&kraus)?;
        non_pauli += (weights.weights().iter().filter(|&&w| w > 1e-9).count() > 1) as usize;
        let report = kraus_reduction(&kraus, 10_000, seed.wrapping_add(i as u64))?;
        worst = worst.max(report.total_variation);
    }
    Ok(vec![CheckLine::new(
        "kraus: 10 general attacks on N=3 match their Pauli channels",
        worst < 0.02 && non_pauli == 10,
        format!("max total variation {worst:.4} over 10^4 shots each, {non_pauli}/10 attacks with several Pauli terms"),
    )])
}

fn role_orders(left: [usize; 3], prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if left == [0, 0, 0] {
        out.push(prefix.clone());
        return;
    }
    for r in 0..3 {
        if left[r] > 0 {
            let mut next = left;
            next[r] -= 1;
            prefix.push(r as u8);
            role_orders(next, prefix, out);
            prefix.pop();
        }
    }
}

/// Fraction of role layouts (0 resource, 1 plus trap, 2 zero trap) in
/// which an attack with `a` X, `b` Z and `c` XZ factors on fixed positions
/// flips no trap.
pub fn enumerate_avoidance(n: usize, a: usize, b: usize, c: usize) -> Result<BigRational> {
    if !n.is_multiple_of(3) {
        return Err(Error::NotDivisibleByThree(n));
    }
    if a + b + c > n {
        return Err(Error::InvalidArgument(format!("attack weight {} exceeds {n}", a + b + c)));
    }
    let mut layouts = Vec::new();
    role_orders([n / 3; 3], &mut Vec::new(), &mut layouts);
    let safe = layouts
        .iter()
        .filter(|roles| {
            roles.iter().enumerate().all(|(j, &r)| {
                let (x, z) = if j < a {
                    (true, false)
                } else if j < a + b {
                    (false, true)
                } else if j < a + b + c {
                    (true, true)
                } else {
                    (false, false)
                };
                !(r == 1 && z || r == 2 && x)
            })
        })
        .count();
    Ok(BigRational::new(BigInt::from(safe), BigInt::from(layouts.len())))
}

pub fn trapprob_suite(seed: u64) -> Result<Vec<CheckLine>> {
    let (mut profiles, mut exact_ok, mut recursive_ok, mut single_ok, mut singles) = (0, 0, 0, 0, 0);
    for n in [3, 6, 9] {
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    let truth = enumerate_avoidance(n, a, b, c)?;
                    let profile = AttackProfile::new(a, b, c, n)?;
                    profiles += 1;
                    exact_ok += (analytics::trap_avoid_exact(&profile)? == truth) as usize;
                    recursive_ok += (analytics::trap_avoid_recursive(&profile)? == truth) as usize;
                    if b == 0 && c == 0 {
                        singles += 1;
                        single_ok += (analytics::single_type_formula(n, a)? == truth) as usize;
                    }
                }
            }
        }
    }
    let worked = [((3, 1, 0, 0), (2, 3)), ((6, 1, 1, 0), (7, 15))];
    let mut worked_ok = true;
    let mut worked_detail = Vec::new();
    for ((n, a, b, c), (p, q)) in worked {
        let v = analytics::trap_avoid_exact(&AttackProfile::new(a, b, c, n)?)?;
        worked_ok &= v == BigRational::new(BigInt::from(p), BigInt::from(q));
        worked_detail.push(format!("N={n} ({a},{b},{c}) -> {v}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11);
    let mut chain_ok = 0;
    for _ in 0..500 {
        let n = 3 * rng.random_range(1..=40usize);
        let w = rng.random_range(1..=n);
        let a = rng.random_range(0..=w);
        let b = rng.random_range(0..=w - a);
        let profile = AttackProfile::new(a, b, w - a - b, n)?;
        let exact = analytics::trap_avoid_exact(&profile)?;
        let type_bound = analytics::trap_avoid_bound(&profile);
        let weight_bound = analytics::weight_bound(profile.weight());
        chain_ok += (exact <= type_bound && analytics::to_f64(&type_bound) <= weight_bound * (1.0 + 1e-12)) as usize;
    }
    Ok(vec![
        CheckLine::new(
            "trapprob: closed form equals enumeration for N <= 9",
            exact_ok == profiles,
            format!("{exact_ok}/{profiles} profiles equal as rationals"),
        ),
        CheckLine::new(
            "trapprob: recursion equals enumeration for N <= 9",
            recursive_ok == profiles,
            format!("{recursive_ok}/{profiles} profiles equal as rationals"),
        ),
        CheckLine::new(
            "trapprob: single-type falling-factorial formula",
            single_ok == singles,
            format!("{single_ok}/{singles} X-only profiles"),
        ),
        CheckLine::new("trapprob: worked values 2/3 and 7/15", worked_ok, worked_detail.join(", ")),
        CheckLine::new(
            "trapprob: exact <= type bound <= (2/3)^(w/3) on 500 random profiles",
            chain_ok == 500,
            format!("{chain_ok}/500 profiles"),
        ),
    ])
}

/// Small geometries on which chains are enumerated exhaustively.
pub fn small_lattices() -> Result<Vec<(String, RhgLattice, DefectSpec)>> {
    let specs = [
        ([3, 3, 2], Boundary::PeriodicZ, Tube::square(1, 1, 1)),
        ([4, 4, 2], Boundary::Open, Tube { x0: 1, y0: 1, wx: 2, wy: 2 }),
        ([4, 4, 2], Boundary::PeriodicZ, Tube::square(1, 1, 1)),
    ];
    specs
        .into_iter()
        .map(|(dims, boundary, tube)| {
            let lattice = RhgLattice::build_with(dims, boundary)?;
            let defects = DefectSpec::place(&lattice, vec![tube])?;
            let name = format!("{}x{}x{} {:?} with tube {:?}", dims[0], dims[1], dims[2], boundary, tube);
            Ok((name, lattice, defects))
        })
        .collect()
}

/// Active qubits sharing a check node, as adjacency lists.
pub fn check_adjacency(lattice: &RhgLattice, defects: &DefectSpec) -> Result<Vec<Vec<usize>>> {
    let n = lattice.num_qubits();
    let mut members: HashMap<Check, Vec<usize>> = HashMap::new();
    for q in (0..n).filter(|&q| defects.is_active(q)) {
        match lattice.kind(q) {
            QubitKind::Face => {
                for c in lattice.incident_cells(q) {
                    if defects.tube_of_cell(lattice, c).is_none() {
                        members.entry(Check::Cell(c)).or_default().push(q);
                    }
                }
            }
            QubitKind::Edge => {
                for v in lattice.edge_vertices(q)? {
                    members.entry(Check::Vertex(v)).or_default().push(q);
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); n];
    for qs in members.values() {
        for &a in qs {
            adj[a].extend(qs.iter().copied().filter(|&b| b != a));
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    Ok(adj)
}

/// Visits every connected vertex set of size at most `k` exactly once.
pub fn for_each_connected_set(adj: &[Vec<usize>], k: usize, visit: &mut impl FnMut(&[usize])) {
    fn mark(adj: &[Vec<usize>], cover: &mut [u32], v: usize, add: bool) {
        for &u in adj[v].iter().chain(std::iter::once(&v)) {
            if add {
                cover[u] += 1;
            } else {
                cover[u] -= 1;
            }
        }
    }
    #[allow(clippy::too_many_arguments)]
    fn extend(
        adj: &[Vec<usize>],
        k: usize,
        root: usize,
        set: &mut Vec<usize>,
        mut frontier: Vec<usize>,
        cover: &mut [u32],
        visit: &mut impl FnMut(&[usize]),
    ) {
        visit(set);
        if set.len() == k {
            return;
        }
        while let Some(w) = frontier.pop() {
            let mut next = frontier.clone();
            next.extend(adj[w].iter().copied().filter(|&u| u > root && cover[u] == 0));
            set.push(w);
            mark(adj, cover, w, true);
            extend(adj, k, root, set, next, cover, visit);
            mark(adj, cover, w, false);
            set.pop();
        }
    }
    if k == 0 {
        return;
    }
    let mut cover = vec![0u32; adj.len()];
    for v in 0..adj.len() {
        let mut set = vec![v];
        mark(adj, &mut cover, v, true);
        let frontier = adj[v].iter().copied().filter(|&u| u > v).collect();
        extend(adj, k, v, &mut set, frontier, &mut cover, visit);
        mark(adj, &mut cover, v, false);
    }
}

/// Connected chains only: a chain with no syndrome splits into connected
/// pieces that each have no syndrome, and classes add, so a light Logical
/// chain would show up as a light connected one.
pub fn lattice_suite() -> Result<Vec<CheckLine>> {
    const MAX_WEIGHT: usize = 6;
    let mut lines = Vec::new();
    let (mut chains, mut below, mut violations, mut missing) = (0u64, 0u64, 0u64, Vec::new());
    let (mut faces, mut faces_ok) = (0, 0);
    let (mut cubes, mut cubes_trivial) = (0, 0);
    let (mut stars, mut stars_ok, mut loops, mut loops_ok) = (0, 0, 0, 0);
    for (name, lattice, defects) in small_lattices()? {
        let min = lattice::min_logical_weight(&lattice, &defects)?.unwrap_or(usize::MAX);
        let adj = check_adjacency(&lattice, &defects)?;
        let mut lightest = usize::MAX;
        let mut failure = None;
        for_each_connected_set(&adj, MAX_WEIGHT, &mut |set| {
            chains += 1;
            match defects.classify_qubits(set) {
                Ok((class, _)) => {
                    if set.len() < min {
                        below += 1;
                        violations += (class == ChainClass::Logical) as u64;
                    }
                    if class == ChainClass::Logical {
                        lightest = lightest.min(set.len());
                    }
                }
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if min <= MAX_WEIGHT && lightest != min {
            missing.push(format!("{name}: min {min}, lightest found {lightest}"));
        }

        let reps = defects.logical_reps()?;
        for q in 0..lattice.num_qubits() {
            if lattice.kind(q) == QubitKind::Face && defects.is_active(q) {
                let cells = lattice.incident_cells(q);
                if cells.len() == 2 && cells.iter().all(|&c| defects.tube_of_cell(&lattice, c).is_none()) {
                    faces += 1;
                    let mut s = lattice::syndrome(&lattice, &ZChain::from_qubits([q]), &defects)?;
                    let mut want: Vec<Check> = cells.into_iter().map(Check::Cell).collect();
                    s.sort_unstable();
                    want.sort_unstable();
                    faces_ok += (s == want) as usize;
                }
            }
            if !defects.is_active(q) {
                continue;
            }
            let around = ZChain::from_qubits(lattice.neighbours(q));
            let class = lattice::classify(&lattice, &around, &defects, reps)?;
            match lattice.kind(q) {
                QubitKind::Edge => {
                    stars += 1;
                    stars_ok += (class == ChainClass::Trivial) as usize;
                }
                QubitKind::Face => {
                    loops += 1;
                    loops_ok += (class == ChainClass::Trivial) as usize;
                }
            }
        }
        for id in 0..lattice.num_cells() {
            let cell = lattice.cell_of_id(id);
            if defects.tube_of_cell(&lattice, cell).is_none() {
                cubes += 1;
                let chain = ZChain::from_qubits(lattice.cell_faces(cell)?);
                cubes_trivial += (lattice::classify(&lattice, &chain, &defects, reps)? == ChainClass::Trivial) as usize;
            }
        }
    }
    lines.push(CheckLine::new(
        "lattice: no Logical chain below the minimum logical weight",
        violations == 0 && missing.is_empty(),
        if missing.is_empty() {
            format!("{chains} connected chains of weight <= {MAX_WEIGHT} on 3 lattices, {below} below the minimum, {violations} Logical")
        } else {
            format!("minimum not attained: {}", missing.join("; "))
        },
    ));
    lines.push(CheckLine::new(
        "lattice: a bulk face flips exactly its two cubes",
        faces_ok == faces && faces > 0,
        format!("{faces_ok}/{faces} bulk faces"),
    ));
    lines.push(CheckLine::new(
        "lattice: the six faces of a cube classify Trivial",
        cubes_trivial == cubes && cubes > 0,
        format!(
            "{cubes_trivial}/{cubes} cubes; each face is shared with a neighbouring cube, so the neighbours see odd parity"
        ),
    ));
    lines.push(CheckLine::new(
        "lattice: the faces around an edge classify Trivial",
        stars_ok == stars,
        format!("{stars_ok}/{stars} active edges"),
    ));
    lines.push(CheckLine::new(
        "lattice: the edges around a face classify Trivial",
        loops_ok == loops,
        format!("{loops_ok}/{loops} active faces"),
    ));
    Ok(lines)
}

/// Exact and sampled comparison of the tableau with the dense engine on
/// random Clifford + measurement circuits.
pub fn circuit_equivalence(seed: u64, circuits: usize, shots: usize) -> Result<Vec<CheckLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc1c);
    let (mut exact_ok, mut impossible, mut stat, mut dof) = (0, 0usize, 0.0f64, 0u64);
    let mut deterministic = 0usize;
    for i in 0..circuits {
        let n = 1 + i % 6;
        let circuit = Circuit::random(n, 6 * n + 12, &mut rng)?;
        let truth = dense::circuit_distribution(&circuit)?;
        let exact = stab::outcome_distribution(&circuit)?;
        let support = |d: &BTreeMap<Vec<Outcome>, f64>| -> Vec<Vec<Outcome>> {
            d.iter().filter(|(_, &p)| p > 1e-12).map(|(k, _)| k.clone()).collect()
        };
        exact_ok += (support(&truth) == support(&exact) && dense::total_variation(&truth, &exact) < 1e-9) as usize;
        let m = circuit.num_measurements();
        deterministic += (0..m)
            .filter(|&j| {
                let mut seen = truth.keys().filter(|k| truth[*k] > 1e-12).map(|k| k[j]);
                let first = seen.next();
                seen.all(|o| Some(o) == first)
            })
            .count();
        let mut counts: BTreeMap<Vec<Outcome>, usize> = BTreeMap::new();
        for _ in 0..shots {
            let mut t = Tableau::new(n);
            *counts.entry(t.run(&circuit, &mut rng)?).or_insert(0) += 1;
        }
        impossible += counts
            .iter()
            .filter(|(k, _)| truth.get(*k).copied().unwrap_or(0.0) <= 1e-12)
            .map(|(_, c)| c)
            .sum::<usize>();
        let cells: Vec<f64> = truth.values().copied().filter(|&p| p > 1e-12).collect();
        if cells.len() > 1 {
            dof += cells.len() as u64 - 1;
            for (k, &p) in truth.iter().filter(|(_, &p)| p > 1e-12) {
                let expected = p * shots as f64;
                let observed = counts.get(k).copied().unwrap_or(0) as f64;
                stat += (observed - expected).powi(2) / expected;
            }
        }
    }
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?.cdf(stat)
    };
    Ok(vec![
        CheckLine::new(
            "crosscheck: exact outcome distributions agree",
            exact_ok == circuits,
            format!("{exact_ok}/{circuits} random circuits on 1-6 qubits"),
        ),
        CheckLine::new(
            "crosscheck: sampled records respect deterministic outcomes",
            impossible == 0,
            format!(
                "{impossible} impossible records in {} shots, {deterministic} deterministic measurements",
                circuits * shots
            ),
        ),
        CheckLine::new(
            "crosscheck: sampled frequencies pass aggregate chi-squared",
            p_value > 0.001,
            format!("chi2 {stat:.1} on {dof} dof, p = {p_value:.4}"),
        ),
    ])
}

/// Frame-level protocol trials re-run at state level.
pub fn protocol_crosscheck(seed: u64, trials: u64) -> Result<Vec<CheckLine>> {
    let (lattice, defects) = lattice::CanonicalGeometry::for_distance(2)?.build()?;
    let code = std::sync::Arc::new(RhgCode::new(lattice, defects)?);
    let cases: Vec<(&str, Setup, AdversaryModel)> = vec![
        (
            "trap protocol on bare qubits",
            Setup::with_code(ProtocolKind::Trap, std::sync::Arc::new(Unencoded { qubits: 2 }))?,
            AdversaryModel::RandomPauliChannel(PauliChannel::iid(0.15, 0.15, 0.1)?),
        ),
        (
            "topological protocol on bare qubits",
            Setup::with_code(ProtocolKind::Topological, std::sync::Arc::new(Unencoded { qubits: 5 }))?,
            AdversaryModel::RandomPauliChannel(PauliChannel::iid(0.15, 0.15, 0.1)?),
        ),
        (
            "trap protocol on the d=2 lattice",
            Setup::with_code(ProtocolKind::Trap, code.clone())?,
            AdversaryModel::RandomPauliChannel(PauliChannel::iid(0.002, 0.004, 0.002)?),
        ),
        (
            "topological protocol on the d=2 lattice",
            Setup::with_code(ProtocolKind::Topological, code.clone())?,
            AdversaryModel::RandomPauliChannel(PauliChannel::iid(0.004, 0.008, 0.004)?),
        ),
    ];
    let mut lines = Vec::new();
    for (name, setup, adversary) in cases {
        let report = crosscheck_trials(&setup, &adversary, seed, trials)?;
        lines.push(CheckLine::new(
            &format!("crosscheck: {name}"),
            report.passed(),
            format!("{}/{} trials agree with state-level simulation", report.agreed, report.checked),
        ));
    }
    let targeted = Setup::with_code(ProtocolKind::Topological, code)?;
    let chain = AdversaryModel::targeted(&targeted, SinglePauli::Z)?;
    let report = crosscheck_trials(&targeted, &chain, seed, trials)?;
    lines.push(CheckLine::new(
        "crosscheck: targeted logical chain on the d=2 lattice",
        report.passed(),
        format!("{}/{} trials agree with state-level simulation", report.agreed, report.checked),
    ));
    Ok(lines)
}

pub fn crosscheck_suite(seed: u64) -> Result<Vec<CheckLine>> {
    let mut lines = circuit_equivalence(seed, 200, 400)?;
    lines.extend(protocol_crosscheck(seed, 25)?);
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn enumeration_of_worked_values() {
        let r = |p: i64, q: i64| BigRational::new(BigInt::from(p), BigInt::from(q));
        assert_eq!(enumerate_avoidance(3, 1, 0, 0).unwrap(), r(2, 3));
        assert_eq!(enumerate_avoidance(6, 1, 1, 0).unwrap(), r(7, 15));
        assert_eq!(enumerate_avoidance(3, 0, 0, 1).unwrap(), r(1, 3));
        assert!(enumerate_avoidance(4, 1, 0, 0).is_err());
    }

    #[test]
    fn connected_sets_of_a_path() {
        // path 0-1-2-3: 4 + 3 + 2 + 1 connected sets
        let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let mut seen = Vec::new();
        for_each_connected_set(&adj, 4, &mut |s| {
            let mut s = s.to_vec();
            s.sort_unstable();
            seen.push(s);
        });
        seen.sort();
        let before = seen.len();
        seen.dedup();
        assert_eq!((before, seen.len()), (10, 10));
    }

    #[test]
    fn connected_sets_of_a_triangle_with_tail() {
        // triangle 0-1-2 plus 2-3: sets of size <= 2 are 4 vertices + 4 edges
        let adj = vec![vec![1, 2], vec![0, 2], vec![0, 1, 3], vec![2]];
        let mut count = [0usize; 5];
        for_each_connected_set(&adj, 4, &mut |s| count[s.len()] += 1);
        assert_eq!(count, [0, 4, 4, 3, 1]);
    }
}
