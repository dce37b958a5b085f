//! The two verification protocols at Pauli-frame level.
//!
//! Trap protocol: the server prepares `N` qubits; the client secretly
//! interleaves the `N/3` resource qubits with `N/3` `|+⟩` traps and `N/3`
//! `|0⟩` traps, and every qubit carries a random byproduct `σ_q` that only
//! the client knows. An attack `σ_α` survives the client's correction as
//! `P† σ_α P` up to sign. Any flipped trap aborts; otherwise the part on
//! the resource is classified by the code.
//!
//! Topological protocol: no traps. The client hides the lattice frame with
//! a secret twirl key `K_k`, so the attack reaches the lattice as
//! `K_k† σ_α K_k`. A residual X factor is caught; surviving Z content is
//! classified by the code and any syndrome aborts.
//!
//! In both cases the client accepts a corrupted computation ("fooled")
//! exactly when nothing is detected and the residual is Logical.

pub mod adversary;
pub mod check;
pub mod code;
pub mod estimate;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{ChainClass, LatticeConfig};
use crate::pauli::{ByproductKey, PartialRoles, PauliString, Role, RolePermutation, SinglePauli, TwirlKey};
use crate::{Error, Result};

pub use adversary::{AdversaryKind, AdversaryModel, AdversarySpec, PauliChannel, PublicView};
pub use code::{ResourceCode, RhgCode, Unencoded};
pub use estimate::{estimate_fooling, run_trial_range, run_trials, wilson_interval, EstimateResult, TrialRecord};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_0b1d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Trap,
    #[serde(alias = "topo")]
    Topological,
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trap" => Ok(ProtocolKind::Trap),
            "topo" | "topological" => Ok(ProtocolKind::Topological),
            other => Err(Error::Parse(format!("unknown protocol {other:?}"))),
        }
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_trials() -> u64 {
    1000
}

/// Protocol choice, register size and code.
///
/// Without a lattice the resource is unencoded: `n/3` bare qubits for the
/// trap protocol and `n` for the topological one. With a lattice, `n` is
/// optional and must match `3·|lattice|` (trap) or `|lattice|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub protocol: ProtocolKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
}

/// A validated configuration with its code built.
#[derive(Clone, Debug)]
pub struct Setup {
    kind: ProtocolKind,
    n: usize,
    code: Arc<dyn ResourceCode>,
}

impl Setup {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        let code: Arc<dyn ResourceCode> = match (&config.lattice, config.n, config.protocol) {
            (Some(lc), _, _) => {
                let (lattice, defects) = lc.build()?;
                Arc::new(RhgCode::new(lattice, defects)?)
            }
            (None, Some(n), ProtocolKind::Trap) => {
                if !n.is_multiple_of(3) {
                    return Err(Error::NotDivisibleByThree(n));
                }
                Arc::new(Unencoded { qubits: n / 3 })
            }
            (None, Some(n), ProtocolKind::Topological) => Arc::new(Unencoded { qubits: n }),
            (None, None, _) => return Err(Error::Config("give either `n` or a lattice".into())),
        };
        let setup = Setup::with_code(config.protocol, code)?;
        if let Some(n) = config.n {
            if n != setup.n {
                return Err(Error::Config(format!("n = {n} does not match the {} qubits the lattice needs", setup.n)));
            }
        }
        Ok(setup)
    }

    pub fn with_code(kind: ProtocolKind, code: Arc<dyn ResourceCode>) -> Result<Self> {
        let m = code.num_qubits();
        if m == 0 {
            return Err(Error::InvalidArgument("empty resource".into()));
        }
        let n = match kind {
            ProtocolKind::Trap => 3 * m,
            ProtocolKind::Topological => m,
        };
        Ok(Setup { kind, n, code })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    /// Qubits the server prepares.
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn code(&self) -> &dyn ResourceCode {
        self.code.as_ref()
    }

    pub fn public_view(&self) -> PublicView {
        PublicView {
            protocol: self.kind,
            num_qubits: self.n,
            resource_qubits: self.code.num_qubits(),
            code_distance: self.code.distance(),
        }
    }

    /// The bound the fooling rate must respect for this code.
    pub fn bound(&self) -> f64 {
        let d = self.code.distance();
        match self.kind {
            ProtocolKind::Trap => crate::analytics::fooling_bound_p1(d),
            ProtocolKind::Topological => crate::analytics::fooling_bound_p2(d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
}

/// A record on the quantum channel. The public constructor only builds
/// server-to-client deliveries; anything else can only come from
/// deserialising foreign data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    from: Party,
    to: Party,
    qubits: usize,
}

impl Message {
    pub fn delivery(qubits: usize) -> Self {
        Message { from: Party::Bob, to: Party::Alice, qubits }
    }

    pub fn from(&self) -> Party {
        self.from
    }

    pub fn to(&self) -> Party {
        self.to
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Abort,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    /// A trap measured `-` (trap protocol) or a residual X factor exposed by
    /// the twirl key (topological protocol).
    Flagged,
    Syndrome,
}

/// Number of single-qubit measurements per basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisCounts {
    pub x: usize,
    pub z: usize,
}

/// Per-trial result without the bookkeeping of a full transcript.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub verdict: Verdict,
    pub reason: Option<AbortReason>,
    /// Flipped traps, or key-exposed X factors in the topological protocol.
    pub trap_flips: usize,
    pub syndrome_count: usize,
    /// The residual on the resource is Logical.
    pub logical: bool,
}

impl TrialOutcome {
    fn decide(trap_flips: usize, class: ChainClass, syndrome_count: usize) -> Self {
        let reason = if trap_flips > 0 {
            Some(AbortReason::Flagged)
        } else if class == ChainClass::Detected {
            Some(AbortReason::Syndrome)
        } else {
            None
        };
        TrialOutcome {
            verdict: if reason.is_some() { Verdict::Abort } else { Verdict::Accept },
            reason,
            trap_flips,
            syndrome_count,
            logical: class == ChainClass::Logical,
        }
    }

    pub fn fooled(&self) -> bool {
        self.verdict == Verdict::Accept && self.logical
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub protocol: ProtocolKind,
    pub messages: Vec<Message>,
    pub alice_bases: BasisCounts,
    /// Minus outcomes on the verification qubits.
    pub alice_minus_outcomes: usize,
    pub outcome: TrialOutcome,
    /// Names of the inputs the adversary was handed.
    pub adversary_inputs: Vec<String>,
}

impl Transcript {
    fn new(setup: &Setup, outcome: TrialOutcome) -> Self {
        let m = setup.code().num_qubits();
        // resource qubits are read in X except for the Z-measured defects,
        // which the frame-level run does not distinguish
        let alice_bases = match setup.kind {
            ProtocolKind::Trap => BasisCounts { x: 2 * m, z: m },
            ProtocolKind::Topological => BasisCounts { x: m, z: 0 },
        };
        Transcript {
            protocol: setup.kind,
            messages: vec![Message::delivery(setup.n)],
            alice_bases,
            alice_minus_outcomes: outcome.trap_flips,
            outcome,
            adversary_inputs: PublicView::FIELDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn aborted(&self) -> bool {
        self.outcome.verdict == Verdict::Abort
    }
}

/// Inputs an adversary may legitimately see.
pub const PUBLIC_INPUTS: [&str; 4] = PublicView::FIELDS;

/// True iff every message flows from the server to the client and the
/// adversary saw public data only.
pub fn channel_direction_audit(t: &Transcript) -> bool {
    let one_way = t.messages.iter().all(|m| m.from == Party::Bob && m.to == Party::Alice);
    let public = t.adversary_inputs.iter().all(|i| PUBLIC_INPUTS.contains(&i.as_str()));
    one_way && public
}

/// Independent random streams for one trial: the client's secrets and the
/// server's attack never share a generator.
#[derive(Clone, Debug)]
pub struct TrialRngs {
    pub alice: ChaCha8Rng,
    pub bob: ChaCha8Rng,
}

impl TrialRngs {
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        let mut alice = ChaCha8Rng::seed_from_u64(seed);
        let mut bob = alice.clone();
        alice.set_stream(2 * trial);
        bob.set_stream(2 * trial + 1);
        TrialRngs { alice, bob }
    }
}

/// Where the client's role permutation comes from.
#[derive(Clone, Copy, Debug)]
pub enum Roles<'a> {
    Full(&'a RolePermutation),
    Partial(&'a PartialRoles),
}

impl Roles<'_> {
    fn lookup(&self, position: usize) -> Result<(Role, usize)> {
        match self {
            Roles::Full(p) => {
                let role = p.role(position);
                let register = p.register_of(position);
                Ok((role, register % (p.len() / 3)))
            }
            Roles::Partial(p) => p.role_at(position).ok_or(Error::UnknownQubit(position)),
        }
    }
}

/// Trap protocol for a fixed attack and fixed secrets.
pub fn evaluate_protocol1(
    setup: &Setup,
    sigma: &PauliString,
    roles: Roles<'_>,
    q: &ByproductKey,
) -> Result<TrialOutcome> {
    if setup.kind != ProtocolKind::Trap {
        return Err(Error::InvalidArgument("not a trap-protocol setup".into()));
    }
    if sigma.num_qubits() != setup.n || q.len() != setup.n {
        return Err(Error::DimensionMismatch { expected: setup.n, found: sigma.num_qubits().max(q.len()) });
    }
    // σ_q† σ_α σ_q = ±σ_α: the sign is a global phase
    let corrected = sigma.conjugate_by_byproduct(q)?;
    let mut flips = 0;
    let mut resource = Vec::new();
    for (j, f) in corrected.support() {
        let (role, rank) = roles.lookup(j)?;
        match role {
            Role::Resource => resource.push((rank, f)),
            trap => flips += trap.flipped_by(f) as usize,
        }
    }
    let (class, syndrome_count) = setup.code.classify(&resource)?;
    Ok(TrialOutcome::decide(flips, class, syndrome_count))
}

/// Topological protocol for a fixed attack and fixed secrets.
pub fn evaluate_protocol2(setup: &Setup, sigma: &PauliString, k: &TwirlKey, q: &ByproductKey) -> Result<TrialOutcome> {
    if setup.kind != ProtocolKind::Topological {
        return Err(Error::InvalidArgument("not a topological-protocol setup".into()));
    }
    if sigma.num_qubits() != setup.n || q.len() != setup.n || k.len() != setup.n {
        return Err(Error::DimensionMismatch { expected: setup.n, found: sigma.num_qubits() });
    }
    let residual = sigma.conjugate_by_byproduct(q)?.conjugate_by_twirlkey(k)?;
    let mut flagged = 0;
    let mut surviving = Vec::new();
    for (j, f) in residual.support() {
        match f {
            SinglePauli::X => flagged += 1,
            _ => surviving.push((j, f)),
        }
    }
    let (class, syndrome_count) = setup.code.classify(&surviving)?;
    Ok(TrialOutcome::decide(flagged, class, syndrome_count))
}

/// One trial of the trap protocol with freshly drawn secrets. Only the
/// roles at attacked positions are sampled.
pub fn run_trial1(setup: &Setup, adversary: &AdversaryModel, rngs: &mut TrialRngs) -> Result<TrialOutcome> {
    let sigma = adversary.draw(&setup.public_view(), &mut rngs.bob)?;
    let q = ByproductKey::sample(setup.n, &mut rngs.alice);
    let positions: Vec<usize> = sigma.support().map(|(j, _)| j).collect();
    let roles = RolePermutation::sample_at(setup.n, &positions, &mut rngs.alice)?;
    evaluate_protocol1(setup, &sigma, Roles::Partial(&roles), &q)
}

pub fn run_trial2(setup: &Setup, adversary: &AdversaryModel, rngs: &mut TrialRngs) -> Result<TrialOutcome> {
    let sigma = adversary.draw(&setup.public_view(), &mut rngs.bob)?;
    let k = TwirlKey::sample(setup.n, &mut rngs.alice);
    let q = ByproductKey::sample(setup.n, &mut rngs.alice);
    evaluate_protocol2(setup, &sigma, &k, &q)
}

pub fn run_trial(setup: &Setup, adversary: &AdversaryModel, rngs: &mut TrialRngs) -> Result<TrialOutcome> {
    match setup.kind {
        ProtocolKind::Trap => run_trial1(setup, adversary, rngs),
        ProtocolKind::Topological => run_trial2(setup, adversary, rngs),
    }
}

pub fn run_protocol1(setup: &Setup, adversary: &AdversaryModel, rngs: &mut TrialRngs) -> Result<Transcript> {
    Ok(Transcript::new(setup, run_trial1(setup, adversary, rngs)?))
}

pub fn run_protocol2(setup: &Setup, adversary: &AdversaryModel, rngs: &mut TrialRngs) -> Result<Transcript> {
    Ok(Transcript::new(setup, run_trial2(setup, adversary, rngs)?))
}
