//! Attacks by the server.
//!
//! After the client's averaging over byproducts any attack acts as a random
//! Pauli operator, so every model here just draws a string `σ_α`. The only
//! input a model ever receives is the [`PublicView`].

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::{ProtocolKind, Setup};
use crate::dense::{pauli_from_index, PauliChannelWeights};
use crate::pauli::{PauliString, Phase, SinglePauli};
use crate::{Error, Result};

/// Everything the server knows: the protocol, the number of qubits it
/// prepares, the size of the resource and the code distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicView {
    pub protocol: ProtocolKind,
    pub num_qubits: usize,
    pub resource_qubits: usize,
    pub code_distance: usize,
}

impl PublicView {
    pub const FIELDS: [&'static str; 4] = ["protocol", "num_qubits", "resource_qubits", "code_distance"];
}

#[derive(Clone, Debug, PartialEq)]
pub enum PauliChannel {
    /// Independent per-qubit channel with the given X, Z and XZ rates.
    Iid { px: f64, pz: f64, pxz: f64 },
    /// Weights `C̃_α` over all strings of a small register.
    Explicit(PauliChannelWeights),
}

impl PauliChannel {
    pub fn iid(px: f64, pz: f64, pxz: f64) -> Result<Self> {
        let total = px + pz + pxz;
        if [px, pz, pxz].iter().any(|p| p.is_nan() || *p < 0.0) || total > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("invalid per-qubit rates ({px}, {pz}, {pxz})")));
        }
        Ok(PauliChannel::Iid { px, pz, pxz })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryModel {
    Honest,
    FixedPauli(PauliString),
    RandomPauliChannel(PauliChannel),
    /// Applies `factor` on every qubit of a logical string of the code.
    /// Under the trap protocol code qubit `r` sits at position `3r`.
    TargetedLogical {
        chain: Vec<usize>,
        factor: SinglePauli,
    },
}

impl AdversaryModel {
    /// Targeted attack along the code's own shortest logical string.
    pub fn targeted(setup: &Setup, factor: SinglePauli) -> Result<Self> {
        Ok(AdversaryModel::TargetedLogical { chain: setup.code().logical_chain()?, factor })
    }

    pub fn draw<R: Rng + ?Sized>(&self, view: &PublicView, rng: &mut R) -> Result<PauliString> {
        let n = view.num_qubits;
        match self {
            AdversaryModel::Honest => Ok(PauliString::identity(n)),
            AdversaryModel::FixedPauli(p) => {
                if p.num_qubits() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: p.num_qubits() });
                }
                Ok(p.clone())
            }
            AdversaryModel::RandomPauliChannel(PauliChannel::Iid { px, pz, pxz }) => {
                Ok(sample_iid(n, [*px, *pz, *pxz], rng))
            }
            AdversaryModel::RandomPauliChannel(PauliChannel::Explicit(w)) => {
                if w.num_qubits() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: w.num_qubits() });
                }
                Ok(pauli_from_index(n, w.sampler()?.sample(rng)))
            }
            AdversaryModel::TargetedLogical { chain, factor } => {
                let stride = match view.protocol {
                    ProtocolKind::Trap => 3,
                    ProtocolKind::Topological => 1,
                };
                let mut p = PauliString::identity(n);
                for &r in chain {
                    if r >= view.resource_qubits {
                        return Err(Error::UnknownQubit(r));
                    }
                    p.set_factor(stride * r, *factor)?;
                }
                Ok(p)
            }
        }
    }
}

/// Independent per-qubit draw, skipping untouched qubits geometrically.
fn sample_iid<R: Rng + ?Sized>(n: usize, rates: [f64; 3], rng: &mut R) -> PauliString {
    let mut p = PauliString::identity(n);
    let total: f64 = rates.iter().sum();
    if total <= 0.0 || n == 0 {
        return p;
    }
    let pick = |rng: &mut R| {
        let u = rng.random::<f64>() * total;
        if u < rates[0] {
            SinglePauli::X
        } else if u < rates[0] + rates[1] {
            SinglePauli::Z
        } else {
            SinglePauli::XZ
        }
    };
    if total >= 1.0 {
        for j in 0..n {
            let f = pick(rng);
            p.set_factor(j, f).expect("in range");
        }
        return p;
    }
    let gap = Geometric::new(total).expect("rate in (0, 1)");
    let mut j = gap.sample(rng);
    while j < n as u64 {
        let f = pick(rng);
        p.set_factor(j as usize, f).expect("in range");
        j += 1 + gap.sample(rng);
    }
    p
}

/// One `[adversary]` entry of a weighted string list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelTerm {
    pub pauli: String,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    #[default]
    Honest,
    Fixed,
    Channel,
    Targeted,
}

impl std::str::FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "honest" => Ok(AdversaryKind::Honest),
            "fixed" => Ok(AdversaryKind::Fixed),
            "channel" => Ok(AdversaryKind::Channel),
            "targeted" => Ok(AdversaryKind::Targeted),
            other => Err(Error::Parse(format!("unknown adversary {other:?}"))),
        }
    }
}

/// Text form of an adversary, resolved against a [`Setup`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    #[serde(default)]
    pub kind: AdversaryKind,
    /// Fixed string, either in full or as sparse `"X3 Z5 XZ10"` tokens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pxz: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<ChannelTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<SinglePauli>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<usize>>,
}

impl AdversarySpec {
    pub fn resolve(&self, setup: &Setup) -> Result<AdversaryModel> {
        let n = setup.num_qubits();
        match self.kind {
            AdversaryKind::Honest => Ok(AdversaryModel::Honest),
            AdversaryKind::Fixed => {
                let text =
                    self.pauli.as_deref().ok_or_else(|| Error::Config("fixed adversary needs `pauli`".into()))?;
                Ok(AdversaryModel::FixedPauli(parse_pauli(text, n)?))
            }
            AdversaryKind::Channel => {
                if !self.terms.is_empty() {
                    let entries = self
                        .terms
                        .iter()
                        .map(|t| Ok((parse_pauli(&t.pauli, n)?, t.weight)))
                        .collect::<Result<Vec<_>>>()?;
                    if n > crate::dense::MAX_QUBITS {
                        return Err(Error::TooLarge { n, max: crate::dense::MAX_QUBITS });
                    }
                    let w = PauliChannelWeights::from_strings(n, &entries)?;
                    return Ok(AdversaryModel::RandomPauliChannel(PauliChannel::Explicit(w)));
                }
                let rate = |p: Option<f64>| p.unwrap_or(0.0);
                Ok(AdversaryModel::RandomPauliChannel(PauliChannel::iid(rate(self.px), rate(self.pz), rate(self.pxz))?))
            }
            AdversaryKind::Targeted => {
                let factor = self.factor.unwrap_or(SinglePauli::Z);
                if factor == SinglePauli::I {
                    return Err(Error::Config("targeted adversary needs a non-identity factor".into()));
                }
                match &self.chain {
                    Some(chain) => Ok(AdversaryModel::TargetedLogical { chain: chain.clone(), factor }),
                    None => AdversaryModel::targeted(setup, factor),
                }
            }
        }
    }
}

/// Parses either a full string (`"X.I.Z"`, optionally with a phase prefix
/// such as `"- X.I.Z"`) or sparse tokens (`"X0 Z7"`).
pub fn parse_pauli(text: &str, n: usize) -> Result<PauliString> {
    let text = text.trim();
    let sparse = text.split_whitespace().all(|t| t.ends_with(|c: char| c.is_ascii_digit()));
    if !sparse {
        let full = if text.contains(' ') { text.to_string() } else { format!("+ {text}") };
        let p: PauliString = full.parse()?;
        if p.num_qubits() != n {
            return Err(Error::DimensionMismatch { expected: n, found: p.num_qubits() });
        }
        return Ok(p);
    }
    let mut p = PauliString::identity(n).with_phase(Phase::ONE);
    for tok in text.split_whitespace() {
        let split = tok.find(|c: char| c.is_ascii_digit()).expect("token ends with a digit");
        let (name, idx) = tok.split_at(split);
        let f: SinglePauli = name.parse()?;
        let j: usize = idx.parse().map_err(|_| Error::Parse(format!("bad index in {tok:?}")))?;
        if j >= n {
            return Err(Error::OutOfRange { index: j, len: n });
        }
        p.set_factor(j, f)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn view(n: usize) -> PublicView {
        PublicView { protocol: ProtocolKind::Trap, num_qubits: n, resource_qubits: n / 3, code_distance: 1 }
    }

    #[test]
    fn iid_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let adv = AdversaryModel::RandomPauliChannel(PauliChannel::iid(0.02, 0.03, 0.01).unwrap());
        let (mut x, mut z, mut xz) = (0, 0, 0);
        let trials = 200;
        for _ in 0..trials {
            let (a, b, c) = adv.draw(&view(3000), &mut rng).unwrap().counts();
            x += a;
            z += b;
            xz += c;
        }
        let total = (trials * 3000) as f64;
        for (count, p) in [(x, 0.02), (z, 0.03), (xz, 0.01)] {
            let sigma = (total * p * (1.0 - p)).sqrt();
            assert!((count as f64 - total * p).abs() < 4.0 * sigma, "{count} vs {}", total * p);
        }
    }

    #[test]
    fn full_rate_hits_every_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let adv = AdversaryModel::RandomPauliChannel(PauliChannel::iid(0.0, 1.0, 0.0).unwrap());
        assert_eq!(adv.draw(&view(9), &mut rng).unwrap().to_string(), "+ Z.Z.Z.Z.Z.Z.Z.Z.Z");
    }

    #[test]
    fn targeted_uses_stride_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let adv = AdversaryModel::TargetedLogical { chain: vec![0, 2], factor: SinglePauli::Z };
        let p = adv.draw(&view(9), &mut rng).unwrap();
        assert_eq!(p.support().map(|(j, _)| j).collect::<Vec<_>>(), vec![0, 6]);
        let bad = AdversaryModel::TargetedLogical { chain: vec![3], factor: SinglePauli::Z };
        assert!(bad.draw(&view(9), &mut rng).is_err());
    }

    #[test]
    fn sparse_and_full_parsing() {
        let expected: PauliString = "+ X.I.XZ".parse().unwrap();
        assert_eq!(parse_pauli("X0 XZ2", 3).unwrap(), expected);
        assert_eq!(parse_pauli("X.I.XZ", 3).unwrap(), expected);
        assert_eq!(parse_pauli("- X.I.XZ", 3).unwrap().phase(), Phase::MINUS_ONE);
        assert!(parse_pauli("X.I", 3).is_err());
        assert!(parse_pauli("Z5", 3).is_err());
        assert_eq!(parse_pauli("Z", 1).unwrap(), "+ Z".parse().unwrap());
    }

    #[test]
    fn bad_rates_rejected() {
        assert!(PauliChannel::iid(0.6, 0.6, 0.0).is_err());
        assert!(PauliChannel::iid(-0.1, 0.0, 0.0).is_err());
    }
}
