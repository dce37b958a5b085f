//! Phase-tracked Pauli strings and the secret keys that act on them.
//!
//! A [`PauliString`] on `n` qubits is stored as `i^phase * ⊗_j X_j^{x_j} Z_j^{z_j}`
//! with the x and z bits packed 64 qubits per word. The single-qubit factor
//! with both bits set is written `XZ` (not `Y = iXZ`); every phase is tracked
//! exactly, so `XZ` and `Y` differ only in the global phase word.
//!
//! The keys are:
//!
//! * [`ByproductKey`] `q = (x_1..x_N, z_1..z_N)`, the random measurement
//!   byproduct `σ_q = ⊗ X^{x_j} Z^{z_j}` the client corrects.
//! * [`TwirlKey`] `k = (h_1..h_N, t_1..t_N)`, the per-qubit secret
//!   `K_k = ⊗ T^{t_j} H^{h_j}` with `T = diag(1, i)`.
//! * [`RolePermutation`] the secret interleaving of resource qubits with
//!   `|+⟩` and `|0⟩` traps.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub(crate) fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
fn bit(words: &[u64], j: usize) -> bool {
    (words[j / 64] >> (j % 64)) & 1 == 1
}

#[inline]
fn set_bit(words: &mut [u64], j: usize, value: bool) {
    let mask = 1u64 << (j % 64);
    if value {
        words[j / 64] |= mask;
    } else {
        words[j / 64] &= !mask;
    }
}

fn random_words<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u64> {
    let mut words: Vec<u64> = (0..word_count(n)).map(|_| rng.random()).collect();
    if !n.is_multiple_of(64) {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
    words
}

/// One tensor factor of a Pauli string, phase not included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SinglePauli {
    I,
    X,
    Z,
    XZ,
}

impl SinglePauli {
    pub const ALL: [SinglePauli; 4] = [SinglePauli::I, SinglePauli::X, SinglePauli::Z, SinglePauli::XZ];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => SinglePauli::I,
            (true, false) => SinglePauli::X,
            (false, true) => SinglePauli::Z,
            (true, true) => SinglePauli::XZ,
        }
    }

    pub fn x(self) -> bool {
        matches!(self, SinglePauli::X | SinglePauli::XZ)
    }

    pub fn z(self) -> bool {
        matches!(self, SinglePauli::Z | SinglePauli::XZ)
    }

    pub fn is_identity(self) -> bool {
        self == SinglePauli::I
    }

    pub fn token(self) -> &'static str {
        match self {
            SinglePauli::I => "I",
            SinglePauli::X => "X",
            SinglePauli::Z => "Z",
            SinglePauli::XZ => "XZ",
        }
    }
}

impl fmt::Display for SinglePauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SinglePauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(SinglePauli::I),
            "X" => Ok(SinglePauli::X),
            "Z" => Ok(SinglePauli::Z),
            "XZ" => Ok(SinglePauli::XZ),
            other => Err(Error::Parse(format!("unknown Pauli factor {other:?}"))),
        }
    }
}

/// A power of `i`, stored modulo 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn new(exponent: u32) -> Self {
        Phase((exponent % 4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    /// Multiplied by `i^exponent`.
    pub fn times_i(self, exponent: u32) -> Self {
        Phase::new(self.0 as u32 + exponent)
    }

    /// Complex conjugate.
    pub fn conj(self) -> Self {
        Phase::new(4 - self.0 as u32)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+",
            1 => "i",
            2 => "-",
            _ => "-i",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" => Ok(Phase::ONE),
            "i" => Ok(Phase::I),
            "-" => Ok(Phase::MINUS_ONE),
            "-i" => Ok(Phase::MINUS_I),
            other => Err(Error::Parse(format!("unknown phase prefix {other:?}"))),
        }
    }
}

/// An `n`-qubit Pauli operator `i^phase ⊗_j X^{x_j} Z^{z_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, xs: vec![0; word_count(n)], zs: vec![0; word_count(n)], phase: Phase::ONE }
    }

    pub fn from_factors(phase: Phase, factors: &[SinglePauli]) -> Self {
        let mut p = PauliString::identity(factors.len());
        for (j, f) in factors.iter().enumerate() {
            set_bit(&mut p.xs, j, f.x());
            set_bit(&mut p.zs, j, f.z());
        }
        p.phase = phase;
        p
    }

    /// Identity everywhere except `factor` on qubit `j`.
    pub fn single(n: usize, j: usize, factor: SinglePauli) -> Result<Self> {
        let mut p = PauliString::identity(n);
        p.set_factor(j, factor)?;
        Ok(p)
    }

    pub fn from_bits(xs: &[bool], zs: &[bool], phase: Phase) -> Result<Self> {
        if xs.len() != zs.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), found: zs.len() });
        }
        let mut p = PauliString::identity(xs.len());
        for j in 0..xs.len() {
            set_bit(&mut p.xs, j, xs[j]);
            set_bit(&mut p.zs, j, zs[j]);
        }
        p.phase = phase;
        Ok(p)
    }

    /// Uniformly random factors with phase `+1`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        PauliString { n, xs: random_words(n, rng), zs: random_words(n, rng), phase: Phase::ONE }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn x_words(&self) -> &[u64] {
        &self.xs
    }

    pub fn z_words(&self) -> &[u64] {
        &self.zs
    }

    /// The tensor factor on qubit `j` (0-based), phase ignored.
    pub fn factor(&self, j: usize) -> Result<SinglePauli> {
        if j >= self.n {
            return Err(Error::OutOfRange { index: j, len: self.n });
        }
        Ok(SinglePauli::from_bits(bit(&self.xs, j), bit(&self.zs, j)))
    }

    pub fn set_factor(&mut self, j: usize, factor: SinglePauli) -> Result<()> {
        if j >= self.n {
            return Err(Error::OutOfRange { index: j, len: self.n });
        }
        set_bit(&mut self.xs, j, factor.x());
        set_bit(&mut self.zs, j, factor.z());
        Ok(())
    }

    pub fn factors(&self) -> Vec<SinglePauli> {
        (0..self.n).map(|j| SinglePauli::from_bits(bit(&self.xs, j), bit(&self.zs, j))).collect()
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        self.xs.iter().zip(&self.zs).map(|(x, z)| (x | z).count_ones() as usize).sum()
    }

    /// Counts of `(X, Z, XZ)` factors.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for (x, z) in self.xs.iter().zip(&self.zs) {
            counts.0 += (x & !z).count_ones() as usize;
            counts.1 += (z & !x).count_ones() as usize;
            counts.2 += (x & z).count_ones() as usize;
        }
        counts
    }

    /// Non-identity factors in increasing qubit order.
    pub fn support(&self) -> impl Iterator<Item = (usize, SinglePauli)> + '_ {
        self.xs.iter().zip(&self.zs).enumerate().flat_map(|(w, (&x, &z))| {
            let mut bits = x | z;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let f = SinglePauli::from_bits((x >> b) & 1 == 1, (z >> b) & 1 == 1);
                Some((w * 64 + b, f))
            })
        })
    }

    fn check_len(&self, other_n: usize) -> Result<()> {
        if self.n != other_n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other_n });
        }
        Ok(())
    }

    /// The product `self · other` with exact phase.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_len(other.n)?;
        // Z^{z1} X^{x2} = (-1)^{z1 x2} X^{x2} Z^{z1}
        let swaps: u32 = self.zs.iter().zip(&other.xs).map(|(z, x)| (z & x).count_ones()).sum();
        Ok(PauliString {
            n: self.n,
            xs: self.xs.iter().zip(&other.xs).map(|(a, b)| a ^ b).collect(),
            zs: self.zs.iter().zip(&other.zs).map(|(a, b)| a ^ b).collect(),
            phase: Phase::new(self.phase.0 as u32 + other.phase.0 as u32 + 2 * (swaps % 2)),
        })
    }

    pub fn inverse(&self) -> PauliString {
        // (X^x Z^z)^{-1} = Z^z X^x = (-1)^{xz} X^x Z^z
        let overlaps: u32 = self.xs.iter().zip(&self.zs).map(|(x, z)| (x & z).count_ones()).sum();
        PauliString {
            n: self.n,
            xs: self.xs.clone(),
            zs: self.zs.clone(),
            phase: self.phase.conj().times_i(2 * (overlaps % 2)),
        }
    }

    /// Parity of the symplectic product; `false` means the operators commute.
    fn anticommutes_unchecked(&self, xs: &[u64], zs: &[u64]) -> bool {
        let s: u32 = self
            .xs
            .iter()
            .zip(&self.zs)
            .zip(xs.iter().zip(zs))
            .map(|((x1, z1), (x2, z2))| ((x1 & z2) ^ (z1 & x2)).count_ones())
            .sum();
        s % 2 == 1
    }

    pub fn commutes_with(&self, other: &PauliString) -> Result<bool> {
        self.check_len(other.n)?;
        Ok(!self.anticommutes_unchecked(&other.xs, &other.zs))
    }

    /// `σ_q† p σ_q`: the bits are unchanged and only the sign may flip.
    pub fn conjugate_by_byproduct(&self, key: &ByproductKey) -> Result<PauliString> {
        self.check_len(key.n)?;
        let mut out = self.clone();
        if self.anticommutes_unchecked(&key.xs, &key.zs) {
            out.phase = out.phase.times_i(2);
        }
        Ok(out)
    }

    /// `K_k† p K_k` with `K_k = ⊗ T^{t_j} H^{h_j}` (H acts first).
    pub fn conjugate_by_twirlkey(&self, key: &TwirlKey) -> Result<PauliString> {
        self.check_len(key.n)?;
        let mut out = self.clone();
        let mut phase = self.phase.0 as u32;
        for w in 0..out.xs.len() {
            let (h, t) = (key.hs[w], key.ts[w]);
            let mut x = out.xs[w];
            let mut z = out.zs[w];
            // T† X T = -i XZ, T† Z T = Z, T† XZ T = -i X
            let tx = t & x;
            z ^= tx;
            phase += 3 * tx.count_ones();
            // H X H = Z, H Z H = X, H XZ H = -XZ
            let (hx, hz) = (h & x, h & z);
            x = (x & !h) | hz;
            z = (z & !h) | hx;
            phase += 2 * (h & x & z).count_ones();
            out.xs[w] = x;
            out.zs[w] = z;
        }
        out.phase = Phase::new(phase);
        Ok(out)
    }

    /// `P† σ P`: moves the factor at each physical position to the register
    /// it holds in `|R⟩ ⊗ |+⟩^{N/3} ⊗ |0⟩^{N/3}`.
    pub fn permute(&self, perm: &RolePermutation) -> Result<PauliString> {
        self.check_len(perm.len())?;
        let mut out = PauliString::identity(self.n);
        out.phase = self.phase;
        for (j, f) in self.support() {
            let r = perm.register_of(j);
            set_bit(&mut out.xs, r, f.x());
            set_bit(&mut out.zs, r, f.z());
        }
        Ok(out)
    }

    /// Factors on qubits `start..end`, phase dropped.
    pub fn slice(&self, start: usize, end: usize) -> Result<PauliString> {
        if start > end || end > self.n {
            return Err(Error::OutOfRange { index: end, len: self.n });
        }
        let mut out = PauliString::identity(end - start);
        for (j, f) in self.support() {
            if (start..end).contains(&j) {
                set_bit(&mut out.xs, j - start, f.x());
                set_bit(&mut out.zs, j - start, f.z());
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    /// Phase prefix, a space, then dot-separated factors: `-i X.I.XZ`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.phase)?;
        for j in 0..self.n {
            if j > 0 {
                f.write_str(".")?;
            }
            f.write_str(SinglePauli::from_bits(bit(&self.xs, j), bit(&self.zs, j)).token())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (phase, body) = s.split_once(' ').ok_or_else(|| Error::Parse(format!("missing phase prefix in {s:?}")))?;
        let phase: Phase = phase.parse()?;
        if body.is_empty() {
            return Ok(PauliString::identity(0).with_phase(phase));
        }
        let factors = body.split('.').map(str::parse).collect::<Result<Vec<SinglePauli>>>()?;
        Ok(PauliString::from_factors(phase, &factors))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The byproduct label `q = (x_1..x_N, z_1..z_N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ByproductKey {
    n: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
}

impl ByproductKey {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        ByproductKey { n, xs: random_words(n, rng), zs: random_words(n, rng) }
    }

    /// From the flat `2N` bit vector `(x_1..x_N, z_1..z_N)`.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if !bits.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("byproduct key needs 2N bits, got {}", bits.len())));
        }
        let n = bits.len() / 2;
        let p = PauliString::from_bits(&bits[..n], &bits[n..], Phase::ONE)?;
        Ok(ByproductKey { n, xs: p.xs, zs: p.zs })
    }

    /// Enumerates key `index` of `4^n` with bit `j` of the index giving `x_j`
    /// and bit `n + j` giving `z_j`.
    pub fn from_index(n: usize, index: u64) -> Self {
        let bits: Vec<bool> = (0..2 * n).map(|b| (index >> b) & 1 == 1).collect();
        ByproductKey::from_bits(&bits).expect("even length")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, j: usize) -> bool {
        bit(&self.xs, j)
    }

    pub fn z(&self, j: usize) -> bool {
        bit(&self.zs, j)
    }

    /// `σ_q` as a Pauli string with phase `+1`.
    pub fn as_pauli(&self) -> PauliString {
        PauliString { n: self.n, xs: self.xs.clone(), zs: self.zs.clone(), phase: Phase::ONE }
    }
}

/// The twirl key `k = (h_1..h_N, t_1..t_N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TwirlKey {
    n: usize,
    hs: Vec<u64>,
    ts: Vec<u64>,
}

impl TwirlKey {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        TwirlKey { n, hs: random_words(n, rng), ts: random_words(n, rng) }
    }

    /// From the flat `2N` bit vector `(h_1..h_N, t_1..t_N)`.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if !bits.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("twirl key needs 2N bits, got {}", bits.len())));
        }
        let n = bits.len() / 2;
        let p = PauliString::from_bits(&bits[..n], &bits[n..], Phase::ONE)?;
        Ok(TwirlKey { n, hs: p.xs, ts: p.zs })
    }

    /// The same `(h, t)` on every qubit.
    pub fn uniform(n: usize, h: bool, t: bool) -> Self {
        let mut bits = vec![h; n];
        bits.extend(std::iter::repeat_n(t, n));
        TwirlKey::from_bits(&bits).expect("even length")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn h(&self, j: usize) -> bool {
        bit(&self.hs, j)
    }

    pub fn t(&self, j: usize) -> bool {
        bit(&self.ts, j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Resource,
    PlusTrap,
    ZeroTrap,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Resource, Role::PlusTrap, Role::ZeroTrap];

    fn index(self) -> usize {
        match self {
            Role::Resource => 0,
            Role::PlusTrap => 1,
            Role::ZeroTrap => 2,
        }
    }

    /// Whether a residual factor flips this qubit's check.
    ///
    /// `|0⟩` traps are measured in Z and flip under X or XZ; `|+⟩` traps are
    /// measured in X and flip under Z or XZ. Resource qubits never count as
    /// trap flips.
    pub fn flipped_by(self, factor: SinglePauli) -> bool {
        match self {
            Role::Resource => false,
            Role::PlusTrap => factor.z(),
            Role::ZeroTrap => factor.x(),
        }
    }
}

/// The secret role assignment `P` for `N = 3m` positions.
///
/// Register order is `|R⟩ ⊗ |+⟩^{m} ⊗ |0⟩^{m}`; within each role, registers
/// are placed in increasing position order, so the resource qubits keep
/// their order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RolePermutation {
    roles: Vec<Role>,
    ranks: Vec<usize>,
    positions: Vec<usize>,
}

impl RolePermutation {
    pub fn from_roles(roles: Vec<Role>) -> Result<Self> {
        let n = roles.len();
        if !n.is_multiple_of(3) {
            return Err(Error::NotDivisibleByThree(n));
        }
        let m = n / 3;
        let mut seen = [0usize; 3];
        let mut ranks = Vec::with_capacity(n);
        let mut positions = vec![0; n];
        for (j, role) in roles.iter().enumerate() {
            let r = seen[role.index()];
            if r >= m {
                return Err(Error::InvalidArgument(format!("more than {m} positions carry role {role:?}")));
            }
            seen[role.index()] += 1;
            ranks.push(r);
            positions[role.index() * m + r] = j;
        }
        Ok(RolePermutation { roles, ranks, positions })
    }

    /// The unpermuted layout `R..R +..+ 0..0`.
    pub fn identity(n: usize) -> Result<Self> {
        if !n.is_multiple_of(3) {
            return Err(Error::NotDivisibleByThree(n));
        }
        let m = n / 3;
        let roles = Role::ALL.iter().flat_map(|&r| std::iter::repeat_n(r, m)).collect();
        RolePermutation::from_roles(roles)
    }

    /// Uniform over the `N! / ((N/3)!)^3` role sequences.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        use rand::seq::SliceRandom;
        let mut roles = RolePermutation::identity(n)?.roles;
        roles.shuffle(rng);
        RolePermutation::from_roles(roles)
    }

    /// Draws the roles and in-role ranks of a uniformly random permutation at
    /// the given positions only.
    ///
    /// Positions are visited in increasing order; the role counts in each
    /// gap are drawn from the multivariate hypergeometric law, so the joint
    /// distribution equals that of [`RolePermutation::sample`] restricted to
    /// `positions`.
    pub fn sample_at<R: Rng + ?Sized>(n: usize, positions: &[usize], rng: &mut R) -> Result<PartialRoles> {
        if !n.is_multiple_of(3) {
            return Err(Error::NotDivisibleByThree(n));
        }
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&last) = sorted.last() {
            if last >= n {
                return Err(Error::OutOfRange { index: last, len: n });
            }
        }
        let m = n / 3;
        let mut remaining = [m as u64; 3];
        let mut taken = [0usize; 3];
        let mut total = n as u64;
        let mut cursor = 0usize;
        let mut entries = Vec::with_capacity(sorted.len());
        for &p in &sorted {
            let gap = (p - cursor) as u64;
            if gap > 0 {
                let resource = hypergeometric(total, remaining[0], gap, rng);
                let plus = hypergeometric(total - remaining[0], remaining[1], gap - resource, rng);
                let zero = gap - resource - plus;
                for (k, c) in [resource, plus, zero].into_iter().enumerate() {
                    remaining[k] -= c;
                    taken[k] += c as usize;
                }
                total -= gap;
            }
            let u = rng.random_range(0..total);
            let k = if u < remaining[0] {
                0
            } else if u < remaining[0] + remaining[1] {
                1
            } else {
                2
            };
            entries.push((p, Role::ALL[k], taken[k]));
            taken[k] += 1;
            remaining[k] -= 1;
            total -= 1;
            cursor = p + 1;
        }
        Ok(PartialRoles { n, entries })
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, position: usize) -> Role {
        self.roles[position]
    }

    /// Positions of the resource qubits, increasing.
    pub fn resource_positions(&self) -> &[usize] {
        let m = self.len() / 3;
        &self.positions[..m]
    }

    pub fn register_of(&self, position: usize) -> usize {
        self.roles[position].index() * (self.len() / 3) + self.ranks[position]
    }

    pub fn position_of(&self, register: usize) -> usize {
        self.positions[register]
    }
}

/// `ln k!`, exact summation for small `k` and the Stirling series above.
fn ln_factorial(k: u64) -> f64 {
    static SMALL: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    if k < 256 {
        let table = SMALL.get_or_init(|| {
            let mut t = vec![0.0; 256];
            for i in 2..256 {
                t[i] = t[i - 1] + (i as f64).ln();
            }
            t
        });
        return table[k as usize];
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Successes among `draws` items taken without replacement from `total`
/// items of which `successes` are marked.
///
/// Inversion that starts at the mode and walks outwards, alternating sides
/// and stepping the probabilities by their ratio, so the cost is of the
/// order of the standard deviation rather than the population size.
pub(crate) fn hypergeometric<R: Rng + ?Sized>(total: u64, successes: u64, draws: u64, rng: &mut R) -> u64 {
    if draws == 0 || successes == 0 {
        return 0;
    }
    if successes == total {
        return draws;
    }
    if draws == total {
        return successes;
    }
    let (n, k, d) = (total, successes, draws);
    let lo = (d + k).saturating_sub(n);
    let hi = d.min(k);
    let mode = (((d + 1) as f64 * (k + 1) as f64) / (n + 2) as f64).floor() as u64;
    let mode = mode.clamp(lo, hi);
    let p_mode = (ln_choose(k, mode) + ln_choose(n - k, d - mode) - ln_choose(n, d)).exp();
    // p(x + 1) / p(x)
    let up = |x: u64| ((k - x) as f64 * (d - x) as f64) / ((x + 1) as f64 * ((n - k + x + 1) - d) as f64);
    let mut u: f64 = rng.random();
    u -= p_mode;
    if u <= 0.0 {
        return mode;
    }
    let (mut below, mut above) = (mode, mode);
    let (mut p_below, mut p_above) = (p_mode, p_mode);
    loop {
        let can_up = above < hi;
        let can_down = below > lo;
        if !can_up && !can_down {
            return mode;
        }
        if can_up {
            p_above *= up(above);
            above += 1;
            u -= p_above;
            if u <= 0.0 {
                return above;
            }
        }
        if can_down {
            p_below /= up(below - 1);
            below -= 1;
            u -= p_below;
            if u <= 0.0 {
                return below;
            }
        }
    }
}

/// Roles of a random permutation observed at a few positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialRoles {
    n: usize,
    entries: Vec<(usize, Role, usize)>,
}

impl PartialRoles {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `(position, role, rank within role)` in increasing position order.
    pub fn entries(&self) -> &[(usize, Role, usize)] {
        &self.entries
    }

    pub fn role_at(&self, position: usize) -> Option<(Role, usize)> {
        self.entries.binary_search_by_key(&position, |e| e.0).ok().map(|i| (self.entries[i].1, self.entries[i].2))
    }

    /// `P† σ P` for a string supported on the observed positions.
    pub fn permute(&self, p: &PauliString) -> Result<PauliString> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.num_qubits() });
        }
        let m = self.n / 3;
        let mut out = PauliString::identity(self.n).with_phase(p.phase());
        for (j, f) in p.support() {
            let (role, rank) = self.role_at(j).ok_or(Error::UnknownQubit(j))?;
            out.set_factor(role.index() * m + rank, f)?;
        }
        Ok(out)
    }
}

/// Uniform byproduct key on `n` qubits.
pub fn sample_byproduct<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ByproductKey {
    ByproductKey::sample(n, rng)
}

/// Uniform twirl key on `n` qubits.
pub fn sample_twirlkey<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TwirlKey {
    TwirlKey::sample(n, rng)
}

/// Uniform role assignment with `n / 3` positions of each role.
pub fn sample_role_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RolePermutation> {
    RolePermutation::sample(n, rng)
}
