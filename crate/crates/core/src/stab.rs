//! Bit-packed stabilizer tableau (Aaronson-Gottesman) with Pauli-frame
//! corrections.
//!
//! Rows `0..n` are destabilizers, rows `n..2n` stabilizers and row `2n` is
//! scratch space for deterministic measurements. Each row stores its x and z
//! bits in `ceil(n / 64)` words; a row with `x = z = 1` on a qubit means `Y`
//! there, and the sign bit is the overall `±1`.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use crate::circuit::{Basis, Circuit, Gate, Outcome};
use crate::pauli::{word_count, PauliString, Phase, SinglePauli};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"BVTB";
const DUMP_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    w: usize,
    /// Word `k` of row `r` sits at `k * (2n + 1) + r`, so a column block is
    /// contiguous across rows.
    xs: Vec<u64>,
    zs: Vec<u64>,
    signs: Vec<bool>,
}

impl Tableau {
    fn blank(n: usize) -> Self {
        let w = word_count(n);
        let rows = 2 * n + 1;
        Tableau { n, w, xs: vec![0; rows * w], zs: vec![0; rows * w], signs: vec![false; rows] }
    }

    /// The all-zero state `|0…0⟩`.
    pub fn new(n: usize) -> Self {
        let mut t = Tableau::blank(n);
        for q in 0..n {
            let (i, j) = (t.at(q, q / 64), t.at(q + n, q / 64));
            t.xs[i] |= 1 << (q % 64);
            t.zs[j] |= 1 << (q % 64);
        }
        t
    }

    /// The graph state with stabilizers `K_v = X_v ∏_{w∼v} Z_w`, built
    /// directly with destabilizers `Z_v`.
    pub fn graph_state(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut t = Tableau::blank(n);
        for v in 0..n {
            let (i, j) = (t.at(v, v / 64), t.at(v + n, v / 64));
            t.zs[i] |= 1 << (v % 64);
            t.xs[j] |= 1 << (v % 64);
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for &(a, b) in edges {
            t.check(a)?;
            t.check(b)?;
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on vertex {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidArgument(format!("repeated edge ({a}, {b})")));
            }
            let (i, j) = (t.at(a + n, b / 64), t.at(b + n, a / 64));
            t.zs[i] |= 1 << (b % 64);
            t.zs[j] |= 1 << (a % 64);
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::OutOfRange { index: q, len: self.n });
        }
        Ok(())
    }

    #[inline]
    fn stride(&self) -> usize {
        2 * self.n + 1
    }

    #[inline]
    fn at(&self, row: usize, k: usize) -> usize {
        k * self.stride() + row
    }

    #[inline]
    fn xbit(&self, row: usize, q: usize) -> bool {
        (self.xs[self.at(row, q / 64)] >> (q % 64)) & 1 == 1
    }

    #[inline]
    fn zbit(&self, row: usize, q: usize) -> bool {
        (self.zs[self.at(row, q / 64)] >> (q % 64)) & 1 == 1
    }

    /// The x and z words holding qubit `q` for rows `0..2n`.
    fn column(&self, q: usize) -> (std::ops::Range<usize>, u64) {
        let base = self.at(0, q / 64);
        (base..base + 2 * self.n, 1u64 << (q % 64))
    }

    pub fn h(&mut self, a: usize) -> Result<()> {
        self.check(a)?;
        let (range, m) = self.column(a);
        let (xs, zs) = (&mut self.xs[range.clone()], &mut self.zs[range]);
        for ((x, z), s) in xs.iter_mut().zip(zs.iter_mut()).zip(self.signs.iter_mut()) {
            let (xb, zb) = (*x & m != 0, *z & m != 0);
            *s ^= xb && zb;
            if xb != zb {
                *x ^= m;
                *z ^= m;
            }
        }
        Ok(())
    }

    pub fn s(&mut self, a: usize) -> Result<()> {
        self.check(a)?;
        let (range, m) = self.column(a);
        let (xs, zs) = (&self.xs[range.clone()], &mut self.zs[range]);
        for ((x, z), s) in xs.iter().zip(zs.iter_mut()).zip(self.signs.iter_mut()) {
            if *x & m != 0 {
                *s ^= *z & m != 0;
                *z ^= m;
            }
        }
        Ok(())
    }

    pub fn sdg(&mut self, a: usize) -> Result<()> {
        self.s(a)?;
        self.s(a)?;
        self.s(a)
    }

    fn flip_signs(&mut self, a: usize, on_x: bool, on_z: bool) -> Result<()> {
        self.check(a)?;
        let (range, m) = self.column(a);
        let (xs, zs) = (&self.xs[range.clone()], &self.zs[range]);
        for ((x, z), s) in xs.iter().zip(zs).zip(self.signs.iter_mut()) {
            *s ^= (on_x && z & m != 0) ^ (on_z && x & m != 0);
        }
        Ok(())
    }

    pub fn x(&mut self, a: usize) -> Result<()> {
        self.flip_signs(a, true, false)
    }

    pub fn y(&mut self, a: usize) -> Result<()> {
        self.flip_signs(a, true, true)
    }

    pub fn z(&mut self, a: usize) -> Result<()> {
        self.flip_signs(a, false, true)
    }

    pub fn cx(&mut self, c: usize, t: usize) -> Result<()> {
        self.check(c)?;
        self.check(t)?;
        if c == t {
            return Err(Error::InvalidArgument(format!("CX with control = target = {c}")));
        }
        let (mc, mt) = (1u64 << (c % 64), 1u64 << (t % 64));
        for r in 0..2 * self.n {
            let (ic, it) = (self.at(r, c / 64), self.at(r, t / 64));
            let (xc, zc) = (self.xs[ic] & mc != 0, self.zs[ic] & mc != 0);
            let (xt, zt) = (self.xs[it] & mt != 0, self.zs[it] & mt != 0);
            self.signs[r] ^= xc && zt && (xt == zc);
            if xc {
                self.xs[it] ^= mt;
            }
            if zt {
                self.zs[ic] ^= mc;
            }
        }
        Ok(())
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.h(b)?;
        self.cx(a, b)?;
        self.h(b)
    }

    /// Applies a Pauli error; its global phase has no effect on the state.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.num_qubits() });
        }
        for (q, f) in p.support() {
            self.flip_signs(q, f.x(), f.z())?;
        }
        Ok(())
    }

    /// `row[h] ← row[i] · row[h]` with the sign tracked exactly.
    fn rowsum(&mut self, h: usize, i: usize) {
        let stride = self.stride();
        let mut sum: i64 = 2 * (self.signs[h] as i64 + self.signs[i] as i64);
        for k in 0..self.w {
            let (ii, ih) = (k * stride + i, k * stride + h);
            let (x1, z1) = (self.xs[ii], self.zs[ii]);
            let (x2, z2) = (self.xs[ih], self.zs[ih]);
            let pos = (x1 & z1 & z2 & !x2) | (x1 & !z1 & x2 & z2) | (!x1 & z1 & x2 & !z2);
            let neg = (x1 & z1 & x2 & !z2) | (x1 & !z1 & !x2 & z2) | (!x1 & z1 & x2 & z2);
            sum += pos.count_ones() as i64 - neg.count_ones() as i64;
            self.xs[ih] = x1 ^ x2;
            self.zs[ih] = z1 ^ z2;
        }
        self.signs[h] = sum.rem_euclid(4) == 2;
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        for k in 0..self.w {
            let (d, s) = (self.at(dst, k), self.at(src, k));
            self.xs[d] = self.xs[s];
            self.zs[d] = self.zs[s];
        }
        self.signs[dst] = self.signs[src];
    }

    fn clear_row(&mut self, row: usize) {
        for k in 0..self.w {
            let i = self.at(row, k);
            self.xs[i] = 0;
            self.zs[i] = 0;
        }
        self.signs[row] = false;
    }

    /// Rows in `rows` whose entry on qubit `a` anticommutes with `basis`.
    fn anticommuting(&self, a: usize, basis: Basis, rows: std::ops::Range<usize>) -> impl Iterator<Item = usize> + '_ {
        let (k, m) = (a / 64, 1u64 << (a % 64));
        let base = self.at(0, k);
        rows.filter(move |&r| {
            let (x, z) = (self.xs[base + r] & m != 0, self.zs[base + r] & m != 0);
            match basis {
                Basis::Z => x,
                Basis::X => z,
                Basis::Y => x != z,
            }
        })
    }

    /// After a random outcome row `p` is `±P_a`. Clearing `P_a` from every
    /// other row and pairing `p` with a single-qubit destabilizer keeps the
    /// rows sparse across long measurement sweeps.
    fn decouple(&mut self, a: usize, basis: Basis, p: usize) {
        let n = self.n;
        let (k, m) = (a / 64, 1u64 << (a % 64));
        let base = self.at(0, k);
        let (want_x, want_z) = (basis != Basis::Z, basis != Basis::X);
        let hits: Vec<usize> = (0..2 * n)
            .filter(|&r| r != p && r != p - n)
            .filter(|&r| {
                let (x, z) = (self.xs[base + r] & m != 0, self.zs[base + r] & m != 0);
                (x || z) && x == want_x && z == want_z
            })
            .collect();
        for r in hits {
            self.rowsum(r, p);
        }
        self.clear_row(p - n);
        let i = self.at(p - n, k);
        if basis == Basis::Z {
            self.xs[i] |= m;
        } else {
            self.zs[i] |= m;
        }
    }

    /// Single-qubit Pauli measurement. `choose` supplies the outcome
    /// (true = −1) when it is random; returns `(minus, was_random)`.
    fn measure_with(&mut self, a: usize, basis: Basis, choose: impl FnOnce() -> bool) -> Result<(bool, bool)> {
        self.check(a)?;
        let n = self.n;
        let pivot = self.anticommuting(a, basis, n..2 * n).next();
        match pivot {
            Some(p) => {
                let others: Vec<usize> = self.anticommuting(a, basis, 0..2 * n).filter(|&r| r != p).collect();
                for r in others {
                    self.rowsum(r, p);
                }
                self.copy_row(p - n, p);
                self.clear_row(p);
                let i = self.at(p, a / 64);
                let m = 1u64 << (a % 64);
                if basis != Basis::Z {
                    self.xs[i] |= m;
                }
                if basis != Basis::X {
                    self.zs[i] |= m;
                }
                let minus = choose();
                self.signs[p] = minus;
                self.decouple(a, basis, p);
                Ok((minus, true))
            }
            None => {
                let scratch = 2 * n;
                self.clear_row(scratch);
                let hits: Vec<usize> = self.anticommuting(a, basis, 0..n).collect();
                for i in hits {
                    self.rowsum(scratch, i + n);
                }
                Ok((self.signs[scratch], false))
            }
        }
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, a: usize, basis: Basis, rng: &mut R) -> Result<Outcome> {
        let (minus, _) = self.measure_with(a, basis, || rng.random())?;
        Ok(Outcome::from_minus(minus))
    }

    /// Measures with the outcome forced where it is random. Returns the
    /// probability of `outcome`: 1/2 if random, otherwise 1 or 0 (the state
    /// is then left as it was).
    pub fn measure_forced(&mut self, a: usize, basis: Basis, outcome: Outcome) -> Result<f64> {
        let (minus, random) = self.measure_with(a, basis, || outcome.is_minus())?;
        Ok(if random {
            0.5
        } else if minus == outcome.is_minus() {
            1.0
        } else {
            0.0
        })
    }

    /// The outcome if it is deterministic, without touching the state.
    pub fn peek(&self, a: usize, basis: Basis) -> Result<Option<Outcome>> {
        let mut probe = self.clone();
        let (minus, random) = probe.measure_with(a, basis, || false)?;
        Ok((!random).then_some(Outcome::from_minus(minus)))
    }

    pub fn apply_gate<R: Rng + ?Sized>(&mut self, gate: &Gate, rng: &mut R) -> Result<Option<Outcome>> {
        match *gate {
            Gate::Measure(q, basis) => return self.measure(q, basis, rng).map(Some),
            _ => self.apply_unitary(gate)?,
        }
        Ok(None)
    }

    fn apply_unitary(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::H(q) => self.h(q),
            Gate::S(q) => self.s(q),
            Gate::Sdg(q) => self.sdg(q),
            Gate::X(q) => self.x(q),
            Gate::Y(q) => self.y(q),
            Gate::Z(q) => self.z(q),
            Gate::CZ(a, b) => self.cz(a, b),
            Gate::CX(a, b) => self.cx(a, b),
            Gate::Measure(..) => Err(Error::Unsupported("measurement is not unitary".into())),
        }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, circuit: &Circuit, rng: &mut R) -> Result<Vec<Outcome>> {
        if circuit.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: circuit.num_qubits() });
        }
        let mut out = Vec::with_capacity(circuit.num_measurements());
        for g in circuit.gates() {
            if let Some(o) = self.apply_gate(g, rng)? {
                out.push(o);
            }
        }
        Ok(out)
    }

    fn row_pauli(&self, row: usize) -> PauliString {
        let xs: Vec<bool> = (0..self.n).map(|q| self.xbit(row, q)).collect();
        let zs: Vec<bool> = (0..self.n).map(|q| self.zbit(row, q)).collect();
        let ys = xs.iter().zip(&zs).filter(|(x, z)| **x && **z).count() as u32;
        // Y = i XZ
        let phase = Phase::new(2 * self.signs[row] as u32 + ys);
        PauliString::from_bits(&xs, &zs, phase).expect("equal lengths")
    }

    /// Stabilizer generators in XZ normal form.
    pub fn stabilizers(&self) -> Vec<PauliString> {
        (self.n..2 * self.n).map(|r| self.row_pauli(r)).collect()
    }

    pub fn destabilizers(&self) -> Vec<PauliString> {
        (0..self.n).map(|r| self.row_pauli(r)).collect()
    }

    /// `⟨p⟩` for a Hermitian Pauli `p`: ±1 if `±p` is a stabilizer, else 0.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.num_qubits() });
        }
        let stabs = self.stabilizers();
        for s in &stabs {
            if !s.commutes_with(p)? {
                return Ok(0.0);
            }
        }
        let mut acc = PauliString::identity(self.n);
        for (d, s) in self.destabilizers().iter().zip(&stabs) {
            if !d.commutes_with(p)? {
                acc = acc.multiply(s)?;
            }
        }
        match Phase::new(4 + p.phase().exponent() as u32 - acc.phase().exponent() as u32).exponent() {
            0 => Ok(1.0),
            2 => Ok(-1.0),
            _ => Err(Error::InvalidArgument(format!("{p} is not Hermitian"))),
        }
    }

    /// Versioned little-endian dump: magic, version, n, then each of the 2n
    /// rows as x words, z words and a sign byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 2 * self.n * (16 * self.w + 1));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        for r in 0..2 * self.n {
            for k in 0..self.w {
                out.extend_from_slice(&self.xs[self.at(r, k)].to_le_bytes());
            }
            for k in 0..self.w {
                out.extend_from_slice(&self.zs[self.at(r, k)].to_le_bytes());
            }
            out.push(self.signs[r] as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("tableau dump: {msg}"));
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("missing header"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != DUMP_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let w = word_count(n);
        let row_len = 16 * w + 1;
        if bytes.len() != 16 + 2 * n * row_len {
            return Err(bad("length does not match qubit count"));
        }
        let mut t = Tableau::new(n);
        let word = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
        for r in 0..2 * n {
            let base = 16 + r * row_len;
            for k in 0..w {
                let i = t.at(r, k);
                t.xs[i] = word(base + 8 * k);
                t.zs[i] = word(base + 8 * (w + k));
            }
            t.signs[r] = match bytes[base + 16 * w] {
                0 => false,
                1 => true,
                _ => return Err(bad("sign byte out of range")),
            };
        }
        Ok(t)
    }
}

/// Builds the graph state of a simple graph on `n` vertices.
pub fn prepare_graph_state(n: usize, edges: &[(usize, usize)]) -> Result<Tableau> {
    Tableau::graph_state(n, edges)
}

/// Exact distribution of the measurement record of `circuit` run on
/// `|0…0⟩`, found by branching on every random outcome.
pub fn outcome_distribution(circuit: &Circuit) -> Result<BTreeMap<Vec<Outcome>, f64>> {
    let mut dist = BTreeMap::new();
    let mut stack = vec![(Tableau::new(circuit.num_qubits()), 0usize, Vec::new(), 1.0f64)];
    while let Some((mut t, mut pc, mut record, prob)) = stack.pop() {
        let gates = circuit.gates();
        let mut finished = true;
        while pc < gates.len() {
            if let Gate::Measure(q, basis) = gates[pc] {
                match t.peek(q, basis)? {
                    Some(o) => record.push(o),
                    None => {
                        for o in [Outcome::Plus, Outcome::Minus] {
                            let mut branch = t.clone();
                            branch.measure_forced(q, basis, o)?;
                            let mut rec = record.clone();
                            rec.push(o);
                            stack.push((branch, pc + 1, rec, prob * 0.5));
                        }
                        finished = false;
                        break;
                    }
                }
            } else {
                t.apply_unitary(&gates[pc])?;
            }
            pc += 1;
        }
        if finished {
            *dist.entry(record).or_insert(0.0) += prob;
        }
    }
    Ok(dist)
}

/// Pending byproduct corrections, one Pauli factor per qubit, each
/// consumable once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    pending: PauliString,
    consumed: Vec<bool>,
}

impl PauliFrame {
    pub fn new(n: usize) -> Self {
        PauliFrame { pending: PauliString::identity(n), consumed: vec![false; n] }
    }

    pub fn from_pauli(p: PauliString) -> Self {
        let n = p.num_qubits();
        PauliFrame { pending: p, consumed: vec![false; n] }
    }

    /// Composes another byproduct into the frame (group product).
    pub fn record(&mut self, p: &PauliString) -> Result<()> {
        self.pending = self.pending.multiply(p)?;
        Ok(())
    }

    pub fn pending(&self) -> &PauliString {
        &self.pending
    }

    pub fn is_consumed(&self, qubit: usize) -> bool {
        self.consumed.get(qubit).copied().unwrap_or(false)
    }

    /// Applies the pending factor on `qubit` to the tableau and marks it
    /// consumed.
    pub fn correct(&mut self, tableau: &mut Tableau, qubit: usize) -> Result<()> {
        let f = self.pending.factor(qubit)?;
        if self.consumed[qubit] {
            return Err(Error::DoubleCorrection(qubit));
        }
        self.consumed[qubit] = true;
        match f {
            SinglePauli::I => Ok(()),
            _ => tableau.flip_signs(qubit, f.x(), f.z()),
        }
    }
}

pub fn apply_frame_correction(tableau: &mut Tableau, frame: &mut PauliFrame, qubit: usize) -> Result<()> {
    frame.correct(tableau, qubit)
}
