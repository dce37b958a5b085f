//! A simplified Raussendorf-Harrington-Goyal cell complex.
//!
//! Coordinates are doubled: vertices have three even coordinates, edges one
//! odd coordinate, faces two and cells three. Qubits live on faces and
//! edges; every face is bonded to its four boundary edges.
//!
//! Z errors come in two sectors:
//!
//! * face chains, checked by the cells (the six face qubits of a cell);
//! * edge chains, checked by the vertices (the six edge qubits around it).
//!
//! A defect tube is a full column of cells along z with a rectangular
//! cross-section. Its checks are not measured and every qubit whose
//! incident cells all lie in the tube is measured in Z, so Z errors there do
//! nothing. For face chains the tubes, the outer x/y boundary and an open
//! z boundary act as free ends; edge chains have no free ends.
//!
//! With `Lx × Ly × Lz` cells and open boundaries there are
//! `(Lx+1)LyLz + Lx(Ly+1)Lz + LxLy(Lz+1)` faces and
//! `Lx(Ly+1)(Lz+1) + (Lx+1)Ly(Lz+1) + (Lx+1)(Ly+1)Lz` edges. With
//! [`Boundary::PeriodicZ`] every `Lz + 1` becomes `Lz`.

mod config;
mod distance;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use config::{write_classification_csv, ClassificationRow, LatticeConfig, TubeConfig};
pub use distance::DistanceReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Open on all six sides.
    Open,
    /// Periodic along the tube axis z, open in x and y.
    #[default]
    PeriodicZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QubitKind {
    Face,
    Edge,
}

/// A parity check: a cell (face sector) or a vertex (edge sector), in
/// undoubled coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    Cell([usize; 3]),
    Vertex([usize; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainClass {
    Detected,
    Trivial,
    Logical,
}

impl fmt::Display for ChainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainClass::Detected => "detected",
            ChainClass::Trivial => "trivial",
            ChainClass::Logical => "logical",
        })
    }
}

/// Qubit count for the given cell dimensions and boundary.
pub fn expected_qubit_count(dims: [usize; 3], boundary: Boundary) -> usize {
    let [lx, ly, lz] = dims;
    let lz1 = match boundary {
        Boundary::Open => lz + 1,
        Boundary::PeriodicZ => lz,
    };
    let faces = (lx + 1) * ly * lz + lx * (ly + 1) * lz + lx * ly * lz1;
    let edges = lx * (ly + 1) * lz1 + (lx + 1) * ly * lz1 + (lx + 1) * (ly + 1) * lz;
    faces + edges
}

pub type Site = [usize; 3];

#[derive(Clone, Debug)]
pub struct RhgLattice {
    dims: [usize; 3],
    boundary: Boundary,
    grid: [usize; 3],
    index: Vec<u32>,
    coords: Vec<Site>,
}

const NONE: u32 = u32::MAX;

impl RhgLattice {
    /// Open boundaries on all sides.
    pub fn build(dims: [usize; 3]) -> Result<Self> {
        RhgLattice::build_with(dims, Boundary::Open)
    }

    pub fn build_with(dims: [usize; 3], boundary: Boundary) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("lattice dimensions must be positive, got {dims:?}")));
        }
        if boundary == Boundary::PeriodicZ && dims[2] < 2 {
            return Err(Error::DegenerateGeometry("periodic z needs at least 2 cells along z".into()));
        }
        let gz = match boundary {
            Boundary::Open => 2 * dims[2] + 1,
            Boundary::PeriodicZ => 2 * dims[2],
        };
        let grid = [2 * dims[0] + 1, 2 * dims[1] + 1, gz];
        let mut index = vec![NONE; grid[0] * grid[1] * grid[2]];
        let mut coords = Vec::with_capacity(expected_qubit_count(dims, boundary));
        for z in 0..grid[2] {
            for y in 0..grid[1] {
                for x in 0..grid[0] {
                    let odd = (x % 2) + (y % 2) + (z % 2);
                    if odd == 1 || odd == 2 {
                        index[(z * grid[1] + y) * grid[0] + x] = coords.len() as u32;
                        coords.push([x, y, z]);
                    }
                }
            }
        }
        debug_assert_eq!(coords.len(), expected_qubit_count(dims, boundary));
        Ok(RhgLattice { dims, boundary, grid, index, coords })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_qubits(&self) -> usize {
        self.coords.len()
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn num_vertices(&self) -> usize {
        let [lx, ly, _] = self.dims;
        (lx + 1) * (ly + 1) * self.vertex_layers()
    }

    fn vertex_layers(&self) -> usize {
        match self.boundary {
            Boundary::Open => self.dims[2] + 1,
            Boundary::PeriodicZ => self.dims[2],
        }
    }

    /// Doubled coordinates of a qubit.
    pub fn coord(&self, q: usize) -> Site {
        self.coords[q]
    }

    pub fn kind(&self, q: usize) -> QubitKind {
        let [x, y, z] = self.coords[q];
        if (x % 2) + (y % 2) + (z % 2) == 2 {
            QubitKind::Face
        } else {
            QubitKind::Edge
        }
    }

    /// Normalises a signed doubled coordinate, wrapping z if periodic.
    pub(crate) fn site(&self, x: i64, y: i64, z: i64) -> Option<Site> {
        let gx = self.grid[0] as i64;
        let gy = self.grid[1] as i64;
        if !(0..gx).contains(&x) || !(0..gy).contains(&y) {
            return None;
        }
        let z = match self.boundary {
            Boundary::Open => {
                if !(0..self.grid[2] as i64).contains(&z) {
                    return None;
                }
                z
            }
            Boundary::PeriodicZ => z.rem_euclid(self.grid[2] as i64),
        };
        Some([x as usize, y as usize, z as usize])
    }

    fn offset(&self, s: Site, axis: usize, delta: i64) -> Option<Site> {
        let mut c = [s[0] as i64, s[1] as i64, s[2] as i64];
        c[axis] += delta;
        self.site(c[0], c[1], c[2])
    }

    pub fn qubit_at(&self, s: Site) -> Option<usize> {
        if s[0] >= self.grid[0] || s[1] >= self.grid[1] || s[2] >= self.grid[2] {
            return None;
        }
        let id = self.index[(s[2] * self.grid[1] + s[1]) * self.grid[0] + s[0]];
        (id != NONE).then_some(id as usize)
    }

    pub fn cell_id(&self, cell: [usize; 3]) -> usize {
        (cell[2] * self.dims[1] + cell[1]) * self.dims[0] + cell[0]
    }

    pub fn cell_of_id(&self, id: usize) -> [usize; 3] {
        let [lx, ly, _] = self.dims;
        [id % lx, (id / lx) % ly, id / (lx * ly)]
    }

    pub fn vertex_id(&self, v: [usize; 3]) -> usize {
        let [lx, ly, _] = self.dims;
        (v[2] * (ly + 1) + v[1]) * (lx + 1) + v[0]
    }

    pub fn vertex_of_id(&self, id: usize) -> [usize; 3] {
        let [lx, ly, _] = self.dims;
        [id % (lx + 1), (id / (lx + 1)) % (ly + 1), id / ((lx + 1) * (ly + 1))]
    }

    fn axes(s: Site, odd: bool) -> impl Iterator<Item = usize> {
        (0..3).filter(move |&a| (s[a] % 2 == 1) == odd)
    }

    /// Cells (undoubled) touching a qubit: two for a face, four for an
    /// edge, fewer on an open boundary.
    pub fn incident_cells(&self, q: usize) -> Vec<[usize; 3]> {
        let s = self.coords[q];
        let even: Vec<usize> = Self::axes(s, false).collect();
        let mut out = Vec::with_capacity(4);
        match self.kind(q) {
            QubitKind::Face => {
                for d in [-1, 1] {
                    if let Some(c) = self.offset(s, even[0], d) {
                        out.push([c[0] / 2, c[1] / 2, c[2] / 2]);
                    }
                }
            }
            QubitKind::Edge => {
                for d1 in [-1, 1] {
                    for d2 in [-1, 1] {
                        if let Some(c) = self.offset(s, even[0], d1).and_then(|c| self.offset(c, even[1], d2)) {
                            out.push([c[0] / 2, c[1] / 2, c[2] / 2]);
                        }
                    }
                }
            }
        }
        out
    }

    /// The two vertices (undoubled) at the ends of an edge qubit.
    pub fn edge_vertices(&self, q: usize) -> Result<[[usize; 3]; 2]> {
        if self.kind(q) != QubitKind::Edge {
            return Err(Error::InvalidArgument(format!("qubit {q} is not an edge")));
        }
        let s = self.coords[q];
        let a = Self::axes(s, true).next().expect("edge has an odd axis");
        let v = |d| {
            let c = self.offset(s, a, d).expect("edge endpoints exist");
            [c[0] / 2, c[1] / 2, c[2] / 2]
        };
        Ok([v(-1), v(1)])
    }

    /// The six face qubits of a cell.
    pub fn cell_faces(&self, cell: [usize; 3]) -> Result<Vec<usize>> {
        if (0..3).any(|a| cell[a] >= self.dims[a]) {
            return Err(Error::OutOfRange { index: cell.into_iter().max().unwrap_or(0), len: self.num_cells() });
        }
        let s = [2 * cell[0] + 1, 2 * cell[1] + 1, 2 * cell[2] + 1];
        let mut out = Vec::with_capacity(6);
        for a in 0..3 {
            for d in [-1, 1] {
                if let Some(f) = self.offset(s, a, d).and_then(|f| self.qubit_at(f)) {
                    out.push(f);
                }
            }
        }
        Ok(out)
    }

    /// Edge qubits meeting at a vertex.
    pub fn vertex_edges(&self, v: [usize; 3]) -> Vec<usize> {
        let s = [2 * v[0], 2 * v[1], 2 * v[2]];
        let mut out = Vec::with_capacity(6);
        for a in 0..3 {
            for d in [-1, 1] {
                if let Some(e) = self.offset(s, a, d).and_then(|e| self.qubit_at(e)) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Qubits of the other kind adjacent in the graph: the four boundary
    /// edges of a face, or the faces around an edge.
    pub fn neighbours(&self, q: usize) -> Vec<usize> {
        let s = self.coords[q];
        let axes: Vec<usize> = match self.kind(q) {
            QubitKind::Face => Self::axes(s, true).collect(),
            QubitKind::Edge => Self::axes(s, false).collect(),
        };
        let mut out = Vec::with_capacity(4);
        for a in axes {
            for d in [-1, 1] {
                if let Some(n) = self.offset(s, a, d).and_then(|n| self.qubit_at(n)) {
                    out.push(n);
                }
            }
        }
        out
    }

    /// Graph-state bonds (face, edge), each listed once.
    pub fn graph_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for q in 0..self.num_qubits() {
            if self.kind(q) == QubitKind::Face {
                for e in self.neighbours(q) {
                    out.push((q, e));
                }
            }
        }
        out
    }

    /// Shifts every qubit of a chain by `dz` cells along z (periodic only).
    pub fn translate_z(&self, chain: &ZChain, dz: usize) -> Result<ZChain> {
        if self.boundary != Boundary::PeriodicZ {
            return Err(Error::Unsupported("z translation needs a periodic lattice".into()));
        }
        let mut out = Vec::with_capacity(chain.weight());
        for &q in chain.qubits() {
            let [x, y, z] = self.coords.get(q).copied().ok_or(Error::UnknownQubit(q))?;
            let s = self.site(x as i64, y as i64, (z + 2 * dz) as i64).expect("periodic z");
            out.push(self.qubit_at(s).expect("translated qubit exists"));
        }
        Ok(ZChain::from_qubits(out))
    }
}

/// A set of qubits carrying Z; adding a qubit twice cancels it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZChain {
    qubits: Vec<usize>,
}

impl ZChain {
    pub fn from_qubits(qubits: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = qubits.into_iter().collect();
        v.sort_unstable();
        let mut out = Vec::with_capacity(v.len());
        let mut i = 0;
        while i < v.len() {
            let mut j = i;
            while j < v.len() && v[j] == v[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                out.push(v[i]);
            }
            i = j;
        }
        ZChain { qubits: out }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn weight(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn symmetric_difference(&self, other: &ZChain) -> ZChain {
        ZChain::from_qubits(self.qubits.iter().chain(&other.qubits).copied())
    }

    pub fn contains(&self, q: usize) -> bool {
        self.qubits.binary_search(&q).is_ok()
    }
}

/// A defect tube: every cell `(x, y, z)` with `x0 ≤ x < x0 + wx`,
/// `y0 ≤ y < y0 + wy` and any z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tube {
    pub x0: usize,
    pub y0: usize,
    pub wx: usize,
    pub wy: usize,
}

impl Tube {
    pub fn square(x0: usize, y0: usize, width: usize) -> Self {
        Tube { x0, y0, wx: width, wy: width }
    }

    pub fn contains(&self, cell: [usize; 3]) -> bool {
        (self.x0..self.x0 + self.wx).contains(&cell[0]) && (self.y0..self.y0 + self.wy).contains(&cell[1])
    }

    /// Recovers a tube from an explicit cell list; the cells must be the
    /// full z-columns over a rectangle.
    pub fn from_cells(cells: &[[usize; 3]], lz: usize) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::DegenerateGeometry("empty tube".into()));
        }
        let x0 = cells.iter().map(|c| c[0]).min().expect("nonempty");
        let y0 = cells.iter().map(|c| c[1]).min().expect("nonempty");
        let wx = cells.iter().map(|c| c[0]).max().expect("nonempty") - x0 + 1;
        let wy = cells.iter().map(|c| c[1]).max().expect("nonempty") - y0 + 1;
        let set: HashSet<[usize; 3]> = cells.iter().copied().collect();
        let complete = set.len() == wx * wy * lz
            && (x0..x0 + wx).all(|x| (y0..y0 + wy).all(|y| (0..lz).all(|z| set.contains(&[x, y, z]))));
        if !complete {
            return Err(Error::Unsupported("tubes must be full z-columns over a rectangle of cells".into()));
        }
        Ok(Tube { x0, y0, wx, wy })
    }

    pub fn cells(&self, lz: usize) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(self.wx * self.wy * lz);
        for z in 0..lz {
            for y in self.y0..self.y0 + self.wy {
                for x in self.x0..self.x0 + self.wx {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }
}

/// Defect placement together with everything derived from it: inactive
/// (Z-measured) qubits, check incidences and the logical representatives.
#[derive(Clone, Debug)]
pub struct DefectSpec {
    tubes: Vec<Tube>,
    num_qubits: usize,
    dims: [usize; 3],
    cell_tube: Vec<u8>,
    active: Vec<bool>,
    ends: Vec<[u32; 2]>,
    reps: Option<LogicalReps>,
}

/// Check node index used for the merged free end of face chains.
const OMEGA: u32 = u32::MAX;

impl DefectSpec {
    /// No defects at all.
    pub fn empty(lattice: &RhgLattice) -> Self {
        DefectSpec::place(lattice, Vec::new()).expect("no tubes to validate")
    }

    pub fn place(lattice: &RhgLattice, tubes: Vec<Tube>) -> Result<Self> {
        let [lx, ly, lz] = lattice.dims();
        if tubes.len() > 30 {
            return Err(Error::Unsupported("at most 30 tubes".into()));
        }
        for t in &tubes {
            if t.wx == 0 || t.wy == 0 {
                return Err(Error::DegenerateGeometry(format!("tube {t:?} has zero width")));
            }
            if t.x0 < 1 || t.y0 < 1 || t.x0 + t.wx + 1 > lx || t.y0 + t.wy + 1 > ly {
                return Err(Error::DegenerateGeometry(format!(
                    "tube {t:?} must keep at least one cell from the x/y boundary of a {lx}x{ly} lattice"
                )));
            }
        }
        for (i, a) in tubes.iter().enumerate() {
            for b in &tubes[i + 1..] {
                let apart_x = a.x0 + a.wx < b.x0 || b.x0 + b.wx < a.x0;
                let apart_y = a.y0 + a.wy < b.y0 || b.y0 + b.wy < a.y0;
                if !(apart_x || apart_y) {
                    return Err(Error::DegenerateGeometry(format!("tubes {a:?} and {b:?} touch")));
                }
            }
        }
        let mut cell_tube = vec![0u8; lattice.num_cells()];
        for (t, tube) in tubes.iter().enumerate() {
            for c in tube.cells(lz) {
                cell_tube[lattice.cell_id(c)] = t as u8 + 1;
            }
        }
        let n = lattice.num_qubits();
        let mut active = vec![true; n];
        let mut ends = vec![[OMEGA; 2]; n];
        let num_cells = lattice.num_cells() as u32;
        for q in 0..n {
            let cells = lattice.incident_cells(q);
            active[q] = !cells.iter().all(|&c| cell_tube[lattice.cell_id(c)] != 0);
            if !active[q] {
                continue;
            }
            match lattice.kind(q) {
                QubitKind::Face => {
                    let mut e = [OMEGA; 2];
                    let s = lattice.coord(q);
                    let axis = RhgLattice::axes(s, false).next().expect("face has an even axis");
                    for (slot, d) in [-1i64, 1].into_iter().enumerate() {
                        if let Some(c) = lattice.offset(s, axis, d) {
                            let id = lattice.cell_id([c[0] / 2, c[1] / 2, c[2] / 2]);
                            if cell_tube[id] == 0 {
                                e[slot] = id as u32;
                            }
                        }
                    }
                    ends[q] = e;
                }
                QubitKind::Edge => {
                    let [a, b] = lattice.edge_vertices(q)?;
                    ends[q] = [num_cells + lattice.vertex_id(a) as u32, num_cells + lattice.vertex_id(b) as u32];
                }
            }
        }
        let mut spec = DefectSpec { tubes, num_qubits: n, dims: lattice.dims(), cell_tube, active, ends, reps: None };
        if !spec.tubes.is_empty() {
            spec.reps = Some(LogicalReps::compute(lattice, &spec)?);
        }
        Ok(spec)
    }

    pub fn tubes(&self) -> &[Tube] {
        &self.tubes
    }

    pub fn is_active(&self, q: usize) -> bool {
        self.active[q]
    }

    /// Qubits measured in Z because they lie inside a tube.
    pub fn inactive_qubits(&self) -> Vec<usize> {
        (0..self.num_qubits).filter(|&q| !self.active[q]).collect()
    }

    /// Cells whose checks are not measured.
    pub fn deactivated_cells(&self, lattice: &RhgLattice) -> Vec<[usize; 3]> {
        (0..self.cell_tube.len()).filter(|&c| self.cell_tube[c] != 0).map(|c| lattice.cell_of_id(c)).collect()
    }

    pub fn tube_of_cell(&self, lattice: &RhgLattice, cell: [usize; 3]) -> Option<usize> {
        match self.cell_tube[lattice.cell_id(cell)] {
            0 => None,
            t => Some(t as usize - 1),
        }
    }

    pub fn logical_reps(&self) -> Result<&LogicalReps> {
        self.reps.as_ref().ok_or(Error::MissingLogicalReps)
    }

    fn check_lattice(&self, lattice: &RhgLattice) -> Result<()> {
        if lattice.dims() != self.dims || lattice.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: lattice.num_qubits() });
        }
        Ok(())
    }

    /// Node ids of odd incidence for the active part of `qubits`.
    fn odd_nodes(&self, qubits: &[usize]) -> Result<Vec<u32>> {
        let mut nodes = Vec::with_capacity(2 * qubits.len());
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(Error::UnknownQubit(q));
            }
            if self.active[q] {
                nodes.extend(self.ends[q].iter().copied().filter(|&e| e != OMEGA));
            }
        }
        nodes.sort_unstable();
        let mut odd = Vec::new();
        let mut i = 0;
        while i < nodes.len() {
            let mut j = i;
            while j < nodes.len() && nodes[j] == nodes[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                odd.push(nodes[i]);
            }
            i = j;
        }
        Ok(odd)
    }

    /// Number of flipped checks, without building the check list.
    pub fn syndrome_count(&self, qubits: &[usize]) -> Result<usize> {
        Ok(self.odd_nodes(qubits)?.len())
    }

    /// Classification of a raw qubit list (duplicates cancel), in
    /// `O(k log k)` for `k` qubits.
    pub fn classify_qubits(&self, qubits: &[usize]) -> Result<(ChainClass, usize)> {
        let reps = self.logical_reps()?;
        let odd = self.odd_nodes(qubits)?;
        if !odd.is_empty() {
            return Ok((ChainClass::Detected, odd.len()));
        }
        let mask = qubits.iter().filter(|&&q| self.active[q]).fold(0u64, |m, &q| m ^ reps.masks[q]);
        Ok((if mask != 0 { ChainClass::Logical } else { ChainClass::Trivial }, 0))
    }
}

/// Precomputed logical representatives and the cocycles that detect them.
///
/// Face-sector cocycles: for each tube, the faces with exactly one incident
/// cell in it (empty when z is open). Edge-sector cocycles: for each tube, the active y-edges on
/// the row `y = y0 + ½` from the x = 0 boundary up to the tube's left
/// surface; with a periodic z axis also the z-edges crossing the plane
/// `z = ½`. A chain with no syndrome is Logical iff it meets some cocycle an
/// odd number of times.
#[derive(Clone, Debug)]
pub struct LogicalReps {
    pub connecting: Option<ZChain>,
    pub encircling: Option<ZChain>,
    pub cocycles: Vec<ZChain>,
    masks: Vec<u64>,
    report: DistanceReport,
}

impl LogicalReps {
    fn compute(lattice: &RhgLattice, spec: &DefectSpec) -> Result<Self> {
        let n = lattice.num_qubits();
        let mut cocycles = Vec::new();
        // With open z ends the tube surfaces are not closed: a face chain
        // may run from a tube to the z boundary, which shares the free end
        // with the tubes, so every face chain is trivial.
        let closed = lattice.boundary() == Boundary::PeriodicZ;
        for t in 0..spec.tubes.len() {
            let surface = (0..n).filter(|&q| {
                closed
                    && spec.active[q]
                    && lattice.kind(q) == QubitKind::Face
                    && lattice
                        .incident_cells(q)
                        .iter()
                        .filter(|&&c| spec.cell_tube[lattice.cell_id(c)] as usize == t + 1)
                        .count()
                        == 1
            });
            cocycles.push(ZChain::from_qubits(surface));
        }
        let layers = lattice.vertex_layers();
        for tube in &spec.tubes {
            let mut membrane = Vec::new();
            for k in 0..layers {
                for i in 0..=tube.x0 {
                    let q = lattice.qubit_at([2 * i, 2 * tube.y0 + 1, 2 * k]).expect("membrane edge exists");
                    if spec.active[q] {
                        membrane.push(q);
                    }
                }
            }
            cocycles.push(ZChain::from_qubits(membrane));
        }
        if lattice.boundary() == Boundary::PeriodicZ {
            let [lx, ly, _] = lattice.dims();
            let mut plane = Vec::new();
            for j in 0..=ly {
                for i in 0..=lx {
                    let q = lattice.qubit_at([2 * i, 2 * j, 1]).expect("z-edge exists");
                    if spec.active[q] {
                        plane.push(q);
                    }
                }
            }
            cocycles.push(ZChain::from_qubits(plane));
        }
        let mut masks = vec![0u64; n];
        for (b, c) in cocycles.iter().enumerate() {
            for &q in c.qubits() {
                masks[q] |= 1 << b;
            }
        }
        let mut reps =
            LogicalReps { connecting: None, encircling: None, cocycles, masks, report: DistanceReport::default() };
        let (report, connecting, encircling) = distance::search(lattice, spec, &reps)?;
        reps.report = report;
        reps.connecting = connecting;
        reps.encircling = encircling;
        Ok(reps)
    }

    pub fn mask(&self, q: usize) -> u64 {
        self.masks[q]
    }

    pub fn distances(&self) -> DistanceReport {
        self.report
    }
}

/// Checks with odd incidence, sorted. Inactive qubits are ignored.
pub fn syndrome(lattice: &RhgLattice, chain: &ZChain, defects: &DefectSpec) -> Result<Vec<Check>> {
    defects.check_lattice(lattice)?;
    let cells = lattice.num_cells() as u32;
    let mut out: Vec<Check> = defects
        .odd_nodes(chain.qubits())?
        .into_iter()
        .map(|id| {
            if id < cells {
                Check::Cell(lattice.cell_of_id(id as usize))
            } else {
                Check::Vertex(lattice.vertex_of_id((id - cells) as usize))
            }
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Detected if the syndrome is nonempty, otherwise Logical iff the chain
/// meets some cocycle of `reps` an odd number of times.
pub fn classify(lattice: &RhgLattice, chain: &ZChain, defects: &DefectSpec, reps: &LogicalReps) -> Result<ChainClass> {
    defects.check_lattice(lattice)?;
    if reps.masks.len() != lattice.num_qubits() {
        return Err(Error::DimensionMismatch { expected: lattice.num_qubits(), found: reps.masks.len() });
    }
    if !syndrome(lattice, chain, defects)?.is_empty() {
        return Ok(ChainClass::Detected);
    }
    let mask = chain.qubits().iter().filter(|&&q| defects.is_active(q)).fold(0u64, |m, &q| m ^ reps.masks[q]);
    Ok(if mask != 0 { ChainClass::Logical } else { ChainClass::Trivial })
}

/// Weight of the lightest undetected Logical chain, or `None` if every
/// undetected chain is Trivial.
pub fn min_logical_weight(lattice: &RhgLattice, defects: &DefectSpec) -> Result<Option<usize>> {
    defects.check_lattice(lattice)?;
    match &defects.reps {
        Some(r) => Ok(r.report.min()),
        None => Ok(None),
    }
}

/// The canonical two-tube geometry with code distance `d ≥ 2`.
///
/// Two square tubes of width `ceil(d/4)` sit side by side along x with
/// `d - 1` cells between them and `d - 1` cells to the x/y boundary; z is
/// periodic with `max(d, 2)` cells. The shortest Logical chains then have
/// weight `min(gap + 1, margin + 1, 4 · width, Lz) = d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalGeometry {
    pub distance: usize,
    pub margin: usize,
    pub separation: usize,
    pub width: usize,
    pub dims: [usize; 3],
}

impl CanonicalGeometry {
    pub fn for_distance(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DegenerateGeometry(format!(
                "two separated tubes always give distance at least 2, asked for {d}"
            )));
        }
        let margin = d - 1;
        let separation = (d - 1).max(1);
        let width = d.div_ceil(4);
        let lz = d.max(2);
        let dims = [2 * margin + 2 * width + separation, 2 * margin + width, lz];
        Ok(CanonicalGeometry { distance: d, margin, separation, width, dims })
    }

    pub fn tubes(&self) -> Vec<Tube> {
        vec![
            Tube::square(self.margin, self.margin, self.width),
            Tube::square(self.margin + self.width + self.separation, self.margin, self.width),
        ]
    }

    pub fn build(&self) -> Result<(RhgLattice, DefectSpec)> {
        let lattice = RhgLattice::build_with(self.dims, Boundary::PeriodicZ)?;
        let defects = DefectSpec::place(&lattice, self.tubes())?;
        Ok((lattice, defects))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face(l: &RhgLattice, s: Site) -> usize {
        let q = l.qubit_at(s).unwrap();
        assert_eq!(l.kind(q), QubitKind::Face);
        q
    }

    #[test]
    fn elementary_cell_has_eighteen_qubits() {
        let l = RhgLattice::build([1, 1, 1]).unwrap();
        assert_eq!(l.num_qubits(), 18);
        let faces = (0..18).filter(|&q| l.kind(q) == QubitKind::Face).count();
        assert_eq!(faces, 6);
        assert_eq!(l.graph_edges().len(), 24);
    }

    #[test]
    fn qubit_counts_match_formula() {
        for dims in [[1, 1, 1], [2, 1, 1], [3, 2, 4], [4, 4, 2]] {
            for b in [Boundary::Open, Boundary::PeriodicZ] {
                if b == Boundary::PeriodicZ && dims[2] < 2 {
                    continue;
                }
                assert_eq!(RhgLattice::build_with(dims, b).unwrap().num_qubits(), expected_qubit_count(dims, b));
            }
        }
        assert!(RhgLattice::build([2, 1, 1]).unwrap().num_qubits() > 18);
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(RhgLattice::build([0, 1, 1]).is_err());
        assert!(RhgLattice::build_with([2, 2, 1], Boundary::PeriodicZ).is_err());
    }

    #[test]
    fn every_cell_has_six_faces() {
        let l = RhgLattice::build([3, 3, 3]).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                for i in 0..3 {
                    let faces = l.cell_faces([i, j, k]).unwrap();
                    assert_eq!(faces.len(), 6);
                    assert!(faces.iter().all(|&f| l.kind(f) == QubitKind::Face));
                }
            }
        }
    }

    #[test]
    fn bulk_face_flips_two_cells() {
        let l = RhgLattice::build([3, 3, 3]).unwrap();
        let d = DefectSpec::empty(&l);
        let f = face(&l, [3, 3, 2]);
        let s = syndrome(&l, &ZChain::from_qubits([f]), &d).unwrap();
        assert_eq!(s, vec![Check::Cell([1, 1, 0]), Check::Cell([1, 1, 1])]);
    }

    #[test]
    fn chain_ending_in_tube_flips_one_cell() {
        let l = RhgLattice::build_with([3, 3, 2], Boundary::PeriodicZ).unwrap();
        let d = DefectSpec::place(&l, vec![Tube::square(1, 1, 1)]).unwrap();
        // x-normal face between the tube cell (1,1,0) and its neighbour (2,1,0)
        let f = face(&l, [4, 3, 1]);
        let s = syndrome(&l, &ZChain::from_qubits([f]), &d).unwrap();
        assert_eq!(s, vec![Check::Cell([2, 1, 0])]);
    }

    #[test]
    fn repeated_qubits_cancel() {
        let c = ZChain::from_qubits([3, 1, 3, 2, 3]);
        assert_eq!(c.qubits(), &[1, 2, 3]);
        assert_eq!(c.symmetric_difference(&ZChain::from_qubits([2])).qubits(), &[1, 3]);
    }

    #[test]
    fn unknown_qubit_is_an_error() {
        let l = RhgLattice::build([1, 1, 1]).unwrap();
        let d = DefectSpec::empty(&l);
        assert_eq!(syndrome(&l, &ZChain::from_qubits([18]), &d), Err(Error::UnknownQubit(18)));
    }

    #[test]
    fn no_defects_means_no_logical() {
        let l = RhgLattice::build([1, 1, 1]).unwrap();
        let d = DefectSpec::empty(&l);
        assert_eq!(min_logical_weight(&l, &d).unwrap(), None);
        assert_eq!(d.logical_reps().unwrap_err(), Error::MissingLogicalReps);
    }

    #[test]
    fn touching_tubes_are_degenerate() {
        let l = RhgLattice::build_with([6, 4, 2], Boundary::PeriodicZ).unwrap();
        let err = DefectSpec::place(&l, vec![Tube::square(1, 1, 1), Tube::square(2, 1, 1)]).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
        let err = DefectSpec::place(&l, vec![Tube::square(0, 1, 1)]).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn canonical_geometry_reaches_requested_distance() {
        for d in 2..=6 {
            let g = CanonicalGeometry::for_distance(d).unwrap();
            let (l, defects) = g.build().unwrap();
            assert_eq!(min_logical_weight(&l, &defects).unwrap(), Some(d), "d = {d}");
        }
        assert!(CanonicalGeometry::for_distance(1).is_err());
    }

    #[test]
    fn representatives_are_logical() {
        let (l, d) = CanonicalGeometry::for_distance(4).unwrap().build().unwrap();
        let reps = d.logical_reps().unwrap();
        for rep in [reps.connecting.as_ref().unwrap(), reps.encircling.as_ref().unwrap()] {
            assert_eq!(classify(&l, rep, &d, reps).unwrap(), ChainClass::Logical);
        }
        let conn = reps.connecting.as_ref().unwrap();
        assert_eq!(conn.weight(), 4);
        assert!(conn.qubits().iter().all(|&q| l.kind(q) == QubitKind::Face));
        let enc = reps.encircling.as_ref().unwrap();
        assert!(enc.qubits().iter().all(|&q| l.kind(q) == QubitKind::Edge));
    }

    #[test]
    fn dangling_qubit_is_detected() {
        let (l, d) = CanonicalGeometry::for_distance(3).unwrap().build().unwrap();
        let reps = d.logical_reps().unwrap();
        let conn = reps.connecting.clone().unwrap();
        let extra = (0..l.num_qubits()).find(|&q| d.is_active(q) && !conn.contains(q) && reps.mask(q) == 0).unwrap();
        let chain = conn.symmetric_difference(&ZChain::from_qubits([extra]));
        assert_eq!(classify(&l, &chain, &d, reps).unwrap(), ChainClass::Detected);
    }

    #[test]
    fn cube_boundary_is_detected_by_neighbours() {
        let (l, d) = CanonicalGeometry::for_distance(3).unwrap().build().unwrap();
        let reps = d.logical_reps().unwrap();
        let chain = ZChain::from_qubits(l.cell_faces([0, 0, 0]).unwrap());
        // each of the six faces is shared with one neighbouring cell (or the
        // free boundary), so the neighbours light up
        let s = syndrome(&l, &chain, &d).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(classify(&l, &chain, &d, reps).unwrap(), ChainClass::Detected);
    }

    #[test]
    fn config_tube_from_cells() {
        let cells = Tube::square(2, 3, 2).cells(4);
        assert_eq!(Tube::from_cells(&cells, 4).unwrap(), Tube::square(2, 3, 2));
        assert!(Tube::from_cells(&cells[1..], 4).is_err());
    }
}
