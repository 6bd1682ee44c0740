//! Planar surface-code geometry on a doubled-coordinate grid.
//!
//! The grid is `(2L-1) × (2L-1)`. Data qubits sit where `r + c` is even,
//! vertex generators `X_s` at (odd, even) and plaquette generators `Z_p` at
//! (even, odd). Left and right sides are X boundaries (weight-3 `X_s`), top
//! and bottom are Z boundaries (weight-3 `Z_p`).
//!
//! Two cells of the same kind are neighbours at offset ±2 along a row or
//! column and share the data qubit halfway between them.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Axis, PauliOp, QubitId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub r: i32,
    pub c: i32,
}

impl Pos {
    pub const fn new(r: i32, c: i32) -> Self {
        Pos { r, c }
    }

    pub fn offset(self, dr: i32, dc: i32) -> Pos {
        Pos { r: self.r + dr, c: self.c + dc }
    }

    pub fn chebyshev(self, other: Pos) -> i32 {
        (self.r - other.r).abs().max((self.c - other.c).abs())
    }
}

/// The four lattice directions, in the order north, west, east, south.
pub const DIRS: [(i32, i32); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenKind {
    /// `X_s`
    Vertex,
    /// `Z_p`
    Plaquette,
}

impl GenKind {
    pub fn axis(self) -> Axis {
        match self {
            GenKind::Vertex => Axis::X,
            GenKind::Plaquette => Axis::Z,
        }
    }

    pub fn other(self) -> GenKind {
        match self {
            GenKind::Vertex => GenKind::Plaquette,
            GenKind::Plaquette => GenKind::Vertex,
        }
    }
}

/// A hole made of inactive vertices is an X-cut, of inactive plaquettes a Z-cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CutKind {
    X,
    Z,
}

impl CutKind {
    pub fn cell_kind(self) -> GenKind {
        match self {
            CutKind::X => GenKind::Vertex,
            CutKind::Z => GenKind::Plaquette,
        }
    }

    /// Axis of the single-qubit terms that fill the hole interior.
    pub fn term_axis(self) -> Axis {
        match self {
            CutKind::X => Axis::Z,
            CutKind::Z => Axis::X,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryType {
    XBoundary,
    ZBoundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QubitInfo {
    pub id: QubitId,
    pub pos: Pos,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorDef {
    pub id: usize,
    pub kind: GenKind,
    pub pos: Pos,
    pub support: Vec<QubitId>,
    pub active: bool,
}

impl GeneratorDef {
    pub fn op(&self) -> PauliOp {
        PauliOp::uniform(self.kind.axis(), self.support.iter().copied())
    }
}

/// A hole: its inactive cells plus the interior single-qubit terms currently on.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hole {
    pub cells: BTreeSet<Pos>,
    pub terms: BTreeSet<QubitId>,
}

impl Hole {
    pub fn single(cell: Pos) -> Self {
        Hole { cells: [cell].into_iter().collect(), terms: BTreeSet::new() }
    }

    /// Inclusive bounding box `(r0, c0, r1, c1)` in doubled coordinates.
    pub fn bbox(&self) -> (i32, i32, i32, i32) {
        let r0 = self.cells.iter().map(|p| p.r).min().unwrap_or(0);
        let r1 = self.cells.iter().map(|p| p.r).max().unwrap_or(0);
        let c0 = self.cells.iter().map(|p| p.c).min().unwrap_or(0);
        let c1 = self.cells.iter().map(|p| p.c).max().unwrap_or(0);
        (r0, c0, r1, c1)
    }

    /// `(rows, cols)` in cell units.
    pub fn dims(&self) -> (usize, usize) {
        let (r0, c0, r1, c1) = self.bbox();
        (((r1 - r0) / 2 + 1) as usize, ((c1 - c0) / 2 + 1) as usize)
    }

    pub fn is_rectangle(&self) -> bool {
        let (h, w) = self.dims();
        self.cells.len() == h * w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitLabel {
    /// `|+⟩`, the natural X-cut preparation.
    Plus,
    /// `|0⟩`, the natural Z-cut preparation.
    Zero,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectQubit {
    pub kind: CutKind,
    pub holes: [Hole; 2],
    pub d: usize,
    pub logical_x: PauliOp,
    pub logical_z: PauliOp,
    pub init: InitLabel,
}

impl DefectQubit {
    pub fn all_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        self.holes.iter().flat_map(|h| h.cells.iter().copied())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice size must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("no generator at ({0}, {1})")]
    NoGenerator(i32, i32),
    #[error("generator at ({0}, {1}) is already inactive")]
    AlreadyInactive(i32, i32),
    #[error("generator at ({0}, {1}) has the wrong kind for this cut")]
    KindMismatch(i32, i32),
    #[error("the two holes must be distinct")]
    SameCell,
    #[error("holes are not connected through active cells")]
    Disconnected,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lattice {
    pub l: usize,
    pub qubits: Vec<QubitInfo>,
    pub generators: Vec<GeneratorDef>,
    #[serde(skip)]
    qubit_grid: Vec<Option<QubitId>>,
    #[serde(skip)]
    gen_grid: Vec<Option<usize>>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.l == other.l
            && self
                .generators
                .iter()
                .zip(&other.generators)
                .all(|(a, b)| a.pos == b.pos && a.kind == b.kind && a.active == b.active && a.support == b.support)
    }
}

impl Lattice {
    pub fn build(l: usize) -> Result<Lattice, LatticeError> {
        if l < 2 {
            return Err(LatticeError::TooSmall(l));
        }
        let g = (2 * l - 1) as i32;
        let mut lat = Lattice {
            l,
            qubits: Vec::new(),
            generators: Vec::new(),
            qubit_grid: vec![None; (g * g) as usize],
            gen_grid: vec![None; (g * g) as usize],
        };
        for r in 0..g {
            for c in 0..g {
                if (r + c) % 2 == 0 {
                    let id = lat.qubits.len() as QubitId;
                    let orientation = if r % 2 == 0 { Orientation::Vertical } else { Orientation::Horizontal };
                    lat.qubits.push(QubitInfo { id, pos: Pos::new(r, c), orientation });
                    let k = lat.grid_index(Pos::new(r, c)).unwrap();
                    lat.qubit_grid[k] = Some(id);
                }
            }
        }
        for r in 0..g {
            for c in 0..g {
                if (r + c) % 2 == 1 {
                    let pos = Pos::new(r, c);
                    let kind = if r % 2 == 1 { GenKind::Vertex } else { GenKind::Plaquette };
                    let support: Vec<QubitId> =
                        DIRS.iter().filter_map(|&(dr, dc)| lat.qubit_at(pos.offset(dr, dc))).collect();
                    let id = lat.generators.len();
                    lat.generators.push(GeneratorDef { id, kind, pos, support, active: true });
                    let k = lat.grid_index(pos).unwrap();
                    lat.gen_grid[k] = Some(id);
                }
            }
        }
        Ok(lat)
    }

    /// Grid side length `2L - 1`.
    pub fn size(&self) -> i32 {
        (2 * self.l - 1) as i32
    }

    fn grid_index(&self, p: Pos) -> Option<usize> {
        let g = self.size();
        (p.r >= 0 && p.c >= 0 && p.r < g && p.c < g).then(|| (p.r * g + p.c) as usize)
    }

    /// Rebuilds lookup tables after deserialization.
    pub fn reindex(&mut self) {
        let g = self.size();
        self.qubit_grid = vec![None; (g * g) as usize];
        self.gen_grid = vec![None; (g * g) as usize];
        for q in &self.qubits {
            let k = (q.pos.r * g + q.pos.c) as usize;
            self.qubit_grid[k] = Some(q.id);
        }
        for gd in &self.generators {
            let k = (gd.pos.r * g + gd.pos.c) as usize;
            self.gen_grid[k] = Some(gd.id);
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit_at(&self, p: Pos) -> Option<QubitId> {
        self.grid_index(p).and_then(|k| self.qubit_grid[k])
    }

    pub fn qubit_pos(&self, q: QubitId) -> Pos {
        self.qubits[q as usize].pos
    }

    pub fn generator_at(&self, p: Pos) -> Option<&GeneratorDef> {
        self.grid_index(p).and_then(|k| self.gen_grid[k]).map(|i| &self.generators[i])
    }

    pub fn generator_id_at(&self, p: Pos) -> Option<usize> {
        self.grid_index(p).and_then(|k| self.gen_grid[k])
    }

    pub fn kind_at(p: Pos) -> Option<GenKind> {
        match (p.r.rem_euclid(2), p.c.rem_euclid(2)) {
            (1, 0) => Some(GenKind::Vertex),
            (0, 1) => Some(GenKind::Plaquette),
            _ => None,
        }
    }

    pub fn cell_op(&self, p: Pos) -> Option<PauliOp> {
        self.generator_at(p).map(|g| g.op())
    }

    pub fn active_generators(&self) -> impl Iterator<Item = &GeneratorDef> {
        self.generators.iter().filter(|g| g.active)
    }

    pub fn boundary_type(side: Side) -> BoundaryType {
        match side {
            Side::Left | Side::Right => BoundaryType::XBoundary,
            Side::Top | Side::Bottom => BoundaryType::ZBoundary,
        }
    }

    /// A cell is interior when it has full weight 4.
    pub fn is_interior_cell(&self, p: Pos) -> bool {
        self.generator_at(p).is_some_and(|g| g.support.len() == 4)
    }

    /// Edges out of a cell: `(neighbour cell or None for the boundary, shared qubit)`.
    pub fn cell_edges(&self, p: Pos) -> Vec<(Option<Pos>, QubitId)> {
        DIRS.iter()
            .filter_map(|&(dr, dc)| {
                let q = self.qubit_at(p.offset(dr, dc))?;
                let n = p.offset(2 * dr, 2 * dc);
                Some((self.generator_at(n).map(|_| n), q))
            })
            .collect()
    }

    /// The two cells of `kind` touching qubit `q` (`None` where off-grid).
    pub fn cells_of_qubit(&self, q: QubitId, kind: GenKind) -> [Option<Pos>; 2] {
        let p = self.qubit_pos(q);
        let vertical_pair = match kind {
            GenKind::Vertex => p.r % 2 == 0,
            GenKind::Plaquette => p.r % 2 == 1,
        };
        let (a, b) = if vertical_pair { (p.offset(-1, 0), p.offset(1, 0)) } else { (p.offset(0, -1), p.offset(0, 1)) };
        [self.generator_at(a).map(|_| a), self.generator_at(b).map(|_| b)]
    }

    /// Qubit shared by two neighbouring cells of the same kind.
    pub fn shared_qubit(&self, a: Pos, b: Pos) -> Option<QubitId> {
        let (dr, dc) = (b.r - a.r, b.c - a.c);
        if !((dr.abs() == 2 && dc == 0) || (dc.abs() == 2 && dr == 0)) {
            return None;
        }
        self.qubit_at(a.offset(dr / 2, dc / 2))
    }

    /// Qubits with both same-kind neighbours inside the cell set.
    pub fn interior_qubits(&self, cells: &BTreeSet<Pos>) -> BTreeSet<QubitId> {
        let mut out = BTreeSet::new();
        for &a in cells {
            for (n, q) in self.cell_edges(a) {
                if n.is_some_and(|n| cells.contains(&n)) {
                    out.insert(q);
                }
            }
        }
        out
    }

    /// Patch logicals: `X` along the top row, `Z` down the left column.
    pub fn patch_logicals(&self) -> (PauliOp, PauliOp) {
        let g = self.size();
        let x = PauliOp::uniform(Axis::X, (0..g).step_by(2).filter_map(|c| self.qubit_at(Pos::new(0, c))));
        let z = PauliOp::uniform(Axis::Z, (0..g).step_by(2).filter_map(|r| self.qubit_at(Pos::new(r, 0))));
        (x, z)
    }

    pub fn set_active(&mut self, p: Pos, active: bool) {
        if let Some(i) = self.generator_id_at(p) {
            self.generators[i].active = active;
        }
    }

    /// Turns off the generators at `pos1` and `pos2` and returns the new qubit.
    pub fn create_double_cut(&mut self, kind: CutKind, pos1: Pos, pos2: Pos) -> Result<DefectQubit, LatticeError> {
        if pos1 == pos2 {
            return Err(LatticeError::SameCell);
        }
        for p in [pos1, pos2] {
            let g = self.generator_at(p).ok_or(LatticeError::NoGenerator(p.r, p.c))?;
            if g.kind != kind.cell_kind() {
                return Err(LatticeError::KindMismatch(p.r, p.c));
            }
            if !g.active {
                return Err(LatticeError::AlreadyInactive(p.r, p.c));
            }
        }
        self.set_active(pos1, false);
        self.set_active(pos2, false);
        let holes = [Hole::single(pos1), Hole::single(pos2)];
        let (logical_x, logical_z) = match self.defect_logicals(kind, &holes) {
            Some(l) => l,
            None => {
                self.set_active(pos1, true);
                self.set_active(pos2, true);
                return Err(LatticeError::Disconnected);
            }
        };
        let init = match kind {
            CutKind::X => InitLabel::Plus,
            CutKind::Z => InitLabel::Zero,
        };
        Ok(DefectQubit { kind, holes, d: 4, logical_x, logical_z, init })
    }

    /// Reactivates every cell of a defect qubit.
    pub fn close_double_cut(&mut self, dq: &DefectQubit) {
        for p in dq.all_cells().collect::<Vec<_>>() {
            self.set_active(p, true);
        }
    }

    /// Marks cells active/inactive to follow a defect whose holes moved.
    pub fn update_holes(&mut self, old: &DefectQubit, new: &DefectQubit) {
        for p in old.all_cells().collect::<Vec<_>>() {
            self.set_active(p, true);
        }
        for p in new.all_cells().collect::<Vec<_>>() {
            self.set_active(p, false);
        }
    }

    /// Geometric logical pair: ring around hole 0 and chain between the holes.
    ///
    /// The ring carries the cell axis, the chain the opposite one, so for a
    /// Z-cut `Z_L` is the ring and `X_L` the chain; for an X-cut it is reversed.
    pub fn defect_logicals(&self, kind: CutKind, holes: &[Hole; 2]) -> Option<(PauliOp, PauliOp)> {
        let ck = kind.cell_kind();
        let mut ring = PauliOp::identity();
        for &c in &holes[0].cells {
            ring = &ring * &self.cell_op(c)?;
        }
        let chain_axis = ck.other().axis();
        let path = self.chain_path(&holes[0].cells, Target::Cells(&holes[1].cells), &HashSet::new())?;
        let chain = PauliOp::uniform(chain_axis, path);
        Some(match kind {
            CutKind::Z => (chain, ring),
            CutKind::X => (ring, chain),
        })
    }

    /// Shortest path of shared qubits from `from` to `target` through active
    /// cells of `kind`, avoiding `blocked` cells.
    fn chain_path(&self, from: &BTreeSet<Pos>, target: Target<'_>, blocked: &HashSet<Pos>) -> Option<Vec<QubitId>> {
        let g = self.size() as usize;
        let idx = |p: Pos| p.r as usize * g + p.c as usize;
        let mut prev: Vec<Option<(Pos, QubitId)>> = vec![None; g * g];
        let mut seen = vec![false; g * g];
        let mut queue = VecDeque::new();
        for &s in from {
            seen[idx(s)] = true;
            queue.push_back(s);
        }
        let unwind = |prev: &Vec<Option<(Pos, QubitId)>>, mut p: Pos, last: Option<QubitId>| {
            let mut out: Vec<QubitId> = last.into_iter().collect();
            while let Some((pp, q)) = prev[idx(p)] {
                out.push(q);
                p = pp;
            }
            out
        };
        while let Some(p) = queue.pop_front() {
            for (n, q) in self.cell_edges(p) {
                match n {
                    None => {
                        if matches!(target, Target::CellsOrBoundary(_)) {
                            return Some(unwind(&prev, p, Some(q)));
                        }
                    }
                    Some(n) => {
                        if seen[idx(n)] {
                            continue;
                        }
                        let hit = match target {
                            Target::Cells(t) | Target::CellsOrBoundary(t) => t.contains(&n),
                        };
                        if hit {
                            return Some(unwind(&prev, p, Some(q)));
                        }
                        let gdef = self.generator_at(n)?;
                        if !gdef.active || blocked.contains(&n) {
                            continue;
                        }
                        seen[idx(n)] = true;
                        prev[idx(n)] = Some((p, q));
                        queue.push_back(n);
                    }
                }
            }
        }
        None
    }

    /// Exact minimum logical weight of a defect qubit.
    pub fn min_logical_weight(&self, dq: &DefectQubit) -> usize {
        let w = self.logical_weights(dq);
        w.chain.min(w.ring)
    }

    /// Minimum chain and ring weights, with every other inactive cell treated as an obstacle.
    pub fn logical_weights(&self, dq: &DefectQubit) -> LogicalWeights {
        let ck = dq.kind.cell_kind();
        let own: HashSet<Pos> = dq.all_cells().collect();
        let blocked: HashSet<Pos> =
            self.generators.iter().filter(|g| !g.active && !own.contains(&g.pos)).map(|g| g.pos).collect();
        let chain = self
            .chain_path(&dq.holes[0].cells, Target::CellsOrBoundary(&dq.holes[1].cells), &blocked)
            .map(|p| p.len())
            .unwrap_or(usize::MAX);
        let reference = match dq.kind {
            CutKind::Z => &dq.logical_x,
            CutKind::X => &dq.logical_z,
        };
        let crossing: HashSet<QubitId> = reference.qubits().collect();
        let mut term_qubits: HashSet<QubitId> = HashSet::new();
        for h in &dq.holes {
            term_qubits.extend(self.interior_qubits(&h.cells));
        }
        let ring = self.shortest_odd_cycle(ck.other(), &crossing, &term_qubits, &blocked).unwrap_or(usize::MAX);
        LogicalWeights { chain, ring }
    }

    /// Shortest closed walk in the `kind` cell graph (boundary merged into one
    /// node) crossing `crossing` an odd number of times.
    fn shortest_odd_cycle(
        &self,
        kind: GenKind,
        crossing: &HashSet<QubitId>,
        excluded: &HashSet<QubitId>,
        blocked: &HashSet<Pos>,
    ) -> Option<usize> {
        let g = self.size() as usize;
        let boundary = g * g;
        let node = |p: Option<Pos>| p.map(|p| p.r as usize * g + p.c as usize).unwrap_or(boundary);
        let cells: Vec<Pos> = self
            .generators
            .iter()
            .filter(|gd| gd.kind == kind && !blocked.contains(&gd.pos))
            .map(|gd| gd.pos)
            .collect();
        let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); boundary + 1];
        for &p in &cells {
            for (n, q) in self.cell_edges(p) {
                if excluded.contains(&q) || n.is_some_and(|n| blocked.contains(&n)) {
                    continue;
                }
                let par = crossing.contains(&q);
                adj[node(Some(p))].push((node(n), par));
                if n.is_none() {
                    adj[boundary].push((node(Some(p)), par));
                }
            }
        }
        let starts: BTreeSet<usize> = cells
            .iter()
            .filter(|p| self.cell_edges(**p).iter().any(|(_, q)| crossing.contains(q)))
            .map(|p| node(Some(*p)))
            .collect();
        let mut best: Option<usize> = None;
        let mut dist = vec![[usize::MAX; 2]; boundary + 1];
        for &s in &starts {
            for d in dist.iter_mut() {
                *d = [usize::MAX; 2];
            }
            dist[s][0] = 0;
            let mut queue = VecDeque::from([(s, 0usize)]);
            while let Some((u, par)) = queue.pop_front() {
                let du = dist[u][par];
                if best.is_some_and(|b| du + 1 >= b) {
                    break;
                }
                for &(v, flip) in &adj[u] {
                    let pv = par ^ flip as usize;
                    if dist[v][pv] == usize::MAX {
                        dist[v][pv] = du + 1;
                        queue.push_back((v, pv));
                    }
                }
            }
            if dist[s][1] != usize::MAX {
                best = Some(best.map_or(dist[s][1], |b| b.min(dist[s][1])));
            }
        }
        best
    }

    /// JSON-friendly snapshot including defects.
    pub fn describe(&self, defects: &[DefectQubit]) -> LatticeDescription {
        LatticeDescription {
            l: self.l,
            num_qubits: self.num_qubits(),
            num_active_generators: self.active_generators().count(),
            qubits: self.qubits.clone(),
            generators: self.generators.clone(),
            defects: defects.to_vec(),
        }
    }
}

#[derive(Clone, Copy)]
enum Target<'a> {
    Cells(&'a BTreeSet<Pos>),
    CellsOrBoundary(&'a BTreeSet<Pos>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalWeights {
    pub chain: usize,
    pub ring: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeDescription {
    pub l: usize,
    pub num_qubits: usize,
    pub num_active_generators: usize,
    pub qubits: Vec<QubitInfo>,
    pub generators: Vec<GeneratorDef>,
    pub defects: Vec<DefectQubit>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::commutes;

    #[test]
    fn counts_match_formula() {
        for l in 2..10 {
            let lat = Lattice::build(l).unwrap();
            assert_eq!(lat.num_qubits(), 2 * l * l - 2 * l + 1);
            assert_eq!(lat.generators.len(), 2 * l * l - 2 * l);
        }
        assert!(Lattice::build(1).is_err());
    }

    #[test]
    fn boundary_weights() {
        let lat = Lattice::build(5).unwrap();
        for g in &lat.generators {
            let edge = match g.kind {
                GenKind::Vertex => g.pos.c == 0 || g.pos.c == lat.size() - 1,
                GenKind::Plaquette => g.pos.r == 0 || g.pos.r == lat.size() - 1,
            };
            assert_eq!(g.support.len(), if edge { 3 } else { 4 });
        }
    }

    #[test]
    fn patch_logicals_anticommute_and_commute_with_generators() {
        let lat = Lattice::build(6).unwrap();
        let (x, z) = lat.patch_logicals();
        assert!(!commutes(&x, &z));
        assert_eq!(x.weight(), 6);
        for g in &lat.generators {
            assert!(commutes(&g.op(), &x) && commutes(&g.op(), &z));
        }
    }

    #[test]
    fn create_and_close_restores_lattice() {
        let orig = Lattice::build(8).unwrap();
        let mut lat = orig.clone();
        let dq = lat.create_double_cut(CutKind::X, Pos::new(5, 4), Pos::new(5, 10)).unwrap();
        assert_ne!(lat, orig);
        lat.close_double_cut(&dq);
        assert_eq!(lat, orig);
    }

    #[test]
    fn create_rejects_bad_positions() {
        let mut lat = Lattice::build(8).unwrap();
        assert_eq!(
            lat.create_double_cut(CutKind::X, Pos::new(4, 5), Pos::new(5, 10)).unwrap_err(),
            LatticeError::KindMismatch(4, 5)
        );
        lat.create_double_cut(CutKind::Z, Pos::new(4, 5), Pos::new(4, 11)).unwrap();
        assert_eq!(
            lat.create_double_cut(CutKind::Z, Pos::new(4, 5), Pos::new(8, 5)).unwrap_err(),
            LatticeError::AlreadyInactive(4, 5)
        );
    }
}
