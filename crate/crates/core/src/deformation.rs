//! Deformation schedules for hole creation, enlargement, movement and
//! braiding, plus the validity and parallelism checks every step must pass.
//!
//! A hole is a set of inactive cells plus a spanning tree of single-qubit
//! terms on the edges between them. Growing by a cell `n` next to a hole
//! cell uses `Q = i T_e G_n` (term on the shared edge times the new cell);
//! releasing a cell `c` uses `Q = i G_c T_e`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CutKind, DefectQubit, Hole, Lattice, LatticeError, Pos};
use crate::pauli::{commutes, multiply, PauliOp, Phase, QubitId};
use crate::tableau::{LogicalPair, Tableau, TableauError, Toggle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    West,
    East,
    South,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::West, Direction::East, Direction::South];

    pub fn unit(self) -> (i32, i32) {
        match self {
            Direction::North => (-1, 0),
            Direction::West => (0, -1),
            Direction::East => (0, 1),
            Direction::South => (1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    fn lane(self) -> Direction {
        match self {
            Direction::North | Direction::South => Direction::East,
            Direction::East | Direction::West => Direction::South,
        }
    }

    /// Neighbouring cell of the same kind.
    pub fn step(self, p: Pos) -> Pos {
        let (dr, dc) = self.unit();
        p.offset(2 * dr, 2 * dc)
    }

    fn proj(self, p: Pos) -> i32 {
        let (dr, dc) = self.unit();
        p.r * dr + p.c * dc
    }
}

/// Interpolation profile `f: 0 → π/4` whose first `order` derivatives vanish at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub order: u32,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { order: 2 }
    }
}

impl Schedule {
    /// `f(s)` for `s ∈ [0, 1]`.
    pub fn f(&self, s: f64) -> f64 {
        std::f64::consts::FRAC_PI_4 * smoothstep(self.order, s)
    }
}

/// Polynomial smoothstep of degree `2n + 1`.
pub fn smoothstep(n: u32, x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let n = n as u64;
    let mut sum = 0.0;
    for k in 0..=n {
        sum += binom(n + k, k) * binom(2 * n + 1, n - k) * (-x).powi(k as i32);
    }
    x.powi(n as i32 + 1) * sum
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// New geometry of one hole after a step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoleUpdate {
    pub defect: usize,
    pub hole: usize,
    pub after: Hole,
}

/// Toggles applied first, then all rotations simultaneously.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeformationStep {
    pub label: String,
    pub toggles: Vec<Toggle>,
    pub rotations: Vec<PauliOp>,
    pub schedule: Schedule,
    #[serde(default)]
    pub updates: Vec<HoleUpdate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    pub odd_count: usize,
    pub valid: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeformError {
    #[error("cell ({0}, {1}) is blocked")]
    Blocked(i32, i32),
    #[error("hole is not a rectangle")]
    NotRectangle,
    #[error("perimeter {0} is not a positive multiple of 4")]
    BadPerimeter(usize),
    #[error("hole cannot shrink below one slice")]
    TooThin,
    #[error("no defect {0} hole {1}")]
    UnknownHole(usize, usize),
    #[error("invalid step {0}: {1}")]
    InvalidStep(String, String),
    #[error("generator at ({0}, {1}) was already deformed")]
    Deformed(i32, i32),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Count of active generators anticommuting with `q`; valid iff odd.
pub fn check_validity(tab: &Tableau, q: &PauliOp) -> Validity {
    let n = tab.violated_count(q);
    Validity { odd_count: n, valid: n % 2 == 1 }
}

/// Rotations pairwise commute, each has an odd anticommuting set, and the sets are disjoint.
pub fn check_parallel(tab: &Tableau, qs: &[PauliOp]) -> bool {
    let mut seen = BTreeSet::new();
    for (i, q) in qs.iter().enumerate() {
        if qs[i + 1..].iter().any(|r| !commutes(q, r)) {
            return false;
        }
        let set = tab.anticommuting(q);
        if set.len().is_multiple_of(2) {
            return false;
        }
        for g in set {
            if !seen.insert(g) {
                return false;
            }
        }
    }
    true
}

fn term_op(kind: CutKind, q: QubitId) -> PauliOp {
    PauliOp::single(q, kind.term_axis())
}

fn times_i(p: PauliOp) -> PauliOp {
    let ph = p.phase() * Phase::I;
    p.with_phase(ph)
}

/// `i T_e G_n`: grows the hole into `n` across edge `e`.
pub fn expansion_rotation(lat: &Lattice, kind: CutKind, e: QubitId, n: Pos) -> PauliOp {
    times_i(multiply(&term_op(kind, e), &lat.cell_op(n).expect("cell exists")))
}

/// `i G_c T_e`: releases cell `c`, whose only term is on `e`.
pub fn contraction_rotation(lat: &Lattice, kind: CutKind, c: Pos, e: QubitId) -> PauliOp {
    times_i(multiply(&lat.cell_op(c).expect("cell exists"), &term_op(kind, e)))
}

/// Spanning tree used before a move in `dir`: every edge along `dir`, plus the
/// perpendicular edges of the second trailing slice (of the only slice if there is one).
pub fn pre_move_terms(lat: &Lattice, cells: &BTreeSet<Pos>, dir: Direction) -> BTreeSet<QubitId> {
    let mut t = BTreeSet::new();
    for &p in cells {
        let n = dir.step(p);
        if cells.contains(&n) {
            t.insert(lat.shared_qubit(p, n).expect("neighbouring cells"));
        }
    }
    let slices: BTreeSet<i32> = cells.iter().map(|&p| dir.proj(p)).collect();
    let spine = *slices.iter().nth(1).or(slices.iter().next()).expect("non-empty hole");
    let lane = dir.lane();
    for &p in cells.iter().filter(|&&p| dir.proj(p) == spine) {
        let n = lane.step(p);
        if cells.contains(&n) {
            t.insert(lat.shared_qubit(p, n).expect("neighbouring cells"));
        }
    }
    t
}

/// Switch from one term tree to another: new terms on first, then old ones off.
pub fn swap_toggles(kind: CutKind, current: &BTreeSet<QubitId>, target: &BTreeSet<QubitId>) -> Vec<Toggle> {
    let mut v: Vec<Toggle> = target.difference(current).map(|&q| Toggle { op: term_op(kind, q), on: true }).collect();
    v.extend(current.difference(target).map(|&q| Toggle { op: term_op(kind, q), on: false }));
    v
}

fn slice_cells(cells: &BTreeSet<Pos>, dir: Direction, leading: bool) -> Vec<Pos> {
    let key = |p: &Pos| dir.proj(*p);
    let target = if leading { cells.iter().map(key).max() } else { cells.iter().map(key).min() };
    cells.iter().copied().filter(|p| Some(key(p)) == target).collect()
}

/// Closed rectilinear path of a hole, as unit moves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidPath {
    pub moves: Vec<(Direction, usize)>,
}

impl BraidPath {
    /// Offsets visited by the hole in doubled coordinates, starting at `(0, 0)`.
    pub fn waypoints(&self) -> Vec<(i32, i32)> {
        let mut out = vec![(0, 0)];
        let (mut r, mut c) = (0, 0);
        for &(d, n) in &self.moves {
            let (dr, dc) = d.unit();
            r += 2 * dr * n as i32;
            c += 2 * dc * n as i32;
            out.push((r, c));
        }
        out
    }

    pub fn is_closed(&self) -> bool {
        self.waypoints().last() == Some(&(0, 0))
    }

    /// Winding number of the path of a point starting at `start` around `centre`.
    pub fn winding_number(&self, start: (f64, f64), centre: (f64, f64)) -> i32 {
        let pts: Vec<(f64, f64)> =
            self.waypoints().iter().map(|&(r, c)| (start.0 + r as f64, start.1 + c as f64)).collect();
        let mut w = 0;
        for win in pts.windows(2) {
            let ((r0, c0), (r1, c1)) = (win[0], win[1]);
            // ray from the centre towards +c; count signed crossings
            if (r0 <= centre.0) != (r1 <= centre.0) {
                let c_at = c0 + (centre.0 - r0) * (c1 - c0) / (r1 - r0);
                if c_at > centre.1 {
                    w += if r1 > r0 { 1 } else { -1 };
                }
            }
        }
        w
    }
}

pub fn hole_centre(h: &Hole) -> (f64, f64) {
    let (r0, c0, r1, c1) = h.bbox();
    ((r0 + r1) as f64 / 2.0, (c0 + c1) as f64 / 2.0)
}

/// Rectangular loop taking `moving` over, past, under and back around `target`.
pub fn canonical_loop(moving: &Hole, target: &Hole, clearance: i32) -> BraidPath {
    let (mr0, mc0, mr1, mc1) = moving.bbox();
    let (tr0, tc0, tr1, tc1) = target.bbox();
    let units = |gap: i32| (gap.max(0) + 1) as usize / 2;
    let up = units(mr1 - tr0 + clearance);
    let top = mr0 - 2 * up as i32;
    let down = units(tr1 + clearance - top);
    let (side, across) = if mc1 < tc0 {
        (Direction::East, units(tc1 + clearance - mc0))
    } else {
        (Direction::West, units(mc1 - tc0 + clearance))
    };
    BraidPath {
        moves: vec![
            (Direction::North, up),
            (side, across),
            (Direction::South, down),
            (side.opposite(), across),
            (Direction::North, down - up),
        ],
    }
}

/// Lattice, code state and defects evolving together.
#[derive(Clone, Debug)]
pub struct Device {
    pub lattice: Lattice,
    pub tableau: Tableau,
    pub defects: Vec<DefectQubit>,
    /// Minimum Chebyshev distance between cells of different holes.
    pub clearance: i32,
}

impl Device {
    pub fn new(l: usize) -> Result<Device, DeformError> {
        let lattice = Lattice::build(l)?;
        let tableau = Tableau::new(&lattice, &[]);
        Ok(Device { lattice, tableau, defects: Vec::new(), clearance: 3 })
    }

    pub fn tag(i: usize) -> String {
        format!("q{i}")
    }

    pub fn logical(&self, i: usize) -> &LogicalPair {
        self.tableau.logical(&Self::tag(i)).expect("registered defect")
    }

    /// Switches off two fresh cells and registers the new logical pair.
    pub fn create_double_cut(&mut self, kind: CutKind, p1: Pos, p2: Pos) -> Result<usize, DeformError> {
        for p in [p1, p2] {
            let id = self.lattice.generator_id_at(p).ok_or(LatticeError::NoGenerator(p.r, p.c))?;
            if self.tableau.generators()[id].op != self.lattice.generators[id].op() {
                return Err(DeformError::Deformed(p.r, p.c));
            }
        }
        let dq = self.lattice.create_double_cut(kind, p1, p2)?;
        for p in [p1, p2] {
            let id = self.lattice.generator_id_at(p).expect("checked");
            self.tableau.toggle_generator(id, false)?;
        }
        let i = self.defects.len();
        self.tableau.register_logical(Self::tag(i), dq.logical_x.clone(), dq.logical_z.clone());
        self.defects.push(dq);
        Ok(i)
    }

    fn hole(&self, di: usize, hi: usize) -> Result<&Hole, DeformError> {
        self.defects.get(di).and_then(|d| d.holes.get(hi)).ok_or(DeformError::UnknownHole(di, hi))
    }

    fn check_free(&self, n: Pos, di: usize, hi: usize) -> Result<(), DeformError> {
        let kind = self.defects[di].kind;
        let ok = self.lattice.generator_at(n).is_some_and(|g| g.kind == kind.cell_kind())
            && self.lattice.is_interior_cell(n);
        if !ok {
            return Err(DeformError::Blocked(n.r, n.c));
        }
        for (dj, d) in self.defects.iter().enumerate() {
            for (hj, h) in d.holes.iter().enumerate() {
                if (dj, hj) == (di, hi) {
                    continue;
                }
                if h.cells.iter().any(|&o| o.chebyshev(n) < self.clearance) {
                    return Err(DeformError::Blocked(n.r, n.c));
                }
            }
        }
        Ok(())
    }

    /// One step on a simulated hole: optional swap, expansion of the leading
    /// slice, release of the trailing slice.
    fn step_on(
        &self,
        di: usize,
        hi: usize,
        hole: &Hole,
        dir: Direction,
        expand: bool,
        contract: bool,
    ) -> Result<(DeformationStep, Hole), DeformError> {
        let kind = self.defects[di].kind;
        let lat = &self.lattice;
        let mut toggles = Vec::new();
        let mut rotations = Vec::new();
        let mut cells = hole.cells.clone();
        let mut terms = hole.terms.clone();
        if contract {
            let target = pre_move_terms(lat, &hole.cells, dir);
            toggles = swap_toggles(kind, &hole.terms, &target);
            terms = target;
        }
        if expand {
            for p in slice_cells(&hole.cells, dir, true) {
                let n = dir.step(p);
                self.check_free(n, di, hi)?;
                let e = lat.shared_qubit(p, n).expect("neighbours");
                rotations.push(expansion_rotation(lat, kind, e, n));
                cells.insert(n);
                terms.insert(e);
            }
        }
        if contract {
            let slices: BTreeSet<i32> = hole.cells.iter().map(|&p| dir.proj(p)).collect();
            if slices.len() < 2 {
                return Err(DeformError::TooThin);
            }
            for c in slice_cells(&hole.cells, dir, false) {
                let e = lat.shared_qubit(c, dir.step(c)).expect("neighbours");
                rotations.push(contraction_rotation(lat, kind, c, e));
                cells.remove(&c);
                terms.remove(&e);
            }
        }
        let label = match (expand, contract) {
            (true, true) => format!("move {dir:?}"),
            (true, false) => format!("grow {dir:?}"),
            _ => format!("release {:?}", dir.opposite()),
        };
        let after = Hole { cells, terms };
        let step = DeformationStep {
            label,
            toggles,
            rotations,
            schedule: Schedule::default(),
            updates: vec![HoleUpdate { defect: di, hole: hi, after: after.clone() }],
        };
        Ok((step, after))
    }

    /// Expansion-only steps adding `units` slices in `dir`.
    pub fn plan_grow(
        &self,
        di: usize,
        hi: usize,
        dir: Direction,
        units: usize,
    ) -> Result<Vec<DeformationStep>, DeformError> {
        let mut hole = self.hole(di, hi)?.clone();
        let mut out = Vec::new();
        for _ in 0..units {
            let (s, h) = self.step_on(di, hi, &hole, dir, true, false)?;
            out.push(s);
            hole = h;
        }
        Ok(out)
    }

    /// Grows a hole to a `d/4 × d/4` square: down first, then right, one slice per step.
    pub fn plan_enlarge(&self, di: usize, hi: usize, d: usize) -> Result<Vec<DeformationStep>, DeformError> {
        if d == 0 || !d.is_multiple_of(4) {
            return Err(DeformError::BadPerimeter(d));
        }
        let hole = self.hole(di, hi)?;
        if !hole.is_rectangle() {
            return Err(DeformError::NotRectangle);
        }
        let k = d / 4;
        let (h, w) = hole.dims();
        let mut steps = Vec::new();
        let mut sim = self.clone();
        for (dir, have) in [(Direction::South, h), (Direction::East, w)] {
            let part = sim.plan_grow(di, hi, dir, k.saturating_sub(have))?;
            for s in &part {
                sim.apply_updates(s);
            }
            steps.extend(part);
        }
        Ok(steps)
    }

    /// Releases `units` slices from the `side` edge of a hole.
    pub fn plan_retract(
        &self,
        di: usize,
        hi: usize,
        side: Direction,
        units: usize,
    ) -> Result<Vec<DeformationStep>, DeformError> {
        let mut hole = self.hole(di, hi)?.clone();
        if !hole.is_rectangle() {
            return Err(DeformError::NotRectangle);
        }
        let mut out = Vec::new();
        for _ in 0..units {
            let (s, h) = self.step_on(di, hi, &hole, side.opposite(), false, true)?;
            out.push(s);
            hole = h;
        }
        Ok(out)
    }

    /// Inverse of [`Device::plan_enlarge`] from a `d/4 × d/4` square back to one cell.
    pub fn plan_shrink(&self, di: usize, hi: usize) -> Result<Vec<DeformationStep>, DeformError> {
        let (h, w) = self.hole(di, hi)?.dims();
        let mut steps = self.plan_retract(di, hi, Direction::East, w - 1)?;
        let mut sim = self.clone();
        for s in &steps {
            sim.apply_updates(s);
        }
        steps.extend(sim.plan_retract(di, hi, Direction::South, h - 1)?);
        Ok(steps)
    }

    /// Translation by `units`: one composite step per unit when the hole is at
    /// least two slices deep along `dir`, otherwise grow then release.
    pub fn plan_move(
        &self,
        di: usize,
        hi: usize,
        dir: Direction,
        units: usize,
    ) -> Result<Vec<DeformationStep>, DeformError> {
        let mut hole = self.hole(di, hi)?.clone();
        if !hole.is_rectangle() {
            return Err(DeformError::NotRectangle);
        }
        let mut out = Vec::new();
        for _ in 0..units {
            let depth = hole.cells.iter().map(|&p| dir.proj(p)).collect::<BTreeSet<_>>().len();
            if depth >= 2 {
                let (s, h) = self.step_on(di, hi, &hole, dir, true, true)?;
                out.push(s);
                hole = h;
            } else {
                let (s1, h1) = self.step_on(di, hi, &hole, dir, true, false)?;
                let (s2, h2) = self.step_on(di, hi, &h1, dir, false, true)?;
                out.push(s1);
                out.push(s2);
                hole = h2;
            }
        }
        Ok(out)
    }

    /// Steps following a path segment by segment.
    pub fn plan_path(&self, di: usize, hi: usize, path: &BraidPath) -> Result<Vec<DeformationStep>, DeformError> {
        let mut sim = self.clone();
        let mut out = Vec::new();
        for &(dir, n) in &path.moves {
            let part = sim.plan_move(di, hi, dir, n)?;
            for s in &part {
                sim.apply_updates(s);
            }
            out.extend(part);
        }
        Ok(out)
    }

    /// Canonical loop of hole 0 of `control` around hole 0 of `target`.
    pub fn plan_braid(&self, control: usize, target: usize) -> Result<(BraidPath, Vec<DeformationStep>), DeformError> {
        let path = canonical_loop(self.hole(control, 0)?, self.hole(target, 0)?, self.clearance);
        let steps = self.plan_path(control, 0, &path)?;
        Ok((path, steps))
    }

    fn apply_updates(&mut self, step: &DeformationStep) {
        for u in &step.updates {
            let old = self.defects[u.defect].holes[u.hole].cells.clone();
            for p in &old {
                self.lattice.set_active(*p, true);
            }
            self.defects[u.defect].holes[u.hole] = u.after.clone();
            for dq in &self.defects {
                for p in dq.all_cells() {
                    self.lattice.set_active(p, false);
                }
            }
        }
    }

    /// Toggles, parallelism check, rotations, weight check, geometry update.
    pub fn execute(&mut self, step: &DeformationStep) -> Result<(), DeformError> {
        for t in &step.toggles {
            self.tableau.apply_toggle(t)?;
        }
        if !check_parallel(&self.tableau, &step.rotations) {
            return Err(DeformError::InvalidStep(step.label.clone(), "rotations fail the parallel conditions".into()));
        }
        for q in &step.rotations {
            self.tableau.apply_rotation(q)?;
        }
        self.tableau.assert_weight_bound(4)?;
        self.apply_updates(step);
        for (i, dq) in self.defects.iter_mut().enumerate() {
            if let Some(l) = self.tableau.logical(&Self::tag(i)) {
                dq.logical_x = l.x.clone();
                dq.logical_z = l.z.clone();
            }
        }
        Ok(())
    }

    pub fn run(&mut self, steps: &[DeformationStep]) -> Result<(), DeformError> {
        steps.iter().try_for_each(|s| self.execute(s))
    }

    pub fn enlarge(&mut self, di: usize, hi: usize, d: usize) -> Result<usize, DeformError> {
        let steps = self.plan_enlarge(di, hi, d)?;
        self.run(&steps)?;
        self.defects[di].d = d;
        Ok(steps.len())
    }

    pub fn move_hole(&mut self, di: usize, hi: usize, dir: Direction, units: usize) -> Result<usize, DeformError> {
        let steps = self.plan_move(di, hi, dir, units)?;
        self.run(&steps)?;
        Ok(steps.len())
    }

    pub fn braid(&mut self, control: usize, target: usize) -> Result<BraidPath, DeformError> {
        let (path, steps) = self.plan_braid(control, target)?;
        self.run(&steps)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_symmetry() {
        for n in 0..5 {
            assert_eq!(smoothstep(n, 0.0), 0.0);
            assert!((smoothstep(n, 1.0) - 1.0).abs() < 1e-12);
            assert!((smoothstep(n, 0.3) + smoothstep(n, 0.7) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pre_move_terms_is_a_tree() {
        let lat = Lattice::build(10).unwrap();
        let cells: BTreeSet<Pos> = (0..3).flat_map(|i| (0..4).map(move |j| Pos::new(6 + 2 * i, 5 + 2 * j))).collect();
        for d in Direction::ALL {
            assert_eq!(pre_move_terms(&lat, &cells, d).len(), cells.len() - 1);
        }
    }

    #[test]
    fn closed_loop_winding() {
        let h = Hole::single(Pos::new(10, 5));
        let t = Hole::single(Pos::new(11, 14));
        let p = canonical_loop(&h, &t, 3);
        assert!(p.is_closed());
        assert_eq!(p.winding_number((10.0, 5.0), (11.25, 14.25)).abs(), 1);
        assert_eq!(p.winding_number((10.0, 5.0), (11.25, 40.25)), 0);
    }
}
