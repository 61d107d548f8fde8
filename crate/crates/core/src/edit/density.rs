use super::EditError;
use crate::geometry::{aabb_of, centroid, kernel, polygon_intersection_area, scale_about, translate, Vertex2D};
use crate::program::{BlockProgram, FootprintPolygon};
use crate::scoring::coverage;

/// Coverage within this distance of the target counts as reached.
const TOLERANCE: f64 = 1e-6;
/// Smallest linear factor a footprint is shrunk by.
const MIN_FACTOR: f64 = 0.1;
/// Slack, in m², on pairwise overlap before an edit counts as a new collision.
const OVERLAP_SLACK: f64 = 1e-12;
const GROW_PASSES: usize = 4;
const BISECTIONS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOutcome {
    pub program: BlockProgram,
    pub warnings: Vec<String>,
    pub reached: f64,
}

struct State<'a> {
    block: &'a BlockProgram,
    original: Vec<FootprintPolygon>,
    current: Vec<FootprintPolygon>,
    /// Pairwise true-footprint overlap before the edit.
    before: Vec<Vec<f64>>,
    /// Scaling centre per element; `None` keeps the element fixed.
    anchor: Vec<Option<Vertex2D>>,
    factor: Vec<f64>,
    offset: Vec<Vertex2D>,
}

impl<'a> State<'a> {
    fn new(block: &'a BlockProgram) -> Self {
        let original: Vec<_> = block.elements.iter().map(|e| e.polygon.clone()).collect();
        let n = original.len();
        let mut before = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let a = polygon_intersection_area(original[i].vertices(), original[j].vertices());
                before[i][j] = a;
                before[j][i] = a;
            }
        }
        // Scaling about a kernel point keeps a shrunk footprint inside the
        // original, so shrinking can never create overlap.
        let anchor = block
            .elements
            .iter()
            .map(|e| e.is_building().then(|| kernel(e.polygon.vertices()).map(|k| centroid(&k))).flatten())
            .collect();
        Self {
            block,
            current: original.clone(),
            original,
            before,
            anchor,
            factor: vec![1.0; n],
            offset: vec![Vertex2D::new(0.0, 0.0); n],
        }
    }

    fn area(&self) -> f64 {
        self.block.region.area()
    }

    fn built(&self, i: usize) -> f64 {
        aabb_of(self.original[i].vertices()).area()
    }

    fn coverage(&self) -> f64 {
        let mut p = self.block.clone();
        for (e, poly) in p.elements.iter_mut().zip(&self.current) {
            e.polygon = poly.clone();
        }
        coverage(&p).unwrap_or(0.0)
    }

    fn candidate(&self, i: usize, k: f64, offset: Vertex2D) -> Option<FootprintPolygon> {
        let anchor = self.anchor[i]?;
        let scaled = scale_about(self.original[i].vertices(), anchor, k);
        FootprintPolygon::new(translate(&scaled, offset)).ok()
    }

    fn fits(&self, i: usize, poly: &FootprintPolygon) -> bool {
        if !poly.vertices().iter().all(|v| self.block.region.contains(*v)) {
            return false;
        }
        (0..self.current.len()).all(|j| {
            j == i || polygon_intersection_area(poly.vertices(), self.current[j].vertices()) <= self.before[i][j] + OVERLAP_SLACK
        })
    }

    fn set(&mut self, i: usize, k: f64, offset: Vertex2D, poly: FootprintPolygon) {
        self.current[i] = poly;
        self.factor[i] = k;
        self.offset[i] = offset;
    }

    fn revert(&mut self, i: usize) {
        self.current[i] = self.original[i].clone();
        self.factor[i] = 1.0;
        self.offset[i] = Vertex2D::new(0.0, 0.0);
    }

    /// Largest feasible factor in `[lo, hi]` at `offset`, if `lo` itself fits.
    fn search(&self, i: usize, lo: f64, hi: f64, offset: Vertex2D) -> Option<(f64, FootprintPolygon)> {
        let ok = |k: f64| self.candidate(i, k, offset).filter(|p| self.fits(i, p));
        if let Some(p) = ok(hi) {
            return Some((hi, p));
        }
        let mut best = (lo, ok(lo)?);
        let (mut a, mut b) = (lo, hi);
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (a + b);
            match ok(mid) {
                Some(p) => {
                    best = (mid, p);
                    a = mid;
                }
                None => b = mid,
            }
        }
        Some(best)
    }

    /// Reverts elements until no pair overlaps more than it did before.
    fn repair(&mut self) -> usize {
        let n = self.current.len();
        let mut reverted = 0;
        loop {
            let mut worst: Option<(f64, usize, usize)> = None;
            for i in 0..n {
                for j in i + 1..n {
                    let a = polygon_intersection_area(self.current[i].vertices(), self.current[j].vertices());
                    let excess = a - self.before[i][j];
                    if excess > OVERLAP_SLACK && worst.is_none_or(|w| excess > w.0) {
                        worst = Some((excess, i, j));
                    }
                }
            }
            let Some((_, i, j)) = worst else { return reverted };
            let pick = if self.current[i] != self.original[i] { i } else { j };
            self.revert(pick);
            reverted += 1;
        }
    }

    fn by_id(&self, ids: impl Iterator<Item = usize>) -> Vec<usize> {
        let mut v: Vec<usize> = ids.collect();
        v.sort_by(|a, b| self.block.elements[*a].id.cmp(&self.block.elements[*b].id));
        v
    }

    fn shrink(&mut self, target: f64) -> Vec<String> {
        let mut warnings = Vec::new();
        let scalable = self.by_id((0..self.current.len()).filter(|i| self.anchor[*i].is_some()));
        let fixed: f64 = self
            .block
            .elements
            .iter()
            .enumerate()
            .filter(|(i, e)| e.is_building() && self.anchor[*i].is_none())
            .map(|(i, _)| self.built(i))
            .sum();
        let s: f64 = scalable.iter().map(|i| self.built(*i)).sum();
        if s <= 0.0 {
            return warnings;
        }
        let k2 = (target * self.area() - fixed) / s;
        if k2 < MIN_FACTOR * MIN_FACTOR {
            warnings.push(format!("footprints shrink at most to {MIN_FACTOR} of their size"));
        }
        let k = k2.max(MIN_FACTOR * MIN_FACTOR).sqrt();
        let zero = Vertex2D::new(0.0, 0.0);
        for i in scalable {
            if let Some(p) = self.candidate(i, k, zero) {
                self.set(i, k, zero, p);
            }
        }
        warnings
    }

    fn grow(&mut self, target: f64, allow_move: bool) {
        let order = self.by_id((0..self.current.len()).filter(|i| self.anchor[*i].is_some()));
        for pass in 0..GROW_PASSES {
            let deficit = target * self.area() - self.coverage() * self.area();
            if deficit <= TOLERANCE * self.area() {
                return;
            }
            let mut remaining = deficit;
            let scaled: f64 = order.iter().map(|j| self.built(*j) * self.factor[*j].powi(2)).sum();
            for &i in &order {
                if remaining <= 0.0 {
                    break;
                }
                let a = self.built(i);
                if a <= 0.0 {
                    continue;
                }
                let k0 = self.factor[i];
                let want = if pass == 0 {
                    (k0 * k0 * (1.0 + deficit / scaled)).sqrt()
                } else {
                    (k0 * k0 + remaining / a).sqrt()
                };
                let mut best = self.search(i, k0, want, self.offset[i]).map(|(k, p)| (k, self.offset[i], p));
                if allow_move && best.as_ref().is_none_or(|b| b.0 < want) {
                    for step in [0.5, 1.0, 2.0, 4.0] {
                        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
                            let off = self.offset[i].add(Vertex2D::new(dx as f64 * step, dy as f64 * step));
                            if let Some((k, p)) = self.search(i, k0, want, off) {
                                if best.as_ref().is_none_or(|b| k > b.0 + 1e-12) {
                                    best = Some((k, off, p));
                                }
                            }
                        }
                    }
                }
                if let Some((k, off, p)) = best {
                    if k > k0 || off != self.offset[i] {
                        remaining -= a * (k * k - k0 * k0);
                        self.set(i, k, off, p);
                    }
                }
            }
        }
    }
}

/// Rescales building footprints about interior centres to move AABB coverage
/// toward `target` without raising any pairwise overlap.
pub(crate) fn scale_density(block: &BlockProgram, target: f64, allow_move: bool) -> Result<DensityOutcome, EditError> {
    let start = coverage(block).map_err(|e| EditError::InvalidArgument(e.to_string()))?;
    if (start - target).abs() <= TOLERANCE {
        return Ok(DensityOutcome { program: block.clone(), warnings: Vec::new(), reached: start });
    }
    let mut state = State::new(block);
    let mut warnings = if target < start { state.shrink(target) } else { Vec::new() };
    if target > start {
        state.grow(target, allow_move);
    }
    let reverted = state.repair();
    if reverted > 0 {
        warnings.push(format!("{reverted} footprint(s) kept at their original size to avoid overlap"));
    }
    let skipped = block.elements.iter().zip(&state.anchor).filter(|(e, a)| e.is_building() && a.is_none()).count();
    if skipped > 0 {
        warnings.push(format!("{skipped} footprint(s) without an interior centre were left unchanged"));
    }
    let mut program = block.clone();
    for (e, p) in program.elements.iter_mut().zip(&state.current) {
        e.polygon = p.clone();
    }
    let reached = coverage(&program).map_err(|e| EditError::InvalidArgument(e.to_string()))?;
    if (reached - target).abs() <= TOLERANCE {
        return Ok(DensityOutcome { program, warnings, reached });
    }
    if (reached - target).abs() < (start - target).abs() - 1e-9 {
        warnings.push(format!("coverage reached {reached:.4} of the requested {target:.4}"));
        return Ok(DensityOutcome { program, warnings, reached });
    }
    Err(EditError::InfeasibleDensity { target, reached: start })
}
