//! Periodic time scales and their discretization meshes.
//!
//! A time scale here is a T-periodic closed subset of the real line given by
//! a canonical cell decomposition of one period: closed intervals and
//! isolated points inside `[0, T)`. The forward jump `sigma`, graininess and
//! the dense/scattered classification of every mesh node are derived from the
//! cell list, never from floating-point adjacency of samples.

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeScaleError {
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("time scale needs at least one cell")]
    EmptyCells,
    #[error("cell [{lo}, {hi}] is invalid for period {period} (need 0 <= lo < hi <= period)")]
    BadInterval { lo: f64, hi: f64, period: f64 },
    #[error("point cell {t} is outside [0, {period})")]
    BadPoint { t: f64, period: f64 },
    #[error("0 must belong to the time scale; first cell starts at {start}")]
    ZeroNotContained { start: f64 },
    #[error("t = {t} is not in the time scale (nearest cell boundary at {nearest})")]
    NotInTimeScale { t: f64, nearest: f64 },
    #[error("delay {r} does not map the mesh into the time scale (node {node} would require t = {target}); the delay must be commensurable with the period")]
    DelayIncommensurable { r: f64, node: f64, target: f64 },
    #[error("mesh resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("grid functions live on different meshes")]
    MeshMismatch,
    #[error("integration bounds must satisfy from <= to, got {from} > {to}")]
    BadBounds { from: f64, to: f64 },
}

/// One cell of the canonical decomposition of `[0, T) ∩ 𝕋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    /// Closed interval `[lo, hi]` with `lo < hi`; `hi == T` means the cell
    /// continues into the next period copy.
    Interval { lo: f64, hi: f64 },
    /// Isolated point.
    Point(f64),
}

impl Cell {
    pub fn start(&self) -> f64 {
        match *self {
            Cell::Interval { lo, .. } => lo,
            Cell::Point(t) => t,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            Cell::Interval { hi, .. } => hi,
            Cell::Point(t) => t,
        }
    }
}

/// T-periodic time scale with a finite cell list per period.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    period: f64,
    cells: Vec<Cell>,
}

impl TimeScale {
    /// Builds a normalized time scale: cells are sorted, touching or
    /// overlapping cells are merged, and `0 ∈ 𝕋` is enforced.
    pub fn new(period: f64, cells: Vec<Cell>) -> Result<Self, TimeScaleError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(TimeScaleError::BadPeriod(period));
        }
        if cells.is_empty() {
            return Err(TimeScaleError::EmptyCells);
        }
        let tol = 1e-9 * period;
        let mut cells = cells;
        for c in &mut cells {
            match c {
                Cell::Interval { lo, hi } => {
                    if lo.abs() <= tol {
                        *lo = 0.0;
                    }
                    if (*hi - period).abs() <= tol {
                        *hi = period;
                    }
                    if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && *lo < *hi && *hi <= period)
                    {
                        return Err(TimeScaleError::BadInterval { lo: *lo, hi: *hi, period });
                    }
                }
                Cell::Point(t) => {
                    if t.abs() <= tol {
                        *t = 0.0;
                    }
                    if !(t.is_finite() && *t >= 0.0 && *t < period) {
                        return Err(TimeScaleError::BadPoint { t: *t, period });
                    }
                }
            }
        }
        cells.sort_by(|a, b| a.start().total_cmp(&b.start()));
        let mut merged: Vec<Cell> = Vec::with_capacity(cells.len());
        for c in cells {
            match merged.last_mut() {
                None => merged.push(c),
                Some(last) => {
                    if c.start() <= last.end() {
                        // touching or overlapping: merge into one cell
                        let lo = last.start();
                        let hi = last.end().max(c.end());
                        if hi > lo {
                            *last = Cell::Interval { lo, hi };
                        }
                        // equal points collapse silently
                    } else {
                        merged.push(c);
                    }
                }
            }
        }
        if merged[0].start() != 0.0 {
            return Err(TimeScaleError::ZeroNotContained { start: merged[0].start() });
        }
        Ok(TimeScale { period, cells: merged })
    }

    /// The continuous time scale: a single interval covering the period.
    pub fn real_line(period: f64) -> Result<Self, TimeScaleError> {
        TimeScale::new(period, vec![Cell::Interval { lo: 0.0, hi: period }])
    }

    /// Purely discrete time scale from isolated points in `[0, period)`.
    pub fn from_points(period: f64, points: &[f64]) -> Result<Self, TimeScaleError> {
        TimeScale::new(period, points.iter().map(|&t| Cell::Point(t)).collect())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Absolute tolerance used when matching user-supplied times to cells.
    pub fn membership_tol(&self) -> f64 {
        1e-9 * self.period
    }

    /// `true` when the period contains no interval cells.
    pub fn is_discrete(&self) -> bool {
        self.cells.iter().all(|c| matches!(c, Cell::Point(_)))
    }

    /// Reduces `t` into `[0, period)`.
    pub fn reduce(&self, t: f64) -> f64 {
        let r = t.rem_euclid(self.period);
        if r >= self.period {
            0.0
        } else {
            r
        }
    }

    fn locate(&self, t_reduced: f64) -> Result<usize, TimeScaleError> {
        let tol = self.membership_tol();
        let mut nearest = f64::INFINITY;
        for (i, c) in self.cells.iter().enumerate() {
            let (lo, hi) = (c.start(), c.end());
            if t_reduced >= lo - tol && t_reduced <= hi + tol {
                return Ok(i);
            }
            for b in [lo, hi] {
                if (b - t_reduced).abs() < (nearest - t_reduced).abs() {
                    nearest = b;
                }
            }
        }
        Err(TimeScaleError::NotInTimeScale { t: t_reduced, nearest })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(self.reduce(t)).is_ok()
    }

    /// Forward jump operator `σ(t) = inf { s ∈ 𝕋 : s > t }`, extended
    /// T-periodically past the last cell of the period.
    pub fn sigma(&self, t: f64) -> Result<f64, TimeScaleError> {
        let tr = self.reduce(t);
        let idx = self.locate(tr)?;
        let tol = self.membership_tol();
        let cell = &self.cells[idx];
        if let Cell::Interval { lo: _, hi } = *cell {
            if hi == self.period || tr < hi - tol {
                // right-dense: interior of an interval, or an interval that
                // continues into the next period copy
                return Ok(t);
            }
        }
        // right-scattered: jump to the start of the next cell
        let next = if idx + 1 < self.cells.len() {
            self.cells[idx + 1].start()
        } else {
            self.period + self.cells[0].start()
        };
        Ok(t + (next - tr))
    }

    /// Graininess `μ(t) = σ(t) − t`.
    pub fn graininess(&self, t: f64) -> Result<f64, TimeScaleError> {
        Ok(self.sigma(t)? - t)
    }
}

/// Discretization mesh of one period of a time scale.
///
/// Nodes contain every isolated point and every interval endpoint; interval
/// interiors are subdivided uniformly with spacing at most the requested
/// resolution. Segment `i` joins node `i` to node `i+1` (the last segment
/// wraps to node 0 shifted by one period) and is either dense (inside an
/// interval cell) or a gap (graininess jump).
#[derive(Debug)]
pub struct Mesh {
    ts: TimeScale,
    nodes: Vec<f64>,
    seg_len: Vec<f64>,
    seg_dense: Vec<bool>,
    dt_max: f64,
}

impl Mesh {
    /// Default resolution: period / 256.
    pub fn default_dt(ts: &TimeScale) -> f64 {
        ts.period() / 256.0
    }

    pub fn build(ts: &TimeScale, dt_max: f64) -> Result<Arc<Mesh>, TimeScaleError> {
        if !(dt_max.is_finite() && dt_max > 0.0) {
            return Err(TimeScaleError::BadResolution(dt_max));
        }
        let period = ts.period();
        let mut nodes = Vec::new();
        // last flag: node closes its cell (followed by a gap)
        let mut closes_cell = Vec::new();
        for cell in ts.cells() {
            match *cell {
                Cell::Point(t) => {
                    nodes.push(t);
                    closes_cell.push(true);
                }
                Cell::Interval { lo, hi } => {
                    let n = ((hi - lo) / dt_max).ceil().max(1.0) as usize;
                    let step = (hi - lo) / n as f64;
                    let wraps = hi == period;
                    let top = if wraps { n } else { n + 1 };
                    for k in 0..top {
                        let t = if k == n { hi } else { lo + k as f64 * step };
                        nodes.push(t);
                        closes_cell.push(false);
                    }
                    if !wraps {
                        *closes_cell.last_mut().unwrap() = true;
                    }
                }
            }
        }
        let k = nodes.len();
        let mut seg_len = Vec::with_capacity(k);
        let mut seg_dense = Vec::with_capacity(k);
        for i in 0..k {
            let next = if i + 1 < k { nodes[i + 1] } else { period + nodes[0] };
            seg_len.push(next - nodes[i]);
            seg_dense.push(!closes_cell[i]);
        }
        Ok(Arc::new(Mesh { ts: ts.clone(), nodes, seg_len, seg_dense, dt_max }))
    }

    pub fn timescale(&self) -> &TimeScale {
        &self.ts
    }

    pub fn period(&self) -> f64 {
        self.ts.period()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    /// Length of segment `i` (`node[i+1] − node[i]`, wrapping periodically).
    pub fn segment_len(&self, i: usize) -> f64 {
        self.seg_len[i]
    }

    /// `true` when segment `i` lies inside an interval cell.
    pub fn segment_dense(&self, i: usize) -> bool {
        self.seg_dense[i]
    }

    /// `true` when node `i` is right-scattered (followed by a gap).
    pub fn is_right_scattered(&self, i: usize) -> bool {
        !self.seg_dense[i]
    }

    /// Locates a reduced time within the mesh: the index of the segment
    /// containing it and the offset from the segment's left node.
    pub(crate) fn locate(&self, t_reduced: f64) -> (usize, f64) {
        let i = self.nodes.partition_point(|&n| n <= t_reduced);
        if i == 0 {
            // t below the first node can only be a tolerance artifact
            (0, 0.0)
        } else {
            (i - 1, t_reduced - self.nodes[i - 1])
        }
    }

    pub(crate) fn same_mesh(a: &Arc<Mesh>, b: &Arc<Mesh>) -> bool {
        Arc::ptr_eq(a, b) || (a.ts == b.ts && a.nodes == b.nodes)
    }
}
