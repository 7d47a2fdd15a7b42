//! T-periodic grid functions sampled on a time-scale mesh, with exact
//! Δ-calculus for the piecewise-linear representative.

use std::sync::Arc;

use crate::timescale::{Mesh, TimeScale, TimeScaleError};

/// How node values extend to the interior of dense segments.
///
/// Ordinary samples are piecewise linear. Δ-derivatives are piecewise
/// constant from the left, which makes the cumulative integral invert the
/// derivative exactly (telescoping).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpKind {
    PiecewiseLinear,
    LeftConstant,
}

/// T-periodic real function given by one value per mesh node.
#[derive(Debug, Clone)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    kind: InterpKind,
}

impl GridFunction {
    pub fn from_values(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self, TimeScaleError> {
        if values.len() != mesh.len() {
            return Err(TimeScaleError::MeshMismatch);
        }
        Ok(GridFunction { mesh, values, kind: InterpKind::PiecewiseLinear })
    }

    pub fn from_fn(mesh: &Arc<Mesh>, f: impl Fn(f64) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&t| f(t)).collect();
        GridFunction { mesh: Arc::clone(mesh), values, kind: InterpKind::PiecewiseLinear }
    }

    pub fn constant(mesh: &Arc<Mesh>, c: f64) -> Self {
        GridFunction {
            mesh: Arc::clone(mesh),
            values: vec![c; mesh.len()],
            kind: InterpKind::PiecewiseLinear,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn timescale(&self) -> &TimeScale {
        self.mesh.timescale()
    }

    pub fn period(&self) -> f64 {
        self.mesh.period()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> InterpKind {
        self.kind
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Same node values, reinterpreted under a different interpolation rule.
    pub fn with_kind(&self, kind: InterpKind) -> GridFunction {
        GridFunction { mesh: Arc::clone(&self.mesh), values: self.values.clone(), kind }
    }

    fn wrap_value(&self, i: usize) -> f64 {
        self.values[(i + 1) % self.values.len()]
    }

    /// Evaluates the periodic extension at `t ∈ 𝕋`.
    pub fn eval(&self, t: f64) -> Result<f64, TimeScaleError> {
        let ts = self.timescale();
        let tr = ts.reduce(t);
        let tol = ts.membership_tol();
        let (i, off) = self.mesh.locate(tr);
        let len = self.mesh.segment_len(i);
        if off.abs() <= tol {
            return Ok(self.values[i]);
        }
        if (len - off).abs() <= tol {
            return Ok(self.wrap_value(i));
        }
        if self.mesh.segment_dense(i) {
            Ok(match self.kind {
                InterpKind::PiecewiseLinear => {
                    let s = off / len;
                    self.values[i] * (1.0 - s) + self.wrap_value(i) * s
                }
                InterpKind::LeftConstant => self.values[i],
            })
        } else {
            Err(TimeScaleError::NotInTimeScale { t: tr, nearest: self.mesh.node(i) })
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: self.kind,
        }
    }

    /// Pointwise combination at nodes. Result is resampled as piecewise
    /// linear unless both operands are left-constant.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert!(Mesh::same_mesh(&self.mesh, &other.mesh), "grid functions on different meshes");
        let kind = if self.kind == InterpKind::LeftConstant && other.kind == InterpKind::LeftConstant
        {
            InterpKind::LeftConstant
        } else {
            InterpKind::PiecewiseLinear
        };
        GridFunction {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            kind,
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn shift_values(&self, c: f64) -> GridFunction {
        self.map(|v| v + c)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// `self + theta * (other - self)`, the damped iteration update.
    pub fn blend(&self, other: &GridFunction, theta: f64) -> GridFunction {
        self.zip_with(other, |a, b| a + theta * (b - a))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// `sup |self - other|` over nodes, without allocating.
    pub fn sup_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Δ-derivative: exact difference quotient `(x(σ(t)) − x(t)) / μ(t)` at
    /// right-scattered nodes, forward difference within interval cells.
    pub fn delta_derivative(&self) -> GridFunction {
        let k = self.values.len();
        let values = (0..k)
            .map(|i| (self.wrap_value(i) - self.values[i]) / self.mesh.segment_len(i))
            .collect();
        GridFunction { mesh: Arc::clone(&self.mesh), values, kind: InterpKind::LeftConstant }
    }

    /// Exact integral of the representative over segment `i`.
    pub fn segment_integral(&self, i: usize) -> f64 {
        let len = self.mesh.segment_len(i);
        if self.mesh.segment_dense(i) && self.kind == InterpKind::PiecewiseLinear {
            0.5 * (self.values[i] + self.wrap_value(i)) * len
        } else {
            self.values[i] * len
        }
    }

    /// Δ-integral over one full period.
    pub fn integral_period(&self) -> f64 {
        (0..self.values.len()).map(|i| self.segment_integral(i)).sum()
    }

    /// Mean value `(1/T) ∫₀ᵀ f Δs`.
    pub fn mean(&self) -> f64 {
        self.integral_period() / self.period()
    }

    /// Cumulative Δ-integral `t ↦ ∫₀ᵗ f Δs` sampled at the nodes.
    pub fn cumulative(&self) -> GridFunction {
        let k = self.values.len();
        let mut values = Vec::with_capacity(k);
        let mut acc = 0.0;
        for i in 0..k {
            values.push(acc);
            acc += self.segment_integral(i);
        }
        GridFunction { mesh: Arc::clone(&self.mesh), values, kind: InterpKind::PiecewiseLinear }
    }

    /// Cumulative integral up to a reduced time `t ∈ [0, period)`.
    fn prefix_at(&self, tr: f64) -> Result<f64, TimeScaleError> {
        let ts = self.timescale();
        let tol = ts.membership_tol();
        let (i, off) = self.mesh.locate(tr);
        let mut acc = 0.0;
        for j in 0..i {
            acc += self.segment_integral(j);
        }
        if off.abs() <= tol {
            return Ok(acc);
        }
        let len = self.mesh.segment_len(i);
        if (len - off).abs() <= tol {
            return Ok(acc + self.segment_integral(i));
        }
        if !self.mesh.segment_dense(i) {
            return Err(TimeScaleError::NotInTimeScale { t: tr, nearest: self.mesh.node(i) });
        }
        match self.kind {
            InterpKind::PiecewiseLinear => {
                let s = off / len;
                let v_at = self.values[i] * (1.0 - s) + self.wrap_value(i) * s;
                Ok(acc + 0.5 * (self.values[i] + v_at) * off)
            }
            InterpKind::LeftConstant => Ok(acc + self.values[i] * off),
        }
    }

    /// Δ-integral over `[from, to]`; both endpoints must lie in the time
    /// scale after periodic reduction.
    pub fn delta_integral(&self, from: f64, to: f64) -> Result<f64, TimeScaleError> {
        if to < from {
            return Err(TimeScaleError::BadBounds { from, to });
        }
        let period = self.period();
        let full = self.integral_period();
        let antideriv = |t: f64| -> Result<f64, TimeScaleError> {
            let k = (t / period).floor();
            let tr = self.timescale().reduce(t);
            Ok(k * full + self.prefix_at(tr)?)
        };
        Ok(antideriv(to)? - antideriv(from)?)
    }

    /// `t ↦ x(t − r)` with periodic wraparound; requires the reduced delay to
    /// map the node set into itself (delay commensurable with the period).
    pub fn shift(&self, r: f64) -> Result<GridFunction, TimeScaleError> {
        let perm = shift_permutation(&self.mesh, r)?;
        Ok(self.apply_shift(&perm))
    }

    pub(crate) fn apply_shift(&self, perm: &[usize]) -> GridFunction {
        GridFunction {
            mesh: Arc::clone(&self.mesh),
            values: perm.iter().map(|&j| self.values[j]).collect(),
            kind: self.kind,
        }
    }
}

/// Node permutation realizing `t ↦ t − r` on the mesh, or an error when the
/// delay is incompatible with the time scale.
pub fn shift_permutation(mesh: &Arc<Mesh>, r: f64) -> Result<Vec<usize>, TimeScaleError> {
    let ts = mesh.timescale();
    let period = ts.period();
    let tol = ts.membership_tol();
    let r_red = r.rem_euclid(period);
    if r_red.abs() <= tol || (period - r_red) <= tol {
        return Ok((0..mesh.len()).collect());
    }
    let nodes = mesh.nodes();
    let mut perm = Vec::with_capacity(nodes.len());
    for &t in nodes {
        let target = ts.reduce(t - r_red);
        let i = nodes.partition_point(|&n| n < target);
        let mut best = None;
        for cand in [i.wrapping_sub(1), i, i + 1] {
            if cand < nodes.len() && (nodes[cand] - target).abs() <= tol {
                best = Some(cand);
                break;
            }
        }
        match best {
            Some(j) => perm.push(j),
            None => {
                return Err(TimeScaleError::DelayIncommensurable { r, node: t, target });
            }
        }
    }
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timescale::{Cell, TimeScale};
    use std::f64::consts::PI;

    fn example51_mesh(dt: f64) -> Arc<Mesh> {
        let ts =
            TimeScale::new(3.0, vec![Cell::Interval { lo: 0.0, hi: 1.0 }, Cell::Point(2.0)])
                .unwrap();
        Mesh::build(&ts, dt).unwrap()
    }

    /// A 3-periodic reference function on a hybrid scale: t on [0,1], 2 at t=2.
    fn example51_x(mesh: &Arc<Mesh>) -> GridFunction {
        GridFunction::from_fn(mesh, |t| if t <= 1.0 { t } else { 2.0 })
    }

    #[test]
    fn derivative_on_hybrid_scale() {
        let mesh = example51_mesh(0.25);
        let x = example51_x(&mesh);
        let d = x.delta_derivative();
        let k = mesh.len();
        // x^Δ(2) = (x(3) − x(2)) / 1 = (0 − 2) / 1 = −2
        assert_eq!(d.value(k - 1), -2.0);
        // x^Δ(1) = (x(2) − x(1)) / 1 = 1
        assert_eq!(d.value(k - 2), 1.0);
        // interior of [0,1]: slope 1
        assert!((d.value(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let mesh = example51_mesh(0.2);
        let c = GridFunction::constant(&mesh, 4.2);
        assert_eq!(c.delta_derivative().norm_inf(), 0.0);
    }

    #[test]
    fn derivative_of_linear_on_real_line() {
        let ts = TimeScale::real_line(2.0).unwrap();
        let mesh = Mesh::build(&ts, 0.01).unwrap();
        let x = GridFunction::from_fn(&mesh, |t| t);
        let d = x.delta_derivative();
        // all interior nodes; the wrap segment sees the periodic jump
        for i in 0..mesh.len() - 1 {
            assert!((d.value(i) - 1.0).abs() < 1e-9, "node {i}: {}", d.value(i));
        }
    }

    #[test]
    fn example51_integral_is_exact() {
        for dt in [0.5, 0.125, 0.004] {
            let mesh = example51_mesh(dt);
            let x = example51_x(&mesh);
            let d = x.delta_derivative();
            let integrand = x.mul(&d);
            let val = integrand.delta_integral(0.0, 3.0).unwrap();
            assert!((val + 2.5).abs() < 1e-12, "dt={dt}: {val}");
        }
    }

    #[test]
    fn telescoping_is_exact() {
        let mesh = example51_mesh(0.31);
        let x = GridFunction::from_fn(&mesh, |t| (1.3 * t).sin() + 0.7 * t * t);
        let d = x.delta_derivative();
        let val = d.integral_period();
        assert!(val.abs() < 1e-13 * (1.0 + x.norm_inf()), "{val}");
    }

    #[test]
    fn cumulative_reconstructs_from_derivative() {
        let mesh = example51_mesh(0.17);
        let x = GridFunction::from_fn(&mesh, |t| (2.0 * t).cos() + t);
        let d = x.delta_derivative();
        let h = d.cumulative();
        for i in 0..mesh.len() {
            let rec = h.value(i) + x.value(0);
            assert!((rec - x.value(i)).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn delta_integral_rejects_gap_endpoints() {
        let mesh = example51_mesh(0.25);
        let x = example51_x(&mesh);
        assert!(x.delta_integral(0.0, 1.5).is_err());
        assert!(x.delta_integral(1.2, 2.0).is_err());
    }

    #[test]
    fn delta_integral_additive_over_periods() {
        let mesh = example51_mesh(0.25);
        let x = example51_x(&mesh);
        let one = x.delta_integral(0.0, 3.0).unwrap();
        let two = x.delta_integral(0.0, 6.0).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-12);
    }

    #[test]
    fn shift_by_zero_and_period_is_identity() {
        let mesh = example51_mesh(0.2);
        let x = example51_x(&mesh);
        for r in [0.0, 3.0, 6.0] {
            let s = x.shift(r).unwrap();
            assert_eq!(s.values(), x.values());
        }
    }

    #[test]
    fn shift_quarter_period_on_real_line() {
        let t_period = 2.0;
        let ts = TimeScale::real_line(t_period).unwrap();
        let mesh = Mesh::build(&ts, t_period / 64.0).unwrap();
        let x = GridFunction::from_fn(&mesh, |t| (2.0 * PI * t / t_period).sin());
        let s = x.shift(t_period / 4.0).unwrap();
        for (i, &t) in mesh.nodes().iter().enumerate() {
            let expect = (2.0 * PI * (t - t_period / 4.0) / t_period).sin();
            assert!((s.value(i) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_incommensurable_delay_rejected() {
        let mesh = example51_mesh(0.25);
        let x = example51_x(&mesh);
        let err = x.shift(0.1).unwrap_err();
        assert!(matches!(err, TimeScaleError::DelayIncommensurable { .. }));
    }

    #[test]
    fn eval_interpolates_in_cells() {
        let mesh = example51_mesh(0.5);
        let x = example51_x(&mesh);
        assert!((x.eval(0.25).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(x.eval(2.0).unwrap(), 2.0);
        assert_eq!(x.eval(5.0).unwrap(), 2.0); // periodic extension
        assert!(x.eval(1.5).unwrap_err().to_string().contains("not in the time scale"));
    }
}
