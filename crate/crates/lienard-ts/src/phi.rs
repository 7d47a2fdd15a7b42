//! Singular homeomorphisms φ: (−a, a) → ℝ and the nonlinear mean projector
//! Q_φ used by the homotopy operator.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::grid::GridFunction;

/// Built-in singular homeomorphism families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiKind {
    /// φ(v) = c v / sqrt(c² − v²), the relativistic momentum map on (−c, c).
    Relativistic { c: f64 },
    /// Odd extension of v³ / (a³ − v³) on (−a, a).
    CubicBounded { a: f64 },
    /// φ(v) = tan(π v / (2a)) on (−a, a).
    ArctanScaled { a: f64 },
}

/// A singular homeomorphism with overflow-safe inverse and clamp
/// diagnostics. Arguments that stray within `clamp_margin` of the
/// asymptotes ±a are clamped and counted rather than producing ±inf.
#[derive(Debug, Clone)]
pub struct PhiHomeomorphism {
    kind: PhiKind,
    clamp_margin: f64,
    clamps: Arc<AtomicU64>,
}

/// Relativistic inverse in closed form: y ↦ c y / sqrt(c² + y²).
/// `hypot` keeps it finite for every finite y.
pub fn phi_inverse_relativistic(c: f64, y: f64) -> f64 {
    // dividing before scaling avoids overflow; the clamp keeps the range
    // strictly inside (−c, c) where huge |y| would round the ratio to ±1
    let lim = c * (1.0 - 1e-12);
    (c * (y / y.hypot(c))).clamp(-lim, lim)
}

impl PhiHomeomorphism {
    pub fn new(kind: PhiKind) -> Self {
        let a = match kind {
            PhiKind::Relativistic { c } => c,
            PhiKind::CubicBounded { a } | PhiKind::ArctanScaled { a } => a,
        };
        assert!(a.is_finite() && a > 0.0, "singularity bound must be positive");
        PhiHomeomorphism { kind, clamp_margin: 1e-12 * a, clamps: Arc::new(AtomicU64::new(0)) }
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    /// Half-width of the domain (−a, a).
    pub fn bound(&self) -> f64 {
        match self.kind {
            PhiKind::Relativistic { c } => c,
            PhiKind::CubicBounded { a } | PhiKind::ArctanScaled { a } => a,
        }
    }

    /// Number of forward evaluations that had to be clamped away from ±a.
    pub fn clamp_count(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }

    pub fn reset_clamp_count(&self) {
        self.clamps.store(0, Ordering::Relaxed);
    }

    fn clamp_arg(&self, v: f64) -> f64 {
        let lim = self.bound() - self.clamp_margin;
        if v.abs() > lim {
            self.clamps.fetch_add(1, Ordering::Relaxed);
            v.clamp(-lim, lim)
        } else {
            v
        }
    }

    /// Forward map; clamps arguments within 1e-12·a of the asymptote.
    pub fn apply(&self, v: f64) -> f64 {
        let v = self.clamp_arg(v);
        match self.kind {
            PhiKind::Relativistic { c } => c * v / (c * c - v * v).sqrt(),
            PhiKind::CubicBounded { a } => {
                let w = v.abs();
                let y = w * w * w / (a * a * a - w * w * w);
                y.copysign(v)
            }
            PhiKind::ArctanScaled { a } => (std::f64::consts::FRAC_PI_2 * v / a).tan(),
        }
    }

    /// Inverse map; total on ℝ and maps into (−a, a). For astronomically
    /// large |y| the closed forms round to exactly ±a, so the result is
    /// pulled just inside the open interval to keep the range invariant.
    pub fn invert(&self, y: f64) -> f64 {
        let lim = self.bound() - self.clamp_margin;
        self.invert_raw(y).clamp(-lim, lim)
    }

    fn invert_raw(&self, y: f64) -> f64 {
        match self.kind {
            PhiKind::Relativistic { c } => phi_inverse_relativistic(c, y),
            PhiKind::CubicBounded { a } => {
                let w = y.abs();
                (a * (w / (1.0 + w)).cbrt()).copysign(y)
            }
            PhiKind::ArctanScaled { a } => 2.0 * a / std::f64::consts::PI * y.atan(),
        }
    }

    /// Applies the inverse at every node.
    pub fn invert_grid(&self, z: &GridFunction) -> GridFunction {
        z.map(|y| self.invert(y))
    }
}

/// Result of the Q_φ projection.
#[derive(Debug, Clone, Copy)]
pub struct QPhiResult {
    /// The unique shift s with ∫ φ⁻¹(x − s) Δt = 0.
    pub shift: f64,
    /// |∫ φ⁻¹(x − shift) Δt| at the returned shift.
    pub residual: f64,
    /// Bisection iterations used.
    pub iterations: u32,
}

/// G(s) = ∫₀ᵀ φ⁻¹(x(t) − s) Δt, continuous and strictly decreasing in s.
fn g_of_shift(phi: &PhiHomeomorphism, x: &GridFunction, s: f64) -> f64 {
    x.map(|v| phi.invert(v - s)).integral_period()
}

/// Unique s ∈ [min x, max x] with ∫ φ⁻¹(x − s) Δt = 0, by bisection.
///
/// φ⁻¹ is odd and increasing, so G(min x) ≥ 0 ≥ G(max x) and the bracket
/// always holds. Bisection runs to width 1e-13·(1 + |x|∞).
pub fn q_phi(phi: &PhiHomeomorphism, x: &GridFunction) -> QPhiResult {
    let mut lo = x.min_value();
    let mut hi = x.max_value();
    let scale = 1.0 + x.norm_inf();
    if hi - lo <= f64::EPSILON * scale {
        return QPhiResult { shift: 0.5 * (lo + hi), residual: 0.0, iterations: 0 };
    }
    let mut g_lo = g_of_shift(phi, x, lo);
    let mut iterations = 0;
    // g(hi) <= 0 <= g(lo) by monotonicity of φ⁻¹; no need to evaluate g(hi).
    while hi - lo > 1e-13 * scale && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g_of_shift(phi, x, mid);
        if g_mid == 0.0 {
            lo = mid;
            hi = mid;
            g_lo = 0.0;
            break;
        }
        if (g_mid > 0.0) == (g_lo > 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let shift = if hi == lo { lo } else { 0.5 * (lo + hi) };
    let residual = if hi == lo && g_lo == 0.0 { 0.0 } else { g_of_shift(phi, x, shift).abs() };
    QPhiResult { shift, residual, iterations }
}
