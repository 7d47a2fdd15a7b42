//! The periodic Liénard problem on a time scale and the operators the
//! solver iterates: the Nemytskii map N_f, the averaging projector Q, the
//! initial-value projector P, the cumulative integrator H, and the
//! homotopy map M(λ, ·).

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::grid::{shift_permutation, GridFunction, InterpKind};
use crate::phi::{q_phi, PhiHomeomorphism};
use crate::timescale::{Mesh, TimeScaleError};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error(transparent)]
    TimeScale(#[from] TimeScaleError),
    #[error("integrator H needs a mean-zero input, got mean {mean}")]
    NonzeroMean { mean: f64 },
    #[error("derivative value {value} at node t = {t} is outside the domain (-{a}, {a})")]
    DerivativeOutOfRange { t: f64, value: f64, a: f64 },
    #[error("h or g evaluates to a non-finite value at x = {x}")]
    NonFiniteCoefficient { x: f64 },
}

/// Problem data: find T-periodic x with (φ(x^Δ))^Δ = −h(x)x^Δ − g(x(t−r)) + p.
pub struct Problem {
    mesh: Arc<Mesh>,
    phi: PhiHomeomorphism,
    h: ScalarFn,
    g: ScalarFn,
    p: GridFunction,
    delay: f64,
    p_offset: f64,
    shift_perm: Vec<usize>,
    apriori_violations: Arc<AtomicU64>,
}

/// One application of the homotopy operator, with the diagnostics the
/// solver and the tests need.
pub struct MApplied {
    pub y: GridFunction,
    pub y_delta: GridFunction,
    /// Q(N_f(x)) at the input — zero at any fixed point.
    pub qnf: f64,
    /// The recentering shift Q_φ(λ H(w)).
    pub q_phi_shift: f64,
}

impl Problem {
    /// Builds the problem; `p` is re-centered to mean zero and the
    /// subtracted constant is kept for reporting.
    pub fn new(
        mesh: Arc<Mesh>,
        phi: PhiHomeomorphism,
        h: ScalarFn,
        g: ScalarFn,
        p: GridFunction,
        delay: f64,
    ) -> Result<Self, OperatorError> {
        let shift_perm = shift_permutation(&mesh, delay)?;
        let p_offset = p.mean();
        let p = p.shift_values(-p_offset);
        Ok(Problem {
            mesh,
            phi,
            h,
            g,
            p,
            delay,
            p_offset,
            shift_perm,
            apriori_violations: Arc::new(AtomicU64::new(0)),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn phi(&self) -> &PhiHomeomorphism {
        &self.phi
    }

    pub fn h(&self) -> &ScalarFn {
        &self.h
    }

    pub fn g(&self) -> &ScalarFn {
        &self.g
    }

    pub fn forcing(&self) -> &GridFunction {
        &self.p
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Constant subtracted from the supplied forcing to make it mean-zero.
    pub fn forcing_offset(&self) -> f64 {
        self.p_offset
    }

    pub fn period(&self) -> f64 {
        self.mesh.period()
    }

    /// Times any produced derivative left the open interval (−a, a).
    /// Stays at zero for every run; counted rather than assumed.
    pub fn apriori_violations(&self) -> u64 {
        self.apriori_violations.load(Ordering::Relaxed)
    }

    pub fn eval_h(&self, x: f64) -> f64 {
        (self.h)(x)
    }

    pub fn eval_g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    /// N_f(x)(t) = −h(x(t)) x^Δ(t) − g(x(t−r)) + p(t), nodewise.
    pub fn nemytskii(&self, x: &GridFunction, xd: &GridFunction) -> GridFunction {
        let x_shifted = x.apply_shift(&self.shift_perm);
        let mut out = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            out.push(
                -(self.h)(x.value(i)) * xd.value(i) - (self.g)(x_shifted.value(i))
                    + self.p.value(i),
            );
        }
        GridFunction::from_values(Arc::clone(&self.mesh), out)
            .expect("values sized from the mesh")
    }

    /// Q(z) = (1/T) ∫₀ᵀ z Δs.
    pub fn projector_q(&self, z: &GridFunction) -> f64 {
        z.mean()
    }

    /// P(x) = x(0).
    pub fn projector_p(&self, x: &GridFunction) -> f64 {
        x.value(0)
    }

    /// H(z)(t) = ∫₀ᵗ z Δs; requires mean-zero z so the result is periodic.
    pub fn integrator_h(&self, z: &GridFunction) -> Result<GridFunction, OperatorError> {
        let mean = z.mean();
        if mean.abs() > 1e-10 * (1.0 + z.norm_inf()) {
            return Err(OperatorError::NonzeroMean { mean });
        }
        Ok(z.cumulative())
    }

    /// M(λ, x) = P(x) + Q(N_f(x)) + H(φ⁻¹[λH(w) − Q_φ(λH(w))]), w = N_f(x) − Q(N_f(x)).
    ///
    /// Returns both the new iterate and its Δ-derivative; the pair is exact
    /// in the sense that `y.delta_derivative()` reproduces `y_delta` at the
    /// nodes bit-for-bit up to the Q_φ bisection residual on the last segment.
    pub fn apply_m(&self, lambda: f64, x: &GridFunction, xd: &GridFunction) -> MApplied {
        let nf = self.nemytskii(x, xd);
        let qnf = nf.mean();
        let w = nf.shift_values(-qnf);
        // λ H(w): cumulative integral of the centered Nemytskii image.
        let arg = w.cumulative().scale(lambda).with_kind(InterpKind::LeftConstant);
        let qp = q_phi(&self.phi, &arg);
        let y_delta = arg.map(|v| self.phi.invert(v - qp.shift));
        let a = self.phi.bound();
        if y_delta.norm_inf() >= a {
            self.apriori_violations.fetch_add(1, Ordering::Relaxed);
        }
        let base = self.projector_p(x) + qnf;
        let y = y_delta.cumulative().shift_values(base);
        MApplied { y, y_delta, qnf, q_phi_shift: qp.shift }
    }

    /// Sup-norm defect of the equation at the nodes, in segment-averaged
    /// form: with z = φ(x^Δ), the residual on segment i is
    /// |(z_{i+1} − z_i) − ∫_seg N_f Δs| / μ_i, which is the forward
    /// difference quotient of z minus the segment mean of the right-hand
    /// side. On a purely discrete time scale this is the exact defect of
    /// the difference system.
    pub fn equation_residual(&self, x: &GridFunction) -> Result<f64, OperatorError> {
        self.equation_residual_pair(x, &x.delta_derivative())
    }

    pub fn equation_residual_pair(
        &self,
        x: &GridFunction,
        xd: &GridFunction,
    ) -> Result<f64, OperatorError> {
        let a = self.phi.bound();
        let mesh = &self.mesh;
        for i in 0..xd.len() {
            let v = xd.value(i);
            if !v.is_finite() || v.abs() >= a {
                return Err(OperatorError::DerivativeOutOfRange { t: mesh.node(i), value: v, a });
            }
        }
        let nf = self.nemytskii(x, xd);
        let z: Vec<f64> = xd.values().iter().map(|&v| self.phi.apply(v)).collect();
        let k = z.len();
        let mut worst = 0.0f64;
        for i in 0..k {
            let dz = z[(i + 1) % k] - z[i];
            let len = mesh.segment_len(i);
            let defect = (dz - nf.segment_integral(i)).abs() / len;
            worst = worst.max(defect);
        }
        Ok(worst)
    }
}
