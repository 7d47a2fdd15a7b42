//! Numerical certification of the sufficient conditions for multiplicity:
//! sign/monotonicity checks on strips around each α_j, window spacing, the
//! monotone-h integral lemma, and a Monte-Carlo falsifier for the abstract
//! window condition. Sampling at finite density certifies only the sampled
//! inequality system; every report carries its density and margin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridFunction, InterpKind};
use crate::problem::Problem;
use crate::timescale::Mesh;
use std::sync::Arc;

/// Which sign pattern (−1)^j g is required to take on the strips. The
/// reversed variant (every sign flipped) certifies the same windows, so it
/// is detected from the data rather than demanded from the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// g > 0 on even strips.
    Standard,
    /// g < 0 on even strips.
    Reversed,
}

impl Orientation {
    /// Required sign of g on strip j.
    pub fn sign(self, j: usize) -> f64 {
        let base = if j % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            Orientation::Standard => base,
            Orientation::Reversed => -base,
        }
    }
}

/// Picks the orientation that makes g carry the required sign at α_0,
/// probing a small neighborhood when g(α_0) is exactly zero.
pub fn detect_orientation(g: &dyn Fn(f64) -> f64, alpha0: f64, strip_halfwidth: f64) -> Orientation {
    let mut v = g(alpha0);
    if v == 0.0 {
        let d = 0.25 * strip_halfwidth.max(f64::EPSILON);
        v = g(alpha0 - d) + g(alpha0 + d);
    }
    if v >= 0.0 {
        Orientation::Standard
    } else {
        Orientation::Reversed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionKind {
    /// Sign of g plus monotone h on the strip.
    MonotoneH,
    /// a·|h − γ| < ±g on the strip.
    NearConstantH { gamma: f64 },
    UserAsserted,
}

#[derive(Debug, Clone)]
pub struct WindowCertificate {
    pub j: usize,
    pub alpha: f64,
    /// (α_j − aT/2, α_j + aT/2); width is exactly aT.
    pub strip: (f64, f64),
    pub condition: ConditionKind,
    /// Required sign of g on this strip.
    pub g_sign: f64,
    /// (−1)^j, the Brouwer degree of g on the window to the right.
    pub degree_sign: i32,
    pub reversed: bool,
    pub samples: usize,
    /// Smallest observed slack; > 0 for a pass.
    pub min_margin: f64,
    pub pass: bool,
    /// x realizing the worst margin when failing.
    pub witness: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SpacingCheck {
    /// (α_{j+1} − α_j) − aT per gap.
    pub slack: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub certificates: Vec<WindowCertificate>,
    pub spacing: SpacingCheck,
    pub orientation: Orientation,
    pub a: f64,
    pub period: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn counterexamples(&self) -> Vec<(usize, f64)> {
        self.certificates
            .iter()
            .filter(|c| !c.pass)
            .filter_map(|c| c.witness.map(|w| (c.j, w)))
            .collect()
    }
}

/// α_{j+1} − α_j ≥ aT for every gap, with a small arithmetic tolerance so
/// the exact-boundary case counts as a pass with zero slack.
pub fn check_window_spacing(alphas: &[f64], a: f64, period: f64) -> SpacingCheck {
    let need = a * period;
    let tol = 1e-9 * (1.0 + need);
    let slack: Vec<f64> = alphas.windows(2).map(|w| (w[1] - w[0]) - need).collect();
    let pass = slack.iter().all(|&s| s >= -tol);
    SpacingCheck { slack, pass }
}

fn strip_of(alpha: f64, a: f64, period: f64) -> (f64, f64) {
    let half = 0.5 * a * period;
    (alpha - half, alpha + half)
}

fn sample_points(strip: (f64, f64), samples: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = strip;
    let n = samples.max(2);
    (0..n).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
}

fn assemble(
    pb: &Problem,
    alphas: &[f64],
    certificates: Vec<WindowCertificate>,
    orientation: Orientation,
) -> CheckReport {
    let a = pb.phi().bound();
    let period = pb.period();
    let spacing = check_window_spacing(alphas, a, period);
    let pass = spacing.pass && certificates.iter().all(|c| c.pass);
    CheckReport { certificates, spacing, orientation, a, period, pass }
}

fn monotone_cert(
    pb: &Problem,
    orientation: Orientation,
    j: usize,
    alpha: f64,
    samples: usize,
) -> WindowCertificate {
    let a = pb.phi().bound();
    let period = pb.period();
    let strip = strip_of(alpha, a, period);
    let sign = orientation.sign(j);
    let pts: Vec<f64> = sample_points(strip, samples).collect();
    let gv: Vec<f64> = pts.iter().map(|&x| pb.eval_g(x)).collect();
    let hv: Vec<f64> = pts.iter().map(|&x| pb.eval_h(x)).collect();
    let scale = gv.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
    let strict = 1e-9 * scale;
    let mut min_margin = f64::INFINITY;
    let mut witness = None;
    for (i, &x) in pts.iter().enumerate() {
        let m = sign * gv[i] - strict;
        if m < min_margin {
            min_margin = m;
            if m <= 0.0 {
                witness = Some(x);
            }
        }
    }
    // sign·h must be nonincreasing along the sorted samples
    let h_scale = hv.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
    for i in 1..pts.len() {
        let rise = sign * (hv[i] - hv[i - 1]);
        if rise > 1e-12 * h_scale {
            min_margin = min_margin.min(-rise);
            witness = Some(pts[i]);
        }
    }
    WindowCertificate {
        j,
        alpha,
        strip,
        condition: ConditionKind::MonotoneH,
        g_sign: sign,
        degree_sign: if j % 2 == 0 { 1 } else { -1 },
        reversed: orientation == Orientation::Reversed,
        samples: pts.len(),
        min_margin,
        pass: min_margin > 0.0,
        witness,
    }
}

fn near_constant_cert(
    pb: &Problem,
    orientation: Orientation,
    j: usize,
    alpha: f64,
    gamma: Option<f64>,
    samples: usize,
) -> WindowCertificate {
    let a = pb.phi().bound();
    let period = pb.period();
    let strip = strip_of(alpha, a, period);
    let sign = orientation.sign(j);
    let pts: Vec<f64> = sample_points(strip, samples).collect();
    let hv: Vec<f64> = pts.iter().map(|&x| pb.eval_h(x)).collect();
    // midrange is the Chebyshev-best constant approximation of h on the samples
    let gamma = gamma.unwrap_or_else(|| {
        let hmin = hv.iter().copied().fold(f64::INFINITY, f64::min);
        let hmax = hv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (hmin + hmax)
    });
    let mut min_margin = f64::INFINITY;
    let mut witness = None;
    for (i, &x) in pts.iter().enumerate() {
        let slack = sign * pb.eval_g(x) - a * (hv[i] - gamma).abs();
        if slack < min_margin {
            min_margin = slack;
            if slack <= 0.0 {
                witness = Some(x);
            }
        }
    }
    WindowCertificate {
        j,
        alpha,
        strip,
        condition: ConditionKind::NearConstantH { gamma },
        g_sign: sign,
        degree_sign: if j % 2 == 0 { 1 } else { -1 },
        reversed: orientation == Orientation::Reversed,
        samples: pts.len(),
        min_margin,
        pass: min_margin > 0.0,
        witness,
    }
}

fn orientation_for(pb: &Problem, alphas: &[f64]) -> Orientation {
    let half = 0.5 * pb.phi().bound() * pb.period();
    detect_orientation(&|x| pb.eval_g(x), alphas[0], half)
}

/// Sign of g plus monotone h on every strip.
pub fn check_corollary_monotone(pb: &Problem, alphas: &[f64], samples: usize) -> CheckReport {
    let orientation = orientation_for(pb, alphas);
    let certs = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| monotone_cert(pb, orientation, j, alpha, samples))
        .collect();
    assemble(pb, alphas, certs, orientation)
}

/// a·|h − γ_j| < ±g on every strip; γ_j auto-fit to the midrange of h when
/// not supplied.
pub fn check_corollary_near_constant(
    pb: &Problem,
    alphas: &[f64],
    gammas: Option<&[f64]>,
    samples: usize,
) -> CheckReport {
    let orientation = orientation_for(pb, alphas);
    let certs = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let gamma = gammas.map(|g| g[j]);
            near_constant_cert(pb, orientation, j, alpha, gamma, samples)
        })
        .collect();
    assemble(pb, alphas, certs, orientation)
}

/// Tries the monotone condition first on each strip, falling back to the
/// near-constant one; a strip passes if either does.
pub fn certify(pb: &Problem, alphas: &[f64], samples: usize) -> CheckReport {
    let orientation = orientation_for(pb, alphas);
    let certs = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let m = monotone_cert(pb, orientation, j, alpha, samples);
            if m.pass {
                return m;
            }
            let n = near_constant_cert(pb, orientation, j, alpha, None, samples);
            if n.pass || n.min_margin >= m.min_margin {
                n
            } else {
                m
            }
        })
        .collect();
    assemble(pb, alphas, certs, orientation)
}

// 10-point Gauss-Legendre rule on [-1, 1].
const GAUSS_X: [f64; 10] = [
    -0.9739065285171717,
    -0.8650633666889845,
    -0.6794095682990244,
    -0.4333953941292472,
    -0.14887433898163122,
    0.14887433898163122,
    0.4333953941292472,
    0.6794095682990244,
    0.8650633666889845,
    0.9739065285171717,
];
const GAUSS_W: [f64; 10] = [
    0.06667134430868814,
    0.14945134915058059,
    0.21908636251598204,
    0.26926671930999635,
    0.29552422471475287,
    0.29552422471475287,
    0.26926671930999635,
    0.21908636251598204,
    0.14945134915058059,
    0.06667134430868814,
];

/// ∫_lo^hi h(u) du by panelled 10-point Gauss (panel width ≤ 0.25).
fn integral_of(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return 0.0;
    }
    let (a, b, flip) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let panels = ((b - a) / 0.25).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * w;
        let mut s = 0.0;
        for q in 0..10 {
            s += GAUSS_W[q] * h(c + 0.5 * w * GAUSS_X[q]);
        }
        acc += 0.5 * w * s;
    }
    flip * acc
}

/// Exact evaluation of ∫₀ᵀ h(x(t)) x^Δ(t) Δt for the piecewise-linear
/// representative of x: on a dense segment x is linear, so the integrand
/// substitutes to ∫ h(u) du over the value range; at a scattered node the
/// Δ-integral contributes μ·h(x)·x^Δ = h(x_i)·(x_{i+1} − x_i).
pub fn lienard_integral(h: &dyn Fn(f64) -> f64, x: &GridFunction) -> f64 {
    let mesh = x.mesh();
    let k = x.len();
    let mut acc = 0.0;
    for i in 0..k {
        let xi = x.value(i);
        let xn = x.value((i + 1) % k);
        if mesh.segment_dense(i) && x.kind() == InterpKind::PiecewiseLinear {
            acc += integral_of(h, xi, xn);
        } else {
            acc += h(xi) * (xn - xi);
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub trials: usize,
    /// Worst signed violation: positive when some trial broke the lemma.
    pub worst_violation: f64,
    pub pass: bool,
    pub failing_trial: Option<usize>,
}

/// For nondecreasing h the Δ-integral ∫ h(x) x^Δ must be ≤ 0 for every
/// periodic x (≥ 0 for nonincreasing h); checks `trials` random periodic
/// grid functions to tolerance 1e-10 · scale.
pub fn check_monotone_integral_lemma(
    h: &dyn Fn(f64) -> f64,
    nondecreasing: bool,
    mesh: &Arc<Mesh>,
    trials: usize,
    seed: u64,
) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut failing = None;
    for trial in 0..trials {
        let amp: f64 = rng.gen_range(0.1..3.0);
        let values: Vec<f64> = (0..mesh.len()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let x = GridFunction::from_values(Arc::clone(mesh), values).unwrap();
        let val = lienard_integral(h, &x);
        let h_scale = (0..mesh.len()).map(|i| h(x.value(i)).abs()).fold(1.0f64, f64::max);
        let scale = h_scale * (1.0 + x.norm_inf());
        let violation = if nondecreasing { val } else { -val } - 1e-10 * scale;
        if violation > worst {
            worst = violation;
            if violation > 0.0 {
                failing = Some(trial);
            }
        }
    }
    LemmaReport { trials, worst_violation: worst, pass: failing.is_none(), failing_trial: failing }
}

#[derive(Debug, Clone)]
pub struct FalsifyReport {
    pub trials: usize,
    pub violations: usize,
    /// This is a sampling falsifier, not a proof of the condition.
    pub witness: Option<(usize, f64)>,
}

/// Monte-Carlo attack on the abstract window condition: random periodic x
/// with x(0) = α_j and ‖x^Δ‖∞ < a; any wrong-signed
/// ∫ [h(x)x^Δ + g(x)] Δt is a violation. Zero violations falsifies
/// nothing rigorously — it only fails to find a counterexample.
pub fn falsify_condition(
    pb: &Problem,
    alphas: &[f64],
    trials: usize,
    seed: u64,
) -> FalsifyReport {
    let orientation = orientation_for(pb, alphas);
    let mesh = pb.mesh();
    let a = pb.phi().bound();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut witness = None;
    for trial in 0..trials {
        let j = trial % alphas.len();
        let sign = orientation.sign(j);
        // random derivative profile, centered to mean zero, scaled into (−a, a)
        let raw: Vec<f64> = (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xd = GridFunction::from_values(Arc::clone(mesh), raw)
            .unwrap()
            .with_kind(InterpKind::LeftConstant);
        let centered = xd.shift_values(-xd.mean());
        let maxv = centered.norm_inf().max(1e-12);
        let scale_to = rng.gen_range(0.2..0.95) * a / maxv;
        let xd = centered.scale(scale_to);
        let x = xd.cumulative().shift_values(alphas[j]);
        let val = lienard_integral(&|u| pb.eval_h(u), &x)
            + x.map(|u| pb.eval_g(u)).integral_period();
        if sign * val <= 0.0 {
            violations += 1;
            if witness.is_none() {
                witness = Some((j, val));
            }
        }
    }
    FalsifyReport { trials, violations, witness }
}
