//! Homotopy continuation for fixed points of M(1, ·): damped Picard
//! iteration with a finite-difference Newton corrector, one independent
//! solve per window.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::grid::GridFunction;
use crate::problem::Problem;

#[derive(Debug, Clone, Copy)]
pub struct SolveSettings {
    /// Fixed-point defect tolerance in the discrete C¹ norm.
    pub tol_fp: f64,
    /// Equation residual tolerance for the final verification.
    pub tol_eq: f64,
    /// Uniform λ steps in the base schedule.
    pub lambda_steps: u32,
    pub max_picard: u32,
    pub max_newton: u32,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings { tol_fp: 1e-9, tol_eq: 1e-6, lambda_steps: 32, max_picard: 300, max_newton: 40 }
    }
}

/// Snapshot of the continuation at one λ, kept for post-mortems.
#[derive(Debug, Clone)]
pub struct HomotopyState {
    pub lambda: f64,
    pub x: GridFunction,
    pub x_delta: GridFunction,
    /// ‖x − M(λ,x)‖∞ + ‖x^Δ − M(λ,x)^Δ‖∞.
    pub defect: f64,
    pub qnf: f64,
}

#[derive(Debug)]
pub struct SolutionRecord {
    pub x: GridFunction,
    pub x_delta: GridFunction,
    pub window: usize,
    pub window_bounds: (f64, f64),
    pub residual_eq: f64,
    pub residual_fp: f64,
    pub qnf: f64,
    pub iterations: u64,
    pub lambda_steps_taken: u32,
}

#[derive(Debug, Clone)]
pub enum FailureReason {
    /// g has no sign change in the window; no seed for λ = 0.
    NoRoot,
    /// Continuation could not advance past this λ even at the minimum step.
    Stalled { lambda: f64 },
    /// Converged but a verification check failed.
    Verification(String),
    Operator(String),
}

#[derive(Debug)]
pub struct SolveFailure {
    pub window: usize,
    pub reason: FailureReason,
    pub last: Option<HomotopyState>,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::NoRoot => write!(f, "no sign change of g in the window"),
            FailureReason::Stalled { lambda } => {
                write!(f, "continuation stalled at lambda = {lambda}")
            }
            FailureReason::Verification(msg) => write!(f, "verification failed: {msg}"),
            FailureReason::Operator(msg) => write!(f, "operator error: {msg}"),
        }
    }
}

/// Root of g in (lo, hi) by sign-change bisection; with several roots the
/// one nearest the window midpoint wins.
pub fn seed_root(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    const SCAN: usize = 1024;
    let mid = 0.5 * (lo + hi);
    let width = hi - lo;
    let mut best: Option<f64> = None;
    let mut consider = |root: f64| {
        let better = match best {
            None => true,
            Some(b) => (root - mid).abs() < (b - mid).abs(),
        };
        if better {
            best = Some(root);
        }
    };
    let sample = |i: usize| lo + width * (i as f64 + 0.5) / (SCAN as f64 + 1.0);
    let mut prev_t = sample(0);
    let mut prev_v = g(prev_t);
    if prev_v == 0.0 {
        consider(prev_t);
    }
    for i in 1..=SCAN {
        let t = sample(i);
        let v = g(t);
        if v == 0.0 {
            consider(t);
        } else if prev_v != 0.0 && (v > 0.0) != (prev_v > 0.0) {
            let (mut a, mut b) = (prev_t, t);
            let mut ga = prev_v;
            for _ in 0..90 {
                let m = 0.5 * (a + b);
                let gm = g(m);
                if gm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (gm > 0.0) == (ga > 0.0) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            consider(0.5 * (a + b));
        }
        prev_t = t;
        prev_v = v;
    }
    best
}

struct Iterate {
    x: GridFunction,
    xd: GridFunction,
    defect: f64,
    qnf: f64,
}

fn measure(pb: &Problem, lambda: f64, x: &GridFunction, xd: &GridFunction) -> Iterate {
    let ap = pb.apply_m(lambda, x, xd);
    let defect = x.sup_abs_diff(&ap.y) + xd.sup_abs_diff(&ap.y_delta);
    Iterate { x: ap.y, xd: ap.y_delta, defect, qnf: ap.qnf }
}

/// Damped Picard at fixed λ. Returns (x, xd, defect, qnf, iterations, converged).
fn picard(
    pb: &Problem,
    lambda: f64,
    mut x: GridFunction,
    mut xd: GridFunction,
    settings: &SolveSettings,
) -> (GridFunction, GridFunction, f64, f64, u64, bool) {
    let mut theta = 1.0f64;
    let mut prev_defect = f64::INFINITY;
    let mut iters = 0u64;
    for _ in 0..settings.max_picard {
        let it = measure(pb, lambda, &x, &xd);
        iters += 1;
        if it.defect < settings.tol_fp {
            return (x, xd, it.defect, it.qnf, iters, true);
        }
        if it.defect > prev_defect {
            theta *= 0.5;
            if theta < 1.0 / 64.0 {
                return (x, xd, it.defect, it.qnf, iters, false);
            }
        } else if theta < 1.0 {
            theta = (1.5 * theta).min(1.0);
        }
        x = x.blend(&it.x, theta);
        xd = xd.blend(&it.xd, theta);
        prev_defect = it.defect;
    }
    let it = measure(pb, lambda, &x, &xd);
    (x, xd, it.defect, it.qnf, iters + 1, it.defect < settings.tol_fp)
}

fn split_state(pb: &Problem, v: &DVector<f64>) -> (GridFunction, GridFunction) {
    let k = v.len() / 2;
    let mesh = Arc::clone(pb.mesh());
    let x = GridFunction::from_values(Arc::clone(&mesh), v.as_slice()[..k].to_vec()).unwrap();
    let xd = GridFunction::from_values(mesh, v.as_slice()[k..].to_vec())
        .unwrap()
        .with_kind(crate::grid::InterpKind::LeftConstant);
    (x, xd)
}

fn eval_f(pb: &Problem, lambda: f64, v: &DVector<f64>) -> (DVector<f64>, f64, f64) {
    let k = v.len() / 2;
    let (x, xd) = split_state(pb, v);
    let ap = pb.apply_m(lambda, &x, &xd);
    let mut f = DVector::zeros(2 * k);
    let mut dx = 0.0f64;
    let mut dxd = 0.0f64;
    for i in 0..k {
        let fx = v[i] - ap.y.value(i);
        let fd = v[k + i] - ap.y_delta.value(i);
        f[i] = fx;
        f[k + i] = fd;
        dx = dx.max(fx.abs());
        dxd = dxd.max(fd.abs());
    }
    (f, dx + dxd, ap.qnf)
}

/// Modified Newton on the stacked node vector [x; x^Δ] with a
/// finite-difference Jacobian of F(v) = v − M(λ, v), LU reuse across
/// iterations, and backtracking on the defect.
fn newton(
    pb: &Problem,
    lambda: f64,
    x: GridFunction,
    xd: GridFunction,
    settings: &SolveSettings,
) -> (GridFunction, GridFunction, f64, f64, u64, bool) {
    let k = x.len();
    let n = 2 * k;
    let mut v = DVector::zeros(n);
    for i in 0..k {
        v[i] = x.value(i);
        v[k + i] = xd.value(i);
    }
    let (mut f, mut defect, mut qnf) = eval_f(pb, lambda, &v);
    let mut iters = 1u64;
    let mut lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;
    let mut fresh = false;
    for _ in 0..settings.max_newton {
        if defect < settings.tol_fp {
            let (gx, gxd) = split_state(pb, &v);
            return (gx, gxd, defect, qnf, iters, true);
        }
        if lu.is_none() {
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let eps = 1e-6 * (1.0 + v[j].abs());
                let mut vp = v.clone();
                vp[j] += eps;
                let (fp, _, _) = eval_f(pb, lambda, &vp);
                iters += 1;
                for i in 0..n {
                    jac[(i, j)] = (fp[i] - f[i]) / eps;
                }
            }
            lu = Some(jac.lu());
            fresh = true;
        }
        let delta = match lu.as_ref().unwrap().solve(&(-&f)) {
            Some(d) => d,
            None => {
                let (gx, gxd) = split_state(pb, &v);
                return (gx, gxd, defect, qnf, iters, false);
            }
        };
        let mut accepted = false;
        let mut s = 1.0f64;
        for _ in 0..8 {
            let vt = &v + &delta * s;
            let (ft, dt, qt) = eval_f(pb, lambda, &vt);
            iters += 1;
            if dt < defect {
                v = vt;
                f = ft;
                defect = dt;
                qnf = qt;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            if fresh {
                let (gx, gxd) = split_state(pb, &v);
                return (gx, gxd, defect, qnf, iters, false);
            }
            lu = None; // stale Jacobian: rebuild and retry
            continue;
        }
        if s < 1.0 {
            // partial step under a reused factorization: refresh next time
            if !fresh {
                lu = None;
            }
        }
        fresh = false;
    }
    let (gx, gxd) = split_state(pb, &v);
    (gx, gxd, defect, qnf, iters, defect < settings.tol_fp)
}

/// Continues x = M(λ, x) from the constant seed at λ = 0 up to λ = 1 and
/// verifies the solution; failures come back as structured reports.
pub fn homotopy_solve(
    pb: &Problem,
    window: usize,
    bounds: (f64, f64),
    settings: &SolveSettings,
) -> Result<SolutionRecord, SolveFailure> {
    let (lo, hi) = bounds;
    let b = match seed_root(&|u| pb.eval_g(u), lo, hi) {
        Some(b) => b,
        None => return Err(SolveFailure { window, reason: FailureReason::NoRoot, last: None }),
    };
    let mesh = pb.mesh();
    let mut x = GridFunction::constant(mesh, b);
    let mut xd =
        GridFunction::constant(mesh, 0.0).with_kind(crate::grid::InterpKind::LeftConstant);
    let mut lambda = 0.0f64;
    let base_step = 1.0 / settings.lambda_steps as f64;
    let mut step = base_step;
    let mut total_iters = 0u64;
    let mut steps_taken = 0u32;
    let mut defect;
    let mut qnf;
    let mut prefer_newton = false;

    // λ = 0: the constant root is a fixed point up to the seed accuracy.
    let it0 = measure(pb, 0.0, &x, &xd);
    total_iters += 1;
    defect = it0.defect;
    qnf = it0.qnf;
    if defect >= settings.tol_fp {
        let (nx, nxd, d, q, n, ok) = picard(pb, 0.0, x, xd, settings);
        total_iters += n;
        x = nx;
        xd = nxd;
        defect = d;
        qnf = q;
        if !ok {
            return Err(SolveFailure {
                window,
                reason: FailureReason::Stalled { lambda: 0.0 },
                last: Some(HomotopyState { lambda: 0.0, x, x_delta: xd, defect, qnf }),
            });
        }
    }

    while lambda < 1.0 {
        let target = (lambda + step).min(1.0);
        let mut ok = false;
        let mut used_newton = prefer_newton;
        let (mut cx, mut cxd) = (x.clone(), xd.clone());
        if !prefer_newton {
            let (nx, nxd, d, q, n, converged) = picard(pb, target, cx, cxd, settings);
            total_iters += n;
            cx = nx;
            cxd = nxd;
            defect = d;
            qnf = q;
            ok = converged;
            if !ok {
                used_newton = true;
            }
        }
        if !ok {
            let (nx, nxd, d, q, n, converged) = newton(pb, target, cx, cxd, settings);
            total_iters += n;
            cx = nx;
            cxd = nxd;
            defect = d;
            qnf = q;
            ok = converged;
        }
        if ok {
            x = cx;
            xd = cxd;
            lambda = target;
            steps_taken += 1;
            prefer_newton = used_newton;
            step = (step * 2.0).min(base_step);
        } else {
            step *= 0.5;
            if step < 1.0 / 1024.0 {
                return Err(SolveFailure {
                    window,
                    reason: FailureReason::Stalled { lambda },
                    last: Some(HomotopyState {
                        lambda: target,
                        x: cx,
                        x_delta: cxd,
                        defect,
                        qnf,
                    }),
                });
            }
        }
    }

    let fail = |msg: String, x: GridFunction, xd: GridFunction, defect: f64, qnf: f64| SolveFailure {
        window,
        reason: FailureReason::Verification(msg),
        last: Some(HomotopyState { lambda: 1.0, x, x_delta: xd, defect, qnf }),
    };
    if qnf.abs() >= settings.tol_fp.max(1e-12) * 10.0 {
        return Err(fail(format!("Q(N_f(x)) = {qnf} not near zero"), x, xd, defect, qnf));
    }
    let x0 = x.value(0);
    if !(x0 > lo && x0 < hi) {
        return Err(fail(format!("x(0) = {x0} left the window ({lo}, {hi})"), x, xd, defect, qnf));
    }
    let a = pb.phi().bound();
    if xd.norm_inf() >= a {
        return Err(fail(format!("derivative bound {} >= {a}", xd.norm_inf()), x, xd, defect, qnf));
    }
    let residual_eq = match pb.equation_residual_pair(&x, &xd) {
        Ok(r) => r,
        Err(e) => {
            let msg = e.to_string();
            return Err(SolveFailure {
                window,
                reason: FailureReason::Operator(msg),
                last: Some(HomotopyState { lambda: 1.0, x, x_delta: xd, defect, qnf }),
            });
        }
    };
    if residual_eq >= settings.tol_eq {
        return Err(fail(
            format!("equation residual {residual_eq} >= {}", settings.tol_eq),
            x,
            xd,
            defect,
            qnf,
        ));
    }
    Ok(SolutionRecord {
        x,
        x_delta: xd,
        window,
        window_bounds: bounds,
        residual_eq,
        residual_fp: defect,
        qnf,
        iterations: total_iters,
        lambda_steps_taken: steps_taken,
    })
}

/// Solves each window (α_j, α_{j+1}) independently, in parallel; failures
/// are collected per window without aborting the others.
pub fn multi_solve(
    pb: &Problem,
    alphas: &[f64],
    settings: &SolveSettings,
) -> Vec<Result<SolutionRecord, SolveFailure>> {
    assert!(alphas.len() >= 2, "need at least one window");
    assert!(alphas.windows(2).all(|w| w[0] < w[1]), "alphas must be strictly increasing");
    (0..alphas.len() - 1)
        .into_par_iter()
        .map(|j| homotopy_solve(pb, j, (alphas[j], alphas[j + 1]), settings))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;
    use crate::phi::{PhiHomeomorphism, PhiKind};
    use crate::timescale::{Mesh, TimeScale};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn seed_root_picks_nearest_midpoint() {
        // roots of sin in (-1, 7): 0, π, 2π; midpoint 3 → π
        let r = seed_root(&|u: f64| u.sin(), -1.0, 7.0).unwrap();
        assert!((r - PI).abs() < 1e-12);
        // no root
        assert!(seed_root(&|_| 1.0, 0.0, 1.0).is_none());
        // single linear root
        let r = seed_root(&|u: f64| u - 0.3, 0.0, 1.0).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    fn pendulum(c: f64, t_period: f64, k: f64, amp: f64, dt_div: f64) -> Problem {
        let ts = TimeScale::real_line(t_period).unwrap();
        let mesh = Mesh::build(&ts, t_period / dt_div).unwrap();
        let p = GridFunction::from_fn(&mesh, move |t| amp * (2.0 * PI * t / t_period).cos());
        Problem::new(
            mesh,
            PhiHomeomorphism::new(PhiKind::Relativistic { c }),
            Arc::new(move |_| k),
            Arc::new(|u: f64| u.sin()),
            p,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn unforced_equilibrium_is_found() {
        let pb = pendulum(1.0, 2.0, 0.5, 0.0, 64.0);
        let settings = SolveSettings { lambda_steps: 4, ..Default::default() };
        let rec = homotopy_solve(&pb, 0, (PI / 2.0, 3.0 * PI / 2.0), &settings).unwrap();
        // x ≡ π exactly: the homotopy never leaves the constant
        assert!(rec.x.sup_abs_diff(&GridFunction::constant(pb.mesh(), PI)) < 1e-9);
        assert!(rec.x_delta.norm_inf() < 1e-9);
        assert!(rec.residual_eq < 1e-9);
    }

    #[test]
    fn forced_window_with_negative_mean_slope_converges() {
        // around x = π the mean of g' = cos is negative: plain Picard
        // diverges on the constant mode and the Newton corrector must land it
        let pb = pendulum(1.0, 2.0, 0.1, 0.15, 64.0);
        let settings = SolveSettings { lambda_steps: 8, ..Default::default() };
        let rec = homotopy_solve(&pb, 0, (PI / 2.0, 3.0 * PI / 2.0), &settings).unwrap();
        assert!(rec.x.value(0) > PI / 2.0 && rec.x.value(0) < 3.0 * PI / 2.0);
        assert!(rec.residual_eq < 1e-6, "{}", rec.residual_eq);
        assert!(rec.qnf.abs() < 1e-8);
    }

    #[test]
    fn multi_solve_unforced_equilibria() {
        let pb = pendulum(1.0, 2.0, 0.0, 0.0, 32.0);
        let alphas: Vec<f64> = (-1..4).map(|j| (2 * j + 1) as f64 * PI / 2.0).collect();
        let settings = SolveSettings { lambda_steps: 2, ..Default::default() };
        let recs = multi_solve(&pb, &alphas, &settings);
        assert_eq!(recs.len(), 4);
        for (j, r) in recs.iter().enumerate() {
            let r = r.as_ref().unwrap();
            let expect = j as f64 * PI;
            assert!(
                (r.x.value(0) - expect).abs() < 1e-8,
                "window {j}: x(0) = {}",
                r.x.value(0)
            );
        }
    }

    #[test]
    fn no_root_window_fails_cleanly() {
        let pb = pendulum(1.0, 2.0, 0.0, 0.0, 32.0);
        let err = homotopy_solve(&pb, 0, (0.2, 1.0), &SolveSettings::default()).unwrap_err();
        assert!(matches!(err.reason, FailureReason::NoRoot));
    }
}
