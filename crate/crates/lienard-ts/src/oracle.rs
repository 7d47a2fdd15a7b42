//! Brute-force baseline for purely discrete time scales: a damped Newton
//! solve of the K-dimensional periodic difference system, written directly
//! against the node values. Deliberately shares no code with the homotopy
//! operator path — it is the independent cross-check.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::grid::{GridFunction, InterpKind};
use crate::homotopy::seed_root;
use crate::problem::Problem;

pub struct OracleSolution {
    pub x: GridFunction,
    pub x_delta: GridFunction,
    pub residual: f64,
    pub iterations: u64,
}

/// Residual of the difference system at node i:
///   (z_{i+1} − z_i)/μ_i − [−h(x_i) d_i − g(x_{i−shift}) + p_i],
/// with d_i = (x_{i+1} − x_i)/μ_i and z_i = φ(d_i).
fn residual_vec(pb: &Problem, x: &DVector<f64>, shift: &[usize]) -> Option<DVector<f64>> {
    let k = x.len();
    let mesh = pb.mesh();
    let phi = pb.phi();
    let a = phi.bound();
    let mut d = vec![0.0; k];
    let mut z = vec![0.0; k];
    for i in 0..k {
        let mu = mesh.segment_len(i);
        d[i] = (x[(i + 1) % k] - x[i]) / mu;
        if d[i].abs() >= a {
            return None;
        }
        z[i] = phi.apply(d[i]);
    }
    let mut f = DVector::zeros(k);
    for i in 0..k {
        let mu = mesh.segment_len(i);
        let rhs = -pb.eval_h(x[i]) * d[i] - pb.eval_g(x[shift[i]]) + pb.forcing().value(i);
        f[i] = (z[(i + 1) % k] - z[i]) / mu - rhs;
    }
    Some(f)
}

/// Solves the periodic difference system in the given window, seeded from
/// the root of g nearest the window midpoint.
pub fn solve_discrete(
    pb: &Problem,
    bounds: (f64, f64),
    tol: f64,
    max_iter: u32,
) -> Result<OracleSolution, String> {
    let mesh = pb.mesh();
    if !mesh.timescale().is_discrete() {
        return Err("oracle requires a purely discrete time scale".into());
    }
    let k = mesh.len();
    let shift = crate::grid::shift_permutation(mesh, pb.delay()).map_err(|e| e.to_string())?;
    let b = seed_root(&|u| pb.eval_g(u), bounds.0, bounds.1)
        .ok_or_else(|| "no root of g in the window".to_string())?;
    let mut x = DVector::from_element(k, b);
    let mut f = residual_vec(pb, &x, &shift).ok_or("seed violates the derivative bound")?;
    let mut norm = f.amax();
    let mut iters = 1u64;
    for _ in 0..max_iter {
        if norm < tol {
            break;
        }
        let mut jac = DMatrix::zeros(k, k);
        for j in 0..k {
            let eps = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += eps;
            let fp = match residual_vec(pb, &xp, &shift) {
                Some(fp) => fp,
                None => {
                    xp[j] = x[j] - eps;
                    let fm = residual_vec(pb, &xp, &shift)
                        .ok_or("finite-difference step leaves the derivative domain")?;
                    iters += 1;
                    for i in 0..k {
                        jac[(i, j)] = (f[i] - fm[i]) / eps;
                    }
                    continue;
                }
            };
            iters += 1;
            for i in 0..k {
                jac[(i, j)] = (fp[i] - f[i]) / eps;
            }
        }
        let delta = jac
            .lu()
            .solve(&(-&f))
            .ok_or_else(|| format!("singular Jacobian at residual {norm}"))?;
        let mut s = 1.0f64;
        let mut stepped = false;
        for _ in 0..30 {
            let xt = &x + &delta * s;
            if let Some(ft) = residual_vec(pb, &xt, &shift) {
                iters += 1;
                let nt = ft.amax();
                if nt < norm {
                    x = xt;
                    f = ft;
                    norm = nt;
                    stepped = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !stepped {
            return Err(format!("line search stalled at residual {norm}"));
        }
    }
    if norm >= tol {
        return Err(format!("did not reach tolerance: residual {norm}"));
    }
    let xg = GridFunction::from_values(Arc::clone(mesh), x.as_slice().to_vec()).unwrap();
    let xd = xg.delta_derivative().with_kind(InterpKind::LeftConstant);
    Ok(OracleSolution { x: xg, x_delta: xd, residual: norm, iterations: iters })
}
