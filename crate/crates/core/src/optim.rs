//! Minimizers for the sweep functionals.
//!
//! Each sweep asks for the minimizer of an affine least-squares problem
//! over the reduced unknowns. The workhorse is a banded Cholesky
//! factorization of the normal equations with diagonal equilibration and
//! iterative refinement. Explicit gradient descent and its ball-projected
//! variant are available as slower drop-ins; the projected variant shifts
//! the unknowns by a lift of the boundary data so the constraint ball is
//! centered where the data says the field should hang.

use crate::carleman::{h2_norm_sq, Dof, QField, QuadraticSystem};
use crate::{Error, Result};

/// Tolerances of the direct normal-equations solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Refinement stops once the relative residual of the normal equations
    /// drops below this.
    pub target_rel_residual: f64,
    /// The solve fails if the relative residual stays above this after all
    /// refinement passes.
    pub fail_above: f64,
    /// Maximum number of refinement passes.
    pub max_refine: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { target_rel_residual: 1e-12, fail_above: 1e-10, max_refine: 12 }
    }
}

/// Splits row `r` into its free entries and the constant part contributed
/// by the pinned boundary columns. Returns the squared weight and the
/// constant.
fn row_parts(
    system: &QuadraticSystem,
    r: usize,
    entries: &mut Vec<(usize, f64)>,
) -> (f64, f64) {
    let row = system.row(r);
    entries.clear();
    let mut d = row.constant;
    let mt = system.grid().mt;
    for (c, a) in row.cols.iter().zip(row.coeffs) {
        match system.dof_of(*c) {
            Dof::Free(k) => entries.push((k, *a)),
            Dof::Fixed => d += a * system.fixed_value(c / mt, c % mt),
        }
    }
    (row.weight * row.weight, d)
}

/// Product of the normal matrix with a vector, accumulated row by row so
/// refinement does not need a second copy of the band.
fn normal_mat_vec(system: &QuadraticSystem, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut entries = Vec::with_capacity(16);
    for r in 0..system.n_rows() {
        let (w2, _) = row_parts(system, r, &mut entries);
        if entries.is_empty() {
            continue;
        }
        let s: f64 = entries.iter().map(|&(k, a)| a * x[k]).sum();
        let ws = w2 * s;
        for &(k, a) in &entries {
            out[k] += ws * a;
        }
    }
    out
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// In-place Cholesky factorization of a symmetric positive definite band
/// matrix stored column-major: entry `(c + r, c)` of the lower triangle
/// lives at `band[c * (bw + 1) + r]`.
fn cholesky_banded(band: &mut [f64], n: usize, bw: usize) -> Result<()> {
    let bwp1 = bw + 1;
    for j in 0..n {
        let jj = j * bwp1;
        let pivot = band[jj];
        if !(pivot > 0.0) {
            return Err(Error::Numerical(format!(
                "normal equations are not positive definite at unknown {j}"
            )));
        }
        let d = pivot.sqrt();
        band[jj] = d;
        let m = bw.min(n - 1 - j);
        for r in 1..=m {
            band[jj + r] /= d;
        }
        for k in 1..=m {
            let ljk = band[jj + k];
            if ljk == 0.0 {
                continue;
            }
            // the pivot column lives strictly left of the updated column,
            // so the buffer splits into disjoint halves
            let col = (j + k) * bwp1;
            let (left, right) = band.split_at_mut(col);
            let src = &left[jj + k..jj + m + 1];
            let dst = &mut right[..m - k + 1];
            for (dv, sv) in dst.iter_mut().zip(src) {
                *dv -= sv * ljk;
            }
        }
    }
    Ok(())
}

/// Solves `L L^T x = b` in place given the banded Cholesky factor.
fn band_solve(band: &[f64], n: usize, bw: usize, b: &mut [f64]) {
    let bwp1 = bw + 1;
    for j in 0..n {
        let jj = j * bwp1;
        b[j] /= band[jj];
        let m = bw.min(n - 1 - j);
        for r in 1..=m {
            b[j + r] -= band[jj + r] * b[j];
        }
    }
    for j in (0..n).rev() {
        let jj = j * bwp1;
        let m = bw.min(n - 1 - j);
        let mut s = b[j];
        for r in 1..=m {
            s -= band[jj + r] * b[j + r];
        }
        b[j] = s / band[jj];
    }
}

/// Minimizes the sweep functional by factoring its normal equations.
///
/// The normal matrix is assembled in band storage, equilibrated by its
/// diagonal, factored by a banded Cholesky, and the solution is polished by
/// iterative refinement with residuals accumulated from the original rows.
pub fn solve_direct(system: &QuadraticSystem, opts: &SolveOptions) -> Result<Vec<f64>> {
    let n = system.n_free();
    let bw = system.semi_bandwidth();
    let bwp1 = bw + 1;
    let mut band = vec![0.0f64; n * bwp1];
    let mut rhs = vec![0.0f64; n];
    let mut entries = Vec::with_capacity(16);
    for r in 0..system.n_rows() {
        let (w2, d) = row_parts(system, r, &mut entries);
        for &(k1, a1) in &entries {
            rhs[k1] -= w2 * a1 * d;
            for &(k2, a2) in &entries {
                if k1 >= k2 {
                    band[k2 * bwp1 + (k1 - k2)] += w2 * a1 * a2;
                }
            }
        }
    }

    let mut scale = vec![0.0f64; n];
    for (k, s) in scale.iter_mut().enumerate() {
        let d = band[k * bwp1];
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Numerical(format!(
                "normal equations have a bad diagonal at unknown {k}: {d}"
            )));
        }
        *s = d.sqrt();
    }
    for c in 0..n {
        let m = bw.min(n - 1 - c);
        for r in 0..=m {
            band[c * bwp1 + r] /= scale[c] * scale[c + r];
        }
    }
    cholesky_banded(&mut band, n, bw)?;

    let solve_scaled = |band: &[f64], b: &[f64]| -> Vec<f64> {
        let mut w: Vec<f64> = b.iter().zip(&scale).map(|(v, s)| v / s).collect();
        band_solve(band, n, bw, &mut w);
        for (v, s) in w.iter_mut().zip(&scale) {
            *v /= s;
        }
        w
    };

    let mut x = solve_scaled(&band, &rhs);
    let rhs_norm = norm2(&rhs);
    if rhs_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let residual = |x: &[f64]| -> Vec<f64> {
        let mut r = normal_mat_vec(system, x);
        for (rk, bk) in r.iter_mut().zip(&rhs) {
            *rk = bk - *rk;
        }
        r
    };
    let mut res = residual(&x);
    let mut rel = norm2(&res) / rhs_norm;
    let mut pass = 0;
    while rel > opts.target_rel_residual && pass < opts.max_refine {
        let dx = solve_scaled(&band, &res);
        for (xk, dk) in x.iter_mut().zip(&dx) {
            *xk += dk;
        }
        res = residual(&x);
        rel = norm2(&res) / rhs_norm;
        pass += 1;
    }
    if rel > opts.fail_above {
        return Err(Error::Numerical(format!(
            "normal equations refined to relative residual {rel:.3e}, needed {:.3e}",
            opts.fail_above
        )));
    }
    Ok(x)
}

/// Shared descent loop. The step is halved until a trial decreases the
/// objective and then held, so on a quadratic the error eventually
/// contracts by a constant factor per step. A later increase halves the
/// step again; three increases in a row abort. `post` is applied to every
/// trial point before it is evaluated.
fn descend(
    system: &QuadraticSystem,
    mut x: Vec<f64>,
    eta: f64,
    k_max: usize,
    mut post: impl FnMut(&mut Vec<f64>),
) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("step size must be positive, got {eta}")));
    }
    if k_max == 0 {
        return Err(Error::InvalidInput("need at least one descent step".into()));
    }
    if x.len() != system.n_free() {
        return Err(Error::InvalidInput(format!(
            "starting point has {} entries, system has {} unknowns",
            x.len(),
            system.n_free()
        )));
    }
    post(&mut x);
    let mut fx = system.objective(&x);
    let mut step = eta;
    let mut locked = false;
    let mut strikes = 0;
    for _ in 0..k_max {
        let g = system.gradient(&x);
        if g.iter().all(|&v| v == 0.0) {
            break;
        }
        let mut needed_rescue = false;
        loop {
            let mut trial: Vec<f64> =
                x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            post(&mut trial);
            let ft = system.objective(&trial);
            if ft < fx {
                x = trial;
                fx = ft;
                break;
            }
            if ft <= fx * (1.0 + 1e-14) {
                // flat to machine precision: converged
                return Ok(x);
            }
            needed_rescue = locked;
            step *= 0.5;
            if step < 1e-30 {
                return Err(Error::Numerical(
                    "no step size decreases the objective".into(),
                ));
            }
        }
        locked = true;
        if needed_rescue {
            strikes += 1;
            if strikes >= 3 {
                return Err(Error::Numerical(
                    "objective increased three times in a row during descent".into(),
                ));
            }
        } else {
            strikes = 0;
        }
    }
    Ok(x)
}

/// Explicit gradient descent on the reduced unknowns.
pub fn gradient_descent(
    system: &QuadraticSystem,
    start: Vec<f64>,
    eta: f64,
    k_max: usize,
) -> Result<Vec<f64>> {
    descend(system, start, eta, k_max, |_| {})
}

/// Smooth cutoff: 1 below a quarter of the domain, 0 beyond half of it.
fn cutoff(x: f64, xmax: f64) -> f64 {
    let lo = xmax / 4.0;
    let hi = xmax / 2.0;
    if x <= lo {
        1.0
    } else if x >= hi {
        0.0
    } else {
        let s = (x - lo) / (hi - lo);
        1.0 - s * s * s * (10.0 + s * (6.0 * s - 15.0))
    }
}

/// Lift of the boundary data: a field that matches the pinned columns
/// exactly, carries their slope inward, and fades to zero before the far
/// edge. Subtracting it gives unknowns with homogeneous boundary values.
pub fn build_lift(system: &QuadraticSystem) -> QField {
    let grid = system.grid();
    let dx = grid.dx();
    let mut values = vec![0.0; grid.len()];
    for j in 0..grid.mt {
        let g0 = system.fixed_value(0, j);
        let slope = (system.fixed_value(1, j) - g0) / dx;
        for i in 0..grid.mx {
            let x = grid.x(i);
            values[grid.idx(i, j)] = cutoff(x, grid.xmax) * (g0 + (x - grid.eps) * slope);
        }
    }
    QField { grid: grid.clone(), values }
}

/// Embeds a shifted reduced vector with zero boundary columns.
fn embed_homogeneous(system: &QuadraticSystem, p: &[f64]) -> QField {
    let grid = system.grid();
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.mx {
        for j in 0..grid.mt {
            if let Dof::Free(k) = system.dof(i, j) {
                values[grid.idx(i, j)] = p[k];
            }
        }
    }
    QField { grid: grid.clone(), values }
}

/// Sobolev surrogate norm of a shifted reduced vector, measured on its
/// zero-boundary embedding.
pub fn ball_norm(system: &QuadraticSystem, p: &[f64]) -> f64 {
    h2_norm_sq(&embed_homogeneous(system, p)).sqrt()
}

/// Scales `p` back onto the ball of the given radius when it lies outside.
/// Returns whether scaling happened.
pub fn project_ball(system: &QuadraticSystem, p: &mut [f64], radius: f64) -> bool {
    let norm = ball_norm(system, p);
    if norm > radius {
        let c = radius / norm;
        for v in p.iter_mut() {
            *v *= c;
        }
        true
    } else {
        false
    }
}

/// Gradient descent on the lift-shifted unknowns, projected onto a ball.
///
/// The iterate is split as `q = p + F` with `F` the boundary lift; after
/// every step `p` is projected onto the ball of the given radius in the
/// Sobolev surrogate norm. `start` and the returned vector are in the
/// unshifted reduced coordinates.
pub fn gradient_projection(
    system: &QuadraticSystem,
    start: Vec<f64>,
    eta: f64,
    k_max: usize,
    radius: f64,
) -> Result<Vec<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
    }
    let grid = system.grid();
    if grid.x(1) >= grid.xmax / 4.0 {
        return Err(Error::InvalidInput(
            "grid too coarse for the boundary lift: the pinned columns reach past \
             the lift plateau"
                .into(),
        ));
    }
    let f_free = system.restrict(&build_lift(system));
    let project = move |v: &mut Vec<f64>| {
        let mut p: Vec<f64> = v.iter().zip(&f_free).map(|(a, b)| a - b).collect();
        project_ball(system, &mut p, radius);
        for ((vk, pk), fk) in v.iter_mut().zip(&p).zip(&f_free) {
            *vk = pk + fk;
        }
    };
    descend(system, start, eta, k_max, project)
}
