//! Forward simulation of the scattering experiment.
//!
//! Solves `c(x) u_tt = u_xx` on `[-a, a]` with zero initial displacement
//! and a mollified point impulse as initial velocity. Both ends carry
//! first-order absorbing conditions (`u_t -+ u_x = 0` at `x = -+a`), so the
//! interval behaves like free space as long as the ends stay in background
//! material. Each time step is fully implicit: the spatial second
//! difference is taken at the new level, which keeps the scheme stable for
//! any step ratio and lets the time step follow the measurement rate
//! instead of a CFL bound.

use crate::model::{smoothed_delta, CoefficientProfile, ForwardGrid};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Space-time solution of the forward problem on a [`ForwardGrid`].
#[derive(Debug, Clone)]
pub struct WaveField {
    /// Grid the field is sampled on.
    pub grid: ForwardGrid,
    /// Row-major samples: `values[j * nx + i]` is `u(x_i, t_j)`.
    pub values: Vec<f64>,
}

impl WaveField {
    /// Field value at node `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    /// Bilinear interpolation of the field at an arbitrary point, clamped
    /// to the grid rectangle.
    pub fn sample(&self, x: f64, t: f64) -> f64 {
        let (nx, nt) = (self.grid.nx, self.grid.nt);
        let fx = ((x + self.grid.a) / self.grid.dx()).clamp(0.0, (nx - 1) as f64);
        let ft = (t / self.grid.dt()).clamp(0.0, (nt - 1) as f64);
        let i0 = (fx.floor() as usize).min(nx - 2);
        let j0 = (ft.floor() as usize).min(nt - 2);
        let wx = fx - i0 as f64;
        let wt = ft - j0 as f64;
        let v00 = self.value(i0, j0);
        let v10 = self.value(i0 + 1, j0);
        let v01 = self.value(i0, j0 + 1);
        let v11 = self.value(i0 + 1, j0 + 1);
        v00 * (1.0 - wx) * (1.0 - wt)
            + v10 * wx * (1.0 - wt)
            + v01 * (1.0 - wx) * wt
            + v11 * wx * wt
    }
}

/// The trace recorded by the sensor: `g0(t) = u(sensor, t)` and, once
/// differentiated, `g1 = g0'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    /// Sample times, uniform from 0.
    pub times: Vec<f64>,
    /// Recorded displacement at the sensor.
    pub g0: Vec<f64>,
    /// Stabilized time derivative of `g0`, filled in by preprocessing.
    pub g1: Option<Vec<f64>>,
    /// Relative amplitude of the multiplicative noise applied, 0 for clean
    /// data.
    pub noise_level: f64,
    /// End of the near-origin window where `g0` was pinned to `1/2`, if a
    /// correction was applied. Noise re-imposes the pinned values.
    pub corrected_until: Option<f64>,
}

impl BoundaryData {
    /// Uniform sample spacing of the trace.
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Linear interpolation of `g0` at time `t`, clamped to the recorded
    /// range.
    pub fn g0_at(&self, t: f64) -> f64 {
        interp_uniform(&self.times, &self.g0, t)
    }

    /// Linear interpolation of `g1` at time `t`; errors when the derivative
    /// has not been computed yet.
    pub fn g1_at(&self, t: f64) -> Result<f64> {
        let g1 = self
            .g1
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("boundary data has no derivative yet".into()))?;
        Ok(interp_uniform(&self.times, g1, t))
    }
}

fn interp_uniform(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    let dt = times[1] - times[0];
    let f = ((t - times[0]) / dt).clamp(0.0, (n - 1) as f64);
    let k = (f.floor() as usize).min(n - 2);
    let w = f - k as f64;
    values[k] * (1.0 - w) + values[k + 1] * w
}

/// Spatial window `[0, x_window]` and time window `[0, t_window]` where the
/// incident field is known to equal `1/2` exactly: the impulse has unit
/// mass and no reflection can return that early. Defaults cover two grid
/// cells in space and the time range before the earliest target echo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionWindow {
    /// Time extent of the pinned plateau.
    pub t_window: f64,
    /// Spatial extent within which the sensor must sit for the pin to be
    /// physically valid.
    pub x_window: f64,
}

impl Default for CorrectionWindow {
    fn default() -> Self {
        CorrectionWindow { t_window: 0.26, x_window: 0.0067 }
    }
}

/// Solves the forward problem for a coefficient profile on a grid.
///
/// Time stepping: centered second difference in time, with the spatial
/// second difference applied to the time average `(u^{j+1} + 2u^j +
/// u^{j-1}) / 4`. The averaging keeps the step implicit (tridiagonal,
/// unconditionally stable) and keeps every numerical phase speed at or
/// below the physical one, so no spurious signal runs ahead of the front.
/// The absorbing rows are first-order one-sided (backward in time,
/// one-sided in space). The first level is seeded as
/// `u(x, dt) = dt * smoothed_delta(x)`.
pub fn solve_forward(c: &CoefficientProfile, grid: &ForwardGrid) -> Result<WaveField> {
    let (nx, nt) = (grid.nx, grid.nt);
    let dx = grid.dx();
    let dt = grid.dt();
    if dx > 1.0 / 150.0 {
        log::warn!(
            "forward grid dx = {dx:.5} under-resolves the impulse width 1/30; \
             expect a distorted source"
        );
    }

    let cs: Vec<f64> = (0..nx).map(|i| c.value_at(grid.x(i))).collect();
    let r = dt * dt / (dx * dx);

    // Tridiagonal rows: absorbing at both ends, implicit wave row inside.
    let mut sub = vec![0.0; nx];
    let mut diag = vec![0.0; nx];
    let mut sup = vec![0.0; nx];
    diag[0] = 1.0 / dt + 1.0 / dx;
    sup[0] = -1.0 / dx;
    for i in 1..nx - 1 {
        sub[i] = -0.25 * r;
        diag[i] = cs[i] + 0.5 * r;
        sup[i] = -0.25 * r;
    }
    sub[nx - 1] = -1.0 / dx;
    diag[nx - 1] = 1.0 / dt + 1.0 / dx;

    // The matrix is the same at every step: prefactor the Thomas sweep.
    let mut cp = vec![0.0; nx];
    let mut inv_den = vec![0.0; nx];
    inv_den[0] = 1.0 / diag[0];
    cp[0] = sup[0] * inv_den[0];
    for i in 1..nx {
        let den = diag[i] - sub[i] * cp[i - 1];
        if den.abs() < 1e-300 {
            return Err(Error::Numerical("tridiagonal pivot vanished".into()));
        }
        inv_den[i] = 1.0 / den;
        cp[i] = sup[i] * inv_den[i];
    }

    let mut values = vec![0.0; nx * nt];
    for i in 0..nx {
        values[nx + i] = dt * smoothed_delta(grid.x(i));
    }

    let mut rhs = vec![0.0; nx];
    let mut dp = vec![0.0; nx];
    for j in 1..nt - 1 {
        {
            let cur = &values[j * nx..(j + 1) * nx];
            let prev = &values[(j - 1) * nx..j * nx];
            rhs[0] = cur[0] / dt;
            for i in 1..nx - 1 {
                let avg_xx = 2.0 * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1])
                    + (prev[i + 1] - 2.0 * prev[i] + prev[i - 1]);
                rhs[i] = cs[i] * (2.0 * cur[i] - prev[i]) + 0.25 * r * avg_xx;
            }
            rhs[nx - 1] = cur[nx - 1] / dt;
        }
        dp[0] = rhs[0] * inv_den[0];
        for i in 1..nx {
            dp[i] = (rhs[i] - sub[i] * dp[i - 1]) * inv_den[i];
        }
        let next = &mut values[(j + 1) * nx..(j + 2) * nx];
        next[nx - 1] = dp[nx - 1];
        for i in (0..nx - 1).rev() {
            next[i] = dp[i] - cp[i] * next[i + 1];
        }
    }

    Ok(WaveField { grid: grid.clone(), values })
}

/// Extracts the sensor trace at position `eps`, snapped to the nearest
/// grid node.
pub fn extract_boundary_data(field: &WaveField, eps: f64) -> Result<BoundaryData> {
    if !(eps > -field.grid.a && eps < field.grid.a) {
        return Err(Error::InvalidInput(format!(
            "sensor position {eps} outside the open interval (-a, a)"
        )));
    }
    let i = field.grid.nearest_node(eps);
    let snapped = field.grid.x(i);
    if (snapped - eps).abs() > 1e-12 {
        log::debug!("sensor snapped from {eps} to grid node {snapped}");
    }
    let nt = field.grid.nt;
    let times = (0..nt).map(|j| field.grid.t(j)).collect();
    let g0 = (0..nt).map(|j| field.value(i, j)).collect();
    Ok(BoundaryData { times, g0, g1: None, noise_level: 0.0, corrected_until: None })
}

/// Replaces the trace by its known exact value `1/2` on `[0, t_window]`.
///
/// The incident impulse has unit mass, so directly behind the front the
/// field equals `1/2` until the first target echo arrives; pinning the
/// window removes the mollified ramp the discrete impulse produces there.
pub fn correct_near_origin(data: &BoundaryData, window: &CorrectionWindow) -> Result<BoundaryData> {
    if !(window.t_window >= 0.0 && window.t_window < *data.times.last().unwrap()) {
        return Err(Error::InvalidInput(format!(
            "correction window {} outside the recorded range",
            window.t_window
        )));
    }
    let mut out = data.clone();
    for (t, g) in out.times.iter().zip(out.g0.iter_mut()) {
        if *t <= window.t_window {
            *g = 0.5;
        }
    }
    out.g1 = None;
    out.corrected_until = Some(window.t_window);
    Ok(out)
}

/// Applies multiplicative measurement noise `g0 * (1 + delta * r)` with
/// `r` uniform on `[-1, 1]`, seeded for reproducibility.
///
/// A zero level returns the data unchanged without touching the generator.
/// If the data carries a corrected window, the pinned values are re-imposed
/// after the noise, since the correction models exact prior knowledge.
pub fn add_noise(data: &BoundaryData, delta: f64, seed: u64) -> Result<BoundaryData> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("noise level must be in [0, 1), got {delta}")));
    }
    if delta == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for g in out.g0.iter_mut() {
        let r: f64 = rng.gen_range(-1.0..=1.0);
        *g *= 1.0 + delta * r;
    }
    if let Some(tw) = out.corrected_until {
        for (t, g) in out.times.iter().zip(out.g0.iter_mut()) {
            if *t <= tw {
                *g = 0.5;
            }
        }
    }
    out.g1 = None;
    out.noise_level = delta;
    Ok(out)
}
