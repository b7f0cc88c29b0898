//! Weighted quadratic functionals in travel-time coordinates.
//!
//! After the change of variables that places the incident front at time
//! zero, the shifted field `q(x, t) = u(x, t + tau(x))` satisfies a
//! quasilinear equation whose coefficients depend on `q` through its own
//! trace at `t = 0`. Freezing the trace at the previous sweep turns each
//! sweep into an affine least-squares problem. The equation residual is
//! weighted with the decaying exponential `exp(-lambda (x + alpha t))`,
//! which makes the sweep-to-sweep map a contraction regardless of the
//! starting point, and a small Sobolev penalty keeps each sweep well posed.
//!
//! [`QuadraticSystem`] holds one sweep's rows; [`run_algorithm`] drives the
//! sweeps and reads the dielectric profile off the converged trace.

use crate::forward::BoundaryData;
use crate::model::{carleman_weight, CoefficientProfile, InversionGrid};
use crate::optim::{self, SolveOptions};
use crate::{Error, Result};

/// Largest dielectric value the reconstruction admits by default.
pub const C_MAX_DEFAULT: f64 = 16.0;

/// Admissible range for the trace `q(x, 0)`, derived from the dielectric
/// bounds `1 <= c <= c_max` through `q(x, 0) = 1 / (2 c^{1/4})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QClamp {
    /// Smallest admissible trace value, `1 / (2 c_max^{1/4})`.
    pub lo: f64,
    /// Largest admissible trace value, `1/2`.
    pub hi: f64,
}

impl QClamp {
    /// Clamp bounds for dielectric values in `[1, c_max]`.
    pub fn from_c_max(c_max: f64) -> Result<Self> {
        if !(c_max > 1.0 && c_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dielectric upper bound must exceed 1, got {c_max}"
            )));
        }
        Ok(QClamp { lo: 0.5 / c_max.powf(0.25), hi: 0.5 })
    }

    /// Projects a trace value into the admissible range.
    pub fn apply(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

impl Default for QClamp {
    fn default() -> Self {
        QClamp::from_c_max(C_MAX_DEFAULT).unwrap()
    }
}

/// Weight and penalty configuration of the sweep functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanParams {
    /// Decay rate of the exponential weight. Must exceed 1.
    pub lambda: f64,
    /// Slope of the time term inside the weight. Must lie in (0, 1/2).
    pub alpha: f64,
    /// Sobolev penalty strength. Must lie in (0, 1).
    pub beta: f64,
    /// Number of sweeps to run before giving up on the stopping rule.
    pub n_iters: usize,
}

impl Default for CarlemanParams {
    fn default() -> Self {
        CarlemanParams { lambda: 2.0, alpha: 0.3, beta: 1e-11, n_iters: 10 }
    }
}

impl CarlemanParams {
    /// Checks the parameter ranges the contraction argument needs.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight decay rate must exceed 1, got {}",
                self.lambda
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidInput(format!(
                "weight time slope must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "penalty strength must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.n_iters == 0 {
            return Err(Error::InvalidInput("need at least one sweep".into()));
        }
        Ok(())
    }
}

/// A field on the inversion grid, stored with time contiguous per column.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    /// The grid the samples live on.
    pub grid: InversionGrid,
    /// Samples indexed by `grid.idx(i, j)`.
    pub values: Vec<f64>,
}

impl QField {
    /// A constant field.
    pub fn constant(grid: &InversionGrid, v: f64) -> QField {
        QField { grid: grid.clone(), values: vec![v; grid.len()] }
    }

    /// Sample at node `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// The trace `q(x, 0)` along the space axis.
    pub fn t_zero_line(&self) -> Vec<f64> {
        (0..self.grid.mx).map(|i| self.value(i, 0)).collect()
    }

    /// Time derivative on the full grid, second order everywhere
    /// (one-sided at the first and last time levels).
    pub fn time_derivative(&self) -> Vec<f64> {
        let (mx, mt, dt) = (self.grid.mx, self.grid.mt, self.grid.dt());
        let mut out = vec![0.0; self.values.len()];
        for i in 0..mx {
            let q = |j: usize| self.value(i, j);
            out[self.grid.idx(i, 0)] = (-3.0 * q(0) + 4.0 * q(1) - q(2)) / (2.0 * dt);
            for j in 1..mt - 1 {
                out[self.grid.idx(i, j)] = (q(j + 1) - q(j - 1)) / (2.0 * dt);
            }
            out[self.grid.idx(i, mt - 1)] =
                (3.0 * q(mt - 1) - 4.0 * q(mt - 2) + q(mt - 3)) / (2.0 * dt);
        }
        out
    }
}

/// Second-order derivative of a sampled line, one-sided at the ends.
fn derivative_line(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    out
}

/// What a row of the least-squares system measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Weighted equation residual at a node.
    Pde,
    /// Sobolev penalty stencil at a node.
    Reg,
}

/// Whether a grid unknown is eliminated by the boundary data or solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    /// Value pinned by the measured boundary columns.
    Fixed,
    /// Index into the reduced vector of unknowns.
    Free(usize),
}

/// One row of the system, borrowed from [`QuadraticSystem`].
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    /// What the row measures.
    pub kind: RowKind,
    /// Full-grid node id the row is anchored at.
    pub anchor: usize,
    /// Multiplier applied to the whole row.
    pub weight: f64,
    /// Constant term inside the squared expression.
    pub constant: f64,
    /// Full-grid node ids of the row's stencil.
    pub cols: &'a [usize],
    /// Stencil coefficients.
    pub coeffs: &'a [f64],
}

/// One sweep's affine least-squares problem
/// `J(q) = sum_r weight_r^2 (sum_k coeff_rk q_k + const_r)^2`
/// over the full grid, together with the boundary elimination that maps it
/// onto the reduced vector of interior unknowns.
///
/// The first two space columns are pinned to the measured trace and its
/// slope; the last column is tied to its neighbor so the far edge has zero
/// slope. Unknowns are numbered time-major so the normal equations stay
/// banded.
#[derive(Debug, Clone)]
pub struct QuadraticSystem {
    grid: InversionGrid,
    nfx: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    coeffs: Vec<f64>,
    row_weight: Vec<f64>,
    row_const: Vec<f64>,
    row_kind: Vec<RowKind>,
    row_anchor: Vec<usize>,
    fixed: Vec<f64>,
}

impl QuadraticSystem {
    /// The grid the system discretizes.
    pub fn grid(&self) -> &InversionGrid {
        &self.grid
    }

    /// Number of reduced unknowns.
    pub fn n_free(&self) -> usize {
        self.nfx * self.grid.mt
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.row_weight.len()
    }

    /// Row `r` of the system.
    pub fn row(&self, r: usize) -> RowView<'_> {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        RowView {
            kind: self.row_kind[r],
            anchor: self.row_anchor[r],
            weight: self.row_weight[r],
            constant: self.row_const[r],
            cols: &self.cols[span.clone()],
            coeffs: &self.coeffs[span],
        }
    }

    /// Role of the grid node `(i, j)` in the reduced system.
    pub fn dof(&self, i: usize, j: usize) -> Dof {
        let mx = self.grid.mx;
        if i < 2 {
            Dof::Fixed
        } else if i == mx - 1 {
            Dof::Free(j * self.nfx + (mx - 4))
        } else {
            Dof::Free(j * self.nfx + (i - 2))
        }
    }

    /// Role of a full-grid node id in the reduced system.
    pub fn dof_of(&self, full_idx: usize) -> Dof {
        let mt = self.grid.mt;
        self.dof(full_idx / mt, full_idx % mt)
    }

    /// Semi-bandwidth of the reduced normal equations: the largest index
    /// distance between two unknowns sharing a row.
    pub fn semi_bandwidth(&self) -> usize {
        (2 * self.nfx + 2).min(self.n_free().saturating_sub(1))
    }

    /// Expands a reduced vector to the full grid, filling the boundary
    /// columns from the data and copying the tied edge column.
    pub fn embed(&self, free: &[f64]) -> QField {
        assert_eq!(free.len(), self.n_free(), "reduced vector has the wrong length");
        let (mx, mt) = (self.grid.mx, self.grid.mt);
        let mut values = vec![0.0; self.grid.len()];
        for i in 0..mx {
            for j in 0..mt {
                let idx = self.grid.idx(i, j);
                values[idx] = match self.dof(i, j) {
                    Dof::Fixed => self.fixed[idx],
                    Dof::Free(k) => free[k],
                };
            }
        }
        QField { grid: self.grid.clone(), values }
    }

    /// Extracts the reduced vector from a full field. The boundary columns
    /// and the tied edge column of the field are ignored.
    pub fn restrict(&self, field: &QField) -> Vec<f64> {
        assert_eq!(field.grid, self.grid, "field lives on a different grid");
        let (mx, mt) = (self.grid.mx, self.grid.mt);
        let mut free = vec![0.0; self.n_free()];
        for i in 2..mx - 1 {
            for j in 0..mt {
                free[j * self.nfx + (i - 2)] = field.value(i, j);
            }
        }
        free
    }

    /// Weighted residual of every row on an arbitrary full field. The
    /// boundary elimination plays no role here; the field is taken as is.
    pub fn residuals(&self, field: &QField) -> Vec<f64> {
        assert_eq!(field.grid, self.grid, "field lives on a different grid");
        (0..self.n_rows())
            .map(|r| {
                let row = self.row(r);
                let mut s = row.constant;
                for (c, a) in row.cols.iter().zip(row.coeffs) {
                    s += a * field.values[*c];
                }
                row.weight * s
            })
            .collect()
    }

    /// Value of the functional on a full field.
    pub fn objective_field(&self, field: &QField) -> f64 {
        self.residuals(field).iter().map(|r| r * r).sum()
    }

    /// Value of the functional on a reduced vector.
    pub fn objective(&self, free: &[f64]) -> f64 {
        self.objective_field(&self.embed(free))
    }

    /// Gradient of the functional with respect to the reduced vector.
    pub fn gradient(&self, free: &[f64]) -> Vec<f64> {
        let field = self.embed(free);
        let mut grad = vec![0.0; self.n_free()];
        for r in 0..self.n_rows() {
            let row = self.row(r);
            let mut s = row.constant;
            for (c, a) in row.cols.iter().zip(row.coeffs) {
                s += a * field.values[*c];
            }
            let scale = 2.0 * row.weight * row.weight * s;
            if scale == 0.0 {
                continue;
            }
            for (c, a) in row.cols.iter().zip(row.coeffs) {
                if let Dof::Free(k) = self.dof_of(*c) {
                    grad[k] += scale * a;
                }
            }
        }
        grad
    }

    /// Boundary value the elimination assigns to a pinned node.
    pub fn fixed_value(&self, i: usize, j: usize) -> f64 {
        self.fixed[self.grid.idx(i, j)]
    }
}

struct RowBuilder {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    coeffs: Vec<f64>,
    row_weight: Vec<f64>,
    row_const: Vec<f64>,
    row_kind: Vec<RowKind>,
    row_anchor: Vec<usize>,
}

impl RowBuilder {
    fn new() -> Self {
        RowBuilder {
            row_ptr: vec![0],
            cols: Vec::new(),
            coeffs: Vec::new(),
            row_weight: Vec::new(),
            row_const: Vec::new(),
            row_kind: Vec::new(),
            row_anchor: Vec::new(),
        }
    }

    fn push(
        &mut self,
        kind: RowKind,
        anchor: usize,
        weight: f64,
        constant: f64,
        entries: &[(usize, f64)],
    ) {
        for &(c, a) in entries {
            self.cols.push(c);
            self.coeffs.push(a);
        }
        self.row_ptr.push(self.cols.len());
        self.row_weight.push(weight);
        self.row_const.push(constant);
        self.row_kind.push(kind);
        self.row_anchor.push(anchor);
    }
}

/// Shared assembly of one sweep's system.
///
/// `s_coeff[i]` multiplies the mixed derivative at column `i` and `b_term`,
/// when present, is the frozen lower-order term on the full grid.
fn assemble(
    grid: &InversionGrid,
    data: &BoundaryData,
    params: &CarlemanParams,
    s_coeff: &[f64],
    b_term: Option<&[f64]>,
) -> Result<QuadraticSystem> {
    params.validate()?;
    if data.g1.is_none() {
        return Err(Error::InvalidInput(
            "boundary data has no derivative; differentiate it before inverting".into(),
        ));
    }
    let needed = grid.t_final + grid.eps;
    let recorded = *data.times.last().unwrap();
    if recorded + 1e-9 < needed {
        return Err(Error::InvalidInput(format!(
            "boundary record ends at t = {recorded} but the inversion needs t = {needed}"
        )));
    }
    let (mx, mt) = (grid.mx, grid.mt);
    assert_eq!(s_coeff.len(), mx);
    if let Some(b) = b_term {
        assert_eq!(b.len(), grid.len());
    }

    // Boundary elimination: the first column carries the measured trace,
    // the second its one-sided slope 2 g0'.
    let (dx, dt) = (grid.dx(), grid.dt());
    let mut fixed = vec![0.0; grid.len()];
    for j in 0..mt {
        let t = grid.t(j) + grid.eps;
        let g0 = data.g0_at(t);
        let g1 = data.g1_at(t)?;
        fixed[grid.idx(0, j)] = g0;
        fixed[grid.idx(1, j)] = g0 + dx * 2.0 * g1;
    }

    let mut rows = RowBuilder::new();
    let quad = (dx * dt).sqrt();
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(12);

    // Equation rows at every interior space column, all time levels.
    for i in 1..mx - 1 {
        let s = s_coeff[i];
        for j in 0..mt {
            entries.clear();
            let rxx = 1.0 / (dx * dx);
            entries.push((grid.idx(i - 1, j), rxx));
            entries.push((grid.idx(i, j), -2.0 * rxx));
            entries.push((grid.idx(i + 1, j), rxx));

            // mixed derivative, scaled by -s: centered in x, forward in t
            // (backward at the last time level). The one-sided time stencil
            // damps spurious oscillation at discontinuities of the medium.
            let cx = 1.0 / (2.0 * dx);
            let add_dxdt = |jj: usize, ct: f64, entries: &mut Vec<(usize, f64)>| {
                entries.push((grid.idx(i + 1, jj), -s * cx * ct));
                entries.push((grid.idx(i - 1, jj), s * cx * ct));
            };
            if j + 1 < mt {
                add_dxdt(j + 1, 1.0 / dt, &mut entries);
                add_dxdt(j, -1.0 / dt, &mut entries);
            } else {
                add_dxdt(mt - 1, 1.0 / dt, &mut entries);
                add_dxdt(mt - 2, -1.0 / dt, &mut entries);
            }

            let anchor = grid.idx(i, j);
            let constant = b_term.map_or(0.0, |b| b[anchor]);
            let weight =
                carleman_weight(grid.x(i), grid.t(j), params.lambda, params.alpha).sqrt() * quad;
            rows.push(RowKind::Pde, anchor, weight, constant, &entries);
        }
    }

    // Sobolev penalty rows at every node: value always, derivatives where
    // a second-order stencil fits (first derivatives fall back to one-sided
    // two-point stencils at the edges).
    let wreg = (params.beta * dx * dt).sqrt();
    for i in 0..mx {
        for j in 0..mt {
            let anchor = grid.idx(i, j);
            rows.push(RowKind::Reg, anchor, wreg, 0.0, &[(anchor, 1.0)]);

            let dx_entries: Vec<(usize, f64)> = if i == 0 {
                vec![(grid.idx(1, j), 1.0 / dx), (grid.idx(0, j), -1.0 / dx)]
            } else if i == mx - 1 {
                vec![(grid.idx(mx - 1, j), 1.0 / dx), (grid.idx(mx - 2, j), -1.0 / dx)]
            } else {
                vec![(grid.idx(i + 1, j), 0.5 / dx), (grid.idx(i - 1, j), -0.5 / dx)]
            };
            rows.push(RowKind::Reg, anchor, wreg, 0.0, &dx_entries);

            let dt_entries: Vec<(usize, f64)> = if j == 0 {
                vec![(grid.idx(i, 1), 1.0 / dt), (grid.idx(i, 0), -1.0 / dt)]
            } else if j == mt - 1 {
                vec![(grid.idx(i, mt - 1), 1.0 / dt), (grid.idx(i, mt - 2), -1.0 / dt)]
            } else {
                vec![(grid.idx(i, j + 1), 0.5 / dt), (grid.idx(i, j - 1), -0.5 / dt)]
            };
            rows.push(RowKind::Reg, anchor, wreg, 0.0, &dt_entries);

            if i > 0 && i < mx - 1 {
                let r = 1.0 / (dx * dx);
                rows.push(
                    RowKind::Reg,
                    anchor,
                    wreg,
                    0.0,
                    &[
                        (grid.idx(i - 1, j), r),
                        (grid.idx(i, j), -2.0 * r),
                        (grid.idx(i + 1, j), r),
                    ],
                );
            }
            if j > 0 && j < mt - 1 {
                let r = 1.0 / (dt * dt);
                rows.push(
                    RowKind::Reg,
                    anchor,
                    wreg,
                    0.0,
                    &[
                        (grid.idx(i, j - 1), r),
                        (grid.idx(i, j), -2.0 * r),
                        (grid.idx(i, j + 1), r),
                    ],
                );
            }
            if i > 0 && i < mx - 1 && j > 0 && j < mt - 1 {
                let r = 1.0 / (4.0 * dx * dt);
                rows.push(
                    RowKind::Reg,
                    anchor,
                    wreg,
                    0.0,
                    &[
                        (grid.idx(i + 1, j + 1), r),
                        (grid.idx(i - 1, j - 1), r),
                        (grid.idx(i + 1, j - 1), -r),
                        (grid.idx(i - 1, j + 1), -r),
                    ],
                );
            }
        }
    }

    Ok(QuadraticSystem {
        grid: grid.clone(),
        nfx: mx - 3,
        row_ptr: rows.row_ptr,
        cols: rows.cols,
        coeffs: rows.coeffs,
        row_weight: rows.row_weight,
        row_const: rows.row_const,
        row_kind: rows.row_kind,
        row_anchor: rows.row_anchor,
        fixed,
    })
}

/// First sweep's system: the previous field is the constant 1/2 carried by
/// the incident front, so the mixed derivative takes coefficient 2 and the
/// lower-order term vanishes.
pub fn assemble_functional_0(
    grid: &InversionGrid,
    data: &BoundaryData,
    params: &CarlemanParams,
) -> Result<QuadraticSystem> {
    let s = vec![2.0; grid.mx];
    assemble(grid, data, params, &s, None)
}

/// Later sweeps' system, with coefficients frozen at the previous field.
///
/// The trace `q(x, 0)` of the previous field enters the denominators; with
/// `denom_clamp` present it is projected into the admissible range first,
/// otherwise it only has to stay away from zero.
pub fn assemble_functional_n(
    grid: &InversionGrid,
    data: &BoundaryData,
    params: &CarlemanParams,
    prev: &QField,
    denom_clamp: Option<QClamp>,
) -> Result<QuadraticSystem> {
    if prev.grid != *grid {
        return Err(Error::InvalidInput(
            "previous field lives on a different grid".into(),
        ));
    }
    let trace: Vec<f64> = match denom_clamp {
        Some(clamp) => prev.t_zero_line().iter().map(|&v| clamp.apply(v)).collect(),
        None => {
            let raw = prev.t_zero_line();
            if let Some(v) = raw.iter().find(|v| v.abs() < 0.05) {
                return Err(Error::Numerical(format!(
                    "trace value {v} too close to zero for unclamped denominators"
                )));
            }
            raw
        }
    };
    let s_coeff: Vec<f64> = trace.iter().map(|&q0| 1.0 / (2.0 * q0 * q0)).collect();

    let qt = prev.time_derivative();
    let trace_dx = derivative_line(&trace, grid.dx());
    let mut b = vec![0.0; grid.len()];
    for i in 0..grid.mx {
        let factor = trace_dx[i] / (2.0 * trace[i].powi(3));
        for j in 0..grid.mt {
            let idx = grid.idx(i, j);
            b[idx] = qt[idx] * factor;
        }
    }
    assemble(grid, data, params, &s_coeff, Some(&b))
}

/// Reads the dielectric profile off the trace of a field: the trace is
/// projected into the admissible range and inverted through
/// `c = 1 / (2 q(x, 0))^4`.
pub fn reconstruct_c(q: &QField, clamp: QClamp) -> Result<CoefficientProfile> {
    let values: Vec<f64> = q
        .t_zero_line()
        .iter()
        .map(|&v| {
            let q0 = clamp.apply(v);
            1.0 / (2.0 * q0).powi(4)
        })
        .collect();
    CoefficientProfile::new(q.grid.x_axis(), values)
}

/// Squared Sobolev norm of a field: the sum over nodes of the squared value
/// and its first and second difference quotients, times the cell area. The
/// stencils match the penalty rows of [`QuadraticSystem`] exactly.
pub fn h2_norm_sq(field: &QField) -> f64 {
    let g = &field.grid;
    let (mx, mt, dx, dt) = (g.mx, g.mt, g.dx(), g.dt());
    let q = |i: usize, j: usize| field.values[g.idx(i, j)];
    let mut sum = 0.0;
    for i in 0..mx {
        for j in 0..mt {
            let mut node = q(i, j) * q(i, j);
            let qx = if i == 0 {
                (q(1, j) - q(0, j)) / dx
            } else if i == mx - 1 {
                (q(mx - 1, j) - q(mx - 2, j)) / dx
            } else {
                (q(i + 1, j) - q(i - 1, j)) / (2.0 * dx)
            };
            node += qx * qx;
            let qt = if j == 0 {
                (q(i, 1) - q(i, 0)) / dt
            } else if j == mt - 1 {
                (q(i, mt - 1) - q(i, mt - 2)) / dt
            } else {
                (q(i, j + 1) - q(i, j - 1)) / (2.0 * dt)
            };
            node += qt * qt;
            if i > 0 && i < mx - 1 {
                let qxx = (q(i - 1, j) - 2.0 * q(i, j) + q(i + 1, j)) / (dx * dx);
                node += qxx * qxx;
            }
            if j > 0 && j < mt - 1 {
                let qtt = (q(i, j - 1) - 2.0 * q(i, j) + q(i, j + 1)) / (dt * dt);
                node += qtt * qtt;
            }
            if i > 0 && i < mx - 1 && j > 0 && j < mt - 1 {
                let qxt = (q(i + 1, j + 1) + q(i - 1, j - 1) - q(i + 1, j - 1)
                    - q(i - 1, j + 1))
                    / (4.0 * dx * dt);
                node += qxt * qxt;
            }
            sum += node * dx * dt;
        }
    }
    sum
}

/// How each sweep's quadratic problem is minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepSolver {
    /// Banded normal equations, factored directly.
    Direct,
    /// Explicit gradient descent on the reduced unknowns.
    GradientDescent {
        /// Initial step size; halved until the first step decreases the
        /// objective, then held.
        eta: f64,
        /// Number of descent steps per sweep.
        k_max: usize,
    },
    /// Gradient projection on the shifted unknowns, constrained to a ball.
    GradientProjection {
        /// Initial step size, handled as in gradient descent.
        eta: f64,
        /// Number of steps per sweep.
        k_max: usize,
        /// Ball radius in the Sobolev surrogate norm; the shifted iterate
        /// is scaled back when it leaves the ball.
        radius: f64,
    },
}

/// Knobs of [`run_algorithm`] that are not weight parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Stop when consecutive profiles differ by less than this in relative
    /// sup norm.
    pub tol: f64,
    /// Admissible trace range used for denominators and reconstruction.
    pub clamp: QClamp,
    /// Keep denominators unclamped (the trace only has to stay away from
    /// zero). Reconstruction stays clamped either way.
    pub relaxed_denominators: bool,
    /// Minimizer used for each sweep.
    pub solver: SweepSolver,
    /// Depth up to which consecutive profiles are compared. A record of
    /// length `T` pins the profile only where the round trip `2 tau(x)`
    /// fits inside it; past that depth the reconstruction is an
    /// extrapolation and its fluctuations should not drive the stopping
    /// rule. Infinity compares whole profiles.
    pub trust_depth: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: 1e-3,
            clamp: QClamp::default(),
            relaxed_denominators: false,
            solver: SweepSolver::Direct,
            trust_depth: f64::INFINITY,
        }
    }
}

/// One row of the convergence record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// Sweep number, starting at 0.
    pub iter: usize,
    /// Relative sup-norm distance to the previous sweep's profile over the
    /// trusted depth (the first sweep is compared against the homogeneous
    /// background).
    pub consec_err: f64,
    /// Functional value at the sweep's minimizer.
    pub objective: f64,
    /// Euclidean norm of the reduced gradient at the minimizer.
    pub grad_norm: f64,
    /// Wall-clock seconds the sweep took.
    pub seconds: f64,
}

/// Convergence record of a reconstruction run.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    /// Per-sweep statistics.
    pub rows: Vec<TraceRow>,
    /// Profile reconstructed after each sweep.
    pub profiles: Vec<CoefficientProfile>,
    /// Whether the stopping rule fired before the sweep budget ran out.
    pub converged: bool,
}

impl IterationTrace {
    /// The profile of the last completed sweep.
    pub fn final_profile(&self) -> &CoefficientProfile {
        self.profiles.last().expect("a run always records at least one sweep")
    }
}

/// Relative sup-norm distance between two profiles on the same axis,
/// measured over the first `cut` samples.
fn consecutive_error(cur: &CoefficientProfile, prev: &[f64], cut: usize) -> f64 {
    let diff = cur.values[..cut]
        .iter()
        .zip(prev)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let scale = cur.values[..cut].iter().cloned().fold(0.0f64, f64::max);
    diff / scale
}

/// Runs the full reconstruction: sweep 0 starts from the constant field
/// carried by the incident front, each later sweep freezes its coefficients
/// at the previous minimizer, and the loop stops when consecutive profiles
/// agree to `opts.tol` or after `params.n_iters` sweeps.
pub fn run_algorithm(
    data: &BoundaryData,
    grid: &InversionGrid,
    params: &CarlemanParams,
    opts: &RunOptions,
) -> Result<IterationTrace> {
    params.validate()?;
    let denom_clamp = if opts.relaxed_denominators { None } else { Some(opts.clamp) };

    let mut rows = Vec::new();
    let mut profiles: Vec<CoefficientProfile> = Vec::new();
    let mut converged = false;
    let mut prev_field: Option<QField> = None;
    let cut = (0..grid.mx).take_while(|&i| grid.x(i) <= opts.trust_depth).count().max(2);

    for iter in 0..params.n_iters {
        let start = std::time::Instant::now();
        let system = match &prev_field {
            None => assemble_functional_0(grid, data, params)?,
            Some(prev) => assemble_functional_n(grid, data, params, prev, denom_clamp)?,
        };
        let warm = prev_field
            .as_ref()
            .map(|f| system.restrict(f))
            .unwrap_or_else(|| vec![0.5; system.n_free()]);
        let free = minimize_sweep(&system, warm, &opts.solver)?;
        let field = system.embed(&free);
        let profile = reconstruct_c(&field, opts.clamp)?;

        let prev_values: Vec<f64> = match profiles.last() {
            Some(p) => p.values[..cut].to_vec(),
            None => vec![1.0; cut],
        };
        let consec_err = consecutive_error(&profile, &prev_values, cut);
        let grad = system.gradient(&free);
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        rows.push(TraceRow {
            iter,
            consec_err,
            objective: system.objective(&free),
            grad_norm,
            seconds: start.elapsed().as_secs_f64(),
        });
        profiles.push(profile);
        prev_field = Some(field);

        if iter > 0 && consec_err < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(IterationTrace { rows, profiles, converged })
}

fn minimize_sweep(
    system: &QuadraticSystem,
    warm: Vec<f64>,
    solver: &SweepSolver,
) -> Result<Vec<f64>> {
    match *solver {
        SweepSolver::Direct => optim::solve_direct(system, &SolveOptions::default()),
        SweepSolver::GradientDescent { eta, k_max } => {
            optim::gradient_descent(system, warm, eta, k_max)
        }
        SweepSolver::GradientProjection { eta, k_max, radius } => {
            optim::gradient_projection(system, warm, eta, k_max, radius)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::BoundaryData;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Boundary record long enough for `grid`, with a constant trace and
    /// zero slope. Tests that only evaluate residuals on explicit fields do
    /// not care about the boundary values themselves.
    fn flat_data(grid: &InversionGrid) -> BoundaryData {
        let t_end = grid.t_final + grid.eps + 0.1;
        let n = 400;
        let times: Vec<f64> = (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect();
        BoundaryData {
            times: times.clone(),
            g0: vec![0.5; n],
            g1: Some(vec![0.0; n]),
            noise_level: 0.0,
            corrected_until: None,
        }
    }

    fn small_grid() -> InversionGrid {
        InversionGrid::new(0.02, 1.0, 1.0, 9, 8).unwrap()
    }

    #[test]
    fn first_sweep_equals_frozen_constant_half() {
        let grid = small_grid();
        let data = flat_data(&grid);
        let params = CarlemanParams::default();
        let a = assemble_functional_0(&grid, &data, &params).unwrap();
        let prev = QField::constant(&grid, 0.5);
        let b = assemble_functional_n(&grid, &data, &params, &prev, Some(QClamp::default()))
            .unwrap();
        assert_eq!(a.n_rows(), b.n_rows());
        for r in 0..a.n_rows() {
            let (ra, rb) = (a.row(r), b.row(r));
            assert_eq!(ra.cols, rb.cols);
            assert_eq!(ra.coeffs, rb.coeffs, "row {r} coefficients differ");
            assert_eq!(ra.constant, rb.constant, "row {r} constants differ");
            assert_eq!(ra.weight, rb.weight);
        }
    }

    #[test]
    fn equation_rows_vanish_on_affine_fields() {
        let grid = small_grid();
        let data = flat_data(&grid);
        let system =
            assemble_functional_0(&grid, &data, &CarlemanParams::default()).unwrap();
        let mut field = QField::constant(&grid, 0.0);
        for i in 0..grid.mx {
            for j in 0..grid.mt {
                field.values[grid.idx(i, j)] = 0.3 + 0.7 * grid.x(i) - 0.2 * grid.t(j);
            }
        }
        let res = system.residuals(&field);
        for r in 0..system.n_rows() {
            if system.row(r).kind == RowKind::Pde {
                assert!(
                    res[r].abs() < 1e-12,
                    "equation row {r} nonzero on affine field: {}",
                    res[r]
                );
            }
        }
    }

    #[test]
    fn objective_and_gradient_match_dense_oracle() {
        let grid = InversionGrid::new(0.02, 0.8, 0.9, 7, 6).unwrap();
        let data = flat_data(&grid);
        let params = CarlemanParams { beta: 1e-4, ..Default::default() };
        let mut prev = QField::constant(&grid, 0.0);
        for i in 0..grid.mx {
            for j in 0..grid.mt {
                prev.values[grid.idx(i, j)] =
                    0.35 + 0.05 * (3.0 * grid.x(i)).sin() * (grid.t(j)).cos();
            }
        }
        let system =
            assemble_functional_n(&grid, &data, &params, &prev, Some(QClamp::default()))
                .unwrap();
        let n = system.n_free();
        let m = system.n_rows();

        // dense affine map r(v) = A v + b recovered column by column
        let zero = vec![0.0; n];
        let b: Vec<f64> = system.residuals(&system.embed(&zero));
        let mut a = vec![vec![0.0; n]; m];
        for k in 0..n {
            let mut e = zero.clone();
            e[k] = 1.0;
            let rk = system.residuals(&system.embed(&e));
            for r in 0..m {
                a[r][k] = rk[r] - b[r];
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut expect = 0.0;
            let mut rv = vec![0.0; m];
            for r in 0..m {
                let s = b[r] + a[r].iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
                rv[r] = s;
                expect += s * s;
            }
            let got = system.objective(&v);
            assert!(
                (got - expect).abs() <= 1e-10 * (1.0 + expect),
                "objective {got} vs oracle {expect}"
            );

            let grad = system.gradient(&v);
            for k in 0..n {
                let gk: f64 = (0..m).map(|r| 2.0 * rv[r] * a[r][k]).sum();
                assert!(
                    (grad[k] - gk).abs() <= 1e-8 * (1.0 + gk.abs()),
                    "gradient component {k}: {} vs oracle {gk}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn boundary_columns_carry_the_data() {
        let grid = small_grid();
        let mut data = flat_data(&grid);
        // make the trace nontrivial so the elimination is visible
        let times = data.times.clone();
        data.g0 = times.iter().map(|t| 0.4 + 0.05 * t.sin()).collect();
        data.g1 = Some(times.iter().map(|t| 0.02 * t.cos()).collect());
        let system =
            assemble_functional_0(&grid, &data, &CarlemanParams::default()).unwrap();
        let free = vec![0.125; system.n_free()];
        let field = system.embed(&free);
        for j in 0..grid.mt {
            let t = grid.t(j) + grid.eps;
            let g0 = data.g0_at(t);
            let g1 = data.g1_at(t).unwrap();
            assert!((field.value(0, j) - g0).abs() < 1e-14);
            assert!((field.value(1, j) - (g0 + grid.dx() * 2.0 * g1)).abs() < 1e-14);
            // tied far edge keeps zero slope
            assert_eq!(field.value(grid.mx - 1, j), field.value(grid.mx - 2, j));
            assert_eq!(field.value(grid.mx - 2, j), 0.125);
        }
        // restriction undoes embedding
        assert_eq!(system.restrict(&field), free);
    }

    #[test]
    fn manufactured_field_converges_to_symbolic_residual() {
        // q(x, t) = 0.3 + 0.1 exp(-x) cos(t): the trace stays inside the
        // admissible range, so clamping is inactive and the discrete rows
        // must converge to the symbolic quasilinear residual at second
        // order.
        let symbolic = |x: f64, t: f64| {
            let e = (-x).exp();
            let q0 = 0.3 + 0.1 * e;
            let q0p = -0.1 * e;
            let qxx = 0.1 * e * t.cos();
            let qxt = 0.1 * e * t.sin();
            let qt = -0.1 * e * t.sin();
            qxx - qxt / (2.0 * q0 * q0) + qt * q0p / (2.0 * q0 * q0 * q0)
        };
        let max_err = |mx: usize, mt: usize| -> f64 {
            let grid = InversionGrid::new(0.05, 1.0, 1.0, mx, mt).unwrap();
            let data = flat_data(&grid);
            let params = CarlemanParams::default();
            let mut q = QField::constant(&grid, 0.0);
            for i in 0..grid.mx {
                for j in 0..grid.mt {
                    q.values[grid.idx(i, j)] =
                        0.3 + 0.1 * (-grid.x(i)).exp() * grid.t(j).cos();
                }
            }
            let system =
                assemble_functional_n(&grid, &data, &params, &q, Some(QClamp::default()))
                    .unwrap();
            let res = system.residuals(&q);
            let mut worst = 0.0f64;
            for r in 0..system.n_rows() {
                let row = system.row(r);
                if row.kind != RowKind::Pde {
                    continue;
                }
                let (i, j) = (row.anchor / grid.mt, row.anchor % grid.mt);
                let err = (res[r] / row.weight - symbolic(grid.x(i), grid.t(j))).abs();
                worst = worst.max(err);
            }
            worst
        };
        let coarse = max_err(41, 31);
        let fine = max_err(81, 61);
        assert!(coarse < 1e-2, "coarse residual error too large: {coarse}");
        assert!(
            coarse / fine > 3.0,
            "no second-order convergence: coarse {coarse}, fine {fine}"
        );
    }

    #[test]
    fn penalty_rows_reproduce_the_sobolev_norm() {
        let grid = small_grid();
        let data = flat_data(&grid);
        let params = CarlemanParams { beta: 1e-3, ..Default::default() };
        let system = assemble_functional_0(&grid, &data, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut field = QField::constant(&grid, 0.0);
        for v in field.values.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let res = system.residuals(&field);
        let reg_sum: f64 = (0..system.n_rows())
            .filter(|&r| system.row(r).kind == RowKind::Reg)
            .map(|r| res[r] * res[r])
            .sum();
        let expect = params.beta * h2_norm_sq(&field);
        assert!(
            (reg_sum - expect).abs() <= 1e-10 * expect,
            "penalty sum {reg_sum} vs beta * norm {expect}"
        );
    }

    #[test]
    fn reconstruction_inverts_the_trace_formula() {
        let grid = small_grid();
        let clamp = QClamp::default();
        let q = QField::constant(&grid, 0.3);
        let c = reconstruct_c(&q, clamp).unwrap();
        let expect = 1.0 / 0.6f64.powi(4);
        for v in &c.values {
            assert!((v - expect).abs() < 1e-12);
        }
        assert_eq!(c.x, grid.x_axis());

        // clamping pins out-of-range traces to the admissible ends
        let high = reconstruct_c(&QField::constant(&grid, 0.7), clamp).unwrap();
        assert!(high.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let low = reconstruct_c(&QField::constant(&grid, 0.1), clamp).unwrap();
        assert!(low.values.iter().all(|&v| (v - 16.0).abs() < 1e-9));
    }

    #[test]
    fn clamp_bounds_follow_the_admissible_range() {
        let clamp = QClamp::from_c_max(16.0).unwrap();
        assert!((clamp.lo - 0.25).abs() < 1e-12);
        assert!((clamp.hi - 0.5).abs() < 1e-12);
        assert_eq!(clamp.apply(0.3), 0.3);
        assert_eq!(clamp.apply(0.9), 0.5);
        assert_eq!(clamp.apply(-0.2), 0.25);
        assert!(QClamp::from_c_max(1.0).is_err());
        assert!(QClamp::from_c_max(0.5).is_err());
    }

    #[test]
    fn assembly_validates_inputs() {
        let grid = small_grid();
        let params = CarlemanParams::default();

        let mut no_deriv = flat_data(&grid);
        no_deriv.g1 = None;
        assert!(assemble_functional_0(&grid, &no_deriv, &params).is_err());

        let short = BoundaryData {
            times: vec![0.0, 0.1, 0.2],
            g0: vec![0.5; 3],
            g1: Some(vec![0.0; 3]),
            noise_level: 0.0,
            corrected_until: None,
        };
        assert!(assemble_functional_0(&grid, &short, &params).is_err());

        let other = InversionGrid::new(0.02, 1.0, 1.0, 11, 8).unwrap();
        let prev = QField::constant(&other, 0.4);
        let data = flat_data(&grid);
        assert!(
            assemble_functional_n(&grid, &data, &params, &prev, None).is_err(),
            "mismatched grid accepted"
        );

        let tiny = QField::constant(&grid, 0.01);
        let err = assemble_functional_n(&grid, &data, &params, &tiny, None);
        assert!(matches!(err, Err(Error::Numerical(_))), "tiny trace accepted unclamped");

        let bad = CarlemanParams { lambda: 0.5, ..Default::default() };
        assert!(assemble_functional_0(&grid, &flat_data(&grid), &bad).is_err());
        let bad = CarlemanParams { alpha: 0.7, ..Default::default() };
        assert!(assemble_functional_0(&grid, &flat_data(&grid), &bad).is_err());
        let bad = CarlemanParams { beta: 0.0, ..Default::default() };
        assert!(assemble_functional_0(&grid, &flat_data(&grid), &bad).is_err());
    }

    #[test]
    fn weights_decay_along_space_and_time() {
        let grid = small_grid();
        let data = flat_data(&grid);
        let params = CarlemanParams::default();
        let system = assemble_functional_0(&grid, &data, &params).unwrap();
        // collect equation-row weights by anchor and check monotone decay
        // in both directions
        for r in 0..system.n_rows() {
            let row = system.row(r);
            if row.kind != RowKind::Pde {
                continue;
            }
            let (i, j) = (row.anchor / grid.mt, row.anchor % grid.mt);
            let expect = carleman_weight(grid.x(i), grid.t(j), params.lambda, params.alpha)
                .sqrt()
                * (grid.dx() * grid.dt()).sqrt();
            assert!((row.weight - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn reduced_indexing_keeps_couplings_inside_the_band() {
        let grid = small_grid();
        let data = flat_data(&grid);
        let system =
            assemble_functional_0(&grid, &data, &CarlemanParams::default()).unwrap();
        let bw = system.semi_bandwidth();
        for r in 0..system.n_rows() {
            let row = system.row(r);
            let frees: Vec<usize> = row
                .cols
                .iter()
                .filter_map(|&c| match system.dof_of(c) {
                    Dof::Free(k) => Some(k),
                    Dof::Fixed => None,
                })
                .collect();
            for a in &frees {
                for b in &frees {
                    assert!(
                        a.abs_diff(*b) <= bw,
                        "row {r} couples unknowns {a} and {b} outside bandwidth {bw}"
                    );
                }
            }
        }
    }
}
