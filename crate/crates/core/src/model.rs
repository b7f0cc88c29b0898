//! Problem geometry and coefficient models.
//!
//! The forward simulation lives on a symmetric interval `[-a, a]` so that
//! both ends can absorb outgoing waves; the inversion lives on the
//! rectangle `[eps, xmax] x [0, T]` in shifted time. Coefficient profiles
//! are sampled curves with linear interpolation, equal to 1 outside their
//! sampled range.

use crate::{Error, Result};

/// Inverse of the mollifier width: the impulse approximates a point source
/// with standard deviation `1/IMPULSE_SHARPNESS`.
pub const IMPULSE_SHARPNESS: f64 = 30.0;

/// Uniform grid for the forward wave solve on `[-a, a] x [0, t_final]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardGrid {
    /// Half-width of the spatial interval; ends absorb outgoing waves.
    pub a: f64,
    /// Final simulated time.
    pub t_final: f64,
    /// Number of spatial nodes (including both ends).
    pub nx: usize,
    /// Number of time levels (including `t = 0`).
    pub nt: usize,
}

impl ForwardGrid {
    /// Validates and builds a forward grid.
    pub fn new(a: f64, t_final: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("half-width a must be positive, got {a}")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if nx < 3 || nt < 3 {
            return Err(Error::InvalidInput(format!(
                "forward grid needs at least 3 nodes per axis, got nx={nx}, nt={nt}"
            )));
        }
        Ok(ForwardGrid { a, t_final, nx, nt })
    }

    /// Spatial step.
    pub fn dx(&self) -> f64 {
        2.0 * self.a / (self.nx - 1) as f64
    }

    /// Time step.
    pub fn dt(&self) -> f64 {
        self.t_final / (self.nt - 1) as f64
    }

    /// Coordinate of spatial node `i`.
    pub fn x(&self, i: usize) -> f64 {
        -self.a + i as f64 * self.dx()
    }

    /// Coordinate of time level `j`.
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    /// Index of the spatial node nearest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let raw = ((x + self.a) / self.dx()).round();
        (raw.max(0.0) as usize).min(self.nx - 1)
    }

    /// All spatial node coordinates.
    pub fn x_axis(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Grid with the time axis extended to cover at least `t_cover`,
    /// keeping the same time step.
    pub fn extended_to(&self, t_cover: f64) -> ForwardGrid {
        if t_cover <= self.t_final {
            return self.clone();
        }
        let dt = self.dt();
        let extra = ((t_cover - self.t_final) / dt).ceil() as usize;
        ForwardGrid {
            a: self.a,
            t_final: self.t_final + extra as f64 * dt,
            nx: self.nx,
            nt: self.nt + extra,
        }
    }
}

/// Uniform grid for the inversion rectangle `[eps, xmax] x [0, t_final]`
/// in shifted time.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionGrid {
    /// Left edge: the measurement point, just in front of the targets.
    pub eps: f64,
    /// Right edge of the reconstruction interval.
    pub xmax: f64,
    /// Extent of the shifted-time axis.
    pub t_final: f64,
    /// Number of spatial nodes.
    pub mx: usize,
    /// Number of time levels.
    pub mt: usize,
}

impl InversionGrid {
    /// Validates and builds an inversion grid.
    ///
    /// At least five spatial nodes are required: two columns carry the
    /// measured Cauchy data, the last column is slaved to its neighbour by
    /// the zero-slope condition, and at least two columns must remain free.
    pub fn new(eps: f64, xmax: f64, t_final: f64, mx: usize, mt: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if !(xmax > eps) {
            return Err(Error::InvalidInput(format!(
                "xmax must exceed eps, got eps={eps}, xmax={xmax}"
            )));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if mx < 5 || mt < 5 {
            return Err(Error::InvalidInput(format!(
                "inversion grid needs at least 5 nodes per axis, got mx={mx}, mt={mt}"
            )));
        }
        Ok(InversionGrid { eps, xmax, t_final, mx, mt })
    }

    /// Spatial step.
    pub fn dx(&self) -> f64 {
        (self.xmax - self.eps) / (self.mx - 1) as f64
    }

    /// Time step.
    pub fn dt(&self) -> f64 {
        self.t_final / (self.mt - 1) as f64
    }

    /// Coordinate of spatial node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.eps + i as f64 * self.dx()
    }

    /// Coordinate of time level `j`.
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    /// Flat index of node `(i, j)` in a row-major field (time fastest).
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.mt + j
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.mx * self.mt
    }

    /// True when the grid holds no nodes (never, for validated grids).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All spatial node coordinates.
    pub fn x_axis(&self) -> Vec<f64> {
        (0..self.mx).map(|i| self.x(i)).collect()
    }
}

/// A sampled dielectric profile with linear interpolation between samples.
///
/// The profile equals 1 outside the sampled range, matching the physical
/// assumption that targets sit strictly inside the interval of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProfile {
    /// Strictly increasing sample coordinates.
    pub x: Vec<f64>,
    /// Sample values, `>= 1` everywhere.
    pub values: Vec<f64>,
}

impl CoefficientProfile {
    /// Validates and builds a profile from samples.
    pub fn new(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if x.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "axis and values differ in length: {} vs {}",
                x.len(),
                values.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("profile needs at least 2 samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("profile axis must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 1.0 - 1e-12) {
            return Err(Error::InvalidInput(format!(
                "profile values must be finite and >= 1, got {v}"
            )));
        }
        Ok(CoefficientProfile { x, values })
    }

    /// Constant background `c = 1` sampled on `axis`.
    pub fn homogeneous(axis: &[f64]) -> Result<Self> {
        CoefficientProfile::new(axis.to_vec(), vec![1.0; axis.len()])
    }

    /// Profile value at `x`, by linear interpolation; 1 outside the axis.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x < self.x[0] || x > self.x[n - 1] {
            return 1.0;
        }
        match self.x.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(k) => self.values[k],
            Err(k) => {
                // x lies strictly between nodes k-1 and k
                let (x0, x1) = (self.x[k - 1], self.x[k]);
                let w = (x - x0) / (x1 - x0);
                self.values[k - 1] * (1.0 - w) + self.values[k] * w
            }
        }
    }

    /// Largest sampled value.
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Sample coordinate of the largest value.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for k in 1..self.values.len() {
            if self.values[k] > self.values[best] {
                best = k;
            }
        }
        self.x[best]
    }
}

/// Smooth bump `exp(y^2 / (y^2 - r^2))` on `|y| < r`, zero outside.
///
/// Equals 1 at `y = 0` and decays to 0 with all derivatives at `|y| = r`.
fn bump(y: f64, r: f64) -> f64 {
    if y.abs() < r {
        let y2 = y * y;
        (y2 / (y2 - r * r)).exp()
    } else {
        0.0
    }
}

/// One of the four benchmark targets, sampled on `axis`.
///
/// * 1: a single smooth inclusion peaking at `c = 15` at `x = 1`;
/// * 2: two smooth inclusions peaking at 6 (`x = 0.6`) and 9 (`x = 1.4`);
/// * 3: a step inclusion `c = 10` on `|x - 1| < 0.15`;
/// * 4: a wide gentle inclusion around `x = 0.9` next to a step of 8 on
///   `|x - 2| < 0.37`.
pub fn make_true_profile(kind: u8, axis: &[f64]) -> Result<CoefficientProfile> {
    let f: fn(f64) -> f64 = match kind {
        1 => |x| 1.0 + 14.0 * bump(x - 1.0, 0.2),
        2 => |x| 1.0 + 5.0 * bump(x - 0.6, 0.2) + 8.0 * bump(x - 1.4, 0.3),
        3 => |x| if (x - 1.0).abs() < 0.15 { 10.0 } else { 1.0 },
        4 => |x| {
            if (x - 0.9).abs() < 0.5 {
                3.5 + 0.3 * (std::f64::consts::PI * (x - 1.35)).sin()
            } else if (x - 2.0).abs() < 0.37 {
                8.0
            } else {
                1.0
            }
        },
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown test case {kind}, expected 1..=4"
            )))
        }
    };
    CoefficientProfile::new(axis.to_vec(), axis.iter().map(|&x| f(x)).collect())
}

/// Travel time `tau(x) = int_0^x sqrt(c(s)) ds` for `x >= 0`.
///
/// The integrand is the interpolated profile, so the result is the exact
/// integral of the piecewise-linear square root approximation evaluated by
/// the trapezoid rule over the profile's own breakpoints.
pub fn travel_time(c: &CoefficientProfile, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidInput(format!("travel time needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // Breakpoints: 0, every profile node strictly inside (0, x), then x.
    let mut tau = 0.0;
    let mut s_prev = 0.0;
    let mut f_prev = c.value_at(0.0).sqrt();
    for (&xk, _) in c.x.iter().zip(&c.values) {
        if xk <= 0.0 {
            continue;
        }
        if xk >= x {
            break;
        }
        let f = c.value_at(xk).sqrt();
        tau += 0.5 * (f_prev + f) * (xk - s_prev);
        s_prev = xk;
        f_prev = f;
    }
    let f_end = c.value_at(x).sqrt();
    tau += 0.5 * (f_prev + f_end) * (x - s_prev);
    Ok(tau)
}

/// Mollified point impulse `(s / sqrt(2 pi)) exp(-(s x)^2 / 2)` with
/// sharpness `s = 30`: unit mass, effective width about `0.1`.
pub fn smoothed_delta(x: f64) -> f64 {
    let s = IMPULSE_SHARPNESS;
    let sx = s * x;
    s / (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * sx * sx).exp()
}

/// Exponential weight `exp(-2 lambda (x + alpha t))` attached to the
/// residual rows of the inversion functionals.
///
/// Large values sit near the measurement corner `(x, t) = (0, 0)`; the rate
/// `lambda` controls how sharply trust decays with depth and shifted time.
pub fn carleman_weight(x: f64, t: f64, lambda: f64, alpha: f64) -> f64 {
    (-2.0 * lambda * (x + alpha * t)).exp()
}
