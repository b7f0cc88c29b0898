//! Turning recorded traces into inversion inputs.
//!
//! Synthetic data only needs a stabilized time derivative. Measured radar
//! traces additionally need device calibration (dimensionless scaling),
//! envelope extraction (the raw signal oscillates around zero while the
//! model expects the slowly varying reflection strength), and a bound on
//! the relative dielectric constant of the target with respect to the
//! background it sits in.

use crate::forward::BoundaryData;
use crate::model::CoefficientProfile;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Calibration factor for targets measured in air.
pub const CALIBRATION_AIR: f64 = 534_592.0;

/// Calibration factor for targets buried in the ground.
pub const CALIBRATION_GROUND: f64 = 265_223.0;

/// Where the measured target sat during acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Medium {
    /// Target standing in air.
    Air,
    /// Target buried in the ground.
    Ground,
}

impl Medium {
    /// The device calibration factor for this medium.
    pub fn calibration(&self) -> f64 {
        match self {
            Medium::Air => CALIBRATION_AIR,
            Medium::Ground => CALIBRATION_GROUND,
        }
    }
}

/// Which side of an oscillating trace carries the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeSide {
    /// Envelope through the local maxima.
    Upper,
    /// Envelope through the local minima.
    Lower,
}

/// A sampled scalar time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Strictly increasing sample times.
    pub times: Vec<f64>,
    /// Sample values.
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// Validates and builds a series.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "times and values differ in length: {} vs {}",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidInput("series needs at least 2 samples".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("series values must be finite".into()));
        }
        Ok(TimeSeries { times, values })
    }
}

/// A closed interval `[lo, hi]`, possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    /// Lower end.
    pub lo: f64,
    /// Upper end.
    pub hi: f64,
}

impl Interval {
    /// Validates and builds an interval.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// A single point as a degenerate interval.
    pub fn point(v: f64) -> Result<Self> {
        Interval::new(v, v)
    }

    /// Midpoint of the interval.
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Scales both ends by a positive factor.
    pub fn scale(&self, s: f64) -> Interval {
        Interval { lo: self.lo * s, hi: self.hi * s }
    }
}

/// What is known a priori about a measured target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetContext {
    /// Background dielectric constant: a published range, or a point
    /// interval when it is known exactly.
    pub c_bckgr: Interval,
    /// Spatial extent `[d_lo, d_hi]` the reconstruction attributes to the
    /// target.
    pub d: Interval,
}

/// A local extremum of a sampled series. Plateaus report their midpoint
/// sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    /// Sample index of the extremum (plateau midpoint).
    pub index: usize,
    /// Sample time.
    pub time: f64,
    /// Sample value.
    pub value: f64,
    /// True for a local maximum, false for a local minimum.
    pub is_max: bool,
}

/// Stabilized derivative of a uniformly sampled series.
///
/// Differentiation of noisy data is ill-posed, so instead of differencing
/// the samples this solves the regularized least-squares problem
///
/// ```text
/// min_v  || K v - (g - g(0)) ||^2  +  reg (||v||^2 + ||v'||^2)
/// ```
///
/// where `K` is cumulative trapezoid integration: the derivative is the
/// function whose running integral best explains the data, kept tame in the
/// first-order Sobolev norm. All norms carry the `dt` measure so `reg` is
/// resolution-independent.
pub fn tikhonov_derivative(series: &TimeSeries, reg: f64) -> Result<TimeSeries> {
    let m = series.times.len();
    if m < 3 {
        return Err(Error::InvalidInput("derivative needs at least 3 samples".into()));
    }
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(Error::InvalidInput(format!("regularization must be positive, got {reg}")));
    }
    let dt = series.times[1] - series.times[0];
    for w in series.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidInput("derivative needs uniform sampling".into()));
        }
    }

    // K: cumulative trapezoid, lower triangular. Row j integrates v over
    // [t_0, t_j].
    let mut k_mat = DMatrix::<f64>::zeros(m, m);
    for j in 1..m {
        k_mat[(j, 0)] = 0.5 * dt;
        for k in 1..j {
            k_mat[(j, k)] = dt;
        }
        k_mat[(j, j)] = 0.5 * dt;
    }

    // Normal equations: (K'K dt + reg dt I + reg/dt D'D) v = K'(g - g0) dt.
    let mut normal = k_mat.transpose() * &k_mat * dt;
    for i in 0..m {
        normal[(i, i)] += reg * dt;
    }
    for i in 0..m - 1 {
        // D row i: (v_{i+1} - v_i)/dt, squared and weighted by reg*dt
        let w = reg / dt;
        normal[(i, i)] += w;
        normal[(i + 1, i + 1)] += w;
        normal[(i, i + 1)] -= w;
        normal[(i + 1, i)] -= w;
    }
    let g0 = series.values[0];
    let shifted = DVector::from_iterator(m, series.values.iter().map(|g| g - g0));
    let rhs = k_mat.transpose() * shifted * dt;

    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::Numerical("derivative normal equations not positive".into()))?;
    let v = chol.solve(&rhs);
    TimeSeries::new(series.times.clone(), v.iter().cloned().collect())
}

/// Fills `g1 = g0'` of a boundary trace using [`tikhonov_derivative`].
pub fn differentiate_boundary(data: &BoundaryData, reg: f64) -> Result<BoundaryData> {
    let series = TimeSeries::new(data.times.clone(), data.g0.clone())?;
    let deriv = tikhonov_derivative(&series, reg)?;
    let mut out = data.clone();
    out.g1 = Some(deriv.values);
    Ok(out)
}

/// Converts a raw device trace to model units by dividing by the medium's
/// calibration factor.
pub fn scale_calibration(series: &TimeSeries, medium: Medium) -> TimeSeries {
    let mu = medium.calibration();
    TimeSeries {
        times: series.times.clone(),
        values: series.values.iter().map(|v| v / mu).collect(),
    }
}

/// Interior local extrema of a series, plateaus collapsed to their midpoint
/// sample. Endpoints never count as extrema.
pub fn find_local_extrema(series: &TimeSeries) -> Vec<Extremum> {
    let v = &series.values;
    let n = v.len();
    let mut out = Vec::new();
    let mut run_start = 0usize;
    for k in 1..=n {
        if k < n && v[k] == v[run_start] {
            continue;
        }
        // run [run_start, k-1] of equal values ends here
        if run_start > 0 && k < n {
            let prev = v[run_start - 1];
            let next = v[k];
            let val = v[run_start];
            let mid = (run_start + k - 1) / 2;
            if prev < val && next < val {
                out.push(Extremum {
                    index: mid,
                    time: series.times[mid],
                    value: val,
                    is_max: true,
                });
            } else if prev > val && next > val {
                out.push(Extremum {
                    index: mid,
                    time: series.times[mid],
                    value: val,
                    is_max: false,
                });
            }
        }
        run_start = k;
    }
    out
}

/// Chooses which envelope of an oscillating trace carries the signal.
///
/// Among the three largest-magnitude local extrema taken in time order, a
/// minimum in the middle means the dominant lobe points down, so the lower
/// envelope is selected; otherwise the upper.
pub fn select_envelope(series: &TimeSeries) -> Result<EnvelopeSide> {
    let mut extrema = find_local_extrema(series);
    if extrema.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "envelope selection needs at least 3 local extrema, found {}",
            extrema.len()
        )));
    }
    extrema.sort_by(|a, b| b.value.abs().partial_cmp(&a.value.abs()).unwrap());
    let mut top: Vec<Extremum> = extrema[..3].to_vec();
    top.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    if top[1].is_max {
        Ok(EnvelopeSide::Upper)
    } else {
        Ok(EnvelopeSide::Lower)
    }
}

/// Builds the chosen-side envelope and truncates it around its strongest
/// point.
///
/// The envelope is the piecewise-linear interpolation through the side's
/// local extrema, defined between the first and last of them. Every sample
/// outside the window `[t* - halfwidth, t* + halfwidth]` centered at the
/// envelope's global extremum `t*` (minimum for the lower side, maximum for
/// the upper) is set to zero, as is every sample where the envelope is
/// undefined.
pub fn envelope_truncate(
    series: &TimeSeries,
    side: EnvelopeSide,
    halfwidth: f64,
) -> Result<TimeSeries> {
    if !(halfwidth > 0.0 && halfwidth.is_finite()) {
        return Err(Error::InvalidInput(format!("halfwidth must be positive, got {halfwidth}")));
    }
    let knots: Vec<Extremum> = find_local_extrema(series)
        .into_iter()
        .filter(|e| e.is_max == (side == EnvelopeSide::Upper))
        .collect();
    if knots.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "envelope needs at least 2 extrema on the {side:?} side, found {}",
            knots.len()
        )));
    }

    let center = match side {
        EnvelopeSide::Upper => knots
            .iter()
            .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
            .unwrap(),
        EnvelopeSide::Lower => knots
            .iter()
            .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
            .unwrap(),
    };
    let (t_lo, t_hi) = (center.time - halfwidth, center.time + halfwidth);

    let mut values = vec![0.0; series.values.len()];
    let mut seg = 0usize;
    for (j, &t) in series.times.iter().enumerate() {
        if t < knots[0].time || t > knots[knots.len() - 1].time || t < t_lo || t > t_hi {
            continue;
        }
        while seg + 2 < knots.len() && knots[seg + 1].time < t {
            seg += 1;
        }
        let (a, b) = (&knots[seg], &knots[seg + 1]);
        let w = (t - a.time) / (b.time - a.time);
        values[j] = a.value * (1.0 - w) + b.value * w;
    }
    TimeSeries::new(series.times.clone(), values)
}

/// Relative dielectric profile of a target and the resulting estimate of
/// its absolute dielectric constant.
///
/// The reconstruction `c_target` is divided by the background's midpoint
/// value on the target region `D`. When the peak ratio exceeds 1 the target
/// is stronger than its background and the ratio profile itself is kept on
/// `D`; otherwise the minimum ratio, as a constant, is kept. The absolute
/// estimate multiplies the background interval by the extremal ratio.
pub fn relative_dielectric(
    c_target: &CoefficientProfile,
    ctx: &TargetContext,
) -> Result<(CoefficientProfile, Interval)> {
    if !(ctx.c_bckgr.lo > 0.0) {
        return Err(Error::InvalidInput("background dielectric must be positive".into()));
    }
    let mid = ctx.c_bckgr.mid();
    let in_d: Vec<usize> = (0..c_target.x.len())
        .filter(|&k| c_target.x[k] >= ctx.d.lo && c_target.x[k] <= ctx.d.hi)
        .collect();
    if in_d.is_empty() {
        return Err(Error::InvalidInput(
            "target region D contains no profile samples".into(),
        ));
    }
    let ratios: Vec<f64> = in_d.iter().map(|&k| c_target.values[k] / mid).collect();
    let max_ratio = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::MAX, f64::min);

    let mut rel = vec![1.0; c_target.x.len()];
    let extremal = if max_ratio > 1.0 {
        for (pos, &k) in in_d.iter().enumerate() {
            rel[k] = ratios[pos];
        }
        max_ratio
    } else {
        for &k in &in_d {
            rel[k] = min_ratio;
        }
        min_ratio
    };
    // The relative profile is a ratio, not a dielectric: bypass the >= 1
    // validation by construction.
    let profile = CoefficientProfile { x: c_target.x.clone(), values: rel };
    Ok((profile, ctx.c_bckgr.scale(extremal)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_series(t0: f64, t1: f64, n: usize, f: impl Fn(f64) -> f64) -> TimeSeries {
        let times: Vec<f64> =
            (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        TimeSeries::new(times, values).unwrap()
    }

    #[test]
    fn derivative_of_linear_ramp_is_one() {
        let s = uniform_series(0.0, 1.0, 101, |t| t);
        let v = tikhonov_derivative(&s, 1e-6).unwrap();
        for (t, d) in v.times.iter().zip(&v.values) {
            assert!((d - 1.0).abs() < 1e-2, "v({t}) = {d}");
        }
    }

    #[test]
    fn derivative_of_sine_matches_cosine_on_interior() {
        let s = uniform_series(0.0, std::f64::consts::PI, 315, |t| t.sin());
        let v = tikhonov_derivative(&s, 1e-6).unwrap();
        let span = std::f64::consts::PI;
        for (t, d) in v.times.iter().zip(&v.values) {
            if *t > 0.1 * span && *t < 0.9 * span {
                assert!((d - t.cos()).abs() < 5e-2, "v({t}) = {d} vs {}", t.cos());
            }
        }
    }

    #[test]
    fn derivative_survives_five_percent_noise() {
        let span = std::f64::consts::PI;
        let mut worst = 0.0f64;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = uniform_series(0.0, span, 315, |t| t.sin());
            let noisy = TimeSeries::new(
                s.times.clone(),
                s.values
                    .iter()
                    .map(|g| g * (1.0 + 0.05 * rng.gen_range(-1.0..=1.0)))
                    .collect(),
            )
            .unwrap();
            let v = tikhonov_derivative(&noisy, 1e-4).unwrap();
            let dt = v.times[1] - v.times[0];
            let err_sq: f64 = v
                .times
                .iter()
                .zip(&v.values)
                .map(|(t, d)| (d - t.cos()).powi(2) * dt)
                .sum();
            worst = worst.max(err_sq.sqrt());
        }
        assert!(worst < 0.15, "worst L2 error over seeds: {worst}");
    }

    #[test]
    fn derivative_validates_inputs() {
        let s = uniform_series(0.0, 1.0, 11, |t| t);
        assert!(tikhonov_derivative(&s, 0.0).is_err());
        assert!(tikhonov_derivative(&s, -1.0).is_err());
        let nonuniform =
            TimeSeries::new(vec![0.0, 0.1, 0.3, 0.4], vec![0.0; 4]).unwrap();
        assert!(tikhonov_derivative(&nonuniform, 1e-4).is_err());
    }

    #[test]
    fn calibration_divides_by_the_medium_factor() {
        let s = uniform_series(0.0, 1.0, 5, |t| t * CALIBRATION_AIR);
        let scaled = scale_calibration(&s, Medium::Air);
        for (t, v) in scaled.times.iter().zip(&scaled.values) {
            assert!((v - t).abs() < 1e-12);
        }
        let g = scale_calibration(&s, Medium::Ground);
        assert!((g.values[4] - CALIBRATION_AIR / CALIBRATION_GROUND).abs() < 1e-12);
    }

    #[test]
    fn calibration_is_linear() {
        let s = uniform_series(0.0, 1.0, 50, |t| (7.0 * t).sin() * 3.0e5);
        let sum = TimeSeries::new(
            s.times.clone(),
            s.values.iter().map(|v| 2.0 * v + 5.0).collect(),
        )
        .unwrap();
        let a = scale_calibration(&s, Medium::Ground);
        let b = scale_calibration(&sum, Medium::Ground);
        for k in 0..50 {
            let expect = 2.0 * a.values[k] + 5.0 / CALIBRATION_GROUND;
            assert!((b.values[k] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn extrema_detection_handles_plateaus_and_endpoints() {
        let s = TimeSeries::new(
            (0..8).map(|k| k as f64).collect(),
            vec![0.0, 2.0, 2.0, 2.0, -1.0, -1.0, 3.0, 0.0],
        )
        .unwrap();
        let ex = find_local_extrema(&s);
        assert_eq!(ex.len(), 3);
        // plateau of 2s: midpoint index 2
        assert_eq!(ex[0].index, 2);
        assert!(ex[0].is_max);
        // plateau of -1s: midpoint index ~4
        assert_eq!(ex[1].index, 4);
        assert!(!ex[1].is_max);
        assert_eq!(ex[2].index, 6);
        assert!(ex[2].is_max);
    }

    #[test]
    fn envelope_side_follows_the_middle_extremum() {
        // +1, -3, +2: middle (largest trio in time order) is a minimum
        let s = TimeSeries::new(
            (0..7).map(|k| k as f64).collect(),
            vec![0.0, 1.0, 0.0, -3.0, 0.0, 2.0, 0.0],
        )
        .unwrap();
        assert_eq!(select_envelope(&s).unwrap(), EnvelopeSide::Lower);

        // -1, +3, -2: middle is a maximum
        let s = TimeSeries::new(
            (0..7).map(|k| k as f64).collect(),
            vec![0.0, -1.0, 0.0, 3.0, 0.0, -2.0, 0.0],
        )
        .unwrap();
        assert_eq!(select_envelope(&s).unwrap(), EnvelopeSide::Upper);

        // fewer than three extrema
        let s = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!(select_envelope(&s).is_err());
    }

    fn damped(seed: u64) -> (TimeSeries, f64, f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp: f64 = rng.gen_range(0.5..2.0);
        let decay: f64 = rng.gen_range(0.2..1.0);
        let omega: f64 = rng.gen_range(4.0..9.0);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let s = uniform_series(0.0, 6.0, 1200, |t| {
            amp * (-decay * t).exp() * (omega * t + phase).sin()
        });
        (s, amp, decay, omega)
    }

    #[test]
    fn envelope_interpolates_the_signal_at_its_extrema() {
        for seed in 0..20u64 {
            let (s, ..) = damped(seed);
            for side in [EnvelopeSide::Lower, EnvelopeSide::Upper] {
                let env = envelope_truncate(&s, side, 100.0).unwrap();
                let knots: Vec<Extremum> = find_local_extrema(&s)
                    .into_iter()
                    .filter(|e| e.is_max == (side == EnvelopeSide::Upper))
                    .collect();
                for k in &knots {
                    assert!(
                        (env.values[k.index] - k.value).abs() < 1e-12,
                        "seed {seed}, {side:?}: knot at t = {} missed",
                        k.time
                    );
                }
            }
        }
    }

    #[test]
    fn envelope_side_matches_second_extremum_oracle() {
        // A damped oscillation's lobes decay monotonically, so the three
        // largest-magnitude extrema are the first three in time and the
        // selection rule reduces to the type of the second extremum.
        for seed in 0..30u64 {
            let (s, ..) = damped(seed + 100);
            let extrema = find_local_extrema(&s);
            assert!(extrema.len() >= 3, "seed {seed}: too few lobes");
            let expect =
                if extrema[1].is_max { EnvelopeSide::Upper } else { EnvelopeSide::Lower };
            assert_eq!(select_envelope(&s).unwrap(), expect, "seed {seed}");
        }
    }

    #[test]
    fn truncation_zeroes_outside_the_window() {
        let (s, ..) = damped(7);
        let env = envelope_truncate(&s, EnvelopeSide::Lower, 0.5).unwrap();
        // center = global minimum of the lower envelope = deepest minimum
        let knots: Vec<Extremum> = find_local_extrema(&s)
            .into_iter()
            .filter(|e| !e.is_max)
            .collect();
        let center =
            knots.iter().min_by(|a, b| a.value.partial_cmp(&b.value).unwrap()).unwrap();
        for (j, &t) in env.times.iter().enumerate() {
            if (t - center.time).abs() > 0.5 {
                assert_eq!(env.values[j], 0.0, "sample at t = {t} not zeroed");
            }
        }
        // something nonzero survives inside the window
        assert!(env.values.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn relative_dielectric_reproduces_strong_target_bound() {
        // peak ratio 4.00 against background [3, 5] (midpoint 4)
        let axis: Vec<f64> = (0..101).map(|k| k as f64 * 0.03).collect();
        let values: Vec<f64> =
            axis.iter().map(|&x| if (1.0..=2.0).contains(&x) { 16.0 } else { 1.0 }).collect();
        let c = CoefficientProfile::new(axis, values).unwrap();
        let ctx = TargetContext {
            c_bckgr: Interval::new(3.0, 5.0).unwrap(),
            d: Interval::new(1.0, 2.0).unwrap(),
        };
        let (rel, comp) = relative_dielectric(&c, &ctx).unwrap();
        assert!((comp.lo - 12.0).abs() < 1e-9);
        assert!((comp.hi - 20.0).abs() < 1e-9);
        let peak = rel.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 4.0).abs() < 1e-9);
        assert_eq!(rel.value_at(0.5), 1.0);
    }

    #[test]
    fn relative_dielectric_keeps_weak_targets_constant() {
        // min ratio 0.59: weaker than background
        let axis: Vec<f64> = (0..101).map(|k| k as f64 * 0.03).collect();
        let values: Vec<f64> = axis
            .iter()
            .map(|&x| if (1.0..=2.0).contains(&x) { 4.0 * 0.59 } else { 1.0 })
            .collect();
        let c = CoefficientProfile::new(axis, values).unwrap();
        let ctx = TargetContext {
            c_bckgr: Interval::new(3.0, 5.0).unwrap(),
            d: Interval::new(1.2, 1.8).unwrap(),
        };
        let (rel, comp) = relative_dielectric(&c, &ctx).unwrap();
        assert!((comp.lo - 3.0 * 0.59).abs() < 1e-9);
        assert!((comp.hi - 5.0 * 0.59).abs() < 1e-9);
        // constant on D
        for (x, v) in rel.x.iter().zip(&rel.values) {
            if (1.2..=1.8).contains(x) {
                assert!((v - 0.59).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn relative_dielectric_validates_region() {
        let axis: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let c = CoefficientProfile::homogeneous(&axis).unwrap();
        let ctx = TargetContext {
            c_bckgr: Interval::point(4.0).unwrap(),
            d: Interval::new(5.0, 6.0).unwrap(),
        };
        assert!(relative_dielectric(&c, &ctx).is_err());
    }

    #[test]
    fn integral_operator_reproduces_running_integral() {
        // sanity of the K construction inside the derivative: for exact
        // data g(t) = int_0^t cos = sin t and tiny regularization, the
        // reconstructed derivative at interior points is cos within the
        // trapezoid error of the model itself.
        let s = uniform_series(0.0, 2.0, 201, |t| t.sin());
        let v = tikhonov_derivative(&s, 1e-8).unwrap();
        let mid = 100;
        assert!((v.values[mid] - s.times[mid].cos()).abs() < 1e-2);
    }
}
