//! End-to-end probe: synthesize data for one test profile and reconstruct.

use waveinv::carleman::{run_algorithm, CarlemanParams, RunOptions};
use waveinv::forward::{
    add_noise, correct_near_origin, extract_boundary_data, solve_forward, CorrectionWindow,
};
use waveinv::model::{make_true_profile, ForwardGrid, InversionGrid};
use waveinv::preprocess::differentiate_boundary;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind: u8 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mx: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(241);
    let mt: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(301);
    let delta: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let seed: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1);
    let relaxed: bool = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(false);
    let n_iters: usize = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(10);
    let xmax: f64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(3.0);

    let eps = 1.0 / 150.0;
    let t_inv = 6.0;
    let fwd = ForwardGrid::new(5.0, 6.0, 3001, 301).unwrap().extended_to(t_inv + eps);
    let axis = fwd.x_axis();
    let c_true = make_true_profile(kind, &axis).unwrap();

    let t0 = std::time::Instant::now();
    let field = solve_forward(&c_true, &fwd).unwrap();
    println!("forward: {:.2}s (grid {} x {})", t0.elapsed().as_secs_f64(), fwd.nx, fwd.nt);

    let raw = extract_boundary_data(&field, eps).unwrap();
    let noisy = add_noise(&raw, delta, seed).unwrap();
    let corrected = correct_near_origin(&noisy, &CorrectionWindow::default()).unwrap();
    let data = differentiate_boundary(&corrected, 1e-4).unwrap();
    println!("noise: delta = {delta}, seed = {seed}");

    let grid = InversionGrid::new(eps, xmax, t_inv, mx, mt).unwrap();
    let mut params = CarlemanParams::default();
    params.n_iters = n_iters;
    let mut opts = RunOptions::default();
    opts.relaxed_denominators = relaxed;
    println!("relaxed: {relaxed}, n_iters: {n_iters}, xmax: {xmax}");
    println!(
        "inversion grid {} x {} -> {} unknowns, semi-bandwidth {}",
        mx,
        mt,
        (mx - 3) * mt,
        2 * (mx - 3) + 2
    );

    let t1 = std::time::Instant::now();
    let trace = run_algorithm(&data, &grid, &params, &opts).unwrap();
    println!("inversion: {:.2}s, converged: {}", t1.elapsed().as_secs_f64(), trace.converged);
    for m in [1.8_f64, 2.0, 2.2] {
        let cut = grid.x_axis().iter().position(|&x| x > m).unwrap_or(mx);
        let errs: Vec<String> = (1..trace.profiles.len())
            .map(|n| {
                let cur = &trace.profiles[n].values[..cut];
                let prev = &trace.profiles[n - 1].values[..cut];
                let num = cur
                    .iter()
                    .zip(prev)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0_f64, f64::max);
                let den = cur.iter().cloned().fold(0.0_f64, f64::max);
                format!("{:.2e}", num / den)
            })
            .collect();
        println!("consec to x<={m}: {}", errs.join(" "));
    }
    for row in &trace.rows {
        let c = &trace.profiles[row.iter];
        let diff_at = if row.iter == 0 {
            f64::NAN
        } else {
            let prev = &trace.profiles[row.iter - 1];
            let k = (0..c.values.len())
                .max_by(|&a, &b| {
                    let da = (c.values[a] - prev.values[a]).abs();
                    let db = (c.values[b] - prev.values[b]).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            c.x[k]
        };
        println!(
            "iter {}: consec_err {:.4e} (at x = {:.3}), objective {:.6e}, grad {:.3e}, {:.2}s, max c {:.3} at x = {:.3}",
            row.iter,
            row.consec_err,
            diff_at,
            row.objective,
            row.grad_norm,
            row.seconds,
            c.max_value(),
            c.argmax()
        );
    }
    let c = trace.final_profile();
    println!("true max: {:.3} at x = {:.3}", c_true.max_value(), c_true.argmax());

    let window_max = |lo: f64, hi: f64| {
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for (x, v) in c.x.iter().zip(&c.values) {
            if *x >= lo && *x <= hi && *v > best.0 {
                best = (*v, *x);
            }
        }
        best
    };
    let (m18, a18) = window_max(0.0, 1.8);
    println!("exact max x<=1.8: {m18:.4} at x = {a18:.4}");
    let (ml, al) = window_max(0.3, 1.0);
    let (mr, ar) = window_max(1.0, 1.8);
    println!("window [0.3,1.0] max {ml:.4} at {al:.4}; window [1.0,1.8] max {mr:.4} at {ar:.4}");

    let crossing = |lo: f64, hi: f64, level: f64, rising: bool| -> f64 {
        for k in 1..c.x.len() {
            if c.x[k] < lo || c.x[k] > hi {
                continue;
            }
            let (a, b) = (c.values[k - 1], c.values[k]);
            let hit = if rising { a < level && b >= level } else { a >= level && b < level };
            if hit {
                return c.x[k - 1] + (c.x[k] - c.x[k - 1]) * (level - a) / (b - a);
            }
        }
        f64::NAN
    };
    println!(
        "half-height 5.5 crossings: left {:.4}, right {:.4}",
        crossing(0.5, 1.0, 5.5, true),
        crossing(1.0, 1.5, 5.5, false)
    );

    // profile shape around the peak
    for i in (0..c.x.len()).step_by(c.x.len() / 40) {
        println!("  x = {:.3}  c = {:.4}  c_true = {:.4}", c.x[i], c.values[i], c_true.value_at(c.x[i]));
    }
}
