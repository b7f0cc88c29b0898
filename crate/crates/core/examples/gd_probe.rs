//! Throwaway probe: gradient descent vs the direct solver on small systems.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use waveinv::carleman::{assemble_functional_0, CarlemanParams};
use waveinv::forward::BoundaryData;
use waveinv::model::InversionGrid;
use waveinv::optim::{gradient_descent, solve_direct, SolveOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mx: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(7);
    let mt: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(8);
    let xmax: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.31);
    let tfin: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.5);

    let eps = 1.0 / 150.0;
    let grid = InversionGrid::new(eps, xmax, tfin, mx, mt).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nt = 64usize;
    let dt = (tfin + eps + 0.1) / (nt - 1) as f64;
    let times: Vec<f64> = (0..nt).map(|k| k as f64 * dt).collect();
    let g0: Vec<f64> = times
        .iter()
        .map(|&t| 0.5 + 0.02 * (3.0 * t).sin() + 0.002 * rng.gen_range(-1.0..1.0))
        .collect();
    let g1: Vec<f64> = times.iter().map(|&t| 0.06 * (3.0 * t).cos()).collect();
    let data = BoundaryData {
        times,
        g0,
        g1: Some(g1),
        noise_level: 0.0,
        corrected_until: None,
    };
    let params = CarlemanParams::default();
    let system = assemble_functional_0(&grid, &data, &params).unwrap();
    println!("n_free = {}", system.n_free());

    let direct = solve_direct(&system, &SolveOptions::default()).unwrap();
    let j_dir = system.objective(&direct);
    println!("direct objective = {j_dir:.8e}");

    for k_max in [1_000usize, 5_000, 20_000, 100_000, 400_000] {
        let start = vec![0.0; system.n_free()];
        let t0 = std::time::Instant::now();
        let gd = gradient_descent(&system, start, 1.0, k_max).unwrap();
        let j_gd = system.objective(&gd);
        println!(
            "k_max {k_max:>7}: objective {j_gd:.8e}, rel excess {:.3e}, {:.2}s",
            (j_gd - j_dir) / j_dir,
            t0.elapsed().as_secs_f64()
        );
    }
}
