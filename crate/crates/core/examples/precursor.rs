use waveinv::forward::*;
use waveinv::model::*;

fn main() {
    let grid = ForwardGrid::new(5.0, 6.0, 3001, 301).unwrap();
    for kind in [1u8, 2, 3, 4] {
        let c = make_true_profile(kind, &grid.x_axis()).unwrap();
        let field = solve_forward(&c, &grid).unwrap();
        for &x in &[0.5f64, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
            let tau = travel_time(&c, x).unwrap();
            let i = grid.nearest_node(x);
            // max |u| for t < tau - m*dt, for margins m = 5, 10, 15
            for m in [5usize, 10, 15] {
                let mut worst = 0.0f64;
                for j in 0..grid.nt {
                    if grid.t(j) < tau - m as f64 * grid.dt() {
                        worst = worst.max(field.value(i, j).abs());
                    }
                }
                print!(" m{m}={worst:.4}");
            }
            println!("  [test {kind} x={x} tau={tau:.3} c(x)={}]", c.value_at(x));
        }
    }
}
