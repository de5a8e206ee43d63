use nalgebra::{DMatrix, DVector};
use second_chaos::density::DensityModel;
use second_chaos::quadrature::QuadratureGrid;
use second_chaos::transport::*;
use second_chaos::GaussianSpace;

fn main() {
    let space2 = GaussianSpace::new(2).unwrap();
    let v: f64 = 1.1;
    let g2 = DensityModel::scaled_gaussian_diag(space2, DVector::from_vec(vec![0.3, -0.2]), DVector::from_vec(vec![v, v])).unwrap();
    let truth = DMatrix::from_diagonal_element(2, 2, v.sqrt() - 1.0);
    let shift = DensityModel::wick_shift(space2, DVector::from_vec(vec![1.0, 0.0])).unwrap();
    for (deg, r) in [(20usize, 1usize), (20, 2), (24, 2), (28, 2), (32, 2), (24, 3)] {
        let grid = QuadratureGrid::build(2, deg).unwrap();
        let p = SinkhornParams { target_refinement: r, ..Default::default() };
        let t0 = std::time::Instant::now();
        let sol = solve_entropic(&g2, &grid, &p).unwrap();
        let e1 = (&sol.mean_hessian - &truth).amax();
        let sol2 = solve_entropic(&shift, &grid, &p).unwrap();
        let e2 = sol2.mean_hessian.amax();
        println!("deg {deg} r{r}: gauss hess err {e1:.4}  shift hess err {e2:.4}  iters {}+{}  time {:.0?}",
            sol.diagnostics.iterations, sol2.diagnostics.iterations, t0.elapsed());
    }
}
