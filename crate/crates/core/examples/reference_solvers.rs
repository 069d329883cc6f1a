//! Classical reference solvers: RK45 antiderivative, viscous Burgers,
//! Allen-Cahn and the diffusion-reaction boundary-value problem.

use fedsciml::solvers::{
    antiderivative, solve_allen_cahn, solve_burgers, solve_dr_bvp, AllenCahnParams, BurgersParams, BvpParams,
};
use std::f64::consts::PI;

fn main() -> fedsciml::Result<()> {
    let s = antiderivative(|x| (3.0 * x).cos(), &[0.5, 1.0])?;
    println!("int_0^1 cos 3x = {:.10} (exact {:.10})", s[1], 3f64.sin() / 3.0);

    let p = BurgersParams::default();
    let init: Vec<f64> = (0..p.nx).map(|i| (2.0 * PI * i as f64 / p.nx as f64).sin()).collect();
    let b = solve_burgers(&init, p)?;
    let peak = b.solution.u.last().unwrap().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    println!("Burgers: max |u(., 1)| = {peak:.4} after {} steps", b.steps);

    let ac = solve_allen_cahn(AllenCahnParams::default())?;
    let mid = ac.solution.u.last().unwrap()[ac.solution.xs.len() / 2];
    println!("Allen-Cahn: u(0, 1) = {mid:.4}");

    let (xs, u) = solve_dr_bvp(|x| 0.1 + (PI * x).sin().powi(2), |x| (2.0 * PI * x).sin(), BvpParams::default())?;
    println!("diffusion-reaction BVP: u(0.25) = {:.6}", u[xs.len() / 4]);
    Ok(())
}
