//! Moving the partition `W` by a bounded amount leaves the edge index fixed.

use coarse_lab::indices::{cobordism_check, BoundaryUnitary, EdgeGeometry, WindowSweep};
use coarse_lab::lattice::{Axis, HalfSpace, Region, Side};
use coarse_lab::models::ModelSpec;
use coarse_lab::spectral::{eigh, smooth_step};

fn main() -> coarse_lab::Result<()> {
    let l = 32;
    let dec = eigh(&ModelSpec::toy_dirac(1.0, vec![Axis::open(l), Axis::open(l)]).build()?)?;
    let lat = dec.lattice().clone();
    let layer = Region::open_boundary_layer(&lat);
    let cut = HalfSpace::new(0, 16, Side::Upper);
    let profile: Vec<i64> = (0..l).map(|y| if (8..24).contains(&y) { 3 } else { 0 }).collect();
    let geom = EdgeGeometry::new(layer.clone(), cut.region(&lat)?)?;
    let geom_prime = EdgeGeometry::new(layer, cut.perturbed(&lat, &profile, 3)?)?;
    let sweep = WindowSweep::new(vec![16, 0], vec![4.0, 6.0, 8.0, 10.0]);

    let u = BoundaryUnitary::new(&dec, &smooth_step(-0.95, 0.95)?)?;
    let rep = cobordism_check(&u, &geom, &geom_prime, &sweep)?;
    println!("θ_W = {:.6}, θ_W' = {:.6}, difference {:.2e}", rep.theta_w.last, rep.theta_w_prime.last, rep.difference);
    Ok(())
}
