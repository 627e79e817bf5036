//! Edge index of the open box: Kubo-type trace, index of a pair of
//! projections, quantized edge current and the exponential-map identity.

use coarse_lab::indices::{
    edge_current, edge_index_kubo, exp_map_consistency, fhs_chern, pair_projection_index, BoundaryUnitary,
    EdgeGeometry, WindowSweep, WindowedTraceResult, ORIENTATION,
};
use coarse_lab::lattice::{Axis, HalfSpace, Region, Side};
use coarse_lab::models::ModelSpec;
use coarse_lab::spectral::{bump, eigh, smooth_step, spectral_gap};

fn show(name: &str, r: &WindowedTraceResult) {
    let table: Vec<String> = r.plateau.iter().map(|p| format!("{:.4}", p.re)).collect();
    println!("{name:>10}: [{}] converged: {}", table.join(", "), r.converged);
}

fn main() -> coarse_lab::Result<()> {
    let l = 32;
    let torus = ModelSpec::toy_dirac(1.0, vec![Axis::periodic(l), Axis::periodic(l)]);
    let gap = spectral_gap(&eigh(&torus.build()?)?, 0.0, 1e-8)?;
    let chern = fhs_chern(&torus, 0.0, 32)?;

    let boxed = ModelSpec::toy_dirac(1.0, vec![Axis::open(l), Axis::open(l)]);
    let h = boxed.build()?;
    let dec = eigh(&h)?;
    let lat = dec.lattice().clone();
    let geom = EdgeGeometry::new(
        Region::open_boundary_layer(&lat),
        HalfSpace::new(0, l as i64 / 2, Side::Upper).region(&lat)?,
    )?;
    let sweep = WindowSweep::new(vec![l as i64 / 2, 0], WindowSweep::default_radii());

    let f = smooth_step(-0.95, 0.95)?;
    let u = BoundaryUnitary::new(&dec, &f)?;
    println!("boundary unitary has rank {} out of {}", u.rank(), dec.dim());
    show("kubo", &edge_index_kubo(&u, &geom, &sweep)?);
    show("pair k=1", &pair_projection_index(&u, &geom, &sweep, 1)?);
    show("current", &edge_current(&dec, &h, &bump(-0.95, 0.95)?, gap, &geom, &sweep)?);
    let exp = exp_map_consistency(&dec, &f, &geom, &sweep)?;
    println!("exp map: {:.6} vs {:.6}", exp.pair().0, exp.pair().1);
    println!("bulk C = {}, expected edge index {}", chern.value, ORIENTATION * chern.value as f64);
    Ok(())
}
