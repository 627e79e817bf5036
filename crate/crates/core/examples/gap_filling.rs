//! The open box fills the bulk gap with states living on its boundary.

use coarse_lab::indices::gap_filling_report;
use coarse_lab::lattice::{Axis, Region};
use coarse_lab::models::ModelSpec;
use coarse_lab::spectral::{eigh, spectral_gap};

fn main() -> coarse_lab::Result<()> {
    let torus = ModelSpec::toy_dirac(1.0, vec![Axis::periodic(24), Axis::periodic(24)]);
    let bulk = eigh(&torus.build()?)?;
    let gap = spectral_gap(&bulk, 0.0, bulk.default_gap_tol())?;
    println!("bulk gap: ({:.4}, {:.4})", gap.lower, gap.upper);

    for mass in [1.0, 3.0] {
        let torus = ModelSpec::toy_dirac(mass, vec![Axis::periodic(24), Axis::periodic(24)]);
        let bulk = eigh(&torus.build()?)?;
        let boxed = torus.with_boundary(coarse_lab::lattice::Boundary::Open);
        let edge = eigh(&boxed.build()?)?;
        let layer = Region::open_boundary_layer(edge.lattice());
        let rep = gap_filling_report(&bulk, &edge, (-0.9, 0.9), &layer, 3.0)?;
        println!(
            "m = {mass}: {} states in (-0.9, 0.9), min localization {:?}, largest spacing {:.3}",
            rep.count(),
            rep.min_localization(),
            rep.max_spacing
        );
    }
    Ok(())
}
