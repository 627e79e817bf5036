//! Half-spaces, boundary strips and the transversality of two partitions.

use coarse_lab::lattice::{transversality_diameter, HalfSpace, Lattice, Region, Side};

fn main() -> coarse_lab::Result<()> {
    let lat = Lattice::open_box(&[24, 24], 1)?;
    let y = Region::from_predicate(&lat, |c| (4..20).contains(&c[0]) && (4..20).contains(&c[1]));
    let w = HalfSpace::new(0, 12, Side::Upper).region(&lat)?;
    println!("Y: {} sites, W: {} sites", y.len(), w.len());

    for r in [1.0, 2.0, 3.0] {
        let t = transversality_diameter(&y, &w, r);
        println!("r = {r}: strip(Y) ∩ strip(W) has {} sites, diameter {}", t.sites.len(), t.diameter_value());
    }

    // a wiggly cut stays transversal, with a larger but finite intersection
    let profile: Vec<i64> = (0..24).map(|y| ((y as f64 * 0.7).sin() * 3.0).round() as i64).collect();
    let wiggly = HalfSpace::new(0, 12, Side::Upper).perturbed(&lat, &profile, 3)?;
    let t = transversality_diameter(&y, &wiggly, 2.0);
    println!("perturbed cut: {} sites, diameter {}", t.sites.len(), t.diameter_value());

    let layer = Region::open_boundary_layer(&lat);
    println!("outer layer of the box: {} sites in {} component(s)", layer.len(), layer.components().len());
    Ok(())
}
