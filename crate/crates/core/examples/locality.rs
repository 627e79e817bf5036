//! Off-diagonal decay of a Fermi projection and of the boundary unitary.

use coarse_lab::lattice::Region;
use coarse_lab::models::ModelSpec;
use coarse_lab::lattice::Axis;
use coarse_lab::spectral::{eigh, exp_unitary, fermi_projection, smooth_step};

fn main() -> coarse_lab::Result<()> {
    let spec = ModelSpec::toy_dirac(1.0, vec![Axis::periodic(16), Axis::periodic(16)]);
    let h = spec.build()?;
    println!("H: propagation {}, {} nonzeros", h.propagation(), h.nnz());

    let dec = eigh(&h)?;
    let p = fermi_projection(&dec, 0.0)?;
    println!("P_F decay profile (distance, largest entry):");
    for (s, v) in p.decay_profile().range(..=8) {
        println!("  {s:2}  {v:.3e}");
    }

    let open = spec.with_boundary(coarse_lab::lattice::Boundary::Open);
    let dec = eigh(&open.build()?)?;
    let u = exp_unitary(&dec, &smooth_step(-0.95, 0.95)?)?;
    let minus_one = &u - &coarse_lab::operator::LocalOperator::identity(u.lattice());
    let layer = Region::open_boundary_layer(u.lattice());
    println!("u - 1 away from the boundary, weight 2: {:.3e}", minus_one.decay_away_from(&layer, 2.0)?);
    Ok(())
}
