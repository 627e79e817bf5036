//! Chern number from the Fermi projection alone, via a disk cut into three
//! sectors.

use coarse_lab::indices::{real_space_chern, Tripartition};
use coarse_lab::lattice::Axis;
use coarse_lab::models::ModelSpec;
use coarse_lab::spectral::{eigh, fermi_projection};

fn main() -> coarse_lab::Result<()> {
    for (mass, w) in [(1.0, 0.0), (1.0, 1.0), (3.0, 0.0)] {
        let spec = ModelSpec::toy_dirac(mass, vec![Axis::periodic(20), Axis::periodic(20)]).with_disorder(w, 7);
        let dec = eigh(&spec.build()?)?;
        let p = fermi_projection(&dec, 0.0)?;
        for r in [4.0, 6.0, 8.0] {
            let tri = Tripartition::disk(dec.lattice(), [9.5, 9.5], r)?;
            let c = real_space_chern(&p, &tri)?;
            println!("m = {mass}, w = {w}, r = {r}: {:+.6} (imag {:.1e})", c.value, c.imag_residual);
        }
    }
    Ok(())
}
