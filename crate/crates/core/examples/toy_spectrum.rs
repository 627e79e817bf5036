//! Toy Dirac model: torus spectrum, bulk gap and the Bloch symbol.

use coarse_lab::lattice::Axis;
use coarse_lab::models::{bloch_symbol, ModelSpec};
use coarse_lab::spectral::{clusters, eigh, spectral_gap};
use std::f64::consts::PI;

fn main() -> coarse_lab::Result<()> {
    for mass in [0.0, 1.0, 3.0] {
        let spec = ModelSpec::toy_dirac(mass, vec![Axis::periodic(12), Axis::periodic(12)]);
        let dec = eigh(&spec.build()?)?;
        let gap = spectral_gap(&dec, 0.0, dec.default_gap_tol());
        match gap {
            Ok(g) => println!("m = {mass}: gap ({:.4}, {:.4})", g.lower, g.upper),
            Err(e) => println!("m = {mass}: {e}"),
        }
        let bands = clusters(dec.eigenvalues(), 0.05);
        println!("  {} eigenvalues in {} cluster(s)", dec.dim(), bands.len());
    }

    let spec = ModelSpec::toy_dirac(1.0, vec![Axis::periodic(12), Axis::periodic(12)]);
    for k in [[0.0, 0.0], [PI, 0.0], [PI, PI]] {
        let s = bloch_symbol(&spec, &k)?;
        println!("h({:.2}, {:.2}) diagonal: {:.3}, {:.3}", k[0], k[1], s.get(0, 0).re, s.get(1, 1).re);
    }
    Ok(())
}
