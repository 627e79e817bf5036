//! Hofstadter model: Landau levels at weak flux and the Chern number of the
//! lowest band.

use coarse_lab::indices::fhs_chern;
use coarse_lab::lattice::Axis;
use coarse_lab::models::{Gauge, ModelSpec};
use coarse_lab::spectral::{clusters, eigh};
use std::f64::consts::PI;

fn main() -> coarse_lab::Result<()> {
    let b = 2.0 * PI / 16.0;
    let spec = ModelSpec::hofstadter(b, Gauge::LandauX, vec![Axis::periodic(32), Axis::periodic(32)]);
    let dec = eigh(&spec.build()?)?;
    let levels = clusters(dec.eigenvalues(), 0.05);
    println!("b = 2π/16 on a 32x32 torus: lowest levels");
    for (n, c) in levels.iter().take(4).enumerate() {
        let continuum = (2 * n + 1) as f64 * b;
        println!("  E = {:.4} (x{}), continuum (2n-1)|b| = {:.4}, ratio {:.4}", c.mean, c.count, continuum, c.mean / continuum);
    }

    for q in [3, 4, 5, 7] {
        let flux = 2.0 * PI / q as f64;
        let spec = ModelSpec::hofstadter(flux, Gauge::LandauX, vec![Axis::periodic(q * 4), Axis::periodic(q * 4)]);
        let dec = eigh(&spec.build()?)?;
        let gap_mid = 0.5 * (dec.eigenvalues()[(q * 4) * 4 - 1] + dec.eigenvalues()[(q * 4) * 4]);
        match fhs_chern(&spec, gap_mid, 24) {
            Ok(c) => println!("flux 2π/{q}: lowest band C = {}", c.value),
            Err(e) => println!("flux 2π/{q}: {e}"),
        }
    }
    Ok(())
}
