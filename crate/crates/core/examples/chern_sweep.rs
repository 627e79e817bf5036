//! Chern number of the toy model across masses on a Brillouin-zone grid.

use coarse_lab::indices::fhs_chern;
use coarse_lab::lattice::Axis;
use coarse_lab::models::ModelSpec;

fn main() {
    let axes = vec![Axis::periodic(32), Axis::periodic(32)];
    for m in [-3.0, -2.5, -1.0, -0.5, 0.0, 0.5, 1.0, 2.5, 3.0] {
        match fhs_chern(&ModelSpec::toy_dirac(m, axes.clone()), 0.0, 32) {
            Ok(c) => println!("m = {m:5.2}  C = {:2}  (raw {:+.6}, residual {:.1e})", c.value, c.raw, c.residual),
            Err(e) => println!("m = {m:5.2}  {e}"),
        }
    }
}
