//! Clifford generators in dimensions 2, 4 and 6 and their defining relations.

use coarse_lab::operator::{clifford_generators, InternalMatrix};

fn main() -> coarse_lab::Result<()> {
    for d in [2, 4, 6] {
        let g = clifford_generators(d)?;
        let n = g.gamma0.dim();
        let id = InternalMatrix::identity(n);
        let mut worst: f64 = 0.0;
        let all: Vec<&InternalMatrix> = g.gammas.iter().chain(std::iter::once(&g.gamma0)).collect();
        for (a, x) in all.iter().enumerate() {
            worst = worst.max(x.distance(&x.adjoint()));
            for (b, y) in all.iter().enumerate() {
                let anti = &(*x * *y) + &(*y * *x);
                let want = if a == b { id.scale(2.0.into()) } else { InternalMatrix::zeros(n) };
                worst = worst.max(anti.distance(&want));
            }
        }
        println!("d = {d}: {} generators of size {n}, worst relation defect {worst:.1e}", g.gammas.len());
    }
    Ok(())
}
