//! Hermitian eigendecomposition and functional calculus.
//!
//! Every function of an operator is evaluated as `Σ_k g(λ_k) v_k v_k*`. When
//! `g` is constant on most of the spectrum (projections, the exponential
//! unitary, bumps supported in a gap) the constant part is split off as a
//! multiple of the identity and only the remaining eigenvectors enter the
//! dense product, which keeps boundary computations at low rank.

use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operator::LocalOperator;

/// Hermiticity tolerance accepted by [`eigh`].
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Gap detection tolerance relative to the spectral diameter.
pub const RELATIVE_GAP_TOL: f64 = 1e-8;

/// Ascending eigenvalues and orthonormal eigenvectors (as columns) of a
/// Hermitian operator.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    lattice: Arc<Lattice>,
    values: Vec<f64>,
    vectors: Mat<C64>,
    eigen_residual: f64,
}

/// Full dense diagonalization of a Hermitian operator.
pub fn eigh(t: &LocalOperator) -> Result<EigenDecomposition> {
    let asymmetry = t.hermiticity_defect();
    if asymmetry > HERMITICITY_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let dense = t.to_dense();
    let evd = dense
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values: Vec<f64> = (0..dense.nrows()).map(|k| evd.S()[k].re).collect();
    let vectors = evd.U().to_owned();
    let mut dec = EigenDecomposition { lattice: t.lattice().clone(), values, vectors, eigen_residual: 0.0 };
    dec.eigen_residual = dec.eigen_equation_residual(t);
    Ok(dec)
}

impl EigenDecomposition {
    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &Mat<C64> {
        &self.vectors
    }

    /// Component `flat` of eigenvector `k`.
    #[inline]
    pub fn component(&self, flat: usize, k: usize) -> C64 {
        self.vectors[(flat, k)]
    }

    /// `max |T V - V Λ|`, recorded at construction.
    pub fn eigen_residual(&self) -> f64 {
        self.eigen_residual
    }

    fn eigen_equation_residual(&self, t: &LocalOperator) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        let rows: Vec<Vec<(usize, C64)>> = (0..n).map(|r| t.row(r)).collect();
        for k in 0..n {
            let v = self.vectors.col(k);
            for (r, row) in rows.iter().enumerate() {
                let tv: C64 = row.iter().map(|&(c, x)| x * v[c]).sum();
                worst = worst.max((tv - v[r] * self.values[k]).norm());
            }
        }
        worst
    }

    /// `max |V Λ V* - T|`. Costs a dense product; call only when needed.
    pub fn reconstruction_residual(&self, t: &LocalOperator) -> f64 {
        self.functional_calculus(|x| x).distance(t)
    }

    /// `max |V* V - I|`. Costs a dense product.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let mut worst = 0.0f64;
        for c in 0..g.ncols() {
            for r in 0..g.nrows() {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((g[(r, c)] - target).norm());
            }
        }
        worst
    }

    pub fn spectral_diameter(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Default gap tolerance: [`RELATIVE_GAP_TOL`] times the spectral
    /// diameter (at least one).
    pub fn default_gap_tol(&self) -> f64 {
        RELATIVE_GAP_TOL * self.spectral_diameter().max(1.0)
    }

    pub fn count_below(&self, e: f64) -> usize {
        self.values.partition_point(|&x| x < e)
    }

    /// Indices of eigenvalues strictly inside `(a, b)`.
    pub fn indices_in(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        self.values.partition_point(|&x| x <= a)..self.values.partition_point(|&x| x < b)
    }

    /// `g(T)` for a complex-valued `g`.
    pub fn functional_calculus_complex(&self, g: impl Fn(f64) -> C64) -> LocalOperator {
        let weights: Vec<C64> = self.values.iter().map(|&x| g(x)).collect();
        LocalOperator::from_dense(&self.lattice, self.assemble(&weights, None))
    }

    /// `f(T) = Σ f(λ_k) v_k v_k*`.
    pub fn functional_calculus(&self, f: impl Fn(f64) -> f64) -> LocalOperator {
        self.functional_calculus_complex(|x| C64::new(f(x), 0.0))
    }

    /// Selected rows of `g(T)`, as a `rows.len() x dim` matrix.
    pub fn rows_of(&self, g: impl Fn(f64) -> C64, rows: &[usize]) -> Mat<C64> {
        let weights: Vec<C64> = self.values.iter().map(|&x| g(x)).collect();
        self.assemble(&weights, Some(rows))
    }

    /// `Σ_k w_k v_k v_k*` restricted to `rows` (all rows if `None`), with the
    /// dominant constant weight split off as a multiple of the identity.
    fn assemble(&self, weights: &[C64], rows: Option<&[usize]>) -> Mat<C64> {
        let n = self.dim();
        let candidates = [weights.first().copied(), weights.last().copied()];
        let baseline = candidates
            .iter()
            .flatten()
            .map(|&c| (c, weights.iter().filter(|&&w| w == c).count()))
            .max_by_key(|&(_, count)| count)
            .map(|(c, _)| c)
            .unwrap_or(C64::new(0.0, 0.0));
        let active: Vec<usize> = (0..n).filter(|&k| weights[k] != baseline).collect();
        let all_rows: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all_rows = (0..n).collect();
                &all_rows
            }
        };
        let left = Mat::from_fn(rows.len(), active.len(), |i, k| {
            let k = active[k];
            self.vectors[(rows[i], k)] * (weights[k] - baseline)
        });
        let right = Mat::from_fn(n, active.len(), |r, k| self.vectors[(r, active[k])]);
        let mut out = if active.is_empty() { Mat::zeros(rows.len(), n) } else { &left * right.adjoint() };
        if baseline != C64::new(0.0, 0.0) {
            for (i, &r) in rows.iter().enumerate() {
                out[(i, r)] += baseline;
            }
        }
        out
    }
}

/// Open interval around an energy that contains no eigenvalue. Missing
/// neighbors on either side are reported as infinities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub lower: f64,
    pub upper: f64,
}

impl SpectralGap {
    pub fn contains(&self, e: f64) -> bool {
        self.lower < e && e < self.upper
    }

    pub fn half_width_around(&self, e: f64) -> f64 {
        (e - self.lower).min(self.upper - e)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// The maximal eigenvalue-free open interval around `e`. Fails if some
/// eigenvalue lies within `tol` of `e`.
pub fn spectral_gap(dec: &EigenDecomposition, e: f64, tol: f64) -> Result<SpectralGap> {
    let vals = dec.eigenvalues();
    let k = dec.count_below(e);
    let below = k.checked_sub(1).map(|i| vals[i]);
    let above = vals.get(k).copied();
    for v in [below, above].into_iter().flatten() {
        if (v - e).abs() <= tol {
            return Err(Error::NotAnInsulator { energy: e, eigenvalue: v, tol });
        }
    }
    Ok(SpectralGap { lower: below.unwrap_or(f64::NEG_INFINITY), upper: above.unwrap_or(f64::INFINITY) })
}

/// Spectral projection onto eigenvalues below `e`; `e` must lie in a gap.
pub fn fermi_projection(dec: &EigenDecomposition, e: f64) -> Result<LocalOperator> {
    spectral_gap(dec, e, dec.default_gap_tol())?;
    Ok(dec.functional_calculus(|x| if x < e { 1.0 } else { 0.0 }))
}

/// Real function of a real variable used in functional calculus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralFunction {
    /// `1` below `a`, `0` above `b`, degree-7 smoothstep in between.
    SmoothStep { a: f64, b: f64 },
    /// `-f'` for the smooth step over the same interval: nonnegative,
    /// supported in `[a, b]`, unit integral.
    Bump { a: f64, b: f64 },
    /// Piecewise-linear interpolation of `(x, y)` samples, constant beyond
    /// the ends.
    Tabulated { x: Vec<f64>, y: Vec<f64> },
}

/// `S(t) = 35t⁴ - 84t⁵ + 70t⁶ - 20t⁷`, clamped to `[0, 1]`.
fn smoothstep7(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let t4 = t * t * t * t;
    t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
}

/// `S'(t) = 140 t³ (1-t)³` on `[0, 1]`, zero outside.
fn smoothstep7_derivative(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    let s = t * (1.0 - t);
    140.0 * s * s * s
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::InvalidSpectralFunction(format!("need finite a < b, got ({a}, {b})")))
    }
}

/// The smooth step `f` over `(a, b)`.
pub fn smooth_step(a: f64, b: f64) -> Result<SpectralFunction> {
    check_interval(a, b)?;
    Ok(SpectralFunction::SmoothStep { a, b })
}

/// The bump `φ = -f'` over `(a, b)`.
pub fn bump(a: f64, b: f64) -> Result<SpectralFunction> {
    check_interval(a, b)?;
    Ok(SpectralFunction::Bump { a, b })
}

impl SpectralFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpectralFunction::SmoothStep { a, b } => 1.0 - smoothstep7((x - a) / (b - a)),
            SpectralFunction::Bump { a, b } => smoothstep7_derivative((x - a) / (b - a)) / (b - a),
            SpectralFunction::Tabulated { x: xs, y: ys } => {
                if xs.is_empty() {
                    return 0.0;
                }
                let k = xs.partition_point(|&p| p <= x);
                if k == 0 {
                    ys[0]
                } else if k == xs.len() {
                    ys[xs.len() - 1]
                } else {
                    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    ys[k - 1] + t * (ys[k] - ys[k - 1])
                }
            }
        }
    }

    /// Interval outside of which the function is locally constant, if any.
    pub fn transition(&self) -> Option<(f64, f64)> {
        match *self {
            SpectralFunction::SmoothStep { a, b } | SpectralFunction::Bump { a, b } => Some((a, b)),
            SpectralFunction::Tabulated { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralFunction::SmoothStep { a, b } | SpectralFunction::Bump { a, b } => check_interval(*a, *b),
            SpectralFunction::Tabulated { x, y } => {
                if x.len() != y.len() || x.windows(2).any(|w| w[0] >= w[1]) {
                    Err(Error::InvalidSpectralFunction("tabulated x must be increasing and match y".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Weight `exp(2πi f(λ))` of the boundary unitary. Where `f` is exactly 0
/// or 1 the weight is exactly 1.
pub(crate) fn exp_weight(f: &SpectralFunction, x: f64) -> C64 {
    let t = f.eval(x);
    if t == 0.0 || t == 1.0 {
        C64::new(1.0, 0.0)
    } else {
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)
    }
}

/// `u = exp(2πi f(H̃))` for a smooth step `f`.
pub fn exp_unitary(dec: &EigenDecomposition, f: &SpectralFunction) -> Result<LocalOperator> {
    match f {
        SpectralFunction::SmoothStep { .. } => {
            f.validate()?;
            Ok(dec.functional_calculus_complex(|x| exp_weight(f, x)))
        }
        other => Err(Error::InvalidSpectralFunction(format!("boundary unitary needs a smooth step, got {other:?}"))),
    }
}

/// A run of eigenvalues with no internal gap wider than the splitting
/// threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    pub count: usize,
}

/// Splits ascending eigenvalues wherever consecutive values differ by more
/// than `min_gap`.
pub fn clusters(values: &[f64], min_gap: f64) -> Vec<Cluster> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > min_gap {
            let run = &values[start..k];
            out.push(Cluster {
                lower: run[0],
                upper: run[run.len() - 1],
                mean: run.iter().sum::<f64>() / run.len() as f64,
                count: run.len(),
            });
            start = k;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::operator::{InternalMatrix, LocalOperator};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn clusters_split_on_gaps() {
        let c = clusters(&[0.0, 0.01, 0.02, 1.0, 1.05, 3.0], 0.1);
        assert_eq!(c.iter().map(|c| c.count).collect::<Vec<_>>(), vec![3, 2, 1]);
        assert!((c[1].mean - 1.025).abs() < 1e-15);
        assert!(clusters(&[], 0.1).is_empty());
    }

    fn point(n: usize) -> Arc<Lattice> {
        Lattice::open_box(&[1], n).unwrap()
    }

    fn from_internal(m: &InternalMatrix) -> LocalOperator {
        let lat = point(m.dim());
        let n = m.dim();
        LocalOperator::from_triplets(&lat, (0..n).flat_map(|r| (0..n).map(move |c| (r, c, m.get(r, c)))))
    }

    fn random_hermitian(n: usize, seed: u64) -> LocalOperator {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let data: Vec<C64> = (0..n * n).map(|_| c(next(), next())).collect();
        let m = InternalMatrix::from_fn(n, |r, col| data[r * n + col]);
        let h = &m + &m.adjoint();
        from_internal(&h)
    }

    #[test]
    fn diagonal_and_pauli() {
        let lat = point(3);
        let d = LocalOperator::diagonal(&lat, |k| c([3.0, 1.0, 2.0][k], 0.0));
        let dec = eigh(&d).unwrap();
        assert_eq!(dec.eigenvalues(), &[1.0, 2.0, 3.0]);
        for (k, site) in [1usize, 2, 0].into_iter().enumerate() {
            assert!((dec.component(site, k).norm() - 1.0).abs() < 1e-14);
        }
        let x = eigh(&from_internal(&InternalMatrix::pauli_x())).unwrap();
        assert!((x.eigenvalues()[0] + 1.0).abs() < 1e-14 && (x.eigenvalues()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let lat = point(2);
        let t = LocalOperator::from_triplets(&lat, [(0, 1, c(1.0, 0.0))]);
        assert!(matches!(eigh(&t), Err(Error::NotHermitian { asymmetry }) if asymmetry == 1.0));
    }

    #[test]
    fn decomposition_invariants() {
        let h = random_hermitian(12, 3);
        let dec = eigh(&h).unwrap();
        assert!(dec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        assert!(dec.orthonormality_defect() < 1e-10);
        assert!(dec.reconstruction_residual(&h) < 1e-9 * h.max_entry_norm() * 12.0);
        assert!(dec.eigen_residual() < 1e-12);
        // deterministic
        let again = eigh(&h).unwrap();
        assert_eq!(dec.eigenvalues(), again.eigenvalues());
    }

    #[test]
    fn gap_examples() {
        let x = eigh(&from_internal(&InternalMatrix::pauli_x())).unwrap();
        let gap = spectral_gap(&x, 0.0, 1e-8).unwrap();
        assert!((gap.lower + 1.0).abs() < 1e-14 && (gap.upper - 1.0).abs() < 1e-14);
        assert!(matches!(spectral_gap(&x, 1.0, 1e-8), Err(Error::NotAnInsulator { .. })));
        let above = spectral_gap(&x, 5.0, 1e-8).unwrap();
        assert_eq!(above.upper, f64::INFINITY);
    }

    #[test]
    fn fermi_projection_examples() {
        let lat = point(2);
        let d = LocalOperator::diagonal(&lat, |k| c(2.0 * k as f64, 0.0));
        let p = fermi_projection(&eigh(&d).unwrap(), 1.0).unwrap();
        let expect = LocalOperator::diagonal(&lat, |k| c(if k == 0 { 1.0 } else { 0.0 }, 0.0));
        assert!(p.distance(&expect) < 1e-14);

        let h = random_hermitian(10, 9);
        let dec = eigh(&h).unwrap();
        let e = 0.5 * (dec.eigenvalues()[4] + dec.eigenvalues()[5]);
        let p = fermi_projection(&dec, e).unwrap();
        assert!((&p * &p).distance(&p) < 1e-12);
        assert!(p.hermiticity_defect() < 1e-13);
        assert!((p.trace().re - 5.0).abs() < 1e-12);
        assert!(fermi_projection(&dec, dec.eigenvalues()[3]).is_err());
    }

    #[test]
    fn functional_calculus_examples() {
        let h = random_hermitian(8, 17);
        let dec = eigh(&h).unwrap();
        assert!(dec.functional_calculus(|x| x).distance(&h) < 1e-12);
        assert!(dec.functional_calculus(|_| 1.0).distance(&LocalOperator::identity(h.lattice())) < 1e-12);
        let rows = dec.rows_of(|x| c(x * x, 0.0), &[2, 5]);
        let sq = dec.functional_calculus(|x| x * x);
        for j in 0..8 {
            assert!((rows[(0, j)] - sq.get(2, j)).norm() < 1e-12);
            assert!((rows[(1, j)] - sq.get(5, j)).norm() < 1e-12);
        }
    }

    /// Scaling-and-squaring Taylor evaluation of `exp(A)`, independent of the
    /// eigensolver.
    fn exp_power_series(a: &InternalMatrix) -> InternalMatrix {
        let n = a.dim();
        let norm = a.max_abs() * n as f64;
        let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
        let scaled = a.scale(c(0.5f64.powi(squarings as i32), 0.0));
        let mut term = InternalMatrix::identity(n);
        let mut sum = InternalMatrix::identity(n);
        for k in 1..30 {
            term = (&term * &scaled).scale(c(1.0 / k as f64, 0.0));
            sum = &sum + &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn exp_matches_power_series() {
        let h = random_hermitian(6, 23);
        let dense = h.to_dense();
        let m = InternalMatrix::from_fn(6, |r, col| dense[(r, col)]);
        let oracle = exp_power_series(&m);
        let via_eig = eigh(&h).unwrap().functional_calculus_complex(|x| c(x.exp(), 0.0));
        for r in 0..6 {
            for col in 0..6 {
                assert!((via_eig.get(r, col) - oracle.get(r, col)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn smooth_step_and_bump() {
        let f = smooth_step(-0.6, 0.8).unwrap();
        assert_eq!(f.eval(-0.6), 1.0);
        assert_eq!(f.eval(0.8), 0.0);
        assert_eq!(f.eval(-5.0), 1.0);
        assert!((f.eval(0.1) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=200 {
            let v = f.eval(-0.7 + 1.6 * k as f64 / 200.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert!(smooth_step(1.0, 1.0).is_err());
        assert!(bump(2.0, 1.0).is_err());

        // φ = -f' by central differences
        let phi = bump(-0.6, 0.8).unwrap();
        for k in 1..40 {
            let x = -0.6 + 1.4 * k as f64 / 40.0;
            let h = 1e-5;
            let fd = -(f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            assert!((fd - phi.eval(x)).abs() < 1e-7);
            assert!(phi.eval(x) >= 0.0);
        }
        assert_eq!(phi.eval(-0.7), 0.0);
        assert_eq!(phi.eval(0.9), 0.0);
    }

    /// Gauss–Legendre nodes and weights by Newton iteration on `P_n`.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    #[test]
    fn bump_has_unit_integral() {
        for (a, b) in [(-1.0, 1.0), (-0.6, 0.6), (0.3, 2.7)] {
            let phi = bump(a, b).unwrap();
            let rule = gauss_legendre(12);
            let integral: f64 = rule
                .iter()
                .map(|&(x, w)| w * 0.5 * (b - a) * phi.eval(a + 0.5 * (b - a) * (x + 1.0)))
                .sum();
            assert!((integral - 1.0).abs() < 1e-10, "integral {integral}");
        }
    }

    #[test]
    fn tabulated_interpolates() {
        let t = SpectralFunction::Tabulated { x: vec![0.0, 1.0, 3.0], y: vec![1.0, 3.0, 0.0] };
        t.validate().unwrap();
        assert_eq!(t.eval(-1.0), 1.0);
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(2.0), 1.5);
        assert_eq!(t.eval(4.0), 0.0);
        let bad = SpectralFunction::Tabulated { x: vec![1.0, 0.0], y: vec![0.0, 0.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn exp_unitary_properties() {
        let h = random_hermitian(10, 41);
        let dec = eigh(&h).unwrap();
        let vals = dec.eigenvalues().to_vec();
        // step through the middle of the spectrum: nontrivial unitary
        let f = smooth_step(vals[3], vals[7]).unwrap();
        let u = exp_unitary(&dec, &f).unwrap();
        let id = LocalOperator::identity(h.lattice());
        assert!((&u * &u.adjoint()).distance(&id) < 1e-9);
        assert!(u.commutator(&h).max_entry_norm() < 1e-9);
        assert!(u.distance(&id) > 1e-3);

        // no spectrum in (a, b): u = I
        let f = smooth_step(vals[4] + 1e-9, vals[5] - 1e-9).unwrap();
        assert!(exp_unitary(&dec, &f).unwrap().distance(&id) < 1e-9);
        assert!(exp_unitary(&dec, &bump(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn calculus_is_an_algebra_map() {
        let h = random_hermitian(9, 5);
        let dec = eigh(&h).unwrap();
        let f = |x: f64| 1.0 + 2.0 * x - x * x * x;
        let g = |x: f64| 0.5 - x * x;
        let fg = dec.functional_calculus(|x| f(x) * g(x));
        let prod = &dec.functional_calculus(f) * &dec.functional_calculus(g);
        assert!(fg.distance(&prod) < 1e-9);

        // spectral mapping
        let fh = dec.functional_calculus(f);
        let mut mapped: Vec<f64> = dec.eigenvalues().iter().map(|&x| f(x)).collect();
        mapped.sort_by(f64::total_cmp);
        let spec = eigh(&fh).unwrap();
        for (a, b) in mapped.iter().zip(spec.eigenvalues()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fermi_projection_equals_smooth_step_in_a_gap() {
        let h = random_hermitian(10, 77);
        let dec = eigh(&h).unwrap();
        let v = dec.eigenvalues();
        let (a, b) = (v[5] + 1e-6, v[6] - 1e-6);
        let e = 0.5 * (a + b);
        let p = fermi_projection(&dec, e).unwrap();
        let f = smooth_step(a, b).unwrap();
        assert!(dec.functional_calculus(|x| f.eval(x)).distance(&p) < 1e-10);
    }
}
