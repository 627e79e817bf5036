//! Operators on `l^2(lattice) ⊗ C^n` with locality diagnostics.
//!
//! A [`LocalOperator`] is stored either as a compressed sparse row matrix
//! (hopping Hamiltonians, shifts, indicators) or as a dense matrix (outputs of
//! functional calculus). Both storages prune entries with magnitude at or
//! below [`PRUNE_TOL`] and iterate in row-major order, so traces and golden
//! files are reproducible.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Region};

/// Absolute threshold below which entries are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Small dense matrix acting on the orbital factor `C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct InternalMatrix {
    n: usize,
    data: Vec<C64>,
}

impl InternalMatrix {
    pub fn zeros(n: usize) -> Self {
        InternalMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for k in 0..n {
            m.data[k * n + k] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m.data[r * n + c] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self::from_fn(n, |r, c| rows[r][c])
    }

    pub fn pauli_x() -> Self {
        Self::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::from_rows(&[&[ZERO, -I], &[I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.n + c]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        InternalMatrix { n: self.n, data: self.data.iter().map(|&v| v * s).collect() }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.n, other.n);
        Self::from_fn(a * b, |r, c| self.get(r / b, c / b) * other.get(r % b, c % b))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance `max |self - other|`.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn to_mat(&self) -> Mat<C64> {
        Mat::from_fn(self.n, self.n, |r, c| self.get(r, c))
    }
}

impl Add for &InternalMatrix {
    type Output = InternalMatrix;
    fn add(self, rhs: &InternalMatrix) -> InternalMatrix {
        assert_eq!(self.n, rhs.n);
        InternalMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &InternalMatrix {
    type Output = InternalMatrix;
    fn sub(self, rhs: &InternalMatrix) -> InternalMatrix {
        assert_eq!(self.n, rhs.n);
        InternalMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &InternalMatrix {
    type Output = InternalMatrix;
    fn mul(self, rhs: &InternalMatrix) -> InternalMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        InternalMatrix::from_fn(n, |r, c| (0..n).map(|k| self.get(r, k) * rhs.get(k, c)).sum())
    }
}

/// Clifford generators for even `d` together with the chirality element.
#[derive(Clone, Debug)]
pub struct CliffordGenerators {
    /// `γ_1, ..., γ_d`, Hermitian and unitary, `γ_a γ_b + γ_b γ_a = 2 δ_ab`.
    pub gammas: Vec<InternalMatrix>,
    /// `γ_0 = i^{d/2} γ_1 ⋯ γ_d`.
    pub gamma0: InternalMatrix,
}

/// Builds `d` Clifford generators of size `2^{d/2}` by recursive doubling:
/// starting from `(σ_x, σ_y)`, each step maps `γ_a ↦ γ_a ⊗ σ_x`, appends
/// `γ_* ⊗ σ_x` (with `γ_*` the chirality of the previous level) and `1 ⊗ σ_y`.
pub fn clifford_generators(d: usize) -> Result<CliffordGenerators> {
    if d == 0 || d % 2 == 1 {
        return Err(Error::UnsupportedDimension(format!(
            "Clifford generators need an even positive dimension, got {d}"
        )));
    }
    let mut gammas = vec![InternalMatrix::pauli_x(), InternalMatrix::pauli_y()];
    while gammas.len() < d {
        let chirality = chirality(&gammas);
        let size = gammas[0].dim();
        let mut next: Vec<InternalMatrix> = gammas.iter().map(|g| g.kron(&InternalMatrix::pauli_x())).collect();
        next.push(chirality.kron(&InternalMatrix::pauli_x()));
        next.push(InternalMatrix::identity(size).kron(&InternalMatrix::pauli_y()));
        gammas = next;
    }
    let gamma0 = chirality(&gammas);
    Ok(CliffordGenerators { gammas, gamma0 })
}

fn chirality(gammas: &[InternalMatrix]) -> InternalMatrix {
    let half = gammas.len() / 2;
    let phase = I.powu(half as u32);
    let product = gammas.iter().skip(1).fold(gammas[0].clone(), |acc, g| &acc * g);
    product.scale(phase)
}

#[derive(Clone, Debug)]
struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_sorted(dim: usize, entries: BTreeMap<(usize, usize), C64>) -> Self {
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for ((r, c), v) in entries {
            if v.norm() > PRUNE_TOL {
                row_ptr[r + 1] += 1;
                cols.push(c);
                vals.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { dim, row_ptr, cols, vals }
    }

    /// Builds from per-row entries already sorted by column.
    fn from_rows(dim: usize, rows: Vec<Vec<(usize, C64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, v) in row {
                if v.norm() > PRUNE_TOL {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { dim, row_ptr, cols, vals }
    }

    #[inline]
    fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }

    fn map_rows(&self, mut f: impl FnMut(usize, &mut Vec<(usize, C64)>)) -> Csr {
        let rows = (0..self.dim)
            .map(|r| {
                let mut row: Vec<(usize, C64)> = self.row(r).collect();
                f(r, &mut row);
                row
            })
            .collect();
        Csr::from_rows(self.dim, rows)
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Sparse(Csr),
    Dense(Mat<C64>),
}

/// A bounded operator on the lattice Hilbert space.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    lattice: Arc<Lattice>,
    storage: Storage,
    propagation: OnceLock<usize>,
}

fn prune_dense(mut m: Mat<C64>) -> Mat<C64> {
    for c in 0..m.ncols() {
        for v in m.col_mut(c).iter_mut() {
            if v.norm() <= PRUNE_TOL {
                *v = ZERO;
            }
        }
    }
    m
}

impl LocalOperator {
    fn new(lattice: Arc<Lattice>, storage: Storage) -> Self {
        LocalOperator { lattice, storage, propagation: OnceLock::new() }
    }

    /// Sums duplicate `(row, col, value)` entries and prunes.
    pub fn from_triplets(lattice: &Arc<Lattice>, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let dim = lattice.hilbert_dim();
        let mut map = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            *map.entry((r, c)).or_insert(ZERO) += v;
        }
        Self::new(lattice.clone(), Storage::Sparse(Csr::from_sorted(dim, map)))
    }

    pub fn from_dense(lattice: &Arc<Lattice>, m: Mat<C64>) -> Self {
        let dim = lattice.hilbert_dim();
        assert!(m.nrows() == dim && m.ncols() == dim, "dense matrix does not match lattice dimension");
        Self::new(lattice.clone(), Storage::Dense(prune_dense(m)))
    }

    pub fn zero(lattice: &Arc<Lattice>) -> Self {
        Self::from_triplets(lattice, [])
    }

    pub fn identity(lattice: &Arc<Lattice>) -> Self {
        Self::diagonal(lattice, |_| ONE)
    }

    /// Diagonal operator with entries `f(flat_index)`.
    pub fn diagonal(lattice: &Arc<Lattice>, f: impl Fn(usize) -> C64) -> Self {
        Self::from_triplets(lattice, (0..lattice.hilbert_dim()).map(|k| (k, k, f(k))))
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.hilbert_dim()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Sparse(s) => s.nnz(),
            Storage::Dense(m) => {
                let mut n = 0;
                for c in 0..m.ncols() {
                    n += m.col(c).iter().filter(|v| **v != ZERO).count();
                }
                n
            }
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match &self.storage {
            Storage::Sparse(s) => s.get(r, c),
            Storage::Dense(m) => m[(r, c)],
        }
    }

    /// Visits every nonzero entry in row-major order.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, C64)) {
        match &self.storage {
            Storage::Sparse(s) => {
                for r in 0..s.dim {
                    for (c, v) in s.row(r) {
                        f(r, c, v);
                    }
                }
            }
            Storage::Dense(m) => {
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        let v = m[(r, c)];
                        if v != ZERO {
                            f(r, c, v);
                        }
                    }
                }
            }
        }
    }

    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::new();
        self.for_each_entry(|r, c, v| out.push((r, c, v)));
        out
    }

    /// Nonzero entries of one row, by column.
    pub fn row(&self, r: usize) -> Vec<(usize, C64)> {
        match &self.storage {
            Storage::Sparse(s) => s.row(r).collect(),
            Storage::Dense(m) => (0..m.ncols()).map(|c| (c, m[(r, c)])).filter(|(_, v)| *v != ZERO).collect(),
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => {
                let mut m = Mat::zeros(s.dim, s.dim);
                for r in 0..s.dim {
                    for (c, v) in s.row(r) {
                        m[(r, c)] = v;
                    }
                }
                m
            }
        }
    }

    /// Converts to sparse storage, dropping entries with magnitude `<= tol`.
    pub fn sparsified(&self, tol: f64) -> Self {
        let dim = self.dim();
        let mut rows = vec![Vec::new(); dim];
        self.for_each_entry(|r, c, v| {
            if v.norm() > tol {
                rows[r].push((c, v));
            }
        });
        Self::new(self.lattice.clone(), Storage::Sparse(Csr::from_rows(dim, rows)))
    }

    pub fn adjoint(&self) -> Self {
        match &self.storage {
            Storage::Dense(m) => Self::new(self.lattice.clone(), Storage::Dense(m.adjoint().to_owned())),
            Storage::Sparse(s) => {
                let mut rows = vec![Vec::new(); s.dim];
                for r in 0..s.dim {
                    for (c, v) in s.row(r) {
                        rows[c].push((r, v.conj()));
                    }
                }
                Self::new(self.lattice.clone(), Storage::Sparse(Csr::from_rows(s.dim, rows)))
            }
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        match &self.storage {
            Storage::Dense(m) => Self::from_dense(&self.lattice, Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * s)),
            Storage::Sparse(csr) => Self::new(
                self.lattice.clone(),
                Storage::Sparse(csr.map_rows(|_, row| row.iter_mut().for_each(|(_, v)| *v *= s))),
            ),
        }
    }

    fn check_same_lattice(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice == other.lattice,
            "operators live on different lattices"
        );
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        self.check_same_lattice(other);
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let rows = (0..a.dim)
                    .map(|r| {
                        let mut merged: BTreeMap<usize, C64> = a.row(r).collect();
                        for (c, v) in b.row(r) {
                            *merged.entry(c).or_insert(ZERO) += v * sign;
                        }
                        merged.into_iter().collect()
                    })
                    .collect();
                Self::new(self.lattice.clone(), Storage::Sparse(Csr::from_rows(a.dim, rows)))
            }
            _ => {
                let mut m = self.to_dense();
                other.for_each_entry(|r, c, v| m[(r, c)] += v * sign);
                Self::from_dense(&self.lattice, m)
            }
        }
    }

    fn product(&self, other: &Self) -> Self {
        self.check_same_lattice(other);
        let dim = self.dim();
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut acc = vec![ZERO; dim];
                let mut touched = vec![false; dim];
                let mut cols = Vec::new();
                let rows = (0..dim)
                    .map(|r| {
                        for (k, av) in a.row(r) {
                            for (c, bv) in b.row(k) {
                                if !touched[c] {
                                    touched[c] = true;
                                    cols.push(c);
                                }
                                acc[c] += av * bv;
                            }
                        }
                        cols.sort_unstable();
                        let row = cols.iter().map(|&c| (c, acc[c])).collect();
                        for &c in &cols {
                            acc[c] = ZERO;
                            touched[c] = false;
                        }
                        cols.clear();
                        row
                    })
                    .collect();
                Self::new(self.lattice.clone(), Storage::Sparse(Csr::from_rows(dim, rows)))
            }
            (Storage::Dense(a), Storage::Sparse(b)) => {
                // (A S)[:, c] = Σ_k A[:, k] S[k, c]
                let mut out = Mat::<C64>::zeros(dim, dim);
                for k in 0..dim {
                    for (c, s) in b.row(k) {
                        let src = a.col(k);
                        for (o, &x) in out.col_mut(c).iter_mut().zip(src.iter()) {
                            *o += x * s;
                        }
                    }
                }
                Self::from_dense(&self.lattice, out)
            }
            (Storage::Sparse(a), Storage::Dense(b)) => {
                let mut out = Mat::<C64>::zeros(dim, dim);
                for c in 0..dim {
                    let src = b.col(c);
                    let mut dst = out.col_mut(c);
                    for r in 0..dim {
                        let mut s = ZERO;
                        for (k, v) in a.row(r) {
                            s += v * src[k];
                        }
                        dst[r] = s;
                    }
                }
                Self::from_dense(&self.lattice, out)
            }
            (Storage::Dense(a), Storage::Dense(b)) => Self::from_dense(&self.lattice, a * b),
        }
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `χ_Y T χ_Y`.
    pub fn compress(&self, y: &Region) -> Self {
        let lat = &self.lattice;
        let keep = |flat: usize| y.contains(lat.site_of(flat));
        match &self.storage {
            Storage::Sparse(s) => Self::new(
                lat.clone(),
                Storage::Sparse(s.map_rows(|r, row| {
                    if keep(r) {
                        row.retain(|&(c, _)| keep(c))
                    } else {
                        row.clear()
                    }
                })),
            ),
            Storage::Dense(m) => {
                Self::from_dense(lat, Mat::from_fn(m.nrows(), m.ncols(), |r, c| if keep(r) && keep(c) { m[(r, c)] } else { ZERO }))
            }
        }
    }

    pub fn max_entry_norm(&self) -> f64 {
        let mut best = 0.0f64;
        self.for_each_entry(|_, _, v| best = best.max(v.norm()));
        best
    }

    /// `max |T - T*|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        self.for_each_entry(|r, c, v| worst = worst.max((v - self.get(c, r).conj()).norm()));
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Max-entry distance to another operator on the same lattice.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).max_entry_norm()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|k| self.get(k, k)).sum()
    }

    /// Sum of diagonal entries over all orbitals of the sites in `window`.
    pub fn windowed_trace(&self, window: &Region) -> C64 {
        (0..self.dim()).filter(|&k| window.contains(self.lattice.site_of(k))).map(|k| self.get(k, k)).sum()
    }

    /// Largest site distance between entries with magnitude above `tol`.
    pub fn propagation_radius(&self, tol: f64) -> f64 {
        let lat = &self.lattice;
        let mut r = 0usize;
        self.for_each_entry(|i, j, v| {
            if v.norm() > tol {
                r = r.max(lat.distance(lat.site_of(i), lat.site_of(j)));
            }
        });
        r as f64
    }

    /// Propagation radius at the pruning threshold, computed once.
    pub fn propagation(&self) -> f64 {
        *self.propagation.get_or_init(|| self.propagation_radius(PRUNE_TOL) as usize) as f64
    }

    /// Maximum entry magnitude in each site-distance shell.
    pub fn decay_profile(&self) -> BTreeMap<usize, f64> {
        let lat = &self.lattice;
        let mut profile = BTreeMap::new();
        self.for_each_entry(|i, j, v| {
            let s = lat.distance(lat.site_of(i), lat.site_of(j));
            let e = profile.entry(s).or_insert(0.0f64);
            *e = e.max(v.norm());
        });
        profile
    }

    /// `sup |T_ij| · d(i,Z)^μ · d(j,Z)^μ`, with the factor for sites inside
    /// `Z` (distance zero) taken to be one.
    pub fn decay_away_from(&self, z: &Region, mu: f64) -> Result<f64> {
        if z.is_empty() {
            return Err(Error::EmptyRegion("decay_away_from needs a nonempty reference region".into()));
        }
        let dist = z.distance_field();
        let weight: Vec<f64> = dist.iter().map(|&d| (d.max(1) as f64).powf(mu)).collect();
        let lat = &self.lattice;
        let mut sup = 0.0f64;
        self.for_each_entry(|i, j, v| {
            sup = sup.max(v.norm() * weight[lat.site_of(i)] * weight[lat.site_of(j)]);
        });
        Ok(sup)
    }

    /// Writes the sparse triplet format: one `row col re im` line per nonzero
    /// entry, row-major, flattened indices.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut result = Ok(());
        self.for_each_entry(|r, c, v| {
            if result.is_ok() {
                result = writeln!(w, "{r} {c} {} {}", v.re, v.im);
            }
        });
        result
    }

    /// Reads the triplet format. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn read_triplets<R: BufRead>(lattice: &Arc<Lattice>, r: R) -> Result<Self> {
        let dim = lattice.hilbert_dim();
        let mut triplets = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Triplet { line: k + 1, message };
            let fields: Vec<&str> = t.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            }
            let row: usize = fields[0].parse().map_err(|e| bad(format!("row: {e}")))?;
            let col: usize = fields[1].parse().map_err(|e| bad(format!("col: {e}")))?;
            let re: f64 = fields[2].parse().map_err(|e| bad(format!("re: {e}")))?;
            let im: f64 = fields[3].parse().map_err(|e| bad(format!("im: {e}")))?;
            if row >= dim || col >= dim {
                return Err(bad(format!("index outside dimension {dim}")));
            }
            triplets.push((row, col, C64::new(re, im)));
        }
        Ok(Self::from_triplets(lattice, triplets))
    }
}

impl Add for &LocalOperator {
    type Output = LocalOperator;
    fn add(self, rhs: &LocalOperator) -> LocalOperator {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &LocalOperator {
    type Output = LocalOperator;
    fn sub(self, rhs: &LocalOperator) -> LocalOperator {
        self.combine(rhs, -1.0)
    }
}

impl Mul for &LocalOperator {
    type Output = LocalOperator;
    fn mul(self, rhs: &LocalOperator) -> LocalOperator {
        self.product(rhs)
    }
}

impl Neg for &LocalOperator {
    type Output = LocalOperator;
    fn neg(self) -> LocalOperator {
        self.scale(-ONE)
    }
}

/// Translation by one site along `axis`: `S e_c = e_{c + e_axis}`. Open axes
/// drop the last column; periodic axes wrap. Identity on orbitals.
pub fn shift_operator(lattice: &Arc<Lattice>, axis: usize) -> Result<LocalOperator> {
    if axis >= lattice.dim() {
        return Err(Error::UnsupportedGeometry(format!("axis {axis} out of range for dimension {}", lattice.dim())));
    }
    let n = lattice.orbitals();
    let mut triplets = Vec::new();
    for s in 0..lattice.sites() {
        if let Some(t) = lattice.step(s, axis, 1) {
            for o in 0..n {
                triplets.push((lattice.flat_index(t, o), lattice.flat_index(s, o), ONE));
            }
        }
    }
    Ok(LocalOperator::from_triplets(lattice, triplets))
}

/// `T ⊗ M` for an orbital-free spatial operator `T`. The result lives on the
/// same geometry with `M.dim()` orbitals per site.
pub fn tensor_with_internal(spatial: &LocalOperator, m: &InternalMatrix) -> Result<LocalOperator> {
    let base = spatial.lattice();
    if base.orbitals() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "spatial factor must have one orbital per site, found {}",
            base.orbitals()
        )));
    }
    let n = m.dim();
    let lattice = Lattice::new(base.axes().to_vec(), n)?;
    let mut triplets = Vec::new();
    spatial.for_each_entry(|i, j, t| {
        for a in 0..n {
            for b in 0..n {
                triplets.push((i * n + a, j * n + b, t * m.get(a, b)));
            }
        }
    });
    Ok(LocalOperator::from_triplets(&lattice, triplets))
}

/// `χ_Y`: the 0/1 diagonal projection onto the sites of `Y`.
pub fn indicator_operator(y: &Region) -> LocalOperator {
    let lat = y.lattice();
    LocalOperator::diagonal(lat, |k| if y.contains(lat.site_of(k)) { ONE } else { ZERO })
}
