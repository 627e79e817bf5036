//! Topological invariants: Bloch-space and real-space Chern numbers, and the
//! windowed trace estimators of the edge index.
//!
//! On a finite lattice every trace of a commutator vanishes, so each edge
//! estimator sums a diagonal over an ℓ∞ window centered on a single crossing
//! of `∂Y` with `∂W` and reports the value as a function of the window
//! radius. A value is only returned when that table has a plateau.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{Mat, Side as EigSide};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Region};
use crate::models::{bloch_symbol, ModelFamily, ModelSpec};
use crate::operator::LocalOperator;
use crate::spectral::{exp_weight, EigenDecomposition, SpectralFunction, SpectralGap, RELATIVE_GAP_TOL};

/// Relative plateau threshold over the top half of a radius sweep.
pub const PLATEAU_THRESHOLD: f64 = 0.02;

/// Allowed distance of the raw FHS sum from an integer.
pub const FHS_RESIDUAL_TOL: f64 = 1e-6;

pub const PROJECTION_TOL: f64 = 1e-8;
pub const UNITARITY_TOL: f64 = 1e-8;

/// Sign relating the edge index to the Chern number of the Fermi projection:
/// for `W = {x >= L/2}` and the window on the bottom crossing of an open box,
/// `θ_W = ORIENTATION · C`. Fixed by the toy model at `m = 1`, where
/// `C = -1` and `θ_W = +1`.
pub const ORIENTATION: f64 = -1.0;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Chern number of the Fermi sub-bundle on a discrete Brillouin torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernNumber {
    pub value: i64,
    /// Sum of plaquette fields over `2π` before rounding.
    pub raw: f64,
    pub residual: f64,
    pub grid: usize,
    pub bands: usize,
}

/// Occupied frame of `Ĥ(k)` below `e`.
fn occupied_frame(spec: &ModelSpec, k: [f64; 2], e: f64) -> Result<Mat<C64>> {
    let symbol = bloch_symbol(spec, &k)?.to_mat();
    let evd = symbol
        .self_adjoint_eigen(EigSide::Lower)
        .map_err(|err| Error::Eigensolver(format!("{err:?}")))?;
    let n = symbol.nrows();
    let values: Vec<f64> = (0..n).map(|j| evd.S()[j].re).collect();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(&v) = values.iter().find(|v| (**v - e).abs() <= RELATIVE_GAP_TOL * scale) {
        return Err(Error::GapClosedOnGrid { k: k.to_vec(), eigenvalue: v });
    }
    let occ = values.partition_point(|&v| v < e);
    Ok(evd.U().subcols(0, occ).to_owned())
}

fn link(a: &Mat<C64>, b: &Mat<C64>) -> C64 {
    let overlap = a.adjoint() * b;
    let det = overlap.as_ref().determinant();
    if det.norm() == 0.0 {
        ONE
    } else {
        det / det.norm()
    }
}

/// Fukui–Hatsugai–Suzuki lattice Chern number of the bands below `e` on an
/// `nk × nk` grid.
pub fn fhs_chern(spec: &ModelSpec, e: f64, nk: usize) -> Result<ChernNumber> {
    fhs_chern_with_tolerance(spec, e, nk, FHS_RESIDUAL_TOL)
}

/// [`fhs_chern`] with an explicit bound on the pre-rounding residual.
pub fn fhs_chern_with_tolerance(spec: &ModelSpec, e: f64, nk: usize, tol: f64) -> Result<ChernNumber> {
    if spec.dim() != 2 {
        return Err(Error::UnsupportedDimension(format!("Chern number needs d = 2, got d = {}", spec.dim())));
    }
    if !spec.is_translation_invariant() {
        return Err(Error::NoSymbol("Chern number needs a translation-invariant model".into()));
    }
    if nk < 2 {
        return Err(Error::Config("k-grid needs at least 2 points per axis".into()));
    }
    let step = 2.0 * PI / nk as f64;
    let mut frames = Vec::with_capacity(nk * nk);
    for i in 0..nk {
        for j in 0..nk {
            frames.push(occupied_frame(spec, [i as f64 * step, j as f64 * step], e)?);
        }
    }
    let bands = frames[0].ncols();
    if let Some(pos) = frames.iter().position(|f| f.ncols() != bands) {
        let k = vec![(pos / nk) as f64 * step, (pos % nk) as f64 * step];
        return Err(Error::GapClosedOnGrid { k, eigenvalue: e });
    }
    let at = |i: usize, j: usize| &frames[(i % nk) * nk + j % nk];
    let mut total = 0.0;
    for i in 0..nk {
        for j in 0..nk {
            let u1 = link(at(i, j), at(i + 1, j));
            let u2 = link(at(i + 1, j), at(i + 1, j + 1));
            let u3 = link(at(i, j + 1), at(i + 1, j + 1));
            let u4 = link(at(i, j), at(i, j + 1));
            total += (u1 * u2 / (u3 * u4)).arg();
        }
    }
    let raw = total / (2.0 * PI);
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual > tol {
        return Err(Error::GridTooCoarse { residual, tol });
    }
    Ok(ChernNumber { value: value as i64, raw, residual, grid: nk, bands })
}

/// Flat indices of every orbital at the sites of `region`.
pub fn region_rows(region: &Region) -> Vec<usize> {
    let lat = region.lattice();
    region.sites().flat_map(|s| (0..lat.orbitals()).map(move |o| lat.flat_index(s, o))).collect()
}

/// Disk window split into three 120° sectors, counterclockwise from the
/// positive first axis.
#[derive(Clone, Debug)]
pub struct Tripartition {
    pub sectors: [Region; 3],
    pub center: [f64; 2],
    pub radius: f64,
}

impl Tripartition {
    /// Euclidean disk of `radius` around a point given in lattice
    /// coordinates; periodic axes use the minimal image.
    pub fn disk(lattice: &Arc<Lattice>, center: [f64; 2], radius: f64) -> Result<Self> {
        if lattice.dim() != 2 {
            return Err(Error::UnsupportedDimension("tripartition needs d = 2".into()));
        }
        let offset = |site: usize, axis: usize| {
            let mut d = lattice.coord(site, axis) as f64 - center[axis];
            if lattice.boundary(axis) == crate::lattice::Boundary::Periodic {
                let l = lattice.extent(axis) as f64;
                d -= l * (d / l).round();
            }
            d
        };
        let mut masks = [vec![false; lattice.sites()], vec![false; lattice.sites()], vec![false; lattice.sites()]];
        #[allow(clippy::needless_range_loop)]
        for s in 0..lattice.sites() {
            let (dx, dy) = (offset(s, 0), offset(s, 1));
            if dx.hypot(dy) > radius {
                continue;
            }
            let angle = dy.atan2(dx).rem_euclid(2.0 * PI);
            let sector = ((angle / (2.0 * PI / 3.0)) as usize).min(2);
            masks[sector][s] = true;
        }
        let region = |mask: &Vec<bool>| Region::from_sites(lattice, mask.iter().enumerate().filter(|(_, &m)| m).map(|(s, _)| s));
        let sectors = [region(&masks[0])?, region(&masks[1])?, region(&masks[2])?];
        if sectors.iter().any(Region::is_empty) {
            return Err(Error::EmptyRegion("disk too small for three sectors".into()));
        }
        Ok(Tripartition { sectors, center, radius })
    }

    pub fn window(&self) -> Region {
        self.sectors[0].union(&self.sectors[1]).union(&self.sectors[2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealSpaceChern {
    pub value: f64,
    pub imag_residual: f64,
    /// `max |p² - p|` over the window block.
    pub projection_defect: f64,
}

/// `12πi Σ_{j∈A,k∈B,l∈C} (p_jk p_kl p_lj - p_jl p_lk p_kj)`.
pub fn real_space_chern(p: &LocalOperator, tri: &Tripartition) -> Result<RealSpaceChern> {
    let lat = p.lattice();
    if tri.sectors.iter().any(|s| **s.lattice() != **lat) {
        return Err(Error::LatticeMismatch);
    }
    let window = tri.window();
    let rows = region_rows(&window);
    let n = p.dim();
    let mut full = Mat::<C64>::zeros(rows.len(), n);
    for (a, &r) in rows.iter().enumerate() {
        for (c, v) in p.row(r) {
            full[(a, c)] = v;
        }
    }
    // (p²)_ij = Σ_k p_ik conj(p_jk) for Hermitian p
    let square = &full * full.adjoint();
    let mut projection_defect = 0.0f64;
    for a in 0..rows.len() {
        for b in 0..rows.len() {
            projection_defect = projection_defect.max((square[(a, b)] - full[(a, rows[b])]).norm());
        }
    }
    if projection_defect > PROJECTION_TOL {
        return Err(Error::NotAProjection { defect: projection_defect });
    }
    let pos: std::collections::HashMap<usize, usize> = rows.iter().enumerate().map(|(a, &r)| (r, a)).collect();
    let idx: Vec<Vec<usize>> = tri.sectors.iter().map(|s| region_rows(s).iter().map(|r| pos[r]).collect()).collect();
    let block = |x: &[usize], y: &[usize]| Mat::from_fn(x.len(), y.len(), |i, j| full[(x[i], rows[y[j]])]);
    let (a, b, c) = (&idx[0], &idx[1], &idx[2]);
    let forward = &(&block(a, b) * &block(b, c)) * &block(c, a);
    let backward = &(&block(a, c) * &block(c, b)) * &block(b, a);
    let trace = |m: &Mat<C64>| (0..m.nrows()).map(|i| m[(i, i)]).sum::<C64>();
    let total = C64::new(0.0, 12.0 * PI) * (trace(&forward) - trace(&backward));
    Ok(RealSpaceChern { value: total.re, imag_residual: total.im.abs(), projection_defect })
}

/// Boundary `∂Y` and half-space `W` of an edge experiment.
#[derive(Clone, Debug)]
pub struct EdgeGeometry {
    pub boundary: Region,
    pub w: Region,
}

impl EdgeGeometry {
    pub fn new(boundary: Region, w: Region) -> Result<Self> {
        if **boundary.lattice() != **w.lattice() {
            return Err(Error::LatticeMismatch);
        }
        Ok(EdgeGeometry { boundary, w })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        self.w.lattice()
    }

    /// Connected pieces of `∂Y ∩ strip(W, 1)`.
    pub fn crossings(&self) -> Vec<Region> {
        self.boundary.intersection(&self.w.coarse_boundary_strip(1.0)).components()
    }
}

/// Concentric ℓ∞ windows of increasing radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSweep {
    pub center: Vec<i64>,
    pub radii: Vec<f64>,
}

impl WindowSweep {
    pub fn new(center: Vec<i64>, radii: Vec<f64>) -> Self {
        WindowSweep { center, radii }
    }

    pub fn default_radii() -> Vec<f64> {
        vec![4.0, 6.0, 8.0, 10.0, 12.0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::Config("window sweep needs at least one radius".into()));
        }
        if self.radii.windows(2).any(|w| !(w[0] < w[1])) || self.radii[0] < 0.0 {
            return Err(Error::Config(format!("window radii must be nonnegative and increasing, got {:?}", self.radii)));
        }
        Ok(())
    }

    pub fn center_site(&self, lattice: &Lattice) -> Result<usize> {
        lattice
            .site_index(&self.center)
            .ok_or_else(|| Error::UnsupportedGeometry(format!("window center {:?} is not a lattice site", self.center)))
    }

    pub fn windows(&self, lattice: &Arc<Lattice>) -> Result<Vec<Region>> {
        self.validate()?;
        let c = self.center_site(lattice)?;
        self.radii.iter().map(|&r| Region::ball(lattice, c, r)).collect()
    }

    /// Windows, after checking that each touches exactly one crossing of
    /// every partition in `geometries`.
    pub fn checked_windows(&self, geometries: &[&EdgeGeometry]) -> Result<Vec<Region>> {
        let lattice = geometries.first().map(|g| g.lattice().clone()).ok_or_else(|| Error::Config("no edge geometry".into()))?;
        let windows = self.windows(&lattice)?;
        for g in geometries {
            let crossings = g.crossings();
            for (w, &r) in windows.iter().zip(&self.radii) {
                let touched = crossings.iter().filter(|c| !c.intersection(w).is_empty()).count();
                if touched != 1 {
                    return Err(Error::WindowOverlap { radius: r, crossings: touched });
                }
            }
        }
        Ok(windows)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauPoint {
    pub radius: f64,
    pub re: f64,
    pub im: f64,
}

/// Windowed trace over a radius sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedTraceResult {
    /// Real part at the largest radius, present only when converged.
    pub value: Option<f64>,
    /// Real part at the largest radius, converged or not.
    pub last: f64,
    /// Largest imaginary part over the sweep.
    pub imag_residual: f64,
    pub center: Vec<i64>,
    pub radius: f64,
    pub plateau: Vec<PlateauPoint>,
    pub converged: bool,
    pub threshold: f64,
}

impl WindowedTraceResult {
    pub fn from_table(center: Vec<i64>, plateau: Vec<PlateauPoint>, threshold: f64) -> Self {
        let last = plateau.last().map_or(0.0, |p| p.re);
        let top = &plateau[plateau.len() / 2..];
        let (lo, hi) = top.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.re), hi.max(p.re)));
        let converged = !plateau.is_empty() && hi - lo <= threshold * last.abs().max(1.0);
        WindowedTraceResult {
            value: converged.then_some(last),
            last,
            imag_residual: plateau.iter().fold(0.0, |m, p| m.max(p.im.abs())),
            center,
            radius: plateau.last().map_or(0.0, |p| p.radius),
            plateau,
            converged,
            threshold,
        }
    }

    /// The same table judged against another plateau threshold.
    pub fn with_threshold(self, threshold: f64) -> Self {
        Self::from_table(self.center, self.plateau, threshold)
    }

    /// Windowed sums of a per-row diagonal.
    fn from_diagonal(sweep: &WindowSweep, windows: &[Region], rows: &[usize], diag: &[C64]) -> Self {
        let lat = windows[0].lattice();
        let table = windows
            .iter()
            .zip(&sweep.radii)
            .map(|(w, &radius)| {
                let sum: C64 = rows.iter().zip(diag).filter(|(r, _)| w.contains(lat.site_of(**r))).map(|(_, v)| *v).sum();
                PlateauPoint { radius, re: sum.re, im: sum.im }
            })
            .collect();
        Self::from_table(sweep.center.clone(), table, PLATEAU_THRESHOLD)
    }
}

/// A unitary on a lattice, seen through the pieces the edge estimators need.
pub trait Unitary {
    fn lattice(&self) -> &Arc<Lattice>;

    /// `max |u u* - I|`.
    fn unitarity_defect(&self) -> f64;

    /// The listed rows of `u`, as a `rows.len() x dim` matrix.
    fn rows(&self, rows: &[usize]) -> Mat<C64>;

    /// Diagonal entries at `rows` of `(u χ_W u* - χ_W)^power`.
    fn defect_power_diagonal(&self, w: &Region, rows: &[usize], power: usize) -> Vec<C64>;
}

fn indicator(w: &Region, flat: usize) -> f64 {
    if w.contains(w.lattice().site_of(flat)) {
        1.0
    } else {
        0.0
    }
}

impl Unitary for LocalOperator {
    fn lattice(&self) -> &Arc<Lattice> {
        LocalOperator::lattice(self)
    }

    fn unitarity_defect(&self) -> f64 {
        let d = self.to_dense();
        let prod = &d * d.adjoint();
        let mut defect = 0.0f64;
        for i in 0..prod.nrows() {
            for j in 0..prod.ncols() {
                let target = if i == j { ONE } else { ZERO };
                defect = defect.max((prod[(i, j)] - target).norm());
            }
        }
        defect
    }

    fn rows(&self, rows: &[usize]) -> Mat<C64> {
        let mut out = Mat::zeros(rows.len(), self.dim());
        for (a, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[(a, c)] = v;
            }
        }
        out
    }

    fn defect_power_diagonal(&self, w: &Region, rows: &[usize], power: usize) -> Vec<C64> {
        let u = self.to_dense();
        let n = u.nrows();
        let u_chi = Mat::from_fn(n, n, |i, j| u[(i, j)] * indicator(w, j));
        let mut d = &u_chi * u.adjoint();
        for i in 0..n {
            d[(i, i)] -= indicator(w, i);
        }
        let mut z = Mat::from_fn(rows.len(), n, |a, c| d[(rows[a], c)]);
        for _ in 1..power {
            z = &z * &d;
        }
        rows.iter().enumerate().map(|(a, &r)| z[(a, r)]).collect()
    }
}

/// `u = I + F diag(s) F*` with `F` the eigenvectors whose weight
/// `exp(2πi f(λ))` differs from 1. For a smooth step whose transition lies in
/// a bulk gap, `F` spans only boundary states and the rank stays small.
#[derive(Clone, Debug)]
pub struct BoundaryUnitary {
    lattice: Arc<Lattice>,
    frame: Mat<C64>,
    shifts: Vec<C64>,
}

impl BoundaryUnitary {
    /// `exp(2πi f(H̃))` from a decomposition of `H̃`.
    pub fn new(dec: &EigenDecomposition, f: &SpectralFunction) -> Result<Self> {
        if !matches!(f, SpectralFunction::SmoothStep { .. }) {
            return Err(Error::InvalidSpectralFunction(format!("boundary unitary needs a smooth step, got {f:?}")));
        }
        f.validate()?;
        let active: Vec<usize> = (0..dec.dim()).filter(|&k| exp_weight(f, dec.eigenvalues()[k]) != ONE).collect();
        let v = dec.eigenvectors();
        let frame = Mat::from_fn(dec.dim(), active.len(), |r, k| v[(r, active[k])]);
        let shifts = active.iter().map(|&k| exp_weight(f, dec.eigenvalues()[k]) - ONE).collect();
        Ok(BoundaryUnitary { lattice: dec.lattice().clone(), frame, shifts })
    }

    pub fn identity(lattice: &Arc<Lattice>) -> Self {
        BoundaryUnitary { lattice: lattice.clone(), frame: Mat::zeros(lattice.hilbert_dim(), 0), shifts: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.shifts.len()
    }

    fn scaled_frame(&self) -> Mat<C64> {
        Mat::from_fn(self.frame.nrows(), self.rank(), |r, k| self.frame[(r, k)] * self.shifts[k])
    }

    pub fn to_operator(&self) -> LocalOperator {
        let mut m = &self.scaled_frame() * self.frame.adjoint();
        for i in 0..m.nrows() {
            m[(i, i)] += ONE;
        }
        LocalOperator::from_dense(&self.lattice, m)
    }

    /// Factors of `D = u χ_W u* - χ_W = B K B*`, with `B = [F | χ_W F]`.
    fn defect_factors(&self, w: &Region) -> (Mat<C64>, Mat<C64>) {
        let (n, r) = (self.frame.nrows(), self.rank());
        let b = Mat::from_fn(n, 2 * r, |i, k| {
            if k < r {
                self.frame[(i, k)]
            } else {
                self.frame[(i, k - r)] * indicator(w, i)
            }
        });
        let chi_f = b.subcols(r, r);
        let g = self.frame.adjoint() * chi_f;
        let s = &self.shifts;
        let k = Mat::from_fn(2 * r, 2 * r, |i, j| match (i < r, j < r) {
            (true, true) => s[i] * g[(i, j)] * s[j].conj(),
            (true, false) if j - r == i => s[i],
            (false, true) if i - r == j => s[j].conj(),
            _ => ZERO,
        });
        (b, k)
    }

    /// The dense operator `u χ_W u* - χ_W`.
    pub fn defect_operator(&self, w: &Region) -> LocalOperator {
        let (b, k) = self.defect_factors(w);
        LocalOperator::from_dense(&self.lattice, &(&b * &k) * b.adjoint())
    }
}

impl Unitary for BoundaryUnitary {
    fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    fn unitarity_defect(&self) -> f64 {
        let gram = self.frame.adjoint() * &self.frame;
        let mut defect = 0.0f64;
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                let target = if i == j { ONE } else { ZERO };
                defect = defect.max((gram[(i, j)] - target).norm());
            }
            defect = defect.max(((ONE + self.shifts[i]).norm() - 1.0).abs());
        }
        defect
    }

    fn rows(&self, rows: &[usize]) -> Mat<C64> {
        let sf = self.scaled_frame();
        let left = Mat::from_fn(rows.len(), self.rank(), |a, k| sf[(rows[a], k)]);
        let mut out = &left * self.frame.adjoint();
        for (a, &r) in rows.iter().enumerate() {
            out[(a, r)] += ONE;
        }
        out
    }

    fn defect_power_diagonal(&self, w: &Region, rows: &[usize], power: usize) -> Vec<C64> {
        if power == 0 {
            return vec![ONE; rows.len()];
        }
        let (b, k) = self.defect_factors(w);
        let gram = b.adjoint() * &b;
        let gk = &gram * &k;
        let mut m = k.clone();
        for _ in 1..power {
            m = &m * &gk;
        }
        let b_rows = Mat::from_fn(rows.len(), b.ncols(), |a, j| b[(rows[a], j)]);
        let bm = &b_rows * &m;
        (0..rows.len())
            .map(|a| (0..b.ncols()).map(|j| bm[(a, j)] * b_rows[(a, j)].conj()).sum())
            .collect()
    }
}

fn check_unitary(u: &impl Unitary) -> Result<()> {
    let defect = u.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Diagonal of `u[χ_W, u*]` at `rows`:
/// `Σ_{j∈W} |u_ij|² - χ_W(i) Σ_j |u_ij|²`.
fn kubo_diagonal(u: &impl Unitary, w: &Region, rows: &[usize]) -> Vec<C64> {
    let lat = w.lattice();
    let block = u.rows(rows);
    rows.iter()
        .enumerate()
        .map(|(a, &r)| {
            let mut in_w = 0.0;
            let mut all = 0.0;
            for c in 0..block.ncols() {
                let x = block[(a, c)].norm_sqr();
                all += x;
                if w.contains(lat.site_of(c)) {
                    in_w += x;
                }
            }
            C64::new(in_w - indicator(w, r) * all, 0.0)
        })
        .collect()
}

/// `θ_W` through the windowed trace of `u[χ_W, u*]`.
pub fn edge_index_kubo(u: &impl Unitary, geom: &EdgeGeometry, sweep: &WindowSweep) -> Result<WindowedTraceResult> {
    check_unitary(u)?;
    let windows = sweep.checked_windows(&[geom])?;
    let rows = region_rows(windows.last().expect("validated sweep"));
    let diag = kubo_diagonal(u, &geom.w, &rows);
    Ok(WindowedTraceResult::from_diagonal(sweep, &windows, &rows, &diag))
}

/// Windowed trace of `(u χ_W u* - χ_W)^{2k+1}`.
pub fn pair_projection_index(u: &impl Unitary, geom: &EdgeGeometry, sweep: &WindowSweep, k: usize) -> Result<WindowedTraceResult> {
    check_unitary(u)?;
    let windows = sweep.checked_windows(&[geom])?;
    let rows = region_rows(windows.last().expect("validated sweep"));
    let diag = u.defect_power_diagonal(&geom.w, &rows, 2 * k + 1);
    Ok(WindowedTraceResult::from_diagonal(sweep, &windows, &rows, &diag))
}

/// Unwindowed `Tr(u[χ_W, u*])`, zero for every unitary on a finite lattice.
pub fn global_kubo_trace(u: &impl Unitary, w: &Region) -> C64 {
    let n = u.lattice().hilbert_dim();
    let all: Vec<usize> = (0..n).collect();
    all.chunks(512).map(|chunk| kubo_diagonal(u, w, chunk).into_iter().sum::<C64>()).sum()
}

/// Closed support of a bump-like spectral function.
fn support(phi: &SpectralFunction) -> Result<(f64, f64)> {
    match phi {
        SpectralFunction::Bump { a, b } => Ok((*a, *b)),
        SpectralFunction::Tabulated { x, y } => {
            let nz: Vec<usize> = (0..y.len()).filter(|&i| y[i] != 0.0).collect();
            match (nz.first(), nz.last()) {
                (Some(&i), Some(&j)) => {
                    if i == 0 || j + 1 == y.len() {
                        return Err(Error::InvalidSpectralFunction("tabulated bump must vanish at both ends".into()));
                    }
                    Ok((x[i - 1], x[j + 1]))
                }
                _ => Ok((0.0, 0.0)),
            }
        }
        SpectralFunction::SmoothStep { .. } => {
            Err(Error::InvalidSpectralFunction("edge current needs a compactly supported bump".into()))
        }
    }
}

/// Entries `φ(H̃)_ij` for a function vanishing outside `active` eigenvalues.
struct LowRankFunction<'a> {
    dec: &'a EigenDecomposition,
    active: Vec<usize>,
    weights: Vec<f64>,
}

impl<'a> LowRankFunction<'a> {
    fn new(dec: &'a EigenDecomposition, f: impl Fn(f64) -> f64) -> Self {
        let (active, weights) = dec
            .eigenvalues()
            .iter()
            .enumerate()
            .filter_map(|(k, &x)| {
                let w = f(x);
                (w != 0.0).then_some((k, w))
            })
            .unzip();
        LowRankFunction { dec, active, weights }
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        let v = self.dec.eigenvectors();
        self.active.iter().zip(&self.weights).map(|(&k, &w)| v[(i, k)] * w * v[(j, k)].conj()).sum()
    }
}

/// Diagonal of `-2π φ(H̃) i[H̃, χ_W]` at `rows`.
fn current_diagonal(phi: &LowRankFunction, h: &LocalOperator, w: &Region, rows: &[usize]) -> Vec<C64> {
    let i_unit = C64::new(0.0, 1.0);
    rows.iter()
        .map(|&i| {
            let chi_i = indicator(w, i);
            let sum: C64 = h
                .row(i)
                .into_iter()
                .filter(|&(j, _)| indicator(w, j) != chi_i)
                .map(|(j, h_ij)| phi.get(i, j) * i_unit * h_ij.conj() * (chi_i - indicator(w, j)))
                .sum();
            sum * (-2.0 * PI)
        })
        .collect()
}

fn check_bump(phi: &SpectralFunction, bulk_gap: SpectralGap) -> Result<()> {
    phi.validate()?;
    let (a, b) = support(phi)?;
    if !(bulk_gap.lower < a && b < bulk_gap.upper) {
        return Err(Error::SupportOutsideGap { a, b, gap_lo: bulk_gap.lower, gap_hi: bulk_gap.upper });
    }
    Ok(())
}

/// `-2π Tr_window(φ(H̃) i[H̃, χ_W])` for a bump `φ` supported in the bulk gap.
pub fn edge_current(
    dec: &EigenDecomposition,
    h: &LocalOperator,
    phi: &SpectralFunction,
    bulk_gap: SpectralGap,
    geom: &EdgeGeometry,
    sweep: &WindowSweep,
) -> Result<WindowedTraceResult> {
    check_bump(phi, bulk_gap)?;
    let windows = sweep.checked_windows(&[geom])?;
    let rows = region_rows(windows.last().expect("validated sweep"));
    let f = LowRankFunction::new(dec, |x| phi.eval(x));
    let diag = current_diagonal(&f, h, &geom.w, &rows);
    Ok(WindowedTraceResult::from_diagonal(sweep, &windows, &rows, &diag))
}

/// Unwindowed `-2π Tr(φ(H̃) i[H̃, χ_W])`, zero on a finite lattice.
pub fn global_current_trace(dec: &EigenDecomposition, h: &LocalOperator, phi: &SpectralFunction, w: &Region) -> C64 {
    let f = LowRankFunction::new(dec, |x| phi.eval(x));
    let all: Vec<usize> = (0..h.dim()).collect();
    current_diagonal(&f, h, w, &all).into_iter().sum()
}

/// `(e^{2πiΔ} - 1) / (2πiΔ)`, the average of `e^{2πisΔ}` over `s ∈ [0, 1]`.
fn duhamel_average(delta: f64) -> C64 {
    let x = 2.0 * PI * delta;
    if x.abs() < 1e-6 {
        C64::new(1.0 - x * x / 6.0, x / 2.0)
    } else {
        (C64::from_polar(1.0, x) - ONE) / C64::new(0.0, x)
    }
}

/// Diagonal at `rows` of `-2πi ∫₀¹ e^{2πisf}[χ_W, f]e^{-2πisf} ds`, built in
/// the eigenbasis of `H̃`. Only pairs involving an eigenvalue with
/// `0 < f < 1` contribute.
fn duhamel_diagonal(dec: &EigenDecomposition, f: &SpectralFunction, w: &Region, rows: &[usize]) -> Vec<C64> {
    let n = dec.dim();
    let v = dec.eigenvectors();
    let fv: Vec<f64> = dec.eigenvalues().iter().map(|&x| f.eval(x)).collect();
    let active: Vec<usize> = (0..n).filter(|&k| fv[k] != 0.0 && fv[k] != 1.0).collect();
    let is_active = {
        let mut m = vec![false; n];
        active.iter().for_each(|&k| m[k] = true);
        m
    };
    let weight = |k: usize, l: usize| C64::new(0.0, -2.0 * PI) * (fv[l] - fv[k]) * duhamel_average(fv[k] - fv[l]);
    // x[(k, a)] = (V* χ_W V)_{k, active[a]}
    let chi_va = Mat::from_fn(n, active.len(), |r, a| v[(r, active[a])] * indicator(w, r));
    let x = v.adjoint() * &chi_va;
    let v_rows = Mat::from_fn(rows.len(), n, |a, c| v[(rows[a], c)]);
    // k active, l arbitrary: M[a, l] = weight(active[a], l) χ_{active[a], l}
    let m_a = Mat::from_fn(active.len(), n, |a, l| weight(active[a], l) * x[(l, a)].conj());
    let z1 = &m_a * v_rows.adjoint();
    // k inactive, l active: N[k, a] = weight(k, active[a]) χ_{k, active[a]}
    let m_b = Mat::from_fn(n, active.len(), |k, a| if is_active[k] { ZERO } else { weight(k, active[a]) * x[(k, a)] });
    let z2 = &v_rows * &m_b;
    (0..rows.len())
        .map(|i| {
            let t1: C64 = active.iter().enumerate().map(|(a, &k)| v_rows[(i, k)] * z1[(a, i)]).sum();
            let t2: C64 = active.iter().enumerate().map(|(a, &l)| v_rows[(i, l)].conj() * z2[(i, a)]).sum();
            t1 + t2
        })
        .collect()
}

/// The two sides of `Tr(u[χ_W, u*]) = -2πi Tr([χ_W, f(H̃)])` on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpMapConsistency {
    pub kubo: WindowedTraceResult,
    pub commutator: WindowedTraceResult,
}

impl ExpMapConsistency {
    pub fn pair(&self) -> (f64, f64) {
        (self.kubo.last, self.commutator.last)
    }

    pub fn difference(&self) -> f64 {
        (self.kubo.last - self.commutator.last).abs()
    }
}

/// Left side through the rows of `u = exp(2πi f(H̃))`, right side through the
/// Duhamel-averaged commutator `[χ_W, f(H̃)]` in the eigenbasis.
pub fn exp_map_consistency(
    dec: &EigenDecomposition,
    f: &SpectralFunction,
    geom: &EdgeGeometry,
    sweep: &WindowSweep,
) -> Result<ExpMapConsistency> {
    let u = BoundaryUnitary::new(dec, f)?;
    let kubo = edge_index_kubo(&u, geom, sweep)?;
    let windows = sweep.checked_windows(&[geom])?;
    let rows = region_rows(windows.last().expect("validated sweep"));
    let diag = duhamel_diagonal(dec, f, &geom.w, &rows);
    let commutator = WindowedTraceResult::from_diagonal(sweep, &windows, &rows, &diag);
    Ok(ExpMapConsistency { kubo, commutator })
}

/// In-gap spectrum of `H̃` and how strongly each in-gap state sits on `∂Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapFillingReport {
    pub gap: (f64, f64),
    pub eigenvalues: Vec<f64>,
    pub localization: Vec<f64>,
    pub r_loc: f64,
    /// Largest eigenvalue-free subinterval of `(a, b)`.
    pub max_spacing: f64,
}

impl GapFillingReport {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_localization(&self) -> Option<f64> {
        self.localization.iter().copied().reduce(f64::min)
    }
}

/// Weight of eigenvector `k` on the sites of `near`.
pub fn localization_fraction(dec: &EigenDecomposition, near: &Region, k: usize) -> f64 {
    let lat = dec.lattice();
    (0..dec.dim()).filter(|&r| near.contains(lat.site_of(r))).map(|r| dec.component(r, k).norm_sqr()).sum()
}

pub fn gap_filling_report(
    bulk: &EigenDecomposition,
    edge: &EigenDecomposition,
    gap: (f64, f64),
    boundary: &Region,
    r_loc: f64,
) -> Result<GapFillingReport> {
    let (a, b) = gap;
    if !(a < b) {
        return Err(Error::Config(format!("gap interval ({a}, {b}) is empty")));
    }
    if let Some(k) = bulk.indices_in(a, b).next() {
        return Err(Error::NotAnInsulator { energy: 0.5 * (a + b), eigenvalue: bulk.eigenvalues()[k], tol: 0.5 * (b - a) });
    }
    if **boundary.lattice() != **edge.lattice() {
        return Err(Error::LatticeMismatch);
    }
    let near = boundary.thicken(r_loc);
    let range = edge.indices_in(a, b);
    let eigenvalues: Vec<f64> = edge.eigenvalues()[range.clone()].to_vec();
    let localization = range.map(|k| localization_fraction(edge, &near, k).min(1.0)).collect();
    let mut points = vec![a];
    points.extend(&eigenvalues);
    points.push(b);
    let max_spacing = points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(GapFillingReport { gap, eigenvalues, localization, r_loc, max_spacing })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CobordismReport {
    pub theta_w: WindowedTraceResult,
    pub theta_w_prime: WindowedTraceResult,
    /// `|θ_W - θ_W'|` at the largest radius.
    pub difference: f64,
}

/// Compares the Kubo edge index for two boundedly different partitions.
pub fn cobordism_check(u: &impl Unitary, geom: &EdgeGeometry, geom_prime: &EdgeGeometry, sweep: &WindowSweep) -> Result<CobordismReport> {
    sweep.checked_windows(&[geom, geom_prime])?;
    let theta_w = edge_index_kubo(u, geom, sweep)?;
    let theta_w_prime = edge_index_kubo(u, geom_prime, sweep)?;
    let difference = (theta_w.last - theta_w_prime.last).abs();
    Ok(CobordismReport { theta_w, theta_w_prime, difference })
}

/// True when `spec` has `d = 2` and a symbol, so Bloch-space invariants apply.
pub fn has_bloch_chern(spec: &ModelSpec) -> bool {
    spec.dim() == 2 && spec.is_translation_invariant() && !matches!(spec.family, ModelFamily::Custom { .. })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Axis, Boundary, HalfSpace, Side};
    use crate::spectral::{bump, eigh, exp_unitary, fermi_projection, smooth_step};
    use proptest::prelude::*;

    fn toy(m: f64, axes: Vec<Axis>) -> ModelSpec {
        ModelSpec::toy_dirac(m, axes)
    }

    #[test]
    fn fhs_toy_sweep() {
        let c = |m: f64| fhs_chern(&toy(m, vec![Axis::periodic(4); 2]), 0.0, 24).unwrap();
        assert_eq!(c(1.0).value, -1);
        assert_eq!(c(-1.0).value, 1);
        assert_eq!(c(3.0).value, 0);
        assert_eq!(c(-3.0).value, 0);
        assert_eq!(c(5.0).value, 0);
        assert!(c(1.0).residual <= FHS_RESIDUAL_TOL);
        assert_eq!(c(1.0).bands, 1);
    }

    #[test]
    fn fhs_detects_gap_closing_on_grid() {
        // Ĥ(π, 0) vanishes at m = 0 and the point lies on every even grid
        let err = fhs_chern(&toy(0.0, vec![Axis::periodic(4); 2]), 0.0, 8).unwrap_err();
        assert!(matches!(err, Error::GapClosedOnGrid { .. }));
        assert!(err.is_physics());
        let dis = toy(1.0, vec![Axis::periodic(4); 2]).with_disorder(0.1, 1);
        assert!(matches!(fhs_chern(&dis, 0.0, 8), Err(Error::NoSymbol(_))));
    }

    #[test]
    fn fhs_hofstadter_lowest_band() {
        // TKNN: for b = 2π/q the lowest band carries Chern number ±1
        let spec = ModelSpec::hofstadter(2.0 * PI / 5.0, crate::models::Gauge::LandauX, vec![Axis::periodic(5); 2]);
        let symbol = bloch_symbol(&spec, &[0.0, 0.0]).unwrap().to_mat();
        let ev = symbol.self_adjoint_eigenvalues(EigSide::Lower).unwrap();
        let c = fhs_chern(&spec, 0.5 * (ev[0] + ev[1]), 24).unwrap();
        assert_eq!(c.value.abs(), 1);
    }

    #[test]
    fn real_space_trivial_and_toy() {
        let lat = Lattice::torus(&[16, 16], 2).unwrap();
        let tri = Tripartition::disk(&lat, [7.5, 7.5], 5.0).unwrap();
        for p in [LocalOperator::zero(&lat), LocalOperator::identity(&lat)] {
            assert!(real_space_chern(&p, &tri).unwrap().value.abs() < 1e-12);
        }
        let h = toy(1.0, vec![Axis::periodic(20); 2]).build().unwrap();
        let p = fermi_projection(&eigh(&h).unwrap(), 0.0).unwrap();
        let tri = Tripartition::disk(h.lattice(), [9.5, 9.5], 8.0).unwrap();
        let c = real_space_chern(&p, &tri).unwrap();
        assert!((c.value + 1.0).abs() < 0.1, "{c:?}");
        assert!(c.imag_residual < 1e-10);
        let half = LocalOperator::identity(h.lattice()).scale(C64::new(0.5, 0.0));
        assert!(matches!(real_space_chern(&half, &tri), Err(Error::NotAProjection { .. })));
    }

    #[test]
    fn tripartition_covers_disk() {
        let lat = Lattice::open_box(&[11, 11], 1).unwrap();
        let tri = Tripartition::disk(&lat, [5.0, 5.0], 4.0).unwrap();
        let total: usize = tri.sectors.iter().map(Region::len).sum();
        assert_eq!(total, tri.window().len());
        let oracle = (0..121).filter(|s| ((s % 11) as f64 - 5.0).hypot((s / 11) as f64 - 5.0) <= 4.0).count();
        assert_eq!(total, oracle);
    }

    struct SmallEdge {
        h: LocalOperator,
        dec: EigenDecomposition,
        geom: EdgeGeometry,
        sweep: WindowSweep,
    }

    fn small_edge(m: f64, l: usize) -> SmallEdge {
        let h = toy(m, vec![Axis::open(l); 2]).build().unwrap();
        let dec = eigh(&h).unwrap();
        let lat = h.lattice().clone();
        let w = Region::half_space(&lat, 0, (l / 2) as i64, Side::Upper).unwrap();
        let geom = EdgeGeometry::new(Region::open_boundary_layer(&lat), w).unwrap();
        let sweep = WindowSweep::new(vec![(l / 2) as i64, 0], vec![2.0, 3.0, 4.0]);
        SmallEdge { h, dec, geom, sweep }
    }

    #[test]
    fn identity_unitary_gives_zero() {
        let e = small_edge(1.0, 10);
        let id = BoundaryUnitary::identity(e.h.lattice());
        for r in [edge_index_kubo(&id, &e.geom, &e.sweep).unwrap(), pair_projection_index(&id, &e.geom, &e.sweep, 1).unwrap()] {
            assert!(r.plateau.iter().all(|p| p.re == 0.0 && p.im == 0.0));
            assert_eq!(r.value, Some(0.0));
        }
        let dense_id = LocalOperator::identity(e.h.lattice());
        assert_eq!(edge_index_kubo(&dense_id, &e.geom, &e.sweep).unwrap().last, 0.0);
    }

    /// Low-rank and dense paths agree with a brute-force evaluation built
    /// from operator algebra alone.
    #[test]
    fn estimators_match_dense_oracle() {
        let e = small_edge(1.0, 10);
        let f = smooth_step(-0.95, 0.95).unwrap();
        let u_low = BoundaryUnitary::new(&e.dec, &f).unwrap();
        let u = exp_unitary(&e.dec, &f).unwrap();
        assert!(u_low.to_operator().distance(&u) < 1e-12);
        let chi = crate::operator::indicator_operator(&e.geom.w);
        let d = &(&(&u * &chi) * &u.adjoint()) - &chi;
        let kubo_op = &u * &chi.commutator(&u.adjoint());
        let d3 = &(&d * &d) * &d;
        let window = Region::ball(e.h.lattice(), e.sweep.center_site(e.h.lattice()).unwrap(), 4.0).unwrap();
        let a = edge_index_kubo(&u_low, &e.geom, &e.sweep).unwrap();
        let b = edge_index_kubo(&u, &e.geom, &e.sweep).unwrap();
        assert!((a.last - kubo_op.windowed_trace(&window).re).abs() < 1e-10);
        assert!((b.last - a.last).abs() < 1e-10);
        let p_low = pair_projection_index(&u_low, &e.geom, &e.sweep, 1).unwrap();
        let p_dense = pair_projection_index(&u, &e.geom, &e.sweep, 1).unwrap();
        assert!((p_low.last - d3.windowed_trace(&window).re).abs() < 1e-10);
        assert!((p_dense.last - p_low.last).abs() < 1e-10);
        assert!(u_low.defect_operator(&e.geom.w).distance(&d) < 1e-12);

        let phi = bump(-0.95, 0.95).unwrap();
        let phi_h = e.dec.functional_calculus(|x| phi.eval(x));
        let comm = e.h.commutator(&chi).scale(C64::new(0.0, 1.0));
        let current_op = (&phi_h * &comm).scale(C64::new(-2.0 * PI, 0.0));
        let gap = SpectralGap { lower: -1.0, upper: 1.0 };
        let cur = edge_current(&e.dec, &e.h, &phi, gap, &e.geom, &e.sweep).unwrap();
        assert!((cur.last - current_op.windowed_trace(&window).re).abs() < 1e-10);
        assert!((global_current_trace(&e.dec, &e.h, &phi, &e.geom.w)).norm() < 1e-9);
    }

    #[test]
    fn duhamel_side_matches_kubo_side() {
        let e = small_edge(1.0, 12);
        let f = smooth_step(-0.9, 0.9).unwrap();
        let pair = exp_map_consistency(&e.dec, &f, &e.geom, &e.sweep).unwrap();
        for (x, y) in pair.kubo.plateau.iter().zip(&pair.commutator.plateau) {
            assert!((x.re - y.re).abs() < 1e-10 && y.im.abs() < 1e-10);
        }
        assert!(duhamel_average(1e-9).re > 0.999 && (duhamel_average(1.0)).norm() < 1e-15);
    }

    #[test]
    fn window_overlap_is_rejected() {
        let e = small_edge(1.0, 10);
        let u = BoundaryUnitary::new(&e.dec, &smooth_step(-0.9, 0.9).unwrap()).unwrap();
        let whole = WindowSweep::new(vec![5, 0], vec![10.0]);
        assert!(matches!(edge_index_kubo(&u, &e.geom, &whole), Err(Error::WindowOverlap { crossings: 2, .. })));
        let away = WindowSweep::new(vec![0, 5], vec![1.0]);
        assert!(matches!(edge_index_kubo(&u, &e.geom, &away), Err(Error::WindowOverlap { crossings: 0, .. })));
        assert!(global_kubo_trace(&u, &e.geom.w).norm() < 1e-9);
        assert_eq!(e.geom.crossings().len(), 2);
        let bad = WindowSweep::new(vec![5, 0], vec![3.0, 2.0]);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn current_support_must_sit_in_gap() {
        let e = small_edge(1.0, 8);
        let gap = SpectralGap { lower: -1.0, upper: 1.0 };
        let wide = bump(-1.5, 0.5).unwrap();
        assert!(matches!(
            edge_current(&e.dec, &e.h, &wide, gap, &e.geom, &e.sweep),
            Err(Error::SupportOutsideGap { .. })
        ));
        let step = smooth_step(-0.5, 0.5).unwrap();
        assert!(matches!(edge_current(&e.dec, &e.h, &step, gap, &e.geom, &e.sweep), Err(Error::InvalidSpectralFunction(_))));
        // torus H has nothing inside the bump support
        let bulk = toy(1.0, vec![Axis::periodic(8); 2]).build().unwrap();
        let bulk_dec = eigh(&bulk).unwrap();
        let phi = bump(-0.9, 0.9).unwrap();
        assert_eq!(global_current_trace(&bulk_dec, &bulk, &phi, &e.geom.w.clone()), C64::new(0.0, 0.0));
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let e = small_edge(1.0, 6);
        let two = LocalOperator::identity(e.h.lattice()).scale(C64::new(2.0, 0.0));
        assert!(matches!(edge_index_kubo(&two, &e.geom, &e.sweep), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn gap_filling_contract() {
        let bulk = eigh(&toy(1.0, vec![Axis::periodic(12); 2]).build().unwrap()).unwrap();
        let same = gap_filling_report(&bulk, &bulk, (-0.9, 0.9), &Region::full(bulk.lattice()), 3.0).unwrap();
        assert_eq!(same.count(), 0);
        assert!((same.max_spacing - 1.8).abs() < 1e-12);
        let e = small_edge(1.0, 12);
        let rep = gap_filling_report(&bulk, &e.dec, (-0.9, 0.9), &e.geom.boundary, 3.0).unwrap();
        assert!(rep.count() > 10);
        assert!(rep.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(rep.localization.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let closed = eigh(&toy(0.0, vec![Axis::periodic(8); 2]).build().unwrap()).unwrap();
        assert!(matches!(
            gap_filling_report(&closed, &e.dec, (-0.9, 0.9), &e.geom.boundary, 3.0),
            Err(Error::NotAnInsulator { .. })
        ));
    }

    #[test]
    fn cobordism_identity_and_amplitude_check() {
        let e = small_edge(1.0, 12);
        let u = BoundaryUnitary::new(&e.dec, &smooth_step(-0.9, 0.9).unwrap()).unwrap();
        let rep = cobordism_check(&u, &e.geom, &e.geom, &e.sweep).unwrap();
        assert_eq!(rep.difference, 0.0);
        let lat = e.h.lattice();
        let hs = HalfSpace::new(0, 6, Side::Upper);
        assert!(matches!(hs.perturbed(lat, &[4; 12], 3), Err(Error::AmplitudeViolation { .. })));
        let _ = Boundary::Open;
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn plateau_invariants(values in proptest::collection::vec(-3.0f64..3.0, 1..8)) {
            let table: Vec<PlateauPoint> = values.iter().enumerate().map(|(i, &v)| PlateauPoint { radius: i as f64, re: v, im: 0.0 }).collect();
            let r = WindowedTraceResult::from_table(vec![0, 0], table, PLATEAU_THRESHOLD);
            let top = &values[values.len() / 2..];
            let spread = top.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - top.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.converged, spread <= PLATEAU_THRESHOLD * r.last.abs().max(1.0));
            prop_assert_eq!(r.value.is_some(), r.converged);
            prop_assert!(r.plateau.windows(2).all(|w| w[0].radius < w[1].radius));
        }

        /// Global traces of commutators vanish for any smooth step on any
        /// small open box.
        #[test]
        fn global_traces_vanish(m in -2.5f64..2.5, a in -1.5f64..0.0, width in 0.2f64..2.0, cut in 1i64..6) {
            let h = toy(m, vec![Axis::open(6), Axis::open(5)]).build().unwrap();
            let dec = eigh(&h).unwrap();
            let w = Region::half_space(h.lattice(), 0, cut, Side::Upper).unwrap();
            let u = BoundaryUnitary::new(&dec, &smooth_step(a, a + width).unwrap()).unwrap();
            prop_assert!(global_kubo_trace(&u, &w).norm() < 1e-9);
            let phi = bump(a, a + width).unwrap();
            prop_assert!(global_current_trace(&dec, &h, &phi, &w).norm() < 1e-9);
        }
    }
}
