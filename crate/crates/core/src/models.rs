//! Concrete Hamiltonians.
//!
//! * `toy-dirac`: the even-dimensional Clifford model
//!   `H = (1/2i) Σ_j (S_j - S_j*) ⊗ γ_j + (m + ½ Σ_j (S_j + S_j*)) ⊗ γ_0`
//!   on `2^{d/2}` orbitals. With the ½ on the mass term the gap at zero closes
//!   exactly for `m ∈ {-d, -d+2, ..., d}`.
//! * `hofstadter`: `4 - Σ (e^{iθ} S + h.c.)` on the square lattice, with
//!   Landau-gauge Peierls phases carrying flux `b` through every plaquette.
//!
//! Bloch symbols use plane waves `ψ_k(c) = e^{-i k·c}`, so that a hop from
//! `c` to `c + δ` contributes `e^{i k·δ}` and the toy symbol reads
//! `Σ_j sin k_j γ_j + (m + Σ_j cos k_j) γ_0`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Axis, Boundary, Lattice};
use crate::operator::{clifford_generators, shift_operator, tensor_with_internal, InternalMatrix, LocalOperator};

/// Name of the generator behind [`add_disorder`], recorded in reports.
pub const DISORDER_RNG: &str = "ChaCha20Rng::seed_from_u64 (rand_chacha 0.9)";

/// Landau gauge used for the Peierls phases.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// Phases on x-hoppings, `θ_x(x, y) = -b y`.
    #[default]
    LandauX,
    /// Phases on y-hoppings, `θ_y(x, y) = b x`.
    LandauY,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelFamily {
    ToyDirac {
        mass: f64,
    },
    Hofstadter {
        /// Flux per plaquette in radians.
        flux: f64,
        #[serde(default)]
        gauge: Gauge,
    },
    /// Operator read from a triplet file.
    Custom { path: PathBuf, orbitals: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Disorder {
    /// Width `w` of the uniform on-site distribution `[-w/2, w/2]`.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Model family, geometry and disorder: everything needed to rebuild a
/// Hamiltonian bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: ModelFamily,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub disorder: Disorder,
}

impl ModelSpec {
    pub fn toy_dirac(mass: f64, axes: Vec<Axis>) -> Self {
        ModelSpec { family: ModelFamily::ToyDirac { mass }, axes, disorder: Disorder::default() }
    }

    pub fn hofstadter(flux: f64, gauge: Gauge, axes: Vec<Axis>) -> Self {
        ModelSpec { family: ModelFamily::Hofstadter { flux, gauge }, axes, disorder: Disorder::default() }
    }

    pub fn with_disorder(mut self, amplitude: f64, seed: u64) -> Self {
        self.disorder = Disorder { amplitude, seed };
        self
    }

    /// Same model with every axis set to `boundary`.
    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        let mut out = self.clone();
        for a in &mut out.axes {
            a.boundary = boundary;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn orbitals(&self) -> usize {
        match &self.family {
            ModelFamily::ToyDirac { .. } => 1 << (self.dim() / 2),
            ModelFamily::Hofstadter { .. } => 1,
            ModelFamily::Custom { orbitals, .. } => *orbitals,
        }
    }

    pub fn lattice(&self) -> Result<Arc<Lattice>> {
        Lattice::new(self.axes.clone(), self.orbitals())
    }

    pub fn is_translation_invariant(&self) -> bool {
        self.disorder.amplitude == 0.0 && !matches!(self.family, ModelFamily::Custom { .. })
    }

    /// Structural checks that do not require building the operator.
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::UnsupportedDimension("model needs at least one axis".into()));
        }
        if !(self.disorder.amplitude >= 0.0) {
            return Err(Error::Config(format!("disorder amplitude must be >= 0, got {}", self.disorder.amplitude)));
        }
        match &self.family {
            ModelFamily::ToyDirac { mass } => {
                if !self.dim().is_multiple_of(2) {
                    return Err(Error::UnsupportedDimension(format!(
                        "toy-dirac needs an even dimension, got d = {}",
                        self.dim()
                    )));
                }
                if !mass.is_finite() {
                    return Err(Error::Config("mass must be finite".into()));
                }
            }
            ModelFamily::Hofstadter { flux, .. } => {
                if self.dim() != 2 {
                    return Err(Error::UnsupportedDimension(format!("hofstadter needs d = 2, got d = {}", self.dim())));
                }
                if self.axes.iter().all(|a| a.boundary == Boundary::Periodic) {
                    let total = flux * (self.axes[0].extent * self.axes[1].extent) as f64;
                    let turns = total / (2.0 * PI);
                    if (turns - turns.round()).abs() > 1e-9 {
                        return Err(Error::FluxQuantization { total });
                    }
                }
            }
            ModelFamily::Custom { orbitals, .. } => {
                if *orbitals == 0 {
                    return Err(Error::Config("custom model needs a positive orbital count".into()));
                }
            }
        }
        self.lattice().map(|_| ())
    }

    /// Builds the Hamiltonian, including disorder.
    pub fn build(&self) -> Result<LocalOperator> {
        self.validate()?;
        let clean = match &self.family {
            ModelFamily::ToyDirac { .. } => toy_dirac(self)?,
            ModelFamily::Hofstadter { .. } => hofstadter(self)?,
            ModelFamily::Custom { path, .. } => {
                let file = std::fs::File::open(path)?;
                LocalOperator::read_triplets(&self.lattice()?, std::io::BufReader::new(file))?
            }
        };
        Ok(add_disorder(&clean, self.disorder.amplitude, self.disorder.seed))
    }
}

/// The toy Dirac Hamiltonian for an even-dimensional spec (disorder ignored).
pub fn toy_dirac(spec: &ModelSpec) -> Result<LocalOperator> {
    let ModelFamily::ToyDirac { mass } = spec.family else {
        return Err(Error::Config("toy_dirac called on a different model family".into()));
    };
    let d = spec.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::UnsupportedDimension(format!("toy-dirac needs an even dimension, got d = {d}")));
    }
    let cl = clifford_generators(d)?;
    let spatial = Lattice::new(spec.axes.clone(), 1)?;
    let id = LocalOperator::identity(&spatial);
    let half = C64::new(0.5, 0.0);
    let minus_half_i = C64::new(0.0, -0.5);

    let mut mass_part = id.scale(C64::new(mass, 0.0));
    let mut h: Option<LocalOperator> = None;
    for (j, gamma) in cl.gammas.iter().enumerate() {
        let s = shift_operator(&spatial, j)?;
        let s_adj = s.adjoint();
        let kinetic = (&s - &s_adj).scale(minus_half_i);
        mass_part = &mass_part + &(&s + &s_adj).scale(half);
        let term = tensor_with_internal(&kinetic, gamma)?;
        h = Some(match h {
            None => term,
            Some(acc) => &acc + &term,
        });
    }
    let mass_term = tensor_with_internal(&mass_part, &cl.gamma0)?;
    Ok(match h {
        Some(acc) => &acc + &mass_term,
        None => mass_term,
    })
}

/// Peierls phase of the hop from `site` to `site + e_axis`.
fn peierls_phase(lattice: &Lattice, site: usize, axis: usize, flux: f64, gauge: Gauge) -> f64 {
    let (x, y) = (lattice.coord(site, 0) as f64, lattice.coord(site, 1) as f64);
    let (lx, ly) = (lattice.extent(0), lattice.extent(1));
    let wraps = |a: usize, extent: usize| lattice.boundary(a) == Boundary::Periodic && lattice.coord(site, a) as usize == extent - 1;
    match (gauge, axis) {
        (Gauge::LandauX, 0) => -flux * y,
        (Gauge::LandauX, _) if wraps(1, ly) => flux * ly as f64 * x,
        (Gauge::LandauY, 1) => flux * x,
        (Gauge::LandauY, _) if wraps(0, lx) => -flux * lx as f64 * y,
        _ => 0.0,
    }
}

/// The lattice magnetic Hamiltonian `4 - Σ (e^{iθ} S + h.c.)` (disorder
/// ignored).
pub fn hofstadter(spec: &ModelSpec) -> Result<LocalOperator> {
    let ModelFamily::Hofstadter { flux, gauge } = spec.family else {
        return Err(Error::Config("hofstadter called on a different model family".into()));
    };
    spec.validate()?;
    let lattice = spec.lattice()?;
    let mut triplets = Vec::new();
    for s in 0..lattice.sites() {
        triplets.push((s, s, C64::new(4.0, 0.0)));
        for axis in 0..2 {
            if let Some(t) = lattice.step(s, axis, 1) {
                let hop = -C64::from_polar(1.0, peierls_phase(&lattice, s, axis, flux, gauge));
                triplets.push((t, s, hop));
                triplets.push((s, t, hop.conj()));
            }
        }
    }
    Ok(LocalOperator::from_triplets(&lattice, triplets))
}

/// Adds an on-site potential drawn i.i.d. uniformly from `[-w/2, w/2]`, one
/// value per site (shared by all orbitals), in site order.
pub fn add_disorder(h: &LocalOperator, w: f64, seed: u64) -> LocalOperator {
    if w == 0.0 {
        return h.clone();
    }
    let lattice = h.lattice();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-0.5 * w, 0.5 * w).expect("w > 0");
    let potential: Vec<f64> = (0..lattice.sites()).map(|_| dist.sample(&mut rng)).collect();
    let v = LocalOperator::diagonal(lattice, |k| C64::new(potential[lattice.site_of(k)], 0.0));
    h + &v
}

/// Smallest `q <= 1000` with `flux / 2π = p / q`.
fn flux_denominator(flux: f64) -> Option<usize> {
    let ratio = flux / (2.0 * PI);
    (1..=1000).find(|&q| {
        let p = ratio * q as f64;
        (p - p.round()).abs() < 1e-9
    })
}

/// Fourier symbol `Ĥ(k)` of a translation-invariant model. For hofstadter
/// the symbol lives on the magnetic unit cell of `q` sites stacked along y
/// (`b = 2πp/q`), and `k_y` is the momentum conjugate to cell translations.
pub fn bloch_symbol(spec: &ModelSpec, k: &[f64]) -> Result<InternalMatrix> {
    if spec.disorder.amplitude != 0.0 {
        return Err(Error::NoSymbol("disordered model is not translation invariant".into()));
    }
    if k.len() != spec.dim() {
        return Err(Error::DimensionMismatch(format!("k has {} components, model has d = {}", k.len(), spec.dim())));
    }
    match spec.family {
        ModelFamily::ToyDirac { mass } => {
            spec.validate()?;
            let cl = clifford_generators(spec.dim())?;
            let size = cl.gamma0.dim();
            let mut h = cl.gamma0.scale(C64::new(mass + k.iter().map(|x| x.cos()).sum::<f64>(), 0.0));
            for (gamma, kj) in cl.gammas.iter().zip(k) {
                h = &h + &gamma.scale(C64::new(kj.sin(), 0.0));
            }
            debug_assert_eq!(h.dim(), size);
            Ok(h)
        }
        ModelFamily::Hofstadter { flux, .. } => {
            let q = flux_denominator(flux)
                .ok_or_else(|| Error::NoSymbol(format!("flux {flux} is not a rational multiple of 2π with q <= 1000")))?;
            let (kx, ky) = (k[0], k[1]);
            let mut m = InternalMatrix::from_fn(q, |r, c| {
                if r == c {
                    C64::new(4.0 - 2.0 * (kx - flux * r as f64).cos(), 0.0)
                } else if r + 1 == c || c + 1 == r {
                    C64::new(-1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            // hop from the top of one cell to the bottom of the next
            let wrap = InternalMatrix::from_fn(q, |r, c| {
                let mut v = C64::new(0.0, 0.0);
                if r == 0 && c == q - 1 {
                    v -= C64::from_polar(1.0, ky);
                }
                if r == q - 1 && c == 0 {
                    v -= C64::from_polar(1.0, -ky);
                }
                v
            });
            m = &m + &wrap;
            Ok(m)
        }
        ModelFamily::Custom { .. } => Err(Error::NoSymbol("custom operators carry no symbol".into())),
    }
}

/// Momenta dual to a fully periodic spec, in the convention of
/// [`bloch_symbol`]. The union of `spec(Ĥ(k))` over this grid is the
/// spectrum of the torus Hamiltonian.
pub fn torus_k_grid(spec: &ModelSpec) -> Result<Vec<Vec<f64>>> {
    if spec.axes.iter().any(|a| a.boundary != Boundary::Periodic) {
        return Err(Error::UnsupportedGeometry("k-grid needs a fully periodic lattice".into()));
    }
    let mut extents: Vec<usize> = spec.axes.iter().map(|a| a.extent).collect();
    if let ModelFamily::Hofstadter { flux, .. } = spec.family {
        let q = flux_denominator(flux).ok_or_else(|| Error::NoSymbol(format!("irrational flux {flux}")))?;
        if !extents[1].is_multiple_of(q) {
            return Err(Error::UnsupportedGeometry(format!("L_y = {} is not a multiple of q = {q}", extents[1])));
        }
        extents[1] /= q;
    }
    let mut grid = vec![Vec::new()];
    for &l in &extents {
        grid = grid
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                (0..l).map(move |j| {
                    let mut k = prefix.clone();
                    k.push(2.0 * PI * j as f64 / l as f64);
                    k
                })
            })
            .collect();
    }
    Ok(grid)
}
