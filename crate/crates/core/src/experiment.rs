//! Config-driven experiments: parse a TOML description, run it, and persist a
//! JSON report plus CSV tables.
//!
//! Config dialect (schema version 1):
//!
//! ```toml
//! schema_version = 1
//! experiment = "edge-current"      # optional when the CLI names it
//!
//! [model]
//! family = "toy-dirac"             # toy-dirac | hofstadter | custom
//! mass = 1.0
//! axes = [{ extent = 48, boundary = "open" }, { extent = 48, boundary = "open" }]
//! disorder = { amplitude = 0.0, seed = 0 }
//!
//! [regions]
//! w = { kind = "half-space", axis = 0, cut = 24, side = "+" }
//!
//! [window]
//! center = [24, 0]
//! radii = [4.0, 6.0, 8.0, 10.0, 12.0]
//! ```
//!
//! Bulk quantities use the model on a torus (`bulk_axes`, by default the
//! model axes made periodic); boundary quantities use the model on the open
//! box, so `Y` is the box and `H̃` its Dirichlet compression.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::{
    cobordism_check, edge_current, edge_index_kubo, exp_map_consistency, fhs_chern_with_tolerance, gap_filling_report,
    global_current_trace, global_kubo_trace, localization_fraction, pair_projection_index, real_space_chern, BoundaryUnitary,
    ChernNumber, CobordismReport, EdgeGeometry, GapFillingReport, RealSpaceChern, Tripartition, WindowSweep,
    WindowedTraceResult, FHS_RESIDUAL_TOL, ORIENTATION, PLATEAU_THRESHOLD,
};
use crate::lattice::{Axis, Boundary, HalfSpace, Lattice, Region, Side};
use crate::models::{ModelFamily, ModelSpec, DISORDER_RNG};
use crate::spectral::{
    bump, clusters, eigh, fermi_projection, smooth_step, spectral_gap, Cluster, EigenDecomposition, SpectralFunction, SpectralGap,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COARSE_LAB_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    ChernSweep,
    GapFill,
    EdgeCurrent,
    Disorder,
    Cobordism,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::ChernSweep => "chern-sweep",
            ExperimentKind::GapFill => "gap-fill",
            ExperimentKind::EdgeCurrent => "edge-current",
            ExperimentKind::Disorder => "disorder",
            ExperimentKind::Cobordism => "cobordism",
        }
    }

    /// CSV tables written for this experiment, in order.
    pub fn tables(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Spectrum => &["spectrum.csv"],
            ExperimentKind::ChernSweep => &["chern_sweep.csv"],
            ExperimentKind::GapFill => &["edge_spectrum.csv"],
            ExperimentKind::EdgeCurrent => &[
                "plateau_kubo.csv",
                "plateau_pair_k1.csv",
                "plateau_pair_k2.csv",
                "plateau_current.csv",
                "plateau_exp_map.csv",
            ],
            ExperimentKind::Disorder => &["disorder.csv", "plateau_kubo.csv"],
            ExperimentKind::Cobordism => &["plateau_kubo.csv", "plateau_kubo_prime.csv"],
        }
    }
}

/// Named region constructor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    HalfSpace { axis: usize, cut: i64, side: Side },
    PerturbedHalfSpace { axis: usize, cut: i64, side: Side, amplitude: i64, profile: Vec<i64> },
    OpenBoundaryLayer,
    Full,
}

impl RegionSpec {
    pub fn resolve(&self, lattice: &std::sync::Arc<Lattice>) -> Result<Region> {
        match self {
            RegionSpec::HalfSpace { axis, cut, side } => HalfSpace::new(*axis, *cut, *side).region(lattice),
            RegionSpec::PerturbedHalfSpace { axis, cut, side, amplitude, profile } => {
                HalfSpace::new(*axis, *cut, *side).perturbed(lattice, profile, *amplitude)
            }
            RegionSpec::OpenBoundaryLayer => Ok(Region::open_boundary_layer(lattice)),
            RegionSpec::Full => Ok(Region::full(lattice)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsConfig {
    /// `∂Y`; defaults to the outer layer of the open box.
    #[serde(default)]
    pub boundary: Option<RegionSpec>,
    /// Defaults to the upper half along the first axis.
    #[serde(default)]
    pub w: Option<RegionSpec>,
    /// Second partition for the cobordism experiment.
    #[serde(default)]
    pub w_prime: Option<RegionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    /// Transition interval of the smooth step and support of the bump.
    /// Defaults to the bulk gap shrunk to 95% around the Fermi energy.
    #[serde(default)]
    pub transition: Option<[f64; 2]>,
    /// Interval examined by gap-fill. Defaults to the bulk gap shrunk to 90%.
    #[serde(default)]
    pub gap: Option<[f64; 2]>,
    #[serde(default = "default_r_loc")]
    pub r_loc: f64,
    /// Splitting threshold for eigenvalue clusters in the spectrum experiment.
    #[serde(default = "default_cluster_gap")]
    pub cluster_gap: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { transition: None, gap: None, r_loc: default_r_loc(), cluster_gap: default_cluster_gap() }
    }
}

fn default_r_loc() -> f64 {
    3.0
}

fn default_cluster_gap() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    /// Defaults to the bottom crossing `(L_x/2, 0)`.
    #[serde(default)]
    pub center: Option<Vec<i64>>,
    #[serde(default = "WindowSweep::default_radii")]
    pub radii: Vec<f64>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { center: None, radii: WindowSweep::default_radii() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Disk radius of the real-space Chern tripartition.
    #[serde(default)]
    pub disk_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_plateau")]
    pub plateau: f64,
    #[serde(default = "default_fhs")]
    pub fhs_residual: f64,
    /// Relative gap detection tolerance.
    #[serde(default = "default_gap_tol")]
    pub gap: f64,
}

fn default_plateau() -> f64 {
    PLATEAU_THRESHOLD
}

fn default_fhs() -> f64 {
    FHS_RESIDUAL_TOL
}

fn default_gap_tol() -> f64 {
    crate::spectral::RELATIVE_GAP_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { plateau: default_plateau(), fhs_residual: default_fhs(), gap: default_gap_tol() }
    }
}

fn default_k_grid() -> usize {
    32
}

fn default_masses() -> Vec<f64> {
    vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    pub model: ModelSpec,
    /// Torus used for bulk quantities.
    #[serde(default)]
    pub bulk_axes: Option<Vec<Axis>>,
    #[serde(default)]
    pub fermi_energy: f64,
    #[serde(default = "default_k_grid")]
    pub k_grid: usize,
    /// Masses of the chern-sweep experiment.
    #[serde(default = "default_masses")]
    pub masses: Vec<f64>,
    #[serde(default)]
    pub regions: RegionsConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Replaces every disorder seed: the model seed becomes `k` and an
    /// ensemble of `n` seeds becomes `k, k+1, ..., k+n-1`.
    pub fn override_seed(&mut self, k: u64) {
        self.model.disorder.seed = k;
        let n = self.ensemble.seeds.len() as u64;
        self.ensemble.seeds = (0..n).map(|i| k.wrapping_add(i)).collect();
    }

    /// The experiment to run: the CLI choice if given, else the config's.
    pub fn resolve_kind(&self, requested: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (requested, self.experiment) {
            (Some(r), Some(c)) if r != c => Err(Error::Config(format!(
                "config describes a {} experiment, not {}",
                c.name(),
                r.name()
            ))),
            (Some(r), _) => Ok(r),
            (None, Some(c)) => Ok(c),
            (None, None) => Err(Error::Config("no experiment named in the config or on the command line".into())),
        }
    }

    pub fn bulk_spec(&self) -> ModelSpec {
        match &self.bulk_axes {
            Some(axes) => ModelSpec { axes: axes.clone(), ..self.model.clone() },
            None => self.model.with_boundary(Boundary::Periodic),
        }
    }

    pub fn box_spec(&self) -> ModelSpec {
        self.model.with_boundary(Boundary::Open)
    }

    fn w_spec(&self) -> RegionSpec {
        self.regions.w.clone().unwrap_or(RegionSpec::HalfSpace {
            axis: 0,
            cut: (self.model.axes[0].extent / 2) as i64,
            side: Side::Upper,
        })
    }

    fn boundary_spec(&self) -> RegionSpec {
        self.regions.boundary.clone().unwrap_or(RegionSpec::OpenBoundaryLayer)
    }

    pub fn sweep(&self) -> WindowSweep {
        let center = self.window.center.clone().unwrap_or_else(|| {
            let mut c = vec![0; self.model.dim()];
            c[0] = (self.model.axes[0].extent / 2) as i64;
            c
        });
        WindowSweep::new(center, self.window.radii.clone())
    }

    fn disk_radius(&self, lattice: &Lattice) -> f64 {
        self.ensemble.disk_radius.unwrap_or_else(|| {
            let l = (0..lattice.dim()).map(|a| lattice.extent(a)).min().unwrap_or(0) as f64;
            (0.5 * l - 2.0).min(10.0)
        })
    }

    fn check_structure(&self, kind: ExperimentKind) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.model.validate()?;
        let t = &self.tolerances;
        if !(t.plateau > 0.0 && t.fhs_residual > 0.0 && t.gap > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.ensemble.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!("duplicate seed {dup} in ensemble")));
        }
        if let Some([a, b]) = self.spectral.transition {
            smooth_step(a, b)?;
        }
        if let Some([a, b]) = self.spectral.gap {
            if !(a < b) {
                return Err(Error::Config(format!("gap interval [{a}, {b}] is empty")));
            }
        }
        match kind {
            ExperimentKind::Spectrum => {}
            ExperimentKind::ChernSweep => {
                if !matches!(self.model.family, ModelFamily::ToyDirac { .. }) {
                    return Err(Error::Config("chern-sweep varies the toy-dirac mass".into()));
                }
                if self.model.dim() != 2 {
                    return Err(Error::UnsupportedDimension("chern-sweep needs d = 2".into()));
                }
                if self.masses.is_empty() {
                    return Err(Error::Config("chern-sweep needs at least one mass".into()));
                }
                if self.k_grid < 2 {
                    return Err(Error::Config("k_grid must be at least 2".into()));
                }
            }
            ExperimentKind::GapFill | ExperimentKind::EdgeCurrent | ExperimentKind::Cobordism | ExperimentKind::Disorder => {
                self.bulk_spec().validate()?;
                if self.bulk_spec().axes.iter().any(|a| a.boundary != Boundary::Periodic) {
                    return Err(Error::Config("bulk_axes must all be periodic".into()));
                }
                self.box_spec().validate()?;
                if kind == ExperimentKind::Disorder {
                    if self.ensemble.seeds.is_empty() {
                        return Err(Error::Config("disorder experiment needs ensemble.seeds".into()));
                    }
                    if self.model.dim() != 2 {
                        return Err(Error::UnsupportedDimension("real-space Chern number needs d = 2".into()));
                    }
                }
                if kind == ExperimentKind::Cobordism && self.regions.w_prime.is_none() {
                    return Err(Error::Config("cobordism needs regions.w_prime".into()));
                }
            }
        }
        Ok(())
    }
}

/// Resolved geometry of a boundary experiment, without any eigensolve.
struct EdgeLayout {
    lattice: std::sync::Arc<Lattice>,
    geom: EdgeGeometry,
    geom_prime: Option<EdgeGeometry>,
    sweep: WindowSweep,
}

fn edge_layout(config: &ExperimentConfig, kind: ExperimentKind) -> Result<EdgeLayout> {
    let lattice = config.box_spec().lattice()?;
    let boundary = config.boundary_spec().resolve(&lattice)?;
    let geom = EdgeGeometry::new(boundary.clone(), config.w_spec().resolve(&lattice)?)?;
    let geom_prime = match &config.regions.w_prime {
        Some(spec) => Some(EdgeGeometry::new(boundary, spec.resolve(&lattice)?)?),
        None => None,
    };
    let sweep = config.sweep();
    if kind != ExperimentKind::GapFill {
        let all: Vec<&EdgeGeometry> = std::iter::once(&geom).chain(geom_prime.as_ref()).collect();
        sweep.checked_windows(&all)?;
    }
    Ok(EdgeLayout { lattice, geom, geom_prime, sweep })
}

/// Result of `validate`: resolved sizes, regions and memory estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub experiment: ExperimentKind,
    pub dimension: usize,
    pub orbitals: usize,
    /// Hilbert dimensions of every operator that will be diagonalized.
    pub matrices: BTreeMap<String, usize>,
    pub regions: BTreeMap<String, usize>,
    pub estimated_bytes: u64,
}

impl ValidationSummary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ok: {} experiment, d = {}, {} orbital(s)", self.experiment.name(), self.dimension, self.orbitals);
        for (name, n) in &self.matrices {
            let _ = writeln!(s, "  matrix {name}: {n} x {n}");
        }
        for (name, sites) in &self.regions {
            let _ = writeln!(s, "  region {name}: {sites} sites");
        }
        let _ = writeln!(s, "  estimated peak memory: {:.1} MiB", self.estimated_bytes as f64 / (1024.0 * 1024.0));
        s
    }
}

/// Parses and cross-checks a config without running it.
pub fn validate(config: &ExperimentConfig, requested: Option<ExperimentKind>) -> Result<ValidationSummary> {
    let kind = config.resolve_kind(requested)?;
    config.check_structure(kind)?;
    let mut matrices = BTreeMap::new();
    let mut regions = BTreeMap::new();
    match kind {
        ExperimentKind::Spectrum => {
            matrices.insert("model".to_string(), config.model.lattice()?.hilbert_dim());
        }
        ExperimentKind::ChernSweep => {
            let symbol = crate::models::bloch_symbol(&config.model, &vec![0.0; config.model.dim()])?;
            matrices.insert("symbol".to_string(), symbol.dim());
        }
        _ => {
            matrices.insert("bulk".to_string(), config.bulk_spec().lattice()?.hilbert_dim());
            matrices.insert("box".to_string(), config.box_spec().lattice()?.hilbert_dim());
            let layout = edge_layout(config, kind)?;
            regions.insert("boundary".to_string(), layout.geom.boundary.len());
            regions.insert("w".to_string(), layout.geom.w.len());
            if let Some(g) = &layout.geom_prime {
                regions.insert("w_prime".to_string(), g.w.len());
            }
            if kind != ExperimentKind::GapFill {
                let windows = layout.sweep.windows(&layout.lattice)?;
                regions.insert("window_max".to_string(), windows.last().map_or(0, Region::len));
            }
            if kind == ExperimentKind::Disorder {
                let bulk = config.bulk_spec().lattice()?;
                let tri = disk_for(config, &bulk)?;
                regions.insert("disk".to_string(), tri.window().len());
            }
        }
    }
    // eigenvectors, the dense input and a workspace of the same size
    let largest = matrices.values().copied().max().unwrap_or(0) as u64;
    Ok(ValidationSummary {
        experiment: kind,
        dimension: config.model.dim(),
        orbitals: config.model.orbitals(),
        matrices,
        regions,
        estimated_bytes: 3 * 16 * largest * largest,
    })
}

fn disk_for(config: &ExperimentConfig, bulk: &std::sync::Arc<Lattice>) -> Result<Tripartition> {
    let center = [0.5 * (bulk.extent(0) as f64 - 1.0), 0.5 * (bulk.extent(1) as f64 - 1.0)];
    Tripartition::disk(bulk, center, config.disk_radius(bulk))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernRow {
    pub mass: f64,
    pub chern: Option<ChernNumber>,
    /// `ok`, or the reason the point has no Chern number.
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRow {
    pub seed: u64,
    pub amplitude: f64,
    pub real_space: RealSpaceChern,
    pub edge_index: WindowedTraceResult,
    pub bulk_gap: SpectralGap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeIndices {
    pub kubo: WindowedTraceResult,
    pub pair_k1: WindowedTraceResult,
    pub pair_k2: WindowedTraceResult,
    pub current: WindowedTraceResult,
    pub exp_map: WindowedTraceResult,
    pub unitary_rank: usize,
    /// Unwindowed `Tr(u[χ_W, u*])` as `[re, im]`.
    pub global_kubo_trace: [f64; 2],
    /// Unwindowed `-2π Tr(φ(H̃) i[H̃, χ_W])` as `[re, im]`.
    pub global_current_trace: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

/// Parameters derived from defaults, recorded so every number in a report
/// can be traced to its inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub transition: Option<[f64; 2]>,
    pub gap_interval: Option<[f64; 2]>,
    pub window: Option<WindowSweep>,
    pub disk_radius: Option<f64>,
    pub seeds: Vec<u64>,
    pub rng: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub resolved: Resolved,
    pub spectrum: Vec<f64>,
    /// Localization fraction of each entry of `spectrum` (gap-fill only).
    pub localization: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub gaps: BTreeMap<String, SpectralGap>,
    pub chern: Vec<ChernRow>,
    pub edge: Option<EdgeIndices>,
    pub gap_filling: Option<GapFillingReport>,
    pub cobordism: Option<CobordismReport>,
    pub disorder: Vec<DisorderRow>,
    pub clean: Option<DisorderRow>,
    /// `true` when `θ_W = ORIENTATION · C` holds within 0.1.
    pub bulk_edge_agreement: Option<bool>,
    pub failure: Option<Failure>,
    /// Wall-clock seconds per stage; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn empty(config: &ExperimentConfig, kind: ExperimentKind) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: kind,
            config: config.clone(),
            resolved: Resolved { rng: DISORDER_RNG.to_string(), ..Resolved::default() },
            spectrum: Vec::new(),
            localization: Vec::new(),
            clusters: Vec::new(),
            gaps: BTreeMap::new(),
            chern: Vec::new(),
            edge: None,
            gap_filling: None,
            cobordism: None,
            disorder: Vec::new(),
            clean: None,
            bulk_edge_agreement: None,
            failure: None,
            timings: BTreeMap::new(),
        }
    }

    /// Exit code for the CLI: 0 on success, 2 after a physics failure.
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable") + "\n"
    }
}

/// Exit code for an error that prevented a report: 2 for physics, else 1.
pub fn error_exit_code(err: &Error) -> i32 {
    if err.is_physics() {
        2
    } else {
        1
    }
}

struct Stopwatch<'a> {
    timings: &'a mut BTreeMap<String, f64>,
}

impl Stopwatch<'_> {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(stage.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        out
    }
}

/// Open interval `(e - s(e - lower), e + s(upper - e))`.
fn shrink(gap: SpectralGap, e: f64, s: f64) -> Result<[f64; 2]> {
    if !gap.lower.is_finite() || !gap.upper.is_finite() {
        return Err(Error::Config(format!(
            "Fermi energy {e} is outside the spectrum; give spectral.transition explicitly"
        )));
    }
    Ok([e - s * (e - gap.lower), e + s * (gap.upper - e)])
}

fn bulk_gap(config: &ExperimentConfig, dec: &EigenDecomposition) -> Result<SpectralGap> {
    let tol = config.tolerances.gap * dec.spectral_diameter().max(1.0);
    spectral_gap(dec, config.fermi_energy, tol)
}

fn c(z: num_complex::Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Runs an experiment. Config problems are returned as errors; physics
/// failures are recorded in the report's `failure` field.
pub fn run(config: &ExperimentConfig, requested: Option<ExperimentKind>) -> Result<ExperimentReport> {
    let kind = config.resolve_kind(requested)?;
    config.check_structure(kind)?;
    if matches!(kind, ExperimentKind::GapFill | ExperimentKind::EdgeCurrent | ExperimentKind::Cobordism | ExperimentKind::Disorder) {
        edge_layout(config, kind)?;
    }
    let mut report = ExperimentReport::empty(config, kind);
    let mut timings = BTreeMap::new();
    let outcome = {
        let mut sw = Stopwatch { timings: &mut timings };
        match kind {
            ExperimentKind::Spectrum => run_spectrum(config, &mut report, &mut sw),
            ExperimentKind::ChernSweep => run_chern_sweep(config, &mut report, &mut sw),
            ExperimentKind::GapFill => run_gap_fill(config, &mut report, &mut sw),
            ExperimentKind::EdgeCurrent => run_edge_current(config, &mut report, &mut sw),
            ExperimentKind::Disorder => run_disorder(config, &mut report, &mut sw),
            ExperimentKind::Cobordism => run_cobordism(config, &mut report, &mut sw),
        }
    };
    report.timings = timings;
    match outcome {
        Ok(()) => Ok(report),
        Err(e) if e.is_physics() => {
            report.failure = Some(Failure { kind: physics_kind(&e).to_string(), message: e.to_string() });
            Ok(report)
        }
        Err(e) => Err(e),
    }
}

fn physics_kind(e: &Error) -> &'static str {
    match e {
        Error::NotAnInsulator { .. } => "not-an-insulator",
        Error::NotAProjection { .. } => "not-a-projection",
        Error::NotUnitary { .. } => "not-unitary",
        Error::GridTooCoarse { .. } => "grid-too-coarse",
        Error::GapClosedOnGrid { .. } => "gap-closed-on-grid",
        Error::SupportOutsideGap { .. } => "support-outside-gap",
        _ => "eigensolver",
    }
}

fn run_spectrum(config: &ExperimentConfig, report: &mut ExperimentReport, sw: &mut Stopwatch) -> Result<()> {
    let h = sw.time("build", || config.model.build())?;
    let dec = sw.time("eigh", || eigh(&h))?;
    report.spectrum = dec.eigenvalues().to_vec();
    report.clusters = clusters(dec.eigenvalues(), config.spectral.cluster_gap);
    // a spectrum run describes gapless models too; a gap is reported if present
    if let Ok(gap) = bulk_gap(config, &dec) {
        report.gaps.insert("model".into(), gap);
    }
    Ok(())
}

fn run_chern_sweep(config: &ExperimentConfig, report: &mut ExperimentReport, sw: &mut Stopwatch) -> Result<()> {
    let rows: Vec<Result<ChernRow>> = sw.time("fhs", || {
        config
            .masses
            .par_iter()
            .map(|&mass| {
                let spec = ModelSpec { family: ModelFamily::ToyDirac { mass }, ..config.model.clone() };
                match fhs_chern_with_tolerance(&spec, config.fermi_energy, config.k_grid, config.tolerances.fhs_residual) {
                    Ok(chern) => Ok(ChernRow { mass, chern: Some(chern), status: "ok".into() }),
                    Err(e) if e.is_physics() => Ok(ChernRow { mass, chern: None, status: physics_kind(&e).into() }),
                    Err(e) => Err(e),
                }
            })
            .collect()
    });
    report.chern = rows.into_iter().collect::<Result<_>>()?;
    Ok(())
}

/// Bulk decomposition, its gap, and the resolved transition interval.
fn bulk_stage(config: &ExperimentConfig, spec: &ModelSpec, sw: &mut Stopwatch) -> Result<(EigenDecomposition, SpectralGap, [f64; 2])> {
    let h = sw.time("build", || spec.build())?;
    let dec = sw.time("eigh-bulk", || eigh(&h))?;
    let gap = bulk_gap(config, &dec)?;
    let transition = match config.spectral.transition {
        Some(t) => t,
        None => shrink(gap, config.fermi_energy, 0.95)?,
    };
    Ok((dec, gap, transition))
}

fn run_gap_fill(config: &ExperimentConfig, report: &mut ExperimentReport, sw: &mut Stopwatch) -> Result<()> {
    let (bulk, gap, _) = bulk_stage(config, &config.bulk_spec(), sw)?;
    report.gaps.insert("bulk".into(), gap);
    let interval = match config.spectral.gap {
        Some(g) => g,
        None => shrink(gap, config.fermi_energy, 0.9)?,
    };
    report.resolved.gap_interval = Some(interval);
    let h = sw.time("build", || config.box_spec().build())?;
    let edge = sw.time("eigh-box", || eigh(&h))?;
    let layout = edge_layout(config, ExperimentKind::GapFill)?;
    let rep = sw.time("gap-fill", || gap_filling_report(&bulk, &edge, (interval[0], interval[1]), &layout.geom.boundary, config.spectral.r_loc))?;
    let near = layout.geom.boundary.thicken(config.spectral.r_loc);
    report.spectrum = edge.eigenvalues().to_vec();
    report.localization = sw.time("localization", || (0..edge.dim()).map(|k| localization_fraction(&edge, &near, k).min(1.0)).collect());
    report.gap_filling = Some(rep);
    Ok(())
}

struct BoxStage {
    h: crate::operator::LocalOperator,
    dec: EigenDecomposition,
}

fn box_stage(spec: &ModelSpec, sw: &mut Stopwatch) -> Result<BoxStage> {
    let h = sw.time("build", || spec.build())?;
    let dec = sw.time("eigh-box", || eigh(&h))?;
    Ok(BoxStage { h, dec })
}

fn run_edge_current(config: &ExperimentConfig, report: &mut ExperimentReport, sw: &mut Stopwatch) -> Result<()> {
    let (_, gap, t) = bulk_stage(config, &config.bulk_spec(), sw)?;
    report.gaps.insert("bulk".into(), gap);
    report.resolved.transition = Some(t);
    let layout = edge_layout(config, ExperimentKind::EdgeCurrent)?;
    report.resolved.window = Some(layout.sweep.clone());
    let stage = box_stage(&config.box_spec(), sw)?;
    let f = smooth_step(t[0], t[1])?;
    let phi = bump(t[0], t[1])?;
    let thr = config.tolerances.plateau;
    let edge = sw.time("indices", || -> Result<EdgeIndices> {
        let u = BoundaryUnitary::new(&stage.dec, &f)?;
        let (geom, sweep) = (&layout.geom, &layout.sweep);
        Ok(EdgeIndices {
            kubo: edge_index_kubo(&u, geom, sweep)?.with_threshold(thr),
            pair_k1: pair_projection_index(&u, geom, sweep, 1)?.with_threshold(thr),
            pair_k2: pair_projection_index(&u, geom, sweep, 2)?.with_threshold(thr),
            current: edge_current(&stage.dec, &stage.h, &phi, gap, geom, sweep)?.with_threshold(thr),
            exp_map: exp_map_consistency(&stage.dec, &f, geom, sweep)?.commutator.with_threshold(thr),
            unitary_rank: u.rank(),
            global_kubo_trace: c(global_kubo_trace(&u, &geom.w)),
            global_current_trace: c(global_current_trace(&stage.dec, &stage.h, &phi, &geom.w)),
        })
    })?;
    if crate::indices::has_bloch_chern(&config.model) {
        let chern = sw.time("fhs", || {
            fhs_chern_with_tolerance(&config.bulk_spec(), config.fermi_energy, config.k_grid, config.tolerances.fhs_residual)
        })?;
        report.bulk_edge_agreement = edge.kubo.value.map(|v| (v - ORIENTATION * chern.value as f64).abs() <= 0.1);
        report.chern.push(ChernRow { mass: toy_mass(&config.model), chern: Some(chern), status: "ok".into() });
    }
    report.edge = Some(edge);
    Ok(())
}

fn toy_mass(spec: &ModelSpec) -> f64 {
    match spec.family {
        ModelFamily::ToyDirac { mass } => mass,
        _ => f64::NAN,
    }
}

/// Bulk half of a disorder realization: torus gap and real-space Chern number.
fn disorder_bulk(config: &ExperimentConfig, amplitude: f64, seed: u64) -> Result<(SpectralGap, RealSpaceChern)> {
    let bulk = eigh(&config.bulk_spec().with_disorder(amplitude, seed).build()?)?;
    let gap = bulk_gap(config, &bulk)?;
    let p = fermi_projection(&bulk, config.fermi_energy)?;
    let tri = disk_for(config, bulk.lattice())?;
    Ok((gap, real_space_chern(&p, &tri)?))
}

fn disorder_edge(config: &ExperimentConfig, layout: &EdgeLayout, f: &SpectralFunction, amplitude: f64, seed: u64) -> Result<WindowedTraceResult> {
    let dec = eigh(&config.box_spec().with_disorder(amplitude, seed).build()?)?;
    let u = BoundaryUnitary::new(&dec, f)?;
    Ok(edge_index_kubo(&u, &layout.geom, &layout.sweep)?.with_threshold(config.tolerances.plateau))
}

/// The clean system and every seed share one transition interval, by
/// default 95% of the intersection of all their bulk gaps.
fn run_disorder(config: &ExperimentConfig, report: &mut ExperimentReport, sw: &mut Stopwatch) -> Result<()> {
    let layout = edge_layout(config, ExperimentKind::Disorder)?;
    report.resolved.window = Some(layout.sweep.clone());
    report.resolved.seeds = config.ensemble.seeds.clone();
    report.resolved.disk_radius = Some(config.disk_radius(&*config.bulk_spec().lattice()?));
    let amplitude = config.model.disorder.amplitude;
    // the clean system is listed first, with seed 0 and amplitude 0
    let points: Vec<(f64, u64)> =
        std::iter::once((0.0, 0)).chain(config.ensemble.seeds.iter().map(|&s| (amplitude, s))).collect();
    let bulk: Vec<Result<(SpectralGap, RealSpaceChern)>> =
        sw.time("bulk", || points.par_iter().map(|&(w, s)| disorder_bulk(config, w, s)).collect());
    let bulk = bulk.into_iter().collect::<Result<Vec<_>>>()?;
    let common = bulk.iter().fold(SpectralGap { lower: f64::NEG_INFINITY, upper: f64::INFINITY }, |acc, (g, _)| SpectralGap {
        lower: acc.lower.max(g.lower),
        upper: acc.upper.min(g.upper),
    });
    report.gaps.insert("common".into(), common);
    let t = match config.spectral.transition {
        Some(t) => t,
        None => shrink(common, config.fermi_energy, 0.95)?,
    };
    report.resolved.transition = Some(t);
    let f = smooth_step(t[0], t[1])?;
    let edges: Vec<Result<WindowedTraceResult>> =
        sw.time("edge", || points.par_iter().map(|&(w, s)| disorder_edge(config, &layout, &f, w, s)).collect());
    let mut rows = Vec::with_capacity(points.len());
    for ((&(amplitude, seed), (gap, real_space)), edge) in points.iter().zip(bulk).zip(edges) {
        rows.push(DisorderRow { seed, amplitude, real_space, edge_index: edge?, bulk_gap: gap });
    }
    let mut rows = rows.into_iter();
    report.clean = rows.next();
    report.disorder = rows.collect();
    Ok(())
}

fn run_cobordism(config: &ExperimentConfig, report: &mut ExperimentReport, sw: &mut Stopwatch) -> Result<()> {
    let (_, gap, t) = bulk_stage(config, &config.bulk_spec(), sw)?;
    report.gaps.insert("bulk".into(), gap);
    report.resolved.transition = Some(t);
    let layout = edge_layout(config, ExperimentKind::Cobordism)?;
    report.resolved.window = Some(layout.sweep.clone());
    let stage = box_stage(&config.box_spec(), sw)?;
    let u = BoundaryUnitary::new(&stage.dec, &smooth_step(t[0], t[1])?)?;
    let prime = layout.geom_prime.as_ref().expect("checked in check_structure");
    let mut rep = sw.time("indices", || cobordism_check(&u, &layout.geom, prime, &layout.sweep))?;
    rep.theta_w = rep.theta_w.with_threshold(config.tolerances.plateau);
    rep.theta_w_prime = rep.theta_w_prime.with_threshold(config.tolerances.plateau);
    report.cobordism = Some(rep);
    Ok(())
}

fn plateau_rows(out: &mut String, mass: f64, seed: u64, r: &WindowedTraceResult) {
    for p in &r.plateau {
        let _ = writeln!(out, "{mass},{seed},{},{},{},{}", p.radius, p.re, p.im, r.converged);
    }
}

const PLATEAU_HEADER: &str = "mass,seed,radius,value_re,value_im,converged\n";

/// CSV bodies for a report, keyed by file name. Every table of the
/// experiment kind is present, header-only when the report has no data.
pub fn plot_tables(report: &ExperimentReport) -> BTreeMap<String, String> {
    let mass = toy_mass(&report.config.model);
    let seed = report.config.model.disorder.seed;
    let mut tables = BTreeMap::new();
    for &name in report.experiment.tables() {
        let mut s = String::new();
        match (report.experiment, name) {
            (ExperimentKind::Spectrum, _) => {
                s.push_str("index,eigenvalue\n");
                for (i, e) in report.spectrum.iter().enumerate() {
                    let _ = writeln!(s, "{i},{e}");
                }
            }
            (ExperimentKind::ChernSweep, _) => {
                s.push_str("mass,chern,raw,residual,status\n");
                for row in &report.chern {
                    match &row.chern {
                        Some(c) => {
                            let _ = writeln!(s, "{},{},{},{},{}", row.mass, c.value, c.raw, c.residual, row.status);
                        }
                        None => {
                            let _ = writeln!(s, "{},,,,{}", row.mass, row.status);
                        }
                    }
                }
            }
            (ExperimentKind::GapFill, _) => {
                s.push_str("index,eigenvalue,localization\n");
                for (i, (e, l)) in report.spectrum.iter().zip(&report.localization).enumerate() {
                    let _ = writeln!(s, "{i},{e},{l}");
                }
            }
            (ExperimentKind::EdgeCurrent, name) => {
                s.push_str(PLATEAU_HEADER);
                if let Some(edge) = &report.edge {
                    let r = match name {
                        "plateau_kubo.csv" => &edge.kubo,
                        "plateau_pair_k1.csv" => &edge.pair_k1,
                        "plateau_pair_k2.csv" => &edge.pair_k2,
                        "plateau_current.csv" => &edge.current,
                        _ => &edge.exp_map,
                    };
                    plateau_rows(&mut s, mass, seed, r);
                }
            }
            (ExperimentKind::Disorder, "disorder.csv") => {
                s.push_str("seed,amplitude,real_space_chern,real_space_imag,edge_index,edge_converged\n");
                for row in report.clean.iter().chain(&report.disorder) {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        row.seed, row.amplitude, row.real_space.value, row.real_space.imag_residual, row.edge_index.last, row.edge_index.converged
                    );
                }
            }
            (ExperimentKind::Disorder, _) => {
                s.push_str(PLATEAU_HEADER);
                for row in &report.disorder {
                    plateau_rows(&mut s, mass, row.seed, &row.edge_index);
                }
            }
            (ExperimentKind::Cobordism, name) => {
                s.push_str(PLATEAU_HEADER);
                if let Some(c) = &report.cobordism {
                    plateau_rows(&mut s, mass, seed, if name == "plateau_kubo.csv" { &c.theta_w } else { &c.theta_w_prime });
                }
            }
        }
        tables.insert(name.to_string(), s);
    }
    tables
}

/// Writes every CSV table of the report into `dir`.
pub fn emit_plot_data(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, body) in plot_tables(report) {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `report.json` and the CSV tables into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = emit_plot_data(report, dir)?;
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json())?;
    written.push(path);
    Ok(written)
}

/// Output directory: explicit flag, then the config, then the environment,
/// then `./coarse-lab-out`.
pub fn output_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("coarse-lab-out"))
}
