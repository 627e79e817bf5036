use std::f64::consts::PI;
use std::path::Path;

use coarse_lab::experiment::{self, ExperimentConfig};
use coarse_lab::indices::{edge_index_kubo, BoundaryUnitary, EdgeGeometry, WindowSweep};
use coarse_lab::lattice::{Axis, HalfSpace, Region, Side};
use coarse_lab::models::{bloch_symbol, Gauge, ModelSpec};
use coarse_lab::spectral::{eigh, exp_unitary, fermi_projection, smooth_step};
use coarse_lab::C64;
use proptest::prelude::*;

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn disordered_toy(m: f64, w: f64, seed: u64) -> ModelSpec {
    ModelSpec::toy_dirac(m, vec![Axis::periodic(6), Axis::open(5)]).with_disorder(w, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn calculus_is_multiplicative_for_polynomials(
        m in -3.0f64..3.0,
        f in proptest::collection::vec(-1.0f64..1.0, 1..4),
        g in proptest::collection::vec(-1.0f64..1.0, 1..4),
    ) {
        let dec = eigh(&disordered_toy(m, 0.7, 3).build().unwrap()).unwrap();
        let fg = dec.functional_calculus(|x| poly(&f, x) * poly(&g, x));
        let prod = &dec.functional_calculus(|x| poly(&f, x)) * &dec.functional_calculus(|x| poly(&g, x));
        prop_assert!(fg.distance(&prod) < 1e-9);

        let mut mapped: Vec<f64> = dec.eigenvalues().iter().map(|&x| poly(&f, x)).collect();
        mapped.sort_by(f64::total_cmp);
        let image = eigh(&dec.functional_calculus(|x| poly(&f, x))).unwrap();
        for (a, b) in mapped.iter().zip(image.eigenvalues()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exp_unitary_commutes_with_the_hamiltonian(m in -3.0f64..3.0, a in -2.0f64..1.0, width in 0.1f64..2.0) {
        let h = disordered_toy(m, 0.5, 11).build().unwrap();
        let dec = eigh(&h).unwrap();
        let u = exp_unitary(&dec, &smooth_step(a, a + width).unwrap()).unwrap();
        prop_assert!(u.commutator(&h).max_entry_norm() < 1e-9);
    }

    #[test]
    fn fermi_projection_is_a_smooth_step_in_any_gap(m in prop_oneof![-2.8f64..-2.2, -1.8f64..-0.2, 0.2f64..1.8, 2.2f64..2.8]) {
        let spec = ModelSpec::toy_dirac(m, vec![Axis::periodic(6), Axis::periodic(6)]);
        let dec = eigh(&spec.build().unwrap()).unwrap();
        let n = dec.count_below(0.0);
        let (lo, hi) = (dec.eigenvalues()[n - 1], dec.eigenvalues()[n]);
        let step = smooth_step(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo)).unwrap();
        let p = fermi_projection(&dec, 0.0).unwrap();
        prop_assert!(dec.functional_calculus(|x| step.eval(x)).distance(&p) < 1e-10);
    }

    #[test]
    fn models_are_hermitian_with_unit_propagation(m in -3.0f64..3.0, w in 0.0f64..2.0, seed in 0u64..100, q in 2usize..7) {
        let toy = disordered_toy(m, w, seed).build().unwrap();
        prop_assert!(toy.is_hermitian(1e-12));
        prop_assert_eq!(toy.propagation(), 1.0);
        let hof = ModelSpec::hofstadter(2.0 * PI / q as f64, Gauge::LandauY, vec![Axis::periodic(2 * q), Axis::open(5)])
            .with_disorder(w, seed)
            .build()
            .unwrap();
        prop_assert!(hof.is_hermitian(1e-12));
        prop_assert_eq!(hof.propagation(), 1.0);
    }

    #[test]
    fn toy_spectrum_is_symmetric_about_zero(m in -4.0f64..4.0, lx in 3usize..7, ly in 3usize..7, open_y in any::<bool>()) {
        let y = if open_y { Axis::open(ly) } else { Axis::periodic(ly) };
        let dec = eigh(&ModelSpec::toy_dirac(m, vec![Axis::periodic(lx), y]).build().unwrap()).unwrap();
        let v = dec.eigenvalues();
        for (a, b) in v.iter().zip(v.iter().rev()) {
            prop_assert!((a + b).abs() < 1e-9);
        }
    }

    #[test]
    fn hofstadter_is_positive(p in 1usize..5, q in 5usize..9, w in 0.0f64..1.0, seed in 0u64..50, gauge_y in any::<bool>()) {
        let gauge = if gauge_y { Gauge::LandauY } else { Gauge::LandauX };
        let spec = ModelSpec::hofstadter(2.0 * PI * p as f64 / q as f64, gauge, vec![Axis::periodic(q), Axis::periodic(q)]);
        let dec = eigh(&spec.with_disorder(w, seed).build().unwrap()).unwrap();
        prop_assert!(dec.eigenvalues()[0] >= -1e-9);
    }

    #[test]
    fn bloch_symbols_are_hermitian(m in -3.0f64..3.0, kx in -PI..PI, ky in -PI..PI) {
        let s = bloch_symbol(&ModelSpec::toy_dirac(m, vec![Axis::periodic(4), Axis::periodic(4)]), &[kx, ky]).unwrap();
        prop_assert!(s.distance(&s.adjoint()) < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// A converged windowed index is within 0.1 of an integer.
    #[test]
    fn converged_indices_are_quantized(m in prop_oneof![-1.6f64..-0.6, 0.6f64..1.6, 2.4f64..3.5]) {
        let dec = eigh(&ModelSpec::toy_dirac(m, vec![Axis::open(20), Axis::open(20)]).build().unwrap()).unwrap();
        let torus = eigh(&ModelSpec::toy_dirac(m, vec![Axis::periodic(20), Axis::periodic(20)]).build().unwrap()).unwrap();
        let n = torus.count_below(0.0);
        let (lo, hi) = (torus.eigenvalues()[n - 1], torus.eigenvalues()[n]);
        let lat = dec.lattice().clone();
        let geom = EdgeGeometry::new(Region::open_boundary_layer(&lat), HalfSpace::new(0, 10, Side::Upper).region(&lat).unwrap()).unwrap();
        let sweep = WindowSweep::new(vec![10, 0], vec![3.0, 4.0, 5.0, 6.0, 7.0]);
        let u = BoundaryUnitary::new(&dec, &smooth_step(0.95 * lo, 0.95 * hi).unwrap()).unwrap();
        let r = edge_index_kubo(&u, &geom, &sweep).unwrap();
        if let Some(v) = r.value {
            prop_assert!((v - v.round()).abs() <= 0.1, "{v}");
        }
    }

    /// A config that validates never fails with a config error, runs are
    /// deterministic, and the report records the seeds and tolerances.
    #[test]
    fn validated_configs_run_deterministically(m in -3.0f64..3.0, w in 0.0f64..1.0, seed in 0u64..1000, l in 4usize..8) {
        let text = format!(
            "schema_version = 1\nexperiment = \"spectrum\"\n[model]\nfamily = \"toy-dirac\"\nmass = {m:?}\naxes = [{{ extent = {l}, boundary = \"periodic\" }}, {{ extent = 4, boundary = \"open\" }}]\ndisorder = {{ amplitude = {w:?}, seed = {seed} }}\n[tolerances]\nplateau = 0.03\n"
        );
        let config = ExperimentConfig::from_toml_str(&text, Path::new("p.toml")).unwrap();
        experiment::validate(&config, None).unwrap();
        let a = experiment::run(&config, None).unwrap();
        let b = experiment::run(&config, None).unwrap();
        prop_assert_eq!(experiment::plot_tables(&a), experiment::plot_tables(&b));
        prop_assert_eq!(a.config.model.disorder.seed, seed);
        prop_assert_eq!(a.config.tolerances.plateau, 0.03);
        prop_assert_eq!(a.spectrum.len(), 2 * l * 4);
    }
}

#[test]
fn disorder_shifts_each_site_uniformly_across_orbitals() {
    let clean = disordered_toy(1.0, 0.0, 0).build().unwrap();
    let dirty = disordered_toy(1.0, 1.0, 42).build().unwrap();
    let lat = clean.lattice().clone();
    for s in 0..lat.sites() {
        let shift: Vec<C64> = (0..2).map(|o| dirty.get(lat.flat_index(s, o), lat.flat_index(s, o)) - clean.get(lat.flat_index(s, o), lat.flat_index(s, o))).collect();
        assert!((shift[0] - shift[1]).norm() < 1e-14);
        assert!(shift[0].re.abs() <= 0.5 && shift[0].im == 0.0);
    }
}
