use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use sldg_core::ldg::{FluxOrientation, LdgSolver, SchemeConfig};
use sldg_core::noise::{NoisePath, NoiseSpec};
use sldg_core::potential::Potential;
use sldg_core::{DgField, Mesh};

fn solver(cells: usize, degree: usize, flux: FluxOrientation, q: f64) -> LdgSolver {
    let mesh = Arc::new(Mesh::uniform(0.0, 1.0, cells).unwrap());
    let noise = NoiseSpec::power_law(0.0, 1.0, 16, 3.0, 1.0).unwrap();
    let cfg = SchemeConfig::new(mesh, degree, 0.01, 0.01, noise)
        .unwrap()
        .with_flux(flux)
        .with_potential(Potential::Cosine { amplitude: q });
    LdgSolver::new(cfg).unwrap()
}

fn field(solver: &LdgSolver, values: &[(f64, f64)]) -> DgField {
    let n = solver.config().unknowns();
    let coeffs = (0..n).map(|i| {
        let (a, b) = values[i % values.len()];
        Complex64::new(a, b)
    });
    DgField::from_coeffs(solver.mesh().clone(), solver.config().degree, coeffs.collect()).unwrap()
}

fn flux() -> impl Strategy<Value = FluxOrientation> {
    prop_oneof![Just(FluxOrientation::Alternating), Just(FluxOrientation::Mirrored)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_conserve_charge(
        cells in 2usize..20,
        degree in 1usize..4,
        flux in flux(),
        q in -3.0f64..3.0,
        seed in any::<u64>(),
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12),
    ) {
        let solver = solver(cells, degree, flux, q);
        let u = field(&solver, &values);
        prop_assume!(u.charge() > 1e-6);
        let path = NoisePath::sample(16, 0.01, 1, seed, 0).unwrap();
        let incr = path.increment(&solver.config().noise, 0).unwrap();
        let (next, _) = solver.step(&u, &incr).unwrap();
        let rel = (next.charge() - u.charge()).abs() / u.charge();
        prop_assert!(rel <= 1e-10, "relative drift {}", rel);
    }

    #[test]
    fn steps_are_linear(
        cells in 2usize..12,
        degree in 1usize..3,
        seed in any::<u64>(),
        a in (-2.0f64..2.0, -2.0f64..2.0),
        u in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
    ) {
        let solver = solver(cells, degree, FluxOrientation::Alternating, 1.0);
        let (u, v) = (field(&solver, &u), field(&solver, &v));
        let a = Complex64::new(a.0, a.1);
        let one = Complex64::new(1.0, 0.0);
        let path = NoisePath::sample(16, 0.01, 1, seed, 3).unwrap();
        let incr = path.increment(&solver.config().noise, 0).unwrap();
        let (su, _) = solver.step(&u, &incr).unwrap();
        let (sv, _) = solver.step(&v, &incr).unwrap();
        let (sw, _) = solver.step(&u.combine(a, &v, one).unwrap(), &incr).unwrap();
        let diff = sw.sub(&su.combine(a, &sv, one).unwrap()).unwrap().norm();
        let scale = 1.0 + su.norm() * a.norm() + sv.norm();
        prop_assert!(diff <= 1e-11 * scale, "{}", diff);
    }

    #[test]
    fn coarsened_paths_sum_increments(
        seed in any::<u64>(),
        factor in prop::sample::select(vec![2usize, 4, 8]),
    ) {
        let fine = NoisePath::sample(4, 1.0 / 64.0, 64, seed, 0).unwrap();
        let coarse = fine.coarsen(factor).unwrap();
        for k in 0..4 {
            for n in 0..coarse.steps() {
                let sum: f64 = (0..factor).map(|i| fine.brownian_increment(k, n * factor + i)).sum();
                prop_assert!((coarse.brownian_increment(k, n) - sum).abs() < 1e-13);
            }
        }
    }
}
