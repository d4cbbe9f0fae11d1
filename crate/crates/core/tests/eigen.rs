use hardylab::cone::{angular_eigenfunction, principal_eigenvalue};
use hardylab::operators::{dyadic_steps, eigen_relation_residual, log_log_slope, section_probes};
use hardylab::quadrature::{sphere_rule, SamplingMode};
use hardylab::spectral::*;
use hardylab::ConeSpec;

#[test]
fn richardson_hits_the_targets() {
    for k in 1..=3 {
        let rep = verify_section_eigenvalues::<f64>(k, &[16, 32, 64], 1e-3).unwrap();
        assert!(rep.passed, "k={k}: {:?} -> {}", rep.table.value, rep.extrapolated);
        assert!((rep.observed_order - 2.0).abs() < 0.2);
    }
}

#[test]
fn doubling_the_octant_grid_roughly_quadruples_unknowns() {
    let a = build_grid::<f64>(3, grid_resolution(3, 32)).unwrap().unknowns();
    let b = build_grid::<f64>(3, grid_resolution(3, 64)).unwrap().unknowns();
    let ratio = b as f64 / a as f64;
    assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
}

#[test]
fn general_n_eigen_relation_is_second_order() {
    for (n, k) in [(4, 2), (5, 3), (6, 3)] {
        let spec = ConeSpec::new(n, k).unwrap();
        let phi = angular_eigenfunction::<f64>(spec, 1e-12).unwrap();
        let pts = section_probes::<f64>(spec, 100, 0.1, 3).unwrap();
        let steps = dyadic_steps(0.04, 4);
        let res: Vec<f64> = steps
            .iter()
            .map(|&h| eigen_relation_residual(&phi, &pts, h).unwrap().residual)
            .collect();
        let slope = log_log_slope(&steps, &res).unwrap();
        assert!((slope - 2.0).abs() < 0.3, "({n},{k}): {slope} {res:?}");
    }
}

#[test]
fn angular_rayleigh_matches_within_three_sigma() {
    for (n, k) in [(4, 2), (5, 3), (6, 3)] {
        let spec = ConeSpec::new(n, k).unwrap();
        let rule = sphere_rule::<f64>(n, 4000, Some(k), SamplingMode::Stochastic { seed: 17 }).unwrap();
        let r = angular_rayleigh(spec, &rule).unwrap();
        let target = principal_eigenvalue(spec) as f64;
        assert!((r.value - target).abs() <= 3.0 * r.std_error.unwrap(), "({n},{k}) {r:?}");
    }
}
