use hardylab::functionals::rayleigh_quotient;
use hardylab::quadrature::{support_graded_rule, SamplingMode};
use hardylab::trial::{product_bump_trial, random_trial, TrialFunction};
use hardylab::ConeSpec;

fn quotient(u: &dyn TrialFunction<f64>, per_panel: usize) -> f64 {
    let rule = support_graded_rule(u.spec(), u.support_radius(), per_panel, 16, SamplingMode::Deterministic).unwrap();
    rayleigh_quotient(u, &rule).unwrap()
}

#[test]
fn bump_quotients_are_converged_on_graded_rules() {
    for k in 1..=3 {
        let spec = ConeSpec::new(3, k).unwrap();
        let mut trials: Vec<Box<dyn TrialFunction<f64>>> = vec![Box::new(product_bump_trial(spec, 1.0).unwrap())];
        for seed in 0..4 {
            trials.push(Box::new(random_trial(spec, 1.0, 10, 100 + seed).unwrap()));
        }
        for u in &trials {
            let (a, b) = (quotient(u.as_ref(), 12), quotient(u.as_ref(), 16));
            assert!(((a - b) / b).abs() < 1e-9, "k={k}: {a} vs {b}");
        }
    }
}

#[test]
fn random_trials_are_supported_inside_their_ball() {
    let spec = ConeSpec::new(4, 2).unwrap();
    for seed in 0..20 {
        let u = random_trial::<f64>(spec, 2.0, 10, seed).unwrap();
        let rho = u.support_radius();
        assert!((1.0..=2.0).contains(&rho), "{rho}");
        assert_eq!(u.value(&[0.0, 0.0, rho * 0.6, rho * 0.8]), 0.0);
    }
}
