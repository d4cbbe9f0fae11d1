use anyhow::Context;
use hardylab::decompose::{
    chebyshev_radii, energy_doubling_check, harmonic_coefficients, low_degree_vanishing_check,
    low_degree_vanishing_check_with, moment_vanishing_check, raw_monomial_moment, MultiIndex, DEFAULT_RADIAL_POINTS,
};
use hardylab::quadrature::{sphere_rule, SamplingMode};
use hardylab::trial::{product_bump_trial, random_trial, Parity, TrialFunction};
use hardylab::ConeSpec;
use serde_json::{json, Value};

use super::inequalities::RANDOM_BASIS;
use super::{label, num, radius, seed, specs, to_value, trial_rule, trial_seed, Outcome, DEFAULT_SPECS};
use crate::config::Params;
use crate::parameter_map;
use crate::record::Table;

/// Harmonic degree kept in the `n = 3` expansion.
pub const LMAX: usize = 8;
pub const SPHERE_ORDER: usize = 24;
/// A degree-`k` moment with a relative size below this would mean the
/// negative control failed to detect anything.
pub const CONTROL_FLOOR: f64 = 1e-3;

type Trials = Vec<(String, Box<dyn TrialFunction<f64>>)>;

fn trial_suite(spec: ConeSpec, r: f64, seed: u64, count: usize) -> anyhow::Result<Trials> {
    let mut suite: Trials = vec![("product_bump".into(), Box::new(product_bump_trial(spec, r)?))];
    for i in 0..count.saturating_sub(1) {
        let s = trial_seed(seed, spec, i);
        suite.push((format!("random:{s}"), Box::new(random_trial(spec, r, RANDOM_BASIS, s)?)));
    }
    Ok(suite)
}

fn weights() -> [(&'static str, fn(f64) -> f64); 2] {
    [("unit", |_| 1.0), ("gaussian", |r| (-r * r).exp())]
}

/// Odd extension across the constrained hyperplanes: low-degree harmonic
/// coefficients at `n = 3`, low-order moments, and energy doubling.
pub fn run(params: &Params) -> anyhow::Result<Outcome> {
    let specs = specs(params, &DEFAULT_SPECS)?;
    let r = radius(params)?;
    let seed = seed(params);
    let count = params.trials.unwrap_or(if params.quick { 2 } else { 5 }).max(1);
    let mut coefficients = Table::new("coefficients", &["n", "k", "trial", "r", "l", "m", "value"]);
    let mut moments = Table::new("moments", &["n", "k", "trial", "weight", "max_relative", "threshold"]);
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    let radii = chebyshev_radii(r, DEFAULT_RADIAL_POINTS);
    let sphere = sphere_rule::<f64>(3, SPHERE_ORDER, None, SamplingMode::Deterministic)?;
    for spec in specs {
        let suite = trial_suite(spec, r, seed, count)?;
        let cone = trial_rule(spec, r, seed)?;
        let full = cone.mirrored(spec.k()).with_context(|| format!("mirroring the rule for {spec}"))?;
        let mut harmonic = Vec::new();
        let mut even_control = Value::Null;
        if spec.n() == 3 {
            for (name, u) in &suite {
                let rep = low_degree_vanishing_check(u.as_ref(), &sphere, &radii)?;
                passed &= rep.passed;
                if name == "product_bump" {
                    let c = harmonic_coefficients(u.as_ref(), LMAX, &radii, &sphere)?;
                    for row in c.csv_rows() {
                        coefficients.push(vec![
                            "3".into(),
                            spec.k().to_string(),
                            name.clone(),
                            num(row.r),
                            row.l.to_string(),
                            row.m.to_string(),
                            num(row.value),
                        ]);
                    }
                    let even = low_degree_vanishing_check_with(u.as_ref(), Parity::Even, &sphere, &radii)?;
                    passed &= !even.passed;
                    even_control = json!({ "detected": !even.passed, "report": to_value(&even) });
                }
                harmonic.push(json!({ "trial": name, "report": to_value(&rep) }));
            }
        }
        let mut moment_reports = Vec::new();
        for (name, u) in &suite {
            for (wname, w) in weights() {
                let rep = moment_vanishing_check(u.as_ref(), &w, &full)?;
                passed &= rep.passed;
                moments.push(vec![
                    spec.n().to_string(),
                    spec.k().to_string(),
                    name.clone(),
                    wname.into(),
                    num(rep.max_relative),
                    num(rep.threshold),
                ]);
                moment_reports.push(json!({ "trial": name, "weight": wname, "report": to_value(&rep) }));
            }
        }
        let alpha = MultiIndex::new((0..spec.n()).map(|i| u32::from(i >= spec.n() - spec.k())).collect());
        let (m, scale) = raw_monomial_moment(suite[0].1.as_ref(), &alpha, &|_| 1.0, &full)?;
        let control_relative = m.abs() / scale;
        let control_ok = control_relative > CONTROL_FLOOR;
        passed &= control_ok;
        let mut doubling = Vec::new();
        for (name, u) in &suite {
            let rep = energy_doubling_check(u.as_ref(), &cone, &full)?;
            passed &= rep.passed != Some(false);
            doubling.push(json!({ "trial": name, "report": to_value(&rep) }));
        }
        summary.push(format!(
            "{}: {} trials, degree-{} control moment {:.3} of its absolute integral",
            label(spec),
            suite.len(),
            spec.k(),
            control_relative
        ));
        entries.push(json!({
            "spec": spec,
            "lmax": LMAX,
            "harmonic": harmonic,
            "even_control": even_control,
            "moments": moment_reports,
            "moment_control": { "alpha": alpha.to_string(), "relative": control_relative, "detected": control_ok },
            "doubling": doubling,
            "rule": full.descriptor(),
        }));
    }
    Ok(Outcome {
        command: "decompose".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("k", json!(params.k)),
            ("R", json!(r)),
            ("trials", json!(count)),
            ("seed", json!(seed)),
            ("lmax", json!(LMAX)),
            ("radial_points", json!(DEFAULT_RADIAL_POINTS)),
            ("sphere_order", json!(SPHERE_ORDER)),
        ]),
        passed,
        payload: json!({ "specs": entries }),
        tables: vec![coefficients, moments],
        summary,
        ..Default::default()
    })
}
