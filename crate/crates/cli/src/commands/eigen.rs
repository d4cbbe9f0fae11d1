use anyhow::{bail, Context};
use hardylab::cone::{angular_eigenfunction, principal_eigenvalue};
use hardylab::operators::{dyadic_steps, eigen_relation_residual, log_log_slope, section_probes};
use hardylab::quadrature::{sphere_rule, SamplingMode};
use hardylab::spectral::{angular_rayleigh, verify_section_eigenvalues, SectionEigenReport};
use hardylab::ConeSpec;
use rayon::prelude::*;
use serde_json::json;

use super::{label, num, rule_seed, seed, specs, tolerance, to_value, Outcome};
use crate::config::Params;
use crate::parameter_map;
use crate::record::Table;

pub const RESOLUTIONS: [usize; 4] = [32, 64, 128, 256];
pub const QUICK_RESOLUTIONS: [usize; 3] = [16, 32, 64];
pub const GENERAL_SPECS: [(usize, usize); 3] = [(4, 2), (5, 3), (6, 3)];
pub const PROBES: usize = 100;
pub const PROBE_CLEARANCE: f64 = 0.1;
pub const ANGULAR_SAMPLES: usize = 4000;
/// Observed order of the eigen-relation residual must lie in `2 ± 0.3`.
pub const ORDER_BAND: f64 = 0.3;

/// Finite-volume eigenvalue of the spherical section at `n = 3`, refined and
/// extrapolated. With `--n` above 3 this runs the general-dimension checks.
pub fn run(params: &Params) -> anyhow::Result<Outcome> {
    if params.n.is_some_and(|n| n != 3) {
        return run_general(params);
    }
    let ks: Vec<usize> = match params.k {
        Some(k) if (1..=3).contains(&k) => vec![k],
        Some(k) => bail!("the finite-volume solver covers k in 1..=3 at n = 3, got k = {k}"),
        None => vec![1, 2, 3],
    };
    let resolutions = params.resolutions.clone().unwrap_or_else(|| {
        if params.quick {
            QUICK_RESOLUTIONS.to_vec()
        } else {
            RESOLUTIONS.to_vec()
        }
    });
    if resolutions.len() < 3 {
        bail!("--resolutions needs at least three levels for the observed order");
    }
    let tol = tolerance(params, 1e-3)?;
    let reports = ks
        .par_iter()
        .map(|&k| verify_section_eigenvalues::<f64>(k, &resolutions, tol).with_context(|| format!("eigenvalue solve for k = {k}")))
        .collect::<anyhow::Result<Vec<SectionEigenReport<f64>>>>()?;
    let mut table = Table::new("eigen", &["k", "resolution", "unknowns", "estimate", "error"]);
    let mut summary = Vec::new();
    let mut passed = true;
    for rep in &reports {
        for r in &rep.results {
            table.push(vec![
                rep.k.to_string(),
                format!("{}x{}", r.resolution.0, r.resolution.1),
                r.unknowns.to_string(),
                num(r.eigenvalue),
                num((r.eigenvalue - rep.target).abs()),
            ]);
        }
        passed &= rep.passed;
        summary.push(format!(
            "k = {}: extrapolated {:.9} vs {}, order {:.3}, relative error {:.2e}",
            rep.k, rep.extrapolated, rep.target, rep.observed_order, rep.relative_error
        ));
    }
    Ok(Outcome {
        command: "eigen".into(),
        parameters: parameter_map(&[
            ("n", json!(3)),
            ("k", json!(ks)),
            ("resolutions", json!(resolutions)),
            ("tol", json!(tol)),
        ]),
        passed,
        payload: json!({ "sections": reports.iter().map(to_value).collect::<Vec<_>>() }),
        tables: vec![table],
        summary,
        ..Default::default()
    })
}

/// Pointwise eigen relation for the product eigenfunction in higher
/// dimensions, plus a sampled Rayleigh quotient on the section.
pub fn run_general(params: &Params) -> anyhow::Result<Outcome> {
    let specs: Vec<ConeSpec> = if params.n.is_some() {
        specs(params, &GENERAL_SPECS)?
    } else {
        GENERAL_SPECS
            .iter()
            .map(|&(n, k)| ConeSpec::new(n, k))
            .collect::<Result<_, _>>()?
    };
    let seed = seed(params);
    let steps = dyadic_steps(0.04, 4);
    let mut table = Table::new("eigen_relation", &["n", "k", "step", "residual"]);
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    for spec in specs {
        let phi = angular_eigenfunction::<f64>(spec, 1e-12)?;
        let probes = section_probes::<f64>(spec, PROBES, PROBE_CLEARANCE, rule_seed(seed, spec))?;
        let residuals = steps
            .iter()
            .map(|&h| eigen_relation_residual(&phi, &probes, h).map(|s| s.residual))
            .collect::<Result<Vec<f64>, _>>()
            .with_context(|| format!("eigen relation for {spec}"))?;
        for (h, r) in steps.iter().zip(&residuals) {
            table.push(vec![spec.n().to_string(), spec.k().to_string(), num(*h), num(*r)]);
        }
        let slope = log_log_slope(&steps, &residuals).unwrap_or(f64::NAN);
        let slope_ok = (slope - 2.0).abs() <= ORDER_BAND;
        let rule = sphere_rule::<f64>(
            spec.n(),
            ANGULAR_SAMPLES,
            Some(spec.k()),
            SamplingMode::Stochastic { seed: rule_seed(seed, spec) },
        )?;
        let rq = angular_rayleigh(spec, &rule)?;
        let target = principal_eigenvalue(spec) as f64;
        let sigma = rq.std_error.unwrap_or(0.0);
        let rayleigh_ok = (rq.value - target).abs() <= 3.0 * sigma;
        passed &= slope_ok && rayleigh_ok;
        summary.push(format!(
            "{}: residual order {slope:.3}, sampled quotient {:.4} ± {:.4} vs {target}",
            label(spec),
            rq.value,
            sigma
        ));
        entries.push(json!({
            "spec": spec,
            "lambda1": target,
            "steps": steps,
            "residuals": residuals,
            "order": slope,
            "order_passed": slope_ok,
            "rayleigh": to_value(&rq),
            "rayleigh_passed": rayleigh_ok,
            "rule": rule.descriptor(),
        }));
    }
    Ok(Outcome {
        command: "eigen".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("k", json!(params.k)),
            ("seed", json!(seed)),
            ("probes", json!(PROBES)),
            ("angular_samples", json!(ANGULAR_SAMPLES)),
        ]),
        passed,
        payload: json!({ "general": entries }),
        tables: vec![table],
        summary,
        ..Default::default()
    })
}
