use anyhow::Context;
use hardylab::operators::{
    dyadic_steps, monomial_conjugation_residual, orthant_monomial_harmonicity, residual_sweep, rounding_floor,
    smooth_test_fields, weighted_conjugation_residual, ResidualSweep,
};
use hardylab::{ConeSpec, HalfInteger};
use serde_json::json;

use super::{label, num, specs, Outcome, DEFAULT_SPECS};
use crate::config::Params;
use crate::parameter_map;
use crate::record::Table;

pub const H0: f64 = 0.1;
pub const STEPS: usize = 6;
/// Accepted band around the expected second order.
pub const ORDER_BAND: f64 = 0.2;
pub const HARMONICITY_STEP: f64 = 1e-3;

/// Evaluation point: free coordinates spread around the origin, constrained
/// ones well above the largest stencil step.
pub fn probe_point(spec: ConeSpec) -> Vec<f64> {
    let free = [0.3, -0.4, 0.2, -0.1, 0.35, -0.25];
    (0..spec.n())
        .map(|i| {
            if i < spec.n() - spec.k() {
                free[i % free.len()]
            } else {
                0.6 + 0.1 * (i - (spec.n() - spec.k())) as f64
            }
        })
        .collect()
}

/// `rounding_exact` when every residual sits at rounding, otherwise
/// `second_order` or `off_order` from the observed slope.
pub fn order_status(sweep: &ResidualSweep<f64>) -> &'static str {
    if sweep.at_rounding {
        "rounding_exact"
    } else if sweep.order.is_some_and(|p| (p - 2.0).abs() <= ORDER_BAND) {
        "second_order"
    } else {
        "off_order"
    }
}

fn sweep_json(field: &str, sweep: &ResidualSweep<f64>) -> serde_json::Value {
    json!({
        "field": field,
        "steps": sweep.samples.iter().map(|s| s.step).collect::<Vec<_>>(),
        "residuals": sweep.samples.iter().map(|s| s.residual).collect::<Vec<_>>(),
        "order": sweep.order,
        "at_rounding": sweep.at_rounding,
        "order_status": order_status(sweep),
    })
}

fn parse_ls(params: &Params) -> anyhow::Result<Vec<HalfInteger>> {
    match &params.l {
        Some(ls) => ls.iter().map(|s| s.parse::<HalfInteger>().map_err(anyhow::Error::from)).collect(),
        None => Ok(vec![HalfInteger::from_twice(3)?, HalfInteger::from_twice(2)?]),
    }
}

/// Finite-difference checks of the conjugation identities behind the
/// ground-state substitution.
pub fn run(params: &Params) -> anyhow::Result<Outcome> {
    let specs = specs(params, &DEFAULT_SPECS)?;
    let ls = parse_ls(params)?;
    let steps = dyadic_steps(H0, STEPS);
    let fields = smooth_test_fields::<f64>();
    let mut table = Table::new("residuals", &["identity", "n", "k", "l", "field", "step", "residual"]);
    let mut summary = Vec::new();
    let mut passed = true;

    let mut weighted = Vec::new();
    let mut ns: Vec<usize> = specs.iter().map(|s| s.n()).collect();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        let x = probe_point(ConeSpec::new(n, 1)?);
        for &l in &ls {
            let lf = l.to_real::<f64>();
            let mut sweeps = Vec::new();
            let mut ok = true;
            for field in &fields {
                let sweep = residual_sweep(&steps, |h| weighted_conjugation_residual(&field.f, lf, &x, h))
                    .with_context(|| format!("weighted identity, n = {n}, l = {l}, field {}", field.name))?;
                ok &= order_status(&sweep) != "off_order";
                for s in &sweep.samples {
                    table.push(vec![
                        "weighted".into(),
                        n.to_string(),
                        "1".into(),
                        l.to_string(),
                        field.name.into(),
                        num(s.step),
                        num(s.residual),
                    ]);
                }
                sweeps.push(sweep_json(field.name, &sweep));
            }
            passed &= ok;
            summary.push(format!("weighted identity n = {n}, l = {l}: {}", if ok { "ok" } else { "off order" }));
            weighted.push(json!({ "n": n, "l": l.to_string(), "point": x, "passed": ok, "sweeps": sweeps }));
        }
    }

    let mut monomial = Vec::new();
    let mut harmonicity = Vec::new();
    for &spec in &specs {
        let x = probe_point(spec);
        let mut sweeps = Vec::new();
        let mut ok = true;
        for field in &fields {
            let sweep = residual_sweep(&steps, |h| monomial_conjugation_residual(&field.f, spec, &x, h))
                .with_context(|| format!("monomial identity for {spec}, field {}", field.name))?;
            ok &= order_status(&sweep) != "off_order";
            for s in &sweep.samples {
                table.push(vec![
                    "monomial".into(),
                    spec.n().to_string(),
                    spec.k().to_string(),
                    String::new(),
                    field.name.into(),
                    num(s.step),
                    num(s.residual),
                ]);
            }
            sweeps.push(sweep_json(field.name, &sweep));
        }
        let h = orthant_monomial_harmonicity(spec, &x, HARMONICITY_STEP)?;
        let harmonic = h.residual <= rounding_floor(HARMONICITY_STEP);
        passed &= ok && harmonic;
        summary.push(format!(
            "monomial identity {}: {}; product monomial Laplacian {:.1e}",
            label(spec),
            if ok { "ok" } else { "off order" },
            h.residual
        ));
        monomial.push(json!({ "spec": spec, "point": x, "passed": ok, "sweeps": sweeps }));
        harmonicity.push(json!({ "spec": spec, "step": HARMONICITY_STEP, "residual": h.residual, "passed": harmonic }));
    }

    let mut coherence = Vec::new();
    let mut coherent = true;
    for &n in &ns {
        let spec = ConeSpec::new(n, 1)?;
        let x = probe_point(spec);
        for field in &fields {
            for &h in &steps {
                let a = weighted_conjugation_residual(&field.f, 1.0, &x, h)?;
                let b = monomial_conjugation_residual(&field.f, spec, &x, h)?;
                let same = a.residual.to_bits() == b.residual.to_bits();
                coherent &= same;
                coherence.push(json!({ "n": n, "field": field.name, "step": h, "bit_match": same }));
            }
        }
    }
    passed &= coherent;
    summary.push(format!("weighted l = 1 against monomial k = 1: bit match {coherent}"));

    Ok(Outcome {
        command: "identities".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("k", json!(params.k)),
            ("l", json!(ls.iter().map(|l| l.to_string()).collect::<Vec<_>>())),
            ("h0", json!(H0)),
            ("steps", json!(STEPS)),
        ]),
        passed,
        payload: json!({
            "weighted": weighted,
            "monomial": monomial,
            "harmonicity": harmonicity,
            "coherence": { "bit_match": coherent, "samples": coherence },
        }),
        tables: vec![table],
        summary,
        ..Default::default()
    })
}
