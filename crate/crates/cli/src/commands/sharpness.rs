use anyhow::{bail, Context};
use hardylab::functionals::sharpness_sweep;
use serde_json::json;

use super::{label, num, specs, tolerance, to_value, Outcome};
use crate::config::Params;
use crate::parameter_map;
use crate::record::Table;

pub const DEFAULT_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Minimizing family `|x|^{-a+ε}` (cut and normalized), quotient against
/// `ε`, extrapolated to `ε = 0`.
pub fn run(params: &Params) -> anyhow::Result<Outcome> {
    let default: &[(usize, usize)] = if params.quick { &[(3, 1)] } else { &[(3, 1), (4, 2)] };
    let specs = specs(params, default)?;
    let eps = params.eps_list.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec());
    if eps.len() < 2 {
        bail!("--eps-list needs at least two values");
    }
    let tol = tolerance(params, 1e-3)?;
    let mut table = Table::new("sharpness", &["n", "k", "epsilon", "quotient", "margin"]);
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    for spec in specs {
        let rep = sharpness_sweep(spec, &eps, tol).with_context(|| format!("sharpness sweep for {spec}"))?;
        for row in &rep.rows {
            table.push(vec![
                spec.n().to_string(),
                spec.k().to_string(),
                num(row.epsilon),
                num(row.quotient),
                num(row.margin),
            ]);
        }
        passed &= rep.passed;
        summary.push(format!(
            "{}: extrapolated {:.8} vs C = {}, relative error {:.2e}",
            label(spec),
            rep.extrapolated,
            rep.constant,
            rep.relative_error
        ));
        reports.push(to_value(&rep));
    }
    Ok(Outcome {
        command: "sharpness".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("k", json!(params.k)),
            ("eps_list", json!(eps)),
            ("tol", json!(tol)),
        ]),
        passed,
        payload: json!({ "sweeps": reports }),
        tables: vec![table],
        summary,
        ..Default::default()
    })
}
