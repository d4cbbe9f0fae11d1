use hardylab::cone::{weighted_halfspace_constant, SharpConstants};
use hardylab::{ConeSpec, HalfInteger, Rational};
use serde_json::json;

use super::{label, Outcome};
use crate::config::Params;
use crate::parameter_map;
use crate::record::Table;

/// `(n-2+2k)²/4 = (n-2)²/4 + k(n+k-2)` in exact arithmetic, for one spec or
/// for every `3 ≤ n ≤ 10, 1 ≤ k ≤ n`.
pub fn run(params: &Params) -> anyhow::Result<Outcome> {
    let specs: Vec<ConeSpec> = match (params.n, params.k) {
        (None, None) => (3..=10)
            .flat_map(|n| (1..=n).map(move |k| ConeSpec::new(n, k)))
            .collect::<Result<_, _>>()?,
        _ => super::specs(params, &[])?,
    };
    let mut table = Table::new("constants", &["n", "k", "hardy", "whole_space", "lambda1", "identity_holds"]);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut all_hold = true;
    for spec in &specs {
        let c = SharpConstants::new(*spec);
        let hardy = c.hardy();
        let whole = c.whole_space();
        let lambda1 = c.lambda1();
        let holds = hardy == whole + Rational::from_integer(lambda1);
        all_hold &= holds;
        table.push(vec![
            spec.n().to_string(),
            spec.k().to_string(),
            hardy.to_string(),
            whole.to_string(),
            lambda1.to_string(),
            holds.to_string(),
        ]);
        rows.push(json!({
            "n": spec.n(),
            "k": spec.k(),
            "hardy": hardy.to_string(),
            "hardy_value": *hardy.numer() as f64 / *hardy.denom() as f64,
            "whole_space": whole.to_string(),
            "lambda1": lambda1,
            "identity_holds": holds,
        }));
        if specs.len() <= 5 {
            summary.push(format!("{}: hardy constant {hardy}, lambda1 = {lambda1}", label(*spec)));
        }
    }
    if specs.len() > 5 {
        summary.push(format!("{} specs, splitting identity holds for all: {all_hold}", specs.len()));
    }
    let mut weighted = Vec::new();
    if let Some(ls) = &params.l {
        let ns: Vec<usize> = params.n.map_or_else(|| vec![3, 4], |n| vec![n]);
        for s in ls {
            let l: HalfInteger = s.parse()?;
            for &n in &ns {
                let c = weighted_halfspace_constant(n, l)?;
                weighted.push(json!({
                    "n": n,
                    "l": l.to_string(),
                    "constant": c.to_string(),
                    "coefficient": l.singular_coefficient().to_string(),
                }));
            }
        }
    }
    Ok(Outcome {
        command: "constants".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("k", json!(params.k)),
            ("l", json!(params.l)),
        ]),
        passed: all_hold,
        payload: json!({ "rows": rows, "weighted_halfspace": weighted, "all_identities_hold": all_hold }),
        tables: vec![table],
        summary,
        ..Default::default()
    })
}
