use anyhow::{bail, Context};
use hardylab::cone::angular_eigenfunction;
use hardylab::functionals::{
    check_ft, check_hardy, check_radial_ft, check_weighted_hardy, FunctionalReport, Verdict, FT_MAX_DEPTH,
};
use hardylab::trial::{
    minimizing_profile, product_bump_trial, random_trial, separable_trial, sharpness_inner_cut, RadialProfile,
    TrialFunction,
};
use hardylab::{ConeSpec, FunctionalReport64, HalfInteger};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{label, num, radius, rule_summary, seed, specs, tolerance, trial_rule, trial_seed, Outcome, DEFAULT_SPECS};
use crate::config::Params;
use crate::parameter_map;
use crate::record::Table;

/// Monomials drawn into each random trial's polynomial factor.
pub const RANDOM_BASIS: usize = 10;

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn counts(reports: &[FunctionalReport64]) -> (usize, usize, usize) {
    let count = |v| reports.iter().filter(|r| r.verdict == v).count();
    (count(Verdict::Holds), count(Verdict::Inconclusive), count(Verdict::Violated))
}

/// Hardy inequality over seeded random trials for each spec.
pub fn verify_hardy(params: &Params) -> anyhow::Result<Outcome> {
    let specs = specs(params, &DEFAULT_SPECS)?;
    let r = radius(params)?;
    let seed = seed(params);
    let trials = params.trials.unwrap_or(if params.quick { 50 } else { 200 });
    let tol = tolerance(params, 1e-6)?;
    let mut table = Table::new("hardy", &["n", "k", "seed", "quotient", "margin", "tolerance", "verdict"]);
    let mut per_spec = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    let mut preamble = Vec::new();
    for spec in specs {
        preamble.push((format!("rule {}", label(spec)), rule_summary(spec, seed)));
        let reports = (0..trials)
            .into_par_iter()
            .map(|i| {
                let s = trial_seed(seed, spec, i);
                let u = random_trial(spec, r, RANDOM_BASIS, s)?;
                let rule = trial_rule(spec, u.support_radius(), seed)?;
                Ok((s, check_hardy(spec, &u, &rule, tol)?))
            })
            .collect::<anyhow::Result<Vec<_>>>()
            .with_context(|| format!("Hardy checks for {spec}"))?;
        let (seeds, reports): (Vec<u64>, Vec<FunctionalReport64>) = reports.into_iter().unzip();
        let (holds, inconclusive, violated) = counts(&reports);
        passed &= violated == 0;
        let relative = |rep: &FunctionalReport64| rep.margin / (rep.constant_used * rep.hardy);
        let worst = reports
            .iter()
            .min_by(|a, b| relative(a).total_cmp(&relative(b)))
            .expect("at least one trial");
        let min_quotient = reports.iter().filter_map(|r| r.quotient()).fold(f64::INFINITY, f64::min);
        let mut rows = Vec::with_capacity(trials);
        for (s, rep) in seeds.iter().zip(&reports) {
            let q = rep.quotient().unwrap_or(f64::NAN);
            table.push(vec![
                spec.n().to_string(),
                spec.k().to_string(),
                s.to_string(),
                num(q),
                num(rep.margin),
                num(rep.tolerance),
                verdict_name(rep.verdict).into(),
            ]);
            rows.push(json!({
                "seed": s,
                "quotient": q,
                "margin": rep.margin,
                "tolerance": rep.tolerance,
                "verdict": rep.verdict,
            }));
        }
        summary.push(format!(
            "{}: {trials} trials, {violated} violated, {inconclusive} inconclusive, min quotient {min_quotient:.6} vs C = {}",
            label(spec),
            worst.constant_used
        ));
        per_spec.push(json!({
            "spec": spec,
            "constant": worst.constant_used,
            "rule": rule_summary(spec, seed),
            "trials": trials,
            "holds": holds,
            "inconclusive": inconclusive,
            "violated": violated,
            "min_quotient": min_quotient,
            "min_relative_margin": relative(worst),
            "worst": worst,
            "rows": rows,
        }));
    }
    Ok(Outcome {
        command: "verify-hardy".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("k", json!(params.k)),
            ("R", json!(r)),
            ("trials", json!(trials)),
            ("seed", json!(seed)),
            ("tol", json!(tol)),
            ("basis_size", json!(RANDOM_BASIS)),
        ]),
        passed,
        payload: json!({ "specs": per_spec }),
        tables: vec![table],
        preamble,
        summary,
        ..Default::default()
    })
}

fn parse_ls(params: &Params) -> anyhow::Result<Vec<HalfInteger>> {
    let raw: Vec<String> = params
        .l
        .clone()
        .unwrap_or_else(|| ["1/2", "1", "3/2", "2"].iter().map(|s| s.to_string()).collect());
    raw.iter()
        .map(|s| s.parse::<HalfInteger>().map_err(anyhow::Error::from))
        .collect()
}

/// Weighted half-space inequality for each `(n, l)`, with the `l = 1`
/// reduction compared bit for bit against the plain half-space check.
pub fn verify_weighted(params: &Params) -> anyhow::Result<Outcome> {
    let ns: Vec<usize> = params.n.map_or_else(|| vec![3, 4], |n| vec![n]);
    if params.k.is_some_and(|k| k != 1) {
        bail!("the weighted inequality lives on the half-space; --k must be 1 if given");
    }
    let ls = parse_ls(params)?;
    let r = radius(params)?;
    let seed = seed(params);
    let trials = params.trials.unwrap_or(if params.quick { 10 } else { 50 });
    let tol = tolerance(params, 1e-6)?;
    let mut table = Table::new("weighted", &["n", "l", "seed", "margin", "tolerance", "verdict"]);
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    let mut preamble = Vec::new();
    for n in ns {
        let spec = ConeSpec::new(n, 1)?;
        preamble.push((format!("rule {}", label(spec)), rule_summary(spec, seed)));
        let us = (0..trials)
            .into_par_iter()
            .map(|i| {
                let s = trial_seed(seed, spec, i);
                let u = random_trial::<f64>(spec, r, RANDOM_BASIS, s)?;
                let rule = trial_rule(spec, u.support_radius(), seed)?;
                Ok((s, u, rule))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        for &l in &ls {
            let reports = us
                .par_iter()
                .map(|(_, u, rule)| check_weighted_hardy(n, l, u, rule, tol))
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("weighted checks at n = {n}, l = {l}"))?;
            let (holds, inconclusive, violated) = counts(&reports);
            passed &= violated == 0;
            let bit_match = if l.twice() == 2 {
                let plain = us
                    .par_iter()
                    .map(|(_, u, rule)| check_hardy(spec, u, rule, tol))
                    .collect::<Result<Vec<_>, _>>()?;
                let ok = plain
                    .iter()
                    .zip(&reports)
                    .all(|(a, b)| a.margin.to_bits() == b.margin.to_bits());
                passed &= ok;
                Some(ok)
            } else {
                None
            };
            for ((s, _, _), rep) in us.iter().zip(&reports) {
                table.push(vec![
                    n.to_string(),
                    l.to_string(),
                    s.to_string(),
                    num(rep.margin),
                    num(rep.tolerance),
                    verdict_name(rep.verdict).into(),
                ]);
            }
            let min_relative = reports
                .iter()
                .map(|rep| rep.margin / (rep.constant_used * rep.hardy))
                .fold(f64::INFINITY, f64::min);
            summary.push(format!(
                "n = {n}, l = {l}: {trials} trials, {violated} violated{}",
                bit_match.map_or(String::new(), |b| format!(", reduction bit-match {b}"))
            ));
            entries.push(json!({
                "n": n,
                "l": l.to_string(),
                "constant": reports[0].constant_used,
                "coefficient": l.singular_coefficient().to_string(),
                "rule": rule_summary(spec, seed),
                "trials": trials,
                "holds": holds,
                "inconclusive": inconclusive,
                "violated": violated,
                "min_relative_margin": min_relative,
                "reduction_bit_match": bit_match,
                "margins": reports.iter().map(|r| r.margin).collect::<Vec<_>>(),
            }));
        }
    }
    Ok(Outcome {
        command: "verify-weighted".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("l", json!(ls.iter().map(|l| l.to_string()).collect::<Vec<_>>())),
            ("R", json!(r)),
            ("trials", json!(trials)),
            ("seed", json!(seed)),
            ("tol", json!(tol)),
            ("basis_size", json!(RANDOM_BASIS)),
        ]),
        passed,
        payload: json!({ "checks": entries }),
        tables: vec![table],
        preamble,
        summary,
        ..Default::default()
    })
}

/// Structural properties of one remainder-series report.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SeriesShape {
    pub consistent: bool,
    pub margins_monotone: bool,
    pub terms_positive: bool,
    pub terms_monotone: bool,
}

impl SeriesShape {
    pub fn of(rep: &FunctionalReport<f64>) -> Self {
        let margins = rep.margins_by_depth.as_deref().unwrap_or(&[]);
        let terms = rep.remainder_terms.as_deref().unwrap_or(&[]);
        Self {
            consistent: rep.verdict.is_consistent(),
            margins_monotone: margins.windows(2).all(|w| w[1] <= w[0]),
            terms_positive: terms.iter().all(|t| *t > 0.0),
            terms_monotone: terms.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    pub fn ok(&self) -> bool {
        self.consistent && self.margins_monotone && self.terms_positive && self.terms_monotone
    }
}

/// Radial profiles used for the one-dimensional base inequality.
pub fn radial_profiles(n: usize) -> anyhow::Result<Vec<RadialProfile<f64>>> {
    let spec = ConeSpec::new(n, 1)?;
    Ok(vec![
        RadialProfile::quadratic(1.0)?,
        RadialProfile::power_bump(1, 1.0)?,
        RadialProfile::power_bump(2, 1.0)?,
        RadialProfile::power_bump(3, 1.0)?,
        RadialProfile::smoothstep(1.0)?,
        minimizing_profile(spec, 0.1, sharpness_inner_cut(n, 0.1))?,
    ])
}

fn describe(f: &RadialProfile<f64>) -> String {
    let params: Vec<String> = f.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
    if params.is_empty() {
        f.label().to_string()
    } else {
        format!("{}[{}]", f.label(), params.join(","))
    }
}

/// Iterated-logarithm improvement on `B_R` for the trial suite, plus the
/// radial base inequality for the profile suite.
pub fn verify_ft(params: &Params) -> anyhow::Result<Outcome> {
    let specs = specs(params, &DEFAULT_SPECS)?;
    let r = radius(params)?;
    let seed = seed(params);
    let trials = params.trials.unwrap_or(if params.quick { 5 } else { 20 });
    let depth = params.depth.unwrap_or(if params.quick { 4 } else { 6 });
    if !(1..=FT_MAX_DEPTH).contains(&depth) {
        bail!("--depth must lie in 1..={FT_MAX_DEPTH}, got {depth}");
    }
    let tol = tolerance(params, 1e-6)?;
    let mut table = Table::new("remainder", &["n", "k", "trial", "depth", "margin", "term"]);
    let mut per_spec = Vec::new();
    let mut summary = Vec::new();
    let mut passed = true;
    let mut preamble = Vec::new();
    for spec in &specs {
        let spec = *spec;
        preamble.push((format!("rule {}", label(spec)), rule_summary(spec, seed)));
        let mut suite: Vec<(String, Box<dyn TrialFunction<f64>>)> = Vec::new();
        suite.push(("product_bump".into(), Box::new(product_bump_trial(spec, r)?)));
        let phi = angular_eigenfunction::<f64>(spec, 1e-12)?;
        suite.push((
            "separable_quadratic".into(),
            Box::new(separable_trial(phi, RadialProfile::quadratic(r)?)),
        ));
        for i in 0..trials {
            let s = trial_seed(seed, spec, i);
            suite.push((format!("random:{s}"), Box::new(random_trial(spec, r, RANDOM_BASIS, s)?)));
        }
        let reports = suite
            .par_iter()
            .map(|(_, u)| {
                let rule = trial_rule(spec, u.support_radius(), seed)?;
                Ok(check_ft(spec, u.as_ref(), &rule, r, depth, tol)?)
            })
            .collect::<anyhow::Result<Vec<_>>>()
            .with_context(|| format!("remainder checks for {spec}"))?;
        let mut rows = Vec::new();
        let mut bad = 0;
        for ((name, _), rep) in suite.iter().zip(&reports) {
            let shape = SeriesShape::of(rep);
            if !shape.ok() {
                bad += 1;
            }
            let margins = rep.margins_by_depth.clone().unwrap_or_default();
            let terms = rep.remainder_terms.clone().unwrap_or_default();
            for (m, (mg, t)) in margins.iter().zip(&terms).enumerate() {
                table.push(vec![
                    spec.n().to_string(),
                    spec.k().to_string(),
                    name.clone(),
                    (m + 1).to_string(),
                    num(*mg),
                    num(*t),
                ]);
            }
            rows.push(json!({
                "trial": name,
                "verdict": rep.verdict,
                "shape": shape,
                "margins_by_depth": margins,
                "terms": terms,
                "tolerance": rep.tolerance,
            }));
        }
        passed &= bad == 0;
        summary.push(format!("{}: {} trials at depth {depth}, {bad} failing", label(spec), suite.len()));
        per_spec.push(json!({ "spec": spec, "rule": rule_summary(spec, seed), "trials": rows, "failing": bad }));
    }
    let mut ns: Vec<usize> = specs.iter().map(|s| s.n()).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut radial = Vec::new();
    for n in ns {
        for f in radial_profiles(n)? {
            let rep = check_radial_ft(n, &f, depth, tol)?;
            let shape = SeriesShape::of(&rep);
            passed &= shape.ok();
            radial.push(json!({
                "n": n,
                "profile": describe(&f),
                "verdict": rep.verdict,
                "shape": shape,
                "margins_by_depth": rep.margins_by_depth,
                "terms": rep.remainder_terms,
            }));
        }
    }
    let radial_bad = radial.iter().filter(|v| v["shape"].as_object().is_some_and(|s| s.values().any(|b| b == &Value::Bool(false)))).count();
    summary.push(format!("radial base inequality: {} profiles, {radial_bad} failing", radial.len()));
    Ok(Outcome {
        command: "verify-ft".into(),
        parameters: parameter_map(&[
            ("n", json!(params.n)),
            ("k", json!(params.k)),
            ("R", json!(r)),
            ("trials", json!(trials)),
            ("seed", json!(seed)),
            ("depth", json!(depth)),
            ("tol", json!(tol)),
        ]),
        passed,
        payload: json!({ "specs": per_spec, "radial": radial }),
        tables: vec![table],
        preamble,
        summary,
        ..Default::default()
    })
}

