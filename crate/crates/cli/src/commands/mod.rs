//! One module per subcommand. Each returns an [`Outcome`]; the driver turns
//! outcomes into records.

pub mod constants;
pub mod decompose;
pub mod eigen;
pub mod identities;
pub mod inequalities;
pub mod sharpness;

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use hardylab::quadrature::{support_graded_rule, SamplingMode};
use hardylab::{ConeSpec, QuadratureRule64};
use serde_json::Value;

use crate::config::Params;
use crate::record::Table;

/// Spec list used when `--n/--k` are not given.
pub const DEFAULT_SPECS: [(usize, usize); 5] = [(3, 1), (3, 2), (3, 3), (4, 2), (5, 3)];
pub const DEFAULT_SEED: u64 = 1;

/// Result of one check, before it is stamped into a record.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub passed: bool,
    pub payload: Value,
    pub tables: Vec<Table>,
    /// Extra `# key: value` lines for CSV output.
    pub preamble: Vec<(String, String)>,
    /// Human-readable lines for stderr.
    pub summary: Vec<String>,
}

pub type CommandFn = fn(&Params) -> anyhow::Result<Outcome>;

/// The `all` battery: each step with the parameters it runs under.
pub fn battery(params: &Params) -> Vec<(CommandFn, Params)> {
    let base = Params {
        n: None,
        k: None,
        out: None,
        ..params.clone()
    };
    vec![
        (constants::run as CommandFn, base.clone()),
        (identities::run, base.clone()),
        (inequalities::verify_hardy, base.clone()),
        (inequalities::verify_weighted, base.clone()),
        (inequalities::verify_ft, base.clone()),
        (sharpness::run, base.clone()),
        (eigen::run, base.clone()),
        (eigen::run_general, base.clone()),
        (decompose::run, base),
    ]
}

pub fn specs(params: &Params, default: &[(usize, usize)]) -> anyhow::Result<Vec<ConeSpec>> {
    let pairs: Vec<(usize, usize)> = match (params.n, params.k) {
        (Some(n), Some(k)) => vec![(n, k)],
        (Some(n), None) => (1..=n).map(|k| (n, k)).collect(),
        (None, Some(k)) => vec![(3.max(k), k)],
        (None, None) => default.to_vec(),
    };
    pairs
        .into_iter()
        .map(|(n, k)| ConeSpec::new(n, k).map_err(anyhow::Error::from))
        .collect()
}

pub fn radius(params: &Params) -> anyhow::Result<f64> {
    let r = params.radius.unwrap_or(1.0);
    if !(r > 0.0 && r.is_finite()) {
        bail!("--R must be positive, got {r}");
    }
    Ok(r)
}

pub fn seed(params: &Params) -> u64 {
    params.seed.unwrap_or(DEFAULT_SEED)
}

fn mix(seed: u64, spec: ConeSpec, salt: u64) -> u64 {
    let tag = ((spec.n() as u64) << 8 | spec.k() as u64) << 40;
    (seed ^ tag).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17) ^ salt
}

/// Seed of trial `i` for `spec`.
pub fn trial_seed(seed: u64, spec: ConeSpec, i: usize) -> u64 {
    mix(seed, spec, 0).wrapping_add(i as u64)
}

pub fn rule_seed(seed: u64, spec: ConeSpec) -> u64 {
    mix(seed, spec, 0xA5A5_0000_5A5A)
}

/// Gauss points per radial panel: ~12 digits on the deterministic path,
/// ~10 on the sampled one, where angular sampling error dominates anyway.
pub const DETERMINISTIC_PER_PANEL: usize = 12;
pub const STOCHASTIC_PER_PANEL: usize = 8;
pub const ANGULAR_ORDER: usize = 16;
pub const ANGULAR_SAMPLES: usize = 1024;

/// Rule over `B_support ∩ cone`, graded toward the origin and the support
/// edge. Product Gauss at `n = 3`, seeded sampling otherwise.
pub fn trial_rule(spec: ConeSpec, support: f64, seed: u64) -> anyhow::Result<QuadratureRule64> {
    let rule = if spec.n() == 3 {
        support_graded_rule(spec, support, DETERMINISTIC_PER_PANEL, ANGULAR_ORDER, SamplingMode::Deterministic)
    } else {
        support_graded_rule(
            spec,
            support,
            STOCHASTIC_PER_PANEL,
            ANGULAR_SAMPLES,
            SamplingMode::Stochastic {
                seed: rule_seed(seed, spec),
            },
        )
    };
    rule.with_context(|| format!("building the quadrature rule for {spec}"))
}

/// One-line description of the rules [`trial_rule`] builds for `spec`.
pub fn rule_summary(spec: ConeSpec, seed: u64) -> String {
    if spec.n() == 3 {
        format!(
            "support-graded cone-ball rule, {DETERMINISTIC_PER_PANEL} points per radial panel, angular Gauss order {ANGULAR_ORDER}"
        )
    } else {
        format!(
            "support-graded cone-ball rule, {STOCHASTIC_PER_PANEL} points per radial panel, {ANGULAR_SAMPLES} sampled directions, seed {}",
            rule_seed(seed, spec)
        )
    }
}

pub fn label(spec: ConeSpec) -> String {
    format!("({},{})", spec.n(), spec.k())
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn tolerance(params: &Params, default: f64) -> anyhow::Result<f64> {
    let t = params.tol.unwrap_or(default);
    if !(t >= 0.0 && t.is_finite()) {
        bail!("--tol must be a nonnegative number, got {t}");
    }
    Ok(t)
}

pub fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}
