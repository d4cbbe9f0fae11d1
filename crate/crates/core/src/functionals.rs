//! Integral functionals of trial functions and the inequality checks built
//! from them: the cone Hardy inequality, the weighted half-space inequality,
//! and the iterated-logarithm improvement on balls.

use serde::{Deserialize, Serialize};

use crate::cone::{
    hardy_constant, iterated_log_weights, rational_to_real, weighted_halfspace_constant, ConeSpec, HalfInteger,
};
use crate::convergence::extrapolate_to_zero;
use crate::error::{domain, Error, Result};
use crate::quadrature::{
    composite_radial_rule, integrate_many, DomainTag, MultiIntegral, QuadratureRule, RuleDescriptor,
};
use crate::scalar::{dot, from_usize, lit, to_f64, KahanSum, Real};
use crate::trial::{minimizing_profile, sharpness_inner_cut, RadialProfile, TrialDescriptor, TrialFunction};
use crate::Rational;

/// Deepest remainder series supported by [`check_ft`].
pub const FT_MAX_DEPTH: usize = 12;

/// Remainder depth used when none is given.
pub const FT_DEFAULT_DEPTH: usize = 6;

/// Points per Gauss–Legendre panel in the 1D reduced integrals.
const RADIAL_PANEL_POINTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Holds or inconclusive: the evaluated margin is within tolerance.
    pub fn is_consistent(self) -> bool {
        self != Verdict::Violated
    }
}

/// Evaluated sides of one inequality and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FunctionalReport<T: Real> {
    pub energy: T,
    pub hardy: T,
    pub weighted: Option<T>,
    pub remainder_terms: Option<Vec<T>>,
    pub constant_used: T,
    /// Left side minus right side.
    pub margin: T,
    pub tolerance: T,
    /// Estimated absolute error of `margin`: the standard error on sampled
    /// rules, a rounding bound on deterministic ones.
    pub quadrature_error: T,
    pub verdict: Verdict,
    /// Margins after subtracting the first `i` remainder terms.
    pub margins_by_depth: Option<Vec<T>>,
    pub trial: Option<TrialDescriptor>,
    pub rule: Option<RuleDescriptor>,
}

impl<T: Real> FunctionalReport<T> {
    /// `energy / hardy`, or `None` when the Hardy term is zero.
    pub fn quotient(&self) -> Option<T> {
        (self.hardy > T::zero()).then(|| self.energy / self.hardy)
    }
}

/// `max(1e-8, 1e3 · error)`.
pub fn default_tolerance<T: Real>(error: T) -> T {
    lit::<T>(1e-8).max(lit::<T>(1e3) * error)
}

/// Effective absolute tolerance: `tol` relative to `scale`, raised to three
/// standard errors on sampled rules.
fn effective_tolerance<T: Real>(tol: T, scale: T, sigma: Option<T>) -> T {
    let base = tol * scale.abs();
    match sigma {
        Some(s) => base.max(lit::<T>(3.0) * s),
        None => base,
    }
}

fn verdict<T: Real>(margin: T, tolerance: T, error: T) -> Verdict {
    if margin < -tolerance {
        Verdict::Violated
    } else if error > T::zero() && margin.abs() < error {
        Verdict::Inconclusive
    } else {
        Verdict::Holds
    }
}

fn rounding_bound<T: Real>(terms: &[T], nodes: usize) -> T {
    let mag = terms.iter().fold(T::zero(), |a, t| a + t.abs());
    lit::<T>(4.0) * T::epsilon() * mag * from_usize::<T>(nodes).sqrt().max(T::one())
}

/// Rejects rules that do not cover the support of `u`, or that integrate
/// over the wrong region.
fn check_rule<T: Real>(u: &dyn TrialFunction<T>, rule: &QuadratureRule<T>) -> Result<()> {
    let spec = u.spec();
    if rule.dim() != spec.n() {
        return domain(format!("rule dimension {} does not match n = {}", rule.dim(), spec.n()));
    }
    let r_max = match rule.domain() {
        DomainTag::ConeBall { n, k, r_max } if n == spec.n() && k == spec.k() => r_max,
        DomainTag::Ball { n, r_max } if n == spec.n() => r_max,
        other => {
            return domain(format!("rule over {other:?} cannot integrate a trial on {spec}"));
        }
    };
    let support = to_f64(u.support_radius());
    if r_max < support * (1.0 - 1e-12) {
        return domain(format!("rule radius {r_max} does not cover the support radius {support}"));
    }
    Ok(())
}

fn grad_sq<T: Real>(u: &dyn TrialFunction<T>, x: &[T], buf: &mut [T]) -> T {
    u.gradient(x, buf);
    dot(buf, buf)
}

fn energy_and_hardy<T: Real>(u: &dyn TrialFunction<T>, rule: &QuadratureRule<T>) -> Result<MultiIntegral<T, 2>> {
    check_rule(u, rule)?;
    let n = rule.dim();
    integrate_many(rule, |x| {
        let mut g = vec![T::zero(); n];
        let v = u.value(x);
        [grad_sq(u, x, &mut g), v * v / dot(x, x)]
    })
}

/// `∫|∇u|²`.
pub fn dirichlet_energy<T: Real>(u: &dyn TrialFunction<T>, rule: &QuadratureRule<T>) -> Result<T> {
    Ok(energy_and_hardy(u, rule)?.values[0])
}

/// `∫u²/|x|²`.
pub fn hardy_term<T: Real>(u: &dyn TrialFunction<T>, rule: &QuadratureRule<T>) -> Result<T> {
    Ok(energy_and_hardy(u, rule)?.values[1])
}

/// `∫u²/x_j²` for the zero-based `axis`. A non-finite integrand (u not
/// vanishing on `x_j = 0`) surfaces as an evaluation error.
pub fn singular_weight_term<T: Real>(u: &dyn TrialFunction<T>, rule: &QuadratureRule<T>, axis: usize) -> Result<T> {
    check_rule(u, rule)?;
    if axis >= rule.dim() {
        return domain(format!("axis {axis} out of range for n = {}", rule.dim()));
    }
    Ok(integrate_many(rule, |x| {
        let v = u.value(x);
        [v * v / (x[axis] * x[axis])]
    })?
    .values[0])
}

fn check_depth(m: usize) -> Result<()> {
    if m == 0 || m > FT_MAX_DEPTH {
        return domain(format!("remainder depth must lie in 1..={FT_MAX_DEPTH}, got {m}"));
    }
    Ok(())
}

fn check_inside_ball<T: Real>(rule: &QuadratureRule<T>, radius: T) -> Result<()> {
    let r2 = radius * radius;
    for (i, x) in rule.nodes().enumerate() {
        if dot(x, x) > r2 {
            return Err(Error::Domain(format!(
                "node {i} lies outside the ball of radius {radius}; remainder weights need |x| <= R"
            )));
        }
    }
    Ok(())
}

/// Energy, Hardy term and the `FT_MAX_DEPTH` remainder terms in one sweep.
fn ft_sweep<T: Real>(
    u: &dyn TrialFunction<T>,
    rule: &QuadratureRule<T>,
    radius: T,
) -> Result<MultiIntegral<T, { FT_MAX_DEPTH + 2 }>> {
    check_rule(u, rule)?;
    check_inside_ball(rule, radius)?;
    let n = rule.dim();
    let quarter = lit::<T>(0.25);
    integrate_many(rule, |x| {
        let mut out = [T::zero(); FT_MAX_DEPTH + 2];
        let mut g = vec![T::zero(); n];
        let r2 = dot(x, x);
        let v = u.value(x);
        let h = v * v / r2;
        out[0] = grad_sq(u, x, &mut g);
        out[1] = h;
        if h != T::zero() {
            let weights = iterated_log_weights(r2.sqrt() / radius, FT_MAX_DEPTH)
                .unwrap_or_else(|_| vec![T::nan(); FT_MAX_DEPTH]);
            for (o, w) in out[2..].iter_mut().zip(weights) {
                *o = quarter * h * w;
            }
        }
        out
    })
}

/// `term_i = (1/4)∫u²/|x|² · X_1²···X_i²(|x|/R)` for `i = 1..=m`.
pub fn ft_remainder_terms<T: Real>(
    u: &dyn TrialFunction<T>,
    rule: &QuadratureRule<T>,
    radius: T,
    m: usize,
) -> Result<Vec<T>> {
    check_depth(m)?;
    Ok(ft_sweep(u, rule, radius)?.values[2..2 + m].to_vec())
}

/// `∫|∇u|² / ∫u²/|x|²`.
pub fn rayleigh_quotient<T: Real>(u: &dyn TrialFunction<T>, rule: &QuadratureRule<T>) -> Result<T> {
    let ints = energy_and_hardy(u, rule)?;
    if !(ints.values[1] > T::zero()) {
        return Err(Error::Degenerate("Hardy term vanishes; the quotient is undefined".into()));
    }
    Ok(ints.values[0] / ints.values[1])
}

/// Standard error of the quotient on sampled rules.
pub fn rayleigh_quotient_error<T: Real>(u: &dyn TrialFunction<T>, rule: &QuadratureRule<T>) -> Result<Option<T>> {
    Ok(energy_and_hardy(u, rule)?.ratio_std_error(0, 1))
}

/// Checks `∫|∇u|² ≥ C ∫u²/|x|²` with `C = (n-2+2k)²/4`.
///
/// `tol` is relative to `C ∫u²/|x|²`; on sampled rules the tolerance is at
/// least three standard errors of the margin.
pub fn check_hardy<T: Real>(
    spec: ConeSpec,
    u: &dyn TrialFunction<T>,
    rule: &QuadratureRule<T>,
    tol: T,
) -> Result<FunctionalReport<T>> {
    if u.spec() != spec {
        return domain(format!("trial lives on {} but the check is for {spec}", u.spec()));
    }
    let c = rational_to_real::<T>(hardy_constant(spec));
    let ints = energy_and_hardy(u, rule)?;
    let [energy, hardy] = ints.values;
    let margin = energy - c * hardy;
    let sigma = ints.combination_std_error(&[T::one(), -c]);
    Ok(finish(FinishInput {
        energy,
        hardy,
        weighted: None,
        remainder: None,
        constant: c,
        margin,
        margins_by_depth: None,
        tol,
        sigma,
        scale_terms: &[energy, c * hardy],
        nodes: rule.len(),
        trial: u.descriptor(),
        rule: rule.descriptor(),
    }))
}

struct FinishInput<'a, T: Real> {
    energy: T,
    hardy: T,
    weighted: Option<T>,
    remainder: Option<Vec<T>>,
    constant: T,
    margin: T,
    margins_by_depth: Option<Vec<T>>,
    tol: T,
    sigma: Option<T>,
    scale_terms: &'a [T],
    nodes: usize,
    trial: TrialDescriptor,
    rule: RuleDescriptor,
}

fn finish<T: Real>(input: FinishInput<'_, T>) -> FunctionalReport<T> {
    let scale = input.constant * input.hardy;
    let tolerance = effective_tolerance(input.tol, scale, input.sigma);
    let error = input
        .sigma
        .unwrap_or_else(|| rounding_bound(input.scale_terms, input.nodes));
    FunctionalReport {
        energy: input.energy,
        hardy: input.hardy,
        weighted: input.weighted,
        remainder_terms: input.remainder,
        constant_used: input.constant,
        margin: input.margin,
        tolerance,
        quadrature_error: error,
        verdict: verdict(input.margin, tolerance, error),
        margins_by_depth: input.margins_by_depth,
        trial: Some(input.trial),
        rule: Some(input.rule),
    }
}

/// Checks `∫|∇u|² + l(l-1)∫u²/x_n² ≥ (n+2l-2)²/4 ∫u²/|x|²` for `u` on the
/// half-space `x_n > 0`. The coefficient `l(l-1)` is kept signed, so for
/// `l = 1/2` the weighted term is subtracted. At `l = 1` the coefficient is
/// exactly zero and the report's margin is bit-identical to [`check_hardy`].
pub fn check_weighted_hardy<T: Real>(
    n: usize,
    l: HalfInteger,
    u: &dyn TrialFunction<T>,
    rule: &QuadratureRule<T>,
    tol: T,
) -> Result<FunctionalReport<T>> {
    let spec = ConeSpec::new(n, 1)?;
    if u.spec() != spec {
        return domain(format!("weighted checks need a half-space trial on {spec}, got {}", u.spec()));
    }
    check_rule(u, rule)?;
    let c = rational_to_real::<T>(weighted_halfspace_constant(n, l)?);
    let coeff = rational_to_real::<T>(l.singular_coefficient());
    let axis = n - 1;
    let ints = integrate_many(rule, |x| {
        let mut g = vec![T::zero(); n];
        let v = u.value(x);
        [grad_sq(u, x, &mut g), v * v / dot(x, x), v * v / (x[axis] * x[axis])]
    })?;
    let [energy, hardy, weighted] = ints.values;
    let margin = energy + coeff * weighted - c * hardy;
    let sigma = ints.combination_std_error(&[T::one(), -c, coeff]);
    Ok(finish(FinishInput {
        energy,
        hardy,
        weighted: Some(weighted),
        remainder: None,
        constant: c,
        margin,
        margins_by_depth: None,
        tol,
        sigma,
        scale_terms: &[energy, coeff * weighted, c * hardy],
        nodes: rule.len(),
        trial: u.descriptor(),
        rule: rule.descriptor(),
    }))
}

/// Checks the iterated-logarithm improvement on `B_R`:
/// `∫|∇u|² - C∫u²/|x|² ≥ Σ_{i≤m} term_i`, recording the margin after each
/// truncation depth. The verdict is taken at depth `m`, the strongest.
pub fn check_ft<T: Real>(
    spec: ConeSpec,
    u: &dyn TrialFunction<T>,
    rule: &QuadratureRule<T>,
    radius: T,
    m: usize,
    tol: T,
) -> Result<FunctionalReport<T>> {
    check_depth(m)?;
    if u.spec() != spec {
        return domain(format!("trial lives on {} but the check is for {spec}", u.spec()));
    }
    if u.support_radius() > radius {
        return domain(format!(
            "trial support radius {} exceeds the ball radius {radius}",
            u.support_radius()
        ));
    }
    let c = rational_to_real::<T>(hardy_constant(spec));
    let ints = ft_sweep(u, rule, radius)?;
    let energy = ints.values[0];
    let hardy = ints.values[1];
    let terms = ints.values[2..2 + m].to_vec();
    let mut margins = Vec::with_capacity(m);
    let mut acc = KahanSum::new();
    acc.add(energy);
    acc.add(-c * hardy);
    for t in &terms {
        acc.add(-*t);
        margins.push(acc.total());
    }
    let margin = margins[m - 1];
    let mut coeffs = [T::zero(); FT_MAX_DEPTH + 2];
    coeffs[0] = T::one();
    coeffs[1] = -c;
    coeffs[2..2 + m].iter_mut().for_each(|v| *v = -T::one());
    let sigma = ints.combination_std_error(&coeffs);
    let mut scale_terms = vec![energy, c * hardy];
    scale_terms.extend(terms.iter().copied());
    Ok(finish(FinishInput {
        energy,
        hardy,
        weighted: None,
        remainder: Some(terms),
        constant: c,
        margin,
        margins_by_depth: Some(margins),
        tol,
        sigma,
        scale_terms: &scale_terms,
        nodes: rule.len(),
        trial: u.descriptor(),
        rule: rule.descriptor(),
    }))
}

/// The three 1D integrals of a radial profile in dimension `n`:
/// `∫f'² r^{n-1}`, `∫f² r^{n-3}` and the remainder terms
/// `(1/4)∫f² r^{n-3} X_1²···X_i²(r/R)` for `i = 1..=m` (empty when `m = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RadialIntegrals<T: Real> {
    pub gradient: T,
    pub hardy: T,
    pub remainder_terms: Vec<T>,
}

/// Evaluates [`RadialIntegrals`] on a composite Gauss–Legendre rule graded
/// toward the origin and split at the profile's breakpoints. Powers of `r`
/// are folded into `f` and `f'` before squaring so that near-singular
/// profiles stay in floating-point range.
pub fn radial_integrals<T: Real>(n: usize, f: &RadialProfile<T>, m: usize) -> Result<RadialIntegrals<T>> {
    if n < 3 {
        return domain(format!("radial reduction needs n >= 3, got {n}"));
    }
    if m > FT_MAX_DEPTH {
        return domain(format!("remainder depth must be <= {FT_MAX_DEPTH}, got {m}"));
    }
    let radius = f.radius();
    let rule = composite_radial_rule(
        f.inner_support(),
        radius,
        f.breakpoints(),
        RADIAL_PANEL_POINTS,
        lit::<T>(2.0),
    )?;
    let grad_power = (from_usize::<T>(n) - T::one()) / lit(2.0);
    let hardy_power = (from_usize::<T>(n) - lit(3.0)) / lit(2.0);
    let quarter = lit::<T>(0.25);
    let ints = integrate_many(&rule, |x| {
        let r = x[0];
        let mut out = [T::zero(); FT_MAX_DEPTH + 2];
        let g = f.f_prime(r) * r.powf(grad_power);
        let h = f.f(r) * r.powf(hardy_power);
        out[0] = g * g;
        out[1] = h * h;
        if m > 0 && out[1] != T::zero() {
            let weights = iterated_log_weights((r / radius).min(T::one()), m).unwrap_or_else(|_| vec![T::nan(); m]);
            for (o, w) in out[2..].iter_mut().zip(weights) {
                *o = quarter * h * h * w;
            }
        }
        out
    })?;
    Ok(RadialIntegrals {
        gradient: ints.values[0],
        hardy: ints.values[1],
        remainder_terms: ints.values[2..2 + m].to_vec(),
    })
}

/// `[∫(f'² + c f²/r²) r^{n-1} dr] / [∫f² r^{n-3} dr]`, the quotient of the
/// separable trial `f(|x|) Φ(x/|x|)` whose angular factor has eigenvalue `c`.
pub fn reduced_radial_quotient<T: Real>(spec: ConeSpec, f: &RadialProfile<T>, c: T) -> Result<T> {
    if !(c >= T::zero()) {
        return domain(format!("angular eigenvalue must be nonnegative, got {c}"));
    }
    let ints = radial_integrals(spec.n(), f, 0)?;
    if !(ints.hardy > T::zero()) {
        return Err(Error::Degenerate("profile has a null Hardy integral".into()));
    }
    Ok((ints.gradient + c * ints.hardy) / ints.hardy)
}

/// Radial base inequality: `∫f'² r^{n-1} ≥ (n-2)²/4 ∫f² r^{n-3} + Σ term_i`.
/// Reported `energy`/`hardy` are the 1D integrals without the `|S^{n-1}|`
/// factor; `tol` is relative to the Hardy side.
pub fn check_radial_ft<T: Real>(n: usize, f: &RadialProfile<T>, m: usize, tol: T) -> Result<FunctionalReport<T>> {
    check_depth(m)?;
    let ints = radial_integrals(n, f, m)?;
    let c = rational_to_real::<T>(Rational::new(((n - 2) * (n - 2)) as i64, 4));
    let mut margins = Vec::with_capacity(m);
    let mut acc = KahanSum::new();
    acc.add(ints.gradient);
    acc.add(-c * ints.hardy);
    for t in &ints.remainder_terms {
        acc.add(-*t);
        margins.push(acc.total());
    }
    let margin = margins[m - 1];
    let mut scale_terms = vec![ints.gradient, c * ints.hardy];
    scale_terms.extend(ints.remainder_terms.iter().copied());
    let scale = c * ints.hardy;
    let tolerance = effective_tolerance(tol, scale, None);
    let error = rounding_bound(&scale_terms, 1);
    Ok(FunctionalReport {
        energy: ints.gradient,
        hardy: ints.hardy,
        weighted: None,
        remainder_terms: Some(ints.remainder_terms),
        constant_used: c,
        margin,
        tolerance,
        quadrature_error: error,
        verdict: verdict(margin, tolerance, error),
        margins_by_depth: Some(margins),
        trial: None,
        rule: None,
    })
}

/// One row of a sharpness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SharpnessRow<T: Real> {
    pub epsilon: T,
    pub inner_cut: T,
    pub quotient: T,
    /// `quotient - C`.
    pub margin: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SharpnessReport<T: Real> {
    pub spec: ConeSpec,
    pub constant: T,
    pub rows: Vec<SharpnessRow<T>>,
    /// Polynomial extrapolation of the quotients to `ε = 0`.
    pub extrapolated: T,
    pub relative_error: T,
    /// Every quotient is at least `C`.
    pub all_above: bool,
    /// `Q(ε) - C` shrinks along the sweep.
    pub gap_decreasing: bool,
    pub tolerance: T,
    pub passed: bool,
}

/// Evaluates the minimizing family at each `ε` (inner cut from
/// [`sharpness_inner_cut`]) and extrapolates the quotient to `ε = 0`.
/// `eps_list` must be decreasing with at least two entries; the sweep passes
/// when all quotients lie above `C`, the gap decreases, and the
/// extrapolated limit is within `tol` (relative) of `C`.
pub fn sharpness_sweep<T: Real>(spec: ConeSpec, eps_list: &[T], tol: T) -> Result<SharpnessReport<T>> {
    if eps_list.len() < 2 {
        return domain("a sharpness sweep needs at least two values of epsilon");
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return domain("epsilon values must be strictly decreasing");
    }
    let c = rational_to_real::<T>(hardy_constant(spec));
    let lambda = from_usize::<T>(spec.constants().lambda1() as usize);
    let rows = eps_list
        .iter()
        .map(|&eps| {
            let a = lit::<T>(sharpness_inner_cut(spec.n(), to_f64(eps)));
            let profile = minimizing_profile(spec, eps, a)?;
            let q = reduced_radial_quotient(spec, &profile, lambda)?;
            Ok(SharpnessRow {
                epsilon: eps,
                inner_cut: a,
                quotient: q,
                margin: q - c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let quotients: Vec<T> = rows.iter().map(|r| r.quotient).collect();
    let extrapolated = extrapolate_to_zero(eps_list, &quotients)?;
    let relative_error = ((extrapolated - c) / c).abs();
    let all_above = rows.iter().all(|r| r.margin >= T::zero());
    let gap_decreasing = rows.windows(2).all(|w| w[1].margin < w[0].margin);
    Ok(SharpnessReport {
        spec,
        constant: c,
        rows,
        extrapolated,
        relative_error,
        all_above,
        gap_decreasing,
        tolerance: tol,
        passed: all_above && gap_decreasing && relative_error < tol,
    })
}
