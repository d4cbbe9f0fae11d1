//! Admissible trial functions on the cone: separable, bump and randomized
//! families, odd and even extensions, and the near-extremal radial profiles
//! used to probe sharpness.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::{degree_eigenvalue, AngularEigenfunction, ConeSpec};
use crate::error::{domain, Error, Result};
use crate::quadrature::{cone_ball_rule, integrate, SamplingMode};
use crate::scalar::{dot, from_usize, lit, norm, to_f64, Real};

/// Default finite-difference step for gradients without a closed form.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Reproducibility record of a trial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDescriptor {
    pub family: String,
    pub spec: ConeSpec,
    pub radius: f64,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    /// Degenerate draws skipped before this one was accepted.
    pub resamples: u32,
}

impl TrialDescriptor {
    fn new(family: &str, spec: ConeSpec, radius: f64) -> Self {
        Self {
            family: family.to_string(),
            spec,
            radius,
            params: BTreeMap::new(),
            seed: None,
            resamples: 0,
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// A test function `u` on `R^n`, supported in the closed cone intersected
/// with the ball `B_R`.
///
/// `value` must return 0 outside the cone and outside `B_R`.
pub trait TrialFunction<T: Real>: Send + Sync {
    fn spec(&self) -> ConeSpec;
    fn support_radius(&self) -> T;
    /// `l` such that `u = O(r^l)` at the origin.
    fn vanishing_order(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    /// Writes `∇u(x)` into `out`. The default is a centered difference with
    /// step `DEFAULT_FD_STEP · min(1, |x|)`.
    fn gradient(&self, x: &[T], out: &mut [T]) {
        let h = lit::<T>(DEFAULT_FD_STEP) * norm(x).min(T::one());
        finite_difference_gradient(|y| self.value(y), x, h, out);
    }
    fn descriptor(&self) -> TrialDescriptor;
}

/// Centered differences `(f(x + h e_j) - f(x - h e_j)) / 2h`.
pub fn finite_difference_gradient<T: Real>(f: impl Fn(&[T]) -> T, x: &[T], h: T, out: &mut [T]) {
    let mut y = x.to_vec();
    for j in 0..x.len() {
        y[j] = x[j] + h;
        let plus = f(&y);
        y[j] = x[j] - h;
        let minus = f(&y);
        y[j] = x[j];
        out[j] = (plus - minus) / (h + h);
    }
}

/// `∏_{i>n-k} x_i` and its gradient.
pub(crate) fn orthant_monomial<T: Real>(spec: ConeSpec, x: &[T], grad: Option<&mut [T]>) -> T {
    let axes = spec.constrained_axes();
    let m = x[axes.clone()].iter().fold(T::one(), |p, &c| p * c);
    if let Some(g) = grad {
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = if axes.contains(&j) {
                axes.clone().filter(|&i| i != j).fold(T::one(), |p, i| p * x[i])
            } else {
                T::zero()
            };
        }
    }
    m
}

fn outside<T: Real>(spec: ConeSpec, x: &[T], radius: T) -> bool {
    !spec.contains(x) || dot(x, x) >= radius * radius
}

/// Radial profile `f` on `(0, R]` with derivative, used by separable trials.
#[derive(Clone)]
pub struct RadialProfile<T: Real> {
    f: Arc<dyn Fn(T) -> T + Send + Sync>,
    f_prime: Arc<dyn Fn(T) -> T + Send + Sync>,
    vanishing_order: usize,
    radius: T,
    inner_support: T,
    breakpoints: Vec<T>,
    label: String,
    params: BTreeMap<String, f64>,
}

impl<T: Real> std::fmt::Debug for RadialProfile<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProfile")
            .field("label", &self.label)
            .field("radius", &self.radius)
            .field("vanishing_order", &self.vanishing_order)
            .field("params", &self.params)
            .finish()
    }
}

impl<T: Real> RadialProfile<T> {
    /// Wraps user-supplied `f` and `f'`. The caller is responsible for
    /// `f(R) = 0` and the stated vanishing order.
    pub fn new(
        f: impl Fn(T) -> T + Send + Sync + 'static,
        f_prime: impl Fn(T) -> T + Send + Sync + 'static,
        vanishing_order: usize,
        radius: T,
    ) -> Result<Self> {
        if !(radius > T::zero()) {
            return domain(format!("profile radius must be positive, got {radius}"));
        }
        Ok(Self {
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            vanishing_order,
            radius,
            inner_support: T::zero(),
            breakpoints: Vec::new(),
            label: "custom".into(),
            params: BTreeMap::new(),
        })
    }

    /// `f(r) = r (1 - r/R)`.
    pub fn quadratic(radius: T) -> Result<Self> {
        let p = Self::new(
            move |r| r * (T::one() - r / radius),
            move |r| T::one() - lit::<T>(2.0) * r / radius,
            1,
            radius,
        )?;
        Ok(p.labelled("quadratic"))
    }

    /// `f(r) = (r/R)^l (1 - r/R)²`.
    pub fn power_bump(l: usize, radius: T) -> Result<Self> {
        let li = l as i32;
        let lf = from_usize::<T>(l);
        let two = lit::<T>(2.0);
        let p = Self::new(
            move |r| {
                let s = r / radius;
                s.powi(li) * (T::one() - s).powi(2)
            },
            move |r| {
                let s = r / radius;
                let ds = if l == 0 { T::zero() } else { lf * s.powi(li - 1) };
                (ds * (T::one() - s).powi(2) - two * s.powi(li) * (T::one() - s)) / radius
            },
            l,
            radius,
        )?;
        Ok(p.labelled("power_bump").param("l", l as f64))
    }

    /// `f(r) = 1 - 3(r/R)² + 2(r/R)³`, nonzero at the origin.
    pub fn smoothstep(radius: T) -> Result<Self> {
        let p = Self::new(
            move |r| smoothstep(r / radius),
            move |r| smoothstep_prime(r / radius) / radius,
            0,
            radius,
        )?;
        Ok(p.labelled("smoothstep"))
    }

    fn labelled(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn f(&self, r: T) -> T {
        if r <= self.inner_support || r >= self.radius {
            T::zero()
        } else {
            (self.f)(r)
        }
    }

    pub fn f_prime(&self, r: T) -> T {
        if r <= self.inner_support || r >= self.radius {
            T::zero()
        } else {
            (self.f_prime)(r)
        }
    }

    pub fn vanishing_order(&self) -> usize {
        self.vanishing_order
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// `f` vanishes identically on `[0, inner_support]`.
    pub fn inner_support(&self) -> T {
        self.inner_support
    }

    /// Radii where `f'` is discontinuous.
    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }
}

fn smoothstep<T: Real>(s: T) -> T {
    T::one() - lit::<T>(3.0) * s * s + lit::<T>(2.0) * s * s * s
}

fn smoothstep_prime<T: Real>(s: T) -> T {
    lit::<T>(6.0) * s * (s - T::one())
}

/// Smallest inner cut used by [`sharpness_inner_cut`]; keeps `f'` finite in
/// double precision for `n <= 8`.
pub fn inner_cut_floor(n: usize) -> f64 {
    10f64.powf(-150.0 / n as f64)
}

/// Inner cut tied to `ε` so that the log-ramp bias `O(1/ln(1/a))` stays
/// below the `O(ε)` gap: `a = max(exp(-4/ε), inner_cut_floor(n))`.
pub fn sharpness_inner_cut(n: usize, epsilon: f64) -> f64 {
    (-4.0 / epsilon).exp().max(inner_cut_floor(n))
}

/// Near-extremal profile on `(0, 1]`:
/// `f(r) = r^p · ramp(r) · S(r)` with `p = -(n-2)/2 + ε`, the log ramp
/// `ln(r/a²)/ln(1/a)` on `[a², a]` (1 above `a`, 0 below `a²`) and the
/// outer cutoff `S(r) = 1 - 3r² + 2r³`.
pub fn minimizing_profile<T: Real>(spec: ConeSpec, epsilon: T, a: T) -> Result<RadialProfile<T>> {
    if !(epsilon > T::zero() && epsilon <= lit(0.5)) {
        return domain(format!("epsilon must lie in (0, 1/2], got {epsilon}"));
    }
    if !(a > T::zero() && a < lit(0.5)) {
        return domain(format!("inner cut must lie in (0, 1/2), got {a}"));
    }
    let p = epsilon - from_usize::<T>(spec.n() - 2) / lit(2.0);
    let a2 = a * a;
    let log_span = -a.ln();
    let f = move |r: T| {
        let ramp = if r < a { (r / a2).ln() / log_span } else { T::one() };
        r.powf(p) * ramp * smoothstep(r)
    };
    let fp = move |r: T| {
        let (g, gp) = if r < a {
            let l = (r / a2).ln() / log_span;
            (r.powf(p) * l, r.powf(p - T::one()) * (p * l + log_span.recip()))
        } else {
            (r.powf(p), p * r.powf(p - T::one()))
        };
        gp * smoothstep(r) + g * smoothstep_prime(r)
    };
    let mut profile = RadialProfile::new(f, fp, 0, T::one())?
        .labelled("minimizing")
        .param("epsilon", to_f64(epsilon))
        .param("inner_cut", to_f64(a));
    profile.inner_support = a2;
    profile.breakpoints = vec![a2, a];
    Ok(profile)
}

/// Angular factor of a separable trial: a harmonic polynomial `P` of degree
/// `l`, vanishing on the cone faces, restricted to the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum AngularFactor<T: Real> {
    /// `φ_k`, degree `k`.
    Principal(AngularEigenfunction<T>),
    /// `∏x_i · H` with `H` a harmonic polynomial of degree `extra` in the
    /// first two coordinates; degree `k + extra`. Unnormalized.
    Raised { spec: ConeSpec, extra: usize },
}

impl<T: Real> AngularFactor<T> {
    /// Picks `H` so that `∏x_i · H` stays harmonic: `Re (x_1 + i x_2)^m`
    /// when `n - k >= 2`, `x_1` when `n - k = 1`, `x_1² - x_2²` when `k = n`.
    pub fn raised(spec: ConeSpec, extra: usize) -> Result<Self> {
        let free = spec.n() - spec.k();
        let ok = match free {
            0 => extra == 2,
            1 => extra == 1,
            _ => extra >= 1,
        };
        if !ok {
            return domain(format!(
                "no raised harmonic of extra degree {extra} implemented for {spec}"
            ));
        }
        Ok(Self::Raised { spec, extra })
    }

    pub fn spec(&self) -> ConeSpec {
        match self {
            Self::Principal(phi) => phi.spec(),
            Self::Raised { spec, .. } => *spec,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Self::Principal(phi) => phi.spec().k(),
            Self::Raised { spec, extra } => spec.k() + extra,
        }
    }

    /// `l(n + l - 2)`.
    pub fn eigenvalue(&self) -> i64 {
        degree_eigenvalue(self.spec().n() as i64, self.degree() as i64).expect("degree is nonnegative")
    }

    fn free_factor(&self, x: &[T], grad: &mut [T]) -> T {
        let Self::Raised { spec, extra } = *self else {
            unreachable!()
        };
        grad.iter_mut().for_each(|g| *g = T::zero());
        match spec.n() - spec.k() {
            0 => {
                grad[0] = lit::<T>(2.0) * x[0];
                grad[1] = lit::<T>(-2.0) * x[1];
                x[0] * x[0] - x[1] * x[1]
            }
            1 => {
                grad[0] = T::one();
                x[0]
            }
            _ => {
                // z^{m-1} and z^m for z = x_1 + i x_2
                let (mut re, mut im) = (T::one(), T::zero());
                for _ in 0..extra - 1 {
                    (re, im) = (re * x[0] - im * x[1], re * x[1] + im * x[0]);
                }
                let m = from_usize::<T>(extra);
                grad[0] = m * re;
                grad[1] = -m * im;
                re * x[0] - im * x[1]
            }
        }
    }

    /// Degree-0 homogeneous extension `x ↦ P(x)/|x|^l`.
    pub fn extension_value(&self, x: &[T]) -> T {
        match self {
            Self::Principal(phi) => phi.extension_value(x),
            Self::Raised { spec, .. } => {
                let mut g = vec![T::zero(); x.len()];
                let h = self.free_factor(x, &mut g);
                orthant_monomial(*spec, x, None) * h / norm(x).powi(self.degree() as i32)
            }
        }
    }

    /// Gradient of the homogeneous extension.
    pub fn extension_gradient(&self, x: &[T], out: &mut [T]) {
        match self {
            Self::Principal(phi) => phi.extension_gradient(x, out),
            Self::Raised { spec, .. } => {
                let n = x.len();
                let mut gh = vec![T::zero(); n];
                let mut gm = vec![T::zero(); n];
                let h = self.free_factor(x, &mut gh);
                let m = orthant_monomial(*spec, x, Some(&mut gm));
                let l = self.degree() as i32;
                let r2 = dot(x, x);
                let rl = r2.sqrt().powi(l);
                let p = m * h;
                for j in 0..n {
                    let dp = gm[j] * h + m * gh[j];
                    out[j] = dp / rl - from_usize::<T>(l as usize) * p * x[j] / (rl * r2);
                }
            }
        }
    }
}

/// `u(x) = f(|x|) · Φ(x/|x|)`.
#[derive(Debug, Clone)]
pub struct SeparableTrial<T: Real> {
    angular: AngularFactor<T>,
    profile: RadialProfile<T>,
}

/// Separable trial with the principal angular eigenfunction.
pub fn separable_trial<T: Real>(phi: AngularEigenfunction<T>, f: RadialProfile<T>) -> SeparableTrial<T> {
    SeparableTrial {
        angular: AngularFactor::Principal(phi),
        profile: f,
    }
}

impl<T: Real> SeparableTrial<T> {
    pub fn with_factor(angular: AngularFactor<T>, profile: RadialProfile<T>) -> Self {
        Self { angular, profile }
    }

    pub fn angular(&self) -> &AngularFactor<T> {
        &self.angular
    }

    pub fn profile(&self) -> &RadialProfile<T> {
        &self.profile
    }
}

impl<T: Real> TrialFunction<T> for SeparableTrial<T> {
    fn spec(&self) -> ConeSpec {
        self.angular.spec()
    }

    fn support_radius(&self) -> T {
        self.profile.radius()
    }

    fn vanishing_order(&self) -> usize {
        self.profile.vanishing_order()
    }

    fn value(&self, x: &[T]) -> T {
        if outside(self.spec(), x, self.profile.radius()) {
            return T::zero();
        }
        self.profile.f(norm(x)) * self.angular.extension_value(x)
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        if outside(self.spec(), x, self.profile.radius()) {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        let r = norm(x);
        let (f, fp) = (self.profile.f(r), self.profile.f_prime(r));
        let phi = self.angular.extension_value(x);
        self.angular.extension_gradient(x, out);
        for (o, &xj) in out.iter_mut().zip(x) {
            *o = fp * phi * xj / r + f * *o;
        }
    }

    fn descriptor(&self) -> TrialDescriptor {
        let mut d = TrialDescriptor::new("separable", self.spec(), to_f64(self.profile.radius()))
            .with("angular_degree", self.angular.degree() as f64);
        d.params.insert(format!("profile.{}", self.profile.label()), 1.0);
        for (k, v) in self.profile.params() {
            d.params.insert(format!("profile.{k}"), *v);
        }
        d
    }
}

/// `B(s) = exp(1 - 1/(1 - s²))` on `[0, 1)`, zero beyond; `B(0) = 1`.
pub fn bump<T: Real>(s: T) -> T {
    if s >= T::one() {
        return T::zero();
    }
    (T::one() - (T::one() - s * s).recip()).exp()
}

/// `B'(s) = -2s B(s) / (1 - s²)²`.
pub fn bump_prime<T: Real>(s: T) -> T {
    if s >= T::one() {
        return T::zero();
    }
    let q = T::one() - s * s;
    lit::<T>(-2.0) * s * bump(s) / (q * q)
}

/// `u(x) = A · ∏_{i>n-k} x_i · B(|x|/R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBumpTrial<T: Real> {
    spec: ConeSpec,
    radius: T,
    amplitude: T,
}

pub fn product_bump_trial<T: Real>(spec: ConeSpec, radius: T) -> Result<ProductBumpTrial<T>> {
    if !(radius > T::zero()) {
        return domain(format!("support radius must be positive, got {radius}"));
    }
    Ok(ProductBumpTrial {
        spec,
        radius,
        amplitude: T::one(),
    })
}

impl<T: Real> ProductBumpTrial<T> {
    pub fn scaled(self, amplitude: T) -> Self {
        Self { amplitude, ..self }
    }
}

impl<T: Real> TrialFunction<T> for ProductBumpTrial<T> {
    fn spec(&self) -> ConeSpec {
        self.spec
    }

    fn support_radius(&self) -> T {
        self.radius
    }

    fn vanishing_order(&self) -> usize {
        self.spec.k()
    }

    fn value(&self, x: &[T]) -> T {
        if outside(self.spec, x, self.radius) {
            return T::zero();
        }
        self.amplitude * orthant_monomial(self.spec, x, None) * bump(norm(x) / self.radius)
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        if outside(self.spec, x, self.radius) {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        let r = norm(x);
        let s = r / self.radius;
        let m = orthant_monomial(self.spec, x, Some(out));
        let (b, db) = (bump(s), bump_prime(s) / (self.radius * r));
        for (o, &xj) in out.iter_mut().zip(x) {
            *o = self.amplitude * (*o * b + m * db * xj);
        }
    }

    fn descriptor(&self) -> TrialDescriptor {
        TrialDescriptor::new("product_bump", self.spec, to_f64(self.radius))
            .with("amplitude", to_f64(self.amplitude))
    }
}

/// `u(x) = c · ∏x_i · P(x/R) · B(|x|/ρ)` with `P` a random polynomial of
/// degree at most 2 and `ρ ∈ [R/2, R]`. The support radius is `ρ`; `R`
/// only scales the polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTrial<T: Real> {
    spec: ConeSpec,
    radius: T,
    inner_radius: T,
    scale: T,
    /// `(coefficient, first index, second index)` of each monomial.
    terms: Vec<(T, Option<usize>, Option<usize>)>,
    seed: u64,
    resamples: u32,
}

fn monomial_basis(n: usize) -> Vec<(Option<usize>, Option<usize>)> {
    let mut basis = vec![(None, None)];
    basis.extend((0..n).map(|i| (Some(i), None)));
    for i in 0..n {
        for j in i..n {
            basis.push((Some(i), Some(j)));
        }
    }
    basis
}

/// Points of the radial rule used to normalize a random trial: 8 per
/// graded panel, enough to resolve the bump's steep flank.
const NORMALIZATION_RADIAL_POINTS: usize = 128;

/// Draws a random trial and normalizes it to unit Hardy term `∫u²/|x|² = 1`
/// on a cone-ball rule over its support `B_ρ`. Draws whose Hardy term is numerically
/// null are discarded and redrawn with `seed + 1`; the count is recorded in
/// the descriptor.
pub fn random_trial<T: Real>(spec: ConeSpec, radius: T, basis_size: usize, seed: u64) -> Result<RandomTrial<T>> {
    if basis_size < 1 {
        return domain("random trials need basis_size >= 1");
    }
    if !(radius > T::zero()) {
        return domain(format!("support radius must be positive, got {radius}"));
    }
    let basis = monomial_basis(spec.n());
    let size = basis_size.min(basis.len());
    let angular_order = if spec.n() == 3 { 12 } else { 256 };
    for attempt in 0..16u32 {
        let draw_seed = seed.wrapping_add(u64::from(attempt));
        let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);
        let terms = basis[..size]
            .iter()
            .map(|&(i, j)| {
                let c: f64 = rng.sample(StandardNormal);
                (lit::<T>(c), i, j)
            })
            .collect();
        let inner = radius * lit::<T>(rng.random_range(0.5..=1.0));
        let rule = cone_ball_rule(
            spec,
            inner,
            NORMALIZATION_RADIAL_POINTS,
            angular_order,
            SamplingMode::auto(spec.n(), seed ^ 0x9e37_79b9_7f4a_7c15),
        )?;
        let mut trial = RandomTrial {
            spec,
            radius,
            inner_radius: inner,
            scale: T::one(),
            terms,
            seed,
            resamples: attempt,
        };
        let hardy = integrate(&rule, |x| {
            let u = trial.value(x);
            u * u / dot(x, x)
        })?
        .value;
        if hardy > lit(1e-200) && hardy.is_finite() {
            trial.scale = hardy.sqrt().recip();
            return Ok(trial);
        }
    }
    Err(Error::Degenerate(format!(
        "random trial for {spec} stayed null after 16 draws from seed {seed}"
    )))
}

impl<T: Real> RandomTrial<T> {
    fn polynomial(&self, x: &[T], grad: Option<&mut [T]>) -> T {
        let inv = self.radius.recip();
        let mut p = T::zero();
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
        for &(c, i, j) in &self.terms {
            match (i, j) {
                (None, _) => p += c,
                (Some(i), None) => {
                    p += c * x[i] * inv;
                    if let Some(g) = g.as_deref_mut() {
                        g[i] += c * inv;
                    }
                }
                (Some(i), Some(j)) => {
                    p += c * x[i] * x[j] * inv * inv;
                    if let Some(g) = g.as_deref_mut() {
                        g[i] += c * x[j] * inv * inv;
                        g[j] += c * x[i] * inv * inv;
                    }
                }
            }
        }
        p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl<T: Real> TrialFunction<T> for RandomTrial<T> {
    fn spec(&self) -> ConeSpec {
        self.spec
    }

    fn support_radius(&self) -> T {
        self.inner_radius
    }

    fn vanishing_order(&self) -> usize {
        self.spec.k()
    }

    fn value(&self, x: &[T]) -> T {
        if outside(self.spec, x, self.inner_radius) {
            return T::zero();
        }
        let s = norm(x) / self.inner_radius;
        self.scale * orthant_monomial(self.spec, x, None) * self.polynomial(x, None) * bump(s)
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        if outside(self.spec, x, self.inner_radius) {
            out.iter_mut().for_each(|o| *o = T::zero());
            return;
        }
        let n = x.len();
        let r = norm(x);
        let s = r / self.inner_radius;
        let mut gp = vec![T::zero(); n];
        let m = orthant_monomial(self.spec, x, Some(out));
        let p = self.polynomial(x, Some(&mut gp));
        let (b, db) = (bump(s), bump_prime(s) / (self.inner_radius * r));
        for j in 0..n {
            out[j] = self.scale * (out[j] * p * b + m * gp[j] * b + m * p * db * x[j]);
        }
    }

    fn descriptor(&self) -> TrialDescriptor {
        let mut d = TrialDescriptor::new("random", self.spec, to_f64(self.radius))
            .with("basis_size", self.terms.len() as f64)
            .with("inner_radius", to_f64(self.inner_radius));
        d.seed = Some(self.seed);
        d.resamples = self.resamples;
        d
    }
}

/// `λ u` for a borrowed trial.
pub struct Scaled<'a, T: Real> {
    inner: &'a dyn TrialFunction<T>,
    factor: T,
}

pub fn scaled<T: Real>(inner: &dyn TrialFunction<T>, factor: T) -> Scaled<'_, T> {
    Scaled { inner, factor }
}

impl<T: Real> TrialFunction<T> for Scaled<'_, T> {
    fn spec(&self) -> ConeSpec {
        self.inner.spec()
    }

    fn support_radius(&self) -> T {
        self.inner.support_radius()
    }

    fn vanishing_order(&self) -> usize {
        self.inner.vanishing_order()
    }

    fn value(&self, x: &[T]) -> T {
        self.factor * self.inner.value(x)
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        self.inner.gradient(x, out);
        out.iter_mut().for_each(|o| *o *= self.factor);
    }

    fn descriptor(&self) -> TrialDescriptor {
        self.inner.descriptor().with("scaled_by", to_f64(self.factor))
    }
}

/// The zero function on a cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroTrial<T: Real> {
    pub spec: ConeSpec,
    pub radius: T,
}

impl<T: Real> TrialFunction<T> for ZeroTrial<T> {
    fn spec(&self) -> ConeSpec {
        self.spec
    }

    fn support_radius(&self) -> T {
        self.radius
    }

    fn vanishing_order(&self) -> usize {
        usize::MAX
    }

    fn value(&self, _x: &[T]) -> T {
        T::zero()
    }

    fn gradient(&self, _x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }

    fn descriptor(&self) -> TrialDescriptor {
        TrialDescriptor::new("zero", self.spec, to_f64(self.radius))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

/// Extension of a cone trial to `R^n` by reflection across the last `k`
/// coordinate hyperplanes, odd or even in each.
pub struct Extension<'a, T: Real> {
    inner: &'a dyn TrialFunction<T>,
    parity: Parity,
}

pub fn odd_extension<T: Real>(u: &dyn TrialFunction<T>) -> Extension<'_, T> {
    Extension {
        inner: u,
        parity: Parity::Odd,
    }
}

/// Even reflection; used as a negative control where oddness matters.
pub fn even_extension<T: Real>(u: &dyn TrialFunction<T>) -> Extension<'_, T> {
    Extension {
        inner: u,
        parity: Parity::Even,
    }
}

impl<'a, T: Real> Extension<'a, T> {
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn inner(&self) -> &'a dyn TrialFunction<T> {
        self.inner
    }

    /// Folds `x` into the closed cone; returns the sign factor, which is 0
    /// for the odd extension on a reflection hyperplane.
    fn fold(&self, x: &[T]) -> (Vec<T>, T) {
        let mut y = x.to_vec();
        let mut sign = T::one();
        for j in self.inner.spec().constrained_axes() {
            if x[j] < T::zero() {
                y[j] = -x[j];
                if self.parity == Parity::Odd {
                    sign = -sign;
                }
            } else if x[j] == T::zero() && self.parity == Parity::Odd {
                sign = T::zero();
            }
        }
        (y, sign)
    }
}

impl<T: Real> TrialFunction<T> for Extension<'_, T> {
    fn spec(&self) -> ConeSpec {
        self.inner.spec()
    }

    fn support_radius(&self) -> T {
        self.inner.support_radius()
    }

    fn vanishing_order(&self) -> usize {
        self.inner.vanishing_order()
    }

    fn value(&self, x: &[T]) -> T {
        let (y, sign) = self.fold(x);
        if sign == T::zero() {
            return T::zero();
        }
        sign * self.inner.value(&y)
    }

    fn gradient(&self, x: &[T], out: &mut [T]) {
        let (y, sign) = self.fold(x);
        self.inner.gradient(&y, out);
        for j in self.inner.spec().constrained_axes() {
            if x[j] < T::zero() {
                out[j] = -out[j];
            }
        }
        let sign = if sign == T::zero() { T::one() } else { sign };
        out.iter_mut().for_each(|o| *o *= sign);
    }

    fn descriptor(&self) -> TrialDescriptor {
        let mut d = self.inner.descriptor();
        d.family = format!(
            "{}_extension({})",
            match self.parity {
                Parity::Odd => "odd",
                Parity::Even => "even",
            },
            d.family
        );
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::angular_eigenfunction;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn probe_points(spec: ConeSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| loop {
                let x: Vec<f64> = (0..spec.n())
                    .map(|j| {
                        if spec.constrained_axes().contains(&j) {
                            rng.random_range(0.05..0.6)
                        } else {
                            rng.random_range(-0.6..0.6)
                        }
                    })
                    .collect();
                let r = norm(&x);
                if r > 0.1 && r < 0.45 {
                    break x;
                }
            })
            .collect()
    }

    fn check_gradient(u: &dyn TrialFunction<f64>, points: &[Vec<f64>]) {
        let n = u.spec().n();
        for x in points {
            let mut g = vec![0.0; n];
            let mut fd = vec![0.0; n];
            u.gradient(x, &mut g);
            finite_difference_gradient(|y| u.value(y), x, 1e-5, &mut fd);
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            let scale = norm(&g).max(1e-300);
            assert!(norm(&diff) / scale < 1e-6, "{:?} at {x:?}: {g:?} vs {fd:?}", u.descriptor().family);
        }
    }

    #[test]
    fn separable_value_at_a_known_point() {
        let spec = ConeSpec::new(3, 1).unwrap();
        let phi = angular_eigenfunction::<f64>(spec, 1e-12).unwrap();
        let u = separable_trial(phi, RadialProfile::quadratic(1.0).unwrap());
        let n = (3.0 / (2.0 * std::f64::consts::PI)).sqrt();
        assert_relative_eq!(u.value(&[0.0, 0.0, 0.5]), n / 4.0, max_relative = 1e-10);
        assert_eq!(u.value(&[0.3, 0.2, 0.0]), 0.0);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for (n, k) in [(3, 1), (3, 2), (3, 3), (4, 2), (5, 3)] {
            let spec = ConeSpec::new(n, k).unwrap();
            let pts = probe_points(spec, 20, 11);
            let phi = angular_eigenfunction::<f64>(spec, 1e-8).unwrap();
            check_gradient(&separable_trial(phi, RadialProfile::quadratic(1.0).unwrap()), &pts);
            check_gradient(&product_bump_trial(spec, 1.0).unwrap(), &pts);
            check_gradient(&random_trial::<f64>(spec, 1.0, 6, 3).unwrap(), &pts);
            let raised = AngularFactor::raised(spec, if n - k == 1 { 1 } else { 2 }).unwrap();
            check_gradient(
                &SeparableTrial::with_factor(raised, RadialProfile::power_bump(2, 1.0).unwrap()),
                &pts,
            );
        }
    }

    #[test]
    fn raised_factors_are_harmonic() {
        for (n, k, extra) in [(3, 1, 1), (3, 1, 3), (3, 2, 1), (3, 3, 2), (5, 3, 2)] {
            let spec = ConeSpec::new(n, k).unwrap();
            let f = AngularFactor::<f64>::raised(spec, extra).unwrap();
            let l = f.degree() as i32;
            // P = r^l · extension
            let p = |x: &[f64]| f.extension_value(x) * norm(x).powi(l);
            let x: Vec<f64> = (0..n).map(|j| 0.3 + 0.1 * j as f64).collect();
            let h = 1e-3;
            let mut lap = 0.0;
            let mut y = x.clone();
            for j in 0..n {
                y[j] = x[j] + h;
                let a = p(&y);
                y[j] = x[j] - h;
                let b = p(&y);
                y[j] = x[j];
                lap += (a - 2.0 * p(&x) + b) / (h * h);
            }
            assert!(lap.abs() < 1e-5, "({n},{k},{extra}) laplacian {lap}");
        }
        assert!(AngularFactor::<f64>::raised(ConeSpec::new(3, 2).unwrap(), 2).is_err());
    }

    #[test]
    fn trials_vanish_on_faces_and_outside_the_ball() {
        let spec = ConeSpec::new(4, 2).unwrap();
        let bump = product_bump_trial::<f64>(spec, 1.0).unwrap();
        let rnd = random_trial::<f64>(spec, 1.0, 10, 5).unwrap();
        for u in [&bump as &dyn TrialFunction<f64>, &rnd] {
            assert_eq!(u.value(&[0.1, 0.2, 0.3, 0.0]), 0.0);
            assert_eq!(u.value(&[0.1, 0.2, 0.0, 0.3]), 0.0);
            assert_eq!(u.value(&[0.1, 0.2, 0.7, 0.8]), 0.0);
            assert_eq!(u.value(&[0.1, 0.2, -0.3, 0.3]), 0.0);
        }
        assert_eq!(bump.vanishing_order(), 2);
    }

    #[test]
    fn random_trials_are_reproducible() {
        let spec = ConeSpec::new(3, 2).unwrap();
        let a = random_trial::<f64>(spec, 1.0, 8, 42).unwrap();
        let b = random_trial::<f64>(spec, 1.0, 8, 42).unwrap();
        let c = random_trial::<f64>(spec, 1.0, 8, 43).unwrap();
        let x = [0.1, 0.3, 0.2];
        assert_eq!(a.value(&x).to_bits(), b.value(&x).to_bits());
        assert_ne!(a.value(&x), c.value(&x));
        assert_eq!(a.descriptor(), b.descriptor());
    }

    #[test]
    fn odd_extension_flips_sign_per_axis() {
        let spec = ConeSpec::new(4, 2).unwrap();
        let u = random_trial::<f64>(spec, 1.0, 10, 9).unwrap();
        let ext = odd_extension(&u);
        for x in probe_points(spec, 100, 4) {
            assert_eq!(ext.value(&x), u.value(&x));
            let mut y = x.clone();
            y[3] = -y[3];
            assert_eq!(ext.value(&y), -u.value(&x));
            y[2] = -y[2];
            assert_eq!(ext.value(&y), u.value(&x));
        }
        let even = even_extension(&u);
        let x = [0.1, 0.2, -0.3, 0.25];
        assert_eq!(even.value(&x), u.value(&[0.1, 0.2, 0.3, 0.25]));
    }

    #[test]
    fn extension_gradient_matches_finite_differences_off_the_faces() {
        let spec = ConeSpec::new(3, 2).unwrap();
        let u = product_bump_trial::<f64>(spec, 1.0).unwrap();
        let ext = odd_extension(&u);
        let x = [0.2, -0.3, 0.25];
        let mut g = [0.0; 3];
        let mut fd = [0.0; 3];
        ext.gradient(&x, &mut g);
        finite_difference_gradient(|y| ext.value(y), &x, 1e-6, &mut fd);
        for j in 0..3 {
            assert!((g[j] - fd[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn minimizing_profile_is_continuous_at_the_cuts() {
        let spec = ConeSpec::new(3, 1).unwrap();
        let a = 1e-3;
        let p = minimizing_profile::<f64>(spec, 0.2, a).unwrap();
        let d = 1e-12;
        assert!(p.f(a * a * (1.0 + d)).abs() < 1e-6);
        assert_relative_eq!(p.f(a * (1.0 - d)), p.f(a * (1.0 + d)), max_relative = 1e-9);
        assert_eq!(p.f(1.0), 0.0);
        assert!(minimizing_profile::<f64>(spec, 0.6, a).is_err());
        assert!(minimizing_profile::<f64>(spec, 0.1, 0.5).is_err());
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let spec = ConeSpec::new(4, 2).unwrap();
        let profiles = vec![
            RadialProfile::<f64>::quadratic(1.5).unwrap(),
            RadialProfile::power_bump(3, 1.0).unwrap(),
            RadialProfile::smoothstep(2.0).unwrap(),
            minimizing_profile(spec, 0.1, 1e-2).unwrap(),
        ];
        for p in &profiles {
            for &r in &[0.003, 0.05, 0.3, 0.7] {
                let h = 1e-4 * r;
                let fd = (p.f(r + h) - p.f(r - h)) / (2.0 * h);
                assert_relative_eq!(p.f_prime(r), fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn inner_cut_is_tied_to_epsilon_and_floored() {
        assert_relative_eq!(sharpness_inner_cut(3, 0.2), (-20f64).exp());
        assert_eq!(sharpness_inner_cut(3, 0.025), 1e-50);
    }
}
