//! Constants, eigenvalue formulas and the principal angular eigenfunction of
//! the cone `R^n_{k+} = R^{n-k} x (R_+)^k`, plus the iterated logarithms
//! `X_i` that weight the remainder series on balls.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{gauss_legendre_on, integrate, sphere_rule, SamplingMode};
use crate::scalar::{from_usize, lit, Real};
use crate::Rational;

/// Ambient dimension `n` and number of half-line factors `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ConeSpec {
    n: usize,
    k: usize,
}

#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    k: usize,
}

impl TryFrom<RawSpec> for ConeSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        ConeSpec::new(raw.n, raw.k)
    }
}

impl ConeSpec {
    /// Requires `n >= 3` and `1 <= k <= n`.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 3 {
            return domain(format!("cone dimension must satisfy n >= 3, got n = {n}"));
        }
        if k < 1 || k > n {
            return domain(format!("orthant count must satisfy 1 <= k <= n = {n}, got k = {k}"));
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the constrained coordinates `n-k .. n` (zero based).
    pub fn constrained_axes(&self) -> std::ops::Range<usize> {
        self.n - self.k..self.n
    }

    /// Whether `x` lies in the open cone.
    pub fn contains<T: Real>(&self, x: &[T]) -> bool {
        x[self.constrained_axes()].iter().all(|&c| c > T::zero())
    }

    /// Distance from `x` (inside the cone) to the nearest cone face.
    pub fn boundary_distance<T: Real>(&self, x: &[T]) -> T {
        x[self.constrained_axes()]
            .iter()
            .fold(T::infinity(), |m, &c| m.min(c))
    }

    pub fn constants(&self) -> SharpConstants {
        SharpConstants::new(*self)
    }
}

impl std::fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(n={}, k={})", self.n, self.k)
    }
}

/// Exact values attached to a cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharpConstants {
    spec: ConeSpec,
}

impl SharpConstants {
    pub fn new(spec: ConeSpec) -> Self {
        Self { spec }
    }

    /// `(n-2+2k)²/4`.
    pub fn hardy(&self) -> Rational {
        hardy_constant(self.spec)
    }

    /// `k(n+k-2)`.
    pub fn lambda1(&self) -> i64 {
        principal_eigenvalue(self.spec)
    }

    /// `l(n+l-2)`.
    pub fn degree_eigenvalue(&self, l: usize) -> i64 {
        let (n, l) = (self.spec.n as i64, l as i64);
        l * (n + l - 2)
    }

    /// `(n+2l-2)²/4`.
    pub fn weighted_halfspace(&self, l: HalfInteger) -> Rational {
        weighted_halfspace_constant(self.spec.n, l).expect("valid n")
    }

    /// `(n-2)²/4`, the constant on the whole space.
    pub fn whole_space(&self) -> Rational {
        let m = self.spec.n as i64 - 2;
        Rational::new(m * m, 4)
    }
}

/// Sharp Hardy constant of the cone, `(n-2+2k)²/4`.
pub fn hardy_constant(spec: ConeSpec) -> Rational {
    let m = spec.n as i64 - 2 + 2 * spec.k as i64;
    Rational::new(m * m, 4)
}

/// Checked variant of [`hardy_constant`] taking raw integers.
pub fn hardy_constant_for(n: usize, k: usize) -> Result<Rational> {
    ConeSpec::new(n, k).map(hardy_constant)
}

/// Dirichlet principal eigenvalue of the spherical orthant, `k(n+k-2)`.
pub fn principal_eigenvalue(spec: ConeSpec) -> i64 {
    let (n, k) = (spec.n as i64, spec.k as i64);
    k * (n + k - 2)
}

/// Eigenvalue `l(n+l-2)` of degree-`l` spherical harmonics on `S^{n-1}`.
pub fn degree_eigenvalue(n: i64, l: i64) -> Result<i64> {
    if n < 3 {
        return domain(format!("degree eigenvalues need n >= 3, got {n}"));
    }
    if l < 0 {
        return domain(format!("harmonic degree must be non-negative, got {l}"));
    }
    Ok(l * (n + l - 2))
}

/// A positive half-integer `l ∈ {1/2, 1, 3/2, ...}` stored as `2l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInteger {
    twice: u32,
}

impl HalfInteger {
    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return domain("half-integer parameter must be positive");
        }
        Ok(Self { twice })
    }

    pub fn from_rational(l: Rational) -> Result<Self> {
        let twice = l * 2;
        if !twice.is_integer() || *twice.numer() <= 0 {
            return domain(format!("{l} is not a positive half-integer"));
        }
        Self::from_twice(*twice.numer() as u32)
    }

    pub fn twice(&self) -> u32 {
        self.twice
    }

    pub fn as_rational(&self) -> Rational {
        Rational::new(self.twice as i64, 2)
    }

    pub fn to_real<T: Real>(&self) -> T {
        from_usize::<T>(self.twice as usize) / lit(2.0)
    }

    /// `l(l-1)`, negative for `l = 1/2`.
    pub fn singular_coefficient(&self) -> Rational {
        let l = self.as_rational();
        l * (l - 1)
    }
}

impl std::str::FromStr for HalfInteger {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parsed = if let Some((a, b)) = s.split_once('/') {
            let num: i64 = a.trim().parse().map_err(|_| Error::Domain(format!("bad half-integer {s:?}")))?;
            let den: i64 = b.trim().parse().map_err(|_| Error::Domain(format!("bad half-integer {s:?}")))?;
            if den == 0 {
                return domain(format!("bad half-integer {s:?}"));
            }
            Rational::new(num, den)
        } else if let Ok(v) = s.parse::<i64>() {
            Rational::from_integer(v)
        } else {
            let v: f64 = s.parse().map_err(|_| Error::Domain(format!("bad half-integer {s:?}")))?;
            let twice = (2.0 * v).round();
            if (2.0 * v - twice).abs() > 1e-12 {
                return domain(format!("{s} is not a half-integer"));
            }
            Rational::new(twice as i64, 2)
        };
        Self::from_rational(parsed)
    }
}

impl std::fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Sharp constant of the weighted half-space inequality, `(n+2l-2)²/4`.
pub fn weighted_halfspace_constant(n: usize, l: HalfInteger) -> Result<Rational> {
    if n < 3 {
        return domain(format!("weighted half-space constant needs n >= 3, got {n}"));
    }
    let m = n as i64 + l.twice as i64 - 2;
    Ok(Rational::new(m * m, 4))
}

pub fn rational_to_real<T: Real>(q: Rational) -> T {
    lit::<T>(*q.numer() as f64) / lit::<T>(*q.denom() as f64)
}

/// Surface measure `|S^d| = 2π^{(d+1)/2} / Γ((d+1)/2)`, via the recursion
/// `|S^d| = 2π/(d-1) |S^{d-2}|` from `|S^0| = 2` and `|S^1| = 2π`.
pub fn sphere_volume<T: Real>(d: usize) -> T {
    let two_pi = lit::<T>(2.0) * T::PI();
    let mut v = if d % 2 == 0 { lit::<T>(2.0) } else { two_pi };
    let mut j = if d % 2 == 0 { 2 } else { 3 };
    while j <= d {
        v = v * two_pi / from_usize::<T>(j - 1);
        j += 2;
    }
    v
}

/// `X_1(s) = 1/(1 - ln s)`, `X_i = X_1 ∘ X_{i-1}`, on `0 < s <= 1`.
pub fn iterated_log<T: Real>(i: usize, s: T) -> Result<T> {
    if i == 0 {
        return domain("iterated logarithm index starts at 1");
    }
    if !(s > T::zero() && s <= T::one()) {
        return domain(format!("iterated logarithm needs 0 < s <= 1, got {s}"));
    }
    let mut x = s;
    for _ in 0..i {
        x = (T::one() - x.ln()).recip();
    }
    Ok(x)
}

/// Below this a product of squared iterated logarithms is treated as 0.
pub fn remainder_underflow<T: Real>() -> T {
    T::min_positive_value().max(lit(1e-300))
}

/// Cumulative products `X_1²(s)···X_i²(s)` for `i = 1..=m`, clamped to zero
/// once they drop below [`remainder_underflow`].
pub fn iterated_log_weights<T: Real>(s: T, m: usize) -> Result<Vec<T>> {
    if m == 0 {
        return domain("remainder depth must be >= 1");
    }
    let mut x = iterated_log(1, s)?;
    let mut prod = T::one();
    let floor = remainder_underflow::<T>();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        if i > 0 {
            x = (T::one() - x.ln()).recip();
        }
        prod = prod * x * x;
        if prod < floor {
            prod = T::zero();
        }
        out.push(prod);
    }
    Ok(out)
}

/// `φ(σ) = N ∏_{i>n-k} σ_i`, the positive principal Dirichlet
/// eigenfunction of the spherical orthant, normalized in `L²(Σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AngularEigenfunction<T: Real> {
    spec: ConeSpec,
    normalization: T,
}

impl<T: Real> AngularEigenfunction<T> {
    /// Uses a caller-supplied normalization constant.
    pub fn with_normalization(spec: ConeSpec, normalization: T) -> Self {
        Self { spec, normalization }
    }

    pub fn spec(&self) -> ConeSpec {
        self.spec
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    pub fn eigenvalue(&self) -> i64 {
        principal_eigenvalue(self.spec)
    }

    fn monomial(&self, x: &[T]) -> T {
        x[self.spec.constrained_axes()].iter().fold(T::one(), |p, &c| p * c)
    }

    /// Value at a unit vector.
    pub fn value(&self, sigma: &[T]) -> T {
        self.normalization * self.monomial(sigma)
    }

    /// Degree-0 homogeneous extension `x ↦ φ(x/|x|)`.
    pub fn extension_value(&self, x: &[T]) -> T {
        let r = crate::scalar::norm(x);
        self.normalization * self.monomial(x) / r.powi(self.spec.k as i32)
    }

    /// Gradient of the homogeneous extension; at `|x| = 1` this is the
    /// tangential gradient `∇_σ φ`.
    pub fn extension_gradient(&self, x: &[T], out: &mut [T]) {
        let k = self.spec.k as i32;
        let r2 = crate::scalar::dot(x, x);
        let r = r2.sqrt();
        let p = self.monomial(x);
        let rk = r.powi(k);
        for (j, o) in out.iter_mut().enumerate() {
            let dp = if self.spec.constrained_axes().contains(&j) {
                self.spec
                    .constrained_axes()
                    .filter(|&i| i != j)
                    .fold(T::one(), |acc, i| acc * x[i])
            } else {
                T::zero()
            };
            *o = self.normalization * (dp / rk - from_usize::<T>(self.spec.k) * p * x[j] / (rk * r2));
        }
    }
}

/// Builds the normalized principal eigenfunction.
///
/// `N` is fixed by integrating `∏σ_i²` numerically, refining until two
/// successive estimates agree within `tol` (relative). For `n = 3` the
/// integral runs over the deterministic section rule; for larger `n` it is
/// lifted to a Gaussian integral over `R^n`, which factorizes into 1D
/// quadratures:
/// `∫_{S^{n-1}} ∏σ_i² dσ · ∫_0^∞ r^{n+2k-1} e^{-r²} dr = ∫_{R^n} ∏x_i² e^{-|x|²} dx`.
pub fn angular_eigenfunction<T: Real>(spec: ConeSpec, tol: T) -> Result<AngularEigenfunction<T>> {
    if !(tol > T::zero()) {
        return domain("normalization tolerance must be positive");
    }
    let mut previous: Option<T> = None;
    for level in 0..8 {
        let order = 6usize << level;
        let mass: T = if spec.n == 3 {
            section_mass_3d(spec, order)?
        } else {
            section_mass_gaussian(spec, order)
        };
        if let Some(prev) = previous {
            if (mass - prev).abs() <= tol * mass.abs() {
                return Ok(AngularEigenfunction {
                    spec,
                    normalization: mass.sqrt().recip(),
                });
            }
        }
        previous = Some(mass);
    }
    Err(Error::Accuracy(format!(
        "normalization of the angular eigenfunction for {spec} did not settle below {tol}"
    )))
}

fn section_mass_3d<T: Real>(spec: ConeSpec, order: usize) -> Result<T> {
    let rule = sphere_rule::<T>(3, order, Some(spec.k), SamplingMode::Deterministic)?;
    let axes = spec.constrained_axes();
    Ok(integrate(&rule, |s| s[axes.clone()].iter().fold(T::one(), |p, &c| p * c * c))?.value)
}

fn section_mass_gaussian<T: Real>(spec: ConeSpec, order: usize) -> T {
    let cutoff = lit::<T>(12.0);
    let line = |power: i32, lo: T| -> T {
        let panels = 8;
        let width = (cutoff - lo) / from_usize::<T>(panels);
        (0..panels)
            .map(|p| {
                let a = lo + width * from_usize::<T>(p);
                let (x, w) = gauss_legendre_on(a, a + width, order);
                x.iter()
                    .zip(&w)
                    .map(|(&t, &wt)| wt * t.powi(power) * (-t * t).exp())
                    .sum::<T>()
            })
            .sum()
    };
    let (n, k) = (spec.n as i32, spec.k as i32);
    // half-line integrals, doubled for the full line
    let gauss0 = lit::<T>(2.0) * line(0, T::zero());
    let gauss2 = lit::<T>(2.0) * line(2, T::zero());
    let lifted = gauss2.powi(k) * gauss0.powi(n - k);
    let radial = line(n + 2 * k - 1, T::zero());
    lifted / radial / lit::<T>((1u64 << spec.k) as f64)
}
