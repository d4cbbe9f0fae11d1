//! Odd-extension bookkeeping: real spherical-harmonic coefficients of `ũ`
//! at `n = 3`, monomial moments for any `n`, and the energy-doubling
//! identities between a cone trial and its odd extension.

use serde::{Deserialize, Serialize};

use crate::cone::ConeSpec;
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_many, DomainTag, QuadratureRule};
use crate::scalar::{dot, from_usize, lit, norm, to_f64, Real};
use crate::trial::{even_extension, odd_extension, Parity, TrialFunction};

pub const MAX_BASIS_DEGREE: usize = 12;
pub const DEFAULT_RADIAL_POINTS: usize = 32;
/// Relative threshold for cancellations that are exact by pairing.
pub const SYMMETRIC_THRESHOLD: f64 = 1e-10;

/// `α ∈ N^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    pub alpha: Vec<u32>,
}

impl MultiIndex {
    pub fn new(alpha: Vec<u32>) -> Self {
        Self { alpha }
    }

    pub fn total_degree(&self) -> u32 {
        self.alpha.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `x^α`.
    pub fn monomial<T: Real>(&self, x: &[T]) -> T {
        self.alpha
            .iter()
            .zip(x)
            .fold(T::one(), |p, (&a, &xi)| p * xi.powi(a as i32))
    }

    /// Every `α ∈ N^n` with `|α| ≤ degree`, graded then lexicographic.
    pub fn all_up_to(n: usize, degree: u32) -> Vec<Self> {
        let mut out = Vec::new();
        for d in 0..=degree {
            let mut current = vec![0u32; n];
            compositions(d, 0, &mut current, &mut out);
        }
        out
    }
}

fn compositions(left: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = left;
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for a in (0..=left).rev() {
        current[pos] = a;
        compositions(left - a, pos + 1, current, out);
    }
    current[pos] = 0;
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.alpha.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Degree `l` and order `m ∈ [-l, l]` of a real harmonic; `m < 0` selects
/// the `sin(|m|φ)` member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisMember {
    pub l: usize,
    pub m: i64,
}

impl BasisMember {
    /// Sign picked up under `x_axis → -x_axis` (`axis` zero-based).
    pub fn parity(&self, axis: usize) -> i32 {
        let (l, m) = (self.l as i64, self.m);
        let odd = |e: i64| if e.rem_euclid(2) == 0 { 1 } else { -1 };
        match axis {
            0 => {
                if m >= 0 {
                    odd(m)
                } else {
                    -odd(m)
                }
            }
            1 => {
                if m >= 0 {
                    1
                } else {
                    -1
                }
            }
            _ => odd(l + m),
        }
    }
}

/// Real orthonormal spherical harmonics on `S²` up to degree `lmax`,
/// indexed by `l² + l + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereBasis {
    lmax: usize,
    members: Vec<BasisMember>,
}

pub fn sphere_basis_n3(lmax: usize) -> Result<SphereBasis> {
    if lmax > MAX_BASIS_DEGREE {
        return domain(format!("basis degree must be <= {MAX_BASIS_DEGREE}, got {lmax}"));
    }
    let members = (0..=lmax)
        .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| BasisMember { l, m }))
        .collect();
    Ok(SphereBasis { lmax, members })
}

impl SphereBasis {
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[BasisMember] {
        &self.members
    }

    pub fn index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    /// All members at the unit vector `s`.
    pub fn eval<T: Real>(&self, s: &[T]) -> Vec<T> {
        let lmax = self.lmax;
        let z = s[2];
        let rho = (s[0] * s[0] + s[1] * s[1]).sqrt();
        let (c1, s1) = if rho > T::zero() {
            (s[0] / rho, s[1] / rho)
        } else {
            (T::one(), T::zero())
        };
        // cos(mφ), sin(mφ) by complex powers, so sign flips stay exact
        let mut cm = vec![T::one(); lmax + 1];
        let mut sm = vec![T::zero(); lmax + 1];
        for m in 1..=lmax {
            cm[m] = cm[m - 1] * c1 - sm[m - 1] * s1;
            sm[m] = sm[m - 1] * c1 + cm[m - 1] * s1;
        }
        let mut out = vec![T::zero(); self.len()];
        let four_pi = lit::<T>(4.0) * T::PI();
        let sqrt2 = lit::<T>(2.0).sqrt();
        let mut pmm = (four_pi).sqrt().recip();
        for m in 0..=lmax {
            if m > 0 {
                let mf = from_usize::<T>(m);
                pmm = pmm * ((mf + mf + T::one()) / (mf + mf)).sqrt() * rho;
            }
            let mut put = |l: usize, p: T| {
                if m == 0 {
                    out[Self::index(l, 0)] = p;
                } else {
                    out[Self::index(l, m as i64)] = sqrt2 * p * cm[m];
                    out[Self::index(l, -(m as i64))] = sqrt2 * p * sm[m];
                }
            };
            put(m, pmm);
            if m == lmax {
                break;
            }
            let mf = from_usize::<T>(m);
            let mut p_prev = pmm;
            let mut p = (mf + mf + lit(3.0)).sqrt() * z * pmm;
            put(m + 1, p);
            for l in m + 2..=lmax {
                let lf = from_usize::<T>(l);
                let a = ((lit::<T>(4.0) * lf * lf - T::one()) / (lf * lf - mf * mf)).sqrt();
                let l1 = lf - T::one();
                let b = ((l1 * l1 - mf * mf) / (lit::<T>(4.0) * l1 * l1 - T::one())).sqrt();
                let next = a * (z * p - b * p_prev);
                p_prev = p;
                p = next;
                put(l, p);
            }
        }
        out
    }
}

/// Chebyshev–Gauss radii on `(0, R)`, increasing.
pub fn chebyshev_radii<T: Real>(radius: T, count: usize) -> Vec<T> {
    let nf = from_usize::<T>(count);
    (0..count)
        .map(|j| {
            let t = (from_usize::<T>(2 * j + 1) * T::PI()) / (nf + nf);
            radius * (T::one() - t.cos()) / lit(2.0)
        })
        .collect()
}

/// `f_{l,m}(r_j) = ∫_{S²} ũ(r_j σ) Y_{l,m}(σ) dσ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HarmonicCoefficients<T: Real> {
    pub lmax: usize,
    pub spec: ConeSpec,
    pub parity: Parity,
    pub radii: Vec<T>,
    pub members: Vec<BasisMember>,
    /// `values[j][i]` for radius `j` and member `i`.
    pub values: Vec<Vec<T>>,
    /// `sup |ũ|` over the sampled points.
    pub sup_norm: T,
    /// Largest `Σ|w ũ Y|` seen; the rounding scale of the projections.
    pub abs_scale: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub r: f64,
    pub l: usize,
    pub m: i64,
    pub value: f64,
}

impl<T: Real> HarmonicCoefficients<T> {
    pub fn get(&self, radius_index: usize, l: usize, m: i64) -> T {
        self.values[radius_index][SphereBasis::index(l, m)]
    }

    pub fn csv_rows(&self) -> Vec<CoefficientRow> {
        let mut rows = Vec::with_capacity(self.radii.len() * self.members.len());
        for (r, vals) in self.radii.iter().zip(&self.values) {
            for (mem, v) in self.members.iter().zip(vals) {
                rows.push(CoefficientRow {
                    r: to_f64(*r),
                    l: mem.l,
                    m: mem.m,
                    value: to_f64(*v),
                });
            }
        }
        rows
    }

    /// Largest `|f_{l,m}(r)|` over `l ≤ degree`, with its location.
    pub fn max_below(&self, degree: usize) -> (T, Option<(usize, i64, T)>) {
        let mut best = (T::zero(), None);
        for (j, vals) in self.values.iter().enumerate() {
            for (mem, v) in self.members.iter().zip(vals) {
                if mem.l <= degree && (best.1.is_none() || v.abs() > best.0) {
                    best = (v.abs(), Some((mem.l, mem.m, self.radii[j])));
                }
            }
        }
        best
    }
}

fn check_full_sphere<T: Real>(rule: &QuadratureRule<T>) -> Result<()> {
    match rule.domain() {
        DomainTag::Sphere { n: 3 } => Ok(()),
        other => domain(format!("harmonic coefficients need a full S² rule, got {other:?}")),
    }
}

fn check_n3(spec: ConeSpec) -> Result<()> {
    if spec.n() != 3 {
        return Err(Error::Capability(format!(
            "harmonic decomposition is implemented for n = 3 only (got {spec}); use the monomial-moment path"
        )));
    }
    Ok(())
}

/// Coefficients of the odd extension of `u`.
pub fn harmonic_coefficients<T: Real>(
    u: &dyn TrialFunction<T>,
    lmax: usize,
    radii: &[T],
    rule: &QuadratureRule<T>,
) -> Result<HarmonicCoefficients<T>> {
    extension_coefficients(u, Parity::Odd, lmax, radii, rule)
}

/// Coefficients of the odd or even extension of `u`.
pub fn extension_coefficients<T: Real>(
    u: &dyn TrialFunction<T>,
    parity: Parity,
    lmax: usize,
    radii: &[T],
    rule: &QuadratureRule<T>,
) -> Result<HarmonicCoefficients<T>> {
    check_n3(u.spec())?;
    check_full_sphere(rule)?;
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > T::zero()) {
        return domain("radial grid must be positive and strictly increasing");
    }
    let basis = sphere_basis_n3(lmax)?;
    let ext = match parity {
        Parity::Odd => odd_extension(u),
        Parity::Even => even_extension(u),
    };
    let ys: Vec<Vec<T>> = rule.nodes().map(|s| basis.eval(s)).collect();
    let mut sup_norm = T::zero();
    let mut abs_scale = T::zero();
    let mut values = Vec::with_capacity(radii.len());
    let mut x = [T::zero(); 3];
    for &r in radii {
        let mut acc = vec![T::zero(); basis.len()];
        let mut abs_acc = T::zero();
        for (i, (s, &w)) in rule.nodes().zip(rule.weights()).enumerate() {
            x.iter_mut().zip(s).for_each(|(xi, si)| *xi = r * *si);
            let v = ext.value(&x);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    index: i,
                    point: x.iter().map(|c| to_f64(*c)).collect(),
                });
            }
            sup_norm = sup_norm.max(v.abs());
            abs_acc += (w * v).abs();
            let wv = w * v;
            acc.iter_mut().zip(&ys[i]).for_each(|(a, y)| *a += wv * *y);
        }
        abs_scale = abs_scale.max(abs_acc);
        values.push(acc);
    }
    Ok(HarmonicCoefficients {
        lmax,
        spec: u.spec(),
        parity,
        radii: radii.to_vec(),
        members: basis.members().to_vec(),
        values,
        sup_norm,
        abs_scale,
    })
}

/// Outcome of the low-degree vanishing test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VanishingReport<T: Real> {
    pub spec: ConeSpec,
    pub parity: Parity,
    /// Degrees `0..=max_degree` are tested (`k - 1`).
    pub max_degree: usize,
    pub max_coefficient: T,
    pub worst: Option<(usize, i64, T)>,
    pub sup_norm: T,
    pub threshold: T,
    pub symmetric_rule: bool,
    pub warning: Option<String>,
    pub passed: bool,
}

/// Checks `f_{l,m} = 0` for `l ≤ k - 1` at every radius. The threshold is
/// `1e-10·sup|ũ|` on rules symmetric in the last `k` axes; otherwise it is
/// raised to the quadrature tolerance and a warning is attached.
pub fn low_degree_vanishing_check<T: Real>(
    u: &dyn TrialFunction<T>,
    rule: &QuadratureRule<T>,
    radii: &[T],
) -> Result<VanishingReport<T>> {
    low_degree_vanishing_check_with(u, Parity::Odd, rule, radii)
}

pub fn low_degree_vanishing_check_with<T: Real>(
    u: &dyn TrialFunction<T>,
    parity: Parity,
    rule: &QuadratureRule<T>,
    radii: &[T],
) -> Result<VanishingReport<T>> {
    let spec = u.spec();
    let max_degree = spec.k() - 1;
    let coeffs = extension_coefficients(u, parity, max_degree, radii, rule)?;
    let (max_coefficient, worst) = coeffs.max_below(max_degree);
    let symmetric_rule = rule.symmetric_last_k(spec.k());
    let (threshold, warning) = if symmetric_rule {
        (lit::<T>(SYMMETRIC_THRESHOLD) * coeffs.sup_norm, None)
    } else {
        (
            lit::<T>(1e-6) * coeffs.sup_norm,
            Some(format!(
                "rule is not symmetric in the last {} axes; threshold raised to quadrature tolerance",
                spec.k()
            )),
        )
    };
    Ok(VanishingReport {
        spec,
        parity,
        max_degree,
        max_coefficient,
        worst,
        sup_norm: coeffs.sup_norm,
        threshold,
        symmetric_rule,
        warning,
        passed: max_coefficient <= threshold,
    })
}

/// `Σ_{l,m} f_{l,m}(r)² ` against `∫_{S²} ũ(rσ)² dσ` at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParsevalSample<T: Real> {
    pub radius: T,
    pub captured: T,
    pub total: T,
    pub defect: T,
}

pub fn parseval_defect<T: Real>(
    coeffs: &HarmonicCoefficients<T>,
    u: &dyn TrialFunction<T>,
    rule: &QuadratureRule<T>,
    radius_index: usize,
) -> Result<ParsevalSample<T>> {
    check_full_sphere(rule)?;
    let r = *coeffs
        .radii
        .get(radius_index)
        .ok_or_else(|| Error::Domain(format!("radius index {radius_index} out of range")))?;
    let ext = match coeffs.parity {
        Parity::Odd => odd_extension(u),
        Parity::Even => even_extension(u),
    };
    let total = integrate_many(rule, |s| {
        let x: Vec<T> = s.iter().map(|c| r * *c).collect();
        let v = ext.value(&x);
        [v * v]
    })?
    .values[0];
    let captured = coeffs.values[radius_index].iter().map(|v| *v * *v).sum::<T>();
    Ok(ParsevalSample {
        radius: r,
        captured,
        total,
        defect: total - captured,
    })
}

/// Truncated series `Σ f_{l,m}(|x|) Y_{l,m}(x/|x|)`, with each `f_{l,m}`
/// interpolated by the local cubic through the four nearest radii.
pub fn reconstruct<T: Real>(coeffs: &HarmonicCoefficients<T>, point: &[T]) -> Result<T> {
    if point.len() != 3 {
        return domain(format!("reconstruction needs a point in R³, got dimension {}", point.len()));
    }
    let r = norm(point);
    let (lo, hi) = (coeffs.radii[0], *coeffs.radii.last().expect("nonempty grid"));
    if !(r >= lo && r <= hi) {
        return domain(format!("radius {r} outside the sampled range [{lo}, {hi}]"));
    }
    let basis = sphere_basis_n3(coeffs.lmax)?;
    let s: Vec<T> = point.iter().map(|c| *c / r).collect();
    let y = basis.eval(&s);
    let stencil = cubic_stencil(&coeffs.radii, r);
    let mut total = T::zero();
    for (i, yi) in y.iter().enumerate() {
        let f = stencil.iter().map(|&(j, w)| w * coeffs.values[j][i]).sum::<T>();
        total += f * *yi;
    }
    Ok(total)
}

/// Lagrange weights on the (up to) four grid radii nearest to `r`.
fn cubic_stencil<T: Real>(grid: &[T], r: T) -> Vec<(usize, T)> {
    let n = grid.len();
    if n == 1 {
        return vec![(0, T::one())];
    }
    let upper = grid.partition_point(|g| *g < r).clamp(1, n - 1);
    let width = n.min(4);
    let start = (upper as i64 - 2).clamp(0, (n - width) as i64) as usize;
    let idx: Vec<usize> = (start..start + width).collect();
    idx.iter()
        .map(|&j| {
            let w = idx
                .iter()
                .filter(|&&i| i != j)
                .fold(T::one(), |p, &i| p * (r - grid[i]) / (grid[j] - grid[i]));
            (j, w)
        })
        .collect()
}

/// Energy and Hardy integrals of `ũ` rebuilt from its harmonic
/// coefficients: `Σ ∫ (f'² + l(l+1) f²/r²) r² dr` over `Σ ∫ f² dr`, with
/// `f_{l,m}` and `f'_{l,m}` projected at every node of `radial`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpectralQuotient<T: Real> {
    pub energy: T,
    pub hardy: T,
    pub quotient: T,
}

pub fn spectral_quotient<T: Real>(
    u: &dyn TrialFunction<T>,
    lmax: usize,
    radial: &QuadratureRule<T>,
    rule: &QuadratureRule<T>,
) -> Result<SpectralQuotient<T>> {
    check_n3(u.spec())?;
    check_full_sphere(rule)?;
    if !matches!(radial.domain(), DomainTag::Radial { .. }) {
        return domain("spectral quotient needs a radial rule");
    }
    let basis = sphere_basis_n3(lmax)?;
    let ext = odd_extension(u);
    let ys: Vec<Vec<T>> = rule.nodes().map(|s| basis.eval(s)).collect();
    let mut energy = T::zero();
    let mut hardy = T::zero();
    let mut g = [T::zero(); 3];
    let mut x = [T::zero(); 3];
    for (rn, &wr) in radial.nodes().zip(radial.weights()) {
        let r = rn[0];
        let mut f = vec![T::zero(); basis.len()];
        let mut fp = vec![T::zero(); basis.len()];
        for (i, (s, &w)) in rule.nodes().zip(rule.weights()).enumerate() {
            x.iter_mut().zip(s).for_each(|(xi, si)| *xi = r * *si);
            let v = w * ext.value(&x);
            ext.gradient(&x, &mut g);
            let d = w * dot(&g, s);
            for (j, y) in ys[i].iter().enumerate() {
                f[j] += v * *y;
                fp[j] += d * *y;
            }
        }
        for (j, mem) in basis.members().iter().enumerate() {
            let c = from_usize::<T>(mem.l * (mem.l + 1));
            energy += wr * (fp[j] * fp[j] * r * r + c * f[j] * f[j]);
            hardy += wr * f[j] * f[j];
        }
    }
    if !(hardy > T::zero()) {
        return Err(Error::Degenerate("spectral quotient of a zero function".into()));
    }
    Ok(SpectralQuotient {
        energy,
        hardy,
        quotient: energy / hardy,
    })
}

/// `∫ ũ(x) w(|x|) x^α dx` over a full-space rule. `|α| ≥ k` is rejected.
pub fn monomial_moment<T: Real>(
    u: &dyn TrialFunction<T>,
    alpha: &MultiIndex,
    weight: &dyn Fn(T) -> T,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let k = u.spec().k();
    if alpha.total_degree() as usize >= k {
        return Err(Error::Precondition(format!(
            "moment vanishing needs |α| <= k - 1 = {}, got |α| = {} for α = {alpha}",
            k - 1,
            alpha.total_degree()
        )));
    }
    Ok(raw_monomial_moment(u, alpha, weight, rule)?.0)
}

/// The moment and `∫|ũ w x^α|`, without the degree precondition.
pub fn raw_monomial_moment<T: Real>(
    u: &dyn TrialFunction<T>,
    alpha: &MultiIndex,
    weight: &dyn Fn(T) -> T,
    rule: &QuadratureRule<T>,
) -> Result<(T, T)> {
    let n = u.spec().n();
    if alpha.dim() != n {
        return domain(format!("multi-index {alpha} has dimension {}, expected {n}", alpha.dim()));
    }
    match rule.domain() {
        DomainTag::Ball { n: m, .. } if m == n => {}
        other => return domain(format!("moments need a full ball rule in R^{n}, got {other:?}")),
    }
    let ext = odd_extension(u);
    let ints = integrate_many(rule, |x| {
        let v = ext.value(x) * weight(norm(x)) * alpha.monomial(x);
        [v, v.abs()]
    })?;
    Ok((ints.values[0], ints.values[1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MomentReport<T: Real> {
    pub spec: ConeSpec,
    pub count: usize,
    pub worst_alpha: Option<MultiIndex>,
    /// Largest `|moment| / ∫|integrand|`.
    pub max_relative: T,
    pub threshold: T,
    pub symmetric_rule: bool,
    pub passed: bool,
}

/// Every moment with `|α| ≤ k - 1` must cancel to rounding (`64ε` relative
/// to the absolute integral) on a rule symmetric in the last `k` axes.
pub fn moment_vanishing_check<T: Real>(
    u: &dyn TrialFunction<T>,
    weight: &dyn Fn(T) -> T,
    rule: &QuadratureRule<T>,
) -> Result<MomentReport<T>> {
    let spec = u.spec();
    let mut worst = (T::zero(), None);
    let alphas = MultiIndex::all_up_to(spec.n(), spec.k() as u32 - 1);
    for alpha in &alphas {
        let (m, scale) = raw_monomial_moment(u, alpha, weight, rule)?;
        let rel = if scale > T::zero() { m.abs() / scale } else { T::zero() };
        if worst.1.is_none() || rel > worst.0 {
            worst = (rel, Some(alpha.clone()));
        }
    }
    let symmetric_rule = rule.symmetric_last_k(spec.k());
    let threshold = T::epsilon() * lit(64.0);
    Ok(MomentReport {
        spec,
        count: alphas.len(),
        worst_alpha: worst.1,
        max_relative: worst.0,
        threshold,
        symmetric_rule,
        passed: symmetric_rule && worst.0 <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DoublingReport<T: Real> {
    pub spec: ConeSpec,
    pub cone_energy: T,
    pub full_energy: T,
    pub cone_hardy: T,
    pub full_hardy: T,
    pub expected: T,
    pub energy_ratio: T,
    pub hardy_ratio: T,
    pub tolerance: T,
    /// `None` when `u` vanishes on the rule and the ratios are undefined.
    pub passed: Option<bool>,
}

/// Compares `∫|∇ũ|²` and `∫ũ²/|x|²` over `full` with `2^k` times the cone
/// integrals over `cone`. `full` must be a ball rule in the same dimension;
/// on `cone.mirrored(k)` both ratios are `2^k` to rounding.
pub fn energy_doubling_check<T: Real>(
    u: &dyn TrialFunction<T>,
    cone: &QuadratureRule<T>,
    full: &QuadratureRule<T>,
) -> Result<DoublingReport<T>> {
    let spec = u.spec();
    match (cone.domain(), full.domain()) {
        (DomainTag::ConeBall { n, k, .. }, DomainTag::Ball { n: m, .. }) if n == spec.n() && k == spec.k() && m == n => {}
        (a, b) => return domain(format!("doubling needs a cone-ball and a ball rule for {spec}, got {a:?} and {b:?}")),
    }
    let n = spec.n();
    let pair = |v: &dyn TrialFunction<T>, rule: &QuadratureRule<T>| {
        integrate_many(rule, |x| {
            let mut g = vec![T::zero(); n];
            v.gradient(x, &mut g);
            let val = v.value(x);
            [dot(&g, &g), val * val / dot(x, x)]
        })
    };
    let c = pair(u, cone)?;
    let ext = odd_extension(u);
    let f = pair(&ext, full)?;
    let expected = from_usize::<T>(1usize << spec.k());
    let degenerate = !(c.values[0] > T::zero()) || !(c.values[1] > T::zero());
    let (energy_ratio, hardy_ratio) = if degenerate {
        (T::nan(), T::nan())
    } else {
        (f.values[0] / c.values[0], f.values[1] / c.values[1])
    };
    let tolerance = lit::<T>(SYMMETRIC_THRESHOLD);
    let close = |r: T| ((r - expected) / expected).abs() <= tolerance;
    Ok(DoublingReport {
        spec,
        cone_energy: c.values[0],
        full_energy: f.values[0],
        cone_hardy: c.values[1],
        full_hardy: f.values[1],
        expected,
        energy_ratio,
        hardy_ratio,
        tolerance,
        passed: (!degenerate).then(|| close(energy_ratio) && close(hardy_ratio)),
    })
}
