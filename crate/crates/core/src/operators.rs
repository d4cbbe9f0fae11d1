//! Pointwise finite-difference checks of the operator identities behind the
//! Hardy inequalities, harmonicity of the orthant monomial, and a spherical
//! Laplacian evaluated through the degree-0 homogeneous extension.
//!
//! All stencils are the 3-point centered second difference per axis and
//! the centered first difference.

use serde::{Deserialize, Serialize};

use crate::cone::{principal_eigenvalue, AngularEigenfunction, ConeSpec};
use crate::error::{domain, Error, Result};
use crate::scalar::{from_usize, lit, norm, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResidualSample<T: Real> {
    pub point: Vec<T>,
    pub step: T,
    pub residual: T,
    /// Filled in by [`residual_sweep`] from at least 3 steps.
    pub order_estimate: Option<T>,
}

/// A dyadic step sweep at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResidualSweep<T: Real> {
    pub samples: Vec<ResidualSample<T>>,
    /// Least-squares slope of `ln residual` against `ln h`.
    pub order: Option<T>,
    /// Every residual is below [`rounding_floor`]: the two discretizations
    /// agree identically and no truncation order is observable.
    pub at_rounding: bool,
}

/// Residual size attributable to rounding in a second difference of an
/// `O(1)` field: `100 ε / h²`.
pub fn rounding_floor<T: Real>(h: T) -> T {
    lit::<T>(100.0) * T::epsilon() / (h * h)
}

/// `h_j = h0 · 2^{-j}` for `j = 0..count`.
pub fn dyadic_steps<T: Real>(h0: T, count: usize) -> Vec<T> {
    (0..count).map(|j| h0 / lit::<T>(2f64.powi(j as i32))).collect()
}

/// Least-squares slope of `ln y` on `ln x`; `None` with fewer than 3 points
/// or any nonpositive value.
pub fn log_log_slope<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() < 3 || x.len() != y.len() || y.iter().chain(x).any(|v| !(*v > T::zero())) {
        return None;
    }
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let m = from_usize::<T>(x.len());
    let mx = lx.iter().copied().sum::<T>() / m;
    let my = ly.iter().copied().sum::<T>() / m;
    let sxy = lx.iter().zip(&ly).map(|(a, b)| (*a - mx) * (*b - my)).sum::<T>();
    let sxx = lx.iter().map(|a| (*a - mx) * (*a - mx)).sum::<T>();
    Some(sxy / sxx)
}

/// Evaluates `sample` at each step and attaches the observed order to every
/// sample.
pub fn residual_sweep<T: Real>(
    steps: &[T],
    mut sample: impl FnMut(T) -> Result<ResidualSample<T>>,
) -> Result<ResidualSweep<T>> {
    let mut samples = steps.iter().map(|&h| sample(h)).collect::<Result<Vec<_>>>()?;
    let hs: Vec<T> = samples.iter().map(|s| s.step).collect();
    let rs: Vec<T> = samples.iter().map(|s| s.residual).collect();
    let order = log_log_slope(&hs, &rs);
    for s in &mut samples {
        s.order_estimate = order;
    }
    let at_rounding = samples.iter().all(|s| s.residual <= rounding_floor(s.step));
    Ok(ResidualSweep {
        samples,
        order,
        at_rounding,
    })
}

fn second_difference<T: Real>(f: &impl Fn(&[T]) -> T, x: &[T], j: usize, h: T, centre: T) -> T {
    let mut y = x.to_vec();
    y[j] = x[j] + h;
    let plus = f(&y);
    y[j] = x[j] - h;
    let minus = f(&y);
    (plus - centre - centre + minus) / (h * h)
}

fn first_difference<T: Real>(f: &impl Fn(&[T]) -> T, x: &[T], j: usize, h: T) -> T {
    let mut y = x.to_vec();
    y[j] = x[j] + h;
    let plus = f(&y);
    y[j] = x[j] - h;
    let minus = f(&y);
    (plus - minus) / (h + h)
}

/// `Σ_j D²_j f(x)`.
pub fn stencil_laplacian<T: Real>(f: impl Fn(&[T]) -> T, x: &[T], h: T) -> T {
    let centre = f(x);
    let mut sum = T::zero();
    for j in 0..x.len() {
        sum += second_difference(&f, x, j, h, centre);
    }
    sum
}

fn check_step<T: Real>(h: T) -> Result<()> {
    if !(h > T::zero() && h.is_finite()) {
        return domain(format!("stencil step must be positive, got {h}"));
    }
    Ok(())
}

fn check_clearance<T: Real>(x: &[T], axes: std::ops::Range<usize>, h: T) -> Result<()> {
    for j in axes {
        if !(x[j] > h) {
            return domain(format!(
                "stencil of width {h} at x_{} = {} crosses the boundary",
                j + 1,
                x[j]
            ));
        }
    }
    Ok(())
}

/// Residual of
/// `x_n^{-l}(-Δ + l(l-1)/x_n²)(x_n^l g) = -(Δ + (2l/x_n)∂_n) g`
/// with both sides discretized by centered stencils of width `h`.
pub fn weighted_conjugation_residual<T: Real>(g: impl Fn(&[T]) -> T, l: T, x: &[T], h: T) -> Result<ResidualSample<T>> {
    check_step(h)?;
    if !(l >= T::zero()) {
        return domain(format!("exponent l must be nonnegative, got {l}"));
    }
    let n = x.len();
    check_clearance(x, n - 1..n, h)?;
    let xn = x[n - 1];
    let weighted = |y: &[T]| y[n - 1].powf(l) * g(y);
    let lhs = -stencil_laplacian(weighted, x, h) / xn.powf(l) + l * (l - T::one()) * g(x) / (xn * xn);
    let rhs = -(stencil_laplacian(&g, x, h) + (l + l) / xn * first_difference(&g, x, n - 1, h));
    finish(x, h, lhs, rhs)
}

/// Residual of
/// `-(∏x_i)^{-1} Δ(∏x_i · g) = -Σ_{j≤n-k} ∂_j²g - Σ_{j>n-k}(∂_j² + (2/x_j)∂_j) g`
/// for the monomial over the last `k` coordinates. At `k = 1` every
/// floating-point operation coincides with [`weighted_conjugation_residual`] at
/// `l = 1`.
///
/// The monomial is linear in each variable, and for such factors the
/// discrete product rule `D²(x_j g) = x_j D²g + 2 D_j g` is exact, so this
/// residual sits at rounding level for every `h`.
pub fn monomial_conjugation_residual<T: Real>(
    g: impl Fn(&[T]) -> T,
    spec: ConeSpec,
    x: &[T],
    h: T,
) -> Result<ResidualSample<T>> {
    check_step(h)?;
    if x.len() != spec.n() {
        return domain(format!("point has {} coordinates, expected {}", x.len(), spec.n()));
    }
    check_clearance(x, spec.constrained_axes(), h)?;
    let axes = spec.constrained_axes();
    let monomial = |y: &[T]| y[axes.clone()].iter().fold(T::one(), |p, &c| p * c);
    let weighted = |y: &[T]| monomial(y) * g(y);
    let zero = T::zero();
    let lhs = -stencil_laplacian(weighted, x, h) / monomial(x) + zero * g(x);
    let mut inner = stencil_laplacian(&g, x, h);
    for j in axes.clone() {
        inner += (T::one() + T::one()) / x[j] * first_difference(&g, x, j, h);
    }
    finish(x, h, lhs, -inner)
}

fn finish<T: Real>(x: &[T], h: T, lhs: T, rhs: T) -> Result<ResidualSample<T>> {
    let residual = (lhs - rhs).abs();
    if !residual.is_finite() {
        return Err(Error::Evaluation {
            index: 0,
            point: x.iter().map(|v| crate::scalar::to_f64(*v)).collect(),
        });
    }
    Ok(ResidualSample {
        point: x.to_vec(),
        step: h,
        residual,
        order_estimate: None,
    })
}

/// `|Δ ∏_{i>n-k} x_i|` by stencil; zero up to rounding because every
/// variable enters to the first power.
pub fn orthant_monomial_harmonicity<T: Real>(spec: ConeSpec, x: &[T], h: T) -> Result<ResidualSample<T>> {
    check_step(h)?;
    if x.len() != spec.n() {
        return domain(format!("point has {} coordinates, expected {}", x.len(), spec.n()));
    }
    let axes = spec.constrained_axes();
    let lap = stencil_laplacian(|y: &[T]| y[axes.clone()].iter().fold(T::one(), |p, &c| p * c), x, h);
    Ok(ResidualSample {
        point: x.to_vec(),
        step: h,
        residual: lap.abs(),
        order_estimate: None,
    })
}

/// `Δ_{S^{n-1}} φ(σ)`, computed as the ambient stencil Laplacian of
/// `x ↦ φ(x/|x|)` at `x = σ`.
pub fn laplace_beltrami_apply<T: Real>(phi: impl Fn(&[T]) -> T, sigma: &[T], h: T) -> Result<T> {
    check_step(h)?;
    let r = norm(sigma);
    if !((r - T::one()).abs() <= lit(1e-12)) {
        return domain(format!("laplace_beltrami_apply needs a unit vector, got |σ| = {r}"));
    }
    let extension = |x: &[T]| {
        let rx = norm(x);
        let s: Vec<T> = x.iter().map(|&c| c / rx).collect();
        phi(&s)
    };
    Ok(stencil_laplacian(extension, sigma, h))
}

/// Root-mean-square of `Δ_S φ_k + λ₁ φ_k` over `probes`, at step `h`.
pub fn eigen_relation_residual<T: Real>(
    phi: &AngularEigenfunction<T>,
    probes: &[Vec<T>],
    h: T,
) -> Result<ResidualSample<T>> {
    if probes.is_empty() {
        return domain("eigen-relation residual needs at least one probe");
    }
    let lambda = lit::<T>(principal_eigenvalue(phi.spec()) as f64);
    let mut acc = T::zero();
    for s in probes {
        let lap = laplace_beltrami_apply(|y: &[T]| phi.value(y), s, h)?;
        let d = lap + lambda * phi.value(s);
        acc += d * d;
    }
    Ok(ResidualSample {
        point: Vec::new(),
        step: h,
        residual: (acc / from_usize::<T>(probes.len())).sqrt(),
        order_estimate: None,
    })
}

/// `count` seeded unit vectors in the open section whose distance to every
/// cut plane is at least `clearance`.
pub fn section_probes<T: Real>(spec: ConeSpec, count: usize, clearance: T, seed: u64) -> Result<Vec<Vec<T>>> {
    use rand::{Rng, SeedableRng};
    let limit = T::one() / from_usize::<T>(spec.k()).sqrt();
    if !(clearance >= T::zero() && clearance < limit) {
        return domain(format!("probe clearance must lie in [0, {limit}), got {clearance}"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut x: Vec<T> = (0..n).map(|_| lit::<T>(rng.random_range(-1.0..1.0))).collect();
        for j in spec.constrained_axes() {
            x[j] = x[j].abs();
        }
        let r = norm(&x);
        if !(r > lit(0.25) && r <= T::one()) {
            continue;
        }
        x.iter_mut().for_each(|v| *v = *v / r);
        if spec.boundary_distance(&x) >= clearance {
            out.push(x);
        }
    }
    Ok(out)
}

/// A named smooth field on `R^n`.
pub struct TestField<T> {
    pub name: &'static str,
    pub f: Box<dyn Fn(&[T]) -> T + Send + Sync>,
}

/// Five smooth, non-polynomial fields defined for every `n >= 3`.
pub fn smooth_test_fields<T: Real>() -> Vec<TestField<T>> {
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    vec![
        TestField {
            name: "exp_sin",
            f: Box::new(|x: &[T]| x[0].exp() * x[x.len() - 1].sin()),
        },
        TestField {
            name: "cos_mix",
            f: Box::new(move |x: &[T]| (x[0] + two * x[1]).cos() * (-x[x.len() - 1]).exp()),
        },
        TestField {
            name: "rational",
            f: Box::new(|x: &[T]| (T::one() + crate::scalar::dot(x, x)).recip()),
        },
        TestField {
            name: "sin_sum",
            f: Box::new(|x: &[T]| x.iter().copied().sum::<T>().sin() * (T::one() + x[0])),
        },
        TestField {
            name: "gaussian",
            f: Box::new(move |x: &[T]| {
                (-x.iter().map(|&c| (c - half) * (c - half)).sum::<T>()).exp()
            }),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::angular_eigenfunction;

    #[test]
    fn quadratic_fields_are_resolved_exactly() {
        let g = |x: &[f64]| 1.0 + x[0] * x[0] - 2.0 * x[1] * x[2] + x[2] * x[2];
        let s = weighted_conjugation_residual(g, 1.0, &[0.3, -0.2, 0.7], 1e-3).unwrap();
        assert!(s.residual < 1e-8, "{}", s.residual);
    }

    #[test]
    fn l_zero_is_trivial() {
        let g = |x: &[f64]| x[0].exp() * x[2].sin();
        let s = weighted_conjugation_residual(g, 0.0, &[0.3, -0.2, 0.7], 1e-2).unwrap();
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn weighted_conjugation_converges_at_second_order() {
        let g = |x: &[f64]| x[0].exp() * x[2].sin();
        let sweep = residual_sweep(&dyadic_steps(0.1, 6), |h| weighted_conjugation_residual(g, 1.5, &[0.2, 0.1, 0.8], h))
            .unwrap();
        let order = sweep.order.unwrap();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn monomial_conjugation_is_exact_at_the_discrete_level() {
        let spec = ConeSpec::new(4, 2).unwrap();
        let g = |x: &[f64]| (x[0] + 2.0 * x[1]).cos() * (-x[3]).exp() + x[2] * x[3];
        let sweep =
            residual_sweep(&dyadic_steps(0.1, 6), |h| monomial_conjugation_residual(g, spec, &[0.1, 0.2, 0.7, 0.9], h)).unwrap();
        assert!(sweep.at_rounding);
    }

    #[test]
    fn monomial_conjugation_at_k1_matches_weighted_bit_for_bit() {
        let spec = ConeSpec::new(3, 1).unwrap();
        for field in smooth_test_fields::<f64>() {
            for h in dyadic_steps(0.1, 5) {
                let x = [0.3, -0.4, 0.9];
                let a = weighted_conjugation_residual(&field.f, 1.0, &x, h).unwrap();
                let b = monomial_conjugation_residual(&field.f, spec, &x, h).unwrap();
                assert_eq!(a.residual.to_bits(), b.residual.to_bits(), "{}", field.name);
            }
        }
    }

    #[test]
    fn stencils_must_stay_inside() {
        let g = |x: &[f64]| x[0];
        assert!(matches!(weighted_conjugation_residual(g, 1.0, &[0.0, 0.0, 0.05], 0.1), Err(Error::Domain(_))));
        let spec = ConeSpec::new(3, 2).unwrap();
        assert!(monomial_conjugation_residual(g, spec, &[0.0, 0.05, 0.5], 0.1).is_err());
    }

    #[test]
    fn orthant_monomial_is_harmonic_and_square_is_not() {
        let s = orthant_monomial_harmonicity(ConeSpec::new(3, 1).unwrap(), &[0.2, 0.3, 0.4], 1e-3).unwrap();
        assert!(s.residual < 1e-12);
        let s = orthant_monomial_harmonicity(ConeSpec::new(5, 3).unwrap(), &[0.2, 0.3, 0.4, 0.5, 0.6], 1e-3).unwrap();
        assert!(s.residual < 1e-10);
        let control = stencil_laplacian(|x: &[f64]| x[2] * x[2], &[0.2, 0.3, 0.4], 1e-3);
        assert!((control - 2.0).abs() < 1e-6);
    }

    #[test]
    fn spherical_laplacian_of_low_harmonics() {
        let s = [0.48, 0.6, 0.64];
        let v = laplace_beltrami_apply(|y: &[f64]| y[2], &s, 1e-3).unwrap();
        assert!((v + 2.0 * 0.64).abs() < 1e-5);
        let c = laplace_beltrami_apply(|_: &[f64]| 1.0, &s, 1e-3).unwrap();
        assert!(c.abs() < 1e-9);
        let phi = angular_eigenfunction::<f64>(ConeSpec::new(3, 2).unwrap(), 1e-10).unwrap();
        let v = laplace_beltrami_apply(|y: &[f64]| phi.value(y), &s, 1e-3).unwrap();
        assert!((v + 6.0 * phi.value(&s)).abs() < 1e-5);
        assert!(laplace_beltrami_apply(|y: &[f64]| y[0], &[1.0, 1.0, 0.0], 1e-3).is_err());
    }

    #[test]
    fn slope_needs_three_positive_points() {
        assert!(log_log_slope(&[1.0, 2.0], &[1.0, 4.0]).is_none());
        let s: f64 = log_log_slope(&[1.0, 2.0, 4.0], &[1.0, 4.0, 16.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }
}
