//! Refinement studies: observed order of accuracy and Richardson
//! extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// How the error sequence behaved under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceClass {
    /// Differences shrink at a steady algebraic rate.
    Algebraic,
    /// Differences collapse faster than any algebraic order we would trust,
    /// or reach rounding level.
    Spectral,
    /// All values coincide.
    Exact,
    /// Differences did not shrink monotonically; the order is not reported.
    NonMonotone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConvergenceTable<T: Real> {
    pub resolution: Vec<usize>,
    pub value: Vec<T>,
    /// Order from the last three rows; NaN unless `class` is algebraic or spectral.
    pub estimated_order: T,
    pub extrapolated: T,
    pub class: ConvergenceClass,
}

/// Orders above this are reported as spectral.
pub const SPECTRAL_ORDER_THRESHOLD: f64 = 8.0;

impl<T: Real> ConvergenceTable<T> {
    /// Builds the table from values at strictly increasing resolutions,
    /// where the mesh width scales like `1/resolution`.
    pub fn from_values(resolution: Vec<usize>, value: Vec<T>) -> Result<Self> {
        if resolution.len() != value.len() {
            return Err(Error::Domain("resolution and value lengths differ".into()));
        }
        if resolution.len() < 3 {
            return Err(Error::Domain(format!(
                "a convergence study needs at least 3 resolutions, got {}",
                resolution.len()
            )));
        }
        if resolution.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("resolutions must be strictly increasing".into()));
        }
        let m = value.len();
        let last = value[m - 1];
        let diffs: Vec<T> = value.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let scale = value.iter().fold(T::zero(), |a, v| a.max(v.abs())).max(T::min_positive_value());
        let rounding = lit::<T>(64.0) * T::epsilon() * scale;

        if diffs.iter().all(|d| *d == T::zero()) {
            return Ok(Self {
                resolution,
                value,
                estimated_order: T::nan(),
                extrapolated: last,
                class: ConvergenceClass::Exact,
            });
        }
        let (d_prev, d_last) = (diffs[diffs.len() - 2], diffs[diffs.len() - 1]);
        if d_last <= rounding {
            return Ok(Self {
                resolution,
                value,
                estimated_order: T::infinity(),
                extrapolated: last,
                class: ConvergenceClass::Spectral,
            });
        }
        let monotone = diffs.windows(2).all(|w| w[1] < w[0]);
        if !monotone {
            return Ok(Self {
                resolution,
                value,
                estimated_order: T::nan(),
                extrapolated: last,
                class: ConvergenceClass::NonMonotone,
            });
        }
        let ratio_last = from_usize::<T>(resolution[m - 1]) / from_usize::<T>(resolution[m - 2]);
        let ratio_prev = from_usize::<T>(resolution[m - 2]) / from_usize::<T>(resolution[m - 3]);
        // assumes a common refinement ratio across the last three rows
        let refine = (ratio_last * ratio_prev).sqrt();
        let order = (d_prev / d_last).ln() / refine.ln();
        let class = if order > lit(SPECTRAL_ORDER_THRESHOLD) {
            ConvergenceClass::Spectral
        } else {
            ConvergenceClass::Algebraic
        };
        let extrapolated = match class {
            ConvergenceClass::Algebraic => {
                let factor = ratio_last.powf(order) - T::one();
                last + (last - value[m - 2]) / factor
            }
            _ => last,
        };
        Ok(Self {
            resolution,
            value,
            estimated_order: order,
            extrapolated,
            class,
        })
    }

    /// Richardson extrapolation with a prescribed order, using the two finest rows.
    pub fn extrapolate_with_order(&self, order: T) -> T {
        let m = self.value.len();
        let ratio = from_usize::<T>(self.resolution[m - 1]) / from_usize::<T>(self.resolution[m - 2]);
        let last = self.value[m - 1];
        last + (last - self.value[m - 2]) / (ratio.powf(order) - T::one())
    }
}

/// Evaluates `evaluate` at each resolution and tabulates the result.
pub fn convergence_study<T: Real>(
    resolutions: &[usize],
    mut evaluate: impl FnMut(usize) -> Result<T>,
) -> Result<ConvergenceTable<T>> {
    let values = resolutions
        .iter()
        .map(|&r| evaluate(r))
        .collect::<Result<Vec<T>>>()?;
    ConvergenceTable::from_values(resolutions.to_vec(), values)
}

/// Polynomial extrapolation of `(h_i, y_i)` to `h = 0` by Neville's scheme.
///
/// With `h` halving at each step this is repeated Richardson extrapolation
/// for an error expansion in integer powers of `h`.
pub fn extrapolate_to_zero<T: Real>(h: &[T], y: &[T]) -> Result<T> {
    if h.len() != y.len() || h.is_empty() {
        return Err(Error::Domain("extrapolation needs matching, non-empty samples".into()));
    }
    let mut p = y.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (h[i], h[i + level]);
            if hi == hj {
                return Err(Error::Domain("extrapolation abscissae must be distinct".into()));
            }
            p[i] = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
        }
    }
    Ok(p[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_legendre_on, integrate, radial_rule};
    use approx::assert_relative_eq;

    #[test]
    fn second_order_scheme_reports_order_two() {
        // composite midpoint rule for ∫_0^1 e^x dx
        let truth = 1f64.exp() - 1.0;
        let table = convergence_study(&[8, 16, 32, 64], |m| {
            let h = 1.0 / m as f64;
            Ok((0..m).map(|i| h * ((i as f64 + 0.5) * h).exp()).sum::<f64>())
        })
        .unwrap();
        assert_eq!(table.class, ConvergenceClass::Algebraic);
        assert!((table.estimated_order - 2.0).abs() < 0.2);
        assert!((table.extrapolated - truth).abs() < 1e-7);
    }

    #[test]
    fn gauss_rules_are_spectral() {
        let table = convergence_study(&[4, 8, 16, 32], |m| {
            let (x, w) = gauss_legendre_on(0.0f64, 1.0, m);
            Ok(x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum::<f64>())
        })
        .unwrap();
        assert_eq!(table.class, ConvergenceClass::Spectral);
    }

    #[test]
    fn identical_values_extrapolate_to_themselves() {
        let table = ConvergenceTable::from_values(vec![1, 2, 4], vec![0.75f64; 3]).unwrap();
        assert_eq!(table.class, ConvergenceClass::Exact);
        assert_eq!(table.extrapolated, 0.75);
    }

    #[test]
    fn non_monotone_errors_are_flagged() {
        let table = ConvergenceTable::from_values(vec![1, 2, 4, 8], vec![1.0f64, 0.5, 0.45, 0.2]).unwrap();
        assert_eq!(table.class, ConvergenceClass::NonMonotone);
        assert!(table.estimated_order.is_nan());
    }

    #[test]
    fn rejects_short_or_unsorted_input() {
        assert!(ConvergenceTable::from_values(vec![1, 2], vec![1.0f64, 2.0]).is_err());
        assert!(ConvergenceTable::from_values(vec![1, 4, 2], vec![1.0f64, 2.0, 3.0]).is_err());
    }

    #[test]
    fn neville_removes_polynomial_error() {
        let h = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = h.iter().map(|h| 2.25 + h + h * h - 0.3 * h * h * h).collect();
        assert_relative_eq!(extrapolate_to_zero(&h, &y).unwrap(), 2.25, max_relative = 1e-13);
    }

    #[test]
    fn refinement_does_not_increase_error_on_smooth_family() {
        // statistical monotonicity across a family of smooth integrands
        let family: Vec<f64> = (1..=8).map(|j| j as f64 * 0.7).collect();
        let mut worse = 0;
        for a in &family {
            let truth = (1.0 - (-a).exp()) / a;
            let err = |pts| {
                let rule = radial_rule(1.0f64, pts, 2.0).unwrap();
                (integrate(&rule, |r| (-a * r[0]).exp()).unwrap().value - truth).abs()
            };
            if err(64) > err(32) + 1e-15 {
                worse += 1;
            }
        }
        assert!(worse <= 1);
    }
}
