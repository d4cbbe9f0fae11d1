//! Principal Dirichlet eigenvalue of `-Δ` on the spherical sections
//! `S² ∩ R³_{k+}` (hemisphere, quarter sphere, octant) by a finite-volume
//! discretization in spherical coordinates and inverse iteration, plus the
//! angular Rayleigh quotient of `φ_k` in any dimension.
//!
//! Axes are oriented so that every Dirichlet edge is a coordinate line:
//!
//! * `k = 1`: polar axis `e₃`, `θ ∈ (0, π/2)`, periodic azimuth; the equator
//!   is Dirichlet and the pole is an interior closure point.
//! * `k = 2`: polar axis `e₁`, `θ ∈ (0, π)`, `φ ∈ (0, π/2)` with
//!   `σ₂ = sinθ cosφ`, `σ₃ = sinθ sinφ`; both poles lie on the boundary.
//! * `k = 3`: polar axis `e₃`, `θ ∈ (0, π/2)`, `φ ∈ (0, π/2)`.

use serde::{Deserialize, Serialize};

use crate::cone::{angular_eigenfunction, principal_eigenvalue, ConeSpec};
use crate::convergence::{ConvergenceClass, ConvergenceTable};
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_many, DomainTag, QuadratureRule};
use crate::scalar::{dot, from_usize, lit, to_f64, Real};

/// Node layout on one spherical section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SphericalGrid<T: Real> {
    pub k: usize,
    /// `(θ intervals, φ intervals)`; for the periodic azimuth the second
    /// entry is the number of azimuth nodes.
    pub resolution: (usize, usize),
    /// Colatitudes of the unknown rows.
    pub theta: Vec<T>,
    /// Azimuths of the unknown columns.
    pub phi: Vec<T>,
    pub dtheta: T,
    pub dphi: T,
    pub periodic: bool,
    /// Whether the pole `θ = 0` is closed by averaging the first ring.
    pub pole_closure: bool,
}

impl<T: Real> SphericalGrid<T> {
    pub fn unknowns(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.phi.len() + col
    }

    /// Unit vector of node `(row, col)` in the cone's coordinates.
    pub fn point(&self, row: usize, col: usize) -> [T; 3] {
        let (st, ct) = self.theta[row].sin_cos();
        let (sp, cp) = self.phi[col].sin_cos();
        match self.k {
            2 => [ct, st * cp, st * sp],
            _ => [st * cp, st * sp, ct],
        }
    }

    /// True if every stencil neighbor of the node is itself an unknown.
    pub fn is_interior_row(&self, row: usize, col: usize) -> bool {
        let rows_ok = row > 0 && row + 1 < self.theta.len();
        let cols_ok = self.periodic || (col > 0 && col + 1 < self.phi.len());
        rows_ok && cols_ok
    }
}

/// `(θ, φ)` resolution used for a single refinement level `r`, chosen so
/// that `Δθ` and `Δφ` are comparable.
pub fn grid_resolution(k: usize, r: usize) -> (usize, usize) {
    match k {
        1 => (r, 2 * r),
        2 => (2 * r, r),
        _ => (r, r),
    }
}

pub fn build_grid<T: Real>(k: usize, resolution: (usize, usize)) -> Result<SphericalGrid<T>> {
    if !(1..=3).contains(&k) {
        return Err(Error::Capability(format!(
            "grid eigensolves exist for k = 1, 2, 3 on S² only (got k = {k}); use angular_rayleigh for general n"
        )));
    }
    let (nt, np) = resolution;
    if nt < 8 || np < 8 {
        return domain(format!("grid resolution must be >= 8 per direction, got {nt} x {np}"));
    }
    let half_pi = T::FRAC_PI_2();
    let (theta_span, phi_span, periodic) = match k {
        1 => (half_pi, T::PI() + T::PI(), true),
        2 => (T::PI(), half_pi, false),
        _ => (half_pi, half_pi, false),
    };
    let dtheta = theta_span / from_usize::<T>(nt);
    let dphi = phi_span / from_usize::<T>(np);
    let theta = (1..nt).map(|i| from_usize::<T>(i) * dtheta).collect();
    let phi = if periodic {
        (0..np).map(|j| from_usize::<T>(j) * dphi).collect()
    } else {
        (1..np).map(|j| from_usize::<T>(j) * dphi).collect()
    };
    Ok(SphericalGrid {
        k,
        resolution,
        theta,
        phi,
        dtheta,
        dphi,
        periodic,
        pole_closure: k == 1,
    })
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    *val.last_mut().expect("entry present") += v;
                } else {
                    col.push(c);
                    val.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    pub fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[p] * x[self.col[p]];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&p| self.col[p] == i)
                    .map_or(T::zero(), |p| self.val[p])
            })
            .collect()
    }

    pub fn row_sum_norm(&self) -> T {
        (0..self.n)
            .map(|i| self.val[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(|v| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[p];
                let back = (self.row_ptr[j]..self.row_ptr[j + 1])
                    .find(|&q| self.col[q] == i)
                    .map_or(T::zero(), |q| self.val[q]);
                worst = worst.max((self.val[p] - back).abs());
            }
        }
        worst
    }
}

/// Symmetrized operator `A = S^{1/2} L S^{-1/2}` where `L ≈ -Δ_{S²}` and
/// `S = diag(sin θ_i)`; `A` and `L` share their spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalOperator<T: Real> {
    pub grid: SphericalGrid<T>,
    pub matrix: CsrMatrix<T>,
    /// `sqrt(sin θ)` per unknown.
    pub sqrt_weight: Vec<T>,
}

impl<T: Real> SphericalOperator<T> {
    /// `L u` for nodal samples `u` (Dirichlet values taken as 0).
    pub fn apply_laplacian(&self, u: &[T]) -> Vec<T> {
        let v: Vec<T> = u.iter().zip(&self.sqrt_weight).map(|(a, w)| *a * *w).collect();
        let mut out = vec![T::zero(); u.len()];
        self.matrix.apply(&v, &mut out);
        out.iter_mut().zip(&self.sqrt_weight).for_each(|(o, w)| *o = *o / *w);
        out
    }
}

/// Finite-volume `-(1/sinθ)∂_θ(sinθ ∂_θ) - (1/sin²θ)∂_φ²` with
/// Dirichlet rows eliminated, symmetrized with the `sinθ` area weight.
pub fn assemble_operator<T: Real>(grid: &SphericalGrid<T>) -> SphericalOperator<T> {
    let (nr, nc) = (grid.theta.len(), grid.phi.len());
    let half = grid.dtheta / lit(2.0);
    let dt2 = grid.dtheta * grid.dtheta;
    let dp2 = grid.dphi * grid.dphi;
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::with_capacity(8); nr * nc];
    for a in 0..nr {
        let t = grid.theta[a];
        let (s, s_up, s_down) = (t.sin(), (t + half).sin(), (t - half).sin());
        let azimuthal = (s * dp2).recip();
        for b in 0..nc {
            let p = grid.index(a, b);
            let row = &mut rows[p];
            row.push((p, (s_up + s_down) / dt2 + azimuthal + azimuthal));
            if a + 1 < nr {
                row.push((grid.index(a + 1, b), -s_up / dt2));
            }
            if a > 0 {
                row.push((grid.index(a - 1, b), -s_down / dt2));
            } else if grid.pole_closure {
                // pole value = mean of the first ring
                let share = -s_down / (dt2 * from_usize::<T>(nc));
                for b2 in 0..nc {
                    row.push((grid.index(0, b2), share));
                }
            }
            if grid.periodic {
                row.push((grid.index(a, (b + 1) % nc), -azimuthal));
                row.push((grid.index(a, (b + nc - 1) % nc), -azimuthal));
            } else {
                if b + 1 < nc {
                    row.push((grid.index(a, b + 1), -azimuthal));
                }
                if b > 0 {
                    row.push((grid.index(a, b - 1), -azimuthal));
                }
            }
        }
    }
    let sqrt_weight: Vec<T> = (0..nr * nc).map(|p| grid.theta[p / nc].sin().sqrt()).collect();
    let mut matrix = CsrMatrix::from_rows(rows);
    for i in 0..matrix.n {
        for q in matrix.row_ptr[i]..matrix.row_ptr[i + 1] {
            let j = matrix.col[q];
            matrix.val[q] = matrix.val[q] / (sqrt_weight[i] * sqrt_weight[j]);
        }
    }
    SphericalOperator {
        grid: grid.clone(),
        matrix,
        sqrt_weight,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EigenResult<T: Real> {
    pub k: usize,
    pub resolution: (usize, usize),
    pub unknowns: usize,
    pub eigenvalue: T,
    pub iterations: usize,
    /// `‖Ax - λx‖ / ‖x‖` at exit.
    pub residual_norm: T,
    /// The eigenvector is single-signed after a global sign fix.
    pub positive: bool,
    pub extrapolated: Option<T>,
}

const OUTER_CAP: usize = 200;

fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

/// Jacobi-preconditioned conjugate gradients for `A y = b`, starting at `y`.
fn pcg<T: Real>(a: &CsrMatrix<T>, inv_diag: &[T], b: &[T], y: &mut [T], rel_tol: T) -> Result<usize> {
    let n = a.n;
    let mut r = vec![T::zero(); n];
    a.apply(y, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = *bi - *ri);
    let target = rel_tol * norm2(b);
    let mut z: Vec<T> = r.iter().zip(inv_diag).map(|(a, d)| *a * *d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let cap = 20 * n + 100;
    for it in 0..cap {
        if norm2(&r) <= target {
            return Ok(it);
        }
        a.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            y[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z.iter_mut().zip(r.iter().zip(inv_diag)).for_each(|(zi, (ri, d))| *zi = *ri * *d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = *zi + beta * *pi);
    }
    Err(Error::Convergence {
        iterations: cap,
        residual: to_f64(norm2(&r) / norm2(b)),
        detail: "inner conjugate-gradient solve stalled".into(),
    })
}

/// Smallest eigenvalue of the symmetric positive definite operator by
/// inverse iteration with CG inner solves. `start` seeds the iteration;
/// without it the interpolated `φ_k` is used.
pub fn smallest_eigenvalue<T: Real>(
    op: &SphericalOperator<T>,
    tol: T,
    start: Option<&[T]>,
) -> Result<EigenResult<T>> {
    let a = &op.matrix;
    let n = a.n;
    let mut x: Vec<T> = match start {
        Some(s) if s.len() == n => s.to_vec(),
        Some(s) => return domain(format!("start vector has length {}, expected {n}", s.len())),
        None => principal_seed(op),
    };
    let nx = norm2(&x);
    if !(nx > T::zero()) {
        return domain("start vector must be nonzero");
    }
    x.iter_mut().for_each(|v| *v = *v / nx);
    let inv_diag: Vec<T> = a.diagonal().into_iter().map(|d| d.recip()).collect();
    let mut ax = vec![T::zero(); n];
    a.apply(&x, &mut ax);
    let mut lambda = dot(&x, &ax);
    let mut residual = T::infinity();
    let inner_tol = (tol * lit(1e-2)).max(T::epsilon() * lit(16.0));
    // residuals cannot drop below rounding in ‖A‖
    let floor = T::epsilon() * lit(100.0) * a.row_sum_norm();
    for it in 1..=OUTER_CAP {
        // initial guess x/λ is exact for an eigenvector
        let mut y: Vec<T> = x.iter().map(|v| *v / lambda).collect();
        pcg(a, &inv_diag, &x, &mut y, inner_tol)?;
        let ny = norm2(&y);
        x = y.into_iter().map(|v| v / ny).collect();
        a.apply(&x, &mut ax);
        lambda = dot(&x, &ax);
        residual = norm2(&ax.iter().zip(&x).map(|(p, q)| *p - lambda * *q).collect::<Vec<_>>());
        if residual <= (tol * lambda.abs()).max(floor) {
            return Ok(finish_eigen(op, &x, lambda, it, residual));
        }
    }
    Err(Error::Convergence {
        iterations: OUTER_CAP,
        residual: to_f64(residual),
        detail: format!("inverse iteration for k = {} at {:?}", op.grid.k, op.grid.resolution),
    })
}

fn finish_eigen<T: Real>(op: &SphericalOperator<T>, x: &[T], lambda: T, iterations: usize, residual: T) -> EigenResult<T> {
    let sum = x.iter().copied().sum::<T>();
    let sign = if sum < T::zero() { -T::one() } else { T::one() };
    let peak = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let floor = -lit::<T>(1e-8) * peak;
    let positive = x.iter().all(|v| sign * *v >= floor);
    EigenResult {
        k: op.grid.k,
        resolution: op.grid.resolution,
        unknowns: x.len(),
        eigenvalue: lambda,
        iterations,
        residual_norm: residual,
        positive,
        extrapolated: None,
    }
}

/// `φ_k` sampled at the nodes, in the symmetrized variables.
fn principal_seed<T: Real>(op: &SphericalOperator<T>) -> Vec<T> {
    let g = &op.grid;
    let mut out = Vec::with_capacity(g.unknowns());
    for a in 0..g.theta.len() {
        for b in 0..g.phi.len() {
            let s = g.point(a, b);
            let m = s[3 - g.k..].iter().fold(T::one(), |p, &c| p * c);
            out.push(m * op.sqrt_weight[g.index(a, b)]);
        }
    }
    out
}

/// Eigenvalue comparison against `k(k+1)` across refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SectionEigenReport<T: Real> {
    pub k: usize,
    pub target: T,
    pub results: Vec<EigenResult<T>>,
    pub table: ConvergenceTable<T>,
    pub extrapolated: T,
    /// Observed order from the last three levels (NaN if not algebraic).
    pub observed_order: T,
    pub relative_error: T,
    pub finest_relative_error: T,
    pub all_positive: bool,
    pub tolerance: T,
    pub passed: bool,
}

/// Solves at each refinement level (see [`grid_resolution`]) and
/// Richardson-extrapolates. The observed order is used when the sequence is
/// algebraic, otherwise order 2. Passes when the extrapolated value is
/// within `tol` (relative) of `k(k+1)`, the finest raw estimate within 1%,
/// and every eigenvector is single-signed.
pub fn verify_section_eigenvalues<T: Real>(k: usize, resolutions: &[usize], tol: T) -> Result<SectionEigenReport<T>> {
    if resolutions.len() < 3 {
        return domain(format!("need at least 3 resolutions, got {}", resolutions.len()));
    }
    let spec = ConeSpec::new(3, k)?;
    let target = lit::<T>(principal_eigenvalue(spec) as f64);
    let solver_tol = lit::<T>(1e-10);
    let results = resolutions
        .iter()
        .map(|&r| {
            let grid = build_grid::<T>(k, grid_resolution(k, r))?;
            smallest_eigenvalue(&assemble_operator(&grid), solver_tol, None)
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<T> = results.iter().map(|r| r.eigenvalue).collect();
    let table = ConvergenceTable::from_values(resolutions.to_vec(), values.clone())?;
    let extrapolated = match table.class {
        ConvergenceClass::Algebraic => table.extrapolated,
        ConvergenceClass::Exact | ConvergenceClass::Spectral => *values.last().expect("nonempty"),
        ConvergenceClass::NonMonotone => table.extrapolate_with_order(lit(2.0)),
    };
    let mut results = results;
    if let Some(last) = results.last_mut() {
        last.extrapolated = Some(extrapolated);
    }
    let relative_error = ((extrapolated - target) / target).abs();
    let finest_relative_error = ((*values.last().expect("nonempty") - target) / target).abs();
    let all_positive = results.iter().all(|r| r.positive);
    Ok(SectionEigenReport {
        k,
        target,
        observed_order: table.estimated_order,
        results,
        table,
        extrapolated,
        relative_error,
        finest_relative_error,
        all_positive,
        tolerance: tol,
        passed: relative_error < tol && finest_relative_error < lit(0.01) && all_positive,
    })
}

/// `∫_Σ |∇_σ φ_k|² / ∫_Σ φ_k²` on a section rule, with standard error on
/// sampled rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AngularRayleigh<T: Real> {
    pub value: T,
    pub std_error: Option<T>,
    pub target: T,
}

pub fn angular_rayleigh<T: Real>(spec: ConeSpec, rule: &QuadratureRule<T>) -> Result<AngularRayleigh<T>> {
    match rule.domain() {
        DomainTag::ConeSection { n, k } if n == spec.n() && k == spec.k() => {}
        other => return domain(format!("angular Rayleigh quotient needs a section rule for {spec}, got {other:?}")),
    }
    let phi = angular_eigenfunction::<T>(spec, lit(1e-12))?;
    let n = spec.n();
    let ints = integrate_many(rule, |s| {
        let mut g = vec![T::zero(); n];
        phi.extension_gradient(s, &mut g);
        let v = phi.value(s);
        [dot(&g, &g), v * v]
    })?;
    Ok(AngularRayleigh {
        value: ints.values[0] / ints.values[1],
        std_error: ints.ratio_std_error(0, 1),
        target: lit(principal_eigenvalue(spec) as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{sphere_rule, SamplingMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_counts() {
        let g = build_grid::<f64>(1, (32, 64)).unwrap();
        assert_eq!((g.theta.len(), g.phi.len()), (31, 64));
        let g3 = build_grid::<f64>(3, (16, 16)).unwrap();
        for a in 0..g3.theta.len() {
            for b in 0..g3.phi.len() {
                assert!(g3.point(a, b).iter().all(|c| *c > 0.0));
            }
        }
        let g2 = build_grid::<f64>(2, (16, 8)).unwrap();
        assert!(g2.point(3, 2)[1] > 0.0 && g2.point(3, 2)[2] > 0.0);
        assert!(matches!(build_grid::<f64>(4, (16, 16)), Err(Error::Capability(_))));
        assert!(build_grid::<f64>(1, (4, 16)).is_err());
    }

    #[test]
    fn operator_is_symmetric_and_consistent() {
        for k in 1..=3 {
            let grid = build_grid::<f64>(k, grid_resolution(k, 16)).unwrap();
            let op = assemble_operator(&grid);
            assert!(op.matrix.asymmetry() < 1e-9 * op.matrix.diagonal().iter().cloned().fold(0.0, f64::max));
            let ones = vec![1.0; grid.unknowns()];
            let image = op.apply_laplacian(&ones);
            for a in 0..grid.theta.len() {
                for b in 0..grid.phi.len() {
                    if grid.is_interior_row(a, b) {
                        assert!(image[grid.index(a, b)].abs() < 1e-8);
                    }
                }
            }
        }
        let grid = build_grid::<f64>(2, (24, 12)).unwrap();
        let op = assemble_operator(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..grid.unknowns()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..grid.unknowns()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mut au, mut av) = (vec![0.0; u.len()], vec![0.0; u.len()]);
        op.matrix.apply(&u, &mut au);
        op.matrix.apply(&v, &mut av);
        assert!((dot(&au, &v) - dot(&u, &av)).abs() < 1e-9 * dot(&au, &au).sqrt());
    }

    #[test]
    fn applying_to_the_height_function_doubles_it() {
        let grid = build_grid::<f64>(1, (64, 128)).unwrap();
        let op = assemble_operator(&grid);
        let u: Vec<f64> = (0..grid.unknowns())
            .map(|p| grid.theta[p / grid.phi.len()].cos())
            .collect();
        let lu = op.apply_laplacian(&u);
        for a in 2..grid.theta.len() - 1 {
            let p = grid.index(a, 5);
            assert!((lu[p] - 2.0 * u[p]).abs() < 1e-3, "row {a}: {} vs {}", lu[p], 2.0 * u[p]);
        }
    }

    #[test]
    fn eigenvalues_at_moderate_resolution() {
        for (k, target) in [(1, 2.0), (2, 6.0), (3, 12.0)] {
            let grid = build_grid::<f64>(k, grid_resolution(k, 32)).unwrap();
            let res = smallest_eigenvalue(&assemble_operator(&grid), 1e-10, None).unwrap();
            assert!(((res.eigenvalue - target) / target).abs() < 0.02, "k={k}: {}", res.eigenvalue);
            assert!(res.positive);
        }
    }

    #[test]
    fn random_start_finds_the_same_eigenvalue() {
        let grid = build_grid::<f64>(3, (24, 24)).unwrap();
        let op = assemble_operator(&grid);
        let seeded = smallest_eigenvalue(&op, 1e-10, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start: Vec<f64> = (0..grid.unknowns()).map(|_| rng.random_range(0.0..1.0)).collect();
        let random = smallest_eigenvalue(&op, 1e-10, Some(&start)).unwrap();
        assert!((seeded.eigenvalue - random.eigenvalue).abs() < 1e-8);
        assert!(random.positive);
    }

    #[test]
    fn angular_rayleigh_on_the_hemisphere() {
        let spec = ConeSpec::new(3, 1).unwrap();
        let rule = sphere_rule::<f64>(3, 16, Some(1), SamplingMode::Deterministic).unwrap();
        let r = angular_rayleigh(spec, &rule).unwrap();
        assert!((r.value - 2.0).abs() < 1e-6);
        assert!(r.std_error.is_none());
    }
}
