//! Integration rules over radial intervals, spheres, spherical orthants and
//! cone-ball intersections.
//!
//! All rules are open: no node ever sits at `r = 0` or on a cone face.
//! Deterministic rules exist for `n = 3`; for `n >= 4` the angular factor is
//! seeded Monte Carlo and every estimate carries a standard error computed
//! from independent sample groups.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cone::{sphere_volume, ConeSpec};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, KahanSum, Real};

/// Panels used by [`radial_rule`] when `grading > 1`.
pub const DEFAULT_RADIAL_PANELS: usize = 16;
pub const DEFAULT_GRADING: f64 = 2.0;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
///
/// Nodes are produced in symmetric pairs so that `x[i] == -x[n-1-i]` holds
/// bit for bit.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Real>(a: T, b: T, n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre(n);
    let half = (b - a) / lit(2.0);
    let mid = (a + b) / lit(2.0);
    let nodes = x.iter().map(|&t| mid + half * lit::<T>(t)).collect();
    let weights = w.iter().map(|&v| half * lit::<T>(v)).collect();
    (nodes, weights)
}

/// What a rule integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainTag {
    Radial { r_max: f64 },
    Sphere { n: usize },
    ConeSection { n: usize, k: usize },
    ConeBall { n: usize, k: usize, r_max: f64 },
    /// Full ball built by mirroring a cone-ball rule across the last `k` axes.
    Ball { n: usize, r_max: f64 },
}

/// Deterministic product rules or seeded sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingMode {
    Deterministic,
    Stochastic { seed: u64 },
}

impl SamplingMode {
    /// Deterministic where available (`n = 3`), seeded sampling otherwise.
    pub fn auto(n: usize, seed: u64) -> Self {
        if n == 3 {
            Self::Deterministic
        } else {
            Self::Stochastic { seed }
        }
    }
}

/// Serializable summary of a rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDescriptor {
    pub domain: DomainTag,
    pub nodes: usize,
    pub dim: usize,
    pub symmetric_axes: usize,
    pub seed: Option<u64>,
    pub groups: usize,
}

/// Nodes and positive weights over one of the [`DomainTag`] domains.
///
/// Nodes are stored contiguously in groups of `group_size`. Deterministic
/// rules form a single group; stochastic rules have one group per
/// independent angular draw (including its mirror images), which is what
/// the standard-error estimates are computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    dim: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    domain: DomainTag,
    symmetric_axes: usize,
    seed: Option<u64>,
    group_size: usize,
}

impl<T: Real> QuadratureRule<T> {
    fn new(
        dim: usize,
        nodes: Vec<T>,
        weights: Vec<T>,
        domain: DomainTag,
        symmetric_axes: usize,
        seed: Option<u64>,
        group_size: usize,
    ) -> Self {
        debug_assert_eq!(nodes.len(), dim * weights.len());
        debug_assert!(weights.iter().all(|w| *w > T::zero()));
        let group_size = if seed.is_some() { group_size } else { weights.len().max(1) };
        debug_assert!(weights.is_empty() || weights.len() % group_size == 0);
        Self {
            dim,
            nodes,
            weights,
            domain,
            symmetric_axes,
            seed,
            group_size,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[T] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[T]> {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn is_stochastic(&self) -> bool {
        self.seed.is_some()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn groups(&self) -> usize {
        self.len().checked_div(self.group_size).unwrap_or(0)
    }

    /// Number of trailing axes whose sign flips leave the rule invariant.
    pub fn symmetric_axes(&self) -> usize {
        self.symmetric_axes
    }

    /// True if the node multiset is invariant under sign flips of each of
    /// the last `k` coordinates, weights included.
    pub fn symmetric_last_k(&self, k: usize) -> bool {
        self.symmetric_axes >= k
    }

    pub fn total_weight(&self) -> T {
        crate::scalar::compensated_sum(self.weights.iter().copied())
    }

    pub fn descriptor(&self) -> RuleDescriptor {
        RuleDescriptor {
            domain: self.domain,
            nodes: self.len(),
            dim: self.dim,
            symmetric_axes: self.symmetric_axes,
            seed: self.seed,
            groups: self.groups(),
        }
    }

    /// Reflects every node across every sign pattern of the last `k` axes.
    ///
    /// Mirror images are kept inside the originating group and share its
    /// weight, so sums over the result pair up exactly with sums over `self`.
    pub fn mirrored(&self, k: usize) -> Result<Self> {
        if k > self.dim {
            return Err(Error::Domain(format!(
                "cannot mirror {k} axes of a {}-dimensional rule",
                self.dim
            )));
        }
        let copies = 1usize << k;
        let mut nodes = Vec::with_capacity(self.nodes.len() * copies);
        let mut weights = Vec::with_capacity(self.len() * copies);
        for i in 0..self.len() {
            let x = self.node(i);
            for mask in 0..copies {
                for (j, &xj) in x.iter().enumerate() {
                    let flip = j >= self.dim - k && mask & (1 << (j - (self.dim - k))) != 0;
                    nodes.push(if flip { -xj } else { xj });
                }
                weights.push(self.weights[i]);
            }
        }
        let domain = match self.domain {
            DomainTag::ConeBall { n, r_max, .. } => DomainTag::Ball { n, r_max },
            DomainTag::ConeSection { n, .. } => DomainTag::Sphere { n },
            other => other,
        };
        Ok(Self::new(
            self.dim,
            nodes,
            weights,
            domain,
            self.symmetric_axes.max(k),
            self.seed,
            self.group_size * copies,
        ))
    }
}

fn check_positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Composite Gauss–Legendre rule on `(0, R]`.
///
/// With `grading == 1` the interval is split into equal panels. With
/// `grading > 1` panel widths shrink geometrically toward 0 by that ratio,
/// and the innermost panel `[0, b]` is integrated in the variable
/// `r = b t²`, which keeps `r^(-1/2)`-type endpoint behavior exact.
pub fn radial_rule<T: Real>(r_max: T, points: usize, grading: T) -> Result<QuadratureRule<T>> {
    check_positive("R", r_max)?;
    if points < 2 {
        return Err(Error::Domain(format!("radial rule needs at least 2 points, got {points}")));
    }
    if !(grading >= T::one()) {
        return Err(Error::Domain(format!("grading must be >= 1, got {grading}")));
    }
    let panels = (points / 2).clamp(1, DEFAULT_RADIAL_PANELS);
    let base = points / panels;
    let extra = points % panels;
    // Panel j runs outward from 0; outer panels absorb the remainder points.
    let counts: Vec<usize> = (0..panels)
        .map(|j| base + usize::from(panels - 1 - j < extra))
        .collect();

    let mut bounds = Vec::with_capacity(panels + 1);
    bounds.push(T::zero());
    if grading == T::one() {
        for j in 1..=panels {
            bounds.push(r_max * from_usize::<T>(j) / from_usize::<T>(panels));
        }
    } else {
        // widths w_j = w_0 q^j summing to R
        let total = (grading.powi(panels as i32) - T::one()) / (grading - T::one());
        let w0 = r_max / total;
        let mut acc = T::zero();
        for j in 0..panels {
            acc += w0 * grading.powi(j as i32);
            bounds.push(if j + 1 == panels { r_max } else { acc });
        }
    }

    let mut nodes = Vec::with_capacity(points);
    let mut weights = Vec::with_capacity(points);
    for j in 0..panels {
        let (a, b) = (bounds[j], bounds[j + 1]);
        if j == 0 && grading > T::one() {
            push_sqrt_mapped_panel(b, counts[j], &mut nodes, &mut weights);
        } else {
            let (x, w) = gauss_legendre_on(a, b, counts[j]);
            nodes.extend(x);
            weights.extend(w);
        }
    }
    Ok(QuadratureRule::new(
        1,
        nodes,
        weights,
        DomainTag::Radial { r_max: to_f64(r_max) },
        0,
        None,
        1,
    ))
}

/// `∫_0^b g(r) dr = ∫_0^1 g(b t²) 2 b t dt` with Gauss–Legendre in `t`.
fn push_sqrt_mapped_panel<T: Real>(b: T, count: usize, nodes: &mut Vec<T>, weights: &mut Vec<T>) {
    let (t, w) = gauss_legendre_on(T::zero(), T::one(), count);
    for (ti, wi) in t.into_iter().zip(w) {
        nodes.push(b * ti * ti);
        weights.push(wi * lit::<T>(2.0) * b * ti);
    }
}

/// Composite rule on `(lo, hi]` honoring breakpoints, for profiles whose
/// features span many decades.
///
/// Every sub-interval `[a, b]` with `a > 0` is cut geometrically so that
/// consecutive panel ends differ by at most `max_ratio`. A sub-interval
/// starting at 0 gets [`DEFAULT_RADIAL_PANELS`] geometric panels of ratio
/// `max_ratio` plus a square-root-mapped innermost panel.
pub fn composite_radial_rule<T: Real>(
    lo: T,
    hi: T,
    breakpoints: &[T],
    per_panel: usize,
    max_ratio: T,
) -> Result<QuadratureRule<T>> {
    if !(lo >= T::zero()) || !(hi > lo) {
        return Err(Error::Domain(format!("invalid radial interval ({lo}, {hi}]")));
    }
    if per_panel < 1 || !(max_ratio > T::one()) {
        return Err(Error::Domain("composite rule needs per_panel >= 1 and ratio > 1".into()));
    }
    let mut cuts = vec![lo];
    let mut sorted: Vec<T> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    sorted.dedup();
    cuts.extend(sorted);
    cuts.push(hi);

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a == T::zero() {
            let panels = DEFAULT_RADIAL_PANELS;
            let mut edges: Vec<T> = (0..=panels)
                .map(|j| b / max_ratio.powi((panels - j) as i32))
                .collect();
            edges[panels] = b;
            push_sqrt_mapped_panel(edges[0], per_panel, &mut nodes, &mut weights);
            for e in edges.windows(2) {
                let (x, w) = gauss_legendre_on(e[0], e[1], per_panel);
                nodes.extend(x);
                weights.extend(w);
            }
        } else {
            let decades = (b / a).ln() / max_ratio.ln();
            let panels = decades.ceil().to_usize().unwrap_or(1).max(1);
            let ratio = (b / a).powf(T::one() / from_usize::<T>(panels));
            let mut left = a;
            for j in 0..panels {
                let right = if j + 1 == panels { b } else { left * ratio };
                let (x, w) = gauss_legendre_on(left, right, per_panel);
                nodes.extend(x);
                weights.extend(w);
                left = right;
            }
        }
    }
    let keep: Vec<bool> = weights.iter().map(|w| *w > T::zero()).collect();
    let nodes: Vec<T> = nodes.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x).collect();
    let weights: Vec<T> = weights.into_iter().filter(|w| *w > T::zero()).collect();
    Ok(QuadratureRule::new(
        1,
        nodes,
        weights,
        DomainTag::Radial { r_max: to_f64(hi) },
        0,
        None,
        1,
    ))
}

/// Rule on `S^{n-1}` or on the orthant section `S^{n-1} ∩ R^n_{k+}`.
///
/// Deterministic (`n = 3` only): the full sphere uses Gauss–Legendre in
/// `cos θ` times a uniform azimuth grid, built as exact sign images of one
/// octant so it is symmetric in every axis. Sections use Gauss–Legendre in
/// `θ` and (for partial azimuth ranges) in `φ`, with exact restriction.
///
/// Stochastic: `order` uniform directions from normalized Gaussians. For a
/// section each draw is folded into it by taking absolute values of the
/// last `k` coordinates; for the full sphere each draw is reflected across
/// every axis.
pub fn sphere_rule<T: Real>(
    n: usize,
    order: usize,
    restrict_to_cone: Option<usize>,
    mode: SamplingMode,
) -> Result<QuadratureRule<T>> {
    if n < 3 {
        return Err(Error::Domain(format!("sphere rules need n >= 3, got {n}")));
    }
    if let Some(k) = restrict_to_cone {
        ConeSpec::new(n, k)?;
    }
    if order < 1 {
        return Err(Error::Domain("sphere rule order must be >= 1".into()));
    }
    match mode {
        SamplingMode::Deterministic if n != 3 => Err(Error::Capability(format!(
            "deterministic sphere rules exist only for n = 3 (got n = {n}); use SamplingMode::Stochastic"
        ))),
        SamplingMode::Deterministic => Ok(match restrict_to_cone {
            None => full_sphere_rule_3d(order),
            Some(k) => section_rule_3d(k, order),
        }),
        SamplingMode::Stochastic { seed } => Ok(stochastic_sphere_rule(n, order, restrict_to_cone, seed)),
    }
}

fn full_sphere_rule_3d<T: Real>(order: usize) -> QuadratureRule<T> {
    let p = order + order % 2;
    let (z, wz) = gauss_legendre(p);
    // upper half of the symmetric GL nodes
    let upper: Vec<(f64, f64)> = z.iter().zip(&wz).filter(|(zi, _)| **zi > 0.0).map(|(a, b)| (*a, *b)).collect();
    let m = 2 * p; // azimuth points on the full circle, divisible by 4
    let dphi = 2.0 * std::f64::consts::PI / m as f64;
    let quarter = m / 4;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut push_octant = |x: f64, y: f64, zz: f64, w: f64| {
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    nodes.extend([lit::<T>(sx * x), lit(sy * y), lit(sz * zz)]);
                    weights.push(lit::<T>(w));
                }
            }
        }
    };
    for &(zi, wi) in &upper {
        let s = (1.0 - zi * zi).sqrt();
        for j in 0..quarter {
            let phi = (j as f64 + 0.5) * dphi;
            push_octant(s * phi.cos(), s * phi.sin(), zi, wi * dphi);
        }
    }
    let len = weights.len();
    QuadratureRule::new(3, nodes, weights, DomainTag::Sphere { n: 3 }, 3, None, len)
}

fn section_rule_3d<T: Real>(k: usize, order: usize) -> QuadratureRule<T> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let (theta, wt) = gauss_legendre_on(0.0, FRAC_PI_2, order);
    let (phi, wp): (Vec<f64>, Vec<f64>) = match k {
        1 => {
            let m = 2 * order;
            let d = 2.0 * PI / m as f64;
            ((0..m).map(|j| (j as f64 + 0.5) * d).collect(), vec![d; m])
        }
        2 => gauss_legendre_on(0.0, PI, order),
        _ => gauss_legendre_on(0.0, FRAC_PI_2, order),
    };
    let mut nodes = Vec::with_capacity(3 * theta.len() * phi.len());
    let mut weights = Vec::with_capacity(theta.len() * phi.len());
    for (&t, &w1) in theta.iter().zip(&wt) {
        let (s, c) = t.sin_cos();
        for (&p, &w2) in phi.iter().zip(&wp) {
            nodes.extend([lit::<T>(s * p.cos()), lit(s * p.sin()), lit(c)]);
            weights.push(lit::<T>(w1 * w2 * s));
        }
    }
    let len = weights.len();
    // k = 1 keeps the x/y mirror symmetry of the uniform azimuth grid, but
    // no section rule is invariant under flips of its own restricted axes.
    QuadratureRule::new(3, nodes, weights, DomainTag::ConeSection { n: 3, k }, 0, None, len)
}

fn stochastic_sphere_rule<T: Real>(
    n: usize,
    samples: usize,
    restrict: Option<usize>,
    seed: u64,
) -> QuadratureRule<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = sphere_volume::<f64>(n - 1);
    let (copies, measure, domain, sym) = match restrict {
        Some(k) => (1usize, area / (1u64 << k) as f64, DomainTag::ConeSection { n, k }, 0),
        None => (1usize << n, area, DomainTag::Sphere { n }, n),
    };
    let w = lit::<T>(measure / (samples * copies) as f64);
    let mut nodes = Vec::with_capacity(n * samples * copies);
    let mut weights = Vec::with_capacity(samples * copies);
    let mut draw = vec![0.0f64; n];
    for _ in 0..samples {
        loop {
            for v in draw.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let r = draw.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 1e-12 {
                draw.iter_mut().for_each(|v| *v /= r);
                break;
            }
        }
        match restrict {
            Some(k) => {
                for (j, v) in draw.iter().enumerate() {
                    let v = if j >= n - k { v.abs() } else { *v };
                    nodes.push(lit::<T>(v));
                }
                weights.push(w);
            }
            None => {
                for mask in 0..copies {
                    for (j, v) in draw.iter().enumerate() {
                        let v = if mask & (1 << j) != 0 { -v } else { *v };
                        nodes.push(lit::<T>(v));
                    }
                    weights.push(w);
                }
            }
        }
    }
    QuadratureRule::new(n, nodes, weights, domain, sym, Some(seed), copies)
}

/// Tensor product of [`radial_rule`] (graded, ratio 2) and the section rule,
/// with node `rσ` and weight `r^{n-1} w_r w_σ`.
pub fn cone_ball_rule<T: Real>(
    spec: ConeSpec,
    r_max: T,
    radial_points: usize,
    angular_order: usize,
    mode: SamplingMode,
) -> Result<QuadratureRule<T>> {
    let radial = radial_rule(r_max, radial_points, lit(DEFAULT_GRADING))?;
    let angular = sphere_rule::<T>(spec.n(), angular_order, Some(spec.k()), mode)?;
    Ok(tensor_rule(spec, r_max, &radial, &angular))
}

/// Panels added toward the support edge by [`support_graded_rule`].
pub const EDGE_PANELS: usize = 6;

/// Cone-ball rule on `B_ρ` whose radial factor is graded toward both ends:
/// geometrically toward 0 as in [`composite_radial_rule`], and toward `ρ`
/// with breakpoints `ρ(1 - 2^{-j})`, `j = 1..=EDGE_PANELS`. Bumps that are
/// flat but steep just inside their support edge converge geometrically in
/// `per_panel` on this rule, where the single outer panel of
/// [`radial_rule`] only converges slowly.
pub fn support_graded_rule<T: Real>(
    spec: ConeSpec,
    support: T,
    per_panel: usize,
    angular_order: usize,
    mode: SamplingMode,
) -> Result<QuadratureRule<T>> {
    check_positive("support radius", support)?;
    let half = lit::<T>(0.5);
    let breakpoints: Vec<T> = (1..=EDGE_PANELS as i32)
        .map(|j| support * (T::one() - half.powi(j)))
        .collect();
    let radial = composite_radial_rule(T::zero(), support, &breakpoints, per_panel, lit(DEFAULT_GRADING))?;
    let angular = sphere_rule::<T>(spec.n(), angular_order, Some(spec.k()), mode)?;
    Ok(tensor_rule(spec, support, &radial, &angular))
}

/// Same construction as [`cone_ball_rule`] from explicit factors.
pub fn tensor_rule<T: Real>(
    spec: ConeSpec,
    r_max: T,
    radial: &QuadratureRule<T>,
    angular: &QuadratureRule<T>,
) -> QuadratureRule<T> {
    let n = spec.n();
    let mut nodes = Vec::with_capacity(n * radial.len() * angular.len());
    let mut weights = Vec::with_capacity(radial.len() * angular.len());
    // angular-major so that stochastic groups stay contiguous
    for (sigma, &ws) in angular.nodes().zip(angular.weights()) {
        for (r, &wr) in radial.nodes().zip(radial.weights()) {
            let r = r[0];
            nodes.extend(sigma.iter().map(|&s| r * s));
            weights.push(wr * ws * r.powi(n as i32 - 1));
        }
    }
    let domain = match angular.domain() {
        DomainTag::Sphere { n } => DomainTag::Ball { n, r_max: to_f64(r_max) },
        _ => DomainTag::ConeBall {
            n,
            k: spec.k(),
            r_max: to_f64(r_max),
        },
    };
    QuadratureRule::new(
        n,
        nodes,
        weights,
        domain,
        angular.symmetric_axes(),
        angular.seed(),
        angular.group_size() * radial.len(),
    )
}

/// Result of a single integration; `std_error` is present for stochastic rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral<T> {
    pub value: T,
    pub std_error: Option<T>,
}

/// Several integrands evaluated in one sweep, keeping per-group partial sums
/// so that standard errors of linear combinations and ratios are available.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIntegral<T, const M: usize> {
    pub values: [T; M],
    group_sums: Option<Vec<[T; M]>>,
}

impl<T: Real, const M: usize> MultiIntegral<T, M> {
    pub fn get(&self, i: usize) -> Integral<T> {
        let mut coeffs = [T::zero(); M];
        coeffs[i] = T::one();
        Integral {
            value: self.values[i],
            std_error: self.combination_std_error(&coeffs),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.group_sums.is_some()
    }

    /// Standard error of `Σ c_i I_i`.
    pub fn combination_std_error(&self, coeffs: &[T; M]) -> Option<T> {
        let groups = self.group_sums.as_ref()?;
        let g = groups.len();
        if g < 2 {
            return Some(T::infinity());
        }
        let combined: Vec<T> = groups
            .iter()
            .map(|s| s.iter().zip(coeffs).fold(T::zero(), |a, (x, c)| a + *x * *c))
            .collect();
        let gf = from_usize::<T>(g);
        let mean = combined.iter().copied().sum::<T>() / gf;
        let var = combined.iter().map(|v| (*v - mean).powi(2)).sum::<T>() / (gf - T::one());
        // total = g * mean of the group sums
        Some((var * gf).sqrt())
    }

    /// Delta-method standard error of `I_num / I_den`.
    pub fn ratio_std_error(&self, num: usize, den: usize) -> Option<T> {
        let q = self.values[num] / self.values[den];
        let mut coeffs = [T::zero(); M];
        coeffs[num] = T::one();
        coeffs[den] = -q;
        self.combination_std_error(&coeffs)
            .map(|s| s / self.values[den].abs())
    }
}

/// `Σ w_i f(x_i)` with compensated accumulation.
pub fn integrate<T: Real>(rule: &QuadratureRule<T>, f: impl Fn(&[T]) -> T) -> Result<Integral<T>> {
    let multi = integrate_many(rule, |x| [f(x)])?;
    Ok(multi.get(0))
}

/// Integrates `M` integrands in one pass over the nodes.
pub fn integrate_many<T: Real, const M: usize>(
    rule: &QuadratureRule<T>,
    f: impl Fn(&[T]) -> [T; M],
) -> Result<MultiIntegral<T, M>> {
    let mut totals: [KahanSum<T>; M] = [KahanSum::new(); M];
    let mut groups = if rule.is_stochastic() {
        Some(Vec::with_capacity(rule.groups()))
    } else {
        None
    };
    let gs = rule.group_size();
    for g in 0..rule.groups() {
        let mut partial: [KahanSum<T>; M] = [KahanSum::new(); M];
        for i in g * gs..(g + 1) * gs {
            let x = rule.node(i);
            let vals = f(x);
            for (m, v) in vals.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Evaluation {
                        index: i,
                        point: x.iter().map(|c| to_f64(*c)).collect(),
                    });
                }
                partial[m].add(rule.weights()[i] * *v);
            }
        }
        let sums = partial.map(|p| p.total());
        for m in 0..M {
            totals[m].add(sums[m]);
        }
        if let Some(gv) = groups.as_mut() {
            gv.push(sums);
        }
    }
    Ok(MultiIntegral {
        values: totals.map(|t| t.total()),
        group_sums: groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_exact_for_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert_relative_eq!(s, 2.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        for i in 0..5 {
            assert_eq!(x[i], -x[4 - i]);
        }
    }

    #[test]
    fn radial_rule_polynomial_exactness() {
        let rule = radial_rule(1.0f64, 64, 2.0).unwrap();
        let v = integrate(&rule, |r| r[0] * r[0]).unwrap().value;
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(rule.len(), 64);
    }

    #[test]
    fn radial_rule_resolves_inverse_square_root() {
        let rule = radial_rule(1.0f64, 128, 2.0).unwrap();
        let v = integrate(&rule, |r| r[0].powf(-0.5)).unwrap().value;
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn radial_rule_quartic_hardy_integrand() {
        let rule = radial_rule(1.0f64, 64, 2.0).unwrap();
        let v = integrate(&rule, |r| {
            let r = r[0];
            let f = r * (1.0 - r);
            f * f / (r * r) * r * r
        })
        .unwrap()
        .value;
        assert!((v - 1.0 / 30.0).abs() < 1e-13);
    }

    #[test]
    fn radial_rule_rejects_bad_input() {
        assert!(matches!(radial_rule(1.0f64, 1, 2.0), Err(Error::Domain(_))));
        assert!(matches!(radial_rule(-1.0f64, 8, 2.0), Err(Error::Domain(_))));
        assert!(matches!(radial_rule(1.0f64, 8, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn uniform_grading_is_plain_composite() {
        let rule = radial_rule(2.0f64, 160, 1.0).unwrap();
        let v = integrate(&rule, |r| r[0].exp()).unwrap().value;
        assert_relative_eq!(v, 2f64.exp() - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn composite_rule_spans_many_decades() {
        let rule = composite_radial_rule(1e-100f64, 1.0, &[1e-50], 8, 2.0).unwrap();
        // ∫ r^{-0.9} dr = 10 (1 - (1e-100)^{0.1})
        let v = integrate(&rule, |r| r[0].powf(-0.9)).unwrap().value;
        assert_relative_eq!(v, 10.0 * (1.0 - 1e-10), max_relative = 1e-12);
        let from_zero = composite_radial_rule(0.0f64, 1.0, &[0.5], 8, 2.0).unwrap();
        let v = integrate(&from_zero, |r| r[0].sqrt()).unwrap().value;
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn sphere_area_and_second_moment() {
        let rule = sphere_rule::<f64>(3, 12, None, SamplingMode::Deterministic).unwrap();
        assert!((rule.total_weight() - 4.0 * PI).abs() < 1e-10);
        let m = integrate(&rule, |s| s[2] * s[2]).unwrap().value;
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-10);
        assert!(rule.symmetric_last_k(3));
    }

    #[test]
    fn hemisphere_moment_is_half_the_sphere() {
        let rule = sphere_rule::<f64>(3, 12, Some(1), SamplingMode::Deterministic).unwrap();
        let m = integrate(&rule, |s| s[2] * s[2]).unwrap().value;
        assert!((m - 2.0 * PI / 3.0).abs() < 1e-10);
        assert!(!rule.symmetric_last_k(1));
    }

    #[test]
    fn section_measures() {
        for k in 1..=3 {
            let rule = sphere_rule::<f64>(3, 16, Some(k), SamplingMode::Deterministic).unwrap();
            assert_relative_eq!(rule.total_weight(), 4.0 * PI / (1 << k) as f64, max_relative = 1e-13);
            assert!(rule.nodes().all(|s| s[3 - k..].iter().all(|&c| c > 0.0)));
        }
    }

    #[test]
    fn deterministic_high_dimension_is_a_capability_error() {
        let err = sphere_rule::<f64>(4, 8, Some(2), SamplingMode::Deterministic).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn stochastic_rules_are_seed_reproducible_and_exactly_weighted() {
        let a = sphere_rule::<f64>(5, 200, Some(3), SamplingMode::Stochastic { seed: 3 }).unwrap();
        let b = sphere_rule::<f64>(5, 200, Some(3), SamplingMode::Stochastic { seed: 3 }).unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a.total_weight(), sphere_volume::<f64>(4) / 8.0, max_relative = 1e-13);
        assert!(a.nodes().all(|s| s[2..].iter().all(|&c| c >= 0.0)));
        let full = sphere_rule::<f64>(4, 50, None, SamplingMode::Stochastic { seed: 1 }).unwrap();
        assert!(full.symmetric_last_k(4));
        assert_eq!(full.group_size(), 16);
    }

    #[test]
    fn odd_integrands_cancel_on_symmetric_rules() {
        let rule = sphere_rule::<f64>(3, 10, None, SamplingMode::Deterministic).unwrap();
        let v = integrate(&rule, |s| s[2].powi(3) * (1.0 + s[0] * s[0]) + s[1] * s[2].exp()).unwrap();
        assert!(v.value.abs() < 1e-13);
    }

    #[test]
    fn cone_ball_volumes() {
        let half = cone_ball_rule(ConeSpec::new(3, 1).unwrap(), 1.0f64, 96, 8, SamplingMode::Deterministic).unwrap();
        assert!((half.total_weight() - 0.5 * 4.0 * PI / 3.0).abs() < 1e-8);
        let oct = cone_ball_rule(ConeSpec::new(3, 3).unwrap(), 1.0f64, 32, 8, SamplingMode::Deterministic).unwrap();
        assert!((oct.total_weight() - 4.0 * PI / 3.0 / 8.0).abs() < 1e-8);
        let m = integrate(&half, |x| x[2] * x[2]).unwrap().value;
        assert!((m - 2.0 * PI / 15.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let rule = radial_rule(1.0f64, 8, 2.0).unwrap();
        let err = integrate(&rule, |r| if r[0] > 0.5 { f64::NAN } else { 1.0 }).unwrap_err();
        match err {
            Error::Evaluation { point, .. } => assert!(point[0] > 0.5),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn mirrored_rule_pairs_every_node() {
        let cone = cone_ball_rule(ConeSpec::new(3, 2).unwrap(), 1.0f64, 8, 4, SamplingMode::Deterministic).unwrap();
        let full = cone.mirrored(2).unwrap();
        assert_eq!(full.len(), 4 * cone.len());
        assert!(full.symmetric_last_k(2));
        assert!(matches!(full.domain(), DomainTag::Ball { .. }));
        let v = integrate(&full, |x| x[1] * x[2].powi(2)).unwrap().value;
        assert_eq!(v.abs() < 1e-16, true);
    }

    #[test]
    fn stochastic_standard_error_covers_the_truth() {
        let rule = sphere_rule::<f64>(4, 4000, Some(2), SamplingMode::Stochastic { seed: 11 }).unwrap();
        let est = integrate(&rule, |s| s[3] * s[3]).unwrap();
        let truth = sphere_volume::<f64>(3) / 4.0 / 4.0;
        let se = est.std_error.unwrap();
        assert!(se > 0.0);
        assert!((est.value - truth).abs() < 4.0 * se, "{} vs {truth} ± {se}", est.value);
    }

    #[test]
    fn works_in_single_precision() {
        let rule = radial_rule(1.0f32, 32, 2.0).unwrap();
        let v = integrate(&rule, |r| r[0] * r[0]).unwrap().value;
        assert!((v - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn support_graded_rule_resolves_the_bump_flank() {
        // half-space ball: 2π ∫_0^1 r² exp(2 - 2/(1 - r²)) dr, oracle from
        // 4000 uniform 8-point panels
        let spec = ConeSpec::new(3, 1).unwrap();
        let g = |r2: f64| if r2 >= 1.0 { 0.0 } else { (2.0 - 2.0 / (1.0 - r2)).exp() };
        let mut oracle = 0.0;
        for p in 0..4000 {
            let (t, w) = gauss_legendre_on(p as f64 / 4000.0, (p + 1) as f64 / 4000.0, 8);
            oracle += t.iter().zip(&w).map(|(r, wr)| wr * r * r * g(r * r)).sum::<f64>();
        }
        oracle *= 2.0 * PI;
        let f = |x: &[f64]| g(x.iter().map(|v| v * v).sum());
        let rule = support_graded_rule::<f64>(spec, 1.0, 12, 8, SamplingMode::Deterministic).unwrap();
        assert_relative_eq!(integrate(&rule, f).unwrap().value, oracle, max_relative = 1e-10);
        let coarse = cone_ball_rule::<f64>(spec, 1.0, 48, 8, SamplingMode::Deterministic).unwrap();
        let c = integrate(&coarse, f).unwrap().value;
        assert!(((c - oracle) / oracle).abs() > 1e-6);
    }
}
