//! Dirichlet distributions `Θ_p[k_1, .., k_p; ℓ]` on scaled simplices and their
//! convolutions.
//!
//! The law has density `(K-1)! / ∏ (k_i - 1)! · ℓ^{1-K} ∏ x_i^{k_i - 1}` with
//! respect to `dx_1 .. dx_{p-1}` on `{x ≥ 0, Σ x = ℓ}`, where `K = Σ k_i`.
//! Coordinates with `k_i = 0` carry a unit atom at zero and a single positive
//! coordinate carries the atom at `ℓ`.
//!
//! The closed-form Laplace transform is `(K-1)!` times the divided difference of
//! `exp` at the nodes `-ℓ u_i`, node `i` repeated `k_i` times.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{check_size, invalid, Error, Result};
use crate::rng::{rng_from_seed, Seed};
use crate::stats::{ks_critical_two_sample, ks_two_sample, Moments};

/// Tolerance for membership in the simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Default radius, in units of the scaled nodes `ℓ u`, below which a node set is
/// handled by one Taylor expansion instead of the divided-difference recurrence.
pub const DEFAULT_CLUSTER_RADIUS: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSpec {
    k: Vec<u32>,
    ell: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplaceMode {
    /// Divided differences of `exp`.
    ClosedForm,
    /// Trapezoid rule on a circle enclosing every pole of the inversion integral.
    Contour,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceOptions {
    pub mode: LaplaceMode,
    pub cluster_radius: f64,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions { mode: LaplaceMode::ClosedForm, cluster_radius: DEFAULT_CLUSTER_RADIUS }
    }
}

impl LaplaceOptions {
    pub fn contour() -> Self {
        LaplaceOptions { mode: LaplaceMode::Contour, ..Default::default() }
    }
}

impl DirichletSpec {
    pub fn new(k: Vec<u32>, ell: f64) -> Result<Self> {
        if k.iter().all(|&x| x == 0) {
            return Err(invalid("a Dirichlet law needs a positive parameter"));
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(invalid("the simplex scale must be positive and finite"));
        }
        Ok(DirichletSpec { k, ell })
    }

    pub fn k(&self) -> &[u32] {
        &self.k
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    /// `K = Σ k_i`.
    pub fn total_k(&self) -> u32 {
        self.k.iter().sum()
    }

    fn positive(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.k.iter().copied().enumerate().filter(|&(_, k)| k > 0)
    }

    /// The point carrying all the mass when only one parameter is positive.
    pub fn atom(&self) -> Option<Vec<f64>> {
        let mut pos = self.positive();
        let (i, _) = pos.next()?;
        if pos.next().is_some() {
            return None;
        }
        let mut x = vec![0.0; self.dim()];
        x[i] = self.ell;
        Some(x)
    }

    /// Density of the absolutely continuous part on the face of positive
    /// coordinates; zero off the support and when the law is an atom.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        check_size(self.dim(), x.len())?;
        if self.atom().is_some() {
            return Ok(0.0);
        }
        let tol = SIMPLEX_TOLERANCE * self.ell;
        let sum: f64 = x.iter().sum();
        let zeros_ok = self.k.iter().zip(x).all(|(&k, &v)| k > 0 || v.abs() <= tol);
        if (sum - self.ell).abs() > tol || x.iter().any(|&v| v < 0.0) || !zeros_ok {
            return Ok(0.0);
        }
        let total = self.total_k();
        let mut log = ln_factorial(total - 1) + (1.0 - total as f64) * libm::log(self.ell);
        for (i, k) in self.positive() {
            log += (k - 1) as f64 * libm::log(x[i]) - ln_factorial(k - 1);
        }
        Ok(libm::exp(log))
    }

    /// One draw, through independent gamma variables; the coordinates sum to `ℓ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let mut total = 0.0;
        for (i, k) in self.positive() {
            let g: f64 = (0..k).map(|_| -> f64 { Exp1.sample(rng) }).sum();
            x[i] = g;
            total += g;
        }
        let last = self.positive().last().map(|(i, _)| i).expect("validated");
        let mut acc = 0.0;
        for (i, _) in self.positive() {
            if i != last {
                x[i] *= self.ell / total;
                acc += x[i];
            }
        }
        x[last] = (self.ell - acc).max(0.0);
        x
    }

    /// `E exp(-<u, x>)`.
    pub fn laplace(&self, u: &[Complex64], options: &LaplaceOptions) -> Result<Complex64> {
        check_size(self.dim(), u.len())?;
        if u.iter().any(|z| z.re.is_nan() || z.re < 0.0 || !z.im.is_finite()) {
            return Err(Error::Domain("the Laplace transform needs Re u ≥ 0".into()));
        }
        let nodes: Vec<(Complex64, u32)> = self.positive().map(|(i, k)| (-u[i] * self.ell, k)).collect();
        let m = self.total_k() - 1;
        let dd = match options.mode {
            LaplaceMode::ClosedForm => scaled_exp_divided_difference(&nodes, options.cluster_radius),
            LaplaceMode::Contour => contour_exp_divided_difference(&nodes, m),
        };
        Ok(dd)
    }

    /// Monte Carlo estimate of the transform at real `u` with its standard error.
    pub fn laplace_monte_carlo(&self, u: &[f64], samples: usize, seed: Seed) -> Result<(f64, f64)> {
        check_size(self.dim(), u.len())?;
        let mut rng = rng_from_seed(seed);
        let m: Moments = (0..samples)
            .map(|_| {
                let x = self.sample(&mut rng);
                libm::exp(-x.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
            })
            .collect();
        Ok((m.mean, m.std_error()))
    }
}

/// Independent sum of Dirichlet vectors of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionSpec {
    components: Vec<DirichletSpec>,
}

impl ConvolutionSpec {
    pub fn new(components: Vec<DirichletSpec>) -> Result<Self> {
        let d = components.first().ok_or_else(|| invalid("a convolution needs a component"))?.dim();
        for c in &components {
            check_size(d, c.dim())?;
        }
        Ok(ConvolutionSpec { components })
    }

    pub fn components(&self) -> &[DirichletSpec] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// `Σ ℓ` over components: the sum of every sampled vector.
    pub fn total_scale(&self) -> f64 {
        self.components.iter().map(DirichletSpec::ell).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for c in &self.components {
            for (o, x) in out.iter_mut().zip(c.sample(rng)) {
                *o += x;
            }
        }
        out
    }

    /// Product of the component transforms.
    pub fn laplace(&self, u: &[Complex64], options: &LaplaceOptions) -> Result<Complex64> {
        self.components.iter().try_fold(Complex64::new(1.0, 0.0), |acc, c| Ok(acc * c.laplace(u, options)?))
    }

    /// Real-argument closed form.
    pub fn laplace_real(&self, u: &[f64]) -> Result<f64> {
        let z: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(self.laplace(&z, &LaplaceOptions::default())?.re)
    }
}

fn ln_factorial(n: u32) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// `m! · exp[x_0, .., x_m]` for nodes with multiplicities, `m + 1 = Σ mult`.
///
/// Node sets of radius at most `radius` use a Taylor series about their centroid;
/// wider sets use the recurrence on their two farthest nodes, which divides by a
/// distance of at least `radius` and so stays stable.
pub fn scaled_exp_divided_difference(nodes: &[(Complex64, u32)], radius: f64) -> Complex64 {
    let mut distinct: Vec<(Complex64, u32)> = Vec::new();
    for &(x, k) in nodes {
        match distinct.iter_mut().find(|(y, _)| *y == x) {
            Some(slot) => slot.1 += k,
            None if k > 0 => distinct.push((x, k)),
            None => {}
        }
    }
    let counts: Vec<u32> = distinct.iter().map(|&(_, k)| k).collect();
    let points: Vec<Complex64> = distinct.iter().map(|&(x, _)| x).collect();
    let m = counts.iter().sum::<u32>() - 1;
    let mut memo = BTreeMap::new();
    // The recursion yields plain divided differences; scale by m! at the end.
    let dd = divided_difference(&points, counts, radius.max(1e-3), &mut memo);
    dd * libm::exp(ln_factorial(m))
}

fn divided_difference(
    points: &[Complex64],
    counts: Vec<u32>,
    radius: f64,
    memo: &mut BTreeMap<Vec<u32>, Complex64>,
) -> Complex64 {
    if let Some(&v) = memo.get(&counts) {
        return v;
    }
    let active: Vec<usize> = (0..points.len()).filter(|&i| counts[i] > 0).collect();
    let total: u32 = counts.iter().sum();
    let centroid = active.iter().map(|&i| points[i] * counts[i] as f64).sum::<Complex64>() / total as f64;
    let spread = active.iter().map(|&i| (points[i] - centroid).norm()).fold(0.0, f64::max);
    let value = if spread <= radius {
        taylor_divided_difference(points, &counts, centroid, spread)
    } else {
        let mut best = (0, 0, -1.0);
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let d = (points[i] - points[j]).norm();
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (i, j, _) = best;
        let mut without_i = counts.clone();
        without_i[i] -= 1;
        let mut without_j = counts.clone();
        without_j[j] -= 1;
        let fi = divided_difference(points, without_i, radius, memo);
        let fj = divided_difference(points, without_j, radius, memo);
        (fi - fj) / (points[j] - points[i])
    };
    memo.insert(counts, value);
    value
}

/// `exp[x_0..x_m] = e^c Σ_r h_r(x - c) / (m + r)!` with `h_r` the complete
/// homogeneous symmetric polynomials.
fn taylor_divided_difference(points: &[Complex64], counts: &[u32], centroid: Complex64, spread: f64) -> Complex64 {
    let m = counts.iter().sum::<u32>() as usize - 1;
    // Terms are bounded by spread^r / r! / m!.
    let mut terms = 1;
    let mut bound = 1.0;
    while terms < 400 && (terms < 4 || bound > 1e-20) {
        bound *= spread / terms as f64;
        terms += 1;
    }
    let mut h = vec![Complex64::new(0.0, 0.0); terms];
    h[0] = Complex64::new(1.0, 0.0);
    for (i, &x) in points.iter().enumerate() {
        let y = x - centroid;
        for _ in 0..counts[i] {
            for r in 1..terms {
                let prev = h[r - 1];
                h[r] += y * prev;
            }
        }
    }
    let mut coef = libm::exp(-ln_factorial(m as u32));
    let mut sum = Complex64::new(0.0, 0.0);
    for (r, hr) in h.iter().enumerate() {
        if r > 0 {
            coef /= (m + r) as f64;
        }
        sum += hr * coef;
    }
    centroid.exp() * sum
}

/// `m! · (1/2πi) ∮ e^w ∏ (w - x_j)^{-k_j} dw` on a circle around every node.
fn contour_exp_divided_difference(nodes: &[(Complex64, u32)], m: u32) -> Complex64 {
    let total: u32 = nodes.iter().map(|&(_, k)| k).sum();
    let centroid = nodes.iter().map(|&(x, k)| x * k as f64).sum::<Complex64>() / total as f64;
    let spread = nodes.iter().map(|&(x, _)| (x - centroid).norm()).fold(0.0, f64::max);
    // A tight circle keeps |e^w| and thus the rounding error small; the trapezoid
    // rule still converges geometrically.
    let rho = spread + 1.0;
    let integrand = |theta: f64| {
        let e = Complex64::from_polar(1.0, theta);
        let w = centroid + e * rho;
        let mut f = w.exp() * e * rho;
        for &(x, k) in nodes {
            f /= (w - x).powu(k);
        }
        f
    };
    let scale = libm::exp(ln_factorial(m));
    let mut n = 64usize;
    let mut sum: Complex64 = (0..n).map(|j| integrand(2.0 * PI * j as f64 / n as f64)).sum();
    let mut estimate = sum / n as f64;
    while n < 1 << 20 {
        // Doubling reuses the old nodes and adds the midpoints.
        sum += (0..n).map(|j| integrand(2.0 * PI * (j as f64 + 0.5) / n as f64)).sum::<Complex64>();
        n *= 2;
        let next = sum / n as f64;
        let converged = ((next - estimate) * scale).norm() < 1e-14 * (1.0 + (next * scale).norm());
        estimate = next;
        if converged {
            break;
        }
    }
    estimate * scale
}

/// Two-sample comparison of block sums of uniform circle spacings against direct
/// Dirichlet draws.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationReport {
    pub n: usize,
    pub grouping: Vec<u32>,
    pub samples: usize,
    /// KS statistic per coordinate.
    pub ks: Vec<f64>,
    pub critical: f64,
    pub passed: bool,
}

/// Spacings of `n` uniform points on a circle of length `ell`, read clockwise from
/// one of the points. Rotating so that point sits at zero avoids the size bias of
/// the arc covering a fixed position.
pub fn circle_spacings<R: Rng + ?Sized>(n: usize, ell: f64, rng: &mut R) -> Vec<f64> {
    let mut pts: Vec<f64> = core::iter::once(0.0).chain((1..n).map(|_| rng.random::<f64>() * ell)).collect();
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    out.push(ell - pts[n - 1]);
    out
}

pub fn aggregate_check(n: usize, grouping: &[u32], ell: f64, samples: usize, seed: Seed) -> Result<AggregationReport> {
    if n == 0 || grouping.contains(&0) || grouping.iter().map(|&k| k as usize).sum::<usize>() != n {
        return Err(invalid("the grouping must be a composition of n into positive parts"));
    }
    let spec = DirichletSpec::new(grouping.to_vec(), ell)?;
    let p = grouping.len();
    let mut rng = rng_from_seed(seed);
    let mut pushed = vec![Vec::with_capacity(samples); p];
    let mut direct = vec![Vec::with_capacity(samples); p];
    for _ in 0..samples {
        let y = circle_spacings(n, ell, &mut rng);
        let mut start = 0;
        for (b, &k) in grouping.iter().enumerate() {
            pushed[b].push(y[start..start + k as usize].iter().sum());
            start += k as usize;
        }
        for (b, x) in spec.sample(&mut rng).into_iter().enumerate() {
            direct[b].push(x);
        }
    }
    let ks: Vec<f64> = pushed.iter().zip(&direct).map(|(a, b)| ks_two_sample(a, b)).collect();
    let critical = ks_critical_two_sample(samples, samples);
    let passed = ks.iter().all(|&d| d < critical);
    Ok(AggregationReport { n, grouping: grouping.to_vec(), samples, ks, critical, passed })
}
