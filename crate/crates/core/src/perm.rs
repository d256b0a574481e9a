//! Finite symmetric groups: permutations with a cycle view, the cycle-deletion
//! projections `S_n -> S_m`, exact Ewens masses and finite Radon–Nikodym
//! exponents.
//!
//! Permutations are 1-indexed. Products follow map composition:
//! `(a * b)(k) = a(b(k))`, so `b` is applied first.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{check_size, guard, invalid, Error, Result};

/// Exact rational numbers used for Ewens masses and engine coefficients.
pub type Rational = Ratio<i128>;

/// Default limit on `n` for loops over all of `S_n`.
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// A permutation of `{1..n}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    // images[k - 1] = p(k)
    images: Vec<usize>,
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.iter().all(|c| c.len() == 1) {
            return write!(f, "e[{}]", self.degree());
        }
        for cycle in cycles.iter().filter(|c| c.len() > 1) {
            write!(f, "(")?;
            for (i, k) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{k}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (1..=n).collect() }
    }

    /// Builds a permutation from its image list `[p(1), .., p(n)]`.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v == 0 || v > n {
                return Err(invalid(format!("image {v} outside 1..={n}")));
            }
            if seen[v - 1] {
                return Err(invalid(format!("image {v} repeated")));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { images })
    }

    /// Builds a permutation of degree `n` from disjoint cycles; unlisted points are fixed.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut images: Vec<usize> = (1..=n).collect();
        let mut seen = vec![false; n];
        for cycle in cycles {
            for (i, &k) in cycle.iter().enumerate() {
                if k == 0 || k > n {
                    return Err(invalid(format!("cycle entry {k} outside 1..={n}")));
                }
                if seen[k - 1] {
                    return Err(invalid(format!("cycle entry {k} repeated")));
                }
                seen[k - 1] = true;
                images[k - 1] = cycle[(i + 1) % cycle.len()];
            }
        }
        Ok(Permutation { images })
    }

    /// The transposition `(a b)` in `S_n`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(invalid("transposition needs two distinct points"));
        }
        Self::from_cycles(n, &[vec![a, b]])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (1..=n).collect();
        images.shuffle(rng);
        Permutation { images }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// `p(k)` for `1 <= k <= n`; points beyond the degree are fixed.
    #[inline]
    pub fn image(&self, k: usize) -> usize {
        if k > self.images.len() {
            k
        } else {
            self.images[k - 1]
        }
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.degree()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Permutation { images: inv }
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn try_compose(&self, other: &Permutation) -> Result<Self> {
        check_size(self.degree(), other.degree())?;
        Ok(self.compose_unchecked(other))
    }

    fn compose_unchecked(&self, other: &Permutation) -> Self {
        Permutation { images: other.images.iter().map(|&k| self.images[k - 1]).collect() }
    }

    /// `sigma ∘ self ∘ sigma^{-1}`.
    pub fn conjugate_by(&self, sigma: &Permutation) -> Self {
        let mut out = vec![0; self.degree()];
        for (i, &v) in self.images.iter().enumerate() {
            out[sigma.images[i] - 1] = sigma.images[v - 1];
        }
        Permutation { images: out }
    }

    /// Trivial extension to degree `m >= n` fixing `n+1..=m`.
    pub fn extend(&self, m: usize) -> Self {
        let mut images = self.images.clone();
        images.extend(self.degree() + 1..=m.max(self.degree()));
        Permutation { images }
    }

    /// Disjoint cycles, each starting at its smallest element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 1..=n {
            if seen[start - 1] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut k = start;
            while !seen[k - 1] {
                seen[k - 1] = true;
                cycle.push(k);
                k = self.images[k - 1];
            }
            out.push(cycle);
        }
        out
    }

    /// Number of disjoint cycles `[g]`, fixed points included.
    pub fn cycle_count(&self) -> usize {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.images[k] - 1;
            }
        }
        count
    }

    /// Cycle lengths in non-increasing order.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        t.sort_unstable_by(|a, b| b.cmp(a));
        t
    }

    /// For each point, the index (into [`Self::cycles`]) of the cycle containing it.
    pub fn cycle_index(&self) -> Vec<usize> {
        let mut idx = vec![0; self.degree()];
        for (c, cycle) in self.cycles().iter().enumerate() {
            for &k in cycle {
                idx[k - 1] = c;
            }
        }
        idx
    }

    /// `Υ^n_m`: deletes every symbol `> m` from the cycle expression.
    pub fn project(&self, m: usize) -> Result<Self> {
        let n = self.degree();
        if m == 0 || m > n {
            return Err(invalid(format!("projection target {m} outside 1..={n}")));
        }
        let mut images = Vec::with_capacity(m);
        for k in 1..=m {
            let mut next = self.images[k - 1];
            while next > m {
                next = self.images[next - 1];
            }
            images.push(next);
        }
        Ok(Permutation { images })
    }

    /// `Υ^n_{n-1}` by its map description: if `p(n) = a != n` and `p(b) = n`,
    /// then the result sends `b` to `a`.
    pub fn project_step(&self) -> Result<Self> {
        let n = self.degree();
        if n < 2 {
            return Err(invalid("cannot project below degree 1"));
        }
        let a = self.images[n - 1];
        let mut images: Vec<usize> = self.images[..n - 1].to_vec();
        if a != n {
            let b = self.inverse().images[n - 1];
            images[b - 1] = a;
        }
        Ok(Permutation { images })
    }

    /// Rewrites `self` to the next permutation in lexicographic order of image lists.
    /// Returns `false` (leaving the identity) after the last one.
    pub fn advance_lex(&mut self) -> bool {
        let v = &mut self.images;
        let n = v.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && v[i - 1] >= v[i] {
            i -= 1;
        }
        if i == 0 {
            v.reverse();
            return false;
        }
        let mut j = n - 1;
        while v[j] <= v[i - 1] {
            j -= 1;
        }
        v.swap(i - 1, j);
        v[i..].reverse();
        true
    }
}

impl Mul for &Permutation {
    type Output = Permutation;

    /// Map composition `self ∘ rhs`.
    ///
    /// Panics when degrees differ; use [`Permutation::try_compose`] for a checked product.
    fn mul(self, rhs: &Permutation) -> Permutation {
        assert_eq!(self.degree(), rhs.degree(), "permutation degrees differ");
        self.compose_unchecked(rhs)
    }
}

/// Iterator over all of `S_n` in lexicographic order of image lists.
pub struct SymmetricGroup {
    current: Option<Permutation>,
}

impl SymmetricGroup {
    pub fn new(n: usize) -> Self {
        SymmetricGroup { current: Some(Permutation::identity(n)) }
    }
}

impl Iterator for SymmetricGroup {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let out = self.current.take()?;
        let mut next = out.clone();
        if next.advance_lex() {
            self.current = Some(next);
        }
        Some(out)
    }
}

impl Permutation {
    /// Lexicographic rank of the image list in `0..n!`.
    pub fn rank(&self) -> usize {
        let n = self.degree();
        let mut rank = 0usize;
        for i in 0..n {
            let smaller = self.images[i + 1..].iter().filter(|&&v| v < self.images[i]).count();
            rank = rank * (n - i) + smaller;
        }
        rank
    }

    /// Whether `self` and `other` commute.
    pub fn commutes_with(&self, other: &Permutation) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| other.images[v - 1] == self.images[other.images[i] - 1])
    }

    /// All elements of the centralizer of `self`, refusing when there are more than `limit`.
    ///
    /// An element is determined by where it sends each cycle (to a cycle of the same
    /// length) and by a rotation.
    pub fn centralizer_elements(&self, limit: usize) -> Result<Vec<Permutation>> {
        let cycles = self.cycles();
        let order = centralizer_order(&cycles.iter().map(Vec::len).collect::<Vec<_>>());
        if order > limit as u128 {
            return Err(Error::GuardExceeded {
                what: "centralizer enumeration",
                size: order.min(usize::MAX as u128) as usize,
                limit,
            });
        }
        let mut out = Vec::with_capacity(order as usize);
        let mut images = vec![0; self.degree()];
        let mut target_used = vec![false; cycles.len()];
        fn assign(
            c: usize,
            cycles: &[Vec<usize>],
            images: &mut Vec<usize>,
            used: &mut Vec<bool>,
            out: &mut Vec<Permutation>,
        ) {
            if c == cycles.len() {
                out.push(Permutation { images: images.clone() });
                return;
            }
            let len = cycles[c].len();
            for t in 0..cycles.len() {
                if used[t] || cycles[t].len() != len {
                    continue;
                }
                used[t] = true;
                for r in 0..len {
                    for (i, &k) in cycles[c].iter().enumerate() {
                        images[k - 1] = cycles[t][(i + r) % len];
                    }
                    assign(c + 1, cycles, images, used, out);
                }
                used[t] = false;
            }
        }
        assign(0, &cycles, &mut images, &mut target_used, &mut out);
        Ok(out)
    }

    /// The lexicographically smallest conjugate of `self` together with one conjugator
    /// `s` achieving it (`s self s^{-1}` is the minimum): cycles by increasing length,
    /// each written on consecutive points.
    pub fn min_conjugate(&self) -> (Permutation, Permutation) {
        let mut cycles = self.cycles();
        cycles.sort_by_key(Vec::len);
        let n = self.degree();
        let mut s = vec![0; n];
        let mut min = vec![0; n];
        let mut next = 1;
        for cycle in &cycles {
            for (i, &k) in cycle.iter().enumerate() {
                s[k - 1] = next + i;
                min[next + i - 1] = next + (i + 1) % cycle.len();
            }
            next += cycle.len();
        }
        (Permutation { images: min }, Permutation { images: s })
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Order of the centralizer of a permutation with the given cycle lengths:
/// `prod_m m^{a_m} a_m!` where `a_m` counts cycles of length `m`.
pub fn centralizer_order(cycle_lengths: &[usize]) -> u128 {
    let mut sorted = cycle_lengths.to_vec();
    sorted.sort_unstable();
    let mut order = 1u128;
    let mut i = 0;
    while i < sorted.len() {
        let m = sorted[i];
        let mut a = 0;
        while i < sorted.len() && sorted[i] == m {
            a += 1;
            i += 1;
        }
        order *= (m as u128).pow(a as u32) * factorial(a);
    }
    order
}

/// Parameter of the Ewens measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EwensParams {
    z: Rational,
}

impl EwensParams {
    pub fn new(z: Rational) -> Result<Self> {
        if z <= Rational::zero() {
            return Err(invalid("Ewens parameter must be positive"));
        }
        Ok(EwensParams { z })
    }

    pub fn z(&self) -> Rational {
        self.z
    }

    /// `z (z+1) ... (z+n-1)`.
    pub fn rising_factorial(&self, n: usize) -> Rational {
        (0..n).fold(Rational::one(), |acc, i| acc * (self.z + Rational::from_integer(i as i128)))
    }
}

fn rational_pow(base: Rational, exp: usize) -> Rational {
    (0..exp).fold(Rational::one(), |acc, _| acc * base)
}

/// `μ^z_n(g) = z^{[g]} / (z (z+1) ... (z+n-1))`.
pub fn ewens_mass(p: &Permutation, params: &EwensParams) -> Rational {
    rational_pow(params.z, p.cycle_count()) / params.rising_factorial(p.degree())
}

/// `[h1^{-1} u h2] - [u]`.
pub fn rn_exponent_finite(h1: &Permutation, h2: &Permutation, u: &Permutation) -> Result<i64> {
    check_size(u.degree(), h1.degree())?;
    check_size(u.degree(), h2.degree())?;
    let moved = &(&h1.inverse() * u) * h2;
    Ok(moved.cycle_count() as i64 - u.cycle_count() as i64)
}

/// Outcome of a pushforward verification.
#[derive(Clone, Debug, PartialEq)]
pub struct PushforwardReport {
    pub n: usize,
    pub holds: bool,
    /// Number of `h ∈ S_{n-1}` whose fibre mass was compared.
    pub fibres_checked: usize,
    /// First `h` whose fibre mass disagrees, with (fibre mass, expected mass).
    pub violation: Option<(Permutation, Rational, Rational)>,
    /// Result of the equivariance sweep, when it was run (`n <= 5`).
    pub equivariant: Option<bool>,
}

/// Compares fibre sums of `upper` over `Υ^n_{n-1}` against `lower` on `S_{n-1}`.
pub fn check_pushforward<F, G>(n: usize, limit: usize, upper: F, lower: G) -> Result<PushforwardReport>
where
    F: Fn(&Permutation) -> Rational,
    G: Fn(&Permutation) -> Rational,
{
    if n < 2 {
        return Err(invalid("pushforward check needs n >= 2"));
    }
    guard("enumeration of S_n", n, limit)?;
    // Fibre sums indexed by the lexicographic rank of the image in S_{n-1}.
    let mut fibres: alloc::collections::BTreeMap<Permutation, Rational> = Default::default();
    for g in SymmetricGroup::new(n) {
        let h = g.project_step()?;
        *fibres.entry(h).or_insert_with(Rational::zero) += upper(&g);
    }
    let mut violation = None;
    for (h, mass) in &fibres {
        let expected = lower(h);
        if *mass != expected {
            violation = Some((h.clone(), *mass, expected));
            break;
        }
    }
    let covers = fibres.len() as u128 == factorial(n - 1);
    Ok(PushforwardReport {
        n,
        holds: violation.is_none() && covers,
        fibres_checked: fibres.len(),
        violation,
        equivariant: None,
    })
}

/// Exact check that `Υ^n_{n-1}` pushes `μ^z_n` to `μ^z_{n-1}`; for `n <= 5` also
/// sweeps `Υ(h1^{-1} g h2) = h1^{-1} Υ(g) h2` over all triples.
pub fn pushforward_check(n: usize, params: &EwensParams, limit: usize) -> Result<PushforwardReport> {
    let mut report = check_pushforward(n, limit, |g| ewens_mass(g, params), |h| ewens_mass(h, params))?;
    if n <= 5 {
        let eq = equivariance_check(n)?;
        report.holds &= eq;
        report.equivariant = Some(eq);
    }
    Ok(report)
}

/// Exhaustive equivariance of `Υ^n_{n-1}` under `S_{n-1} × S_{n-1}`.
pub fn equivariance_check(n: usize) -> Result<bool> {
    guard("equivariance sweep", n, 6)?;
    if n < 2 {
        return Err(invalid("equivariance check needs n >= 2"));
    }
    let small: Vec<Permutation> = SymmetricGroup::new(n - 1).collect();
    let small_inv: Vec<Permutation> = small.iter().map(Permutation::inverse).collect();
    let lifted: Vec<Permutation> = small.iter().map(|h| h.extend(n)).collect();
    let lifted_inv: Vec<Permutation> = small_inv.iter().map(|h| h.extend(n)).collect();
    for g in SymmetricGroup::new(n) {
        let pg = g.project_step()?;
        for (i1, h1_inv) in lifted_inv.iter().enumerate() {
            let left = h1_inv * &g;
            let left_small = &small_inv[i1] * &pg;
            for (i2, h2) in lifted.iter().enumerate() {
                let moved = (&left * h2).project_step()?;
                if moved != &left_small * &small[i2] {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Parses `"p/q"` or `"p"` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: i128 = num.parse().map_err(|_| invalid(format!("bad rational '{s}'")))?;
    let den: i128 = den.parse().map_err(|_| invalid(format!("bad rational '{s}'")))?;
    if den == 0 {
        return Err(Error::Domain(format!("zero denominator in '{s}'")));
    }
    Ok(Rational::new(num, den))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
