//! Chips: the diagrams that represent double cosets of the bisymmetric group.
//!
//! A chip in `S(α, β)` has `β` pairs of endpoints on top and `α` pairs on the
//! bottom, each pair split into a left and a right point. Arcs match all
//! endpoints and carry a length equal to half the number of crosses they pass;
//! closed circles of length `k ≥ 2` are kept as a sorted multiset. Lengths are
//! stored doubled (`len2`) so every quantity stays integral.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{check_size, invalid, Result};
use crate::perm::Permutation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcKind {
    /// Top-left `from` to bottom-left `to`.
    VerticalLeft,
    /// Top-right `from` to bottom-right `to`.
    VerticalRight,
    /// Top-left `from` to top-right `to`.
    HorizontalTop,
    /// Bottom-left `from` to bottom-right `to`.
    HorizontalBottom,
}

impl ArcKind {
    pub fn code(self) -> &'static str {
        match self {
            ArcKind::VerticalLeft => "vl",
            ArcKind::VerticalRight => "vr",
            ArcKind::HorizontalTop => "ht",
            ArcKind::HorizontalBottom => "hb",
        }
    }

    pub fn from_code(s: &str) -> Option<ArcKind> {
        Some(match s {
            "vl" => ArcKind::VerticalLeft,
            "vr" => ArcKind::VerticalRight,
            "ht" => ArcKind::HorizontalTop,
            "hb" => ArcKind::HorizontalBottom,
            _ => return None,
        })
    }

    fn is_vertical(self) -> bool {
        matches!(self, ArcKind::VerticalLeft | ArcKind::VerticalRight)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub kind: ArcKind,
    pub from: usize,
    pub to: usize,
    /// Twice the length, i.e. the number of crosses.
    pub len2: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

/// A morphism of the chip category, stored in a canonical normal form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chip {
    src: usize,
    dst: usize,
    arcs: Vec<Arc>,
    circles: Vec<u32>,
}

impl fmt::Debug for Chip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn half(len2: u32) -> String {
    if len2.is_multiple_of(2) {
        format!("{}", len2 / 2)
    } else {
        format!("{len2}/2")
    }
}

impl fmt::Display for Chip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S({},{})", self.dst, self.src)?;
        for a in &self.arcs {
            write!(f, " {}:{}-{}[{}]", a.kind.code(), a.from, a.to, half(a.len2))?;
        }
        for c in &self.circles {
            write!(f, " o[{c}]")?;
        }
        Ok(())
    }
}

// Endpoint numbering for tracing: top-left, top-right, bottom-left, bottom-right blocks.
struct Layout {
    top: usize,
    bottom: usize,
}

impl Layout {
    fn index(&self, side: Side, k: usize) -> usize {
        match side {
            Side::TopLeft => k - 1,
            Side::TopRight => self.top + k - 1,
            Side::BottomLeft => 2 * self.top + k - 1,
            Side::BottomRight => 2 * self.top + self.bottom + k - 1,
        }
    }

    fn side(&self, idx: usize) -> (Side, usize) {
        let t = self.top;
        let b = self.bottom;
        if idx < t {
            (Side::TopLeft, idx + 1)
        } else if idx < 2 * t {
            (Side::TopRight, idx - t + 1)
        } else if idx < 2 * t + b {
            (Side::BottomLeft, idx - 2 * t + 1)
        } else {
            (Side::BottomRight, idx - 2 * t - b + 1)
        }
    }

    fn size(&self) -> usize {
        2 * (self.top + self.bottom)
    }
}

fn arc_between(a: (Side, usize), b: (Side, usize), len2: u32) -> Option<Arc> {
    use Side::*;
    let (kind, from, to) = match (a.0, b.0) {
        (TopLeft, BottomLeft) => (ArcKind::VerticalLeft, a.1, b.1),
        (BottomLeft, TopLeft) => (ArcKind::VerticalLeft, b.1, a.1),
        (TopRight, BottomRight) => (ArcKind::VerticalRight, a.1, b.1),
        (BottomRight, TopRight) => (ArcKind::VerticalRight, b.1, a.1),
        (TopLeft, TopRight) => (ArcKind::HorizontalTop, a.1, b.1),
        (TopRight, TopLeft) => (ArcKind::HorizontalTop, b.1, a.1),
        (BottomLeft, BottomRight) => (ArcKind::HorizontalBottom, a.1, b.1),
        (BottomRight, BottomLeft) => (ArcKind::HorizontalBottom, b.1, a.1),
        _ => return None,
    };
    Some(Arc { kind, from, to, len2 })
}

fn endpoints(a: &Arc) -> ((Side, usize), (Side, usize)) {
    match a.kind {
        ArcKind::VerticalLeft => ((Side::TopLeft, a.from), (Side::BottomLeft, a.to)),
        ArcKind::VerticalRight => ((Side::TopRight, a.from), (Side::BottomRight, a.to)),
        ArcKind::HorizontalTop => ((Side::TopLeft, a.from), (Side::TopRight, a.to)),
        ArcKind::HorizontalBottom => ((Side::BottomLeft, a.from), (Side::BottomRight, a.to)),
    }
}

/// Graph on endpoints where every vertex has degree one (outer) or two (inner),
/// with a cross count per edge. Tracing it yields the arcs and circles of a chip.
struct Strands {
    adj: Vec<Vec<(usize, u32)>>,
}

impl Strands {
    fn new(size: usize) -> Self {
        Strands { adj: vec![Vec::new(); size] }
    }

    fn link(&mut self, a: usize, b: usize, crosses: u32) {
        self.adj[a].push((b, crosses));
        self.adj[b].push((a, crosses));
    }

    /// Paths between outer vertices as `(start, end, crosses)`, then loop cross counts.
    /// The graphs built here never carry parallel edges, so a walk leaves each inner
    /// vertex through the edge it did not arrive by.
    fn trace(&self, outer: impl Fn(usize) -> bool) -> (Vec<(usize, usize, u32)>, Vec<u32>) {
        let n = self.adj.len();
        let mut used = vec![false; n];
        let mut paths = Vec::new();
        let mut loops = Vec::new();
        for v in 0..n {
            if outer(v) && !used[v] {
                let (end, crosses) = self.walk(v, &mut used, &outer);
                paths.push((v, end, crosses));
            }
        }
        for v in 0..n {
            if !used[v] {
                let (_, crosses) = self.walk(v, &mut used, &outer);
                loops.push(crosses);
            }
        }
        (paths, loops)
    }

    fn walk(&self, start: usize, used: &mut [bool], outer: &impl Fn(usize) -> bool) -> (usize, u32) {
        used[start] = true;
        let (mut prev, (mut cur, mut crosses)) = (start, self.adj[start][0]);
        loop {
            if cur == start {
                return (start, crosses);
            }
            used[cur] = true;
            if outer(cur) {
                return (cur, crosses);
            }
            let &(next, c) = self.adj[cur].iter().find(|&&(w, _)| w != prev).expect("inner vertices have degree two");
            crosses += c;
            prev = cur;
            cur = next;
        }
    }
}

impl Chip {
    /// Validates a chip given by arcs and circles.
    pub fn new(src: usize, dst: usize, arcs: Vec<Arc>, circles: Vec<u32>) -> Result<Chip> {
        let layout = Layout { top: src, bottom: dst };
        let mut hit = vec![false; layout.size()];
        for a in &arcs {
            let (p, q) = endpoints(a);
            for (side, k) in [p, q] {
                let limit = match side {
                    Side::TopLeft | Side::TopRight => src,
                    _ => dst,
                };
                if k == 0 || k > limit {
                    return Err(invalid(format!("arc endpoint {k} outside 1..={limit}")));
                }
                let idx = layout.index(side, k);
                if hit[idx] {
                    return Err(invalid(format!("endpoint {k} matched twice")));
                }
                hit[idx] = true;
            }
            if a.kind.is_vertical() != (a.len2 % 2 == 0) {
                return Err(invalid("vertical arcs need integral and horizontal arcs half-integral lengths"));
            }
        }
        if hit.iter().any(|h| !h) {
            return Err(invalid("arcs do not cover every endpoint"));
        }
        if circles.iter().any(|&c| c < 2) {
            return Err(invalid("circles of length below 2 are not stored"));
        }
        Ok(Chip::normalized(src, dst, arcs, circles))
    }

    fn normalized(src: usize, dst: usize, mut arcs: Vec<Arc>, mut circles: Vec<u32>) -> Chip {
        arcs.sort_unstable();
        circles.sort_unstable();
        Chip { src, dst, arcs, circles }
    }

    /// Top pair count `β`.
    pub fn src(&self) -> usize {
        self.src
    }

    /// Bottom pair count `α`.
    pub fn dst(&self) -> usize {
        self.dst
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn circles(&self) -> &[u32] {
        &self.circles
    }

    pub fn identity(n: usize) -> Chip {
        lambda_chip(n, n).expect("n <= n")
    }

    /// The gluing product `self ∘ other`: the top of `self` is glued to the bottom of
    /// `other`. Requires `self.src() == other.dst()`.
    pub fn multiply(&self, other: &Chip) -> Result<Chip> {
        check_size(self.src, other.dst)?;
        let lf = Layout { top: self.src, bottom: self.dst };
        let lg = Layout { top: other.src, bottom: other.dst };
        let offset = lf.size();
        let mut strands = Strands::new(offset + lg.size());
        for a in &self.arcs {
            let (p, q) = endpoints(a);
            strands.link(lf.index(p.0, p.1), lf.index(q.0, q.1), a.len2);
        }
        for a in &other.arcs {
            let (p, q) = endpoints(a);
            strands.link(offset + lg.index(p.0, p.1), offset + lg.index(q.0, q.1), a.len2);
        }
        for k in 1..=self.src {
            strands.link(lf.index(Side::TopLeft, k), offset + lg.index(Side::BottomLeft, k), 0);
            strands.link(lf.index(Side::TopRight, k), offset + lg.index(Side::BottomRight, k), 0);
        }
        // Outer points: bottom of self and top of other.
        let outer = |idx: usize| {
            if idx < offset {
                matches!(lf.side(idx).0, Side::BottomLeft | Side::BottomRight)
            } else {
                matches!(lg.side(idx - offset).0, Side::TopLeft | Side::TopRight)
            }
        };
        let place = |idx: usize| if idx < offset { lf.side(idx) } else { lg.side(idx - offset) };
        let (paths, loops) = strands.trace(outer);
        let arcs = paths
            .into_iter()
            .map(|(a, b, c)| arc_between(place(a), place(b), c).expect("gluing keeps arc kinds"))
            .collect();
        let mut circles: Vec<u32> = self.circles.iter().chain(&other.circles).copied().collect();
        circles.extend(loops.into_iter().map(|c| c / 2).filter(|&c| c >= 2));
        Ok(Chip::normalized(other.src, self.dst, arcs, circles))
    }

    /// Exchanges top and bottom.
    pub fn involute(&self) -> Chip {
        let arcs = self
            .arcs
            .iter()
            .map(|a| match a.kind {
                ArcKind::VerticalLeft | ArcKind::VerticalRight => Arc { from: a.to, to: a.from, ..*a },
                ArcKind::HorizontalTop => Arc { kind: ArcKind::HorizontalBottom, ..*a },
                ArcKind::HorizontalBottom => Arc { kind: ArcKind::HorizontalTop, ..*a },
            })
            .collect();
        Chip::normalized(self.dst, self.src, arcs, self.circles.clone())
    }

    /// `self` with additional circles.
    pub fn with_circles(&self, extra: &[u32]) -> Result<Chip> {
        if extra.iter().any(|&c| c < 2) {
            return Err(invalid("circle lengths must be at least 2"));
        }
        let mut circles = self.circles.clone();
        circles.extend_from_slice(extra);
        Ok(Chip::normalized(self.src, self.dst, self.arcs.clone(), circles))
    }

    /// True when every arc is vertical of length 0 on the left, i.e. the left half is trivial.
    pub fn has_trivial_left(&self) -> bool {
        self.src == self.dst
            && self.arcs.iter().filter(|a| a.kind == ArcKind::VerticalLeft).all(|a| a.from == a.to && a.len2 == 0)
            && self.arcs.iter().all(|a| a.kind.is_vertical())
    }
}

/// `λ^m_n ∈ S(n, m)`: identity strands on `1..=n`, caps of length 1/2 joining the
/// top pairs `n+1..=m`.
pub fn lambda_chip(m: usize, n: usize) -> Result<Chip> {
    if n > m {
        return Err(invalid(format!("lambda chip needs n <= m, got n={n}, m={m}")));
    }
    let mut arcs = Vec::with_capacity(2 * n + (m - n));
    for i in 1..=n {
        arcs.push(Arc { kind: ArcKind::VerticalLeft, from: i, to: i, len2: 0 });
        arcs.push(Arc { kind: ArcKind::VerticalRight, from: i, to: i, len2: 0 });
    }
    for i in n + 1..=m {
        arcs.push(Arc { kind: ArcKind::HorizontalTop, from: i, to: i, len2: 1 });
    }
    Ok(Chip::normalized(m, n, arcs, Vec::new()))
}

/// `θ^β[j]`: fixes `1..=β` and swaps the blocks `(β, β+j]` and `(β+j, β+2j]`.
pub fn theta_element(beta: usize, j: usize) -> Permutation {
    let n = beta + 2 * j;
    let images = (1..=n)
        .map(|k| {
            if k <= beta {
                k
            } else if k <= beta + j {
                k + j
            } else {
                k - j
            }
        })
        .collect();
    Permutation::from_images(images).expect("block swap is a bijection")
}

/// The chip of the pair `(g1, g2)` in `S(α, β)`: left strands follow `g1`, right
/// strands follow `g2`, and pairs beyond `β` on top and beyond `α` on the bottom are
/// joined by connectors that each pass one cross.
pub fn chip_from_pair(g1: &Permutation, g2: &Permutation, alpha: usize, beta: usize) -> Chip {
    let n = g1.degree().max(g2.degree()).max(alpha).max(beta);
    let g1 = g1.extend(n);
    let g2 = g2.extend(n);
    let layout = Layout { top: n, bottom: n };
    let mut strands = Strands::new(layout.size());
    for i in 1..=n {
        strands.link(layout.index(Side::TopLeft, i), layout.index(Side::BottomLeft, g1.image(i)), 0);
        strands.link(layout.index(Side::TopRight, i), layout.index(Side::BottomRight, g2.image(i)), 0);
    }
    for k in beta + 1..=n {
        strands.link(layout.index(Side::TopLeft, k), layout.index(Side::TopRight, k), 1);
    }
    for k in alpha + 1..=n {
        strands.link(layout.index(Side::BottomLeft, k), layout.index(Side::BottomRight, k), 1);
    }
    let outer = |idx: usize| {
        let (side, k) = layout.side(idx);
        match side {
            Side::TopLeft | Side::TopRight => k <= beta,
            _ => k <= alpha,
        }
    };
    let (paths, loops) = strands.trace(outer);
    let arcs = paths
        .into_iter()
        .map(|(a, b, c)| arc_between(layout.side(a), layout.side(b), c).expect("strands keep arc kinds"))
        .collect();
    let circles = loops.into_iter().map(|c| c / 2).filter(|&c| c >= 2).collect();
    Chip::normalized(beta, alpha, arcs, circles)
}

fn check_cycle_lengths(lengths: &[usize]) -> Result<()> {
    if lengths.iter().any(|&k| k < 2) {
        return Err(invalid("cycle lengths must be at least 2"));
    }
    Ok(())
}

/// The central element with circles of the given lengths, padded by identity strands to `S(n, n)`.
pub fn center_element(lengths: &[usize], n: usize) -> Result<Chip> {
    check_cycle_lengths(lengths)?;
    let circles: Vec<u32> = lengths.iter().map(|&k| k as u32).collect();
    Chip::identity(n).with_circles(&circles)
}

/// The permutation with consecutive blocks of the given lengths as cycles.
pub fn cycles_representative(lengths: &[usize]) -> Result<Permutation> {
    check_cycle_lengths(lengths)?;
    let n: usize = lengths.iter().sum();
    let mut cycles = Vec::with_capacity(lengths.len());
    let mut start = 1;
    for &k in lengths {
        cycles.push((start..start + k).collect::<Vec<_>>());
        start += k;
    }
    Permutation::from_cycles(n, &cycles)
}

/// Data of a chip with trivial left half: the right strands send top `j` to bottom
/// `σ(j)` with length `φ_j`, plus circles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrivialLeftChip {
    pub sigma: Permutation,
    pub phi: Vec<usize>,
    pub circles: Vec<usize>,
}

impl TrivialLeftChip {
    pub fn new(sigma: Permutation, phi: Vec<usize>, circles: Vec<usize>) -> Result<Self> {
        check_size(sigma.degree(), phi.len())?;
        check_cycle_lengths(&circles)?;
        Ok(TrivialLeftChip { sigma, phi, circles })
    }

    pub fn identity(n: usize) -> Self {
        TrivialLeftChip { sigma: Permutation::identity(n), phi: vec![0; n], circles: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.sigma.degree()
    }

    /// `N = n + Σφ + Σk`, the degree of [`Self::representative`].
    pub fn total_degree(&self) -> usize {
        self.n() + self.phi.iter().sum::<usize>() + self.circles.iter().sum::<usize>()
    }

    /// A permutation `g ∈ S_N` with `chip_from_pair(e, g, n, n)` equal to this chip:
    /// `j` runs through `φ_j` fresh points before reaching `σ(j)`, and each circle is a
    /// cycle on fresh points.
    pub fn representative(&self) -> Permutation {
        let n = self.n();
        let total = self.total_degree();
        let mut images = vec![0; total];
        let mut next = n + 1;
        for j in 1..=n {
            let mut cur = j;
            for _ in 0..self.phi[j - 1] {
                images[cur - 1] = next;
                cur = next;
                next += 1;
            }
            images[cur - 1] = self.sigma.image(j);
        }
        for &k in &self.circles {
            for i in 0..k {
                images[next + i - 1] = next + (i + 1) % k;
            }
            next += k;
        }
        Permutation::from_images(images).expect("chains and cycles cover 1..=N")
    }

    pub fn chip(&self) -> Chip {
        let n = self.n();
        let mut arcs = Vec::with_capacity(2 * n);
        for j in 1..=n {
            arcs.push(Arc { kind: ArcKind::VerticalLeft, from: j, to: j, len2: 0 });
            arcs.push(Arc {
                kind: ArcKind::VerticalRight,
                from: j,
                to: self.sigma.image(j),
                len2: 2 * self.phi[j - 1] as u32,
            });
        }
        Chip::normalized(n, n, arcs, self.circles.iter().map(|&k| k as u32).collect())
    }
}

/// Outcome of the θ-stabilization check for one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizationReport {
    pub product: Chip,
    /// Smallest `j` from which every computed chip equals the product.
    pub stable_from: Option<usize>,
    /// Largest `j` computed.
    pub j_max: usize,
    /// The a priori bound: the largest point moved by any of the four permutations.
    pub support_bound: usize,
}

impl StabilizationReport {
    pub fn holds(&self) -> bool {
        self.stable_from.is_some_and(|j| j <= self.support_bound.max(1))
    }
}

/// Largest point moved by `g`, or 0 for the identity.
pub fn support_bound(g: &Permutation) -> usize {
    (1..=g.degree()).rev().find(|&k| g.image(k) != k).unwrap_or(0)
}

/// Tracks `chip_from_pair(g θ^β[j] h)` for `j = 1..=j_max` against the product
/// `chip(g; α, β) ∘ chip(h; β, γ)`.
pub fn theta_stabilization(
    g: (&Permutation, &Permutation),
    h: (&Permutation, &Permutation),
    alpha: usize,
    beta: usize,
    gamma: usize,
    j_max: usize,
) -> Result<StabilizationReport> {
    let product = chip_from_pair(g.0, g.1, alpha, beta).multiply(&chip_from_pair(h.0, h.1, beta, gamma))?;
    let bound = [g.0, g.1, h.0, h.1].iter().map(|p| support_bound(p)).max().unwrap_or(0);
    let mut stable_from = None;
    for j in 1..=j_max {
        let theta = theta_element(beta, j);
        let n = theta.degree().max(g.0.degree()).max(g.1.degree()).max(h.0.degree()).max(h.1.degree());
        let t = theta.extend(n);
        let left = &(&g.0.extend(n) * &t) * &h.0.extend(n);
        let right = &(&g.1.extend(n) * &t) * &h.1.extend(n);
        if chip_from_pair(&left, &right, alpha, gamma) == product {
            stable_from.get_or_insert(j);
        } else {
            stable_from = None;
        }
    }
    Ok(StabilizationReport { product, stable_from, j_max, support_bound: bound })
}

/// A random chip of `S(α, β)` from a random pair of degree `degree`.
pub fn random_chip<R: Rng + ?Sized>(alpha: usize, beta: usize, degree: usize, rng: &mut R) -> Chip {
    let d = degree.max(alpha).max(beta);
    let g1 = Permutation::random(d, rng);
    let g2 = Permutation::random(d, rng);
    chip_from_pair(&g1, &g2, alpha, beta)
}
