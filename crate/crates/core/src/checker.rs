//! Checker surfaces: oriented surfaces glued from `n` white and `n` black
//! triangles along edges of three colors `a`, `b`, `c`.
//!
//! A labeled surface is a triple `(ga, gb, gc)` of permutations: white triangle
//! `k` is glued along its `x`-edge to black triangle `gx(k)`. Vertices are of
//! three types. By the color rule a vertex between edges `a` and `b` has type
//! C and corresponds to a cycle of `ga^{-1} gb`; type A sits between `b` and `c`
//! (cycles of `gb^{-1} gc`) and type B between `c` and `a` (cycles of
//! `gc^{-1} ga`).
//!
//! The engines use surfaces `Σ(g, 1, u^{-1})` given by a pair `(g, u)` and a
//! different lettering: A-vertices are cycles of `g`, B-vertices cycles of `u`
//! and C-vertices cycles of `u g`. [`EngineSurface`] uses that lettering.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::chip::cycles_representative;
use crate::error::{check_size, guard, invalid, Result};
use crate::perm::{centralizer_order, factorial, Permutation, SymmetricGroup};

/// Limit on centralizer sizes walked by canonical forms and automorphism counts.
pub const CENTRALIZER_LIMIT: usize = 5_000_000;

/// Default limit on `n` for the enumeration of `Γ[{k_j}]`.
pub const GAMMA_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    A,
    B,
    C,
}

/// An edge of color `color` between white triangle `white` and black triangle `black`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub color: Color,
    pub white: usize,
    pub black: usize,
}

/// Labeled checker surface.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CheckerSurface {
    ga: Permutation,
    gb: Permutation,
    gc: Permutation,
}

/// A vertex: its type and the white triangles around it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub kind: Color,
    pub whites: Vec<usize>,
}

impl Vertex {
    /// Half the valence, i.e. the number of white triangles at the vertex.
    pub fn order(&self) -> usize {
        self.whites.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceStats {
    pub a: Vec<Vertex>,
    pub b: Vec<Vertex>,
    pub c: Vec<Vertex>,
    pub euler: i64,
    pub components: usize,
    /// Genus of each connected component, ordered by smallest white triangle.
    pub genera: Vec<i64>,
}

impl SurfaceStats {
    pub fn orders(vertices: &[Vertex]) -> Vec<usize> {
        let mut o: Vec<usize> = vertices.iter().map(Vertex::order).collect();
        o.sort_unstable_by(|a, b| b.cmp(a));
        o
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl CheckerSurface {
    pub fn from_triple(ga: Permutation, gb: Permutation, gc: Permutation) -> Result<Self> {
        check_size(ga.degree(), gb.degree())?;
        check_size(ga.degree(), gc.degree())?;
        if ga.degree() == 0 {
            return Err(invalid("a checker surface needs at least one triangle pair"));
        }
        Ok(CheckerSurface { ga, gb, gc })
    }

    pub fn n(&self) -> usize {
        self.ga.degree()
    }

    pub fn triple(&self) -> (&Permutation, &Permutation, &Permutation) {
        (&self.ga, &self.gb, &self.gc)
    }

    fn gluing(&self, color: Color) -> &Permutation {
        match color {
            Color::A => &self.ga,
            Color::B => &self.gb,
            Color::C => &self.gc,
        }
    }

    /// The `3n` edges of the triangulation.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(3 * self.n());
        for color in [Color::A, Color::B, Color::C] {
            let g = self.gluing(color);
            for k in 1..=self.n() {
                out.push(Edge { color, white: k, black: g.image(k) });
            }
        }
        out
    }

    /// Reads the gluing permutations back off an edge list.
    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self> {
        let mut maps = [vec![0usize; n], vec![0usize; n], vec![0usize; n]];
        for e in edges {
            if e.white == 0 || e.white > n || e.black == 0 || e.black > n {
                return Err(invalid(format!("edge {e:?} outside 1..={n}")));
            }
            let slot = &mut maps[e.color as usize][e.white - 1];
            if *slot != 0 {
                return Err(invalid(format!("white triangle {} has two {:?}-edges", e.white, e.color)));
            }
            *slot = e.black;
        }
        let [a, b, c] = maps;
        let make = |m: Vec<usize>| {
            Permutation::from_images(m).map_err(|_| invalid("each black triangle needs one edge of every color"))
        };
        CheckerSurface::from_triple(make(a)?, make(b)?, make(c)?)
    }

    /// Vertices found by identifying triangle corners across edges, independent of the
    /// cycle formulas. Each vertex lists its white triangles in increasing order.
    pub fn vertices(&self) -> Vec<Vertex> {
        let n = self.n();
        // Corner slots: 0 = between a and b (C), 1 = between b and c (A), 2 = between c and a (B).
        // Whites use ids 0..3n, blacks 3n..6n.
        let corner = |black: bool, t: usize, slot: usize| (if black { 3 * n } else { 0 }) + 3 * (t - 1) + slot;
        let mut uf = UnionFind::new(6 * n);
        for e in self.edges() {
            // The edge of color x has its ends at the two corners touching x.
            let ends: [usize; 2] = match e.color {
                Color::A => [0, 2],
                Color::B => [0, 1],
                Color::C => [1, 2],
            };
            for s in ends {
                uf.union(corner(false, e.white, s), corner(true, e.black, s));
            }
        }
        let mut classes: BTreeMap<usize, Vertex> = BTreeMap::new();
        for k in 1..=n {
            for (slot, kind) in [(0, Color::C), (1, Color::A), (2, Color::B)] {
                let root = uf.find(corner(false, k, slot));
                classes.entry(root).or_insert_with(|| Vertex { kind, whites: Vec::new() }).whites.push(k);
            }
        }
        let mut out: Vec<Vertex> = classes.into_values().collect();
        out.sort_by(|x, y| x.kind.cmp(&y.kind).then(x.whites.cmp(&y.whites)));
        out
    }

    /// Connected components as sets of white triangles.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut uf = UnionFind::new(2 * n);
        for e in self.edges() {
            uf.union(e.white - 1, n + e.black - 1);
        }
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 1..=n {
            by_root.entry(uf.find(k - 1)).or_default().push(k);
        }
        let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
        out.sort();
        out
    }

    /// Vertices grouped by type, Euler characteristic `V - E + F = V - n`, genera.
    pub fn stats(&self) -> SurfaceStats {
        let vertices = self.vertices();
        let components = self.components();
        let n = self.n();
        let mut comp_of = vec![0; n];
        for (c, whites) in components.iter().enumerate() {
            for &k in whites {
                comp_of[k - 1] = c;
            }
        }
        let mut v_per = vec![0i64; components.len()];
        for v in &vertices {
            v_per[comp_of[v.whites[0] - 1]] += 1;
        }
        let genera = components.iter().zip(&v_per).map(|(whites, &v)| (2 - (v - whites.len() as i64)) / 2).collect();
        let euler = vertices.len() as i64 - n as i64;
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        for v in vertices {
            match v.kind {
                Color::A => a.push(v),
                Color::B => b.push(v),
                Color::C => c.push(v),
            }
        }
        SurfaceStats { a, b, c, euler, components: components.len(), genera }
    }

    /// Representative of the relabeling class `(τ ga σ^{-1}, τ gb σ^{-1}, τ gc σ^{-1})`:
    /// the lexicographic minimum of the orbit.
    pub fn canonical_form(&self) -> Result<UnlabeledSurface> {
        // Choosing τ = σ ga^{-1} makes the first entry the identity, which is the
        // smallest possible; the remaining freedom conjugates x = ga^{-1} gb and
        // y = ga^{-1} gc by σ, and x is minimized first.
        let inv = self.ga.inverse();
        let x = &inv * &self.gb;
        let y = &inv * &self.gc;
        let (x_min, s0) = x.min_conjugate();
        let mut best: Option<Permutation> = None;
        let mut stab = 0u64;
        for c in x.centralizer_elements(CENTRALIZER_LIMIT)? {
            if y.commutes_with(&c) {
                stab += 1;
            }
            let conj = y.conjugate_by(&(&s0 * &c));
            if best.as_ref().is_none_or(|b| conj < *b) {
                best = Some(conj);
            }
        }
        let gc = best.expect("centralizers contain the identity");
        Ok(UnlabeledSurface {
            representative: CheckerSurface { ga: Permutation::identity(self.n()), gb: x_min, gc },
            stabilizer_order: stab,
        })
    }

    pub fn isomorphic(&self, other: &CheckerSurface) -> Result<bool> {
        if self.n() != other.n() {
            return Ok(false);
        }
        Ok(self.canonical_form()?.representative == other.canonical_form()?.representative)
    }

    /// The dessin left after removing the edges of colors `a` and `b`: A- and B-vertices
    /// joined by the `c`-edges, one per white triangle.
    pub fn to_dessin_dot(&self) -> String {
        let stats = self.stats();
        let mut out = String::new();
        let _ = writeln!(out, "graph dessin {{");
        let _ = writeln!(out, "  node [shape=circle];");
        let mut a_of = vec![0; self.n()];
        let mut b_of = vec![0; self.n()];
        for (i, v) in stats.a.iter().enumerate() {
            let _ = writeln!(out, "  a{} [label=\"A{}\", style=filled, fillcolor=white];", i + 1, i + 1);
            for &k in &v.whites {
                a_of[k - 1] = i + 1;
            }
        }
        for (i, v) in stats.b.iter().enumerate() {
            let _ =
                writeln!(out, "  b{} [label=\"B{}\", style=filled, fillcolor=black, fontcolor=white];", i + 1, i + 1);
            for &k in &v.whites {
                b_of[k - 1] = i + 1;
            }
        }
        for k in 1..=self.n() {
            let _ = writeln!(out, "  a{} -- b{} [label=\"{}\"];", a_of[k - 1], b_of[k - 1], k);
        }
        let _ = writeln!(out, "}}");
        out
    }

    /// Inserts new triangle pairs into the `c`-edge at black triangle `black`: each new
    /// label `q` gets `a`- and `b`-edges to its own black triangle, and the `c`-edges
    /// run `gc^{-1}(black) -> q_r -> ... -> q_1 -> black`. The new labels must be
    /// `n+1..=n+r` in some order.
    pub fn insert_on_c_edge(&self, black: usize, labels: &[usize]) -> Result<CheckerSurface> {
        let n = self.n();
        let r = labels.len();
        let expected: BTreeSet<usize> = (n + 1..=n + r).collect();
        if labels.iter().copied().collect::<BTreeSet<_>>() != expected || black == 0 || black > n {
            return Err(invalid("inserted labels must be n+1..=n+r and the black triangle must exist"));
        }
        if r == 0 {
            return Ok(self.clone());
        }
        let white = self.gc.inverse().image(black);
        let mut edges: Vec<Edge> =
            self.edges().into_iter().filter(|e| !(e.color == Color::C && e.white == white)).collect();
        for &q in labels {
            edges.push(Edge { color: Color::A, white: q, black: q });
            edges.push(Edge { color: Color::B, white: q, black: q });
        }
        edges.push(Edge { color: Color::C, white, black: labels[r - 1] });
        for i in (1..r).rev() {
            edges.push(Edge { color: Color::C, white: labels[i], black: labels[i - 1] });
        }
        edges.push(Edge { color: Color::C, white: labels[0], black });
        CheckerSurface::from_edges(n + r, &edges)
    }
}

/// Canonical representative of a relabeling class with the order of its stabilizer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnlabeledSurface {
    pub representative: CheckerSurface,
    pub stabilizer_order: u64,
}

/// The surface `Σ(g, 1, u^{-1})` with A = cycles of `g`, B = cycles of `u`, C = cycles of `u g`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EngineSurface {
    pub g: Permutation,
    pub u: Permutation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Automorphisms {
    /// `#{σ : σ g = g σ, σ u = u σ}`.
    pub full_order: u64,
    /// Those that also map every cycle of `u` onto itself.
    pub b_fixing_order: u64,
}

impl EngineSurface {
    pub fn new(g: Permutation, u: Permutation) -> Result<Self> {
        check_size(g.degree(), u.degree())?;
        Ok(EngineSurface { g, u })
    }

    pub fn n(&self) -> usize {
        self.g.degree()
    }

    /// `w = u g`, whose cycles are the C-vertices.
    pub fn w(&self) -> Permutation {
        &self.u * &self.g
    }

    pub fn to_checker(&self) -> CheckerSurface {
        CheckerSurface { ga: self.g.clone(), gb: Permutation::identity(self.n()), gc: self.u.inverse() }
    }

    pub fn a_cycles(&self) -> Vec<Vec<usize>> {
        self.g.cycles()
    }

    pub fn b_cycles(&self) -> Vec<Vec<usize>> {
        self.u.cycles()
    }

    pub fn c_cycles(&self) -> Vec<Vec<usize>> {
        self.w().cycles()
    }

    /// Stats in the engine lettering; Euler characteristic and genera come from the triangulation.
    pub fn stats(&self) -> SurfaceStats {
        let base = self.to_checker().stats();
        let as_vertices = |kind: Color, cycles: Vec<Vec<usize>>| {
            cycles
                .into_iter()
                .map(|mut whites| {
                    whites.sort_unstable();
                    Vertex { kind, whites }
                })
                .collect::<Vec<_>>()
        };
        SurfaceStats {
            a: as_vertices(Color::A, self.a_cycles()),
            b: as_vertices(Color::B, self.b_cycles()),
            c: as_vertices(Color::C, self.c_cycles()),
            ..base
        }
    }

    /// `m[β][γ]`: black triangles with B-vertex `β` and C-vertex `γ`. Black triangle `j`
    /// sits at the `u`-cycle of `j` and the `w`-cycle of `g^{-1}(j)`. Rows and columns
    /// follow [`Self::b_cycles`] and [`Self::c_cycles`].
    pub fn incidence_matrix(&self) -> Vec<Vec<u32>> {
        let b_idx = self.u.cycle_index();
        let w = self.w();
        let c_idx = w.cycle_index();
        let mut m = vec![vec![0u32; w.cycle_count()]; self.u.cycle_count()];
        let g_inv = self.g.inverse();
        for j in 1..=self.n() {
            m[b_idx[j - 1]][c_idx[g_inv.image(j) - 1]] += 1;
        }
        m
    }

    pub fn automorphisms(&self) -> Result<Automorphisms> {
        let b_idx = self.u.cycle_index();
        let mut full = 0;
        let mut fixing = 0;
        for s in self.g.centralizer_elements(CENTRALIZER_LIMIT)? {
            if !s.commutes_with(&self.u) {
                continue;
            }
            full += 1;
            if (1..=self.n()).all(|k| b_idx[s.image(k) - 1] == b_idx[k - 1]) {
                fixing += 1;
            }
        }
        Ok(Automorphisms { full_order: full, b_fixing_order: fixing })
    }

    /// `#C - #B`.
    pub fn rn_exponent(&self) -> i64 {
        self.w().cycle_count() as i64 - self.u.cycle_count() as i64
    }
}

/// One class of `Γ[{k_j}]`: surfaces with A-orders `{k_j}` up to relabeling,
/// represented with `g` fixed to the block representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaClass {
    pub surface: EngineSurface,
    /// Number of `u` in the class (`|C(g)| / full_order`).
    pub orbit_size: u64,
    pub automorphisms: Automorphisms,
    pub incidence: Vec<Vec<u32>>,
    pub b_orders: Vec<usize>,
    pub c_orders: Vec<usize>,
}

/// Classes of pairs `(g, u)` with `g` of cycle type `lengths` under simultaneous
/// conjugation; `g` is fixed and `u` runs over orbits of the centralizer of `g`.
pub fn enumerate_gamma(lengths: &[usize], limit: usize) -> Result<Vec<GammaClass>> {
    let g = cycles_representative(lengths)?;
    let n = g.degree();
    guard("enumeration of Γ", n, limit)?;
    let cent = g.centralizer_elements(CENTRALIZER_LIMIT)?;
    let mut seen = vec![false; factorial(n) as usize];
    let mut out = Vec::new();
    for u in SymmetricGroup::new(n) {
        if seen[u.rank()] {
            continue;
        }
        // Visiting in lexicographic order makes the first element of each orbit its minimum.
        let mut orbit = 0u64;
        for c in &cent {
            let v = u.conjugate_by(c);
            let r = v.rank();
            if !seen[r] {
                seen[r] = true;
                orbit += 1;
            }
        }
        let surface = EngineSurface { g: g.clone(), u };
        let automorphisms = surface.automorphisms()?;
        debug_assert_eq!(orbit * automorphisms.full_order, cent.len() as u64);
        let incidence = surface.incidence_matrix();
        let b_orders = surface.b_cycles().iter().map(Vec::len).collect();
        let c_orders = surface.c_cycles().iter().map(Vec::len).collect();
        out.push(GammaClass { surface, orbit_size: orbit, automorphisms, incidence, b_orders, c_orders });
    }
    Ok(out)
}

/// Number of conjugation orbits of `C(g)` on `S_n` by Burnside: the average over
/// `c ∈ C(g)` of the centralizer order of `c`.
pub fn burnside_class_count(lengths: &[usize]) -> Result<u128> {
    let g = cycles_representative(lengths)?;
    let cent = g.centralizer_elements(CENTRALIZER_LIMIT)?;
    let total: u128 = cent.iter().map(|c| centralizer_order(&c.cycle_type())).sum();
    Ok(total / cent.len() as u128)
}

/// The bipartite ribbon graph of `(g, h)`: edges `1..=n`, A-vertices with rotation
/// `g`, B-vertices with rotation `h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RibbonGraph {
    pub g: Permutation,
    pub h: Permutation,
}

/// Dart of edge `label` at its A end (`at_a`) or B end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dart {
    pub label: usize,
    pub at_a: bool,
}

impl RibbonGraph {
    pub fn new(g: Permutation, h: Permutation) -> Result<Self> {
        check_size(g.degree(), h.degree())?;
        Ok(RibbonGraph { g, h })
    }

    /// Boundary components traced counterclockwise: cross the edge, then step back
    /// once in the rotation of the vertex reached.
    pub fn boundary_components(&self) -> Vec<Vec<Dart>> {
        let n = self.g.degree();
        let (g_inv, h_inv) = (self.g.inverse(), self.h.inverse());
        let step = |d: Dart| {
            if d.at_a {
                Dart { label: h_inv.image(d.label), at_a: false }
            } else {
                Dart { label: g_inv.image(d.label), at_a: true }
            }
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for label in 1..=n {
            for at_a in [true, false] {
                let start = Dart { label, at_a };
                if seen.contains(&start) {
                    continue;
                }
                let mut face = Vec::new();
                let mut d = start;
                while seen.insert(d) {
                    face.push(d);
                    d = step(d);
                }
                out.push(face);
            }
        }
        out
    }

    /// For every boundary component, the labels of its A-origin edges and of its
    /// B-origin edges, each in walking order.
    pub fn boundary_labels(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        self.boundary_components()
            .into_iter()
            .map(|face| {
                let a = face.iter().filter(|d| d.at_a).map(|d| d.label).collect();
                let b = face.iter().filter(|d| !d.at_a).map(|d| d.label).collect();
                (a, b)
            })
            .collect()
    }
}

/// Normalizes a cyclic sequence to start at its minimum.
pub fn rotate_to_min(seq: &[usize]) -> Vec<usize> {
    let Some(pos) = seq.iter().enumerate().min_by_key(|&(_, v)| v).map(|(i, _)| i) else {
        return Vec::new();
    };
    seq[pos..].iter().chain(&seq[..pos]).copied().collect()
}

/// Cycles of `p` as a sorted list of cyclic sequences starting at their minimum.
pub fn cycle_set(p: &Permutation) -> Vec<Vec<usize>> {
    let mut c = p.cycles();
    c.sort();
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn p(images: &[usize]) -> Permutation {
        Permutation::from_images(images.to_vec()).unwrap()
    }

    fn random_surface(n: usize, seed: u64) -> CheckerSurface {
        let mut rng = rng_from_seed(seed);
        CheckerSurface::from_triple(
            Permutation::random(n, &mut rng),
            Permutation::random(n, &mut rng),
            Permutation::random(n, &mut rng),
        )
        .unwrap()
    }

    #[test]
    fn spheres() {
        let one = CheckerSurface::from_triple(p(&[1]), p(&[1]), p(&[1])).unwrap();
        let s = one.stats();
        assert_eq!((s.a.len(), s.b.len(), s.c.len(), s.euler, s.components), (1, 1, 1, 2, 1));
        assert_eq!(s.genera, vec![0]);
        let e = Permutation::identity(2);
        let two = CheckerSurface::from_triple(e.clone(), e.clone(), e).unwrap().stats();
        assert_eq!((two.components, two.euler), (2, 4));
        assert!(CheckerSurface::from_triple(p(&[1]), p(&[2, 1]), p(&[1])).is_err());
    }

    #[test]
    fn corner_vertices_match_cycle_formulas() {
        for seed in 0..200 {
            let n = 1 + seed as usize % 6;
            let s = random_surface(n, seed);
            let st = s.stats();
            let (ga, gb, gc) = s.triple();
            let sets = |vs: &[Vertex]| {
                let mut v: Vec<Vec<usize>> = vs.iter().map(|v| v.whites.clone()).collect();
                v.sort();
                v
            };
            let sorted_cycles = |q: Permutation| {
                let mut c: Vec<Vec<usize>> = q
                    .cycles()
                    .into_iter()
                    .map(|mut c| {
                        c.sort_unstable();
                        c
                    })
                    .collect();
                c.sort();
                c
            };
            assert_eq!(sets(&st.c), sorted_cycles(&ga.inverse() * gb));
            assert_eq!(sets(&st.a), sorted_cycles(&gb.inverse() * gc));
            assert_eq!(sets(&st.b), sorted_cycles(&gc.inverse() * ga));
            assert_eq!(st.euler % 2, 0);
            assert!(st.euler <= 2 * st.components as i64);
            assert!(st.genera.iter().all(|&g| g >= 0));
            assert_eq!(st.euler, 2 * st.components as i64 - 2 * st.genera.iter().sum::<i64>());
        }
    }

    #[test]
    fn edge_round_trip() {
        for seed in 0..200 {
            let s = random_surface(1 + seed as usize % 6, seed);
            assert_eq!(CheckerSurface::from_edges(s.n(), &s.edges()).unwrap(), s);
        }
        let bad = [Edge { color: Color::A, white: 1, black: 1 }, Edge { color: Color::A, white: 1, black: 1 }];
        assert!(CheckerSurface::from_edges(1, &bad).is_err());
    }

    #[test]
    fn engine_examples() {
        let t = p(&[2, 1]);
        let e = Permutation::identity(2);
        let s1 = EngineSurface::new(t.clone(), e.clone()).unwrap();
        let st = s1.stats();
        assert_eq!(SurfaceStats::orders(&st.a), vec![2]);
        assert_eq!(SurfaceStats::orders(&st.b), vec![1, 1]);
        assert_eq!(SurfaceStats::orders(&st.c), vec![2]);
        assert_eq!((st.components, st.euler), (1, 2));
        assert_eq!(s1.incidence_matrix(), vec![vec![1], vec![1]]);
        assert_eq!(s1.automorphisms().unwrap(), Automorphisms { full_order: 2, b_fixing_order: 1 });

        let s2 = EngineSurface::new(t.clone(), t).unwrap();
        let st = s2.stats();
        assert_eq!(SurfaceStats::orders(&st.b), vec![2]);
        assert_eq!(SurfaceStats::orders(&st.c), vec![1, 1]);
        assert_eq!(s2.incidence_matrix(), vec![vec![1, 1]]);
        assert_eq!(s2.automorphisms().unwrap(), Automorphisms { full_order: 2, b_fixing_order: 2 });

        let trivial = EngineSurface::new(p(&[1]), p(&[1])).unwrap();
        assert_eq!(trivial.automorphisms().unwrap().full_order, 1);
    }

    #[test]
    fn engine_lettering_is_a_shift_of_the_color_rule() {
        let mut rng = rng_from_seed(4);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let s = EngineSurface::new(Permutation::random(n, &mut rng), Permutation::random(n, &mut rng)).unwrap();
            let engine = s.stats();
            let color = s.to_checker().stats();
            let sets = |vs: &[Vertex]| {
                let mut v: Vec<Vec<usize>> = vs.iter().map(|v| v.whites.clone()).collect();
                v.sort();
                v
            };
            assert_eq!(sets(&engine.a), sets(&color.c));
            assert_eq!(sets(&engine.b), sets(&color.a));
            assert_eq!(sets(&engine.c), sets(&color.b));
            let m = s.incidence_matrix();
            let rows: Vec<u32> = m.iter().map(|r| r.iter().sum()).collect();
            let b_len: Vec<u32> = s.b_cycles().iter().map(|c| c.len() as u32).collect();
            assert_eq!(rows, b_len);
            let cols: Vec<u32> = (0..m[0].len()).map(|j| m.iter().map(|r| r[j]).sum()).collect();
            let c_len: Vec<u32> = s.c_cycles().iter().map(|c| c.len() as u32).collect();
            assert_eq!(cols, c_len);
        }
    }

    #[test]
    fn canonical_forms_against_orbits() {
        for seed in 0..40 {
            let n = 1 + seed as usize % 4;
            let s = random_surface(n, seed);
            let canon = s.canonical_form().unwrap();
            let mut orbit = BTreeSet::new();
            let mut stab = 0u64;
            let all: Vec<Permutation> = SymmetricGroup::new(n).collect();
            for sigma in &all {
                let si = sigma.inverse();
                for tau in &all {
                    let (ga, gb, gc) = s.triple();
                    let moved = CheckerSurface { ga: &(tau * ga) * &si, gb: &(tau * gb) * &si, gc: &(tau * gc) * &si };
                    if moved == s {
                        stab += 1;
                    }
                    orbit.insert(moved);
                }
            }
            assert_eq!(orbit.iter().next().unwrap(), &canon.representative);
            assert_eq!(stab, canon.stabilizer_order);
            assert_eq!(orbit.len() as u128 * stab as u128, factorial(n) * factorial(n));
        }
    }

    #[test]
    fn colors_are_not_interchangeable() {
        let t = p(&[2, 1]);
        let e = Permutation::identity(2);
        let x = CheckerSurface::from_triple(t.clone(), e.clone(), e.clone()).unwrap();
        let y = CheckerSurface::from_triple(e.clone(), t.clone(), e.clone()).unwrap();
        assert!(!x.isomorphic(&y).unwrap());
        let s = random_surface(4, 3);
        let mut rng = rng_from_seed(3);
        let (sig, tau) = (Permutation::random(4, &mut rng), Permutation::random(4, &mut rng));
        let (ga, gb, gc) = s.triple();
        let si = sig.inverse();
        let moved = CheckerSurface::from_triple(&(&tau * ga) * &si, &(&tau * gb) * &si, &(&tau * gc) * &si).unwrap();
        assert!(s.isomorphic(&moved).unwrap());
    }

    #[test]
    fn gamma_for_a_transposition() {
        let classes = enumerate_gamma(&[2], GAMMA_LIMIT).unwrap();
        assert_eq!(classes.len(), 2);
        let profiles: BTreeSet<(Vec<usize>, Vec<usize>)> =
            classes.iter().map(|c| (c.b_orders.clone(), c.c_orders.clone())).collect();
        assert!(profiles.contains(&(vec![1, 1], vec![2])));
        assert!(profiles.contains(&(vec![2], vec![1, 1])));
    }

    #[test]
    fn gamma_counts_match_burnside() {
        for lengths in [vec![2], vec![3], vec![2, 2], vec![4], vec![2, 3], vec![3, 3], vec![2, 2, 2]] {
            let classes = enumerate_gamma(&lengths, GAMMA_LIMIT).unwrap();
            assert_eq!(classes.len() as u128, burnside_class_count(&lengths).unwrap(), "{lengths:?}");
            let n: usize = lengths.iter().sum();
            assert_eq!(classes.iter().map(|c| c.orbit_size as u128).sum::<u128>(), factorial(n));
            for c in &classes {
                let mut a: Vec<usize> = c.surface.a_cycles().iter().map(Vec::len).collect();
                a.sort_unstable();
                let mut want = lengths.clone();
                want.sort_unstable();
                assert_eq!(a, want);
            }
        }
        assert!(enumerate_gamma(&[2, 2, 2, 3], GAMMA_LIMIT).is_err());
        assert!(enumerate_gamma(&[1], GAMMA_LIMIT).is_err());
    }

    #[test]
    fn dessins() {
        let one = CheckerSurface::from_triple(p(&[1]), p(&[1]), p(&[1])).unwrap();
        let dot = one.to_dessin_dot();
        assert_eq!(dot.matches("label=\"A").count() + dot.matches("label=\"B").count(), 2);
        assert_eq!(dot.matches(" -- ").count(), 1);
        let s = random_surface(5, 9);
        let st = s.stats();
        let dot = s.to_dessin_dot();
        assert_eq!(dot.matches("fillcolor=white").count(), st.a.len());
        assert_eq!(dot.matches("fillcolor=black").count(), st.b.len());
        assert_eq!(dot.matches(" -- ").count(), 5);
    }

    #[test]
    fn ribbon_faces_give_products() {
        let mut rng = rng_from_seed(12);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let g = Permutation::random(n, &mut rng);
            let h = Permutation::random(n, &mut rng);
            let r = RibbonGraph::new(g.clone(), h.clone()).unwrap();
            let labels = r.boundary_labels();
            // Walking follows the inverse, so reverse before comparing cyclic sequences.
            let norm = |seqs: Vec<Vec<usize>>| {
                let mut v: Vec<Vec<usize>> = seqs
                    .into_iter()
                    .map(|mut s| {
                        s.reverse();
                        rotate_to_min(&s)
                    })
                    .collect();
                v.sort();
                v
            };
            let a = norm(labels.iter().map(|(a, _)| a.clone()).collect());
            let b = norm(labels.iter().map(|(_, b)| b.clone()).collect());
            assert_eq!(a, cycle_set(&(&h * &g)));
            assert_eq!(b, cycle_set(&(&g * &h)));
            let engine = EngineSurface::new(g, h).unwrap();
            assert_eq!(labels.len(), engine.c_cycles().len());
        }
    }

    #[test]
    fn insertion_matches_direct_construction() {
        let mut rng = rng_from_seed(21);
        for _ in 0..100 {
            let n = rng.random_range(1..=5);
            let r = rng.random_range(0..=3);
            let g = Permutation::random(n, &mut rng);
            let h = Permutation::random(n, &mut rng);
            let j = rng.random_range(1..=n);
            let mut qs: Vec<usize> = (n + 1..=n + r).collect();
            for i in (1..qs.len()).rev() {
                qs.swap(i, rng.random_range(0..=i));
            }
            let surgery =
                EngineSurface::new(g.clone(), h.clone()).unwrap().to_checker().insert_on_c_edge(j, &qs).unwrap();
            // Insert q_1..q_r after j in the cycle of h.
            let mut images: Vec<usize> = h.extend(n + r).images().to_vec();
            let k = h.image(j);
            let mut cur = j;
            for &q in &qs {
                images[cur - 1] = q;
                cur = q;
            }
            images[cur - 1] = k;
            let inserted = Permutation::from_images(images).unwrap();
            assert_eq!(inserted.project(n).unwrap(), h);
            let direct = EngineSurface::new(g.extend(n + r), inserted).unwrap().to_checker();
            assert_eq!(surgery, direct);
        }
    }

    proptest! {
        #[test]
        fn engine_euler_is_even(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = rng_from_seed(seed);
            let s = EngineSurface::new(Permutation::random(n, &mut rng), Permutation::random(n, &mut rng)).unwrap();
            let st = s.stats();
            let v = (st.a.len() + st.b.len() + st.c.len()) as i64;
            prop_assert_eq!(v - n as i64, st.euler);
            prop_assert_eq!(st.euler % 2, 0);
            prop_assert!(st.genera.iter().all(|&g| g >= 0));
        }
    }
}
