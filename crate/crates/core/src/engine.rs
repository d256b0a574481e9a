//! Spreaded images of central elements `○[k_1, .., k_p]` and of chips with trivial
//! left half, computed by enumerating framed surfaces, plus the Monte Carlo
//! simulators that act on sampled guests directly.
//!
//! A central element acts by seating `n = Σ k_j` guests at random, applying the
//! cut-and-glue action of `(e, g)` with `g` the block cycle representative, and
//! forgetting the guests. The guests' clockwise order `u` and the tables they land
//! on (a framing of the B-vertices `cycles(u)`) have probability
//! `∏_β ℓ^{m_β} / (m_β - 1)!`; given both, the arcs of a table are uniform spacings,
//! so the lengths of the new tables (cycles of `u g`) follow a convolution of
//! Dirichlet laws read off the incidence matrix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::checker::{enumerate_gamma, EngineSurface};
use crate::chip::{cycles_representative, TrivialLeftChip};
use crate::error::{check_size, guard, invalid, Error, Result};
use crate::mixture::{
    ComponentKey, Destination, EmpiricalSummary, MixtureComponent, MixtureMeasure, Observation, Source,
};
use crate::perm::{factorial, Permutation, Rational, SymmetricGroup};
use crate::restaurant::{Guest, OccupiedRestaurant, Restaurant, Table, TableId};
use crate::rng::{rng_from_seed, Seed};
use crate::stats::fnv1a;

/// Default bound on the number of guests an engine enumerates over.
pub const ENGINE_GUARD: usize = 6;

/// Default bound on the number of framed surfaces visited.
pub const FRAMING_LIMIT: u128 = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineLimits {
    pub guard: usize,
    pub framings: u128,
}

impl Default for EngineLimits {
    fn default() -> Self {
        EngineLimits { guard: ENGINE_GUARD, framings: FRAMING_LIMIT }
    }
}

/// Automorphism order dividing each class in the class-sum engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisorMode {
    /// Automorphisms mapping every B-vertex to itself.
    AutB,
    /// All automorphisms of the pair `(g, u)`.
    FullAut,
}

/// The constant multiplying each class in the class-sum engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefactorConvention {
    /// `∏ k_j ∏_m ι_m!`, the order of the centralizer of `g`.
    CentralizerOrder,
    /// `∏ k_j ∏_m ι_m`.
    IotaNoFactorial,
    /// `∏ k_j!`.
    FactorialK,
}

/// `ι_m`: how many of the `k_j` equal `m`.
pub fn multiplicities(lengths: &[usize]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for &k in lengths {
        *out.entry(k).or_insert(0) += 1;
    }
    out
}

pub fn prefactor(lengths: &[usize], convention: PrefactorConvention) -> u128 {
    let prod_k: u128 = lengths.iter().map(|&k| k as u128).product();
    let iota = multiplicities(lengths);
    match convention {
        PrefactorConvention::CentralizerOrder => prod_k * iota.values().map(|&i| factorial(i)).product::<u128>(),
        PrefactorConvention::IotaNoFactorial => prod_k * iota.values().map(|&i| i as u128).product::<u128>(),
        PrefactorConvention::FactorialK => lengths.iter().map(|&k| factorial(k)).product(),
    }
}

fn push_u64(bytes: &mut Vec<u8>, x: u64) {
    bytes.extend_from_slice(&x.to_le_bytes());
}

/// Hash of an engine input: a tag, integer data and an occupied restaurant.
pub fn fingerprint(tag: &str, data: &[usize], occ: &OccupiedRestaurant) -> u64 {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(tag.as_bytes());
    push_u64(&mut bytes, data.len() as u64);
    for &d in data {
        push_u64(&mut bytes, d as u64);
    }
    let r = occ.restaurant();
    push_u64(&mut bytes, r.tail_mass().to_bits());
    for t in r.tables() {
        push_u64(&mut bytes, t.id);
        push_u64(&mut bytes, t.length.to_bits());
    }
    for g in occ.guests() {
        push_u64(&mut bytes, g.table);
        push_u64(&mut bytes, g.pos.to_bits());
    }
    fnv1a(&bytes)
}

pub fn cycles_fingerprint(lengths: &[usize], r: &Restaurant) -> u64 {
    fingerprint("cycles", lengths, &OccupiedRestaurant::from(r.clone()))
}

pub fn chip_fingerprint(chip: &TrivialLeftChip, point: &OccupiedRestaurant) -> u64 {
    let mut data: Vec<usize> = chip.sigma.images().to_vec();
    data.push(usize::MAX);
    data.extend_from_slice(&chip.phi);
    data.push(usize::MAX);
    data.extend_from_slice(&chip.circles);
    fingerprint("chip", &data, point)
}

/// `t (t-1) .. (t-b+1)`.
fn falling(t: usize, b: usize) -> u128 {
    if b > t {
        return 0;
    }
    (0..b).map(|i| (t - i) as u128).product()
}

/// Calls `f` on every injective map `0..b -> 0..t`, in lexicographic order.
fn for_each_injection(b: usize, t: usize, f: &mut impl FnMut(&[usize])) {
    fn go(pos: usize, t: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, f: &mut impl FnMut(&[usize])) {
        if pos == cur.len() {
            f(cur);
            return;
        }
        for x in 0..t {
            if !used[x] {
                used[x] = true;
                cur[pos] = x;
                go(pos + 1, t, cur, used, f);
                used[x] = false;
            }
        }
    }
    if b > t {
        return;
    }
    go(0, t, &mut vec![0; b], &mut vec![false; t], f);
}

fn inverse_factorials(sizes: impl IntoIterator<Item = usize>) -> Rational {
    let mut den: i128 = 1;
    for s in sizes {
        den *= factorial(s) as i128;
    }
    Rational::new(1, den)
}

fn check_framings(count: u128, limits: &EngineLimits) -> Result<()> {
    if count > limits.framings {
        return Err(Error::GuardExceeded {
            what: "framed surface enumeration",
            size: count.min(usize::MAX as u128) as usize,
            limit: limits.framings.min(usize::MAX as u128) as usize,
        });
    }
    Ok(())
}

fn engine_preamble(lengths: &[usize], limits: &EngineLimits) -> Result<Permutation> {
    let g = cycles_representative(lengths)?;
    if lengths.is_empty() {
        return Err(invalid("a central element needs at least one cycle"));
    }
    guard("engine over guests", g.degree(), limits.guard)?;
    Ok(g)
}

/// Accumulates exact coefficients per canonical key.
struct Merger {
    lengths: BTreeMap<TableId, f64>,
    arcs: Vec<f64>,
    terms: BTreeMap<ComponentKey, (Rational, i64)>,
}

impl Merger {
    fn new(tables: &[Table], arcs: Vec<f64>) -> Self {
        Merger { lengths: tables.iter().map(|t| (t.id, t.length)).collect(), arcs, terms: BTreeMap::new() }
    }

    fn add(&mut self, key: ComponentKey, coefficient: Rational, exponent: i64) {
        let entry = self.terms.entry(key.canonical()).or_insert((Rational::from_integer(0), exponent));
        entry.0 += coefficient;
        debug_assert_eq!(entry.1, exponent);
    }

    fn finish(self, truncation_error: f64, fingerprint: u64) -> MixtureMeasure {
        let components = self
            .terms
            .into_iter()
            .map(|(key, (coef, exponent))| {
                let lens = key
                    .sources
                    .iter()
                    .map(|s| match s {
                        Source::Arc(i) => self.arcs[i - 1],
                        Source::Table(id) => self.lengths[id],
                    })
                    .collect();
                MixtureComponent::new(key, lens, coef, exponent)
            })
            .collect();
        MixtureMeasure { components, truncation_error, fingerprint }
    }
}

fn table_key(surface: &EngineSurface, incidence: &[Vec<u32>], framing: &[usize], tables: &[Table]) -> ComponentKey {
    ComponentKey {
        rho: None,
        sources: framing.iter().map(|&t| Source::Table(tables[t].id)).collect(),
        destinations: vec![Destination::NewTable; surface.w().cycle_count()],
        counts: incidence.to_vec(),
    }
}

fn framing_count(surfaces: impl Iterator<Item = usize>, tables: usize) -> u128 {
    surfaces.map(|b| falling(tables, b)).sum()
}

/// The labeled engine: a sum over `u ∈ S_n` and injective framings of
/// `cycles(u)` into the stored tables.
pub fn act_cycles(lengths: &[usize], r: &Restaurant, limits: &EngineLimits) -> Result<MixtureMeasure> {
    let g = engine_preamble(lengths, limits)?;
    let n = g.degree();
    let tables = r.tables();
    check_framings(framing_count(SymmetricGroup::new(n).map(|u| u.cycle_count()), tables.len()), limits)?;
    let mut merger = Merger::new(tables, Vec::new());
    for u in SymmetricGroup::new(n) {
        let surface = EngineSurface { g: g.clone(), u };
        let incidence = surface.incidence_matrix();
        let coef = inverse_factorials(surface.u.cycles().iter().map(|c| c.len() - 1));
        let exponent = surface.rn_exponent();
        for_each_injection(surface.u.cycle_count(), tables.len(), &mut |framing| {
            merger.add(table_key(&surface, &incidence, framing, tables), coef, exponent);
        });
    }
    let truncation = (1.0 - libm::pow(r.stored_mass(), n as f64)).max(0.0);
    Ok(merger.finish(truncation, cycles_fingerprint(lengths, r)))
}

/// The class-sum engine: one term per class of `Γ[{k_j}]` and framing, scaled by
/// `prefactor / |Aut|`.
pub fn act_cycles_literal(
    lengths: &[usize],
    r: &Restaurant,
    limits: &EngineLimits,
    divisor: DivisorMode,
    convention: PrefactorConvention,
) -> Result<MixtureMeasure> {
    let g = engine_preamble(lengths, limits)?;
    let n = g.degree();
    let tables = r.tables();
    let classes = enumerate_gamma(lengths, limits.guard)?;
    check_framings(framing_count(classes.iter().map(|c| c.b_orders.len()), tables.len()), limits)?;
    let pre = prefactor(lengths, convention) as i128;
    let mut merger = Merger::new(tables, Vec::new());
    for class in &classes {
        let aut = match divisor {
            DivisorMode::AutB => class.automorphisms.b_fixing_order,
            DivisorMode::FullAut => class.automorphisms.full_order,
        };
        let factor = Rational::new(pre, aut as i128);
        let surface = &class.surface;
        let coef = factor * inverse_factorials(class.b_orders.iter().map(|&m| m - 1));
        let exponent = surface.rn_exponent();
        for_each_injection(class.b_orders.len(), tables.len(), &mut |framing| {
            merger.add(table_key(surface, &class.incidence, framing, tables), coef, exponent);
        });
    }
    let truncation = (1.0 - libm::pow(r.stored_mass(), n as f64)).max(0.0);
    Ok(merger.finish(truncation, cycles_fingerprint(lengths, r)))
}

fn project_or_empty(p: &Permutation, n: usize) -> Result<Permutation> {
    if n == 0 {
        Ok(Permutation::identity(0))
    } else {
        p.project(n)
    }
}

/// One term of the chip engine: the clockwise order `u` of all `N` guests, where
/// the added guests sit, and what the action builds from the pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct FramedStructure {
    pub u: Permutation,
    /// Location of guests `n+1..=N`.
    pub placement: Vec<Source>,
    pub rho: Permutation,
    /// Canonical; the pieces of a labeled arc or free table are counted per destination.
    pub key: ComponentKey,
    pub source_lengths: Vec<f64>,
    pub coefficient: Rational,
    pub weight: f64,
    pub rn_exponent: i64,
    /// Permutations fixing `1..=n` that commute with `g` and `u` and keep every cycle of `u`.
    pub aut_b: u64,
}

struct ChipSetup {
    n: usize,
    g: Permutation,
    tau: Permutation,
    arcs: Vec<f64>,
    free: Vec<Table>,
}

fn chip_setup(chip: &TrivialLeftChip, point: &OccupiedRestaurant, limits: &EngineLimits) -> Result<ChipSetup> {
    let n = chip.n();
    check_size(n, point.guest_count())?;
    guard("chip engine over guests", chip.total_degree(), limits.guard)?;
    let tau = if n == 0 { Permutation::identity(0) } else { point.project_finite(n)? };
    let arcs = if n == 0 { Vec::new() } else { point.arc_lengths(n)? };
    let free = if n == 0 { point.restaurant().tables().to_vec() } else { point.free_tables(n)? };
    Ok(ChipSetup { n, g: chip.representative(), tau, arcs, free })
}

/// Every framed structure of the chip acting on the point, unmerged.
pub fn enumerate_gamma_framed(
    chip: &TrivialLeftChip,
    point: &OccupiedRestaurant,
    limits: &EngineLimits,
) -> Result<Vec<FramedStructure>> {
    let setup = chip_setup(chip, point, limits)?;
    let mut out = Vec::new();
    visit_chip_structures(&setup, limits, &mut |s| out.push(s))?;
    Ok(out)
}

fn visit_chip_structures(setup: &ChipSetup, limits: &EngineLimits, f: &mut impl FnMut(FramedStructure)) -> Result<()> {
    let ChipSetup { n, g, tau, arcs, free } = setup;
    let (n, big_n) = (*n, g.degree());
    let orders: Vec<Permutation> =
        SymmetricGroup::new(big_n).filter(|u| project_or_empty(u, n).is_ok_and(|p| p == *tau)).collect();
    let free_cycles = |u: &Permutation| u.cycles().into_iter().filter(|c| c[0] > n).collect::<Vec<_>>();
    check_framings(orders.iter().map(|u| falling(free.len(), free_cycles(u).len())).sum(), limits)?;
    let v_of = |u: &Permutation| u * g;
    for u in &orders {
        let u_inv = u.inverse();
        let cycles = free_cycles(u);
        // Arc of each added guest that rides with a labeled guest.
        let mut on_arc = vec![0usize; big_n + 1];
        let mut per_arc = vec![0usize; n];
        for (q, slot) in on_arc.iter_mut().enumerate().skip(n + 1) {
            let mut p = u_inv.image(q);
            while p > n && p != q {
                p = u_inv.image(p);
            }
            if p <= n {
                *slot = p;
                per_arc[p - 1] += 1;
            }
        }
        let v = v_of(u);
        let rho = project_or_empty(&v, n)?;
        let rn_exponent = v.cycle_count() as i64 - u.cycle_count() as i64;
        let base_coef =
            inverse_factorials(per_arc.iter().copied()) * inverse_factorials(cycles.iter().map(|c| c.len() - 1));
        let mut cycle_of = vec![usize::MAX; big_n + 1];
        for (c, cycle) in cycles.iter().enumerate() {
            for &q in cycle {
                cycle_of[q] = c;
            }
        }
        // Destinations: labeled arcs of v, then the v-cycles without labeled guests.
        let mut destinations = Vec::new();
        let mut dest_of_piece = vec![0usize; big_n + 1];
        for cycle in v.cycles() {
            match cycle.iter().position(|&k| k <= n) {
                Some(start) => {
                    let mut current = 0;
                    for i in 0..cycle.len() {
                        let k = cycle[(start + i) % cycle.len()];
                        if k <= n {
                            current = destinations.len();
                            destinations.push(Destination::Arc(k));
                        }
                        dest_of_piece[g.image(k)] = current;
                    }
                }
                None => {
                    let d = destinations.len();
                    destinations.push(Destination::NewTable);
                    for &k in &cycle {
                        dest_of_piece[g.image(k)] = d;
                    }
                }
            }
        }
        let aut_b = aut_b_order(n, g, u);
        let mut fail = None;
        for_each_injection(cycles.len(), free.len(), &mut |framing| {
            let mut sources: Vec<Source> = (1..=n).map(Source::Arc).collect();
            sources.extend(framing.iter().map(|&t| Source::Table(free[t].id)));
            let locate = |q: usize| -> usize {
                if q <= n {
                    q - 1
                } else if on_arc[q] > 0 {
                    on_arc[q] - 1
                } else {
                    n + cycle_of[q]
                }
            };
            let mut counts = vec![vec![0u32; destinations.len()]; sources.len()];
            for q in 1..=big_n {
                counts[locate(q)][dest_of_piece[q]] += 1;
            }
            let placement = (n + 1..=big_n).map(|q| sources[locate(q)]).collect();
            let key = ComponentKey { rho: Some(rho.clone()), sources, destinations: destinations.clone(), counts }
                .canonical();
            let source_lengths = key
                .sources
                .iter()
                .map(|s| match s {
                    Source::Arc(i) => arcs[i - 1],
                    Source::Table(id) => free.iter().find(|t| t.id == *id).map_or(0.0, |t| t.length),
                })
                .collect();
            let component = MixtureComponent::new(key, source_lengths, base_coef, rn_exponent);
            if component.weight.is_nan() {
                fail = Some(invalid("non-finite weight"));
            }
            f(FramedStructure {
                u: u.clone(),
                placement,
                rho: rho.clone(),
                key: component.key,
                source_lengths: component.source_lengths,
                coefficient: base_coef,
                weight: component.weight,
                rn_exponent,
                aut_b,
            });
        });
        if let Some(e) = fail {
            return Err(e);
        }
    }
    Ok(())
}

fn aut_b_order(n: usize, g: &Permutation, u: &Permutation) -> u64 {
    let big_n = g.degree();
    let idx = u.cycle_index();
    let mut count = 0;
    for p in SymmetricGroup::new(big_n - n) {
        let images: Vec<usize> = (1..=big_n).map(|k| if k <= n { k } else { n + p.image(k - n) }).collect();
        let s = Permutation::from_images(images).expect("lifted permutation");
        if s.commutes_with(g) && s.commutes_with(u) && (1..=big_n).all(|k| idx[s.image(k) - 1] == idx[k - 1]) {
            count += 1;
        }
    }
    count
}

/// Spreaded image of an occupied restaurant with `n` guests under a chip with trivial
/// left half, computed through `(λ^N_n)^* g λ^N_n`: seat the added guests, act by
/// `(e, g)` with `g` the chip's representative, forget the added guests.
pub fn act_chip(chip: &TrivialLeftChip, point: &OccupiedRestaurant, limits: &EngineLimits) -> Result<MixtureMeasure> {
    let setup = chip_setup(chip, point, limits)?;
    let mut tables = setup.free.clone();
    tables.sort_by_key(|t| t.id);
    let mut merger = Merger::new(&tables, setup.arcs.clone());
    visit_chip_structures(&setup, limits, &mut |s| merger.add(s.key, s.coefficient, s.rn_exponent))?;
    let added = chip.total_degree() - chip.n();
    let truncation = (1.0 - libm::pow(point.restaurant().stored_mass(), added as f64)).max(0.0);
    Ok(merger.finish(truncation, chip_fingerprint(chip, point)))
}

/// A labeled framed surface with its unnormalized probability.
#[derive(Clone, Debug, PartialEq)]
pub struct FramedSurface {
    pub u: Permutation,
    /// Table of each cycle of `u`, in the order of `u.cycles()`.
    pub framing: Vec<TableId>,
    pub weight: f64,
}

/// Samples the action of a central element on an occupied restaurant through the
/// framed surfaces: pick `(u, framing)` by weight, seat auxiliary guests on each
/// framed table at sorted uniform positions in the cyclic order of `u` (rotated at
/// random), act by `(e, g)` on them and forget them.
#[derive(Clone, Debug)]
pub struct CenterSampler {
    g: Permutation,
    surfaces: Vec<FramedSurface>,
    index: WeightedIndex<f64>,
}

impl CenterSampler {
    pub fn new(lengths: &[usize], r: &Restaurant, limits: &EngineLimits) -> Result<Self> {
        let g = engine_preamble(lengths, limits)?;
        let n = g.degree();
        let tables = r.tables();
        check_framings(framing_count(SymmetricGroup::new(n).map(|u| u.cycle_count()), tables.len()), limits)?;
        let mut surfaces = Vec::new();
        for u in SymmetricGroup::new(n) {
            let cycles = u.cycles();
            let coef = crate::perm::rational_to_f64(&inverse_factorials(cycles.iter().map(|c| c.len() - 1)));
            for_each_injection(cycles.len(), tables.len(), &mut |framing| {
                let weight = cycles
                    .iter()
                    .zip(framing)
                    .map(|(c, &t)| libm::pow(tables[t].length, c.len() as f64))
                    .product::<f64>()
                    * coef;
                surfaces.push(FramedSurface {
                    u: u.clone(),
                    framing: framing.iter().map(|&t| tables[t].id).collect(),
                    weight,
                });
            });
        }
        let index = WeightedIndex::new(surfaces.iter().map(|s| s.weight))
            .map_err(|_| invalid("no framed surface has positive weight"))?;
        Ok(CenterSampler { g, surfaces, index })
    }

    pub fn surfaces(&self) -> &[FramedSurface] {
        &self.surfaces
    }

    /// `occ` must have the restaurant the sampler was built on.
    pub fn sample<R: Rng + ?Sized>(&self, occ: &OccupiedRestaurant, rng: &mut R) -> Result<(i64, OccupiedRestaurant)> {
        let surface = &self.surfaces[self.index.sample(rng)];
        let n = self.g.degree();
        let base = occ.guest_count();
        let mut aux = vec![Guest { table: 0, pos: 0.0 }; n];
        for (cycle, &id) in surface.u.cycles().iter().zip(&surface.framing) {
            let len = occ
                .restaurant()
                .table(id)
                .ok_or_else(|| invalid(format!("table {id} is not in the restaurant")))?
                .length;
            let m = cycle.len();
            let mut pos: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * len).collect();
            pos.sort_by(f64::total_cmp);
            let shift = rng.random_range(0..m);
            for (i, &p) in pos.iter().enumerate() {
                aux[cycle[(i + shift) % m] - 1] = Guest { table: id, pos: p };
            }
        }
        let mut guests = occ.guests().to_vec();
        guests.extend(aux);
        let seated = OccupiedRestaurant::new(occ.restaurant().clone(), guests)?;
        let labels: Vec<usize> = (base + 1..=base + n).collect();
        let out = seated.act_on_guests(&labels, &Permutation::identity(n), &self.g)?;
        Ok((out.rn_exponent, out.occupied.forget_guests(base)?))
    }
}

pub fn act_center_sample(
    lengths: &[usize],
    occ: &OccupiedRestaurant,
    limits: &EngineLimits,
    seed: Seed,
) -> Result<(i64, OccupiedRestaurant)> {
    let sampler = CenterSampler::new(lengths, occ.restaurant(), limits)?;
    sampler.sample(occ, &mut rng_from_seed(seed))
}

/// The direct route for a central element on an occupied restaurant: seat `n`
/// auxiliary guests independently, act by `(e, g)` on them, forget them.
pub fn center_direct<R: Rng + ?Sized>(
    g: &Permutation,
    occ: &OccupiedRestaurant,
    rng: &mut R,
) -> Result<(i64, OccupiedRestaurant)> {
    let n = g.degree();
    let base = occ.guest_count();
    let seated = occ.place_guests_with(n, rng);
    let labels: Vec<usize> = (base + 1..=base + n).collect();
    let out = seated.act_on_guests(&labels, &Permutation::identity(n), g)?;
    Ok((out.rn_exponent, out.occupied.forget_guests(base)?))
}

/// One direct sample of a central element acting on a restaurant without guests.
pub fn simulate_cycles_once<R: Rng + ?Sized>(
    g: &Permutation,
    r: &OccupiedRestaurant,
    rng: &mut R,
) -> Result<Observation> {
    let placed = r.place_guests_with(g.degree(), rng);
    let out = placed.act_detailed(&Permutation::identity(g.degree()), g)?;
    debug_assert_eq!(out.created.len() as i64 - out.removed.len() as i64, out.rn_exponent);
    let mut obs = Observation {
        exponent: out.rn_exponent,
        removed: out.removed.iter().map(|t| t.length).collect(),
        created: out.created.iter().map(|t| t.length).collect(),
        arcs: Vec::new(),
    };
    obs.normalize();
    Ok(obs)
}

/// One direct sample of a chip acting on an occupied restaurant with `n` guests.
pub fn simulate_chip_once<R: Rng + ?Sized>(
    g: &Permutation,
    n: usize,
    point: &OccupiedRestaurant,
    rng: &mut R,
) -> Result<Observation> {
    let big_n = g.degree();
    let placed = point.place_guests_with(big_n - n, rng);
    let out = placed.act_detailed(&Permutation::identity(big_n), g)?;
    let after = out.occupied.forget_guests(n)?;
    let before_free = point.free_tables(n)?;
    let after_free = after.free_tables(n)?;
    let before_ids: BTreeSet<TableId> = before_free.iter().map(|t| t.id).collect();
    let after_ids: BTreeSet<TableId> = after_free.iter().map(|t| t.id).collect();
    let mut obs = Observation {
        exponent: out.rn_exponent,
        removed: before_free.iter().filter(|t| !after_ids.contains(&t.id)).map(|t| t.length).collect(),
        created: after_free.iter().filter(|t| !before_ids.contains(&t.id)).map(|t| t.length).collect(),
        arcs: if n == 0 { Vec::new() } else { after.arc_lengths(n)? },
    };
    obs.normalize();
    Ok(obs)
}

/// Which direct simulation to run.
#[derive(Clone, Debug, PartialEq)]
pub enum Simulation {
    Cycles { lengths: Vec<usize>, restaurant: Restaurant },
    Chip { chip: TrivialLeftChip, point: OccupiedRestaurant },
}

impl Simulation {
    pub fn fingerprint(&self) -> u64 {
        match self {
            Simulation::Cycles { lengths, restaurant } => cycles_fingerprint(lengths, restaurant),
            Simulation::Chip { chip, point } => chip_fingerprint(chip, point),
        }
    }

    /// Runs `samples` independent draws from one seed.
    pub fn run(&self, samples: u64, seed: Seed, grid: &[f64], keep_marginal: bool) -> Result<EmpiricalSummary> {
        let mut rng = rng_from_seed(seed);
        let mut summary = EmpiricalSummary::new(self.fingerprint(), grid.to_vec(), keep_marginal);
        match self {
            Simulation::Cycles { lengths, restaurant } => {
                let g = cycles_representative(lengths)?;
                let occ = OccupiedRestaurant::from(restaurant.clone());
                for _ in 0..samples {
                    summary.record(&simulate_cycles_once(&g, &occ, &mut rng)?);
                }
            }
            Simulation::Chip { chip, point } => {
                check_size(chip.n(), point.guest_count())?;
                let g = chip.representative();
                for _ in 0..samples {
                    summary.record(&simulate_chip_once(&g, chip.n(), point, &mut rng)?);
                }
            }
        }
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{compare_report, Thresholds};
    use crate::perm::Rational;
    use crate::restaurant::{sample_tables, SamplerMethod, Truncation};
    use crate::stats::{ks_critical_two_sample, ks_two_sample, linear_grid, total_variation};

    fn z1() -> Rational {
        Rational::from_integer(1)
    }

    fn five_tables(seed: u64) -> Restaurant {
        let mut rng = rng_from_seed(seed);
        let raw: Vec<f64> = (0..5).map(|_| 0.1 + rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum::<f64>() / 0.97;
        let lengths: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let tail = 1.0 - lengths.iter().sum::<f64>();
        Restaurant::from_lengths(z1(), &lengths, tail).unwrap()
    }

    #[test]
    fn prefactors() {
        assert_eq!(prefactor(&[2, 2], PrefactorConvention::CentralizerOrder), 8);
        assert_eq!(prefactor(&[2, 2, 3], PrefactorConvention::IotaNoFactorial), 2 * 2 * 3 * 2);
        assert_eq!(prefactor(&[3, 2], PrefactorConvention::FactorialK), 12);
        for l in [vec![2], vec![3], vec![2, 2], vec![2, 3], vec![2, 2, 2]] {
            let c = crate::perm::centralizer_order(&l);
            assert_eq!(prefactor(&l, PrefactorConvention::CentralizerOrder), c);
        }
    }

    #[test]
    fn transposition_has_two_classes_of_components() {
        let r = Restaurant::from_lengths(z1(), &[0.5, 0.3, 0.2], 0.0).unwrap();
        let m = act_cycles(&[2], &r, &EngineLimits::default()).unwrap();
        assert_eq!(m.components.len(), 3 + 3);
        for c in &m.components {
            let removed = c.removed();
            let lens: Vec<f64> = removed.iter().map(|id| r.table(*id).unwrap().length).collect();
            if removed.len() == 1 {
                assert_eq!(c.rn_exponent, 1);
                assert_eq!(c.coefficient, Rational::from_integer(1));
                assert!((c.weight - lens[0] * lens[0]).abs() < 1e-15);
                assert_eq!(c.key.counts, vec![vec![1, 1]]);
            } else {
                assert_eq!(c.rn_exponent, -1);
                assert_eq!(c.coefficient, Rational::from_integer(2));
                assert!((c.weight - 2.0 * lens[0] * lens[1]).abs() < 1e-15);
                assert_eq!(c.key.counts, vec![vec![1], vec![1]]);
            }
        }
        let mass = m.total_mass();
        assert!((mass.total - 1.0).abs() < 1e-12 && mass.within_bounds);
        let single = Restaurant::from_lengths(z1(), &[1.0], 0.0).unwrap();
        let s = act_cycles(&[2], &single, &EngineLimits::default()).unwrap();
        assert_eq!(s.components.len(), 1);
        assert_eq!((s.components[0].weight, s.components[0].rn_exponent), (1.0, 1));
    }

    #[test]
    fn engines_agree_with_full_divisor() {
        for seed in 0..5 {
            let r = five_tables(seed);
            for lengths in [vec![2], vec![3], vec![2, 2]] {
                let labeled = act_cycles(&lengths, &r, &EngineLimits::default()).unwrap();
                let literal = act_cycles_literal(
                    &lengths,
                    &r,
                    &EngineLimits::default(),
                    DivisorMode::FullAut,
                    PrefactorConvention::CentralizerOrder,
                )
                .unwrap();
                assert_eq!(labeled.coefficients(), literal.coefficients(), "{lengths:?}");
                let mass = labeled.total_mass();
                assert!(mass.within_bounds);
                assert!((mass.total - libm::pow(r.stored_mass(), lengths.iter().sum::<usize>() as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aut_b_doubles_the_merge_class() {
        let r = five_tables(9);
        let labeled = act_cycles(&[2], &r, &EngineLimits::default()).unwrap().coefficients();
        let literal = act_cycles_literal(
            &[2],
            &r,
            &EngineLimits::default(),
            DivisorMode::AutB,
            PrefactorConvention::CentralizerOrder,
        )
        .unwrap()
        .coefficients();
        for (key, coef) in &labeled {
            let ratio = literal[key] / coef;
            let merge = key.sources.len() == 2;
            assert_eq!(ratio, Rational::from_integer(if merge { 2 } else { 1 }));
        }
    }

    #[test]
    fn guards() {
        let r = five_tables(1);
        assert!(matches!(act_cycles(&[3, 4], &r, &EngineLimits::default()), Err(Error::GuardExceeded { .. })));
        assert!(act_cycles(&[1], &r, &EngineLimits::default()).is_err());
        let tight = EngineLimits { guard: 6, framings: 10 };
        assert!(matches!(act_cycles(&[2, 2], &r, &tight), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn exponents_are_table_count_changes() {
        let r = five_tables(3);
        let engine = act_cycles(&[2, 2], &r, &EngineLimits::default()).unwrap();
        for c in &engine.components {
            let new = c.key.destinations.len() as i64;
            assert_eq!(c.rn_exponent, new - c.key.sources.len() as i64);
        }
        let occ = OccupiedRestaurant::from(r);
        let g = cycles_representative(&[2, 2]).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..500 {
            let placed = occ.place_guests_with(4, &mut rng);
            let out = placed.act_detailed(&Permutation::identity(4), &g).unwrap();
            let before = placed.restaurant().tables().len() as i64;
            let after = out.occupied.restaurant().tables().len() as i64;
            assert_eq!(after - before, out.rn_exponent);
        }
    }

    #[test]
    fn identity_chip_is_the_identity() {
        let r = five_tables(4);
        let point = OccupiedRestaurant::from(r).place_guests(3, 11);
        let m = act_chip(&TrivialLeftChip::identity(3), &point, &EngineLimits::default()).unwrap();
        assert_eq!(m.components.len(), 1);
        let c = &m.components[0];
        assert_eq!((c.coefficient, c.weight, c.rn_exponent), (Rational::from_integer(1), 1.0, 0));
        assert_eq!(c.key.rho.as_ref().unwrap(), &point.project_finite(3).unwrap());
        assert_eq!(c.key.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(m.truncation_error, 0.0);
    }

    #[test]
    fn chip_without_strands_is_a_central_element() {
        let r = five_tables(6);
        for lengths in [vec![2], vec![3], vec![2, 2]] {
            let chip = TrivialLeftChip::new(Permutation::identity(0), vec![], lengths.clone()).unwrap();
            let via_chip = act_chip(&chip, &OccupiedRestaurant::from(r.clone()), &EngineLimits::default()).unwrap();
            let direct = act_cycles(&lengths, &r, &EngineLimits::default()).unwrap();
            let strip = |m: &MixtureMeasure| {
                m.components
                    .iter()
                    .map(|c| {
                        let mut k = c.key.clone();
                        k.rho = None;
                        (k, c.coefficient, c.rn_exponent)
                    })
                    .collect::<Vec<_>>()
            };
            assert_eq!(strip(&via_chip), strip(&direct));
        }
    }

    #[test]
    fn chip_structures_are_normalized_and_counted() {
        let r = five_tables(8);
        let point = OccupiedRestaurant::from(r).place_guests(2, 5);
        let chip = TrivialLeftChip::new(Permutation::transposition(2, 1, 2).unwrap(), vec![1, 0], vec![2]).unwrap();
        let structures = enumerate_gamma_framed(&chip, &point, &EngineLimits::default()).unwrap();
        let total: f64 = structures.iter().map(|s| s.weight).sum();
        let stored = point.restaurant().stored_mass();
        assert!((total - libm::pow(stored, 3.0)).abs() < 1e-12);
        for s in &structures {
            assert_eq!(s.u.project(2).unwrap(), point.project_finite(2).unwrap());
            assert!(s.aut_b >= 1);
            let pieces: u32 = s.key.counts.iter().flatten().sum();
            assert_eq!(pieces, 5);
        }
        let m = act_chip(&chip, &point, &EngineLimits::default()).unwrap();
        assert!(m.total_mass().within_bounds);
    }

    #[test]
    fn engine_sampler_matches_its_own_functional() {
        let r = five_tables(2);
        let m = act_cycles(&[3], &r, &EngineLimits::default()).unwrap();
        let sampler = m.sampler().unwrap();
        let mut rng = rng_from_seed(1);
        let grid = linear_grid(0.5, 5.0, 4);
        let mut summary = EmpiricalSummary::new(m.fingerprint, grid.clone(), true);
        for _ in 0..50_000 {
            summary.record(&sampler.sample(&mut rng));
        }
        let report = compare_report(&m, &summary, &Thresholds::default(), 50_000, &mut rng).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn transposition_against_simulation() {
        let r = five_tables(5);
        let m = act_cycles(&[2], &r, &EngineLimits::default()).unwrap();
        let sim = Simulation::Cycles { lengths: vec![2], restaurant: r };
        let grid = linear_grid(0.5, 5.0, 5);
        let summary = sim.run(100_000, 7, &grid, true).unwrap();
        let report = compare_report(
            &m,
            &summary,
            &Thresholds { tv: 0.01, ..Default::default() },
            100_000,
            &mut rng_from_seed(8),
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn scaled_component_is_caught() {
        let r = Restaurant::from_lengths(z1(), &[0.7, 0.2, 0.1], 0.0).unwrap();
        let m = act_cycles(&[2], &r, &EngineLimits::default()).unwrap();
        let sim = Simulation::Cycles { lengths: vec![2], restaurant: r };
        let grid = linear_grid(0.5, 5.0, 5);
        let summary = sim.run(50_000, 3, &grid, false).unwrap();
        assert!(compare_report(&m, &summary, &Thresholds::default(), 0, &mut rng_from_seed(8)).unwrap().passed);
        let mut bad = m.clone();
        let heavy = (0..bad.components.len())
            .max_by(|&a, &b| bad.components[a].weight.total_cmp(&bad.components[b].weight))
            .unwrap();
        bad.components[heavy].weight *= 1.1;
        let report = compare_report(&bad, &summary, &Thresholds::default(), 0, &mut rng_from_seed(8)).unwrap();
        assert!(!report.passed && !report.mass.within_bounds && !report.tv_passed);
        assert!(report.suspects.contains(&heavy));
        assert!(!bad.total_mass().within_bounds);
    }

    #[test]
    fn single_table_split_is_uniform() {
        let r = Restaurant::from_lengths(z1(), &[1.0], 0.0).unwrap();
        let occ = OccupiedRestaurant::from(r);
        let g = cycles_representative(&[2]).unwrap();
        let mut rng = rng_from_seed(4);
        let mut small = Vec::new();
        for _ in 0..20_000 {
            let obs = simulate_cycles_once(&g, &occ, &mut rng).unwrap();
            assert_eq!(obs.exponent, 1);
            assert_eq!(obs.created.len(), 2);
            small.push(obs.created[0]);
        }
        // The shorter piece of a uniform split is uniform on [0, 1/2].
        let d = crate::stats::ks_one_sample(&small, |x| (2.0 * x).clamp(0.0, 1.0));
        assert!(d < crate::stats::ks_critical_one_sample(small.len()));
    }

    #[test]
    fn chip_against_simulation() {
        let r = Restaurant::from_lengths(z1(), &[0.5, 0.3, 0.2], 0.0).unwrap();
        let point = OccupiedRestaurant::from(r).place_guests(1, 3);
        let chip = TrivialLeftChip::new(Permutation::identity(1), vec![1], vec![]).unwrap();
        let m = act_chip(&chip, &point, &EngineLimits::default()).unwrap();
        assert!((m.total_mass().total - 1.0).abs() < 1e-12);
        let sim = Simulation::Chip { chip, point };
        let grid = linear_grid(0.5, 5.0, 5);
        let summary = sim.run(100_000, 9, &grid, true).unwrap();
        let report = compare_report(&m, &summary, &Thresholds::default(), 100_000, &mut rng_from_seed(2)).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn center_sampler_matches_direct_route() {
        let r = sample_tables(z1(), SamplerMethod::StickBreaking, Truncation { max_tables: 8, min_tail: 1e-10 }, 3)
            .unwrap();
        let occ = OccupiedRestaurant::from(r.clone()).place_guests(2, 4);
        let sampler = CenterSampler::new(&[2], &r, &EngineLimits::default()).unwrap();
        let g = cycles_representative(&[2]).unwrap();
        let mut rng = rng_from_seed(6);
        let (mut e1, mut e2, mut l1, mut l2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let guest_table = |o: &OccupiedRestaurant| o.restaurant().table(o.guests()[0].table).unwrap().length;
        for _ in 0..20_000 {
            let (e, o) = sampler.sample(&occ, &mut rng).unwrap();
            e1.push(e);
            l1.push(guest_table(&o));
            let (e, o) = center_direct(&g, &occ, &mut rng).unwrap();
            e2.push(e);
            l2.push(guest_table(&o));
        }
        let tv = total_variation(&crate::stats::empirical_pmf(&e1), &crate::stats::empirical_pmf(&e2));
        assert!(tv < 0.02, "{tv}");
        assert!(ks_two_sample(&l1, &l2) < ks_critical_two_sample(l1.len(), l2.len()));
    }

    #[test]
    fn center_sampler_keeps_untouched_tables() {
        let r = five_tables(7);
        let occ = OccupiedRestaurant::from(r.clone()).place_guests(3, 2);
        let sampler = CenterSampler::new(&[2], &r, &EngineLimits::default()).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let (_, out) = sampler.sample(&occ, &mut rng).unwrap();
            // A guest whose table survives was never cut loose from it.
            for (a, b) in occ.guests().iter().zip(out.guests()) {
                if out.restaurant().table(a.table).is_some() {
                    assert_eq!(a, b);
                }
            }
            assert_eq!(out.guest_count(), 3);
            assert!((out.restaurant().stored_mass() - occ.restaurant().stored_mass()).abs() < 1e-12);
        }
    }
}
