//! Poisson–Dirichlet restaurants: circular tables whose lengths sum to one,
//! guests seated on them, the finite projections to `S_n`, and the
//! cut-and-glue action of pairs of permutations.
//!
//! Only finitely many tables are stored. The mass of the unstored ones is kept
//! as `tail_mass`, and every quantity that ignores it reports a bound.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Beta, Exp1};

use crate::error::{check_size, invalid, Error, Result};
use crate::perm::{rational_to_f64, Permutation, Rational};
use crate::rng::{rng_from_seed, Seed};

/// Tolerance for `Σ lengths + tail_mass = 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Opaque table identifier.
pub type TableId = u64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table {
    pub id: TableId,
    pub length: f64,
}

/// How to draw Poisson–Dirichlet table lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerMethod {
    /// Ranked jumps of the Poisson process with intensity `z x^{-1} e^{-x} dx`, normalized.
    PoissonProcess,
    /// GEM(z) sticks with `Beta(1, z)` breaks, then sorted.
    StickBreaking,
}

/// Stop after `max_tables` tables or once the unsampled mass drops below `min_tail`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub max_tables: usize,
    pub min_tail: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { max_tables: 256, min_tail: 1e-10 }
    }
}

impl Truncation {
    fn validate(&self) -> Result<()> {
        if self.max_tables == 0 {
            return Err(invalid("truncation needs at least one table"));
        }
        if !(self.min_tail > 0.0 && self.min_tail < 1.0) {
            return Err(invalid("tail threshold must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// A truncated Poisson–Dirichlet configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Restaurant {
    z: Rational,
    /// Sorted by decreasing length, ties by id.
    tables: Vec<Table>,
    tail_mass: f64,
    next_id: TableId,
}

fn sort_tables(tables: &mut [Table]) {
    tables.sort_by(|a, b| b.length.total_cmp(&a.length).then(a.id.cmp(&b.id)));
}

impl Restaurant {
    /// Tables get ids `0, 1, ..` in the order given.
    pub fn from_lengths(z: Rational, lengths: &[f64], tail_mass: f64) -> Result<Self> {
        let tables = lengths.iter().enumerate().map(|(i, &length)| Table { id: i as TableId, length }).collect();
        Self::from_tables(z, tables, tail_mass)
    }

    pub fn from_tables(z: Rational, mut tables: Vec<Table>, tail_mass: f64) -> Result<Self> {
        if z <= Rational::from_integer(0) {
            return Err(invalid("restaurant parameter z must be positive"));
        }
        if !(tail_mass >= 0.0 && tail_mass.is_finite()) {
            return Err(invalid("tail mass must be a finite nonnegative number"));
        }
        let mut ids = alloc::collections::BTreeSet::new();
        for t in &tables {
            if !(t.length > 0.0 && t.length <= 1.0) {
                return Err(invalid(format!("table length {} outside (0, 1]", t.length)));
            }
            if !ids.insert(t.id) {
                return Err(invalid(format!("table id {} repeated", t.id)));
            }
        }
        let total: f64 = tables.iter().map(|t| t.length).sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("lengths plus tail sum to {total}, not 1")));
        }
        sort_tables(&mut tables);
        let next_id = ids.iter().next_back().map_or(0, |m| m + 1);
        Ok(Restaurant { z, tables, tail_mass, next_id })
    }

    pub fn z(&self) -> Rational {
        self.z
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.tables.iter().map(|t| t.length).collect()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Total stored length `Σ ℓ`.
    pub fn stored_mass(&self) -> f64 {
        self.tables.iter().map(|t| t.length).sum()
    }

    pub fn table(&self, id: TableId) -> Option<&Table> {
        self.tables.iter().find(|t| t.id == id)
    }

    fn fresh_id(&mut self) -> TableId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Keeps only the `k` longest tables, moving the rest into the tail.
    pub fn truncate(&self, k: usize) -> Restaurant {
        let mut out = self.clone();
        if k < out.tables.len() {
            let dropped: f64 = out.tables[k..].iter().map(|t| t.length).sum();
            out.tables.truncate(k);
            out.tail_mass += dropped;
        }
        out
    }
}

/// Draws a Poisson–Dirichlet(z) restaurant.
pub fn sample_tables(z: Rational, method: SamplerMethod, truncation: Truncation, seed: Seed) -> Result<Restaurant> {
    truncation.validate()?;
    if z <= Rational::from_integer(0) {
        return Err(invalid("restaurant parameter z must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let zf = rational_to_f64(&z);
    let (lengths, tail) = match method {
        SamplerMethod::StickBreaking => stick_breaking(zf, truncation, &mut rng),
        SamplerMethod::PoissonProcess => poisson_jumps(zf, truncation, &mut rng),
    };
    let tables: Vec<Table> = lengths
        .into_iter()
        .filter(|&l| l > 0.0)
        .enumerate()
        .map(|(i, length)| Table { id: i as TableId, length })
        .collect();
    let mut tables = tables;
    sort_tables(&mut tables);
    let next_id = tables.len() as TableId;
    // The sampled tail and 1 - Σℓ agree up to rounding; the latter keeps the mass identity tight.
    let stored: f64 = tables.iter().map(|t| t.length).sum();
    debug_assert!((1.0 - stored - tail).abs() < 1e-9);
    Ok(Restaurant { z, tables, tail_mass: (1.0 - stored).max(0.0), next_id })
}

fn stick_breaking<R: Rng + ?Sized>(z: f64, t: Truncation, rng: &mut R) -> (Vec<f64>, f64) {
    let beta = Beta::new(1.0, z).expect("positive Beta parameters");
    let mut remaining = 1.0f64;
    let mut out = Vec::new();
    while out.len() < t.max_tables && remaining >= t.min_tail {
        let b: f64 = beta.sample(rng);
        let piece = remaining * b;
        out.push(piece);
        remaining -= piece;
    }
    out.sort_by(|a, b| b.total_cmp(a));
    (out, remaining)
}

fn poisson_jumps<R: Rng + ?Sized>(z: f64, t: Truncation, rng: &mut R) -> (Vec<f64>, f64) {
    // Jumps above x have intensity mass z E1(x); the k-th largest is
    // Λ^{-1}(Γ_k). Jumps below the last one are summarized by their mean.
    let mut gamma = 0.0f64;
    let mut jumps = Vec::new();
    let mut big = 0.0f64;
    let mut small;
    loop {
        let e: f64 = Exp1.sample(rng);
        gamma += e;
        let x = inverse_e1(gamma / z);
        jumps.push(x);
        big += x;
        small = z * -libm::expm1(-x);
        if jumps.len() >= t.max_tables || small / (big + small) < t.min_tail {
            break;
        }
    }
    let total = big + small;
    (jumps.into_iter().map(|x| x / total).collect(), small / total)
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - libm::log(x) + sum
    } else {
        // Modified Lentz for the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * libm::exp(-x)
    }
}

/// Solves `E1(x) = c` for `x > 0`.
pub fn inverse_e1(c: f64) -> f64 {
    if c > 40.0 {
        // E1(x) = -γ - ln x + O(x) and x < 1e-17 here.
        return libm::exp(-EULER_GAMMA - c);
    }
    // Newton in t = ln x, safeguarded by bisection; E1(e^t) decreases in t.
    let (mut lo, mut hi) = (-45.0f64, 7.0f64);
    let mut t = if c > 1.0 { -EULER_GAMMA - c } else { libm::log((-libm::log(c)).max(0.5)) };
    t = t.clamp(lo, hi);
    for _ in 0..200 {
        let x = libm::exp(t);
        let g = exp_integral_e1(x) - c;
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = libm::exp(-x);
        let mut next = if slope > 0.0 { t + g / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() < 1e-15 * (1.0 + t.abs()) {
            return libm::exp(next);
        }
        t = next;
    }
    libm::exp(t)
}

/// One guest: the table it sits at and its clockwise offset from the table anchor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Guest {
    pub table: TableId,
    pub pos: f64,
}

/// A restaurant with guests `1..=n` seated at real positions.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupiedRestaurant {
    restaurant: Restaurant,
    // guests[k - 1] is guest k
    guests: Vec<Guest>,
    placement_error: f64,
}

/// Result of the cut-and-glue action with the bookkeeping needed by simulators.
#[derive(Clone, Debug, PartialEq)]
pub struct ActOutcome {
    pub occupied: OccupiedRestaurant,
    /// `[h1^{-1} u h2] - [u]`, the change in the number of tables.
    pub rn_exponent: i64,
    /// Tables that were cut and did not survive intact.
    pub removed: Vec<Table>,
    /// Tables glued from arcs (fresh ids).
    pub created: Vec<Table>,
}

impl From<Restaurant> for OccupiedRestaurant {
    fn from(restaurant: Restaurant) -> Self {
        OccupiedRestaurant { restaurant, guests: Vec::new(), placement_error: 0.0 }
    }
}

impl OccupiedRestaurant {
    pub fn new(restaurant: Restaurant, guests: Vec<Guest>) -> Result<Self> {
        for (i, g) in guests.iter().enumerate() {
            let table = restaurant
                .table(g.table)
                .ok_or_else(|| invalid(format!("guest {} sits at unknown table {}", i + 1, g.table)))?;
            if !(g.pos >= 0.0 && g.pos < table.length) {
                return Err(invalid(format!("guest {} position {} outside [0, {})", i + 1, g.pos, table.length)));
            }
        }
        for (i, a) in guests.iter().enumerate() {
            for b in &guests[i + 1..] {
                if a.table == b.table && a.pos == b.pos {
                    return Err(invalid("two guests share a position"));
                }
            }
        }
        Ok(OccupiedRestaurant { restaurant, guests, placement_error: 0.0 })
    }

    pub fn restaurant(&self) -> &Restaurant {
        &self.restaurant
    }

    pub fn guests(&self) -> &[Guest] {
        &self.guests
    }

    pub fn guest_count(&self) -> usize {
        self.guests.len()
    }

    /// Upper bound on the probability that some placed guest would have landed in the tail.
    pub fn placement_error(&self) -> f64 {
        self.placement_error
    }

    pub fn into_restaurant(self) -> Restaurant {
        self.restaurant
    }

    /// Seats `count` new guests independently and uniformly on the stored tables.
    pub fn place_guests(&self, count: usize, seed: Seed) -> OccupiedRestaurant {
        let mut rng = rng_from_seed(seed);
        self.place_guests_with(count, &mut rng)
    }

    pub fn place_guests_with<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> OccupiedRestaurant {
        let mut out = self.clone();
        if count == 0 {
            return out;
        }
        let tables = &self.restaurant.tables;
        let picker = WeightedIndex::new(tables.iter().map(|t| t.length)).expect("stored tables have positive mass");
        out.guests.reserve(count);
        for _ in 0..count {
            let t = tables[picker.sample(rng)];
            let pos = rng.random::<f64>() * t.length;
            out.guests.push(Guest { table: t.id, pos });
        }
        out.placement_error += count as f64 * self.restaurant.tail_mass;
        out
    }

    /// Drops guests `keep+1..`; tables are untouched.
    pub fn forget_guests(&self, keep: usize) -> Result<OccupiedRestaurant> {
        if keep > self.guests.len() {
            return Err(invalid(format!("cannot keep {keep} of {} guests", self.guests.len())));
        }
        let mut out = self.clone();
        out.guests.truncate(keep);
        Ok(out)
    }

    /// Guests among `labels` on each table in clockwise order, keyed by table id.
    fn clockwise(&self, labels: &[usize]) -> BTreeMap<TableId, Vec<usize>> {
        let mut by_table: BTreeMap<TableId, Vec<usize>> = BTreeMap::new();
        for (role, &g) in labels.iter().enumerate() {
            by_table.entry(self.guests[g - 1].table).or_default().push(role + 1);
        }
        for roles in by_table.values_mut() {
            roles.sort_by(|&a, &b| self.guests[labels[a - 1] - 1].pos.total_cmp(&self.guests[labels[b - 1] - 1].pos));
        }
        by_table
    }

    fn permutation_of(&self, labels: &[usize]) -> Permutation {
        let mut images = vec![0; labels.len()];
        for roles in self.clockwise(labels).values() {
            for (i, &r) in roles.iter().enumerate() {
                images[r - 1] = roles[(i + 1) % roles.len()];
            }
        }
        Permutation::from_images(images).expect("clockwise successor is a bijection")
    }

    /// `Υ^∞_n`: the clockwise order of guests `1..=n` on each table.
    pub fn project_finite(&self, n: usize) -> Result<Permutation> {
        self.require_guests(n)?;
        let labels: Vec<usize> = (1..=n).collect();
        Ok(self.permutation_of(&labels))
    }

    fn require_guests(&self, n: usize) -> Result<()> {
        if n > self.guests.len() {
            return Err(invalid(format!("restaurant holds {} guests, need {n}", self.guests.len())));
        }
        Ok(())
    }

    /// Clockwise length from guest `i` to the next of guests `1..=n` (the arc `U_+[i]`).
    pub fn arc_lengths(&self, n: usize) -> Result<Vec<f64>> {
        self.require_guests(n)?;
        let labels: Vec<usize> = (1..=n).collect();
        let u = self.permutation_of(&labels);
        Ok((1..=n).map(|i| self.gap(i, u.image(i))).collect())
    }

    /// Clockwise distance from guest `a` to guest `b` on their common table; a full turn when `a = b`.
    fn gap(&self, a: usize, b: usize) -> f64 {
        let ga = self.guests[a - 1];
        let gb = self.guests[b - 1];
        let len = self.restaurant.table(ga.table).map_or(0.0, |t| t.length);
        if a == b {
            return len;
        }
        let d = gb.pos - ga.pos;
        if d > 0.0 {
            d
        } else {
            d + len
        }
    }

    /// Tables carrying none of guests `1..=n`.
    pub fn free_tables(&self, n: usize) -> Result<Vec<Table>> {
        self.require_guests(n)?;
        let used: alloc::collections::BTreeSet<TableId> = self.guests[..n].iter().map(|g| g.table).collect();
        Ok(self.restaurant.tables.iter().filter(|t| !used.contains(&t.id)).copied().collect())
    }

    /// The cut-and-glue action of `(left, right)` on guests `1..=n`, with `n` the common degree.
    pub fn act(&self, left: &Permutation, right: &Permutation) -> Result<(OccupiedRestaurant, i64)> {
        let out = self.act_detailed(left, right)?;
        Ok((out.occupied, out.rn_exponent))
    }

    pub fn act_detailed(&self, left: &Permutation, right: &Permutation) -> Result<ActOutcome> {
        let labels: Vec<usize> = (1..=left.degree()).collect();
        self.act_on_guests(&labels, left, right)
    }

    /// Cut-and-glue where guest `labels[k-1]` plays the role of `k`.
    ///
    /// Tables are cut at the chosen guests into arcs `A_i` running from role `i` to the
    /// next role clockwise. With `u` the clockwise permutation of the roles, the new
    /// permutation is `v = left^{-1} u right`: role `k` is followed by `A_{right(k)}`.
    /// A cycle of `v` that walks the arcs of one old table in their old order reuses
    /// that table as is, so `act(g, g)` keeps the table geometry exactly.
    pub fn act_on_guests(&self, labels: &[usize], left: &Permutation, right: &Permutation) -> Result<ActOutcome> {
        let n = labels.len();
        check_size(n, left.degree())?;
        check_size(n, right.degree())?;
        let mut seen = vec![false; self.guests.len()];
        for &g in labels {
            if g == 0 || g > self.guests.len() {
                return Err(invalid(format!("guest {g} is not seated (have {})", self.guests.len())));
            }
            if seen[g - 1] {
                return Err(invalid(format!("guest {g} listed twice")));
            }
            seen[g - 1] = true;
        }
        let u = self.permutation_of(labels);
        let v = &(&left.inverse() * &u) * right;
        let rn_exponent = v.cycle_count() as i64 - u.cycle_count() as i64;

        // Riders: unlabeled guests on cut tables, attached to the arc they sit in.
        let by_table = self.clockwise(labels);
        let role_pos = |r: usize| self.guests[labels[r - 1] - 1].pos;
        let mut arc_of_rider: Vec<Option<(usize, f64)>> = vec![None; self.guests.len()];
        for (idx, g) in self.guests.iter().enumerate() {
            if seen[idx] {
                continue;
            }
            if let Some(roles) = by_table.get(&g.table) {
                let len = self.restaurant.table(g.table).map_or(0.0, |t| t.length);
                // Last role clockwise at or before the rider.
                let mut start = roles[roles.len() - 1];
                for &r in roles {
                    if role_pos(r) <= g.pos {
                        start = r;
                    }
                }
                let mut off = g.pos - role_pos(start);
                if off < 0.0 {
                    off += len;
                }
                arc_of_rider[idx] = Some((start, off));
            }
        }
        let mut riders_of_arc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (idx, a) in arc_of_rider.iter().enumerate() {
            if let Some((r, off)) = a {
                riders_of_arc[r - 1].push((idx, *off));
            }
        }

        let labels_gap = |a: usize, b: usize| self.gap(labels[a - 1], labels[b - 1]);
        let mut restaurant = self.restaurant.clone();
        let mut guests = self.guests.clone();
        let mut kept: alloc::collections::BTreeSet<TableId> = Default::default();
        let mut created = Vec::new();
        for cycle in v.cycles() {
            let intact = cycle.iter().all(|&k| right.image(v.image(k)) == u.image(right.image(k)));
            let first_table = self.guests[labels[right.image(cycle[0]) - 1] - 1].table;
            if intact && by_table[&first_table].len() == cycle.len() {
                kept.insert(first_table);
                for &k in &cycle {
                    let src = self.guests[labels[right.image(k) - 1] - 1];
                    guests[labels[k - 1] - 1] = src;
                }
                continue;
            }
            let id = restaurant.fresh_id();
            let mut start = 0.0;
            let mut placed = Vec::new();
            for &k in &cycle {
                let a = right.image(k);
                placed.push((labels[k - 1] - 1, start));
                for &(idx, off) in &riders_of_arc[a - 1] {
                    placed.push((idx, start + off));
                }
                start += labels_gap(a, u.image(a));
            }
            // All arcs of one old table reglued in another order: the length is exact.
            let whole = cycle.iter().all(|&k| self.guests[labels[right.image(k) - 1] - 1].table == first_table)
                && by_table[&first_table].len() == cycle.len();
            let length = match self.restaurant.table(first_table) {
                Some(t) if whole => t.length,
                _ => start,
            };
            for (idx, pos) in placed {
                guests[idx] = Guest { table: id, pos: if pos < length { pos } else { pos - length } };
            }
            created.push(Table { id, length });
        }
        let removed: Vec<Table> = by_table
            .keys()
            .filter(|id| !kept.contains(id))
            .filter_map(|&id| self.restaurant.table(id).copied())
            .collect();
        restaurant.tables.retain(|t| !by_table.contains_key(&t.id) || kept.contains(&t.id));
        restaurant.tables.extend(created.iter().copied());
        sort_tables(&mut restaurant.tables);
        let occupied = OccupiedRestaurant { restaurant, guests, placement_error: self.placement_error };
        Ok(ActOutcome { occupied, rn_exponent, removed, created })
    }

    /// Reverses the orientation of every table. Positions are reflected, so a double
    /// inversion reproduces them up to one rounding step.
    pub fn invert(&self) -> OccupiedRestaurant {
        let mut out = self.clone();
        for g in &mut out.guests {
            let len = self.restaurant.table(g.table).map_or(0.0, |t| t.length);
            let p = len - g.pos;
            g.pos = if g.pos == 0.0 || p >= len { 0.0 } else { p };
        }
        out
    }

    /// Same tables and guest tables, positions within `tol`.
    pub fn approx_eq(&self, other: &OccupiedRestaurant, tol: f64) -> bool {
        self.restaurant == other.restaurant
            && self.guests.len() == other.guests.len()
            && self.guests.iter().zip(&other.guests).all(|(a, b)| a.table == b.table && (a.pos - b.pos).abs() <= tol)
    }

    /// Estimates the clockwise arc length from guest `i` to guest `j` by seating extra
    /// guests until there are `total` and counting those strictly inside the arc.
    pub fn arc_length_estimate(&self, i: usize, j: usize, total: usize, seed: Seed) -> Result<f64> {
        self.require_guests(i.max(j))?;
        if i == 0 || j == 0 {
            return Err(invalid("guests are numbered from 1"));
        }
        let (gi, gj) = (self.guests[i - 1], self.guests[j - 1]);
        if gi.table != gj.table {
            return Err(Error::Domain(format!("guests {i} and {j} sit at different tables")));
        }
        if total == 0 {
            return Err(invalid("need at least one guest for the estimate"));
        }
        let extra = total.saturating_sub(self.guests.len());
        let full = self.place_guests(extra, seed);
        let len = self.restaurant.table(gi.table).map_or(0.0, |t| t.length);
        let arc = if i == j { len } else { self.gap(i, j) };
        let inside = full
            .guests
            .iter()
            .enumerate()
            .filter(|(idx, g)| {
                if *idx == i - 1 || *idx == j - 1 || g.table != gi.table {
                    return false;
                }
                let mut d = g.pos - gi.pos;
                if d < 0.0 {
                    d += len;
                }
                d > 0.0 && d < arc
            })
            .count();
        Ok(inside as f64 / full.guests.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::SymmetricGroup;
    use crate::stats::{ks_critical_two_sample, ks_two_sample};
    use proptest::prelude::*;

    fn one() -> Rational {
        Rational::from_integer(1)
    }

    fn two_tables() -> Restaurant {
        Restaurant::from_lengths(one(), &[0.6, 0.4], 0.0).unwrap()
    }

    fn sample(seed: u64) -> OccupiedRestaurant {
        let r = sample_tables(one(), SamplerMethod::StickBreaking, Truncation { max_tables: 12, min_tail: 1e-6 }, seed)
            .unwrap();
        OccupiedRestaurant::from(r)
    }

    fn length_multiset(r: &Restaurant) -> Vec<u64> {
        let mut v: Vec<u64> = r.tables().iter().map(|t| t.length.to_bits()).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn e1_values() {
        // E1(1) = 0.219383934395520..., E1(0.1) = 1.822923958419390..., E1(5) = 0.001148295591275...
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((exp_integral_e1(0.1) - 1.822_923_958_419_390_7).abs() < 1e-13);
        assert!((exp_integral_e1(5.0) - 0.001_148_295_591_275_325_8).abs() < 1e-16);
        for x in [1e-8, 0.03, 0.7, 1.0, 2.5, 11.0, 60.0] {
            let back = inverse_e1(exp_integral_e1(x));
            assert!((back - x).abs() < 1e-10 * x.max(1.0), "{x} {back}");
        }
    }

    #[test]
    fn samplers_respect_invariants() {
        for method in [SamplerMethod::PoissonProcess, SamplerMethod::StickBreaking] {
            for z in [Rational::new(1, 2), one(), Rational::from_integer(5)] {
                let r = sample_tables(z, method, Truncation::default(), 9).unwrap();
                let l = r.lengths();
                assert!(l.windows(2).all(|w| w[0] >= w[1]));
                assert!(l.iter().all(|&x| x > 0.0));
                assert!((r.stored_mass() + r.tail_mass() - 1.0).abs() < MASS_TOLERANCE);
                assert_eq!(r, sample_tables(z, method, Truncation::default(), 9).unwrap());
            }
        }
        assert!(
            sample_tables(one(), SamplerMethod::StickBreaking, Truncation { max_tables: 0, min_tail: 0.1 }, 1).is_err()
        );
        assert!(
            sample_tables(one(), SamplerMethod::StickBreaking, Truncation { max_tables: 3, min_tail: 1.0 }, 1).is_err()
        );
    }

    #[test]
    fn samplers_agree_on_largest_table() {
        let n = 20_000;
        let t = Truncation { max_tables: 64, min_tail: 1e-8 };
        let a: Vec<f64> =
            (0..n).map(|s| sample_tables(one(), SamplerMethod::StickBreaking, t, s).unwrap().lengths()[0]).collect();
        let b: Vec<f64> = (0..n)
            .map(|s| sample_tables(one(), SamplerMethod::PoissonProcess, t, s + 1_000_000).unwrap().lengths()[0])
            .collect();
        assert!(ks_two_sample(&a, &b) < ks_critical_two_sample(n as usize, n as usize));
    }

    #[test]
    fn project_small_cases() {
        let r = two_tables();
        let same = OccupiedRestaurant::new(r.clone(), vec![Guest { table: 0, pos: 0.1 }, Guest { table: 0, pos: 0.3 }])
            .unwrap();
        assert_eq!(same.project_finite(2).unwrap(), Permutation::from_images(vec![2, 1]).unwrap());
        let apart =
            OccupiedRestaurant::new(r, vec![Guest { table: 0, pos: 0.1 }, Guest { table: 1, pos: 0.3 }]).unwrap();
        assert!(apart.project_finite(2).unwrap().is_identity());
        assert!(apart.project_finite(3).is_err());
    }

    #[test]
    fn rejects_bad_configurations() {
        assert!(Restaurant::from_lengths(one(), &[0.5, 0.4], 0.0).is_err());
        assert!(Restaurant::from_lengths(one(), &[0.5, 0.5], 0.0).is_ok());
        assert!(Restaurant::from_lengths(one(), &[1.5, -0.5], 0.0).is_err());
        assert!(OccupiedRestaurant::new(two_tables(), vec![Guest { table: 7, pos: 0.0 }]).is_err());
        assert!(OccupiedRestaurant::new(two_tables(), vec![Guest { table: 1, pos: 0.4 }]).is_err());
    }

    #[test]
    fn act_merges_and_splits() {
        let r = two_tables();
        let t = Permutation::from_images(vec![2, 1]).unwrap();
        let e = Permutation::identity(2);
        let apart =
            OccupiedRestaurant::new(r.clone(), vec![Guest { table: 0, pos: 0.1 }, Guest { table: 1, pos: 0.3 }])
                .unwrap();
        let out = apart.act_detailed(&e, &t).unwrap();
        assert_eq!(out.rn_exponent, -1);
        assert_eq!(out.occupied.restaurant().tables().len(), 1);
        assert!((out.occupied.restaurant().lengths()[0] - 1.0).abs() < 1e-15);
        assert_eq!(out.removed.len(), 2);

        let same =
            OccupiedRestaurant::new(r, vec![Guest { table: 0, pos: 0.1 }, Guest { table: 0, pos: 0.35 }]).unwrap();
        let out = same.act_detailed(&e, &t).unwrap();
        assert_eq!(out.rn_exponent, 1);
        let mut l = out.occupied.restaurant().lengths();
        l.sort_by(f64::total_cmp);
        assert!((l[0] - 0.25).abs() < 1e-15 && (l[1] - 0.35).abs() < 1e-15 && (l[2] - 0.4).abs() < 1e-15);
        assert!(out.occupied.project_finite(2).unwrap().is_identity());

        let (same_again, exp) = same.act(&e, &e).unwrap();
        assert_eq!(exp, 0);
        assert_eq!(same_again, same);
    }

    #[test]
    fn act_respects_projection_and_rn() {
        for seed in 0..40 {
            let n = 1 + (seed as usize % 5);
            let occ = sample(seed).place_guests(n + 10, seed + 100);
            let u = occ.project_finite(n).unwrap();
            for g in SymmetricGroup::new(n).step_by(7) {
                let e = Permutation::identity(n);
                let out = occ.act_detailed(&e, &g).unwrap();
                assert_eq!(out.occupied.project_finite(n).unwrap(), &u * &g);
                let big = occ.project_finite(n + 10).unwrap();
                let expected = crate::perm::rn_exponent_finite(&e.extend(n + 10), &g.extend(n + 10), &big).unwrap();
                assert_eq!(out.rn_exponent, expected);
                let mass = out.occupied.restaurant().stored_mass() + out.occupied.restaurant().tail_mass();
                assert!((mass - 1.0).abs() < MASS_TOLERANCE);
                // The moved guests still refine the new tables consistently.
                let new_big = out.occupied.project_finite(n + 10).unwrap();
                assert_eq!(new_big.project(n).unwrap(), &u * &g);
            }
        }
    }

    #[test]
    fn conjugation_keeps_geometry() {
        for seed in 0..30 {
            let n = 2 + (seed as usize % 4);
            let occ = sample(seed).place_guests(n + 3, seed);
            let mut rng = rng_from_seed(seed);
            let g = Permutation::random(n, &mut rng);
            let (moved, exp) = occ.act(&g, &g).unwrap();
            assert_eq!(exp, 0);
            assert_eq!(length_multiset(moved.restaurant()), length_multiset(occ.restaurant()));
            let u = occ.project_finite(n).unwrap();
            assert_eq!(moved.project_finite(n).unwrap(), &(&g.inverse() * &u) * &g);
        }
    }

    #[test]
    fn inversion() {
        for seed in 0..20 {
            let occ = sample(seed).place_guests(6, seed);
            let inv = occ.invert();
            assert!(inv.invert().approx_eq(&occ, 1e-15));
            assert_eq!(inv.project_finite(6).unwrap(), occ.project_finite(6).unwrap().inverse());
            assert_eq!(length_multiset(inv.restaurant()), length_multiset(occ.restaurant()));
        }
    }

    #[test]
    fn place_and_forget() {
        let occ = sample(3);
        assert_eq!(occ.place_guests(0, 1), occ);
        let placed = occ.place_guests(5, 1);
        assert_eq!(placed.forget_guests(0).unwrap().guests().len(), 0);
        assert_eq!(placed.forget_guests(5).unwrap(), placed);
        assert_eq!(placed.forget_guests(0).unwrap().restaurant(), occ.restaurant());
        assert!(placed.forget_guests(6).is_err());
        assert!(placed.placement_error() >= 5.0 * occ.restaurant().tail_mass());
    }

    #[test]
    fn two_guests_share_a_table_with_probability_l_squared() {
        let r = two_tables();
        let occ = OccupiedRestaurant::from(r);
        let trials = 40_000;
        let mut hits = 0;
        for s in 0..trials {
            let p = occ.place_guests(2, s);
            if p.guests()[0].table == 0 && p.guests()[1].table == 0 {
                hits += 1;
            }
        }
        let est = hits as f64 / trials as f64;
        let se = libm::sqrt(0.36 * 0.64 / trials as f64);
        assert!((est - 0.36).abs() < 3.0 * se);
    }

    #[test]
    fn arc_estimates() {
        let occ =
            OccupiedRestaurant::new(two_tables(), vec![Guest { table: 0, pos: 0.1 }, Guest { table: 0, pos: 0.35 }])
                .unwrap();
        let a = occ.arc_length_estimate(1, 2, 10_000, 5).unwrap();
        let b = occ.arc_length_estimate(2, 1, 10_000, 5).unwrap();
        assert!((a - 0.25).abs() < 0.05);
        assert!((a + b - 0.6).abs() < 0.05);
        assert_eq!(a, occ.arc_length_estimate(1, 2, 10_000, 5).unwrap());
        let apart =
            OccupiedRestaurant::new(two_tables(), vec![Guest { table: 0, pos: 0.1 }, Guest { table: 1, pos: 0.3 }])
                .unwrap();
        assert!(matches!(apart.arc_length_estimate(1, 2, 100, 1), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn projection_tower(seed in any::<u64>(), n in 1usize..8) {
            let occ = sample(seed).place_guests(n, seed ^ 1);
            let p = occ.project_finite(n).unwrap();
            for m in 1..=n {
                prop_assert_eq!(occ.project_finite(m).unwrap(), p.project(m).unwrap());
            }
        }

        #[test]
        fn arc_lengths_cover_cut_tables(seed in any::<u64>(), n in 1usize..7) {
            let occ = sample(seed).place_guests(n, seed ^ 2);
            let arcs: f64 = occ.arc_lengths(n).unwrap().iter().sum();
            let free: f64 = occ.free_tables(n).unwrap().iter().map(|t| t.length).sum();
            prop_assert!((arcs + free - occ.restaurant().stored_mass()).abs() < 1e-12);
        }
    }

    #[test]
    fn regluing_a_whole_table_keeps_its_length_exactly() {
        let r = Restaurant::from_lengths(Rational::from_integer(1), &[0.1 + 0.2, 0.7], 0.0).unwrap();
        let guests =
            vec![Guest { table: 0, pos: 0.013 }, Guest { table: 0, pos: 0.1 }, Guest { table: 0, pos: 0.2571 }];
        let occ = OccupiedRestaurant::new(r, guests).unwrap();
        let g = Permutation::from_cycles(3, &[vec![1, 2, 3]]).unwrap();
        let out = occ.act_detailed(&Permutation::identity(3), &g).unwrap();
        assert_eq!(out.rn_exponent, 0);
        assert_eq!(out.created.len(), 1);
        assert_eq!(out.created[0].length, 0.1 + 0.2);
    }
}
