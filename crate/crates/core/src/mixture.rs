//! Finite mixtures describing where a polymorphism sends a restaurant: weighted
//! components, each replacing some tables (and labeled arcs) by new ones whose
//! lengths follow a convolution of Dirichlet laws.
//!
//! Also the empirical side of the comparison: per-sample observations, their
//! running summaries and the report that sets one against the other.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::dirichlet::{ConvolutionSpec, DirichletSpec, LaplaceOptions};
use crate::error::{invalid, Result};
use crate::perm::{rational_to_f64, Permutation, Rational};
use crate::restaurant::TableId;
use crate::stats::{ks_critical_two_sample, ks_two_sample, total_variation, Moments};

/// Where the pieces of a component come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    /// The arc from labeled guest `i` to the next labeled guest.
    Arc(usize),
    /// A stored table.
    Table(TableId),
}

/// Where the pieces go.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Destination {
    /// The new arc starting at labeled guest `j`.
    Arc(usize),
    /// A new table without labeled guests.
    NewTable,
}

/// Identity of a component up to relabeling of the new tables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentKey {
    pub rho: Option<Permutation>,
    pub sources: Vec<Source>,
    pub destinations: Vec<Destination>,
    /// `counts[s][d]`: pieces of source `s` glued into destination `d`.
    pub counts: Vec<Vec<u32>>,
}

impl ComponentKey {
    /// Sorts sources, then puts labeled arcs first by label and the new tables in
    /// lexicographic order of their columns.
    pub fn canonical(mut self) -> Self {
        let mut rows: Vec<(Source, Vec<u32>)> = self.sources.into_iter().zip(self.counts).collect();
        rows.sort_by_key(|r| r.0);
        let (sources, counts): (Vec<Source>, Vec<Vec<u32>>) = rows.into_iter().unzip();
        let mut cols: Vec<(Destination, Vec<u32>)> = self
            .destinations
            .iter()
            .enumerate()
            .map(|(d, &dest)| (dest, counts.iter().map(|r| r[d]).collect()))
            .collect();
        cols.sort();
        self.destinations = cols.iter().map(|c| c.0).collect();
        self.counts = (0..sources.len()).map(|s| cols.iter().map(|c| c.1[s]).collect()).collect();
        self.sources = sources;
        self
    }
}

/// One weighted component of a spreaded image.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureComponent {
    pub key: ComponentKey,
    /// Length of each source, in the order of `key.sources`.
    pub source_lengths: Vec<f64>,
    /// Exact rational part of the weight.
    pub coefficient: Rational,
    /// `coefficient · ∏ length^{pieces}` with one piece fewer for arcs.
    pub weight: f64,
    pub rn_exponent: i64,
}

impl MixtureComponent {
    pub fn new(key: ComponentKey, source_lengths: Vec<f64>, coefficient: Rational, rn_exponent: i64) -> Self {
        let mut weight = rational_to_f64(&coefficient);
        for ((s, row), &len) in key.sources.iter().zip(&key.counts).zip(&source_lengths) {
            let pieces: u32 = row.iter().sum();
            let power = if matches!(s, Source::Arc(_)) { pieces - 1 } else { pieces };
            weight *= libm::pow(len, power as f64);
        }
        MixtureComponent { key, source_lengths, coefficient, weight, rn_exponent }
    }

    /// Ids of the consumed tables.
    pub fn removed(&self) -> Vec<TableId> {
        self.key.sources.iter().filter_map(|s| if let Source::Table(id) = s { Some(*id) } else { None }).collect()
    }

    /// Law of the destination lengths: one Dirichlet factor per source.
    pub fn replacement(&self) -> ConvolutionSpec {
        let parts = self
            .key
            .counts
            .iter()
            .zip(&self.source_lengths)
            .map(|(row, &len)| DirichletSpec::new(row.clone(), len).expect("every source has a piece"))
            .collect();
        ConvolutionSpec::new(parts).expect("rows share the destination count")
    }

    /// `E e^{-s X_d}` for destination `d`.
    pub fn destination_laplace(&self, d: usize, s: f64) -> f64 {
        let mut out = 1.0;
        for (row, &len) in self.key.counts.iter().zip(&self.source_lengths) {
            if row[d] == 0 {
                continue;
            }
            let rest: u32 = row.iter().sum::<u32>() - row[d];
            let spec = DirichletSpec::new(if rest > 0 { vec![row[d], rest] } else { vec![row[d]] }, len)
                .expect("positive row");
            let u: Vec<Complex64> = if rest > 0 {
                vec![Complex64::new(s, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                vec![Complex64::new(s, 0.0)]
            };
            out *= spec.laplace(&u, &LaplaceOptions::default()).expect("valid arguments").re;
        }
        out
    }

    /// Expected value of [`Observation::functional`] under this component.
    pub fn expected_functional(&self, s: f64) -> f64 {
        let mut total = 0.0;
        for d in 0..self.key.destinations.len() {
            total += self.destination_laplace(d, s);
        }
        for (src, &len) in self.key.sources.iter().zip(&self.source_lengths) {
            if matches!(src, Source::Table(_)) {
                total -= libm::exp(-s * len);
            }
        }
        total
    }

    /// One draw of the component as an observation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        let lengths = self.replacement().sample(rng);
        let mut obs = Observation { exponent: self.rn_exponent, ..Default::default() };
        for (dest, x) in self.key.destinations.iter().zip(lengths) {
            match dest {
                Destination::Arc(_) => obs.arcs.push(x),
                Destination::NewTable => obs.created.push(x),
            }
        }
        for (src, &len) in self.key.sources.iter().zip(&self.source_lengths) {
            if matches!(src, Source::Table(_)) {
                obs.removed.push(len);
            }
        }
        obs.normalize();
        obs
    }
}

/// A spreaded image: components whose weights sum to the mass seen by the
/// stored tables, plus the bound on what the tail could add.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureMeasure {
    pub components: Vec<MixtureComponent>,
    pub truncation_error: f64,
    pub fingerprint: u64,
}

/// Mass check of a mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassReport {
    pub total: f64,
    pub truncation_error: f64,
    pub within_bounds: bool,
}

/// Slack for rounding when checking `Σ weights ≤ 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

impl MixtureMeasure {
    pub fn total_mass(&self) -> MassReport {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        let negative = self.components.iter().any(|c| c.weight.is_nan() || c.weight < 0.0);
        let within_bounds =
            !negative && total <= 1.0 + WEIGHT_TOLERANCE && total >= 1.0 - self.truncation_error - WEIGHT_TOLERANCE;
        MassReport { total, truncation_error: self.truncation_error, within_bounds }
    }

    /// Exact coefficients by key, for comparing engines.
    pub fn coefficients(&self) -> BTreeMap<ComponentKey, Rational> {
        self.components.iter().map(|c| (c.key.clone(), c.coefficient)).collect()
    }

    /// Law of the exponent after normalizing the weights to one.
    pub fn exponent_pmf(&self) -> BTreeMap<i64, f64> {
        let total = self.total_mass().total;
        let mut out = BTreeMap::new();
        for c in &self.components {
            *out.entry(c.rn_exponent).or_insert(0.0) += c.weight / total;
        }
        out
    }

    /// Normalized expectation of [`Observation::functional`].
    pub fn expected_functional(&self, s: f64) -> f64 {
        let total = self.total_mass().total;
        self.components.iter().map(|c| c.weight / total * c.expected_functional(s)).sum()
    }

    pub fn sampler(&self) -> Result<MixtureSampler<'_>> {
        let index = WeightedIndex::new(self.components.iter().map(|c| c.weight))
            .map_err(|_| invalid("mixture weights must be nonnegative with a positive sum"))?;
        Ok(MixtureSampler { measure: self, index })
    }
}

/// Draws observations from a mixture, choosing components by weight.
pub struct MixtureSampler<'a> {
    measure: &'a MixtureMeasure,
    index: WeightedIndex<f64>,
}

impl MixtureSampler<'_> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        self.measure.components[self.index.sample(rng)].sample(rng)
    }
}

const MARGINAL_GRID: f64 = 1e12;

/// What one application of a polymorphism did to a restaurant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observation {
    pub exponent: i64,
    /// Lengths of consumed tables without labeled guests.
    pub removed: Vec<f64>,
    /// Lengths of new tables without labeled guests.
    pub created: Vec<f64>,
    /// New arcs of the labeled guests, by label.
    pub arcs: Vec<f64>,
}

impl Observation {
    /// Cancels tables that were removed and recreated with the same length, so a
    /// table left intact looks the same however it was recorded.
    pub fn normalize(&mut self) {
        self.removed.sort_by(f64::total_cmp);
        self.created.sort_by(f64::total_cmp);
        let mut kept_removed = Vec::with_capacity(self.removed.len());
        let mut created = core::mem::take(&mut self.created);
        for &r in &self.removed {
            if let Some(pos) = created.iter().position(|&c| c == r) {
                created.remove(pos);
            } else {
                kept_removed.push(r);
            }
        }
        self.removed = kept_removed;
        self.created = created;
    }

    /// `Σ_arcs e^{-s a} + Σ_created e^{-s L} - Σ_removed e^{-s ℓ}`.
    pub fn functional(&self, s: f64) -> f64 {
        let f = |x: &f64| libm::exp(-s * x);
        self.arcs.iter().map(f).sum::<f64>() + self.created.iter().map(f).sum::<f64>()
            - self.removed.iter().map(f).sum::<f64>()
    }

    /// The scalar used for KS comparisons: the first labeled arc when there is one,
    /// else the longest new table (zero when none was created). Rounded to a grid
    /// of `1e-12` so that one sum of table lengths added in different orders gives
    /// one atom.
    pub fn marginal(&self) -> f64 {
        let x = match self.arcs.first() {
            Some(&a) => a,
            None => self.created.iter().copied().fold(0.0, f64::max),
        };
        libm::round(x * MARGINAL_GRID) / MARGINAL_GRID
    }
}

/// Streaming summary of observations; chunks merge in order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSummary {
    pub fingerprint: u64,
    pub grid: Vec<f64>,
    pub samples: u64,
    pub exponents: BTreeMap<i64, u64>,
    pub functional: Vec<Moments>,
    /// Values of [`Observation::marginal`], kept when requested.
    pub marginal: Vec<f64>,
    pub keep_marginal: bool,
}

impl EmpiricalSummary {
    pub fn new(fingerprint: u64, grid: Vec<f64>, keep_marginal: bool) -> Self {
        let functional = vec![Moments::default(); grid.len()];
        EmpiricalSummary {
            fingerprint,
            grid,
            samples: 0,
            exponents: BTreeMap::new(),
            functional,
            marginal: Vec::new(),
            keep_marginal,
        }
    }

    pub fn record(&mut self, obs: &Observation) {
        self.samples += 1;
        *self.exponents.entry(obs.exponent).or_insert(0) += 1;
        for (m, &s) in self.functional.iter_mut().zip(&self.grid) {
            m.push(obs.functional(s));
        }
        if self.keep_marginal {
            self.marginal.push(obs.marginal());
        }
    }

    pub fn merge(&mut self, other: &EmpiricalSummary) -> Result<()> {
        if self.fingerprint != other.fingerprint || self.grid != other.grid {
            return Err(invalid("summaries of different configurations cannot be merged"));
        }
        self.samples += other.samples;
        for (k, v) in &other.exponents {
            *self.exponents.entry(*k).or_insert(0) += v;
        }
        for (a, b) in self.functional.iter_mut().zip(&other.functional) {
            a.merge(b);
        }
        self.marginal.extend_from_slice(&other.marginal);
        Ok(())
    }

    pub fn exponent_pmf(&self) -> BTreeMap<i64, f64> {
        let n = self.samples.max(1) as f64;
        self.exponents.iter().map(|(&k, &v)| (k, v as f64 / n)).collect()
    }
}

/// Pass thresholds for [`compare_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub tv: f64,
    pub standard_errors: f64,
    /// Compare [`Observation::marginal`] by a two-sample KS test at the 1% level.
    pub ks: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tv: 0.01, standard_errors: 3.0, ks: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaplacePoint {
    pub s: f64,
    pub engine: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub samples: u64,
    pub tv: f64,
    pub tv_threshold: f64,
    pub tv_passed: bool,
    pub laplace: Vec<LaplacePoint>,
    pub ks: Option<f64>,
    pub ks_critical: Option<f64>,
    pub ks_passed: bool,
    pub mass: MassReport,
    /// Exponent whose probability differs most between the two sides.
    pub worst_exponent: Option<i64>,
    /// Indices of the engine components carrying that exponent.
    pub suspects: Vec<usize>,
    pub passed: bool,
}

/// Sets an engine mixture against an empirical summary of the same configuration.
/// When the KS test is requested, the engine side is sampled `ks_samples` times.
pub fn compare_report<R: Rng + ?Sized>(
    measure: &MixtureMeasure,
    empirical: &EmpiricalSummary,
    thresholds: &Thresholds,
    ks_samples: usize,
    rng: &mut R,
) -> Result<CompareReport> {
    if measure.fingerprint != empirical.fingerprint {
        return Err(invalid("engine output and empirical summary describe different configurations"));
    }
    let engine_pmf = measure.exponent_pmf();
    let empirical_pmf = empirical.exponent_pmf();
    let tv = total_variation(&engine_pmf, &empirical_pmf);
    // Localize on unnormalized mass: the empirical side scaled to the mass the
    // stored tables should carry.
    let mut raw: BTreeMap<i64, f64> = BTreeMap::new();
    for c in &measure.components {
        *raw.entry(c.rn_exponent).or_insert(0.0) += c.weight;
    }
    let expected_mass = 1.0 - measure.truncation_error;
    let mut worst = None;
    let mut worst_gap = -1.0;
    for k in raw.keys().chain(empirical_pmf.keys()) {
        let gap = (raw.get(k).unwrap_or(&0.0) - expected_mass * empirical_pmf.get(k).unwrap_or(&0.0)).abs();
        if gap > worst_gap {
            worst_gap = gap;
            worst = Some(*k);
        }
    }
    let suspects = match worst {
        Some(k) => measure.components.iter().enumerate().filter(|(_, c)| c.rn_exponent == k).map(|(i, _)| i).collect(),
        None => Vec::new(),
    };
    let laplace: Vec<LaplacePoint> = empirical
        .grid
        .iter()
        .zip(&empirical.functional)
        .map(|(&s, m)| {
            let engine = measure.expected_functional(s);
            let se = m.std_error();
            LaplacePoint {
                s,
                engine,
                empirical: m.mean,
                std_error: se,
                passed: (engine - m.mean).abs() <= thresholds.standard_errors * se,
            }
        })
        .collect();
    let (ks, ks_critical) = if thresholds.ks && !empirical.marginal.is_empty() && ks_samples > 0 {
        let sampler = measure.sampler()?;
        let engine_values: Vec<f64> = (0..ks_samples).map(|_| sampler.sample(rng).marginal()).collect();
        (
            Some(ks_two_sample(&engine_values, &empirical.marginal)),
            Some(ks_critical_two_sample(ks_samples, empirical.marginal.len())),
        )
    } else {
        (None, None)
    };
    let ks_passed = match (ks, ks_critical) {
        (Some(d), Some(c)) => d < c,
        _ => true,
    };
    let mass = measure.total_mass();
    let tv_passed = tv <= thresholds.tv;
    let passed = tv_passed && ks_passed && mass.within_bounds && laplace.iter().all(|p| p.passed);
    Ok(CompareReport {
        samples: empirical.samples,
        tv,
        tv_threshold: thresholds.tv,
        tv_passed,
        laplace,
        ks,
        ks_critical,
        ks_passed,
        mass,
        worst_exponent: worst,
        suspects,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_cancels_intact_tables() {
        let mut obs =
            Observation { exponent: 0, removed: vec![0.5, 0.2], created: vec![0.2, 0.3, 0.4], arcs: Vec::new() };
        obs.normalize();
        assert_eq!(obs.removed, vec![0.5]);
        assert_eq!(obs.created, vec![0.3, 0.4]);
    }

    #[test]
    fn marginal_ignores_summation_order() {
        let (a, b, c) = (0.1, 0.2, 0.3);
        assert_ne!((a + b) + c, a + (b + c));
        let one = Observation { created: vec![(a + b) + c], ..Observation::default() };
        let two = Observation { created: vec![a + (b + c)], ..Observation::default() };
        assert_eq!(one.marginal(), two.marginal());
        let arc = Observation { arcs: vec![0.25, 0.75], created: vec![0.9], ..Observation::default() };
        assert_eq!(arc.marginal(), 0.25);
    }
}
