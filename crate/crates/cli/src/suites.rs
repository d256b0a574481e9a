//! Verification suites run by `crpchips verify`.
//!
//! Each suite returns a [`SuiteReport`] listing its checks with a pass flag and
//! a JSON detail. A suite passes iff every check passes.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use crpchips_core::checker::{cycle_set, rotate_to_min, CheckerSurface, EngineSurface, RibbonGraph};
use crpchips_core::chip::{random_chip, theta_stabilization, TrivialLeftChip};
use crpchips_core::dirichlet::{aggregate_check, ConvolutionSpec, DirichletSpec, LaplaceOptions};
use crpchips_core::engine::{
    act_chip, act_cycles, act_cycles_literal, DivisorMode, EngineLimits, PrefactorConvention, Simulation,
};
use crpchips_core::mixture::{compare_report, CompareReport, MixtureMeasure, Thresholds};
use crpchips_core::perm::{equivariance_check, ewens_mass, pushforward_check, rn_exponent_finite, BRUTE_FORCE_LIMIT};
use crpchips_core::restaurant::{sample_tables, OccupiedRestaurant, Restaurant, SamplerMethod, Truncation};
use crpchips_core::rng::{rng_from_seed, task_seed, Seed};
use crpchips_core::stats::{ks_critical_two_sample, ks_two_sample, linear_grid, total_variation};
use crpchips_core::{EwensParams, Permutation, Rational};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::format::{CompareJson, MixtureJson, RestaurantJson};
use crate::parallel::{center_samples, engine_marginal, simulate, CenterRoute};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        SuiteReport { suite: suite.name().into(), passed: checks.iter().all(|c| c.passed), checks }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: impl Into<String>, passed: bool, detail: Value) -> Check {
    Check { name: name.into(), passed, detail }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    EwensPushforward,
    ChipAssoc,
    ThetaStab,
    DirichletLaplace,
    CyclesCalibration,
    CyclesOracle,
    CenterOracle,
    ChipOracle,
    Checker,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::EwensPushforward,
        Suite::ChipAssoc,
        Suite::ThetaStab,
        Suite::DirichletLaplace,
        Suite::CyclesCalibration,
        Suite::CyclesOracle,
        Suite::CenterOracle,
        Suite::ChipOracle,
        Suite::Checker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EwensPushforward => "ewens-pushforward",
            Suite::ChipAssoc => "chip-assoc",
            Suite::ThetaStab => "theta-stab",
            Suite::DirichletLaplace => "dirichlet-laplace",
            Suite::CyclesCalibration => "thm2-calibration",
            Suite::CyclesOracle => "thm2-oracle",
            Suite::CenterOracle => "center-oracle",
            Suite::ChipOracle => "chip-oracle",
            Suite::Checker => "checker",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

/// Knobs shared by the suites; `None` means the suite's own default.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub lengths: Option<Vec<usize>>,
    pub samples: Option<u64>,
    pub seed: Seed,
    pub restaurant: Option<OccupiedRestaurant>,
    pub limits: EngineLimits,
    pub brute_force_limit: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            lengths: None,
            samples: None,
            seed: 1,
            restaurant: None,
            limits: EngineLimits::default(),
            brute_force_limit: BRUTE_FORCE_LIMIT,
        }
    }
}

pub fn run(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    match suite {
        Suite::EwensPushforward => ewens_pushforward(opts),
        Suite::ChipAssoc => chip_assoc(opts),
        Suite::ThetaStab => theta_stab(opts),
        Suite::DirichletLaplace => dirichlet_laplace(opts),
        Suite::CyclesCalibration => cycles_calibration(opts),
        Suite::CyclesOracle => cycles_oracle(opts),
        Suite::CenterOracle => center_oracle(opts),
        Suite::ChipOracle => chip_oracle(opts),
        Suite::Checker => checker(opts),
    }
}

fn z_values() -> [Rational; 3] {
    [Rational::new(1, 2), Rational::from_integer(1), Rational::from_integer(2)]
}

/// Exact fibre sums for `n = 2..=7`, equivariance for `n <= 5`, and the
/// exponent identity of the two-sided action for `n <= 5`.
pub fn ewens_pushforward(opts: &SuiteOptions) -> Result<SuiteReport> {
    let max_n = 7.min(opts.brute_force_limit);
    let cases: Vec<(usize, Rational)> = (2..=max_n).flat_map(|n| z_values().map(|z| (n, z))).collect();
    let results: Vec<Result<Check>> = cases
        .par_iter()
        .map(|&(n, z)| {
            let r = pushforward_check(n, &EwensParams::new(z)?, opts.brute_force_limit)?;
            let violation = r
                .violation
                .as_ref()
                .map(|(h, got, want)| json!({"h": h.images(), "fibre": got.to_string(), "expected": want.to_string()}));
            Ok(check(
                format!("fibres n={n} z={z}"),
                r.holds,
                json!({"fibres": r.fibres_checked, "equivariant": r.equivariant, "violation": violation}),
            ))
        })
        .collect();
    let mut checks = results.into_iter().collect::<Result<Vec<_>>>()?;
    for n in 2..=5 {
        checks.push(check(format!("equivariance n={n}"), equivariance_check(n)?, json!({})));
    }
    checks.push(rn_identity_check(4)?);
    Ok(SuiteReport::new(Suite::EwensPushforward, checks))
}

/// `μ(h1^{-1} u h2) = z^{rn} μ(u)` over all triples of `S_n`.
fn rn_identity_check(n: usize) -> Result<Check> {
    let group: Vec<Permutation> = crpchips_core::perm::SymmetricGroup::new(n).collect();
    let mut failures = 0usize;
    for z in z_values() {
        let params = EwensParams::new(z)?;
        for u in &group {
            let mu = ewens_mass(u, &params);
            for h1 in &group {
                let left = &h1.inverse() * u;
                for h2 in &group {
                    let e = rn_exponent_finite(h1, h2, u)?;
                    let zp = if e >= 0 { pow(z, e as u32) } else { pow(z.recip(), (-e) as u32) };
                    if ewens_mass(&(&left * h2), &params) != zp * mu {
                        failures += 1;
                    }
                }
            }
        }
    }
    Ok(check(format!("exponent identity n={n}"), failures == 0, json!({"failures": failures})))
}

fn pow(x: Rational, e: u32) -> Rational {
    (0..e).fold(Rational::from_integer(1), |acc, _| acc * x)
}

/// Associativity and the anti-homomorphism property of the involution on random
/// composable triples with at most 5 pairs on each side.
pub fn chip_assoc(opts: &SuiteOptions) -> Result<SuiteReport> {
    let count = opts.samples.unwrap_or(1000);
    let mut rng = rng_from_seed(opts.seed);
    let (mut assoc_fail, mut inv_fail, mut unit_fail) = (0u64, 0u64, 0u64);
    for _ in 0..count {
        let s: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..=5));
        let f = random_chip(s[0], s[1], rng.random_range(0..=5), &mut rng);
        let g = random_chip(s[1], s[2], rng.random_range(0..=5), &mut rng);
        let h = random_chip(s[2], s[3], rng.random_range(0..=5), &mut rng);
        let fg = f.multiply(&g)?;
        if fg.multiply(&h)? != f.multiply(&g.multiply(&h)?)? {
            assoc_fail += 1;
        }
        if fg.involute() != g.involute().multiply(&f.involute())? || f.involute().involute() != f {
            inv_fail += 1;
        }
        let left = crpchips_core::chip::Chip::identity(s[0]).multiply(&f)?;
        let right = f.multiply(&crpchips_core::chip::Chip::identity(s[1]))?;
        if left != f || right != f {
            unit_fail += 1;
        }
    }
    Ok(SuiteReport::new(
        Suite::ChipAssoc,
        vec![
            check("associativity", assoc_fail == 0, json!({"triples": count, "failures": assoc_fail})),
            check("involution", inv_fail == 0, json!({"triples": count, "failures": inv_fail})),
            check("identities", unit_fail == 0, json!({"triples": count, "failures": unit_fail})),
        ],
    ))
}

/// `chip(g θ^β[j] h)` is eventually the product chip, from a `j` no larger than the
/// support bound, on random pairs supported in `1..6`.
pub fn theta_stab(opts: &SuiteOptions) -> Result<SuiteReport> {
    let count = opts.samples.unwrap_or(200);
    let mut rng = rng_from_seed(opts.seed);
    let mut failures = Vec::new();
    let mut worst = 0usize;
    for i in 0..count {
        let p: [Permutation; 4] = std::array::from_fn(|_| Permutation::random(6, &mut rng));
        let (a, b, c) = (rng.random_range(0..=4), rng.random_range(0..=4), rng.random_range(0..=4));
        let r = theta_stabilization((&p[0], &p[1]), (&p[2], &p[3]), a, b, c, 8)?;
        worst = worst.max(r.stable_from.unwrap_or(usize::MAX));
        if !r.holds() {
            failures.push(i);
        }
    }
    Ok(SuiteReport::new(
        Suite::ThetaStab,
        vec![check(
            "stabilization",
            failures.is_empty(),
            json!({"instances": count, "failures": failures, "largest_j0": worst}),
        )],
    ))
}

fn random_dirichlet<R: Rng + ?Sized>(rng: &mut R) -> Result<DirichletSpec> {
    let p = rng.random_range(1..=4);
    let mut k: Vec<u32> = (0..p).map(|_| rng.random_range(0..=3)).collect();
    if k.iter().all(|&x| x == 0) {
        k[0] = 1;
    }
    Ok(DirichletSpec::new(k, rng.random_range(0.2..2.0))?)
}

/// Closed form against the contour integral on random arguments, against Monte
/// Carlo, and the aggregation property by a two-sample KS test.
pub fn dirichlet_laplace(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mc_samples = opts.samples.unwrap_or(1_000_000) as usize;
    let mut rng = rng_from_seed(opts.seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let spec = random_dirichlet(&mut rng)?;
        let u: Vec<Complex64> =
            (0..spec.dim()).map(|_| Complex64::new(rng.random_range(0.0..5.0), rng.random_range(-5.0..5.0))).collect();
        let closed = spec.laplace(&u, &LaplaceOptions::default())?;
        let contour = spec.laplace(&u, &LaplaceOptions::contour())?;
        worst = worst.max((closed - contour).norm());
    }
    let mut checks = vec![check("closed form vs contour", worst <= 1e-6, json!({"cases": 50, "max_abs_diff": worst}))];

    let cases: Vec<(Vec<u32>, f64, Vec<f64>)> = vec![
        (vec![1, 1], 1.0, vec![0.5, 2.0]),
        (vec![2, 1], 1.5, vec![1.0, 3.0]),
        (vec![1, 2, 3], 1.0, vec![0.3, 1.7, 4.0]),
        (vec![3, 3], 2.0, vec![2.0, 0.5]),
        (vec![1, 1, 1, 1], 1.0, vec![0.0, 1.0, 2.0, 3.0]),
        (vec![0, 2, 1], 0.8, vec![5.0, 1.0, 2.5]),
    ];
    let mc: Vec<Result<Check>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (k, ell, u))| {
            let spec = DirichletSpec::new(k.clone(), *ell)?;
            let uc: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let closed = spec.laplace(&uc, &LaplaceOptions::default())?.re;
            let (mean, se) = spec.laplace_monte_carlo(u, mc_samples, task_seed(opts.seed, i as u64))?;
            Ok(check(
                format!("monte carlo k={k:?} ell={ell}"),
                (closed - mean).abs() <= 3.0 * se,
                json!({"closed": closed, "mean": mean, "std_error": se, "samples": mc_samples}),
            ))
        })
        .collect();
    checks.extend(mc.into_iter().collect::<Result<Vec<_>>>()?);

    let a = DirichletSpec::new(vec![1, 2], 0.7)?;
    let b = DirichletSpec::new(vec![2, 0], 0.3)?;
    let conv = ConvolutionSpec::new(vec![a.clone(), b.clone()])?;
    let u = [Complex64::new(1.3, 0.4), Complex64::new(0.2, -1.0)];
    let prod = a.laplace(&u, &LaplaceOptions::default())? * b.laplace(&u, &LaplaceOptions::default())?;
    let diff = (conv.laplace(&u, &LaplaceOptions::default())? - prod).norm();
    checks.push(check("convolution is a product", diff <= 1e-14, json!({"diff": diff})));

    let agg_samples = opts.samples.map_or(100_000, |s| (s / 10).max(1000)) as usize;
    for (i, (n, grouping)) in [(3usize, vec![2u32, 1]), (4, vec![1, 2, 1]), (5, vec![3, 2])].into_iter().enumerate() {
        let r = aggregate_check(n, &grouping, 1.0, agg_samples, task_seed(opts.seed, 100 + i as u64))?;
        checks.push(check(
            format!("aggregation {grouping:?}"),
            r.passed,
            json!({"samples": r.samples, "ks": r.ks, "critical": r.critical}),
        ));
    }
    Ok(SuiteReport::new(Suite::DirichletLaplace, checks))
}

/// A random restaurant with five tables holding 97% of the mass.
pub fn five_tables(seed: Seed) -> Result<Restaurant> {
    let mut rng = rng_from_seed(seed);
    let raw: Vec<f64> = (0..5).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum::<f64>() / 0.97;
    let lengths: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let tail = 1.0 - lengths.iter().sum::<f64>();
    Ok(Restaurant::from_lengths(Rational::from_integer(1), &lengths, tail)?)
}

fn same_components(a: &MixtureMeasure, b: &MixtureMeasure) -> bool {
    let weights = |m: &MixtureMeasure| -> BTreeMap<_, _> {
        m.components.iter().map(|c| (c.key.clone(), (c.weight.to_bits(), c.rn_exponent))).collect()
    };
    a.coefficients() == b.coefficients() && weights(a) == weights(b)
}

/// Whether the `{2}` mixture is `Σ ℓ² (split, +1) + Σ 2ℓℓ' (merge, -1)`.
pub fn transposition_hand_form(r: &Restaurant, m: &MixtureMeasure) -> bool {
    let tables = r.tables().len();
    if m.components.len() != tables + tables * (tables - 1) / 2 {
        return false;
    }
    m.components.iter().all(|c| {
        let lens: Vec<f64> = c.removed().iter().filter_map(|id| r.table(*id)).map(|t| t.length).collect();
        match lens.as_slice() {
            [l] => {
                c.rn_exponent == 1
                    && c.coefficient == Rational::from_integer(1)
                    && c.key.counts == vec![vec![1, 1]]
                    && (c.weight - l * l).abs() <= 1e-15
            }
            [l, m] => {
                c.rn_exponent == -1
                    && c.coefficient == Rational::from_integer(2)
                    && c.key.counts == vec![vec![1], vec![1]]
                    && (c.weight - 2.0 * l * m).abs() <= 1e-15
            }
            _ => false,
        }
    })
}

/// The labeled engine against the class-sum engine, exactly, on `{2}`, `{3}`,
/// `{2,2}` over 20 random five-table restaurants.
pub fn cycles_calibration(opts: &SuiteOptions) -> Result<SuiteReport> {
    let sets: Vec<Vec<usize>> = match &opts.lengths {
        Some(l) => vec![l.clone()],
        None => vec![vec![2], vec![3], vec![2, 2]],
    };
    let mut checks = Vec::new();
    for lengths in &sets {
        let mut mismatches = Vec::new();
        let mut aut_b_agrees = 0;
        for i in 0..20 {
            let r = five_tables(task_seed(opts.seed, i))?;
            let labeled = act_cycles(lengths, &r, &opts.limits)?;
            let full = act_cycles_literal(
                lengths,
                &r,
                &opts.limits,
                DivisorMode::FullAut,
                PrefactorConvention::CentralizerOrder,
            )?;
            let aut_b = act_cycles_literal(
                lengths,
                &r,
                &opts.limits,
                DivisorMode::AutB,
                PrefactorConvention::CentralizerOrder,
            )?;
            if !same_components(&labeled, &full) || !labeled.total_mass().within_bounds {
                mismatches.push(i);
            }
            if same_components(&labeled, &aut_b) {
                aut_b_agrees += 1;
            }
        }
        checks.push(check(
            format!("labeled vs full-aut {lengths:?}"),
            mismatches.is_empty(),
            json!({"configs": 20, "mismatches": mismatches, "aut_b_agreements": aut_b_agrees}),
        ));
    }
    let r = five_tables(opts.seed)?;
    let m = act_cycles(&[2], &r, &opts.limits)?;
    checks.push(check(
        "transposition hand form",
        transposition_hand_form(&r, &m),
        json!({"components": m.components.len()}),
    ));
    // The pointwise divisor doubles the merge class of {2}.
    let aut_b = act_cycles_literal(&[2], &r, &opts.limits, DivisorMode::AutB, PrefactorConvention::CentralizerOrder)?;
    let doubled = m.components.iter().all(|c| {
        let other = aut_b.coefficients()[&c.key];
        if c.rn_exponent == -1 {
            other == c.coefficient * Rational::from_integer(2)
        } else {
            other == c.coefficient
        }
    });
    checks.push(check("pointwise divisor doubles merges", doubled, json!({"divisor_mode": "full_aut"})));
    Ok(SuiteReport::new(Suite::CyclesCalibration, checks))
}

/// The restaurant used by the oracle suites when none is given: Poisson–Dirichlet(1)
/// cut to twelve tables, which keeps the framings of `{3}` small.
pub fn oracle_restaurant(seed: Seed) -> Result<Restaurant> {
    let t = Truncation { max_tables: 12, min_tail: 1e-10 };
    Ok(sample_tables(Rational::from_integer(1), SamplerMethod::PoissonProcess, t, seed)?)
}

/// Grid of the Laplace functional used by the oracles.
pub fn oracle_grid() -> Vec<f64> {
    linear_grid(1.0, 10.0, 10)
}

/// [`compare_report`] with the engine side of the KS test sampled in parallel.
pub fn compare(
    measure: &MixtureMeasure,
    sim: &Simulation,
    samples: u64,
    thresholds: &Thresholds,
    seed: Seed,
) -> Result<CompareReport> {
    let empirical = simulate(sim, samples, seed, &oracle_grid(), thresholds.ks)?;
    let mut report = compare_report(measure, &empirical, thresholds, 0, &mut rng_from_seed(seed))?;
    if thresholds.ks {
        let engine = engine_marginal(measure, samples.min(250_000), task_seed(seed, u64::MAX))?;
        let d = ks_two_sample(&engine, &empirical.marginal);
        let c = ks_critical_two_sample(engine.len(), empirical.marginal.len());
        report.ks = Some(d);
        report.ks_critical = Some(c);
        report.ks_passed = d < c;
        report.passed &= report.ks_passed;
    }
    Ok(report)
}

fn compare_check(name: String, measure: &MixtureMeasure, report: &CompareReport) -> Check {
    check(
        name,
        report.passed,
        json!({"report": CompareJson::from(report), "components": measure.components.len(), "truncation_error": measure.truncation_error}),
    )
}

/// The labeled engine against the direct simulation on `{2}` and `{3}`.
pub fn cycles_oracle(opts: &SuiteOptions) -> Result<SuiteReport> {
    let sets: Vec<Vec<usize>> = match &opts.lengths {
        Some(l) => vec![l.clone()],
        None => vec![vec![2], vec![3]],
    };
    let samples = opts.samples.unwrap_or(1_000_000);
    let r = match &opts.restaurant {
        Some(o) => o.restaurant().clone(),
        None => oracle_restaurant(opts.seed)?,
    };
    let mut checks = Vec::new();
    for (i, lengths) in sets.iter().enumerate() {
        let m = act_cycles(lengths, &r, &opts.limits)?;
        let sim = Simulation::Cycles { lengths: lengths.clone(), restaurant: r.clone() };
        let report = compare(&m, &sim, samples, &Thresholds::default(), task_seed(opts.seed, 1000 + i as u64))?;
        checks.push(compare_check(format!("engine vs simulation {lengths:?}"), &m, &report));
    }
    Ok(SuiteReport::new(Suite::CyclesOracle, checks))
}

/// The framed-surface sampler of a central element against auxiliary guests
/// placed directly, on an occupied restaurant.
pub fn center_oracle(opts: &SuiteOptions) -> Result<SuiteReport> {
    let lengths = opts.lengths.clone().unwrap_or_else(|| vec![2]);
    let samples = opts.samples.unwrap_or(100_000);
    let occ = match &opts.restaurant {
        Some(o) if o.guest_count() > 0 => o.clone(),
        Some(o) => o.place_guests(2, opts.seed),
        None => OccupiedRestaurant::from(oracle_restaurant(opts.seed)?).place_guests(2, opts.seed),
    };
    let framed = center_samples(CenterRoute::Framed, &lengths, &occ, &opts.limits, samples, task_seed(opts.seed, 1))?;
    let direct = center_samples(CenterRoute::Direct, &lengths, &occ, &opts.limits, samples, task_seed(opts.seed, 2))?;
    let tv = total_variation(&framed.exponent_pmf(), &direct.exponent_pmf());
    let ks = ks_two_sample(&framed.guest_table, &direct.guest_table);
    let crit = ks_critical_two_sample(framed.guest_table.len(), direct.guest_table.len());
    let untouched = untouched_guests_kept(&lengths, &occ, opts)?;
    Ok(SuiteReport::new(
        Suite::CenterOracle,
        vec![
            check("exponent law", tv <= 0.02, json!({"tv": tv, "threshold": 0.02, "samples": samples})),
            check("guest table length", ks < crit, json!({"ks": ks, "critical": crit})),
            check("untouched tables kept", untouched, json!({})),
        ],
    ))
}

/// Tables not framed by the sampled surface survive with their guests in place.
fn untouched_guests_kept(lengths: &[usize], occ: &OccupiedRestaurant, opts: &SuiteOptions) -> Result<bool> {
    let sampler = crpchips_core::engine::CenterSampler::new(lengths, occ.restaurant(), &opts.limits)?;
    let mut rng = rng_from_seed(task_seed(opts.seed, 3));
    for _ in 0..200 {
        let (_, after) = sampler.sample(occ, &mut rng)?;
        for (before, now) in occ.guests().iter().zip(after.guests()) {
            if let Some(t) = after.restaurant().table(before.table) {
                let old = occ.restaurant().table(before.table).expect("guest table exists");
                if t.length == old.length && (now.table != before.table || now.pos != before.pos) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The identity chip gives the identity transform; the chip adding one unit of
/// length to the arc of a single guest matches the direct simulation.
pub fn chip_oracle(opts: &SuiteOptions) -> Result<SuiteReport> {
    let samples = opts.samples.unwrap_or(1_000_000);
    let base = match &opts.restaurant {
        Some(o) => o.restaurant().clone(),
        None => oracle_restaurant(opts.seed)?,
    };
    let two = OccupiedRestaurant::from(base.clone()).place_guests(2, opts.seed);
    let id = act_chip(&TrivialLeftChip::identity(2), &two, &opts.limits)?;
    let identity_ok = id.components.len() == 1 && {
        let c = &id.components[0];
        c.weight == 1.0
            && c.coefficient == Rational::from_integer(1)
            && c.rn_exponent == 0
            && c.key.rho.as_ref().is_some_and(Permutation::is_identity)
            && c.key.counts == vec![vec![1, 0], vec![0, 1]]
    };
    let mut checks = vec![check("identity chip", identity_ok, json!({"mixture": MixtureJson::from(&id)}))];
    let one = OccupiedRestaurant::from(base).place_guests(1, opts.seed);
    let chip = TrivialLeftChip::new(Permutation::identity(1), vec![1], Vec::new())?;
    let m = act_chip(&chip, &one, &opts.limits)?;
    let sim = Simulation::Chip { chip, point: one.clone() };
    let report = compare(&m, &sim, samples, &Thresholds::default(), task_seed(opts.seed, 7))?;
    checks.push(compare_check("one guest, one added unit".into(), &m, &report));
    checks.push(check("point", true, json!({"restaurant": RestaurantJson::from(&one)})));
    Ok(SuiteReport::new(Suite::ChipOracle, checks))
}

fn norm_faces(seqs: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = seqs
        .into_iter()
        .map(|mut s| {
            s.reverse();
            rotate_to_min(&s)
        })
        .collect();
    v.sort();
    v
}

/// Triple round trips, incidence sums, ribbon boundaries and Euler characteristics.
pub fn checker(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut rng = rng_from_seed(opts.seed);
    let mut round_trip = 0;
    let mut euler = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let t: [Permutation; 3] = std::array::from_fn(|_| Permutation::random(n, &mut rng));
        let s = CheckerSurface::from_triple(t[0].clone(), t[1].clone(), t[2].clone())?;
        let (a, b, c) = s.triple();
        let rebuilt = CheckerSurface::from_edges(n, &s.edges())?;
        if (a, b, c) != (&t[0], &t[1], &t[2]) || rebuilt != s {
            round_trip += 1;
        }
        let st = s.stats();
        let v = (st.a.len() + st.b.len() + st.c.len()) as i64;
        let ok = st.euler == v - n as i64
            && st.euler % 2 == 0
            && st.genera.iter().all(|&g| g >= 0)
            && st.euler == 2 * st.components as i64 - 2 * st.genera.iter().sum::<i64>();
        if !ok {
            euler += 1;
        }
    }
    let mut incidence = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let s = EngineSurface::new(Permutation::random(n, &mut rng), Permutation::random(n, &mut rng))?;
        let m = s.incidence_matrix();
        let rows: Vec<usize> = m.iter().map(|r| r.iter().sum::<u32>() as usize).collect();
        let cols: Vec<usize> =
            (0..m.first().map_or(0, Vec::len)).map(|j| m.iter().map(|r| r[j] as usize).sum()).collect();
        let b: Vec<usize> = s.b_cycles().iter().map(Vec::len).collect();
        let c: Vec<usize> = s.c_cycles().iter().map(Vec::len).collect();
        if rows != b || cols != c {
            incidence += 1;
        }
    }
    let mut ribbon = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let g = Permutation::random(n, &mut rng);
        let h = Permutation::random(n, &mut rng);
        let labels = RibbonGraph::new(g.clone(), h.clone())?.boundary_labels();
        let a = norm_faces(labels.iter().map(|(a, _)| a.clone()).collect());
        let b = norm_faces(labels.iter().map(|(_, b)| b.clone()).collect());
        if a != cycle_set(&(&h * &g)) || b != cycle_set(&(&g * &h)) {
            ribbon += 1;
        }
    }
    Ok(SuiteReport::new(
        Suite::Checker,
        vec![
            check("triple round trip", round_trip == 0, json!({"surfaces": 200, "failures": round_trip})),
            check("euler characteristic", euler == 0, json!({"surfaces": 200, "failures": euler})),
            check("incidence sums", incidence == 0, json!({"surfaces": 200, "failures": incidence})),
            check("ribbon boundaries", ribbon == 0, json!({"pairs": 100, "failures": ribbon})),
        ],
    ))
}

/// Parses a suite name, listing the valid ones on failure.
pub fn parse_suite(s: &str) -> Result<Suite> {
    match Suite::from_name(s) {
        Some(x) => Ok(x),
        None => {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            bail!("unknown suite '{s}'; expected one of {}", names.join(", "))
        }
    }
}
