//! Seed-split Monte Carlo on rayon.
//!
//! Work is cut into fixed chunks of [`CHUNK`] samples. Chunk `i` draws from
//! `task_seed(master, i)` and chunks are merged in index order, so results depend
//! on the master seed only and not on the number of threads.

use std::collections::BTreeMap;

use anyhow::{anyhow, Result};
use crpchips_core::chip::cycles_representative;
use crpchips_core::engine::{center_direct, CenterSampler, EngineLimits, Simulation};
use crpchips_core::mixture::{EmpiricalSummary, MixtureMeasure};
use crpchips_core::restaurant::OccupiedRestaurant;
use crpchips_core::rng::{rng_from_seed, task_seed, Seed};
use rayon::prelude::*;

pub const CHUNK: u64 = 20_000;

/// Sample counts of the chunks covering `samples`.
pub fn chunk_sizes(samples: u64) -> Vec<u64> {
    let full = samples / CHUNK;
    let mut sizes = vec![CHUNK; full as usize];
    if !samples.is_multiple_of(CHUNK) {
        sizes.push(samples % CHUNK);
    }
    sizes
}

/// Runs `f` on a pool of `threads` workers (the rayon default when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| anyhow!("cannot start {threads:?} threads: {e}"))?;
    Ok(pool.install(f))
}

pub fn simulate(
    sim: &Simulation,
    samples: u64,
    seed: Seed,
    grid: &[f64],
    keep_marginal: bool,
) -> Result<EmpiricalSummary> {
    let parts: Vec<_> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(i, n)| sim.run(n, task_seed(seed, i as u64), grid, keep_marginal))
        .collect();
    let mut out = EmpiricalSummary::new(sim.fingerprint(), grid.to_vec(), keep_marginal);
    for part in parts {
        out.merge(&part?)?;
    }
    Ok(out)
}

/// `samples` values of the KS marginal drawn from the engine's own sampler.
pub fn engine_marginal(measure: &MixtureMeasure, samples: u64, seed: Seed) -> Result<Vec<f64>> {
    let sampler = measure.sampler()?;
    let parts: Vec<Vec<f64>> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut rng = rng_from_seed(task_seed(seed, i as u64));
            (0..n).map(|_| sampler.sample(&mut rng).marginal()).collect()
        })
        .collect();
    Ok(parts.concat())
}

/// How a central element acts on an occupied restaurant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterRoute {
    /// Through weighted framed surfaces.
    Framed,
    /// Auxiliary guests placed independently, acted on and forgotten.
    Direct,
}

/// Exponent counts and the length of the table holding guest 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CenterSamples {
    pub samples: u64,
    pub exponents: BTreeMap<i64, u64>,
    pub guest_table: Vec<f64>,
}

impl CenterSamples {
    pub fn exponent_pmf(&self) -> BTreeMap<i64, f64> {
        let n = self.samples.max(1) as f64;
        self.exponents.iter().map(|(&k, &v)| (k, v as f64 / n)).collect()
    }

    fn record(&mut self, exponent: i64, out: &OccupiedRestaurant) -> Result<()> {
        self.samples += 1;
        *self.exponents.entry(exponent).or_insert(0) += 1;
        if let Some(g) = out.guests().first() {
            let t = out.restaurant().table(g.table).ok_or_else(|| anyhow!("guest 1 lost its table"))?;
            self.guest_table.push(t.length);
        }
        Ok(())
    }

    fn merge(&mut self, other: CenterSamples) {
        self.samples += other.samples;
        for (k, v) in other.exponents {
            *self.exponents.entry(k).or_insert(0) += v;
        }
        self.guest_table.extend(other.guest_table);
    }
}

pub fn center_samples(
    route: CenterRoute,
    lengths: &[usize],
    occ: &OccupiedRestaurant,
    limits: &EngineLimits,
    samples: u64,
    seed: Seed,
) -> Result<CenterSamples> {
    let framed = match route {
        CenterRoute::Framed => Some(CenterSampler::new(lengths, occ.restaurant(), limits)?),
        CenterRoute::Direct => None,
    };
    let g = cycles_representative(lengths)?;
    let parts: Vec<Result<CenterSamples>> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut rng = rng_from_seed(task_seed(seed, i as u64));
            let mut out = CenterSamples::default();
            for _ in 0..n {
                let (exponent, after) = match &framed {
                    Some(s) => s.sample(occ, &mut rng)?,
                    None => center_direct(&g, occ, &mut rng)?,
                };
                out.record(exponent, &after)?;
            }
            Ok(out)
        })
        .collect();
    let mut out = CenterSamples::default();
    for part in parts {
        out.merge(part?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crpchips_core::restaurant::Restaurant;
    use crpchips_core::Rational;

    #[test]
    fn chunks_cover_the_request() {
        assert_eq!(chunk_sizes(0), Vec::<u64>::new());
        assert_eq!(chunk_sizes(CHUNK), vec![CHUNK]);
        assert_eq!(chunk_sizes(2 * CHUNK + 5), vec![CHUNK, CHUNK, 5]);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let r = Restaurant::from_lengths(Rational::from_integer(1), &[0.5, 0.3, 0.2], 0.0).unwrap();
        let sim = Simulation::Cycles { lengths: vec![2], restaurant: r };
        let grid = [0.5, 2.0];
        let one = with_threads(Some(1), || simulate(&sim, 50_000, 3, &grid, true)).unwrap().unwrap();
        let four = with_threads(Some(4), || simulate(&sim, 50_000, 3, &grid, true)).unwrap().unwrap();
        assert_eq!(one, four);
        assert_eq!(one.samples, 50_000);
    }
}
