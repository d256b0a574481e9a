//! The `crpchips` command line.
//!
//! Exit codes: 0 on success, 1 when a verification suite fails, 2 for bad flags
//! or inputs, 3 when an enumeration guard refuses the request.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use crpchips_core::checker::{enumerate_gamma, CheckerSurface, EngineSurface};
use crpchips_core::chip::{chip_from_pair, TrivialLeftChip};
use crpchips_core::dirichlet::{ConvolutionSpec, DirichletSpec, LaplaceMode, LaplaceOptions};
use crpchips_core::engine::{
    act_center_sample, act_chip, act_cycles, act_cycles_literal, DivisorMode, EngineLimits, PrefactorConvention,
    Simulation, ENGINE_GUARD,
};
use crpchips_core::mixture::Thresholds;
use crpchips_core::perm::{factorial, parse_rational, BRUTE_FORCE_LIMIT};
use crpchips_core::restaurant::{sample_tables, SamplerMethod, Truncation};
use crpchips_core::Permutation;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::format::{
    parse_list, parse_permutation, ChipJson, CompareJson, GammaClassJson, LawJson, MixtureJson, PermutationJson, Real,
    RestaurantJson, SummaryJson, SurfaceJson, TrivialLeftChipJson,
};
use crate::parallel::{simulate, with_threads};
use crate::suites::{self, oracle_grid, parse_suite, Suite, SuiteOptions};

#[derive(Parser, Debug)]
#[command(name = "crpchips", version, about = "Virtual permutations, chips, checker surfaces and their polymorphisms")]
pub struct Cli {
    /// Worker threads for Monte Carlo; results do not depend on it.
    #[arg(long, global = true, env = "CRPCHIPS_THREADS")]
    pub threads: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Lift the enumeration guards after printing the expected cost.
    #[arg(long, global = true)]
    pub unsafe_guard: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Poisson,
    Stick,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Closed,
    Contour,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DivisorArg {
    AutB,
    FullAut,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PrefactorArg {
    Centralizer,
    Iota,
    FactorialK,
}

/// A chip with trivial left half, given inline or as a JSON file.
#[derive(Args, Debug, Clone)]
pub struct ChipArgs {
    /// JSON file `{"sigma", "phi", "circles"}`.
    #[arg(long)]
    pub chip: Option<PathBuf>,
    /// Images of σ.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Arc lengths φ, one per strand.
    #[arg(long)]
    pub phi: Option<String>,
    /// Circle lengths.
    #[arg(long, default_value = "")]
    pub circles: String,
}

impl ChipArgs {
    fn given(&self) -> bool {
        self.chip.is_some() || self.sigma.is_some()
    }

    fn load(&self) -> Result<TrivialLeftChip> {
        if let Some(path) = &self.chip {
            return read_json::<TrivialLeftChipJson>(path)?.to_chip();
        }
        let sigma =
            parse_permutation(self.sigma.as_deref().ok_or_else(|| anyhow!("--sigma or --chip is required"))?, None)?;
        let phi = match &self.phi {
            Some(p) => parse_list(p)?,
            None => vec![0; sigma.degree()],
        };
        Ok(TrivialLeftChip::new(sigma, phi, parse_list(&self.circles)?)?)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a Poisson–Dirichlet restaurant.
    Sample {
        #[arg(long, default_value = "1")]
        z: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of stored tables.
        #[arg(long, default_value_t = 256)]
        tables: usize,
        /// Stop once the unsampled mass is below this.
        #[arg(long, default_value_t = 1e-10)]
        min_tail: f64,
        #[arg(long, value_enum, default_value = "poisson")]
        method: MethodArg,
    },
    /// Seat new guests uniformly.
    Place {
        #[arg(long)]
        restaurant: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Project a permutation to a smaller degree, or an occupied restaurant to `S_n`.
    Project {
        /// Images, or cycles such as `(1 3 4)` together with --degree.
        #[arg(long)]
        perm: Option<String>,
        #[arg(long)]
        degree: Option<usize>,
        /// Target degree.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, conflicts_with = "perm")]
        restaurant: Option<PathBuf>,
        /// Number of guests to read.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Cut and glue an occupied restaurant by a pair of permutations.
    Act {
        #[arg(long)]
        restaurant: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        /// Reverse every table afterwards.
        #[arg(long)]
        invert: bool,
    },
    /// Glue two chips.
    ChipMul {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Also emit the involution of the product.
        #[arg(long)]
        involute: bool,
    },
    /// The chip of a pair of finitary permutations.
    ChipFromPair {
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
        #[arg(long)]
        alpha: usize,
        #[arg(long)]
        beta: usize,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Classes of surfaces with A-orders `k`, one JSON object per line.
    EnumGamma {
        #[arg(long)]
        k: String,
    },
    /// DOT drawing of the dessin of a surface.
    Dessin {
        #[arg(long)]
        ga: Option<String>,
        #[arg(long)]
        gb: Option<String>,
        #[arg(long)]
        gc: Option<String>,
        /// Engine form `Σ(g, 1, u^{-1})`.
        #[arg(long, conflicts_with_all = ["ga", "gb", "gc"])]
        g: Option<String>,
        #[arg(long, requires = "g")]
        u: Option<String>,
        /// Print the surface statistics as JSON instead.
        #[arg(long)]
        stats: bool,
    },
    /// Laplace transform of a Dirichlet law or convolution.
    Laplace {
        /// JSON `{"k", "ell"}` or `{"convolution": [..]}`.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, conflicts_with = "spec")]
        k: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        /// Comma-separated complex numbers such as `1.5,2+1i`.
        #[arg(long)]
        u: String,
        #[arg(long, value_enum, default_value = "closed")]
        mode: ModeArg,
        /// Also estimate by Monte Carlo (real arguments only).
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Spreaded image of a restaurant under a collection of circles.
    ActCycles {
        #[arg(long)]
        k: String,
        #[arg(long)]
        restaurant: PathBuf,
        /// Use the class-sum engine.
        #[arg(long)]
        literal: bool,
        #[arg(long, value_enum, default_value = "full-aut")]
        divisor: DivisorArg,
        #[arg(long, value_enum, default_value = "centralizer")]
        prefactor: PrefactorArg,
    },
    /// Spreaded image of an occupied restaurant under a chip with trivial left half.
    ActChip {
        #[command(flatten)]
        chip: ChipArgs,
        #[arg(long)]
        point: PathBuf,
    },
    /// One sample of a central element acting on an occupied restaurant.
    ActCenter {
        #[arg(long)]
        k: String,
        #[arg(long)]
        restaurant: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Direct Monte Carlo of circles or a chip acting on a restaurant.
    Simulate {
        #[arg(long)]
        k: Option<String>,
        #[command(flatten)]
        chip: ChipArgs,
        #[arg(long)]
        restaurant: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Points of the Laplace functional.
        #[arg(long)]
        grid: Option<String>,
        /// Also run the engine and report the comparison.
        #[arg(long)]
        compare: bool,
    },
    /// Run verification suites; `all` runs every suite.
    Verify {
        #[arg(required = true)]
        suites: Vec<String>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        restaurant: Option<PathBuf>,
    },
}

/// An error with the exit code it maps to.
#[derive(Debug)]
struct Exit {
    code: i32,
    message: String,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

struct Session {
    limits: EngineLimits,
    brute_force_limit: usize,
    unsafe_guard: bool,
    notes: Vec<String>,
}

impl Session {
    /// Under --unsafe-guard, records the expected cost before lifting the guard.
    fn allow(&mut self, what: &str, n: usize, cost: f64) {
        if self.unsafe_guard && n > ENGINE_GUARD {
            self.notes.push(format!("expected cost of {what} with n = {n}: about {cost:.3e} framed surfaces"));
        }
    }
}

fn engine_cost(n: usize, tables: usize) -> f64 {
    factorial(n.min(34)) as f64 * (tables as f64).powi(n as i32)
}

fn lengths_arg(s: &str) -> Result<Vec<usize>> {
    let k: Vec<usize> = parse_list(s)?;
    if k.is_empty() {
        bail!("--k needs at least one cycle length");
    }
    Ok(k)
}

fn method(m: MethodArg) -> SamplerMethod {
    match m {
        MethodArg::Poisson => SamplerMethod::PoissonProcess,
        MethodArg::Stick => SamplerMethod::StickBreaking,
    }
}

fn load_law(spec: &Option<PathBuf>, k: &Option<String>, ell: f64) -> Result<ConvolutionSpec> {
    match (spec, k) {
        (Some(path), _) => read_json::<LawJson>(path)?.to_convolution(),
        (None, Some(k)) => Ok(ConvolutionSpec::new(vec![DirichletSpec::new(parse_list(k)?, ell)?])?),
        (None, None) => bail!("--spec or --k is required"),
    }
}

fn execute(cli: &Cli, ctx: &mut Session) -> Result<(String, i32)> {
    let out = match &cli.command {
        Command::Sample { z, seed, tables, min_tail, method: m } => {
            let t = Truncation { max_tables: *tables, min_tail: *min_tail };
            let r = sample_tables(parse_rational(z)?, method(*m), t, *seed)?;
            to_json(&RestaurantJson::from(&r))?
        }
        Command::Place { restaurant, count, seed } => {
            let occ = read_json::<RestaurantJson>(restaurant)?.to_occupied()?;
            let placed = occ.place_guests(*count, *seed);
            let mut json = serde_json::to_value(RestaurantJson::from(&placed))?;
            json["placement_error"] = serde_json::to_value(Real(placed.placement_error()))?;
            to_json(&json)?
        }
        Command::Project { perm, degree, m, restaurant, n } => {
            let p = match (perm, restaurant) {
                (Some(p), _) => {
                    let p = parse_permutation(p, *degree)?;
                    let m = m.ok_or_else(|| anyhow!("--m is required with --perm"))?;
                    p.project(m)?
                }
                (None, Some(path)) => {
                    let occ = read_json::<RestaurantJson>(path)?.to_occupied()?;
                    occ.project_finite(n.unwrap_or(occ.guest_count()))?
                }
                (None, None) => bail!("--perm or --restaurant is required"),
            };
            to_json(&PermutationJson::from(&p))?
        }
        Command::Act { restaurant, left, right, invert } => {
            let occ = read_json::<RestaurantJson>(restaurant)?.to_occupied()?;
            let l = parse_permutation(left, None)?;
            let r = parse_permutation(right, None)?;
            let n = l.degree().max(r.degree());
            let outcome = occ.act_detailed(&l.extend(n), &r.extend(n))?;
            let after = if *invert { outcome.occupied.invert() } else { outcome.occupied };
            to_json(&json!({
                "restaurant": RestaurantJson::from(&after),
                "rn_exp": outcome.rn_exponent,
                "removed": outcome.removed.iter().map(|t| t.id).collect::<Vec<_>>(),
                "created": outcome.created.iter().map(|t| t.id).collect::<Vec<_>>(),
            }))?
        }
        Command::ChipMul { left, right, involute } => {
            let a = read_json::<ChipJson>(left)?.to_chip()?;
            let b = read_json::<ChipJson>(right)?.to_chip()?;
            let product = a.multiply(&b)?;
            if *involute {
                to_json(
                    &json!({"product": ChipJson::from(&product), "involution": ChipJson::from(&product.involute())}),
                )?
            } else {
                to_json(&ChipJson::from(&product))?
            }
        }
        Command::ChipFromPair { g1, g2, alpha, beta, degree } => {
            let a = parse_permutation(g1, *degree)?;
            let b = parse_permutation(g2, *degree)?;
            let n = a.degree().max(b.degree());
            to_json(&ChipJson::from(&chip_from_pair(&a.extend(n), &b.extend(n), *alpha, *beta)))?
        }
        Command::EnumGamma { k } => {
            let k = lengths_arg(k)?;
            let n: usize = k.iter().sum();
            if ctx.unsafe_guard && n > BRUTE_FORCE_LIMIT {
                ctx.notes.push(format!("expected cost of the enumeration: {n}! = {} pairs", factorial(n.min(34))));
            }
            let mut out = String::new();
            for class in enumerate_gamma(&k, ctx.brute_force_limit)? {
                out += &serde_json::to_string(&GammaClassJson::from(&class))?;
                out.push('\n');
            }
            out
        }
        Command::Dessin { ga, gb, gc, g, u, stats } => {
            let surface = match (g, ga) {
                (Some(g), _) => {
                    let g = parse_permutation(g, None)?;
                    let u = match u {
                        Some(u) => parse_permutation(u, Some(g.degree()))?,
                        None => Permutation::identity(g.degree()),
                    };
                    EngineSurface::new(g, u)?.to_checker()
                }
                (None, Some(ga)) => {
                    let a = parse_permutation(ga, None)?;
                    let n = a.degree();
                    let parse = |s: &Option<String>| -> Result<Permutation> {
                        s.as_deref().map_or(Ok(Permutation::identity(n)), |x| parse_permutation(x, Some(n)))
                    };
                    CheckerSurface::from_triple(a, parse(gb)?, parse(gc)?)?
                }
                (None, None) => bail!("--ga (with --gb, --gc) or --g (with --u) is required"),
            };
            if *stats {
                let st = surface.stats();
                let orders = |v: &[crpchips_core::checker::Vertex]| v.iter().map(|x| x.order()).collect::<Vec<_>>();
                to_json(&json!({
                    "surface": SurfaceJson::from(&surface),
                    "a_orders": orders(&st.a),
                    "b_orders": orders(&st.b),
                    "c_orders": orders(&st.c),
                    "euler": st.euler,
                    "components": st.components,
                    "genera": st.genera,
                }))?
            } else {
                surface.to_dessin_dot()
            }
        }
        Command::Laplace { spec, k, ell, u, mode, mc_samples, seed } => {
            let law = load_law(spec, k, *ell)?;
            let u: Vec<Complex64> = u
                .split(',')
                .map(|x| Complex64::from_str(x.trim()).map_err(|_| anyhow!("bad complex number '{x}'")))
                .collect::<Result<_>>()?;
            let options = match mode {
                ModeArg::Closed => LaplaceOptions::default(),
                ModeArg::Contour => LaplaceOptions { mode: LaplaceMode::Contour, ..LaplaceOptions::default() },
            };
            let value = law.laplace(&u, &options)?;
            let mut json = json!({"re": Real(value.re), "im": Real(value.im)});
            if let Some(samples) = mc_samples {
                if u.iter().any(|x| x.im != 0.0) || law.components().len() != 1 {
                    bail!("Monte Carlo needs real arguments and a single Dirichlet law");
                }
                let re: Vec<f64> = u.iter().map(|x| x.re).collect();
                let (mean, se) = law.components()[0].laplace_monte_carlo(&re, *samples, *seed)?;
                json["monte_carlo"] = json!({"mean": Real(mean), "std_error": Real(se), "samples": samples});
            }
            to_json(&json)?
        }
        Command::ActCycles { k, restaurant, literal, divisor, prefactor } => {
            let k = lengths_arg(k)?;
            let r = read_json::<RestaurantJson>(restaurant)?.to_restaurant()?;
            let n: usize = k.iter().sum();
            ctx.allow("act-cycles", n, engine_cost(n, r.tables().len()));
            let m = if *literal {
                let d = match divisor {
                    DivisorArg::AutB => DivisorMode::AutB,
                    DivisorArg::FullAut => DivisorMode::FullAut,
                };
                let p = match prefactor {
                    PrefactorArg::Centralizer => PrefactorConvention::CentralizerOrder,
                    PrefactorArg::Iota => PrefactorConvention::IotaNoFactorial,
                    PrefactorArg::FactorialK => PrefactorConvention::FactorialK,
                };
                act_cycles_literal(&k, &r, &ctx.limits, d, p)?
            } else {
                act_cycles(&k, &r, &ctx.limits)?
            };
            to_json(&MixtureJson::from(&m))?
        }
        Command::ActChip { chip, point } => {
            let chip = chip.load()?;
            let point = read_json::<RestaurantJson>(point)?.to_occupied()?;
            ctx.allow(
                "act-chip",
                chip.total_degree(),
                engine_cost(chip.total_degree(), point.restaurant().tables().len()),
            );
            to_json(&MixtureJson::from(&act_chip(&chip, &point, &ctx.limits)?))?
        }
        Command::ActCenter { k, restaurant, seed } => {
            let k = lengths_arg(k)?;
            let occ = read_json::<RestaurantJson>(restaurant)?.to_occupied()?;
            let n: usize = k.iter().sum();
            ctx.allow("act-center", n, engine_cost(n, occ.restaurant().tables().len()));
            let (exp, after) = act_center_sample(&k, &occ, &ctx.limits, *seed)?;
            to_json(&json!({"rn_exp": exp, "restaurant": RestaurantJson::from(&after)}))?
        }
        Command::Simulate { k, chip, restaurant, samples, seed, grid, compare } => {
            let occ = read_json::<RestaurantJson>(restaurant)?.to_occupied()?;
            let sim = match (k, chip.given()) {
                (Some(k), false) => {
                    Simulation::Cycles { lengths: lengths_arg(k)?, restaurant: occ.restaurant().clone() }
                }
                (None, true) => Simulation::Chip { chip: chip.load()?, point: occ.clone() },
                _ => bail!("give exactly one of --k or a chip (--sigma/--chip)"),
            };
            let grid = match grid {
                Some(g) => parse_list::<f64>(g)?,
                None => oracle_grid(),
            };
            if *compare {
                let m = match &sim {
                    Simulation::Cycles { lengths, restaurant } => act_cycles(lengths, restaurant, &ctx.limits)?,
                    Simulation::Chip { chip, point } => act_chip(chip, point, &ctx.limits)?,
                };
                let summary = simulate(&sim, *samples, *seed, &grid, false)?;
                let report = suites::compare(&m, &sim, *samples, &Thresholds::default(), *seed)?;
                to_json(&json!({"summary": SummaryJson::from(&summary), "compare": CompareJson::from(&report)}))?
            } else {
                to_json(&SummaryJson::from(&simulate(&sim, *samples, *seed, &grid, false)?))?
            }
        }
        Command::Verify { suites: names, k, samples, seed, restaurant } => {
            let list: Vec<Suite> = if names.iter().any(|s| s == "all") {
                Suite::ALL.to_vec()
            } else {
                names.iter().map(|s| parse_suite(s)).collect::<Result<_>>()?
            };
            let opts = SuiteOptions {
                lengths: k.as_deref().map(lengths_arg).transpose()?,
                samples: *samples,
                seed: *seed,
                restaurant: restaurant.as_deref().map(|p| read_json::<RestaurantJson>(p)?.to_occupied()).transpose()?,
                limits: ctx.limits,
                brute_force_limit: ctx.brute_force_limit,
            };
            let reports = list.iter().map(|s| suites::run(*s, &opts)).collect::<Result<Vec<_>>>()?;
            let passed = reports.iter().all(|r| r.passed);
            let text = to_json(&json!({"passed": passed, "suites": reports}))?;
            return Ok((text, if passed { 0 } else { 1 }));
        }
    };
    Ok((out, 0))
}

fn classify(e: anyhow::Error) -> Exit {
    let guard = e
        .chain()
        .any(|c| matches!(c.downcast_ref::<crpchips_core::Error>(), Some(crpchips_core::Error::GuardExceeded { .. })));
    if guard {
        Exit { code: 3, message: format!("error: {e:#}\nthe enumeration guard can be lifted with --unsafe-guard") }
    } else {
        Exit { code: 2, message: format!("error: {e:#}") }
    }
}

/// Parses `args` (including the program name), runs the command and returns the
/// exit code. Results go to `stdout` or `--out`; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut ctx = Session {
        limits: EngineLimits::default(),
        brute_force_limit: BRUTE_FORCE_LIMIT,
        unsafe_guard: cli.unsafe_guard,
        notes: Vec::new(),
    };
    if cli.unsafe_guard {
        ctx.limits = EngineLimits { guard: usize::MAX, framings: u128::MAX };
        ctx.brute_force_limit = usize::MAX;
    }
    let result = with_threads(cli.threads, || {
        let r = execute(&cli, &mut ctx);
        (r, std::mem::take(&mut ctx.notes))
    });
    let (result, notes) = match result {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            return 2;
        }
    };
    for n in notes {
        let _ = writeln!(stderr, "{n}");
    }
    match result {
        Ok((text, code)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(Into::into),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e:#}");
                return 2;
            }
            code
        }
        Err(e) => {
            let exit = classify(e);
            let _ = writeln!(stderr, "{}", exit.message);
            exit.code
        }
    }
}
