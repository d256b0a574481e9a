//! JSON forms of the core types.
//!
//! Reals are written as decimal strings with 17 significant digits so they
//! round-trip exactly; on input both strings and plain numbers are accepted.
//! Rationals are `{"num", "den"}` and permutations are arrays of images.

use std::fmt;

use anyhow::{anyhow, bail, Context, Result};
use crpchips_core::checker::{CheckerSurface, EngineSurface, GammaClass};
use crpchips_core::chip::{Arc, ArcKind, Chip, TrivialLeftChip};
use crpchips_core::dirichlet::{ConvolutionSpec, DirichletSpec};
use crpchips_core::mixture::{CompareReport, Destination, EmpiricalSummary, MixtureMeasure, Source};
use crpchips_core::perm::parse_rational;
use crpchips_core::restaurant::{Guest, OccupiedRestaurant, Restaurant, Table, TableId};
use crpchips_core::{Permutation, Rational};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real written as a 17-significant-digit string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:.16e}", self.0))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a real as a number or a decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                v.trim().parse().map(Real).map_err(|_| E::custom(format!("bad real '{v}'")))
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

fn reals(xs: &[f64]) -> Vec<Real> {
    xs.iter().copied().map(Real).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: i128,
    pub den: i128,
}

impl From<Rational> for RationalJson {
    fn from(r: Rational) -> Self {
        RationalJson { num: *r.numer(), den: *r.denom() }
    }
}

impl TryFrom<RationalJson> for Rational {
    type Error = anyhow::Error;
    fn try_from(r: RationalJson) -> Result<Rational> {
        if r.den == 0 {
            bail!("zero denominator");
        }
        Ok(Rational::new(r.num, r.den))
    }
}

pub fn permutation_from_images(images: Vec<usize>) -> Result<Permutation> {
    Ok(Permutation::from_images(images)?)
}

/// Parses `3,2,4,1` or `[3,2,4,1]` as images, or `(1 3 4)(2 5)` as cycles when a
/// degree is given.
pub fn parse_permutation(s: &str, degree: Option<usize>) -> Result<Permutation> {
    let t = s.trim();
    if t.starts_with('(') || t == "e" {
        let n = degree.ok_or_else(|| anyhow!("cycle notation needs an explicit degree"))?;
        let mut cycles = Vec::new();
        for part in t.split(')').map(str::trim).filter(|p| !p.is_empty() && *p != "e") {
            let body = part.strip_prefix('(').ok_or_else(|| anyhow!("bad cycle notation '{s}'"))?;
            let cycle = body
                .split([' ', ','])
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<usize>().with_context(|| format!("bad point '{x}'")))
                .collect::<Result<Vec<_>>>()?;
            cycles.push(cycle);
        }
        return Ok(Permutation::from_cycles(n, &cycles)?);
    }
    let images = parse_list::<usize>(t)?;
    let p = Permutation::from_images(images)?;
    match degree {
        Some(n) if n > p.degree() => Ok(p.extend(n)),
        Some(n) if n < p.degree() => bail!("permutation of degree {} does not fit degree {n}", p.degree()),
        _ => Ok(p),
    }
}

/// Parses `1,2,3` or `[1,2,3]`; the empty string is the empty list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    let t = s.trim().trim_start_matches('[').trim_end_matches(']');
    t.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|_| anyhow!("bad list entry '{x}'")))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationJson {
    pub images: Vec<usize>,
    pub cycles: Vec<Vec<usize>>,
}

impl From<&Permutation> for PermutationJson {
    fn from(p: &Permutation) -> Self {
        PermutationJson { images: p.images().to_vec(), cycles: p.cycles() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuestJson {
    pub table: TableId,
    pub pos: Real,
}

/// `{"z", "lengths", "tail_mass"}` with table ids and, for occupied restaurants, guests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestaurantJson {
    pub z: RationalJson,
    pub lengths: Vec<Real>,
    pub tail_mass: Real,
    /// Ids of the tables in the order of `lengths`; `0, 1, ..` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<TableId>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guests: Vec<GuestJson>,
}

impl From<&Restaurant> for RestaurantJson {
    fn from(r: &Restaurant) -> Self {
        RestaurantJson {
            z: r.z().into(),
            lengths: reals(&r.lengths()),
            tail_mass: Real(r.tail_mass()),
            ids: Some(r.tables().iter().map(|t| t.id).collect()),
            guests: Vec::new(),
        }
    }
}

impl From<&OccupiedRestaurant> for RestaurantJson {
    fn from(o: &OccupiedRestaurant) -> Self {
        let mut out = RestaurantJson::from(o.restaurant());
        out.guests = o.guests().iter().map(|g| GuestJson { table: g.table, pos: Real(g.pos) }).collect();
        out
    }
}

impl RestaurantJson {
    pub fn to_restaurant(&self) -> Result<Restaurant> {
        let ids: Vec<TableId> = match &self.ids {
            Some(ids) if ids.len() != self.lengths.len() => {
                bail!("{} ids for {} tables", ids.len(), self.lengths.len())
            }
            Some(ids) => ids.clone(),
            None => (0..self.lengths.len() as TableId).collect(),
        };
        let tables = ids.iter().zip(&self.lengths).map(|(&id, l)| Table { id, length: l.0 }).collect();
        Ok(Restaurant::from_tables(self.z.try_into()?, tables, self.tail_mass.0)?)
    }

    pub fn to_occupied(&self) -> Result<OccupiedRestaurant> {
        let guests = self.guests.iter().map(|g| Guest { table: g.table, pos: g.pos.0 }).collect();
        Ok(OccupiedRestaurant::new(self.to_restaurant()?, guests)?)
    }
}

fn half_string(len2: u32) -> String {
    if len2.is_multiple_of(2) {
        format!("{}", len2 / 2)
    } else {
        format!("{len2}/2")
    }
}

fn parse_half(s: &str) -> Result<u32> {
    let r = parse_rational(s)?;
    let twice = r * Rational::from_integer(2);
    if !twice.is_integer() || *twice.numer() < 0 {
        bail!("arc length '{s}' is not a nonnegative multiple of 1/2");
    }
    Ok(u32::try_from(*twice.numer())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcJson {
    pub kind: String,
    pub from: usize,
    pub to: usize,
    pub len: String,
}

/// `{"src": β, "dst": α, "arcs": [..], "circles": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChipJson {
    pub src: usize,
    pub dst: usize,
    pub arcs: Vec<ArcJson>,
    pub circles: Vec<u32>,
}

impl From<&Chip> for ChipJson {
    fn from(c: &Chip) -> Self {
        ChipJson {
            src: c.src(),
            dst: c.dst(),
            arcs: c
                .arcs()
                .iter()
                .map(|a| ArcJson { kind: a.kind.code().into(), from: a.from, to: a.to, len: half_string(a.len2) })
                .collect(),
            circles: c.circles().to_vec(),
        }
    }
}

impl ChipJson {
    pub fn to_chip(&self) -> Result<Chip> {
        let arcs = self
            .arcs
            .iter()
            .map(|a| {
                let kind = ArcKind::from_code(&a.kind).ok_or_else(|| anyhow!("unknown arc kind '{}'", a.kind))?;
                Ok(Arc { kind, from: a.from, to: a.to, len2: parse_half(&a.len)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Chip::new(self.src, self.dst, arcs, self.circles.clone())?)
    }
}

/// A chip with trivial left half: `σ`, the lengths `φ` and the circles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrivialLeftChipJson {
    pub sigma: Vec<usize>,
    pub phi: Vec<usize>,
    pub circles: Vec<usize>,
}

impl TrivialLeftChipJson {
    pub fn to_chip(&self) -> Result<TrivialLeftChip> {
        Ok(TrivialLeftChip::new(Permutation::from_images(self.sigma.clone())?, self.phi.clone(), self.circles.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletJson {
    pub k: Vec<u32>,
    pub ell: Real,
}

impl From<&DirichletSpec> for DirichletJson {
    fn from(d: &DirichletSpec) -> Self {
        DirichletJson { k: d.k().to_vec(), ell: Real(d.ell()) }
    }
}

impl DirichletJson {
    pub fn to_spec(&self) -> Result<DirichletSpec> {
        Ok(DirichletSpec::new(self.k.clone(), self.ell.0)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionJson {
    pub convolution: Vec<DirichletJson>,
}

impl From<&ConvolutionSpec> for ConvolutionJson {
    fn from(c: &ConvolutionSpec) -> Self {
        ConvolutionJson { convolution: c.components().iter().map(DirichletJson::from).collect() }
    }
}

/// Either `{"k", "ell"}` or `{"convolution": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawJson {
    Single(DirichletJson),
    Convolution(ConvolutionJson),
}

impl LawJson {
    pub fn to_convolution(&self) -> Result<ConvolutionSpec> {
        let parts = match self {
            LawJson::Single(d) => vec![d.to_spec()?],
            LawJson::Convolution(c) => c.convolution.iter().map(DirichletJson::to_spec).collect::<Result<_>>()?,
        };
        Ok(ConvolutionSpec::new(parts)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceJson {
    Arc(usize),
    Table(TableId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DestinationJson {
    Arc(usize),
    NewTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub weight: Real,
    pub coefficient: RationalJson,
    pub rn_exp: i64,
    pub removed: Vec<TableId>,
    pub replacement: ConvolutionJson,
    pub rho: Option<Vec<usize>>,
    pub sources: Vec<SourceJson>,
    pub destinations: Vec<DestinationJson>,
}

/// `{"components": [..], "truncation_error", ..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureJson {
    pub components: Vec<ComponentJson>,
    pub truncation_error: Real,
    pub total_mass: Real,
    pub within_bounds: bool,
    pub fingerprint: String,
}

impl From<&MixtureMeasure> for MixtureJson {
    fn from(m: &MixtureMeasure) -> Self {
        let mass = m.total_mass();
        let components = m
            .components
            .iter()
            .map(|c| ComponentJson {
                weight: Real(c.weight),
                coefficient: c.coefficient.into(),
                rn_exp: c.rn_exponent,
                removed: c.removed(),
                replacement: (&c.replacement()).into(),
                rho: c.key.rho.as_ref().map(|p| p.images().to_vec()),
                sources: c
                    .key
                    .sources
                    .iter()
                    .map(|s| match s {
                        Source::Arc(i) => SourceJson::Arc(*i),
                        Source::Table(id) => SourceJson::Table(*id),
                    })
                    .collect(),
                destinations: c
                    .key
                    .destinations
                    .iter()
                    .map(|d| match d {
                        Destination::Arc(j) => DestinationJson::Arc(*j),
                        Destination::NewTable => DestinationJson::NewTable,
                    })
                    .collect(),
            })
            .collect();
        MixtureJson {
            components,
            truncation_error: Real(m.truncation_error),
            total_mass: Real(mass.total),
            within_bounds: mass.within_bounds,
            fingerprint: format!("{:016x}", m.fingerprint),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentMass {
    pub exponent: i64,
    pub mass: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalJson {
    pub s: Real,
    pub mean: Real,
    pub std_error: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryJson {
    pub samples: u64,
    pub fingerprint: String,
    pub exponents: Vec<ExponentMass>,
    pub functional: Vec<FunctionalJson>,
}

impl From<&EmpiricalSummary> for SummaryJson {
    fn from(e: &EmpiricalSummary) -> Self {
        SummaryJson {
            samples: e.samples,
            fingerprint: format!("{:016x}", e.fingerprint),
            exponents: e
                .exponent_pmf()
                .into_iter()
                .map(|(exponent, p)| ExponentMass { exponent, mass: Real(p) })
                .collect(),
            functional: e
                .grid
                .iter()
                .zip(&e.functional)
                .map(|(&s, m)| FunctionalJson { s: Real(s), mean: Real(m.mean), std_error: Real(m.std_error()) })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacePointJson {
    pub s: Real,
    pub engine: Real,
    pub empirical: Real,
    pub std_error: Real,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareJson {
    pub samples: u64,
    pub tv: Real,
    pub tv_threshold: Real,
    pub tv_passed: bool,
    pub laplace: Vec<LaplacePointJson>,
    pub ks: Option<Real>,
    pub ks_critical: Option<Real>,
    pub ks_passed: bool,
    pub total_mass: Real,
    pub truncation_error: Real,
    pub mass_passed: bool,
    pub worst_exponent: Option<i64>,
    pub suspects: Vec<usize>,
    pub passed: bool,
}

impl From<&CompareReport> for CompareJson {
    fn from(r: &CompareReport) -> Self {
        CompareJson {
            samples: r.samples,
            tv: Real(r.tv),
            tv_threshold: Real(r.tv_threshold),
            tv_passed: r.tv_passed,
            laplace: r
                .laplace
                .iter()
                .map(|p| LaplacePointJson {
                    s: Real(p.s),
                    engine: Real(p.engine),
                    empirical: Real(p.empirical),
                    std_error: Real(p.std_error),
                    passed: p.passed,
                })
                .collect(),
            ks: r.ks.map(Real),
            ks_critical: r.ks_critical.map(Real),
            ks_passed: r.ks_passed,
            total_mass: Real(r.mass.total),
            truncation_error: Real(r.mass.truncation_error),
            mass_passed: r.mass.within_bounds,
            worst_exponent: r.worst_exponent,
            suspects: r.suspects.clone(),
            passed: r.passed,
        }
    }
}

/// A labeled checker surface as its three gluing permutations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceJson {
    pub ga: Vec<usize>,
    pub gb: Vec<usize>,
    pub gc: Vec<usize>,
}

impl From<&CheckerSurface> for SurfaceJson {
    fn from(s: &CheckerSurface) -> Self {
        let (a, b, c) = s.triple();
        SurfaceJson { ga: a.images().to_vec(), gb: b.images().to_vec(), gc: c.images().to_vec() }
    }
}

impl SurfaceJson {
    pub fn to_surface(&self) -> Result<CheckerSurface> {
        Ok(CheckerSurface::from_triple(
            Permutation::from_images(self.ga.clone())?,
            Permutation::from_images(self.gb.clone())?,
            Permutation::from_images(self.gc.clone())?,
        )?)
    }
}

/// One line of `enum-gamma` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaClassJson {
    pub g: Vec<usize>,
    pub u: Vec<usize>,
    pub surface: SurfaceJson,
    pub orbit_size: u64,
    pub full_aut: u64,
    pub b_fixing_aut: u64,
    pub incidence: Vec<Vec<u32>>,
    pub b_orders: Vec<usize>,
    pub c_orders: Vec<usize>,
    pub rn_exp: i64,
    pub euler: i64,
    pub genera: Vec<i64>,
}

impl From<&GammaClass> for GammaClassJson {
    fn from(c: &GammaClass) -> Self {
        let s: &EngineSurface = &c.surface;
        let stats = s.stats();
        GammaClassJson {
            g: s.g.images().to_vec(),
            u: s.u.images().to_vec(),
            surface: (&s.to_checker()).into(),
            orbit_size: c.orbit_size,
            full_aut: c.automorphisms.full_order,
            b_fixing_aut: c.automorphisms.b_fixing_order,
            incidence: c.incidence.clone(),
            b_orders: c.b_orders.clone(),
            c_orders: c.c_orders.clone(),
            rn_exp: s.rn_exponent(),
            euler: stats.euler,
            genera: stats.genera,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 0.9999999999999999, 5e-324] {
            let s = serde_json::to_string(&Real(x)).unwrap();
            let back: Real = serde_json::from_str(&s).unwrap();
            assert_eq!(back.0, x);
        }
        let n: Real = serde_json::from_str("0.25").unwrap();
        assert_eq!(n.0, 0.25);
    }

    #[test]
    fn restaurant_round_trip() {
        let r = Restaurant::from_lengths(Rational::new(1, 2), &[0.5, 0.3, 0.2], 0.0).unwrap();
        let occ = r.clone().into();
        let occ: OccupiedRestaurant = OccupiedRestaurant::place_guests(&occ, 3, 4);
        let json = serde_json::to_string(&RestaurantJson::from(&occ)).unwrap();
        let back: RestaurantJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_occupied().unwrap(), occ);
        let bare: RestaurantJson =
            serde_json::from_str(r#"{"z":{"num":1,"den":2},"lengths":[0.5,0.3,0.2],"tail_mass":0}"#).unwrap();
        assert_eq!(bare.to_restaurant().unwrap(), r);
    }

    #[test]
    fn chip_round_trip() {
        let g = Permutation::from_images(vec![2, 3, 1]).unwrap();
        let c = crpchips_core::chip::chip_from_pair(&Permutation::identity(3), &g, 1, 2);
        let json = ChipJson::from(&c);
        assert!(json.arcs.iter().all(|a| a.len == "0" || a.len.contains('/') || a.len.parse::<u32>().is_ok()));
        assert_eq!(json.to_chip().unwrap(), c);
    }

    #[test]
    fn permutation_parsing() {
        assert_eq!(parse_permutation("3,2,4,1,5", None).unwrap().images(), &[3, 2, 4, 1, 5]);
        assert_eq!(parse_permutation("[2,1]", Some(3)).unwrap().images(), &[2, 1, 3]);
        assert_eq!(parse_permutation("(1 3 4)", Some(5)).unwrap().images(), &[3, 2, 4, 1, 5]);
        assert!(parse_permutation("(1 3", None).is_err());
        assert!(parse_permutation("1,1", None).is_err());
    }

    #[test]
    fn half_lengths() {
        assert_eq!(parse_half("3/2").unwrap(), 3);
        assert_eq!(parse_half("2").unwrap(), 4);
        assert!(parse_half("1/3").is_err());
        assert_eq!(half_string(3), "3/2");
        assert_eq!(half_string(4), "2");
    }
}
