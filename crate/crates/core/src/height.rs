//! Global heights and the theorem checks built on them.
//!
//! Over ℚ the height is the archimedean term plus one term per prime. Only
//! primes returned by [`bad_primes`] are computed; at every other prime the
//! given model reduces to the same matroid and the local term is 0.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::One;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::arch::{arch_local_height, hadamard_gap, kn_minimize, kn_value};
use crate::chow::shard_rng;
use crate::config::Configuration;
use crate::decompose::{decompose, stable_witness_split};
use crate::error::{Error, Result};
use crate::linalg::{rank, serde_rational, to_f64, Rational, RationalMatrix, RationalVector};
use crate::nonarch::{bad_primes, nonarch_local_height, Certificate, LocalHeightInterval, Place};
use crate::section::{InvariantSection, SectionChoice};
use crate::stability::{check_stability, StabilityStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeightOptions {
    /// Residual target of the archimedean minimizer.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest p-power exponent in the finite-place search.
    pub search_depth: u32,
    pub section: SectionChoice,
    /// Sample count for Monte Carlo integrals.
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for HeightOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000, search_depth: 3, section: SectionChoice::Decomposition, mc_samples: 1_000_000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lower: 0.0, upper: 0.0 };

    /// Componentwise sum, accumulated left to right.
    pub fn sum(parts: impl IntoIterator<Item = Interval>) -> Interval {
        parts.into_iter().fold(Interval::ZERO, |a, b| Interval { lower: a.lower + b.lower, upper: a.upper + b.upper })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Lower bound for a stable cycle from the witness split C = R + ε Σ_{i∈W} [v_i].
///
/// At a minimizer g of C the archimedean term equals (d_R/d) h_R(g) + (ε/d) gap(g)
/// with h_R(g) ≥ 0 and every finite term nonnegative, so ĥ(C) ≥ (ε/d) gap(g).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessMargin {
    pub witness: Vec<usize>,
    pub overlap: f64,
    #[serde(with = "serde_rational")]
    pub removed: Rational,
    /// Hadamard gap of the witness at the computed minimizer.
    pub gap: f64,
    /// (ε/d) gap
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightEstimate {
    pub total: Interval,
    /// Archimedean place first, then the bad primes in increasing order.
    pub per_place: Vec<LocalHeightInterval>,
    pub config_digest: String,
    pub options: HeightOptions,
    /// Present for stable cycles.
    pub stable_margin: Option<WitnessMargin>,
}

impl HeightEstimate {
    pub fn local(&self, place: Place) -> Option<&LocalHeightInterval> {
        self.per_place.iter().find(|l| l.place == place)
    }

    /// Recomputes `total` from `per_place`.
    pub fn resum(&mut self) {
        self.total = Interval::sum(self.per_place.iter().map(|l| Interval { lower: l.lower, upper: l.upper }));
    }
}

pub fn witness_margin(config: &Configuration, options: &HeightOptions) -> Result<WitnessMargin> {
    let kn = kn_minimize(config, options.tol, options.max_iter)?;
    let split = stable_witness_split(config, &kn.scaling)?;
    let gap = hadamard_gap(config, &split.witness, &kn.scaling)?;
    let margin = to_f64(&split.removed) / to_f64(config.degree()) * gap;
    Ok(WitnessMargin { witness: split.witness, overlap: split.overlap, removed: split.removed, gap, margin })
}

pub fn global_height(config: &Configuration, options: &HeightOptions) -> Result<HeightEstimate> {
    let verdict = check_stability(config)?;
    if verdict.status == StabilityStatus::Unstable {
        return Err(Error::Unstable { witness: verdict.witness.expect("unstable verdict has a witness") });
    }
    let section = InvariantSection::new(config, options.section)?;
    let arch = arch_local_height(config, &section, options.tol, options.max_iter)?;
    let mut per_place = vec![arch.interval];
    for p in bad_primes(config)? {
        per_place.push(nonarch_local_height(config, &section, p, options.search_depth)?);
    }
    let stable_margin = match verdict.status {
        StabilityStatus::Stable => Some(witness_margin(config, options)?),
        _ => None,
    };
    let mut est = HeightEstimate { total: Interval::ZERO, per_place, config_digest: config.digest(), options: options.clone(), stable_margin };
    est.resum();
    Ok(est)
}

/// Heights here are divided by the degree, so the inequality is checked as
/// d upper(C1+C2) ≥ d1 lower(C1) + d2 lower(C2) - tol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub combined: Interval,
    pub first: Interval,
    pub second: Interval,
    /// d upper(C1+C2) - d1 lower(C1) - d2 lower(C2)
    pub weighted_gap: f64,
    /// |d ψ(C1+C2) - d1 ψ(C1) - d2 ψ(C2)| for ψ = kn_value at the combined minimizer.
    pub pointwise_defect: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Interval tolerance for the subadditivity inequality.
pub const SUBADDITIVITY_TOL: f64 = 1e-6;

pub fn subadditivity_check(c1: &Configuration, c2: &Configuration, options: &HeightOptions) -> Result<SubadditivityReport> {
    let sum = c1.sum(c2)?;
    let h1 = global_height(c1, options)?;
    let h2 = global_height(c2, options)?;
    let h = global_height(&sum, options)?;
    let kn = kn_minimize(&sum, options.tol, options.max_iter)?;
    let weighted = |c: &Configuration| -> Result<f64> { Ok(to_f64(c.degree()) * kn_value(c, &kn.scaling)?) };
    let pointwise_defect = (weighted(&sum)? - weighted(c1)? - weighted(c2)?).abs();
    let tol = SUBADDITIVITY_TOL;
    let weighted_gap = to_f64(sum.degree()) * h.total.upper - to_f64(c1.degree()) * h1.total.lower - to_f64(c2.degree()) * h2.total.lower;
    let pass = weighted_gap >= -tol && pointwise_defect <= 1e-9 * (1.0 + to_f64(sum.degree()));
    Ok(SubadditivityReport { combined: h.total, first: h1.total, second: h2.total, weighted_gap, pointwise_defect, tol, pass })
}

/// Status by direct enumeration of every subset span; independent of the
/// flat enumeration used by [`check_stability`].
pub fn subset_span_status(config: &Configuration) -> StabilityStatus {
    let vecs: Vec<&RationalVector> = config.vectors().collect();
    let mults: Vec<&Rational> = config.multiplicities().collect();
    let dim = config.dim();
    let d = config.degree();
    let n1 = Rational::from_integer(BigInt::from(dim));
    let mut strict = false;
    for mask in 1u32..(1u32 << vecs.len()) {
        let chosen: Vec<RationalVector> = (0..vecs.len()).filter(|i| mask >> i & 1 == 1).map(|i| vecs[i].clone()).collect();
        let k = rank(&RationalMatrix::from_rows(&chosen).expect("equal lengths"));
        if k == dim {
            continue;
        }
        let mass: Rational = (0..vecs.len())
            .filter(|&i| {
                let mut with = chosen.clone();
                with.push(vecs[i].clone());
                rank(&RationalMatrix::from_rows(&with).expect("equal lengths")) == k
            })
            .map(|i| mults[i].clone())
            .sum();
        let lhs = mass * &n1;
        let rhs = d * Rational::from_integer(BigInt::from(k));
        if lhs > rhs {
            return StabilityStatus::Unstable;
        }
        strict |= lhs == rhs;
    }
    if strict {
        StabilityStatus::StrictlySemistable
    } else {
        StabilityStatus::Stable
    }
}

/// A seeded family of configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub name: String,
    pub seed: u64,
    pub ambients: Vec<usize>,
    /// Number of distinct points ranges over 1..=max_points.
    pub max_points: usize,
    pub multiplicities: Vec<Rational>,
    pub max_degree: Option<Rational>,
    /// Entries are drawn from -entry_bound..=entry_bound.
    pub entry_bound: i64,
    pub per_cell: usize,
    /// Adds coordinate frames, general bases and a few fixed cycles.
    pub structured: bool,
    /// Number of semistable pairs tested for subadditivity.
    pub pairs: usize,
}

impl FamilySpec {
    /// N ≤ 2, d ≤ 5, integer multiplicities, entries in -2..=2.
    pub fn default_family() -> Self {
        Self {
            name: "default".into(),
            seed: 0,
            ambients: vec![1, 2],
            max_points: 5,
            multiplicities: vec![Rational::one(), Rational::from_integer(BigInt::from(2))],
            max_degree: Some(Rational::from_integer(BigInt::from(5))),
            entry_bound: 2,
            per_cell: 20,
            structured: true,
            pairs: 20,
        }
    }

    /// N ≤ 3, up to 6 points, multiplicities in {1/2, 1, 3/2, 2}.
    pub fn extended() -> Self {
        let half = |k: i64| Rational::new(BigInt::from(k), BigInt::from(2));
        Self {
            name: "extended".into(),
            seed: 1,
            ambients: vec![1, 2, 3],
            max_points: 6,
            multiplicities: vec![half(1), half(2), half(3), half(4)],
            max_degree: None,
            entry_bound: 2,
            per_cell: 40,
            structured: true,
            pairs: 40,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default_family()),
            "extended" => Some(Self::extended()),
            _ => None,
        }
    }

    pub fn members(&self) -> Vec<Configuration> {
        let mut out = Vec::new();
        if self.structured {
            for &n in &self.ambients {
                out.extend(structured_members(n));
            }
        }
        let mut rng = shard_rng(self.seed, 0x5eed);
        for &n in &self.ambients {
            for l in 1..=self.max_points {
                for _ in 0..self.per_cell {
                    if let Some(c) = self.random_member(n, l, &mut rng) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    fn random_member(&self, n: usize, l: usize, rng: &mut impl RngCore) -> Option<Configuration> {
        let span = (2 * self.entry_bound + 1) as u32;
        for _ in 0..50 {
            let mut keys: Vec<RationalVector> = Vec::new();
            let mut pts = Vec::new();
            let mut tries = 0;
            while pts.len() < l && tries < 200 {
                tries += 1;
                let v = RationalVector::from_i64s(&(0..=n).map(|_| (rng.next_u32() % span) as i64 - self.entry_bound).collect::<Vec<_>>());
                let Some(key) = v.projective_key() else { continue };
                if keys.contains(&key) {
                    continue;
                }
                keys.push(key);
                let m = self.multiplicities[(rng.next_u32() as usize) % self.multiplicities.len()].clone();
                pts.push((v, m));
            }
            if pts.len() < l {
                return None;
            }
            let d: Rational = pts.iter().map(|(_, m)| m.clone()).sum();
            if self.max_degree.as_ref().is_some_and(|max| &d > max) {
                continue;
            }
            return Configuration::new(n, pts).ok();
        }
        None
    }
}

fn structured_members(n: usize) -> Vec<Configuration> {
    let mut out = vec![Configuration::coordinate_points(n)];
    // e_0, ..., e_N and e_0 + ... + e_N
    let mut frame: Vec<Vec<i64>> = (0..=n).map(|i| (0..=n).map(|j| i64::from(i == j)).collect()).collect();
    // upper triangular basis with ones
    let tri: Vec<Vec<i64>> = (0..=n).map(|i| (0..=n).map(|j| i64::from(j >= i)).collect()).collect();
    out.push(Configuration::from_i64_points(n, &tri.iter().map(Vec::as_slice).collect::<Vec<_>>()).expect("valid"));
    frame.push(vec![1; n + 1]);
    out.push(Configuration::from_i64_points(n, &frame.iter().map(Vec::as_slice).collect::<Vec<_>>()).expect("valid"));
    // a doubled point is unstable
    let doubled = Configuration::new(n, [(RationalVector::unit(n + 1, 0), Rational::from_integer(BigInt::from(2)))]).expect("valid");
    out.push(doubled);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub config: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub name: String,
    pub checked: usize,
    pub failures: Vec<Counterexample>,
    pub pass: bool,
}

impl TheoremReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), checked: 0, failures: Vec::new(), pass: true }
    }

    fn record(&mut self, config: &Configuration, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.pass = false;
            self.failures.push(Counterexample { config: config.canonical_string(), detail: detail() });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableMarginEntry {
    pub config_digest: String,
    pub margin: f64,
    pub lower: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub family: String,
    pub seed: u64,
    pub members: usize,
    /// Unstable members, skipped by the height checks.
    pub unstable: usize,
    pub theorems: Vec<TheoremReport>,
    pub stable_margins: Vec<StableMarginEntry>,
    pub pass: bool,
}

/// Absolute tolerance for the nonnegativity and base case checks.
pub const HEIGHT_TOL: f64 = 1e-6;

fn is_single_basis(config: &Configuration) -> bool {
    config.len() == config.dim() && {
        let first = &config.points()[0].multiplicity;
        config.multiplicities().all(|m| m == first)
    }
}

pub fn positivity_suite(family: &FamilySpec, options: &HeightOptions) -> Result<SuiteReport> {
    let members = family.members();
    let mut oracle = TheoremReport::new("stability-oracle");
    let mut decomposition = TheoremReport::new("decomposition");
    let mut nonnegative = TheoremReport::new("semistable-nonnegativity");
    let mut base = TheoremReport::new("base-case");
    let mut stable = TheoremReport::new("stable-positivity");
    let mut dual = TheoremReport::new("duality-shift");
    let mut subadditive = TheoremReport::new("subadditivity");
    let mut stable_margins = Vec::new();
    let mut unstable = 0;
    let mut semistable: Vec<&Configuration> = Vec::new();

    for c in &members {
        let verdict = check_stability(c)?;
        let brute = subset_span_status(c);
        oracle.record(c, verdict.status == brute && verdict.is_consistent_with(c), || {
            format!("check_stability {:?}, subset spans {:?}", verdict.status, brute)
        });

        if verdict.status == StabilityStatus::Unstable {
            unstable += 1;
            let ok = matches!(decompose(c), Err(Error::Unstable { witness }) if {
                let lhs = &witness.mass * Rational::from_integer(BigInt::from(c.dim()));
                lhs > c.degree() * Rational::from_integer(BigInt::from(witness.dim))
            });
            decomposition.record(c, ok, || "unstable input without a violating witness".into());
            continue;
        }
        semistable.push(c);
        let dec = decompose(c).and_then(|d| d.validate(c).map(|_| d));
        decomposition.record(c, dec.is_ok(), || format!("{:?}", dec.as_ref().err()));

        let est = match global_height(c, options) {
            Ok(e) => e,
            Err(e) => {
                nonnegative.record(c, false, || format!("height failed: {e}"));
                continue;
            }
        };
        nonnegative.record(c, est.total.lower >= -HEIGHT_TOL, || format!("lower bound {}", est.total.lower));
        if is_single_basis(c) {
            let ok = est.total.lower >= -HEIGHT_TOL && est.total.upper <= HEIGHT_TOL;
            base.record(c, ok, || format!("total [{}, {}]", est.total.lower, est.total.upper));
        }
        if verdict.status == StabilityStatus::Stable {
            match &est.stable_margin {
                Some(m) => {
                    let split_ok = stable_witness_split_ok(c, options);
                    stable.record(c, split_ok && m.overlap > crate::decompose::ORTHOGONALITY_TOLERANCE && m.margin > 0.0, || {
                        format!("overlap {}, gap {}, margin {}, split ok {}", m.overlap, m.gap, m.margin, split_ok)
                    });
                    stable_margins.push(StableMarginEntry { config_digest: est.config_digest.clone(), margin: m.margin, lower: est.total.lower });
                }
                None => stable.record(c, false, || "no witness margin".into()),
            }
        }
        let shifted = crate::duality::shift_to_hyperplanes(&est, c.ambient());
        if c.ambient() > 1 {
            dual.record(c, shifted.total.lower > 0.0, || format!("hyperplane lower bound {}", shifted.total.lower));
        } else {
            dual.record(c, shifted.total == est.total, || "shift at N = 1 is not zero".into());
        }
    }

    let mut pairs = 0;
    'outer: for (i, a) in semistable.iter().enumerate() {
        for b in semistable.iter().skip(i + 1) {
            if pairs >= family.pairs {
                break 'outer;
            }
            if a.ambient() != b.ambient() || a.sum(b).map_or(true, |s| s.len() > 8) {
                continue;
            }
            pairs += 1;
            let r = subadditivity_check(a, b, options);
            let ok = r.as_ref().is_ok_and(|r| r.pass);
            subadditive.record(a, ok, || format!("paired with {}: {:?}", b.canonical_string(), r));
            break;
        }
    }

    let theorems = vec![oracle, decomposition, nonnegative, base, stable, dual, subadditive];
    let pass = theorems.iter().all(|t| t.pass);
    Ok(SuiteReport { family: family.name.clone(), seed: family.seed, members: members.len(), unstable, theorems, stable_margins, pass })
}

fn stable_witness_split_ok(c: &Configuration, options: &HeightOptions) -> bool {
    let Ok(kn) = kn_minimize(c, options.tol, options.max_iter) else { return false };
    let Ok(split) = stable_witness_split(c, &kn.scaling) else { return false };
    let dim = c.dim();
    let cols: Vec<RationalVector> = split.witness.iter().map(|&i| c.points()[i].vector.clone()).collect();
    let independent = RationalMatrix::from_columns(&cols).map_or(false, |m| rank(&m) == dim);
    let remainder_ok = check_stability(&split.remainder).map_or(false, |v| v.status.is_semistable());
    independent && remainder_ok && split.overlap > crate::decompose::ORTHOGONALITY_TOLERANCE
}

/// True when every finite place carries an exact certificate.
pub fn finite_places_exact(est: &HeightEstimate) -> bool {
    est.per_place.iter().all(|l| {
        l.place == Place::Archimedean || matches!(l.certificate, Certificate::ExactResidual | Certificate::ExactDeterminant | Certificate::Trivial)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::int;

    fn opts() -> HeightOptions {
        HeightOptions::default()
    }

    #[test]
    fn identity_has_height_zero() {
        for n in 1..=3 {
            let e = global_height(&Configuration::coordinate_points(n), &opts()).unwrap();
            assert!(e.total.lower.abs() <= 1e-12 && e.total.upper.abs() <= 1e-12, "{:?}", e.total);
            assert_eq!(e.per_place.len(), 1);
        }
    }

    #[test]
    fn general_basis_has_height_zero() {
        let c = Configuration::from_i64_points(2, &[&[1, 2, 0], &[3, 1, 1], &[0, 5, 7]]).unwrap();
        let e = global_height(&c, &opts()).unwrap();
        assert!(e.total.lower >= -1e-6 && e.total.upper <= 1e-6, "{:?}", e);
        assert!(e.per_place.iter().all(|l| l.lower == 0.0 && l.upper == 0.0 || l.place == Place::Archimedean));
        assert!(finite_places_exact(&e));
    }

    #[test]
    fn unstable_input_carries_witness() {
        let c = Configuration::new(1, [(RationalVector::from_i64s(&[1, 0]), int(2))]).unwrap();
        assert!(matches!(global_height(&c, &opts()), Err(Error::Unstable { .. })));
    }

    #[test]
    fn total_is_sum_of_places() {
        let c = Configuration::from_i64_points(1, &[&[1, 0], &[0, 1], &[1, 1], &[1, 3]]).unwrap();
        let e = global_height(&c, &opts()).unwrap();
        let s = Interval::sum(e.per_place.iter().map(|l| Interval { lower: l.lower, upper: l.upper }));
        assert_eq!(s, e.total);
        assert!(e.total.lower <= e.total.upper);
    }

    #[test]
    fn stable_triple_has_positive_margin() {
        let c = Configuration::from_i64_points(1, &[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let e = global_height(&c, &opts()).unwrap();
        let m = e.stable_margin.unwrap();
        assert!(m.margin > 0.0 && m.gap > 0.0);
        assert!(e.total.lower >= m.margin - 1e-6);
    }

    #[test]
    fn height_is_deterministic() {
        let c = Configuration::from_i64_points(2, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 1]]).unwrap();
        assert_eq!(global_height(&c, &opts()).unwrap(), global_height(&c, &opts()).unwrap());
    }

    #[test]
    fn identity_is_additive() {
        let c = Configuration::coordinate_points(2);
        let r = subadditivity_check(&c, &c, &opts()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.combined.upper.abs() < 1e-9);
    }

    #[test]
    fn oracle_statuses() {
        assert_eq!(subset_span_status(&Configuration::coordinate_points(2)), StabilityStatus::StrictlySemistable);
        let t = Configuration::from_i64_points(1, &[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        assert_eq!(subset_span_status(&t), StabilityStatus::Stable);
        let u = Configuration::from_i64_points(2, &[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0]]).unwrap();
        assert_eq!(subset_span_status(&u), StabilityStatus::Unstable);
    }

    #[test]
    fn family_is_seeded() {
        let f = FamilySpec::default_family();
        assert_eq!(f.members(), f.members());
        assert!(f.members().iter().all(|c| c.degree() <= f.max_degree.as_ref().unwrap()));
    }
}
