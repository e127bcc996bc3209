//! Chow forms of zero-cycles and the Chow metric.
//!
//! A point v ∈ P^N lies on the hyperplane {Σ u_j x_j = 0} iff ⟨v, u⟩ = 0, so
//! the Chow form of Σ m_i [v_i] in the dual coordinates u is
//! Π_i ⟨v_i, u⟩^{m_i}. Hyperplane arrangements (from [`crate::duality`])
//! have N blocks of N+1 variables.
//!
//! The Chow metric of a section value s at a cycle of dimension n and
//! degree d is
//!
//! log‖s‖ = log|s| - ½ d (n+1) H_N - ∫ log|F(x)| dx,
//!
//! where the integral runs over (n+1) copies of the unit sphere in C^{N+1},
//! each carrying its probability measure, and H_N = Σ_{j ≤ N} 1/j. With
//! that normalization ∫ log|x_0|² = -H_N on S(C^{N+1}), so for zero-cycles
//! the metric is the product of Fubini-Study metrics.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
// shadowed by inherent float methods when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::linalg::{cnorm, serde_rational, to_f64, Rational};

/// Samples per independently seeded stream.
pub const SHARD_SIZE: u64 = 65_536;

/// |F| below this is treated as hitting the zero set and redrawn.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;

/// Multihomogeneous form of degree `degree` in each of `blocks` groups of
/// `vars` variables. Exponent vectors concatenate the blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChowForm {
    pub blocks: usize,
    pub vars: usize,
    pub degree: usize,
    #[serde(with = "coeff_table")]
    pub coeffs: BTreeMap<Vec<u16>, Rational>,
}

mod coeff_table {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        exponents: Vec<u16>,
        #[serde(with = "serde_rational")]
        coefficient: Rational,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<Vec<u16>, Rational>, s: S) -> core::result::Result<S::Ok, S::Error> {
        let v: Vec<Entry> = m.iter().map(|(k, c)| Entry { exponents: k.clone(), coefficient: c.clone() }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<BTreeMap<Vec<u16>, Rational>, D::Error> {
        let v: Vec<Entry> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|e| (e.exponents, e.coefficient)).collect())
    }
}

impl ChowForm {
    /// The constant 1 of degree 0.
    pub fn one(blocks: usize, vars: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![0; blocks * vars], Rational::one());
        Self { blocks, vars, degree: 0, coeffs }
    }

    /// A single block linear form Σ c_j u_j.
    pub fn linear(c: &[Rational]) -> Self {
        let vars = c.len();
        let mut coeffs = BTreeMap::new();
        for (j, x) in c.iter().enumerate() {
            if !x.is_zero() {
                let mut e = vec![0u16; vars];
                e[j] = 1;
                coeffs.insert(e, x.clone());
            }
        }
        Self { blocks: 1, vars, degree: 1, coeffs }
    }

    /// c · Π u_{b,j}^{e_{b,j}} with `exponents` concatenating the blocks.
    pub fn monomial(blocks: usize, vars: usize, exponents: Vec<u16>, c: Rational) -> Result<Self> {
        if exponents.len() != blocks * vars {
            return Err(Error::DimensionMismatch { expected: blocks * vars, found: exponents.len() });
        }
        let degs: Vec<usize> = exponents.chunks(vars).map(|b| b.iter().map(|&x| x as usize).sum()).collect();
        if degs.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Internal("monomial is not multihomogeneous"));
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(exponents, c);
        Ok(Self { blocks, vars, degree: degs.first().copied().unwrap_or(0), coeffs })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(Zero::is_zero)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.blocks != other.blocks || self.vars != other.vars {
            return Err(Error::DimensionMismatch { expected: self.blocks * self.vars, found: other.blocks * other.vars });
        }
        let mut coeffs: BTreeMap<Vec<u16>, Rational> = BTreeMap::new();
        for (a, x) in &self.coeffs {
            for (b, y) in &other.coeffs {
                let e: Vec<u16> = a.iter().zip(b).map(|(p, q)| p + q).collect();
                *coeffs.entry(e).or_insert_with(Rational::zero) += x * y;
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        Ok(Self { blocks: self.blocks, vars: self.vars, degree: self.degree + other.degree, coeffs })
    }

    pub fn pow(&self, k: usize) -> Result<Self> {
        let mut out = Self::one(self.blocks, self.vars);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.clone();
        out.coeffs.values_mut().for_each(|x| *x *= c);
        out.coeffs.retain(|_, x| !x.is_zero());
        out
    }

    /// Value at one point per block.
    pub fn evaluate(&self, points: &[Vec<Complex64>]) -> Complex64 {
        let d = self.degree;
        let powers: Vec<Vec<Vec<Complex64>>> = points
            .iter()
            .map(|pt| {
                pt.iter()
                    .map(|&z| {
                        let mut p = Vec::with_capacity(d + 1);
                        p.push(Complex64::one());
                        for k in 0..d {
                            p.push(p[k] * z);
                        }
                        p
                    })
                    .collect()
            })
            .collect();
        self.coeffs
            .iter()
            .map(|(e, c)| {
                let mut term = Complex64::new(to_f64(c), 0.0);
                for (idx, &k) in e.iter().enumerate() {
                    if k > 0 {
                        term *= powers[idx / self.vars][idx % self.vars][k as usize];
                    }
                }
                term
            })
            .sum()
    }

    /// Exact value at rational points, one per block.
    pub fn evaluate_rational(&self, points: &[Vec<Rational>]) -> Rational {
        self.coeffs
            .iter()
            .map(|(e, c)| {
                let mut term = c.clone();
                for (idx, &k) in e.iter().enumerate() {
                    if k > 0 {
                        term *= num_traits::pow(points[idx / self.vars][idx % self.vars].clone(), k as usize);
                    }
                }
                term
            })
            .sum()
    }

    /// Largest absolute value among the coefficients.
    pub fn max_coefficient(&self) -> Rational {
        self.coeffs.values().map(|c| if c < &Rational::zero() { -c } else { c.clone() }).max().unwrap_or_default()
    }
}

/// Π_i ⟨v_i, u⟩^{m_i}; multiplicities must be integers.
pub fn chow_form_of_points(config: &Configuration) -> Result<ChowForm> {
    let mut out = ChowForm::one(1, config.dim());
    for p in config.points() {
        if !p.multiplicity.is_integer() {
            return Err(Error::NonIntegerMultiplicity(alloc::format!("{}", p.multiplicity)));
        }
        let k = p.multiplicity.to_integer().to_usize().ok_or(Error::Internal("multiplicity too large"))?;
        out = out.mul(&ChowForm::linear(p.vector.entries()).pow(k)?)?;
    }
    Ok(out)
}

/// Deterministic generator for one shard of a seeded run.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Uniform point of the unit sphere in C^dim (normalized complex Gaussian).
pub fn sphere_sample<R: rand_core::RngCore>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let z: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let n = cnorm(&z);
        if n > 0.0 {
            return z.into_iter().map(|x| x / n).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Draws rejected as numerically singular and redrawn.
    pub resampled: u64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, o: Self) -> Self {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Self { n, mean: self.mean + delta * o.n / n, m2: self.m2 + o.m2 + delta * delta * self.n * o.n / n }
    }
}

/// Mean and standard error of `f` over `samples` draws. `f` returns `None`
/// to reject a draw, which is then redrawn and counted. Shards of
/// [`SHARD_SIZE`] draws use independent streams, so the estimate does not
/// depend on how shards are scheduled.
pub fn monte_carlo(samples: u64, seed: u64, mut f: impl FnMut(&mut ChaCha8Rng) -> Option<f64>) -> MCEstimate {
    let mut total = Moments::default();
    let mut resampled = 0u64;
    let shards = samples.div_ceil(SHARD_SIZE);
    for shard in 0..shards {
        let mut rng = shard_rng(seed, shard);
        let count = SHARD_SIZE.min(samples - shard * SHARD_SIZE);
        let mut m = Moments::default();
        for _ in 0..count {
            loop {
                match f(&mut rng) {
                    Some(x) => {
                        m.push(x);
                        break;
                    }
                    None => resampled += 1,
                }
            }
        }
        total = total.merge(m);
    }
    let stderr = if total.n > 1.0 { (total.m2 / (total.n - 1.0) / total.n).sqrt() } else { 0.0 };
    MCEstimate { mean: total.mean, stderr, samples, seed, resampled }
}

/// Monte Carlo estimate of ∫ log|F| over the product of unit spheres.
pub fn chow_integral_mc(form: &ChowForm, samples: u64, seed: u64) -> Result<MCEstimate> {
    if form.is_zero() {
        return Err(Error::ZeroSectionValue);
    }
    if samples == 0 {
        return Err(Error::Internal("at least one sample is required"));
    }
    Ok(monte_carlo(samples, seed, |rng| {
        let pts: Vec<Vec<Complex64>> = (0..form.blocks).map(|_| sphere_sample(form.vars, rng)).collect();
        let a = form.evaluate(&pts).norm();
        (a >= SINGULAR_THRESHOLD).then(|| a.ln())
    }))
}

/// H_n = Σ_{j=1}^n 1/j, exactly.
pub fn harmonic(n: usize) -> Rational {
    (1..=n).map(|j| Rational::new(BigInt::one(), BigInt::from(j))).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChowLogNorm {
    pub value: f64,
    /// Standard error inherited from the integral.
    pub stderr: f64,
    pub integral: MCEstimate,
}

/// log|s| - ½ d (n+1) H_N - ∫ log|F|, for a cycle of dimension n and degree d
/// with Chow form `form` in P^N.
pub fn chow_log_norm(
    form: &ChowForm,
    section_value: Complex64,
    degrees: (usize, usize),
    samples: u64,
    seed: u64,
) -> Result<ChowLogNorm> {
    let log_s = section_value.norm().ln();
    if !log_s.is_finite() {
        return Err(Error::ZeroSectionValue);
    }
    chow_log_norm_from_log(form, log_s, degrees, samples, seed)
}

/// As [`chow_log_norm`] with log|s| given directly, for section values
/// outside the floating range.
pub fn chow_log_norm_from_log(
    form: &ChowForm,
    log_abs_section: f64,
    degrees: (usize, usize),
    samples: u64,
    seed: u64,
) -> Result<ChowLogNorm> {
    let (d, n) = degrees;
    let big_n = form.vars - 1;
    let integral = chow_integral_mc(form, samples, seed)?;
    let constant = 0.5 * (d * (n + 1)) as f64 * to_f64(&harmonic(big_n));
    Ok(ChowLogNorm { value: log_abs_section - constant - integral.mean, stderr: integral.stderr, integral })
}

/// log|s| - Σ m_i ½ log|v_i|², the product of Fubini-Study norms.
pub fn fubini_study_log_norm(config: &Configuration, log_abs_section: f64) -> f64 {
    log_abs_section
        - config
            .points()
            .iter()
            .map(|p| to_f64(&p.multiplicity) * 0.5 * crate::linalg::ln_abs(&p.vector.norm_squared()))
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, RationalVector};

    fn form(pts: &[&[i64]]) -> ChowForm {
        chow_form_of_points(&Configuration::from_i64_points(pts[0].len() - 1, pts).unwrap()).unwrap()
    }

    #[test]
    fn forms_of_small_cycles() {
        let f = form(&[&[1, 0]]);
        assert_eq!(f.coeffs.into_iter().collect::<Vec<_>>(), vec![(vec![1, 0], int(1))]);
        let f = form(&[&[1, 0], &[0, 1]]);
        assert_eq!(f.coeffs.into_iter().collect::<Vec<_>>(), vec![(vec![1, 1], int(1))]);
        let f = form(&[&[1, 0], &[1, 1]]);
        assert_eq!(f.coeffs.into_iter().collect::<Vec<_>>(), vec![(vec![1, 1], int(1)), (vec![2, 0], int(1))]);
    }

    #[test]
    fn rejects_fractional_multiplicity() {
        let c = Configuration::new(1, [(RationalVector::from_i64s(&[1, 0]), crate::linalg::rat(1, 2))]).unwrap();
        assert!(matches!(chow_form_of_points(&c), Err(Error::NonIntegerMultiplicity(_))));
    }

    #[test]
    fn sampler_is_unit_and_deterministic() {
        let mut a = shard_rng(7, 0);
        let mut b = shard_rng(7, 0);
        for dim in 1..4 {
            let x = sphere_sample(dim, &mut a);
            assert!((cnorm(&x) - 1.0).abs() < 1e-14);
            assert_eq!(x, sphere_sample(dim, &mut b));
        }
    }

    #[test]
    fn constant_form_integrates_to_zero() {
        let e = chow_integral_mc(&ChowForm::one(1, 3), 1000, 1).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
    }

    #[test]
    fn estimate_is_reproducible() {
        let f = form(&[&[1, 0, 0], &[1, 1, 1]]);
        let a = chow_integral_mc(&f, 70_000, 3).unwrap();
        let b = chow_integral_mc(&f, 70_000, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.mean, chow_integral_mc(&f, 70_000, 4).unwrap().mean);
    }

    #[test]
    fn fubini_study_examples() {
        let c = Configuration::from_i64_points(1, &[&[1, 0]]).unwrap();
        assert_eq!(fubini_study_log_norm(&c, 0.0), 0.0);
        let c = Configuration::from_i64_points(1, &[&[1, 1]]).unwrap();
        assert!((fubini_study_log_norm(&c, 0.0) + 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(fubini_study_log_norm(&Configuration::coordinate_points(1), 0.0), 0.0);
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(0), int(0));
        assert_eq!(harmonic(3), crate::linalg::rat(11, 6));
    }
}
