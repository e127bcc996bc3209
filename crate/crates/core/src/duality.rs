//! Points versus hyperplanes.
//!
//! The cycle X = Σ m_i [v_i] in P^N corresponds to the arrangement φ(X) of
//! the hyperplanes v_i^⊥ in the dual space. Its Chow form in N blocks of
//! variables x_1, ..., x_N is
//!
//! D(x_1, ..., x_N) = Π_i det[v_i; x_1; ...; x_N]^{m_i} = F(x_1 ∧ ... ∧ x_N),
//!
//! the zero-cycle form F evaluated at the signed maximal minors of the
//! N × (N+1) matrix of the x's. Evaluating the two forms at matching
//! arguments gives sections with s'(φX) = s(X), and comparing the two
//! Chow metrics yields the constant shift
//!
//! log‖s'‖(φX) - log‖s‖(X) = -d C'(N),
//! C'(N) = ½ (N-1) H_N + E log|v_1 ∧ ... ∧ v_N| = ½ Σ_{m=1}^{N-1} H_m,
//!
//! the expectation over independent uniform unit vectors in C^{N+1}. The
//! closed form follows from |v_1 ∧ ... ∧ v_N| = Π_i |proj of v_i onto
//! span(v_1..v_{i-1})^⊥|, whose squares are Beta(N+2-i, i-1) distributed.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
// shadowed by inherent float methods when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::chow::{chow_form_of_points, chow_log_norm_from_log, harmonic, monte_carlo, shard_rng, sphere_sample, ChowForm, MCEstimate};
use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::height::{global_height, HeightEstimate, HeightOptions};
use crate::linalg::{serde_rational, to_f64, valuation, Rational, RationalMatrix};
use crate::nonarch::Place;

/// Smallest accepted |v_1 ∧ ... ∧ v_N| for the fixed section vectors.
pub const WEDGE_THRESHOLD: f64 = 1e-6;

fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    if n == 0 {
        return vec![(Vec::new(), 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(n - 1) {
        // insert n-1 at each position; moving it left past k entries flips sign k times
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            let flips = (p.len() - pos) as i32;
            out.push((q, if flips % 2 == 0 { s } else { -s }));
        }
    }
    out
}

/// (-1)^j times the minor of the N × (N+1) block matrix with column j removed,
/// as a form linear in each of the N blocks.
fn signed_minor(n_blocks: usize, j: usize) -> ChowForm {
    let vars = n_blocks + 1;
    let cols: Vec<usize> = (0..vars).filter(|&c| c != j).collect();
    let sign_j = if j % 2 == 0 { 1 } else { -1 };
    let mut coeffs = alloc::collections::BTreeMap::new();
    for (perm, s) in permutations(n_blocks) {
        let mut e = vec![0u16; n_blocks * vars];
        for (b, &k) in perm.iter().enumerate() {
            e[b * vars + cols[k]] = 1;
        }
        *coeffs.entry(e).or_insert_with(Rational::zero) += Rational::from_integer(BigInt::from(s * sign_j));
    }
    coeffs.retain(|_, c: &mut Rational| !c.is_zero());
    ChowForm { blocks: n_blocks, vars, degree: 1, coeffs }
}

/// Substitutes the wedge coordinates of (x_1, ..., x_N) into a zero-cycle form.
pub fn dual_chow_form(form: &ChowForm) -> Result<ChowForm> {
    if form.blocks != 1 || form.vars < 2 {
        return Err(Error::Internal("dual form needs a zero-cycle form in at least two variables"));
    }
    let n = form.vars - 1;
    let minors: Vec<ChowForm> = (0..form.vars).map(|j| signed_minor(n, j)).collect();
    let mut out = ChowForm { blocks: n, vars: form.vars, degree: form.degree, coeffs: Default::default() };
    for (e, c) in &form.coeffs {
        let mut term = ChowForm::one(n, form.vars);
        for (j, &k) in e.iter().enumerate() {
            if k > 0 {
                term = term.mul(&minors[j].pow(k as usize)?)?;
            }
        }
        for (m, x) in term.scale(c).coeffs {
            *out.coeffs.entry(m).or_insert_with(Rational::zero) += x;
        }
    }
    out.coeffs.retain(|_, c| !c.is_zero());
    Ok(out)
}

/// The form F(M^T u) in every block. With F the Chow form of X and M = g this
/// is the Chow form of g·X; with D the hyperplane form of X, det g = 1 and
/// M = (g^{-1})^T it is the hyperplane form of g·X.
pub fn transform_blocks(form: &ChowForm, m: &RationalMatrix) -> Result<ChowForm> {
    let n = form.vars;
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.rows() });
    }
    // image of variable (b, j): Σ_k m[k][j] u_{b,k}
    let image = |b: usize, j: usize| -> ChowForm {
        let mut coeffs = alloc::collections::BTreeMap::new();
        for k in 0..n {
            let c = &m[(k, j)];
            if !c.is_zero() {
                let mut e = vec![0u16; form.blocks * n];
                e[b * n + k] = 1;
                coeffs.insert(e, c.clone());
            }
        }
        ChowForm { blocks: form.blocks, vars: n, degree: 0, coeffs }
    };
    let mut out = ChowForm { blocks: form.blocks, vars: n, degree: form.degree, coeffs: Default::default() };
    for (e, c) in &form.coeffs {
        let mut term = ChowForm::one(form.blocks, n);
        for (idx, &k) in e.iter().enumerate() {
            if k > 0 {
                term = term.mul(&image(idx / n, idx % n).pow(k as usize)?)?;
            }
        }
        for (mono, x) in term.scale(c).coeffs {
            *out.coeffs.entry(mono).or_insert_with(Rational::zero) += x;
        }
    }
    out.coeffs.retain(|_, c| !c.is_zero());
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualConstant {
    pub n: usize,
    /// ½ Σ_{m=1}^{N-1} H_m
    #[serde(with = "serde_rational")]
    pub closed_form: Rational,
    /// Monte Carlo estimate of ½ (N-1) H_N + E log|v_1 ∧ ... ∧ v_N|.
    pub mc_check: MCEstimate,
}

impl DualConstant {
    pub fn value(&self) -> f64 {
        to_f64(&self.closed_form)
    }

    /// |closed form - estimate| in units of the standard error. Differences
    /// at rounding level (N = 1, where every wedge has norm one) count as 0.
    pub fn deviation(&self) -> f64 {
        let diff = (self.value() - self.mc_check.mean).abs();
        if diff <= 1e-12 {
            return 0.0;
        }
        diff / self.mc_check.stderr
    }
}

/// ½ Σ_{m=1}^{N-1} H_m, exactly; 0 for N = 1.
pub fn dual_constant_closed_form(n: usize) -> Rational {
    (1..n).map(harmonic).sum::<Rational>() / Rational::from_integer(BigInt::from(2))
}

/// log |v_1 ∧ ... ∧ v_k| = ½ log det of the Gram matrix.
pub fn log_wedge_norm(vs: &[Vec<Complex64>]) -> f64 {
    let k = vs.len();
    let g = DMatrix::from_fn(k, k, |i, j| crate::linalg::cdot(&vs[i], &vs[j]));
    0.5 * g.determinant().re.abs().ln()
}

pub fn dual_constant(n: usize, samples: u64, seed: u64) -> Result<DualConstant> {
    if n == 0 {
        return Err(Error::InvalidAmbient);
    }
    if samples == 0 {
        return Err(Error::Internal("at least one sample is required"));
    }
    let shift = 0.5 * (n - 1) as f64 * to_f64(&harmonic(n));
    let mc_check = monte_carlo(samples, seed, |rng| {
        let vs: Vec<Vec<Complex64>> = (0..n).map(|_| sphere_sample(n + 1, rng)).collect();
        let l = log_wedge_norm(&vs);
        l.is_finite().then_some(shift + l)
    });
    Ok(DualConstant { n, closed_form: dual_constant_closed_form(n), mc_check })
}

/// Deterministic random element of SL(n, Z): a product of elementary matrices.
pub fn random_sl(n: usize, rng: &mut impl RngCore) -> RationalMatrix {
    let mut g = RationalMatrix::identity(n);
    if n < 2 {
        return g;
    }
    for _ in 0..(3 * n) {
        let i = (rng.next_u32() as usize) % n;
        let mut j = (rng.next_u32() as usize) % (n - 1);
        if j >= i {
            j += 1;
        }
        let c = (rng.next_u32() % 5) as i64 - 2;
        let mut e = RationalMatrix::identity(n);
        e[(i, j)] = Rational::from_integer(BigInt::from(c));
        g = e.mul(&g).expect("square factors");
    }
    g
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftTrial {
    /// Rows of the transformation g, as "p/q" strings.
    pub g: Vec<crate::linalg::RationalVector>,
    pub log_section: f64,
    pub primal: f64,
    pub dual: f64,
    pub difference: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitePlaceCheck {
    pub prime: u64,
    /// Smallest p-adic valuation among the coefficients of the point form.
    pub primal: i64,
    /// Same for the hyperplane form.
    pub dual: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricShiftReport {
    pub n: usize,
    #[serde(with = "serde_rational")]
    pub degree: Rational,
    /// -d C'(N)
    pub expected: f64,
    pub seed: u64,
    pub mc_samples: u64,
    pub trials: Vec<ShiftTrial>,
    /// Redraws of the fixed section vectors.
    pub resampled: u64,
    pub finite_places: Vec<FinitePlaceCheck>,
    pub pass: bool,
}

fn min_coefficient_valuation(form: &ChowForm, p: u64) -> i64 {
    form.coeffs.values().filter(|c| !c.is_zero()).map(|c| valuation(c, p)).min().unwrap_or(0)
}

/// Compares the Chow metrics of g·X and φ(g·X) for `g_samples` random g in
/// SL(N+1, Z). Each difference must lie within 4 combined standard errors
/// of -d C'(N). Also checks, at p = 2, 3, 5, that the point form and the
/// hyperplane form have the same smallest coefficient valuation.
pub fn metric_shift_check(config: &Configuration, g_samples: usize, mc_samples: u64, seed: u64) -> Result<MetricShiftReport> {
    let n = config.ambient();
    if n == 0 {
        return Err(Error::InvalidAmbient);
    }
    let d = config.degree().to_integer();
    if !config.has_integer_multiplicities() {
        return Err(Error::NonIntegerMultiplicity(alloc::format!("{}", config.degree())));
    }
    let du: usize = num_traits::ToPrimitive::to_usize(&d).ok_or(Error::Internal("degree too large"))?;
    let expected = -(du as f64) * to_f64(&dual_constant_closed_form(n));

    let mut rng = shard_rng(seed, u64::MAX);
    let mut resampled = 0u64;
    let mut trials = Vec::with_capacity(g_samples);
    for t in 0..g_samples {
        let g = random_sl(n + 1, &mut rng);
        let moved = config.transform(&g)?;
        let form = chow_form_of_points(&moved)?;
        let dual = dual_chow_form(&form)?;
        let log_s = loop {
            let xs: Vec<Vec<Complex64>> = (0..n).map(|_| sphere_sample(n + 1, &mut rng)).collect();
            if log_wedge_norm(&xs) < WEDGE_THRESHOLD.ln() {
                resampled += 1;
                continue;
            }
            let v = dual.evaluate(&xs).norm().ln();
            if !v.is_finite() || v < -600.0 {
                resampled += 1;
                continue;
            }
            break v;
        };
        let trial_seed = seed.wrapping_add(1 + 2 * t as u64);
        let primal = chow_log_norm_from_log(&form, log_s, (du, 0), mc_samples, trial_seed)?;
        let dual_norm = chow_log_norm_from_log(&dual, log_s, (du, n - 1), mc_samples, trial_seed.wrapping_add(1))?;
        let difference = dual_norm.value - primal.value;
        let stderr = (primal.stderr.powi(2) + dual_norm.stderr.powi(2)).sqrt();
        let pass = (difference - expected).abs() <= 4.0 * stderr + 1e-12;
        trials.push(ShiftTrial {
            g: (0..=n).map(|i| crate::linalg::RationalVector::new(g.row(i).to_vec())).collect(),
            log_section: log_s,
            primal: primal.value,
            dual: dual_norm.value,
            difference,
            stderr,
            pass,
        });
    }

    let form = chow_form_of_points(config)?;
    let dual = dual_chow_form(&form)?;
    let finite_places = [2u64, 3, 5]
        .iter()
        .map(|&p| FinitePlaceCheck { prime: p, primal: min_coefficient_valuation(&form, p), dual: min_coefficient_valuation(&dual, p) })
        .collect::<Vec<_>>();
    let pass = trials.iter().all(|t| t.pass) && finite_places.iter().all(|f| f.primal == f.dual);
    Ok(MetricShiftReport {
        n,
        degree: config.degree().clone(),
        expected,
        seed,
        mc_samples,
        trials,
        resampled,
        finite_places,
        pass,
    })
}

/// Height of the dual arrangement: the zero-cycle height with the
/// archimedean term raised by C'(N). Finite places are unchanged, since the
/// point and hyperplane forms have equal coefficient valuations.
pub fn hyperplane_height(config: &Configuration, options: &HeightOptions) -> Result<HeightEstimate> {
    Ok(shift_to_hyperplanes(&global_height(config, options)?, config.ambient()))
}

/// Applies the duality shift to an existing zero-cycle estimate in P^N.
pub fn shift_to_hyperplanes(est: &HeightEstimate, n: usize) -> HeightEstimate {
    let mut out = est.clone();
    let c = to_f64(&dual_constant_closed_form(n));
    for local in out.per_place.iter_mut() {
        if local.place == Place::Archimedean {
            local.lower += c;
            local.upper += c;
        }
    }
    out.resum();
    out
}
