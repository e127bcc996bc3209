//! The archimedean local height.
//!
//! For a cycle C = Σ m_i [v_i] of degree d and the section of
//! [`crate::section`], the local term at infinity is
//!
//! h_∞(C) = inf_{g ∈ SL} (1/d) Σ m_i log|g v_i| - (1/d) Σ a_k log|det B_k|,
//!
//! which is independent of the chosen representatives and nonnegative by
//! Hadamard's inequality applied to each basis B_k. Only H = g^† g matters,
//! so the minimization runs over [`HermitianScaling`]s.
//!
//! The infimum over the orbit equals the infimum over its closure. When a
//! subspace W is tight, the one-parameter subgroup contracting the
//! complement of W degenerates C, without changing the value, to the direct
//! sum of its restriction to W and its image in V/W. Block-diagonal g with
//! blocks in SL(W), SL(V/W) then separate the problem, and the two balanced
//! blocks assemble to a balanced point. Hence the recursion in [`infimum`]
//! only ever runs the numerical minimizer on stable pieces, where
//! convergence is linear; one-dimensional pieces are closed form.
//!
//! Norms on the pieces are tracked by exact Gram matrices: the restriction
//! inherits B G B^T, the quotient the Schur complement of B G B^T in G.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
// shadowed by inherent float methods when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::linalg::{cnorm, ln_abs, to_f64, ComplexMatrix, Echelon, Rational, RationalMatrix, Rationals};
use crate::nonarch::{Certificate, LocalHeightInterval, Place};
use crate::section::InvariantSection;
use crate::stability::{classify, compare_to_bound, flat_mass, flats, StabilityStatus};

/// Values below this declare the configuration numerically unstable.
pub const DIVERGENCE_THRESHOLD: f64 = -50.0;

const MIN_EIGENVALUE: f64 = 1e-280;

/// A positive definite Hermitian matrix of determinant one, standing for
/// g^† g with g in SL(N+1, C).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianScaling {
    h: DMatrix<Complex64>,
}

fn eigen(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let e = h.clone().symmetric_eigen();
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

fn spectral_fn(h: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let (vals, vecs) = eigen(h);
    let n = vals.len();
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(f(vals[i]), 0.0) } else { Complex64::zero() });
    &vecs * d * vecs.adjoint()
}

fn symmetrize(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (h + h.adjoint()).map(|z| z * 0.5)
}

impl HermitianScaling {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let h = m.into_inner();
        if h.nrows() != h.ncols() {
            return Err(Error::NonSquare { rows: h.nrows(), cols: h.ncols() });
        }
        let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if (&h - h.adjoint()).iter().any(|z| z.norm() > 1e-12 * scale) {
            return Err(Error::InvalidScaling("matrix is not Hermitian"));
        }
        let (vals, _) = eigen(&h);
        if vals.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidScaling("matrix is not positive definite"));
        }
        let det: f64 = vals.iter().product();
        if (det - 1.0).abs() >= 1e-10 {
            return Err(Error::InvalidScaling("determinant is not one"));
        }
        Ok(Self { h })
    }

    /// Rescales a positive definite Hermitian matrix to determinant one.
    pub fn normalized(m: ComplexMatrix) -> Result<Self> {
        let h = symmetrize(m.inner());
        let (vals, _) = eigen(&h);
        if vals.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidScaling("matrix is not positive definite"));
        }
        let log_det: f64 = vals.iter().map(|l| l.ln()).sum();
        let c = (-log_det / vals.len() as f64).exp();
        Ok(Self { h: h.map(|z| z * c) })
    }

    /// g^† g, rescaled to determinant one.
    pub fn from_factor(g: &ComplexMatrix) -> Result<Self> {
        Self::normalized(ComplexMatrix::new(g.inner().adjoint() * g.inner())?)
    }

    pub fn identity(n: usize) -> Self {
        Self { h: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigen(&self.h).0
    }

    /// The positive square root, a representative g of the orbit point.
    pub fn sqrt(&self) -> ComplexMatrix {
        ComplexMatrix::new(spectral_fn(&self.h, f64::sqrt)).expect("finite square root")
    }

    /// v^† H v
    pub fn quad(&self, v: &[Complex64]) -> f64 {
        let hv: Vec<Complex64> = (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.h[(i, j)] * v[j]).sum()).collect();
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
    }

    /// Frobenius norm of log H, the distance to the identity.
    pub fn log_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt()
    }
}

/// (1/d) Σ m_i ½ log(v_i^† H v_i / v_i^† v_i)
pub fn kn_value(config: &Configuration, h: &HermitianScaling) -> Result<f64> {
    if h.dim() != config.dim() {
        return Err(Error::DimensionMismatch { expected: config.dim(), found: h.dim() });
    }
    let (us, ws) = unit_problem(config);
    Ok(value_at(&us, &ws, h))
}

fn unit_problem(config: &Configuration) -> (Vec<Vec<Complex64>>, Vec<f64>) {
    let us = config
        .vectors()
        .map(|v| {
            let z = v.to_complex();
            let n = cnorm(&z);
            z.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let d = to_f64(config.degree());
    let ws = config.multiplicities().map(|m| to_f64(m) / d).collect();
    (us, ws)
}

fn value_at(us: &[Vec<Complex64>], ws: &[f64], h: &HermitianScaling) -> f64 {
    us.iter().zip(ws).map(|(u, w)| w * 0.5 * h.quad(u).ln()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum KNStatus {
    Converged,
    DivergentUnstable,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KNResult {
    pub scaling: HermitianScaling,
    pub value: f64,
    /// ‖Σ_i (N+1)(m_i/d) P_i - I‖_F for the projectors P_i onto H^{1/2} v_i.
    pub residual: f64,
    pub status: KNStatus,
    pub iterations: usize,
    /// Value after each accepted step, starting from H = I.
    pub trace: Vec<f64>,
}

/// Minimizes [`kn_value`] over determinant-one scalings.
///
/// The update is the fixed point iteration for the balanced condition
/// Σ (m_i/d) (H^{1/2}v_i)(H^{1/2}v_i)^†/(v_i^† H v_i) = I/(N+1): with
/// S(H) = (N+1) Σ (m_i/d) v_i v_i^†/(v_i^† H v_i), set H <- S(H)^{-1}
/// rescaled to determinant one. This is a majorize-minimize step, so the
/// value does not increase; a step that does is halved toward the current H.
pub fn kn_minimize(config: &Configuration, tol: f64, max_iter: usize) -> Result<KNResult> {
    let dim = config.dim();
    let mut e = Echelon::new(Rationals, dim);
    for v in config.vectors() {
        e.insert(v.entries());
    }
    if e.rank() < dim {
        return Ok(KNResult {
            scaling: HermitianScaling::identity(dim),
            value: f64::NEG_INFINITY,
            residual: f64::INFINITY,
            status: KNStatus::DivergentUnstable,
            iterations: 0,
            trace: vec![0.0],
        });
    }
    let (us, ws) = unit_problem(config);
    Ok(minimize_units(&us, &ws, tol, max_iter))
}

/// Same as [`kn_minimize`] for spanning floating vectors with positive weights.
pub fn kn_minimize_vectors(vectors: &[Vec<Complex64>], weights: &[f64], tol: f64, max_iter: usize) -> Result<KNResult> {
    let dim = vectors.first().map_or(0, Vec::len);
    if dim == 0 || vectors.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: vectors.len(), found: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    let mut us = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        let n = cnorm(v);
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        if !(n > 0.0) {
            return Err(Error::ZeroVector { index: i });
        }
        us.push(v.iter().map(|x| x / n).collect::<Vec<_>>());
    }
    let ws: Vec<f64> = weights.iter().map(|w| w / total).collect();
    Ok(minimize_units(&us, &ws, tol, max_iter))
}

fn moment_sum(us: &[Vec<Complex64>], ws: &[f64], h: &HermitianScaling) -> DMatrix<Complex64> {
    let n = h.dim();
    let mut s = DMatrix::<Complex64>::zeros(n, n);
    for (u, w) in us.iter().zip(ws) {
        let c = w * n as f64 / h.quad(u);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += u[i] * u[j].conj() * c;
            }
        }
    }
    s
}

fn residual_at(s: &DMatrix<Complex64>, h: &HermitianScaling) -> f64 {
    let r = h.sqrt().into_inner();
    let q = &r * s * &r;
    let n = q.nrows();
    (q - DMatrix::<Complex64>::identity(n, n)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn divergent(h: &HermitianScaling, value: f64) -> bool {
    !value.is_finite()
        || value < DIVERGENCE_THRESHOLD
        || h.eigenvalues().iter().any(|&l| !(l > MIN_EIGENVALUE) || !l.is_finite())
}

fn minimize_units(us: &[Vec<Complex64>], ws: &[f64], tol: f64, max_iter: usize) -> KNResult {
    let n = us[0].len();
    let mut h = HermitianScaling::identity(n);
    let mut value = value_at(us, ws, &h);
    let mut trace = vec![value];
    let finish = |h, value, residual, status, iterations, trace| KNResult { scaling: h, value, residual, status, iterations, trace };
    for it in 0..max_iter {
        let s = moment_sum(us, ws, &h);
        let residual = residual_at(&s, &h);
        if residual < tol {
            return finish(h, value, residual, KNStatus::Converged, it, trace);
        }
        let next = s
            .try_inverse()
            .ok_or(Error::NonFinite)
            .and_then(ComplexMatrix::new)
            .and_then(HermitianScaling::normalized);
        let Ok(mut next) = next else {
            return finish(h, value, residual, KNStatus::DivergentUnstable, it, trace);
        };
        let mut next_value = value_at(us, ws, &next);
        if next_value > value + 1e-12 * (1.0 + value.abs()) {
            let mid = (h.matrix() + next.matrix()).map(|z| z * 0.5);
            if let Ok(m) = ComplexMatrix::new(mid).and_then(HermitianScaling::normalized) {
                next = m;
                next_value = value_at(us, ws, &next);
            }
        }
        if divergent(&next, next_value) {
            trace.push(next_value);
            return finish(next, next_value, residual, KNStatus::DivergentUnstable, it + 1, trace);
        }
        h = next;
        value = next_value;
        trace.push(value);
    }
    let s = moment_sum(us, ws, &h);
    let residual = residual_at(&s, &h);
    let status = if residual < tol { KNStatus::Converged } else { KNStatus::MaxIter };
    finish(h, value, residual, status, max_iter, trace)
}

/// inf over SL of (1/d) Σ m_i log|g v_i|, with the slack of its numerical parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Infimum {
    pub value: f64,
    /// Heuristic bound on how far `value` may sit above the infimum.
    pub slack: f64,
    /// Number of stable pieces handed to the numerical minimizer.
    pub numerical_pieces: usize,
    pub worst_residual: f64,
    pub iterations: usize,
    /// Worst status among the numerical pieces, if any.
    pub status: Option<KNStatus>,
}

struct Piece {
    vectors: Vec<Vec<Rational>>,
    mults: Vec<Rational>,
    gram: RationalMatrix,
}

/// The unnormalized orbit infimum Φ(C) = inf_g (1/d) Σ m_i log|g v_i| at the
/// stored representatives. Errors on unstable input.
pub fn infimum(config: &Configuration, tol: f64, max_iter: usize) -> Result<Infimum> {
    let verdict = crate::stability::check_stability(config)?;
    if verdict.status == StabilityStatus::Unstable {
        return Err(Error::Unstable { witness: verdict.witness.expect("unstable verdict has a witness") });
    }
    let piece = Piece {
        vectors: config.vectors().map(|v| v.entries().to_vec()).collect(),
        mults: config.multiplicities().cloned().collect(),
        gram: RationalMatrix::identity(config.dim()),
    };
    piece_infimum(piece, tol, max_iter)
}

fn quadratic(g: &RationalMatrix, v: &[Rational]) -> Rational {
    let n = v.len();
    let mut s = Rational::zero();
    for i in 0..n {
        for j in 0..n {
            s += &v[i] * &g[(i, j)] * &v[j];
        }
    }
    s
}

fn gram_blocks(gram: &RationalMatrix, e: &Echelon<Rationals>) -> Result<(RationalMatrix, RationalMatrix)> {
    let n = e.ambient();
    let b = RationalMatrix::from_rows(&e.rows().iter().cloned().map(Into::into).collect::<Vec<_>>())?;
    let comp: Vec<crate::linalg::RationalVector> =
        (0..n).filter(|c| !e.pivots().contains(c)).map(|c| crate::linalg::RationalVector::unit(n, c)).collect();
    let c = RationalMatrix::from_rows(&comp)?;
    let gb = gram.mul(&b.transpose())?;
    let gc = gram.mul(&c.transpose())?;
    let bgb = b.mul(&gb)?;
    let cgc = c.mul(&gc)?;
    let cgb = c.mul(&gb)?;
    let bgc = b.mul(&gc)?;
    let correction = cgb.mul(&bgb.inverse()?)?.mul(&bgc)?;
    let mut schur = cgc;
    for i in 0..schur.rows() {
        for j in 0..schur.cols() {
            let x = &schur[(i, j)] - &correction[(i, j)];
            schur[(i, j)] = x;
        }
    }
    Ok((bgb, schur))
}

fn piece_infimum(piece: Piece, tol: f64, max_iter: usize) -> Result<Infimum> {
    let dim = piece.gram.rows();
    let degree: Rational = piece.mults.iter().cloned().sum();
    let d = to_f64(&degree);
    let exact = |value| Infimum { value, slack: 0.0, numerical_pieces: 0, worst_residual: 0.0, iterations: 0, status: None };

    if dim == 1 {
        let value = piece
            .vectors
            .iter()
            .zip(&piece.mults)
            .map(|(v, m)| to_f64(m) / d * 0.5 * ln_abs(&quadratic(&piece.gram, v)))
            .sum();
        return Ok(exact(value));
    }

    let fl = flats(&Rationals, dim, &piece.vectors);
    if classify(&fl, &piece.mults, dim).0 == StabilityStatus::Unstable {
        return Err(Error::Internal("unstable piece in the orbit infimum recursion"));
    }
    let tight = fl.iter().find(|f| compare_to_bound(&flat_mass(f, &piece.mults), f.rank, &degree, dim).is_eq());

    if let Some(w) = tight {
        let mut e = Echelon::new(Rationals, dim);
        for row in &w.basis {
            e.insert(row);
        }
        let (gram_w, gram_q) = gram_blocks(&piece.gram, &e)?;
        let mut inner = Piece { vectors: Vec::new(), mults: Vec::new(), gram: gram_w };
        let mut outer = Piece { vectors: Vec::new(), mults: Vec::new(), gram: gram_q };
        let mut shift = 0.0;
        for (i, (v, m)) in piece.vectors.iter().zip(&piece.mults).enumerate() {
            if w.members.binary_search(&i).is_ok() {
                inner.vectors.push(e.coordinates(v));
                inner.mults.push(m.clone());
                continue;
            }
            let q = e.quotient_coordinates(v);
            let lead = q.iter().position(|x| !x.is_zero()).ok_or(Error::Internal("outside vector maps to zero"))?;
            let same = outer.vectors.iter().position(|r| {
                !r[lead].is_zero() && {
                    let lambda = &q[lead] / &r[lead];
                    q.iter().zip(r).all(|(a, b)| *a == &lambda * b)
                }
            });
            match same {
                Some(j) => {
                    shift += to_f64(m) / d * ln_abs(&(&q[lead] / &outer.vectors[j][lead]));
                    outer.mults[j] += m;
                }
                None => {
                    outer.vectors.push(q);
                    outer.mults.push(m.clone());
                }
            }
        }
        let dw = to_f64(&inner.mults.iter().cloned().sum::<Rational>()) / d;
        let dq = to_f64(&outer.mults.iter().cloned().sum::<Rational>()) / d;
        let a = piece_infimum(inner, tol, max_iter)?;
        let b = piece_infimum(outer, tol, max_iter)?;
        let status = match (a.status, b.status) {
            (Some(KNStatus::MaxIter), _) | (_, Some(KNStatus::MaxIter)) => Some(KNStatus::MaxIter),
            (s, None) | (None, s) => s,
            (s, _) => s,
        };
        return Ok(Infimum {
            value: dw * a.value + dq * b.value + shift,
            slack: dw * a.slack + dq * b.slack,
            numerical_pieces: a.numerical_pieces + b.numerical_pieces,
            worst_residual: a.worst_residual.max(b.worst_residual),
            iterations: a.iterations + b.iterations,
            status,
        });
    }

    // Stable piece: in coordinates x with v = A x for a basis A drawn from the
    // piece, inf Σ w/2 log v^T R^T H R v = log det(A^T G A)/(2 dim) + inf Σ w/2 log x^T H x.
    let mut e = Echelon::new(Rationals, dim);
    let basis: Vec<crate::linalg::RationalVector> = piece
        .vectors
        .iter()
        .filter(|v| e.insert(v))
        .map(|v| crate::linalg::RationalVector::new(v.clone()))
        .collect();
    let a = RationalMatrix::from_columns(&basis)?;
    let a_inv = a.inverse()?;
    let gram_a = a.transpose().mul(&piece.gram)?.mul(&a)?;
    let ws: Vec<f64> = piece.mults.iter().map(|m| to_f64(m) / d).collect();
    let mut base = ln_abs(&crate::linalg::det(&gram_a)?) / (2.0 * dim as f64);
    let mut vecs = Vec::with_capacity(piece.vectors.len());
    for (v, w) in piece.vectors.iter().zip(&ws) {
        let x = a_inv.apply(&crate::linalg::RationalVector::new(v.clone()))?;
        base += w * 0.5 * ln_abs(&x.norm_squared());
        vecs.push(x.to_complex());
    }
    let kn = kn_minimize_vectors(&vecs, &ws, tol, max_iter)?;
    if kn.status == KNStatus::DivergentUnstable {
        return Err(Error::Internal("minimizer diverged on a stable piece"));
    }
    Ok(Infimum {
        value: base + kn.value,
        slack: kn.residual * (1.0 + kn.scaling.log_norm()),
        numerical_pieces: 1,
        worst_residual: kn.residual,
        iterations: kn.iterations,
        status: Some(kn.status),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchHeight {
    pub interval: LocalHeightInterval,
    pub infimum: Infimum,
    /// (1/d) Σ a_k log|det B_k|, subtracted from the infimum.
    pub section_offset: f64,
}

/// The archimedean local height as [value - slack, value].
pub fn arch_local_height(
    config: &Configuration,
    section: &InvariantSection,
    tol: f64,
    max_iter: usize,
) -> Result<ArchHeight> {
    if section.decomposition.dictionary.len() != config.len() {
        return Err(Error::SectionMismatch("section was built for another configuration"));
    }
    section.decomposition.validate(config).map_err(|_| Error::SectionMismatch("section does not match configuration"))?;
    let inf = infimum(config, tol, max_iter)?;
    let offset = section.arch_offset();
    let value = inf.value - offset;
    let certificate = if inf.numerical_pieces == 0 { Certificate::ExactDeterminant } else { Certificate::KempfNess };
    Ok(ArchHeight {
        interval: LocalHeightInterval { place: Place::Archimedean, lower: value - inf.slack, upper: value, certificate },
        infimum: inf,
        section_offset: offset,
    })
}

/// Σ_{i ∈ B} log|g v_i| - log|det(g B)| at g = H^{1/2}; zero iff the scaled
/// basis is orthogonal.
pub fn hadamard_gap(config: &Configuration, basis: &[usize], h: &HermitianScaling) -> Result<f64> {
    let root = h.sqrt();
    let cols: Vec<Vec<Complex64>> = basis
        .iter()
        .map(|&i| config.points().get(i).map(|p| root.apply(&p.vector.to_complex())).ok_or(Error::IndexOutOfRange(i)))
        .collect::<Result<_>>()?;
    let m = ComplexMatrix::from_columns(&cols)?.into_inner();
    let logdet = m.determinant().norm().ln();
    Ok(cols.iter().map(|c| cnorm(c).ln()).sum::<f64>() - logdet)
}

/// Scaling that makes the columns of an invertible square configuration
/// orthonormal up to a common factor: H = (M M^†)^{-1}, normalized.
pub fn orthogonalizing_scaling(columns: &ComplexMatrix) -> Result<HermitianScaling> {
    let m = columns.inner();
    let inv = (m * m.adjoint()).try_inverse().ok_or(Error::RankDeficient)?;
    HermitianScaling::normalized(ComplexMatrix::new(inv)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, RationalVector};
    use crate::section::SectionChoice;

    fn c(z: f64) -> Complex64 {
        Complex64::new(z, 0.0)
    }

    fn diag(a: &[f64]) -> HermitianScaling {
        let n = a.len();
        HermitianScaling::new(ComplexMatrix::new(DMatrix::from_fn(n, n, |i, j| if i == j { c(a[i]) } else { c(0.0) })).unwrap())
            .unwrap()
    }

    #[test]
    fn scaling_validation() {
        assert!(HermitianScaling::new(ComplexMatrix::identity(3)).is_ok());
        let bad = ComplexMatrix::new(DMatrix::from_row_slice(2, 2, &[c(2.0), c(0.0), c(0.0), c(1.0)])).unwrap();
        assert_eq!(HermitianScaling::new(bad.clone()), Err(Error::InvalidScaling("determinant is not one")));
        let h = HermitianScaling::normalized(bad).unwrap();
        let det: f64 = h.eigenvalues().iter().product();
        assert!((det - 1.0).abs() < 1e-12);
        let skew = ComplexMatrix::new(DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)])).unwrap();
        assert!(HermitianScaling::new(skew).is_err());
    }

    #[test]
    fn kn_value_examples() {
        let id = Configuration::coordinate_points(1);
        assert_eq!(kn_value(&id, &HermitianScaling::identity(2)).unwrap(), 0.0);
        assert!(kn_value(&id, &diag(&[2.0, 0.5])).unwrap().abs() < 1e-15);
        let c2 = Configuration::from_i64_points(1, &[&[1, 0], &[1, 1]]).unwrap();
        assert!(kn_value(&c2, &HermitianScaling::identity(2)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_is_balanced() {
        for n in 1..=3 {
            let r = kn_minimize(&Configuration::coordinate_points(n), 1e-10, 100).unwrap();
            assert_eq!(r.status, KNStatus::Converged);
            assert_eq!(r.iterations, 0);
            assert_eq!(r.value, 0.0);
        }
    }

    #[test]
    fn square_configuration_converges_to_orthogonal() {
        let c2 = Configuration::from_i64_points(2, &[&[1, 0, 0], &[1, 1, 0], &[1, 2, 3]]).unwrap();
        let r = kn_minimize(&c2, 1e-10, 100).unwrap();
        assert_eq!(r.status, KNStatus::Converged);
        let root = r.scaling.sqrt();
        let cols: Vec<Vec<Complex64>> = c2.vectors().map(|v| root.apply(&v.to_complex())).collect();
        for i in 0..3 {
            for j in 0..i {
                let cos = crate::linalg::cdot(&cols[i], &cols[j]).norm() / (cnorm(&cols[i]) * cnorm(&cols[j]));
                assert!(cos < 1e-8, "{cos}");
            }
        }
    }

    #[test]
    fn unstable_diverges() {
        let c = Configuration::new(
            1,
            [(RationalVector::from_i64s(&[1, 0]), int(2)), (RationalVector::from_i64s(&[0, 1]), int(1))],
        )
        .unwrap();
        let r = kn_minimize(&c, 1e-10, 5000).unwrap();
        assert_eq!(r.status, KNStatus::DivergentUnstable);
        let degenerate = Configuration::from_i64_points(2, &[&[1, 0, 0], &[0, 1, 0]]).unwrap();
        assert_eq!(kn_minimize(&degenerate, 1e-10, 10).unwrap().status, KNStatus::DivergentUnstable);
    }

    #[test]
    fn descent_is_monotone() {
        let c = Configuration::from_i64_points(1, &[&[1, 0], &[0, 1], &[1, 1], &[2, -1], &[1, 3]]).unwrap();
        let r = kn_minimize(&c, 1e-12, 500).unwrap();
        assert_eq!(r.status, KNStatus::Converged);
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn split_recursion_is_exact_for_graded_cycles() {
        let c = Configuration::from_i64_points(1, &[&[1, 0], &[1, 1]]).unwrap();
        let s = InvariantSection::new(&c, SectionChoice::Decomposition).unwrap();
        let a = arch_local_height(&c, &s, 1e-10, 100).unwrap();
        assert_eq!(a.interval.certificate, Certificate::ExactDeterminant);
        assert!(a.interval.upper.abs() < 1e-15);

        let c = Configuration::new(
            1,
            [
                (RationalVector::from_i64s(&[1, 0]), int(2)),
                (RationalVector::from_i64s(&[0, 1]), int(1)),
                (RationalVector::from_i64s(&[1, 1]), int(1)),
            ],
        )
        .unwrap();
        let s = InvariantSection::new(&c, SectionChoice::Decomposition).unwrap();
        let a = arch_local_height(&c, &s, 1e-10, 100).unwrap();
        assert_eq!(a.interval.certificate, Certificate::ExactDeterminant);
        assert!(a.interval.upper.abs() < 1e-14, "{:?}", a);
    }

    #[test]
    fn gram_blocks_match_projection() {
        let mut e = Echelon::new(Rationals, 2);
        e.insert(&[int(1), int(1)]);
        let (gw, gq) = gram_blocks(&RationalMatrix::identity(2), &e).unwrap();
        assert_eq!(gw[(0, 0)], int(2));
        // distance from e2 to the line through (1,1) is 1/sqrt(2)
        assert_eq!(gq[(0, 0)], crate::linalg::rat(1, 2));
    }
}
