//! Writing a semistable configuration as a nonnegative rational combination
//! of bases, and the witness split used for stable configurations.
//!
//! The recursion on the number of distinct vectors:
//!
//! * if some proper subspace W is tight (mass exactly d*k/(N+1)), decompose
//!   the part inside W and the image of the rest in Q^{N+1}/W separately,
//!   then glue a basis of W to lifts of quotient bases;
//! * otherwise subtract the largest multiple t of a basis that keeps every
//!   mass inequality and every multiplicity nonnegative. Afterwards either a
//!   multiplicity is zero or some subspace became tight.
//!
//! Quotient images of distinct vectors may coincide projectively. Such
//! vectors are merged into one item that remembers its members, and the
//! members are consumed in order whenever the merged item is used, so every
//! output term refers to original vectors only.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arch::HermitianScaling;
use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::linalg::{
    cdot, cnorm, lcm_of_denominators, serde_rational, Echelon, Rational, RationalMatrix, RationalVector, Rationals,
};
use crate::stability::{
    self, check_stability, classify, compare_to_bound, flat_mass, flats, Flat, StabilityStatus, SubspaceWitness,
};

/// Numerical threshold below which two scaled vectors count as orthogonal.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisTerm {
    #[serde(with = "serde_rational")]
    pub coefficient: Rational,
    /// Indices into the dictionary, ascending.
    pub basis: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDecomposition {
    pub dictionary: Vec<RationalVector>,
    pub terms: Vec<BasisTerm>,
}

impl BasisDecomposition {
    /// Multiplicity of each dictionary vector implied by the terms.
    pub fn reconstruct(&self) -> Vec<Rational> {
        let mut m = vec![Rational::zero(); self.dictionary.len()];
        for t in &self.terms {
            for &i in &t.basis {
                m[i] += &t.coefficient;
            }
        }
        m
    }

    pub fn total_coefficient(&self) -> Rational {
        self.terms.iter().map(|t| t.coefficient.clone()).sum()
    }

    /// Checks full rank of every term and exact reconstruction of `config`.
    pub fn validate(&self, config: &Configuration) -> Result<()> {
        let dim = config.dim();
        if self.dictionary.len() != config.len() || self.dictionary.iter().zip(config.vectors()).any(|(a, b)| a != b) {
            return Err(Error::Internal("dictionary does not match configuration"));
        }
        for t in &self.terms {
            if t.basis.len() != dim || t.coefficient <= Rational::zero() {
                return Err(Error::Internal("malformed basis term"));
            }
            let mut e = Echelon::new(Rationals, dim);
            for &i in &t.basis {
                let v = self.dictionary.get(i).ok_or(Error::IndexOutOfRange(i))?;
                if !e.insert(v.entries()) {
                    return Err(Error::DependentBasis);
                }
            }
        }
        if self.reconstruct().iter().zip(config.multiplicities()).any(|(a, b)| a != b) {
            return Err(Error::Internal("decomposition does not reconstruct the configuration"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Item {
    vector: Vec<Rational>,
    /// (original index, remaining multiplicity), consumed front to back.
    members: Vec<(usize, Rational)>,
}

impl Item {
    fn mult(&self) -> Rational {
        self.members.iter().map(|(_, m)| m.clone()).sum()
    }

    /// Removes `amount` from the members in order; returns the pieces taken.
    fn consume(&mut self, amount: &Rational) -> Vec<(Rational, Vec<usize>)> {
        let mut left = amount.clone();
        let mut out = Vec::new();
        for (idx, m) in self.members.iter_mut() {
            if left.is_zero() {
                break;
            }
            let take = if *m < left { m.clone() } else { left.clone() };
            if take.is_zero() {
                continue;
            }
            *m -= &take;
            left -= &take;
            out.push((take, vec![*idx]));
        }
        self.members.retain(|(_, m)| !m.is_zero());
        out
    }
}

type Pieces = Vec<(Rational, Vec<usize>)>;

/// Couples two weighted lists of equal total along [0, total), concatenating
/// the index lists of overlapping segments.
fn couple(a: Pieces, b: Pieces) -> Result<Pieces> {
    let ta: Rational = a.iter().map(|p| p.0.clone()).sum();
    let tb: Rational = b.iter().map(|p| p.0.clone()).sum();
    if ta != tb {
        return Err(Error::Internal("coupled decompositions have different totals"));
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (
        a.first().map(|p| p.0.clone()).unwrap_or_default(),
        b.first().map(|p| p.0.clone()).unwrap_or_default(),
    );
    while i < a.len() && j < b.len() {
        let step = if ra < rb { ra.clone() } else { rb.clone() };
        if !step.is_zero() {
            let mut idx = a[i].1.clone();
            idx.extend_from_slice(&b[j].1);
            out.push((step.clone(), idx));
        }
        ra -= &step;
        rb -= &step;
        if ra.is_zero() {
            i += 1;
            if let Some(p) = a.get(i) {
                ra = p.0.clone();
            }
        }
        if rb.is_zero() {
            j += 1;
            if let Some(p) = b.get(j) {
                rb = p.0.clone();
            }
        }
    }
    Ok(out)
}

fn item_flats(dim: usize, items: &[Item]) -> Vec<Flat<Rational>> {
    let vs: Vec<Vec<Rational>> = items.iter().map(|it| it.vector.clone()).collect();
    flats(&Rationals, dim, &vs)
}

fn first_tight(fl: &[Flat<Rational>], mults: &[Rational], dim: usize) -> Option<usize> {
    let degree: Rational = mults.iter().cloned().sum();
    fl.iter().position(|f| compare_to_bound(&flat_mass(f, mults), f.rank, &degree, dim).is_eq())
}

/// Largest t keeping the configuration minus t*basis semistable with
/// nonnegative multiplicities. Each flat W of rank k gives
/// t * (k - |B ∩ W|) <= d*k/(N+1) - mass(W).
fn max_multiple(fl: &[Flat<Rational>], mults: &[Rational], basis: &[usize], dim: usize) -> Rational {
    let degree: Rational = mults.iter().cloned().sum();
    let n1 = Rational::from_integer(BigInt::from(dim));
    let mut t = basis.iter().map(|&i| mults[i].clone()).min().expect("nonempty basis");
    for f in fl {
        let inside = basis.iter().filter(|i| f.members.binary_search(i).is_ok()).count();
        let coef = f.rank - inside;
        if coef == 0 {
            continue;
        }
        let k = Rational::from_integer(BigInt::from(f.rank));
        let slack = &degree * &k / &n1 - flat_mass(f, mults);
        let bound = slack / Rational::from_integer(BigInt::from(coef));
        if bound < t {
            t = bound;
        }
    }
    t
}

/// Greedy basis: descending multiplicity, ties broken by ascending
/// lexicographic order of the entries scaled to leading entry 1.
fn greedy_basis(dim: usize, items: &[Item]) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mults: Vec<Rational> = items.iter().map(Item::mult).collect();
    let keys: Vec<Vec<Rational>> = items
        .iter()
        .map(|it| {
            let lead = it.vector.iter().find(|x| !x.is_zero()).cloned().unwrap_or_else(Rational::one);
            it.vector.iter().map(|x| x / &lead).collect()
        })
        .collect();
    order.sort_by(|&a, &b| mults[b].cmp(&mults[a]).then_with(|| keys[a].cmp(&keys[b])));
    let mut e = Echelon::new(Rationals, dim);
    let mut chosen = Vec::new();
    for i in order {
        if e.insert(&items[i].vector) {
            chosen.push(i);
            if chosen.len() == dim {
                chosen.sort_unstable();
                return Some(chosen);
            }
        }
    }
    None
}

fn decompose_items(dim: usize, mut items: Vec<Item>, budget: &mut usize) -> Result<Pieces> {
    items.retain(|it| !it.mult().is_zero());
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if *budget == 0 {
        return Err(Error::Internal("decomposition recursion exceeded its step guard"));
    }
    *budget -= 1;

    let fl = item_flats(dim, &items);
    let mults: Vec<Rational> = items.iter().map(Item::mult).collect();
    if classify(&fl, &mults, dim).0 == StabilityStatus::Unstable {
        return Err(Error::Internal("unstable configuration inside decomposition"));
    }

    if let Some(ti) = first_tight(&fl, &mults, dim) {
        let w = &fl[ti];
        let mut e = Echelon::new(Rationals, dim);
        for row in &w.basis {
            e.insert(row);
        }
        let mut inner = Vec::new();
        let mut outer: Vec<Item> = Vec::new();
        for (i, it) in items.into_iter().enumerate() {
            if w.members.binary_search(&i).is_ok() {
                inner.push(Item { vector: e.coordinates(&it.vector), members: it.members });
            } else {
                let q = RationalVector::new(e.quotient_coordinates(&it.vector));
                let key = q.projective_key().ok_or(Error::Internal("outside vector maps to zero"))?;
                match outer.iter_mut().find(|o| RationalVector::new(o.vector.clone()).projective_key().as_ref() == Some(&key)) {
                    Some(o) => o.members.extend(it.members),
                    None => outer.push(Item { vector: q.into_entries(), members: it.members }),
                }
            }
        }
        let a = decompose_items(w.rank, inner, budget)?;
        let b = decompose_items(dim - w.rank, outer, budget)?;
        return couple(a, b);
    }

    let basis = greedy_basis(dim, &items).ok_or(Error::Internal("semistable configuration spans a proper subspace"))?;
    let t = max_multiple(&fl, &mults, &basis, dim);
    if t <= Rational::zero() {
        return Err(Error::Internal("non-positive basis multiple without a tight subspace"));
    }
    let mut pieces: Pieces = vec![(t.clone(), Vec::new())];
    for &i in &basis {
        let taken = items[i].consume(&t);
        pieces = couple(pieces, taken)?;
    }
    let mut rest = decompose_items(dim, items, budget)?;
    pieces.append(&mut rest);
    Ok(pieces)
}

fn into_terms(pieces: Pieces) -> Vec<BasisTerm> {
    let mut terms: Vec<BasisTerm> = Vec::new();
    for (c, mut b) in pieces {
        b.sort_unstable();
        match terms.iter_mut().find(|t| t.basis == b) {
            Some(t) => t.coefficient += c,
            None => terms.push(BasisTerm { coefficient: c, basis: b }),
        }
    }
    terms
}

/// Decomposes a semistable configuration into bases.
pub fn decompose(config: &Configuration) -> Result<BasisDecomposition> {
    let verdict = check_stability(config)?;
    if verdict.status == StabilityStatus::Unstable {
        return Err(Error::Unstable { witness: verdict.witness.expect("unstable verdict has a witness") });
    }
    let items: Vec<Item> = config
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| Item { vector: p.vector.entries().to_vec(), members: vec![(i, p.multiplicity.clone())] })
        .collect();
    let mut budget = 10 * config.len().max(1);
    let pieces = decompose_items(config.dim(), items, &mut budget)?;
    let out = BasisDecomposition { dictionary: config.vectors().cloned().collect(), terms: into_terms(pieces) };
    out.validate(config)?;
    Ok(out)
}

/// A tight proper subspace of smallest dimension (then lexicographically
/// first member set), if any.
pub fn find_tight_subspace(config: &Configuration) -> Result<Option<SubspaceWitness>> {
    let fl = stability::rational_flats(config)?;
    let mults = stability::multiplicities(config);
    Ok(first_tight(&fl, &mults, config.dim()).map(|i| stability::witness_of(&fl[i], &mults)))
}

fn tight_echelon(config: &Configuration, w: &SubspaceWitness) -> Result<Echelon<Rationals>> {
    let mut e = Echelon::new(Rationals, config.dim());
    for b in &w.basis {
        if b.len() != config.dim() {
            return Err(Error::DimensionMismatch { expected: config.dim(), found: b.len() });
        }
        e.insert(b.entries());
    }
    let mass = stability::mass_in_subspace(config, w);
    let k = e.rank();
    if k == 0 || k >= config.dim() || !compare_to_bound(&mass, k, config.degree(), config.dim()).is_eq() {
        let bound = config.degree() * Rational::from_integer(BigInt::from(k))
            / Rational::from_integer(BigInt::from(config.dim()));
        return Err(Error::NotTight { mass: alloc::format!("{mass}"), bound: alloc::format!("{bound}") });
    }
    Ok(e)
}

fn assert_semistable(c: &Configuration) -> Result<()> {
    if !check_stability(c)?.status.is_semistable() {
        return Err(Error::Internal("restriction or quotient of a tight subspace is unstable"));
    }
    Ok(())
}

/// The part of `config` inside the tight subspace W, in W's echelon coordinates.
pub fn restrict_to(config: &Configuration, w: &SubspaceWitness) -> Result<Configuration> {
    let e = tight_echelon(config, w)?;
    let pts: Vec<(RationalVector, Rational)> = config
        .points()
        .iter()
        .filter(|p| e.contains(p.vector.entries()))
        .map(|p| (RationalVector::new(e.coordinates(p.vector.entries())), p.multiplicity.clone()))
        .collect();
    let out = Configuration::new(e.rank() - 1, pts)?;
    assert_semistable(&out)?;
    Ok(out)
}

/// Images of the vectors outside the tight subspace W in Q^{N+1}/W, written
/// in the basis of standard vectors complementary to W's pivots.
pub fn quotient_by(config: &Configuration, w: &SubspaceWitness) -> Result<Configuration> {
    let e = tight_echelon(config, w)?;
    let pts: Vec<(RationalVector, Rational)> = config
        .points()
        .iter()
        .filter(|p| !e.contains(p.vector.entries()))
        .map(|p| (RationalVector::new(e.quotient_coordinates(p.vector.entries())), p.multiplicity.clone()))
        .collect();
    let out = Configuration::new(config.dim() - e.rank() - 1, pts)?;
    assert_semistable(&out)?;
    Ok(out)
}

/// Largest t >= 0 such that subtracting t from each indicated multiplicity
/// keeps every multiplicity nonnegative and every subspace inequality valid.
pub fn max_basis_multiple(config: &Configuration, basis: &[usize]) -> Result<Rational> {
    let dim = config.dim();
    if basis.len() != dim {
        return Err(Error::DependentBasis);
    }
    let mut e = Echelon::new(Rationals, dim);
    for &i in basis {
        let p = config.points().get(i).ok_or(Error::IndexOutOfRange(i))?;
        if !e.insert(p.vector.entries()) {
            return Err(Error::DependentBasis);
        }
    }
    let fl = stability::rational_flats(config)?;
    let mults = stability::multiplicities(config);
    let mut sorted = basis.to_vec();
    sorted.sort_unstable();
    Ok(max_multiple(&fl, &mults, &sorted, dim))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableWitnessSplit {
    /// N+1 independent configuration indices; the first two are not
    /// orthogonal after scaling.
    pub witness: Vec<usize>,
    /// |cos| of the angle between the first two scaled witness vectors.
    pub overlap: f64,
    /// Amount removed from each witness multiplicity.
    #[serde(with = "serde_rational")]
    pub removed: Rational,
    pub remainder: Configuration,
}

/// Picks N+1 independent vectors, starting from the pair with the largest
/// overlap after applying the square root of `scaling`, and removes 1/(L (N+1)^2) of each from the
/// configuration, where L clears the multiplicity denominators. For integral
/// cycles L = 1 and each inequality has slack at least 1/(N+1), which the
/// removal cannot use up.
pub fn stable_witness_split(config: &Configuration, scaling: &HermitianScaling) -> Result<StableWitnessSplit> {
    let dim = config.dim();
    if scaling.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: scaling.dim() });
    }
    if check_stability(config)?.status != StabilityStatus::Stable {
        return Err(Error::NotStable);
    }
    let root = scaling.sqrt();
    let scaled: Vec<Vec<Complex64>> = config.vectors().map(|v| root.apply(&v.to_complex())).collect();

    let cos = |i: usize, j: usize| cdot(&scaled[i], &scaled[j]).norm() / (cnorm(&scaled[i]) * cnorm(&scaled[j]));
    let mut best = (0, 0, f64::NEG_INFINITY);
    for i in 0..config.len() {
        for j in (i + 1)..config.len() {
            let c = cos(i, j);
            if c > best.2 {
                best = (i, j, c);
            }
        }
    }
    let (first, second, overlap) = best;
    if dim > 1 && overlap <= ORTHOGONALITY_TOLERANCE {
        return Err(Error::Internal("scaled configuration vectors are pairwise orthogonal"));
    }

    let mut e = Echelon::new(Rationals, dim);
    let vecs: Vec<&RationalVector> = config.vectors().collect();
    let mut witness = vec![first];
    e.insert(vecs[first].entries());
    if dim > 1 {
        if !e.insert(vecs[second].entries()) {
            return Err(Error::Internal("distinct configuration vectors are dependent"));
        }
        witness.push(second);
    }
    for (j, v) in vecs.iter().enumerate() {
        if witness.len() == dim {
            break;
        }
        if !witness.contains(&j) && e.insert(v.entries()) {
            witness.push(j);
        }
    }
    if witness.len() != dim {
        return Err(Error::Internal("stable configuration does not span"));
    }

    let l = lcm_of_denominators(config.multiplicities());
    let n1 = BigInt::from(dim);
    let removed = Rational::new(BigInt::one(), l * &n1 * &n1);
    let remainder = Configuration::new(
        config.ambient(),
        config.points().iter().enumerate().map(|(i, p)| {
            let m = if witness.contains(&i) { &p.multiplicity - &removed } else { p.multiplicity.clone() };
            (p.vector.clone(), m)
        }),
    )?;
    if !check_stability(&remainder)?.status.is_semistable() {
        return Err(Error::Internal("witness remainder is unstable"));
    }
    Ok(StableWitnessSplit { witness, overlap, removed, remainder })
}

/// Matrix whose columns are the given dictionary vectors.
pub fn basis_matrix(dictionary: &[RationalVector], basis: &[usize]) -> Result<RationalMatrix> {
    let cols: Vec<RationalVector> = basis.iter().map(|&i| dictionary[i].clone()).collect();
    RationalMatrix::from_columns(&cols)
}
