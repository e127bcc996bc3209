//! Chow (semi)stability of zero-cycles by the subspace-mass criterion.
//!
//! A degree-d cycle in P^N is semistable iff every k-dimensional subspace
//! W of the (N+1)-dimensional vector space carries mass at most d*k/(N+1),
//! and stable iff every such inequality is strict.
//!
//! Only spans of subsets of the configuration vectors need checking: for an
//! arbitrary W, the span W' of the configuration vectors lying in W has
//! dim W' <= dim W and the same mass, so W' violates (or meets) the bound
//! whenever W does. Spans of subsets are exactly the flats of the vector
//! matroid, which [`flats`] enumerates by closure without visiting all
//! 2^l subsets.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::linalg::{serde_rational, Echelon, Field, Rational, RationalVector, Rationals};

/// Largest number of distinct vectors accepted for exact enumeration.
pub const MAX_DISTINCT_VECTORS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceWitness {
    /// Reduced row echelon basis of W.
    pub basis: Vec<RationalVector>,
    pub dim: usize,
    /// Total multiplicity of configuration vectors lying in W.
    #[serde(with = "serde_rational")]
    pub mass: Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityStatus {
    Stable,
    StrictlySemistable,
    Unstable,
}

impl StabilityStatus {
    pub fn is_semistable(self) -> bool {
        !matches!(self, StabilityStatus::Unstable)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub status: StabilityStatus,
    /// Violating subspace when unstable, a tight one when strictly semistable.
    pub witness: Option<SubspaceWitness>,
}

impl StabilityVerdict {
    /// Re-checks the witness against `config`.
    pub fn is_consistent_with(&self, config: &Configuration) -> bool {
        let Some(w) = &self.witness else {
            return self.status == StabilityStatus::Stable;
        };
        if w.dim == 0 || w.dim > config.ambient() || w.basis.len() != w.dim {
            return false;
        }
        if mass_in_subspace(config, w) != w.mass {
            return false;
        }
        let lhs = &w.mass * Rational::from_integer(BigInt::from(config.dim()));
        let rhs = config.degree() * Rational::from_integer(BigInt::from(w.dim));
        match self.status {
            StabilityStatus::Unstable => lhs > rhs,
            StabilityStatus::StrictlySemistable => lhs == rhs,
            StabilityStatus::Stable => false,
        }
    }
}

/// A flat of the vector matroid: a subset of vectors closed under span.
#[derive(Clone, Debug)]
pub(crate) struct Flat<E> {
    /// Sorted indices of the vectors lying in the span.
    pub members: Vec<usize>,
    pub rank: usize,
    /// Reduced echelon basis of the span.
    pub basis: Vec<Vec<E>>,
}

/// All proper flats (rank <= dim - 1), sorted by rank then member list.
pub(crate) fn flats<F: Field + Clone>(field: &F, dim: usize, vectors: &[Vec<F::Elem>]) -> Vec<Flat<F::Elem>> {
    let closure = |e: &Echelon<F>| -> Vec<usize> {
        (0..vectors.len()).filter(|&j| e.contains(&vectors[j])).collect()
    };
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out: Vec<Flat<F::Elem>> = Vec::new();
    let mut frontier: Vec<Echelon<F>> = Vec::new();
    for v in vectors {
        let mut e = Echelon::new(field.clone(), dim);
        if !e.insert(v) {
            continue;
        }
        let members = closure(&e);
        if seen.insert(members.clone()) {
            frontier.push(e);
        }
    }
    while let Some(e) = frontier.pop() {
        let members = closure(&e);
        if e.rank() >= dim {
            continue;
        }
        for j in 0..vectors.len() {
            if members.binary_search(&j).is_ok() {
                continue;
            }
            let mut next = e.clone();
            next.insert(&vectors[j]);
            let m = closure(&next);
            if seen.insert(m) {
                frontier.push(next);
            }
        }
        out.push(Flat { members, rank: e.rank(), basis: e.rows().to_vec() });
    }
    out.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.members.cmp(&b.members)));
    out
}

pub(crate) fn flat_mass<E>(flat: &Flat<E>, mults: &[Rational]) -> Rational {
    flat.members.iter().map(|&i| mults[i].clone()).sum()
}

/// Compares mass(W) with d*dim(W)/(N+1) exactly.
pub(crate) fn compare_to_bound(mass: &Rational, rank: usize, degree: &Rational, dim: usize) -> core::cmp::Ordering {
    let lhs = mass * Rational::from_integer(BigInt::from(dim));
    let rhs = degree * Rational::from_integer(BigInt::from(rank));
    lhs.cmp(&rhs)
}

/// Status plus the index of the witnessing flat.
pub(crate) fn classify<E>(flats: &[Flat<E>], mults: &[Rational], dim: usize) -> (StabilityStatus, Option<usize>) {
    use core::cmp::Ordering::*;
    let degree: Rational = mults.iter().cloned().sum();
    let mut tight = None;
    for (i, f) in flats.iter().enumerate() {
        match compare_to_bound(&flat_mass(f, mults), f.rank, &degree, dim) {
            Greater => return (StabilityStatus::Unstable, Some(i)),
            Equal if tight.is_none() => tight = Some(i),
            _ => {}
        }
    }
    match tight {
        Some(i) => (StabilityStatus::StrictlySemistable, Some(i)),
        None => (StabilityStatus::Stable, None),
    }
}

pub(crate) fn guard(config: &Configuration) -> Result<()> {
    if config.len() > MAX_DISTINCT_VECTORS {
        return Err(Error::TooManyVectors { count: config.len(), limit: MAX_DISTINCT_VECTORS });
    }
    Ok(())
}

pub(crate) fn rational_flats(config: &Configuration) -> Result<Vec<Flat<Rational>>> {
    guard(config)?;
    let vectors: Vec<Vec<Rational>> = config.vectors().map(|v| v.entries().to_vec()).collect();
    Ok(flats(&Rationals, config.dim(), &vectors))
}

pub(crate) fn multiplicities(config: &Configuration) -> Vec<Rational> {
    config.multiplicities().cloned().collect()
}

pub(crate) fn witness_of(flat: &Flat<Rational>, mults: &[Rational]) -> SubspaceWitness {
    SubspaceWitness {
        basis: flat.basis.iter().cloned().map(RationalVector::new).collect(),
        dim: flat.rank,
        mass: flat_mass(flat, mults),
    }
}

/// Total multiplicity of the configuration vectors inside span(W.basis).
pub fn mass_in_subspace(config: &Configuration, w: &SubspaceWitness) -> Rational {
    let mut e = Echelon::new(Rationals, config.dim());
    for b in &w.basis {
        if b.len() == config.dim() {
            e.insert(b.entries());
        }
    }
    config
        .points()
        .iter()
        .filter(|p| e.contains(p.vector.entries()))
        .fold(Rational::zero(), |acc, p| acc + &p.multiplicity)
}

/// Every distinct proper subspace spanned by a nonempty subset of the
/// configuration vectors, with its mass.
pub fn candidate_subspaces(config: &Configuration) -> Result<Vec<SubspaceWitness>> {
    let fl = rational_flats(config)?;
    let mults = multiplicities(config);
    Ok(fl.iter().map(|f| witness_of(f, &mults)).collect())
}

pub fn check_stability(config: &Configuration) -> Result<StabilityVerdict> {
    let fl = rational_flats(config)?;
    let mults = multiplicities(config);
    let (status, idx) = classify(&fl, &mults, config.dim());
    Ok(StabilityVerdict { status, witness: idx.map(|i| witness_of(&fl[i], &mults)) })
}

/// Merges projectively equal vectors over F_p and decides semistability.
pub(crate) fn residual_status(
    field: &crate::linalg::PrimeField,
    dim: usize,
    vectors: &[Vec<u64>],
    mults: &[Rational],
) -> (StabilityStatus, Vec<(Vec<u64>, Rational)>) {
    let mut merged: Vec<(Vec<u64>, Rational)> = Vec::new();
    for (v, m) in vectors.iter().zip(mults) {
        let Some(lead) = v.iter().find(|x| **x != 0) else {
            continue;
        };
        let inv = field.inv(lead);
        let key: Vec<u64> = v.iter().map(|x| field.mul(x, &inv)).collect();
        match merged.iter_mut().find(|(k, _)| *k == key) {
            Some((_, acc)) => *acc += m,
            None => merged.push((key, m.clone())),
        }
    }
    let vs: Vec<Vec<u64>> = merged.iter().map(|(v, _)| v.clone()).collect();
    let ms: Vec<Rational> = merged.iter().map(|(_, m)| m.clone()).collect();
    let degree: Rational = mults.iter().cloned().sum();
    let lost: Rational = &degree - ms.iter().cloned().sum::<Rational>();
    if !lost.is_zero() {
        // A vector reduced to zero; the reduced cycle is not a cycle of degree d.
        return (StabilityStatus::Unstable, merged);
    }
    let fl = flats(field, dim, &vs);
    (classify(&fl, &ms, dim).0, merged)
}
