//! Exact rational linear algebra and the small amount of complex floating
//! point linear algebra needed by the analytic half of the crate.
//!
//! Rational matrices are eliminated fraction-free (Bareiss) after clearing
//! row denominators, so intermediate growth stays polynomial. Subspace
//! bookkeeping goes through [`Echelon`], which is generic over a [`Field`]
//! so the same code decides incidences over Q and over a residue field.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
// shadowed by inherent float methods when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`. A zero denominator is an error.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::ParseRational(t.into());
    match t.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => BigInt::from_str(t).map(Rational::from_integer).map_err(|_| bad()),
    }
}

/// Natural log of |x| for an arbitrarily large integer.
pub fn ln_abs_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let head: BigInt = x.abs() >> (shift as usize);
    head.to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * core::f64::consts::LN_2
}

/// Natural log of |q|; `-inf` for zero.
pub fn ln_abs(q: &Rational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_abs_bigint(q.numer()) - ln_abs_bigint(q.denom())
}

pub fn to_f64(q: &Rational) -> f64 {
    let v = q.to_f64().unwrap_or(f64::NAN);
    if v.is_finite() {
        v
    } else {
        // Overflowing parts: go through logs and keep the sign.
        let mag = ln_abs(q).exp();
        if q.is_negative() { -mag } else { mag }
    }
}

/// p-adic valuation of a nonzero integer.
pub fn valuation_int(x: &BigInt, p: u64) -> i64 {
    debug_assert!(!x.is_zero());
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        x = q;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn valuation(q: &Rational, p: u64) -> i64 {
    valuation_int(q.numer(), p) - valuation_int(q.denom(), p)
}

pub fn lcm_of_denominators<'a>(qs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    qs.into_iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Minimal field interface used by [`Echelon`] and the subset-span machinery.
pub trait Field {
    type Elem: Clone + PartialEq + fmt::Debug;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = Rational;
    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        Rational::one()
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a - b
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn inv(&self, a: &Rational) -> Rational {
        a.recip()
    }
}

/// The prime field F_p with elements stored as reduced `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !crate::nonarch::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Self { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Residue of a p-integral rational.
    pub fn reduce(&self, q: &Rational) -> u64 {
        let p = BigInt::from(self.p);
        let n = q.numer().mod_floor(&p).to_u64().unwrap_or(0);
        let d = q.denom().mod_floor(&p).to_u64().unwrap_or(0);
        debug_assert!(d != 0, "rational is not p-integral");
        self.mul(&n, &self.inv(&d))
    }

    fn pow(&self, mut b: u64, mut e: u64) -> u64 {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }
}

impl Field for PrimeField {
    type Elem = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % self.p as u128) as u64
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + self.p as u128 - *b as u128) % self.p as u128) as u64
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }
    fn inv(&self, a: &u64) -> u64 {
        self.pow(*a, self.p - 2)
    }
}

/// Incrementally maintained reduced row echelon basis of a subspace.
///
/// Rows are kept fully reduced and sorted by pivot column, so two
/// `Echelon`s span the same subspace iff their rows are equal.
#[derive(Clone, Debug)]
pub struct Echelon<F: Field> {
    field: F,
    dim: usize,
    rows: Vec<Vec<F::Elem>>,
    pivots: Vec<usize>,
}

impl<F: Field + Clone> Echelon<F> {
    pub fn new(field: F, dim: usize) -> Self {
        Self { field, dim, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<F::Elem>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// `v` minus its component along the pivot columns.
    pub fn reduce(&self, v: &[F::Elem]) -> Vec<F::Elem> {
        let f = &self.field;
        let mut r = v.to_vec();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            if f.is_zero(&r[c]) {
                continue;
            }
            let coef = r[c].clone();
            for (x, y) in r.iter_mut().zip(row) {
                *x = f.sub(x, &f.mul(&coef, y));
            }
        }
        r
    }

    pub fn contains(&self, v: &[F::Elem]) -> bool {
        let f = &self.field;
        self.reduce(v).iter().all(|x| f.is_zero(x))
    }

    /// Adds `v`; returns false if it was already in the span.
    pub fn insert(&mut self, v: &[F::Elem]) -> bool {
        let f = self.field.clone();
        let mut r = self.reduce(v);
        let Some(c) = r.iter().position(|x| !f.is_zero(x)) else {
            return false;
        };
        let inv = f.inv(&r[c]);
        for x in r.iter_mut() {
            *x = f.mul(x, &inv);
        }
        for row in self.rows.iter_mut() {
            if f.is_zero(&row[c]) {
                continue;
            }
            let coef = row[c].clone();
            for (x, y) in row.iter_mut().zip(&r) {
                *x = f.sub(x, &f.mul(&coef, y));
            }
        }
        let at = self.pivots.partition_point(|&p| p < c);
        self.pivots.insert(at, c);
        self.rows.insert(at, r);
        true
    }

    /// Coordinates of `v` (assumed in the span) in the echelon basis.
    pub fn coordinates(&self, v: &[F::Elem]) -> Vec<F::Elem> {
        self.pivots.iter().map(|&c| v[c].clone()).collect()
    }

    /// Image of `v` in the quotient by this subspace, written in the basis of
    /// standard vectors at the non-pivot columns.
    pub fn quotient_coordinates(&self, v: &[F::Elem]) -> Vec<F::Elem> {
        let r = self.reduce(v);
        (0..self.dim).filter(|c| !self.pivots.contains(c)).map(|c| r[c].clone()).collect()
    }
}

/// A vector of exact rationals; a projective point when nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalVector(Vec<Rational>);

impl RationalVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        Self(entries)
    }

    pub fn from_i64s(entries: &[i64]) -> Self {
        Self(entries.iter().map(|&x| int(x)).collect())
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![Rational::zero(); dim];
        v[i] = Rational::one();
        Self(v)
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Rational> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self(self.0.iter().map(|x| x * c).collect())
    }

    /// Representative with first nonzero entry equal to 1.
    pub fn projective_key(&self) -> Option<Self> {
        let lead = self.0.iter().find(|x| !x.is_zero())?;
        Some(self.scale(&lead.recip()))
    }

    /// Multiple of this vector with coprime integer entries and positive
    /// leading entry.
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        let l = lcm_of_denominators(&self.0);
        let ints: Vec<BigInt> = self.0.iter().map(|x| (x * &l).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if g.is_zero() {
            return ints;
        }
        let sign = match ints.iter().find(|x| !x.is_zero()) {
            Some(x) if x.is_negative() => -BigInt::one(),
            _ => BigInt::one(),
        };
        ints.iter().map(|x| x / &g * &sign).collect()
    }

    pub fn dot(&self, other: &Self) -> Rational {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> Rational {
        self.dot(self)
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.0.iter().map(|x| Complex64::new(to_f64(x), 0.0)).collect()
    }

    /// Lexicographic comparison of entries.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl From<Vec<Rational>> for RationalVector {
    fn from(v: Vec<Rational>) -> Self {
        Self(v)
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|x| alloc::format!("{x}")))
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let raw = Vec::<alloc::string::String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect::<core::result::Result<Vec<_>, _>>()
            .map(Self)
    }
}

/// Serde adapter writing a rational as the string `"p/q"`.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(q)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<Rational, D::Error> {
        let raw = alloc::string::String::deserialize(d)?;
        parse_rational(&raw).map_err(serde::de::Error::custom)
    }
}

/// Dense exact rational matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: &[RationalVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, RationalVector::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r.entries());
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_columns(cols: &[RationalVector]) -> Result<Self> {
        Ok(Self::from_rows(cols)?.transpose())
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let rs: Vec<RationalVector> = rows.iter().map(|r| RationalVector::from_i64s(r)).collect();
        Self::from_rows(&rs).expect("ragged rows")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> RationalVector {
        RationalVector((0..self.rows).map(|i| self[(i, j)].clone()).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &RationalVector) -> Result<RationalVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok(RationalVector(
            (0..self.rows).map(|i| self.row(i).iter().zip(v.entries()).map(|(a, b)| a * b).sum()).collect(),
        ))
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let piv = (c..n).find(|&r| !a[(r, c)].is_zero()).ok_or(Error::RankDeficient)?;
            a.swap_rows(c, piv);
            inv.swap_rows(c, piv);
            let s = a[(c, c)].recip();
            for j in 0..n {
                a[(c, j)] *= &s;
                inv[(c, j)] *= &s;
            }
            for r in 0..n {
                if r == c || a[(r, c)].is_zero() {
                    continue;
                }
                let f = a[(r, c)].clone();
                for j in 0..n {
                    let x = &f * &a[(c, j)];
                    a[(r, j)] -= x;
                    let y = &f * &inv[(c, j)];
                    inv[(r, j)] -= y;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Rows scaled to integers, plus the product of the scale factors.
    fn integer_rows(&self) -> (Vec<Vec<BigInt>>, BigInt) {
        let mut scale = BigInt::one();
        let rows = (0..self.rows)
            .map(|i| {
                let l = lcm_of_denominators(self.row(i));
                scale *= &l;
                self.row(i).iter().map(|x| (x * &l).to_integer()).collect()
            })
            .collect();
        (rows, scale)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix(DMatrix::from_fn(self.rows, self.cols, |i, j| Complex64::new(to_f64(&self[(i, j)]), 0.0)))
    }
}

impl core::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

/// Fraction-free (Bareiss) forward elimination. Returns the rank, the
/// eliminated integer matrix and the number of row swaps.
fn bareiss(mut a: Vec<Vec<BigInt>>, cols: usize) -> (usize, Vec<Vec<BigInt>>, usize) {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut swaps = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        if piv != rank {
            a.swap(piv, rank);
            swaps += 1;
        }
        for i in rank + 1..rows {
            for j in c + 1..cols {
                let v = (&a[rank][c] * &a[i][j] - &a[i][c] * &a[rank][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
    }
    (rank, a, swaps)
}

/// Exact rank over Q.
pub fn rank(m: &RationalMatrix) -> usize {
    let (rows, _) = m.integer_rows();
    bareiss(rows, m.cols).0
}

/// Exact determinant.
pub fn det(m: &RationalMatrix) -> Result<Rational> {
    if m.rows != m.cols {
        return Err(Error::NonSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(Rational::one());
    }
    let (rows, scale) = m.integer_rows();
    let (r, a, swaps) = bareiss(rows, n);
    if r < n {
        return Ok(Rational::zero());
    }
    let mut d = a[n - 1][n - 1].clone();
    if swaps % 2 == 1 {
        d = -d;
    }
    Ok(Rational::new(d, scale))
}

/// Whether `v` lies in the rational span of `basis`.
pub fn span_membership(v: &RationalVector, basis: &[RationalVector]) -> Result<bool> {
    let mut e = Echelon::new(Rationals, v.len());
    for b in basis {
        if b.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: v.len(), found: b.len() });
        }
        e.insert(b.entries());
    }
    Ok(e.contains(v.entries()))
}

/// Dense complex double matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_columns(cols: &[Vec<Complex64>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if let Some(c) = cols.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch { expected: rows, found: c.len() });
        }
        Self::new(DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]))
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.0.nrows()).map(|i| (0..self.0.ncols()).map(|j| self.0[(i, j)] * v[j]).sum()).collect()
    }

    /// max |(Q^H Q - I)_{ij}|
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.0.adjoint() * &self.0;
        let n = g.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Unitary factor of a thin QR decomposition, by modified Gram-Schmidt
/// with one reorthogonalization pass.
pub fn complex_qr_orthogonalize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let ncols = m.0.ncols();
    let scale = m.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(ncols);
    for j in 0..ncols {
        let mut v = m.column(j);
        for _ in 0..2 {
            for u in &q {
                let c = cdot(u, &v);
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= c * y;
                }
            }
        }
        let n = cnorm(&v);
        if !(n > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient);
        }
        v.iter_mut().for_each(|x| *x /= n);
        q.push(v);
    }
    ComplexMatrix::from_columns(&q)
}
