//! Zero-cycles modelled as configurations of vectors with rational
//! multiplicities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{serde_rational, Rational, RationalMatrix, RationalVector};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub vector: RationalVector,
    #[serde(with = "serde_rational")]
    pub multiplicity: Rational,
}

/// A multiset of nonzero vectors in Q^{N+1} (N >= 0) with positive rational
/// multiplicities, modelling the zero-cycle sum m_i [v_i] in P^N.
///
/// Projectively equal vectors are merged on construction (multiplicities
/// added, first representative kept). Representatives are otherwise stored
/// as given.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration", into = "RawConfiguration")]
pub struct Configuration {
    ambient: usize,
    points: Vec<Point>,
    degree: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfiguration {
    ambient: usize,
    points: Vec<Point>,
}

impl TryFrom<RawConfiguration> for Configuration {
    type Error = Error;
    fn try_from(raw: RawConfiguration) -> Result<Self> {
        Configuration::new(raw.ambient, raw.points.into_iter().map(|p| (p.vector, p.multiplicity)))
    }
}

impl From<Configuration> for RawConfiguration {
    fn from(c: Configuration) -> Self {
        RawConfiguration { ambient: c.ambient, points: c.points }
    }
}

impl Configuration {
    pub fn new(ambient: usize, points: impl IntoIterator<Item = (RationalVector, Rational)>) -> Result<Self> {
        let dim = ambient + 1;
        let mut merged: Vec<(RationalVector, Point)> = Vec::new();
        for (index, (vector, multiplicity)) in points.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: vector.len() });
            }
            if !multiplicity.is_positive() {
                return Err(Error::NonPositiveMultiplicity { index, value: format!("{multiplicity}") });
            }
            let key = vector.projective_key().ok_or(Error::ZeroVector { index })?;
            match merged.iter_mut().find(|(k, _)| *k == key) {
                Some((_, p)) => p.multiplicity += multiplicity,
                None => merged.push((key, Point { vector, multiplicity })),
            }
        }
        if merged.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        let points: Vec<Point> = merged.into_iter().map(|(_, p)| p).collect();
        let degree = points.iter().map(|p| p.multiplicity.clone()).sum();
        Ok(Self { ambient, points, degree })
    }

    /// Integer entries, unit multiplicities.
    pub fn from_i64_points(ambient: usize, vectors: &[&[i64]]) -> Result<Self> {
        Self::new(ambient, vectors.iter().map(|v| (RationalVector::from_i64s(v), Rational::one())))
    }

    /// The N+1 coordinate points of P^N.
    pub fn coordinate_points(ambient: usize) -> Self {
        let dim = ambient + 1;
        Self::new(ambient, (0..dim).map(|i| (RationalVector::unit(dim, i), Rational::one())))
            .expect("coordinate points are valid")
    }

    /// Columns of a square matrix, each with multiplicity one.
    pub fn from_columns(m: &RationalMatrix) -> Result<Self> {
        if m.rows() == 0 {
            return Err(Error::InvalidAmbient);
        }
        Self::new(m.rows() - 1, (0..m.cols()).map(|j| (m.column(j), Rational::one())))
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// N+1, the length of the vectors.
    pub fn dim(&self) -> usize {
        self.ambient + 1
    }

    pub fn degree(&self) -> &Rational {
        &self.degree
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &RationalVector> {
        self.points.iter().map(|p| &p.vector)
    }

    pub fn multiplicities(&self) -> impl Iterator<Item = &Rational> {
        self.points.iter().map(|p| &p.multiplicity)
    }

    /// Index of the point projectively equal to `v`, if any.
    pub fn position(&self, v: &RationalVector) -> Option<usize> {
        let key = v.projective_key()?;
        self.points.iter().position(|p| p.vector.projective_key().as_ref() == Some(&key))
    }

    /// The cycle g·C.
    pub fn transform(&self, g: &RationalMatrix) -> Result<Self> {
        let pts = self
            .points
            .iter()
            .map(|p| Ok((g.apply(&p.vector)?, p.multiplicity.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.ambient, pts)
    }

    /// The cycle C1 + C2.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let pts = self.points.iter().chain(&other.points).map(|p| (p.vector.clone(), p.multiplicity.clone()));
        Self::new(self.ambient, pts)
    }

    pub fn scale_multiplicities(&self, c: &Rational) -> Result<Self> {
        Self::new(self.ambient, self.points.iter().map(|p| (p.vector.clone(), &p.multiplicity * c)))
    }

    /// Same cycle with each representative replaced by `f(index, vector)`.
    pub fn map_vectors(&self, mut f: impl FnMut(usize, &RationalVector) -> RationalVector) -> Result<Self> {
        Self::new(
            self.ambient,
            self.points.iter().enumerate().map(|(i, p)| (f(i, &p.vector), p.multiplicity.clone())),
        )
    }

    pub fn has_integer_multiplicities(&self) -> bool {
        self.points.iter().all(|p| p.multiplicity.is_integer())
    }

    /// Canonical text form: `N;e,e,..|m;...` with reduced rationals.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("{}", self.ambient);
        for p in &self.points {
            s.push(';');
            let entries: Vec<String> = p.vector.entries().iter().map(|x| format!("{x}")).collect();
            s.push_str(&entries.join(","));
            s.push('|');
            s.push_str(&format!("{}", p.multiplicity));
        }
        s
    }

    /// SHA-256 of [`Self::canonical_string`], hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_string().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, rat};

    #[test]
    fn merges_projectively_equal_points() {
        let c = Configuration::new(
            1,
            [
                (RationalVector::from_i64s(&[1, 2]), int(1)),
                (RationalVector::from_i64s(&[-2, -4]), rat(1, 2)),
                (RationalVector::from_i64s(&[0, 1]), int(1)),
            ],
        )
        .unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[0].vector, RationalVector::from_i64s(&[1, 2]));
        assert_eq!(c.points()[0].multiplicity, rat(3, 2));
        assert_eq!(*c.degree(), rat(5, 2));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            Configuration::new(1, [(RationalVector::from_i64s(&[0, 0]), int(1))]),
            Err(Error::ZeroVector { index: 0 })
        );
        assert!(matches!(
            Configuration::new(1, [(RationalVector::from_i64s(&[1, 0]), int(0))]),
            Err(Error::NonPositiveMultiplicity { .. })
        ));
        assert!(matches!(
            Configuration::new(1, [(RationalVector::from_i64s(&[1, 0, 0]), int(1))]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(Configuration::new(1, []), Err(Error::EmptyConfiguration));
    }

    #[test]
    fn digest_is_stable() {
        let a = Configuration::coordinate_points(2);
        let b = Configuration::coordinate_points(2);
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        assert_eq!(a.canonical_string(), "2;1,0,0|1;0,1,0|1;0,0,1|1");
    }
}
