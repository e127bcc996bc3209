//! The invariant section used at every place.
//!
//! A basis decomposition C = Σ a_k B_k gives the SL-invariant
//! s = Π_k det(B_k)^{m_z a_k}, homogeneous of degree m_z * m_i in the i-th
//! vector. With m_z = 2 * lcm(denominators of a_k) all exponents are even
//! integers, so s is invariant (not just up to sign) and, for d = N+1, s is
//! the square of the determinant.
//!
//! Local terms are normalized by d * m_z, so only the offsets
//! (1/d) Σ a_k log|det B_k|_v enter the height computations.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::config::Configuration;
use crate::decompose::{basis_matrix, decompose, BasisDecomposition};
use crate::error::{Error, Result};
use crate::linalg::{det, lcm_of_denominators, ln_abs, valuation, Rational};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionChoice {
    /// Product of determinants over the deterministic basis decomposition.
    #[default]
    Decomposition,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantSection {
    pub decomposition: BasisDecomposition,
    /// Degree m_z of the section in the Chow coordinates.
    pub z_degree: BigInt,
    /// det B_k for each term, in term order.
    determinants: Vec<Rational>,
}

impl InvariantSection {
    pub fn new(config: &Configuration, choice: SectionChoice) -> Result<Self> {
        match choice {
            SectionChoice::Decomposition => Self::from_decomposition(config, decompose(config)?),
        }
    }

    pub fn from_decomposition(config: &Configuration, decomposition: BasisDecomposition) -> Result<Self> {
        decomposition.validate(config)?;
        let determinants = decomposition
            .terms
            .iter()
            .map(|t| det(&basis_matrix(&decomposition.dictionary, &t.basis)?))
            .collect::<Result<Vec<_>>>()?;
        if determinants.iter().any(Zero::is_zero) {
            return Err(Error::ZeroSectionValue);
        }
        let z_degree = lcm_of_denominators(decomposition.terms.iter().map(|t| &t.coefficient)) * BigInt::from(2);
        Ok(Self { decomposition, z_degree, determinants })
    }

    pub fn determinants(&self) -> &[Rational] {
        &self.determinants
    }

    fn degree(&self) -> Rational {
        self.decomposition.reconstruct().into_iter().sum()
    }

    /// (1/d) Σ a_k log|det B_k| at the archimedean place.
    pub fn arch_offset(&self) -> f64 {
        let d = crate::linalg::to_f64(&self.degree());
        self.decomposition
            .terms
            .iter()
            .zip(&self.determinants)
            .map(|(t, q)| crate::linalg::to_f64(&t.coefficient) * ln_abs(q))
            .sum::<f64>()
            / d
    }

    /// (1/d) Σ a_k v_p(det B_k), exactly; the p-adic offset in units of log p.
    pub fn valuation_offset(&self, p: u64) -> Rational {
        let d = self.degree();
        let s: Rational = self
            .decomposition
            .terms
            .iter()
            .zip(&self.determinants)
            .map(|(t, q)| &t.coefficient * Rational::from_integer(BigInt::from(valuation(q, p))))
            .sum();
        s / d
    }

    /// log|s| at the stored representatives: m_z Σ a_k log|det B_k|.
    pub fn log_abs_value(&self) -> f64 {
        crate::linalg::to_f64(&Rational::from_integer(self.z_degree.abs()))
            * self.arch_offset()
            * crate::linalg::to_f64(&self.degree())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, rat};

    #[test]
    fn identity_section_is_determinant_squared() {
        let s = InvariantSection::new(&Configuration::coordinate_points(2), SectionChoice::Decomposition).unwrap();
        assert_eq!(s.z_degree, BigInt::from(2));
        assert_eq!(s.determinants(), &[int(1)]);
        assert_eq!(s.arch_offset(), 0.0);
        assert_eq!(s.valuation_offset(2), int(0));
    }

    #[test]
    fn offsets_follow_determinants() {
        let c = Configuration::from_i64_points(1, &[&[1, 0], &[1, 2]]).unwrap();
        let s = InvariantSection::new(&c, SectionChoice::Decomposition).unwrap();
        assert_eq!(s.valuation_offset(2), rat(1, 2));
        assert!((s.arch_offset() - 2f64.ln() / 2.0).abs() < 1e-15);
        assert!((s.log_abs_value() - 2.0 * 2f64.ln()).abs() < 1e-14);

        let t = Configuration::from_i64_points(1, &[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let s = InvariantSection::new(&t, SectionChoice::Decomposition).unwrap();
        assert_eq!(s.z_degree, BigInt::from(4));
    }
}
