#![allow(dead_code)]

use githeight_core::{Configuration, Rational, RationalMatrix, RationalVector, StabilityStatus};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HALVES: &[(i64, i64)] = &[(1, 2), (1, 1), (3, 2), (2, 1)];
pub const INTEGERS: &[(i64, i64)] = &[(1, 1), (2, 1)];

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn nonzero_vector(dim: usize) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-2i64..=2, dim).prop_filter("nonzero", |v| v.iter().any(|&x| x != 0))
}

pub fn config_strategy(ambients: std::ops::RangeInclusive<usize>, max_points: usize, mults: &'static [(i64, i64)]) -> BoxedStrategy<Configuration> {
    ambients
        .prop_flat_map(move |n| {
            proptest::collection::vec((nonzero_vector(n + 1), 0..mults.len()), 1..=max_points).prop_map(move |pts| {
                Configuration::new(
                    n,
                    pts.into_iter().map(|(v, k)| (RationalVector::from_i64s(&v), q(mults[k].0, mults[k].1))),
                )
                .expect("valid points")
            })
        })
        .boxed()
}

/// Seeded random configuration with entries in -2..=2.
pub fn random_config(rng: &mut ChaCha8Rng, n: usize, points: usize, mults: &[(i64, i64)]) -> Configuration {
    let pts: Vec<(RationalVector, Rational)> = (0..points)
        .map(|_| {
            let v = loop {
                let v: Vec<i64> = (0..=n).map(|_| (rng.next_u32() % 5) as i64 - 2).collect();
                if v.iter().any(|&x| x != 0) {
                    break v;
                }
            };
            let (a, b) = mults[(rng.next_u32() as usize) % mults.len()];
            (RationalVector::from_i64s(&v), q(a, b))
        })
        .collect();
    Configuration::new(n, pts).expect("valid points")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random element of SL(n, Z) from elementary row operations.
pub fn random_sl(rng: &mut ChaCha8Rng, n: usize) -> RationalMatrix {
    let mut rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..3 * n {
        if n < 2 {
            break;
        }
        let i = rng.next_u32() as usize % n;
        let j = (i + 1 + rng.next_u32() as usize % (n - 1)) % n;
        let c = (rng.next_u32() % 5) as i64 - 2;
        for k in 0..n {
            rows[i][k] += c * rows[j][k];
        }
    }
    let rs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    RationalMatrix::from_i64_rows(&rs)
}

/// Integer rows obtained by clearing denominators.
pub fn integer_rows(vs: &[&RationalVector]) -> Vec<Vec<i128>> {
    vs.iter()
        .map(|v| {
            let l = v.entries().iter().fold(BigInt::from(1), |acc, x| num_integer::lcm(acc, x.denom().clone()));
            v.entries().iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer().to_i128().expect("small entries")).collect()
        })
        .collect()
}

/// Rank by fraction-free elimination over i128.
pub fn int_rank(mut m: Vec<Vec<i128>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, p);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) / prev;
            }
            m[i][c] = 0;
        }
        prev = m[r][c];
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Status from the mass inequality over the span of every subset.
pub fn oracle_status(c: &Configuration) -> StabilityStatus {
    let vs: Vec<&RationalVector> = c.vectors().collect();
    let ms: Vec<&Rational> = c.multiplicities().collect();
    let ints = integer_rows(&vs);
    let dim = c.dim();
    let d = c.degree();
    let mut tight = false;
    for mask in 1u64..(1 << vs.len()) {
        let sub: Vec<Vec<i128>> = (0..vs.len()).filter(|i| mask >> i & 1 == 1).map(|i| ints[i].clone()).collect();
        let k = int_rank(sub.clone());
        if k == dim {
            continue;
        }
        let mut mass = Rational::from_integer(0.into());
        for i in 0..vs.len() {
            let mut with = sub.clone();
            with.push(ints[i].clone());
            if int_rank(with) == k {
                mass += ms[i];
            }
        }
        let lhs = mass * Rational::from_integer(dim.into());
        let rhs = d * Rational::from_integer(k.into());
        if lhs > rhs {
            return StabilityStatus::Unstable;
        }
        tight |= lhs == rhs;
    }
    if tight {
        StabilityStatus::StrictlySemistable
    } else {
        StabilityStatus::Stable
    }
}

/// |<a, b>| / (|a| |b|) after applying the positive square root of H.
pub fn scaled_overlaps(c: &Configuration, h: &nalgebra::DMatrix<num_complex::Complex64>, idx: &[usize]) -> Vec<f64> {
    let vs: Vec<nalgebra::DVector<num_complex::Complex64>> = idx
        .iter()
        .map(|&i| nalgebra::DVector::from_vec(c.points()[i].vector.to_complex()))
        .collect();
    let mut out = Vec::new();
    for a in 0..vs.len() {
        for b in (a + 1)..vs.len() {
            let ab = (vs[a].adjoint() * h * &vs[b])[(0, 0)].norm();
            let aa = (vs[a].adjoint() * h * &vs[a])[(0, 0)].re;
            let bb = (vs[b].adjoint() * h * &vs[b])[(0, 0)].re;
            out.push(ab / (aa * bb).sqrt());
        }
    }
    out
}
