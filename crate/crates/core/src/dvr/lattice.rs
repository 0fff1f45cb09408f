//! Finite free `Z_(p)`-submodules of `Q^n`.
//!
//! A lattice stores its basis in a canonical Hermite form: row echelon,
//! every pivot a power of `p`, and entries above a pivot reduced to the
//! canonical residue system modulo that pivot. Two lattices are equal iff
//! their stored bases are equal.

use num_traits::{One, Zero};

use super::smith::{integral_left_kernel, smith_normal_form};
use super::{abs_numerator, canonical_residue, is_integral, unit_part, valuation, Matrix, Prime, Rat, Valuation};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    prime: Prime,
    ambient: usize,
    basis: Vec<Vec<Rat>>,
    /// `(column, exponent)` of each pivot.
    pivots: Vec<(usize, i64)>,
}

impl Lattice {
    /// The `Z_(p)`-span of arbitrary (possibly dependent) vectors.
    pub fn from_generators(prime: Prime, ambient: usize, gens: &[Vec<Rat>]) -> Self {
        let mut rows: Vec<Vec<Rat>> = gens.iter().filter(|g| g.iter().any(|x| !x.is_zero())).cloned().collect();
        for r in &rows {
            assert_eq!(r.len(), ambient, "generator length");
        }
        let mut pivots = Vec::new();
        let mut t = 0;
        for col in 0..ambient {
            if t == rows.len() {
                break;
            }
            let mut best: Option<(i64, num_bigint::BigInt, usize)> = None;
            for (i, row) in rows.iter().enumerate().skip(t) {
                if let Valuation::Finite(v) = valuation(&row[col], prime) {
                    let key = (v, abs_numerator(&row[col]), i);
                    if best.as_ref().is_none_or(|b| (key.0, &key.1) < (b.0, &b.1)) {
                        best = Some(key);
                    }
                }
            }
            let Some((k, _, i)) = best else {
                continue;
            };
            rows.swap(t, i);
            let (unit, _) = unit_part(&rows[t][col], prime);
            let inv = unit.recip();
            for x in rows[t].iter_mut() {
                *x *= &inv;
            }
            let piv = rows[t][col].clone();
            for i in t + 1..rows.len() {
                if !rows[i][col].is_zero() {
                    let f = &rows[i][col] / &piv;
                    axpy(&mut rows, i, &f, t);
                }
            }
            pivots.push((col, k));
            t += 1;
        }
        rows.truncate(t);
        for (t, &(col, k)) in pivots.iter().enumerate() {
            let piv = prime.pow(k);
            for s in 0..t {
                let a = rows[s][col].clone();
                let r = canonical_residue(&a, prime, k);
                if a != r {
                    let f = (a - r) / &piv;
                    axpy(&mut rows, s, &f, t);
                }
            }
        }
        Lattice { prime, ambient, basis: rows, pivots }
    }

    /// `Z_(p)^n` with its standard basis.
    pub fn standard(prime: Prime, n: usize) -> Self {
        let basis = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
            .collect();
        Lattice { prime, ambient: n, basis, pivots: (0..n).map(|i| (i, 0)).collect() }
    }

    pub fn zero(prime: Prime, n: usize) -> Self {
        Lattice { prime, ambient: n, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.basis
    }

    pub fn basis_matrix(&self) -> Matrix {
        Matrix::from_rows(self.basis.clone(), self.ambient)
    }

    /// Rational coordinates of `v` in the basis, if `v` lies in the `Q`-span.
    pub fn coordinates(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(v.len(), self.ambient);
        let mut rest = v.to_vec();
        let mut coords = Vec::with_capacity(self.rank());
        for (row, &(col, _)) in self.basis.iter().zip(&self.pivots) {
            let c = &rest[col] / &row[col];
            if !c.is_zero() {
                for (x, y) in rest.iter_mut().zip(row) {
                    *x -= &c * y;
                }
            }
            coords.push(c);
        }
        rest.iter().all(Zero::is_zero).then_some(coords)
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.coordinates(v).is_some_and(|c| c.iter().all(|x| is_integral(x, self.prime)))
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        self.ambient == other.ambient && other.basis.iter().all(|b| self.contains(b))
    }

    /// `p^k L`.
    pub fn scaled(&self, k: i64) -> Lattice {
        let f = self.prime.pow(k);
        let gens: Vec<Vec<Rat>> = self.basis.iter().map(|r| r.iter().map(|x| x * &f).collect()).collect();
        Lattice::from_generators(self.prime, self.ambient, &gens)
    }

    /// `L1 ∩ L2`.
    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        if self.ambient != other.ambient {
            return Err(Error::Dimension(format!("ambient ranks {} and {}", self.ambient, other.ambient)));
        }
        if self.rank() == 0 || other.rank() == 0 {
            return Ok(Lattice::zero(self.prime, self.ambient));
        }
        let stacked = self.basis_matrix().vstack(&other.basis_matrix());
        let r1 = self.rank();
        let gens: Vec<Vec<Rat>> = integral_left_kernel(&stacked, self.prime)
            .into_iter()
            .map(|z| {
                let x = &z[..r1];
                self.basis_matrix().vec_mul(x)
            })
            .collect();
        Ok(Lattice::from_generators(self.prime, self.ambient, &gens))
    }

    /// `(Q-span of vectors) ∩ self`, a saturated sublattice.
    pub fn saturate(&self, vectors: &[Vec<Rat>]) -> Result<Lattice> {
        let mut coords = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.iter().all(Zero::is_zero) {
                continue;
            }
            coords.push(self.coordinates(v).ok_or_else(|| {
                Error::Dimension("vector outside the span of the containing lattice".into())
            })?);
        }
        if coords.is_empty() {
            return Ok(Lattice::zero(self.prime, self.ambient));
        }
        let x = Matrix::from_rows(coords, self.rank());
        let snf = smith_normal_form(&x, self.prime);
        let vinv = snf.v.inverse().expect("unimodular");
        let b = self.basis_matrix();
        let gens: Vec<Vec<Rat>> = (0..snf.rank()).map(|i| b.vec_mul(vinv.row(i))).collect();
        Ok(Lattice::from_generators(self.prime, self.ambient, &gens))
    }

    /// Image of the lattice under `v -> A v`.
    pub fn map(&self, a: &Matrix) -> Lattice {
        assert_eq!(a.cols(), self.ambient);
        let gens: Vec<Vec<Rat>> = self.basis.iter().map(|b| a.mul_vec(b)).collect();
        Lattice::from_generators(self.prime, a.rows(), &gens)
    }

    /// Lattice spanned by the columns of `A`.
    pub fn column_span(prime: Prime, a: &Matrix) -> Lattice {
        let gens: Vec<Vec<Rat>> = (0..a.cols()).map(|j| a.col(j)).collect();
        Lattice::from_generators(prime, a.rows(), &gens)
    }
}

fn axpy(rows: &mut [Vec<Rat>], dst: usize, f: &Rat, src: usize) {
    let (a, b) = if dst < src {
        let (lo, hi) = rows.split_at_mut(src);
        (&mut lo[dst], &hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(dst);
        (&mut hi[0], &lo[src])
    };
    for (x, y) in a.iter_mut().zip(b.iter()) {
        if !y.is_zero() {
            *x -= f * y;
        }
    }
}

/// Exponents `a_1 <= ... <= a_r` with `big / small ≅ ⊕ O/p^{a_i}`.
pub fn quotient_elementary_divisors(big: &Lattice, small: &Lattice) -> Result<Vec<i64>> {
    if big.ambient != small.ambient {
        return Err(Error::Dimension(format!("ambient ranks {} and {}", big.ambient, small.ambient)));
    }
    if big.rank() != small.rank() {
        return Err(Error::RankMismatch { big: big.rank(), small: small.rank() });
    }
    let mut coords = Vec::with_capacity(small.rank());
    for b in &small.basis {
        let c = big.coordinates(b).ok_or(Error::NotContained)?;
        if !c.iter().all(|x| is_integral(x, big.prime)) {
            return Err(Error::NotContained);
        }
        coords.push(c);
    }
    if coords.is_empty() {
        return Ok(Vec::new());
    }
    let snf = smith_normal_form(&Matrix::from_rows(coords, big.rank()), big.prime);
    Ok(snf.exponents)
}

/// Sum of the elementary-divisor exponents: the Fitting ideal is `(p^sum)`.
pub fn fitting_exponent(big: &Lattice, small: &Lattice) -> Result<i64> {
    Ok(quotient_elementary_divisors(big, small)?.iter().sum())
}
