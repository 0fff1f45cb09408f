//! The idempotent cutting out the `λ`-component of `T_E`, and the two
//! computations of the congruence ideal.

use num_traits::Zero;

use super::{Character, FlatAlgebra, LocalityPolicy};
use crate::dvr::lattice::fitting_exponent;
use crate::dvr::smith::integral_kernel;
use crate::dvr::{valuation, Lattice, Matrix, Rat};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitData {
    /// Coordinates of `e` in the basis of `T`.
    pub idempotent: Vec<Rat>,
    /// Least `a >= 0` with `p^a e` in `T`.
    pub denominator_exponent: i64,
    /// `T ∩ (1 - e) T_E`, the elements killed by `e`.
    pub complement: Lattice,
}

/// Computes `e` as the joint eigenvector of the regular representation with
/// eigenvalues `λ(b_i)`, normalised by `λ(e) = 1`.
pub fn split_at_character(t: &FlatAlgebra, lambda: &Character, policy: LocalityPolicy) -> Result<SplitData> {
    t.validate().require(policy)?;
    lambda.validate(t)?;
    let r = t.rank();
    let mut stacked: Option<Matrix> = None;
    for i in 0..r {
        let shifted = t.mult_matrix(&t.basis_vector(i)).sub(&Matrix::identity(r).scale(&lambda.values()[i]));
        stacked = Some(match stacked {
            None => shifted,
            Some(s) => s.vstack(&shifted),
        });
    }
    let ker = stacked.expect("rank is positive").kernel();
    if ker.len() != 1 {
        return Err(Error::Lemma(format!(
            "λ-isotypic part of T_E has dimension {} instead of 1",
            ker.len()
        )));
    }
    let w = &ker[0];
    let lw = lambda.apply(w);
    if lw.is_zero() {
        return Err(Error::Lemma("λ vanishes on its own isotypic line".into()));
    }
    let e: Vec<Rat> = w.iter().map(|x| x / &lw).collect();
    if t.mul(&e, &e) != e {
        return Err(Error::Lemma("computed projector is not idempotent".into()));
    }
    let p = t.prime();
    let denominator_exponent = e
        .iter()
        .filter_map(|x| valuation(x, p).finite())
        .map(|v| -v)
        .max()
        .unwrap_or(0)
        .max(0);
    let complement = Lattice::from_generators(p, r, &integral_kernel(&t.mult_matrix(&e), p));
    Ok(SplitData { idempotent: e, denominator_exponent, complement })
}

/// `λ(Ann_T(ker λ))` as an exponent of `p`.
pub fn eta_wiles(t: &FlatAlgebra, lambda: &Character, policy: LocalityPolicy) -> Result<i64> {
    t.validate().require(policy)?;
    lambda.validate(t)?;
    let p = t.prime();
    let r = t.rank();
    let row = Matrix::from_rows(vec![lambda.values().to_vec()], r);
    let ker_lambda = integral_kernel(&row, p);
    let ann: Vec<Vec<Rat>> = if ker_lambda.is_empty() {
        (0..r).map(|i| t.basis_vector(i)).collect()
    } else {
        let mut joint: Option<Matrix> = None;
        for k in &ker_lambda {
            let lk = t.mult_matrix(k);
            joint = Some(match joint {
                None => lk,
                Some(j) => j.vstack(&lk),
            });
        }
        integral_kernel(&joint.expect("nonempty"), p)
    };
    ann.iter()
        .filter_map(|a| valuation(&lambda.apply(a), p).finite())
        .min()
        .ok_or_else(|| Error::Lemma("λ vanishes on Ann_T(ker λ), so T is not reduced".into()))
}

/// The Fitting exponent of `eT / (eT ∩ T)`.
pub fn eta_fitting(t: &FlatAlgebra, lambda: &Character, policy: LocalityPolicy) -> Result<i64> {
    let split = split_at_character(t, lambda, policy)?;
    let p = t.prime();
    let r = t.rank();
    let scale = p.pow(split.denominator_exponent);
    let cleared: Vec<Rat> = split.idempotent.iter().map(|x| x * &scale).collect();
    let image = Lattice::column_span(p, &t.mult_matrix(&cleared)).scaled(-split.denominator_exponent);
    let inside = image.intersect(&Lattice::standard(p, r))?;
    fitting_exponent(&image, &inside)
}

impl SplitData {
    /// `1 - e`.
    pub fn complement_idempotent(&self, t: &FlatAlgebra) -> Vec<Rat> {
        t.unit().iter().zip(&self.idempotent).map(|(u, e)| u - e).collect()
    }

    pub fn is_integral(&self) -> bool {
        self.denominator_exponent == 0
    }
}
