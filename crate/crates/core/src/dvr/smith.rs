//! Smith normal form over the local ring `Z_(p)`.
//!
//! Over a local PID every nonzero scalar is a unit times a power of `p`, so
//! an entry of minimal valuation divides every other entry. One pivot per
//! step and no gcd juggling.

use num_traits::Zero;

use super::{abs_numerator, unit_part, valuation, Matrix, Prime, Valuation};

#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    /// `r x r`, unit determinant.
    pub u: Matrix,
    /// `r x n`, diagonal with entries `p^k` in non-decreasing exponent order.
    pub d: Matrix,
    /// `n x n`, unit determinant.
    pub v: Matrix,
    /// Exponents of the nonzero diagonal entries.
    pub exponents: Vec<i64>,
}

impl SmithDecomposition {
    pub fn rank(&self) -> usize {
        self.exponents.len()
    }
}

/// Computes `U A V = D`.
///
/// Pivot choice: minimal valuation, then smallest absolute numerator, then
/// row-major position. Negative valuations are accepted.
pub fn smith_normal_form(a: &Matrix, p: Prime) -> SmithDecomposition {
    let (r, n) = (a.rows(), a.cols());
    let mut d = a.clone();
    let mut u = Matrix::identity(r);
    let mut v = Matrix::identity(n);
    let mut exponents = Vec::new();

    for t in 0..r.min(n) {
        let Some((pi, pj)) = choose_pivot(&d, t, p) else {
            break;
        };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);

        let (unit, k) = unit_part(&d[(t, t)], p);
        let inv = unit.recip();
        d.scale_row(t, &inv);
        u.scale_row(t, &inv);
        let piv = d[(t, t)].clone();

        for i in t + 1..r {
            if !d[(i, t)].is_zero() {
                let f = &d[(i, t)] / &piv;
                d.row_axpy(i, &f, t);
                u.row_axpy(i, &f, t);
            }
        }
        for j in t + 1..n {
            if !d[(t, j)].is_zero() {
                let f = &d[(t, j)] / &piv;
                d.col_axpy(j, &f, t);
                v.col_axpy(j, &f, t);
            }
        }
        exponents.push(k);
    }
    SmithDecomposition { u, d, v, exponents }
}

fn choose_pivot(d: &Matrix, t: usize, p: Prime) -> Option<(usize, usize)> {
    let mut best: Option<(i64, num_bigint::BigInt, usize, usize)> = None;
    for i in t..d.rows() {
        for j in t..d.cols() {
            let x = &d[(i, j)];
            let Valuation::Finite(val) = valuation(x, p) else {
                continue;
            };
            let key = (val, abs_numerator(x), i, j);
            if best.as_ref().is_none_or(|b| (key.0, &key.1) < (b.0, &b.1)) {
                best = Some(key);
            }
        }
    }
    best.map(|(_, _, i, j)| (i, j))
}

/// Integral right kernel `{x in Z_(p)^n : A x = 0}` as a list of basis vectors.
pub fn integral_kernel(a: &Matrix, p: Prime) -> Vec<Vec<super::Rat>> {
    let snf = smith_normal_form(a, p);
    (snf.rank()..a.cols()).map(|j| snf.v.col(j)).collect()
}

/// Integral left kernel `{y in Z_(p)^r : y A = 0}`.
pub fn integral_left_kernel(a: &Matrix, p: Prime) -> Vec<Vec<super::Rat>> {
    let snf = smith_normal_form(a, p);
    (snf.rank()..a.rows()).map(|i| snf.u.row(i).to_vec()).collect()
}

/// True when `det` is a unit of `Z_(p)`.
pub fn is_unimodular(m: &Matrix, p: Prime) -> bool {
    m.is_square() && m.is_integral(p) && valuation(&m.det(), p) == Valuation::Finite(0)
}

/// Checks the defining properties of a decomposition; used by tests and by
/// the self-checking paths.
pub fn verify(a: &Matrix, snf: &SmithDecomposition, p: Prime) -> bool {
    if snf.u.mul(a).mul(&snf.v) != snf.d {
        return false;
    }
    if !is_unimodular(&snf.u, p) || !is_unimodular(&snf.v, p) {
        return false;
    }
    for i in 0..snf.d.rows() {
        for j in 0..snf.d.cols() {
            let x = &snf.d[(i, j)];
            if i == j && i < snf.rank() {
                if *x != p.pow(snf.exponents[i]) {
                    return false;
                }
            } else if !x.is_zero() {
                return false;
            }
        }
    }
    snf.exponents.windows(2).all(|w| w[0] <= w[1])
}
