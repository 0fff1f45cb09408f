//! Lattice modules over a flat algebra and their congruence modules
//! `eM / (eM ∩ M)`.

use num_traits::Zero;

use crate::algebra::{split_at_character, Character, FlatAlgebra, LocalityPolicy};
use crate::dvr::lattice::quotient_elementary_divisors;
use crate::dvr::smith::integral_kernel;
use crate::dvr::{Lattice, Matrix, Rat};
use crate::error::{Error, Result};

/// A free `O`-module of rank `m` with `T` acting through `m x m` matrices on
/// coordinate columns. `basis` records how the module sits in some ambient
/// space (for modular symbols, the cuspidal lattice); the computations here
/// only use coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeckeModule {
    basis: Lattice,
    action: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceData {
    /// `M[ker λ]`, in coordinates.
    pub m_lambda: Lattice,
    /// `eM`, in coordinates.
    pub m_upper: Lattice,
    pub elementary_divisors: Vec<i64>,
    pub eta_exponent: i64,
}

impl HeckeModule {
    pub fn new(basis: Lattice, action: Vec<Matrix>) -> Result<Self> {
        let m = basis.rank();
        for (i, a) in action.iter().enumerate() {
            if a.rows() != m || a.cols() != m {
                return Err(Error::Dimension(format!(
                    "action matrix {i} is {}x{}, module rank is {m}",
                    a.rows(),
                    a.cols()
                )));
            }
        }
        Ok(HeckeModule { basis, action })
    }

    /// `O^m` with its standard basis.
    pub fn on_coordinates(prime: crate::dvr::Prime, action: Vec<Matrix>) -> Result<Self> {
        let m = action.first().map_or(0, Matrix::rows);
        Self::new(Lattice::standard(prime, m), action)
    }

    /// `T` acting on itself.
    pub fn regular(t: &FlatAlgebra) -> Self {
        let action = (0..t.rank()).map(|i| t.mult_matrix(&t.basis_vector(i))).collect();
        HeckeModule { basis: Lattice::standard(t.prime(), t.rank()), action }
    }

    /// `O` with `T` acting through `χ`.
    pub fn character_line(t: &FlatAlgebra, chi: &Character) -> Self {
        let action = chi.values().iter().map(|v| Matrix::diagonal(std::slice::from_ref(v))).collect();
        HeckeModule { basis: Lattice::standard(t.prime(), 1), action }
    }

    /// Block-diagonal sum, in coordinates.
    pub fn direct_sum(&self, other: &HeckeModule) -> Result<Self> {
        if self.action.len() != other.action.len() {
            return Err(Error::Dimension("modules over algebras of different rank".into()));
        }
        let (a, b) = (self.rank(), other.rank());
        let action = self
            .action
            .iter()
            .zip(&other.action)
            .map(|(x, y)| {
                let mut m = Matrix::zeros(a + b, a + b);
                for i in 0..a {
                    for j in 0..a {
                        m[(i, j)] = x[(i, j)].clone();
                    }
                }
                for i in 0..b {
                    for j in 0..b {
                        m[(a + i, a + j)] = y[(i, j)].clone();
                    }
                }
                m
            })
            .collect();
        Ok(HeckeModule { basis: Lattice::standard(self.basis.prime(), a + b), action })
    }

    /// Rewrites the action in the basis given by the columns of `g`
    /// (invertible over `E`): `A ↦ g⁻¹ A g`.
    pub fn change_basis(&self, g: &Matrix) -> Result<Self> {
        let gi = g.inverse().ok_or_else(|| Error::Validation("change of basis is singular".into()))?;
        let action = self.action.iter().map(|a| gi.mul(a).mul(g)).collect();
        Ok(HeckeModule { basis: Lattice::standard(self.basis.prime(), self.rank()), action })
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn basis(&self) -> &Lattice {
        &self.basis
    }

    pub fn action(&self) -> &[Matrix] {
        &self.action
    }

    /// Matrix of an arbitrary algebra element `Σ x_i b_i`.
    pub fn act(&self, x: &[Rat]) -> Matrix {
        let m = self.rank();
        let mut out = Matrix::zeros(m, m);
        for (c, a) in x.iter().zip(&self.action) {
            if !c.is_zero() {
                out = out.add(&a.scale(c));
            }
        }
        out
    }

    pub fn validate(&self, t: &FlatAlgebra) -> Result<()> {
        let r = t.rank();
        if self.action.len() != r {
            return Err(Error::Dimension(format!("{} action matrices for an algebra of rank {r}", self.action.len())));
        }
        let p = t.prime();
        if let Some(i) = self.action.iter().position(|a| !a.is_integral(p)) {
            return Err(Error::Validation(format!("action of b{i} is not integral")));
        }
        if self.act(t.unit()) != Matrix::identity(self.rank()) {
            return Err(Error::Validation("unit does not act as the identity".into()));
        }
        for i in 0..r {
            for j in 0..=i {
                let ab = self.action[i].mul(&self.action[j]);
                if ab != self.action[j].mul(&self.action[i]) {
                    return Err(Error::Validation(format!("actions of b{i} and b{j} do not commute")));
                }
                if ab != self.act(&t.mul(&t.basis_vector(i), &t.basis_vector(j))) {
                    return Err(Error::Validation(format!("action does not respect b{i} * b{j}")));
                }
            }
        }
        Ok(())
    }
}

/// `M[ker λ] = ∩ ker(act(b_i) - λ(b_i))`, a saturated sublattice of `O^m`.
pub fn kernel_fixed_part(m: &HeckeModule, lambda: &Character) -> Result<Lattice> {
    if lambda.values().len() != m.action.len() {
        return Err(Error::Dimension("character and action have different lengths".into()));
    }
    let n = m.rank();
    let p = m.basis.prime();
    if n == 0 {
        return Ok(Lattice::zero(p, 0));
    }
    let id = Matrix::identity(n);
    let mut stacked: Option<Matrix> = None;
    for (a, l) in m.action.iter().zip(lambda.values()) {
        let s = a.sub(&id.scale(l));
        stacked = Some(match stacked {
            None => s,
            Some(acc) => acc.vstack(&s),
        });
    }
    let ker = match stacked {
        None => (0..n).map(|i| id.col(i)).collect(),
        Some(s) => integral_kernel(&s, p),
    };
    Ok(Lattice::from_generators(p, n, &ker))
}

/// `eM`, `eM ∩ M` and the elementary divisors of the quotient, with the
/// identity `eM ∩ M = M[ker λ]` and `e`-stability of `eM` checked.
pub fn congruence_module(
    t: &FlatAlgebra,
    m: &HeckeModule,
    lambda: &Character,
    policy: LocalityPolicy,
) -> Result<CongruenceData> {
    m.validate(t)?;
    let split = split_at_character(t, lambda, policy)?;
    let p = t.prime();
    let n = m.rank();
    let a = split.denominator_exponent;
    let scale = p.pow(a);
    let cleared: Vec<Rat> = split.idempotent.iter().map(|x| x * &scale).collect();
    let m_upper = Lattice::column_span(p, &m.act(&cleared)).scaled(-a);
    let m_lambda = m_upper.intersect(&Lattice::standard(p, n))?;

    let fixed = kernel_fixed_part(m, lambda)?;
    if fixed != m_lambda {
        return Err(Error::Lemma(format!(
            "kernel identity eM ∩ M = M[ker λ] fails: ranks {} and {}",
            m_lambda.rank(),
            fixed.rank()
        )));
    }
    let e_act = m.act(&split.idempotent);
    if m_upper.basis().iter().any(|v| &e_act.mul_vec(v) != v) {
        return Err(Error::Lemma("eM is not fixed by e".into()));
    }
    let elementary_divisors = quotient_elementary_divisors(&m_upper, &m_lambda)?;
    let eta_exponent = elementary_divisors.iter().sum();
    Ok(CongruenceData { m_lambda, m_upper, elementary_divisors, eta_exponent })
}

pub fn eta_module(t: &FlatAlgebra, m: &HeckeModule, lambda: &Character, policy: LocalityPolicy) -> Result<i64> {
    Ok(congruence_module(t, m, lambda, policy)?.eta_exponent)
}

/// Nonzero elementary divisors, the ones that describe `C_0` up to
/// isomorphism.
pub fn nonzero_divisors(data: &CongruenceData) -> Vec<i64> {
    data.elementary_divisors.iter().copied().filter(|&d| d > 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::eta_wiles;
    use crate::dvr::{rat, Prime};

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn regular_module_recovers_eta() {
        let (t, chars) = FlatAlgebra::fiber_product(p(5), 3);
        let m = HeckeModule::regular(&t);
        let d = congruence_module(&t, &m, &chars[0], LocalityPolicy::Strict).unwrap();
        assert_eq!(d.elementary_divisors, vec![3]);
        assert_eq!(d.m_lambda.rank(), 1);
    }

    #[test]
    fn character_line_is_all_fixed() {
        let (t, chars) = FlatAlgebra::fiber_product(p(3), 2);
        let m = HeckeModule::character_line(&t, &chars[0]);
        assert_eq!(kernel_fixed_part(&m, &chars[0]).unwrap(), Lattice::standard(p(3), 1));
        assert_eq!(eta_module(&t, &m, &chars[0], LocalityPolicy::Strict).unwrap(), 0);
        let other = HeckeModule::character_line(&t, &chars[1]);
        let d = congruence_module(&t, &other, &chars[0], LocalityPolicy::Strict).unwrap();
        assert_eq!(d.m_lambda.rank(), 0);
        assert_eq!(d.eta_exponent, 0);
    }

    #[test]
    fn diagonal_congruent_characters() {
        // O^2, generator acting by diag(0, p^3): the characters agree mod p^3
        let (t, chars) = FlatAlgebra::fiber_product(p(5), 3);
        let m = HeckeModule::on_coordinates(
            p(5),
            vec![Matrix::identity(2), Matrix::diagonal(&[rat(0), rat(125)])],
        )
        .unwrap();
        m.validate(&t).unwrap();
        let fixed = kernel_fixed_part(&m, &chars[0]).unwrap();
        assert_eq!(fixed.basis(), &[vec![rat(1), rat(0)]]);
        // both characters occur integrally, so C_0 = 0
        assert_eq!(eta_module(&t, &m, &chars[0], LocalityPolicy::Strict).unwrap(), 0);
        // the sublattice spanned by (1,1), (0,p^3) in eigen-coordinates
        let g = Matrix::from_i64(&[&[1, 0], &[1, 125]]);
        let glued = m.change_basis(&g).unwrap();
        glued.validate(&t).unwrap();
        let d = congruence_module(&t, &glued, &chars[0], LocalityPolicy::Strict).unwrap();
        assert_eq!(nonzero_divisors(&d), vec![3]);
    }

    #[test]
    fn free_module_multiplies_eta() {
        let (t, chars) = FlatAlgebra::fiber_product(p(3), 2);
        let reg = HeckeModule::regular(&t);
        let m = reg.direct_sum(&reg).unwrap().direct_sum(&reg).unwrap();
        let eta = eta_wiles(&t, &chars[0], LocalityPolicy::Strict).unwrap();
        assert_eq!(eta_module(&t, &m, &chars[0], LocalityPolicy::Strict).unwrap(), 3 * eta);
    }

    #[test]
    fn bad_action_rejected() {
        let (t, _) = FlatAlgebra::fiber_product(p(3), 1);
        let m = HeckeModule::on_coordinates(p(3), vec![Matrix::identity(1), Matrix::diagonal(&[rat(1)])]).unwrap();
        assert!(m.validate(&t).is_err());
    }
}
