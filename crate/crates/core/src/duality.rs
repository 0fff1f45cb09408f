//! Perfect pairings between a `T`-module and a `T̃`-module, the orthogonality
//! hypotheses that make congruence modules dual to each other, and the
//! δ-pairing formula for the congruence exponent.
//!
//! A pairing is its Gram matrix on the coordinate bases: `[x, y] = xᵀ G y`.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{split_at_character, split_characters, Character, FlatAlgebra, LocalityPolicy};
use crate::congmod::{congruence_module, eta_module, kernel_fixed_part, HeckeModule};
use crate::dvr::{rat, unit_part, valuation, Lattice, Matrix, Prime, Rat, Valuation};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingInstance {
    pub t1: FlatAlgebra,
    pub m1: HeckeModule,
    pub lambda1: Character,
    pub t2: FlatAlgebra,
    pub m2: HeckeModule,
    pub lambda2: Character,
    pub gram: Matrix,
}

/// An algebra isomorphism `θ: T1 -> T2` by its matrix on the bases
/// (column `i` holds the coordinates of `θ(b_i)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaLink {
    pub matrix: Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairingCertificate {
    pub perfect: bool,
    /// `[e M1, (1 - ẽ) M2] = 0`.
    pub left_orthogonal: bool,
    /// `[(1 - e) M1, ẽ M2] = 0`.
    pub right_orthogonal: bool,
}

impl PairingCertificate {
    pub fn all_pass(&self) -> bool {
        self.perfect && self.left_orthogonal && self.right_orthogonal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairingOrders {
    pub eta1: i64,
    pub eta2: i64,
    /// The induced pairing `C_0(M1) x C_0(M2) -> E/O` is non-degenerate.
    pub induced_nondegenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThetaCertificate {
    pub holds: bool,
    /// First `(t, x, y)` basis triple with `[t x, y] ≠ [x, θ(t) y]`.
    pub violation: Option<(usize, usize, usize)>,
}

impl ThetaLink {
    pub fn identity(r: usize) -> Self {
        ThetaLink { matrix: Matrix::identity(r) }
    }

    /// `θ(b_i) = b̃_{σ(i)}`.
    pub fn from_permutation(sigma: &[usize]) -> Self {
        let r = sigma.len();
        let mut m = Matrix::zeros(r, r);
        for (i, &s) in sigma.iter().enumerate() {
            m[(s, i)] = Rat::one();
        }
        ThetaLink { matrix: m }
    }

    pub fn apply(&self, x: &[Rat]) -> Vec<Rat> {
        self.matrix.mul_vec(x)
    }

    pub fn check_homomorphism(&self, t1: &FlatAlgebra, t2: &FlatAlgebra) -> Result<()> {
        if self.matrix.rows() != t2.rank() || self.matrix.cols() != t1.rank() {
            return Err(Error::Dimension("θ matrix does not match the algebra ranks".into()));
        }
        if self.apply(t1.unit()) != t2.unit() {
            return Err(Error::Validation("θ does not preserve the unit".into()));
        }
        for i in 0..t1.rank() {
            for j in 0..=i {
                let (bi, bj) = (t1.basis_vector(i), t1.basis_vector(j));
                if self.apply(&t1.mul(&bi, &bj)) != t2.mul(&self.apply(&bi), &self.apply(&bj)) {
                    return Err(Error::Validation(format!("θ is not multiplicative on b{i} * b{j}")));
                }
            }
        }
        if self.matrix.rank() != t1.rank() || t1.rank() != t2.rank() {
            return Err(Error::Validation("θ is not bijective".into()));
        }
        Ok(())
    }
}

fn gram_on(x: &Lattice, g: &Matrix, y: &Lattice) -> Matrix {
    x.basis_matrix().mul(g).mul(&y.basis_matrix().transpose())
}

fn det_valuation(m: &Matrix, p: Prime) -> Valuation {
    valuation(&m.det(), p)
}

impl PairingInstance {
    pub fn prime(&self) -> Prime {
        self.t1.prime()
    }

    pub fn pair(&self, x: &[Rat], y: &[Rat]) -> Rat {
        crate::dvr::matrix::dot(x, &self.gram.mul_vec(y))
    }

    fn check_shapes(&self) -> Result<()> {
        if !self.gram.is_square() {
            return Err(Error::Dimension(format!("gram is {}x{}", self.gram.rows(), self.gram.cols())));
        }
        if self.gram.rows() != self.m1.rank() || self.gram.cols() != self.m2.rank() {
            return Err(Error::Dimension("gram does not match the module ranks".into()));
        }
        Ok(())
    }
}

pub fn verify_pairing_hypotheses(pi: &PairingInstance, policy: LocalityPolicy) -> Result<PairingCertificate> {
    pi.check_shapes()?;
    pi.m1.validate(&pi.t1)?;
    pi.m2.validate(&pi.t2)?;
    let p = pi.prime();
    let s1 = split_at_character(&pi.t1, &pi.lambda1, policy)?;
    let s2 = split_at_character(&pi.t2, &pi.lambda2, policy)?;
    let e1 = pi.m1.act(&s1.idempotent);
    let f1 = pi.m1.act(&s1.complement_idempotent(&pi.t1));
    let e2 = pi.m2.act(&s2.idempotent);
    let f2 = pi.m2.act(&s2.complement_idempotent(&pi.t2));
    let perfect = pi.gram.is_integral(p) && det_valuation(&pi.gram, p) == Valuation::Finite(0);
    let left_orthogonal = e1.transpose().mul(&pi.gram).mul(&f2).is_zero();
    let right_orthogonal = f1.transpose().mul(&pi.gram).mul(&e2).is_zero();
    Ok(PairingCertificate { perfect, left_orthogonal, right_orthogonal })
}

/// Both congruence exponents, checked equal, and the induced pairing
/// checked non-degenerate: `M1_λ` and `ẽM2` are dual, as are `eM1` and
/// `M2_λ̃`, so `eM1 x ẽM2` has determinant of valuation `-η`.
pub fn congruence_module_pairing_order(pi: &PairingInstance, policy: LocalityPolicy) -> Result<PairingOrders> {
    let cert = verify_pairing_hypotheses(pi, policy)?;
    if !cert.all_pass() {
        return Err(Error::Hypothesis(format!(
            "pairing hypotheses fail (perfect {}, [eM1,(1-ẽ)M2]=0 {}, [(1-e)M1,ẽM2]=0 {})",
            cert.perfect, cert.left_orthogonal, cert.right_orthogonal
        )));
    }
    let p = pi.prime();
    let c1 = congruence_module(&pi.t1, &pi.m1, &pi.lambda1, policy)?;
    let c2 = congruence_module(&pi.t2, &pi.m2, &pi.lambda2, policy)?;
    let (eta1, eta2) = (c1.eta_exponent, c2.eta_exponent);
    if c1.m_upper.rank() != c2.m_upper.rank() {
        return Err(Error::Lemma(format!(
            "duality transfer: λ-parts of ranks {} and {} cannot be dual",
            c1.m_upper.rank(),
            c2.m_upper.rank()
        )));
    }
    let lower_upper = det_valuation(&gram_on(&c1.m_lambda, &pi.gram, &c2.m_upper), p);
    let upper_lower = det_valuation(&gram_on(&c1.m_upper, &pi.gram, &c2.m_lambda), p);
    let upper_upper = det_valuation(&gram_on(&c1.m_upper, &pi.gram, &c2.m_upper), p);
    let induced_nondegenerate = lower_upper == Valuation::Finite(0)
        && upper_lower == Valuation::Finite(0)
        && upper_upper == Valuation::Finite(-eta1);
    if eta1 != eta2 {
        return Err(Error::Lemma(format!("duality transfer: η_λ(M1) = {eta1} but η_λ̃(M2) = {eta2}")));
    }
    if !induced_nondegenerate {
        return Err(Error::Lemma("duality transfer: induced pairing on congruence modules is degenerate".into()));
    }
    Ok(PairingOrders { eta1, eta2, induced_nondegenerate })
}

/// Generator of a rank-one lattice, rescaled by a unit so that its first
/// nonzero coordinate is exactly a power of `p`.
pub fn normalized_generator(l: &Lattice) -> Option<Vec<Rat>> {
    if l.rank() != 1 {
        return None;
    }
    let v = &l.basis()[0];
    let lead = v.iter().find(|x| !x.is_zero())?;
    let f = unit_part(lead, l.prime()).0.recip();
    Some(v.iter().map(|x| x * &f).collect())
}

/// `val_p([δ1, δ2])` for generators of the rank-one kernels, checked against
/// both congruence exponents.
pub fn delta_pairing(pi: &PairingInstance, policy: LocalityPolicy) -> Result<i64> {
    let k1 = kernel_fixed_part(&pi.m1, &pi.lambda1)?;
    let k2 = kernel_fixed_part(&pi.m2, &pi.lambda2)?;
    if k1.rank() != 1 || k2.rank() != 1 {
        return Err(Error::Hypothesis(format!(
            "δ-pairing needs rank-one kernels, found ranks {} and {}",
            k1.rank(),
            k2.rank()
        )));
    }
    let orders = congruence_module_pairing_order(pi, policy)?;
    let d1 = normalized_generator(&k1).expect("rank one");
    let d2 = normalized_generator(&k2).expect("rank one");
    let v = valuation(&pi.pair(&d1, &d2), pi.prime())
        .finite()
        .ok_or_else(|| Error::Lemma("δ-pairing: [δ1, δ2] = 0".into()))?;
    if v != orders.eta1 || v != orders.eta2 {
        return Err(Error::Lemma(format!(
            "δ-pairing: val[δ1, δ2] = {v} but η exponents are {} and {}",
            orders.eta1, orders.eta2
        )));
    }
    Ok(v)
}

/// Exhaustive check of `A1(b_i)ᵀ G = G A2(θ(b_i))`.
pub fn verify_theta_adjointness(
    t1: &FlatAlgebra,
    m1: &HeckeModule,
    t2: &FlatAlgebra,
    m2: &HeckeModule,
    gram: &Matrix,
    theta: &ThetaLink,
) -> Result<ThetaCertificate> {
    theta.check_homomorphism(t1, t2)?;
    if gram.rows() != m1.rank() || gram.cols() != m2.rank() {
        return Err(Error::Dimension("gram does not match the module ranks".into()));
    }
    for i in 0..t1.rank() {
        let lhs = m1.action()[i].transpose().mul(gram);
        let rhs = gram.mul(&m2.act(&theta.apply(&t1.basis_vector(i))));
        for x in 0..gram.rows() {
            for y in 0..gram.cols() {
                if lhs[(x, y)] != rhs[(x, y)] {
                    return Ok(ThetaCertificate { holds: false, violation: Some((i, x, y)) });
                }
            }
        }
    }
    Ok(ThetaCertificate { holds: true, violation: None })
}

/// The two congruence exponents computed without any hypothesis check.
pub fn unchecked_etas(pi: &PairingInstance, policy: LocalityPolicy) -> Result<(i64, i64)> {
    Ok((eta_module(&pi.t1, &pi.m1, &pi.lambda1, policy)?, eta_module(&pi.t2, &pi.m2, &pi.lambda2, policy)?))
}

/// A product of random elementary integer matrices: determinant `±1`.
pub fn random_unimodular(rng: &mut impl Rng, n: usize) -> Matrix {
    let mut g = Matrix::identity(n);
    if n < 2 {
        if n == 1 && rng.gen_bool(0.5) {
            g[(0, 0)] = rat(-1);
        }
        return g;
    }
    for _ in 0..3 * n {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        match rng.gen_range(0..4) {
            0 => g.swap_rows(i, j),
            _ => {
                let f = rat(rng.gen_range(-3..=3));
                g.row_axpy(i, &f, j);
            }
        }
    }
    g
}

/// A pairing instance with all hypotheses satisfied by construction.
///
/// `M1` is a sum of copies of `T` and of character lines, written in a
/// random basis; `T̃` is `T` with a shuffled basis, `θ` the shuffle, `G` a
/// random unimodular Gram matrix and `M2` the dual module with
/// `Ã(θ t) = G⁻¹ A(t)ᵀ G`.
pub fn construct_dual_pair(
    t: &FlatAlgebra,
    lambda: &Character,
    seed: u64,
    policy: LocalityPolicy,
) -> Result<(PairingInstance, ThetaLink)> {
    t.validate().require(policy)?;
    lambda.validate(t)?;
    let chars = split_characters(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = t.rank();

    let regular = HeckeModule::regular(t);
    let mut m1 = regular.clone();
    if r > 1 && rng.gen_bool(0.2) {
        m1 = m1.direct_sum(&regular)?;
    }
    for _ in 0..rng.gen_range(0..=2) {
        let chi = chars.choose(&mut rng).expect("nonempty");
        if chi == lambda && rng.gen_bool(0.5) {
            continue;
        }
        m1 = m1.direct_sum(&HeckeModule::character_line(t, chi))?;
    }
    let n = m1.rank();
    let m1 = m1.change_basis(&random_unimodular(&mut rng, n))?;

    let mut sigma: Vec<usize> = (0..r).collect();
    sigma.shuffle(&mut rng);
    let t2 = t.permuted(&sigma)?;
    let theta = ThetaLink::from_permutation(&sigma);
    let gram = random_unimodular(&mut rng, n);
    let gi = gram.inverse().expect("unimodular");
    let mut action2 = vec![Matrix::zeros(n, n); r];
    let mut lambda2 = vec![Rat::zero(); r];
    for i in 0..r {
        action2[sigma[i]] = gi.mul(&m1.action()[i].transpose()).mul(&gram);
        lambda2[sigma[i]] = lambda.values()[i].clone();
    }
    let m2 = HeckeModule::on_coordinates(t.prime(), action2)?;
    let pi = PairingInstance {
        t1: t.clone(),
        m1,
        lambda1: lambda.clone(),
        t2,
        m2,
        lambda2: Character::new(lambda2),
        gram,
    };
    Ok((pi, theta))
}

/// `T` the fiber product mod `p^n` acting on itself and on its
/// normalisation `O x O`, paired by the identity Gram matrix. Perfect, but
/// not orthogonal, and the exponents differ (`n` against `0`).
pub fn negative_control_pair(prime: Prime, n: u32) -> PairingInstance {
    let (t, chars) = FlatAlgebra::fiber_product(prime, n);
    let m1 = HeckeModule::regular(&t);
    let m2 = HeckeModule::character_line(&t, &chars[0])
        .direct_sum(&HeckeModule::character_line(&t, &chars[1]))
        .expect("same algebra");
    PairingInstance {
        t1: t.clone(),
        m1,
        lambda1: chars[0].clone(),
        t2: t,
        m2,
        lambda2: chars[0].clone(),
        gram: Matrix::identity(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn trivial() -> PairingInstance {
        let t = FlatAlgebra::base(p(5));
        let id = Character::new(vec![rat(1)]);
        let m = HeckeModule::regular(&t);
        PairingInstance {
            t1: t.clone(),
            m1: m.clone(),
            lambda1: id.clone(),
            t2: t,
            m2: m,
            lambda2: id,
            gram: Matrix::identity(1),
        }
    }

    #[test]
    fn trivial_pair() {
        let pi = trivial();
        assert!(verify_pairing_hypotheses(&pi, LocalityPolicy::Strict).unwrap().all_pass());
        let o = congruence_module_pairing_order(&pi, LocalityPolicy::Strict).unwrap();
        assert_eq!((o.eta1, o.eta2), (0, 0));
        assert_eq!(delta_pairing(&pi, LocalityPolicy::Strict).unwrap(), 0);
    }

    #[test]
    fn swapped_characters_break_orthogonality() {
        let (t, chars) = FlatAlgebra::fiber_product(p(3), 1);
        let line = |c: &Character| HeckeModule::character_line(&t, c);
        let m1 = line(&chars[0]).direct_sum(&line(&chars[1])).unwrap();
        let m2 = line(&chars[1]).direct_sum(&line(&chars[0])).unwrap();
        let pi = PairingInstance {
            t1: t.clone(),
            m1,
            lambda1: chars[0].clone(),
            t2: t,
            m2,
            lambda2: chars[0].clone(),
            gram: Matrix::from_i64(&[&[1, 0], &[0, 1]]),
        };
        let c = verify_pairing_hypotheses(&pi, LocalityPolicy::Strict).unwrap();
        assert!(c.perfect);
        assert!(!c.left_orthogonal && !c.right_orthogonal);
        assert!(verify_pairing_hypotheses(&PairingInstance { gram: Matrix::from_i64(&[&[0, 1], &[1, 0]]), ..pi.clone() }, LocalityPolicy::Strict)
            .unwrap()
            .all_pass());
        let same = PairingInstance { m2: pi.m1.clone(), gram: Matrix::from_i64(&[&[0, 1], &[1, 0]]), ..pi };
        let c = verify_pairing_hypotheses(&same, LocalityPolicy::Strict).unwrap();
        assert!(c.perfect && !c.left_orthogonal);
    }

    #[test]
    fn fiber_product_self_dual() {
        for n in 1..=3u32 {
            let (t, chars) = FlatAlgebra::fiber_product(p(5), n);
            let (pi, theta) = construct_dual_pair(&t, &chars[0], 7 + n as u64, LocalityPolicy::Strict).unwrap();
            assert!(verify_pairing_hypotheses(&pi, LocalityPolicy::Strict).unwrap().all_pass());
            let o = congruence_module_pairing_order(&pi, LocalityPolicy::Strict).unwrap();
            assert_eq!(o.eta1, o.eta2);
            let cert = verify_theta_adjointness(&pi.t1, &pi.m1, &pi.t2, &pi.m2, &pi.gram, &theta).unwrap();
            assert!(cert.holds);
            if kernel_fixed_part(&pi.m1, &pi.lambda1).unwrap().rank() == 1 {
                assert_eq!(delta_pairing(&pi, LocalityPolicy::Strict).unwrap(), n as i64);
            }
        }
    }

    #[test]
    fn broken_gram_reports_violation() {
        let (t, chars) = FlatAlgebra::fiber_product(p(5), 2);
        let (pi, theta) = construct_dual_pair(&t, &chars[0], 3, LocalityPolicy::Strict).unwrap();
        let mut g = pi.gram.clone();
        g[(0, 0)] += rat(1);
        let cert = verify_theta_adjointness(&pi.t1, &pi.m1, &pi.t2, &pi.m2, &g, &theta).unwrap();
        assert!(!cert.holds);
        assert!(cert.violation.is_some());
    }

    #[test]
    fn negative_control_has_unequal_exponents() {
        let pi = negative_control_pair(p(3), 2);
        let c = verify_pairing_hypotheses(&pi, LocalityPolicy::Strict).unwrap();
        assert!(c.perfect && !c.all_pass());
        assert_eq!(unchecked_etas(&pi, LocalityPolicy::Strict).unwrap(), (2, 0));
        assert!(matches!(congruence_module_pairing_order(&pi, LocalityPolicy::Strict), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn delta_is_unit_invariant() {
        let (t, chars) = FlatAlgebra::fiber_product(p(7), 2);
        let m = HeckeModule::regular(&t);
        let pi = PairingInstance {
            t1: t.clone(),
            m1: m.clone(),
            lambda1: chars[0].clone(),
            t2: t,
            m2: m,
            lambda2: chars[0].clone(),
            gram: Matrix::identity(2),
        };
        let d1 = normalized_generator(&kernel_fixed_part(&pi.m1, &pi.lambda1).unwrap()).unwrap();
        let d2 = normalized_generator(&kernel_fixed_part(&pi.m2, &pi.lambda2).unwrap()).unwrap();
        let scaled: Vec<Rat> = d1.iter().map(|x| x * rat(-3)).collect();
        assert_eq!(valuation(&pi.pair(&d1, &d2), p(7)), valuation(&pi.pair(&scaled, &d2), p(7)));
    }
}
