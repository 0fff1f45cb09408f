//! Eigensystems of Hecke operators on cuspidal symbols, and localization
//! at the maximal ideal of a rational eigensystem.

use num_integer::Roots;
use num_traits::{One, Zero};

use super::manin::ManinBasis;
use super::pairing::intersection_gram;
use super::sturm_bound;
use crate::algebra::{Character, FlatAlgebra};
use crate::congmod::HeckeModule;
use crate::duality::PairingInstance;
use crate::dvr::{is_integral, is_prime, rat, residue, valuation, Lattice, Matrix, Prime, Rat, Valuation};
use crate::error::{Error, Result};
use crate::poly;

/// `a_q = u + v β` (`v = 0` on rational components). For a quadratic
/// component with field `(t, n)`, `β = (t + √(t² - 4n)) / 2` with the
/// positive square root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenValue {
    pub u: Rat,
    pub v: Rat,
}

/// A Galois orbit of eigensystems, possibly with multiplicity, as a
/// subspace of the cuspidal symbols.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub primes: Vec<u64>,
    /// `(t, n)` such that `β² - tβ + n = 0`; `None` when rational.
    pub field: Option<(i64, i64)>,
    pub values: Vec<EigenValue>,
    /// Basis of the subspace in cuspidal coordinates.
    pub basis: Vec<Vec<Rat>>,
    /// Set when the component could not be resolved.
    pub unsupported: Option<String>,
}

impl Eigensystem {
    pub fn is_rational(&self) -> bool {
        self.field.is_none() && self.unsupported.is_none()
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn value(&self, q: u64) -> Option<&EigenValue> {
        self.primes.iter().position(|&x| x == q).map(|i| &self.values[i])
    }

    /// Reductions `(u mod p, v mod p)` of the eigenvalues, or `None` if some
    /// eigenvalue is not integral at `p`.
    pub fn residues(&self, p: Prime) -> Option<Vec<(u64, u64)>> {
        self.values
            .iter()
            .map(|x| (is_integral(&x.u, p) && is_integral(&x.v, p)).then(|| (residue(&x.u, p), residue(&x.v, p))))
            .collect()
    }
}

/// `x·√(4q) <= a`, decided exactly.
fn times_root_at_most(x: &Rat, q: u64, a: &Rat) -> bool {
    let four_q = rat(4 * q as i64);
    match (x <= &Rat::zero(), a >= &Rat::zero()) {
        (true, true) => true,
        (false, false) => false,
        (false, true) => x * x * &four_q <= a * a,
        (true, false) => x * x * &four_q >= a * a,
    }
}

/// `|a_q| <= 2√q` for every embedding of `a_q`.
fn within_ramanujan_bound(field: Option<(i64, i64)>, x: &EigenValue, q: u64) -> bool {
    let four_q = rat(4 * q as i64);
    let Some((t, n)) = field else {
        return &x.u * &x.u <= four_q;
    };
    // the conjugates of u + vβ are the roots of X² - sX + m
    let (t, n) = (rat(t), rat(n));
    let s = rat(2) * &x.u + &x.v * &t;
    let m = &x.u * &x.u + &x.u * &x.v * &t + &x.v * &x.v * &n;
    let a = &four_q + &m;
    &s * &s >= rat(4) * &m
        && &s * &s <= rat(4) * &four_q
        && times_root_at_most(&s, q, &a)
        && times_root_at_most(&-s.clone(), q, &a)
}

/// A localized Hecke algebra together with its module and self-dual pairing.
#[derive(Clone, Debug)]
pub struct HeckeInstance {
    pub level: u64,
    pub prime: u64,
    pub generators: Vec<u64>,
    /// Indices of the eigensystems in the maximal ideal.
    pub members: Vec<usize>,
    pub pairing: PairingInstance,
}

/// Default generators: primes `q <= μ/6` not dividing `Np`, or the least
/// such prime when that set is empty.
pub fn default_primes(level: u64, p: u64) -> Vec<u64> {
    let ok = |q: u64| is_prime(q) && !level.is_multiple_of(q) && q != p;
    let bound = sturm_bound(level).max(2);
    let mut out: Vec<u64> = (2..=bound).filter(|&q| ok(q)).collect();
    if out.is_empty() {
        out.push((bound + 1..).find(|&q| ok(q)).expect("primes are infinite"));
    }
    out
}

fn restrict(t: &Matrix, basis: &[Vec<Rat>]) -> Matrix {
    let b = Matrix::from_cols(basis, t.rows());
    let k = basis.len();
    let cols: Vec<Vec<Rat>> = basis
        .iter()
        .map(|v| b.solve(&t.mul_vec(v)).expect("component is stable").into_iter().take(k).collect())
        .collect();
    Matrix::from_cols(&cols, k)
}

enum Factor {
    Linear(Rat),
    Quadratic(i64, i64),
}

impl Factor {
    fn poly(&self) -> Vec<Rat> {
        match self {
            Factor::Linear(a) => vec![-a.clone(), Rat::one()],
            Factor::Quadratic(t, n) => vec![rat(*n), rat(-*t), Rat::one()],
        }
    }
}

/// Distinct irreducible factors of degree at most two, and the product of
/// the remaining factors (constant when none remain).
fn small_factors(f: &[Rat], q: u64) -> (Vec<Factor>, Vec<Rat>) {
    let mut rest = poly::squarefree(f);
    let mut out: Vec<Factor> = poly::rational_roots(&rest).into_iter().map(Factor::Linear).collect();
    for fac in &out {
        rest = poly::divrem(&rest, &fac.poly()).0;
    }
    let tb = (16 * q).sqrt() as i64 + 1;
    let nb = 4 * q as i64;
    'outer: for t in -tb..=tb {
        for n in -nb..=nb {
            if poly::degree(&rest).unwrap_or(0) < 2 {
                break 'outer;
            }
            let disc = t * t - 4 * n;
            if disc >= 0 && disc.sqrt() * disc.sqrt() == disc {
                continue;
            }
            let g = Factor::Quadratic(t, n);
            let (quo, r) = poly::divrem(&rest, &g.poly());
            if r.iter().all(Zero::is_zero) {
                rest = quo;
                out.push(g);
            }
        }
    }
    (out, rest)
}

struct Component {
    basis: Vec<Vec<Rat>>,
    unsupported: Option<String>,
}

/// Decomposes the cuspidal symbols into eigensystems for `T_q`, `q` in
/// `primes` (which must not divide the level).
pub fn extract_eigensystems(b: &ManinBasis, primes: &[u64]) -> Result<Vec<Eigensystem>> {
    let r = b.cuspidal_rank();
    if let Some(&q) = primes.iter().find(|&&q| !is_prime(q) || b.level().is_multiple_of(q)) {
        return Err(Error::Validation(format!("T_{q}: generators must be primes not dividing the level")));
    }
    let ops: Vec<Matrix> = primes.iter().map(|&q| b.hecke_operator(q)).collect::<Result<_>>()?;
    let identity: Vec<Vec<Rat>> = (0..r).map(|i| Matrix::identity(r).col(i)).collect();
    let mut comps = if r == 0 { Vec::new() } else { vec![Component { basis: identity, unsupported: None }] };
    for (t, &q) in ops.iter().zip(primes) {
        let mut next = Vec::new();
        for c in comps {
            if c.unsupported.is_some() {
                next.push(c);
                continue;
            }
            let tw = restrict(t, &c.basis);
            let (factors, rest) = small_factors(&tw.charpoly(), q);
            let large = poly::degree(&rest).unwrap_or(0) > 0;
            if factors.len() + usize::from(large) == 1 {
                let unsupported = large.then(|| format!("T_{q} has an eigenvalue of degree above two"));
                next.push(Component { unsupported, ..c });
                continue;
            }
            let bm = Matrix::from_cols(&c.basis, r);
            let kernel = |f: &[Rat]| -> Vec<Vec<Rat>> { tw.eval_poly(f).kernel().iter().map(|k| bm.mul_vec(k)).collect() };
            for f in factors {
                next.push(Component { basis: kernel(&f.poly()), unsupported: None });
            }
            if large {
                next.push(Component {
                    basis: kernel(&rest),
                    unsupported: Some(format!("T_{q} has an eigenvalue of degree above two")),
                });
            }
        }
        comps = next;
    }
    let mut out = Vec::new();
    for c in comps {
        out.push(describe(c, &ops, primes));
    }
    Ok(out)
}

fn describe(c: Component, ops: &[Matrix], primes: &[u64]) -> Eigensystem {
    let mut sys = Eigensystem {
        primes: primes.to_vec(),
        field: None,
        values: Vec::new(),
        basis: c.basis,
        unsupported: c.unsupported,
    };
    if sys.unsupported.is_some() {
        return sys;
    }
    let k = sys.basis.len();
    let restricted: Vec<Matrix> = ops.iter().map(|t| restrict(t, &sys.basis)).collect();
    let scalar = |m: &Matrix| (*m == Matrix::identity(k).scale(&m[(0, 0)])).then(|| m[(0, 0)].clone());
    let Some(i0) = restricted.iter().position(|m| scalar(m).is_none()) else {
        sys.values = restricted.iter().map(|m| EigenValue { u: m[(0, 0)].clone(), v: Rat::zero() }).collect();
        return check_bounds(sys);
    };
    let t0 = &restricted[i0];
    let (fs, rest) = small_factors(&t0.charpoly(), primes[i0]);
    if poly::degree(&rest).unwrap_or(0) > 0 {
        sys.unsupported = Some("eigenvalue field is not quadratic".into());
        return sys;
    }
    let (t, n) = match fs.as_slice() {
        [Factor::Quadratic(t, n)] => (*t, *n),
        _ => {
            sys.unsupported = Some("component is not a single Galois orbit".into());
            return sys;
        }
    };
    if t * t - 4 * n < 0 {
        sys.unsupported = Some("eigenvalue field is imaginary quadratic".into());
        return sys;
    }
    sys.field = Some((t, n));
    // T_q = u + v T_{q0} on the component; β ↦ T_{q0} is then a ring map
    let id = Matrix::identity(k);
    let flat = |m: &Matrix| m.to_rows().into_iter().flatten().collect::<Vec<Rat>>();
    let basis = Matrix::from_cols(&[flat(&id), flat(t0)], k * k);
    for (m, &q) in restricted.iter().zip(primes) {
        match basis.solve(&flat(m)) {
            Some(uv) => sys.values.push(EigenValue { u: uv[0].clone(), v: uv[1].clone() }),
            None => {
                sys.unsupported = Some(format!(
                    "eigensystems are inseparable: T_{q} is not a polynomial in T_{}; enlarge the prime set",
                    primes[i0]
                ));
                sys.values.clear();
                return sys;
            }
        }
    }
    check_bounds(sys)
}

fn check_bounds(mut sys: Eigensystem) -> Eigensystem {
    if let Some(q) = sys.primes.iter().zip(&sys.values).find(|(q, x)| !within_ramanujan_bound(sys.field, x, **q)) {
        sys.unsupported = Some(format!("a_{} violates the Ramanujan bound", q.0));
    }
    sys
}

fn residue_of(x: &Rat, p: crate::dvr::Prime) -> Result<u64> {
    if !is_integral(x, p) {
        return Err(Error::Unsupported(format!("eigenvalue {x} is not integral at {}", p.get())));
    }
    Ok(residue(x, p))
}

/// Whether `s` lies in the maximal ideal of the rational eigensystem
/// `lambda` at `p`. Components without an exact eigensystem are excluded
/// when some `a_q(λ)` is not a root of `T_q`'s characteristic polynomial on
/// them mod `p`, and refused otherwise.
fn is_member(b: &ManinBasis, s: &Eigensystem, lambda: &Eigensystem, p: crate::dvr::Prime) -> Result<bool> {
    if let Some(why) = &s.unsupported {
        for (&q, a) in lambda.primes.iter().zip(&lambda.values) {
            let f = restrict(&b.hecke_operator(q)?, &s.basis).charpoly();
            if residue_of(&poly::eval(&f, &a.u), p)? != 0 {
                return Ok(false);
            }
        }
        return Err(Error::Unsupported(format!(
            "{why}; characteristic polynomials mod {} do not separate it from the residual class",
            p.get()
        )));
    }
    let target: Vec<u64> = lambda.values.iter().map(|x| residue_of(&x.u, p)).collect::<Result<_>>()?;
    let pu = p.get();
    let Some((t, n)) = s.field else {
        let vals: Vec<u64> = s.values.iter().map(|x| residue_of(&x.u, p)).collect::<Result<_>>()?;
        return Ok(vals == target);
    };
    let uv: Vec<(u64, u64)> =
        s.values.iter().map(|x| Ok((residue_of(&x.u, p)?, residue_of(&x.v, p)?))).collect::<Result<_>>()?;
    let roots: Vec<u64> = (0..pu)
        .filter(|&b| {
            let (b, t, n) = (b as i128, t as i128, n as i128);
            (b * b - t * b + n).rem_euclid(pu as i128) == 0
        })
        .collect();
    if roots.is_empty() {
        return Ok(uv.iter().zip(&target).all(|((u, v), a)| *v == 0 && u == a));
    }
    let matches: Vec<bool> = roots
        .iter()
        .map(|&b| uv.iter().zip(&target).all(|((u, v), a)| (u + v * b) % pu == *a))
        .collect();
    if matches.iter().any(|&m| m) && !matches.iter().all(|&m| m) {
        return Err(Error::Unsupported(format!(
            "maximal ideal meets one of two primes above {pu} in the eigenvalue field; it is not defined over Z_({pu})"
        )));
    }
    Ok(matches[0])
}

fn away_from(s: &Eigensystem, p: u64) -> Eigensystem {
    let keep: Vec<usize> = (0..s.primes.len()).filter(|&i| s.primes[i] != p).collect();
    Eigensystem {
        primes: keep.iter().map(|&i| s.primes[i]).collect(),
        values: keep.iter().filter_map(|&i| s.values.get(i).cloned()).collect(),
        ..s.clone()
    }
}

/// Localizes the cuspidal symbols at the maximal ideal of the rational
/// eigensystem `systems[index]`, returning the Hecke algebra generated by
/// `T_q` (`q` in the eigensystems' primes, `q != p`), its module and the twisted
/// intersection pairing (with `θ` the identity).
pub fn localize(b: &ManinBasis, systems: &[Eigensystem], index: usize) -> Result<HeckeInstance> {
    let p = b.prime();
    let lambda = systems.get(index).ok_or_else(|| Error::Validation(format!("no eigensystem {index}")))?;
    if !lambda.is_rational() {
        return Err(Error::Unsupported("localization requires a rational eigensystem".into()));
    }
    if b.level().is_multiple_of(p.get()) {
        return Err(Error::Hypothesis(format!(
            "torsion-free boundary hypothesis: p = {} divides the level {}",
            p.get(),
            b.level()
        )));
    }
    let lambda = &away_from(lambda, p.get());
    let mut members = Vec::new();
    for (i, s) in systems.iter().enumerate() {
        if i == index || is_member(b, &away_from(s, p.get()), lambda, p)? {
            members.push(i);
        }
    }
    let r = b.cuspidal_rank();
    let vectors: Vec<Vec<Rat>> = members.iter().flat_map(|&i| systems[i].basis.iter().cloned()).collect();
    let sub = Lattice::standard(p, r).saturate(&vectors)?;
    let m = sub.rank();
    let action = |t: &Matrix| -> Result<Matrix> {
        let cols: Vec<Vec<Rat>> = sub
            .basis()
            .iter()
            .map(|v| sub.coordinates(&t.mul_vec(v)).ok_or_else(|| Error::Validation("T_q leaves M_m".into())))
            .collect::<Result<_>>()?;
        Ok(Matrix::from_cols(&cols, m))
    };
    let gens: Vec<Matrix> =
        lambda.primes.iter().map(|&q| b.hecke_operator(q).and_then(|t| action(&t))).collect::<Result<_>>()?;
    let (algebra, basis_mats) = FlatAlgebra::generated_by_matrices(p, m, &gens)?;

    // λ on the basis of T_m: the scalar by which b_i acts on V_λ
    let v = sub.coordinates(&lambda.basis[0]).expect("V_λ lies in M_m");
    let j = v.iter().position(|x| !x.is_zero()).expect("nonzero vector");
    let values: Vec<Rat> = basis_mats.iter().map(|bm| bm.mul_vec(&v)[j].clone() / &v[j]).collect();
    let lambda_char = Character::new(values);

    let twisted = intersection_gram(b)?.twisted;
    let bm = sub.basis_matrix();
    let bm = if bm.rows() == m { bm } else { bm.transpose() };
    let gram = bm.mul(&twisted).mul(&bm.transpose());
    if valuation(&gram.det(), p) != Valuation::Finite(0) {
        return Err(Error::Validation("twisted intersection pairing is not perfect on M_m".into()));
    }
    let module = HeckeModule::on_coordinates(p, basis_mats)?;
    Ok(HeckeInstance {
        level: b.level(),
        prime: p.get(),
        generators: lambda.primes.clone(),
        members,
        pairing: PairingInstance {
            t1: algebra.clone(),
            m1: module.clone(),
            lambda1: lambda_char.clone(),
            t2: algebra,
            m2: module,
            lambda2: lambda_char,
            gram,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{eta_wiles, LocalityPolicy};
    use crate::detect::detect_congruence;
    use crate::dvr::Prime;

    #[test]
    fn level_37_mod_2() {
        let b = ManinBasis::build(37, Prime::new(2).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(37, 2)).unwrap();
        assert_eq!(systems.len(), 2);
        assert!(systems.iter().all(Eigensystem::is_rational));
        let inst = localize(&b, &systems, 0).unwrap();
        assert_eq!(inst.members, vec![0, 1]);
        let t = &inst.pairing.t1;
        assert_eq!(t.rank(), 2);
        let lambda = &inst.pairing.lambda1;
        assert_eq!(eta_wiles(t, lambda, LocalityPolicy::Strict).unwrap(), 1);
        let d = detect_congruence(t, lambda, None, LocalityPolicy::Strict).unwrap();
        assert_eq!(d.witness.unwrap().depth, 1);
    }

    #[test]
    fn level_37_mod_5_separates() {
        let b = ManinBasis::build(37, Prime::new(5).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(37, 5)).unwrap();
        for i in 0..2 {
            let inst = localize(&b, &systems, i).unwrap();
            assert_eq!(inst.members, vec![i]);
            assert_eq!(inst.pairing.t1.rank(), 1);
        }
    }

    #[test]
    fn level_eleven_mod_7_is_trivial() {
        let b = ManinBasis::build(11, Prime::new(7).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(11, 7)).unwrap();
        let inst = localize(&b, &systems, 0).unwrap();
        assert_eq!(inst.pairing.t1.rank(), 1);
        assert_eq!(eta_wiles(&inst.pairing.t1, &inst.pairing.lambda1, LocalityPolicy::Strict).unwrap(), 0);
    }

    #[test]
    fn level_dividing_prime_is_rejected() {
        let b = ManinBasis::build(33, Prime::new(3).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(33, 3)).unwrap();
        assert!(matches!(localize(&b, &systems, 0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn ramanujan_bound_is_exact() {
        let x = EigenValue { u: rat(0), v: rat(1) };
        // β = (-1 + √5)/2 has conjugates of size below 2√2
        assert!(within_ramanujan_bound(Some((-1, -1)), &x, 2));
        // β² - 4β - 1 = 0 has a conjugate 2 + √5 > 2√2
        assert!(!within_ramanujan_bound(Some((4, -1)), &x, 2));
        assert!(within_ramanujan_bound(None, &EigenValue { u: rat(-2), v: rat(0) }, 2));
        assert!(!within_ramanujan_bound(None, &EigenValue { u: rat(3), v: rat(0) }, 2));
    }

    #[test]
    fn level_23_quadratic_orbit() {
        let b = ManinBasis::build(23, Prime::new(3).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(23, 3)).unwrap();
        assert_eq!(systems.len(), 1);
        assert_eq!(systems[0].field, Some((-1, -1)));
        assert_eq!(systems[0].value(2), Some(&EigenValue { u: rat(0), v: rat(1) }));
    }

    #[test]
    fn level_eleven_has_one_rational_system() {
        let b = ManinBasis::build(11, Prime::new(5).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(11, 5)).unwrap();
        assert_eq!(systems.len(), 1);
        assert_eq!(systems[0].value(2).unwrap().u, rat(-2));
        let inst = localize(&b, &systems, 0).unwrap();
        assert_eq!(inst.pairing.t1.rank(), 1);
    }

    #[test]
    fn level_53_keeps_its_rational_system_beside_a_large_orbit() {
        let b = ManinBasis::build(53, Prime::new(3).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(53, 3)).unwrap();
        assert_eq!(systems.len(), 2);
        assert!(systems[0].is_rational());
        assert_eq!(systems[0].dimension(), 2);
        assert!(systems[1].unsupported.is_some());
        let inst = localize(&b, &systems, 0).unwrap();
        assert_eq!(inst.members, vec![0]);
        assert_eq!(inst.pairing.t1.rank(), 1);

        let b = ManinBasis::build(53, Prime::new(2).unwrap()).unwrap();
        let systems = extract_eigensystems(&b, &default_primes(53, 2)).unwrap();
        assert!(matches!(localize(&b, &systems, 0), Err(Error::Unsupported(_))));
    }
}
