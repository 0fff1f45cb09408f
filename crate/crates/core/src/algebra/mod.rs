//! Finite flat `Z_(p)`-algebras given by structure constants, and their
//! characters.

mod split;

pub use split::{eta_fitting, eta_wiles, split_at_character, SplitData};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dvr::{is_integral, residue, rat, Lattice, Matrix, Prime, Rat};
use crate::error::{Error, Result};

/// Whether downstream operations insist on a local algebra.
///
/// The congruence-ideal constructions make sense for any finite flat reduced
/// algebra; `Semilocal` admits products of local algebras, which the random
/// suites use to exercise congruence detection with isolated characters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalityPolicy {
    #[default]
    Strict,
    Semilocal,
}

/// A commutative `Z_(p)`-algebra, free of rank `r` on a chosen basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatAlgebra {
    prime: Prime,
    rank: usize,
    /// `c_{ijk}` at index `(i * r + j) * r + k`.
    consts: Vec<Rat>,
    unit: Vec<Rat>,
    eigensystem: Option<EigensystemPresentation>,
}

/// A split algebra presented by the values of its characters on a set of
/// algebra generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigensystemPresentation {
    /// `characters x generators`.
    pub values: Matrix,
    /// Basis coordinates of each generator.
    pub generators: Vec<Vec<Rat>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AlgebraCertificate {
    pub integral: bool,
    pub associative: bool,
    pub commutative: bool,
    pub unital: bool,
    pub local: bool,
    pub reduced: bool,
}

impl AlgebraCertificate {
    pub fn passes(&self, policy: LocalityPolicy) -> bool {
        self.require(policy).is_ok()
    }

    pub fn require(&self, policy: LocalityPolicy) -> Result<()> {
        let mut failed = Vec::new();
        for (ok, name) in [
            (self.integral, "integrality"),
            (self.associative, "associativity"),
            (self.commutative, "commutativity"),
            (self.unital, "unit"),
        ] {
            if !ok {
                failed.push(name);
            }
        }
        if !self.local && policy == LocalityPolicy::Strict {
            failed.push("locality");
        }
        if !failed.is_empty() {
            return Err(Error::Validation(format!("algebra fails {}", failed.join(", "))));
        }
        if !self.reduced {
            return Err(Error::Unsupported("T_E is not etale over E (algebra is not reduced)".into()));
        }
        Ok(())
    }
}

impl FlatAlgebra {
    pub fn new(prime: Prime, rank: usize, consts: Vec<Rat>, unit: Vec<Rat>) -> Result<Self> {
        if consts.len() != rank * rank * rank || unit.len() != rank {
            return Err(Error::Dimension(format!(
                "rank {rank} needs {} structure constants and a unit of length {rank}",
                rank * rank * rank
            )));
        }
        Ok(FlatAlgebra { prime, rank, consts, unit, eigensystem: None })
    }

    /// Builds from sparse `(i, j, k, c_{ijk})` triples; omitted constants are zero.
    pub fn from_sparse(prime: Prime, rank: usize, entries: &[(usize, usize, usize, Rat)], unit: Vec<Rat>) -> Result<Self> {
        let mut consts = vec![Rat::zero(); rank * rank * rank];
        for (i, j, k, c) in entries {
            if *i >= rank || *j >= rank || *k >= rank {
                return Err(Error::Dimension(format!("structure constant index ({i},{j},{k}) out of range")));
            }
            consts[(i * rank + j) * rank + k] = c.clone();
        }
        Self::new(prime, rank, consts, unit)
    }

    /// `T = O`.
    pub fn base(prime: Prime) -> Self {
        FlatAlgebra { prime, rank: 1, consts: vec![Rat::one()], unit: vec![Rat::one()], eigensystem: None }
    }

    /// `{(a, b) in O x O : a ≡ b mod p^n}` on the basis `(1,1), (0,p^n)`,
    /// with its two projections as characters.
    pub fn fiber_product(prime: Prime, n: u32) -> (Self, Vec<Character>) {
        let values = Matrix::from_rows(vec![vec![Rat::zero()], vec![prime.pow(n as i64)]], 1);
        Self::from_eigensystems(prime, &values).expect("fiber product presentation")
    }

    /// The `O`-subalgebra of `O^r` generated by the columns of an
    /// eigensystem matrix (rows are characters, columns generators).
    pub fn from_eigensystems(prime: Prime, values: &Matrix) -> Result<(Self, Vec<Character>)> {
        let r = values.rows();
        if r == 0 {
            return Err(Error::Validation("eigensystem matrix has no characters".into()));
        }
        if !values.is_integral(prime) {
            return Err(Error::Validation("eigenvalues are not integral".into()));
        }
        for i in 0..r {
            for j in 0..i {
                if values.row(i) == values.row(j) {
                    return Err(Error::Validation(format!("characters {j} and {i} coincide")));
                }
            }
        }
        let unit = vec![Rat::one(); r];
        let gens: Vec<Vec<Rat>> = (0..values.cols()).map(|j| values.col(j)).collect();
        let pointwise = |a: &[Rat], b: &[Rat]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>();
        let lattice = multiplicative_closure(prime, r, &unit, &gens, pointwise)?;
        debug_assert_eq!(lattice.rank(), r);
        let mut alg = Self::from_closed_lattice(&lattice, &unit, pointwise)?;
        let basis = lattice.basis();
        let chars = (0..r)
            .map(|k| Character::new(basis.iter().map(|b| b[k].clone()).collect()))
            .collect();
        let generators = gens.iter().map(|g| lattice.coordinates(g).expect("generator in closure")).collect();
        alg.eigensystem = Some(EigensystemPresentation { values: values.clone(), generators });
        Ok((alg, chars))
    }

    /// The `O`-algebra generated by commuting `m x m` matrices, realized on
    /// a basis of matrices. Returns the algebra and its basis matrices.
    pub fn generated_by_matrices(prime: Prime, m: usize, gens: &[Matrix]) -> Result<(Self, Vec<Matrix>)> {
        let flatten = |a: &Matrix| a.to_rows().into_iter().flatten().collect::<Vec<Rat>>();
        let unflatten = |v: &[Rat]| Matrix::from_rows(v.chunks(m).map(|c| c.to_vec()).collect(), m);
        let matmul = |a: &[Rat], b: &[Rat]| flatten(&unflatten(a).mul(&unflatten(b)));
        let unit = flatten(&Matrix::identity(m));
        let flat: Vec<Vec<Rat>> = gens.iter().map(flatten).collect();
        let lattice = multiplicative_closure(prime, m * m, &unit, &flat, matmul)?;
        let alg = Self::from_closed_lattice(&lattice, &unit, matmul)?;
        let mats = lattice.basis().iter().map(|b| unflatten(b)).collect();
        Ok((alg, mats))
    }

    fn from_closed_lattice(lattice: &Lattice, unit: &[Rat], mul: impl Fn(&[Rat], &[Rat]) -> Vec<Rat>) -> Result<Self> {
        let b = lattice.basis();
        let r = b.len();
        let mut consts = Vec::with_capacity(r * r * r);
        for i in 0..r {
            for j in 0..r {
                let c = lattice
                    .coordinates(&mul(&b[i], &b[j]))
                    .ok_or_else(|| Error::Validation("product leaves the algebra".into()))?;
                consts.extend(c);
            }
        }
        let unit = lattice.coordinates(unit).ok_or_else(|| Error::Validation("unit outside the algebra".into()))?;
        Self::new(lattice.prime(), r, consts, unit)
    }

    /// The same algebra on the reordered basis `b'_{σ(i)} = b_i`.
    pub fn permuted(&self, sigma: &[usize]) -> Result<Self> {
        let r = self.rank;
        let mut seen = vec![false; r];
        if sigma.len() != r || !sigma.iter().all(|&s| s < r && !std::mem::replace(&mut seen[s], true)) {
            return Err(Error::Validation("basis reordering is not a permutation".into()));
        }
        let mut consts = vec![Rat::zero(); r * r * r];
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    consts[(sigma[i] * r + sigma[j]) * r + sigma[k]] = self.structure_constant(i, j, k).clone();
                }
            }
        }
        let mut unit = vec![Rat::zero(); r];
        for i in 0..r {
            unit[sigma[i]] = self.unit[i].clone();
        }
        Self::new(self.prime, r, consts, unit)
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn unit(&self) -> &[Rat] {
        &self.unit
    }

    pub fn eigensystem(&self) -> Option<&EigensystemPresentation> {
        self.eigensystem.as_ref()
    }

    /// Attaches an eigensystem presentation after checking its shape and
    /// that the generator coordinates evaluate to the recorded values under
    /// the characters of `self`.
    pub fn with_eigensystem(mut self, e: EigensystemPresentation) -> Result<Self> {
        if e.generators.len() != e.values.cols() || e.generators.iter().any(|g| g.len() != self.rank) {
            return Err(Error::Dimension("eigensystem presentation does not match the algebra".into()));
        }
        let chars = split_characters(&self)?;
        for (k, chi) in chars.iter().enumerate() {
            let row: Vec<Rat> = e.generators.iter().map(|g| chi.apply(g)).collect();
            if !(0..e.values.rows()).any(|i| e.values.row(i) == row.as_slice()) {
                return Err(Error::Validation(format!("character {k} is missing from the eigensystem presentation")));
            }
        }
        self.eigensystem = Some(e);
        Ok(self)
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rat {
        &self.consts[(i * self.rank + j) * self.rank + k]
    }

    /// Nonzero structure constants in index order.
    pub fn sparse_constants(&self) -> Vec<(usize, usize, usize, Rat)> {
        let r = self.rank;
        let mut out = Vec::new();
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    let c = self.structure_constant(i, j, k);
                    if !c.is_zero() {
                        out.push((i, j, k, c.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn basis_vector(&self, i: usize) -> Vec<Rat> {
        (0..self.rank).map(|k| if k == i { Rat::one() } else { Rat::zero() }).collect()
    }

    pub fn mul(&self, a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        let r = self.rank;
        let mut out = vec![Rat::zero(); r];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let xy = x * y;
                for (k, o) in out.iter_mut().enumerate() {
                    let c = self.structure_constant(i, j, k);
                    if !c.is_zero() {
                        *o += &xy * c;
                    }
                }
            }
        }
        out
    }

    /// Matrix of multiplication by `a`; column `j` holds `a * b_j`.
    pub fn mult_matrix(&self, a: &[Rat]) -> Matrix {
        let r = self.rank;
        let cols: Vec<Vec<Rat>> = (0..r).map(|j| self.mul(a, &self.basis_vector(j))).collect();
        Matrix::from_cols(&cols, r)
    }

    pub fn trace(&self, a: &[Rat]) -> Rat {
        self.mult_matrix(a).trace()
    }

    /// `t_{ij} = trace(b_i b_j)`.
    pub fn trace_form(&self) -> Matrix {
        let r = self.rank;
        let mut m = Matrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                let bij = self.mul(&self.basis_vector(i), &self.basis_vector(j));
                m[(i, j)] = self.trace(&bij);
            }
        }
        m
    }

    pub fn validate(&self) -> AlgebraCertificate {
        let r = self.rank;
        let integral = self.consts.iter().chain(&self.unit).all(|c| is_integral(c, self.prime));
        let basis: Vec<Vec<Rat>> = (0..r).map(|i| self.basis_vector(i)).collect();
        let products: Vec<Vec<Vec<Rat>>> =
            (0..r).map(|i| (0..r).map(|j| self.mul(&basis[i], &basis[j])).collect()).collect();
        let commutative = (0..r).all(|i| (0..i).all(|j| products[i][j] == products[j][i]));
        let associative = (0..r).all(|i| {
            (0..r).all(|j| (0..r).all(|k| self.mul(&products[i][j], &basis[k]) == self.mul(&basis[i], &products[j][k])))
        });
        let unital = (0..r).all(|i| self.mul(&self.unit, &basis[i]) == basis[i]);
        let reduced = r > 0 && !self.trace_form().det().is_zero();
        let local = integral && associative && commutative && unital && self.residue_is_local();
        AlgebraCertificate { integral, associative, commutative, unital, local, reduced }
    }

    /// `T/pT` is local iff the Frobenius-fixed subalgebra `{x : x^p = x}`
    /// is one-dimensional over `F_p` (it is `F_p^(number of local factors)`).
    fn residue_is_local(&self) -> bool {
        let r = self.rank;
        if r == 0 {
            return false;
        }
        let p = self.prime.get();
        let c: Vec<u64> = self.consts.iter().map(|x| residue(x, self.prime)).collect();
        let unit: Vec<u64> = self.unit.iter().map(|x| residue(x, self.prime)).collect();
        let mulp = |a: &[u64], b: &[u64]| -> Vec<u64> {
            let mut out = vec![0u64; r];
            for i in 0..r {
                if a[i] == 0 {
                    continue;
                }
                for j in 0..r {
                    if b[j] == 0 {
                        continue;
                    }
                    let xy = (a[i] as u128 * b[j] as u128 % p as u128) as u64;
                    for k in 0..r {
                        let cc = c[(i * r + j) * r + k];
                        if cc != 0 {
                            out[k] = ((out[k] as u128 + xy as u128 * cc as u128) % p as u128) as u64;
                        }
                    }
                }
            }
            out
        };
        let mut frob = vec![vec![0u64; r]; r];
        for j in 0..r {
            let mut base: Vec<u64> = (0..r).map(|k| u64::from(k == j)).collect();
            let mut acc = unit.clone();
            let mut e = p;
            while e > 0 {
                if e & 1 == 1 {
                    acc = mulp(&acc, &base);
                }
                base = mulp(&base, &base);
                e >>= 1;
            }
            for k in 0..r {
                frob[k][j] = (acc[k] + p - u64::from(k == j)) % p;
            }
        }
        r - rank_mod_p(frob, p) == 1
    }
}

fn rank_mod_p(mut m: Vec<Vec<u64>>, p: u64) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pr) = (rank..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, pr);
        let inv = pow_mod(m[rank][c], p - 2, p);
        for x in m[rank].iter_mut() {
            *x = (*x as u128 * inv as u128 % p as u128) as u64;
        }
        for i in 0..rows {
            if i != rank && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    let t = (f as u128 * m[rank][j] as u128 % p as u128) as u64;
                    m[i][j] = (m[i][j] + p - t) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Smallest `Z_(p)`-lattice containing `unit` and `gens` and closed under
/// `mul`.
pub fn multiplicative_closure(
    prime: Prime,
    dim: usize,
    unit: &[Rat],
    gens: &[Vec<Rat>],
    mul: impl Fn(&[Rat], &[Rat]) -> Vec<Rat>,
) -> Result<Lattice> {
    let mut start = vec![unit.to_vec()];
    start.extend(gens.iter().cloned());
    let mut lat = Lattice::from_generators(prime, dim, &start);
    for _ in 0..64 {
        let b = lat.basis();
        let mut g = b.to_vec();
        for i in 0..b.len() {
            for j in i..b.len() {
                g.push(mul(&b[i], &b[j]));
            }
        }
        let next = Lattice::from_generators(prime, dim, &g);
        if next == lat {
            return Ok(lat);
        }
        lat = next;
    }
    Err(Error::Validation("generators are not integral: closure does not stabilise".into()))
}

/// An `O`-algebra map `T -> O`, by its values on the basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character {
    values: Vec<Rat>,
}

impl Character {
    pub fn new(values: Vec<Rat>) -> Self {
        Character { values }
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn apply(&self, a: &[Rat]) -> Rat {
        crate::dvr::matrix::dot(&self.values, a)
    }

    pub fn validate(&self, t: &FlatAlgebra) -> Result<()> {
        let r = t.rank();
        if self.values.len() != r {
            return Err(Error::Dimension(format!("character has {} values for rank {r}", self.values.len())));
        }
        if !self.values.iter().all(|x| is_integral(x, t.prime())) {
            return Err(Error::Validation("character values are not integral".into()));
        }
        if self.apply(t.unit()) != Rat::one() {
            return Err(Error::Validation("character does not send 1 to 1".into()));
        }
        for i in 0..r {
            for j in 0..=i {
                let prod = t.mul(&t.basis_vector(i), &t.basis_vector(j));
                if self.apply(&prod) != &self.values[i] * &self.values[j] {
                    return Err(Error::Validation(format!("character is not multiplicative on b{i} * b{j}")));
                }
            }
        }
        Ok(())
    }
}

/// All characters `T_E -> E` of a split reduced algebra, sorted.
///
/// A generic element `w` of `T` has distinct eigenvalues on the regular
/// representation; each rational eigenvalue gives a one-dimensional left
/// eigenspace, which is the character.
pub fn split_characters(t: &FlatAlgebra) -> Result<Vec<Character>> {
    let r = t.rank();
    for attempt in 0..32i64 {
        let s = rat(attempt + 1);
        let mut w = vec![Rat::zero(); r];
        let mut c = Rat::one();
        for x in w.iter_mut() {
            *x = c.clone();
            c *= &s;
        }
        let lw = t.mult_matrix(&w);
        let f = lw.charpoly();
        if crate::poly::squarefree(&f).len() != r + 1 {
            continue;
        }
        let roots = crate::poly::rational_roots(&f);
        if roots.len() < r {
            return Err(Error::Unsupported("algebra is not split over E".into()));
        }
        let mut chars = Vec::with_capacity(r);
        for a in roots {
            let shifted = lw.sub(&Matrix::identity(r).scale(&a)).transpose();
            let ker = shifted.kernel();
            if ker.len() != 1 {
                return Err(Error::Lemma("eigenspace of a separating element is not a line".into()));
            }
            let norm = crate::dvr::matrix::dot(&ker[0], t.unit());
            let chi = Character::new(ker[0].iter().map(|x| x / &norm).collect());
            chi.validate(t).map_err(|e| Error::Lemma(format!("recovered character invalid: {e}")))?;
            chars.push(chi);
        }
        chars.sort();
        return Ok(chars);
    }
    Err(Error::Unsupported("no separating element found; algebra is not reduced".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvr::rat;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn base_ring_passes_everything() {
        let c = FlatAlgebra::base(p(5)).validate();
        assert!(c.integral && c.associative && c.commutative && c.unital && c.local && c.reduced);
    }

    #[test]
    fn dual_numbers_are_not_reduced() {
        // O[x]/(x^2) on (1, x)
        let t = FlatAlgebra::from_sparse(
            p(5),
            2,
            &[(0, 0, 0, rat(1)), (0, 1, 1, rat(1)), (1, 0, 1, rat(1))],
            vec![rat(1), rat(0)],
        )
        .unwrap();
        let c = t.validate();
        assert!(c.local && c.associative && c.unital);
        assert!(!c.reduced);
        assert!(matches!(c.require(LocalityPolicy::Strict), Err(Error::Unsupported(_))));
    }

    #[test]
    fn fiber_product_basis_and_certificate() {
        let (t, chars) = FlatAlgebra::fiber_product(p(3), 2);
        // basis (1,1), (0,9): b1^2 = 9 b1
        assert_eq!(t.structure_constant(1, 1, 1), &rat(9));
        assert_eq!(t.unit(), &[rat(1), rat(0)]);
        let c = t.validate();
        assert!(c.passes(LocalityPolicy::Strict));
        assert_eq!(chars[0].values(), &[rat(1), rat(0)]);
        assert_eq!(chars[1].values(), &[rat(1), rat(9)]);
        for ch in &chars {
            ch.validate(&t).unwrap();
        }
    }

    #[test]
    fn product_of_fields_is_not_local() {
        let (t, _) = FlatAlgebra::from_eigensystems(p(5), &Matrix::from_i64(&[&[0], &[1]])).unwrap();
        let c = t.validate();
        assert!(!c.local);
        assert!(c.passes(LocalityPolicy::Semilocal));
        assert!(!c.passes(LocalityPolicy::Strict));
    }

    #[test]
    fn split_characters_recovers_eigensystem_rows() {
        let rows = Matrix::from_i64(&[&[2, 0], &[7, 25], &[2, 50], &[12, 75]]);
        let (t, chars) = FlatAlgebra::from_eigensystems(p(5), &rows).unwrap();
        let mut want = chars.clone();
        want.sort();
        assert_eq!(split_characters(&t).unwrap(), want);
    }

    #[test]
    fn gaussian_integers_are_not_split() {
        // Z[i] at p = 5, basis (1, i)
        let t = FlatAlgebra::from_sparse(
            p(5),
            2,
            &[(0, 0, 0, rat(1)), (0, 1, 1, rat(1)), (1, 0, 1, rat(1)), (1, 1, 0, rat(-1))],
            vec![rat(1), rat(0)],
        )
        .unwrap();
        assert!(matches!(split_characters(&t), Err(Error::Unsupported(_))));
    }

    #[test]
    fn character_validation_catches_non_multiplicative() {
        let (t, _) = FlatAlgebra::fiber_product(p(3), 1);
        assert!(Character::new(vec![rat(1), rat(1)]).validate(&t).is_err());
        assert!(Character::new(vec![rat(1)]).validate(&t).is_err());
    }
}
