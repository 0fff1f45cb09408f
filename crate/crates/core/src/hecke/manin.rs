//! Weight-2 modular symbols for `Γ0(N)` presented by Manin symbols, with the
//! boundary map, the cuspidal lattice, Hecke operators from Heilbronn
//! matrices and the Atkin–Lehner involution.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::p1::P1;
use crate::dvr::{is_prime, Lattice, Matrix, Prime, Rat};
use crate::error::{Error, Result};

/// A 2x2 integer matrix `[[a, b], [c, d]]`.
pub type Mat2 = [BigInt; 4];

pub fn mat2(a: i64, b: i64, c: i64, d: i64) -> Mat2 {
    [a.into(), b.into(), c.into(), d.into()]
}

pub fn mat2_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        &x[0] * &y[0] + &x[1] * &y[2],
        &x[0] * &y[1] + &x[1] * &y[3],
        &x[2] * &y[0] + &x[3] * &y[2],
        &x[2] * &y[1] + &x[3] * &y[3],
    ]
}

/// Inverse of a determinant-one matrix.
pub fn mat2_inv(x: &Mat2) -> Mat2 {
    [x[3].clone(), -x[1].clone(), -x[2].clone(), x[0].clone()]
}

/// A cusp `p/q` in lowest terms with `q >= 0`; `∞ = 1/0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cusp {
    pub p: BigInt,
    pub q: BigInt,
}

impl Cusp {
    pub fn new(p: BigInt, q: BigInt) -> Self {
        if q.is_zero() {
            return Cusp { p: BigInt::one(), q };
        }
        let g = p.gcd(&q);
        let (mut p, mut q) = (p / &g, q / &g);
        if q.is_negative() {
            p = -p;
            q = -q;
        }
        Cusp { p, q }
    }

    pub fn infinity() -> Self {
        Cusp { p: BigInt::one(), q: BigInt::zero() }
    }

    /// Γ0(N)-equivalence: with `p_j s_j ≡ 1 mod q_j`, the cusps are
    /// equivalent iff `s_1 q_2 ≡ s_2 q_1 mod gcd(q_1 q_2, N)`.
    pub fn equivalent(&self, other: &Cusp, n: u64) -> bool {
        let s = |c: &Cusp| -> BigInt {
            if c.q.is_zero() {
                c.p.clone()
            } else if c.q.is_one() {
                BigInt::zero()
            } else {
                crate::dvr::modinv(&c.p.mod_floor(&c.q), &c.q).expect("lowest terms")
            }
        };
        let g = (&self.q * &other.q).gcd(&BigInt::from(n));
        if g.is_zero() {
            return self == other;
        }
        ((s(self) * &other.q - s(other) * &self.q).mod_floor(&g)).is_zero()
    }
}

/// The modular symbol space of level `N`, its cuspidal sublattice over
/// `Z_(p)`, and cached Hecke data.
#[derive(Debug)]
pub struct ManinBasis {
    level: u64,
    prime: Prime,
    p1: P1,
    /// Image of each Manin symbol in `V = Q^dim`.
    symbol_images: Vec<Vec<Rat>>,
    /// Manin symbol representing each basis vector of `V`.
    basis_symbols: Vec<usize>,
    cusps: Vec<Cusp>,
    /// `cusps x dim`.
    boundary: Matrix,
    lattice: Lattice,
    cuspidal: Lattice,
    heilbronn: Mutex<HashMap<u64, Vec<[i64; 4]>>>,
}

/// `g` in `SL2(Z)` whose bottom row reduces to `(c, d)` modulo `N`.
pub fn lift_to_sl2(c: u64, d: u64, n: u64) -> Mat2 {
    let c0 = if c == 0 { n } else { c } as i64;
    let mut d0 = d as i64;
    while c0.gcd(&d0) != 1 {
        d0 += n as i64;
    }
    let e = c0.extended_gcd(&d0);
    // x c0 + y d0 = 1, so a = y, b = -x gives a d0 - b c0 = 1
    mat2(e.y, -e.x, c0, d0)
}

impl ManinBasis {
    pub fn build(level: u64, prime: Prime) -> Result<Self> {
        if level == 0 {
            return Err(Error::Validation("level must be positive".into()));
        }
        let p1 = P1::new(level);
        let n = p1.len();

        // two-term relations x + xS = 0
        let mut gen_of: Vec<Option<(usize, bool)>> = vec![None; n];
        let mut gen_reps = Vec::new();
        for i in 0..n {
            let j = p1.s(i);
            if i < j {
                gen_of[i] = Some((gen_reps.len(), false));
                gen_of[j] = Some((gen_reps.len(), true));
                gen_reps.push(i);
            }
        }
        let ngens = gen_reps.len();

        // three-term relations x + xτ + xτ² = 0
        let mut rows = Vec::new();
        for i in 0..n {
            let (t1, t2) = (p1.tau(i), p1.tau(p1.tau(i)));
            if i > t1 || i > t2 {
                continue;
            }
            let mut row = vec![Rat::zero(); ngens];
            for x in [i, t1, t2] {
                if let Some((g, neg)) = gen_of[x] {
                    if neg {
                        row[g] -= Rat::one();
                    } else {
                        row[g] += Rat::one();
                    }
                }
            }
            if row.iter().any(|c| !c.is_zero()) {
                rows.push(row);
            }
        }
        let (rref, pivots) = if rows.is_empty() {
            (Matrix::zeros(0, ngens), Vec::new())
        } else {
            Matrix::from_rows(rows, ngens).rref()
        };
        let free: Vec<usize> = (0..ngens).filter(|c| !pivots.contains(c)).collect();
        let dim = free.len();
        let mut gen_images = vec![vec![Rat::zero(); dim]; ngens];
        for (k, &f) in free.iter().enumerate() {
            gen_images[f][k] = Rat::one();
        }
        for (r, &c) in pivots.iter().enumerate() {
            for (k, &f) in free.iter().enumerate() {
                gen_images[c][k] = -rref[(r, f)].clone();
            }
        }
        let symbol_images: Vec<Vec<Rat>> = gen_of
            .iter()
            .map(|g| match g {
                None => vec![Rat::zero(); dim],
                Some((g, false)) => gen_images[*g].clone(),
                Some((g, true)) => gen_images[*g].iter().map(|x| -x).collect(),
            })
            .collect();
        let basis_symbols: Vec<usize> = free.iter().map(|&f| gen_reps[f]).collect();

        // boundary
        let mut cusps: Vec<Cusp> = Vec::new();
        let mut cusp_index = |c: Cusp| -> usize {
            if let Some(i) = cusps.iter().position(|k| k.equivalent(&c, level)) {
                return i;
            }
            cusps.push(c);
            cusps.len() - 1
        };
        let mut entries = Vec::with_capacity(dim);
        for &x in &basis_symbols {
            let (c, d) = p1.rep(x);
            let g = lift_to_sl2(c, d, level);
            let hi = cusp_index(Cusp::new(g[0].clone(), g[2].clone()));
            let lo = cusp_index(Cusp::new(g[1].clone(), g[3].clone()));
            entries.push((hi, lo));
        }
        let mut boundary = Matrix::zeros(cusps.len(), dim);
        for (j, (hi, lo)) in entries.into_iter().enumerate() {
            boundary[(hi, j)] += Rat::one();
            boundary[(lo, j)] -= Rat::one();
        }

        if dim + 1 != 2 * super::genus(level) as usize + super::cusp_count(level) as usize {
            return Err(Error::Validation(format!("symbol space of level {level} has unexpected dimension {dim}")));
        }
        let mut distinct: Vec<Vec<Rat>> = gen_images.clone();
        distinct.sort();
        distinct.dedup();
        let lattice = Lattice::from_generators(prime, dim, &distinct);
        let cuspidal = if dim == 0 { lattice.clone() } else { lattice.saturate(&boundary.kernel())? };
        Ok(ManinBasis {
            level,
            prime,
            p1,
            symbol_images,
            basis_symbols,
            cusps,
            boundary,
            lattice,
            cuspidal,
            heilbronn: Mutex::new(HashMap::new()),
        })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn p1(&self) -> &P1 {
        &self.p1
    }

    /// Dimension of the full symbol space.
    pub fn dimension(&self) -> usize {
        self.basis_symbols.len()
    }

    pub fn cusp_count(&self) -> usize {
        self.cusps.len()
    }

    pub fn boundary(&self) -> &Matrix {
        &self.boundary
    }

    /// `Z_(p)`-span of all Manin symbols in `V`.
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Kernel of the boundary map, saturated in the symbol lattice.
    pub fn cuspidal(&self) -> &Lattice {
        &self.cuspidal
    }

    pub fn cuspidal_rank(&self) -> usize {
        self.cuspidal.rank()
    }

    pub fn symbol_image(&self, i: usize) -> &[Rat] {
        &self.symbol_images[i]
    }

    pub fn basis_symbol(&self, j: usize) -> usize {
        self.basis_symbols[j]
    }

    fn image_of(&self, c: &BigInt, d: &BigInt, acc: &mut [Rat], sign: bool) {
        if let Some(i) = self.p1.index_big(c, d) {
            for (a, x) in acc.iter_mut().zip(&self.symbol_images[i]) {
                if sign {
                    *a -= x;
                } else {
                    *a += x;
                }
            }
        }
    }

    /// `{∞, a/b}` via the continued fraction convergents of `a/b`:
    /// `Σ_k (q_k : (-1)^{k-1} q_{k-1})`.
    pub fn infinity_to(&self, cusp: &Cusp) -> Vec<Rat> {
        let mut acc = vec![Rat::zero(); self.dimension()];
        if cusp.q.is_zero() {
            return acc;
        }
        let (mut x, mut y) = (cusp.p.clone(), cusp.q.clone());
        let (mut q2, mut q1) = (BigInt::one(), BigInt::zero());
        let mut k = 0usize;
        while !y.is_zero() {
            let a = x.div_floor(&y);
            let q = &a * &q1 + &q2;
            let prev = if k % 2 == 1 { q1.clone() } else { -q1.clone() };
            self.image_of(&q, &prev, &mut acc, false);
            let r = &x - &a * &y;
            x = std::mem::replace(&mut y, r);
            q2 = std::mem::replace(&mut q1, q);
            k += 1;
        }
        acc
    }

    /// `{α, β} = {∞, β} - {∞, α}`.
    pub fn modular_symbol(&self, alpha: &Cusp, beta: &Cusp) -> Vec<Rat> {
        let b = self.infinity_to(beta);
        let a = self.infinity_to(alpha);
        b.iter().zip(&a).map(|(x, y)| x - y).collect()
    }

    /// The Manin symbol of basis vector `j` as `{g0, g∞}`.
    fn basis_cusps(&self, j: usize) -> (Cusp, Cusp) {
        let (c, d) = self.p1.rep(self.basis_symbols[j]);
        let g = lift_to_sl2(c, d, self.level);
        (Cusp::new(g[1].clone(), g[3].clone()), Cusp::new(g[0].clone(), g[2].clone()))
    }

    /// Matrix of a linear map given on basis vectors of `V`, restricted to
    /// the cuspidal lattice in its own coordinates.
    fn restrict_to_cuspidal(&self, full: &Matrix) -> Result<Matrix> {
        let r = self.cuspidal.rank();
        let mut cols = Vec::with_capacity(r);
        for b in self.cuspidal.basis() {
            let image = full.mul_vec(b);
            cols.push(
                self.cuspidal
                    .coordinates(&image)
                    .ok_or_else(|| Error::Validation("operator does not preserve cusp forms".into()))?,
            );
        }
        Ok(Matrix::from_cols(&cols, r))
    }

    /// Merel's Heilbronn matrices of determinant `n`:
    /// `ad - bc = n`, `a > b >= 0`, `d > c >= 0`.
    pub fn heilbronn(&self, n: u64) -> Vec<[i64; 4]> {
        let mut cache = self.heilbronn.lock().expect("cache lock");
        cache.entry(n).or_insert_with(|| heilbronn_merel(n as i64)).clone()
    }

    /// `T_n` on the full space, columns indexed by basis vectors of `V`.
    pub fn hecke_full(&self, n: u64) -> Matrix {
        let dim = self.dimension();
        let hs = self.heilbronn(n);
        let mut cols = Vec::with_capacity(dim);
        for &x in &self.basis_symbols {
            let (c, d) = self.p1.rep(x);
            let (c, d) = (c as i64, d as i64);
            let mut acc = vec![Rat::zero(); dim];
            for h in &hs {
                let (c2, d2) = (c * h[0] + d * h[2], c * h[1] + d * h[3]);
                if let Some(i) = self.p1.index(c2, d2) {
                    for (a, v) in acc.iter_mut().zip(&self.symbol_images[i]) {
                        *a += v;
                    }
                }
            }
            cols.push(acc);
        }
        Matrix::from_cols(&cols, dim)
    }

    /// `T_q` (or `U_q` when `q | N`) on the cuspidal lattice.
    pub fn hecke_operator(&self, q: u64) -> Result<Matrix> {
        if !is_prime(q) {
            return Err(Error::Validation(format!("{q} is not prime")));
        }
        self.restrict_to_cuspidal(&self.hecke_full(q))
    }

    /// `W_N = [[0,-1],[N,0]]` on the full space.
    pub fn atkin_lehner_full(&self) -> Matrix {
        let n = BigInt::from(self.level);
        let w = |c: &Cusp| -> Cusp { Cusp::new(-c.q.clone(), &n * &c.p) };
        let dim = self.dimension();
        let cols: Vec<Vec<Rat>> = (0..dim)
            .map(|j| {
                let (lo, hi) = self.basis_cusps(j);
                self.modular_symbol(&w(&lo), &w(&hi))
            })
            .collect();
        Matrix::from_cols(&cols, dim)
    }

    pub fn atkin_lehner(&self) -> Result<Matrix> {
        self.restrict_to_cuspidal(&self.atkin_lehner_full())
    }

    /// Coordinates of a cuspidal vector of `V` in the cuspidal basis.
    pub fn cuspidal_coordinates(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        self.cuspidal.coordinates(v)
    }
}

fn heilbronn_merel(n: i64) -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    for a in 1..=n {
        for d in 1..=n {
            let k = a * d - n;
            if k < 0 {
                continue;
            }
            if k == 0 {
                for c in 0..d {
                    out.push([a, 0, c, d]);
                }
                for b in 1..a {
                    out.push([a, b, 0, d]);
                }
                continue;
            }
            for b in 1..a {
                if k % b == 0 && k / b < d {
                    out.push([a, b, k / b, d]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvr::rat;
    use crate::hecke::{cusp_count, genus};

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn small_levels_have_expected_ranks() {
        for (n, cusp_rank) in [(1u64, 0usize), (11, 2), (37, 4), (23, 4)] {
            let b = ManinBasis::build(n, p(3)).unwrap();
            assert_eq!(b.cuspidal_rank(), cusp_rank, "N = {n}");
            assert_eq!(b.dimension() + 1, 2 * genus(n) as usize + cusp_count(n) as usize);
            if n > 1 {
                assert_eq!(b.cusp_count() as u64, cusp_count(n));
            }
        }
    }

    #[test]
    fn cuspidal_rank_is_twice_the_genus_up_to_200() {
        for n in 1..=200u64 {
            let b = ManinBasis::build(n, p(7)).unwrap();
            assert_eq!(b.cuspidal_rank(), 2 * genus(n) as usize, "N = {n}");
        }
    }

    #[test]
    fn hecke_operators_commute() {
        for n in [30u64, 37, 44] {
            let b = ManinBasis::build(n, p(7)).unwrap();
            let ops: Vec<Matrix> = [2u64, 3, 5, 7].iter().map(|&q| b.hecke_operator(q).unwrap()).collect();
            for x in &ops {
                for y in &ops {
                    assert_eq!(x.mul(y), y.mul(x), "N = {n}");
                }
            }
        }
    }

    #[test]
    fn level_37_t2_has_two_rational_factors() {
        let b = ManinBasis::build(37, p(3)).unwrap();
        let f = b.hecke_operator(2).unwrap().charpoly();
        // (x + 2)^2 x^2
        assert_eq!(f, vec![rat(0), rat(0), rat(4), rat(4), rat(1)]);
    }

    #[test]
    fn level_eleven_t2() {
        let b = ManinBasis::build(11, p(3)).unwrap();
        let full = b.hecke_full(2);
        // (x - 3)(x + 2)^2
        assert_eq!(full.charpoly(), vec![rat(-12), rat(-8), rat(1), rat(1)]);
        let t2 = b.hecke_operator(2).unwrap();
        assert_eq!(t2.trace(), rat(-4));
    }

    #[test]
    fn level_23_t2_is_quadratic() {
        let b = ManinBasis::build(23, p(3)).unwrap();
        let t2 = b.hecke_operator(2).unwrap();
        let f = crate::poly::mul(&[rat(-1), rat(1), rat(1)], &[rat(-1), rat(1), rat(1)]);
        assert_eq!(t2.charpoly(), f);
    }

    #[test]
    fn atkin_lehner_is_an_involution() {
        for n in [11u64, 37, 30] {
            let b = ManinBasis::build(n, p(5)).unwrap();
            let w = b.atkin_lehner().unwrap();
            assert_eq!(w.mul(&w), Matrix::identity(b.cuspidal_rank()), "N = {n}");
        }
    }

    #[test]
    fn cusp_equivalence() {
        let inf = Cusp::infinity();
        let zero = Cusp::new(0.into(), 1.into());
        assert!(!inf.equivalent(&zero, 11));
        assert!(inf.equivalent(&Cusp::new(1.into(), 11.into()), 11));
        assert!(zero.equivalent(&Cusp::new(1.into(), 3.into()), 11));
    }
}
