//! Congruence detection: a character `λ` has `η_λ ≠ O` exactly when some
//! other character of `T` agrees with it modulo the maximal ideal of a
//! splitting field. Also the cotangent order `#(p/p²)` of a presented
//! local ring, which bounds `#(O/η)` from above.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::algebra::{eta_wiles, multiplicative_closure, split_characters, Character, FlatAlgebra, LocalityPolicy};
use crate::dvr::{smith_normal_form, valuation, Extension, Lattice, Matrix, Prime, Rat, Valuation};
use crate::error::{Error, Result};

/// A character with values in `O_L`, each value in power-basis coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExtCharacter {
    pub values: Vec<Vec<Rat>>,
}

impl ExtCharacter {
    pub fn from_base(chi: &Character, ext: &Extension) -> Self {
        ExtCharacter { values: chi.values().iter().map(|v| ext.scalar(v)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceWitness {
    pub partner: ExtCharacter,
    pub extension: Extension,
    /// Largest `k` with `λ ≡ λ′ mod ϖ_L^k` on every basis element.
    pub depth: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum Splitting {
    /// Every character of `T_E` was found over `L`.
    Complete,
    /// Only some characters are defined over `L`.
    Partial(usize),
    Unavailable(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Detection {
    pub eta_exponent: i64,
    pub witness: Option<CongruenceWitness>,
    pub splitting: Splitting,
}

impl Detection {
    /// The existence bit, decided by `η` alone.
    pub fn congruent(&self) -> bool {
        self.eta_exponent >= 1
    }
}

/// Depth of the congruence between two `O_L`-valued vectors; `None` when
/// they are equal.
pub fn congruence_depth(a: &[Vec<Rat>], b: &[Vec<Rat>], ext: &Extension) -> Option<i64> {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| {
            let diff: Vec<Rat> = x.iter().zip(y).map(|(u, v)| u - v).collect();
            ext.valuation(&diff).finite()
        })
        .min()
}

/// All characters `T -> L`, sorted.
///
/// A generic `w` generates `T_E`; writing each basis element as a
/// polynomial in `w`, a character is determined by the root of the
/// characteristic polynomial of `w` it sends `w` to.
pub fn characters_over(t: &FlatAlgebra, ext: &Extension) -> Result<Vec<ExtCharacter>> {
    let r = t.rank();
    for attempt in 0..32i64 {
        let s = Rat::from_integer((attempt + 1).into());
        let mut w = vec![Rat::zero(); r];
        let mut c = Rat::one();
        for x in w.iter_mut() {
            *x = c.clone();
            c *= &s;
        }
        let f = t.mult_matrix(&w).charpoly();
        if crate::poly::squarefree(&f).len() != r + 1 {
            continue;
        }
        let mut powers = vec![t.unit().to_vec()];
        for k in 1..r {
            let next = t.mul(&powers[k - 1], &w);
            powers.push(next);
        }
        let wm = Matrix::from_cols(&powers, r);
        let winv = wm.inverse().ok_or_else(|| Error::Lemma("powers of a separating element are dependent".into()))?;
        let d = ext.degree();
        let mut chars = Vec::new();
        for beta in crate::poly::roots_in_extension(&f, ext) {
            let mut beta_pows = vec![ext.scalar(&Rat::one())];
            for k in 1..r {
                let next = ext.mul(&beta_pows[k - 1], &beta);
                beta_pows.push(next);
            }
            let values: Vec<Vec<Rat>> = (0..r)
                .map(|i| {
                    let coeffs = winv.col(i);
                    let mut v = vec![Rat::zero(); d];
                    for (c, bp) in coeffs.iter().zip(&beta_pows) {
                        for (o, b) in v.iter_mut().zip(bp) {
                            *o += c * b;
                        }
                    }
                    v
                })
                .collect();
            chars.push(ExtCharacter { values });
        }
        chars.sort();
        return Ok(chars);
    }
    Err(Error::Unsupported("no separating element found; algebra is not reduced".into()))
}

/// Looks for a character `λ′ ≠ λ` congruent to `λ` modulo `ϖ_L`, choosing
/// the deepest one. Without `ext` the algebra must split over `E`.
pub fn detect_congruence(
    t: &FlatAlgebra,
    lambda: &Character,
    ext: Option<&Extension>,
    policy: LocalityPolicy,
) -> Result<Detection> {
    let eta_exponent = eta_wiles(t, lambda, policy)?;
    let trivial = Extension::trivial(t.prime());
    let ext = ext.unwrap_or(&trivial);
    let chars = if ext.degree() == 1 {
        match split_characters(t) {
            Ok(cs) => cs.iter().map(|c| ExtCharacter::from_base(c, ext)).collect(),
            Err(Error::Unsupported(msg)) => {
                return Ok(Detection { eta_exponent, witness: None, splitting: Splitting::Unavailable(msg) });
            }
            Err(e) => return Err(e),
        }
    } else {
        characters_over(t, ext)?
    };
    let splitting = if chars.len() == t.rank() { Splitting::Complete } else { Splitting::Partial(chars.len()) };
    let me = ExtCharacter::from_base(lambda, ext);
    if !chars.contains(&me) {
        return Err(Error::Lemma("λ is not among the recovered characters".into()));
    }
    let mut best: Option<(i64, &ExtCharacter)> = None;
    for chi in chars.iter().filter(|c| **c != me) {
        let Some(depth) = congruence_depth(&chi.values, &me.values, ext) else {
            continue;
        };
        if depth >= 1 && best.is_none_or(|(d, _)| depth > d) {
            best = Some((depth, chi));
        }
    }
    let witness =
        best.map(|(depth, chi)| CongruenceWitness { partner: chi.clone(), extension: ext.clone(), depth });
    if splitting == Splitting::Complete && witness.is_some() != (eta_exponent >= 1) {
        return Err(Error::Lemma(format!(
            "congruence detection: η exponent {eta_exponent} but a congruent partner {}",
            if witness.is_some() { "exists" } else { "does not exist" }
        )));
    }
    Ok(Detection { eta_exponent, witness, splitting })
}

/// Indices `j ≠ i` whose rows agree with row `i` modulo `ϖ_L`. Entries are
/// `L`-elements in power-basis coordinates.
pub fn brute_force_congruence_oracle(rows: &[Vec<Vec<Rat>>], i: usize, ext: &Extension) -> Vec<usize> {
    (0..rows.len())
        .filter(|&j| j != i)
        .filter(|&j| {
            rows[j].iter().zip(&rows[i]).all(|(a, b)| {
                let diff: Vec<Rat> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                ext.valuation(&diff) >= Valuation::Finite(1)
            })
        })
        .collect()
}

/// The oracle on an eigensystem matrix over `O`.
pub fn brute_force_rational(values: &Matrix, i: usize, prime: Prime) -> Vec<usize> {
    let ext = Extension::trivial(prime);
    let rows: Vec<Vec<Vec<Rat>>> =
        (0..values.rows()).map(|k| values.row(k).iter().map(|x| vec![x.clone()]).collect()).collect();
    brute_force_congruence_oracle(&rows, i, &ext)
}

/// A polynomial over `O` in sparse exponent-vector form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePoly {
    pub terms: Vec<(Vec<u32>, Rat)>,
}

impl SparsePoly {
    pub fn eval(&self, point: &[Rat]) -> Rat {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(point).fold(c.clone(), |acc, (&k, x)| acc * pow(x, k)))
            .sum()
    }

    /// `∂/∂x_v` evaluated at `point`.
    pub fn partial(&self, v: usize, point: &[Rat]) -> Rat {
        self.terms
            .iter()
            .filter(|(e, _)| e[v] > 0)
            .map(|(e, c)| {
                let mut acc = c * Rat::from_integer(e[v].into());
                for (i, (&k, x)) in e.iter().zip(point).enumerate() {
                    let k = if i == v { k - 1 } else { k };
                    acc *= pow(x, k);
                }
                acc
            })
            .sum()
    }

    /// Value at a tuple of elements of `T`.
    pub fn eval_in(&self, t: &FlatAlgebra, images: &[Vec<Rat>]) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); t.rank()];
        for (e, c) in &self.terms {
            let mut m = t.unit().to_vec();
            for (&k, x) in e.iter().zip(images) {
                for _ in 0..k {
                    m = t.mul(&m, x);
                }
            }
            for (o, y) in out.iter_mut().zip(&m) {
                *o += c * y;
            }
        }
        out
    }
}

fn pow(x: &Rat, k: u32) -> Rat {
    (0..k).fold(Rat::one(), |acc, _| acc * x)
}

/// `R = O[x_1..x_g]/(relations)` localised at the kernel of `θ: x ↦ θ_point`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalRingPresentation {
    pub prime: Prime,
    pub num_variables: usize,
    pub relations: Vec<SparsePoly>,
    pub theta_point: Vec<Rat>,
}

impl LocalRingPresentation {
    pub fn validate(&self) -> Result<()> {
        let g = self.num_variables;
        if self.theta_point.len() != g {
            return Err(Error::Dimension(format!("θ point has {} entries for {g} variables", self.theta_point.len())));
        }
        if !self.theta_point.iter().all(|x| valuation(x, self.prime) >= Valuation::Finite(1)) {
            return Err(Error::Validation("θ point is not in the maximal ideal".into()));
        }
        for (k, f) in self.relations.iter().enumerate() {
            if f.terms.iter().any(|(e, c)| e.len() != g || !crate::dvr::is_integral(c, self.prime)) {
                return Err(Error::Validation(format!("relation {k} is malformed or not integral")));
            }
            if !f.eval(&self.theta_point).is_zero() {
                return Err(Error::Validation(format!("relation {k} does not vanish at θ")));
            }
        }
        Ok(())
    }

    /// Jacobian of the relations at `θ`, one row per relation.
    pub fn jacobian(&self) -> Matrix {
        let rows = self
            .relations
            .iter()
            .map(|f| (0..self.num_variables).map(|v| f.partial(v, &self.theta_point)).collect())
            .collect();
        Matrix::from_rows(rows, self.num_variables)
    }
}

/// `p^k` for the order of `p/p²`, or infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CotangentOrder {
    Finite(i64),
    Infinite,
}

impl PartialOrd for CotangentOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CotangentOrder {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (CotangentOrder::Finite(a), CotangentOrder::Finite(b)) => a.cmp(b),
            (CotangentOrder::Finite(_), CotangentOrder::Infinite) => Ordering::Less,
            (CotangentOrder::Infinite, CotangentOrder::Finite(_)) => Ordering::Greater,
            (CotangentOrder::Infinite, CotangentOrder::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for CotangentOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CotangentOrder::Finite(k) => write!(f, "{k}"),
            CotangentOrder::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for CotangentOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CotangentOrder::Finite(k) => s.serialize_i64(*k),
            CotangentOrder::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// `p/p² = O^g / (Jacobian at θ)`: the sum of its elementary divisors, or
/// infinite when the Jacobian has rank below `g`.
pub fn cotangent_order(r: &LocalRingPresentation) -> Result<CotangentOrder> {
    r.validate()?;
    let g = r.num_variables;
    if g == 0 {
        return Ok(CotangentOrder::Finite(0));
    }
    let snf = smith_normal_form(&r.jacobian(), r.prime);
    if snf.rank() < g {
        return Ok(CotangentOrder::Infinite);
    }
    Ok(CotangentOrder::Finite(snf.exponents.iter().sum()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SurjectionCertificate {
    pub cotangent: CotangentOrder,
    pub eta_exponent: i64,
    pub holds: bool,
    pub strict: bool,
}

/// Checks that `x_v ↦ images[v]` is a surjection `R -> T` with `θ = λ∘f`,
/// then compares `#(p/p²)` with `#(O/η)`.
pub fn surjection_eta_inequality(
    r: &LocalRingPresentation,
    t: &FlatAlgebra,
    images: &[Vec<Rat>],
    lambda: &Character,
    policy: LocalityPolicy,
) -> Result<SurjectionCertificate> {
    r.validate()?;
    if images.len() != r.num_variables || images.iter().any(|x| x.len() != t.rank()) {
        return Err(Error::Dimension("variable images do not match the presentation".into()));
    }
    if r.prime != t.prime() {
        return Err(Error::Validation("presentation and algebra use different primes".into()));
    }
    if !images.iter().all(|x| x.iter().all(|c| crate::dvr::is_integral(c, t.prime()))) {
        return Err(Error::Validation("variable images are not in T".into()));
    }
    for (k, f) in r.relations.iter().enumerate() {
        if f.eval_in(t, images).iter().any(|c| !c.is_zero()) {
            return Err(Error::Validation(format!("f is not a homomorphism: relation {k} does not map to 0")));
        }
    }
    for (v, x) in images.iter().enumerate() {
        if lambda.apply(x) != r.theta_point[v] {
            return Err(Error::Validation(format!("θ ≠ λ∘f on variable {v}")));
        }
    }
    let closure = multiplicative_closure(t.prime(), t.rank(), t.unit(), images, |a, b| t.mul(a, b))?;
    if closure != Lattice::standard(t.prime(), t.rank()) {
        return Err(Error::Validation("f is not onto T".into()));
    }
    let cotangent = cotangent_order(r)?;
    let eta_exponent = eta_wiles(t, lambda, policy)?;
    let bound = CotangentOrder::Finite(eta_exponent);
    Ok(SurjectionCertificate { cotangent, eta_exponent, holds: cotangent >= bound, strict: cotangent > bound })
}

/// `O[x]/(x² - p^n x)` with `x ↦ (0, p^n)`: the fiber product, presented
/// on one generator, with `θ(x) = 0`.
pub fn fiber_product_presentation(prime: Prime, n: u32) -> LocalRingPresentation {
    LocalRingPresentation {
        prime,
        num_variables: 1,
        relations: vec![SparsePoly { terms: vec![(vec![2], Rat::one()), (vec![1], -prime.pow(n as i64))] }],
        theta_point: vec![Rat::zero()],
    }
}

/// Presentation of a split algebra with one variable per generator, each
/// shifted to vanish under `λ`, subject to one relation per variable (the
/// product of `x - (χ(g) - λ(g))` over the distinct values). Optionally
/// adds `extra` redundant variables `y` with `y ↦ 0` and relation `p^k y`,
/// which inflate the cotangent space.
pub fn free_presentation(
    t: &FlatAlgebra,
    chars: &[Character],
    generators: &[Vec<Rat>],
    lambda: &Character,
    extra: &[u32],
) -> (LocalRingPresentation, Vec<Vec<Rat>>) {
    let prime = t.prime();
    let g = generators.len() + extra.len();
    let mut relations = Vec::new();
    let mut images = Vec::new();
    for (v, gen) in generators.iter().enumerate() {
        let base = lambda.apply(gen);
        let mut roots: Vec<Rat> = chars.iter().map(|c| c.apply(gen) - &base).collect();
        roots.sort();
        roots.dedup();
        // coefficients of ∏ (x - a), constant term first
        let mut coeffs = vec![Rat::one()];
        for a in &roots {
            let mut next = vec![Rat::zero(); coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * a;
            }
            coeffs = next;
        }
        let terms = coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let mut e = vec![0u32; g];
                e[v] = k as u32;
                (e, c)
            })
            .collect();
        relations.push(SparsePoly { terms });
        images.push(gen.iter().zip(t.unit()).map(|(x, u)| x - &base * u).collect());
    }
    for (j, &k) in extra.iter().enumerate() {
        let v = generators.len() + j;
        let mut e = vec![0u32; g];
        e[v] = 1;
        relations.push(SparsePoly { terms: vec![(e.clone(), prime.pow(k as i64))] });
        let mut sq = vec![0u32; g];
        sq[v] = 2;
        relations.push(SparsePoly { terms: vec![(sq, Rat::one())] });
        images.push(vec![Rat::zero(); t.rank()]);
    }
    let presentation = LocalRingPresentation { prime, num_variables: g, relations, theta_point: vec![Rat::zero(); g] };
    (presentation, images)
}
