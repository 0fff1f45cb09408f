//! Exact arithmetic over the localization `Z_(p)` and its fraction field `Q`.
//!
//! Every scalar is a [`Rat`] (an arbitrary precision rational). Elements of
//! the local ring are the rationals whose reduced denominator is prime to `p`;
//! the uniformizer is `p` itself. Nothing here truncates: valuations are read
//! off exact numerators and denominators.

pub mod extension;
pub mod lattice;
pub mod matrix;
pub mod smith;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use extension::{Extension, ExtensionKind};
pub use lattice::Lattice;
pub use matrix::Matrix;
pub use smith::{smith_normal_form, SmithDecomposition};

/// Field elements: exact rationals.
pub type Rat = BigRational;

/// A rational prime, checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn big(self) -> BigInt {
        BigInt::from(self.0)
    }

    /// `p^k` as a rational; `k` may be negative.
    pub fn pow(self, k: i64) -> Rat {
        let base = BigInt::from(self.0).pow(k.unsigned_abs() as u32);
        if k >= 0 {
            Rat::from_integer(base)
        } else {
            Rat::new(BigInt::one(), base)
        }
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A `p`-adic valuation; `Infinite` sorts above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

/// Exponent of `p` in a nonzero integer.
pub fn int_valuation(n: &BigInt, p: Prime) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let pb = p.big();
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        n = q;
        v += 1;
    }
}

pub fn valuation(x: &Rat, p: Prime) -> Valuation {
    match int_valuation(x.numer(), p) {
        None => Valuation::Infinite,
        Some(a) => {
            let b = int_valuation(x.denom(), p).unwrap_or(0);
            Valuation::Finite(a as i64 - b as i64)
        }
    }
}

/// True when `x` lies in `Z_(p)`.
pub fn is_integral(x: &Rat, p: Prime) -> bool {
    !x.denom().is_multiple_of(&p.big())
}

/// True when `x` is a unit of `Z_(p)`.
pub fn is_unit(x: &Rat, p: Prime) -> bool {
    valuation(x, p) == Valuation::Finite(0)
}

/// Splits a nonzero `x` as `u * p^k` with `u` a unit.
pub fn unit_part(x: &Rat, p: Prime) -> (Rat, i64) {
    let k = valuation(x, p).finite().expect("unit_part of zero");
    (x / p.pow(k), k)
}

/// Reduction of an integral scalar into `[0, m)` modulo the integer `m`
/// (`m` must be prime to every denominator involved).
pub fn mod_int(x: &Rat, m: &BigInt) -> BigInt {
    let den_inv = modinv(&x.denom().mod_floor(m), m).expect("denominator not invertible");
    (x.numer().mod_floor(m) * den_inv).mod_floor(m)
}

/// Residue of an integral scalar in `F_p`.
pub fn residue(x: &Rat, p: Prime) -> u64 {
    mod_int(x, &p.big()).to_u64().unwrap()
}

/// Canonical representative of the class of `x` in `Q / p^k Z_(p)`.
///
/// Zero when `val(x) >= k`; otherwise `c * p^v` with `v = val(x)` and
/// `0 < c < p^(k-v)`, `c` congruent to the unit part of `x`.
pub fn canonical_residue(x: &Rat, p: Prime, k: i64) -> Rat {
    let v = match valuation(x, p) {
        Valuation::Infinite => return Rat::zero(),
        Valuation::Finite(v) => v,
    };
    if v >= k {
        return Rat::zero();
    }
    let unit = x / p.pow(v);
    let modulus = p.big().pow((k - v) as u32);
    let c = mod_int(&unit, &modulus);
    Rat::from_integer(c) * p.pow(v)
}

pub fn modinv(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Formats as `"n/d"` (or `"n"` when the denominator is one).
pub fn format_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        None => Ok(Rat::from_integer(s.parse::<BigInt>().map_err(|_| bad())?)),
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(n, d))
        }
    }
}

/// An element of `Z_(p)`: a rational whose denominator is prime to `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalScalar {
    value: Rat,
    prime: Prime,
}

impl LocalScalar {
    pub fn new(value: Rat, prime: Prime) -> Result<Self> {
        if !is_integral(&value, prime) {
            return Err(Error::NotIntegral(format_rat(&value)));
        }
        Ok(LocalScalar { value, prime })
    }

    pub fn from_parts(numerator: i64, denominator: i64, prime: Prime) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Self::new(frac(numerator, denominator), prime)
    }

    pub fn valuation(&self) -> Valuation {
        valuation(&self.value, self.prime)
    }

    pub fn value(&self) -> &Rat {
        &self.value
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == Valuation::Finite(0)
    }
}

impl fmt::Display for LocalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rat(&self.value))
    }
}

/// The base ring together with an optional extension used for congruence
/// witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DvrContext {
    pub prime: Prime,
    pub extension: Option<Extension>,
}

impl DvrContext {
    pub fn new(prime: Prime) -> Self {
        DvrContext { prime, extension: None }
    }
}

/// Sign-aware absolute value of the numerator, used as a pivot tie-breaker.
pub(crate) fn abs_numerator(x: &Rat) -> BigInt {
    x.numer().abs()
}
