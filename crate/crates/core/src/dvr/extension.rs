//! Explicit finite extensions `O_L` of `Z_(p)`: unramified (defined by a
//! monic polynomial irreducible mod `p`) or totally ramified (Eisenstein).
//!
//! Elements of `L` are coordinate vectors on the power basis
//! `1, x, ..., x^{d-1}`. In both cases the power basis is an `O`-basis of
//! `O_L`, so integrality and the `ϖ_L`-adic valuation are read off the
//! coordinates.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{is_integral, residue, valuation, Prime, Rat, Valuation};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionKind {
    Unramified,
    TotallyRamified,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    prime: Prime,
    kind: ExtensionKind,
    /// Monic defining polynomial, constant term first, leading 1 omitted.
    modulus: Vec<Rat>,
}

impl Extension {
    /// `L = E` itself.
    pub fn trivial(prime: Prime) -> Self {
        Extension { prime, kind: ExtensionKind::Unramified, modulus: vec![Rat::zero()] }
    }

    /// `lower` holds the non-leading coefficients of a monic polynomial,
    /// constant term first.
    pub fn new(prime: Prime, kind: ExtensionKind, lower: Vec<Rat>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Validation("extension of degree 0".into()));
        }
        if !lower.iter().all(|c| is_integral(c, prime)) {
            return Err(Error::Validation("defining polynomial is not integral".into()));
        }
        let ext = Extension { prime, kind, modulus: lower };
        match kind {
            ExtensionKind::TotallyRamified => {
                let eisenstein = ext.modulus.iter().all(|c| valuation(c, prime) >= Valuation::Finite(1))
                    && valuation(&ext.modulus[0], prime) == Valuation::Finite(1);
                if !eisenstein {
                    return Err(Error::Validation("defining polynomial is not Eisenstein".into()));
                }
            }
            ExtensionKind::Unramified => {
                if !irreducible_mod_p(&ext.modulus, prime) {
                    return Err(Error::Validation("defining polynomial is reducible mod p".into()));
                }
            }
        }
        Ok(ext)
    }

    pub fn degree(&self) -> usize {
        self.modulus.len()
    }

    pub fn kind(&self) -> ExtensionKind {
        self.kind
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn modulus(&self) -> &[Rat] {
        &self.modulus
    }

    /// Ramification index `e`.
    pub fn ramification(&self) -> usize {
        match self.kind {
            ExtensionKind::Unramified => 1,
            ExtensionKind::TotallyRamified => self.degree(),
        }
    }

    /// Residue degree `f`.
    pub fn residue_degree(&self) -> usize {
        match self.kind {
            ExtensionKind::Unramified => self.degree(),
            ExtensionKind::TotallyRamified => 1,
        }
    }

    /// Embeds a base scalar.
    pub fn scalar(&self, x: &Rat) -> Vec<Rat> {
        let mut v = vec![Rat::zero(); self.degree()];
        v[0] = x.clone();
        v
    }

    pub fn mul(&self, a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        let d = self.degree();
        let mut prod = vec![Rat::zero(); 2 * d - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        // x^d = -(c_0 + c_1 x + ... )
        for k in (d..prod.len()).rev() {
            let top = std::mem::take(&mut prod[k]);
            if top.is_zero() {
                continue;
            }
            for (i, c) in self.modulus.iter().enumerate() {
                prod[k - d + i] -= &top * c;
            }
        }
        prod.truncate(d);
        prod
    }

    pub fn is_integral(&self, a: &[Rat]) -> bool {
        a.iter().all(|x| is_integral(x, self.prime))
    }

    /// Valuation normalised so that `v_L(ϖ_L) = 1`.
    pub fn valuation(&self, a: &[Rat]) -> Valuation {
        let e = self.ramification() as i64;
        a.iter()
            .enumerate()
            .filter_map(|(i, x)| valuation(x, self.prime).finite().map(|v| match self.kind {
                ExtensionKind::Unramified => v,
                ExtensionKind::TotallyRamified => e * v + i as i64,
            }))
            .min()
            .map_or(Valuation::Infinite, Valuation::Finite)
    }
}

/// Irreducibility over `F_p` by exhaustive search for factors of degree
/// at most `d/2`; desk-scale only.
fn irreducible_mod_p(lower: &[Rat], p: Prime) -> bool {
    let d = lower.len();
    let pp = p.get();
    let mut f: Vec<u64> = lower.iter().map(|c| residue(c, p)).collect();
    f.push(1);
    for k in 1..=d / 2 {
        let count = pp.checked_pow(k as u32).unwrap_or(u64::MAX);
        if count > 1_000_000 {
            return true;
        }
        for idx in 0..count {
            let mut g = Vec::with_capacity(k + 1);
            let mut t = idx;
            for _ in 0..k {
                g.push(t % pp);
                t /= pp;
            }
            g.push(1);
            if divides_mod_p(&g, &f, pp) {
                return false;
            }
        }
    }
    true
}

fn divides_mod_p(g: &[u64], f: &[u64], p: u64) -> bool {
    let mut r = f.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let top = r.pop().unwrap() % p;
        let shift = r.len() - dg;
        for i in 0..dg {
            r[shift + i] = (r[shift + i] + p - (top * g[i]) % p) % p;
        }
    }
    r.iter().all(|&x| x % p == 0)
}
