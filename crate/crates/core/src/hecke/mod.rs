//! Modular symbols for `Γ0(N)` as a factory of Hecke algebras, modules and
//! perfect pairings over `Z_(p)`.
//!
//! Weight-2 cuspidal modular symbols carry the intersection pairing, which
//! is perfect on the integral lattice; twisting by the Atkin–Lehner
//! involution makes the Hecke operators self-adjoint. Localizing at a
//! maximal ideal then yields instances for the duality routines.

mod eigen;
mod manin;
mod p1;
mod pairing;

pub use eigen::{default_primes, extract_eigensystems, localize, EigenValue, Eigensystem, HeckeInstance};
pub use manin::{lift_to_sl2, mat2, mat2_inv, mat2_mul, Cusp, ManinBasis, Mat2};
pub use p1::P1;
pub use pairing::{intersection_gram, IntersectionData};

use num_integer::Integer;

use crate::doc::{Bundle, Provenance};
use crate::dvr::{residue, Prime};
use crate::error::{Error, Result};

/// Builds the level-`N` symbols, extracts eigensystems for `primes`
/// (default: the Sturm-bound generators) and localizes at the rational
/// eigensystem `index`, bundling the result with its provenance.
pub fn localize_and_export(
    level: u64,
    prime: Prime,
    index: usize,
    primes: Option<Vec<u64>>,
) -> Result<(Bundle, Vec<Eigensystem>)> {
    if level > 1000 {
        return Err(Error::Validation(format!("level {level} is above the supported bound 1000")));
    }
    let primes = primes.unwrap_or_else(|| default_primes(level, prime.get()));
    let b = ManinBasis::build(level, prime)?;
    let systems = extract_eigensystems(&b, &primes)?;
    if systems.is_empty() {
        return Err(Error::Validation(format!("no cusp forms at level {level}")));
    }
    let inst = localize(&b, &systems, index)?;
    let lambda = &systems[index];
    let residual_class = inst
        .generators
        .iter()
        .map(|&q| residue(&lambda.value(q).expect("generator was computed").u, prime))
        .collect();
    let provenance = Provenance {
        level,
        prime: prime.get(),
        genus: genus(level),
        prime_bound: primes.iter().copied().max().unwrap_or(0),
        generators: inst.generators.clone(),
        residual_class,
        members: inst.members.clone(),
    };
    Ok((Bundle { pairing: inst.pairing, provenance }, systems))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn euler_phi(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, &q| acc / q * (q - 1))
}

/// `[SL2(Z) : Γ0(N)] = N ∏_{q | N} (1 + 1/q)`.
pub fn index_gamma0(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, &q| acc / q * (q + 1))
}

pub fn cusp_count(n: u64) -> u64 {
    (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| euler_phi(d.gcd(&(n / d)))).sum()
}

fn elliptic_count(n: u64, modulus: u64, disc: i64) -> u64 {
    if n.is_multiple_of(modulus) {
        return 0;
    }
    prime_factors(n)
        .iter()
        .map(|&q| {
            let s = kronecker(disc, q);
            (1 + s) as u64
        })
        .product()
}

/// `(D/q)` for prime `q` and `D` in `{-1, -3}`, where `(-1/2) = 0` counts
/// elliptic points of order two through `Z[i]`.
fn kronecker(d: i64, q: u64) -> i64 {
    if q == 2 {
        return match d.rem_euclid(8) {
            1 | 7 if d != -1 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let qi = q as i64;
    let a = d.rem_euclid(qi);
    if a == 0 {
        return 0;
    }
    let mut r = 1i64;
    let mut base = a;
    let mut e = (qi - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % qi;
        }
        base = base * base % qi;
        e >>= 1;
    }
    if r == 1 { 1 } else { -1 }
}

/// Genus of `X0(N)`.
pub fn genus(n: u64) -> u64 {
    let mu = index_gamma0(n) as i64;
    let nu2 = elliptic_count(n, 4, -1) as i64;
    let nu3 = elliptic_count(n, 9, -3) as i64;
    let c = cusp_count(n) as i64;
    let twelve_g = 12 + mu - 3 * nu2 - 4 * nu3 - 6 * c;
    (twelve_g / 12) as u64
}

/// Sturm bound for weight 2 on `Γ0(N)`: Hecke operators `T_n` with
/// `n <= μ/6` generate the Hecke algebra.
pub fn sturm_bound(n: u64) -> u64 {
    index_gamma0(n) / 6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_table() {
        let known = [(1, 0), (11, 1), (22, 2), (23, 2), (37, 2), (30, 3), (36, 1), (49, 1), (64, 3), (100, 7)];
        for (n, g) in known {
            assert_eq!(genus(n), g, "N = {n}");
        }
    }

    #[test]
    fn export_round_trips() {
        let (bundle, systems) = localize_and_export(37, Prime::new(2).unwrap(), 0, None).unwrap();
        assert_eq!(systems.len(), 2);
        assert_eq!(bundle.provenance.members, vec![0, 1]);
        let doc = crate::doc::Document::Bundle(Box::new(bundle));
        let text = crate::doc::to_string(&doc);
        assert_eq!(crate::doc::parse(&text).unwrap(), doc);
        let report = crate::suite::run_case("37", &doc);
        assert_eq!(report.status, crate::suite::Status::Pass, "{:?} {:?}", report.failures, report.error);
    }

    #[test]
    fn cusps_and_sturm() {
        assert_eq!(cusp_count(11), 2);
        assert_eq!(cusp_count(36), 12);
        assert_eq!(sturm_bound(37), 6);
    }
}
