//! Dense univariate polynomials over `Q` (coefficients constant term first)
//! and exact rational root finding.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::dvr::{Extension, Rat};

pub fn trim(mut f: Vec<Rat>) -> Vec<Rat> {
    while f.last().is_some_and(Zero::is_zero) {
        f.pop();
    }
    f
}

pub fn degree(f: &[Rat]) -> Option<usize> {
    f.iter().rposition(|c| !c.is_zero())
}

pub fn eval(f: &[Rat], x: &Rat) -> Rat {
    f.iter().rev().fold(Rat::zero(), |acc, c| acc * x + c)
}

pub fn derivative(f: &[Rat]) -> Vec<Rat> {
    f.iter().enumerate().skip(1).map(|(i, c)| c * Rat::from_integer(BigInt::from(i))).collect()
}

pub fn mul(f: &[Rat], g: &[Rat]) -> Vec<Rat> {
    if f.is_empty() || g.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rat::zero(); f.len() + g.len() - 1];
    for (i, a) in f.iter().enumerate() {
        for (j, b) in g.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    trim(out)
}

/// Quotient and remainder; panics on division by zero.
pub fn divrem(f: &[Rat], g: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let g = trim(g.to_vec());
    let dg = degree(&g).expect("division by zero polynomial");
    let mut r = trim(f.to_vec());
    if r.len() <= dg {
        return (Vec::new(), r);
    }
    let mut q = vec![Rat::zero(); r.len() - dg];
    let lead = g[dg].clone();
    while let Some(dr) = degree(&r) {
        if dr < dg {
            break;
        }
        let c = &r[dr] / &lead;
        for (i, gc) in g.iter().enumerate() {
            r[dr - dg + i] -= &c * gc;
        }
        q[dr - dg] = c;
        r = trim(r);
    }
    (trim(q), r)
}

pub fn gcd(f: &[Rat], g: &[Rat]) -> Vec<Rat> {
    let mut a = trim(f.to_vec());
    let mut b = trim(g.to_vec());
    while !b.is_empty() {
        let (_, r) = divrem(&a, &b);
        a = b;
        b = r;
    }
    monic(&a)
}

pub fn monic(f: &[Rat]) -> Vec<Rat> {
    let f = trim(f.to_vec());
    match f.last() {
        None => f,
        Some(l) => {
            let l = l.clone();
            f.into_iter().map(|c| c / &l).collect()
        }
    }
}

/// Squarefree part (monic).
pub fn squarefree(f: &[Rat]) -> Vec<Rat> {
    let g = gcd(f, &derivative(f));
    monic(&divrem(f, &g).0)
}

/// The distinct rational roots of `f`, ascending.
///
/// Roots of a rational polynomial are found as integer roots of an
/// associated monic integer polynomial: lift simple roots modulo a small
/// auxiliary prime by Newton iteration past the Cauchy bound and keep the
/// candidates that are exact roots.
pub fn rational_roots(f: &[Rat]) -> Vec<Rat> {
    let f = trim(f.to_vec());
    let Some(n) = degree(&f) else {
        return Vec::new();
    };
    if n == 0 {
        return Vec::new();
    }
    let mut roots = Vec::new();
    // strip x^k
    let k = f.iter().position(|c| !c.is_zero()).unwrap();
    if k > 0 {
        roots.push(Rat::zero());
    }
    let f = squarefree(&f[k..]);
    let n = f.len() - 1;
    if n == 0 {
        return roots;
    }
    // integer coefficients
    let lcm = f.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = f.iter().map(|c| (c * Rat::from_integer(lcm.clone())).to_integer()).collect();
    let lead = ints[n].clone();
    // h(y) = lead^{n-1} f(y / lead), monic with integer coefficients
    let mut h = Vec::with_capacity(n + 1);
    for (i, c) in ints.iter().enumerate().take(n) {
        h.push(c * lead.pow((n - 1 - i) as u32));
    }
    h.push(BigInt::one());
    for z in monic_integer_roots(&h) {
        roots.push(Rat::new(z, lead.clone()));
    }
    roots.sort();
    roots.dedup();
    roots
}

fn eval_int(h: &[BigInt], x: &BigInt) -> BigInt {
    h.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

fn monic_integer_roots(h: &[BigInt]) -> Vec<BigInt> {
    let n = h.len() - 1;
    if n == 1 {
        return vec![-h[0].clone()];
    }
    let bound = h.iter().take(n).map(|c| c.abs()).max().unwrap_or_default() + 1u32;
    let dh: Vec<BigInt> = h.iter().enumerate().skip(1).map(|(i, c)| c * BigInt::from(i)).collect();
    let mut ell = 101u64;
    loop {
        ell = next_prime(ell);
        let m = BigInt::from(ell);
        let mut simple = Vec::new();
        let mut ok = true;
        for r in 0..ell {
            let rb = BigInt::from(r);
            if eval_int(h, &rb).mod_floor(&m).is_zero() {
                if eval_int(&dh, &rb).mod_floor(&m).is_zero() {
                    ok = false;
                    break;
                }
                simple.push(rb);
            }
        }
        if !ok {
            continue;
        }
        let target = &bound * 2u32 + 1u32;
        let mut out = Vec::new();
        for r0 in simple {
            let mut r = r0;
            let mut modulus = m.clone();
            while modulus < target {
                modulus = &modulus * &modulus;
                let fr = eval_int(h, &r);
                let dr = eval_int(&dh, &r).mod_floor(&modulus);
                let inv = crate::dvr::modinv(&dr, &modulus).expect("simple root");
                r = (&r - fr * inv).mod_floor(&modulus);
            }
            let half = &modulus / 2u32;
            let z = if r > half { r - &modulus } else { r };
            if eval_int(h, &z).is_zero() {
                out.push(z);
            }
        }
        return out;
    }
}

/// The distinct roots of `f` in `L`, as power-basis coordinates.
///
/// Works modulo an auxiliary prime `ℓ` at which the defining polynomial of
/// `L` splits into distinct linear factors: every root of `f` in `L` maps to
/// a `d`-tuple of `ℓ`-adic roots of `f`, one per embedding. Each tuple is
/// interpolated back to power-basis coordinates, rationally reconstructed
/// and kept only if it is an exact root.
pub fn roots_in_extension(f: &[Rat], ext: &Extension) -> Vec<Vec<Rat>> {
    let d = ext.degree();
    let f = trim(f.to_vec());
    let Some(n) = degree(&f) else {
        return Vec::new();
    };
    if n == 0 {
        return Vec::new();
    }
    if d == 1 {
        return rational_roots(&f).into_iter().map(|r| vec![r]).collect();
    }
    let f = squarefree(&f);
    let n = f.len() - 1;
    let mut fl: Vec<Rat> = f.clone();
    let lead = fl[n].clone();
    for c in fl.iter_mut() {
        *c /= &lead;
    }
    let mut m: Vec<Rat> = ext.modulus().to_vec();
    m.push(Rat::one());
    let bad_denominators = fl.iter().chain(&m).fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let dm = derivative(&m);
    let df = derivative(&fl);
    let mut ell = 101u64;
    let (ell, m_roots, f_roots) = loop {
        ell = next_prime(ell);
        let lb = BigInt::from(ell);
        if (&bad_denominators % &lb).is_zero() {
            continue;
        }
        let mr = simple_roots_mod(&m, &dm, ell);
        let Some(mr) = mr else { continue };
        if mr.len() != d {
            continue;
        }
        let Some(fr) = simple_roots_mod(&fl, &df, ell) else { continue };
        break (ell, mr, fr);
    };
    let modulus = {
        let lb = BigInt::from(ell);
        let mut q = lb.clone();
        while q.bits() < 400 {
            q = &q * &lb;
        }
        q
    };
    let a: Vec<BigInt> = m_roots.iter().map(|r| hensel(&m, &dm, r, ell, &modulus)).collect();
    let rho: Vec<BigInt> = f_roots.iter().map(|r| hensel(&fl, &df, r, ell, &modulus)).collect();
    // Lagrange basis polynomials for the nodes a_i, coefficients mod q
    let basis: Vec<Vec<BigInt>> = (0..d)
        .map(|i| {
            let mut poly = vec![BigInt::one()];
            let mut denom = BigInt::one();
            for k in 0..d {
                if k == i {
                    continue;
                }
                let mut next = vec![BigInt::zero(); poly.len() + 1];
                for (j, c) in poly.iter().enumerate() {
                    next[j + 1] += c;
                    next[j] -= c * &a[k];
                }
                poly = next.into_iter().map(|c| c.mod_floor(&modulus)).collect();
                denom = (denom * (&a[i] - &a[k])).mod_floor(&modulus);
            }
            let inv = crate::dvr::modinv(&denom, &modulus).expect("distinct nodes");
            poly.into_iter().map(|c| (c * &inv).mod_floor(&modulus)).collect()
        })
        .collect();
    let s = rho.len();
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    'tuples: loop {
        let mut coords = vec![BigInt::zero(); d];
        for (i, &j) in idx.iter().enumerate() {
            for (k, c) in basis[i].iter().enumerate() {
                coords[k] += &rho[j] * c;
            }
        }
        let cand: Option<Vec<Rat>> =
            coords.iter().map(|c| rational_reconstruction(&c.mod_floor(&modulus), &modulus)).collect();
        if let Some(y) = cand {
            let val = fl.iter().rev().fold(vec![Rat::zero(); d], |acc, c| {
                let mut next = ext.mul(&acc, &y);
                next[0] += c;
                next
            });
            if val.iter().all(Zero::is_zero) && !out.contains(&y) {
                out.push(y);
            }
        }
        for pos in 0..d {
            idx[pos] += 1;
            if idx[pos] < s {
                continue 'tuples;
            }
            idx[pos] = 0;
        }
        break;
    }
    out.sort();
    out
}

fn rat_mod(c: &Rat, m: &BigInt) -> BigInt {
    let inv = crate::dvr::modinv(&c.denom().mod_floor(m), m).expect("denominator prime to modulus");
    (c.numer() * inv).mod_floor(m)
}

fn eval_mod(f: &[Rat], x: &BigInt, m: &BigInt) -> BigInt {
    f.iter().rev().fold(BigInt::zero(), |acc, c| (acc * x + rat_mod(c, m)).mod_floor(m))
}

/// Roots of `f` mod `ℓ`, or `None` if one of them is not simple.
fn simple_roots_mod(f: &[Rat], df: &[Rat], ell: u64) -> Option<Vec<BigInt>> {
    let m = BigInt::from(ell);
    let mut out = Vec::new();
    for r in 0..ell {
        let rb = BigInt::from(r);
        if eval_mod(f, &rb, &m).is_zero() {
            if eval_mod(df, &rb, &m).is_zero() {
                return None;
            }
            out.push(rb);
        }
    }
    Some(out)
}

fn hensel(f: &[Rat], df: &[Rat], r0: &BigInt, ell: u64, target: &BigInt) -> BigInt {
    let mut r = r0.clone();
    let mut modulus = BigInt::from(ell);
    while &modulus < target {
        modulus = (&modulus * &modulus).min(target.clone());
        let fr = eval_mod(f, &r, &modulus);
        let dr = eval_mod(df, &r, &modulus);
        let inv = crate::dvr::modinv(&dr, &modulus).expect("simple root");
        r = (&r - fr * inv).mod_floor(&modulus);
    }
    r
}

/// `a/b ≡ c mod m` with `|a|, b <= sqrt(m/2)`, if it exists.
fn rational_reconstruction(c: &BigInt, m: &BigInt) -> Option<Rat> {
    let bound = (m / 2u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), c.clone());
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    Some(Rat::new(r1, t1))
}

fn next_prime(mut n: u64) -> u64 {
    n += 1;
    while !crate::dvr::is_prime(n) {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvr::{frac, rat};

    fn poly(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn roots_of_products() {
        // (x - 2)(2x + 3)(x^2 + 1) x
        let f = mul(&mul(&mul(&poly(&[-2, 1]), &poly(&[3, 2])), &poly(&[1, 0, 1])), &poly(&[0, 1]));
        assert_eq!(rational_roots(&f), vec![frac(-3, 2), rat(0), rat(2)]);
    }

    #[test]
    fn repeated_and_large_roots() {
        let big = 1_000_000_007i64;
        let f = mul(&mul(&poly(&[-big, 1]), &poly(&[-big, 1])), &poly(&[7, 1]));
        assert_eq!(rational_roots(&f), vec![rat(-7), rat(big)]);
        assert!(rational_roots(&poly(&[-2, 0, 1])).is_empty());
    }

    #[test]
    fn division_identity() {
        let f = poly(&[5, -3, 0, 2, 1]);
        let g = poly(&[1, 1, 1]);
        let (q, r) = divrem(&f, &g);
        let back: Vec<Rat> = {
            let mut s = mul(&q, &g);
            s.resize(f.len(), Rat::zero());
            for (i, c) in r.iter().enumerate() {
                s[i] += c;
            }
            trim(s)
        };
        assert_eq!(back, f);
    }

    #[test]
    fn quadratic_roots_in_extension() {
        use crate::dvr::{ExtensionKind, Prime};
        let p = Prime::new(3).unwrap();
        // L = Q(i), unramified at 3; f = (x^2 + 1)(x - 5)(x^2 - 2)
        let ext = Extension::new(p, ExtensionKind::Unramified, vec![rat(1), rat(0)]).unwrap();
        let f = mul(&mul(&poly(&[1, 0, 1]), &poly(&[-5, 1])), &poly(&[-2, 0, 1]));
        let roots = roots_in_extension(&f, &ext);
        assert_eq!(roots, vec![vec![rat(0), rat(-1)], vec![rat(0), rat(1)], vec![rat(5), rat(0)]]);
        // L = Q(sqrt 3), ramified; roots of x^2 - x - 1/2 are (1 ± sqrt 3)/2
        let ram = Extension::new(p, ExtensionKind::TotallyRamified, vec![rat(-3), rat(0)]).unwrap();
        let g = vec![frac(-1, 2), rat(-1), rat(1)];
        let roots = roots_in_extension(&g, &ram);
        assert_eq!(roots, vec![vec![frac(1, 2), frac(-1, 2)], vec![frac(1, 2), frac(1, 2)]]);
    }
}
