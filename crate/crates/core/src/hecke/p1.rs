//! The projective line over `Z/N`, indexing the Manin symbols `(c:d)`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

#[derive(Clone, Debug)]
pub struct P1 {
    n: u64,
    reps: Vec<(u64, u64)>,
    /// `index[c * n + d]`, or `u32::MAX` when `gcd(c, d, n) > 1`.
    index: Vec<u32>,
}

impl P1 {
    /// Canonical representatives are the lexicographically least pair in
    /// each orbit under scaling by units.
    pub fn new(n: u64) -> Self {
        assert!(n >= 1);
        let units: Vec<u64> = (1..=n).filter(|&u| u.gcd(&n) == 1).map(|u| u % n).collect();
        let size = (n * n) as usize;
        let mut index = vec![u32::MAX; size];
        let mut reps = Vec::new();
        for c in 0..n {
            for d in 0..n {
                let k = (c * n + d) as usize;
                if index[k] != u32::MAX || c.gcd(&d).gcd(&n) != 1 {
                    continue;
                }
                // (c, d) is the least member of its orbit since all smaller
                // pairs are already assigned
                let id = reps.len() as u32;
                reps.push((c, d));
                for &u in &units {
                    let (uc, ud) = ((u * c) % n, (u * d) % n);
                    index[(uc * n + ud) as usize] = id;
                }
            }
        }
        P1 { n, reps, index }
    }

    pub fn level(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn rep(&self, i: usize) -> (u64, u64) {
        self.reps[i]
    }

    pub fn index(&self, c: i64, d: i64) -> Option<usize> {
        let n = self.n as i64;
        let (c, d) = (c.rem_euclid(n) as u64, d.rem_euclid(n) as u64);
        let k = self.index[(c * self.n + d) as usize];
        (k != u32::MAX).then_some(k as usize)
    }

    pub fn index_big(&self, c: &BigInt, d: &BigInt) -> Option<usize> {
        let n = BigInt::from(self.n);
        let c = c.mod_floor(&n).to_i64().expect("reduced");
        let d = d.mod_floor(&n).to_i64().expect("reduced");
        self.index(c, d)
    }

    /// `(c:d) S = (d : -c)`.
    pub fn s(&self, i: usize) -> usize {
        let (c, d) = self.reps[i];
        self.index(d as i64, -(c as i64)).expect("S preserves P1")
    }

    /// `(c:d) τ = (d : -c - d)` for `τ = [[0,-1],[1,-1]]`.
    pub fn tau(&self, i: usize) -> usize {
        let (c, d) = self.reps[i];
        self.index(d as i64, -(c as i64) - d as i64).expect("τ preserves P1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_index_of_gamma0() {
        for (n, mu) in [(1u64, 1usize), (2, 3), (11, 12), (12, 24), (37, 38), (36, 72)] {
            assert_eq!(P1::new(n).len(), mu, "N = {n}");
        }
    }

    #[test]
    fn s_is_an_involution_and_tau_has_order_three() {
        let p = P1::new(30);
        for i in 0..p.len() {
            assert_eq!(p.s(p.s(i)), i);
            assert_eq!(p.tau(p.tau(p.tau(i))), i);
        }
    }
}
