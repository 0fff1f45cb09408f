//! Seeded generation of random split algebras, modules, dual pairs and
//! presented rings for batch verification.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Character, FlatAlgebra, LocalityPolicy};
use crate::congmod::HeckeModule;
use crate::detect::free_presentation;
use crate::doc::{Document, Instance};
use crate::duality::{construct_dual_pair, random_unimodular};
use crate::dvr::{rat, Matrix, Prime, Rat};
use crate::error::{Error, Result};

pub const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    pub seed: u64,
    pub rank_bound: usize,
    /// A fixed prime, or `None` to draw from `PRIMES`.
    pub prime: Option<u64>,
    pub count: usize,
}

/// A random split algebra with its characters, the eigenvalue table it was
/// built from, a chosen character and the policy it satisfies.
#[derive(Clone, Debug)]
pub struct SplitSample {
    pub algebra: FlatAlgebra,
    pub characters: Vec<Character>,
    pub values: Matrix,
    pub lambda: usize,
    pub policy: LocalityPolicy,
}

/// Eigenvalue tables are small integers built as `residue + p^k·c`; local
/// samples share one residue row, semilocal ones use several.
pub fn random_split(rng: &mut impl Rng, prime: Prime, rank_bound: usize) -> Result<SplitSample> {
    if rank_bound == 0 || rank_bound > 8 {
        return Err(Error::Validation(format!("rank bound {rank_bound} is outside 1..=8")));
    }
    let p = prime.get() as i64;
    let r = rng.gen_range(1..=rank_bound);
    let g = rng.gen_range(1..=3usize);
    let local = rng.gen_bool(0.6);
    let classes = if local { 1 } else { rng.gen_range(1..=r.min(3)) };
    let residues: Vec<Vec<i64>> = (0..classes).map(|_| (0..g).map(|_| rng.gen_range(0..p)).collect()).collect();
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(r);
    let mut attempts = 0;
    while rows.len() < r {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Validation("could not draw distinct eigensystems".into()));
        }
        let base = residues.choose(rng).expect("nonempty");
        let row: Vec<i64> = base
            .iter()
            .map(|&b| {
                let k = rng.gen_range(1..=3u32);
                b + p.pow(k) * rng.gen_range(-2..=2)
            })
            .collect();
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    let values = Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect(), g);
    let (algebra, characters) = FlatAlgebra::from_eigensystems(prime, &values)?;
    let cert = algebra.validate();
    let policy = if cert.passes(LocalityPolicy::Strict) { LocalityPolicy::Strict } else { LocalityPolicy::Semilocal };
    cert.require(policy)?;
    let lambda = rng.gen_range(0..r);
    Ok(SplitSample { algebra, characters, values, lambda, policy })
}

/// A module for `T`: copies of `T` and character lines in a random basis.
pub fn random_module(rng: &mut impl Rng, s: &SplitSample) -> Result<HeckeModule> {
    let t = &s.algebra;
    let mut m = HeckeModule::regular(t);
    for _ in 0..rng.gen_range(0..=2) {
        let chi = s.characters.choose(rng).expect("nonempty");
        m = m.direct_sum(&HeckeModule::character_line(t, chi))?;
    }
    let n = m.rank();
    m.change_basis(&random_unimodular(rng, n))
}

fn prime_for(rng: &mut impl Rng, opts: &SynthOptions) -> Result<Prime> {
    match opts.prime {
        Some(p) => Prime::new(p),
        None => Prime::new(*PRIMES.choose(rng).expect("nonempty")),
    }
}

/// One eta/detect instance per sample, with a module and a presented ring
/// surjecting onto the algebra.
pub fn instance_from_sample(rng: &mut impl Rng, s: &SplitSample) -> Result<Instance> {
    let t = &s.algebra;
    let lambda = &s.characters[s.lambda];
    let mut inst = Instance::new(t.clone(), lambda.clone());
    inst.policy = s.policy;
    let m = random_module(rng, s)?;
    m.validate(t)?;
    inst.modules.push(m);
    let gens: Vec<Vec<Rat>> = t.eigensystem().expect("built from eigensystems").generators.clone();
    let extra: Vec<u32> = (0..rng.gen_range(0..=1)).map(|_| rng.gen_range(1..=2)).collect();
    let (r, images) = free_presentation(t, &s.characters, &gens, lambda, &extra);
    r.validate()?;
    inst.presentation = Some((r, images));
    Ok(inst)
}

/// Named fixtures in a fixed order: `instance-NNNN` and `pair-NNNN` for
/// each sample.
pub fn synth(opts: &SynthOptions) -> Result<Vec<(String, Document)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(2 * opts.count);
    for i in 0..opts.count {
        let prime = prime_for(&mut rng, opts)?;
        let s = random_split(&mut rng, prime, opts.rank_bound)?;
        let inst = instance_from_sample(&mut rng, &s)?;
        let (pair, theta) = construct_dual_pair(&s.algebra, &s.characters[s.lambda], rng.gen(), s.policy)?;
        out.push((format!("instance-{i:04}"), Document::Instance(Box::new(inst))));
        out.push((format!("pair-{i:04}"), Document::Pairing(pair, Some(theta))));
    }
    Ok(out)
}
