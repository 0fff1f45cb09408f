//! End-to-end acceptance run. Each criterion prints one line with its
//! verdict, what it checked and how long it took; the test fails if any
//! criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use congruence::algebra::{eta_fitting, eta_wiles, FlatAlgebra, LocalityPolicy};
use congruence::congmod::{congruence_module, kernel_fixed_part};
use congruence::detect::{
    brute_force_rational, cotangent_order, detect_congruence, fiber_product_presentation, surjection_eta_inequality,
    CotangentOrder,
};
use congruence::doc::{self, Document};
use congruence::duality::{construct_dual_pair, negative_control_pair, verify_pairing_hypotheses, PairingInstance};
use congruence::dvr::{rat, valuation, Matrix, Prime, Rat, Valuation};
use congruence::hecke::{localize_and_export, ManinBasis};
use congruence::suite::run_suite;
use congruence::synth::{instance_from_sample, random_module, random_split, synth, SplitSample, SynthOptions, PRIMES};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn prime(p: u64) -> Prime {
    Prime::new(p).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn samples(seed: u64, count: usize) -> Vec<SplitSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = prime(*PRIMES.choose(&mut rng).unwrap());
            random_split(&mut rng, p, 6).unwrap()
        })
        .collect()
}

const SUITE_SEED: u64 = 20_240_601;

fn fiber_product_exactness() -> Outcome {
    let mut count = 0;
    for p in [3u64, 5, 7, 11] {
        for n in 1..=10u32 {
            let (t, chars) = FlatAlgebra::fiber_product(prime(p), n);
            let lambda = &chars[0];
            ensure(lambda.values().len() == 2, || "fiber product has rank 2".into())?;
            let w = eta_wiles(&t, lambda, LocalityPolicy::Strict).map_err(|e| e.to_string())?;
            let f = eta_fitting(&t, lambda, LocalityPolicy::Strict).map_err(|e| e.to_string())?;
            ensure(w == n as i64 && f == n as i64, || format!("p = {p}, n = {n}: wiles {w}, fitting {f}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} fiber products, both routes give n"))
}

fn route_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 1);
    let (mut semilocal, mut modules) = (0, 0);
    for (i, s) in samples(SUITE_SEED, 200).iter().enumerate() {
        let (t, lambda) = (&s.algebra, &s.characters[s.lambda]);
        let w = eta_wiles(t, lambda, s.policy).map_err(|e| format!("instance {i}: {e}"))?;
        let f = eta_fitting(t, lambda, s.policy).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(w == f, || format!("instance {i}: wiles {w}, fitting {f}"))?;
        let m = random_module(&mut rng, s).map_err(|e| e.to_string())?;
        let data = congruence_module(t, &m, lambda, s.policy).map_err(|e| format!("instance {i}: {e}"))?;
        let fixed = kernel_fixed_part(&m, lambda).map_err(|e| e.to_string())?;
        ensure(fixed == data.m_lambda, || format!("instance {i}: M[ker λ] differs from eM ∩ M"))?;
        semilocal += usize::from(s.policy == LocalityPolicy::Semilocal);
        modules += 1;
    }
    Ok(format!("200 algebras ({semilocal} semilocal), {modules} modules"))
}

fn eta_of(t: &FlatAlgebra, m: &congruence::congmod::HeckeModule, l: &congruence::algebra::Character, policy: LocalityPolicy) -> Result<i64, String> {
    congruence_module(t, m, l, policy).map(|d| d.eta_exponent).map_err(|e| e.to_string())
}

/// `val([δ1, δ2])` for generators of rank-one kernels; a generator is fixed
/// up to a unit, which does not move the valuation.
fn delta_valuation(pi: &PairingInstance) -> Option<Valuation> {
    let k1 = kernel_fixed_part(&pi.m1, &pi.lambda1).ok()?;
    let k2 = kernel_fixed_part(&pi.m2, &pi.lambda2).ok()?;
    if k1.rank() != 1 || k2.rank() != 1 {
        return None;
    }
    let (d1, d2) = (&k1.basis()[0], &k2.basis()[0]);
    let g = &pi.gram;
    let mut s = Rat::zero();
    for i in 0..d1.len() {
        for j in 0..d2.len() {
            s += &d1[i] * &g[(i, j)] * &d2[j];
        }
    }
    Some(valuation(&s, pi.prime()))
}

fn duality_transfer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 3);
    let mut rank_one = 0;
    for i in 0..100 {
        let p = prime(*PRIMES.choose(&mut rng).unwrap());
        let s = random_split(&mut rng, p, 6).map_err(|e| e.to_string())?;
        let (pi, _) = construct_dual_pair(&s.algebra, &s.characters[s.lambda], rng.gen(), s.policy)
            .map_err(|e| format!("pair {i}: {e}"))?;
        let cert = verify_pairing_hypotheses(&pi, s.policy).map_err(|e| e.to_string())?;
        ensure(cert.all_pass(), || format!("pair {i}: hypotheses fail on a constructed pair"))?;
        let e1 = eta_of(&pi.t1, &pi.m1, &pi.lambda1, s.policy)?;
        let e2 = eta_of(&pi.t2, &pi.m2, &pi.lambda2, s.policy)?;
        ensure(e1 == e2, || format!("pair {i}: exponents {e1} and {e2}"))?;
        if let Some(v) = delta_valuation(&pi) {
            ensure(v == Valuation::Finite(e1), || format!("pair {i}: val[δ1, δ2] = {v:?}, η = {e1}"))?;
            rank_one += 1;
        }
    }
    ensure(rank_one > 0, || "no pair had rank-one kernels".into())?;
    let control = negative_control_pair(prime(5), 3);
    let cert = verify_pairing_hypotheses(&control, LocalityPolicy::Strict).map_err(|e| e.to_string())?;
    let c1 = eta_of(&control.t1, &control.m1, &control.lambda1, LocalityPolicy::Strict)?;
    let c2 = eta_of(&control.t2, &control.m2, &control.lambda2, LocalityPolicy::Strict)?;
    ensure(!cert.all_pass() && c1 != c2, || format!("negative control: hypotheses {cert:?}, exponents {c1} and {c2}"))?;
    Ok(format!("100 pairs with equal exponents, {rank_one} with δ checked; control exponents {c1} vs {c2}"))
}

fn detection_iff() -> Outcome {
    let (mut congruent, mut checked) = (0, 0);
    for (i, s) in samples(SUITE_SEED, 200).iter().enumerate() {
        let (t, lambda) = (&s.algebra, &s.characters[s.lambda]);
        let gens = &t.eigensystem().expect("built from eigensystems").generators;
        for (r, chi) in s.characters.iter().enumerate() {
            let row: Vec<Rat> = gens.iter().map(|g| chi.apply(g)).collect();
            ensure(row == s.values.row(r), || format!("instance {i}: character {r} is not row {r}"))?;
        }
        let d = detect_congruence(t, lambda, None, s.policy).map_err(|e| format!("instance {i}: {e}"))?;
        let oracle = !brute_force_rational(&s.values, s.lambda, t.prime()).is_empty();
        let eta = eta_wiles(t, lambda, s.policy).map_err(|e| e.to_string())?;
        let witness = d.witness.is_some();
        ensure(witness == oracle && oracle == (eta >= 1), || {
            format!("instance {i}: witness {witness}, oracle {oracle}, η exponent {eta}")
        })?;
        congruent += usize::from(oracle);
        checked += 1;
    }
    Ok(format!("{checked} instances, {congruent} congruent"))
}

fn phi(n: u64) -> u64 {
    (1..=n).filter(|&k| num_integer::gcd(k, n) == 1).count() as u64
}

/// Genus of `X_0(N)` from the index, elliptic points and cusps, each
/// counted by brute force: `12g = 12 + μ - 3ν₂ - 4ν₃ - 6c`.
fn genus_by_index(n: u64) -> u64 {
    let coprime_pairs = (0..n).flat_map(|c| (0..n).map(move |d| (c, d))).filter(|&(c, d)| {
        num_integer::gcd(num_integer::gcd(c, d), n) == 1
    });
    let mu = coprime_pairs.count() as u64 / phi(n);
    let nu2 = (0..n).filter(|&x| (x * x + 1) % n == 0).count() as u64;
    let nu3 = (0..n).filter(|&x| (x * x + x + 1) % n == 0).count() as u64;
    let cusps: u64 = (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| phi(num_integer::gcd(d, n / d))).sum();
    (12 + mu - 3 * nu2 - 4 * nu3 - 6 * cusps) / 12
}

fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&q| (2..q).all(|d| q % d != 0)).collect()
}

fn modular_symbols_sanity() -> Outcome {
    let mut pairs = 0;
    for n in 1..=100u64 {
        let b = ManinBasis::build(n, prime(7)).map_err(|e| format!("N = {n}: {e}"))?;
        let g = genus_by_index(n);
        ensure(b.cuspidal_rank() as u64 == 2 * g, || format!("N = {n}: cuspidal rank {}, genus {g}", b.cuspidal_rank()))?;
        let ops: Vec<Matrix> = primes_up_to(20).iter().map(|&q| b.hecke_operator(q).unwrap()).collect();
        for (i, x) in ops.iter().enumerate() {
            for y in &ops[i + 1..] {
                ensure(x.mul(y) == y.mul(x), || format!("N = {n}: Hecke operators do not commute"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("N ≤ 100 ranks match 2g, {pairs} commuting pairs"))
}

fn integer_roots(f: &[Rat]) -> Vec<i64> {
    let c0 = f.iter().find(|c| !c.is_zero()).map(|c| c.abs().to_integer().to_i64().unwrap()).unwrap_or(0);
    let mut roots = Vec::new();
    for r in -(c0.max(64))..=c0.max(64) {
        let mut acc = Rat::zero();
        for c in f.iter().rev() {
            acc = acc * rat(r) + c;
        }
        if acc.is_zero() {
            roots.push(r);
        }
    }
    roots
}

/// Rational eigensystems on the cuspidal space, computed from simultaneous
/// eigenvectors of the Hecke operators at the given primes.
fn rational_tables(b: &ManinBasis, qs: &[u64]) -> Vec<Vec<i64>> {
    let ops: Vec<Matrix> = qs.iter().map(|&q| b.hecke_operator(q).unwrap()).collect();
    let n = ops[0].rows();
    let mut spaces: Vec<(Vec<i64>, Matrix)> = vec![(Vec::new(), Matrix::identity(n))];
    for t in &ops {
        let mut next = Vec::new();
        for (vals, basis) in spaces {
            for a in integer_roots(&t.charpoly()) {
                let shifted = t.sub(&Matrix::identity(n).scale(&rat(a)));
                let stacked = shifted.mul(&basis);
                let ker = stacked.kernel();
                if ker.is_empty() {
                    continue;
                }
                let cols: Vec<Vec<Rat>> = ker.iter().map(|k| basis.mul_vec(k)).collect();
                let mut v = vals.clone();
                v.push(a);
                next.push((v, Matrix::from_cols(&cols, n)));
            }
        }
        spaces = next;
    }
    spaces.into_iter().map(|(v, _)| v).collect()
}

fn pipeline() -> Outcome {
    let n = 37u64;
    let sturm = congruence::hecke::sturm_bound(n);
    let qs: Vec<u64> = primes_up_to(sturm).into_iter().filter(|q| !n.is_multiple_of(*q)).collect();
    let b = ManinBasis::build(n, prime(3)).map_err(|e| e.to_string())?;
    let tables = rational_tables(&b, &qs);
    ensure(tables.len() == 2, || format!("expected two rational systems at level 37, found {}", tables.len()))?;
    let mut lines = Vec::new();
    for p in [2u64, 3, 5] {
        let agree = tables[0].iter().zip(&tables[1]).all(|(a, c)| (a - c).rem_euclid(p as i64) == 0);
        for system in 0..2 {
            let (bundle, _) = localize_and_export(n, prime(p), system, None).map_err(|e| format!("p = {p}: {e}"))?;
            let pi = &bundle.pairing;
            let eta = eta_wiles(&pi.t1, &pi.lambda1, LocalityPolicy::Strict).map_err(|e| e.to_string())?;
            ensure((eta >= 1) == agree, || format!("N = 37, p = {p}, system {system}: η exponent {eta}, tables agree {agree}"))?;
        }
        lines.push(format!("p={p} agree={agree}"));
    }
    ensure(lines[0].ends_with("true"), || "level 37 systems should be congruent mod 2".into())?;
    for p in [3u64, 7] {
        let (bundle, _) = localize_and_export(11, prime(p), 0, None).map_err(|e| format!("N = 11, p = {p}: {e}"))?;
        let pi = &bundle.pairing;
        let eta = eta_wiles(&pi.t1, &pi.lambda1, LocalityPolicy::Strict).map_err(|e| e.to_string())?;
        ensure(pi.t1.rank() == 1 && eta == 0, || format!("N = 11, p = {p}: rank {}, η exponent {eta}", pi.t1.rank()))?;
    }
    Ok(format!("level 37 over q ∈ {qs:?}: {}; level 11 at 3, 7 gives T = O", lines.join(", ")))
}

fn cotangent_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 7);
    let mut cases = Vec::new();
    for s in samples(SUITE_SEED ^ 5, 16) {
        let inst = instance_from_sample(&mut rng, &s).map_err(|e| e.to_string())?;
        let (r, images) = inst.presentation.expect("synthesized with a presentation");
        cases.push((r, images, s.algebra.clone(), s.characters[s.lambda].clone(), s.policy));
    }
    for (p, k) in [(3u64, 1u32), (5, 2), (7, 3), (11, 1)] {
        let (t, chars) = FlatAlgebra::fiber_product(prime(p), k);
        let r = fiber_product_presentation(prime(p), k);
        let pn = prime(p).pow(k as i64);
        let images = vec![coordinates_of(&t, &chars, &[Rat::zero(), pn])];
        cases.push((r, images, t, chars[0].clone(), LocalityPolicy::Strict));
    }
    let (mut strict, mut equal) = (0, 0);
    for (i, (r, images, t, lambda, policy)) in cases.iter().enumerate() {
        let cert = surjection_eta_inequality(r, t, images, lambda, *policy).map_err(|e| format!("ring {i}: {e}"))?;
        let c = cotangent_order(r).map_err(|e| e.to_string())?;
        let eta = eta_wiles(t, lambda, *policy).map_err(|e| e.to_string())?;
        ensure(c >= CotangentOrder::Finite(eta) && cert.holds, || format!("ring {i}: cotangent {c:?} below η {eta}"))?;
        strict += usize::from(c > CotangentOrder::Finite(eta));
        equal += usize::from(c == CotangentOrder::Finite(eta));
    }
    ensure(strict > 0 && equal > 0, || format!("{strict} strict and {equal} equality instances"))?;
    Ok(format!("{} rings: {strict} strict, {equal} equal", cases.len()))
}

/// Coordinates in the basis of `T` of the element with the given values
/// under each character.
fn coordinates_of(t: &FlatAlgebra, chars: &[congruence::algebra::Character], values: &[Rat]) -> Vec<Rat> {
    let r = t.rank();
    let m = Matrix::from_rows(chars.iter().map(|c| (0..r).map(|i| c.apply(&t.basis_vector(i))).collect()).collect(), r);
    m.solve(values).expect("characters separate T")
}

fn determinism() -> Outcome {
    let opts = SynthOptions { seed: SUITE_SEED, rank_bound: 6, prime: None, count: 25 };
    let render = |docs: &[(String, Document)]| docs.iter().map(|(_, d)| doc::to_string(d)).collect::<String>();
    let (a, b) = (synth(&opts).map_err(|e| e.to_string())?, synth(&opts).map_err(|e| e.to_string())?);
    ensure(render(&a) == render(&b), || "synthesized documents differ".into())?;
    let (mut r1, mut r2) = (run_suite(&a), run_suite(&b));
    r1.mask_timings();
    r2.mask_timings();
    let (j1, j2) = (r1.to_json(), r2.to_json());
    ensure(j1 == j2, || "masked reports differ".into())?;
    ensure(r1.exit_code() == 0, || format!("suite reported exit code {}", r1.exit_code()))?;
    Ok(format!("{} cases, {} report bytes identical", r1.cases.len(), j1.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("1 fiber-product exactness", fiber_product_exactness, Duration::from_secs(1)),
        ("2 route equivalence", route_equivalence, Duration::from_secs(60)),
        ("3 duality transfer", duality_transfer, Duration::from_secs(60)),
        ("4 congruence detection iff", detection_iff, Duration::from_secs(30)),
        ("5 modular-symbols sanity", modular_symbols_sanity, Duration::from_secs(300)),
        ("6 end-to-end pipeline", pipeline, Duration::from_secs(120)),
        ("7 cotangent inequality", cotangent_inequality, Duration::from_secs(10)),
        ("8 determinism", determinism, Duration::from_secs(60)),
    ];
    let mut out = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let over = if elapsed > budget { format!(", over the {budget:?} budget") } else { String::new() };
        match outcome {
            Ok(detail) => writeln!(out, "PASS {name}: {detail} ({elapsed:.2?}{over})").unwrap(),
            Err(why) => {
                writeln!(out, "FAIL {name}: {why} ({elapsed:.2?})").unwrap();
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
