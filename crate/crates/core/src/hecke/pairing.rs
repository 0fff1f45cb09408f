//! The intersection pairing on cuspidal modular symbols.
//!
//! Closed loops on `Y0(N)` come from a spanning tree of the coset graph
//! with `S`- and `τ`-moves; each non-tree edge closes a loop whose class is
//! `{∞, h∞}` for the corresponding `h ∈ Γ0(N)`. Loops cross the Farey edges
//! `g{0,∞}` only along `S`-moves, which gives the intersection functional
//! of each loop on Manin symbols.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use super::manin::{mat2, mat2_inv, mat2_mul, Cusp, ManinBasis, Mat2};
use crate::dvr::{valuation, Matrix, Rat, Valuation};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct IntersectionData {
    /// Intersection form on the cuspidal lattice.
    pub gram: Matrix,
    /// `W_N` on the cuspidal lattice.
    pub atkin_lehner: Matrix,
    /// `[x, y] = <x, W_N y>`, for which every Hecke operator is self-adjoint.
    pub twisted: Matrix,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Move {
    S,
    Tau,
}

fn move_matrix(m: Move) -> Mat2 {
    match m {
        Move::S => mat2(0, -1, 1, 0),
        Move::Tau => mat2(0, -1, 1, -1),
    }
}

struct Loop {
    class: Vec<Rat>,
    functional: Vec<i64>,
}

fn loops(b: &ManinBasis) -> Vec<Loop> {
    let p1 = b.p1();
    let n = p1.len();
    let dim = b.dimension();
    let mut position = vec![None; n];
    for j in 0..dim {
        position[b.basis_symbol(j)] = Some(j);
    }
    let crossing = |u: usize, v: usize, acc: &mut Vec<i64>| {
        if let Some(j) = position[u] {
            acc[j] += 1;
        }
        if let Some(j) = position[v] {
            acc[j] -= 1;
        }
    };

    let root = p1.index(0, 1).expect("(0:1) lies in P1");
    let mut rep: Vec<Option<Mat2>> = vec![None; n];
    let mut parent: Vec<Option<(usize, Move)>> = vec![None; n];
    let mut f: Vec<Vec<i64>> = vec![Vec::new(); n];
    rep[root] = Some(mat2(1, 0, 0, 1));
    f[root] = vec![0; dim];
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for (m, v) in [(Move::S, p1.s(u)), (Move::Tau, p1.tau(u))] {
            if rep[v].is_some() {
                continue;
            }
            let r = mat2_mul(rep[u].as_ref().expect("visited"), &move_matrix(m));
            rep[v] = Some(r);
            parent[v] = Some((u, m));
            let mut fv = f[u].clone();
            if m == Move::S {
                crossing(u, v, &mut fv);
            }
            f[v] = fv;
            queue.push_back(v);
        }
    }

    let mut out = Vec::new();
    let mut close = |u: usize, m: Move, v: usize| {
        let r_u = rep[u].as_ref().expect("connected");
        let r_v = rep[v].as_ref().expect("connected");
        let h = mat2_mul(&mat2_mul(r_u, &move_matrix(m)), &mat2_inv(r_v));
        debug_assert!(h[2].mod_floor(&BigInt::from(b.level())).is_zero());
        let class = b.modular_symbol(&Cusp::infinity(), &Cusp::new(h[0].clone(), h[2].clone()));
        let mut functional: Vec<i64> = f[u].iter().zip(&f[v]).map(|(a, c)| a - c).collect();
        if m == Move::S {
            crossing(u, v, &mut functional);
        }
        out.push(Loop { class, functional });
    };
    for u in 0..n {
        let v = p1.s(u);
        if u < v && parent[v] != Some((u, Move::S)) && parent[u] != Some((v, Move::S)) {
            close(u, Move::S, v);
        }
        let w = p1.tau(u);
        if parent[w] != Some((u, Move::Tau)) {
            close(u, Move::Tau, w);
        }
    }
    out
}

/// Intersection pairing and its Atkin–Lehner twist on the cuspidal lattice.
/// Fails unless the pairing is alternating and perfect over `Z_(p)`.
pub fn intersection_gram(b: &ManinBasis) -> Result<IntersectionData> {
    let r = b.cuspidal_rank();
    let prime = b.prime();
    let cusp = b.cuspidal();
    let mut chosen_classes: Vec<Vec<Rat>> = Vec::new();
    let mut chosen_functionals: Vec<Vec<Rat>> = Vec::new();
    for l in loops(b) {
        if chosen_classes.len() == r {
            break;
        }
        if l.class.iter().all(Zero::is_zero) {
            continue;
        }
        let coords = b
            .cuspidal_coordinates(&l.class)
            .ok_or_else(|| Error::Validation("loop class is not a cuspidal symbol".into()))?;
        let mut trial = chosen_classes.clone();
        trial.push(coords.clone());
        if Matrix::from_rows(trial, r).rank() > chosen_classes.len() {
            chosen_classes.push(coords);
            // the loop functional evaluated on each cuspidal basis vector
            let phi: Vec<Rat> = l.functional.iter().map(|&x| Rat::from_integer(x.into())).collect();
            chosen_functionals
                .push(cusp.basis().iter().map(|s| crate::dvr::matrix::dot(s, &phi)).collect());
        }
    }
    if chosen_classes.len() < r {
        return Err(Error::Validation("loop classes do not span the cuspidal symbols".into()));
    }
    let gram = if r == 0 {
        Matrix::zeros(0, 0)
    } else {
        let c = Matrix::from_rows(chosen_classes, r);
        let phi = Matrix::from_rows(chosen_functionals, r);
        c.inverse().expect("independent loops").mul(&phi).transpose()
    };
    if gram.add(&gram.transpose()) != Matrix::zeros(r, r) {
        return Err(Error::Validation("intersection form is not alternating".into()));
    }
    if !gram.is_integral(prime) || valuation(&gram.det(), prime) != Valuation::Finite(0) {
        return Err(Error::Validation(format!(
            "intersection form is not perfect over Z_({})",
            prime.get()
        )));
    }
    let w = b.atkin_lehner()?;
    let twisted = gram.mul(&w);
    Ok(IntersectionData { gram, atkin_lehner: w, twisted })
}
