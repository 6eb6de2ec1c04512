//! Young diagrams, symmetric-group characters, Schur–Weyl block projectors
//! and the universal symmetric states on `(C^d)^{⊗n}`.
//!
//! Basis states `|i_1 … i_n⟩` are indexed with the first factor most
//! significant. `V_s` moves tensor factor `k` to position `s(k)`, matching
//! the action of `permaction::apply` on sequences.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitize, kron_all, zeros, CMat};
use crate::permaction::{all_permutations, find_permutation_to, Permutation};
use crate::typelab::{canonical_sequence, factorial, type_class, type_of, Sequence, TypeComposition};

/// Default cap on the Hilbert-space dimension `d^n`.
pub const DEFAULT_CAP_DIM: usize = 4096;
/// Largest group order averaged over explicitly.
pub const MAX_GROUP_ORDER: u128 = 5040;

/// A partition of `n` as weakly decreasing positive rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct YoungDiagram {
    rows: Vec<usize>,
}

impl YoungDiagram {
    pub fn new(mut rows: Vec<usize>) -> Result<Self> {
        rows.retain(|&r| r > 0);
        if rows.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!("rows {rows:?} are not weakly decreasing")));
        }
        Ok(YoungDiagram { rows })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.iter().sum()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn column_length(&self, j: usize) -> usize {
        self.rows.iter().take_while(|&&r| r > j).count()
    }

    /// Hook lengths of every box, row by row.
    pub fn hooks(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n());
        for (i, &r) in self.rows.iter().enumerate() {
            for j in 0..r {
                out.push((r - j - 1) + (self.column_length(j) - i - 1) + 1);
            }
        }
        out
    }
}

/// All partitions of `n` into at most `max_rows` rows, in descending
/// lexicographic order.
pub fn partitions(n: usize, max_rows: usize) -> Vec<YoungDiagram> {
    fn rec(rem: usize, max_part: usize, rows_left: usize, cur: &mut Vec<usize>, out: &mut Vec<YoungDiagram>) {
        if rem == 0 {
            out.push(YoungDiagram { rows: cur.clone() });
            return;
        }
        if rows_left == 0 {
            return;
        }
        for part in (1..=rem.min(max_part)).rev() {
            cur.push(part);
            rec(rem - part, part, rows_left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, max_rows, &mut Vec::new(), &mut out);
    out
}

/// Young diagrams with `n` boxes and at most `d` rows.
pub fn young_diagrams(n: usize, d: usize) -> Vec<YoungDiagram> {
    partitions(n, d)
}

/// Dimension of the `U(d)` irrep labelled by `λ` (hook-content formula).
pub fn dim_unitary_irrep(lambda: &YoungDiagram, d: usize) -> Result<u128> {
    if lambda.num_rows() > d {
        return Err(Error::TooManyRows { rows: lambda.num_rows(), d });
    }
    // Π (d + j − i) / Π hook, accumulated as an exact ratio
    let mut num: u128 = 1;
    for (i, &r) in lambda.rows.iter().enumerate() {
        for j in 0..r {
            num *= (d + j - i) as u128;
        }
    }
    let den: u128 = lambda.hooks().iter().map(|&h| h as u128).product();
    Ok(num / den)
}

/// Dimension of the `S_n` irrep labelled by `λ` (hook-length formula).
pub fn dim_symmetric_irrep(lambda: &YoungDiagram) -> u128 {
    factorial(lambda.n()) / lambda.hooks().iter().map(|&h| h as u128).product::<u128>()
}

/// `χ_λ` on the class with the given cycle type (Murnaghan–Nakayama rule on
/// beta-numbers).
pub fn character(lambda: &YoungDiagram, cycle_type: &[usize]) -> i64 {
    let l = lambda.num_rows();
    let beta: Vec<usize> = lambda.rows.iter().enumerate().map(|(i, &r)| r + (l - 1 - i)).collect();
    let mut cycles: Vec<usize> = cycle_type.iter().copied().filter(|&c| c > 0).collect();
    cycles.sort_unstable_by(|a, b| b.cmp(a));
    mn_beta(&beta, &cycles)
}

fn mn_beta(beta: &[usize], cycles: &[usize]) -> i64 {
    let Some((&r, rest)) = cycles.split_first() else {
        return 1;
    };
    let mut total = 0;
    for (idx, &b) in beta.iter().enumerate() {
        if b < r || beta.contains(&(b - r)) {
            continue;
        }
        let between = beta.iter().filter(|&&o| o > b - r && o < b).count();
        let sign = if between % 2 == 0 { 1 } else { -1 };
        let mut next = beta.to_vec();
        next[idx] = b - r;
        total += sign * mn_beta(&next, rest);
    }
    total
}

/// `n! / Π_i (i^{m_i} m_i!)` for the class with the given cycle type.
pub fn class_size(cycle_type: &[usize]) -> u128 {
    let n: usize = cycle_type.iter().sum();
    let mut mult: HashMap<usize, usize> = HashMap::new();
    for &c in cycle_type.iter().filter(|&&c| c > 0) {
        *mult.entry(c).or_default() += 1;
    }
    let den: u128 = mult.iter().map(|(&i, &m)| (i as u128).pow(m as u32) * factorial(m)).product();
    factorial(n) / den
}

fn check_dim(n: usize, d: usize, cap_dim: usize) -> Result<usize> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > cap_dim as u128 {
        return Err(Error::CapExceeded { what: "Hilbert-space dimension", size: dim, cap: cap_dim as u128 });
    }
    Ok(dim as usize)
}

/// Basis index map of `V_s`: `V_s |a⟩ = |map[a]⟩`.
pub fn perm_index_map(s: &Permutation, d: usize) -> Vec<usize> {
    let n = s.n();
    let dim = d.pow(n as u32);
    let mut place = vec![0usize; n];
    // weight of tensor position p is d^(n-1-p)
    for (k, w) in place.iter_mut().enumerate() {
        *w = d.pow((n - 1 - s.image(k)) as u32);
    }
    (0..dim)
        .map(|mut a| {
            let mut out = 0;
            for k in (0..n).rev() {
                out += (a % d) * place[k];
                a /= d;
            }
            out
        })
        .collect()
}

pub fn permutation_operator(s: &Permutation, d: usize, cap_dim: usize) -> Result<CMat> {
    let dim = check_dim(s.n(), d, cap_dim)?;
    let map = perm_index_map(s, d);
    let mut v = zeros(dim);
    for (a, &b) in map.iter().enumerate() {
        v[(b, a)] = c(1.0);
    }
    Ok(v)
}

/// `V_s A V_s†`, computed by reindexing.
pub fn conjugate_by_map(a: &CMat, map: &[usize]) -> CMat {
    let dim = a.nrows();
    let mut out = zeros(dim);
    for col in 0..dim {
        for row in 0..dim {
            out[(map[row], map[col])] = a[(row, col)];
        }
    }
    out
}

pub fn conjugate_by_perm(a: &CMat, s: &Permutation, d: usize) -> CMat {
    conjugate_by_map(a, &perm_index_map(s, d))
}

#[derive(Debug, Clone)]
pub struct SchurBlock {
    pub diagram: YoungDiagram,
    pub dim_u: u128,
    pub dim_v: u128,
    pub projector: CMat,
}

/// Isotypic projectors `Π_λ = (dim V_λ / n!) Σ_s χ_λ(s) V_s` for every
/// diagram with at most `d` rows.
pub fn block_projectors(n: usize, d: usize, cap_dim: usize) -> Result<Vec<SchurBlock>> {
    let dim = check_dim(n, d, cap_dim)?;
    let order = factorial(n);
    if order > MAX_GROUP_ORDER {
        return Err(Error::CapExceeded { what: "symmetric group order", size: order, cap: MAX_GROUP_ORDER });
    }
    let group = all_permutations(n);
    let maps: Vec<(Vec<usize>, Vec<usize>)> =
        group.iter().map(|s| (s.cycle_type(), perm_index_map(s, d))).collect();
    young_diagrams(n, d)
        .into_iter()
        .map(|diagram| {
            let dim_u = dim_unitary_irrep(&diagram, d)?;
            let dim_v = dim_symmetric_irrep(&diagram);
            let mut chars: HashMap<&[usize], i64> = HashMap::new();
            let mut proj = zeros(dim);
            for (ct, map) in &maps {
                let chi = *chars.entry(ct.as_slice()).or_insert_with(|| character(&diagram, ct));
                if chi == 0 {
                    continue;
                }
                let w = chi as f64 * dim_v as f64 / order as f64;
                for (a, &b) in map.iter().enumerate() {
                    proj[(b, a)].re += w;
                }
            }
            Ok(SchurBlock { diagram, dim_u, dim_v, projector: hermitize(&proj) })
        })
        .collect()
}

/// `σ_{U,n} = Σ_λ Π_λ / (|Y_n^d| dim U_λ dim V_λ)`; the `n = 0` state is the
/// scalar 1.
pub fn universal_symmetric_state(n: usize, d: usize, cap_dim: usize) -> Result<CMat> {
    if n == 0 {
        return Ok(CMat::identity(1, 1));
    }
    let blocks = block_projectors(n, d, cap_dim)?;
    let y = blocks.len() as f64;
    let mut sigma = zeros(d.pow(n as u32));
    for b in &blocks {
        sigma += &b.projector * c(1.0 / (y * b.dim_u as f64 * b.dim_v as f64));
    }
    Ok(sigma)
}

/// `(n+1)^{(d+2)(d−1)/2}`, the coefficient bounding `ρ^{⊗n}` by `σ_{U,n}`.
pub fn universal_coefficient(n: usize, d: usize) -> f64 {
    ((n + 1) as f64).powf(((d + 2) * (d - 1)) as f64 / 2.0)
}

/// Caches `σ_{U,m}` for a fixed local dimension.
#[derive(Debug, Clone)]
pub struct UniversalStates {
    d: usize,
    cap_dim: usize,
    cache: HashMap<usize, CMat>,
}

impl UniversalStates {
    pub fn new(d: usize, cap_dim: usize) -> Self {
        UniversalStates { d, cap_dim, cache: HashMap::new() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cap_dim(&self) -> usize {
        self.cap_dim
    }

    pub fn sigma_u(&mut self, m: usize) -> Result<&CMat> {
        if !self.cache.contains_key(&m) {
            let s = universal_symmetric_state(m, self.d, self.cap_dim)?;
            self.cache.insert(m, s);
        }
        Ok(&self.cache[&m])
    }

    /// `σ_{U,m_1} ⊗ … ⊗ σ_{U,m_k}` for the canonical string of `p`.
    pub fn sigma_canonical(&mut self, p: &TypeComposition) -> Result<CMat> {
        check_dim(p.n(), self.d, self.cap_dim)?;
        for &m in p.counts() {
            self.sigma_u(m)?;
        }
        Ok(kron_all(p.counts().iter().map(|m| &self.cache[m])))
    }

    /// `σ_x = V_s σ_{x_P} V_s†` with `s` the stable matching permutation.
    pub fn sigma_x(&mut self, x: &Sequence) -> Result<CMat> {
        let p = type_of(x);
        let s = find_permutation_to(&canonical_sequence(&p), x)?;
        self.sigma_x_via(&p, &s)
    }

    /// `V_s σ_{x_P} V_s†` for an arbitrary `s`.
    pub fn sigma_x_via(&mut self, p: &TypeComposition, s: &Permutation) -> Result<CMat> {
        let base = self.sigma_canonical(p)?;
        Ok(conjugate_by_perm(&base, s, self.d))
    }

    /// `σ_{U,P}`: the average of `σ_x` over `T_P`.
    pub fn sigma_up(&mut self, p: &TypeComposition, cap: u128) -> Result<CMat> {
        let class = type_class(p, cap)?;
        let mut acc = zeros(self.d.pow(p.n() as u32));
        for x in &class {
            acc += self.sigma_x(x)?;
        }
        Ok(acc * c(1.0 / class.len() as f64))
    }
}

pub fn sigma_x(x: &Sequence, d: usize, cap_dim: usize) -> Result<CMat> {
    UniversalStates::new(d, cap_dim).sigma_x(x)
}

pub fn sigma_up(p: &TypeComposition, d: usize, cap_dim: usize, cap: u128) -> Result<CMat> {
    UniversalStates::new(d, cap_dim).sigma_up(p, cap)
}
