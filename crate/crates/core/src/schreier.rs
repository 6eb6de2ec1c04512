//! Schreier graphs of `S_n` acting on the type class `T_P`.
//!
//! Vertices are the strings of `T_P` in lexicographic order, which the coset
//! transversal identifies with `S_n / S_{x_P}`. Each generator `s` adds an
//! edge `v → s(v)`.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::permaction::{
    all_permutations, apply, coset_transversal, derive_seed, sample_uniform, symmetrize, PermMultiset,
};
use crate::typelab::{canonical_sequence, type_class, Sequence, TypeComposition};

/// Largest `n` for which the fixed-point projector is formed by averaging
/// over all of `S_n`.
pub const FULL_AVERAGE_MAX_N: usize = 5;

#[derive(Debug, Clone)]
pub struct SchreierGraph {
    pub p: TypeComposition,
    pub vertices: Vec<Sequence>,
    /// `counts[(i, j)] = #{s ∈ S′ : s(v_j) = v_i}`.
    pub counts: DMatrix<usize>,
    pub transition: DMatrix<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub lambda: f64,
    pub connected: bool,
    pub bipartite: bool,
    /// Eigenvalues of the transition matrix, ascending.
    pub eigenvalues: Vec<f64>,
}

fn vertex_index(vertices: &[Sequence]) -> HashMap<&Sequence, usize> {
    vertices.iter().enumerate().map(|(i, v)| (v, i)).collect()
}

/// Builds the graph by counting, for every generator and vertex, where the
/// vertex is sent.
pub fn build_schreier(p: &TypeComposition, generators: &PermMultiset, cap: u128) -> Result<SchreierGraph> {
    if !generators.is_symmetric() {
        return Err(Error::NotSymmetricMultiset);
    }
    if generators.is_empty() {
        return Err(Error::InvalidArgument("empty generator multiset".into()));
    }
    if generators.degree() != Some(p.n()) {
        return Err(Error::LengthMismatch(generators.degree().unwrap_or(0), p.n()));
    }
    let vertices = type_class(p, cap)?;
    let index = vertex_index(&vertices);
    let nv = vertices.len();
    let mut counts = DMatrix::<usize>::zeros(nv, nv);
    for s in generators.elements() {
        for (j, v) in vertices.iter().enumerate() {
            let i = index[&apply(s, v)?];
            counts[(i, j)] += 1;
        }
    }
    let degree = generators.len();
    let transition = counts.map(|c| c as f64 / degree as f64);
    Ok(SchreierGraph { p: p.clone(), vertices, counts, transition, degree })
}

/// The transition matrix computed through coset membership:
/// `T[i][j] = #{s : σ_i⁻¹ s σ_j ∈ S_{x_P}} / |S′|` for a transversal `σ`.
pub fn transition_by_cosets(p: &TypeComposition, generators: &PermMultiset, cap: u128) -> Result<DMatrix<f64>> {
    let transversal = coset_transversal(p, cap)?;
    let x_p = canonical_sequence(p);
    let nv = transversal.len();
    let inverses: Vec<_> = transversal.iter().map(|(s, _)| s.inverse()).collect();
    let mut t = DMatrix::<f64>::zeros(nv, nv);
    let w = 1.0 / generators.len() as f64;
    for s in generators.elements() {
        for (j, (sigma_j, _)) in transversal.iter().enumerate() {
            let moved = s.compose(sigma_j);
            for (i, inv_i) in inverses.iter().enumerate() {
                if apply(&inv_i.compose(&moved), &x_p)? == x_p {
                    t[(i, j)] += w;
                }
            }
        }
    }
    Ok(t)
}

/// `(1/n!) Σ_g Ind(g)`, by full averaging when `n ≤ FULL_AVERAGE_MAX_N` and
/// otherwise as the uniform rank-one projector.
pub fn fixed_point_projector(p: &TypeComposition, cap: u128) -> Result<DMatrix<f64>> {
    let vertices = type_class(p, cap)?;
    let nv = vertices.len();
    if p.n() > FULL_AVERAGE_MAX_N {
        return Ok(DMatrix::from_element(nv, nv, 1.0 / nv as f64));
    }
    let index = vertex_index(&vertices);
    let group = all_permutations(p.n());
    let w = 1.0 / group.len() as f64;
    let mut avg = DMatrix::<f64>::zeros(nv, nv);
    for g in &group {
        for (j, v) in vertices.iter().enumerate() {
            avg[(index[&apply(g, v)?], j)] += w;
        }
    }
    Ok(avg)
}

pub fn spectral_report(g: &SchreierGraph) -> SpectralReport {
    let nv = g.vertices.len();
    let eig = SymmetricEigen::new(g.transition.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let lambda = if nv <= 1 {
        0.0
    } else {
        let second = eigenvalues[nv - 2];
        second.max(-eigenvalues[0]).clamp(0.0, 1.0)
    };
    let (connected, bipartite) = bfs_structure(&g.counts);
    SpectralReport { lambda, connected, bipartite, eigenvalues }
}

/// `‖T − J/N‖`, an independent route to `λ(Γ)`.
pub fn lambda_via_norm(g: &SchreierGraph) -> f64 {
    let nv = g.vertices.len();
    let centered = &g.transition - DMatrix::from_element(nv, nv, 1.0 / nv as f64);
    SymmetricEigen::new(centered).eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn bfs_structure(counts: &DMatrix<usize>) -> (bool, bool) {
    let nv = counts.nrows();
    if nv == 0 {
        return (true, false);
    }
    let mut color: Vec<Option<bool>> = vec![None; nv];
    let mut bipartite = true;
    let mut queue = VecDeque::from([0]);
    color[0] = Some(false);
    while let Some(u) = queue.pop_front() {
        let cu = color[u].expect("queued vertices are colored");
        for v in 0..nv {
            if counts[(v, u)] == 0 {
                continue;
            }
            match color[v] {
                None => {
                    color[v] = Some(!cu);
                    queue.push_back(v);
                }
                Some(cv) if cv == cu => bipartite = false,
                Some(_) => {}
            }
        }
    }
    (color.iter().all(Option::is_some), bipartite)
}

/// `⌈(ln 4 / ε²) · ln(2N / δ)⌉` generators before symmetrization.
pub fn expander_sample_size(epsilon: f64, delta: f64, num_cosets: u128) -> usize {
    ((4f64.ln() / (epsilon * epsilon)) * (2.0 * num_cosets as f64 / delta).ln()).ceil().max(1.0) as usize
}

/// `S ⊎ S⁻¹` for a uniform sample `S` whose size follows the ceiling formula
/// with `N = |T_P|`.
pub fn random_expander_multiset(p: &TypeComposition, epsilon: f64, delta: f64, seed: u64) -> Result<PermMultiset> {
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} and delta {delta} must lie in (0,1)")));
    }
    let size = expander_sample_size(epsilon, delta, p.class_size());
    Ok(symmetrize(&sample_uniform(p.n(), size, seed)?))
}

#[derive(Debug, Clone)]
pub struct GapSearch {
    pub generators: PermMultiset,
    pub graph: SchreierGraph,
    pub report: SpectralReport,
    /// 1-based index of the successful attempt.
    pub attempts: usize,
}

/// Samples symmetric multisets until `λ ≤ target`. Attempt `t` uses the seed
/// `derive_seed(seed, t)`. Without `size`, `|S|` follows the ceiling formula
/// with `ε = target` and `δ = 1/2`.
pub fn build_until_gap(
    p: &TypeComposition,
    target: f64,
    seed: u64,
    max_retries: usize,
    size: Option<usize>,
    cap: u128,
) -> Result<GapSearch> {
    let valid = match size {
        Some(_) => (0.0..1.0).contains(&target),
        None => target > 0.0 && target < 1.0,
    };
    if !valid {
        return Err(Error::InvalidArgument(format!("gap target {target} must lie in (0,1)")));
    }
    let half = size.unwrap_or_else(|| expander_sample_size(target, 0.5, p.class_size()));
    let mut best = f64::INFINITY;
    for attempt in 0..max_retries {
        let generators = symmetrize(&sample_uniform(p.n(), half, derive_seed(seed, attempt as u64))?);
        let graph = build_schreier(p, &generators, cap)?;
        let report = spectral_report(&graph);
        if report.lambda <= target {
            return Ok(GapSearch { generators, graph, report, attempts: attempt + 1 });
        }
        best = best.min(report.lambda);
    }
    Err(Error::RetriesExhausted { attempts: max_retries, best })
}

/// Edge list: a header `n k degree`, then `i j multiplicity` for `i ≤ j`
/// with 1-based vertex indices.
pub fn edge_list(g: &SchreierGraph) -> String {
    let mut out = format!("{} {} {}\n", g.p.n(), g.p.alphabet_size(), g.degree);
    let nv = g.vertices.len();
    for i in 0..nv {
        for j in i..nv {
            let m = g.counts[(i, j)];
            if m > 0 {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, m);
            }
        }
    }
    out
}
