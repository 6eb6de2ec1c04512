//! Universal decoders built from the universal symmetric states.

use std::collections::BTreeSet;

use crate::codebooks::Codebook;
use crate::error::{invalid, Result};
use crate::linalg::{c, hermitize, identity, is_psd, max_abs, min_eigenvalue, psd_power, zeros, CMat};
use crate::qstate::{operator_division, positive_eigenspace_projector};
use crate::schurweyl::UniversalStates;
use crate::typelab::Sequence;

/// POVM elements (one per codeword or message) and the unassigned remainder
/// `I − Σ elements`.
#[derive(Debug, Clone)]
pub struct DecoderPovm {
    pub elements: Vec<CMat>,
    pub remainder: CMat,
}

impl DecoderPovm {
    fn from_elements(elements: Vec<CMat>, dim: usize) -> Self {
        let mut remainder = identity(dim);
        for e in &elements {
            remainder -= e;
        }
        DecoderPovm { elements, remainder: hermitize(&remainder) }
    }

    pub fn dim(&self) -> usize {
        self.remainder.nrows()
    }

    /// Largest entry of `Σ elements + remainder − I`.
    pub fn completeness_defect(&self) -> f64 {
        let mut acc = self.remainder.clone() - identity(self.dim());
        for e in &self.elements {
            acc += e;
        }
        max_abs(&acc)
    }

    /// Smallest eigenvalue over all elements and the remainder.
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements.iter().chain([&self.remainder]).map(min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.completeness_defect() <= tol && self.elements.iter().chain([&self.remainder]).all(|e| is_psd(e, tol))
    }
}

/// `Y(x) = σ_x / Σ_y σ_y`, with the sum taken over the codebook as a
/// multiset so that repeated words share one decision region.
pub fn build_division_decoder(book: &Codebook, d: usize, cap_dim: usize) -> Result<DecoderPovm> {
    if book.is_empty() {
        return invalid("cannot decode an empty codebook");
    }
    let mut states = UniversalStates::new(d, cap_dim);
    let sigmas: Vec<CMat> = book.words.iter().map(|x| states.sigma_x(x)).collect::<Result<_>>()?;
    let dim = sigmas[0].nrows();
    let mut total = zeros(dim);
    for s in &sigmas {
        total += s;
    }
    let elements = sigmas.iter().map(|s| operator_division(s, &total)).collect::<Result<_>>()?;
    Ok(DecoderPovm::from_elements(elements, dim))
}

/// The likelihood-ratio projectors `Π(x) = {σ_x − C_n σ_{U,n}}_+` of the
/// decodable words of each message, and the square-root message POVM.
#[derive(Debug, Clone)]
pub struct ThresholdDecoder {
    pub c_n: f64,
    /// Distinct words of `K^j ∖ L^j`, sorted.
    pub words: Vec<Vec<Sequence>>,
    pub projectors: Vec<Vec<CMat>>,
    /// One element per message.
    pub povm: DecoderPovm,
}

impl ThresholdDecoder {
    /// `Σ_{x ∈ K^j∖L^j} Π(x)`.
    pub fn own_sum(&self, j: usize) -> CMat {
        let mut acc = zeros(self.povm.dim());
        for p in &self.projectors[j] {
            acc += p;
        }
        acc
    }

    /// `Σ_{l ≠ j} Σ_{x ∈ K^l∖L^l} Π(x)`.
    pub fn cross_sum(&self, j: usize) -> CMat {
        let mut acc = zeros(self.povm.dim());
        for l in (0..self.projectors.len()).filter(|&l| l != j) {
            acc += self.own_sum(l);
        }
        acc
    }

    /// Smallest eigenvalue of `2(I − S_j) + 4T_j − (I − Y(j))` over all
    /// messages; non-negative iff the split inequality holds everywhere.
    pub fn split_margin(&self) -> f64 {
        let dim = self.povm.dim();
        let eye = identity(dim);
        (0..self.projectors.len())
            .map(|j| {
                let rhs = (&eye - self.own_sum(j)) * c(2.0) + self.cross_sum(j) * c(4.0);
                min_eigenvalue(&(rhs - (&eye - &self.povm.elements[j])))
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the threshold decoder for subbooks `K^j` with excluded positions
/// `L^j`. Each distinct decodable word contributes one projector.
pub fn build_threshold_decoder(
    subbooks: &[Vec<Sequence>],
    excluded: &[Vec<usize>],
    c_n: f64,
    d: usize,
    cap_dim: usize,
) -> Result<ThresholdDecoder> {
    if c_n.is_nan() || c_n <= 0.0 {
        return invalid(format!("C_n must be positive, got {c_n}"));
    }
    if subbooks.is_empty() || subbooks.len() != excluded.len() {
        return invalid("need one exclusion list per subbook and at least one subbook");
    }
    let n = subbooks.iter().flatten().next().map_or(0, Sequence::len);
    let mut states = UniversalStates::new(d, cap_dim);
    let sigma_u = states.sigma_u(n)?.clone();
    let dim = sigma_u.nrows();
    let mut words = Vec::with_capacity(subbooks.len());
    let mut projectors = Vec::with_capacity(subbooks.len());
    for (book, skip) in subbooks.iter().zip(excluded) {
        let kept: BTreeSet<&Sequence> = book.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, x)| x).collect();
        let mut pis = Vec::with_capacity(kept.len());
        for x in &kept {
            let sigma_x = states.sigma_x(x)?;
            pis.push(positive_eigenspace_projector(&(sigma_x - &sigma_u * c(c_n))));
        }
        words.push(kept.into_iter().cloned().collect::<Vec<_>>());
        projectors.push(pis);
    }
    let mut total = zeros(dim);
    for p in projectors.iter().flatten() {
        total += p;
    }
    let root = psd_power(&total, -0.5);
    let elements = projectors
        .iter()
        .map(|pis| {
            let mut s = zeros(dim);
            for p in pis {
                s += p;
            }
            hermitize(&(&root * s * &root))
        })
        .collect();
    Ok(ThresholdDecoder { c_n, words, projectors, povm: DecoderPovm::from_elements(elements, dim) })
}
