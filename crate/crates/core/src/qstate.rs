//! Density operators, classical-quantum channels and the operator maps used
//! by the decoders and the resolvability analysis.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermiticity_defect, hermitize, kron_all, partial_trace as partial_trace_dims, singular_values, trace_re,
    zeros, CMat, HermitianEigen,
};
use crate::permaction::{all_permutations, enumerate_isotropy, PermMultiset, Permutation};
use crate::schurweyl::{conjugate_by_map, perm_index_map, MAX_GROUP_ORDER};
use crate::typelab::{canonical_sequence, factorial, type_class, Sequence, TypeComposition};

/// Tolerance applied when validating channel files.
pub const CHANNEL_ATOL: f64 = 1e-8;

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
}

impl DensityOperator {
    pub fn new(matrix: CMat, tol: f64) -> Result<Self> {
        validate_density(&matrix, tol)?;
        Ok(DensityOperator { matrix: hermitize(&matrix) })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator { matrix: CMat::identity(d, d) * c(1.0 / d as f64) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn validate_density(m: &CMat, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimMismatch(format!("{}x{} is not a non-empty square matrix", m.nrows(), m.ncols())));
    }
    let herm = hermiticity_defect(m);
    if herm > tol {
        return Err(Error::InvalidChannel(format!("not Hermitian (defect {herm:e})")));
    }
    let eig = HermitianEigen::new(m);
    if eig.min() < -tol {
        return Err(Error::InvalidChannel(format!("not PSD (min eigenvalue {:e})", eig.min())));
    }
    let tr = trace_re(m);
    if (tr - 1.0).abs() > tol {
        return Err(Error::InvalidChannel(format!("trace {tr} differs from 1")));
    }
    Ok(())
}

/// A map from letters `1..=k` to density operators on a common output
/// space, optionally bipartite `B ⊗ E`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqChannel {
    outputs: Vec<CMat>,
    d_out: usize,
    bipartite: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    B,
    E,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelFile {
    alphabet_size: usize,
    #[serde(rename = "d_B")]
    d_b: usize,
    #[serde(rename = "d_E", default, skip_serializing_if = "Option::is_none")]
    d_e: Option<usize>,
    outputs: Vec<OutputEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutputEntry {
    symbol: usize,
    real: Vec<Vec<f64>>,
    imag: Vec<Vec<f64>>,
}

impl CqChannel {
    /// Outputs are listed for letters `1..=k` in order.
    pub fn new(outputs: Vec<CMat>, tol: f64) -> Result<Self> {
        let Some(first) = outputs.first() else {
            return Err(Error::InvalidChannel("a channel needs at least one output".into()));
        };
        let d_out = first.nrows();
        for (i, w) in outputs.iter().enumerate() {
            if w.nrows() != d_out {
                return Err(Error::InvalidChannel(format!("output {} has dimension {}, expected {d_out}", i + 1, w.nrows())));
            }
            validate_density(w, tol).map_err(|e| Error::InvalidChannel(format!("output {}: {e}", i + 1)))?;
        }
        Ok(CqChannel { outputs: outputs.iter().map(hermitize).collect(), d_out, bipartite: None })
    }

    /// Outputs on `B ⊗ E` with `B` the more significant factor.
    pub fn new_bipartite(outputs: Vec<CMat>, d_b: usize, d_e: usize, tol: f64) -> Result<Self> {
        let mut ch = Self::new(outputs, tol)?;
        if ch.d_out != d_b * d_e {
            return Err(Error::DimMismatch(format!("output dimension {} is not {d_b}x{d_e}", ch.d_out)));
        }
        ch.bipartite = Some((d_b, d_e));
        Ok(ch)
    }

    pub fn alphabet_size(&self) -> usize {
        self.outputs.len()
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn bipartite_dims(&self) -> Option<(usize, usize)> {
        self.bipartite
    }

    /// Output for the 0-based letter `l`.
    pub fn output(&self, l: usize) -> &CMat {
        &self.outputs[l]
    }

    pub fn outputs(&self) -> &[CMat] {
        &self.outputs
    }

    /// `x ↦ Tr_E W(x)` or `x ↦ Tr_B W(x)`.
    pub fn marginal(&self, keep: Party) -> Result<CqChannel> {
        let (d_b, d_e) = self
            .bipartite
            .ok_or_else(|| Error::DimMismatch("channel has no bipartite structure".into()))?;
        let flags = match keep {
            Party::B => [true, false],
            Party::E => [false, true],
        };
        let outputs = self.outputs.iter().map(|w| partial_trace_dims(w, &[d_b, d_e], &flags)).collect();
        CqChannel::new(outputs, CHANNEL_ATOL)
    }

    /// The averaged output `Σ_x P(x) W(x)`.
    pub fn mixture(&self, p: &[f64]) -> CMat {
        let mut acc = zeros(self.d_out);
        for (w, &px) in self.outputs.iter().zip(p) {
            acc += w * c(px);
        }
        acc
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(s)?;
        let dim = file.d_b * file.d_e.unwrap_or(1);
        if file.outputs.len() != file.alphabet_size {
            return Err(Error::InvalidChannel(format!(
                "{} outputs listed for alphabet size {}",
                file.outputs.len(),
                file.alphabet_size
            )));
        }
        let mut slots: Vec<Option<CMat>> = vec![None; file.alphabet_size];
        for entry in &file.outputs {
            if entry.symbol == 0 || entry.symbol > file.alphabet_size {
                return Err(Error::InvalidChannel(format!("symbol {} outside 1..={}", entry.symbol, file.alphabet_size)));
            }
            let shape_ok = entry.real.len() == dim
                && entry.imag.len() == dim
                && entry.real.iter().chain(&entry.imag).all(|r| r.len() == dim);
            if !shape_ok {
                return Err(Error::InvalidChannel(format!("output for symbol {} is not {dim}x{dim}", entry.symbol)));
            }
            let m = CMat::from_fn(dim, dim, |r, col| Complex64::new(entry.real[r][col], entry.imag[r][col]));
            if slots[entry.symbol - 1].replace(m).is_some() {
                return Err(Error::InvalidChannel(format!("symbol {} listed twice", entry.symbol)));
            }
        }
        let outputs = slots.into_iter().map(|s| s.expect("every symbol filled")).collect();
        match file.d_e {
            Some(d_e) => Self::new_bipartite(outputs, file.d_b, d_e, CHANNEL_ATOL),
            None => Self::new(outputs, CHANNEL_ATOL),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let (d_b, d_e) = match self.bipartite {
            Some((b, e)) => (b, Some(e)),
            None => (self.d_out, None),
        };
        let outputs = self
            .outputs
            .iter()
            .enumerate()
            .map(|(i, w)| OutputEntry {
                symbol: i + 1,
                real: (0..self.d_out).map(|r| (0..self.d_out).map(|col| w[(r, col)].re).collect()).collect(),
                imag: (0..self.d_out).map(|r| (0..self.d_out).map(|col| w[(r, col)].im).collect()).collect(),
            })
            .collect();
        let file = ChannelFile { alphabet_size: self.alphabet_size(), d_b, d_e, outputs };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

fn check_power_dim(d: usize, n: usize, cap_dim: usize) -> Result<usize> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > cap_dim as u128 {
        return Err(Error::CapExceeded { what: "Hilbert-space dimension", size: dim, cap: cap_dim as u128 });
    }
    Ok(dim as usize)
}

/// `W(x_1) ⊗ … ⊗ W(x_n)`.
pub fn channel_output_product(w: &CqChannel, x: &Sequence, cap_dim: usize) -> Result<CMat> {
    if x.alphabet_size() > w.alphabet_size() {
        return Err(Error::DimMismatch(format!(
            "sequence alphabet {} exceeds channel alphabet {}",
            x.alphabet_size(),
            w.alphabet_size()
        )));
    }
    check_power_dim(w.d_out(), x.len(), cap_dim)?;
    Ok(kron_all(x.letters().map(|l| w.output(l))))
}

/// `(1/|T_P|) Σ_{x ∈ T_P} W^{⊗n}(x)`.
pub fn target_state(w: &CqChannel, p: &TypeComposition, cap: u128, cap_dim: usize) -> Result<CMat> {
    let class = type_class(p, cap)?;
    let dim = check_power_dim(w.d_out(), p.n(), cap_dim)?;
    let mut acc = zeros(dim);
    for x in &class {
        acc += channel_output_product(w, x, cap_dim)?;
    }
    Ok(acc * c(1.0 / class.len() as f64))
}

/// Schatten `α`-norm, `α ≥ 1`.
pub fn schatten_norm(a: &CMat, alpha: f64) -> f64 {
    let sv = singular_values(a);
    if alpha.is_infinite() {
        return sv.into_iter().fold(0.0, f64::max);
    }
    sv.iter().map(|s| s.powf(alpha)).sum::<f64>().powf(1.0 / alpha)
}

/// `‖ρ − σ‖₁` (not halved).
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> f64 {
    HermitianEigen::new(&(rho - sigma)).values.iter().map(|v| v.abs()).sum()
}

/// `A/B = ∫₀^∞ (B+λ)⁻¹ A (B+λ)⁻¹ dλ`, evaluated in the eigenbasis of `B` via
/// the divided difference of the logarithm.
pub fn operator_division(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.shape() != b.shape() {
        return Err(Error::DimMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let eig = HermitianEigen::new(b);
    let scale = eig.spectral_radius();
    let floor = 1e-12 * scale;
    if eig.min() <= floor {
        return Err(Error::SingularDenominator { min_eig: eig.min(), floor });
    }
    let u = &eig.vectors;
    let mut at = u.adjoint() * a * u;
    let bv = &eig.values;
    for i in 0..bv.len() {
        for j in 0..bv.len() {
            let f = if (bv[i] - bv[j]).abs() < floor {
                1.0 / bv[i]
            } else {
                (bv[i].ln() - bv[j].ln()) / (bv[i] - bv[j])
            };
            at[(i, j)] *= f;
        }
    }
    Ok(hermitize(&(u * at * u.adjoint())))
}

/// Projector onto the eigenspaces of `A` with eigenvalue above
/// `1e-10 · ‖A‖`.
pub fn positive_eigenspace_projector(a: &CMat) -> CMat {
    let eig = HermitianEigen::new(a);
    let tol = 1e-10 * eig.spectral_radius();
    eig.apply(|v| if v > tol { 1.0 } else { 0.0 })
}

/// The positive part `{A}_+` restricted to eigenvalues above the same
/// tolerance, returned with its projector.
pub fn positive_part(a: &CMat) -> (CMat, CMat) {
    let eig = HermitianEigen::new(a);
    let tol = 1e-10 * eig.spectral_radius();
    (eig.apply(|v| if v > tol { v } else { 0.0 }), eig.apply(|v| if v > tol { 1.0 } else { 0.0 }))
}

/// A subgroup of `S_n` to average over.
#[derive(Debug, Clone)]
pub enum Subgroup {
    Trivial,
    Full,
    /// The permutations fixing the given sequence.
    Isotropy(Sequence),
    /// An explicit list of elements, assumed to form a group.
    Elements(Vec<Permutation>),
}

impl Subgroup {
    pub fn elements(&self, n: usize) -> Result<Vec<Permutation>> {
        match self {
            Subgroup::Trivial => Ok(vec![Permutation::identity(n)]),
            Subgroup::Full => {
                let order = factorial(n);
                if order > MAX_GROUP_ORDER {
                    return Err(Error::CapExceeded { what: "symmetric group order", size: order, cap: MAX_GROUP_ORDER });
                }
                Ok(all_permutations(n))
            }
            Subgroup::Isotropy(x) => enumerate_isotropy(x, MAX_GROUP_ORDER),
            Subgroup::Elements(v) => Ok(v.clone()),
        }
    }
}

fn average_maps(a: &CMat, maps: &[Vec<usize>]) -> CMat {
    let mut acc = zeros(a.nrows());
    for m in maps {
        acc += conjugate_by_map(a, m);
    }
    acc * c(1.0 / maps.len() as f64)
}

/// `E_S(A) = (1/|S|) Σ_{s∈S} V_s A V_s†` on `(C^d)^{⊗n}`.
pub fn average_over_subgroup(a: &CMat, n: usize, d: usize, group: &Subgroup) -> Result<CMat> {
    let dim = check_power_dim(d, n, usize::MAX)?;
    if a.nrows() != dim {
        return Err(Error::DimMismatch(format!("operator has dimension {}, expected {dim}", a.nrows())));
    }
    let maps: Vec<Vec<usize>> = group.elements(n)?.iter().map(|s| perm_index_map(s, d)).collect();
    Ok(average_maps(a, &maps))
}

/// `Θ_{S′}(A) = (1/|S′|) Σ_{s∈S′} V_s E_{S_{x_P}}(A) V_s† − E_{S_n}(A)`, with
/// the permutation index maps precomputed.
#[derive(Debug, Clone)]
pub struct ThetaMap {
    n: usize,
    d: usize,
    generators: Vec<Vec<usize>>,
    isotropy: Vec<Vec<usize>>,
    full: Vec<Vec<usize>>,
}

impl ThetaMap {
    pub fn new(p: &TypeComposition, generators: &PermMultiset, d: usize, cap_dim: usize) -> Result<Self> {
        let n = p.n();
        check_power_dim(d, n, cap_dim)?;
        if generators.degree() != Some(n) {
            return Err(Error::LengthMismatch(generators.degree().unwrap_or(0), n));
        }
        let to_maps = |perms: &[Permutation]| perms.iter().map(|s| perm_index_map(s, d)).collect::<Vec<_>>();
        Ok(ThetaMap {
            n,
            d,
            generators: to_maps(generators.elements()),
            isotropy: to_maps(&Subgroup::Isotropy(canonical_sequence(p)).elements(n)?),
            full: to_maps(&Subgroup::Full.elements(n)?),
        })
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// `(1/|S′|) Σ V_s A V_s†`.
    pub fn mix(&self, a: &CMat) -> CMat {
        average_maps(a, &self.generators)
    }

    pub fn apply(&self, a: &CMat) -> CMat {
        self.mix(&average_maps(a, &self.isotropy)) - average_maps(a, &self.full)
    }

    /// `Θ†(A) = E_{S_{x_P}}(M̃†(A)) − E_{S_n}(A)`; `M̃† = M̃` only when the
    /// generator multiset is inverse-closed, so the adjoint maps are used.
    pub fn adjoint_apply(&self, a: &CMat) -> CMat {
        let mut acc = zeros(a.nrows());
        for m in &self.generators {
            let mut inv = vec![0; m.len()];
            for (i, &j) in m.iter().enumerate() {
                inv[j] = i;
            }
            acc += conjugate_by_map(a, &inv);
        }
        acc *= c(1.0 / self.generators.len() as f64);
        average_maps(&acc, &self.isotropy) - average_maps(a, &self.full)
    }

    /// Estimates `‖Θ‖_{2→2}` by power iteration on `Θ†Θ` from a random start.
    pub fn two_norm(&self, seed: u64, max_iter: usize, tol: f64) -> f64 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = self.dim();
        let mut v = CMat::from_fn(dim, dim, |_, _| gaussian_c(&mut rng));
        v /= c(v.norm());
        let mut last = 0.0;
        for _ in 0..max_iter {
            let w = self.adjoint_apply(&self.apply(&v));
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            v = w / c(norm);
            if (norm - last).abs() <= tol * norm {
                break;
            }
            last = norm;
        }
        // ‖Θ(v)‖ for the unit-norm final iterate never exceeds the true norm
        self.apply(&v).norm()
    }
}

fn gaussian_c(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Partial trace of an operator on `(B ⊗ E)^{⊗n}`, keeping one party.
pub fn partial_trace(rho: &CMat, d_b: usize, d_e: usize, n: usize, keep: Party) -> Result<CMat> {
    let dim = (d_b * d_e).pow(n as u32);
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimMismatch(format!("operator is {}x{}, expected {dim}x{dim}", rho.nrows(), rho.ncols())));
    }
    let dims: Vec<usize> = (0..n).flat_map(|_| [d_b, d_e]).collect();
    let flags: Vec<bool> = (0..n).flat_map(|_| [keep == Party::B, keep == Party::E]).collect();
    Ok(partial_trace_dims(rho, &dims, &flags))
}

/// A full-rank random state from the normalized Wishart ensemble.
pub fn random_density(d: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| gaussian_c(rng));
    let rho = &g * g.adjoint();
    let tr = trace_re(&rho);
    hermitize(&(rho / c(tr)))
}

pub fn random_pure(d: usize, rng: &mut impl Rng) -> CMat {
    let v = nalgebra::DVector::from_fn(d, |_, _| gaussian_c(rng));
    let v = &v / c(v.norm());
    &v * v.adjoint()
}

/// Haar-random unitary via QR with phase correction.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| gaussian_c(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / c(z.norm())
            } else {
                c(1.0)
            }
        } else {
            c(0.0)
        }
    });
    q * phases
}

pub fn random_channel(k: usize, d: usize, rng: &mut impl Rng) -> CqChannel {
    let outputs = (0..k).map(|_| random_density(d, rng)).collect();
    CqChannel::new(outputs, CHANNEL_ATOL).expect("random states are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, from_real_diag, identity, is_psd, max_abs, min_eigenvalue, hs_inner, psd_power};
    use crate::permaction::{sample_uniform, symmetrize};
    use crate::schreier::{build_schreier, build_until_gap, spectral_report};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn tc(v: &[usize]) -> TypeComposition {
        TypeComposition::new(v.to_vec()).unwrap()
    }

    fn pure0() -> CMat {
        from_real_diag(&[1.0, 0.0])
    }

    #[test]
    fn product_examples() {
        let mut r = rng(1);
        let w = random_channel(2, 2, &mut r);
        let x1 = Sequence::new(vec![2], 2).unwrap();
        assert_eq!(channel_output_product(&w, &x1, 64).unwrap(), w.output(1).clone());
        let pure = CqChannel::new(vec![pure0(), from_real_diag(&[0.0, 1.0])], 1e-9).unwrap();
        let x = Sequence::new(vec![1, 1, 1], 2).unwrap();
        let out = channel_output_product(&pure, &x, 64).unwrap();
        assert_eq!(out[(0, 0)], c(1.0));
        assert!((trace_re(&out) - 1.0).abs() < 1e-15);
        for seed in 0..5 {
            let w = random_channel(3, 2, &mut rng(seed));
            let x = Sequence::new(vec![1, 3, 2, 2], 3).unwrap();
            assert!((trace_re(&channel_output_product(&w, &x, 64).unwrap()) - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            channel_output_product(&w, &Sequence::new(vec![1; 13], 2).unwrap(), 4096),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn target_state_examples() {
        let w = random_channel(2, 2, &mut rng(2));
        let p = tc(&[3, 0]);
        let single = channel_output_product(&w, &canonical_sequence(&p), 64).unwrap();
        assert!(max_abs(&(target_state(&w, &p, 100, 64).unwrap() - single)) < 1e-15);
        for p in [tc(&[2, 2]), tc(&[3, 2]), tc(&[1, 2])] {
            let t = target_state(&w, &p, 100, 64).unwrap();
            let xp = channel_output_product(&w, &canonical_sequence(&p), 64).unwrap();
            let avg = average_over_subgroup(&xp, p.n(), 2, &Subgroup::Full).unwrap();
            assert!(max_abs(&(&t - avg)) < 1e-10);
            assert!((trace_re(&t) - 1.0).abs() < 1e-12 && is_psd(&t, 1e-12));
        }
    }

    #[test]
    fn norm_examples() {
        assert!((schatten_norm(&identity(2), 1.0) - 2.0).abs() < 1e-15);
        let rho = random_density(3, &mut rng(3));
        assert_eq!(trace_distance(&rho, &rho), 0.0);
        let t = CMat::from_fn(4, 4, |i, j| Complex64::new(i as f64 - j as f64 * 0.3, (i * j) as f64 * 0.1));
        let hs = trace_re(&(t.adjoint() * &t)).sqrt();
        assert!((schatten_norm(&t, 2.0) - hs).abs() < 1e-10);
        let sigma = random_density(3, &mut rng(4));
        assert!((trace_distance(&rho, &sigma) - schatten_norm(&(&rho - &sigma), 1.0)).abs() < 1e-12);
    }

    fn quadrature_division(a: &CMat, b: &CMat) -> CMat {
        // substitution λ = t/(1−t) maps [0,∞) to [0,1); composite Gauss-Legendre
        let eig = HermitianEigen::new(b);
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189),
            (-0.538_469_310_105_683, 0.478_628_670_499_366),
            (0.0, 0.568_888_888_888_889),
            (0.538_469_310_105_683, 0.478_628_670_499_366),
            (0.906_179_845_938_664, 0.236_926_885_056_189),
        ];
        let panels = 4000;
        let mut acc = zeros(a.nrows());
        for k in 0..panels {
            let (lo, hi) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
            for (xi, wi) in nodes {
                let t = 0.5 * (hi - lo) * xi + 0.5 * (hi + lo);
                let lam = t / (1.0 - t);
                let jac = 1.0 / ((1.0 - t) * (1.0 - t));
                let r = eig.apply(|v| 1.0 / (v + lam));
                acc += (&r * a * &r) * c(0.5 * (hi - lo) * wi * jac);
            }
        }
        acc
    }

    #[test]
    fn division_examples() {
        let a = random_density(3, &mut rng(5));
        assert!(max_abs(&(operator_division(&a, &identity(3)).unwrap() - &a)) < 1e-12);
        let ad = from_real_diag(&[0.2, 0.3, 0.5]);
        let bd = from_real_diag(&[0.5, 0.25, 0.25]);
        let q = operator_division(&ad, &bd).unwrap();
        for (i, e) in [0.4, 1.2, 2.0].iter().enumerate() {
            assert!((q[(i, i)].re - e).abs() < 1e-12);
        }
        let b = random_density(3, &mut rng(6));
        let exact = operator_division(&a, &b).unwrap();
        let quad = quadrature_division(&a, &b);
        assert!(max_abs(&(exact - quad)) < 1e-6);
        assert!(matches!(operator_division(&a, &from_real_diag(&[1.0, 0.0, 0.5])), Err(Error::SingularDenominator { .. })));
    }

    #[test]
    fn division_properties() {
        for seed in 0..10 {
            let mut r = rng(100 + seed);
            let a = random_density(3, &mut r);
            let a2 = random_density(3, &mut r);
            let b = random_density(3, &mut r);
            let u = random_unitary(3, &mut r);
            let ab = operator_division(&a, &b).unwrap();
            assert!(is_psd(&ab, 1e-10));
            let sum = operator_division(&(&a + &a2), &b).unwrap();
            assert!(max_abs(&(sum - (&ab + operator_division(&a2, &b).unwrap()))) < 1e-10);
            let a_over_apb = operator_division(&a, &(&a + &b)).unwrap();
            assert!(min_eigenvalue(&(&ab - a_over_apb)) >= -1e-10);
            let rotated = operator_division(&(&u * &a * u.adjoint()), &(&u * &b * u.adjoint())).unwrap();
            assert!(max_abs(&(rotated - &u * &ab * u.adjoint())) < 1e-10);
        }
    }

    #[test]
    fn projector_examples() {
        let p = positive_eigenspace_projector(&from_real_diag(&[1.0, -1.0]));
        assert!(max_abs(&(p - from_real_diag(&[1.0, 0.0]))) < 1e-15);
        let rho = random_density(3, &mut rng(7));
        assert!(max_abs(&(positive_eigenspace_projector(&rho) - identity(3))) < 1e-12);
        assert_eq!(positive_eigenspace_projector(&zeros(3)), zeros(3));
    }

    #[test]
    fn subgroup_average_properties() {
        let mut r = rng(8);
        let a = CMat::from_fn(16, 16, |_, _| gaussian_c(&mut r));
        let b = CMat::from_fn(16, 16, |_, _| gaussian_c(&mut r));
        assert_eq!(average_over_subgroup(&a, 4, 2, &Subgroup::Trivial).unwrap(), a);
        let iso = Subgroup::Isotropy(Sequence::new(vec![1, 1, 2, 2], 2).unwrap());
        for g in [Subgroup::Full, iso] {
            let ea = average_over_subgroup(&a, 4, 2, &g).unwrap();
            let eea = average_over_subgroup(&ea, 4, 2, &g).unwrap();
            assert!(max_abs(&(&ea - eea)) < 1e-12);
            let eb = average_over_subgroup(&b, 4, 2, &g).unwrap();
            assert!((hs_inner(&a, &eb) - hs_inner(&ea, &b)).norm() < 1e-10);
        }
    }

    #[test]
    fn theta_examples() {
        let p = tc(&[2, 2]);
        let found = build_until_gap(&p, 0.9, 1, 20, None, 1000).unwrap();
        let theta = ThetaMap::new(&p, &found.generators, 2, 4096).unwrap();
        let sigma = random_density(2, &mut rng(9));
        let s4 = kron_all([&sigma, &sigma, &sigma, &sigma]);
        assert!(max_abs(&theta.apply(&s4)) < 1e-12);

        let w = random_channel(2, 2, &mut rng(10));
        let xp = canonical_sequence(&p);
        let wxp = channel_output_product(&w, &xp, 64).unwrap();
        let mut mixture = zeros(16);
        for s in found.generators.elements() {
            mixture += channel_output_product(&w, &crate::permaction::apply(s, &xp).unwrap(), 64).unwrap();
        }
        mixture /= c(found.generators.len() as f64);
        let expected = mixture - target_state(&w, &p, 100, 64).unwrap();
        assert!(max_abs(&(theta.apply(&wxp) - expected)) < 1e-12);

        let lambda = found.report.lambda;
        let mut r = rng(11);
        for _ in 0..100 {
            let eta = CMat::from_fn(16, 16, |_, _| gaussian_c(&mut r));
            assert!(frobenius(&theta.apply(&eta)) <= lambda * frobenius(&eta) + 1e-9);
            assert!(schatten_norm(&theta.apply(&eta), 1.0) <= 2.0 * schatten_norm(&eta, 1.0) + 1e-9);
        }
        let est = theta.two_norm(3, 2000, 1e-14);
        assert!(est <= lambda + 1e-9, "estimate {est} vs lambda {lambda}");
    }

    #[test]
    fn theta_norm_tracks_gap() {
        // a weak generator set: the estimate should come close to λ
        let p = tc(&[2, 1]);
        let s = symmetrize(&sample_uniform(3, 1, 4).unwrap());
        let g = build_schreier(&p, &s, 100).unwrap();
        let lambda = spectral_report(&g).lambda;
        let theta = ThetaMap::new(&p, &s, 2, 64).unwrap();
        let est = theta.two_norm(1, 5000, 1e-15);
        assert!(est <= lambda + 1e-9);
        assert!(est >= lambda - 1e-6, "estimate {est} vs lambda {lambda}");
    }

    #[test]
    fn bipartite_partial_trace() {
        let mut r = rng(12);
        let rb = random_density(2, &mut r);
        let re = random_density(3, &mut r);
        let joint = crate::linalg::kron(&rb, &re);
        assert!(max_abs(&(partial_trace(&joint, 2, 3, 1, Party::B).unwrap() - &rb)) < 1e-14);
        let mut bell = zeros(4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(i, j)] = c(0.5);
        }
        assert!(max_abs(&(partial_trace(&bell, 2, 2, 1, Party::E).unwrap() - identity(2) * c(0.5))) < 1e-15);
        let two = crate::linalg::kron(&joint, &joint);
        let kept = partial_trace(&two, 2, 3, 2, Party::E).unwrap();
        assert!((trace_re(&kept) - 1.0).abs() < 1e-12);
        assert!(max_abs(&(kept - crate::linalg::kron(&re, &re))) < 1e-13);
        assert!(matches!(partial_trace(&joint, 2, 2, 1, Party::B), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn channel_json_round_trip() {
        let w = random_channel(3, 2, &mut rng(13));
        let text = w.to_json().unwrap();
        let back = CqChannel::from_json_str(&text).unwrap();
        for l in 0..3 {
            assert!(max_abs(&(back.output(l) - w.output(l))) < 1e-15);
        }
        let bad = r#"{"alphabet_size":1,"d_B":2,"outputs":[{"symbol":1,"real":[[0.5,0],[0,0.6]],"imag":[[0,0],[0,0]]}]}"#;
        assert!(matches!(CqChannel::from_json_str(bad), Err(Error::InvalidChannel(_))));
        let joint = r#"{"alphabet_size":1,"d_B":2,"d_E":1,"outputs":[{"symbol":1,"real":[[1,0],[0,0]],"imag":[[0,0],[0,0]]}]}"#;
        let ch = CqChannel::from_json_str(joint).unwrap();
        assert_eq!(ch.bipartite_dims(), Some((2, 1)));
        assert_eq!(ch.marginal(Party::E).unwrap().output(0), &identity(1));
    }

    #[test]
    fn random_state_helpers() {
        let mut r = rng(14);
        let u = random_unitary(3, &mut r);
        assert!(max_abs(&(&u * u.adjoint() - identity(3))) < 1e-12);
        let psi = random_pure(3, &mut r);
        assert!(max_abs(&(&psi * &psi - &psi)) < 1e-12);
        let rho = random_density(3, &mut r);
        assert!(max_abs(&(psd_power(&rho, 0.5) * psd_power(&rho, 0.5) - &rho)) < 1e-12);
    }
}
