//! Rényi divergences and the channel information quantities built on them.
//! All values are in nats.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitize, psd_power, support_threshold, trace_re, CMat, HermitianEigen};
use crate::qstate::CqChannel;

/// Relative threshold below which an eigenvalue is outside the support.
pub const SUPPORT_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceResult {
    pub value: f64,
    pub alpha: f64,
    pub support_condition_met: bool,
}

impl DivergenceResult {
    fn finite(value: f64, alpha: f64) -> Self {
        DivergenceResult { value, alpha, support_condition_met: true }
    }

    fn infinite(alpha: f64) -> Self {
        DivergenceResult { value: f64::INFINITY, alpha, support_condition_met: false }
    }
}

impl fmt::Display for DivergenceResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (alpha = {})", self.value, self.alpha)
    }
}

/// `supp ρ ⊆ supp σ`, tested by the weight of `ρ` outside the support of `σ`.
pub fn support_contained(rho: &CMat, sigma: &CMat) -> bool {
    let eig = HermitianEigen::new(sigma);
    let tol = support_threshold(&eig, SUPPORT_RTOL);
    let outside = eig.apply(|v| if v > tol { 0.0 } else { 1.0 });
    trace_re(&(outside * rho)) <= SUPPORT_RTOL * trace_re(rho).abs().max(1.0)
}

fn log_trace_fn(a: &CMat, f: impl Fn(f64) -> f64) -> f64 {
    HermitianEigen::new(a).values.iter().map(|&v| f(v)).sum::<f64>()
}

fn xlogx_trace(rho: &CMat) -> f64 {
    let eig = HermitianEigen::new(rho);
    let tol = support_threshold(&eig, SUPPORT_RTOL);
    eig.values.iter().filter(|&&v| v > tol).map(|&v| v * v.ln()).sum()
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &CMat) -> f64 {
    -xlogx_trace(rho)
}

/// `D(ρ‖σ) = Tr[ρ ln ρ − ρ ln σ]`.
pub fn relative_entropy(rho: &CMat, sigma: &CMat) -> DivergenceResult {
    if !support_contained(rho, sigma) {
        return DivergenceResult::infinite(1.0);
    }
    let eig = HermitianEigen::new(sigma);
    let tol = support_threshold(&eig, SUPPORT_RTOL);
    let log_sigma = eig.apply(|v| if v > tol { v.ln() } else { 0.0 });
    DivergenceResult::finite(xlogx_trace(rho) - trace_re(&(rho * log_sigma)), 1.0)
}

/// Petz Rényi divergence `(1/(α−1)) ln Tr[ρ^α σ^{1−α}]`.
pub fn petz_renyi(rho: &CMat, sigma: &CMat, alpha: f64) -> DivergenceResult {
    if (alpha - 1.0).abs() < 1e-14 {
        return relative_entropy(rho, sigma);
    }
    if alpha > 1.0 && !support_contained(rho, sigma) {
        return DivergenceResult::infinite(alpha);
    }
    let q = trace_re(&(psd_power(rho, alpha) * psd_power(sigma, 1.0 - alpha)));
    if q <= 0.0 {
        return DivergenceResult::infinite(alpha);
    }
    DivergenceResult::finite(q.ln() / (alpha - 1.0), alpha)
}

/// Sandwiched Rényi divergence `(α/(α−1)) ln ‖σ^β ρ σ^β‖_α`, `β = (1−α)/(2α)`.
pub fn sandwiched_renyi(rho: &CMat, sigma: &CMat, alpha: f64) -> DivergenceResult {
    if (alpha - 1.0).abs() < 1e-14 {
        return relative_entropy(rho, sigma);
    }
    if alpha > 1.0 && !support_contained(rho, sigma) {
        return DivergenceResult::infinite(alpha);
    }
    let s = psd_power(sigma, (1.0 - alpha) / (2.0 * alpha));
    let inner = hermitize(&(&s * rho * &s));
    let q = log_trace_fn(&inner, |v| if v > 0.0 { v.powf(alpha) } else { 0.0 });
    if q <= 0.0 {
        return DivergenceResult::infinite(alpha);
    }
    DivergenceResult::finite(q.ln() / (alpha - 1.0), alpha)
}

/// A Rényi-type divergence selectable by name.
pub trait Divergence: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, rho: &CMat, sigma: &CMat, alpha: f64) -> DivergenceResult;
}

pub struct Petz;
pub struct Sandwiched;

impl Divergence for Petz {
    fn name(&self) -> &'static str {
        "petz"
    }
    fn evaluate(&self, rho: &CMat, sigma: &CMat, alpha: f64) -> DivergenceResult {
        petz_renyi(rho, sigma, alpha)
    }
}

impl Divergence for Sandwiched {
    fn name(&self) -> &'static str {
        "sandwiched"
    }
    fn evaluate(&self, rho: &CMat, sigma: &CMat, alpha: f64) -> DivergenceResult {
        sandwiched_renyi(rho, sigma, alpha)
    }
}

pub fn divergences() -> Vec<Box<dyn Divergence>> {
    vec![Box::new(Petz), Box::new(Sandwiched)]
}

pub fn divergence(name: &str) -> Result<Box<dyn Divergence>> {
    let all = divergences();
    let available = all.iter().map(|d| d.name()).collect::<Vec<_>>().join(", ");
    all.into_iter()
        .find(|d| d.name() == name)
        .ok_or(Error::UnknownStrategy { name: name.to_string(), available })
}

fn check_distribution(w: &CqChannel, p: &[f64]) -> Result<()> {
    if p.len() != w.alphabet_size() {
        return Err(Error::DimMismatch(format!("distribution over {} letters for alphabet {}", p.len(), w.alphabet_size())));
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("{p:?} is not a probability vector")));
    }
    Ok(())
}

/// Holevo mutual information `S(Σ P W) − Σ P S(W_x)`.
pub fn mutual_information(w: &CqChannel, p: &[f64]) -> Result<f64> {
    check_distribution(w, p)?;
    let mix = w.mixture(p);
    let avg: f64 = w.outputs().iter().zip(p).map(|(wx, &px)| px * von_neumann_entropy(wx)).sum();
    Ok(von_neumann_entropy(&mix) - avg)
}

fn sibson_core(w: &CqChannel, p: &[f64], alpha: f64) -> CMat {
    let mut acc = CMat::zeros(w.d_out(), w.d_out());
    for (wx, &px) in w.outputs().iter().zip(p) {
        if px > 0.0 {
            acc += psd_power(wx, alpha) * c(px);
        }
    }
    hermitize(&acc)
}

/// `I_α(X:B) = (α/(α−1)) ln Tr[(Σ_x P(x) W_x^α)^{1/α}]` for `α ∈ [0,1)`;
/// `α = 1` returns the mutual information and `α = 0` the limit
/// `−ln λ_max(Σ_x P(x) Π_{W_x})`.
pub fn sibson_alpha_mutual(w: &CqChannel, p: &[f64], alpha: f64) -> Result<f64> {
    check_distribution(w, p)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0,1]")));
    }
    if alpha == 1.0 {
        return mutual_information(w, p);
    }
    let core = sibson_core(w, p, alpha);
    if alpha == 0.0 {
        return Ok(-HermitianEigen::new(&core).max().ln());
    }
    let t = log_trace_fn(&core, |v| if v > 0.0 { v.powf(1.0 / alpha) } else { 0.0 });
    Ok(alpha / (alpha - 1.0) * t.ln())
}

/// The minimizing output state `σ* ∝ (Σ_x P(x) W_x^α)^{1/α}`.
pub fn sibson_minimizer(w: &CqChannel, p: &[f64], alpha: f64) -> Result<CMat> {
    check_distribution(w, p)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0,1)")));
    }
    let s = psd_power(&sibson_core(w, p, alpha), 1.0 / alpha);
    let tr = trace_re(&s);
    Ok(s / c(tr))
}

/// `D_α(ρ_{XB} ‖ ρ_X ⊗ σ) = (1/(α−1)) ln Σ_x P(x) Tr[W_x^α σ^{1−α}]`.
pub fn sibson_objective(w: &CqChannel, p: &[f64], alpha: f64, sigma: &CMat) -> f64 {
    let s = psd_power(sigma, 1.0 - alpha);
    let q: f64 = w
        .outputs()
        .iter()
        .zip(p)
        .filter(|(_, &px)| px > 0.0)
        .map(|(wx, &px)| px * trace_re(&(psd_power(wx, alpha) * &s)))
        .sum();
    if q <= 0.0 {
        f64::INFINITY
    } else {
        q.ln() / (alpha - 1.0)
    }
}

/// `Σ_x P(x) D̃_α(W_x ‖ σ)`.
pub fn augustin_objective(w: &CqChannel, p: &[f64], alpha: f64, sigma: &CMat) -> f64 {
    w.outputs()
        .iter()
        .zip(p)
        .filter(|(_, &px)| px > 0.0)
        .map(|(wx, &px)| px * sandwiched_renyi(wx, sigma, alpha).value)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AugustinMethod {
    FixedPoint,
    Grid,
    Limit,
}

#[derive(Debug, Clone)]
pub struct AugustinResult {
    pub value: f64,
    pub minimizer: CMat,
    pub iterations: usize,
    pub method: AugustinMethod,
}

pub const AUGUSTIN_MAX_ITER: usize = 5000;
pub const AUGUSTIN_TOL: f64 = 1e-10;
const AUGUSTIN_DAMPING: f64 = 0.5;

/// Sandwiched Augustin information `inf_σ Σ_x P(x) D̃_α(W_x‖σ)` for
/// `α ≥ 1/2`, by the damped fixed-point map
/// `σ ↦ Σ_x P(x) (σ^β W_x σ^β)^α / Tr[(σ^β W_x σ^β)^α]`.
pub fn augustin_info(w: &CqChannel, p: &[f64], alpha: f64) -> Result<AugustinResult> {
    check_distribution(w, p)?;
    if alpha < 0.5 {
        return Err(Error::InvalidArgument(format!("alpha {alpha} below 1/2")));
    }
    let mix = hermitize(&w.mixture(p));
    if (alpha - 1.0).abs() < 1e-14 {
        return Ok(AugustinResult { value: mutual_information(w, p)?, minimizer: mix, iterations: 0, method: AugustinMethod::Limit });
    }
    match augustin_fixed_point(w, p, alpha, mix) {
        Ok(r) => Ok(r),
        Err(Error::NonConvergence { .. }) if w.d_out() == 2 => {
            let (value, minimizer) = qubit::grid_minimize(|s| augustin_objective(w, p, alpha, s), 0.999);
            Ok(AugustinResult { value, minimizer, iterations: AUGUSTIN_MAX_ITER, method: AugustinMethod::Grid })
        }
        Err(e) => Err(e),
    }
}

fn augustin_fixed_point(w: &CqChannel, p: &[f64], alpha: f64, start: CMat) -> Result<AugustinResult> {
    let beta = (1.0 - alpha) / (2.0 * alpha);
    let mut sigma = start;
    let mut value = augustin_objective(w, p, alpha, &sigma);
    let mut change = f64::INFINITY;
    for it in 1..=AUGUSTIN_MAX_ITER {
        let s = psd_power(&sigma, beta);
        let mut next = CMat::zeros(w.d_out(), w.d_out());
        for (wx, &px) in w.outputs().iter().zip(p) {
            if px == 0.0 {
                continue;
            }
            let tilted = psd_power(&hermitize(&(&s * wx * &s)), alpha);
            let z = trace_re(&tilted);
            next += tilted * c(px / z);
        }
        sigma = hermitize(&(sigma * c(1.0 - AUGUSTIN_DAMPING) + next * c(AUGUSTIN_DAMPING)));
        let tr = trace_re(&sigma);
        sigma /= c(tr);
        let new_value = augustin_objective(w, p, alpha, &sigma);
        change = (new_value - value).abs();
        value = new_value;
        if change < AUGUSTIN_TOL {
            return Ok(AugustinResult { value, minimizer: sigma, iterations: it, method: AugustinMethod::FixedPoint });
        }
    }
    Err(Error::NonConvergence { iterations: AUGUSTIN_MAX_ITER, change })
}

/// Minimizes an objective over qubit states on a Bloch-ball grid.
pub fn bloch_grid_minimize(objective: impl Fn(&CMat) -> f64, max_radius: f64) -> (f64, CMat) {
    qubit::grid_minimize(objective, max_radius)
}

mod qubit {
    use super::*;

    pub(super) fn state(r: f64, theta: f64, phi: f64) -> CMat {
        let (x, y, z) = (r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos());
        CMat::from_row_slice(
            2,
            2,
            &[c(0.5 * (1.0 + z)), Complex64::new(0.5 * x, -0.5 * y), Complex64::new(0.5 * x, 0.5 * y), c(0.5 * (1.0 - z))],
        )
    }

    /// A 40 × 50 × 50 product grid over radius and the two angles, followed
    /// by local refinement rounds around the incumbent. Ties keep the lowest
    /// grid index.
    pub(super) fn grid_minimize(objective: impl Fn(&CMat) -> f64, max_radius: f64) -> (f64, CMat) {
        let (nr, nt, np) = (40usize, 50usize, 50usize);
        let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
        for ir in 0..nr {
            let r = max_radius * ir as f64 / (nr - 1) as f64;
            for it in 0..nt {
                let theta = std::f64::consts::PI * it as f64 / (nt - 1) as f64;
                for ip in 0..np {
                    let phi = 2.0 * std::f64::consts::PI * ip as f64 / np as f64;
                    let v = objective(&state(r, theta, phi));
                    if v < best.0 {
                        best = (v, r, theta, phi);
                    }
                }
            }
        }
        let mut steps = (max_radius / (nr - 1) as f64, std::f64::consts::PI / (nt - 1) as f64, 2.0 * std::f64::consts::PI / np as f64);
        for _ in 0..12 {
            let center = best;
            for dr in -5i32..=5 {
                for dt in -5i32..=5 {
                    for dp in -5i32..=5 {
                        let r = (center.1 + dr as f64 * steps.0 / 5.0).clamp(0.0, max_radius);
                        let theta = center.2 + dt as f64 * steps.1 / 5.0;
                        let phi = center.3 + dp as f64 * steps.2 / 5.0;
                        let v = objective(&state(r, theta, phi));
                        if v < best.0 {
                            best = (v, r, theta, phi);
                        }
                    }
                }
            }
            steps = (steps.0 / 2.5, steps.1 / 2.5, steps.2 / 2.5);
        }
        (best.0, state(best.1, best.2, best.3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_diag, identity, max_abs};
    use crate::qstate::{random_channel, random_density, CHANNEL_ATOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn classical_petz(p: &[f64], q: &[f64], a: f64) -> f64 {
        p.iter().zip(q).map(|(x, y)| x.powf(a) * y.powf(1.0 - a)).sum::<f64>().ln() / (a - 1.0)
    }

    #[test]
    fn petz_examples() {
        let rho = random_density(3, &mut rng(1));
        for a in [0.0, 0.3, 0.5, 1.5, 2.0] {
            assert!(petz_renyi(&rho, &rho, a).value.abs() < 1e-12);
        }
        let r = from_real_diag(&[0.5, 0.5]);
        let s = from_real_diag(&[0.9, 0.1]);
        let got = petz_renyi(&r, &s, 0.5).value;
        assert!((got - classical_petz(&[0.5, 0.5], &[0.9, 0.1], 0.5)).abs() < 1e-14);
        let sigma = random_density(3, &mut rng(2));
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=20 {
            let a = 0.05 + 0.1 * k as f64;
            let v = petz_renyi(&rho, &sigma, a).value;
            assert!(v >= prev - 1e-9);
            prev = v;
        }
    }

    #[test]
    fn support_condition() {
        let rho = from_real_diag(&[0.5, 0.5]);
        let sigma = from_real_diag(&[1.0, 0.0]);
        let r = petz_renyi(&rho, &sigma, 2.0);
        assert!(r.value.is_infinite() && !r.support_condition_met);
        assert!(petz_renyi(&rho, &sigma, 0.5).value.is_finite());
        assert!(relative_entropy(&rho, &sigma).value.is_infinite());
        assert!(sandwiched_renyi(&rho, &sigma, 1.5).value.is_infinite());
        let orth = from_real_diag(&[0.0, 1.0]);
        assert!(petz_renyi(&sigma, &orth, 0.5).value.is_infinite());
    }

    #[test]
    fn limits_at_one() {
        let mut r = rng(3);
        let rho = random_density(2, &mut r);
        let sigma = random_density(2, &mut r);
        let d = relative_entropy(&rho, &sigma).value;
        for a in [1.0 - 1e-5, 1.0 + 1e-5] {
            assert!((petz_renyi(&rho, &sigma, a).value - d).abs() < 1e-4);
            assert!((sandwiched_renyi(&rho, &sigma, a).value - d).abs() < 1e-4);
        }
    }

    #[test]
    fn sandwiched_examples() {
        let mut r = rng(4);
        let rho = random_density(2, &mut r);
        let sigma = random_density(2, &mut r);
        assert!(sandwiched_renyi(&rho, &rho, 1.7).value.abs() < 1e-12);
        let p = from_real_diag(&[0.3, 0.7]);
        let q = from_real_diag(&[0.6, 0.4]);
        for a in [0.5, 0.9, 1.5, 2.0] {
            assert!((sandwiched_renyi(&p, &q, a).value - petz_renyi(&p, &q, a).value).abs() < 1e-13);
        }
        // α = 2: ln Tr[(σ^{-1/4} ρ σ^{-1/4})²] = ln Tr[ρ σ^{-1/2} ρ σ^{-1/2}]
        let si = psd_power(&sigma, -0.5);
        let direct = trace_re(&(&rho * &si * &rho * &si)).ln();
        assert!((sandwiched_renyi(&rho, &sigma, 2.0).value - direct).abs() < 1e-12);
        for a in [0.6, 0.8, 1.3, 2.0] {
            assert!(sandwiched_renyi(&rho, &sigma, a).value <= petz_renyi(&rho, &sigma, a).value + 1e-12);
        }
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(divergence("petz").unwrap().name(), "petz");
        assert_eq!(divergence("sandwiched").unwrap().name(), "sandwiched");
        assert!(matches!(divergence("geometric"), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn constant_channel_has_zero_information() {
        let rho = random_density(2, &mut rng(5));
        let w = CqChannel::new(vec![rho.clone(), rho], CHANNEL_ATOL).unwrap();
        let p = [0.4, 0.6];
        for a in [0.0, 0.2, 0.5, 0.9] {
            assert!(sibson_alpha_mutual(&w, &p, a).unwrap().abs() < 1e-12);
        }
        for a in [1.2, 1.5, 2.0] {
            assert!(augustin_info(&w, &p, a).unwrap().value.abs() < 1e-9);
        }
        assert!(mutual_information(&w, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sibson_identity_and_limit() {
        for seed in 0..5 {
            let w = random_channel(2, 2, &mut rng(10 + seed));
            let p = [0.6, 0.4];
            for a in [0.2, 0.5, 0.8] {
                let closed = sibson_alpha_mutual(&w, &p, a).unwrap();
                let star = sibson_minimizer(&w, &p, a).unwrap();
                assert!((sibson_objective(&w, &p, a, &star) - closed).abs() < 1e-8);
                assert!(sibson_objective(&w, &p, a, &(identity(2) * c(0.5))) >= closed - 1e-12);
            }
            let i = mutual_information(&w, &p).unwrap();
            assert!((sibson_alpha_mutual(&w, &p, 1.0 - 1e-4).unwrap() - i).abs() < 1e-3);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..20 {
                let v = sibson_alpha_mutual(&w, &p, k as f64 / 20.0).unwrap();
                assert!(v >= prev - 1e-9);
                prev = v;
            }
        }
    }

    #[test]
    fn sibson_matches_grid() {
        let w = random_channel(2, 2, &mut rng(20));
        let p = [0.5, 0.5];
        let a = 0.5;
        let closed = sibson_alpha_mutual(&w, &p, a).unwrap();
        let (grid, _) = bloch_grid_minimize(|s| sibson_objective(&w, &p, a, s), 0.999);
        assert!((grid - closed).abs() < 1e-3);
        assert!(grid >= closed - 1e-9);
    }

    #[test]
    fn augustin_classical_collapse() {
        // golden-section minimization over diagonal σ = diag(q, 1−q)
        let w = CqChannel::new(vec![from_real_diag(&[0.8, 0.2]), from_real_diag(&[0.3, 0.7])], CHANNEL_ATOL).unwrap();
        let p = [0.45, 0.55];
        for a in [1.5, 2.0] {
            let f = |q: f64| {
                p.iter()
                    .zip([[0.8, 0.2], [0.3, 0.7]])
                    .map(|(px, wx)| px * classical_petz(&wx, &[q, 1.0 - q], a))
                    .sum::<f64>()
            };
            let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if f(m1) < f(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let oracle = f(0.5 * (lo + hi));
            let got = augustin_info(&w, &p, a).unwrap();
            assert_eq!(got.method, AugustinMethod::FixedPoint);
            assert!((got.value - oracle).abs() < 1e-8, "{} vs {oracle}", got.value);
        }
    }

    #[test]
    fn augustin_matches_grid_and_is_monotone() {
        let w = random_channel(2, 2, &mut rng(30));
        let p = [0.6, 0.4];
        let fp = augustin_info(&w, &p, 1.5).unwrap();
        let (grid, _) = bloch_grid_minimize(|s| augustin_objective(&w, &p, 1.5, s), 0.999);
        assert!((fp.value - grid).abs() < 1e-3);
        assert!(fp.value <= grid + 1e-9);
        let i = mutual_information(&w, &p).unwrap();
        assert!((augustin_info(&w, &p, 1.0 + 1e-4).unwrap().value - i).abs() < 1e-3);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..20 {
            let v = augustin_info(&w, &p, 1.0 + k as f64 / 19.0).unwrap().value;
            assert!(v >= prev - 1e-9);
            prev = v;
        }
        assert!(max_abs(&(fp.minimizer.clone() - fp.minimizer.adjoint())) < 1e-12);
    }
}
