//! Finite-n error and resolvability bounds evaluated on α grids.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::infoquant::{augustin_info, sibson_alpha_mutual};
use crate::qstate::CqChannel;
use crate::typelab::TypeComposition;

/// Grid size used for both bound families unless overridden.
pub const DEFAULT_GRID_POINTS: usize = 41;

/// `points` uniform values on `[lo, hi]`, endpoints included.
pub fn alpha_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![hi];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Coding,
    Resolve,
}

impl BoundKind {
    pub fn grid(self, points: usize) -> Vec<f64> {
        match self {
            BoundKind::Coding => alpha_grid(0.0, 1.0, points),
            BoundKind::Resolve => alpha_grid(1.0, 2.0, points),
        }
    }
}

/// `exp[−n(α(I_{1−α} − R) − ((α(d+2)(d−1)+2)/2)|X| ln(n+1)/n)]`.
pub fn coding_bound(alpha: f64, sibson: f64, rate: f64, n: usize, d: usize, k: usize) -> f64 {
    let nf = n as f64;
    let poly = (alpha * ((d + 2) * (d - 1)) as f64 + 2.0) / 2.0 * k as f64 * (nf + 1.0).ln() / nf;
    (-nf * (alpha * (sibson - rate) - poly)).exp()
}

/// `2^{2/α−1} exp[−((α−1)/α) n (R − Ĭ_α)]`.
pub fn resolvability_bound(alpha: f64, augustin: f64, rate: f64, n: usize) -> f64 {
    (2.0f64).powf(2.0 / alpha - 1.0) * (-((alpha - 1.0) / alpha) * n as f64 * (rate - augustin)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub alpha: f64,
    /// `I_{1−α}` (coding) or `Ĭ_α` (resolvability).
    pub information: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub kind: BoundKind,
    pub n: usize,
    pub rate: f64,
    pub rows: Vec<BoundRow>,
    pub alpha_star: f64,
    pub bound: f64,
    /// The minimized bound is at least 1.
    pub vacuous: bool,
}

/// Assembles a table from precomputed information values; the first
/// minimizing row wins ties.
pub fn bound_table(kind: BoundKind, information: &[(f64, f64)], rate: f64, n: usize, d: usize, k: usize) -> BoundTable {
    let rows: Vec<BoundRow> = information
        .iter()
        .map(|&(alpha, info)| BoundRow {
            alpha,
            information: info,
            bound: match kind {
                BoundKind::Coding => coding_bound(alpha, info, rate, n, d, k),
                BoundKind::Resolve => resolvability_bound(alpha, info, rate, n),
            },
        })
        .collect();
    let best = rows.iter().fold(None::<&BoundRow>, |acc, r| match acc {
        Some(a) if a.bound <= r.bound => Some(a),
        _ => Some(r),
    });
    let (alpha_star, bound) = best.map_or((f64::NAN, f64::INFINITY), |r| (r.alpha, r.bound));
    BoundTable { kind, n, rate, rows, alpha_star, bound, vacuous: bound >= 1.0 }
}

/// The information values on the grid of `kind`: Sibson `I_{1−α}` for
/// coding, Augustin `Ĭ_α` for resolvability.
pub fn information_grid(kind: BoundKind, w: &CqChannel, p: &TypeComposition, points: usize) -> Result<Vec<(f64, f64)>> {
    if p.alphabet_size() != w.alphabet_size() {
        return invalid(format!("type over {} letters for a channel with {}", p.alphabet_size(), w.alphabet_size()));
    }
    let dist = p.distribution();
    kind.grid(points)
        .into_iter()
        .map(|alpha| {
            let info = match kind {
                BoundKind::Coding => sibson_alpha_mutual(w, &dist, (1.0 - alpha).clamp(0.0, 1.0))?,
                BoundKind::Resolve => augustin_info(w, &dist, alpha)?.value,
            };
            Ok((alpha, info))
        })
        .collect()
}

pub fn evaluate_bounds(kind: BoundKind, w: &CqChannel, p: &TypeComposition, rate: f64, points: usize) -> Result<BoundTable> {
    let info = information_grid(kind, w, p, points)?;
    Ok(bound_table(kind, &info, rate, p.n(), w.d_out(), p.alphabet_size()))
}

/// The threshold constant `exp[(n/(1+α))(α I_{1−α} + R_B)]` at the grid
/// point maximizing the balanced exponent `α(I_{1−α} − R_B)/(1+α)`.
pub fn auto_threshold(w_b: &CqChannel, p: &TypeComposition, rate_b: f64, points: usize) -> Result<(f64, f64)> {
    let info = information_grid(BoundKind::Coding, w_b, p, points)?;
    let n = p.n() as f64;
    let mut best: Option<(f64, f64, f64)> = None;
    for (alpha, i) in info {
        let exponent = alpha * (i - rate_b) / (1.0 + alpha);
        if best.is_none_or(|(_, _, e)| exponent > e) {
            best = Some((alpha, i, exponent));
        }
    }
    let (alpha, i, _) = best.expect("grid is non-empty");
    Ok(((n / (1.0 + alpha) * (alpha * i + rate_b)).exp(), alpha))
}
