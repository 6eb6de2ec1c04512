//! Constant-composition codebooks and their certificates: good codebooks,
//! radical spectral expanders and setwise-good codebooks.
//!
//! Codebooks are multisets; duplicated words are kept and counted.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::permaction::{apply, derive_seed, enumerate_isotropy, PermMultiset, Permutation};
use crate::schreier::{build_schreier, build_until_gap, expander_sample_size, spectral_report};
use crate::schurweyl::MAX_GROUP_ORDER;
use crate::typelab::{
    canonical_sequence, conditional_type_class, conditional_type_class_size, conditional_type_of, type_of,
    ConditionalType, Sequence, TypeComposition, DEFAULT_ENUMERATION_CAP,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub p: TypeComposition,
    pub rate: f64,
    pub words: Vec<Sequence>,
}

impl Codebook {
    pub fn new(p: TypeComposition, rate: f64, words: Vec<Sequence>) -> Result<Self> {
        if let Some(bad) = words.iter().find(|w| type_of(w) != p) {
            return invalid(format!("word {bad} does not have type {p}"));
        }
        Ok(Codebook { p, rate, words })
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `nR − ln |M|`.
    pub fn delta_effective(&self) -> f64 {
        self.n() as f64 * self.rate - (self.words.len() as f64).ln()
    }
}

fn check_rate(p: &TypeComposition, rate: f64) -> Result<()> {
    let h = p.entropy();
    if !(rate > 0.0 && rate < h) {
        return invalid(format!("rate {rate} must lie in (0, H(P) = {h})"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Index of the conditioning word in the codebook (or 0 for a lone set).
    pub word: usize,
    pub conditional_type: ConditionalType,
    pub count: usize,
    pub allowed: f64,
}

impl Violation {
    pub fn ratio(&self) -> f64 {
        self.count as f64 / self.allowed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodCertificate {
    pub checked: bool,
    pub delta_effective: f64,
    pub violations: usize,
    /// The pair with the largest count-to-allowance ratio.
    pub worst: Option<Violation>,
}

/// Counts, per conditional type `V`, the members `y` of `l` with
/// `V_{y|x} = V` (with multiplicity).
fn class_counts<'a>(x: &Sequence, l: impl IntoIterator<Item = &'a Sequence>) -> Result<HashMap<ConditionalType, usize>> {
    let mut counts: HashMap<ConditionalType, usize> = HashMap::new();
    for y in l {
        *counts.entry(conditional_type_of(x, y)?).or_default() += 1;
    }
    Ok(counts)
}

/// Checks `|T_V(x) ∩ L| ≤ β |T_V(x)| e^{−n(H−R)}` for every `V` realized in
/// `L`, returning the failures sorted by conditional type.
fn per_type_failures<'a>(
    x: &Sequence,
    l: impl IntoIterator<Item = &'a Sequence>,
    p: &TypeComposition,
    rate: f64,
    beta: f64,
    word: usize,
) -> Result<(Vec<Violation>, Option<Violation>)> {
    let slack = (-(p.n() as f64) * (p.entropy() - rate)).exp();
    let mut failures = Vec::new();
    let mut worst: Option<Violation> = None;
    let mut counts: Vec<(ConditionalType, usize)> = class_counts(x, l)?.into_iter().collect();
    counts.sort();
    for (v, count) in counts {
        let allowed = beta * conditional_type_class_size(x, &v)? as f64 * slack;
        let viol = Violation { word, conditional_type: v, count, allowed };
        if worst.as_ref().is_none_or(|w| viol.ratio() > w.ratio()) {
            worst = Some(viol.clone());
        }
        if count as f64 > allowed * (1.0 + 1e-12) {
            failures.push(viol);
        }
    }
    Ok((failures, worst))
}

/// Certificate that `l` is a good set for `x` at rate `rate`.
pub fn verify_good_set(l: &[Sequence], x: &Sequence, p: &TypeComposition, rate: f64) -> Result<GoodCertificate> {
    let off_type = l.iter().filter(|y| type_of(y) != *p).count();
    let (failures, worst) = per_type_failures(x, l.iter().filter(|y| type_of(y) == *p), p, rate, 1.0, 0)?;
    Ok(GoodCertificate {
        checked: off_type == 0 && failures.is_empty(),
        delta_effective: p.n() as f64 * rate - (l.len() as f64).ln(),
        violations: failures.len() + off_type,
        worst,
    })
}

/// Certificate that `M ∖ {x}` is a good set for every `x ∈ M`; one instance
/// of `x` is removed, so a duplicated word fails on the identity type.
pub fn verify_good_codebook(m: &Codebook) -> Result<GoodCertificate> {
    let mut violations = 0;
    let mut worst: Option<Violation> = None;
    for (i, x) in m.words.iter().enumerate() {
        let others = m.words.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| y);
        let (failures, w) = per_type_failures(x, others, &m.p, m.rate, 1.0, i)?;
        violations += failures.len();
        if let Some(w) = w {
            if worst.as_ref().is_none_or(|cur| w.ratio() > cur.ratio()) {
                worst = Some(w);
            }
        }
    }
    Ok(GoodCertificate { checked: violations == 0, delta_effective: m.delta_effective(), violations, worst })
}

/// A uniformly random word of type `p`.
fn random_word(p: &TypeComposition, rng: &mut ChaCha8Rng) -> Sequence {
    let mut letters: Vec<usize> = canonical_sequence(p).letters().collect();
    letters.shuffle(rng);
    Sequence::from_zero_based(letters, p.alphabet_size())
}

/// Consecutive rejections after which the greedy search restarts.
pub const SEARCH_RESTART_AFTER: usize = 64;

/// Greedy draw-and-check search: draw uniform words of type `p`, keep a word
/// when the enlarged codebook stays good, restart after a run of
/// rejections. `budget` bounds the total number of draws.
pub fn search_good_codebook(p: &TypeComposition, rate: f64, target_size: usize, budget: usize, seed: u64) -> Result<Codebook> {
    check_rate(p, rate)?;
    if target_size == 0 {
        return invalid("target size must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut book = Codebook { p: p.clone(), rate, words: Vec::new() };
    let mut rejected = 0;
    for _ in 0..budget {
        let candidate = random_word(p, &mut rng);
        book.words.push(candidate);
        if verify_good_codebook(&book)?.checked {
            rejected = 0;
            if book.words.len() == target_size {
                return Ok(book);
            }
        } else {
            book.words.pop();
            rejected += 1;
            if rejected >= SEARCH_RESTART_AFTER {
                book.words.clear();
                rejected = 0;
            }
        }
    }
    Err(Error::Infeasible(format!(
        "no good codebook of size {target_size} for P = {p}, R = {rate} within {budget} draws"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpanderCodebook {
    pub book: Codebook,
    pub generators: PermMultiset,
    pub lambda: f64,
    pub seed: u64,
    pub attempts: usize,
}

impl ExpanderCodebook {
    /// `ln |M| − nR`.
    pub fn delta_realized(&self) -> f64 {
        (self.book.len() as f64).ln() - self.book.n() as f64 * self.book.rate
    }

    /// The radical gap target `e^{−nR/2}`.
    pub fn gap_target(&self) -> f64 {
        (-(self.book.n() as f64) * self.book.rate / 2.0).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpanderOptions {
    /// Generators sampled before symmetrization; the ceiling formula with
    /// `ε = e^{−nR/2}` and the configured `δ` when absent.
    pub half_size: Option<usize>,
    pub delta: f64,
    pub max_retries: usize,
    pub cap: u128,
}

impl Default for ExpanderOptions {
    fn default() -> Self {
        ExpanderOptions { half_size: None, delta: 0.5, max_retries: 200, cap: DEFAULT_ENUMERATION_CAP }
    }
}

/// Samples symmetric generator multisets until the Schreier graph on `T_P`
/// has `λ ≤ e^{−nR/2}`, then takes the words `s(x_P)`.
pub fn build_expander_codebook(p: &TypeComposition, rate: f64, seed: u64, opts: &ExpanderOptions) -> Result<ExpanderCodebook> {
    check_rate(p, rate)?;
    let target = (-(p.n() as f64) * rate / 2.0).exp();
    let half = opts.half_size.unwrap_or_else(|| expander_sample_size(target, opts.delta, p.class_size()));
    let found = build_until_gap(p, target, seed, opts.max_retries, Some(half), opts.cap)?;
    let x_p = canonical_sequence(p);
    let words = found.generators.elements().iter().map(|s| apply(s, &x_p)).collect::<Result<Vec<_>>>()?;
    Ok(ExpanderCodebook {
        book: Codebook { p: p.clone(), rate, words },
        generators: found.generators,
        lambda: found.report.lambda,
        seed,
        attempts: found.attempts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpanderVerification {
    pub ok: bool,
    pub words_match: bool,
    pub sizes_match: bool,
    pub symmetric: bool,
    pub lambda_recomputed: f64,
    pub lambda_consistent: bool,
    pub radical: bool,
}

/// Re-derives the words from the generators and re-checks symmetry and the
/// gap with a fresh eigensolve.
pub fn verify_radical_expander(e: &ExpanderCodebook) -> Result<ExpanderVerification> {
    let x_p = canonical_sequence(&e.book.p);
    let derived: Vec<Sequence> = e.generators.elements().iter().map(|s| apply(s, &x_p)).collect::<Result<_>>()?;
    let words_match = derived == e.book.words;
    let sizes_match = e.book.len() == e.generators.len();
    let rechecked = PermMultiset::new(e.generators.elements().to_vec())?;
    let symmetric = rechecked.is_symmetric();
    let lambda_recomputed = if symmetric {
        spectral_report(&build_schreier(&e.book.p, &rechecked, DEFAULT_ENUMERATION_CAP)?).lambda
    } else {
        f64::NAN
    };
    let lambda_consistent = (lambda_recomputed - e.lambda).abs() <= 1e-10;
    let radical = lambda_recomputed <= e.gap_target();
    Ok(ExpanderVerification {
        ok: words_match && sizes_match && symmetric && lambda_consistent && radical,
        words_match,
        sizes_match,
        symmetric,
        lambda_recomputed,
        lambda_consistent,
        radical,
    })
}

/// Isotropy-averaged codeword density `(1/|S_x|) Σ_s p_L(s(y))` per
/// conditional-type class, by the closed form
/// `|T_V(x) ∩ L| / (|T_V(x)| |L|)`.
pub fn collision_average(l: &[Sequence], x: &Sequence) -> Result<BTreeMap<ConditionalType, f64>> {
    let total = l.len() as f64;
    let counts = class_counts(x, l)?;
    let mut out = BTreeMap::new();
    for v in crate::typelab::enumerate_conditional_types(x, Some(&type_of(x))) {
        let hits = counts.get(&v).copied().unwrap_or(0) as f64;
        out.insert(v.clone(), hits / (conditional_type_class_size(x, &v)? as f64 * total));
    }
    Ok(out)
}

/// The same densities by explicit summation over the isotropy group of `x`,
/// starting from one representative of each class.
pub fn collision_average_explicit(l: &[Sequence], x: &Sequence) -> Result<BTreeMap<ConditionalType, f64>> {
    let group = enumerate_isotropy(x, MAX_GROUP_ORDER)?;
    let mut mult: HashMap<&Sequence, usize> = HashMap::new();
    for y in l {
        *mult.entry(y).or_default() += 1;
    }
    let total = l.len() as f64;
    let mut out = BTreeMap::new();
    for v in crate::typelab::enumerate_conditional_types(x, Some(&type_of(x))) {
        let y = conditional_type_class(x, &v, 1)
            .or_else(|_| conditional_type_class(x, &v, DEFAULT_ENUMERATION_CAP))?
            .swap_remove(0);
        let sum: f64 = group
            .iter()
            .map(|s| apply(s, &y).map(|z| mult.get(&z).copied().unwrap_or(0) as f64 / total))
            .sum::<Result<f64>>()?;
        out.insert(v, sum / group.len() as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetwiseReport {
    pub ok: bool,
    pub all_in_type: bool,
    pub equal_sizes: bool,
    pub exclusions_within_alpha: bool,
    pub condition_three: bool,
    /// Words outside `L^j` failing the relaxed inequality, per subbook.
    pub failures: Vec<usize>,
    /// `max_j |L^j| / K`.
    pub alpha_realized: f64,
    /// `nR − ln |M ∖ K^j|`.
    pub delta_realized: f64,
    /// Largest spot-checked isotropy-averaged density divided by its bound
    /// `β e^{−nH+δ}`.
    pub collision_ratio: f64,
}

/// Checks the three setwise conditions for explicit subbooks and exclusion
/// sets (positions into each subbook).
pub fn verify_setwise_sets(
    p: &TypeComposition,
    rate: f64,
    subbooks: &[Vec<Sequence>],
    excluded: &[Vec<usize>],
    alpha: f64,
    beta: f64,
) -> Result<SetwiseReport> {
    if subbooks.len() != excluded.len() {
        return Err(Error::DimMismatch("one exclusion list per subbook is required".into()));
    }
    let n = p.n() as f64;
    let k = subbooks.first().map_or(0, Vec::len);
    let all_in_type = subbooks.iter().flatten().all(|w| type_of(w) == *p);
    let equal_sizes = subbooks.iter().all(|b| b.len() == k);
    let outside = k * subbooks.len().saturating_sub(1);
    let delta_realized = n * rate - (outside as f64).ln();
    let exclusions_within_alpha = excluded
        .iter()
        .zip(subbooks)
        .all(|(l, b)| l.iter().all(|&i| i < b.len()) && l.len() as f64 <= alpha * k as f64 + 1e-12);
    let mut failures = vec![0; subbooks.len()];
    let mut collision_ratio: f64 = 0.0;
    let bound = beta * (-n * p.entropy() + delta_realized).exp();
    for (j, book) in subbooks.iter().enumerate() {
        let rest: Vec<Sequence> = subbooks
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .flat_map(|(_, b)| b.iter().cloned())
            .collect();
        for (pos, x) in book.iter().enumerate() {
            if excluded[j].contains(&pos) {
                continue;
            }
            let (fails, _) = per_type_failures(x, &rest, p, rate, beta, pos)?;
            failures[j] += usize::from(!fails.is_empty());
            if pos == 0 && !rest.is_empty() {
                for (v, dens) in collision_average(&rest, x)? {
                    if !v.is_identity() {
                        collision_ratio = collision_ratio.max(dens / bound);
                    }
                }
            }
        }
    }
    let condition_three = failures.iter().all(|&f| f == 0);
    let alpha_realized = excluded.iter().map(|l| l.len() as f64 / k.max(1) as f64).fold(0.0, f64::max);
    Ok(SetwiseReport {
        ok: all_in_type && equal_sizes && exclusions_within_alpha && condition_three,
        all_in_type,
        equal_sizes,
        exclusions_within_alpha,
        condition_three,
        failures,
        alpha_realized,
        delta_realized,
        collision_ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetwiseCodebook {
    pub p: TypeComposition,
    pub rate_b: f64,
    pub rate_e: f64,
    pub subbooks: Vec<ExpanderCodebook>,
    /// Positions of `L^j` within each subbook.
    pub excluded: Vec<Vec<usize>>,
    pub beta: f64,
    /// Condition-G violation counts of all `2J` candidates, by index.
    pub candidate_violations: Vec<usize>,
    /// Indices of the kept candidates.
    pub kept: Vec<usize>,
    pub seed: u64,
}

impl SetwiseCodebook {
    pub fn j(&self) -> usize {
        self.subbooks.len()
    }

    pub fn k(&self) -> usize {
        self.subbooks.first().map_or(0, |b| b.book.len())
    }

    pub fn word_sets(&self) -> Vec<Vec<Sequence>> {
        self.subbooks.iter().map(|b| b.book.words.clone()).collect()
    }

    pub fn alpha_realized(&self) -> f64 {
        self.excluded.iter().map(|l| l.len() as f64 / self.k().max(1) as f64).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetwiseOptions {
    pub j: usize,
    /// `β = 1/ε_n`.
    pub eps_n: f64,
    /// Failure budget for the expander step; the per-candidate `δ` is
    /// `ζ₁ |X|^{−n}`.
    pub zeta1: f64,
    pub half_size: Option<usize>,
    pub max_retries: usize,
    pub cap: u128,
}

impl Default for SetwiseOptions {
    fn default() -> Self {
        SetwiseOptions { j: 2, eps_n: 1.0 / 16.0, zeta1: 0.25, half_size: None, max_retries: 200, cap: DEFAULT_ENUMERATION_CAP }
    }
}

/// Random construction: `2J` candidate expander subbooks at rate `R_E`,
/// each scored by its Condition-G violations against the other candidates;
/// the `J` best (fewest violations, then lowest index) are kept and `L^j`
/// collects the words of `K^j` that violate the relaxed inequality against
/// the final codebook.
pub fn build_setwise_codebook(p: &TypeComposition, rate_b: f64, rate_e: f64, seed: u64, opts: &SetwiseOptions) -> Result<SetwiseCodebook> {
    check_rate(p, rate_b)?;
    check_rate(p, rate_e)?;
    if rate_e >= rate_b {
        return invalid(format!("R_E = {rate_e} must be below R_B = {rate_b}"));
    }
    if opts.j < 2 {
        return invalid("at least two messages are required");
    }
    if opts.eps_n.is_nan() || opts.eps_n <= 0.0 {
        return invalid("eps_n must be positive");
    }
    let n = p.n();
    let delta = opts.zeta1 * (p.alphabet_size() as f64).powi(-(n as i32));
    let target = (-(n as f64) * rate_e / 2.0).exp();
    let half = opts.half_size.unwrap_or_else(|| expander_sample_size(target, delta, p.class_size()));
    let expander_opts = ExpanderOptions { half_size: Some(half), delta, max_retries: opts.max_retries, cap: opts.cap };
    let candidates: Vec<ExpanderCodebook> = (0..2 * opts.j)
        .map(|l| build_expander_codebook(p, rate_e, derive_seed(seed, l as u64), &expander_opts))
        .collect::<Result<_>>()?;
    let beta = 1.0 / opts.eps_n;
    let sets: Vec<Vec<Sequence>> = candidates.iter().map(|c| c.book.words.clone()).collect();
    let candidate_violations: Vec<usize> = (0..sets.len())
        .map(|l| Ok(violators(&sets, l, p, rate_b, beta)?.len()))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by_key(|&l| (candidate_violations[l], l));
    let mut kept: Vec<usize> = order[..opts.j].to_vec();
    kept.sort_unstable();
    let subbooks: Vec<ExpanderCodebook> = kept.iter().map(|&l| candidates[l].clone()).collect();
    let final_sets: Vec<Vec<Sequence>> = subbooks.iter().map(|c| c.book.words.clone()).collect();
    let excluded = (0..final_sets.len())
        .map(|j| violators(&final_sets, j, p, rate_b, beta))
        .collect::<Result<_>>()?;
    Ok(SetwiseCodebook {
        p: p.clone(),
        rate_b,
        rate_e,
        subbooks,
        excluded,
        beta,
        candidate_violations,
        kept,
        seed,
    })
}

/// Positions in `sets[l]` failing the `β`-relaxed inequality against the
/// union of the other sets.
fn violators(sets: &[Vec<Sequence>], l: usize, p: &TypeComposition, rate: f64, beta: f64) -> Result<Vec<usize>> {
    let rest: Vec<&Sequence> = sets.iter().enumerate().filter(|(i, _)| *i != l).flat_map(|(_, s)| s.iter()).collect();
    let mut out = Vec::new();
    for (pos, x) in sets[l].iter().enumerate() {
        let (fails, _) = per_type_failures(x, rest.iter().copied(), p, rate, beta, pos)?;
        if !fails.is_empty() {
            out.push(pos);
        }
    }
    Ok(out)
}

/// Checks the setwise conditions for a constructed codebook.
pub fn verify_setwise_good(book: &SetwiseCodebook, alpha: f64, beta: f64) -> Result<SetwiseReport> {
    verify_setwise_sets(&book.p, book.rate_b, &book.word_sets(), &book.excluded, alpha, beta)
}

/// A codebook of any kind, as built or loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyCodebook {
    Good(Codebook),
    Expander(ExpanderCodebook),
    Setwise(SetwiseCodebook),
}

impl AnyCodebook {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyCodebook::Good(_) => "good",
            AnyCodebook::Expander(_) => "expander",
            AnyCodebook::Setwise(_) => "setwise",
        }
    }

    pub fn p(&self) -> &TypeComposition {
        match self {
            AnyCodebook::Good(c) => &c.p,
            AnyCodebook::Expander(e) => &e.book.p,
            AnyCodebook::Setwise(s) => &s.p,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SubbookFile {
    words: Vec<Vec<usize>>,
    generators: Vec<Permutation>,
    lambda: f64,
    seed: u64,
    attempts: usize,
    #[serde(default)]
    excluded: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CodebookFile {
    n: usize,
    k: usize,
    #[serde(rename = "P")]
    p: Vec<usize>,
    #[serde(rename = "R")]
    rate: f64,
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    words: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generators: Option<Vec<Permutation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attempts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    subbooks: Vec<SubbookFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    candidate_violations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    kept: Vec<usize>,
}

fn rows(words: &[Sequence]) -> Vec<Vec<usize>> {
    words.iter().map(|w| w.symbols().to_vec()).collect()
}

fn parse_words(rows: &[Vec<usize>], k: usize) -> Result<Vec<Sequence>> {
    rows.iter().map(|r| Sequence::new(r.clone(), k)).collect()
}

fn expander_from_parts(p: &TypeComposition, rate: f64, words: Vec<Sequence>, generators: Vec<Permutation>, lambda: f64, seed: u64, attempts: usize) -> Result<ExpanderCodebook> {
    Ok(ExpanderCodebook {
        book: Codebook::new(p.clone(), rate, words)?,
        generators: PermMultiset::new(generators)?,
        lambda,
        seed,
        attempts,
    })
}

impl AnyCodebook {
    pub fn to_json(&self) -> Result<String> {
        let p = self.p();
        let mut file = CodebookFile {
            n: p.n(),
            k: p.alphabet_size(),
            p: p.counts().to_vec(),
            rate: 0.0,
            kind: self.kind().to_string(),
            words: Vec::new(),
            generators: None,
            lambda: None,
            seed: None,
            attempts: None,
            rate_e: None,
            beta: None,
            subbooks: Vec::new(),
            candidate_violations: Vec::new(),
            kept: Vec::new(),
        };
        match self {
            AnyCodebook::Good(c) => {
                file.rate = c.rate;
                file.words = rows(&c.words);
            }
            AnyCodebook::Expander(e) => {
                file.rate = e.book.rate;
                file.words = rows(&e.book.words);
                file.generators = Some(e.generators.elements().to_vec());
                file.lambda = Some(e.lambda);
                file.seed = Some(e.seed);
                file.attempts = Some(e.attempts);
            }
            AnyCodebook::Setwise(s) => {
                file.rate = s.rate_b;
                file.rate_e = Some(s.rate_e);
                file.beta = Some(s.beta);
                file.seed = Some(s.seed);
                file.candidate_violations = s.candidate_violations.clone();
                file.kept = s.kept.clone();
                file.subbooks = s
                    .subbooks
                    .iter()
                    .zip(&s.excluded)
                    .map(|(b, l)| SubbookFile {
                        words: rows(&b.book.words),
                        generators: b.generators.elements().to_vec(),
                        lambda: b.lambda,
                        seed: b.seed,
                        attempts: b.attempts,
                        excluded: l.clone(),
                    })
                    .collect();
            }
        }
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: CodebookFile = serde_json::from_str(s)?;
        let p = TypeComposition::new(f.p.clone())?;
        if p.n() != f.n || p.alphabet_size() != f.k {
            return invalid(format!("header n = {}, k = {} disagrees with P = {p}", f.n, f.k));
        }
        match f.kind.as_str() {
            "good" => Ok(AnyCodebook::Good(Codebook::new(p, f.rate, parse_words(&f.words, f.k)?)?)),
            "expander" => {
                let generators = f.generators.ok_or_else(|| Error::MissingCertificate("expander file without generators".into()))?;
                let lambda = f.lambda.ok_or_else(|| Error::MissingCertificate("expander file without lambda".into()))?;
                Ok(AnyCodebook::Expander(expander_from_parts(
                    &p,
                    f.rate,
                    parse_words(&f.words, f.k)?,
                    generators,
                    lambda,
                    f.seed.unwrap_or(0),
                    f.attempts.unwrap_or(0),
                )?))
            }
            "setwise" => {
                let rate_e = f.rate_e.ok_or_else(|| Error::MissingCertificate("setwise file without rate_e".into()))?;
                let mut subbooks = Vec::new();
                let mut excluded = Vec::new();
                for sb in &f.subbooks {
                    subbooks.push(expander_from_parts(
                        &p,
                        rate_e,
                        parse_words(&sb.words, f.k)?,
                        sb.generators.clone(),
                        sb.lambda,
                        sb.seed,
                        sb.attempts,
                    )?);
                    excluded.push(sb.excluded.clone());
                }
                Ok(AnyCodebook::Setwise(SetwiseCodebook {
                    p,
                    rate_b: f.rate,
                    rate_e,
                    subbooks,
                    excluded,
                    beta: f.beta.unwrap_or(1.0),
                    candidate_violations: f.candidate_violations,
                    kept: f.kept,
                    seed: f.seed.unwrap_or(0),
                }))
            }
            other => invalid(format!("unknown codebook kind '{other}'")),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Parameters shared by the codebook constructors.
#[derive(Debug, Clone)]
pub struct BuildParams {
    pub p: TypeComposition,
    pub rate: f64,
    /// Eavesdropper rate, setwise only.
    pub rate_e: Option<f64>,
    /// Target size, good codebooks only.
    pub size: usize,
    pub budget: usize,
    pub seed: u64,
    pub half_size: Option<usize>,
    pub max_retries: usize,
    pub j: usize,
    pub eps_n: f64,
}

impl BuildParams {
    pub fn new(p: TypeComposition, rate: f64, seed: u64) -> Self {
        BuildParams { p, rate, rate_e: None, size: 2, budget: 10_000, seed, half_size: None, max_retries: 200, j: 2, eps_n: 1.0 / 16.0 }
    }
}

/// The result of a constructor together with whether its certificate holds.
#[derive(Debug, Clone)]
pub struct Built {
    pub codebook: AnyCodebook,
    pub certified: bool,
    pub summary: serde_json::Value,
}

/// A codebook construction selectable by name.
pub trait CodebookConstructor {
    fn name(&self) -> &'static str;
    fn build(&self, params: &BuildParams) -> Result<Built>;
}

pub struct GoodSearch;
pub struct ExpanderSampling;
pub struct SetwiseSampling;

impl CodebookConstructor for GoodSearch {
    fn name(&self) -> &'static str {
        "good"
    }
    fn build(&self, params: &BuildParams) -> Result<Built> {
        let book = search_good_codebook(&params.p, params.rate, params.size, params.budget, params.seed)?;
        let cert = verify_good_codebook(&book)?;
        Ok(Built {
            summary: serde_json::json!({
                "size": book.len(),
                "delta_effective": cert.delta_effective,
                "checked": cert.checked,
            }),
            certified: cert.checked,
            codebook: AnyCodebook::Good(book),
        })
    }
}

impl CodebookConstructor for ExpanderSampling {
    fn name(&self) -> &'static str {
        "expander"
    }
    fn build(&self, params: &BuildParams) -> Result<Built> {
        let opts = ExpanderOptions { half_size: params.half_size, max_retries: params.max_retries, ..Default::default() };
        let e = build_expander_codebook(&params.p, params.rate, params.seed, &opts)?;
        let v = verify_radical_expander(&e)?;
        Ok(Built {
            summary: serde_json::json!({
                "size": e.book.len(),
                "lambda": e.lambda,
                "gap_target": e.gap_target(),
                "delta_realized": e.delta_realized(),
                "attempts": e.attempts,
                "verified": v.ok,
            }),
            certified: v.ok,
            codebook: AnyCodebook::Expander(e),
        })
    }
}

impl CodebookConstructor for SetwiseSampling {
    fn name(&self) -> &'static str {
        "setwise"
    }
    fn build(&self, params: &BuildParams) -> Result<Built> {
        let rate_e = params.rate_e.ok_or_else(|| Error::InvalidArgument("setwise construction needs R_E".into()))?;
        let opts = SetwiseOptions {
            j: params.j,
            eps_n: params.eps_n,
            half_size: params.half_size,
            max_retries: params.max_retries,
            ..Default::default()
        };
        let s = build_setwise_codebook(&params.p, params.rate, rate_e, params.seed, &opts)?;
        let alpha = s.alpha_realized();
        let report = verify_setwise_good(&s, alpha, s.beta)?;
        let expanders = s.subbooks.iter().map(verify_radical_expander).collect::<Result<Vec<_>>>()?;
        let all_expanders = expanders.iter().all(|v| v.ok);
        Ok(Built {
            summary: serde_json::json!({
                "J": s.j(),
                "K": s.k(),
                "alpha": alpha,
                "beta": s.beta,
                "delta_realized": report.delta_realized,
                "lambdas": s.subbooks.iter().map(|b| b.lambda).collect::<Vec<_>>(),
                "candidate_violations": s.candidate_violations,
                "kept": s.kept,
                "setwise_ok": report.ok,
                "expanders_ok": all_expanders,
            }),
            certified: report.ok && all_expanders,
            codebook: AnyCodebook::Setwise(s),
        })
    }
}

pub fn constructors() -> Vec<Box<dyn CodebookConstructor>> {
    vec![Box::new(GoodSearch), Box::new(ExpanderSampling), Box::new(SetwiseSampling)]
}

pub fn constructor(name: &str) -> Result<Box<dyn CodebookConstructor>> {
    let all = constructors();
    let available = all.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ");
    all.into_iter()
        .find(|c| c.name() == name)
        .ok_or(Error::UnknownStrategy { name: name.to_string(), available })
}
