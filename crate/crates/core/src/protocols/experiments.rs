//! The three end-to-end experiments and their reports.

use serde::Serialize;
use serde_json::{json, Value};

use super::bounds::{auto_threshold, evaluate_bounds, BoundKind, BoundTable};
use super::decoders::{build_division_decoder, build_threshold_decoder};
use crate::codebooks::{verify_good_codebook, verify_radical_expander, verify_setwise_good, AnyCodebook, Codebook, ExpanderCodebook, SetwiseCodebook};
use crate::error::{Error, Result};
use crate::linalg::{c, identity, trace_re, zeros, CMat};
use crate::qstate::{channel_output_product, schatten_norm, target_state, trace_distance, CqChannel, Party, ThetaMap};
use crate::schurweyl::DEFAULT_CAP_DIM;
use crate::typelab::{canonical_sequence, Sequence, TypeComposition, DEFAULT_ENUMERATION_CAP};

/// Agreement required between the direct and the `Θ` route to the
/// resolvability distance.
pub const THETA_AGREEMENT: f64 = 1e-9;

/// Margin below zero tolerated in the operator split check.
pub const SPLIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub grid_points: usize,
    pub tol: f64,
    pub cap_dim: usize,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { grid_points: super::bounds::DEFAULT_GRID_POINTS, tol: 1e-9, cap_dim: DEFAULT_CAP_DIM, seed: 0 }
    }
}

/// A measured quantity against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub params: Value,
    pub measured: f64,
    pub bound: f64,
    pub alpha_star: f64,
    pub pass: bool,
    pub seed: u64,
    pub timings: Option<Value>,
    pub details: Value,
}

impl ExperimentReport {
    pub const CSV_HEADER: &'static str = "kind,measured,bound,alpha_star,pass,seed";

    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{},{},{}", self.kind, self.measured, self.bound, self.alpha_star, self.pass, self.seed)
    }
}

fn check_alphabet(w: &CqChannel, p: &TypeComposition) -> Result<()> {
    if p.alphabet_size() != w.alphabet_size() {
        return Err(Error::DimMismatch(format!(
            "codebook alphabet {} vs channel alphabet {}",
            p.alphabet_size(),
            w.alphabet_size()
        )));
    }
    Ok(())
}

fn average_output(w: &CqChannel, words: &[Sequence], cap_dim: usize) -> Result<CMat> {
    let dim = w.d_out().pow(words[0].len() as u32);
    let mut acc = zeros(dim);
    for x in words {
        acc += channel_output_product(w, x, cap_dim)?;
    }
    Ok(acc * c(1.0 / words.len() as f64))
}

fn table_json(t: &BoundTable) -> Value {
    json!({
        "vacuous": t.vacuous,
        "rows": t.rows.iter().map(|r| [r.alpha, r.information, r.bound]).collect::<Vec<_>>(),
    })
}

/// Average decoding error of the division decoder against the coding bound.
pub fn run_channel_coding(w: &CqChannel, book: &Codebook, opts: &RunOptions) -> Result<ExperimentReport> {
    check_alphabet(w, &book.p)?;
    let cert = verify_good_codebook(book)?;
    if !cert.checked {
        return Err(Error::MissingCertificate(format!("codebook is not good: {} violations", cert.violations)));
    }
    let povm = build_division_decoder(book, w.d_out(), opts.cap_dim)?;
    let errors: Vec<f64> = book
        .words
        .iter()
        .zip(&povm.elements)
        .map(|(x, y)| Ok(1.0 - trace_re(&(channel_output_product(w, x, opts.cap_dim)? * y))))
        .collect::<Result<_>>()?;
    let measured = errors.iter().sum::<f64>() / errors.len() as f64;
    let table = evaluate_bounds(BoundKind::Coding, w, &book.p, book.rate, opts.grid_points)?;
    Ok(ExperimentReport {
        kind: "coding".into(),
        params: json!({
            "n": book.n(),
            "P": book.p.counts(),
            "R": book.rate,
            "size": book.len(),
            "grid_points": opts.grid_points,
            "tol": opts.tol,
        }),
        measured,
        bound: table.bound,
        alpha_star: table.alpha_star,
        pass: measured <= table.bound + opts.tol,
        seed: opts.seed,
        timings: None,
        details: json!({
            "delta_effective": cert.delta_effective,
            "per_codeword_error": errors,
            "completeness_defect": povm.completeness_defect(),
            "bound_table": table_json(&table),
        }),
    })
}

/// Trace distance between the codebook mixture and the type-class average,
/// computed directly and through `Θ`.
pub fn resolvability_distances(w: &CqChannel, e: &ExpanderCodebook, cap_dim: usize) -> Result<(f64, f64)> {
    let p = &e.book.p;
    let mixture = average_output(w, &e.book.words, cap_dim)?;
    let target = target_state(w, p, DEFAULT_ENUMERATION_CAP, cap_dim)?;
    let direct = trace_distance(&mixture, &target);
    let theta = ThetaMap::new(p, &e.generators, w.d_out(), cap_dim)?;
    let via_theta = schatten_norm(&theta.apply(&channel_output_product(w, &canonical_sequence(p), cap_dim)?), 1.0);
    Ok((direct, via_theta))
}

pub fn run_resolvability(w: &CqChannel, e: &ExpanderCodebook, opts: &RunOptions) -> Result<ExperimentReport> {
    check_alphabet(w, &e.book.p)?;
    let v = verify_radical_expander(e)?;
    if !v.ok {
        return Err(Error::MissingCertificate(format!("expander certificate fails: {v:?}")));
    }
    let (measured, via_theta) = resolvability_distances(w, e, opts.cap_dim)?;
    let table = evaluate_bounds(BoundKind::Resolve, w, &e.book.p, e.book.rate, opts.grid_points)?;
    Ok(ExperimentReport {
        kind: "resolve".into(),
        params: json!({
            "n": e.book.n(),
            "P": e.book.p.counts(),
            "R": e.book.rate,
            "size": e.book.len(),
            "codebook_seed": e.seed,
            "grid_points": opts.grid_points,
            "tol": opts.tol,
        }),
        measured,
        bound: table.bound,
        alpha_star: table.alpha_star,
        pass: measured <= table.bound + opts.tol,
        seed: opts.seed,
        timings: None,
        details: json!({
            "lambda": e.lambda,
            "gap_target": e.gap_target(),
            "theta_distance": via_theta,
            "paths_agree": (measured - via_theta).abs() <= THETA_AGREEMENT,
            "bound_table": table_json(&table),
        }),
    })
}

/// How the threshold constant `C_n` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Value(f64),
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivateReport {
    pub correctness: ExperimentReport,
    pub secrecy: ExperimentReport,
}

impl PrivateReport {
    pub fn pass(&self) -> bool {
        self.correctness.pass && self.secrecy.pass
    }
}

/// `Tr_E`/`Tr_B` marginals of a joint channel.
fn marginals(w: &CqChannel) -> Result<(CqChannel, CqChannel)> {
    if w.bipartite_dims().is_none() {
        return Err(Error::InvalidChannel("private coding needs a channel with d_B and d_E".into()));
    }
    Ok((w.marginal(Party::B)?, w.marginal(Party::E)?))
}

/// Per-message secrecy distances `‖(1/K)Σ_{x∈K^j} W_E^{⊗n}(x) − W̄_E^n(P)‖₁`.
pub fn secrecy_distances(w_e: &CqChannel, code: &SetwiseCodebook, cap_dim: usize) -> Result<Vec<f64>> {
    let target = target_state(w_e, &code.p, DEFAULT_ENUMERATION_CAP, cap_dim)?;
    code.subbooks
        .iter()
        .map(|b| Ok(trace_distance(&average_output(w_e, &b.book.words, cap_dim)?, &target)))
        .collect()
}

/// Correctness over `W_B` with the threshold decoder and per-message
/// secrecy over `W_E`.
pub fn run_private(w_be: &CqChannel, code: &SetwiseCodebook, threshold: Threshold, opts: &RunOptions) -> Result<PrivateReport> {
    check_alphabet(w_be, &code.p)?;
    let (w_b, w_e) = marginals(w_be)?;
    let alpha = code.alpha_realized();
    let setwise = verify_setwise_good(code, alpha, code.beta)?;
    if !setwise.ok {
        return Err(Error::MissingCertificate(format!("setwise certificate fails: {setwise:?}")));
    }
    for (j, b) in code.subbooks.iter().enumerate() {
        if !verify_radical_expander(b)?.ok {
            return Err(Error::MissingCertificate(format!("subbook {} is not a radical expander", j + 1)));
        }
    }
    let (c_n, c_alpha) = match threshold {
        Threshold::Value(v) => (v, f64::NAN),
        Threshold::Auto => auto_threshold(&w_b, &code.p, code.rate_b, opts.grid_points)?,
    };
    let sets = code.word_sets();
    let dec = build_threshold_decoder(&sets, &code.excluded, c_n, w_b.d_out(), opts.cap_dim)?;
    let (j_count, k) = (code.j() as f64, code.k() as f64);
    let eye = identity(dec.povm.dim());
    let mut p_err = 0.0;
    let mut type_one = 0.0;
    let mut type_two = 0.0;
    let mut per_message_error = Vec::new();
    for (j, book) in sets.iter().enumerate() {
        let miss = &eye - &dec.povm.elements[j];
        let cross = dec.cross_sum(j);
        let mut err_j = 0.0;
        for (pos, x) in book.iter().enumerate() {
            let out = channel_output_product(&w_b, x, opts.cap_dim)?;
            err_j += trace_re(&(&out * &miss));
            if !code.excluded[j].contains(&pos) {
                let slot = dec.words[j].binary_search(x).expect("decodable word is indexed");
                type_one += trace_re(&(&out * (&eye - &dec.projectors[j][slot])));
                type_two += trace_re(&(&out * &cross));
            }
        }
        per_message_error.push(err_j / k);
        p_err += err_j / k / j_count;
    }
    let bad: f64 = code.excluded.iter().map(|l| l.len() as f64 / k).sum::<f64>() / j_count;
    let total = j_count * k;
    let split_bound = bad + 2.0 * type_one / total + 4.0 * type_two / total;
    let margin = dec.split_margin();
    let split_holds = margin >= -SPLIT_TOL;
    let common = json!({
        "n": code.p.n(),
        "P": code.p.counts(),
        "R_B": code.rate_b,
        "R_E": code.rate_e,
        "J": code.j(),
        "K": code.k(),
        "codebook_seed": code.seed,
        "grid_points": opts.grid_points,
        "tol": opts.tol,
    });
    let correctness = ExperimentReport {
        kind: "private-correctness".into(),
        params: common.clone(),
        measured: p_err,
        bound: split_bound,
        alpha_star: c_alpha,
        pass: split_holds && p_err <= split_bound + opts.tol,
        seed: opts.seed,
        timings: None,
        details: json!({
            "C_n": c_n,
            "structural": true,
            "bad_codeword_term": bad,
            "type_one_term": 2.0 * type_one / total,
            "type_two_term": 4.0 * type_two / total,
            "split_inequality_holds": split_holds,
            "split_margin": margin,
            "per_message_error": per_message_error,
            "alpha": alpha,
            "beta": code.beta,
        }),
    };
    let distances = secrecy_distances(&w_e, code, opts.cap_dim)?;
    let table = evaluate_bounds(BoundKind::Resolve, &w_e, &code.p, code.rate_e, opts.grid_points)?;
    let measured = distances.iter().copied().fold(0.0, f64::max);
    let secrecy = ExperimentReport {
        kind: "private-secrecy".into(),
        params: common,
        measured,
        bound: table.bound,
        alpha_star: table.alpha_star,
        pass: distances.iter().all(|d| *d <= table.bound + opts.tol),
        seed: opts.seed,
        timings: None,
        details: json!({
            "per_message": distances
                .iter()
                .enumerate()
                .map(|(j, d)| json!({"message": j + 1, "distance": d, "lambda": code.subbooks[j].lambda}))
                .collect::<Vec<_>>(),
            "bound_table": table_json(&table),
        }),
    };
    Ok(PrivateReport { correctness, secrecy })
}

/// Everything an experiment may need; each experiment checks that the
/// codebook has the kind it requires.
#[derive(Debug, Clone)]
pub struct ExperimentInputs {
    pub channel: CqChannel,
    pub codebook: AnyCodebook,
    pub threshold: Threshold,
    pub options: RunOptions,
}

/// An experiment selectable by name.
pub trait Experiment {
    fn name(&self) -> &'static str;
    fn run(&self, inputs: &ExperimentInputs) -> Result<Vec<ExperimentReport>>;
}

pub struct ChannelCoding;
pub struct Resolvability;
pub struct PrivateCoding;

fn wrong_kind(experiment: &str, needed: &str, got: &AnyCodebook) -> Error {
    Error::MissingCertificate(format!("{experiment} needs a {needed} codebook, got {}", got.kind()))
}

impl Experiment for ChannelCoding {
    fn name(&self) -> &'static str {
        "coding"
    }
    fn run(&self, inputs: &ExperimentInputs) -> Result<Vec<ExperimentReport>> {
        match &inputs.codebook {
            AnyCodebook::Good(b) => Ok(vec![run_channel_coding(&inputs.channel, b, &inputs.options)?]),
            other => Err(wrong_kind(self.name(), "good", other)),
        }
    }
}

impl Experiment for Resolvability {
    fn name(&self) -> &'static str {
        "resolve"
    }
    fn run(&self, inputs: &ExperimentInputs) -> Result<Vec<ExperimentReport>> {
        match &inputs.codebook {
            AnyCodebook::Expander(e) => Ok(vec![run_resolvability(&inputs.channel, e, &inputs.options)?]),
            other => Err(wrong_kind(self.name(), "expander", other)),
        }
    }
}

impl Experiment for PrivateCoding {
    fn name(&self) -> &'static str {
        "private"
    }
    fn run(&self, inputs: &ExperimentInputs) -> Result<Vec<ExperimentReport>> {
        match &inputs.codebook {
            AnyCodebook::Setwise(s) => {
                let r = run_private(&inputs.channel, s, inputs.threshold, &inputs.options)?;
                Ok(vec![r.correctness, r.secrecy])
            }
            other => Err(wrong_kind(self.name(), "setwise", other)),
        }
    }
}

pub fn experiments() -> Vec<Box<dyn Experiment>> {
    vec![Box::new(ChannelCoding), Box::new(Resolvability), Box::new(PrivateCoding)]
}

pub fn experiment(name: &str) -> Result<Box<dyn Experiment>> {
    let all = experiments();
    let available = all.iter().map(|e| e.name()).collect::<Vec<_>>().join(", ");
    all.into_iter()
        .find(|e| e.name() == name)
        .ok_or(Error::UnknownStrategy { name: name.to_string(), available })
}
