//! Types, type classes, conditional types and empirical entropies over the
//! alphabet `1..=k`.
//!
//! Sequences store their symbols 1-based, as they appear in codebook and
//! channel files. Conditional types are kept as integer joint-count matrices
//! so rows of unused input symbols never need a normalization convention.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default cap on the number of sequences any enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Empirical distribution of a length-`n` string, stored as symbol counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TypeComposition {
    counts: Vec<usize>,
}

impl TypeComposition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return invalid("alphabet must contain at least one symbol");
        }
        Ok(TypeComposition { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    /// The distribution `P(i) = m_i / n`.
    pub fn distribution(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&m| m as f64 / n).collect()
    }

    /// Shannon entropy of the type, in nats.
    pub fn entropy(&self) -> f64 {
        let n = self.n() as f64;
        self.counts
            .iter()
            .filter(|&&m| m > 0)
            .map(|&m| {
                let p = m as f64 / n;
                -p * p.ln()
            })
            .sum()
    }

    /// `|T_P| = n! / Π m_i!`, exact.
    pub fn class_size(&self) -> u128 {
        multinomial(&self.counts)
    }
}

impl TryFrom<Vec<usize>> for TypeComposition {
    type Error = Error;
    fn try_from(counts: Vec<usize>) -> Result<Self> {
        TypeComposition::new(counts)
    }
}

impl From<TypeComposition> for Vec<usize> {
    fn from(t: TypeComposition) -> Self {
        t.counts
    }
}

impl fmt::Display for TypeComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

/// A length-`n` string over `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence {
    symbols: Vec<usize>,
    k: usize,
}

impl Sequence {
    /// Builds a sequence from 1-based symbols.
    pub fn new(symbols: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("alphabet must contain at least one symbol");
        }
        if let Some(bad) = symbols.iter().find(|&&s| s == 0 || s > k) {
            return invalid(format!("symbol {bad} outside alphabet 1..={k}"));
        }
        Ok(Sequence { symbols, k })
    }

    pub(crate) fn from_zero_based(letters: impl IntoIterator<Item = usize>, k: usize) -> Self {
        Sequence { symbols: letters.into_iter().map(|l| l + 1).collect(), k }
    }

    /// 1-based symbols.
    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// 0-based letter at position `i`, for indexing channel outputs.
    pub fn letter(&self, i: usize) -> usize {
        self.symbols[i] - 1
    }

    pub fn letters(&self) -> impl Iterator<Item = usize> + '_ {
        self.symbols.iter().map(|s| s - 1)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Joint counts `N[u][v] = #{i : x_i = u, y_i = v}` of a pair of strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConditionalType {
    joint: Vec<Vec<usize>>,
}

impl ConditionalType {
    pub fn from_joint_counts(joint: Vec<Vec<usize>>) -> Result<Self> {
        let k = joint.len();
        if k == 0 || joint.iter().any(|row| row.len() != k) {
            return invalid("joint counts must be a non-empty square matrix");
        }
        Ok(ConditionalType { joint })
    }

    /// The identity conditional type `V(y|x) = δ_xy` for the given input counts.
    pub fn identity(p: &TypeComposition) -> Self {
        let k = p.alphabet_size();
        let joint = (0..k)
            .map(|u| (0..k).map(|v| if u == v { p.counts()[u] } else { 0 }).collect())
            .collect();
        ConditionalType { joint }
    }

    pub fn joint_counts(&self) -> &[Vec<usize>] {
        &self.joint
    }

    pub fn n(&self) -> usize {
        self.joint.iter().flatten().sum()
    }

    pub fn row_marginals(&self) -> Vec<usize> {
        self.joint.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_marginals(&self) -> Vec<usize> {
        let k = self.joint.len();
        (0..k).map(|v| self.joint.iter().map(|r| r[v]).sum()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.joint
            .iter()
            .enumerate()
            .all(|(u, row)| row.iter().enumerate().all(|(v, &c)| u == v || c == 0))
    }

    fn check_against(&self, x: &Sequence) -> Result<()> {
        let px = type_of(x);
        if self.joint.len() != x.alphabet_size() {
            return Err(Error::InconsistentConditionalType(format!(
                "alphabet size {} vs {}",
                self.joint.len(),
                x.alphabet_size()
            )));
        }
        if self.row_marginals() != px.counts() {
            return Err(Error::InconsistentConditionalType(format!(
                "row marginals {:?} differ from type {}",
                self.row_marginals(),
                px
            )));
        }
        Ok(())
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

pub fn multinomial(counts: &[usize]) -> u128 {
    // Incremental binomials keep intermediate values small.
    let mut total = 0usize;
    let mut acc: u128 = 1;
    for &m in counts {
        for i in 1..=m {
            total += 1;
            acc = acc * total as u128 / i as u128;
        }
    }
    acc
}

/// All types of length-`n` strings over `k` letters, in descending
/// lexicographic order of the count vector.
pub fn enumerate_types(n: usize, k: usize) -> Result<Vec<TypeComposition>> {
    if k == 0 {
        return invalid("alphabet must contain at least one symbol");
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    compositions(n, k, &mut current, &mut |c| out.push(TypeComposition { counts: c.to_vec() }));
    Ok(out)
}

fn compositions(remaining: usize, parts: usize, current: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        current.push(remaining);
        emit(current);
        current.pop();
        return;
    }
    for first in (0..=remaining).rev() {
        current.push(first);
        compositions(remaining - first, parts - 1, current, emit);
        current.pop();
    }
}

pub fn type_of(x: &Sequence) -> TypeComposition {
    let mut counts = vec![0; x.alphabet_size()];
    for l in x.letters() {
        counts[l] += 1;
    }
    TypeComposition { counts }
}

pub fn type_class_size(p: &TypeComposition) -> u128 {
    p.class_size()
}

/// Every string of type `p`, in lexicographic order.
pub fn type_class(p: &TypeComposition, cap: u128) -> Result<Vec<Sequence>> {
    let size = p.class_size();
    if size > cap {
        return Err(Error::CapExceeded { what: "type class", size, cap });
    }
    let k = p.alphabet_size();
    let mut remaining = p.counts().to_vec();
    let mut current = Vec::with_capacity(p.n());
    let mut out = Vec::with_capacity(size as usize);
    fill_multiset_perms(&mut remaining, &mut current, p.n(), &mut |letters| {
        out.push(Sequence::from_zero_based(letters.iter().copied(), k))
    });
    Ok(out)
}

fn fill_multiset_perms(remaining: &mut [usize], current: &mut Vec<usize>, n: usize, emit: &mut impl FnMut(&[usize])) {
    if current.len() == n {
        emit(current);
        return;
    }
    for l in 0..remaining.len() {
        if remaining[l] > 0 {
            remaining[l] -= 1;
            current.push(l);
            fill_multiset_perms(remaining, current, n, emit);
            current.pop();
            remaining[l] += 1;
        }
    }
}

/// The sorted block string `(1…1, 2…2, …)`.
pub fn canonical_sequence(p: &TypeComposition) -> Sequence {
    let letters = p.counts().iter().enumerate().flat_map(|(l, &m)| std::iter::repeat_n(l, m));
    Sequence::from_zero_based(letters, p.alphabet_size())
}

pub fn empirical_entropy(x: &Sequence) -> f64 {
    type_of(x).entropy()
}

pub fn conditional_type_of(x: &Sequence, y: &Sequence) -> Result<ConditionalType> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.alphabet_size() != y.alphabet_size() {
        return Err(Error::DimMismatch("alphabet sizes differ".into()));
    }
    let k = x.alphabet_size();
    let mut joint = vec![vec![0; k]; k];
    for (u, v) in x.letters().zip(y.letters()) {
        joint[u][v] += 1;
    }
    Ok(ConditionalType { joint })
}

/// `|T_V(x)| = Π_u m_u! / Π_v N[u][v]!`.
pub fn conditional_type_class_size(x: &Sequence, v: &ConditionalType) -> Result<u128> {
    v.check_against(x)?;
    Ok(v.joint.iter().map(|row| multinomial(row)).product())
}

/// All strings `y` with `V_{y|x} = v`, in lexicographic order.
pub fn conditional_type_class(x: &Sequence, v: &ConditionalType, cap: u128) -> Result<Vec<Sequence>> {
    let size = conditional_type_class_size(x, v)?;
    if size > cap {
        return Err(Error::CapExceeded { what: "conditional type class", size, cap });
    }
    let n = x.len();
    let k = x.alphabet_size();
    let mut remaining = v.joint.clone();
    let mut current = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(size as usize);
    fill_conditional(x, &mut remaining, &mut current, &mut |letters| {
        out.push(Sequence::from_zero_based(letters.iter().copied(), k))
    });
    Ok(out)
}

fn fill_conditional(x: &Sequence, remaining: &mut [Vec<usize>], current: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    let pos = current.len();
    if pos == x.len() {
        emit(current);
        return;
    }
    let u = x.letter(pos);
    for v in 0..remaining[u].len() {
        if remaining[u][v] > 0 {
            remaining[u][v] -= 1;
            current.push(v);
            fill_conditional(x, remaining, current, emit);
            current.pop();
            remaining[u][v] += 1;
        }
    }
}

/// All conditional types for `x` (joint-count matrices whose rows reproduce
/// the type of `x`). When `output_type` is given, only those whose column
/// marginals match it are returned.
pub fn enumerate_conditional_types(x: &Sequence, output_type: Option<&TypeComposition>) -> Vec<ConditionalType> {
    let px = type_of(x);
    let k = x.alphabet_size();
    let row_choices: Vec<Vec<TypeComposition>> = px
        .counts()
        .iter()
        .map(|&m| enumerate_types(m, k).expect("k >= 1"))
        .collect();
    let mut out = Vec::new();
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(k);
    product_rows(&row_choices, &mut rows, &mut |joint| {
        let v = ConditionalType { joint: joint.to_vec() };
        if output_type.is_none_or(|q| v.column_marginals() == q.counts()) {
            out.push(v);
        }
    });
    out
}

fn product_rows(choices: &[Vec<TypeComposition>], rows: &mut Vec<Vec<usize>>, emit: &mut impl FnMut(&[Vec<usize>])) {
    let depth = rows.len();
    if depth == choices.len() {
        emit(rows);
        return;
    }
    for c in &choices[depth] {
        rows.push(c.counts().to_vec());
        product_rows(choices, rows, emit);
        rows.pop();
    }
}
