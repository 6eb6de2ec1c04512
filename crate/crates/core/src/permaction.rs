//! Permutations of `n` positions and their action on sequences.
//!
//! A permutation `s` moves the letter at position `j` to position `s(j)`, so
//! `apply(s, x)[i] = x[s⁻¹(i)]` and `apply(s·t, x) = apply(s, apply(t, x))`
//! with `(s·t)(j) = s(t(j))`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::typelab::{canonical_sequence, type_class, type_of, Sequence, TypeComposition};

/// A bijection of `{0..n-1}`, stored as its images. Displayed and serialized
/// 1-based (one-line notation).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// From 0-based images.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return invalid(format!("{images:?} is not a permutation of 0..{n}"));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// From 1-based one-line notation.
    pub fn from_one_line(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return invalid("one-line notation is 1-based");
        }
        Self::from_images(images.iter().map(|i| i - 1).collect())
    }

    pub fn one_line(&self) -> Vec<usize> {
        self.images.iter().map(|i| i + 1).collect()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, j: usize) -> usize {
        self.images[j]
    }

    /// `(self · other)(j) = self(other(j))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.n(), other.n(), "composing permutations of different degree");
        Permutation { images: other.images.iter().map(|&j| self.images[j]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (j, &i) in self.images.iter().enumerate() {
            inv[i] = j;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(j, &i)| i == j)
    }

    /// Cycle lengths, descending.
    pub fn cycle_type(&self) -> Vec<usize> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut lengths = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.images[j];
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.images.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "]")
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_line().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(de)?;
        Permutation::from_one_line(&v).map_err(serde::de::Error::custom)
    }
}

pub fn apply(s: &Permutation, x: &Sequence) -> Result<Sequence> {
    if s.n() != x.len() {
        return Err(Error::LengthMismatch(s.n(), x.len()));
    }
    let mut out = vec![0; x.len()];
    for (j, &l) in x.symbols().iter().enumerate() {
        out[s.image(j)] = l;
    }
    Sequence::new(out, x.alphabet_size())
}

/// The stable matching permutation with `apply(s, x_p) = x`: the i-th
/// occurrence of each symbol in `x_p` goes to its i-th occurrence in `x`.
pub fn find_permutation_to(x_p: &Sequence, x: &Sequence) -> Result<Permutation> {
    if x_p.len() != x.len() {
        return Err(Error::LengthMismatch(x_p.len(), x.len()));
    }
    if x_p.alphabet_size() != x.alphabet_size() || type_of(x_p) != type_of(x) {
        return Err(Error::TypeMismatch);
    }
    let k = x.alphabet_size();
    let mut positions: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, l) in x.letters().enumerate() {
        positions[l].push(i);
    }
    let mut next = vec![0; k];
    let images = x_p
        .letters()
        .map(|l| {
            let p = positions[l][next[l]];
            next[l] += 1;
            p
        })
        .collect();
    Ok(Permutation { images })
}

/// `|S_x| = Π m_i!`.
pub fn isotropy_size(x: &Sequence) -> u128 {
    type_of(x).counts().iter().map(|&m| crate::typelab::factorial(m)).product()
}

/// Every permutation fixing `x`.
pub fn enumerate_isotropy(x: &Sequence, cap: u128) -> Result<Vec<Permutation>> {
    let size = isotropy_size(x);
    if size > cap {
        return Err(Error::CapExceeded { what: "isotropy subgroup", size, cap });
    }
    let n = x.len();
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); x.alphabet_size()];
    for (i, l) in x.letters().enumerate() {
        blocks[l].push(i);
    }
    let mut out = vec![Permutation::identity(n)];
    for block in blocks.iter().filter(|b| b.len() > 1) {
        let local = all_permutations(block.len());
        let mut next = Vec::with_capacity(out.len() * local.len());
        for base in &out {
            for p in &local {
                let mut images = base.images.clone();
                for (a, &pos) in block.iter().enumerate() {
                    images[pos] = block[p.images[a]];
                }
                next.push(Permutation { images });
            }
        }
        out = next;
    }
    Ok(out)
}

/// All of `S_n` in lexicographic order of one-line notation.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut images: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation { images: images.clone() });
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| images[i - 1] < images[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| images[j] > images[i - 1]).expect("pivot has a successor");
        images.swap(i - 1, j);
        images[i..].reverse();
    }
    out
}

/// Representatives of `S_n / S_{x_P}` paired with the sequences they produce
/// from the canonical `x_P`, in lexicographic order of the sequences.
pub fn coset_transversal(p: &TypeComposition, cap: u128) -> Result<Vec<(Permutation, Sequence)>> {
    let x_p = canonical_sequence(p);
    type_class(p, cap)?
        .into_iter()
        .map(|y| Ok((find_permutation_to(&x_p, &y)?, y)))
        .collect()
}

/// An ordered multiset of permutations of a common degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermMultiset {
    elements: Vec<Permutation>,
    symmetric: bool,
}

impl PermMultiset {
    /// Wraps the elements; the symmetric flag is computed, not trusted.
    pub fn new(elements: Vec<Permutation>) -> Result<Self> {
        if let Some(first) = elements.first() {
            if elements.iter().any(|s| s.n() != first.n()) {
                return invalid("permutations of different degree in one multiset");
            }
        }
        let symmetric = is_inverse_closed(&elements);
        Ok(PermMultiset { elements, symmetric })
    }

    /// Like `new`, but rejects multisets that are not inverse-closed.
    pub fn new_symmetric(elements: Vec<Permutation>) -> Result<Self> {
        let s = Self::new(elements)?;
        if !s.symmetric {
            return Err(Error::NotSymmetricMultiset);
        }
        Ok(s)
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn degree(&self) -> Option<usize> {
        self.elements.first().map(Permutation::n)
    }
}

fn is_inverse_closed(elements: &[Permutation]) -> bool {
    let mut a: Vec<&Permutation> = elements.iter().collect();
    let mut inv: Vec<Permutation> = elements.iter().map(Permutation::inverse).collect();
    a.sort();
    inv.sort();
    a.into_iter().eq(inv.iter())
}

/// `count` independent uniform permutations of `n` positions.
pub fn sample_uniform(n: usize, count: usize, seed: u64) -> Result<PermMultiset> {
    if count == 0 {
        return invalid("sample count must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements = (0..count)
        .map(|_| {
            let mut images: Vec<usize> = (0..n).collect();
            images.shuffle(&mut rng);
            Permutation { images }
        })
        .collect();
    PermMultiset::new(elements)
}

/// `S ⊎ S⁻¹`: the elements followed by their inverses.
pub fn symmetrize(s: &PermMultiset) -> PermMultiset {
    let mut elements = s.elements.clone();
    elements.extend(s.elements.iter().map(Permutation::inverse));
    PermMultiset { elements, symmetric: true }
}

/// Child seed for the `index`-th sub-task of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
