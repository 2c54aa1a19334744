//! Truncated tensor algebra T^N(ℝ^m) with the shuffle product.
//!
//! Elements are coefficient tables over words in the letters {0, …, m−1},
//! graded by word length and truncated at level N.  The table is stored
//! dense and level-major: level 0 (the empty word), then the m words of
//! length 1, then the m² words of length 2, and so on.  Within a level the
//! word (w₁, …, wₙ) sits at the mixed-radix position Σ wᵢ·m^(n−1−i), so a
//! word is an index and vice versa without any lookup structure.
//!
//! The product is the truncated tensor (concatenation) product
//!
//!   (a ⊗ b)⁽ⁿ⁾ = Σ_{k=0}^{n} a⁽ⁿ⁻ᵏ⁾ ⊗ b⁽ᵏ⁾,
//!
//! exp and log are the usual grade-truncated series, and `shuffle` expands
//! products of coordinate functionals: ⟨e_I, g⟩⟨e_J, g⟩ = ⟨e_I ⧢ e_J, g⟩
//! for group-like g.  `homogeneous_norm` is the dilation-homogeneous size
//! max_n (n!·‖g⁽ⁿ⁾‖₂)^(1/n) used as the Carnot–Carathéodory surrogate.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Number of words of length ≤ `level` over `dim` letters.
pub fn coeff_count(dim: usize, level: usize) -> usize {
    if dim == 1 {
        return level + 1;
    }
    (dim.pow(level as u32 + 1) - 1) / (dim - 1)
}

/// Offsets of each level in the dense table; `offsets[n]` is the index of
/// the first length-n word and `offsets[level + 1]` the total length.
fn level_offsets(dim: usize, level: usize) -> Vec<usize> {
    let mut offs = Vec::with_capacity(level + 2);
    let mut total = 0usize;
    let mut len = 1usize;
    for _ in 0..=level {
        offs.push(total);
        total += len;
        len *= dim;
    }
    offs.push(total);
    offs
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Dense element of T^N(ℝ^m).
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTensor {
    dim: usize,
    level: usize,
    coeffs: Vec<f64>,
}

impl TruncatedTensor {
    /// The zero tensor.
    pub fn zero(dim: usize, level: usize) -> Self {
        assert!(dim >= 1, "alphabet must have at least one letter");
        TruncatedTensor { dim, level, coeffs: vec![0.0; coeff_count(dim, level)] }
    }

    /// The multiplicative unit 𝟏 (empty word ↦ 1).
    pub fn unit(dim: usize, level: usize) -> Self {
        let mut t = Self::zero(dim, level);
        t.coeffs[0] = 1.0;
        t
    }

    /// Embeds a vector v ∈ ℝ^m at level 1, all other levels zero.
    pub fn from_level1(dim: usize, level: usize, v: &[f64]) -> Self {
        assert_eq!(v.len(), dim, "level-1 data must have one entry per letter");
        assert!(level >= 1, "need level ≥ 1 to hold level-1 data");
        let mut t = Self::zero(dim, level);
        t.coeffs[1..1 + dim].copy_from_slice(v);
        t
    }

    pub fn from_coeffs(dim: usize, level: usize, coeffs: Vec<f64>) -> Result<Self> {
        let want = coeff_count(dim, level);
        if coeffs.len() != want {
            return Err(Error::DimensionMismatch(format!(
                "expected {want} coefficients for dim {dim} level {level}, got {}",
                coeffs.len()
            )));
        }
        Ok(TruncatedTensor { dim, level, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Index of `word` in the dense table.
    pub fn word_index(&self, word: &[u8]) -> Result<usize> {
        word_index(self.dim, self.level, word)
    }

    /// Coefficient ⟨e_word, self⟩.
    pub fn get(&self, word: &[u8]) -> Result<f64> {
        Ok(self.coeffs[self.word_index(word)?])
    }

    pub fn set(&mut self, word: &[u8], value: f64) -> Result<()> {
        let idx = self.word_index(word)?;
        self.coeffs[idx] = value;
        Ok(())
    }

    pub fn level_slice(&self, n: usize) -> &[f64] {
        let offs = level_offsets(self.dim, self.level);
        &self.coeffs[offs[n]..offs[n + 1]]
    }

    /// Projects onto T^new_level, dropping higher levels.
    pub fn truncate(&self, new_level: usize) -> Self {
        assert!(new_level <= self.level, "can only truncate downwards");
        let n = coeff_count(self.dim, new_level);
        TruncatedTensor { dim: self.dim, level: new_level, coeffs: self.coeffs[..n].to_vec() }
    }

    /// Applies the dilation δ_λ: level n is scaled by λⁿ.
    pub fn dilate(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        let offs = level_offsets(self.dim, self.level);
        let mut pow = 1.0;
        for n in 0..=self.level {
            for c in &mut out.coeffs[offs[n]..offs[n + 1]] {
                *c *= pow;
            }
            pow *= lambda;
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o;
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.level != other.level {
            return Err(Error::DimensionMismatch(format!(
                "tensors live in different algebras: (dim {}, level {}) vs (dim {}, level {})",
                self.dim, self.level, other.dim, other.level
            )));
        }
        Ok(())
    }
}

pub fn word_index(dim: usize, level: usize, word: &[u8]) -> Result<usize> {
    if word.len() > level {
        return Err(Error::Domain(format!(
            "word of length {} exceeds truncation level {level}",
            word.len()
        )));
    }
    let offs = level_offsets(dim, level);
    let mut idx = 0usize;
    for &letter in word {
        if letter as usize >= dim {
            return Err(Error::Domain(format!(
                "letter {letter} outside alphabet of size {dim}"
            )));
        }
        idx = idx * dim + letter as usize;
    }
    Ok(offs[word.len()] + idx)
}

/// All words of length ≤ `max_level`, level-major, matching the dense layout.
pub fn words(dim: usize, max_level: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(coeff_count(dim, max_level));
    out.push(Vec::new());
    let mut prev: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 1..=max_level {
        let mut next = Vec::with_capacity(prev.len() * dim);
        for w in &prev {
            for letter in 0..dim as u8 {
                let mut nw = w.clone();
                nw.push(letter);
                next.push(nw);
            }
        }
        out.extend(next.iter().cloned());
        prev = next;
    }
    out
}

/// Truncated tensor product c = a ⊗ b.
pub fn tensor_mul(a: &TruncatedTensor, b: &TruncatedTensor) -> Result<TruncatedTensor> {
    a.check_compatible(b)?;
    let (m, nmax) = (a.dim, a.level);
    let offs = level_offsets(m, nmax);
    let mut c = TruncatedTensor::zero(m, nmax);
    for n in 0..=nmax {
        let cbase = offs[n];
        for k in 0..=n {
            // level n of c gains a^(n-k) ⊗ b^(k)
            let abase = offs[n - k];
            let alen = offs[n - k + 1] - abase;
            let bbase = offs[k];
            let blen = offs[k + 1] - bbase;
            for i in 0..alen {
                let ai = a.coeffs[abase + i];
                if ai == 0.0 {
                    continue;
                }
                let crow = cbase + i * blen;
                for j in 0..blen {
                    c.coeffs[crow + j] += ai * b.coeffs[bbase + j];
                }
            }
        }
    }
    Ok(c)
}

/// Grade-truncated exponential exp(b) = 𝟏 + Σ_{n=1}^{N} b^⊗n / n!.
///
/// Requires b to have zero level-0 part, which makes the series exact at
/// truncation level N.  Evaluated in Horner form
/// exp(b) = 𝟏 + b ⊗ (𝟏 + (b/2) ⊗ (𝟏 + … ⊗ (𝟏 + b/N))).
pub fn tensor_exp(b: &TruncatedTensor) -> Result<TruncatedTensor> {
    if b.coeffs[0] != 0.0 {
        return Err(Error::Domain(
            "tensor_exp requires a zero level-0 coefficient".into(),
        ));
    }
    let mut acc = TruncatedTensor::unit(b.dim, b.level);
    for n in (1..=b.level).rev() {
        let mut scaled = b.clone();
        scaled.scale(1.0 / n as f64);
        acc = tensor_mul(&scaled, &acc)?;
        acc.coeffs[0] += 1.0;
    }
    Ok(acc)
}

/// Grade-truncated logarithm log(𝟏 + u) = Σ_{n=1}^{N} (−1)^{n+1} u^⊗n / n
/// for a = 𝟏 + u with unit level-0 part.
pub fn tensor_log(a: &TruncatedTensor) -> Result<TruncatedTensor> {
    if a.coeffs[0] != 1.0 {
        return Err(Error::Domain(
            "tensor_log requires a unit level-0 coefficient".into(),
        ));
    }
    let mut u = a.clone();
    u.coeffs[0] = 0.0;
    let mut acc = TruncatedTensor::zero(a.dim, a.level);
    let mut pow = TruncatedTensor::unit(a.dim, a.level);
    for n in 1..=a.level {
        pow = tensor_mul(&pow, &u)?;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        for (acc_c, pow_c) in acc.coeffs.iter_mut().zip(&pow.coeffs) {
            *acc_c += sign / n as f64 * pow_c;
        }
    }
    Ok(acc)
}

/// Group inverse g⁻¹ = exp(−log g).
pub fn tensor_inverse(g: &TruncatedTensor) -> Result<TruncatedTensor> {
    let mut l = tensor_log(g)?;
    l.scale(-1.0);
    tensor_exp(&l)
}

/// Homogeneous norm max_{1≤n≤N} (n!·‖g⁽ⁿ⁾‖₂)^(1/n) of a group-like element.
///
/// Scales exactly linearly under dilations: the norm of δ_λ g is λ times
/// the norm of g for λ ≥ 0.
pub fn homogeneous_norm(g: &TruncatedTensor) -> Result<f64> {
    if g.coeffs[0] != 1.0 {
        return Err(Error::Domain(
            "homogeneous_norm requires a unit level-0 coefficient".into(),
        ));
    }
    let mut best = 0.0f64;
    for n in 1..=g.level {
        let sq: f64 = g.level_slice(n).iter().map(|c| c * c).sum();
        let size = (factorial(n) * sq.sqrt()).powf(1.0 / n as f64);
        best = best.max(size);
    }
    Ok(best)
}

/// Formal sum of words with positive integer multiplicities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordSum {
    terms: BTreeMap<Vec<u8>, u64>,
}

impl WordSum {
    pub fn single(word: Vec<u8>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(word, 1);
        WordSum { terms }
    }

    pub fn add(&mut self, word: Vec<u8>, mult: u64) {
        *self.terms.entry(word).or_insert(0) += mult;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u8], u64)> {
        self.terms.iter().map(|(w, &m)| (w.as_slice(), m))
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.terms.values().sum()
    }

    /// Pairs the sum against a tensor: Σ mult · ⟨e_word, t⟩.
    pub fn pair(&self, t: &TruncatedTensor) -> Result<f64> {
        let mut acc = 0.0;
        for (w, mult) in self.iter() {
            acc += mult as f64 * t.get(w)?;
        }
        Ok(acc)
    }
}

/// Shuffle product of two words as a multiset of words.
///
/// Recursion on last letters: (I,a) ⧢ (J,b) = ((I ⧢ (J,b)), a) + (((I,a) ⧢ J), b),
/// with the empty word as unit.  The total multiplicity is C(|I|+|J|, |I|).
pub fn shuffle(i: &[u8], j: &[u8]) -> WordSum {
    if i.is_empty() {
        return WordSum::single(j.to_vec());
    }
    if j.is_empty() {
        return WordSum::single(i.to_vec());
    }
    let (ihead, ilast) = i.split_at(i.len() - 1);
    let (jhead, jlast) = j.split_at(j.len() - 1);
    let mut out = WordSum::default();
    for (w, mult) in shuffle(ihead, j).iter() {
        let mut word = w.to_vec();
        word.push(ilast[0]);
        out.add(word, mult);
    }
    for (w, mult) in shuffle(i, jhead).iter() {
        let mut word = w.to_vec();
        word.push(jlast[0]);
        out.add(word, mult);
    }
    out
}
