//! Association combinatorics: Hamming displacement on permutations, the
//! constrained sets `A_k^α = {σ : d_H(id, σ) ≤ α}`, detection masks and the
//! restricted detection law on `B_β`.
//!
//! Permutations are 0-based internally. `σ(i)` is the source index placed at
//! position `i`, so applying `σ` to a vector `z` gives `out[i] = z[σ(i)]`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, RngExt};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::math::{ln_binomial, ln_factorial, ln_pow, log_sum_exp};

/// Default upper bound on the size of an explicit enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// A non-negative integer bound that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(usize),
    Unbounded,
}

impl Bound {
    /// `min(self, k)`.
    pub fn clamp_to(self, k: usize) -> usize {
        match self {
            Bound::Finite(b) => b.min(k),
            Bound::Unbounded => k,
        }
    }

    pub fn allows(self, value: usize) -> bool {
        match self {
            Bound::Finite(b) => value <= b,
            Bound::Unbounded => true,
        }
    }

}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(b) => write!(f, "{b}"),
            Bound::Unbounded => f.write_str("inf"),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(b) => s.serialize_u64(*b as u64),
            Bound::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(Bound::Finite(n as usize)),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "unbounded") => Ok(Bound::Unbounded),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected an integer or \"inf\", got {t:?}"))),
        }
    }
}

/// The `(α, β)` pair: association uncertainty radius and maximum number of
/// missed detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub alpha: Bound,
    pub beta: Bound,
}

impl PerturbationSpec {
    pub fn new(alpha: Bound, beta: Bound) -> Result<Self> {
        if alpha == Bound::Finite(0) {
            return domain("alpha must be at least 1");
        }
        Ok(Self { alpha, beta })
    }

    /// `(1, 0)`: known association, every target detected.
    pub fn unperturbed() -> Self {
        Self { alpha: Bound::Finite(1), beta: Bound::Finite(0) }
    }

    /// `(∞, ∞)`: the full data-association problem.
    pub fn full() -> Self {
        Self { alpha: Bound::Unbounded, beta: Bound::Unbounded }
    }

    /// True when the permutation is the identity almost surely.
    pub fn known_association(&self) -> bool {
        self.alpha == Bound::Finite(1)
    }
}

/// A permutation of `{0, …, k-1}` with its cached displacement `d_H(id, σ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstrainedPermutation {
    map: Vec<usize>,
    displacement: usize,
}

impl ConstrainedPermutation {
    pub fn identity(k: usize) -> Self {
        Self { map: (0..k).collect(), displacement: 0 }
    }

    pub fn from_zero_based(map: Vec<usize>) -> Result<Self> {
        let k = map.len();
        let mut seen = vec![false; k];
        for &v in &map {
            if v >= k || seen[v] {
                return Err(Error::Data(format!("{map:?} is not a bijection")));
            }
            seen[v] = true;
        }
        let displacement = map.iter().enumerate().filter(|(i, &v)| *i != v).count();
        Ok(Self { map, displacement })
    }

    /// Builds from the 1-based one-line notation used in documentation.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::Data("1-based permutation contains 0".into()));
        }
        Self::from_zero_based(images.iter().map(|v| v - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.map.iter().map(|v| v + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn displacement(&self) -> usize {
        self.displacement
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv, displacement: self.displacement }
    }

    /// `out[i] = z[σ(i)]`, the action of the permutation matrix `S_σ`.
    pub fn permute<T: Clone>(&self, z: &[T]) -> Vec<T> {
        assert_eq!(z.len(), self.map.len(), "permutation size mismatch");
        self.map.iter().map(|&j| z[j].clone()).collect()
    }
}

/// Number of points moved by `σ' ∘ σ⁻¹`.
pub fn hamming_distance(sigma: &ConstrainedPermutation, sigma_prime: &ConstrainedPermutation) -> Result<usize> {
    if sigma.len() != sigma_prime.len() {
        return Err(Error::Dimension(format!(
            "permutations of {} and {} letters",
            sigma.len(),
            sigma_prime.len()
        )));
    }
    let inv = sigma.inverse();
    Ok((0..sigma.len()).filter(|&i| sigma_prime.image(inv.image(i)) != i).count())
}

/// Number of derangements of `i` letters: `!i = (i-1)(!(i-1) + !(i-2))`.
pub fn subfactorial(i: usize) -> BigUint {
    let (mut prev, mut cur) = (BigUint::one(), BigUint::zero());
    if i == 0 {
        return prev;
    }
    for n in 2..=i {
        let next = BigUint::from(n - 1) * (&cur + &prev);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, j| acc * BigUint::from(j))
}

/// `N_k^α = Σ_{i=0}^{min(α,k)} C(k,i)·!i`, the size of `A_k^α`.
pub fn count_constrained(k: usize, alpha: Bound) -> BigUint {
    (0..=alpha.clamp_to(k)).map(|i| binomial(k, i) * subfactorial(i)).sum()
}

fn ln_subfactorial(i: usize) -> f64 {
    match i {
        0 => 0.0,
        1 => f64::NEG_INFINITY,
        _ if i <= 60 => subfactorial(i).to_f64().expect("finite").ln(),
        // |!i - i!/e| < 1/2, negligible in log-space at this size
        _ => ln_factorial(i) - 1.0,
    }
}

/// `ln N_k^α`; usable where the exact count would not fit a float.
pub fn ln_count_constrained(k: usize, alpha: Bound) -> f64 {
    let terms: Vec<f64> = (0..=alpha.clamp_to(k)).map(|i| ln_binomial(k, i) + ln_subfactorial(i)).collect();
    log_sum_exp(&terms)
}

fn derangements(i: usize) -> Vec<Vec<usize>> {
    fn rec(pos: usize, n: usize, used: &mut [bool], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == n {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if v != pos && !used[v] {
                used[v] = true;
                cur.push(v);
                rec(pos + 1, n, used, cur, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, i, &mut vec![false; i], &mut Vec::with_capacity(i), &mut out);
    out
}

/// Iterator over `A_k^α`, grouped by displacement class.
pub struct ConstrainedIter {
    k: usize,
    max_class: usize,
    class: usize,
    patterns: Vec<Vec<usize>>,
    pattern: usize,
    subset: Vec<usize>,
    done: bool,
}

impl ConstrainedIter {
    fn start_class(&mut self, class: usize) {
        self.class = class;
        self.patterns = derangements(class);
        self.pattern = 0;
        self.subset = (0..class).collect();
    }

    fn next_subset(&mut self) -> bool {
        let (n, r) = (self.k, self.subset.len());
        let mut i = r;
        while i > 0 {
            i -= 1;
            if self.subset[i] < n - r + i {
                self.subset[i] += 1;
                for j in i + 1..r {
                    self.subset[j] = self.subset[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for ConstrainedIter {
    type Item = ConstrainedPermutation;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            if self.pattern < self.patterns.len() {
                let pat = &self.patterns[self.pattern];
                self.pattern += 1;
                let mut map: Vec<usize> = (0..self.k).collect();
                for (j, &p) in pat.iter().enumerate() {
                    map[self.subset[j]] = self.subset[p];
                }
                return Some(ConstrainedPermutation { map, displacement: self.class });
            }
            if self.class > 0 && self.next_subset() {
                self.pattern = 0;
                continue;
            }
            // next non-empty class (no permutation moves exactly one point)
            let mut c = self.class + 1;
            if c == 1 {
                c = 2;
            }
            if c > self.max_class {
                self.done = true;
            } else {
                self.start_class(c);
            }
        }
    }
}

/// Every element of `A_k^α` exactly once. Refuses when `N_k^α > cap`.
pub fn enumerate_constrained(k: usize, alpha: Bound, cap: u64) -> Result<ConstrainedIter> {
    let count = count_constrained(k, alpha);
    if count > BigUint::from(cap) {
        return Err(Error::Resource(format!(
            "|A_{k}^{alpha}| = {count} exceeds the enumeration cap {cap}; use sample_uniform_constrained"
        )));
    }
    let mut it = ConstrainedIter {
        k,
        max_class: alpha.clamp_to(k),
        class: 0,
        patterns: Vec::new(),
        pattern: 0,
        subset: Vec::new(),
        done: false,
    };
    it.start_class(0);
    Ok(it)
}

/// Uniform draw from `A_k^α`: displacement class `i` with probability
/// `C(k,i)·!i / N_k^α`, then a uniform `i`-subset, then a uniform derangement
/// of that subset by rejection.
pub fn sample_uniform_constrained<R: Rng + ?Sized>(k: usize, alpha: Bound, rng: &mut R) -> ConstrainedPermutation {
    let max_class = alpha.clamp_to(k);
    if max_class < 2 {
        return ConstrainedPermutation::identity(k);
    }
    if max_class == k {
        // A_k^k is the whole group
        let mut map: Vec<usize> = (0..k).collect();
        map.shuffle(rng);
        let displacement = map.iter().enumerate().filter(|(i, &m)| *i != m).count();
        return ConstrainedPermutation { map, displacement };
    }
    let ln_total = ln_count_constrained(k, alpha);
    let u: f64 = rng.random();
    let mut cdf = 0.0;
    let mut class = max_class;
    for i in 0..=max_class {
        cdf += (ln_binomial(k, i) + ln_subfactorial(i) - ln_total).exp();
        if u < cdf {
            class = i;
            break;
        }
    }
    if class == 0 {
        return ConstrainedPermutation::identity(k);
    }
    let subset = rand::seq::index::sample(rng, k, class).into_vec();
    let mut pattern: Vec<usize> = (0..class).collect();
    loop {
        pattern.shuffle(rng);
        if pattern.iter().enumerate().all(|(j, &p)| j != p) {
            break;
        }
    }
    let mut map: Vec<usize> = (0..k).collect();
    for (j, &p) in pattern.iter().enumerate() {
        map[subset[j]] = subset[p];
    }
    ConstrainedPermutation { map, displacement: class }
}

/// Binary detection vector; `bits[i]` is true iff target `i` is detected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetectionMask {
    bits: Vec<bool>,
    detected: usize,
}

impl DetectionMask {
    pub fn new(bits: Vec<bool>) -> Self {
        let detected = bits.iter().filter(|b| **b).count();
        Self { bits, detected }
    }

    pub fn all(k: usize) -> Self {
        Self::new(vec![true; k])
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn detected_count(&self) -> usize {
        self.detected
    }

    pub fn missed_count(&self) -> usize {
        self.bits.len() - self.detected
    }

    /// Indices of detected targets in increasing order: entry `i` is the
    /// `i`-th detected target.
    pub fn detected_indices(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
    }

    /// Keeps the entries of detected targets (`R_d z`).
    pub fn apply<T: Clone>(&self, z: &[T]) -> Vec<T> {
        assert_eq!(z.len(), self.bits.len(), "mask size mismatch");
        z.iter().zip(&self.bits).filter(|(_, b)| **b).map(|(v, _)| v.clone()).collect()
    }
}

/// Bernoulli(p_D) detection law on `{0,1}^K` restricted to
/// `B_β = {d : K - |d| ≤ β}` and renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMaskLaw {
    k: usize,
    p_detect: f64,
    beta: Bound,
    ln_norm: f64,
}

impl DetectionMaskLaw {
    pub fn new(k: usize, p_detect: f64, beta: Bound) -> Result<Self> {
        if !(p_detect > 0.0 && p_detect <= 1.0) {
            return domain(format!("detection probability must lie in (0, 1], got {p_detect}"));
        }
        let min_detected = k - beta.clamp_to(k);
        let terms: Vec<f64> = (min_detected..=k)
            .map(|j| ln_binomial(k, j) + ln_pow(p_detect, j) + ln_pow(1.0 - p_detect, k - j))
            .collect();
        Ok(Self { k, p_detect, beta, ln_norm: log_sum_exp(&terms) })
    }

    pub fn num_targets(&self) -> usize {
        self.k
    }

    pub fn min_detected(&self) -> usize {
        self.k - self.beta.clamp_to(self.k)
    }

    /// Log-probability of any single mask with `detected` detections.
    pub fn ln_pmf_count(&self, detected: usize) -> f64 {
        if detected > self.k || detected < self.min_detected() {
            return f64::NEG_INFINITY;
        }
        ln_pow(self.p_detect, detected) + ln_pow(1.0 - self.p_detect, self.k - detected) - self.ln_norm
    }

    pub fn pmf(&self, mask: &DetectionMask) -> f64 {
        if mask.len() != self.k {
            return 0.0;
        }
        self.ln_pmf_count(mask.detected_count()).exp()
    }

    /// `|B_β|`.
    pub fn support_size(&self) -> u64 {
        use num_traits::ToPrimitive;
        (self.min_detected()..=self.k).map(|j| binomial(self.k, j).to_u64().unwrap_or(u64::MAX)).sum()
    }

    /// All masks of `B_β`.
    pub fn support(&self) -> Vec<DetectionMask> {
        (0..1usize << self.k)
            .map(|code| DetectionMask::new((0..self.k).map(|i| code >> i & 1 == 1).collect()))
            .filter(|m| m.detected_count() >= self.min_detected())
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DetectionMask {
        // one uniform per target whatever p_D, so draws stay aligned across
        // detection probabilities under common random numbers
        if self.min_detected() == 0 {
            return DetectionMask::new((0..self.k).map(|_| rng.random::<f64>() < self.p_detect).collect());
        }
        if self.p_detect == 1.0 {
            return DetectionMask::all(self.k);
        }
        // count first, then a uniform subset of that size
        let u: f64 = rng.random();
        let mut cdf = 0.0;
        let mut count = self.k;
        for j in self.min_detected()..=self.k {
            cdf += (ln_binomial(self.k, j) + self.ln_pmf_count(j)).exp();
            if u < cdf {
                count = j;
                break;
            }
        }
        let mut bits = vec![false; self.k];
        for i in rand::seq::index::sample(rng, self.k, count) {
            bits[i] = true;
        }
        DetectionMask::new(bits)
    }
}
