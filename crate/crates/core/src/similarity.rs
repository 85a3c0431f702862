//! Cosine similarity between WiFi fingerprints and the adaptive threshold
//! rule that decides which similarity counts as "same place".
//!
//! Similarity is computed on raw (negative) dBm values. Because every
//! component shares the same sign the score lies in `[0, 1]`: identical
//! vectors score 1, vectors without a common MAC score 0. A MAC heard by
//! only one side contributes to that side's norm but not to the dot product.

use thiserror::Error;

use crate::model::{Config, RssVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("fingerprint has no access points")]
    EmptyFingerprint,
}

/// A similarity value in `[0, 1]`; higher means closer.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SimilarityScore<S: Scalar>(S);

impl<S: Scalar> SimilarityScore<S> {
    /// Clamps into `[0, 1]`, absorbing rounding at the ends of the range.
    pub fn new(value: S) -> Self {
        Self(value.max(S::zero()).min(S::one()))
    }

    pub fn value(self) -> S {
        self.0
    }
}

/// The three sums the cosine score is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineTerms<S: Scalar> {
    /// Dot product over MACs present in both vectors.
    pub common_dot: S,
    /// Number of MACs present in both vectors.
    pub common_count: usize,
    /// Self dot product over every MAC of the first vector.
    pub first_norm_sq: S,
    /// Self dot product over every MAC of the second vector.
    pub second_norm_sq: S,
}

impl<S: Scalar> CosineTerms<S> {
    pub fn score(&self) -> SimilarityScore<S> {
        if self.common_count == 0 {
            return SimilarityScore(S::zero());
        }
        // sqrt(d1 * d2) rather than sqrt(d1) * sqrt(d2) so identical
        // vectors score exactly 1.
        SimilarityScore::new(self.common_dot / (self.first_norm_sq * self.second_norm_sq).sqrt())
    }
}

/// Single merge pass over both MAC-sorted vectors.
pub fn cosine_terms<S, A, B>(first: &A, second: &B) -> CosineTerms<S>
where
    S: Scalar,
    A: RssVector<S> + ?Sized,
    B: RssVector<S> + ?Sized,
{
    let mut terms = CosineTerms {
        common_dot: S::zero(),
        common_count: 0,
        first_norm_sq: S::zero(),
        second_norm_sq: S::zero(),
    };
    let mut left = first.rss_entries().peekable();
    let mut right = second.rss_entries().peekable();
    loop {
        match (left.peek().copied(), right.peek().copied()) {
            (Some((ma, ra)), Some((mb, rb))) => {
                if ma == mb {
                    terms.common_dot += ra * rb;
                    terms.common_count += 1;
                    terms.first_norm_sq += ra * ra;
                    terms.second_norm_sq += rb * rb;
                    left.next();
                    right.next();
                } else if ma < mb {
                    terms.first_norm_sq += ra * ra;
                    left.next();
                } else {
                    terms.second_norm_sq += rb * rb;
                    right.next();
                }
            }
            (Some((_, ra)), None) => {
                terms.first_norm_sq += ra * ra;
                left.next();
            }
            (None, Some((_, rb))) => {
                terms.second_norm_sq += rb * rb;
                right.next();
            }
            (None, None) => break,
        }
    }
    terms
}

/// Cosine similarity of two fingerprints (or scans).
pub fn cosine_similarity<S, A, B>(first: &A, second: &B) -> Result<SimilarityScore<S>, SimilarityError>
where
    S: Scalar,
    A: RssVector<S> + ?Sized,
    B: RssVector<S> + ?Sized,
{
    if first.ap_count() == 0 || second.ap_count() == 0 {
        return Err(SimilarityError::EmptyFingerprint);
    }
    Ok(cosine_terms(first, second).score())
}

/// Two-level threshold keyed on fingerprint size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveThreshold<S: Scalar> {
    pub ap_low_count: usize,
    pub eps_low: S,
    pub eps_high: S,
}

impl<S: Scalar> AdaptiveThreshold<S> {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            ap_low_count: cfg.ap_low_count,
            eps_low: S::of(cfg.eps_low),
            eps_high: S::of(cfg.eps_high),
        }
    }

    /// Same threshold for every pair.
    pub fn fixed(eps: S) -> Self {
        Self { ap_low_count: 0, eps_low: eps, eps_high: eps }
    }

    /// Low threshold only when both sides are small (inclusive bound).
    pub fn for_sizes(&self, first_ap_count: usize, second_ap_count: usize) -> S {
        if first_ap_count <= self.ap_low_count && second_ap_count <= self.ap_low_count {
            self.eps_low
        } else {
            self.eps_high
        }
    }

    pub fn for_pair<A, B>(&self, first: &A, second: &B) -> S
    where
        A: RssVector<S> + ?Sized,
        B: RssVector<S> + ?Sized,
    {
        self.for_sizes(first.ap_count(), second.ap_count())
    }
}

/// Threshold applicable to the pair under `cfg`.
pub fn compute_threshold<S, A, B>(first: &A, second: &B, cfg: &Config) -> S
where
    S: Scalar,
    A: RssVector<S> + ?Sized,
    B: RssVector<S> + ?Sized,
{
    AdaptiveThreshold::from_config(cfg).for_pair(first, second)
}
