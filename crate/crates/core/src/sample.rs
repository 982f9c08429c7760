//! P-value containers and the ordering machinery every procedure builds on.
//!
//! Indices are zero-based throughout. Rank `k` (1-based, as in `p_(k)`) is
//! stored at position `k - 1` of [`OrderedSample::sorted`]; rank 0 is the
//! implicit `p_(0) = 0`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of p-values with optional ground truth and identifiers.
///
/// `truth[i] == true` means hypothesis `i` is a true null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueSample {
    values: Vec<f64>,
    truth: Option<Vec<bool>>,
    labels: Option<Vec<String>>,
}

impl PValueSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::PValueOutOfRange { index, value });
            }
        }
        // -0.0 would otherwise sort below 0.0 under total ordering.
        let values = values.into_iter().map(|v| v + 0.0).collect();
        Ok(Self {
            values,
            truth: None,
            labels: None,
        })
    }

    pub fn with_truth(mut self, truth: Vec<bool>) -> Result<Self> {
        if truth.len() != self.values.len() {
            return Err(Error::Validation(format!(
                "truth has {} entries but the sample has {} p-values",
                truth.len(),
                self.values.len()
            )));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::Validation(format!(
                "labels has {} entries but the sample has {} p-values",
                labels.len(),
                self.values.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn truth(&self) -> Option<&[bool]> {
        self.truth.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of true nulls, when ground truth is known.
    pub fn null_count(&self) -> Option<usize> {
        self.truth.as_ref().map(|t| t.iter().filter(|&&n| n).count())
    }

    /// True null proportion `m0 / m`, when ground truth is known.
    pub fn null_proportion(&self) -> Option<f64> {
        match self.null_count() {
            Some(_) if self.is_empty() => None,
            Some(m0) => Some(m0 as f64 / self.len() as f64),
            None => None,
        }
    }

    /// Copy of this sample with the value at `index` replaced.
    pub fn replaced(&self, index: usize, value: f64) -> Result<Self> {
        let mut values = self.values.clone();
        *values
            .get_mut(index)
            .ok_or_else(|| Error::Validation(format!("index {index} out of range")))? = value;
        let mut out = Self::new(values)?;
        out.truth = self.truth.clone();
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Keep only the entries for which `keep` returns true, mapping each kept
    /// value through `map`. Truth and labels follow their values.
    pub(crate) fn filter_map_values(
        &self,
        keep: impl Fn(f64) -> bool,
        map: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let kept: Vec<usize> = (0..self.len()).filter(|&i| keep(self.values[i])).collect();
        let mut out = Self::new(kept.iter().map(|&i| map(self.values[i])).collect())?;
        out.truth = self
            .truth
            .as_ref()
            .map(|t| kept.iter().map(|&i| t[i]).collect());
        out.labels = self
            .labels
            .as_ref()
            .map(|l| kept.iter().map(|&i| l[i].clone()).collect());
        Ok(out)
    }

    pub(crate) fn ensure_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::Validation("procedures need at least one p-value".into()))
        } else {
            Ok(())
        }
    }
}

/// Order statistics `p_(1) <= ... <= p_(m)` with the rank-to-index map.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    sorted: Vec<f64>,
    permutation: Vec<usize>,
}

impl OrderedSample {
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `permutation()[k - 1]` is the original index of the hypothesis at rank `k`.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `p_(k)` with the convention `p_(0) = 0`.
    pub fn at_rank(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.sorted[k - 1]
        }
    }
}

/// Stable sort: equal p-values keep ascending original index order.
pub fn order_sample(sample: &PValueSample) -> OrderedSample {
    order_values(sample.values())
}

pub(crate) fn order_values(values: &[f64]) -> OrderedSample {
    let mut permutation: Vec<usize> = (0..values.len()).collect();
    permutation.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(Ordering::Equal)
    });
    let sorted = permutation.iter().map(|&i| values[i]).collect();
    OrderedSample {
        sorted,
        permutation,
    }
}

/// Intermediate quantities recorded by multi-stage or plug-in procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    /// Rejections made by the first stage, for two-stage procedures.
    pub first_stage: Option<usize>,
    /// Effective level of the final stage (e.g. `q m / (m - R1)` or `q / pi0`).
    pub level: f64,
    /// Null proportion estimate the final stage divided by.
    pub pi0: Option<f64>,
    /// Chosen `lambda` for Storey-type estimators.
    pub lambda: Option<f64>,
}

/// The result of running a rejection procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionOutcome {
    pub r: usize,
    /// `p_(r)`, or 0 when nothing is rejected.
    pub threshold: f64,
    /// Original index of the hypothesis at rank `r`.
    pub boundary_index: Option<usize>,
    /// Original indices of the rejected hypotheses, in rank order.
    pub rejected: Vec<usize>,
    pub stage_trace: Option<StageTrace>,
}

impl RejectionOutcome {
    pub fn with_trace(mut self, trace: StageTrace) -> Self {
        self.stage_trace = Some(trace);
        self
    }
}

/// Reject ranks `1..=r`.
pub fn outcome_from_rank(ordered: &OrderedSample, r: usize) -> Result<RejectionOutcome> {
    if r > ordered.len() {
        return Err(Error::Validation(format!(
            "rank {r} exceeds the number of hypotheses {}",
            ordered.len()
        )));
    }
    Ok(RejectionOutcome {
        r,
        threshold: ordered.at_rank(r),
        boundary_index: r.checked_sub(1).map(|k| ordered.permutation[k]),
        rejected: ordered.permutation[..r].to_vec(),
        stage_trace: None,
    })
}
