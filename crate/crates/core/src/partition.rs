//! Per-variable symbolization: split learning for continuous channels,
//! category maps for discrete ones, and gap filling.
//!
//! Continuous values are mapped to a symbol by counting the split points that
//! are less than or equal to the value, so a value sitting exactly on a split
//! belongs to the upper cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Continuous,
    Categorical,
}

/// How split points are learned for a continuous variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    Uniform,
    #[default]
    MaxEntropy,
    Jenks,
}

/// Learned symbolization rule for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    pub alphabet_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    pub ordered: bool,
    /// Categorical only: the last symbol absorbs categories unseen in training.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unknown_slot: bool,
}

/// Whether an unknown category may fall back to the reserved slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolizeMode {
    Training,
    Inference,
}

/// One raw observation.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Number(f64),
    Category(String),
    Missing,
}

impl VariableSpec {
    pub fn continuous(name: impl Into<String>, splits: Vec<f64>) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            kind: VariableKind::Continuous,
            alphabet_size: splits.len() + 1,
            splits: Some(splits),
            categories: None,
            ordered: true,
            unknown_slot: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn categorical(
        name: impl Into<String>,
        categories: Vec<String>,
        ordered: bool,
        unknown_slot: bool,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            kind: VariableKind::Categorical,
            alphabet_size: categories.len() + usize::from(unknown_slot),
            splits: None,
            categories: Some(categories),
            ordered,
            unknown_slot,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet_size < 2 {
            return Err(Error::InvalidAlphabet(self.alphabet_size));
        }
        match self.kind {
            VariableKind::Continuous => {
                let splits = self.splits.as_ref().ok_or_else(|| {
                    Error::InvalidConfig(format!("continuous variable {} has no splits", self.name))
                })?;
                if splits.len() + 1 != self.alphabet_size {
                    return Err(Error::InvalidConfig(format!(
                        "variable {}: {} splits for alphabet size {}",
                        self.name,
                        splits.len(),
                        self.alphabet_size
                    )));
                }
                if splits.iter().any(|s| !s.is_finite()) {
                    return Err(Error::NonFinite(format!("splits of {}", self.name)));
                }
                if splits.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidConfig(format!(
                        "variable {}: splits not strictly ascending",
                        self.name
                    )));
                }
                if !self.ordered {
                    return Err(Error::InvalidConfig(format!(
                        "continuous variable {} must be ordered",
                        self.name
                    )));
                }
            }
            VariableKind::Categorical => {
                let cats = self.categories.as_ref().ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "categorical variable {} has no categories",
                        self.name
                    ))
                })?;
                if cats.len() + usize::from(self.unknown_slot) != self.alphabet_size {
                    return Err(Error::InvalidConfig(format!(
                        "variable {}: {} categories for alphabet size {}",
                        self.name,
                        cats.len(),
                        self.alphabet_size
                    )));
                }
                let mut seen = std::collections::HashSet::new();
                if let Some(dup) = cats.iter().find(|c| !seen.insert(c.as_str())) {
                    return Err(Error::InvalidConfig(format!(
                        "variable {}: duplicate category {dup:?}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Symbol index of `value`, in `[0, alphabet_size)`.
    pub fn symbolize(&self, value: &RawValue, mode: SymbolizeMode) -> Result<u32> {
        match (self.kind, value) {
            (VariableKind::Continuous, RawValue::Number(v)) => {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("value of {}", self.name)));
                }
                Ok(symbolize_continuous(*v, self.splits.as_deref().unwrap_or(&[])) as u32)
            }
            (VariableKind::Categorical, RawValue::Category(c)) => {
                let cats = self.categories.as_deref().unwrap_or(&[]);
                match cats.iter().position(|x| x == c) {
                    Some(i) => Ok(i as u32),
                    None if self.unknown_slot && mode == SymbolizeMode::Inference => {
                        Ok(cats.len() as u32)
                    }
                    None => Err(Error::UnknownCategory {
                        variable: self.name.clone(),
                        category: c.clone(),
                    }),
                }
            }
            (_, RawValue::Missing) => Err(Error::InvalidConfig(format!(
                "missing value for {} must be imputed before symbolization",
                self.name
            ))),
            (VariableKind::Continuous, RawValue::Category(c)) => Err(Error::InvalidConfig(
                format!("non-numeric value {c:?} for continuous variable {}", self.name),
            )),
            (VariableKind::Categorical, RawValue::Number(v)) => Err(Error::InvalidConfig(
                format!("numeric value {v} for categorical variable {}", self.name),
            )),
        }
    }
}

/// Index of the cell holding `value`: the number of splits `<= value`.
pub fn symbolize_continuous(value: f64, splits: &[f64]) -> usize {
    splits.partition_point(|&s| s <= value)
}

fn check_values(values: &[f64], alphabet_size: usize) -> Result<()> {
    if alphabet_size < 2 {
        return Err(Error::InvalidAlphabet(alphabet_size));
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("partition input".into()));
    }
    Ok(())
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Equal-width cells over `[min, max]`.
pub fn uniform_splits(values: &[f64], alphabet_size: usize) -> Result<Vec<f64>> {
    check_values(values, alphabet_size)?;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return Err(Error::DegenerateRange);
    }
    let width = hi - lo;
    Ok((1..alphabet_size)
        .map(|k| lo + k as f64 * width / alphabet_size as f64)
        .collect())
}

/// Percentile of already sorted data, linear interpolation between order
/// statistics at fractional rank `(n - 1) * q`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Equal-mass cells: splits at the `k / alphabet_size` percentiles.
pub fn max_entropy_splits(values: &[f64], alphabet_size: usize) -> Result<Vec<f64>> {
    check_values(values, alphabet_size)?;
    let xs = sorted(values);
    if xs[0] == xs[xs.len() - 1] {
        return Err(Error::DegenerateRange);
    }
    let mut splits = Vec::with_capacity(alphabet_size - 1);
    for k in 1..alphabet_size {
        let q = k as f64 / alphabet_size as f64;
        let s = percentile_sorted(&xs, q);
        if splits.last().is_some_and(|&prev| s <= prev) {
            return Err(Error::CollapsedCells {
                percentile: 100.0 * q,
            });
        }
        splits.push(s);
    }
    Ok(splits)
}

/// Fisher's optimal partition of the sorted data into `alphabet_size`
/// contiguous groups minimizing total within-group squared deviation.
/// Equal values always share a group; thresholds sit halfway between the
/// largest value of one group and the smallest of the next.
pub fn jenks_splits(values: &[f64], alphabet_size: usize) -> Result<Vec<f64>> {
    check_values(values, alphabet_size)?;
    let xs = sorted(values);

    // distinct values with multiplicities
    let mut uniq: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for &x in &xs {
        if uniq.last() == Some(&x) {
            *counts.last_mut().unwrap() += 1.0;
        } else {
            uniq.push(x);
            counts.push(1.0);
        }
    }
    let d = uniq.len();
    if d < alphabet_size {
        return Err(Error::TooFewDistinct {
            distinct: d,
            alphabet_size,
        });
    }

    // centre the data before forming prefix sums
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut cw = vec![0.0; d + 1];
    let mut cx = vec![0.0; d + 1];
    let mut cxx = vec![0.0; d + 1];
    for i in 0..d {
        let u = uniq[i] - mean;
        cw[i + 1] = cw[i] + counts[i];
        cx[i + 1] = cx[i] + counts[i] * u;
        cxx[i + 1] = cxx[i] + counts[i] * u * u;
    }
    // SSE of distinct values [a, b)
    let sse = |a: usize, b: usize| -> f64 {
        let w = cw[b] - cw[a];
        let s = cx[b] - cx[a];
        (cxx[b] - cxx[a] - s * s / w).max(0.0)
    };

    let k = alphabet_size;
    // cost[j][i]: best SSE for the first i distinct values in j+1 groups
    let mut cost = vec![vec![f64::INFINITY; d + 1]; k];
    let mut back = vec![vec![0usize; d + 1]; k];
    for i in 1..=d {
        cost[0][i] = sse(0, i);
    }
    for j in 1..k {
        for i in (j + 1)..=d {
            let mut best = f64::INFINITY;
            let mut arg = j;
            for start in j..i {
                let c = cost[j - 1][start] + sse(start, i);
                if c < best {
                    best = c;
                    arg = start;
                }
            }
            cost[j][i] = best;
            back[j][i] = arg;
        }
    }

    let mut cuts = Vec::with_capacity(k - 1);
    let mut end = d;
    for j in (1..k).rev() {
        let start = back[j][end];
        cuts.push(start);
        end = start;
    }
    cuts.reverse();
    Ok(cuts
        .into_iter()
        .map(|c| 0.5 * (uniq[c - 1] + uniq[c]))
        .collect())
}

/// Linear interpolation of interior gaps by position, nearest-value
/// extension at both ends.
pub fn interpolate_continuous(values: &[Option<f64>]) -> Result<Vec<f64>> {
    let observed: Vec<usize> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect();
    let (&first, &last) = match (observed.first(), observed.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::AllMissing),
    };
    let mut out = Vec::with_capacity(values.len());
    let mut next_obs = 0usize;
    for (i, v) in values.iter().enumerate() {
        if let Some(x) = v {
            out.push(*x);
            next_obs += 1;
            continue;
        }
        if i < first {
            out.push(values[first].unwrap());
        } else if i > last {
            out.push(values[last].unwrap());
        } else {
            let lo = observed[next_obs - 1];
            let hi = observed[next_obs];
            let (a, b) = (values[lo].unwrap(), values[hi].unwrap());
            let frac = (i - lo) as f64 / (hi - lo) as f64;
            out.push(a + frac * (b - a));
        }
    }
    Ok(out)
}

/// Carry the previous observation forward; leading gaps take the first one.
pub fn fill_categorical<T: Clone>(values: &[Option<T>]) -> Result<Vec<T>> {
    let first = values
        .iter()
        .find_map(|v| v.clone())
        .ok_or(Error::AllMissing)?;
    let mut current = first;
    Ok(values
        .iter()
        .map(|v| {
            if let Some(x) = v {
                current = x.clone();
            }
            current.clone()
        })
        .collect())
}

/// Bin counts used to eyeball marginal distributions when choosing alphabet
/// sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Histogram {
    Continuous {
        min: f64,
        max: f64,
        counts: Vec<u64>,
    },
    Categorical {
        counts: BTreeMap<String, u64>,
    },
}

pub fn continuous_histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut counts = vec![0u64; bins];
    if values.is_empty() {
        return Histogram::Continuous {
            min: 0.0,
            max: 0.0,
            counts,
        };
    }
    let width = max - min;
    for &v in values {
        let b = if width > 0.0 {
            (((v - min) / width) * bins as f64).floor() as usize
        } else {
            0
        };
        counts[b.min(bins - 1)] += 1;
    }
    Histogram::Continuous { min, max, counts }
}

pub fn categorical_histogram<'a>(values: impl IntoIterator<Item = &'a str>) -> Histogram {
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry(v.to_string()).or_insert(0) += 1;
    }
    Histogram::Categorical { counts }
}
