use std::fmt;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Unordered pair of output modes `{first, second}` with `first <= second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModePair {
    pub first: usize,
    pub second: usize,
}

/// Serialized as the one-based label `"k,l"`.
impl serde::Serialize for ModePair {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl ModePair {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Self {
                first: a,
                second: b,
            }
        } else {
            Self {
                first: b,
                second: a,
            }
        }
    }

    pub fn is_same_detector(&self) -> bool {
        self.first == self.second
    }

    /// One-based label `"k,l"` used in files.
    pub fn label(&self) -> String {
        format!("{},{}", self.first + 1, self.second + 1)
    }

    pub fn parse_label(label: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad mode-pair label `{label}`"));
        let (a, b) = label.split_once(',').ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a == 0 || b == 0 {
            return Err(bad());
        }
        Ok(Self::new(a - 1, b - 1))
    }
}

impl fmt::Display for ModePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.label())
    }
}

/// All unordered pairs over `n_modes` outputs, lexicographic, including `k = l`.
pub fn all_pairs(n_modes: usize) -> Vec<ModePair> {
    (0..n_modes)
        .flat_map(|k| (k..n_modes).map(move |l| ModePair::new(k, l)))
        .collect()
}

/// Probabilities (or counts) over unordered output pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceDistribution {
    n_modes: usize,
    pairs: Vec<ModePair>,
    values: Vec<f64>,
    cross_detector_only: bool,
    renormalized: bool,
}

impl CoincidenceDistribution {
    /// Full distribution over every unordered pair, values from `f`.
    pub fn from_fn(n_modes: usize, mut f: impl FnMut(ModePair) -> f64) -> Self {
        let pairs = all_pairs(n_modes);
        let values = pairs.iter().map(|&p| f(p)).collect();
        Self {
            n_modes,
            pairs,
            values,
            cross_detector_only: false,
            renormalized: false,
        }
    }

    /// Builds a distribution over an explicit pair set.
    pub fn from_pairs(n_modes: usize, entries: Vec<(ModePair, f64)>) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by_key(|(p, _)| *p);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Format(format!("duplicate pair {}", w[0].0)));
            }
        }
        for (p, v) in &entries {
            if p.second >= n_modes {
                return Err(Error::IndexOutOfRange {
                    index: p.second,
                    n_modes,
                });
            }
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(
                    "value",
                    format!("{v} at {p} is not a non-negative number"),
                ));
            }
        }
        let cross_detector_only = entries.iter().all(|(p, _)| !p.is_same_detector());
        let (pairs, values) = entries.into_iter().unzip();
        Ok(Self {
            n_modes,
            pairs,
            values,
            cross_detector_only,
            renormalized: false,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn pairs(&self) -> &[ModePair] {
        &self.pairs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_cross_detector_only(&self) -> bool {
        self.cross_detector_only
    }

    pub fn is_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModePair, f64)> + '_ {
        self.pairs.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        let key = ModePair::new(a, b);
        self.pairs
            .binary_search(&key)
            .ok()
            .map(|idx| self.values[idx])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rescaled copy summing to one.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::ZeroDistribution);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= total);
        out.renormalized = true;
        Ok(out)
    }

    /// Copy restricted to pairs of distinct detectors.
    pub fn cross_detector(&self) -> Self {
        let (pairs, values) = self.iter().filter(|(p, _)| !p.is_same_detector()).unzip();
        Self {
            n_modes: self.n_modes,
            pairs,
            values,
            cross_detector_only: true,
            renormalized: false,
        }
    }

    /// Copy restricted to same-detector pairs `{k,k}`.
    pub fn same_detector(&self) -> Self {
        let (pairs, values) = self.iter().filter(|(p, _)| p.is_same_detector()).unzip();
        Self {
            n_modes: self.n_modes,
            pairs,
            values,
            cross_detector_only: false,
            renormalized: false,
        }
    }

    /// Values of `self` on the pairs present in `other`, in `other`'s order.
    pub fn restricted_to(&self, other: &Self) -> Result<Self> {
        let values = other
            .pairs
            .iter()
            .map(|p| {
                self.get(p.first, p.second)
                    .ok_or_else(|| Error::Format(format!("pair {p} missing")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_modes: self.n_modes,
            pairs: other.pairs.clone(),
            values,
            cross_detector_only: other.cross_detector_only,
            renormalized: false,
        })
    }

    /// `weight * self + (1 - weight) * other` over identical pair sets.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.pairs != other.pairs {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| weight * a + (1.0 - weight) * b)
            .collect();
        Ok(Self {
            n_modes: self.n_modes,
            pairs: self.pairs.clone(),
            values,
            cross_detector_only: self.cross_detector_only,
            renormalized: self.renormalized && other.renormalized,
        })
    }

    /// JSON object mapping one-based `"k,l"` labels to values.
    pub fn to_json_value(&self) -> Value {
        let mut map = Map::new();
        for (p, v) in self.iter() {
            map.insert(p.label(), Value::from(v));
        }
        Value::Object(map)
    }

    pub fn from_json_value(n_modes: usize, value: &Value) -> Result<Self> {
        let map = value
            .as_object()
            .ok_or_else(|| Error::Format("distribution must be a JSON object".into()))?;
        let entries = map
            .iter()
            .map(|(k, v)| {
                let pair = ModePair::parse_label(k)?;
                let v = v
                    .as_f64()
                    .ok_or_else(|| Error::Format(format!("value for `{k}` is not a number")))?;
                Ok((pair, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(n_modes, entries)
    }
}
