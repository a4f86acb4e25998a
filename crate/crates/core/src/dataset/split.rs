use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fnv1a, DatasetError, VideoEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Split::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.7,
            validation: 0.15,
            test: 0.15,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let r = [self.train, self.validation, self.test];
        if r.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(DatasetError::Parameter(format!("split ratios must be non-negative, got {r:?}")));
        }
        if (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DatasetError::Parameter(format!("split ratios must sum to 1, got {r:?}")));
        }
        Ok(())
    }

    /// Largest-remainder apportionment of `n` items; ties go to the earlier split.
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let quotas = [self.train, self.validation, self.test].map(|r| r * n as f64);
        let mut counts = quotas.map(|q| q.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
            if (fa - fb).abs() <= 1e-9 {
                a.cmp(&b)
            } else {
                fb.total_cmp(&fa)
            }
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}

/// Disjoint train/validation/test partition of videos.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitSets {
    pub train: Vec<VideoEntry>,
    pub validation: Vec<VideoEntry>,
    pub test: Vec<VideoEntry>,
}

impl SplitSets {
    pub fn get(&self, split: Split) -> &[VideoEntry] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    /// `(entry, split)` for every video, ordered by id.
    pub fn assignments(&self) -> Vec<(&VideoEntry, Split)> {
        let mut all: Vec<_> = Split::ALL
            .into_iter()
            .flat_map(|s| self.get(s).iter().map(move |e| (e, s)))
            .collect();
        all.sort_by(|a, b| a.0.id.cmp(&b.0.id));
        all
    }
}

/// Per-class stratified split. Each class is shuffled with a generator keyed
/// on the seed and class name, then cut by [`SplitSpec::counts`]. Classes
/// with fewer than three videos go entirely to train.
pub fn split(entries: &[VideoEntry], spec: &SplitSpec) -> Result<SplitSets, DatasetError> {
    spec.validate()?;
    let mut by_class: BTreeMap<(usize, &str), Vec<&VideoEntry>> = BTreeMap::new();
    for e in entries {
        by_class.entry((e.label, e.class_name.as_str())).or_default().push(e);
    }
    let mut sets = SplitSets::default();
    for ((_, class_name), mut videos) in by_class {
        videos.sort_by(|a, b| a.id.cmp(&b.id));
        if videos.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(DatasetError::Parameter(format!("duplicate video id in class {class_name}")));
        }
        if videos.len() < 3 {
            log::warn!(
                "class {class_name} has only {} video(s); all assigned to train",
                videos.len()
            );
            sets.train.extend(videos.into_iter().cloned());
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ fnv1a(class_name.as_bytes()));
        videos.shuffle(&mut rng);
        let [n_train, n_val, _] = spec.counts(videos.len());
        for (i, v) in videos.into_iter().enumerate() {
            let dst = if i < n_train {
                &mut sets.train
            } else if i < n_train + n_val {
                &mut sets.validation
            } else {
                &mut sets.test
            };
            dst.push(v.clone());
        }
    }
    for s in [&mut sets.train, &mut sets.validation, &mut sets.test] {
        s.sort_by(|a, b| a.id.cmp(&b.id));
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VideoFormat;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn entries(per_class: &[usize]) -> Vec<VideoEntry> {
        per_class
            .iter()
            .enumerate()
            .flat_map(|(label, &n)| {
                (0..n).map(move |i| VideoEntry {
                    id: format!("c{label}/v{i:03}"),
                    label,
                    class_name: format!("c{label}"),
                    path: format!("c{label}/v{i:03}.y4m").into(),
                    format: VideoFormat::Y4m,
                })
            })
            .collect()
    }

    fn count_class(v: &[VideoEntry], label: usize) -> usize {
        v.iter().filter(|e| e.label == label).count()
    }

    #[test]
    fn largest_remainder_counts() {
        let spec = SplitSpec::default();
        assert_eq!(spec.counts(10), [7, 2, 1]);
        assert_eq!(spec.counts(20), [14, 3, 3]);
        assert_eq!(spec.counts(3), [2, 1, 0]);
        let s = split(&entries(&[10, 10]), &spec).unwrap();
        for label in 0..2 {
            assert_eq!(count_class(&s.train, label), 7);
            assert_eq!(count_class(&s.validation, label), 2);
            assert_eq!(count_class(&s.test, label), 1);
        }
    }

    #[test]
    fn all_train() {
        let spec = SplitSpec {
            train: 1.0,
            validation: 0.0,
            test: 0.0,
            seed: 5,
        };
        let s = split(&entries(&[4, 6]), &spec).unwrap();
        assert_eq!(s.train.len(), 10);
        assert!(s.validation.is_empty() && s.test.is_empty());
    }

    #[test]
    fn tiny_class_goes_to_train() {
        let s = split(&entries(&[2, 10]), &SplitSpec::default()).unwrap();
        assert_eq!(count_class(&s.train, 0), 2);
        assert_eq!(count_class(&s.validation, 0) + count_class(&s.test, 0), 0);
    }

    #[test]
    fn invalid_specs() {
        let bad = SplitSpec {
            train: 0.5,
            validation: 0.2,
            test: 0.2,
            seed: 0,
        };
        assert!(split(&entries(&[5]), &bad).is_err());
        let neg = SplitSpec {
            train: 1.2,
            validation: -0.2,
            test: 0.0,
            seed: 0,
        };
        assert!(neg.validate().is_err());
    }

    proptest! {
        #[test]
        fn partition_is_deterministic_and_disjoint(
            sizes in proptest::collection::vec(0usize..25, 1..4),
            seed in any::<u64>(),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let (train, rest) = (a, 1.0 - a);
            let spec = SplitSpec { train, validation: rest * b, test: 1.0 - train - rest * b, seed };
            let input = entries(&sizes);
            let s = split(&input, &spec).unwrap();
            prop_assert_eq!(&s, &split(&input, &spec).unwrap());
            let ids: Vec<&str> = s.train.iter().chain(&s.validation).chain(&s.test).map(|e| e.id.as_str()).collect();
            let unique: HashSet<&str> = ids.iter().copied().collect();
            prop_assert_eq!(ids.len(), input.len());
            prop_assert_eq!(unique.len(), input.len());
            for (label, &n) in sizes.iter().enumerate() {
                if n >= 3 {
                    let [t, v, te] = spec.counts(n);
                    prop_assert_eq!(count_class(&s.train, label), t);
                    prop_assert_eq!(count_class(&s.validation, label), v);
                    prop_assert_eq!(count_class(&s.test, label), te);
                }
            }
        }
    }
}
