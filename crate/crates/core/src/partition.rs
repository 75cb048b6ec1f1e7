use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of `N` items into `K` non-empty clusters.
///
/// Cluster ids are dense, `0..K`, and canonical: ids are assigned in order of
/// first appearance along the item index (item 0 is always in cluster 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    counts: Vec<usize>,
}

impl Partition {
    /// Canonical partition with the same co-membership relation as `labels`.
    pub fn from_labels<T: Eq + Hash + Copy>(labels: &[T]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("partition of zero items"));
        }
        let mut ids: HashMap<T, usize> = HashMap::new();
        let mut counts = Vec::new();
        let z = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                let id = *ids.entry(*l).or_insert(next);
                if id == counts.len() {
                    counts.push(0);
                }
                counts[id] += 1;
                id
            })
            .collect();
        Ok(Partition { labels: z, counts })
    }

    /// All items in one cluster.
    pub fn single_cluster(n: usize) -> Self {
        Partition { labels: vec![0; n], counts: vec![n] }
    }

    /// Every item in its own cluster.
    pub fn singletons(n: usize) -> Self {
        Partition { labels: (0..n).collect(), counts: vec![1; n] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.counts.len()
    }

    /// Member indices of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.counts.iter().map(|&c| Vec::with_capacity(c)).collect();
        for (i, &k) in self.labels.iter().enumerate() {
            out[k].push(i);
        }
        out
    }

    /// Cluster sizes in decreasing order.
    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut sizes = self.counts.clone();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Labels shifted to `1..=K`, as written to files.
    pub fn one_based_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|k| k + 1).collect()
    }

    /// True when `i` and `j` share a cluster.
    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_relabeling() {
        let p = Partition::from_labels(&[7, 7, 3, 9, 3]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.counts(), &[2, 2, 1]);
        assert_eq!(p.num_clusters(), 3);
        assert_eq!(p.members(), vec![vec![0, 1], vec![2, 4], vec![3]]);
        assert_eq!(p.one_based_labels(), vec![1, 1, 2, 3, 2]);
        assert!(Partition::from_labels::<usize>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn relabeling_is_idempotent_and_preserves_comembership(labels in prop::collection::vec(0u8..6, 1..40)) {
            let p = Partition::from_labels(&labels).unwrap();
            let q = Partition::from_labels(p.labels()).unwrap();
            prop_assert_eq!(&p, &q);
            prop_assert_eq!(p.counts().iter().sum::<usize>(), labels.len());
            prop_assert!(p.counts().iter().all(|&c| c >= 1));
            for i in 0..labels.len() {
                for j in 0..labels.len() {
                    prop_assert_eq!(labels[i] == labels[j], p.same_cluster(i, j));
                }
            }
        }
    }
}
