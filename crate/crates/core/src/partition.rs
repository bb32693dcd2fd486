use serde::Serialize;

use crate::error::{Error, Result};

/// A labeling of `n` points into non-empty parts `0..num_parts()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardPartition {
    pub labels: Vec<usize>,
    pub part_sizes: Vec<usize>,
}

impl HardPartition {
    /// Compacts arbitrary labels to `0..P` in order of first appearance.
    pub fn from_labels(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("partition of an empty set"));
        }
        let max = *raw.iter().max().expect("non-empty");
        let mut remap = vec![usize::MAX; max + 1];
        let mut labels = Vec::with_capacity(raw.len());
        let mut part_sizes = Vec::new();
        for &l in raw {
            if remap[l] == usize::MAX {
                remap[l] = part_sizes.len();
                part_sizes.push(0);
            }
            labels.push(remap[l]);
            part_sizes[remap[l]] += 1;
        }
        Ok(Self { labels, part_sizes })
    }

    /// One part holding all `n` points.
    pub fn single(n: usize) -> Result<Self> {
        Self::from_labels(&vec![0; n])
    }

    /// Builds from explicit part sizes, labeling points consecutively.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::invalid("every part must be non-empty"));
        }
        let labels = sizes
            .iter()
            .enumerate()
            .flat_map(|(j, &s)| std::iter::repeat_n(j, s))
            .collect();
        Ok(Self {
            labels,
            part_sizes: sizes.to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_parts(&self) -> usize {
        self.part_sizes.len()
    }

    pub fn masses(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.part_sizes.iter().map(|&s| s as f64 / n).collect()
    }

    /// Point indices of every part, each list in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.part_sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn check_covers(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::invalid(format!(
                "partition labels {} points, expected {n}",
                self.n()
            )));
        }
        Ok(())
    }
}
