use serde::{Deserialize, Serialize};

/// Integer bin counts with their normalized frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl BinHistogram {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    /// Histogram of `values` over `0..bins`; out-of-range values are ignored.
    pub fn from_indices(values: impl IntoIterator<Item = usize>, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        for v in values {
            if let Some(c) = counts.get_mut(v) {
                *c += 1;
            }
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Frequencies summing to 1, or all zeros for an empty histogram.
    pub fn normalized(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_and_frequencies() {
        let h = BinHistogram::from_indices([0, 1, 1, 3, 9], 4);
        assert_eq!(h.counts(), &[1, 2, 0, 1]);
        assert_eq!(h.total(), 4);
        assert_eq!(h.normalized().iter().sum::<f64>(), 1.0);
        assert_eq!(BinHistogram::new(vec![0; 3]).normalized(), vec![0.0; 3]);
    }
}
