//! Labeled graph-signal collections with train/val/test split tags.

use crate::error::{Error, Result};
use crate::signal::GraphSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Samples are (signal, label) pairs; labels are 1-based class indices.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<(GraphSignal, usize)>,
    splits: Vec<Split>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid("a dataset needs at least two classes"));
        }
        Ok(Self {
            samples: Vec::new(),
            splits: Vec::new(),
            num_classes,
        })
    }

    pub fn push(&mut self, signal: GraphSignal, label: usize, split: Split) -> Result<()> {
        if label == 0 || label > self.num_classes {
            return Err(Error::invalid(format!(
                "label {label} out of range 1..={}",
                self.num_classes
            )));
        }
        if let Some((first, _)) = self.samples.first() {
            if first.num_nodes() != signal.num_nodes()
                || first.num_features() != signal.num_features()
            {
                return Err(Error::invalid(
                    "all samples must share node and feature counts",
                ));
            }
        }
        self.samples.push((signal, label));
        self.splits.push(split);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.samples.first().map_or(0, |(s, _)| s.num_features())
    }

    pub fn sample(&self, index: usize) -> (&GraphSignal, usize) {
        let (signal, label) = &self.samples[index];
        (signal, *label)
    }

    pub fn split_of(&self, index: usize) -> Split {
        self.splits[index]
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.samples.len())
            .filter(|&i| self.splits[i] == split)
            .collect()
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.splits.iter().filter(|&&s| s == split).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_validated() {
        let mut d = Dataset::new(3).unwrap();
        let x = GraphSignal::zeros(2, 1);
        assert!(d.push(x.clone(), 0, Split::Train).is_err());
        assert!(d.push(x.clone(), 4, Split::Train).is_err());
        d.push(x.clone(), 3, Split::Train).unwrap();
        assert_eq!(d.split_len(Split::Train), 1);
        // shape mismatches rejected
        assert!(d.push(GraphSignal::zeros(3, 1), 1, Split::Test).is_err());
    }
}
