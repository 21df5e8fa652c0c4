//! Block-structured decision vectors.

use crate::error::{Error, Result};
use crate::Real;

/// Partition of the decision vector into `N` contiguous blocks of sizes
/// `(n_1, ..., n_N)`.
///
/// Block embeddings are index ranges into the concatenated vector; the column
/// selections of the identity are never materialized as matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    sizes: Vec<usize>,
}

impl BlockStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Config(
                "block structure needs at least one block".into(),
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::Config("every block size must be at least 1".into()));
        }
        Ok(Self { sizes })
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn block_size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Total dimension `n = sum(n_i)`.
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }
}

/// A point of the product space, stored as one dense vector per block.
///
/// Points are immutable values as far as the library API is concerned: every
/// operation takes them by shared reference and returns fresh data, so they
/// can be shared and sent across threads freely.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPoint<T> {
    structure: BlockStructure,
    blocks: Vec<Vec<T>>,
}

impl<T: Real> BlockPoint<T> {
    /// Builds a point, checking that the blocks conform to the structure and
    /// that every entry is finite.
    pub fn new(structure: BlockStructure, blocks: Vec<Vec<T>>) -> Result<Self> {
        if blocks.len() != structure.num_blocks() {
            return Err(Error::Config(format!(
                "expected {} blocks, got {}",
                structure.num_blocks(),
                blocks.len()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.len() != structure.block_size(i) {
                return Err(Error::Config(format!(
                    "block {} has length {}, structure says {}",
                    i,
                    b.len(),
                    structure.block_size(i)
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "block {i} contains a non-finite entry"
                )));
            }
        }
        Ok(Self { structure, blocks })
    }

    pub fn zeros(structure: BlockStructure) -> Self {
        let blocks = structure
            .sizes()
            .iter()
            .map(|&s| vec![T::zero(); s])
            .collect();
        Self { structure, blocks }
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn num_blocks(&self) -> usize {
        self.structure.num_blocks()
    }

    pub fn block(&self, i: usize) -> &[T] {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[Vec<T>] {
        &self.blocks
    }

    /// Returns a copy of the point with block `i` replaced.
    pub fn with_block(&self, i: usize, block: Vec<T>) -> Self {
        assert_eq!(
            block.len(),
            self.structure.block_size(i),
            "block length mismatch"
        );
        let mut out = self.clone();
        out.blocks[i] = block;
        out
    }

    pub(crate) fn set_block(&mut self, i: usize, block: Vec<T>) {
        assert_eq!(
            block.len(),
            self.structure.block_size(i),
            "block length mismatch"
        );
        self.blocks[i] = block;
    }

    /// Concatenates the blocks into a single flat vector.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.structure.total());
        for b in &self.blocks {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_rejects_empty_and_zero_sizes() {
        assert!(BlockStructure::new(vec![]).is_err());
        assert!(BlockStructure::new(vec![3, 0]).is_err());
        let s = BlockStructure::new(vec![2, 3]).unwrap();
        assert_eq!(s.num_blocks(), 2);
        assert_eq!(s.total(), 5);
    }

    #[test]
    fn point_checks_conformance_and_finiteness() {
        let s = BlockStructure::new(vec![2, 1]).unwrap();
        assert!(BlockPoint::new(s.clone(), vec![vec![1.0, 2.0]]).is_err());
        assert!(BlockPoint::new(s.clone(), vec![vec![1.0], vec![2.0]]).is_err());
        assert!(BlockPoint::new(s.clone(), vec![vec![1.0, f64::NAN], vec![2.0]]).is_err());
        let p = BlockPoint::new(s, vec![vec![1.0, 2.0], vec![3.0]]).unwrap();
        assert_eq!(p.flatten(), vec![1.0, 2.0, 3.0]);
        assert_eq!(p.with_block(1, vec![9.0]).block(1), &[9.0]);
    }
}
