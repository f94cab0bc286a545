//! Analytical cost model for tree digests.
//!
//! Counts are generic over primitive integers with overflow checking; the
//! time model is generic over any numeric scalar that can be built from a
//! `u64`, so it runs equally on `f32`, `f64`, or exact rationals.

use num_traits::{checked_pow, FromPrimitive, Num, PrimInt};

use crate::xml_tree::XmlNode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("branching factor must be at least 2")]
    BranchingFactor,
    #[error("depth must be at least 1")]
    Depth,
    #[error("result does not fit the integer type")]
    Overflow,
    #[error("cost model parameter `{0}` must be positive")]
    NonPositive(&'static str),
}

fn check_shape<I: PrimInt>(k: I, m: u32) -> Result<(), CostError> {
    if k < I::from(2).ok_or(CostError::Overflow)? {
        return Err(CostError::BranchingFactor);
    }
    if m < 1 {
        return Err(CostError::Depth);
    }
    Ok(())
}

/// Nodes of a complete `k`-ary tree with `m` levels: `(k^m - 1) / (k - 1)`.
pub fn node_count<I: PrimInt>(k: I, m: u32) -> Result<I, CostError> {
    check_shape(k, m)?;
    let km = checked_pow(k, m as usize).ok_or(CostError::Overflow)?;
    Ok((km - I::one()) / (k - I::one()))
}

/// Hash invocations for a complete `k`-ary tree with `m` levels when each
/// node is rehashed once per level above it:
/// `(m k^(m+1) - (m+1) k^m + 1) / (k-1)^2`.
pub fn hash_count<I: PrimInt>(k: I, m: u32) -> Result<I, CostError> {
    check_shape(k, m)?;
    let one = I::one();
    let m_i = I::from(m).ok_or(CostError::Overflow)?;
    let km = checked_pow(k, m as usize).ok_or(CostError::Overflow)?;
    // m k^(m+1) - (m+1) k^m = k^m (m (k-1) - 1), non-negative for k >= 2, m >= 1
    let factor = m_i
        .checked_mul(&(k - one))
        .ok_or(CostError::Overflow)?
        - one;
    let numerator = km
        .checked_mul(&factor)
        .and_then(|v| v.checked_add(&one))
        .ok_or(CostError::Overflow)?;
    let denominator = (k - one).checked_mul(&(k - one)).ok_or(CostError::Overflow)?;
    Ok(numerator / denominator)
}

/// Constants of the hash-time and rehashing-overhead models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModelParams<S> {
    /// Time per compression block.
    pub c1: S,
    /// Fixed per-call overhead.
    pub c2: S,
    /// Block size in bytes.
    pub block_size: u64,
    /// Overhead per rehashed node.
    pub c: S,
    /// Overhead per unit of depth.
    pub c_prime: S,
}

impl<S> CostModelParams<S>
where
    S: Num + Copy + PartialOrd + FromPrimitive,
{
    pub fn new(c1: S, c2: S, block_size: u64, c: S, c_prime: S) -> Result<Self, CostError> {
        let zero = S::zero();
        if c1 <= zero {
            return Err(CostError::NonPositive("c1"));
        }
        if c2 <= zero {
            return Err(CostError::NonPositive("c2"));
        }
        if block_size == 0 {
            return Err(CostError::NonPositive("block_size"));
        }
        if c <= zero {
            return Err(CostError::NonPositive("c"));
        }
        if c_prime <= zero {
            return Err(CostError::NonPositive("c_prime"));
        }
        Ok(CostModelParams {
            c1,
            c2,
            block_size,
            c,
            c_prime,
        })
    }

    /// `c1 (floor(len / D) + 1) + c2`.
    pub fn hash_time(&self, len: u64) -> S {
        let blocks = S::from_u64(len / self.block_size + 1).expect("block count representable");
        self.c1 * blocks + self.c2
    }

    /// `c S_n + c' S_d`.
    pub fn rehash_overhead(&self, shape: &TreeShape) -> S {
        let n = S::from_u64(shape.node_size).expect("node size representable");
        let d = S::from_u64(shape.depth_size).expect("depth size representable");
        self.c * n + self.c_prime * d
    }
}

/// Size measures of a (sub)tree: node count and summed depth, where the
/// depth of a node is its number of ancestors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    pub node_size: u64,
    pub depth_size: u64,
}

impl TreeShape {
    /// Shape of a complete `k`-ary tree with `m` levels.
    pub fn complete(k: u64, m: u32) -> Result<Self, CostError> {
        let node_size = node_count(k, m)?;
        let mut depth_size: u64 = 0;
        for level in 1..m {
            let width = checked_pow(k, level as usize).ok_or(CostError::Overflow)?;
            depth_size = width
                .checked_mul(u64::from(level))
                .and_then(|v| v.checked_add(depth_size))
                .ok_or(CostError::Overflow)?;
        }
        Ok(TreeShape {
            node_size,
            depth_size,
        })
    }

    /// Shape of an actual element tree.
    pub fn of(root: &XmlNode) -> Self {
        fn walk(node: &XmlNode, depth: u64, shape: &mut TreeShape) {
            shape.node_size += 1;
            shape.depth_size += depth;
            for c in node.children() {
                walk(c, depth + 1, shape);
            }
        }
        let mut shape = TreeShape {
            node_size: 0,
            depth_size: 0,
        };
        walk(root, 0, &mut shape);
        shape
    }
}
