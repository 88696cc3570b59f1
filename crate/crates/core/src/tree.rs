//! Binary counting mechanism for private prefix sums.
//!
//! Items `1..=horizon` are the leaves of a dyadic tree. A node at level `j`
//! with index `b` covers items `b·2^j + 1 ..= (b+1)·2^j`. Levels run from `0`
//! to `depth - 1`, so every item lies in exactly `depth` nodes and each node
//! carries one `Lap(depth/ε)` draw: a change to one item moves `depth` node
//! sums by at most 1 each, giving `ε`-DP for the whole released sequence.
//!
//! The prefix `[1, t]` is covered by at most `depth` completed nodes: up to
//! two blocks at the top level, then one node per set bit of the remainder.

use crate::error::{Error, Result};
use crate::noise::{LaplaceScale, NoiseSource};

/// Identifies one node of the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub level: u32,
    pub index: u64,
}

impl NodeId {
    pub fn first_item(&self) -> u64 {
        (self.index << self.level) + 1
    }

    pub fn last_item(&self) -> u64 {
        (self.index + 1) << self.level
    }

    pub fn contains(&self, item: u64) -> bool {
        (self.first_item()..=self.last_item()).contains(&item)
    }
}

/// Tree depth used for horizon `horizon`: `⌈log₂ horizon⌉`, at least 2.
pub fn tree_depth(horizon: u64) -> u32 {
    let d = if horizon <= 1 {
        0
    } else {
        64 - (horizon - 1).leading_zeros()
    };
    d.max(2)
}

/// Nodes whose union is exactly `[1, count]`, in increasing item order.
pub fn covering_nodes(count: u64, depth: u32) -> Vec<NodeId> {
    let top = depth - 1;
    let mut nodes = Vec::new();
    let full_top = count >> top;
    for index in 0..full_top {
        nodes.push(NodeId { level: top, index });
    }
    for level in (0..top).rev() {
        if count >> level & 1 == 1 {
            nodes.push(NodeId {
                level,
                index: (count >> level) - 1,
            });
        }
    }
    nodes
}

/// Nodes on the root-to-leaf path of `item` (one per level).
pub fn path_nodes(item: u64, depth: u32) -> Vec<NodeId> {
    (0..depth)
        .map(|level| NodeId {
            level,
            index: (item - 1) >> level,
        })
        .collect()
}

/// Private running sum of values in `[0, 1]` over a declared horizon.
#[derive(Debug, Clone)]
pub struct TreeCounter {
    horizon: u64,
    epsilon: f64,
    depth: u32,
    scale: LaplaceScale,
    noise: NoiseSource,
    count: u64,
    prefix_raw: f64,
    /// Noise of the latest completed node at each level below the top.
    latest: Vec<f64>,
    /// Noise of completed top-level blocks (at most two within the horizon).
    top: Vec<f64>,
    /// Noise total over `covering_nodes(count)`, refreshed on every add.
    cover_noise: f64,
    draws: u64,
}

impl TreeCounter {
    pub fn new(horizon: u64, epsilon: f64, noise: NoiseSource) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::domain("tree counter needs a positive horizon"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let depth = tree_depth(horizon);
        Ok(Self {
            horizon,
            epsilon,
            depth,
            scale: LaplaceScale::new(f64::from(depth) / epsilon)?,
            noise,
            count: 0,
            prefix_raw: 0.0,
            latest: vec![0.0; depth as usize - 1],
            top: Vec::new(),
            cover_noise: 0.0,
            draws: 0,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn node_scale(&self) -> LaplaceScale {
        self.scale
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn raw_sum(&self) -> f64 {
        self.prefix_raw
    }

    /// Total node noise draws so far; equals the number of completed nodes.
    pub fn noise_draws(&self) -> u64 {
        self.draws
    }

    pub fn add(&mut self, value: f64) -> Result<()> {
        if self.count >= self.horizon {
            return Err(Error::Capacity(format!(
                "tree counter horizon {} reached",
                self.horizon
            )));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Input(format!(
                "tree counter value {value} outside [0,1]"
            )));
        }
        self.count += 1;
        self.prefix_raw += value;
        let top = self.depth - 1;
        // Every node whose last item is `count` completes now; draw low levels first.
        for level in 0..self.depth {
            if self.count & ((1u64 << level) - 1) != 0 {
                break;
            }
            let z = self.noise.laplace(self.scale);
            self.draws += 1;
            if level == top {
                self.top.push(z);
            } else {
                self.latest[level as usize] = z;
            }
        }
        self.cover_noise = self.top.iter().sum::<f64>()
            + (0..top)
                .rev()
                .filter(|&l| self.count >> l & 1 == 1)
                .map(|l| self.latest[l as usize])
                .sum::<f64>();
        Ok(())
    }

    /// Noisy prefix sum over all items added so far.
    pub fn sum(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::State("tree counter queried before any add".into()));
        }
        Ok(self.prefix_raw + self.cover_noise)
    }

    /// Nodes contributing noise to the current [`sum`](Self::sum).
    pub fn covering(&self) -> Vec<NodeId> {
        covering_nodes(self.count, self.depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_add_bookkeeping() {
        let mut c = TreeCounter::new(8, 1.0, NoiseSource::new(1, 1)).unwrap();
        c.add(1.0).unwrap();
        assert_eq!(c.count(), 1);
        assert_eq!(c.raw_sum(), 1.0);
    }

    #[test]
    fn zero_noise_returns_exact_sum() {
        let mut c = TreeCounter::new(64, 1.0, NoiseSource::zero()).unwrap();
        for i in 0..10 {
            c.add(0.5).unwrap();
            assert_eq!(c.sum().unwrap(), 0.5 * (i + 1) as f64);
        }
        assert_eq!(c.sum().unwrap(), 5.0);
    }

    #[test]
    fn depth_and_scale_for_eight() {
        let c = TreeCounter::new(8, 1.0, NoiseSource::zero()).unwrap();
        assert_eq!(c.depth(), 3);
        assert_eq!(c.node_scale().get(), 3.0);
        for t in 1..=8 {
            assert!(covering_nodes(t, 3).len() <= 3, "t={t}");
        }
    }

    #[test]
    fn depth_floor() {
        assert_eq!(tree_depth(1), 2);
        assert_eq!(tree_depth(4), 2);
        assert_eq!(tree_depth(5), 3);
        assert_eq!(tree_depth(1 << 20), 20);
        assert_eq!(tree_depth((1 << 20) + 1), 21);
    }

    #[test]
    fn covering_partitions_prefix() {
        for depth in 2..6u32 {
            let horizon = 1u64 << depth;
            for t in 1..=horizon {
                let nodes = covering_nodes(t, depth);
                assert!(nodes.len() <= depth as usize);
                for item in 1..=t {
                    assert_eq!(nodes.iter().filter(|n| n.contains(item)).count(), 1);
                }
                assert!(nodes.iter().all(|n| n.last_item() <= t));
            }
        }
    }

    #[test]
    fn repeated_queries_are_identical() {
        let mut c = TreeCounter::new(100, 0.5, NoiseSource::new(3, 9)).unwrap();
        for _ in 0..37 {
            c.add(0.25).unwrap();
        }
        assert_eq!(c.sum().unwrap().to_bits(), c.sum().unwrap().to_bits());
    }

    #[test]
    fn overflow_and_empty_errors() {
        let mut c = TreeCounter::new(2, 1.0, NoiseSource::zero()).unwrap();
        assert!(matches!(c.sum(), Err(Error::State(_))));
        c.add(0.0).unwrap();
        c.add(1.0).unwrap();
        assert!(matches!(c.add(1.0), Err(Error::Capacity(_))));
        let mut c = TreeCounter::new(2, 1.0, NoiseSource::zero()).unwrap();
        assert!(matches!(c.add(1.5), Err(Error::Input(_))));
    }
}
