//! The k³-lidar index: a k-ary octree over integer points, stored as
//! level-order bitmaps with compressed leaf payloads.
//!
//! Topology:
//!
//! * `T` has one bit per child of every subdivided node whose children are
//!   larger than a single cell, in breadth-first order. The children of the
//!   internal node at `T` position `p` start at `rank1(T, p + 1) * k³`.
//! * `H` has one bit per `T`-zero node (in `T` order) followed by one bit per
//!   materialized last-level cell (in breadth-first order); a one marks a
//!   non-empty leaf.
//! * `N` stores the point count of each non-empty leaf in unary (`m - 1`
//!   zeros and a one), so the points of the `j`-th non-empty leaf occupy
//!   payload positions `(select1(N, j - 1), select1(N, j)]`.
//!
//! Coordinates of points in `T`-zero leaves are stored relative to the leaf
//! origin in `X`, `Y`, `Z`; points in last-level cells need no coordinates.
//! Attribute columns hold one entry per point, in payload order.

mod build;
mod io;
mod query;
mod stats;

pub use build::BuildOptions;
pub use query::QueryRegion;
pub use stats::IndexStats;

use crate::bitvec::BitVector;
use crate::dac::DacSequence;
use crate::error::{Error, Result};
use crate::las::CoordinateTransform;
use crate::point::{AttributeId, PointAttributes};

pub const DEFAULT_K: u8 = 2;
pub const DEFAULT_LEAF_THRESHOLD: u32 = 100;

/// Geometry and coordinate transform of an index.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexConfig {
    /// Branching factor per axis.
    pub k: u8,
    /// Nodes with at most this many points are not subdivided.
    pub leaf_threshold: u32,
    /// Number of subdivision levels; `side == k^levels`.
    pub levels: u8,
    /// Side of the padded cube.
    pub side: u64,
    pub transform: CoordinateTransform,
}

impl IndexConfig {
    #[inline]
    pub fn children_per_node(&self) -> usize {
        let k = self.k as usize;
        k * k * k
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexTopology {
    pub t: BitVector,
    pub h: BitVector,
    pub n: BitVector,
    ones_in_t: usize,
}

impl IndexTopology {
    pub(crate) fn new(t: BitVector, h: BitVector, n: BitVector) -> Self {
        let ones_in_t = t.count_ones();
        Self { t, h, n, ones_in_t }
    }

    pub fn ones_in_t(&self) -> usize {
        self.ones_in_t
    }

    /// Whether the whole cube is a single leaf (no subdivision happened).
    pub fn root_is_leaf(&self) -> bool {
        self.t.is_empty() && self.h.len() == 1
    }

    /// Payload range `[start, end)` of the `j`-th (1-based) non-empty leaf.
    #[inline]
    pub(crate) fn leaf_range(&self, j: usize) -> (usize, usize) {
        let start = if j == 1 {
            0
        } else {
            self.n.select1_unchecked(j - 1) + 1
        };
        (start, self.n.select1_unchecked(j) + 1)
    }

    /// Payload range of the leaf with `H` index `h`, or `None` if it is empty.
    #[inline]
    pub(crate) fn leaf_range_at(&self, h: usize) -> Option<(usize, usize)> {
        if !self.h.get(h) {
            return None;
        }
        Some(self.leaf_range(self.h.rank1_unchecked(h + 1)))
    }
}

/// One stored attribute column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttributeColumn {
    Dac(DacSequence),
    Bits(BitVector),
}

impl AttributeColumn {
    pub fn len(&self) -> usize {
        match self {
            AttributeColumn::Dac(d) => d.len(),
            AttributeColumn::Bits(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stored (unsigned, possibly zigzag-mapped) value at `i`.
    #[inline]
    pub(crate) fn raw(&self, i: usize) -> u64 {
        match self {
            AttributeColumn::Dac(d) => d.get(i),
            AttributeColumn::Bits(b) => u64::from(b.get(i)),
        }
    }

    pub fn serialized_len(&self) -> usize {
        match self {
            AttributeColumn::Dac(d) => d.serialized_len(),
            AttributeColumn::Bits(b) => b.serialized_len(),
        }
    }
}

#[inline]
pub(crate) fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

#[inline]
pub(crate) fn unzigzag(v: u64) -> i64 {
    (v >> 1) as i64 ^ -((v & 1) as i64)
}

/// Stored value of `attribute` for a point, as written to its column.
pub(crate) fn encode_attribute(a: &PointAttributes, attribute: AttributeId) -> u64 {
    match attribute {
        AttributeId::ScanAngleRank => zigzag(i64::from(a.scan_angle_rank)),
        other => a.get(other) as u64,
    }
}

/// Coordinates and attribute columns of all leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafPayload {
    pub x: DacSequence,
    pub y: DacSequence,
    pub z: DacSequence,
    /// Indexed by `AttributeId as usize`.
    pub columns: Vec<AttributeColumn>,
}

impl LeafPayload {
    pub fn column(&self, attribute: AttributeId) -> &AttributeColumn {
        &self.columns[attribute as usize]
    }

    #[inline]
    pub(crate) fn attribute_value(&self, pos: usize, attribute: AttributeId) -> i64 {
        let raw = self.columns[attribute as usize].raw(pos);
        match attribute {
            AttributeId::ScanAngleRank => unzigzag(raw),
            _ => raw as i64,
        }
    }

    /// All attributes of the point at payload position `pos`.
    ///
    /// # Panics
    ///
    /// If `pos` is not below the number of indexed points.
    pub fn attributes(&self, pos: usize) -> PointAttributes {
        let raw = |a: AttributeId| self.columns[a as usize].raw(pos);
        PointAttributes {
            intensity: raw(AttributeId::Intensity) as u16,
            return_number: raw(AttributeId::ReturnNumber) as u8,
            number_of_returns: raw(AttributeId::NumberOfReturns) as u8,
            scan_direction_flag: raw(AttributeId::ScanDirectionFlag) != 0,
            edge_of_flight_line: raw(AttributeId::EdgeOfFlightLine) != 0,
            classification: raw(AttributeId::Classification) as u8,
            scan_angle_rank: unzigzag(raw(AttributeId::ScanAngleRank)) as i8,
            user_data: raw(AttributeId::UserData) as u8,
            point_source_id: raw(AttributeId::PointSourceId) as u16,
        }
    }
}

/// The complete compressed index.
#[derive(Clone, Debug, PartialEq)]
pub struct K3LidarIndex {
    config: IndexConfig,
    topology: IndexTopology,
    payload: LeafPayload,
}

impl K3LidarIndex {
    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn topology(&self) -> &IndexTopology {
        &self.topology
    }

    pub fn payload(&self) -> &LeafPayload {
        &self.payload
    }

    pub fn len(&self) -> usize {
        self.topology.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of points stored in last-level cells (without coordinates).
    pub fn last_level_points(&self) -> usize {
        self.len() - self.payload.x.len()
    }

    /// Checks the relations between bitmap and column lengths. Cheap; run on
    /// every deserialized index.
    pub(crate) fn check_shape(&self) -> Result<()> {
        let corrupt = |m: String| Err(Error::Corrupt(m));
        let cfg = &self.config;
        let topo = &self.topology;
        let kkk = cfg.children_per_node();

        if cfg.k < 2 || cfg.leaf_threshold < 1 || cfg.levels < 1 {
            return corrupt(format!(
                "bad parameters k={} l={} levels={}",
                cfg.k, cfg.leaf_threshold, cfg.levels
            ));
        }
        if !topo.t.len().is_multiple_of(kkk) {
            return corrupt(format!("|T| = {} is not a multiple of {kkk}", topo.t.len()));
        }

        let expected_h = if topo.root_is_leaf() {
            1
        } else {
            // Walk T level by level; level d holds the children of the ones of level d - 1.
            let mut pos = 0usize;
            let mut len = kkk;
            let mut depth = 1usize;
            let mut last_internal_ones = 0usize;
            if cfg.levels == 1 {
                last_internal_ones = 1;
                len = 0;
            }
            while len > 0 {
                if pos + len > topo.t.len() {
                    return corrupt("T is shorter than its own level structure".into());
                }
                let ones = topo.t.rank1_unchecked(pos + len) - topo.t.rank1_unchecked(pos);
                pos += len;
                if depth + 1 == cfg.levels as usize {
                    last_internal_ones = ones;
                    break;
                }
                len = ones * kkk;
                depth += 1;
            }
            if pos != topo.t.len() {
                return corrupt(format!("|T| = {} but levels end at {pos}", topo.t.len()));
            }
            topo.t.count_zeros() + last_internal_ones * kkk
        };
        if topo.h.len() != expected_h {
            return corrupt(format!("|H| = {}, expected {expected_h}", topo.h.len()));
        }
        if topo.n.count_ones() != topo.h.count_ones() {
            return corrupt(format!(
                "N has {} unary groups but H marks {} non-empty leaves",
                topo.n.count_ones(),
                topo.h.count_ones()
            ));
        }
        if !topo.n.is_empty() && !topo.n.get(topo.n.len() - 1) {
            return corrupt("N ends inside a unary group".into());
        }

        let total = topo.n.len();
        let first_last_level = if topo.root_is_leaf() {
            1
        } else {
            topo.t.count_zeros()
        };
        let stored_leaves = topo.h.rank1_unchecked(first_last_level.min(topo.h.len()));
        let with_coords = if stored_leaves == 0 {
            0
        } else {
            topo.n.select1_unchecked(stored_leaves) + 1
        };
        let p = &self.payload;
        for (name, len) in [("X", p.x.len()), ("Y", p.y.len()), ("Z", p.z.len())] {
            if len != with_coords {
                return corrupt(format!("|{name}| = {len}, expected {with_coords}"));
            }
        }
        if p.columns.len() != AttributeId::ALL.len() {
            return corrupt(format!("{} attribute columns", p.columns.len()));
        }
        for (a, col) in AttributeId::ALL.iter().zip(&p.columns) {
            if col.len() != total {
                return corrupt(format!(
                    "{a} column has {} entries, expected {total}",
                    col.len()
                ));
            }
        }
        Ok(())
    }

    /// Full structural verification: shape, point-count conservation, the
    /// leaf threshold on every node and local coordinate bounds.
    pub fn verify_invariants(&self) -> Result<()> {
        self.check_shape()?;
        let topo = &self.topology;
        let cfg = &self.config;
        let l = cfg.leaf_threshold as usize;

        let total = if topo.root_is_leaf() {
            let count = self.check_leaf(0, cfg.side)?;
            if count > l {
                return Err(Error::Corrupt(format!(
                    "root leaf holds {count} > {l} points"
                )));
            }
            count
        } else {
            let count = self.count_subtree(0, cfg.side)?;
            if count <= l {
                return Err(Error::Corrupt(format!(
                    "root subdivided with only {count} points"
                )));
            }
            count
        };
        if total != self.len() {
            return Err(Error::Corrupt(format!(
                "leaves hold {total} points, N encodes {}",
                self.len()
            )));
        }
        Ok(())
    }

    fn count_subtree(&self, children_pos: usize, side: u64) -> Result<usize> {
        let topo = &self.topology;
        let l = self.config.leaf_threshold as usize;
        let child_side = side / u64::from(self.config.k);
        let mut sum = 0;
        for c_pos in children_pos..children_pos + self.config.children_per_node() {
            let count = if child_side == 1 {
                let h = c_pos - topo.ones_in_t;
                topo.leaf_range_at(h).map_or(0, |(s, e)| e - s)
            } else if topo.t.get(c_pos) {
                let count = self.count_subtree(
                    topo.t.rank1_unchecked(c_pos + 1) * self.config.children_per_node(),
                    child_side,
                )?;
                if count <= l {
                    return Err(Error::Corrupt(format!(
                        "internal node at T[{c_pos}] holds {count} <= {l} points"
                    )));
                }
                count
            } else {
                let count = self.check_leaf(topo.t.rank0_unchecked(c_pos), child_side)?;
                if count > l {
                    return Err(Error::Corrupt(format!(
                        "leaf at T[{c_pos}] holds {count} > {l} points"
                    )));
                }
                count
            };
            sum += count;
        }
        Ok(sum)
    }

    /// Point count of a `T`-zero leaf; checks its local coordinates.
    fn check_leaf(&self, h: usize, side: u64) -> Result<usize> {
        let Some((start, end)) = self.topology.leaf_range_at(h) else {
            return Ok(0);
        };
        let p = &self.payload;
        for i in start..end {
            let local = [p.x.get(i), p.y.get(i), p.z.get(i)];
            if local.iter().any(|&v| v >= side) {
                return Err(Error::Corrupt(format!(
                    "point {i} has local coordinates {local:?} outside its {side}-wide leaf"
                )));
            }
        }
        Ok(end - start)
    }
}
