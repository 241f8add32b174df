use std::collections::VecDeque;

use super::{
    encode_attribute, AttributeColumn, IndexConfig, IndexTopology, K3LidarIndex, LeafPayload,
    DEFAULT_K, DEFAULT_LEAF_THRESHOLD,
};
use crate::bitvec::BitVectorBuilder;
use crate::dac::DacSequence;
use crate::error::{Error, Result};
use crate::las::CoordinateTransform;
use crate::morton;
use crate::point::{AttributeId, GridPoint};

/// Parameters for [`K3LidarIndex::build`].
#[derive(Clone, Debug, PartialEq)]
pub struct BuildOptions {
    pub k: u8,
    pub leaf_threshold: u32,
    /// Forces the number of levels (and thus the cube side) instead of the
    /// smallest cube that holds every point.
    pub levels: Option<u8>,
    pub transform: CoordinateTransform,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            leaf_threshold: DEFAULT_LEAF_THRESHOLD,
            levels: None,
            transform: CoordinateTransform::default(),
        }
    }
}

impl BuildOptions {
    pub fn new(k: u8, leaf_threshold: u32) -> Self {
        Self {
            k,
            leaf_threshold,
            ..Self::default()
        }
    }

    pub fn with_levels(mut self, levels: u8) -> Self {
        self.levels = Some(levels);
        self
    }

    pub fn with_transform(mut self, transform: CoordinateTransform) -> Self {
        self.transform = transform;
        self
    }
}

/// Smallest `levels >= 1` with `k^levels > max_coord`.
fn cube_levels(k: u64, max_coord: u64) -> (u8, u64) {
    let mut side = k;
    let mut levels = 1u8;
    while side <= max_coord {
        side *= k;
        levels += 1;
    }
    (levels, side)
}

/// A node during construction: its points are `perm[start..end]`.
#[derive(Clone, Copy, Debug)]
struct Node {
    start: usize,
    end: usize,
    origin: [u64; 3],
    side: u64,
}

impl K3LidarIndex {
    /// Builds the index over `points` (grid coordinates must lie in the cube).
    pub fn build(points: &[GridPoint], options: &BuildOptions) -> Result<Self> {
        let k = options.k;
        let l = options.leaf_threshold;
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "k must be at least 2, got {k}"
            )));
        }
        if l < 1 {
            return Err(Error::InvalidParameter(
                "leaf threshold must be at least 1".into(),
            ));
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "{} points exceed the supported maximum",
                points.len()
            )));
        }
        for (index, p) in points.iter().enumerate() {
            for (attribute, value) in [
                ("return_number", p.attributes.return_number),
                ("number_of_returns", p.attributes.number_of_returns),
            ] {
                if value > 7 {
                    return Err(Error::AttributeOutOfRange {
                        index,
                        attribute,
                        value: u64::from(value),
                        bits: 3,
                    });
                }
            }
        }

        let k64 = u64::from(k);
        let max_coord = points
            .iter()
            .flat_map(|p| p.coords())
            .max()
            .map_or(0, u64::from);
        let (levels, side) = match options.levels {
            None => cube_levels(k64, max_coord),
            Some(levels) => {
                let side = (levels >= 1)
                    .then(|| k64.checked_pow(u32::from(levels)))
                    .flatten()
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!("cannot use {levels} levels with k={k}"))
                    })?;
                if let Some((index, p)) = points
                    .iter()
                    .enumerate()
                    .find(|(_, p)| p.coords().iter().any(|&c| u64::from(c) >= side))
                {
                    return Err(Error::CoordinateOutOfCube {
                        index,
                        x: p.x,
                        y: p.y,
                        z: p.z,
                        side,
                    });
                }
                (levels, side)
            }
        };
        let config = IndexConfig {
            k,
            leaf_threshold: l,
            levels,
            side,
            transform: options.transform,
        };

        let (t, stored, last_level, perm) = subdivide(points, &config);
        let (topology, payload) = encode_leaves(points, &perm, t, &stored, &last_level);
        Ok(Self {
            config,
            topology,
            payload,
        })
    }
}

/// Breadth-first subdivision. Returns `T`, the `T`-zero leaves in `T`
/// order, the last-level cells in breadth-first order, and the point
/// permutation that groups every leaf's points contiguously.
fn subdivide(
    points: &[GridPoint],
    config: &IndexConfig,
) -> (BitVectorBuilder, Vec<Node>, Vec<Node>, Vec<u32>) {
    let k = config.k as usize;
    let kkk = config.children_per_node();
    let l = config.leaf_threshold as usize;

    let mut perm: Vec<u32> = (0..points.len() as u32).collect();
    let mut scratch = vec![0u32; points.len()];
    let mut t = BitVectorBuilder::new();
    let mut stored = Vec::new();
    let mut last_level = Vec::new();
    let mut queue = VecDeque::new();
    let mut counts = vec![0usize; kkk];
    let mut child_of = Vec::new();

    let root = Node {
        start: 0,
        end: points.len(),
        origin: [0; 3],
        side: config.side,
    };
    if points.len() <= l {
        stored.push(root);
    } else {
        queue.push_back(root);
    }

    while let Some(node) = queue.pop_front() {
        let child_side = node.side / k as u64;
        counts.iter_mut().for_each(|c| *c = 0);
        child_of.clear();
        for &pi in &perm[node.start..node.end] {
            let p = &points[pi as usize];
            let c = p
                .coords()
                .iter()
                .zip(node.origin)
                .fold(0usize, |acc, (&v, o)| {
                    acc * k + ((u64::from(v) - o) / child_side) as usize
                });
            counts[c] += 1;
            child_of.push(c as u32);
        }
        // Stable counting sort of the node's points by child index.
        let mut offsets = Vec::with_capacity(kkk);
        let mut acc = node.start;
        for &c in &counts {
            offsets.push(acc);
            acc += c;
        }
        let mut cursor = offsets.clone();
        for (&pi, &c) in perm[node.start..node.end].iter().zip(&child_of) {
            scratch[cursor[c as usize]] = pi;
            cursor[c as usize] += 1;
        }
        perm[node.start..node.end].copy_from_slice(&scratch[node.start..node.end]);

        for c in 0..kkk {
            let (cx, cy, cz) = (c / (k * k), (c / k) % k, c % k);
            let child = Node {
                start: offsets[c],
                end: offsets[c] + counts[c],
                origin: [
                    node.origin[0] + cx as u64 * child_side,
                    node.origin[1] + cy as u64 * child_side,
                    node.origin[2] + cz as u64 * child_side,
                ],
                side: child_side,
            };
            if child_side == 1 {
                last_level.push(child);
            } else if counts[c] > l {
                t.push(true);
                queue.push_back(child);
            } else {
                t.push(false);
                stored.push(child);
            }
        }
    }
    (t, stored, last_level, perm)
}

fn encode_leaves(
    points: &[GridPoint],
    perm: &[u32],
    t: BitVectorBuilder,
    stored: &[Node],
    last_level: &[Node],
) -> (IndexTopology, LeafPayload) {
    let mut h = BitVectorBuilder::with_capacity(stored.len() + last_level.len());
    let mut n = BitVectorBuilder::with_capacity(points.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zs = Vec::new();
    let mut columns: Vec<Vec<u64>> = AttributeId::ALL
        .iter()
        .map(|_| Vec::with_capacity(points.len()))
        .collect();
    let mut order: Vec<(u128, u32)> = Vec::new();

    let mut emit = |node: &Node, with_coords: bool| {
        let count = node.end - node.start;
        h.push(count > 0);
        if count == 0 {
            return;
        }
        n.push_run(false, count - 1);
        n.push(true);
        let members = &perm[node.start..node.end];
        let local = |pi: u32| {
            let p = &points[pi as usize];
            [
                (u64::from(p.x) - node.origin[0]) as u32,
                (u64::from(p.y) - node.origin[1]) as u32,
                (u64::from(p.z) - node.origin[2]) as u32,
            ]
        };
        order.clear();
        if with_coords {
            order.extend(members.iter().map(|&pi| {
                let [x, y, z] = local(pi);
                (morton::encode(x, y, z), pi)
            }));
            // Stable: equal codes keep their input order.
            order.sort_by_key(|&(code, _)| code);
        } else {
            order.extend(members.iter().map(|&pi| (0, pi)));
        }
        for &(_, pi) in &order {
            if with_coords {
                let [x, y, z] = local(pi);
                xs.push(u64::from(x));
                ys.push(u64::from(y));
                zs.push(u64::from(z));
            }
            let attrs = &points[pi as usize].attributes;
            for (col, &a) in columns.iter_mut().zip(&AttributeId::ALL) {
                col.push(encode_attribute(attrs, a));
            }
        }
    };
    for node in stored {
        emit(node, true);
    }
    for node in last_level {
        emit(node, false);
    }

    let columns = AttributeId::ALL
        .iter()
        .zip(columns)
        .map(|(a, values)| {
            if a.is_flag() {
                AttributeColumn::Bits(values.iter().map(|&v| v != 0).collect())
            } else {
                AttributeColumn::Dac(DacSequence::encode_auto(&values))
            }
        })
        .collect();
    let topology = IndexTopology::new(t.build(), h.build(), n.build());
    let payload = LeafPayload {
        x: DacSequence::encode_auto(&xs),
        y: DacSequence::encode_auto(&ys),
        z: DacSequence::encode_auto(&zs),
        columns,
    };
    (topology, payload)
}
