use std::fmt;

use super::io::HEADER_LEN;
use super::K3LidarIndex;
use crate::point::AttributeId;

/// Size and shape summary of an index.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexStats {
    pub points: usize,
    pub k: u8,
    pub leaf_threshold: u32,
    pub side: u64,
    pub levels: u8,
    /// Deepest level holding a node (0 when the root is a leaf).
    pub depth: u8,
    pub t_bits: usize,
    pub h_bits: usize,
    pub n_bits: usize,
    pub non_empty_leaves: usize,
    pub last_level_points: usize,
    pub header_bytes: usize,
    pub t_bytes: usize,
    pub h_bytes: usize,
    pub n_bytes: usize,
    pub x_bytes: usize,
    pub y_bytes: usize,
    pub z_bytes: usize,
    pub attribute_bytes: Vec<(AttributeId, usize)>,
    pub total_bytes: usize,
}

impl IndexStats {
    pub fn bits_per_point(&self) -> f64 {
        if self.points == 0 {
            0.0
        } else {
            self.total_bytes as f64 * 8.0 / self.points as f64
        }
    }

    /// Size relative to an uncompressed format-0 LAS point block (20 bytes per point).
    pub fn ratio_to_las_payload(&self) -> f64 {
        if self.points == 0 {
            0.0
        } else {
            self.total_bytes as f64 / (20.0 * self.points as f64)
        }
    }
}

impl K3LidarIndex {
    pub fn stats(&self) -> IndexStats {
        let topo = &self.topology;
        let p = &self.payload;
        let attribute_bytes: Vec<_> = AttributeId::ALL
            .iter()
            .zip(&p.columns)
            .map(|(a, c)| (*a, 2 + c.serialized_len()))
            .collect();
        IndexStats {
            points: self.len(),
            k: self.config.k,
            leaf_threshold: self.config.leaf_threshold,
            side: self.config.side,
            levels: self.config.levels,
            depth: self.depth(),
            t_bits: topo.t.len(),
            h_bits: topo.h.len(),
            n_bits: topo.n.len(),
            non_empty_leaves: topo.h.count_ones(),
            last_level_points: self.last_level_points(),
            header_bytes: HEADER_LEN,
            t_bytes: topo.t.serialized_len(),
            h_bytes: topo.h.serialized_len(),
            n_bytes: topo.n.serialized_len(),
            x_bytes: p.x.serialized_len(),
            y_bytes: p.y.serialized_len(),
            z_bytes: p.z.serialized_len(),
            attribute_bytes,
            total_bytes: self.serialized_len(),
        }
    }

    fn depth(&self) -> u8 {
        let topo = &self.topology;
        if topo.root_is_leaf() {
            return 0;
        }
        if topo.h.len() > topo.t.count_zeros() {
            return self.config.levels;
        }
        let kkk = self.config.children_per_node();
        let (mut pos, mut len, mut depth) = (0usize, kkk, 0u8);
        while len > 0 && pos < topo.t.len() {
            depth += 1;
            let ones = topo.t.rank1_unchecked(pos + len) - topo.t.rank1_unchecked(pos);
            pos += len;
            len = ones * kkk;
        }
        depth
    }
}

impl fmt::Display for IndexStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "points:            {}", self.points)?;
        writeln!(f, "k / l:             {} / {}", self.k, self.leaf_threshold)?;
        writeln!(
            f,
            "cube side:         {} ({} levels, depth reached {})",
            self.side, self.levels, self.depth
        )?;
        writeln!(
            f,
            "|T| |H| |N|:       {} {} {}",
            self.t_bits, self.h_bits, self.n_bits
        )?;
        writeln!(f, "non-empty leaves:  {}", self.non_empty_leaves)?;
        writeln!(f, "last-level points: {}", self.last_level_points)?;
        writeln!(f, "bytes:")?;
        writeln!(f, "  header           {}", self.header_bytes)?;
        writeln!(f, "  T                {}", self.t_bytes)?;
        writeln!(f, "  H                {}", self.h_bytes)?;
        writeln!(f, "  N                {}", self.n_bytes)?;
        writeln!(f, "  X                {}", self.x_bytes)?;
        writeln!(f, "  Y                {}", self.y_bytes)?;
        writeln!(f, "  Z                {}", self.z_bytes)?;
        for (a, b) in &self.attribute_bytes {
            writeln!(f, "  {:<17}{}", a.name(), b)?;
        }
        writeln!(f, "  total            {}", self.total_bytes)?;
        writeln!(f, "bits/point:        {:.2}", self.bits_per_point())?;
        write!(
            f,
            "vs LAS payload:    {:.1}%",
            100.0 * self.ratio_to_las_payload()
        )
    }
}
