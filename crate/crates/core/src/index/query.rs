use super::K3LidarIndex;
use crate::error::{Error, Result};
use crate::point::{AttributeId, GridPoint};

/// Inclusive box on the index grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryRegion {
    pub min: [u64; 3],
    pub max: [u64; 3],
}

impl QueryRegion {
    pub fn new(min: [u64; 3], max: [u64; 3]) -> Result<Self> {
        if (0..3).any(|a| min[a] > max[a]) {
            return Err(Error::InvalidRegion(format!(
                "lower corner {min:?} exceeds upper corner {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    /// The box covering every representable grid coordinate.
    pub fn everything() -> Self {
        Self {
            min: [0; 3],
            max: [u64::MAX; 3],
        }
    }

    #[inline]
    pub fn contains(&self, p: [u32; 3]) -> bool {
        (0..3).all(|a| self.min[a] <= u64::from(p[a]) && u64::from(p[a]) <= self.max[a])
    }

    /// Restricts the box to `[0, side)`; `None` if nothing is left.
    fn clamp(&self, side: u64) -> Option<([u64; 3], [u64; 3])> {
        if self.min.iter().any(|&v| v >= side) {
            return None;
        }
        Some((self.min, self.max.map(|v| v.min(side - 1))))
    }
}

#[derive(Clone, Copy)]
struct Filter {
    attribute: AttributeId,
    lo: i64,
    hi: i64,
}

impl K3LidarIndex {
    /// All points inside `region`, with their attributes.
    pub fn get_region(&self, region: &QueryRegion) -> Vec<GridPoint> {
        let mut out = Vec::new();
        self.query(region, None, &mut out);
        out
    }

    /// Points inside `region` whose `attribute` lies in `[lo, hi]`.
    pub fn filter_att_region(
        &self,
        region: &QueryRegion,
        attribute: AttributeId,
        lo: i64,
        hi: i64,
    ) -> Result<Vec<GridPoint>> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "empty attribute range [{lo}, {hi}]"
            )));
        }
        let mut out = Vec::new();
        self.query(region, Some(Filter { attribute, lo, hi }), &mut out);
        Ok(out)
    }

    /// Decodes every point.
    pub fn all_points(&self) -> Vec<GridPoint> {
        self.get_region(&QueryRegion::everything())
    }

    fn query(&self, region: &QueryRegion, filter: Option<Filter>, out: &mut Vec<GridPoint>) {
        let side = self.config.side;
        let Some((lo, hi)) = region.clamp(side) else {
            return;
        };
        if self.topology.root_is_leaf() {
            self.scan_leaf(0, [0; 3], lo, hi, filter, out);
        } else {
            self.visit(side, lo, hi, 0, [0; 3], filter, out);
        }
    }

    /// Visits the children of the node of side `side` whose children start at
    /// `children_pos` in `T`. `lo`/`hi` are relative to the node origin.
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        side: u64,
        lo: [u64; 3],
        hi: [u64; 3],
        children_pos: usize,
        origin: [u64; 3],
        filter: Option<Filter>,
        out: &mut Vec<GridPoint>,
    ) {
        let k = u64::from(self.config.k);
        let kkk = self.config.children_per_node();
        let topo = &self.topology;
        let s = side / k;
        for cx in lo[0] / s..=hi[0] / s {
            for cy in lo[1] / s..=hi[1] / s {
                for cz in lo[2] / s..=hi[2] / s {
                    let c_pos = children_pos + (k * k * cx + k * cy + cz) as usize;
                    let child = [cx, cy, cz];
                    let child_origin: [u64; 3] = std::array::from_fn(|a| origin[a] + child[a] * s);
                    if s == 1 {
                        // Last-level cell: every point lies at the cell itself.
                        let h = c_pos - topo.ones_in_t;
                        self.emit_cell(h, child_origin, filter, out);
                        continue;
                    }
                    // Region relative to the child.
                    let clo: [u64; 3] =
                        std::array::from_fn(|a| lo[a].max(child[a] * s) - child[a] * s);
                    let chi: [u64; 3] =
                        std::array::from_fn(|a| hi[a].min(child[a] * s + s - 1) - child[a] * s);
                    if topo.t.get(c_pos) {
                        let next = topo.t.rank1_unchecked(c_pos + 1) * kkk;
                        self.visit(s, clo, chi, next, child_origin, filter, out);
                    } else {
                        let h = topo.t.rank0_unchecked(c_pos);
                        self.scan_leaf(h, child_origin, clo, chi, filter, out);
                    }
                }
            }
        }
    }

    /// Emits the points of the `T`-zero leaf with `H` index `h` that fall in
    /// the leaf-relative box `lo..=hi`.
    fn scan_leaf(
        &self,
        h: usize,
        origin: [u64; 3],
        lo: [u64; 3],
        hi: [u64; 3],
        filter: Option<Filter>,
        out: &mut Vec<GridPoint>,
    ) {
        let Some((start, end)) = self.topology.leaf_range_at(h) else {
            return;
        };
        let p = &self.payload;
        for i in start..end {
            let x = p.x.get(i);
            if x < lo[0] || x > hi[0] {
                continue;
            }
            let y = p.y.get(i);
            if y < lo[1] || y > hi[1] {
                continue;
            }
            let z = p.z.get(i);
            if z < lo[2] || z > hi[2] {
                continue;
            }
            if !self.passes(i, filter) {
                continue;
            }
            out.push(GridPoint::new(
                (origin[0] + x) as u32,
                (origin[1] + y) as u32,
                (origin[2] + z) as u32,
                p.attributes(i),
            ));
        }
    }

    fn emit_cell(
        &self,
        h: usize,
        cell: [u64; 3],
        filter: Option<Filter>,
        out: &mut Vec<GridPoint>,
    ) {
        let Some((start, end)) = self.topology.leaf_range_at(h) else {
            return;
        };
        for i in start..end {
            if self.passes(i, filter) {
                out.push(GridPoint::new(
                    cell[0] as u32,
                    cell[1] as u32,
                    cell[2] as u32,
                    self.payload.attributes(i),
                ));
            }
        }
    }

    #[inline]
    fn passes(&self, pos: usize, filter: Option<Filter>) -> bool {
        match filter {
            None => true,
            Some(f) => {
                let v = self.payload.attribute_value(pos, f.attribute);
                f.lo <= v && v <= f.hi
            }
        }
    }
}
