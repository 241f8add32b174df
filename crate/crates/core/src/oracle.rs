//! Brute-force reference store: answers the same queries as the index by
//! scanning an uncompressed point list.

use crate::error::{Error, Result};
use crate::index::QueryRegion;
use crate::point::{AttributeId, GridPoint};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlatStore {
    points: Vec<GridPoint>,
}

impl FlatStore {
    pub fn new(points: Vec<GridPoint>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scan_region(&self, region: &QueryRegion) -> Vec<GridPoint> {
        self.points
            .iter()
            .filter(|p| region.contains(p.coords()))
            .copied()
            .collect()
    }

    pub fn scan_filter(
        &self,
        region: &QueryRegion,
        attribute: AttributeId,
        lo: i64,
        hi: i64,
    ) -> Vec<GridPoint> {
        self.points
            .iter()
            .filter(|p| region.contains(p.coords()))
            .filter(|p| (lo..=hi).contains(&p.attributes.get(attribute)))
            .copied()
            .collect()
    }

    /// Like [`FlatStore::scan_filter`], resolving the attribute by name.
    pub fn scan_filter_named(
        &self,
        region: &QueryRegion,
        attribute: &str,
        lo: i64,
        hi: i64,
    ) -> Result<Vec<GridPoint>> {
        let attribute: AttributeId = attribute.parse()?;
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "empty attribute range [{lo}, {hi}]"
            )));
        }
        Ok(self.scan_filter(region, attribute, lo, hi))
    }
}

/// Canonical (sorted) order, so results can be compared as multisets.
pub fn canonical(mut points: Vec<GridPoint>) -> Vec<GridPoint> {
    points.sort_unstable();
    points
}
