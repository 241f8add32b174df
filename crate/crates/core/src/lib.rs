//! Compact storage and querying of LiDAR point clouds.
//!
//! Points are moved onto a non-negative integer grid and indexed by a
//! k-ary octree whose subdivision stops once a node holds at most `l`
//! points. The tree topology is kept in plain bitmaps navigated with
//! rank/select, and leaf coordinates and attributes are stored in
//! Directly Addressable Codes, so region and attribute-filtered region
//! queries run on the compressed form.
//!
//! ```
//! use k3lidar::{BuildOptions, GridPoint, K3LidarIndex, PointAttributes, QueryRegion};
//!
//! let points: Vec<GridPoint> = (0..1000u32)
//!     .map(|i| GridPoint::new(i % 37, i % 101, i / 10, PointAttributes::default()))
//!     .collect();
//! let index = K3LidarIndex::build(&points, &BuildOptions::new(2, 16)).unwrap();
//! let hits = index.get_region(&QueryRegion::new([0, 0, 0], [9, 9, 99]).unwrap());
//! assert_eq!(hits.len(), points.iter().filter(|p| p.x < 10 && p.y < 10).count());
//! ```

pub mod bitvec;
pub mod cli;
pub mod dac;
pub mod error;
pub mod index;
pub mod las;
pub mod morton;
pub mod oracle;
pub mod point;

pub use bitvec::BitVector;
pub use dac::DacSequence;
pub use error::{Error, Result};
pub use index::{BuildOptions, IndexConfig, IndexStats, K3LidarIndex, QueryRegion};
pub use las::{CoordinateTransform, LasDataset, LasHeader, PointRecord};
pub use oracle::FlatStore;
pub use point::{AttributeId, GridPoint, PointAttributes};
