//! Point and attribute types shared by the LAS reader, the index and the oracle.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The attributes of a Point Data Record Format 0 point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointAttributes {
    pub intensity: u16,
    /// 3 bits.
    pub return_number: u8,
    /// 3 bits.
    pub number_of_returns: u8,
    pub scan_direction_flag: bool,
    pub edge_of_flight_line: bool,
    pub classification: u8,
    pub scan_angle_rank: i8,
    pub user_data: u8,
    pub point_source_id: u16,
}

impl PointAttributes {
    /// Value of one attribute, widened to `i64`.
    pub fn get(&self, attribute: AttributeId) -> i64 {
        match attribute {
            AttributeId::Intensity => i64::from(self.intensity),
            AttributeId::ReturnNumber => i64::from(self.return_number),
            AttributeId::NumberOfReturns => i64::from(self.number_of_returns),
            AttributeId::ScanDirectionFlag => i64::from(self.scan_direction_flag),
            AttributeId::EdgeOfFlightLine => i64::from(self.edge_of_flight_line),
            AttributeId::Classification => i64::from(self.classification),
            AttributeId::ScanAngleRank => i64::from(self.scan_angle_rank),
            AttributeId::UserData => i64::from(self.user_data),
            AttributeId::PointSourceId => i64::from(self.point_source_id),
        }
    }
}

/// A point on the non-negative integer grid, together with its attributes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub x: u32,
    pub y: u32,
    pub z: u32,
    pub attributes: PointAttributes,
}

impl GridPoint {
    pub fn new(x: u32, y: u32, z: u32, attributes: PointAttributes) -> Self {
        Self {
            x,
            y,
            z,
            attributes,
        }
    }

    #[inline]
    pub fn coords(&self) -> [u32; 3] {
        [self.x, self.y, self.z]
    }
}

/// Identifies one of the stored attribute columns. The discriminant is the
/// id written in the index file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum AttributeId {
    Intensity = 0,
    ReturnNumber = 1,
    NumberOfReturns = 2,
    ScanDirectionFlag = 3,
    EdgeOfFlightLine = 4,
    Classification = 5,
    ScanAngleRank = 6,
    UserData = 7,
    PointSourceId = 8,
}

impl AttributeId {
    pub const ALL: [AttributeId; 9] = [
        AttributeId::Intensity,
        AttributeId::ReturnNumber,
        AttributeId::NumberOfReturns,
        AttributeId::ScanDirectionFlag,
        AttributeId::EdgeOfFlightLine,
        AttributeId::Classification,
        AttributeId::ScanAngleRank,
        AttributeId::UserData,
        AttributeId::PointSourceId,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttributeId::Intensity => "intensity",
            AttributeId::ReturnNumber => "return_number",
            AttributeId::NumberOfReturns => "number_of_returns",
            AttributeId::ScanDirectionFlag => "scan_direction_flag",
            AttributeId::EdgeOfFlightLine => "edge_of_flight_line",
            AttributeId::Classification => "classification",
            AttributeId::ScanAngleRank => "scan_angle_rank",
            AttributeId::UserData => "user_data",
            AttributeId::PointSourceId => "point_source_id",
        }
    }

    pub fn from_u8(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Whether the column is stored as a plain bitmap.
    pub fn is_flag(self) -> bool {
        matches!(
            self,
            AttributeId::ScanDirectionFlag | AttributeId::EdgeOfFlightLine
        )
    }
}

impl fmt::Display for AttributeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttributeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::UnknownAttribute(s.to_string()))
    }
}
