//! The `K3L1` index file format. All integers are little-endian.
//!
//! ```text
//! magic "K3L1" | version u16 | k u8 | l u32 | levels u8
//! grid offset 3 x u32 | LAS scale 3 x f64 | LAS offset 3 x f64
//! T, H, N (bit vectors) | X, Y, Z (DAC sequences)
//! column count u8, then per column: id u8 | kind u8 (0 = DAC, 1 = bits) | data
//! ```

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{AttributeColumn, IndexConfig, IndexTopology, K3LidarIndex, LeafPayload};
use crate::bitvec::BitVector;
use crate::dac::DacSequence;
use crate::error::{read_err, Error, Result};
use crate::las::CoordinateTransform;
use crate::point::AttributeId;

pub const MAGIC: &[u8; 4] = b"K3L1";
pub const FORMAT_VERSION: u16 = 1;

const KIND_DAC: u8 = 0;
const KIND_BITS: u8 = 1;

/// Bytes before the first bit vector.
pub(crate) const HEADER_LEN: usize = 4 + 2 + 1 + 4 + 1 + 3 * 4 + 6 * 8;

impl K3LidarIndex {
    pub fn serialize<W: Write>(&self, w: &mut W) -> Result<()> {
        let cfg = &self.config;
        w.write_all(MAGIC)?;
        w.write_u16::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u8(cfg.k)?;
        w.write_u32::<LittleEndian>(cfg.leaf_threshold)?;
        w.write_u8(cfg.levels)?;
        for v in cfg.transform.grid_offset {
            // Two's complement bits of the signed LAS minimum.
            w.write_u32::<LittleEndian>(v as u32)?;
        }
        for v in cfg.transform.scale.iter().chain(&cfg.transform.offset) {
            w.write_f64::<LittleEndian>(*v)?;
        }
        self.topology.t.serialize(w)?;
        self.topology.h.serialize(w)?;
        self.topology.n.serialize(w)?;
        self.payload.x.serialize(w)?;
        self.payload.y.serialize(w)?;
        self.payload.z.serialize(w)?;
        w.write_u8(self.payload.columns.len() as u8)?;
        for (a, col) in AttributeId::ALL.iter().zip(&self.payload.columns) {
            w.write_u8(*a as u8)?;
            match col {
                AttributeColumn::Dac(d) => {
                    w.write_u8(KIND_DAC)?;
                    d.serialize(w)?;
                }
                AttributeColumn::Bits(b) => {
                    w.write_u8(KIND_BITS)?;
                    b.serialize(w)?;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.serialized_len());
        self.serialize(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn serialized_len(&self) -> usize {
        HEADER_LEN
            + self.topology.t.serialized_len()
            + self.topology.h.serialized_len()
            + self.topology.n.serialized_len()
            + self.payload.x.serialized_len()
            + self.payload.y.serialized_len()
            + self.payload.z.serialized_len()
            + 1
            + self
                .payload
                .columns
                .iter()
                .map(|c| 2 + c.serialized_len())
                .sum::<usize>()
    }

    pub fn deserialize<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(read_err)?;
        if &magic != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.read_u16::<LittleEndian>().map_err(read_err)?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let k = r.read_u8().map_err(read_err)?;
        let leaf_threshold = r.read_u32::<LittleEndian>().map_err(read_err)?;
        let levels = r.read_u8().map_err(read_err)?;
        let mut grid_offset = [0i32; 3];
        for v in &mut grid_offset {
            *v = r.read_u32::<LittleEndian>().map_err(read_err)? as i32;
        }
        let mut scale = [0.0; 3];
        let mut offset = [0.0; 3];
        for v in scale.iter_mut().chain(offset.iter_mut()) {
            *v = r.read_f64::<LittleEndian>().map_err(read_err)?;
        }
        if k < 2 || leaf_threshold < 1 || levels < 1 {
            return Err(Error::Corrupt(format!(
                "bad parameters k={k} l={leaf_threshold} levels={levels}"
            )));
        }
        let side = u64::from(k)
            .checked_pow(u32::from(levels))
            .filter(|&s| s <= 1 << 40)
            .ok_or_else(|| Error::Corrupt(format!("cube {k}^{levels} too large")))?;

        let t = BitVector::deserialize(r)?;
        let h = BitVector::deserialize(r)?;
        let n = BitVector::deserialize(r)?;
        let x = DacSequence::deserialize(r)?;
        let y = DacSequence::deserialize(r)?;
        let z = DacSequence::deserialize(r)?;

        let count = r.read_u8().map_err(read_err)? as usize;
        if count != AttributeId::ALL.len() {
            return Err(Error::Corrupt(format!(
                "expected {} attribute columns, found {count}",
                AttributeId::ALL.len()
            )));
        }
        let mut columns: Vec<Option<AttributeColumn>> = vec![None; count];
        for _ in 0..count {
            let id = r.read_u8().map_err(read_err)?;
            let attribute = AttributeId::from_u8(id)
                .ok_or_else(|| Error::Corrupt(format!("unknown attribute id {id}")))?;
            let kind = r.read_u8().map_err(read_err)?;
            let col = match kind {
                KIND_DAC if !attribute.is_flag() => {
                    AttributeColumn::Dac(DacSequence::deserialize(r)?)
                }
                KIND_BITS if attribute.is_flag() => {
                    AttributeColumn::Bits(BitVector::deserialize(r)?)
                }
                _ => {
                    return Err(Error::Corrupt(format!(
                        "column kind {kind} is not valid for {attribute}"
                    )))
                }
            };
            let slot = &mut columns[id as usize];
            if slot.is_some() {
                return Err(Error::Corrupt(format!("duplicate column {attribute}")));
            }
            *slot = Some(col);
        }
        let columns = columns
            .into_iter()
            .map(|c| c.expect("all ids seen"))
            .collect();

        let index = Self {
            config: IndexConfig {
                k,
                leaf_threshold,
                levels,
                side,
                transform: CoordinateTransform {
                    grid_offset,
                    scale,
                    offset,
                },
            },
            topology: IndexTopology::new(t, h, n),
            payload: LeafPayload { x, y, z, columns },
        };
        index.check_shape()?;
        Ok(index)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let index = Self::deserialize(&mut r)?;
        if !r.is_empty() {
            return Err(Error::Corrupt(format!("{} trailing bytes", r.len())));
        }
        Ok(index)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
