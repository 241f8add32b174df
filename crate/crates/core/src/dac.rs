//! Directly Addressable Codes.
//!
//! Every value is cut into chunks of `width` bits, least significant chunk
//! first. Level `t` holds the `t`-th chunk of every value that has more than
//! `t` chunks, in the order of the values. A continuation bitmap on each
//! level (except the last) marks which values continue on the next level, so
//! the position on level `t + 1` is `rank1` of the continuation bitmap.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::bitvec::{BitVector, BitVectorBuilder};
use crate::error::{read_err, Error, Result};

/// Chunk widths considered by [`choose_chunk_width`].
pub const CANDIDATE_WIDTHS: [u8; 4] = [2, 4, 8, 16];

pub const MAX_CHUNK_WIDTH: u8 = 32;

/// Fixed-width array of small integers packed into 64-bit words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct PackedChunks {
    words: Vec<u64>,
    len: usize,
}

impl PackedChunks {
    fn with_capacity(len: usize, width: u8) -> Self {
        Self {
            words: Vec::with_capacity((len * width as usize).div_ceil(64)),
            len: 0,
        }
    }

    fn push(&mut self, value: u64, width: u8) {
        let width = width as usize;
        let bit = self.len * width;
        let (w, off) = (bit / 64, bit % 64);
        if w == self.words.len() {
            self.words.push(0);
        }
        self.words[w] |= value << off;
        if off + width > 64 {
            self.words.push(value >> (64 - off));
        }
        self.len += 1;
    }

    #[inline]
    fn get(&self, i: usize, width: u8) -> u64 {
        let width = width as usize;
        let mask = (1u64 << width) - 1;
        let bit = i * width;
        let (w, off) = (bit / 64, bit % 64);
        let mut v = self.words[w] >> off;
        if off + width > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        v & mask
    }

    fn byte_len(&self, width: u8) -> usize {
        (self.len * width as usize).div_ceil(8)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Level {
    chunks: PackedChunks,
    /// Absent on the last level.
    continues: Option<BitVector>,
}

/// Variable-length integer sequence with random access.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DacSequence {
    len: usize,
    width: u8,
    levels: Vec<Level>,
}

impl Default for DacSequence {
    fn default() -> Self {
        Self::encode(&[], CANDIDATE_WIDTHS[0]).expect("valid width")
    }
}

/// Number of bits needed to write `v`, with zero taking one bit.
#[inline]
fn bit_len(v: u64) -> u32 {
    (64 - v.leading_zeros()).max(1)
}

#[inline]
fn chunk_count(v: u64, width: u8) -> usize {
    bit_len(v).div_ceil(u32::from(width)) as usize
}

/// Exact encoded size in bits (chunks plus continuation bits) for each
/// chunk width, computed from the histogram of value bit lengths.
pub fn encoded_size_bits(values: &[u64], width: u8) -> u64 {
    let mut hist = [0u64; 65];
    for &v in values {
        hist[bit_len(v) as usize] += 1;
    }
    encoded_size_from_histogram(&hist, width)
}

fn encoded_size_from_histogram(hist: &[u64; 65], width: u8) -> u64 {
    let w = u32::from(width);
    // per_level[t] = number of values with more than t chunks.
    let mut per_level = Vec::new();
    for (bits, &count) in hist.iter().enumerate().skip(1) {
        if count == 0 {
            continue;
        }
        let chunks = (bits as u32).div_ceil(w) as usize;
        if per_level.len() < chunks {
            per_level.resize(chunks, 0);
        }
        for slot in per_level.iter_mut().take(chunks) {
            *slot += count;
        }
    }
    let levels = per_level.len();
    per_level
        .iter()
        .enumerate()
        .map(|(t, &n)| n * u64::from(w) + if t + 1 < levels { n } else { 0 })
        .sum()
}

/// Picks the width in [`CANDIDATE_WIDTHS`] with the smallest encoded size,
/// preferring the narrower width on ties.
pub fn choose_chunk_width(values: &[u64]) -> u8 {
    let mut hist = [0u64; 65];
    for &v in values {
        hist[bit_len(v) as usize] += 1;
    }
    CANDIDATE_WIDTHS
        .iter()
        .copied()
        .min_by_key(|&w| encoded_size_from_histogram(&hist, w))
        .expect("non-empty candidate list")
}

impl DacSequence {
    /// Encodes `values` with a fixed chunk width of `width` bits (1..=32).
    pub fn encode(values: &[u64], width: u8) -> Result<Self> {
        if !(1..=MAX_CHUNK_WIDTH).contains(&width) {
            return Err(Error::InvalidParameter(format!(
                "DAC chunk width must be in 1..={MAX_CHUNK_WIDTH}, got {width}"
            )));
        }
        let num_levels = values
            .iter()
            .map(|&v| chunk_count(v, width))
            .max()
            .unwrap_or(1);
        let mask = (1u64 << width) - 1;
        let mut levels = Vec::with_capacity(num_levels);
        // Values that still have chunks left, already shifted down.
        let mut pending: Vec<u64> = values.to_vec();
        for t in 0..num_levels {
            let last = t + 1 == num_levels;
            let mut chunks = PackedChunks::with_capacity(pending.len(), width);
            let mut cont = BitVectorBuilder::with_capacity(pending.len());
            let mut next = Vec::new();
            for &v in &pending {
                chunks.push(v & mask, width);
                let rest = v >> width;
                if !last {
                    cont.push(rest != 0);
                    if rest != 0 {
                        next.push(rest);
                    }
                }
            }
            levels.push(Level {
                chunks,
                continues: (!last).then(|| cont.build()),
            });
            pending = next;
        }
        Ok(Self {
            len: values.len(),
            width,
            levels,
        })
    }

    /// Encodes with the width picked by [`choose_chunk_width`].
    pub fn encode_auto(values: &[u64]) -> Self {
        Self::encode(values, choose_chunk_width(values)).expect("candidate widths are valid")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn chunk_width(&self) -> u8 {
        self.width
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Returns the value at `i`, or `None` if out of range.
    pub fn access(&self, i: usize) -> Option<u64> {
        (i < self.len).then(|| self.get(i))
    }

    #[inline]
    pub(crate) fn get(&self, mut i: usize) -> u64 {
        debug_assert!(i < self.len);
        let mut value = 0u64;
        let mut shift = 0u32;
        for level in &self.levels {
            value |= level.chunks.get(i, self.width) << shift;
            match &level.continues {
                Some(cont) if cont.get(i) => {
                    i = cont.rank1_unchecked(i);
                    shift += u32::from(self.width);
                }
                _ => break,
            }
        }
        value
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn serialized_len(&self) -> usize {
        let mut n = 8 + 1 + 1;
        for level in &self.levels {
            n += 8 + level.chunks.byte_len(self.width);
            if let Some(c) = &level.continues {
                n += c.serialized_len();
            }
        }
        n
    }

    /// Writes length (u64), chunk width (u8), level count (u8) and then, per
    /// level, the chunk count (u64), the packed chunks and the continuation
    /// bitmap (omitted on the last level).
    pub fn serialize<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_u64::<LittleEndian>(self.len as u64)?;
        w.write_u8(self.width)?;
        w.write_u8(self.levels.len() as u8)?;
        for level in &self.levels {
            w.write_u64::<LittleEndian>(level.chunks.len as u64)?;
            let nbytes = level.chunks.byte_len(self.width);
            let mut buf = Vec::with_capacity(nbytes + 8);
            for word in &level.chunks.words {
                buf.extend_from_slice(&word.to_le_bytes());
            }
            buf.resize(nbytes, 0);
            w.write_all(&buf)?;
            if let Some(c) = &level.continues {
                c.serialize(w)?;
            }
        }
        Ok(())
    }

    pub fn deserialize<R: Read>(r: &mut R) -> Result<Self> {
        let len = r.read_u64::<LittleEndian>().map_err(read_err)? as usize;
        let width = r.read_u8().map_err(read_err)?;
        if !(1..=MAX_CHUNK_WIDTH).contains(&width) {
            return Err(Error::Corrupt(format!("DAC chunk width {width}")));
        }
        let num_levels = r.read_u8().map_err(read_err)? as usize;
        if num_levels == 0 {
            return Err(Error::Corrupt("DAC without levels".into()));
        }
        let mut levels = Vec::with_capacity(num_levels);
        let mut expected = len;
        for t in 0..num_levels {
            let count = r.read_u64::<LittleEndian>().map_err(read_err)? as usize;
            if count != expected {
                return Err(Error::Corrupt(format!(
                    "DAC level {t} has {count} chunks, expected {expected}"
                )));
            }
            let nbytes = count
                .checked_mul(width as usize)
                .ok_or_else(|| Error::Corrupt("DAC level too large".into()))?
                .div_ceil(8);
            let mut buf = Vec::new();
            r.take(nbytes as u64).read_to_end(&mut buf)?;
            if buf.len() != nbytes {
                return Err(Error::Truncated);
            }
            let words = buf
                .chunks(8)
                .map(|c| {
                    let mut b = [0u8; 8];
                    b[..c.len()].copy_from_slice(c);
                    u64::from_le_bytes(b)
                })
                .collect();
            let chunks = PackedChunks { words, len: count };
            let continues = if t + 1 < num_levels {
                let c = BitVector::deserialize(r)?;
                if c.len() != count {
                    return Err(Error::Corrupt(format!(
                        "DAC level {t} continuation bitmap has {} bits, expected {count}",
                        c.len()
                    )));
                }
                expected = c.count_ones();
                Some(c)
            } else {
                None
            };
            levels.push(Level { chunks, continues });
        }
        Ok(Self { len, width, levels })
    }
}
