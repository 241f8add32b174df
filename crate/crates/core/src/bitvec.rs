//! Plain bit vector with rank and select support.
//!
//! Bits are stored in 64-bit words. A rank directory keeps the cumulative
//! number of ones before every 512-bit block (12.5% overhead), and select
//! uses a sample of the block holding every 1024-th one followed by a
//! binary search over the directory and a local word scan.
//!
//! All ranks are 0-based and exclusive: `rank1(i)` counts the ones in
//! positions `[0, i)`. `select1(j)` takes a 1-based ordinal and returns the
//! 0-based position of the `j`-th one.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{read_err, Error, Result};

const WORD_BITS: usize = 64;
const WORDS_PER_BLOCK: usize = 8;
const BLOCK_BITS: usize = WORD_BITS * WORDS_PER_BLOCK;
const SELECT_SAMPLE: u64 = 1024;

/// Incrementally builds a [`BitVector`].
#[derive(Clone, Debug, Default)]
pub struct BitVectorBuilder {
    words: Vec<u64>,
    len: usize,
}

impl BitVectorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(WORD_BITS)),
            len: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let w = self.len / WORD_BITS;
        if w == self.words.len() {
            self.words.push(0);
        }
        if bit {
            self.words[w] |= 1 << (self.len % WORD_BITS);
        }
        self.len += 1;
    }

    /// Appends `count` copies of `bit`.
    pub fn push_run(&mut self, bit: bool, count: usize) {
        // Fill the current word bit by bit, then whole words at once.
        let mut left = count;
        while left > 0 && !self.len.is_multiple_of(WORD_BITS) {
            self.push(bit);
            left -= 1;
        }
        let fill = if bit { u64::MAX } else { 0 };
        while left >= WORD_BITS {
            self.words.push(fill);
            self.len += WORD_BITS;
            left -= WORD_BITS;
        }
        for _ in 0..left {
            self.push(bit);
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn build(self) -> BitVector {
        BitVector::from_raw_words(self.words, self.len)
    }
}

impl Extend<bool> for BitVectorBuilder {
    fn extend<I: IntoIterator<Item = bool>>(&mut self, iter: I) {
        for bit in iter {
            self.push(bit);
        }
    }
}

/// Immutable bit sequence with rank/select.
#[derive(Clone, Debug, Default)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
    /// `blocks[b]` = number of ones in blocks `0..b`; one trailing entry holds the total.
    blocks: Vec<u64>,
    /// `samples[s]` = block containing the one with 0-based ordinal `s * SELECT_SAMPLE`.
    samples: Vec<u32>,
}

impl PartialEq for BitVector {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.words == other.words
    }
}

impl Eq for BitVector {}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut b = BitVectorBuilder::new();
        b.extend(iter);
        b.build()
    }
}

impl BitVector {
    /// Builds a bit vector from a `'0'`/`'1'` string; other characters are ignored.
    pub fn from_bit_str(s: &str) -> Self {
        s.chars()
            .filter(|c| *c == '0' || *c == '1')
            .map(|c| c == '1')
            .collect()
    }

    fn from_raw_words(mut words: Vec<u64>, len: usize) -> Self {
        words.truncate(len.div_ceil(WORD_BITS));
        words.resize(len.div_ceil(WORD_BITS), 0);
        if !len.is_multiple_of(WORD_BITS) {
            let last = words.len() - 1;
            words[last] &= (1u64 << (len % WORD_BITS)) - 1;
        }
        let mut bv = Self {
            words,
            len,
            blocks: Vec::new(),
            samples: Vec::new(),
        };
        bv.rebuild_directory();
        bv
    }

    /// Recomputes the rank and select directories from the raw bits.
    pub fn rebuild_directory(&mut self) {
        let num_blocks = self.words.len().div_ceil(WORDS_PER_BLOCK);
        let mut blocks = Vec::with_capacity(num_blocks + 1);
        let mut samples = Vec::new();
        let mut acc = 0u64;
        for (b, chunk) in self.words.chunks(WORDS_PER_BLOCK).enumerate() {
            blocks.push(acc);
            let ones: u64 = chunk.iter().map(|w| u64::from(w.count_ones())).sum();
            // Every sampled ordinal that falls inside this block.
            let mut next = samples.len() as u64 * SELECT_SAMPLE;
            while next < acc + ones {
                samples.push(b as u32);
                next += SELECT_SAMPLE;
            }
            acc += ones;
        }
        blocks.push(acc);
        self.blocks = blocks;
        self.samples = samples;
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn count_ones(&self) -> usize {
        *self.blocks.last().unwrap_or(&0) as usize
    }

    #[inline]
    pub fn count_zeros(&self) -> usize {
        self.len - self.count_ones()
    }

    /// Returns the bit at position `i`, or `None` if out of range.
    pub fn access(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.get(i))
    }

    /// Counts ones in `[0, i)`; `None` if `i > len`.
    pub fn rank1(&self, i: usize) -> Option<usize> {
        (i <= self.len).then(|| self.rank1_unchecked(i))
    }

    /// Counts zeros in `[0, i)`; `None` if `i > len`.
    pub fn rank0(&self, i: usize) -> Option<usize> {
        (i <= self.len).then(|| i - self.rank1_unchecked(i))
    }

    /// Position of the `j`-th one (1-based ordinal).
    pub fn select1(&self, j: usize) -> Option<usize> {
        (j >= 1 && j <= self.count_ones()).then(|| self.select1_unchecked(j))
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub(crate) fn rank1_unchecked(&self, i: usize) -> usize {
        debug_assert!(i <= self.len);
        let block = i / BLOCK_BITS;
        let mut r = self.blocks[block];
        let word = i / WORD_BITS;
        for w in &self.words[block * WORDS_PER_BLOCK..word] {
            r += u64::from(w.count_ones());
        }
        let rem = i % WORD_BITS;
        if rem != 0 {
            r += u64::from((self.words[word] & ((1u64 << rem) - 1)).count_ones());
        }
        r as usize
    }

    #[inline]
    pub(crate) fn rank0_unchecked(&self, i: usize) -> usize {
        i - self.rank1_unchecked(i)
    }

    pub(crate) fn select1_unchecked(&self, j: usize) -> usize {
        debug_assert!(j >= 1 && j <= self.count_ones());
        let target = (j - 1) as u64;
        let s = (target / SELECT_SAMPLE) as usize;
        let mut lo = self.samples[s] as usize;
        let mut hi = match self.samples.get(s + 1) {
            Some(&b) => b as usize + 1,
            None => self.blocks.len() - 1,
        };
        // Last block whose prefix count is <= target.
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.blocks[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut left = target - self.blocks[lo];
        let mut word = lo * WORDS_PER_BLOCK;
        loop {
            let ones = u64::from(self.words[word].count_ones());
            if left < ones {
                return word * WORD_BITS + select_in_word(self.words[word], left as u32);
            }
            left -= ones;
            word += 1;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Bytes used by the raw bits (without directories).
    pub fn bits_size_bytes(&self) -> usize {
        self.len.div_ceil(8)
    }

    /// Bytes used by the rank/select directories.
    pub fn directory_size_bytes(&self) -> usize {
        self.blocks.len() * 8 + self.samples.len() * 4
    }

    pub fn serialized_len(&self) -> usize {
        8 + self.bits_size_bytes()
    }

    /// Writes the bit length (u64 LE) followed by the bits packed LSB-first.
    pub fn serialize<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_u64::<LittleEndian>(self.len as u64)?;
        let nbytes = self.bits_size_bytes();
        let mut buf = Vec::with_capacity(nbytes);
        for word in &self.words {
            buf.extend_from_slice(&word.to_le_bytes());
        }
        buf.truncate(nbytes);
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn deserialize<R: Read>(r: &mut R) -> Result<Self> {
        let len = r.read_u64::<LittleEndian>().map_err(read_err)?;
        let len = usize::try_from(len)
            .map_err(|_| Error::Corrupt(format!("bit vector length {len} too large")))?;
        let nbytes = len.div_ceil(8);
        let mut buf = Vec::new();
        r.take(nbytes as u64).read_to_end(&mut buf)?;
        if buf.len() != nbytes {
            return Err(Error::Truncated);
        }
        if len % 8 != 0 && buf[nbytes - 1] >> (len % 8) != 0 {
            return Err(Error::Corrupt("nonzero padding bits".into()));
        }
        let words = buf
            .chunks(8)
            .map(|c| {
                let mut b = [0u8; 8];
                b[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(b)
            })
            .collect();
        Ok(Self::from_raw_words(words, len))
    }
}

/// Position of the `k`-th (0-based) set bit of `w`.
#[inline]
fn select_in_word(mut w: u64, k: u32) -> usize {
    for _ in 0..k {
        w &= w - 1;
    }
    w.trailing_zeros() as usize
}
