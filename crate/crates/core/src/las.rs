//! Reading and writing LAS files with Point Data Record Format 0.
//!
//! Headers of versions 1.0 to 1.4 are understood. Variable-length records
//! are skipped on input and never written.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{read_err, Error, Result};
use crate::point::{GridPoint, PointAttributes};

pub const LAS_SIGNATURE: &[u8; 4] = b"LASF";
pub const PDRF0_RECORD_LEN: u16 = 20;

const HEADER_LEN_1_2: u16 = 227;
const HEADER_LEN_1_3: u16 = 235;
const HEADER_LEN_1_4: u16 = 375;

#[derive(Clone, Debug, PartialEq)]
pub struct LasHeader {
    pub file_source_id: u16,
    pub global_encoding: u16,
    pub project_id: [u8; 16],
    pub version_major: u8,
    pub version_minor: u8,
    pub system_identifier: [u8; 32],
    pub generating_software: [u8; 32],
    pub creation_day: u16,
    pub creation_year: u16,
    pub header_size: u16,
    pub offset_to_point_data: u32,
    pub number_of_vlrs: u32,
    pub point_data_record_format: u8,
    pub point_record_length: u16,
    pub point_count: u64,
    pub scale: [f64; 3],
    pub offset: [f64; 3],
    pub min: [f64; 3],
    pub max: [f64; 3],
}

fn padded<const N: usize>(s: &str) -> [u8; N] {
    let mut out = [0u8; N];
    let n = s.len().min(N);
    out[..n].copy_from_slice(&s.as_bytes()[..n]);
    out
}

impl Default for LasHeader {
    fn default() -> Self {
        Self::new([0.01; 3], [0.0; 3])
    }
}

impl LasHeader {
    /// A LAS 1.2 header for an empty format-0 file with the given transform.
    pub fn new(scale: [f64; 3], offset: [f64; 3]) -> Self {
        Self {
            file_source_id: 0,
            global_encoding: 0,
            project_id: [0; 16],
            version_major: 1,
            version_minor: 2,
            system_identifier: padded("k3lidar"),
            generating_software: padded(concat!("k3lidar ", env!("CARGO_PKG_VERSION"))),
            creation_day: 0,
            creation_year: 0,
            header_size: HEADER_LEN_1_2,
            offset_to_point_data: u32::from(HEADER_LEN_1_2),
            number_of_vlrs: 0,
            point_data_record_format: 0,
            point_record_length: PDRF0_RECORD_LEN,
            point_count: 0,
            scale,
            offset,
            min: [0.0; 3],
            max: [0.0; 3],
        }
    }

    /// Header length this writer emits for the header's version.
    fn written_header_len(&self) -> u16 {
        match self.version_minor {
            0..=2 => HEADER_LEN_1_2,
            3 => HEADER_LEN_1_3,
            _ => HEADER_LEN_1_4,
        }
    }

    /// Real-world coordinates of a raw record.
    pub fn real_coords(&self, p: &PointRecord) -> [f64; 3] {
        let raw = [p.x, p.y, p.z];
        std::array::from_fn(|a| self.scale[a] * f64::from(raw[a]) + self.offset[a])
    }

    /// Sets the count and bounding box from `records`.
    pub fn update_from_records(&mut self, records: &[PointRecord]) {
        self.point_count = records.len() as u64;
        if records.is_empty() {
            self.min = [0.0; 3];
            self.max = [0.0; 3];
            return;
        }
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for r in records {
            let c = self.real_coords(r);
            for a in 0..3 {
                min[a] = min[a].min(c[a]);
                max[a] = max[a].max(c[a]);
            }
        }
        self.min = min;
        self.max = max;
    }
}

/// One format-0 point record with raw (scaled integer) coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointRecord {
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub attributes: PointAttributes,
}

impl PointRecord {
    pub fn read<R: Read>(r: &mut R) -> io::Result<Self> {
        let mut buf = [0u8; PDRF0_RECORD_LEN as usize];
        r.read_exact(&mut buf)?;
        Ok(Self::from_bytes(&buf))
    }

    pub fn from_bytes(b: &[u8; 20]) -> Self {
        let i32_at = |o: usize| i32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]]);
        let u16_at = |o: usize| u16::from_le_bytes([b[o], b[o + 1]]);
        let flags = b[14];
        Self {
            x: i32_at(0),
            y: i32_at(4),
            z: i32_at(8),
            attributes: PointAttributes {
                intensity: u16_at(12),
                return_number: flags & 0b111,
                number_of_returns: (flags >> 3) & 0b111,
                scan_direction_flag: flags & 0x40 != 0,
                edge_of_flight_line: flags & 0x80 != 0,
                classification: b[15],
                scan_angle_rank: b[16] as i8,
                user_data: b[17],
                point_source_id: u16_at(18),
            },
        }
    }

    pub fn to_bytes(&self) -> [u8; 20] {
        let a = &self.attributes;
        let mut b = [0u8; 20];
        b[0..4].copy_from_slice(&self.x.to_le_bytes());
        b[4..8].copy_from_slice(&self.y.to_le_bytes());
        b[8..12].copy_from_slice(&self.z.to_le_bytes());
        b[12..14].copy_from_slice(&a.intensity.to_le_bytes());
        b[14] = (a.return_number & 0b111)
            | (a.number_of_returns & 0b111) << 3
            | u8::from(a.scan_direction_flag) << 6
            | u8::from(a.edge_of_flight_line) << 7;
        b[15] = a.classification;
        b[16] = a.scan_angle_rank as u8;
        b[17] = a.user_data;
        b[18..20].copy_from_slice(&a.point_source_id.to_le_bytes());
        b
    }

    /// Return number exceeds the number of returns (both nonzero).
    pub fn has_inconsistent_returns(&self) -> bool {
        let a = &self.attributes;
        a.return_number != 0 && a.number_of_returns != 0 && a.return_number > a.number_of_returns
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LasDataset {
    pub header: LasHeader,
    pub points: Vec<PointRecord>,
}

impl LasDataset {
    /// Records whose return number exceeds their number of returns. Such
    /// files exist in the wild, so they are accepted and only reported.
    pub fn inconsistent_returns(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.has_inconsistent_returns())
            .count()
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(read_err)?;
    Ok(b)
}

fn read_f64x3<R: Read>(r: &mut R) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for v in &mut out {
        *v = r.read_f64::<LittleEndian>().map_err(read_err)?;
    }
    Ok(out)
}

fn skip<R: Read>(r: &mut R, n: u64) -> Result<()> {
    let copied = io::copy(&mut r.take(n), &mut io::sink())?;
    if copied != n {
        return Err(Error::Truncated);
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<LasHeader> {
    let sig: [u8; 4] = read_array(r).map_err(|_| Error::BadLasSignature)?;
    if &sig != LAS_SIGNATURE {
        return Err(Error::BadLasSignature);
    }
    let le = |e| read_err(e);
    let file_source_id = r.read_u16::<LittleEndian>().map_err(le)?;
    let global_encoding = r.read_u16::<LittleEndian>().map_err(le)?;
    let project_id = read_array::<16, _>(r)?;
    let version_major = r.read_u8().map_err(le)?;
    let version_minor = r.read_u8().map_err(le)?;
    let system_identifier = read_array::<32, _>(r)?;
    let generating_software = read_array::<32, _>(r)?;
    let creation_day = r.read_u16::<LittleEndian>().map_err(le)?;
    let creation_year = r.read_u16::<LittleEndian>().map_err(le)?;
    let header_size = r.read_u16::<LittleEndian>().map_err(le)?;
    let offset_to_point_data = r.read_u32::<LittleEndian>().map_err(le)?;
    let number_of_vlrs = r.read_u32::<LittleEndian>().map_err(le)?;
    let point_data_record_format = r.read_u8().map_err(le)?;
    let point_record_length = r.read_u16::<LittleEndian>().map_err(le)?;
    let legacy_count = r.read_u32::<LittleEndian>().map_err(le)?;
    let _legacy_by_return = read_array::<20, _>(r)?;
    let scale = read_f64x3(r)?;
    let offset = read_f64x3(r)?;
    // Stored as max x, min x, max y, min y, max z, min z.
    let mut min = [0.0; 3];
    let mut max = [0.0; 3];
    for a in 0..3 {
        max[a] = r.read_f64::<LittleEndian>().map_err(le)?;
        min[a] = r.read_f64::<LittleEndian>().map_err(le)?;
    }
    let mut consumed = u64::from(HEADER_LEN_1_2);

    if version_major != 1 {
        return Err(Error::BadLasHeader(format!(
            "unsupported version {version_major}.{version_minor}"
        )));
    }
    if header_size < HEADER_LEN_1_2 {
        return Err(Error::BadLasHeader(format!(
            "header size {header_size} is smaller than {HEADER_LEN_1_2}"
        )));
    }
    if offset_to_point_data < u32::from(header_size) {
        return Err(Error::BadLasHeader(format!(
            "point data offset {offset_to_point_data} lies inside the {header_size}-byte header"
        )));
    }
    if point_data_record_format != 0 {
        return Err(Error::UnsupportedPointFormat(point_data_record_format));
    }
    if point_record_length < PDRF0_RECORD_LEN {
        return Err(Error::RecordTooShort(point_record_length));
    }
    if scale.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return Err(Error::BadLasHeader(format!("non-positive scale {scale:?}")));
    }

    let mut point_count = u64::from(legacy_count);
    if version_minor >= 4 && header_size >= HEADER_LEN_1_4 {
        let _waveform = r.read_u64::<LittleEndian>().map_err(le)?;
        let _first_evlr = r.read_u64::<LittleEndian>().map_err(le)?;
        let _num_evlrs = r.read_u32::<LittleEndian>().map_err(le)?;
        let count64 = r.read_u64::<LittleEndian>().map_err(le)?;
        consumed += 8 + 8 + 4 + 8;
        if count64 != 0 {
            point_count = count64;
        }
    }
    if point_count > 0 && (0..3).any(|a| min[a] > max[a]) {
        return Err(Error::BadLasHeader(format!(
            "bounding box min {min:?} exceeds max {max:?}"
        )));
    }

    skip(r, u64::from(offset_to_point_data) - consumed)?;

    Ok(LasHeader {
        file_source_id,
        global_encoding,
        project_id,
        version_major,
        version_minor,
        system_identifier,
        generating_software,
        creation_day,
        creation_year,
        header_size,
        offset_to_point_data,
        number_of_vlrs,
        point_data_record_format,
        point_record_length,
        point_count,
        scale,
        offset,
        min,
        max,
    })
}

/// Parses a format-0 LAS stream. Exactly `point_count` records are read.
pub fn read_las<R: Read>(mut r: R) -> Result<LasDataset> {
    let header = read_header(&mut r)?;
    let extra = u64::from(header.point_record_length - PDRF0_RECORD_LEN);
    let mut points = Vec::with_capacity(header.point_count.min(1 << 24) as usize);
    let mut buf = [0u8; PDRF0_RECORD_LEN as usize];
    for found in 0..header.point_count {
        let truncated = || Error::TruncatedPoints {
            expected: header.point_count,
            found,
        };
        r.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => truncated(),
            _ => Error::Io(e),
        })?;
        points.push(PointRecord::from_bytes(&buf));
        if extra > 0 {
            skip(&mut r, extra).map_err(|e| match e {
                Error::Truncated => truncated(),
                e => e,
            })?;
        }
    }
    Ok(LasDataset { header, points })
}

pub fn read_las_file(path: impl AsRef<std::path::Path>) -> Result<LasDataset> {
    let f = std::fs::File::open(path)?;
    read_las(io::BufReader::new(f))
}

/// Writes a format-0 LAS file with no variable-length records.
///
/// The point count, header size, data offset and per-return counts are
/// derived from `records`; every other header field is copied verbatim.
pub fn write_las<W: Write>(mut w: W, header: &LasHeader, records: &[PointRecord]) -> Result<()> {
    let header_len = header.written_header_len();
    let count = records.len() as u64;
    let v14 = header_len == HEADER_LEN_1_4;

    let mut by_return = [0u64; 15];
    for r in records {
        let rn = r.attributes.return_number as usize;
        if (1..=15).contains(&rn) {
            by_return[rn - 1] += 1;
        }
    }
    let legacy_fits = count <= u64::from(u32::MAX);
    if !legacy_fits && !v14 {
        return Err(Error::InvalidParameter(format!(
            "{count} points need a LAS 1.4 header"
        )));
    }

    w.write_all(LAS_SIGNATURE)?;
    w.write_u16::<LittleEndian>(header.file_source_id)?;
    w.write_u16::<LittleEndian>(header.global_encoding)?;
    w.write_all(&header.project_id)?;
    w.write_u8(header.version_major)?;
    w.write_u8(header.version_minor)?;
    w.write_all(&header.system_identifier)?;
    w.write_all(&header.generating_software)?;
    w.write_u16::<LittleEndian>(header.creation_day)?;
    w.write_u16::<LittleEndian>(header.creation_year)?;
    w.write_u16::<LittleEndian>(header_len)?;
    w.write_u32::<LittleEndian>(u32::from(header_len))?;
    w.write_u32::<LittleEndian>(0)?;
    w.write_u8(0)?;
    w.write_u16::<LittleEndian>(PDRF0_RECORD_LEN)?;
    w.write_u32::<LittleEndian>(if legacy_fits { count as u32 } else { 0 })?;
    for n in &by_return[..5] {
        w.write_u32::<LittleEndian>(if legacy_fits { *n as u32 } else { 0 })?;
    }
    for v in header.scale.iter().chain(&header.offset) {
        w.write_f64::<LittleEndian>(*v)?;
    }
    for a in 0..3 {
        w.write_f64::<LittleEndian>(header.max[a])?;
        w.write_f64::<LittleEndian>(header.min[a])?;
    }
    if header_len >= HEADER_LEN_1_3 {
        w.write_u64::<LittleEndian>(0)?;
    }
    if v14 {
        w.write_u64::<LittleEndian>(0)?;
        w.write_u32::<LittleEndian>(0)?;
        w.write_u64::<LittleEndian>(count)?;
        for n in &by_return {
            w.write_u64::<LittleEndian>(*n)?;
        }
    }
    for r in records {
        w.write_all(&r.to_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_las_file(
    path: impl AsRef<std::path::Path>,
    header: &LasHeader,
    records: &[PointRecord],
) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_las(io::BufWriter::new(f), header, records)
}

/// Affine map between the non-negative index grid and real coordinates:
/// `real = scale * (grid + grid_offset) + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoordinateTransform {
    /// Minimum raw LAS integer per axis.
    pub grid_offset: [i32; 3],
    pub scale: [f64; 3],
    pub offset: [f64; 3],
}

impl Default for CoordinateTransform {
    fn default() -> Self {
        Self {
            grid_offset: [0; 3],
            scale: [1.0; 3],
            offset: [0.0; 3],
        }
    }
}

impl CoordinateTransform {
    pub fn to_raw(&self, grid: [u32; 3]) -> [i32; 3] {
        std::array::from_fn(|a| (i64::from(grid[a]) + i64::from(self.grid_offset[a])) as i32)
    }

    pub fn to_real(&self, grid: [u32; 3]) -> [f64; 3] {
        let raw = self.to_raw(grid);
        std::array::from_fn(|a| self.scale[a] * f64::from(raw[a]) + self.offset[a])
    }

    /// Real coordinate to fractional grid coordinate (not rounded).
    pub fn real_to_grid(&self, real: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| {
            (real[a] - self.offset[a]) / self.scale[a] - f64::from(self.grid_offset[a])
        })
    }

    pub fn to_record(&self, p: &GridPoint) -> PointRecord {
        let [x, y, z] = self.to_raw(p.coords());
        PointRecord {
            x,
            y,
            z,
            attributes: p.attributes,
        }
    }
}

/// Result of shifting raw LAS coordinates so that every axis starts at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GridConversion {
    pub points: Vec<GridPoint>,
    pub transform: CoordinateTransform,
}

/// Converts records to grid points by subtracting the per-axis minimum raw
/// value. The LAS scale and offset are kept for reconstruction.
pub fn to_grid(records: &[PointRecord], header: &LasHeader) -> GridConversion {
    let mut min = [i32::MAX; 3];
    for r in records {
        min[0] = min[0].min(r.x);
        min[1] = min[1].min(r.y);
        min[2] = min[2].min(r.z);
    }
    if records.is_empty() {
        min = [0; 3];
    }
    let shift = |v: i32, a: usize| (i64::from(v) - i64::from(min[a])) as u32;
    let points = records
        .iter()
        .map(|r| GridPoint::new(shift(r.x, 0), shift(r.y, 1), shift(r.z, 2), r.attributes))
        .collect();
    GridConversion {
        points,
        transform: CoordinateTransform {
            grid_offset: min,
            scale: header.scale,
            offset: header.offset,
        },
    }
}
