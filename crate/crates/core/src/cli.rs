//! Command-line front end: `build`, `query`, `stats` and `export`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::index::{BuildOptions, K3LidarIndex, QueryRegion, DEFAULT_K, DEFAULT_LEAF_THRESHOLD};
use crate::las::{self, CoordinateTransform, LasHeader};
use crate::point::{AttributeId, GridPoint};

#[derive(Debug, Parser)]
#[command(
    name = "k3lidar",
    version,
    about = "Compact indexed storage for LiDAR point clouds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from a format-0 LAS file.
    Build {
        /// Input LAS file.
        input: PathBuf,
        /// Output index file.
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Branching factor per axis.
        #[arg(short = 'k', default_value_t = DEFAULT_K)]
        k: u8,
        /// Maximum number of points in an unsplit node.
        #[arg(short = 'l', default_value_t = DEFAULT_LEAF_THRESHOLD)]
        l: u32,
    },
    /// Print the points inside a region.
    Query {
        /// Index file.
        index: PathBuf,
        /// Inclusive box `x1:y1:z1:x2:y2:z2` (default: everything).
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        /// Attribute filter `NAME:LO:HI` (inclusive).
        #[arg(long, allow_hyphen_values = true)]
        attr: Option<String>,
        /// Shorthand for `--attr intensity:LO:HI`.
        #[arg(long, value_name = "LO:HI", conflicts_with = "attr")]
        intensity: Option<String>,
        /// Region and output use real-world coordinates instead of grid units.
        #[arg(long)]
        real: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Write results here instead of standard output.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Print size and shape statistics of an index.
    Stats { index: PathBuf },
    /// Write every indexed point back to a LAS file.
    Export {
        index: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Las,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "x",
    "y",
    "z",
    "intensity",
    "return_number",
    "number_of_returns",
    "scan_direction_flag",
    "edge_of_flight_line",
    "classification",
    "scan_angle_rank",
    "user_data",
    "point_source_id",
];

/// Runs one command; results go to `out`, diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Build {
            input,
            output,
            k,
            l,
        } => cmd_build(&input, &output, k, l, out),
        Command::Query {
            index,
            region,
            attr,
            intensity,
            real,
            format,
            output,
        } => {
            let attr = attr.or(intensity.map(|r| format!("intensity:{r}")));
            let request = QueryRequest {
                region: region.as_deref(),
                attr: attr.as_deref(),
                real,
                format,
            };
            match output {
                Some(path) => {
                    let mut f = BufWriter::new(File::create(path)?);
                    cmd_query(&index, &request, &mut f, err)?;
                    f.flush()?;
                    Ok(())
                }
                None => cmd_query(&index, &request, out, err),
            }
        }
        Command::Stats { index } => cmd_stats(&index, out),
        Command::Export { index, output } => cmd_export(&index, &output, out),
    }
}

pub fn cmd_build(
    input: &std::path::Path,
    output: &std::path::Path,
    k: u8,
    l: u32,
    out: &mut dyn Write,
) -> Result<()> {
    let start = Instant::now();
    let dataset = las::read_las_file(input)?;
    let inconsistent = dataset.inconsistent_returns();
    if inconsistent > 0 {
        writeln!(
            out,
            "warning: {inconsistent} records have a return number above their number of returns"
        )?;
    }
    let grid = las::to_grid(&dataset.points, &dataset.header);
    let options = BuildOptions::new(k, l).with_transform(grid.transform);
    let index = K3LidarIndex::build(&grid.points, &options)?;
    index.write_file(output)?;
    let stats = index.stats();
    writeln!(out, "points:     {}", stats.points)?;
    writeln!(out, "index size: {} bytes", stats.total_bytes)?;
    writeln!(out, "bits/point: {:.2}", stats.bits_per_point())?;
    writeln!(
        out,
        "vs LAS:     {:.1}% of the format-0 point block",
        100.0 * stats.ratio_to_las_payload()
    )?;
    writeln!(out, "elapsed:    {:.3} s", start.elapsed().as_secs_f64())?;
    Ok(())
}

/// Options of a `query` run.
#[derive(Clone, Copy, Debug)]
pub struct QueryRequest<'a> {
    pub region: Option<&'a str>,
    pub attr: Option<&'a str>,
    pub real: bool,
    pub format: OutputFormat,
}

pub fn cmd_query(
    index_path: &std::path::Path,
    request: &QueryRequest<'_>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let index = K3LidarIndex::read_file(index_path)?;
    let transform = index.config().transform;
    let filter = request.attr.map(parse_attr_filter).transpose()?;
    let region = match request.region {
        None => Some(QueryRegion::everything()),
        Some(s) => parse_region(s, request.real.then_some(&transform))?,
    };

    let start = Instant::now();
    let points = match (region, filter) {
        (None, _) => Vec::new(),
        (Some(r), None) => index.get_region(&r),
        (Some(r), Some((attribute, lo, hi))) => index.filter_att_region(&r, attribute, lo, hi)?,
    };
    let elapsed = start.elapsed();

    write_points(&points, &transform, request.real, request.format, out)?;
    writeln!(
        err,
        "{} points in {:.3} ms",
        points.len(),
        elapsed.as_secs_f64() * 1e3
    )?;
    Ok(())
}

pub fn cmd_stats(index_path: &std::path::Path, out: &mut dyn Write) -> Result<()> {
    let index = K3LidarIndex::read_file(index_path)?;
    writeln!(out, "{}", index.stats())?;
    Ok(())
}

pub fn cmd_export(
    index_path: &std::path::Path,
    output: &std::path::Path,
    out: &mut dyn Write,
) -> Result<()> {
    let index = K3LidarIndex::read_file(index_path)?;
    let transform = index.config().transform;
    let records: Vec<_> = index
        .all_points()
        .iter()
        .map(|p| transform.to_record(p))
        .collect();
    let mut header = LasHeader::new(transform.scale, transform.offset);
    header.update_from_records(&records);
    las::write_las_file(output, &header, &records)?;
    writeln!(out, "exported {} points", records.len())?;
    Ok(())
}

/// Parses `NAME:LO:HI`.
pub fn parse_attr_filter(s: &str) -> Result<(AttributeId, i64, i64)> {
    let bad = || Error::InvalidParameter(format!("attribute filter `{s}` is not NAME:LO:HI"));
    let mut parts = s.splitn(3, ':');
    let (Some(name), Some(lo), Some(hi)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let attribute: AttributeId = name.trim().parse()?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(Error::InvalidParameter(format!(
            "attribute range {lo}:{hi} is empty"
        )));
    }
    Ok((attribute, lo, hi))
}

/// Parses `x1:y1:z1:x2:y2:z2` into a grid box. With a transform the values
/// are real coordinates; the lower corner is floored and the upper corner
/// ceiled. Returns `None` when the box lies entirely below the grid.
pub fn parse_region(s: &str, real: Option<&CoordinateTransform>) -> Result<Option<QueryRegion>> {
    let bad = |why: &str| Error::InvalidRegion(format!("`{s}`: {why}"));
    let values: Vec<f64> = s
        .split(':')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("expected six numbers x1:y1:z1:x2:y2:z2"))?;
    if values.len() != 6 || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("expected six numbers x1:y1:z1:x2:y2:z2"));
    }
    let (lo, hi) = match real {
        Some(t) => {
            let lo = t
                .real_to_grid([values[0], values[1], values[2]])
                .map(f64::floor);
            let hi = t
                .real_to_grid([values[3], values[4], values[5]])
                .map(f64::ceil);
            (lo, hi)
        }
        None => {
            if values.iter().any(|v| v.fract() != 0.0) {
                return Err(bad("grid coordinates must be integers"));
            }
            (
                [values[0], values[1], values[2]],
                [values[3], values[4], values[5]],
            )
        }
    };
    if (0..3).any(|a| lo[a] > hi[a]) {
        return Err(bad("lower corner exceeds upper corner"));
    }
    if hi.iter().any(|&v| v < 0.0) {
        return Ok(None);
    }
    let clamp = |v: f64| v.max(0.0).min(u64::MAX as f64) as u64;
    Ok(Some(QueryRegion::new(lo.map(clamp), hi.map(clamp))?))
}

fn decimals_for(scale: f64) -> usize {
    if scale >= 1.0 {
        0
    } else {
        ((-scale.log10()).ceil() as usize).min(9)
    }
}

fn write_points(
    points: &[GridPoint],
    transform: &CoordinateTransform,
    real: bool,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<()> {
    if format == OutputFormat::Las {
        let records: Vec<_> = points.iter().map(|p| transform.to_record(p)).collect();
        let mut header = LasHeader::new(transform.scale, transform.offset);
        header.update_from_records(&records);
        return las::write_las(out, &header, &records);
    }
    let sep = if format == OutputFormat::Csv {
        ","
    } else {
        " "
    };
    if format == OutputFormat::Csv {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    }
    let decimals: [usize; 3] = std::array::from_fn(|a| decimals_for(transform.scale[a]));
    let mut line = String::new();
    for p in points {
        line.clear();
        if real {
            let c = transform.to_real(p.coords());
            for a in 0..3 {
                line.push_str(&format!("{:.*}{sep}", decimals[a], c[a]));
            }
        } else {
            line.push_str(&format!("{}{sep}{}{sep}{}{sep}", p.x, p.y, p.z));
        }
        let a = &p.attributes;
        line.push_str(&format!(
            "{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}",
            a.intensity,
            a.return_number,
            a.number_of_returns,
            u8::from(a.scan_direction_flag),
            u8::from(a.edge_of_flight_line),
            a.classification,
            a.scan_angle_rank,
            a.user_data,
            a.point_source_id
        ));
        writeln!(out, "{line}")?;
    }
    Ok(())
}
