//! Acceptance suite. Runs every criterion, prints one `[PASS]`/`[FAIL]` line
//! per criterion and exits non-zero if any failed.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::{
    airborne_las, clustered_cloud, random_box, selective_box, uniform_cloud, worked_example_points,
};
use k3lidar::las::{read_las, to_grid, write_las};
use k3lidar::oracle::canonical;
use k3lidar::{
    AttributeId, BuildOptions, FlatStore, GridPoint, K3LidarIndex, PointRecord, QueryRegion,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const CLOUDS: usize = 20;
const CLOUD_POINTS: usize = 100_000;
const CLOUD_SIDE: u32 = 1024;
const BOXES_PER_CLOUD: usize = 500;
const FILTERS_PER_CLOUD: usize = 500;

const TINY_SIDE: u64 = 8;
const TINY_MAX_POINTS: usize = 32;
const TINY_LAYOUTS_PER_COUNT: usize = 100;

const AIRBORNE_POINTS: usize = 1_000_000;
const MAX_SIZE_RATIO: f64 = 0.60;

const SPEED_QUERIES: usize = 100;
const SPEED_MAX_VOLUME_FRACTION: f64 = 0.01;
const SPEEDUP_TARGET: f64 = 5.0;
const SPEEDUP_GUARD: f64 = 2.0;

/// Instances checked with `verify_invariants`, and the violations found.
static VERIFIED: AtomicUsize = AtomicUsize::new(0);
static VIOLATIONS: Mutex<Vec<String>> = Mutex::new(Vec::new());

fn build(points: &[GridPoint], options: &BuildOptions) -> K3LidarIndex {
    let index = K3LidarIndex::build(points, options).expect("build");
    VERIFIED.fetch_add(1, Ordering::Relaxed);
    if let Err(e) = index.verify_invariants() {
        VIOLATIONS.lock().unwrap().push(format!(
            "k={} l={} n={}: {e}",
            options.k,
            options.leaf_threshold,
            points.len()
        ));
    }
    index
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn test_clouds() -> Vec<(String, Vec<GridPoint>, BuildOptions)> {
    let configs = [(2, 100), (2, 16), (3, 64), (4, 100)];
    (0..CLOUDS)
        .map(|i| {
            let mut rng = StdRng::seed_from_u64(1000 + i as u64);
            let (kind, points) = if i % 2 == 0 {
                ("uniform", uniform_cloud(&mut rng, CLOUD_POINTS, CLOUD_SIDE))
            } else {
                (
                    "clustered",
                    clustered_cloud(&mut rng, CLOUD_POINTS, CLOUD_SIDE),
                )
            };
            let (k, l) = configs[(i / 2) % configs.len()];
            (
                format!("{kind} cloud #{i} (k={k}, l={l})"),
                points,
                BuildOptions::new(k, l),
            )
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut queries = 0;
    let mut returned = 0;
    for (name, points, options) in test_clouds() {
        let index = build(&points, &options);
        let oracle = FlatStore::new(points);
        let mut rng = StdRng::seed_from_u64(name.len() as u64 * 7919 + queries as u64);
        for q in 0..BOXES_PER_CLOUD {
            let region = if q % 2 == 0 {
                random_box(&mut rng, CLOUD_SIDE as u64)
            } else {
                selective_box(&mut rng, [CLOUD_SIDE as u64; 3], 0.01)
            };
            let got = canonical(index.get_region(&region));
            let expected = canonical(oracle.scan_region(&region));
            ensure(got == expected, || {
                format!(
                    "{name}: box {region:?} returned {} points, oracle {}",
                    got.len(),
                    expected.len()
                )
            })?;
            queries += 1;
            returned += got.len();
        }
    }
    Ok(format!(
        "{CLOUDS} clouds x {BOXES_PER_CLOUD} boxes, {queries} queries, {returned} points matched exactly"
    ))
}

fn criterion_2() -> Outcome {
    let mut queries = 0;
    let mut returned = 0;
    for (i, (name, points, options)) in test_clouds().into_iter().enumerate() {
        let index = build(&points, &options);
        let oracle = FlatStore::new(points);
        let mut rng = StdRng::seed_from_u64(2000 + i as u64);
        for _ in 0..FILTERS_PER_CLOUD {
            let region = random_box(&mut rng, CLOUD_SIDE as u64);
            let a = rng.random_range(0..=255i64);
            let b = rng.random_range(0..=255i64);
            let (lo, hi) = (a.min(b), a.max(b));
            let got = canonical(
                index
                    .filter_att_region(&region, AttributeId::Intensity, lo, hi)
                    .map_err(|e| e.to_string())?,
            );
            let expected = canonical(oracle.scan_filter(&region, AttributeId::Intensity, lo, hi));
            ensure(got == expected, || {
                format!(
                    "{name}: box {region:?}, intensity {lo}..={hi}: {} points, oracle {}",
                    got.len(),
                    expected.len()
                )
            })?;
            queries += 1;
            returned += got.len();
        }
    }
    Ok(format!(
        "{queries} (box, intensity range) pairs, {returned} points matched exactly"
    ))
}

/// A layout of `count` points in the 8^3 grid; some layouts reuse a small
/// pool of positions so duplicates and crowded cells are common.
fn tiny_layout(rng: &mut StdRng, count: usize) -> Vec<GridPoint> {
    let pool: Vec<[u32; 3]> = (0..rng.random_range(1..=8))
        .map(|_| std::array::from_fn(|_| rng.random_range(0..TINY_SIDE as u32)))
        .collect();
    let crowded = rng.random_bool(0.3);
    (0..count)
        .map(|_| {
            let c = if crowded {
                pool[rng.random_range(0..pool.len())]
            } else {
                std::array::from_fn(|_| rng.random_range(0..TINY_SIDE as u32))
            };
            GridPoint::new(c[0], c[1], c[2], common::random_attributes(rng))
        })
        .collect()
}

fn tiny_options(rng: &mut StdRng) -> BuildOptions {
    let k = [2u8, 2, 2, 3, 4, 8][rng.random_range(0..6)];
    let l = [1u32, 1, 2, 3, 5, 8, 32][rng.random_range(0..7)];
    let options = BuildOptions::new(k, l);
    if k == 2 {
        options.with_levels(3)
    } else {
        options
    }
}

fn criterion_3() -> Outcome {
    let all_boxes: Vec<QueryRegion> = {
        let spans: Vec<(u64, u64)> = (0..TINY_SIDE)
            .flat_map(|a| (a..TINY_SIDE).map(move |b| (a, b)))
            .collect();
        let mut boxes = Vec::with_capacity(spans.len().pow(3));
        for &(x0, x1) in &spans {
            for &(y0, y1) in &spans {
                for &(z0, z1) in &spans {
                    boxes.push(QueryRegion::new([x0, y0, z0], [x1, y1, z1]).unwrap());
                }
            }
        }
        boxes
    };
    let mut rng = StdRng::seed_from_u64(3);
    let (mut layouts, mut root_leaves, mut with_last_level, mut with_duplicates) = (0, 0, 0, 0);
    for count in 0..=TINY_MAX_POINTS {
        for _ in 0..TINY_LAYOUTS_PER_COUNT {
            let points = tiny_layout(&mut rng, count);
            let options = tiny_options(&mut rng);
            let index = build(&points, &options);
            layouts += 1;
            root_leaves += usize::from(index.topology().root_is_leaf());
            with_last_level += usize::from(index.last_level_points() > 0);
            let mut coords: Vec<_> = points.iter().map(|p| p.coords()).collect();
            coords.sort_unstable();
            coords.dedup();
            with_duplicates += usize::from(coords.len() < points.len());

            let oracle = FlatStore::new(points);
            let mut got = Vec::new();
            let mut expected = Vec::new();
            for region in &all_boxes {
                got.clear();
                got.extend(index.get_region(region));
                got.sort_unstable();
                expected.clear();
                expected.extend(
                    oracle
                        .points()
                        .iter()
                        .filter(|p| region.contains(p.coords()))
                        .copied(),
                );
                expected.sort_unstable();
                ensure(got == expected, || {
                    format!(
                        "{count} points, k={} l={}: box {region:?} returned {}, oracle {}",
                        options.k,
                        options.leaf_threshold,
                        got.len(),
                        expected.len()
                    )
                })?;
            }
        }
    }
    ensure(
        root_leaves > 0 && with_last_level > 0 && with_duplicates > 0,
        || {
            format!(
            "path coverage missing: {root_leaves} root leaves, {with_last_level} with last-level \
             cells, {with_duplicates} with duplicates"
        )
        },
    )?;
    Ok(format!(
        "{layouts} layouts ({TINY_LAYOUTS_PER_COUNT} per count 0..={TINY_MAX_POINTS}) x {} boxes; \
         {root_leaves} root leaves, {with_last_level} with last-level cells, {with_duplicates} \
         with duplicate points",
        all_boxes.len()
    ))
}

fn criterion_4() -> Outcome {
    let labelled = worked_example_points();
    let points: Vec<GridPoint> = labelled.iter().map(|(_, p)| *p).collect();
    let index = build(&points, &BuildOptions::new(2, 3));
    let topo = index.topology();
    let payload = index.payload();
    let bit = |b: bool| u8::from(b);

    ensure(index.config().side == 8, || {
        format!("cube side {}", index.config().side)
    })?;
    ensure(topo.t.access(0) == Some(true), || "T[0] != 1".into())?;
    ensure(topo.t.access(1) == Some(false), || "T[1] != 0".into())?;
    ensure(topo.h.access(0) == Some(false), || "H[0] != 0".into())?;
    let n_prefix: Vec<u8> = (0..3).filter_map(|i| topo.n.access(i)).map(bit).collect();
    ensure(n_prefix == [0, 0, 1], || {
        format!("N prefix {n_prefix:?}, want 001")
    })?;
    let first = [
        payload.x.access(0),
        payload.y.access(0),
        payload.z.access(0),
    ];
    ensure(first == [Some(1), Some(0), Some(0)], || {
        format!("first local coordinates {first:?}, want <1,0,0>")
    })?;
    let point2 = labelled.iter().find(|(id, _)| *id == 2).unwrap().1;
    let first_attrs = payload.attributes(0);
    ensure(first_attrs == point2.attributes, || {
        format!("first stored point has {first_attrs:?}, want point 2")
    })?;
    let group: Vec<u64> = (0..3)
        .map(|i| u64::from(payload.attributes(i).intensity) / 10)
        .collect();
    ensure(group == [2, 3, 1], || {
        format!("first leaf holds points {group:?}, want [2, 3, 1]")
    })?;

    let oracle = FlatStore::new(points);
    let mut boxes = 0;
    for x0 in 0..8u64 {
        for x1 in x0..8 {
            for y0 in 0..8u64 {
                for y1 in y0..8 {
                    for z0 in 0..8u64 {
                        for z1 in z0..8 {
                            let r = QueryRegion::new([x0, y0, z0], [x1, y1, z1]).unwrap();
                            ensure(
                                canonical(index.get_region(&r))
                                    == canonical(oracle.scan_region(&r)),
                                || format!("box {r:?} disagrees with the oracle"),
                            )?;
                            boxes += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "T[0]=1, T[1]=0, H[0]=0, N starts 001 for leaf {{2,3,1}}, point 2 at <1,0,0>; \
         {boxes} boxes match the oracle"
    ))
}

struct AirborneFixture {
    records: Vec<PointRecord>,
    las_bytes: Vec<u8>,
    points: Vec<GridPoint>,
    index: K3LidarIndex,
    index_bytes: Vec<u8>,
}

fn airborne_fixture() -> AirborneFixture {
    let mut rng = StdRng::seed_from_u64(5);
    let (header, records) = airborne_las(&mut rng, AIRBORNE_POINTS);
    let mut las_bytes = Vec::new();
    write_las(&mut las_bytes, &header, &records).unwrap();
    let dataset = read_las(&las_bytes[..]).unwrap();
    let grid = to_grid(&dataset.points, &dataset.header);
    let index = build(
        &grid.points,
        &BuildOptions::default().with_transform(grid.transform),
    );
    let index_bytes = index.to_bytes();
    AirborneFixture {
        records,
        las_bytes,
        points: grid.points,
        index,
        index_bytes,
    }
}

fn criterion_5(f: &AirborneFixture) -> Outcome {
    let payload = 20 * f.records.len();
    let ratio = f.index_bytes.len() as f64 / payload as f64;
    let msg = format!(
        "{} points: index {} bytes vs {} bytes of LAS point records = {:.1}% (limit {:.0}%), \
         {:.2} bits/point",
        f.records.len(),
        f.index_bytes.len(),
        payload,
        100.0 * ratio,
        100.0 * MAX_SIZE_RATIO,
        f.index_bytes.len() as f64 * 8.0 / f.records.len() as f64
    );
    if ratio <= MAX_SIZE_RATIO {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6(f: &AirborneFixture) -> Outcome {
    let extent: [u64; 3] = std::array::from_fn(|a| {
        f.points
            .iter()
            .map(|p| u64::from(p.coords()[a]))
            .max()
            .unwrap()
            + 1
    });
    let oracle = FlatStore::new(f.points.clone());
    let mut rng = StdRng::seed_from_u64(6);
    let regions: Vec<QueryRegion> = (0..SPEED_QUERIES)
        .map(|_| selective_box(&mut rng, extent, SPEED_MAX_VOLUME_FRACTION))
        .collect();
    let volume = |r: &QueryRegion| {
        (0..3)
            .map(|a| (r.max[a] - r.min[a] + 1) as f64)
            .product::<f64>()
    };
    let domain = extent.iter().map(|&e| e as f64).product::<f64>();
    ensure(
        regions
            .iter()
            .all(|r| volume(r) <= SPEED_MAX_VOLUME_FRACTION * domain),
        || "a query box exceeds the volume limit".into(),
    )?;

    // Warm both paths once before timing.
    let mut hits = 0;
    for r in &regions {
        let got = canonical(f.index.get_region(r));
        ensure(got == canonical(oracle.scan_region(r)), || {
            format!("box {r:?} disagrees")
        })?;
        hits += got.len();
    }
    let time = |run: &dyn Fn(&QueryRegion) -> usize| {
        let mut total = Duration::ZERO;
        for r in &regions {
            let start = Instant::now();
            std::hint::black_box(run(r));
            total += start.elapsed();
        }
        total / regions.len() as u32
    };
    let index_mean = time(&|r| f.index.get_region(r).len());
    let scan_mean = time(&|r| oracle.scan_region(r).len());
    let speedup = scan_mean.as_secs_f64() / index_mean.as_secs_f64();
    let msg = format!(
        "{SPEED_QUERIES} boxes (<= {:.0}% of the data volume, {:.0} hits on average): index {:.1} us, \
         linear scan {:.1} us, speedup {speedup:.1}x (target {SPEEDUP_TARGET:.0}x, fail below \
         {SPEEDUP_GUARD:.0}x){}",
        100.0 * SPEED_MAX_VOLUME_FRACTION,
        hits as f64 / regions.len() as f64,
        index_mean.as_secs_f64() * 1e6,
        scan_mean.as_secs_f64() * 1e6,
        if speedup < SPEEDUP_TARGET { "; below target" } else { "" }
    );
    if speedup >= SPEEDUP_GUARD {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn record_key(r: &PointRecord) -> (i32, i32, i32, k3lidar::PointAttributes) {
    (r.x, r.y, r.z, r.attributes)
}

fn criterion_7(f: &AirborneFixture) -> Outcome {
    let mut instances: Vec<(String, K3LidarIndex)> = vec![(
        "airborne".into(),
        K3LidarIndex::from_bytes(&f.index_bytes).map_err(|e| e.to_string())?,
    )];
    for (name, points, options) in test_clouds().into_iter().step_by(5) {
        instances.push((name, build(&points, &options)));
    }
    instances.push(("empty".into(), build(&[], &BuildOptions::default())));
    let worked: Vec<_> = worked_example_points()
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    instances.push((
        "worked example".into(),
        build(&worked, &BuildOptions::new(2, 3)),
    ));
    let mut rng = StdRng::seed_from_u64(7);
    for count in [1, 5, 32] {
        let points = tiny_layout(&mut rng, count);
        instances.push((
            format!("tiny {count}"),
            build(&points, &tiny_options(&mut rng)),
        ));
    }
    for (name, index) in &instances {
        let bytes = index.to_bytes();
        let back = K3LidarIndex::from_bytes(&bytes).map_err(|e| format!("{name}: {e}"))?;
        ensure(back.to_bytes() == bytes, || {
            format!("{name}: re-serialization differs")
        })?;
        ensure(
            canonical(back.all_points()) == canonical(index.all_points()),
            || format!("{name}: points differ after reload"),
        )?;
    }
    ensure(instances[0].1.to_bytes() == f.index_bytes, || {
        "airborne: re-serialization differs".into()
    })?;

    // LAS -> index -> LAS on the airborne file and on a cloud with negative raw coordinates.
    let mut shifted = f.records[..50_000].to_vec();
    for r in &mut shifted {
        r.x -= 600_000_000;
        r.z -= 100_000;
    }
    let mut shifted_header = k3lidar::LasHeader::new([0.001; 3], [-12.5, 7.25, 0.0]);
    shifted_header.update_from_records(&shifted);
    let mut shifted_bytes = Vec::new();
    write_las(&mut shifted_bytes, &shifted_header, &shifted).unwrap();

    for (name, las_bytes) in [("airborne", &f.las_bytes), ("shifted", &shifted_bytes)] {
        let input = read_las(&las_bytes[..]).map_err(|e| e.to_string())?;
        let grid = to_grid(&input.points, &input.header);
        let index = K3LidarIndex::from_bytes(
            &build(
                &grid.points,
                &BuildOptions::default().with_transform(grid.transform),
            )
            .to_bytes(),
        )
        .map_err(|e| e.to_string())?;
        let transform = index.config().transform;
        let mut out_header = k3lidar::LasHeader::new(transform.scale, transform.offset);
        let exported: Vec<PointRecord> = index
            .all_points()
            .iter()
            .map(|p| transform.to_record(p))
            .collect();
        out_header.update_from_records(&exported);
        let mut out_bytes = Vec::new();
        write_las(&mut out_bytes, &out_header, &exported).unwrap();
        let output = read_las(&out_bytes[..]).map_err(|e| e.to_string())?;

        let mut a: Vec<_> = input.points.iter().map(record_key).collect();
        let mut b: Vec<_> = output.points.iter().map(record_key).collect();
        a.sort_unstable();
        b.sort_unstable();
        ensure(a == b, || format!("{name}: LAS point multiset changed"))?;
        ensure(
            output.header.scale == input.header.scale
                && output.header.offset == input.header.offset,
            || format!("{name}: scale or offset changed"),
        )?;
        let mut before = input.points.clone();
        let mut after = output.points.clone();
        before.sort_unstable_by_key(record_key);
        after.sort_unstable_by_key(record_key);
        let scale = input.header.scale;
        let worst = before
            .iter()
            .zip(&after)
            .map(|(x, y)| {
                let (p, q) = (input.header.real_coords(x), output.header.real_coords(y));
                (0..3)
                    .map(|a| (p[a] - q[a]).abs() / scale[a])
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        ensure(worst <= 1.0, || {
            format!("{name}: coordinates moved {worst} scale units")
        })?;
    }
    Ok(format!(
        "{} indexes re-serialize byte-exactly; LAS -> index -> LAS preserves both point multisets",
        instances.len()
    ))
}

fn criterion_8() -> Outcome {
    let verified = VERIFIED.load(Ordering::Relaxed);
    let violations = VIOLATIONS.lock().unwrap();
    if violations.is_empty() && verified > 0 {
        Ok(format!(
            "{verified} generated indexes verified, no violations"
        ))
    } else {
        Err(format!(
            "{} of {verified} indexes violate invariants; first: {}",
            violations.len(),
            violations.first().map_or("-", String::as_str)
        ))
    }
}

fn run(number: u32, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("[{tag}] criterion {number}: {title}: {detail} ({secs:.1} s)");
    ok
}

fn main() {
    let mut ok = true;
    ok &= run(1, "get_region matches the oracle", criterion_1);
    ok &= run(2, "filter_att_region matches the oracle", criterion_2);
    ok &= run(3, "exhaustive 8^3 boxes", criterion_3);
    ok &= run(4, "worked example structure", criterion_4);
    let fixture = airborne_fixture();
    ok &= run(5, "space", || criterion_5(&fixture));
    ok &= run(6, "selective query speed", || criterion_6(&fixture));
    ok &= run(7, "round trips", || criterion_7(&fixture));
    ok &= run(8, "structural invariants", criterion_8);
    if !ok {
        std::process::exit(1);
    }
}
