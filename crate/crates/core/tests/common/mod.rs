#![allow(dead_code)]

use k3lidar::{GridPoint, LasHeader, PointAttributes, PointRecord, QueryRegion};
use rand::rngs::StdRng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn attrs_with_intensity(intensity: u16) -> PointAttributes {
    PointAttributes {
        intensity,
        ..Default::default()
    }
}

/// The ten labelled points of the worked construction example (k = 2,
/// l = 3, an 8x8x8 cube), as `(label, point)`; intensity `I_id = 10 * id`.
///
/// Points 5, 8, 7, 6 share the first octant, the second octant is empty,
/// and points 2, 3, 1 form the leaf whose first stored point is point 2 at
/// global `(5, 0, 0)`, local `(1, 0, 0)`.
pub fn worked_example_points() -> Vec<(u32, GridPoint)> {
    let p = |id: u32, x, y, z| {
        (
            id,
            GridPoint::new(x, y, z, attrs_with_intensity(10 * id as u16)),
        )
    };
    vec![
        p(1, 6, 0, 1),
        p(2, 5, 0, 0),
        p(3, 5, 1, 0),
        p(4, 6, 6, 6),
        p(5, 0, 0, 0),
        p(6, 1, 1, 1),
        p(7, 1, 0, 0),
        p(8, 0, 0, 1),
        p(9, 7, 7, 7),
        p(10, 4, 5, 6),
    ]
}

pub fn random_attributes(rng: &mut StdRng) -> PointAttributes {
    let nr = rng.random_range(1..=4);
    PointAttributes {
        intensity: rng.random_range(0..=255),
        return_number: rng.random_range(1..=nr),
        number_of_returns: nr,
        scan_direction_flag: rng.random(),
        edge_of_flight_line: rng.random_bool(0.05),
        classification: rng.random_range(1..=7),
        scan_angle_rank: rng.random_range(-24..=28),
        user_data: rng.random_range(0..3),
        point_source_id: rng.random_range(175..=227),
    }
}

pub fn uniform_cloud(rng: &mut StdRng, n: usize, side: u32) -> Vec<GridPoint> {
    (0..n)
        .map(|_| {
            GridPoint::new(
                rng.random_range(0..side),
                rng.random_range(0..side),
                rng.random_range(0..side),
                random_attributes(rng),
            )
        })
        .collect()
}

/// Gaussian blobs stretched along x, like overlapping airborne strips.
pub fn clustered_cloud(rng: &mut StdRng, n: usize, side: u32) -> Vec<GridPoint> {
    let clusters: Vec<([f64; 3], [f64; 3])> = (0..rng.random_range(4..12))
        .map(|_| {
            let centre = [
                rng.random_range(0.0..side as f64),
                rng.random_range(0.0..side as f64),
                rng.random_range(0.0..side as f64 / 4.0),
            ];
            let s = side as f64;
            let spread = [
                rng.random_range(s / 8.0..s / 2.0),
                rng.random_range(s / 64.0..s / 16.0),
                rng.random_range(0.5..(s / 64.0).max(1.0)),
            ];
            (centre, spread)
        })
        .collect();
    let clamp = |v: f64| v.round().clamp(0.0, side as f64 - 1.0) as u32;
    (0..n)
        .map(|_| {
            let (c, s) = clusters[rng.random_range(0..clusters.len())];
            let coord: [u32; 3] =
                std::array::from_fn(|a| clamp(Normal::new(c[a], s[a]).unwrap().sample(rng)));
            GridPoint::new(coord[0], coord[1], coord[2], random_attributes(rng))
        })
        .collect()
}

/// Random inclusive box inside `[0, side)^3` with independently drawn corners.
pub fn random_box(rng: &mut StdRng, side: u64) -> QueryRegion {
    let a: [u64; 3] = std::array::from_fn(|_| rng.random_range(0..side));
    let b: [u64; 3] = std::array::from_fn(|_| rng.random_range(0..side));
    QueryRegion::new(
        std::array::from_fn(|i| a[i].min(b[i])),
        std::array::from_fn(|i| a[i].max(b[i])),
    )
    .unwrap()
}

/// Random box whose volume is at most `max_fraction` of `extent`'s volume.
pub fn selective_box(rng: &mut StdRng, extent: [u64; 3], max_fraction: f64) -> QueryRegion {
    let fraction = max_fraction * rng.random_range(0.05..=1.0);
    let a = rng.random_range(0.15..0.5);
    let b = rng.random_range(0.15..(0.85 - a));
    let mut min = [0u64; 3];
    let mut max = [0u64; 3];
    for (axis, e) in [a, b, 1.0 - a - b].into_iter().enumerate() {
        let len = ((extent[axis] as f64 * fraction.powf(e)).floor() as u64).max(1);
        let start = rng.random_range(0..=extent[axis] - len);
        min[axis] = start;
        max[axis] = start + len - 1;
    }
    QueryRegion::new(min, max).unwrap()
}

/// A synthetic airborne scan at roughly 0.5 points per square metre,
/// millimetre resolution: gently rolling terrain with vegetation and
/// buildings, flown in parallel strips, with the attribute ranges of
/// national airborne LiDAR tiles.
pub fn airborne_las(rng: &mut StdRng, n: usize) -> (LasHeader, Vec<PointRecord>) {
    let scale = [0.001; 3];
    let offset = [546_000.0, 4_798_000.0, 0.0];
    let area_side_m = (n as f64 / 0.5).sqrt();
    let strip_width = area_side_m / 6.0;
    let ground = |x: f64, y: f64| {
        60.0 + 25.0 * (x / 700.0).sin() * (y / 900.0).cos() + 8.0 * (x / 130.0 + y / 210.0).sin()
    };
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut records = Vec::with_capacity(n);
    while records.len() < n {
        let x = rng.random_range(0.0..area_side_m);
        let y = rng.random_range(0.0..area_side_m);
        let strip = (y / strip_width) as u16;
        let g = ground(x, y);
        let kind: f64 = rng.random();
        let (nr, class, height) = if kind < 0.65 {
            (1, 2, 0.0)
        } else if kind < 0.9 {
            let nr = rng.random_range(2..=4);
            (nr, rng.random_range(3..=5), rng.random_range(0.5..18.0))
        } else {
            (1, 6, rng.random_range(3.0..12.0))
        };
        for rn in 1..=nr {
            if records.len() == n {
                break;
            }
            let h = if rn == nr {
                0.0
            } else {
                height * (1.0 - (rn - 1) as f64 / nr as f64)
            };
            let z = g + h + noise.sample(rng);
            let intensity = if class == 2 {
                rng.random_range(20..=120)
            } else {
                rng.random_range(0..=255)
            };
            let scan_angle = ((y % strip_width) / strip_width * 52.0 - 24.0).round() as i8;
            records.push(PointRecord {
                x: (x / scale[0]).round() as i32,
                y: (y / scale[1]).round() as i32,
                z: (z / scale[2]).round() as i32,
                attributes: PointAttributes {
                    intensity,
                    return_number: rn as u8,
                    number_of_returns: nr as u8,
                    scan_direction_flag: rng.random(),
                    edge_of_flight_line: rng.random_bool(0.002),
                    classification: if rn < nr {
                        class
                    } else if class == 6 {
                        6
                    } else {
                        2
                    },
                    scan_angle_rank: scan_angle.clamp(-24, 28),
                    user_data: 0,
                    point_source_id: 175 + strip.min(52),
                },
            });
        }
    }
    let mut header = LasHeader::new(scale, offset);
    header.update_from_records(&records);
    (header, records)
}

pub fn sorted(mut v: Vec<GridPoint>) -> Vec<GridPoint> {
    v.sort_unstable();
    v
}
