//! 3D Morton (z-order) codes for 32-bit coordinates.
//!
//! Bits are interleaved as `... x1 y1 z1 x0 y0 z0`, so within each triple
//! `x` is the most significant axis. This matches the x-major child order
//! `k*k*x + k*y + z` used by the tree for `k = 2`.

/// Spreads the low 21 bits of `v` so that bit `i` lands on bit `3i`.
#[inline]
fn spread21(v: u64) -> u64 {
    let mut x = v & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

#[inline]
fn spread32(v: u32) -> u128 {
    let lo = spread21(u64::from(v & 0xffff)) as u128;
    let hi = spread21(u64::from(v >> 16)) as u128;
    lo | hi << 48
}

/// Morton code of `(x, y, z)`.
#[inline]
pub fn encode(x: u32, y: u32, z: u32) -> u128 {
    spread32(x) << 2 | spread32(y) << 1 | spread32(z)
}
