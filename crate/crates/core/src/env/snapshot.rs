//! Binary field snapshots.
//!
//! Layout: magic `RWRO1`, then little-endian `u8 d`, `u32 sides[d]`, `f64 p`,
//! `u64 seed`, `u8 boundary` (0 = absorbing pad, 1 = none), then the occupancy
//! bits in row-major site order (axis 0 slowest), 1 = obstacle, packed eight
//! per byte with site `8k + j` in bit `j` of byte `k`.

use std::io::{Read, Write};

use super::field::{Boundary, ObstacleField};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"RWRO1";

pub fn write_snapshot<W: Write>(field: &ObstacleField, mut w: W) -> Result<()> {
    let lat = field.lattice();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&[lat.dim() as u8])?;
    for &s in lat.sides() {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&field.p().to_le_bytes())?;
    w.write_all(&field.seed().to_le_bytes())?;
    w.write_all(&[field.boundary().to_byte()])?;
    let mut bytes = vec![0u8; lat.len().div_ceil(8)];
    for site in field.obstacle_bits().iter_ones() {
        bytes[site / 8] |= 1 << (site % 8);
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<ObstacleField> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let d = b1[0] as usize;
    if d == 0 {
        return Err(Error::Snapshot("zero dimension".into()));
    }
    let mut sides = Vec::with_capacity(d);
    for _ in 0..d {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        sides.push(u32::from_le_bytes(b4) as usize);
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let p = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b1)?;
    let boundary = Boundary::from_byte(b1[0])
        .ok_or_else(|| Error::Snapshot(format!("unknown boundary byte {}", b1[0])))?;
    let len: usize = sides.iter().product();
    let mut bytes = vec![0u8; len.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    let mask: Vec<bool> = (0..len).map(|s| bytes[s / 8] >> (s % 8) & 1 == 1).collect();
    ObstacleField::from_mask(&sides, &mask, p, seed, boundary)
}
