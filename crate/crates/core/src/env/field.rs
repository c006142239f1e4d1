use bitvec::prelude::*;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use crate::error::{invalid, Result};

/// How the window edge is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// The outermost layer is forced to be obstacles.
    AbsorbingPad,
    /// No pad; a walk stepping out of the window is killed.
    None,
}

impl Boundary {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Boundary::AbsorbingPad => 0,
            Boundary::None => 1,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Boundary::AbsorbingPad),
            1 => Some(Boundary::None),
            _ => None,
        }
    }
}

/// Bernoulli site obstacles on a window. A site is open with probability `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleField {
    lattice: Lattice,
    obstacles: BitVec<u64, Lsb0>,
    p: f64,
    seed: u64,
    boundary: Boundary,
}

const CHUNK: usize = 4096;

/// Sample a field. Site `i` is decided by the ChaCha8 stream of `seed` at word
/// position `2i`, so the result does not depend on how the work is split.
pub fn generate_field(
    d: usize,
    sides: &[usize],
    p: f64,
    seed: u64,
    boundary: Boundary,
) -> Result<ObstacleField> {
    if d < 2 || sides.len() != d {
        return Err(invalid(format!("need {d} sides, got {}", sides.len())));
    }
    if let Some(s) = sides.iter().find(|&&s| s < 3) {
        return Err(invalid(format!("side {s} < 3")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p = {p} outside [0, 1]")));
    }
    let lattice = Lattice::new(sides);
    let n = lattice.len();
    let chunks: Vec<Vec<bool>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_word_pos(2 * start as u128);
            (start..end)
                .map(|site| {
                    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                    let open = u < p;
                    let padded = boundary == Boundary::AbsorbingPad && lattice.is_outer(site);
                    padded || !open
                })
                .collect()
        })
        .collect();
    let mut obstacles = BitVec::<u64, Lsb0>::with_capacity(n);
    for c in chunks {
        obstacles.extend(c);
    }
    Ok(ObstacleField { lattice, obstacles, p, seed, boundary })
}

impl ObstacleField {
    /// Build a field from an explicit obstacle mask (1 = obstacle).
    pub fn from_mask(
        sides: &[usize],
        obstacle: &[bool],
        p: f64,
        seed: u64,
        boundary: Boundary,
    ) -> Result<Self> {
        let lattice = Lattice::new(sides);
        if obstacle.len() != lattice.len() {
            return Err(invalid("mask length does not match the window"));
        }
        let mut obstacles = BitVec::<u64, Lsb0>::with_capacity(lattice.len());
        obstacles.extend(obstacle.iter().copied());
        Ok(ObstacleField { lattice, obstacles, p, seed, boundary })
    }

    /// All sites open except the pad (when the boundary asks for one).
    pub fn open_window(sides: &[usize], boundary: Boundary) -> Self {
        let lattice = Lattice::new(sides);
        let mask: Vec<bool> = (0..lattice.len())
            .map(|s| boundary == Boundary::AbsorbingPad && lattice.is_outer(s))
            .collect();
        Self::from_mask(sides, &mask, 1.0, 0, boundary).expect("mask built from the same lattice")
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    #[inline]
    pub fn is_obstacle(&self, site: usize) -> bool {
        self.obstacles[site]
    }

    #[inline]
    pub fn is_open(&self, site: usize) -> bool {
        !self.obstacles[site]
    }

    pub fn set_obstacle(&mut self, site: usize, obstacle: bool) {
        self.obstacles.set(site, obstacle);
    }

    pub fn open_mask(&self) -> Vec<bool> {
        self.obstacles.iter().map(|b| !*b).collect()
    }

    pub fn open_count(&self) -> usize {
        self.obstacles.count_zeros()
    }

    pub fn obstacle_bits(&self) -> &BitSlice<u64, Lsb0> {
        &self.obstacles
    }

    /// The window centre, used as the origin of the walk.
    pub fn origin(&self) -> usize {
        self.lattice.center()
    }

    /// Site at `origin + off`.
    pub fn site_at(&self, off: &[i64]) -> Option<usize> {
        self.lattice.shifted(self.origin(), off)
    }
}

/// Seed of the `index`-th member of an ensemble drawn from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_densities() {
        let f = generate_field(2, &[5, 5], 1.0, 7, Boundary::None).unwrap();
        assert_eq!(f.open_count(), 25);
        let f = generate_field(2, &[5, 5], 0.0, 7, Boundary::None).unwrap();
        assert_eq!(f.open_count(), 0);
        let f = generate_field(2, &[5, 5], 1.0, 7, Boundary::AbsorbingPad).unwrap();
        assert_eq!(f.open_count(), 9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(generate_field(2, &[2, 5], 0.5, 0, Boundary::None).is_err());
        assert!(generate_field(2, &[5, 5], 1.5, 0, Boundary::None).is_err());
        assert!(generate_field(2, &[5, 5], f64::NAN, 0, Boundary::None).is_err());
        assert!(generate_field(3, &[5, 5], 0.5, 0, Boundary::None).is_err());
    }

    #[test]
    fn site_decision_is_keyed_by_index() {
        // A window whose first 20 000 sites coincide with a longer one.
        let a = generate_field(2, &[100, 200], 0.5, 11, Boundary::None).unwrap();
        let b = generate_field(2, &[101, 200], 0.5, 11, Boundary::None).unwrap();
        assert_eq!(a.obstacle_bits(), &b.obstacle_bits()[..20_000]);
    }
}
