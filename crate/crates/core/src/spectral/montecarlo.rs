use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::ObstacleField;
use crate::error::{invalid, Result};

/// Settings for a Monte Carlo run of the killed walk.
#[derive(Clone, Debug)]
pub struct McConfig {
    pub n: usize,
    pub replicates: u64,
    pub seed: u64,
    pub start: usize,
    /// Also histogram S_t over walks that survive to n.
    pub snapshot_time: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McResult {
    pub replicates: u64,
    pub survivors: u64,
    pub survival: f64,
    pub std_error: f64,
    /// Positions at time n of the surviving walks, one count per window site.
    pub endpoint_counts: Vec<u64>,
    /// Positions at the snapshot time of the surviving walks.
    pub snapshot_counts: Option<Vec<u64>>,
    /// `kill_time_counts[k]` = number of walks first stepping onto an obstacle at step k.
    pub kill_time_counts: Vec<u64>,
}

const CHUNK: u64 = 8192;

/// Independent killed walks. Replicate `r` draws from the ChaCha8 stream `r`
/// of `seed`, so results do not depend on scheduling.
pub fn mc_killed_walk(field: &ObstacleField, cfg: &McConfig) -> Result<McResult> {
    let lat = field.lattice();
    if cfg.start >= lat.len() {
        return Err(invalid("start outside window"));
    }
    if cfg.snapshot_time.is_some_and(|t| t > cfg.n) {
        return Err(invalid("snapshot time exceeds horizon"));
    }
    let deg = lat.degree();
    // Neighbour table with usize::MAX for steps leaving the window.
    let mut table = vec![usize::MAX; lat.len() * deg];
    for s in 0..lat.len() {
        for a in 0..lat.dim() {
            let c = lat.coord(s, a);
            if c > 0 {
                table[s * deg + 2 * a] = s - lat.strides()[a];
            }
            if c + 1 < lat.sides()[a] {
                table[s * deg + 2 * a + 1] = s + lat.strides()[a];
            }
        }
    }
    let open = field.open_mask();
    let chunks = cfg.replicates.div_ceil(CHUNK);
    let parts: Vec<(Vec<u64>, Option<Vec<u64>>, Vec<u64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut ends = vec![0u64; lat.len()];
            let mut snaps = cfg.snapshot_time.map(|_| vec![0u64; lat.len()]);
            let mut kills = vec![0u64; cfg.n + 1];
            for r in c * CHUNK..((c + 1) * CHUNK).min(cfg.replicates) {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(r);
                let mut pos = cfg.start;
                let mut snap_pos = pos;
                let mut alive = open[pos];
                if !alive {
                    kills[0] += 1;
                    continue;
                }
                for step in 1..=cfg.n {
                    let nb = table[pos * deg + rng.gen_range(0..deg)];
                    if nb == usize::MAX || !open[nb] {
                        kills[step] += 1;
                        alive = false;
                        break;
                    }
                    pos = nb;
                    if Some(step) == cfg.snapshot_time {
                        snap_pos = pos;
                    }
                }
                if alive {
                    ends[pos] += 1;
                    if let Some(s) = snaps.as_mut() {
                        s[snap_pos] += 1;
                    }
                }
            }
            (ends, snaps, kills)
        })
        .collect();
    let mut endpoint_counts = vec![0u64; lat.len()];
    let mut snapshot_counts = cfg.snapshot_time.map(|_| vec![0u64; lat.len()]);
    let mut kill_time_counts = vec![0u64; cfg.n + 1];
    for (e, s, k) in parts {
        endpoint_counts.iter_mut().zip(e).for_each(|(a, b)| *a += b);
        if let (Some(acc), Some(s)) = (snapshot_counts.as_mut(), s) {
            acc.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
        kill_time_counts.iter_mut().zip(k).for_each(|(a, b)| *a += b);
    }
    let survivors: u64 = endpoint_counts.iter().sum();
    let m = cfg.replicates.max(1) as f64;
    let survival = survivors as f64 / m;
    let std_error = (survival * (1.0 - survival) / m).sqrt();
    Ok(McResult {
        replicates: cfg.replicates,
        survivors,
        survival,
        std_error,
        endpoint_counts,
        snapshot_counts,
        kill_time_counts,
    })
}
