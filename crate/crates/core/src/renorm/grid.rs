use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::env::ObstacleField;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxState {
    White,
    Black,
    /// Box not (fully) inside the window, or outside the classified region.
    Unknown,
}

/// First clause a black box failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlackReason {
    /// The neighbourhood meets the D set.
    DSet,
    /// No open component reaches L/10 sites in the 3^d boxes.
    NoCrossing,
    /// More than one does.
    SeveralCrossings,
    /// Some neighbouring box holds fewer than L/10 cluster sites.
    ThinNeighbour,
    /// Two cluster sites are more than C_D L apart inside the cluster.
    Distance,
}

struct Verdict {
    state: BoxState,
    reason: Option<BlackReason>,
    cluster: Vec<usize>,
    sampled: bool,
}

impl Verdict {
    fn unknown() -> Self {
        Verdict { state: BoxState::Unknown, reason: None, cluster: Vec::new(), sampled: false }
    }

    fn black(reason: BlackReason, sampled: bool) -> Self {
        Verdict { state: BoxState::Black, reason: Some(reason), cluster: Vec::new(), sampled }
    }
}

/// Box geometry: K_L((2L+1) i) shifted so that box 0 is centred at `anchor`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tiling {
    pub half_side: usize,
    pub anchor: Vec<i64>,
}

impl Tiling {
    pub fn for_field(field: &ObstacleField, half_side: usize) -> Self {
        Tiling { half_side, anchor: field.lattice().coords(field.origin()) }
    }

    pub fn side(&self) -> i64 {
        2 * self.half_side as i64 + 1
    }

    /// Index of the box containing window coordinates `c`.
    pub fn index_of_coords(&self, c: &[i64]) -> Vec<i64> {
        let l = self.half_side as i64;
        c.iter().zip(&self.anchor).map(|(x, a)| (x - a + l).div_euclid(self.side())).collect()
    }

    pub fn center(&self, i: &[i64]) -> Vec<i64> {
        i.iter().zip(&self.anchor).map(|(k, a)| a + k * self.side()).collect()
    }
}

/// Anything that can say whether a box is white.
pub trait BoxColouring {
    fn tiling(&self) -> Tiling;
    fn is_white(&self, i: &[i64]) -> bool;
}

/// Classifies boxes on first use and remembers the answer.
pub struct LazyBoxes<'a> {
    field: &'a ObstacleField,
    tiling: Tiling,
    c_d: f64,
    d_set: Option<&'a [bool]>,
    memo: RefCell<HashMap<Vec<i64>, BoxState>>,
}

impl<'a> LazyBoxes<'a> {
    pub fn new(field: &'a ObstacleField, half_side: usize, c_d: f64, d_set: Option<&'a [bool]>) -> Result<Self> {
        check_params(field, half_side, c_d, d_set)?;
        Ok(LazyBoxes { field, tiling: Tiling::for_field(field, half_side), c_d, d_set, memo: RefCell::new(HashMap::new()) })
    }

    pub fn state(&self, i: &[i64]) -> BoxState {
        if let Some(&s) = self.memo.borrow().get(i) {
            return s;
        }
        let s = classify_one(self.field, &self.tiling.center(i), self.tiling.half_side, self.c_d, self.d_set).state;
        self.memo.borrow_mut().insert(i.to_vec(), s);
        s
    }

    /// Boxes classified so far, by state.
    pub fn census(&self) -> (usize, usize, usize) {
        let memo = self.memo.borrow();
        let count = |t: BoxState| memo.values().filter(|&&s| s == t).count();
        (count(BoxState::White), count(BoxState::Black), count(BoxState::Unknown))
    }
}

impl BoxColouring for LazyBoxes<'_> {
    fn tiling(&self) -> Tiling {
        self.tiling.clone()
    }

    fn is_white(&self, i: &[i64]) -> bool {
        self.state(i) == BoxState::White
    }
}

impl BoxColouring for BoxGrid {
    fn tiling(&self) -> Tiling {
        Tiling { half_side: self.half_side, anchor: self.anchor.clone() }
    }

    fn is_white(&self, i: &[i64]) -> bool {
        self.state(i) == BoxState::White
    }
}

/// Boxes K_L((2L+1) i) anchored at the field origin.
#[derive(Clone, Debug, Serialize)]
pub struct BoxGrid {
    pub half_side: usize,
    pub c_d: f64,
    /// Window coordinates of the centre of box 0.
    pub anchor: Vec<i64>,
    /// Smallest box index per axis.
    pub lo: Vec<i64>,
    /// Number of box indices per axis.
    pub counts: Vec<usize>,
    /// Row-major over the index range, axis 0 slowest.
    pub states: Vec<BoxState>,
    pub reasons: Vec<Option<BlackReason>>,
    /// Crossing cluster of each white box (window sites, ascending).
    pub clusters: Vec<Vec<usize>>,
    /// Whether the distance clause was checked on a sample of pairs.
    pub sampled: Vec<bool>,
}

impl BoxGrid {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Index of the box containing window coordinates `c`.
    pub fn index_of_coords(&self, c: &[i64]) -> Vec<i64> {
        self.tiling().index_of_coords(c)
    }

    pub fn center(&self, i: &[i64]) -> Vec<i64> {
        self.tiling().center(i)
    }

    pub fn slot(&self, i: &[i64]) -> Option<usize> {
        let mut s = 0usize;
        for a in 0..self.dim() {
            let k = i[a] - self.lo[a];
            if k < 0 || k as usize >= self.counts[a] {
                return None;
            }
            s = s * self.counts[a] + k as usize;
        }
        Some(s)
    }

    pub fn index_at(&self, slot: usize) -> Vec<i64> {
        let mut rem = slot;
        let mut out = vec![0i64; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = self.lo[a] + (rem % self.counts[a]) as i64;
            rem /= self.counts[a];
        }
        out
    }

    pub fn state(&self, i: &[i64]) -> BoxState {
        self.slot(i).map_or(BoxState::Unknown, |s| self.states[s])
    }

    pub fn reason(&self, i: &[i64]) -> Option<BlackReason> {
        self.slot(i).and_then(|s| self.reasons[s])
    }

    pub fn count(&self, state: BoxState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// White boxes among the classified ones.
    pub fn white_fraction(&self) -> Option<f64> {
        let w = self.count(BoxState::White);
        let classified = w + self.count(BoxState::Black);
        (classified > 0).then(|| w as f64 / classified as f64)
    }
}

/// Classifies every box lying inside the window.
pub fn classify_boxes(field: &ObstacleField, half_side: usize, c_d: f64, d_set: Option<&[bool]>) -> Result<BoxGrid> {
    classify(field, half_side, c_d, d_set, &|_: &[i64]| true)
}

/// Classifies only boxes whose index is within Euclidean `radius` of the box of `site`.
pub fn classify_boxes_near(
    field: &ObstacleField,
    half_side: usize,
    c_d: f64,
    d_set: Option<&[bool]>,
    site: usize,
    radius: f64,
) -> Result<BoxGrid> {
    let l = half_side as i64;
    let anchor = field.lattice().coords(field.origin());
    let focus: Vec<i64> =
        field.lattice().coords(site).iter().zip(&anchor).map(|(c, a)| (c - a + l).div_euclid(2 * l + 1)).collect();
    classify(field, half_side, c_d, d_set, &|i: &[i64]| {
        let d2: i64 = i.iter().zip(&focus).map(|(a, b)| (a - b) * (a - b)).sum();
        d2 as f64 <= radius * radius + 1e-9
    })
}

/// Classifies the boxes selected by `keep`; the rest stay unknown.
pub fn classify_boxes_where(
    field: &ObstacleField,
    half_side: usize,
    c_d: f64,
    d_set: Option<&[bool]>,
    keep: &(dyn Fn(&[i64]) -> bool + Sync),
) -> Result<BoxGrid> {
    classify(field, half_side, c_d, d_set, keep)
}

fn classify(
    field: &ObstacleField,
    half_side: usize,
    c_d: f64,
    d_set: Option<&[bool]>,
    keep: &(dyn Fn(&[i64]) -> bool + Sync),
) -> Result<BoxGrid> {
    check_params(field, half_side, c_d, d_set)?;
    let lat = field.lattice();
    let d = lat.dim();
    let l = half_side as i64;
    let side = 2 * l + 1;
    let anchor = lat.coords(field.origin());
    let lo: Vec<i64> = (0..d).map(|a| (0 - anchor[a] + l).div_euclid(side)).collect();
    let hi: Vec<i64> = (0..d).map(|a| (lat.sides()[a] as i64 - 1 - anchor[a] + l).div_euclid(side)).collect();
    let counts: Vec<usize> = (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
    let mut grid = BoxGrid {
        half_side,
        c_d,
        anchor,
        lo,
        counts,
        states: Vec::new(),
        reasons: Vec::new(),
        clusters: Vec::new(),
        sampled: Vec::new(),
    };
    let total: usize = grid.counts.iter().product();
    let results: Vec<Verdict> = (0..total)
        .into_par_iter()
        .map(|slot| {
            let i = grid.index_at(slot);
            if !keep(&i) {
                return Verdict::unknown();
            }
            classify_one(field, &grid.center(&i), half_side, c_d, d_set)
        })
        .collect();
    for v in results {
        grid.states.push(v.state);
        grid.reasons.push(v.reason);
        grid.clusters.push(v.cluster);
        grid.sampled.push(v.sampled);
    }
    Ok(grid)
}

fn check_params(field: &ObstacleField, half_side: usize, c_d: f64, d_set: Option<&[bool]>) -> Result<()> {
    if half_side < 3 {
        return Err(invalid(format!("box half-side {half_side} < 3")));
    }
    if !(c_d >= 1.0) {
        return Err(invalid(format!("c_d = {c_d} < 1")));
    }
    if d_set.is_some_and(|s| s.len() != field.lattice().len()) {
        return Err(invalid("D set length does not match the window"));
    }
    Ok(())
}

/// Pair budget of the distance clause before it switches to sampling.
const PAIR_BUDGET: usize = 500;
/// Sources kept when sampling; all pairs among them stay within the budget.
const SAMPLED_SOURCES: usize = 32;

/// Local view of the clipped neighbourhood K_{⌊C_D L⌋}(center).
struct Neighbourhood {
    dims: Vec<usize>,
    strides: Vec<usize>,
    /// Flat window coordinates, `d` per local site.
    coords: Vec<i64>,
}

impl Neighbourhood {
    fn new(lo: Vec<i64>, dims: Vec<usize>) -> Self {
        let d = dims.len();
        let n: usize = dims.iter().product();
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let mut coords = Vec::with_capacity(n * d);
        for k in 0..n {
            for a in 0..d {
                coords.push(lo[a] + ((k / strides[a]) % dims[a]) as i64);
            }
        }
        Neighbourhood { dims, strides, coords }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    fn coords(&self, k: usize) -> &[i64] {
        let d = self.dims.len();
        &self.coords[k * d..(k + 1) * d]
    }

    fn for_each_neighbor(&self, k: usize, mut f: impl FnMut(usize)) {
        for a in 0..self.dims.len() {
            let pos = (k / self.strides[a]) % self.dims[a];
            if pos > 0 {
                f(k - self.strides[a]);
            }
            if pos + 1 < self.dims[a] {
                f(k + self.strides[a]);
            }
        }
    }
}

fn classify_one(
    field: &ObstacleField,
    center: &[i64],
    half_side: usize,
    c_d: f64,
    d_set: Option<&[bool]>,
) -> Verdict {
    let lat = field.lattice();
    let d = lat.dim();
    let l = half_side as i64;
    let inside = (0..d).all(|a| center[a] - l >= 0 && center[a] + l < lat.sides()[a] as i64);
    if !inside {
        return Verdict::unknown();
    }
    let reach = (c_d * l as f64).floor() as i64;
    let lo: Vec<i64> = (0..d).map(|a| (center[a] - reach).max(0)).collect();
    let dims: Vec<usize> =
        (0..d).map(|a| ((center[a] + reach).min(lat.sides()[a] as i64 - 1) - lo[a] + 1) as usize).collect();
    let nb = Neighbourhood::new(lo, dims);
    let n = nb.len();
    let sites: Vec<usize> = (0..n).map(|k| lat.index_of(nb.coords(k)).expect("clipped to window")).collect();
    if let Some(dset) = d_set {
        if sites.iter().any(|&s| dset[s]) {
            return Verdict::black(BlackReason::DSet, false);
        }
    }
    let open: Vec<bool> = sites.iter().map(|&s| field.is_open(s)).collect();
    let linf = |k: usize, c: &[i64]| nb.coords(k).iter().zip(c).map(|(x, y)| (x - y).abs()).max().unwrap_or(0);
    let in_m: Vec<bool> = (0..n).map(|k| linf(k, center) <= 3 * l + 1).collect();
    let threshold = l as f64 / 10.0;

    // Components of the open sites of the neighbourhood.
    let mut label = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if !open[s] || label[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        label[s] = id;
        let mut members = vec![s];
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            nb.for_each_neighbor(u, |v| {
                if open[v] && label[v] == usize::MAX {
                    label[v] = id;
                    members.push(v);
                }
            });
        }
        comps.push(members);
    }
    let qualifying: Vec<usize> = (0..comps.len())
        .filter(|&c| comps[c].iter().filter(|&&k| in_m[k]).count() as f64 >= threshold)
        .collect();
    match qualifying.len() {
        0 => return Verdict::black(BlackReason::NoCrossing, false),
        1 => {}
        _ => return Verdict::black(BlackReason::SeveralCrossings, false),
    }
    let comp = &comps[qualifying[0]];
    let id = qualifying[0];

    // Every neighbouring box holds at least L/10 sites of the cluster.
    let mut per_box = vec![0usize; 3usize.pow(d as u32)];
    for &k in comp {
        let c = nb.coords(k);
        let mut slot = 0usize;
        let mut ok = true;
        for a in 0..d {
            let rel = c[a] - center[a];
            if rel.abs() > 3 * l + 1 {
                ok = false;
                break;
            }
            slot = slot * 3 + ((rel + l).div_euclid(2 * l + 1) + 1) as usize;
        }
        if ok {
            per_box[slot] += 1;
        }
    }
    if per_box.iter().any(|&c| (c as f64) < threshold) {
        return Verdict::black(BlackReason::ThinNeighbour, false);
    }

    // Chemical distances inside the cluster between points of the 3^d boxes.
    let targets: Vec<usize> = comp.iter().copied().filter(|&k| in_m[k]).collect();
    let sampled = targets.len() > PAIR_BUDGET;
    let sources = if sampled { farthest_points(&nb, &targets, SAMPLED_SOURCES) } else { targets.clone() };
    let limit = (c_d * l as f64).floor() as u32;
    let mut is_source = vec![false; n];
    for &t in &sources {
        is_source[t] = true;
    }
    let mut dist = vec![0u32; n];
    let mut stamp = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (round, &src) in sources.iter().enumerate() {
        stamp[src] = round;
        dist[src] = 0;
        let mut missing = sources.len() - 1;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            if missing == 0 {
                break;
            }
            if dist[u] == limit {
                continue;
            }
            let next = dist[u] + 1;
            nb.for_each_neighbor(u, |v| {
                if label[v] == id && stamp[v] != round {
                    stamp[v] = round;
                    dist[v] = next;
                    if is_source[v] {
                        missing -= 1;
                    }
                    queue.push_back(v);
                }
            });
        }
        if missing > 0 {
            return Verdict::black(BlackReason::Distance, sampled);
        }
    }
    let mut cluster: Vec<usize> = comp.iter().map(|&k| sites[k]).collect();
    cluster.sort_unstable();
    Verdict { state: BoxState::White, reason: None, cluster, sampled }
}

/// Greedy farthest-point sample in the ℓ1 metric, from the first target.
fn farthest_points(nb: &Neighbourhood, targets: &[usize], k: usize) -> Vec<usize> {
    let coords: Vec<&[i64]> = targets.iter().map(|&t| nb.coords(t)).collect();
    let l1 = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<i64>();
    let mut chosen = vec![0usize];
    let mut best: Vec<i64> = coords.iter().map(|c| l1(c, coords[0])).collect();
    while chosen.len() < k.min(targets.len()) {
        let (far, _) = best.iter().enumerate().fold((0, -1), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        chosen.push(far);
        for (i, c) in coords.iter().enumerate() {
            best[i] = best[i].min(l1(c, coords[far]));
        }
    }
    chosen.into_iter().map(|i| targets[i]).collect()
}

/// White boxes kept independently with probability 1 - eps.
pub fn tilde_white(grid: &BoxGrid, eps: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid(format!("eps = {eps} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(grid
        .states
        .iter()
        .map(|&s| {
            let keep = rng.gen::<f64>() >= eps;
            s == BoxState::White && keep
        })
        .collect())
}
