//! Exhaustive enumeration oracles: non-intersecting path ensembles with
//! determinant transition weights, and direct domino tilings of small Aztec
//! diamonds.
//!
//! The path oracle enumerates height configurations level by level; the
//! weight of a transition between consecutive height tuples is the
//! determinant of single-step weights, which vanishes automatically on
//! crossing configurations. Heights use the top-pack convention: starts at
//! `-1, -2, ..., -P` and ends at `p M - 1, ..., p M - P`.

use crate::cmat::{re, CMat};
use crate::error::{Error, Result};
use crate::kernels::Site;
use crate::symbol::{ElementaryFactor, FactorKind};
use std::collections::HashMap;

/// A finite non-intersecting path ensemble.
#[derive(Debug, Clone)]
pub struct PathGraphInstance {
    pub p: usize,
    /// Number of paths.
    pub paths: usize,
    pub m_shift: i64,
    pub factors: Vec<ElementaryFactor>,
    /// Geometric jumps are truncated where the tail weight drops below this.
    pub truncation_tol: f64,
}

/// Single-step weight of a transition factor from height `u` to height `v`
/// (the weight depends only on `u mod p` and `v - u`).
pub fn step_weight(f: &ElementaryFactor, u: i64, v: i64) -> f64 {
    let p = f.p() as i64;
    let r = u.rem_euclid(p) as usize;
    let c = v.rem_euclid(p) as usize;
    let pp = f.p();
    match f.kind {
        FactorKind::BernoulliUp => {
            if v == u {
                f.b[r]
            } else if v == u + 1 {
                f.a[r] * f.b[(r + 1) % pp]
            } else {
                0.0
            }
        }
        FactorKind::BernoulliDown => {
            if v == u {
                f.b[r]
            } else if v == u - 1 {
                f.a[c] * f.b[c]
            } else {
                0.0
            }
        }
        FactorKind::GeometricUp => {
            if v < u {
                return 0.0;
            }
            let mut w = f.b[c];
            for l in 0..(v - u) {
                w *= f.a[(u + l).rem_euclid(p) as usize];
            }
            w
        }
        FactorKind::GeometricDown => {
            if v > u {
                return 0.0;
            }
            let mut w = f.b[c];
            for l in 0..(u - v) {
                w *= f.a[(v + l).rem_euclid(p) as usize];
            }
            w
        }
    }
}

/// Reachable jump range `(min, max)` for a factor; geometric tails are
/// truncated once the accumulated slope product falls below `tol`.
fn step_range(f: &ElementaryFactor, tol: f64) -> (i64, i64) {
    match f.kind {
        FactorKind::BernoulliUp => (0, 1),
        FactorKind::BernoulliDown => (-1, 0),
        FactorKind::GeometricUp | FactorKind::GeometricDown => {
            let a = f.a_product();
            // at a = 1 the tail does not decay; the endpoint bounds still cap
            // every jump, so any large reach is exact there
            let per_period = if a >= 1.0 - 1e-12 {
                4096
            } else {
                (tol.ln() / a.ln()).ceil().max(1.0) as i64
            };
            let reach = (per_period + 1) * f.p() as i64;
            if f.kind == FactorKind::GeometricUp {
                (0, reach)
            } else {
                (-reach, 0)
            }
        }
    }
}

/// An occupancy event: all `occupied` sites hold particles and all `vacant`
/// sites do not.
#[derive(Debug, Clone, Default)]
pub struct OccupancyEvent {
    pub occupied: Vec<Site>,
    pub vacant: Vec<Site>,
}

/// Correlation data accumulated by [`enumerate_measure`].
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    pub z: f64,
    one_point: HashMap<Site, f64>,
    steps: HashMap<(usize, i64, i64), f64>,
    event_weights: Vec<f64>,
    pub configurations: u64,
}

impl CorrelationTable {
    pub fn density(&self, s: Site) -> f64 {
        self.one_point.get(&s).copied().unwrap_or(0.0) / self.z
    }

    /// Probability that some path steps `u -> v` across transition `m`
    /// (from level `m - 1` to level `m`; transitions are 1-based).
    pub fn step_probability(&self, m: usize, u: i64, v: i64) -> f64 {
        self.steps.get(&(m, u, v)).copied().unwrap_or(0.0) / self.z
    }

    pub fn event_probability(&self, idx: usize) -> f64 {
        self.event_weights[idx] / self.z
    }
}

struct Dfs<'a> {
    g: &'a PathGraphInstance,
    bounds: &'a [Vec<(i64, i64)>],
    events: &'a [OccupancyEvent],
    table: CorrelationTable,
    budget: u64,
    tuples: Vec<Vec<i64>>,
}

impl Dfs<'_> {
    fn run(&mut self, level: usize, weight: f64) -> Result<()> {
        let levels = self.g.factors.len();
        if level == levels {
            self.record(weight);
            return Ok(());
        }
        let cur = self.tuples[level].clone();
        let mut next = vec![0i64; cur.len()];
        self.extend(level, 0, i64::MAX, &cur, &mut next, weight)
    }

    fn extend(
        &mut self,
        level: usize,
        j: usize,
        above: i64,
        cur: &[i64],
        next: &mut Vec<i64>,
        weight: f64,
    ) -> Result<()> {
        if self.table.configurations > self.budget {
            return Err(Error::Budget(format!(
                "more than {} configurations",
                self.budget
            )));
        }
        let paths = cur.len();
        if j == paths {
            // transition weight: determinant of single-step weights (zero on
            // crossing configurations)
            let f = &self.g.factors[level];
            let det = CMat::from_fn(paths, paths, |a, b| re(step_weight(f, cur[a], next[b]))).det();
            let w = det.re;
            if w.abs() > 1e-300 {
                self.tuples.push(next.clone());
                self.run(level + 1, weight * w)?;
                self.tuples.pop();
            }
            return Ok(());
        }
        let (lo_r, hi_r) = step_range(&self.g.factors[level], self.g.truncation_tol);
        let (blo, bhi) = self.bounds[level + 1][j];
        let lo = blo.max(cur[j] + lo_r);
        let hi = bhi.min(cur[j] + hi_r).min(above - 1);
        for v in (lo..=hi).rev() {
            next[j] = v;
            self.extend(level, j + 1, v, cur, next, weight)?;
        }
        Ok(())
    }

    fn record(&mut self, weight: f64) {
        self.table.configurations += 1;
        self.table.z += weight;
        for (m, tuple) in self.tuples.iter().enumerate() {
            for &u in tuple {
                *self.table.one_point.entry(Site::new(m, u)).or_insert(0.0) += weight;
            }
        }
        for m in 1..self.tuples.len() {
            for j in 0..self.tuples[m].len() {
                let key = (m, self.tuples[m - 1][j], self.tuples[m][j]);
                *self.table.steps.entry(key).or_insert(0.0) += weight;
            }
        }
        for (idx, ev) in self.events.iter().enumerate() {
            let occupied = |s: Site| s.m < self.tuples.len() && self.tuples[s.m].contains(&s.u);
            let holds =
                ev.occupied.iter().all(|s| occupied(*s)) && ev.vacant.iter().all(|s| !occupied(*s));
            if holds {
                self.table.event_weights[idx] += weight;
            }
        }
    }
}

/// Exhaustively enumerate the ensemble, accumulating one-point densities,
/// per-path step statistics and the probabilities of the requested events.
pub fn enumerate_measure(
    g: &PathGraphInstance,
    events: &[OccupancyEvent],
) -> Result<CorrelationTable> {
    let levels = g.factors.len();
    let paths = g.paths;
    if paths == 0 || levels == 0 {
        return Err(Error::Model("enumeration needs paths and levels".into()));
    }
    let p = g.p as i64;
    let starts: Vec<i64> = (1..=paths as i64).map(|j| -j).collect();
    let ends: Vec<i64> = (1..=paths as i64).map(|j| p * g.m_shift - j).collect();
    let ranges: Vec<(i64, i64)> = g
        .factors
        .iter()
        .map(|f| step_range(f, g.truncation_tol))
        .collect();
    let mut fwd_lo = vec![starts.clone()];
    let mut fwd_hi = vec![starts.clone()];
    for (lo_r, hi_r) in &ranges {
        let prev_lo = fwd_lo.last().unwrap().clone();
        let prev_hi = fwd_hi.last().unwrap().clone();
        fwd_lo.push(prev_lo.iter().map(|v| v + lo_r).collect());
        fwd_hi.push(prev_hi.iter().map(|v| v + hi_r).collect());
    }
    let mut bwd_lo = vec![vec![0i64; paths]; levels + 1];
    let mut bwd_hi = vec![vec![0i64; paths]; levels + 1];
    bwd_lo[levels].clone_from(&ends);
    bwd_hi[levels].clone_from(&ends);
    for m in (0..levels).rev() {
        let (lo_r, hi_r) = ranges[m];
        for j in 0..paths {
            bwd_lo[m][j] = bwd_lo[m + 1][j] - hi_r;
            bwd_hi[m][j] = bwd_hi[m + 1][j] - lo_r;
        }
    }
    let bounds: Vec<Vec<(i64, i64)>> = (0..=levels)
        .map(|m| {
            (0..paths)
                .map(|j| (fwd_lo[m][j].max(bwd_lo[m][j]), fwd_hi[m][j].min(bwd_hi[m][j])))
                .collect()
        })
        .collect();
    for level in &bounds {
        for &(lo, hi) in level {
            if lo > hi {
                return Err(Error::Model("no admissible trajectory".into()));
            }
        }
    }
    let mut dfs = Dfs {
        g,
        bounds: &bounds,
        events,
        table: CorrelationTable {
            z: 0.0,
            one_point: HashMap::new(),
            steps: HashMap::new(),
            event_weights: vec![0.0; events.len()],
            configurations: 0,
        },
        budget: 10_000_000,
        tuples: vec![starts.clone()],
    };
    dfs.run(0, 1.0)?;
    let table = dfs.table;
    if table.z <= 0.0 {
        return Err(Error::Model(
            "enumeration found no admissible configuration".into(),
        ));
    }
    Ok(table)
}

/// Domino type by the position of the black square within the domino.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DominoKind {
    North,
    West,
    South,
    East,
}

/// Weighted tile statistics of an exhaustively enumerated Aztec diamond.
#[derive(Debug, Clone)]
pub struct AztecTilingTable {
    pub size: usize,
    pub tilings: u64,
    pub z: f64,
    tiles: HashMap<(DominoKind, i64, i64), f64>,
}

impl AztecTilingTable {
    pub fn tile_probability(&self, kind: DominoKind, m: i64, x: i64) -> f64 {
        self.tiles.get(&(kind, m, x)).copied().unwrap_or(0.0) / self.z
    }
}

fn classify_domino(
    c1: (i64, i64),
    c2: (i64, i64),
    is_black: &impl Fn(i64, i64) -> bool,
) -> (DominoKind, (i64, i64)) {
    let horizontal = c1.1 == c2.1;
    if horizontal {
        let (left, right) = if c1.0 < c2.0 { (c1, c2) } else { (c2, c1) };
        if is_black(left.0, left.1) {
            (DominoKind::South, left)
        } else {
            (DominoKind::North, right)
        }
    } else {
        let (bottom, top) = if c1.1 < c2.1 { (c1, c2) } else { (c2, c1) };
        if is_black(bottom.0, bottom.1) {
            (DominoKind::West, bottom)
        } else {
            (DominoKind::East, top)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn place_dominoes<W: Fn(DominoKind, i64, i64) -> f64>(
    cells: &[(i64, i64)],
    index: &HashMap<(i64, i64), usize>,
    covered: &mut Vec<bool>,
    from: usize,
    acc: &mut Vec<((i64, i64), (i64, i64))>,
    table: &mut AztecTilingTable,
    weight: &W,
    is_black: &impl Fn(i64, i64) -> bool,
    tile_coords: &impl Fn(i64, i64) -> (i64, i64),
) {
    let mut k = from;
    while k < cells.len() && covered[k] {
        k += 1;
    }
    if k == cells.len() {
        let mut w = 1.0;
        for &(c1, c2) in acc.iter() {
            let (kind, black) = classify_domino(c1, c2, is_black);
            let (m, x) = tile_coords(black.0, black.1);
            w *= weight(kind, m, x);
        }
        table.tilings += 1;
        table.z += w;
        for &(c1, c2) in acc.iter() {
            let (kind, black) = classify_domino(c1, c2, is_black);
            let (m, x) = tile_coords(black.0, black.1);
            *table.tiles.entry((kind, m, x)).or_insert(0.0) += w;
        }
        return;
    }
    let (i, j) = cells[k];
    for neighbor in [(i + 1, j), (i, j + 1)] {
        if let Some(&k2) = index.get(&neighbor) {
            if !covered[k2] {
                covered[k] = true;
                covered[k2] = true;
                acc.push(((i, j), neighbor));
                place_dominoes(cells, index, covered, k + 1, acc, table, weight, is_black, tile_coords);
                acc.pop();
                covered[k] = false;
                covered[k2] = false;
            }
        }
    }
}

/// Enumerate all domino tilings of the size-`size` Aztec diamond, weighting
/// each tile through `weight(kind, m, x)` where `(m, x)` indexes the black
/// square of the domino (black squares sit at grid position
/// `(m - x + size - 1, m + x)` from the diamond's south-west bounding corner).
pub fn enumerate_aztec_tilings<W>(size: usize, weight: W) -> Result<AztecTilingTable>
where
    W: Fn(DominoKind, i64, i64) -> f64,
{
    let n = size as i64;
    let mut cells = Vec::new();
    for i in -n..n {
        for j in -n..n {
            let cx = i as f64 + 0.5;
            let cy = j as f64 + 0.5;
            if cx.abs() + cy.abs() <= n as f64 {
                cells.push((i, j));
            }
        }
    }
    cells.sort_unstable();
    let index: HashMap<(i64, i64), usize> =
        cells.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let is_black = move |i: i64, j: i64| -> bool {
        let gx = i + n;
        let gy = j + n;
        (gx + gy).rem_euclid(2) == (n - 1).rem_euclid(2)
    };
    let tile_coords = move |i: i64, j: i64| -> (i64, i64) {
        let gx = i + n;
        let gy = j + n;
        let m = (gx + gy - n + 1) / 2;
        let x = (gy - gx + n - 1) / 2;
        (m, x)
    };
    let mut table = AztecTilingTable {
        size,
        tilings: 0,
        z: 0.0,
        tiles: HashMap::new(),
    };
    let mut covered = vec![false; cells.len()];
    let mut acc = Vec::new();
    place_dominoes(
        &cells,
        &index,
        &mut covered,
        0,
        &mut acc,
        &mut table,
        &weight,
        &is_black,
        &tile_coords,
    );
    if table.tilings == 0 {
        return Err(Error::Model("no tilings found".into()));
    }
    Ok(table)
}
