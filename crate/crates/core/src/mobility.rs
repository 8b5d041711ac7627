//! Individual mobility model on a grid hierarchy: power-law dwell times,
//! exploration that decays with the number of visited places, heavy-tailed
//! jump lengths and preferential return.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::hierarchy::{generate_grid_hierarchy, GridGeometry, GridHierarchyConfig, SpIndex, UnitId};
use crate::seed::derive_seed;
use crate::traces::{lift_sequence, CellSequence, RawRecord, StCell};

/// Seconds per temporal unit in generated traces.
pub const UNIT_SECONDS: i64 = 3600;

const MAX_RESAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IMParams {
    /// Jump-length exponent: `P(r) ~ r^(-1-alpha)`.
    pub alpha: f64,
    /// Dwell exponent: `P(k) ~ k^(-1-beta)`.
    pub beta: f64,
    /// Exploration decay: `P_new = rho * S^(-gamma)`.
    pub gamma: f64,
    pub rho: f64,
    /// Visit-frequency exponent of the rank law `f_y ~ y^(-zeta)`. Not
    /// sampled; preferential return produces it and `rank_frequency_exponent`
    /// measures it.
    pub zeta: f64,
    /// Longest dwell, in temporal units.
    pub max_dwell: u32,
    /// Simulated time, in temporal units.
    pub duration: u32,
}

impl Default for IMParams {
    fn default() -> Self {
        IMParams { alpha: 0.6, beta: 0.8, gamma: 0.2, rho: 0.6, zeta: 1.2, max_dwell: 24, duration: 72 }
    }
}

impl IMParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("zeta", self.zeta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        // rho = 0 is the no-exploration limit.
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if self.max_dwell == 0 {
            return Err(Error::InvalidConfig("max_dwell must be at least 1".into()));
        }
        if self.duration == 0 {
            return Err(Error::InvalidConfig("duration must be at least 1".into()));
        }
        Ok(())
    }

    /// Exploration probability after visiting `s` distinct places.
    pub fn p_new(&self, s: usize) -> f64 {
        (self.rho * (s.max(1) as f64).powf(-self.gamma)).min(1.0)
    }

    /// Mean of the truncated dwell distribution.
    pub fn mean_dwell(&self) -> f64 {
        let w: Vec<f64> = (1..=self.max_dwell).map(|k| (k as f64).powf(-1.0 - self.beta)).collect();
        let z: f64 = w.iter().sum();
        w.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p / z).sum()
    }
}

/// Inverse-CDF sampler for `P(k) ~ k^(-1-beta)` on `1..=max_dwell`.
#[derive(Debug, Clone)]
pub struct DwellSampler {
    cdf: Vec<f64>,
}

impl DwellSampler {
    pub fn new(beta: f64, max_dwell: u32) -> Self {
        let mut cdf = Vec::with_capacity(max_dwell as usize);
        let mut acc = 0.0;
        for k in 1..=max_dwell {
            acc += (k as f64).powf(-1.0 - beta);
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        DwellSampler { cdf }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        let u: f64 = rng.gen();
        (self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1) + 1) as u32
    }
}

/// Mutable walker state.
#[derive(Debug, Clone)]
pub struct SimState {
    /// Base rank of the current cell.
    pub current: usize,
    /// Arrivals per base rank.
    pub visits: Vec<u32>,
    /// Visited units per level; `visited[m - 1]` holds base units.
    pub visited: Vec<HashSet<UnitId>>,
    pub elapsed: u32,
}

impl SimState {
    fn new(start: usize, index: &SpIndex) -> Self {
        let mut s = SimState {
            current: start,
            visits: vec![0; index.base_count()],
            visited: vec![HashSet::new(); index.height()],
            elapsed: 0,
        };
        s.arrive(start, index);
        s
    }

    fn arrive(&mut self, rank: usize, index: &SpIndex) {
        self.current = rank;
        self.visits[rank] += 1;
        for l in 1..=index.height() {
            self.visited[l - 1].insert(index.ancestor_of_rank(rank, l));
        }
    }

    /// Distinct base units visited.
    pub fn distinct(&self) -> usize {
        self.visited.last().map_or(0, |v| v.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Jump {
    pub exploratory: bool,
    /// Distinct places visited before the jump.
    pub distinct_before: usize,
}

/// One simulated entity: the occupied base rank per temporal unit, plus the
/// dwell lengths and jump decisions that produced it.
#[derive(Debug, Clone)]
pub struct Walk {
    pub positions: Vec<usize>,
    pub dwells: Vec<u32>,
    pub jumps: Vec<Jump>,
    pub visits: Vec<u32>,
}

fn require_grid(index: &SpIndex) -> Result<&GridGeometry> {
    index.grid().ok_or_else(|| Error::InvalidConfig("mobility needs a grid hierarchy".into()))
}

/// Runs the walk from `start` (a base rank) or a uniform start if `None`.
pub fn simulate_walk(params: &IMParams, index: &SpIndex, start: Option<usize>, seed: u64) -> Result<Walk> {
    params.validate()?;
    let grid = require_grid(index)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = index.base_count();
    let start = match start {
        Some(s) if s < n => s,
        Some(s) => return Err(Error::OutOfRange { value: s as u64, max: n as u64 - 1 }),
        None => rng.gen_range(0..n),
    };
    let dwell = DwellSampler::new(params.beta, params.max_dwell);
    let mut state = SimState::new(start, index);
    let mut walk = Walk { positions: Vec::with_capacity(params.duration as usize), dwells: Vec::new(), jumps: Vec::new(), visits: Vec::new() };
    loop {
        let k = dwell.sample(&mut rng);
        walk.dwells.push(k);
        let stay = k.min(params.duration - state.elapsed);
        walk.positions.extend(std::iter::repeat_n(state.current, stay as usize));
        state.elapsed += stay;
        if state.elapsed >= params.duration {
            break;
        }
        let s = state.distinct();
        let exploratory = rng.gen::<f64>() < params.p_new(s);
        walk.jumps.push(Jump { exploratory, distinct_before: s });
        let next = if exploratory {
            explore(grid, state.current, params.alpha, &mut rng)
        } else {
            match preferential_return(&state.visits, state.current, &mut rng) {
                Some(r) => r,
                None => continue,
            }
        };
        state.arrive(next, index);
    }
    walk.visits = state.visits;
    Ok(walk)
}

/// Pareto jump length `r >= 1`, uniform direction, snapped to the grid.
fn explore(grid: &GridGeometry, from: usize, alpha: f64, rng: &mut impl Rng) -> usize {
    let (r0, c0) = grid.coords(from);
    let side = grid.side as i64;
    let mut last = (0i64, 0i64);
    for _ in 0..MAX_RESAMPLES {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let dist = u.powf(-1.0 / alpha);
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let r = r0 as i64 + (dist * theta.sin()).round().clamp(-4e9, 4e9) as i64;
        let c = c0 as i64 + (dist * theta.cos()).round().clamp(-4e9, 4e9) as i64;
        last = (r, c);
        if (0..side).contains(&r) && (0..side).contains(&c) {
            return grid.rank_at(r as u32, c as u32);
        }
    }
    let (r, c) = (last.0.clamp(0, side - 1), last.1.clamp(0, side - 1));
    grid.rank_at(r as u32, c as u32)
}

/// Picks a visited place other than the current one with probability
/// proportional to its visit count.
fn preferential_return(visits: &[u32], current: usize, rng: &mut impl Rng) -> Option<usize> {
    let total: u64 = visits.iter().enumerate().filter(|&(i, _)| i != current).map(|(_, &v)| v as u64).sum();
    if total == 0 {
        return None;
    }
    let mut pick = rng.gen_range(0..total);
    for (i, &v) in visits.iter().enumerate() {
        if i == current {
            continue;
        }
        if pick < v as u64 {
            return Some(i);
        }
        pick -= v as u64;
    }
    unreachable!("pick is below the total")
}

/// Base ST-cells of one simulated entity: one per temporal unit.
pub fn simulate_entity(params: &IMParams, index: &SpIndex, seed: u64) -> Result<Vec<StCell>> {
    let walk = simulate_walk(params, index, None, seed)?;
    Ok(walk_cells(&walk, index))
}

fn walk_cells(walk: &Walk, index: &SpIndex) -> Vec<StCell> {
    let base = index.base_units();
    walk.positions.iter().enumerate().map(|(t, &r)| StCell::new(t as u32, base[r])).collect()
}

pub fn entity_name(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len();
    format!("e{i:0width$}")
}

/// Simulates `n` entities in parallel; entity `i` draws from its own seed so
/// the result does not depend on scheduling.
pub fn simulate_walks(n: usize, params: &IMParams, index: &SpIndex, seed: u64) -> Result<Vec<Walk>> {
    (0..n)
        .into_par_iter()
        .map(|i| simulate_walk(params, index, None, derive_seed(seed, "entity", i as u64)))
        .collect()
}

/// A generated corpus: the hierarchy and one walk per entity.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub index: SpIndex,
    pub walks: Vec<Walk>,
}

pub fn generate_corpus(n: usize, params: &IMParams, grid: &GridHierarchyConfig, seed: u64) -> Result<Corpus> {
    let index = generate_grid_hierarchy(grid, derive_seed(seed, "hierarchy", 0))?;
    let walks = simulate_walks(n, params, &index, seed)?;
    Ok(Corpus { index, walks })
}

impl Corpus {
    pub fn names(&self) -> Vec<String> {
        (0..self.walks.len()).map(|i| entity_name(i, self.walks.len())).collect()
    }

    pub fn sequences(&self) -> Vec<CellSequence> {
        let n = self.walks.len();
        self.walks
            .par_iter()
            .enumerate()
            .map(|(i, w)| lift_sequence(&entity_name(i, n), &walk_cells(w, &self.index), &self.index).expect("generated cells are base units"))
            .collect()
    }

    /// Raw records with consecutive hours at one place merged into a single
    /// presence, timestamps in seconds from zero.
    pub fn records(&self) -> Vec<RawRecord> {
        let n = self.walks.len();
        let base = self.index.base_units();
        let mut out = Vec::new();
        for (i, w) in self.walks.iter().enumerate() {
            let name = entity_name(i, n);
            let mut t = 0;
            while t < w.positions.len() {
                let r = w.positions[t];
                let mut end = t + 1;
                while end < w.positions.len() && w.positions[end] == r {
                    end += 1;
                }
                out.push(RawRecord {
                    entity: name.clone(),
                    location: self.index.name(base[r]).to_string(),
                    start: t as i64 * UNIT_SECONDS,
                    end: end as i64 * UNIT_SECONDS,
                });
                t = end;
            }
        }
        out
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut out, &r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Grid coordinates per entity per temporal unit.
    pub fn coordinates(&self) -> Vec<Vec<(f64, f64)>> {
        let grid = self.index.grid().expect("generated hierarchies are grids");
        self.walks
            .iter()
            .map(|w| {
                w.positions
                    .iter()
                    .map(|&r| {
                        let (y, x) = grid.coords(r);
                        (x as f64, y as f64)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Fitted growth exponents `(mu, nu)` of the ensemble-mean distinct-place
/// count `S(t) ~ t^mu` and mean squared displacement `MSD(t) ~ t^nu`.
/// Each trajectory lists positions per temporal unit; the fit runs over the
/// common prefix length.
pub fn empirical_exponents(trajectories: &[Vec<(f64, f64)>]) -> Result<(f64, f64)> {
    let len = trajectories.iter().map(Vec::len).min().unwrap_or(0);
    if trajectories.is_empty() || len < 10 {
        return Err(Error::TooShort(len));
    }
    let n = trajectories.len() as f64;
    let mut s_mean = vec![0.0; len];
    let mut msd = vec![0.0; len];
    for traj in trajectories {
        let mut seen: HashSet<(u64, u64)> = HashSet::new();
        let (x0, y0) = traj[0];
        for (t, &(x, y)) in traj[..len].iter().enumerate() {
            seen.insert((x.to_bits(), y.to_bits()));
            s_mean[t] += seen.len() as f64 / n;
            msd[t] += ((x - x0).powi(2) + (y - y0).powi(2)) / n;
        }
    }
    let xs: Vec<f64> = (1..=len).map(|t| (t as f64).ln()).collect();
    let ys: Vec<f64> = s_mean.iter().map(|s| s.ln()).collect();
    let mu = ls_slope(&xs, &ys);
    // MSD at lag t sits at index t; lag 0 is always zero.
    let (mx, my): (Vec<f64>, Vec<f64>) = (1..len).filter(|&t| msd[t] > 0.0).map(|t| ((t as f64).ln(), msd[t].ln())).unzip();
    let nu = if mx.len() < 2 { 0.0 } else { ls_slope(&mx, &my) };
    Ok((mu, nu))
}

/// Slope of log visit frequency against log rank, pooled over walks
/// (negated, so it is comparable to `zeta`).
pub fn rank_frequency_exponent(walks: &[Walk]) -> f64 {
    let mut by_rank: Vec<f64> = Vec::new();
    let mut count: Vec<usize> = Vec::new();
    for w in walks {
        let mut v: Vec<u32> = w.visits.iter().copied().filter(|&c| c > 0).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        let total: f64 = v.iter().map(|&c| c as f64).sum();
        for (y, c) in v.into_iter().enumerate() {
            if by_rank.len() <= y {
                by_rank.push(0.0);
                count.push(0);
            }
            by_rank[y] += c as f64 / total;
            count[y] += 1;
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = by_rank
        .iter()
        .zip(&count)
        .enumerate()
        .filter(|(_, (_, &c))| c >= 10)
        .map(|(y, (f, &c))| (((y + 1) as f64).ln(), (f / c as f64).ln()))
        .unzip();
    if xs.len() < 2 {
        return 0.0;
    }
    -ls_slope(&xs, &ys)
}

fn unit_cells(index: &SpIndex, grid: &GridGeometry, unit: UnitId) -> Vec<(f64, f64)> {
    index
        .base_descendants(unit)
        .iter()
        .map(|&b| {
            let (r, c) = grid.coords(index.base_rank(b).expect("base unit"));
            (r as f64, c as f64)
        })
        .collect()
}

/// Probability that a jump from each cell of `unit` leaves it: the jump-length
/// tail `min(1, d^-alpha)` at the distance `d` from the cell to the nearest
/// cell outside the unit. Returns the per-cell values.
pub fn exit_probabilities(unit: UnitId, params: &IMParams, index: &SpIndex) -> Result<Vec<f64>> {
    let grid = require_grid(index)?;
    let inside = unit_cells(index, grid, unit);
    let member: HashSet<(u32, u32)> = inside.iter().map(|&(r, c)| (r as u32, c as u32)).collect();
    let outside: Vec<(f64, f64)> = (0..index.base_count())
        .map(|rank| grid.coords(rank))
        .filter(|rc| !member.contains(rc))
        .map(|(r, c)| (r as f64, c as f64))
        .collect();
    Ok(inside
        .iter()
        .map(|&(r, c)| {
            let d = outside.iter().map(|&(r2, c2)| ((r - r2).powi(2) + (c - c2).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
            if d.is_finite() {
                d.max(1.0).powf(-params.alpha).min(1.0)
            } else {
                0.0
            }
        })
        .collect())
}

/// Probability that an exploratory jump from `unit` reaches a level-`l`
/// unit not yet visited: the unvisited share of the other units at the
/// same level times the mean exit probability over the unit's cells.
pub fn p_out(unit: UnitId, visited_at_level: usize, params: &IMParams, index: &SpIndex) -> Result<f64> {
    let reachable = index.units_at(index.level(unit)).count().saturating_sub(1);
    if reachable == 0 {
        return Ok(0.0);
    }
    let h = exit_probabilities(unit, params, index)?;
    let mean_h = h.iter().sum::<f64>() / h.len() as f64;
    let unvisited = reachable.saturating_sub(visited_at_level) as f64 / reachable as f64;
    Ok(unvisited * mean_h)
}

/// Exploration probability towards a new unit at the level of `unit`.
pub fn p_new_at_level(unit: UnitId, distinct: usize, visited_at_level: usize, params: &IMParams, index: &SpIndex) -> Result<f64> {
    Ok(params.p_new(distinct) * p_out(unit, visited_at_level, params, index)?)
}

fn normal_cdf(x: f64, sigma: f64) -> f64 {
    0.5 * (1.0 + erf(x / (sigma * std::f64::consts::SQRT_2)))
}

/// Mass over the cells of `target` of an isotropic Gaussian centred at
/// `center` with per-axis variance `var`, truncated to the `side` x `side`
/// grid.
fn gaussian_mass(target: &[(f64, f64)], center: (f64, f64), var: f64, side: f64) -> f64 {
    let sigma = var.sqrt();
    let band = |lo: f64, hi: f64, mid: f64| normal_cdf(hi - mid, sigma) - normal_cdf(lo - mid, sigma);
    let inside = band(-0.5, side - 0.5, center.0) * band(-0.5, side - 0.5, center.1);
    if inside <= 0.0 {
        return 0.0;
    }
    target.iter().map(|&(r, c)| band(r - 0.5, r + 0.5, center.0) * band(c - 0.5, c + 0.5, center.1)).sum::<f64>() / inside
}

/// Model probability that an entity with a uniform start has visited `unit`
/// within `t` temporal units. The starting term is the unit's share of the
/// area. Each other unit `U'` at the same level adds its share times the
/// chance of reaching `unit`: jumps leave `U'` with its mean exit
/// probability, land at rate `P_new / mean dwell` per unit of time, and
/// spread as a Gaussian around the centroid of `U'` with mean squared
/// displacement `s^nu` after `s` units.
pub fn visit_probability(unit: UnitId, t: u32, params: &IMParams, nu: f64, index: &SpIndex) -> Result<f64> {
    if unit == 0 || unit as usize > index.unit_count() {
        return Err(Error::UnknownUnit(format!("#{unit}")));
    }
    params.validate()?;
    let grid = require_grid(index)?;
    let total = index.base_count() as f64;
    let target = unit_cells(index, grid, unit);
    let start = target.len() as f64 / total;
    if t == 0 || target.len() == index.base_count() {
        return Ok(start);
    }
    let rate = 1.0 / params.mean_dwell();
    let mut reach = 0.0;
    for other in index.units_at(index.level(unit)).filter(|&u| u != unit) {
        let cells = unit_cells(index, grid, other);
        let share = cells.len() as f64 / total;
        let h = exit_probabilities(other, params, index)?;
        let mean_h = h.iter().sum::<f64>() / h.len() as f64;
        let n = cells.len() as f64;
        let centroid = (cells.iter().map(|c| c.0).sum::<f64>() / n, cells.iter().map(|c| c.1).sum::<f64>() / n);
        let mut hazard = 0.0;
        for s in 1..=t {
            // Distinct places grow roughly one per exploratory jump.
            let distinct = 1.0 + (s as f64 * rate * params.rho);
            let explore = (params.rho * distinct.powf(-params.gamma)).min(1.0);
            let var = (s as f64).powf(nu) / 2.0;
            hazard += rate * explore * gaussian_mass(&target, centroid, var.max(1e-9), grid.side as f64);
        }
        reach += share * mean_h * (1.0 - (-hazard).exp());
    }
    Ok((start + reach).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(side: u32, levels: usize) -> SpIndex {
        generate_grid_hierarchy(&GridHierarchyConfig { side_length: side, levels, ..Default::default() }, 5).unwrap()
    }

    #[test]
    fn walk_fills_duration() {
        let idx = grid(16, 3);
        let w = simulate_walk(&IMParams::default(), &idx, None, 1).unwrap();
        assert_eq!(w.positions.len(), 72);
        let cells = simulate_entity(&IMParams::default(), &idx, 1).unwrap();
        assert_eq!(cells.len(), 72);
        assert!(cells.iter().all(|c| idx.is_base(c.unit)));
        assert!(cells.windows(2).all(|p| p[0].time + 1 == p[1].time));
    }

    #[test]
    fn no_exploration_stays_put() {
        let idx = grid(16, 3);
        let p = IMParams { rho: 0.0, duration: 500, ..Default::default() };
        for seed in 0..20 {
            let w = simulate_walk(&p, &idx, None, seed).unwrap();
            let distinct: HashSet<usize> = w.positions.iter().copied().collect();
            assert_eq!(distinct.len(), 1);
        }
    }

    #[test]
    fn gamma_zero_keeps_exploration_flat() {
        let p = IMParams { gamma: 0.0, ..Default::default() };
        for s in [1, 5, 50, 500] {
            assert_eq!(p.p_new(s), p.rho);
        }
    }

    #[test]
    fn dwell_sampler_stays_in_support() {
        let d = DwellSampler::new(0.8, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            let k = d.sample(&mut rng);
            assert!((1..=24).contains(&k));
        }
        let one = DwellSampler::new(0.8, 1);
        assert_eq!(one.sample(&mut rng), 1);
    }

    #[test]
    fn return_picks_other_visited_places() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let visits = vec![0, 3, 0, 1, 5];
        for _ in 0..1000 {
            let r = preferential_return(&visits, 4, &mut rng).unwrap();
            assert!(r == 1 || r == 3);
        }
        assert_eq!(preferential_return(&[0, 2, 0], 1, &mut rng), None);
    }

    #[test]
    fn corpus_is_deterministic() {
        let cfg = GridHierarchyConfig { side_length: 16, levels: 3, ..Default::default() };
        let p = IMParams { duration: 48, ..Default::default() };
        let mut a = Vec::new();
        let mut b = Vec::new();
        generate_corpus(30, &p, &cfg, 9).unwrap().write_jsonl(&mut a).unwrap();
        generate_corpus(30, &p, &cfg, 9).unwrap().write_jsonl(&mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        generate_corpus(30, &p, &cfg, 10).unwrap().write_jsonl(&mut c).unwrap();
        assert_ne!(a, c);
        let mut empty = Vec::new();
        generate_corpus(0, &p, &cfg, 9).unwrap().write_jsonl(&mut empty).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn records_cover_every_hour_once() {
        let cfg = GridHierarchyConfig { side_length: 16, levels: 3, ..Default::default() };
        let corpus = generate_corpus(5, &IMParams::default(), &cfg, 4).unwrap();
        let recs = corpus.records();
        for name in corpus.names() {
            let mut spans: Vec<(i64, i64)> = recs.iter().filter(|r| r.entity == name).map(|r| (r.start, r.end)).collect();
            spans.sort();
            assert_eq!(spans[0].0, 0);
            assert!(spans.windows(2).all(|w| w[0].1 == w[1].0));
            assert_eq!(spans.last().unwrap().1, 72 * UNIT_SECONDS);
        }
    }

    #[test]
    fn exponents_of_mock_inputs() {
        let still: Vec<Vec<(f64, f64)>> = (0..5).map(|i| vec![(i as f64, 0.0); 50]).collect();
        let (mu, nu) = empirical_exponents(&still).unwrap();
        assert!(mu.abs() < 1e-12 && nu.abs() < 1e-12);
        let ballistic: Vec<Vec<(f64, f64)>> = vec![(0..50).map(|t| (t as f64, 0.0)).collect()];
        let (mu, nu) = empirical_exponents(&ballistic).unwrap();
        assert!((nu - 2.0).abs() < 1e-9, "{nu}");
        assert!((mu - 1.0).abs() < 1e-9, "{mu}");
        assert!(matches!(empirical_exponents(&[vec![(0.0, 0.0); 9]]), Err(Error::TooShort(9))));
        assert!(matches!(empirical_exponents(&[]), Err(Error::TooShort(0))));
    }

    #[test]
    fn visit_probability_boundaries() {
        let idx = grid(16, 3);
        let p = IMParams::default();
        for u in idx.units_at(2).take(3) {
            let share = idx.base_descendants(u).len() as f64 / 256.0;
            assert_eq!(visit_probability(u, 0, &p, 1.0, &idx).unwrap(), share);
            let mut last = share;
            for t in [1, 5, 20, 72, 200] {
                let v = visit_probability(u, t, &p, 1.0, &idx).unwrap();
                assert!(v >= last - 1e-12 && v <= 1.0);
                last = v;
            }
        }
        assert!(matches!(visit_probability(0, 5, &p, 1.0, &idx), Err(Error::UnknownUnit(_))));
    }

    #[test]
    fn whole_area_is_certain() {
        let idx = generate_grid_hierarchy(
            &GridHierarchyConfig { side_length: 8, levels: 2, width_exponent: 6.0, ..Default::default() },
            1,
        )
        .unwrap();
        let top = idx.units_at(1).next().unwrap();
        assert_eq!(idx.base_descendants(top).len(), 64);
        for t in [0, 1, 50] {
            assert_eq!(visit_probability(top, t, &IMParams::default(), 1.0, &idx).unwrap(), 1.0);
        }
    }
}
