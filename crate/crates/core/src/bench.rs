//! Measurement helpers shared by the benchmark command and the trend tests.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analysis::measure_pe;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::minhash::compute_signatures;
use crate::mobility::{simulate_walk, IMParams};
use crate::seed::derive_seed;
use crate::traces::{lift_sequence, CellSequence, StCell};
use crate::tree::{EntityId, UpdateStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LinearFit { slope, intercept, r2 }
}

/// Average ranks, ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Spearman rank correlation and its two-sided p-value: exact over all
/// permutations up to 9 points, Student-t approximation beyond.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InvalidConfig(format!("rank correlation needs at least 3 points, got {n}")));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let rho = pearson(&rx, &ry);
    if n <= 9 {
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut extreme, mut total) = (0u64, 0u64);
        loop {
            let permuted: Vec<f64> = perm.iter().map(|&i| ry[i]).collect();
            if pearson(&rx, &permuted).abs() >= rho.abs() - 1e-12 {
                extreme += 1;
            }
            total += 1;
            if !next_permutation(&mut perm) {
                break;
            }
        }
        return Ok((rho, extreme as f64 / total as f64));
    }
    if rho.abs() >= 1.0 {
        return Ok((rho, 0.0));
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok((rho, 2.0 * (1.0 - dist.cdf(t.abs()))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PePoint {
    pub k: usize,
    pub queries: usize,
    pub mean_pe: f64,
    pub std_err: f64,
    pub p50_micros: u128,
    pub p95_micros: u128,
    pub mean_examined: f64,
}

/// Runs `queries` sampled entities at `k` and summarizes pruning and latency.
pub fn measure_point(engine: &Engine, k: usize, queries: usize, seed: u64) -> Result<PePoint> {
    let ids = engine.sample_queries(queries, seed);
    if ids.is_empty() {
        return Err(Error::Empty("query sample"));
    }
    let results = engine.query_many(&ids, k)?;
    let n = engine.seqs.len();
    let pes: Vec<f64> = results.iter().map(|r| (r.stats.entities_examined as f64 - r.hits.len() as f64) / n as f64).collect();
    let mean = measure_pe(&results, n)?;
    let var = if pes.len() > 1 { pes.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (pes.len() - 1) as f64 } else { 0.0 };
    let mut lat: Vec<u128> = results.iter().map(|r| r.stats.wall_micros).collect();
    lat.sort_unstable();
    let pct = |q: f64| lat[((lat.len() - 1) as f64 * q).round() as usize];
    Ok(PePoint {
        k,
        queries: ids.len(),
        mean_pe: mean,
        std_err: (var / pes.len() as f64).sqrt(),
        p50_micros: pct(0.5),
        p95_micros: pct(0.95),
        mean_examined: results.iter().map(|r| r.stats.entities_examined as f64).sum::<f64>() / results.len() as f64,
    })
}

/// Fresh simulated traces for the given entity names, one seed per name.
pub fn fresh_sequences(engine: &Engine, params: &IMParams, names: &[String], seed: u64) -> Result<Vec<CellSequence>> {
    let base = engine.index.base_units();
    names
        .par_iter()
        .enumerate()
        .map(|(i, name)| {
            let w = simulate_walk(params, &engine.index, None, derive_seed(seed, "update", i as u64))?;
            let cells: Vec<StCell> = w.positions.iter().enumerate().map(|(t, &r)| StCell::new(t as u32, base[r])).collect();
            lift_sequence(name, &cells, &engine.index)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateTiming {
    pub existing_fraction: f64,
    pub batch: usize,
    /// Signature computation plus tree maintenance.
    pub micros: u128,
    /// Tree maintenance alone.
    pub tree_micros: u128,
    pub nodes_touched: usize,
    pub nodes_created: usize,
    pub nodes_removed: usize,
}

/// Times one-by-one updates of `batch` entities, `existing_fraction` of them
/// already indexed and the rest new. Traces are simulated before the clock
/// starts; signature computation and tree maintenance are timed separately.
pub fn time_update_mix(
    engine: &mut Engine,
    params: &IMParams,
    existing_fraction: f64,
    batch: usize,
    seed: u64,
) -> Result<UpdateTiming> {
    let existing = ((batch as f64) * existing_fraction).round() as usize;
    let mut ids: Vec<EntityId> = engine.sample_queries(existing, derive_seed(seed, "update-pick", 0));
    let n0 = engine.seqs.len();
    let mut names: Vec<String> = ids.iter().map(|&e| engine.seqs[e as usize].entity.clone()).collect();
    let fresh = batch - ids.len();
    names.extend((0..fresh).map(|i| format!("new{seed:x}_{i}")));
    ids.extend((0..fresh).map(|i| (n0 + i) as EntityId));
    let seqs = fresh_sequences(engine, params, &names, seed)?;
    let mut stats = UpdateStats::default();
    let (mut micros, mut tree_micros) = (0u128, 0u128);
    for (e, seq) in ids.into_iter().zip(seqs) {
        let start = Instant::now();
        let sig = compute_signatures(&seq, &engine.family, &engine.index)?;
        let mid = Instant::now();
        stats += engine.tree.update_entity(e, &sig)?;
        let end = Instant::now();
        micros += (end - start).as_micros();
        tree_micros += (end - mid).as_micros();
        if e as usize == engine.seqs.len() {
            engine.seqs.push(seq);
            engine.sigs.push(Some(sig));
        } else {
            engine.seqs[e as usize] = seq;
            engine.sigs[e as usize] = Some(sig);
        }
    }
    Ok(UpdateTiming {
        existing_fraction,
        batch,
        micros,
        tree_micros,
        nodes_touched: stats.nodes_touched,
        nodes_created: stats.nodes_created,
        nodes_removed: stats.nodes_removed,
    })
}
