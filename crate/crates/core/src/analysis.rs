//! Pruning-effectiveness prediction and measurement, and top-k list
//! comparison.

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::adm::{level_overlaps, Measure};
use crate::error::{Error, Result};
use crate::query::{Hit, QueryResult};
use crate::traces::CellSequence;
use crate::tree::{EntityId, MinSigTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PEConfig {
    /// Base spatial units.
    pub n: u64,
    /// Temporal units.
    pub t: u64,
    pub n_h: usize,
    /// Typical finest-level trace size `|seq^m|`.
    pub trace_size: usize,
    /// Number of equal sub-ranges of `[0, n*t - 1]`.
    pub n_r: usize,
    /// Minimal finest-level overlap of entities above `d_e`.
    pub n_c: usize,
    /// Expected k-th best degree.
    pub d_e: f64,
}

impl PEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t == 0 {
            return Err(Error::InvalidConfig("n * t must be at least 1".into()));
        }
        if self.n_r == 0 || self.n_c == 0 || self.n_h == 0 || self.trace_size == 0 {
            return Err(Error::InvalidConfig("n_r, n_c, n_h and trace size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn range(&self) -> u64 {
        self.n * self.t
    }

    fn check_value(&self, i: u64) -> Result<()> {
        self.validate()?;
        if i >= self.range() {
            return Err(Error::OutOfRange { value: i, max: self.range() - 1 });
        }
        Ok(())
    }

    /// Representative value of sub-range `j`: its midpoint.
    pub fn bucket_value(&self, j: usize) -> f64 {
        let width = self.range() as f64 / self.n_r as f64;
        (j as f64 + 0.5) * width - 0.5
    }
}

fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // Neumaier summation of the scaled terms.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let v = (x - max).exp();
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    max + (sum + comp).ln()
}

/// `x * ln(p)` with the convention `0 * ln(0) = 0`.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Probability that one finest-level signature entry equals `i`:
/// `sum_{x=1}^{s} C(s,x) (1/nt)^x ((nt-i)/nt)^(s-x)` with `s = |seq^m|`.
pub fn sig_value_pmf(cfg: &PEConfig, i: u64) -> Result<f64> {
    cfg.check_value(i)?;
    Ok(sig_value_at(cfg.trace_size as u64, cfg.range() as f64, i))
}

fn sig_value_at(s: u64, nt: f64, i: u64) -> f64 {
    let rest = (nt - i as f64) / nt;
    log_sum_exp((1..=s).map(|x| {
        ln_binomial(s, x) + xlogy(x as f64, 1.0 / nt) + xlogy((s - x) as f64, rest)
    }))
    .exp()
}

/// `sig_value_pmf` for every value in `[0, n*t - 1]`.
pub fn sig_value_pmfs(cfg: &PEConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let s = cfg.trace_size as u64;
    let nt = cfg.range() as f64;
    Ok((0..cfg.range()).into_par_iter().map(|i| sig_value_at(s, nt, i)).collect())
}

/// `sum_{x=1}^{n_h} C(n_h,x) p^x c^(n_h-x)` for pmf `p` and cumulative `c`
/// below the value, i.e. `(p + c)^n_h - c^n_h`.
fn routing_term(p: f64, c: f64, n_h: usize) -> f64 {
    let n = n_h as f64;
    if p <= 0.0 {
        return 0.0;
    }
    if c <= 0.0 {
        return (n * p.ln()).exp();
    }
    ((n * c.ln()).exp() * (n * (p / c).ln_1p()).exp_m1()).max(0.0)
}

/// Probability that a node's routing value equals `i`.
pub fn routing_value_pmf(cfg: &PEConfig, i: u64) -> Result<f64> {
    cfg.check_value(i)?;
    let s = cfg.trace_size as u64;
    let nt = cfg.range() as f64;
    let below: f64 = (0..i).map(|x| sig_value_at(s, nt, x)).sum();
    Ok(routing_term(sig_value_at(s, nt, i), below, cfg.n_h))
}

/// `routing_value_pmf` for every value in `[0, n*t - 1]`.
pub fn routing_value_pmfs(cfg: &PEConfig) -> Result<Vec<f64>> {
    let p = sig_value_pmfs(cfg)?;
    let mut out = Vec::with_capacity(p.len());
    let mut below = 0.0;
    for &pi in &p {
        out.push(routing_term(pi, below, cfg.n_h));
        below += pi;
    }
    Ok(out)
}

/// Share of leaves per sub-range from the routing-value distribution,
/// normalized to sum to one.
pub fn analytic_bucket_weights(cfg: &PEConfig) -> Result<Vec<f64>> {
    let pmf = routing_value_pmfs(cfg)?;
    let mut v = vec![0.0; cfg.n_r];
    let range = cfg.range() as f64;
    for (i, p) in pmf.iter().enumerate() {
        let j = ((i as f64 * cfg.n_r as f64 / range) as usize).min(cfg.n_r - 1);
        v[j] += p;
    }
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidConfig("routing-value distribution has no mass".into()));
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// Share of indexed entities per sub-range of their leaf's routing value.
pub fn tree_bucket_weights(tree: &MinSigTree, n_r: usize) -> Result<Vec<f64>> {
    if n_r == 0 {
        return Err(Error::InvalidConfig("n_r must be at least 1".into()));
    }
    let m = tree.height();
    let mut v = vec![0.0; n_r];
    let mut total = 0.0;
    for id in tree.preorder() {
        let node = tree.node(id);
        if node.is_leaf(m) && !node.entities.is_empty() {
            let j = ((node.value as f64 * n_r as f64 / tree.range() as f64) as usize).min(n_r - 1);
            v[j] += node.entities.len() as f64;
            total += node.entities.len() as f64;
        }
    }
    if total == 0.0 {
        return Err(Error::Empty("tree"));
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// Probability that a node whose routing value is `r` cannot be discarded:
/// at least `n_c` of the query's `|seq^m|` cells survive pruning.
pub fn keep_probability(cfg: &PEConfig, r: f64) -> f64 {
    let s = cfg.trace_size as u64;
    if cfg.n_c as u64 > s {
        return 0.0;
    }
    let top = cfg.range() as f64 - 1.0;
    if top <= 0.0 {
        return 1.0;
    }
    let r = r.clamp(0.0, top);
    let keep = (top - r) / top;
    let drop = r / top;
    log_sum_exp((cfg.n_c as u64..=s).map(|x| {
        ln_binomial(s, x) + xlogy(x as f64, keep) + xlogy((s - x) as f64, drop)
    }))
    .exp()
    .min(1.0)
}

/// `PE = sum_j V[j] q(R[j])`.
pub fn predict_pe(cfg: &PEConfig, v: &[f64]) -> Result<f64> {
    cfg.validate()?;
    if v.len() != cfg.n_r {
        return Err(Error::LengthMismatch(cfg.n_r, v.len()));
    }
    let total: f64 = v.iter().sum();
    if v.iter().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidConfig(format!("bucket weights must be nonnegative and sum to 1, got {total}")));
    }
    Ok(v.iter().enumerate().map(|(j, &w)| w * keep_probability(cfg, cfg.bucket_value(j))).sum())
}

/// Prediction with bucket weights from the routing-value distribution.
pub fn predict_pe_analytic(cfg: &PEConfig) -> Result<f64> {
    predict_pe(cfg, &analytic_bucket_weights(cfg)?)
}

/// Mean of `(examined - k) / |E|` over queries.
pub fn measure_pe(results: &[QueryResult], corpus_size: usize) -> Result<f64> {
    if results.is_empty() || corpus_size == 0 {
        return Err(Error::Empty("query results"));
    }
    let sum: f64 = results
        .iter()
        .map(|r| (r.stats.entities_examined as f64 - r.hits.len() as f64) / corpus_size as f64)
        .sum();
    Ok(sum / results.len() as f64)
}

/// Estimates `(d_e, n_c)` from `queries` sampled entities: `d_e` is the mean
/// k-th best degree and `n_c` the smallest finest-level overlap among sampled
/// pairs whose degree reaches `d_e` (at least 1).
pub fn estimate_de_nc(seqs: &[CellSequence], measure: &Measure, k: usize, queries: usize, seed: u64) -> Result<(f64, usize)> {
    if seqs.len() <= k || k == 0 {
        return Err(Error::KOutOfRange { k, entities: seqs.len().saturating_sub(1) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, seqs.len(), queries.min(seqs.len())).into_vec();
    let per_query: Vec<Vec<(f64, u32)>> = picks
        .par_iter()
        .map(|&q| {
            seqs.iter()
                .enumerate()
                .filter(|&(i, _)| i != q)
                .map(|(_, s)| {
                    let o = level_overlaps(&seqs[q], s)?;
                    let finest = o.levels.last().map_or(0, |c| c.overlap);
                    Ok((measure.score(&o), finest))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let kth: Vec<f64> = per_query
        .iter()
        .map(|d| {
            let mut deg: Vec<f64> = d.iter().map(|x| x.0).collect();
            deg.sort_by(|a, b| b.total_cmp(a));
            deg[k - 1]
        })
        .collect();
    let d_e = kth.iter().sum::<f64>() / kth.len() as f64;
    let n_c = per_query
        .iter()
        .flatten()
        .filter(|&&(d, _)| d >= d_e && d > 0.0)
        .map(|&(_, o)| o)
        .min()
        .unwrap_or(1)
        .max(1);
    Ok((d_e, n_c as usize))
}

/// A top-k answer: entities with nonincreasing degrees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList(Vec<Hit>);

impl RankedList {
    pub fn new(hits: Vec<Hit>) -> Result<Self> {
        if hits.windows(2).any(|w| w[0].degree < w[1].degree) {
            return Err(Error::InvalidConfig("ranked list degrees must be nonincreasing".into()));
        }
        let ids: HashSet<EntityId> = hits.iter().map(|h| h.entity).collect();
        if ids.len() != hits.len() {
            return Err(Error::InvalidConfig("ranked list repeats an entity".into()));
        }
        Ok(RankedList(hits))
    }

    /// A list of ids in rank order with placeholder degrees.
    pub fn from_ids(ids: &[EntityId]) -> Result<Self> {
        Self::new(ids.iter().map(|&entity| Hit { entity, degree: 0.0 }).collect())
    }

    pub fn hits(&self) -> &[Hit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn positions(&self) -> HashMap<EntityId, usize> {
        self.0.iter().enumerate().map(|(i, h)| (h.entity, i)).collect()
    }
}

fn pairs(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Fraction of discordant pairs between two rankings of the same elements.
pub fn kendall_tau(a: &RankedList, b: &RankedList) -> Result<f64> {
    let pb = b.positions();
    if a.len() != b.len() || a.0.iter().any(|h| !pb.contains_key(&h.entity)) {
        return Err(Error::MismatchedLists);
    }
    let n = a.len();
    if n < 2 {
        return Ok(0.0);
    }
    let rank_b: Vec<usize> = a.0.iter().map(|h| pb[&h.entity]).collect();
    let mut discordant = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            discordant += usize::from(rank_b[i] > rank_b[j]);
        }
    }
    Ok(discordant as f64 / pairs(n))
}

/// Expected Kendall distance after appending each list's missing elements
/// in uniformly random order; pairs missing from the same list count 1/2.
pub fn k_avg(a: &RankedList, b: &RankedList) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let (pa, pb) = (a.positions(), b.positions());
    let mut all: Vec<EntityId> = a.0.iter().map(|h| h.entity).collect();
    all.extend(b.0.iter().map(|h| h.entity).filter(|e| !pa.contains_key(e)));
    let n = all.len();
    if n < 2 {
        return Ok(0.0);
    }
    // Missing elements rank after every present one; `None` marks a tie to
    // be broken at random.
    let cmp = |pos: &HashMap<EntityId, usize>, x: EntityId, y: EntityId| match (pos.get(&x), pos.get(&y)) {
        (Some(i), Some(j)) => Some(i < j),
        (Some(_), None) => Some(true),
        (None, Some(_)) => Some(false),
        (None, None) => None,
    };
    let mut expected = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (all[i], all[j]);
            expected += match (cmp(&pa, x, y), cmp(&pb, x, y)) {
                (Some(p), Some(q)) => f64::from(u8::from(p != q)),
                _ => 0.5,
            };
        }
    }
    Ok(expected / pairs(n))
}

/// Mean absolute positional degree gap.
pub fn ad_diff(a: &RankedList, b: &RankedList) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| (x.degree - y.degree).abs()).sum::<f64>() / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, t: u64, n_h: usize, s: usize) -> PEConfig {
        PEConfig { n, t, n_h, trace_size: s, n_r: 10, n_c: 1, d_e: 0.0 }
    }

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
    }

    #[test]
    fn single_cell_is_uniform() {
        let c = cfg(10, 5, 1, 1);
        for i in [0, 7, 49] {
            assert!((sig_value_pmf(&c, i).unwrap() - 1.0 / 50.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pmf_at_zero_has_closed_form() {
        for s in [1usize, 3, 20, 72] {
            let c = cfg(100, 24, 1, s);
            let expect = (1.0 + 1.0 / 2400.0f64).powi(s as i32) - 1.0;
            assert!((sig_value_pmf(&c, 0).unwrap() - expect).abs() < 1e-14 * expect.max(1e-300) * 100.0);
        }
    }

    #[test]
    fn pmf_matches_direct_sum() {
        let c = cfg(6, 4, 1, 5);
        let nt = 24.0f64;
        for i in 0..24u64 {
            let direct: f64 = (1..=5u64)
                .map(|x| binom(5, x) * (1.0 / nt).powi(x as i32) * ((nt - i as f64) / nt).powi(5 - x as i32))
                .sum();
            assert!((sig_value_pmf(&c, i).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn pmf_nearly_normalized() {
        let c = cfg(256, 72, 1, 72);
        let total: f64 = sig_value_pmfs(&c).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 0.02, "{total}");
    }

    #[test]
    fn value_out_of_range() {
        let c = cfg(4, 4, 1, 2);
        assert!(matches!(sig_value_pmf(&c, 16), Err(Error::OutOfRange { value: 16, max: 15 })));
        assert!(routing_value_pmf(&c, 16).is_err());
    }

    #[test]
    fn routing_pmf_forms() {
        let c1 = cfg(8, 3, 1, 4);
        for i in 0..24 {
            assert!((routing_value_pmf(&c1, i).unwrap() - sig_value_pmf(&c1, i).unwrap()).abs() < 1e-15);
        }
        let c2 = cfg(8, 3, 2, 4);
        let p0 = sig_value_pmf(&c2, 0).unwrap();
        assert!((routing_value_pmf(&c2, 0).unwrap() - p0 * p0).abs() < 1e-18);
        // Explicit binomial sum for a few n_h.
        for n_h in [3usize, 5, 9] {
            let c = cfg(8, 3, n_h, 4);
            let all = routing_value_pmfs(&c).unwrap();
            let p = sig_value_pmfs(&c).unwrap();
            let mut below = 0.0;
            for i in 0..24 {
                let direct: f64 = (1..=n_h as u64)
                    .map(|x| binom(n_h as u64, x) * p[i].powi(x as i32) * f64::powi(below, (n_h as u64 - x) as i32))
                    .sum();
                assert!((all[i] - direct).abs() < 1e-12, "n_h={n_h} i={i}");
                assert!((routing_value_pmf(&c, i as u64).unwrap() - direct).abs() < 1e-12);
                below += p[i];
            }
        }
    }

    #[test]
    fn routing_cumulative_monotone() {
        let c = cfg(64, 10, 16, 10);
        let pmf = routing_value_pmfs(&c).unwrap();
        assert!(pmf.iter().all(|&p| (0.0..=1.0).contains(&p)));
        let mut acc = 0.0;
        for p in pmf {
            let next = acc + p;
            assert!(next >= acc);
            acc = next;
        }
    }

    #[test]
    fn keep_probability_edges() {
        let mut c = cfg(100, 10, 4, 20);
        c.n_c = 21;
        assert_eq!(keep_probability(&c, 0.0), 0.0);
        let v = vec![0.1; 10];
        assert_eq!(predict_pe(&c, &v).unwrap(), 0.0);
        c.n_c = 20;
        assert_eq!(keep_probability(&c, 0.0), 1.0);
        c.n_c = 5;
        assert!((keep_probability(&c, 0.0) - 1.0).abs() < 1e-12);
        let top: f64 = 999.0;
        let r: f64 = 300.0;
        let direct: f64 = (5..=20u64)
            .map(|x| binom(20, x) * ((top - r) / top).powi(x as i32) * (r / top).powi(20 - x as i32))
            .sum();
        assert!((keep_probability(&c, r) - direct).abs() < 1e-12);
    }

    #[test]
    fn predict_rejects_bad_weights() {
        let c = cfg(100, 10, 4, 20);
        assert!(predict_pe(&c, &[0.5; 10]).is_err());
        assert!(predict_pe(&c, &[1.0]).is_err());
    }

    #[test]
    fn prediction_falls_with_more_hashes() {
        let mut last = f64::INFINITY;
        for n_h in [1, 4, 16, 64, 256] {
            let c = PEConfig { n: 256, t: 24, n_h, trace_size: 24, n_r: 32, n_c: 3, d_e: 0.1 };
            let pe = predict_pe_analytic(&c).unwrap();
            assert!(pe <= last + 1e-12 && (0.0..=1.0).contains(&pe), "n_h={n_h}: {pe}");
            last = pe;
        }
    }

    fn qr(examined: usize, k: usize) -> QueryResult {
        QueryResult {
            hits: (0..k).map(|i| Hit { entity: i as u32, degree: 0.0 }).collect(),
            stats: crate::query::QueryStats { entities_examined: examined, ..Default::default() },
        }
    }

    #[test]
    fn measured_pe_arithmetic() {
        assert!((measure_pe(&[qr(60, 10)], 1000).unwrap() - 0.05).abs() < 1e-15);
        assert!((measure_pe(&[qr(999, 10)], 1000).unwrap() - 989.0 / 1000.0).abs() < 1e-15);
        assert!(measure_pe(&[], 10).is_err());
    }

    fn ids(v: &[u32]) -> RankedList {
        RankedList::from_ids(v).unwrap()
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&ids(&[1, 2, 3, 4]), &ids(&[1, 2, 3, 4])).unwrap(), 0.0);
        assert_eq!(kendall_tau(&ids(&[1, 2, 3, 4]), &ids(&[4, 3, 2, 1])).unwrap(), 1.0);
        assert!((kendall_tau(&ids(&[1, 2, 3]), &ids(&[1, 3, 2])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(kendall_tau(&ids(&[1, 2]), &ids(&[1, 3])), Err(Error::MismatchedLists)));
    }

    /// Averages the Kendall distance over every completion order.
    fn k_avg_enumerated(a: &[u32], b: &[u32]) -> f64 {
        fn perms(v: Vec<u32>) -> Vec<Vec<u32>> {
            if v.len() <= 1 {
                return vec![v];
            }
            let mut out = Vec::new();
            for i in 0..v.len() {
                let mut rest = v.clone();
                let x = rest.remove(i);
                for mut p in perms(rest) {
                    p.insert(0, x);
                    out.push(p);
                }
            }
            out
        }
        let miss_a: Vec<u32> = b.iter().copied().filter(|x| !a.contains(x)).collect();
        let miss_b: Vec<u32> = a.iter().copied().filter(|x| !b.contains(x)).collect();
        let mut total = 0.0;
        let mut count = 0.0;
        for pa in perms(miss_a.clone()) {
            for pb in perms(miss_b.clone()) {
                let fa: Vec<u32> = a.iter().copied().chain(pa.iter().copied()).collect();
                let fb: Vec<u32> = b.iter().copied().chain(pb.iter().copied()).collect();
                total += kendall_tau(&ids(&fa), &ids(&fb)).unwrap();
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn k_avg_matches_enumeration() {
        let cases: [(&[u32], &[u32]); 6] = [
            (&[1, 2], &[3, 4]),
            (&[1, 2], &[2, 1]),
            (&[1, 2, 3], &[3, 4, 1]),
            (&[1, 2, 3], &[4, 5, 6]),
            (&[5, 1, 2, 3], &[1, 9, 3, 8]),
            (&[1], &[2]),
        ];
        for (a, b) in cases {
            let got = k_avg(&ids(a), &ids(b)).unwrap();
            assert!((got - k_avg_enumerated(a, b)).abs() < 1e-12, "{a:?} {b:?}");
        }
        assert_eq!(k_avg(&ids(&[4, 2, 7]), &ids(&[4, 2, 7])).unwrap(), 0.0);
        assert!(k_avg(&ids(&[1, 2]), &ids(&[3, 4])).unwrap() >= 0.5);
        assert!(k_avg(&ids(&[1, 2]), &ids(&[3])).is_err());
    }

    #[test]
    fn ad_diff_examples() {
        let a = RankedList::new(vec![Hit { entity: 1, degree: 0.9 }, Hit { entity: 2, degree: 0.4 }]).unwrap();
        let b = RankedList::new(vec![Hit { entity: 3, degree: 0.7 }, Hit { entity: 2, degree: 0.2 }]).unwrap();
        assert_eq!(ad_diff(&a, &a).unwrap(), 0.0);
        assert!((ad_diff(&a, &b).unwrap() - 0.2).abs() < 1e-15);
        assert!(RankedList::new(vec![Hit { entity: 1, degree: 0.1 }, Hit { entity: 2, degree: 0.4 }]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn kendall_is_a_metric(seed in 0u64..500, n in 2usize..8) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<u32> = (0..n as u32).collect();
            let mut x = base.clone();
            let mut y = base.clone();
            let mut z = base.clone();
            x.shuffle(&mut rng);
            y.shuffle(&mut rng);
            z.shuffle(&mut rng);
            let (x, y, z) = (ids(&x), ids(&y), ids(&z));
            let dxy = kendall_tau(&x, &y).unwrap();
            proptest::prop_assert_eq!(dxy, kendall_tau(&y, &x).unwrap());
            proptest::prop_assert_eq!(kendall_tau(&x, &x).unwrap(), 0.0);
            proptest::prop_assert!(dxy <= kendall_tau(&x, &z).unwrap() + kendall_tau(&z, &y).unwrap() + 1e-12);
        }
    }
}
