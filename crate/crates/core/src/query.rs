//! Exact top-k search over a MinSigTree, a brute-force oracle, and a
//! cluster-bitmap baseline.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use serde::Serialize;

use crate::adm::Measure;
use crate::error::{Error, Result};
use crate::hierarchy::SpIndex;
use crate::minhash::{CellHashes, HashFamily};
use crate::traces::{CellSequence, StCell};
use crate::tree::{EntityId, MinSigTree, NodeId, ROOT_NODE};

/// Which query cells a tree node may prune.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneScope {
    /// A node at level `j` prunes query cells at every level `>= j`, and a
    /// pruned cell takes its same-time descendants with it.
    #[default]
    Hierarchical,
    /// Nodes prune base-level query cells only.
    FinestOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hit {
    pub entity: EntityId,
    pub degree: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct QueryStats {
    pub entities_examined: usize,
    pub nodes_visited: usize,
    /// `(entities_examined - k) / |E|`.
    pub pe: f64,
    pub wall_micros: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub hits: Vec<Hit>,
    pub stats: QueryStats,
}

/// Orders hits best first: higher degree, then smaller id.
fn better(a: &Hit, b: &Hit) -> Ordering {
    b.degree.total_cmp(&a.degree).then(a.entity.cmp(&b.entity))
}

/// Keeps the best `k` hits seen so far.
struct TopK {
    k: usize,
    /// Max-heap under `better`, so the worst retained hit is on top.
    heap: BinaryHeap<Worst>,
}

struct Worst(Hit);

impl PartialEq for Worst {
    fn eq(&self, o: &Self) -> bool {
        better(&self.0, &o.0) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Worst {
    fn cmp(&self, o: &Self) -> Ordering {
        better(&self.0, &o.0)
    }
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    fn offer(&mut self, h: Hit) {
        if self.heap.len() < self.k {
            self.heap.push(Worst(h));
        } else if better(&h, &self.heap.peek().unwrap().0) == Ordering::Less {
            self.heap.pop();
            self.heap.push(Worst(h));
        }
    }

    /// Degree of the k-th hit once k hits are held.
    fn threshold(&self) -> Option<f64> {
        (self.heap.len() == self.k).then(|| self.heap.peek().unwrap().0.degree)
    }

    fn into_sorted(self) -> Vec<Hit> {
        let mut v: Vec<Hit> = self.heap.into_iter().map(|w| w.0).collect();
        v.sort_by(better);
        v
    }
}

fn check_k(k: usize, candidates: usize, total: usize) -> Result<()> {
    if k == 0 || k > candidates {
        return Err(Error::KOutOfRange { k, entities: total });
    }
    Ok(())
}

fn pe(examined: usize, k: usize, total: usize) -> f64 {
    (examined as f64 - k as f64) / total as f64
}

/// Exact degrees against every entity; the reference answer.
pub fn brute_force_topk(
    seqs: &[CellSequence],
    query: &CellSequence,
    exclude: Option<EntityId>,
    k: usize,
    measure: &Measure,
) -> Result<QueryResult> {
    let start = Instant::now();
    let candidates = seqs.len() - usize::from(exclude.is_some_and(|e| (e as usize) < seqs.len()));
    check_k(k, candidates, seqs.len())?;
    let mut top = TopK::new(k);
    let mut examined = 0;
    for (i, s) in seqs.iter().enumerate() {
        if Some(i as EntityId) == exclude {
            continue;
        }
        examined += 1;
        top.offer(Hit { entity: i as EntityId, degree: measure.degree(query, s)? });
    }
    Ok(QueryResult {
        hits: top.into_sorted(),
        stats: QueryStats {
            entities_examined: examined,
            nodes_visited: 0,
            pe: pe(examined, k, seqs.len()),
            wall_micros: start.elapsed().as_micros(),
        },
    })
}

/// Query cells of every level with their hashes and same-time children.
pub struct PreparedQuery {
    /// `offsets[l - 1]..offsets[l]` are the level-`l` cells.
    offsets: Vec<usize>,
    cells: Vec<StCell>,
    hashes: Vec<u64>,
    children: Vec<Vec<u32>>,
    sizes: Vec<u32>,
    n_h: usize,
}

impl PreparedQuery {
    pub fn new(query: &CellSequence, family: &HashFamily, index: &SpIndex) -> Self {
        let mut offsets = vec![0];
        let mut cells = Vec::new();
        for level in query.levels() {
            cells.extend_from_slice(level);
            offsets.push(cells.len());
        }
        let table = CellHashes::compute(family, index, &cells);
        let n_h = family.n_h();
        let mut hashes = Vec::with_capacity(cells.len() * n_h);
        for c in &cells {
            hashes.extend_from_slice(table.get(c).expect("hashed above"));
        }
        let pos: HashMap<StCell, usize> = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut children = vec![Vec::new(); cells.len()];
        for (i, c) in cells.iter().enumerate().skip(offsets[1]) {
            let p = index.parent(c.unit).expect("below level 1");
            let pi = pos[&StCell::new(c.time, p)];
            children[pi].push(i as u32);
        }
        let sizes = offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect();
        PreparedQuery { offsets, cells, hashes, children, sizes, n_h }
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn cells(&self) -> &[StCell] {
        &self.cells
    }

    fn hash(&self, cell: usize, u: usize) -> u64 {
        self.hashes[cell * self.n_h + u]
    }
}

/// Query cells pruned along a root-to-node path.
#[derive(Debug, Clone)]
pub struct PrunedSet {
    bits: Vec<u64>,
    /// Pruned count per level.
    counts: Vec<u32>,
}

impl PrunedSet {
    /// Nothing pruned yet.
    pub fn new(q: &PreparedQuery) -> Self {
        PrunedSet { bits: vec![0; q.cells.len().div_ceil(64)], counts: vec![0; q.sizes.len()] }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn insert(&mut self, i: usize, level: usize) -> bool {
        if self.contains(i) {
            return false;
        }
        self.bits[i / 64] |= 1 << (i % 64);
        self.counts[level - 1] += 1;
        true
    }

    fn insert_cascading(&mut self, q: &PreparedQuery, i: usize, level: usize) {
        if self.insert(i, level) {
            for &c in &q.children[i] {
                self.insert_cascading(q, c as usize, level + 1);
            }
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Remaining (possibly shared) query cells per level.
    pub fn remaining(&self, q: &PreparedQuery) -> Vec<u32> {
        q.sizes.iter().zip(&self.counts).map(|(s, p)| s - p).collect()
    }

    /// Adds the cells a node's stored signature rules out.
    pub fn apply_node(&mut self, q: &PreparedQuery, tree: &MinSigTree, node: NodeId, scope: PruneScope) {
        let n = tree.node(node);
        if n.level == 0 {
            return;
        }
        let m = q.sizes.len();
        let first_level = match scope {
            PruneScope::Hierarchical => n.level,
            PruneScope::FinestOnly => m,
        };
        for level in first_level..=m {
            for i in q.offsets[level - 1]..q.offsets[level] {
                if self.contains(i) {
                    continue;
                }
                let excluded = match &n.full {
                    Some(full) => full.iter().enumerate().any(|(u, &v)| v > q.hash(i, u)),
                    None => n.value > q.hash(i, n.u),
                };
                if excluded {
                    match scope {
                        PruneScope::Hierarchical => self.insert_cascading(q, i, level),
                        PruneScope::FinestOnly => {
                            self.insert(i, level);
                        }
                    }
                }
            }
        }
    }
}

struct Entry {
    ub: f64,
    /// Deeper entries first among equal bounds, then insertion order.
    level: usize,
    seq: u64,
    node: NodeId,
    pruned: PrunedSet,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.ub.total_cmp(&o.ub).then(self.level.cmp(&o.level)).then(o.seq.cmp(&self.seq))
    }
}

/// Everything a tree query needs, borrowed.
pub struct Searcher<'a> {
    pub tree: &'a MinSigTree,
    pub seqs: &'a [CellSequence],
    pub family: &'a HashFamily,
    pub index: &'a SpIndex,
    pub measure: &'a Measure,
    pub scope: PruneScope,
}

/// One visited node and its bound, for tracing and invariant checks.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitedNode {
    pub node: NodeId,
    pub parent: Option<NodeId>,
    pub ub: f64,
    pub pruned_per_level: Vec<u32>,
}

impl Searcher<'_> {
    pub fn topk(&self, query: &CellSequence, exclude: Option<EntityId>, k: usize) -> Result<QueryResult> {
        self.search(query, exclude, k, None)
    }

    /// Like `topk`, also returning every node whose bound was computed.
    pub fn topk_traced(
        &self,
        query: &CellSequence,
        exclude: Option<EntityId>,
        k: usize,
    ) -> Result<(QueryResult, Vec<VisitedNode>)> {
        let mut trace = Vec::new();
        let r = self.search(query, exclude, k, Some(&mut trace))?;
        Ok((r, trace))
    }

    fn search(
        &self,
        query: &CellSequence,
        exclude: Option<EntityId>,
        k: usize,
        mut trace: Option<&mut Vec<VisitedNode>>,
    ) -> Result<QueryResult> {
        let start = Instant::now();
        self.tree.check_family(self.family)?;
        if query.height() != self.tree.height() {
            return Err(Error::LevelMismatch(query.height(), self.tree.height()));
        }
        let total = self.tree.entity_count();
        let candidates = total - usize::from(exclude.is_some_and(|e| self.tree.contains(e)));
        check_k(k, candidates, total)?;

        let q = PreparedQuery::new(query, self.family, self.index);
        let mut top = TopK::new(k);
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let mut visited = 0usize;
        let mut examined = 0usize;
        heap.push(Entry { ub: 1.0, level: 0, seq, node: ROOT_NODE, pruned: PrunedSet::new(&q) });

        while let Some(entry) = heap.pop() {
            if top.threshold().is_some_and(|t| t >= entry.ub) {
                break;
            }
            let node = self.tree.node(entry.node);
            if node.level == self.tree.height() && entry.node != ROOT_NODE {
                for &e in &node.entities {
                    if Some(e) == exclude {
                        continue;
                    }
                    examined += 1;
                    let degree = self.measure.degree(query, &self.seqs[e as usize])?;
                    top.offer(Hit { entity: e, degree });
                }
                continue;
            }
            for &child in &node.children {
                let mut pruned = entry.pruned.clone();
                pruned.apply_node(&q, self.tree, child, self.scope);
                let ub = self.measure.upper_bound(&q.sizes, &pruned.remaining(&q));
                visited += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(VisitedNode { node: child, parent: Some(entry.node), ub, pruned_per_level: pruned.counts.clone() });
                }
                seq += 1;
                heap.push(Entry { ub, level: self.tree.node(child).level, seq, node: child, pruned });
            }
        }

        Ok(QueryResult {
            hits: top.into_sorted(),
            stats: QueryStats {
                entities_examined: examined,
                nodes_visited: visited,
                pe: pe(examined, k, total),
                wall_micros: start.elapsed().as_micros(),
            },
        })
    }
}

/// Per-level cell clusters and per-entity cluster bit vectors.
#[derive(Debug, Clone)]
pub struct BitmapIndex {
    m: usize,
    /// Cluster id of each distinct cell, per level.
    cluster_of: Vec<HashMap<StCell, u32>>,
    clusters_per_level: Vec<u32>,
    /// Entities sharing one bit vector.
    groups: Vec<(Vec<u64>, Vec<EntityId>)>,
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn find(&mut self, x: u32) -> u32 {
        let p = self.0[x as usize];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x as usize] = r;
        r
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub cluster_count: usize,
    /// Minimum Jaccard similarity of the entity sets of two cells for them
    /// to be linked.
    pub min_support: f64,
    /// Cells at most this many temporal units apart can be linked.
    pub time_window: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { cluster_count: 64, min_support: 0.5, time_window: 2 }
    }
}

/// Groups the distinct cells of one level into exactly `target` clusters
/// (or fewer when there are fewer cells).
fn cluster_level(seqs: &[CellSequence], level: usize, cfg: &BaselineConfig) -> HashMap<StCell, u32> {
    let mut ids: HashMap<StCell, u32> = HashMap::new();
    let mut freq: Vec<u32> = Vec::new();
    for s in seqs {
        for c in s.level(level) {
            let id = *ids.entry(*c).or_insert_with(|| {
                freq.push(0);
                (freq.len() - 1) as u32
            });
            freq[id as usize] += 1;
        }
    }
    let mut pairs: HashMap<(u32, u32), u32> = HashMap::new();
    for s in seqs {
        let cells = s.level(level);
        for (i, a) in cells.iter().enumerate() {
            for b in cells[i + 1..].iter().take_while(|b| b.time <= a.time + cfg.time_window) {
                let (x, y) = (ids[a], ids[b]);
                *pairs.entry((x.min(y), x.max(y))).or_default() += 1;
            }
        }
    }
    let mut uf = UnionFind((0..freq.len() as u32).collect());
    let mut edges: Vec<_> = pairs.into_iter().collect();
    edges.sort_unstable();
    for ((a, b), both) in edges {
        let support = both as f64 / (freq[a as usize] + freq[b as usize] - both) as f64;
        if support >= cfg.min_support {
            uf.union(a, b);
        }
    }
    let mut comps: HashMap<u32, Vec<u32>> = HashMap::new();
    for x in 0..freq.len() as u32 {
        comps.entry(uf.find(x)).or_default().push(x);
    }
    let mut comps: Vec<Vec<u32>> = comps.into_values().collect();
    comps.sort();
    let target = cfg.cluster_count.max(1).min(freq.len().max(1));
    while comps.len() > target {
        // merge the two smallest
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let a = comps.pop().unwrap();
        let b = comps.pop().unwrap();
        let mut merged = [a, b].concat();
        merged.sort_unstable();
        comps.push(merged);
    }
    while comps.len() < target {
        comps.sort_by(|a, b| a.len().cmp(&b.len()).then(b.cmp(a)));
        let largest = comps.pop().unwrap();
        if largest.len() < 2 {
            comps.push(largest);
            break;
        }
        let (x, y) = largest.split_at(largest.len() / 2);
        comps.push(x.to_vec());
        comps.push(y.to_vec());
    }
    comps.sort();
    let by_id: HashMap<u32, StCell> = ids.iter().map(|(c, i)| (*i, *c)).collect();
    let mut out = HashMap::with_capacity(ids.len());
    for (k, comp) in comps.iter().enumerate() {
        for x in comp {
            out.insert(by_id[x], k as u32);
        }
    }
    out
}

impl BitmapIndex {
    pub fn build(seqs: &[CellSequence], cfg: &BaselineConfig) -> Result<Self> {
        if seqs.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let m = seqs[0].height();
        let cluster_of: Vec<HashMap<StCell, u32>> = (1..=m).map(|l| cluster_level(seqs, l, cfg)).collect();
        let clusters_per_level: Vec<u32> =
            cluster_of.iter().map(|c| c.values().copied().max().map_or(0, |x| x + 1)).collect();
        let mut groups: HashMap<Vec<u64>, Vec<EntityId>> = HashMap::new();
        let words = (clusters_per_level.iter().sum::<u32>() as usize).div_ceil(64).max(1);
        let offsets: Vec<u32> = clusters_per_level.iter().scan(0, |acc, &n| { let o = *acc; *acc += n; Some(o) }).collect();
        for (e, s) in seqs.iter().enumerate() {
            let mut bits = vec![0u64; words];
            for l in 1..=m {
                for c in s.level(l) {
                    let b = (offsets[l - 1] + cluster_of[l - 1][c]) as usize;
                    bits[b / 64] |= 1 << (b % 64);
                }
            }
            groups.entry(bits).or_default().push(e as EntityId);
        }
        let mut groups: Vec<(Vec<u64>, Vec<EntityId>)> = groups.into_iter().collect();
        groups.sort();
        Ok(BitmapIndex { m, cluster_of, clusters_per_level, groups })
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn clusters_per_level(&self) -> &[u32] {
        &self.clusters_per_level
    }

    pub fn cluster_of(&self, level: usize, cell: &StCell) -> Option<u32> {
        self.cluster_of[level - 1].get(cell).copied()
    }

    pub fn topk(
        &self,
        seqs: &[CellSequence],
        query: &CellSequence,
        exclude: Option<EntityId>,
        k: usize,
        measure: &Measure,
    ) -> Result<QueryResult> {
        let start = Instant::now();
        if query.height() != self.m {
            return Err(Error::LevelMismatch(query.height(), self.m));
        }
        let candidates = seqs.len() - usize::from(exclude.is_some_and(|e| (e as usize) < seqs.len()));
        check_k(k, candidates, seqs.len())?;
        let offsets: Vec<u32> = self.clusters_per_level.iter().scan(0, |acc, &n| { let o = *acc; *acc += n; Some(o) }).collect();
        // Query cells per global cluster bit, per level.
        let sizes: Vec<u32> = query.levels().map(|l| l.len() as u32).collect();
        let mut per_bit: Vec<(usize, usize, u32)> = Vec::new();
        for l in 1..=self.m {
            let mut counts: HashMap<u32, u32> = HashMap::new();
            for c in query.level(l) {
                if let Some(k) = self.cluster_of(l, c) {
                    *counts.entry(k).or_default() += 1;
                }
            }
            for (k, n) in counts {
                per_bit.push((l, (offsets[l - 1] + k) as usize, n));
            }
        }
        let mut ranked: Vec<(f64, usize)> = self
            .groups
            .iter()
            .enumerate()
            .map(|(g, (bits, _))| {
                let mut shareable = vec![0u32; self.m];
                for &(l, b, n) in &per_bit {
                    if bits[b / 64] >> (b % 64) & 1 == 1 {
                        shareable[l - 1] += n;
                    }
                }
                (measure.upper_bound(&sizes, &shareable), g)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut top = TopK::new(k);
        let mut examined = 0;
        for (ub, g) in ranked {
            if top.threshold().is_some_and(|t| t >= ub) {
                break;
            }
            for &e in &self.groups[g].1 {
                if Some(e) == exclude {
                    continue;
                }
                examined += 1;
                top.offer(Hit { entity: e, degree: measure.degree(query, &seqs[e as usize])? });
            }
        }
        Ok(QueryResult {
            hits: top.into_sorted(),
            stats: QueryStats {
                entities_examined: examined,
                nodes_visited: 0,
                pe: pe(examined, k, seqs.len()),
                wall_micros: start.elapsed().as_micros(),
            },
        })
    }
}

/// Whether two results agree up to ties: same length and equal degrees rank
/// by rank.
pub fn same_degrees(a: &[Hit], b: &[Hit]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.degree == y.degree)
}
