//! Hierarchy-aware MinHash over ST-cells.
//!
//! Base cells are hashed by seeded 64-bit mixing reduced modulo the range.
//! A coarse cell hashes to the minimum over its base descendants at the same
//! time, so signatures can only grow from coarse to fine levels.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::{SpIndex, UnitId};
use crate::traces::{CellSequence, StCell, Time};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Mixed { seeds: Vec<u64> },
    /// Explicit base-cell hash values, keyed by `(u, time, base unit)`.
    Table(HashMap<(usize, Time, UnitId), u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashFamily {
    n_h: usize,
    master_seed: u64,
    range: u64,
    kind: Kind,
}

impl HashFamily {
    pub fn new(n_h: usize, master_seed: u64, range: u64) -> Result<Self> {
        if n_h == 0 {
            return Err(Error::InvalidConfig("need at least one hash function".into()));
        }
        if range == 0 {
            return Err(Error::InvalidConfig("hash range must be positive".into()));
        }
        let seeds = (1..=n_h as u64).map(|u| mix64(master_seed.wrapping_add(u.wrapping_mul(GOLDEN)))).collect();
        Ok(HashFamily { n_h, master_seed, range, kind: Kind::Mixed { seeds } })
    }

    /// A family with hand-written base-cell values. Every `(u, time, unit)`
    /// that gets hashed must be present.
    pub fn from_table(n_h: usize, range: u64, table: HashMap<(usize, Time, UnitId), u64>) -> Result<Self> {
        if n_h == 0 || range == 0 {
            return Err(Error::InvalidConfig("need n_h >= 1 and a positive range".into()));
        }
        if let Some(((u, _, _), v)) = table.iter().find(|((u, _, _), v)| *u >= n_h || **v >= range) {
            return Err(Error::InvalidConfig(format!("table entry for h_{} with value {v} is out of bounds", u + 1)));
        }
        Ok(HashFamily { n_h, master_seed: 0, range, kind: Kind::Table(table) })
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn is_table(&self) -> bool {
        matches!(self.kind, Kind::Table(_))
    }

    pub fn check_compatible(&self, other: &HashFamily) -> Result<()> {
        if self != other {
            return Err(Error::FamilyMismatch(format!(
                "n_h {} / seed {} / range {} vs n_h {} / seed {} / range {}",
                self.n_h, self.master_seed, self.range, other.n_h, other.master_seed, other.range
            )));
        }
        Ok(())
    }

    /// All `n_h` hash values of a base cell.
    pub fn hash_base_all(&self, time: Time, unit: UnitId, index: &SpIndex, out: &mut [u64]) {
        match &self.kind {
            Kind::Mixed { seeds } => {
                let cell = mix64(index.key(unit) ^ mix64((time as u64).wrapping_add(GOLDEN)));
                for (o, s) in out.iter_mut().zip(seeds) {
                    *o = mix64(cell ^ s) % self.range;
                }
            }
            Kind::Table(t) => {
                for (u, o) in out.iter_mut().enumerate() {
                    *o = *t
                        .get(&(u, time, unit))
                        .unwrap_or_else(|| panic!("hash table has no h_{} for ({time}, {})", u + 1, index.name(unit)));
                }
            }
        }
    }

    /// `h_u(cell)` for any level; `u` is 0-based.
    pub fn hash_cell(&self, u: usize, cell: StCell, index: &SpIndex) -> Result<u64> {
        if u >= self.n_h {
            return Err(Error::HashIndex { u, n_h: self.n_h });
        }
        if cell.unit == 0 || cell.unit as usize > index.unit_count() {
            return Err(Error::UnknownUnit(format!("#{}", cell.unit)));
        }
        let mut buf = vec![0u64; self.n_h];
        Ok(index
            .base_descendants(cell.unit)
            .iter()
            .map(|&b| {
                self.hash_base_all(cell.time, b, index, &mut buf);
                buf[u]
            })
            .min()
            .expect("every unit has a base descendant"))
    }
}

/// All hash values of the cells in one time slice, one row of `n_h` per unit.
struct Slice {
    values: Vec<u64>,
}

impl Slice {
    fn build(family: &HashFamily, index: &SpIndex, time: Time) -> Slice {
        let n_h = family.n_h;
        let rows = index.unit_count() + 1;
        let mut values = vec![u64::MAX; rows * n_h];
        // Arena ids are in preorder, so a reverse sweep sees children before parents.
        for id in (1..rows as UnitId).rev() {
            if index.is_base(id) {
                let row = &mut values[id as usize * n_h..(id as usize + 1) * n_h];
                family.hash_base_all(time, id, index, row);
            }
            if let Some(p) = index.parent(id) {
                let (lo, hi) = values.split_at_mut(id as usize * n_h);
                let parent = &mut lo[p as usize * n_h..(p as usize + 1) * n_h];
                for (pv, cv) in parent.iter_mut().zip(&hi[..n_h]) {
                    *pv = (*pv).min(*cv);
                }
            }
        }
        Slice { values }
    }

    fn row(&self, unit: UnitId, n_h: usize) -> &[u64] {
        &self.values[unit as usize * n_h..(unit as usize + 1) * n_h]
    }
}

/// Hash vectors of an explicit set of cells, computed by folding each
/// needed subtree once per time.
#[derive(Debug, Clone)]
pub struct CellHashes {
    n_h: usize,
    map: HashMap<StCell, usize>,
    values: Vec<u64>,
}

impl CellHashes {
    pub fn compute<'a>(family: &HashFamily, index: &SpIndex, cells: impl IntoIterator<Item = &'a StCell>) -> Self {
        let n_h = family.n_h;
        let mut out = CellHashes { n_h, map: HashMap::new(), values: Vec::new() };
        let mut buf = vec![0u64; n_h];
        let mut memo: HashMap<StCell, Vec<u64>> = HashMap::new();
        for &cell in cells {
            if out.map.contains_key(&cell) {
                continue;
            }
            let v = fold(family, index, cell, &mut memo, &mut buf);
            out.map.insert(cell, out.values.len() / n_h);
            out.values.extend_from_slice(&v);
        }
        out
    }

    pub fn get(&self, cell: &StCell) -> Option<&[u64]> {
        self.map.get(cell).map(|&i| &self.values[i * self.n_h..(i + 1) * self.n_h])
    }
}

fn fold(family: &HashFamily, index: &SpIndex, cell: StCell, memo: &mut HashMap<StCell, Vec<u64>>, buf: &mut [u64]) -> Vec<u64> {
    if let Some(v) = memo.get(&cell) {
        return v.clone();
    }
    let v = if index.is_base(cell.unit) {
        family.hash_base_all(cell.time, cell.unit, index, buf);
        buf.to_vec()
    } else {
        let mut acc = vec![u64::MAX; family.n_h];
        for &c in index.children(cell.unit) {
            let child = fold(family, index, StCell::new(cell.time, c), memo, buf);
            for (a, x) in acc.iter_mut().zip(&child) {
                *a = (*a).min(*x);
            }
        }
        acc
    };
    memo.insert(cell, v.clone());
    v
}

/// `sigs[l - 1][u]` is `sig^l[u]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureList {
    pub entity: String,
    pub sigs: Vec<Vec<u64>>,
}

impl SignatureList {
    pub fn level(&self, level: usize) -> &[u64] {
        &self.sigs[level - 1]
    }

    pub fn height(&self) -> usize {
        self.sigs.len()
    }
}

/// Position of the maximal value (0-based), ties to the smallest position.
pub fn routing_index(sig: &[u64]) -> usize {
    let mut best = 0;
    for (i, &v) in sig.iter().enumerate().skip(1) {
        if v > sig[best] {
            best = i;
        }
    }
    best
}

/// Elementwise minimum of a nonempty list of signatures.
pub fn group_signature<'a>(sigs: impl IntoIterator<Item = &'a [u64]>) -> Result<Vec<u64>> {
    let mut it = sigs.into_iter();
    let mut acc = it.next().ok_or(Error::Empty("signature group"))?.to_vec();
    for s in it {
        for (a, x) in acc.iter_mut().zip(s) {
            *a = (*a).min(*x);
        }
    }
    Ok(acc)
}

/// Whether a signature value at level `sig_level` rules out a level
/// `cell_level` cell with hash `cell_hash` for the same function.
pub fn excludes(sig_value: u64, sig_level: usize, cell_hash: u64, cell_level: usize) -> Result<bool> {
    if cell_level < sig_level {
        return Err(Error::CoarserCell { cell_level, sig_level });
    }
    Ok(sig_value > cell_hash)
}

pub fn compute_signatures(seq: &CellSequence, family: &HashFamily, index: &SpIndex) -> Result<SignatureList> {
    if seq.is_empty() {
        return Err(Error::EmptyTrace(seq.entity.clone()));
    }
    let all: Vec<StCell> = seq.levels().flatten().copied().collect();
    let hashes = CellHashes::compute(family, index, &all);
    let sigs = seq
        .levels()
        .map(|cells| {
            group_signature(cells.iter().map(|c| hashes.get(c).expect("hashed above"))).expect("nonempty level")
        })
        .collect();
    Ok(SignatureList { entity: seq.entity.clone(), sigs })
}

/// Signatures for many entities. Time slices are tabulated in batches and
/// shared across entities; entities are processed in parallel. Entities
/// with empty traces are skipped and reported by position.
pub fn compute_all_signatures(
    seqs: &[CellSequence],
    family: &HashFamily,
    index: &SpIndex,
) -> (Vec<Option<SignatureList>>, Vec<usize>) {
    let n_h = family.n_h;
    let m = index.height();
    let mut times: Vec<Time> = seqs.iter().flat_map(|s| s.base().iter().map(|c| c.time)).collect();
    times.sort_unstable();
    times.dedup();

    let mut sigs: Vec<Vec<u64>> = seqs.iter().map(|_| vec![u64::MAX; m * n_h]).collect();
    let slice_bytes = (index.unit_count() + 1) * n_h * 8;
    let batch = (64 << 20) / slice_bytes.max(1);
    for chunk in times.chunks(batch.max(1)) {
        let slices: Vec<Slice> = chunk.par_iter().map(|&t| Slice::build(family, index, t)).collect();
        let (t0, t1) = (chunk[0], *chunk.last().unwrap());
        sigs.par_iter_mut().zip(seqs.par_iter()).for_each(|(sig, seq)| {
            for (l, cells) in seq.levels().enumerate() {
                let start = cells.partition_point(|c| c.time < t0);
                let row_out = &mut sig[l * n_h..(l + 1) * n_h];
                for c in cells[start..].iter().take_while(|c| c.time <= t1) {
                    let k = chunk.binary_search(&c.time).expect("time in batch");
                    for (o, v) in row_out.iter_mut().zip(slices[k].row(c.unit, n_h)) {
                        *o = (*o).min(*v);
                    }
                }
            }
        });
    }

    let mut skipped = Vec::new();
    let out = sigs
        .into_iter()
        .zip(seqs)
        .enumerate()
        .map(|(i, (flat, seq))| {
            if seq.is_empty() {
                skipped.push(i);
                return None;
            }
            Some(SignatureList { entity: seq.entity.clone(), sigs: flat.chunks(n_h).map(<[u64]>::to_vec).collect() })
        })
        .collect();
    (out, skipped)
}
