//! Presence instances, ST-cells and per-level cell sequences.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{SpIndex, UnitId};

/// Index of a base temporal unit.
pub type Time = u32;

/// A (base temporal unit, spatial unit) pair. The cell's level is the
/// unit's level in the sp-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StCell {
    pub time: Time,
    pub unit: UnitId,
}

impl StCell {
    pub fn new(time: Time, unit: UnitId) -> Self {
        StCell { time, unit }
    }
}

/// One raw input record: an entity seen at a base location over
/// `[start, end)` epoch seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub entity: String,
    pub location: String,
    pub start: i64,
    pub end: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresenceInstance {
    pub entity: String,
    pub tid: String,
    pub level: usize,
    /// Units from level 1 down to the instance's unit.
    pub path: Vec<UnitId>,
    /// Half-open period in base temporal units.
    pub period: Range<Time>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitalTrace {
    pub entity: String,
    pub instances: Vec<PresenceInstance>,
}

impl DigitalTrace {
    /// Base ST-cells covered by the trace, sorted and deduplicated.
    pub fn base_cells(&self) -> Vec<StCell> {
        let mut cells: Vec<StCell> = self
            .instances
            .iter()
            .flat_map(|pi| {
                let unit = *pi.path.last().expect("instance path is never empty");
                pi.period.clone().map(move |t| StCell::new(t, unit))
            })
            .collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

fn path_to(index: &SpIndex, unit: UnitId) -> Vec<UnitId> {
    let mut path = vec![unit];
    let mut cur = unit;
    while let Some(p) = index.parent(cur) {
        path.push(p);
        cur = p;
    }
    path.reverse();
    path
}

/// Temporal units touched by `[start, end)`; a zero-length record occupies
/// the unit containing `start`.
pub fn discretize_period(start: i64, end: i64, unit_seconds: i64) -> Result<Range<Time>> {
    if start < 0 {
        return Err(Error::NegativeTime(start));
    }
    let t0 = start / unit_seconds;
    let t1 = if end == start { t0 + 1 } else { (end + unit_seconds - 1) / unit_seconds };
    if t1 > u32::MAX as i64 {
        return Err(Error::OutOfRange { value: t1 as u64, max: u32::MAX as u64 });
    }
    Ok(t0 as Time..t1 as Time)
}

/// Groups raw records by entity and discretizes them into base-level
/// presence instances. Traces come back sorted by entity id.
pub fn discretize_trace(raw: &[RawRecord], index: &SpIndex, unit_seconds: i64) -> Result<Vec<DigitalTrace>> {
    if unit_seconds <= 0 {
        return Err(Error::InvalidConfig("temporal unit must be positive".into()));
    }
    let mut by_entity: BTreeMap<&str, Vec<PresenceInstance>> = BTreeMap::new();
    for r in raw {
        if r.end < r.start {
            return Err(Error::InvalidInterval { entity: r.entity.clone(), start: r.start, end: r.end });
        }
        let unit = index.require(&r.location)?;
        if !index.is_base(unit) {
            return Err(Error::UnknownUnit(format!("{} (not a base unit)", r.location)));
        }
        let period = discretize_period(r.start, r.end, unit_seconds)?;
        by_entity.entry(r.entity.as_str()).or_default().push(PresenceInstance {
            entity: r.entity.clone(),
            tid: index.tid().to_string(),
            level: index.height(),
            path: path_to(index, unit),
            period,
        });
    }
    Ok(by_entity
        .into_iter()
        .map(|(e, instances)| DigitalTrace { entity: e.to_string(), instances })
        .collect())
}

/// Per-level ST-cell sets of one entity; `sets[i]` holds level `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSequence {
    pub entity: String,
    pub tid: Arc<str>,
    sets: Vec<Vec<StCell>>,
}

impl CellSequence {
    /// Builds a sequence from already-lifted per-level sets. Each set is
    /// sorted and deduplicated.
    pub fn from_levels(entity: impl Into<String>, tid: Arc<str>, mut sets: Vec<Vec<StCell>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        CellSequence { entity: entity.into(), tid, sets }
    }

    pub fn height(&self) -> usize {
        self.sets.len()
    }

    /// `seq^level`, level in `1..=m`.
    pub fn level(&self, level: usize) -> &[StCell] {
        &self.sets[level - 1]
    }

    pub fn base(&self) -> &[StCell] {
        self.sets.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.base().is_empty()
    }

    pub fn levels(&self) -> impl Iterator<Item = &[StCell]> {
        self.sets.iter().map(Vec::as_slice)
    }
}

/// Lifts base cells through the hierarchy: `seq^i = { t·pat(l) : t·l ∈ seq^(i+1) }`.
pub fn lift_sequence(entity: &str, base_cells: &[StCell], index: &SpIndex) -> Result<CellSequence> {
    let m = index.height();
    let mut ranks = Vec::with_capacity(base_cells.len());
    for c in base_cells {
        if c.unit as usize > index.unit_count() {
            return Err(Error::UnknownUnit(format!("#{}", c.unit)));
        }
        let rank = index
            .base_rank(c.unit)
            .ok_or_else(|| Error::UnknownUnit(format!("{} (not a base unit)", index.name(c.unit))))?;
        ranks.push((c.time, rank));
    }
    let sets = (1..=m)
        .map(|l| ranks.iter().map(|&(t, r)| StCell::new(t, index.ancestor_of_rank(r, l))).collect())
        .collect();
    Ok(CellSequence::from_levels(entity, Arc::from(index.tid()), sets))
}

/// Adjoint presence instance: a co-occurrence of two entities at their
/// deepest common unit over a contiguous period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ajpi {
    pub entities: (String, String),
    pub tid: Arc<str>,
    pub level: usize,
    /// Common ancestors from level 1 down to the shared unit.
    pub path: Vec<UnitId>,
    pub period: Range<Time>,
}

/// Deepest shared level of two base ranks (0 when only the virtual root is shared).
fn shared_depth(index: &SpIndex, ra: usize, rb: usize) -> usize {
    (1..=index.height())
        .rev()
        .find(|&l| index.ancestor_of_rank(ra, l) == index.ancestor_of_rank(rb, l))
        .unwrap_or(0)
}

/// Materializes the maximal AjPIs between two entities: one per
/// time-contiguous run at each deepest common unit.
pub fn ajpis(a: &CellSequence, b: &CellSequence, index: &SpIndex) -> Result<Vec<Ajpi>> {
    if a.tid != b.tid {
        return Err(Error::TidMismatch(a.tid.to_string(), b.tid.to_string()));
    }
    if a.height() != b.height() {
        return Err(Error::LevelMismatch(a.height(), b.height()));
    }
    let (ba, bb) = (a.base(), b.base());
    let mut shared: Vec<(UnitId, Time)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < ba.len() && j < bb.len() {
        let (ta, tb) = (ba[i].time, bb[j].time);
        if ta < tb {
            i += 1;
            continue;
        }
        if tb < ta {
            j += 1;
            continue;
        }
        let ie = i + ba[i..].iter().take_while(|c| c.time == ta).count();
        let je = j + bb[j..].iter().take_while(|c| c.time == ta).count();
        let mut at_t: Vec<UnitId> = Vec::new();
        for ca in &ba[i..ie] {
            let ra = index.base_rank(ca.unit).expect("base cell");
            for cb in &bb[j..je] {
                let rb = index.base_rank(cb.unit).expect("base cell");
                let depth = shared_depth(index, ra, rb);
                if depth > 0 {
                    at_t.push(index.ancestor_of_rank(ra, depth));
                }
            }
        }
        at_t.sort_unstable();
        at_t.dedup();
        // Keep only units with no deeper shared unit beneath them at this time.
        let deepest: Vec<UnitId> = at_t
            .iter()
            .copied()
            .filter(|&u| {
                let range = index.base_range(u);
                !at_t.iter().any(|&v| v != u && index.level(v) > index.level(u) && {
                    let r = index.base_range(v);
                    r.start >= range.start && r.end <= range.end
                })
            })
            .collect();
        shared.extend(deepest.into_iter().map(|u| (u, ta)));
        i = ie;
        j = je;
    }

    shared.sort_unstable();
    let mut out: Vec<Ajpi> = Vec::new();
    let mut k = 0;
    while k < shared.len() {
        let (unit, start) = shared[k];
        let mut end = start + 1;
        k += 1;
        while k < shared.len() && shared[k] == (unit, end) {
            end += 1;
            k += 1;
        }
        out.push(Ajpi {
            entities: (a.entity.clone(), b.entity.clone()),
            tid: a.tid.clone(),
            level: index.level(unit),
            path: path_to(index, unit),
            period: start..end,
        });
    }
    out.sort_by(|x, y| (x.period.start, x.level, &x.path).cmp(&(y.period.start, y.level, &y.path)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{load_sp_index, RootMode};

    fn example() -> SpIndex {
        let edges: Vec<(String, Option<String>)> = [("L1", "L5"), ("L2", "L5"), ("L3", "L6"), ("L4", "L6"), ("L5", "R"), ("L6", "R")]
            .iter()
            .map(|(c, p)| (c.to_string(), Some(p.to_string())))
            .collect();
        load_sp_index(&edges, "t", RootMode::Virtual).unwrap()
    }

    fn cell(idx: &SpIndex, t: Time, name: &str) -> StCell {
        StCell::new(t, idx.id(name).unwrap())
    }

    fn names(idx: &SpIndex, cells: &[StCell]) -> Vec<(Time, String)> {
        cells.iter().map(|c| (c.time, idx.name(c.unit).to_string())).collect()
    }

    #[test]
    fn discretize_whole_hours() {
        let idx = example();
        let rec = |s, e| RawRecord { entity: "e".into(), location: "L1".into(), start: s, end: e };
        let traces = discretize_trace(&[rec(10 * 3600, 12 * 3600)], &idx, 3600).unwrap();
        assert_eq!(names(&idx, &traces[0].base_cells()), vec![(10, "L1".into()), (11, "L1".into())]);
        let traces = discretize_trace(&[rec(10 * 3600, 10 * 3600)], &idx, 3600).unwrap();
        assert_eq!(names(&idx, &traces[0].base_cells()), vec![(10, "L1".into())]);
        // a presence ending mid-hour still occupies that hour
        let traces = discretize_trace(&[rec(10 * 3600 + 5, 11 * 3600 + 1)], &idx, 3600).unwrap();
        assert_eq!(traces[0].base_cells().len(), 2);
    }

    #[test]
    fn discretize_errors() {
        let idx = example();
        let bad = RawRecord { entity: "e".into(), location: "L9".into(), start: 0, end: 10 };
        assert!(matches!(discretize_trace(&[bad], &idx, 3600), Err(Error::UnknownUnit(_))));
        let back = RawRecord { entity: "e".into(), location: "L1".into(), start: 10, end: 5 };
        assert!(matches!(discretize_trace(&[back], &idx, 3600), Err(Error::InvalidInterval { .. })));
        let coarse = RawRecord { entity: "e".into(), location: "L5".into(), start: 0, end: 10 };
        assert!(discretize_trace(&[coarse], &idx, 3600).is_err());
    }

    #[test]
    fn lift_example_one() {
        let idx = example();
        let seq = lift_sequence("e", &[cell(&idx, 1, "L1"), cell(&idx, 2, "L3")], &idx).unwrap();
        assert_eq!(names(&idx, seq.level(1)), vec![(1, "L5".into()), (2, "L6".into())]);
        assert_eq!(names(&idx, seq.level(2)), vec![(1, "L1".into()), (2, "L3".into())]);

        let seq = lift_sequence("e", &[cell(&idx, 1, "L1"), cell(&idx, 1, "L2")], &idx).unwrap();
        assert_eq!(names(&idx, seq.level(1)), vec![(1, "L5".into())]);

        let seq = lift_sequence("e", &[], &idx).unwrap();
        assert!(seq.levels().all(|s| s.is_empty()));
    }

    #[test]
    fn lift_is_idempotent() {
        let idx = example();
        let seq = lift_sequence("e", &[cell(&idx, 4, "L4"), cell(&idx, 1, "L2"), cell(&idx, 1, "L3")], &idx).unwrap();
        let again = lift_sequence("e", seq.base(), &idx).unwrap();
        assert_eq!(seq, again);
    }

    #[test]
    fn ajpi_at_common_ancestor() {
        let idx = example();
        let a = lift_sequence("a", &[cell(&idx, 1, "L1")], &idx).unwrap();
        let b = lift_sequence("b", &[cell(&idx, 1, "L2")], &idx).unwrap();
        let got = ajpis(&a, &b, &idx).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].level, 1);
        assert_eq!(got[0].path, vec![idx.id("L5").unwrap()]);
        assert_eq!(got[0].period, 1..2);
    }

    #[test]
    fn ajpi_self_and_disjoint() {
        let idx = example();
        let a = lift_sequence("a", &[cell(&idx, 1, "L1"), cell(&idx, 2, "L1"), cell(&idx, 5, "L4")], &idx).unwrap();
        let got = ajpis(&a, &a, &idx).unwrap();
        assert!(got.iter().all(|p| p.level == 2));
        let covered: usize = got.iter().map(|p| p.period.len()).sum();
        assert_eq!(covered, 3);
        // contiguous presence at L1 merges into one instance
        assert!(got.iter().any(|p| p.period == (1..3)));

        let b = lift_sequence("b", &[cell(&idx, 3, "L1")], &idx).unwrap();
        assert!(ajpis(&a, &b, &idx).unwrap().is_empty());
    }

    #[test]
    fn ajpi_rejects_mismatched_tid() {
        let idx = example();
        let a = lift_sequence("a", &[cell(&idx, 1, "L1")], &idx).unwrap();
        let mut b = a.clone();
        b.tid = Arc::from("other");
        assert!(matches!(ajpis(&a, &b, &idx), Err(Error::TidMismatch(..))));
    }
}
