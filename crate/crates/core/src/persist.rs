//! Trace ingestion, the canonical binary dataset and the index file.
//!
//! Dataset file (`TTDS`, little endian):
//!
//! ```text
//! magic "TTDS" | version u16 | unit_seconds i64
//! hierarchy CSV: len u32, bytes
//! entity_count u32
//! directory, per entity: name_len u16, name, first_record u64, record_count u32
//! records, entity-contiguous: unit u32, start i64, end i64
//! crc32 of everything above
//! ```
//!
//! Index file (`MSGT`): a fixed header, then nodes in preorder as varints
//! (`level, u, value, child_count, stale`, then `n_h` signature values when
//! full signatures are stored), then one table per leaf in preorder
//! (`count`, then delta-coded sorted entity ids), then a crc32.
//!
//! ```text
//! magic "MSGT" | version u16 | flags u16 (bit 0: full signatures)
//! n_h u32 | master_seed u64 | range u64 | m u8
//! entity_count u32 | node_count u32 | dataset_fingerprint u32
//! ```

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use integer_encoding::VarInt;

use crate::error::{Error, Result};
use crate::hierarchy::{SpIndex, UnitId};
use crate::traces::{discretize_period, lift_sequence, CellSequence, RawRecord, StCell};
use crate::tree::{EntityId, MinSigTree, NodeRecord};

pub const DATASET_VERSION: u16 = 1;
pub const INDEX_VERSION: u16 = 1;

/// One presence at a base unit over `[start, end)` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Presence {
    pub start: i64,
    pub end: i64,
    pub unit: UnitId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecords {
    pub name: String,
    /// Sorted, without duplicates.
    pub records: Vec<Presence>,
}

/// Traces grouped by entity, sorted by entity name, with the hierarchy they
/// refer to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub index: SpIndex,
    pub unit_seconds: i64,
    pub entities: Vec<EntityRecords>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    JsonLines,
    Csv,
}

impl TraceFormat {
    /// Guesses from the extension; anything but `.csv` is JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::JsonLines,
        }
    }
}

#[derive(serde::Deserialize)]
struct LooseRecord {
    entity: String,
    location: String,
    start: i64,
    end: Option<i64>,
}

/// Parses trace lines. A missing end time means one temporal unit.
/// Returns records with their 1-based line numbers.
pub fn parse_traces(reader: impl BufRead, format: TraceFormat, unit_seconds: i64) -> Result<Vec<(usize, RawRecord)>> {
    let mut out = Vec::new();
    match format {
        TraceFormat::JsonLines => {
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let r: LooseRecord =
                    serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
                out.push((i + 1, finish(r, unit_seconds)));
            }
        }
        TraceFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
            for (i, row) in rdr.records().enumerate() {
                let row = row.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
                let line = row.position().map_or(i + 1, |p| p.line() as usize);
                if row.iter().all(str::is_empty) {
                    continue;
                }
                if i == 0 && row.get(0) == Some("entity") {
                    continue;
                }
                if row.len() < 3 || row.len() > 4 {
                    return Err(Error::Parse { line, msg: format!("expected entity,location,start[,end], got {} fields", row.len()) });
                }
                let num = |s: &str| s.parse::<i64>().map_err(|e| Error::Parse { line, msg: format!("`{s}`: {e}") });
                let end = match row.get(3) {
                    Some(s) if !s.is_empty() => Some(num(s)?),
                    _ => None,
                };
                let r = LooseRecord { entity: row[0].to_string(), location: row[1].to_string(), start: num(&row[2])?, end };
                out.push((line, finish(r, unit_seconds)));
            }
        }
    }
    Ok(out)
}

fn finish(r: LooseRecord, unit_seconds: i64) -> RawRecord {
    let end = r.end.unwrap_or(r.start + unit_seconds);
    RawRecord { entity: r.entity, location: r.location, start: r.start, end }
}

impl Dataset {
    /// Groups records by entity and drops duplicates. Every location must be
    /// a base unit of `index`; offending lines are reported together.
    pub fn from_records(records: Vec<(usize, RawRecord)>, index: SpIndex, unit_seconds: i64) -> Result<Self> {
        if unit_seconds <= 0 {
            return Err(Error::InvalidConfig("temporal unit must be positive".into()));
        }
        let mut unknown = Vec::new();
        let mut by_entity: BTreeMap<String, Vec<Presence>> = BTreeMap::new();
        for (line, r) in records {
            let unit = match index.id(&r.location) {
                Some(u) if index.is_base(u) => u,
                _ => {
                    unknown.push(line);
                    continue;
                }
            };
            if r.end < r.start {
                return Err(Error::InvalidInterval { entity: r.entity, start: r.start, end: r.end });
            }
            discretize_period(r.start, r.end, unit_seconds)?;
            by_entity.entry(r.entity).or_default().push(Presence { start: r.start, end: r.end, unit });
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownLocations { lines: unknown });
        }
        let entities = by_entity
            .into_iter()
            .map(|(name, mut records)| {
                records.sort_unstable();
                records.dedup();
                EntityRecords { name, records }
            })
            .collect();
        Ok(Dataset { index, unit_seconds, entities })
    }

    /// Parses a trace file against a hierarchy.
    pub fn ingest(reader: impl BufRead, format: TraceFormat, index: SpIndex, unit_seconds: i64) -> Result<Self> {
        let records = parse_traces(reader, format, unit_seconds)?;
        Self::from_records(records, index, unit_seconds)
    }

    pub fn record_count(&self) -> usize {
        self.entities.iter().map(|e| e.records.len()).sum()
    }

    /// Base cells of one entity, sorted and deduplicated.
    pub fn base_cells(&self, entity: usize) -> Result<Vec<StCell>> {
        let mut cells = Vec::new();
        for p in &self.entities[entity].records {
            for t in discretize_period(p.start, p.end, self.unit_seconds)? {
                cells.push(StCell::new(t, p.unit));
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(cells)
    }

    /// Cell sequences in entity order; entity ids are positions.
    pub fn sequences(&self) -> Result<Vec<CellSequence>> {
        use rayon::prelude::*;
        (0..self.entities.len())
            .into_par_iter()
            .map(|i| lift_sequence(&self.entities[i].name, &self.base_cells(i)?, &self.index))
            .collect()
    }

    /// Ingested datasets are sorted by name; entities added by `upsert`
    /// come after them, so lookup falls back to a scan.
    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        match self.entities.binary_search_by(|e| e.name.as_str().cmp(name)) {
            Ok(i) => Some(i as EntityId),
            Err(_) => self.entities.iter().position(|e| e.name == name).map(|i| i as EntityId),
        }
    }

    /// Replaces the traces of the named entities, appending unknown names at
    /// the end so existing ids stay valid. Returns the affected ids in input
    /// entity order.
    pub fn upsert(&mut self, records: Vec<(usize, RawRecord)>) -> Result<Vec<EntityId>> {
        let incoming = Dataset::from_records(records, self.index.clone(), self.unit_seconds)?;
        let mut ids = Vec::with_capacity(incoming.entities.len());
        for e in incoming.entities {
            match self.entity_id(&e.name) {
                Some(id) => {
                    self.entities[id as usize] = e;
                    ids.push(id);
                }
                None => {
                    ids.push(self.entities.len() as EntityId);
                    self.entities.push(e);
                }
            }
        }
        Ok(ids)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(b"TTDS");
        w.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        w.extend_from_slice(&self.unit_seconds.to_le_bytes());
        let csv = self.index.to_csv();
        w.extend_from_slice(&(csv.len() as u32).to_le_bytes());
        w.extend_from_slice(csv.as_bytes());
        w.extend_from_slice(&(self.entities.len() as u32).to_le_bytes());
        let mut first = 0u64;
        for e in &self.entities {
            w.extend_from_slice(&(e.name.len() as u16).to_le_bytes());
            w.extend_from_slice(e.name.as_bytes());
            w.extend_from_slice(&first.to_le_bytes());
            w.extend_from_slice(&(e.records.len() as u32).to_le_bytes());
            first += e.records.len() as u64;
        }
        for e in &self.entities {
            for p in &e.records {
                w.extend_from_slice(&p.unit.to_le_bytes());
                w.extend_from_slice(&p.start.to_le_bytes());
                w.extend_from_slice(&p.end.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&w);
        w.extend_from_slice(&crc.to_le_bytes());
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let body = verify_crc(bytes)?;
        let mut r = Reader::new(body);
        r.magic(b"TTDS", "dataset")?;
        let version = r.u16()?;
        if version != DATASET_VERSION {
            return Err(Error::Version(version));
        }
        let unit_seconds = r.i64()?;
        let csv_len = r.u32()? as usize;
        let csv = std::str::from_utf8(r.take(csv_len)?).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        let index = SpIndex::from_csv(csv)?;
        let n = r.u32()? as usize;
        let mut dir = Vec::with_capacity(n.min(body.len()));
        for _ in 0..n {
            let len = r.u16()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
            let _first = r.u64()?;
            let count = r.u32()? as usize;
            dir.push((name, count));
        }
        let mut entities = Vec::with_capacity(dir.len());
        for (name, count) in dir {
            let mut records = Vec::with_capacity(count.min(body.len() / 20));
            for _ in 0..count {
                let unit = r.u32()?;
                let start = r.i64()?;
                let end = r.i64()?;
                if unit == 0 || unit as usize > index.unit_count() || !index.is_base(unit) {
                    return Err(Error::UnknownUnit(format!("#{unit}")));
                }
                records.push(Presence { start, end, unit });
            }
            entities.push(EntityRecords { name, records });
        }
        r.finish()?;
        Ok(Dataset { index, unit_seconds, entities })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Checksum of the serialized dataset; index files record it.
    pub fn fingerprint(&self) -> u32 {
        fingerprint_of(&self.to_bytes())
    }
}

/// Fingerprint of a serialized dataset: its trailing checksum.
pub fn fingerprint_of(bytes: &[u8]) -> u32 {
    let n = bytes.len();
    if n < 4 {
        return 0;
    }
    u32::from_le_bytes(bytes[n - 4..].try_into().unwrap())
}

fn verify_crc(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 8 {
        return Err(Error::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    Ok(body)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(Error::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn magic(&mut self, expect: &[u8; 4], what: &'static str) -> Result<()> {
        if self.take(4)? != expect {
            return Err(Error::Magic(what));
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn var(&mut self) -> Result<u64> {
        let (v, n) = u64::decode_var(&self.buf[self.pos..]).ok_or(Error::Truncated)?;
        self.pos += n;
        Ok(v)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Parse { line: 0, msg: format!("{} trailing bytes", self.buf.len() - self.pos) });
        }
        Ok(())
    }
}

fn put_var(w: &mut Vec<u8>, v: u64) {
    let mut tmp = [0u8; 10];
    let n = v.encode_var(&mut tmp);
    w.extend_from_slice(&tmp[..n]);
}

/// Header fields of an index file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexHeader {
    pub n_h: usize,
    pub master_seed: u64,
    pub range: u64,
    pub m: usize,
    pub store_full: bool,
    pub entity_count: usize,
    pub node_count: usize,
    pub dataset_fingerprint: u32,
}

pub fn index_to_bytes(tree: &MinSigTree, dataset_fingerprint: u32) -> Vec<u8> {
    let records = tree.to_parts();
    let mut w = Vec::new();
    w.extend_from_slice(b"MSGT");
    w.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    w.extend_from_slice(&u16::from(tree.stores_full_signatures()).to_le_bytes());
    w.extend_from_slice(&(tree.n_h() as u32).to_le_bytes());
    w.extend_from_slice(&tree.master_seed().to_le_bytes());
    w.extend_from_slice(&tree.range().to_le_bytes());
    w.push(tree.height() as u8);
    w.extend_from_slice(&(tree.entity_count() as u32).to_le_bytes());
    w.extend_from_slice(&(records.len() as u32).to_le_bytes());
    w.extend_from_slice(&dataset_fingerprint.to_le_bytes());
    for r in &records {
        put_var(&mut w, r.level as u64);
        put_var(&mut w, r.u as u64);
        put_var(&mut w, r.value);
        put_var(&mut w, r.child_count as u64);
        w.push(u8::from(r.stale) | (u8::from(r.full.is_some()) << 1));
        if let Some(full) = &r.full {
            for &v in full {
                put_var(&mut w, v);
            }
        }
    }
    for r in records.iter().filter(|r| r.level == tree.height() && r.level > 0) {
        put_var(&mut w, r.entities.len() as u64);
        let mut prev = 0u64;
        for &e in &r.entities {
            put_var(&mut w, e as u64 - prev);
            prev = e as u64;
        }
    }
    let crc = crc32fast::hash(&w);
    w.extend_from_slice(&crc.to_le_bytes());
    w
}

fn read_header(r: &mut Reader) -> Result<IndexHeader> {
    r.magic(b"MSGT", "index")?;
    let version = r.u16()?;
    if version != INDEX_VERSION {
        return Err(Error::Version(version));
    }
    let flags = r.u16()?;
    Ok(IndexHeader {
        store_full: flags & 1 == 1,
        n_h: r.u32()? as usize,
        master_seed: r.u64()?,
        range: r.u64()?,
        m: r.u8()? as usize,
        entity_count: r.u32()? as usize,
        node_count: r.u32()? as usize,
        dataset_fingerprint: r.u32()?,
    })
}

pub fn index_from_bytes(bytes: &[u8]) -> Result<(MinSigTree, IndexHeader)> {
    let body = verify_crc(bytes)?;
    let mut r = Reader::new(body);
    let h = read_header(&mut r)?;
    let mut records = Vec::with_capacity(h.node_count.min(body.len()));
    for _ in 0..h.node_count {
        let level = r.var()? as usize;
        let u = r.var()? as usize;
        let value = r.var()?;
        let child_count = r.var()? as usize;
        let flags = r.u8()?;
        let full = if flags & 2 != 0 {
            Some((0..h.n_h).map(|_| r.var()).collect::<Result<Vec<u64>>>()?)
        } else {
            None
        };
        records.push(NodeRecord { level, u, value, full, child_count, entities: Vec::new(), stale: flags & 1 != 0 });
    }
    for rec in records.iter_mut().filter(|x| x.level == h.m && x.level > 0) {
        let n = r.var()? as usize;
        let mut prev = 0u64;
        for _ in 0..n {
            prev += r.var()?;
            rec.entities.push(prev as EntityId);
        }
    }
    r.finish()?;
    let tree = MinSigTree::from_parts((h.n_h, h.master_seed, h.range), h.m, h.store_full, records)?;
    if tree.entity_count() != h.entity_count {
        return Err(Error::Parse { line: 0, msg: "entity count does not match the leaf tables".into() });
    }
    Ok((tree, h))
}

pub fn save_index(tree: &MinSigTree, dataset_fingerprint: u32, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, index_to_bytes(tree, dataset_fingerprint))?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<(MinSigTree, IndexHeader)> {
    index_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{generate_grid_hierarchy, GridHierarchyConfig};
    use crate::minhash::{compute_all_signatures, HashFamily};

    fn small_index() -> SpIndex {
        generate_grid_hierarchy(&GridHierarchyConfig { side_length: 4, levels: 2, ..Default::default() }, 1).unwrap()
    }

    #[test]
    fn csv_and_json_agree() {
        let idx = small_index();
        let json = "{\"entity\":\"b\",\"location\":\"c0_1\",\"start\":3600}\n\n{\"entity\":\"a\",\"location\":\"c1_1\",\"start\":0,\"end\":7200}\n";
        let csv = "entity,location,start,end\nb,c0_1,3600\na,c1_1,0,7200\n";
        let d1 = Dataset::ingest(json.as_bytes(), TraceFormat::JsonLines, idx.clone(), 3600).unwrap();
        let d2 = Dataset::ingest(csv.as_bytes(), TraceFormat::Csv, idx, 3600).unwrap();
        assert_eq!(d1.entities, d2.entities);
        assert_eq!(d1.entities[0].name, "a");
        assert_eq!(d1.entities[1].records[0].end, 7200);
        assert_eq!(d1.base_cells(0).unwrap().len(), 2);
    }

    #[test]
    fn shuffled_input_groups_and_dedups() {
        let idx = small_index();
        let text = "x,c0_0,0,3600\ny,c1_1,0,3600\nx,c0_1,3600,7200\nx,c0_0,0,3600\ny,c1_1,0,3600\n";
        let d = Dataset::ingest(text.as_bytes(), TraceFormat::Csv, idx, 3600).unwrap();
        assert_eq!(d.entities.len(), 2);
        assert_eq!(d.entities[0].records.len(), 2);
        assert_eq!(d.entities[1].records.len(), 1);
    }

    #[test]
    fn unknown_locations_listed() {
        let idx = small_index();
        let text = "x,c0_0,0\nx,nowhere,0\ny,c9_9,0\ny,u1_0,0\n";
        match Dataset::ingest(text.as_bytes(), TraceFormat::Csv, idx, 3600) {
            Err(Error::UnknownLocations { lines }) => assert_eq!(lines, vec![2, 3, 4]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let idx = small_index();
        match Dataset::ingest("x,c0_0,0\nx,c0_0,soon\n".as_bytes(), TraceFormat::Csv, idx.clone(), 3600) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match Dataset::ingest("{\"entity\":1}\n".as_bytes(), TraceFormat::JsonLines, idx, 3600) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    fn sample_dataset() -> Dataset {
        let idx = small_index();
        let text = "b,c0_1,3600,10800\na,c1_1,0,7200\na,c3_3,7200,9000\nc,c2_0,0,3600\n";
        Dataset::ingest(text.as_bytes(), TraceFormat::Csv, idx, 3600).unwrap()
    }

    #[test]
    fn dataset_round_trip() {
        let d = sample_dataset();
        let bytes = d.to_bytes();
        let back = Dataset::from_bytes(&bytes).unwrap();
        assert_eq!(back.entities, d.entities);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(d.fingerprint(), fingerprint_of(&bytes));
        assert!(matches!(Dataset::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Checksum { .. })));
    }

    fn tree_for(d: &Dataset, full: bool) -> MinSigTree {
        let seqs = d.sequences().unwrap();
        let fam = HashFamily::new(8, 42, 1 << 20).unwrap();
        let (sigs, _) = compute_all_signatures(&seqs, &fam, &d.index);
        let pairs: Vec<_> = sigs.iter().enumerate().map(|(i, s)| (i as EntityId, s.as_ref().unwrap())).collect();
        MinSigTree::build(&pairs, &fam, d.index.height(), full).unwrap()
    }

    #[test]
    fn index_round_trip_is_byte_identical() {
        let d = sample_dataset();
        for full in [false, true] {
            let tree = tree_for(&d, full);
            let bytes = index_to_bytes(&tree, d.fingerprint());
            let (back, header) = index_from_bytes(&bytes).unwrap();
            assert_eq!(header.dataset_fingerprint, d.fingerprint());
            assert_eq!(header.store_full, full);
            assert_eq!(back.leaf_membership(), tree.leaf_membership());
            assert_eq!(index_to_bytes(&back, d.fingerprint()), bytes);
        }
    }

    #[test]
    fn damaged_index_rejected() {
        let d = sample_dataset();
        let bytes = index_to_bytes(&tree_for(&d, false), 0);
        assert!(matches!(index_from_bytes(&bytes[..bytes.len() - 5]), Err(Error::Checksum { .. })));
        assert!(matches!(index_from_bytes(&bytes[..3]), Err(Error::Truncated)));
        let mut flipped = bytes.clone();
        flipped[20] ^= 1;
        assert!(matches!(index_from_bytes(&flipped), Err(Error::Checksum { .. })));
        let mut wrong_version = bytes[..bytes.len() - 4].to_vec();
        wrong_version[4] = 9;
        let crc = crc32fast::hash(&wrong_version);
        wrong_version.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(index_from_bytes(&wrong_version), Err(Error::Version(9))));
    }

    #[test]
    fn updated_tree_round_trips() {
        let d = sample_dataset();
        let mut tree = tree_for(&d, false);
        tree.remove_entity(1).unwrap();
        let bytes = index_to_bytes(&tree, 0);
        let (back, _) = index_from_bytes(&bytes).unwrap();
        assert_eq!(index_to_bytes(&back, 0), bytes);
        assert!(!back.contains(1));
    }
}
