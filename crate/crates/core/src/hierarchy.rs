//! The spatial hierarchy (sp-index): a fixed tree of spatial units whose
//! levels run from 1 (coarsest) to `m` (base units).
//!
//! Units are stored in an arena. Slot 0 is always a virtual root at level 0,
//! which never appears in cell sequences. Base units are numbered in
//! depth-first order so the base descendants of any unit form a contiguous
//! run, which keeps min-over-children hashing and lifting cheap.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type UnitId = u32;

/// Arena slot of the virtual root.
pub const ROOT: UnitId = 0;

const NOT_BASE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct SpatialUnit {
    pub name: String,
    pub level: usize,
    /// Parent unit; `None` for level-1 units and the virtual root.
    pub parent: Option<UnitId>,
    key: u64,
    base_lo: u32,
    base_hi: u32,
}

/// Grid coordinates of base units, present for generated hierarchies.
#[derive(Debug, Clone)]
pub struct GridGeometry {
    pub side: u32,
    /// `(row, col)` per base rank.
    coords: Vec<(u32, u32)>,
    /// Base rank per grid cell, row-major.
    at: Vec<u32>,
}

impl GridGeometry {
    pub fn coords(&self, base_rank: usize) -> (u32, u32) {
        self.coords[base_rank]
    }

    pub fn rank_at(&self, row: u32, col: u32) -> usize {
        self.at[(row * self.side + col) as usize] as usize
    }
}

#[derive(Debug, Clone)]
pub struct SpIndex {
    tid: String,
    m: usize,
    units: Vec<SpatialUnit>,
    children: Vec<Vec<UnitId>>,
    by_name: HashMap<String, UnitId>,
    base: Vec<UnitId>,
    base_rank: Vec<u32>,
    /// `paths[rank * m + (level - 1)]` is the level-`level` ancestor of base rank `rank`.
    paths: Vec<UnitId>,
    grid: Option<GridGeometry>,
    root_name: Option<String>,
}

/// How the single parentless unit of an edge list is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootMode {
    /// The root is a real level-1 unit covering the whole area.
    #[default]
    Unit,
    /// The root is the virtual level-0 node; its children are level 1.
    Virtual,
}

/// Stable 64-bit key of a unit name (FNV-1a), used by hash families.
pub fn name_key(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SpIndex {
    /// Assembles an index from non-root units. `parents[i]` indexes into
    /// `names`; `None` attaches the unit to the virtual root.
    fn assemble(
        tid: String,
        root_name: Option<String>,
        names: Vec<String>,
        parents: Vec<Option<usize>>,
    ) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyHierarchy);
        }
        let n = names.len();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut top = Vec::new();
        for (i, p) in parents.iter().enumerate() {
            match p {
                Some(p) => kids[*p].push(i),
                None => top.push(i),
            }
        }

        // Arena ids are assigned in DFS preorder so base ranks come out contiguous.
        let mut units = vec![SpatialUnit {
            name: root_name.clone().unwrap_or_default(),
            level: 0,
            parent: None,
            key: 0,
            base_lo: 0,
            base_hi: 0,
        }];
        let mut children: Vec<Vec<UnitId>> = vec![Vec::new()];
        let mut leaf_depth: Option<(usize, usize)> = None;
        let mut base = Vec::new();
        let mut stack: Vec<(usize, usize, UnitId)> = top.iter().rev().map(|&i| (i, 1, ROOT)).collect();
        let mut visited = 0usize;
        while let Some((i, level, arena_parent)) = stack.pop() {
            visited += 1;
            let id = units.len() as UnitId;
            units.push(SpatialUnit {
                name: names[i].clone(),
                level,
                parent: (arena_parent != ROOT).then_some(arena_parent),
                key: name_key(&names[i]),
                base_lo: 0,
                base_hi: 0,
            });
            children.push(Vec::new());
            children[arena_parent as usize].push(id);
            if kids[i].is_empty() {
                match leaf_depth {
                    None => leaf_depth = Some((level, i)),
                    Some((d, j)) if d != level => {
                        let (shallow, sd, deep, dd) =
                            if d < level { (j, d, i, level) } else { (i, level, j, d) };
                        return Err(Error::RaggedLeaves {
                            shallow: names[shallow].clone(),
                            shallow_depth: sd,
                            deep: names[deep].clone(),
                            deep_depth: dd,
                        });
                    }
                    _ => {}
                }
                base.push(id);
            }
            for &c in kids[i].iter().rev() {
                stack.push((c, level + 1, id));
            }
        }
        if visited != n {
            // Unreachable units can only come from a parent cycle.
            let seen: std::collections::HashSet<&str> = units.iter().map(|u| u.name.as_str()).collect();
            let stray = (0..n).find(|&i| !seen.contains(names[i].as_str())).unwrap_or(0);
            return Err(Error::Cycle(names[stray].clone()));
        }
        let m = leaf_depth.map(|(d, _)| d).unwrap_or(1);

        let mut base_rank = vec![NOT_BASE; units.len()];
        for (r, &b) in base.iter().enumerate() {
            base_rank[b as usize] = r as u32;
        }
        // Post-order sweep (reverse preorder) fills base ranges bottom-up.
        for id in (0..units.len()).rev() {
            if base_rank[id] != NOT_BASE {
                units[id].base_lo = base_rank[id];
                units[id].base_hi = base_rank[id] + 1;
            } else if !children[id].is_empty() {
                let lo = children[id].iter().map(|&c| units[c as usize].base_lo).min().unwrap();
                let hi = children[id].iter().map(|&c| units[c as usize].base_hi).max().unwrap();
                units[id].base_lo = lo;
                units[id].base_hi = hi;
            }
        }

        let mut paths = vec![ROOT; base.len() * m];
        for (r, &b) in base.iter().enumerate() {
            let mut cur = Some(b);
            while let Some(u) = cur {
                let lvl = units[u as usize].level;
                paths[r * m + lvl - 1] = u;
                cur = units[u as usize].parent;
            }
        }

        let mut by_name = HashMap::with_capacity(units.len());
        for (id, u) in units.iter().enumerate().skip(1) {
            by_name.insert(u.name.clone(), id as UnitId);
        }
        Ok(SpIndex { tid, m, units, children, by_name, base, base_rank, paths, grid: None, root_name })
    }

    pub fn tid(&self) -> &str {
        &self.tid
    }

    /// Height `m`: the level of base units.
    pub fn height(&self) -> usize {
        self.m
    }

    pub fn unit_count(&self) -> usize {
        self.units.len() - 1
    }

    pub fn unit(&self, id: UnitId) -> &SpatialUnit {
        &self.units[id as usize]
    }

    pub fn name(&self, id: UnitId) -> &str {
        &self.units[id as usize].name
    }

    pub fn level(&self, id: UnitId) -> usize {
        self.units[id as usize].level
    }

    pub fn key(&self, id: UnitId) -> u64 {
        self.units[id as usize].key
    }

    /// `pat(l)`; `None` for level-1 units.
    pub fn parent(&self, id: UnitId) -> Option<UnitId> {
        self.units[id as usize].parent
    }

    pub fn children(&self, id: UnitId) -> &[UnitId] {
        &self.children[id as usize]
    }

    pub fn id(&self, name: &str) -> Option<UnitId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<UnitId> {
        self.id(name).ok_or_else(|| Error::UnknownUnit(name.to_string()))
    }

    pub fn base_units(&self) -> &[UnitId] {
        &self.base
    }

    pub fn base_count(&self) -> usize {
        self.base.len()
    }

    pub fn is_base(&self, id: UnitId) -> bool {
        self.base_rank[id as usize] != NOT_BASE
    }

    pub fn base_rank(&self, id: UnitId) -> Option<usize> {
        let r = self.base_rank[id as usize];
        (r != NOT_BASE).then_some(r as usize)
    }

    /// Ranks of the base descendants of `id`.
    pub fn base_range(&self, id: UnitId) -> Range<usize> {
        let u = &self.units[id as usize];
        u.base_lo as usize..u.base_hi as usize
    }

    /// All level-`m` descendants of `id`; a base unit yields itself.
    pub fn base_descendants(&self, id: UnitId) -> &[UnitId] {
        &self.base[self.base_range(id)]
    }

    pub fn base_descendants_of(&self, name: &str) -> Result<Vec<&str>> {
        let id = self.require(name)?;
        Ok(self.base_descendants(id).iter().map(|&b| self.name(b)).collect())
    }

    /// Ancestor of base rank `rank` at `level` (1..=m).
    #[inline]
    pub fn ancestor_of_rank(&self, rank: usize, level: usize) -> UnitId {
        self.paths[rank * self.m + level - 1]
    }

    /// Ancestor of any unit at a level no deeper than its own.
    pub fn ancestor_at(&self, id: UnitId, level: usize) -> UnitId {
        let mut cur = id;
        while self.level(cur) > level {
            cur = self.parent(cur).expect("level-1 unit has no parent");
        }
        cur
    }

    pub fn grid(&self) -> Option<&GridGeometry> {
        self.grid.as_ref()
    }

    /// Units at `level`, in arena order.
    pub fn units_at(&self, level: usize) -> impl Iterator<Item = UnitId> + '_ {
        (1..self.units.len() as UnitId).filter(move |&id| self.level(id) == level)
    }

    /// Exports the hierarchy in the edge-list CSV format read by [`SpIndex::from_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tid={}", self.tid);
        let top = &self.children[ROOT as usize];
        let root_name = match (&self.root_name, top.len()) {
            (Some(r), _) => Some(r.clone()),
            (None, 1) => None,
            (None, _) => Some("ROOT".to_string()),
        };
        if let Some(r) = &root_name {
            out.push_str("# root=virtual\n");
            let _ = writeln!(out, "{r},-");
        }
        for id in 1..self.units.len() as UnitId {
            let parent = match self.parent(id) {
                Some(p) => self.name(p).to_string(),
                None => root_name.clone().unwrap_or_else(|| "-".to_string()),
            };
            let _ = writeln!(out, "{},{}", self.name(id), parent);
        }
        out
    }

    /// Parses the edge-list CSV format: `# key=value` header lines
    /// (`tid`, `root=virtual|unit`) followed by `child,parent` rows where a
    /// parent of `-` marks the root.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut tid = String::from("default");
        let mut mode = RootMode::Unit;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(directive) = line.strip_prefix('#') {
                for tok in directive.split([' ', ',', '\t']).filter(|t| !t.is_empty()) {
                    match tok.split_once('=') {
                        Some(("tid", v)) => tid = v.to_string(),
                        Some(("root", "virtual")) => mode = RootMode::Virtual,
                        Some(("root", "unit")) => mode = RootMode::Unit,
                        _ => {}
                    }
                }
                continue;
            }
            let (child, parent) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: format!("expected `child,parent`, got `{line}`"),
            })?;
            let child = child.trim();
            let parent = parent.trim();
            if child.is_empty() || parent.is_empty() {
                return Err(Error::Parse { line: lineno + 1, msg: "empty field".into() });
            }
            let parent = (parent != "-").then(|| parent.to_string());
            edges.push((child.to_string(), parent));
        }
        let mut index = load_sp_index(&edges, &tid, mode)?;
        index.grid = grid_from_names(&index);
        Ok(index)
    }
}

/// Builds an sp-index from `(child, parent)` edges; a `None` parent marks
/// the root explicitly, otherwise the root is the one unit never listed as
/// a child.
pub fn load_sp_index(edges: &[(String, Option<String>)], tid: &str, mode: RootMode) -> Result<SpIndex> {
    if edges.is_empty() {
        return Err(Error::EmptyHierarchy);
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut names: Vec<&str> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut declared: Vec<bool> = Vec::new();
    // Intern names in order of first appearance.
    for (c, p) in edges {
        for name in std::iter::once(c.as_str()).chain(p.as_deref()) {
            if !index.contains_key(name) {
                index.insert(name, names.len());
                names.push(name);
                parent.push(None);
                declared.push(false);
            }
        }
    }
    for (c, p) in edges {
        let ci = index[c.as_str()];
        let pi = p.as_deref().map(|p| index[p]);
        if declared[ci] && parent[ci] != pi {
            return Err(Error::ConflictingParent(c.clone()));
        }
        declared[ci] = true;
        parent[ci] = pi;
    }

    // Walk every unit to its root; a revisit on the current walk is a cycle.
    let n = names.len();
    let mut state = vec![0u8; n];
    for start in 0..n {
        let mut walk = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            match state[i] {
                2 => break,
                1 => return Err(Error::Cycle(names[i].to_string())),
                _ => {
                    state[i] = 1;
                    walk.push(i);
                    cur = parent[i];
                }
            }
        }
        for i in walk {
            state[i] = 2;
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    if roots.len() != 1 {
        return Err(if roots.is_empty() { Error::Cycle(names[0].to_string()) } else { Error::Forest(roots.len()) });
    }
    let root = roots[0];

    let owned: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    match mode {
        RootMode::Unit => SpIndex::assemble(tid.to_string(), None, owned, parent),
        RootMode::Virtual => {
            // Drop the root and reattach its children to the virtual root.
            let keep: Vec<usize> = (0..n).filter(|&i| i != root).collect();
            if keep.is_empty() {
                return Err(Error::EmptyHierarchy);
            }
            let mut remap = vec![usize::MAX; n];
            for (j, &i) in keep.iter().enumerate() {
                remap[i] = j;
            }
            let names2 = keep.iter().map(|&i| owned[i].clone()).collect();
            let parents2 = keep
                .iter()
                .map(|&i| parent[i].and_then(|p| (p != root).then(|| remap[p])))
                .collect();
            SpIndex::assemble(tid.to_string(), Some(owned[root].clone()), names2, parents2)
        }
    }
}

/// Parameters of the synthetic square-grid hierarchy.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridHierarchyConfig {
    /// Side length `L` of the area.
    pub side_length: u32,
    /// Side length `L_bsu` of a base unit.
    pub base_side: u32,
    /// Number of levels `m`.
    pub levels: usize,
    /// Width exponent `a` in `W_l = Q * l^a`.
    pub width_exponent: f64,
    /// Density exponent `b` in `D_l^i = W_l * R * i^b`.
    pub density_exponent: f64,
}

impl Default for GridHierarchyConfig {
    fn default() -> Self {
        GridHierarchyConfig { side_length: 32, base_side: 1, levels: 4, width_exponent: 2.0, density_exponent: 2.0 }
    }
}

impl GridHierarchyConfig {
    pub fn cells_per_side(&self) -> u32 {
        self.side_length / self.base_side
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_side == 0 || self.side_length == 0 {
            return Err(Error::InvalidGrid("side lengths must be positive".into()));
        }
        if self.side_length % self.base_side != 0 {
            return Err(Error::InvalidGrid(format!(
                "L = {} is not divisible by L_bsu = {}",
                self.side_length, self.base_side
            )));
        }
        if self.levels == 0 {
            return Err(Error::InvalidGrid("need at least one level".into()));
        }
        if !self.width_exponent.is_finite() || !self.density_exponent.is_finite() {
            return Err(Error::InvalidGrid("exponents must be finite".into()));
        }
        Ok(())
    }

    /// Unit counts `W_1..W_m` after rounding; `W_m` is the base-unit count.
    pub fn widths(&self) -> Vec<usize> {
        let g = self.cells_per_side() as usize;
        let n = g * g;
        let m = self.levels;
        let q = n as f64 / (m as f64).powf(self.width_exponent);
        (1..=m)
            .map(|l| {
                if l == m {
                    n
                } else {
                    ((q * (l as f64).powf(self.width_exponent)).round() as usize).max(1)
                }
            })
            .collect()
    }
}

/// Largest-remainder apportionment of `total` across `weights`, each share
/// at least 1. Shares left at zero by rounding borrow from the largest.
pub(crate) fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    assert!(total >= weights.len(), "cannot give every share at least one unit");
    // Shares whose proportional size falls below one are pinned at one and
    // the rest is redistributed among the others until no share drops below.
    let mut pinned = vec![false; weights.len()];
    let ideal = loop {
        let free_total = (total - pinned.iter().filter(|&&p| p).count()) as f64;
        let sum: f64 = weights.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(w, _)| w).sum();
        let ideal: Vec<f64> = weights
            .iter()
            .zip(&pinned)
            .map(|(w, &p)| if p { 1.0 } else { free_total * w / sum })
            .collect();
        let mut changed = false;
        for (i, x) in ideal.iter().enumerate() {
            if !pinned[i] && *x < 1.0 {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            break ideal;
        }
    };
    let mut out: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total - assigned) {
        out[i] += 1;
    }
    out
}

/// Splits each parent segment into child segments. `desired` is the child
/// size sequence along the traversal; each child is assigned to the parent
/// holding its midpoint, then counts are repaired so every parent gets at
/// least one child and no more children than cells.
fn nest(parent_sizes: &[usize], desired: &[usize]) -> Vec<usize> {
    let w = parent_sizes.len();
    let mut ends = Vec::with_capacity(w);
    let mut acc = 0;
    for &s in parent_sizes {
        acc += s;
        ends.push(acc);
    }
    let mut counts = vec![0usize; w];
    let mut pos = 0;
    for &d in desired {
        let mid = pos + d / 2;
        let j = ends.partition_point(|&e| e <= mid).min(w - 1);
        counts[j] += 1;
        pos += d;
    }
    loop {
        if let Some(j) = (0..w).find(|&j| counts[j] > parent_sizes[j]) {
            let to = nearest(w, j, |k| counts[k] < parent_sizes[k]).expect("total fits");
            counts[j] -= 1;
            counts[to] += 1;
        } else if let Some(j) = (0..w).find(|&j| counts[j] == 0) {
            let from = nearest(w, j, |k| counts[k] > 1).expect("enough children");
            counts[from] -= 1;
            counts[j] += 1;
        } else {
            break;
        }
    }
    let mut out = Vec::with_capacity(desired.len());
    let mut next = 0;
    for j in 0..w {
        let weights: Vec<f64> = desired[next..next + counts[j]].iter().map(|&d| d as f64).collect();
        out.extend(apportion(parent_sizes[j], &weights));
        next += counts[j];
    }
    out
}

fn nearest(w: usize, from: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
    (1..w).find_map(|d| {
        if from >= d && ok(from - d) {
            Some(from - d)
        } else if from + d < w && ok(from + d) {
            Some(from + d)
        } else {
            None
        }
    })
}

/// Generates the square-grid hierarchy: `(L/L_bsu)^2` base cells laid out
/// along a serpentine row-major traversal, cut into `W_l` contiguous units
/// per level with power-law sizes.
pub fn generate_grid_hierarchy(config: &GridHierarchyConfig, seed: u64) -> Result<SpIndex> {
    config.validate()?;
    let g = config.cells_per_side();
    let n = (g * g) as usize;
    let m = config.levels;
    let widths = config.widths();
    for l in 0..m - 1 {
        if widths[l] > widths[l + 1] {
            return Err(Error::InfeasibleNesting {
                level: l + 1,
                width: widths[l],
                next_level: l + 2,
                next_width: widths[l + 1],
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let desired_sizes = |width: usize, rng: &mut ChaCha8Rng| {
        let mut weights: Vec<f64> = (1..=width).map(|i| (i as f64).powf(config.density_exponent)).collect();
        weights.shuffle(rng);
        apportion(n, &weights)
    };

    // Segment sizes along the traversal, for coarse levels 1..m-1.
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for l in 0..m.saturating_sub(1) {
        let desired = desired_sizes(widths[l], &mut rng);
        let sizes = match levels.last() {
            None => desired,
            Some(prev) => nest(prev, &desired),
        };
        levels.push(sizes);
    }

    let traversal: Vec<(u32, u32)> = (0..g)
        .flat_map(|r| {
            let cols: Vec<u32> = if r % 2 == 0 { (0..g).collect() } else { (0..g).rev().collect() };
            cols.into_iter().map(move |c| (r, c))
        })
        .collect();

    let mut names = Vec::new();
    let mut parents = Vec::new();
    // owner[l][p]: index into `names` of the level-(l+1) unit covering traversal position p.
    let mut owner: Vec<Vec<usize>> = Vec::new();
    for (l, sizes) in levels.iter().enumerate() {
        let mut cover = Vec::with_capacity(n);
        for (i, &s) in sizes.iter().enumerate() {
            let start = cover.len();
            let id = names.len();
            names.push(format!("u{}_{}", l + 1, i));
            parents.push(if l == 0 { None } else { Some(owner[l - 1][start]) });
            cover.extend(std::iter::repeat_n(id, s));
        }
        owner.push(cover);
    }
    for (p, &(r, c)) in traversal.iter().enumerate() {
        names.push(format!("c{r}_{c}"));
        parents.push(owner.last().map(|o| o[p]));
    }

    let mut index = SpIndex::assemble("grid".to_string(), Some("ROOT".to_string()), names, parents)?;
    index.grid = grid_from_names(&index);
    debug_assert!(index.grid.is_some());
    Ok(index)
}

/// Recovers grid geometry when every base unit is named `c{row}_{col}` and
/// the names tile a full square.
fn grid_from_names(index: &SpIndex) -> Option<GridGeometry> {
    let n = index.base_count();
    let g = (n as f64).sqrt().round() as u32;
    if (g as usize) * (g as usize) != n {
        return None;
    }
    let mut coords = vec![(0, 0); n];
    let mut at = vec![u32::MAX; n];
    for (rank, &id) in index.base_units().iter().enumerate() {
        let (r, c) = index.name(id).strip_prefix('c')?.split_once('_')?;
        let (r, c): (u32, u32) = (r.parse().ok()?, c.parse().ok()?);
        if r >= g || c >= g || at[(r * g + c) as usize] != u32::MAX {
            return None;
        }
        coords[rank] = (r, c);
        at[(r * g + c) as usize] = rank as u32;
    }
    Some(GridGeometry { side: g, coords, at })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(list: &[(&str, &str)]) -> Vec<(String, Option<String>)> {
        list.iter()
            .map(|(c, p)| (c.to_string(), (*p != "-").then(|| p.to_string())))
            .collect()
    }

    pub(crate) fn example_tree(mode: RootMode) -> SpIndex {
        let e = edges(&[
            ("L1", "L5"),
            ("L2", "L5"),
            ("L3", "L6"),
            ("L4", "L6"),
            ("L5", "ROOT"),
            ("L6", "ROOT"),
        ]);
        load_sp_index(&e, "t0", mode).unwrap()
    }

    #[test]
    fn example_tree_levels() {
        let idx = example_tree(RootMode::Unit);
        assert_eq!(idx.height(), 3);
        assert_eq!(idx.level(idx.id("ROOT").unwrap()), 1);
        assert_eq!(idx.level(idx.id("L5").unwrap()), 2);
        assert_eq!(idx.level(idx.id("L1").unwrap()), 3);

        let idx = example_tree(RootMode::Virtual);
        assert_eq!(idx.height(), 2);
        assert!(idx.id("ROOT").is_none());
        assert_eq!(idx.level(idx.id("L6").unwrap()), 1);
        let l1 = idx.id("L1").unwrap();
        assert_eq!(idx.parent(l1), idx.id("L5"));
        assert_eq!(idx.parent(idx.id("L2").unwrap()), idx.id("L5"));
    }

    #[test]
    fn minimal_tree() {
        let idx = load_sp_index(&edges(&[("A", "ROOT")]), "t", RootMode::Unit).unwrap();
        assert_eq!(idx.height(), 2);
        assert_eq!(idx.base_count(), 1);
    }

    #[test]
    fn cycle_is_rejected() {
        let err = load_sp_index(&edges(&[("A", "B"), ("B", "A")]), "t", RootMode::Unit).unwrap_err();
        assert!(matches!(err, Error::Cycle(_)));
        let err = load_sp_index(&edges(&[("A", "B"), ("B", "A"), ("C", "R")]), "t", RootMode::Unit).unwrap_err();
        assert!(matches!(err, Error::Cycle(_)));
    }

    #[test]
    fn forest_and_ragged_are_rejected() {
        let err = load_sp_index(&edges(&[("A", "R1"), ("B", "R2")]), "t", RootMode::Unit).unwrap_err();
        assert!(matches!(err, Error::Forest(2)));
        let err = load_sp_index(&edges(&[("A", "R"), ("B", "A"), ("C", "R")]), "t", RootMode::Unit).unwrap_err();
        assert!(matches!(err, Error::RaggedLeaves { .. }));
        let err = load_sp_index(&edges(&[("A", "R"), ("A", "B"), ("B", "R")]), "t", RootMode::Unit).unwrap_err();
        assert!(matches!(err, Error::ConflictingParent(_)));
    }

    #[test]
    fn base_descendants_of_example_units() {
        let idx = example_tree(RootMode::Unit);
        let mut d = idx.base_descendants_of("L5").unwrap();
        d.sort();
        assert_eq!(d, vec!["L1", "L2"]);
        assert_eq!(idx.base_descendants_of("L1").unwrap(), vec!["L1"]);
        let mut all = idx.base_descendants_of("ROOT").unwrap();
        all.sort();
        assert_eq!(all, vec!["L1", "L2", "L3", "L4"]);
        assert!(matches!(idx.base_descendants_of("L9"), Err(Error::UnknownUnit(_))));
    }

    #[test]
    fn csv_round_trip() {
        let idx = example_tree(RootMode::Virtual);
        let text = idx.to_csv();
        assert!(text.starts_with("# tid=t0\n"));
        let back = SpIndex::from_csv(&text).unwrap();
        assert_eq!(back.height(), 2);
        assert_eq!(back.to_csv(), text);

        let idx = example_tree(RootMode::Unit);
        let back = SpIndex::from_csv(&idx.to_csv()).unwrap();
        assert_eq!(back.height(), 3);
        assert!(back.grid().is_none());
    }

    #[test]
    fn grid_survives_csv() {
        let idx = generate_grid_hierarchy(&GridHierarchyConfig { side_length: 8, ..Default::default() }, 3).unwrap();
        let back = SpIndex::from_csv(&idx.to_csv()).unwrap();
        let (g0, g1) = (idx.grid().unwrap(), back.grid().unwrap());
        assert_eq!(g0.side, g1.side);
        for rank in 0..idx.base_count() {
            assert_eq!(g0.coords(rank), g1.coords(rank));
        }
    }

    #[test]
    fn grid_widths_follow_power_law() {
        let cfg = GridHierarchyConfig { side_length: 16, base_side: 1, levels: 2, width_exponent: 2.0, density_exponent: 0.0 };
        // Q = 256 / 2^2 = 64
        assert_eq!(cfg.widths(), vec![64, 256]);
        let idx = generate_grid_hierarchy(&cfg, 7).unwrap();
        assert_eq!(idx.units_at(1).count(), 64);
        for u in idx.units_at(1) {
            assert_eq!(idx.base_descendants(u).len(), 4);
        }
    }

    #[test]
    fn grid_single_level() {
        let cfg = GridHierarchyConfig { side_length: 8, base_side: 2, levels: 1, width_exponent: 1.5, density_exponent: 3.0 };
        let idx = generate_grid_hierarchy(&cfg, 1).unwrap();
        assert_eq!(idx.height(), 1);
        assert_eq!(idx.units_at(1).count(), 16);
        assert_eq!(idx.base_count(), 16);
    }

    #[test]
    fn grid_power_law_sizes() {
        let cfg = GridHierarchyConfig { side_length: 16, base_side: 1, levels: 2, width_exponent: 2.0, density_exponent: 2.0 };
        let idx = generate_grid_hierarchy(&cfg, 3).unwrap();
        let sizes: Vec<usize> = idx.units_at(1).map(|u| idx.base_descendants(u).len()).collect();
        assert_eq!(sizes.len(), 64);
        assert_eq!(sizes.iter().sum::<usize>(), 256);
        // smallest shares are pinned at one cell; the largest gets its
        // proportional part of what remains
        let mut k = 0usize;
        let largest = loop {
            let rest: f64 = (k + 1..=64).map(|i| (i * i) as f64).sum();
            if (256 - k) as f64 * ((k + 1) * (k + 1)) as f64 / rest >= 1.0 {
                break (256 - k) as f64 * 64.0 * 64.0 / rest;
            }
            k += 1;
        };
        let got = *sizes.iter().max().unwrap() as f64;
        assert!((got - largest).abs() <= 1.0, "largest {got} vs {largest}");
        assert!(sizes.iter().all(|&s| s >= 1));
    }

    #[test]
    fn infeasible_nesting() {
        let cfg = GridHierarchyConfig { side_length: 8, base_side: 1, levels: 3, width_exponent: -1.0, density_exponent: 0.0 };
        assert!(matches!(generate_grid_hierarchy(&cfg, 0), Err(Error::InfeasibleNesting { .. })));
        let cfg = GridHierarchyConfig { side_length: 9, base_side: 2, levels: 3, width_exponent: 1.0, density_exponent: 0.0 };
        assert!(matches!(generate_grid_hierarchy(&cfg, 0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(5, &[0.001, 100.0]).iter().sum::<usize>(), 5);
        assert!(apportion(5, &[0.001, 100.0]).iter().all(|&s| s >= 1));
    }
}
