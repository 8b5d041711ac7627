//! The MinSigTree: entities grouped level by level by the routing index of
//! their signatures.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::minhash::{routing_index, HashFamily, SignatureList};

pub type EntityId = u32;
pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// 0 for the virtual root, `m` for leaves.
    pub level: usize,
    /// Routing index (0-based); unused at the root.
    pub u: usize,
    /// Minimum over members of their level signature at `u`.
    pub value: u64,
    pub full: Option<Vec<u64>>,
    /// Sorted by routing index.
    pub children: Vec<NodeId>,
    /// Sorted entity ids; leaves only.
    pub entities: Vec<EntityId>,
    pub parent: Option<NodeId>,
    /// Set when a member left; the value is then a sound but loose lower bound.
    pub stale: bool,
}

impl Node {
    fn new(level: usize, u: usize, parent: Option<NodeId>, n_h: usize, full: bool) -> Self {
        Node {
            level,
            u,
            value: u64::MAX,
            full: full.then(|| vec![u64::MAX; n_h]),
            children: Vec::new(),
            entities: Vec::new(),
            parent,
            stale: false,
        }
    }

    pub fn is_leaf(&self, m: usize) -> bool {
        self.level == m
    }
}

/// Counters for one update, used to check path locality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub nodes_touched: usize,
    pub nodes_created: usize,
    pub nodes_removed: usize,
}

impl std::ops::AddAssign for UpdateStats {
    fn add_assign(&mut self, o: Self) {
        self.nodes_touched += o.nodes_touched;
        self.nodes_created += o.nodes_created;
        self.nodes_removed += o.nodes_removed;
    }
}

/// Per-level routing keys `(u, sig^l[u])` of one entity.
fn routing_path(sig: &SignatureList) -> Vec<(usize, u64)> {
    sig.sigs
        .iter()
        .map(|s| {
            let u = routing_index(s);
            (u, s[u])
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct MinSigTree {
    nodes: Vec<Node>,
    free: Vec<NodeId>,
    m: usize,
    n_h: usize,
    master_seed: u64,
    range: u64,
    store_full: bool,
    leaf_of: HashMap<EntityId, NodeId>,
}

pub const ROOT_NODE: NodeId = 0;

/// One node in serialized preorder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct NodeRecord {
    pub level: usize,
    pub u: usize,
    pub value: u64,
    pub full: Option<Vec<u64>>,
    pub child_count: usize,
    pub entities: Vec<EntityId>,
    pub stale: bool,
}

impl MinSigTree {
    pub fn empty(family: &HashFamily, m: usize, store_full: bool) -> Self {
        // The root carries no signature and prunes nothing.
        let root = Node { value: 0, full: None, ..Node::new(0, 0, None, family.n_h(), false) };
        MinSigTree {
            nodes: vec![root],
            free: Vec::new(),
            m,
            n_h: family.n_h(),
            master_seed: family.master_seed(),
            range: family.range(),
            store_full,
            leaf_of: HashMap::new(),
        }
    }

    /// Builds the tree from scratch. Entities are sorted by their routing
    /// path so each node's members form one contiguous run.
    pub fn build(sigs: &[(EntityId, &SignatureList)], family: &HashFamily, m: usize, store_full: bool) -> Result<Self> {
        let mut tree = MinSigTree::empty(family, m, store_full);
        for (_, s) in sigs {
            tree.check_signature(s)?;
        }
        let mut order: Vec<(Vec<(usize, u64)>, EntityId, &SignatureList)> =
            sigs.iter().map(|&(e, s)| (routing_path(s), e, s)).collect();
        order.sort_by(|a, b| a.0.iter().map(|p| p.0).cmp(b.0.iter().map(|p| p.0)).then(a.1.cmp(&b.1)));
        tree.build_range(ROOT_NODE, &order, 0);
        Ok(tree)
    }

    fn build_range(&mut self, parent: NodeId, run: &[(Vec<(usize, u64)>, EntityId, &SignatureList)], depth: usize) {
        if depth == self.m {
            let node = &mut self.nodes[parent as usize];
            node.entities = run.iter().map(|r| r.1).collect();
            node.entities.sort_unstable();
            for r in run {
                self.leaf_of.insert(r.1, parent);
            }
            return;
        }
        let mut start = 0;
        while start < run.len() {
            let u = run[start].0[depth].0;
            let end = start + run[start..].iter().take_while(|r| r.0[depth].0 == u).count();
            let id = self.alloc(Node::new(depth + 1, u, Some(parent), self.n_h, self.store_full));
            {
                let node = &mut self.nodes[id as usize];
                for r in &run[start..end] {
                    node.value = node.value.min(r.0[depth].1);
                    if let Some(full) = node.full.as_mut() {
                        for (f, x) in full.iter_mut().zip(r.2.level(depth + 1)) {
                            *f = (*f).min(*x);
                        }
                    }
                }
            }
            self.nodes[parent as usize].children.push(id);
            self.build_range(id, &run[start..end], depth + 1);
            start = end;
        }
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        if let Some(id) = self.free.pop() {
            self.nodes[id as usize] = node;
            id
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as NodeId
        }
    }

    fn check_signature(&self, s: &SignatureList) -> Result<()> {
        if s.height() != self.m {
            return Err(Error::LevelMismatch(s.height(), self.m));
        }
        if let Some(bad) = s.sigs.iter().find(|l| l.len() != self.n_h) {
            return Err(Error::FamilyMismatch(format!("signature with {} values for n_h = {}", bad.len(), self.n_h)));
        }
        Ok(())
    }

    pub fn check_family(&self, family: &HashFamily) -> Result<()> {
        if family.n_h() != self.n_h || family.master_seed() != self.master_seed || family.range() != self.range {
            return Err(Error::FamilyMismatch(format!(
                "index built with n_h {} / seed {} / range {}, got n_h {} / seed {} / range {}",
                self.n_h,
                self.master_seed,
                self.range,
                family.n_h(),
                family.master_seed(),
                family.range()
            )));
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.m
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

    pub fn stores_full_signatures(&self) -> bool {
        self.store_full
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn root(&self) -> &Node {
        &self.nodes[ROOT_NODE as usize]
    }

    pub fn entity_count(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.leaf_of.contains_key(&e)
    }

    pub fn leaf_of(&self, e: EntityId) -> Option<NodeId> {
        self.leaf_of.get(&e).copied()
    }

    /// Number of live nodes, the virtual root included.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    /// Live node ids in preorder, children by routing index.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut stack = vec![ROOT_NODE];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id as usize].children.iter().rev());
        }
        out
    }

    /// Routing paths from root to leaf, each with its sorted member ids.
    pub fn leaf_membership(&self) -> Vec<(Vec<usize>, Vec<EntityId>)> {
        let mut out = Vec::new();
        for id in self.preorder() {
            let n = &self.nodes[id as usize];
            if n.level == self.m && n.level > 0 {
                let mut path = Vec::new();
                let mut cur = Some(id);
                while let Some(c) = cur {
                    if c != ROOT_NODE {
                        path.push(self.nodes[c as usize].u);
                    }
                    cur = self.nodes[c as usize].parent;
                }
                path.reverse();
                out.push((path, n.entities.clone()));
            }
        }
        out
    }

    fn child_with(&self, id: NodeId, u: usize) -> std::result::Result<usize, usize> {
        let kids = &self.nodes[id as usize].children;
        kids.binary_search_by(|&c| self.nodes[c as usize].u.cmp(&u))
    }

    /// Removes an entity; emptied nodes are deleted and remaining ancestors
    /// marked stale. Returns `None` when the entity is not indexed.
    pub fn remove_entity(&mut self, e: EntityId) -> Option<UpdateStats> {
        let leaf = self.leaf_of.remove(&e)?;
        let mut stats = UpdateStats::default();
        let node = &mut self.nodes[leaf as usize];
        let pos = node.entities.binary_search(&e).expect("leaf lists its members");
        node.entities.remove(pos);
        let mut cur = leaf;
        loop {
            stats.nodes_touched += 1;
            let n = &self.nodes[cur as usize];
            let parent = n.parent;
            if cur != ROOT_NODE && n.entities.is_empty() && n.children.is_empty() {
                let p = parent.expect("non-root node has a parent");
                self.nodes[p as usize].children.retain(|&c| c != cur);
                self.free.push(cur);
                stats.nodes_removed += 1;
            } else {
                self.nodes[cur as usize].stale = true;
            }
            match parent {
                Some(p) => cur = p,
                None => break,
            }
        }
        Some(stats)
    }

    /// Inserts an entity that is not currently indexed, creating path nodes
    /// as needed and lowering node values along its path.
    fn insert(&mut self, e: EntityId, sig: &SignatureList) -> UpdateStats {
        self.insert_group(&[e], &[sig])
    }

    /// Inserts a group of entities sharing one routing path.
    fn insert_group(&mut self, es: &[EntityId], sigs: &[&SignatureList]) -> UpdateStats {
        let mut stats = UpdateStats { nodes_touched: 1, ..Default::default() };
        let paths: Vec<Vec<(usize, u64)>> = sigs.iter().map(|s| routing_path(s)).collect();
        let mut cur = ROOT_NODE;
        for depth in 0..self.m {
            let u = paths[0][depth].0;
            let next = match self.child_with(cur, u) {
                Ok(i) => self.nodes[cur as usize].children[i],
                Err(i) => {
                    let id = self.alloc(Node::new(depth + 1, u, Some(cur), self.n_h, self.store_full));
                    self.nodes[cur as usize].children.insert(i, id);
                    stats.nodes_created += 1;
                    id
                }
            };
            let node = &mut self.nodes[next as usize];
            for (p, s) in paths.iter().zip(sigs) {
                node.value = node.value.min(p[depth].1);
                if let Some(full) = node.full.as_mut() {
                    for (f, x) in full.iter_mut().zip(s.level(depth + 1)) {
                        *f = (*f).min(*x);
                    }
                }
            }
            stats.nodes_touched += 1;
            cur = next;
        }
        let leaf = &mut self.nodes[cur as usize];
        for &e in es {
            let pos = leaf.entities.binary_search(&e).unwrap_or_else(|p| p);
            leaf.entities.insert(pos, e);
            self.leaf_of.insert(e, cur);
        }
        stats
    }

    /// Replaces (or inserts) one entity's signatures.
    pub fn update_entity(&mut self, e: EntityId, sig: &SignatureList) -> Result<UpdateStats> {
        self.check_signature(sig)?;
        let mut stats = self.remove_entity(e).unwrap_or_default();
        stats += self.insert(e, sig);
        Ok(stats)
    }

    /// Replaces many entities at once: all are removed first, then inserted
    /// one group per routing path so each path is walked once.
    pub fn bulk_update(&mut self, updates: &[(EntityId, &SignatureList)]) -> Result<UpdateStats> {
        for (_, s) in updates {
            self.check_signature(s)?;
        }
        let mut stats = UpdateStats::default();
        for (e, _) in updates {
            if let Some(s) = self.remove_entity(*e) {
                stats += s;
            }
        }
        // The last update of an entity wins.
        let mut last: HashMap<EntityId, &SignatureList> = HashMap::new();
        for &(e, s) in updates {
            last.insert(e, s);
        }
        let mut keyed: Vec<(Vec<usize>, EntityId, &SignatureList)> =
            last.into_iter().map(|(e, s)| (routing_path(s).iter().map(|p| p.0).collect(), e, s)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut start = 0;
        while start < keyed.len() {
            let end = start + keyed[start..].iter().take_while(|k| k.0 == keyed[start].0).count();
            let es: Vec<EntityId> = keyed[start..end].iter().map(|k| k.1).collect();
            let ss: Vec<&SignatureList> = keyed[start..end].iter().map(|k| k.2).collect();
            stats += self.insert_group(&es, &ss);
            start = end;
        }
        Ok(stats)
    }

    /// Recomputes the exact values of stale nodes from member signatures.
    pub fn refresh<'a>(&mut self, lookup: impl Fn(EntityId) -> Option<&'a SignatureList>) -> Result<usize> {
        let stale: Vec<NodeId> = self.preorder().into_iter().filter(|&id| self.nodes[id as usize].stale).collect();
        for &id in &stale {
            let (level, u) = (self.nodes[id as usize].level, self.nodes[id as usize].u);
            let members = self.members(id);
            let mut value = u64::MAX;
            let mut full = self.store_full.then(|| vec![u64::MAX; self.n_h]);
            if level > 0 {
                for e in members {
                    let s = lookup(e).ok_or_else(|| Error::UnknownEntity(format!("#{e}")))?;
                    let row = s.level(level);
                    value = value.min(row[u]);
                    if let Some(f) = full.as_mut() {
                        for (a, x) in f.iter_mut().zip(row) {
                            *a = (*a).min(*x);
                        }
                    }
                }
            }
            let node = &mut self.nodes[id as usize];
            node.value = if level == 0 { node.value } else { value };
            if level > 0 {
                node.full = full;
            }
            node.stale = false;
        }
        Ok(stale.len())
    }

    /// All entities below a node.
    pub fn members(&self, id: NodeId) -> Vec<EntityId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            out.extend_from_slice(&node.entities);
            stack.extend_from_slice(&node.children);
        }
        out.sort_unstable();
        out
    }

    /// Preorder records, the inverse of `from_parts`.
    pub(crate) fn to_parts(&self) -> Vec<NodeRecord> {
        self.preorder()
            .into_iter()
            .map(|id| {
                let n = &self.nodes[id as usize];
                NodeRecord {
                    level: n.level,
                    u: n.u,
                    value: n.value,
                    full: n.full.clone(),
                    child_count: n.children.len(),
                    entities: n.entities.clone(),
                    stale: n.stale,
                }
            })
            .collect()
    }

    /// Reassembles a tree from preorder records, as read from disk.
    pub(crate) fn from_parts(
        family: (usize, u64, u64),
        m: usize,
        store_full: bool,
        records: Vec<NodeRecord>,
    ) -> Result<Self> {
        let (n_h, master_seed, range) = family;
        let mut nodes: Vec<Node> = Vec::with_capacity(records.len());
        let mut leaf_of = HashMap::new();
        // Stack of (node id, children still expected).
        let mut open: Vec<(NodeId, usize)> = Vec::new();
        for (i, NodeRecord { level, u, value, full, child_count, entities, stale }) in records.into_iter().enumerate() {
            let id = i as NodeId;
            let parent = loop {
                match open.last_mut() {
                    None if i == 0 => break None,
                    None => return Err(Error::Parse { line: i, msg: "node outside the tree".into() }),
                    Some((_, 0)) => {
                        open.pop();
                    }
                    Some((p, left)) => {
                        *left -= 1;
                        break Some(*p);
                    }
                }
            };
            if let Some(p) = parent {
                if level != nodes[p as usize].level + 1 {
                    return Err(Error::Parse { line: i, msg: "node level does not follow its parent".into() });
                }
                nodes[p as usize].children.push(id);
            }
            for &e in &entities {
                leaf_of.insert(e, id);
            }
            nodes.push(Node { level, u, value, full, children: Vec::new(), entities, parent, stale });
            open.push((id, child_count));
        }
        if nodes.is_empty() || open.iter().any(|&(_, left)| left > 0) {
            return Err(Error::Truncated);
        }
        Ok(MinSigTree { nodes, free: Vec::new(), m, n_h, master_seed, range, store_full, leaf_of })
    }
}
