//! A loaded corpus with its signatures and tree, ready for queries.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adm::Measure;
use crate::analysis::{estimate_de_nc, PEConfig};
use crate::error::{Error, Result};
use crate::hierarchy::SpIndex;
use crate::minhash::{compute_all_signatures, compute_signatures, HashFamily, SignatureList};
use crate::query::{PruneScope, QueryResult, Searcher};
use crate::traces::CellSequence;
use crate::tree::{EntityId, MinSigTree, UpdateStats};

pub struct Engine {
    pub index: SpIndex,
    pub seqs: Vec<CellSequence>,
    pub family: HashFamily,
    /// `None` for entities with empty traces, which are not indexed.
    pub sigs: Vec<Option<SignatureList>>,
    pub tree: MinSigTree,
    pub measure: Measure,
    pub scope: PruneScope,
}

impl Engine {
    /// Computes signatures and builds the tree. Entity ids are positions in
    /// `seqs`.
    pub fn build(index: SpIndex, seqs: Vec<CellSequence>, family: HashFamily, measure: Measure, store_full: bool) -> Result<Self> {
        let m = index.height();
        if measure.height() != m {
            return Err(Error::LevelMismatch(m, measure.height()));
        }
        let (sigs, _) = compute_all_signatures(&seqs, &family, &index);
        let tree = {
            let pairs: Vec<(EntityId, &SignatureList)> =
                sigs.iter().enumerate().filter_map(|(i, s)| s.as_ref().map(|s| (i as EntityId, s))).collect();
            MinSigTree::build(&pairs, &family, m, store_full)?
        };
        Ok(Engine { index, seqs, family, sigs, tree, measure, scope: PruneScope::Hierarchical })
    }

    /// Wraps an existing tree, recomputing signatures for `refresh`/updates.
    pub fn with_tree(index: SpIndex, seqs: Vec<CellSequence>, family: HashFamily, measure: Measure, tree: MinSigTree) -> Result<Self> {
        tree.check_family(&family)?;
        let (sigs, _) = compute_all_signatures(&seqs, &family, &index);
        Ok(Engine { index, seqs, family, sigs, tree, measure, scope: PruneScope::Hierarchical })
    }

    /// Base-unit count and number of temporal units spanned by `seqs`; their
    /// product is the natural hash range.
    pub fn cell_space(index: &SpIndex, seqs: &[CellSequence]) -> (u64, u64) {
        let t = seqs.iter().filter_map(|s| s.base().iter().map(|c| c.time).max()).max().map_or(1, |t| t as u64 + 1);
        (index.base_count() as u64, t)
    }

    /// Parameters of the pruning model for this corpus: mean finest trace
    /// size, plus `d_e`/`n_c` estimated from `queries` sampled entities.
    pub fn pe_config(&self, k: usize, n_r: usize, queries: usize, seed: u64) -> Result<PEConfig> {
        let (n, t) = Self::cell_space(&self.index, &self.seqs);
        let live: Vec<usize> = self.seqs.iter().map(|s| s.base().len()).filter(|&c| c > 0).collect();
        if live.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let trace_size = (live.iter().sum::<usize>() as f64 / live.len() as f64).round() as usize;
        let (d_e, n_c) = estimate_de_nc(&self.seqs, &self.measure, k, queries, seed)?;
        let cfg = PEConfig { n, t, n_h: self.family.n_h(), trace_size, n_r, n_c, d_e };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn searcher(&self) -> Searcher<'_> {
        Searcher {
            tree: &self.tree,
            seqs: &self.seqs,
            family: &self.family,
            index: &self.index,
            measure: &self.measure,
            scope: self.scope,
        }
    }

    /// Top-k for an indexed entity, excluding itself.
    pub fn query_entity(&self, e: EntityId, k: usize) -> Result<QueryResult> {
        let seq = self.seqs.get(e as usize).ok_or(Error::UnknownEntity(e.to_string()))?;
        self.searcher().topk(seq, Some(e), k)
    }

    /// Runs queries in parallel; results keep the order of `entities`.
    pub fn query_many(&self, entities: &[EntityId], k: usize) -> Result<Vec<QueryResult>> {
        entities.par_iter().map(|&e| self.query_entity(e, k)).collect()
    }

    /// Distinct entities with nonempty traces, sampled without replacement.
    pub fn sample_queries(&self, n: usize, seed: u64) -> Vec<EntityId> {
        let live: Vec<EntityId> = (0..self.seqs.len()).filter(|&i| self.sigs[i].is_some()).map(|i| i as EntityId).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picks: Vec<EntityId> = sample(&mut rng, live.len(), n.min(live.len())).into_iter().map(|i| live[i]).collect();
        picks.sort_unstable();
        picks
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.seqs.iter().position(|s| s.entity == name).map(|i| i as EntityId)
    }

    /// Replaces the trace of entity `e`, or appends a new entity when `e`
    /// equals the current entity count: recomputes its signatures and moves
    /// it in the tree.
    pub fn upsert(&mut self, e: EntityId, seq: CellSequence) -> Result<UpdateStats> {
        let i = e as usize;
        if i > self.seqs.len() {
            return Err(Error::UnknownEntity(format!("#{e}")));
        }
        let sig = compute_signatures(&seq, &self.family, &self.index)?;
        let stats = self.tree.update_entity(e, &sig)?;
        if i == self.seqs.len() {
            self.seqs.push(seq);
            self.sigs.push(Some(sig));
        } else {
            self.seqs[i] = seq;
            self.sigs[i] = Some(sig);
        }
        Ok(stats)
    }

    /// Applies many upserts: signatures in parallel, then one bulk tree
    /// update. New entities must be numbered consecutively from the current
    /// count.
    pub fn upsert_many(&mut self, updates: Vec<(EntityId, CellSequence)>) -> Result<UpdateStats> {
        let mut next = self.seqs.len();
        for (e, _) in &updates {
            match (*e as usize).cmp(&next) {
                std::cmp::Ordering::Equal => next += 1,
                std::cmp::Ordering::Greater => return Err(Error::UnknownEntity(format!("#{e}"))),
                std::cmp::Ordering::Less => {}
            }
        }
        let sigs: Vec<SignatureList> = updates
            .par_iter()
            .map(|(_, s)| compute_signatures(s, &self.family, &self.index))
            .collect::<Result<_>>()?;
        let pairs: Vec<(EntityId, &SignatureList)> = updates.iter().map(|u| u.0).zip(&sigs).collect();
        let stats = self.tree.bulk_update(&pairs)?;
        for ((e, seq), sig) in updates.into_iter().zip(sigs) {
            let i = e as usize;
            if i == self.seqs.len() {
                self.seqs.push(seq);
                self.sigs.push(Some(sig));
            } else {
                self.seqs[i] = seq;
                self.sigs[i] = Some(sig);
            }
        }
        Ok(stats)
    }

    /// Tightens node values left loose by removals.
    pub fn refresh(&mut self) -> Result<usize> {
        let sigs = &self.sigs;
        self.tree.refresh(|e| sigs.get(e as usize).and_then(Option::as_ref))
    }
}
