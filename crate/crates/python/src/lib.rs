use std::io::Cursor;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use ::tracetopk as tt;
use tt::analysis::{self, PEConfig, RankedList};
use tt::engine::Engine as CoreEngine;
use tt::mobility::{generate_corpus, IMParams, UNIT_SECONDS};
use tt::persist::{self, TraceFormat};
use tt::{GridHierarchyConfig, HashFamily, Hit, Measure};

fn err(e: tt::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(module = "tracetopk")]
#[derive(Clone)]
struct SpIndex {
    inner: tt::SpIndex,
}

#[pymethods]
impl SpIndex {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        tt::SpIndex::from_csv(text).map(|inner| SpIndex { inner }).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (side_length=32, levels=4, width_exponent=2.0, density_exponent=2.0, seed=0))]
    fn grid(side_length: u32, levels: usize, width_exponent: f64, density_exponent: f64, seed: u64) -> PyResult<Self> {
        let cfg = GridHierarchyConfig { side_length, base_side: 1, levels, width_exponent, density_exponent };
        tt::hierarchy::generate_grid_hierarchy(&cfg, seed).map(|inner| SpIndex { inner }).map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn base_count(&self) -> usize {
        self.inner.base_count()
    }

    fn base_descendants(&self, name: &str) -> PyResult<Vec<String>> {
        let names = self.inner.base_descendants_of(name).map_err(err)?;
        Ok(names.into_iter().map(String::from).collect())
    }

    fn __repr__(&self) -> String {
        format!("SpIndex(tid={:?}, m={}, base_units={})", self.inner.tid(), self.inner.height(), self.inner.base_count())
    }
}

#[pyclass(module = "tracetopk")]
struct Dataset {
    inner: persist::Dataset,
}

#[pymethods]
impl Dataset {
    /// Parses JSON-lines (or CSV when `csv=True`) trace text.
    #[staticmethod]
    #[pyo3(signature = (traces, index, csv=false, unit_seconds=UNIT_SECONDS))]
    fn ingest(traces: &str, index: &SpIndex, csv: bool, unit_seconds: i64) -> PyResult<Self> {
        let format = if csv { TraceFormat::Csv } else { TraceFormat::JsonLines };
        persist::Dataset::ingest(Cursor::new(traces.as_bytes()), format, index.inner.clone(), unit_seconds)
            .map(|inner| Dataset { inner })
            .map_err(err)
    }

    /// Simulates `entities` walkers on a generated grid.
    #[staticmethod]
    #[pyo3(signature = (entities, seed=42, alpha=0.6, beta=0.8, gamma=0.2, rho=0.6, duration=72, side_length=32, levels=4))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        entities: usize,
        seed: u64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        rho: f64,
        duration: u32,
        side_length: u32,
        levels: usize,
    ) -> PyResult<Self> {
        let params = IMParams { alpha, beta, gamma, rho, duration, ..IMParams::default() };
        params.validate().map_err(err)?;
        let grid = GridHierarchyConfig { side_length, levels, ..GridHierarchyConfig::default() };
        let corpus = generate_corpus(entities, &params, &grid, seed).map_err(err)?;
        let records = corpus.records().into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        persist::Dataset::from_records(records, corpus.index, UNIT_SECONDS).map(|inner| Dataset { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        persist::Dataset::load(path).map(|inner| Dataset { inner }).map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn index(&self) -> SpIndex {
        SpIndex { inner: self.inner.index.clone() }
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.entities.iter().map(|e| e.name.clone()).collect()
    }

    #[getter]
    fn record_count(&self) -> usize {
        self.inner.record_count()
    }

    fn __len__(&self) -> usize {
        self.inner.entities.len()
    }
}

/// A built index over a dataset.
#[pyclass(module = "tracetopk")]
struct Engine {
    inner: CoreEngine,
}

fn named(engine: &CoreEngine, hits: &[Hit]) -> Vec<(String, f64)> {
    hits.iter().map(|h| (engine.seqs[h.entity as usize].entity.clone(), h.degree)).collect()
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (dataset, hashes=64, seed=42, measure="adm", u=1.0, v=1.0, store_full_signatures=false))]
    fn new(dataset: &Dataset, hashes: usize, seed: u64, measure: &str, u: f64, v: f64, store_full_signatures: bool) -> PyResult<Self> {
        let ds = &dataset.inner;
        let seqs = ds.sequences().map_err(err)?;
        let (n, t) = CoreEngine::cell_space(&ds.index, &seqs);
        let family = HashFamily::new(hashes, seed, n * t).map_err(err)?;
        let m = ds.index.height();
        let measure = Measure::from_options(measure.parse().map_err(err)?, m, u, v, None).map_err(err)?;
        let inner = CoreEngine::build(ds.index.clone(), seqs, family, measure, store_full_signatures).map_err(err)?;
        Ok(Engine { inner })
    }

    /// Top-k `(entity, degree)` pairs for an indexed entity, excluding itself.
    fn query(&self, entity: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        let e = self.inner.entity_id(entity).ok_or_else(|| PyKeyError::new_err(entity.to_string()))?;
        let r = self.inner.query_entity(e, k).map_err(err)?;
        Ok(named(&self.inner, &r.hits))
    }

    /// Like `query`, plus `(entities_examined, nodes_visited, pe)`.
    fn query_with_stats(&self, entity: &str, k: usize) -> PyResult<(Vec<(String, f64)>, (usize, usize, f64))> {
        let e = self.inner.entity_id(entity).ok_or_else(|| PyKeyError::new_err(entity.to_string()))?;
        let r = self.inner.query_entity(e, k).map_err(err)?;
        Ok((named(&self.inner, &r.hits), (r.stats.entities_examined, r.stats.nodes_visited, r.stats.pe)))
    }

    /// Exhaustive top-k, for checking `query`.
    fn brute_force(&self, entity: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        let e = self.inner.entity_id(entity).ok_or_else(|| PyKeyError::new_err(entity.to_string()))?;
        let seqs = &self.inner.seqs;
        let r = tt::query::brute_force_topk(seqs, &seqs[e as usize], Some(e), k, &self.inner.measure).map_err(err)?;
        Ok(named(&self.inner, &r.hits))
    }

    fn degree(&self, a: &str, b: &str) -> PyResult<f64> {
        let ia = self.inner.entity_id(a).ok_or_else(|| PyKeyError::new_err(a.to_string()))?;
        let ib = self.inner.entity_id(b).ok_or_else(|| PyKeyError::new_err(b.to_string()))?;
        let seqs = &self.inner.seqs;
        self.inner.measure.degree(&seqs[ia as usize], &seqs[ib as usize]).map_err(err)
    }

    /// Mean pruning effectiveness over `queries` sampled entities.
    #[pyo3(signature = (k, queries=100, seed=0))]
    fn mean_pe(&self, k: usize, queries: usize, seed: u64) -> PyResult<f64> {
        let ids = self.inner.sample_queries(queries, seed);
        let results = self.inner.query_many(&ids, k).map_err(err)?;
        analysis::measure_pe(&results, self.inner.seqs.len()).map_err(err)
    }

    fn save_index(&self, path: &str) -> PyResult<()> {
        persist::save_index(&self.inner.tree, 0, path).map_err(err)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.tree.node_count()
    }

    #[getter]
    fn entity_count(&self) -> usize {
        self.inner.tree.entity_count()
    }
}

fn ranked(ids: Vec<u32>) -> PyResult<RankedList> {
    RankedList::from_ids(&ids).map_err(err)
}

/// Kendall's tau distance between two rankings of the same ids.
#[pyfunction]
fn kendall_tau(a: Vec<u32>, b: Vec<u32>) -> PyResult<f64> {
    analysis::kendall_tau(&ranked(a)?, &ranked(b)?).map_err(err)
}

/// Expected Kendall distance between two top-k lists of ids.
#[pyfunction]
fn k_avg(a: Vec<u32>, b: Vec<u32>) -> PyResult<f64> {
    analysis::k_avg(&ranked(a)?, &ranked(b)?).map_err(err)
}

/// Analytic pruning effectiveness.
#[pyfunction]
#[pyo3(signature = (n, t, hashes, trace_size, n_c, d_e, n_r=64))]
fn predict_pe(n: u64, t: u64, hashes: usize, trace_size: usize, n_c: usize, d_e: f64, n_r: usize) -> PyResult<f64> {
    let cfg = PEConfig { n, t, n_h: hashes, trace_size, n_r, n_c, d_e };
    analysis::predict_pe_analytic(&cfg).map_err(err)
}

#[pymodule]
fn tracetopk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SpIndex>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<Engine>()?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(k_avg, m)?)?;
    m.add_function(wrap_pyfunction!(predict_pe, m)?)?;
    Ok(())
}
