//! Python module `graphretro`: molecules, reaction preprocessing, training,
//! prediction and evaluation.

use graphretro::molgraph::{canonical_smiles, parse_smiles, write_smiles};
use graphretro::pipeline::cli::predict_all;
use graphretro::pipeline::{
    beam_search, ensure_mapped, evaluate_topn, load_checkpoint, parse_predictions, save_checkpoint, train,
    write_predictions, GraphRetro, PipelineError, TrainConfig,
};
use graphretro::reaction::dataset::{extract, preprocess, write_records, Prepared};
use graphretro::reaction::parse_reaction;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: impl Into<PipelineError>) -> PyErr {
    let e = e.into();
    match e.exit_code() {
        3 => PyArithmeticError::new_err(e.to_string()),
        _ if matches!(e, PipelineError::Io { .. }) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A molecular graph parsed from SMILES.
#[pyclass(name = "Molecule", module = "graphretro")]
struct PyMolecule {
    inner: graphretro::molgraph::Molecule,
}

#[pymethods]
impl PyMolecule {
    #[new]
    fn new(smiles: &str) -> PyResult<Self> {
        Ok(PyMolecule {
            inner: parse_smiles(smiles).map_err(py_err)?,
        })
    }

    #[getter]
    fn num_atoms(&self) -> usize {
        self.inner.num_atoms()
    }

    #[getter]
    fn num_bonds(&self) -> usize {
        self.inner.num_bonds()
    }

    #[pyo3(signature = (include_maps = false))]
    fn canonical(&self, include_maps: bool) -> String {
        canonical_smiles(&self.inner, include_maps)
    }

    /// SMILES in input atom order.
    #[pyo3(signature = (include_maps = true))]
    fn smiles(&self, include_maps: bool) -> String {
        write_smiles(&self.inner, false, include_maps)
    }

    /// Copy with every atom numbered, keeping existing maps when complete.
    fn mapped(&self) -> PyMolecule {
        PyMolecule {
            inner: ensure_mapped(&self.inner),
        }
    }

    fn __eq__(&self, other: &PyMolecule) -> bool {
        canonical_smiles(&self.inner, true) == canonical_smiles(&other.inner, true)
    }

    fn __repr__(&self) -> String {
        format!("Molecule('{}')", write_smiles(&self.inner, false, true))
    }
}

/// Canonical SMILES of `smiles`.
#[pyfunction]
#[pyo3(signature = (smiles, include_maps = false))]
fn canonicalize(smiles: &str, include_maps: bool) -> PyResult<String> {
    Ok(canonical_smiles(&parse_smiles(smiles).map_err(py_err)?, include_maps))
}

/// Edits, synthons and leaving groups of an atom-mapped reaction
/// `reactants>>product`, as a dict.
#[pyfunction]
fn extract_reaction<'py>(py: Python<'py>, reaction: &str) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let pair = parse_reaction(reaction).map_err(py_err)?;
    let ex = extract(&pair).map_err(py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("edits", ex.edits.to_string())?;
    d.set_item("synthons", canonical_smiles(&ex.synthons, true))?;
    d.set_item("leaving_groups", ex.group_keys())?;
    Ok(d)
}

/// Reactions split into train/dev/test with their leaving-group vocabulary.
#[pyclass(name = "Dataset", module = "graphretro")]
struct PyDataset {
    inner: Prepared,
}

#[pymethods]
impl PyDataset {
    /// Process reaction lines (`reactants>>product`, optional tab and class).
    #[new]
    #[pyo3(signature = (lines, ratios = (0.8, 0.1, 0.1), seed = 0))]
    fn new(lines: Vec<String>, ratios: (f64, f64, f64), seed: u64) -> Self {
        PyDataset {
            inner: preprocess(&lines, [ratios.0, ratios.1, ratios.2], seed),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }

    /// Vocabulary entries: special tokens, then leaving-group keys.
    #[getter]
    fn vocab(&self) -> Vec<String> {
        self.inner.vocab.to_text().lines().map(|l| l.split('\t').next().unwrap_or(l).to_string()).collect()
    }

    /// `(train, dev, test)` sizes.
    #[getter]
    fn split_sizes(&self) -> (usize, usize, usize) {
        let [a, b, c] = self.inner.stats.split_sizes;
        (a, b, c)
    }

    fn stats(&self) -> String {
        self.inner.stats.to_string()
    }

    fn records_text(&self) -> String {
        write_records(&self.inner.records, &self.inner.vocab)
    }

    fn vocab_text(&self) -> String {
        self.inner.vocab.to_text()
    }
}

/// A trained two-stage model.
#[pyclass(name = "Model", module = "graphretro")]
struct PyModel {
    inner: GraphRetro,
}

#[pymethods]
impl PyModel {
    /// Train on `dataset`; `config` maps option names to values as accepted
    /// by the command line `--set` flag.
    #[staticmethod]
    #[pyo3(signature = (dataset, config = None))]
    fn train(py: Python<'_>, dataset: &PyDataset, config: Option<Vec<(String, String)>>) -> PyResult<PyModel> {
        let mut c = TrainConfig::default();
        for (k, v) in config.unwrap_or_default() {
            c.set(&k, &v).map_err(py_err)?;
        }
        let prep = &dataset.inner;
        let (inner, _) = py.allow_threads(|| train(c, &prep.records, prep.vocab.clone())).map_err(py_err)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<PyModel> {
        let bytes = std::fs::read(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Ok(PyModel {
            inner: load_checkpoint(&bytes).map_err(py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, save_checkpoint(&self.inner)).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
    }

    #[getter]
    fn config_hash(&self) -> String {
        self.inner.config.hash()
    }

    /// Ranked `(rank, score, reactants)` for one product.
    #[pyo3(signature = (product, beam = 10, reaction_class = None))]
    fn predict(&self, product: &str, beam: usize, reaction_class: Option<u8>) -> PyResult<Vec<(usize, f64, String)>> {
        let mol = ensure_mapped(&parse_smiles(product).map_err(py_err)?);
        let preds = beam_search(&self.inner, &mol, reaction_class, beam).map_err(py_err)?;
        Ok(preds.into_iter().map(|p| (p.rank, p.score, p.reactants)).collect())
    }

    /// Prediction file text for many products, in input order.
    #[pyo3(signature = (products, beam = 10))]
    fn predict_file(&self, py: Python<'_>, products: Vec<String>, beam: usize) -> String {
        let inputs: Vec<(String, String, Option<u8>)> = products.into_iter().map(|p| (p.clone(), p, None)).collect();
        py.allow_threads(|| write_predictions(&predict_all(&self.inner, &inputs, beam)))
    }
}

/// Top-n accuracy of a prediction file against true reactant SMILES, as
/// `[(n, accuracy)]`.
#[pyfunction]
#[pyo3(signature = (predictions, truth, ns = vec![1, 3, 5, 10, 50]))]
fn evaluate(predictions: &str, truth: Vec<String>, ns: Vec<usize>) -> Vec<(usize, f64)> {
    evaluate_topn(&parse_predictions(predictions), &truth, &ns).rows
}

/// `n` synthetic atom-mapped reactions.
#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn corpus(n: usize, seed: u64) -> Vec<String> {
    graphretro::corpus::generate(n, seed)
}

#[pymodule]
#[pyo3(name = "graphretro")]
fn graphretro_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMolecule>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(extract_reaction, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(corpus, m)?)?;
    Ok(())
}
