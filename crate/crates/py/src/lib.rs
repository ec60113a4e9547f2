use flatchain::chains::io::{chain_from_json, chain_to_json};
use flatchain::chains::PolyChain;
use flatchain::cones::{cone, cone_quantize, CoeffNet};
use flatchain::flatnorm::{build_complex, embed_chain, flat_norm_upper, SolveMode};
use flatchain::foundation::{CoefficientGroup, Functional, GroupElement, NormSpec, NormedSpace};
use flatchain::harness::{run_experiment, ExperimentConfig};
use flatchain::linalg::Vector;
use flatchain::slicing::{restrict_lipschitz, slice, LipschitzFn, RestrictOptions};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: flatchain::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector(xs: Vec<f64>) -> Vector {
    Vector::from_vec(xs)
}

fn parse_space(dim: usize, norm: &str, facets: Option<Vec<Vec<f64>>>) -> PyResult<NormedSpace> {
    let spec = match (norm, facets) {
        ("polytope", Some(f)) => NormSpec::Polytope {
            facets: f.into_iter().map(vector).collect(),
        },
        ("polytope", None) => return Err(PyValueError::new_err("polytope norm needs facets")),
        ("l1", _) => NormSpec::P(1.0),
        ("l2", _) => NormSpec::P(2.0),
        ("linf", _) => NormSpec::P(f64::INFINITY),
        (p, _) => NormSpec::P(p.parse().map_err(|_| PyValueError::new_err(format!("unknown norm {p:?}")))?),
    };
    NormedSpace::new(dim, spec).map_err(py_err)
}

fn parse_group(group: &str) -> PyResult<CoefficientGroup> {
    match group {
        "Z" => Ok(CoefficientGroup::Integers),
        "R" => Ok(CoefficientGroup::Reals),
        g => match g.strip_prefix("Z/").and_then(|m| m.parse().ok()) {
            Some(m) => CoefficientGroup::integers_mod(m).map_err(py_err),
            None => Err(PyValueError::new_err(format!("unknown group {g:?}; use Z, R or Z/m"))),
        },
    }
}

/// A polyhedral chain with coefficients in Z, Z/m or R.
#[pyclass(name = "Chain", module = "flatchain_py")]
#[derive(Clone)]
struct PyChain {
    inner: PolyChain,
}

#[pymethods]
impl PyChain {
    /// Oriented simplex with a single coefficient. `norm` is l1, l2, linf,
    /// a number p, or polytope (with `facets`).
    #[staticmethod]
    #[pyo3(signature = (vertices, norm = "l2", group = "Z", coeff = 1.0, facets = None))]
    fn simplex(vertices: Vec<Vec<f64>>, norm: &str, group: &str, coeff: f64, facets: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let dim = vertices.first().map_or(0, Vec::len);
        let space = parse_space(dim, norm, facets)?;
        let group = parse_group(group)?;
        let g = match group {
            CoefficientGroup::Reals => GroupElement::Real(coeff),
            _ if coeff.fract() == 0.0 => group.from_int(coeff as i64),
            _ => return Err(PyValueError::new_err("integer group needs an integral coefficient")),
        };
        let pts: Vec<Vector> = vertices.into_iter().map(vector).collect();
        let inner = PolyChain::simplex(&space, group, g, &pts).map_err(py_err)?;
        Ok(PyChain { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyChain {
            inner: chain_from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        chain_to_json(&self.inner)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.space().dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Chain(k={}, dim={}, summands={})",
            self.inner.k(),
            self.inner.space().dim(),
            self.inner.len()
        )
    }

    fn __add__(&self, other: &PyChain) -> PyResult<Self> {
        Ok(PyChain {
            inner: self.inner.add(&other.inner).map_err(py_err)?,
        })
    }

    fn __sub__(&self, other: &PyChain) -> PyResult<Self> {
        Ok(PyChain {
            inner: self.inner.sub(&other.inner).map_err(py_err)?,
        })
    }

    fn __neg__(&self) -> Self {
        PyChain { inner: self.inner.neg() }
    }

    fn __mul__(&self, n: i64) -> Self {
        PyChain {
            inner: self.inner.times(n),
        }
    }

    fn mass(&self) -> PyResult<f64> {
        flatchain::mass::mass(&self.inner).map_err(py_err)
    }

    fn boundary(&self) -> PyResult<Self> {
        Ok(PyChain {
            inner: self.inner.boundary().map_err(py_err)?,
        })
    }

    fn canonicalize(&self) -> Self {
        PyChain {
            inner: self.inner.canonicalize(),
        }
    }

    fn is_zero(&self) -> bool {
        self.inner.canonicalize().is_zero()
    }

    /// Slice by the level set `{f = level}` of the linear functional `f`.
    fn slice(&self, functional: Vec<f64>, level: f64) -> PyResult<Self> {
        let f = Functional::new(self.inner.space(), vector(functional)).map_err(py_err)?;
        Ok(PyChain {
            inner: slice(&self.inner, &f, level).map_err(py_err)?,
        })
    }

    /// Restriction to a closed ball; returns `(chain, converged)`.
    #[pyo3(signature = (center, radius, stages = 6, tolerance = 1e-3))]
    fn restrict_ball(&self, center: Vec<f64>, radius: f64, stages: usize, tolerance: f64) -> PyResult<(Self, bool)> {
        let f = LipschitzFn::DistanceToPoint(vector(center));
        let rep = restrict_lipschitz(&self.inner, &f, radius, RestrictOptions { stages, tolerance }).map_err(py_err)?;
        let last = rep
            .chains
            .last()
            .cloned()
            .unwrap_or_else(|| PolyChain::zero(self.inner.space().clone(), self.inner.group(), self.inner.k()));
        Ok((PyChain { inner: last }, rep.converged))
    }

    fn cone(&self, apex: Vec<f64>) -> PyResult<Self> {
        Ok(PyChain {
            inner: cone(&vector(apex), &self.inner).map_err(py_err)?,
        })
    }

    /// Quantize onto `centers`; returns `(chain, budget)`.
    #[pyo3(signature = (centers, delta, coeff_grid = None))]
    fn quantize(&self, centers: Vec<Vec<f64>>, delta: f64, coeff_grid: Option<f64>) -> PyResult<(Self, f64)> {
        let centers: Vec<Vector> = centers.into_iter().map(vector).collect();
        let net = coeff_grid.map_or(CoeffNet::Exact, CoeffNet::Grid);
        let q = cone_quantize(&self.inner, &centers, delta, net).map_err(py_err)?;
        Ok((PyChain { inner: q.chain }, q.budget.total))
    }

    /// Upper bound on the flat norm over a Kuhn complex of `[lo, hi]^d`.
    /// Returns `(value, embedding_discrepancy)`.
    #[pyo3(signature = (lo, hi, resolution = 4, mode = "real"))]
    fn flat_norm(&self, lo: Vec<f64>, hi: Vec<f64>, resolution: usize, mode: &str) -> PyResult<(f64, f64)> {
        let mode: SolveMode = mode.parse().map_err(py_err)?;
        let complex = build_complex(self.inner.space(), &vector(lo), &vector(hi), resolution).map_err(py_err)?;
        let (p, embed) = embed_chain(&self.inner, &complex).map_err(py_err)?;
        let cert = flat_norm_upper(&complex, &p, mode).map_err(py_err)?;
        Ok((cert.value, embed.discrepancy))
    }
}

/// Run an experiment from a JSON config; returns the report as JSON.
#[pyfunction]
fn run_experiment_json(config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config).map_err(py_err)?;
    Ok(run_experiment(&cfg).map_err(py_err)?.to_json())
}

#[pymodule]
fn flatchain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChain>()?;
    m.add_function(wrap_pyfunction!(run_experiment_json, m)?)?;
    Ok(())
}
