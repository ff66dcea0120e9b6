//! Experiment configuration: a TOML file with one table per concern.
//!
//! ```toml
//! [coefficients]
//! nu = 1.0
//! a = 1.0
//! c = 1.0
//! b = 0.0
//!
//! [grid]
//! h = [0.04, 0.02, 0.01]
//! scheme = "implicit"
//!
//! [decomposition]
//! subdomains = "2x1"
//! overlap_cells = [0, 2]
//!
//! [transmission]
//! kind = ["robin", "ventcel"]
//! source = "closed"
//! ```
//!
//! Scalars and lists are both accepted for the swept keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Coefficients, FrequencyBox, GridSpec, TimeRelation, TransmissionKind};
use crate::swr::Scheme;

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> std::result::Result<Vec<T>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Where the transmission parameters come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamSource {
    /// Asymptotic closed forms.
    Closed,
    /// Numerical min-max optimization.
    Oracle,
    /// `p` and `q` given in the config.
    Manual,
}

impl std::str::FromStr for ParamSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "closed" | "closed_form" => Ok(ParamSource::Closed),
            "oracle" => Ok(ParamSource::Oracle),
            "manual" => Ok(ParamSource::Manual),
            _ => Err(Error::Config(format!("unknown parameter source '{s}'"))),
        }
    }
}

/// How `dt` follows `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtRelation {
    Linear,
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientsSection {
    pub nu: f64,
    pub a: f64,
    pub c: f64,
    pub b: f64,
}

impl Default for CoefficientsSection {
    fn default() -> Self {
        CoefficientsSection { nu: 1.0, a: 1.0, c: 1.0, b: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub lx: f64,
    pub ly: f64,
    /// Final time.
    pub t: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection { lx: 1.2, ly: 1.2, t: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(deserialize_with = "one_or_many")]
    pub h: Vec<f64>,
    pub scheme: Scheme,
    /// Defaults to linear for the implicit scheme and quadratic for the explicit one.
    pub dt_relation: Option<DtRelation>,
    /// `dt = ch h` or `dt = ch h^2`.
    pub ch: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { h: vec![0.04, 0.02, 0.01], scheme: Scheme::Implicit, dt_relation: None, ch: 0.25 }
    }
}

/// Optional override of the frequency box used by the closed forms and the oracle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencySection {
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub k_min: Option<f64>,
    pub k_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionSection {
    /// `"PxQ"` strings.
    #[serde(deserialize_with = "one_or_many")]
    pub subdomains: Vec<String>,
    #[serde(deserialize_with = "one_or_many")]
    pub overlap_cells: Vec<usize>,
}

impl Default for DecompositionSection {
    fn default() -> Self {
        DecompositionSection { subdomains: vec!["2x1".into()], overlap_cells: vec![0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmissionSection {
    #[serde(deserialize_with = "one_or_many")]
    pub kind: Vec<TransmissionKind>,
    pub source: ParamSource,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Also compute the oracle contraction in sweeps.
    pub with_oracle: bool,
}

impl Default for TransmissionSection {
    fn default() -> Self {
        TransmissionSection { kind: vec![TransmissionKind::Robin], source: ParamSource::Closed, p: None, q: None, with_oracle: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    /// Use GMRES on the interface fixed point instead of plain iteration.
    pub gmres: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { seed: 0, tol: 1e-6, max_iter: 500, gmres: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory.
    pub path: PathBuf,
    /// Dump the glued field of each `swr` run.
    pub field: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { path: PathBuf::from("oswr-out"), field: false }
    }
}

/// Fully resolved experiment description.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub coefficients: CoefficientsSection,
    pub domain: DomainSection,
    pub grid: GridSection,
    pub frequency_box: FrequencySection,
    pub decomposition: DecompositionSection,
    pub transmission: TransmissionSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

/// Command-line overrides; `None` keeps the config value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub h: Option<Vec<f64>>,
    pub subdomains: Option<String>,
    pub overlap_cells: Option<usize>,
    pub transmission: Option<TransmissionKind>,
    pub param_source: Option<ParamSource>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub scheme: Option<Scheme>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub gmres: bool,
}

/// Parses `"PxQ"`.
pub fn parse_subdomains(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("subdomains must look like PxQ, got '{s}'"));
    let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let px: usize = a.trim().parse().map_err(|_| bad())?;
    let py: usize = b.trim().parse().map_err(|_| bad())?;
    if px == 0 || py == 0 {
        return Err(bad());
    }
    Ok((px, py))
}

/// Parses a comma separated list of mesh sizes.
pub fn parse_h_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad mesh size '{t}'"))))
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(h) = &o.h {
            self.grid.h = h.clone();
        }
        if let Some(s) = &o.subdomains {
            self.decomposition.subdomains = vec![s.clone()];
        }
        if let Some(n) = o.overlap_cells {
            self.decomposition.overlap_cells = vec![n];
        }
        if let Some(k) = o.transmission {
            self.transmission.kind = vec![k];
        }
        if let Some(s) = o.param_source {
            self.transmission.source = s;
        }
        if o.p.is_some() {
            self.transmission.p = o.p;
        }
        if o.q.is_some() {
            self.transmission.q = o.q;
        }
        if let Some(s) = o.scheme {
            self.grid.scheme = s;
        }
        if let Some(s) = o.seed {
            self.solver.seed = s;
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
        if let Some(m) = o.max_iter {
            self.solver.max_iter = m;
        }
        if let Some(p) = &o.out {
            self.output.path = p.clone();
        }
        if o.gmres {
            self.solver.gmres = true;
        }
    }

    /// Fills defaults that depend on other fields.
    pub fn resolve(mut self) -> Result<Self> {
        if self.grid.dt_relation.is_none() {
            self.grid.dt_relation = Some(match self.grid.scheme {
                Scheme::Implicit => DtRelation::Linear,
                Scheme::Explicit => DtRelation::Quadratic,
            });
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.h.is_empty() {
            return Err(Error::Config("grid.h is empty".into()));
        }
        if let Some(h) = self.grid.h.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(Error::Config(format!("mesh sizes must be positive, got {h}")));
        }
        if self.decomposition.subdomains.is_empty() {
            return Err(Error::Config("decomposition.subdomains is empty".into()));
        }
        for s in &self.decomposition.subdomains {
            parse_subdomains(s)?;
        }
        if self.decomposition.overlap_cells.is_empty() {
            return Err(Error::Config("decomposition.overlap_cells is empty".into()));
        }
        if self.transmission.kind.is_empty() {
            return Err(Error::Config("transmission.kind is empty".into()));
        }
        if self.transmission.source == ParamSource::Manual {
            if self.transmission.p.is_none() {
                return Err(Error::Config("manual parameters need transmission.p".into()));
            }
            if self.transmission.kind.contains(&TransmissionKind::Ventcel) && self.transmission.q.is_none() {
                return Err(Error::Config("manual Ventcel parameters need transmission.q".into()));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config("solver.tol must be positive and solver.max_iter nonzero".into()));
        }
        if !(self.grid.ch > 0.0) {
            return Err(Error::Config("grid.ch must be positive".into()));
        }
        self.coefficients()?;
        Ok(())
    }

    pub fn coefficients(&self) -> Result<Coefficients> {
        let c = &self.coefficients;
        Coefficients::new(c.nu, c.a, c.c, c.b)
    }

    pub fn relation(&self) -> TimeRelation {
        match self.grid.dt_relation.unwrap_or(DtRelation::Linear) {
            DtRelation::Linear => TimeRelation::Linear(self.grid.ch),
            DtRelation::Quadratic => TimeRelation::Quadratic(self.grid.ch),
        }
    }

    pub fn grid_for(&self, h: f64) -> Result<GridSpec> {
        GridSpec::new(h, self.relation(), self.domain.lx, self.domain.ly, self.domain.t)
    }

    /// `base` with the configured overrides applied.
    pub fn frequency_box(&self, base: FrequencyBox) -> FrequencyBox {
        let f = &self.frequency_box;
        FrequencyBox {
            omega_min: f.omega_min.unwrap_or(base.omega_min),
            omega_max: f.omega_max.unwrap_or(base.omega_max),
            k_min: f.k_min.unwrap_or(base.k_min),
            k_max: f.k_max.unwrap_or(base.k_max),
        }
    }

    pub fn decompositions(&self) -> Vec<(usize, usize)> {
        self.decomposition.subdomains.iter().map(|s| parse_subdomains(s).expect("validated")).collect()
    }

    /// Writes the resolved config next to the outputs as `<name>.config.toml`.
    pub fn echo(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output.path)?;
        let p = self.output.path.join(format!("{name}.config.toml"));
        std::fs::write(&p, self.to_toml())?;
        Ok(p)
    }
}
