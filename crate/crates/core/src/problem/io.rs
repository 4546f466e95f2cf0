//! Problem file format. `null` (or an absent key) stands for the zero function; nested atom
//! maps inherit the problem lattice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EllipticProblem;
use crate::atoms::{AtomMap, AtomMapDoc, Lattice};
use crate::solver::SolveMode;
use crate::FORMAT_VERSION;

/// Schema violation located by a JSON pointer (RFC 6901).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("schema error at {pointer}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        let pointer = pointer.into();
        let pointer = if pointer.is_empty() { "/".to_string() } else { pointer };
        Self { pointer, message: message.into() }
    }
}

/// Parse `text` into `T`, reporting failures with the pointer of the offending field.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = path_to_pointer(e.path());
        SchemaError::new(pointer, e.inner().to_string())
    })
}

fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => {}
        }
    }
    out
}

/// Optional solver settings carried by a problem file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SolveMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_tau_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<u32>,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    pub s: f64,
    pub alpha: f64,
    pub beta: Vec<f64>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<Option<AtomMapDoc>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Option<AtomMapDoc>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<AtomMapDoc>,
    pub f: AtomMapDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverDoc>,
}

fn nested(doc: Option<&AtomMapDoc>, lattice: &Lattice, pointer: &str) -> Result<AtomMap, SchemaError> {
    match doc {
        None => Ok(AtomMap::zero(lattice.clone())),
        Some(doc) => doc.clone().into_map(Some(lattice)).map_err(|e| SchemaError::new(pointer, e.to_string())),
    }
}

impl ProblemDoc {
    pub fn from_json_str(text: &str) -> Result<Self, SchemaError> {
        parse_json(text)
    }

    /// Build the problem; shape and lattice defects are schema errors, while symmetry and
    /// definiteness are left to [`EllipticProblem::validate`].
    pub fn to_problem(&self) -> Result<EllipticProblem, SchemaError> {
        if let Some(f) = self.format {
            if f != FORMAT_VERSION {
                return Err(SchemaError::new(
                    "/format",
                    format!("unsupported format {f} (reader understands {FORMAT_VERSION})"),
                ));
            }
        }
        let d = self.d;
        if d == 0 {
            return Err(SchemaError::new("/d", "d must be at least 1"));
        }
        let lattice = match &self.h {
            None => Lattice::unit(d),
            Some(h) => {
                if h.len() != d {
                    return Err(SchemaError::new("/h", format!("expected {d} entries, found {}", h.len())));
                }
                Lattice::new(h.clone()).map_err(|e| SchemaError::new("/h", e.to_string()))?
            }
        };
        if self.beta.len() != d {
            return Err(SchemaError::new("/beta", format!("expected {d} entries, found {}", self.beta.len())));
        }
        if self.m.len() != d {
            return Err(SchemaError::new("/M", format!("expected {d} rows, found {}", self.m.len())));
        }
        for (i, row) in self.m.iter().enumerate() {
            if row.len() != d {
                return Err(SchemaError::new(format!("/M/{i}"), format!("expected {d} entries, found {}", row.len())));
            }
        }

        let zero = AtomMap::zero(lattice.clone());
        let mut e = vec![vec![zero.clone(); d]; d];
        if let Some(rows) = &self.e {
            if rows.len() != d {
                return Err(SchemaError::new("/E", format!("expected {d} rows, found {}", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != d {
                    return Err(SchemaError::new(
                        format!("/E/{i}"),
                        format!("expected {d} entries, found {}", row.len()),
                    ));
                }
                for (j, g) in row.iter().enumerate() {
                    e[i][j] = nested(g.as_ref(), &lattice, &format!("/E/{i}/{j}"))?;
                }
            }
        }
        let mut v = vec![zero.clone(); d];
        if let Some(entries) = &self.v {
            if entries.len() != d {
                return Err(SchemaError::new("/v", format!("expected {d} entries, found {}", entries.len())));
            }
            for (i, g) in entries.iter().enumerate() {
                v[i] = nested(g.as_ref(), &lattice, &format!("/v/{i}"))?;
            }
        }
        let w = nested(self.w.as_ref(), &lattice, "/w")?;
        let f = nested(Some(&self.f), &lattice, "/f")?;

        let pointer = |msg: &str| {
            if msg.contains("alpha") {
                "/alpha"
            } else if msg.contains("order") {
                "/s"
            } else if msg.contains("beta") {
                "/beta"
            } else if msg.contains("M ") {
                "/M"
            } else {
                "/"
            }
        };
        EllipticProblem::new(lattice, self.s, self.alpha, self.beta.clone(), self.m.clone(), e, v, w, f).map_err(|e| {
            let msg = e.to_string();
            SchemaError::new(pointer(&msg), msg)
        })
    }
}

impl EllipticProblem {
    /// File form with every perturbation spelled out (`null` for zero maps).
    pub fn to_doc(&self, solver: Option<SolverDoc>) -> ProblemDoc {
        let nested = |g: &AtomMap| -> Option<AtomMapDoc> {
            if g.is_empty() {
                None
            } else {
                let mut doc = g.to_doc(false);
                doc.d = None;
                doc.h = None;
                Some(doc)
            }
        };
        let mut f = self.source().to_doc(false);
        f.d = None;
        f.h = None;
        ProblemDoc {
            format: Some(FORMAT_VERSION),
            d: self.dim(),
            h: Some(self.lattice().steps().to_vec()),
            s: self.order(),
            alpha: self.reaction(),
            beta: self.advection().to_vec(),
            m: self.diffusion().to_vec(),
            e: Some(self.diffusion_perturbation().iter().map(|r| r.iter().map(nested).collect()).collect()),
            v: Some(self.advection_perturbation().iter().map(nested).collect()),
            w: nested(self.reaction_perturbation()),
            f,
            solver,
        }
    }

    pub fn to_json_string(&self, solver: Option<SolverDoc>) -> String {
        serde_json::to_string_pretty(&self.to_doc(solver)).expect("problems always serialize")
    }

    /// Parse a problem file, returning the problem and its solver section.
    pub fn from_json_str(text: &str) -> Result<(Self, SolverDoc), SchemaError> {
        let doc = ProblemDoc::from_json_str(text)?;
        let p = doc.to_problem()?;
        Ok((p, doc.solver.unwrap_or_default()))
    }
}
