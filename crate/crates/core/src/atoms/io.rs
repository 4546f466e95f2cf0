//! JSON form of an atom map: `{"d", "h", "atoms": [{"z", "re", "im"}]}` with only the
//! canonical half-space and zero indices written out.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AtomError, AtomMap, Lattice};
use crate::cli::RunManifest;
use crate::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub z: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

/// Serialized atom map. `d` and `h` may be omitted when the map is nested inside a document
/// that fixes the lattice (problem files).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomMapDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    pub atoms: Vec<AtomJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl AtomMapDoc {
    /// Rebuild the map. With `context` given, a missing lattice defaults to it and a present
    /// one must match it exactly.
    pub fn into_map(self, context: Option<&Lattice>) -> Result<AtomMap, AtomError> {
        if let Some(f) = self.format {
            if f != FORMAT_VERSION {
                return Err(AtomError::Domain(format!(
                    "unsupported atom map format {f} (reader understands {FORMAT_VERSION})"
                )));
            }
        }
        let lattice = match (self.h, context) {
            (Some(h), ctx) => {
                let l = Lattice::new(h)?;
                if let Some(d) = self.d {
                    if d != l.dim() {
                        return Err(AtomError::Domain(format!("d = {d} disagrees with h of length {}", l.dim())));
                    }
                }
                if let Some(ctx) = ctx {
                    if *ctx != l {
                        return Err(AtomError::LatticeMismatch);
                    }
                }
                l
            }
            (None, Some(ctx)) => {
                if let Some(d) = self.d {
                    if d != ctx.dim() {
                        return Err(AtomError::LatticeMismatch);
                    }
                }
                ctx.clone()
            }
            (None, None) => match self.d {
                Some(d) if d >= 1 => Lattice::unit(d),
                _ => return Err(AtomError::Domain("atom map needs \"d\" or \"h\"".into())),
            },
        };
        AtomMap::from_half(lattice, self.atoms.into_iter().map(|a| (a.z, Complex64::new(a.re, a.im))))
    }
}

impl AtomMap {
    /// Document form; `standalone` adds the format tag and the lattice.
    pub fn to_doc(&self, standalone: bool) -> AtomMapDoc {
        AtomMapDoc {
            format: standalone.then_some(FORMAT_VERSION),
            d: Some(self.dim()),
            h: Some(self.lattice().steps().to_vec()),
            atoms: self.half_atoms().map(|(z, c)| AtomJson { z: z.clone(), re: c.re, im: c.im }).collect(),
            manifest: None,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc(true)).expect("atom maps always serialize")
    }

    pub fn from_json_str(s: &str) -> Result<AtomMap, AtomError> {
        let doc: AtomMapDoc =
            serde_json::from_str(s).map_err(|e| AtomError::Domain(format!("malformed atom map JSON: {e}")))?;
        doc.into_map(None)
    }
}
