//! JSON problem files.
//!
//! ```json
//! {
//!   "algorithm": "ryu",
//!   "d": 2,
//!   "subspaces": [
//!     {"d": 2, "basis": [[1.0, 0.0]]},
//!     {"d": 2, "basis": [[1.0, 1.0]]},
//!     {"d": 2, "basis": [[1.0, 0.0]]}
//!   ],
//!   "anchors": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
//!   "lambda": 0.5,
//!   "start": [[1.0, 2.0], [0.0, 0.0]]
//! }
//! ```
//!
//! `basis` lists basis vectors (columns), each of length `d`; an empty list is
//! the zero subspace. `anchors` is optional and turns the problem affine.
//! `start` holds the governing blocks `z_1, …, z_{n-1}`. Projectors are
//! recomputed on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::splitting::{Algorithm, MtProblem, RyuProblem, Splitting};
use crate::subspaces::Subspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceSpec {
    pub d: usize,
    pub basis: Vec<Vec<f64>>,
}

impl SubspaceSpec {
    pub fn to_subspace(&self) -> Result<Subspace> {
        if self.basis.is_empty() {
            return Ok(Subspace::zero(self.d));
        }
        Subspace::from_basis(&Matrix::from_columns(self.d, &self.basis)?)
    }

    /// Orthonormal basis of `s`.
    pub fn from_subspace(s: &Subspace) -> Result<Self> {
        let b = s.basis()?;
        Ok(Self {
            d: s.ambient_dim(),
            basis: (0..b.cols()).map(|j| b.col(j)).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub algorithm: Algorithm,
    pub d: usize,
    pub subspaces: Vec<SubspaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<Vec<f64>>>,
    pub lambda: f64,
    pub start: Vec<Vec<f64>>,
}

impl ProblemSpec {
    /// Reads and validates a problem file. Decoding errors carry the file
    /// path and the JSON location of the offending value.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse { path: loc, message } => Error::Parse {
                path: format!("{}{}", path.display(), loc),
                message,
            },
            other => other,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            let loc = if at == "." { String::new() } else { format!(" at {at}") };
            Error::Parse {
                path: loc,
                message: e.into_inner().to_string(),
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem spec serializes")
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidInput(msg));
        if self.d == 0 {
            return invalid("d must be positive".into());
        }
        let n = self.subspaces.len();
        match self.algorithm {
            Algorithm::Ryu if n != 3 => return invalid(format!("ryu needs exactly 3 subspaces, got {n}")),
            Algorithm::Mt if n < 3 => return invalid(format!("mt needs at least 3 subspaces, got {n}")),
            _ => {}
        }
        for (i, s) in self.subspaces.iter().enumerate() {
            if s.d != self.d {
                return invalid(format!("subspaces[{i}].d is {}, expected {}", s.d, self.d));
            }
            if s.basis.len() > self.d {
                return invalid(format!("subspaces[{i}] has {} basis vectors in R^{}", s.basis.len(), self.d));
            }
            if let Some(j) = s.basis.iter().position(|c| c.len() != self.d) {
                return invalid(format!("subspaces[{i}].basis[{j}] has length {}, expected {}", s.basis[j].len(), self.d));
            }
        }
        if let Some(anchors) = &self.anchors {
            if anchors.len() != n {
                return invalid(format!("{} anchors for {n} subspaces", anchors.len()));
            }
            if let Some(i) = anchors.iter().position(|a| a.len() != self.d) {
                return invalid(format!("anchors[{i}] has length {}, expected {}", anchors[i].len(), self.d));
            }
        }
        if self.start.len() != n - 1 {
            return invalid(format!("start needs {} blocks, got {}", n - 1, self.start.len()));
        }
        if let Some(i) = self.start.iter().position(|b| b.len() != self.d) {
            return invalid(format!("start[{i}] has length {}, expected {}", self.start[i].len(), self.d));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let all_finite = self.subspaces.iter().all(|s| s.basis.iter().all(|c| finite(c)))
            && self.anchors.iter().flatten().all(|a| finite(a))
            && self.start.iter().all(|b| finite(b))
            && self.lambda.is_finite();
        if !all_finite {
            return invalid("non-finite number in problem file".into());
        }
        Ok(())
    }

    /// Builds the splitting operator described by the file.
    pub fn build(&self) -> Result<Box<dyn Splitting>> {
        let subspaces = self
            .subspaces
            .iter()
            .map(SubspaceSpec::to_subspace)
            .collect::<Result<Vec<_>>>()?;
        Ok(match (self.algorithm, &self.anchors) {
            (Algorithm::Ryu, None) => {
                let [u, v, w] = take3(subspaces);
                Box::new(RyuProblem::new(u, v, w)?)
            }
            (Algorithm::Ryu, Some(a)) => Box::new(RyuProblem::affine(take3(subspaces), a)?),
            (Algorithm::Mt, None) => Box::new(MtProblem::new(subspaces)?),
            (Algorithm::Mt, Some(a)) => Box::new(MtProblem::affine(subspaces, a)?),
        })
    }

    /// The stacked governing start vector.
    pub fn start_vector(&self) -> Vec<f64> {
        self.start.concat()
    }
}

fn take3(v: Vec<Subspace>) -> [Subspace; 3] {
    v.try_into().expect("validated subspace count")
}
