//! JSON file formats.
//!
//! Space: `{"atoms":[{"id":"a1","weight":1.0,"p":1.5}, ...], "r": 3.0}` with
//! `r` optional (defaults to the largest `p`). A space file may also carry a
//! `"values"` map, which is read as a function on it.
//! Function: `{"values":{"a1":0.5, ...}}`.
//! Embedding: `{"map":{"a1":[{"atom":"b1","coeff":1.0}, ...], ...}}`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embedding::RefinementEmbedding;
use crate::measure::{AtomicMeasureSpace, SimpleFunction};
use crate::nakano::NakanoSpace;

/// Failure to read or interpret an input file.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid { path: String, source: crate::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub id: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub atoms: Vec<AtomEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionFile {
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub atom: String,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingFile {
    pub map: BTreeMap<String, Vec<ImageEntry>>,
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Io {
        path: display(path),
        source,
    })?;
    parse_json(&text, &display(path))
}

pub fn parse_json<T: DeserializeOwned>(text: &str, path: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let position = format!(" at line {} column {}", e.line(), e.column());
        InputError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: full.strip_suffix(&position).unwrap_or(&full).to_string(),
        }
    })
}

fn invalid(path: &Path) -> impl FnOnce(crate::Error) -> InputError + '_ {
    move |source| InputError::Invalid {
        path: display(path),
        source,
    }
}

impl SpaceFile {
    pub fn measure(&self) -> crate::Result<AtomicMeasureSpace> {
        AtomicMeasureSpace::new(self.atoms.iter().map(|a| (a.id.clone(), a.weight)))
    }

    pub fn nakano(&self) -> crate::Result<NakanoSpace> {
        let measure = self.measure()?;
        let p = self
            .atoms
            .iter()
            .map(|a| {
                a.p.ok_or_else(|| {
                    crate::Error::Domain(format!("atom {:?} has no exponent p", a.id))
                })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        match self.r {
            Some(r) => NakanoSpace::new(measure, p, r),
            None => NakanoSpace::tight(measure, p),
        }
    }

    pub fn from_nakano(n: &NakanoSpace) -> Self {
        let atoms = n
            .space()
            .ids()
            .iter()
            .zip(n.space().weights())
            .zip(n.exponent())
            .map(|((id, &weight), &p)| AtomEntry {
                id: id.clone(),
                weight,
                p: Some(p),
            })
            .collect();
        Self {
            atoms,
            r: Some(n.r()),
            values: None,
        }
    }
}

pub fn function_on(
    space: &AtomicMeasureSpace,
    values: &BTreeMap<String, f64>,
) -> crate::Result<SimpleFunction> {
    let map: HashMap<String, f64> = values.iter().map(|(k, v)| (k.clone(), *v)).collect();
    space.function_from_map(&map)
}

pub fn function_file(f: &SimpleFunction) -> FunctionFile {
    FunctionFile {
        values: f
            .atoms()
            .iter()
            .cloned()
            .zip(f.values().iter().copied())
            .collect(),
    }
}

/// A Nakano space, plus the function stored alongside it if there is one.
pub fn load_space(path: &Path) -> Result<(NakanoSpace, Option<SimpleFunction>), InputError> {
    let file: SpaceFile = read_json(path)?;
    let n = file.nakano().map_err(invalid(path))?;
    let f = match &file.values {
        Some(values) => Some(function_on(n.space(), values).map_err(invalid(path))?),
        None => None,
    };
    Ok((n, f))
}

pub fn load_function(
    path: &Path,
    space: &AtomicMeasureSpace,
) -> Result<SimpleFunction, InputError> {
    let file: FunctionFile = read_json(path)?;
    function_on(space, &file.values).map_err(invalid(path))
}

pub fn load_embedding(
    path: &Path,
    source: NakanoSpace,
    target: NakanoSpace,
) -> Result<RefinementEmbedding, InputError> {
    let file: EmbeddingFile = read_json(path)?;
    let map: Vec<(String, Vec<(String, f64)>)> = file
        .map
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().map(|e| (e.atom, e.coeff)).collect()))
        .collect();
    RefinementEmbedding::from_ids(source, target, &map).map_err(invalid(path))
}
