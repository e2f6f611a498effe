//! System files: JSON descriptions of closed-geodesic germ data.
//!
//! ```json
//! {"manifold": {"dim": 3},
//!  "curves": [{"name": "c1", "initial_index": 1,
//!              "blocks": [{"type": "R", "theta_over_pi": "0.58578~5", "irrational": true},
//!                         {"type": "D", "lambda": "2"}]}]}
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::PrecisionBudget;
use crate::iteration::IndexGerm;
use crate::normal_forms::{BasicBlock, BlockList, BlockSpec, NormalFormError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("schema error at line {line}, column {column}: {reason}")]
    Schema {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("curve {curve}, block {block}: {source}")]
    Block {
        curve: String,
        block: usize,
        source: NormalFormError,
    },
    #[error("duplicate curve name {0}")]
    DuplicateName(String),
    #[error("curve {curve}: blocks have dimension {found}, a {dim}-manifold needs {expected}")]
    Dimension {
        curve: String,
        dim: u32,
        found: usize,
        expected: usize,
    },
    #[error("invalid system: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub dim: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub name: String,
    pub initial_index: i64,
    pub blocks: Vec<BlockSpec>,
}

/// The on-disk form of a geodesic system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub manifold: ManifoldSpec,
    pub curves: Vec<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<PrecisionBudget>,
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self, SystemError> {
        serde_json::from_str(text).map_err(|e| SystemError::Schema {
            line: e.line(),
            column: e.column(),
            reason: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, SystemError> {
        let text = std::fs::read_to_string(path).map_err(|e| SystemError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system files always serialize")
    }

    /// Builds and validates the germs. The file's own precision settings
    /// take precedence over `fallback`.
    pub fn germs(&self, fallback: PrecisionBudget) -> Result<Vec<IndexGerm>, SystemError> {
        let budget = self.precision.unwrap_or(fallback);
        if budget.max_digits == 0 || budget.refine_step == 0 {
            return Err(SystemError::Invalid(
                "precision budget must be positive".into(),
            ));
        }
        if self.manifold.dim < 2 {
            return Err(SystemError::Invalid(format!(
                "manifold dimension {} is too small",
                self.manifold.dim
            )));
        }
        let expected = 2 * self.manifold.dim as usize - 2;
        let mut seen = HashSet::new();
        let mut germs = Vec::with_capacity(self.curves.len());
        for c in &self.curves {
            if !seen.insert(c.name.as_str()) {
                return Err(SystemError::DuplicateName(c.name.clone()));
            }
            let blocks = c
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    BasicBlock::from_spec(b, &budget).map_err(|source| SystemError::Block {
                        curve: c.name.clone(),
                        block: k,
                        source,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let blocks = BlockList::new(blocks);
            if blocks.dimension() != expected {
                return Err(SystemError::Dimension {
                    curve: c.name.clone(),
                    dim: self.manifold.dim,
                    found: blocks.dimension(),
                    expected,
                });
            }
            germs.push(IndexGerm::new(
                c.name.clone(),
                c.initial_index,
                blocks,
                budget,
            ));
        }
        Ok(germs)
    }
}

/// Reads and validates a system file.
pub fn parse_system(
    path: &Path,
    fallback: PrecisionBudget,
) -> Result<(SystemFile, Vec<IndexGerm>), SystemError> {
    let file = SystemFile::read(path)?;
    let germs = file.germs(fallback)?;
    Ok((file, germs))
}

/// Serializes germs back into a system file on S^(dim).
pub fn system_file(dim: u32, germs: &[IndexGerm]) -> SystemFile {
    SystemFile {
        manifold: ManifoldSpec { dim },
        curves: germs
            .iter()
            .map(|g| CurveSpec {
                name: g.name().to_string(),
                initial_index: g.initial_index(),
                blocks: g
                    .blocks()
                    .blocks()
                    .iter()
                    .map(BasicBlock::to_spec)
                    .collect(),
            })
            .collect(),
        precision: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: &str = r#"{"manifold":{"dim":3},"curves":[
        {"name":"B","initial_index":2,"blocks":[
            {"type":"R","theta_over_pi":"1/3"},{"type":"R","theta_over_pi":"1/2"}]}]}"#;

    #[test]
    fn parses_valid_file() {
        let f = SystemFile::from_json(B).unwrap();
        let g = f.germs(PrecisionBudget::default()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].index_at(12).unwrap(), 8);
        let back = SystemFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(system_file(3, &g), f);
    }

    #[test]
    fn rejects_bad_files() {
        let pi = B.replace("1/3", "1");
        assert!(matches!(
            SystemFile::from_json(&pi)
                .unwrap()
                .germs(PrecisionBudget::default()),
            Err(SystemError::Block { block: 0, .. })
        ));
        let dup = r#"{"manifold":{"dim":3},"curves":[
            {"name":"a","initial_index":1,"blocks":[{"type":"D","lambda":"2"},{"type":"D","lambda":"3"}]},
            {"name":"a","initial_index":1,"blocks":[{"type":"D","lambda":"2"},{"type":"D","lambda":"3"}]}]}"#;
        assert!(matches!(
            SystemFile::from_json(dup)
                .unwrap()
                .germs(PrecisionBudget::default()),
            Err(SystemError::DuplicateName(_))
        ));
        let short = r#"{"manifold":{"dim":3},"curves":[
            {"name":"a","initial_index":1,"blocks":[{"type":"D","lambda":"2"}]}]}"#;
        assert!(matches!(
            SystemFile::from_json(short)
                .unwrap()
                .germs(PrecisionBudget::default()),
            Err(SystemError::Dimension { .. })
        ));
        let unknown = B.replace(r#""dim":3"#, r#""dim":3,"genus":0"#);
        match SystemFile::from_json(&unknown) {
            Err(SystemError::Schema { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
