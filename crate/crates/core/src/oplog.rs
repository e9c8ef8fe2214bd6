//! Line-delimited JSON operation logs for replaying a stream against a forest.
//!
//! ```text
//! {"op":"insert","point":[0.1,0.2]}
//! {"op":"delete","id":3}
//! {"op":"score","point":[0.5,0.5]}
//! ```

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Forest, ScoreReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Op {
    Insert { point: Vec<f64> },
    Delete { id: usize },
    Score { point: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum OpOutcome {
    Insert { id: usize },
    Delete { id: usize },
    Score(ScoreReport),
}

/// Parses one operation per non-blank line.
pub fn read_oplog<R: BufRead>(reader: R) -> Result<Vec<Op>> {
    let mut ops = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let op = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        ops.push(op);
    }
    Ok(ops)
}

/// Applies `ops` in order, stopping at the first failure.
pub fn replay(forest: &mut Forest, ops: &[Op], epsilon: f64, phi: f64) -> Result<Vec<OpOutcome>> {
    ops.iter()
        .map(|op| {
            Ok(match op {
                Op::Insert { point } => OpOutcome::Insert {
                    id: forest.insert(point)?,
                },
                Op::Delete { id } => {
                    forest.delete(*id)?;
                    OpOutcome::Delete { id: *id }
                }
                Op::Score { point } => OpOutcome::Score(forest.eps_phi_anomaly(point, epsilon, phi)?),
            })
        })
        .collect()
}
