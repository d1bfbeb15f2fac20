use serde::{Deserialize, Serialize};

use crate::core::ScalarFn;
use crate::error::{Error, Result};
use crate::numeric::QuinticHermite;

use super::{TransformSpec, NODE_STEP};

const MAX_SAMPLED_NODES: usize = 1 << 20;

/// JSON form of a [`TransformSpec`]. Grid rows are [T, value, d/dT, d²/dT²]
/// with an optional fifth column d³/dT³; both functions are rebuilt by Hermite
/// interpolation, septic when the fifth column is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub m0: f64,
    pub h0: f64,
    /// Expression in Q.
    pub kappa: String,
    #[serde(rename = "A_grid")]
    pub a_grid: Vec<Vec<f64>>,
    #[serde(rename = "B_grid")]
    pub b_grid: Vec<Vec<f64>>,
}

fn grid_of(f: &ScalarFn, domain: (f64, f64)) -> Result<Vec<Vec<f64>>> {
    if let Some(h) = f.hermite() {
        return Ok(h
            .nodes()
            .iter()
            .zip(h.node_data())
            .enumerate()
            .map(|(i, (&t, d))| {
                let mut row = vec![t, d[0], d[1], d[2]];
                row.extend(h.node_third().map(|j| j[i]));
                row
            })
            .collect());
    }
    let n = ((domain.1 - domain.0) / NODE_STEP).ceil() as usize;
    if n > MAX_SAMPLED_NODES {
        return Err(Error::Input(format!("domain [{}, {}] too wide to sample for export", domain.0, domain.1)));
    }
    (0..=n.max(1))
        .map(|k| {
            let t = domain.0 + (domain.1 - domain.0) * k as f64 / n.max(1) as f64;
            let j = f.jet(t)?;
            Ok(vec![t, j[0], j[1], j[2]])
        })
        .collect()
}

fn hermite_of(grid: &[Vec<f64>], name: &str) -> Result<ScalarFn> {
    let width = grid.first().map_or(0, Vec::len);
    if !(width == 4 || width == 5) || grid.iter().any(|r| r.len() != width) {
        return Err(Error::Input(format!("{name} rows must all have 4 or 5 entries")));
    }
    let xs = grid.iter().map(|r| r[0]).collect();
    let ys = grid.iter().map(|r| [r[1], r[2], r[3]]).collect();
    let mut h = QuinticHermite::new(xs, ys)?;
    if width == 5 {
        h = h.with_third(grid.iter().map(|r| r[4]).collect())?;
    }
    Ok(ScalarFn::from_hermite(h))
}

impl TransformRecord {
    pub fn from_spec(tf: &TransformSpec) -> Result<Self> {
        let kappa = match (tf.kappa.as_constant(), tf.kappa.expr_source()) {
            (Some(c), _) => format!("{c:?}"),
            (_, Some(src)) => src.to_string(),
            _ => return Err(Error::Capability("kappa has no expression form and cannot be serialized".into())),
        };
        Ok(TransformRecord {
            m0: tf.m0,
            h0: tf.h0,
            kappa,
            a_grid: grid_of(&tf.a, tf.domain)?,
            b_grid: grid_of(&tf.b, tf.domain)?,
        })
    }

    pub fn to_spec(&self) -> Result<TransformSpec> {
        let a = hermite_of(&self.a_grid, "A_grid")?;
        let b = hermite_of(&self.b_grid, "B_grid")?;
        if self.a_grid.len() != self.b_grid.len() || self.a_grid.iter().zip(&self.b_grid).any(|(a, b)| a[0] != b[0]) {
            return Err(Error::Input("A_grid and B_grid must share their T nodes".into()));
        }
        let domain = (self.a_grid[0][0], self.a_grid[self.a_grid.len() - 1][0]);
        TransformSpec::new(a, b, ScalarFn::parse(&self.kappa, "Q")?, self.m0, self.h0, domain)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("transform record: {e}")))
    }
}
