use std::collections::BTreeMap;
use std::io::Write;

use crate::core::{ExtendedState, ReducedState};
use crate::error::{Error, Result};

/// Which canonical chart extended states are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variables {
    /// (q̃, t̃, p, p_t̃)
    Original,
    /// (Q, T, P, P_T) of a transformation
    Transformed,
}

#[derive(Debug, Clone)]
pub enum TrajectoryStates {
    Reduced(Vec<ReducedState>),
    Extended(Vec<ExtendedState>),
}

/// Time-ordered samples with per-sample diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub param: Vec<f64>,
    pub states: TrajectoryStates,
    pub variables: Variables,
    pub diagnostics: BTreeMap<String, Vec<f64>>,
}

impl Trajectory {
    pub fn new(
        param: Vec<f64>,
        states: TrajectoryStates,
        variables: Variables,
        diagnostics: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self> {
        let n = match &states {
            TrajectoryStates::Reduced(s) => s.len(),
            TrajectoryStates::Extended(s) => s.len(),
        };
        if n != param.len() || diagnostics.values().any(|d| d.len() != n) {
            return Err(Error::Input("trajectory columns have mismatched lengths".into()));
        }
        if param.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("trajectory parameter samples must be strictly increasing".into()));
        }
        Ok(Trajectory { param, states, variables, diagnostics })
    }

    pub fn len(&self) -> usize {
        self.param.len()
    }

    pub fn is_empty(&self) -> bool {
        self.param.is_empty()
    }

    pub fn reduced(&self) -> Option<&[ReducedState]> {
        match &self.states {
            TrajectoryStates::Reduced(s) => Some(s),
            _ => None,
        }
    }

    pub fn extended(&self) -> Option<&[ExtendedState]> {
        match &self.states {
            TrajectoryStates::Extended(s) => Some(s),
            _ => None,
        }
    }

    /// Final state of a reduced trajectory. Panics for extended trajectories.
    pub fn last_reduced(&self) -> ReducedState {
        *self.reduced().and_then(|s| s.last()).expect("non-empty reduced trajectory")
    }

    /// Final state of an extended trajectory. Panics for reduced trajectories.
    pub fn last_extended(&self) -> ExtendedState {
        *self.extended().and_then(|s| s.last()).expect("non-empty extended trajectory")
    }

    /// Project to (q, p, t) samples; for extended trajectories t is t̃.
    pub fn projected(&self) -> Vec<ReducedState> {
        match &self.states {
            TrajectoryStates::Reduced(s) => s.clone(),
            TrajectoryStates::Extended(s) => s.iter().map(|e| e.reduced()).collect(),
        }
    }

    /// CSV with header `param,q,p,t[,p_t,phi,H,I]`; optional columns appear
    /// when available. Values use 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let optional = ["phi", "H", "I"];
        let present: Vec<&str> = optional.iter().copied().filter(|k| self.diagnostics.contains_key(*k)).collect();
        let mut header = String::from("param,q,p,t");
        if self.extended().is_some() {
            header.push_str(",p_t");
        }
        for k in &present {
            header.push(',');
            header.push_str(k);
        }
        writeln!(w, "{header}")?;
        for i in 0..self.len() {
            let mut row = vec![self.param[i]];
            match &self.states {
                TrajectoryStates::Reduced(s) => row.extend([s[i].q, s[i].p, s[i].t]),
                TrajectoryStates::Extended(s) => row.extend([s[i].q, s[i].p, s[i].t, s[i].p_t]),
            }
            for k in &present {
                row.push(self.diagnostics[*k][i]);
            }
            let line: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Format with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
