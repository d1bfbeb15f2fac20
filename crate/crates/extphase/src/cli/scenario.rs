use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::core::{HamiltonianSpec, ReducedState, ScalarFn, ScalarFn2};
use crate::dynamics::{GaugeSpec, DEFAULT_CONSTRAINT_TOL, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::propagator::GridSpec;
use crate::transform::CoefficientInit;

pub const AUX_TOL: f64 = 1e-11;

fn one() -> f64 {
    1.0
}

fn default_mass() -> String {
    "1".into()
}

fn default_kappa() -> String {
    "0".into()
}

fn default_name() -> String {
    "scenario".into()
}

fn default_gauge() -> String {
    "1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    /// m(t)
    #[serde(default = "default_mass")]
    pub mass: String,
    /// V(q, t)
    pub potential: String,
    #[serde(default)]
    pub quadratic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default = "one")]
    pub m0: f64,
    /// Defaults to m₀/2.
    #[serde(default)]
    pub h0: Option<f64>,
    /// κ(Q)
    #[serde(default = "default_kappa")]
    pub kappa: String,
    #[serde(rename = "A0", default = "one")]
    pub a0: f64,
    #[serde(rename = "Adot0", default)]
    pub adot0: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { m0: 1.0, h0: None, kappa: default_kappa(), a0: 1.0, adot0: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmakovConfig {
    pub rho0: f64,
    pub rhodot0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    pub n_slices: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { q_min: -0.6, q_max: 0.6, n_points: 256, n_slices: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Spans {
    /// Trajectory interval in the original time.
    pub t_i: f64,
    pub t_f: f64,
    /// Length in the new time T of kernel and wavefunction runs, starting at B⁻¹(t_i).
    #[serde(default = "one")]
    pub kernel: f64,
}

impl Default for Spans {
    fn default() -> Self {
        Spans { t_i: 0.0, t_f: 50.0, kernel: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub q: f64,
    pub p: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { q: 1.0, p: 0.0 }
    }
}

/// Gaussian packet and grid for the wavefunction runs, in the variable Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavefunctionConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    pub center: f64,
    pub sigma: f64,
    pub p0: f64,
    pub steps: usize,
}

impl Default for WavefunctionConfig {
    fn default() -> Self {
        WavefunctionConfig { q_min: -8.0, q_max: 8.0, n_points: 256, center: 1.0, sigma: 0.7, p0: 0.0, steps: 1000 }
    }
}

/// A run configuration. Only `hamiltonian.potential` is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "one")]
    pub hbar: f64,
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    /// Missing means the adiabatic seed at t_i.
    #[serde(default)]
    pub ermakov: Option<ErmakovConfig>,
    /// Lagrange multiplier λ(τ) of the extended runs.
    #[serde(default = "default_gauge")]
    pub gauge: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub spans: Spans,
    /// Recognised keys: `ode` (trajectories, default 1e-9), `constraint`
    /// (default 1e-8) and `aux` (coefficient and auxiliary solves, default 1e-11).
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub wavefunction: WavefunctionConfig,
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { line, col, msg } => Error::Parse { line, col, msg: format!("{name}: {msg}") },
        other => other,
    })
}

impl Scenario {
    /// Parses and validates JSON text; JSON errors carry line and column.
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut sc: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), col: e.column(), msg: format!("scenario: {e}") })?;
        for (key, v) in [("ode", DEFAULT_TOL), ("constraint", DEFAULT_CONSTRAINT_TOL), ("aux", AUX_TOL)] {
            sc.tolerances.entry(key.to_string()).or_insert(v);
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Compiles every expression and checks the scalar settings.
    pub fn validate(&self) -> Result<()> {
        self.hamiltonian()?;
        self.kappa()?;
        self.lambda()?;
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Input(format!("hbar must be positive, got {}", self.hbar)));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Input(format!("tolerance '{k}' must be positive, got {v}")));
        }
        if !(self.spans.t_f > self.spans.t_i) {
            return Err(Error::Input(format!("empty time span [{}, {}]", self.spans.t_i, self.spans.t_f)));
        }
        if !(self.spans.kernel > 0.0) {
            return Err(Error::Input(format!("kernel span must be positive, got {}", self.spans.kernel)));
        }
        if !(self.transform.m0 > 0.0) {
            return Err(Error::Input(format!("m0 must be positive, got {}", self.transform.m0)));
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec> {
        let mass = field("hamiltonian.mass", ScalarFn::parse(&self.hamiltonian.mass, "t"))?;
        let potential = field("hamiltonian.potential", ScalarFn2::parse(&self.hamiltonian.potential, "q", "t"))?;
        Ok(HamiltonianSpec::new(mass, potential, self.hamiltonian.quadratic))
    }

    pub fn kappa(&self) -> Result<ScalarFn> {
        field("transform.kappa", ScalarFn::parse(&self.transform.kappa, "Q"))
    }

    pub fn lambda(&self) -> Result<ScalarFn> {
        field("gauge", ScalarFn::parse(&self.gauge, "tau"))
    }

    pub fn tol(&self) -> f64 {
        self.tolerances.get("ode").copied().unwrap_or(DEFAULT_TOL)
    }

    pub fn aux_tol(&self) -> f64 {
        self.tolerances.get("aux").copied().unwrap_or(AUX_TOL)
    }

    pub fn constraint_tol(&self) -> f64 {
        self.tolerances.get("constraint").copied().unwrap_or(DEFAULT_CONSTRAINT_TOL)
    }

    pub fn h0(&self) -> f64 {
        self.transform.h0.unwrap_or(0.5 * self.transform.m0)
    }

    pub fn coefficient_init(&self) -> CoefficientInit {
        CoefficientInit {
            m0: self.transform.m0,
            h0: self.h0(),
            t0: 0.0,
            a0: self.transform.a0,
            adot0: self.transform.adot0,
            b0: self.spans.t_i,
        }
    }

    pub fn initial_state(&self) -> ReducedState {
        ReducedState::new(self.initial.q, self.initial.p, self.spans.t_i)
    }

    /// Kernel grid; validation (at least 16 points) happens here.
    pub fn grid(&self) -> Result<GridSpec> {
        let g = self.grid;
        GridSpec::new(g.q_min, g.q_max, g.n_points, g.n_slices, self.hbar)
    }

    pub fn wave_grid(&self) -> Result<GridSpec> {
        let w = self.wavefunction;
        GridSpec::new(w.q_min, w.q_max, w.n_points, 1, self.hbar)
    }

    /// Multiplier gauge λ(τ) starting at τ = 0, t̃ = t_start, run until `t_end` is reached.
    pub fn gauge_until(&self, t_start: f64, t_end: f64) -> Result<GaugeSpec> {
        let lambda = self.lambda()?;
        let mut tau_end = 1.0;
        for _ in 0..200 {
            if t_start + lambda.integral(0.0, tau_end) >= t_end {
                break;
            }
            tau_end *= 1.5;
        }
        let probe = GaugeSpec::multiplier(lambda.clone(), 0.0, tau_end, t_start)?;
        let tau = probe.tau_at(t_end)?;
        GaugeSpec::multiplier(lambda, 0.0, tau, t_start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn td_oscillator_scenario() {
        let sc = Scenario::parse(
            r#"{"name": "td", "hamiltonian": {"potential": "0.5*(1+0.5*sin(0.3*t))*q^2", "quadratic": true}}"#,
        )
        .unwrap();
        let h = sc.hamiltonian().unwrap();
        assert!((h.stiffness(1.0).unwrap() - (1.0 + 0.5 * 0.3f64.sin())).abs() < 1e-14);
    }

    #[test]
    fn doubled_operator_is_a_parse_error() {
        let err = Scenario::parse(r#"{"name": "bad", "hamiltonian": {"potential": "q^^2"}}"#).unwrap_err();
        match err {
            Error::Parse { line, col, msg } => {
                assert_eq!((line, col), (1, 3), "{msg}");
                assert!(msg.starts_with("hamiltonian.potential"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn malformed_json_has_position() {
        let err = Scenario::parse("{\n  \"name\": \"x\",\n  \"hamiltonian\": {\"potential\": 0.5\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn minimal_scenario_defaults() {
        let sc = Scenario::parse(r#"{"name": "free", "hamiltonian": {"potential": "0", "quadratic": true}}"#).unwrap();
        assert_eq!(sc.hbar, 1.0);
        assert_eq!(sc.tol(), 1e-9);
        assert_eq!(sc.kappa().unwrap().as_constant(), Some(0.0));
        assert_eq!(sc.h0(), 0.5);
        assert_eq!(sc.grid().unwrap().n_points, 256);
    }

    #[test]
    fn rejects_bad_values() {
        let unknown = Scenario::parse(r#"{"name": "x", "hamiltonian": {"potential": "Q^2"}}"#).unwrap_err();
        assert!(unknown.to_string().contains("unknown identifier"));
        let arity = Scenario::parse(r#"{"name": "x", "hamiltonian": {"potential": "sin(q, t)"}}"#).unwrap_err();
        assert!(arity.to_string().contains("arity") || arity.to_string().contains("','"));
        let tol = Scenario::parse(r#"{"name": "x", "hamiltonian": {"potential": "0"}, "tolerances": {"ode": -1}}"#);
        assert!(tol.is_err());
        let extra = Scenario::parse(r#"{"name": "x", "hamiltonian": {"potential": "0"}, "colour": 1}"#);
        assert!(extra.is_err());
    }

    #[test]
    fn small_grid_fails_late() {
        let sc = Scenario::parse(
            r#"{"name": "x", "hamiltonian": {"potential": "0"}, "grid": {"q_min": -1, "q_max": 1, "n_points": 8, "n_slices": 4}}"#,
        )
        .unwrap();
        assert!(sc.grid().is_err());
    }

    #[test]
    fn gauge_reaches_end() {
        let sc = Scenario::parse(r#"{"name": "x", "hamiltonian": {"potential": "0"}, "gauge": "1+tau^2"}"#).unwrap();
        let g = sc.gauge_until(0.0, 50.0).unwrap();
        assert!((g.t2 - 50.0).abs() < 1e-9);
    }
}
