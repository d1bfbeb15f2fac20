use crate::core::ScalarFn;
use crate::error::{Error, Result};
use crate::numeric::root;

const GAUGE_SAMPLES: usize = 257;

#[derive(Debug, Clone)]
pub enum GaugeKind {
    /// dt̃/dτ = λ(τ).
    Multiplier(ScalarFn),
    /// t̃ = g(τ).
    TimeFunction(ScalarFn),
}

/// A choice of time parametrization on [τ₁, τ₂] mapping onto [t₁, t₂].
#[derive(Debug, Clone)]
pub struct GaugeSpec {
    pub kind: GaugeKind,
    pub tau1: f64,
    pub tau2: f64,
    pub t1: f64,
    pub t2: f64,
}

impl GaugeSpec {
    /// Multiplier gauge starting at t₁; t₂ follows from ∫λ dτ.
    pub fn multiplier(lambda: ScalarFn, tau1: f64, tau2: f64, t1: f64) -> Result<Self> {
        if !(tau2 > tau1) {
            return Err(Error::Input(format!("gauge interval [{tau1}, {tau2}] is empty")));
        }
        for k in 0..GAUGE_SAMPLES {
            let tau = tau1 + (tau2 - tau1) * k as f64 / (GAUGE_SAMPLES - 1) as f64;
            let l = lambda.eval(tau);
            if !(l > 0.0) {
                return Err(Error::Input(format!("lambda must be positive, lambda({tau}) = {l}")));
            }
        }
        let t2 = t1 + lambda.integral(tau1, tau2);
        Ok(GaugeSpec { kind: GaugeKind::Multiplier(lambda), tau1, tau2, t1, t2 })
    }

    /// Constant multiplier chosen so that [τ₁, τ₂] maps onto [t₁, t₂].
    pub fn constant(tau1: f64, tau2: f64, t1: f64, t2: f64) -> Result<Self> {
        let lambda = (t2 - t1) / (tau2 - tau1);
        Self::multiplier(ScalarFn::constant(lambda), tau1, tau2, t1)
    }

    /// Time-function gauge t̃ = g(τ); g must be strictly increasing.
    pub fn time_function(g: ScalarFn, tau1: f64, tau2: f64) -> Result<Self> {
        if !(tau2 > tau1) {
            return Err(Error::Input(format!("gauge interval [{tau1}, {tau2}] is empty")));
        }
        let mut prev = g.eval(tau1);
        for k in 1..GAUGE_SAMPLES {
            let tau = tau1 + (tau2 - tau1) * k as f64 / (GAUGE_SAMPLES - 1) as f64;
            let v = g.eval(tau);
            if !(v > prev) {
                return Err(Error::Input(format!("gauge function must be strictly increasing (fails near tau = {tau})")));
            }
            prev = v;
        }
        let (t1, t2) = (g.eval(tau1), g.eval(tau2));
        Ok(GaugeSpec { kind: GaugeKind::TimeFunction(g), tau1, tau2, t1, t2 })
    }

    /// The linear gauge g(τ) = t₁ + (t₂ − t₁)(τ − τ₁)/(τ₂ − τ₁).
    pub fn linear(tau1: f64, tau2: f64, t1: f64, t2: f64) -> Result<Self> {
        let slope = (t2 - t1) / (tau2 - tau1);
        let g = ScalarFn::analytic(move |tau| t1 + slope * (tau - tau1), move |_| slope, |_| 0.0);
        Self::time_function(g, tau1, tau2)
    }

    /// λ(τ) = dt̃/dτ.
    pub fn lambda(&self, tau: f64) -> Result<f64> {
        match &self.kind {
            GaugeKind::Multiplier(l) => Ok(l.eval(tau)),
            GaugeKind::TimeFunction(g) => g.d1(tau),
        }
    }

    /// t̃(τ).
    pub fn time_at(&self, tau: f64) -> f64 {
        match &self.kind {
            GaugeKind::Multiplier(l) => self.t1 + l.integral(self.tau1, tau),
            GaugeKind::TimeFunction(g) => g.eval(tau),
        }
    }

    /// τ with t̃(τ) = t.
    pub fn tau_at(&self, t: f64) -> Result<f64> {
        if let GaugeKind::Multiplier(l) = &self.kind {
            if let Some(c) = l.as_constant() {
                return Ok(self.tau1 + (t - self.t1) / c);
            }
        }
        root::invert_increasing(&|tau| self.time_at(tau), t, self.tau1, self.tau2, 1e-14)
    }
}
