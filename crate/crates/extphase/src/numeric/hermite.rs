use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise quintic Hermite interpolant through nodes carrying value, first
/// and second derivative. The result is C² and reproduces quintics exactly.
/// With third derivatives attached ([`QuinticHermite::with_third`]) each
/// segment becomes septic and the result C³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuinticHermite {
    xs: Vec<f64>,
    ys: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    third: Option<Vec<f64>>,
    #[serde(skip)]
    uniform: Option<(f64, f64)>,
}

impl QuinticHermite {
    pub fn new(xs: Vec<f64>, ys: Vec<[f64; 3]>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::Input("hermite interpolant needs at least two matching nodes".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("hermite nodes must be strictly increasing".into()));
        }
        if ys.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite node data".into()));
        }
        let mut h = QuinticHermite { xs, ys, third: None, uniform: None };
        h.detect_uniform();
        Ok(h)
    }

    fn detect_uniform(&mut self) {
        let n = self.xs.len();
        let step = (self.xs[n - 1] - self.xs[0]) / (n - 1) as f64;
        let uniform = self
            .xs
            .iter()
            .enumerate()
            .all(|(i, x)| (x - (self.xs[0] + i as f64 * step)).abs() <= 1e-12 * (1.0 + x.abs()));
        self.uniform = if uniform { Some((self.xs[0], step)) } else { None };
    }

    /// Attach node third derivatives.
    pub fn with_third(mut self, d3: Vec<f64>) -> Result<Self> {
        if d3.len() != self.xs.len() {
            return Err(Error::Input("one third derivative per node expected".into()));
        }
        if d3.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite node data".into()));
        }
        self.third = Some(d3);
        Ok(self)
    }

    pub fn node_third(&self) -> Option<&[f64]> {
        self.third.as_deref()
    }

    /// Re-derive cached lookup data after deserialization.
    pub fn rebuilt(mut self) -> Self {
        self.detect_uniform();
        self
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn node_data(&self) -> &[[f64; 3]] {
        &self.ys
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        let guess = match self.uniform {
            Some((x0, h)) => ((x - x0) / h).floor().clamp(0.0, (n - 2) as f64) as usize,
            None => match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
                Ok(i) => i.min(n - 2),
                Err(i) => i.saturating_sub(1).min(n - 2),
            },
        };
        // uniform guess can be off by one from rounding
        let mut i = guess;
        while i > 0 && x < self.xs[i] {
            i -= 1;
        }
        while i < n - 2 && x >= self.xs[i + 1] {
            i += 1;
        }
        i
    }

    /// Value and the first three derivatives at `x`. Outside the node range the
    /// end segment polynomial is extended.
    pub fn eval_all(&self, x: f64) -> [f64; 4] {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let [f0, d0, s0] = self.ys[i];
        let [f1, d1, s1] = self.ys[i + 1];
        let (d0, d1) = (h * d0, h * d1);
        let (s0, s1) = (h * h * s0, h * h * s1);
        let (c3, c4, c5, c6, c7) = match &self.third {
            None => (
                -10.0 * f0 - 6.0 * d0 - 1.5 * s0 + 10.0 * f1 - 4.0 * d1 + 0.5 * s1,
                15.0 * f0 + 8.0 * d0 + 1.5 * s0 - 15.0 * f1 + 7.0 * d1 - s1,
                -6.0 * f0 - 3.0 * d0 - 0.5 * s0 + 6.0 * f1 - 3.0 * d1 + 0.5 * s1,
                0.0,
                0.0,
            ),
            Some(j) => {
                let h3 = h * h * h;
                let (j0, j1) = (h3 * j[i], h3 * j[i + 1]);
                let df = f1 - f0;
                (
                    j0 / 6.0,
                    35.0 * df - 20.0 * d0 - 15.0 * d1 - 5.0 * s0 + 2.5 * s1 - 2.0 * j0 / 3.0 - j1 / 6.0,
                    -84.0 * df + 45.0 * d0 + 39.0 * d1 + 10.0 * s0 - 7.0 * s1 + j0 + 0.5 * j1,
                    70.0 * df - 36.0 * d0 - 34.0 * d1 - 7.5 * s0 + 6.5 * s1 - 2.0 * j0 / 3.0 - 0.5 * j1,
                    -20.0 * df + 10.0 * d0 + 10.0 * d1 + 2.0 * s0 - 2.0 * s1 + (j0 + j1) / 6.0,
                )
            }
        };
        let (c0, c1, c2) = (f0, d0, 0.5 * s0);
        let t = (x - x0) / h;
        let p = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * (c5 + t * (c6 + t * c7))))));
        let dp = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * (5.0 * c5 + t * (6.0 * c6 + t * 7.0 * c7)))));
        let ddp = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * (20.0 * c5 + t * (30.0 * c6 + t * 42.0 * c7))));
        let dddp = 6.0 * c3 + t * (24.0 * c4 + t * (60.0 * c5 + t * (120.0 * c6 + t * 210.0 * c7)));
        [p, dp / h, ddp / (h * h), dddp / (h * h * h)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_all(x)[0]
    }
}
