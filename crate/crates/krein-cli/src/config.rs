use crate::spec::parse_weight;
use krein::harmonic::LambdaGrid;
use krein::weights::{make_weight, Weight};
use krein::{KreinError, Result};
use serde::{Deserialize, Serialize};

/// Everything an experiment reads. Serialized verbatim into its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub weight: String,
    pub lambda: f64,
    pub n: usize,
    pub dr: f64,
    pub r_max: f64,
    /// Stride over r-grid nodes when taking sups over r.
    pub r_every: usize,
    pub p: f64,
    pub p_tilde: f64,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub k: usize,
    pub deltas: Vec<f64>,
    pub taus: Vec<f64>,
    pub p_list: Vec<f64>,
    pub r_checkpoints: Vec<f64>,
    pub n_list: Vec<f64>,
    pub tolerance: f64,
    pub out_dir: Option<String>,
    pub seed: u64,
    pub convergence: bool,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            weight: "const:c=1".into(),
            lambda: 128.0,
            n: 4096,
            dr: 0.05,
            r_max: 20.0,
            r_every: 1,
            p: 2.0,
            p_tilde: 2.0,
            p1: 1.0,
            p2: 2.0,
            q: 0.0,
            k: 0,
            deltas: vec![1e-3, 10f64.powf(-2.5), 1e-2, 10f64.powf(-1.5), 1e-1],
            taus: Vec::new(),
            p_list: Vec::new(),
            r_checkpoints: Vec::new(),
            n_list: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            tolerance: 1e-10,
            out_dir: None,
            seed: 0,
            convergence: false,
        }
    }
}

impl ExperimentConfig {
    /// Checks grids and exponents before anything is computed.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KreinError::BadParameter(m));
        if !(self.dr > 0.0) || !(self.r_max > 0.0) {
            return bad(format!("dr = {} and R = {} must be positive", self.dr, self.r_max));
        }
        if self.dr > self.r_max {
            return bad(format!("dr = {} exceeds R = {}", self.dr, self.r_max));
        }
        if self.r_every == 0 {
            return bad("r_every must be at least 1".into());
        }
        let lg = LambdaGrid::new(self.lambda, self.n)?;
        if self.r_max >= lg.nyquist() {
            return Err(KreinError::NyquistViolation { r: self.r_max, limit: lg.nyquist() });
        }
        for (name, v) in [("p", self.p), ("p_tilde", self.p_tilde), ("p1", self.p1), ("p2", self.p2)] {
            if !(v >= 1.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be at least 1"));
            }
        }
        if !(self.q >= 0.0) {
            return bad(format!("q = {} must be nonnegative", self.q));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return bad("non-finite entry in the delta list".into());
        }
        parse_weight(&self.weight)?;
        Ok(())
    }

    pub fn weight(&self) -> Result<Weight> {
        make_weight(parse_weight(&self.weight)?)
    }

    /// The same experiment at `(dr/2, 2 Lambda)` with the lambda step kept.
    pub fn refined(&self) -> ExperimentConfig {
        ExperimentConfig { dr: self.dr / 2.0, lambda: 2.0 * self.lambda, n: 2 * self.n, r_every: 2 * self.r_every, ..self.clone() }
    }
}
