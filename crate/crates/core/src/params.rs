//! Problem parameters and the three time-dependent coefficients of the
//! damped wave equation
//!
//! ```text
//! u_tt - Δu + μ₁(1+t)^{-β} u_t - μ₂(1+t)^{-(α+1)} u = |u|^p
//! ```
//!
//! with small data `u(·,0) = ε f`, `u_t(·,0) = ε g` supported in `|x| ≤ R`.
//! The damping is absorbed by the multiplier
//! `m(t) = exp(μ₁ (1+t)^{1-β} / (1-β))`, which is non-decreasing and pinned
//! between `m(0)` and `1`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Parameter validation failure. Collects *every* violated constraint so a
/// bad config is diagnosed in one pass.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid parameters: {}", violations.join("; "))]
pub struct ParamError {
    pub violations: Vec<String>,
}

/// Config-file / key-value parse failure.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("config key `{key}`: cannot parse `{value}` as a number")]
    Number { key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error(transparent)]
    Invalid(#[from] ParamError),
}

/// The full parameter tuple of the Cauchy problem.
///
/// Validity window: `p > 1`, `α < 1`, `β > 1` (scattering damping),
/// `μ₁ ≥ 0`, `μ₂ > 0`, `ε > 0`, `R ≥ 1`, `n ≥ 1`. Construction rejects
/// anything outside it; evaluations afterwards are unchecked fast paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Spatial dimension n ≥ 1.
    pub n: u32,
    /// Nonlinearity exponent p > 1.
    pub p: f64,
    /// Mass decay parameter α < 1.
    pub alpha: f64,
    /// Damping decay parameter β > 1.
    pub beta: f64,
    /// Damping amplitude μ₁ ≥ 0.
    pub mu1: f64,
    /// Mass amplitude μ₂ > 0.
    pub mu2: f64,
    /// Data amplitude ε > 0.
    pub eps: f64,
    /// Data support radius R ≥ 1.
    pub r_support: f64,
}

impl ProblemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: u32,
        p: f64,
        alpha: f64,
        beta: f64,
        mu1: f64,
        mu2: f64,
        eps: f64,
        r_support: f64,
    ) -> Result<Self, ParamError> {
        let params = ProblemParams {
            n,
            p,
            alpha,
            beta,
            mu1,
            mu2,
            eps,
            r_support,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<(), ParamError> {
        let mut violations = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                violations.push(msg);
            }
        };
        check(self.n >= 1, format!("n = {} must be >= 1", self.n));
        check(
            self.p.is_finite() && self.p > 1.0,
            format!("p = {} must be > 1", self.p),
        );
        check(
            self.alpha.is_finite() && self.alpha < 1.0,
            format!("alpha = {} must be < 1", self.alpha),
        );
        check(
            self.beta.is_finite() && self.beta > 1.0,
            format!("beta = {} must be > 1 (scattering damping)", self.beta),
        );
        check(
            self.mu1.is_finite() && self.mu1 >= 0.0,
            format!("mu1 = {} must be >= 0", self.mu1),
        );
        check(
            self.mu2.is_finite() && self.mu2 > 0.0,
            format!("mu2 = {} must be > 0", self.mu2),
        );
        check(
            self.eps.is_finite() && self.eps > 0.0,
            format!("eps = {} must be > 0", self.eps),
        );
        check(
            self.r_support.is_finite() && self.r_support >= 1.0,
            format!("R = {} must be >= 1", self.r_support),
        );
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ParamError { violations })
        }
    }

    /// Coefficient evaluator bound to these parameters.
    pub fn coefficients(&self) -> CoefficientSet {
        CoefficientSet { params: *self }
    }

    /// `q := 1 - α > 0`, the exponent that drives the comparison ODE.
    pub fn q(&self) -> f64 {
        1.0 - self.alpha
    }

    /// Build from `key = value` pairs (config file or CLI), applying
    /// `overrides` on top of `base`. All eight keys must end up present.
    pub fn from_key_values(
        base: &BTreeMap<String, f64>,
        overrides: &BTreeMap<String, f64>,
    ) -> Result<Self, ConfigError> {
        let get = |key: &str| -> Result<f64, ConfigError> {
            overrides
                .get(key)
                .or_else(|| base.get(key))
                .copied()
                .ok_or_else(|| ConfigError::Missing(key.to_string()))
        };
        let n = get("n")?;
        if n.fract() != 0.0 || n < 0.0 {
            return Err(ParamError {
                violations: vec![format!("n = {n} must be a positive integer")],
            }
            .into());
        }
        Ok(ProblemParams::new(
            n as u32,
            get("p")?,
            get("alpha")?,
            get("beta")?,
            get("mu1")?,
            get("mu2")?,
            get("eps")?,
            get("R")?,
        )?)
    }
}

impl fmt::Display for ProblemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} p={} alpha={} beta={} mu1={} mu2={} eps={} R={}",
            self.n, self.p, self.alpha, self.beta, self.mu1, self.mu2, self.eps, self.r_support
        )
    }
}

/// Parse a plain-text key-value config (`key = value`, `#` comments).
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, f64>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: idx + 1,
            text: raw.to_string(),
        })?;
        let key = key.trim().to_string();
        let value = value.trim();
        let parsed: f64 = value.parse().map_err(|_| ConfigError::Number {
            key: key.clone(),
            value: value.to_string(),
        })?;
        map.insert(key, parsed);
    }
    Ok(map)
}

/// Read and parse a config file.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, f64>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_key_values(&text)
}

/// The three time-dependent coefficients, immutable after construction and
/// safe to share across workers.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientSet {
    params: ProblemParams,
}

impl CoefficientSet {
    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Damping coefficient `b(t) = μ₁ (1+t)^{-β}`.
    pub fn damping_coeff(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.params.mu1 * (1.0 + t).powf(-self.params.beta)
    }

    /// Mass coefficient `μ₂ (1+t)^{-(α+1)}` (the paper's `m²(t)`).
    pub fn mass_coeff(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.params.mu2 * (1.0 + t).powf(-(self.params.alpha + 1.0))
    }

    /// Multiplier `m(t) = exp(μ₁ (1+t)^{1-β} / (1-β))`, non-decreasing with
    /// `m(0) ≤ m(t) ≤ 1` and `m(t) → 1`. It satisfies `m'(t) = b(t) m(t)`,
    /// so `m · (F'' + b F') = (m F')'`.
    pub fn multiplier(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let p = &self.params;
        (p.mu1 * (1.0 + t).powf(1.0 - p.beta) / (1.0 - p.beta)).exp()
    }

    /// `m(0) = exp(μ₁/(1-β))`, the lower multiplier bound; the upper is 1.
    pub fn multiplier_floor(&self) -> f64 {
        let p = &self.params;
        (p.mu1 / (1.0 - p.beta)).exp()
    }

    /// `c := m(0) μ₂`, the comparison-ODE amplitude.
    pub fn comparison_c(&self) -> f64 {
        self.multiplier_floor() * self.params.mu2
    }
}
