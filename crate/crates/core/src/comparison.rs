//! The comparison machinery under the mean functional `F₀(t) = ∫ u dx`:
//!
//! * the Hölder weight `B(t) = m(0) C₁ (1+t)^{-n(p-1)}` that turns the
//!   nonlinear term into a power of `F₀`;
//! * the auxiliary solution `J` of `J'' = c (1+t)^{q-2} J` with halved data,
//!   expressed through modified Bessel functions of order `1/q`
//!   (`c = m(0)μ₂`, `q = 1-α`);
//! * the exponential-of-power lower envelope `A(t)` extracted from the
//!   Bessel asymptotics, with calibrated constants `(C₂, T₁, T₂)`;
//! * the sharp scalar ODE `{mF'}' = m μ₂ (1+t)^{-(α+1)} F + B |F|^p` that any
//!   admissible `F₀` must dominate.
//!
//! The Bessel coefficients `(c₊, c₋)` come from the 2×2 linear system at the
//! anchor `t₀` rather than from transcribing the displayed closed forms; the
//! closed forms are kept as a cross-check. The system's Wronskian is the
//! constant `-q/2`, which doubles as a sanity check on the Bessel layer.

use crate::ivp::{self, OdeOptions, OdeOutcome};
use crate::kato::BlowUpBracket;
use crate::params::ProblemParams;
use crate::specfun::{self, SpecFunError};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum ComparisonError {
    #[error("degenerate data: J0 = J1 = 0")]
    DegenerateData,
    #[error("no anchor t0 <= {limit} gives c_plus > 0 (parameter pathology)")]
    SearchExhausted { limit: f64 },
    #[error("singular Bessel system at t0 = {t0} (wronskian {wronskian:e}, expected {expected:e})")]
    SingularSystem {
        t0: f64,
        wronskian: f64,
        expected: f64,
    },
    #[error("envelope calibration failed: {0}")]
    Calibration(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// L¹ norms of the data profiles `f`, `g` (without the ε factor).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DataNorms {
    pub f_l1: f64,
    pub g_l1: f64,
}

/// Volume of the unit ball in n dimensions, `2 π^{n/2} / (n Γ(n/2))`.
pub fn unit_ball_volume(n: u32) -> f64 {
    let n_f = n as f64;
    2.0 * PI.powf(n_f / 2.0) / (n_f * specfun::gamma_fn(n_f / 2.0).expect("n/2 > 0"))
}

/// The Hölder constant `C₁ = (vol_n(1) Rⁿ)^{-(p-1)}`.
pub fn holder_c1(params: &ProblemParams) -> f64 {
    (unit_ball_volume(params.n) * params.r_support.powi(params.n as i32)).powf(-(params.p - 1.0))
}

/// `B(t) = m(0) C₁ (1+t)^{-n(p-1)}`, positive and decreasing.
pub fn holder_b(params: &ProblemParams, t: f64) -> f64 {
    let m0 = params.coefficients().multiplier_floor();
    m0 * holder_c1(params) * (1.0 + t).powf(-(params.n as f64) * (params.p - 1.0))
}

/// Calibrated envelope constants.
///
/// `A(t) = ε C₂ (1+t)^{(1+α)/4} exp(κ (1+t)^{(1-α)/2})` is a valid lower
/// bound for `J` (hence for `F₀`) from `T₁` on; `h` built from `(A, B)` is
/// non-decreasing from `T₂` on.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeConstants {
    pub c1: f64,
    pub c2: f64,
    pub t1: f64,
    pub t2: f64,
}

impl EnvelopeConstants {
    /// Onset time for the blow-up certificate: both the envelope and the
    /// monotonicity of `h` must hold.
    pub fn t0_tilde(&self) -> f64 {
        self.t1.max(self.t2)
    }
}

/// The sign bracket of `h'(t)` (up to the positive factor `h/(1+t)`):
/// `-n(p-1)/2 + ((p-1)/2 - δ)[(1+α)/4 + sqrt(m(0)μ₂) (1+t)^{(1-α)/2}]`.
pub fn h_prime_bracket(params: &ProblemParams, delta: f64, t: f64) -> f64 {
    let n = params.n as f64;
    let s = (params.p - 1.0) / 2.0 - delta;
    let root_c = params.coefficients().comparison_c().sqrt();
    -n * (params.p - 1.0) / 2.0
        + s * ((1.0 + params.alpha) / 4.0 + root_c * (1.0 + t).powf(params.q() / 2.0))
}

/// The auxiliary comparison solution `J(t) = ε (c₊ J₊(t) + c₋ J₋(t))` with
/// `J(t₀) = ε J₀`, `J'(t₀) = ε J₁`, `J₀ = ‖f‖₁/2`, `J₁ = m(0)‖g‖₁/2`.
#[derive(Debug, Clone)]
pub struct ComparisonSetup {
    params: ProblemParams,
    /// c = m(0) μ₂
    pub c: f64,
    /// q = 1 - α
    pub q: f64,
    /// J₀ = ‖f‖₁ / 2
    pub j0: f64,
    /// J₁ = m(0) ‖g‖₁ / 2
    pub j1: f64,
    pub t0: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

const T0_SEARCH_LIMIT: f64 = 1e4;
const T0_GRID_STEP: f64 = 0.5;

impl ComparisonSetup {
    /// Build with the anchor chosen by [`ComparisonSetup::choose_t0`].
    pub fn new(params: &ProblemParams, data: &DataNorms) -> Result<Self, ComparisonError> {
        let t0 = Self::choose_t0(params, data)?;
        Self::with_t0(params, data, t0)
    }

    /// Build at an explicit anchor `t0 > 0`.
    pub fn with_t0(
        params: &ProblemParams,
        data: &DataNorms,
        t0: f64,
    ) -> Result<Self, ComparisonError> {
        if !(t0 > 0.0) {
            return Err(ComparisonError::Domain(format!("t0 = {t0} must be > 0")));
        }
        let (j0, j1) = halved_data(params, data)?;
        let (c_plus, c_minus) = Self::solve_c_coeffs(params, data, t0)?;
        Ok(ComparisonSetup {
            params: *params,
            c: params.coefficients().comparison_c(),
            q: params.q(),
            j0,
            j1,
            t0,
            c_plus,
            c_minus,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Smallest `t0` on the grid `{0.5 k}` whose coefficients give
    /// `c₊ > 0`. Independent of ε by construction.
    pub fn choose_t0(params: &ProblemParams, data: &DataNorms) -> Result<f64, ComparisonError> {
        halved_data(params, data)?;
        let mut k = 1u64;
        loop {
            let t0 = T0_GRID_STEP * k as f64;
            if t0 > T0_SEARCH_LIMIT {
                return Err(ComparisonError::SearchExhausted {
                    limit: T0_SEARCH_LIMIT,
                });
            }
            if closed_form_c_plus_positive(params, data, t0)? {
                return Ok(t0);
            }
            k += 1;
        }
    }

    /// Solve the 2×2 system `c₊ J₊(t0) + c₋ J₋(t0) = J₀`,
    /// `c₊ J₊'(t0) + c₋ J₋'(t0) = J₁` (the ε factor is applied at
    /// evaluation time, so the coefficients are ε-free).
    pub fn solve_c_coeffs(
        params: &ProblemParams,
        data: &DataNorms,
        t0: f64,
    ) -> Result<(f64, f64), ComparisonError> {
        let (j0, j1) = halved_data(params, data)?;
        let basis = BesselBasis::new(params);
        let (jp, jm) = (basis.j_plus(t0)?, basis.j_minus(t0)?);
        let (djp, djm) = (basis.j_plus_deriv(t0)?, basis.j_minus_deriv(t0)?);
        let det = jp * djm - jm * djp;
        let expected = -params.q() / 2.0;
        if !det.is_finite() || (det - expected).abs() > 1e-6 * expected.abs() {
            return Err(ComparisonError::SingularSystem {
                t0,
                wronskian: det,
                expected,
            });
        }
        let c_plus = (j0 * djm - j1 * jm) / det;
        let c_minus = (j1 * jp - j0 * djp) / det;
        Ok((c_plus, c_minus))
    }

    /// The paper's displayed closed forms for `c±`, used as a transcription
    /// cross-check of the linear solve.
    pub fn closed_form_c_coeffs(
        params: &ProblemParams,
        data: &DataNorms,
        t0: f64,
    ) -> Result<(f64, f64), ComparisonError> {
        let (j0, j1) = halved_data(params, data)?;
        let q = params.q();
        let c = params.coefficients().comparison_c();
        let nu = 1.0 / q;
        let tau = 1.0 + t0;
        let z0 = 2.0 * c.sqrt() / q * tau.powf(q / 2.0);
        let (i_nu, k_nu) = specfun::bessel_ik(nu, z0)?;
        let (i_nu1, k_nu1) = specfun::bessel_ik(nu + 1.0, z0)?;
        let lead = (2.0 / q) * tau.powf(-0.5) * (tau * j1 - j0);
        let tail = 2.0 * c.sqrt() / q * tau.powf((q - 1.0) / 2.0) * j0;
        Ok((lead * k_nu + tail * k_nu1, -lead * i_nu + tail * i_nu1))
    }

    /// `J(t)` for `t ≥ t0`.
    pub fn j_eval(&self, t: f64) -> Result<f64, ComparisonError> {
        self.check_t(t)?;
        let basis = BesselBasis::new(&self.params);
        Ok(self.params.eps * (self.c_plus * basis.j_plus(t)? + self.c_minus * basis.j_minus(t)?))
    }

    /// `ln J(t)`; valid on the time range where `c₊ J₊` dominates, which the
    /// construction guarantees for `t ≥ t0` whenever `c₋ ≥ 0` and otherwise
    /// for every `t` with positive `J`.
    pub fn j_eval_ln(&self, t: f64) -> Result<f64, ComparisonError> {
        self.check_t(t)?;
        if self.c_plus <= 0.0 {
            return Err(ComparisonError::Domain(format!(
                "log-scaled J needs c_plus > 0, got {}",
                self.c_plus
            )));
        }
        let basis = BesselBasis::new(&self.params);
        let ln_plus = self.c_plus.ln() + basis.j_plus_ln(t)?;
        let rest = if self.c_minus == 0.0 {
            0.0
        } else {
            let ln_minus = self.c_minus.abs().ln() + basis.j_minus_ln(t)?;
            self.c_minus.signum() * (ln_minus - ln_plus).exp()
        };
        if rest <= -1.0 {
            return Err(ComparisonError::Domain(format!("J(t) <= 0 at t = {t}")));
        }
        Ok(self.params.eps.ln() + ln_plus + rest.ln_1p())
    }

    /// `J'(t)` from the analytic Bessel derivative identities.
    pub fn j_derivative(&self, t: f64) -> Result<f64, ComparisonError> {
        self.check_t(t)?;
        let basis = BesselBasis::new(&self.params);
        Ok(self.params.eps
            * (self.c_plus * basis.j_plus_deriv(t)? + self.c_minus * basis.j_minus_deriv(t)?))
    }

    fn check_t(&self, t: f64) -> Result<(), ComparisonError> {
        if t < self.t0 - 1e-12 {
            return Err(ComparisonError::Domain(format!(
                "t = {t} below anchor t0 = {}",
                self.t0
            )));
        }
        Ok(())
    }

    /// Envelope shape `(1+t)^{(1+α)/4} exp(κ (1+t)^{q/2})` with
    /// `κ = 2 sqrt(m(0)μ₂)/(1-α)`, in log form.
    pub fn shape_ln(&self, t: f64) -> f64 {
        let tau = 1.0 + t;
        let kappa = 2.0 * self.c.sqrt() / self.q;
        (1.0 + self.params.alpha) / 4.0 * tau.ln() + kappa * tau.powf(self.q / 2.0)
    }

    /// `A(t) = ε C₂ · shape(t)` for `t ≥ T₁` (regime error below).
    pub fn envelope_a(&self, consts: &EnvelopeConstants, t: f64) -> Result<f64, ComparisonError> {
        self.check_envelope_t(consts, t)?;
        let tau = 1.0 + t;
        let kappa = 2.0 * self.c.sqrt() / self.q;
        Ok(self.params.eps
            * consts.c2
            * tau.powf((1.0 + self.params.alpha) / 4.0)
            * (kappa * tau.powf(self.q / 2.0)).exp())
    }

    /// `ln A(t)`, assembled purely in log space.
    pub fn envelope_a_ln(
        &self,
        consts: &EnvelopeConstants,
        t: f64,
    ) -> Result<f64, ComparisonError> {
        self.check_envelope_t(consts, t)?;
        Ok(self.params.eps.ln() + consts.c2.ln() + self.shape_ln(t))
    }

    fn check_envelope_t(&self, consts: &EnvelopeConstants, t: f64) -> Result<(), ComparisonError> {
        if t < consts.t1 - 1e-12 {
            return Err(ComparisonError::Domain(format!(
                "t = {t} below envelope onset T1 = {}",
                consts.t1
            )));
        }
        Ok(())
    }

    /// Calibrate `(C₁, C₂, T₁, T₂)` for the Kato step at exponent gap `δ`.
    ///
    /// `T₁` is the first grid time where the one-term asymptotic of `J₊`
    /// agrees with the exact value within 10% and the `c₋ J₋` part is at most
    /// 1% of `c₊ J₊`; `C₂` is 0.9 times the minimum of `J/(ε·shape)` over
    /// `[T₁, 20 T₁]`; `T₂` is the explicit root of the `h'` bracket, clamped
    /// at 0. The constants only need to produce a valid lower bound; the
    /// invariant tests check exactly that.
    pub fn calibrate_envelope(&self, delta: f64) -> Result<EnvelopeConstants, ComparisonError> {
        if !(delta > 0.0 && delta < (self.params.p - 1.0) / 2.0) {
            return Err(ComparisonError::Domain(format!(
                "delta = {delta} outside (0, (p-1)/2)"
            )));
        }
        if self.c_plus <= 0.0 {
            return Err(ComparisonError::Calibration(format!(
                "c_plus = {} not positive",
                self.c_plus
            )));
        }
        let basis = BesselBasis::new(&self.params);
        let nu = 1.0 / self.q;

        // T1: grid search on {0.5 k} from the anchor up
        let mut k = (self.t0 / T0_GRID_STEP).ceil() as u64;
        let t1 = loop {
            let t = T0_GRID_STEP * k as f64;
            if t > 1e6 {
                return Err(ComparisonError::Calibration(
                    "no T1 <= 1e6 reaches the asymptotic regime".into(),
                ));
            }
            if self.t1_conditions_hold(&basis, nu, t)? {
                break t;
            }
            k += 1;
        };

        // C2 = 0.9 min over [T1, 20 T1] of J/(ε shape)
        let samples = 400;
        let mut min_ratio = f64::INFINITY;
        for i in 0..=samples {
            let t = t1 + (20.0 * t1 - t1) * i as f64 / samples as f64;
            let ln_ratio = self.j_eval_ln(t)? - self.params.eps.ln() - self.shape_ln(t);
            min_ratio = min_ratio.min(ln_ratio.exp());
        }
        if !(min_ratio > 1e-280) {
            return Err(ComparisonError::Calibration(format!(
                "J/(eps*shape) minimum {min_ratio:e} not bounded away from zero"
            )));
        }
        let c2 = 0.9 * min_ratio;

        // T2: explicit root of the h' bracket, clamped at 0
        let s = (self.params.p - 1.0) / 2.0 - delta;
        let n = self.params.n as f64;
        let rhs = n * (self.params.p - 1.0) / (2.0 * s) - (1.0 + self.params.alpha) / 4.0;
        let root_c = self.c.sqrt();
        let t2 = if rhs <= root_c {
            0.0
        } else {
            (rhs / root_c).powf(2.0 / self.q) - 1.0
        };

        Ok(EnvelopeConstants {
            c1: holder_c1(&self.params),
            c2,
            t1,
            t2,
        })
    }

    fn t1_conditions_hold(
        &self,
        basis: &BesselBasis,
        nu: f64,
        t: f64,
    ) -> Result<bool, ComparisonError> {
        let z = basis.z(t);
        let asym_ln = match specfun::bessel_asym_leading_ln(specfun::BesselKind::First, nu, z) {
            Ok(v) => v,
            Err(SpecFunError::Regime { .. }) => return Ok(false),
            Err(e) => return Err(e.into()),
        };
        let exact_ln = specfun::bessel_i_ln(nu, z)?;
        if ((asym_ln - exact_ln).exp() - 1.0).abs() > 0.10 {
            return Ok(false);
        }
        if self.c_minus != 0.0 {
            let contamination = (self.c_minus.abs().ln() + basis.j_minus_ln(t)?
                - self.c_plus.ln()
                - basis.j_plus_ln(t)?)
            .exp();
            if contamination > 0.01 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn halved_data(params: &ProblemParams, data: &DataNorms) -> Result<(f64, f64), ComparisonError> {
    if data.f_l1 < 0.0 || data.g_l1 < 0.0 {
        return Err(ComparisonError::Domain(
            "data norms must be non-negative".into(),
        ));
    }
    if data.f_l1 == 0.0 && data.g_l1 == 0.0 {
        return Err(ComparisonError::DegenerateData);
    }
    let m0 = params.coefficients().multiplier_floor();
    Ok((data.f_l1 / 2.0, m0 * data.g_l1 / 2.0))
}

/// Sign test for the closed-form c₊ in log space, immune to overflow for
/// large anchors.
fn closed_form_c_plus_positive(
    params: &ProblemParams,
    data: &DataNorms,
    t0: f64,
) -> Result<bool, ComparisonError> {
    let (j0, j1) = halved_data(params, data)?;
    let q = params.q();
    let c = params.coefficients().comparison_c();
    let nu = 1.0 / q;
    let tau = 1.0 + t0;
    let z0 = 2.0 * c.sqrt() / q * tau.powf(q / 2.0);
    let lead = (2.0 / q) * tau.powf(-0.5) * (tau * j1 - j0);
    let tail = 2.0 * c.sqrt() / q * tau.powf((q - 1.0) / 2.0) * j0;
    if lead >= 0.0 && tail >= 0.0 {
        return Ok(lead > 0.0 || tail > 0.0);
    }
    let ln_k = specfun::bessel_k_ln(nu, z0)?;
    let ln_k1 = specfun::bessel_k_ln(nu + 1.0, z0)?;
    // c₊ = lead·K_ν + tail·K_{ν+1} with tail ≥ 0 > lead here
    Ok(tail.ln() + ln_k1 > (-lead).ln() + ln_k)
}

/// The Bessel representation `J±(t) = (1+t)^{1/2} B±_{1/q}(z(t))`,
/// `z(t) = (2 sqrt(c)/q)(1+t)^{q/2}`, with derivatives
/// `J±' = (1+t)^{-1/2} B±_ν(z) ± sqrt(c) (1+t)^{(q-1)/2} B±_{ν+1}(z)`.
struct BesselBasis {
    c: f64,
    q: f64,
    nu: f64,
}

impl BesselBasis {
    fn new(params: &ProblemParams) -> Self {
        let q = params.q();
        BesselBasis {
            c: params.coefficients().comparison_c(),
            q,
            nu: 1.0 / q,
        }
    }

    fn z(&self, t: f64) -> f64 {
        2.0 * self.c.sqrt() / self.q * (1.0 + t).powf(self.q / 2.0)
    }

    fn j_plus(&self, t: f64) -> Result<f64, SpecFunError> {
        Ok((1.0 + t).sqrt() * specfun::bessel_i(self.nu, self.z(t))?)
    }

    fn j_minus(&self, t: f64) -> Result<f64, SpecFunError> {
        Ok((1.0 + t).sqrt() * specfun::bessel_k(self.nu, self.z(t))?)
    }

    fn j_plus_ln(&self, t: f64) -> Result<f64, SpecFunError> {
        Ok(0.5 * (1.0 + t).ln() + specfun::bessel_i_ln(self.nu, self.z(t))?)
    }

    fn j_minus_ln(&self, t: f64) -> Result<f64, SpecFunError> {
        Ok(0.5 * (1.0 + t).ln() + specfun::bessel_k_ln(self.nu, self.z(t))?)
    }

    fn j_plus_deriv(&self, t: f64) -> Result<f64, SpecFunError> {
        let tau = 1.0 + t;
        let z = self.z(t);
        Ok(tau.powf(-0.5) * specfun::bessel_i(self.nu, z)?
            + self.c.sqrt() * tau.powf((self.q - 1.0) / 2.0) * specfun::bessel_i(self.nu + 1.0, z)?)
    }

    fn j_minus_deriv(&self, t: f64) -> Result<f64, SpecFunError> {
        let tau = 1.0 + t;
        let z = self.z(t);
        Ok(tau.powf(-0.5) * specfun::bessel_k(self.nu, z)?
            - self.c.sqrt() * tau.powf((self.q - 1.0) / 2.0) * specfun::bessel_k(self.nu + 1.0, z)?)
    }
}

/// Trace of the scalar lower-bound ODE for `F₀`.
#[derive(Debug, Clone)]
pub struct F0OdeTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub blow_up: Option<BlowUpBracket>,
}

impl F0OdeTrace {
    /// Linear interpolation inside the recorded range.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if self.times.is_empty() || t < self.times[0] || t > *self.times.last().unwrap() {
            return None;
        }
        let idx = self.times.partition_point(|&s| s < t);
        if idx == 0 {
            return Some(self.values[0]);
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        if t1 == t0 {
            return Some(v1);
        }
        Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }
}

/// Integrate `{m F'}' = m(t) μ₂ (1+t)^{-(α+1)} F + B(t) |F|^p` from
/// `(F(0), F'(0)) = (f0, f0p)`, the sharp scalar oracle the PDE's `F₀` must
/// dominate. Step collapse is reported as detected blow-up with a bracket.
pub fn f0_lower_ode(
    params: &ProblemParams,
    f0: f64,
    f0p: f64,
    t_end: f64,
    dt_init: f64,
) -> Result<F0OdeTrace, ComparisonError> {
    if f0 < 0.0 || f0p < 0.0 || (f0 == 0.0 && f0p == 0.0) {
        return Err(ComparisonError::Domain(format!(
            "need F(0), F'(0) >= 0 and not both zero, got ({f0}, {f0p})"
        )));
    }
    let coeffs = params.coefficients();
    let p = params.p;
    let pp = *params;
    let rhs = move |t: f64, y: [f64; 2]| {
        let m = coeffs.multiplier(t);
        [
            y[1] / m,
            m * coeffs.mass_coeff(t) * y[0] + holder_b(&pp, t) * y[0].abs().powf(p),
        ]
    };
    let opts = OdeOptions {
        dt_init: dt_init.max(1e-12),
        state_cap: state_cap_for(p),
        ..OdeOptions::default()
    };
    // second state is G = m F', so G(0) = m(0) F'(0)
    let m0 = coeffs.multiplier_floor();
    let run = ivp::integrate(&rhs, 0.0, [f0, m0 * f0p], t_end, &opts);
    let blow_up = match run.outcome {
        OdeOutcome::ReachedEnd => None,
        OdeOutcome::Escaped { t_collapse, .. } => {
            let last = run.states.last().unwrap();
            let b2 = |t: f64| holder_b(&pp, t);
            Some(crate::kato::escape_bracket(
                t_collapse,
                last[0].abs(),
                p,
                1.0,
                m0,
                &b2,
            ))
        }
        OdeOutcome::MaxSteps => {
            return Err(ComparisonError::Calibration(
                "F0 ODE exhausted its step budget".into(),
            ))
        }
    };
    let derivatives = run
        .times
        .iter()
        .zip(&run.states)
        .map(|(&t, y)| y[1] / coeffs.multiplier(t))
        .collect();
    Ok(F0OdeTrace {
        times: run.times,
        values: run.states.iter().map(|y| y[0]).collect(),
        derivatives,
        blow_up,
    })
}

/// Largest first-component value the rhs can take before |F|^p overflows.
pub(crate) fn state_cap_for(p: f64) -> f64 {
    (f64::MAX.ln() / p - 10.0).exp().min(1e250)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProblemParams;
    use approx::assert_relative_eq;

    fn standard() -> ProblemParams {
        ProblemParams::new(1, 2.0, 0.0, 2.0, 1.0, 1.0, 0.5, 1.0).unwrap()
    }

    fn bump_norms() -> DataNorms {
        // f = (1 - r²)₊ on the line: ∫ = 4/3; g = 0
        DataNorms {
            f_l1: 4.0 / 3.0,
            g_l1: 0.0,
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-12);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-12);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn holder_b_examples() {
        let p = ProblemParams::new(1, 2.0, 0.0, 2.0, 0.0, 1.0, 0.1, 1.0).unwrap();
        assert_relative_eq!(holder_c1(&p), 0.5, max_relative = 1e-12);
        assert_relative_eq!(holder_b(&p, 0.0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(holder_b(&p, 1.0), 0.25, max_relative = 1e-12);

        let nearly_linear = ProblemParams::new(3, 1.0 + 1e-12, 0.0, 2.0, 0.0, 1.0, 0.1, 2.0).unwrap();
        assert_relative_eq!(holder_c1(&nearly_linear), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn holder_b_is_decreasing() {
        let p = standard();
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let b = holder_b(&p, i as f64 * 0.7);
            assert!(b > 0.0 && b < prev);
            prev = b;
        }
    }

    #[test]
    fn choose_t0_standard_config() {
        let t0 = ComparisonSetup::choose_t0(&standard(), &bump_norms()).unwrap();
        assert!(t0 >= 0.5 && t0 < 100.0, "t0 = {t0}");
        let setup = ComparisonSetup::new(&standard(), &bump_norms()).unwrap();
        assert!(setup.c_plus > 0.0);
    }

    #[test]
    fn choose_t0_g_heavy_data_hits_first_grid_point() {
        // J1 large relative to J0: lead term positive at once
        let data = DataNorms {
            f_l1: 1e-3,
            g_l1: 10.0,
        };
        let t0 = ComparisonSetup::choose_t0(&standard(), &data).unwrap();
        assert_eq!(t0, 0.5);
    }

    #[test]
    fn choose_t0_degenerate_data_rejected() {
        let data = DataNorms { f_l1: 0.0, g_l1: 0.0 };
        assert!(matches!(
            ComparisonSetup::choose_t0(&standard(), &data),
            Err(ComparisonError::DegenerateData)
        ));
    }

    #[test]
    fn coefficients_match_paper_closed_forms() {
        for (params, data) in [
            (standard(), bump_norms()),
            (
                // α = -1: q = 2, half-integer Bessel order 1/2
                ProblemParams::new(1, 2.0, -1.0, 2.0, 0.0, 2.0, 0.3, 1.0).unwrap(),
                DataNorms { f_l1: 1.0, g_l1: 0.5 },
            ),
            (
                ProblemParams::new(2, 3.0, 0.5, 1.5, 2.0, 0.7, 0.1, 1.5).unwrap(),
                DataNorms { f_l1: 2.0, g_l1: 1.0 },
            ),
        ] {
            let t0 = 1.0;
            let (cp, cm) = ComparisonSetup::solve_c_coeffs(&params, &data, t0).unwrap();
            let (cp_paper, cm_paper) =
                ComparisonSetup::closed_form_c_coeffs(&params, &data, t0).unwrap();
            assert_relative_eq!(cp, cp_paper, max_relative = 1e-6);
            assert_relative_eq!(cm, cm_paper, max_relative = 1e-6);
        }
    }

    #[test]
    fn initial_conditions_reproduced() {
        let setup = ComparisonSetup::new(&standard(), &bump_norms()).unwrap();
        let eps = setup.params().eps;
        assert_relative_eq!(setup.j_eval(setup.t0).unwrap(), eps * setup.j0, max_relative = 1e-9);
        assert_relative_eq!(
            setup.j_derivative(setup.t0).unwrap(),
            eps * setup.j1,
            epsilon = 1e-9 * setup.j0.max(1.0)
        );
        // derivative also via central differences
        let h = 1e-6;
        let fd = (setup.j_eval(setup.t0 + h).unwrap() - setup.j_eval(setup.t0 + h / 3.0).unwrap())
            / (h - h / 3.0);
        assert_relative_eq!(fd, eps * setup.j1, epsilon = 1e-4 * setup.j0);
    }

    #[test]
    fn coefficients_scale_linearly_in_data() {
        let data = DataNorms { f_l1: 1.0, g_l1: 0.5 };
        let doubled = DataNorms { f_l1: 2.0, g_l1: 1.0 };
        let (cp, cm) = ComparisonSetup::solve_c_coeffs(&standard(), &data, 1.0).unwrap();
        let (cp2, cm2) = ComparisonSetup::solve_c_coeffs(&standard(), &doubled, 1.0).unwrap();
        assert_relative_eq!(cp2, 2.0 * cp, max_relative = 1e-12);
        assert_relative_eq!(cm2, 2.0 * cm, max_relative = 1e-12);
    }

    #[test]
    fn j_satisfies_its_ode_by_finite_differences() {
        // the α = -1 case runs a shorter window: its fourth derivative grows
        // like c²(1+t)², which eats the finite-difference budget beyond
        // t ≈ t0 + 10 at the prescribed step 1e-4(1+t)
        for (params, data, span) in [
            (standard(), bump_norms(), 20),
            (
                ProblemParams::new(1, 2.0, -1.0, 2.0, 0.0, 2.0, 0.3, 1.0).unwrap(),
                DataNorms { f_l1: 1.0, g_l1: 0.5 },
                10,
            ),
        ] {
            let setup = ComparisonSetup::new(&params, &data).unwrap();
            let c = setup.c;
            let q = setup.q;
            for k in 0..=span {
                // keep the centered stencil inside the domain t ≥ t0
                let t = setup.t0 + (k as f64).max(0.01);
                let h = 1e-4 * (1.0 + t);
                let j = setup.j_eval(t).unwrap();
                let d2 = (setup.j_eval(t + h).unwrap() - 2.0 * j + setup.j_eval(t - h).unwrap())
                    / (h * h);
                let target = c * (1.0 + t).powf(q - 2.0) * j;
                assert!(
                    (d2 - target).abs() <= 1e-6 * j.abs().max(target.abs()),
                    "residual {:e} vs |J| {:e} at t = {t}",
                    (d2 - target).abs(),
                    j.abs()
                );
            }
        }
    }

    #[test]
    fn envelope_t2_closed_form_example() {
        // n=1, p=3, α=0, μ₁=0, μ₂=1, δ=(p-1)/4=0.5: (1+T2)^{1/2} = 7/4
        let params = ProblemParams::new(1, 3.0, 0.0, 2.0, 0.0, 1.0, 0.2, 1.0).unwrap();
        let data = DataNorms { f_l1: 1.0, g_l1: 0.0 };
        let setup = ComparisonSetup::new(&params, &data).unwrap();
        let consts = setup.calibrate_envelope(0.5).unwrap();
        assert_relative_eq!(consts.t2, 33.0 / 16.0, max_relative = 1e-12);
        // defining equation: the bracket vanishes at T2
        assert!(h_prime_bracket(&params, 0.5, consts.t2).abs() <= 1e-12);
        assert!(consts.c2 > 0.0);
    }

    #[test]
    fn envelope_is_below_j_and_increasing() {
        let setup = ComparisonSetup::new(&standard(), &bump_norms()).unwrap();
        let delta = (setup.params().p - 1.0) / 4.0;
        let consts = setup.calibrate_envelope(delta).unwrap();
        let mut prev_ln = f64::NEG_INFINITY;
        for i in 0..=200 {
            // stretch well past the calibration window [T1, 20 T1]
            let t = consts.t1 * (50.0f64).powf(i as f64 / 200.0);
            let a_ln = setup.envelope_a_ln(&consts, t).unwrap();
            let j_ln = setup.j_eval_ln(t).unwrap();
            assert!(a_ln <= j_ln + 1e-12, "A > J at t = {t}");
            assert!(a_ln >= prev_ln, "A not increasing at t = {t}");
            prev_ln = a_ln;
        }
    }

    #[test]
    fn envelope_linear_and_log_paths_agree() {
        let setup = ComparisonSetup::new(&standard(), &bump_norms()).unwrap();
        let consts = setup.calibrate_envelope(0.25).unwrap();
        for t in [consts.t1, consts.t1 + 3.0, consts.t1 * 5.0] {
            let lin = setup.envelope_a(&consts, t).unwrap().ln();
            let log = setup.envelope_a_ln(&consts, t).unwrap();
            assert_relative_eq!(lin, log, epsilon = 1e-12);
        }
        assert!(setup.envelope_a(&consts, consts.t1 - 0.5).is_err());
    }

    #[test]
    fn envelope_closed_form_no_damping() {
        // μ₁=0, μ₂=1, α=0: A(t) = ε C₂ (1+t)^{1/4} e^{2 (1+t)^{1/2}}
        let params = ProblemParams::new(1, 2.0, 0.0, 2.0, 0.0, 1.0, 0.2, 1.0).unwrap();
        let data = DataNorms { f_l1: 1.0, g_l1: 0.0 };
        let setup = ComparisonSetup::new(&params, &data).unwrap();
        let consts = setup.calibrate_envelope(0.25).unwrap();
        let t = consts.t1 + 2.0;
        let tau: f64 = 1.0 + t;
        let expected = 0.2 * consts.c2 * tau.powf(0.25) * (2.0 * tau.sqrt()).exp();
        assert_relative_eq!(setup.envelope_a(&consts, t).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn f0_ode_monotone_growth_without_initial_velocity() {
        let trace = f0_lower_ode(&standard(), 1.0, 0.0, 5.0, 1e-3).unwrap();
        assert!(trace.blow_up.is_none() || trace.values.last().unwrap() > &1.0);
        for w in trace.values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "F decreased: {} -> {}", w[0], w[1]);
        }
        assert!(*trace.values.last().unwrap() >= 1.0);
    }

    #[test]
    fn f0_ode_small_time_taylor() {
        // F'(0) = 0 removes the m'(0) F'(0) term, so
        // F(dt) = F(0) + dt²/2 · rhs(0)/m(0) + O(dt³)
        let params = standard();
        let f0 = 2.0;
        let dt = 0.005; // O(dt³) remainder ≈ 2e-7 here
        let trace = f0_lower_ode(&params, f0, 0.0, dt, 1e-5).unwrap();
        let c = params.coefficients();
        let rhs0 = c.multiplier_floor() * c.mass_coeff(0.0) * f0 + holder_b(&params, 0.0) * f0.powf(params.p);
        let taylor = f0 + dt * dt / 2.0 * rhs0 / c.multiplier_floor();
        let f_dt = *trace.values.last().unwrap();
        assert_relative_eq!(*trace.times.last().unwrap(), dt, epsilon = 1e-12);
        assert!((f_dt - taylor).abs() <= 1e-6, "diff {:e}", (f_dt - taylor).abs());
    }

    #[test]
    fn f0_ode_doubling_time_example() {
        // μ₁=0, μ₂=2, α=-1, F'(0)=0: F(t) ≥ F(0)(1 + t² m(0)μ₂/2) gives
        // F(1) ≥ 2 F(0)
        let params = ProblemParams::new(1, 2.0, -1.0, 2.0, 0.0, 2.0, 0.1, 1.0).unwrap();
        let trace = f0_lower_ode(&params, 1.0, 0.0, 1.0, 1e-4).unwrap();
        let f1 = trace.value_at(1.0).unwrap();
        assert!(f1 >= 2.0, "F(1) = {f1} < 2 F(0)");
    }

    #[test]
    fn f0_ode_dominates_j_pointwise() {
        let params = standard();
        let data = bump_norms();
        let setup = ComparisonSetup::new(&params, &data).unwrap();
        let trace = f0_lower_ode(
            &params,
            params.eps * data.f_l1,
            params.eps * data.g_l1,
            setup.t0 + 20.0,
            1e-3,
        )
        .unwrap();
        let mut checked = 0;
        for (&t, &f) in trace.times.iter().zip(&trace.values) {
            if t < setup.t0 {
                continue;
            }
            let j = setup.j_eval(t).unwrap();
            assert!(
                f - j >= -1e-6 * j.abs(),
                "F0 ODE fell below J at t = {t}: F = {f:e}, J = {j:e}"
            );
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn f0_ode_rejects_bad_data() {
        assert!(f0_lower_ode(&standard(), 0.0, 0.0, 1.0, 1e-3).is_err());
        assert!(f0_lower_ode(&standard(), -1.0, 0.0, 1.0, 1e-3).is_err());
    }
}
