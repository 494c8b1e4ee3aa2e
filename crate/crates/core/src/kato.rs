//! Executable form of the improved Kato-type blow-up lemma.
//!
//! An instance carries black-box functions `A` (lower bound from `T̃₀` on),
//! `B` (positive, decreasing), a multiplier `m` pinned between `m̲` and `m̄`,
//! an exponent gap `δ ∈ (0, (p-1)/2)`, and initial data `F(0), F'(0)`.
//! With `h(t) = B(t)^{1/2} A(t)^{(p-1)/2-δ}` non-decreasing from `T̃₀`,
//! any `F` satisfying
//!
//! ```text
//! F(t) ≥ A(t)           for t ≥ T̃₀
//! {m(t)F'(t)}' ≥ B(t)|F(t)|^p
//! F(0), F'(0) ≥ 0,      F(0) + F'(0) > 0
//! ```
//!
//! blows up no later than `3T̃` for every `T̃ ≥ max(T̃₀, T̃₁)` that satisfies
//! the size condition `T̃ h(T̃) A(T̃)^δ ≥ δ⁻¹ m̄ √((p+1)/m̲)`.
//!
//! Hypotheses are validated by dense sampling on a geometric grid (the
//! functions arrive as black boxes), and certificates are cross-checked
//! against brute-force integration of the equality case by
//! [`ode_blowup_oracle`].

use crate::comparison::state_cap_for;
use crate::ivp::{self, OdeOptions, OdeOutcome};
use serde::Serialize;
use std::sync::Arc;

/// Black-box time function usable across worker threads.
pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `amp · (1+t)^exponent`.
pub fn power_profile(amp: f64, exponent: f64) -> ProfileFn {
    Arc::new(move |t: f64| amp * (1.0 + t).powf(exponent))
}

/// `amp · exp(rate · (1+t)^power)`.
pub fn exp_power_profile(amp: f64, rate: f64, power: f64) -> ProfileFn {
    Arc::new(move |t: f64| amp * (rate * (1.0 + t).powf(power)).exp())
}

pub fn const_profile(v: f64) -> ProfileFn {
    Arc::new(move |_| v)
}

/// Multiplier rising from `m_lo` at t = 0 towards `m_hi`.
pub fn rising_multiplier(m_lo: f64, m_hi: f64, rate: f64) -> ProfileFn {
    Arc::new(move |t: f64| m_hi - (m_hi - m_lo) * (-rate * t).exp())
}

/// Multiplier decaying from `m_hi` at t = 0 towards `m_lo`.
pub fn decaying_multiplier(m_lo: f64, m_hi: f64, rate: f64) -> ProfileFn {
    Arc::new(move |t: f64| m_lo + (m_hi - m_lo) * (-rate * t).exp())
}

#[derive(Debug, thiserror::Error)]
pub enum KatoError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("F'(0) = 0 but no doubling time t_double was supplied")]
    MissingDoublingTime,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no T_tilde <= {limit:e} satisfies the size condition")]
    SearchExhausted { limit: f64 },
    #[error("oracle integration exhausted its step budget")]
    OracleBudget,
}

/// Certified interval around a finite-time escape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUpBracket {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl BlowUpBracket {
    pub fn width(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn contains(&self, t: f64) -> bool {
        (self.t_lo..=self.t_hi).contains(&t)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_lo + self.t_hi)
    }
}

/// One Lemma-1 instance.
#[derive(Clone)]
pub struct KatoInstance {
    /// Lower bound for F, valid from `t0_tilde` on.
    pub a: ProfileFn,
    /// Decreasing positive weight.
    pub b: ProfileFn,
    /// Multiplier with bounds `m_lo ≤ m(t) ≤ m_hi`.
    pub m: ProfileFn,
    pub m_lo: f64,
    pub m_hi: f64,
    /// Exponent gap, 0 < δ < (p-1)/2.
    pub delta: f64,
    pub p: f64,
    /// F(0) ≥ 0.
    pub f0: f64,
    /// F'(0) ≥ 0.
    pub f0p: f64,
    /// Doubling time with `F(t̃) ≥ 2F(0)`, required when F'(0) = 0.
    pub t_double: Option<f64>,
    /// Onset of the lower bound A and of `h' ≥ 0`.
    pub t0_tilde: f64,
}

/// Result of a certification run.
#[derive(Debug, Clone, Serialize)]
pub struct KatoReport {
    pub t0_tilde: f64,
    pub t1_tilde: f64,
    /// The candidate handed to `certify`.
    pub candidate: f64,
    /// Whether the candidate itself satisfies the size condition.
    pub condition_ok: bool,
    /// The certified time: the candidate when `condition_ok`, otherwise the
    /// smallest passing enlargement found by bisection.
    pub t_tilde: f64,
    /// `3 · t_tilde`, the certified upper bound for the blow-up time.
    pub bound: f64,
    pub lhs_at_t_tilde: f64,
    pub rhs: f64,
    /// Sampled (t, h(t)) diagnostics on [t0_tilde, t_tilde].
    pub h_values: Vec<(f64, f64)>,
}

const GRID_PER_DECADE: f64 = 1e3;
const SEARCH_LIMIT: f64 = 1e9;

/// Geometric sampling grid with 10³ points per decade; includes both ends.
fn sampling_grid(a: f64, b: f64) -> Vec<f64> {
    debug_assert!(b > 0.0 && b >= a);
    let start = if a > 0.0 {
        a
    } else {
        (b * 1e-6).min(1e-3).max(1e-12)
    };
    let decades = (b / start).log10().max(0.0);
    let n = ((GRID_PER_DECADE * decades).ceil() as usize).clamp(64, 200_000);
    let mut grid = Vec::with_capacity(n + 2);
    if a < start {
        grid.push(a);
    }
    for i in 0..=n {
        grid.push(start * (b / start).powf(i as f64 / n as f64));
    }
    grid
}

impl KatoInstance {
    /// `h(t) = B(t)^{1/2} A(t)^{(p-1)/2 - δ}`.
    pub fn h_eval(&self, t: f64) -> Result<f64, KatoError> {
        if t < self.t0_tilde - 1e-12 {
            return Err(KatoError::Domain(format!(
                "h is defined from T~0 = {}, got t = {t}",
                self.t0_tilde
            )));
        }
        let a = (self.a)(t);
        let b = (self.b)(t);
        if !(a > 0.0 && b > 0.0) {
            return Err(KatoError::HypothesisViolation(format!(
                "A, B must be strictly positive; A({t}) = {a}, B({t}) = {b}"
            )));
        }
        Ok(b.sqrt() * a.powf((self.p - 1.0) / 2.0 - self.delta))
    }

    /// `T̃₁ = m̄ m̲⁻¹ F(0)/F'(0)` when `F'(0) ≠ 0`, the doubling time
    /// otherwise.
    pub fn t1_tilde(&self) -> Result<f64, KatoError> {
        self.validate_data()?;
        if self.f0p != 0.0 {
            Ok(self.m_hi / self.m_lo * self.f0 / self.f0p)
        } else {
            self.t_double.ok_or(KatoError::MissingDoublingTime)
        }
    }

    /// Right-hand side of the size condition: `δ⁻¹ m̄ √((p+1)/m̲)`.
    pub fn condition_rhs(&self) -> f64 {
        self.m_hi / self.delta * ((self.p + 1.0) / self.m_lo).sqrt()
    }

    /// Left-hand side `T̃ h(T̃) A(T̃)^δ`.
    pub fn condition_lhs(&self, t_tilde: f64) -> Result<f64, KatoError> {
        Ok(t_tilde * self.h_eval(t_tilde)? * (self.a)(t_tilde).powf(self.delta))
    }

    fn validate_data(&self) -> Result<(), KatoError> {
        if !(self.p > 1.0) {
            return Err(KatoError::HypothesisViolation(format!(
                "p = {} must be > 1",
                self.p
            )));
        }
        if !(self.delta > 0.0 && self.delta < (self.p - 1.0) / 2.0) {
            return Err(KatoError::HypothesisViolation(format!(
                "delta = {} outside (0, (p-1)/2) = (0, {})",
                self.delta,
                (self.p - 1.0) / 2.0
            )));
        }
        if !(self.m_lo > 0.0 && self.m_hi >= self.m_lo) {
            return Err(KatoError::HypothesisViolation(format!(
                "multiplier bounds must satisfy 0 < m_lo <= m_hi, got [{}, {}]",
                self.m_lo, self.m_hi
            )));
        }
        if self.f0 < 0.0 || self.f0p < 0.0 || self.f0 + self.f0p <= 0.0 {
            return Err(KatoError::HypothesisViolation(format!(
                "need F(0), F'(0) >= 0 with F(0) + F'(0) > 0, got ({}, {})",
                self.f0, self.f0p
            )));
        }
        Ok(())
    }

    fn check_sampled_hypotheses(&self, up_to: f64) -> Result<(), KatoError> {
        // B positive and decreasing on [0, up_to]
        let grid = sampling_grid(0.0, up_to);
        let mut prev = f64::INFINITY;
        for &t in &grid {
            let b = (self.b)(t);
            if !(b > 0.0) {
                return Err(KatoError::HypothesisViolation(format!(
                    "B({t}) = {b} not strictly positive"
                )));
            }
            if b > prev * (1.0 + 1e-12) {
                return Err(KatoError::HypothesisViolation(format!(
                    "B not decreasing near t = {t}"
                )));
            }
            prev = b;
        }
        // m within its stated bounds
        for &t in &grid {
            let m = (self.m)(t);
            if m < self.m_lo * (1.0 - 1e-12) || m > self.m_hi * (1.0 + 1e-12) {
                return Err(KatoError::HypothesisViolation(format!(
                    "m({t}) = {m} escapes [{}, {}]",
                    self.m_lo, self.m_hi
                )));
            }
        }
        // h non-decreasing (and A positive via h_eval) on [T̃₀, up_to]
        if up_to > self.t0_tilde {
            let grid = sampling_grid(self.t0_tilde, up_to);
            let mut prev = 0.0f64;
            for (i, &t) in grid.iter().enumerate() {
                let h = self.h_eval(t)?;
                if i > 0 && h < prev * (1.0 - 1e-10) {
                    return Err(KatoError::HypothesisViolation(format!(
                        "h not non-decreasing near t = {t}"
                    )));
                }
                prev = h;
            }
        }
        Ok(())
    }

    /// Certify a candidate `T̃`. The report carries `condition_ok` for the
    /// candidate itself; when the candidate fails the size condition the
    /// smallest passing enlargement is located by bisection and certified
    /// instead.
    pub fn certify(&self, candidate: f64) -> Result<KatoReport, KatoError> {
        self.validate_data()?;
        let t1 = self.t1_tilde()?;
        let floor = self.t0_tilde.max(t1);
        if candidate < floor - 1e-12 {
            return Err(KatoError::Domain(format!(
                "candidate {candidate} below max(T~0, T~1) = {floor}"
            )));
        }
        self.check_sampled_hypotheses(candidate)?;

        let rhs = self.condition_rhs();
        let condition_ok = self.condition_lhs(candidate)? >= rhs;

        let t_tilde = if condition_ok {
            candidate
        } else {
            let found = self.smallest_passing(candidate, rhs)?;
            self.check_sampled_hypotheses(found)?;
            found
        };
        let lhs = self.condition_lhs(t_tilde)?;

        let h_values = sampling_grid(self.t0_tilde.max(1e-6), t_tilde.max(self.t0_tilde + 1.0))
            .iter()
            .step_by(64)
            .map(|&t| self.h_eval(t).map(|h| (t, h)))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(KatoReport {
            t0_tilde: self.t0_tilde,
            t1_tilde: t1,
            candidate,
            condition_ok,
            t_tilde,
            bound: 3.0 * t_tilde,
            lhs_at_t_tilde: lhs,
            rhs,
            h_values,
        })
    }

    fn smallest_passing(&self, from: f64, rhs: f64) -> Result<f64, KatoError> {
        let mut lo = from.max(1e-12);
        let mut hi = lo * 2.0;
        while self.condition_lhs(hi)? < rhs {
            lo = hi;
            hi *= 2.0;
            if hi > SEARCH_LIMIT {
                return Err(KatoError::SearchExhausted { limit: SEARCH_LIMIT });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.condition_lhs(mid)? >= rhs {
                hi = mid;
            } else {
                lo = mid;
            }
            if (hi - lo) <= 1e-9 * hi {
                break;
            }
        }
        Ok(hi)
    }
}

/// Outcome of the equality-case integration `{m F'}' = B |F|^p`.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub blow_up: bool,
    pub bracket: Option<BlowUpBracket>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// F' = G/m at the recorded times.
    pub derivatives: Vec<f64>,
}

/// Integrate the equality case of (hp2) with adaptive step-doubling control
/// (relative tolerance 1e-9). Blow-up is declared only on simultaneous
/// threshold crossing and step collapse below `1e-14·t`, so stiffness alone
/// cannot fake an escape; reaching `t_max` without escape returns
/// `blow_up = false`.
pub fn ode_blowup_oracle(
    m: &ProfileFn,
    b: &ProfileFn,
    p: f64,
    f0: f64,
    f0p: f64,
    t_max: f64,
    threshold: f64,
) -> Result<OracleOutcome, KatoError> {
    if !(p > 1.0) {
        return Err(KatoError::Domain(format!("p = {p} must be > 1")));
    }
    if f0 < 0.0 || f0p < 0.0 || f0 + f0p <= 0.0 {
        return Err(KatoError::Domain(format!(
            "need F(0), F'(0) >= 0, not both zero; got ({f0}, {f0p})"
        )));
    }
    let (m, b) = (Arc::clone(m), Arc::clone(b));
    let rhs = {
        let (m, b) = (Arc::clone(&m), Arc::clone(&b));
        move |t: f64, y: [f64; 2]| [y[1] / m(t), b(t) * y[0].abs().powf(p)]
    };
    let opts = OdeOptions {
        threshold,
        state_cap: state_cap_for(p),
        ..OdeOptions::default()
    };
    let y0 = [f0, m(0.0) * f0p];
    let run = ivp::integrate(&rhs, 0.0, y0, t_max, &opts);

    let (blow_up, bracket) = match run.outcome {
        OdeOutcome::ReachedEnd => (false, None),
        OdeOutcome::Escaped { t_collapse, .. } => {
            let f_final = run.states.last().unwrap()[0].abs();
            // coarse multiplier bounds over the traversed window
            let mut m_lo = f64::INFINITY;
            let mut m_hi = 0.0f64;
            for &t in sampling_grid(0.0, t_collapse.max(1e-6)).iter().step_by(8) {
                let v = m(t);
                m_lo = m_lo.min(v);
                m_hi = m_hi.max(v);
            }
            let b_fn = |t: f64| b(t);
            (
                true,
                Some(escape_bracket(t_collapse, f_final, p, m_hi, m_lo, &b_fn)),
            )
        }
        OdeOutcome::MaxSteps => return Err(KatoError::OracleBudget),
    };

    let derivatives = run
        .times
        .iter()
        .zip(&run.states)
        .map(|(&t, y)| y[1] / m(t))
        .collect();
    Ok(OracleOutcome {
        blow_up,
        bracket,
        times: run.times,
        values: run.states.iter().map(|y| y[0]).collect(),
        derivatives,
    })
}

/// Bracket the escape time of `{mF'}' ≥ B|F|^p` after integration stopped at
/// `t_collapse` with value `f_final`. The true escape time exceeds
/// `t_collapse` (the solution is still finite there) by at most
///
/// ```text
/// Δ ≤ m̄ √((p+1)/(2 m̲ B₂)) · F₁^{-(p-1)/2} · I_p,
/// I_p = ∫₁^∞ ds/√(s^{p+1}-1) ≤ 2/√(p+1) + (2√2/(p-1)) 2^{-(p-1)/2},
/// ```
///
/// which is microscopic at collapse scale. A symmetric 5e-4 relative slack
/// absorbs accumulated integrator drift, keeping the total width within the
/// contracted 1e-3 · t_hi.
pub(crate) fn escape_bracket(
    t_collapse: f64,
    f_final: f64,
    p: f64,
    m_hi: f64,
    m_lo: f64,
    b: &dyn Fn(f64) -> f64,
) -> BlowUpBracket {
    let i_p = 2.0 / (p + 1.0).sqrt() + 2.0 * 2.0f64.sqrt() / (p - 1.0) * 2.0f64.powf(-(p - 1.0) / 2.0);
    let tail = |b2: f64| {
        m_hi * ((p + 1.0) / (2.0 * m_lo * b2)).sqrt() * f_final.powf(-(p - 1.0) / 2.0) * i_p
    };
    // B is decreasing: evaluate at the far end of the trial window, twice
    let mut delta = tail(b(t_collapse));
    delta = tail(b(t_collapse + delta));
    let slack = 5e-4 * t_collapse;
    BlowUpBracket {
        t_lo: t_collapse - slack,
        t_hi: t_collapse + slack + delta,
    }
}
