//! The lifespan equation and its consequences.
//!
//! The upper bound for the maximal existence time is `T ≤ 3ζ(Cε)`, where
//! `ζ(ε̄)` is the larger solution of
//!
//! ```text
//! ε̄ ζ^{δ'} exp(κ ζ^{(1-α)/2}) = 1,
//! δ' = 2/(p-1) - n + (1+α)/4,
//! κ  = (2/(1-α)) sqrt(μ₂ exp(μ₁/(1-β))),
//! ```
//!
//! and `C = C₂ [δ m(0) √C₁ / (2√(p+1))]^{2/(p-1)}` with `δ = (p-1)/4`.
//! Everything is solved in the log domain: `ln g = ln ε̄ + δ' ln ζ +
//! κ ζ^{(1-α)/2}` spans hundreds of orders of magnitude while `ln g` stays
//! tame. For `δ' ≥ 0` the root is unique (`g` is increasing); for `δ' < 0`
//! the equation has a stationary point and the larger branch is selected by
//! bracketing upward from it. The small-ε consequence is the log-type
//! asymptote `T ≤ c [log(1/ε)]^{2/(1-α)}`.

use crate::comparison::{DataNorms, EnvelopeConstants};
use crate::params::ProblemParams;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum LifespanError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no root: delta' < 0 and min g = {min_g:e} > 1 on the larger branch")]
    NoRoot { min_g: f64 },
    #[error("root refinement failed: residual {residual:e} above 1e-10")]
    Convergence { residual: f64 },
}

/// Which branch of the lifespan equation the returned root lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootBranch {
    /// `δ' ≥ 0`: g is strictly increasing from 0, the root is unique.
    UniqueIncreasing,
    /// `δ' < 0`: two roots may exist; the returned one is the larger, with
    /// `g' > 0` there.
    LargerOfTwo,
}

/// `δ' = 2/(p-1) - n + (1+α)/4`, the exponent of the algebraic prefactor.
pub fn delta_prime(params: &ProblemParams) -> f64 {
    2.0 / (params.p - 1.0) - params.n as f64 + (1.0 + params.alpha) / 4.0
}

/// `κ = (2/(1-α)) sqrt(μ₂ exp(μ₁/(1-β)))`; equals `2 sqrt(m(0)μ₂)/(1-α)`.
pub fn kappa(params: &ProblemParams) -> f64 {
    2.0 / params.q() * (params.mu2 * (params.mu1 / (1.0 - params.beta)).exp()).sqrt()
}

/// A prepared lifespan equation instance.
#[derive(Debug, Clone, Serialize)]
pub struct LifespanQuery {
    pub params: ProblemParams,
    /// ε̄ = Cε ∈ (0, 1).
    pub eps_bar: f64,
    pub exponent_delta_prime: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LifespanReport {
    pub zeta: f64,
    /// 3ζ, the lifespan upper bound.
    pub bound: f64,
    /// |ε̄ ζ^{δ'} exp(κ ζ^{(1-α)/2}) - 1| at the returned root.
    pub residual: f64,
    /// Coefficient of [log(1/ε̄)]^{2/(1-α)} in the dominating asymptote.
    pub asymptote_c: f64,
    pub branch_note: RootBranch,
    pub warnings: Vec<String>,
}

impl LifespanQuery {
    pub fn new(params: &ProblemParams, eps_bar: f64) -> Result<Self, LifespanError> {
        if !(eps_bar > 0.0 && eps_bar < 1.0) {
            return Err(LifespanError::Domain(format!(
                "eps_bar = {eps_bar} outside (0, 1)"
            )));
        }
        Ok(LifespanQuery {
            params: *params,
            eps_bar,
            exponent_delta_prime: delta_prime(params),
            kappa: kappa(params),
        })
    }

    /// `ln g(e^y) = ln ε̄ + δ' y + κ e^{y q/2}` in `y = ln ζ`.
    fn ln_g(&self, y: f64) -> f64 {
        self.eps_bar.ln() + self.exponent_delta_prime * y + self.kappa * (y * self.params.q() / 2.0).exp()
    }

    fn ln_g_prime(&self, y: f64) -> f64 {
        let q = self.params.q();
        self.exponent_delta_prime + self.kappa * q / 2.0 * (y * q / 2.0).exp()
    }

    /// Solve for the (larger) root ζ.
    pub fn solve(&self) -> Result<LifespanReport, LifespanError> {
        let dp = self.exponent_delta_prime;
        let q = self.params.q();

        let (mut y_lo, branch) = if dp < 0.0 {
            // stationary point of ln g: κ (q/2) e^{y q/2} = -δ'
            let y_star = 2.0 / q * (-2.0 * dp / (self.kappa * q)).ln();
            let g_min = self.ln_g(y_star);
            if g_min > 0.0 {
                return Err(LifespanError::NoRoot { min_g: g_min.exp() });
            }
            (y_star, RootBranch::LargerOfTwo)
        } else {
            // expand downward until ln g < 0
            let mut y = 0.0;
            let mut guard = 0;
            while self.ln_g(y) >= 0.0 {
                y = 2.0 * y - 1.0;
                guard += 1;
                if guard > 2100 {
                    return Err(LifespanError::Domain(
                        "failed to bracket the root from below".into(),
                    ));
                }
            }
            (y, RootBranch::UniqueIncreasing)
        };

        // expand upward until ln g > 0
        let mut y_hi = y_lo.max(0.0);
        let mut guard = 0;
        while self.ln_g(y_hi) <= 0.0 {
            y_hi = 2.0 * y_hi + 1.0;
            guard += 1;
            if guard > 2100 {
                return Err(LifespanError::Domain(
                    "failed to bracket the root from above".into(),
                ));
            }
        }

        // bisection on ln ζ, then Newton polish
        for _ in 0..200 {
            let mid = 0.5 * (y_lo + y_hi);
            if self.ln_g(mid) <= 0.0 {
                y_lo = mid;
            } else {
                y_hi = mid;
            }
            if y_hi - y_lo <= 1e-13 * y_hi.abs().max(1.0) {
                break;
            }
        }
        let mut y = 0.5 * (y_lo + y_hi);
        for _ in 0..5 {
            let g = self.ln_g(y);
            let gp = self.ln_g_prime(y);
            if gp <= 0.0 {
                break;
            }
            let step = g / gp;
            y = (y - step).clamp(y_lo - 1.0, y_hi + 1.0);
            if step.abs() < 1e-16 * y.abs().max(1.0) {
                break;
            }
        }

        let zeta = y.exp();
        let residual = self.ln_g(y).exp_m1().abs();
        if !(residual <= 1e-10) {
            return Err(LifespanError::Convergence { residual });
        }

        let mut warnings = Vec::new();
        if zeta < 2.0 {
            warnings.push(format!(
                "zeta = {zeta:.6} < 2, so T~ = zeta - 1 < 1: eps_bar exceeds the admissible smallness regime"
            ));
        }

        Ok(LifespanReport {
            zeta,
            bound: 3.0 * zeta,
            residual,
            asymptote_c: ((1.0 + self.slack()) / self.kappa).powf(2.0 / q),
            branch_note: branch,
            warnings,
        })
    }

    /// Slack η in the asymptote: 0 when δ' ≥ 0 (the closed form already
    /// dominates), 0.1·|δ'| otherwise (the algebraic factor is absorbed by
    /// a fraction of the exponential term).
    fn slack(&self) -> f64 {
        0.1 * (-self.exponent_delta_prime).max(0.0)
    }

    /// `[(1+η) log(1/ε̄) / κ]^{2/(1-α)}` at this query's ε̄.
    pub fn asymptote(&self) -> f64 {
        ((1.0 + self.slack()) * (1.0 / self.eps_bar).ln() / self.kappa).powf(2.0 / self.params.q())
    }
}

/// Solve the lifespan equation at explicit ε̄.
pub fn zeta_solve(params: &ProblemParams, eps_bar: f64) -> Result<LifespanReport, LifespanError> {
    LifespanQuery::new(params, eps_bar)?.solve()
}

/// The dominating asymptote `[(1+η) log(1/ε̄)/κ]^{2/(1-α)}` at ε̄.
pub fn asymptote_at_eps_bar(params: &ProblemParams, eps_bar: f64) -> Result<f64, LifespanError> {
    Ok(LifespanQuery::new(params, eps_bar)?.asymptote())
}

/// `c [log(1/ε)]^{2/(1-α)}`-type bound evaluated at ε̄ = C·ε.
/// For δ' ≥ 0 the value is exactly `[log(1/ε̄)/κ]^{2/(1-α)}`.
pub fn log_asymptote(params: &ProblemParams, eps: f64, c_const: f64) -> Result<f64, LifespanError> {
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return Err(LifespanError::Domain(format!(
            "eps = {eps} outside (0, 1/e)"
        )));
    }
    let eps_bar = c_const * eps;
    if !(eps_bar > 0.0 && eps_bar < 1.0) {
        return Err(LifespanError::Domain(format!(
            "C*eps = {eps_bar} outside (0, 1)"
        )));
    }
    asymptote_at_eps_bar(params, eps_bar)
}

/// `C = C₂ [δ m(0) √C₁ / (2√(p+1))]^{2/(p-1)}` with `δ = (p-1)/4` and the
/// third constant identified with the calibrated envelope amplitude C₂.
pub fn assemble_c_const(params: &ProblemParams, env: &EnvelopeConstants) -> f64 {
    let delta = (params.p - 1.0) / 4.0;
    let m0 = params.coefficients().multiplier_floor();
    env.c2
        * (delta * m0 * env.c1.sqrt() / (2.0 * (params.p + 1.0).sqrt()))
            .powf(2.0 / (params.p - 1.0))
}

/// The doubling time `t̃` solving `½ m(0) μ₂ (1+t̃)^{-max(0, α+1)} t̃² = 1`,
/// used for `T̃₁` when the data have no initial velocity.
pub fn doubling_time(params: &ProblemParams) -> f64 {
    let a = (params.alpha + 1.0).max(0.0);
    let k = params.coefficients().comparison_c() / 2.0;
    if a == 0.0 {
        return (1.0 / k).sqrt();
    }
    // k t² (1+t)^{-a} is strictly increasing for a < 2; bisect the crossing
    let f = |t: f64| k * t * t * (1.0 + t).powf(-a) - 1.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `T̃₁` for the PDE functional `F₀`: `m̄ m̲⁻¹ F₀(0)/F₀'(0) = ‖f‖₁/(m(0)‖g‖₁)`
/// when `g` does not vanish (ε cancels), the doubling time otherwise.
pub fn f0_t1_tilde(params: &ProblemParams, data: &DataNorms) -> f64 {
    if data.g_l1 > 0.0 {
        data.f_l1 / (params.coefficients().multiplier_floor() * data.g_l1)
    } else {
        doubling_time(params)
    }
}

/// Chain `assemble_c_const → zeta_solve(Cε)`, with regime warnings whenever
/// the proof's side conditions `ζ - 1 ≥ max(T̃₀, T̃₁)` and `ζ ≥ 2` fail
/// (meaning ε exceeds the admissible ε₀ regime).
pub fn theorem_bound(
    params: &ProblemParams,
    env: &EnvelopeConstants,
    data: &DataNorms,
    eps: f64,
) -> Result<LifespanReport, LifespanError> {
    let c_const = assemble_c_const(params, env);
    let floors = (env.t0_tilde(), f0_t1_tilde(params, data));
    theorem_bound_with_c(params, c_const, Some(floors), eps)
}

/// Same as [`theorem_bound`] but with an explicit constant `C` (and optional
/// `(T̃₀, T̃₁)` floors for the regime warnings).
pub fn theorem_bound_with_c(
    params: &ProblemParams,
    c_const: f64,
    floors: Option<(f64, f64)>,
    eps: f64,
) -> Result<LifespanReport, LifespanError> {
    if !(eps > 0.0) {
        return Err(LifespanError::Domain(format!("eps = {eps} must be > 0")));
    }
    let eps_bar = c_const * eps;
    if !(eps_bar < 1.0) {
        return Err(LifespanError::Domain(format!(
            "C*eps = {eps_bar} >= 1: outside the theorem regime"
        )));
    }
    let mut report = zeta_solve(params, eps_bar)?;
    if let Some((t0_tilde, t1_tilde)) = floors {
        let t_tilde = report.zeta - 1.0;
        let floor = t0_tilde.max(t1_tilde);
        if t_tilde < floor {
            report.warnings.push(format!(
                "T~ = zeta - 1 = {t_tilde:.6} below max(T~0, T~1) = {floor:.6}: eps exceeds the admissible regime"
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProblemParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// n=1, p=11/3, α=0, μ₁=0, μ₂=1: δ' = 0 and κ = 2, so
    /// ζ = [ln(1/ε̄)/2]² in closed form.
    fn delta_zero_family() -> ProblemParams {
        ProblemParams::new(1, 11.0 / 3.0, 0.0, 2.0, 0.0, 1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn delta_prime_and_kappa_values() {
        let p = delta_zero_family();
        assert_relative_eq!(delta_prime(&p), 0.0, epsilon = 1e-15);
        assert_relative_eq!(kappa(&p), 2.0, epsilon = 1e-15);

        let p = ProblemParams::new(2, 2.0, 0.5, 2.0, 1.0, 1.0, 0.1, 1.0).unwrap();
        assert_relative_eq!(delta_prime(&p), 0.375, epsilon = 1e-15);
        // κ² = (2/(1-α))² μ₂ m(0) to machine precision
        let c = p.coefficients();
        assert_relative_eq!(
            kappa(&p).powi(2),
            (2.0 / p.q()).powi(2) * p.mu2 * c.multiplier_floor(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn zeta_closed_form_examples() {
        let p = delta_zero_family();
        let r = zeta_solve(&p, (-2.0f64).exp()).unwrap();
        assert!((r.zeta - 1.0).abs() <= 1e-10, "zeta = {}", r.zeta);
        assert!(r.residual <= 1e-10);

        let r = zeta_solve(&p, (-4.0f64).exp()).unwrap();
        assert!((r.zeta - 4.0).abs() <= 1e-10, "zeta = {}", r.zeta);
        assert_eq!(r.bound, 3.0 * r.zeta);
    }

    #[test]
    fn residuals_on_generic_grid() {
        let p = ProblemParams::new(2, 2.0, 0.5, 2.0, 1.0, 1.0, 0.1, 1.0).unwrap();
        for i in 0..100 {
            let eps_bar = 0.99 * (1e-12f64 / 0.99).powf(i as f64 / 99.0);
            let r = zeta_solve(&p, eps_bar).unwrap();
            assert!(r.residual <= 1e-10, "residual {} at eps_bar {eps_bar}", r.residual);
        }
    }

    #[test]
    fn domain_errors() {
        let p = delta_zero_family();
        assert!(zeta_solve(&p, 0.0).is_err());
        assert!(zeta_solve(&p, 1.0).is_err());
        assert!(zeta_solve(&p, -0.5).is_err());
    }

    #[test]
    fn larger_branch_for_negative_delta_prime() {
        // n=3, p=2, α=0, μ₂=25: δ' = -0.75, κ = 10
        let p = ProblemParams::new(3, 2.0, 0.0, 2.0, 0.0, 25.0, 0.1, 1.0).unwrap();
        assert!(delta_prime(&p) < 0.0);
        let query = LifespanQuery::new(&p, 1e-6).unwrap();
        let r = query.solve().unwrap();
        assert_eq!(r.branch_note, RootBranch::LargerOfTwo);
        // larger branch: g' > 0 at the root
        assert!(query.ln_g_prime(r.zeta.ln()) > 0.0);
        // and the root sits above the stationary point
        let y_star = 2.0 / p.q() * (-2.0 * delta_prime(&p) / (kappa(&p) * p.q())).ln();
        assert!(r.zeta.ln() > y_star);
    }

    #[test]
    fn no_root_when_minimum_exceeds_one() {
        let p = ProblemParams::new(3, 2.0, 0.0, 2.0, 0.0, 25.0, 0.1, 1.0).unwrap();
        match zeta_solve(&p, 0.5) {
            Err(LifespanError::NoRoot { min_g }) => assert!(min_g > 1.0),
            other => panic!("expected NoRoot, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn zeta_strictly_decreasing_in_eps_bar(
            ln_eps in -25.0..-0.5f64,
            factor in 0.05..0.9f64,
        ) {
            let p = delta_zero_family();
            let e1 = ln_eps.exp();
            let e2 = e1 * factor; // e2 < e1
            let z1 = zeta_solve(&p, e1).unwrap().zeta;
            let z2 = zeta_solve(&p, e2).unwrap().zeta;
            prop_assert!(z2 > z1, "zeta({e2}) = {z2} <= zeta({e1}) = {z1}");
        }
    }

    #[test]
    fn asymptote_coincides_for_delta_zero() {
        let p = delta_zero_family();
        let r = zeta_solve(&p, (-2.0f64).exp()).unwrap();
        let a = asymptote_at_eps_bar(&p, (-2.0f64).exp()).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-12);
        assert_relative_eq!(a, r.zeta, epsilon = 1e-10);
        assert_relative_eq!(r.asymptote_c, (0.5f64).powf(2.0), epsilon = 1e-12);
    }

    #[test]
    fn asymptote_ratio_approaches_one_for_nonnegative_delta_prime() {
        // small positive δ': n=1, p=3.6, α=0, μ₂=9 → δ' ≈ 0.019, κ = 6
        let p = ProblemParams::new(1, 3.6, 0.0, 2.0, 0.0, 9.0, 0.1, 1.0).unwrap();
        assert!(delta_prime(&p) > 0.0);
        // the gap decays like ln ζ / ln(1/ε̄), slow but within 2% well
        // before ε̄ = 1e-12
        for &eps_bar in &[1e-4, 1e-8, 1e-12] {
            let zeta = zeta_solve(&p, eps_bar).unwrap().zeta;
            let asym = asymptote_at_eps_bar(&p, eps_bar).unwrap();
            let gap = (zeta / asym - 1.0).abs();
            assert!(gap < 0.02, "ratio gap {gap} at eps_bar = {eps_bar}");
        }
    }

    #[test]
    fn asymptote_dominates_for_negative_delta_prime() {
        let p = ProblemParams::new(3, 2.0, 0.0, 2.0, 0.0, 25.0, 0.1, 1.0).unwrap();
        for i in 0..25 {
            let eps_bar = 1e-4 * (1e-12f64 / 1e-4).powf(i as f64 / 24.0);
            let zeta = zeta_solve(&p, eps_bar).unwrap().zeta;
            let asym = asymptote_at_eps_bar(&p, eps_bar).unwrap();
            assert!(zeta <= asym, "zeta {zeta} > asymptote {asym} at eps_bar {eps_bar}");
        }
    }

    #[test]
    fn log_asymptote_domain() {
        let p = delta_zero_family();
        assert!(log_asymptote(&p, 0.5, 1.0).is_err()); // eps > 1/e
        assert!(log_asymptote(&p, 0.1, 1.0).is_ok());
    }

    #[test]
    fn assemble_c_example() {
        // C₂=1, C₁=0.5, p=3, m(0)=1, δ=0.5 → [0.5·√0.5/4]^1 = √0.5/8
        let p = ProblemParams::new(1, 3.0, 0.0, 2.0, 0.0, 1.0, 0.1, 1.0).unwrap();
        let env = EnvelopeConstants {
            c1: 0.5,
            c2: 1.0,
            t1: 1.0,
            t2: 0.0,
        };
        assert_relative_eq!(
            assemble_c_const(&p, &env),
            0.5f64.sqrt() / 8.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(assemble_c_const(&p, &env), 0.088388, max_relative = 1e-4);

        // p → ∞: the power 2/(p-1) → 0, so C → C₂
        let p_big = ProblemParams::new(1, 1e6, 0.0, 2.0, 0.0, 1.0, 0.1, 1.0).unwrap();
        let env2 = EnvelopeConstants { c2: 0.37, ..env };
        assert_relative_eq!(assemble_c_const(&p_big, &env2), 0.37, max_relative = 1e-3);
    }

    #[test]
    fn doubling_time_examples() {
        // μ₁=0, μ₂=2, α=-1: exponent max(0, α+1) = 0 → t̃ = 1
        let p = ProblemParams::new(1, 2.0, -1.0, 2.0, 0.0, 2.0, 0.1, 1.0).unwrap();
        assert_relative_eq!(doubling_time(&p), 1.0, max_relative = 1e-12);

        // generic: verify the defining equation at the root
        let p = ProblemParams::new(1, 2.0, 0.0, 2.0, 1.0, 1.0, 0.1, 1.0).unwrap();
        let t = doubling_time(&p);
        let c = p.coefficients();
        let lhs = 0.5 * c.comparison_c() * (1.0 + t).powf(-1.0) * t * t;
        assert_relative_eq!(lhs, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn theorem_bound_closed_form_and_monotonicity() {
        // δ'=0 family with C = 1, ε = e⁻²: ζ = 1, bound = 3
        let p = delta_zero_family();
        let r = theorem_bound_with_c(&p, 1.0, None, (-2.0f64).exp()).unwrap();
        assert!((r.bound - 3.0).abs() <= 3e-10, "bound = {}", r.bound);

        // decreasing in ε: larger amplitude, shorter certified lifespan
        let mut prev = f64::INFINITY;
        for &eps in &[0.005, 0.01, 0.02, 0.05] {
            let b = theorem_bound_with_c(&p, 1.0, None, eps).unwrap().bound;
            assert!(b < prev, "bound not decreasing at eps = {eps}");
            prev = b;
        }
    }

    #[test]
    fn theorem_bound_warnings() {
        let p = delta_zero_family();
        // ε̄ = 0.5: ζ = [ln 2 / 2]² ≈ 0.12 < 2 → smallness warning
        let r = theorem_bound_with_c(&p, 1.0, None, 0.5).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("zeta")), "{:?}", r.warnings);

        // floors far above T~ = ζ-1 → regime warning
        let r = theorem_bound_with_c(&p, 1.0, Some((50.0, 1.0)), (-4.0f64).exp()).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("T~0")), "{:?}", r.warnings);

        // C·eps ≥ 1 rejected
        assert!(theorem_bound_with_c(&p, 2.0, None, 0.6).is_err());
    }
}
