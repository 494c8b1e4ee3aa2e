//! Internal adaptive RK4 (step-doubling) integrator for the 2-state blow-up
//! ODEs `(F, G = mF')`. Detects finite-time escape by the combination the
//! oracles require: threshold crossing plus step collapse.

/// Tuning for one integration run.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_init: f64,
    /// Blow-up threshold on the first state component.
    pub threshold: f64,
    /// Declare step collapse when `dt < collapse_rel * max(t, 1e-6)`.
    pub collapse_rel: f64,
    /// Hard cap on the first component; beyond it the rhs would overflow.
    pub state_cap: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            dt_init: 1e-3,
            threshold: 1e10,
            collapse_rel: 1e-14,
            state_cap: 1e250,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum OdeOutcome {
    /// Integrated to `t_end` without triggering the detector.
    ReachedEnd,
    /// Threshold crossed and the step size collapsed (or the state hit the
    /// overflow cap). `t_collapse` is the last reachable time; the true
    /// escape time lies within a microscopic interval beyond it.
    Escaped {
        t_threshold: f64,
        t_collapse: f64,
    },
    /// Step budget exhausted (should not happen with sane inputs).
    MaxSteps,
}

#[derive(Debug, Clone)]
pub(crate) struct OdeRun {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
    pub outcome: OdeOutcome,
}

fn rk4_step<F: Fn(f64, [f64; 2]) -> [f64; 2]>(rhs: &F, t: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = rhs(t, y);
    let k2 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
    let k3 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
    let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrate `y' = rhs(t, y)` from `(t0, y0)` to `t_end`, recording every
/// accepted step.
pub(crate) fn integrate<F: Fn(f64, [f64; 2]) -> [f64; 2]>(
    rhs: &F,
    t0: f64,
    y0: [f64; 2],
    t_end: f64,
    opts: &OdeOptions,
) -> OdeRun {
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.dt_init.min((t_end - t0).abs().max(1e-12));
    let mut times = vec![t];
    let mut states = vec![y];
    let mut t_threshold: Option<f64> = None;
    let mut steps = 0usize;
    let mut iterations = 0usize;

    let outcome = loop {
        if t >= t_end {
            break OdeOutcome::ReachedEnd;
        }
        // bound attempts, not accepted steps: a state that keeps rejecting
        // at the collapse floor must terminate too
        iterations += 1;
        if steps >= opts.max_steps || iterations >= 2 * opts.max_steps {
            break OdeOutcome::MaxSteps;
        }
        h = h.min(t_end - t);

        // step collapse: only meaningful once the threshold has been crossed
        if h < opts.collapse_rel * t.max(1e-6) {
            if let Some(tc) = t_threshold {
                break OdeOutcome::Escaped {
                    t_threshold: tc,
                    t_collapse: t,
                };
            }
            // collapse without threshold: keep the floor and push on
            h = opts.collapse_rel * t.max(1e-6);
        }

        let full = rk4_step(rhs, t, y, h);
        let half = rk4_step(rhs, t + h / 2.0, rk4_step(rhs, t, y, h / 2.0), h / 2.0);

        let finite = full.iter().chain(half.iter()).all(|v| v.is_finite());
        let mut err_ratio = 0.0f64;
        if finite {
            for i in 0..2 {
                let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(half[i].abs());
                err_ratio = err_ratio.max(((half[i] - full[i]) / 15.0).abs() / scale);
            }
        } else {
            err_ratio = f64::INFINITY;
        }

        if err_ratio <= 1.0 {
            // accept, with local extrapolation
            y = [
                half[0] + (half[0] - full[0]) / 15.0,
                half[1] + (half[1] - full[1]) / 15.0,
            ];
            t += h;
            steps += 1;
            times.push(t);
            states.push(y);

            if t_threshold.is_none() && y[0].abs() > opts.threshold {
                t_threshold = Some(t);
            }
            if y[0].abs() > opts.state_cap {
                // the rhs is about to leave f64 range; the remaining time to
                // the singularity is already microscopic
                break OdeOutcome::Escaped {
                    t_threshold: t_threshold.unwrap_or(t),
                    t_collapse: t,
                };
            }
            let grow = if err_ratio > 0.0 {
                (0.9 * err_ratio.powf(-0.2)).min(4.0)
            } else {
                4.0
            };
            h *= grow;
        } else if err_ratio.is_finite() {
            h *= (0.9 * err_ratio.powf(-0.2)).max(0.1);
        } else {
            h *= 0.1;
        }
    };

    OdeRun {
        times,
        states,
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_oscillator_accuracy() {
        let rhs = |_t: f64, y: [f64; 2]| [y[1], -y[0]];
        let run = integrate(&rhs, 0.0, [1.0, 0.0], 10.0, &OdeOptions::default());
        assert_eq!(run.outcome, OdeOutcome::ReachedEnd);
        let last = run.states.last().unwrap();
        assert_relative_eq!(last[0], 10.0f64.cos(), epsilon = 1e-7);
        assert_relative_eq!(last[1], -(10.0f64.sin()), epsilon = 1e-7);
    }

    #[test]
    fn detects_escape_of_separable_blowup() {
        // y' = y^2 from y(0)=1 escapes at t = 1
        let rhs = |_t: f64, y: [f64; 2]| [y[0] * y[0], 0.0];
        let run = integrate(&rhs, 0.0, [1.0, 0.0], 10.0, &OdeOptions::default());
        match run.outcome {
            OdeOutcome::Escaped { t_collapse, .. } => {
                assert_relative_eq!(t_collapse, 1.0, epsilon = 1e-6);
            }
            other => panic!("expected escape, got {other:?}"),
        }
    }
}
