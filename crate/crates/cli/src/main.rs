//! `blowup-lab`: drive the blow-up machinery from the command line.
//!
//! Subcommands: `besselfn`, `compare`, `kato-check`, `lifespan`, `simulate`,
//! `sweep`, `fit`. Problem parameters come from a `key = value` config file
//! (keys n, p, alpha, beta, mu1, mu2, eps, R); flags of the same names
//! override file values.

use blowup_core::comparison::ComparisonSetup;
use blowup_core::kato::{self, KatoInstance, ProfileFn};
use blowup_core::lifespan;
use blowup_core::params::{self, ProblemParams};
use blowup_core::pde::{InitialData, Profile, Simulation, SolverConfig};
use blowup_core::specfun;
use blowup_core::sweep::{self, SweepPlan};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "blowup-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a modified Bessel function (value and log-value).
    Besselfn {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        x: f64,
    },
    /// Emit t, J, A, F0_ode columns for the comparison machinery.
    Compare {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, value_enum, default_value_t = ProfileKind::Bump)]
        profile: ProfileKind,
    },
    /// Validate a Kato instance from a config and print the certificate.
    KatoCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the lifespan equation. With --eps-bar ζ(ε̄) is solved directly;
    /// otherwise the constant C is assembled from the calibrated envelope
    /// for bump data and the bound 3ζ(Cε) is reported at the problem's ε
    /// (override with --eps).
    Lifespan {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "eps-bar")]
        eps_bar: Option<f64>,
    },
    /// Run the radial solver until blow-up or the horizon; write the trace
    /// CSV and a JSON sidecar with the blow-up metadata.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        dr: Option<f64>,
        #[arg(long = "u-max")]
        u_max: Option<f64>,
        #[arg(long = "dt-min")]
        dt_min: Option<f64>,
        #[arg(long, value_enum, default_value_t = ProfileKind::Bump)]
        profile: ProfileKind,
    },
    /// Sweep ε geometrically, compare numerical lifespans against the
    /// theorem bound, and write the result table.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "eps-start")]
        eps_start: f64,
        #[arg(long = "eps-stop")]
        eps_stop: f64,
        #[arg(long = "eps-count")]
        eps_count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "t-max", default_value_t = 40.0)]
        t_max: f64,
        #[arg(long)]
        dr: Option<f64>,
        #[arg(long = "dt-min")]
        dt_min: Option<f64>,
    },
    /// Fit the lifespan curve c·[log(1/ε)]^{2/(1-α)} to a sweep CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also fit the exponent (diagnostic; the main fit keeps it frozen).
        #[arg(long = "free-exponent")]
        free_exponent: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    I,
    K,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    /// (1-(r/R)²)₊
    Bump,
    /// (1-(r/R)²)₊⁴
    Bump4,
}

impl ProfileKind {
    fn data(self) -> InitialData {
        let f = match self {
            ProfileKind::Bump => Profile::Bump,
            ProfileKind::Bump4 => Profile::BumpPow(4),
        };
        InitialData {
            f,
            g: Profile::Zero,
        }
    }
}

/// Problem parameters: config file plus same-name override flags.
#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "R")]
    r_support: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<ProblemParams, String> {
        let base = match &self.config {
            Some(path) => params::read_config(path).map_err(|e| e.to_string())?,
            None => BTreeMap::new(),
        };
        let mut overrides = BTreeMap::new();
        let mut put = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                overrides.insert(key.to_string(), v);
            }
        };
        put("n", self.n);
        put("p", self.p);
        put("alpha", self.alpha);
        put("beta", self.beta);
        put("mu1", self.mu1);
        put("mu2", self.mu2);
        put("eps", self.eps);
        put("R", self.r_support);
        ProblemParams::from_key_values(&base, &overrides).map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Besselfn { kind, nu, x } => {
            let (value, ln_value, name) = match kind {
                Kind::I => {
                    let ln = specfun::bessel_i_ln(nu, x).map_err(|e| e.to_string())?;
                    (ln.exp(), ln, "i")
                }
                Kind::K => {
                    let ln = specfun::bessel_k_ln(nu, x).map_err(|e| e.to_string())?;
                    (ln.exp(), ln, "k")
                }
            };
            println!(
                "{}",
                json!({"kind": name, "nu": nu, "x": x, "value": value, "ln_value": ln_value})
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Compare {
            params,
            t_end,
            out,
            points,
            profile,
        } => {
            let params = params.resolve()?;
            let data = profile.data();
            let norms = data.norms(params.n, params.r_support);
            let setup = ComparisonSetup::new(&params, &norms).map_err(|e| e.to_string())?;
            let delta = (params.p - 1.0) / 4.0;
            let env = setup.calibrate_envelope(delta).map_err(|e| e.to_string())?;
            let trace = blowup_core::comparison::f0_lower_ode(
                &params,
                params.eps * norms.f_l1,
                params.eps * norms.g_l1,
                t_end,
                1e-3,
            )
            .map_err(|e| e.to_string())?;

            let mut csv = String::from("t,J,A,F0_ode\n");
            for i in 0..=points {
                let t = setup.t0 + (t_end - setup.t0) * i as f64 / points as f64;
                let j = setup
                    .j_eval(t)
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let a = if t >= env.t1 {
                    setup
                        .envelope_a(&env, t)
                        .map(|v| v.to_string())
                        .unwrap_or_default()
                } else {
                    String::new()
                };
                let f0 = trace.value_at(t).map(|v| v.to_string()).unwrap_or_default();
                csv.push_str(&format!("{t},{j},{a},{f0}\n"));
            }
            std::fs::write(&out, csv).map_err(|e| e.to_string())?;
            eprintln!(
                "wrote {} ({} rows; t0 = {}, T1 = {}, T2 = {})",
                out.display(),
                points + 1,
                setup.t0,
                env.t1,
                env.t2
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::KatoCheck { config } => {
            let (instance, candidate) = parse_kato_config(&config)?;
            let floor = instance
                .t0_tilde
                .max(instance.t1_tilde().map_err(|e| e.to_string())?);
            let report = instance
                .certify(candidate.unwrap_or(floor))
                .map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string(&report).map_err(|e| e.to_string())?);
            Ok(ExitCode::SUCCESS)
        }

        Command::Lifespan { params, eps_bar } => {
            let params = params.resolve()?;
            match eps_bar {
                Some(eb) => {
                    let mut r = lifespan::zeta_solve(&params, eb).map_err(|e| e.to_string())?;
                    let asym = lifespan::asymptote_at_eps_bar(&params, eb)
                        .map_err(|e| e.to_string())?;
                    print_lifespan_line(&params, &mut r, eb, None, asym);
                }
                None => {
                    // assemble C from the calibrated envelope for bump data
                    let eps = params.eps;
                    let data = InitialData::bump();
                    let norms = data.norms(params.n, params.r_support);
                    let setup =
                        ComparisonSetup::new(&params, &norms).map_err(|e| e.to_string())?;
                    let delta = (params.p - 1.0) / 4.0;
                    let env = setup.calibrate_envelope(delta).map_err(|e| e.to_string())?;
                    let c_const = lifespan::assemble_c_const(&params, &env);
                    let mut r = lifespan::theorem_bound(&params, &env, &norms, eps)
                        .map_err(|e| e.to_string())?;
                    let asym =
                        lifespan::log_asymptote(&params, eps, c_const).unwrap_or(f64::NAN);
                    print_lifespan_line(&params, &mut r, c_const * eps, Some(c_const), asym);
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Simulate {
            params,
            out,
            t_end,
            dr,
            u_max,
            dt_min,
            profile,
        } => {
            let params = params.resolve()?;
            let mut config = SolverConfig::default();
            if let Some(t) = t_end {
                config.t_max = t;
            }
            if let Some(dr) = dr {
                config.dr = dr;
            }
            if let Some(u) = u_max {
                config.u_max = u;
            }
            if let Some(d) = dt_min {
                config.dt_min = d;
            }
            let mut sim =
                Simulation::new(&params, &profile.data(), config).map_err(|e| e.to_string())?;
            let trace = sim.run_until_blowup();
            std::fs::write(&out, sweep::write_trace_csv(&trace)).map_err(|e| e.to_string())?;

            let sidecar = json!({
                "blow_up": trace.blow_up.is_some(),
                "t_lo": trace.blow_up.map(|b| b.t_lo),
                "t_hi": trace.blow_up.map(|b| b.t_hi),
                "steps": trace.steps,
                "dr": trace.dr,
                "dt_final": trace.dt_final,
            });
            let sidecar_path = out.with_extension("json");
            std::fs::write(&sidecar_path, sidecar.to_string()).map_err(|e| e.to_string())?;
            eprintln!("wrote {} and {}", out.display(), sidecar_path.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Sweep {
            params,
            eps_start,
            eps_stop,
            eps_count,
            out,
            t_max,
            dr,
            dt_min,
        } => {
            let params = params.resolve()?;
            let mut solver = SolverConfig::default();
            if let Some(dr) = dr {
                solver.dr = dr;
            }
            if let Some(d) = dt_min {
                solver.dt_min = d;
            }
            let plan = SweepPlan::geometric(
                params,
                eps_start,
                eps_stop,
                eps_count,
                t_max,
                solver,
                InitialData::bump(),
            )
            .map_err(|e| e.to_string())?;
            let rows = sweep::run_sweep(&plan).map_err(|e| e.to_string())?;
            std::fs::write(&out, sweep::write_sweep_csv(&rows)).map_err(|e| e.to_string())?;

            let all_consistent = rows.iter().all(|r| r.theorem_consistent());
            let sidecar = json!({
                "rows": rows.len(),
                "theorem_consistent": all_consistent,
                "t_max": t_max,
                "dr": plan.solver.dr,
            });
            std::fs::write(out.with_extension("json"), sidecar.to_string())
                .map_err(|e| e.to_string())?;
            eprintln!("wrote {} ({} rows)", out.display(), rows.len());
            Ok(if all_consistent {
                ExitCode::SUCCESS
            } else {
                eprintln!("theorem-consistency violated on at least one row");
                ExitCode::FAILURE
            })
        }

        Command::Fit {
            input,
            alpha,
            config,
            free_exponent,
        } => {
            let alpha = match (alpha, config) {
                (Some(a), _) => a,
                (None, Some(path)) => *params::read_config(&path)
                    .map_err(|e| e.to_string())?
                    .get("alpha")
                    .ok_or("config has no `alpha` key")?,
                (None, None) => return Err("fit needs --alpha or --config".into()),
            };
            let text = std::fs::read_to_string(&input).map_err(|e| e.to_string())?;
            let rows = sweep::parse_sweep_csv(&text).map_err(|e| e.to_string())?;
            let fit = sweep::fit_lifespan_curve(&rows, alpha).map_err(|e| e.to_string())?;
            let mut obj = serde_json::to_value(&fit).map_err(|e| e.to_string())?;
            if free_exponent {
                let (c_free, e_free) =
                    sweep::fit_free_exponent(&rows).map_err(|e| e.to_string())?;
                obj["c_free"] = json!(c_free);
                obj["exponent_free"] = json!(e_free);
            }
            println!("{obj}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_lifespan_line(
    params: &ProblemParams,
    report: &mut lifespan::LifespanReport,
    eps_bar: f64,
    c_const: Option<f64>,
    asymptote: f64,
) {
    println!(
        "{}",
        json!({
            "eps_bar": eps_bar,
            "c_const": c_const,
            "zeta": report.zeta,
            "bound_3zeta": report.bound,
            "residual": report.residual,
            "asymptote": asymptote,
            "asymptote_c": report.asymptote_c,
            "branch": format!("{:?}", report.branch_note),
            "delta_prime": lifespan::delta_prime(params),
            "kappa": lifespan::kappa(params),
            "warnings": report.warnings,
        })
    );
}

/// Kato config: plain `key = value` lines with the function templates
///
/// ```text
/// p = 3
/// delta = 0.5
/// t0_tilde = 0.1
/// f0 = 1
/// f0p = 1
/// # t_double = 1      (required when f0p = 0)
/// # t_tilde = 2       (candidate; default max(T~0, T~1))
/// a = power 1.0 1.0           # amp (1+t)^exp
/// b = power 1.0 -0.5
/// m = const 1.0               # or: rise lo hi rate | decay lo hi rate
/// ```
fn parse_kato_config(path: &Path) -> Result<(KatoInstance, Option<f64>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut numbers: BTreeMap<String, f64> = BTreeMap::new();
    let mut profiles: BTreeMap<String, (ProfileFn, Option<(f64, f64)>)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", idx + 1))?;
        let key = key.trim().to_lowercase();
        let value = value.trim();
        if let Ok(num) = value.parse::<f64>() {
            numbers.insert(key, num);
            continue;
        }
        let mut words = value.split_whitespace();
        let template = words.next().ok_or_else(|| format!("line {}: empty value", idx + 1))?;
        let args: Vec<f64> = words
            .map(|w| w.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", idx + 1))?;
        let need = |n: usize| -> Result<(), String> {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!(
                    "line {}: template `{template}` needs {n} numbers, got {}",
                    idx + 1,
                    args.len()
                ))
            }
        };
        let entry: (ProfileFn, Option<(f64, f64)>) = match template {
            "power" => {
                need(2)?;
                (kato::power_profile(args[0], args[1]), None)
            }
            "exppow" => {
                need(3)?;
                (kato::exp_power_profile(args[0], args[1], args[2]), None)
            }
            "const" => {
                need(1)?;
                (kato::const_profile(args[0]), Some((args[0], args[0])))
            }
            "rise" => {
                need(3)?;
                (
                    kato::rising_multiplier(args[0], args[1], args[2]),
                    Some((args[0], args[1])),
                )
            }
            "decay" => {
                need(3)?;
                (
                    kato::decaying_multiplier(args[0], args[1], args[2]),
                    Some((args[0], args[1])),
                )
            }
            other => return Err(format!("line {}: unknown template `{other}`", idx + 1)),
        };
        profiles.insert(key, entry);
    }

    let get_num = |key: &str| -> Result<f64, String> {
        numbers
            .get(key)
            .copied()
            .ok_or_else(|| format!("missing numeric key `{key}`"))
    };
    let get_profile = |key: &str| -> Result<(ProfileFn, Option<(f64, f64)>), String> {
        profiles
            .get(key)
            .cloned()
            .ok_or_else(|| format!("missing function key `{key}`"))
    };

    let (a, _) = get_profile("a")?;
    let (b, _) = get_profile("b")?;
    let (m, m_bounds) = get_profile("m")?;
    let (m_lo, m_hi) = match (numbers.get("m_lo"), numbers.get("m_hi"), m_bounds) {
        (Some(&lo), Some(&hi), _) => (lo, hi),
        (_, _, Some(bounds)) => bounds,
        _ => return Err("multiplier bounds: give m_lo/m_hi or use a bounded template".into()),
    };

    let instance = KatoInstance {
        a,
        b,
        m,
        m_lo,
        m_hi,
        delta: get_num("delta")?,
        p: get_num("p")?,
        f0: get_num("f0")?,
        f0p: get_num("f0p")?,
        t_double: numbers.get("t_double").copied(),
        t0_tilde: get_num("t0_tilde")?,
    };
    Ok((instance, numbers.get("t_tilde").copied()))
}
