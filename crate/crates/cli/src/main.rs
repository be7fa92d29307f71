use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pendula_core::asymptotics::{
    default_horizon, fit_log_model, predicted_trace, regularized_k, transition_n, KMethod,
};
use pendula_core::emit::{fmt17, intervals_json, trace_svg, write_csv};
use pendula_core::floquet::{certificate_of, classify, monodromy_u, monodromy_w, Monodromy};
use pendula_core::lame::{
    antiperiodic_determinant, antiperiodic_eigenvalues, ince_coeffs, instability_interval,
    lame_monodromy, q_lambda, verdict, Family, LameParams,
};
use pendula_core::orbit::{chain_check, orbit_samples, period, ChainData};
use pendula_core::potential::{system_params, validate, Potential};
use pendula_core::scan::{find_intervals, scan_trace, Grid, RunConfig};
use pendula_core::Error as CoreError;

#[derive(Parser)]
#[command(name = "pendula", version, about = "Linear stability of synchronous motions of coupled particles in a periodic potential")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// `pendulum`, `cos3`, or `fourier:c0,c1,...`
    #[arg(long, global = true, default_value = "pendulum")]
    potential: String,
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    kappa: f64,
    /// Integrator and quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also write a trace-vs-ln(E) plot (scan, intervals, asymptotics).
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Worker threads for sweeps; all cores by default.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Log,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Limit,
    Integral,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 1e-6)]
    emin: f64,
    #[arg(long, default_value_t = 100.0)]
    emax: f64,
    #[arg(long, default_value_t = 500)]
    points: usize,
    #[arg(long, value_enum, default_value = "log")]
    grid: GridArg,
}

#[derive(Subcommand)]
enum Command {
    /// Check the potential's normalization and maximum.
    Validate {
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
    /// Period T(E) of the synchronous rotation.
    Period {
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',', allow_negative_numbers = true)]
        energy: Vec<f64>,
    },
    /// Sampled synchronous trajectory.
    Orbit {
        #[arg(long, allow_negative_numbers = true)]
        energy: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        periods: f64,
    },
    /// Period-2 embedding of the binary into an N-particle ring.
    Chain {
        #[arg(long, allow_negative_numbers = true)]
        energy: f64,
        #[arg(long, default_value_t = 4)]
        particles: usize,
        #[arg(long, default_value_t = 10.0)]
        periods: f64,
        /// Initial half-separation of the two sublattices.
        #[arg(long, default_value_t = 0.1)]
        split: f64,
    },
    /// Floquet matrix at one energy.
    Monodromy {
        #[arg(long, allow_negative_numbers = true)]
        energy: f64,
        /// Tangent channel instead of the relative one.
        #[arg(long)]
        tangent: bool,
        /// Evaluate the large-energy certificate on this many directions.
        #[arg(long)]
        certificate: Option<usize>,
    },
    /// Trace of the relative-channel monodromy over an energy grid.
    Scan(ScanArgs),
    /// Instability intervals detected on an energy grid.
    Intervals(ScanArgs),
    /// Small-energy constants and the log-periodic fit.
    Asymptotics {
        #[arg(long, default_value_t = 1e-8)]
        emin: f64,
        #[arg(long, default_value_t = 1e-3)]
        emax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, value_enum, default_value = "limit")]
        method: MethodArg,
        /// Heteroclinic horizon; 40/λ by default.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Lamé band edges (`--n --k2 [--lambda]`) or the verdict at `--energy`.
    Lame {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        k2: Option<f64>,
        #[arg(long = "lambda")]
        lam: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
    },
}

/// Where the main output goes.
fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

fn emit_json(g: &Global, v: &Value) -> Result<()> {
    let mut w = sink(&g.out)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    Ok(())
}

fn monodromy_json(m: &Monodromy) -> Value {
    json!({
        "entries": m.entries(),
        "trace": m.trace(),
        "det": m.det(),
        "det_residual": m.det_residual,
        "period": m.period,
    })
}

fn run_config(g: &Global, potential: &Potential, s: &ScanArgs) -> RunConfig {
    let mut cfg = RunConfig::new(potential.clone(), g.kappa, s.emin, s.emax, s.points);
    cfg.grid = match s.grid {
        GridArg::Log => Grid::Log,
        GridArg::Linear => Grid::Linear,
    };
    cfg.tol = g.tol;
    cfg.workers = g.workers;
    cfg.out = g.out.clone();
    cfg.svg = g.svg.clone();
    cfg
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if !(g.tol > 0.0) {
        bail!(CoreError::Config(format!("tolerance must be positive, got {}", g.tol)));
    }
    let pot: Potential = g.potential.parse()?;
    let json_out = g.format == Some(Format::Json);

    match &cli.command {
        Command::Validate { grid } => {
            let report = validate(&pot, *grid);
            if json_out {
                emit_json(g, &serde_json::to_value(&report)?)?;
            } else {
                let mut w = sink(&g.out)?;
                for c in &report.checks {
                    let mark = if c.passed { "ok  " } else { "FAIL" };
                    writeln!(w, "{mark} {:<18} {}", c.name, c.detail)?;
                }
            }
            if !report.all_passed() {
                bail!(CoreError::Config(format!("potential `{pot}` failed validation")));
            }
        }
        Command::Period { energy } => {
            let rows = energy
                .iter()
                .map(|&e| period(&pot, e, g.tol))
                .collect::<pendula_core::Result<Vec<_>>>()?;
            if json_out {
                emit_json(g, &serde_json::to_value(&rows)?)?;
            } else {
                let mut w = sink(&g.out)?;
                writeln!(w, "E,T,tau,T_sqrtE,error_estimate")?;
                for r in rows {
                    writeln!(
                        w,
                        "{},{},{},{},{:.3e}",
                        fmt17(r.energy),
                        fmt17(r.period),
                        fmt17(r.tau),
                        fmt17(r.period * r.energy.sqrt()),
                        r.error_estimate
                    )?;
                }
            }
        }
        Command::Orbit { energy, samples, periods } => {
            if *samples < 1 || !(*periods > 0.0) {
                bail!(CoreError::Config("samples and periods must be positive".into()));
            }
            let t = period(&pot, *energy, g.tol)?.period * periods;
            let times: Vec<f64> = (0..=*samples).map(|i| t * i as f64 / *samples as f64).collect();
            let states = orbit_samples(&pot, *energy, &times, g.tol)?;
            if json_out {
                emit_json(g, &serde_json::to_value(&states)?)?;
            } else {
                let mut w = sink(&g.out)?;
                writeln!(w, "t,p,p_dot,energy")?;
                for s in states {
                    writeln!(w, "{},{},{},{}", fmt17(s.t), fmt17(s.p), fmt17(s.p_dot), fmt17(s.energy))?;
                }
            }
        }
        Command::Chain { energy, particles, periods, split } => {
            let t = period(&pot, *energy, g.tol)?.period;
            let dev = chain_check(
                &pot,
                g.kappa,
                *energy,
                ChainData::PeriodTwo { split: *split },
                *particles,
                periods * t,
                g.tol,
            )?;
            let v = json!({
                "energy": energy, "particles": particles, "periods": periods,
                "split": split, "max_deviation": dev,
            });
            if json_out {
                emit_json(g, &v)?;
            } else {
                let mut w = sink(&g.out)?;
                writeln!(w, "max deviation over {periods} periods: {dev:.3e}")?;
            }
        }
        Command::Monodromy { energy, tangent, certificate } => {
            let m = if *tangent {
                monodromy_u(&pot, *energy, g.tol)?
            } else {
                monodromy_w(&pot, g.kappa, *energy, g.tol)?
            };
            let class = classify(&m, 1e-6)?;
            let cert = certificate.map(|n| certificate_of(&m, g.kappa, n));
            if json_out {
                let mut v = monodromy_json(&m);
                v["class"] = json!(class.label());
                v["certificate"] = serde_json::to_value(cert)?;
                emit_json(g, &v)?;
            } else {
                let mut w = sink(&g.out)?;
                let e = m.entries();
                writeln!(w, "[[{:.12e}, {:.12e}],", e[0][0], e[0][1])?;
                writeln!(w, " [{:.12e}, {:.12e}]]", e[1][0], e[1][1])?;
                writeln!(w, "trace {:.15}", m.trace())?;
                writeln!(w, "det   {:.15} (residual {:.2e})", m.det(), m.det_residual)?;
                writeln!(w, "class {}", class.label())?;
                if let Some(c) = cert {
                    writeln!(
                        w,
                        "certificate {} (min {:.6e}, leading T·min(1,2κ) = {:.6e})",
                        c.positive, c.min_value, c.leading
                    )?;
                }
            }
        }
        Command::Scan(s) => {
            let cfg = run_config(g, &pot, s);
            let samples = scan_trace(&cfg)?;
            if json_out {
                emit_json(g, &serde_json::to_value(&samples)?)?;
            } else {
                write_csv(sink(&g.out)?, &samples)?;
            }
            if let Some(p) = &g.svg {
                write_file(p, &trace_svg(&samples))?;
            }
            let failed = samples.iter().filter(|s| !s.is_ok()).count();
            if failed > 0 {
                eprintln!("warning: {failed} point(s) failed; marked `failed` in the table");
            }
        }
        Command::Intervals(s) => {
            let cfg = run_config(g, &pot, s);
            let samples = scan_trace(&cfg)?;
            let intervals = find_intervals(&samples, &cfg)?;
            if g.format == Some(Format::Csv) {
                let mut w = sink(&g.out)?;
                writeln!(w, "e_lo,e_hi,sign,collapsed")?;
                for i in &intervals {
                    writeln!(w, "{},{},{},{}", fmt17(i.e_lo), fmt17(i.e_hi), i.sign, i.collapsed)?;
                }
            } else {
                emit_json(g, &intervals_json(&intervals, &samples, &cfg))?;
            }
            if let Some(p) = &g.svg {
                write_file(p, &trace_svg(&samples))?;
            }
        }
        Command::Asymptotics { emin, emax, points, method, horizon } => {
            let params = system_params(&pot, g.kappa)?;
            let method = match method {
                MethodArg::Limit => KMethod::Limit,
                MethodArg::Integral => KMethod::Integral,
            };
            let k = regularized_k(&pot, method, g.tol.max(1e-13))?;
            let h = match horizon {
                Some(h) => *h,
                None => default_horizon(&pot)?,
            };
            let n = transition_n(&pot, g.kappa, h, g.tol)?;
            let scan = ScanArgs { emin: *emin, emax: *emax, points: *points, grid: GridArg::Log };
            let cfg = run_config(g, &pot, &scan);
            let samples = scan_trace(&cfg)?;
            let fit = fit_log_model(&samples, &params)?;
            let nu = params.omega / params.lambda_saddle;
            let model = |ln_e: f64| fit.a * (nu * ln_e - fit.phi).cos();
            if json_out {
                let rows: Vec<Value> = samples
                    .iter()
                    .map(|s| {
                        json!({
                            "E": s.energy, "ln_E": s.ln_e, "trace": s.trace,
                            "det_residual": s.det_residual,
                            "class": s.class.map(|c| c.label()),
                            "predicted": predicted_trace(&n, &params, s.energy, &k),
                            "fit_residual": s.trace - model(s.ln_e),
                        })
                    })
                    .collect();
                emit_json(
                    g,
                    &json!({
                        "params": params, "regularized_period": k, "transition": n,
                        "amplitude_bound": n.amplitude(params.omega), "fit": fit, "samples": rows,
                    }),
                )?;
            } else {
                let mut w = sink(&g.out)?;
                writeln!(w, "E,ln_E,trace,det_residual,class,predicted,fit_residual")?;
                for s in &samples {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        fmt17(s.energy),
                        fmt17(s.ln_e),
                        fmt17(s.trace),
                        fmt17(s.det_residual),
                        s.class.map_or("failed", |c| c.label()),
                        fmt17(predicted_trace(&n, &params, s.energy, &k)),
                        fmt17(s.trace - model(s.ln_e)),
                    )?;
                }
                eprintln!("lambda {:.12} omega {:.12}", params.lambda_saddle, params.omega);
                eprintln!("K {:.12} (limit {:.12})", k.k, k.limit);
                eprintln!(
                    "N [[{:.10}, {:.10}], [{:.10}, {:.10}]] det {:.3e} rate {:.4}",
                    n.n11,
                    n.n12,
                    n.n21,
                    n.n22,
                    n.det() - 1.0,
                    n.convergence_rate
                );
                eprintln!(
                    "fit a {:.6} phi {:.6} rms {:.3e}; free period {:.6} (predicted {:.6}) a {:.6}",
                    fit.a, fit.phi, fit.rms_residual, fit.free.period_ln_e, fit.period_ln_e, fit.free.a
                );
            }
            if let Some(p) = &g.svg {
                write_file(p, &trace_svg(&samples))?;
            }
        }
        Command::Lame { n, k2, lam, energy } => {
            if let Some(e) = energy {
                let v = verdict(g.kappa, *e)?;
                let iv = instability_interval(g.kappa);
                if json_out {
                    let mut out = serde_json::to_value(&v)?;
                    out["interval"] = serde_json::to_value(iv)?;
                    emit_json(g, &out)?;
                } else {
                    let mut w = sink(&g.out)?;
                    writeln!(w, "k2 {:.15}  lambda {:.15}", v.params.k2, v.params.lam)?;
                    writeln!(w, "band gap ({:.15}, {:.15})", v.gap.0, v.gap.1)?;
                    writeln!(w, "interval ({}, {})", iv.e_lo, iv.e_hi)?;
                    writeln!(w, "{}", if v.unstable { "unstable" } else { "stable" })?;
                }
                if iv.truncated {
                    eprintln!("warning: kappa <= 1/2, interval truncated at E = 0");
                }
            } else {
                let (Some(n), Some(k2)) = (n, k2) else {
                    bail!(CoreError::Config("lame needs --n and --k2, or --energy".into()));
                };
                let edges = antiperiodic_eigenvalues(*n, *k2)?;
                let mut v = serde_json::to_value(&edges)?;
                if let Some(l) = lam {
                    let p = LameParams { n: *n, k2: *k2, lam: *l };
                    let c = ince_coeffs(&p);
                    let size = *n as usize;
                    v["coeffs"] = serde_json::to_value(c)?;
                    v["q_minus_half"] = json!(q_lambda(&c, -0.5).0);
                    v["det_cosine"] = json!(antiperiodic_determinant(Family::Cosine, &c, size));
                    v["det_sine"] = json!(antiperiodic_determinant(Family::Sine, &c, size));
                    v["monodromy_trace"] = json!(lame_monodromy(&p, g.tol)?.trace());
                }
                if json_out {
                    emit_json(g, &v)?;
                } else {
                    let mut w = sink(&g.out)?;
                    writeln!(w, "antiperiodic cosine {:?}", edges.antiperiodic_plus)?;
                    writeln!(w, "antiperiodic sine   {:?}", edges.antiperiodic_minus)?;
                    if lam.is_some() {
                        let c = &v["coeffs"];
                        writeln!(w, "ince a {} b {} c {} d {}", c["a"], c["b"], c["c"], c["d"])?;
                        writeln!(w, "det cosine {}  det sine {}", v["det_cosine"], v["det_sine"])?;
                        writeln!(w, "monodromy trace over 2K {}", v["monodromy_trace"])?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.downcast_ref::<CoreError>().is_some_and(CoreError::is_numerical);
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}
