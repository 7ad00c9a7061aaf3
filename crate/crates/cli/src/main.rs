//! Command-line driver: quality sweeps, degree curves, squeezing
//! concentration, entanglement routing and the bundled reference checks.
//!
//! Exit codes: 0 on success, 1 on config or I/O errors, 2 on bad command
//! lines (clap), 3 when a `route` run ends NOT_FOUND_WITHIN_BUDGET.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cvnet_core::graph::RngSeed;
use cvnet_core::routing::{self, Verdict};
use cvnet_core::runner::{
    self, default_routing_suite, emit, render, CurveModel, DegreeCurveSpec, Model, Objective,
    OutFormat, Report, RoutingCase, SpectrumSource, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "cvnet",
    version,
    about = "Gaussian cluster states on complex networks: quality optimization and entanglement routing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

impl OutputArgs {
    fn write(&self, report: &impl Report) -> anyhow::Result<()> {
        let format = OutFormat::parse(&self.format)?;
        match &self.out {
            Some(path) => emit(report, format, path)?,
            None => {
                use std::io::Write;
                // tolerate downstream consumers closing the pipe early
                if let Err(e) = std::io::stdout().write_all(render(report, format).as_bytes()) {
                    if e.kind() != std::io::ErrorKind::BrokenPipe {
                        return Err(e.into());
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Ensemble quality sweep over a model parameter grid
    Sweep {
        /// Graph model: ba, er, ws:<k> or catalog:<name>
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        /// Comma-separated parameter grid (m for ba, p for er/ws)
        #[arg(long, default_value = "")]
        param: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Spectrum: <file>, uniform:<lo>,<hi> or standin
        #[arg(long, default_value = "uniform:-14,-3")]
        spectrum: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Optimized quality as a function of average degree, one curve per model
    DegreeCurve {
        /// Comma-separated curve models: ba, er, ws:<p>
        #[arg(long, default_value = "ws:0,ws:0.25,ws:0.5,ba,er")]
        model: String,
        #[arg(long, default_value_t = 1000)]
        nodes: usize,
        /// Comma-separated average-degree grid
        #[arg(long, default_value = "4,8,16,32,64,128")]
        param: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value = "uniform:-14,-3")]
        spectrum: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Concentrate squeezing on the nullifiers of a node pair
    Concentrate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 48)]
        nodes: usize,
        #[arg(long, default_value = "")]
        param: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Target pair, e.g. 11,12
        #[arg(long, default_value = "11,12")]
        pair: String,
        #[arg(long, default_value = "standin")]
        spectrum: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve one routing problem described by a JSON config file
    Route {
        /// JSON file: graph, alice, bob, pair, squeezing_db, optional ES overrides
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the default feasibility suite (grid, fully connected, dual rail)
    RouteSuite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify the bundled reference routing solutions at 3, 5 and 7 dB
    VerifyAppendix,
}

fn parse_f64_list(s: &str) -> anyhow::Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number `{t}` in list"))
        })
        .collect()
}

fn parse_pair(s: &str) -> anyhow::Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        bail!("expected `n1,n2`, got `{s}`");
    }
    Ok((
        parts[0].trim().parse().with_context(|| format!("bad node `{}`", parts[0]))?,
        parts[1].trim().parse().with_context(|| format!("bad node `{}`", parts[1]))?,
    ))
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Sweep {
            model,
            nodes,
            param,
            trials,
            spectrum,
            seed,
            output,
        } => {
            let spec = SweepSpec {
                model: Model::parse(&model)?,
                nodes,
                params: parse_f64_list(&param)?,
                trials,
                spectrum: SpectrumSource::parse(&spectrum)?,
                objective: Objective::Uniform,
                seed: RngSeed(seed),
            };
            let report = runner::run_quality_sweep(&spec)?;
            output.write(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::DegreeCurve {
            model,
            nodes,
            param,
            trials,
            spectrum,
            seed,
            output,
        } => {
            let models = model
                .split(',')
                .map(CurveModel::parse)
                .collect::<Result<Vec<_>, _>>()?;
            let k_grid = parse_f64_list(&param)?
                .into_iter()
                .map(|k| k.round() as usize)
                .collect();
            let spec = DegreeCurveSpec {
                nodes,
                models,
                k_grid,
                trials,
                spectrum: SpectrumSource::parse(&spectrum)?,
                seed: RngSeed(seed),
            };
            let report = runner::run_degree_sweep(&spec)?;
            output.write(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Concentrate {
            model,
            nodes,
            param,
            trials,
            pair,
            spectrum,
            seed,
            output,
        } => {
            let (n1, n2) = parse_pair(&pair)?;
            let spec = SweepSpec {
                model: Model::parse(&model)?,
                nodes,
                params: parse_f64_list(&param)?,
                trials,
                spectrum: SpectrumSource::parse(&spectrum)?,
                objective: Objective::Concentrate { n1, n2 },
                seed: RngSeed(seed),
            };
            let report = runner::run_concentration(&spec)?;
            output.write(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Route { config, seed, output } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let case: RoutingCase =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
            let report = runner::run_routing_case(&case, RngSeed(seed))?;
            let verdict = report.solution.verdict;
            output.write(&report)?;
            eprintln!(
                "route {}: {} (f_opt = {:.3e}, residual = {:.3e})",
                case.graph, verdict, report.solution.f_opt, report.solution.residual_max
            );
            if verdict == Verdict::NotFoundWithinBudget {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::RouteSuite { seed, output } => {
            let report = runner::run_routing_suite(&default_routing_suite(), RngSeed(seed))?;
            output.write(&report)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::VerifyAppendix => {
            let mut all_ok = true;
            let cases = [
                ("6-node grid, pair (1,4)", true),
                ("fully connected, pair (1,2)", false),
            ];
            for (label, is_grid) in cases {
                let (u_a, u_b) = if is_grid {
                    routing::fixtures::grid6_unitaries()
                } else {
                    routing::fixtures::fully_connected6_unitaries()
                };
                for db in [3.0, 5.0, 7.0] {
                    let prob = if is_grid {
                        routing::fixtures::grid6_problem(db)?
                    } else {
                        routing::fixtures::fully_connected6_problem(db)?
                    };
                    let checks = routing::verify_unitaries(
                        &u_a,
                        &u_b,
                        &prob,
                        routing::fixtures::PRINTED_PRECISION_TOL,
                    )?;
                    let ok = checks.all_pass();
                    all_ok &= ok;
                    println!(
                        "{label} @ {db} dB: residual {:.3e}, block dev {:.3e}, unitarity {:.3e} -> {}",
                        checks.residual_max,
                        checks.channel_block_dev,
                        checks.unitarity_defect,
                        if ok { "PASS" } else { "FAIL" }
                    );
                }
            }
            if all_ok {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
