//! Command-line front end: run simulations, query oracles, audit traces,
//! and sweep seed grids.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subcoord::baselines::{brute_force_optimal, isolated_greedy, sequential_greedy};
use subcoord::engine::{counters, run, Scenario, Trace};
use subcoord::error::Error;
use subcoord::experiments::{summarize, sweep};
use subcoord::metrics::{approximation_gap, verify_bound_chain, BoundReport};
use subcoord::scenario::{topology_from_spec, ScenarioFile};
use subcoord::Timestep;

#[derive(Parser)]
#[command(
    name = "subcoord",
    about = "Distributed online submodular coordination simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol and write a trace CSV plus a text summary.
    Run {
        /// Scenario file (see the repository README for the format).
        #[arg(long)]
        scenario: PathBuf,
        /// Topology preset (complete:N, edgeless:N, ring:N, path:N,
        /// erdos:N:P:SEED) or a topology file path.
        #[arg(long)]
        topology: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short = 'T')]
        horizon: usize,
        /// Trace CSV output path.
        #[arg(long)]
        trace: PathBuf,
        /// Summary output path (printed to stdout when omitted).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Print optimal, sequential-greedy, and isolated joint actions.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        /// Timestep for the greedy oracles (and the optimum unless
        /// --horizon is given).
        #[arg(long, default_value_t = 1)]
        t: Timestep,
        /// Maximize the optimum summed over 1..=horizon instead of at t.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Re-audit a trace CSV: bound report and inequality-chain check.
    Report {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        topology: String,
        /// Trace CSV produced by `run`.
        #[arg(long)]
        trace: PathBuf,
        /// Bound-report CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// How many evenly spaced steps to verify the chain on.
        #[arg(long, default_value_t = 50)]
        chain_samples: usize,
    },
    /// Run a seed grid and print per-seed and aggregate statistics.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        topology: String,
        #[arg(long, short = 'T')]
        horizon: usize,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_scenario(
    path: &PathBuf,
    topology: &str,
    horizon: usize,
    seed: u64,
) -> Result<Scenario, Error> {
    let file = ScenarioFile::load(path)?;
    let topology = topology_from_spec(topology)?;
    let (ground, objective, scale) = file.build(horizon)?;
    let scenario = Scenario {
        topology,
        ground,
        objective,
        scale,
        horizon,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn render_summary(scenario: &Scenario, trace: &Trace, report: Option<&BoundReport>) -> String {
    let mut out = String::new();
    let c = counters(trace);
    let _ = writeln!(out, "agents {}", trace.num_agents);
    let _ = writeln!(out, "horizon {}", trace.horizon);
    let _ = writeln!(out, "seed {}", trace.seed);
    let _ = writeln!(out, "reward_scale {}", scenario.scale.max_reward());
    let _ = writeln!(out, "mean_value {}", trace.mean_value());
    let _ = writeln!(out, "tail_mean_value_10pct {}", trace.tail_mean_value(0.1));
    let _ = writeln!(out, "msgs_per_agent_step_mean {}", c.msgs_mean);
    let _ = writeln!(out, "msgs_per_agent_step_max {}", c.msgs_max);
    let _ = writeln!(out, "evals_per_agent_step_mean {}", c.evals_mean);
    let _ = writeln!(out, "two_evals_per_feed {}", c.two_evals_per_feed);
    match report {
        Some(r) => {
            let _ = writeln!(out, "curvature {}", r.curvature);
            let _ = writeln!(out, "opt_mean_value {}", r.opt_mean_value);
            for (i, reg) in r.regret.iter().enumerate() {
                let _ = writeln!(out, "regret_agent_{i} {reg}");
            }
            for (i, coin) in r.coin_mean.iter().enumerate() {
                let _ = writeln!(out, "coin_mean_agent_{i} {coin}");
            }
            let _ = writeln!(out, "regret_rate {}", r.regret_rate);
            let _ = writeln!(out, "bound_rhs {}", r.rhs);
            let _ = writeln!(out, "bound_slack {}", r.slack);
        }
        None => {
            let _ = writeln!(
                out,
                "bound_report skipped (joint action space beyond the brute-force guard)"
            );
        }
    }
    out
}

fn render_report_csv(report: &BoundReport) -> String {
    let mut out = String::from("metric,value\n");
    let mut push = |k: &str, v: String| {
        let _ = writeln!(out, "{k},{v}");
    };
    push("horizon", report.horizon.to_string());
    push("mean_value", report.mean_value.to_string());
    push("curvature", report.curvature.to_string());
    push("opt_mean_value", report.opt_mean_value.to_string());
    push(
        "opt_actions",
        report
            .opt_actions
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" "),
    );
    for (i, c) in report.coin_mean.iter().enumerate() {
        push(&format!("coin_mean_agent_{i}"), c.to_string());
    }
    push("coin_total", report.coin_total.to_string());
    for (i, r) in report.regret.iter().enumerate() {
        push(&format!("regret_agent_{i}"), r.to_string());
    }
    push("regret_total", report.regret_total.to_string());
    push("regret_rate", report.regret_rate.to_string());
    push("regret_term", report.regret_term.to_string());
    push("rhs", report.rhs.to_string());
    push("slack", report.slack.to_string());
    out
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            scenario,
            topology,
            seed,
            horizon,
            trace,
            summary,
        } => {
            let scn = load_scenario(&scenario, &topology, horizon, seed)?;
            let result = run(&scn)?;
            std::fs::write(&trace, result.to_csv())?;
            let report =
                approximation_gap(&scn.objective, &result.actions, &scn.ground, &scn.topology);
            let report = match report {
                Ok(r) => Some(r),
                Err(Error::Capacity(_)) => None,
                Err(e) => return Err(e),
            };
            let text = render_summary(&scn, &result, report.as_ref());
            match summary {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            eprintln!("trace written to {}", trace.display());
            Ok(())
        }
        Command::Oracle {
            scenario,
            t,
            horizon,
        } => {
            let file = ScenarioFile::load(&scenario)?;
            let build_horizon = horizon.unwrap_or(t);
            let (ground, objective, _) = file.build(build_horizon.max(t))?;
            let ts: Vec<Timestep> = match horizon {
                Some(h) => (1..=h).collect(),
                None => vec![t],
            };
            let opt = brute_force_optimal(&objective, &ts, &ground)?;
            let order: Vec<usize> = (0..ground.num_agents()).collect();
            let greedy = sequential_greedy(&objective, t, &ground, &order)?;
            let isolated = isolated_greedy(&objective, t, &ground)?;
            println!(
                "optimal   value {:>10}  actions {:?}",
                opt.value, opt.actions
            );
            println!(
                "greedy    value {:>10}  actions {:?}",
                greedy.value, greedy.actions
            );
            println!(
                "isolated  value {:>10}  actions {:?}",
                isolated.value, isolated.actions
            );
            Ok(())
        }
        Command::Report {
            scenario,
            topology,
            trace,
            out,
            chain_samples,
        } => {
            let csv = std::fs::read_to_string(&trace)?;
            let actions = Trace::actions_from_csv(&csv)?;
            let horizon = actions.len();
            let scn = load_scenario(&scenario, &topology, horizon, 0)?;
            let report = approximation_gap(&scn.objective, &actions, &scn.ground, &scn.topology)?;
            let text = render_report_csv(&report);
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }

            let samples = chain_samples.clamp(1, horizon);
            let ts: Vec<Timestep> = (0..samples)
                .map(|k| 1 + k * (horizon - 1) / samples.max(1))
                .collect();
            let chain =
                verify_bound_chain(&scn.objective, &actions, &scn.ground, &scn.topology, &ts)?;
            let bound_ok = report.slack >= -1e-9;
            println!(
                "bound {} (slack {:.6})",
                if bound_ok { "PASS" } else { "FAIL" },
                report.slack
            );
            println!(
                "chain {} (telescope {:.2e}, min slacks: submodular {:.3e}, second-order {:.3e}, complement {:.3e}; curvature link {:.3e}, reported ungated)",
                if chain.all_hold { "PASS" } else { "FAIL" },
                chain.max_telescope_abs,
                chain.min_submodularity_link,
                chain.min_second_order_link,
                chain.min_complement_link,
                chain.min_curvature_link,
            );
            if bound_ok && chain.all_hold {
                Ok(())
            } else {
                Err(Error::Invariant("trace audit failed".into()))
            }
        }
        Command::Sweep {
            scenario,
            topology,
            horizon,
            seeds,
            seed_base,
        } => {
            let scn = load_scenario(&scenario, &topology, horizon, seed_base)?;
            let grid: Vec<u64> = (0..seeds as u64).map(|k| seed_base + k).collect();
            let outcomes = sweep(&scn, &grid)?;
            println!("seed,mean_value,tail_mean_value,regret_total,slack");
            for o in &outcomes {
                println!(
                    "{},{},{},{},{}",
                    o.seed, o.mean_value, o.tail_mean_value, o.report.regret_total, o.report.slack
                );
            }
            let tails: Vec<f64> = outcomes.iter().map(|o| o.tail_mean_value).collect();
            let slacks: Vec<f64> = outcomes.iter().map(|o| o.report.slack).collect();
            let t = summarize(&tails);
            let s = summarize(&slacks);
            println!(
                "aggregate tail_mean {} ± {} (SE), slack {} ± {} (SE), n={}",
                t.mean, t.std_err, s.mean, s.std_err, t.n
            );
            Ok(())
        }
    }
}
