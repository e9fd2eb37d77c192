use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use brigade_cli::eval::{cells_csv, run_sweep, table_csv, SweepSpec};
use brigade_cli::logs::{read_report, replay, write_report};
use brigade_cli::planner::PlannerSpec;
use brigade_cli::server::{serve, AppState};
use brigade_core::content::{content_stats, load_content, stats_csv};
use brigade_core::dispatcher::PromptToggles;
use brigade_core::{run_episode, ContentPack, EpisodeConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "brigade",
    version,
    about = "Multi-agent kitchen simulator and dispatcher harness"
)]
struct Cli {
    /// Content pack JSON; the shipped pack is used when omitted.
    #[arg(long, global = true)]
    pack: Option<PathBuf>,
    /// LLM profile file (TOML) for `llm:<profile>` planners.
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct PromptArgs {
    /// One of full, few_step, no_knowledge, no_feedback.
    #[arg(long, default_value = "full")]
    ablation: String,
    /// Agent count the demonstration is written for.
    #[arg(long)]
    demo_agents: Option<usize>,
    /// Override the level's step budget.
    #[arg(long)]
    max_steps: Option<u32>,
}

impl PromptArgs {
    fn toggles(&self) -> Result<PromptToggles> {
        PromptToggles::ablation(&self.ablation).with_context(|| format!("unknown ablation `{}`", self.ablation))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one episode and write its log.
    Run {
        #[arg(long)]
        level: u32,
        /// Defaults to the level's agent count.
        #[arg(long)]
        agents: Option<usize>,
        /// Task interval in ticks.
        #[arg(long, conflicts_with = "tau_index")]
        tau: Option<u32>,
        /// 1-based index into the level's task intervals (default 1).
        #[arg(long)]
        tau_index: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "greedy")]
        planner: PlannerSpec,
        #[command(flatten)]
        prompt: PromptArgs,
        /// Directory for summary.json and steps.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep levels, agent counts and task intervals over several seeds.
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        level: Vec<u32>,
        #[arg(long, num_args = 1.., required = true)]
        agents: Vec<usize>,
        /// 1-based task interval indices; all five by default.
        #[arg(long, num_args = 1.., default_values_t = [1, 2, 3, 4, 5])]
        tau_index: Vec<usize>,
        #[arg(long, default_value = "greedy")]
        planner: PlannerSpec,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[command(flatten)]
        prompt: PromptArgs,
        /// Per-cell CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Levels-as-columns summary table CSV.
        #[arg(long)]
        table_out: Option<PathBuf>,
    },
    /// Re-run a recorded episode and compare it step by step.
    Replay {
        /// Log directory or a file inside it.
        log: PathBuf,
    },
    /// Per-dish content statistics as CSV.
    Stats {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the human-play session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Persist sessions here and restore them on start.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Step a session with noops for idle humans after this many seconds.
        #[arg(long)]
        turn_deadline_secs: Option<f64>,
    },
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let pack = Arc::new(match &cli.pack {
        Some(p) => load_content(p)?,
        None => ContentPack::shipped(),
    });
    match cli.command {
        Cmd::Run {
            level,
            agents,
            tau,
            tau_index,
            seed,
            planner,
            prompt,
            out,
        } => {
            let spec = pack.level(level).with_context(|| format!("no level {level}"))?;
            let tau_int = match (tau, tau_index) {
                (Some(t), _) => t,
                (None, k) => {
                    let k = k.unwrap_or(1);
                    *spec.tau_int_values.get(k.wrapping_sub(1)).with_context(|| {
                        format!("task interval index {k} is outside 1..={}", spec.tau_int_values.len())
                    })?
                }
            };
            let mut config = EpisodeConfig::for_level(spec, tau_int, seed);
            if let Some(n) = agents {
                config.num_agents = n;
            }
            config.toggles = prompt.toggles()?;
            config.demo_agents = prompt.demo_agents;
            if let Some(t) = prompt.max_steps {
                config.max_steps = t;
            }
            config.planner = planner.to_string();
            if planner.owns_transport_retries() {
                config.transport_retries = 0;
            }
            let mut p = planner.build(seed, cli.profiles.as_deref())?;
            let report = run_episode(&config, pack, &mut p)?;
            if let Some(dir) = &out {
                write_report(dir, &report)?;
            }
            println!(
                "level={} agents={} tau_int={} seed={} planner={} spawned={} completed={} failed={} active={} final_hash={:016x} report_hash={:016x}{}",
                config.level,
                config.num_agents,
                config.tau_int,
                config.seed,
                config.planner,
                report.spawned,
                report.completed,
                report.failed,
                report.active_at_end,
                report.final_hash,
                report.report_hash(),
                report.aborted.as_deref().map(|a| format!(" aborted=\"{a}\"")).unwrap_or_default()
            );
            Ok(if report.aborted.is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Cmd::Eval {
            level,
            agents,
            tau_index,
            planner,
            seeds,
            seed_base,
            prompt,
            out,
            table_out,
        } => {
            let spec = SweepSpec {
                levels: level,
                agent_counts: agents,
                tau_indices: tau_index,
                seeds,
                seed_base,
                planner: planner.clone(),
                profiles: cli.profiles.clone(),
                toggles: prompt.toggles()?,
                demo_agents: prompt.demo_agents,
                max_steps: prompt.max_steps,
            };
            let cells = run_sweep(&spec, pack)?;
            write_or_print(out.as_ref(), &cells_csv(&cells, &planner.to_string(), seeds)?)?;
            if let Some(p) = &table_out {
                write_or_print(Some(p), &table_csv(&cells)?)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { log } => {
            let recorded = read_report(&log)?;
            let outcome = replay(&recorded, pack)?;
            if outcome.diffs.is_empty() {
                println!(
                    "replay matches: {} steps, final_hash={:016x} report_hash={:016x}",
                    outcome.report.steps.len(),
                    outcome.report.final_hash,
                    outcome.report.report_hash()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                for d in &outcome.diffs {
                    match d.tick {
                        Some(t) => println!("diff at tick {t}: {}", d.what),
                        None => println!("diff: {}", d.what),
                    }
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Cmd::Stats { out } => {
            write_or_print(out.as_ref(), &stats_csv(&content_stats(&pack)))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Serve {
            port,
            host,
            data_dir,
            turn_deadline_secs,
        } => {
            let deadline = match turn_deadline_secs {
                Some(s) if !(s > 0.0 && s.is_finite()) => bail!("--turn-deadline-secs must be positive"),
                Some(s) => Some(Duration::from_secs_f64(s)),
                None => None,
            };
            let mut app = AppState::new(pack)
                .with_profiles(cli.profiles.clone())
                .with_turn_deadline(deadline);
            if let Some(dir) = data_dir {
                app = app.with_data_dir(dir)?;
            }
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(addr, Arc::new(app)))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
