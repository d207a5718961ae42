//! Command-line front end: convergence-property checkers, the impossibility
//! falsifier, the replica simulator and the fuzzer.
//!
//! Exit codes: 0 when every check passes (for `falsify-del1`, 0 means the
//! impossibility was witnessed as expected), 1 when a violation or
//! divergence was found, 2 on usage or I/O errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use otree_core::fuzz::{fuzz, FuzzConfig};
use otree_core::it::{sweep_tp1, sweep_tp2, SweepConfig};
use otree_core::legacy::{falsify_del1, impossibility_scenario, sweep_del2, LegacySweepConfig};
use otree_core::projection::check_projections;
use otree_core::sim::{run_scenario, RunReport, Scenario};
use otree_core::tree::Label;

#[derive(Parser)]
#[command(
    name = "otree",
    version,
    about = "Collaborative tree editing: checkers, simulator, fuzzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively verify TP1 over all operation pairs generable from all
    /// small trees.
    CheckTp1 {
        /// Maximum number of generated identifiers per tree.
        #[arg(long, default_value_t = 4)]
        max_ids: usize,
        /// Number of distinct text labels in the enumeration alphabet.
        #[arg(long, default_value_t = 2)]
        labels: usize,
        /// Sweep worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exhaustively verify TP2 over all generable operation triples.
    CheckTp2 {
        #[arg(long, default_value_t = 3)]
        max_ids: usize,
        #[arg(long, default_value_t = 2)]
        labels: usize,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exhaustively verify TP1/TP2 for the path-tree object with strong
    /// deletion.
    CheckLegacy {
        /// Maximum number of edges per enumerated tree.
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
        /// Number of names in the alphabet.
        #[arg(long, default_value_t = 3)]
        alphabet: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Demonstrate that no integration transformation exists once deletion
    /// promotes children: every candidate pair fails TP1 on the
    /// counterexample scenario. Exit 0 means the impossibility held.
    FalsifyDel1 {
        /// Maximum path depth of candidate operations.
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run one scenario file to quiescence and report convergence.
    Simulate {
        scenario: PathBuf,
        /// Override the scenario's schedule seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also replay the trace projections as an oracle.
        #[arg(long)]
        check_projections: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run many seeded random scenarios and shrink any divergence found.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        sites_min: u64,
        #[arg(long, default_value_t = 5)]
        sites_max: u64,
        #[arg(long, default_value_t = 5)]
        ops_min: u64,
        #[arg(long, default_value_t = 15)]
        ops_max: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Re-run the scenario embedded in a saved run report and verify the
    /// report reproduces byte-exactly.
    Replay { report: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(clean) => {
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<bool, String> {
    match command {
        Command::CheckTp1 {
            max_ids,
            labels,
            workers,
            out,
        } => {
            let cfg = sweep_config(max_ids, labels, workers);
            let started = std::time::Instant::now();
            let report = sweep_tp1(&cfg);
            emit_sweep(
                "tp1",
                report.checked,
                started.elapsed(),
                report.violations.iter().map(|v| v.to_string()).collect(),
                &out,
            )?;
            Ok(report.ok())
        }
        Command::CheckTp2 {
            max_ids,
            labels,
            workers,
            out,
        } => {
            let cfg = sweep_config(max_ids, labels, workers);
            let started = std::time::Instant::now();
            let report = sweep_tp2(&cfg);
            emit_sweep(
                "tp2",
                report.checked,
                started.elapsed(),
                report.violations.iter().map(|v| v.to_string()).collect(),
                &out,
            )?;
            Ok(report.ok())
        }
        Command::CheckLegacy {
            max_nodes,
            alphabet,
            out,
        } => {
            let names: Vec<String> = ["a", "b", "c", "d", "e"]
                .iter()
                .take(alphabet.clamp(1, 5))
                .map(|s| s.to_string())
                .collect();
            let cfg = LegacySweepConfig {
                max_nodes,
                alphabet: names,
            };
            let started = std::time::Instant::now();
            let report = sweep_del2(&cfg);
            emit_sweep(
                "legacy-del2",
                report.tp1_checked + report.tp2_checked,
                started.elapsed(),
                report.violations.iter().map(|v| v.to_string()).collect(),
                &out,
            )?;
            Ok(report.ok())
        }
        Command::FalsifyDel1 { depth, out } => {
            let report = falsify_del1(&impossibility_scenario(), depth);
            let payload = FalsifyPayload {
                candidates_per_side: report.candidates_per_side,
                pairs_examined: report.pairs_examined,
                pairs_failed: report.pairs_failed,
                satisfying: report
                    .satisfying
                    .iter()
                    .map(|(a, b)| format!("op1'={a} op2'={b}"))
                    .collect(),
                failures_by_class: report.failures_by_class.clone(),
                exhausted: report.exhausted,
                witnesses: report.sample_witnesses.clone(),
            };
            match out.format {
                Format::Json => write_out(&out, &serde_json::to_string_pretty(&payload).unwrap())?,
                Format::Text => {
                    let mut text = String::new();
                    text.push_str(&report.summary_line());
                    text.push('\n');
                    for (class, n) in &report.failures_by_class {
                        text.push_str(&format!("  case op2' class {class}: {n} pairs fail\n"));
                    }
                    for w in &report.sample_witnesses {
                        text.push_str(&format!("  {w}\n"));
                    }
                    if !report.satisfying.is_empty() {
                        text.push_str("  UNEXPECTED satisfying candidates found!\n");
                    }
                    write_out(&out, &text)?;
                }
            }
            Ok(report.ok())
        }
        Command::Simulate {
            scenario,
            seed,
            check_projections: check_proj,
            out,
        } => {
            let raw = std::fs::read_to_string(&scenario)
                .map_err(|e| format!("reading {}: {e}", scenario.display()))?;
            let mut sc: Scenario =
                serde_json::from_str(&raw).map_err(|e| format!("parsing scenario: {e}"))?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            let report = run_scenario(&sc).map_err(|e| e.to_string())?;
            let mut clean = report.ok();
            if check_proj {
                let check = check_projections(&report);
                if !check.ok() {
                    eprintln!("projection replay mismatches: {:?}", check.mismatches);
                    clean = false;
                }
            }
            emit_run(&report, &out)?;
            Ok(clean)
        }
        Command::Fuzz {
            runs,
            seed,
            sites_min,
            sites_max,
            ops_min,
            ops_max,
            out,
        } => {
            let config = FuzzConfig {
                runs,
                base_seed: seed,
                sites_min,
                sites_max,
                ops_min,
                ops_max,
                ..FuzzConfig::default()
            };
            let summary = fuzz(&config);
            match out.format {
                Format::Json => write_out(&out, &serde_json::to_string_pretty(&summary).unwrap())?,
                Format::Text => {
                    let mut text = format!(
                        "fuzz: runs={} converged={} failures={}\n",
                        summary.runs,
                        summary.converged,
                        summary.failures.len()
                    );
                    for f in &summary.failures {
                        text.push_str(&format!("  seed={}: {}\n", f.scenario.seed, f.detail));
                        if let Some(min) = &f.minimized {
                            text.push_str(&format!(
                                "  minimized: {}\n",
                                serde_json::to_string(min).unwrap()
                            ));
                        }
                    }
                    write_out(&out, &text)?;
                }
            }
            Ok(summary.ok())
        }
        Command::Replay { report } => {
            let raw = std::fs::read_to_string(&report)
                .map_err(|e| format!("reading {}: {e}", report.display()))?;
            let saved: RunReport =
                serde_json::from_str(&raw).map_err(|e| format!("parsing report: {e}"))?;
            let rerun = run_scenario(&saved.scenario).map_err(|e| e.to_string())?;
            let saved_bytes = serde_json::to_string_pretty(&saved).unwrap();
            let rerun_bytes = serde_json::to_string_pretty(&rerun).unwrap();
            if saved_bytes == rerun_bytes {
                println!("replay: identical ({} trace events)", rerun.trace.len());
                Ok(rerun.ok())
            } else {
                println!("replay: MISMATCH");
                Ok(false)
            }
        }
    }
}

#[derive(Serialize)]
struct SweepPayload {
    check: String,
    checked: u64,
    elapsed_ms: u128,
    violations: Vec<String>,
}

#[derive(Serialize)]
struct FalsifyPayload {
    candidates_per_side: u64,
    pairs_examined: u64,
    pairs_failed: u64,
    satisfying: Vec<String>,
    failures_by_class: BTreeMap<String, u64>,
    exhausted: bool,
    witnesses: Vec<String>,
}

fn sweep_config(max_ids: usize, labels: usize, workers: Option<usize>) -> SweepConfig {
    let names = ["a", "b", "c", "d", "e"];
    let tree_labels: Vec<Label> = names
        .iter()
        .take(labels.clamp(1, names.len()))
        .map(|s| Label::text(*s))
        .collect();
    let mut ren_labels = vec![Label::NoValue];
    ren_labels.extend(tree_labels.clone());
    SweepConfig {
        max_ids,
        tree_labels,
        ren_labels,
        workers: workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn emit_sweep(
    check: &str,
    checked: u64,
    elapsed: std::time::Duration,
    violations: Vec<String>,
    out: &OutputArgs,
) -> Result<(), String> {
    match out.format {
        Format::Json => {
            let payload = SweepPayload {
                check: check.to_string(),
                checked,
                elapsed_ms: elapsed.as_millis(),
                violations,
            };
            write_out(out, &serde_json::to_string_pretty(&payload).unwrap())
        }
        Format::Text => {
            let mut text = format!(
                "{check}: {checked} checks in {:.1}s, {} violations\n",
                elapsed.as_secs_f64(),
                violations.len()
            );
            for v in violations.iter().take(20) {
                text.push_str(&format!("  {v}\n"));
            }
            write_out(out, &text)
        }
    }
}

fn emit_run(report: &RunReport, out: &OutputArgs) -> Result<(), String> {
    match out.format {
        Format::Json => write_out(out, &serde_json::to_string_pretty(report).unwrap()),
        Format::Text => {
            let mut text = format!(
                "simulate: sites={} requests={} deliveries={} quiesced={} converged={}\n",
                report.scenario.sites,
                report.stats.requests,
                report.stats.deliveries,
                report.quiesced,
                report.converged
            );
            for r in &report.replicas {
                text.push_str(&format!("  site {}: {}\n", r.site, r.state));
            }
            if let Some(d) = &report.divergence {
                text.push_str(&format!("  divergence: {d}\n"));
            }
            for w in &report.order_divergences {
                text.push_str(&format!("  order divergence: {w}\n"));
            }
            for ev in &report.trace {
                text.push_str(&format!(
                    "  [{}] site {} {:?} {} {}\n",
                    ev.seq,
                    ev.site,
                    ev.kind,
                    ev.request.id,
                    match &ev.integrated {
                        otree_core::ComposedOp::Tree { op } => op.pretty(),
                        otree_core::ComposedOp::Word { id, op } => format!("word[{id}]:{op:?}"),
                    }
                ));
            }
            write_out(out, &text)
        }
    }
}

fn write_out(out: &OutputArgs, content: &str) -> Result<(), String> {
    match &out.output {
        Some(path) => {
            std::fs::write(path, content).map_err(|e| format!("writing {}: {e}", path.display()))
        }
        None => {
            print!("{content}");
            if !content.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}
