use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cimvp::bench::{self, RunReport, DEFAULT_SEED};
use cimvp::config_io;
use cimvp::exec::Mode;
use cimvp::trace_io;
use cimvp_core::config::{preset_by_name, PRESET_NAMES};
use cimvp_core::workload::{parse_layer, LayerSpec, WorkloadMode};

#[derive(Parser)]
#[command(name = "cimvp", version, about = "Parallel virtual platform for compute-in-memory accelerators")]
struct Cli {
    /// More log output (-v info, -vv per-round debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Workloads {
    Cpu,
    Cim,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one benchmark and write its report.
    Run {
        /// Config file, or preset:uniform / preset:load-oriented.
        #[arg(long)]
        config: String,
        /// Layer id (e.g. googlenet-conv1) or custom:h,w,p.
        #[arg(long, value_parser = layer_arg)]
        layer: LayerSpec,
        #[arg(long, value_enum)]
        workload: WorkloadArg,
        #[arg(long, value_enum, default_value = "seq")]
        mode: Mode,
        #[arg(long)]
        quantum_insns: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Full JSON report.
        #[arg(long)]
        report: PathBuf,
        /// Append a CSV summary row here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Transaction trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Combine a sequential and a parallel report.
    Compare {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        pll: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sequential and parallel runs over several quanta, as CSV.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long, value_parser = layer_arg)]
        layer: LayerSpec,
        /// Quanta in instructions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        quanta: Vec<u64>,
        #[arg(long, value_enum, default_value = "both")]
        workload: Workloads,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full comparison reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List or print the built-in platform presets.
    Presets {
        #[command(subcommand)]
        cmd: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    List,
    Show { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum WorkloadArg {
    Cpu,
    Cim,
}

impl From<WorkloadArg> for WorkloadMode {
    fn from(w: WorkloadArg) -> Self {
        match w {
            WorkloadArg::Cpu => WorkloadMode::Cpu,
            WorkloadArg::Cim => WorkloadMode::Cim,
        }
    }
}

fn layer_arg(s: &str) -> Result<LayerSpec, String> {
    parse_layer(s).ok_or_else(|| format!("unknown layer {s:?}; use a table id or custom:h,w,p"))
}

type Res = Result<(), Box<dyn std::error::Error>>;

fn write_json<T: serde::Serialize>(path: &PathBuf, v: &T) -> Res {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn append_csv(path: &PathBuf, row: &str) -> Res {
    let fresh = !path.exists();
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{}", RunReport::CSV_HEADER)?;
    }
    writeln!(f, "{row}")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Cmd) -> Res {
    match cmd {
        Cmd::Run {
            config,
            layer,
            workload,
            mode,
            quantum_insns,
            seed,
            report,
            csv,
            trace,
        } => {
            let cfg = config_io::resolve(&config)?;
            let run = bench::execute(&cfg, &layer, workload.into(), mode, quantum_insns, seed)?;
            write_json(&report, &run.report)?;
            if let Some(p) = csv {
                append_csv(&p, &run.report.csv_row())?;
            }
            if let Some(p) = trace {
                fs::write(p, trace_io::to_csv(&run.trace, run.platform.names()))?;
            }
            let r = &run.report;
            println!(
                "{} {} {} {}: verified, simulated {} ps, {} instructions, {} transactions, {} sync waits, {:.1} ms",
                r.config,
                r.layer.id(),
                r.workload.as_str(),
                r.mode.as_str(),
                r.simulated_time_ps,
                r.instruction_count,
                r.transactions,
                r.sync_waits,
                r.wall_clock_ms
            );
        }
        Cmd::Compare { seq, pll, out } => {
            let seq: RunReport = serde_json::from_str(&fs::read_to_string(&seq)?)?;
            let pll: RunReport = serde_json::from_str(&fs::read_to_string(&pll)?)?;
            let c = bench::compare(&seq, &pll)?;
            println!(
                "speedup {:.3} (reference: uniform {}, load-oriented {})",
                c.speedup, c.reference.uniform, c.reference.load_oriented
            );
            if let Some(p) = out {
                write_json(&p, &c)?;
            }
        }
        Cmd::Sweep {
            config,
            layer,
            quanta,
            workload,
            seed,
            out,
            json,
        } => {
            let cfg = config_io::resolve(&config)?;
            let modes: &[WorkloadMode] = match workload {
                Workloads::Cpu => &[WorkloadMode::Cpu],
                Workloads::Cim => &[WorkloadMode::Cim],
                Workloads::Both => &[WorkloadMode::Cpu, WorkloadMode::Cim],
            };
            let rows = bench::quantum_sweep(&cfg, &layer, modes, &quanta, seed)?;
            let csv = bench::sweep_csv(&rows);
            match out {
                Some(p) => fs::write(p, &csv)?,
                None => print!("{csv}"),
            }
            if let Some(p) = json {
                write_json(&p, &rows)?;
            }
        }
        Cmd::Presets { cmd } => match cmd {
            PresetCmd::List => {
                for n in PRESET_NAMES {
                    let c = preset_by_name(n).unwrap();
                    println!("{n}: {} segments, {} channels", c.segments.len(), c.channels.len());
                }
            }
            PresetCmd::Show { name } => {
                let c = preset_by_name(&name).ok_or(config_io::ConfigError::UnknownPreset(name))?;
                println!("{}", config_io::to_json(&c));
            }
        },
    }
    Ok(())
}
