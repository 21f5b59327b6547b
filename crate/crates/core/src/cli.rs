//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::graspctl::Verdict;
use crate::pipeline::{
    run_batch, run_pipeline, stage_snapshots, validate_path, write_atomic, PipelineError,
    PipelineSettings,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dexgrasp", version, about = "Transfer generated human grasps to dexterous hands and execute them in simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline on one scene directory.
    Run {
        scene: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run every scene under a directory and write a summary.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check a scene, a scene directory, a hand model or an OBJ mesh.
    Validate { path: PathBuf },
}

#[derive(Debug, Args, Clone)]
pub struct RunFlags {
    /// Output directory.
    #[arg(long, default_value = "dexgrasp-out")]
    pub out: PathBuf,
    /// JSON file with pipeline settings.
    #[arg(long)]
    pub settings: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable the force lock (closing runs to the squeeze pose).
    #[arg(long)]
    pub no_force_lock: bool,
    /// Execute with the generated-image object pose instead of the observed one.
    #[arg(long)]
    pub no_transfer: bool,
    /// Write OBJ snapshots of every geometric stage.
    #[arg(long)]
    pub export_obj: bool,
}

impl RunFlags {
    fn settings(&self) -> Result<PipelineSettings, String> {
        let mut s = match &self.settings {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => PipelineSettings::default(),
        };
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if self.no_force_lock {
            s.run.lock_enabled = false;
        }
        if self.no_transfer {
            s.transfer = false;
        }
        Ok(s)
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn execute(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run { scene, flags } => cmd_run(scene, flags),
        Command::Batch { dir, flags } => cmd_batch(dir, flags),
        Command::Validate { path } => cmd_validate(path),
    }
}

fn pipeline_exit(e: &PipelineError) -> i32 {
    match e {
        PipelineError::Stage { .. } => EXIT_FAILURE,
        PipelineError::Fixture(_) | PipelineError::HandModel { .. } => EXIT_USAGE,
    }
}

fn write_or_report(path: &Path, bytes: &[u8]) -> bool {
    match write_atomic(path, bytes) {
        Ok(()) => true,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", path.display());
            false
        }
    }
}

pub fn cmd_run(scene: &Path, flags: &RunFlags) -> i32 {
    let settings = match flags.settings() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if !scene.is_dir() {
        eprintln!("error: scene directory not found: {}", scene.display());
        return EXIT_USAGE;
    }
    let run = match run_pipeline(scene, &settings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return pipeline_exit(&e);
        }
    };
    let report = serde_json::to_vec_pretty(&run.report).expect("report serializes");
    let mut trace = Vec::new();
    run.execution.write_trace_csv(&mut trace).expect("in-memory csv");
    if !write_or_report(&flags.out.join("report.json"), &report) || !write_or_report(&flags.out.join("trace.csv"), &trace) {
        return EXIT_FAILURE;
    }
    if flags.export_obj {
        for (name, text) in stage_snapshots(&run) {
            if !write_or_report(&flags.out.join("obj").join(name), text.as_bytes()) {
                return EXIT_FAILURE;
            }
        }
    }
    let forces: Vec<String> = run.report.execution.final_forces.iter().map(|f| format!("{f:.3}")).collect();
    println!(
        "{}: {} (target {:.2} N, final forces [{}] N)",
        run.report.scene,
        run.report.verdict,
        run.report.target_force,
        forces.join(", ")
    );
    if run.report.verdict == Verdict::Stable {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

pub fn cmd_batch(dir: &Path, flags: &RunFlags) -> i32 {
    let settings = match flags.settings() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if !dir.is_dir() {
        eprintln!("error: scene directory not found: {}", dir.display());
        return EXIT_USAGE;
    }
    let summary = match run_batch(dir, &settings, Some(&flags.out)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    let csv = summary.to_csv().expect("in-memory csv");
    if !write_or_report(&flags.out.join("summary.json"), &json) || !write_or_report(&flags.out.join("summary.csv"), csv.as_bytes()) {
        return EXIT_FAILURE;
    }
    for s in &summary.scenes {
        match (&s.verdict, &s.error) {
            (Some(v), _) => println!("{}: {v}", s.name),
            (None, Some(e)) => println!("{}: failed ({e})", s.name),
            (None, None) => println!("{}: failed", s.name),
        }
    }
    println!(
        "{} scenes, {} stable, {} unstable, {} damaged, {} failed; success rate {:.3}",
        summary.scene_count, summary.stable, summary.unstable, summary.damaged, summary.failed, summary.success_rate
    );
    if summary.failed > 0 {
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}

pub fn cmd_validate(path: &Path) -> i32 {
    let diagnostics = validate_path(path);
    if diagnostics.is_empty() {
        println!("{}: ok", path.display());
        return EXIT_OK;
    }
    for d in &diagnostics {
        println!("{d}");
    }
    EXIT_USAGE
}
