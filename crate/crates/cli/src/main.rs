//! `issue-lifetime`: ingest tracker dumps, build labelled datasets, select
//! features, train trees and evaluate them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use issue_lifetime::cfs::select_with_details;
use issue_lifetime::eval::{crossval10, render_report, round_robin, EvalReport, DEFAULT_SEED};
use issue_lifetime::ingest::{
    build_dataset, duplicate_ids, load_records, parse_dump, save_records,
};
use issue_lifetime::pipeline::{
    run_pipeline_in, run_report_in, version_and_provenance, RunConfig, OUTPUT_DIR_ENV, TOOL_VERSION,
};
use issue_lifetime::tabular::{load_csv, project, Dataset};
use issue_lifetime::targets::{binarize, drop_sticky};
use issue_lifetime::tree::{learn, min_partition};
use issue_lifetime::ThresholdSpec;

#[derive(Parser)]
#[command(
    name = "issue-lifetime",
    version,
    about = "Predict how long issues stay open"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-issue features from an issues.json/commits.json dump.
    Ingest {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label records le/gt against a day threshold; sticky issues are dropped.
    Binarize {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_parser = parse_days)]
        days: ThresholdSpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run correlation-based feature selection on a labelled CSV.
    SelectFeatures {
        #[arg(long)]
        data: PathBuf,
        /// Write the symmetrical-uncertainty matrix here.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// Write the discretization cut points here.
        #[arg(long)]
        dump_cuts: Option<PathBuf>,
    },
    /// Select features and fit a tree on a labelled CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        tree_out: Option<PathBuf>,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Evaluate labelled CSVs without a config.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Evaluate a config and write the report tables.
    Report(RunArgs),
    /// Full pipeline from a config, including intermediate artifacts.
    Run(RunArgs),
    /// Print the version.
    Version,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Stratified 10-fold cross-validation on one dataset.
    Local {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_days)]
        days: ThresholdSpec,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Round robin: train on all other datasets, test on each in turn.
    Cross {
        #[arg(long, num_args = 2.., required = true)]
        data: Vec<PathBuf>,
        #[arg(long, value_parser = parse_days)]
        days: ThresholdSpec,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config and the environment.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_days(s: &str) -> std::result::Result<ThresholdSpec, String> {
    let days: u32 = s
        .parse()
        .map_err(|_| format!("not a number of days: {s}"))?;
    ThresholdSpec::new(days).map_err(|e| e.to_string())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<Dataset> {
    load_csv(path).with_context(|| format!("loading {}", path.display()))
}

fn ingest(dump: &Path, out: &Path) -> Result<()> {
    let dump = parse_dump(dump)?;
    for d in &dump.diagnostics {
        eprintln!("warning: {d}");
    }
    let records = build_dataset(&dump)?;
    let dups = duplicate_ids(&records);
    if !dups.is_empty() {
        eprintln!("warning: duplicate issue ids: {}", dups.join(", "));
    }
    save_records(&records, out)?;
    let sticky = records.iter().filter(|r| r.is_sticky()).count();
    println!(
        "{}: {} issues ({sticky} still open) -> {}",
        dump.project,
        records.len(),
        out.display()
    );
    Ok(())
}

fn binarize_cmd(records: &Path, days: ThresholdSpec, out: &Path) -> Result<()> {
    let all = load_records(records)?;
    let total = all.len();
    let kept = drop_sticky(all);
    let d = binarize(&kept, days)?;
    let pos = d.labels().iter().filter(|l| l.is_positive()).count();
    d.save_csv(out)?;
    println!(
        "{} rows ({} sticky dropped), {pos} le / {} gt at {days} days",
        d.len(),
        total - kept.len(),
        d.len() - pos
    );
    Ok(())
}

fn select_cmd(data: &Path, matrix: Option<&Path>, cuts_out: Option<&Path>) -> Result<()> {
    let d = load(data)?;
    let (score, corr, cuts) = select_with_details(&d)?;
    if let Some(path) = matrix {
        let mut buf = Vec::new();
        corr.write_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    if let Some(path) = cuts_out {
        let mut text = String::from("feature,cuts\n");
        for c in &cuts {
            let joined: Vec<String> = c.cuts().iter().map(f64::to_string).collect();
            text.push_str(&format!("{},{}\n", c.feature, joined.join(";")));
        }
        write_file(path, text.as_bytes())?;
    }
    println!("merit {:.6}", score.merit);
    for f in &score.subset {
        println!("{f}");
    }
    Ok(())
}

fn train_cmd(data: &Path, tree_out: Option<&Path>, json_out: Option<&Path>) -> Result<()> {
    let d = load(data)?;
    let (score, _, _) = select_with_details(&d)?;
    let keep: Vec<&str> = score.subset.iter().map(String::as_str).collect();
    let tree = learn(&project(&d, &keep)?, min_partition(d.len())?)?;
    let text = tree.render();
    if let Some(path) = tree_out {
        write_file(path, text.as_bytes())?;
    }
    if let Some(path) = json_out {
        write_file(path, tree.to_json()?.as_bytes())?;
    }
    println!("features: {}", score.subset.join(", "));
    print!("{text}");
    Ok(())
}

fn eval_cmd(cmd: EvalCommand) -> Result<()> {
    let rows = match cmd {
        EvalCommand::Local { data, days, seed } => {
            vec![crossval10(&stem(&data), days, &load(&data)?, seed)?]
        }
        EvalCommand::Cross { data, days } => {
            let mut sets = Vec::new();
            for path in &data {
                let name = stem(path);
                if sets.iter().any(|(n, _)| *n == name) {
                    bail!("two datasets named {name:?}");
                }
                sets.push((name, load(path)?));
            }
            round_robin(&sets, days)?
        }
    };
    print!("{}", render_report(&EvalReport::new(rows), &[]).text);
    Ok(())
}

fn run_cmd(args: RunArgs, full: bool) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let out = args.out.unwrap_or_else(|| cfg.resolved_output_dir());
    let summary = if full {
        run_pipeline_in(&cfg, &out)?
    } else {
        run_report_in(&cfg, &out)?
    };
    eprintln!("{}", version_and_provenance(&cfg));
    let rendered = render_report(&summary.report, &[]);
    print!("{}", rendered.text);
    eprintln!(
        "{} files written under {} (override with --out or {OUTPUT_DIR_ENV})",
        summary.files_written.len(),
        summary.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest { dump, out } => ingest(&dump, &out),
        Command::Binarize { records, days, out } => binarize_cmd(&records, days, &out),
        Command::SelectFeatures {
            data,
            dump_matrix,
            dump_cuts,
        } => select_cmd(&data, dump_matrix.as_deref(), dump_cuts.as_deref()),
        Command::Train {
            data,
            tree_out,
            json_out,
        } => train_cmd(&data, tree_out.as_deref(), json_out.as_deref()),
        Command::Eval(cmd) => eval_cmd(cmd),
        Command::Report(args) => run_cmd(args, false),
        Command::Run(args) => run_cmd(args, true),
        Command::Version => {
            println!("issue-lifetime {TOOL_VERSION}");
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn days_must_be_a_known_threshold() {
        assert_eq!(parse_days("14").unwrap().days(), 14);
        assert!(parse_days("5").is_err());
        assert!(parse_days("week").is_err());
    }

    #[test]
    fn dataset_names_come_from_file_stems() {
        assert_eq!(stem(Path::new("data/hadoop.csv")), "hadoop");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
