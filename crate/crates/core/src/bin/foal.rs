//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 a verification or
//! benchmark tolerance was exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use foal::classifier::ClassifierState;
use foal::harness::{run_experiment, RunConfig};
use foal::io::results::format_f64;
use foal::io::{parse_manifest, read_state, write_results, write_state, ResultsDocument};
use foal::metrics::coefficient_of_variation;
use foal::synthetic::{generate, SyntheticSpec, MANIFEST_NAME};
use foal::verification::{bench_updates, verify, VerifyOptions, COST_RATIO_LIMIT, EQUIVALENCE_TOLERANCE};

#[derive(Parser)]
#[command(name = "foal", version, about = "Forward-only analytic class-incremental learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the one-pass protocol over a manifest and write a results document.
    Run {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        output: PathBuf,
        /// Also save the trained classifier.
        #[arg(long)]
        save_state: Option<PathBuf>,
        /// Record per-batch wall time in the results (breaks byte-level
        /// reproducibility).
        #[arg(long)]
        timing: bool,
    },
    /// Check recursive updates against the joint ridge solution.
    Verify {
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        tasks: usize,
        #[arg(long, default_value_t = 10)]
        batches: usize,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long, default_value_t = 4)]
        classes_per_task: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Fix samples per task so different batch sizes split one stream.
        #[arg(long)]
        samples_per_task: Option<usize>,
    },
    /// Time repeated updates and check that the cost stays flat.
    Bench {
        #[arg(long, default_value_t = 1000)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        batch_size: usize,
        #[arg(long, default_value_t = 1000)]
        updates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print per-class weight norms and their coefficient of variation.
    Norms {
        #[arg(long, conflicts_with = "manifest")]
        state: Option<PathBuf>,
        #[command(flatten)]
        run: OptionalRunArgs,
    },
    /// Write a synthetic feature stream and manifest.
    MakeSynthetic {
        #[arg(long, default_value_t = 5)]
        tasks: usize,
        #[arg(long, default_value_t = 4)]
        classes_per_task: usize,
        #[arg(long, default_value_t = 50)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 20)]
        test_samples_per_class: usize,
        #[arg(long, default_value_t = 4)]
        block_count: usize,
        #[arg(long, default_value_t = 32)]
        block_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        signal: f64,
        #[arg(long, default_value_t = 0.35)]
        noise: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunFlags {
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1000)]
    proj_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    batch_size: usize,
    #[arg(long)]
    no_fusion: bool,
    #[arg(long)]
    no_smooth_projection: bool,
}

impl RunFlags {
    fn config(&self, record_timing: bool) -> RunConfig {
        RunConfig {
            gamma: self.gamma,
            projection_dim: self.proj_dim,
            seed: self.seed,
            batch_size: self.batch_size,
            fusion_enabled: !self.no_fusion,
            smooth_projection_enabled: !self.no_smooth_projection,
            record_timing,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    flags: RunFlags,
}

#[derive(Args)]
struct OptionalRunArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    flags: RunFlags,
}

enum Failure {
    Invalid(String),
    Tolerance(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn train(manifest: &PathBuf, config: &RunConfig) -> Result<(String, foal::Experiment), Failure> {
    config.validate()?;
    let manifest = parse_manifest(manifest)?;
    let experiment = run_experiment(&manifest, config)?;
    Ok((manifest.dataset, experiment))
}

fn print_norms(state: &ClassifierState) -> Result<(), Failure> {
    if state.num_classes() == 0 {
        return Err(Failure::Invalid("classifier has not learned any class".into()));
    }
    let norms = state.weight_column_norms();
    println!("class,norm");
    for (class, norm) in &norms {
        println!("{class},{}", format_f64(*norm));
    }
    let values: Vec<f64> = norms.iter().map(|(_, n)| *n).collect();
    match coefficient_of_variation(&values) {
        Some(cv) => println!("cv,{}", format_f64(cv)),
        None => println!("cv,n/a"),
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            run,
            output,
            save_state,
            timing,
        } => {
            let config = run.flags.config(timing);
            let (dataset, experiment) = train(&run.manifest, &config)?;
            write_results(&ResultsDocument::new(dataset, &experiment), &output)?;
            if let Some(path) = save_state {
                write_state(&experiment.classifier, path)?;
            }
            let report = &experiment.report;
            println!("A_avg = {}", format_f64(report.a_avg));
            println!("A_last = {}", format_f64(report.a_last));
            match report.f_final {
                Some(f) => println!("F_final = {}", format_f64(f)),
                None => println!("F_final = n/a"),
            }
            Ok(())
        }
        Command::Verify {
            dim,
            tasks,
            batches,
            batch_size,
            classes_per_task,
            seed,
            gamma,
            samples_per_task,
        } => {
            if dim == 0 || tasks == 0 || batch_size == 0 || classes_per_task == 0 {
                return Err(Failure::Invalid("dimensions and counts must be positive".into()));
            }
            if samples_per_task.unwrap_or(batches * batch_size) == 0 {
                return Err(Failure::Invalid("stream has no samples".into()));
            }
            let report = verify(&VerifyOptions {
                dim,
                tasks,
                batches,
                batch_size,
                classes_per_task,
                seed,
                gamma,
                samples_per_task,
            })?;
            println!("samples = {}", report.samples);
            println!("updates = {}", report.updates);
            println!("relative_error = {:e}", report.relative_error);
            println!("r_identity_error = {:e}", report.r_identity_error);
            println!("r_asymmetry = {:e}", report.asymmetry);
            println!("r_positive_definite = {}", report.positive_definite);
            println!("w_digest = {}", report.weight_digest);
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Tolerance(format!(
                    "relative error {:e} exceeds {EQUIVALENCE_TOLERANCE:e}",
                    report.relative_error
                )))
            }
        }
        Command::Bench {
            dim,
            batch_size,
            updates,
            seed,
        } => {
            if dim == 0 || batch_size == 0 || updates == 0 {
                return Err(Failure::Invalid("dim, batch size and updates must be positive".into()));
            }
            let report = bench_updates(dim, batch_size, updates, seed)?;
            println!("dim = {dim}, batch_size = {batch_size}, updates = {updates}");
            println!("median_update_us = {:.1}", report.median().as_secs_f64() * 1e6);
            println!("first_decile_median_us = {:.1}", report.first_decile_median.as_secs_f64() * 1e6);
            println!("last_decile_median_us = {:.1}", report.last_decile_median.as_secs_f64() * 1e6);
            println!("ratio = {:.3}", report.ratio());
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Tolerance(format!(
                    "last-decile median is {:.3}x the first (limit {COST_RATIO_LIMIT})",
                    report.ratio()
                )))
            }
        }
        Command::Norms { state, run } => {
            let classifier = match (state, run.manifest) {
                (Some(path), _) => read_state(path)?,
                (None, Some(manifest)) => train(&manifest, &run.flags.config(false))?.1.classifier,
                (None, None) => {
                    return Err(Failure::Invalid("pass either --state or --manifest".into()));
                }
            };
            print_norms(&classifier)
        }
        Command::MakeSynthetic {
            tasks,
            classes_per_task,
            samples_per_class,
            test_samples_per_class,
            block_count,
            block_dim,
            seed,
            signal,
            noise,
            out_dir,
        } => {
            if tasks == 0
                || classes_per_task == 0
                || samples_per_class == 0
                || test_samples_per_class == 0
                || block_count == 0
                || block_dim == 0
            {
                return Err(Failure::Invalid("all counts must be positive".into()));
            }
            let spec = SyntheticSpec {
                tasks,
                classes_per_task,
                samples_per_class,
                test_samples_per_class,
                block_count,
                block_dim,
                seed,
                signal,
                noise,
            };
            generate(&spec, &out_dir)?;
            println!("{}", out_dir.join(MANIFEST_NAME).display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Tolerance(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(2)
        }
    }
}
