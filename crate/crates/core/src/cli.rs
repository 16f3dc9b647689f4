//! Command-line front end. Data goes to files or stdout, diagnostics to
//! stderr; every command is deterministic in its arguments.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::decompose::{self as dec, CostComparison};
use crate::io;
use crate::linalg::haar_random_unitary;
use crate::robustness::{self, CalibrationOptions, SizeSweep, SweepResult, TrialConfig};
use crate::svg::{Chart, Point, Series};

#[derive(Debug, Parser)]
#[command(name = "mmdecomp", version, about = "Decompose unitaries into m x m blocks and study their noise robustness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factor a unitary from a matrix file into a plan file
    Decompose {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
        /// Non-zero threshold (default 1e-9 * max|U| * n)
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Rebuild the unitary described by a plan file
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a plan against a matrix
    Verify {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        /// Max entrywise error accepted (default 1e-9 * n)
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Write a Haar-random unitary
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fidelity of the full unitary against component fidelity at fixed n
    SweepNoise(SweepNoiseArgs),
    /// Fidelity of the full unitary against n at a calibrated component fidelity
    SweepSize(SweepSizeArgs),
    /// Compare the linear cost of m x m blocks with the 2 x 2 mesh
    Cost {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        cm: f64,
        #[arg(long)]
        c2: f64,
    },
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    #[arg(long, default_value_t = 100)]
    pub matrices: usize,
    #[arg(long, default_value_t = 20)]
    pub perturbations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

impl TrialArgs {
    fn config(&self) -> TrialConfig {
        TrialConfig {
            n_matrices: self.matrices,
            n_perturbations: self.perturbations,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepNoiseArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "m-list", value_delimiter = ',', required = true)]
    pub m_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigmas: Vec<f64>,
    #[command(flatten)]
    pub trials: TrialArgs,
}

#[derive(Debug, Args)]
pub struct SweepSizeArgs {
    #[arg(long = "m-list", value_delimiter = ',', required = true)]
    pub m_list: Vec<usize>,
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long = "target-fq", default_value_t = 0.95)]
    pub target_fq: f64,
    #[arg(long = "fq-tol", default_value_t = 0.0005)]
    pub fq_tol: f64,
    /// Component draws per calibration probe
    #[arg(long = "calibration-trials", default_value_t = CalibrationOptions::default().trials_per_probe)]
    pub calibration_trials: usize,
    #[command(flatten)]
    pub trials: TrialArgs,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Runs one command, writing its stdout report to `out`.
pub fn run(cli: Cli, out: &mut impl std::io::Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Decompose { input, m, out: path, tol } => {
            let u = io::matrix_from_json(&read(&input)?)?;
            let plan = dec::decompose(&u, m, tol)?;
            write(&path, &io::plan_to_json(&plan)?)?;
            let n = u.rows();
            let report = dec::verify(&plan, &u, 1e-9 * n as f64)?;
            writeln!(out, "factors: {}", report.factor_count)?;
            writeln!(out, "bound: {}", report.bound)?;
            writeln!(out, "max_error: {:.3e}", report.max_error)?;
            writeln!(out, "fidelity: {:.15}", report.fidelity)?;
            if !(report.within_tolerance && report.bound_satisfied) {
                bail!("reconstruction check failed: {report:?}");
            }
        }
        Command::Reconstruct { input, out: path } => {
            let plan = io::plan_from_json(&read(&input)?)?;
            write(&path, &io::matrix_to_json(&dec::reconstruct(&plan))?)?;
        }
        Command::Verify { plan, matrix, tol } => {
            let plan = io::plan_from_json(&read(&plan)?)?;
            let u = io::matrix_from_json(&read(&matrix)?)?;
            let tol = tol.unwrap_or(1e-9 * plan.n() as f64);
            let report = dec::verify(&plan, &u, tol)?;
            writeln!(out, "max_error: {:.3e}", report.max_error)?;
            writeln!(out, "fidelity: {:.15}", report.fidelity)?;
            writeln!(out, "factors: {} (bound {})", report.factor_count, report.bound)?;
            writeln!(out, "bound_satisfied: {}", report.bound_satisfied)?;
            writeln!(out, "within_tolerance: {}", report.within_tolerance)?;
            if !(report.within_tolerance && report.bound_satisfied) {
                bail!("plan does not reproduce the matrix within {tol:.3e}");
            }
        }
        Command::Random { n, seed, out: path } => {
            write(&path, &io::matrix_to_json(&haar_random_unitary(n, seed)?)?)?;
        }
        Command::SweepNoise(args) => {
            let cfg = args.trials.config();
            let rows = robustness::sweep_noise(args.n, &args.m_list, &args.sigmas, &cfg)?;
            let meta = vec![
                "command=sweep-noise".to_string(),
                format!("n={}", args.n),
                format!("m_list={}", join(&args.m_list)),
                format!("sigmas={}", join(&args.sigmas)),
                format!("matrices={} perturbations={} seed={}", cfg.n_matrices, cfg.n_perturbations, cfg.seed),
                "fq=pooled over all perturbed factors including remainder blocks".to_string(),
                "samples=F_U samples per row (matrices x perturbations)".to_string(),
            ];
            write(&args.trials.out, &io::sweep_to_csv(&meta, &rows))?;
            if let Some(svg) = &args.trials.svg {
                write(svg, &noise_chart(args.n, &rows).render())?;
            }
        }
        Command::SweepSize(args) => {
            let cfg = args.trials.config();
            let opts = CalibrationOptions {
                trials_per_probe: args.calibration_trials,
                ..Default::default()
            };
            let sweep = robustness::sweep_size_with(
                &args.m_list,
                &args.n_list,
                args.target_fq,
                args.fq_tol,
                &cfg,
                &opts,
            )?;
            let mut meta = vec![
                "command=sweep-size".to_string(),
                format!("m_list={}", join(&args.m_list)),
                format!("n_list={}", join(&args.n_list)),
                format!("target_fq={} fq_tol={}", args.target_fq, args.fq_tol),
                format!("calibration_trials={}", opts.trials_per_probe),
                format!("matrices={} perturbations={} seed={}", cfg.n_matrices, cfg.n_perturbations, cfg.seed),
                "fq=pooled over all perturbed factors including remainder blocks".to_string(),
                "samples=F_U samples per row (matrices x perturbations)".to_string(),
            ];
            meta.extend(calibration_lines(&sweep));
            write(&args.trials.out, &io::sweep_to_csv(&meta, &sweep.results))?;
            if let Some(svg) = &args.trials.svg {
                write(svg, &size_chart(args.target_fq, &sweep.results).render())?;
            }
        }
        Command::Cost { n, m, cm, c2 } => {
            let bound = dec::factor_count_bound(n, m)?;
            let cmp = dec::cost_compare(n, m, cm, c2, bound)?;
            write!(out, "{}", cost_table(&cmp, cm, c2))?;
        }
    }
    Ok(())
}

fn calibration_lines(sweep: &SizeSweep) -> Vec<String> {
    sweep
        .calibrations
        .iter()
        .map(|(m, c)| {
            format!(
                "calibrated m={m} sigma={:.16e} fq_mean={} fq_stderr={} trials={}",
                c.sigma,
                io::format_sig12(c.achieved.mean),
                io::format_sig12(c.achieved.std_error),
                c.achieved.samples
            )
        })
        .collect()
}

fn group_by_m(rows: &[SweepResult]) -> Vec<(usize, Vec<&SweepResult>)> {
    let mut groups: Vec<(usize, Vec<&SweepResult>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(m, _)| *m == r.m) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.m, vec![r])),
        }
    }
    groups
}

pub fn noise_chart(n: usize, rows: &[SweepResult]) -> Chart {
    Chart {
        title: format!("Reconstruction fidelity, n = {n}"),
        x_label: "component fidelity F_Q".into(),
        y_label: "reconstruction fidelity F_U".into(),
        series: group_by_m(rows)
            .into_iter()
            .map(|(m, g)| Series {
                label: format!("m = {m}"),
                points: g
                    .iter()
                    .map(|r| Point {
                        x: r.fq.mean,
                        y: r.fu.mean,
                        y_err: r.fu.std_error,
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn size_chart(target_fq: f64, rows: &[SweepResult]) -> Chart {
    Chart {
        title: format!("Reconstruction fidelity at F_Q = {target_fq}"),
        x_label: "unitary size n".into(),
        y_label: "reconstruction fidelity F_U".into(),
        series: group_by_m(rows)
            .into_iter()
            .map(|(m, g)| Series {
                label: format!("m = {m}"),
                points: g
                    .iter()
                    .map(|r| Point {
                        x: r.n as f64,
                        y: r.fu.mean,
                        y_err: r.fu.std_error,
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn cost_table(cmp: &CostComparison, c_m: f64, c_2: f64) -> String {
    let pairs = (cmp.m * (cmp.m - 1)) as f64 / 2.0;
    format!(
        "n             {}\n\
         m             {}\n\
         count_bound   {}\n\
         c_m           {c_m}\n\
         c_2           {c_2}\n\
         C_n,m         {}\n\
         C_n,2         {}\n\
         threshold     c_m < {}\n\
         advantageous  {}\n",
        cmp.n,
        cmp.m,
        cmp.count_m,
        cmp.cost_m,
        cmp.cost_2,
        pairs * c_2,
        cmp.advantageous
    )
}
