//! Command-line front end: bundle I/O, report files and the `ace` subcommands.
//!
//! Exit codes: 0 success, 1 pipeline or data error, 2 when dip screening
//! retains no space, 64 usage error, 74 I/O error.

pub mod error;
pub mod exec;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use ace_core::external::{clustering_accuracy, nmi};
use ace_core::grouping::GroupingMethod;
use ace_core::link::LinkMethod;
use ace_core::pipeline::{ace_with, baselines, evaluate_regimes, regime_table, AceConfig, Regime};
use ace_core::synth::{concentration_demo, generate_bundle, SynthSpec};
use ace_core::IndexId;
use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE};
use crate::exec::Rayon;
use crate::io::{
    load_bundle, read_labels, read_matrix, save_bundle, write_file, MatrixFormat, Meta,
};
use crate::report::{regime_csv, regime_scores_csv, report_json, score_matrix_csv, ExternalTable};

pub const NO_RETAINED_REASON: &str = "no space rejected unimodality";
const POOLING_HINT: &str =
    "hint: no embedding space looks multimodal; rerun with --pool-without-dip to pool scores over all spaces directly";

#[derive(Debug, Parser)]
#[command(
    name = "ace",
    version,
    about = "Adaptive evaluation of deep-clustering trials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one partition in one embedding.
    Score {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Index id, or `all`.
        #[arg(long, default_value = "all")]
        index: IndexChoice,
    },
    /// Run the full pipeline and write report.json plus CSV exports.
    Run {
        #[arg(long)]
        trials: PathBuf,
        /// Output directory; defaults to the bundle directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Raw, paired and pooled scores without grouping.
    Baselines {
        #[arg(long)]
        trials: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// NMI and accuracy of one partition, or of every trial in a bundle.
    External {
        #[arg(long, conflicts_with = "trials", requires = "truth")]
        pred: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        trials: Option<PathBuf>,
    },
    /// Write a seeded synthetic bundle.
    Synth {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Trial indices whose embeddings are replaced by Gaussian noise.
        #[arg(long, value_delimiter = ',')]
        corrupt: Vec<usize>,
        /// Per-trial fraction of reassigned labels.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        label_noise: Vec<f64>,
        /// Per-trial distance between mixture centers, in noise units.
        #[arg(long, value_delimiter = ',')]
        separations: Vec<f64>,
        /// Also write a raw input of this dimension.
        #[arg(long)]
        raw_dim: Option<usize>,
        #[arg(long, value_enum, default_value = "bin")]
        format: MatrixFormat,
    },
    /// Distance concentration and index collapse in growing dimension.
    Dimdemo {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,20,200,2000")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Rank agreement of a report's regimes with per-trial external measures.
    Compare {
        #[arg(long)]
        report: PathBuf,
        /// CSV with columns id, nmi, acc in report trial order.
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexChoice {
    All,
    One(IndexId),
}

impl std::str::FromStr for IndexChoice {
    type Err = ace_core::indices::UnknownIndex;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            Ok(IndexChoice::All)
        } else {
            s.parse().map(IndexChoice::One)
        }
    }
}

/// Pipeline settings. Flags override values read from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// JSON file mirroring the pipeline configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<IndexId>,
    #[arg(long)]
    pub dip_alpha: Option<f64>,
    #[arg(long)]
    pub dip_replicates: Option<usize>,
    #[arg(long)]
    pub edge_alpha: Option<f64>,
    #[arg(long)]
    pub grouping: Option<GroupingMethod>,
    #[arg(long)]
    pub dbscan_eps: Option<f64>,
    #[arg(long)]
    pub hdbscan_min_cluster_size: Option<usize>,
    #[arg(long)]
    pub hdbscan_min_samples: Option<usize>,
    #[arg(long)]
    pub link: Option<LinkMethod>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub pool_without_dip: bool,
    #[arg(long)]
    pub outlier_rescue: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl PipelineArgs {
    pub fn config(&self) -> CliResult<AceConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
                serde_json::from_slice(&bytes).map_err(|e| CliError::parse(path, e.to_string()))?
            }
            None => AceConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(index => index, dip_alpha => dip_alpha, dip_replicates => dip_replicates,
             edge_alpha => edge_alpha, grouping => grouping_method, dbscan_eps => dbscan_eps,
             hdbscan_min_cluster_size => hdbscan_min_cluster_size,
             hdbscan_min_samples => hdbscan_min_samples, link => link_method,
             damping => damping, seed => seed);
        cfg.pool_without_dip |= self.pool_without_dip;
        cfg.include_outlier_rescue |= self.outlier_rescue;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Data goes to `out`, diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = e.exit_code();
            if code == error::EXIT_NO_RETAINED {
                let _ = writeln!(
                    out,
                    "{{\"status\":\"no_retained_spaces\",\"reason\":\"{NO_RETAINED_REASON}\"}}"
                );
                let _ = writeln!(err, "error: {NO_RETAINED_REASON}\n{POOLING_HINT}");
            } else {
                let _ = writeln!(err, "error: {e}");
            }
            code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Score {
            embedding,
            labels,
            index,
        } => {
            let z = read_matrix(&embedding)?;
            let rho = read_labels(&labels)?;
            if z.rows() != rho.len() {
                return Err(CliError::Shape(format!(
                    "{} labels for {} embedding rows",
                    rho.len(),
                    z.rows()
                )));
            }
            let ids: Vec<IndexId> = match index {
                IndexChoice::All => IndexId::ALL.to_vec(),
                IndexChoice::One(id) => vec![id],
            };
            let mut text = String::from("index,raw,oriented\n");
            for id in ids {
                match id.evaluate(&z, &rho) {
                    Ok(v) => text.push_str(&format!("{id},{:?},{:?}\n", v.raw, v.oriented)),
                    Err(e) => {
                        text.push_str(&format!("{id},NA,NA\n"));
                        let _ = writeln!(err, "{id}: {e}");
                    }
                }
            }
            emit(out, &text)
        }
        Command::Run {
            trials,
            out: dir,
            pipeline,
        } => {
            let cfg = pipeline.config()?;
            let bundle = load_bundle(&trials)?;
            let exec = Rayon::new(pipeline.threads);
            let report = ace_with(&bundle, &cfg, &exec)?;
            let dir = dir.unwrap_or_else(|| {
                let m = io::manifest_path(&trials);
                m.parent().map(Path::to_path_buf).unwrap_or_default()
            });
            std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            write_file(&dir.join("report.json"), &report_json(&report))?;
            write_file(
                &dir.join("scores.csv"),
                score_matrix_csv(&report.scores, &report.trial_ids).as_bytes(),
            )?;
            let columns: Vec<(&str, Option<&[Option<f64>]>)> = Regime::ALL
                .iter()
                .map(|&r| (r.name(), report.regime(r)))
                .collect();
            let scores = regime_scores_csv(&report.trial_ids, &columns);
            write_file(&dir.join("regime_scores.csv"), scores.as_bytes())?;
            if bundle.truth().is_some() {
                let table = evaluate_regimes(&report, None, &bundle)?;
                write_file(&dir.join("regimes.csv"), regime_csv(&table).as_bytes())?;
                let ext = ExternalTable {
                    ids: report.trial_ids.clone(),
                    nmi: table.nmi,
                    acc: table.acc,
                };
                write_file(&dir.join("external.csv"), ext.to_csv().as_bytes())?;
            }
            let _ = writeln!(
                err,
                "retained {:?}, selected subgroup {:?}; wrote {}",
                report.retained,
                report.selected_members,
                dir.join("report.json").display()
            );
            emit(out, &scores)
        }
        Command::Baselines { trials, pipeline } => {
            let cfg = pipeline.config()?;
            let bundle = load_bundle(&trials)?;
            let b = baselines(&bundle, &cfg, &Rayon::new(pipeline.threads))?;
            let columns = [
                ("raw", b.raw.as_deref()),
                ("paired", Some(&b.paired[..])),
                ("pooled", Some(&b.pooled[..])),
            ];
            emit(out, &regime_scores_csv(&b.trial_ids, &columns))
        }
        Command::External {
            pred,
            truth,
            trials,
        } => match (pred, trials) {
            (Some(pred), None) => {
                let truth = read_labels(truth.as_deref().expect("clap requires truth"))?;
                let pred = read_labels(&pred)?;
                let text = format!(
                    "nmi,acc\n{:?},{:?}\n",
                    nmi(&pred, &truth)?,
                    clustering_accuracy(&truth, &pred)?
                );
                emit(out, &text)
            }
            (None, Some(trials)) => {
                let bundle = load_bundle(&trials)?;
                let truth = match truth {
                    Some(p) => read_labels(&p)?,
                    None => bundle
                        .truth()
                        .cloned()
                        .ok_or(ace_core::Error::MissingTruth)?,
                };
                let (nmi, acc) = ace_core::pipeline::external_scores(&bundle, &truth)?;
                emit(
                    out,
                    &ExternalTable {
                        ids: bundle.ids(),
                        nmi,
                        acc,
                    }
                    .to_csv(),
                )
            }
            _ => Err(CliError::Usage(
                "external needs either --pred with --truth, or --trials".into(),
            )),
        },
        Command::Synth {
            m,
            n,
            d,
            k,
            seed,
            out: dir,
            corrupt,
            label_noise,
            separations,
            raw_dim,
            format,
        } => {
            let mut spec = SynthSpec::with_defaults(m, n, d, k, seed);
            spec.corrupt = corrupt;
            spec.raw_dim = raw_dim;
            if !label_noise.is_empty() {
                spec.label_noise = label_noise;
            }
            if !separations.is_empty() {
                spec.separations = separations;
            }
            let bundle = generate_bundle(&spec)?;
            let meta = Meta {
                n: Some(n),
                k: Some(k),
                ..Default::default()
            };
            let manifest = save_bundle(&dir, &bundle, format, Some(meta))?;
            let (nmi, acc) = ace_core::pipeline::external_scores(
                &bundle,
                bundle.truth().expect("synthetic truth"),
            )?;
            write_file(
                &dir.join("external.csv"),
                ExternalTable {
                    ids: bundle.ids(),
                    nmi,
                    acc,
                }
                .to_csv()
                .as_bytes(),
            )?;
            emit(out, &format!("{}\n", manifest.display()))
        }
        Command::Dimdemo {
            n,
            dims,
            reps,
            seed,
        } => {
            let stats = concentration_demo(n, &dims, reps, seed)?;
            let mut text = String::from("p,ratio_median,index_abs_median\n");
            for ((p, r), s) in stats
                .dims
                .iter()
                .zip(&stats.ratio_median)
                .zip(&stats.index_abs_median)
            {
                text.push_str(&format!("{p},{r:?},{s:?}\n"));
            }
            emit(out, &text)
        }
        Command::Compare { report, truth } => {
            let report = report::read_report(&report)?;
            let ext = ExternalTable::read(&truth)?;
            if ext.ids != report.trial_ids {
                return Err(CliError::IdMismatch(format!(
                    "report lists {:?}, truth file lists {:?}",
                    report.trial_ids, ext.ids
                )));
            }
            let table = regime_table(&report, &ext.nmi, &ext.acc)?;
            emit(out, &regime_csv(&table))
        }
    }
}
