//! `riskalign` command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riskalign::alignment::{self, ExpertSurvey};
use riskalign::grading::{self, GradeInterval};
use riskalign::pipeline::{self, GradingMode, RunConfig};
use riskalign::shapley::AttributionReport;
use riskalign::{
    io, models, report, smote, synthgen, Error, FittedModel, Hyperparameters, ModelKind, Result,
};

#[derive(Parser, Debug)]
#[command(
    name = "riskalign",
    version,
    about = "Default-risk modeling, SHAP attribution and expert alignment"
)]
struct Cli {
    /// Run configuration (JSON). The bundled demo configuration is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed; overrides the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (for `report`, an optional text file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic company panel and reference grades.
    Generate,
    /// Label, encode, split and standardize a record file.
    Prepare {
        #[arg(long)]
        records: PathBuf,
    },
    /// Oversample the minority class of a training split with SMOTE.
    Resample {
        #[arg(long)]
        train: PathBuf,
    },
    /// Fit one model on a training split.
    Train {
        #[arg(long, alias = "in")]
        train: PathBuf,
        /// lr, adaboost, rf or gbt.
        #[arg(long)]
        model: ModelKind,
        /// Hyperparameters (JSON); the configuration's entry for the model kind when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Score a fitted model on a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Classification threshold; the configuration's when omitted.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Shapley attributions of a fitted model on test rows.
    Explain {
        #[arg(long)]
        model: PathBuf,
        /// Split the background is sampled from.
        #[arg(long)]
        train: PathBuf,
        /// Split the explained instances are sampled from.
        #[arg(long)]
        test: PathBuf,
    },
    /// Map predicted probabilities to A–F grades and compare with reference grades.
    MapGrades {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// CSV with `company_id,grade` or `company_id,statement_year,grade`.
        #[arg(long)]
        reference: PathBuf,
        /// Fixed interval table (JSON); grade means are calibrated when omitted.
        #[arg(long)]
        intervals: Option<PathBuf>,
    },
    /// Compare a SHAP importance ranking with the expert survey.
    Align {
        /// `attributions.json` written by `explain`.
        #[arg(long)]
        attributions: PathBuf,
        /// Survey CSV (`analyst_id,feature,points`); the bundled survey when omitted.
        #[arg(long)]
        survey: Option<PathBuf>,
    },
    /// Run every stage and write the report bundle.
    Run,
    /// Print a report bundle as text.
    Report {
        /// Bundle directory or `report.json`.
        #[arg(long)]
        bundle: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| e.in_stage("config"))?,
        None => RunConfig::demo(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.resolve_seeds();
    config.validate().map_err(|e| e.in_stage("config"))?;
    Ok(config)
}

fn create(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn require_out(cli: &Cli) -> Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("--out is required for this subcommand".into()))
}

fn execute(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    if let Command::Report { bundle } = &cli.command {
        let bundle = report::load_bundle(bundle).map_err(|e| e.in_stage("report"))?;
        let text = report::format_report(&bundle);
        match &cli.out {
            Some(path) => fs::write(path, text).map_err(|e| Error::from(e).in_stage("report"))?,
            None => print!("{text}"),
        }
        return Ok(());
    }
    let out = require_out(cli)?;
    match &cli.command {
        Command::Generate => {
            let run = || -> Result<()> {
                create(out)?;
                let panel = synthgen::generate(&config.generator)?;
                io::save_records(&out.join("records.csv"), &panel.records)?;
                synthgen::write_reference_grades(
                    fs::File::create(out.join("reference_grades.csv"))?,
                    &panel.reference_grades,
                )?;
                io::save_json(&out.join("calibration.json"), &panel.calibration)?;
                println!("generated {} records", panel.records.len());
                Ok(())
            };
            run().map_err(|e| e.in_stage("generate"))
        }
        Command::Prepare { records } => {
            let run = || -> Result<()> {
                create(out)?;
                let records = io::load_records(records)?;
                let (splits, summary) =
                    pipeline::prepare(&records, &config.countries, &config.split)?;
                io::save_dataset(&out.join("train.csv"), &splits.train)?;
                io::save_dataset(&out.join("test.csv"), &splits.test)?;
                io::save_dataset(&out.join("validation.csv"), &splits.validation)?;
                io::save_json(&out.join("prepare.json"), &summary)?;
                println!(
                    "train {} / test {} / validation {} rows ({} out of range)",
                    splits.train.len(),
                    splits.test.len(),
                    splits.validation.len(),
                    splits.out_of_range
                );
                Ok(())
            };
            run().map_err(|e| e.in_stage("prepare"))
        }
        Command::Resample { train } => {
            let run = || -> Result<()> {
                create(out)?;
                let data = io::load_dataset(train)?;
                let (resampled, audit) = smote::resample(&data, &config.smote)?;
                io::save_dataset(&out.join("train_resampled.csv"), &resampled)?;
                io::save_json(&out.join("smote_audit.json"), &audit)?;
                println!(
                    "{} rows ({} synthetic)",
                    resampled.len(),
                    audit.synthetic.len()
                );
                Ok(())
            };
            run().map_err(|e| e.in_stage("resample"))
        }
        Command::Train {
            train,
            model,
            params,
        } => {
            let run = || -> Result<()> {
                create(out)?;
                let data = io::load_dataset(train)?;
                let hp = match params {
                    Some(path) => io::load_json::<Hyperparameters>(path)?,
                    None => config
                        .hyperparameters(*model)
                        .cloned()
                        .unwrap_or_else(|| Hyperparameters::default_for(*model)),
                };
                if hp.kind() != *model {
                    return Err(Error::InvalidConfig(format!(
                        "--params describe `{}`, not `{model}`",
                        hp.kind()
                    )));
                }
                let fitted = models::fit(&data, &hp, config.model_seed(*model))?;
                fitted.save(&out.join("model.json"))?;
                println!("trained {} on {} rows", model.label(), data.len());
                Ok(())
            };
            run().map_err(|e| e.in_stage("train"))
        }
        Command::Evaluate {
            model,
            data,
            threshold,
        } => {
            let run = || -> Result<()> {
                create(out)?;
                let fitted = FittedModel::load(model)?;
                let rows = io::load_dataset(data)?;
                let eval = pipeline::evaluate_model(
                    &fitted,
                    &rows,
                    threshold.unwrap_or(config.threshold),
                )?;
                io::save_json(&out.join("evaluation.json"), &eval)?;
                println!(
                    "accuracy {}%  precision {}%  recall {}%  F1 {}  AUC {}",
                    report::percent(eval.accuracy),
                    report::percent(eval.precision),
                    report::percent(eval.recall),
                    report::fraction(eval.f1),
                    eval.auc
                        .map(report::fraction)
                        .unwrap_or_else(|| "undefined".into())
                );
                Ok(())
            };
            run().map_err(|e| e.in_stage("evaluate"))
        }
        Command::Explain { model, train, test } => {
            let run = || -> Result<()> {
                create(out)?;
                let fitted = FittedModel::load(model)?;
                let train = io::load_dataset(train)?;
                let test = io::load_dataset(test)?;
                let ex = &config.explain;
                let attribution =
                    pipeline::explain_model(&fitted, &train, &test, ex.instances, &ex.attribution)?;
                io::save_json(&out.join("attributions.json"), &attribution)?;
                for (i, name) in attribution.ranking.iter().enumerate() {
                    println!("{:>2}. {name}", i + 1);
                }
                Ok(())
            };
            run().map_err(|e| e.in_stage("explain"))
        }
        Command::MapGrades {
            model,
            data,
            reference,
            intervals,
        } => {
            let run = || -> Result<()> {
                create(out)?;
                let fitted = FittedModel::load(model)?;
                let rows = io::load_dataset(data)?;
                let reference = grading::read_reference_grades(fs::File::open(reference)?)?;
                let mode = match intervals {
                    Some(path) => GradingMode::Fixed {
                        intervals: io::load_json::<Vec<GradeInterval>>(path)?,
                    },
                    None => config.grading.mode.clone(),
                };
                let (calibration, confusion, unmatched) =
                    pipeline::map_grades(&fitted, &rows, &reference, &mode)?;
                io::save_json(&out.join("grade_calibration.json"), &calibration)?;
                io::save_json(&out.join("grade_confusion.json"), &confusion)?;
                println!(
                    "{} rows graded ({} unmatched): riskier {}%  safer {}%  equal {}%",
                    confusion.n,
                    unmatched,
                    report::percent(confusion.riskier),
                    report::percent(confusion.safer),
                    report::percent(confusion.equal)
                );
                Ok(())
            };
            run().map_err(|e| e.in_stage("map-grades"))
        }
        Command::Align {
            attributions,
            survey,
        } => {
            let run = || -> Result<()> {
                create(out)?;
                let attribution: AttributionReport = io::load_json(attributions)?;
                let survey = match survey.as_ref().or(config.survey.as_ref()) {
                    Some(path) => ExpertSurvey::load(path, &alignment::survey_features())?,
                    None => ExpertSurvey::bundled()?,
                };
                let aligned = alignment::align_survey(&survey, &attribution.importance_ranking())?;
                io::save_json(&out.join("alignment.json"), &aligned)?;
                let show = |x: Option<f64>| {
                    x.map(report::fraction)
                        .unwrap_or_else(|| "undefined".into())
                };
                println!(
                    "Spearman {}  Kendall tau {}  top-3 {}  top-5 {}",
                    show(aligned.spearman),
                    show(aligned.kendall_tau),
                    report::fraction(aligned.top3_overlap),
                    report::fraction(aligned.top5_overlap)
                );
                Ok(())
            };
            run().map_err(|e| e.in_stage("align"))
        }
        Command::Run => {
            let bundle = pipeline::run_pipeline(&config, out)?;
            print!("{}", report::format_report(&bundle));
            Ok(())
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
