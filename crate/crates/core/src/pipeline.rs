//! End-to-end orchestration: generate → prepare → resample → train → evaluate →
//! explain → map-grades → align, emitting a JSON report bundle and CSV tables.
//!
//! Every stage writes its artifacts under `stages/<stage>-<hash>/`, where the hash
//! is the SHA-256 of the stage's configuration and the hashes of the stages it
//! reads. A stage directory holding a `COMPLETE` marker is reused on the next run;
//! directories of failed stages are left in place for inspection.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alignment::{self, AlignmentReport, ExpertSurvey};
use crate::dataprep::{
    self, Dataset, FeatureSchema, RejectionCounts, ScalerParams, SplitSpec, DEFAULT_COUNTRIES,
};
use crate::error::{Error, Result};
use crate::grading::{
    self, Grade, GradeCalibration, GradeConfusion, GradeInterval, ReferenceGrades,
};
use crate::io;
use crate::metrics::{self, EvalReport};
use crate::models::{self, FittedModel, Hyperparameters, ModelKind};
use crate::rng::derive_seed;
use crate::shapley::{self, AttributionConfig, AttributionReport, PlayerMap};
use crate::smote::{self, SmoteAudit, SmoteConfig};
use crate::synthgen::{self, Calibration, GeneratorConfig, YearRate};

/// The demo configuration shipped with the crate.
pub const DEMO_CONFIG: &str = include_str!("../fixtures/demo_config.json");

/// The published scorecard interval table.
pub const PUBLISHED_INTERVALS: &str = include_str!("../fixtures/scorecard_intervals.json");

/// Training data variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Trained without resampling.
    Wrs,
    /// Trained on the SMOTE-resampled training split.
    Rs,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::Wrs => "wrs",
            Sampling::Rs => "rs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainSettings {
    pub model: ModelKind,
    pub sampling: Sampling,
    /// Test rows explained (sampled with the attribution seed).
    pub instances: usize,
    pub attribution: AttributionConfig,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            model: ModelKind::Gbt,
            sampling: Sampling::Rs,
            instances: 100,
            attribution: AttributionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GradingMode {
    /// Calibrate grade means on the test split against the reference grades.
    Calibrate,
    /// Use a fixed interval table.
    Fixed { intervals: Vec<GradeInterval> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradingSettings {
    pub model: ModelKind,
    pub sampling: Sampling,
    #[serde(flatten)]
    pub mode: GradingMode,
}

impl Default for GradingSettings {
    fn default() -> Self {
        Self {
            model: ModelKind::Gbt,
            sampling: Sampling::Rs,
            mode: GradingMode::Calibrate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Global seed; every module seed is derived from it.
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub countries: Vec<String>,
    pub split: SplitSpec,
    pub smote: SmoteConfig,
    pub models: Vec<Hyperparameters>,
    pub threshold: f64,
    pub explain: ExplainSettings,
    pub grading: GradingSettings,
    /// Survey CSV; the bundled four-analyst survey when absent.
    pub survey: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            generator: GeneratorConfig::default(),
            countries: DEFAULT_COUNTRIES.iter().map(|c| c.to_string()).collect(),
            split: SplitSpec::default(),
            smote: SmoteConfig::default(),
            models: ModelKind::ALL
                .iter()
                .map(|&k| Hyperparameters::default_for(k))
                .collect(),
            threshold: 0.5,
            explain: ExplainSettings::default(),
            grading: GradingSettings::default(),
            survey: None,
        }
    }
}

impl RunConfig {
    pub fn demo() -> Self {
        serde_json::from_str(DEMO_CONFIG).expect("bundled demo config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::load_json(path)
    }

    /// Fills every module seed from the global seed.
    pub fn resolve_seeds(&mut self) {
        self.generator.seed = derive_seed(self.seed, "generator");
        self.split.seed = derive_seed(self.seed, "split");
        self.smote.seed = derive_seed(self.seed, "smote");
        self.explain.attribution.seed = derive_seed(self.seed, "attribution");
    }

    pub fn model_seed(&self, kind: ModelKind) -> u64 {
        derive_seed(self.seed, &format!("model-{kind}"))
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.split.validate()?;
        self.smote.validate()?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidThreshold(self.threshold));
        }
        for hp in &self.models {
            hp.validate()?;
        }
        let kinds: Vec<ModelKind> = self.models.iter().map(Hyperparameters::kind).collect();
        let mut unique = kinds.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != kinds.len() {
            return Err(Error::InvalidConfig(
                "each model kind may appear once".into(),
            ));
        }
        for (what, kind) in [
            ("explain", self.explain.model),
            ("grading", self.grading.model),
        ] {
            if !kinds.contains(&kind) {
                return Err(Error::InvalidConfig(format!(
                    "{what} model `{kind}` is not trained"
                )));
            }
        }
        if self.explain.instances == 0 {
            return Err(Error::InvalidConfig(
                "explain.instances must be at least 1".into(),
            ));
        }
        if !self.explain.attribution.group_countries {
            return Err(Error::InvalidConfig(
                "expert alignment needs explain.attribution.group_countries = true".into(),
            ));
        }
        if let GradingMode::Fixed { intervals } = &self.grading.mode {
            GradeCalibration::from_intervals(intervals)?;
        }
        for c in &self.countries {
            if !self.generator.countries.iter().any(|g| &g.code == c) {
                log::warn!("country {c} is never generated");
            }
        }
        Ok(())
    }

    pub fn hyperparameters(&self, kind: ModelKind) -> Option<&Hyperparameters> {
        self.models.iter().find(|h| h.kind() == kind)
    }
}

/// Hex SHA-256 of a value's JSON form.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes");
    hex::encode(Sha256::digest(&bytes))
}

const MARKER: &str = "COMPLETE";

/// A content-addressed stage directory.
pub struct StageDir {
    pub name: String,
    pub hash: String,
    pub dir: PathBuf,
}

impl StageDir {
    pub fn open<K: Serialize>(root: &Path, name: &str, key: &K) -> Result<Self> {
        let hash = hash_json(key);
        let dir = root.join("stages").join(format!("{name}-{}", &hash[..16]));
        fs::create_dir_all(&dir)?;
        Ok(Self {
            name: name.to_string(),
            hash,
            dir,
        })
    }

    pub fn is_complete(&self) -> bool {
        self.dir.join(MARKER).is_file()
    }

    pub fn finish(&self) -> Result<()> {
        fs::write(self.dir.join(MARKER), &self.hash)?;
        Ok(())
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn load<T: DeserializeOwned>(&self, file: &str) -> Result<T> {
        io::load_json(&self.path(file))
    }
}

/// Runs `compute` unless the stage is already complete, then loads its artifacts.
fn cached<T>(
    stage: &StageDir,
    compute: impl FnOnce(&StageDir) -> Result<()>,
    load: impl FnOnce(&StageDir) -> Result<T>,
) -> Result<T> {
    let run = || -> Result<T> {
        if stage.is_complete() {
            log::info!("stage {}: reusing {}", stage.name, stage.dir.display());
        } else {
            log::info!("stage {}: running", stage.name);
            compute(stage)?;
            stage.finish()?;
        }
        load(stage)
    };
    run().map_err(|e| e.in_stage(&stage.name))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prepared {
    pub records: usize,
    pub labeled: usize,
    pub unusable: usize,
    pub rejections: RejectionCounts,
    pub out_of_range: usize,
    pub scaler: ScalerParams,
    pub countries: Vec<String>,
    pub default_rate: Vec<YearRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub rows: usize,
    pub positives: usize,
}

impl SplitSummary {
    fn of(d: &Dataset) -> Self {
        Self {
            rows: d.len(),
            positives: d.positives(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub records: usize,
    pub labeled: usize,
    pub unusable: usize,
    pub rejections: RejectionCounts,
    pub out_of_range: usize,
    pub train: SplitSummary,
    pub test: SplitSummary,
    pub validation: SplitSummary,
    pub resampled_train: SplitSummary,
    pub synthetic_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRow {
    pub model: ModelKind,
    /// `WRS`, `RS`, `RS+VS` or `WRS+VS`.
    pub setting: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSummary {
    pub model: ModelKind,
    pub sampling: Sampling,
    pub players: Vec<String>,
    pub base_value: f64,
    pub instances: usize,
    pub global_importance: Vec<f64>,
    pub ranking: Vec<String>,
    pub max_efficiency_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingResult {
    pub model: ModelKind,
    pub sampling: Sampling,
    pub mode: String,
    pub calibration: GradeCalibration,
    pub intervals: Vec<GradeInterval>,
    pub confusion: GradeConfusion,
    /// Test rows without a reference grade.
    pub unmatched: usize,
}

/// Everything a run reports. Serialized as `report.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config_hash: String,
    pub stages: BTreeMap<String, String>,
    pub data: Option<DataSummary>,
    pub generator: Option<Calibration>,
    pub performance: Vec<PerformanceRow>,
    pub default_rate: Vec<YearRate>,
    pub attribution: Option<AttributionSummary>,
    pub grading: Option<GradingResult>,
    pub alignment: Option<AlignmentReport>,
}

/// Labels, encodes, splits and standardizes a record set.
pub fn prepare(
    records: &[dataprep::CompanyRecord],
    countries: &[String],
    split: &SplitSpec,
) -> Result<(dataprep::Splits, Prepared)> {
    let labeling = dataprep::label_records(records)?;
    let schema = FeatureSchema::new(countries.to_vec());
    let (features, rejections) = dataprep::build_features(&labeling.rows, &schema);
    let splits = dataprep::split(&features, split)?;
    let scaler = dataprep::fit_scaler(&splits.train)?;
    let scaled = dataprep::Splits {
        train: dataprep::apply_scaler(&scaler, &splits.train)?,
        test: dataprep::apply_scaler(&scaler, &splits.test)?,
        validation: dataprep::apply_scaler(&scaler, &splits.validation)?,
        out_of_range: splits.out_of_range,
    };
    let summary = Prepared {
        records: records.len(),
        labeled: labeling.rows.len(),
        unusable: labeling.unusable,
        rejections,
        out_of_range: splits.out_of_range,
        scaler,
        countries: countries.to_vec(),
        default_rate: synthgen::default_rate_report(&labeling.rows),
    };
    Ok((scaled, summary))
}

/// Test-split probabilities paired with reference grades.
pub fn grade_pairs(
    model: &FittedModel,
    rows: &Dataset,
    reference: &ReferenceGrades,
) -> Result<(Vec<Grade>, Vec<f64>, usize)> {
    let probs = models::predict_proba(model, rows)?;
    let mut grades = Vec::new();
    let mut paired = Vec::new();
    let mut unmatched = 0;
    for (row, p) in rows.rows.iter().zip(probs) {
        match reference.get(&row.company_id, row.statement_year) {
            Some(g) => {
                grades.push(g);
                paired.push(p);
            }
            None => unmatched += 1,
        }
    }
    Ok((grades, paired, unmatched))
}

/// Calibrates (or loads) grade intervals and compares mapped grades with the reference.
pub fn map_grades(
    model: &FittedModel,
    rows: &Dataset,
    reference: &ReferenceGrades,
    mode: &GradingMode,
) -> Result<(GradeCalibration, GradeConfusion, usize)> {
    let (grades, probs, unmatched) = grade_pairs(model, rows, reference)?;
    let calibration = match mode {
        GradingMode::Calibrate => grading::calibrate(&grades, &probs)?,
        GradingMode::Fixed { intervals } => GradeCalibration::from_intervals(intervals)?,
    };
    let mapped = grading::assign_all(&probs, &calibration)?;
    let confusion = grading::grade_confusion(&grades, &mapped)?;
    Ok((calibration, confusion, unmatched))
}

/// Seeded sample of `n` rows (all if fewer), in original order.
fn sample_rows(data: &Dataset, n: usize, seed: u64) -> Dataset {
    let take = n.min(data.len());
    let mut idx =
        rand::seq::index::sample(&mut crate::rng::seeded(seed), data.len(), take).into_vec();
    idx.sort_unstable();
    Dataset::new(
        data.schema.clone(),
        idx.into_iter().map(|i| data.rows[i].clone()).collect(),
    )
}

/// Shapley attribution of a model on sampled test rows with a training background.
pub fn explain_model(
    model: &FittedModel,
    train: &Dataset,
    test: &Dataset,
    instances: usize,
    config: &AttributionConfig,
) -> Result<AttributionReport> {
    let background =
        shapley::sample_background(&train.matrix(), config.background_size, config.seed)?;
    let explained = sample_rows(test, instances, derive_seed(config.seed, "instances"));
    let players = PlayerMap::for_config(&model.feature_names, config);
    shapley::global_importance(
        model,
        &explained.matrix(),
        &background,
        &players,
        config.max_features,
    )
}

/// Evaluates a model on a dataset at `threshold`.
pub fn evaluate_model(model: &FittedModel, data: &Dataset, threshold: f64) -> Result<EvalReport> {
    let probs = models::predict_proba(model, data)?;
    metrics::evaluate(&data.labels(), &probs, threshold)
}

fn load_survey(config: &RunConfig) -> Result<ExpertSurvey> {
    match &config.survey {
        Some(path) => ExpertSurvey::load(path, &alignment::survey_features()),
        None => ExpertSurvey::bundled(),
    }
}

struct Generated {
    records: Vec<dataprep::CompanyRecord>,
    reference: ReferenceGrades,
    calibration: Calibration,
}

/// Runs the full pipeline into `out`, writing `report.json` and the CSV tables.
pub fn run_pipeline(config: &RunConfig, out: &Path) -> Result<ReportBundle> {
    let mut config = config.clone();
    config.resolve_seeds();
    config.validate()?;
    fs::create_dir_all(out)?;
    io::save_json(&out.join("resolved_config.json"), &config)?;
    let mut bundle = ReportBundle {
        config_hash: hash_json(&config),
        ..ReportBundle::default()
    };

    // generate
    let gen_stage = StageDir::open(out, "generate", &config.generator)?;
    let generated = cached(
        &gen_stage,
        |s| {
            let panel = synthgen::generate(&config.generator)?;
            io::save_records(&s.path("records.csv"), &panel.records)?;
            synthgen::write_reference_grades(
                fs::File::create(s.path("reference_grades.csv"))?,
                &panel.reference_grades,
            )?;
            io::save_json(&s.path("calibration.json"), &panel.calibration)
        },
        |s| {
            Ok(Generated {
                records: io::load_records(&s.path("records.csv"))?,
                reference: grading::read_reference_grades(fs::File::open(
                    s.path("reference_grades.csv"),
                )?)?,
                calibration: s.load("calibration.json")?,
            })
        },
    )?;
    bundle
        .stages
        .insert("generate".into(), gen_stage.hash.clone());
    bundle.generator = Some(generated.calibration.clone());

    // prepare
    let prep_stage = StageDir::open(
        out,
        "prepare",
        &(&gen_stage.hash, &config.countries, &config.split),
    )?;
    let (train, test, validation, prepared) = cached(
        &prep_stage,
        |s| {
            let (splits, summary) = prepare(&generated.records, &config.countries, &config.split)?;
            io::save_dataset(&s.path("train.csv"), &splits.train)?;
            io::save_dataset(&s.path("test.csv"), &splits.test)?;
            io::save_dataset(&s.path("validation.csv"), &splits.validation)?;
            io::save_json(&s.path("prepare.json"), &summary)
        },
        |s| {
            Ok((
                io::load_dataset(&s.path("train.csv"))?,
                io::load_dataset(&s.path("test.csv"))?,
                io::load_dataset(&s.path("validation.csv"))?,
                s.load::<Prepared>("prepare.json")?,
            ))
        },
    )?;
    bundle
        .stages
        .insert("prepare".into(), prep_stage.hash.clone());
    bundle.default_rate = prepared.default_rate.clone();

    // resample
    let rs_stage = StageDir::open(out, "resample", &(&prep_stage.hash, &config.smote))?;
    let (resampled, audit) = cached(
        &rs_stage,
        |s| {
            let (data, audit) = smote::resample(&train, &config.smote)?;
            io::save_dataset(&s.path("train_resampled.csv"), &data)?;
            io::save_json(&s.path("smote_audit.json"), &audit)
        },
        |s| {
            Ok((
                io::load_dataset(&s.path("train_resampled.csv"))?,
                s.load::<SmoteAudit>("smote_audit.json")?,
            ))
        },
    )?;
    bundle
        .stages
        .insert("resample".into(), rs_stage.hash.clone());
    bundle.data = Some(DataSummary {
        records: prepared.records,
        labeled: prepared.labeled,
        unusable: prepared.unusable,
        rejections: prepared.rejections.clone(),
        out_of_range: prepared.out_of_range,
        train: SplitSummary::of(&train),
        test: SplitSummary::of(&test),
        validation: SplitSummary::of(&validation),
        resampled_train: SplitSummary::of(&resampled),
        synthetic_rows: audit.synthetic.len(),
    });

    // train + evaluate
    let mut fitted: BTreeMap<(ModelKind, Sampling), (FittedModel, String)> = BTreeMap::new();
    for hp in &config.models {
        let kind = hp.kind();
        let seed = config.model_seed(kind);
        for (sampling, data, upstream) in [
            (Sampling::Wrs, &train, &prep_stage.hash),
            (Sampling::Rs, &resampled, &rs_stage.hash),
        ] {
            let name = format!("train-{kind}-{}", sampling.as_str());
            let stage = StageDir::open(out, &name, &(upstream, hp, seed))?;
            let model = cached(
                &stage,
                |s| models::fit(data, hp, seed)?.save(&s.path("model.json")),
                |s| FittedModel::load(&s.path("model.json")),
            )?;
            bundle.stages.insert(name, stage.hash.clone());
            fitted.insert((kind, sampling), (model, stage.hash));
        }
        let eval = |sampling: Sampling, data: &Dataset| {
            evaluate_model(&fitted[&(kind, sampling)].0, data, config.threshold)
                .map_err(|e| e.in_stage("evaluate"))
        };
        for (setting, sampling, data) in [
            ("WRS", Sampling::Wrs, &test),
            ("RS", Sampling::Rs, &test),
            ("RS+VS", Sampling::Rs, &validation),
            ("WRS+VS", Sampling::Wrs, &validation),
        ] {
            bundle.performance.push(PerformanceRow {
                model: kind,
                setting: setting.to_string(),
                report: eval(sampling, data)?,
            });
        }
    }

    // explain
    let ex = &config.explain;
    let (ex_model, ex_hash) = &fitted[&(ex.model, ex.sampling)];
    let ex_stage = StageDir::open(out, "explain", &(ex_hash, &prep_stage.hash, ex))?;
    let attribution = cached(
        &ex_stage,
        |s| {
            let report = explain_model(ex_model, &train, &test, ex.instances, &ex.attribution)?;
            io::save_json(&s.path("attributions.json"), &report)
        },
        |s| s.load::<AttributionReport>("attributions.json"),
    )?;
    bundle
        .stages
        .insert("explain".into(), ex_stage.hash.clone());
    bundle.attribution = Some(AttributionSummary {
        model: ex.model,
        sampling: ex.sampling,
        players: attribution.players.clone(),
        base_value: attribution.base_value,
        instances: attribution.instances.len(),
        global_importance: attribution.global_importance.clone(),
        ranking: attribution.ranking.clone(),
        max_efficiency_gap: attribution.max_efficiency_gap(),
    });

    // map-grades
    let gr = &config.grading;
    let (gr_model, gr_hash) = &fitted[&(gr.model, gr.sampling)];
    let gr_stage = StageDir::open(
        out,
        "map-grades",
        &(gr_hash, &gen_stage.hash, &prep_stage.hash, gr),
    )?;
    let grading_result = cached(
        &gr_stage,
        |s| {
            let (calibration, confusion, unmatched) =
                map_grades(gr_model, &test, &generated.reference, &gr.mode)?;
            let result = GradingResult {
                model: gr.model,
                sampling: gr.sampling,
                mode: match gr.mode {
                    GradingMode::Calibrate => "calibrate".into(),
                    GradingMode::Fixed { .. } => "fixed".into(),
                },
                intervals: calibration.intervals(),
                calibration,
                confusion,
                unmatched,
            };
            io::save_json(&s.path("grading.json"), &result)
        },
        |s| s.load::<GradingResult>("grading.json"),
    )?;
    bundle
        .stages
        .insert("map-grades".into(), gr_stage.hash.clone());
    bundle.grading = Some(grading_result);

    // align
    let survey = load_survey(&config).map_err(|e| e.in_stage("align"))?;
    let al_stage = StageDir::open(out, "align", &(&ex_stage.hash, &survey))?;
    let alignment_report = cached(
        &al_stage,
        |s| {
            let report = alignment::align_survey(&survey, &attribution.importance_ranking())?;
            io::save_json(&s.path("alignment.json"), &report)
        },
        |s| s.load::<AlignmentReport>("alignment.json"),
    )?;
    bundle.stages.insert("align".into(), al_stage.hash.clone());
    bundle.alignment = Some(alignment_report);

    crate::report::write_bundle(out, &bundle).map_err(|e| e.in_stage("report"))?;
    Ok(bundle)
}
