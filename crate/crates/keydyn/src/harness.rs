//! Experiment orchestration and machine-readable results.
//!
//! `cmd_run` loads a dataset, replays every configured method and writes two
//! plot-ready CSV files into the output directory:
//!
//! * `summary.csv` -- long form `(method, session, metric, mean, std, runs,
//!   seed)`, one row per method x session x metric, means and standard
//!   deviations taken across runs;
//! * `runs.csv` -- the raw per-run rates `(method, run, session, metric,
//!   value)`.
//!
//! Both files start with a `#`-prefixed metadata block echoing the full
//! configuration; re-running from that echo reproduces the files byte for
//! byte. Undefined rates (zero denominators) are written as `NA`. All result
//! numbers carry 6 decimal places; the config echo keeps full precision so
//! the round trip is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::adaptation::{catalog_specs, find_method};
use crate::corpus::{
    enrollment_split, parse_dsl2009_with, parse_generic_csv_with, Corpus, CsvOptions,
};
use crate::error::{Error, Result};
use crate::evaluation::experiment::{run_experiment, ExperimentResult, Pooling, RunConfig};
use crate::evaluation::ranking::{rank_methods, RankTable};
use crate::evaluation::synth::generate_drift_corpus;
use crate::evaluation::{eer_point, METRIC_NAMES};
use crate::recognizer::{build_reference, score, Gallery};

/// Supported dataset layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Dsl2009,
    Generic,
}

impl DatasetFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetFormat::Dsl2009 => "dsl2009",
            DatasetFormat::Generic => "generic",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "dsl2009" => Ok(DatasetFormat::Dsl2009),
            "generic" => Ok(DatasetFormat::Generic),
            other => Err(Error::Config(format!("unknown dataset format '{other}'"))),
        }
    }
}

/// How the operational update threshold is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateThresholdMode {
    /// Use `update_threshold` as configured.
    #[default]
    Fixed,
    /// Use half of the EER threshold estimated on session 1 of all users.
    EerHalf,
}

impl UpdateThresholdMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateThresholdMode::Fixed => "fixed",
            UpdateThresholdMode::EerHalf => "eer-half",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "fixed" => Ok(UpdateThresholdMode::Fixed),
            "eer-half" => Ok(UpdateThresholdMode::EerHalf),
            other => Err(Error::Config(format!(
                "unknown update-threshold mode '{other}'"
            ))),
        }
    }
}

/// Full configuration of one `run` invocation.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub format: DatasetFormat,
    /// Resolved catalog method names, in execution order.
    pub methods: Vec<String>,
    pub accept_threshold: f64,
    pub update_threshold: f64,
    pub impostor_ratio: f64,
    pub runs: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub pooling: Pooling,
    pub update_threshold_mode: UpdateThresholdMode,
    pub delimiter: u8,
    pub lenient: bool,
    pub impostor_with_replacement: bool,
    pub user_col: String,
    pub session_col: String,
    pub rep_col: String,
}

impl ExperimentConfig {
    pub fn new(
        dataset: impl Into<PathBuf>,
        format: DatasetFormat,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            format,
            methods: catalog_specs().into_iter().map(|m| m.name).collect(),
            accept_threshold: 0.0,
            update_threshold: -0.1,
            impostor_ratio: 0.3,
            runs: 100,
            master_seed: 1,
            out_dir: out_dir.into(),
            pooling: Pooling::Pooled,
            update_threshold_mode: UpdateThresholdMode::Fixed,
            delimiter: b',',
            lenient: false,
            impostor_with_replacement: false,
            user_col: "user".into(),
            session_col: "session".into(),
            rep_col: "rep".into(),
        }
    }

    /// Resolve a `--methods` argument: `all` or a comma-separated list of
    /// catalog names.
    pub fn set_methods(&mut self, arg: &str) -> Result<()> {
        if arg.trim() == "all" {
            self.methods = catalog_specs().into_iter().map(|m| m.name).collect();
            return Ok(());
        }
        let mut methods = Vec::new();
        for name in arg.split(',') {
            let name = name.trim();
            if find_method(name).is_none() {
                let known: Vec<String> = catalog_specs().into_iter().map(|m| m.name).collect();
                return Err(Error::Config(format!(
                    "unknown method '{name}'; known methods: {}",
                    known.join(", ")
                )));
            }
            methods.push(name.to_string());
        }
        if methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        self.methods = methods;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.update_threshold > self.accept_threshold {
            return Err(Error::Config(format!(
                "update threshold {} must not exceed accept threshold {}",
                self.update_threshold, self.accept_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.impostor_ratio) {
            return Err(Error::Config(format!(
                "impostor ratio {} must lie in [0, 1)",
                self.impostor_ratio
            )));
        }
        if self.runs == 0 {
            return Err(Error::Config("run count must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        for name in &self.methods {
            if find_method(name).is_none() {
                return Err(Error::Config(format!("unknown method '{name}'")));
            }
        }
        Ok(())
    }

    fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            delimiter: self.delimiter,
            lenient: self.lenient,
        }
    }

    pub fn load_corpus(&self) -> Result<Corpus> {
        let text = std::fs::read_to_string(&self.dataset)?;
        match self.format {
            DatasetFormat::Dsl2009 => parse_dsl2009_with(&text, &self.csv_options()),
            DatasetFormat::Generic => parse_generic_csv_with(
                &text,
                &self.user_col,
                &self.session_col,
                &self.rep_col,
                &self.csv_options(),
            ),
        }
    }

    fn run_config(&self, effective_update_threshold: f64) -> RunConfig {
        RunConfig {
            accept_threshold: self.accept_threshold,
            update_threshold: effective_update_threshold,
            impostor_ratio: self.impostor_ratio,
            runs: self.runs,
            pooling: self.pooling,
            impostor_with_replacement: self.impostor_with_replacement,
            score_method: Default::default(),
        }
    }

    fn header_block(&self, effective_update_threshold: f64) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# keydyn results v1");
        let _ = writeln!(h, "# dataset = {}", self.dataset.display());
        let _ = writeln!(h, "# format = {}", self.format.as_str());
        let _ = writeln!(h, "# user_col = {}", self.user_col);
        let _ = writeln!(h, "# session_col = {}", self.session_col);
        let _ = writeln!(h, "# rep_col = {}", self.rep_col);
        let _ = writeln!(h, "# delimiter = {}", delimiter_name(self.delimiter));
        let _ = writeln!(h, "# lenient = {}", self.lenient);
        let _ = writeln!(h, "# methods = {}", self.methods.join(","));
        let _ = writeln!(h, "# accept_threshold = {}", self.accept_threshold);
        let _ = writeln!(h, "# update_threshold = {}", self.update_threshold);
        let _ = writeln!(
            h,
            "# update_threshold_mode = {}",
            self.update_threshold_mode.as_str()
        );
        let _ = writeln!(
            h,
            "# effective_update_threshold = {effective_update_threshold}"
        );
        let _ = writeln!(h, "# impostor_ratio = {}", self.impostor_ratio);
        let _ = writeln!(h, "# runs = {}", self.runs);
        let _ = writeln!(h, "# master_seed = {}", self.master_seed);
        let _ = writeln!(h, "# pooling = {}", self.pooling.as_str());
        let _ = writeln!(
            h,
            "# impostor_with_replacement = {}",
            self.impostor_with_replacement
        );
        h
    }

    /// Rebuild a configuration from a results-file metadata block, as
    /// written by [`cmd_run`]. The echo keeps full float precision, so the
    /// rebuilt configuration reproduces the run exactly.
    pub fn from_header(
        header: &BTreeMap<String, String>,
        out_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        let get = |key: &str| {
            header
                .get(key)
                .ok_or_else(|| Error::Parse {
                    row: 1,
                    message: format!("results header misses '{key}'"),
                })
                .cloned()
        };
        let parse_f64 = |key: &str| -> Result<f64> {
            get(key)?.parse::<f64>().map_err(|_| Error::Parse {
                row: 1,
                message: format!("results header field '{key}' is not a number"),
            })
        };
        let mut config = ExperimentConfig::new(
            PathBuf::from(get("dataset")?),
            DatasetFormat::parse(&get("format")?)?,
            out_dir,
        );
        config.user_col = get("user_col")?;
        config.session_col = get("session_col")?;
        config.rep_col = get("rep_col")?;
        config.delimiter = delimiter_from_name(&get("delimiter")?)?;
        config.lenient = get("lenient")? == "true";
        config.methods = get("methods")?.split(',').map(str::to_string).collect();
        config.accept_threshold = parse_f64("accept_threshold")?;
        config.update_threshold = parse_f64("update_threshold")?;
        config.update_threshold_mode = UpdateThresholdMode::parse(&get("update_threshold_mode")?)?;
        config.impostor_ratio = parse_f64("impostor_ratio")?;
        config.runs = get("runs")?.parse().map_err(|_| Error::Parse {
            row: 1,
            message: "results header field 'runs' is not an integer".into(),
        })?;
        config.master_seed = get("master_seed")?.parse().map_err(|_| Error::Parse {
            row: 1,
            message: "results header field 'master_seed' is not an integer".into(),
        })?;
        config.pooling = match get("pooling")?.as_str() {
            "pooled" => Pooling::Pooled,
            "per-user" => Pooling::PerUser,
            other => {
                return Err(Error::Parse {
                    row: 1,
                    message: format!("unknown pooling '{other}'"),
                })
            }
        };
        config.impostor_with_replacement = get("impostor_with_replacement")? == "true";
        Ok(config)
    }
}

fn delimiter_name(delimiter: u8) -> &'static str {
    match delimiter {
        b';' => "semicolon",
        b'\t' => "tab",
        _ => "comma",
    }
}

fn delimiter_from_name(name: &str) -> Result<u8> {
    match name {
        "comma" | "," => Ok(b','),
        "semicolon" | ";" => Ok(b';'),
        "tab" | "\\t" => Ok(b'\t'),
        other => Err(Error::Config(format!("unknown delimiter '{other}'"))),
    }
}

fn fmt_rate(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6}"),
        None => "NA".to_string(),
    }
}

/// Half of the session-1 EER threshold, pooled over all users: genuine
/// scores are leave-one-out scores of each user's enrollment samples,
/// impostor scores come from every other user's session-1 samples against
/// the full enrollment reference.
pub fn derive_eer_half_update_threshold(corpus: &Corpus) -> Result<f64> {
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for user in corpus.user_ids() {
        let (enrollment, _) = enrollment_split(corpus, user)?;
        if enrollment.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "user {user}: need at least 3 enrollment samples for the eer-half mode"
            )));
        }
        let gallery = Gallery::new(enrollment.to_vec())?;
        let reference = build_reference(&gallery)?;
        for held_out in 0..enrollment.len() {
            let rest: Vec<_> = enrollment
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != held_out)
                .map(|(_, s)| s.clone())
                .collect();
            let loo_reference = build_reference(&Gallery::new(rest)?)?;
            genuine.push(score(&enrollment[held_out], &loo_reference)?);
        }
        for other in corpus.user_ids().filter(|u| *u != user) {
            for sample in corpus.samples(other, 1).into_iter().flatten() {
                impostor.push(score(sample, &reference)?);
            }
        }
    }
    Ok(eer_point(&genuine, &impostor)?.threshold / 2.0)
}

/// Outcome of [`cmd_run`]: where the files went and which update threshold
/// was actually applied.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary_path: PathBuf,
    pub runs_path: PathBuf,
    pub effective_update_threshold: f64,
}

/// Run every configured method and write `summary.csv` and `runs.csv` into
/// the output directory.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let corpus = config.load_corpus()?;

    let effective_update_threshold = match config.update_threshold_mode {
        UpdateThresholdMode::Fixed => config.update_threshold,
        UpdateThresholdMode::EerHalf => {
            let derived = derive_eer_half_update_threshold(&corpus)?;
            if derived > config.accept_threshold {
                return Err(Error::Config(format!(
                    "derived update threshold {derived} exceeds the accept threshold {}",
                    config.accept_threshold
                )));
            }
            derived
        }
    };
    let run_config = config.run_config(effective_update_threshold);

    let mut results: Vec<ExperimentResult> = Vec::with_capacity(config.methods.len());
    for name in &config.methods {
        let method = find_method(name).expect("validated");
        results.push(run_experiment(
            &corpus,
            &method,
            &run_config,
            config.master_seed,
        )?);
    }

    let header = config.header_block(effective_update_threshold);

    let mut summary = header.clone();
    summary.push_str("method,session,metric,mean,std,runs,seed\n");
    for result in &results {
        for session in &result.summary {
            for (m, name) in METRIC_NAMES.iter().enumerate() {
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{},{},{}",
                    result.method,
                    session.session,
                    name,
                    fmt_rate(session.mean[m]),
                    fmt_rate(session.std[m]),
                    config.runs,
                    config.master_seed
                );
            }
        }
    }

    let mut runs = header;
    runs.push_str("method,run,session,metric,value\n");
    for result in &results {
        for record in &result.per_run {
            for (session, values) in &record.sessions {
                for (m, name) in METRIC_NAMES.iter().enumerate() {
                    let _ = writeln!(
                        runs,
                        "{},{},{},{},{}",
                        result.method,
                        record.run,
                        session,
                        name,
                        fmt_rate(values[m])
                    );
                }
            }
        }
    }

    std::fs::create_dir_all(&config.out_dir)?;
    let summary_path = config.out_dir.join("summary.csv");
    let runs_path = config.out_dir.join("runs.csv");
    std::fs::write(&summary_path, summary)?;
    std::fs::write(&runs_path, runs)?;
    Ok(RunOutput {
        summary_path,
        runs_path,
        effective_update_threshold,
    })
}

/// A parsed `summary.csv`.
#[derive(Debug, Clone)]
pub struct SummaryFile {
    pub header: BTreeMap<String, String>,
    /// method -> session -> metric means in [`METRIC_NAMES`] order.
    pub methods: BTreeMap<String, BTreeMap<u32, [Option<f64>; 5]>>,
}

/// Read a `summary.csv` produced by [`cmd_run`].
pub fn read_summary(path: &Path) -> Result<SummaryFile> {
    let text = std::fs::read_to_string(path)?;
    let mut header = BTreeMap::new();
    let mut body_start = 0usize;
    let mut row = 0usize;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            row += 1;
            if let Some((key, value)) = rest.split_once('=') {
                header.insert(key.trim().to_string(), value.trim().to_string());
            }
            body_start += line.len() + 1;
        } else {
            break;
        }
    }
    let body = &text[body_start.min(text.len())..];
    let mut lines = body.lines();
    let expected_header = "method,session,metric,mean,std,runs,seed";
    row += 1;
    match lines.next() {
        Some(line) if line == expected_header => {}
        other => {
            return Err(Error::Schema(format!(
                "expected results column header '{expected_header}', found '{}'",
                other.unwrap_or("<eof>")
            )))
        }
    }

    let mut methods: BTreeMap<String, BTreeMap<u32, [Option<f64>; 5]>> = BTreeMap::new();
    for line in lines {
        row += 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                row,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let session: u32 = fields[1].parse().map_err(|_| Error::Parse {
            row,
            message: format!("invalid session '{}'", fields[1]),
        })?;
        let metric_idx = METRIC_NAMES
            .iter()
            .position(|m| *m == fields[2])
            .ok_or_else(|| Error::Parse {
                row,
                message: format!("unknown metric '{}'", fields[2]),
            })?;
        let mean = if fields[3] == "NA" {
            None
        } else {
            Some(fields[3].parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("invalid mean '{}'", fields[3]),
            })?)
        };
        methods
            .entry(fields[0].to_string())
            .or_default()
            .entry(session)
            .or_insert([None; 5])[metric_idx] = mean;
    }
    Ok(SummaryFile { header, methods })
}

/// Session-averaged criterion values per method, the input to ranking.
pub fn summary_criteria(summary: &SummaryFile) -> BTreeMap<String, [Option<f64>; 5]> {
    summary
        .methods
        .iter()
        .map(|(method, sessions)| {
            let mut out = [None; 5];
            for (m, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                let mut all = !sessions.is_empty();
                for values in sessions.values() {
                    match values[m] {
                        Some(v) => acc += v,
                        None => all = false,
                    }
                }
                if all {
                    *slot = Some(acc / sessions.len() as f64);
                }
            }
            (method.clone(), out)
        })
        .collect()
}

/// Rank the methods found in a results file. Returns the table plus a
/// human-readable rendering; optionally writes the table as CSV.
pub fn cmd_rank(results_path: &Path, out: Option<&Path>) -> Result<(RankTable, String)> {
    let summary = read_summary(results_path)?;
    let criteria = summary_criteria(&summary);
    // Ranking preconditions are data problems from the CLI's viewpoint.
    let table = rank_methods(&criteria).map_err(|e| match e {
        Error::Contract(msg) => Error::Integrity(msg),
        other => other,
    })?;

    let mut csv = String::from("# keydyn ranks v1\n");
    csv.push_str(
        "method,fmr_rank,fnmr_rank,eer_rank,iusr_rank,gumr_rank,rank_sum,rank_sum_without_eer,final_rank,final_rank_without_eer\n",
    );
    for row in &table.rows {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            row.method,
            row.criterion_ranks[0],
            row.criterion_ranks[1],
            row.criterion_ranks[2],
            row.criterion_ranks[3],
            row.criterion_ranks[4],
            row.rank_sum,
            row.rank_sum_without_eer,
            row.final_rank,
            row.final_rank_without_eer
        );
    }
    if let Some(path) = out {
        std::fs::write(path, &csv)?;
    }

    let mut human = String::new();
    let _ = writeln!(
        human,
        "{:<22} {:>5} {:>5} {:>5} {:>5} {:>5} {:>7} {:>8} {:>5} {:>9}",
        "method", "fmr", "fnmr", "eer", "iusr", "gumr", "sum", "sum-eer", "rank", "rank-eer"
    );
    for row in &table.rows {
        let _ = writeln!(
            human,
            "{:<22} {:>5.1} {:>5.1} {:>5.1} {:>5.1} {:>5.1} {:>7.1} {:>8.1} {:>5} {:>9}",
            row.method,
            row.criterion_ranks[0],
            row.criterion_ranks[1],
            row.criterion_ranks[2],
            row.criterion_ranks[3],
            row.criterion_ranks[4],
            row.rank_sum,
            row.rank_sum_without_eer,
            row.final_rank,
            row.final_rank_without_eer
        );
    }
    Ok((table, human))
}

/// Parameters of the `synth` subcommand.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub users: usize,
    pub sessions: u32,
    pub reps: usize,
    pub dimension: usize,
    pub drift_per_session: f64,
    pub noise_scale: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Generate a drift corpus and write it as generic CSV.
pub fn cmd_synth(params: &SynthParams) -> Result<()> {
    let corpus = generate_drift_corpus(
        params.users,
        params.sessions,
        params.reps,
        params.dimension,
        params.drift_per_session,
        params.noise_scale,
        params.seed,
    )?;
    if let Some(parent) = params.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&params.out, corpus.to_generic_csv())?;
    Ok(())
}

/// Load and validate a dataset; returns the one-line shape report.
pub fn cmd_validate(config: &ExperimentConfig) -> Result<String> {
    let corpus = config.load_corpus()?;
    let summary = corpus.summary();
    let reps = if summary.reps_min == summary.reps_max {
        format!("{}", summary.reps_min)
    } else {
        format!("{}-{}", summary.reps_min, summary.reps_max)
    };
    let status = if summary.ragged {
        "RAGGED (per-session counts differ)"
    } else {
        "OK"
    };
    Ok(format!(
        "{} users, {} sessions, {} reps/session, {} features, {}",
        summary.users, summary.sessions, reps, summary.dimension, status
    ))
}
