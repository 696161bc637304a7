//! Dataset ingestion, validation and session indexing.
//!
//! A corpus holds typed-password timing vectors grouped per user and per
//! chronological session. Session 1 is the enrollment block; later sessions
//! are replayed in order by the evaluation module. Two CSV layouts are
//! supported: the DSL2009 benchmark layout (`subject,sessionIndex,rep`
//! followed by timing columns) and a generic long-form layout with
//! configurable identity columns.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Ordered feature labels; fixes the dimension of every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    feature_names: Vec<String>,
}

impl FeatureSchema {
    pub fn new(feature_names: Vec<String>) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::Schema("schema needs at least one feature".into()));
        }
        let mut seen = feature_names.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != feature_names.len() {
            return Err(Error::Schema("duplicate feature names".into()));
        }
        Ok(Self { feature_names })
    }

    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

/// One typed-password timing vector with its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct KeystrokeSample {
    pub user_id: String,
    /// 1-based chronological session.
    pub session_index: u32,
    /// 1-based order within the session.
    pub rep_index: u32,
    pub features: Vec<f64>,
}

/// Immutable, validated dataset. Safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    schema: FeatureSchema,
    users: BTreeMap<String, BTreeMap<u32, Vec<KeystrokeSample>>>,
    session_count: u32,
    ragged: bool,
}

/// Shape report produced by validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSummary {
    pub users: usize,
    pub sessions: u32,
    pub reps_min: usize,
    pub reps_max: usize,
    pub dimension: usize,
    pub ragged: bool,
}

/// CSV dialect and tolerance knobs shared by both parsers.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// `,` by default; `;` and tab are also supported.
    pub delimiter: u8,
    /// Tolerate duplicated (user, session, rep) triples, keeping file order.
    pub lenient: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            lenient: false,
        }
    }
}

impl Corpus {
    /// Group, order and validate loose samples into a corpus.
    ///
    /// Sessions must cover 1..=max contiguously for every user and each must
    /// be non-empty. Samples are ordered by `rep_index` (stable, so input
    /// order breaks ties when `lenient` permits duplicates).
    pub fn from_samples(
        schema: FeatureSchema,
        samples: Vec<KeystrokeSample>,
        lenient: bool,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Integrity("corpus has no samples".into()));
        }
        let dim = schema.dimension();
        let mut users: BTreeMap<String, BTreeMap<u32, Vec<KeystrokeSample>>> = BTreeMap::new();
        for sample in samples {
            if sample.features.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: sample.features.len(),
                });
            }
            if sample.session_index == 0 || sample.rep_index == 0 {
                return Err(Error::Integrity(format!(
                    "user {}: session and rep indices are 1-based",
                    sample.user_id
                )));
            }
            users
                .entry(sample.user_id.clone())
                .or_default()
                .entry(sample.session_index)
                .or_default()
                .push(sample);
        }

        let session_count = users
            .values()
            .flat_map(|sessions| sessions.keys().copied())
            .max()
            .expect("non-empty corpus");

        let mut reps_min = usize::MAX;
        let mut reps_max = 0usize;
        for (user, sessions) in &mut users {
            for expected in 1..=session_count {
                if !sessions.contains_key(&expected) {
                    return Err(Error::Integrity(format!(
                        "user {user} is missing session {expected} of {session_count}"
                    )));
                }
            }
            for (session, samples) in sessions.iter_mut() {
                samples.sort_by_key(|s| s.rep_index);
                if !lenient {
                    for pair in samples.windows(2) {
                        if pair[0].rep_index == pair[1].rep_index {
                            return Err(Error::Integrity(format!(
                                "user {user} session {session}: duplicate rep {}",
                                pair[0].rep_index
                            )));
                        }
                    }
                }
                reps_min = reps_min.min(samples.len());
                reps_max = reps_max.max(samples.len());
            }
        }

        Ok(Self {
            schema,
            users,
            session_count,
            ragged: reps_min != reps_max,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn session_count(&self) -> u32 {
        self.session_count
    }

    /// User ids in sorted order (this order defines user ordinals).
    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.users.keys().map(String::as_str)
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// Position of `user` in the sorted id list.
    pub fn user_ordinal(&self, user: &str) -> Option<usize> {
        self.users.keys().position(|u| u == user)
    }

    pub fn contains_user(&self, user: &str) -> bool {
        self.users.contains_key(user)
    }

    /// Samples of one session of one user, in chronological (rep) order.
    pub fn samples(&self, user: &str, session: u32) -> Option<&[KeystrokeSample]> {
        self.users
            .get(user)
            .and_then(|sessions| sessions.get(&session))
            .map(Vec::as_slice)
    }

    pub fn total_samples(&self) -> usize {
        self.users
            .values()
            .flat_map(|sessions| sessions.values())
            .map(Vec::len)
            .sum()
    }

    /// True when per-session sample counts differ across (user, session) cells.
    pub fn is_ragged(&self) -> bool {
        self.ragged
    }

    pub fn summary(&self) -> CorpusSummary {
        let mut reps_min = usize::MAX;
        let mut reps_max = 0usize;
        for sessions in self.users.values() {
            for samples in sessions.values() {
                reps_min = reps_min.min(samples.len());
                reps_max = reps_max.max(samples.len());
            }
        }
        CorpusSummary {
            users: self.users.len(),
            sessions: self.session_count,
            reps_min,
            reps_max,
            dimension: self.schema.dimension(),
            ragged: self.ragged,
        }
    }

    /// Reject irregular shapes: every (user, session) cell must hold the
    /// same number of repetitions. Used by the DSL2009 parser.
    fn require_regular(&self) -> Result<()> {
        if self.ragged {
            return Err(Error::Integrity(
                "irregular benchmark: per-session sample counts differ".into(),
            ));
        }
        Ok(())
    }

    /// Serialize to the generic long-form layout (`user,session,rep` followed
    /// by the schema's feature columns). Floats use the shortest
    /// representation that round-trips, so parse(write(c)) == c.
    pub fn to_generic_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("user,session,rep");
        for name in self.schema.feature_names() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (user, sessions) in &self.users {
            for (session, samples) in sessions {
                for sample in samples {
                    out.push_str(user);
                    out.push_str(&format!(",{session},{}", sample.rep_index));
                    for value in &sample.features {
                        out.push_str(&format!(",{value}"));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Test sessions of one user: session index to its samples, chronological.
pub type TestSessions<'a> = BTreeMap<u32, &'a [KeystrokeSample]>;

/// Split a user's data into the enrollment block (session 1) and the test
/// sessions (2..=session_count), all borrowed from the corpus.
pub fn enrollment_split<'a>(
    corpus: &'a Corpus,
    user_id: &str,
) -> Result<(&'a [KeystrokeSample], TestSessions<'a>)> {
    if !corpus.contains_user(user_id) {
        return Err(Error::Lookup(format!("unknown user {user_id}")));
    }
    let enrollment = corpus
        .samples(user_id, 1)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Integrity(format!("user {user_id} has an empty session 1")))?;
    let mut test_sessions = BTreeMap::new();
    for session in 2..=corpus.session_count() {
        let samples = corpus
            .samples(user_id, session)
            .ok_or_else(|| Error::Integrity(format!("user {user_id} misses session {session}")))?;
        test_sessions.insert(session, samples);
    }
    Ok((enrollment, test_sessions))
}

/// Parse the DSL2009 benchmark layout: header `subject,sessionIndex,rep`
/// followed by at least one numeric timing column. Enforces the benchmark's
/// regular shape (equal repetitions in every session of every user).
pub fn parse_dsl2009(csv_text: &str) -> Result<Corpus> {
    parse_dsl2009_with(csv_text, &CsvOptions::default())
}

pub fn parse_dsl2009_with(csv_text: &str, options: &CsvOptions) -> Result<Corpus> {
    let corpus = parse_with_columns(csv_text, "subject", "sessionIndex", "rep", options, true)?;
    corpus.require_regular()?;
    Ok(corpus)
}

/// Parse a long-form CSV with named identity columns; every other column is
/// a numeric feature. Ragged session sizes are accepted (and flagged on the
/// corpus) but missing sessions are still integrity errors.
pub fn parse_generic_csv(
    csv_text: &str,
    user_col: &str,
    session_col: &str,
    rep_col: &str,
) -> Result<Corpus> {
    parse_generic_csv_with(
        csv_text,
        user_col,
        session_col,
        rep_col,
        &CsvOptions::default(),
    )
}

pub fn parse_generic_csv_with(
    csv_text: &str,
    user_col: &str,
    session_col: &str,
    rep_col: &str,
    options: &CsvOptions,
) -> Result<Corpus> {
    parse_with_columns(csv_text, user_col, session_col, rep_col, options, false)
}

fn parse_with_columns(
    csv_text: &str,
    user_col: &str,
    session_col: &str,
    rep_col: &str,
    options: &CsvOptions,
    fixed_layout: bool,
) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(csv_text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Schema("empty input: no header row".into()));
    }

    let (user_idx, session_idx, rep_idx) = if fixed_layout {
        // DSL2009 contract: the three identity columns come first.
        let expected = [user_col, session_col, rep_col];
        for (i, name) in expected.iter().enumerate() {
            if headers.get(i).map(String::as_str) != Some(*name) {
                return Err(Error::Schema(format!(
                    "column {} must be '{name}', found '{}'",
                    i + 1,
                    headers.get(i).map(String::as_str).unwrap_or("<missing>")
                )));
            }
        }
        (0, 1, 2)
    } else {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("identity column '{name}' not found")))
        };
        (find(user_col)?, find(session_col)?, find(rep_col)?)
    };
    if user_idx == session_idx || user_idx == rep_idx || session_idx == rep_idx {
        return Err(Error::Config("identity columns must be distinct".into()));
    }

    let feature_columns: Vec<usize> = (0..headers.len())
        .filter(|i| *i != user_idx && *i != session_idx && *i != rep_idx)
        .collect();
    let schema = FeatureSchema::new(
        feature_columns
            .iter()
            .map(|&i| headers[i].clone())
            .collect(),
    )?;

    let mut samples = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (record_no, record) in reader.records().enumerate() {
        let row = record_no + 2; // header is row 1
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let user_id = record[user_idx].to_string();
        let session_index: u32 = record[session_idx].trim().parse().map_err(|_| Error::Parse {
            row,
            message: format!("invalid session index '{}'", &record[session_idx]),
        })?;
        let rep_index: u32 = record[rep_idx].trim().parse().map_err(|_| Error::Parse {
            row,
            message: format!("invalid rep index '{}'", &record[rep_idx]),
        })?;
        if session_index == 0 || rep_index == 0 {
            return Err(Error::Parse {
                row,
                message: "session and rep indices are 1-based".into(),
            });
        }
        if !options.lenient && !seen.insert((user_id.clone(), session_index, rep_index)) {
            return Err(Error::Integrity(format!(
                "duplicate (user, session, rep) = ({user_id}, {session_index}, {rep_index}) at row {row}"
            )));
        }

        let mut features = Vec::with_capacity(feature_columns.len());
        for &col in &feature_columns {
            let cell = record[col].trim();
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric value '{cell}' in column '{}'", headers[col]),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite value in column '{}'", headers[col]),
                });
            }
            if value < 0.0 {
                return Err(Error::Parse {
                    row,
                    message: format!("negative timing value in column '{}'", headers[col]),
                });
            }
            features.push(value);
        }
        samples.push(KeystrokeSample {
            user_id,
            session_index,
            rep_index,
            features,
        });
    }

    Corpus::from_samples(schema, samples, options.lenient)
}
