//! Multi-run experiment driver.
//!
//! One run enrolls every user on session 1 and replays sessions 2..=S in
//! chronological order, the meta-reference carrying over from session to
//! session. Streams are seeded per (run, user, session) from the master
//! seed, so results are bit-reproducible and independent of scheduling.
//! Runs and users are embarrassingly parallel; aggregation reduces in
//! deterministic (run, user) order.

use rayon::prelude::*;

use crate::adaptation::MethodSpec;
use crate::corpus::{enrollment_split, Corpus};
use crate::error::{Error, Result};
use crate::recognizer::{Gallery, ScoreMethod};
use crate::rng::{sub_seed, SplitMix64};

use super::stream::build_session_stream;
use super::{run_online_session, SessionTally};

/// How per-user session results combine into one per-session figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    /// Pool decision counts and scores across users, then compute rates.
    #[default]
    Pooled,
    /// Compute rates per user, then average the defined rates.
    PerUser,
}

impl Pooling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pooling::Pooled => "pooled",
            Pooling::PerUser => "per-user",
        }
    }
}

/// Evaluation parameters shared by every run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub accept_threshold: f64,
    pub update_threshold: f64,
    pub impostor_ratio: f64,
    pub runs: usize,
    pub pooling: Pooling,
    pub impostor_with_replacement: bool,
    pub score_method: ScoreMethod,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            accept_threshold: 0.0,
            update_threshold: -0.1,
            impostor_ratio: 0.3,
            runs: 100,
            pooling: Pooling::Pooled,
            impostor_with_replacement: false,
            score_method: ScoreMethod::ScaledDeviation,
        }
    }
}

impl RunConfig {
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
        Ok(())
    }
}

/// Per-session rates of one run, in [`super::METRIC_NAMES`] order.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    /// (session, five rates) for sessions 2..=S.
    pub sessions: Vec<(u32, [Option<f64>; 5])>,
}

/// Mean and standard deviation across runs for one session.
#[derive(Debug, Clone)]
pub struct SessionSummary {
    pub session: u32,
    pub mean: [Option<f64>; 5],
    pub std: [Option<f64>; 5],
}

/// All results of one method on one corpus.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub method: String,
    pub per_run: Vec<RunRecord>,
    pub summary: Vec<SessionSummary>,
}

impl ExperimentResult {
    /// Session-averaged criterion values (mean over the per-session means),
    /// the input to method ranking. `None` if any session mean is undefined.
    pub fn session_averaged_criteria(&self) -> [Option<f64>; 5] {
        let mut out = [None; 5];
        for (m, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut all = true;
            for summary in &self.summary {
                match summary.mean[m] {
                    Some(v) => acc += v,
                    None => all = false,
                }
            }
            if all && !self.summary.is_empty() {
                *slot = Some(acc / self.summary.len() as f64);
            }
        }
        out
    }
}

/// Replay every session of one user in one run; returns per-session tallies.
fn replay_user(
    corpus: &Corpus,
    method: &MethodSpec,
    config: &RunConfig,
    master_seed: u64,
    run: usize,
    user: &str,
    user_ordinal: usize,
) -> Result<Vec<(u32, SessionTally)>> {
    let (enrollment, _) = enrollment_split(corpus, user)?;
    let gallery = Gallery::new(enrollment.to_vec())?;
    let mut meta = method.instantiate_with(&gallery, config.score_method)?;
    let mut tallies = Vec::with_capacity(corpus.session_count().saturating_sub(1) as usize);
    for session in 2..=corpus.session_count() {
        let seed = sub_seed(master_seed, run as u64, user_ordinal as u64, session as u64);
        let mut rng = SplitMix64::new(seed);
        let stream = build_session_stream(
            corpus,
            user,
            session,
            config.impostor_ratio,
            &mut rng,
            config.impostor_with_replacement,
        )?;
        let log = run_online_session(
            &mut meta,
            &stream,
            config.accept_threshold,
            config.update_threshold,
            user,
            session,
        )?;
        tallies.push((session, SessionTally::from_log(&log)));
    }
    Ok(tallies)
}

fn combine_session(tallies: Vec<&SessionTally>, pooling: Pooling) -> [Option<f64>; 5] {
    match pooling {
        Pooling::Pooled => {
            let mut pool = SessionTally::default();
            for tally in tallies {
                pool.merge(tally);
            }
            pool.metrics().values()
        }
        Pooling::PerUser => {
            let per_user: Vec<[Option<f64>; 5]> =
                tallies.iter().map(|t| t.metrics().values()).collect();
            let mut out = [None; 5];
            for (m, slot) in out.iter_mut().enumerate() {
                let defined: Vec<f64> = per_user.iter().filter_map(|v| v[m]).collect();
                if !defined.is_empty() {
                    *slot = Some(defined.iter().sum::<f64>() / defined.len() as f64);
                }
            }
            out
        }
    }
}

/// Run `config.runs` independent replays of the whole corpus under `method`
/// and aggregate per session: mean and (population) standard deviation of
/// each rate across runs. Sessions are never averaged together.
pub fn run_experiment(
    corpus: &Corpus,
    method: &MethodSpec,
    config: &RunConfig,
    master_seed: u64,
) -> Result<ExperimentResult> {
    config.validate()?;
    if corpus.session_count() < 2 {
        return Err(Error::Contract(
            "corpus needs at least two sessions (enrollment plus one test session)".into(),
        ));
    }
    let users: Vec<&str> = corpus.user_ids().collect();
    let sessions: Vec<u32> = (2..=corpus.session_count()).collect();

    let mut per_run = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let user_tallies: Vec<Vec<(u32, SessionTally)>> = users
            .par_iter()
            .enumerate()
            .map(|(ordinal, user)| {
                replay_user(corpus, method, config, master_seed, run, user, ordinal)
            })
            .collect::<Result<_>>()?;

        let mut session_values = Vec::with_capacity(sessions.len());
        for (s_idx, &session) in sessions.iter().enumerate() {
            let tallies: Vec<&SessionTally> = user_tallies
                .iter()
                .map(|per_session| {
                    debug_assert_eq!(per_session[s_idx].0, session);
                    &per_session[s_idx].1
                })
                .collect();
            session_values.push((session, combine_session(tallies, config.pooling)));
        }
        per_run.push(RunRecord {
            run,
            sessions: session_values,
        });
    }

    let summary = sessions
        .iter()
        .enumerate()
        .map(|(s_idx, &session)| {
            let mut mean = [None; 5];
            let mut std = [None; 5];
            for m in 0..5 {
                let values: Vec<f64> = per_run
                    .iter()
                    .filter_map(|record| record.sessions[s_idx].1[m])
                    .collect();
                if values.len() == per_run.len() {
                    let avg = values.iter().sum::<f64>() / values.len() as f64;
                    let var = values.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>()
                        / values.len() as f64;
                    mean[m] = Some(avg);
                    std[m] = Some(var.max(0.0).sqrt());
                }
            }
            SessionSummary { session, mean, std }
        })
        .collect();

    Ok(ExperimentResult {
        method: method.name.clone(),
        per_run,
        summary,
    })
}
