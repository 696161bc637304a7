//! Online adapt-and-test evaluation: session streams, replay, per-session
//! error metrics, run aggregation, method ranking and a synthetic drift
//! corpus used as a verification oracle.
//!
//! Every session is scored on its own ("no error average with previous
//! sessions"): the replay walks the stream in presentation order, logs each
//! fused score and decision, lets the meta-reference update itself, and the
//! per-session rates are computed from that log afterwards.

pub mod eer;
pub mod experiment;
pub mod ranking;
pub mod stream;
pub mod synth;

pub use eer::{eer, eer_point, EerPoint};
pub use experiment::{
    run_experiment, ExperimentResult, Pooling, RunConfig, RunRecord, SessionSummary,
};
pub use ranking::{rank_methods, RankRow, RankTable};
pub use stream::{build_session_stream, impostor_count, StreamEvent};
pub use synth::generate_drift_corpus;

use crate::adaptation::{verify_and_maybe_update, Decision, MetaReference};
use crate::error::Result;

/// Metric order used everywhere results are tabulated.
pub const METRIC_NAMES: [&str; 5] = ["fmr", "fnmr", "eer", "iusr", "gumr"];

/// One scored presentation: ground truth, fused score, decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub is_genuine: bool,
    pub fused_score: f64,
    pub decision: Decision,
}

/// Complete record of one replayed session, in presentation order.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub claimed_user: String,
    pub session_index: u32,
    pub entries: Vec<LogEntry>,
}

/// Per-session error rates with the counts they derive from.
///
/// `N_t = N_i + N_g` queries were presented; `U_i`/`U_g` of the impostor /
/// genuine ones were selected for updating. Rates are `None` whenever their
/// denominator is zero, never silently 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionMetrics {
    pub n_t: usize,
    pub n_i: usize,
    pub n_g: usize,
    pub u_i: usize,
    pub u_g: usize,
    pub fmr: Option<f64>,
    pub fnmr: Option<f64>,
    pub eer: Option<f64>,
    pub iusr: Option<f64>,
    pub gumr: Option<f64>,
}

impl SessionMetrics {
    /// The five rates in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [Option<f64>; 5] {
        [self.fmr, self.fnmr, self.eer, self.iusr, self.gumr]
    }
}

/// Decision counts and score pools extracted from session logs. Tallies for
/// the same session can be merged across users before rates are computed.
#[derive(Debug, Clone, Default)]
pub struct SessionTally {
    pub n_i: usize,
    pub n_g: usize,
    pub u_i: usize,
    pub u_g: usize,
    pub impostor_accepts: usize,
    pub genuine_rejects: usize,
    pub genuine_scores: Vec<f64>,
    pub impostor_scores: Vec<f64>,
}

impl SessionTally {
    pub fn from_log(log: &SessionLog) -> Self {
        let mut tally = SessionTally::default();
        tally.absorb(log);
        tally
    }

    pub fn absorb(&mut self, log: &SessionLog) {
        for entry in &log.entries {
            if entry.is_genuine {
                self.n_g += 1;
                self.genuine_scores.push(entry.fused_score);
                if !entry.decision.is_accepted() {
                    self.genuine_rejects += 1;
                }
                if entry.decision.is_update() {
                    self.u_g += 1;
                }
            } else {
                self.n_i += 1;
                self.impostor_scores.push(entry.fused_score);
                if entry.decision.is_accepted() {
                    self.impostor_accepts += 1;
                }
                if entry.decision.is_update() {
                    self.u_i += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &SessionTally) {
        self.n_i += other.n_i;
        self.n_g += other.n_g;
        self.u_i += other.u_i;
        self.u_g += other.u_g;
        self.impostor_accepts += other.impostor_accepts;
        self.genuine_rejects += other.genuine_rejects;
        self.genuine_scores.extend_from_slice(&other.genuine_scores);
        self.impostor_scores
            .extend_from_slice(&other.impostor_scores);
    }

    /// Rates from the tallied counts; EER from the pooled fused scores.
    pub fn metrics(&self) -> SessionMetrics {
        let ratio = |num: usize, den: usize| {
            if den > 0 {
                Some(num as f64 / den as f64)
            } else {
                None
            }
        };
        SessionMetrics {
            n_t: self.n_i + self.n_g,
            n_i: self.n_i,
            n_g: self.n_g,
            u_i: self.u_i,
            u_g: self.u_g,
            fmr: ratio(self.impostor_accepts, self.n_i),
            fnmr: ratio(self.genuine_rejects, self.n_g),
            eer: eer::eer(&self.genuine_scores, &self.impostor_scores).ok(),
            iusr: ratio(self.u_i, self.n_i),
            gumr: ratio(self.n_g - self.u_g, self.n_g),
        }
    }
}

/// Replay one session online (joint adapt-and-test): each event is scored
/// against the current meta-reference, logged, and may update it before the
/// next event. Ground truth never reaches the decision path.
pub fn run_online_session(
    meta: &mut MetaReference,
    stream: &[StreamEvent],
    accept_threshold: f64,
    update_threshold: f64,
    claimed_user: &str,
    session_index: u32,
) -> Result<SessionLog> {
    let mut entries = Vec::with_capacity(stream.len());
    for event in stream {
        let (decision, fused_score) =
            verify_and_maybe_update(meta, &event.query, accept_threshold, update_threshold)?;
        entries.push(LogEntry {
            is_genuine: event.is_genuine,
            fused_score,
            decision,
        });
    }
    Ok(SessionLog {
        claimed_user: claimed_user.to_string(),
        session_index,
        entries,
    })
}

/// Error rates of one session log; see [`SessionTally::metrics`].
pub fn session_metrics(log: &SessionLog) -> SessionMetrics {
    SessionTally::from_log(log).metrics()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{find_method, Decision};
    use crate::corpus::KeystrokeSample;
    use crate::recognizer::Gallery;
    use crate::rng::SplitMix64;

    fn entry(is_genuine: bool, score: f64, decision: Decision) -> LogEntry {
        LogEntry {
            is_genuine,
            fused_score: score,
            decision,
        }
    }

    fn log_of(entries: Vec<LogEntry>) -> SessionLog {
        SessionLog {
            claimed_user: "u".into(),
            session_index: 2,
            entries,
        }
    }

    #[test]
    fn update_rates_follow_the_count_ratios() {
        // U_i = 1 of N_i = 2, U_g = 1 of N_g = 2.
        let log = log_of(vec![
            entry(true, -0.2, Decision::AcceptAndUpdate),
            entry(true, 0.1, Decision::Reject),
            entry(false, -0.3, Decision::AcceptAndUpdate),
            entry(false, 0.4, Decision::Reject),
        ]);
        let m = session_metrics(&log);
        assert_eq!((m.n_t, m.n_i, m.n_g, m.u_i, m.u_g), (4, 2, 2, 1, 1));
        assert_eq!(m.iusr, Some(0.5));
        assert_eq!(m.gumr, Some(0.5));
        assert_eq!(m.fmr, Some(0.5));
        assert_eq!(m.fnmr, Some(0.5));
    }

    #[test]
    fn update_rate_arithmetic_on_larger_counts() {
        // U_i = 5 of N_i = 50 -> iusr 0.1; U_g = 30 of N_g = 40 -> gumr 0.25.
        let mut entries = Vec::new();
        for i in 0..50 {
            let decision = if i < 5 {
                Decision::AcceptAndUpdate
            } else {
                Decision::Reject
            };
            entries.push(entry(false, 0.5, decision));
        }
        for i in 0..40 {
            let decision = if i < 30 {
                Decision::AcceptAndUpdate
            } else {
                Decision::Accept
            };
            entries.push(entry(true, -0.5, decision));
        }
        let m = session_metrics(&log_of(entries));
        assert_eq!(m.iusr, Some(0.1));
        assert_eq!(m.gumr, Some(0.25));
    }

    #[test]
    fn no_update_log_has_iusr_zero_and_gumr_one() {
        let log = log_of(vec![
            entry(true, -0.5, Decision::Accept),
            entry(true, 0.3, Decision::Reject),
            entry(false, -0.4, Decision::Accept),
            entry(false, 0.6, Decision::Reject),
        ]);
        let m = session_metrics(&log);
        assert_eq!(m.iusr, Some(0.0));
        assert_eq!(m.gumr, Some(1.0));
    }

    #[test]
    fn perfect_session_zeroes_the_error_rates() {
        let log = log_of(vec![
            entry(true, -0.5, Decision::AcceptAndUpdate),
            entry(true, -0.4, Decision::AcceptAndUpdate),
            entry(false, 0.6, Decision::Reject),
        ]);
        let m = session_metrics(&log);
        assert_eq!(m.fmr, Some(0.0));
        assert_eq!(m.fnmr, Some(0.0));
        assert_eq!(m.iusr, Some(0.0));
        assert_eq!(m.gumr, Some(0.0));
        assert_eq!(m.eer, Some(0.0));
    }

    #[test]
    fn zero_denominators_yield_undefined_markers() {
        let log = log_of(vec![entry(true, -0.5, Decision::Accept)]);
        let m = session_metrics(&log);
        assert_eq!(m.fnmr, Some(0.0));
        assert_eq!(m.fmr, None);
        assert_eq!(m.iusr, None);
        assert_eq!(m.eer, None);
        assert_eq!(m.gumr, Some(1.0));
    }

    #[test]
    fn merged_tallies_match_concatenated_logs() {
        let log_a = log_of(vec![
            entry(true, -0.2, Decision::AcceptAndUpdate),
            entry(false, 0.4, Decision::Reject),
        ]);
        let log_b = log_of(vec![
            entry(true, 0.2, Decision::Reject),
            entry(false, -0.15, Decision::AcceptAndUpdate),
        ]);
        let mut merged = SessionTally::from_log(&log_a);
        merged.merge(&SessionTally::from_log(&log_b));
        let mut combined = log_a.clone();
        combined.entries.extend(log_b.entries.iter().copied());
        assert_eq!(merged.metrics(), session_metrics(&combined));
    }

    fn sample(user: &str, session: u32, rep: u32, features: Vec<f64>) -> KeystrokeSample {
        KeystrokeSample {
            user_id: user.into(),
            session_index: session,
            rep_index: rep,
            features,
        }
    }

    #[test]
    fn no_update_meta_is_a_fixed_point_of_replay() {
        let gallery = Gallery::new(vec![
            sample("u", 1, 1, vec![0.10, 0.20]),
            sample("u", 1, 2, vec![0.12, 0.22]),
            sample("u", 1, 3, vec![0.11, 0.21]),
        ])
        .unwrap();
        let mut meta = find_method("None").unwrap().instantiate(&gallery).unwrap();
        let reference_before = meta.subs()[0].reference().clone();
        let stream: Vec<StreamEvent> = (0..20)
            .map(|i| StreamEvent {
                query: sample("v", 2, i + 1, vec![0.10 + i as f64 * 0.01, 0.20]),
                is_genuine: false,
                source_user: "v".into(),
            })
            .collect();
        run_online_session(&mut meta, &stream, 0.0, -0.1, "u", 2).unwrap();
        assert_eq!(meta.subs()[0].reference(), &reference_before);
        assert_eq!(meta.subs()[0].gallery().len(), 3);
    }

    #[test]
    fn single_low_scoring_genuine_event_updates_and_is_counted() {
        let gallery = Gallery::new(vec![
            sample("u", 1, 1, vec![0.10, 0.20]),
            sample("u", 1, 2, vec![0.12, 0.22]),
            sample("u", 1, 3, vec![0.11, 0.21]),
        ])
        .unwrap();
        let mut meta = find_method("Sliding")
            .unwrap()
            .instantiate(&gallery)
            .unwrap();
        // The gallery mean scores raw distance 0, far below the update
        // threshold once centered.
        let stream = vec![StreamEvent {
            query: sample("u", 2, 1, vec![0.11, 0.21]),
            is_genuine: true,
            source_user: "u".into(),
        }];
        let log = run_online_session(&mut meta, &stream, 0.0, -0.1, "u", 2).unwrap();
        assert_eq!(log.entries.len(), 1);
        assert_eq!(log.entries[0].decision, Decision::AcceptAndUpdate);
        let m = session_metrics(&log);
        assert_eq!(m.u_g, 1);
        assert_eq!(m.gumr, Some(0.0));
    }

    #[test]
    fn replaying_a_meta_copy_reproduces_the_log() {
        let corpus = synth::generate_drift_corpus(3, 3, 6, 3, 0.01, 0.02, 5).unwrap();
        let (enrollment, _) = crate::corpus::enrollment_split(&corpus, "u001").unwrap();
        let gallery = Gallery::new(enrollment.to_vec()).unwrap();
        let spec = find_method("Parallel both").unwrap();
        let mut rng = SplitMix64::new(123);
        let stream = build_session_stream(&corpus, "u001", 2, 0.3, &mut rng, false).unwrap();

        let mut meta_a = spec.instantiate(&gallery).unwrap();
        let mut meta_b = spec.instantiate(&gallery).unwrap();
        let log_a = run_online_session(&mut meta_a, &stream, 0.0, -0.1, "u001", 2).unwrap();
        let log_b = run_online_session(&mut meta_b, &stream, 0.0, -0.1, "u001", 2).unwrap();
        assert_eq!(log_a, log_b);
    }
}
