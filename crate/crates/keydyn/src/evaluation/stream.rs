//! Per-session query streams: all genuine samples of the session plus a
//! configurable share of impostor samples from other users, randomly ordered.

use crate::corpus::{Corpus, KeystrokeSample};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// One presented query with its ground truth. The label exists for metrics
/// only; the replay never shows it to the decision path.
#[derive(Debug, Clone)]
pub struct StreamEvent {
    pub query: KeystrokeSample,
    pub is_genuine: bool,
    pub source_user: String,
}

/// Number of impostor events for `genuine` genuine events at `ratio`
/// impostors in the stream: `round(N_g * r / (1 - r))`.
pub fn impostor_count(genuine: usize, ratio: f64) -> usize {
    (genuine as f64 * ratio / (1.0 - ratio)).round() as usize
}

/// Build the query stream for one test session of one claimed user.
///
/// Genuine events are all of the user's samples for that session. Impostor
/// events are drawn uniformly without replacement from the other users'
/// samples of the same session (chronology holds at session granularity);
/// `with_replacement` lifts the no-replacement constraint when the candidate
/// pool is too small. The merged events are shuffled under `rng`.
pub fn build_session_stream(
    corpus: &Corpus,
    claimed_user: &str,
    session: u32,
    impostor_ratio: f64,
    rng: &mut SplitMix64,
    with_replacement: bool,
) -> Result<Vec<StreamEvent>> {
    if session < 2 {
        return Err(Error::Contract(format!(
            "session {session} is not a test session (session 1 is enrollment)"
        )));
    }
    if !(0.0..1.0).contains(&impostor_ratio) {
        return Err(Error::Config(format!(
            "impostor ratio {impostor_ratio} must lie in [0, 1)"
        )));
    }
    if !corpus.contains_user(claimed_user) {
        return Err(Error::Lookup(format!("unknown user {claimed_user}")));
    }
    let genuine = corpus
        .samples(claimed_user, session)
        .ok_or_else(|| Error::Lookup(format!("user {claimed_user} has no session {session}")))?;

    let wanted = impostor_count(genuine.len(), impostor_ratio);
    let candidates: Vec<&KeystrokeSample> = corpus
        .user_ids()
        .filter(|u| *u != claimed_user)
        .flat_map(|u| {
            corpus
                .samples(u, session)
                .into_iter()
                .flat_map(|s| s.iter())
        })
        .collect();
    if wanted > candidates.len() && !with_replacement {
        return Err(Error::Sampling(format!(
            "need {wanted} impostor samples but only {} candidates exist in session {session}",
            candidates.len()
        )));
    }

    let mut events: Vec<StreamEvent> = genuine
        .iter()
        .map(|sample| StreamEvent {
            query: sample.clone(),
            is_genuine: true,
            source_user: claimed_user.to_string(),
        })
        .collect();
    if wanted > 0 {
        let picks: Vec<usize> = if wanted <= candidates.len() {
            rng.sample_indices(candidates.len(), wanted)
        } else {
            (0..wanted)
                .map(|_| rng.next_index(candidates.len()))
                .collect()
        };
        events.extend(picks.into_iter().map(|i| {
            let sample = candidates[i];
            StreamEvent {
                query: sample.clone(),
                is_genuine: false,
                source_user: sample.user_id.clone(),
            }
        }));
    }
    rng.shuffle(&mut events);
    Ok(events)
}
