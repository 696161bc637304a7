//! Step-by-step replay oracle.
//!
//! A deliberately naive second implementation of the whole adapt-and-test
//! loop (two-pass statistics, from-scratch leave-one-out calibration, plain
//! if-chains) replays the same streams as the library and must produce the
//! same decisions and per-session update counts.

mod common;

use keydyn::adaptation::{find_method, Decision, UpdateStrategy};
use keydyn::corpus::enrollment_split;
use keydyn::evaluation::{
    build_session_stream, generate_drift_corpus, run_online_session, session_metrics, StreamEvent,
};
use keydyn::recognizer::Gallery;
use keydyn::rng::SplitMix64;

const EPSILON: f64 = 1e-6;
const LAMBDA_FLOOR: f64 = 1e-6;

struct NaiveReference {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    theta: f64,
    lambda: f64,
}

fn naive_mean_std(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = rows[0].len();
    let k = rows.len() as f64;
    let mut mu = vec![0.0; dim];
    for row in rows {
        for i in 0..dim {
            mu[i] += row[i];
        }
    }
    for m in &mut mu {
        *m /= k;
    }
    let mut sigma = vec![0.0; dim];
    for row in rows {
        for i in 0..dim {
            sigma[i] += (row[i] - mu[i]) * (row[i] - mu[i]);
        }
    }
    for s in &mut sigma {
        *s = (*s / k).sqrt();
    }
    (mu, sigma)
}

fn naive_distance(query: &[f64], mu: &[f64], sigma: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..mu.len() {
        acc += (query[i] - mu[i]).abs() / (sigma[i] + EPSILON);
    }
    acc / mu.len() as f64
}

fn naive_build(rows: &[Vec<f64>]) -> NaiveReference {
    let (mu, sigma) = naive_mean_std(rows);
    let mut loo = Vec::with_capacity(rows.len());
    for held_out in 0..rows.len() {
        let rest: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != held_out)
            .map(|(_, r)| r.clone())
            .collect();
        let (loo_mu, loo_sigma) = naive_mean_std(&rest);
        loo.push(naive_distance(&rows[held_out], &loo_mu, &loo_sigma));
    }
    let mean = loo.iter().sum::<f64>() / loo.len() as f64;
    let var = loo.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / loo.len() as f64;
    let std = var.sqrt();
    NaiveReference {
        mu,
        sigma,
        theta: mean + 2.0 * std,
        lambda: std.max(LAMBDA_FLOOR),
    }
}

struct NaiveSub {
    rows: Vec<Vec<f64>>,
    strategy: UpdateStrategy,
    reference: NaiveReference,
}

struct NaiveMeta {
    subs: Vec<NaiveSub>,
    use_min: bool,
}

impl NaiveMeta {
    fn new(enrollment: &[Vec<f64>], strategies: &[UpdateStrategy], use_min: bool) -> Self {
        let subs = strategies
            .iter()
            .map(|&strategy| NaiveSub {
                rows: enrollment.to_vec(),
                strategy,
                reference: naive_build(enrollment),
            })
            .collect();
        Self { subs, use_min }
    }

    // Returns (decision, per-session update tally contribution).
    fn step(&mut self, query: &[f64], accept_t: f64, update_t: f64) -> Decision {
        let mut scores = Vec::with_capacity(self.subs.len());
        for sub in &self.subs {
            let d = naive_distance(query, &sub.reference.mu, &sub.reference.sigma);
            scores.push((d - sub.reference.theta) / sub.reference.lambda);
        }
        let fused = if self.use_min {
            scores.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        };
        let mut decision = if fused <= update_t {
            Decision::AcceptAndUpdate
        } else if fused <= accept_t {
            Decision::Accept
        } else {
            Decision::Reject
        };
        if decision == Decision::AcceptAndUpdate
            && self.subs.iter().all(|s| s.strategy == UpdateStrategy::NoUpdate)
        {
            decision = Decision::Accept;
        }
        if decision == Decision::AcceptAndUpdate {
            for sub in &mut self.subs {
                match sub.strategy {
                    UpdateStrategy::NoUpdate => {}
                    UpdateStrategy::SlidingWindow => {
                        sub.rows.remove(0);
                        sub.rows.push(query.to_vec());
                        sub.reference = naive_build(&sub.rows);
                    }
                    UpdateStrategy::GrowingWindow => {
                        sub.rows.push(query.to_vec());
                        sub.reference = naive_build(&sub.rows);
                    }
                }
            }
        }
        decision
    }
}

#[test]
fn library_replay_matches_the_naive_oracle() {
    // Mild drift keeps scores away from exact threshold boundaries, so both
    // float paths decide identically.
    let corpus = generate_drift_corpus(3, 3, 6, 3, 0.03, 0.04, 77).unwrap();
    for method_name in ["Sliding", "Growing", "Parallel both", "Parallel min both", "None"] {
        let spec = find_method(method_name).unwrap();
        for (ordinal, user) in corpus.user_ids().enumerate() {
            let (enrollment, _) = enrollment_split(&corpus, user).unwrap();
            let enrollment_rows: Vec<Vec<f64>> =
                enrollment.iter().map(|s| s.features.clone()).collect();

            let gallery = Gallery::new(enrollment.to_vec()).unwrap();
            let mut meta = spec.instantiate(&gallery).unwrap();
            let mut naive = NaiveMeta::new(
                &enrollment_rows,
                &spec.sub_strategies,
                spec.fusion == keydyn::recognizer::FusionRule::Min,
            );

            for session in 2..=corpus.session_count() {
                let mut rng = SplitMix64::new(5000 + ordinal as u64 * 17 + session as u64);
                let stream: Vec<StreamEvent> =
                    build_session_stream(&corpus, user, session, 0.3, &mut rng, false).unwrap();

                let log =
                    run_online_session(&mut meta, &stream, 0.0, -0.1, user, session).unwrap();

                let mut u_i = 0usize;
                let mut u_g = 0usize;
                for (event, entry) in stream.iter().zip(&log.entries) {
                    let naive_decision = naive.step(&event.query.features, 0.0, -0.1);
                    assert_eq!(
                        entry.decision, naive_decision,
                        "decision diverged: {method_name}, user {user}, session {session}"
                    );
                    if naive_decision == Decision::AcceptAndUpdate {
                        if event.is_genuine {
                            u_g += 1;
                        } else {
                            u_i += 1;
                        }
                    }
                }
                let metrics = session_metrics(&log);
                assert_eq!(metrics.u_i, u_i, "{method_name} user {user} session {session}");
                assert_eq!(metrics.u_g, u_g, "{method_name} user {user} session {session}");

                // Gallery contents must agree sample for sample.
                for (sub, naive_sub) in meta.subs().iter().zip(&naive.subs) {
                    assert_eq!(sub.gallery().len(), naive_sub.rows.len());
                    for (sample, row) in sub.gallery().samples().iter().zip(&naive_sub.rows) {
                        assert_eq!(&sample.features, row);
                    }
                }
            }
        }
    }
}
