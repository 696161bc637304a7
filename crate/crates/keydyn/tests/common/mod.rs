//! Shared test fixtures.
//!
//! The integration tests run on synthetic keystroke data shaped exactly like
//! the DSL2009 benchmark file (header `subject,sessionIndex,rep` plus the 31
//! hold/latency timing columns, 51 users x 8 sessions x 50 repetitions).
//! The generator models typing habituation: over sessions users type more
//! consistently (per-sample noise shrinks) and drift toward the password's
//! canonical rhythm (user-specific offsets shrink), with per-session "day"
//! wobble and occasional fumbled features. Against a static session-1
//! reference this makes genuine queries match better and better while other
//! users become more dangerous, the temporal signature the trend checks
//! look for.

#![allow(dead_code)]

use std::fmt::Write as _;

use keydyn::rng::SplitMix64;

/// The 31 timing columns of the public DSL2009 file.
pub const DSL_TIMING_COLUMNS: [&str; 31] = [
    "H.period",
    "DD.period.t",
    "UD.period.t",
    "H.t",
    "DD.t.i",
    "UD.t.i",
    "H.i",
    "DD.i.e",
    "UD.i.e",
    "H.e",
    "DD.e.five",
    "UD.e.five",
    "H.five",
    "DD.five.Shift.r",
    "UD.five.Shift.r",
    "H.Shift.r",
    "DD.Shift.r.o",
    "UD.Shift.r.o",
    "H.o",
    "DD.o.a",
    "UD.o.a",
    "H.a",
    "DD.a.n",
    "UD.a.n",
    "H.n",
    "DD.n.l",
    "UD.n.l",
    "H.l",
    "DD.l.Return",
    "UD.l.Return",
    "H.Return",
];

const DIMENSION: usize = 31;

// Habituation model knobs (seconds).
const CANON_LO: f64 = 0.06;
const CANON_HI: f64 = 0.28;
const OFFSET_SIGMA: f64 = 0.10; // per-feature user-offset scale
const OFFSET_SCALE_LOGSTD: f64 = 0.5; // per-user distinctiveness multiplier
const NOISE_0: f64 = 0.065; // session-1 per-sample noise
const NOISE_LOGSTD: f64 = 0.2;
const NOISE_SHRINK_LO: f64 = 0.80; // per-session noise decay factor range
const NOISE_SHRINK_HI: f64 = 0.92;
const NOISE_FLOOR: f64 = 0.018;
const CONVERGE_END_LO: f64 = 0.55; // remaining offset share at the last session
const CONVERGE_END_HI: f64 = 0.75;
const WOBBLE: f64 = 0.5; // day-to-day center wobble, relative to session noise
const FUMBLE_P0: f64 = 0.08; // per-feature fumble probability at session 1
const FUMBLE_DECAY: f64 = 0.85;
const FUMBLE_MULT: f64 = 5.0;

/// DSL2009-shaped CSV with habituation dynamics; deterministic under `seed`.
pub fn dsl_like_csv(users: usize, sessions: u32, reps: usize, seed: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    let canonical: Vec<f64> = (0..DIMENSION)
        .map(|_| rng.next_range(CANON_LO, CANON_HI))
        .collect();

    let mut text = String::with_capacity(users * sessions as usize * reps * 220);
    text.push_str("subject,sessionIndex,rep");
    for column in DSL_TIMING_COLUMNS {
        text.push(',');
        text.push_str(column);
    }
    text.push('\n');

    for user in 1..=users {
        let distinctiveness =
            (OFFSET_SCALE_LOGSTD * rng.next_gaussian()).exp().clamp(0.35, 3.0);
        let offsets: Vec<f64> = (0..DIMENSION)
            .map(|_| distinctiveness * OFFSET_SIGMA * rng.next_gaussian())
            .collect();
        let noise_1 = (NOISE_0 * (NOISE_LOGSTD * rng.next_gaussian()).exp()).clamp(0.03, 0.12);
        let noise_shrink = rng.next_range(NOISE_SHRINK_LO, NOISE_SHRINK_HI);
        let converge_end = rng.next_range(CONVERGE_END_LO, CONVERGE_END_HI);

        for session in 1..=sessions {
            let progress = if sessions > 1 {
                (session - 1) as f64 / (sessions - 1) as f64
            } else {
                0.0
            };
            let offset_share = 1.0 - (1.0 - converge_end) * progress;
            let noise = (noise_1 * noise_shrink.powi(session as i32 - 1)).max(NOISE_FLOOR);
            let fumble_p = FUMBLE_P0 * FUMBLE_DECAY.powi(session as i32 - 1);
            let wobble: Vec<f64> = (0..DIMENSION)
                .map(|_| WOBBLE * noise * rng.next_gaussian())
                .collect();

            for rep in 1..=reps {
                let _ = write!(text, "s{user:03},{session},{rep}");
                for i in 0..DIMENSION {
                    let center = canonical[i] + offset_share * offsets[i] + wobble[i];
                    let sample_noise = if rng.next_f64() < fumble_p {
                        FUMBLE_MULT * noise
                    } else {
                        noise
                    };
                    let value = (center + sample_noise * rng.next_gaussian()).max(0.0001);
                    let _ = write!(text, ",{value:.4}");
                }
                text.push('\n');
            }
        }
    }
    text
}

/// The full-size surrogate: 51 users, 8 sessions, 50 repetitions.
pub fn dsl2009_surrogate(seed: u64) -> String {
    dsl_like_csv(51, 8, 50, seed)
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = shared;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return f64::NAN;
    }
    cov / (vx * vy).sqrt()
}
