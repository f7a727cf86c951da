//! Two-camp synthetic engagement history with planted conflict.

use conflictforge::features::{History, HistoryComment, HistoryInteraction};
use conflictforge::graph::ScoredInteraction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const USERS: usize = 200;
pub const DAYS: i64 = 40;
pub const PER_DAY: usize = 120;
pub const FEATURE_DIM: usize = 4;
pub const DAY: i64 = 86_400;

pub struct Planted {
    pub camp: Vec<bool>,
    pub history: History,
    pub events: Vec<ScoredInteraction>,
}

pub fn user(k: usize) -> String {
    format!("u{k:03}")
}

pub fn planted(seed: u64, cf_conflict: f64, cf_peace: f64, signal: f64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camp: Vec<bool> = (0..USERS).map(|_| rng.gen_bool(0.5)).collect();
    let mut comments = Vec::new();
    let mut interactions = Vec::new();
    for day in 0..DAYS {
        for n in 0..PER_DAY {
            let a = rng.gen_range(0..USERS);
            let mut b = rng.gen_range(0..USERS - 1);
            if b >= a {
                b += 1;
            }
            let p = if camp[a] == camp[b] { 0.1 } else { 0.9 };
            let cf = if rng.gen_bool(p) { cf_conflict } else { cf_peace };
            let time = day * DAY + rng.gen_range(0..DAY);
            let thread = format!("d{day}-{}", n % 12);
            for &u in &[a, b] {
                let sign = if camp[u] { 1.0 } else { -1.0 };
                let mut features: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
                features[0] += signal * sign;
                comments.push(HistoryComment {
                    id: format!("c{}", comments.len()),
                    user: user(u),
                    time,
                    thread: thread.clone(),
                    source: format!("s{}", n % 4),
                    tokens: vec![],
                    td: vec![],
                    features,
                });
            }
            interactions.push(HistoryInteraction { user_a: user(a), user_b: user(b), time, cf });
        }
    }
    let events = interactions
        .iter()
        .map(|i| ScoredInteraction { user_a: i.user_a.clone(), user_b: i.user_b.clone(), time: i.time, cf: i.cf })
        .collect();
    let sources = (0..4).map(|k| format!("s{k}")).collect();
    Planted { camp, history: History::new(comments, interactions, 0, sources, 1.0), events }
}
