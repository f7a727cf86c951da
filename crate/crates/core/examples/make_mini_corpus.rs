//! Regenerates the bundled mini-corpus under `data/mini`.
//!
//! ```text
//! cargo run --example make_mini_corpus -- data/mini
//! ```
//!
//! Twenty four users split into two camps comment on twenty articles from
//! five outlets, one article a day. Each camp leans one way on the
//! article's two targets, so replies across camps tend to conflict.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const USERS: usize = 24;
const DAY: i64 = 86_400;
// 2024-03-01T00:00:00Z
const START: i64 = 1_709_251_200;

const SOURCES: [&str; 5] = ["civicwire", "dailyledger", "globalsun", "metroherald", "northpost"];
const ENTITIES: [&str; 10] = [
    "Biden", "Trump", "Congress", "Texas", "Obama", "Senate", "Clinton", "Washington", "Moscow", "Paris",
];
const NOUNS: [&str; 10] = [
    "tax", "stadium", "budget", "school", "police", "housing", "tariff", "bridge", "vaccine", "pension",
];
const POSITIVE: [&str; 8] = ["good", "great", "fair", "honest", "strong", "safe", "right", "nice"];
const NEGATIVE: [&str; 8] = ["bad", "corrupt", "dangerous", "dishonest", "terrible", "weak", "wrong", "evil"];
const NEUTRAL: [&str; 4] = ["local", "public", "national", "new"];

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("non-empty")
}

/// One opinionated sentence about `target`, a name or a noun phrase
/// such as "the tax".
fn opinion(rng: &mut ChaCha8Rng, target: &str, positive: bool) -> String {
    let w = if positive { pick(rng, &POSITIVE) } else { pick(rng, &NEGATIVE) };
    match rng.gen_range(0..4) {
        0 => {
            let mut t = target.to_string();
            t[..1].make_ascii_uppercase();
            format!("{t} is {w}.")
        }
        1 => format!("I think {target} is {w}."),
        2 => format!("Honestly {target} was {w} from the start."),
        _ => format!("We all know {target} is {w}."),
    }
}

fn filler(rng: &mut ChaCha8Rng) -> &'static str {
    [
        "Thanks for the article.",
        "We should talk about this more.",
        "Read it again.",
        "This will not end well.",
    ]
    .choose(rng)
    .expect("non-empty")
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data/mini".into());
    let out = Path::new(&out);
    fs::create_dir_all(out.join("resources")).expect("create output dir");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let users: Vec<String> = (0..USERS).map(|k| format!("user{k:02}")).collect();
    let camp = |u: usize| u % 2;

    let (mut articles, mut threads, mut comments) = (Vec::new(), Vec::new(), Vec::new());
    for day in 0..20usize {
        let entity = ENTITIES[day % ENTITIES.len()];
        let noun = NOUNS[(day * 3) % NOUNS.len()];
        // camp 0 likes the entity and dislikes the noun on even days
        let lean = day % 2 == 0;
        let posted = START + day as i64 * DAY + 8 * 3600;
        let aid = format!("a{day:02}");
        let text = format!(
            "{entity} spoke about the {noun} on Monday. Critics say the {noun} is {}. Supporters call {entity} {}. The {} council will vote soon.",
            pick(&mut rng, &NEGATIVE),
            pick(&mut rng, &POSITIVE),
            pick(&mut rng, &NEUTRAL),
        );
        articles.push(json!({
            "id": aid,
            "url": format!("https://{}.example/{aid}", SOURCES[day % 5]),
            "source": SOURCES[day % 5],
            "title": format!("{entity} and the {noun}"),
            "text": text,
            "posted_utc": posted,
        }));
        let tid = format!("t{day:02}");
        threads.push(json!({ "id": tid, "article_id": aid, "created_utc": posted + 60 }));

        let n = rng.gen_range(10..=16);
        let mut authors: Vec<usize> = Vec::new();
        let mut t = posted + 120;
        for k in 0..n {
            let parent = (k > 0 && rng.gen_bool(0.75)).then(|| rng.gen_range(0..k));
            let author = loop {
                let u = match parent {
                    // replies usually come from the other camp
                    Some(p) if rng.gen_bool(0.6) => {
                        let other = 1 - camp(authors[p]);
                        let mut u = rng.gen_range(0..USERS / 2) * 2 + other;
                        if u >= USERS {
                            u -= 2;
                        }
                        u
                    }
                    _ => rng.gen_range(0..USERS),
                };
                if parent.map_or(true, |p| authors[p] != u) {
                    break u;
                }
            };
            authors.push(author);
            let sincere = !rng.gen_bool(0.15);
            let likes_entity = (camp(author) == 0) == lean;
            let mut body = vec![opinion(&mut rng, entity, likes_entity == sincere)];
            if rng.gen_bool(0.7) {
                body.push(opinion(&mut rng, &format!("the {noun}"), !likes_entity == sincere));
            }
            if rng.gen_bool(0.3) {
                body.push(filler(&mut rng).to_string());
            }
            t += rng.gen_range(240..900);
            comments.push(json!({
                "id": format!("c{day:02}_{k:02}"),
                "thread_id": tid,
                "parent_id": parent.map(|p| format!("c{day:02}_{p:02}")),
                "author": users[author],
                "created_utc": t,
                "body": body.join(" "),
            }));
        }
    }
    // a short thread that ingest drops
    threads.push(json!({ "id": "t99", "article_id": "a00", "created_utc": START + 3600 }));
    for k in 0..3 {
        comments.push(json!({
            "id": format!("c99_{k:02}"),
            "thread_id": "t99",
            "parent_id": null,
            "author": users[k],
            "created_utc": START + 3700 + k as i64 * 60,
            "body": "Read it again.",
        }));
    }

    let jsonl = |name: &str, rows: &[serde_json::Value]| {
        let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
        fs::write(out.join(name), text).expect("write corpus file");
    };
    jsonl("articles.jsonl", &articles);
    jsonl("threads.jsonl", &threads);
    jsonl("comments.jsonl", &comments);

    let res = out.join("resources");
    let mut polarity: Vec<String> = POSITIVE.iter().map(|w| format!("{w}\tpos")).collect();
    polarity.extend(NEGATIVE.iter().map(|w| format!("{w}\tneg")));
    fs::write(res.join("polarity.tsv"), polarity.join("\n") + "\n").expect("write lexicon");
    fs::write(res.join("controversy.txt"), "tax\ntariff\npolice\nvaccine\ncorrupt\nevil\n").expect("write lexicon");
    fs::write(res.join("bias.txt"), "honestly\nall\nknow\ncritics\nsupporters\n").expect("write lexicon");
    let subjectivity: String = POSITIVE
        .iter()
        .chain(&NEGATIVE)
        .map(|w| format!("{w}\t{:.2}\n", rng.gen_range(0.5..1.0)))
        .chain(NEUTRAL.iter().map(|w| format!("{w}\t0.10\n")))
        .collect();
    fs::write(res.join("subjectivity.tsv"), subjectivity).expect("write lexicon");

    let mut vocab: Vec<String> = ENTITIES
        .iter()
        .chain(&NOUNS)
        .chain(&POSITIVE)
        .chain(&NEGATIVE)
        .chain(&NEUTRAL)
        .map(|w| w.to_lowercase())
        .collect();
    vocab.sort();
    let embeddings: String = vocab
        .iter()
        .map(|w| {
            let v: Vec<String> = (0..6).map(|_| format!("{:.4}", rng.gen_range(-1.0..1.0))).collect();
            format!("{w} {}\n", v.join(" "))
        })
        .collect();
    fs::write(res.join("embeddings.txt"), embeddings).expect("write embeddings");
}
