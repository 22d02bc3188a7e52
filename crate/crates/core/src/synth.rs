//! Synthetic review corpus with a planted label distribution.
//!
//! The bundled dataset mirrors the shape of the studied corpus: six products,
//! a fixed number of qualifying reviews per star rating, fixed sentence
//! totals per product and star, and exact category counts. Sentence text is
//! assembled from category cue words, product-specific vocabulary and
//! filler, so that classifiers have signal to learn and product-specific
//! words do not transfer between products.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{sample_balanced, sentences_from_reviews, ProductInfo, Review};
use crate::taxonomy::{LabelRecord, LabelSet, SubLabel, TopLabel};

pub struct ProductSpec {
    pub product_id: &'static str,
    pub name: &'static str,
    pub domain: &'static str,
    /// Sentence totals for one to five stars.
    pub sentences_per_star: [usize; 5],
    /// Qualifying reviews for one to five stars.
    pub reviews_per_star: [usize; 5],
    hardware_words: &'static [&'static str],
    software_words: &'static [&'static str],
    context_words: &'static [&'static str],
}

impl ProductSpec {
    pub fn total_sentences(&self) -> usize {
        self.sentences_per_star.iter().sum()
    }

    pub fn info(&self) -> ProductInfo {
        ProductInfo {
            product_id: self.product_id.to_string(),
            name: self.name.to_string(),
            domain: self.domain.to_string(),
        }
    }
}

pub const PRODUCTS: [ProductSpec; 6] = [
    ProductSpec {
        product_id: "B01DFKC2SO",
        name: "Echo Dot",
        domain: "Smart Home",
        sentences_per_star: [155, 282, 280, 385, 354],
        reviews_per_star: [50; 5],
        hardware_words: &["puck", "ringlight", "auxport", "dot", "grille", "microphones", "woofer"],
        software_words: &["skills", "routines", "dropin", "wakeword", "alexa", "flashbriefing", "echoapp"],
        context_words: &["smarthome", "lights", "thermostat", "playlist"],
    },
    ProductSpec {
        product_id: "B019VM3F2M",
        name: "Fitbit Blaze",
        domain: "Smart Watch",
        sentences_per_star: [234, 290, 313, 361, 350],
        reviews_per_star: [50; 5],
        hardware_words: &["band", "clasp", "buckle", "tracker", "heartrate", "faceplate", "cradle"],
        software_words: &["dashboard", "steps", "sleeplog", "reminders", "fitstar", "relax", "challenges"],
        context_words: &["fitness", "calories", "treadmill", "pedometer"],
    },
    ProductSpec {
        product_id: "B00NIYJF6U",
        name: "GoPro Hero4 Silver",
        domain: "Action Camera",
        sentences_per_star: [228, 196, 165, 278, 357],
        reviews_per_star: [50, 45, 50, 50, 50],
        hardware_words: &["lens", "housing", "mount", "sdcard", "tripod", "shutter", "gopro"],
        software_words: &["quik", "timelapse", "protune", "capture", "footage", "framerate", "studio"],
        context_words: &["surfing", "skiing", "helmet", "underwater"],
    },
    ProductSpec {
        product_id: "B01LRLJV28",
        name: "PlayStation 4",
        domain: "Gaming Console",
        sentences_per_star: [134, 183, 146, 99, 158],
        reviews_per_star: [50, 46, 50, 50, 50],
        hardware_words: &["controller", "dualshock", "console", "harddrive", "fan", "disc", "joystick"],
        software_words: &["psn", "trophies", "store", "downloads", "patch", "remoteplay", "sharefactory"],
        context_words: &["games", "multiplayer", "couch", "tv"],
    },
    ProductSpec {
        product_id: "B0106IS5XY",
        name: "Pebble Time",
        domain: "Smart Watch",
        sentences_per_star: [167, 189, 189, 267, 336],
        reviews_per_star: [50; 5],
        hardware_words: &["epaper", "bezel", "strap", "pebble", "gorilla", "vibration", "pins"],
        software_words: &["timeline", "watchfaces", "pebbleapp", "appstore", "smartstraps", "glances", "pins"],
        context_words: &["wrist", "pocket", "meetings", "calendar"],
    },
    ProductSpec {
        product_id: "B01J24C0TI",
        name: "Echo Show",
        domain: "Smart Home",
        sentences_per_star: [235, 254, 149, 204, 260],
        reviews_per_star: [50; 5],
        hardware_words: &["touchscreen", "webcam", "cover", "stand", "panel", "showspeaker", "privacybutton"],
        software_words: &["videocalls", "recipes", "dropin", "showmode", "slideshow", "skills", "callingapp"],
        context_words: &["countertop", "video", "nightstand", "photos"],
    },
];

/// Category counts planted in the bundled dataset, in [`TopLabel::ALL`] order.
pub const TOP_COUNTS: [(TopLabel, usize); 8] = [
    (TopLabel::Hardware, 1870),
    (TopLabel::Software, 1923),
    (TopLabel::General, 2290),
    (TopLabel::UserBackground, 1711),
    (TopLabel::OtherProduct, 549),
    (TopLabel::UsageScenario, 504),
    (TopLabel::CustomerService, 199),
    (TopLabel::Miscellaneous, 291),
];

/// Second-level counts for software sentences; one sub-label per sentence.
pub const SOFTWARE_SUB_COUNTS: [(SubLabel, usize); 4] = [
    (SubLabel::InformationGiving, 860),
    (SubLabel::Inquiry, 21),
    (SubLabel::FeatureRequest, 169),
    (SubLabel::ProblemDiscovery, 873),
];

fn cues(label: TopLabel) -> &'static [&'static str] {
    match label {
        TopLabel::Hardware => &[
            "battery", "screen", "speaker", "button", "charger", "cable", "microphone", "sensor", "display",
            "plastic", "glass", "port", "casing", "volume", "heat", "power", "adapter", "hardware", "size",
        ],
        TopLabel::Software => &[
            "app", "software", "update", "firmware", "settings", "feature", "notifications", "interface",
            "menu", "sync", "bluetooth", "wifi", "account", "setup", "voice", "recognition", "version",
        ],
        TopLabel::General => &[
            "love", "recommend", "awesome", "worth", "price", "product", "excellent", "happy", "disappointed",
            "terrible", "perfect", "amazing", "best", "waste", "money", "overall", "satisfied", "stars",
        ],
        TopLabel::UserBackground => &[
            "husband", "wife", "kids", "son", "daughter", "owned", "family", "mother", "father", "retired",
            "teenager", "nurse", "runner", "gamer", "myself", "years", "grandson", "engineer",
        ],
        TopLabel::OtherProduct => &[
            "google", "apple", "samsung", "competitor", "iphone", "android", "garmin", "xbox", "nintendo",
            "roku", "sonos", "compared", "switched", "versus", "older", "model",
        ],
        TopLabel::UsageScenario => &[
            "kitchen", "bedroom", "morning", "workout", "commute", "cooking", "travel", "vacation", "outdoors",
            "office", "bike", "swimming", "hiking", "gym", "weekends", "car",
        ],
        TopLabel::CustomerService => &[
            "customer", "service", "support", "refund", "warranty", "return", "replacement", "shipping",
            "delivery", "seller", "package", "representative", "agent", "called", "emailed",
        ],
        TopLabel::Miscellaneous => &[
            "gift", "christmas", "birthday", "holiday", "honestly", "anyway", "surprise", "funny", "cat", "dog",
            "joke", "sale", "deal", "coupon",
        ],
    }
}

fn sub_cues(sub: SubLabel) -> &'static [&'static str] {
    match sub {
        SubLabel::InformationGiving => &["works", "shows", "displays", "lets", "supports", "connects", "provides", "tracks", "plays", "syncs", "easily"],
        SubLabel::Inquiry => &["how", "anyone", "know", "wondering", "question", "possible", "why", "help"],
        SubLabel::FeatureRequest => &["wish", "would", "should", "hope", "add", "please", "future", "ability", "missing", "allow"],
        SubLabel::ProblemDiscovery => &["crashes", "freezes", "stopped", "broken", "bug", "error", "fails", "disconnects", "glitch", "unresponsive", "lag", "problem"],
    }
}

const FILLER: &[&str] = &[
    "the", "it", "is", "and", "a", "this", "was", "to", "of", "with", "for", "but", "very", "really", "so",
    "just", "also", "my", "on", "in", "that", "have", "has", "be",
];

const NEUTRAL: &[&str] = &[
    "thing", "time", "day", "week", "way", "lot", "bit", "stuff", "pretty", "still", "use", "get", "got",
    "make", "made", "look", "think", "even", "much", "first", "every", "things", "days",
];

/// Probability that a cue word comes from an unrelated category.
const CUE_NOISE: f64 = 0.4;
/// Probability that a hardware or software cue is product vocabulary.
const PRODUCT_CUE_RATE: f64 = 0.5;
/// Probability that a sentence without software sub-labels still carries a sub-label cue.
const SUB_CUE_LEAK: f64 = 0.35;

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).copied().expect("non-empty word bank")
}

fn sentence_text(rng: &mut ChaCha8Rng, product: &ProductSpec, labels: &LabelSet) -> String {
    let mut words: Vec<&str> = Vec::new();
    for &label in &labels.top {
        for _ in 0..rng.random_range(1..=2) {
            let word = if rng.random_bool(CUE_NOISE) {
                let other = *TopLabel::ALL.choose(rng).expect("labels");
                pick(rng, cues(other))
            } else {
                match label {
                    TopLabel::Hardware if rng.random_bool(PRODUCT_CUE_RATE) => pick(rng, product.hardware_words),
                    TopLabel::Software if rng.random_bool(PRODUCT_CUE_RATE) => pick(rng, product.software_words),
                    _ => pick(rng, cues(label)),
                }
            };
            words.push(word);
        }
    }
    for &sub in &labels.software_sub {
        for _ in 0..rng.random_range(1..=2) {
            let bank = if rng.random_bool(CUE_NOISE) { *SubLabel::ALL.choose(rng).expect("labels") } else { sub };
            words.push(pick(rng, sub_cues(bank)));
        }
    }
    // Hardware complaints and questions use the same verbs as software ones.
    if labels.software_sub.is_empty() && rng.random_bool(SUB_CUE_LEAK) {
        let bank = *SubLabel::ALL.choose(rng).expect("labels");
        words.push(pick(rng, sub_cues(bank)));
    }
    if rng.random_bool(0.3) {
        words.push(pick(rng, product.context_words));
    }
    for _ in 0..rng.random_range(3..=7) {
        words.push(pick(rng, FILLER));
    }
    for _ in 0..rng.random_range(1..=3) {
        words.push(pick(rng, NEUTRAL));
    }
    words.shuffle(rng);
    let mut text = words.join(" ");
    let first = text[..1].to_ascii_uppercase();
    text.replace_range(..1, &first);
    let end = if labels.software_sub.contains(&SubLabel::Inquiry) {
        '?'
    } else {
        *['.', '.', '.', '!'].choose(rng).expect("punctuation")
    };
    text.push(end);
    text
}

/// Split `total` sentences over `reviews` reviews, each getting 1..=20.
fn sentence_counts(rng: &mut ChaCha8Rng, total: usize, reviews: usize) -> Vec<usize> {
    assert!(reviews <= total && total <= 20 * reviews, "infeasible sentence split");
    let mut counts = vec![1; reviews];
    for _ in reviews..total {
        loop {
            let i = rng.random_range(0..reviews);
            if counts[i] < 20 {
                counts[i] += 1;
                break;
            }
        }
    }
    counts
}

/// Plant exactly the [`TOP_COUNTS`] memberships over `n` sentences, each
/// sentence receiving one or two categories. Miscellaneous is never combined.
fn plant_top_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<BTreeSet<TopLabel>> {
    let total: usize = TOP_COUNTS.iter().map(|&(_, c)| c).sum();
    let misc = TOP_COUNTS.iter().find(|(l, _)| *l == TopLabel::Miscellaneous).map_or(0, |&(_, c)| c);
    let extra = total - n;
    let pool = total - misc;
    // Second memberships are spread over the non-miscellaneous categories in
    // proportion to their counts, with largest-remainder rounding.
    let mut second: Vec<(TopLabel, usize, f64)> = TOP_COUNTS
        .iter()
        .filter(|(l, _)| *l != TopLabel::Miscellaneous)
        .map(|&(l, c)| {
            let exact = c as f64 * extra as f64 / pool as f64;
            (l, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let short = extra - second.iter().map(|s| s.1).sum::<usize>();
    let mut by_rem: Vec<usize> = (0..second.len()).collect();
    by_rem.sort_by(|&a, &b| second[b].2.total_cmp(&second[a].2).then(a.cmp(&b)));
    for &i in by_rem.iter().take(short) {
        second[i].1 += 1;
    }

    let mut primary: Vec<TopLabel> = Vec::with_capacity(n);
    for &(l, c) in &TOP_COUNTS {
        let s = second.iter().find(|x| x.0 == l).map_or(0, |x| x.1);
        primary.extend(std::iter::repeat_n(l, c - s));
    }
    assert_eq!(primary.len(), n);
    primary.shuffle(rng);
    let mut sets: Vec<BTreeSet<TopLabel>> = primary.iter().map(|&l| BTreeSet::from([l])).collect();

    let mut order: Vec<usize> = (0..n).filter(|&i| primary[i] != TopLabel::Miscellaneous).collect();
    order.shuffle(rng);
    let mut cursor = 0;
    for (label, count, _) in second {
        let mut placed = 0;
        while placed < count {
            let i = order[cursor % order.len()];
            cursor += 1;
            if sets[i].len() == 1 && !sets[i].contains(&label) {
                sets[i].insert(label);
                placed += 1;
            }
        }
    }
    sets
}

pub struct SyntheticDataset {
    pub catalog: Vec<ProductInfo>,
    /// Qualifying reviews plus reviews that ingestion drops: unverified ones
    /// and ones longer than twenty sentences.
    pub reviews: Vec<Review>,
    /// Labels of every sentence of the qualifying reviews.
    pub labels: Vec<LabelRecord>,
}

fn review(product: &ProductSpec, star: u8, id: String, sentences: &[String], verified: bool) -> Review {
    Review {
        review_id: id,
        product_id: product.product_id.to_string(),
        star_rating: star,
        text: sentences.join(" "),
        verified,
    }
}

fn random_labels(rng: &mut ChaCha8Rng) -> LabelSet {
    let weights: Vec<usize> = TOP_COUNTS.iter().map(|&(_, c)| c).collect();
    let total: usize = weights.iter().sum();
    let mut x = rng.random_range(0..total);
    let mut label = TopLabel::Miscellaneous;
    for (&(l, _), w) in TOP_COUNTS.iter().zip(&weights) {
        if x < *w {
            label = l;
            break;
        }
        x -= w;
    }
    let ls = LabelSet::new([label]);
    if label == TopLabel::Software {
        ls.with_software([*SubLabel::ALL.choose(rng).expect("labels")])
    } else {
        ls
    }
}

fn random_sentence(rng: &mut ChaCha8Rng, product: &ProductSpec) -> String {
    let labels = random_labels(rng);
    sentence_text(rng, product, &labels)
}

/// The six-product fixture. Deterministic for a given seed.
pub fn bundled_dataset(seed: u64) -> SyntheticDataset {
    let mut rng = crate::seeded_rng(seed);
    let n: usize = PRODUCTS.iter().map(ProductSpec::total_sentences).sum();
    let top = plant_top_labels(&mut rng, n);

    let mut sw_subs: Vec<SubLabel> = SOFTWARE_SUB_COUNTS
        .iter()
        .flat_map(|&(s, c)| std::iter::repeat_n(s, c))
        .collect();
    sw_subs.shuffle(&mut rng);
    let mut sw_iter = sw_subs.into_iter();
    let label_sets: Vec<LabelSet> = top
        .into_iter()
        .map(|t| {
            let ls = LabelSet::new(t);
            if ls.has(TopLabel::Software) {
                ls.with_software([sw_iter.next().expect("software sub-label counts match")])
            } else {
                ls
            }
        })
        .collect();
    assert!(sw_iter.next().is_none(), "software sub-label counts match");

    let mut reviews = Vec::new();
    let mut qualifying = Vec::new();
    let mut planted = label_sets.iter();
    let mut sentence_labels: Vec<&LabelSet> = Vec::with_capacity(n);
    for product in &PRODUCTS {
        for star in 1..=5u8 {
            let s = usize::from(star - 1);
            let counts = sentence_counts(&mut rng, product.sentences_per_star[s], product.reviews_per_star[s]);
            for (r, &count) in counts.iter().enumerate() {
                let sets: Vec<&LabelSet> = planted.by_ref().take(count).collect();
                let texts: Vec<String> = sets.iter().map(|ls| sentence_text(&mut rng, product, ls)).collect();
                sentence_labels.extend(sets);
                let rv = review(product, star, format!("{}-{}-{:03}", product.product_id, star, r), &texts, true);
                qualifying.push(rv.clone());
                reviews.push(rv);
            }
            // Reviews the sampling rules must reject.
            for extra in 0..3 {
                let len = rng.random_range(21..=26);
                let texts: Vec<String> = (0..len).map(|_| random_sentence(&mut rng, product)).collect();
                reviews.push(review(product, star, format!("{}-{}-L{extra}", product.product_id, star), &texts, true));
            }
            for extra in 0..2 {
                let len = rng.random_range(1..=6);
                let texts: Vec<String> = (0..len).map(|_| random_sentence(&mut rng, product)).collect();
                reviews.push(review(product, star, format!("{}-{}-U{extra}", product.product_id, star), &texts, false));
            }
        }
    }
    assert!(planted.next().is_none());

    let sentences = sentences_from_reviews(&qualifying);
    assert_eq!(sentences.len(), n, "generated text must segment into the planted sentences");
    let labels = sentences
        .iter()
        .zip(sentence_labels)
        .map(|(s, ls)| LabelRecord::from_label_set(s.sentence_id.clone(), ls))
        .collect();
    SyntheticDataset { catalog: PRODUCTS.iter().map(ProductSpec::info).collect(), reviews, labels }
}

/// Unlabeled reviews over the same products and vocabulary, for embedding
/// pretraining.
pub fn unlabeled_reviews(seed: u64, count: usize) -> Vec<Review> {
    let mut rng = crate::seeded_rng(seed ^ 0x756e_6c61_6265_6c64);
    (0..count)
        .map(|i| {
            let product = PRODUCTS.choose(&mut rng).expect("products");
            let star = rng.random_range(1..=5u8);
            let len = rng.random_range(1..=12);
            let texts: Vec<String> = (0..len).map(|_| random_sentence(&mut rng, product)).collect();
            review(product, star, format!("X{i:06}"), &texts, true)
        })
        .collect()
}

/// Token sentences in which "good" and "great" share contexts while "zebra"
/// appears in an unrelated vocabulary. About `n_tokens` tokens in total.
pub fn cooccurrence_corpus(seed: u64, n_tokens: usize) -> Vec<Vec<String>> {
    const SHARED: &[&str] = &[
        "the", "battery", "screen", "sound", "app", "is", "really", "very", "so", "and", "price", "quality",
        "camera", "works", "value", "was", "pretty", "it", "product", "setup",
    ];
    const WILD: &[&str] = &[
        "savanna", "stripes", "herd", "grass", "lion", "safari", "wild", "african", "plains", "graze",
        "mane", "hooves", "watering", "hole", "migration", "acacia",
    ];
    let mut rng = crate::seeded_rng(seed);
    let mut out = Vec::new();
    let mut produced = 0;
    while produced < n_tokens {
        let len = rng.random_range(6..=12);
        let anchor_at = rng.random_range(0..len);
        let roll: f64 = rng.random();
        let (anchor, bank) = if roll < 0.4 {
            ("good", SHARED)
        } else if roll < 0.8 {
            ("great", SHARED)
        } else {
            ("zebra", WILD)
        };
        let sentence: Vec<String> = (0..len)
            .map(|i| if i == anchor_at { anchor.to_string() } else { pick(&mut rng, bank).to_string() })
            .collect();
        produced += sentence.len();
        out.push(sentence);
    }
    out
}

/// Reviews selected by the default ingestion rules: verified, at most twenty
/// sentences, fifty per product and star.
pub fn qualifying_reviews(dataset: &SyntheticDataset, seed: u64) -> Vec<Review> {
    let verified: Vec<Review> = dataset.reviews.iter().filter(|r| r.verified).cloned().collect();
    sample_balanced(&verified, 50, 20, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_counts_are_exact() {
        let ds = bundled_dataset(7);
        assert_eq!(ds.labels.len(), 7198);
        for (label, count) in TOP_COUNTS {
            let got = ds.labels.iter().filter(|r| r.labels.contains(&label.code().to_string())).count();
            assert_eq!(got, count, "{label}");
        }
        for (sub, count) in SOFTWARE_SUB_COUNTS {
            let got = ds.labels.iter().filter(|r| r.software_sub.contains(&sub.code().to_string())).count();
            assert_eq!(got, count, "{sub}");
        }
        assert!(ds.labels.iter().all(|r| r.to_label_set().is_ok()));
    }

    #[test]
    fn qualifying_reviews_match_quotas() {
        let ds = bundled_dataset(7);
        let q = qualifying_reviews(&ds, 99);
        assert_eq!(q.len(), 1491);
        assert_eq!(sentences_from_reviews(&q).len(), 7198);
        assert!(ds.reviews.len() > q.len());
    }

    #[test]
    fn cooccurrence_size() {
        let c = cooccurrence_corpus(1, 1000);
        let n: usize = c.iter().map(Vec::len).sum();
        assert!((1000..1012).contains(&n));
    }
}
