//! Synthetic two-column transcript pages for exercising the whole pipeline.

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng as _;

use agenda_core::rng::{self, Rng};
use agenda_core::stats::{sample_dirichlet, sample_index};
use agenda_core::Chamber;

const THEMES: [(&str, &[&str]); 8] = [
    (
        "defence",
        &[
            "defence",
            "army",
            "navy",
            "soldiers",
            "troops",
            "veterans",
            "military",
            "afghanistan",
            "security",
            "forces",
            "deployment",
            "submarines",
            "aircraft",
            "personnel",
            "service",
        ],
    ),
    (
        "health",
        &[
            "health",
            "hospital",
            "hospitals",
            "doctors",
            "nurses",
            "patients",
            "medicare",
            "medicine",
            "treatment",
            "cancer",
            "care",
            "clinics",
            "pharmaceutical",
            "mental",
            "dental",
        ],
    ),
    (
        "education",
        &[
            "schools",
            "students",
            "teachers",
            "education",
            "universities",
            "funding",
            "learning",
            "children",
            "curriculum",
            "training",
            "apprentices",
            "classrooms",
            "literacy",
            "skills",
            "gonski",
        ],
    ),
    (
        "economy",
        &[
            "budget",
            "economy",
            "taxes",
            "deficit",
            "growth",
            "jobs",
            "inflation",
            "interest",
            "rates",
            "revenue",
            "spending",
            "surplus",
            "debt",
            "treasurer",
            "markets",
        ],
    ),
    (
        "agriculture",
        &[
            "farmers",
            "drought",
            "wheat",
            "cattle",
            "rural",
            "agriculture",
            "exports",
            "water",
            "irrigation",
            "crops",
            "livestock",
            "wool",
            "regional",
            "harvest",
            "dairy",
        ],
    ),
    (
        "immigration",
        &[
            "boats",
            "asylum",
            "refugees",
            "detention",
            "border",
            "migration",
            "visas",
            "arrivals",
            "offshore",
            "processing",
            "smugglers",
            "nauru",
            "manus",
            "protection",
            "citizenship",
        ],
    ),
    (
        "environment",
        &[
            "carbon",
            "climate",
            "emissions",
            "pollution",
            "renewable",
            "energy",
            "reef",
            "environment",
            "conservation",
            "coal",
            "solar",
            "wind",
            "mining",
            "forests",
            "rivers",
        ],
    ),
    (
        "transport",
        &[
            "roads",
            "rail",
            "highway",
            "infrastructure",
            "airport",
            "freight",
            "ports",
            "trains",
            "bridges",
            "traffic",
            "congestion",
            "shipping",
            "broadband",
            "network",
            "motorway",
        ],
    ),
];

const FILLER: [&str; 30] = [
    "the",
    "the",
    "the",
    "of",
    "of",
    "and",
    "and",
    "to",
    "to",
    "in",
    "that",
    "is",
    "for",
    "be",
    "this",
    "we",
    "it",
    "will",
    "minister",
    "government",
    "house",
    "member",
    "bill",
    "honourable",
    "question",
    "australia",
    "people",
    "state",
    "matter",
    "important",
];

const PLACES: [&str; 4] = [
    "new south wales",
    "western australia",
    "south australia",
    "northern territory",
];

const HOR_SPEAKERS: [&str; 8] = [
    "Mr ABBOTT",
    "Ms GILLARD",
    "Mr SWAN",
    "Mr HOCKEY",
    "Ms PLIBERSEK",
    "Mr TRUSS",
    "Mr ALBANESE",
    "Mrs BISHOP",
];
const SENATE_SPEAKERS: [&str; 8] = [
    "Senator WONG",
    "Senator BRANDIS",
    "Senator MILNE",
    "Senator ABETZ",
    "Senator CONROY",
    "Senator CASH",
    "Senator LUDLAM",
    "Senator XENOPHON",
];
const HEADINGS: [&str; 4] = [
    "QUESTIONS WITHOUT NOTICE",
    "GOVERNMENT BUSINESS",
    "MATTERS OF PUBLIC IMPORTANCE",
    "BILLS",
];

/// Layout of a synthetic record: both chambers sit on the same days, in
/// periods of consecutive days starting every fourteen days.
#[derive(Debug, Clone, PartialEq)]
pub struct PageDesign {
    pub start: NaiveDate,
    pub periods: usize,
    pub days_per_period: usize,
    pub words_per_day: usize,
    pub seed: u64,
}

impl Default for PageDesign {
    fn default() -> Self {
        PageDesign {
            start: NaiveDate::from_ymd_opt(2013, 2, 5).expect("valid date"),
            periods: 25,
            days_per_period: 4,
            words_per_day: 400,
            seed: agenda_core::rng::DEFAULT_SEED,
        }
    }
}

/// A page file: name `<chamber>_<date>.txt` and tagged content.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPage {
    pub file_name: String,
    pub content: String,
}

/// Theme weights for a day. A change of government mid-record moves the
/// agenda towards economy and immigration; the second day of the eleventh
/// period is dominated by defence.
fn theme_weights(design: &PageDesign, period: usize, day: usize, date: NaiveDate) -> Vec<f64> {
    let mut w = vec![2.0; THEMES.len()];
    if date >= NaiveDate::from_ymd_opt(2013, 9, 18).expect("valid date") {
        w[3] = 5.0;
        w[5] = 5.0;
        w[6] = 1.0;
    }
    if period == 10.min(design.periods - 1) && day == 1.min(design.days_per_period - 1) {
        w[0] = 40.0;
    }
    w
}

fn sentence(rng: &mut Rng, theme_probs: &[f64], words: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(words);
    while out.len() < words {
        let roll: f64 = rng.random();
        if roll < 0.55 {
            let t = sample_index(rng, theme_probs);
            out.push(THEMES[t].1.choose(rng).expect("non-empty theme").to_string());
        } else if roll < 0.57 {
            out.extend(PLACES.choose(rng).expect("non-empty").split(' ').map(String::from));
        } else {
            let w = FILLER.choose(rng).expect("non-empty");
            // Occasional OCR confusion.
            out.push(if *w == "the" && rng.random::<f64>() < 0.05 {
                "tbe".into()
            } else {
                w.to_string()
            });
        }
    }
    out
}

fn page(design: &PageDesign, rng: &mut Rng, chamber: Chamber, date: NaiveDate, period: usize, day: usize) -> String {
    let weights = theme_weights(design, period, day, date);
    let probs = sample_dirichlet(rng, &weights);
    let (speakers, chair) = match chamber {
        Chamber::HouseOfRepresentatives => (&HOR_SPEAKERS, "The SPEAKER"),
        Chamber::Senate => (&SENATE_SPEAKERS, "The PRESIDENT"),
    };

    // Reading-order lines of about ten words; each turn opens a new line.
    let mut lines: Vec<String> = Vec::new();
    let mut written = 0;
    while written < design.words_per_day {
        let speaker = if rng.random::<f64>() < 0.15 {
            chair
        } else {
            speakers.choose(rng).expect("non-empty")
        };
        let turn_words = rng.random_range(25..70);
        let words = sentence(rng, &probs, turn_words);
        written += words.len();
        for (i, chunk) in words.chunks(10).enumerate() {
            let mut line = chunk.join(" ");
            if i == 0 {
                line = format!("{speaker}— {line}");
            }
            lines.push(line);
        }
    }

    let title = match chamber {
        Chamber::HouseOfRepresentatives => "HOUSE OF REPRESENTATIVES",
        Chamber::Senate => "THE SENATE",
    };
    let mut out = format!(
        "F|{title}\nF|{} {} {}\n",
        date.day(),
        month_name(date.month()),
        date.year()
    );
    // Regions of up to 16 lines: first half left column, second half right,
    // written interleaved as an OCR tool would extract them.
    for (r, region) in lines.chunks(16).enumerate() {
        if r > 0 && r % 2 == 0 {
            out.push_str(&format!("F|{}\n", HEADINGS[(r / 2) % HEADINGS.len()]));
        }
        let half = region.len().div_ceil(2);
        let (left, right) = region.split_at(half);
        for (i, l) in left.iter().enumerate() {
            out.push_str(&format!("L|{l}\n"));
            if let Some(rl) = right.get(i) {
                out.push_str(&format!("R|{rl}\n"));
            }
        }
    }
    out
}

fn month_name(m: u32) -> &'static str {
    [
        "January",
        "February",
        "March",
        "April",
        "May",
        "June",
        "July",
        "August",
        "September",
        "October",
        "November",
        "December",
    ][(m - 1) as usize]
}

/// Pages for every sitting day of both chambers, in `(date, chamber)` order.
pub fn generate_pages(design: &PageDesign) -> Vec<SyntheticPage> {
    let mut rng = rng::stream(design.seed, 0);
    let mut out = Vec::new();
    for period in 0..design.periods {
        for day in 0..design.days_per_period {
            let date = design.start + Duration::days(14 * period as i64 + day as i64);
            for chamber in Chamber::ALL {
                out.push(SyntheticPage {
                    file_name: format!("{}_{date}.txt", chamber.code()),
                    content: page(design, &mut rng, chamber, date, period, day),
                });
            }
        }
    }
    out
}
