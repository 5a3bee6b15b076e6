//! Conflict-of-interest detection.
//!
//! Detectors are independent and return sets of [`CoiRecord`]; [`detect_all`]
//! merges them with declared conflicts. Every record carries evidence so the
//! chair can review false positives.

pub mod bib;
pub mod names;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bids::Bid;
use crate::conference::Conference;
use crate::ids::{PaperId, PersonId, ReviewerId};
use crate::par::{self, Exec};

pub use bib::{ingest_bibliography, BibCorpus, BibError, BibRecord};
pub use names::{names_match, normalize_name, NameKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoiReason {
    Explicit,
    SameCountry,
    SameInstitution,
    CoAuthorLocal,
    CoAuthorOfCoAuthor,
    HistoricalCoAuthor,
}

impl fmt::Display for CoiReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoiRecord {
    pub paper_id: PaperId,
    pub reviewer_id: ReviewerId,
    pub reason: CoiReason,
    pub evidence: String,
}

impl CoiRecord {
    fn new(paper: &PaperId, reviewer: &ReviewerId, reason: CoiReason, evidence: String) -> Self {
        debug_assert!(!evidence.is_empty());
        CoiRecord {
            paper_id: paper.clone(),
            reviewer_id: reviewer.clone(),
            reason,
            evidence,
        }
    }
}

/// Declared conflicts: the `explicit_cois` list plus `ConflictOfInterest` bids.
pub fn explicit_conflicts(conf: &Conference) -> Vec<CoiRecord> {
    let declared = conf.explicit_cois.iter().map(|c| {
        let evidence = c
            .note
            .clone()
            .filter(|n| !n.trim().is_empty())
            .unwrap_or_else(|| "declared conflict".to_string());
        CoiRecord::new(&c.paper_id, &c.reviewer_id, CoiReason::Explicit, evidence)
    });
    let bids = conf
        .bids
        .iter()
        .filter(|b| b.level == Bid::ConflictOfInterest)
        .map(|b| {
            CoiRecord::new(
                &b.paper_id,
                &b.reviewer_id,
                CoiReason::Explicit,
                "bid ConflictOfInterest".to_string(),
            )
        });
    dedup(declared.chain(bids).collect())
}

/// Same country code for any author of the paper and the reviewer. Off unless enabled.
pub fn detect_same_country(conf: &Conference, enabled: bool) -> Vec<CoiRecord> {
    if !enabled {
        return Vec::new();
    }
    let roster = conf.roster_index();
    let country = |id: &PersonId| {
        roster
            .get(id)
            .and_then(|p| p.country.as_deref())
            .map(|c| c.trim().to_ascii_uppercase())
            .filter(|c| !c.is_empty())
    };
    let mut out = Vec::new();
    for paper in &conf.papers {
        for reviewer in &conf.reviewers {
            let Some(rc) = country(&reviewer.person_id) else {
                continue;
            };
            if let Some(a) = paper.author_ids.iter().find(|a| country(a).as_ref() == Some(&rc)) {
                out.push(CoiRecord::new(
                    &paper.id,
                    &reviewer.person_id,
                    CoiReason::SameCountry,
                    format!("country {rc} shared with author {a}"),
                ));
            }
        }
    }
    out
}

const AFFILIATION_STOPWORDS: [&str; 6] = ["university", "institute", "dept", "department", "of", "the"];

const PUBLIC_EMAIL_PROVIDERS: [&str; 6] = [
    "gmail.com",
    "yahoo.com",
    "hotmail.com",
    "outlook.com",
    "mail.com",
    "protonmail.com",
];

/// Lowercased affiliation tokens without punctuation or generic institution words,
/// sorted so that word order does not matter.
pub fn normalize_affiliation(affiliation: &str) -> String {
    let cleaned: String = deunicode::deunicode(affiliation)
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let tokens: BTreeSet<&str> = cleaned
        .split_whitespace()
        .filter(|t| !AFFILIATION_STOPWORDS.contains(t))
        .collect();
    tokens.into_iter().collect::<Vec<_>>().join(" ")
}

// Second-level labels under which ccTLD registries hand out names.
const SECOND_LEVEL: [&str; 8] = ["ac", "co", "com", "edu", "gov", "net", "org", "sch"];

/// The registrable part of an email domain: `cs.uni-x.edu` → `uni-x.edu`,
/// `dept.ox.ac.uk` → `ox.ac.uk`.
pub fn registrable_domain(email: &str) -> Option<String> {
    let (_, domain) = email.rsplit_once('@')?;
    let domain = domain.trim().trim_end_matches('.').to_ascii_lowercase();
    let labels: Vec<&str> = domain.split('.').filter(|l| !l.is_empty()).collect();
    if labels.len() < 2 {
        return None;
    }
    let n = labels.len();
    let take = if n >= 3 && labels[n - 1].len() == 2 && SECOND_LEVEL.contains(&labels[n - 2]) {
        3
    } else {
        2
    };
    Some(labels[n - take..].join("."))
}

pub fn detect_same_institution(conf: &Conference) -> Vec<CoiRecord> {
    let roster = conf.roster_index();
    let affiliation = |id: &PersonId| {
        roster
            .get(id)
            .and_then(|p| p.affiliation.as_deref())
            .map(normalize_affiliation)
            .filter(|a| !a.is_empty())
    };
    let domain = |id: &PersonId| {
        roster
            .get(id)
            .and_then(|p| registrable_domain(&p.email))
            .filter(|d| !PUBLIC_EMAIL_PROVIDERS.contains(&d.as_str()))
    };
    let mut out = Vec::new();
    for paper in &conf.papers {
        for reviewer in &conf.reviewers {
            let r = &reviewer.person_id;
            let (ra, rd) = (affiliation(r), domain(r));
            let evidence = paper.author_ids.iter().find_map(|a| {
                if let (Some(x), Some(y)) = (&ra, affiliation(a)) {
                    if *x == y {
                        return Some(format!("affiliation `{y}` shared with author {a}"));
                    }
                }
                if let (Some(x), Some(y)) = (&rd, domain(a)) {
                    if *x == y {
                        return Some(format!("email domain {y} shared with author {a}"));
                    }
                }
                None
            });
            if let Some(evidence) = evidence {
                out.push(CoiRecord::new(&paper.id, r, CoiReason::SameInstitution, evidence));
            }
        }
    }
    out
}

/// Co-authorship within the current submissions.
///
/// Distance 0 (the reviewer wrote the paper) and 1 give `CoAuthorLocal`;
/// distance 2 gives `CoAuthorOfCoAuthor`. Only the stronger reason is emitted.
pub fn detect_local_coauthorship(conf: &Conference) -> Vec<CoiRecord> {
    let mut graph: HashMap<&PersonId, BTreeSet<&PersonId>> = HashMap::new();
    // First submission (in conference order) in which each pair co-authored.
    let mut shared: HashMap<(&PersonId, &PersonId), &PaperId> = HashMap::new();
    for paper in &conf.papers {
        for a in &paper.author_ids {
            for b in &paper.author_ids {
                if a != b {
                    graph.entry(a).or_default().insert(b);
                    shared.entry((a, b)).or_insert(&paper.id);
                }
            }
        }
    }

    let mut out = Vec::new();
    for reviewer in &conf.reviewers {
        let r = &reviewer.person_id;
        // BFS to depth 2, remembering the intermediary for distance-2 vertices.
        let mut dist: HashMap<&PersonId, (usize, Option<&PersonId>)> = HashMap::new();
        dist.insert(r, (0, None));
        let mut queue = VecDeque::from([r]);
        while let Some(v) = queue.pop_front() {
            let (d, _) = dist[v];
            if d == 2 {
                continue;
            }
            for &w in graph.get(v).into_iter().flatten() {
                if !dist.contains_key(w) {
                    dist.insert(w, (d + 1, if d == 1 { Some(v) } else { None }));
                    queue.push_back(w);
                }
            }
        }
        for paper in &conf.papers {
            let closest = paper
                .author_ids
                .iter()
                .filter_map(|a| dist.get(a).map(|&(d, via)| (d, a, via)))
                .min_by_key(|&(d, a, _)| (d, a));
            let Some((d, author, via)) = closest else {
                continue;
            };
            let record = match d {
                0 => CoiRecord::new(
                    &paper.id,
                    r,
                    CoiReason::CoAuthorLocal,
                    format!("reviewer is an author of {}", paper.id),
                ),
                1 => CoiRecord::new(
                    &paper.id,
                    r,
                    CoiReason::CoAuthorLocal,
                    format!("co-authored {} with {author}", shared[&(r, author)]),
                ),
                _ => CoiRecord::new(
                    &paper.id,
                    r,
                    CoiReason::CoAuthorOfCoAuthor,
                    format!("co-author {} co-authored with {author}", via.expect("distance 2 has a via")),
                ),
            };
            out.push(record);
        }
    }
    out
}

/// Co-occurrence of an author and the reviewer in a bibliography record no
/// older than `current_year - year_window`.
pub fn detect_historical_coauthorship(
    corpus: &BibCorpus,
    conf: &Conference,
    year_window: i32,
    current_year: i32,
) -> Vec<CoiRecord> {
    historical_coauthorship(corpus, conf, year_window, current_year, Exec::Sequential)
}

/// Reviewers are checked independently, in parallel when `exec` allows.
fn historical_coauthorship(
    corpus: &BibCorpus,
    conf: &Conference,
    year_window: i32,
    current_year: i32,
    exec: Exec,
) -> Vec<CoiRecord> {
    let keys: HashMap<&PersonId, NameKey> = conf
        .roster
        .iter()
        .filter_map(|p| NameKey::of(&p.name).map(|k| (&p.id, k)))
        .collect();
    let min_year = current_year - year_window;
    let per_reviewer = par::map_slice(exec, &conf.reviewers, |reviewer| {
        let mut out = Vec::new();
        let r = &reviewer.person_id;
        let Some(rkey) = keys.get(r) else { return out };
        // name key -> recent records where it sits in a slot other than the reviewer's
        let mut coauthors: HashMap<NameKey, BTreeSet<usize>> = HashMap::new();
        for &i in corpus.records_with(rkey) {
            let record = corpus.record(i);
            if record.year < min_year {
                continue;
            }
            let slots: Vec<Option<NameKey>> = record.authors.iter().map(|a| NameKey::of(a)).collect();
            let r_slots = positions(&slots, rkey);
            for (y, key) in slots.into_iter().enumerate() {
                if let Some(key) = key {
                    if r_slots.iter().any(|&x| x != y) {
                        coauthors.entry(key).or_default().insert(i);
                    }
                }
            }
        }
        if coauthors.is_empty() {
            return out;
        }
        for paper in &conf.papers {
            let found: BTreeSet<&str> = paper
                .author_ids
                .iter()
                .filter(|a| *a != r)
                .filter_map(|a| keys.get(a).and_then(|k| coauthors.get(k)))
                .flatten()
                .map(|&i| corpus.record(i).key.as_str())
                .collect();
            if !found.is_empty() {
                let evidence = found.into_iter().collect::<Vec<_>>().join(", ");
                out.push(CoiRecord::new(&paper.id, r, CoiReason::HistoricalCoAuthor, evidence));
            }
        }
        out
    });
    per_reviewer.into_iter().flatten().collect()
}

fn positions(slots: &[Option<NameKey>], key: &NameKey) -> Vec<usize> {
    slots
        .iter()
        .enumerate()
        .filter(|(_, k)| k.as_ref() == Some(key))
        .map(|(i, _)| i)
        .collect()
}

/// Sorts and removes repeated `(paper, reviewer, reason)` triples, keeping the first evidence.
fn dedup(mut records: Vec<CoiRecord>) -> Vec<CoiRecord> {
    let mut seen = HashSet::new();
    records.retain(|r| seen.insert((r.paper_id.clone(), r.reviewer_id.clone(), r.reason)));
    records.sort();
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionOptions {
    pub same_country: bool,
    pub year_window: i32,
    pub current_year: i32,
}

/// Runs every detector, plus declared conflicts, and merges the results.
pub fn detect_all(
    conf: &Conference,
    corpus: Option<&BibCorpus>,
    opts: DetectionOptions,
    exec: Exec,
) -> Vec<CoiRecord> {
    let parts = par::map_indexed(exec, 5, |i| match i {
        0 => explicit_conflicts(conf),
        1 => detect_same_country(conf, opts.same_country),
        2 => detect_same_institution(conf),
        3 => detect_local_coauthorship(conf),
        _ => corpus
            .map(|c| historical_coauthorship(c, conf, opts.year_window, opts.current_year, exec))
            .unwrap_or_default(),
    });
    dedup(parts.into_iter().flatten().collect())
}

/// Conflicting pairs with every reason recorded for each.
pub fn conflicts_by_pair(records: &[CoiRecord]) -> BTreeMap<(&PaperId, &ReviewerId), Vec<CoiReason>> {
    let mut map: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for r in records {
        map.entry((&r.paper_id, &r.reviewer_id)).or_default().push(r.reason);
    }
    map
}
