//! JSONL corpus ingestion: line-level schema validation, tree assembly
//! with reachability checks, timestamp repair, and canonical ordering.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::{Corpus, Tree, Tweet};
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    /// First malformed line or structural violation aborts.
    #[default]
    Strict,
    /// Malformed lines and unreachable subtrees are dropped and logged.
    Quarantine,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuarantineEntry {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct IngestReport {
    pub lines_total: usize,
    pub tweets_ingested: usize,
    pub timestamp_repairs: usize,
    pub n_trees: usize,
    pub quarantined: Vec<QuarantineEntry>,
}

pub fn parse_corpus(path: &Path, strictness: Strictness) -> Result<(Corpus, IngestReport)> {
    let file = File::open(path)?;
    parse_corpus_reader(BufReader::new(file), strictness)
}

pub fn parse_corpus_reader<R: BufRead>(
    reader: R,
    strictness: Strictness,
) -> Result<(Corpus, IngestReport)> {
    let mut report = IngestReport::default();
    let mut records: Vec<(usize, Tweet)> = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        report.lines_total += 1;

        let reason = if line.trim().is_empty() {
            Some("blank line".to_string())
        } else {
            match serde_json::from_str::<Tweet>(&line) {
                Err(e) => Some(format!("invalid record: {e}")),
                Ok(tweet) => match record_checks(&tweet) {
                    Err(r) => Some(r),
                    Ok(()) => {
                        if !seen_ids.insert(tweet.tweet_id.clone()) {
                            Some(format!("duplicate tweet_id '{}'", tweet.tweet_id))
                        } else {
                            records.push((lineno, tweet));
                            None
                        }
                    }
                },
            }
        };
        if let Some(reason) = reason {
            match strictness {
                Strictness::Strict => return Err(CoreError::Malformed { line: lineno, reason }),
                Strictness::Quarantine => {
                    report.quarantined.push(QuarantineEntry { line: lineno, reason })
                }
            }
        }
    }

    assemble(records, strictness, report)
}

fn record_checks(t: &Tweet) -> std::result::Result<(), String> {
    if t.tweet_id.is_empty() {
        return Err("empty tweet_id".into());
    }
    if t.tree_id.is_empty() {
        return Err("empty tree_id".into());
    }
    if t.author_id.is_empty() {
        return Err("empty author_id".into());
    }
    if t.parent_id.as_deref() == Some(t.tweet_id.as_str()) {
        return Err("tweet is its own parent".into());
    }
    t.scores.validate()
}

/// Group validated records into trees; drop (or, in strict mode, abort
/// on) tweets not reachable from a unique root; repair child timestamps
/// that precede their parent; sort each tree canonically.
fn assemble(
    records: Vec<(usize, Tweet)>,
    strictness: Strictness,
    mut report: IngestReport,
) -> Result<(Corpus, IngestReport)> {
    let mut by_tree: BTreeMap<String, Vec<(usize, Tweet)>> = BTreeMap::new();
    for (line, tweet) in records {
        by_tree.entry(tweet.tree_id.clone()).or_default().push((line, tweet));
    }

    let mut trees = Vec::with_capacity(by_tree.len());
    let mut structural: Vec<QuarantineEntry> = Vec::new();

    for (tree_id, members) in by_tree {
        let index: HashMap<&str, usize> = members
            .iter()
            .enumerate()
            .map(|(i, (_, t))| (t.tweet_id.as_str(), i))
            .collect();

        // Root selection: unique parentless tweet; with several
        // candidates the earliest by (timestamp, tweet_id) is kept and
        // the rest become unreachable.
        let mut root_candidates: Vec<usize> = members
            .iter()
            .enumerate()
            .filter(|(_, (_, t))| t.parent_id.is_none())
            .map(|(i, _)| i)
            .collect();
        root_candidates.sort_by(|&a, &b| {
            let ta = &members[a].1;
            let tb = &members[b].1;
            (ta.timestamp, &ta.tweet_id).cmp(&(tb.timestamp, &tb.tweet_id))
        });
        let Some(&root) = root_candidates.first() else {
            for (line, t) in &members {
                structural.push(QuarantineEntry {
                    line: *line,
                    reason: format!("tree '{}' has no root tweet", t.tree_id),
                });
            }
            continue;
        };

        let n = members.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut dangling: Vec<usize> = Vec::new();
        for (i, (_, t)) in members.iter().enumerate() {
            if let Some(pid) = &t.parent_id {
                match index.get(pid.as_str()) {
                    Some(&p) => children[p].push(i),
                    None => dangling.push(i),
                }
            }
        }

        let mut reached = vec![false; n];
        let mut queue = std::collections::VecDeque::from([root]);
        reached[root] = true;
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &c in &children[i] {
                if !reached[c] {
                    reached[c] = true;
                    queue.push_back(c);
                }
            }
        }

        for (i, (line, t)) in members.iter().enumerate() {
            if reached[i] {
                continue;
            }
            let reason = if dangling.contains(&i) {
                format!("parent_id '{}' not found in tree", t.parent_id.as_deref().unwrap_or(""))
            } else if t.parent_id.is_none() {
                format!("extra root in tree '{tree_id}'")
            } else {
                "ancestor dropped, subtree unreachable".to_string()
            };
            structural.push(QuarantineEntry { line: *line, reason });
        }

        // Timestamp repair in breadth-first order: each parent is final
        // before its children are inspected, so clamps cascade.
        let mut tweets: Vec<Tweet> = members.into_iter().map(|(_, t)| t).collect();
        let mut parent_of: Vec<Option<usize>> = vec![None; n];
        for (p, kids) in children.iter().enumerate() {
            for &c in kids {
                parent_of[c] = Some(p);
            }
        }
        for &i in &order {
            if let Some(p) = parent_of[i] {
                if tweets[i].timestamp < tweets[p].timestamp {
                    tweets[i].timestamp = tweets[p].timestamp + Duration::seconds(1);
                    report.timestamp_repairs += 1;
                }
            }
        }

        // Keep reachable tweets only, in canonical order.
        let mut keep: Vec<usize> = (0..n).filter(|&i| reached[i]).collect();
        keep.sort_by(|&a, &b| {
            (tweets[a].timestamp, &tweets[a].tweet_id)
                .cmp(&(tweets[b].timestamp, &tweets[b].tweet_id))
        });
        let mut new_pos = vec![usize::MAX; n];
        for (pos, &old) in keep.iter().enumerate() {
            new_pos[old] = pos;
        }
        let parents: Vec<Option<usize>> = keep
            .iter()
            .map(|&old| parent_of[old].map(|p| new_pos[p]))
            .collect();
        let root = new_pos[root];
        let kept_tweets: Vec<Tweet> = {
            let mut slots: Vec<Option<Tweet>> = tweets.into_iter().map(Some).collect();
            keep.iter().map(|&old| slots[old].take().unwrap()).collect()
        };

        report.tweets_ingested += kept_tweets.len();
        trees.push(Tree { tree_id, tweets: kept_tweets, parents, root });
    }

    if !structural.is_empty() {
        if strictness == Strictness::Strict {
            let worst = structural.into_iter().min_by_key(|e| e.line).unwrap();
            return Err(CoreError::Malformed { line: worst.line, reason: worst.reason });
        }
        report.quarantined.extend(structural);
        report.quarantined.sort_by_key(|e| e.line);
    }

    report.n_trees = trees.len();
    Ok((Corpus { trees }, report))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, w: &mut W) -> Result<()> {
    for tree in &corpus.trees {
        for tweet in &tree.tweets {
            let line = serde_json::to_string(tweet)
                .map_err(|e| CoreError::Numeric(format!("serialize tweet: {e}")))?;
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

pub fn write_corpus_file(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(File::create(path)?);
    write_corpus(corpus, &mut file)?;
    file.flush()?;
    Ok(())
}

#[cfg(test)]
pub(crate) fn test_scores(level: f64) -> super::ScoreVector {
    use super::{EmotionScores, GoalScores, ScoreVector, StrategyScores};
    ScoreVector {
        hate: level,
        toxicity: level,
        extremity_rg: level,
        extremity_ri: level,
        strategy: StrategyScores {
            opinion: 0.4,
            constructive: 0.3,
            sarcasm: 0.1,
            leave_fact: 0.1,
            other: 0.1,
        },
        group_out: level,
        goal: GoalScores {
            exclusionary_outgroup: 0.25,
            inclusionary_in_both: 0.25,
            other: 0.5,
        },
        emotions: EmotionScores {
            anger: level,
            fear: level,
            disgust: level,
            sadness: level,
            enthusiasm_hope: level,
            joy_pride: level,
        },
    }
}

#[cfg(test)]
pub(crate) fn test_tweet(
    tweet_id: &str,
    tree_id: &str,
    parent_id: Option<&str>,
    author_id: &str,
    ts: &str,
) -> Tweet {
    Tweet {
        tweet_id: tweet_id.to_string(),
        tree_id: tree_id.to_string(),
        parent_id: parent_id.map(str::to_string),
        author_id: author_id.to_string(),
        timestamp: ts.parse().expect("test timestamp"),
        account_category: None,
        scores: test_scores(0.3),
    }
}

#[cfg(test)]
pub(crate) fn corpus_from_tweets(tweets: &[Tweet], strictness: Strictness) -> Result<(Corpus, IngestReport)> {
    let mut buf = Vec::new();
    for t in tweets {
        buf.extend_from_slice(serde_json::to_string(t).unwrap().as_bytes());
        buf.push(b'\n');
    }
    parse_corpus_reader(std::io::BufReader::new(buf.as_slice()), strictness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AccountCategory;

    #[test]
    fn empty_input_gives_empty_corpus() {
        let (corpus, report) =
            parse_corpus_reader(std::io::BufReader::new(&b""[..]), Strictness::Strict).unwrap();
        assert_eq!(corpus.trees.len(), 0);
        assert_eq!(corpus.n_tweets(), 0);
        assert_eq!(report.lines_total, 0);
    }

    #[test]
    fn three_tweet_chain_assembles_one_tree() {
        let tweets = vec![
            test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z"),
            test_tweet("t2", "tr", Some("t1"), "bob", "2017-03-01T10:05:00Z"),
            test_tweet("t3", "tr", Some("t2"), "alice", "2017-03-01T10:09:00Z"),
        ];
        let (corpus, report) = corpus_from_tweets(&tweets, Strictness::Strict).unwrap();
        assert_eq!(corpus.trees.len(), 1);
        let tree = &corpus.trees[0];
        assert_eq!(tree.size(), 3);
        assert_eq!(tree.depth(), 3);
        assert_eq!(tree.unique_participants(), 2);
        assert_eq!(tree.root, 0);
        assert_eq!(tree.parents, vec![None, Some(0), Some(1)]);
        assert_eq!(report.tweets_ingested, 3);
        assert!(report.quarantined.is_empty());
    }

    #[test]
    fn dangling_parent_quarantines_subtree() {
        let tweets = vec![
            test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z"),
            test_tweet("t2", "tr", Some("missing"), "bob", "2017-03-01T10:05:00Z"),
            test_tweet("t3", "tr", Some("t2"), "carol", "2017-03-01T10:06:00Z"),
        ];
        let (corpus, report) = corpus_from_tweets(&tweets, Strictness::Quarantine).unwrap();
        assert_eq!(corpus.trees[0].size(), 1);
        assert_eq!(report.quarantined.len(), 2);
        assert!(report.quarantined[0].reason.contains("parent_id 'missing' not found"));
        assert!(report.quarantined[1].reason.contains("unreachable"));

        match corpus_from_tweets(&tweets, Strictness::Strict) {
            Err(CoreError::Malformed { line: 2, .. }) => {}
            other => panic!("expected strict abort at line 2, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_and_invalid_json_are_line_errors() {
        let a = test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z");
        let mut buf = serde_json::to_string(&a).unwrap();
        buf.push('\n');
        buf.push_str(&serde_json::to_string(&a).unwrap());
        buf.push('\n');
        buf.push_str("{not json\n");
        let (corpus, report) = parse_corpus_reader(
            std::io::BufReader::new(buf.as_bytes()),
            Strictness::Quarantine,
        )
        .unwrap();
        assert_eq!(corpus.n_tweets(), 1);
        assert_eq!(report.quarantined.len(), 2);
        assert!(report.quarantined[0].reason.contains("duplicate tweet_id"));
        assert!(report.quarantined[1].reason.contains("invalid record"));
    }

    #[test]
    fn score_constraint_violation_reports_line() {
        let mut bad = test_tweet("t2", "tr", Some("t1"), "bob", "2017-03-01T10:05:00Z");
        bad.scores.strategy.opinion += 0.5;
        let tweets = vec![
            test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z"),
            bad,
        ];
        match corpus_from_tweets(&tweets, Strictness::Strict) {
            Err(CoreError::Malformed { line: 2, reason }) => {
                assert!(reason.contains("strategy"));
            }
            other => panic!("expected line-2 abort, got {other:?}"),
        }
    }

    #[test]
    fn extra_roots_are_dropped_with_descendants() {
        let tweets = vec![
            test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z"),
            test_tweet("t2", "tr", None, "bob", "2017-03-01T10:05:00Z"),
            test_tweet("t3", "tr", Some("t2"), "carol", "2017-03-01T10:06:00Z"),
            test_tweet("t4", "tr", Some("t1"), "dave", "2017-03-01T10:07:00Z"),
        ];
        let (corpus, report) = corpus_from_tweets(&tweets, Strictness::Quarantine).unwrap();
        assert_eq!(corpus.trees[0].size(), 2);
        assert_eq!(report.quarantined.len(), 2);
        assert!(report.quarantined[0].reason.contains("extra root"));
    }

    #[test]
    fn missing_root_quarantines_tree() {
        let tweets = vec![test_tweet("t2", "tr", Some("gone"), "bob", "2017-03-01T10:05:00Z")];
        let (corpus, report) = corpus_from_tweets(&tweets, Strictness::Quarantine).unwrap();
        assert!(corpus.trees.is_empty());
        assert_eq!(report.quarantined.len(), 1);
        assert!(report.quarantined[0].reason.contains("no root"));
    }

    #[test]
    fn child_before_parent_is_clamped_forward() {
        let tweets = vec![
            test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z"),
            test_tweet("t2", "tr", Some("t1"), "bob", "2017-03-01T09:00:00Z"),
            test_tweet("t3", "tr", Some("t2"), "carol", "2017-03-01T09:30:00Z"),
        ];
        let (corpus, report) = corpus_from_tweets(&tweets, Strictness::Strict).unwrap();
        let tree = &corpus.trees[0];
        // t2 clamps to root+1s; t3 at 09:30 now precedes t2 and cascades.
        assert_eq!(report.timestamp_repairs, 2);
        assert_eq!(tree.tweets[0].tweet_id, "t1");
        assert_eq!(tree.tweets[1].tweet_id, "t2");
        assert_eq!(tree.tweets[2].tweet_id, "t3");
        assert!(tree.tweets[1].timestamp > tree.tweets[0].timestamp);
        assert!(tree.tweets[2].timestamp > tree.tweets[1].timestamp);
    }

    #[test]
    fn canonical_order_breaks_timestamp_ties_by_id() {
        let tweets = vec![
            test_tweet("r", "tr", None, "alice", "2017-03-01T10:00:00Z"),
            test_tweet("zz", "tr", Some("r"), "bob", "2017-03-01T10:05:00Z"),
            test_tweet("aa", "tr", Some("r"), "carol", "2017-03-01T10:05:00Z"),
        ];
        let (corpus, _) = corpus_from_tweets(&tweets, Strictness::Strict).unwrap();
        let ids: Vec<&str> = corpus.trees[0].tweets.iter().map(|t| t.tweet_id.as_str()).collect();
        assert_eq!(ids, vec!["r", "aa", "zz"]);
    }

    #[test]
    fn round_trip_preserves_corpus_exactly() {
        let mut root = test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z");
        root.account_category = Some(AccountCategory::Journalist);
        let tweets = vec![
            root,
            test_tweet("t2", "tr", Some("t1"), "bob", "2017-03-01T10:05:00Z"),
            test_tweet("x1", "other", None, "dora", "2018-07-01T08:00:00Z"),
        ];
        let (corpus, _) = corpus_from_tweets(&tweets, Strictness::Strict).unwrap();
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        let (reparsed, report) =
            parse_corpus_reader(std::io::BufReader::new(buf.as_slice()), Strictness::Strict)
                .unwrap();
        assert_eq!(corpus, reparsed);
        assert!(report.quarantined.is_empty());
    }

    #[test]
    fn line_order_permutation_yields_identical_corpus() {
        let tweets = vec![
            test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z"),
            test_tweet("t2", "tr", Some("t1"), "bob", "2017-03-01T10:05:00Z"),
            test_tweet("t3", "tr", Some("t1"), "carol", "2017-03-01T10:02:00Z"),
            test_tweet("u1", "ur", None, "erin", "2017-04-01T10:00:00Z"),
        ];
        let (forward, _) = corpus_from_tweets(&tweets, Strictness::Strict).unwrap();
        let mut reversed = tweets.clone();
        reversed.reverse();
        let (backward, _) = corpus_from_tweets(&reversed, Strictness::Strict).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn blank_lines_quarantined_not_fatal_in_lenient_mode() {
        let a = test_tweet("t1", "tr", None, "alice", "2017-03-01T10:00:00Z");
        let buf = format!("{}\n   \n", serde_json::to_string(&a).unwrap());
        let (corpus, report) = parse_corpus_reader(
            std::io::BufReader::new(buf.as_bytes()),
            Strictness::Quarantine,
        )
        .unwrap();
        assert_eq!(corpus.n_tweets(), 1);
        assert_eq!(report.quarantined.len(), 1);
    }
}
