//! Derived views over a parsed corpus: reply triples for the micro
//! level, per-tree score sequences for the meso level, daily aggregates
//! and speaker-extremity shares for the macro level, and regime flags.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Corpus, Measure};
use crate::error::{CoreError, Result};

/// Start dates of the two organized-group regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodConfig {
    pub rg_start: NaiveDate,
    pub ri_start: NaiveDate,
}

impl Default for PeriodConfig {
    fn default() -> Self {
        PeriodConfig {
            rg_start: NaiveDate::from_ymd_opt(2017, 1, 1).unwrap(),
            ri_start: NaiveDate::from_ymd_opt(2018, 5, 1).unwrap(),
        }
    }
}

impl PeriodConfig {
    /// The second regime is nested inside the first.
    pub fn validate(&self) -> Result<()> {
        if self.ri_start < self.rg_start {
            return Err(CoreError::Config(format!(
                "second period start {} precedes first period start {}",
                self.ri_start, self.rg_start
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodFlags {
    pub rg_active: bool,
    pub ri_active: bool,
}

pub fn period_flags(date: NaiveDate, cfg: &PeriodConfig) -> PeriodFlags {
    PeriodFlags {
        rg_active: date >= cfg.rg_start,
        ri_active: date >= cfg.ri_start,
    }
}

/// The micro-level causal unit: a tweet by user A, a reply by another
/// user, and A's next tweet anywhere in the same tree. Indexes refer to
/// canonical positions within `corpus.trees[tree].tweets`. The four
/// context covariates are stored log(1+x) transformed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplyTriple {
    pub tree: usize,
    pub first: usize,
    pub reply: usize,
    pub second: usize,
    /// True when A's next tweet directly answers the reply.
    pub second_is_reply_to_reply: bool,
    pub log_position: f64,
    pub log_tree_size: f64,
    pub log_author_tweets: f64,
    pub log_replies_received: f64,
}

/// Emit every (first, reply, next-own-tweet) pattern exactly once, in
/// canonical (tree, reply) order. The "next" tweet is A's earliest tweet
/// strictly after the reply, so no other tweet by A lies between them.
pub fn extract_reply_triples(corpus: &Corpus) -> Vec<ReplyTriple> {
    let mut author_tweets: HashMap<&str, usize> = HashMap::new();
    let mut replies_received: HashMap<&str, usize> = HashMap::new();
    for tree in &corpus.trees {
        for (i, t) in tree.tweets.iter().enumerate() {
            *author_tweets.entry(t.author_id.as_str()).or_default() += 1;
            if let Some(p) = tree.parents[i] {
                *replies_received.entry(tree.tweets[p].author_id.as_str()).or_default() += 1;
            }
        }
    }

    let log1p = |x: usize| (1.0 + x as f64).ln();
    let mut out = Vec::new();
    for (ti, tree) in corpus.trees.iter().enumerate() {
        let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, t) in tree.tweets.iter().enumerate() {
            positions.entry(t.author_id.as_str()).or_default().push(i);
        }
        for (reply, t) in tree.tweets.iter().enumerate() {
            let Some(first) = tree.parents[reply] else { continue };
            let first_author = tree.tweets[first].author_id.as_str();
            if first_author == t.author_id {
                continue;
            }
            let own = &positions[first_author];
            let k = own.partition_point(|&x| x <= reply);
            let Some(&second) = own.get(k) else { continue };
            out.push(ReplyTriple {
                tree: ti,
                first,
                reply,
                second,
                second_is_reply_to_reply: tree.parents[second] == Some(reply),
                log_position: log1p(first + 1),
                log_tree_size: log1p(tree.size()),
                log_author_tweets: log1p(author_tweets[first_author]),
                log_replies_received: log1p(
                    replies_received.get(first_author).copied().unwrap_or(0),
                ),
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct TreeSeries {
    pub tree: usize,
    pub tree_id: String,
    /// values[m][t] for measure m at canonical position t.
    pub values: Vec<Vec<f64>>,
}

/// Per-tree ordered score sequences for trees with at least `min_size`
/// tweets (boundary inclusive).
pub fn tree_series(
    corpus: &Corpus,
    min_size: usize,
    measures: &[Measure],
) -> Result<Vec<TreeSeries>> {
    if min_size < 3 {
        return Err(CoreError::Config(format!(
            "minimum tree size {min_size} below 3"
        )));
    }
    Ok(corpus
        .trees
        .iter()
        .enumerate()
        .filter(|(_, t)| t.size() >= min_size)
        .map(|(i, t)| TreeSeries {
            tree: i,
            tree_id: t.tree_id.clone(),
            values: measures
                .iter()
                .map(|&m| t.tweets.iter().map(|tw| tw.scores.measure(m)).collect())
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct DailySeries {
    /// One entry per calendar day in the inclusive span.
    pub dates: Vec<NaiveDate>,
    pub tweet_counts: Vec<usize>,
    pub measures: Vec<Measure>,
    /// values[m][d]: unweighted mean over that day's tweets; NaN marks a
    /// day with no tweets.
    pub values: Vec<Vec<f64>>,
}

impl DailySeries {
    pub fn n_days(&self) -> usize {
        self.dates.len()
    }
}

pub fn daily_series(
    corpus: &Corpus,
    start: NaiveDate,
    end: NaiveDate,
    measures: &[Measure],
) -> Result<DailySeries> {
    if start > end {
        return Err(CoreError::Domain(format!("empty date range {start}..{end}")));
    }
    if corpus.n_tweets() == 0 {
        return Err(CoreError::insufficient("tweets for daily aggregation", 1, 0));
    }
    let n_days = (end - start).num_days() as usize + 1;
    let mut counts = vec![0usize; n_days];
    let mut sums = vec![vec![0.0f64; n_days]; measures.len()];
    for tweet in corpus.tweets() {
        let date = tweet.timestamp.date_naive();
        if date < start || date > end {
            continue;
        }
        let d = (date - start).num_days() as usize;
        counts[d] += 1;
        for (mi, &m) in measures.iter().enumerate() {
            sums[mi][d] += tweet.scores.measure(m);
        }
    }
    let values = sums
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(&counts)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
                .collect()
        })
        .collect();
    let dates = (0..n_days)
        .map(|d| start + chrono::Duration::days(d as i64))
        .collect();
    Ok(DailySeries { dates, tweet_counts: counts, measures: measures.to_vec(), values })
}

fn check_unit_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && 0.0 < threshold && threshold < 1.0) {
        return Err(CoreError::Domain(format!(
            "speaker threshold {threshold} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Fraction of speakers in one unit whose tweets are at least half
/// extreme, where a tweet is extreme iff `measure >= threshold`.
fn speaker_share<'a, I: Iterator<Item = &'a super::Tweet>>(
    tweets: I,
    measure: Measure,
    threshold: f64,
) -> Option<f64> {
    let mut per_author: HashMap<&str, (usize, usize)> = HashMap::new();
    for t in tweets {
        let entry = per_author.entry(t.author_id.as_str()).or_default();
        entry.0 += 1;
        if t.scores.measure(measure) >= threshold {
            entry.1 += 1;
        }
    }
    if per_author.is_empty() {
        return None;
    }
    let extreme = per_author.values().filter(|(total, ex)| ex * 2 >= *total).count();
    Some(extreme as f64 / per_author.len() as f64)
}

/// Extreme-speaker share per tree, aligned with `corpus.trees`.
pub fn speaker_extremity_by_tree(
    corpus: &Corpus,
    measure: Measure,
    threshold: f64,
) -> Result<Vec<f64>> {
    check_unit_threshold(threshold)?;
    Ok(corpus
        .trees
        .iter()
        .map(|t| speaker_share(t.tweets.iter(), measure, threshold).unwrap_or(f64::NAN))
        .collect())
}

/// Extreme-speaker share per calendar day, for days with any tweets.
pub fn speaker_extremity_by_day(
    corpus: &Corpus,
    measure: Measure,
    threshold: f64,
) -> Result<BTreeMap<NaiveDate, f64>> {
    check_unit_threshold(threshold)?;
    let mut by_day: BTreeMap<NaiveDate, Vec<&super::Tweet>> = BTreeMap::new();
    for t in corpus.tweets() {
        by_day.entry(t.timestamp.date_naive()).or_default().push(t);
    }
    Ok(by_day
        .into_iter()
        .filter_map(|(d, tweets)| {
            speaker_share(tweets.into_iter(), measure, threshold).map(|s| (d, s))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub n_trees: usize,
    pub n_tweets: usize,
    pub n_authors: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub tree_size_min: usize,
    pub tree_size_max: usize,
    pub tree_size_mean: f64,
    pub tree_size_median: f64,
    pub max_depth: usize,
    pub trees_at_least_50: usize,
    pub trees_at_least_100: usize,
    pub n_reply_triples: usize,
}

pub fn describe(corpus: &Corpus) -> CorpusSummary {
    let mut sizes: Vec<usize> = corpus.trees.iter().map(|t| t.size()).collect();
    sizes.sort_unstable();
    let n_trees = sizes.len();
    let n_tweets: usize = sizes.iter().sum();
    let authors: std::collections::BTreeSet<&str> =
        corpus.tweets().map(|t| t.author_id.as_str()).collect();
    let dates: Vec<NaiveDate> = corpus.tweets().map(|t| t.timestamp.date_naive()).collect();
    let median = if n_trees == 0 {
        0.0
    } else if n_trees % 2 == 1 {
        sizes[n_trees / 2] as f64
    } else {
        (sizes[n_trees / 2 - 1] + sizes[n_trees / 2]) as f64 / 2.0
    };
    CorpusSummary {
        n_trees,
        n_tweets,
        n_authors: authors.len(),
        first_date: dates.iter().min().copied(),
        last_date: dates.iter().max().copied(),
        tree_size_min: sizes.first().copied().unwrap_or(0),
        tree_size_max: sizes.last().copied().unwrap_or(0),
        tree_size_mean: if n_trees > 0 { n_tweets as f64 / n_trees as f64 } else { 0.0 },
        tree_size_median: median,
        max_depth: corpus.trees.iter().map(|t| t.depth()).max().unwrap_or(0),
        trees_at_least_50: sizes.iter().filter(|&&s| s >= 50).count(),
        trees_at_least_100: sizes.iter().filter(|&&s| s >= 100).count(),
        n_reply_triples: extract_reply_triples(corpus).len(),
    }
}
