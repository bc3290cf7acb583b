//! Matched causal inference on reply triples: threshold calibration,
//! treatment assignment, nearest-neighbor matching on Mahalanobis
//! distance, covariate balance, the double-adjusted outcome model, and
//! a bootstrap that propagates classifier error into the interval.
//!
//! A unit is one (first tweet, reply, next own tweet) triple. The reply
//! score on the treatment dimension defines treatment; the outcome is a
//! score of the author's next tweet; covariates are the first tweet's
//! full score vector plus log-scale context (position, tree size,
//! author activity, replies received).

mod effect;
mod pairs;

pub use effect::{
    error_aware_bootstrap, fit_outcome_model, marginal_effect, EffectEstimate, OutcomeModel,
    MIN_BOOTSTRAP,
};
pub use pairs::{
    balance_report, match_nearest, BalanceReport, CovariateBalance, MatchedSample, BALANCE_FAIL,
    BALANCE_WARN,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::views::ReplyTriple;
use crate::corpus::{Corpus, Dimension, Measure};
use crate::error::{CoreError, Result};

/// Classifier performance counts from a labeled holdout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    /// A classifier that never errs, for baseline comparisons.
    pub fn perfect(positives: u64, negatives: u64) -> Self {
        ConfusionMatrix { tp: positives, fp: 0, fn_: 0, tn: negatives }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tp + self.fp + self.fn_ + self.tn == 0 {
            return Err(CoreError::Config("confusion matrix with all counts zero".into()));
        }
        if self.fp + self.tn == 0 || self.fn_ + self.tp == 0 {
            return Err(CoreError::Config(
                "confusion matrix needs both true classes to define error rates".into(),
            ));
        }
        Ok(())
    }

    /// False-positive rate fp / (fp + tn).
    pub fn fpr(&self) -> f64 {
        self.fp as f64 / (self.fp + self.tn) as f64
    }

    /// False-negative rate fn / (fn + tp).
    pub fn fnr(&self) -> f64 {
        self.fn_ as f64 / (self.fn_ + self.tp) as f64
    }
}

/// One matching covariate: a context feature of the triple or a score
/// of the first tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Covariate {
    LogPosition,
    LogTreeSize,
    LogAuthorTweets,
    LogRepliesReceived,
    FirstScore(Dimension),
}

impl Covariate {
    pub fn name(&self) -> String {
        match self {
            Covariate::LogPosition => "log_position".into(),
            Covariate::LogTreeSize => "log_tree_size".into(),
            Covariate::LogAuthorTweets => "log_author_tweets".into(),
            Covariate::LogRepliesReceived => "log_replies_received".into(),
            Covariate::FirstScore(d) => d.name().into(),
        }
    }

    fn value(&self, triple: &ReplyTriple, corpus: &Corpus) -> f64 {
        match self {
            Covariate::LogPosition => triple.log_position,
            Covariate::LogTreeSize => triple.log_tree_size,
            Covariate::LogAuthorTweets => triple.log_author_tweets,
            Covariate::LogRepliesReceived => triple.log_replies_received,
            Covariate::FirstScore(d) => {
                corpus.trees[triple.tree].tweets[triple.first].scores.dimension(*d)
            }
        }
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Covariate {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log_position" => Ok(Covariate::LogPosition),
            "log_tree_size" => Ok(Covariate::LogTreeSize),
            "log_author_tweets" => Ok(Covariate::LogAuthorTweets),
            "log_replies_received" => Ok(Covariate::LogRepliesReceived),
            other => Dimension::from_str(other).map(Covariate::FirstScore),
        }
    }
}

impl From<Covariate> for String {
    fn from(c: Covariate) -> String {
        c.name()
    }
}

impl TryFrom<String> for Covariate {
    type Error = CoreError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// The full covariate set: the four context features and every
/// first-tweet score except one member per simplex group (those are
/// linear in their siblings and would break the outcome design's rank).
pub fn default_covariates() -> Vec<Covariate> {
    let mut out = vec![
        Covariate::LogPosition,
        Covariate::LogTreeSize,
        Covariate::LogAuthorTweets,
        Covariate::LogRepliesReceived,
    ];
    out.extend(
        Dimension::ALL
            .iter()
            .filter(|d| !matches!(d, Dimension::StrategyOther | Dimension::GoalOther))
            .map(|d| Covariate::FirstScore(*d)),
    );
    out
}

/// How to treat and measure one analysis: the reply dimension defining
/// treatment, its score threshold, the matching covariates, and the
/// outcome read off the author's next tweet. Matching itself is fixed:
/// Mahalanobis distance, 1:1 nearest neighbor without replacement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchSpec {
    pub treatment: Dimension,
    pub threshold: f64,
    pub covariates: Vec<Covariate>,
    pub outcome: Measure,
}

impl MatchSpec {
    pub fn new(treatment: Dimension, threshold: f64, outcome: Measure) -> Self {
        MatchSpec { treatment, threshold, covariates: default_covariates(), outcome }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(CoreError::Config(format!(
                "treatment threshold {} outside [0, 1)",
                self.threshold
            )));
        }
        if self.covariates.is_empty() {
            return Err(CoreError::Config("no matching covariates".into()));
        }
        for (i, c) in self.covariates.iter().enumerate() {
            if self.covariates[..i].contains(c) {
                return Err(CoreError::Config(format!("duplicate covariate '{c}'")));
            }
        }
        Ok(())
    }
}

/// One triple prepared for matching: treatment flag, covariate row,
/// outcome value, and the indicator for whether the author's next tweet
/// directly answered the reply.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchUnit {
    /// (tree index, reply index): unique, used for deterministic order.
    pub id: (usize, usize),
    pub treated: bool,
    pub covariates: Vec<f64>,
    pub outcome: f64,
    pub reply_to_reply: bool,
}

/// Score strictly above the threshold is treated; equal or below is
/// control.
pub fn assign_treatment(score: f64, threshold: f64) -> bool {
    score > threshold
}

/// Materialize match units from extracted triples.
pub fn build_units(
    corpus: &Corpus,
    triples: &[ReplyTriple],
    spec: &MatchSpec,
) -> Result<Vec<MatchUnit>> {
    spec.validate()?;
    let mut units = Vec::with_capacity(triples.len());
    for tr in triples {
        let reply_scores = &corpus.trees[tr.tree].tweets[tr.reply].scores;
        let second_scores = &corpus.trees[tr.tree].tweets[tr.second].scores;
        units.push(MatchUnit {
            id: (tr.tree, tr.reply),
            treated: assign_treatment(reply_scores.dimension(spec.treatment), spec.threshold),
            covariates: spec.covariates.iter().map(|c| c.value(tr, corpus)).collect(),
            outcome: second_scores.measure(spec.outcome),
            reply_to_reply: tr.second_is_reply_to_reply,
        });
    }
    Ok(units)
}

/// Anger is thresholded at a fixed 0.95 rather than by calibration,
/// reflecting its prevalence; see [`threshold_for`].
pub const ANGER_THRESHOLD: f64 = 0.95;

/// Candidate-sweep threshold calibration: the observed score that
/// maximizes the F1 of `score > threshold` against the labels, ties
/// broken toward the higher threshold.
pub fn calibrate_threshold(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(CoreError::Config(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() || scores.iter().any(|s| !s.is_finite()) {
        return Err(CoreError::Config("calibration scores empty or non-finite".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(CoreError::Config(
            "calibration labels contain a single class; both are required".into(),
        ));
    }

    let mut candidates: Vec<f64> = scores.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut best_thr = candidates[0];
    let mut best_f1 = -1.0;
    for &thr in &candidates {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (s, l) in scores.iter().zip(labels) {
            let pred = assign_treatment(*s, thr);
            match (pred, l) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
        // >= keeps the last (highest) threshold among equals.
        if f1 >= best_f1 {
            best_f1 = f1;
            best_thr = thr;
        }
    }
    Ok(best_thr)
}

/// Per-dimension threshold: calibrated by F1 sweep, except anger which
/// is pinned at [`ANGER_THRESHOLD`].
pub fn threshold_for(dimension: Dimension, scores: &[f64], labels: &[bool]) -> Result<f64> {
    if dimension == Dimension::Anger {
        return Ok(ANGER_THRESHOLD);
    }
    calibrate_threshold(scores, labels)
}

#[cfg(test)]
pub(crate) mod testutil {
    use chrono::{TimeZone, Utc};

    use crate::corpus::{
        Corpus, EmotionScores, GoalScores, ScoreVector, StrategyScores, Tree, Tweet,
    };

    /// A score vector that validates, with every free dimension at `v`.
    pub fn flat_scores(v: f64) -> ScoreVector {
        ScoreVector {
            hate: v,
            toxicity: v,
            extremity_rg: v,
            extremity_ri: v,
            strategy: StrategyScores {
                opinion: 0.2,
                constructive: 0.2,
                sarcasm: 0.2,
                leave_fact: 0.2,
                other: 0.2,
            },
            group_out: v,
            goal: GoalScores {
                exclusionary_outgroup: 0.25,
                inclusionary_in_both: 0.25,
                other: 0.5,
            },
            emotions: EmotionScores {
                anger: v,
                fear: v,
                disgust: v,
                sadness: v,
                enthusiasm_hope: v,
                joy_pride: v,
            },
        }
    }

    /// One alternating two-author chain tree: a replies chain where the
    /// even positions belong to "a{idx}" and the odd ones to "b{idx}".
    pub fn chain_tree(idx: usize, len: usize, scores: impl Fn(usize) -> ScoreVector) -> Tree {
        let tree_id = format!("tree{idx}");
        let tweets: Vec<Tweet> = (0..len)
            .map(|i| Tweet {
                tweet_id: format!("{tree_id}-{i:03}"),
                tree_id: tree_id.clone(),
                parent_id: (i > 0).then(|| format!("{tree_id}-{:03}", i - 1)),
                author_id: if i % 2 == 0 { format!("a{idx}") } else { format!("b{idx}") },
                timestamp: Utc.with_ymd_and_hms(2016, 3, 1, 12, 0, 0).unwrap()
                    + chrono::Duration::minutes((idx * 600 + i) as i64),
                account_category: None,
                scores: scores(i),
            })
            .collect();
        let parents = (0..len).map(|i| i.checked_sub(1)).collect();
        Tree { tree_id, tweets, parents, root: 0 }
    }

    pub fn chain_corpus(n_trees: usize, len: usize, score_at: f64) -> Corpus {
        let trees = (0..n_trees)
            .map(|i| {
                chain_tree(i, len, |pos| {
                    let mut s = flat_scores(score_at);
                    s.hate = (0.05 + 0.9 * (pos as f64 / len as f64)).min(1.0);
                    s
                })
            })
            .collect();
        Corpus { trees }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_matrix_round_trips_reserved_field_name() {
        let cm = ConfusionMatrix { tp: 80, fp: 5, fn_: 20, tn: 95 };
        let json = serde_json::to_string(&cm).unwrap();
        assert_eq!(json, r#"{"tp":80,"fp":5,"fn":20,"tn":95}"#);
        let back: ConfusionMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cm);
        assert!((back.fpr() - 0.05).abs() < 1e-12);
        assert!((back.fnr() - 0.2).abs() < 1e-12);
        assert!(ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 0 }.validate().is_err());
        assert!(ConfusionMatrix { tp: 3, fp: 0, fn_: 1, tn: 0 }.validate().is_err());
    }

    #[test]
    fn covariate_names_parse_back() {
        for c in default_covariates() {
            let parsed: Covariate = c.name().parse().unwrap();
            assert_eq!(parsed, c);
        }
        assert!("no_such_covariate".parse::<Covariate>().is_err());
        assert_eq!(default_covariates().len(), 21);
    }

    #[test]
    fn separable_scores_calibrate_to_the_boundary() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [false, false, true, true];
        let thr = calibrate_threshold(&scores, &labels).unwrap();
        assert_eq!(thr, 0.2);
    }

    #[test]
    fn equal_f1_ties_break_toward_the_higher_threshold() {
        // Thresholds 0.2 and 0.5 both give F1 = 2/3.
        let scores = [0.2, 0.5, 0.5, 0.5, 0.9];
        let labels = [false, true, false, false, true];
        let thr = calibrate_threshold(&scores, &labels).unwrap();
        assert_eq!(thr, 0.5);
    }

    #[test]
    fn sweep_matches_an_exhaustive_grid_oracle() {
        // The candidate sweep must attain the best F1 over a dense grid;
        // predictions only change at observed scores, so it suffices.
        let mut rng = crate::ardl::testutil::Lcg(88);
        let scores: Vec<f64> = (0..200).map(|_| rng.uniform()).collect();
        let labels: Vec<bool> = scores.iter().map(|s| s + 0.3 * rng.normal() > 0.5).collect();
        let thr = calibrate_threshold(&scores, &labels).unwrap();
        let f1_at = |t: f64| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (s, l) in scores.iter().zip(&labels) {
                match (*s > t, *l) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 }
        };
        let best_grid = (0..=1000).map(|i| f1_at(i as f64 / 1000.0)).fold(0.0, f64::max);
        assert!((f1_at(thr) - best_grid).abs() < 1e-12);
    }

    #[test]
    fn single_class_labels_are_rejected() {
        assert!(calibrate_threshold(&[0.1, 0.9], &[true, true]).is_err());
        assert!(calibrate_threshold(&[0.1, 0.9], &[false, false]).is_err());
        assert!(calibrate_threshold(&[], &[]).is_err());
    }

    #[test]
    fn anger_threshold_is_pinned() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [false, false, true, true];
        let thr = threshold_for(Dimension::Anger, &scores, &labels).unwrap();
        assert_eq!(thr, ANGER_THRESHOLD);
        let thr2 = threshold_for(Dimension::Hate, &scores, &labels).unwrap();
        assert_eq!(thr2, 0.2);
    }

    #[test]
    fn treatment_boundary_is_strictly_above() {
        assert!(assign_treatment(0.96, 0.95));
        assert!(!assign_treatment(0.95, 0.95));
    }

    #[test]
    fn units_pick_up_scores_context_and_outcome() {
        let corpus = super::testutil::chain_corpus(1, 6, 0.2);
        let triples = crate::corpus::views::extract_reply_triples(&corpus);
        assert!(!triples.is_empty());
        let spec = MatchSpec {
            treatment: Dimension::StrategyOpinion,
            threshold: 0.5,
            covariates: vec![Covariate::LogPosition, Covariate::FirstScore(Dimension::Hate)],
            outcome: Measure::Score(Dimension::Hate),
        };
        let units = build_units(&corpus, &triples, &spec).unwrap();
        assert_eq!(units.len(), triples.len());
        for (u, tr) in units.iter().zip(&triples) {
            assert_eq!(u.covariates.len(), 2);
            assert_eq!(u.covariates[0], tr.log_position);
            let first_hate = corpus.trees[tr.tree].tweets[tr.first].scores.hate;
            assert_eq!(u.covariates[1], first_hate);
            let second_hate = corpus.trees[tr.tree].tweets[tr.second].scores.hate;
            assert_eq!(u.outcome, second_hate);
        }
        let bad = MatchSpec { covariates: vec![], ..spec.clone() };
        assert!(build_units(&corpus, &triples, &bad).is_err());
        let dup = MatchSpec {
            covariates: vec![Covariate::LogPosition, Covariate::LogPosition],
            ..spec
        };
        assert!(build_units(&corpus, &triples, &dup).is_err());
    }
}
