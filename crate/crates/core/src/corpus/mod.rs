//! Corpus model: scored tweets in reply trees, plus the derived views
//! the three analysis levels consume (reply triples, per-tree sequences,
//! daily aggregates, speaker extremity, period indicators).

pub mod parse;
pub mod views;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Tolerance for the simplex constraints on strategy and goal scores.
pub const SIMPLEX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyScores {
    pub opinion: f64,
    pub constructive: f64,
    pub sarcasm: f64,
    pub leave_fact: f64,
    pub other: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalScores {
    pub exclusionary_outgroup: f64,
    pub inclusionary_in_both: f64,
    pub other: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmotionScores {
    pub anger: f64,
    pub fear: f64,
    pub disgust: f64,
    pub sadness: f64,
    pub enthusiasm_hope: f64,
    pub joy_pride: f64,
}

/// Per-tweet classifier probabilities. Strategy and goal scores each sum
/// to one (within [`SIMPLEX_TOL`]); emotions carry no sum constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreVector {
    pub hate: f64,
    pub toxicity: f64,
    pub extremity_rg: f64,
    pub extremity_ri: f64,
    pub strategy: StrategyScores,
    pub group_out: f64,
    pub goal: GoalScores,
    pub emotions: EmotionScores,
}

impl ScoreVector {
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in self.named_fields() {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(format!("score {name} = {v} outside [0, 1]"));
            }
        }
        let s = &self.strategy;
        let strat_sum = s.opinion + s.constructive + s.sarcasm + s.leave_fact + s.other;
        if (strat_sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(format!("strategy scores sum to {strat_sum}, expected 1"));
        }
        let g = &self.goal;
        let goal_sum = g.exclusionary_outgroup + g.inclusionary_in_both + g.other;
        if (goal_sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(format!("goal scores sum to {goal_sum}, expected 1"));
        }
        Ok(())
    }

    fn named_fields(&self) -> [(&'static str, f64); 19] {
        [
            ("hate", self.hate),
            ("toxicity", self.toxicity),
            ("extremity_rg", self.extremity_rg),
            ("extremity_ri", self.extremity_ri),
            ("strategy.opinion", self.strategy.opinion),
            ("strategy.constructive", self.strategy.constructive),
            ("strategy.sarcasm", self.strategy.sarcasm),
            ("strategy.leave_fact", self.strategy.leave_fact),
            ("strategy.other", self.strategy.other),
            ("group_out", self.group_out),
            ("goal.exclusionary_outgroup", self.goal.exclusionary_outgroup),
            ("goal.inclusionary_in_both", self.goal.inclusionary_in_both),
            ("goal.other", self.goal.other),
            ("emotions.anger", self.emotions.anger),
            ("emotions.fear", self.emotions.fear),
            ("emotions.disgust", self.emotions.disgust),
            ("emotions.sadness", self.emotions.sadness),
            ("emotions.enthusiasm_hope", self.emotions.enthusiasm_hope),
            ("emotions.joy_pride", self.emotions.joy_pride),
        ]
    }

    /// Unsigned extremity of a tweet: the larger of the two group
    /// similarities, since both extremes count as low quality.
    pub fn extremity_speech(&self) -> f64 {
        self.extremity_rg.max(self.extremity_ri)
    }

    /// Signed variant: positive when closer to RG, negative to RI.
    pub fn extremity_gap(&self) -> f64 {
        self.extremity_rg - self.extremity_ri
    }

    pub fn dimension(&self, d: Dimension) -> f64 {
        match d {
            Dimension::Hate => self.hate,
            Dimension::Toxicity => self.toxicity,
            Dimension::ExtremityRg => self.extremity_rg,
            Dimension::ExtremityRi => self.extremity_ri,
            Dimension::StrategyOpinion => self.strategy.opinion,
            Dimension::StrategyConstructive => self.strategy.constructive,
            Dimension::StrategySarcasm => self.strategy.sarcasm,
            Dimension::StrategyLeaveFact => self.strategy.leave_fact,
            Dimension::StrategyOther => self.strategy.other,
            Dimension::GroupOut => self.group_out,
            Dimension::GoalExclusionary => self.goal.exclusionary_outgroup,
            Dimension::GoalInclusionary => self.goal.inclusionary_in_both,
            Dimension::GoalOther => self.goal.other,
            Dimension::Anger => self.emotions.anger,
            Dimension::Fear => self.emotions.fear,
            Dimension::Disgust => self.emotions.disgust,
            Dimension::Sadness => self.emotions.sadness,
            Dimension::EnthusiasmHope => self.emotions.enthusiasm_hope,
            Dimension::JoyPride => self.emotions.joy_pride,
        }
    }

    pub fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::Score(d) => self.dimension(d),
            Measure::ExtremitySpeech => self.extremity_speech(),
            Measure::ExtremityGap => self.extremity_gap(),
        }
    }

    pub fn set_dimension(&mut self, d: Dimension, v: f64) {
        match d {
            Dimension::Hate => self.hate = v,
            Dimension::Toxicity => self.toxicity = v,
            Dimension::ExtremityRg => self.extremity_rg = v,
            Dimension::ExtremityRi => self.extremity_ri = v,
            Dimension::StrategyOpinion => self.strategy.opinion = v,
            Dimension::StrategyConstructive => self.strategy.constructive = v,
            Dimension::StrategySarcasm => self.strategy.sarcasm = v,
            Dimension::StrategyLeaveFact => self.strategy.leave_fact = v,
            Dimension::StrategyOther => self.strategy.other = v,
            Dimension::GroupOut => self.group_out = v,
            Dimension::GoalExclusionary => self.goal.exclusionary_outgroup = v,
            Dimension::GoalInclusionary => self.goal.inclusionary_in_both = v,
            Dimension::GoalOther => self.goal.other = v,
            Dimension::Anger => self.emotions.anger = v,
            Dimension::Fear => self.emotions.fear = v,
            Dimension::Disgust => self.emotions.disgust = v,
            Dimension::Sadness => self.emotions.sadness = v,
            Dimension::EnthusiasmHope => self.emotions.enthusiasm_hope = v,
            Dimension::JoyPride => self.emotions.joy_pride = v,
        }
    }
}

/// One raw classifier dimension of the score vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Hate,
    Toxicity,
    ExtremityRg,
    ExtremityRi,
    StrategyOpinion,
    StrategyConstructive,
    StrategySarcasm,
    StrategyLeaveFact,
    StrategyOther,
    GroupOut,
    GoalExclusionary,
    GoalInclusionary,
    GoalOther,
    Anger,
    Fear,
    Disgust,
    Sadness,
    EnthusiasmHope,
    JoyPride,
}

impl Dimension {
    pub const ALL: [Dimension; 19] = [
        Dimension::Hate,
        Dimension::Toxicity,
        Dimension::ExtremityRg,
        Dimension::ExtremityRi,
        Dimension::StrategyOpinion,
        Dimension::StrategyConstructive,
        Dimension::StrategySarcasm,
        Dimension::StrategyLeaveFact,
        Dimension::StrategyOther,
        Dimension::GroupOut,
        Dimension::GoalExclusionary,
        Dimension::GoalInclusionary,
        Dimension::GoalOther,
        Dimension::Anger,
        Dimension::Fear,
        Dimension::Disgust,
        Dimension::Sadness,
        Dimension::EnthusiasmHope,
        Dimension::JoyPride,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Dimension::Hate => "hate",
            Dimension::Toxicity => "toxicity",
            Dimension::ExtremityRg => "extremity_rg",
            Dimension::ExtremityRi => "extremity_ri",
            Dimension::StrategyOpinion => "strategy_opinion",
            Dimension::StrategyConstructive => "strategy_constructive",
            Dimension::StrategySarcasm => "strategy_sarcasm",
            Dimension::StrategyLeaveFact => "strategy_leave_fact",
            Dimension::StrategyOther => "strategy_other",
            Dimension::GroupOut => "group_out",
            Dimension::GoalExclusionary => "goal_exclusionary",
            Dimension::GoalInclusionary => "goal_inclusionary",
            Dimension::GoalOther => "goal_other",
            Dimension::Anger => "anger",
            Dimension::Fear => "fear",
            Dimension::Disgust => "disgust",
            Dimension::Sadness => "sadness",
            Dimension::EnthusiasmHope => "enthusiasm_hope",
            Dimension::JoyPride => "joy_pride",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .iter()
            .find(|d| d.name() == s)
            .copied()
            .ok_or_else(|| CoreError::Config(format!("unknown dimension '{s}'")))
    }
}

/// A scalar readable from a score vector: any raw dimension or one of
/// the derived extremity summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measure {
    Score(Dimension),
    #[serde(with = "extremity_speech_tag")]
    ExtremitySpeech,
    #[serde(with = "extremity_gap_tag")]
    ExtremityGap,
}

macro_rules! unit_variant_tag {
    ($mod_name:ident, $tag:literal) => {
        mod $mod_name {
            use serde::{Deserialize, Deserializer, Serializer};
            pub fn serialize<S: Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str($tag)
            }
            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(), D::Error> {
                let tag = String::deserialize(d)?;
                if tag == $tag {
                    Ok(())
                } else {
                    Err(serde::de::Error::custom(format!("expected '{}'", $tag)))
                }
            }
        }
    };
}

unit_variant_tag!(extremity_speech_tag, "extremity_speech");
unit_variant_tag!(extremity_gap_tag, "extremity_gap");

impl Measure {
    pub fn name(&self) -> String {
        match self {
            Measure::Score(d) => d.name().to_string(),
            Measure::ExtremitySpeech => "extremity_speech".to_string(),
            Measure::ExtremityGap => "extremity_gap".to_string(),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Measure {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extremity_speech" => Ok(Measure::ExtremitySpeech),
            "extremity_gap" => Ok(Measure::ExtremityGap),
            other => Dimension::from_str(other).map(Measure::Score),
        }
    }
}

impl From<Dimension> for Measure {
    fn from(d: Dimension) -> Self {
        Measure::Score(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountCategory {
    Media,
    Journalist,
    Politician,
    Unknown,
}

impl fmt::Display for AccountCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AccountCategory::Media => "media",
            AccountCategory::Journalist => "journalist",
            AccountCategory::Politician => "politician",
            AccountCategory::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tweet {
    pub tweet_id: String,
    pub tree_id: String,
    /// Null for the tree root.
    pub parent_id: Option<String>,
    pub author_id: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub account_category: Option<AccountCategory>,
    pub scores: ScoreVector,
}

/// A rooted reply tree. Tweets are held in canonical order (timestamp,
/// ties broken by tweet_id) and every tweet is reachable from the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub tree_id: String,
    pub tweets: Vec<Tweet>,
    /// Parent index within `tweets`; None exactly at the root.
    pub parents: Vec<Option<usize>>,
    pub root: usize,
}

impl Tree {
    pub fn size(&self) -> usize {
        self.tweets.len()
    }

    pub fn root_category(&self) -> AccountCategory {
        self.tweets[self.root]
            .account_category
            .unwrap_or(AccountCategory::Unknown)
    }

    pub fn duration_hours(&self) -> f64 {
        let first = self.tweets.iter().map(|t| t.timestamp).min().unwrap();
        let last = self.tweets.iter().map(|t| t.timestamp).max().unwrap();
        (last - first).num_seconds() as f64 / 3600.0
    }

    pub fn unique_participants(&self) -> usize {
        self.tweets
            .iter()
            .map(|t| t.author_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Number of tweets on the longest root-to-leaf reply chain
    /// (a single tweet has depth 1).
    pub fn depth(&self) -> usize {
        let n = self.size();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, p) in self.parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        let mut best = 0usize;
        let mut stack = vec![(self.root, 1usize)];
        while let Some((node, d)) = stack.pop() {
            best = best.max(d);
            for &c in &children[node] {
                stack.push((c, d + 1));
            }
        }
        best
    }
}

/// An immutable, validated corpus; trees are sorted by tree_id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub trees: Vec<Tree>,
}

impl Corpus {
    pub fn n_tweets(&self) -> usize {
        self.trees.iter().map(|t| t.size()).sum()
    }

    pub fn tweets(&self) -> impl Iterator<Item = &Tweet> {
        self.trees.iter().flat_map(|t| t.tweets.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_names_round_trip_and_match_serde() {
        for d in Dimension::ALL {
            let parsed: Dimension = d.name().parse().unwrap();
            assert_eq!(parsed, d);
            let json = serde_json::to_string(&d).unwrap();
            assert_eq!(json, format!("\"{}\"", d.name()));
        }
        assert!("strategy_opinions".parse::<Dimension>().is_err());
    }

    #[test]
    fn measure_names_round_trip_and_match_serde() {
        let mut all: Vec<Measure> = Dimension::ALL.iter().map(|&d| Measure::Score(d)).collect();
        all.push(Measure::ExtremitySpeech);
        all.push(Measure::ExtremityGap);
        for m in all {
            let parsed: Measure = m.name().parse().unwrap();
            assert_eq!(parsed, m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
            let back: Measure = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn derived_measures_compute_from_raw_scores() {
        let mut scores = parse::test_scores(0.3);
        scores.extremity_rg = 0.8;
        scores.extremity_ri = 0.25;
        assert_eq!(scores.measure(Measure::ExtremitySpeech), 0.8);
        assert!((scores.measure(Measure::ExtremityGap) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn score_validation_catches_bad_values() {
        let mut s = parse::test_scores(0.2);
        assert!(s.validate().is_ok());
        s.hate = 1.2;
        assert!(s.validate().unwrap_err().contains("hate"));
        s.hate = 0.2;
        s.strategy.opinion += 0.01;
        assert!(s.validate().unwrap_err().contains("strategy"));
    }
}
