//! Synthetic corpora with a planted, confounded treatment effect at the
//! reply-triple level, plus controlled classifier-noise injection.
//!
//! Two kinds of trees are generated. Chain trees alternate between two
//! authors: B always answers A's latest tweet, while A answers B's
//! reply three times out of four and extends their own thread
//! otherwise. Every consecutive (first, reply, next-own-tweet) pattern
//! in such a chain is a reply triple, and each one carries a plant: a
//! confounder read off the first tweet shifts both the odds that the
//! reply crosses the treatment threshold and the outcome written to the
//! next own tweet, with the true treatment effect added on top.
//! Background trees give every tweet a distinct author, so they
//! contribute volume to tree- and day-level series but never a triple.
//!
//! Tree `i` draws from its own seeded RNG stream, so enlarging a corpus
//! leaves the trees it shares with a smaller one byte-identical.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    AccountCategory, Corpus, Dimension, EmotionScores, GoalScores, Measure, ScoreVector,
    StrategyScores, Tree, Tweet,
};
use crate::error::{CoreError, Result};
use crate::matching::{ConfusionMatrix, Covariate, MatchSpec};

/// Simulation settings for [`simulate_corpus`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSim {
    pub seed: u64,
    /// Two-author alternating chains; these carry the planted effect.
    pub n_chain_trees: usize,
    /// Inclusive (min, max) bounds for per-chain length draws. Varying
    /// lengths keep tree-level covariates from degenerating.
    pub chain_len: (usize, usize),
    /// Trees whose tweets all have distinct authors; they yield no
    /// reply triples.
    pub n_background_trees: usize,
    pub background_len: usize,
    /// Calendar days the trees spread over, starting 2016-01-01.
    pub days: usize,
    /// Dimension whose reply score defines treatment.
    pub treatment: Dimension,
    /// Dimension of the next own tweet that receives the outcome.
    pub outcome: Dimension,
    /// Dimension of the first tweet acting as the confounder.
    pub confounder: Dimension,
    /// Treatment score threshold the plants respect strictly.
    pub threshold: f64,
    /// Treated share at a neutral confounder value of one half.
    pub base_rate: f64,
    /// Log-odds of treatment gained as the confounder sweeps 0 to 1.
    pub confounding: f64,
    /// Outcome slope on the centered confounder.
    pub gamma: f64,
    /// Planted treatment effect on the outcome.
    pub att: f64,
    /// Standard deviation of the outcome noise.
    pub noise: f64,
}

impl Default for CorpusSim {
    fn default() -> Self {
        CorpusSim {
            seed: 0,
            n_chain_trees: 400,
            chain_len: (8, 16),
            n_background_trees: 50,
            background_len: 20,
            days: 60,
            treatment: Dimension::Hate,
            outcome: Dimension::Toxicity,
            confounder: Dimension::GroupOut,
            threshold: 0.5,
            base_rate: 0.25,
            confounding: 0.9,
            gamma: 0.3,
            att: 0.10,
            noise: 0.05,
        }
    }
}

// Writing into a simplex-bound dimension would leave its siblings
// unnormalized, so plants are restricted to free dimensions.
fn simplex_bound(d: Dimension) -> bool {
    matches!(
        d,
        Dimension::StrategyOpinion
            | Dimension::StrategyConstructive
            | Dimension::StrategySarcasm
            | Dimension::StrategyLeaveFact
            | Dimension::StrategyOther
            | Dimension::GoalExclusionary
            | Dimension::GoalInclusionary
            | Dimension::GoalOther
    )
}

impl CorpusSim {
    pub fn validate(&self) -> Result<()> {
        if self.n_chain_trees + self.n_background_trees == 0 {
            return Err(CoreError::Config("no trees requested".into()));
        }
        if self.chain_len.0 < 3 || self.chain_len.0 > self.chain_len.1 {
            return Err(CoreError::Config(format!(
                "chain length bounds {:?} need 3 <= min <= max",
                self.chain_len
            )));
        }
        if self.background_len == 0 {
            return Err(CoreError::Config("background trees cannot be empty".into()));
        }
        if self.days == 0 {
            return Err(CoreError::Config("corpus must span at least one day".into()));
        }
        for (name, v) in [("threshold", self.threshold), ("base_rate", self.base_rate)] {
            if !(v.is_finite() && 0.0 < v && v < 1.0) {
                return Err(CoreError::Config(format!("{name} {v} outside (0, 1)")));
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(CoreError::Config(format!("noise sd {} invalid", self.noise)));
        }
        for (name, v) in [
            ("confounding", self.confounding),
            ("gamma", self.gamma),
            ("att", self.att),
        ] {
            if !v.is_finite() {
                return Err(CoreError::Config(format!("{name} must be finite")));
            }
        }
        let dims = [
            ("treatment", self.treatment),
            ("outcome", self.outcome),
            ("confounder", self.confounder),
        ];
        for (i, &(name_a, a)) in dims.iter().enumerate() {
            if simplex_bound(a) {
                return Err(CoreError::Config(format!(
                    "{name_a} dimension '{a}' lies in a probability simplex; \
                     planting there would unbalance its siblings"
                )));
            }
            for &(name_b, b) in &dims[i + 1..] {
                if a == b {
                    return Err(CoreError::Config(format!(
                        "{name_a} and {name_b} dimensions must differ, both are '{a}'"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// What was actually planted, for judging recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub treatment: Dimension,
    pub outcome: Dimension,
    pub confounder: Dimension,
    pub threshold: f64,
    /// The planted effect an unbiased estimator should recover.
    pub att: f64,
    pub n_trees: usize,
    pub n_tweets: usize,
    /// Reply triples the chain trees actually form.
    pub planted_triples: usize,
    /// How many of those have a treated reply.
    pub treated_triples: usize,
}

impl GroundTruth {
    /// The matching specification an analyst who knows the confounding
    /// structure would write: the four structural covariates plus the
    /// confounded dimension and the baseline outcome level. Nearest
    /// neighbours in this space balance the confounder; padding the
    /// space with every unrelated dimension drowns it out instead.
    pub fn match_spec(&self) -> MatchSpec {
        let mut spec = MatchSpec::new(self.treatment, self.threshold, Measure::Score(self.outcome));
        spec.covariates = vec![
            Covariate::LogPosition,
            Covariate::LogTreeSize,
            Covariate::LogAuthorTweets,
            Covariate::LogRepliesReceived,
            Covariate::FirstScore(self.confounder),
            Covariate::FirstScore(self.outcome),
        ];
        spec
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// Uniform draw strictly inside (0, 1), away from the endpoints.
fn interior(rng: &mut ChaCha8Rng) -> f64 {
    0.02 + 0.96 * rng.random::<f64>()
}

// Normalized exponentials of standard normals: a valid simplex with
// plenty of spread.
fn simplex<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    let mut w = [0.0; N];
    for v in w.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = z.exp();
    }
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

fn random_scores(rng: &mut ChaCha8Rng) -> ScoreVector {
    let s = simplex::<5>(rng);
    let g = simplex::<3>(rng);
    ScoreVector {
        strategy: StrategyScores {
            opinion: s[0],
            constructive: s[1],
            sarcasm: s[2],
            leave_fact: s[3],
            other: s[4],
        },
        goal: GoalScores {
            exclusionary_outgroup: g[0],
            inclusionary_in_both: g[1],
            other: g[2],
        },
        emotions: EmotionScores {
            anger: interior(rng),
            fear: interior(rng),
            disgust: interior(rng),
            sadness: interior(rng),
            enthusiasm_hope: interior(rng),
            joy_pride: interior(rng),
        },
        hate: interior(rng),
        toxicity: interior(rng),
        extremity_rg: interior(rng),
        extremity_ri: interior(rng),
        group_out: interior(rng),
    }
}

// Trees rotate through the day range; several trees sharing a day are
// staggered within it. `shift` keeps chain and background trees apart.
fn tree_start(cfg: &CorpusSim, slot: usize, shift: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap()
        + Duration::days((slot % cfg.days) as i64)
        + Duration::minutes(shift + 30 * (slot / cfg.days) as i64)
}

// Reply cadence in minutes, varied by tree so conversation duration is
// not a deterministic function of size (same-size trees would
// otherwise be indistinguishable to tree-level moderators).
fn tree_gap(slot: usize) -> i64 {
    1 + (slot % 7) as i64
}

const CATEGORIES: [AccountCategory; 4] = [
    AccountCategory::Media,
    AccountCategory::Journalist,
    AccountCategory::Politician,
    AccountCategory::Unknown,
];

// One chain tree plus its (formed, treated-and-formed) triple counts.
fn chain_tree(cfg: &CorpusSim, idx: usize) -> (Tree, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(idx as u64);
    let len = rng.random_range(cfg.chain_len.0..=cfg.chain_len.1);

    // Even positions are author A, odd are author B. B answers A's
    // latest; A answers B's reply or, one time in four, extends their
    // own branch.
    let mut parents: Vec<Option<usize>> = vec![None];
    for m in 1..len {
        let p = if m % 2 == 1 || rng.random_bool(0.75) { m - 1 } else { m - 2 };
        parents.push(Some(p));
    }

    let tree_id = format!("c{idx:05}");
    let start = tree_start(cfg, idx, 0);
    let mut tweets: Vec<Tweet> = (0..len)
        .map(|m| Tweet {
            tweet_id: format!("{tree_id}-{m:03}"),
            tree_id: tree_id.clone(),
            parent_id: parents[m].map(|p| format!("{tree_id}-{p:03}")),
            author_id: format!("{tree_id}{}", if m % 2 == 0 { "a" } else { "b" }),
            timestamp: start + Duration::minutes(m as i64 * tree_gap(idx)),
            account_category: (m == 0).then(|| CATEGORIES[idx % CATEGORIES.len()]),
            scores: random_scores(&mut rng),
        })
        .collect();

    let mut formed = 0;
    let mut treated_formed = 0;
    let base_logit = (cfg.base_rate / (1.0 - cfg.base_rate)).ln();
    for i in 0..len.saturating_sub(2) {
        let c = tweets[i].scores.dimension(cfg.confounder);
        let treated = rng.random_bool(sigmoid(base_logit + cfg.confounding * (2.0 * c - 1.0)));
        // The reply lands strictly on the assigned side of the
        // threshold, uniformly within that side's interior.
        let u = interior(&mut rng);
        let side = if treated {
            cfg.threshold + (1.0 - cfg.threshold) * u
        } else {
            cfg.threshold * u
        };
        tweets[i + 1].scores.set_dimension(cfg.treatment, side);
        let z: f64 = rng.sample(StandardNormal);
        let y = 0.45
            + cfg.gamma * (c - 0.5)
            + cfg.att * f64::from(treated)
            + cfg.noise * z;
        tweets[i + 2].scores.set_dimension(cfg.outcome, y.clamp(1e-3, 0.999));
        // The triple exists only when the reply answered the first
        // tweet directly, which A declines one time in four.
        if parents[i + 1] == Some(i) {
            formed += 1;
            treated_formed += usize::from(treated);
        }
    }

    (Tree { tree_id, tweets, parents, root: 0 }, formed, treated_formed)
}

fn background_tree(cfg: &CorpusSim, idx: usize) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream((1 << 32) + idx as u64);
    let len = cfg.background_len;
    let tree_id = format!("g{idx:05}");
    let start = tree_start(cfg, idx, 15);
    let mut parents: Vec<Option<usize>> = vec![None];
    for m in 1..len {
        parents.push(Some(rng.random_range(0..m)));
    }
    let tweets = (0..len)
        .map(|m| Tweet {
            tweet_id: format!("{tree_id}-{m:03}"),
            tree_id: tree_id.clone(),
            parent_id: parents[m].map(|p| format!("{tree_id}-{p:03}")),
            author_id: format!("{tree_id}x{m}"),
            timestamp: start + Duration::minutes(m as i64 * tree_gap(idx)),
            account_category: (m == 0).then(|| CATEGORIES[idx % CATEGORIES.len()]),
            scores: random_scores(&mut rng),
        })
        .collect();
    Tree { tree_id, tweets, parents, root: 0 }
}

/// Generate a corpus with known ground truth. Deterministic in the
/// configuration; trees are independent of how many others exist.
pub fn simulate_corpus(cfg: &CorpusSim) -> Result<(Corpus, GroundTruth)> {
    cfg.validate()?;
    let mut trees = Vec::with_capacity(cfg.n_chain_trees + cfg.n_background_trees);
    let mut planted = 0;
    let mut treated = 0;
    for i in 0..cfg.n_chain_trees {
        let (tree, formed, treated_formed) = chain_tree(cfg, i);
        planted += formed;
        treated += treated_formed;
        trees.push(tree);
    }
    for i in 0..cfg.n_background_trees {
        trees.push(background_tree(cfg, i));
    }
    let corpus = Corpus { trees };
    let truth = GroundTruth {
        seed: cfg.seed,
        treatment: cfg.treatment,
        outcome: cfg.outcome,
        confounder: cfg.confounder,
        threshold: cfg.threshold,
        att: cfg.att,
        n_trees: corpus.trees.len(),
        n_tweets: corpus.n_tweets(),
        planted_triples: planted,
        treated_triples: treated,
    };
    Ok((corpus, truth))
}

/// Degrade one dimension's scores as an imperfect classifier would:
/// each tweet's side of `threshold` flips with the given rate (false
/// negatives for tweets above it, false positives below), landing
/// uniformly inside the opposite side. Returns the degraded corpus and
/// the exact confusion matrix of observed against original sides.
///
/// Zero rates return the corpus unchanged with a perfect matrix.
pub fn inject_classification_noise(
    corpus: &Corpus,
    dimension: Dimension,
    threshold: f64,
    fpr: f64,
    fnr: f64,
    seed: u64,
) -> Result<(Corpus, ConfusionMatrix)> {
    if !(threshold.is_finite() && 0.0 < threshold && threshold < 1.0) {
        return Err(CoreError::Config(format!("threshold {threshold} outside (0, 1)")));
    }
    for (name, v) in [("fpr", fpr), ("fnr", fnr)] {
        if !(v.is_finite() && (0.0..1.0).contains(&v)) {
            return Err(CoreError::Config(format!("{name} {v} outside [0, 1)")));
        }
    }
    if simplex_bound(dimension) {
        return Err(CoreError::Config(format!(
            "cannot perturb '{dimension}' independently of its simplex siblings"
        )));
    }

    if fpr == 0.0 && fnr == 0.0 {
        let above = corpus.tweets().filter(|t| t.scores.dimension(dimension) > threshold).count();
        let total = corpus.n_tweets();
        return Ok((
            corpus.clone(),
            ConfusionMatrix::perfect(above as u64, (total - above) as u64),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = corpus.clone();
    let mut cm = ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for tree in out.trees.iter_mut() {
        for tweet in tree.tweets.iter_mut() {
            let above = tweet.scores.dimension(dimension) > threshold;
            let flip = rng.random_bool(if above { fnr } else { fpr });
            match (above, flip) {
                (true, false) => cm.tp += 1,
                (true, true) => cm.fn_ += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
            }
            if flip {
                let u = interior(&mut rng);
                let moved =
                    if above { threshold * u } else { threshold + (1.0 - threshold) * u };
                tweet.scores.set_dimension(dimension, moved);
            }
        }
    }
    Ok((out, cm))
}
