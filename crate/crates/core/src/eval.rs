//! Filtered link-prediction ranking and metrics.
//!
//! Every test triple yields a tail query `(h, r, ?)` and a head query
//! `(?, r, t)`. Candidates are all entities except the known answers other
//! than the gold one. Ties are broken by the expected rank under a uniform
//! random order: `rank = 1 + #greater + #equal / 2`, counting `#equal` over the
//! other candidates.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Corrupt, FilterIndex, Triple};
use crate::decoder::ScoreWeights;
use crate::encoder::LayerState;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// MRR and Hits@{1,3,10} over a set of ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub queries: usize,
}

impl Metrics {
    /// Averages over `ranks`; every field is zero when there are none.
    pub fn from_ranks(ranks: &[f64]) -> Self {
        if ranks.is_empty() {
            return Self { mrr: 0.0, hits1: 0.0, hits3: 0.0, hits10: 0.0, queries: 0 };
        }
        let n = ranks.len() as f64;
        let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Self {
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
            hits1: hits(1.0),
            hits3: hits(3.0),
            hits10: hits(10.0),
            queries: ranks.len(),
        }
    }
}

/// Rank of the gold answer for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryRank {
    pub triple: Triple,
    pub side: Corrupt,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub ranks: Vec<QueryRank>,
    pub metrics: Metrics,
}

/// Expected rank of `gold` among `candidates` under `scorer`.
pub fn rank_query(gold: u32, candidates: &[u32], scorer: impl Fn(u32) -> f64) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if !candidates.contains(&gold) {
        return Err(Error::GoldNotCandidate { gold });
    }
    let g = scorer(gold);
    if !g.is_finite() {
        return Err(Error::NonFiniteScore { index: gold as usize });
    }
    let (mut greater, mut equal) = (0usize, 0usize);
    for &c in candidates.iter().filter(|&&c| c != gold) {
        let s = scorer(c);
        if !s.is_finite() {
            return Err(Error::NonFiniteScore { index: c as usize });
        }
        if s > g {
            greater += 1;
        } else if s == g {
            equal += 1;
        }
    }
    Ok(1.0 + greater as f64 + equal as f64 / 2.0)
}

/// Scores every entity as the missing element of a query.
pub trait CandidateScorer {
    fn num_entities(&self) -> usize;

    /// Writes the score of replacing the `side` element of `t` with each entity into `out`.
    fn score_candidates(&self, t: Triple, side: Corrupt, out: &mut [f64]) -> Result<()>;
}

/// Batched scoring over a full set of layer representations.
///
/// A tail query scores every entity `e` as `Σ_k α_k (h_k ⊗ r̂_k) · e_k` and a
/// head query as `Σ_k α_k e_k · (t_k ⊗ r̂_k*)`, which equals `(e_k ⊗ r̂_k) · t_k`.
#[derive(Debug, Clone)]
pub struct LayerScorer<'a> {
    state: &'a LayerState,
    weights: &'a ScoreWeights,
    unit_relations: Vec<Tensor>,
}

impl<'a> LayerScorer<'a> {
    pub fn new(state: &'a LayerState, weights: &'a ScoreWeights) -> Result<Self> {
        if state.num_layers() != weights.as_slice().len() {
            return Err(Error::LengthMismatch { left: state.num_layers(), right: weights.as_slice().len() });
        }
        let unit_relations = state
            .layers
            .iter()
            .map(|l| {
                let rows: Result<Vec<_>> =
                    (0..l.relations.rows()).map(|r| l.relations.quaternion_row(r).normalize_entries()).collect();
                Tensor::from_quaternion_rows(&rows?)
            })
            .collect::<Result<_>>()?;
        Ok(Self { state, weights, unit_relations })
    }
}

impl CandidateScorer for LayerScorer<'_> {
    fn num_entities(&self) -> usize {
        self.state.layers[0].entities.rows()
    }

    fn score_candidates(&self, t: Triple, side: Corrupt, out: &mut [f64]) -> Result<()> {
        if out.len() != self.num_entities() {
            return Err(Error::LengthMismatch { left: out.len(), right: self.num_entities() });
        }
        out.fill(0.0);
        for ((layer, unit), &a) in self.state.layers.iter().zip(&self.unit_relations).zip(self.weights.as_slice()) {
            if a == 0.0 {
                continue;
            }
            let r = unit.quaternion_row(t.relation as usize);
            let query = match side {
                Corrupt::Tail => layer.entities.quaternion_row(t.head as usize).hamilton(&r)?,
                Corrupt::Head => layer.entities.quaternion_row(t.tail as usize).hamilton(&r.conjugate())?,
            };
            let q = query.to_blocks();
            for (e, o) in out.iter_mut().enumerate() {
                *o += a * crate::tensor::dot(layer.entities.row(e), &q);
            }
        }
        Ok(())
    }
}

/// Filtered ranks for both queries of every triple in `triples`.
pub fn evaluate(scorer: &impl CandidateScorer, triples: &[Triple], filter: &FilterIndex) -> Result<RankingReport> {
    let mut scores = vec![0.0; scorer.num_entities()];
    let mut ranks = Vec::with_capacity(2 * triples.len());
    for &t in triples {
        for side in [Corrupt::Tail, Corrupt::Head] {
            scorer.score_candidates(t, side, &mut scores)?;
            let gold = side.gold(t);
            let rank = filtered_rank(&scores, gold, filter.excluded(t, side))?;
            ranks.push(QueryRank { triple: t, side, rank });
        }
    }
    let values: Vec<f64> = ranks.iter().map(|q| q.rank).collect();
    Ok(RankingReport { metrics: Metrics::from_ranks(&values), ranks })
}

/// Expected rank of `gold` given scores for every entity, skipping `excluded`
/// (which may mention `gold`; it is always kept).
pub fn filtered_rank(scores: &[f64], gold: u32, excluded: impl IntoIterator<Item = u32>) -> Result<f64> {
    let g = *scores.get(gold as usize).ok_or(Error::GoldNotCandidate { gold })?;
    if !g.is_finite() {
        return Err(Error::NonFiniteScore { index: gold as usize });
    }
    let (mut greater, mut equal) = (0usize, 0usize);
    for (e, &s) in scores.iter().enumerate() {
        if e == gold as usize {
            continue;
        }
        if !s.is_finite() {
            return Err(Error::NonFiniteScore { index: e });
        }
        if s > g {
            greater += 1;
        } else if s == g {
            equal += 1;
        }
    }
    for e in excluded {
        if e == gold {
            continue;
        }
        let s = scores[e as usize];
        if s > g {
            greater -= 1;
        } else if s == g {
            equal -= 1;
        }
    }
    Ok(1.0 + greater as f64 + equal as f64 / 2.0)
}

/// Direct per-triple scoring, used as a reference for [`LayerScorer`].
pub fn score_triple(state: &LayerState, weights: &ScoreWeights, t: Triple) -> Result<f64> {
    crate::decoder::score(state, weights, t)
}
