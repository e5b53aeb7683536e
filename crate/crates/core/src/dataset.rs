//! Vocabularies, triple stores, negative sampling and filtered-ranking sets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// An `(h, r, t)` fact over vocabulary ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: u32,
    pub relation: u32,
    pub tail: u32,
}

impl Triple {
    pub const fn new(head: u32, relation: u32, tail: u32) -> Self {
        Self { head, relation, tail }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Splits one line-per-triple TSV text into `[head, relation, tail]` labels.
///
/// Blank lines are skipped and a trailing `\r` is dropped. Line numbers in
/// errors are 1-based.
pub fn parse_triples(text: &str) -> Result<Vec<[&str; 3]>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [h, r, t] => out.push([*h, *r, *t]),
            _ => return Err(Error::MalformedLine { line: n + 1, found: fields.len() }),
        }
    }
    Ok(out)
}

/// Dense id assignment for entity and relation labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: BTreeMap<String, u32>,
    relation_ids: BTreeMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(labels: &mut Vec<String>, ids: &mut BTreeMap<String, u32>, label: &str) -> u32 {
        if let Some(&id) = ids.get(label) {
            return id;
        }
        let id = labels.len() as u32;
        labels.push(label.to_string());
        ids.insert(label.to_string(), id);
        id
    }

    pub fn intern_entity(&mut self, label: &str) -> u32 {
        Self::intern(&mut self.entities, &mut self.entity_ids, label)
    }

    pub fn intern_relation(&mut self, label: &str) -> u32 {
        Self::intern(&mut self.relations, &mut self.relation_ids, label)
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_id(&self, label: &str) -> Option<u32> {
        self.entity_ids.get(label).copied()
    }

    pub fn relation_id(&self, label: &str) -> Option<u32> {
        self.relation_ids.get(label).copied()
    }

    pub fn entity_label(&self, id: u32) -> &str {
        &self.entities[id as usize]
    }

    pub fn relation_label(&self, id: u32) -> &str {
        &self.relations[id as usize]
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn triple_labels(&self, t: Triple) -> [&str; 3] {
        [self.entity_label(t.head), self.relation_label(t.relation), self.entity_label(t.tail)]
    }
}

/// Id-encoded train/valid/test triples and the set of all known facts.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    train: Vec<Triple>,
    valid: Vec<Triple>,
    test: Vec<Triple>,
    train_set: BTreeSet<Triple>,
    known: BTreeSet<Triple>,
}

impl TripleStore {
    /// Interns labels in order of first appearance (train, then valid, then
    /// test) and drops repeated triples within a split, keeping the first.
    pub fn from_labels(train: &[[&str; 3]], valid: &[[&str; 3]], test: &[[&str; 3]]) -> (Self, Vocab) {
        let mut vocab = Vocab::new();
        let mut encode = |rows: &[[&str; 3]]| -> Vec<Triple> {
            let mut seen = BTreeSet::new();
            rows.iter()
                .map(|[h, r, t]| {
                    let h = vocab.intern_entity(h);
                    let r = vocab.intern_relation(r);
                    Triple::new(h, r, vocab.intern_entity(t))
                })
                .filter(|t| seen.insert(*t))
                .collect()
        };
        let train = encode(train);
        let valid = encode(valid);
        let test = encode(test);
        (Self::from_ids(train, valid, test), vocab)
    }

    pub fn from_ids(train: Vec<Triple>, valid: Vec<Triple>, test: Vec<Triple>) -> Self {
        let train_set: BTreeSet<Triple> = train.iter().copied().collect();
        let known = train.iter().chain(&valid).chain(&test).copied().collect();
        Self { train, valid, test, train_set, known }
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn train_set(&self) -> &BTreeSet<Triple> {
        &self.train_set
    }

    /// Facts from every split.
    pub fn known(&self) -> &BTreeSet<Triple> {
        &self.known
    }

    pub fn is_known(&self, t: &Triple) -> bool {
        self.known.contains(t)
    }
}

/// Which side of a triple is replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Corrupt {
    Head,
    Tail,
}

impl Corrupt {
    pub fn name(self) -> &'static str {
        match self {
            Corrupt::Head => "head",
            Corrupt::Tail => "tail",
        }
    }

    pub fn apply(self, t: Triple, entity: u32) -> Triple {
        match self {
            Corrupt::Head => Triple { head: entity, ..t },
            Corrupt::Tail => Triple { tail: entity, ..t },
        }
    }

    pub fn gold(self, t: Triple) -> u32 {
        match self {
            Corrupt::Head => t.head,
            Corrupt::Tail => t.tail,
        }
    }
}

/// Positives (label 1) each followed by their corruptions (label 0).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub triples: Vec<Triple>,
    pub labels: Vec<f64>,
}

impl LabeledBatch {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Uniform head-or-tail corruption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeSampler {
    pub num_entities: u32,
    pub per_positive: usize,
}

const RANDOM_TRIES: usize = 64;

impl NegativeSampler {
    pub fn new(num_entities: usize, per_positive: usize) -> Self {
        assert!(per_positive >= 1, "at least one negative per positive");
        assert!(num_entities >= 2, "corruption needs at least two entities");
        Self { num_entities: num_entities as u32, per_positive }
    }

    /// For every positive, emits it with label 1 followed by `per_positive`
    /// corruptions with label 0. A corruption never equals its source; when
    /// `reject` is given, corruptions found in it are redrawn.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        positives: &[Triple],
        reject: Option<&BTreeSet<Triple>>,
        rng: &mut R,
    ) -> LabeledBatch {
        let cap = positives.len() * (1 + self.per_positive);
        let mut triples = Vec::with_capacity(cap);
        let mut labels = Vec::with_capacity(cap);
        for &pos in positives {
            triples.push(pos);
            labels.push(1.0);
            for _ in 0..self.per_positive {
                triples.push(self.corrupt(pos, reject, rng));
                labels.push(0.0);
            }
        }
        LabeledBatch { triples, labels }
    }

    fn corrupt<R: Rng + ?Sized>(&self, pos: Triple, reject: Option<&BTreeSet<Triple>>, rng: &mut R) -> Triple {
        let ok = |t: &Triple| *t != pos && reject.is_none_or(|set| !set.contains(t));
        for _ in 0..RANDOM_TRIES {
            let side = if rng.gen_bool(0.5) { Corrupt::Head } else { Corrupt::Tail };
            let cand = side.apply(pos, rng.gen_range(0..self.num_entities));
            if ok(&cand) {
                return cand;
            }
        }
        // Dense neighbourhoods: draw uniformly from the admissible corruptions,
        // or from all non-identical ones if the filter leaves nothing.
        let all = || {
            [Corrupt::Head, Corrupt::Tail]
                .into_iter()
                .flat_map(move |s| (0..self.num_entities).map(move |e| s.apply(pos, e)))
        };
        let mut pool: Vec<Triple> = all().filter(ok).collect();
        if pool.is_empty() {
            pool = all().filter(|t| *t != pos).collect();
        }
        pool[rng.gen_range(0..pool.len())]
    }
}

/// Known answers for `(h, r, ?)` and `(?, r, t)` queries across all splits.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    num_entities: u32,
    tails: BTreeMap<(u32, u32), Vec<u32>>,
    heads: BTreeMap<(u32, u32), Vec<u32>>,
}

impl FilterIndex {
    pub fn new(num_entities: usize, known: &BTreeSet<Triple>) -> Self {
        let mut tails: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
        let mut heads: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
        // `known` iterates in sorted order, so each answer list comes out sorted
        // for tails; heads are sorted explicitly.
        for t in known {
            tails.entry((t.head, t.relation)).or_default().push(t.tail);
            heads.entry((t.relation, t.tail)).or_default().push(t.head);
        }
        for v in heads.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Self { num_entities: num_entities as u32, tails, heads }
    }

    /// Every known answer to the query obtained by blanking `side` of `t`.
    pub fn answers(&self, t: Triple, side: Corrupt) -> &[u32] {
        let found = match side {
            Corrupt::Tail => self.tails.get(&(t.head, t.relation)),
            Corrupt::Head => self.heads.get(&(t.relation, t.tail)),
        };
        found.map_or(&[], Vec::as_slice)
    }

    /// Known answers other than the gold entity of `t`; these are removed before ranking.
    pub fn excluded(&self, t: Triple, side: Corrupt) -> impl Iterator<Item = u32> + '_ {
        let gold = side.gold(t);
        self.answers(t, side).iter().copied().filter(move |&e| e != gold)
    }

    /// All entities except competing known answers. Always contains the gold entity.
    pub fn candidates(&self, t: Triple, side: Corrupt) -> Vec<u32> {
        let gold = side.gold(t);
        let answers = self.answers(t, side);
        (0..self.num_entities).filter(|e| *e == gold || answers.binary_search(e).is_err()).collect()
    }
}
