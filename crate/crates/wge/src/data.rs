//! Loading tab-separated triple files from a dataset directory.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use wge_core::dataset::{parse_triples, FilterIndex, Split, TripleStore, Vocab};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("{}: {cause}", path.display())]
    Parse { path: PathBuf, cause: wge_core::Error },
}

/// A loaded dataset with its label vocabulary.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub store: TripleStore,
    pub vocab: Vocab,
}

impl Dataset {
    /// Reads `train.txt`, `valid.txt` and `test.txt` (one `head<TAB>relation<TAB>tail` per line).
    pub fn load(dir: &Path) -> Result<Self, DataError> {
        let texts = Split::ALL.map(|s| {
            let path = split_path(dir, s);
            fs::read_to_string(&path).map(|t| (path.clone(), t)).map_err(|cause| DataError::Io { path, cause })
        });
        let [train, valid, test] = texts;
        let (train, valid, test) = (train?, valid?, test?);
        let (store, vocab) = TripleStore::from_labels(&parse(&train)?, &parse(&valid)?, &parse(&test)?);
        Ok(Self { dir: dir.to_path_buf(), store, vocab })
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    /// Filter over all known triples, for ranking.
    pub fn filter(&self) -> FilterIndex {
        FilterIndex::new(self.num_entities(), self.store.known())
    }

    /// Hash of the entity and relation labels in id order.
    pub fn vocab_hash(&self) -> [u8; 32] {
        vocab_hash(&self.vocab)
    }
}

fn parse((path, text): &(PathBuf, String)) -> Result<Vec<[&str; 3]>, DataError> {
    parse_triples(text).map_err(|cause| DataError::Parse { path: path.clone(), cause })
}

pub fn split_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{}.txt", split.name()))
}

pub fn vocab_hash(vocab: &Vocab) -> [u8; 32] {
    let mut h = Sha256::new();
    for (tag, labels) in [(b'E', vocab.entities()), (b'R', vocab.relations())] {
        h.update([tag]);
        h.update((labels.len() as u64).to_le_bytes());
        for l in labels {
            h.update((l.len() as u64).to_le_bytes());
            h.update(l.as_bytes());
        }
    }
    h.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
