//! Event corpora: CSV ingestion, JSON persistence and preprocessing.

mod csv_import;
mod preprocess;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{Event, EventSequence, HawkesModel};

pub use csv_import::{load_csv, CsvSchema};
pub use preprocess::{split_train_test, stitch, subsample, thin_events};

/// A collection of sequences sharing one mark dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    dim: usize,
    label_map: Option<Vec<String>>,
    sequences: Vec<EventSequence>,
}

impl Corpus {
    pub fn new(dim: usize, label_map: Option<Vec<String>>, sequences: Vec<EventSequence>) -> Result<Self> {
        if let Some(labels) = &label_map {
            if labels.len() != dim {
                return Err(Error::Validation(format!(
                    "label map has {} entries but dim is {dim}",
                    labels.len()
                )));
            }
        }
        let mut seen = HashSet::new();
        for s in &sequences {
            if s.dim() != dim {
                return Err(Error::Validation(format!(
                    "sequence `{}` has dim {} but corpus dim is {dim}",
                    s.id(),
                    s.dim()
                )));
            }
            if !seen.insert(s.id()) {
                return Err(Error::Validation(format!("duplicate sequence id `{}`", s.id())));
            }
        }
        Ok(Corpus {
            dim,
            label_map,
            sequences,
        })
    }

    pub fn from_sequences(dim: usize, sequences: Vec<EventSequence>) -> Result<Self> {
        Self::new(dim, None, sequences)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label_map(&self) -> Option<&[String]> {
        self.label_map.as_deref()
    }

    pub fn sequences(&self) -> &[EventSequence] {
        &self.sequences
    }

    pub fn into_sequences(self) -> Vec<EventSequence> {
        self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.sequences.iter().map(EventSequence::len).sum()
    }

    /// Same dim and labels, different sequences.
    pub(crate) fn with_sequences(&self, sequences: Vec<EventSequence>) -> Corpus {
        Corpus {
            dim: self.dim,
            label_map: self.label_map.clone(),
            sequences,
        }
    }

    pub fn check_model(&self, model: &HawkesModel) -> Result<()> {
        if model.dim() != self.dim {
            return Err(Error::InvalidInput(format!(
                "model has dim {} but corpus has dim {}",
                model.dim(),
                self.dim
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SequenceFile {
    id: String,
    t_start: f64,
    t_end: f64,
    events: Vec<(f64, usize)>,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    dim: usize,
    label_map: Option<BTreeMap<String, usize>>,
    sequences: Vec<SequenceFile>,
}

impl Serialize for Corpus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let file = CorpusFile {
            dim: self.dim,
            label_map: self
                .label_map
                .as_ref()
                .map(|l| l.iter().enumerate().map(|(i, name)| (name.clone(), i)).collect()),
            sequences: self
                .sequences
                .iter()
                .map(|q| SequenceFile {
                    id: q.id().to_string(),
                    t_start: q.t_start(),
                    t_end: q.t_end(),
                    events: q.events().iter().map(|e| (e.time, e.mark)).collect(),
                })
                .collect(),
        };
        file.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Corpus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = CorpusFile::deserialize(d)?;
        corpus_from_file(file).map_err(D::Error::custom)
    }
}

fn corpus_from_file(file: CorpusFile) -> Result<Corpus> {
    let label_map = match file.label_map {
        None => None,
        Some(map) => {
            let mut labels = vec![None; file.dim];
            for (name, idx) in map {
                match labels.get_mut(idx) {
                    Some(slot @ None) => *slot = Some(name),
                    _ => return Err(Error::Format(format!("bad label index {idx} for `{name}`"))),
                }
            }
            Some(
                labels
                    .into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::Format("label map does not cover every mark".into()))?,
            )
        }
    };
    let sequences = file
        .sequences
        .into_iter()
        .map(|s| {
            let events = s.events.into_iter().map(|(t, m)| Event::new(t, m)).collect();
            EventSequence::new(s.id, file.dim, s.t_start, s.t_end, events)
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(file.dim, label_map, sequences)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    io::write_json(path, corpus)
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    io::read_json(path)
}

pub fn save_model(model: &HawkesModel, path: &Path) -> Result<()> {
    io::write_json(path, model)
}

pub fn load_model(path: &Path) -> Result<HawkesModel> {
    io::read_json(path)
}
