use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Event, EventSequence};

use super::Corpus;

/// Column names of an event CSV, plus an optional window override.
#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub seq_id: String,
    pub time: String,
    pub mark: String,
    /// Used only when present in the header.
    pub t_start: String,
    pub t_end: String,
    /// Replaces every sequence's observation window.
    pub window: Option<(f64, f64)>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            seq_id: "seq_id".into(),
            time: "time".into(),
            mark: "mark".into(),
            t_start: "t_start".into(),
            t_end: "t_end".into(),
            window: None,
        }
    }
}

struct Pending {
    id: String,
    events: Vec<(f64, String)>,
    t_start: Option<f64>,
    t_end: Option<f64>,
}

fn parse_time(raw: &str, line: u64, column: &str) -> Result<f64> {
    let t: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("column `{column}`: `{raw}` is not a number"),
    })?;
    if !t.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("column `{column}`: `{raw}` is not finite"),
        });
    }
    Ok(t)
}

fn set_once(slot: &mut Option<f64>, value: f64, id: &str, column: &str, line: u64) -> Result<()> {
    match slot {
        Some(prev) if *prev != value => Err(Error::Validation(format!(
            "line {line}: sequence `{id}` has conflicting `{column}` values {prev} and {value}"
        ))),
        _ => {
            *slot = Some(value);
            Ok(())
        }
    }
}

/// Read an event CSV into a corpus.
///
/// Sequences appear in order of first appearance. Marks that all parse as
/// nonnegative integers are used as indices directly; otherwise every
/// distinct mark string becomes a label, numbered by first appearance
/// (sequences in file order, events in time order).
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Format(format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| column(name).ok_or_else(|| Error::Schema(name.to_string()));
    let id_col = require(&schema.seq_id)?;
    let time_col = require(&schema.time)?;
    let mark_col = require(&schema.mark)?;
    let start_col = column(&schema.t_start);
    let end_col = column(&schema.t_end);

    let mut order: Vec<Pending> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                msg: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record[id_col].to_string();
        let time = parse_time(&record[time_col], line, &schema.time)?;
        if time < 0.0 {
            return Err(Error::Validation(format!("line {line}: negative time {time}")));
        }
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            order.push(Pending {
                id: id.clone(),
                events: Vec::new(),
                t_start: None,
                t_end: None,
            });
            order.len() - 1
        });
        let pending = &mut order[slot];
        pending.events.push((time, record[mark_col].to_string()));
        if let Some(c) = start_col {
            if !record[c].is_empty() {
                let v = parse_time(&record[c], line, &schema.t_start)?;
                set_once(&mut pending.t_start, v, &id, &schema.t_start, line)?;
            }
        }
        if let Some(c) = end_col {
            if !record[c].is_empty() {
                let v = parse_time(&record[c], line, &schema.t_end)?;
                set_once(&mut pending.t_end, v, &id, &schema.t_end, line)?;
            }
        }
    }

    if order.is_empty() {
        log::warn!("{}: no events, returning an empty corpus", path.display());
        return Corpus::new(0, None, Vec::new());
    }

    let integer_marks = order
        .iter()
        .flat_map(|p| p.events.iter())
        .all(|(_, m)| m.parse::<usize>().is_ok());
    let mut labels: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, usize> = HashMap::new();
    let mut dim = 0;
    let mut resolved: Vec<(Pending, Vec<Event>)> = Vec::with_capacity(order.len());
    for mut p in order {
        // labels follow first appearance in time order, so row order within a
        // sequence never changes the result
        p.events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let events = p
            .events
            .iter()
            .map(|(t, m)| {
                let mark = if integer_marks {
                    m.parse::<usize>().expect("checked above")
                } else {
                    *label_index.entry(m.clone()).or_insert_with(|| {
                        labels.push(m.clone());
                        labels.len() - 1
                    })
                };
                dim = dim.max(mark + 1);
                Event::new(*t, mark)
            })
            .collect();
        resolved.push((p, events));
    }

    let sequences = resolved
        .into_iter()
        .map(|(p, events)| {
            let last = events.iter().map(|e| e.time).fold(0.0, f64::max);
            let (t_start, t_end) = schema
                .window
                .unwrap_or((p.t_start.unwrap_or(0.0), p.t_end.unwrap_or(last)));
            EventSequence::from_unsorted(p.id, dim, t_start, t_end, events)
        })
        .collect::<Result<Vec<_>>>()?;
    let label_map = if integer_marks { None } else { Some(labels) };
    Corpus::new(dim, label_map, sequences)
}
