use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::model::EventSequence;
use crate::rng;

use super::Corpus;

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be in [0, 1], got {p}")))
    }
}

/// Sequence-level split. `round(ratio * n)` sequences go to the first part;
/// both parts keep the corpus order.
pub fn split_train_test(corpus: &Corpus, ratio: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    check_probability(ratio, "split ratio")?;
    let n = corpus.len();
    let n_train = (ratio * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut train_idx = order[..n_train].to_vec();
    let mut test_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus.sequences()[i].clone()).collect();
    Ok((corpus.with_sequences(pick(&train_idx)), corpus.with_sequences(pick(&test_idx))))
}

/// Keep each sequence independently with probability `fraction`.
pub fn subsample(corpus: &Corpus, fraction: f64, seed: u64) -> Result<Corpus> {
    check_probability(fraction, "fraction")?;
    let mut rng = rng::seeded(seed);
    let kept = corpus
        .sequences()
        .iter()
        .filter(|_| rng.random::<f64>() < fraction)
        .cloned()
        .collect();
    Ok(corpus.with_sequences(kept))
}

/// Append `b` after `a`, shifting `b` so its window starts `gap` after `a` ends.
pub fn stitch(a: &EventSequence, b: &EventSequence, gap: f64) -> Result<EventSequence> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "cannot stitch sequences of dim {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(Error::InvalidInput(format!("gap must be >= 0, got {gap}")));
    }
    let shift = a.t_end() - b.t_start() + gap;
    let mut events = a.events().to_vec();
    events.extend(b.events().iter().map(|e| crate::model::Event::new(e.time + shift, e.mark)));
    // same rounding as the events, so the last shifted event stays inside
    let t_end = b.t_end() + shift;
    EventSequence::new(a.id(), a.dim(), a.t_start(), t_end.max(a.t_end()), events)
}

/// Keep each event independently with probability `keep_prob`.
pub fn thin_events(seq: &EventSequence, keep_prob: f64, seed: u64) -> Result<EventSequence> {
    check_probability(keep_prob, "keep probability")?;
    let mut rng = rng::seeded(seed);
    let events = seq
        .events()
        .iter()
        .filter(|_| rng.random::<f64>() < keep_prob)
        .copied()
        .collect();
    EventSequence::new(seq.id(), seq.dim(), seq.t_start(), seq.t_end(), events)
}
