//! Glue between the stages: learning a model from MIDI tunes and turning
//! generated codes back into events and files.

use thiserror::Error;

use crate::codec::{Code, CodecError, Encoding};
use crate::midi::{self, MidiError, MidiSequence, NoteEvent};
use crate::rules::{Model, RuleError, RuleFamily, FORMAT_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error(transparent)]
    Midi(#[from] MidiError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error("no tunes to learn from")]
    NoInput,
}

/// Rescales tick lengths from one resolution to another.
pub fn rescale(events: &[NoteEvent], from_ppqn: u16, to_ppqn: u16) -> Vec<NoteEvent> {
    if from_ppqn == to_ppqn {
        return events.to_vec();
    }
    events
        .iter()
        .map(|e| NoteEvent {
            pitch: e.pitch,
            duration: ((u64::from(e.duration) * u64::from(to_ppqn) + u64::from(from_ppqn) / 2)
                / u64::from(from_ppqn))
            .max(1) as u32,
        })
        .collect()
}

/// Learns rules of orders `1..=order` from monophonic tunes that share one
/// tick resolution.
pub fn learn_events(tunes: &[Vec<NoteEvent>], ppqn: u16, order: usize) -> Result<Model, LearnError> {
    if tunes.iter().all(|t| t.is_empty()) {
        return Err(LearnError::NoInput);
    }
    let encoding = Encoding::from_tunes(tunes.iter().map(|t| t.as_slice()))?;
    let seqs: Vec<Vec<Code>> = tunes
        .iter()
        .map(|t| encoding.compress_events(t))
        .collect::<Result<_, _>>()?;
    let rules = RuleFamily::extract(&seqs, order)?;
    let openings = seqs.iter().filter_map(|s| s.first().copied()).collect();
    Ok(Model { format_version: FORMAT_VERSION, ppqn, encoding, openings, rules })
}

/// Learns from parsed MIDI files; later files are rescaled to the first
/// file's resolution.
pub fn learn(sequences: &[MidiSequence], order: usize) -> Result<Model, LearnError> {
    let first = sequences.first().ok_or(LearnError::NoInput)?;
    let ppqn = first.ppqn;
    let tunes = sequences
        .iter()
        .map(|s| Ok(rescale(&midi::extract_monophonic(s)?, s.ppqn, ppqn)))
        .collect::<Result<Vec<_>, MidiError>>()?;
    learn_events(&tunes, ppqn, order)
}

pub fn decode_tune(model: &Model, codes: &[Code]) -> Result<Vec<NoteEvent>, CodecError> {
    model.encoding.decode_codes(codes)
}

pub fn tune_to_midi(model: &Model, codes: &[Code]) -> Result<Vec<u8>, CodecError> {
    Ok(midi::write_smf(&decode_tune(model, codes)?, model.ppqn))
}
