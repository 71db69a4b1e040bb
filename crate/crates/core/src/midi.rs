//! Standard MIDI File reading and writing, reduced to what a monophonic
//! tune needs: note spans on a tick grid and the rests between them.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Microseconds per quarter note written into generated files (120 BPM).
pub const DEFAULT_TEMPO_USPQ: u32 = 500_000;

const NOTE_VELOCITY: u8 = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MidiError {
    #[error("malformed MIDI file: {0}")]
    MalformedFile(String),
    #[error("unsupported MIDI file: {0}")]
    UnsupportedFormat(String),
    #[error("notes overlap at tick {tick}: pitch {first} still sounding when pitch {second} starts")]
    Polyphony { tick: u64, first: u8, second: u8 },
}

/// Pitch of an event: a MIDI note number or a rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "PitchRepr", try_from = "PitchRepr")]
pub enum Pitch {
    /// Sorts before every note, which puts it at index 0 of pitch tables.
    Silence,
    Midi(u8),
}

impl Pitch {
    pub fn midi(self) -> Option<u8> {
        match self {
            Pitch::Silence => None,
            Pitch::Midi(n) => Some(n),
        }
    }
}

impl fmt::Display for Pitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pitch::Silence => f.write_str("rest"),
            Pitch::Midi(n) => {
                const NAMES: [&str; 12] =
                    ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];
                write!(f, "{}{}", NAMES[*n as usize % 12], *n as i32 / 12 - 1)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PitchRepr {
    Note(u8),
    Rest(String),
}

impl From<Pitch> for PitchRepr {
    fn from(p: Pitch) -> Self {
        match p {
            Pitch::Silence => PitchRepr::Rest("rest".into()),
            Pitch::Midi(n) => PitchRepr::Note(n),
        }
    }
}

impl TryFrom<PitchRepr> for Pitch {
    type Error = String;

    fn try_from(r: PitchRepr) -> Result<Self, Self::Error> {
        match r {
            PitchRepr::Note(n) if n < 128 => Ok(Pitch::Midi(n)),
            PitchRepr::Note(n) => Err(format!("MIDI pitch {n} out of range")),
            PitchRepr::Rest(s) if s == "rest" => Ok(Pitch::Silence),
            PitchRepr::Rest(s) => Err(format!("unknown pitch {s:?}")),
        }
    }
}

/// A note or a rest with its length in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: Pitch,
    pub duration: u32,
}

impl NoteEvent {
    pub fn note(midi: u8, duration: u32) -> Self {
        NoteEvent { pitch: Pitch::Midi(midi), duration }
    }

    pub fn rest(duration: u32) -> Self {
        NoteEvent { pitch: Pitch::Silence, duration }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Note {
    pub pitch: u8,
    pub start: u64,
    pub duration: u64,
}

impl Note {
    pub fn end(&self) -> u64 {
        self.start + self.duration
    }
}

/// Notes of one track on an absolute tick grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiSequence {
    pub ppqn: u16,
    /// Sorted by start tick; every duration is positive.
    pub notes: Vec<Note>,
    /// Tick of the track's end-of-track event. A trailing rest lives between
    /// the last note-off and this tick.
    pub end_tick: u64,
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        if n > self.remaining() {
            return Err(MidiError::MalformedFile(format!(
                "need {n} bytes at offset {}, {} left",
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        Ok(self.take(1)?[0])
    }

    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    fn u16(&mut self) -> Result<u16, MidiError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Variable-length quantity, at most four bytes.
    fn vlq(&mut self) -> Result<u32, MidiError> {
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(MidiError::MalformedFile("variable-length quantity longer than 4 bytes".into()))
    }
}

fn write_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 5];
    let mut i = buf.len() - 1;
    buf[i] = (value & 0x7f) as u8;
    value >>= 7;
    while value > 0 {
        i -= 1;
        buf[i] = 0x80 | (value & 0x7f) as u8;
        value >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

struct TrackNotes {
    notes: Vec<Note>,
    end_tick: u64,
}

fn parse_track(data: &[u8]) -> Result<TrackNotes, MidiError> {
    let mut r = Reader::new(data);
    let mut tick = 0u64;
    let mut running: Option<u8> = None;
    // (channel, pitch) -> start tick of the sounding note
    let mut open: HashMap<(u8, u8), u64> = HashMap::new();
    let mut notes = Vec::new();

    let close = |notes: &mut Vec<Note>, pitch: u8, start: u64, end: u64| {
        if end > start {
            notes.push(Note { pitch, start, duration: end - start });
        }
    };

    while r.remaining() > 0 {
        tick += u64::from(r.vlq()?);
        let first = r.peek().ok_or_else(|| MidiError::MalformedFile("event missing after delta".into()))?;
        let status = if first & 0x80 != 0 {
            r.pos += 1;
            first
        } else {
            running.ok_or_else(|| {
                MidiError::MalformedFile(format!("data byte {first:#04x} without running status"))
            })?
        };

        match status {
            0xff => {
                running = None;
                let kind = r.u8()?;
                let len = r.vlq()? as usize;
                r.take(len)?;
                if kind == 0x2f {
                    break;
                }
            }
            0xf0 | 0xf7 => {
                running = None;
                let len = r.vlq()? as usize;
                r.take(len)?;
            }
            0x80..=0xef => {
                running = Some(status);
                let channel = status & 0x0f;
                match status & 0xf0 {
                    0x80 | 0x90 => {
                        let pitch = r.u8()? & 0x7f;
                        let velocity = r.u8()? & 0x7f;
                        let key = (channel, pitch);
                        if let Some(start) = open.remove(&key) {
                            close(&mut notes, pitch, start, tick);
                        }
                        if status & 0xf0 == 0x90 && velocity > 0 {
                            open.insert(key, tick);
                        }
                    }
                    0xc0 | 0xd0 => {
                        r.u8()?;
                    }
                    _ => {
                        r.take(2)?;
                    }
                }
            }
            other => {
                return Err(MidiError::MalformedFile(format!("unexpected status byte {other:#04x}")));
            }
        }
    }

    let mut dangling: Vec<_> = open.into_iter().collect();
    dangling.sort();
    for ((_, pitch), start) in dangling {
        close(&mut notes, pitch, start, tick);
    }
    notes.sort_by_key(|n| (n.start, n.pitch));
    Ok(TrackNotes { notes, end_tick: tick })
}

/// Parses an SMF (format 0 or 1) and returns the notes of the first track
/// that contains any.
pub fn parse_smf(bytes: &[u8]) -> Result<MidiSequence, MidiError> {
    let mut r = Reader::new(bytes);
    if r.take(4).map_err(|_| MidiError::MalformedFile("missing MThd".into()))? != b"MThd" {
        return Err(MidiError::MalformedFile("missing MThd".into()));
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(MidiError::MalformedFile(format!("header length {header_len} < 6")));
    }
    let header = r.take(header_len)?;
    let mut h = Reader::new(header);
    let format = h.u16()?;
    let _tracks = h.u16()?;
    let division = h.u16()?;
    match format {
        0 | 1 => {}
        2 => return Err(MidiError::UnsupportedFormat("SMF format 2".into())),
        f => return Err(MidiError::MalformedFile(format!("unknown SMF format {f}"))),
    }
    if division & 0x8000 != 0 {
        return Err(MidiError::UnsupportedFormat("SMPTE time division".into()));
    }
    if division == 0 {
        return Err(MidiError::MalformedFile("zero ticks per quarter note".into()));
    }

    let mut fallback_end = 0;
    while r.remaining() > 0 {
        let id = r.take(4)?;
        let len = r.u32()? as usize;
        let body = r.take(len)?;
        if id != b"MTrk" {
            continue;
        }
        let track = parse_track(body)?;
        if !track.notes.is_empty() {
            return Ok(MidiSequence { ppqn: division, notes: track.notes, end_tick: track.end_tick });
        }
        fallback_end = fallback_end.max(track.end_tick);
    }
    Ok(MidiSequence { ppqn: division, notes: Vec::new(), end_tick: fallback_end })
}

/// Turns a note list into a contiguous stream of notes and rests.
///
/// Gaps shorter than 1/32 of a quarter note are absorbed into the preceding
/// note. The stream spans the first note-on to the later of the last note-off
/// and the end-of-track tick.
pub fn extract_monophonic(seq: &MidiSequence) -> Result<Vec<NoteEvent>, MidiError> {
    let jitter = |gap: u64| gap * 32 < u64::from(seq.ppqn);
    let mut events: Vec<NoteEvent> = Vec::with_capacity(seq.notes.len() * 2);
    let mut prev: Option<Note> = None;

    for note in &seq.notes {
        if let Some(p) = prev {
            if note.start < p.end() {
                return Err(MidiError::Polyphony { tick: note.start, first: p.pitch, second: note.pitch });
            }
            let gap = note.start - p.end();
            if gap > 0 {
                push_gap(&mut events, gap, jitter(gap));
            }
        }
        events.push(NoteEvent::note(note.pitch, tick_u32(note.duration)));
        prev = Some(*note);
    }

    if let Some(p) = prev {
        if seq.end_tick > p.end() {
            let gap = seq.end_tick - p.end();
            push_gap(&mut events, gap, jitter(gap));
        }
    }
    Ok(events)
}

fn push_gap(events: &mut Vec<NoteEvent>, gap: u64, absorb: bool) {
    match events.last_mut() {
        Some(last) if absorb => last.duration = tick_u32(u64::from(last.duration) + gap),
        _ => events.push(NoteEvent::rest(tick_u32(gap))),
    }
}

fn tick_u32(t: u64) -> u32 {
    u32::try_from(t).unwrap_or(u32::MAX)
}

/// Writes a format-0 SMF with a 120 BPM tempo event. Rests become time
/// gaps; a trailing rest delays the end-of-track event.
pub fn write_smf(events: &[NoteEvent], ppqn: u16) -> Vec<u8> {
    assert!(ppqn > 0 && ppqn < 0x8000, "ppqn must be in 1..=32767");
    let mut track = Vec::new();
    write_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x51, 0x03]);
    track.extend_from_slice(&DEFAULT_TEMPO_USPQ.to_be_bytes()[1..]);

    let mut pending = 0u32;
    for ev in events {
        match ev.pitch {
            Pitch::Silence => pending += ev.duration,
            Pitch::Midi(n) => {
                write_vlq(&mut track, pending);
                track.extend_from_slice(&[0x90, n & 0x7f, NOTE_VELOCITY]);
                write_vlq(&mut track, ev.duration);
                track.extend_from_slice(&[0x80, n & 0x7f, 0x40]);
                pending = 0;
            }
        }
    }
    write_vlq(&mut track, pending);
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&ppqn.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chunk(id: &[u8], body: &[u8]) -> Vec<u8> {
        let mut v = id.to_vec();
        v.extend_from_slice(&(body.len() as u32).to_be_bytes());
        v.extend_from_slice(body);
        v
    }

    fn header(format: u16, tracks: u16, ppqn: u16) -> Vec<u8> {
        let mut body = Vec::new();
        body.extend_from_slice(&format.to_be_bytes());
        body.extend_from_slice(&tracks.to_be_bytes());
        body.extend_from_slice(&ppqn.to_be_bytes());
        chunk(b"MThd", &body)
    }

    #[test]
    fn hand_built_single_note() {
        // 960 = 0x3c0 -> VLQ 0x87 0x40
        let track = [0x00, 0x90, 60, 0x64, 0x87, 0x40, 0x80, 60, 0x40, 0x00, 0xff, 0x2f, 0x00];
        let mut file = header(0, 1, 960);
        file.extend(chunk(b"MTrk", &track));
        let seq = parse_smf(&file).unwrap();
        assert_eq!(seq.ppqn, 960);
        assert_eq!(seq.notes, vec![Note { pitch: 60, start: 0, duration: 960 }]);

        let written = write_smf(&[NoteEvent::note(60, 960)], 960);
        assert_eq!(parse_smf(&written).unwrap().notes, seq.notes);
    }

    #[test]
    fn header_only_file_has_no_notes() {
        let mut file = header(0, 1, 480);
        file.extend(chunk(b"MTrk", &[0x00, 0xff, 0x2f, 0x00]));
        let seq = parse_smf(&file).unwrap();
        assert!(seq.notes.is_empty());
        assert!(extract_monophonic(&seq).unwrap().is_empty());

        let seq = parse_smf(&header(1, 0, 96)).unwrap();
        assert!(seq.notes.is_empty());
    }

    #[test]
    fn running_status_and_velocity_zero_note_off() {
        // note-on 62, then running-status note-on vel 0 as off, then 64 likewise
        let track = [
            0x00, 0x90, 62, 80, 0x60, 62, 0, 0x00, 64, 80, 0x60, 64, 0, 0x00, 0xff, 0x2f, 0x00,
        ];
        let mut file = header(0, 1, 96);
        file.extend(chunk(b"MTrk", &track));
        let seq = parse_smf(&file).unwrap();
        assert_eq!(
            seq.notes,
            vec![
                Note { pitch: 62, start: 0, duration: 96 },
                Note { pitch: 64, start: 96, duration: 96 },
            ]
        );
    }

    #[test]
    fn first_note_bearing_track_is_used() {
        let tempo = [0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20, 0x00, 0xff, 0x2f, 0x00];
        let a = [0x00, 0x90, 70, 90, 0x30, 0x80, 70, 0, 0x00, 0xff, 0x2f, 0x00];
        let b = [0x00, 0x90, 40, 90, 0x30, 0x80, 40, 0, 0x00, 0xff, 0x2f, 0x00];
        let mut file = header(1, 3, 48);
        file.extend(chunk(b"MTrk", &tempo));
        file.extend(chunk(b"XFIH", &[1, 2, 3]));
        file.extend(chunk(b"MTrk", &a));
        file.extend(chunk(b"MTrk", &b));
        let seq = parse_smf(&file).unwrap();
        assert_eq!(seq.notes, vec![Note { pitch: 70, start: 0, duration: 48 }]);
    }

    #[test]
    fn rejects_format_2_and_bad_chunks() {
        assert!(matches!(parse_smf(&header(2, 1, 96)), Err(MidiError::UnsupportedFormat(_))));
        assert!(matches!(parse_smf(b"RIFF...."), Err(MidiError::MalformedFile(_))));
        let mut file = header(0, 1, 96);
        file.extend_from_slice(b"MTrk");
        file.extend_from_slice(&100u32.to_be_bytes());
        file.extend_from_slice(&[0x00, 0xff]);
        assert!(matches!(parse_smf(&file), Err(MidiError::MalformedFile(_))));
    }

    #[test]
    fn contiguous_notes_have_no_rests() {
        let seq = MidiSequence {
            ppqn: 960,
            notes: vec![
                Note { pitch: 70, start: 0, duration: 480 },
                Note { pitch: 67, start: 480, duration: 480 },
            ],
            end_tick: 960,
        };
        assert_eq!(
            extract_monophonic(&seq).unwrap(),
            vec![NoteEvent::note(70, 480), NoteEvent::note(67, 480)]
        );
    }

    #[test]
    fn gaps_become_rests() {
        let seq = MidiSequence {
            ppqn: 960,
            notes: vec![
                Note { pitch: 58, start: 0, duration: 960 },
                Note { pitch: 60, start: 2880, duration: 960 },
            ],
            end_tick: 3840,
        };
        assert_eq!(
            extract_monophonic(&seq).unwrap(),
            vec![NoteEvent::note(58, 960), NoteEvent::rest(1920), NoteEvent::note(60, 960)]
        );
    }

    #[test]
    fn jitter_gap_is_absorbed() {
        // 29 ticks < 960/32 = 30
        let seq = MidiSequence {
            ppqn: 960,
            notes: vec![
                Note { pitch: 60, start: 0, duration: 931 },
                Note { pitch: 62, start: 960, duration: 960 },
            ],
            end_tick: 1930,
        };
        assert_eq!(
            extract_monophonic(&seq).unwrap(),
            vec![NoteEvent::note(60, 960), NoteEvent::note(62, 970)]
        );
    }

    #[test]
    fn overlap_is_polyphony() {
        let seq = MidiSequence {
            ppqn: 960,
            notes: vec![
                Note { pitch: 60, start: 0, duration: 960 },
                Note { pitch: 62, start: 480, duration: 960 },
            ],
            end_tick: 1440,
        };
        assert_eq!(
            extract_monophonic(&seq),
            Err(MidiError::Polyphony { tick: 480, first: 60, second: 62 })
        );
    }

    #[test]
    fn empty_write_is_header_and_end_of_track() {
        let bytes = write_smf(&[], 960);
        let seq = parse_smf(&bytes).unwrap();
        assert!(seq.notes.is_empty());
        assert_eq!(seq.end_tick, 0);
    }

    #[test]
    fn vlq_boundaries() {
        for v in [0u32, 0x7f, 0x80, 0x3fff, 0x4000, 0x1f_ffff, 0x20_0000, 0x0fff_ffff] {
            let mut buf = Vec::new();
            write_vlq(&mut buf, v);
            assert_eq!(Reader::new(&buf).vlq().unwrap(), v);
        }
    }

    fn event_lists() -> impl Strategy<Value = Vec<NoteEvent>> {
        // A rest never starts the list, never follows another rest, and is
        // long enough not to count as jitter at ppqn 480.
        prop::collection::vec((0u8..128, 15u32..5000, prop::bool::ANY, 15u32..5000), 0..40).prop_map(
            |items| {
                let mut out = Vec::new();
                for (pitch, dur, rest_after, rest_dur) in items {
                    out.push(NoteEvent::note(pitch, dur));
                    if rest_after {
                        out.push(NoteEvent::rest(rest_dur));
                    }
                }
                out
            },
        )
    }

    proptest! {
        #[test]
        fn write_parse_extract_round_trip(events in event_lists()) {
            let bytes = write_smf(&events, 480);
            let seq = parse_smf(&bytes).unwrap();
            prop_assert_eq!(extract_monophonic(&seq).unwrap(), events);
        }

        #[test]
        fn tick_conservation(events in event_lists()) {
            let seq = parse_smf(&write_smf(&events, 480)).unwrap();
            let extracted = extract_monophonic(&seq).unwrap();
            let total: u64 = extracted.iter().map(|e| u64::from(e.duration)).sum();
            let span = seq.notes.first().map_or(0, |n| seq.end_tick - n.start);
            prop_assert_eq!(total, span);
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
            let _ = parse_smf(&bytes);
            let mut file = b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x01\xe0MTrk".to_vec();
            file.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            file.extend_from_slice(&bytes);
            if let Ok(seq) = parse_smf(&file) {
                prop_assert!(seq.notes.iter().all(|n| n.duration > 0));
                let _ = extract_monophonic(&seq);
            }
        }
    }
}
