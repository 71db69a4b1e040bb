//! Event encoding: pitch and duration tables, 9-bit raw codes, and the
//! lexicon that relabels raw codes with the shortest fixed-width codes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi::{NoteEvent, Pitch};

pub const PITCH_BITS: u32 = 5;
pub const DURATION_BITS: u32 = 4;
pub const MAX_PITCHES: usize = 1 << PITCH_BITS;
pub const MAX_DURATIONS: usize = 1 << DURATION_BITS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("{what}: {found} distinct values exceed the limit of {limit}")]
    Capacity { what: &'static str, found: usize, limit: usize },
    #[error("event {0:?} is not in the pitch/duration tables")]
    UnknownSymbol(NoteEvent),
    #[error("code {code} is outside the lexicon of {size} events")]
    UnknownCode { code: usize, size: usize },
    #[error("raw code {0} is not in the lexicon")]
    NotInLexicon(RawCode),
    #[error("cannot build tables from an empty event list")]
    Empty,
    #[error("invalid raw code {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PitchTable {
    entries: Vec<Pitch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurationTable {
    entries: Vec<u32>,
}

impl PitchTable {
    /// Rest first (when present), then ascending MIDI numbers.
    pub fn new(pitches: impl IntoIterator<Item = Pitch>) -> Result<Self, CodecError> {
        let set: BTreeSet<Pitch> = pitches.into_iter().collect();
        if set.len() > MAX_PITCHES {
            return Err(CodecError::Capacity { what: "pitches", found: set.len(), limit: MAX_PITCHES });
        }
        Ok(PitchTable { entries: set.into_iter().collect() })
    }

    pub fn entries(&self) -> &[Pitch] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, p: Pitch) -> Option<usize> {
        self.entries.binary_search(&p).ok()
    }
}

impl DurationTable {
    pub fn new(durations: impl IntoIterator<Item = u32>) -> Result<Self, CodecError> {
        let set: BTreeSet<u32> = durations.into_iter().collect();
        if set.len() > MAX_DURATIONS {
            return Err(CodecError::Capacity {
                what: "durations",
                found: set.len(),
                limit: MAX_DURATIONS,
            });
        }
        Ok(DurationTable { entries: set.into_iter().collect() })
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, ticks: u32) -> Option<usize> {
        self.entries.binary_search(&ticks).ok()
    }
}

/// Pitch and duration tables taken together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tables {
    pub pitches: PitchTable,
    pub durations: DurationTable,
}

impl Tables {
    pub fn build(events: &[NoteEvent]) -> Result<Self, CodecError> {
        if events.is_empty() {
            return Err(CodecError::Empty);
        }
        Ok(Tables {
            pitches: PitchTable::new(events.iter().map(|e| e.pitch))?,
            durations: DurationTable::new(events.iter().map(|e| e.duration))?,
        })
    }

    pub fn encode_event(&self, ev: NoteEvent) -> Result<RawCode, CodecError> {
        let p = self.pitches.index_of(ev.pitch).ok_or(CodecError::UnknownSymbol(ev))?;
        let d = self.durations.index_of(ev.duration).ok_or(CodecError::UnknownSymbol(ev))?;
        Ok(RawCode::from_parts(p as u8, d as u8))
    }

    pub fn encode(&self, events: &[NoteEvent]) -> Result<Vec<RawCode>, CodecError> {
        events.iter().map(|&e| self.encode_event(e)).collect()
    }

    pub fn decode(&self, raw: RawCode) -> Result<NoteEvent, CodecError> {
        let pitch = self.pitches.entries.get(raw.pitch_code() as usize);
        let duration = self.durations.entries.get(raw.duration_code() as usize);
        match (pitch, duration) {
            (Some(&pitch), Some(&duration)) => Ok(NoteEvent { pitch, duration }),
            _ => Err(CodecError::NotInLexicon(raw)),
        }
    }
}

/// Nine-bit event code: pitch index in the high five bits, duration index in
/// the low four.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct RawCode(u16);

impl RawCode {
    pub const BITS: u32 = PITCH_BITS + DURATION_BITS;

    pub fn from_parts(pitch_code: u8, duration_code: u8) -> Self {
        debug_assert!((pitch_code as usize) < MAX_PITCHES && (duration_code as usize) < MAX_DURATIONS);
        RawCode((u16::from(pitch_code) << DURATION_BITS) | u16::from(duration_code))
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn pitch_code(self) -> u8 {
        (self.0 >> DURATION_BITS) as u8
    }

    pub fn duration_code(self) -> u8 {
        (self.0 & 0x0f) as u8
    }
}

impl fmt::Display for RawCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:09b}", self.0)
    }
}

impl FromStr for RawCode {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != Self::BITS as usize {
            return Err(CodecError::Parse(s.into()));
        }
        u16::from_str_radix(s, 2).map(RawCode).map_err(|_| CodecError::Parse(s.into()))
    }
}

impl From<RawCode> for String {
    fn from(c: RawCode) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for RawCode {
    type Error = CodecError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Index of an event in the lexicon; also the measured basis state that
/// stands for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Code(pub u16);

impl Code {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Binary string of the given width, most significant qubit first.
    pub fn bits(self, width: u32) -> String {
        format!("{:0width$b}", self.0, width = width as usize)
    }
}

/// Unique raw codes in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RawCode>", into = "Vec<RawCode>")]
pub struct Lexicon {
    raw: Vec<RawCode>,
    index: HashMap<RawCode, u16>,
}

impl Lexicon {
    pub fn build(raw: &[RawCode]) -> Self {
        let mut lex = Lexicon { raw: Vec::new(), index: HashMap::new() };
        for &r in raw {
            lex.insert(r);
        }
        lex
    }

    fn insert(&mut self, r: RawCode) -> Code {
        let next = self.raw.len() as u16;
        let idx = *self.index.entry(r).or_insert_with(|| next);
        if idx == next {
            self.raw.push(r);
        }
        Code(idx)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw_codes(&self) -> &[RawCode] {
        &self.raw
    }

    /// Register width: `ceil(log2(max(len, 2)))`.
    pub fn qubits(&self) -> u32 {
        qubits_for(self.raw.len())
    }

    pub fn compress(&self, raw: RawCode) -> Result<Code, CodecError> {
        self.index.get(&raw).map(|&i| Code(i)).ok_or(CodecError::NotInLexicon(raw))
    }

    pub fn compress_all(&self, raw: &[RawCode]) -> Result<Vec<Code>, CodecError> {
        raw.iter().map(|&r| self.compress(r)).collect()
    }

    pub fn decompress(&self, code: Code) -> Result<RawCode, CodecError> {
        self.raw
            .get(code.index())
            .copied()
            .ok_or(CodecError::UnknownCode { code: code.index(), size: self.raw.len() })
    }

    pub fn contains(&self, code: Code) -> bool {
        code.index() < self.raw.len()
    }
}

pub fn qubits_for(size: usize) -> u32 {
    let n = size.max(2);
    usize::BITS - (n - 1).leading_zeros()
}

impl From<Lexicon> for Vec<RawCode> {
    fn from(l: Lexicon) -> Self {
        l.raw
    }
}

impl TryFrom<Vec<RawCode>> for Lexicon {
    type Error = String;

    fn try_from(raw: Vec<RawCode>) -> Result<Self, Self::Error> {
        let lex = Lexicon::build(&raw);
        if lex.len() != raw.len() {
            return Err("lexicon contains duplicate codes".into());
        }
        Ok(lex)
    }
}

/// Tables plus lexicon: everything needed to move between note events and
/// compressed codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub tables: Tables,
    pub lexicon: Lexicon,
}

impl Encoding {
    /// One table/lexicon pass over every tune; the lexicon follows the order
    /// of first appearance across the tunes in sequence.
    pub fn from_tunes<'a>(tunes: impl IntoIterator<Item = &'a [NoteEvent]>) -> Result<Self, CodecError> {
        let all: Vec<NoteEvent> = tunes.into_iter().flatten().copied().collect();
        let tables = Tables::build(&all)?;
        let raw = tables.encode(&all)?;
        Ok(Encoding { lexicon: Lexicon::build(&raw), tables })
    }

    pub fn compress_events(&self, events: &[NoteEvent]) -> Result<Vec<Code>, CodecError> {
        let raw = self.tables.encode(events)?;
        self.lexicon.compress_all(&raw)
    }

    pub fn decode_code(&self, code: Code) -> Result<NoteEvent, CodecError> {
        self.tables.decode(self.lexicon.decompress(code)?)
    }

    pub fn decode_codes(&self, codes: &[Code]) -> Result<Vec<NoteEvent>, CodecError> {
        codes.iter().map(|&c| self.decode_code(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(s: &str) -> RawCode {
        s.parse().unwrap()
    }

    #[test]
    fn qubit_width() {
        assert_eq!(qubits_for(1), 1);
        assert_eq!(qubits_for(2), 1);
        assert_eq!(qubits_for(3), 2);
        assert_eq!(qubits_for(8), 3);
        assert_eq!(qubits_for(9), 4);
        assert_eq!(qubits_for(512), 9);
    }

    #[test]
    fn single_event_tables() {
        let t = Tables::build(&[NoteEvent::note(60, 960)]).unwrap();
        assert_eq!(t.pitches.len(), 1);
        assert_eq!(t.durations.len(), 1);
        assert_eq!(Tables::build(&[]), Err(CodecError::Empty));
    }

    #[test]
    fn identical_sequence_has_one_qubit() {
        let lex = Lexicon::build(&[raw("000100001"); 5]);
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.qubits(), 1);
    }

    #[test]
    fn nine_distinct_codes_need_four_qubits() {
        let codes: Vec<_> = (0..9).map(|d| RawCode::from_parts(1, d)).collect();
        assert_eq!(Lexicon::build(&codes).qubits(), 4);
    }

    #[test]
    fn capacity_limits() {
        let many_pitches: Vec<_> = (40..73).map(|p| NoteEvent::note(p, 480)).collect();
        assert_eq!(
            Tables::build(&many_pitches),
            Err(CodecError::Capacity { what: "pitches", found: 33, limit: 32 })
        );
        let mut with_rest: Vec<_> = (40..71).map(|p| NoteEvent::note(p, 480)).collect();
        with_rest.push(NoteEvent::rest(480));
        assert_eq!(Tables::build(&with_rest).unwrap().pitches.len(), 32);

        let many_durations: Vec<_> = (1..=17).map(|d| NoteEvent::note(60, d * 10)).collect();
        assert!(matches!(Tables::build(&many_durations), Err(CodecError::Capacity { what: "durations", .. })));
    }

    #[test]
    fn unknown_symbol_and_code() {
        let t = Tables::build(&[NoteEvent::note(60, 960)]).unwrap();
        assert_eq!(t.encode(&[]).unwrap(), vec![]);
        assert_eq!(
            t.encode_event(NoteEvent::note(61, 960)),
            Err(CodecError::UnknownSymbol(NoteEvent::note(61, 960)))
        );
        let lex = Lexicon::build(&[raw("000000000")]);
        assert_eq!(lex.decompress(Code(1)), Err(CodecError::UnknownCode { code: 1, size: 1 }));
    }

    #[test]
    fn raw_code_text_form() {
        let c = RawCode::from_parts(0b00110, 0b0000);
        assert_eq!(c.to_string(), "001100000");
        assert_eq!(raw("000000010").pitch_code(), 0);
        assert_eq!(raw("000000010").duration_code(), 2);
        assert!("00110000".parse::<RawCode>().is_err());
        assert!("00110000x".parse::<RawCode>().is_err());
    }

    fn event() -> impl Strategy<Value = NoteEvent> {
        (prop::option::of(40u8..50), prop::sample::select(vec![120u32, 240, 480, 960, 1440]))
            .prop_map(|(p, d)| match p {
                Some(p) => NoteEvent::note(p, d),
                None => NoteEvent::rest(d),
            })
    }

    proptest! {
        #[test]
        fn encode_compress_round_trip(events in prop::collection::vec(event(), 1..60)) {
            let enc = Encoding::from_tunes([events.as_slice()]).unwrap();
            let codes = enc.compress_events(&events).unwrap();
            prop_assert_eq!(enc.decode_codes(&codes).unwrap(), events.clone());
            let lex = &enc.lexicon;
            prop_assert!(lex.len() <= events.len());
            prop_assert!(1usize << lex.qubits() >= lex.len());
            for i in 0..lex.len() {
                let c = Code(i as u16);
                prop_assert_eq!(lex.compress(lex.decompress(c).unwrap()).unwrap(), c);
            }
            prop_assert_eq!(Encoding::from_tunes([events.as_slice()]).unwrap(), enc);
        }
    }
}
