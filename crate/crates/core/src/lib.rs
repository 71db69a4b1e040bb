//! Learn transition rules from monophonic tunes, sample new tunes by
//! preparing and measuring simulated quantum states, and sing the result
//! with a formant synthesizer.
//!
//! The stages in order: [`midi`] reads tunes, [`codec`] turns events into
//! compact codes, [`rules`] counts transitions, [`stateprep`] and [`sim`]
//! turn a rule into a circuit and measure it, [`generate`] runs the loop,
//! and [`voice`] renders the tune as audio.

pub mod circuit;
pub mod codec;
pub mod generate;
pub mod midi;
pub mod pipeline;
pub mod rules;
pub mod sim;
pub mod stateprep;
pub mod voice;

pub use codec::{Code, Encoding, Lexicon, RawCode, Tables};
pub use generate::{generate, GenConfig, GenError, Generated, GenerationStats, Start};
pub use midi::{NoteEvent, Pitch};
pub use rules::{Context, Distribution, Model, RuleFamily, RuleSet};
pub use sim::NoiseModel;
pub use voice::{SynthParams, Vowel};
