//! The generative loop: walk the rules from a start context, one event per
//! round, measuring a prepared circuit whenever a rule offers a choice.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::codec::Code;
use crate::rules::{Context, Distribution, Model, RuleFamily};
use crate::sim::{self, stream_rng, NoiseModel};
use crate::stateprep::prepare_state;

pub const DEFAULT_MAX_RETRIES: u32 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("round {round}: no permissible event after {retries} retries")]
    RetriesExhausted { round: usize, retries: u32 },
    #[error("the model has no rules")]
    EmptyRules,
    #[error("start context {0:?} must hold {1} codes from the lexicon")]
    BadStart(Vec<u16>, usize),
    #[error("order {requested} is above the model's order {available}")]
    OrderTooHigh { requested: usize, available: usize },
    #[error("shots and max_retries must be at least 1")]
    BadConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Start {
    /// The first event of the first training tune; early rounds back off
    /// to shorter contexts until the history is `n` long.
    FirstOfInput,
    /// A uniformly drawn context among the trained rows.
    Random,
    Explicit(Vec<Code>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub rounds: usize,
    pub order: usize,
    pub shots: u64,
    pub start: Start,
    pub noise: NoiseModel,
    pub tolerate_wrong: bool,
    pub max_retries: u32,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            rounds: 50,
            order: 1,
            shots: 1,
            start: Start::FirstOfInput,
            noise: NoiseModel::NONE,
            tolerate_wrong: false,
            max_retries: DEFAULT_MAX_RETRIES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// A circuit was built and measured a permitted successor.
    Good,
    /// The rule had a single successor; no circuit was built.
    Skipped,
    /// A wrong event accepted under the tolerance policy.
    Noisy,
    /// No rule matched the history; the event was drawn uniformly.
    DeadEnd,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Good => "good",
            Classification::Skipped => "skipped",
            Classification::Noisy => "noisy",
            Classification::DeadEnd => "dead_end",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundLog {
    pub round: usize,
    /// `None` when the history had no matching rule.
    pub context: Option<Context>,
    pub outcome: Code,
    pub classification: Classification,
    /// Rejected measurements before the outcome was taken.
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GenerationStats {
    pub good: usize,
    /// Rounds decided without a circuit, dead-end draws included.
    pub skipped: usize,
    /// Every wrong measurement, accepted or retried.
    pub noisy: usize,
    pub noisy_accepted: usize,
    pub dead_end: usize,
    pub log: Vec<RoundLog>,
}

impl GenerationStats {
    pub fn rounds(&self) -> usize {
        self.log.len()
    }

    /// `round,context,outcome,classification,retries` rows and a summary
    /// comment line.
    pub fn to_csv(&self, qubits: u32) -> String {
        let mut s = String::from("round,context,outcome,classification,retries\n");
        for r in &self.log {
            let ctx = r.context.as_ref().map(|c| c.bits(qubits)).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.round,
                ctx,
                r.outcome.bits(qubits),
                r.classification,
                r.retries
            ));
        }
        s.push_str(&format!(
            "# summary good={} skipped={} noisy={} noisy_accepted={} dead_end={}\n",
            self.good, self.skipped, self.noisy, self.noisy_accepted, self.dead_end
        ));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub codes: Vec<Code>,
    pub stats: GenerationStats,
}

/// Accept a wrong outcome only when tolerating and some order-n context
/// ending in it has a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Retry,
}

pub fn wrong_event_policy(
    outcome: Code,
    history: &[Code],
    rules: &RuleFamily,
    order: usize,
    lexicon_len: usize,
    tolerate: bool,
) -> Verdict {
    if !tolerate || outcome.index() >= lexicon_len {
        return Verdict::Retry;
    }
    let Some(set) = rules.get(order) else { return Verdict::Retry };
    if history.len() + 1 < order {
        return Verdict::Retry;
    }
    let mut ctx: Vec<Code> = history[history.len() + 1 - order..].to_vec();
    ctx.push(outcome);
    if set.row(&Context(ctx)).is_some() {
        Verdict::Accept
    } else {
        Verdict::Retry
    }
}

/// Longest suffix of `history` (at most `order` codes) with a rule, or
/// `None` for a dead end.
pub fn resolve_context(history: &[Code], rules: &RuleFamily, order: usize) -> Option<(Context, Distribution)> {
    rules.resolve(history, order).map(|(set, ctx)| {
        let dist = set.distribution(&ctx).expect("resolved context has a row");
        (ctx, dist)
    })
}

fn start_codes<R: Rng>(model: &Model, config: &GenConfig, rng: &mut R) -> Result<Vec<Code>, GenError> {
    let n = config.order;
    let set = model.rules.get(n).ok_or(GenError::OrderTooHigh {
        requested: n,
        available: model.order(),
    })?;
    if set.is_empty() {
        return Err(GenError::EmptyRules);
    }
    let lex = model.encoding.lexicon.len();
    match &config.start {
        Start::FirstOfInput => model.openings.first().map(|&c| vec![c]).ok_or(GenError::EmptyRules),
        Start::Random => {
            let i = rng.gen_range(0..set.len());
            Ok(set.contexts().nth(i).expect("index in range").0.clone())
        }
        Start::Explicit(codes) => {
            if codes.len() != n || codes.iter().any(|c| c.index() >= lex) {
                return Err(GenError::BadStart(codes.iter().map(|c| c.0).collect(), n));
            }
            Ok(codes.clone())
        }
    }
}

/// Runs `config.rounds` generative rounds. Output holds the start context
/// followed by one code per round.
pub fn generate(model: &Model, config: &GenConfig) -> Result<Generated, GenError> {
    if config.shots == 0 || config.max_retries == 0 {
        return Err(GenError::BadConfig);
    }
    let qubits = model.qubits();
    let lex = model.encoding.lexicon.len();
    let mut codes = start_codes(model, config, &mut stream_rng(config.seed, 0))?;
    let mut stats = GenerationStats::default();

    for round in 0..config.rounds {
        let mut rng = stream_rng(config.seed, round as u64 + 1);
        let Some((ctx, dist)) = resolve_context(&codes, &model.rules, config.order) else {
            let outcome = Code(rng.gen_range(0..lex) as u16);
            codes.push(outcome);
            stats.skipped += 1;
            stats.dead_end += 1;
            stats.log.push(RoundLog {
                round,
                context: None,
                outcome,
                classification: Classification::DeadEnd,
                retries: 0,
            });
            continue;
        };

        if let Some(only) = dist.single() {
            codes.push(only);
            stats.skipped += 1;
            stats.log.push(RoundLog {
                round,
                context: Some(ctx),
                outcome: only,
                classification: Classification::Skipped,
                retries: 0,
            });
            continue;
        }

        let target = dist.to_state_target(qubits);
        let circuit = prepare_state(&target, qubits).expect("distribution amplitudes are normalized");
        let state = sim::run(&circuit);
        let mut retries = 0u32;
        let (outcome, classification) = loop {
            let counts = sim::sample_with(&state, config.shots, config.noise, &mut rng);
            let outcome = Code(sim::majority_with(&counts, &mut rng) as u16);
            if dist.contains(outcome) {
                break (outcome, Classification::Good);
            }
            stats.noisy += 1;
            let verdict =
                wrong_event_policy(outcome, &codes, &model.rules, config.order, lex, config.tolerate_wrong);
            if verdict == Verdict::Accept {
                break (outcome, Classification::Noisy);
            }
            retries += 1;
            if retries > config.max_retries {
                return Err(GenError::RetriesExhausted { round, retries: config.max_retries });
            }
        };
        match classification {
            Classification::Good => stats.good += 1,
            _ => stats.noisy_accepted += 1,
        }
        codes.push(outcome);
        stats.log.push(RoundLog { round, context: Some(ctx), outcome, classification, retries });
    }

    Ok(Generated { codes, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Encoding, Lexicon, RawCode, Tables};
    use crate::midi::NoteEvent;

    fn model_from(seq: &[u16], order: usize) -> Model {
        let codes: Vec<Code> = seq.iter().map(|&c| Code(c)).collect();
        let distinct = *seq.iter().max().unwrap() as u8 + 1;
        let events: Vec<NoteEvent> = (0..distinct).map(|i| NoteEvent::note(60 + i, 480)).collect();
        let tables = Tables::build(&events).unwrap();
        let raw: Vec<RawCode> = tables.encode(&events).unwrap();
        Model {
            format_version: crate::rules::FORMAT_VERSION,
            ppqn: 480,
            encoding: Encoding { tables, lexicon: Lexicon::build(&raw) },
            openings: vec![codes[0]],
            rules: RuleFamily::extract(&[codes], order).unwrap(),
        }
    }

    #[test]
    fn policy_cases() {
        let m = model_from(&[0, 1, 2, 0, 2, 3], 1);
        let h = [Code(0)];
        assert_eq!(wrong_event_policy(Code(2), &h, &m.rules, 1, 4, true), Verdict::Accept);
        assert_eq!(wrong_event_policy(Code(2), &h, &m.rules, 1, 4, false), Verdict::Retry);
        // 3 ends the tune: no successor row
        assert_eq!(wrong_event_policy(Code(3), &h, &m.rules, 1, 4, true), Verdict::Retry);
        assert_eq!(wrong_event_policy(Code(5), &h, &m.rules, 1, 4, true), Verdict::Retry);
    }

    #[test]
    fn resolve_backs_off_then_dead_ends() {
        let m = model_from(&[0, 1, 2, 3, 1, 4], 3);
        let (ctx, _) = resolve_context(&[Code(2), Code(3), Code(1)], &m.rules, 3).unwrap();
        assert_eq!(ctx.order(), 3);
        let (ctx, _) = resolve_context(&[Code(0), Code(3), Code(1)], &m.rules, 3).unwrap();
        assert_eq!(ctx, Context(vec![Code(3), Code(1)]));
        assert!(resolve_context(&[Code(1), Code(4)], &m.rules, 3).is_none());
    }

    #[test]
    fn zero_rounds_returns_start() {
        let m = model_from(&[0, 1, 2, 0], 2);
        let cfg = GenConfig { rounds: 0, order: 2, ..GenConfig::default() };
        let g = generate(&m, &cfg).unwrap();
        assert_eq!(g.codes, vec![Code(0)]);
        assert_eq!(g.stats, GenerationStats::default());
    }

    #[test]
    fn explicit_start_validation() {
        let m = model_from(&[0, 1, 2, 0], 1);
        let bad = GenConfig { start: Start::Explicit(vec![Code(9)]), ..GenConfig::default() };
        assert!(matches!(generate(&m, &bad), Err(GenError::BadStart(..))));
        let too_long = GenConfig { start: Start::Explicit(vec![Code(0), Code(1)]), ..GenConfig::default() };
        assert!(matches!(generate(&m, &too_long), Err(GenError::BadStart(..))));
        let high = GenConfig { order: 2, ..GenConfig::default() };
        assert_eq!(generate(&m, &high), Err(GenError::OrderTooHigh { requested: 2, available: 1 }));
    }

    #[test]
    fn retries_exhaust_under_heavy_noise() {
        // 0 -> {1, 2, 3, 4} on a 3-qubit register; half of all noisy outcomes miss
        let m = model_from(&[0, 1, 0, 2, 0, 3, 0, 4, 0], 1);
        let cfg = GenConfig {
            rounds: 30,
            noise: NoiseModel::bit_flip(0.5).unwrap(),
            max_retries: 2,
            ..GenConfig::default()
        };
        let err = generate(&m, &cfg).unwrap_err();
        assert!(matches!(err, GenError::RetriesExhausted { retries: 2, .. }));
    }

    #[test]
    fn csv_layout() {
        let m = model_from(&[0, 1, 0, 2, 0], 1);
        let cfg = GenConfig { rounds: 2, start: Start::Explicit(vec![Code(1)]), ..GenConfig::default() };
        let g = generate(&m, &cfg).unwrap();
        let csv = g.stats.to_csv(m.qubits());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("round,context,outcome,classification,retries"));
        assert_eq!(lines.next(), Some("0,01,00,skipped,0"));
        assert!(lines.next().unwrap().starts_with("1,00,"));
        assert!(lines.next().unwrap().starts_with("# summary good=1 skipped=1 noisy=0"));
    }
}
