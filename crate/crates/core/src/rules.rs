//! Order-n transition rules: occurrence counts of successors per context,
//! their probability/amplitude view, and the versioned rules file.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Code, CodecError, Encoding};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("sequence of {len} events is too short for order {order}")]
    SequenceTooShort { len: usize, order: usize },
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("context {0} has no successor rule")]
    DeadEnd(Context),
    #[error("rules file: {0}")]
    Format(String),
}

/// The last `n` events, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context(pub Vec<Code>);

impl Context {
    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn codes(&self) -> &[Code] {
        &self.0
    }

    /// Codes as space-separated bit strings of the given width.
    pub fn bits(&self, width: u32) -> String {
        self.0.iter().map(|c| c.bits(width)).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.0.to_string()).collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

impl From<&[Code]> for Context {
    fn from(codes: &[Code]) -> Self {
        Context(codes.to_vec())
    }
}

/// Occurrence matrix of one order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "RuleSetRepr", try_from = "RuleSetRepr")]
pub struct RuleSet {
    order: usize,
    rows: BTreeMap<Context, BTreeMap<Code, u32>>,
}

impl RuleSet {
    pub fn empty(order: usize) -> Result<Self, RuleError> {
        if order == 0 {
            return Err(RuleError::ZeroOrder);
        }
        Ok(RuleSet { order, rows: BTreeMap::new() })
    }

    /// Counts every length-`order` window followed by a successor.
    pub fn extract(seq: &[Code], order: usize) -> Result<Self, RuleError> {
        let mut set = RuleSet::empty(order)?;
        if seq.len() < order + 1 {
            return Err(RuleError::SequenceTooShort { len: seq.len(), order });
        }
        set.add_sequence(seq);
        Ok(set)
    }

    /// Counts the windows of each sequence separately; no window spans two
    /// sequences. Sequences too short for the order contribute nothing.
    pub fn extract_corpus<S: AsRef<[Code]>>(seqs: &[S], order: usize) -> Result<Self, RuleError> {
        let mut set = RuleSet::empty(order)?;
        for s in seqs {
            set.add_sequence(s.as_ref());
        }
        if set.rows.is_empty() {
            let len = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
            return Err(RuleError::SequenceTooShort { len, order });
        }
        Ok(set)
    }

    fn add_sequence(&mut self, seq: &[Code]) {
        for w in seq.windows(self.order + 1) {
            let (ctx, next) = w.split_at(self.order);
            *self.rows.entry(Context::from(ctx)).or_default().entry(next[0]).or_insert(0) += 1;
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Context, &BTreeMap<Code, u32>)> {
        self.rows.iter()
    }

    pub fn row(&self, ctx: &Context) -> Option<&BTreeMap<Code, u32>> {
        self.rows.get(ctx)
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.rows.keys()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.rows.values().flat_map(|r| r.values()).map(|&c| u64::from(c)).sum()
    }

    pub fn distribution(&self, ctx: &Context) -> Result<Distribution, RuleError> {
        let row = self.rows.get(ctx).ok_or_else(|| RuleError::DeadEnd(ctx.clone()))?;
        let total = row.values().map(|&c| u64::from(c)).sum();
        Ok(Distribution {
            support: row.iter().map(|(&code, &count)| (code, u64::from(count))).collect(),
            total,
        })
    }
}

/// Successor distribution of one context, kept as exact counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    support: Vec<(Code, u64)>,
    total: u64,
}

impl Distribution {
    pub fn from_counts(counts: impl IntoIterator<Item = (Code, u64)>) -> Self {
        let mut merged: BTreeMap<Code, u64> = BTreeMap::new();
        for (c, n) in counts {
            if n > 0 {
                *merged.entry(c).or_insert(0) += n;
            }
        }
        let total = merged.values().sum();
        Distribution { support: merged.into_iter().collect(), total }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn codes(&self) -> impl Iterator<Item = Code> + '_ {
        self.support.iter().map(|&(c, _)| c)
    }

    pub fn contains(&self, code: Code) -> bool {
        self.support.iter().any(|&(c, _)| c == code)
    }

    /// `(code, count)` pairs in code order.
    pub fn counts(&self) -> &[(Code, u64)] {
        &self.support
    }

    pub fn probabilities(&self) -> impl Iterator<Item = (Code, f64)> + '_ {
        self.support.iter().map(move |&(c, n)| (c, n as f64 / self.total as f64))
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (Code, f64)> + '_ {
        self.probabilities().map(|(c, p)| (c, p.sqrt()))
    }

    /// The only successor, if there is exactly one.
    pub fn single(&self) -> Option<Code> {
        match self.support.as_slice() {
            [(c, _)] => Some(*c),
            _ => None,
        }
    }

    /// Codes sharing the highest count.
    pub fn argmax(&self) -> Vec<Code> {
        let best = self.support.iter().map(|&(_, n)| n).max().unwrap_or(0);
        self.support.iter().filter(|&&(_, n)| n == best).map(|&(c, _)| c).collect()
    }

    /// Dense amplitude vector over a `qubits`-wide register.
    pub fn to_state_target(&self, qubits: u32) -> Vec<f64> {
        let mut v = vec![0.0; 1usize << qubits];
        for (c, a) in self.amplitudes() {
            assert!(c.index() < v.len(), "code {} does not fit in {qubits} qubits", c.0);
            v[c.index()] = a;
        }
        v
    }
}

/// Rule sets for orders `1..=n`, used for backing off to shorter contexts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RuleSet>", into = "Vec<RuleSet>")]
pub struct RuleFamily {
    sets: Vec<RuleSet>,
}

impl RuleFamily {
    pub fn extract<S: AsRef<[Code]>>(seqs: &[S], max_order: usize) -> Result<Self, RuleError> {
        if max_order == 0 {
            return Err(RuleError::ZeroOrder);
        }
        let sets = (1..=max_order)
            .map(|n| RuleSet::extract_corpus(seqs, n))
            .collect::<Result<_, _>>()?;
        Ok(RuleFamily { sets })
    }

    pub fn max_order(&self) -> usize {
        self.sets.len()
    }

    pub fn get(&self, order: usize) -> Option<&RuleSet> {
        order.checked_sub(1).and_then(|i| self.sets.get(i))
    }

    pub fn top(&self) -> &RuleSet {
        self.sets.last().expect("family holds at least one order")
    }

    /// Longest suffix of `history`, at most `max_order` long, that has a row.
    pub fn resolve(&self, history: &[Code], max_order: usize) -> Option<(&RuleSet, Context)> {
        let top = max_order.min(self.sets.len()).min(history.len());
        (1..=top).rev().find_map(|n| {
            let ctx = Context::from(&history[history.len() - n..]);
            let set = &self.sets[n - 1];
            set.row(&ctx).map(|_| (set, ctx))
        })
    }
}

impl From<RuleFamily> for Vec<RuleSet> {
    fn from(f: RuleFamily) -> Self {
        f.sets
    }
}

impl TryFrom<Vec<RuleSet>> for RuleFamily {
    type Error = String;

    fn try_from(sets: Vec<RuleSet>) -> Result<Self, Self::Error> {
        if sets.is_empty() {
            return Err("no rule sets".into());
        }
        for (i, s) in sets.iter().enumerate() {
            if s.order != i + 1 {
                return Err(format!("rule set {i} has order {}, expected {}", s.order, i + 1));
            }
        }
        Ok(RuleFamily { sets })
    }
}

#[derive(Serialize, Deserialize)]
struct RowRepr {
    context: Vec<u16>,
    successors: Vec<(u16, u32)>,
}

#[derive(Serialize, Deserialize)]
struct RuleSetRepr {
    order: usize,
    rows: Vec<RowRepr>,
}

impl From<RuleSet> for RuleSetRepr {
    fn from(s: RuleSet) -> Self {
        RuleSetRepr {
            order: s.order,
            rows: s
                .rows
                .into_iter()
                .map(|(ctx, succ)| RowRepr {
                    context: ctx.0.iter().map(|c| c.0).collect(),
                    successors: succ.into_iter().map(|(c, n)| (c.0, n)).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<RuleSetRepr> for RuleSet {
    type Error = String;

    fn try_from(r: RuleSetRepr) -> Result<Self, Self::Error> {
        let mut set = RuleSet::empty(r.order).map_err(|e| e.to_string())?;
        for row in r.rows {
            if row.context.len() != r.order {
                return Err(format!("context {:?} does not have order {}", row.context, r.order));
            }
            let mut succ = BTreeMap::new();
            for (c, n) in row.successors {
                if n == 0 {
                    return Err(format!("zero count in row {:?}", row.context));
                }
                succ.insert(Code(c), n);
            }
            if succ.is_empty() {
                return Err(format!("row {:?} has no successors", row.context));
            }
            let ctx = Context(row.context.into_iter().map(Code).collect());
            if set.rows.insert(ctx, succ).is_some() {
                return Err("duplicate context".into());
            }
        }
        Ok(set)
    }
}

/// Everything the generator needs, as written by `learn` and read by
/// `generate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub ppqn: u16,
    pub encoding: Encoding,
    /// First code of each training tune.
    pub openings: Vec<Code>,
    pub rules: RuleFamily,
}

impl Model {
    pub fn order(&self) -> usize {
        self.rules.max_order()
    }

    pub fn qubits(&self) -> u32 {
        self.encoding.lexicon.qubits()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, RuleError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RuleError::Format(e.to_string()))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => return Err(RuleError::Format(format!("unsupported format version {v}"))),
            None => return Err(RuleError::Format("missing format_version".into())),
        }
        let model: Model = serde_json::from_value(value).map_err(|e| RuleError::Format(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), RuleError> {
        let lex = &self.encoding.lexicon;
        for &raw in lex.raw_codes() {
            self.encoding
                .tables
                .decode(raw)
                .map_err(|e: CodecError| RuleError::Format(e.to_string()))?;
        }
        let in_lex = |c: &Code| lex.contains(*c);
        for set in 0..self.rules.max_order() {
            let set = self.rules.get(set + 1).expect("order in range");
            for (ctx, row) in set.rows() {
                if !ctx.codes().iter().all(in_lex) || !row.keys().all(in_lex) {
                    return Err(RuleError::Format(format!("row {ctx} references codes outside the lexicon")));
                }
            }
        }
        if !self.openings.iter().all(in_lex) {
            return Err(RuleError::Format("opening references codes outside the lexicon".into()));
        }
        Ok(())
    }
}
