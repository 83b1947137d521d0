//! The machine definition file format: parsing, construction, and
//! serialization.
//!
//! Files are line-oriented text. `#` starts a comment, blank lines are
//! ignored, and directives appear in a fixed order: `type`, `alphabet`,
//! the `state` declarations, `initial` (omitted for `gfa`), then payload
//! blocks. A payload block opens with `matrix`, `kraus`,
//! `initial-vector`, or `final-vector` and closes with `end`. Matrix and
//! Kraus blocks name a tape symbol: a single alphabet character, or the
//! reserved words `cent` and `dollar` for the end-markers.
//!
//! Dense payloads give one row per line, entries comma-separated, each an
//! amplitude expression; entry (row r, column c) is the amplitude from
//! state c into state r. Sparse payloads give one `from to amplitude`
//! triple per line. A sparse matrix block may carry the `complete` flag,
//! in which case the unspecified source columns are filled in by unitary
//! completion when the machine is built.
//!
//! Parsing validates structure (shapes, name references, expression
//! syntax) and reports offending line numbers. Semantic wellformedness
//! (stochasticity, unitarity, trace preservation) is deliberately not
//! enforced here; the checkers and validators own those verdicts.

use crate::alphabet::{Alphabet, HeadMove, SymbolMap};
use crate::amp_expr::{self, format_complex, parse_amp};
use crate::classical::{Gfa, RealMatrix, RtPfa};
use crate::linalg::{complete_partial_unitary, BasisOrder, Complex64, ComplexMatrix};
use crate::quantum_rt::{RtKwqfa, RtQfa, StateKind, SuperOp};
use crate::twoway::TwoWayKwqfa;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{context}: {message}")]
    Build { context: String, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

fn build_err(context: impl Into<String>, message: impl fmt::Display) -> FormatError {
    FormatError::Build {
        context: context.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MachineType {
    RtPfa,
    Gfa,
    RtQfa,
    RtKwqfa,
    Kwqfa1Way,
    Kwqfa2Way,
}

impl MachineType {
    pub fn keyword(self) -> &'static str {
        match self {
            MachineType::RtPfa => "rt-pfa",
            MachineType::Gfa => "gfa",
            MachineType::RtQfa => "rt-qfa",
            MachineType::RtKwqfa => "rt-kwqfa",
            MachineType::Kwqfa1Way => "kwqfa-1way",
            MachineType::Kwqfa2Way => "kwqfa-2way",
        }
    }

    pub fn from_keyword(tok: &str) -> Option<Self> {
        Some(match tok {
            "rt-pfa" => MachineType::RtPfa,
            "gfa" => MachineType::Gfa,
            "rt-qfa" => MachineType::RtQfa,
            "rt-kwqfa" => MachineType::RtKwqfa,
            "kwqfa-1way" => MachineType::Kwqfa1Way,
            "kwqfa-2way" => MachineType::Kwqfa2Way,
            _ => return None,
        })
    }

    /// Machine types whose states carry a head direction.
    pub fn has_directions(self) -> bool {
        matches!(self, MachineType::Kwqfa1Way | MachineType::Kwqfa2Way)
    }
}

/// Tape symbol as named in a file: an alphabet character or an
/// end-marker keyword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymSpec {
    Cent,
    Dollar,
    Input(char),
}

impl fmt::Display for SymSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymSpec::Cent => write!(f, "cent"),
            SymSpec::Dollar => write!(f, "dollar"),
            SymSpec::Input(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDecl {
    pub name: String,
    pub kind: StateKind,
    pub direction: Option<HeadMove>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseEntry {
    pub from: String,
    pub to: String,
    pub amp: String,
}

/// Transition payload as written in the file; amplitude expressions are
/// kept as text so serialization preserves them verbatim.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Dense(Vec<Vec<String>>),
    Sparse {
        entries: Vec<SparseEntry>,
        complete: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Matrix { symbol: SymSpec, payload: Payload },
    Kraus { symbol: SymSpec, payload: Payload },
    InitialVector(Vec<String>),
    FinalVector(Vec<String>),
}

/// Parsed document: structure and expression text, no evaluated numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineFile {
    pub machine_type: MachineType,
    pub alphabet: Vec<char>,
    pub states: Vec<StateDecl>,
    /// Initial state name; `None` exactly for `gfa`, whose starting
    /// distribution is the `initial-vector` block.
    pub initial: Option<String>,
    pub blocks: Vec<Block>,
}

impl MachineFile {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    /// For each sparse matrix block with the `complete` flag, the (state
    /// name, symbol) pairs whose columns are filled by completion rather
    /// than specified in the file. Dense blocks specify every column.
    pub fn completed_columns(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for block in &self.blocks {
            if let Block::Matrix {
                symbol,
                payload: Payload::Sparse { entries, complete },
            } = block
            {
                if !complete {
                    continue;
                }
                for st in &self.states {
                    if !entries.iter().any(|e| e.from == st.name) {
                        out.push((st.name.clone(), symbol.to_string()));
                    }
                }
            }
        }
        out
    }
}

fn parse_kind(tok: &str) -> Option<StateKind> {
    Some(match tok {
        "nonhalting" => StateKind::Nonhalting,
        "accepting" => StateKind::Accepting,
        "rejecting" => StateKind::Rejecting,
        _ => return None,
    })
}

fn kind_keyword(kind: StateKind) -> &'static str {
    match kind {
        StateKind::Nonhalting => "nonhalting",
        StateKind::Accepting => "accepting",
        StateKind::Rejecting => "rejecting",
    }
}

fn parse_direction(tok: &str) -> Option<HeadMove> {
    Some(match tok {
        "left" => HeadMove::Left,
        "stay" => HeadMove::Stay,
        "right" => HeadMove::Right,
        _ => return None,
    })
}

fn direction_keyword(mv: HeadMove) -> &'static str {
    match mv {
        HeadMove::Left => "left",
        HeadMove::Stay => "stay",
        HeadMove::Right => "right",
    }
}

/// Split off a `#` comment and trim; `None` when nothing remains.
fn significant(line: &str) -> Option<&str> {
    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let body = body.trim();
    if body.is_empty() {
        None
    } else {
        Some(body)
    }
}

struct LineCursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineCursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
        }
    }

    /// Next significant line as (1-based number, content).
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.lines.by_ref() {
            if let Some(body) = significant(raw) {
                return Some((idx + 1, body));
            }
        }
        None
    }
}

pub fn parse_machine_file(text: &str) -> Result<MachineFile, FormatError> {
    let mut cursor = LineCursor::new(text);

    // Header: type, then alphabet.
    let (line, body) = cursor
        .next()
        .ok_or_else(|| parse_err(1, "empty machine file"))?;
    let mut toks = body.split_whitespace();
    if toks.next() != Some("type") {
        return Err(parse_err(line, "first directive must be `type`"));
    }
    let machine_type = match toks.next() {
        Some(kw) => MachineType::from_keyword(kw)
            .ok_or_else(|| parse_err(line, format!("unknown machine type {kw:?}")))?,
        None => return Err(parse_err(line, "`type` needs a machine type keyword")),
    };
    if toks.next().is_some() {
        return Err(parse_err(line, "trailing tokens after machine type"));
    }

    let (line, body) = cursor
        .next()
        .ok_or_else(|| parse_err(line, "expected `alphabet` after `type`"))?;
    let mut toks = body.split_whitespace();
    if toks.next() != Some("alphabet") {
        return Err(parse_err(line, "second directive must be `alphabet`"));
    }
    let mut alphabet: Vec<char> = Vec::new();
    for tok in toks {
        let mut chars = tok.chars();
        let c = chars.next().expect("split_whitespace yields nonempty");
        if chars.next().is_some() {
            return Err(parse_err(
                line,
                format!("alphabet symbol {tok:?} must be a single character"),
            ));
        }
        alphabet.push(c);
    }
    Alphabet::new(alphabet.clone()).map_err(|e| parse_err(line, e.to_string()))?;

    // State declarations, then `initial` (except for gfa), then blocks.
    let mut states: Vec<StateDecl> = Vec::new();
    let mut initial: Option<String> = None;
    let mut blocks: Vec<Block> = Vec::new();
    let mut seen_matrix: Vec<SymSpec> = Vec::new();
    let mut last_line = line;

    while let Some((line, body)) = cursor.next() {
        last_line = line;
        let mut toks = body.split_whitespace();
        let head = toks.next().expect("significant lines are nonempty");
        match head {
            "state" => {
                if initial.is_some() || !blocks.is_empty() {
                    return Err(parse_err(
                        line,
                        "state declarations must precede `initial` and payload blocks",
                    ));
                }
                let name = toks
                    .next()
                    .ok_or_else(|| parse_err(line, "`state` needs a name"))?;
                if name == "end" {
                    return Err(parse_err(line, "`end` cannot be used as a state name"));
                }
                if states.iter().any(|s| s.name == name) {
                    return Err(parse_err(line, format!("duplicate state name {name:?}")));
                }
                let kind_tok = toks
                    .next()
                    .ok_or_else(|| parse_err(line, "`state` needs a kind"))?;
                let kind = parse_kind(kind_tok).ok_or_else(|| {
                    parse_err(
                        line,
                        format!(
                            "unknown state kind {kind_tok:?} (nonhalting | accepting | rejecting)"
                        ),
                    )
                })?;
                if machine_type == MachineType::Gfa && kind != StateKind::Nonhalting {
                    return Err(parse_err(
                        line,
                        "gfa states carry no halting kind; declare them nonhalting",
                    ));
                }
                let direction = match toks.next() {
                    Some(tok) => {
                        if !machine_type.has_directions() {
                            return Err(parse_err(
                                line,
                                format!(
                                    "machine type {} takes no head direction",
                                    machine_type.keyword()
                                ),
                            ));
                        }
                        Some(parse_direction(tok).ok_or_else(|| {
                            parse_err(
                                line,
                                format!("unknown direction {tok:?} (left | stay | right)"),
                            )
                        })?)
                    }
                    None => {
                        if machine_type.has_directions() {
                            return Err(parse_err(
                                line,
                                format!(
                                    "machine type {} requires a head direction per state",
                                    machine_type.keyword()
                                ),
                            ));
                        }
                        None
                    }
                };
                if toks.next().is_some() {
                    return Err(parse_err(line, "trailing tokens after state declaration"));
                }
                states.push(StateDecl {
                    name: name.to_string(),
                    kind,
                    direction,
                });
            }
            "initial" => {
                if machine_type == MachineType::Gfa {
                    return Err(parse_err(
                        line,
                        "gfa files use an `initial-vector` block, not an `initial` state",
                    ));
                }
                if initial.is_some() {
                    return Err(parse_err(line, "duplicate `initial` directive"));
                }
                if !blocks.is_empty() {
                    return Err(parse_err(line, "`initial` must precede payload blocks"));
                }
                let name = toks
                    .next()
                    .ok_or_else(|| parse_err(line, "`initial` needs a state name"))?;
                if toks.next().is_some() {
                    return Err(parse_err(line, "trailing tokens after initial state"));
                }
                if !states.iter().any(|s| s.name == name) {
                    return Err(parse_err(line, format!("unknown initial state {name:?}")));
                }
                initial = Some(name.to_string());
            }
            "matrix" | "kraus" => {
                if machine_type != MachineType::Gfa && initial.is_none() {
                    return Err(parse_err(line, "payload blocks must follow `initial`"));
                }
                let symbol = parse_symspec(toks.next(), &alphabet, line)?;
                let layout = toks
                    .next()
                    .ok_or_else(|| parse_err(line, "block needs a layout: dense | sparse"))?;
                let complete = match toks.next() {
                    None => false,
                    Some("complete") => true,
                    Some(other) => {
                        return Err(parse_err(line, format!("unexpected token {other:?}")))
                    }
                };
                if toks.next().is_some() {
                    return Err(parse_err(line, "trailing tokens after block header"));
                }
                let payload = match layout {
                    "dense" => {
                        if complete {
                            return Err(parse_err(
                                line,
                                "`complete` applies only to sparse matrix blocks",
                            ));
                        }
                        parse_dense_block(&mut cursor, states.len(), line)?
                    }
                    "sparse" => parse_sparse_block(&mut cursor, &states, line, complete)?,
                    other => {
                        return Err(parse_err(
                            line,
                            format!("unknown layout {other:?} (dense | sparse)"),
                        ))
                    }
                };
                if head == "matrix" {
                    if seen_matrix.contains(&symbol) {
                        return Err(parse_err(
                            line,
                            format!("duplicate matrix block for symbol '{symbol}'"),
                        ));
                    }
                    seen_matrix.push(symbol);
                    blocks.push(Block::Matrix { symbol, payload });
                } else {
                    if complete {
                        return Err(parse_err(
                            line,
                            "`complete` applies only to sparse matrix blocks",
                        ));
                    }
                    blocks.push(Block::Kraus { symbol, payload });
                }
            }
            "initial-vector" | "final-vector" => {
                let entries = parse_vector_block(&mut cursor, states.len(), line)?;
                let dup = blocks.iter().any(|b| {
                    matches!(
                        (head, b),
                        ("initial-vector", Block::InitialVector(_))
                            | ("final-vector", Block::FinalVector(_))
                    )
                });
                if dup {
                    return Err(parse_err(line, format!("duplicate `{head}` block")));
                }
                if head == "initial-vector" {
                    blocks.push(Block::InitialVector(entries));
                } else {
                    blocks.push(Block::FinalVector(entries));
                }
            }
            other => {
                return Err(parse_err(line, format!("unknown directive {other:?}")));
            }
        }
    }

    if states.is_empty() {
        return Err(parse_err(last_line, "machine declares no states"));
    }
    if machine_type != MachineType::Gfa && initial.is_none() {
        return Err(parse_err(last_line, "missing `initial` directive"));
    }
    Ok(MachineFile {
        machine_type,
        alphabet,
        states,
        initial,
        blocks,
    })
}

fn parse_symspec(
    tok: Option<&str>,
    alphabet: &[char],
    line: usize,
) -> Result<SymSpec, FormatError> {
    let tok = tok.ok_or_else(|| parse_err(line, "block needs a tape symbol"))?;
    match tok {
        "cent" => Ok(SymSpec::Cent),
        "dollar" => Ok(SymSpec::Dollar),
        _ => {
            let mut chars = tok.chars();
            let c = chars.next().expect("nonempty token");
            if chars.next().is_some() {
                return Err(parse_err(
                    line,
                    format!("unknown tape symbol {tok:?} (alphabet character, cent, or dollar)"),
                ));
            }
            if !alphabet.contains(&c) {
                return Err(parse_err(
                    line,
                    format!("symbol {c:?} is not in the alphabet"),
                ));
            }
            Ok(SymSpec::Input(c))
        }
    }
}

fn check_amp_syntax(text: &str, line: usize) -> Result<(), FormatError> {
    parse_amp(text)
        .map(|_| ())
        .map_err(|e| parse_err(line, format!("bad amplitude expression {text:?}: {e}")))
}

fn parse_dense_block(
    cursor: &mut LineCursor<'_>,
    n: usize,
    header_line: usize,
) -> Result<Payload, FormatError> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    loop {
        let (line, body) = cursor
            .next()
            .ok_or_else(|| parse_err(header_line, "block is missing its `end` line"))?;
        if body == "end" {
            if rows.len() != n {
                return Err(parse_err(
                    line,
                    format!("dense block has {} rows, expected {n}", rows.len()),
                ));
            }
            return Ok(Payload::Dense(rows));
        }
        let row: Vec<String> = body.split(',').map(|e| e.trim().to_string()).collect();
        if row.len() != n {
            return Err(parse_err(
                line,
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
        for entry in &row {
            check_amp_syntax(entry, line)?;
        }
        rows.push(row);
    }
}

fn parse_sparse_block(
    cursor: &mut LineCursor<'_>,
    states: &[StateDecl],
    header_line: usize,
    complete: bool,
) -> Result<Payload, FormatError> {
    let mut entries: Vec<SparseEntry> = Vec::new();
    loop {
        let (line, body) = cursor
            .next()
            .ok_or_else(|| parse_err(header_line, "block is missing its `end` line"))?;
        if body == "end" {
            return Ok(Payload::Sparse { entries, complete });
        }
        let mut toks = body.split_whitespace();
        let from = toks.next().expect("significant lines are nonempty");
        let to = toks
            .next()
            .ok_or_else(|| parse_err(line, "sparse entry needs `from to amplitude`"))?;
        let amp: Vec<&str> = toks.collect();
        if amp.is_empty() {
            return Err(parse_err(line, "sparse entry needs an amplitude"));
        }
        let amp = amp.join(" ");
        for name in [from, to] {
            if !states.iter().any(|s| s.name == name) {
                return Err(parse_err(line, format!("unknown state {name:?}")));
            }
        }
        if entries.iter().any(|e| e.from == from && e.to == to) {
            return Err(parse_err(
                line,
                format!("duplicate sparse entry for {from} -> {to}"),
            ));
        }
        check_amp_syntax(&amp, line)?;
        entries.push(SparseEntry {
            from: from.to_string(),
            to: to.to_string(),
            amp,
        });
    }
}

fn parse_vector_block(
    cursor: &mut LineCursor<'_>,
    n: usize,
    header_line: usize,
) -> Result<Vec<String>, FormatError> {
    let mut entries: Vec<String> = Vec::new();
    loop {
        let (line, body) = cursor
            .next()
            .ok_or_else(|| parse_err(header_line, "block is missing its `end` line"))?;
        if body == "end" {
            if entries.len() != n {
                return Err(parse_err(
                    line,
                    format!("vector has {} entries, expected {n}", entries.len()),
                ));
            }
            return Ok(entries);
        }
        for entry in body.split(',') {
            let entry = entry.trim().to_string();
            check_amp_syntax(&entry, line)?;
            entries.push(entry);
        }
    }
}

/// A machine of any supported type, as built from a file.
#[derive(Debug, Clone)]
pub enum Machine {
    RtPfa(RtPfa),
    Gfa(Gfa),
    RtQfa(RtQfa),
    RtKwqfa(RtKwqfa),
    TwoWay(TwoWayKwqfa),
}

impl Machine {
    pub fn type_keyword(&self) -> &'static str {
        match self {
            Machine::RtPfa(_) => MachineType::RtPfa.keyword(),
            Machine::Gfa(_) => MachineType::Gfa.keyword(),
            Machine::RtQfa(_) => MachineType::RtQfa.keyword(),
            Machine::RtKwqfa(_) => MachineType::RtKwqfa.keyword(),
            Machine::TwoWay(m) => {
                if m.one_way {
                    MachineType::Kwqfa1Way.keyword()
                } else {
                    MachineType::Kwqfa2Way.keyword()
                }
            }
        }
    }

    pub fn state_count(&self) -> usize {
        match self {
            Machine::RtPfa(m) => m.state_count,
            Machine::Gfa(m) => m.state_count,
            Machine::RtQfa(m) => m.state_count,
            Machine::RtKwqfa(m) => m.state_count,
            Machine::TwoWay(m) => m.state_count,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            Machine::RtPfa(m) => &m.alphabet,
            Machine::Gfa(m) => &m.alphabet,
            Machine::RtQfa(m) => &m.alphabet,
            Machine::RtKwqfa(m) => &m.alphabet,
            Machine::TwoWay(m) => &m.alphabet,
        }
    }
}

/// Build the machine a file describes, completing `complete` blocks with
/// ascending basis candidates.
pub fn to_machine(file: &MachineFile) -> Result<Machine, FormatError> {
    to_machine_with_order(file, BasisOrder::Ascending)
}

struct Builder<'a> {
    file: &'a MachineFile,
    alphabet: Alphabet,
    index: HashMap<&'a str, usize>,
    order: BasisOrder,
}

/// As [`to_machine`], with an explicit completion candidate order. The
/// order affects only columns no specified transition touches, so any
/// behavioral difference between orders witnesses an encoding bug.
pub fn to_machine_with_order(
    file: &MachineFile,
    order: BasisOrder,
) -> Result<Machine, FormatError> {
    let alphabet = Alphabet::new(file.alphabet.clone()).map_err(|e| build_err("alphabet", e))?;
    let index: HashMap<&str, usize> = file
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let b = Builder {
        file,
        alphabet,
        index,
        order,
    };
    match file.machine_type {
        MachineType::RtPfa => b.build_rtpfa(),
        MachineType::Gfa => b.build_gfa(),
        MachineType::RtQfa => b.build_rtqfa(),
        MachineType::RtKwqfa => b.build_rtkwqfa(),
        MachineType::Kwqfa1Way => b.build_twoway(true),
        MachineType::Kwqfa2Way => b.build_twoway(false),
    }
}

impl<'a> Builder<'a> {
    fn n(&self) -> usize {
        self.file.states.len()
    }

    fn initial_index(&self) -> usize {
        let name = self
            .file
            .initial
            .as_ref()
            .expect("parser guarantees initial for non-gfa types");
        self.index[name.as_str()]
    }

    fn eval_entry(&self, text: &str, context: &str) -> Result<Complex64, FormatError> {
        let expr = parse_amp(text).map_err(|e| build_err(context, format!("{text:?}: {e}")))?;
        amp_expr::eval(&expr).map_err(|e| build_err(context, format!("{text:?}: {e}")))
    }

    /// Evaluate a payload into a complex matrix, applying completion for
    /// sparse `complete` blocks.
    fn complex_matrix(
        &self,
        payload: &Payload,
        context: &str,
    ) -> Result<ComplexMatrix, FormatError> {
        let n = self.n();
        match payload {
            Payload::Dense(rows) => {
                let mut m = ComplexMatrix::zeros(n, n);
                for (r, row) in rows.iter().enumerate() {
                    for (c, entry) in row.iter().enumerate() {
                        m.set(r, c, self.eval_entry(entry, context)?);
                    }
                }
                Ok(m)
            }
            Payload::Sparse { entries, complete } => {
                let mut m = ComplexMatrix::zeros(n, n);
                let mut specified = vec![false; n];
                for e in entries {
                    let from = self.index[e.from.as_str()];
                    let to = self.index[e.to.as_str()];
                    specified[from] = true;
                    m.set(to, from, self.eval_entry(&e.amp, context)?);
                }
                if !complete {
                    return Ok(m);
                }
                let placed: Vec<(usize, crate::linalg::ComplexVector)> = (0..n)
                    .filter(|&j| specified[j])
                    .map(|j| (j, m.column(j)))
                    .collect();
                complete_partial_unitary(n, &placed, self.order).map_err(|e| build_err(context, e))
            }
        }
    }

    /// Evaluate a payload into a real matrix; imaginary parts are errors.
    fn real_matrix(&self, payload: &Payload, context: &str) -> Result<RealMatrix, FormatError> {
        if let Payload::Sparse { complete: true, .. } = payload {
            return Err(build_err(
                context,
                "`complete` applies only to unitary machine types",
            ));
        }
        let m = self.complex_matrix(payload, context)?;
        let mut out = RealMatrix::zeros(self.n(), self.n());
        for r in 0..self.n() {
            for c in 0..self.n() {
                let z = m.get(r, c);
                if z.im != 0.0 {
                    return Err(build_err(
                        context,
                        format!("entry ({r}, {c}) has a nonzero imaginary part"),
                    ));
                }
                out.set(r, c, z.re);
            }
        }
        Ok(out)
    }

    fn real_vector(&self, entries: &[String], context: &str) -> Result<Vec<f64>, FormatError> {
        entries
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let z = self.eval_entry(text, context)?;
                if z.im != 0.0 {
                    return Err(build_err(
                        context,
                        format!("entry {i} has a nonzero imaginary part"),
                    ));
                }
                Ok(z.re)
            })
            .collect()
    }

    /// Collect one matrix per tape symbol out of the Matrix blocks,
    /// rejecting foreign block kinds.
    fn matrix_per_tape_symbol<T>(
        &self,
        build: impl Fn(&Payload, &str) -> Result<T, FormatError>,
    ) -> Result<SymbolMap<T>, FormatError> {
        let mut cent: Option<T> = None;
        let mut dollar: Option<T> = None;
        let mut per_input: Vec<Option<T>> = (0..self.alphabet.len()).map(|_| None).collect();
        for block in &self.file.blocks {
            match block {
                Block::Matrix { symbol, payload } => {
                    let context = format!("matrix for '{symbol}'");
                    let m = build(payload, &context)?;
                    match symbol {
                        SymSpec::Cent => cent = Some(m),
                        SymSpec::Dollar => dollar = Some(m),
                        SymSpec::Input(c) => {
                            let i = self.alphabet.index_of(*c).expect("parser checked symbol");
                            per_input[i] = Some(m);
                        }
                    }
                }
                Block::Kraus { .. } => {
                    return Err(build_err(
                        format!("{} machine", self.file.machine_type.keyword()),
                        "kraus blocks belong to rt-qfa files",
                    ));
                }
                Block::InitialVector(_) | Block::FinalVector(_) => {
                    return Err(build_err(
                        format!("{} machine", self.file.machine_type.keyword()),
                        "vector blocks belong to gfa files",
                    ));
                }
            }
        }
        let cent = cent.ok_or_else(|| build_err("machine", "missing matrix block for 'cent'"))?;
        let dollar =
            dollar.ok_or_else(|| build_err("machine", "missing matrix block for 'dollar'"))?;
        let per_input = per_input
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                m.ok_or_else(|| {
                    build_err(
                        "machine",
                        format!("missing matrix block for '{}'", self.alphabet.symbols()[i]),
                    )
                })
            })
            .collect::<Result<Vec<T>, FormatError>>()?;
        Ok(SymbolMap {
            cent,
            dollar,
            per_input,
        })
    }

    fn build_rtpfa(self) -> Result<Machine, FormatError> {
        let transitions = self.matrix_per_tape_symbol(|p, ctx| self.real_matrix(p, ctx))?;
        let accepting = self
            .file
            .states
            .iter()
            .map(|s| s.kind == StateKind::Accepting)
            .collect();
        Ok(Machine::RtPfa(RtPfa {
            state_count: self.n(),
            alphabet: self.alphabet.clone(),
            transitions,
            initial: self.initial_index(),
            accepting,
        }))
    }

    fn build_gfa(self) -> Result<Machine, FormatError> {
        let n = self.n();
        let mut per_input: Vec<Option<RealMatrix>> =
            (0..self.alphabet.len()).map(|_| None).collect();
        let mut initial_vector: Option<Vec<f64>> = None;
        let mut final_functional: Option<Vec<f64>> = None;
        for block in &self.file.blocks {
            match block {
                Block::Matrix { symbol, payload } => match symbol {
                    SymSpec::Input(c) => {
                        let i = self.alphabet.index_of(*c).expect("parser checked symbol");
                        let context = format!("matrix for '{c}'");
                        per_input[i] = Some(self.real_matrix(payload, &context)?);
                    }
                    SymSpec::Cent | SymSpec::Dollar => {
                        return Err(build_err(
                            "gfa machine",
                            "gfa files take matrices for input symbols only; \
                             end-marker effects live in the vectors",
                        ));
                    }
                },
                Block::InitialVector(entries) => {
                    initial_vector = Some(self.real_vector(entries, "initial-vector")?);
                }
                Block::FinalVector(entries) => {
                    final_functional = Some(self.real_vector(entries, "final-vector")?);
                }
                Block::Kraus { .. } => {
                    return Err(build_err(
                        "gfa machine",
                        "kraus blocks belong to rt-qfa files",
                    ));
                }
            }
        }
        let per_input = per_input
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                m.ok_or_else(|| {
                    build_err(
                        "gfa machine",
                        format!("missing matrix block for '{}'", self.alphabet.symbols()[i]),
                    )
                })
            })
            .collect::<Result<Vec<RealMatrix>, FormatError>>()?;
        Ok(Machine::Gfa(Gfa {
            state_count: n,
            alphabet: self.alphabet.clone(),
            per_input,
            initial_vector: initial_vector
                .ok_or_else(|| build_err("gfa machine", "missing initial-vector block"))?,
            final_functional: final_functional
                .ok_or_else(|| build_err("gfa machine", "missing final-vector block"))?,
        }))
    }

    fn build_rtqfa(self) -> Result<Machine, FormatError> {
        let mut cent: Vec<ComplexMatrix> = Vec::new();
        let mut dollar: Vec<ComplexMatrix> = Vec::new();
        let mut per_input: Vec<Vec<ComplexMatrix>> =
            (0..self.alphabet.len()).map(|_| Vec::new()).collect();
        for block in &self.file.blocks {
            match block {
                Block::Kraus { symbol, payload } => {
                    let context = format!("kraus element for '{symbol}'");
                    let m = self.complex_matrix(payload, &context)?;
                    match symbol {
                        SymSpec::Cent => cent.push(m),
                        SymSpec::Dollar => dollar.push(m),
                        SymSpec::Input(c) => {
                            let i = self.alphabet.index_of(*c).expect("parser checked symbol");
                            per_input[i].push(m);
                        }
                    }
                }
                Block::Matrix { .. } => {
                    return Err(build_err(
                        "rt-qfa machine",
                        "rt-qfa transitions are kraus blocks, not matrix blocks",
                    ));
                }
                Block::InitialVector(_) | Block::FinalVector(_) => {
                    return Err(build_err(
                        "rt-qfa machine",
                        "vector blocks belong to gfa files",
                    ));
                }
            }
        }
        for (name, family) in [("cent", &cent), ("dollar", &dollar)] {
            if family.is_empty() {
                return Err(build_err(
                    "rt-qfa machine",
                    format!("no kraus block for '{name}'"),
                ));
            }
        }
        for (i, family) in per_input.iter().enumerate() {
            if family.is_empty() {
                return Err(build_err(
                    "rt-qfa machine",
                    format!("no kraus block for '{}'", self.alphabet.symbols()[i]),
                ));
            }
        }
        let accepting = self
            .file
            .states
            .iter()
            .map(|s| s.kind == StateKind::Accepting)
            .collect();
        Ok(Machine::RtQfa(RtQfa {
            state_count: self.n(),
            alphabet: self.alphabet.clone(),
            ops: SymbolMap {
                cent: SuperOp { kraus: cent },
                dollar: SuperOp { kraus: dollar },
                per_input: per_input
                    .into_iter()
                    .map(|kraus| SuperOp { kraus })
                    .collect(),
            },
            initial: self.initial_index(),
            accepting,
        }))
    }

    fn build_rtkwqfa(self) -> Result<Machine, FormatError> {
        let unitaries = self.matrix_per_tape_symbol(|p, ctx| self.complex_matrix(p, ctx))?;
        let kinds = self.file.states.iter().map(|s| s.kind).collect();
        Ok(Machine::RtKwqfa(RtKwqfa {
            state_count: self.n(),
            alphabet: self.alphabet.clone(),
            unitaries,
            initial: self.initial_index(),
            kinds,
        }))
    }

    fn build_twoway(self, one_way: bool) -> Result<Machine, FormatError> {
        let unitaries = self.matrix_per_tape_symbol(|p, ctx| self.complex_matrix(p, ctx))?;
        let kinds = self.file.states.iter().map(|s| s.kind).collect();
        let moves = self
            .file
            .states
            .iter()
            .map(|s| s.direction.expect("parser requires directions"))
            .collect();
        let names = self.file.states.iter().map(|s| s.name.clone()).collect();
        Ok(Machine::TwoWay(TwoWayKwqfa {
            state_count: self.n(),
            alphabet: self.alphabet.clone(),
            unitaries,
            moves,
            initial: self.initial_index(),
            kinds,
            names,
            one_way,
        }))
    }
}

/// Parse and build in one step.
pub fn load_machine(text: &str) -> Result<Machine, FormatError> {
    to_machine(&parse_machine_file(text)?)
}

fn generic_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

fn dense_from_complex(m: &ComplexMatrix) -> Payload {
    Payload::Dense(
        (0..m.rows)
            .map(|r| (0..m.cols).map(|c| format_complex(m.get(r, c))).collect())
            .collect(),
    )
}

fn dense_from_real(m: &RealMatrix) -> Payload {
    Payload::Dense(
        (0..m.rows)
            .map(|r| {
                (0..m.cols)
                    .map(|c| format_complex(Complex64::new(m.get(r, c), 0.0)))
                    .collect()
            })
            .collect(),
    )
}

fn tape_blocks<'a, T>(map: &'a SymbolMap<T>, alphabet: &Alphabet) -> Vec<(SymSpec, &'a T)> {
    let mut out = vec![(SymSpec::Cent, &map.cent)];
    for (i, m) in map.per_input.iter().enumerate() {
        out.push((SymSpec::Input(alphabet.symbols()[i]), m));
    }
    out.push((SymSpec::Dollar, &map.dollar));
    out
}

/// Render a machine back into a document. Amplitudes become decimal
/// expressions that evaluate to exactly the machine's doubles, so the
/// document reloads to a numerically identical machine.
pub fn from_machine(machine: &Machine) -> MachineFile {
    match machine {
        Machine::RtPfa(m) => {
            let states = generic_names(m.state_count)
                .into_iter()
                .zip(&m.accepting)
                .map(|(name, &acc)| StateDecl {
                    name,
                    kind: if acc {
                        StateKind::Accepting
                    } else {
                        StateKind::Nonhalting
                    },
                    direction: None,
                })
                .collect::<Vec<_>>();
            MachineFile {
                machine_type: MachineType::RtPfa,
                alphabet: m.alphabet.symbols().to_vec(),
                initial: Some(states[m.initial].name.clone()),
                states,
                blocks: tape_blocks(&m.transitions, &m.alphabet)
                    .into_iter()
                    .map(|(symbol, mat)| Block::Matrix {
                        symbol,
                        payload: dense_from_real(mat),
                    })
                    .collect(),
            }
        }
        Machine::Gfa(m) => {
            let states = generic_names(m.state_count)
                .into_iter()
                .map(|name| StateDecl {
                    name,
                    kind: StateKind::Nonhalting,
                    direction: None,
                })
                .collect();
            let mut blocks = vec![
                Block::InitialVector(
                    m.initial_vector
                        .iter()
                        .map(|&v| format_complex(Complex64::new(v, 0.0)))
                        .collect(),
                ),
                Block::FinalVector(
                    m.final_functional
                        .iter()
                        .map(|&v| format_complex(Complex64::new(v, 0.0)))
                        .collect(),
                ),
            ];
            for (i, mat) in m.per_input.iter().enumerate() {
                blocks.push(Block::Matrix {
                    symbol: SymSpec::Input(m.alphabet.symbols()[i]),
                    payload: dense_from_real(mat),
                });
            }
            MachineFile {
                machine_type: MachineType::Gfa,
                alphabet: m.alphabet.symbols().to_vec(),
                states,
                initial: None,
                blocks,
            }
        }
        Machine::RtQfa(m) => {
            let states = generic_names(m.state_count)
                .into_iter()
                .zip(&m.accepting)
                .map(|(name, &acc)| StateDecl {
                    name,
                    kind: if acc {
                        StateKind::Accepting
                    } else {
                        StateKind::Nonhalting
                    },
                    direction: None,
                })
                .collect::<Vec<_>>();
            let mut blocks = Vec::new();
            for (symbol, op) in tape_blocks(&m.ops, &m.alphabet) {
                for element in &op.kraus {
                    blocks.push(Block::Kraus {
                        symbol,
                        payload: dense_from_complex(element),
                    });
                }
            }
            MachineFile {
                machine_type: MachineType::RtQfa,
                alphabet: m.alphabet.symbols().to_vec(),
                initial: Some(states[m.initial].name.clone()),
                states,
                blocks,
            }
        }
        Machine::RtKwqfa(m) => {
            let states = generic_names(m.state_count)
                .into_iter()
                .zip(&m.kinds)
                .map(|(name, &kind)| StateDecl {
                    name,
                    kind,
                    direction: None,
                })
                .collect::<Vec<_>>();
            MachineFile {
                machine_type: MachineType::RtKwqfa,
                alphabet: m.alphabet.symbols().to_vec(),
                initial: Some(states[m.initial].name.clone()),
                states,
                blocks: tape_blocks(&m.unitaries, &m.alphabet)
                    .into_iter()
                    .map(|(symbol, mat)| Block::Matrix {
                        symbol,
                        payload: dense_from_complex(mat),
                    })
                    .collect(),
            }
        }
        Machine::TwoWay(m) => {
            let states = m
                .names
                .iter()
                .zip(&m.kinds)
                .zip(&m.moves)
                .map(|((name, &kind), &mv)| StateDecl {
                    name: name.clone(),
                    kind,
                    direction: Some(mv),
                })
                .collect::<Vec<_>>();
            MachineFile {
                machine_type: if m.one_way {
                    MachineType::Kwqfa1Way
                } else {
                    MachineType::Kwqfa2Way
                },
                alphabet: m.alphabet.symbols().to_vec(),
                initial: Some(m.names[m.initial].clone()),
                states,
                blocks: tape_blocks(&m.unitaries, &m.alphabet)
                    .into_iter()
                    .map(|(symbol, mat)| Block::Matrix {
                        symbol,
                        payload: dense_from_complex(mat),
                    })
                    .collect(),
            }
        }
    }
}

/// Serialize a document in canonical layout.
pub fn render_machine_file(file: &MachineFile) -> String {
    let mut out = String::new();
    out.push_str(&format!("type {}\n", file.machine_type.keyword()));
    out.push_str("alphabet");
    for c in &file.alphabet {
        out.push(' ');
        out.push(*c);
    }
    out.push_str("\n\n");
    for st in &file.states {
        out.push_str(&format!("state {} {}", st.name, kind_keyword(st.kind)));
        if let Some(mv) = st.direction {
            out.push(' ');
            out.push_str(direction_keyword(mv));
        }
        out.push('\n');
    }
    if let Some(initial) = &file.initial {
        out.push_str(&format!("initial {initial}\n"));
    }
    for block in &file.blocks {
        out.push('\n');
        match block {
            Block::Matrix { symbol, payload } | Block::Kraus { symbol, payload } => {
                let keyword = if matches!(block, Block::Matrix { .. }) {
                    "matrix"
                } else {
                    "kraus"
                };
                match payload {
                    Payload::Dense(rows) => {
                        out.push_str(&format!("{keyword} {symbol} dense\n"));
                        for row in rows {
                            out.push_str(&row.join(", "));
                            out.push('\n');
                        }
                    }
                    Payload::Sparse { entries, complete } => {
                        out.push_str(&format!(
                            "{keyword} {symbol} sparse{}\n",
                            if *complete { " complete" } else { "" }
                        ));
                        for e in entries {
                            out.push_str(&format!("{} {} {}\n", e.from, e.to, e.amp));
                        }
                    }
                }
                out.push_str("end\n");
            }
            Block::InitialVector(entries) => {
                out.push_str("initial-vector\n");
                out.push_str(&entries.join(", "));
                out.push_str("\nend\n");
            }
            Block::FinalVector(entries) => {
                out.push_str("final-vector\n");
                out.push_str(&entries.join(", "));
                out.push_str("\nend\n");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::run_rtpfa;
    use crate::quantum_rt::run_rtqfa;
    use crate::random;
    use crate::twoway::run_twoway_default;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const COIN: &str = "\
type rt-pfa
alphabet a b

# A fair coin on 'a'; 'b' does nothing.
state heads nonhalting
state tails accepting
initial heads

matrix cent dense
1, 0
0, 1
end

matrix a dense
1/2, 0
1/2, 1
end

matrix b dense
1, 0
0, 1
end

matrix dollar dense
1, 0
0, 1
end
";

    #[test]
    fn rtpfa_file_parses_and_runs() {
        let file = parse_machine_file(COIN).unwrap();
        assert_eq!(file.machine_type, MachineType::RtPfa);
        assert_eq!(file.alphabet, vec!['a', 'b']);
        assert_eq!(file.initial.as_deref(), Some("heads"));
        let Machine::RtPfa(m) = to_machine(&file).unwrap() else {
            panic!("expected an rt-pfa");
        };
        assert_eq!(m.state_count, 2);
        assert_eq!(m.accepting, vec![false, true]);
        assert!((run_rtpfa(&m, "a").unwrap() - 0.5).abs() <= 1e-15);
        assert!((run_rtpfa(&m, "ab").unwrap() - 0.5).abs() <= 1e-15);
        assert!((run_rtpfa(&m, "aa").unwrap() - 0.75).abs() <= 1e-15);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let noisy = COIN.replace("matrix a dense", "matrix a dense   # coin flip\n\n");
        let Machine::RtPfa(m) = load_machine(&noisy).unwrap() else {
            panic!("expected an rt-pfa");
        };
        assert!((run_rtpfa(&m, "aa").unwrap() - 0.75).abs() <= 1e-15);
    }

    #[test]
    fn sparse_complete_builds_a_unitary_and_orders_differ_only_off_spec() {
        let text = "\
type kwqfa-1way
alphabet a

state q0 nonhalting right
state acc accepting stay
state rej rejecting stay
initial q0

matrix cent sparse complete
q0 q0 1
end

matrix a sparse complete
q0 acc 1/sqrt(2)
q0 rej 1/sqrt(2)
end

matrix dollar sparse complete
q0 acc 1
end
";
        let file = parse_machine_file(text).unwrap();
        let asc = to_machine_with_order(&file, BasisOrder::Ascending).unwrap();
        let desc = to_machine_with_order(&file, BasisOrder::Descending).unwrap();
        let (Machine::TwoWay(a), Machine::TwoWay(d)) = (&asc, &desc) else {
            panic!("expected two-way machines");
        };
        for m in [a, d] {
            m.validate().unwrap();
            let u = m.unitaries.per_input[0].clone();
            let gram = u.dagger().mul(&u).unwrap();
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(3)) <= 1e-12);
        }
        // Specified column agrees between orders; completion columns may not.
        for r in 0..3 {
            assert_eq!(
                a.unitaries.per_input[0].get(r, 0),
                d.unitaries.per_input[0].get(r, 0)
            );
        }
        let ra = run_twoway_default(a, "a").unwrap();
        let rd = run_twoway_default(d, "a").unwrap();
        assert!((ra.p_acc - rd.p_acc).abs() <= 1e-12);
        assert!((ra.p_acc - 0.5).abs() <= 1e-12);

        // The unspecified-column report names the states without sparse rows.
        let mut completed = file.completed_columns();
        completed.sort();
        assert!(completed.contains(&("acc".to_string(), "a".to_string())));
        assert!(!completed.contains(&("q0".to_string(), "dollar".to_string())));
        assert!(completed.contains(&("rej".to_string(), "cent".to_string())));
    }

    #[test]
    fn conflicting_specified_columns_surface_the_inner_product() {
        let text = "\
type kwqfa-1way
alphabet a

state q0 nonhalting right
state q1 nonhalting right
initial q0

matrix cent sparse complete
q0 q0 1
q1 q0 1
end

matrix a sparse complete
q0 q0 1
end

matrix dollar sparse complete
q0 q0 1
end
";
        let err = load_machine(text).unwrap_err();
        match err {
            FormatError::Build { context, message } => {
                assert_eq!(context, "matrix for 'cent'");
                assert!(message.contains("not orthonormal"), "message: {message}");
            }
            other => panic!("expected a build error, got {other:?}"),
        }
    }

    #[test]
    fn gfa_files_carry_vectors_instead_of_initial() {
        let text = "\
type gfa
alphabet a

state q0 nonhalting
state q1 nonhalting

initial-vector
1, 0
end

final-vector
0, 1
end

matrix a dense
0, 1
1, 0
end
";
        let Machine::Gfa(g) = load_machine(text).unwrap() else {
            panic!("expected a gfa");
        };
        assert_eq!(crate::classical::run_gfa(&g, "").unwrap(), 0.0);
        assert_eq!(crate::classical::run_gfa(&g, "a").unwrap(), 1.0);
        assert_eq!(crate::classical::run_gfa(&g, "aa").unwrap(), 0.0);
    }

    #[test]
    fn rtqfa_kraus_blocks_accumulate_per_symbol() {
        let s = "1/sqrt(2)";
        let text = format!(
            "\
type rt-qfa
alphabet a

state q0 nonhalting
state q1 accepting
initial q0

kraus cent dense
1, 0
0, 1
end

kraus a dense
{s}, 0
0, {s}
end

kraus a dense
0, {s}
{s}, 0
end

kraus dollar dense
1, 0
0, 1
end
"
        );
        let Machine::RtQfa(m) = load_machine(&text).unwrap() else {
            panic!("expected an rt-qfa");
        };
        assert_eq!(m.ops.per_input[0].kraus.len(), 2);
        m.validate().unwrap();
        assert!((run_rtqfa(&m, "a").unwrap() - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases: &[(&str, usize, &str)] = &[
            ("alphabet a\n", 1, "first directive must be `type`"),
            ("type rt-pfa\nstate q0 nonhalting\n", 2, "second directive must be `alphabet`"),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\nstate q0 accepting\n",
                4,
                "duplicate state name",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q9\n",
                4,
                "unknown initial state",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting right\n",
                3,
                "takes no head direction",
            ),
            (
                "type kwqfa-2way\nalphabet a\nstate q0 nonhalting\n",
                3,
                "requires a head direction",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q0\nmatrix a dense\n2,\n",
                6,
                "row has 2 entries, expected 1",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q0\nmatrix a dense\n1/\nend\n",
                6,
                "bad amplitude expression",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q0\nmatrix z dense\n",
                5,
                "not in the alphabet",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q0\nmatrix a sparse\nq0 q7 1\n",
                6,
                "unknown state",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q0\nmatrix a dense\n1\n",
                5,
                "missing its `end` line",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q0\nmatrix a dense complete\n1\nend\n",
                5,
                "`complete` applies only to sparse matrix blocks",
            ),
            (
                "type rt-pfa\nalphabet a a\n",
                2,
                "appears more than once",
            ),
            (
                "type gfa\nalphabet a\nstate q0 nonhalting\ninitial q0\n",
                4,
                "use an `initial-vector` block",
            ),
            (
                "type gfa\nalphabet a\nstate q0 accepting\n",
                3,
                "gfa states carry no halting kind",
            ),
            (
                "type rt-pfa\nalphabet a\nstate q0 nonhalting\ninitial q0\nmatrix a sparse\nq0 q0 1\nq0 q0 1/2\nend\n",
                7,
                "duplicate sparse entry",
            ),
        ];
        for (text, want_line, want_msg) in cases {
            let err = parse_machine_file(text).unwrap_err();
            match err {
                FormatError::Parse { line, message } => {
                    assert_eq!(line, *want_line, "for input {text:?}: {message}");
                    assert!(
                        message.contains(want_msg),
                        "for input {text:?}: expected {want_msg:?} in {message:?}"
                    );
                }
                other => panic!("expected a parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn missing_symbol_block_is_a_build_error() {
        let text = "\
type rt-pfa
alphabet a b

state q0 nonhalting
initial q0

matrix cent dense
1
end

matrix a dense
1
end

matrix dollar dense
1
end
";
        let err = load_machine(text).unwrap_err();
        assert!(err.to_string().contains("missing matrix block for 'b'"));
    }

    #[test]
    fn imaginary_entries_are_rejected_for_stochastic_machines() {
        let text = COIN.replace("1/2, 0\n1/2, 1", "1/2, 0\n1/2, i");
        let err = load_machine(&text).unwrap_err();
        assert!(err.to_string().contains("nonzero imaginary part"));
    }

    fn assert_same_matrix(a: &ComplexMatrix, b: &ComplexMatrix) {
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.cols, b.cols);
        for r in 0..a.rows {
            for c in 0..a.cols {
                assert_eq!(a.get(r, c), b.get(r, c), "entry ({r}, {c})");
            }
        }
    }

    #[test]
    fn serialization_round_trips_every_machine_type_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alphabet = Alphabet::ab();

        let pfa = random::random_rtpfa(&mut rng, 3, &alphabet);
        let qfa = random::random_rtqfa(&mut rng, 3, 2, &alphabet);
        let kw = random::random_rtkwqfa(&mut rng, 2, 1, 1, &alphabet);
        let machines = vec![
            Machine::RtPfa(pfa),
            Machine::RtQfa(qfa),
            Machine::RtKwqfa(kw),
        ];
        for machine in &machines {
            let text = render_machine_file(&from_machine(machine));
            let reloaded = load_machine(&text).unwrap();
            match (machine, &reloaded) {
                (Machine::RtPfa(a), Machine::RtPfa(b)) => {
                    assert_eq!(a.accepting, b.accepting);
                    assert_eq!(a.initial, b.initial);
                    for (sa, sb) in a.transitions.iter_tape().zip(b.transitions.iter_tape()) {
                        for r in 0..a.state_count {
                            for c in 0..a.state_count {
                                assert_eq!(sa.1.get(r, c), sb.1.get(r, c));
                            }
                        }
                    }
                }
                (Machine::RtQfa(a), Machine::RtQfa(b)) => {
                    assert_eq!(a.accepting, b.accepting);
                    for (sa, sb) in a.ops.iter_tape().zip(b.ops.iter_tape()) {
                        assert_eq!(sa.1.kraus.len(), sb.1.kraus.len());
                        for (ea, eb) in sa.1.kraus.iter().zip(&sb.1.kraus) {
                            assert_same_matrix(ea, eb);
                        }
                    }
                }
                (Machine::RtKwqfa(a), Machine::RtKwqfa(b)) => {
                    assert_eq!(a.kinds, b.kinds);
                    for (sa, sb) in a.unitaries.iter_tape().zip(b.unitaries.iter_tape()) {
                        assert_same_matrix(sa.1, sb.1);
                    }
                }
                _ => panic!("machine type changed across round trip"),
            }
        }
    }

    #[test]
    fn gfa_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let qfa = random::random_rtqfa(&mut rng, 2, 2, &Alphabet::ab());
        let gfa = crate::convert::rtqfa_to_gfa(&qfa).unwrap();
        let text = render_machine_file(&from_machine(&Machine::Gfa(gfa.clone())));
        let Machine::Gfa(reloaded) = load_machine(&text).unwrap() else {
            panic!("expected a gfa");
        };
        assert_eq!(gfa.initial_vector, reloaded.initial_vector);
        assert_eq!(gfa.final_functional, reloaded.final_functional);
        for (a, b) in gfa.per_input.iter().zip(&reloaded.per_input) {
            for r in 0..a.rows {
                for c in 0..a.cols {
                    assert_eq!(a.get(r, c), b.get(r, c));
                }
            }
        }
    }

    #[test]
    fn two_way_round_trip_preserves_names_moves_and_runs() {
        let s = "1/sqrt(2)";
        let text = format!(
            "\
type kwqfa-2way
alphabet a b

state start nonhalting right
state back nonhalting left
state yes accepting stay
state no rejecting stay
initial start

matrix cent sparse complete
start start {s}
start back -{s}
end

matrix a sparse complete
start yes 1
back no 1
end

matrix b sparse complete
start no 1
back yes 1
end

matrix dollar sparse complete
start yes {s}
start no {s}
end
"
        );
        let Machine::TwoWay(m) = load_machine(&text).unwrap() else {
            panic!("expected a two-way machine");
        };
        assert_eq!(m.names, ["start", "back", "yes", "no"]);
        assert_eq!(
            m.moves,
            vec![
                HeadMove::Right,
                HeadMove::Left,
                HeadMove::Stay,
                HeadMove::Stay
            ]
        );
        assert!(!m.one_way);
        let rendered = render_machine_file(&from_machine(&Machine::TwoWay(m.clone())));
        let Machine::TwoWay(back) = load_machine(&rendered).unwrap() else {
            panic!("expected a two-way machine");
        };
        assert_eq!(back.names, m.names);
        assert_eq!(back.moves, m.moves);
        assert_eq!(back.kinds, m.kinds);
        for (sa, sb) in m.unitaries.iter_tape().zip(back.unitaries.iter_tape()) {
            assert_same_matrix(sa.1, sb.1);
        }
    }
}
