//! Built-in machine fixtures and classical membership oracles for the
//! languages they recognize.
//!
//! The machines ship as definition files in the crate's `machines/`
//! directory and load through the standard parser, so they double as
//! format documentation. Loading is infallible by construction; a fixture
//! that fails to parse, build, or complete is a defect in this crate.

use crate::format::{parse_machine_file, to_machine_with_order, Machine, MachineFile};
use crate::linalg::BasisOrder;
use crate::twoway::TwoWayKwqfa;
use thiserror::Error;

/// Source text of the one-way machine for the prefix-sum language; see
/// [`lnh_machine`].
pub const LNH_SOURCE: &str = include_str!("../machines/lnh.qfa");

/// Source text of the two-way machine for the multiple-suffix language;
/// see [`lys_machine`].
pub const LYS_SOURCE: &str = include_str!("../machines/lys.qfa");

fn built_in(source: &str, order: BasisOrder) -> TwoWayKwqfa {
    let file = parse_machine_file(source).expect("built-in fixture parses");
    match to_machine_with_order(&file, order).expect("built-in fixture builds") {
        Machine::TwoWay(m) => m,
        _ => unreachable!("built-in fixtures are kwqfa files"),
    }
}

/// The 63-state one-way machine that accepts
/// `a^x b a^{y1} b ... a^{yt} b` (all runs nonempty) with probability
/// above 1/2 exactly when some prefix sum of the `y_i` equals `x`, and
/// with probability exactly 1/2 otherwise.
pub fn lnh_machine() -> TwoWayKwqfa {
    lnh_machine_with_order(BasisOrder::Ascending)
}

/// [`lnh_machine`] with an explicit completion order for the unspecified
/// transition columns. Both orders yield the same run behavior; the
/// variant exists to test exactly that.
pub fn lnh_machine_with_order(order: BasisOrder) -> TwoWayKwqfa {
    built_in(LNH_SOURCE, order)
}

/// The parsed document of the [`lnh_machine`] fixture, for audits of the
/// encoding itself.
pub fn lnh_file() -> MachineFile {
    parse_machine_file(LNH_SOURCE).expect("built-in fixture parses")
}

/// The 19-state two-way machine that accepts `a^{n-1} b a^{kn}` (n > 1,
/// k > 0) with probability above 1/2, and everything else with
/// probability at most 1/2.
pub fn lys_machine() -> TwoWayKwqfa {
    lys_machine_with_order(BasisOrder::Ascending)
}

/// [`lys_machine`] with an explicit completion order.
pub fn lys_machine_with_order(order: BasisOrder) -> TwoWayKwqfa {
    built_in(LYS_SOURCE, order)
}

/// The parsed document of the [`lys_machine`] fixture.
pub fn lys_file() -> MachineFile {
    parse_machine_file(LYS_SOURCE).expect("built-in fixture parses")
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("unknown oracle {0:?} (known: lnh, lys, lfre)")]
    Unknown(String),
}

/// A decidable membership predicate used as ground truth in scans.
#[derive(Debug, Clone, Copy)]
pub struct LanguageOracle {
    pub name: &'static str,
    predicate: fn(&str) -> bool,
}

impl LanguageOracle {
    pub fn accepts(&self, w: &str) -> bool {
        (self.predicate)(w)
    }
}

/// Names accepted by [`oracle`].
pub const ORACLE_NAMES: [&str; 3] = ["lnh", "lys", "lfre"];

/// Look up a membership oracle by name.
pub fn oracle(name: &str) -> Result<LanguageOracle, OracleError> {
    let predicate: fn(&str) -> bool = match name {
        "lnh" => is_lnh,
        "lys" => is_lys,
        "lfre" => is_lfre,
        _ => return Err(OracleError::Unknown(name.to_string())),
    };
    Ok(LanguageOracle {
        name: match name {
            "lnh" => "lnh",
            "lys" => "lys",
            _ => "lfre",
        },
        predicate,
    })
}

/// `a^x b a^{y1} b ... a^{yt} b` with `x, t, y_i >= 1` and
/// `y_1 + ... + y_k = x` for some `k <= t`.
fn is_lnh(w: &str) -> bool {
    if !w.ends_with('b') {
        return false;
    }
    let parts: Vec<&str> = w.split('b').collect();
    // The trailing 'b' leaves an empty final part; before it come the
    // runs a^x, a^{y1}, ..., a^{yt}.
    let runs = &parts[..parts.len() - 1];
    if runs.len() < 2 {
        return false;
    }
    if runs
        .iter()
        .any(|r| r.is_empty() || r.chars().any(|c| c != 'a'))
    {
        return false;
    }
    let x = runs[0].len();
    let mut sum = 0;
    for y in &runs[1..] {
        sum += y.len();
        if sum >= x {
            return sum == x;
        }
    }
    false
}

/// `a^{n-1} b a^{kn}` with `n > 1` and `k > 0`.
fn is_lys(w: &str) -> bool {
    let Some(bpos) = w.find('b') else {
        return false;
    };
    let prefix = &w[..bpos];
    let suffix = &w[bpos + 1..];
    if prefix.chars().any(|c| c != 'a') || suffix.chars().any(|c| c != 'a') {
        return false;
    }
    let n = prefix.len() + 1;
    let m = suffix.len();
    n > 1 && m > 0 && m.is_multiple_of(n)
}

/// `a^n b a^n` with `n >= 0`: one 'b' splitting two equal runs of 'a'.
fn is_lfre(w: &str) -> bool {
    let Some(bpos) = w.find('b') else {
        return false;
    };
    let prefix = &w[..bpos];
    let suffix = &w[bpos + 1..];
    prefix.chars().all(|c| c == 'a')
        && suffix.chars().all(|c| c == 'a')
        && prefix.len() == suffix.len()
}
