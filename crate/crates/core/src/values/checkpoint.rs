//! Line-oriented checkpoint format for [`ValueTables`].
//!
//! ```text
//! sparsecg-tables v1
//! n_actions 5
//! shared 1
//! entry_cap 5000000
//! u <tag> <code> <v0> <v1> ...
//! p <tag_i> <code_i> <tag_j> <code_j> <v00> <v01> ...
//! end
//! ```
//!
//! Values are written as the hexadecimal IEEE-754 bit pattern so a round trip
//! is bit-exact. Blocks are sorted by key, making the output deterministic.

use std::io::{BufRead, Write};

use super::{TableKey, ValueTables};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "sparsecg-tables v1";

fn write_values(out: &mut impl Write, vals: &[f64]) -> Result<()> {
    for v in vals {
        write!(out, " {:016x}", v.to_bits())?;
    }
    writeln!(out)?;
    Ok(())
}

pub fn write_checkpoint(tables: &ValueTables, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    writeln!(out, "n_actions {}", tables.n_actions())?;
    writeln!(out, "shared {}", u8::from(tables.shared()))?;
    writeln!(out, "entry_cap {}", tables.entry_cap())?;
    let mut utility: Vec<_> = tables.utility_entries().collect();
    utility.sort_unstable_by_key(|(k, _)| **k);
    for (k, v) in utility {
        write!(out, "u {} {}", k.tag, k.code)?;
        write_values(out, v)?;
    }
    let mut payoff: Vec<_> = tables.payoff_entries().collect();
    payoff.sort_unstable_by_key(|(k, _)| **k);
    for ((a, b), v) in payoff {
        write!(out, "p {} {} {} {}", a.tag, a.code, b.tag, b.code)?;
        write_values(out, v)?;
    }
    writeln!(out, "end")?;
    Ok(())
}

fn bad(line: usize, what: &str) -> Error {
    Error::Format(format!("line {line}: {what}"))
}

fn header_value(lines: &mut impl Iterator<Item = (usize, String)>, name: &str) -> Result<usize> {
    let (no, line) = lines.next().ok_or_else(|| Error::Format(format!("missing {name}")))?;
    line.strip_prefix(name)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| bad(no, &format!("expected `{name} <int>`")))
}

pub fn read_checkpoint(input: impl BufRead) -> Result<ValueTables> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter();
    match lines.next() {
        Some((_, l)) if l == CHECKPOINT_MAGIC => {}
        _ => return Err(Error::Format("missing checkpoint header".into())),
    }
    let n_actions = header_value(&mut lines, "n_actions")?;
    let shared = header_value(&mut lines, "shared")? == 1;
    let entry_cap = header_value(&mut lines, "entry_cap")?;
    let mut tables = ValueTables::with_cap(n_actions, shared, entry_cap)?;
    let mut ended = false;
    for (no, line) in lines.by_ref() {
        let mut parts = line.split_whitespace();
        let kind = parts.next();
        let ints = |parts: &mut std::str::SplitWhitespace<'_>, k: usize| -> Result<Vec<u64>> {
            (0..k)
                .map(|_| parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| bad(no, "bad key")))
                .collect()
        };
        let values = |parts: std::str::SplitWhitespace<'_>| -> Result<Vec<f64>> {
            parts
                .map(|p| u64::from_str_radix(p, 16).map(f64::from_bits).map_err(|_| bad(no, "bad value")))
                .collect()
        };
        match kind {
            Some("u") => {
                let k = ints(&mut parts, 2)?;
                tables.insert_utility_block(TableKey { tag: k[0], code: k[1] }, values(parts)?)?;
            }
            Some("p") => {
                let k = ints(&mut parts, 4)?;
                let key = (TableKey { tag: k[0], code: k[1] }, TableKey { tag: k[2], code: k[3] });
                tables.insert_payoff_block(key, values(parts)?)?;
            }
            Some("end") => {
                ended = true;
                break;
            }
            _ => return Err(bad(no, "unknown record")),
        }
    }
    if !ended || lines.next().is_some() {
        return Err(Error::Format("checkpoint is truncated or has trailing data".into()));
    }
    Ok(tables)
}
