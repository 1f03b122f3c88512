//! Text forms of the alignment tables and dictionaries.
//!
//! Lines are tab-separated and sorted:
//! `src<TAB>tgt<TAB>prob` for lexical tables (the empty source word written
//! as `NULL`), `i<TAB>j<TAB>l<TAB>m<TAB>prob` for alignment tables (the
//! empty source word at `i = -1`) and `src<TAB>tgt` for dictionaries.

use std::path::Path;

use super::dictionary::Dictionary;
use super::ibm::{ATable, TTable, NULL_SOURCE};
use crate::corpus::{read_lines, Vocabulary};
use crate::error::{Error, Result};
use crate::nncore::checkpoint::write_atomic;

pub const NULL_TOKEN: &str = "NULL";

fn token(v: &Vocabulary, id: u32) -> Result<&str> {
    v.token(id).ok_or(Error::IndexOutOfRange {
        index: id as usize,
        size: v.len(),
    })
}

fn sorted_text(mut lines: Vec<String>) -> String {
    lines.sort_unstable();
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

fn fields<'a>(line: &'a str, n: usize, lineno: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != n {
        return Err(Error::Parse(format!(
            "line {}: expected {n} fields, found {}",
            lineno + 1,
            f.len()
        )));
    }
    Ok(f)
}

fn number<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", lineno + 1)))
}

pub fn ttable_to_text(t: &TTable, src: &Vocabulary, tgt: &Vocabulary) -> Result<String> {
    let mut lines = Vec::new();
    for (s, row) in t.rows() {
        let s = if s == NULL_SOURCE { NULL_TOKEN } else { token(src, s)? };
        for (&u, &p) in row {
            lines.push(format!("{s}\t{}\t{p}", token(tgt, u)?));
        }
    }
    Ok(sorted_text(lines))
}

pub fn ttable_from_text(text: &str, src: &Vocabulary, tgt: &Vocabulary) -> Result<TTable> {
    let mut t = TTable::default();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let f = fields(line, 3, k)?;
        let s = if f[0] == NULL_TOKEN { NULL_SOURCE } else { src.id(f[0]) };
        t.insert(s, tgt.id(f[1]), number(f[2], k)?);
    }
    Ok(t)
}

pub fn atable_to_text(a: &ATable) -> String {
    let mut lines = Vec::new();
    for ((j, l, m), probs) in a.slices() {
        for (slot, p) in probs.iter().enumerate() {
            lines.push(format!("{}\t{j}\t{l}\t{m}\t{p}", slot as i64 - 1));
        }
    }
    sorted_text(lines)
}

pub fn atable_from_text(text: &str) -> Result<ATable> {
    let mut slices: std::collections::BTreeMap<(usize, usize, usize), Vec<f64>> = Default::default();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let f = fields(line, 5, k)?;
        let i: i64 = number(f[0], k)?;
        let (j, l, m): (usize, usize, usize) = (number(f[1], k)?, number(f[2], k)?, number(f[3], k)?);
        let p: f64 = number(f[4], k)?;
        let slot = usize::try_from(i + 1)
            .ok()
            .filter(|&s| s <= l)
            .ok_or_else(|| Error::Parse(format!("line {}: position {i} outside sentence of length {l}", k + 1)))?;
        slices.entry((j, l, m)).or_insert_with(|| vec![0.0; l + 1])[slot] = p;
    }
    let mut a = ATable::uniform();
    for ((j, l, m), probs) in slices {
        a.insert_slice(j, l, m, probs);
    }
    Ok(a)
}

pub fn dictionary_to_text(d: &Dictionary, from: &Vocabulary, to: &Vocabulary) -> Result<String> {
    let lines = d
        .entries()
        .map(|(s, u)| Ok(format!("{}\t{}", token(from, s)?, token(to, u)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(sorted_text(lines))
}

pub fn dictionary_from_text(text: &str, from: &Vocabulary, to: &Vocabulary) -> Result<Dictionary> {
    let mut d = Dictionary::default();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let f = fields(line, 2, k)?;
        d.insert(from.id(f[0]), to.id(f[1]));
    }
    Ok(d)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

pub fn read_text(path: &Path) -> Result<String> {
    Ok(read_lines(path)?.join("\n"))
}
