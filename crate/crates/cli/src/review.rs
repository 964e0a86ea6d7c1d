//! Expert selection of candidates.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use anyhow::Result;
use skilldesc::recommender::CandidateList;

use crate::Coded;

/// Parses a rank list such as `1,2,18` (commas or whitespace).
pub fn parse_selection(text: &str, available: usize) -> Result<BTreeSet<usize>> {
    let mut ranks = BTreeSet::new();
    for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        let rank: usize = tok.parse().map_err(|_| Coded::parse(format!("{tok:?} is not a rank")))?;
        if rank == 0 || rank > available {
            return Err(Coded::examples(format!("rank {rank} is out of range 1..={available}")));
        }
        ranks.insert(rank);
    }
    if ranks.is_empty() {
        return Err(Coded::examples("empty selection: a description needs at least one expression"));
    }
    Ok(ranks)
}

fn show(list: &CandidateList, selected: &BTreeSet<usize>, out: &mut impl Write) -> Result<()> {
    let width = list.iter().map(|c| c.rendering().len()).max().unwrap_or(0);
    for c in list {
        let mark = if selected.contains(&c.rank) { "x" } else { " " };
        writeln!(
            out,
            "[{mark}] {:>3}. {:<width$}  {:>7}%  len {}",
            c.rank,
            c.rendering(),
            c.accuracy.percent(),
            c.length
        )?;
    }
    Ok(())
}

/// Prompt loop: rank numbers toggle candidates, `w` confirms and returns
/// the selection, `q` or end of input abandons the review.
pub fn interactive(
    list: &CandidateList,
    input: &mut impl BufRead,
    out: &mut impl Write,
) -> Result<Option<BTreeSet<usize>>> {
    let mut selected = BTreeSet::new();
    let mut line = String::new();
    loop {
        show(list, &selected, out)?;
        write!(out, "toggle ranks, w = write, q = quit> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            return Ok(None);
        }
        match line.trim() {
            "q" | "quit" => return Ok(None),
            "w" | "write" => {
                if selected.is_empty() {
                    writeln!(out, "nothing selected")?;
                    continue;
                }
                write!(out, "write {} expression(s)? [y/N] ", selected.len())?;
                out.flush()?;
                line.clear();
                if input.read_line(&mut line)? == 0 {
                    return Ok(None);
                }
                if matches!(line.trim(), "y" | "Y" | "yes") {
                    return Ok(Some(selected));
                }
            }
            "" => {}
            text => match parse_selection(text, list.len()) {
                Ok(ranks) => {
                    for r in ranks {
                        if !selected.remove(&r) {
                            selected.insert(r);
                        }
                    }
                }
                Err(e) => writeln!(out, "{e}")?,
            },
        }
    }
}
