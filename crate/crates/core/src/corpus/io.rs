use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{normalize_source, Document};
use crate::error::{Error, Result};

/// One sentence pair per line, `source<TAB>target`. The source side is
/// normalised, the target is split on whitespace.
pub fn read_document<R: BufRead>(id: &str, input: R) -> Result<Document> {
    let mut pairs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (src, tgt) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(format!("{id} line {}", n + 1), "expected source<TAB>target"))?;
        pairs.push((
            normalize_source(src),
            tgt.split_whitespace().map(String::from).collect(),
        ));
    }
    Document::new(id, pairs).map_err(|_| Error::parse(id.to_string(), "document has no sentences"))
}

pub fn write_document<W: Write>(doc: &Document, mut out: W) -> Result<()> {
    for (s, t) in &doc.sentence_pairs {
        writeln!(out, "{}\t{}", s.join(" "), t.join(" "))?;
    }
    Ok(())
}

/// Reads every `*.tsv` file in `dir`, sorted by name; the id is the file stem.
pub fn read_documents(dir: &Path) -> Result<Vec<Document>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "tsv"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::parse(dir.display().to_string(), "no .tsv documents"));
    }
    paths
        .iter()
        .map(|p| {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            read_document(id, BufReader::new(fs::File::open(p)?))
        })
        .collect()
}

/// `id<TAB>b1 b2 …`, one document per line.
pub fn write_boundaries<W: Write>(entries: &[(String, Vec<usize>)], mut out: W) -> Result<()> {
    for (id, b) in entries {
        let list: Vec<String> = b.iter().map(usize::to_string).collect();
        writeln!(out, "{id}\t{}", list.join(" "))?;
    }
    Ok(())
}

pub fn read_boundaries<R: BufRead>(input: R) -> Result<Vec<(String, Vec<usize>)>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ctx = || format!("boundaries line {}", n + 1);
        let (id, list) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(ctx(), "expected id<TAB>indices"))?;
        let b = list
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|e| Error::parse(ctx(), e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.push((id.to_string(), b));
    }
    Ok(out)
}
