use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rehearsal_core::message::{read_jsonl, Message};
use rehearsal_core::stats::{LabeledUtterance, RankRecord};
use rehearsal_core::strategy::parse_strategy;
use rehearsal_core::Sender;
use serde::Deserialize;

use crate::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn invalid(path: &Path, detail: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {detail}", path.display()))
}

pub fn transcript(path: &Path) -> Result<Vec<Message>, CliError> {
    read_jsonl(open(path)?).map_err(|e| invalid(path, e))
}

fn is_transcript(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

/// Numbers from a text or CSV file (one or more per line, a non-numeric
/// header line is skipped), or the simulated-message scores of a transcript.
pub fn numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    if is_transcript(path) {
        return Ok(transcript(path)?
            .iter()
            .filter(|m| m.sender == Sender::Simulation)
            .filter_map(|m| m.score)
            .map(|s| f64::from(s.value()))
            .collect());
    }
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| invalid(path, e))?;
        let tokens: Vec<&str> = line
            .split([',', ' ', '\t'])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .collect();
        let parsed: Result<Vec<f64>, _> = tokens.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(values) => out.extend(values),
            Err(_) if i == 0 => {}
            Err(e) => return Err(invalid(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

pub fn list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Input(format!("{t:?}: {e}")))
        })
        .collect()
}

/// Long-format CSV with `group,value` columns; groups keep first-seen order.
pub fn groups(path: &Path) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    #[derive(Deserialize)]
    struct Row {
        group: String,
        value: f64,
    }
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for row in csv::Reader::from_reader(open(path)?).deserialize() {
        let row: Row = row.map_err(|e| invalid(path, e))?;
        match out.iter_mut().find(|(g, _)| *g == row.group) {
            Some((_, values)) => values.push(row.value),
            None => out.push((row.group, vec![row.value])),
        }
    }
    Ok(out)
}

/// CSV with `text,gold,predicted`; `predicted` may be blank.
pub fn labeled(path: &Path) -> Result<Vec<LabeledUtterance>, CliError> {
    #[derive(Deserialize)]
    struct Row {
        text: String,
        gold: String,
        #[serde(default)]
        predicted: Option<String>,
    }
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(open(path)?).deserialize() {
        let row: Row = row.map_err(|e| invalid(path, e))?;
        let gold = parse_strategy(&row.gold).map_err(|e| invalid(path, e))?;
        let predicted = match row.predicted.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(p) => Some(parse_strategy(p).map_err(|e| invalid(path, e))?),
        };
        out.push(LabeledUtterance {
            text: row.text,
            gold,
            predicted,
        });
    }
    Ok(out)
}

/// Two-column CSV of rater labels, `a,b`.
pub fn label_pairs(path: &Path) -> Result<(Vec<String>, Vec<String>), CliError> {
    #[derive(Deserialize)]
    struct Row {
        a: String,
        b: String,
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for row in csv::Reader::from_reader(open(path)?).deserialize() {
        let row: Row = row.map_err(|e| invalid(path, e))?;
        a.push(row.a.trim().to_string());
        b.push(row.b.trim().to_string());
    }
    Ok((a, b))
}

pub fn records(path: &Path) -> Result<Vec<RankRecord>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| invalid(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RankRecord = serde_json::from_str(&line)
            .map_err(|e| invalid(path, format!("line {}: {e}", i + 1)))?;
        if record.item_ids.len() != record.ranks.len() {
            return Err(invalid(path, format!("line {}: ids and ranks differ in length", i + 1)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn lines(path: &Path) -> Result<Vec<String>, CliError> {
    open(path)?
        .lines()
        .map(|l| l.map_err(|e| invalid(path, e)))
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .collect()
}

pub fn worksheet_ranks(path: &Path) -> Result<Vec<(usize, usize, Option<u32>)>, CliError> {
    rehearsal_core::ablation::read_ranks(open(path)?).map_err(|e| invalid(path, e))
}
