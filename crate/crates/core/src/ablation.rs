//! Blinded ablation worksheets: one reply per pipeline mode for every
//! scripted user turn, shuffled by a seeded permutation, and the ingest step
//! that maps human ranks back to conditions.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::debug;

use crate::message::{Message, ResolutionScore};
use crate::pipeline::{ConversationContext, Pipeline, PipelineError, PipelineMode};
use crate::scenario::Premise;
use crate::stats::RankRecord;

pub const SLOTS: usize = PipelineMode::ALL.len();

#[derive(Debug, Error)]
pub enum AblationError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("worksheet csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("no scripted user turns")]
    NoTurns,
    #[error("turn {turn_id} slot {slot} has no rank")]
    MissingRank { turn_id: usize, slot: usize },
    #[error("turn {turn_id} slot {slot} is outside the worksheet")]
    UnknownSlot { turn_id: usize, slot: usize },
    #[error("turn {turn_id} slot {slot} is ranked twice")]
    DuplicateSlot { turn_id: usize, slot: usize },
    #[error("rank must be a positive integer (turn {turn_id} slot {slot})")]
    InvalidRank { turn_id: usize, slot: usize },
}

pub type Result<T, E = AblationError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorksheetRow {
    pub turn_id: usize,
    pub slot: usize,
    pub user_message: String,
    pub reply: String,
    pub rank: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Worksheet {
    pub seed: u64,
    pub rows: Vec<WorksheetRow>,
}

/// Which mode is shown in each slot, per turn. Slot `i` of turn `t` shows
/// `permutations(seed, n)[t][i]`.
pub fn permutations(seed: u64, turns: usize) -> Vec<[PipelineMode; SLOTS]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..turns)
        .map(|_| {
            let mut modes = PipelineMode::ALL;
            modes.shuffle(&mut rng);
            modes
        })
        .collect()
}

/// Replays the scripted user turns, producing four blinded replies per turn.
/// The Full reply is the one carried forward as history.
pub fn run_ablation(
    pipeline: &Pipeline,
    premise: Premise,
    user_turns: &[String],
    seed: u64,
) -> Result<Worksheet> {
    if user_turns.is_empty() {
        return Err(AblationError::NoTurns);
    }
    let mut ctx = ConversationContext::new(premise);
    let mut opening = pipeline.respond(&ctx, PipelineMode::Full)?;
    opening.score = Some(ResolutionScore::MIN);
    ctx.history.push(opening);

    let perms = permutations(seed, user_turns.len());
    let mut rows = Vec::with_capacity(user_turns.len() * SLOTS);
    for (turn_id, (text, perm)) in user_turns.iter().zip(&perms).enumerate() {
        let mut user = Message::user(ctx.next_turn(), text.trim());
        user.strategy = Some(pipeline.classify(&ctx, &user)?);
        ctx.history.push(user);
        let replies: Vec<Result<Message, PipelineError>> = thread::scope(|scope| {
            let handles: Vec<_> = PipelineMode::ALL
                .iter()
                .map(|&mode| {
                    let ctx = &ctx;
                    scope.spawn(move || pipeline.respond(ctx, mode))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("reply branch panicked"))
                .collect()
        });
        let replies: BTreeMap<PipelineMode, Message> = PipelineMode::ALL
            .into_iter()
            .zip(replies)
            .map(|(mode, r)| r.map(|m| (mode, m)))
            .collect::<Result<_, _>>()?;
        debug!(turn_id, "ablation turn generated");
        for (slot, mode) in perm.iter().enumerate() {
            rows.push(WorksheetRow {
                turn_id,
                slot,
                user_message: text.trim().to_string(),
                reply: replies[mode].text.clone(),
                rank: None,
            });
        }
        ctx.history.push(replies[&PipelineMode::Full].clone());
    }
    Ok(Worksheet { seed, rows })
}

pub fn write_worksheet<W: Write>(writer: W, rows: &[WorksheetRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a ranked worksheet. Only `turn_id`, `slot` and `rank` are required.
pub fn read_ranks<R: Read>(reader: R) -> Result<Vec<(usize, usize, Option<u32>)>> {
    #[derive(Deserialize)]
    struct RankRow {
        turn_id: usize,
        slot: usize,
        rank: Option<u32>,
    }
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: RankRow = row?;
        out.push((row.turn_id, row.slot, row.rank));
    }
    Ok(out)
}

/// Joins human ranks back through the seeded permutation. Each record lists
/// the conditions in `PipelineMode::ALL` order.
pub fn ingest_ranks(rows: &[(usize, usize, Option<u32>)], seed: u64) -> Result<Vec<RankRecord>> {
    let turns = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let perms = permutations(seed, turns);
    let mut by_turn: BTreeMap<usize, [Option<u32>; SLOTS]> = BTreeMap::new();
    for &(turn_id, slot, rank) in rows {
        if slot >= SLOTS {
            return Err(AblationError::UnknownSlot { turn_id, slot });
        }
        let rank = rank.ok_or(AblationError::MissingRank { turn_id, slot })?;
        if rank == 0 {
            return Err(AblationError::InvalidRank { turn_id, slot });
        }
        let entry = &mut by_turn.entry(turn_id).or_default()[slot];
        if entry.replace(rank).is_some() {
            return Err(AblationError::DuplicateSlot { turn_id, slot });
        }
    }
    by_turn
        .into_iter()
        .map(|(turn_id, slots)| {
            let mut ranks = [0u32; SLOTS];
            for (slot, rank) in slots.iter().enumerate() {
                let rank = rank.ok_or(AblationError::MissingRank { turn_id, slot })?;
                let mode = perms[turn_id][slot];
                let idx = PipelineMode::ALL
                    .iter()
                    .position(|m| *m == mode)
                    .expect("mode is listed");
                ranks[idx] = rank;
            }
            Ok(RankRecord {
                item_ids: PipelineMode::ALL
                    .iter()
                    .map(|m| m.name().to_string())
                    .collect(),
                ranks: ranks.to_vec(),
            })
        })
        .collect()
}
