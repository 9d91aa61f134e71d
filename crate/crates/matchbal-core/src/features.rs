//! Online player profiles and the match feature vector M = (t1, t2, m).
//!
//! Player counters accumulate match-by-match; team features are the mean
//! and population standard deviation of the member vectors (humans only);
//! the match vector concatenates both team blocks, per-feature absolute
//! and signed differences, matchmaking-time skill statistics, and the
//! human headcounts. Everything is ordered by [`FeatureSchema`] and
//! z-scored through [`Normalizer`] before reaching a model.

#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::simworld::{MatchRecord, PlayerId, PopulationConfig, TeamSide};
use crate::stats;

/// Role and action vocabulary the whole feature layer is keyed on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub roles: Vec<String>,
    pub actions: Vec<String>,
}

impl FeatureConfig {
    pub fn new(roles: Vec<String>, actions: Vec<String>) -> Self {
        FeatureConfig { roles, actions }
    }

    /// Per-player feature count: the three match-experience counters,
    /// count+ratio per role, count+average per action, and the two
    /// dropout counters.
    pub fn player_dim(&self) -> usize {
        5 + 2 * self.roles.len() + 2 * self.actions.len()
    }

    fn role_index(&self, role: &str) -> Option<usize> {
        self.roles.iter().position(|r| r == role)
    }

    fn action_index(&self, action: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == action)
    }
}

impl From<&PopulationConfig> for FeatureConfig {
    fn from(cfg: &PopulationConfig) -> Self {
        FeatureConfig::new(cfg.roles.clone(), cfg.actions.clone())
    }
}

/// Cumulative per-player counters, updated online as matches complete.
/// Ratios are always derived from the counters, so the bookkeeping
/// cannot drift.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub num_matches: u64,
    pub num_wins: u64,
    pub role_counts: Vec<u64>,
    pub action_counts: Vec<u64>,
    pub num_dropout: u64,
    /// Day of the most recent applied record, for ordering checks.
    pub last_day: Option<u32>,
}

impl PlayerProfile {
    pub fn new(cfg: &FeatureConfig) -> Self {
        PlayerProfile {
            num_matches: 0,
            num_wins: 0,
            role_counts: vec![0; cfg.roles.len()],
            action_counts: vec![0; cfg.actions.len()],
            num_dropout: 0,
            last_day: None,
        }
    }

    pub fn freq_wins(&self) -> f64 {
        ratio(self.num_wins, self.num_matches)
    }

    pub fn freq_role(&self, i: usize) -> f64 {
        ratio(self.role_counts[i], self.num_matches)
    }

    pub fn avg_action(&self, i: usize) -> f64 {
        if self.num_matches == 0 {
            0.0
        } else {
            self.action_counts[i] as f64 / self.num_matches as f64
        }
    }

    pub fn freq_dropout(&self) -> f64 {
        ratio(self.num_dropout, self.num_matches)
    }

    /// Fold one completed match into the counters. Records must arrive
    /// in non-decreasing day order for any given player.
    pub fn update(
        &mut self,
        record: &MatchRecord,
        player_id: PlayerId,
        cfg: &FeatureConfig,
    ) -> Result<()> {
        let (entry, my_score, opp_score) = find_player(record, player_id)?;
        if let Some(last) = self.last_day {
            if record.day_index < last {
                return Err(Error::Ordering(format!(
                    "player {player_id}: record day {} before profile day {last}",
                    record.day_index
                )));
            }
        }
        let role = cfg.role_index(&entry.role).ok_or_else(|| {
            Error::Invariant(format!("role {:?} not in configured role list", entry.role))
        })?;

        self.num_matches += 1;
        if my_score > opp_score {
            self.num_wins += 1;
        }
        self.role_counts[role] += 1;
        for (action, &count) in &entry.actions {
            let idx = cfg.action_index(action).ok_or_else(|| {
                Error::Invariant(format!("action {action:?} not in configured action list"))
            })?;
            self.action_counts[idx] += u64::from(count);
        }
        if entry.dropped_out {
            self.num_dropout += 1;
        }
        self.last_day = Some(record.day_index);
        Ok(())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn find_player(
    record: &MatchRecord,
    player_id: PlayerId,
) -> Result<(&crate::simworld::RosterEntry, u32, u32)> {
    let sides = [
        (&record.team1, record.team1.final_score, record.team2.final_score),
        (&record.team2, record.team2.final_score, record.team1.final_score),
    ];
    for (side, mine, theirs) in sides {
        if let Some(entry) = side.roster.iter().find(|e| e.player_id == Some(player_id)) {
            return Ok((entry, mine, theirs));
        }
    }
    Err(Error::Lookup(format!(
        "player {player_id} not on either roster of match {}",
        record.match_id
    )))
}

/// Ordered vector of one player's features. Zero-history profiles emit
/// the cold-start vector (all zeros unless overridden).
pub fn player_features(
    profile: &PlayerProfile,
    cfg: &FeatureConfig,
    cold_start: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let p = cfg.player_dim();
    if profile.num_matches == 0 {
        return match cold_start {
            None => Ok(vec![0.0; p]),
            Some(v) if v.len() == p => Ok(v.to_vec()),
            Some(v) => Err(Error::Schema(format!(
                "cold-start vector has {} coordinates, schema needs {p}",
                v.len()
            ))),
        };
    }
    let mut out = Vec::with_capacity(p);
    out.push(profile.num_matches as f64);
    out.push(profile.num_wins as f64);
    out.push(profile.freq_wins());
    for &c in &profile.role_counts {
        out.push(c as f64);
    }
    for i in 0..profile.role_counts.len() {
        out.push(profile.freq_role(i));
    }
    for &c in &profile.action_counts {
        out.push(c as f64);
    }
    for i in 0..profile.action_counts.len() {
        out.push(profile.avg_action(i));
    }
    out.push(profile.num_dropout as f64);
    out.push(profile.freq_dropout());
    debug_assert_eq!(out.len(), p);
    Ok(out)
}

/// Per-coordinate mean and population standard deviation over a team's
/// human members.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamFeatureVector {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn team_features(members: &[Vec<f64>]) -> Result<TeamFeatureVector> {
    let first = members
        .first()
        .ok_or_else(|| Error::Aggregation("team has no human members to aggregate".into()))?;
    let p = first.len();
    if members.iter().any(|m| m.len() != p) {
        return Err(Error::Schema("member vectors disagree in dimension".into()));
    }
    let n = members.len() as f64;
    let mut mean = vec![0.0; p];
    for m in members {
        for (acc, v) in mean.iter_mut().zip(m) {
            *acc += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= n;
    }
    let mut std = vec![0.0; p];
    for m in members {
        for ((acc, v), mu) in std.iter_mut().zip(m).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    for v in std.iter_mut() {
        *v = (*v / n).sqrt();
    }
    Ok(TeamFeatureVector { mean, std })
}

/// Names of every coordinate of the match feature vector, in order.
/// The layout is a pure function of the role/action vocabulary:
/// t1 mean block, t1 std block, t2 mean block, t2 std block, per-feature
/// absolute differences, per-feature signed differences, eight skill
/// statistics, two human headcounts. Total dimension 6P + 10.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub config: FeatureConfig,
    pub player_names: Vec<String>,
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn new(cfg: &FeatureConfig) -> Self {
        let mut player_names = Vec::with_capacity(cfg.player_dim());
        player_names.push("num_matches".to_string());
        player_names.push("num_wins".to_string());
        player_names.push("freq_wins".to_string());
        for r in &cfg.roles {
            player_names.push(format!("num_role_{r}"));
        }
        for r in &cfg.roles {
            player_names.push(format!("freq_role_{r}"));
        }
        for a in &cfg.actions {
            player_names.push(format!("num_action_{a}"));
        }
        for a in &cfg.actions {
            player_names.push(format!("avg_num_action_{a}"));
        }
        player_names.push("num_dropout".to_string());
        player_names.push("freq_dropout".to_string());

        let mut names = Vec::with_capacity(6 * player_names.len() + 10);
        for team in ["t1", "t2"] {
            for stat in ["avg", "std"] {
                for pf in &player_names {
                    names.push(format!("{team}_{stat}_{pf}"));
                }
            }
        }
        for pf in &player_names {
            names.push(format!("diff_abs_avg_{pf}"));
        }
        for pf in &player_names {
            names.push(format!("diff_avg_{pf}"));
        }
        for skill in [
            "t1_avg_skill",
            "t2_avg_skill",
            "skill_diff",
            "skill_abs_diff",
            "skill_max_diff",
            "skill_min_diff",
            "t1_skill_std",
            "t2_skill_std",
        ] {
            names.push(skill.to_string());
        }
        names.push("t1_human_count".to_string());
        names.push("t2_human_count".to_string());

        FeatureSchema { config: cfg.clone(), player_names, names }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn player_dim(&self) -> usize {
        self.player_names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// FNV-1a over the ordered coordinate names; models carry this hash
    /// so stale model/log pairings fail loudly.
    pub fn hash64(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for name in &self.names {
            for &b in name.as_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h ^= u64::from(b'\n');
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// Assemble M = (t1, t2, m) from the two team aggregates, the displayed
/// ratings of the human players, and the human headcounts.
pub fn match_features(
    schema: &FeatureSchema,
    t1: &TeamFeatureVector,
    t2: &TeamFeatureVector,
    ratings1: &[f64],
    ratings2: &[f64],
    human_counts: (u32, u32),
) -> Result<Vec<f64>> {
    let p = schema.player_dim();
    if t1.mean.len() != p || t1.std.len() != p || t2.mean.len() != p || t2.std.len() != p {
        return Err(Error::Schema(format!(
            "team blocks must have {p} coordinates (got {} / {})",
            t1.mean.len(),
            t2.mean.len()
        )));
    }
    if ratings1.is_empty() || ratings2.is_empty() {
        return Err(Error::Aggregation("each team needs at least one rated human".into()));
    }

    let mut out = Vec::with_capacity(schema.dim());
    out.extend_from_slice(&t1.mean);
    out.extend_from_slice(&t1.std);
    out.extend_from_slice(&t2.mean);
    out.extend_from_slice(&t2.std);
    for (a, b) in t1.mean.iter().zip(&t2.mean) {
        out.push((a - b).abs());
    }
    for (a, b) in t1.mean.iter().zip(&t2.mean) {
        out.push(a - b);
    }

    let avg1 = stats::mean(ratings1);
    let avg2 = stats::mean(ratings2);
    let max1 = ratings1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max2 = ratings2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min1 = ratings1.iter().copied().fold(f64::INFINITY, f64::min);
    let min2 = ratings2.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(avg1);
    out.push(avg2);
    out.push(avg1 - avg2);
    out.push((avg1 - avg2).abs());
    out.push(max1 - max2);
    out.push(min1 - min2);
    out.push(stats::pop_std(ratings1));
    out.push(stats::pop_std(ratings2));
    out.push(f64::from(human_counts.0));
    out.push(f64::from(human_counts.1));

    debug_assert_eq!(out.len(), schema.dim());
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant("non-finite match feature coordinate".into()));
    }
    Ok(out)
}

/// Rewrite a match feature vector as if the team labels were swapped:
/// the t1/t2 blocks trade places, signed differences flip sign, absolute
/// differences stay put, and the paired skill/headcount coordinates swap.
/// Useful for symmetrizing training sets and for symmetry tests.
pub fn swap_match_orientation(schema: &FeatureSchema, row: &[f64]) -> Result<Vec<f64>> {
    let p = schema.player_dim();
    if row.len() != schema.dim() {
        return Err(Error::Schema(format!(
            "row has {} coordinates, schema {}",
            row.len(),
            schema.dim()
        )));
    }
    let mut out = Vec::with_capacity(row.len());
    out.extend_from_slice(&row[2 * p..4 * p]); // t2 block first
    out.extend_from_slice(&row[..2 * p]); // then t1
    out.extend_from_slice(&row[4 * p..5 * p]); // abs diffs unchanged
    out.extend(row[5 * p..6 * p].iter().map(|v| -v)); // signed diffs flip
    let s = 6 * p;
    out.push(row[s + 1]); // t2_avg_skill
    out.push(row[s]); // t1_avg_skill
    out.push(-row[s + 2]); // skill_diff
    out.push(row[s + 3]); // skill_abs_diff
    out.push(-row[s + 4]); // skill_max_diff
    out.push(-row[s + 5]); // skill_min_diff
    out.push(row[s + 7]); // t2_skill_std
    out.push(row[s + 6]); // t1_skill_std
    out.push(row[s + 9]); // t2_human_count
    out.push(row[s + 8]); // t1_human_count
    Ok(out)
}

/// Single-writer profile store ordered by match completion. Tracks the
/// high-water (day, match id) mark of applied records so the harness can
/// audit that no feature ever saw a record from its own day or later.
#[derive(Debug, Clone)]
pub struct ProfileStore {
    cfg: FeatureConfig,
    profiles: BTreeMap<PlayerId, PlayerProfile>,
    applied_hwm: Option<(u32, u64)>,
}

impl ProfileStore {
    pub fn new(cfg: FeatureConfig) -> Self {
        ProfileStore { cfg, profiles: BTreeMap::new(), applied_hwm: None }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    pub fn profile(&self, id: PlayerId) -> Option<&PlayerProfile> {
        self.profiles.get(&id)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Highest (day_index, match_id) applied so far.
    pub fn applied_hwm(&self) -> Option<(u32, u64)> {
        self.applied_hwm
    }

    /// Fold a completed match into every rostered human's profile.
    pub fn apply(&mut self, record: &MatchRecord) -> Result<()> {
        if let Some((day, _)) = self.applied_hwm {
            if record.day_index < day {
                return Err(Error::Ordering(format!(
                    "record day {} before store day {day}",
                    record.day_index
                )));
            }
        }
        for side in [&record.team1, &record.team2] {
            for entry in &side.roster {
                if let Some(id) = entry.player_id {
                    self.profiles
                        .entry(id)
                        .or_insert_with(|| PlayerProfile::new(&self.cfg))
                        .update(record, id, &self.cfg)?;
                }
            }
        }
        self.applied_hwm = Some((record.day_index, record.match_id));
        Ok(())
    }

    fn team_member_vectors(
        &self,
        ids: &[PlayerId],
        cold_start: Option<&[f64]>,
    ) -> Result<Vec<Vec<f64>>> {
        let fresh = PlayerProfile::new(&self.cfg);
        ids.iter()
            .map(|&id| {
                let profile = self.profiles.get(&id).unwrap_or(&fresh);
                player_features(profile, &self.cfg, cold_start)
            })
            .collect()
    }
}

/// Build the match feature vector for two rosters of human player ids,
/// reading profiles from `store` and displayed ratings from `ratings`.
/// This is the single assembly path shared by the evaluation harness and
/// the matchmaking loop.
pub fn features_for_teams(
    store: &ProfileStore,
    schema: &FeatureSchema,
    ratings: &BTreeMap<PlayerId, f64>,
    cold_start: Option<&[f64]>,
    team1_humans: &[PlayerId],
    team2_humans: &[PlayerId],
) -> Result<Vec<f64>> {
    if schema.config != *store.config() {
        return Err(Error::Schema("schema and profile store vocabularies differ".into()));
    }
    let lookup = |ids: &[PlayerId]| -> Result<Vec<f64>> {
        ids.iter()
            .map(|id| {
                ratings
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Lookup(format!("no displayed rating for player {id}")))
            })
            .collect()
    };
    let t1 = team_features(&store.team_member_vectors(team1_humans, cold_start)?)?;
    let t2 = team_features(&store.team_member_vectors(team2_humans, cold_start)?)?;
    let r1 = lookup(team1_humans)?;
    let r2 = lookup(team2_humans)?;
    match_features(
        schema,
        &t1,
        &t2,
        &r1,
        &r2,
        (team1_humans.len() as u32, team2_humans.len() as u32),
    )
}

pub fn human_ids(side: &TeamSide) -> Vec<PlayerId> {
    side.roster.iter().filter_map(|e| e.player_id).collect()
}

/// Feature vector for a logged match, using profile state as currently
/// held by the store (the caller controls what has been applied).
pub fn features_for_record(
    store: &ProfileStore,
    schema: &FeatureSchema,
    ratings: &BTreeMap<PlayerId, f64>,
    cold_start: Option<&[f64]>,
    record: &MatchRecord,
) -> Result<Vec<f64>> {
    features_for_teams(
        store,
        schema,
        ratings,
        cold_start,
        &human_ids(&record.team1),
        &human_ids(&record.team2),
    )
}

/// Per-coordinate z-score transform fitted on training rows. Constant
/// coordinates are remembered with a zero deviation and map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() < 2 {
            return Err(Error::Parameter(format!(
                "normalizer needs at least 2 rows, got {}",
                x.rows()
            )));
        }
        let n = x.rows() as f64;
        let d = x.cols();
        let mut mean = vec![0.0; d];
        for i in 0..x.rows() {
            for (acc, v) in mean.iter_mut().zip(x.row(i)) {
                *acc += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for i in 0..x.rows() {
            for ((acc, v), mu) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        let std = var
            .iter()
            .zip(&mean)
            .map(|(&v, &mu)| {
                let sd = (v / n).sqrt();
                if sd <= 1e-9 * mu.abs().max(1.0) {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Normalizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Schema(format!(
                "normalizer fitted on {} coordinates, row has {}",
                self.dim(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&mu, &sd))| if sd == 0.0 { 0.0 } else { (v - mu) / sd })
            .collect())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let z = self.apply(x.row(i))?;
            out.row_mut(i).copy_from_slice(&z);
        }
        Ok(out)
    }
}
