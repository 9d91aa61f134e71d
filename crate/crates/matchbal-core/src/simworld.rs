//! Deterministic synthetic player population and match-log generator.
//!
//! Stands in for private production telemetry: a seeded population of
//! players with per-role latent skills, aggressiveness, and dropout
//! propensities plays rating-matched games whose team scores follow a
//! Poisson law in the strength gap. Every effect the prediction layers
//! are supposed to find (skill gaps, dropouts, bot fills) is planted
//! here on purpose, so downstream tests can check against ground truth.

#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rngx::{self, SeedRng};

pub type PlayerId = u32;

/// Offset that keeps latent skills (and hence team strength sums)
/// positive, so multiplicative dropout/bot penalties act downward.
pub const BASE_SKILL: f64 = 5.0;
/// Displayed ratings live on a familiar 1500-centred ladder.
pub const RATING_CENTER: f64 = 1500.0;
pub const RATING_PER_SKILL: f64 = 100.0;

/// Largest magnitude allowed for the scoring-rate exponent; keeps the
/// Poisson rates bounded for pathological strength gaps.
const MAX_RATE_EXPONENT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "3v3")]
    V3,
    #[serde(rename = "6v6")]
    V6,
}

impl Mode {
    pub fn team_size(self) -> usize {
        match self {
            Mode::V3 => 3,
            Mode::V6 => 6,
        }
    }

    pub fn from_team_size(team_size: usize) -> Result<Mode> {
        match team_size {
            3 => Ok(Mode::V3),
            6 => Ok(Mode::V6),
            other => Err(Error::Config(format!("team_size must be 3 or 6, got {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::V3 => "3v3",
            Mode::V6 => "6v6",
        }
    }
}

/// Generator configuration. The first block is the structural contract;
/// the second block are calibration knobs for the planted effects, not
/// claims about any real game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub num_players: usize,
    pub roles: Vec<String>,
    pub actions: Vec<String>,
    pub team_size: usize,
    pub skill_scale: f64,
    pub dropout_rate_range: (f64, f64),
    pub days: u32,
    pub matches_per_day: u32,
    pub seed: u64,

    /// Expected goals per team when strengths are equal.
    pub base_rate: f64,
    /// Sensitivity of the scoring rate to the strength gap.
    pub beta: f64,
    /// Fixed strength bonus for team 1; 0 keeps the generator symmetric.
    pub team1_bias: f64,
    /// Per-role skill deviation around a player's overall skill.
    pub role_skill_spread: f64,
    /// Observation noise of the displayed rating, in skill units.
    pub rating_noise: f64,
    /// Team strength multiplier applied once per dropped-out player.
    pub dropout_strength_factor: f64,
    /// Team strength multiplier applied once per bot slot.
    pub bot_strength_factor: f64,
    /// Probability that a roster slot is handed to a bot.
    pub bot_slot_rate: f64,
    /// Half-width of the rating-proximity window used to draw rosters,
    /// in rating points.
    pub rating_window: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            num_players: 2000,
            roles: vec![
                "defense".to_string(),
                "left_wing".to_string(),
                "right_wing".to_string(),
            ],
            actions: vec![
                "goal".to_string(),
                "assist".to_string(),
                "hit".to_string(),
                "takeaway".to_string(),
            ],
            team_size: 3,
            skill_scale: 2.5,
            dropout_rate_range: (0.0, 0.4),
            days: 90,
            matches_per_day: 223,
            seed: 7,
            base_rate: 2.0,
            beta: 1.0,
            team1_bias: 0.0,
            role_skill_spread: 0.5,
            rating_noise: 0.35,
            dropout_strength_factor: 0.7,
            bot_strength_factor: 0.85,
            bot_slot_rate: 0.08,
            rating_window: 80.0,
        }
    }
}

impl PopulationConfig {
    pub fn mode(&self) -> Result<Mode> {
        Mode::from_team_size(self.team_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_players == 0 {
            return Err(Error::Config("num_players must be positive".into()));
        }
        if self.roles.is_empty() {
            return Err(Error::Config("roles must be nonempty".into()));
        }
        Mode::from_team_size(self.team_size)?;
        if !(self.skill_scale.is_finite() && self.skill_scale > 0.0) {
            return Err(Error::Config("skill_scale must be a positive real".into()));
        }
        let (lo, hi) = self.dropout_rate_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::Config(format!(
                "dropout_rate_range [{lo}, {hi}] must be contained in [0, 1]"
            )));
        }
        if !(self.base_rate.is_finite() && self.base_rate > 0.0) {
            return Err(Error::Config("base_rate must be positive".into()));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::Config("beta must be a non-negative real".into()));
        }
        if !self.team1_bias.is_finite() {
            return Err(Error::Config("team1_bias must be finite".into()));
        }
        for (name, v) in [
            ("role_skill_spread", self.role_skill_spread),
            ("rating_noise", self.rating_noise),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        for (name, v) in [
            ("dropout_strength_factor", self.dropout_strength_factor),
            ("bot_strength_factor", self.bot_strength_factor),
        ] {
            if !(v.is_finite() && v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1]")));
            }
        }
        if !(0.0..1.0).contains(&self.bot_slot_rate) {
            return Err(Error::Config("bot_slot_rate must lie in [0, 1)".into()));
        }
        if !(self.rating_window.is_finite() && self.rating_window > 0.0) {
            return Err(Error::Config("rating_window must be positive".into()));
        }
        Ok(())
    }
}

/// Ground-truth player state. Only `displayed_rating` is observable by
/// the matchmaking side; everything else drives the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPlayer {
    pub id: PlayerId,
    /// One latent skill per configured role, BASE_SKILL-centred.
    pub role_skill: Vec<f64>,
    pub aggressiveness: f64,
    pub dropout_propensity: f64,
    /// Noisy observation of the mean latent skill on the rating ladder.
    pub displayed_rating: f64,
}

impl LatentPlayer {
    pub fn mean_skill(&self) -> f64 {
        crate::stats::mean(&self.role_skill)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub players: Vec<LatentPlayer>,
    /// Latent skill assigned to every bot slot: the population's 5th
    /// percentile, i.e. bots reliably under-perform.
    pub bot_skill: f64,
    /// Player indices sorted by displayed rating, for proximity sampling.
    by_rating: Vec<u32>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    /// Displayed ratings keyed by player id, the matchmaking-time view.
    pub fn rating_table(&self) -> BTreeMap<PlayerId, f64> {
        self.players.iter().map(|p| (p.id, p.displayed_rating)).collect()
    }

    /// Indices of the players whose displayed rating falls within
    /// `window` points of `center`, widening until at least `min` match.
    fn rating_pool(&self, center: f64, window: f64, min: usize) -> Vec<u32> {
        let mut w = window;
        loop {
            let lo = self
                .by_rating
                .partition_point(|&i| self.players[i as usize].displayed_rating < center - w);
            let hi = self
                .by_rating
                .partition_point(|&i| self.players[i as usize].displayed_rating <= center + w);
            if hi - lo >= min || (lo == 0 && hi == self.by_rating.len()) {
                return self.by_rating[lo..hi].to_vec();
            }
            w *= 2.0;
        }
    }
}

/// Seat assignment used when simulating a match: a human player index
/// into the population, or a bot, playing a given role index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub player: Option<u32>,
    pub role: usize,
}

/// One completed match as logged for the feature layer. Serialized as a
/// JSON-Lines record with exactly these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: u64,
    pub day_index: u32,
    pub mode: Mode,
    pub team1: TeamSide,
    pub team2: TeamSide,
    /// team1.final_score - team2.final_score.
    pub score_diff: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSide {
    pub roster: Vec<RosterEntry>,
    pub human_count: u32,
    pub final_score: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    /// None marks a bot slot.
    pub player_id: Option<PlayerId>,
    pub role: String,
    pub dropped_out: bool,
    pub actions: BTreeMap<String, u32>,
}

impl MatchRecord {
    /// Structural checks on a record, usable on both generated and
    /// externally loaded logs.
    pub fn validate(&self, roles: &[String]) -> Result<()> {
        for (label, side) in [("team1", &self.team1), ("team2", &self.team2)] {
            let humans = side.roster.iter().filter(|e| e.player_id.is_some()).count() as u32;
            if humans != side.human_count {
                return Err(Error::Invariant(format!(
                    "{label} human_count {} disagrees with roster ({humans} humans)",
                    side.human_count
                )));
            }
            if side.human_count as usize > side.roster.len() {
                return Err(Error::Invariant(format!(
                    "{label} human_count exceeds roster size"
                )));
            }
            for entry in &side.roster {
                if !roles.iter().any(|r| *r == entry.role) {
                    return Err(Error::Invariant(format!(
                        "{label} role {:?} not in configured role list",
                        entry.role
                    )));
                }
            }
        }
        let diff = self.team1.final_score as i64 - self.team2.final_score as i64;
        if diff != i64::from(self.score_diff) {
            return Err(Error::Invariant(
                "score_diff disagrees with final scores".into(),
            ));
        }
        Ok(())
    }
}

/// A full generated season: the ground-truth population plus its
/// day-ordered match log.
#[derive(Debug, Clone)]
pub struct Season {
    pub config: PopulationConfig,
    pub population: Population,
    pub records: Vec<MatchRecord>,
}

/// Draw the synthetic population. Fully determined by `cfg.seed`.
pub fn generate_population(cfg: &PopulationConfig) -> Result<Population> {
    cfg.validate()?;
    let mut rng = rngx::rng_from_seed(rngx::split_seed(cfg.seed, "population"));
    let (lo, hi) = cfg.dropout_rate_range;
    let mut players = Vec::with_capacity(cfg.num_players);
    for id in 0..cfg.num_players {
        let overall = rngx::std_normal(&mut rng);
        let role_skill: Vec<f64> = (0..cfg.roles.len())
            .map(|_| {
                (BASE_SKILL + overall + cfg.role_skill_spread * rngx::std_normal(&mut rng))
                    .max(0.25)
            })
            .collect();
        let aggressiveness = rng.gen::<f64>();
        let dropout_propensity = lo + (hi - lo) * rng.gen::<f64>();
        let mean_centered = crate::stats::mean(&role_skill) - BASE_SKILL;
        let displayed_rating = RATING_CENTER
            + RATING_PER_SKILL * (mean_centered + cfg.rating_noise * rngx::std_normal(&mut rng));
        players.push(LatentPlayer {
            id: id as PlayerId,
            role_skill,
            aggressiveness,
            dropout_propensity,
            displayed_rating,
        });
    }

    // Bots play at the population's 5th-percentile mean skill.
    let mut means: Vec<f64> = players.iter().map(LatentPlayer::mean_skill).collect();
    means.sort_by(f64::total_cmp);
    let bot_skill = means[(means.len() - 1) * 5 / 100];

    let mut by_rating: Vec<u32> = (0..players.len() as u32).collect();
    by_rating.sort_by(|&a, &b| {
        players[a as usize]
            .displayed_rating
            .total_cmp(&players[b as usize].displayed_rating)
            .then(a.cmp(&b))
    });

    Ok(Population { players, bot_skill, by_rating })
}

fn check_sheet(pop: &Population, cfg: &PopulationConfig, label: &str, sheet: &[Slot]) -> Result<()> {
    if sheet.len() != cfg.team_size {
        return Err(Error::Invariant(format!(
            "{label} has {} slots, team_size is {}",
            sheet.len(),
            cfg.team_size
        )));
    }
    for slot in sheet {
        if slot.role >= cfg.roles.len() {
            return Err(Error::Invariant(format!(
                "{label} role index {} out of range",
                slot.role
            )));
        }
        if let Some(p) = slot.player {
            if p as usize >= pop.len() {
                return Err(Error::Lookup(format!("{label} player index {p} out of range")));
            }
        }
    }
    Ok(())
}

struct TeamOutcome {
    dropped: Vec<bool>,
    strength: f64,
    humans: u32,
}

/// Resolve dropouts (Bernoulli per human at match start) and compute the
/// effective strength: sum of role skills, shrunk multiplicatively per
/// dropout and per bot slot.
fn resolve_team<R: Rng>(
    pop: &Population,
    cfg: &PopulationConfig,
    sheet: &[Slot],
    rng: &mut R,
) -> TeamOutcome {
    let mut dropped = vec![false; sheet.len()];
    let mut strength = 0.0;
    let mut humans = 0u32;
    let mut n_drop = 0u32;
    let mut n_bot = 0u32;
    for (i, slot) in sheet.iter().enumerate() {
        match slot.player {
            Some(p) => {
                let player = &pop.players[p as usize];
                humans += 1;
                strength += player.role_skill[slot.role];
                if rngx::bernoulli(rng, player.dropout_propensity) {
                    dropped[i] = true;
                    n_drop += 1;
                }
            }
            None => {
                strength += pop.bot_skill;
                n_bot += 1;
            }
        }
    }
    strength *= cfg.dropout_strength_factor.powi(n_drop as i32);
    strength *= cfg.bot_strength_factor.powi(n_bot as i32);
    TeamOutcome { dropped, strength, humans }
}

/// Distribute per-player action counts consistently with the team score
/// and the players' aggressiveness.
fn sample_actions<R: Rng>(
    pop: &Population,
    cfg: &PopulationConfig,
    sheet: &[Slot],
    dropped: &[bool],
    score: u32,
    rng: &mut R,
) -> Vec<BTreeMap<String, u32>> {
    let weights: Vec<f64> = sheet
        .iter()
        .zip(dropped)
        .map(|(slot, &out)| {
            let (skill, agg) = match slot.player {
                Some(p) => {
                    let pl = &pop.players[p as usize];
                    (pl.role_skill[slot.role], pl.aggressiveness)
                }
                None => (pop.bot_skill, 0.5),
            };
            skill * (0.5 + agg) * if out { 0.5 } else { 1.0 }
        })
        .collect();

    let mut counts = vec![vec![0u32; cfg.actions.len()]; sheet.len()];
    for (a, action) in cfg.actions.iter().enumerate() {
        match action.as_str() {
            // Scoring events: exactly `score` of them, spread by weight.
            "goal" => {
                for _ in 0..score {
                    counts[rngx::weighted_choice(rng, &weights)][a] += 1;
                }
            }
            // Assists trail goals.
            "assist" => {
                let n = rngx::binomial(rng, score, 0.7);
                for _ in 0..n {
                    counts[rngx::weighted_choice(rng, &weights)][a] += 1;
                }
            }
            // Everything else is play-style noise driven by aggressiveness.
            _ => {
                for (i, slot) in sheet.iter().enumerate() {
                    let agg = match slot.player {
                        Some(p) => pop.players[p as usize].aggressiveness,
                        None => 0.5,
                    };
                    let participation = if dropped[i] { 0.5 } else { 1.0 };
                    let rate = 1.2 * (0.4 + 1.2 * agg) * participation;
                    counts[i][a] = rngx::poisson(rng, rate);
                }
            }
        }
    }

    counts
        .into_iter()
        .map(|per_action| {
            cfg.actions
                .iter()
                .cloned()
                .zip(per_action)
                .collect::<BTreeMap<String, u32>>()
        })
        .collect()
}

fn build_side(
    cfg: &PopulationConfig,
    pop: &Population,
    sheet: &[Slot],
    outcome: &TeamOutcome,
    actions: Vec<BTreeMap<String, u32>>,
    score: u32,
) -> TeamSide {
    let roster = sheet
        .iter()
        .zip(outcome.dropped.iter())
        .zip(actions)
        .map(|((slot, &dropped_out), acts)| RosterEntry {
            player_id: slot.player.map(|p| pop.players[p as usize].id),
            role: cfg.roles[slot.role].clone(),
            dropped_out,
            actions: acts,
        })
        .collect();
    TeamSide { roster, human_count: outcome.humans, final_score: score }
}

/// Simulate one match with explicit per-team streams. Swapping both the
/// team sheets and the two seeds mirrors the match exactly, which is what
/// the label-symmetry tests lean on.
pub fn simulate_match_seeded(
    pop: &Population,
    cfg: &PopulationConfig,
    team1: &[Slot],
    team2: &[Slot],
    match_id: u64,
    day_index: u32,
    seed1: u64,
    seed2: u64,
) -> Result<MatchRecord> {
    check_sheet(pop, cfg, "team1", team1)?;
    check_sheet(pop, cfg, "team2", team2)?;
    let mut seen: Vec<u32> = Vec::with_capacity(team1.len() + team2.len());
    for slot in team1.iter().chain(team2) {
        if let Some(p) = slot.player {
            if seen.contains(&p) {
                return Err(Error::Invariant(format!("player {p} rostered twice")));
            }
            seen.push(p);
        }
    }

    let mut rng1: SeedRng = rngx::rng_from_seed(seed1);
    let mut rng2: SeedRng = rngx::rng_from_seed(seed2);

    let out1 = resolve_team(pop, cfg, team1, &mut rng1);
    let out2 = resolve_team(pop, cfg, team2, &mut rng2);

    let gap = (out1.strength + cfg.team1_bias) - out2.strength;
    let exponent = (cfg.beta * gap / cfg.skill_scale).clamp(-MAX_RATE_EXPONENT, MAX_RATE_EXPONENT);
    let score1 = rngx::poisson(&mut rng1, cfg.base_rate * exponent.exp());
    let score2 = rngx::poisson(&mut rng2, cfg.base_rate * (-exponent).exp());

    let actions1 = sample_actions(pop, cfg, team1, &out1.dropped, score1, &mut rng1);
    let actions2 = sample_actions(pop, cfg, team2, &out2.dropped, score2, &mut rng2);

    Ok(MatchRecord {
        match_id,
        day_index,
        mode: cfg.mode()?,
        team1: build_side(cfg, pop, team1, &out1, actions1, score1),
        team2: build_side(cfg, pop, team2, &out2, actions2, score2),
        score_diff: score1 as i32 - score2 as i32,
    })
}

/// Simulate one match, deriving the two team streams from `rng`.
pub fn simulate_match<R: Rng>(
    pop: &Population,
    cfg: &PopulationConfig,
    team1: &[Slot],
    team2: &[Slot],
    match_id: u64,
    day_index: u32,
    rng: &mut R,
) -> Result<MatchRecord> {
    let seed1 = rng.gen::<u64>();
    let seed2 = rng.gen::<u64>();
    simulate_match_seeded(pop, cfg, team1, team2, match_id, day_index, seed1, seed2)
}

/// Shuffled role indices cycling through the configured role list.
fn draw_roles<R: Rng>(cfg: &PopulationConfig, rng: &mut R) -> Vec<usize> {
    let mut roles: Vec<usize> = (0..cfg.team_size).map(|i| i % cfg.roles.len()).collect();
    rngx::shuffle(rng, &mut roles);
    roles
}

/// Sample the two team sheets for one match: a rating-proximity pool,
/// a random split, bot fills, and random role assignment.
fn draw_match_sheets<R: Rng>(
    pop: &Population,
    cfg: &PopulationConfig,
    rng: &mut R,
) -> (Vec<Slot>, Vec<Slot>) {
    let t = cfg.team_size;
    let anchor = rng.gen_range(0..pop.len());
    let center = pop.players[anchor].displayed_rating;
    let pool = pop.rating_pool(center, cfg.rating_window, 2 * t);

    let mut picked: Vec<u32> = Vec::with_capacity(2 * t);
    if pool.len() == 2 * t {
        picked.extend_from_slice(&pool);
    } else {
        while picked.len() < 2 * t {
            let cand = pool[rng.gen_range(0..pool.len())];
            if !picked.contains(&cand) {
                picked.push(cand);
            }
        }
    }
    rngx::shuffle(rng, &mut picked);

    let mut sheets = Vec::with_capacity(2);
    for half in picked.chunks(t) {
        let roles = draw_roles(cfg, rng);
        let mut sheet: Vec<Slot> = half
            .iter()
            .zip(&roles)
            .map(|(&p, &role)| Slot { player: Some(p), role })
            .collect();
        for slot in sheet.iter_mut() {
            if rngx::bernoulli(rng, cfg.bot_slot_rate) {
                slot.player = None;
            }
        }
        // Feature aggregation needs at least one human per team.
        if sheet.iter().all(|s| s.player.is_none()) {
            sheet[0].player = Some(half[0]);
        }
        sheets.push(sheet);
    }
    let team2 = sheets.pop().expect("two sheets");
    let team1 = sheets.pop().expect("two sheets");
    (team1, team2)
}

/// Generate a full season: `days x matches_per_day` records with
/// non-decreasing day index, rosters drawn by rating proximity.
pub fn run_season(cfg: &PopulationConfig) -> Result<Season> {
    cfg.validate()?;
    if cfg.days == 0 || cfg.matches_per_day == 0 {
        return Err(Error::Config("days and matches_per_day must be positive".into()));
    }
    if cfg.num_players < 2 * cfg.team_size {
        return Err(Error::Config(format!(
            "need at least {} players for {} mode",
            2 * cfg.team_size,
            cfg.mode()?.as_str()
        )));
    }
    let population = generate_population(cfg)?;
    let mut rng = rngx::rng_from_seed(rngx::split_seed(cfg.seed, "season"));
    let mut records = Vec::with_capacity(cfg.days as usize * cfg.matches_per_day as usize);
    let mut match_id = 0u64;
    for day in 0..cfg.days {
        for _ in 0..cfg.matches_per_day {
            let (team1, team2) = draw_match_sheets(&population, cfg, &mut rng);
            let record =
                simulate_match(&population, cfg, &team1, &team2, match_id, day, &mut rng)?;
            records.push(record);
            match_id += 1;
        }
    }
    Ok(Season { config: cfg.clone(), population, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> PopulationConfig {
        PopulationConfig {
            num_players: 60,
            days: 4,
            matches_per_day: 25,
            seed: 42,
            ..PopulationConfig::default()
        }
    }

    #[test]
    fn population_is_deterministic() {
        let cfg = small_cfg();
        let a = generate_population(&cfg).unwrap();
        let b = generate_population(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_players_is_a_config_error() {
        let cfg = PopulationConfig { num_players: 0, ..PopulationConfig::default() };
        assert!(matches!(generate_population(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn empty_roles_is_a_config_error() {
        let cfg = PopulationConfig { roles: vec![], ..PopulationConfig::default() };
        assert!(matches!(generate_population(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_team_size_is_a_config_error() {
        let cfg = PopulationConfig { team_size: 4, ..PopulationConfig::default() };
        assert!(matches!(generate_population(&cfg), Err(Error::Config(_))));
    }

    // Displayed ratings are a noisy affine view of the latent means, so
    // the sample mean of the ratings must track the latent-mean average
    // within 3 sigma of the configured noise.
    #[test]
    fn displayed_ratings_track_latent_means() {
        let cfg = PopulationConfig { num_players: 10_000, ..PopulationConfig::default() };
        let pop = generate_population(&cfg).unwrap();
        let n = pop.len() as f64;
        let rating_mean =
            pop.players.iter().map(|p| p.displayed_rating).sum::<f64>() / n;
        let latent_mean = pop
            .players
            .iter()
            .map(|p| RATING_CENTER + RATING_PER_SKILL * (p.mean_skill() - BASE_SKILL))
            .sum::<f64>()
            / n;
        let tolerance = 3.0 * RATING_PER_SKILL * cfg.rating_noise / n.sqrt();
        assert!(
            (rating_mean - latent_mean).abs() < tolerance,
            "ratings {rating_mean} vs latent {latent_mean} (tol {tolerance})"
        );
    }

    #[test]
    fn match_is_deterministic_for_fixed_seeds() {
        let cfg = small_cfg();
        let pop = generate_population(&cfg).unwrap();
        let t1: Vec<Slot> = (0..3).map(|i| Slot { player: Some(i), role: i as usize }).collect();
        let t2: Vec<Slot> =
            (3..6).map(|i| Slot { player: Some(i), role: (i - 3) as usize }).collect();
        let a = simulate_match_seeded(&pop, &cfg, &t1, &t2, 0, 0, 11, 13).unwrap();
        let b = simulate_match_seeded(&pop, &cfg, &t1, &t2, 0, 0, 11, 13).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn swapping_teams_and_streams_negates_the_diff() {
        let cfg = PopulationConfig { team1_bias: 0.0, ..small_cfg() };
        let pop = generate_population(&cfg).unwrap();
        let t1: Vec<Slot> = (0..3).map(|i| Slot { player: Some(i), role: i as usize }).collect();
        let t2: Vec<Slot> =
            (3..6).map(|i| Slot { player: Some(i), role: (i - 3) as usize }).collect();
        for s in 0..50u64 {
            let ab = simulate_match_seeded(&pop, &cfg, &t1, &t2, 0, 0, s, s + 1000).unwrap();
            let ba = simulate_match_seeded(&pop, &cfg, &t2, &t1, 0, 0, s + 1000, s).unwrap();
            assert_eq!(ab.score_diff, -ba.score_diff);
            assert_eq!(ab.team1.final_score, ba.team2.final_score);
        }
    }

    #[test]
    fn rostering_a_player_twice_is_an_invariant_error() {
        let cfg = small_cfg();
        let pop = generate_population(&cfg).unwrap();
        let t1 = vec![
            Slot { player: Some(0), role: 0 },
            Slot { player: Some(1), role: 1 },
            Slot { player: Some(0), role: 2 },
        ];
        let t2: Vec<Slot> =
            (3..6).map(|i| Slot { player: Some(i), role: (i - 3) as usize }).collect();
        let err = simulate_match_seeded(&pop, &cfg, &t1, &t2, 0, 0, 1, 2).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn bad_role_index_is_an_invariant_error() {
        let cfg = small_cfg();
        let pop = generate_population(&cfg).unwrap();
        let t1 = vec![
            Slot { player: Some(0), role: 9 },
            Slot { player: Some(1), role: 1 },
            Slot { player: Some(2), role: 2 },
        ];
        let t2: Vec<Slot> =
            (3..6).map(|i| Slot { player: Some(i), role: (i - 3) as usize }).collect();
        let err = simulate_match_seeded(&pop, &cfg, &t1, &t2, 0, 0, 1, 2).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn season_emits_day_ordered_records() {
        let cfg = small_cfg();
        let season = run_season(&cfg).unwrap();
        assert_eq!(season.records.len(), 100);
        let mut last_day = 0;
        for r in &season.records {
            assert!(r.day_index >= last_day);
            assert!(r.day_index < cfg.days);
            last_day = r.day_index;
            r.validate(&cfg.roles).unwrap();
            assert!(r.team1.human_count >= 1 && r.team2.human_count >= 1);
        }
        let days_seen: alloc::collections::BTreeSet<u32> =
            season.records.iter().map(|r| r.day_index).collect();
        assert_eq!(days_seen.len(), cfg.days as usize);
    }

    #[test]
    fn season_is_deterministic() {
        let cfg = small_cfg();
        let a = run_season(&cfg).unwrap();
        let b = run_season(&cfg).unwrap();
        assert_eq!(a.records, b.records);
    }
}
