//! Balance-gated matchmaking loop: a player queue, rating-proximity team
//! sampling, a quality gate backed by a trained score-difference model,
//! and a resample-or-launch policy with a starvation fallback.
//!
//! Prediction inside the gate goes through the exact same feature
//! assembly and [`TrainedModel::predict`] path the evaluation harness
//! uses.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{features_for_teams, FeatureSchema, ProfileStore};
use crate::models::{classify_balance, TrainedModel};
use crate::rngx;
use crate::simworld::{Mode, PlayerId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub player_id: PlayerId,
    pub rating: f64,
    pub enqueue_tick: u64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchmakerConfig {
    pub mode: Mode,
    /// Proposals per tick before the fallback launch.
    pub max_attempts: usize,
    /// Candidate pool is the nearest pool_factor * team_size entries by
    /// rating around the longest-waiting player.
    pub pool_factor: usize,
    /// Every full multiple of this wait widens the candidate pool.
    pub aging_ticks: u64,
    pub theta: f64,
    /// Ticks a launched player stays out of the queue.
    pub match_duration_ticks: u64,
    /// Re-enqueue players automatically when their match ends.
    pub auto_requeue: bool,
}

impl Default for MatchmakerConfig {
    fn default() -> Self {
        MatchmakerConfig {
            mode: Mode::V3,
            max_attempts: 10,
            pool_factor: 4,
            aging_ticks: 50,
            theta: 3.0,
            match_duration_ticks: 1,
            auto_requeue: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalSlot {
    /// None marks a bot fill.
    pub player_id: Option<PlayerId>,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchProposal {
    pub team1: Vec<ProposalSlot>,
    pub team2: Vec<ProposalSlot>,
    pub features: Vec<f64>,
    pub predicted: Option<f64>,
    pub accepted: Option<bool>,
}

impl MatchProposal {
    pub fn human_ids(&self) -> Vec<PlayerId> {
        self.team1
            .iter()
            .chain(&self.team2)
            .filter_map(|s| s.player_id)
            .collect()
    }

    pub fn team_humans(team: &[ProposalSlot]) -> Vec<PlayerId> {
        team.iter().filter_map(|s| s.player_id).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub predicted: f64,
    pub accept: bool,
}

/// Accept a proposal iff the model's predicted score difference lands
/// inside the balance band.
pub fn quality_gate(
    model: &TrainedModel,
    proposal: &MatchProposal,
    theta: f64,
) -> Result<GateDecision> {
    let predicted = model.predict(&proposal.features)?;
    Ok(GateDecision { predicted, accept: classify_balance(predicted, theta) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaunchedMatch {
    pub tick: u64,
    pub attempts: usize,
    /// True when every proposal was rejected and the smallest-|r| one
    /// launched anyway.
    pub fallback: bool,
    pub proposal: MatchProposal,
}

/// Session log entries, serialized one per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum SessionEvent {
    #[serde(rename = "proposal")]
    Proposed {
        tick: u64,
        attempt: usize,
        predicted: Option<f64>,
        accepted: Option<bool>,
    },
    #[serde(rename = "launch")]
    Launched {
        tick: u64,
        attempts: usize,
        fallback: bool,
        predicted: Option<f64>,
        team1: Vec<Option<PlayerId>>,
        team2: Vec<Option<PlayerId>>,
    },
    #[serde(rename = "wait")]
    Waiting { tick: u64, queued: usize },
}

/// Serialized single-writer matchmaking state machine. Readers of the
/// model and profile store are not mutated by ticking.
pub struct MatchmakingSession<'a> {
    cfg: MatchmakerConfig,
    schema: &'a FeatureSchema,
    store: &'a ProfileStore,
    ratings: &'a BTreeMap<PlayerId, f64>,
    queue: Vec<QueueEntry>,
    /// Players inside a running match, keyed by the tick they return.
    pending_return: BTreeMap<u64, Vec<QueueEntry>>,
    tick: u64,
    last_enqueue_tick: u64,
    events: Vec<SessionEvent>,
}

impl<'a> MatchmakingSession<'a> {
    pub fn new(
        cfg: MatchmakerConfig,
        schema: &'a FeatureSchema,
        store: &'a ProfileStore,
        ratings: &'a BTreeMap<PlayerId, f64>,
    ) -> Self {
        MatchmakingSession {
            cfg,
            schema,
            store,
            ratings,
            queue: Vec::new(),
            pending_return: BTreeMap::new(),
            tick: 0,
            last_enqueue_tick: 0,
            events: Vec::new(),
        }
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<SessionEvent> {
        core::mem::take(&mut self.events)
    }

    /// Add a player to the back of the queue. Timestamps must be
    /// non-decreasing; duplicates of queued or playing players are
    /// rejected.
    pub fn enqueue(&mut self, entry: QueueEntry) -> Result<()> {
        if entry.enqueue_tick < self.last_enqueue_tick {
            return Err(Error::Ordering(format!(
                "enqueue tick {} before {}",
                entry.enqueue_tick, self.last_enqueue_tick
            )));
        }
        if entry.mode != self.cfg.mode {
            return Err(Error::Config(format!(
                "entry requests {} but the session runs {}",
                entry.mode.as_str(),
                self.cfg.mode.as_str()
            )));
        }
        let id = entry.player_id;
        if self.queue.iter().any(|e| e.player_id == id)
            || self
                .pending_return
                .values()
                .any(|v| v.iter().any(|e| e.player_id == id))
        {
            return Err(Error::Invariant(format!("player {id} is already queued or playing")));
        }
        self.last_enqueue_tick = entry.enqueue_tick;
        self.queue.push(entry);
        Ok(())
    }

    /// Sample one match proposal, or None while fewer than two humans
    /// are queued (a wait signal, not an error).
    pub fn propose<R: Rng>(&self, rng: &mut R) -> Result<Option<MatchProposal>> {
        if self.queue.len() < 2 {
            return Ok(None);
        }
        let team_size = self.cfg.mode.team_size();

        // Longest-waiting entry anchors the pool; its wait time widens
        // the pool multiplicatively.
        let anchor_pos = self
            .queue
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.enqueue_tick
                    .cmp(&b.enqueue_tick)
                    .then(a.player_id.cmp(&b.player_id))
            })
            .map(|(i, _)| i)
            .expect("queue nonempty");
        let anchor = self.queue[anchor_pos];
        let waited = self.tick.saturating_sub(anchor.enqueue_tick);
        let widen = 1 + (waited / self.cfg.aging_ticks.max(1)).min(3) as usize;
        let pool_size = (self.cfg.pool_factor * team_size * widen).max(2 * team_size);

        let mut by_distance: Vec<usize> = (0..self.queue.len()).collect();
        by_distance.sort_by(|&a, &b| {
            let da = (self.queue[a].rating - anchor.rating).abs();
            let db = (self.queue[b].rating - anchor.rating).abs();
            da.total_cmp(&db)
                .then(self.queue[a].player_id.cmp(&self.queue[b].player_id))
        });
        let pool: Vec<usize> = by_distance.into_iter().take(pool_size).collect();

        // The anchor always plays; the rest of the roster is sampled
        // uniformly from the pool.
        let n_humans = (2 * team_size).min(self.queue.len());
        let mut picked: Vec<usize> = Vec::with_capacity(n_humans);
        picked.push(anchor_pos);
        let mut rest: Vec<usize> = pool.into_iter().filter(|&i| i != anchor_pos).collect();
        rngx::shuffle(rng, &mut rest);
        picked.extend(rest.into_iter().take(n_humans - 1));
        rngx::shuffle(rng, &mut picked);

        // Round-robin split keeps human counts even; bots fill the rest.
        let mut humans1: Vec<PlayerId> = Vec::with_capacity(team_size);
        let mut humans2: Vec<PlayerId> = Vec::with_capacity(team_size);
        for (i, &qi) in picked.iter().enumerate() {
            if i % 2 == 0 && humans1.len() < team_size {
                humans1.push(self.queue[qi].player_id);
            } else if humans2.len() < team_size {
                humans2.push(self.queue[qi].player_id);
            } else {
                humans1.push(self.queue[qi].player_id);
            }
        }

        let features = features_for_teams(
            self.store,
            self.schema,
            self.ratings,
            None,
            &humans1,
            &humans2,
        )?;

        let roles = &self.schema.config.roles;
        let mut build_team = |humans: &[PlayerId]| -> Vec<ProposalSlot> {
            let mut role_idx: Vec<usize> = (0..team_size).map(|i| i % roles.len()).collect();
            rngx::shuffle(rng, &mut role_idx);
            (0..team_size)
                .map(|i| ProposalSlot {
                    player_id: humans.get(i).copied(),
                    role: roles[role_idx[i]].clone(),
                })
                .collect()
        };
        let team1 = build_team(&humans1);
        let team2 = build_team(&humans2);

        Ok(Some(MatchProposal { team1, team2, features, predicted: None, accepted: None }))
    }

    fn launch(&mut self, mut proposal: MatchProposal, attempts: usize, fallback: bool) -> LaunchedMatch {
        let ids = proposal.human_ids();
        let mut removed: Vec<QueueEntry> = Vec::with_capacity(ids.len());
        self.queue.retain(|e| {
            if ids.contains(&e.player_id) {
                removed.push(*e);
                false
            } else {
                true
            }
        });
        if self.cfg.auto_requeue {
            let back = self.tick + self.cfg.match_duration_ticks.max(1);
            self.pending_return.entry(back).or_default().extend(removed);
        }
        self.events.push(SessionEvent::Launched {
            tick: self.tick,
            attempts,
            fallback,
            predicted: proposal.predicted,
            team1: proposal.team1.iter().map(|s| s.player_id).collect(),
            team2: proposal.team2.iter().map(|s| s.player_id).collect(),
        });
        if proposal.accepted.is_none() {
            proposal.accepted = Some(!fallback);
        }
        LaunchedMatch { tick: self.tick, attempts, fallback, proposal }
    }

    /// One matchmaking tick: release finished players, then propose and
    /// gate up to max_attempts times. All-reject launches the attempt
    /// with the smallest predicted |r| so nobody starves. Without a
    /// model the first proposal launches unconditionally.
    pub fn tick<R: Rng>(
        &mut self,
        model: Option<&TrainedModel>,
        rng: &mut R,
    ) -> Result<Option<LaunchedMatch>> {
        let now = self.tick;
        let due: Vec<u64> = self
            .pending_return
            .range(..=now)
            .map(|(&t, _)| t)
            .collect();
        for t in due {
            if let Some(entries) = self.pending_return.remove(&t) {
                for mut e in entries {
                    e.enqueue_tick = now;
                    self.queue.push(e);
                }
                self.last_enqueue_tick = self.last_enqueue_tick.max(now);
            }
        }

        let mut best: Option<(f64, MatchProposal)> = None;
        let mut launched = None;
        for attempt in 1..=self.cfg.max_attempts.max(1) {
            let Some(mut proposal) = self.propose(rng)? else {
                self.events.push(SessionEvent::Waiting { tick: now, queued: self.queue.len() });
                break;
            };
            let Some(model) = model else {
                self.events.push(SessionEvent::Proposed {
                    tick: now,
                    attempt,
                    predicted: None,
                    accepted: None,
                });
                launched = Some(self.launch(proposal, attempt, false));
                break;
            };
            let decision = quality_gate(model, &proposal, self.cfg.theta)?;
            proposal.predicted = Some(decision.predicted);
            proposal.accepted = Some(decision.accept);
            self.events.push(SessionEvent::Proposed {
                tick: now,
                attempt,
                predicted: Some(decision.predicted),
                accepted: Some(decision.accept),
            });
            if decision.accept {
                launched = Some(self.launch(proposal, attempt, false));
                break;
            }
            let magnitude = decision.predicted.abs();
            if best.as_ref().is_none_or(|(b, _)| magnitude < *b) {
                best = Some((magnitude, proposal));
            }
            if attempt == self.cfg.max_attempts.max(1) {
                let (_, fallback_proposal) = best.take().expect("at least one rejected proposal");
                launched = Some(self.launch(fallback_proposal, attempt, true));
            }
        }

        self.tick += 1;
        Ok(launched)
    }
}

/// Drive a session until `target_launches` matches have launched or
/// `max_ticks` ticks have elapsed.
pub fn run_matchmaking<R: Rng>(
    session: &mut MatchmakingSession<'_>,
    model: Option<&TrainedModel>,
    rng: &mut R,
    target_launches: usize,
    max_ticks: u64,
) -> Result<Vec<LaunchedMatch>> {
    let mut launched = Vec::with_capacity(target_launches);
    for _ in 0..max_ticks {
        if launched.len() >= target_launches {
            break;
        }
        if let Some(matched) = session.tick(model, rng)? {
            launched.push(matched);
        }
    }
    Ok(launched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::FeatureMask;
    use crate::features::{FeatureConfig, Normalizer};
    use crate::models::{LinearParams, ModelKind, ModelParams};
    use crate::simworld::{generate_population, PopulationConfig};
    use alloc::vec;

    struct Fixture {
        schema: FeatureSchema,
        store: ProfileStore,
        ratings: BTreeMap<PlayerId, f64>,
        population: crate::simworld::Population,
    }

    fn fixture(num_players: usize) -> Fixture {
        let cfg = PopulationConfig {
            num_players,
            seed: 31,
            ..PopulationConfig::default()
        };
        let population = generate_population(&cfg).unwrap();
        let fcfg = FeatureConfig::from(&cfg);
        Fixture {
            schema: FeatureSchema::new(&fcfg),
            store: ProfileStore::new(fcfg),
            ratings: population.rating_table(),
            population,
        }
    }

    fn constant_model(schema: &FeatureSchema, value: f64) -> TrainedModel {
        let d = schema.dim();
        TrainedModel {
            kind: ModelKind::Linear,
            params: ModelParams::Linear(LinearParams { coef: vec![0.0; d], intercept: value }),
            normalizer: Normalizer { mean: vec![0.0; d], std: vec![1.0; d] },
            mask: FeatureMask::full(d),
            schema_hash: schema.hash64(),
            train_days: None,
        }
    }

    fn enqueue_all(session: &mut MatchmakingSession<'_>, fx: &Fixture, n: usize) {
        for p in fx.population.players.iter().take(n) {
            session
                .enqueue(QueueEntry {
                    player_id: p.id,
                    rating: p.displayed_rating,
                    enqueue_tick: 0,
                    mode: Mode::V3,
                })
                .unwrap();
        }
    }

    #[test]
    fn queue_of_six_is_forced_into_one_match() {
        let fx = fixture(20);
        let cfg = MatchmakerConfig::default();
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 6);
        let mut rng = crate::rngx::rng_from_seed(1);
        let proposal = session.propose(&mut rng).unwrap().unwrap();
        let mut ids = proposal.human_ids();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(proposal.team1.len(), 3);
        assert_eq!(proposal.team2.len(), 3);
        assert!(proposal.team1.iter().all(|s| s.player_id.is_some()));
    }

    #[test]
    fn queue_of_four_gets_even_bot_fill() {
        let fx = fixture(20);
        let cfg = MatchmakerConfig::default();
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 4);
        let mut rng = crate::rngx::rng_from_seed(2);
        let proposal = session.propose(&mut rng).unwrap().unwrap();
        let h1 = MatchProposal::team_humans(&proposal.team1).len();
        let h2 = MatchProposal::team_humans(&proposal.team2).len();
        assert_eq!((h1, h2), (2, 2));
        let idx = fx.schema.index_of("t1_human_count").unwrap();
        assert_eq!(proposal.features[idx], 2.0);
        assert_eq!(proposal.features[idx + 1], 2.0);
    }

    #[test]
    fn single_player_is_a_wait_signal() {
        let fx = fixture(20);
        let cfg = MatchmakerConfig::default();
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 1);
        let mut rng = crate::rngx::rng_from_seed(3);
        assert!(session.propose(&mut rng).unwrap().is_none());
    }

    #[test]
    fn proposals_are_deterministic_for_a_seed() {
        let fx = fixture(40);
        let cfg = MatchmakerConfig::default();
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 24);
        let a = session.propose(&mut crate::rngx::rng_from_seed(9)).unwrap().unwrap();
        let b = session.propose(&mut crate::rngx::rng_from_seed(9)).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gate_boundaries() {
        let fx = fixture(20);
        let inside = constant_model(&fx.schema, 0.4);
        let outside = constant_model(&fx.schema, 5.1);
        let cfg = MatchmakerConfig::default();
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 6);
        let proposal = session.propose(&mut crate::rngx::rng_from_seed(4)).unwrap().unwrap();
        assert!(quality_gate(&inside, &proposal, 3.0).unwrap().accept);
        assert!(!quality_gate(&outside, &proposal, 3.0).unwrap().accept);
    }

    #[test]
    fn gate_acceptance_is_monotone_in_theta() {
        let fx = fixture(60);
        let cfg = MatchmakerConfig::default();
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 40);
        let mut rng = crate::rngx::rng_from_seed(5);
        let mut proposals = Vec::new();
        for _ in 0..50 {
            proposals.push(session.propose(&mut rng).unwrap().unwrap());
        }
        // A model whose prediction varies with the skill difference.
        let d = fx.schema.dim();
        let mut coef = vec![0.0; d];
        coef[fx.schema.index_of("skill_diff").unwrap()] = 0.05;
        let model = TrainedModel {
            kind: ModelKind::Linear,
            params: ModelParams::Linear(LinearParams { coef, intercept: 0.0 }),
            normalizer: Normalizer { mean: vec![0.0; d], std: vec![1.0; d] },
            mask: FeatureMask::full(d),
            schema_hash: fx.schema.hash64(),
            train_days: None,
        };
        let count = |theta: f64| {
            proposals
                .iter()
                .filter(|p| quality_gate(&model, p, theta).unwrap().accept)
                .count()
        };
        let mut last = 0;
        for theta in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let c = count(theta);
            assert!(c >= last, "theta {theta}: {c} < {last}");
            last = c;
        }
    }

    #[test]
    fn always_accepting_gate_launches_first_proposals() {
        let fx = fixture(40);
        let cfg = MatchmakerConfig { auto_requeue: true, ..MatchmakerConfig::default() };
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 24);
        let model = constant_model(&fx.schema, 0.0); // always inside the band
        let mut rng = crate::rngx::rng_from_seed(6);
        for _ in 0..10 {
            let launched = session.tick(Some(&model), &mut rng).unwrap().unwrap();
            assert_eq!(launched.attempts, 1);
            assert!(!launched.fallback);
        }
    }

    #[test]
    fn always_rejecting_gate_falls_back_after_max_attempts() {
        let fx = fixture(40);
        let cfg = MatchmakerConfig {
            max_attempts: 7,
            auto_requeue: true,
            ..MatchmakerConfig::default()
        };
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 24);
        let model = constant_model(&fx.schema, 9.0); // always outside the band
        let mut rng = crate::rngx::rng_from_seed(7);
        let launched = session.tick(Some(&model), &mut rng).unwrap().unwrap();
        assert_eq!(launched.attempts, 7);
        assert!(launched.fallback);
    }

    #[test]
    fn no_player_sits_in_two_concurrent_matches() {
        let fx = fixture(30);
        let cfg = MatchmakerConfig {
            match_duration_ticks: 5,
            auto_requeue: true,
            ..MatchmakerConfig::default()
        };
        let mut session = MatchmakingSession::new(cfg, &fx.schema, &fx.store, &fx.ratings);
        enqueue_all(&mut session, &fx, 30);
        let mut rng = crate::rngx::rng_from_seed(8);
        let mut busy_until: BTreeMap<PlayerId, u64> = BTreeMap::new();
        for _ in 0..200 {
            if let Some(launched) = session.tick(None, &mut rng).unwrap() {
                for id in launched.proposal.human_ids() {
                    if let Some(&until) = busy_until.get(&id) {
                        assert!(
                            launched.tick >= until,
                            "player {id} relaunched at {} while busy until {until}",
                            launched.tick
                        );
                    }
                    busy_until.insert(id, launched.tick + 5);
                }
            }
        }
    }
}
