//! Strategy tables, agents and the five grand-canonical game variants.
//!
//! Agents read the last `m` binary symbols of the external series, pick the
//! strategy with the most virtual points (lowest index on ties) and trade its
//! prescribed action only if that score is strictly above the shared
//! threshold; otherwise they stay out. Every strategy is scored against the
//! realized external sign whether or not its owner traded.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Sign, Window};

/// Largest supported memory; a table of `2^6` cells fits one `u64`.
pub const MAX_MEMORY: u8 = 6;

/// The last `len` binary symbols, newest in bit 0 (`1` = up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct History {
    bits: u64,
    len: u8,
}

impl History {
    pub fn empty(len: u8) -> Self {
        Self { bits: 0, len }
    }

    /// `signs` ordered oldest first.
    pub fn from_signs(signs: &[Sign]) -> Result<Self> {
        if signs.len() > MAX_MEMORY as usize {
            return Err(Error::HistoryLength {
                expected: MAX_MEMORY as usize,
                got: signs.len(),
            });
        }
        let mut h = History::empty(signs.len() as u8);
        for &s in signs {
            h.push(s);
        }
        Ok(h)
    }

    #[inline]
    pub fn push(&mut self, s: Sign) {
        let mask = (1u64 << self.len) - 1;
        self.bits = ((self.bits << 1) | s.is_up() as u64) & mask;
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Symbols oldest first.
    pub fn signs(&self) -> Vec<Sign> {
        (0..self.len)
            .rev()
            .map(|i| {
                if self.bits >> i & 1 == 1 {
                    Sign::Up
                } else {
                    Sign::Down
                }
            })
            .collect()
    }
}

/// Map from an `m`-symbol history to buy (+1) or sell (-1), bit-packed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyTable {
    memory: u8,
    bits: u64,
}

impl StrategyTable {
    pub fn new(memory: u8, bits: u64) -> Result<Self> {
        if memory > MAX_MEMORY {
            return Err(Error::InvalidHyper(alloc::format!(
                "memory {memory} exceeds {MAX_MEMORY}"
            )));
        }
        if bits & !Self::mask_for(memory) != 0 {
            return Err(Error::InvalidHyper(alloc::format!(
                "table bits {bits:#x} exceed 2^{memory} cells"
            )));
        }
        Ok(Self { memory, bits })
    }

    /// Entry `i` of `actions` is the action for history index `i`.
    pub fn from_actions(memory: u8, actions: &[i8]) -> Result<Self> {
        if actions.len() != 1usize << memory {
            return Err(Error::InvalidHyper(alloc::format!(
                "table for memory {memory} needs {} entries, got {}",
                1usize << memory,
                actions.len()
            )));
        }
        let mut bits = 0u64;
        for (i, &a) in actions.iter().enumerate() {
            match a {
                1 => bits |= 1 << i,
                -1 => {}
                _ => {
                    return Err(Error::InvalidHyper(alloc::format!(
                        "strategy action {a} not in {{+1, -1}}"
                    )))
                }
            }
        }
        Self::new(memory, bits)
    }

    pub fn constant(memory: u8, action: Sign) -> Self {
        let bits = if action.is_up() {
            Self::mask_for(memory)
        } else {
            0
        };
        Self { memory, bits }
    }

    pub fn random<R: Rng + ?Sized>(memory: u8, rng: &mut R) -> Self {
        Self {
            memory,
            bits: rng.gen::<u64>() & Self::mask_for(memory),
        }
    }

    #[inline]
    fn mask_for(memory: u8) -> u64 {
        if memory >= 6 {
            u64::MAX
        } else {
            (1u64 << (1u32 << memory)) - 1
        }
    }

    #[inline]
    pub fn action(&self, history: usize) -> i8 {
        if self.bits >> history & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn memory(&self) -> u8 {
        self.memory
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn cells(&self) -> usize {
        1 << self.memory
    }

    #[inline]
    pub fn flip(&mut self, cell: usize) {
        self.bits ^= 1 << cell;
    }

    pub fn actions(&self) -> Vec<i8> {
        (0..self.cells()).map(|i| self.action(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffRule {
    Minority,
    Majority,
}

impl PayoffRule {
    #[inline]
    fn sign(self) -> f64 {
        match self {
            PayoffRule::Minority => -1.0,
            PayoffRule::Majority => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameVariant {
    #[serde(rename = "GCMG")]
    Gcmg,
    #[serde(rename = "GCMjG")]
    Gcmjg,
    #[serde(rename = "DelGCMjG", alias = "delGCMjG")]
    DelGcmjg,
    #[serde(rename = "DelGCMG", alias = "delGCMG")]
    DelGcmg,
    #[serde(rename = "MixG")]
    Mixg,
}

impl GameVariant {
    pub const ALL: [GameVariant; 5] = [
        GameVariant::Gcmg,
        GameVariant::Gcmjg,
        GameVariant::DelGcmjg,
        GameVariant::DelGcmg,
        GameVariant::Mixg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GameVariant::Gcmg => "GCMG",
            GameVariant::Gcmjg => "GCMjG",
            GameVariant::DelGcmjg => "DelGCMjG",
            GameVariant::DelGcmg => "DelGCMG",
            GameVariant::Mixg => "MixG",
        }
    }

    pub fn is_delayed(self) -> bool {
        matches!(self, GameVariant::DelGcmjg | GameVariant::DelGcmg)
    }

    /// Payoff rule of agent `index` in a population of `agents`. Mixed games
    /// put the first `ceil(N/2)` agents on the minority rule.
    pub fn rule_for(self, index: usize, agents: usize) -> PayoffRule {
        match self {
            GameVariant::Gcmg | GameVariant::DelGcmg => PayoffRule::Minority,
            GameVariant::Gcmjg | GameVariant::DelGcmjg => PayoffRule::Majority,
            GameVariant::Mixg => {
                if index < agents.div_ceil(2) {
                    PayoffRule::Minority
                } else {
                    PayoffRule::Majority
                }
            }
        }
    }

    pub fn id(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for GameVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GameVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

/// Serializes infinite thresholds as the strings `"inf"` / `"-inf"` so JSON
/// round-trips stay exact.
mod threshold_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> core::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(alloc::format!(
                    "threshold must be a number or \"inf\", got {t:?}"
                ))),
            },
        }
    }
}

/// Fixed game hyperparameters: agent count `N`, strategies per agent `S`,
/// memory `m`, activity threshold `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub agents: usize,
    pub strategies: usize,
    pub memory: u8,
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            agents: 15,
            strategies: 2,
            memory: 3,
            threshold: 0.0,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::InvalidHyper("agents must be >= 1".into()));
        }
        if self.strategies == 0 {
            return Err(Error::InvalidHyper("strategies must be >= 1".into()));
        }
        if self.memory > MAX_MEMORY {
            return Err(Error::InvalidHyper(alloc::format!(
                "memory {} exceeds {MAX_MEMORY}",
                self.memory
            )));
        }
        if self.threshold.is_nan() {
            return Err(Error::InvalidHyper("threshold is NaN".into()));
        }
        Ok(())
    }

    pub fn table_count(&self) -> usize {
        self.agents * self.strategies
    }
}

/// One step of aggregate market activity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarketStep {
    /// History the decisions were taken on.
    pub history: History,
    /// Per-agent action in {+1, 0, -1}; 0 means the agent stayed out.
    pub actions: Vec<i8>,
    /// Sum of `actions`.
    pub excess_demand: i32,
}

/// Read-only view of one agent.
#[derive(Debug, Clone, Copy)]
pub struct Agent<'a> {
    pub strategies: &'a [StrategyTable],
    pub scores: &'a [f64],
    pub threshold: f64,
    pub rule: PayoffRule,
    pub delayed: bool,
}

impl Agent<'_> {
    /// Index of the highest-scoring strategy, lowest index on ties.
    pub fn best_strategy(&self) -> usize {
        best_index(self.scores)
    }

    pub fn is_active(&self) -> bool {
        self.scores[self.best_strategy()] > self.threshold
    }
}

#[inline]
fn best_index(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Canonical persisted form of a game: variant, hyperparameters and the
/// initial strategy distribution (`isd[agent][strategy]` = table bits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDefinition {
    pub variant: GameVariant,
    pub hyper: Hyper,
    pub isd: Vec<Vec<u64>>,
}

/// A candidate agent ensemble.
///
/// Tables and scores are stored agent-major in flat vectors: agent `i` owns
/// slots `i*S .. (i+1)*S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdPartyGame {
    variant: GameVariant,
    hyper: Hyper,
    tables: Vec<StrategyTable>,
    scores: Vec<f64>,
    rules: Vec<PayoffRule>,
    pending: Option<History>,
}

impl ThirdPartyGame {
    /// `tables` is the flattened initial strategy distribution, agent-major.
    pub fn new(variant: GameVariant, hyper: Hyper, tables: Vec<StrategyTable>) -> Result<Self> {
        hyper.validate()?;
        if tables.len() != hyper.table_count() {
            return Err(Error::GenomeMismatch);
        }
        if tables.iter().any(|t| t.memory() != hyper.memory) {
            return Err(Error::GenomeMismatch);
        }
        let rules = (0..hyper.agents)
            .map(|i| variant.rule_for(i, hyper.agents))
            .collect();
        Ok(Self {
            variant,
            hyper,
            scores: alloc::vec![0.0; tables.len()],
            tables,
            rules,
            pending: None,
        })
    }

    pub fn from_definition(def: &GameDefinition) -> Result<Self> {
        def.hyper.validate()?;
        if def.isd.len() != def.hyper.agents
            || def.isd.iter().any(|a| a.len() != def.hyper.strategies)
        {
            return Err(Error::GenomeMismatch);
        }
        let tables = def
            .isd
            .iter()
            .flatten()
            .map(|&bits| StrategyTable::new(def.hyper.memory, bits))
            .collect::<Result<Vec<_>>>()?;
        Self::new(def.variant, def.hyper, tables)
    }

    /// Variant, hyperparameters and initial strategy distribution. Scores are
    /// not part of the definition.
    pub fn definition(&self) -> GameDefinition {
        GameDefinition {
            variant: self.variant,
            hyper: self.hyper,
            isd: self
                .tables
                .chunks(self.hyper.strategies)
                .map(|c| c.iter().map(|t| t.bits()).collect())
                .collect(),
        }
    }

    pub fn variant(&self) -> GameVariant {
        self.variant
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    pub fn tables(&self) -> &[StrategyTable] {
        &self.tables
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn pending(&self) -> Option<History> {
        self.pending
    }

    pub fn agent(&self, i: usize) -> Agent<'_> {
        let s = self.hyper.strategies;
        Agent {
            strategies: &self.tables[i * s..(i + 1) * s],
            scores: &self.scores[i * s..(i + 1) * s],
            threshold: self.hyper.threshold,
            rule: self.rules[i],
            delayed: self.variant.is_delayed(),
        }
    }

    /// Clears virtual points and any pending delayed payoff.
    pub fn reset(&mut self) {
        self.scores.iter_mut().for_each(|s| *s = 0.0);
        self.pending = None;
    }

    /// Drops the unsettled delayed payoff left at the end of a window.
    pub fn discard_pending(&mut self) {
        if self.pending.take().is_some() {
            log::debug!("discarding unsettled delayed payoff");
        }
    }

    fn check_history(&self, history: &History) -> Result<()> {
        if history.len() != self.hyper.memory as usize {
            return Err(Error::HistoryLength {
                expected: self.hyper.memory as usize,
                got: history.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn agent_action(&self, agent: usize, h: usize) -> i8 {
        let s = self.hyper.strategies;
        let scores = &self.scores[agent * s..(agent + 1) * s];
        let best = best_index(scores);
        if scores[best] > self.hyper.threshold {
            self.tables[agent * s + best].action(h)
        } else {
            0
        }
    }

    #[inline]
    fn demand_unchecked(&self, h: usize) -> i32 {
        (0..self.hyper.agents)
            .map(|i| self.agent_action(i, h) as i32)
            .sum()
    }

    /// Every agent's action for `history`. Does not change the game.
    pub fn decide(&self, history: &History) -> Result<MarketStep> {
        self.check_history(history)?;
        let h = history.index();
        let actions: Vec<i8> = (0..self.hyper.agents)
            .map(|i| self.agent_action(i, h))
            .collect();
        let excess_demand = actions.iter().map(|&a| a as i32).sum();
        Ok(MarketStep {
            history: *history,
            actions,
            excess_demand,
        })
    }

    /// Excess demand for the next, unseen day. Scores are left untouched.
    pub fn predict_next(&self, history: &History) -> Result<i32> {
        self.check_history(history)?;
        Ok(self.demand_unchecked(history.index()))
    }

    /// Credits every strategy for the decision taken on `history`.
    #[inline]
    fn apply_payoff(&mut self, h: usize, realized: Sign) {
        let s = self.hyper.strategies;
        let r = realized.value() as f64;
        for (agent, rule) in self.rules.iter().enumerate() {
            let delta = rule.sign() * r;
            for k in agent * s..(agent + 1) * s {
                self.scores[k] += delta * self.tables[k].action(h) as f64;
            }
        }
    }

    /// Updates virtual points after `step` with the realized external sign.
    ///
    /// Non-delayed variants score `step` immediately. Delayed variants settle
    /// the previously enqueued step with `realized` and enqueue `step`, so a
    /// decision taken at `t` is paid with the sign realized at `t + 1`.
    pub fn score_update(&mut self, step: &MarketStep, realized: Sign) -> Result<()> {
        self.check_history(&step.history)?;
        self.settle(step.history, realized);
        Ok(())
    }

    #[inline]
    fn settle(&mut self, history: History, realized: Sign) {
        if self.variant.is_delayed() {
            if let Some(prev) = self.pending.replace(history) {
                self.apply_payoff(prev.index(), realized);
            }
        } else {
            self.apply_payoff(history.index(), realized);
        }
    }

    /// Trains over `window`, one [`MarketStep`] per day. Histories always come
    /// from the external series, never from the game's own output.
    pub fn run_window(&mut self, window: &Window<'_>) -> Result<Vec<MarketStep>> {
        self.check_history(&window.warm)?;
        let mut history = window.warm;
        let mut steps = Vec::with_capacity(window.len());
        for &realized in window.binary {
            let step = self.decide(&history)?;
            self.score_update(&step, realized)?;
            steps.push(step);
            history.push(realized);
        }
        Ok(steps)
    }

    /// Same dynamics as [`run_window`](Self::run_window), keeping only the
    /// excess demand. Returns the history after the last day.
    pub fn run_demand(&mut self, window: &Window<'_>, out: &mut Vec<i32>) -> Result<History> {
        self.check_history(&window.warm)?;
        out.clear();
        out.reserve(window.len());
        let mut history = window.warm;
        for &realized in window.binary {
            out.push(self.demand_unchecked(history.index()));
            self.settle(history, realized);
            history.push(realized);
        }
        Ok(history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn table(m: u8, actions: &[i8]) -> StrategyTable {
        StrategyTable::from_actions(m, actions).unwrap()
    }

    fn hyper(n: usize, s: usize, m: u8, tau: f64) -> Hyper {
        Hyper {
            agents: n,
            strategies: s,
            memory: m,
            threshold: tau,
        }
    }

    fn hist(signs: &[Sign]) -> History {
        History::from_signs(signs).unwrap()
    }

    use Sign::{Down, Up};

    #[test]
    fn history_packs_newest_low() {
        let h = hist(&[Up, Down, Down]);
        assert_eq!(h.index(), 0b100);
        let mut h2 = h;
        h2.push(Up);
        assert_eq!(h2.index(), 0b001);
        assert_eq!(h2.signs(), vec![Down, Down, Up]);
        assert!(History::from_signs(&[Up; 7]).is_err());
    }

    #[test]
    fn table_bounds() {
        let t = table(1, &[-1, 1]);
        assert_eq!(t.action(0), -1);
        assert_eq!(t.action(1), 1);
        assert!(StrategyTable::new(1, 0b100).is_err());
        assert!(StrategyTable::new(7, 0).is_err());
        assert_eq!(StrategyTable::constant(6, Up).bits(), u64::MAX);
        assert!(StrategyTable::from_actions(1, &[0, 1]).is_err());
    }

    #[test]
    fn abstains_at_threshold_boundary() {
        let g = ThirdPartyGame::new(
            GameVariant::Gcmjg,
            hyper(1, 1, 1, 0.0),
            vec![table(1, &[1, 1])],
        )
        .unwrap();
        let step = g.decide(&hist(&[Up])).unwrap();
        assert_eq!(step.actions, vec![0]);
        assert_eq!(step.excess_demand, 0);
    }

    #[test]
    fn active_agent_trades() {
        let mut g = ThirdPartyGame::new(
            GameVariant::Gcmjg,
            hyper(1, 1, 1, 0.0),
            vec![table(1, &[1, 1])],
        )
        .unwrap();
        g.scores[0] = 1.0;
        assert_eq!(g.decide(&hist(&[Up])).unwrap().excess_demand, 1);
        assert_eq!(g.predict_next(&hist(&[Up])).unwrap(), 1);
    }

    #[test]
    fn history_length_checked() {
        let g = ThirdPartyGame::new(
            GameVariant::Gcmg,
            hyper(1, 1, 2, 0.0),
            vec![table(2, &[1; 4])],
        )
        .unwrap();
        assert_eq!(
            g.decide(&hist(&[Up])).unwrap_err(),
            Error::HistoryLength {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn three_agent_enumeration() {
        // m = 1, history [+1] -> cell 1.
        let tables = vec![
            table(1, &[1, 1]),   // agent 0, s0
            table(1, &[1, -1]),  // agent 0, s1
            table(1, &[-1, -1]), // agent 1, s0
            table(1, &[-1, 1]),  // agent 1, s1
            table(1, &[1, -1]),  // agent 2, s0
            table(1, &[-1, 1]),  // agent 2, s1
        ];
        let mut g = ThirdPartyGame::new(GameVariant::Gcmg, hyper(3, 2, 1, 0.5), tables).unwrap();
        g.scores = vec![2.0, 3.0, 1.0, 1.0, 0.0, 0.5];
        // agent 0: best s1 (3.0 > 0.5) -> table[1][cell 1] = -1
        // agent 1: tie 1.0/1.0 -> s0 -> -1
        // agent 2: best s1 score 0.5, not > 0.5 -> abstain
        let step = g.decide(&hist(&[Up])).unwrap();
        assert_eq!(step.actions, vec![-1, -1, 0]);
        assert_eq!(step.excess_demand, -2);
        assert_eq!(g.predict_next(&hist(&[Up])).unwrap(), -2);
    }

    fn single(variant: GameVariant, action: i8) -> ThirdPartyGame {
        ThirdPartyGame::new(
            variant,
            hyper(1, 1, 1, 0.0),
            vec![table(1, &[action, action])],
        )
        .unwrap()
    }

    #[test]
    fn majority_and_minority_payoffs() {
        let mut g = single(GameVariant::Gcmjg, 1);
        let step = g.decide(&hist(&[Up])).unwrap();
        g.score_update(&step, Up).unwrap();
        assert_eq!(g.scores(), &[1.0]);

        let mut g = single(GameVariant::Gcmg, 1);
        let step = g.decide(&hist(&[Up])).unwrap();
        g.score_update(&step, Up).unwrap();
        assert_eq!(g.scores(), &[-1.0]);
    }

    #[test]
    fn delayed_payoff_settles_next_step() {
        let mut g = single(GameVariant::DelGcmjg, 1);
        let s0 = g.decide(&hist(&[Up])).unwrap();
        g.score_update(&s0, Up).unwrap();
        assert_eq!(g.scores(), &[0.0]);
        assert!(g.pending().is_some());
        let s1 = g.decide(&hist(&[Up])).unwrap();
        g.score_update(&s1, Down).unwrap();
        assert_eq!(g.scores(), &[-1.0]);
    }

    #[test]
    fn delayed_payoff_uses_earlier_history() {
        // Strategy buys after up, sells after down. Decision at t on [Up] (+1),
        // realized(t+1) = Down -> -1 for that decision, regardless of the
        // t+1 decision on [Down].
        let mut g = ThirdPartyGame::new(
            GameVariant::DelGcmjg,
            hyper(1, 1, 1, 0.0),
            vec![table(1, &[-1, 1])],
        )
        .unwrap();
        let s0 = g.decide(&hist(&[Up])).unwrap();
        g.score_update(&s0, Up).unwrap();
        let s1 = g.decide(&hist(&[Up])).unwrap();
        g.score_update(&s1, Down).unwrap();
        assert_eq!(g.scores(), &[-1.0]);
        let s2 = g.decide(&hist(&[Down])).unwrap();
        g.score_update(&s2, Down).unwrap();
        // settles s1 (history [Up], action +1) against Down
        assert_eq!(g.scores(), &[-2.0]);
    }

    #[test]
    fn mixed_game_splits_rules() {
        let tables = vec![StrategyTable::constant(1, Up); 5];
        let mut g = ThirdPartyGame::new(GameVariant::Mixg, hyper(5, 1, 1, 0.0), tables).unwrap();
        let rules: Vec<_> = (0..5).map(|i| g.agent(i).rule).collect();
        assert_eq!(
            rules,
            vec![
                PayoffRule::Minority,
                PayoffRule::Minority,
                PayoffRule::Minority,
                PayoffRule::Majority,
                PayoffRule::Majority
            ]
        );
        let step = g.decide(&hist(&[Up])).unwrap();
        g.score_update(&step, Up).unwrap();
        assert_eq!(g.scores(), &[-1.0, -1.0, -1.0, 1.0, 1.0]);
    }

    fn series_window<'a>(
        binary: &'a [Sign],
        returns: &'a [f64],
        ternary: &'a [i8],
        warm: &[Sign],
    ) -> Window<'a> {
        Window {
            warm: hist(warm),
            returns,
            binary,
            ternary,
        }
    }

    #[test]
    fn unit_window_and_abstaining_game() {
        let b = [Up];
        let w = series_window(&b, &[0.1], &[1], &[Down]);
        let mut g = single(GameVariant::Gcmg, 1);
        assert_eq!(g.run_window(&w).unwrap().len(), 1);

        let b = [Up, Down, Up, Up];
        let w = series_window(&b, &[0.1, -0.1, 0.1, 0.1], &[1, -1, 1, 1], &[Down]);
        let mut g = ThirdPartyGame::new(
            GameVariant::Gcmjg,
            hyper(3, 2, 1, f64::INFINITY),
            vec![StrategyTable::constant(1, Up); 6],
        )
        .unwrap();
        let steps = g.run_window(&w).unwrap();
        assert!(steps.iter().all(|s| s.excess_demand == 0));
        assert_eq!(g.predict_next(&hist(&[Up])).unwrap(), 0);
    }

    #[test]
    fn two_agent_three_day_trace() {
        // N=2, S=1, m=1, tau=0, GCMjG.
        // agent 0: trend follower [-1, +1]; agent 1: contrarian [+1, -1].
        // external: warm [Up], days Up, Down, Down.
        let mut g = ThirdPartyGame::new(
            GameVariant::Gcmjg,
            hyper(2, 1, 1, 0.0),
            vec![table(1, &[-1, 1]), table(1, &[1, -1])],
        )
        .unwrap();
        let b = [Up, Down, Down];
        let w = series_window(&b, &[0.1, -0.1, -0.1], &[1, -1, -1], &[Up]);
        let steps = g.run_window(&w).unwrap();
        // day 0: h=[Up] scores 0,0 -> both abstain; a0=+1,a1=-1 vs Up -> +1,-1
        // day 1: h=[Up] agent0 score 1 > 0 -> +1; agent1 -1 -> abstain. A=+1.
        //        vs Down: agent0 -> 0, agent1 -> 0
        // day 2: h=[Down] both scores 0 -> abstain, A=0. a0=-1, a1=+1 vs Down:
        //        agent0 -> 1, agent1 -> -1
        let demand: Vec<i32> = steps.iter().map(|s| s.excess_demand).collect();
        assert_eq!(demand, vec![0, 1, 0]);
        assert_eq!(steps[1].actions, vec![1, 0]);
        assert_eq!(g.scores(), &[1.0, -1.0]);
    }

    #[test]
    fn definition_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = hyper(4, 3, 2, f64::INFINITY);
        let tables = (0..12)
            .map(|_| StrategyTable::random(2, &mut rng))
            .collect();
        let g = ThirdPartyGame::new(GameVariant::DelGcmg, h, tables).unwrap();
        let def = g.definition();
        let back = ThirdPartyGame::from_definition(&def).unwrap();
        assert_eq!(back, g);
        let mut bad = def.clone();
        bad.isd[0].pop();
        assert_eq!(
            ThirdPartyGame::from_definition(&bad).unwrap_err(),
            Error::GenomeMismatch
        );
    }

    #[test]
    fn variant_names() {
        for v in GameVariant::ALL {
            assert_eq!(v.name().parse::<GameVariant>().unwrap(), v);
        }
        assert_eq!(
            "delgcmjg".parse::<GameVariant>().unwrap(),
            GameVariant::DelGcmjg
        );
        assert!("foo".parse::<GameVariant>().is_err());
    }

    fn arb_game(variant: GameVariant) -> impl Strategy<Value = (ThirdPartyGame, Vec<Sign>, Sign)> {
        (
            1usize..8,
            1usize..4,
            0u8..4,
            any::<u64>(),
            prop::collection::vec(-3i32..4, 32),
            any::<bool>(),
        )
            .prop_map(move |(n, s, m, seed, raw_scores, up)| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let tables = (0..n * s)
                    .map(|_| StrategyTable::random(m, &mut rng))
                    .collect();
                let mut g = ThirdPartyGame::new(variant, hyper(n, s, m, 0.0), tables).unwrap();
                for (k, sc) in g.scores.iter_mut().enumerate() {
                    *sc = raw_scores[k % raw_scores.len()] as f64;
                }
                let h: Vec<Sign> = (0..m)
                    .map(|i| if seed >> i & 1 == 1 { Up } else { Down })
                    .collect();
                (g, h, if up { Up } else { Down })
            })
    }

    proptest! {
        #[test]
        fn demand_is_bounded((g, h, _) in arb_game(GameVariant::Gcmg)) {
            let step = g.decide(&hist(&h)).unwrap();
            prop_assert!(step.excess_demand.unsigned_abs() as usize <= g.hyper().agents);
            prop_assert_eq!(step.excess_demand, step.actions.iter().map(|&a| a as i32).sum::<i32>());
        }

        #[test]
        fn fast_path_matches_steps(seed in any::<u64>(), len in 1usize..30, variant in prop::sample::select(GameVariant::ALL.to_vec())) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let h = hyper(7, 3, 2, 0.0);
            let tables: Vec<_> = (0..21).map(|_| StrategyTable::random(2, &mut rng)).collect();
            let binary: Vec<Sign> = (0..len).map(|_| if rng.gen::<bool>() { Up } else { Down }).collect();
            let returns: Vec<f64> = binary.iter().map(|s| s.value() as f64).collect();
            let ternary: Vec<i8> = binary.iter().map(|s| s.value()).collect();
            let w = series_window(&binary, &returns, &ternary, &[Up, Down]);
            let mut a = ThirdPartyGame::new(variant, h, tables.clone()).unwrap();
            let mut b = ThirdPartyGame::new(variant, h, tables).unwrap();
            let steps = a.run_window(&w).unwrap();
            let mut demand = Vec::new();
            b.run_demand(&w, &mut demand).unwrap();
            prop_assert_eq!(steps.iter().map(|s| s.excess_demand).collect::<Vec<_>>(), demand);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn raising_threshold_never_adds_traders(seed in any::<u64>(), low in -3.0f64..3.0, bump in 0.0f64..4.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tables: Vec<_> = (0..20).map(|_| StrategyTable::random(2, &mut rng)).collect();
            let binary: Vec<Sign> = (0..25).map(|_| if rng.gen::<bool>() { Up } else { Down }).collect();
            let returns: Vec<f64> = binary.iter().map(|s| s.value() as f64).collect();
            let ternary: Vec<i8> = binary.iter().map(|s| s.value()).collect();
            let w = series_window(&binary, &returns, &ternary, &[Up, Up]);
            let mut lo = ThirdPartyGame::new(GameVariant::Gcmjg, hyper(10, 2, 2, low), tables.clone()).unwrap();
            let mut hi = ThirdPartyGame::new(GameVariant::Gcmjg, hyper(10, 2, 2, low + bump), tables).unwrap();
            // Scores do not depend on the threshold, so trajectories coincide.
            for (a, b) in lo.run_window(&w).unwrap().iter().zip(hi.run_window(&w).unwrap().iter()) {
                for (x, y) in a.actions.iter().zip(b.actions.iter()) {
                    prop_assert!(*y == 0 || x == y);
                }
            }
        }
    }

    #[test]
    fn abstaining_agent_still_reranks() {
        // tau = +inf: the agent never trades, yet its strategy ranking moves.
        let mut g = ThirdPartyGame::new(
            GameVariant::Gcmjg,
            hyper(1, 2, 1, f64::INFINITY),
            vec![
                StrategyTable::constant(1, Down),
                StrategyTable::constant(1, Up),
            ],
        )
        .unwrap();
        assert_eq!(g.agent(0).best_strategy(), 0);
        let b = [Up, Up];
        let w = series_window(&b, &[0.1, 0.1], &[1, 1], &[Up]);
        let steps = g.run_window(&w).unwrap();
        assert!(steps.iter().all(|s| s.excess_demand == 0));
        assert_eq!(g.agent(0).best_strategy(), 1);
    }
}
