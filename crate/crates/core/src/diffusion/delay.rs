//! Iteration-indexed network delay in the combine step.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::VanetGraph;
use crate::rng::{self, Domain};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    #[default]
    None,
    /// Each vehicle draws a lag per iteration and applies it to all neighbors.
    RandomSet,
    /// A fixed random subset of each neighborhood always arrives late.
    FixedFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayPolicy {
    pub mode: DelayMode,
    pub tau_values: Vec<usize>,
    /// Chance that a random-set draw delays at all.
    pub probability: f64,
    /// Share of each neighborhood delayed in fixed-fraction mode.
    pub fraction: f64,
    /// Run the conjugate-gradient scheme under delay too.
    pub include_glcg: bool,
}

impl Default for DelayPolicy {
    fn default() -> Self {
        Self {
            mode: DelayMode::None,
            tau_values: vec![1, 2, 3, 4],
            probability: 1.0,
            fraction: 0.8,
            include_glcg: false,
        }
    }
}

impl DelayPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn random_set(tau_values: Vec<usize>) -> Self {
        Self {
            mode: DelayMode::RandomSet,
            tau_values,
            ..Self::default()
        }
    }

    pub fn fixed_fraction(tau: usize, fraction: f64) -> Self {
        Self {
            mode: DelayMode::FixedFraction,
            tau_values: vec![tau],
            fraction,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != DelayMode::None && self.tau_values.is_empty() {
            return Err(Error::Config("delay.tau_values must not be empty when a delay mode is set".into()));
        }
        for (name, v) in [("probability", self.probability), ("fraction", self.fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("delay.{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.mode != DelayMode::None
    }

    pub fn max_lag(&self) -> usize {
        if self.is_active() {
            self.tau_values.iter().copied().max().unwrap_or(0)
        } else {
            0
        }
    }
}

/// Lag realizations for one time step, keyed by `(seed, step)`.
#[derive(Debug, Clone)]
pub struct DelaySchedule {
    policy: DelayPolicy,
    seed: u64,
    step: u64,
    /// Per vehicle, per neighbor position: whether fixed-fraction delay applies.
    late: Vec<Vec<bool>>,
}

impl DelaySchedule {
    pub fn new(policy: &DelayPolicy, graph: &VanetGraph, seed: u64, step: u64) -> Self {
        let late = if policy.mode == DelayMode::FixedFraction {
            (0..graph.len())
                .map(|i| {
                    let d = graph.degree(i);
                    let count = (policy.fraction * d as f64).round() as usize;
                    let mut order: Vec<usize> = (0..d).collect();
                    order.shuffle(&mut rng::stream(seed, Domain::DelaySubset, [step, i as u64, 0]));
                    let mut late = vec![false; d];
                    for &k in &order[..count] {
                        late[k] = true;
                    }
                    late
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            policy: policy.clone(),
            seed,
            step,
            late,
        }
    }

    pub fn undelayed() -> Self {
        Self {
            policy: DelayPolicy::none(),
            seed: 0,
            step: 0,
            late: Vec::new(),
        }
    }

    pub fn max_lag(&self) -> usize {
        self.policy.max_lag()
    }

    /// Lags vehicle `i` applies to its neighbors at iteration `k`, in
    /// neighbor order.
    pub fn lags(&self, i: usize, k: usize, degree: usize) -> Vec<usize> {
        match self.policy.mode {
            DelayMode::None => vec![0; degree],
            DelayMode::RandomSet => {
                let mut rng = rng::stream(self.seed, Domain::Delay, [self.step, i as u64, k as u64]);
                let applied = rng.random_bool(self.policy.probability);
                let tau = self.policy.tau_values[rng.random_range(0..self.policy.tau_values.len())];
                vec![if applied { tau } else { 0 }; degree]
            }
            DelayMode::FixedFraction => {
                let tau = self.policy.max_lag();
                self.late[i].iter().map(|&late| if late { tau } else { 0 }).collect()
            }
        }
    }
}

/// The last few published intermediate estimates of every agent.
#[derive(Debug, Clone)]
pub struct DelayLine {
    /// Front is the newest snapshot; index `lag` is `lag` iterations old.
    snapshots: VecDeque<Vec<DMatrix<f64>>>,
    capacity: usize,
}

impl DelayLine {
    /// Start with the initial estimates standing in for every lag that
    /// reaches before the first iteration.
    pub fn new(initial: Vec<DMatrix<f64>>, max_lag: usize) -> Self {
        let mut snapshots = VecDeque::with_capacity(max_lag + 2);
        snapshots.push_front(initial);
        Self {
            snapshots,
            capacity: max_lag + 1,
        }
    }

    pub fn publish(&mut self, psi: Vec<DMatrix<f64>>) {
        self.snapshots.push_front(psi);
        self.snapshots.truncate(self.capacity);
    }

    /// Agent `l`'s estimate as it was `lag` publications ago, or the oldest
    /// one still held.
    pub fn get(&self, l: usize, lag: usize) -> &DMatrix<f64> {
        let idx = lag.min(self.snapshots.len() - 1);
        &self.snapshots[idx][l]
    }

    pub fn newest(&self) -> &[DMatrix<f64>] {
        &self.snapshots[0]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}
