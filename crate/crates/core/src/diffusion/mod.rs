//! Adapt-then-combine diffusion localization.
//!
//! Every agent keeps a full N×2 estimate of the network's positions. Each
//! iteration it adapts that estimate against local Laplacian measurements,
//! then replaces it with a convex combination of its neighbors' adapted
//! estimates. Three adaptation rules are provided:
//!
//! * [`Algorithm::Gllms`]: an LMS step on the agent's own Laplacian row.
//! * [`Algorithm::Gllme`]: an LMS step on the weighted rows of the whole
//!   neighborhood, after neighbors exchange their measurements.
//! * [`Algorithm::Glcg`]: a conjugate-gradient step on the neighborhood's
//!   normal equations.
//!
//! The measurement of agent i is s_i = d_i·δ_i, so that L·x = s for exact
//! inputs and the true positions are a fixed point of every rule.

mod cg;
mod delay;
mod init;
mod step;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use cg::{CgState, CgUpdate, REGULARIZATION};
pub use delay::{DelayLine, DelayMode, DelayPolicy, DelaySchedule};
pub use init::{coherent_init, reset_on_membership_change, InitMode, InitPolicy};
pub use step::{
    exchange_covariance, gllme_sufficient_bound, step_size_gllme, step_size_gllms, StepSizeRule, StepSizes,
};

use crate::graph::{CombinationMatrix, VanetGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gllms,
    Gllme,
    Glcg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Gllms, Algorithm::Gllme, Algorithm::Glcg];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gllms => "gllms",
            Algorithm::Gllme => "gllme",
            Algorithm::Glcg => "glcg",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown diffusion algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionConfig {
    pub step_size: StepSizeRule,
    /// Weight λ on the previous gradient in the CG recursion.
    pub forgetting_factor: f64,
    pub cg_update: CgUpdate,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            step_size: StepSizeRule::Optimal,
            forgetting_factor: 0.2,
            cg_update: CgUpdate::Standard,
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        self.step_size.validate()?;
        if !(0.0..=1.0).contains(&self.forgetting_factor) {
            return Err(Error::Config(format!(
                "diffusion.forgetting_factor must lie in [0, 1], got {}",
                self.forgetting_factor
            )));
        }
        Ok(())
    }
}

/// What every agent can see during one time step.
#[derive(Debug, Clone, Copy)]
pub struct Network<'a> {
    pub graph: &'a VanetGraph,
    pub weights: &'a CombinationMatrix,
    /// s = D·δ, N×2.
    pub measurements: &'a DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    /// Current estimate of all N positions.
    pub w: DMatrix<f64>,
    /// Latest adapted estimate published to neighbors.
    pub psi: DMatrix<f64>,
    pub cg: Option<CgState>,
}

/// One time step's worth of diffusion iterations for every agent.
#[derive(Debug, Clone)]
pub struct Diffusion<'a> {
    algorithm: Algorithm,
    net: Network<'a>,
    cfg: DiffusionConfig,
    mu: Vec<Option<f64>>,
    agents: Vec<AgentState>,
    delay: DelaySchedule,
    line: DelayLine,
    iteration: usize,
}

impl<'a> Diffusion<'a> {
    pub fn new(
        algorithm: Algorithm,
        net: Network<'a>,
        initial: Vec<DMatrix<f64>>,
        cfg: &DiffusionConfig,
        delay: DelaySchedule,
    ) -> Result<Self> {
        let n = net.graph.len();
        if initial.len() != n || initial.iter().any(|w| w.shape() != (n, 2)) || net.measurements.shape() != (n, 2)
        {
            return Err(Error::InvalidInput(format!(
                "diffusion over {n} vehicles needs {n} initial {n}x2 estimates and {n}x2 measurements"
            )));
        }
        let sizes = StepSizes::compute(net.graph, net.weights, cfg.step_size);
        let mu = match algorithm {
            Algorithm::Gllms => sizes.mu1,
            Algorithm::Gllme => sizes.mu2,
            Algorithm::Glcg => vec![None; n],
        };
        let agents: Vec<AgentState> = initial
            .into_iter()
            .enumerate()
            .map(|(id, w)| AgentState {
                id,
                psi: w.clone(),
                cg: (algorithm == Algorithm::Glcg && net.graph.degree(id) > 0)
                    .then(|| CgState::new(net.graph, net.measurements, id, &w)),
                w,
            })
            .collect();
        let line = DelayLine::new(agents.iter().map(|a| a.w.clone()).collect(), delay.max_lag());
        Ok(Self {
            algorithm,
            net,
            cfg: *cfg,
            mu,
            agents,
            delay,
            line,
            iteration: 0,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn estimates(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.agents.iter().map(|a| &a.w)
    }

    pub fn into_agents(self) -> Vec<AgentState> {
        self.agents
    }

    /// Iterations completed so far.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Run one adapt-then-combine round.
    pub fn step(&mut self) -> Result<()> {
        self.iteration += 1;
        let k = self.iteration;
        for i in 0..self.agents.len() {
            let psi = self.adapt(i);
            self.check(i, &psi)?;
            self.agents[i].psi = psi;
        }
        self.line.publish(self.agents.iter().map(|a| a.psi.clone()).collect());

        let graph = self.net.graph;
        for i in 0..self.agents.len() {
            let neighbors = graph.neighbors(i);
            let lags = self.delay.lags(i, k, neighbors.len());
            let mut w = &self.agents[i].psi * self.net.weights.weight(i, i);
            for (&l, lag) in neighbors.iter().zip(lags) {
                w += self.line.get(l, lag) * self.net.weights.weight(i, l);
            }
            self.check(i, &w)?;
            self.agents[i].w = w;
        }
        Ok(())
    }

    /// Run `iterations` rounds, calling `observe` after each.
    pub fn run(&mut self, iterations: usize, mut observe: impl FnMut(usize, &[AgentState])) -> Result<()> {
        for _ in 0..iterations {
            self.step()?;
            observe(self.iteration, &self.agents);
        }
        Ok(())
    }

    fn check(&self, i: usize, m: &DMatrix<f64>) -> Result<()> {
        if m.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Divergence {
                algorithm: self.algorithm,
                step: None,
                iteration: self.iteration,
                vehicle: i,
            })
        }
    }

    fn adapt(&mut self, i: usize) -> DMatrix<f64> {
        let Network {
            graph,
            weights,
            measurements: s,
        } = self.net;
        let agent = &mut self.agents[i];
        let w = &agent.w;
        match self.algorithm {
            Algorithm::Gllms => {
                let Some(mu) = self.mu[i] else { return w.clone() };
                let row = graph.laplacian_row(i);
                let mut psi = w.clone();
                for axis in 0..2 {
                    let error = s[(i, axis)] - row.dot(w.column(axis).as_slice());
                    row.axpy(mu * error, psi.column_mut(axis).as_mut_slice());
                }
                psi
            }
            Algorithm::Gllme => {
                let Some(mu) = self.mu[i] else { return w.clone() };
                let mut psi = w.clone();
                for l in graph.neighborhood(i) {
                    let row = graph.laplacian_row(l);
                    let c = weights.weight(i, l);
                    for axis in 0..2 {
                        let error = s[(l, axis)] - row.dot(w.column(axis).as_slice());
                        row.axpy(mu * c * error, psi.column_mut(axis).as_mut_slice());
                    }
                }
                psi
            }
            Algorithm::Glcg => match agent.cg.as_mut() {
                Some(cg) => cg.step(w, self.cfg.forgetting_factor, self.cfg.cg_update),
                None => w.clone(),
            },
        }
    }
}

/// Initialize every agent at `initial`, run `iterations` rounds without
/// delay and return the final agent states.
pub fn iterate(
    algorithm: Algorithm,
    net: Network<'_>,
    initial: Vec<DMatrix<f64>>,
    cfg: &DiffusionConfig,
    iterations: usize,
) -> Result<Vec<AgentState>> {
    let mut d = Diffusion::new(algorithm, net, initial, cfg, DelaySchedule::undelayed())?;
    d.run(iterations, |_, _| {})?;
    Ok(d.into_agents())
}
