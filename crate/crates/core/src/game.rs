//! The per-tick game: a dense payoff tensor over every joint candidate
//! choice, exhaustive pure-strategy Nash enumeration, and a deterministic
//! policy for picking the profile the planner commits to.
//!
//! Strategy indices are 0-based throughout. A profile assigns one strategy
//! index per agent; profiles order lexicographically with the last agent's
//! index varying fastest, which matches the tensor's cell layout.

use thiserror::Error;

use crate::agents::AgentSpec;
use crate::costs::{total_cost, CandidateSet, CostWeights};

/// One strategy index per agent.
pub type StrategyProfile = Vec<usize>;

/// Upper bound on joint-strategy cells a tensor build will accept.
pub const DEFAULT_CELL_BUDGET: usize = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("joint strategy space needs {cells} cells, over the budget of {budget}")]
    BudgetExceeded { cells: u128, budget: usize },
}

/// Dense cost table over all joint strategy profiles. Cell `(b_1, .., b_N)`
/// stores every agent's total cost under that profile.
#[derive(Debug, Clone)]
pub struct PayoffTensor {
    extents: Vec<usize>,
    strides: Vec<usize>,
    /// `costs[cell * n_agents + agent]`.
    costs: Vec<f64>,
}

impl PayoffTensor {
    /// Build a tensor from raw per-cell costs, laid out cell-major with
    /// cells in lexicographic profile order. Costs may be `INFINITY` (the
    /// collision sentinel) but never NaN.
    pub fn from_costs(extents: Vec<usize>, costs: Vec<f64>) -> Self {
        assert!(!extents.is_empty(), "tensor needs at least one agent");
        assert!(extents.iter().all(|&s| s >= 1), "every agent needs at least one strategy");
        let cells: usize = extents.iter().product();
        assert_eq!(costs.len(), cells * extents.len(), "cost table size mismatch");
        assert!(costs.iter().all(|c| !c.is_nan()), "costs must not be NaN");
        let strides = Self::strides_for(&extents);
        Self { extents, strides, costs }
    }

    fn strides_for(extents: &[usize]) -> Vec<usize> {
        let mut strides = vec![1; extents.len()];
        for i in (0..extents.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * extents[i + 1];
        }
        strides
    }

    pub fn n_agents(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn n_cells(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn cell_index(&self, profile: &[usize]) -> usize {
        assert_eq!(profile.len(), self.extents.len());
        profile
            .iter()
            .zip(&self.extents)
            .zip(&self.strides)
            .map(|((&b, &s), &stride)| {
                assert!(b < s, "strategy index {b} out of range (extent {s})");
                b * stride
            })
            .sum()
    }

    pub fn profile_of(&self, mut cell: usize) -> StrategyProfile {
        let mut profile = vec![0; self.extents.len()];
        for (i, &stride) in self.strides.iter().enumerate() {
            profile[i] = cell / stride;
            cell %= stride;
        }
        profile
    }

    /// Agent `agent`'s cost at `profile`.
    pub fn cost(&self, profile: &[usize], agent: usize) -> f64 {
        self.costs[self.cell_index(profile) * self.n_agents() + agent]
    }

    fn cost_at_cell(&self, cell: usize, agent: usize) -> f64 {
        self.costs[cell * self.n_agents() + agent]
    }
}

/// Evaluate every joint profile of `set` into a payoff tensor. Refuses to
/// allocate more than `budget` cells.
pub fn build_payoff_tensor(
    set: &CandidateSet,
    specs: &[AgentSpec],
    weights: CostWeights,
    budget: usize,
) -> Result<PayoffTensor, GameError> {
    let n = set.n_agents();
    let extents: Vec<usize> = (0..n).map(|i| set.n_options(i)).collect();
    let cells_wide: u128 = extents.iter().map(|&s| s as u128).product();
    if cells_wide > budget as u128 {
        return Err(GameError::BudgetExceeded { cells: cells_wide, budget });
    }
    let cells = cells_wide as usize;

    let mut costs = Vec::with_capacity(cells * n);
    let mut profile = vec![0usize; n];
    for _ in 0..cells {
        for i in 0..n {
            costs.push(total_cost(i, &profile, set, specs, weights).total);
        }
        // Advance the profile odometer (last agent fastest).
        for i in (0..n).rev() {
            profile[i] += 1;
            if profile[i] < extents[i] {
                break;
            }
            profile[i] = 0;
        }
    }
    Ok(PayoffTensor::from_costs(extents, costs))
}

/// Whether no agent can strictly lower its own cost by changing only its
/// own strategy at `profile`. Cost ties count as an equilibrium (the
/// comparison is non-strict).
pub fn is_pure_nash(tensor: &PayoffTensor, profile: &[usize]) -> bool {
    let cell = tensor.cell_index(profile);
    let n = tensor.n_agents();
    for i in 0..n {
        let own = tensor.cost_at_cell(cell, i);
        let base = cell - profile[i] * tensor.strides[i];
        for b in 0..tensor.extents[i] {
            if b == profile[i] {
                continue;
            }
            if tensor.cost_at_cell(base + b * tensor.strides[i], i) < own {
                return false;
            }
        }
    }
    true
}

/// All pure-strategy Nash equilibria of the tensor, by exhaustive
/// inspection of every cell, in lexicographic profile order. Empty when no
/// pure equilibrium exists.
pub fn find_pure_nash(tensor: &PayoffTensor) -> Vec<StrategyProfile> {
    let n = tensor.n_agents();
    let cells = tensor.n_cells();
    let mut found = Vec::new();
    let mut profile = vec![0usize; n];
    'cells: for cell in 0..cells {
        for i in 0..n {
            let own = tensor.cost_at_cell(cell, i);
            let base = cell - profile[i] * tensor.strides[i];
            for b in 0..tensor.extents[i] {
                if b != profile[i]
                    && tensor.cost_at_cell(base + b * tensor.strides[i], i) < own
                {
                    advance(&mut profile, &tensor.extents);
                    continue 'cells;
                }
            }
        }
        found.push(profile.clone());
        advance(&mut profile, &tensor.extents);
    }
    found
}

fn advance(profile: &mut [usize], extents: &[usize]) {
    for i in (0..profile.len()).rev() {
        profile[i] += 1;
        if profile[i] < extents[i] {
            return;
        }
        profile[i] = 0;
    }
}

/// How the committed profile was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// A pure-strategy Nash equilibrium of the tick's game.
    PureNash,
    /// No pure equilibrium existed; the profile minimizes total regret.
    FallbackMinRegret,
}

/// The profile a planning tick commits to, with bookkeeping for traces.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub kind: EquilibriumKind,
    pub profile: StrategyProfile,
    /// How many pure equilibria the tensor had (0 for the fallback).
    pub equilibria_found: usize,
    /// The ego's cost at the committed profile.
    pub ego_cost: f64,
}

/// Pick the profile to play.
///
/// With equilibria available: the one with the lowest ego cost, ties
/// broken by lowest total cost, then lexicographically smallest profile.
/// With none: the cell minimizing the summed regrets, where an agent's
/// regret is its cost minus the best it could reach by a unilateral switch
/// (0 when already best; collisions with no finite escape also count 0,
/// a collision with a finite escape counts infinite regret).
pub fn select_equilibrium(
    tensor: &PayoffTensor,
    equilibria: &[StrategyProfile],
    ego: usize,
) -> EquilibriumResult {
    let n = tensor.n_agents();
    assert!(ego < n, "ego index out of range");
    if !equilibria.is_empty() {
        let mut best: Option<(&StrategyProfile, f64, f64)> = None;
        for p in equilibria {
            let cell = tensor.cell_index(p);
            let ego_cost = tensor.cost_at_cell(cell, ego);
            let total: f64 = (0..n).map(|i| tensor.cost_at_cell(cell, i)).sum();
            let better = match &best {
                None => true,
                Some((bp, be, bt)) => {
                    ego_cost < *be
                        || (ego_cost == *be && (total < *bt || (total == *bt && p < *bp)))
                }
            };
            if better {
                best = Some((p, ego_cost, total));
            }
        }
        let (profile, ego_cost, _) = best.unwrap();
        return EquilibriumResult {
            kind: EquilibriumKind::PureNash,
            profile: profile.clone(),
            equilibria_found: equilibria.len(),
            ego_cost,
        };
    }

    let mut best_cell = 0usize;
    let mut best_regret = f64::INFINITY;
    let mut profile = vec![0usize; n];
    let mut best_profile = profile.clone();
    for cell in 0..tensor.n_cells() {
        let mut total = 0.0;
        for i in 0..n {
            total += regret(tensor, cell, &profile, i);
            if total >= best_regret {
                break;
            }
        }
        if total < best_regret {
            best_regret = total;
            best_cell = cell;
            best_profile = profile.clone();
        }
        advance(&mut profile, tensor.extents());
    }
    EquilibriumResult {
        kind: EquilibriumKind::FallbackMinRegret,
        profile: best_profile,
        equilibria_found: 0,
        ego_cost: tensor.cost_at_cell(best_cell, ego),
    }
}

/// Agent `i`'s regret at `cell`: own cost minus the best cost over all of
/// its own strategies with everyone else fixed. Infinite own cost maps to
/// 0 when every alternative is infinite too, otherwise to infinity.
fn regret(tensor: &PayoffTensor, cell: usize, profile: &[usize], i: usize) -> f64 {
    let own = tensor.cost_at_cell(cell, i);
    let base = cell - profile[i] * tensor.strides[i];
    let mut best = f64::INFINITY;
    for b in 0..tensor.extents[i] {
        best = best.min(tensor.cost_at_cell(base + b * tensor.strides[i], i));
    }
    if own.is_finite() {
        own - best
    } else if best.is_infinite() {
        0.0
    } else {
        f64::INFINITY
    }
}
