//! Extremal-set search over dyadic sets for the local-energy and shift
//! objectives.
//!
//! Ratios are compared exactly; the annealing Metropolis step alone works
//! on float renditions, and the final best set is re-evaluated exactly
//! before it is reported.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactScalar;
use crate::gen::rng_from_seed;
use crate::haar::{shift_energy, DyadicSet};
use crate::martingale::{mask_to_hex, parse_hex_mask, FiltrationTree, LeafSet};
use crate::tensor::{biparameter_energy, tensor_shift_energy, DyadicSet2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    pub fn name(&self) -> &'static str {
        match self {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        }
    }

    fn improves_exact(&self, candidate: &ExactScalar, incumbent: &ExactScalar) -> bool {
        match self {
            Direction::Minimize => candidate < incumbent,
            Direction::Maximize => candidate > incumbent,
        }
    }

    fn improves_float(&self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Direction::Minimize => candidate < incumbent,
            Direction::Maximize => candidate > incumbent,
        }
    }
}

/// The four searchable objectives. Ratios are always normalized by the
/// measure of the candidate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// E 1_V (S 1_V)^2 / P(V) on the equal-split tree (root included).
    MartEta,
    /// int_V (T 1_V)^2 / |V|.
    ShiftRatio,
    /// int_U (S 1_U)^2 / |U| for the completed biparameter square function.
    TensorSquareEta,
    /// int_U (T(x)T 1_U)^2 / |U|.
    TensorShiftRatio,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::MartEta => "mart-eta",
            Objective::ShiftRatio => "shift-ratio",
            Objective::TensorSquareEta => "tensor-square-eta",
            Objective::TensorShiftRatio => "tensor-shift-ratio",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "mart-eta" => Ok(Objective::MartEta),
            "shift-ratio" => Ok(Objective::ShiftRatio),
            "tensor-square-eta" => Ok(Objective::TensorSquareEta),
            "tensor-shift-ratio" => Ok(Objective::TensorShiftRatio),
            other => Err(Error::Parse(format!(
                "unknown objective {other:?}; expected mart-eta, shift-ratio, \
                 tensor-square-eta, or tensor-shift-ratio"
            ))),
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Objective::MartEta | Objective::TensorSquareEta => Direction::Minimize,
            Objective::ShiftRatio | Objective::TensorShiftRatio => Direction::Maximize,
        }
    }

    pub fn is_two_dim(&self) -> bool {
        matches!(
            self,
            Objective::TensorSquareEta | Objective::TensorShiftRatio
        )
    }
}

/// Evaluator context: the equal-split tree is built once per search.
pub struct Evaluator {
    objective: Objective,
    resolution: u32,
    tree: Option<FiltrationTree>,
}

impl Evaluator {
    pub fn new(objective: Objective, resolution: u32) -> Evaluator {
        let tree = match objective {
            Objective::MartEta => Some(FiltrationTree::equal_split_binary(resolution)),
            _ => None,
        };
        Evaluator {
            objective,
            resolution,
            tree,
        }
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn cell_count(&self) -> usize {
        if self.objective.is_two_dim() {
            1usize << (2 * self.resolution)
        } else {
            1usize << self.resolution
        }
    }

    /// Exact objective ratio of the candidate set, given as cell booleans.
    /// Empty sets are rejected; a nonpositive value of an eta objective
    /// would contradict the lower-bound theorems and aborts loudly.
    pub fn evaluate(&self, cells: &[bool]) -> Result<ExactScalar> {
        if !cells.iter().any(|&c| c) {
            return Err(Error::EmptySet);
        }
        let ratio = match self.objective {
            Objective::MartEta => {
                let tree = self.tree.as_ref().expect("built in new");
                let positions: Vec<usize> = cells
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &m)| m.then_some(i))
                    .collect();
                let set = LeafSet::from_positions(tree, &positions);
                tree.local_energy(&set, true)?.ratio
            }
            Objective::ShiftRatio => {
                let v = DyadicSet::new(self.resolution, cells.to_vec())?;
                let energy = shift_energy(&v)?;
                energy
                    .inside
                    .scale(&v.measure().recip()?)
            }
            Objective::TensorSquareEta => {
                let u = DyadicSet2D::new(self.resolution, cells.to_vec())?;
                let energy = biparameter_energy(&u, true)?;
                ExactScalar::from_rational(energy.inside.checked_div(&u.measure())?)
            }
            Objective::TensorShiftRatio => {
                let u = DyadicSet2D::new(self.resolution, cells.to_vec())?;
                let energy = tensor_shift_energy(&u)?;
                energy.inside.scale(&u.measure().recip()?)
            }
        };
        if matches!(
            self.objective,
            Objective::MartEta | Objective::TensorSquareEta
        ) && ratio.sign() != std::cmp::Ordering::Greater
        {
            return Err(Error::PositivityViolation(format!(
                "{} ratio {} for mask {} at resolution {}: a nonpositive local \
                 energy would be a counterexample",
                self.objective.name(),
                ratio,
                mask_to_hex(cells),
                self.resolution
            )));
        }
        Ok(ratio)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ValuePair {
    pub exact: String,
    pub float: f64,
}

impl ValuePair {
    pub fn from_scalar(s: &ExactScalar) -> ValuePair {
        ValuePair {
            exact: s.to_string(),
            float: s.to_f64(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceEntry {
    pub visited: u64,
    pub mask: String,
    pub value: f64,
}

/// Result of one search run. `best_ratio` is re-computed by the evaluator
/// on `best_mask` at report time, so the pair is self-certifying;
/// `recertify` repeats that computation from the serialized report alone.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SearchReport {
    pub objective: String,
    pub direction: String,
    pub resolution: u32,
    pub mode: String,
    pub best_mask: String,
    pub best_ratio: ValuePair,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complement_ratio: Option<ValuePair>,
    pub visited: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<u64>,
    pub trace: Vec<TraceEntry>,
}

impl SearchReport {
    /// Re-evaluate the reported best set and compare against the stored
    /// exact ratio.
    pub fn recertify(&self) -> Result<bool> {
        let objective = Objective::from_name(&self.objective)?;
        let evaluator = Evaluator::new(objective, self.resolution);
        let cells = cells_from_mask(&self.best_mask, evaluator.cell_count())?;
        let ratio = evaluator.evaluate(&cells)?;
        Ok(ratio.to_string() == self.best_ratio.exact)
    }
}

fn cells_from_mask(mask: &str, cell_count: usize) -> Result<Vec<bool>> {
    let bits = parse_hex_mask(mask)?;
    if bits.bits() > cell_count as u64 {
        return Err(Error::Parse(format!(
            "mask {mask} wider than {cell_count} cells"
        )));
    }
    Ok((0..cell_count).map(|i| bits.bit(i as u64)).collect())
}

/// The complement probe reported for the local-energy objective.
fn complement_ratio(evaluator: &Evaluator, cells: &[bool]) -> Option<ValuePair> {
    if evaluator.objective() != Objective::MartEta {
        return None;
    }
    let complement: Vec<bool> = cells.iter().map(|&c| !c).collect();
    if !complement.iter().any(|&c| c) {
        return None;
    }
    evaluator
        .evaluate(&complement)
        .ok()
        .map(|r| ValuePair::from_scalar(&r))
}

/// Evaluate every nonempty subset of the cells (the full set included).
/// Ties break toward the lowest mask value; the scan order makes that
/// automatic. Requires at most 16 cells.
pub fn exhaustive_search(objective: Objective, resolution: u32) -> Result<SearchReport> {
    let evaluator = Evaluator::new(objective, resolution);
    let cell_count = evaluator.cell_count();
    if cell_count > 16 {
        return Err(Error::TooManyCells(cell_count));
    }
    let total = (1u64 << cell_count) - 1;
    let mut best_mask = 0u64;
    let mut best_value: Option<ExactScalar> = None;
    let mut trace = Vec::new();
    for mask in 1..=total {
        let cells: Vec<bool> = (0..cell_count).map(|i| mask >> i & 1 == 1).collect();
        let value = evaluator.evaluate(&cells)?;
        let improved = match &best_value {
            None => true,
            Some(current) => objective.direction().improves_exact(&value, current),
        };
        if improved {
            trace.push(TraceEntry {
                visited: mask,
                mask: format!("{:#x}", mask),
                value: value.to_f64(),
            });
            best_mask = mask;
            best_value = Some(value);
        }
    }
    let best_cells: Vec<bool> = (0..cell_count).map(|i| best_mask >> i & 1 == 1).collect();
    // Re-evaluate at report time; the stored ratio must match the evaluator.
    let certified = evaluator.evaluate(&best_cells)?;
    debug_assert_eq!(Some(&certified), best_value.as_ref());
    Ok(SearchReport {
        objective: objective.name().into(),
        direction: objective.direction().name().into(),
        resolution,
        mode: "exhaustive".into(),
        best_mask: format!("{:#x}", best_mask),
        best_ratio: ValuePair::from_scalar(&certified),
        complement_ratio: complement_ratio(&evaluator, &best_cells),
        visited: total,
        seed: None,
        iters: None,
        trace,
    })
}

/// Parameters of the geometric cooling schedule.
#[derive(Clone, Copy, Debug)]
pub struct AnnealSchedule {
    pub iters: u64,
    pub t_start: f64,
    pub t_end: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            iters: 2000,
            t_start: 0.5,
            t_end: 1e-3,
        }
    }
}

/// Single-cell-flip simulated annealing with geometric cooling. Acceptance
/// works on float renditions; the final best set is re-evaluated exactly.
/// Deterministic for a fixed seed and schedule.
pub fn anneal_search(
    objective: Objective,
    resolution: u32,
    schedule: AnnealSchedule,
    seed: u64,
) -> Result<SearchReport> {
    let max_resolution = if objective.is_two_dim() { 8 } else { 24 };
    if resolution > max_resolution {
        return Err(Error::ParameterOutOfRange(format!(
            "annealing supports resolution <= {max_resolution} for {}",
            objective.name()
        )));
    }
    let evaluator = Evaluator::new(objective, resolution);
    let cell_count = evaluator.cell_count();
    let mut rng = rng_from_seed(seed);

    let mut cells: Vec<bool> = loop {
        let candidate: Vec<bool> = (0..cell_count).map(|_| rng.random_bool(0.5)).collect();
        if candidate.iter().any(|&c| c) {
            break candidate;
        }
    };
    let mut current = evaluator.evaluate(&cells)?.to_f64();
    let mut evaluations = 1u64;
    let mut best_cells = cells.clone();
    let mut best_float = current;
    let mut trace = vec![TraceEntry {
        visited: evaluations,
        mask: mask_to_hex(&cells),
        value: current,
    }];

    let steps = schedule.iters;
    for step in 0..steps {
        let progress = if steps > 1 {
            step as f64 / (steps - 1) as f64
        } else {
            0.0
        };
        let temperature = schedule.t_start * (schedule.t_end / schedule.t_start).powf(progress);
        let flip = rng.random_range(0..cell_count);
        cells[flip] = !cells[flip];
        if !cells.iter().any(|&c| c) {
            cells[flip] = !cells[flip];
            continue;
        }
        let candidate = evaluator.evaluate(&cells)?.to_f64();
        evaluations += 1;
        let delta = match objective.direction() {
            Direction::Maximize => candidate - current,
            Direction::Minimize => current - candidate,
        };
        let accept = delta >= 0.0 || rng.random::<f64>() < (delta / temperature).exp();
        if accept {
            current = candidate;
            if objective.direction().improves_float(candidate, best_float) {
                best_float = candidate;
                best_cells = cells.clone();
                trace.push(TraceEntry {
                    visited: evaluations,
                    mask: mask_to_hex(&cells),
                    value: candidate,
                });
            }
        } else {
            cells[flip] = !cells[flip];
        }
    }

    let certified = evaluator.evaluate(&best_cells)?;
    Ok(SearchReport {
        objective: objective.name().into(),
        direction: objective.direction().name().into(),
        resolution,
        mode: "anneal".into(),
        best_mask: mask_to_hex(&best_cells),
        best_ratio: ValuePair::from_scalar(&certified),
        complement_ratio: complement_ratio(&evaluator, &best_cells),
        visited: evaluations,
        seed: Some(seed),
        iters: Some(schedule.iters),
        trace,
    })
}
