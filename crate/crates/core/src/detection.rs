//! Locating damage by matching a measured signature against the database.
//!
//! The measured (or simulated) modal signature of the structure in its
//! unknown state is compared against every tabulated scenario through a
//! weighted least-squares discrepancy over natural frequencies and mode
//! shapes. Finding the tabulated scenario with the smallest discrepancy is
//! the detection problem; [`brute_force`] scans the whole table, [`detect`]
//! reaches the same answer through a firefly search over a continuous
//! encoding of the scenario space.

use crate::database::{Scenario, ScenarioDatabase};
use crate::error::{Error, Result};
use crate::firefly::{self, FaParams, FaResult};
use crate::modal::ModalSignature;
use crate::rng::Stream;
use crate::truss::BarId;
use nalgebra::DMatrix;

/// Per-term weights for the discrepancy measure.
///
/// `omega[j]` scales mode `j`'s frequency residual; `phi[(i, j)]` scales the
/// residual of component `i` of mode shape `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub omega: Vec<f64>,
    pub phi: DMatrix<f64>,
}

impl Weights {
    /// Unit weight on every term.
    #[must_use]
    pub fn uniform(n_modes: usize, dof_count: usize) -> Self {
        Weights {
            omega: vec![1.0; n_modes],
            phi: DMatrix::from_element(dof_count, n_modes, 1.0),
        }
    }
}

/// Weighted discrepancy between a test signature and a candidate signature.
///
/// Frequencies enter through relative residuals `(1 - w_test/w_cand)^2`;
/// mode shapes through componentwise differences after aligning each
/// candidate column's sign with the test column (mass-normalized shapes are
/// only defined up to sign, so each pair is compared in its best-matching
/// orientation: the candidate column is flipped when the two columns point
/// opposite ways, i.e. their dot product is negative).
///
/// Identical signatures score exactly zero; every mismatch adds a
/// non-negative term.
///
/// # Errors
/// [`Error::DimensionMismatch`] unless both signatures and both weight
/// blocks agree on mode count and DOF count;
/// [`Error::ZeroCandidateFrequency`] if a candidate frequency is zero (the
/// relative residual would divide by it).
pub fn objective(
    test: &ModalSignature,
    candidate: &ModalSignature,
    weights: &Weights,
) -> Result<f64> {
    let n_modes = test.n_modes();
    let n_dofs = test.dof_count();
    if candidate.n_modes() != n_modes || candidate.dof_count() != n_dofs {
        return Err(Error::DimensionMismatch(format!(
            "test signature is {n_modes} modes x {n_dofs} DOFs, candidate is {} x {}",
            candidate.n_modes(),
            candidate.dof_count()
        )));
    }
    if weights.omega.len() != n_modes
        || weights.phi.nrows() != n_dofs
        || weights.phi.ncols() != n_modes
    {
        return Err(Error::DimensionMismatch(format!(
            "weights sized {} / {}x{}, signatures are {n_modes} modes x {n_dofs} DOFs",
            weights.omega.len(),
            weights.phi.nrows(),
            weights.phi.ncols()
        )));
    }

    let mut total = 0.0;
    for j in 0..n_modes {
        let w_cand = candidate.omegas()[j];
        if w_cand == 0.0 {
            return Err(Error::ZeroCandidateFrequency { index: j });
        }
        let rel = 1.0 - test.omegas()[j] / w_cand;
        total += weights.omega[j] * rel * rel;

        let t_col = test.modes().column(j);
        let c_col = candidate.modes().column(j);
        let sign = if t_col.dot(&c_col) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n_dofs {
            let diff = t_col[i] - sign * c_col[i];
            total += weights.phi[(i, j)] * diff * diff;
        }
    }
    Ok(total)
}

/// Proportional measurement-noise levels.
///
/// A value `v` becomes `v * (1 + u * level)` with `u` uniform on [-1, 1):
/// `frequency` caps the relative perturbation of every natural frequency,
/// `mode_shape` that of every mode-shape component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub frequency: f64,
    pub mode_shape: f64,
}

impl NoiseSpec {
    /// Exact signatures: both levels zero.
    #[must_use]
    pub fn none() -> Self {
        NoiseSpec {
            frequency: 0.0,
            mode_shape: 0.0,
        }
    }
}

/// Perturb a signature with proportional noise.
///
/// Draw order is fixed: one `u` per frequency in ascending-mode order, then
/// one per mode-shape component walking each mode column top to bottom.
/// Draws are taken even when a level is zero, so the stream advances by the
/// same amount regardless of the levels — runs differing only in noise
/// amplitude see the same underlying `u` sequence.
///
/// # Errors
/// [`Error::InvalidParameter`] if a level is negative or not finite.
pub fn add_noise(
    signature: &ModalSignature,
    spec: &NoiseSpec,
    stream: &mut Stream,
) -> Result<ModalSignature> {
    for level in [spec.frequency, spec.mode_shape] {
        if !level.is_finite() || level < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise levels must be finite and non-negative, got {level}"
            )));
        }
    }
    let omegas: Vec<f64> = signature
        .omegas()
        .iter()
        .map(|w| w * (1.0 + stream.symmetric() * spec.frequency))
        .collect();
    let mut modes = signature.modes().clone();
    for j in 0..modes.ncols() {
        for i in 0..modes.nrows() {
            modes[(i, j)] *= 1.0 + stream.symmetric() * spec.mode_shape;
        }
    }
    ModalSignature::new(omegas, modes)
}

/// Map a point of the unit box to a tabulated scenario.
///
/// The coordinates come in slot pairs `(b, v)`. `b` selects one of the `B`
/// bar ids by equal subdivision of [0, 1] (values at or past 1 select the
/// last bar); `v` selects a damage level by rounding `v * G` to a grid index,
/// where `G` is the number of levels — index 0 deactivates the slot. Slots
/// naming the same bar are merged keeping the larger damage.
///
/// # Errors
/// [`Error::InvalidParameter`] if `x` has odd length or `bar_ids` is empty;
/// [`Error::OffGrid`] if `step` is not a valid grid step.
pub fn decode(x: &[f64], bar_ids: &[BarId], step: u8) -> Result<Scenario> {
    let levels = crate::database::grid_levels(step)?;
    let n_levels = levels.len();
    if x.len() % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "encoded point needs (bar, level) pairs, got {} coordinates",
            x.len()
        )));
    }
    if bar_ids.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot decode against an empty bar list".to_string(),
        ));
    }
    let n_bars = bar_ids.len();
    let mut picked: Vec<(BarId, u8)> = Vec::with_capacity(x.len() / 2);
    for pair in x.chunks_exact(2) {
        let b = pair[0].clamp(0.0, 1.0);
        let v = pair[1].clamp(0.0, 1.0);
        let bar_pos = ((b * n_bars as f64).floor() as usize).min(n_bars - 1);
        let level_index = (v * n_levels as f64).round() as usize;
        if level_index == 0 {
            continue;
        }
        picked.push((bar_ids[bar_pos], levels[level_index.min(n_levels) - 1]));
    }
    Ok(Scenario::merged(picked))
}

/// Map a scenario to the center of its decoding cell, padded to `slots`
/// slot pairs with inactive `(0, 0)` entries.
///
/// `decode(&encode(s, ..)?, ..)` returns `s` again.
///
/// # Errors
/// [`Error::InvalidParameter`] if the scenario damages more than `slots`
/// bars; [`Error::UnknownBar`] for a bar missing from `bar_ids`;
/// [`Error::OffGrid`] if a damage percent is not on the grid.
pub fn encode(
    scenario: &Scenario,
    bar_ids: &[BarId],
    step: u8,
    slots: usize,
) -> Result<Vec<f64>> {
    let levels = crate::database::grid_levels(step)?;
    if scenario.n_damaged() > slots {
        return Err(Error::InvalidParameter(format!(
            "scenario damages {} bars but the encoding has {slots} slots",
            scenario.n_damaged()
        )));
    }
    let n_bars = bar_ids.len() as f64;
    let n_levels = levels.len() as f64;
    let mut out = Vec::with_capacity(2 * slots);
    for &(bar, pct) in scenario.damaged() {
        let pos = bar_ids
            .iter()
            .position(|&id| id == bar)
            .ok_or(Error::UnknownBar(bar))?;
        let level_index = levels
            .iter()
            .position(|&l| l == pct)
            .ok_or_else(|| Error::OffGrid(format!("{pct}% is not a multiple of {step}%")))?
            + 1;
        out.push((pos as f64 + 0.5) / n_bars);
        out.push(level_index as f64 / n_levels);
    }
    out.resize(2 * slots, 0.0);
    Ok(out)
}

/// Outcome of a database search.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// The best-matching tabulated scenario.
    pub scenario: Scenario,
    /// Its discrepancy against the test signature.
    pub objective: f64,
    /// How much worse the best *other* scenario scored (`None` when the
    /// search saw only one scenario). Small gaps flag ambiguous matches.
    pub runner_up_gap: Option<f64>,
}

/// Keep the two best (value, database index) pairs seen so far.
///
/// Ties in value resolve to the lower index, which — entries being stored
/// in enumeration order — is exactly the canonical scenario order: fewer
/// damaged bars first, then bar ids, then percents.
#[derive(Debug, Default)]
struct BestTwo {
    best: Option<(usize, f64)>,
    second: Option<(usize, f64)>,
}

impl BestTwo {
    fn consider(&mut self, index: usize, value: f64) {
        let beats = |a: (usize, f64), b: (usize, f64)| a.1 < b.1 || (a.1 == b.1 && a.0 < b.0);
        let cand = (index, value);
        let Some(best) = self.best else {
            self.best = Some(cand);
            return;
        };
        if best.0 == index {
            // deterministic objective: a revisited scenario scores the same
            return;
        }
        if beats(cand, best) {
            self.best = Some(cand);
            match self.second {
                Some(second) if !beats(best, second) => {}
                _ => self.second = Some(best),
            }
        } else {
            match self.second {
                Some(second) if second.0 == index || !beats(cand, second) => {}
                _ => self.second = Some(cand),
            }
        }
    }

    fn into_prediction(self, db: &ScenarioDatabase) -> Result<Prediction> {
        let (index, value) = self.best.ok_or_else(|| {
            Error::InvalidParameter("search evaluated no scenario".to_string())
        })?;
        Ok(Prediction {
            scenario: db.entries()[index].0.clone(),
            objective: value,
            runner_up_gap: self.second.map(|(_, v)| v - value),
        })
    }
}

fn check_compatible(
    test: &ModalSignature,
    db: &ScenarioDatabase,
    weights: &Weights,
) -> Result<()> {
    if db.is_empty() {
        return Err(Error::InvalidParameter(
            "scenario database is empty".to_string(),
        ));
    }
    let reference = &db.entries()[0].1;
    if test.n_modes() != reference.n_modes() || test.dof_count() != reference.dof_count() {
        return Err(Error::DimensionMismatch(format!(
            "test signature is {} modes x {} DOFs, database stores {} x {}",
            test.n_modes(),
            test.dof_count(),
            reference.n_modes(),
            reference.dof_count()
        )));
    }
    if weights.omega.len() != test.n_modes()
        || weights.phi.nrows() != test.dof_count()
        || weights.phi.ncols() != test.n_modes()
    {
        return Err(Error::DimensionMismatch(
            "weights do not match the signature dimensions".to_string(),
        ));
    }
    Ok(())
}

/// Score every tabulated scenario and return the best match.
///
/// This is the exhaustive reference answer the firefly search is meant to
/// reproduce; on large databases it is the slow road.
///
/// # Errors
/// Compatibility failures from the checks above, or any objective error.
pub fn brute_force(
    test: &ModalSignature,
    db: &ScenarioDatabase,
    weights: &Weights,
) -> Result<Prediction> {
    check_compatible(test, db, weights)?;
    let mut ranking = BestTwo::default();
    for (index, (_, signature)) in db.entries().iter().enumerate() {
        ranking.consider(index, objective(test, signature, weights)?);
    }
    ranking.into_prediction(db)
}

/// Search the database with the firefly algorithm instead of a full scan.
///
/// Candidate points live in the unit box of dimension `2 * max_damaged_bars`
/// and are decoded to tabulated scenarios; the discrepancy against `test` is
/// what the search minimizes. The returned prediction is the best *scenario*
/// the search ever evaluated (with the same tie-breaking as [`brute_force`]),
/// together with the firefly diagnostics.
///
/// # Errors
/// Compatibility failures; [`Error::InvalidParameter`] if the database has
/// no damaged scenarios or `fa` does not describe the matching unit box.
pub fn detect_traced(
    test: &ModalSignature,
    db: &ScenarioDatabase,
    weights: &Weights,
    fa: &FaParams,
) -> Result<(Prediction, FaResult)> {
    check_compatible(test, db, weights)?;
    let slots = db.meta().max_damaged_bars;
    if slots == 0 {
        return Err(Error::InvalidParameter(
            "database tabulates no damaged scenarios to search".to_string(),
        ));
    }
    let dim = 2 * slots;
    let box_ok = fa.lower.len() == dim
        && fa.upper.len() == dim
        && fa.lower.iter().all(|&v| v == 0.0)
        && fa.upper.iter().all(|&v| v == 1.0);
    if !box_ok {
        return Err(Error::InvalidParameter(format!(
            "search box must be the unit box in {dim} dimensions"
        )));
    }

    let step = db.meta().grid_step;
    let bar_ids = db.bar_ids();
    let mut ranking = BestTwo::default();
    let result = firefly::run(fa, |x| {
        // decode/lookup cannot fail for in-box points over a validated
        // database; any surprise is treated as an uninhabitable point
        let Ok(scenario) = decode(x, bar_ids, step) else {
            return f64::INFINITY;
        };
        let Some(index) = db.index_of(&scenario) else {
            return f64::INFINITY;
        };
        let Ok(value) = objective(test, &db.entries()[index].1, weights) else {
            return f64::INFINITY;
        };
        ranking.consider(index, value);
        value
    })?;
    Ok((ranking.into_prediction(db)?, result))
}

/// [`detect_traced`] without the firefly diagnostics.
///
/// # Errors
/// Same as [`detect_traced`].
pub fn detect(
    test: &ModalSignature,
    db: &ScenarioDatabase,
    weights: &Weights,
    fa: &FaParams,
) -> Result<Prediction> {
    detect_traced(test, db, weights, fa).map(|(prediction, _)| prediction)
}
