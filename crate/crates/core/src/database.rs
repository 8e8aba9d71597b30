//! Damage-scenario signature database.
//!
//! A [`Scenario`] places on-grid stiffness losses on up to K bars; the
//! database stores the modal signature of every such configuration, in a
//! fixed enumeration order (healthy first, then by damaged-bar count, bar-id
//! tuple, percent tuple). That order is also the parsimony tie-break order
//! used by the detectors, and it is what makes database files byte-stable:
//! building, saving, loading, and saving again yields identical bytes
//! regardless of thread count.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::modal::{assemble, solve_modes, ModalSignature};
use crate::rng::Stream;
use crate::truss::{BarId, DamageState, TrussModel};
use crate::{Error, Result};

/// Bump when the file schema changes incompatibly.
pub const DB_FORMAT_VERSION: u32 = 1;

/// Largest damage percent on any grid.
pub const MAX_PERCENT: u8 = 95;

/// Stream tag for verification sampling.
const VERIFY_TAG: u64 = 0x5652_4659; // "VRFY"

/// The damage levels for a given grid step: positive multiples of `step` up
/// to 95 % (step 5 → {5, 10, …, 95}; step 95 → {95}).
///
/// # Errors
/// [`Error::InvalidParameter`] unless `step` divides 95 evenly.
pub fn grid_levels(step: u8) -> Result<Vec<u8>> {
    if step == 0 || step > MAX_PERCENT || MAX_PERCENT % step != 0 {
        return Err(Error::InvalidParameter(format!(
            "grid step must divide {MAX_PERCENT} evenly, got {step}"
        )));
    }
    Ok((1..=MAX_PERCENT / step).map(|k| k * step).collect())
}

/// A damage configuration: distinct bars, each with a damage percent in
/// [1, 95], sorted by bar id. The empty scenario is the healthy structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    damaged: Vec<(BarId, u8)>,
}

impl Scenario {
    /// The undamaged structure.
    #[must_use]
    pub fn healthy() -> Self {
        Scenario { damaged: Vec::new() }
    }

    /// Canonicalize `pairs` (sorts by bar id).
    ///
    /// # Errors
    /// [`Error::OffGrid`] for repeated bars or percents outside [1, 95].
    pub fn new(pairs: impl IntoIterator<Item = (BarId, u8)>) -> Result<Self> {
        let mut damaged: Vec<(BarId, u8)> = pairs.into_iter().collect();
        damaged.sort_unstable();
        for w in damaged.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::OffGrid(format!("bar {} listed twice", w[0].0)));
            }
        }
        for &(bar, pct) in &damaged {
            if pct == 0 || pct > MAX_PERCENT {
                return Err(Error::OffGrid(format!(
                    "bar {bar} damage percent {pct} outside [1, {MAX_PERCENT}]"
                )));
            }
        }
        Ok(Scenario { damaged })
    }

    /// Canonicalize with duplicate bars merged by keeping the larger percent
    /// (the decoding rule for overlapping position slots).
    #[must_use]
    pub(crate) fn merged(pairs: impl IntoIterator<Item = (BarId, u8)>) -> Self {
        let mut damaged: Vec<(BarId, u8)> = pairs.into_iter().collect();
        // sort by bar then percent so the last of each bar-run is the max
        damaged.sort_unstable();
        damaged.reverse();
        damaged.dedup_by_key(|&mut (bar, _)| bar);
        damaged.reverse();
        Scenario { damaged }
    }

    #[must_use]
    pub fn damaged(&self) -> &[(BarId, u8)] {
        &self.damaged
    }

    #[must_use]
    pub fn n_damaged(&self) -> usize {
        self.damaged.len()
    }

    #[must_use]
    pub fn is_healthy(&self) -> bool {
        self.damaged.is_empty()
    }

    /// True when every percent is a multiple of `step`.
    #[must_use]
    pub fn on_grid(&self, step: u8) -> bool {
        step > 0 && self.damaged.iter().all(|&(_, p)| p % step == 0)
    }

    /// The equivalent fractional damage state (percent / 100).
    #[must_use]
    pub fn damage_state(&self) -> DamageState {
        let mut state = DamageState::new();
        for &(bar, pct) in &self.damaged {
            state.set(bar, f64::from(pct) / 100.0);
        }
        state
    }

    /// Compact text form: `3:30+8:85`, or `none` for healthy. CSV-safe.
    #[must_use]
    pub fn label(&self) -> String {
        if self.is_healthy() {
            return "none".into();
        }
        self.damaged
            .iter()
            .map(|(b, p)| format!("{b}:{p}"))
            .join("+")
    }

    /// Inverse of [`Scenario::label`]; also accepts commas between pairs and
    /// an empty string for healthy.
    ///
    /// # Errors
    /// [`Error::OffGrid`] for malformed pairs, repeated bars, or bad percents.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || text == "none" {
            return Ok(Scenario::healthy());
        }
        let mut pairs = Vec::new();
        for part in text.split(['+', ',']) {
            let (bar, pct) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::OffGrid(format!("expected bar:percent, got `{part}`")))?;
            let bar: BarId = bar
                .trim()
                .parse()
                .map_err(|_| Error::OffGrid(format!("bad bar id `{bar}`")))?;
            let pct: u8 = pct
                .trim()
                .parse()
                .map_err(|_| Error::OffGrid(format!("bad percent `{pct}`")))?;
            pairs.push((bar, pct));
        }
        Scenario::new(pairs)
    }

    /// The enumeration and tie-break order: fewer damaged bars first, then
    /// the bar-id tuple lexicographically, then the percent tuple. (Not the
    /// flat pair-list order — all bars compare before any percent does.)
    #[must_use]
    pub fn canonical_cmp(&self, other: &Scenario) -> std::cmp::Ordering {
        self.n_damaged()
            .cmp(&other.n_damaged())
            .then_with(|| {
                self.damaged
                    .iter()
                    .map(|p| p.0)
                    .cmp(other.damaged.iter().map(|p| p.0))
            })
            .then_with(|| {
                self.damaged
                    .iter()
                    .map(|p| p.1)
                    .cmp(other.damaged.iter().map(|p| p.1))
            })
    }
}

/// Every scenario with at most `max_damaged` damaged bars on the given grid,
/// in canonical order: healthy, then ascending damaged-bar count, bar-id
/// combinations lexicographic, percent tuples lexicographic.
///
/// # Errors
/// [`Error::InvalidParameter`] for a bad grid step, duplicate bar ids, or
/// `max_damaged` exceeding the bar count.
pub fn enumerate_scenarios(
    bar_ids: &[BarId],
    max_damaged: usize,
    step: u8,
) -> Result<Vec<Scenario>> {
    let levels = grid_levels(step)?;
    let mut ids = bar_ids.to_vec();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("duplicate bar ids".into()));
    }
    if max_damaged > ids.len() {
        return Err(Error::InvalidParameter(format!(
            "max_damaged {} exceeds bar count {}",
            max_damaged,
            ids.len()
        )));
    }

    let mut out = vec![Scenario::healthy()];
    for size in 1..=max_damaged {
        for combo in ids.iter().copied().combinations(size) {
            for pcts in (0..size)
                .map(|_| levels.iter().copied())
                .multi_cartesian_product()
            {
                let damaged: Vec<(BarId, u8)> =
                    combo.iter().copied().zip(pcts).collect();
                out.push(Scenario { damaged });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbMeta {
    pub version: u32,
    /// Fingerprint of the model the signatures were computed from.
    pub model_fingerprint: String,
    pub n_modes: usize,
    pub grid_step: u8,
    pub max_damaged_bars: usize,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    scenario: Vec<(BarId, u8)>,
    signature: ModalSignature,
}

#[derive(Serialize, Deserialize)]
struct DbFile {
    version: u32,
    model_fingerprint: String,
    n_modes: usize,
    grid_step: u8,
    max_damaged_bars: usize,
    entries: Vec<EntryFile>,
}

/// Signatures of every enumerated scenario, with exact-match lookup.
#[derive(Debug, Clone)]
pub struct ScenarioDatabase {
    meta: DbMeta,
    entries: Vec<(Scenario, ModalSignature)>,
    index: HashMap<Scenario, usize>,
    bar_ids: Vec<BarId>,
}

impl ScenarioDatabase {
    /// Solve every scenario of `model` (grid `step`, up to `max_damaged`
    /// bars, first `n_modes` modes each) and tabulate the signatures.
    ///
    /// Work is spread across the current rayon pool; entries land in
    /// enumeration order no matter the thread count, so the result — and its
    /// serialized bytes — are identical from 1 thread or 64.
    ///
    /// # Errors
    /// Parameter validation plus any modal-solve failure (reported for the
    /// first offending scenario in enumeration order).
    pub fn build(
        model: &TrussModel,
        n_modes: usize,
        max_damaged: usize,
        step: u8,
    ) -> Result<Self> {
        let bar_ids = model.bar_ids();
        let scenarios = enumerate_scenarios(&bar_ids, max_damaged, step)?;
        // Vec<Result> keeps completion order out of the picture entirely;
        // errors are then reported in enumeration order.
        let solved: Vec<Result<ModalSignature>> = scenarios
            .par_iter()
            .map(|s| {
                let damaged = model.apply_damage(&s.damage_state())?;
                solve_modes(&damaged, n_modes)
            })
            .collect();
        let mut entries = Vec::with_capacity(scenarios.len());
        for (scenario, sig) in scenarios.into_iter().zip(solved) {
            entries.push((scenario, sig?));
        }
        let meta = DbMeta {
            version: DB_FORMAT_VERSION,
            model_fingerprint: model.fingerprint(),
            n_modes,
            grid_step: step,
            max_damaged_bars: max_damaged,
        };
        Ok(Self::assemble_validated(meta, entries, bar_ids))
    }

    fn assemble_validated(
        meta: DbMeta,
        entries: Vec<(Scenario, ModalSignature)>,
        bar_ids: Vec<BarId>,
    ) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.clone(), i))
            .collect();
        ScenarioDatabase {
            meta,
            entries,
            index,
            bar_ids,
        }
    }

    #[must_use]
    pub fn meta(&self) -> &DbMeta {
        &self.meta
    }

    #[must_use]
    pub fn entries(&self) -> &[(Scenario, ModalSignature)] {
        &self.entries
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted bar ids covered by the grid (derived from the entries).
    #[must_use]
    pub fn bar_ids(&self) -> &[BarId] {
        &self.bar_ids
    }

    /// Exact-match signature lookup; `None` when `scenario` is not in the
    /// database (off grid, too many bars, unknown bar).
    #[must_use]
    pub fn get(&self, scenario: &Scenario) -> Option<&ModalSignature> {
        self.index.get(scenario).map(|&i| &self.entries[i].1)
    }

    /// Position of `scenario` in enumeration order.
    #[must_use]
    pub fn index_of(&self, scenario: &Scenario) -> Option<usize> {
        self.index.get(scenario).copied()
    }

    /// The same database truncated to the first `n_modes` modes per entry.
    ///
    /// # Errors
    /// [`Error::DimensionMismatch`] when asking for more modes than stored.
    pub fn with_mode_count(&self, n_modes: usize) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|(s, sig)| Ok((s.clone(), sig.truncated(n_modes)?)))
            .collect::<Result<Vec<_>>>()?;
        let meta = DbMeta {
            n_modes,
            ..self.meta.clone()
        };
        Ok(Self::assemble_validated(meta, entries, self.bar_ids.clone()))
    }

    /// Serialize to the canonical JSON form.
    #[must_use]
    pub fn to_json(&self) -> String {
        let file = DbFile {
            version: self.meta.version,
            model_fingerprint: self.meta.model_fingerprint.clone(),
            n_modes: self.meta.n_modes,
            grid_step: self.meta.grid_step,
            max_damaged_bars: self.meta.max_damaged_bars,
            entries: self
                .entries
                .iter()
                .map(|(s, sig)| EntryFile {
                    scenario: s.damaged.clone(),
                    signature: sig.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("database serialization cannot fail")
    }

    /// Write the canonical JSON form to `path`.
    ///
    /// # Errors
    /// I/O only; the byte stream itself is deterministic.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_json().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    /// Parse and structurally validate a database.
    ///
    /// Validation recomputes the expected enumeration from the metadata and
    /// requires the stored entries to match it one-for-one, so a loaded
    /// database always carries the canonical order and completeness.
    ///
    /// # Errors
    /// [`Error::Parse`] (with byte offset), [`Error::VersionMismatch`],
    /// [`Error::CorruptDatabase`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DbFile =
            serde_json::from_str(text).map_err(|e| Error::from_json(&e, text))?;
        if file.version != DB_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: file.version,
                expected: DB_FORMAT_VERSION,
            });
        }

        let mut entries = Vec::with_capacity(file.entries.len());
        for e in file.entries {
            let scenario = Scenario::new(e.scenario)
                .map_err(|err| Error::CorruptDatabase(err.to_string()))?;
            entries.push((scenario, e.signature));
        }

        let mut bar_ids: Vec<BarId> = entries
            .iter()
            .flat_map(|(s, _)| s.damaged.iter().map(|&(b, _)| b))
            .collect();
        bar_ids.sort_unstable();
        bar_ids.dedup();

        let expected = enumerate_scenarios(&bar_ids, file.max_damaged_bars, file.grid_step)
            .map_err(|e| Error::CorruptDatabase(e.to_string()))?;
        if expected.len() != entries.len() {
            return Err(Error::CorruptDatabase(format!(
                "expected {} entries for this grid, found {}",
                expected.len(),
                entries.len()
            )));
        }
        for (i, (want, (got, sig))) in expected.iter().zip(&entries).enumerate() {
            if want != got {
                return Err(Error::CorruptDatabase(format!(
                    "entry {i}: expected scenario {}, found {}",
                    want.label(),
                    got.label()
                )));
            }
            if sig.n_modes() != file.n_modes {
                return Err(Error::CorruptDatabase(format!(
                    "entry {i} ({}) has {} modes, metadata says {}",
                    got.label(),
                    sig.n_modes(),
                    file.n_modes
                )));
            }
            if sig.dof_count() != entries[0].1.dof_count() {
                return Err(Error::CorruptDatabase(format!(
                    "entry {i} ({}) has {} DOFs, entry 0 has {}",
                    got.label(),
                    sig.dof_count(),
                    entries[0].1.dof_count()
                )));
            }
            let omegas = sig.omegas();
            if omegas.iter().any(|w| !w.is_finite() || *w < 0.0)
                || omegas.windows(2).any(|w| w[0] > w[1])
            {
                return Err(Error::CorruptDatabase(format!(
                    "entry {i} ({}) has non-ascending or non-finite frequencies",
                    got.label()
                )));
            }
        }

        let meta = DbMeta {
            version: file.version,
            model_fingerprint: file.model_fingerprint,
            n_modes: file.n_modes,
            grid_step: file.grid_step,
            max_damaged_bars: file.max_damaged_bars,
        };
        Ok(Self::assemble_validated(meta, entries, bar_ids))
    }

    /// Load a database from a JSON file.
    ///
    /// # Errors
    /// I/O plus everything [`ScenarioDatabase::from_json`] can return.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Spot-check stored signatures against `model`: a seeded 1 % sample
    /// (at least one entry) must satisfy the modal residual and
    /// mass-normalization invariants. Returns the number of entries checked.
    ///
    /// # Errors
    /// [`Error::FingerprintMismatch`] when the database was built from a
    /// different model; [`Error::CorruptDatabase`] naming the first entry
    /// whose stored signature fails a check.
    pub fn verify_against(&self, model: &TrussModel, seed: u64) -> Result<usize> {
        let fp = model.fingerprint();
        if fp != self.meta.model_fingerprint {
            return Err(Error::FingerprintMismatch {
                db: self.meta.model_fingerprint.clone(),
                model: fp,
            });
        }
        let sample = self.len().div_ceil(100).max(1).min(self.len());
        let mut rng = Stream::derived(seed, &[VERIFY_TAG]);
        // partial Fisher-Yates for `sample` distinct indices
        let mut pool: Vec<usize> = (0..self.len()).collect();
        for pick in 0..sample {
            let j = pick + rng.index(self.len() - pick);
            pool.swap(pick, j);
        }

        for &idx in &pool[..sample] {
            let (scenario, sig) = &self.entries[idx];
            let damaged = model.apply_damage(&scenario.damage_state())?;
            let (k, m, dof) = assemble(&damaged);
            if dof.n_free() != sig.dof_count() {
                return Err(Error::CorruptDatabase(format!(
                    "entry {idx} ({}): {} DOFs stored, model has {}",
                    scenario.label(),
                    sig.dof_count(),
                    dof.n_free()
                )));
            }
            for j in 0..sig.n_modes() {
                let phi = sig.modes().column(j);
                let w2 = sig.omegas()[j] * sig.omegas()[j];
                let lhs = &k * phi;
                let resid = (&lhs - &m * phi * w2).norm();
                if resid > 1e-8 * lhs.norm() {
                    return Err(Error::CorruptDatabase(format!(
                        "entry {idx} ({}), mode {j}: residual {resid:.3e} exceeds tolerance",
                        scenario.label()
                    )));
                }
                let mnorm = (phi.transpose() * &m * phi)[(0, 0)];
                if (mnorm - 1.0).abs() > 1e-8 {
                    return Err(Error::CorruptDatabase(format!(
                        "entry {idx} ({}), mode {j}: φᵀMφ = {mnorm} is not unit",
                        scenario.label()
                    )));
                }
            }
        }
        Ok(sample)
    }
}
