//! Planar pin-jointed truss models: geometry, material, supports, damage.
//!
//! A [`TrussModel`] is immutable once validated. Damage is expressed as a
//! per-bar stiffness reduction ([`DamageState`]) and applied with
//! [`TrussModel::apply_damage`], which always scales the *pristine* modulus —
//! damage states describe absolute configurations and never compound.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub type NodeId = u32;
pub type BarId = u32;

/// Largest admissible damage fraction: a bar never loses more than 95 % of
/// its stiffness (total severance would change the topology, not the
/// stiffness).
pub const MAX_DAMAGE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

/// Axial bar connecting nodes `i` and `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bar {
    pub id: BarId,
    pub i: NodeId,
    pub j: NodeId,
}

/// Linear elastic isotropic material, uniform over the structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Young's modulus in Pa.
    #[serde(rename = "E")]
    pub young_modulus: f64,
    /// Poisson's ratio (carried for completeness; axial elements do not use it).
    #[serde(rename = "nu")]
    pub poisson_ratio: f64,
    /// Density in kg/m³.
    #[serde(rename = "rho")]
    pub density: f64,
    /// Cross-section area in m².
    #[serde(rename = "A")]
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    pub node: NodeId,
    #[serde(default)]
    pub fix_x: bool,
    #[serde(default)]
    pub fix_y: bool,
}

/// Per-bar damage fractions; bars not mentioned are undamaged.
///
/// The map itself accepts any finite fraction — range checking happens in
/// [`TrussModel::apply_damage`], the only consumer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DamageState {
    d: BTreeMap<BarId, f64>,
}

impl DamageState {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    /// Set bar `bar` to damage fraction `d` (builder style).
    #[must_use]
    pub fn with(mut self, bar: BarId, d: f64) -> Self {
        self.d.insert(bar, d);
        self
    }

    pub fn set(&mut self, bar: BarId, d: f64) {
        self.d.insert(bar, d);
    }

    /// Damage fraction of `bar` (0 when unmentioned).
    #[must_use]
    pub fn fraction(&self, bar: BarId) -> f64 {
        self.d.get(&bar).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BarId, f64)> + '_ {
        self.d.iter().map(|(&b, &d)| (b, d))
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

/// On-disk model schema.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    nodes: Vec<Node>,
    bars: Vec<Bar>,
    material: Material,
    supports: Vec<Support>,
}

/// A validated planar truss, possibly damaged.
#[derive(Debug, Clone, PartialEq)]
pub struct TrussModel {
    nodes: Vec<Node>,
    bars: Vec<Bar>,
    material: Material,
    supports: Vec<Support>,
    /// Per-bar stiffness multiplier: 1.0 pristine, 1 − d damaged.
    stiffness_scale: Vec<f64>,
    node_index: HashMap<NodeId, usize>,
    bar_index: HashMap<BarId, usize>,
}

impl TrussModel {
    /// Validate and build a model.
    ///
    /// # Errors
    /// [`Error::InvalidModel`] when geometry, ids, material, or supports are
    /// inconsistent (duplicate ids, dangling references, zero-length bars,
    /// non-positive material constants, fully constrained structure, ...).
    pub fn new(
        nodes: Vec<Node>,
        bars: Vec<Bar>,
        material: Material,
        supports: Vec<Support>,
    ) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidModel("need at least two nodes".into()));
        }
        if bars.is_empty() {
            return Err(Error::InvalidModel("need at least one bar".into()));
        }
        for (name, v) in [
            ("E", material.young_modulus),
            ("rho", material.density),
            ("A", material.area),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "material constant {name} must be finite and positive, got {v}"
                )));
            }
        }
        if !(material.poisson_ratio.is_finite()
            && (0.0..0.5).contains(&material.poisson_ratio))
        {
            return Err(Error::InvalidModel(format!(
                "Poisson ratio must lie in [0, 0.5), got {}",
                material.poisson_ratio
            )));
        }

        let mut node_index = HashMap::with_capacity(nodes.len());
        for (idx, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "node {} has non-finite coordinates",
                    n.id
                )));
            }
            if node_index.insert(n.id, idx).is_some() {
                return Err(Error::InvalidModel(format!("duplicate node id {}", n.id)));
            }
        }

        let mut bar_index = HashMap::with_capacity(bars.len());
        let mut seen_pairs = HashSet::with_capacity(bars.len());
        for (idx, b) in bars.iter().enumerate() {
            if bar_index.insert(b.id, idx).is_some() {
                return Err(Error::InvalidModel(format!("duplicate bar id {}", b.id)));
            }
            let (Some(&ni), Some(&nj)) = (node_index.get(&b.i), node_index.get(&b.j)) else {
                return Err(Error::InvalidModel(format!(
                    "bar {} references a missing node ({} or {})",
                    b.id, b.i, b.j
                )));
            };
            if b.i == b.j {
                return Err(Error::InvalidModel(format!(
                    "bar {} connects node {} to itself",
                    b.id, b.i
                )));
            }
            if !seen_pairs.insert((b.i.min(b.j), b.i.max(b.j))) {
                return Err(Error::InvalidModel(format!(
                    "duplicate bar between nodes {} and {}",
                    b.i, b.j
                )));
            }
            let (a, c) = (&nodes[ni], &nodes[nj]);
            if (a.x - c.x).hypot(a.y - c.y) == 0.0 {
                return Err(Error::InvalidModel(format!("bar {} has zero length", b.id)));
            }
        }

        let mut seen_support = HashSet::new();
        let mut constrained = 0usize;
        for s in &supports {
            if !node_index.contains_key(&s.node) {
                return Err(Error::InvalidModel(format!(
                    "support references missing node {}",
                    s.node
                )));
            }
            if !seen_support.insert(s.node) {
                return Err(Error::InvalidModel(format!(
                    "duplicate support entry for node {}",
                    s.node
                )));
            }
            constrained += usize::from(s.fix_x) + usize::from(s.fix_y);
        }
        if constrained >= 2 * nodes.len() {
            return Err(Error::InvalidModel(
                "all degrees of freedom are constrained".into(),
            ));
        }

        let n_bars = bars.len();
        Ok(TrussModel {
            nodes,
            bars,
            material,
            supports,
            stiffness_scale: vec![1.0; n_bars],
            node_index,
            bar_index,
        })
    }

    /// The 13-bar simply supported planar benchmark truss.
    ///
    /// Five bottom-chord nodes on a 1.8288 m pitch, three top nodes, pinned
    /// at node 1 and on a vertical roller at node 5. Steel-like section:
    /// E = 2×10¹¹ Pa, ρ = 7850 kg/m³, A = 4×10⁻⁴ m².
    #[must_use]
    pub fn benchmark() -> Self {
        const DX: f64 = 1.8288;
        const Y1: f64 = 1.2142;
        const Y2: f64 = 2.4284;
        let node = |id, x, y| Node { id, x, y };
        let bar = |id, i, j| Bar { id, i, j };
        let nodes = vec![
            node(1, 0.0, 0.0),
            node(2, DX, 0.0),
            node(3, 2.0 * DX, 0.0),
            node(4, 3.0 * DX, 0.0),
            node(5, 4.0 * DX, 0.0),
            node(6, DX, Y1),
            node(7, 2.0 * DX, Y2),
            node(8, 3.0 * DX, Y1),
        ];
        let bars = vec![
            // bottom chord
            bar(1, 1, 2),
            bar(2, 2, 3),
            bar(3, 3, 4),
            bar(4, 4, 5),
            // top chord
            bar(5, 1, 6),
            bar(6, 6, 7),
            bar(7, 7, 8),
            bar(8, 8, 5),
            // web
            bar(9, 6, 2),
            bar(10, 7, 3),
            bar(11, 8, 4),
            bar(12, 6, 3),
            bar(13, 8, 3),
        ];
        let material = Material {
            young_modulus: 2.0e11,
            poisson_ratio: 0.3,
            density: 7850.0,
            area: 4.0e-4,
        };
        let supports = vec![
            Support {
                node: 1,
                fix_x: true,
                fix_y: true,
            },
            Support {
                node: 5,
                fix_x: false,
                fix_y: true,
            },
        ];
        TrussModel::new(nodes, bars, material, supports)
            .expect("benchmark truss is valid by construction")
    }

    #[must_use]
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[must_use]
    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    #[must_use]
    pub fn material(&self) -> &Material {
        &self.material
    }

    #[must_use]
    pub fn supports(&self) -> &[Support] {
        &self.supports
    }

    /// Bar ids in ascending order.
    #[must_use]
    pub fn bar_ids(&self) -> Vec<BarId> {
        let mut ids: Vec<BarId> = self.bars.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        ids
    }

    pub(crate) fn node_position(&self, id: NodeId) -> Option<(f64, f64)> {
        self.node_index.get(&id).map(|&i| (self.nodes[i].x, self.nodes[i].y))
    }

    pub(crate) fn node_slot(&self, id: NodeId) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    pub(crate) fn bar_slot(&self, id: BarId) -> Option<usize> {
        self.bar_index.get(&id).copied()
    }

    /// Number of unconstrained degrees of freedom.
    #[must_use]
    pub fn free_dof_count(&self) -> usize {
        let constrained: usize = self
            .supports
            .iter()
            .map(|s| usize::from(s.fix_x) + usize::from(s.fix_y))
            .sum();
        2 * self.nodes.len() - constrained
    }

    /// Euclidean length of bar `id`.
    ///
    /// # Errors
    /// [`Error::UnknownBar`] if the id does not exist.
    pub fn bar_length(&self, id: BarId) -> Result<f64> {
        let idx = self.bar_slot(id).ok_or(Error::UnknownBar(id))?;
        let b = &self.bars[idx];
        let (xi, yi) = self.node_position(b.i).expect("validated endpoint");
        let (xj, yj) = self.node_position(b.j).expect("validated endpoint");
        Ok((xj - xi).hypot(yj - yi))
    }

    /// Stiffness multiplier of the bar at internal slot `idx` (1.0 pristine).
    #[must_use]
    pub(crate) fn stiffness_scale_at(&self, idx: usize) -> f64 {
        self.stiffness_scale[idx]
    }

    /// Effective Young's modulus of bar `id`: E·(1 − d).
    ///
    /// # Errors
    /// [`Error::UnknownBar`] if the id does not exist.
    pub fn effective_modulus(&self, id: BarId) -> Result<f64> {
        let idx = self.bar_slot(id).ok_or(Error::UnknownBar(id))?;
        Ok(self.material.young_modulus * self.stiffness_scale[idx])
    }

    /// The damage configuration described by `state`, applied to the pristine
    /// material: bar e gets effective modulus E·(1 − d_e), bars not in the
    /// state revert to E. Applying the same state twice equals applying it
    /// once; applying a new state replaces the old one entirely.
    ///
    /// # Errors
    /// [`Error::UnknownBar`] for a damage entry naming no bar;
    /// [`Error::DamageOutOfRange`] for a fraction outside [0, [`MAX_DAMAGE`]].
    pub fn apply_damage(&self, state: &DamageState) -> Result<TrussModel> {
        let mut scale = vec![1.0; self.bars.len()];
        for (bar, d) in state.iter() {
            let idx = self.bar_slot(bar).ok_or(Error::UnknownBar(bar))?;
            if !(d.is_finite() && (0.0..=MAX_DAMAGE).contains(&d)) {
                return Err(Error::DamageOutOfRange { bar, value: d });
            }
            scale[idx] = 1.0 - d;
        }
        let mut out = self.clone();
        out.stiffness_scale = scale;
        Ok(out)
    }

    /// Parse and validate a model from its JSON form.
    ///
    /// # Errors
    /// [`Error::Parse`] (with byte offset) for malformed JSON,
    /// [`Error::InvalidModel`] for well-formed but inconsistent content.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::from_json(&e, text))?;
        TrussModel::new(file.nodes, file.bars, file.material, file.supports)
    }

    /// Load a model from a JSON file.
    ///
    /// # Errors
    /// I/O errors plus everything [`TrussModel::from_json`] can return.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        TrussModel::from_json(&text)
    }

    /// Canonical JSON serialization of the *pristine* model (damage excluded).
    ///
    /// This is the byte stream the fingerprint hashes, so two models that
    /// differ only in input formatting fingerprint identically.
    #[must_use]
    pub fn canonical_json(&self) -> String {
        let file = ModelFile {
            nodes: self.nodes.clone(),
            bars: self.bars.clone(),
            material: self.material,
            supports: self.supports.clone(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    /// SHA-256 of [`TrussModel::canonical_json`], hex-encoded. Invariant
    /// under damage; used to pair databases with the model they were built
    /// from.
    #[must_use]
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn benchmark_counts_and_statics() {
        let m = TrussModel::benchmark();
        assert_eq!(m.nodes().len(), 8);
        assert_eq!(m.bars().len(), 13);
        // statically determinate: m = 2j - 3
        assert_eq!(m.bars().len(), 2 * m.nodes().len() - 3);
        assert_eq!(m.free_dof_count(), 13);
        assert_eq!(m.bar_ids(), (1..=13).collect::<Vec<_>>());
    }

    #[test]
    fn benchmark_bar_lengths() {
        let m = TrussModel::benchmark();
        // bottom-chord pitch
        assert_relative_eq!(m.bar_length(1).unwrap(), 1.8288, max_relative = 1e-12);
        // top chord 6-7: sqrt(1.8288^2 + 1.2142^2)
        assert_relative_eq!(
            m.bar_length(6).unwrap(),
            2.195_174_498_758_584,
            max_relative = 1e-9
        );
        // end diagonal 1-6 shares that length by symmetry of the layout
        assert_relative_eq!(
            m.bar_length(5).unwrap(),
            2.195_174_498_758_584,
            max_relative = 1e-9
        );
        // vertical web 6-2
        assert_relative_eq!(m.bar_length(9).unwrap(), 1.2142, max_relative = 1e-12);
        assert!(matches!(m.bar_length(99), Err(Error::UnknownBar(99))));
    }

    #[test]
    fn damage_scales_pristine_modulus() {
        let m = TrussModel::benchmark();
        let d = m.apply_damage(&DamageState::new().with(3, 0.30)).unwrap();
        assert_relative_eq!(d.effective_modulus(3).unwrap(), 1.4e11, max_relative = 1e-14);
        assert_eq!(d.effective_modulus(2).unwrap(), 2.0e11);
        // reapplying the same state is a no-op
        let dd = d.apply_damage(&DamageState::new().with(3, 0.30)).unwrap();
        assert_eq!(d, dd);
        // a new state replaces, not compounds
        let e = d.apply_damage(&DamageState::new().with(5, 0.10)).unwrap();
        assert_eq!(e.effective_modulus(3).unwrap(), 2.0e11);
        assert_relative_eq!(e.effective_modulus(5).unwrap(), 1.8e11, max_relative = 1e-14);
    }

    #[test]
    fn damage_range_is_enforced() {
        let m = TrussModel::benchmark();
        let full = m.apply_damage(&DamageState::new().with(2, 1.0));
        assert!(matches!(
            full,
            Err(Error::DamageOutOfRange { bar: 2, .. })
        ));
        assert!(m.apply_damage(&DamageState::new().with(2, 0.96)).is_err());
        assert!(m.apply_damage(&DamageState::new().with(2, -0.1)).is_err());
        assert!(m.apply_damage(&DamageState::new().with(2, MAX_DAMAGE)).is_ok());
        assert!(matches!(
            m.apply_damage(&DamageState::new().with(77, 0.1)),
            Err(Error::UnknownBar(77))
        ));
    }

    #[test]
    fn json_round_trip_preserves_model() {
        let m = TrussModel::benchmark();
        let text = m.canonical_json();
        let back = TrussModel::from_json(&text).unwrap();
        assert_eq!(m, back);
        // canonical form is stable
        assert_eq!(text, back.canonical_json());
    }

    #[test]
    fn truncated_json_reports_byte_offset() {
        let text = TrussModel::benchmark().canonical_json();
        let cut = &text[..text.len() / 2];
        match TrussModel::from_json(cut) {
            Err(Error::Parse { offset, line, column, .. }) => {
                assert!(offset > 0);
                assert_eq!(line, 1); // canonical form is one line
                assert_eq!(offset, column - 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn fingerprint_ignores_damage_but_not_geometry() {
        let m = TrussModel::benchmark();
        let damaged = m.apply_damage(&DamageState::new().with(1, 0.5)).unwrap();
        assert_eq!(m.fingerprint(), damaged.fingerprint());

        let mut nodes = m.nodes().to_vec();
        nodes[7].y += 0.001;
        let moved = TrussModel::new(
            nodes,
            m.bars().to_vec(),
            *m.material(),
            m.supports().to_vec(),
        )
        .unwrap();
        assert_ne!(m.fingerprint(), moved.fingerprint());
    }

    #[test]
    fn validation_rejects_inconsistent_models() {
        let m = TrussModel::benchmark();
        let mat = *m.material();

        // duplicate node id
        let mut nodes = m.nodes().to_vec();
        nodes[1].id = 1;
        assert!(TrussModel::new(nodes, m.bars().to_vec(), mat, m.supports().to_vec()).is_err());

        // bar to a missing node
        let mut bars = m.bars().to_vec();
        bars[0].j = 42;
        assert!(TrussModel::new(m.nodes().to_vec(), bars, mat, m.supports().to_vec()).is_err());

        // zero-length bar
        let mut nodes = m.nodes().to_vec();
        nodes[1].x = 0.0;
        nodes[1].y = 0.0;
        assert!(TrussModel::new(nodes, m.bars().to_vec(), mat, m.supports().to_vec()).is_err());

        // non-positive modulus
        let bad = Material {
            young_modulus: 0.0,
            ..mat
        };
        assert!(TrussModel::new(m.nodes().to_vec(), m.bars().to_vec(), bad, m.supports().to_vec())
            .is_err());

        // support on a missing node
        let mut sup = m.supports().to_vec();
        sup[0].node = 99;
        assert!(TrussModel::new(m.nodes().to_vec(), m.bars().to_vec(), mat, sup).is_err());
    }

    #[test]
    fn unknown_json_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&TrussModel::benchmark().canonical_json()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(TrussModel::from_json(&v.to_string()).is_err());
    }
}
