//! Finite-element modal analysis of planar trusses.
//!
//! Two-node axial bars with the closed-form 4×4 element matrices, assembled
//! on the unconstrained DOFs only (supports are eliminated, not penalized),
//! then handed to the generalized eigensolver. The result is a
//! [`ModalSignature`]: ascending natural frequencies with mass-normalized,
//! sign-fixed mode shapes — the comparable fingerprint everything downstream
//! matches against.

use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::eigen::solve_generalized;
use crate::truss::TrussModel;
use crate::{Error, Result};

/// A stiffness eigenvalue this far below the largest (relatively) means the
/// structure can deform without strain energy: a mechanism, not a vibration
/// problem.
pub const MECHANISM_TOL: f64 = 1e-10;

/// Map from (node, direction) to an index in the reduced free-DOF system.
///
/// Free DOFs are numbered in node storage order, x before y, skipping
/// constrained directions — fixed once per model so matrices, mode-shape rows,
/// and report columns all agree.
#[derive(Debug, Clone)]
pub struct DofMap {
    /// Per node slot: `[x, y]`, `None` when constrained.
    slots: Vec<[Option<usize>; 2]>,
    n_free: usize,
}

impl DofMap {
    #[must_use]
    pub fn new(model: &TrussModel) -> Self {
        let mut fixed = vec![[false; 2]; model.nodes().len()];
        for s in model.supports() {
            let slot = model.node_slot(s.node).expect("validated support node");
            fixed[slot][0] |= s.fix_x;
            fixed[slot][1] |= s.fix_y;
        }
        let mut slots = vec![[None; 2]; model.nodes().len()];
        let mut next = 0usize;
        for (i, f) in fixed.iter().enumerate() {
            for dir in 0..2 {
                if !f[dir] {
                    slots[i][dir] = Some(next);
                    next += 1;
                }
            }
        }
        DofMap {
            slots,
            n_free: next,
        }
    }

    #[must_use]
    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free-system index of (node slot, direction 0=x/1=y), if unconstrained.
    #[must_use]
    pub fn free_index(&self, node_slot: usize, dir: usize) -> Option<usize> {
        self.slots[node_slot][dir]
    }
}

/// 4×4 element stiffness of the bar at storage slot `bar_slot`, in global
/// coordinates, using the bar's *effective* (damage-scaled) modulus:
/// (E·A/L) · [c² cs; cs s²] blocks with the usual ± tiling.
#[must_use]
pub fn element_stiffness(model: &TrussModel, bar_slot: usize) -> Matrix4<f64> {
    let bar = &model.bars()[bar_slot];
    let (xi, yi) = model.node_position(bar.i).expect("validated endpoint");
    let (xj, yj) = model.node_position(bar.j).expect("validated endpoint");
    let (dx, dy) = (xj - xi, yj - yi);
    let len = dx.hypot(dy);
    let (c, s) = (dx / len, dy / len);
    let mat = model.material();
    let ea_l = mat.young_modulus * model.stiffness_scale_at(bar_slot) * mat.area / len;
    let (cc, cs, ss) = (c * c, c * s, s * s);
    ea_l * Matrix4::new(
        cc, cs, -cc, -cs, //
        cs, ss, -cs, -ss, //
        -cc, -cs, cc, cs, //
        -cs, -ss, cs, ss,
    )
}

/// 4×4 consistent element mass: (ρ·A·L/6) · [[2,0,1,0],[0,2,0,1],[1,0,2,0],
/// [0,1,0,2]]. Independent of orientation, and never reduced by damage —
/// stiffness loss does not remove material.
#[must_use]
pub fn element_mass(model: &TrussModel, bar_slot: usize) -> Matrix4<f64> {
    let bar = &model.bars()[bar_slot];
    let (xi, yi) = model.node_position(bar.i).expect("validated endpoint");
    let (xj, yj) = model.node_position(bar.j).expect("validated endpoint");
    let len = (xj - xi).hypot(yj - yi);
    let mat = model.material();
    let m6 = mat.density * mat.area * len / 6.0;
    m6 * Matrix4::new(
        2.0, 0.0, 1.0, 0.0, //
        0.0, 2.0, 0.0, 1.0, //
        1.0, 0.0, 2.0, 0.0, //
        0.0, 1.0, 0.0, 2.0,
    )
}

/// Assemble the reduced stiffness and mass matrices on the free DOFs.
///
/// Both come out exactly symmetric (mirrored entries accumulate identical
/// terms in the same order).
#[must_use]
pub fn assemble(model: &TrussModel) -> (DMatrix<f64>, DMatrix<f64>, DofMap) {
    let dof = DofMap::new(model);
    let n = dof.n_free();
    let mut k = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    for bar_slot in 0..model.bars().len() {
        let ke = element_stiffness(model, bar_slot);
        let me = element_mass(model, bar_slot);
        let bar = &model.bars()[bar_slot];
        let si = model.node_slot(bar.i).expect("validated endpoint");
        let sj = model.node_slot(bar.j).expect("validated endpoint");
        let global = [
            dof.free_index(si, 0),
            dof.free_index(si, 1),
            dof.free_index(sj, 0),
            dof.free_index(sj, 1),
        ];
        for (a, &ga) in global.iter().enumerate() {
            let Some(ga) = ga else { continue };
            for (b, &gb) in global.iter().enumerate() {
                let Some(gb) = gb else { continue };
                k[(ga, gb)] += ke[(a, b)];
                m[(ga, gb)] += me[(a, b)];
            }
        }
    }
    (k, m, dof)
}

/// Natural frequencies and mass-normalized mode shapes.
///
/// `omegas[j]` is in rad/s, ascending. `modes` is free-DOF-count × n_modes;
/// column j is mode j with φᵀMφ = 1 and its largest-magnitude component
/// positive (ties broken toward the lowest DOF index).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSignature {
    omegas: Vec<f64>,
    modes: DMatrix<f64>,
}

impl ModalSignature {
    /// # Errors
    /// [`Error::DimensionMismatch`] if the mode matrix has a different number
    /// of columns than there are frequencies.
    pub fn new(omegas: Vec<f64>, modes: DMatrix<f64>) -> Result<Self> {
        if omegas.len() != modes.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} frequencies but {} mode columns",
                omegas.len(),
                modes.ncols()
            )));
        }
        Ok(ModalSignature { omegas, modes })
    }

    #[must_use]
    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    /// Number of free DOFs each mode shape spans.
    #[must_use]
    pub fn dof_count(&self) -> usize {
        self.modes.nrows()
    }

    #[must_use]
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    #[must_use]
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// The same signature keeping only the first `n` modes.
    ///
    /// # Errors
    /// [`Error::DimensionMismatch`] when asking for more modes than stored.
    pub fn truncated(&self, n: usize) -> Result<ModalSignature> {
        if n > self.n_modes() {
            return Err(Error::DimensionMismatch(format!(
                "cannot keep {n} of {} modes",
                self.n_modes()
            )));
        }
        Ok(ModalSignature {
            omegas: self.omegas[..n].to_vec(),
            modes: self.modes.columns(0, n).clone_owned(),
        })
    }
}

/// On-disk form: omegas plus mode-major shape arrays.
#[derive(Serialize, Deserialize)]
struct SignatureFile {
    omegas: Vec<f64>,
    modes: Vec<Vec<f64>>,
}

impl Serialize for ModalSignature {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let file = SignatureFile {
            omegas: self.omegas.clone(),
            modes: (0..self.modes.ncols())
                .map(|j| self.modes.column(j).iter().copied().collect())
                .collect(),
        };
        file.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ModalSignature {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = SignatureFile::deserialize(de)?;
        if file.modes.len() != file.omegas.len() {
            return Err(D::Error::custom(format!(
                "{} frequencies but {} mode arrays",
                file.omegas.len(),
                file.modes.len()
            )));
        }
        let rows = file.modes.first().map_or(0, Vec::len);
        if file.modes.iter().any(|m| m.len() != rows) {
            return Err(D::Error::custom("mode arrays have unequal lengths"));
        }
        let modes = DMatrix::from_fn(rows, file.modes.len(), |i, j| file.modes[j][i]);
        Ok(ModalSignature {
            omegas: file.omegas,
            modes,
        })
    }
}

/// Extract the first `n_modes` natural frequencies and mode shapes of
/// `model`.
///
/// # Errors
/// [`Error::InvalidParameter`] for `n_modes == 0`,
/// [`Error::DimensionMismatch`] when the model has fewer free DOFs than
/// requested modes, [`Error::Mechanism`] when the restrained stiffness matrix
/// is singular beyond [`MECHANISM_TOL`], plus eigensolver failures.
pub fn solve_modes(model: &TrussModel, n_modes: usize) -> Result<ModalSignature> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("n_modes must be at least 1".into()));
    }
    let (k, m, dof) = assemble(model);
    if n_modes > dof.n_free() {
        return Err(Error::DimensionMismatch(format!(
            "requested {n_modes} modes but the model has only {} free DOFs",
            dof.n_free()
        )));
    }

    let eig = solve_generalized(&k, &m)?;
    let max = *eig.values.last().expect("at least one DOF");
    if !(max > 0.0) || eig.values[0] <= MECHANISM_TOL * max {
        return Err(Error::Mechanism {
            ratio: if max > 0.0 { eig.values[0] / max } else { 0.0 },
        });
    }

    let omegas: Vec<f64> = eig.values[..n_modes]
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    let mut modes = eig.vectors.columns(0, n_modes).clone_owned();
    for j in 0..n_modes {
        let mut col = modes.column_mut(j);
        let mut idx = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[idx].abs() {
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }
    ModalSignature::new(omegas, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truss::{Bar, DamageState, Material, Node, Support};
    use approx::assert_relative_eq;

    /// Single bar along +x, pinned at node 1, node 2 free in x only.
    fn axial_rig(length: f64) -> TrussModel {
        TrussModel::new(
            vec![
                Node { id: 1, x: 0.0, y: 0.0 },
                Node {
                    id: 2,
                    x: length,
                    y: 0.0,
                },
            ],
            vec![Bar { id: 1, i: 1, j: 2 }],
            Material {
                young_modulus: 2.0e11,
                poisson_ratio: 0.3,
                density: 7850.0,
                area: 4.0e-4,
            },
            vec![
                Support {
                    node: 1,
                    fix_x: true,
                    fix_y: true,
                },
                Support {
                    node: 2,
                    fix_x: false,
                    fix_y: true,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn stiffness_of_horizontal_bar() {
        let m = TrussModel::benchmark();
        let k = element_stiffness(&m, 0); // bar 1, along +x, L = 1.8288
        let ea_l = 43_744_531.933_508_314;
        assert_relative_eq!(k[(0, 0)], ea_l, max_relative = 1e-12);
        assert_relative_eq!(k[(0, 2)], -ea_l, max_relative = 1e-12);
        assert_eq!(k[(1, 1)], 0.0); // no transverse stiffness in a pin-jointed bar
        assert_eq!(k[(0, 1)], 0.0);
        // symmetric
        assert_eq!(k, k.transpose());
    }

    #[test]
    fn stiffness_of_diagonal_bar_mixes_directions() {
        let mut nodes = vec![
            Node { id: 1, x: 0.0, y: 0.0 },
            Node { id: 2, x: 1.0, y: 1.0 },
        ];
        let model = TrussModel::new(
            std::mem::take(&mut nodes),
            vec![Bar { id: 1, i: 1, j: 2 }],
            Material {
                young_modulus: 1.0,
                poisson_ratio: 0.0,
                density: 1.0,
                area: 1.0,
            },
            vec![Support {
                node: 1,
                fix_x: true,
                fix_y: true,
            }],
        )
        .unwrap();
        let k = element_stiffness(&model, 0);
        // c = s = 1/√2, EA/L = 1/√2 → every block entry is 1/(2√2)
        let v = 1.0 / (2.0 * 2.0_f64.sqrt());
        for (a, b, sign) in [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0), (0, 2, -1.0), (1, 3, -1.0)] {
            assert_relative_eq!(k[(a, b)], sign * v, max_relative = 1e-14);
        }
    }

    #[test]
    fn damage_scales_element_stiffness_only() {
        let m = TrussModel::benchmark();
        let damaged = m.apply_damage(&DamageState::new().with(1, 0.30)).unwrap();
        let k0 = element_stiffness(&m, 0);
        let k1 = element_stiffness(&damaged, 0);
        assert_relative_eq!(k1[(0, 0)], 0.70 * k0[(0, 0)], max_relative = 1e-14);
        assert_eq!(element_mass(&m, 0), element_mass(&damaged, 0));
    }

    #[test]
    fn consistent_mass_matches_template() {
        let model = TrussModel::benchmark();
        let me = element_mass(&model, 0); // bar 1: ρAL = 5.742432 kg
        let m6 = 5.742_432 / 6.0;
        for (a, b, f) in [
            (0, 0, 2.0),
            (1, 1, 2.0),
            (2, 2, 2.0),
            (3, 3, 2.0),
            (0, 2, 1.0),
            (1, 3, 1.0),
            (0, 1, 0.0),
            (0, 3, 0.0),
        ] {
            assert_relative_eq!(me[(a, b)], f * m6, max_relative = 1e-12, epsilon = 1e-30);
        }
        // column sums: each direction carries ρAL/2 per node
        assert_relative_eq!(me.column(0).sum(), 5.742_432 / 2.0, max_relative = 1e-12);
        // rigid x-translation recovers the full translating mass ρAL
        let u = nalgebra::Vector4::new(1.0, 0.0, 1.0, 0.0);
        assert_relative_eq!((u.transpose() * me * u)[(0, 0)], 5.742_432, max_relative = 1e-12);
    }

    #[test]
    fn consistent_mass_is_orientation_invariant() {
        // two bars of equal length, one horizontal, one rotated
        let model = TrussModel::new(
            vec![
                Node { id: 1, x: 0.0, y: 0.0 },
                Node { id: 2, x: 2.0, y: 0.0 },
                Node { id: 3, x: 0.0, y: 2.0 },
            ],
            vec![Bar { id: 1, i: 1, j: 2 }, Bar { id: 2, i: 1, j: 3 }],
            Material {
                young_modulus: 1.0e9,
                poisson_ratio: 0.2,
                density: 1000.0,
                area: 1.0e-3,
            },
            vec![Support {
                node: 1,
                fix_x: true,
                fix_y: true,
            }],
        )
        .unwrap();
        assert_eq!(element_mass(&model, 0), element_mass(&model, 1));
    }

    #[test]
    fn assembly_is_reduced_and_exactly_symmetric() {
        let model = TrussModel::benchmark();
        let (k, m, dof) = assemble(&model);
        assert_eq!(dof.n_free(), 13);
        assert_eq!(k.nrows(), 13);
        assert_eq!(m.nrows(), 13);
        // bitwise symmetry, not approximate
        assert_eq!(k, k.transpose());
        assert_eq!(m, m.transpose());
        // constrained DOFs really are gone: node 1 fully fixed, node 5 y fixed
        assert_eq!(dof.free_index(0, 0), None);
        assert_eq!(dof.free_index(0, 1), None);
        assert_eq!(dof.free_index(4, 1), None);
        assert_eq!(dof.free_index(1, 0), Some(0));
    }

    #[test]
    fn single_dof_rig_matches_closed_form() {
        // ω = sqrt((EA/L) / (ρAL/3)) = sqrt(3E/ρ)/L
        let len = 1.8288;
        let sig = solve_modes(&axial_rig(len), 1).unwrap();
        let expect = (3.0 * 2.0e11 / 7850.0_f64).sqrt() / len;
        assert_relative_eq!(sig.omegas()[0], expect, max_relative = 1e-12);
        assert_relative_eq!(sig.omegas()[0], 4_780.513_883_113_911, max_relative = 1e-12);
        // mass-normalized single component: φ = 1/sqrt(ρAL/3)
        let phi = sig.modes()[(0, 0)];
        assert_relative_eq!(phi, (3.0 / 5.742_432_f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn benchmark_spectrum_matches_independent_solution() {
        // Frozen from an independent assembly + dense generalized eigensolve
        // (scipy.linalg.eigh) of the same discretization.
        let expect = [
            326.669_818_920_573_73,
            740.453_268_559_479_5,
            951.549_268_729_060_3,
            2_083.093_394_131_077,
            2_174.860_187_919_917,
            2_607.727_641_225_412_3,
            3_271.765_878_243_791_6,
            3_900.340_047_031_387_3,
        ];
        let sig = solve_modes(&TrussModel::benchmark(), 8).unwrap();
        for (got, want) in sig.omegas().iter().zip(expect) {
            assert_relative_eq!(*got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn damaged_benchmark_matches_independent_solution() {
        let model = TrussModel::benchmark()
            .apply_damage(&DamageState::new().with(3, 0.30))
            .unwrap();
        let sig = solve_modes(&model, 3).unwrap();
        let expect = [319.083_162_597_668_5, 740.446_314_092_711, 925.744_090_276_668_9];
        for (got, want) in sig.omegas().iter().zip(expect) {
            assert_relative_eq!(*got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn modes_are_mass_normalized_with_small_residuals() {
        let model = TrussModel::benchmark();
        let (k, m, _) = assemble(&model);
        let sig = solve_modes(&model, 8).unwrap();
        for j in 0..8 {
            let phi = sig.modes().column(j);
            let w2 = sig.omegas()[j] * sig.omegas()[j];
            let lhs = &k * phi;
            let rhs = &m * phi * w2;
            assert!((&lhs - &rhs).norm() <= 1e-8 * lhs.norm());
            let mnorm = (phi.transpose() * &m * phi)[(0, 0)];
            assert!((mnorm - 1.0).abs() <= 1e-8, "φᵀMφ = {mnorm}");
            // Rayleigh quotient consistency
            let rq = (phi.transpose() * &k * phi)[(0, 0)] / mnorm;
            assert!((rq - w2).abs() <= 1e-9 * w2.max(1.0));
        }
    }

    #[test]
    fn mode_sign_convention_is_positive_peak() {
        let sig = solve_modes(&TrussModel::benchmark(), 8).unwrap();
        for j in 0..sig.n_modes() {
            let col = sig.modes().column(j);
            let peak = col.iter().cloned().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(peak > 0.0, "mode {j} peak {peak}");
        }
    }

    #[test]
    fn removing_a_chord_bar_is_a_mechanism() {
        let full = TrussModel::benchmark();
        let bars: Vec<Bar> = full.bars().iter().copied().filter(|b| b.id != 2).collect();
        let model = TrussModel::new(
            full.nodes().to_vec(),
            bars,
            *full.material(),
            full.supports().to_vec(),
        )
        .unwrap();
        assert!(matches!(solve_modes(&model, 4), Err(Error::Mechanism { .. })));
    }

    #[test]
    fn mode_count_bounds_are_checked() {
        let model = TrussModel::benchmark();
        assert!(matches!(
            solve_modes(&model, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(solve_modes(&model, 13).is_ok());
        assert!(matches!(
            solve_modes(&model, 14),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn signature_serde_round_trip() {
        let sig = solve_modes(&TrussModel::benchmark(), 4).unwrap();
        let text = serde_json::to_string(&sig).unwrap();
        let back: ModalSignature = serde_json::from_str(&text).unwrap();
        assert_eq!(sig, back);
        let trunc = sig.truncated(2).unwrap();
        assert_eq!(trunc.n_modes(), 2);
        assert_eq!(trunc.omegas(), &sig.omegas()[..2]);
        assert!(sig.truncated(9).is_err());
    }
}
