//! Gaussian states over a few bosonic modes and the operations the protocol
//! needs: symplectic maps, noisy channels, homodyne conditioning,
//! feedforward displacement and the two-mode logarithmic negativity.
//!
//! Quadratures are interleaved `(q1, p1, q2, p2, ...)`, `[q, p] = i`, and
//! vacuum variance is `1/2` per quadrature.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{
    self, apply_affine_on, physicality_min_eigenvalue, symmetrize, symplectic_form,
    symplectic_residual,
};
use crate::math;
use crate::{Error, Result};

/// Tolerance on `|S Omega S^T - Omega|` for accepting a symplectic matrix.
pub const SYMPLECTIC_TOL: f64 = 1e-12;
/// Most negative admissible eigenvalue of `V + (i/2) Omega`.
pub const PHYSICALITY_TOL: f64 = -1e-10;
/// Relative threshold below which a measured variance is treated as zero
/// and the conditioning falls back to the pseudo-inverse branch.
pub const PINV_REL_TOL: f64 = 1e-14;

/// One of the two canonical quadratures of a mode. `Q` is the position-like
/// quadrature (optical `X`), `P` the momentum-like one (optical `Y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    /// Index of this quadrature within the interleaved layout.
    #[inline]
    pub fn index(self, mode: usize) -> usize {
        2 * mode
            + match self {
                Quadrature::Q => 0,
                Quadrature::P => 1,
            }
    }

    /// The conjugate quadrature.
    #[inline]
    pub fn conjugate(self) -> Self {
        match self {
            Quadrature::Q => Quadrature::P,
            Quadrature::P => Quadrature::Q,
        }
    }
}

/// Result of a physicality check: the minimum eigenvalue of
/// `V + (i/2) Omega` and the verdict at [`PHYSICALITY_TOL`].
#[derive(Debug, Clone, Copy)]
pub struct PhysicalityReport {
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// A Gaussian state: vector of quadrature means plus a symmetric
/// covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    means: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Build a state from raw means and covariance. The covariance must be
    /// square with even dimension matching the means; it is symmetrized on
    /// entry.
    pub fn new(means: DVector<f64>, mut cov: DMatrix<f64>) -> Result<Self> {
        let dim = means.len();
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cov.nrows(),
            });
        }
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: dim,
            });
        }
        symmetrize(&mut cov);
        Ok(Self { means, cov })
    }

    /// `n`-mode vacuum: zero means, covariance `I/2`.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter {
                name: "n_modes",
                value: 0.0,
            });
        }
        let dim = 2 * n_modes;
        Ok(Self {
            means: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim).scale(0.5),
        })
    }

    /// Single-mode thermal state with mean occupation `n_th`:
    /// covariance `(n_th + 1/2) I`.
    pub fn thermal(n_th: f64) -> Result<Self> {
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(Error::InvalidParameter {
                name: "n_th",
                value: n_th,
            });
        }
        Ok(Self {
            means: DVector::zeros(2),
            cov: DMatrix::identity(2, 2).scale(n_th + 0.5),
        })
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.means.len() / 2
    }

    #[inline]
    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    #[inline]
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.means, self.cov)
    }

    /// Minimum eigenvalue of `V + (i/2) Omega` together with the verdict.
    pub fn physicality(&self) -> PhysicalityReport {
        physicality_check(&self.cov).expect("state dimensions are valid by construction")
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }
}

/// A symplectic matrix acting on a list of target modes of a larger state.
#[derive(Debug, Clone)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
    target_modes: Vec<usize>,
}

impl SymplecticMap {
    /// Validate and wrap a symplectic matrix. Rejects matrices whose
    /// `S Omega S^T` residual exceeds [`SYMPLECTIC_TOL`].
    pub fn new(matrix: DMatrix<f64>, target_modes: Vec<usize>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim != 2 * target_modes.len() || dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 2 * target_modes.len(),
                got: dim,
            });
        }
        let residual = symplectic_residual(&matrix);
        if residual > SYMPLECTIC_TOL {
            return Err(Error::NonSymplectic { residual });
        }
        for (i, &m) in target_modes.iter().enumerate() {
            if target_modes[..i].contains(&m) {
                return Err(Error::SameMode { mode: m });
            }
        }
        Ok(Self {
            matrix,
            target_modes,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn target_modes(&self) -> &[usize] {
        &self.target_modes
    }

    /// Identity on `k` modes.
    pub fn identity(target_modes: Vec<usize>) -> Self {
        let dim = 2 * target_modes.len();
        Self {
            matrix: DMatrix::identity(dim, dim),
            target_modes,
        }
    }

    /// Composition `self . other` on the same target list.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.target_modes != other.target_modes {
            return Err(Error::DimensionMismatch {
                expected: self.target_modes.len(),
                got: other.target_modes.len(),
            });
        }
        Self::new(&self.matrix * &other.matrix, self.target_modes.clone())
    }
}

/// Single-mode squeezer `q -> S q`, `p -> p / S`.
pub fn squeeze_map(s: f64, mode: usize) -> Result<SymplecticMap> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter {
            name: "squeezing",
            value: s,
        });
    }
    let m = DMatrix::from_row_slice(2, 2, &[s, 0.0, 0.0, 1.0 / s]);
    SymplecticMap::new(m, vec![mode])
}

/// Quantum non-demolition gate generated by `H = K u_c u_t`, where `u_c`
/// is the chosen control quadrature and `u_t` the chosen target quadrature.
/// Both chosen quadratures are left untouched; each conjugate picks up the
/// other variable scaled by `K` with the sign fixed by the symplectic form.
pub fn qnd_map(
    gain: f64,
    control_mode: usize,
    control_quad: Quadrature,
    target_mode: usize,
    target_quad: Quadrature,
) -> Result<SymplecticMap> {
    if control_mode == target_mode {
        return Err(Error::SameMode { mode: control_mode });
    }
    if !gain.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gain",
            value: gain,
        });
    }
    // Local layout: control mode first, target mode second.
    let c = control_quad.index(0);
    let t = target_quad.index(1);
    let mut h = DMatrix::zeros(4, 4);
    h[(c, t)] = gain;
    h[(t, c)] = gain;
    let s = DMatrix::identity(4, 4) + symplectic_form(2) * h;
    SymplecticMap::new(s, vec![control_mode, target_mode])
}

/// Beamsplitter mixing `signal' = sqrt(eta) signal + sqrt(1-eta) vacuum`,
/// with the orthogonal combination on the second output port.
pub fn beamsplitter_map(eta: f64, signal_mode: usize, vacuum_mode: usize) -> Result<SymplecticMap> {
    if signal_mode == vacuum_mode {
        return Err(Error::SameMode { mode: signal_mode });
    }
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
        });
    }
    let c = math::sqrt(eta);
    let s = math::sqrt(1.0 - eta);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        c,   0.0, s,   0.0,
        0.0, c,   0.0, s,
        -s,  0.0, c,   0.0,
        0.0, -s,  0.0, c,
    ]);
    SymplecticMap::new(m, vec![signal_mode, vacuum_mode])
}

/// Apply a symplectic map to the targeted modes of a state.
pub fn apply_symplectic(state: &GaussianState, map: &SymplecticMap) -> Result<GaussianState> {
    for &m in map.target_modes() {
        state.check_mode(m)?;
    }
    let mut idx = Vec::with_capacity(2 * map.target_modes().len());
    for &m in map.target_modes() {
        idx.push(2 * m);
        idx.push(2 * m + 1);
    }
    let mut cov = state.cov.clone();
    let mut means = state.means.clone();
    apply_affine_on(&mut cov, &mut means, &idx, map.matrix(), None);
    GaussianState::new(means, cov)
}

/// A Gaussian channel `V -> A V A^T + N` with added-noise covariance `N`.
#[derive(Debug, Clone)]
pub struct GaussianChannel {
    pub a: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

impl GaussianChannel {
    pub fn new(a: DMatrix<f64>, mut n: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || n.nrows() != n.ncols() || a.nrows() != n.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: n.nrows(),
            });
        }
        symmetrize(&mut n);
        Ok(Self { a, n })
    }

    /// Complete-positivity diagnostic: minimum eigenvalue of
    /// `N + (i/2)(Omega - A Omega A^T)`. Nonnegative for a CP map.
    pub fn cp_defect(&self) -> f64 {
        let dim = self.a.nrows();
        let omega = symplectic_form(dim / 2);
        let skew = &omega - &self.a * &omega * self.a.transpose();
        // Hermitian N + (i/2) skew via the real embedding.
        let mut embed = DMatrix::zeros(2 * dim, 2 * dim);
        for i in 0..dim {
            for j in 0..dim {
                embed[(i, j)] = self.n[(i, j)];
                embed[(dim + i, dim + j)] = self.n[(i, j)];
                embed[(i, dim + j)] = -0.5 * skew[(i, j)];
                embed[(dim + i, j)] = 0.5 * skew[(i, j)];
            }
        }
        symmetrize(&mut embed);
        linalg::min_symmetric_eigenvalue(&embed)
    }

    /// Apply to the listed modes of a state.
    pub fn apply(&self, state: &GaussianState, target_modes: &[usize]) -> Result<GaussianState> {
        for &m in target_modes {
            state.check_mode(m)?;
        }
        if self.a.nrows() != 2 * target_modes.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * target_modes.len(),
                got: self.a.nrows(),
            });
        }
        let mut idx = Vec::with_capacity(2 * target_modes.len());
        for &m in target_modes {
            idx.push(2 * m);
            idx.push(2 * m + 1);
        }
        let mut cov = state.cov.clone();
        let mut means = state.means.clone();
        apply_affine_on(&mut cov, &mut means, &idx, &self.a, Some(&self.n));
        GaussianState::new(means, cov)
    }
}

/// Keep the listed modes, tracing the rest out. The kept modes appear in
/// the order given.
pub fn partial_trace(state: &GaussianState, keep_modes: &[usize]) -> Result<GaussianState> {
    if keep_modes.is_empty() {
        return Err(Error::EmptySelection);
    }
    for (i, &m) in keep_modes.iter().enumerate() {
        state.check_mode(m)?;
        if keep_modes[..i].contains(&m) {
            return Err(Error::SameMode { mode: m });
        }
    }
    let dim = 2 * keep_modes.len();
    let mut means = DVector::zeros(dim);
    let mut cov = DMatrix::zeros(dim, dim);
    for (a, &ma) in keep_modes.iter().enumerate() {
        for qa in 0..2 {
            means[2 * a + qa] = state.means[2 * ma + qa];
            for (b, &mb) in keep_modes.iter().enumerate() {
                for qb in 0..2 {
                    cov[(2 * a + qa, 2 * b + qb)] = state.cov[(2 * ma + qa, 2 * mb + qb)];
                }
            }
        }
    }
    GaussianState::new(means, cov)
}

/// Condition on a homodyne measurement of one quadrature with the given
/// outcome. Returns the conditional state of the remaining modes, with the
/// measured mode removed. If the measured variance is numerically zero the
/// pseudo-inverse branch leaves the remaining covariance untouched.
pub fn homodyne_condition(
    state: &GaussianState,
    mode: usize,
    quad: Quadrature,
    outcome: f64,
) -> Result<GaussianState> {
    state.check_mode(mode)?;
    if state.n_modes() < 2 {
        return Err(Error::EmptySelection);
    }
    let j = quad.index(mode);
    let keep: Vec<usize> = (0..state.n_modes()).filter(|&m| m != mode).collect();
    let mut idx = Vec::with_capacity(2 * keep.len());
    for &m in &keep {
        idx.push(2 * m);
        idx.push(2 * m + 1);
    }

    let vmm = state.cov[(j, j)];
    let largest = state.cov.diagonal().iter().copied().fold(0.0f64, f64::max);
    let kept = partial_trace(state, &keep)?;
    if vmm <= PINV_REL_TOL * largest {
        return Ok(kept);
    }
    let (mut means, mut cov) = kept.into_parts();
    let shift = (outcome - state.means[j]) / vmm;
    for (r, &i) in idx.iter().enumerate() {
        let ci = state.cov[(i, j)];
        means[r] += ci * shift;
        for (c, &k) in idx.iter().enumerate() {
            cov[(r, c)] -= ci * state.cov[(k, j)] / vmm;
        }
    }
    GaussianState::new(means, cov)
}

/// Measure-and-displace feedforward, taken unconditionally: equivalent to
/// the QND symplectic `target_quad += gain * source_quad` on the joint
/// state followed by tracing out the source mode.
pub fn feedforward_displace(
    state: &GaussianState,
    source_mode: usize,
    source_quad: Quadrature,
    gain: f64,
    target_mode: usize,
    target_quad: Quadrature,
) -> Result<GaussianState> {
    if source_mode == target_mode {
        return Err(Error::SameMode { mode: source_mode });
    }
    state.check_mode(source_mode)?;
    state.check_mode(target_mode)?;

    // Local 2-mode layout: source first, target second. Writing
    // `t += gain * s` stays symplectic once the conjugate of the source
    // absorbs the counter-term; that mode is traced out right after.
    let s_idx = source_quad.index(0);
    let t_idx = target_quad.index(1);
    let s_conj = source_quad.conjugate().index(0);
    let t_conj = target_quad.conjugate().index(1);
    let omega = symplectic_form(2);
    let mut m = DMatrix::identity(4, 4);
    m[(t_idx, s_idx)] = gain;
    m[(s_conj, t_conj)] = -gain * omega[(s_idx, s_conj)] / omega[(t_idx, t_conj)];
    let map = SymplecticMap::new(m, vec![source_mode, target_mode])?;
    let displaced = apply_symplectic(state, &map)?;
    let keep: Vec<usize> = (0..state.n_modes()).filter(|&m| m != source_mode).collect();
    partial_trace(&displaced, &keep)
}

/// Logarithmic negativity `max(0, -ln 2 nu_-)` of a two-mode covariance
/// matrix, from the smallest symplectic eigenvalue of the partial
/// transpose. The transpose is the sign flip of `p2`; rejects covariances
/// that fail the physicality check.
pub fn log_negativity(cov: &DMatrix<f64>) -> Result<f64> {
    if cov.nrows() != 4 || cov.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: cov.nrows(),
        });
    }
    let report = physicality_check(cov)?;
    if !report.pass {
        return Err(Error::NonPhysical {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let mut v = cov.clone();
    symmetrize(&mut v);
    // Partial transpose: flip the sign of p2.
    let flip = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
    let vt = &flip * v * &flip;

    let det = |a: f64, b: f64, c: f64, d: f64| a * d - b * c;
    let det1 = det(vt[(0, 0)], vt[(0, 1)], vt[(1, 0)], vt[(1, 1)]);
    let det2 = det(vt[(2, 2)], vt[(2, 3)], vt[(3, 2)], vt[(3, 3)]);
    let detc = det(vt[(0, 2)], vt[(0, 3)], vt[(1, 2)], vt[(1, 3)]);
    let sigma = det1 + det2 + 2.0 * detc;
    let det_v = vt.determinant();
    let disc = (sigma * sigma - 4.0 * det_v).max(0.0);
    let nu_minus_sq = 0.5 * (sigma - math::sqrt(disc));
    if nu_minus_sq <= 0.0 {
        // Physical two-mode covariances keep nu_-^2 positive; reaching this
        // means round-off at the physicality boundary, i.e. maximal E for
        // the given precision.
        return Err(Error::NonPhysical {
            min_eigenvalue: nu_minus_sq,
        });
    }
    Ok((-0.5 * math::ln(4.0 * nu_minus_sq)).max(0.0))
}

/// Report the minimum eigenvalue of `V + (i/2) Omega` and whether it clears
/// [`PHYSICALITY_TOL`].
pub fn physicality_check(cov: &DMatrix<f64>) -> Result<PhysicalityReport> {
    let dim = cov.nrows();
    if dim != cov.ncols() || dim == 0 || dim % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim + (dim % 2),
            got: dim,
        });
    }
    let min_eigenvalue = physicality_min_eigenvalue(cov);
    Ok(PhysicalityReport {
        min_eigenvalue,
        pass: min_eigenvalue >= PHYSICALITY_TOL,
    })
}
