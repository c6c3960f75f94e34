//! Entanglement maximisation under a ceiling on the coupling rate.
//!
//! The search runs over `(tau, K1, K2, K_f, S)` with the hardware
//! (`kappa`, `gamma`, `omega_m`, `n_th`, `eta`) held fixed and the
//! couplings constrained by `g_i = K_i sqrt(kappa / 2 tau) <= g_max`.
//! Internally every point lives in the unit cube: `tau` on a log scale,
//! the gains as fractions of the ceiling value `K_max(tau)` (so the
//! constraint surface, where the optima sit, is the `fraction = 1` face),
//! the feedforward as a ratio to `K1`, and the squeezing in decibels.
//! A deterministic Latin-hypercube seeding pass is refined by Nelder-Mead
//! from the best seeds; points outside the cube evaluate to `-inf`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::protocol::{ln_from_vacuum, transfer, BathMode, ModelKind, ProtocolParams};
use crate::{Error, Result};

const DIM: usize = 5;

/// Search domain and fixed hardware for the optimiser.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    /// Hardware template: `kappa`, `gamma`, `omega_m`, `n_th`, `eta` are
    /// used; the protocol fields are overwritten by the search point.
    pub base: ProtocolParams,
    pub model: ModelKind,
    pub bath: BathMode,
    /// Ceiling on both enhanced couplings, in units of `kappa`.
    pub g_max_over_kappa: f64,
    /// Pulse-duration bounds in seconds, searched on a log scale.
    pub tau_bounds: (f64, f64),
    /// Feedforward bounds as a ratio `K_f / K1`.
    pub k_f_ratio_bounds: (f64, f64),
    /// Squeezing bounds in decibels (amplitude convention, `20 log10 S`).
    pub squeezing_db_bounds: (f64, f64),
    /// PRNG seed for the Latin-hypercube phase.
    pub seed: u64,
    /// Number of Latin-hypercube seeds.
    pub n_seeds: usize,
    /// How many of the best seeds get simplex refinement.
    pub n_refine: usize,
}

impl SearchSpace {
    pub fn new(base: ProtocolParams, model: ModelKind, g_max_over_kappa: f64) -> Self {
        let tau = base.tau;
        Self {
            base,
            model,
            bath: BathMode::Off,
            g_max_over_kappa,
            tau_bounds: (0.01 * tau, 100.0 * tau),
            k_f_ratio_bounds: (0.0, 2.0),
            squeezing_db_bounds: (0.0, 12.7),
            seed: 1,
            n_seeds: 96,
            n_refine: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.g_max_over_kappa >= 0.0) || !self.g_max_over_kappa.is_finite() {
            return Err(Error::InvalidParameter {
                name: "g_max_over_kappa",
                value: self.g_max_over_kappa,
            });
        }
        let ordered = |name: &'static str, (lo, hi): (f64, f64), positive: bool| {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() || (positive && !(lo > 0.0)) {
                return Err(Error::InvalidParameter { name, value: lo });
            }
            Ok(())
        };
        ordered("tau_bounds", self.tau_bounds, true)?;
        ordered("k_f_ratio_bounds", self.k_f_ratio_bounds, false)?;
        ordered("squeezing_db_bounds", self.squeezing_db_bounds, false)?;
        if self.n_seeds == 0 || self.n_refine == 0 {
            return Err(Error::InvalidParameter {
                name: "n_seeds",
                value: self.n_seeds as f64,
            });
        }
        Ok(())
    }

    /// Gain ceiling at a given pulse duration.
    pub fn k_max(&self, tau: f64) -> f64 {
        self.g_max_over_kappa * self.base.kappa * math::sqrt(2.0 * tau / self.base.kappa)
    }

    /// Map a unit-cube point to protocol parameters.
    pub fn params_at(&self, u: &[f64; DIM]) -> ProtocolParams {
        let (t_lo, t_hi) = self.tau_bounds;
        let tau = math::exp(math::ln(t_lo) + u[0] * (math::ln(t_hi) - math::ln(t_lo)));
        let k_max = self.k_max(tau);
        let k1 = u[1] * k_max;
        let k2 = u[2] * k_max;
        let (r_lo, r_hi) = self.k_f_ratio_bounds;
        let ratio = r_lo + u[3] * (r_hi - r_lo);
        let (s_lo, s_hi) = self.squeezing_db_bounds;
        let db = s_lo + u[4] * (s_hi - s_lo);
        let mut p = self.base.clone();
        p.tau = tau;
        let scale = math::sqrt(p.kappa / (2.0 * tau));
        p.g1 = k1 * scale;
        p.g2 = k2 * scale;
        p.k_f = ratio * k1;
        p.squeezing = math::powf(10.0, db / 20.0);
        p
    }

    fn in_cube(u: &[f64; DIM]) -> bool {
        u.iter().all(|&x| (0.0..=1.0).contains(&x))
    }

    fn objective(&self, u: &[f64; DIM]) -> f64 {
        if !Self::in_cube(u) {
            return f64::NEG_INFINITY;
        }
        let p = self.params_at(u);
        match transfer(self.model, self.bath, &p).and_then(|m| ln_from_vacuum(&m)) {
            Ok(e) => e,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// A search point in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimPoint {
    pub tau: f64,
    pub k1: f64,
    pub k2: f64,
    pub k_f: f64,
    pub squeezing: f64,
}

impl OptimPoint {
    fn from_params(p: &ProtocolParams) -> Self {
        Self {
            tau: p.tau,
            k1: p.k1(),
            k2: p.k2(),
            k_f: p.k_f,
            squeezing: p.squeezing,
        }
    }
}

/// Outcome of an optimisation run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best: OptimPoint,
    pub best_unit: [f64; DIM],
    pub best_ln: f64,
    pub evaluations: usize,
    /// Every evaluated point with its objective, in evaluation order.
    pub trace: Vec<(OptimPoint, f64)>,
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Deterministic Latin-hypercube sample of the unit cube.
fn latin_hypercube(n: usize, rng: &mut SplitMix64) -> Vec<[f64; DIM]> {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(DIM);
    for _ in 0..DIM {
        let mut strata: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            strata.swap(i, j);
        }
        let col: Vec<f64> = strata
            .iter()
            .map(|&s| (s as f64 + rng.next_f64()) / n as f64)
            .collect();
        columns.push(col);
    }
    (0..n)
        .map(|i| {
            let mut u = [0.0; DIM];
            for d in 0..DIM {
                u[d] = columns[d][i];
            }
            u
        })
        .collect()
}

/// Maximise the entanglement over the search space.
pub fn optimize(space: &SearchSpace) -> Result<OptimizationResult> {
    optimize_seeded(space, &[])
}

/// Like [`optimize`], with extra starting points (in unit coordinates)
/// injected into the seeding phase; used to nest feasible sets across a
/// ladder of coupling ceilings.
pub fn optimize_seeded(
    space: &SearchSpace,
    extra_seeds: &[[f64; DIM]],
) -> Result<OptimizationResult> {
    space.validate()?;
    let mut rng = SplitMix64(space.seed ^ 0xA076_1D64_78BD_642F);
    let mut evaluations = 0usize;
    let mut trace: Vec<(OptimPoint, f64)> = Vec::new();
    let mut eval = |u: &[f64; DIM], trace: &mut Vec<(OptimPoint, f64)>| -> f64 {
        evaluations += 1;
        let value = space.objective(u);
        trace.push((OptimPoint::from_params(&space.params_at(u)), value));
        value
    };

    // seeding: Latin hypercube, a boundary-anchored corner, callers' seeds
    let mut seeds = latin_hypercube(space.n_seeds, &mut rng);
    // the constraint face with maximal gains, long pulse, cancellation
    // feedforward and maximal squeezing is where the lossless optimum
    // lives; anchor it explicitly
    let (r_lo, r_hi) = space.k_f_ratio_bounds;
    let anchor_ratio = if r_hi > r_lo {
        ((1.0 / math::sqrt(space.base.eta) - r_lo) / (r_hi - r_lo)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    seeds.push([1.0, 1.0, 1.0, anchor_ratio, 1.0]);
    seeds.extend_from_slice(extra_seeds);

    let mut scored: Vec<([f64; DIM], f64)> = seeds
        .iter()
        .map(|u| {
            let v = eval(u, &mut trace);
            (*u, v)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
    if scored.iter().all(|(_, v)| *v == f64::NEG_INFINITY) {
        return Err(Error::Infeasible);
    }

    let mut best_u = scored[0].0;
    let mut best_v = scored[0].1;
    for (start, _) in scored.iter().take(space.n_refine) {
        let (u, v) = nelder_mead(
            |u| {
                evaluations += 1;
                let value = space.objective(u);
                trace.push((OptimPoint::from_params(&space.params_at(u)), value));
                value
            },
            *start,
        );
        if v > best_v {
            best_v = v;
            best_u = u;
        }
    }

    // reproducibility contract: the reported optimum re-evaluates to the
    // reported value
    let recheck = space.objective(&best_u);
    debug_assert!((recheck - best_v).abs() <= 1e-9 * (1.0 + best_v.abs()));

    Ok(OptimizationResult {
        best: OptimPoint::from_params(&space.params_at(&best_u)),
        best_unit: best_u,
        best_ln: recheck,
        evaluations,
        trace,
    })
}

/// Compact Nelder-Mead maximiser on the unit cube (objective returns
/// `-inf` outside, which the contraction steps recover from).
fn nelder_mead<F: FnMut(&[f64; DIM]) -> f64>(mut f: F, start: [f64; DIM]) -> ([f64; DIM], f64) {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;
    const MAX_ITERS: usize = 600;
    const F_TOL: f64 = 1e-13;
    const X_TOL: f64 = 1e-10;

    let mut simplex: Vec<([f64; DIM], f64)> = Vec::with_capacity(DIM + 1);
    let v0 = f(&start);
    simplex.push((start, v0));
    for d in 0..DIM {
        let mut x = start;
        let step = if x[d] + 0.08 <= 1.0 { 0.08 } else { -0.08 };
        x[d] += step;
        let v = f(&x);
        simplex.push((x, v));
    }

    for _ in 0..MAX_ITERS {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
        let best = simplex[0];
        let worst = simplex[DIM];
        let second_worst = simplex[DIM - 1];

        let spread_f = best.1 - worst.1;
        let spread_x = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(best.0.iter())
                    .map(|(a, b)| math::abs(a - b))
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if (spread_f.abs() <= F_TOL || !spread_f.is_finite()) && spread_x <= X_TOL {
            break;
        }

        let mut centroid = [0.0; DIM];
        for (x, _) in simplex.iter().take(DIM) {
            for d in 0..DIM {
                centroid[d] += x[d] / DIM as f64;
            }
        }
        let blend = |a: f64, from: &[f64; DIM], to: &[f64; DIM]| {
            let mut x = [0.0; DIM];
            for d in 0..DIM {
                x[d] = from[d] + a * (from[d] - to[d]);
            }
            x
        };

        let reflected = blend(ALPHA, &centroid, &worst.0);
        let v_r = f(&reflected);
        if v_r > best.1 {
            let expanded = blend(GAMMA, &centroid, &worst.0);
            let v_e = f(&expanded);
            simplex[DIM] = if v_e > v_r {
                (expanded, v_e)
            } else {
                (reflected, v_r)
            };
            continue;
        }
        if v_r > second_worst.1 {
            simplex[DIM] = (reflected, v_r);
            continue;
        }
        let contracted = blend(-RHO, &centroid, &worst.0);
        let v_c = f(&contracted);
        if v_c > worst.1 {
            simplex[DIM] = (contracted, v_c);
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=DIM {
            let mut x = [0.0; DIM];
            for d in 0..DIM {
                x[d] = best.0[d] + SIGMA * (simplex[i].0[d] - best.0[d]);
            }
            let v = f(&x);
            simplex[i] = (x, v);
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
    simplex[0]
}

/// One row of a sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: OptimPoint,
    pub ln: Option<f64>,
}

/// Axis values for a rectangular sweep. `k_f` either tracks the
/// loss-compensated cancellation gain or takes explicit values.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub tau: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub squeezing: Vec<f64>,
    pub k_f: KfRule,
}

#[derive(Debug, Clone)]
pub enum KfRule {
    /// `K_f = K1 / sqrt(eta)`.
    Cancellation,
    Fixed(Vec<f64>),
}

const GRID_LIMIT: u64 = 10_000_000;

/// Dense evaluation over the grid, row-major in the order
/// `tau, k1, k2, squeezing, k_f`. Rows whose couplings exceed the ceiling
/// carry no value.
pub fn sweep(space: &SearchSpace, grid: &GridSpec) -> Result<Vec<SweepRow>> {
    space.validate()?;
    let kf_len = match &grid.k_f {
        KfRule::Cancellation => 1,
        KfRule::Fixed(v) => v.len(),
    };
    let points = [
        grid.tau.len(),
        grid.k1.len(),
        grid.k2.len(),
        grid.squeezing.len(),
        kf_len,
    ]
    .iter()
    .map(|&n| n as u64)
    .product::<u64>();
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    if points == 0 {
        return Err(Error::EmptySelection);
    }

    let mut rows = Vec::with_capacity(points as usize);
    for &tau in &grid.tau {
        for &k1 in &grid.k1 {
            for &k2 in &grid.k2 {
                for &s in &grid.squeezing {
                    let kf_values: Vec<f64> = match &grid.k_f {
                        KfRule::Cancellation => vec![k1 / math::sqrt(space.base.eta)],
                        KfRule::Fixed(v) => v.clone(),
                    };
                    for k_f in kf_values {
                        let mut p = space.base.clone();
                        p.tau = tau;
                        let scale = math::sqrt(p.kappa / (2.0 * tau));
                        p.g1 = k1 * scale;
                        p.g2 = k2 * scale;
                        p.k_f = k_f;
                        p.squeezing = s;
                        let point = OptimPoint::from_params(&p);
                        let ceiling = space.g_max_over_kappa * space.base.kappa;
                        let feasible =
                            p.g1 <= ceiling * (1.0 + 1e-12) && p.g2 <= ceiling * (1.0 + 1e-12);
                        let ln = if feasible {
                            transfer(space.model, space.bath, &p)
                                .and_then(|m| ln_from_vacuum(&m))
                                .ok()
                        } else {
                            None
                        };
                        rows.push(SweepRow { point, ln });
                    }
                }
            }
        }
    }
    Ok(rows)
}
