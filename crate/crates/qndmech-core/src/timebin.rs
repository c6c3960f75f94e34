//! Time-bin discretisation of the travelling pulse: the independent
//! numerical oracle for every analytic transfer model.
//!
//! The pulse is cut into `N` bins of duration `dt = tau / N`. Each bin
//! mode enters cavity 1 together with the mechanical mode `m1`, is
//! reflected, passes the lossy link, drives cavity 2 and `m2`, and is
//! finally folded into a running accumulator that assembles the flat
//! temporal mode the homodyne detector sees. Because a bin never interacts
//! with anything after its own cavity-2 pass, the serial protocol
//! (pulse fully exits cavity 1, then enters cavity 2) can be walked bin by
//! bin with a single 6-mode joint state
//! `{m1, c1, m2, c2, bin, accumulator}`.
//!
//! Per bin the interaction is applied as an exact Gaussian channel on
//! (mechanics, cavity, bin): the linear system is integrated over the bin
//! with the bin's flat mode as the tracked input, and the intra-bin input
//! components orthogonal to it enter as exactly-calibrated added noise, so
//! every step is completely positive. With the rotating-wave approximation
//! the generator is time-independent and the channel is built once; with
//! the counter-rotating terms it is rebuilt per bin with the coefficients
//! frozen at the bin centre, which is the first-order scheme the
//! bin-doubling convergence control is for.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, Matrix2};

use crate::gaussian::{
    self, log_negativity, physicality_check, GaussianState, Quadrature, PHYSICALITY_TOL,
};
use crate::linalg::{apply_affine_on, expm_with_integral, symmetrize};
use crate::math;
use crate::protocol::{ProtocolParams, SimResult};
use crate::{Error, Result};

/// Per-bin integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Exact matrix exponential of the per-bin generator plus the exact
    /// orthogonal-input noise. The default.
    #[default]
    ExactExponential,
    /// First-order collision step; kept for step-halving cross-checks.
    FirstOrder,
}

/// Configuration of one time-bin run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: ProtocolParams,
    /// Number of time bins (at least 4).
    pub n_bins: usize,
    /// Keep the rotating-wave approximation (drop `2 omega_m` terms).
    pub rwa: bool,
    /// Couple the mechanics to their thermal baths. When off, `gamma` is
    /// ignored entirely, matching the analytic models.
    pub bath: bool,
    pub integrator: Integrator,
    /// Optional homodyne temporal-mode weights, one per bin; normalised
    /// internally. `None` means the flat mode.
    pub filter: Option<Vec<f64>>,
    /// Check physicality of the running state at every step instead of
    /// only periodically. On by default in debug builds for small runs.
    pub strict_checks: bool,
}

impl SimConfig {
    pub fn new(params: ProtocolParams) -> Self {
        Self {
            params,
            n_bins: 256,
            rwa: true,
            bath: false,
            integrator: Integrator::ExactExponential,
            filter: None,
            strict_checks: cfg!(debug_assertions),
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_bins < 4 {
            return Err(Error::InvalidParameter {
                name: "n_bins",
                value: self.n_bins as f64,
            });
        }
        if !self.rwa && !(self.params.omega_m > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega_m",
                value: self.params.omega_m,
            });
        }
        if let Some(f) = &self.filter {
            if f.len() != self.n_bins {
                return Err(Error::DimensionMismatch {
                    expected: self.n_bins,
                    got: f.len(),
                });
            }
            if f.iter().all(|&x| x == 0.0) {
                return Err(Error::EmptySelection);
            }
        }
        Ok(())
    }

    fn with_bins(&self, n_bins: usize) -> Self {
        let mut c = self.clone();
        if let Some(f) = &c.filter {
            let factor = n_bins / f.len();
            let mut resampled = Vec::with_capacity(n_bins);
            for &w in f {
                for _ in 0..factor {
                    resampled.push(w);
                }
            }
            c.filter = Some(resampled);
        }
        c.n_bins = n_bins;
        c
    }
}

// joint-state quadrature indices
const M1: [usize; 2] = [0, 1];
const C1: [usize; 2] = [2, 3];
const M2: [usize; 2] = [4, 5];
const C2: [usize; 2] = [6, 7];
const BIN: [usize; 2] = [8, 9];
const ACC: [usize; 2] = [10, 11];
const DIM: usize = 12;

/// Affine step on (mech, cavity, bin): `z -> A z + noise`.
struct BinChannel {
    a: DMatrix<f64>,
    n: DMatrix<f64>,
}

/// Generator of one cavity's RWA or frozen-coefficient dynamics on
/// `(q, p, X, Y)` plus its couplings to the input field and the bath.
struct Generator {
    f: DMatrix<f64>,
    /// input rows: `sqrt(2 kappa)` on the cavity quadratures
    l_u: DMatrix<f64>,
    /// bath rows: identity on the mechanical quadratures
    l_b: DMatrix<f64>,
}

fn cavity_generator(
    params: &ProtocolParams,
    second: bool,
    rwa: bool,
    damping: f64,
    t_mid: f64,
) -> Generator {
    let g = if second { params.g2 } else { params.g1 };
    let kappa = params.kappa;
    let mut f = DMatrix::zeros(4, 4);
    f[(0, 0)] = -0.5 * damping;
    f[(1, 1)] = -0.5 * damping;
    f[(2, 2)] = -kappa;
    f[(3, 3)] = -kappa;
    let (cos_m1, sin) = if rwa {
        (-1.0, 0.0)
    } else {
        let phase = 2.0 * params.omega_m * t_mid;
        (math::cos(phase) - 1.0, math::sin(phase))
    };
    if second {
        // dq = -g Y sin, dp = g Y (cos - 1), dX += g q (1 - cos) - g p sin
        f[(0, 3)] = -g * sin;
        f[(1, 3)] = g * cos_m1;
        f[(2, 0)] = -g * cos_m1;
        f[(2, 1)] = -g * sin;
    } else {
        // dq = g X (cos - 1), dp = g X sin, dY += g p (1 - cos) + g q sin
        f[(0, 2)] = g * cos_m1;
        f[(1, 2)] = g * sin;
        f[(3, 1)] = -g * cos_m1;
        f[(3, 0)] = g * sin;
    }
    let root_2k = math::sqrt(2.0 * kappa);
    let mut l_u = DMatrix::zeros(4, 2);
    l_u[(2, 0)] = root_2k;
    l_u[(3, 1)] = root_2k;
    let mut l_b = DMatrix::zeros(4, 2);
    l_b[(0, 0)] = 1.0;
    l_b[(1, 1)] = 1.0;
    Generator { f, l_u, l_b }
}

/// Exact per-bin channel: integrate the frozen linear system over the bin
/// with the flat bin mode as input and the reflected flat mode as output,
/// adding the orthogonal-component and bath noise integrals by composite
/// Simpson on an equally spaced grid (matrix exponentials by recurrence).
fn build_exact_channel(
    gen: &Generator,
    v_u: &Matrix2<f64>,
    v_b: &Matrix2<f64>,
    bath: bool,
    kappa: f64,
    dt: f64,
    panels: usize,
) -> BinChannel {
    let n_nodes = 2 * panels + 1;
    let h = dt / (n_nodes - 1) as f64;

    // e^{F t} and Phi(t) = int_0^t e^{F w} dw on the node grid, by the
    // recurrence Phi(t + h) = Phi(t) + e^{F t} Phi(h).
    let (step_e, step_phi) = expm_with_integral(&gen.f, h);
    let mut exps = Vec::with_capacity(n_nodes);
    let mut phis = Vec::with_capacity(n_nodes);
    exps.push(DMatrix::identity(4, 4));
    phis.push(DMatrix::zeros(4, 4));
    for j in 1..n_nodes {
        let phi_next = &phis[j - 1] + &exps[j - 1] * &step_phi;
        let e_next = &exps[j - 1] * &step_e;
        exps.push(e_next);
        phis.push(phi_next);
    }

    let root_dt = math::sqrt(dt);
    let c_sel = {
        let mut c = DMatrix::zeros(2, 4);
        c[(0, 2)] = math::sqrt(2.0 * kappa);
        c[(1, 3)] = math::sqrt(2.0 * kappa);
        c
    };

    let e_full = exps[n_nodes - 1].clone();
    let phi_full = phis[n_nodes - 1].clone();
    // W = int_0^dt Phi(t) dt by the same Simpson grid
    let mut w_int = DMatrix::zeros(4, 4);
    let simpson_w = |j: usize| -> f64 {
        if j == 0 || j == n_nodes - 1 {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    for (j, phi) in phis.iter().enumerate() {
        w_int += phi.scale(simpson_w(j) * h / 3.0);
    }

    let g_blk = &phi_full * &gen.l_u / root_dt;
    let h_blk = &c_sel * &phi_full / root_dt;
    let j_blk = (&c_sel * &w_int * &gen.l_u).scale(1.0 / dt) - DMatrix::identity(2, 2);

    // noise integrals: kernels at s use e^{F (dt - s)} and Phi(dt - s),
    // i.e. the stored node n_nodes - 1 - j
    let mut z_zz = DMatrix::zeros(4, 4);
    let mut z_zb = DMatrix::zeros(4, 2);
    let mut z_bb = DMatrix::zeros(2, 2);
    let v_u_full =
        DMatrix::from_row_slice(2, 2, &[v_u[(0, 0)], v_u[(0, 1)], v_u[(1, 0)], v_u[(1, 1)]]);
    let v_b_full =
        DMatrix::from_row_slice(2, 2, &[v_b[(0, 0)], v_b[(0, 1)], v_b[(1, 0)], v_b[(1, 1)]]);
    for j in 0..n_nodes {
        let wgt = simpson_w(j) * h / 3.0;
        let e_rem = &exps[n_nodes - 1 - j];
        let phi_rem = &phis[n_nodes - 1 - j];
        let m_u = e_rem * &gen.l_u;
        let k_u = (&c_sel * phi_rem * &gen.l_u).scale(1.0 / root_dt)
            - DMatrix::identity(2, 2).scale(1.0 / root_dt);
        z_zz += (&m_u * &v_u_full * m_u.transpose()).scale(wgt);
        z_zb += (&m_u * &v_u_full * k_u.transpose()).scale(wgt);
        z_bb += (&k_u * &v_u_full * k_u.transpose()).scale(wgt);
        if bath {
            let m_b = e_rem * &gen.l_b;
            let k_b = (&c_sel * phi_rem * &gen.l_b).scale(1.0 / root_dt);
            z_zz += (&m_b * &v_b_full * m_b.transpose()).scale(wgt);
            z_zb += (&m_b * &v_b_full * k_b.transpose()).scale(wgt);
            z_bb += (&k_b * &v_b_full * k_b.transpose()).scale(wgt);
        }
    }
    // subtract what the tracked flat mode already carries
    let n_zz = z_zz - &g_blk * &v_u_full * g_blk.transpose();
    let n_zb = z_zb - &g_blk * &v_u_full * j_blk.transpose();
    let n_bb = z_bb - &j_blk * &v_u_full * j_blk.transpose();

    let mut a = DMatrix::zeros(6, 6);
    a.view_mut((0, 0), (4, 4)).copy_from(&e_full);
    a.view_mut((0, 4), (4, 2)).copy_from(&g_blk);
    a.view_mut((4, 0), (2, 4)).copy_from(&h_blk);
    a.view_mut((4, 4), (2, 2)).copy_from(&j_blk);
    let mut n = DMatrix::zeros(6, 6);
    n.view_mut((0, 0), (4, 4)).copy_from(&n_zz);
    n.view_mut((0, 4), (4, 2)).copy_from(&n_zb);
    n.view_mut((4, 0), (2, 4)).copy_from(&n_zb.transpose());
    n.view_mut((4, 4), (2, 2)).copy_from(&n_bb);
    symmetrize(&mut n);

    lift_to_cp(BinChannel { a, n })
}

/// First-order collision step: linearised propagator, flat-mode coupling,
/// bath noise only.
fn build_first_order_channel(
    gen: &Generator,
    v_b: &Matrix2<f64>,
    bath: bool,
    kappa: f64,
    dt: f64,
) -> BinChannel {
    let root_dt = math::sqrt(dt);
    let mut a = DMatrix::zeros(6, 6);
    let e = DMatrix::identity(4, 4) + gen.f.scale(dt);
    a.view_mut((0, 0), (4, 4)).copy_from(&e);
    a.view_mut((0, 4), (4, 2))
        .copy_from(&gen.l_u.scale(root_dt));
    let mut c_sel = DMatrix::zeros(2, 4);
    c_sel[(0, 2)] = math::sqrt(2.0 * kappa);
    c_sel[(1, 3)] = math::sqrt(2.0 * kappa);
    a.view_mut((4, 0), (2, 4)).copy_from(&c_sel.scale(root_dt));
    a.view_mut((4, 4), (2, 2))
        .copy_from(&DMatrix::identity(2, 2).scale(kappa * dt - 1.0));
    let mut n = DMatrix::zeros(6, 6);
    if bath {
        let v_b_full =
            DMatrix::from_row_slice(2, 2, &[v_b[(0, 0)], v_b[(0, 1)], v_b[(1, 0)], v_b[(1, 1)]]);
        let nb = &gen.l_b * v_b_full * gen.l_b.transpose() * dt;
        n.view_mut((0, 0), (4, 4)).copy_from(&nb);
    }
    BinChannel { a, n }
}

/// Quadrature round-off can leave the built channel a hair short of
/// complete positivity; pad the added noise so every step is exactly CP
/// and physicality is preserved by construction.
fn lift_to_cp(ch: BinChannel) -> BinChannel {
    let probe = gaussian::GaussianChannel::new(ch.a.clone(), ch.n.clone())
        .expect("channel blocks are square");
    let defect = probe.cp_defect();
    if defect >= 0.0 {
        return ch;
    }
    let pad = -defect * (1.0 + 1e-3) + 1e-16;
    let n = ch.n + DMatrix::identity(6, 6).scale(pad);
    BinChannel { a: ch.a, n }
}

struct Engine {
    cfg: SimConfig,
    dt: f64,
    weights: Vec<f64>,
    v_u1: Matrix2<f64>,
    v_u2: Matrix2<f64>,
    v_b: Matrix2<f64>,
    damping: f64,
    ch1: BinChannel,
    ch2: BinChannel,
}

impl Engine {
    fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let p = &cfg.params;
        let n = cfg.n_bins;
        let dt = p.tau / n as f64;
        let s2 = p.squeezing * p.squeezing;
        let v_u1 = Matrix2::new(0.5 * s2, 0.0, 0.0, 0.5 / s2);
        // the cavity-1 output is an all-pass filter of its squeezed input,
        // so the link mixes the same per-mode variance with vacuum
        let v_u2 = v_u1.scale(p.eta) + Matrix2::identity().scale(0.5 * (1.0 - p.eta));
        let damping = if cfg.bath { p.gamma } else { 0.0 };
        let v_b = Matrix2::identity().scale(damping * (p.n_th + 0.5));

        // one-time construction affords a rich quadrature grid
        let panels = (((64.0 * p.kappa * dt) as usize) + 64).min(4096);
        let build = |second: bool, t_mid: f64| -> BinChannel {
            let gen = cavity_generator(p, second, cfg.rwa, damping, t_mid);
            match cfg.integrator {
                Integrator::ExactExponential => build_exact_channel(
                    &gen,
                    if second { &v_u2 } else { &v_u1 },
                    &v_b,
                    cfg.bath,
                    p.kappa,
                    dt,
                    panels,
                ),
                Integrator::FirstOrder => {
                    build_first_order_channel(&gen, &v_b, cfg.bath, p.kappa, dt)
                }
            }
        };
        let ch1 = build(false, 0.5 * dt);
        let ch2 = build(true, 0.5 * dt);

        let raw: Vec<f64> = match &cfg.filter {
            Some(f) => f.clone(),
            None => vec![1.0; n],
        };
        let norm: f64 = raw.iter().map(|&x| x * x * dt / p.tau).sum();
        let scale = 1.0 / math::sqrt(norm);
        let weights: Vec<f64> = raw
            .iter()
            .map(|&x| x * scale * math::sqrt(dt / p.tau))
            .collect();

        Ok(Self {
            cfg,
            dt,
            weights,
            v_u1,
            v_u2,
            v_b,
            damping,
            ch1,
            ch2,
        })
    }

    fn rebuild_for_bin(&mut self, k: usize) {
        // frozen-coefficient channels at the bin centre; only needed
        // beyond the RWA where the generator is time dependent. These bins
        // resolve 2 omega_m, so kappa dt is small and a lean quadrature
        // grid already integrates the kernels to round-off.
        let t_mid = (k as f64 + 0.5) * self.dt;
        let p = &self.cfg.params;
        let panels = (((8.0 * p.kappa * self.dt) as usize) + 16).min(512);
        let gen1 = cavity_generator(p, false, false, self.damping, t_mid);
        let gen2 = cavity_generator(p, true, false, self.damping, t_mid);
        match self.cfg.integrator {
            Integrator::ExactExponential => {
                self.ch1 = build_exact_channel(
                    &gen1,
                    &self.v_u1,
                    &self.v_b,
                    self.cfg.bath,
                    p.kappa,
                    self.dt,
                    panels,
                );
                self.ch2 = build_exact_channel(
                    &gen2,
                    &self.v_u2,
                    &self.v_b,
                    self.cfg.bath,
                    p.kappa,
                    self.dt,
                    panels,
                );
            }
            Integrator::FirstOrder => {
                self.ch1 =
                    build_first_order_channel(&gen1, &self.v_b, self.cfg.bath, p.kappa, self.dt);
                self.ch2 =
                    build_first_order_channel(&gen2, &self.v_b, self.cfg.bath, p.kappa, self.dt);
            }
        }
    }

    /// Walk the full protocol. `initial_mech` overrides the ground-state
    /// start of `(m1, m2)`; `input_mean` displaces the mean of the flat
    /// input mode's `(X, Y)`.
    fn run(
        &mut self,
        initial_mech: Option<&GaussianState>,
        input_mean: Option<(f64, f64)>,
    ) -> Result<SimResult> {
        let p = self.cfg.params.clone();
        let n = self.cfg.n_bins;
        let mut cov = DMatrix::zeros(DIM, DIM);
        let mut means = DVector::zeros(DIM);
        for m in [M1, C1, M2, C2, BIN] {
            cov[(m[0], m[0])] = 0.5;
            cov[(m[1], m[1])] = 0.5;
        }
        if let Some(init) = initial_mech {
            if init.n_modes() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: init.n_modes(),
                });
            }
            let map = [M1[0], M1[1], M2[0], M2[1]];
            for (a, &ia) in map.iter().enumerate() {
                means[ia] = init.means()[a];
                for (b, &ib) in map.iter().enumerate() {
                    cov[(ia, ib)] = init.cov()[(a, b)];
                }
            }
        }

        let idx1: Vec<usize> = [M1, C1, BIN].concat();
        let idx2: Vec<usize> = [M2, C2, BIN].concat();
        let loss_a = DMatrix::identity(2, 2).scale(math::sqrt(p.eta));
        let loss_n = DMatrix::identity(2, 2).scale(0.5 * (1.0 - p.eta));
        let fold_template = |w: f64| {
            let mut a = DMatrix::identity(4, 4);
            a[(0, 2)] = w;
            a[(1, 3)] = w;
            a
        };
        let fold_idx = [ACC[0], ACC[1], BIN[0], BIN[1]];

        let check_interval = if self.cfg.strict_checks {
            1
        } else {
            (n / 64).max(1)
        };

        let bin_mean = input_mean.map(|(dx, dy)| {
            (
                dx * math::sqrt(self.dt / p.tau),
                dy * math::sqrt(self.dt / p.tau),
            )
        });

        for k in 0..n {
            if !self.cfg.rwa {
                self.rebuild_for_bin(k);
            }
            // fresh squeezed bin
            for &i in &BIN {
                for j in 0..DIM {
                    cov[(i, j)] = 0.0;
                    cov[(j, i)] = 0.0;
                }
                means[i] = 0.0;
            }
            cov[(BIN[0], BIN[0])] = self.v_u1[(0, 0)];
            cov[(BIN[1], BIN[1])] = self.v_u1[(1, 1)];
            if let Some((mx, my)) = bin_mean {
                means[BIN[0]] = mx;
                means[BIN[1]] = my;
            }

            apply_affine_on(&mut cov, &mut means, &idx1, &self.ch1.a, Some(&self.ch1.n));
            apply_affine_on(&mut cov, &mut means, &BIN, &loss_a, Some(&loss_n));
            apply_affine_on(&mut cov, &mut means, &idx2, &self.ch2.a, Some(&self.ch2.n));
            let fold = fold_template(self.weights[k]);
            apply_affine_on(&mut cov, &mut means, &fold_idx, &fold, None);

            if k % 64 == 63 {
                symmetrize(&mut cov);
            }
            let exact = matches!(self.cfg.integrator, Integrator::ExactExponential);
            if exact && k % check_interval == 0 && cfg!(debug_assertions) {
                // the accumulator rows are a partial sum, not yet a mode;
                // check the five genuine modes only. The first-order
                // integrator is exempt: its symplectic defect is O(dt) by
                // construction and only its converged limit is physical.
                let sub = cov.view((0, 0), (10, 10)).into_owned();
                let report = physicality_check(&sub)?;
                if !report.pass {
                    return Err(Error::NonPhysicalStep {
                        step: k,
                        min_eigenvalue: report.min_eigenvalue,
                    });
                }
            }
        }

        // mode 1 stays in touch with its bath while the pulse drives the
        // second cavity; that exposure commutes with every pulse-2 step
        // and aggregates into one channel before the feedforward
        if self.cfg.bath {
            let d = math::exp(-0.5 * self.damping * p.tau);
            let a = DMatrix::identity(2, 2).scale(d);
            let nn = DMatrix::identity(2, 2).scale((1.0 - d * d) * (p.n_th + 0.5));
            apply_affine_on(&mut cov, &mut means, &M1, &a, Some(&nn));
        }

        symmetrize(&mut cov);
        // after the last fold the accumulator is a canonical mode
        let state = GaussianState::new(means, cov)?;
        let state =
            gaussian::feedforward_displace(&state, 5, Quadrature::Q, p.k_f, 0, Quadrature::Q)?;
        // modes now: m1, c1, m2, c2, bin
        let mut mech = gaussian::partial_trace(&state, &[0, 2])?;

        let mut report = mech.physicality();
        if report.min_eigenvalue < PHYSICALITY_TOL {
            let first_order_budget = 10.0 * p.kappa * self.dt;
            if matches!(self.cfg.integrator, Integrator::FirstOrder)
                && report.min_eigenvalue > -first_order_budget
            {
                // regularise within the scheme's known defect so the
                // entanglement of the converging sequence stays readable
                let pad = -report.min_eigenvalue * (1.0 + 1e-6);
                let cov_fixed = mech.cov() + DMatrix::identity(4, 4).scale(pad);
                mech = GaussianState::new(mech.means().clone(), cov_fixed)?;
                report = mech.physicality();
            } else {
                return Err(Error::NonPhysicalStep {
                    step: n,
                    min_eigenvalue: report.min_eigenvalue,
                });
            }
        }
        let ln = log_negativity(mech.cov())?;
        Ok(SimResult {
            mech_cov: mech.cov().clone(),
            ln,
            min_eigenvalue: report.min_eigenvalue,
            convergence_estimate: None,
            n_bins: Some(n),
            coefficients: Vec::new(),
        })
    }
}

/// Single run at the configured bin count, no refinement.
pub fn simulate_once(config: &SimConfig) -> Result<SimResult> {
    Engine::new(config.clone())?.run(None, None)
}

/// Run at `N` and `2N` bins; returns the finer result with
/// `convergence_estimate = |E(2N) - E(N)|`.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    let coarse = simulate_once(config)?;
    let fine_cfg = config.with_bins(config.n_bins * 2);
    let mut fine = simulate_once(&fine_cfg)?;
    fine.convergence_estimate = Some(math::abs(fine.ln - coarse.ln));
    Ok(fine)
}

/// Double the bin count until `|E(2N) - E(N)| <= tol` (or `max_bins` is
/// hit, which is an error carrying the last estimate).
pub fn simulate_converged(config: &SimConfig, tol: f64, max_bins: usize) -> Result<SimResult> {
    let mut n = config.n_bins;
    let mut last = simulate_once(&config.with_bins(n))?;
    while 2 * n <= max_bins {
        n *= 2;
        let mut fine = simulate_once(&config.with_bins(n))?;
        let estimate = math::abs(fine.ln - last.ln);
        fine.convergence_estimate = Some(estimate);
        if estimate <= tol {
            return Ok(fine);
        }
        last = fine;
    }
    Err(Error::NotConverged {
        estimate: last.convergence_estimate.unwrap_or(f64::INFINITY),
        n_bins: n,
    })
}

/// First-moment probe results: the mechanical transfer matrix plus the
/// responses to unit mean displacements of the flat input mode and of the
/// initial intracavity quadratures.
#[derive(Debug, Clone)]
pub struct FirstMoments {
    /// 4x4 response of the final `(q1, p1, q2, p2)` to their initial values.
    pub mech: DMatrix<f64>,
    /// 4x2 response to unit mean displacements of the physical (squeezed)
    /// flat input mode's `(X, Y)`. Transfer-model tables quote the same
    /// couplings against the normalised vacuum mode, i.e. larger by `S`
    /// in `X` and smaller by `S` in `Y`.
    pub input_flat: DMatrix<f64>,
    /// 4x4 response to the initial `(X1, Y1, X2, Y2)` cavity means.
    pub cavity: DMatrix<f64>,
}

/// Reconstruct the first-moment transfer structure by propagating unit
/// mean displacements; linearity makes each column one cheap (means-only)
/// run.
pub fn extract_first_moments(config: &SimConfig) -> Result<FirstMoments> {
    let mut engine = Engine::new(config.clone())?;
    let mut mech = DMatrix::zeros(4, 4);
    let mut input_flat = DMatrix::zeros(4, 2);
    let mut cavity = DMatrix::zeros(4, 4);

    let displaced_state = |idx: usize| -> GaussianState {
        let vac = GaussianState::vacuum(2).expect("two modes");
        let mut means = vac.means().clone();
        means[idx] = 1.0;
        GaussianState::new(means, vac.cov().clone()).expect("valid dimensions")
    };
    for col in 0..4 {
        let init = displaced_state(col);
        let m = engine.run_means(Some(&init), None, None)?;
        for row in 0..4 {
            mech[(row, col)] = m[row];
        }
    }
    for (col, dxy) in [(0usize, (1.0, 0.0)), (1, (0.0, 1.0))] {
        let m = engine.run_means(None, Some(dxy), None)?;
        for row in 0..4 {
            input_flat[(row, col)] = m[row];
        }
    }
    for col in 0..4 {
        let m = engine.run_means(None, None, Some(col))?;
        for row in 0..4 {
            cavity[(row, col)] = m[row];
        }
    }
    Ok(FirstMoments {
        mech,
        input_flat,
        cavity,
    })
}

impl Engine {
    /// Means-only walk of the protocol (noise never moves first moments).
    fn run_means(
        &mut self,
        initial_mech: Option<&GaussianState>,
        input_mean: Option<(f64, f64)>,
        cavity_displacement: Option<usize>,
    ) -> Result<[f64; 4]> {
        let p = self.cfg.params.clone();
        let n = self.cfg.n_bins;
        let mut means = DVector::zeros(DIM);
        if let Some(init) = initial_mech {
            let map = [M1[0], M1[1], M2[0], M2[1]];
            for (a, &ia) in map.iter().enumerate() {
                means[ia] = init.means()[a];
            }
        }
        if let Some(c) = cavity_displacement {
            let map = [C1[0], C1[1], C2[0], C2[1]];
            means[map[c]] = 1.0;
        }
        let idx1: Vec<usize> = [M1, C1, BIN].concat();
        let idx2: Vec<usize> = [M2, C2, BIN].concat();
        let loss = math::sqrt(p.eta);
        let bin_mean = input_mean.map(|(dx, dy)| {
            (
                dx * math::sqrt(self.dt / p.tau),
                dy * math::sqrt(self.dt / p.tau),
            )
        });

        let apply_means = |means: &mut DVector<f64>, idx: &[usize], a: &DMatrix<f64>| {
            let mut v = DVector::zeros(idx.len());
            for (r, &i) in idx.iter().enumerate() {
                v[r] = means[i];
            }
            let out = a * v;
            for (r, &i) in idx.iter().enumerate() {
                means[i] = out[r];
            }
        };

        for k in 0..n {
            if !self.cfg.rwa {
                self.rebuild_for_bin(k);
            }
            means[BIN[0]] = 0.0;
            means[BIN[1]] = 0.0;
            if let Some((mx, my)) = bin_mean {
                means[BIN[0]] = mx;
                means[BIN[1]] = my;
            }
            apply_means(&mut means, &idx1, &self.ch1.a);
            means[BIN[0]] *= loss;
            means[BIN[1]] *= loss;
            apply_means(&mut means, &idx2, &self.ch2.a);
            means[ACC[0]] += self.weights[k] * means[BIN[0]];
            means[ACC[1]] += self.weights[k] * means[BIN[1]];
        }
        if self.cfg.bath {
            let d = math::exp(-0.5 * self.damping * p.tau);
            means[M1[0]] *= d;
            means[M1[1]] *= d;
        }
        means[M1[0]] += p.k_f * means[ACC[0]];
        Ok([means[M1[0]], means[M1[1]], means[M2[0]], means[M2[1]]])
    }
}
