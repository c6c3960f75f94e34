//! Transfer model with the counter-rotating terms kept.
//!
//! In the rotating frame the optomechanical coupling retains coefficients
//! oscillating at `2 omega_m`; the mechanical quadratures are no longer
//! conserved during their own pulse and pick up back-action from the
//! intracavity field. The cascade (cavity 1 -> lossless link -> cavity 2
//! -> flat-mode homodyne -> feedforward) is a single time-varying linear
//! system driven by white noise, so the final first moments and every
//! covariance entry are integrals of its impulse-response kernels. The
//! kernels come from one backward (adjoint) sweep per final quadrature and
//! the noise integrals from composite Simpson quadrature on the same grid,
//! with a step-halving error estimate.

use alloc::vec;

use nalgebra::DMatrix;

use super::{Coefficient, NoiseSource, ProtocolParams, TransferModel};
use crate::gaussian::Quadrature;
use crate::math;
use crate::{Error, Result};

const N_STATE: usize = 9;
const N_OUT: usize = 4;

// state layout of the cascaded system
const Q1: usize = 0;
const P1: usize = 1;
const X1: usize = 2;
const Y1: usize = 3;
const Q2: usize = 4;
const P2: usize = 5;
const X2: usize = 6;
const Y2: usize = 7;
const ACC: usize = 8;

/// Resolution and tolerance knobs for the kernel integration.
#[derive(Debug, Clone)]
pub struct NonRwaOptions {
    /// Integration steps per `2 omega_m` oscillation period.
    pub steps_per_period: usize,
    /// Lower bound on the total number of steps.
    pub min_steps: usize,
    /// Upper bound on the total number of steps.
    pub max_steps: usize,
    /// Relative tolerance on the step-halving error estimate of the
    /// model's entries.
    pub rel_tol: f64,
    /// Replace the oscillating coefficients by their rotating-frame
    /// averages. The result must then coincide with the closed-form
    /// intracavity solution; exposed for cross-validation.
    pub rwa_average: bool,
}

impl Default for NonRwaOptions {
    fn default() -> Self {
        Self {
            steps_per_period: 48,
            min_steps: 4_000,
            max_steps: 8_000_000,
            rel_tol: 1e-8,
            rwa_average: false,
        }
    }
}

/// `I(s) = integral_s^tau exp(-kappa t) sin(2 omega_m t) dt` in closed
/// form; the back-action measure of the counter-rotating terms.
pub fn closed_form_sine_kernel(kappa: f64, omega_m: f64, tau: f64, s: f64) -> f64 {
    let w2 = 2.0 * omega_m;
    let denom = kappa * kappa + w2 * w2;
    let upper = math::exp(-kappa * tau) * (kappa * math::sin(w2 * tau) + w2 * math::cos(w2 * tau));
    let lower = math::exp(-kappa * s) * (kappa * math::sin(w2 * s) + w2 * math::cos(w2 * s));
    (lower - upper) / denom
}

struct Cascade {
    kappa: f64,
    g1: f64,
    g2: f64,
    omega2: f64,
    root_2k: f64,
    inv_root_tau: f64,
    rwa_average: bool,
}

impl Cascade {
    /// `out = A(s)^T mu` for the four adjoint vectors at once.
    fn apply_transposed(&self, s: f64, mu: &[[f64; N_OUT]; N_STATE]) -> [[f64; N_OUT]; N_STATE] {
        let (cos_m1, sin) = if self.rwa_average {
            (-1.0, 0.0)
        } else {
            (math::cos(self.omega2 * s) - 1.0, math::sin(self.omega2 * s))
        };
        let k = self.kappa;
        let mut out = [[0.0; N_OUT]; N_STATE];
        for c in 0..N_OUT {
            out[Q1][c] = self.g1 * sin * mu[Y1][c];
            out[P1][c] = -self.g1 * cos_m1 * mu[Y1][c];
            out[X1][c] = self.g1 * cos_m1 * mu[Q1][c] + self.g1 * sin * mu[P1][c] - k * mu[X1][c]
                + 2.0 * k * mu[X2][c]
                - self.root_2k * self.inv_root_tau * mu[ACC][c];
            out[Y1][c] = -k * mu[Y1][c] + 2.0 * k * mu[Y2][c];
            out[Q2][c] = -self.g2 * cos_m1 * mu[X2][c];
            out[P2][c] = -self.g2 * sin * mu[X2][c];
            out[X2][c] = -k * mu[X2][c] + self.root_2k * self.inv_root_tau * mu[ACC][c];
            out[Y2][c] = -self.g2 * sin * mu[Q2][c] + self.g2 * cos_m1 * mu[P2][c] - k * mu[Y2][c];
            // the accumulator feeds nothing back
        }
        out
    }

    /// Input kernels `f = B^T lambda`: response of each output to a white
    /// noise impulse in `(X_in, Y_in)` at local pulse time `s`.
    fn input_kernels(&self, lambda: &[[f64; N_OUT]; N_STATE]) -> [[f64; 2]; N_OUT] {
        let mut f = [[0.0; 2]; N_OUT];
        for c in 0..N_OUT {
            f[c][0] =
                self.root_2k * (lambda[X1][c] - lambda[X2][c]) + self.inv_root_tau * lambda[ACC][c];
            f[c][1] = self.root_2k * (lambda[Y1][c] - lambda[Y2][c]);
        }
        f
    }
}

fn axpy(y: &mut [[f64; N_OUT]; N_STATE], a: f64, x: &[[f64; N_OUT]; N_STATE]) {
    for i in 0..N_STATE {
        for c in 0..N_OUT {
            y[i][c] += a * x[i][c];
        }
    }
}

/// One full backward sweep at a fixed step count. Returns the model.
fn solve(params: &ProtocolParams, n_steps: usize, rwa_average: bool) -> TransferModel {
    let tau = params.tau;
    let cascade = Cascade {
        kappa: params.kappa,
        g1: params.g1,
        g2: params.g2,
        omega2: 2.0 * params.omega_m,
        root_2k: math::sqrt(2.0 * params.kappa),
        inv_root_tau: 1.0 / math::sqrt(tau),
        rwa_average,
    };
    let h = tau / n_steps as f64;

    // terminal adjoint vectors: q1 + K_f * acc, p1, q2, p2
    let mut mu = [[0.0; N_OUT]; N_STATE];
    mu[Q1][0] = 1.0;
    mu[ACC][0] = params.k_f;
    mu[P1][1] = 1.0;
    mu[Q2][2] = 1.0;
    mu[P2][3] = 1.0;

    let v_x = 0.5 * params.squeezing * params.squeezing;
    let v_y = 0.5 / (params.squeezing * params.squeezing);

    // Simpson accumulation of f V_u f^T over the pulse
    let mut noise = [[0.0f64; N_OUT]; N_OUT];
    let add_node = |weight: f64, f: &[[f64; 2]; N_OUT], acc: &mut [[f64; N_OUT]; N_OUT]| {
        for i in 0..N_OUT {
            for j in i..N_OUT {
                acc[i][j] += weight * (v_x * f[i][0] * f[j][0] + v_y * f[i][1] * f[j][1]);
            }
        }
    };

    let simpson_w = |j: usize| -> f64 {
        if j == 0 || j == n_steps {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };

    add_node(
        simpson_w(0) * h / 3.0,
        &cascade.input_kernels(&mu),
        &mut noise,
    );
    for j in 0..n_steps {
        // march mu(r) with r = tau - s from r_j to r_{j+1}
        let r = j as f64 * h;
        let s0 = tau - r;
        let k1 = cascade.apply_transposed(s0, &mu);
        let mut mu2 = mu;
        axpy(&mut mu2, 0.5 * h, &k1);
        let k2 = cascade.apply_transposed(s0 - 0.5 * h, &mu2);
        let mut mu3 = mu;
        axpy(&mut mu3, 0.5 * h, &k2);
        let k3 = cascade.apply_transposed(s0 - 0.5 * h, &mu3);
        let mut mu4 = mu;
        axpy(&mut mu4, h, &k3);
        let k4 = cascade.apply_transposed(s0 - h, &mu4);
        axpy(&mut mu, h / 6.0, &k1);
        axpy(&mut mu, h / 3.0, &k2);
        axpy(&mut mu, h / 3.0, &k3);
        axpy(&mut mu, h / 6.0, &k4);
        add_node(
            simpson_w(j + 1) * h / 3.0,
            &cascade.input_kernels(&mu),
            &mut noise,
        );
    }

    // mu now holds lambda(0): initial-condition coefficients
    let mut a = DMatrix::zeros(4, 4);
    for (col, &state) in [Q1, P1, Q2, P2].iter().enumerate() {
        for out in 0..N_OUT {
            a[(out, col)] = mu[state][out];
        }
    }
    let mut n = DMatrix::zeros(4, 4);
    for i in 0..N_OUT {
        for j in i..N_OUT {
            let mut cav = 0.0;
            for &c in &[X1, Y1, X2, Y2] {
                cav += 0.5 * mu[c][i] * mu[c][j];
            }
            n[(i, j)] = noise[i][j] + cav;
            n[(j, i)] = n[(i, j)];
        }
    }

    let coefficients = vec![
        Coefficient {
            source: NoiseSource::CavityX1,
            mode: 0,
            quad: Quadrature::Q,
            value: mu[X1][0],
        },
        Coefficient {
            source: NoiseSource::CavityX1,
            mode: 0,
            quad: Quadrature::P,
            value: mu[X1][1],
        },
        Coefficient {
            source: NoiseSource::CavityY1,
            mode: 1,
            quad: Quadrature::P,
            value: mu[Y1][3],
        },
        Coefficient {
            source: NoiseSource::CavityX2,
            mode: 0,
            quad: Quadrature::Q,
            value: mu[X2][0],
        },
        Coefficient {
            source: NoiseSource::CavityY2,
            mode: 1,
            quad: Quadrature::P,
            value: mu[Y2][3],
        },
    ];

    TransferModel { a, n, coefficients }
}

/// Beyond-RWA transfer with default resolution.
pub fn nonrwa_transfer(params: &ProtocolParams) -> Result<TransferModel> {
    nonrwa_transfer_with(params, &NonRwaOptions::default())
}

/// Beyond-RWA transfer. Thermal environments and intercavity loss are out
/// of this model's scope: requires `eta = 1` and ignores `gamma`/`n_th`.
pub fn nonrwa_transfer_with(
    params: &ProtocolParams,
    options: &NonRwaOptions,
) -> Result<TransferModel> {
    params.validate()?;
    if !(params.omega_m > 0.0) && !options.rwa_average {
        return Err(Error::InvalidParameter {
            name: "omega_m",
            value: params.omega_m,
        });
    }
    if params.eta != 1.0 {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: params.eta,
        });
    }

    let periods = params.omega_m * params.tau / core::f64::consts::PI;
    let wanted = (periods * options.steps_per_period as f64) as usize;
    let stiff = (8.0 * params.kappa * params.tau) as usize;
    // multiple of four so the half-resolution check also lands on an even
    // Simpson grid
    let mut n_steps = wanted
        .max(stiff)
        .max(options.min_steps)
        .min(options.max_steps);
    n_steps = (n_steps + 3) / 4 * 4;

    let fine = solve(params, n_steps, options.rwa_average);
    let coarse = solve(params, n_steps / 2, options.rwa_average);
    let scale = fine
        .a
        .iter()
        .chain(fine.n.iter())
        .fold(0.0f64, |m, &x| m.max(math::abs(x)))
        .max(1.0);
    // Both the adjoint sweep and the Simpson accumulation are fourth
    // order, so the halved-step answer extrapolates: the blended result
    // carries an error of about |fine - coarse| / 15.
    let estimate = fine.sup_distance(&coarse) / (15.0 * scale);
    if estimate > options.rel_tol {
        return Err(Error::QuadratureNotConverged { estimate });
    }
    let mut a = fine.a.scale(16.0 / 15.0) - coarse.a.scale(1.0 / 15.0);
    let mut n = fine.n.scale(16.0 / 15.0) - coarse.n.scale(1.0 / 15.0);
    for x in a.iter_mut().chain(n.iter_mut()) {
        if math::abs(*x) < 1e-300 {
            *x = 0.0;
        }
    }
    crate::linalg::symmetrize(&mut n);
    Ok(TransferModel {
        a,
        n,
        coefficients: fine.coefficients,
    })
}
