//! Full intracavity solution in the rotating frame: the cavity fields keep
//! their exponential memory instead of slaving to the inputs, so the
//! transfer coefficients pick up `exp(-kappa tau)` corrections and the
//! mediator noise acquires non-flat temporal kernels.

use alloc::vec;
use nalgebra::DMatrix;

use super::{apply_bath, BathMode, Coefficient, NoiseSource, ProtocolParams, TransferModel};
use crate::gaussian::Quadrature;
use crate::math;
use crate::{Error, Result};

/// A noise kernel over the scaled time-to-go `x = kappa (tau - u)`,
/// expressed as a sum of `c * x^m * exp(-a x)` terms with integer `m` and
/// `a`. Squares and products of the protocol kernels stay in this family,
/// so every variance integral is exact.
#[derive(Debug, Clone, Default)]
pub(crate) struct Kernel {
    terms: vec::Vec<(f64, u32, u32)>,
}

impl Kernel {
    pub(crate) fn new(terms: vec::Vec<(f64, u32, u32)>) -> Self {
        Self { terms }
    }

    /// `(1/T) * integral_0^T k1(x) k2(x) dx`, the variance-normalised inner
    /// product of two kernels over a pulse of scaled duration `T`.
    pub(crate) fn dot(&self, other: &Self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(c1, m1, a1) in &self.terms {
            for &(c2, m2, a2) in &other.terms {
                acc += c1 * c2 * pow_exp_integral(m1 + m2, a1 + a2, t);
            }
        }
        acc / t
    }

    /// Flat-mode projection `(1/T) * integral_0^T k(x) dx`: the response to
    /// a unit mean displacement of the flat input mode.
    pub(crate) fn flat_projection(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(c, m, a) in &self.terms {
            acc += c * pow_exp_integral(m, a, t);
        }
        acc / t
    }
}

/// `integral_0^T x^m exp(-a x) dx` for `m <= 2`.
fn pow_exp_integral(m: u32, a: u32, t: f64) -> f64 {
    if a == 0 {
        return match m {
            0 => t,
            1 => t * t / 2.0,
            2 => t * t * t / 3.0,
            _ => unreachable!("kernel powers stay at or below two"),
        };
    }
    let af = a as f64;
    let e = math::exp(-af * t);
    match m {
        0 => (1.0 - e) / af,
        1 => (1.0 - (1.0 + af * t) * e) / (af * af),
        2 => (2.0 - (af * af * t * t + 2.0 * af * t + 2.0) * e) / (af * af * af),
        _ => unreachable!("kernel powers stay at or below two"),
    }
}

/// Transfer model keeping the intracavity fields. Exact in the rotating
/// frame for arbitrary `kappa tau`; reduces to [`super::adiabatic_transfer`]
/// as `kappa tau -> inf`. The lossy channel inserts `sqrt(eta)` on every
/// cavity-1-to-cavity-2 path and admixes vacuum, exactly as the adiabatic
/// solution does.
pub fn full_cavity_transfer(params: &ProtocolParams, bath: BathMode) -> Result<TransferModel> {
    params.validate()?;
    let t = params.kappa * params.tau;
    if t < 1e-6 {
        return Err(Error::InvalidParameter {
            name: "kappa*tau",
            value: t,
        });
    }
    let (k1, k2, k_f) = (params.k1(), params.k2(), params.k_f);
    let s = params.squeezing;
    let eta = params.eta;
    let rt_eta = math::sqrt(eta);
    let rt_loss = math::sqrt(1.0 - eta);
    let et = math::exp(-t);
    let kappa = params.kappa;
    let (g1, g2, g_f) = (params.g1, params.g2, params.g_f());

    let mut a = DMatrix::identity(4, 4);
    a[(0, 2)] = k2 * k_f * (1.0 - (1.0 - et) / t);
    a[(3, 1)] = -k1 * k2 * rt_eta * (1.0 + et - 2.0 * (1.0 - et) / t);

    // q1 mediator kernel: the direct write -K1 (1 - e^-x) plus the
    // feedforward's sqrt(eta) K_f (1 - 4 x e^-x), both against the
    // squeezed X quadrature.
    let k_q1_xin = Kernel::new(vec![
        (s * (k_f * rt_eta - k1), 0, 0),
        (s * k1, 0, 1),
        (-4.0 * s * k_f * rt_eta, 1, 1),
    ]);
    // loss vacuum reaches q1 only through the feedforward
    let k_q1_xls = Kernel::new(vec![(k_f * rt_loss, 0, 0), (-2.0 * k_f * rt_loss, 0, 1)]);
    // p2 mediator kernel against the anti-squeezed Y quadrature
    let k_p2_yin = Kernel::new(vec![
        (-k2 * rt_eta / s, 0, 0),
        (k2 * rt_eta / s, 0, 1),
        (2.0 * k2 * rt_eta / s, 1, 1),
    ]);
    let k_p2_yls = Kernel::new(vec![(-k2 * rt_loss, 0, 0), (k2 * rt_loss, 0, 1)]);

    // Initial intracavity quadratures (all start in vacuum).
    let c_q1_x1 =
        -(g1 / kappa) * (1.0 - et) + rt_eta * (2.0 * g_f / kappa) * ((1.0 - et) - 2.0 * t * et);
    let c_q1_x2 = (2.0 * g_f / kappa) * (1.0 - et);
    let c_p2_y1 = -rt_eta * (2.0 * g2 / kappa) * (1.0 - et * (1.0 + t));
    let c_p2_y2 = -(g2 / kappa) * (1.0 - et);

    let mut n = DMatrix::zeros(4, 4);
    n[(0, 0)] = 0.5
        * (k_q1_xin.dot(&k_q1_xin, t)
            + k_q1_xls.dot(&k_q1_xls, t)
            + c_q1_x1 * c_q1_x1
            + c_q1_x2 * c_q1_x2);
    n[(3, 3)] = 0.5
        * (k_p2_yin.dot(&k_p2_yin, t)
            + k_p2_yls.dot(&k_p2_yls, t)
            + c_p2_y1 * c_p2_y1
            + c_p2_y2 * c_p2_y2);

    let coefficients = vec![
        Coefficient {
            source: NoiseSource::XInFlat,
            mode: 0,
            quad: Quadrature::Q,
            value: k_q1_xin.flat_projection(t),
        },
        Coefficient {
            source: NoiseSource::XLoss,
            mode: 0,
            quad: Quadrature::Q,
            value: k_q1_xls.flat_projection(t),
        },
        Coefficient {
            source: NoiseSource::YInFlat,
            mode: 1,
            quad: Quadrature::P,
            value: k_p2_yin.flat_projection(t),
        },
        Coefficient {
            source: NoiseSource::YLoss,
            mode: 1,
            quad: Quadrature::P,
            value: k_p2_yls.flat_projection(t),
        },
        Coefficient {
            source: NoiseSource::CavityX1,
            mode: 0,
            quad: Quadrature::Q,
            value: c_q1_x1,
        },
        Coefficient {
            source: NoiseSource::CavityX2,
            mode: 0,
            quad: Quadrature::Q,
            value: c_q1_x2,
        },
        Coefficient {
            source: NoiseSource::CavityY1,
            mode: 1,
            quad: Quadrature::P,
            value: c_p2_y1,
        },
        Coefficient {
            source: NoiseSource::CavityY2,
            mode: 1,
            quad: Quadrature::P,
            value: c_p2_y2,
        },
    ];

    let model = TransferModel { a, n, coefficients };
    Ok(apply_bath(model, params, bath))
}
