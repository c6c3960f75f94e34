//! Analytic transfer models of the pulsed QND protocol.
//!
//! Every model reduces the protocol — squeezed pulse through cavity 1,
//! lossy channel, cavity 2, homodyne detection of the flat temporal mode
//! and feedforward onto `q1` — to an affine Gaussian channel
//! `V -> A V A^T + N` on the four mechanical quadratures
//! `(q1, p1, q2, p2)`.
//!
//! * [`adiabatic_transfer`] eliminates the intracavity fields,
//! * [`full_cavity_transfer`] keeps them, with exponential memory kernels,
//! * [`nonrwa_transfer`] additionally keeps the counter-rotating terms,
//! * [`approx_ln`] and [`adiabatic_bath_ln`] are the closed-form
//!   entanglement estimates in the adiabatic regime.

mod full_cavity;
mod nonrwa;

pub use full_cavity::full_cavity_transfer;
pub use nonrwa::{closed_form_sine_kernel, nonrwa_transfer, nonrwa_transfer_with, NonRwaOptions};

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::gaussian::{log_negativity, physicality_check, GaussianState, Quadrature};
use crate::linalg::symmetrize;
use crate::math;
use crate::{Error, Result};

/// Which analytic solution backs the transfer model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Intracavity fields adiabatically eliminated.
    AdiabaticIdeal,
    /// Full intracavity solution within the rotating-wave approximation.
    FullCavity,
    /// Full intracavity solution including counter-rotating terms.
    NonRwa,
}

/// Mechanical-bath treatment, orthogonal to [`ModelKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BathMode {
    #[default]
    Off,
    /// Exact exponential decay of means and covariances over the exposure
    /// window. The default when the bath is on.
    ExactExponential,
    /// Decay linearised in `gamma * tau`, keeping only the additive
    /// `Gamma`-noise. Matches the closed-form estimate's bookkeeping.
    LinearGamma,
}

impl BathMode {
    pub fn is_on(self) -> bool {
        !matches!(self, BathMode::Off)
    }
}

/// Physical and protocol parameters. Rates are angular (rad/s), `tau` is
/// in seconds, the rest dimensionless. The effective gains `K1`, `K2` and
/// the feedforward rate `g_f` are always derived on the fly.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    /// Optical (or microwave) cavity amplitude decay rate.
    pub kappa: f64,
    /// Viscous mechanical damping rate.
    pub gamma: f64,
    /// Mechanical angular frequency; only the counter-rotating model needs it.
    pub omega_m: f64,
    /// Enhanced optomechanical coupling in the first cavity.
    pub g1: f64,
    /// Enhanced optomechanical coupling in the second cavity.
    pub g2: f64,
    /// Pulse duration.
    pub tau: f64,
    /// Presqueezing amplitude factor `S` (`X -> S X`).
    pub squeezing: f64,
    /// Transmittivity of the channel between the cavities.
    pub eta: f64,
    /// Thermal occupation of each mechanical bath.
    pub n_th: f64,
    /// Feedforward gain applied to the measured flat-mode quadrature.
    pub k_f: f64,
}

impl ProtocolParams {
    /// Parameters with couplings expressed through the dimensionless gains
    /// `K_i = g_i sqrt(2 tau / kappa)`, feedforward set to the lossless
    /// cancellation value `K1`.
    pub fn from_gains(kappa: f64, tau: f64, k1: f64, k2: f64) -> Self {
        let scale = math::sqrt(kappa / (2.0 * tau));
        Self {
            kappa,
            gamma: 0.0,
            omega_m: 0.0,
            g1: k1 * scale,
            g2: k2 * scale,
            tau,
            squeezing: 1.0,
            eta: 1.0,
            n_th: 0.0,
            k_f: k1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 3] = [
            ("kappa", self.kappa),
            ("tau", self.tau),
            ("squeezing", self.squeezing),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        let nonneg: [(&'static str, f64); 6] = [
            ("gamma", self.gamma),
            ("omega_m", self.omega_m),
            ("g1", self.g1),
            ("g2", self.g2),
            ("n_th", self.n_th),
            ("k_f", self.k_f),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        if !(0.0..=1.0).contains(&self.eta) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: self.eta,
            });
        }
        Ok(())
    }

    /// `K1 = g1 sqrt(2 tau / kappa)`.
    pub fn k1(&self) -> f64 {
        self.g1 * math::sqrt(2.0 * self.tau / self.kappa)
    }

    /// `K2 = g2 sqrt(2 tau / kappa)`.
    pub fn k2(&self) -> f64 {
        self.g2 * math::sqrt(2.0 * self.tau / self.kappa)
    }

    /// Feedforward rate `g_f = K_f sqrt(kappa / 2 tau)`.
    pub fn g_f(&self) -> f64 {
        self.k_f * math::sqrt(self.kappa / (2.0 * self.tau))
    }

    /// Thermal decoherence strength per pulse, `Gamma = 2 gamma tau n_th`.
    pub fn big_gamma(&self) -> f64 {
        2.0 * self.gamma * self.tau * self.n_th
    }

    /// Feedforward gain cancelling the mediator's `X` quadrature,
    /// `K_f = K1 / sqrt(eta)`.
    pub fn cancellation_k_f(&self) -> f64 {
        self.k1() / math::sqrt(self.eta)
    }

    /// Squeezing that maximises the entanglement when the feedforward is
    /// detuned from cancellation, `S = |K2 / (K1 - K_f)|`. Infinite at the
    /// cancellation point.
    pub fn optimal_squeezing(&self) -> f64 {
        let d = self.k1() - self.k_f;
        if d == 0.0 {
            f64::INFINITY
        } else {
            math::abs(self.k2() / d)
        }
    }

    /// Sideband-resolution ratio `kappa / omega_m`.
    pub fn sideband_ratio(&self) -> f64 {
        if self.omega_m > 0.0 {
            self.kappa / self.omega_m
        } else {
            f64::INFINITY
        }
    }
}

/// Identity of a noise contribution in a [`TransferModel`]'s table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    /// Flat temporal mode of the squeezed input, `X` quadrature.
    XInFlat,
    /// Flat temporal mode of the squeezed input, `Y` quadrature.
    YInFlat,
    /// Vacuum admixed by the lossy channel, `X` quadrature.
    XLoss,
    /// Vacuum admixed by the lossy channel, `Y` quadrature.
    YLoss,
    /// Initial intracavity quadratures.
    CavityX1,
    CavityY1,
    CavityX2,
    CavityY2,
    /// Mechanical bath of the named mode (entry value is an added variance).
    BathMech1,
    BathMech2,
}

/// One diagnostic row: the linear coefficient with which `source` enters
/// the final value of the given mechanical quadrature (for bath rows, the
/// added variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub source: NoiseSource,
    pub mode: usize,
    pub quad: Quadrature,
    pub value: f64,
}

/// Affine Gaussian channel on the mechanical quadratures plus a table of
/// named noise coefficients for diagnostics.
#[derive(Debug, Clone)]
pub struct TransferModel {
    pub a: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub coefficients: Vec<Coefficient>,
}

impl TransferModel {
    pub fn identity() -> Self {
        Self {
            a: DMatrix::identity(4, 4),
            n: DMatrix::zeros(4, 4),
            coefficients: Vec::new(),
        }
    }

    /// Look up a coefficient-table entry.
    pub fn coefficient(&self, source: NoiseSource, mode: usize, quad: Quadrature) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.source == source && c.mode == mode && c.quad == quad)
            .map(|c| c.value)
    }

    /// Sup-norm distance between two channels, `max(|dA|, |dN|)`.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let da = (&self.a - &other.a)
            .iter()
            .fold(0.0f64, |m, &x| m.max(math::abs(x)));
        let dn = (&self.n - &other.n)
            .iter()
            .fold(0.0f64, |m, &x| m.max(math::abs(x)));
        da.max(dn)
    }
}

/// Output of pushing a state through a model (or of a time-bin run).
#[derive(Debug, Clone)]
pub struct SimResult {
    /// Final 4x4 mechanical covariance.
    pub mech_cov: DMatrix<f64>,
    /// Logarithmic negativity of the two mechanical modes.
    pub ln: f64,
    /// Minimum eigenvalue of `V + (i/2) Omega` of the final covariance.
    pub min_eigenvalue: f64,
    /// `|E(2N) - E(N)|` for discretised runs, absent for closed forms.
    pub convergence_estimate: Option<f64>,
    /// Number of time bins of the finest run, for discretised results.
    pub n_bins: Option<usize>,
    /// Diagnostic coefficient table of the model that produced the result.
    pub coefficients: Vec<Coefficient>,
}

/// Ideal adiabatic transfer. The intracavity fields follow their inputs
/// instantaneously; `p1` and `q2` are left untouched, `q1` and `p2` pick
/// up the partner variable scaled by the gain product plus the mediator
/// and loss noises.
pub fn adiabatic_transfer(params: &ProtocolParams, bath: BathMode) -> Result<TransferModel> {
    params.validate()?;
    let (k1, k2, k_f) = (params.k1(), params.k2(), params.k_f);
    let (s, eta) = (params.squeezing, params.eta);
    let rt_eta = math::sqrt(eta);
    let rt_loss = math::sqrt(1.0 - eta);

    let mut a = DMatrix::identity(4, 4);
    a[(0, 2)] = k2 * k_f;
    a[(3, 1)] = -k1 * k2 * rt_eta;

    let c_x_in = -s * (k1 - k_f * rt_eta);
    let c_x_ls = k_f * rt_loss;
    let c_y_in = -k2 * rt_eta / s;
    let c_y_ls = -k2 * rt_loss;

    let mut n = DMatrix::zeros(4, 4);
    n[(0, 0)] = 0.5 * (c_x_in * c_x_in + c_x_ls * c_x_ls);
    n[(3, 3)] = 0.5 * (c_y_in * c_y_in + c_y_ls * c_y_ls);

    let coefficients = vec![
        Coefficient {
            source: NoiseSource::XInFlat,
            mode: 0,
            quad: Quadrature::Q,
            value: c_x_in,
        },
        Coefficient {
            source: NoiseSource::XLoss,
            mode: 0,
            quad: Quadrature::Q,
            value: c_x_ls,
        },
        Coefficient {
            source: NoiseSource::YInFlat,
            mode: 1,
            quad: Quadrature::P,
            value: c_y_in,
        },
        Coefficient {
            source: NoiseSource::YLoss,
            mode: 1,
            quad: Quadrature::P,
            value: c_y_ls,
        },
    ];

    let model = TransferModel { a, n, coefficients };
    Ok(apply_bath(model, params, bath))
}

/// Wrap a bath-free transfer in the mechanical-bath channels.
///
/// Mode 1 is exposed for `2 tau` (its own pulse plus the second one) and
/// its exposure is composed ahead of the transfer, so the heated `p1` is
/// what the pulse carries over to `p2`. Mode 2 is exposed for `tau`,
/// composed after the transfer: the pulse reads `q2` before that bath
/// noise lands. This ordering is what the closed-form `Gamma K^4`
/// estimate assumes.
pub(crate) fn apply_bath(
    model: TransferModel,
    params: &ProtocolParams,
    bath: BathMode,
) -> TransferModel {
    match bath {
        BathMode::Off => model,
        BathMode::ExactExponential | BathMode::LinearGamma => {
            let gt = params.gamma * params.tau;
            let occ = params.n_th + 0.5;
            let (d1, d2, n1, n2) = match bath {
                BathMode::ExactExponential => {
                    let d1 = math::exp(-gt);
                    let d2 = math::exp(-0.5 * gt);
                    (d1, d2, (1.0 - d1 * d1) * occ, (1.0 - d2 * d2) * occ)
                }
                _ => (1.0, 1.0, 2.0 * gt * occ, gt * occ),
            };
            let d_pre = DMatrix::from_diagonal(&DVector::from_vec(vec![d1, d1, 1.0, 1.0]));
            let d_post = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, d2, d2]));
            let mut n_pre = DMatrix::zeros(4, 4);
            n_pre[(0, 0)] = n1;
            n_pre[(1, 1)] = n1;
            let mut n_post = DMatrix::zeros(4, 4);
            n_post[(2, 2)] = n2;
            n_post[(3, 3)] = n2;

            let a = &d_post * &model.a * &d_pre;
            let mut n =
                &d_post * (&model.a * n_pre * model.a.transpose() + &model.n) * &d_post + n_post;
            symmetrize(&mut n);

            let mut coefficients = model.coefficients;
            coefficients.push(Coefficient {
                source: NoiseSource::BathMech1,
                mode: 0,
                quad: Quadrature::Q,
                value: n1,
            });
            coefficients.push(Coefficient {
                source: NoiseSource::BathMech2,
                mode: 1,
                quad: Quadrature::Q,
                value: n2,
            });
            TransferModel { a, n, coefficients }
        }
    }
}

/// Build the transfer model for the requested kind and bath treatment.
pub fn transfer(kind: ModelKind, bath: BathMode, params: &ProtocolParams) -> Result<TransferModel> {
    match kind {
        ModelKind::AdiabaticIdeal => adiabatic_transfer(params, bath),
        ModelKind::FullCavity => full_cavity_transfer(params, bath),
        ModelKind::NonRwa => {
            if bath.is_on() {
                return Err(Error::InvalidParameter {
                    name: "bath",
                    value: 1.0,
                });
            }
            nonrwa_transfer(params)
        }
    }
}

/// Closed-form adiabatic estimate
/// `E ~ -ln [ (1 / 2 K1 K2) sqrt(1 + K2^2 / S^2) ]`.
/// May return a negative value; clamp at zero when comparing with the
/// logarithmic negativity.
pub fn approx_ln(params: &ProtocolParams) -> Result<f64> {
    params.validate()?;
    let (k1, k2) = (params.k1(), params.k2());
    if !(k1 > 0.0) || !(k2 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "k1*k2",
            value: k1 * k2,
        });
    }
    let s = params.squeezing;
    Ok(-math::ln(
        math::sqrt(1.0 + k2 * k2 / (s * s)) / (2.0 * k1 * k2),
    ))
}

/// Closed-form adiabatic estimate with the mechanical bath,
/// `E ~ -ln [ (1 / 2 K^2) sqrt(1 + Gamma K^4 + (K^2/S^2)(1 + Gamma K^4)) ]`
/// with `Gamma = 2 gamma tau n_th`. Requires `K1 = K2`.
pub fn adiabatic_bath_ln(params: &ProtocolParams) -> Result<f64> {
    params.validate()?;
    let (k1, k2) = (params.k1(), params.k2());
    if math::abs(k1 - k2) > 1e-12 * k1.max(k2) {
        return Err(Error::InvalidParameter {
            name: "k1 - k2",
            value: k1 - k2,
        });
    }
    if !(k1 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "k1",
            value: k1,
        });
    }
    let k2p = k1 * k1;
    let k4 = k2p * k2p;
    let gamma_k4 = params.big_gamma() * k4;
    let s2 = params.squeezing * params.squeezing;
    let arg = 1.0 + gamma_k4 + (k2p / s2) * (1.0 + gamma_k4);
    Ok(-math::ln(math::sqrt(arg) / (2.0 * k2p)))
}

/// Push a two-mode mechanical state through a transfer model and measure
/// the resulting entanglement.
pub fn ln_from_transfer(model: &TransferModel, initial: &GaussianState) -> Result<SimResult> {
    if initial.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: initial.n_modes(),
        });
    }
    let mut cov = &model.a * initial.cov() * model.a.transpose() + &model.n;
    symmetrize(&mut cov);
    let report = physicality_check(&cov)?;
    if !report.pass {
        return Err(Error::NonPhysical {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let ln = log_negativity(&cov)?;
    Ok(SimResult {
        mech_cov: cov,
        ln,
        min_eigenvalue: report.min_eigenvalue,
        convergence_estimate: None,
        n_bins: None,
        coefficients: model.coefficients.clone(),
    })
}

/// Convenience: entanglement of the ground-state protocol under a model.
pub fn ln_from_vacuum(model: &TransferModel) -> Result<f64> {
    Ok(ln_from_transfer(model, &GaussianState::vacuum(2)?)?.ln)
}
