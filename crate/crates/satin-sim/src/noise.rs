//! Algebraic decoherence overlay: phase variance, contrast-loss mixture,
//! measurement resolution, and the projection-noise calibration model.
//!
//! The overlay never fits anything: cavity formulas feed broadening and
//! contrast forward, the mixture maps them to a normalized S_y variance, and
//! the measurement resolution enters as an additive variance at the end.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cavity::{self, CavityConfig};
use crate::dicke::{sample_shots, DickeState, RotationAxis};
use crate::{Error, Result};

/// Measurement resolution in CSS-normalized variance units.
pub const DEFAULT_SIGMA_MEAS_SQ: f64 = 0.15;
/// Detection resolution from repeated measurement of one preparation.
pub const DEFAULT_SIGMA_D_SQ: f64 = 0.15;

/// Decoherence budget of one twist/untwist pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseBudget {
    /// Broadening from the entangling pulse.
    pub i_plus: f64,
    /// Broadening from the disentangling pulse.
    pub i_minus: f64,
    /// Contrast surviving both pulses.
    pub contrast_sc: f64,
    /// Additive measurement-resolution variance (CSS units).
    pub sigma_meas_sq: f64,
    /// Single-measurement detection resolution (CSS units).
    pub sigma_d_sq: f64,
}

impl Default for NoiseBudget {
    fn default() -> Self {
        Self {
            i_plus: 0.0,
            i_minus: 0.0,
            contrast_sc: 1.0,
            sigma_meas_sq: DEFAULT_SIGMA_MEAS_SQ,
            sigma_d_sq: DEFAULT_SIGMA_D_SQ,
        }
    }
}

impl NoiseBudget {
    /// Budget with every channel switched off.
    pub fn ideal() -> Self {
        Self {
            i_plus: 0.0,
            i_minus: 0.0,
            contrast_sc: 1.0,
            sigma_meas_sq: 0.0,
            sigma_d_sq: 0.0,
        }
    }

    /// Derive the pair budget from a cavity operating point: the +q pulse at
    /// the configured detuning, the -q pulse at the mirrored one.
    pub fn from_cavity(cfg: &CavityConfig, q_plus: f64, q_minus: f64) -> Result<Self> {
        cfg.validate()?;
        let mut plus = cfg.clone();
        if cavity::shearing_per_photon(&plus).signum() != q_plus.signum() && q_plus != 0.0 {
            plus = plus.mirrored();
        }
        plus.n_tr_tot = if q_plus == 0.0 {
            0.0
        } else {
            cavity::photons_for_shearing(&plus, q_plus)?
        };
        let mut minus = plus.mirrored();
        minus.n_tr_tot = if q_minus == 0.0 {
            0.0
        } else {
            // magnitudes are detuning-mirror invariant; only the sign flips
            cavity::photons_for_shearing(&minus, q_minus)
                .or_else(|_| cavity::photons_for_shearing(&plus, -q_minus))?
        };
        let bp = cavity::pulse_budget(&plus)?;
        let bm = cavity::pulse_budget(&minus)?;
        let n = cfg.n_atoms as f64;
        Ok(Self {
            i_plus: bp.excess_broadening,
            i_minus: bm.excess_broadening,
            contrast_sc: (-2.0 * (bp.n_scattered + bm.n_scattered) / n).exp(),
            sigma_meas_sq: DEFAULT_SIGMA_MEAS_SQ,
            sigma_d_sq: DEFAULT_SIGMA_D_SQ,
        })
    }

    pub fn i_tot(&self) -> f64 {
        self.i_plus + self.i_minus
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_plus < 0.0 || self.i_minus < 0.0 {
            return Err(Error::InvalidArgument("broadenings must be >= 0".into()));
        }
        if !(self.contrast_sc > 0.0 && self.contrast_sc <= 1.0) {
            return Err(Error::InvalidArgument("contrast must be in (0, 1]".into()));
        }
        if self.sigma_meas_sq < 0.0 || self.sigma_d_sq < 0.0 {
            return Err(Error::InvalidArgument("resolutions must be >= 0".into()));
        }
        Ok(())
    }
}

/// Phase variance of the coherent sub-ensemble after a twist/untwist pair:
/// (1 + I_tot) / (2 C S0) + Q_tot^2. With contrast = 1 this is the
/// contrast-free expression.
pub fn phase_variance(s0: f64, i_tot: f64, q_tot: f64, contrast: f64) -> Result<f64> {
    if s0 <= 0.0 {
        return Err(Error::InvalidArgument("s0 must be positive".into()));
    }
    if contrast <= 0.0 || contrast > 1.0 {
        return Err(Error::InvalidArgument("contrast must be in (0, 1]".into()));
    }
    Ok((1.0 + i_tot) / (2.0 * contrast * s0) + q_tot * q_tot)
}

/// Full mixture variance: the incoherent fraction contributes unit normalized
/// variance, the coherent fraction wraps the phase spread onto the sphere:
/// sigma_y^2 = 1 - C + S0 C^2 (1 - exp(-2 dtau^2)).
pub fn sigma_y_from_phase(delta_tau_sq: f64, s0: f64, contrast: f64) -> f64 {
    1.0 - contrast + s0 * contrast * contrast * (1.0 - (-2.0 * delta_tau_sq).exp())
}

/// Holstein-Primakoff limit: 1 + 2 S0 C^2 Q_tot^2 + C I_tot.
pub fn sigma_y_hp(s0: f64, i_tot: f64, q_tot: f64, contrast: f64) -> f64 {
    1.0 + 2.0 * s0 * contrast * contrast * q_tot * q_tot + contrast * i_tot
}

/// Small-angle coherent-sector variance C (1 + I_tot): the phase variance of
/// the pair propagated on the contrast-shrunk sphere without the wrapped
/// mapping or the incoherent add-back. Used as the detuning optimizer's
/// ranking objective; reported variances always use the full mixture.
pub fn coherent_sector_variance(i_tot: f64, contrast: f64) -> f64 {
    contrast * (1.0 + i_tot)
}

/// Model prediction for the echo variance and its decomposition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariancePrediction {
    /// Phase variance of the coherent sub-ensemble (rad^2).
    pub delta_tau_sq: f64,
    /// Normalized S_y variance including measurement resolution.
    pub sigma_y_sq: f64,
    /// Holstein-Primakoff-limit value (plus measurement resolution).
    pub sigma_y_sq_hp: f64,
    /// Total broadening entering the prediction.
    pub i_tot: f64,
    /// Pair contrast entering the prediction.
    pub contrast_sc: f64,
    /// Additive measurement-resolution term.
    pub resolution_term: f64,
    /// Contrast effect as the net change of the mixture value vs contrast 1.
    pub contrast_effect_net: f64,
    /// Contrast effect as the coherent-sector shrinkage -(1-C)(1+I_tot);
    /// both decompositions are reported because they answer different
    /// bookkeeping questions.
    pub contrast_effect_linear: f64,
}

/// Forward-model the normalized S_y variance after a (q_plus, q_minus) pulse
/// pair at the operating point of `cfg` (mirrored detuning for the second
/// pulse), including measurement resolution. The minimum over q_minus sits at
/// q_minus = -q_plus.
pub fn predict_untwist_variance(
    cfg: &CavityConfig,
    q_plus: f64,
    q_minus: f64,
) -> Result<VariancePrediction> {
    let budget = NoiseBudget::from_cavity(cfg, q_plus, q_minus)?;
    predict_from_budget(cfg.n_atoms, &budget, q_plus + q_minus)
}

/// Same prediction from an explicit budget.
pub fn predict_from_budget(
    n_atoms: usize,
    budget: &NoiseBudget,
    q_tot: f64,
) -> Result<VariancePrediction> {
    budget.validate()?;
    let s0 = n_atoms as f64 / 2.0;
    let c = budget.contrast_sc;
    let i_tot = budget.i_tot();
    let dtau = phase_variance(s0, i_tot, q_tot, c)?;
    let mix = sigma_y_from_phase(dtau, s0, c);
    let dtau_c1 = phase_variance(s0, i_tot, q_tot, 1.0)?;
    let mix_c1 = sigma_y_from_phase(dtau_c1, s0, 1.0);
    Ok(VariancePrediction {
        delta_tau_sq: dtau,
        sigma_y_sq: mix + budget.sigma_meas_sq,
        sigma_y_sq_hp: sigma_y_hp(s0, i_tot, q_tot, c) + budget.sigma_meas_sq,
        i_tot,
        contrast_sc: c,
        resolution_term: budget.sigma_meas_sq,
        contrast_effect_net: mix - mix_c1,
        contrast_effect_linear: -(1.0 - c) * (1.0 + i_tot),
    })
}

/// Expected projection-noise slope of var(eta S_z) against N eta.
pub fn projection_noise_slope(eta: f64, sigma_d_sq: f64) -> f64 {
    eta * (1.0 + sigma_d_sq) / 4.0
}

/// Monte Carlo estimate of the projection-noise slope.
#[derive(Debug, Clone)]
pub struct McSlope {
    pub slope: f64,
    pub std_err: f64,
    /// Quadratic coefficient of the two-parameter fit and its standard error;
    /// consistent with zero when no classical noise is present.
    pub quad_coeff: f64,
    pub quad_std_err: f64,
    /// (N eta, measured var(eta S_z)) per atom number.
    pub points: Vec<(f64, f64)>,
}

/// Sample CSS projection noise through the detection chain and fit
/// var(eta S_z) vs N eta. Deterministic per seed.
pub fn projection_noise_mc(
    eta: f64,
    sigma_d_sq: f64,
    n_list: &[usize],
    shots_per_n: usize,
    seed: u64,
) -> Result<McSlope> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    if n_list.is_empty() || shots_per_n < 2 {
        return Err(Error::InvalidArgument("need atom numbers and >= 2 shots".into()));
    }
    let mut points = Vec::with_capacity(n_list.len());
    for (idx, &n) in n_list.iter().enumerate() {
        let css = DickeState::make_css(n, std::f64::consts::FRAC_PI_2, 0.0)?;
        let dist = css.measure_distribution(RotationAxis::Z);
        let shots = sample_shots(&dist, shots_per_n, crate::task_seed(seed, idx as u64))?;
        let det_sd = (sigma_d_sq * n as f64 / 4.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(crate::task_seed(seed, 1000 + idx as u64));
        let normal = Normal::new(0.0, det_sd).map_err(|e| Error::Numeric(e.to_string()))?;
        let measured: Vec<f64> = shots
            .iter()
            .map(|m| eta * (m + normal.sample(&mut rng)))
            .collect();
        let mean = measured.iter().sum::<f64>() / measured.len() as f64;
        let var = measured.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (measured.len() - 1) as f64;
        points.push((n as f64 * eta, var));
    }
    // through-origin linear fit
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let k = points.len() as f64;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    let std_err = if points.len() > 1 {
        (ss_res / (k - 1.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    // two-parameter fit y = a x + b x^2 for the classical-noise check
    let (s2, s3, s4): (f64, f64, f64) = points.iter().fold((0.0, 0.0, 0.0), |acc, (x, _)| {
        (acc.0 + x * x, acc.1 + x * x * x, acc.2 + x * x * x * x)
    });
    let (t1, t2): (f64, f64) = points
        .iter()
        .fold((0.0, 0.0), |acc, (x, y)| (acc.0 + x * y, acc.1 + x * x * y));
    let det = s2 * s4 - s3 * s3;
    let (quad_coeff, quad_std_err) = if det.abs() > 0.0 && points.len() > 2 {
        let a = (s4 * t1 - s3 * t2) / det;
        let b = (s2 * t2 - s3 * t1) / det;
        let ss: f64 = points
            .iter()
            .map(|(x, y)| (y - a * x - b * x * x).powi(2))
            .sum();
        let sigma2 = ss / (k - 2.0);
        (b, (sigma2 * s2 / det).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(McSlope { slope, std_err, quad_coeff, quad_std_err, points })
}
