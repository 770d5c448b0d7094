//! The five conditional sampling steps of the hybrid Gibbs chain: noise
//! variance (inverse gamma), per-region shape (Metropolis-Hastings random
//! walk), per-region scale (inverse gamma), Potts labels (blocked Gibbs
//! sweep), and the reflectivity itself (preconditioned proximal unadjusted
//! Langevin, with a non-preconditioned variant as a baseline).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rustfft::num_complex::Complex;
use statrs::function::gamma::ln_gamma;

use crate::conv::ConvOperator;
use crate::ggd::ggd_log_norm;
use crate::image::{GgdParams, Image, LabelField, ModelState, ALPHA_MAX, ALPHA_MIN};
use crate::prox::{mm_prox_nonconvex, MmConfig, MmOutcome};
use crate::{Error, Result};

/// Which noise variance the preconditioner carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QSigma2Mode {
    /// Refresh `Q` with the current draw every iteration. Default.
    CurrentDraw,
    /// Keep `Q` at a fixed variance (for instance the initial estimate).
    Frozen(f64),
}

/// Pixel visit order of the label sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSchedule {
    /// Two half-sweeps over the checkerboard colors. Under the 4-neighbor
    /// Potts model same-color sites are conditionally independent, so this
    /// is a valid blocked Gibbs update. Default.
    Checkerboard,
    /// Plain row-major order.
    Raster,
}

/// Tuning knobs shared by the conditional samplers.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Langevin step size of the preconditioned reflectivity sampler.
    pub gamma: f64,
    /// Tikhonov floor of the preconditioner.
    pub lambda: f64,
    /// Random-walk standard deviation of the shape sampler.
    pub mh_step: f64,
    /// Potts granularity (initial value when calibration is active).
    pub theta: f64,
    /// Isolated-point fraction the burn-in calibration steers toward.
    pub theta_target: Option<f64>,
    pub rng_seed: u64,
    pub q_sigma2: QSigma2Mode,
    pub label_schedule: LabelSchedule,
    pub mm: MmConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            gamma: 0.09,
            lambda: 0.1,
            mh_step: 0.1,
            theta: 1.0,
            theta_target: None,
            rng_seed: 0,
            q_sigma2: QSigma2Mode::CurrentDraw,
            label_schedule: LabelSchedule::Checkerboard,
            mm: MmConfig::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda), ("mh_step", self.mh_step)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::invalid(format!("theta must be nonnegative, got {}", self.theta)));
        }
        if let Some(t) = self.theta_target {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!("theta target {t} outside [0, 1]")));
            }
        }
        if let QSigma2Mode::Frozen(s) = self.q_sigma2 {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!("frozen sigma2 {s} must be positive")));
            }
        }
        Ok(())
    }
}

/// One draw from the inverse gamma distribution with the given shape and
/// scale, as the reciprocal of a gamma draw.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0) || !(scale > 0.0) {
        return Err(Error::invalid(format!(
            "inverse gamma needs positive shape/scale, got {shape}/{scale}"
        )));
    }
    let gamma = Gamma::new(shape, 1.0).map_err(|e| Error::invalid(format!("gamma: {e}")))?;
    let mut g: f64 = gamma.sample(rng);
    // Guard against subnormal draws for extreme shapes.
    if g <= 0.0 {
        g = f64::MIN_POSITIVE;
    }
    Ok(scale / g)
}

/// Noise-variance draw: inverse gamma with shape `n/2` and scale
/// `||y - Hx||^2 / 2`.
pub fn sample_sigma2<R: Rng + ?Sized>(y: &Image, hx: &Image, rng: &mut R) -> Result<f64> {
    y.check_same_shape(hx, "sample_sigma2")?;
    let resid: f64 = y
        .as_slice()
        .iter()
        .zip(hx.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if resid == 0.0 {
        return Err(Error::DegenerateResidual);
    }
    sample_inverse_gamma(y.len() as f64 / 2.0, resid / 2.0, rng)
}

/// Scale draw for one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSample {
    Drawn(f64),
    /// The region holds no pixels; the caller keeps the previous value.
    EmptyRegion,
}

/// Per-region scale draw: inverse gamma with shape `n_k / alpha_k` and
/// scale `sum_{i in region k} |x_i|^{alpha_k}`.
pub fn sample_beta_k<R: Rng + ?Sized>(
    x: &Image,
    z: &LabelField,
    alpha_k: f64,
    k: u32,
    rng: &mut R,
) -> Result<BetaSample> {
    if x.len() != z.len() {
        return Err(Error::dims("image and label field length disagree"));
    }
    if !(alpha_k > 0.0) {
        return Err(Error::invalid(format!("shape {alpha_k} must be positive")));
    }
    let mut n_k = 0usize;
    let mut sum_pow = 0.0;
    for (&l, &v) in z.as_slice().iter().zip(x.as_slice()) {
        if l == k {
            n_k += 1;
            sum_pow += v.abs().powf(alpha_k);
        }
    }
    if n_k == 0 {
        return Ok(BetaSample::EmptyRegion);
    }
    if sum_pow <= 0.0 {
        // All-zero region: the conditional degenerates; keep the previous
        // scale the same way an empty region is handled.
        return Ok(BetaSample::EmptyRegion);
    }
    Ok(BetaSample::Drawn(sample_inverse_gamma(n_k as f64 / alpha_k, sum_pow, rng)?))
}

/// Shared Metropolis accept rule: accept with probability
/// `min(1, exp(log_ratio))`.
pub fn mh_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp()
}

/// Log of the shape conditional for one region, up to constants:
/// `-(n_k/alpha) log beta - n_k log Gamma(1 + 1/alpha) - sum |x_i|^alpha / beta`.
fn shape_log_conditional(alpha: f64, beta: f64, abs_x: &[f64]) -> f64 {
    let n = abs_x.len() as f64;
    let sum_pow: f64 = abs_x.iter().map(|v| v.powf(alpha)).sum();
    -(n / alpha) * beta.ln() - n * ln_gamma(1.0 + 1.0 / alpha) - sum_pow / beta
}

/// Deterministic core of the shape step: given a proposal and a uniform
/// variate, return the new value and whether it moved. Proposals outside
/// `[ALPHA_MIN, ALPHA_MAX]` are rejected outright (the prior's support).
fn mh_alpha_step(abs_x: &[f64], beta_k: f64, alpha_k: f64, proposal: f64, u01: f64) -> (f64, bool) {
    if !(ALPHA_MIN..=ALPHA_MAX).contains(&proposal) {
        return (alpha_k, false);
    }
    let log_ratio = shape_log_conditional(proposal, beta_k, abs_x)
        - shape_log_conditional(alpha_k, beta_k, abs_x);
    if log_ratio >= 0.0 || u01 < log_ratio.exp() {
        (proposal, true)
    } else {
        (alpha_k, false)
    }
}

/// Result of one shape random-walk step.
#[derive(Debug, Clone, Copy)]
pub struct MhOutcome {
    pub value: f64,
    pub accepted: bool,
    pub region_empty: bool,
}

/// Shape draw for region `k` via one Gaussian random-walk step on the
/// conditional, support-clamped to `[ALPHA_MIN, ALPHA_MAX]` by rejection.
pub fn sample_alpha_k_mh<R: Rng + ?Sized>(
    x: &Image,
    z: &LabelField,
    beta_k: f64,
    alpha_k: f64,
    k: u32,
    mh_step: f64,
    rng: &mut R,
) -> Result<MhOutcome> {
    if x.len() != z.len() {
        return Err(Error::dims("image and label field length disagree"));
    }
    if !(beta_k > 0.0) || !(mh_step > 0.0) {
        return Err(Error::invalid("scale and proposal step must be positive"));
    }
    let abs_x: Vec<f64> = z
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .filter(|(&l, _)| l == k)
        .map(|(_, &v)| v.abs())
        .collect();
    if abs_x.is_empty() {
        return Ok(MhOutcome { value: alpha_k, accepted: false, region_empty: true });
    }
    let noise: f64 = StandardNormal.sample(rng);
    let proposal = alpha_k + mh_step * noise;
    let u01: f64 = rng.random();
    let (value, accepted) = mh_alpha_step(&abs_x, beta_k, alpha_k, proposal, u01);
    Ok(MhOutcome { value, accepted, region_empty: false })
}

/// Unnormalized log conditional probabilities of the classes at one pixel:
/// `theta * #{matching neighbors} - |x|^{alpha_k} / beta_k + log N_k` with
/// `N_k` the GGD normalization constant.
pub fn label_log_probs(abs_x: f64, neighbor_counts: &[u32], ggd: &GgdParams, theta: f64) -> Vec<f64> {
    (0..ggd.num_classes())
        .map(|idx| {
            let alpha = ggd.alpha()[idx];
            let beta = ggd.beta()[idx];
            theta * neighbor_counts[idx] as f64 + ggd_log_norm(alpha, beta)
                - abs_x.powf(alpha) / beta
        })
        .collect()
}

/// One full Gibbs sweep over the label field. Border pixels simply omit
/// their missing neighbors from the Potts sum.
pub fn sample_labels_sweep<R: Rng + ?Sized>(
    x: &Image,
    z: &LabelField,
    ggd: &GgdParams,
    theta: f64,
    schedule: LabelSchedule,
    rng: &mut R,
) -> Result<LabelField> {
    if x.len() != z.len() {
        return Err(Error::dims("image and label field length disagree"));
    }
    if z.num_classes() as usize != ggd.num_classes() {
        return Err(Error::dims("label classes and GGD parameter count disagree"));
    }
    if !(theta >= 0.0) {
        return Err(Error::invalid(format!("theta {theta} must be nonnegative")));
    }
    let k = ggd.num_classes();
    let (w, h) = (z.width(), z.height());
    let log_norm: Vec<f64> =
        (0..k).map(|i| ggd_log_norm(ggd.alpha()[i], ggd.beta()[i])).collect();
    let mut out = z.clone();
    let mut counts = vec![0u32; k];
    let mut weights = vec![0.0f64; k];

    let mut visit = |r: usize, c: usize, out: &mut LabelField, rng: &mut R| {
        counts.iter_mut().for_each(|v| *v = 0);
        if r > 0 {
            counts[(out.get(r - 1, c) - 1) as usize] += 1;
        }
        if r + 1 < h {
            counts[(out.get(r + 1, c) - 1) as usize] += 1;
        }
        if c > 0 {
            counts[(out.get(r, c - 1) - 1) as usize] += 1;
        }
        if c + 1 < w {
            counts[(out.get(r, c + 1) - 1) as usize] += 1;
        }
        let abs_x = x.get(r, c).abs();
        let mut max_log = f64::NEG_INFINITY;
        for idx in 0..k {
            let lp = theta * counts[idx] as f64 + log_norm[idx]
                - abs_x.powf(ggd.alpha()[idx]) / ggd.beta()[idx];
            weights[idx] = lp;
            max_log = max_log.max(lp);
        }
        let mut total = 0.0;
        for wv in weights.iter_mut() {
            *wv = (*wv - max_log).exp();
            total += *wv;
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut cum = 0.0;
        let mut chosen = k - 1;
        for (idx, &wv) in weights.iter().enumerate() {
            cum += wv;
            if u < cum {
                chosen = idx;
                break;
            }
        }
        out.as_mut_slice()[r * w + c] = chosen as u32 + 1;
    };

    match schedule {
        LabelSchedule::Checkerboard => {
            for parity in 0..2usize {
                for r in 0..h {
                    for c in 0..w {
                        if (r + c) % 2 == parity {
                            visit(r, c, &mut out, rng);
                        }
                    }
                }
            }
        }
        LabelSchedule::Raster => {
            for r in 0..h {
                for c in 0..w {
                    visit(r, c, &mut out, rng);
                }
            }
        }
    }
    Ok(out)
}

/// One multiplicative calibration tick for the Potts granularity: raise
/// `theta` when the segmentation carries more isolated points than the
/// target, lower it when it carries fewer.
pub fn tune_theta(theta: f64, isolated_fraction: f64, target: f64) -> f64 {
    if isolated_fraction > target {
        theta * 1.05
    } else if isolated_fraction < target {
        theta / 1.05
    } else {
        theta
    }
}

/// Standard normal field.
pub fn standard_normal_image<R: Rng + ?Sized>(width: usize, height: usize, rng: &mut R) -> Image {
    let data = (0..width * height)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Image::from_raw(data, width, height)
}

/// Reflectivity sample and the warm-start state it leaves behind.
#[derive(Debug, Clone)]
pub struct TrfSampleOutcome {
    pub x: Image,
    /// DFB dual variable to warm-start the next call (None for the
    /// non-preconditioned variant).
    pub warm_dual: Option<Vec<f64>>,
    pub dfb_iterations: usize,
    pub dfb_converged: bool,
}

/// Deterministic part of the preconditioned Langevin update: the
/// preconditioned gradient step on the data term followed by the prox of
/// the prior in the metric `Q`.
///
/// `forward_scale` multiplies the spectral step
/// `h*(h x - y) / (|h|^2 + lambda)`; pass
/// `gamma * op.sigma2() / sigma2_likelihood` so that a preconditioner
/// refreshed with the current draw yields exactly `gamma`.
#[allow(clippy::too_many_arguments)]
pub fn ppula_mean_step(
    x: &Image,
    y_spec: &[Complex<f64>],
    op: &ConvOperator,
    forward_scale: f64,
    gamma: f64,
    alphas: &[f64],
    betas: &[f64],
    mm: &MmConfig,
    warm_dual: Option<Vec<f64>>,
) -> Result<(Image, MmOutcome)> {
    let x_tilde = op.preconditioned_residual_step(x, y_spec, forward_scale)?;
    let outcome =
        mm_prox_nonconvex(x_tilde.as_slice(), Some(op), gamma, alphas, betas, mm, warm_dual)?;
    let u = Image::from_raw(outcome.u.clone(), x.width(), x.height());
    Ok((u, outcome))
}

fn gather_pixel_params(z: &LabelField, ggd: &GgdParams) -> (Vec<f64>, Vec<f64>) {
    let alphas = z.as_slice().iter().map(|&l| ggd.alpha_of(l)).collect();
    let betas = z.as_slice().iter().map(|&l| ggd.beta_of(l)).collect();
    (alphas, betas)
}

/// Preconditioned proximal unadjusted Langevin draw of the reflectivity:
/// forward step, prox in the metric `Q`, plus `sqrt(2 gamma) Q^(1/2)` times
/// a white Gaussian field. No acceptance test is applied.
pub fn sample_trf_ppula<R: Rng + ?Sized>(
    state: &ModelState,
    y_spec: &[Complex<f64>],
    op: &ConvOperator,
    cfg: &SamplerConfig,
    warm_dual: Option<Vec<f64>>,
    rng: &mut R,
) -> Result<TrfSampleOutcome> {
    let (alphas, betas) = gather_pixel_params(&state.z, &state.ggd);
    let forward_scale = cfg.gamma * op.sigma2() / state.sigma2;
    let (u, mm_out) = ppula_mean_step(
        &state.x,
        y_spec,
        op,
        forward_scale,
        cfg.gamma,
        &alphas,
        &betas,
        &cfg.mm,
        warm_dual,
    )?;
    let noise = op.apply_q_sqrt(&standard_normal_image(u.width(), u.height(), rng))?;
    let scale = (2.0 * cfg.gamma).sqrt();
    let data = u
        .as_slice()
        .iter()
        .zip(noise.as_slice())
        .map(|(a, b)| a + scale * b)
        .collect();
    Ok(TrfSampleOutcome {
        x: Image::from_raw(data, u.width(), u.height()),
        warm_dual: mm_out.dual,
        dfb_iterations: mm_out.dfb_iterations,
        dfb_converged: mm_out.dfb_converged,
    })
}

/// Step size of the non-preconditioned variant: `1.99 sigma2 / ||H||^2`.
pub fn pula_gamma(sigma2: f64, op: &ConvOperator) -> f64 {
    let norm = op.spectral_norm();
    1.99 * sigma2 / (norm * norm)
}

/// Non-preconditioned proximal unadjusted Langevin draw (`Q = I`): plain
/// gradient step, exact Euclidean prox (no inner dual solver), isotropic
/// noise.
pub fn sample_trf_pula<R: Rng + ?Sized>(
    state: &ModelState,
    y_spec: &[Complex<f64>],
    op: &ConvOperator,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<TrfSampleOutcome> {
    let gamma = pula_gamma(state.sigma2, op);
    let (alphas, betas) = gather_pixel_params(&state.z, &state.ggd);
    // gamma / sigma2 = 1.99 / ||H||^2; the variance cancels.
    let x_tilde = op.residual_step(&state.x, y_spec, gamma / state.sigma2)?;
    let outcome =
        mm_prox_nonconvex(x_tilde.as_slice(), None, gamma, &alphas, &betas, &cfg.mm, None)?;
    let scale = (2.0 * gamma).sqrt();
    let noise = standard_normal_image(state.x.width(), state.x.height(), rng);
    let data = outcome
        .u
        .iter()
        .zip(noise.as_slice())
        .map(|(a, b)| a + scale * b)
        .collect();
    Ok(TrfSampleOutcome {
        x: Image::from_raw(data, state.x.width(), state.x.height()),
        warm_dual: None,
        dfb_iterations: 0,
        dfb_converged: true,
    })
}
