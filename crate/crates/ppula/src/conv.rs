//! Circular convolution operator `H`, its adjoint, and the preconditioner
//! `Q = sigma2 (H^T H + lambda I)^-1` together with `Q^(1/2)`, all applied
//! through the 2-D DFT.
//!
//! Circular boundary handling makes `H`, `H^T H`, `Q` and `Q^(1/2)` exactly
//! diagonal in the Fourier basis, so the preconditioner costs one transform
//! pair and `Q^(1/2)` is exact rather than approximated.

use std::path::Path;

use crate::fft::{C64, Fft2};
use crate::image::Image;
use crate::metric::Metric;
use crate::{Error, Result};

/// A convolution kernel with an anchor marking its center tap.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    kernel: Vec<f64>,
    rows: usize,
    cols: usize,
    anchor: (usize, usize),
}

impl Psf {
    pub fn new(kernel: Vec<f64>, rows: usize, cols: usize, anchor: (usize, usize)) -> Result<Self> {
        if rows == 0 || cols == 0 || kernel.len() != rows * cols {
            return Err(Error::dims(format!(
                "kernel length {} != {rows}x{cols}",
                kernel.len()
            )));
        }
        if anchor.0 >= rows || anchor.1 >= cols {
            return Err(Error::invalid(format!("anchor {anchor:?} outside {rows}x{cols} kernel")));
        }
        if !kernel.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("kernel contains NaN or Inf".into()));
        }
        if kernel.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("kernel is identically zero"));
        }
        Ok(Psf { kernel, rows, cols, anchor })
    }

    /// Kernel anchored at its central tap (odd dimensions recommended).
    pub fn centered(kernel: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        Self::new(kernel, rows, cols, (rows / 2, cols / 2))
    }

    /// Single unit tap: the identity operator.
    pub fn delta() -> Self {
        Psf { kernel: vec![1.0], rows: 1, cols: 1, anchor: (0, 0) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.kernel[r * self.cols + c]
    }

    /// Parses a plain-text 2-D array: one kernel row per line, whitespace
    /// separated. Lines starting with `#` are comments. The anchor is the
    /// central tap.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::Format(format!("PSF line {}: bad number {tok:?}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Format(format!(
                        "PSF line {}: ragged row ({} vs {})",
                        lineno + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format("PSF file holds no rows".into()));
        }
        let r = rows.len();
        let c = rows[0].len();
        Psf::centered(rows.into_iter().flatten().collect(), r, c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Psf::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# PSF1 {} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| format!("{:.17e}", self.get(r, c)))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// The convolution operator and its preconditioner in spectral form.
///
/// Immutable after construction except for the noise-variance scalar baked
/// into `Q`; refreshing that only rescales two cached spectra.
#[derive(Clone)]
pub struct ConvOperator {
    width: usize,
    height: usize,
    fft: Fft2,
    spectrum: Vec<C64>,
    abs2: Vec<f64>,
    min_abs2: f64,
    max_abs: f64,
    lambda: f64,
    sigma2: f64,
    q_spec: Vec<f64>,
    q_sqrt_spec: Vec<f64>,
}

impl ConvOperator {
    /// Default Tikhonov floor of the preconditioner.
    pub const DEFAULT_LAMBDA: f64 = 0.1;

    /// Embeds the kernel at the origin with a circular shift by its anchor
    /// and takes its DFT, so that applying the operator to a delta image
    /// reproduces the kernel (circularly). `lambda` defaults to 0.1 and
    /// `sigma2` to 1; adjust with [`set_lambda`](Self::set_lambda) and
    /// [`refresh_sigma2`](Self::refresh_sigma2).
    pub fn build(psf: &Psf, width: usize, height: usize) -> Result<Self> {
        if psf.rows() > height || psf.cols() > width {
            return Err(Error::KernelTooLarge {
                kr: psf.rows(),
                kc: psf.cols(),
                h: height,
                w: width,
            });
        }
        let fft = Fft2::new(width, height);
        let mut grid = vec![0.0; width * height];
        let (ar, ac) = psf.anchor();
        for r in 0..psf.rows() {
            for c in 0..psf.cols() {
                let gr = (r + height - ar) % height;
                let gc = (c + width - ac) % width;
                grid[gr * width + gc] += psf.get(r, c);
            }
        }
        let spectrum = fft.forward_real(&grid);
        let abs2: Vec<f64> = spectrum.iter().map(|c| c.norm_sqr()).collect();
        let min_abs2 = abs2.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_abs = abs2.iter().cloned().fold(0.0f64, f64::max).sqrt();
        let mut op = ConvOperator {
            width,
            height,
            fft,
            spectrum,
            abs2,
            min_abs2,
            max_abs,
            lambda: Self::DEFAULT_LAMBDA,
            sigma2: 1.0,
            q_spec: Vec::new(),
            q_sqrt_spec: Vec::new(),
        };
        op.rebuild_q();
        Ok(op)
    }

    /// Sets the Tikhonov floor. `lambda >= 0` is accepted as long as
    /// `|h|^2 + lambda` stays strictly positive at every frequency.
    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::invalid(format!("lambda {lambda} must be nonnegative")));
        }
        if self.min_abs2 + lambda <= 0.0 {
            return Err(Error::invalid(
                "operator spectrum vanishes and lambda is zero; Q is undefined",
            ));
        }
        self.lambda = lambda;
        self.rebuild_q();
        Ok(())
    }

    /// Updates the noise variance baked into `Q`. Cheap: the kernel
    /// spectrum is cached and only the scalar factor changes.
    pub fn refresh_sigma2(&mut self, sigma2: f64) -> Result<()> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::invalid(format!("sigma2 {sigma2} must be positive")));
        }
        self.sigma2 = sigma2;
        self.rebuild_q();
        Ok(())
    }

    fn rebuild_q(&mut self) {
        self.q_spec = self
            .abs2
            .iter()
            .map(|&a2| self.sigma2 / (a2 + self.lambda))
            .collect();
        self.q_sqrt_spec = self.q_spec.iter().map(|&q| q.sqrt()).collect();
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Exact operator 2-norm of `H`: the largest spectrum magnitude.
    pub fn spectral_norm(&self) -> f64 {
        self.max_abs
    }

    /// Exact spectral norm of `Q`: `sigma2 / (min |h|^2 + lambda)`.
    pub fn q_norm(&self) -> f64 {
        self.sigma2 / (self.min_abs2 + self.lambda)
    }

    /// DFT of an image, for callers that cache spectra across iterations.
    pub fn fft2(&self, img: &Image) -> Result<Vec<C64>> {
        self.check_dims(img)?;
        Ok(self.fft.forward_real(img.as_slice()))
    }

    /// Kernel spectrum coefficient at flat frequency index `i`.
    pub fn spectrum_at(&self, i: usize) -> C64 {
        self.spectrum[i]
    }

    /// `Q` spectrum coefficient (`sigma2 / (|h|^2 + lambda)`) at index `i`.
    pub fn q_spectrum_at(&self, i: usize) -> f64 {
        self.q_spec[i]
    }

    /// `H x` by spectrum multiplication: exact circular convolution.
    pub fn apply_forward(&self, x: &Image) -> Result<Image> {
        self.check_dims(x)?;
        Ok(self.filter_complex(x.as_slice(), |i, v| v * self.spectrum[i]))
    }

    /// `H^T r` (conjugate spectrum).
    pub fn apply_adjoint(&self, r: &Image) -> Result<Image> {
        self.check_dims(r)?;
        Ok(self.filter_complex(r.as_slice(), |i, v| v * self.spectrum[i].conj()))
    }

    /// `Q v`: each Fourier coefficient scaled by `sigma2 / (|h|^2 + lambda)`.
    pub fn apply_q(&self, v: &Image) -> Result<Image> {
        self.check_dims(v)?;
        Ok(self.filter_complex(v.as_slice(), |i, c| c * self.q_spec[i]))
    }

    /// `Q^(1/2) v`. Applying it twice equals [`apply_q`](Self::apply_q);
    /// applied to a white Gaussian field it yields a real Gaussian field
    /// with covariance exactly `Q` (real symmetric spectrum).
    pub fn apply_q_sqrt(&self, v: &Image) -> Result<Image> {
        self.check_dims(v)?;
        Ok(self.filter_complex(v.as_slice(), |i, c| c * self.q_sqrt_spec[i]))
    }

    /// `x - scale * Q' H^T (H x - y)` with `Q' = (H^T H + lambda I)^-1`,
    /// composed as a single spectral multiply (one transform pair). The
    /// caller supplies `scale`; the noise-variance factors of the
    /// preconditioner and the likelihood gradient cancel there.
    pub fn preconditioned_residual_step(
        &self,
        x: &Image,
        y_spec: &[C64],
        scale: f64,
    ) -> Result<Image> {
        self.residual_step_impl(x, y_spec, scale, true)
    }

    /// `x - scale * H^T (H x - y)`, one transform pair, no preconditioning.
    pub fn residual_step(&self, x: &Image, y_spec: &[C64], scale: f64) -> Result<Image> {
        self.residual_step_impl(x, y_spec, scale, false)
    }

    fn residual_step_impl(
        &self,
        x: &Image,
        y_spec: &[C64],
        scale: f64,
        preconditioned: bool,
    ) -> Result<Image> {
        self.check_dims(x)?;
        if y_spec.len() != self.len() {
            return Err(Error::dims("cached spectrum length mismatch"));
        }
        let mut spec = self.fft.forward_real(x.as_slice());
        for (i, s) in spec.iter_mut().enumerate() {
            let residual = self.spectrum[i] * *s - y_spec[i];
            let mut step = self.spectrum[i].conj() * residual;
            if preconditioned {
                step /= self.abs2[i] + self.lambda;
            }
            *s -= scale * step;
        }
        let data = self.fft.inverse_real(spec);
        Ok(Image::from_raw(data, self.width, self.height))
    }

    fn filter_complex(&self, v: &[f64], f: impl Fn(usize, C64) -> C64) -> Image {
        let mut spec = self.fft.forward_real(v);
        for (i, s) in spec.iter_mut().enumerate() {
            *s = f(i, *s);
        }
        let data = self.fft.inverse_real(spec);
        Image::from_raw(data, self.width, self.height)
    }

    fn check_dims(&self, img: &Image) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::dims(format!(
                "operator is {}x{}, image is {}x{}",
                self.height,
                self.width,
                img.height(),
                img.width()
            )));
        }
        Ok(())
    }
}

impl Metric for ConvOperator {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let mut spec = self.fft.forward_real(v);
        for (i, s) in spec.iter_mut().enumerate() {
            *s *= self.q_spec[i];
        }
        out.copy_from_slice(&self.fft.inverse_real(spec));
    }

    fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        let mut spec = self.fft.forward_real(v);
        for (i, s) in spec.iter_mut().enumerate() {
            *s /= self.q_spec[i];
        }
        out.copy_from_slice(&self.fft.inverse_real(spec));
    }

    fn norm(&self) -> f64 {
        self.q_norm()
    }

    fn dim(&self) -> usize {
        self.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Image {
        Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
    }

    fn dot(a: &Image, b: &Image) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
    }

    /// O(n k) spatial-domain circular convolution, the oracle for the
    /// spectral path.
    fn spatial_circular_conv(x: &Image, psf: &Psf) -> Image {
        let (w, h) = (x.width(), x.height());
        let (ar, ac) = psf.anchor();
        Image::from_fn(w, h, |r, c| {
            let mut acc = 0.0;
            for kr in 0..psf.rows() {
                for kc in 0..psf.cols() {
                    let sr = (r + h + ar - kr) % h;
                    let sc = (c + w + ac - kc) % w;
                    acc += psf.get(kr, kc) * x.get(sr, sc);
                }
            }
            acc
        })
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let op = ConvOperator::build(&Psf::delta(), 8, 6).unwrap();
        let x = random_image(8, 6, &mut rng);
        let fwd = op.apply_forward(&x).unwrap();
        let adj = op.apply_adjoint(&x).unwrap();
        for i in 0..x.len() {
            assert!((fwd.as_slice()[i] - x.as_slice()[i]).abs() < 1e-12);
            assert!((adj.as_slice()[i] - x.as_slice()[i]).abs() < 1e-12);
        }
        assert!((op.spectral_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_kernel_dc_gain() {
        let psf = Psf::centered(vec![1.0; 9], 3, 3).unwrap();
        let op = ConvOperator::build(&psf, 8, 8).unwrap();
        let x = Image::constant(8, 8, 2.5);
        let y = op.apply_forward(&x).unwrap();
        for &v in y.as_slice() {
            assert!((v - 22.5).abs() < 1e-10);
        }
        assert!((op.spectral_norm() - 9.0).abs() < 1e-10);
    }

    #[test]
    fn forward_matches_spatial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let kernel: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psf = Psf::centered(kernel, 3, 5).unwrap();
        let op = ConvOperator::build(&psf, 8, 8).unwrap();
        let x = random_image(8, 8, &mut rng);
        let spectral = op.apply_forward(&x).unwrap();
        let spatial = spatial_circular_conv(&x, &psf);
        for i in 0..x.len() {
            assert!(
                (spectral.as_slice()[i] - spatial.as_slice()[i]).abs() < 1e-10,
                "pixel {i}: {} vs {}",
                spectral.as_slice()[i],
                spatial.as_slice()[i]
            );
        }
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kernel: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psf = Psf::centered(kernel, 3, 3).unwrap();
        let op = ConvOperator::build(&psf, 10, 7).unwrap();
        for _ in 0..5 {
            let x = random_image(10, 7, &mut rng);
            let r = random_image(10, 7, &mut rng);
            let lhs = dot(&op.apply_forward(&x).unwrap(), &r);
            let rhs = dot(&x, &op.apply_adjoint(&r).unwrap());
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn symmetric_kernel_is_self_adjoint() {
        // Even in both axes.
        let kernel = vec![0.5, 1.0, 0.5, 1.0, 3.0, 1.0, 0.5, 1.0, 0.5];
        let psf = Psf::centered(kernel, 3, 3).unwrap();
        let op = ConvOperator::build(&psf, 8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_image(8, 8, &mut rng);
        let fwd = op.apply_forward(&x).unwrap();
        let adj = op.apply_adjoint(&x).unwrap();
        for i in 0..x.len() {
            assert!((fwd.as_slice()[i] - adj.as_slice()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn q_of_identity_operator_is_identity() {
        let mut op = ConvOperator::build(&Psf::delta(), 6, 6).unwrap();
        op.set_lambda(0.0).unwrap();
        op.refresh_sigma2(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_image(6, 6, &mut rng);
        let qx = op.apply_q(&x).unwrap();
        for i in 0..x.len() {
            assert!((qx.as_slice()[i] - x.as_slice()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_zero_rejected_when_spectrum_vanishes() {
        // 2x1 kernel [1, -1] on an even grid has a zero at the Nyquist row.
        let psf = Psf::new(vec![1.0, -1.0], 2, 1, (0, 0)).unwrap();
        let mut op = ConvOperator::build(&psf, 4, 4).unwrap();
        assert!(op.set_lambda(0.0).is_err());
        assert!(op.set_lambda(0.1).is_ok());
    }

    #[test]
    fn q_sqrt_squares_to_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let kernel: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psf = Psf::centered(kernel, 5, 5).unwrap();
        let mut op = ConvOperator::build(&psf, 16, 16).unwrap();
        op.refresh_sigma2(0.37).unwrap();
        let x = random_image(16, 16, &mut rng);
        let twice = op.apply_q_sqrt(&op.apply_q_sqrt(&x).unwrap()).unwrap();
        let once = op.apply_q(&x).unwrap();
        for i in 0..x.len() {
            assert!((twice.as_slice()[i] - once.as_slice()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn q_is_spd_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let kernel: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psf = Psf::centered(kernel, 3, 3).unwrap();
        let mut op = ConvOperator::build(&psf, 8, 8).unwrap();
        op.refresh_sigma2(2.0).unwrap();
        for _ in 0..5 {
            let u = random_image(8, 8, &mut rng);
            let v = random_image(8, 8, &mut rng);
            let qu = op.apply_q(&u).unwrap();
            let qv = op.apply_q(&v).unwrap();
            assert!(dot(&v, &qv) > 0.0);
            assert!((dot(&u, &qv) - dot(&qu, &v)).abs() < 1e-10);
            // Linearity: Q(2u - 3v) = 2 Qu - 3 Qv.
            let mix = Image::from_raw(
                u.as_slice()
                    .iter()
                    .zip(v.as_slice())
                    .map(|(a, b)| 2.0 * a - 3.0 * b)
                    .collect(),
                8,
                8,
            );
            let qmix = op.apply_q(&mix).unwrap();
            for i in 0..qmix.len() {
                let expect = 2.0 * qu.as_slice()[i] - 3.0 * qv.as_slice()[i];
                assert!((qmix.as_slice()[i] - expect).abs() < 1e-10);
            }
        }
    }

    /// Matrix-free power iteration, the oracle for the closed-form norms.
    fn power_iteration(apply: impl Fn(&Image) -> Image, w: usize, h: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut v = random_image(w, h, &mut rng);
        let mut lambda = 0.0;
        for _ in 0..600 {
            let av = apply(&v);
            let norm = av.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
            lambda = norm;
            v = Image::from_raw(av.as_slice().iter().map(|x| x / norm).collect(), w, h);
        }
        lambda
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let kernel: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psf = Psf::centered(kernel, 5, 3).unwrap();
        let op = ConvOperator::build(&psf, 12, 12).unwrap();
        // ||H||^2 is the top eigenvalue of H^T H.
        let hth = power_iteration(
            |v| op.apply_adjoint(&op.apply_forward(v).unwrap()).unwrap(),
            12,
            12,
        );
        assert!(
            (hth.sqrt() - op.spectral_norm()).abs() < 1e-6,
            "{} vs {}",
            hth.sqrt(),
            op.spectral_norm()
        );
    }

    #[test]
    fn q_norm_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let kernel: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psf = Psf::centered(kernel, 3, 3).unwrap();
        let mut op = ConvOperator::build(&psf, 10, 10).unwrap();
        op.refresh_sigma2(0.7).unwrap();
        let norm = power_iteration(|v| op.apply_q(v).unwrap(), 10, 10);
        assert!((norm - op.q_norm()).abs() < 1e-6 * norm.max(1.0), "{norm} vs {}", op.q_norm());
    }

    #[test]
    fn q_sqrt_noise_covariance() {
        // White Gaussian input through Q^(1/2): per-frequency variance of
        // the spectrum must be n * q_f.
        let kernel = vec![0.25, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 0.25];
        let psf = Psf::centered(kernel, 3, 3).unwrap();
        let mut op = ConvOperator::build(&psf, 16, 16).unwrap();
        op.refresh_sigma2(0.9).unwrap();
        let n = op.len();
        let fft = Fft2::new(16, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let draws = 20_000;
        let mut acc = vec![0.0; n];
        let normal = rand_distr::StandardNormal;
        for _ in 0..draws {
            let w = Image::from_raw(
                (0..n).map(|_| rand_distr::Distribution::sample(&normal, &mut rng)).collect(),
                16,
                16,
            );
            let qw = op.apply_q_sqrt(&w).unwrap();
            let spec = fft.forward_real(qw.as_slice());
            for (a, s) in acc.iter_mut().zip(&spec) {
                *a += s.norm_sqr();
            }
        }
        for (i, &a) in acc.iter().enumerate() {
            let expected = n as f64 * op.q_spec[i];
            let got = a / draws as f64;
            assert!(
                (got - expected).abs() < 0.05 * expected,
                "freq {i}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn kernel_larger_than_grid_rejected() {
        let psf = Psf::centered(vec![1.0; 25], 5, 5).unwrap();
        assert!(matches!(
            ConvOperator::build(&psf, 4, 4),
            Err(Error::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn psf_text_roundtrip() {
        let psf = Psf::centered(vec![0.1, -0.2, 0.3, 0.4, 0.5, 0.6], 2, 3).unwrap();
        let parsed = Psf::parse(&psf.to_text()).unwrap();
        assert_eq!(psf.rows(), parsed.rows());
        assert_eq!(psf.cols(), parsed.cols());
        for (a, b) in psf.kernel().iter().zip(parsed.kernel()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn psf_parse_rejects_garbage() {
        assert!(Psf::parse("").is_err());
        assert!(Psf::parse("1 2\n3").is_err());
        assert!(Psf::parse("1 x").is_err());
        assert!(Psf::parse("0 0\n0 0").is_err());
    }
}
