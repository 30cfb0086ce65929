//! Seeded samplers for the laws used in the simulation study.
//!
//! Every sampler draws from a [`StreamRng`] obtained from an [`RngStream`]
//! descriptor. A stream is a ChaCha8 generator keyed by `seed` and positioned
//! on stream `stream_id`, so replication `r` can own stream `r` and produce
//! the same draws no matter which worker runs it.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn into_rng(self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Law of the radial variable `ζ` in `μ + ζ A U`.
#[derive(Debug, Clone, Copy)]
pub enum Radial {
    /// `ζ ~ chi(q)`, which makes `ζ U` standard Gaussian in `R^q`.
    GaussianEquivalent,
    /// `ζ = chi(q) · sqrt(ν / χ²_ν)`: multivariate t with `ν` degrees of freedom.
    StudentT(f64),
    Constant(f64),
    Custom(fn(&mut StreamRng) -> f64),
}

/// An elliptical law `μ + ζ A U` with `U` uniform on the unit sphere of `R^q`.
#[derive(Debug, Clone)]
pub struct EllipticalSpec {
    /// `dim x q` matrix `A` with `A Aᵀ = Σ`.
    pub shape_root: Array2<f64>,
    pub radial: Radial,
    pub location: Array1<f64>,
}

impl EllipticalSpec {
    pub fn new(shape_root: Array2<f64>, radial: Radial, location: Array1<f64>) -> Result<Self> {
        if shape_root.nrows() != location.len() || shape_root.ncols() == 0 {
            return Err(Error::invalid("shape root and location dimensions disagree"));
        }
        if let Radial::StudentT(nu) = radial {
            if !(nu > 0.0) {
                return Err(Error::invalid(format!("degrees of freedom must be positive, got {nu}")));
            }
        }
        Ok(Self { shape_root, radial, location })
    }

    pub fn centered(shape_root: Array2<f64>, radial: Radial) -> Result<Self> {
        let dim = shape_root.nrows();
        Self::new(shape_root, radial, Array1::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.shape_root.nrows()
    }
}

/// Uniform draw from the unit sphere in `R^dim`.
pub fn sample_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array1<f64> {
    assert!(dim >= 1, "sphere dimension must be positive");
    loop {
        let g: Array1<f64> = Array1::from_shape_fn(dim, |_| StandardNormal.sample(rng));
        let norm = g.dot(&g).sqrt();
        if norm > 0.0 {
            return g / norm;
        }
    }
}

fn chi<R: Rng + ?Sized>(k: usize, rng: &mut R) -> f64 {
    let chi2 = ChiSquared::new(k as f64).expect("positive degrees of freedom");
    chi2.sample(rng).sqrt()
}

fn chi_square<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> f64 {
    ChiSquared::new(nu).expect("positive degrees of freedom").sample(rng)
}

/// `n` independent rows `μ + ζ_t A u_t`.
pub fn sample_elliptical(spec: &EllipticalSpec, n: usize, rng: &mut StreamRng) -> Array2<f64> {
    let q = spec.shape_root.ncols();
    let mut out = Array2::zeros((n, spec.dim()));
    for mut row in out.rows_mut() {
        let u = sample_sphere(q, rng);
        let zeta = match spec.radial {
            Radial::GaussianEquivalent => chi(q, rng),
            Radial::StudentT(nu) => chi(q, rng) * (nu / chi_square(nu, rng)).sqrt(),
            Radial::Constant(c) => c,
            Radial::Custom(f) => f(rng),
        };
        let x = spec.shape_root.dot(&u) * zeta + &spec.location;
        row.assign(&x);
    }
    out
}

/// Symmetric square root-type factor `A` with `A Aᵀ = Σ` for PSD `Σ`
/// (eigenvalues within roundoff of zero are clamped).
pub fn psd_root(sigma: &SymMatrix) -> Result<Array2<f64>> {
    let eig = sym_eig(sigma)?;
    let top = eig.values[0].abs().max(1.0);
    if eig.values.iter().any(|&l| l < -1e-8 * top) {
        return Err(Error::invalid("scatter matrix is not positive semidefinite"));
    }
    let roots = eig.values.mapv(|l| l.max(0.0).sqrt());
    Ok(&eig.vectors * &roots.view().insert_axis(Axis(0)))
}

fn gaussian_rows(root: &Array2<f64>, n: usize, rng: &mut StreamRng) -> Array2<f64> {
    let q = root.ncols();
    let g: Array2<f64> = Array2::from_shape_fn((n, q), |_| StandardNormal.sample(rng));
    g.dot(&root.t())
}

/// Multivariate t rows `Z · sqrt(ν / w)` with `Z ~ N(0, Σ)` and `w ~ χ²_ν`.
pub fn sample_mvt(nu: f64, sigma: &SymMatrix, n: usize, rng: &mut StreamRng) -> Result<Array2<f64>> {
    if !(nu > 0.0) {
        return Err(Error::invalid(format!("degrees of freedom must be positive, got {nu}")));
    }
    let root = psd_root(sigma)?;
    Ok(mvt_rows(nu, &root, n, rng))
}

pub(crate) fn mvt_rows(nu: f64, root: &Array2<f64>, n: usize, rng: &mut StreamRng) -> Array2<f64> {
    let mut z = gaussian_rows(root, n, rng);
    for mut row in z.rows_mut() {
        let scale = (nu / chi_square(nu, rng)).sqrt();
        row.mapv_inplace(|x| x * scale);
    }
    z
}

/// Precomputed pieces of a multivariate skew-t law in the direct
/// parameterization `ST(ξ, Ω, α, ν)`.
#[derive(Debug, Clone)]
pub struct SkewT {
    xi: Array1<f64>,
    omega_scale: Array1<f64>,
    delta: Array1<f64>,
    residual_root: Array2<f64>,
    nu: f64,
}

impl SkewT {
    pub fn new(xi: ArrayView1<'_, f64>, omega: &SymMatrix, alpha: ArrayView1<'_, f64>, nu: f64) -> Result<Self> {
        let d = omega.dim();
        if xi.len() != d || alpha.len() != d {
            return Err(Error::invalid("skew-t location, scatter and shape dimensions disagree"));
        }
        if !(nu > 0.0) {
            return Err(Error::invalid(format!("degrees of freedom must be positive, got {nu}")));
        }
        let omega_scale = Array1::from_shape_fn(d, |i| omega[[i, i]].sqrt());
        if omega_scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("skew-t scatter must have a positive diagonal"));
        }
        let corr = Array2::from_shape_fn((d, d), |(i, j)| omega[[i, j]] / (omega_scale[i] * omega_scale[j]));
        let corr_alpha = corr.dot(&alpha);
        let delta = &corr_alpha / (1.0 + alpha.dot(&corr_alpha)).sqrt();
        // Z ~ N(0, Ω̄ - δδᵀ) so that (|W0|, Z) reproduces the hidden-truncation
        // representation with Corr(X0, X) = δ.
        let outer = delta.view().insert_axis(Axis(1)).dot(&delta.view().insert_axis(Axis(0)));
        let residual = SymMatrix::from_upper(corr - outer);
        crate::linalg::cholesky(&residual).map_err(|_| Error::invalid("skew-t scatter must be positive definite"))?;
        let residual_root = psd_root(&residual)?;
        Ok(Self { xi: xi.to_owned(), omega_scale, delta, residual_root, nu })
    }

    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> Array2<f64> {
        let mut x = gaussian_rows(&self.residual_root, n, rng);
        for mut row in x.rows_mut() {
            let w0: f64 = StandardNormal.sample(rng);
            row.scaled_add(w0.abs(), &self.delta);
            let scale = (self.nu / chi_square(self.nu, rng)).sqrt();
            row.zip_mut_with(&self.omega_scale, |v, s| *v *= s * scale);
            row += &self.xi;
        }
        x
    }
}

/// Multivariate skew-t rows `ξ + ω X / sqrt(w/ν)` with `X` skew-normal
/// (hidden truncation) and `w ~ χ²_ν`.
pub fn sample_skewed_t(
    xi: ArrayView1<'_, f64>,
    omega: &SymMatrix,
    alpha: ArrayView1<'_, f64>,
    nu: f64,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Array2<f64>> {
    Ok(SkewT::new(xi, omega, alpha, nu)?.sample(n, rng))
}

/// One draw from `S_α(β, γ, δ)` by the Chambers-Mallows-Stuck transform.
/// At `α = 2` this is Gaussian with variance `2γ²`.
pub fn alpha_stable_draw<R: Rng + ?Sized>(alpha: f64, beta: f64, gamma: f64, delta: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    if alpha == 1.0 {
        let a = FRAC_PI_2 + beta * v;
        let x = (a * v.tan() - beta * (FRAC_PI_2 * w * v.cos() / a).ln()) / FRAC_PI_2;
        gamma * x + FRAC_PI_2.recip() * beta * gamma * gamma.ln() + delta
    } else {
        let t = beta * (PI * alpha / 2.0).tan();
        let b = t.atan() / alpha;
        let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
        let x = s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
            * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
        gamma * x + delta
    }
}

pub fn sample_alpha_stable(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Array1<f64>> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid(format!("stability index must lie in (0, 2], got {alpha}")));
    }
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("skewness must lie in [-1, 1], got {beta}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("scale must be positive, got {gamma}")));
    }
    Ok(Array1::from_shape_fn(n, |_| alpha_stable_draw(alpha, beta, gamma, delta, rng)))
}
