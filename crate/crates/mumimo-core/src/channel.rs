//! Channel synthesis: AOD sampling, spatial correlation, link gains, Rician
//! fading, block channel assembly, CSI corruption and the CSI error
//! covariance.
//!
//! The channel of one drop is the block matrix whose (n, k) block is
//! `beta[n][k]^(1/2) * Rt^(1/2) * H[n][k]`, with `Rt` the per-cluster
//! cross-polarized spatial correlation matrix and `H[n][k]` an i.i.d. Rician
//! fading vector.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::array_geometry::{ClusterLayout, ElementLayout, UserDrop};
use crate::{db_to_linear, Error, Result};

/// Angle-of-departure distribution of one propagation condition.
///
/// Azimuth offsets are wrapped Gaussian, zenith offsets Laplacian; both
/// standard deviations are scaled by `spread_multiplier`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AodSpec {
    pub mean_azimuth_deg: f64,
    pub mean_zenith_deg: f64,
    pub sd_azimuth_deg: f64,
    pub sd_zenith_deg: f64,
    pub spread_multiplier: f64,
    /// True when the parameters describe the LOS row.
    pub los: bool,
}

impl AodSpec {
    /// 3GPP 3D channel model NLOS parameter row.
    pub fn nlos_3gpp() -> Self {
        Self {
            mean_azimuth_deg: 74.13,
            mean_zenith_deg: 18.20,
            sd_azimuth_deg: 1.29,
            sd_zenith_deg: 1.45,
            spread_multiplier: 1.0,
            los: false,
        }
    }

    /// 3GPP 3D channel model LOS parameter row.
    pub fn los_3gpp() -> Self {
        Self {
            mean_azimuth_deg: 64.57,
            mean_zenith_deg: 8.91,
            sd_azimuth_deg: 1.58,
            sd_zenith_deg: 1.45,
            spread_multiplier: 1.0,
            los: true,
        }
    }

    pub fn with_spread_multiplier(mut self, mult: f64) -> Self {
        self.spread_multiplier = mult;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sd_azimuth_deg < 0.0 || self.sd_zenith_deg < 0.0 {
            return Err(Error::InvalidArgument("AOD SDs must be >= 0".into()));
        }
        if !(self.spread_multiplier > 0.0) {
            return Err(Error::InvalidArgument(
                "spread multiplier must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
fn wrap_to_pi(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Draw one (azimuth, zenith) AOD offset pair in radians.
pub fn sample_aod<R: Rng + ?Sized>(spec: &AodSpec, rng: &mut R) -> (f64, f64) {
    let sd_az = (spec.sd_azimuth_deg * spec.spread_multiplier).to_radians();
    let sd_zn = (spec.sd_zenith_deg * spec.spread_multiplier).to_radians();
    let d_phi = if sd_az > 0.0 {
        wrap_to_pi(Normal::new(0.0, sd_az).expect("valid sd").sample(rng))
    } else {
        0.0
    };
    // Laplacian with SD s has scale b = s / sqrt(2); inverse-CDF sampling.
    let d_theta = if sd_zn > 0.0 {
        let b = sd_zn / std::f64::consts::SQRT_2;
        let u: f64 = rng.random::<f64>() - 0.5;
        -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    } else {
        0.0
    };
    (d_phi, d_theta)
}

/// Azimuth and zenith phase shifts of an element at in-plane distance `d_p`
/// and axial distance `d_q` from the reference element, for one AOD draw.
/// `wavenumber` is in rad/m.
pub fn phase_shift(
    d_p: f64,
    d_q: f64,
    d_phi: f64,
    d_theta: f64,
    spec: &AodSpec,
    wavenumber: f64,
) -> (f64, f64) {
    let az = spec.mean_azimuth_deg.to_radians() + d_phi;
    let zn = spec.mean_zenith_deg.to_radians() + d_theta;
    let phi_p = wavenumber * d_p * az.cos() * zn.sin();
    let theta_q = wavenumber * d_q * zn.cos();
    (phi_p, theta_q)
}

/// Monte Carlo estimate of the co-polarized spatial correlation matrix of a
/// cluster layout: `R = E[a a^H]` over AOD draws, where element m's steering
/// coefficient is `a_m = exp(-j(Phi_m + Theta_m))`. The diagonal is exactly 1.
pub fn build_correlation<R: Rng + ?Sized>(
    layout: &ElementLayout,
    spec: &AodSpec,
    wavenumber: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    if n_mc == 0 {
        return Err(Error::InvalidArgument("n_mc must be >= 1".into()));
    }
    if !(wavenumber > 0.0) {
        return Err(Error::InvalidArgument("wavenumber must be positive".into()));
    }
    spec.validate()?;
    let m = layout.n_elements();
    let reference = layout.positions[0];
    // Element offsets from the reference. The steering phase is the
    // plane-wave projection of the offset onto the departure direction; for
    // a planar layout (y = 0) this reduces to the separable
    // k*d_p*cos(az)*sin(zn) + k*d_q*cos(zn) form, and it stays exact for
    // curved layouts like the cylinder where the in-plane offset is not
    // aligned with the x axis.
    let offsets: Vec<[f64; 3]> = layout
        .positions
        .iter()
        .map(|p| {
            [
                p[0] - reference[0],
                p[1] - reference[1],
                p[2] - reference[2],
            ]
        })
        .collect();

    let mut steering = DMatrix::<Complex64>::zeros(m, n_mc);
    for t in 0..n_mc {
        let (d_phi, d_theta) = sample_aod(spec, rng);
        let az = spec.mean_azimuth_deg.to_radians() + d_phi;
        let zn = spec.mean_zenith_deg.to_radians() + d_theta;
        let ux = wavenumber * az.cos() * zn.sin();
        let uy = wavenumber * az.sin() * zn.sin();
        let uz = wavenumber * zn.cos();
        for i in 0..m {
            let phase = ux * offsets[i][0] + uy * offsets[i][1] + uz * offsets[i][2];
            steering[(i, t)] = Complex64::from_polar(1.0, -phase);
        }
    }
    let mut r = &steering * steering.adjoint();
    r /= Complex64::new(n_mc as f64, 0.0);
    // Hermitize and pin the diagonal; |a_m| = 1 makes it 1 up to rounding.
    for i in 0..m {
        r[(i, i)] = Complex64::new(1.0, 0.0);
        for j in 0..i {
            let avg = 0.5 * (r[(i, j)] + r[(j, i)].conj());
            r[(i, j)] = avg;
            r[(j, i)] = avg.conj();
        }
    }
    Ok(r)
}

/// Cross-polarized per-cluster correlation matrix with its cached PSD square
/// root.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    rt: DMatrix<Complex64>,
    sqrt: DMatrix<Complex64>,
    delta: f64,
}

impl CorrelationMatrix {
    /// Identity correlation (the "i.i.d. channel" switch).
    pub fn identity(dim: usize) -> Self {
        Self {
            rt: DMatrix::identity(dim, dim),
            sqrt: DMatrix::identity(dim, dim),
            delta: 1.0,
        }
    }

    pub fn rt(&self) -> &DMatrix<Complex64> {
        &self.rt
    }

    pub fn sqrt(&self) -> &DMatrix<Complex64> {
        &self.sqrt
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.rt.nrows()
    }
}

/// Eigenvalues this far below zero (relative to the largest) are treated as
/// rounding noise and clamped; anything worse signals a broken estimator.
const PSD_CLAMP_TOL: f64 = 1e-10;

/// Apply the x-pol coupling `Xpol ⊙ R` (same-parity entries untouched,
/// opposite-parity entries scaled by sqrt(delta)) and cache the PSD square
/// root via Hermitian eigendecomposition.
pub fn apply_xpol(r: &DMatrix<Complex64>, delta: f64) -> Result<CorrelationMatrix> {
    let m = r.nrows();
    if m != r.ncols() || m % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "co-pol matrix must be square with even dimension, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "x-pol delta must be in [0, 1], got {delta}"
        )));
    }
    let sqrt_delta = delta.sqrt();
    let mut rt = r.clone();
    for i in 0..m {
        for j in 0..m {
            if (i % 2) != (j % 2) {
                rt[(i, j)] *= sqrt_delta;
            }
        }
    }

    let eig = nalgebra::linalg::SymmetricEigen::new(rt.clone());
    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let clamp_floor = -PSD_CLAMP_TOL * lambda_max.max(1.0);
    let mut clamped = DVector::<f64>::zeros(m);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < clamp_floor {
            return Err(Error::DegenerateInput(format!(
                "correlation matrix is not PSD: eigenvalue {lam:.3e}"
            )));
        }
        clamped[i] = lam.max(0.0);
    }
    let sqrt_diag = DMatrix::from_diagonal(
        &clamped.map(|lam| Complex64::new(lam.sqrt(), 0.0)),
    );
    let sqrt = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.adjoint();
    Ok(CorrelationMatrix { rt, sqrt, delta })
}

/// Large-scale link gain model parameters.
#[derive(Debug, Clone, Copy)]
pub struct LinkGainSpec {
    pub shadow_sd_db: f64,
    pub pathloss_exponent: f64,
    pub beta_max_db: f64,
}

impl Default for LinkGainSpec {
    fn default() -> Self {
        Self { shadow_sd_db: 8.0, pathloss_exponent: 4.0, beta_max_db: 25.0 }
    }
}

/// N x K matrix of linear-scale link gains, normalized so the maximum entry
/// equals `beta_max`.
#[derive(Debug, Clone)]
pub struct LinkGainMatrix {
    pub beta: DMatrix<f64>,
}

impl LinkGainMatrix {
    pub fn n_clusters(&self) -> usize {
        self.beta.nrows()
    }

    pub fn k_users(&self) -> usize {
        self.beta.ncols()
    }

    pub fn column(&self, user: usize) -> Vec<f64> {
        self.beta.column(user).iter().cloned().collect()
    }
}

/// Distance-based path loss `d^(-gamma)` with i.i.d. dB-domain log-normal
/// shadowing, scaled per drop so the largest gain is exactly `beta_max`.
pub fn link_gains<R: Rng + ?Sized>(
    clusters: &ClusterLayout,
    users: &UserDrop,
    spec: &LinkGainSpec,
    rng: &mut R,
) -> Result<LinkGainMatrix> {
    let n = clusters.centers.len();
    let k = users.positions.len();
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument("empty cluster layout or user drop".into()));
    }
    if spec.shadow_sd_db < 0.0 || !(spec.pathloss_exponent > 0.0) {
        return Err(Error::InvalidArgument("invalid link gain spec".into()));
    }
    let distances = users.distances_to(clusters);
    let mut beta = DMatrix::<f64>::zeros(n, k);
    for ni in 0..n {
        for ki in 0..k {
            let d = distances[ni][ki];
            if d <= 0.0 {
                return Err(Error::InvalidArgument(
                    "zero link distance; user coincides with a cluster".into(),
                ));
            }
            let shadow_db = if spec.shadow_sd_db > 0.0 {
                Normal::new(0.0, spec.shadow_sd_db).expect("valid sd").sample(rng)
            } else {
                0.0
            };
            beta[(ni, ki)] = db_to_linear(shadow_db) * d.powf(-spec.pathloss_exponent);
        }
    }
    let beta_max = db_to_linear(spec.beta_max_db);
    let (mut arg, mut max) = ((0, 0), f64::NEG_INFINITY);
    for ni in 0..n {
        for ki in 0..k {
            if beta[(ni, ki)] > max {
                max = beta[(ni, ki)];
                arg = (ni, ki);
            }
        }
    }
    beta *= beta_max / max;
    beta[arg] = beta_max; // exact after normalization
    Ok(LinkGainMatrix { beta })
}

/// Rician fading parameters.
#[derive(Debug, Clone, Copy)]
pub struct RicianSpec {
    pub k_factor: f64,
}

impl RicianSpec {
    pub fn new(k_factor: f64) -> Result<Self> {
        if k_factor < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Rician K-factor must be >= 0, got {k_factor}"
            )));
        }
        Ok(Self { k_factor })
    }
}

#[inline]
fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / std::f64::consts::SQRT_2
}

/// One i.i.d. Rician fading vector: diffuse CN(0,1) part plus a deterministic
/// all-ones LOS part, weighted so the per-entry second moment stays 1.
pub fn fading_block<R: Rng + ?Sized>(
    m_per_cluster: usize,
    spec: &RicianSpec,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    if m_per_cluster == 0 {
        return Err(Error::InvalidArgument("m_per_cluster must be >= 1".into()));
    }
    let nlos_scale = (1.0 / (spec.k_factor + 1.0)).sqrt();
    let los = Complex64::new((spec.k_factor / (1.0 + spec.k_factor)).sqrt(), 0.0);
    Ok(DVector::from_fn(m_per_cluster, |_, _| {
        nlos_scale * standard_complex_gaussian(rng) + los
    }))
}

/// Fading vectors for every (cluster, user) block of one realization,
/// indexed `n * k_users + k`.
#[derive(Debug, Clone)]
pub struct FadingBlocks {
    pub n_clusters: usize,
    pub k_users: usize,
    pub m_per_cluster: usize,
    pub blocks: Vec<DVector<Complex64>>,
}

impl FadingBlocks {
    pub fn block(&self, n: usize, k: usize) -> &DVector<Complex64> {
        &self.blocks[n * self.k_users + k]
    }
}

pub fn draw_fading<R: Rng + ?Sized>(
    n_clusters: usize,
    k_users: usize,
    m_per_cluster: usize,
    spec: &RicianSpec,
    rng: &mut R,
) -> Result<FadingBlocks> {
    let mut blocks = Vec::with_capacity(n_clusters * k_users);
    for _ in 0..n_clusters * k_users {
        blocks.push(fading_block(m_per_cluster, spec, rng)?);
    }
    Ok(FadingBlocks { n_clusters, k_users, m_per_cluster, blocks })
}

/// The M x K block channel matrix of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub g: DMatrix<Complex64>,
    pub n_clusters: usize,
}

impl ChannelMatrix {
    pub fn m_total(&self) -> usize {
        self.g.nrows()
    }

    pub fn k_users(&self) -> usize {
        self.g.ncols()
    }
}

/// Compose link gains, correlation shaping and fading into the block channel:
/// block (n, k) is `beta[n][k]^(1/2) * Rt^(1/2) * H[n][k]`.
pub fn assemble_channel(
    beta: &LinkGainMatrix,
    corr: &CorrelationMatrix,
    blocks: &FadingBlocks,
) -> Result<ChannelMatrix> {
    let n = beta.n_clusters();
    let k = beta.k_users();
    let mpc = blocks.m_per_cluster;
    if blocks.n_clusters != n || blocks.k_users != k {
        return Err(Error::InvalidArgument(format!(
            "fading blocks are {}x{}, link gains {}x{}",
            blocks.n_clusters, blocks.k_users, n, k
        )));
    }
    if corr.dim() != mpc {
        return Err(Error::InvalidArgument(format!(
            "correlation dimension {} != per-cluster element count {}",
            corr.dim(),
            mpc
        )));
    }
    let mut g = DMatrix::<Complex64>::zeros(n * mpc, k);
    for ki in 0..k {
        for ni in 0..n {
            let scale = Complex64::new(beta.beta[(ni, ki)].sqrt(), 0.0);
            let shaped = corr.sqrt() * blocks.block(ni, ki);
            for mi in 0..mpc {
                g[(ni * mpc + mi, ki)] = scale * shaped[mi];
            }
        }
    }
    Ok(ChannelMatrix { g, n_clusters: n })
}

/// Corrupt the channel estimate: `Ghat = xi * G + sqrt(1 - xi^2) * E`, with
/// `E` statistically identical to `G` (same link gains and correlation, fresh
/// fading). `xi = 1` returns `G` unchanged.
pub fn corrupt_csi<R: Rng + ?Sized>(
    g: &ChannelMatrix,
    beta: &LinkGainMatrix,
    corr: &CorrelationMatrix,
    rician: &RicianSpec,
    xi: f64,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidArgument(format!(
            "CSI accuracy xi must be in [0, 1], got {xi}"
        )));
    }
    if xi == 1.0 {
        return Ok(g.clone());
    }
    let mpc = g.m_total() / g.n_clusters;
    let blocks = draw_fading(g.n_clusters, g.k_users(), mpc, rician, rng)?;
    let e = assemble_channel(beta, corr, &blocks)?;
    let xi_c = Complex64::new(xi, 0.0);
    let err_c = Complex64::new((1.0 - xi * xi).sqrt(), 0.0);
    Ok(ChannelMatrix {
        g: &g.g * xi_c + &e.g * err_c,
        n_clusters: g.n_clusters,
    })
}

/// Block-diagonal CSI error covariance of one user: block n is
/// `beta[n][i] * conj(Rt)`.
#[derive(Debug, Clone)]
pub struct ErrorCovariance {
    pub p: DMatrix<Complex64>,
    pub trace: f64,
}

pub fn error_covariance(beta_col: &[f64], corr: &CorrelationMatrix) -> ErrorCovariance {
    let n = beta_col.len();
    let mpc = corr.dim();
    let mut p = DMatrix::<Complex64>::zeros(n * mpc, n * mpc);
    for (ni, &b) in beta_col.iter().enumerate() {
        let scale = Complex64::new(b, 0.0);
        for i in 0..mpc {
            for j in 0..mpc {
                p[(ni * mpc + i, ni * mpc + j)] = scale * corr.rt()[(i, j)].conj();
            }
        }
    }
    // diag(Rt) = 1, so the trace has this closed form exactly.
    let trace = mpc as f64 * beta_col.iter().sum::<f64>();
    ErrorCovariance { p, trace }
}
