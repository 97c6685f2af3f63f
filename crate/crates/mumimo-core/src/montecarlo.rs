//! Scenario orchestration: per-trial seed discipline, correlation caching,
//! experiment runs, empirical CDFs and parameter sweeps.
//!
//! Everything is deterministic given `(config, master_seed)`: each random
//! stage of each trial draws from its own derived RNG stream, so results do
//! not depend on execution order or worker count. Sweeps reuse the base
//! master seed for every value (common random numbers), so paired medians
//! compare like for like.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::array_geometry::{
    build_layout, place_clusters, ArrayTopology, ClusterLayout, CoverageRegion,
};
use crate::channel::{
    assemble_channel, apply_xpol, build_correlation, corrupt_csi, draw_fading,
    error_covariance, link_gains, AodSpec, ChannelMatrix, CorrelationMatrix,
    ErrorCovariance, LinkGainSpec, RicianSpec,
};
use crate::precoding::{
    mf_expected_sinr, zf_expected_snr, zf_normalization, MetricVector, TransmitConfig,
};
use crate::seed::stream;
use crate::{db_to_linear, Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    /// Spatial correlation synthesized from the array geometry.
    Correlated,
    /// Identity correlation: the uncorrelated i.i.d. fading baseline.
    Iid,
}

/// Full description of one simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m_total: usize,
    pub k_users: usize,
    pub n_clusters: usize,
    pub topology: ArrayTopology,
    pub correlation_mode: CorrelationMode,
    pub frequency_hz: f64,
    /// Array dimension l, meters.
    pub array_dim_m: f64,
    pub tx_snr_db: f64,
    pub shadow_sd_db: f64,
    pub pathloss_exponent: f64,
    pub beta_max_db: f64,
    pub xpol_delta: f64,
    pub xi: f64,
    pub k_factor: f64,
    pub spread_multiplier: f64,
    /// Select the LOS AOD parameter row instead of NLOS.
    pub los: bool,
    pub region_radius_m: f64,
    pub exclusion_radius_m: f64,
    /// Azimuth-plane x-pol pair count per cluster; the zenith-axis count
    /// follows from M, N and this.
    pub p_pairs: usize,
    /// AOD draws averaged into the correlation estimate.
    pub n_corr_draws: usize,
    pub n_trials: usize,
    pub fading_draws_per_drop: usize,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let frequency_hz = 2.6e9;
        let lambda = SPEED_OF_LIGHT / frequency_hz;
        Self {
            m_total: 256,
            k_users: 8,
            n_clusters: 1,
            topology: ArrayTopology::Ura,
            correlation_mode: CorrelationMode::Correlated,
            frequency_hz,
            array_dim_m: 2.0 * lambda,
            tx_snr_db: 10.0,
            shadow_sd_db: 8.0,
            pathloss_exponent: 4.0,
            beta_max_db: 25.0,
            xpol_delta: 0.01,
            xi: 1.0,
            k_factor: 0.0,
            spread_multiplier: 1.0,
            los: false,
            region_radius_m: 1000.0,
            exclusion_radius_m: 50.0,
            p_pairs: 8,
            n_corr_draws: 10_000,
            n_trials: 500,
            fading_draws_per_drop: 1,
            master_seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength()
    }

    pub fn m_per_cluster(&self) -> usize {
        self.m_total / self.n_clusters
    }

    /// Zenith-axis pair count per cluster under a fixed form factor: the
    /// azimuth pair count stays at `p_pairs`, the column height shrinks with
    /// the cluster count.
    pub fn q_pairs(&self) -> usize {
        self.m_per_cluster() / (2 * self.p_pairs)
    }

    /// AOD distribution for this scenario: Table row by LOS flag, SDs scaled
    /// by the spread multiplier.
    pub fn aod(&self) -> AodSpec {
        let row = if self.los { AodSpec::los_3gpp() } else { AodSpec::nlos_3gpp() };
        row.with_spread_multiplier(self.spread_multiplier)
    }

    pub fn link_gain_spec(&self) -> LinkGainSpec {
        LinkGainSpec {
            shadow_sd_db: self.shadow_sd_db,
            pathloss_exponent: self.pathloss_exponent,
            beta_max_db: self.beta_max_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(Error::InvalidArgument("n_clusters must be >= 1".into()));
        }
        if self.m_total % (2 * self.n_clusters) != 0 {
            return Err(Error::InvalidArgument(format!(
                "M must be divisible by 2N for x-pol pairs per cluster: M={}, N={}",
                self.m_total, self.n_clusters
            )));
        }
        if self.p_pairs == 0 || self.m_per_cluster() % (2 * self.p_pairs) != 0 {
            return Err(Error::InvalidArgument(format!(
                "per-cluster pair count M/2N = {} must be divisible by p_pairs = {}",
                self.m_per_cluster() / 2,
                self.p_pairs
            )));
        }
        if self.k_users == 0 || self.k_users >= self.m_total {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= K < M, got K={}, M={}",
                self.k_users, self.m_total
            )));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::InvalidArgument(format!("xi must be in [0, 1], got {}", self.xi)));
        }
        if !(0.0..=1.0).contains(&self.xpol_delta) {
            return Err(Error::InvalidArgument(format!(
                "xpol_delta must be in [0, 1], got {}",
                self.xpol_delta
            )));
        }
        if self.k_factor < 0.0 {
            return Err(Error::InvalidArgument("k_factor must be >= 0".into()));
        }
        if !(self.spread_multiplier > 0.0) {
            return Err(Error::InvalidArgument("spread_multiplier must be positive".into()));
        }
        if !(self.frequency_hz > 0.0) || !(self.array_dim_m > 0.0) {
            return Err(Error::InvalidArgument("frequency and array dimension must be positive".into()));
        }
        if !(self.exclusion_radius_m > 0.0 && self.exclusion_radius_m < self.region_radius_m) {
            return Err(Error::InvalidArgument(
                "need 0 < exclusion_radius_m < region_radius_m".into(),
            ));
        }
        if self.n_corr_draws == 0 || self.n_trials == 0 || self.fading_draws_per_drop == 0 {
            return Err(Error::InvalidArgument(
                "n_corr_draws, n_trials and fading_draws_per_drop must be >= 1".into(),
            ));
        }
        if !(db_to_linear(self.tx_snr_db) > 0.0) {
            return Err(Error::InvalidArgument("transmit SNR out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CorrKey {
    topology: ArrayTopology,
    q_pairs: usize,
    p_pairs: usize,
    l_bits: u64,
    wavenumber_bits: u64,
    mean_az_bits: u64,
    mean_zn_bits: u64,
    sd_az_bits: u64,
    sd_zn_bits: u64,
    mult_bits: u64,
    delta_bits: u64,
    n_mc: usize,
    master_seed: u64,
}

impl CorrKey {
    fn of(cfg: &ScenarioConfig) -> Self {
        let aod = cfg.aod();
        Self {
            topology: cfg.topology,
            q_pairs: cfg.q_pairs(),
            p_pairs: cfg.p_pairs,
            l_bits: cfg.array_dim_m.to_bits(),
            wavenumber_bits: cfg.wavenumber().to_bits(),
            mean_az_bits: aod.mean_azimuth_deg.to_bits(),
            mean_zn_bits: aod.mean_zenith_deg.to_bits(),
            sd_az_bits: aod.sd_azimuth_deg.to_bits(),
            sd_zn_bits: aod.sd_zenith_deg.to_bits(),
            mult_bits: aod.spread_multiplier.to_bits(),
            delta_bits: cfg.xpol_delta.to_bits(),
            n_mc: cfg.n_corr_draws,
            master_seed: cfg.master_seed,
        }
    }
}

/// Memoizes correlation matrices per (topology, AOD spec, layout) so repeated
/// trials and sweep values reuse one estimate. Counters expose cache behavior
/// for assertions.
#[derive(Debug, Default)]
pub struct CorrelationCache {
    map: Mutex<HashMap<CorrKey, Arc<CorrelationMatrix>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl CorrelationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    fn get_or_build(&self, cfg: &ScenarioConfig) -> Result<Arc<CorrelationMatrix>> {
        let key = CorrKey::of(cfg);
        if let Some(found) = self.map.lock().unwrap().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::clone(found));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let layout = build_layout(cfg.topology, cfg.q_pairs(), cfg.p_pairs, cfg.array_dim_m)?;
        // Fixed sub-seed: the correlation estimate is shared by all trials.
        let mut rng = stream(cfg.master_seed, 0, "correlation");
        let co_pol =
            build_correlation(&layout, &cfg.aod(), cfg.wavenumber(), cfg.n_corr_draws, &mut rng)?;
        let corr = Arc::new(apply_xpol(&co_pol, cfg.xpol_delta)?);
        self.map.lock().unwrap().insert(key, Arc::clone(&corr));
        Ok(corr)
    }
}

/// One prepared scenario: validated config plus the shared per-cluster
/// correlation matrix and cluster placement.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub region: CoverageRegion,
    pub clusters: ClusterLayout,
    pub corr: Arc<CorrelationMatrix>,
}

impl Scenario {
    pub fn prepare(cfg: &ScenarioConfig, cache: &CorrelationCache) -> Result<Self> {
        cfg.validate()?;
        let region = CoverageRegion::new(cfg.region_radius_m, cfg.exclusion_radius_m)?;
        let clusters = place_clusters(cfg.n_clusters, &region)?;
        let corr = match cfg.correlation_mode {
            CorrelationMode::Correlated => cache.get_or_build(cfg)?,
            CorrelationMode::Iid => Arc::new(CorrelationMatrix::identity(cfg.m_per_cluster())),
        };
        Ok(Self { cfg: cfg.clone(), region, clusters, corr })
    }

    /// Channel and estimate of one (trial, fading draw), for diagnostics.
    pub fn trial_channel(&self, trial_index: u64, draw: usize) -> Result<(ChannelMatrix, ChannelMatrix)> {
        let cfg = &self.cfg;
        let users = crate::array_geometry::drop_users(
            cfg.k_users,
            &self.region,
            &self.clusters,
            &mut stream(cfg.master_seed, trial_index, "drop"),
        )?;
        let beta = link_gains(
            &self.clusters,
            &users,
            &cfg.link_gain_spec(),
            &mut stream(cfg.master_seed, trial_index, "gain"),
        )?;
        let rician = RicianSpec::new(cfg.k_factor)?;
        let blocks = draw_fading(
            cfg.n_clusters,
            cfg.k_users,
            cfg.m_per_cluster(),
            &rician,
            &mut stream(cfg.master_seed, trial_index, &format!("fading/{draw}")),
        )?;
        let g = assemble_channel(&beta, &self.corr, &blocks)?;
        let g_hat = corrupt_csi(
            &g,
            &beta,
            &self.corr,
            &rician,
            cfg.xi,
            &mut stream(cfg.master_seed, trial_index, &format!("csi/{draw}")),
        )?;
        Ok((g, g_hat))
    }

    /// One full pipeline pass: user drop, link gains, fading, CSI corruption
    /// and both closed-form metrics. Deterministic in `trial_index`.
    pub fn run_trial(&self, trial_index: u64) -> Result<TrialResult> {
        let cfg = &self.cfg;
        let users = crate::array_geometry::drop_users(
            cfg.k_users,
            &self.region,
            &self.clusters,
            &mut stream(cfg.master_seed, trial_index, "drop"),
        )?;
        let beta = link_gains(
            &self.clusters,
            &users,
            &cfg.link_gain_spec(),
            &mut stream(cfg.master_seed, trial_index, "gain"),
        )?;
        let rician = RicianSpec::new(cfg.k_factor)?;
        let tx = TransmitConfig::new(db_to_linear(cfg.tx_snr_db), cfg.k_users, cfg.m_total)?;
        // Error covariances only enter when the CSI is imperfect.
        let p_list: Vec<ErrorCovariance> = if cfg.xi < 1.0 {
            (0..cfg.k_users)
                .map(|i| error_covariance(&beta.column(i), &self.corr))
                .collect()
        } else {
            Vec::new()
        };
        let mut mf_vals = Vec::with_capacity(cfg.k_users * cfg.fading_draws_per_drop);
        let mut zf_vals = Vec::with_capacity(cfg.k_users * cfg.fading_draws_per_drop);
        let mut zf_censored_draws = 0usize;
        for draw in 0..cfg.fading_draws_per_drop {
            let blocks = draw_fading(
                cfg.n_clusters,
                cfg.k_users,
                cfg.m_per_cluster(),
                &rician,
                &mut stream(cfg.master_seed, trial_index, &format!("fading/{draw}")),
            )?;
            let g = assemble_channel(&beta, &self.corr, &blocks)?;
            let g_hat = corrupt_csi(
                &g,
                &beta,
                &self.corr,
                &rician,
                cfg.xi,
                &mut stream(cfg.master_seed, trial_index, &format!("csi/{draw}")),
            )?;
            let mf = mf_expected_sinr(&g_hat.g, &p_list, cfg.xi, &tx)?;
            mf_vals.extend(mf.values_db);
            // Under heavy spatial correlation the effective channel rank can
            // drop below K, making the ZF Gram numerically singular. Those
            // realizations have no meaningful ZF metric; censor them instead
            // of failing the whole experiment.
            match zf_normalization(&g_hat.g) {
                Ok(gamma_zf) => {
                    let zf = zf_expected_snr(gamma_zf, &p_list, cfg.xi, &tx)?;
                    zf_vals.extend(zf.values_db);
                }
                Err(Error::RankDeficient { .. }) => zf_censored_draws += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(TrialResult {
            trial_index,
            master_seed: cfg.master_seed,
            mf_sinr: MetricVector {
                kind: crate::precoding::MetricKind::MfSinr,
                values_db: mf_vals,
            },
            zf_snr: MetricVector {
                kind: crate::precoding::MetricKind::ZfSnr,
                values_db: zf_vals,
            },
            zf_censored_draws,
        })
    }
}

/// Metrics of one trial. `zf_snr` may hold fewer samples than `mf_sinr`
/// when rank-deficient realizations were censored.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: u64,
    pub master_seed: u64,
    pub mf_sinr: MetricVector,
    pub zf_snr: MetricVector,
    pub zf_censored_draws: usize,
}

/// Sorted per-user metric samples (dB) with percentile queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Linear-interpolated order statistic at fraction `p`.
    pub fn percentile(&self, p: f64) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::InvalidArgument("percentile of an empty CDF".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("percentile fraction {p} outside [0, 1]")));
        }
        let pos = p * (self.samples.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        Ok(self.samples[lo] * (1.0 - frac) + self.samples[hi] * frac)
    }

    pub fn median(&self) -> Result<f64> {
        self.percentile(0.5)
    }
}

/// All trials of one scenario plus pooled CDFs of both metrics.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub trials: Vec<TrialResult>,
    pub mf_cdf: EmpiricalCdf,
    pub zf_cdf: EmpiricalCdf,
    /// Fading draws whose ZF Gram was numerically singular.
    pub zf_censored_draws: usize,
}

/// Run `cfg.n_trials` independent drops in parallel. Trial seeds derive from
/// the trial index alone, so results are identical for any worker count.
pub fn run_experiment(cfg: &ScenarioConfig, cache: &CorrelationCache) -> Result<ExperimentResult> {
    let scenario = Scenario::prepare(cfg, cache)?;
    let trials: Vec<TrialResult> = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|i| scenario.run_trial(i))
        .collect::<Result<Vec<_>>>()?;
    let mf = trials.iter().flat_map(|t| t.mf_sinr.values_db.iter().cloned()).collect();
    let zf = trials.iter().flat_map(|t| t.zf_snr.values_db.iter().cloned()).collect();
    let zf_censored_draws = trials.iter().map(|t| t.zf_censored_draws).sum();
    Ok(ExperimentResult {
        trials,
        mf_cdf: EmpiricalCdf::from_samples(mf),
        zf_cdf: EmpiricalCdf::from_samples(zf),
        zf_censored_draws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Xi,
    SpreadMultiplier,
    NClusters,
    KFactor,
    Topology,
    CorrelationMode,
}

pub const SWEEP_AXES: [&str; 6] = [
    "xi",
    "spread_multiplier",
    "n_clusters",
    "k_factor",
    "topology",
    "correlation_mode",
];

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Xi => "xi",
            SweepAxis::SpreadMultiplier => "spread_multiplier",
            SweepAxis::NClusters => "n_clusters",
            SweepAxis::KFactor => "k_factor",
            SweepAxis::Topology => "topology",
            SweepAxis::CorrelationMode => "correlation_mode",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(SweepAxis::Xi),
            "spread_multiplier" => Ok(SweepAxis::SpreadMultiplier),
            "n_clusters" => Ok(SweepAxis::NClusters),
            "k_factor" => Ok(SweepAxis::KFactor),
            "topology" => Ok(SweepAxis::Topology),
            "correlation_mode" => Ok(SweepAxis::CorrelationMode),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep axis '{other}'; valid axes: {}",
                SWEEP_AXES.join(", ")
            ))),
        }
    }
}

fn parse_f64(axis: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| {
        Error::InvalidArgument(format!("axis {axis}: cannot parse '{value}' as a number"))
    })
}

/// Set one swept parameter on a config from its string form.
pub fn apply_axis(cfg: &mut ScenarioConfig, axis: SweepAxis, value: &str) -> Result<()> {
    match axis {
        SweepAxis::Xi => cfg.xi = parse_f64("xi", value)?,
        SweepAxis::SpreadMultiplier => {
            cfg.spread_multiplier = parse_f64("spread_multiplier", value)?
        }
        SweepAxis::KFactor => cfg.k_factor = parse_f64("k_factor", value)?,
        SweepAxis::NClusters => {
            cfg.n_clusters = value.parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "axis n_clusters: cannot parse '{value}' as a count"
                ))
            })?
        }
        SweepAxis::Topology => {
            cfg.topology = match value {
                "ura" => ArrayTopology::Ura,
                "cylindrical" => ArrayTopology::Cylindrical,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "axis topology: unknown value '{other}' (expected ura | cylindrical)"
                    )))
                }
            }
        }
        SweepAxis::CorrelationMode => {
            cfg.correlation_mode = match value {
                "correlated" => CorrelationMode::Correlated,
                "iid" => CorrelationMode::Iid,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "axis correlation_mode: unknown value '{other}' (expected correlated | iid)"
                    )))
                }
            }
        }
    }
    Ok(())
}

/// One scenario of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub label: String,
    pub axis_value: String,
    pub result: ExperimentResult,
}

/// Run one experiment per axis value, sharing the base master seed so the
/// drops are paired across values.
pub fn sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[String],
    cache: &CorrelationCache,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for value in values {
        let mut cfg = base.clone();
        apply_axis(&mut cfg, axis, value)?;
        let result = run_experiment(&cfg, cache)?;
        points.push(SweepPoint {
            label: format!("{}={}", axis.name(), value),
            axis_value: value.clone(),
            result,
        });
    }
    Ok(points)
}
