//! Antenna element layouts, cluster placement and random user drops.
//!
//! Elements come in co-located cross-polarized pairs: consecutive even/odd
//! indices share a position and carry opposite polarization tags. The array
//! dimension `l` is fixed across topologies; the cylindrical layout is the
//! URA wrapped on a cylinder of circumference `l`.

use std::f64::consts::PI;

use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArrayTopology {
    Ura,
    Cylindrical,
}

/// 3D positions and polarization tags of all elements of one antenna cluster.
#[derive(Debug, Clone)]
pub struct ElementLayout {
    /// One entry per element, x-pol pair members co-located. Meters.
    pub positions: Vec<[f64; 3]>,
    /// Polarization index per element, 0 or 1.
    pub pol: Vec<u8>,
    /// Azimuth-plane pair count.
    pub p_pairs: usize,
    /// Zenith-axis pair count.
    pub q_pairs: usize,
    /// Array dimension, meters.
    pub l: f64,
}

impl ElementLayout {
    pub fn n_elements(&self) -> usize {
        self.positions.len()
    }
}

fn check_build_args(q_pairs: usize, p_pairs: usize, l: f64) -> Result<()> {
    if q_pairs == 0 || p_pairs == 0 {
        return Err(Error::InvalidArgument("pair counts must be >= 1".into()));
    }
    if !(l > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "array dimension must be positive, got {l}"
        )));
    }
    Ok(())
}

fn push_pair(layout: &mut ElementLayout, pos: [f64; 3]) {
    layout.positions.push(pos);
    layout.pol.push(0);
    layout.positions.push(pos);
    layout.pol.push(1);
}

/// Planar grid of `p_pairs` x-pol pair columns by `q_pairs` rows inside an
/// `l` x `l` bounding box. Inter-pair spacing is `l / count` in each axis.
pub fn build_ura(q_pairs: usize, p_pairs: usize, l: f64) -> Result<ElementLayout> {
    check_build_args(q_pairs, p_pairs, l)?;
    let dx = l / p_pairs as f64;
    let dz = l / q_pairs as f64;
    let mut layout = ElementLayout {
        positions: Vec::with_capacity(2 * p_pairs * q_pairs),
        pol: Vec::with_capacity(2 * p_pairs * q_pairs),
        p_pairs,
        q_pairs,
        l,
    };
    for q in 0..q_pairs {
        for p in 0..p_pairs {
            push_pair(&mut layout, [p as f64 * dx, 0.0, q as f64 * dz]);
        }
    }
    Ok(layout)
}

/// URA wrapped around a virtual cylinder: `p_pairs` pair columns equally
/// spaced on a circle of circumference `l` (radius `l / 2π`), `q_pairs`
/// rings along the axis with spacing `l / q_pairs`.
pub fn build_cylinder(q_pairs: usize, p_pairs: usize, l: f64) -> Result<ElementLayout> {
    check_build_args(q_pairs, p_pairs, l)?;
    let radius = l / (2.0 * PI);
    let dz = l / q_pairs as f64;
    let mut layout = ElementLayout {
        positions: Vec::with_capacity(2 * p_pairs * q_pairs),
        pol: Vec::with_capacity(2 * p_pairs * q_pairs),
        p_pairs,
        q_pairs,
        l,
    };
    for q in 0..q_pairs {
        for p in 0..p_pairs {
            let ang = 2.0 * PI * p as f64 / p_pairs as f64;
            push_pair(
                &mut layout,
                [radius * ang.cos(), radius * ang.sin(), q as f64 * dz],
            );
        }
    }
    Ok(layout)
}

pub fn build_layout(
    topology: ArrayTopology,
    q_pairs: usize,
    p_pairs: usize,
    l: f64,
) -> Result<ElementLayout> {
    match topology {
        ArrayTopology::Ura => build_ura(q_pairs, p_pairs, l),
        ArrayTopology::Cylindrical => build_cylinder(q_pairs, p_pairs, l),
    }
}

/// Circular coverage region with an exclusion zone around each cluster.
#[derive(Debug, Clone, Copy)]
pub struct CoverageRegion {
    pub radius: f64,
    pub exclusion_radius: f64,
}

impl CoverageRegion {
    pub fn new(radius: f64, exclusion_radius: f64) -> Result<Self> {
        if !(exclusion_radius > 0.0 && exclusion_radius < radius) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < exclusion_radius < radius, got {exclusion_radius} / {radius}"
            )));
        }
        Ok(Self { radius, exclusion_radius })
    }
}

impl Default for CoverageRegion {
    /// 1000 m region with 50 m exclusion, realizing 50-1000 m link distances
    /// for a single centered cluster.
    fn default() -> Self {
        Self { radius: 1000.0, exclusion_radius: 50.0 }
    }
}

/// Cluster center coordinates in the coverage plane.
#[derive(Debug, Clone)]
pub struct ClusterLayout {
    pub centers: Vec<[f64; 2]>,
}

/// One cluster sits at the origin; several sit equidistant on the region
/// boundary at angles `2πi/N`.
pub fn place_clusters(n_clusters: usize, region: &CoverageRegion) -> Result<ClusterLayout> {
    if n_clusters == 0 {
        return Err(Error::InvalidArgument("n_clusters must be >= 1".into()));
    }
    let centers = if n_clusters == 1 {
        vec![[0.0, 0.0]]
    } else {
        (0..n_clusters)
            .map(|i| {
                let ang = 2.0 * PI * i as f64 / n_clusters as f64;
                [region.radius * ang.cos(), region.radius * ang.sin()]
            })
            .collect()
    };
    Ok(ClusterLayout { centers })
}

/// User coordinates of one drop.
#[derive(Debug, Clone)]
pub struct UserDrop {
    pub positions: Vec<[f64; 2]>,
}

impl UserDrop {
    pub fn distances_to(&self, clusters: &ClusterLayout) -> Vec<Vec<f64>> {
        clusters
            .centers
            .iter()
            .map(|c| {
                self.positions
                    .iter()
                    .map(|u| ((u[0] - c[0]).powi(2) + (u[1] - c[1]).powi(2)).sqrt())
                    .collect()
            })
            .collect()
    }
}

const MAX_REJECTIONS_PER_USER: usize = 100_000;

/// Drop `k` users uniformly over the region area, rejection-resampled until
/// each user is at least `exclusion_radius` from every cluster.
pub fn drop_users<R: Rng + ?Sized>(
    k: usize,
    region: &CoverageRegion,
    clusters: &ClusterLayout,
    rng: &mut R,
) -> Result<UserDrop> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if region.exclusion_radius >= region.radius {
        return Err(Error::InvalidArgument(
            "exclusion radius must be smaller than region radius".into(),
        ));
    }
    let mut positions = Vec::with_capacity(k);
    for _ in 0..k {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS_PER_USER {
            // Area-uniform point in the disk.
            let r = region.radius * rng.random::<f64>().sqrt();
            let ang = 2.0 * PI * rng.random::<f64>();
            let pos = [r * ang.cos(), r * ang.sin()];
            let clear = clusters.centers.iter().all(|c| {
                let d2 = (pos[0] - c[0]).powi(2) + (pos[1] - c[1]).powi(2);
                d2 >= region.exclusion_radius.powi(2)
            });
            if clear {
                accepted = Some(pos);
                break;
            }
        }
        match accepted {
            Some(pos) => positions.push(pos),
            None => {
                return Err(Error::Infeasible(
                    "user drop rejection sampling failed; exclusion zones cover the region"
                        .into(),
                ))
            }
        }
    }
    Ok(UserDrop { positions })
}
