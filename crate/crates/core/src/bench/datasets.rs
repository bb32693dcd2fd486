//! Seeded synthetic point sets.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Uniform2d,
    Parabolic2d,
    Blobs2d,
    Blobs3d,
    Pareto3d,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 5] = [
        DatasetKind::Uniform2d,
        DatasetKind::Parabolic2d,
        DatasetKind::Blobs2d,
        DatasetKind::Blobs3d,
        DatasetKind::Pareto3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Uniform2d => "uniform2d",
            DatasetKind::Parabolic2d => "parabolic2d",
            DatasetKind::Blobs2d => "blobs2d",
            DatasetKind::Blobs3d => "blobs3d",
            DatasetKind::Pareto3d => "pareto3d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            DatasetKind::Uniform2d | DatasetKind::Parabolic2d | DatasetKind::Blobs2d => 2,
            DatasetKind::Blobs3d | DatasetKind::Pareto3d => 3,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown dataset kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n: usize,
    pub seed: u64,
    /// Noise scale: parabola noise, blob standard deviation as a fraction
    /// of the center spacing, or mean frontier depth for pareto3d.
    pub sigma: Option<f64>,
    pub blobs: usize,
    /// Side length of the domain box `[0, box]^d`.
    pub domain: f64,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            seed,
            sigma: None,
            blobs: 16,
            domain: 1.0,
        }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self {
            sigma: Some(sigma),
            ..self
        }
    }

    pub fn with_blobs(self, blobs: usize) -> Self {
        Self { blobs, ..self }
    }

    pub fn default_sigma(kind: DatasetKind) -> f64 {
        match kind {
            DatasetKind::Parabolic2d => 0.01,
            DatasetKind::Blobs2d | DatasetKind::Blobs3d => 0.01,
            DatasetKind::Pareto3d => 0.02,
            DatasetKind::Uniform2d => 0.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or_else(|| Self::default_sigma(self.kind))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: PointSet,
    /// Generating cluster of each point, for blob kinds.
    pub labels: Option<Vec<usize>>,
}

/// Blob centers on a regular grid filling the domain; returns the centers
/// and the grid spacing.
fn grid_centers(k: usize, d: usize, domain: f64) -> (Vec<Vec<f64>>, f64) {
    let mut side = 1usize;
    while side.pow(d as u32) < k {
        side += 1;
    }
    let spacing = domain / side as f64;
    let centers = (0..k)
        .map(|mut c| {
            (0..d)
                .map(|_| {
                    let v = (c % side) as f64;
                    c /= side;
                    (v + 0.5) * spacing
                })
                .collect()
        })
        .collect();
    (centers, spacing)
}

pub fn gen_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::invalid("dataset needs n >= 1"));
    }
    let sigma = spec.sigma();
    if !(sigma >= 0.0 && sigma.is_finite()) || !(spec.domain > 0.0 && spec.domain.is_finite()) {
        return Err(Error::invalid("sigma must be >= 0 and the domain positive"));
    }
    let mut rng = rng_for(spec.seed, 0xDA7A_0000 + spec.kind as u64);
    let n = spec.n;
    let l = spec.domain;
    let mut labels = None;
    let flat: Vec<f64> = match spec.kind {
        DatasetKind::Uniform2d => (0..2 * n).map(|_| rng.random::<f64>() * l).collect(),
        DatasetKind::Parabolic2d => {
            let mut out = Vec::with_capacity(2 * n);
            for _ in 0..n {
                let x: f64 = rng.random::<f64>() * l;
                let e: f64 = if sigma > 0.0 {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    sigma * g
                } else {
                    0.0
                };
                out.push(x);
                out.push(x * x + e);
            }
            out
        }
        DatasetKind::Blobs2d | DatasetKind::Blobs3d => {
            let d = spec.kind.dim();
            if spec.blobs == 0 {
                return Err(Error::invalid("blob count must be >= 1"));
            }
            let (centers, spacing) = grid_centers(spec.blobs, d, l);
            let noise = Normal::new(0.0, sigma * spacing).map_err(|e| Error::invalid(e.to_string()))?;
            let mut out = Vec::with_capacity(d * n);
            let mut lab = Vec::with_capacity(n);
            for i in 0..n {
                let c = i % spec.blobs;
                for &ct in centers[c].iter().take(d) {
                    out.push(ct + noise.sample(&mut rng));
                }
                lab.push(c);
            }
            labels = Some(lab);
            out
        }
        DatasetKind::Pareto3d => {
            // Frontier |x|_p = domain with p drawn once per dataset, points
            // pulled inward along the ray by exponential noise.
            let p = 1.5 + 1.5 * rng.random::<f64>();
            let mut out = Vec::with_capacity(3 * n);
            for _ in 0..n {
                let u: [f64; 3] = [0.0; 3].map(|_: f64| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g.abs()
                });
                let norm_p = u.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
                let depth = if sigma > 0.0 {
                    Exp::new(1.0 / sigma).map_err(|e| Error::invalid(e.to_string()))?.sample(&mut rng)
                } else {
                    0.0
                };
                let r = l * (1.0 - depth).max(0.0) / norm_p.max(f64::MIN_POSITIVE);
                out.extend(u.iter().map(|v| v * r));
            }
            out
        }
    };
    Ok(Dataset {
        points: PointSet::from_flat(flat, spec.kind.dim())?,
        labels,
    })
}
