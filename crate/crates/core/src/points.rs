//! Point sets and their CSV / JSON representations.
//!
//! CSV files carry a header row of `x,y`, `x,y,z` or `c0,c1,...` and one
//! point per line. JSON files hold an object with a `points` key whose value
//! is an array of coordinate arrays.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-empty set of `d`-dimensional points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
}

impl PointSet {
    /// Builds a point set from a flat row-major buffer.
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::invalid("point set must contain at least one point"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(idx) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                what: "point coordinates",
                index: idx / dim,
            });
        }
        Ok(Self { coords, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("point set must contain at least one point"))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::from_flat(coords, dim)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with collections.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|p| p.to_vec()).collect()
    }

    /// Returns the subset of points at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(coords, self.dim)
    }

    pub fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim,
            });
        }
        Ok(())
    }

    /// Coordinate-wise mean.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.iter() {
            for (a, b) in c.iter_mut().zip(p) {
                *a += b;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|a| *a /= n);
        c
    }

    /// Largest pairwise Euclidean distance, computed via the bounding box
    /// diagonal (an upper bound within a factor of `sqrt(d)`).
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Translates every point by `delta` (row-major, same shape).
    pub fn displaced(&self, delta: &[f64]) -> Result<Self> {
        if delta.len() != self.coords.len() {
            return Err(Error::invalid("displacement shape does not match point set"));
        }
        let coords = self.coords.iter().zip(delta).map(|(a, b)| a + b).collect();
        Self::from_flat(coords, self.dim)
    }

    pub fn column_names(dim: usize) -> Vec<String> {
        match dim {
            2 => vec!["x".into(), "y".into()],
            3 => vec!["x".into(), "y".into(), "z".into()],
            _ => (0..dim).map(|i| format!("c{i}")).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(Self::column_names(self.dim))?;
        for p in self.iter() {
            wtr.write_record(p.iter().map(|v| fmt_f64(*v)))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let dim = header.len();
        let mut coords = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rec.len(),
                });
            }
            for field in rec.iter() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse coordinate {field:?}")))?;
                coords.push(v);
            }
        }
        Self::from_flat(coords, dim)
    }

    pub fn to_json(&self) -> PointsJson {
        PointsJson {
            points: self.to_rows(),
        }
    }

    pub fn from_json(doc: &PointsJson) -> Result<Self> {
        Self::from_rows(&doc.points)
    }

    /// Loads a point set, choosing the format by file extension (`.json`
    /// for JSON, anything else is CSV).
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let doc: PointsJson = serde_json::from_reader(std::io::BufReader::new(file))?;
            Self::from_json(&doc)
        } else {
            Self::read_csv(std::io::BufReader::new(file))
        }
    }
}

/// JSON document form of a point set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointsJson {
    pub points: Vec<Vec<f64>>,
}

/// Formats a float with the shortest decimal representation that parses
/// back to the identical value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
