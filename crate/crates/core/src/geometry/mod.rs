//! Convex hulls, 3-D maxima and point-set distances.
//!
//! All algorithms report an operation count: orientation tests plus
//! coordinate comparisons (sorting and dominance checks). The count is the
//! machine-independent cost measure used by the benchmarks.

pub mod hull;
pub mod knn;
pub mod maxima;
pub mod metrics;

use std::cmp::Ordering;

use serde::Serialize;

pub use hull::{
    chans_hull, hull_area, hull_error_pct, monotone_chain_hull, partition_merge_hull, HullResult,
};
pub use maxima::{adaptive_maxima, maxima_3d, maxima_f1, MaximaResult};
pub use metrics::{chamfer, hausdorff};

pub type P2 = [f64; 2];

/// Operation counters accumulated by the geometric algorithms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounter {
    pub orientation_tests: u64,
    pub comparisons: u64,
}

impl OpCounter {
    #[inline]
    pub fn total(&self) -> u64 {
        self.orientation_tests + self.comparisons
    }

    /// Exact orientation of `c` relative to the directed line `a -> b`:
    /// positive for a left turn, negative for a right turn, zero when
    /// collinear.
    #[inline]
    pub fn orient(&mut self, a: P2, b: P2, c: P2) -> f64 {
        self.orientation_tests += 1;
        orient(a, b, c)
    }

    #[inline]
    pub fn lex_cmp(&mut self, a: &P2, b: &P2) -> Ordering {
        self.comparisons += 1;
        lex_cmp(a, b)
    }

    pub fn add(&mut self, other: OpCounter) {
        self.orientation_tests += other.orientation_tests;
        self.comparisons += other.comparisons;
    }
}

/// Adaptive-precision orientation predicate.
#[inline]
pub fn orient(a: P2, b: P2, c: P2) -> f64 {
    robust::orient2d(
        robust::Coord { x: a[0], y: a[1] },
        robust::Coord { x: b[0], y: b[1] },
        robust::Coord { x: c[0], y: c[1] },
    )
}

#[inline]
pub fn lex_cmp(a: &P2, b: &P2) -> Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
}

pub(crate) fn to_p2(s: &crate::points::PointSet) -> crate::error::Result<Vec<P2>> {
    s.require_dim(2)?;
    Ok(s.iter().map(|p| [p[0], p[1]]).collect())
}
