//! Chain geometry: the lattice itself and simply connected site intervals.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest Hilbert-space dimension a dense operator may have by default.
pub const DEFAULT_DENSE_CAP: usize = 1 << 14;

/// An open chain of `num_sites` sites, each carrying a `local_dim`-level
/// degree of freedom. Site 0 is the most significant tensor factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    num_sites: usize,
    local_dim: usize,
    dense_cap: usize,
}

impl Lattice {
    pub fn new(num_sites: usize, local_dim: usize) -> Result<Self> {
        Self::with_cap(num_sites, local_dim, DEFAULT_DENSE_CAP)
    }

    /// Spin-1/2 chain.
    pub fn spins(num_sites: usize) -> Result<Self> {
        Self::new(num_sites, 2)
    }

    pub fn with_cap(num_sites: usize, local_dim: usize, dense_cap: usize) -> Result<Self> {
        if num_sites == 0 {
            return Err(Error::Parameter("num_sites must be at least 1".into()));
        }
        if local_dim < 2 {
            return Err(Error::Parameter(format!("local_dim must be at least 2, got {local_dim}")));
        }
        let dim = checked_pow(local_dim, num_sites);
        match dim {
            Some(d) if d <= dense_cap => Ok(Self { num_sites, local_dim, dense_cap }),
            _ => Err(Error::Budget {
                what: format!("{num_sites} sites of local dimension {local_dim}"),
                dim: dim.unwrap_or(usize::MAX),
                cap: dense_cap,
            }),
        }
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap
    }

    /// Total Hilbert-space dimension r^N.
    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.num_sites as u32)
    }

    /// Dimension of the factor carried by `len` consecutive sites.
    pub fn block_dim(&self, len: usize) -> usize {
        self.local_dim.pow(len as u32)
    }

    /// The whole chain as an interval.
    pub fn full(&self) -> SiteInterval {
        SiteInterval { lo: 0, hi: self.num_sites - 1 }
    }

    pub fn check(&self, region: SiteInterval) -> Result<()> {
        if region.hi >= self.num_sites {
            return Err(Error::Range { lo: region.lo, hi: region.hi, num_sites: self.num_sites });
        }
        Ok(())
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Inclusive interval `lo..=hi` of sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteInterval {
    pub lo: usize,
    pub hi: usize,
}

impl SiteInterval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::Parameter(format!("interval lower end {lo} exceeds upper end {hi}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn site(j: usize) -> Self {
        Self { lo: j, hi: j }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: usize) -> bool {
        self.lo <= j && j <= self.hi
    }

    pub fn contains_interval(&self, other: &SiteInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &SiteInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Minimum of |i - j| over site pairs; zero when the intervals overlap.
    pub fn distance(&self, other: &SiteInterval) -> usize {
        if self.hi < other.lo {
            other.lo - self.hi
        } else if other.hi < self.lo {
            self.lo - other.hi
        } else {
            0
        }
    }

    /// All sites within `radius` of the interval, clipped to the lattice.
    pub fn ball(&self, radius: usize, lattice: &Lattice) -> SiteInterval {
        SiteInterval {
            lo: self.lo.saturating_sub(radius),
            hi: (self.hi + radius).min(lattice.num_sites() - 1),
        }
    }

    pub fn shifted(&self, offset: usize) -> SiteInterval {
        SiteInterval { lo: self.lo + offset, hi: self.hi + offset }
    }
}

impl std::fmt::Display for SiteInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
