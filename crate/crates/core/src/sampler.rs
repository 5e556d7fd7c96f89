//! Seeded sampling of Gaussian vectors, Gaussian matrices and Haar subspaces.
//!
//! Every random object is a pure function of a [`SeedSpec`]. The master seed
//! keys a ChaCha8 generator and the stream index selects one of its 2^64
//! independent streams, so trials can run in any order or on any thread and
//! still draw the same numbers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, orthonormalize, Matrix, DEFAULT_DROP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_index,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Child stream for a sub-task, keyed by `salt`. Children of distinct
    /// salts (or of distinct parents) land on unrelated stream indices.
    pub fn derive(&self, salt: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_index: splitmix64(self.stream_index ^ splitmix64(salt ^ 0x6a09_e667_f3bc_c909)),
        }
    }

    /// The stream `offset` positions after this one (used for retries).
    pub fn offset(&self, offset: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_index: self.stream_index.wrapping_add(offset),
        }
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.master_seed, self.stream_index)
    }
}

/// Parses a seed written in decimal or as `0x`-prefixed hexadecimal.
pub fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        t.parse::<u64>()
    };
    parsed.map_err(|_| Error::usage(format!("invalid seed {text:?} (decimal or 0x-hex expected)")))
}

impl FromStr for SeedSpec {
    type Err = Error;

    /// `master` or `master:stream`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((m, i)) => Ok(SeedSpec::new(parse_seed(m)?, parse_seed(i)?)),
            None => Ok(SeedSpec::new(parse_seed(s)?, 0)),
        }
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Vector of i.i.d. N(0, variance) entries.
pub fn gaussian_vector(len: usize, variance: f64, seed: SeedSpec) -> Vec<f64> {
    let mut rng = seed.rng();
    let sd = variance.sqrt();
    (0..len).map(|_| sd * standard_normal(&mut rng)).collect()
}

/// `rows x cols` matrix with i.i.d. N(0, variance) entries, drawn column by
/// column so that column `j` depends only on the seed and `j`'s position.
pub fn gaussian_matrix(rows: usize, cols: usize, variance: f64, seed: SeedSpec) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::usage("gaussian_matrix: rows and cols must be >= 1"));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::usage(format!(
            "gaussian_matrix: variance must be positive, got {variance}"
        )));
    }
    let mut rng = seed.rng();
    let sd = variance.sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = sd * standard_normal(&mut rng);
        }
    }
    Ok(m)
}

/// Uniform random point of the unit sphere in R^dim.
pub fn unit_sphere_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let r = norm2(&v);
        if r > 1e-300 {
            v.iter_mut().for_each(|x| *x /= r);
            return v;
        }
    }
}

/// Uniform random point of the Euclidean ball of radius `radius` in R^dim.
pub fn ball_point<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let mut v = unit_sphere_point(rng, dim);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    v.iter_mut().for_each(|x| *x *= r);
    v
}

/// A subspace of R^ambient_dim drawn from the rotation-invariant measure.
#[derive(Debug, Clone)]
pub struct HaarSubspace {
    pub ambient_dim: usize,
    pub dim: usize,
    /// `ambient_dim x dim`, orthonormal columns.
    pub basis: Matrix,
}

impl HaarSubspace {
    /// Wraps an explicit basis, checking orthonormality to 1e-10.
    pub fn from_basis(basis: Matrix) -> Result<Self> {
        crate::linalg::check_orthonormal(&basis, 1e-10)?;
        Ok(HaarSubspace {
            ambient_dim: basis.rows(),
            dim: basis.cols(),
            basis,
        })
    }
}

/// Orthonormalized `ambient_dim x dim` standard Gaussian matrix.
pub fn haar_subspace(ambient_dim: usize, dim: usize, seed: SeedSpec) -> Result<HaarSubspace> {
    if dim == 0 || dim > ambient_dim {
        return Err(Error::usage(format!(
            "haar_subspace: need 1 <= dim <= ambient_dim, got dim={dim}, ambient_dim={ambient_dim}"
        )));
    }
    let g = gaussian_matrix(ambient_dim, dim, 1.0, seed)?;
    let o = orthonormalize(&g.columns(), DEFAULT_DROP_TOL)?;
    if o.dropped > 0 {
        return Err(Error::numeric("haar_subspace: Gaussian sample was rank deficient"));
    }
    Ok(HaarSubspace {
        ambient_dim,
        dim,
        basis: o.basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;

    #[test]
    fn deterministic_per_seed() {
        let s = SeedSpec::new(42, 3);
        assert_eq!(
            gaussian_matrix(3, 4, 0.5, s).unwrap(),
            gaussian_matrix(3, 4, 0.5, s).unwrap()
        );
        assert_ne!(
            gaussian_matrix(3, 4, 0.5, s).unwrap(),
            gaussian_matrix(3, 4, 0.5, s.offset(1)).unwrap()
        );
        let m = gaussian_matrix(2, 3, 1.0, s).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
    }

    #[test]
    fn bad_variance() {
        assert!(matches!(
            gaussian_matrix(2, 2, 0.0, SeedSpec::new(1, 1)),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            gaussian_matrix(2, 2, -1.0, SeedSpec::new(1, 1)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn seed_parsing() {
        assert_eq!(parse_seed("42").unwrap(), 42);
        assert_eq!(parse_seed("0x2A").unwrap(), 42);
        assert!(parse_seed("x").is_err());
        assert_eq!("7:3".parse::<SeedSpec>().unwrap(), SeedSpec::new(7, 3));
    }

    #[test]
    fn mean_squared_norm_is_one() {
        // E|g|^2 = 1 for g ~ N(0, Id/100); 1e5 columns each from its own stream
        let d = 100;
        let samples = 100_000;
        let master = SeedSpec::new(11, 0);
        let mut sum = 0.0;
        for s in 0..samples {
            let g = gaussian_vector(d, 1.0 / d as f64, master.derive(s));
            sum += g.iter().map(|x| x * x).sum::<f64>();
        }
        let mean = sum / samples as f64;
        assert!((mean - 1.0).abs() <= 0.002, "mean {mean}");
    }

    #[test]
    fn haar_full_and_partial() {
        let h = haar_subspace(4, 4, SeedSpec::new(1, 2)).unwrap();
        assert!(orthonormality_defect(&h.basis) < 1e-10);
        assert!(haar_subspace(3, 4, SeedSpec::new(1, 2)).is_err());
        let a = haar_subspace(6, 2, SeedSpec::new(5, 5)).unwrap();
        let b = haar_subspace(6, 2, SeedSpec::new(5, 5)).unwrap();
        assert_eq!(a.basis, b.basis);
    }

    #[test]
    fn haar_projection_of_fixed_vector() {
        // E |P_G e1|^2 = dim / ambient for a Haar subspace G
        let seeds = 10_000u64;
        let mut acc = 0.0;
        for s in 0..seeds {
            let h = haar_subspace(20, 5, SeedSpec::new(99, s)).unwrap();
            acc += h.basis.row(0).iter().map(|x| x * x).sum::<f64>();
        }
        let mean = acc / seeds as f64;
        assert!((mean - 0.25).abs() <= 0.01, "mean {mean}");
    }

    #[test]
    fn stream_lag_correlation() {
        // first draws of consecutive streams must be uncorrelated
        let samples = 20_000u64;
        let xs: Vec<f64> = (0..samples)
            .map(|s| standard_normal(&mut SeedSpec::new(3, s).rng()))
            .collect();
        for lag in 1..4 {
            let n = (samples - lag) as f64;
            let c: f64 = (0..(samples - lag) as usize)
                .map(|i| xs[i] * xs[i + lag as usize])
                .sum::<f64>()
                / n;
            assert!(c.abs() < 3.0 / n.sqrt(), "lag {lag}: {c}");
        }
    }
}
