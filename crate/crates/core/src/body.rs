//! The random body `B = absconv{g_1, ..., g_N} = Γ(B_1^N)` in R^n and its
//! geometric functionals.
//!
//! The gauge is the optimum of `min ‖t‖₁ s.t. Γt = x`, solved as an
//! equality-form LP over the split columns `[Γ, −Γ]`. The support function
//! is `max_j |⟨g_j, u⟩|` and needs no optimization at all.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::text::{parse_matrix, write_matrix};
use crate::linalg::{dot, norm2, orthonormalize, singular_values, Matrix};
use crate::linprog::{invert, solve_columns, Columns, LpOptions, LpStatus};
use crate::sampler::{ball_point, gaussian_matrix, unit_sphere_point, HaarSubspace, SeedSpec};

/// Points with gauge at most `1 + MEMBERSHIP_TOL` count as inside the body.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Largest dimension accepted by [`RandomQuotientBody::volume_ratio`].
pub const VOLUME_DIM_CAP: usize = 8;
const MIN_SINGULAR_VALUE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RandomQuotientBody {
    n: usize,
    big_n: usize,
    gamma: Matrix,
    seed: Option<SeedSpec>,
    column_norms: Vec<f64>,
    /// `[Γ, −Γ]` column-major, `n * 2N` entries. The first half is Γ itself.
    split: Vec<f64>,
    sigma_min: f64,
}

/// Gauge value together with its LP certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormCertificate {
    pub value: f64,
    /// `y` with `|⟨g_j, y⟩| <= 1` for all j and `⟨x, y⟩ = value`.
    pub dual: Vec<f64>,
    /// Split-column indices of the optimal basis (`j < N` is `+g_j`,
    /// `j >= N` is `−g_{j−N}`).
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiiEstimate {
    pub circumradius: f64,
    /// Support function value at `inradius_direction`; an upper bound on the
    /// true inradius unless `inradius_exact`.
    pub inradius_estimate: f64,
    pub inradius_direction: Vec<f64>,
    pub inradius_exact: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanWidth {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VolumeRatio {
    pub ratio_per_dim: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub accepted: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SectionDistortion {
    pub max_gauge: f64,
    pub min_gauge: f64,
}

impl SectionDistortion {
    pub fn distortion(&self) -> f64 {
        self.max_gauge / self.min_gauge
    }
}

impl RandomQuotientBody {
    /// `n x N` body with i.i.d. N(0, 1/n) entries.
    pub fn sample(n: usize, big_n: usize, seed: SeedSpec) -> Result<Self> {
        if n == 0 || big_n < n {
            return Err(Error::usage(format!("need 1 <= n <= N, got n={n}, N={big_n}")));
        }
        let gamma = gaussian_matrix(n, big_n, 1.0 / n as f64, seed)?;
        Self::build(gamma, Some(seed))
    }

    /// Body spanned by the columns of an explicit matrix, which must have
    /// full row rank.
    pub fn from_matrix(gamma: Matrix) -> Result<Self> {
        Self::build(gamma, None)
    }

    fn build(gamma: Matrix, seed: Option<SeedSpec>) -> Result<Self> {
        let (n, big_n) = (gamma.rows(), gamma.cols());
        if n == 0 || big_n == 0 {
            return Err(Error::usage("body matrix must be non-empty"));
        }
        if !gamma.is_finite() {
            return Err(Error::numeric("body matrix has non-finite entries"));
        }
        let sigma_min = smallest_row_singular_value(&gamma)?;
        if sigma_min <= MIN_SINGULAR_VALUE {
            return Err(Error::numeric(format!(
                "body matrix {n}x{big_n} is rank deficient: smallest singular value {sigma_min:.3e} <= {MIN_SINGULAR_VALUE:.0e}"
            )));
        }
        let cm = gamma.to_col_major();
        let mut split = Vec::with_capacity(2 * cm.len());
        split.extend_from_slice(&cm);
        split.extend(cm.iter().map(|x| -x));
        let column_norms = cm.chunks(n).map(norm2).collect();
        Ok(RandomQuotientBody {
            n,
            big_n,
            gamma,
            seed,
            column_norms,
            split,
            sigma_min,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of generating columns.
    pub fn num_columns(&self) -> usize {
        self.big_n
    }

    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }

    pub fn seed(&self) -> Option<SeedSpec> {
        self.seed
    }

    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.split[j * self.n..(j + 1) * self.n]
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.sigma_min
    }

    pub(crate) fn split_columns(&self) -> Columns<'_> {
        Columns {
            m: self.n,
            v: 2 * self.big_n,
            data: &self.split,
        }
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::usage(format!(
                "vector has length {}, body dimension is {}",
                x.len(),
                self.n
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("vector has non-finite entries"));
        }
        Ok(())
    }

    /// Gauge `‖x‖_B`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.norm_certificate(x)?.value)
    }

    /// Gauge with its dual certificate. `x` and `−x` are solved as the same
    /// LP, so the gauge is exactly symmetric.
    pub fn norm_certificate(&self, x: &[f64]) -> Result<NormCertificate> {
        self.check_vector(x)?;
        let Some(first) = x.iter().position(|&v| v != 0.0) else {
            return Ok(NormCertificate {
                value: 0.0,
                dual: vec![0.0; self.n],
                basis: vec![],
            });
        };
        let flip = x[first] < 0.0;
        // power-of-two rescaling to unit size is exact and keeps the solver
        // tolerances meaningful for tiny or huge inputs
        let amax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = 2f64.powi(-(amax.log2().floor() as i32 + 1).clamp(-1000, 1000));
        let s = if flip { -scale } else { scale };
        let rhs: Vec<f64> = x.iter().map(|v| v * s).collect();
        let ones = vec![1.0; 2 * self.big_n];
        let sol = solve_columns(self.split_columns(), &rhs, &ones, &LpOptions::default())?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::NotInSpan),
            LpStatus::Unbounded => return Err(Error::numeric("gauge LP reported unbounded")),
        }
        let mut dual = sol.dual_point.expect("optimal solution carries duals");
        let mut basis: Vec<usize> = sol.basis.expect("optimal solution carries a basis").into_iter().flatten().collect();
        if flip {
            dual.iter_mut().for_each(|v| *v = -*v);
            let nn = self.big_n;
            basis.iter_mut().for_each(|j| *j = if *j < nn { *j + nn } else { *j - nn });
        }
        Ok(NormCertificate {
            value: sol.objective_value.expect("optimal solution carries a value") / scale,
            dual,
            basis,
        })
    }

    /// Support function `h_B(u) = max_j |⟨g_j, u⟩|`.
    pub fn dual_norm(&self, u: &[f64]) -> Result<f64> {
        self.check_vector(u)?;
        Ok(self.support(u))
    }

    pub(crate) fn support(&self, u: &[f64]) -> f64 {
        self.support_argmax(u).1
    }

    /// `(j, ⟨g_j, u⟩)` at the first index maximizing `|⟨g_j, u⟩|`, with the
    /// value's absolute value.
    fn support_argmax(&self, u: &[f64]) -> (usize, f64, f64) {
        let mut best = (0, 0.0, -1.0);
        for (j, g) in self.split[..self.n * self.big_n].chunks_exact(self.n).enumerate() {
            let s = dot(g, u);
            if s.abs() > best.2 {
                best = (j, s, s.abs());
            }
        }
        (best.0, best.2, best.1)
    }

    /// Operator norm of `T` on `(R^n, ‖·‖_B)`: `max_j ‖T g_j‖_B`.
    pub fn operator_norm(&self, t: &Matrix) -> Result<f64> {
        Ok(self.operator_norm_argmax(t)?.1)
    }

    /// Operator norm and the first column index attaining it.
    pub fn operator_norm_argmax(&self, t: &Matrix) -> Result<(usize, f64)> {
        if t.rows() != self.n || t.cols() != self.n {
            return Err(Error::usage(format!(
                "operator is {}x{}, body dimension is {}",
                t.rows(),
                t.cols(),
                self.n
            )));
        }
        if !t.is_finite() {
            return Err(Error::numeric("operator has non-finite entries"));
        }
        self.max_gauge_over_columns(|g| t.matvec(g))
    }

    /// `max_j ‖f(g_j)‖_B` with the first maximizing index.
    pub(crate) fn max_gauge_over_columns<F>(&self, f: F) -> Result<(usize, f64)>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let values: Vec<f64> = (0..self.big_n)
            .into_par_iter()
            .map(|j| self.norm(&f(self.column(j))))
            .collect::<Result<_>>()?;
        Ok(first_max(&values))
    }

    /// Circumradius (exact) and an inradius estimate.
    ///
    /// The inradius is `min_{|u|=1} h_B(u)`. For n <= 2 it is computed
    /// exactly; otherwise by multi-start projected subgradient descent on the
    /// sphere followed by LP vertex ascent on the most promising restarts.
    pub fn radii(&self, restarts: usize, seed: SeedSpec) -> Result<RadiiEstimate> {
        let circumradius = self.column_norms.iter().cloned().fold(0.0, f64::max);
        if self.n == 1 {
            return Ok(RadiiEstimate {
                circumradius,
                inradius_estimate: circumradius,
                inradius_direction: vec![1.0],
                inradius_exact: true,
            });
        }
        if self.n == 2 {
            let u = self.planar_inradius_direction();
            return Ok(RadiiEstimate {
                circumradius,
                inradius_estimate: self.support(&u),
                inradius_direction: u,
                inradius_exact: true,
            });
        }
        if restarts == 0 {
            return Err(Error::usage("radii: restarts must be >= 1"));
        }
        let runs: Vec<(f64, Vec<f64>)> = (0..restarts as u64)
            .into_par_iter()
            .map(|r| self.subgradient_descent(seed.derive(r)))
            .collect();
        let mut order: Vec<usize> = (0..runs.len()).collect();
        order.sort_by(|&a, &b| runs[a].0.total_cmp(&runs[b].0).then(a.cmp(&b)));
        let polished: Vec<(f64, Vec<f64>)> = order
            .iter()
            .take(8)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|&i| self.vertex_ascent(runs[i].1.clone()))
            .collect::<Result<_>>()?;
        let (mut best_val, mut best_u) = runs[order[0]].clone();
        for (val, u) in polished.into_iter().chain(runs) {
            if val < best_val {
                best_val = val;
                best_u = u;
            }
        }
        Ok(RadiiEstimate {
            circumradius,
            inradius_estimate: self.support(&best_u),
            inradius_direction: best_u,
            inradius_exact: false,
        })
    }

    fn subgradient_descent(&self, seed: SeedSpec) -> (f64, Vec<f64>) {
        const STEPS: usize = 500;
        const DECAY: f64 = 0.97;
        let mut rng = seed.rng();
        let mut u = unit_sphere_point(&mut rng, self.n);
        let mut step = 0.1;
        let (mut best_val, mut best_u) = (f64::INFINITY, u.clone());
        for _ in 0..STEPS {
            let (j, val, signed) = self.support_argmax(&u);
            if val < best_val {
                best_val = val;
                best_u.copy_from_slice(&u);
            }
            let g = self.column(j);
            let s = signed.signum();
            // tangential component of the subgradient s·g_j
            let radial = s * dot(g, &u);
            for (ui, gi) in u.iter_mut().zip(g) {
                *ui -= step * (s * gi - radial * *ui);
            }
            let r = norm2(&u);
            u.iter_mut().for_each(|x| *x /= r);
            step *= DECAY;
        }
        let val = self.support(&u);
        if val < best_val {
            return (val, u);
        }
        (best_val, best_u)
    }

    /// Moves to facet normals of `B` until the support value stops
    /// decreasing: `u ← y/|y|` where `y` certifies the gauge of `u`.
    fn vertex_ascent(&self, mut u: Vec<f64>) -> Result<(f64, Vec<f64>)> {
        let mut val = self.support(&u);
        for _ in 0..64 {
            let cert = self.norm_certificate(&u)?;
            let ny = norm2(&cert.dual);
            if ny == 0.0 {
                break;
            }
            let next: Vec<f64> = cert.dual.iter().map(|y| y / ny).collect();
            let next_val = self.support(&next);
            if next_val >= val * (1.0 - 1e-14) {
                break;
            }
            u = next;
            val = next_val;
        }
        Ok((val, u))
    }

    /// Outward unit normal of the hull edge of `{±g_j}` nearest the origin.
    fn planar_inradius_direction(&self) -> Vec<f64> {
        let hull = planar_hull(self);
        let mut best = (f64::INFINITY, vec![1.0, 0.0]);
        for i in 0..hull.len() {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            let e = [q[0] - p[0], q[1] - p[1]];
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            if len == 0.0 {
                continue;
            }
            // counter-clockwise hull: outward normal is (e_y, -e_x)
            let nrm = vec![e[1] / len, -e[0] / len];
            let d = nrm[0] * p[0] + nrm[1] * p[1];
            if d < best.0 {
                best = (d, nrm);
            }
        }
        best.1
    }

    /// Monte Carlo mean width `M*_B`: average of `h_B` over uniform sphere
    /// directions.
    pub fn mean_width(&self, samples: usize, seed: SeedSpec) -> Result<MeanWidth> {
        if samples < 100 {
            return Err(Error::usage("mean_width: samples must be >= 100"));
        }
        let sums: Vec<(f64, f64)> = chunk_ranges(samples)
            .into_par_iter()
            .map(|(c, len)| {
                let mut rng = seed.derive(c as u64).rng();
                let mut s = (0.0, 0.0);
                for _ in 0..len {
                    let h = self.support(&unit_sphere_point(&mut rng, self.n));
                    s.0 += h;
                    s.1 += h * h;
                }
                s
            })
            .collect();
        let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let m = samples as f64;
        let mean = s1 / m;
        let var = ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
        Ok(MeanWidth {
            estimate: mean,
            std_error: (var / m).sqrt(),
        })
    }

    /// `(vol B / vol D)^{1/n}` by rejection sampling in the circumradius
    /// ball, with a 95% Wilson interval pushed through the `1/n` power.
    pub fn volume_ratio(&self, samples: usize, seed: SeedSpec) -> Result<VolumeRatio> {
        if self.n > VOLUME_DIM_CAP {
            return Err(Error::usage(format!(
                "volume_ratio: dimension {} exceeds the cap {VOLUME_DIM_CAP}",
                self.n
            )));
        }
        if samples < 10_000 {
            return Err(Error::usage("volume_ratio: samples must be >= 10000"));
        }
        let radius = self.column_norms.iter().cloned().fold(0.0, f64::max);
        let counts: Vec<u64> = chunk_ranges(samples)
            .into_par_iter()
            .map(|(c, len)| -> Result<u64> {
                let mut rng = seed.derive(c as u64).rng();
                let mut cache = GaugeCache::new(self);
                let mut inside = 0;
                for _ in 0..len {
                    let x = ball_point(&mut rng, self.n, radius);
                    if cache.contains(&x)? {
                        inside += 1;
                    }
                }
                Ok(inside)
            })
            .collect::<Result<_>>()?;
        let accepted: u64 = counts.iter().sum();
        let (lo, hi) = wilson_interval(accepted, samples as u64, 1.959_963_984_540_054);
        let p = accepted as f64 / samples as f64;
        let per_dim = |q: f64| radius * q.powf(1.0 / self.n as f64);
        Ok(VolumeRatio {
            ratio_per_dim: per_dim(p),
            ci_low: per_dim(lo),
            ci_high: per_dim(hi),
            accepted,
            samples: samples as u64,
        })
    }

    /// Extremes of the gauge over unit vectors of a subspace.
    ///
    /// Both extremes are attained values at concrete unit vectors, so
    /// `max/min` never exceeds the true distortion. The maximum is refined by
    /// LP vertex ascent inside the subspace from the best sampled directions.
    pub fn section_distortion(
        &self,
        subspace: &HaarSubspace,
        samples: usize,
        seed: SeedSpec,
    ) -> Result<SectionDistortion> {
        if subspace.ambient_dim != self.n || subspace.basis.rows() != self.n {
            return Err(Error::usage(format!(
                "subspace lives in R^{}, body in R^{}",
                subspace.ambient_dim, self.n
            )));
        }
        if samples == 0 {
            return Err(Error::usage("section_distortion: samples must be >= 1"));
        }
        let basis = &subspace.basis;
        let h = basis.cols();
        let values: Vec<(f64, Vec<f64>)> = chunk_ranges(samples)
            .into_par_iter()
            .map(|(c, len)| -> Result<Vec<(f64, Vec<f64>)>> {
                let mut rng = seed.derive(c as u64).rng();
                let mut cache = GaugeCache::new(self);
                (0..len)
                    .map(|_| {
                        let z = unit_sphere_point(&mut rng, h);
                        let x = basis.matvec(&z);
                        Ok((cache.gauge(&x)? / norm2(&x), z))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let mut min_gauge = f64::INFINITY;
        for (v, _) in &values {
            min_gauge = min_gauge.min(*v);
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].0.total_cmp(&values[a].0).then(a.cmp(&b)));
        let mut max_gauge = values[order[0]].0;
        if h > 1 {
            let refined: Vec<f64> = order
                .iter()
                .take(8)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|&i| self.section_ascent(basis, values[i].1.clone()))
                .collect::<Result<_>>()?;
            for v in refined {
                max_gauge = max_gauge.max(v);
                min_gauge = min_gauge.min(v);
            }
        }
        Ok(SectionDistortion { max_gauge, min_gauge })
    }

    /// Gauge ascent inside `span(basis)`: `z ← Bᵀy / |Bᵀy|` where `y`
    /// certifies the gauge of `Bz`.
    fn section_ascent(&self, basis: &Matrix, mut z: Vec<f64>) -> Result<f64> {
        let mut x = basis.matvec(&z);
        let mut val = self.norm(&x)? / norm2(&x);
        for _ in 0..64 {
            let cert = self.norm_certificate(&x)?;
            let w = basis.t_matvec(&cert.dual);
            let nw = norm2(&w);
            if nw == 0.0 {
                break;
            }
            let z2: Vec<f64> = w.iter().map(|v| v / nw).collect();
            let x2 = basis.matvec(&z2);
            let v2 = self.norm(&x2)? / norm2(&x2);
            if v2 <= val * (1.0 + 1e-14) {
                break;
            }
            z = z2;
            x = x2;
            val = v2;
        }
        let _ = z;
        Ok(val)
    }

    /// Body file: a header line then the matrix text of Γ.
    pub fn to_text(&self) -> String {
        let (m, s) = match self.seed {
            Some(s) => (s.master_seed.to_string(), s.stream_index.to_string()),
            None => ("-".into(), "-".into()),
        };
        format!(
            "GENQUOT-BODY v1 {} {} {m} {s}\n{}",
            self.n,
            self.big_n,
            write_matrix(&self.gamma)
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (header, rest) = text
            .split_once('\n')
            .ok_or_else(|| Error::Parse("body file has no header line".into()))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 6 || f[0] != "GENQUOT-BODY" || f[1] != "v1" {
            return Err(Error::Parse(format!("bad body header {header:?}")));
        }
        let n: usize = f[2].parse().map_err(|_| Error::Parse(format!("bad n {:?}", f[2])))?;
        let big_n: usize = f[3].parse().map_err(|_| Error::Parse(format!("bad N {:?}", f[3])))?;
        let seed = match (f[4], f[5]) {
            ("-", "-") => None,
            (m, s) => Some(SeedSpec::new(
                m.parse().map_err(|_| Error::Parse(format!("bad seed {m:?}")))?,
                s.parse().map_err(|_| Error::Parse(format!("bad stream {s:?}")))?,
            )),
        };
        let gamma = parse_matrix(rest)?;
        if gamma.rows() != n || gamma.cols() != big_n {
            return Err(Error::Parse(format!(
                "header says {n}x{big_n}, matrix is {}x{}",
                gamma.rows(),
                gamma.cols()
            )));
        }
        Self::build(gamma, seed)
    }
}

/// Smallest singular value of a wide matrix via an orthonormal basis of its
/// rows: `Γᵀ = QR` with `R = QᵀΓᵀ` square.
fn smallest_row_singular_value(gamma: &Matrix) -> Result<f64> {
    let (n, big_n) = (gamma.rows(), gamma.cols());
    if n > big_n {
        return Ok(0.0);
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| gamma.row(i).to_vec()).collect();
    let q = orthonormalize(&rows, 1e-12)?;
    if q.dropped > 0 {
        return Ok(0.0);
    }
    let r = q.basis.transpose().matmul(&gamma.transpose());
    Ok(*singular_values(&r)?.last().expect("n >= 1"))
}

fn first_max(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

const CHUNK: usize = 4096;

/// `(chunk index, length)` pairs covering `0..samples`.
pub(crate) fn chunk_ranges(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(CHUNK))
        .map(|c| (c, CHUNK.min(samples - c * CHUNK)))
        .collect()
}

/// 95%-style Wilson score interval for `k` successes out of `m`.
pub fn wilson_interval(k: u64, m: u64, z: f64) -> (f64, f64) {
    let m = m as f64;
    let p = k as f64 / m;
    let z2 = z * z;
    let denom = 1.0 + z2 / m;
    let centre = (p + z2 / (2.0 * m)) / denom;
    let half = z * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Counter-clockwise convex hull of `{±g_j}` for a planar body.
fn planar_hull(body: &RandomQuotientBody) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = (0..2 * body.big_n)
        .map(|j| {
            let c = body.column(j);
            [c[0], c[1]]
        })
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Facets of `B` discovered by earlier gauge LPs. Each facet is a dual
/// vertex `y` (so `⟨y, x⟩ <= ‖x‖_B` for every x) with the inverse of its
/// basis; when `x` lies in the facet's cone the gauge is `⟨y, x⟩` exactly.
pub(crate) struct GaugeCache<'a> {
    body: &'a RandomQuotientBody,
    facets: Vec<Facet>,
}

struct Facet {
    y: Vec<f64>,
    /// row-major `n x n` inverse of the basis columns
    binv: Vec<f64>,
}

const CACHE_CAP: usize = 4096;

impl<'a> GaugeCache<'a> {
    pub(crate) fn new(body: &'a RandomQuotientBody) -> Self {
        GaugeCache {
            body,
            facets: Vec::new(),
        }
    }

    /// Membership `‖x‖_B <= 1 + MEMBERSHIP_TOL`.
    pub(crate) fn contains(&mut self, x: &[f64]) -> Result<bool> {
        let limit = 1.0 + MEMBERSHIP_TOL;
        // a cached facet separating x settles it without a solve
        for i in 0..self.facets.len() {
            if dot(&self.facets[i].y, x) > limit {
                if i > 0 {
                    self.facets.swap(i, i / 2);
                }
                return Ok(false);
            }
        }
        Ok(self.gauge(x)? <= limit)
    }

    pub(crate) fn gauge(&mut self, x: &[f64]) -> Result<f64> {
        let n = self.body.n;
        if let Some((best, lb)) = self
            .facets
            .iter()
            .enumerate()
            .map(|(i, f)| (i, dot(&f.y, x)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        {
            let f = &self.facets[best];
            let in_cone = (0..n).all(|r| dot(&f.binv[r * n..(r + 1) * n], x) >= -1e-12 * (1.0 + lb.abs()));
            if in_cone && lb > 0.0 {
                return Ok(lb);
            }
        }
        let cert = self.body.norm_certificate(x)?;
        if cert.basis.len() == n && self.facets.len() < CACHE_CAP {
            let mut bm = vec![0.0; n * n];
            for (c, &j) in cert.basis.iter().enumerate() {
                for (r, v) in self.body.column(j).iter().enumerate() {
                    bm[r * n + c] = *v;
                }
            }
            if let Some(binv) = invert(&mut bm, n) {
                self.facets.push(Facet { y: cert.dual, binv });
            }
        }
        Ok(cert.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::gaussian_vector;
    use proptest::prelude::*;

    fn identity_body(n: usize) -> RandomQuotientBody {
        RandomQuotientBody::from_matrix(Matrix::identity(n)).unwrap()
    }

    /// Gauge of a centrally symmetric polygon from its hull edges:
    /// `max_e ⟨n_e, x⟩ / d_e`.
    fn polygon_gauge(hull: &[[f64; 2]], x: [f64; 2]) -> f64 {
        let mut g = 0.0f64;
        for i in 0..hull.len() {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            let nrm = [q[1] - p[1], -(q[0] - p[0])];
            let d = nrm[0] * p[0] + nrm[1] * p[1];
            g = g.max((nrm[0] * x[0] + nrm[1] * x[1]) / d);
        }
        g
    }

    /// Operator norm by brute force over an angular net of the unit circle.
    fn net_operator_norm(body: &RandomQuotientBody, t: &Matrix, points: usize) -> f64 {
        let hull = planar_hull(body);
        (0..points)
            .map(|i| {
                let th = std::f64::consts::PI * i as f64 / points as f64;
                let x = [th.cos(), th.sin()];
                let tx = t.matvec(&x);
                polygon_gauge(&hull, [tx[0], tx[1]]) / polygon_gauge(&hull, x)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn deterministic_sampling() {
        let a = RandomQuotientBody::sample(4, 8, SeedSpec::new(5, 0)).unwrap();
        let b = RandomQuotientBody::sample(4, 8, SeedSpec::new(5, 0)).unwrap();
        assert_eq!(a.gamma(), b.gamma());
        for (j, &c) in a.column_norms().iter().enumerate() {
            assert!((c - norm2(&a.gamma().col(j))).abs() <= 1e-12);
        }
    }

    #[test]
    fn column_norms_near_one() {
        let mut good = 0;
        for s in 0..200 {
            let b = RandomQuotientBody::sample(50, 100, SeedSpec::new(21, s)).unwrap();
            if b.column_norms().iter().all(|&c| (0.5..=2.0).contains(&c)) {
                good += 1;
            }
        }
        assert!(good as f64 / 200.0 >= 0.99, "{good}");
    }

    #[test]
    fn segment_body() {
        let b = RandomQuotientBody::sample(1, 1, SeedSpec::new(3, 0)).unwrap();
        let g = b.gamma()[(0, 0)].abs();
        assert!((b.norm(&[g]).unwrap() - 1.0).abs() < 1e-12);
        assert!((b.norm(&[-2.0 * g]).unwrap() - 2.0).abs() < 1e-12);
        let v = b.volume_ratio(10_000, SeedSpec::new(1, 1)).unwrap();
        assert!((v.ratio_per_dim - g).abs() < 1e-12);
        assert!(v.ci_low <= g && g <= v.ci_high);
    }

    #[test]
    fn rank_deficient_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(RandomQuotientBody::from_matrix(m), Err(Error::Numeric(_))));
        assert!(RandomQuotientBody::sample(3, 2, SeedSpec::new(1, 1)).is_err());
    }

    #[test]
    fn cross_polytope_gauge() {
        let b = identity_body(3);
        assert!((b.norm(&[1.0, -2.0, 3.0]).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(b.norm(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(b.dual_norm(&[0.0; 3]).unwrap(), 0.0);
        let b2 = identity_body(2);
        assert_eq!(b2.dual_norm(&[3.0, -4.0]).unwrap(), 4.0);
    }

    #[test]
    fn vertices_have_gauge_at_most_one() {
        let b = RandomQuotientBody::sample(5, 20, SeedSpec::new(2, 2)).unwrap();
        for j in 0..20 {
            assert!(b.norm(b.column(j)).unwrap() <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn operator_norm_of_identity_multiples() {
        let b = RandomQuotientBody::sample(4, 12, SeedSpec::new(6, 0)).unwrap();
        assert!((b.operator_norm(&Matrix::identity(4)).unwrap() - 1.0).abs() < 1e-8);
        assert!((b.operator_norm(&Matrix::identity(4).scale(2.0)).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn operator_norm_matches_angular_net() {
        let b = RandomQuotientBody::sample(2, 4, SeedSpec::new(7, 0)).unwrap();
        for s in 0..5 {
            let t = gaussian_matrix(2, 2, 1.0, SeedSpec::new(7, 100 + s)).unwrap();
            let exact = b.operator_norm(&t).unwrap();
            let net = net_operator_norm(&b, &t, 10_000);
            assert!(net <= exact + 1e-9);
            assert!((exact - net).abs() <= 1e-3, "{exact} vs {net}");
        }
    }

    #[test]
    fn radii_of_cross_polytope() {
        let r = identity_body(2).radii(64, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(r.circumradius, 1.0);
        assert!((r.inradius_estimate - 0.5f64.sqrt()).abs() < 1e-4);
        // higher dimension goes through the search path
        let r = identity_body(4).radii(16, SeedSpec::new(1, 0)).unwrap();
        assert!((r.inradius_estimate - 0.5).abs() < 1e-4, "{}", r.inradius_estimate);
    }

    #[test]
    fn radii_certificate_consistent() {
        let b = RandomQuotientBody::sample(6, 24, SeedSpec::new(8, 0)).unwrap();
        let r = b.radii(16, SeedSpec::new(8, 1)).unwrap();
        assert!(r.inradius_estimate <= r.circumradius);
        assert!((norm2(&r.inradius_direction) - 1.0).abs() < 1e-12);
        assert!((b.dual_norm(&r.inradius_direction).unwrap() - r.inradius_estimate).abs() <= 1e-10);
    }

    #[test]
    fn planar_inradius_is_exact() {
        // brute force over all point pairs: a pair spans a hull edge when
        // every other point lies on the origin's side of its line
        let b = RandomQuotientBody::sample(2, 6, SeedSpec::new(9, 0)).unwrap();
        let r = b.radii(1, SeedSpec::new(0, 0)).unwrap();
        let pts: Vec<&[f64]> = (0..12).map(|j| b.column(j)).collect();
        let mut oracle = f64::INFINITY;
        for i in 0..12 {
            for k in 0..12 {
                let (p, q) = (pts[i], pts[k]);
                let e = [q[0] - p[0], q[1] - p[1]];
                let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                if len < 1e-12 {
                    continue;
                }
                let nrm = [e[1] / len, -e[0] / len];
                let d = nrm[0] * p[0] + nrm[1] * p[1];
                if d > 0.0 && pts.iter().all(|z| nrm[0] * z[0] + nrm[1] * z[1] <= d + 1e-12) {
                    oracle = oracle.min(d);
                }
            }
        }
        assert!((r.inradius_estimate - oracle).abs() < 1e-12, "{} vs {oracle}", r.inradius_estimate);
    }

    #[test]
    fn mean_width_of_square() {
        let b = identity_body(2);
        let m = b.mean_width(1_000_000, SeedSpec::new(4, 0)).unwrap();
        let exact = 2.0 * 2f64.sqrt() / std::f64::consts::PI;
        assert!((m.estimate - exact).abs() <= 3.0 * m.std_error, "{m:?}");
        let scaled = RandomQuotientBody::from_matrix(Matrix::identity(2).scale(3.0)).unwrap();
        let m3 = scaled.mean_width(1000, SeedSpec::new(4, 0)).unwrap();
        let m1 = b.mean_width(1000, SeedSpec::new(4, 0)).unwrap();
        assert!((m3.estimate - 3.0 * m1.estimate).abs() < 1e-12);
    }

    #[test]
    fn volume_of_cross_polytope() {
        let v = identity_body(2).volume_ratio(100_000, SeedSpec::new(5, 0)).unwrap();
        let exact = (2.0 / std::f64::consts::PI).sqrt();
        assert!(v.ci_low <= exact && exact <= v.ci_high, "{v:?}");
        assert!(matches!(identity_body(9).volume_ratio(10_000, SeedSpec::new(1, 1)), Err(Error::Usage(_))));
    }

    #[test]
    fn cache_agrees_with_lp() {
        let b = RandomQuotientBody::sample(4, 16, SeedSpec::new(12, 0)).unwrap();
        let mut cache = GaugeCache::new(&b);
        let mut rng = SeedSpec::new(12, 1).rng();
        for _ in 0..400 {
            let x = ball_point(&mut rng, 4, 2.0);
            let direct = b.norm(&x).unwrap();
            assert!((cache.gauge(&x).unwrap() - direct).abs() <= 1e-9 * (1.0 + direct));
        }
    }

    #[test]
    fn section_examples() {
        let b = identity_body(2);
        let line = HaarSubspace::from_basis(Matrix::from_columns(&[vec![0.6, 0.8]]).unwrap()).unwrap();
        let d = b.section_distortion(&line, 100, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(d.max_gauge, d.min_gauge);
        let full = HaarSubspace::from_basis(Matrix::identity(2)).unwrap();
        let d = b.section_distortion(&full, 10_000, SeedSpec::new(1, 0)).unwrap();
        assert!((d.distortion() - 2f64.sqrt()).abs() < 1e-2);
        let r = b.radii(64, SeedSpec::new(1, 0)).unwrap();
        assert!(d.max_gauge >= 1.0 / r.inradius_estimate - 1e-6);
    }

    #[test]
    fn text_round_trip() {
        let b = RandomQuotientBody::sample(3, 7, SeedSpec::new(77, 4)).unwrap();
        let back = RandomQuotientBody::from_text(&b.to_text()).unwrap();
        assert_eq!(back.gamma(), b.gamma());
        assert_eq!(back.seed(), Some(SeedSpec::new(77, 4)));
        assert!(b.to_text().starts_with("GENQUOT-BODY v1 3 7 77 4\n3 7\n"));
        let inj = identity_body(2);
        assert!(RandomQuotientBody::from_text(&inj.to_text()).unwrap().seed().is_none());
        assert!(RandomQuotientBody::from_text("GENQUOT-BODY v1 2 2 - -\n1 1\n1\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gauge_support_pairing(n in 2usize..6, extra in 0usize..20, seed in any::<u64>()) {
            let b = RandomQuotientBody::sample(n, n + extra + 1, SeedSpec::new(seed, 0)).unwrap();
            let x = gaussian_vector(n, 1.0, SeedSpec::new(seed, 1));
            let u = gaussian_vector(n, 1.0, SeedSpec::new(seed, 2));
            let cert = b.norm_certificate(&x).unwrap();
            prop_assert!(dot(&x, &u) <= cert.value * b.dual_norm(&u).unwrap() + 1e-8);
            prop_assert!((dot(&x, &cert.dual) - cert.value).abs() <= 1e-6);
            prop_assert!(b.dual_norm(&cert.dual).unwrap() <= 1.0 + 1e-8);
            // lower bound through the circumradius
            let r = b.column_norms().iter().cloned().fold(0.0, f64::max);
            prop_assert!(cert.value >= norm2(&x) / r - 1e-8);
        }

        #[test]
        fn gauge_is_a_norm(n in 2usize..6, extra in 0usize..20, seed in any::<u64>(), s in -5.0f64..5.0) {
            let b = RandomQuotientBody::sample(n, n + extra + 1, SeedSpec::new(seed, 0)).unwrap();
            let x = gaussian_vector(n, 1.0, SeedSpec::new(seed, 1));
            let y = gaussian_vector(n, 1.0, SeedSpec::new(seed, 2));
            let nx = b.norm(&x).unwrap();
            let ny = b.norm(&y).unwrap();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, c)| a + c).collect();
            prop_assert!(b.norm(&sum).unwrap() <= nx + ny + 1e-8);
            let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
            prop_assert!((b.norm(&sx).unwrap() - s.abs() * nx).abs() <= 1e-9 * (1.0 + nx * s.abs()));
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert_eq!(b.norm(&neg).unwrap().to_bits(), nx.to_bits());
        }

        #[test]
        fn operator_norm_dominates_extreme_points(n in 2usize..5, extra in 0usize..8, seed in any::<u64>()) {
            let b = RandomQuotientBody::sample(n, n + extra + 1, SeedSpec::new(seed, 0)).unwrap();
            let t = gaussian_matrix(n, n, 1.0, SeedSpec::new(seed, 3)).unwrap();
            let (arg, q) = b.operator_norm_argmax(&t).unwrap();
            for j in 0..b.num_columns() {
                prop_assert!(q >= b.norm(&t.matvec(b.column(j))).unwrap() - 1e-8);
            }
            prop_assert_eq!(b.norm(&t.matvec(b.column(arg))).unwrap(), q);
        }

        #[test]
        fn cross_polytope_variants(n in 1usize..=20, seed in any::<u64>(), scale in 0.5f64..3.0) {
            // [I, s·I, I]: gauge is ‖x‖₁ / max(1, s)
            let mut cols: Vec<Vec<f64>> = Vec::new();
            for j in 0..n { let mut e = vec![0.0; n]; e[j] = 1.0; cols.push(e); }
            for j in 0..n { let mut e = vec![0.0; n]; e[j] = scale; cols.push(e); }
            for j in 0..n { let mut e = vec![0.0; n]; e[j] = 1.0; cols.push(e); }
            let b = RandomQuotientBody::from_matrix(Matrix::from_columns(&cols).unwrap()).unwrap();
            let x = gaussian_vector(n, 1.0, SeedSpec::new(seed, 0));
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            prop_assert!((b.norm(&x).unwrap() - l1 / scale.max(1.0)).abs() <= 1e-8);
        }
    }
}
