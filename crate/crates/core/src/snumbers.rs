//! Singular values, bracketed Gelfand numbers on `(R^n, ‖·‖_B)`, shift
//! searches and the Hilbert–Schmidt bound for norm-one operators.
//!
//! Gelfand numbers of a non-Euclidean norm are an infimum over subspaces and
//! are not computed exactly. Instead each `c_k` is bracketed from two sides:
//!
//! * the Euclidean sandwich `r D ⊆ B ⊆ R D` gives
//!   `(r/R) s_k(T) <= c_k(T) <= (R/r) s_k(T)`;
//! * restricting to `Z_j`, the complement of the top `j − 1` right singular
//!   vectors, gives `c_k(T) <= ‖T P_{Z_j}‖_X` for every `j <= k`, and the right
//!   side is an operator norm, computed exactly by LP.
//!
//! `c_1` is the operator norm itself and is always exact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{RadiiEstimate, RandomQuotientBody};
use crate::error::{Error, Result};
use crate::linalg::{check_orthonormal, singular_values, svd, Matrix};
use crate::sampler::SeedSpec;

/// How a bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Rigorous: computed from exact (LP or SVD) quantities only.
    Exact,
    /// Rigorous Euclidean sandwich with exactly known radii.
    Sandwich,
    /// Depends on the sampled inradius estimate.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SNumberBracket {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub lower_kind: BoundKind,
    pub upper_kind: BoundKind,
}

impl SNumberBracket {
    pub fn contains(&self, value: f64, tol: f64) -> bool {
        self.lower - tol <= value && value <= self.upper + tol
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftSearchResult {
    pub best_shift: f64,
    /// `s_k(T − best_shift·Id)`.
    pub proxy_value: f64,
    pub bracket_at_best: SNumberBracket,
    pub grid: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SumBracket {
    /// `tr(T)/n`, the shift to the traceless part.
    pub traceless_shift: f64,
    /// Total shift λ minimizing the proxy `Σ s_i(T − λ·Id)`.
    pub best_shift: f64,
    pub proxy_sum: f64,
    pub lower: f64,
    pub upper: f64,
    pub kind: BoundKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MnWitness {
    pub subspace_basis: Matrix,
    pub alpha: usize,
    pub beta: f64,
    /// Smallest singular value of `P_{F⊥} T` restricted to `F`.
    pub achieved: f64,
    pub member: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HsCheck {
    pub hs: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Singular values of `T`, non-increasing.
pub fn euclidean_s_numbers(t: &Matrix) -> Result<Vec<f64>> {
    singular_values(t)
}

/// Brackets Gelfand numbers of operators on one body.
pub struct GelfandEstimator<'a> {
    body: &'a RandomQuotientBody,
    radii: RadiiEstimate,
}

impl<'a> GelfandEstimator<'a> {
    pub fn new(body: &'a RandomQuotientBody, restarts: usize, seed: SeedSpec) -> Result<Self> {
        let radii = body.radii(restarts, seed)?;
        Ok(Self::with_radii(body, radii))
    }

    pub fn with_radii(body: &'a RandomQuotientBody, radii: RadiiEstimate) -> Self {
        GelfandEstimator { body, radii }
    }

    pub fn radii(&self) -> &RadiiEstimate {
        &self.radii
    }

    fn sandwich_kind(&self) -> BoundKind {
        if self.radii.inradius_exact {
            BoundKind::Sandwich
        } else {
            BoundKind::Sampled
        }
    }

    /// `R / r`
    fn distortion(&self) -> f64 {
        self.radii.circumradius / self.radii.inradius_estimate
    }

    fn check_operator(&self, t: &Matrix) -> Result<()> {
        let n = self.body.n();
        if t.rows() != n || t.cols() != n {
            return Err(Error::usage(format!(
                "operator is {}x{}, body dimension is {n}",
                t.rows(),
                t.cols()
            )));
        }
        if !t.is_finite() {
            return Err(Error::numeric("operator has non-finite entries"));
        }
        Ok(())
    }

    /// Bracket for `c_k(T)`, or for the Kolmogorov number `d_k(T)` computed
    /// as `c_k(Tᵀ)` on the dual norm when `dual` is set.
    pub fn bracket(&self, t: &Matrix, k: usize, dual: bool) -> Result<SNumberBracket> {
        let n = self.body.n();
        if k == 0 || k > n {
            return Err(Error::usage(format!("k must lie in 1..={n}, got {k}")));
        }
        Ok(self.brackets_upto(t, k, dual)?.pop().expect("k >= 1"))
    }

    /// Brackets for every `k = 1..=n`; both sides are non-increasing in `k`.
    pub fn brackets(&self, t: &Matrix, dual: bool) -> Result<Vec<SNumberBracket>> {
        self.brackets_upto(t, self.body.n(), dual)
    }

    fn brackets_upto(&self, t: &Matrix, kmax: usize, dual: bool) -> Result<Vec<SNumberBracket>> {
        self.check_operator(t)?;
        let n = self.body.n();
        let dec = svd(t)?;
        let s = &dec.singular_values;
        // Z_j spans singular vectors j-1..n; right ones for T, left ones
        // (= right ones of Tᵀ) in dual mode
        let vecs = if dual { &dec.left_basis } else { &dec.right_basis };
        let certified: Vec<f64> = (1..=kmax)
            .map(|j| {
                let z = vecs.select_columns(&(j - 1..n).collect::<Vec<_>>());
                let p = z.matmul(&z.transpose());
                let m = if dual { p.matmul(t) } else { t.matmul(&p) };
                self.body.operator_norm(&m)
            })
            .collect::<Result<_>>()?;
        let op_norm = certified[0];
        let ratio = self.distortion();
        let kind = self.sandwich_kind();
        let mut out = Vec::with_capacity(kmax);
        let mut cert_min = f64::INFINITY;
        for k in 1..=kmax {
            cert_min = cert_min.min(certified[k - 1]);
            let sandwich_hi = ratio * s[k - 1];
            let (upper, upper_kind) = if cert_min <= sandwich_hi {
                (cert_min, BoundKind::Exact)
            } else {
                (sandwich_hi, kind)
            };
            let (mut lower, mut lower_kind) = if k == 1 {
                (op_norm, BoundKind::Exact)
            } else {
                let lo = s[k - 1] / ratio;
                if lo <= op_norm {
                    (lo, kind)
                } else {
                    (op_norm, BoundKind::Exact)
                }
            };
            if lower > upper {
                lower = upper;
                lower_kind = upper_kind;
            }
            if let Some(prev) = out.last() {
                let prev: &SNumberBracket = prev;
                if lower > prev.lower {
                    lower = prev.lower;
                    lower_kind = prev.lower_kind;
                }
            }
            out.push(SNumberBracket {
                k,
                lower,
                upper,
                lower_kind,
                upper_kind,
            });
        }
        Ok(out)
    }

    /// Searches the shift λ minimizing `s_k(T − λ·Id)` over a uniform grid on
    /// `[−2‖T‖_X, 2‖T‖_X]` plus the candidates `0`, `tr(T)/n` and the diagonal
    /// entries of `T`, then refines by golden section around the best point.
    pub fn min_over_shifts(&self, t: &Matrix, k: usize, grid_points: usize) -> Result<ShiftSearchResult> {
        self.check_operator(t)?;
        let n = self.body.n();
        if k == 0 || k > n {
            return Err(Error::usage(format!("k must lie in 1..={n}, got {k}")));
        }
        let width = self.body.operator_norm(t)?;
        let proxy = |lam: f64| -> Result<f64> { Ok(singular_values(&t.shifted(lam))?[k - 1]) };
        let mut candidates = vec![0.0, t.trace() / n as f64];
        candidates.extend((0..n).map(|i| t[(i, i)]));
        let (best_shift, proxy_value, grid) = search_shift(proxy, width, 0.0, grid_points, &candidates)?;
        let bracket_at_best = self.bracket(&t.shifted(best_shift), k, false)?;
        Ok(ShiftSearchResult {
            best_shift,
            proxy_value,
            bracket_at_best,
            grid,
        })
    }

    /// Shift minimizing `Σ_i s_i(T − λ·Id)`, searched around the traceless
    /// representative `T − (tr T / n)·Id`, and the sandwich bracket for the
    /// sum of Gelfand numbers at that shift.
    pub fn sum_bracket(&self, t: &Matrix, grid_points: usize) -> Result<SumBracket> {
        self.check_operator(t)?;
        let n = self.body.n();
        let lam0 = t.trace() / n as f64;
        let t0 = t.shifted(lam0);
        let width = self.body.operator_norm(&t0)?;
        let proxy = |lam: f64| -> Result<f64> { Ok(singular_values(&t.shifted(lam))?.iter().sum()) };
        // grid is centred on lam0; candidates are absolute shifts
        let mut candidates = vec![lam0, 0.0];
        candidates.extend((0..n).map(|i| t[(i, i)]));
        let (best_shift, proxy_sum, _) = search_shift(proxy, width, lam0, grid_points, &candidates)?;
        let ratio = self.distortion();
        Ok(SumBracket {
            traceless_shift: lam0,
            best_shift,
            proxy_sum,
            lower: proxy_sum / ratio,
            upper: proxy_sum * ratio,
            kind: self.sandwich_kind(),
        })
    }
}

/// Minimizes `f` over `centre + [−2w, 2w]` sampled at `points` grid points
/// together with `extra` candidates. The best point is refined by golden
/// section over the neighbouring grid cells; a refinement is kept only when
/// strictly better. Ties resolve to the smaller shift.
fn search_shift<F>(f: F, w: f64, centre: f64, points: usize, extra: &[f64]) -> Result<(f64, f64, Vec<(f64, f64)>)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if points < 2 {
        return Err(Error::usage("shift search needs at least 2 grid points"));
    }
    let lo = centre - 2.0 * w;
    let step = 4.0 * w / (points - 1) as f64;
    let mut lams: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    lams.extend_from_slice(extra);
    let values: Vec<f64> = lams.par_iter().map(|&l| f(l)).collect::<Result<_>>()?;
    let grid: Vec<(f64, f64)> = lams[..points].iter().cloned().zip(values[..points].iter().cloned()).collect();
    let mut best = (lams[0], values[0]);
    for (&l, &v) in lams.iter().zip(&values) {
        if v < best.1 || (v == best.1 && l < best.0) {
            best = (l, v);
        }
    }
    if step > 0.0 && best.1 > 0.0 {
        let (l, v) = golden_section(&f, best.0 - step, best.0 + step)?;
        if v < best.1 {
            best = (l, v);
        }
    }
    Ok((best.0, best.1, grid))
}

fn golden_section<F>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Checks the lower bound `‖P_{F⊥} T x‖₂ >= β‖x‖₂` on `F = span(basis)`.
pub fn mn_witness_check(t: &Matrix, basis: &Matrix, beta: f64) -> Result<MnWitness> {
    let n = t.rows();
    if t.cols() != n || basis.rows() != n {
        return Err(Error::usage("mn_witness_check: dimension mismatch"));
    }
    if basis.cols() == 0 {
        return Err(Error::usage("mn_witness_check: empty subspace"));
    }
    check_orthonormal(basis, 1e-10)?;
    let comp = Matrix::identity(n).sub(&basis.matmul(&basis.transpose()));
    let m = comp.matmul(t).matmul(basis);
    let achieved = *singular_values(&m)?.last().expect("non-empty");
    Ok(MnWitness {
        subspace_basis: basis.clone(),
        alpha: basis.cols(),
        beta,
        achieved,
        member: achieved >= beta,
    })
}

/// Heuristic witness of dimension `alpha`: the better of the top and bottom
/// right singular subspaces of the traceless part of `T`.
pub fn suggest_mn_witness(t: &Matrix, alpha: usize) -> Result<MnWitness> {
    let n = t.rows();
    if alpha == 0 || alpha > n {
        return Err(Error::usage(format!("alpha must lie in 1..={n}")));
    }
    let t0 = t.shifted(t.trace() / n as f64);
    let v = svd(&t0)?.right_basis;
    let top = v.select_columns(&(0..alpha).collect::<Vec<_>>());
    let bottom = v.select_columns(&(n - alpha..n).collect::<Vec<_>>());
    let a = mn_witness_check(t, &top, 0.0)?;
    let b = mn_witness_check(t, &bottom, 0.0)?;
    let mut best = if b.achieved > a.achieved { b } else { a };
    best.beta = best.achieved;
    Ok(best)
}

/// Frobenius norm of `T / ‖T‖_X` against `√N`.
pub fn hs_of_normalized(body: &RandomQuotientBody, t: &Matrix) -> Result<HsCheck> {
    let q = body.operator_norm(t)?;
    if q == 0.0 {
        return Err(Error::usage("hs_of_normalized: operator is zero"));
    }
    let hs = t.frobenius_norm() / q;
    let bound = (body.num_columns() as f64).sqrt();
    Ok(HsCheck {
        hs,
        bound,
        ok: hs <= bound + 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm2, orthonormalize, DEFAULT_DROP_TOL};
    use crate::sampler::{gaussian_matrix, haar_subspace};
    use proptest::prelude::*;

    fn body(n: usize, big_n: usize, seed: u64) -> RandomQuotientBody {
        RandomQuotientBody::sample(n, big_n, SeedSpec::new(seed, 0)).unwrap()
    }

    fn fibonacci_sphere(points: usize) -> Vec<[f64; 3]> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..points)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / points as f64;
                let r = (1.0 - z * z).sqrt();
                let th = golden * i as f64;
                [r * th.cos(), r * th.sin(), z]
            })
            .collect()
    }

    /// `c_k` of `T` on Euclidean R³ by brute force: minimize the restricted
    /// norm over a net of codimension `k − 1` subspaces.
    fn net_gelfand_3d(t: &Matrix, k: usize, net: &[[f64; 3]]) -> f64 {
        match k {
            1 => net.iter().map(|u| norm2(&t.matvec(u))).fold(0.0, f64::max),
            2 => net
                .iter()
                .map(|u| {
                    let b = orthonormalize(&[u.to_vec(), vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], DEFAULT_DROP_TOL)
                        .unwrap()
                        .basis;
                    let plane = b.select_columns(&[1, 2]);
                    singular_values(&t.matmul(&plane)).unwrap()[0]
                })
                .fold(f64::INFINITY, f64::min),
            3 => net.iter().map(|u| norm2(&t.matvec(u))).fold(f64::INFINITY, f64::min),
            _ => unreachable!(),
        }
    }

    #[test]
    fn diagonal_s_numbers() {
        let s = euclidean_s_numbers(&Matrix::diag(&[1.0, 1.0, 0.0, 0.0])).unwrap();
        assert_eq!(s[1], 1.0);
        assert_eq!(s[2], 0.0);
        // rank 2 product
        let a = gaussian_matrix(5, 2, 1.0, SeedSpec::new(1, 0)).unwrap();
        let t = a.matmul(&a.transpose());
        assert!(euclidean_s_numbers(&t).unwrap()[2] <= 1e-10);
    }

    #[test]
    fn euclidean_gelfand_equals_singular_values() {
        let net = fibonacci_sphere(10_000);
        for seed in 0..3 {
            let t = gaussian_matrix(3, 3, 1.0, SeedSpec::new(40 + seed, 0)).unwrap();
            let s = euclidean_s_numbers(&t).unwrap();
            for k in 1..=3 {
                let brute = net_gelfand_3d(&t, k, &net);
                assert!(brute >= s[k - 1] - 1e-2 && brute <= s[k - 1] + 1e-2, "k={k}: {brute} vs {}", s[k - 1]);
            }
        }
    }

    #[test]
    fn bracket_identity_and_zero() {
        let b = body(5, 20, 3);
        let est = GelfandEstimator::new(&b, 16, SeedSpec::new(3, 1)).unwrap();
        for k in 1..=5 {
            assert!(est.bracket(&Matrix::identity(5), k, false).unwrap().contains(1.0, 1e-9));
            let z = est.bracket(&Matrix::zeros(5, 5), k, false).unwrap();
            assert_eq!((z.lower, z.upper), (0.0, 0.0));
        }
        assert!(est.bracket(&Matrix::identity(5), 6, false).is_err());
    }

    #[test]
    fn first_gelfand_number_is_operator_norm() {
        let b = body(2, 4, 11);
        let est = GelfandEstimator::new(&b, 16, SeedSpec::new(11, 1)).unwrap();
        for s in 0..4 {
            let t = gaussian_matrix(2, 2, 1.0, SeedSpec::new(11, 10 + s)).unwrap();
            let q = b.operator_norm(&t).unwrap();
            let br = est.bracket(&t, 1, false).unwrap();
            assert!(br.contains(q, 1e-6));
            assert_eq!(br.lower_kind, BoundKind::Exact);
            // Kolmogorov side: d_1 is also the operator norm
            assert!(est.bracket(&t, 1, true).unwrap().contains(q, 1e-6));
        }
    }

    #[test]
    fn shift_search_closed_forms() {
        let b = body(4, 16, 5);
        let est = GelfandEstimator::new(&b, 16, SeedSpec::new(5, 1)).unwrap();
        let r = est.min_over_shifts(&Matrix::identity(4).scale(5.0), 2, 201).unwrap();
        assert_eq!(r.best_shift, 5.0);
        assert_eq!(r.proxy_value, 0.0);
        assert_eq!(r.bracket_at_best.upper, 0.0);
        let r = est.min_over_shifts(&Matrix::diag(&[1.0, 1.0, 0.0, 0.0]), 2, 201).unwrap();
        assert!((r.proxy_value - 0.5).abs() < 1e-9, "{}", r.proxy_value);
        assert!((r.best_shift - 0.5).abs() < 1e-9);

        let b2 = body(2, 6, 5);
        let est2 = GelfandEstimator::new(&b2, 16, SeedSpec::new(5, 1)).unwrap();
        let skew = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let r = est2.min_over_shifts(&skew, 1, 201).unwrap();
        assert!(r.best_shift.abs() < 1e-9);
        assert!((r.proxy_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sum_bracket_examples() {
        let b = body(2, 6, 8);
        let est = GelfandEstimator::new(&b, 16, SeedSpec::new(8, 1)).unwrap();
        let r = est.sum_bracket(&Matrix::identity(2), 201).unwrap();
        assert_eq!(r.traceless_shift, 1.0);
        assert_eq!(r.proxy_sum, 0.0);
        assert_eq!((r.lower, r.upper), (0.0, 0.0));
        let r = est.sum_bracket(&Matrix::diag(&[1.0, -1.0]), 201).unwrap();
        assert_eq!(r.traceless_shift, 0.0);
        assert!((r.proxy_sum - 2.0).abs() < 1e-12);
        let ratio = est.radii().circumradius / est.radii().inradius_estimate;
        assert!((r.upper - 2.0 * ratio).abs() < 1e-9 && (r.lower - 2.0 / ratio).abs() < 1e-9);

        let b8 = body(8, 32, 8);
        let est8 = GelfandEstimator::new(&b8, 8, SeedSpec::new(8, 1)).unwrap();
        let t = gaussian_matrix(8, 8, 1.0, SeedSpec::new(8, 2)).unwrap();
        let r = est8.sum_bracket(&t, 101).unwrap();
        let at_zero: f64 = euclidean_s_numbers(&t).unwrap().iter().sum();
        assert!(r.proxy_sum <= at_zero);
    }

    #[test]
    fn witness_examples() {
        let rot = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let e1 = Matrix::from_columns(&[vec![1.0, 0.0]]).unwrap();
        let w = mn_witness_check(&rot, &e1, 1.0).unwrap();
        assert!((w.achieved - 1.0).abs() < 1e-15 && w.member);
        let f = haar_subspace(4, 2, SeedSpec::new(1, 1)).unwrap();
        let w = mn_witness_check(&Matrix::identity(4), &f.basis, 0.1).unwrap();
        assert!(w.achieved < 1e-12 && !w.member);
        let bad = Matrix::from_columns(&[vec![2.0, 0.0]]).unwrap();
        assert!(matches!(mn_witness_check(&rot, &bad, 0.1), Err(Error::Usage(_))));
    }

    #[test]
    fn witness_matches_sampling() {
        let n = 6;
        let t = gaussian_matrix(n, n, 1.0, SeedSpec::new(61, 0)).unwrap();
        let v = svd(&t).unwrap().right_basis;
        let f = v.select_columns(&[0, 1]);
        let w = mn_witness_check(&t, &f, 0.0).unwrap();
        let comp = Matrix::identity(n).sub(&f.matmul(&f.transpose()));
        let m = comp.matmul(&t);
        let mut rng = SeedSpec::new(61, 1).rng();
        let sampled = (0..10_000)
            .map(|_| {
                let z = crate::sampler::unit_sphere_point(&mut rng, 2);
                norm2(&m.matvec(&f.matvec(&z)))
            })
            .fold(f64::INFINITY, f64::min);
        assert!(sampled >= w.achieved - 1e-12);
        assert!((sampled - w.achieved).abs() <= 1e-3, "{sampled} vs {}", w.achieved);
    }

    #[test]
    fn hs_examples() {
        let b = body(4, 16, 9);
        let r = hs_of_normalized(&b, &Matrix::identity(4)).unwrap();
        assert!((r.hs - 2.0).abs() < 1e-8 && r.ok);
        assert!(matches!(hs_of_normalized(&b, &Matrix::zeros(4, 4)), Err(Error::Usage(_))));
        // rank one g_1 ⊗ u
        let g = b.column(0).to_vec();
        let u = [0.3, -1.0, 2.0, 0.5];
        let t = Matrix::from_fn(4, 4, |i, j| g[i] * u[j]);
        let q = b.operator_norm(&t).unwrap();
        let r = hs_of_normalized(&b, &t).unwrap();
        assert!((r.hs - norm2(&g) * norm2(&u) / q).abs() < 1e-9 && r.ok);
    }

    #[test]
    fn hs_bound_random_operators() {
        let b = body(8, 64, 12);
        for s in 0..50 {
            let t = gaussian_matrix(8, 8, 1.0, SeedSpec::new(12, 100 + s)).unwrap();
            assert!(hs_of_normalized(&b, &t).unwrap().ok);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn brackets_monotone_and_homogeneous(n in 3usize..6, seed in any::<u64>(), scale in 0.1f64..10.0) {
            let b = body(n, 3 * n, seed);
            let est = GelfandEstimator::new(&b, 8, SeedSpec::new(seed, 1)).unwrap();
            let t = gaussian_matrix(n, n, 1.0, SeedSpec::new(seed, 2)).unwrap();
            for dual in [false, true] {
                let br = est.brackets(&t, dual).unwrap();
                let scaled = est.brackets(&t.scale(scale), dual).unwrap();
                for k in 0..n {
                    prop_assert!(br[k].lower <= br[k].upper + 1e-9);
                    if k > 0 {
                        prop_assert!(br[k].lower <= br[k - 1].lower + 1e-9);
                        prop_assert!(br[k].upper <= br[k - 1].upper + 1e-9);
                    }
                    prop_assert!((scaled[k].upper - scale * br[k].upper).abs() <= 1e-9 * scale * br[k].upper.max(1e-300) + 1e-12);
                    prop_assert!((scaled[k].lower - scale * br[k].lower).abs() <= 1e-9 * scale * br[k].lower.max(1e-300) + 1e-12);
                }
            }
        }

        #[test]
        fn shift_search_dominance_and_equivariance(n in 2usize..5, seed in any::<u64>(), mu in -3.0f64..3.0) {
            let b = body(n, 3 * n, seed);
            let est = GelfandEstimator::new(&b, 8, SeedSpec::new(seed, 1)).unwrap();
            let t = gaussian_matrix(n, n, 1.0, SeedSpec::new(seed, 2)).unwrap();
            let k = n.div_ceil(2);
            let r = est.min_over_shifts(&t, k, 201).unwrap();
            prop_assert!(r.proxy_value <= euclidean_s_numbers(&t).unwrap()[k - 1]);
            let moved = est.min_over_shifts(&t.shifted(-mu), k, 201).unwrap();
            prop_assert!((moved.proxy_value - r.proxy_value).abs() <= 1e-9 * (1.0 + r.proxy_value));
        }
    }
}
