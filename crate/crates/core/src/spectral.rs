//! Spectral gap of the reversible generator of `μ_{N,m}` by a cell-centered
//! finite-volume discretization of the chart box, and variational
//! log-Sobolev upper bounds.
//!
//! The discrete Dirichlet form is `Σ_edges c_ij (f_i − f_j)²` with
//! conductance `c_ij = μ(midpoint)/h²`, and the variance is taken under the
//! cell masses `μ_i`. Edges leaving the box or crossing into an excluded
//! cell are absent, which gives no-flux walls. The gap is the second
//! smallest eigenvalue of the symmetrized operator `D^{-1/2} L D^{-1/2}`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{functionals, log_weight, CanonicalEnsemble, FieldFunction};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

/// Cells with `log μ < max − ACTIVE_LOG_DROP` are excluded.
pub const ACTIVE_LOG_DROP: f64 = 50.0;
/// Above this many active cells the gap comes from shift-inverted Lanczos.
pub const DENSE_LIMIT: usize = 600;
pub const CELL_BUDGET: usize = 400_000;
const LANCZOS_MAX: usize = 120;
const RITZ_TOL: f64 = 1e-9;
const CG_TOL: f64 = 1e-11;

/// Sparse symmetric generator on the active cells of a chart grid.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
    /// Cell masses `μ_i`, scaled so the largest is 1.
    mass: Vec<f64>,
    sqrt_mass: Vec<f64>,
    /// Neighbour lists: `(j, c_ij)`.
    adjacency: Vec<Vec<(usize, f64)>>,
    /// `Σ_j c_ij`
    degree: Vec<f64>,
}

fn unflatten(mut flat: usize, shape: &[usize], idx: &mut [usize]) {
    for (slot, n) in idx.iter_mut().zip(shape) {
        *slot = flat % n;
        flat /= n;
    }
}

impl GeneratorMatrix {
    /// Discretizes the chart box of `e` with cells of side close to `h`,
    /// the box translated by `offset` along every chart axis.
    pub fn build(e: &CanonicalEnsemble, h: f64, offset: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("grid spacing {h}")));
        }
        let chart = &e.chart;
        let d = chart.dim();
        let p: &PotentialSpec = &e.potential;
        let mut shape = Vec::with_capacity(d);
        let mut spacing = Vec::with_capacity(d);
        for k in 0..d {
            let width = e.box_hi[k] - e.box_lo[k];
            let n = ((width / h).round() as usize).max(2);
            shape.push(n);
            spacing.push(width / n as f64);
        }
        let total: usize = shape.iter().product();
        if total > CELL_BUDGET {
            return Err(Error::GridBudgetExceeded {
                requested: total,
                budget: CELL_BUDGET,
            });
        }
        let lo: Vec<f64> = e.box_lo.iter().map(|v| v + offset).collect();
        let center = |idx: &[usize], k: usize| lo[k] + (idx[k] as f64 + 0.5) * spacing[k];
        let logw: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut idx = vec![0; d];
                unflatten(flat, &shape, &mut idx);
                let u: Vec<f64> = (0..d).map(|k| center(&idx, k)).collect();
                let mut x = vec![0.0; chart.n];
                chart.to_x(&u, &mut x);
                log_weight(p, &x)
            })
            .collect();
        let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        let mut index = vec![usize::MAX; total];
        let mut active = Vec::new();
        for (flat, lw) in logw.iter().enumerate() {
            if *lw >= top - ACTIVE_LOG_DROP {
                index[flat] = active.len();
                active.push(flat);
            }
        }
        let mass: Vec<f64> = active.iter().map(|&f| (logw[f] - top).exp()).collect();
        // each edge once, from its lower cell, so c_ij and c_ji are one number
        let forward: Vec<Vec<(usize, f64)>> = active
            .par_iter()
            .map(|&flat| {
                let mut idx = vec![0; d];
                unflatten(flat, &shape, &mut idx);
                let mut out = Vec::with_capacity(d);
                let mut stride = 1;
                for k in 0..d {
                    if idx[k] + 1 < shape[k] {
                        let j = index[flat + stride];
                        if j != usize::MAX {
                            let mut u: Vec<f64> = (0..d).map(|q| center(&idx, q)).collect();
                            u[k] += 0.5 * spacing[k];
                            let mut x = vec![0.0; chart.n];
                            chart.to_x(&u, &mut x);
                            let lw = log_weight(p, &x);
                            if lw.is_finite() {
                                out.push((j, (lw - top).exp() / (spacing[k] * spacing[k])));
                            }
                        }
                    }
                    stride *= shape[k];
                }
                out
            })
            .collect();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(2 * d); active.len()];
        for (i, edges) in forward.iter().enumerate() {
            for &(j, c) in edges {
                adjacency[i].push((j, c));
                adjacency[j].push((i, c));
            }
        }
        let degree = adjacency.iter().map(|a| a.iter().map(|e| e.1).sum()).collect();
        let sqrt_mass = mass.iter().map(|m: &f64| m.sqrt()).collect();
        Ok(GeneratorMatrix {
            spacing,
            shape,
            mass,
            sqrt_mass,
            adjacency,
            degree,
        })
    }

    pub fn active_cells(&self) -> usize {
        self.mass.len()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// `y = D^{-1/2} L D^{-1/2} x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let xi = x[i] / self.sqrt_mass[i];
            let mut acc = 0.0;
            for &(j, c) in &self.adjacency[i] {
                acc += c * (xi - x[j] / self.sqrt_mass[j]);
            }
            *yi = acc / self.sqrt_mass[i];
        });
    }

    /// Unit null vector `D^{1/2} 1`.
    fn null_vector(&self) -> Vec<f64> {
        let norm = self.mass.iter().sum::<f64>().sqrt();
        self.sqrt_mass.iter().map(|s| s / norm).collect()
    }

    /// `‖A q₀‖ / ‖A‖_∞` for the constant mode `q₀`.
    pub fn null_residual(&self) -> f64 {
        let q = self.null_vector();
        let mut y = vec![0.0; q.len()];
        self.apply(&q, &mut y);
        let norm_a = (0..q.len())
            .map(|i| 2.0 * self.degree[i] / self.mass[i])
            .fold(0.0, f64::max);
        y.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_a
    }

    /// `(Dirichlet form, variance)` of a grid function.
    pub fn rayleigh(&self, f: &[f64]) -> (f64, f64) {
        let z: f64 = self.mass.iter().sum();
        let mean = f.iter().zip(&self.mass).map(|(a, b)| a * b).sum::<f64>() / z;
        let var = f.iter().zip(&self.mass).map(|(a, b)| b * (a - mean) * (a - mean)).sum::<f64>() / z;
        let mut dir = 0.0;
        for (i, nb) in self.adjacency.iter().enumerate() {
            for &(j, c) in nb {
                if j > i {
                    dir += c * (f[i] - f[j]) * (f[i] - f[j]);
                }
            }
        }
        (dir / z, var)
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.active_cells();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.degree[i] / self.mass[i];
            for &(j, c) in &self.adjacency[i] {
                a[(i, j)] = -c / (self.sqrt_mass[i] * self.sqrt_mass[j]);
            }
        }
        a
    }

    /// Second smallest eigenvalue and its residual indicator.
    pub fn gap(&self, seed: u64) -> Result<f64> {
        let n = self.active_cells();
        if n < 2 {
            return Err(Error::EigensolveFailure("fewer than two active cells".into()));
        }
        if n <= DENSE_LIMIT {
            let eig = SymmetricEigen::new(self.dense());
            let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(vals[1]);
        }
        self.lanczos_inverse(seed)
    }

    /// Projected conjugate gradients for `A x = b`, `b ⊥ q₀`.
    fn cg(&self, b: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let b_norm = dot(b, b).sqrt();
        let mut rr = dot(&r, &r);
        for _ in 0..20 * n.max(100) {
            if rr.sqrt() <= CG_TOL * b_norm {
                project_out(&mut x, q);
                return Ok(x);
            }
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            project_out(&mut r, q);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
        }
        Err(Error::EigensolveFailure(format!(
            "conjugate gradients stalled at residual {:e}",
            rr.sqrt() / b_norm
        )))
    }

    /// Lanczos on `A^{-1}` restricted to `q₀^⊥`; the largest Ritz value is
    /// `1/ρ₁`.
    fn lanczos_inverse(&self, seed: u64) -> Result<f64> {
        let n = self.active_cells();
        let q0 = self.null_vector();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        project_out(&mut v, &q0);
        normalize(&mut v);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let (mut alphas, mut betas) = (Vec::new(), Vec::new());
        let mut last_theta = f64::NAN;
        for j in 0..LANCZOS_MAX.min(n - 1) {
            let mut w = self.cg(&basis[j], &q0)?;
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            for _ in 0..2 {
                project_out(&mut w, &q0);
                for b in &basis {
                    let c = dot(&w, b);
                    axpy(-c, b, &mut w);
                }
            }
            let beta = dot(&w, &w).sqrt();
            let k = alphas.len();
            let mut t = DMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (top, theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            let ritz_residual = (beta * eig.eigenvectors[(k - 1, top)]).abs();
            last_theta = theta;
            if ritz_residual <= RITZ_TOL * theta || beta <= 1e-14 * theta {
                return Ok(1.0 / theta);
            }
            betas.push(beta);
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            basis.push(w);
        }
        Err(Error::NoConvergence {
            iterations: LANCZOS_MAX,
            state: format!("Lanczos Ritz value {:e} unconverged", 1.0 / last_theta),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn project_out(v: &mut [f64], q: &[f64]) {
    let c = dot(v, q);
    axpy(-c, q, v);
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub n: usize,
    pub m: f64,
    pub grid_spacing: Vec<f64>,
    pub active_cells: Vec<usize>,
    /// Second smallest eigenvalue at each spacing.
    pub rho1: Vec<f64>,
    /// Largest `‖A q₀‖/‖A‖` over spacings; the constant mode is exact.
    pub eigen_gap_check: f64,
    /// `O(h²)` extrapolation from the two finest spacings.
    pub richardson_rho1: Option<f64>,
}

impl SpectrumResult {
    /// Richardson value when available, else the finest spacing.
    pub fn best(&self) -> f64 {
        self.richardson_rho1.unwrap_or(*self.rho1.last().unwrap())
    }
}

/// Default spacings per `N`, coarse to fine.
pub fn default_spacings(n: usize) -> Vec<f64> {
    match n {
        2 => vec![0.04, 0.02],
        3 => vec![0.2, 0.1],
        _ => vec![0.6, 0.4],
    }
}

pub fn sg_constant(e: &CanonicalEnsemble, spacings: &[f64]) -> Result<SpectrumResult> {
    sg_constant_offset(e, spacings, 0.0)
}

/// As [`sg_constant`] with the cell lattice translated by `offset`.
pub fn sg_constant_offset(e: &CanonicalEnsemble, spacings: &[f64], offset: f64) -> Result<SpectrumResult> {
    if spacings.is_empty() {
        return Err(Error::InvalidParameter("no grid spacings".into()));
    }
    let mut out = SpectrumResult {
        n: e.chart.n,
        m: e.chart.m,
        grid_spacing: Vec::new(),
        active_cells: Vec::new(),
        rho1: Vec::new(),
        eigen_gap_check: 0.0,
        richardson_rho1: None,
    };
    for &h in spacings {
        let g = GeneratorMatrix::build(e, h, offset)?;
        out.rho1.push(g.gap(0x5eed ^ g.active_cells() as u64)?);
        out.grid_spacing.push(g.max_spacing());
        out.active_cells.push(g.active_cells());
        out.eigen_gap_check = out.eigen_gap_check.max(g.null_residual());
    }
    let k = out.rho1.len();
    if k >= 2 {
        let (h1, h2) = (out.grid_spacing[k - 2], out.grid_spacing[k - 1]);
        let (r1, r2) = (out.rho1[k - 2], out.rho1[k - 1]);
        if (h1 - h2).abs() > 1e-12 * h1 {
            out.richardson_rho1 = Some((h1 * h1 * r2 - h2 * h2 * r1) / (h1 * h1 - h2 * h2));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsiBound {
    /// `min fisher / (2 entropy)` over the trial family.
    pub rho_upper: f64,
    pub argmin: String,
}

/// Trial family `exp(a·g(u_k/L_k))` on each chart axis with
/// `g ∈ {t, t², cos(π(u_k − lo_k)/(hi_k − lo_k))}` and
/// `a ∈ {0.01, 0.1, 0.3, 1, 3}`, `L_k` the box half-width.
pub fn lsi_upper_bound(e: &CanonicalEnsemble) -> Result<LsiBound> {
    let mut best = LsiBound {
        rho_upper: f64::INFINITY,
        argmin: String::new(),
    };
    for k in 0..e.chart.dim() {
        let (lo, hi) = (e.box_lo[k], e.box_hi[k]);
        let half = 0.5 * (hi - lo);
        // ⟨b_k, x⟩ = u_k since the chart basis sums to zero
        let b = e.chart.basis[k].clone();
        let shapes: [(&str, fn(f64, f64, f64) -> (f64, f64)); 3] = [
            ("lin", |u, _, half| (u / half, 1.0 / half)),
            ("quad", |u, _, half| ((u / half).powi(2), 2.0 * u / (half * half))),
            ("cos", |u, lo, half| {
                let w = std::f64::consts::PI / (2.0 * half);
                ((w * (u - lo)).cos(), -w * (w * (u - lo)).sin())
            }),
        ];
        for (name, shape) in shapes {
            for a in [0.01, 0.1, 0.3, 1.0, 3.0] {
                let f = FieldFunction::chart_tilt(format!("{name}[u{k}] a={a}"), b.clone(), a, move |u| shape(u, lo, half));
                let r = functionals(e, &f)?;
                if r.entropy > 1e-13 && r.lsi_quotient < best.rho_upper {
                    best = LsiBound {
                        rho_upper: r.lsi_quotient,
                        argmin: f.label.clone(),
                    };
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub m: f64,
    pub rho1: f64,
    pub rho1_m2: f64,
    pub lsi_upper: f64,
}

/// Quadrature nodes per chart axis used by the spectral drivers.
pub fn default_nodes(n: usize) -> usize {
    match n {
        2 => 96,
        3 => 48,
        _ => 24,
    }
}

/// `ρ₁` and the LSI upper bound over a grid of `(N, m)`.
pub fn scaling_probe(p: &PotentialSpec, ns: &[usize], ms: &[f64]) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &m in ms {
            let e = CanonicalEnsemble::build(p, n, m, default_nodes(n))?;
            let s = sg_constant(&e, &default_spacings(n))?;
            let rho = s.best();
            rows.push(ScalingRow {
                n,
                m,
                rho1: rho,
                rho1_m2: rho * m * m,
                lsi_upper: lsi_upper_bound(&e)?.rho_upper,
            });
        }
    }
    Ok(rows)
}

/// `max ρ₁ / min ρ₁` over rows.
pub fn uniformity_ratio(rows: &[ScalingRow]) -> f64 {
    let max = rows.iter().map(|r| r.rho1).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.rho1).fold(f64::INFINITY, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{catalog, cosine_perturbed, gaussian};

    #[test]
    fn gaussian_pair_gap_is_one() {
        let e = CanonicalEnsemble::build(&gaussian(), 2, 0.5, 64).unwrap();
        let s = sg_constant(&e, &[0.04, 0.02]).unwrap();
        assert!((s.best() - 1.0).abs() < 1e-3, "{s:?}");
        assert!(s.eigen_gap_check < 1e-12);
    }

    #[test]
    fn barthe_wolff_pair_gap() {
        let bw = catalog("barthe-wolff", &Default::default()).unwrap();
        for m in [0.5, 1.0, 2.0] {
            let e = CanonicalEnsemble::build(&bw, 2, m, 64).unwrap();
            let s = sg_constant(&e, &[0.02]).unwrap();
            let target = std::f64::consts::PI.powi(2) / 8.0;
            assert!((s.rho1[0] * m * m / target - 1.0).abs() < 2e-3, "{m} {s:?}");
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let e = CanonicalEnsemble::build(&cosine_perturbed(1.25), 3, 0.2, 48).unwrap();
        let g = GeneratorMatrix::build(&e, 1.0, 0.0).unwrap();
        assert!(g.active_cells() <= DENSE_LIMIT && g.active_cells() > 100);
        let dense = g.gap(1).unwrap();
        let sparse = g.lanczos_inverse(1).unwrap();
        assert!((dense - sparse).abs() < 1e-8 * dense, "{dense} {sparse}");
    }

    #[test]
    fn gap_is_a_rayleigh_minimum() {
        let e = CanonicalEnsemble::build(&cosine_perturbed(1.25), 3, -0.4, 48).unwrap();
        let g = GeneratorMatrix::build(&e, 0.5, 0.0).unwrap();
        let rho = g.gap(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f: Vec<f64> = (0..g.active_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (dir, var) = g.rayleigh(&f);
            assert!(rho * var <= dir * (1.0 + 1e-9));
        }
    }

    #[test]
    fn lattice_offset_leaves_gap_unchanged() {
        let e = CanonicalEnsemble::build(&cosine_perturbed(1.25), 2, 0.3, 64).unwrap();
        let a = sg_constant(&e, &[0.04, 0.02]).unwrap().best();
        let b = sg_constant_offset(&e, &[0.04, 0.02], 0.3).unwrap().best();
        assert!((a / b - 1.0).abs() < 1e-2, "{a} {b}");
    }

    #[test]
    fn lsi_bound_sits_above_gaussian_constant() {
        let e = CanonicalEnsemble::build(&gaussian(), 2, 0.0, 96).unwrap();
        let b = lsi_upper_bound(&e).unwrap();
        assert!(b.rho_upper >= 1.0 - 1e-6 && b.rho_upper < 1.05, "{b:?}");
    }

    /// Rayleigh–Ritz on Legendre polynomials of the chart coordinate,
    /// integrated on the ensemble's Gauss–Legendre grid (`N = 2` only).
    fn galerkin_gap(e: &CanonicalEnsemble, degree: usize) -> f64 {
        let c = 0.5 * (e.box_lo[0] + e.box_hi[0]);
        let half = 0.5 * (e.box_hi[0] - e.box_lo[0]);
        let mut mean = vec![0.0; degree];
        let mut rows = Vec::with_capacity(e.len());
        for i in 0..e.len() {
            let t = (e.coords(i)[0] - c) / half;
            let (mut p0, mut p1, mut d0, mut d1) = (1.0, t, 0.0, 1.0);
            let mut vals = vec![0.0; degree];
            let mut ders = vec![0.0; degree];
            for k in 1..=degree {
                vals[k - 1] = p1;
                ders[k - 1] = d1 / half;
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
                let d2 = ((2.0 * kf + 1.0) * (p1 + t * d1) - kf * d0) / (kf + 1.0);
                (p0, p1, d0, d1) = (p1, p2, d1, d2);
            }
            for k in 0..degree {
                mean[k] += e.weight(i) * vals[k];
            }
            rows.push((e.weight(i), vals, ders));
        }
        let mut mass = DMatrix::<f64>::zeros(degree, degree);
        let mut stiff = DMatrix::<f64>::zeros(degree, degree);
        for (w, vals, ders) in &rows {
            for a in 0..degree {
                for b in 0..degree {
                    mass[(a, b)] += w * (vals[a] - mean[a]) * (vals[b] - mean[b]);
                    stiff[(a, b)] += w * ders[a] * ders[b];
                }
            }
        }
        // orthonormalize against the variance form, dropping null directions
        let me = SymmetricEigen::new(mass);
        let top = me.eigenvalues.max();
        let keep: Vec<usize> = (0..degree).filter(|&k| me.eigenvalues[k] > 1e-13 * top).collect();
        let w = DMatrix::from_fn(degree, keep.len(), |r, j| {
            me.eigenvectors[(r, keep[j])] / me.eigenvalues[keep[j]].sqrt()
        });
        let c = w.transpose() * stiff * &w;
        let c = 0.5 * (&c + c.transpose());
        SymmetricEigen::new(c).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cosine_pair_gap_matches_galerkin() {
        // the double well at m = 0 and the convex fiber at m = 2 are the
        // extremes of the cosine-perturbed gap over m
        for (m, frozen) in [(0.0, 0.261278), (2.0, 1.432242)] {
            let e = CanonicalEnsemble::build(&cosine_perturbed(1.25), 2, m, 200).unwrap();
            let oracle = galerkin_gap(&e, 40);
            let fv = sg_constant(&e, &[0.04, 0.02]).unwrap().best();
            assert!((fv / oracle - 1.0).abs() < 1e-4, "{m}: {fv} vs {oracle}");
            assert!((fv - frozen).abs() < 1e-5, "{m}: {fv}");
        }
    }

    #[test]
    fn conductances_are_symmetric_and_nonnegative() {
        let e = CanonicalEnsemble::build(&cosine_perturbed(1.25), 3, 0.6, 48).unwrap();
        let g = GeneratorMatrix::build(&e, 0.4, 0.0).unwrap();
        for (i, nb) in g.adjacency.iter().enumerate() {
            for &(j, c) in nb {
                assert!(c >= 0.0);
                let back = g.adjacency[j].iter().find(|e| e.0 == i).unwrap().1;
                assert_eq!(c, back);
            }
        }
        assert!(g.null_residual() < 1e-10);
    }

    #[test]
    fn cell_budget_is_enforced() {
        let e = CanonicalEnsemble::build(&gaussian(), 4, 0.0, 24).unwrap();
        assert!(matches!(
            GeneratorMatrix::build(&e, 0.05, 0.0),
            Err(Error::GridBudgetExceeded { .. })
        ));
    }
}
