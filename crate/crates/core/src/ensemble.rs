//! Canonical ensembles `μ_{N,m}` on the hyperplane `X_{N,m} = {Σx_i = Nm}`
//! for `N ∈ {2, 3, 4}`, realized on an orthonormal chart with a tensorized
//! Gauss–Legendre grid, plus the pair coarse-graining `P` and the
//! hierarchic identities at `N = 4`.
//!
//! For `N = 4` the fiber over `y = Px ∈ X_{2,m}` is parametrized as
//! `y = (m+v, m−v)`, `x = (y₁−z₁, y₁+z₁, y₂−z₂, y₂+z₂)`; the three
//! directions are orthogonal, so the Hausdorff measure is `4 dv dz₁ dz₂`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::measure1d::{find_window, OneDMeasure, QuadConfig};
use crate::potential::{validate_splitting, PotentialSpec, SingleSite};
use crate::quad::gauss_legendre;
use crate::renorm::{knot_quad_config, renorm_at, TabulatedPotential};

pub const LOG_DROP: f64 = 40.0;
pub const GRID_BUDGET: usize = 2_000_000;

/// Orthonormal parametrization `x = m·1 + Σ u_k b_k` of `X_{N,m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneChart {
    pub n: usize,
    pub m: f64,
    pub origin: Vec<f64>,
    /// `N − 1` Helmert vectors, each orthogonal to `(1, …, 1)`.
    pub basis: Vec<Vec<f64>>,
}

impl HyperplaneChart {
    pub fn new(n: usize, m: f64) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(Error::InvalidParameter(format!("N = {n} outside 2..=4")));
        }
        let basis = (1..n)
            .map(|k| {
                let norm = ((k * (k + 1)) as f64).sqrt();
                (0..n)
                    .map(|i| match i.cmp(&k) {
                        std::cmp::Ordering::Less => 1.0 / norm,
                        std::cmp::Ordering::Equal => -(k as f64) / norm,
                        std::cmp::Ordering::Greater => 0.0,
                    })
                    .collect()
            })
            .collect();
        Ok(HyperplaneChart {
            n,
            m,
            origin: vec![m; n],
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn to_x(&self, u: &[f64], x: &mut [f64]) {
        x.copy_from_slice(&self.origin);
        for (uk, b) in u.iter().zip(&self.basis) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += uk * bi;
            }
        }
    }

    pub fn to_u(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| b.iter().zip(x).map(|(bi, xi)| bi * (xi - self.m)).sum())
            .collect()
    }

    /// Squared norm of the tangential part of an `ℝ^N` vector.
    pub fn tangent_norm2(&self, g: &[f64]) -> f64 {
        self.basis
            .iter()
            .map(|b| {
                let c: f64 = b.iter().zip(g).map(|(bi, gi)| bi * gi).sum();
                c * c
            })
            .sum()
    }

    /// `max |⟨b_i, b_j⟩ − δ_ij|` and `max |Σ_l b_{k,l}|`.
    pub fn orthonormality_residual(&self) -> (f64, f64) {
        let mut ortho: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((dot - target).abs());
            }
        }
        let sums = self
            .basis
            .iter()
            .map(|b| b.iter().sum::<f64>().abs())
            .fold(0.0, f64::max);
        (ortho, sums)
    }
}

/// `−Σ ψ(x_i)`, `−∞` outside the support.
pub fn log_weight(p: &PotentialSpec, x: &[f64]) -> f64 {
    -x.iter().map(|&xi| p.value(xi)).sum::<f64>()
}

/// Bounding box of `{x ∈ support^N, Σx = Nm}` in chart coordinates, from
/// its vertices (all but one coordinate on a finite wall). `None` when the
/// support is the whole line.
fn polytope_box(p: &PotentialSpec, chart: &HyperplaneChart) -> Option<(Vec<f64>, Vec<f64>)> {
    let s = p.support();
    let walls: Vec<f64> = [s.lo, s.hi].into_iter().filter(|w| w.is_finite()).collect();
    if walls.is_empty() {
        return None;
    }
    let n = chart.n;
    let d = chart.dim();
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    let mut x = vec![0.0; n];
    for free in 0..n {
        let combos = walls.len().pow((n - 1) as u32);
        for c in 0..combos {
            let mut code = c;
            let mut sum = 0.0;
            for (i, xi) in x.iter_mut().enumerate() {
                if i == free {
                    continue;
                }
                *xi = walls[code % walls.len()];
                code /= walls.len();
                sum += *xi;
            }
            x[free] = n as f64 * chart.m - sum;
            if !(x[free] >= s.lo && x[free] <= s.hi) {
                continue;
            }
            let u = chart.to_u(&x);
            for k in 0..d {
                lo[k] = lo[k].min(u[k]);
                hi[k] = hi[k].max(u[k]);
            }
        }
    }
    if lo.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((lo, hi))
}

/// Chart box outside which `exp(−H)` is below `e^{−drop}` of its maximum.
/// Returns `(lo, hi, log_max)`.
pub fn chart_box(p: &PotentialSpec, chart: &HyperplaneChart, drop: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = chart.dim();
    const G: usize = 41;
    let total = G.pow(d as u32);
    let mut half = 2.0;
    let poly = polytope_box(p, chart);
    loop {
        if half > 1e4 {
            return Err(Error::NonIntegrable(format!(
                "canonical density does not decay within {half} chart units"
            )));
        }
        let step = 2.0 * half / (G - 1) as f64;
        let samples: Vec<(Vec<usize>, f64)> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut idx = vec![0; d];
                let mut c = flat;
                for slot in idx.iter_mut() {
                    *slot = c % G;
                    c /= G;
                }
                let u: Vec<f64> = idx.iter().map(|&i| -half + step * i as f64).collect();
                let mut x = vec![0.0; chart.n];
                chart.to_x(&u, &mut x);
                let v = log_weight(p, &x);
                (idx, v)
            })
            .collect();
        let log_max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        if !log_max.is_finite() {
            if log_max == f64::INFINITY {
                return Err(Error::DegenerateDensity);
            }
            half *= 2.0;
            continue;
        }
        let boundary_hot = samples
            .iter()
            .any(|(idx, v)| idx.iter().any(|&i| i == 0 || i == G - 1) && *v >= log_max - drop - 5.0);
        // a hard-wall polytope inside the scan box needs no further growth
        let inside_poly = poly
            .as_ref()
            .map(|(lo, hi)| lo.iter().zip(hi).all(|(a, b)| -half <= *a && *b <= half))
            .unwrap_or(false);
        if boundary_hot && !inside_poly {
            half *= 2.0;
            continue;
        }
        let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
        for (idx, v) in &samples {
            if *v >= log_max - drop {
                for k in 0..d {
                    let u = -half + step * idx[k] as f64;
                    lo[k] = lo[k].min(u - step);
                    hi[k] = hi[k].max(u + step);
                }
            }
        }
        if let Some((plo, phi)) = &poly {
            for k in 0..d {
                lo[k] = lo[k].max(plo[k]);
                hi[k] = hi[k].min(phi[k]);
            }
        }
        return Ok((lo, hi, log_max));
    }
}

/// `μ_{N,m}` on a tensor Gauss–Legendre grid of the chart box.
#[derive(Clone)]
pub struct CanonicalEnsemble {
    pub potential: PotentialSpec,
    pub chart: HyperplaneChart,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub nodes_per_dim: usize,
    /// Flattened points in `ℝ^N`.
    points: Vec<f64>,
    /// Chart coordinates, flattened.
    coords: Vec<f64>,
    /// Probability weight of each node.
    weights: Vec<f64>,
    pub log_normalizer: f64,
}

impl std::fmt::Debug for CanonicalEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CanonicalEnsemble")
            .field("potential", &self.potential.label())
            .field("n", &self.chart.n)
            .field("m", &self.chart.m)
            .field("box_lo", &self.box_lo)
            .field("box_hi", &self.box_hi)
            .finish()
    }
}

fn min_nodes(n: usize) -> usize {
    match n {
        2 => 64,
        3 => 48,
        _ => 24,
    }
}

impl CanonicalEnsemble {
    pub fn build(p: &PotentialSpec, n: usize, m: f64, nodes_per_dim: usize) -> Result<Self> {
        let chart = HyperplaneChart::new(n, m)?;
        if nodes_per_dim < min_nodes(n) {
            return Err(Error::InvalidParameter(format!(
                "N = {n} needs >= {} nodes per dimension, got {nodes_per_dim}",
                min_nodes(n)
            )));
        }
        let s = p.support();
        if !(s.contains_interior(m)) {
            return Err(Error::OutOfSupport { x: m, lo: s.lo, hi: s.hi });
        }
        let d = chart.dim();
        let total = nodes_per_dim.checked_pow(d as u32).unwrap_or(usize::MAX);
        if total > GRID_BUDGET {
            return Err(Error::GridBudgetExceeded {
                requested: total,
                budget: GRID_BUDGET,
            });
        }
        let (box_lo, box_hi, log_max) = chart_box(p, &chart, LOG_DROP)?;
        let (t, w) = gauss_legendre(nodes_per_dim);
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
            .map(|k| {
                let (a, b) = (box_lo[k], box_hi[k]);
                let c = 0.5 * (a + b);
                let h = 0.5 * (b - a);
                (t.iter().map(|ti| c + h * ti).collect(), w.iter().map(|wi| h * wi).collect())
            })
            .collect();
        let mut coords = Vec::with_capacity(total * d);
        let mut lebesgue = Vec::with_capacity(total);
        for flat in 0..total {
            let mut c = flat;
            let mut weight = 1.0;
            for (nodes, weights) in &axes {
                let i = c % nodes_per_dim;
                c /= nodes_per_dim;
                coords.push(nodes[i]);
                weight *= weights[i];
            }
            lebesgue.push(weight);
        }
        let mut points = vec![0.0; total * n];
        points
            .par_chunks_mut(n)
            .zip(coords.par_chunks(d))
            .for_each(|(x, u)| chart.to_x(u, x));
        let logw: Vec<f64> = points.par_chunks(n).map(|x| log_weight(p, x)).collect();
        let mut weights: Vec<f64> = logw
            .iter()
            .zip(&lebesgue)
            .map(|(lw, w)| if lw.is_finite() { w * (lw - log_max).exp() } else { 0.0 })
            .collect();
        let z: f64 = weights.iter().sum();
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        for w in weights.iter_mut() {
            *w /= z;
        }
        Ok(CanonicalEnsemble {
            potential: p.clone(),
            chart,
            box_lo,
            box_hi,
            nodes_per_dim,
            points,
            coords,
            weights,
            log_normalizer: log_max + z.ln(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.chart.n..(i + 1) * self.chart.n]
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        let d = self.chart.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn expect(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.weights[i] * f(self.point(i)))
            .sum()
    }

    /// Normalized density of `μ_{N,m}` w.r.t. the Hausdorff measure at `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        (log_weight(&self.potential, x) - self.log_normalizer).exp()
    }

    pub fn functionals(&self, f: &FieldFunction) -> Result<FunctionalReport> {
        functionals(self, f)
    }
}

type FieldValue = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type FieldGrad = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A function on `ℝ^N` with its gradient.
#[derive(Clone)]
pub struct FieldFunction {
    pub label: String,
    f: FieldValue,
    grad: FieldGrad,
}

impl std::fmt::Debug for FieldFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FieldFunction({})", self.label)
    }
}

/// Names accepted by [`FieldFunction::by_name`].
pub const FIELD_FAMILY: [&str; 5] = ["constant", "sin-tilt", "exp-tilt", "product", "quadratic"];

impl FieldFunction {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        FieldFunction {
            label: label.into(),
            f: Arc::new(f),
            grad: Arc::new(grad),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn gradient(&self, x: &[f64], g: &mut [f64]) {
        (self.grad)(x, g)
    }

    pub fn constant(c: f64) -> Self {
        FieldFunction::new("constant", move |_| c, |_, g| g.iter_mut().for_each(|v| *v = 0.0))
    }

    /// `1 + ½ sin x₁`
    pub fn sin_tilt() -> Self {
        FieldFunction::new(
            "sin-tilt",
            |x| 1.0 + 0.5 * x[0].sin(),
            |x, g| {
                g.iter_mut().for_each(|v| *v = 0.0);
                g[0] = 0.5 * x[0].cos();
            },
        )
    }

    /// `exp(a x₁)`
    pub fn exp_tilt(a: f64) -> Self {
        FieldFunction::new(
            "exp-tilt",
            move |x| (a * x[0]).exp(),
            move |x, g| {
                g.iter_mut().for_each(|v| *v = 0.0);
                g[0] = a * (a * x[0]).exp();
            },
        )
    }

    /// `Π (1 + 0.3 sin x_i)`
    pub fn product() -> Self {
        FieldFunction::new(
            "product",
            |x| x.iter().map(|v| 1.0 + 0.3 * v.sin()).product(),
            |x, g| {
                for i in 0..x.len() {
                    let mut p = 0.3 * x[i].cos();
                    for (j, v) in x.iter().enumerate() {
                        if j != i {
                            p *= 1.0 + 0.3 * v.sin();
                        }
                    }
                    g[i] = p;
                }
            },
        )
    }

    /// `1 + 0.1 (x₁ − x_N)²`
    pub fn quadratic() -> Self {
        FieldFunction::new(
            "quadratic",
            |x| {
                let d = x[0] - x[x.len() - 1];
                1.0 + 0.1 * d * d
            },
            |x, g| {
                let n = x.len();
                let d = x[0] - x[n - 1];
                g.iter_mut().for_each(|v| *v = 0.0);
                g[0] = 0.2 * d;
                g[n - 1] = -0.2 * d;
            },
        )
    }

    /// `Σ c_i x_i`
    pub fn linear(c: Vec<f64>) -> Self {
        let c2 = c.clone();
        FieldFunction::new(
            "linear",
            move |x| x.iter().zip(&c).map(|(a, b)| a * b).sum(),
            move |_, g| g.copy_from_slice(&c2),
        )
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(Self::constant(1.0)),
            "sin-tilt" => Ok(Self::sin_tilt()),
            "exp-tilt" => Ok(Self::exp_tilt(0.25)),
            "product" => Ok(Self::product()),
            "quadratic" => Ok(Self::quadratic()),
            other => Err(Error::InvalidParameter(format!("unknown test function `{other}`"))),
        }
    }

    /// `exp(a · g(⟨b, x⟩))` for a chart direction `b` with `Σb = 0`.
    pub fn chart_tilt(
        label: impl Into<String>,
        b: Vec<f64>,
        a: f64,
        g: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        let g = Arc::new(g);
        let (b1, g1) = (b.clone(), g.clone());
        FieldFunction::new(
            label,
            move |x| {
                let u: f64 = b1.iter().zip(x).map(|(bi, xi)| bi * xi).sum();
                (a * g1(u).0).exp()
            },
            move |x, out| {
                let u: f64 = b.iter().zip(x).map(|(bi, xi)| bi * xi).sum();
                let (gv, gd) = g(u);
                let scale = a * gd * (a * gv).exp();
                for (o, bi) in out.iter_mut().zip(&b) {
                    *o = scale * bi;
                }
            },
        )
    }
}

/// Entropy, Fisher information, variance and Dirichlet form of `f` under
/// `μ_{N,m}`, with gradients projected onto the hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub entropy: f64,
    pub fisher: f64,
    pub variance: f64,
    pub dirichlet: f64,
    /// `fisher / (2 · entropy)`
    pub lsi_quotient: f64,
    /// `dirichlet / variance`
    pub sg_quotient: f64,
}

pub fn functionals(e: &CanonicalEnsemble, f: &FieldFunction) -> Result<FunctionalReport> {
    let n = e.chart.n;
    let rows: Vec<(f64, f64, f64, f64)> = (0..e.len())
        .into_par_iter()
        .map(|i| {
            let x = e.point(i);
            let v = f.value(x);
            let mut g = vec![0.0; n];
            f.gradient(x, &mut g);
            let grad2 = e.chart.tangent_norm2(&g);
            (v, if v > 0.0 { v * v.ln() } else { f64::NAN }, grad2, if v > 0.0 { grad2 / v } else { f64::NAN })
        })
        .collect();
    let mut positive = true;
    let (mut mean, mut flogf, mut dirichlet, mut fisher, mut second) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (v, vl, g2, fi)) in rows.iter().enumerate() {
        let w = e.weights[i];
        if w == 0.0 {
            continue;
        }
        if !(*v > 0.0) {
            positive = false;
        }
        mean += w * v;
        second += w * v * v;
        dirichlet += w * g2;
        flogf += w * vl;
        fisher += w * fi;
    }
    let variance = (0..e.len())
        .map(|i| {
            let d = rows[i].0 - mean;
            e.weights[i] * d * d
        })
        .sum::<f64>();
    let _ = second;
    if !positive {
        return Err(Error::NonPositiveFunction);
    }
    let entropy = (flogf - mean * mean.ln()).max(0.0);
    let lsi_quotient = if entropy > 0.0 { fisher / (2.0 * entropy) } else { f64::INFINITY };
    let sg_quotient = if variance > 0.0 { dirichlet / variance } else { f64::INFINITY };
    Ok(FunctionalReport {
        entropy,
        fisher,
        variance,
        dirichlet,
        lsi_quotient,
        sg_quotient,
    })
}

/// `y_i = ½(x_{2i−1} + x_{2i})`.
pub fn coarse_grain(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() % 2 != 0 {
        return Err(Error::OddDimension(x.len()));
    }
    Ok(x.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
}

/// `P` as an `N/2 × N` row-major matrix.
pub fn p_matrix(n: usize) -> Result<Vec<Vec<f64>>> {
    if n % 2 != 0 {
        return Err(Error::OddDimension(n));
    }
    Ok((0..n / 2)
        .map(|i| (0..n).map(|j| if j / 2 == i { 0.5 } else { 0.0 }).collect())
        .collect())
}

/// Residuals of `2PPᵗ = id`, `(2PᵗP)² = 2PᵗP` and `(2PᵗP)ᵗ = 2PᵗP`.
pub fn p_algebra_residuals(n: usize) -> Result<(f64, f64, f64)> {
    let p = p_matrix(n)?;
    let k = n / 2;
    let mut id_res: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let v: f64 = 2.0 * (0..n).map(|l| p[i][l] * p[j][l]).sum::<f64>();
            id_res = id_res.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let q: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| 2.0 * (0..k).map(|i| p[i][a] * p[i][b]).sum::<f64>()).collect())
        .collect();
    let (mut idem, mut sym): (f64, f64) = (0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let qq: f64 = (0..n).map(|c| q[a][c] * q[c][b]).sum();
            idem = idem.max((qq - q[a][b]).abs());
            sym = sym.max((q[a][b] - q[b][a]).abs());
        }
    }
    Ok((id_res, idem, sym))
}

/// `||g|² − |(id − 2PᵗP)g|² − |2PᵗP g|²|`.
pub fn pythagoras_residual(g: &[f64]) -> Result<f64> {
    let y = coarse_grain(g)?;
    // 2PᵗP g duplicates each pair mean
    let macro_part: Vec<f64> = y.iter().flat_map(|v| [*v, *v]).collect();
    let a: f64 = g.iter().zip(&macro_part).map(|(gi, mi)| (gi - mi) * (gi - mi)).sum();
    let b: f64 = macro_part.iter().map(|v| v * v).sum();
    let full: f64 = g.iter().map(|v| v * v).sum();
    Ok((full - a - b).abs())
}

fn fiber_config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        panels: 24,
        ..QuadConfig::default()
    }
}

/// The two-site canonical measure `μ_{2,y}` in the fiber coordinate `z`,
/// `x = (y − z, y + z)`.
pub fn pair_fiber(p: &PotentialSpec, y: f64) -> Result<OneDMeasure> {
    let s = p.support();
    let half = (s.hi - y).min(y - s.lo);
    if !(half > 0.0) {
        return Err(Error::OutOfSupport { x: y, lo: s.lo, hi: s.hi });
    }
    let q = p.clone();
    OneDMeasure::normalize_with(
        Arc::new(move |z| -(q.value(y - z) + q.value(y + z))),
        Interval::new(-half, half),
        fiber_config(),
    )
}

/// `f̄(y) = ∫ f μ(dx|y)` over the product fiber measure.
fn fiber_mean(f: &FieldFunction, y: [f64; 2], a: &OneDMeasure, b: &OneDMeasure) -> f64 {
    let mut total = 0.0;
    let mut x = [0.0; 4];
    for (z1, w1) in a.nodes() {
        for (z2, w2) in b.nodes() {
            x = [y[0] - z1, y[0] + z1, y[1] - z2, y[1] + z2];
            total += w1 * w2 * f.value(&x);
        }
    }
    let _ = x;
    total
}

/// Entropy of `f` under the product fiber measure.
fn fiber_entropy(f: &FieldFunction, y: [f64; 2], a: &OneDMeasure, b: &OneDMeasure) -> Result<(f64, f64)> {
    let (mut mean, mut flogf) = (0.0, 0.0);
    for (z1, w1) in a.nodes() {
        for (z2, w2) in b.nodes() {
            let x = [y[0] - z1, y[0] + z1, y[1] - z2, y[1] + z2];
            let v = f.value(&x);
            if !(v > 0.0) {
                return Err(Error::NonPositiveFunction);
            }
            mean += w1 * w2 * v;
            flogf += w1 * w2 * v * v.ln();
        }
    }
    Ok((mean, flogf - mean * mean.ln()))
}

/// The marginal `μ̄` on `X_{2,m}` in the coordinate `v`, with density
/// `∝ exp(−Rψ(m+v) − Rψ(m−v))`, each `Rψ` by direct fiber quadrature.
fn marginal_measure(p: &PotentialSpec, m: f64, panels: usize) -> Result<OneDMeasure> {
    let q = p.clone();
    let cfg = knot_quad_config();
    let s = p.support();
    let half = (s.hi - m).min(m - s.lo);
    OneDMeasure::normalize_with(
        Arc::new(move |v| {
            let a = renorm_at(&q, m + v, &cfg).map(|r| r.0).unwrap_or(f64::INFINITY);
            let b = renorm_at(&q, m - v, &cfg).map(|r| r.0).unwrap_or(f64::INFINITY);
            -(a + b)
        }),
        Interval::new(-half, half),
        QuadConfig {
            panels,
            ..QuadConfig::default()
        },
    )
}

/// Residuals of the hierarchic identities at `N = 4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub function: String,
    pub entropy_total: f64,
    pub entropy_fiber_part: f64,
    pub entropy_marginal_part: f64,
    /// `|Ent(f) − ∫Ent(f|y)μ̄(dy) − Ent_μ̄(f̄)|`
    pub entropy_residual: f64,
    /// `sup |p(z|y) − p₁(z₁)p₂(z₂)| / sup p₁p₂` at random fiber points
    pub product_residual: f64,
    /// `max ||∇f|² − |(id−2PᵗP)∇f|² − |2PᵗP∇f|²|` at random points
    pub pythagoras_residual: f64,
}

pub struct HierarchyGrids {
    /// Gauss–Legendre nodes per chart axis for the left side.
    pub chart_nodes: usize,
    /// Panels of 16 nodes for the marginal coordinate `v`.
    pub marginal_panels: usize,
    pub seed: u64,
}

impl Default for HierarchyGrids {
    fn default() -> Self {
        HierarchyGrids {
            chart_nodes: 48,
            marginal_panels: 6,
            seed: 20240611,
        }
    }
}

pub fn hierarchy_suite(p: &PotentialSpec, m: f64, f: &FieldFunction, grids: &HierarchyGrids) -> Result<HierarchyReport> {
    // left side on the chart grid of μ_{4,m}
    let e = CanonicalEnsemble::build(p, 4, m, grids.chart_nodes)?;
    let lhs = functionals(&e, f)?.entropy;

    // right side: nested quadrature v → (z₁, z₂)
    let marginal = marginal_measure(p, m, grids.marginal_panels)?;
    let rows = marginal
        .nodes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(v, w)| {
            let y = [m + v, m - v];
            let a = pair_fiber(p, y[0])?;
            let b = pair_fiber(p, y[1])?;
            let (mean, ent) = fiber_entropy(f, y, &a, &b)?;
            Ok((w, mean, ent))
        })
        .collect::<Result<Vec<_>>>()?;
    let fiber_part: f64 = rows.iter().map(|(w, _, ent)| w * ent).sum();
    let fbar_mean: f64 = rows.iter().map(|(w, mean, _)| w * mean).sum();
    let fbar_flogf: f64 = rows.iter().map(|(w, mean, _)| w * mean * mean.ln()).sum();
    let marginal_part = fbar_flogf - fbar_mean * fbar_mean.ln();

    let product_residual = product_structure_residual(p, m, grids.seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(grids.seed);
    let mut pyth: f64 = 0.0;
    let mut g = [0.0; 4];
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-4.0..4.0)).collect();
        f.gradient(&x, &mut g);
        pyth = pyth.max(pythagoras_residual(&g)?);
    }

    Ok(HierarchyReport {
        function: f.label.clone(),
        entropy_total: lhs,
        entropy_fiber_part: fiber_part,
        entropy_marginal_part: marginal_part,
        entropy_residual: (lhs - fiber_part - marginal_part).abs(),
        product_residual,
        pythagoras_residual: pyth,
    })
}

/// Compares the conditional density of `μ_{4,m}` on fibers, normalized by
/// its own 2-D Gauss–Legendre quadrature, with the product of the two 1-D
/// pair measures, at random fiber points.
pub fn product_structure_residual(p: &PotentialSpec, m: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (t, w) = gauss_legendre(160);
    let mut worst: f64 = 0.0;
    for v in [0.0, 0.4, -1.1] {
        let y = [m + v, m - v];
        let a = pair_fiber(p, y[0])?;
        let b = pair_fiber(p, y[1])?;
        let (wa, wb) = (a.window(), b.window());
        let logh = |z1: f64, z2: f64| log_weight(p, &[y[0] - z1, y[0] + z1, y[1] - z2, y[1] + z2]);
        let shift = logh(a.window_info().argmax, b.window_info().argmax);
        let mut z = 0.0;
        for (ti, wi) in t.iter().zip(&w) {
            let z1 = wa.mid() + 0.5 * wa.width() * ti;
            for (tj, wj) in t.iter().zip(&w) {
                let z2 = wb.mid() + 0.5 * wb.width() * tj;
                z += 0.25 * wa.width() * wb.width() * wi * wj * (logh(z1, z2) - shift).exp();
            }
        }
        let peak = a.density(a.window_info().argmax) * b.density(b.window_info().argmax);
        for _ in 0..200 {
            // sample inside the bulk of each factor
            let z1 = a.window_info().argmax + rng.gen_range(-3.0..3.0) * a.central_moments(2)?.std();
            let z2 = b.window_info().argmax + rng.gen_range(-3.0..3.0) * b.central_moments(2)?.std();
            let joint = (logh(z1, z2) - shift).exp() / z;
            let prod = a.density(z1) * b.density(z2);
            worst = worst.max((joint - prod).abs() / peak);
        }
    }
    Ok(worst)
}

/// `|∫P∇f μ(dx|y) − ½∇f̄(y) − P cov_{μ(dx|y)}(f, ∇H)|` with `f̄` extended to
/// all `y ∈ ℝ²` through the product fiber measure and differentiated by a
/// five-point stencil in each `y_i`.
pub fn macro_gradient_identity(p: &PotentialSpec, y: [f64; 2], f: &FieldFunction) -> Result<f64> {
    let a = pair_fiber(p, y[0])?;
    let b = pair_fiber(p, y[1])?;
    let mut lhs = [0.0; 2];
    let mut fmean = 0.0;
    let mut gh_mean = [0.0; 4];
    let mut f_gh = [0.0; 4];
    let mut g = [0.0; 4];
    for (z1, w1) in a.nodes() {
        for (z2, w2) in b.nodes() {
            let w = w1 * w2;
            let x = [y[0] - z1, y[0] + z1, y[1] - z2, y[1] + z2];
            f.gradient(&x, &mut g);
            let v = f.value(&x);
            lhs[0] += w * 0.5 * (g[0] + g[1]);
            lhs[1] += w * 0.5 * (g[2] + g[3]);
            fmean += w * v;
            for i in 0..4 {
                let dh = p.eval(x[i])?.1;
                gh_mean[i] += w * dh;
                f_gh[i] += w * v * dh;
            }
        }
    }
    let cov: Vec<f64> = (0..4).map(|i| f_gh[i] - fmean * gh_mean[i]).collect();
    let pcov = [0.5 * (cov[0] + cov[1]), 0.5 * (cov[2] + cov[3])];
    let h = 1e-2;
    let mut grad_fbar = [0.0; 2];
    for k in 0..2 {
        let mut vals = [0.0; 4];
        for (slot, off) in vals.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
            let mut yy = y;
            yy[k] += off * h;
            let a2 = pair_fiber(p, yy[0])?;
            let b2 = pair_fiber(p, yy[1])?;
            *slot = fiber_mean(f, yy, &a2, &b2);
        }
        grad_fbar[k] = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h);
    }
    let r0 = lhs[0] - 0.5 * grad_fbar[0] - pcov[0];
    let r1 = lhs[1] - 0.5 * grad_fbar[1] - pcov[1];
    Ok((r0 * r0 + r1 * r1).sqrt())
}

/// Density of `P#μ_{4,m}` on a `v`-grid by 2-D fiber quadrature, against
/// the canonical ensemble on `X_{2,m}` built from the tabulated `Rψ`.
/// Returns the sup relative error where `μ̄ ≥ 1e−6·max`.
pub fn marginal_check(p: &PotentialSpec, m: f64, table: &TabulatedPotential) -> Result<f64> {
    p.require_admissible()?;
    let (t, w) = gauss_legendre(96);
    // v-window from the tabulated side
    let tw = table.window();
    let logbar = |v: f64| -(table.value(m + v) + table.value(m - v));
    let info = find_window(&logbar, Interval::new(-(m - tw.lo).min(tw.hi - m), (m - tw.lo).min(tw.hi - m)), LOG_DROP)?;
    let vw = info.window;
    let nv = 128;
    let (tv, wv) = gauss_legendre(nv);
    let vs: Vec<f64> = tv.iter().map(|ti| vw.mid() + 0.5 * vw.width() * ti).collect();
    let fiber: Vec<f64> = vs
        .par_iter()
        .map(|&v| {
            let y = [m + v, m - v];
            let a = find_window(&|z: f64| -(p.value(y[0] - z) + p.value(y[0] + z)), Interval::REAL_LINE, LOG_DROP)?;
            let b = find_window(&|z: f64| -(p.value(y[1] - z) + p.value(y[1] + z)), Interval::REAL_LINE, LOG_DROP)?;
            let (wa, wb) = (a.window, b.window);
            let mut s = 0.0;
            for (ti, wi) in t.iter().zip(&w) {
                let z1 = wa.mid() + 0.5 * wa.width() * ti;
                for (tj, wj) in t.iter().zip(&w) {
                    let z2 = wb.mid() + 0.5 * wb.width() * tj;
                    let lw = log_weight(p, &[y[0] - z1, y[0] + z1, y[1] - z2, y[1] + z2]);
                    s += 0.25 * wa.width() * wb.width() * wi * wj * (lw - info.log_max).exp();
                }
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let tab: Vec<f64> = vs.iter().map(|&v| (logbar(v) - info.log_max).exp()).collect();
    let half = 0.5 * vw.width();
    let zf: f64 = fiber.iter().zip(&wv).map(|(a, b)| a * b * half).sum();
    let zt: f64 = tab.iter().zip(&wv).map(|(a, b)| a * b * half).sum();
    let peak = tab.iter().map(|v| v / zt).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (a, b) in fiber.iter().zip(&tab) {
        let (da, db) = (a / zf, b / zt);
        if db >= 1e-6 * peak {
            worst = worst.max((da - db).abs() / db);
        }
    }
    Ok(worst)
}

/// `c₀ · exp(−N · osc δψ)` from Bakry–Émery on the convex part and
/// Holley–Stroock for the perturbation, observed on `[−12, 12]`.
pub fn be_hs_lower_bound(p: &PotentialSpec, n: usize) -> Result<f64> {
    p.require_admissible()?;
    let window = Interval::symmetric(12.0)
        .intersect(&p.support())
        .ok_or(Error::OutOfSupport { x: 0.0, lo: -12.0, hi: 12.0 })?;
    let r = validate_splitting(p, window, 4097)?;
    Ok(r.c0_observed * (-(n as f64) * r.osc_delta).exp())
}
