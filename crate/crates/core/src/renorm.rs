//! The pair renormalization map
//! `Rψ(y) = −log ∫ exp(−ψ(y + z) − ψ(y − z)) dz`, tabulated on a knot grid
//! with a natural cubic spline, its iteration, and the induced splitting of
//! the renormalized potential.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covkernel::{KernelMeasure, TestFunction};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::measure1d::{log_partition, OneDMeasure, QuadConfig};
use crate::potential::{PotentialSpec, SingleSite};
use crate::spline::CubicSpline;

pub const DEFAULT_HALF_WIDTH: f64 = 24.0;
pub const DEFAULT_KNOTS: usize = 8193;
pub const MIN_KNOTS: usize = 129;
/// Knots dropped at each end of a table: the natural end condition perturbs
/// the spline curvature by a factor ≈ 0.27 per knot away from the boundary.
pub const EDGE_TRIM: usize = 24;
pub const MIN_WINDOW_WIDTH: f64 = 4.0;
pub const MAX_GENERATIONS: usize = 8;

/// Knot quadrature settings. The second difference of the value table
/// amplifies knot noise by `4/h²`, so knots are integrated well below the
/// generic tolerance.
pub fn knot_quad_config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        ..QuadConfig::default()
    }
}

/// `R^M ψ` on a knot grid. Values outside the reliable window are `+∞`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabulatedPotential {
    spline: CubicSpline,
    window: Interval,
    generation: usize,
    label: String,
}

/// The quantity being renormalized.
#[derive(Clone, Copy)]
pub enum Parent<'a> {
    Spec(&'a PotentialSpec),
    Table(&'a TabulatedPotential),
}

impl<'a> From<&'a PotentialSpec> for Parent<'a> {
    fn from(p: &'a PotentialSpec) -> Self {
        Parent::Spec(p)
    }
}

impl<'a> From<&'a TabulatedPotential> for Parent<'a> {
    fn from(t: &'a TabulatedPotential) -> Self {
        Parent::Table(t)
    }
}

impl<'a> Parent<'a> {
    fn site(&self) -> &'a dyn SingleSite {
        match *self {
            Parent::Spec(p) => p,
            Parent::Table(t) => t,
        }
    }

    fn generation(&self) -> usize {
        match self {
            Parent::Spec(_) => 0,
            Parent::Table(t) => t.generation,
        }
    }

    fn label(&self) -> String {
        match self {
            Parent::Spec(p) => p.label().to_string(),
            Parent::Table(t) => t.label.clone(),
        }
    }
}

impl SingleSite for TabulatedPotential {
    fn value(&self, x: f64) -> f64 {
        if self.window.contains(x) {
            self.spline.value(x)
        } else {
            f64::INFINITY
        }
    }

    fn support(&self) -> Interval {
        self.window
    }

    fn derivatives(&self, x: f64) -> Result<(f64, f64, f64)> {
        self.eval(x)
    }
}

impl TabulatedPotential {
    /// Value, first and second derivative of the interpolant.
    pub fn eval(&self, y: f64) -> Result<(f64, f64, f64)> {
        if !self.window.contains(y) {
            return Err(Error::OutOfSupport {
                x: y,
                lo: self.window.lo,
                hi: self.window.hi,
            });
        }
        Ok(self.spline.eval(y))
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spline(&self) -> &CubicSpline {
        &self.spline
    }

    /// Knots inside the reliable window with `(y, value, d1, d2)`.
    pub fn rows(&self) -> Vec<[f64; 4]> {
        self.spline
            .knots()
            .iter()
            .filter(|y| self.window.contains(**y))
            .map(|&y| {
                let (v, d1, d2) = self.spline.eval(y);
                [y, v, d1, d2]
            })
            .collect()
    }

    pub fn knot_spacing(&self) -> f64 {
        let k = self.spline.knots();
        (k[k.len() - 1] - k[0]) / (k.len() - 1) as f64
    }

    /// Largest gap between the spline curvature at a knot and the central
    /// second difference of the value table (step = knot spacing), over the
    /// knots of the reliable window.
    pub fn d2_crosscheck(&self) -> f64 {
        let x = self.spline.knots();
        let y = self.spline.values();
        let m = self.spline.second_derivatives();
        let mut worst: f64 = 0.0;
        for i in 1..x.len() - 1 {
            if !self.window.contains(x[i]) {
                continue;
            }
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let fd = 2.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0) / (h0 + h1);
            worst = worst.max((fd - m[i]).abs());
        }
        worst
    }

    /// Largest deviation between the interpolant and a direct quadrature
    /// re-evaluation of the renormalization map at `count` random points of
    /// the reliable window.
    pub fn fidelity_residual(&self, parent: Parent<'_>, count: usize, seed: u64, cfg: &QuadConfig) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let y = rng.gen_range(self.window.lo..self.window.hi);
            let (direct, _) = renorm_at(parent.site(), y, cfg)?;
            worst = worst.max((direct - self.spline.value(y)).abs());
        }
        Ok(worst)
    }
}

/// `Rψ(y)` by one-dimensional quadrature, plus whether the `z`-window hit
/// the parent's support before the integrand decayed.
pub fn renorm_at(parent: &dyn SingleSite, y: f64, cfg: &QuadConfig) -> Result<(f64, bool)> {
    let s = parent.support();
    let half = (s.hi - y).min(y - s.lo);
    if !(half > 0.0) {
        return Err(Error::OutOfSupport { x: y, lo: s.lo, hi: s.hi });
    }
    let logdens = |z: f64| -(parent.value(y + z) + parent.value(y - z));
    let (log_z, info) = log_partition(&logdens, Interval::new(-half, half), cfg)?;
    Ok((-log_z, info.clamped_lo || info.clamped_hi))
}

/// Tabulates the renormalized parent on `n` uniform knots over
/// `window ∩ support(parent)`.
pub fn renormalize<'a>(parent: impl Into<Parent<'a>>, window: Interval, n: usize) -> Result<TabulatedPotential> {
    renormalize_with(parent, window, n, &knot_quad_config())
}

pub fn renormalize_with<'a>(
    parent: impl Into<Parent<'a>>,
    window: Interval,
    n: usize,
    cfg: &QuadConfig,
) -> Result<TabulatedPotential> {
    let parent = parent.into();
    if let Parent::Spec(p) = parent {
        p.require_admissible()?;
    }
    if n < MIN_KNOTS {
        return Err(Error::InvalidParameter(format!("n = {n} < {MIN_KNOTS} knots")));
    }
    let site = parent.site();
    let domain = window
        .intersect(&site.support())
        .filter(|d| d.is_finite())
        .ok_or(Error::WindowExhausted { lo: window.lo, hi: window.hi })?;
    let knots = domain.linspace(n);
    let values: Vec<Option<f64>> = knots
        .par_iter()
        .map(|&y| match renorm_at(site, y, cfg) {
            Ok((v, false)) if v.is_finite() => Ok(Some(v)),
            Ok(_) | Err(Error::OutOfSupport { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    // longest run of reliable knots
    let (mut best, mut start) = ((0, 0), None);
    for i in 0..=n {
        let ok = i < n && values[i].is_some();
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    let (a, b) = best;
    if b - a < MIN_KNOTS.max(2 * EDGE_TRIM + 2) {
        return Err(Error::WindowExhausted { lo: domain.lo, hi: domain.hi });
    }
    let x: Vec<f64> = knots[a..b].to_vec();
    let y: Vec<f64> = values[a..b].iter().map(|v| v.unwrap()).collect();
    let reliable = Interval::new(x[EDGE_TRIM], x[x.len() - 1 - EDGE_TRIM]);
    if reliable.width() < MIN_WINDOW_WIDTH {
        return Err(Error::WindowExhausted {
            lo: reliable.lo,
            hi: reliable.hi,
        });
    }
    Ok(TabulatedPotential {
        spline: CubicSpline::natural(x, y),
        window: reliable,
        generation: parent.generation() + 1,
        label: format!("R[{}]", parent.label()),
    })
}

/// Generations `1..=m` of the iterated map; generation `k + 1` is tabulated
/// over the reliable window of generation `k`. Generation 1 uses `n` knots;
/// later generations shrink the knot spacing by `√2` per step, since the
/// table's fourth derivative grows like `2^k`.
pub fn iterate(p: &PotentialSpec, m: usize, window: Interval, n: usize) -> Result<Vec<TabulatedPotential>> {
    iterate_with(p, m, window, n, &knot_quad_config())
}

pub fn iterate_with(
    p: &PotentialSpec,
    m: usize,
    window: Interval,
    n: usize,
    cfg: &QuadConfig,
) -> Result<Vec<TabulatedPotential>> {
    if m == 0 || m > MAX_GENERATIONS {
        return Err(Error::InvalidParameter(format!("generations M = {m} outside 1..={MAX_GENERATIONS}")));
    }
    let mut out: Vec<TabulatedPotential> = Vec::with_capacity(m);
    out.push(renormalize_with(p, window, n, cfg)?);
    let h1 = out[0].knot_spacing();
    for k in 1..m {
        let prev = out.last().unwrap();
        let h = h1 / 2f64.powf(0.5 * k as f64);
        let nk = ((prev.window().width() / h).ceil() as usize + 1).max(MIN_KNOTS);
        let next = renormalize_with(prev, prev.window(), nk, cfg)?;
        out.push(next);
    }
    Ok(out)
}

/// Minimum of `ψ''` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub min_d2: f64,
    pub argmin: f64,
    pub positive: bool,
}

/// 2048-point scan of the second derivative followed by golden-section
/// refinement around the smallest sample.
pub fn convexity_report(site: &dyn SingleSite, window: Interval) -> Result<ConvexityReport> {
    let s = site.support();
    if !(s.contains(window.lo) && s.contains(window.hi)) {
        return Err(Error::WindowExhausted {
            lo: window.lo,
            hi: window.hi,
        });
    }
    let d2 = |x: f64| site.derivatives(x).map(|v| v.2);
    let grid = window.linspace(2048);
    let mut vals = Vec::with_capacity(grid.len());
    for &x in &grid {
        vals.push(d2(x)?);
    }
    let i = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let (mut argmin, mut min_d2) = (grid[i], vals[i]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        if hi - lo < 1e-12 {
            break;
        }
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        let (fc, fd) = (d2(c)?, d2(d)?);
        if fc < min_d2 {
            min_d2 = fc;
            argmin = c;
        }
        if fd < min_d2 {
            min_d2 = fd;
            argmin = d;
        }
        if fc < fd {
            hi = d;
        } else {
            lo = c;
        }
    }
    Ok(ConvexityReport {
        min_d2,
        argmin,
        positive: min_d2 > 0.0,
    })
}

/// `ψ̄_c = ½R(ψ_c)` and `δ̄ψ = ½Rψ − ψ̄_c` on a common knot grid, so that
/// `Rψ = 2ψ̄_c + 2δ̄ψ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenormSplitting {
    pub convex_part: CubicSpline,
    pub perturbation: CubicSpline,
    pub window: Interval,
    pub sup_delta: f64,
    pub sup_delta_d1: f64,
}

impl RenormSplitting {
    /// `(ψ̄_c + δ̄ψ)(y)`.
    pub fn half_renormalized(&self, y: f64) -> f64 {
        self.convex_part.value(y) + self.perturbation.value(y)
    }
}

pub fn renorm_splitting(p: &PotentialSpec, window: Interval, n: usize) -> Result<RenormSplitting> {
    p.require_admissible()?;
    let full = renormalize(p, window, n)?;
    let convex = renormalize(&p.convex_only(), window, n)?;
    let common = full
        .window()
        .intersect(&convex.window())
        .ok_or(Error::WindowExhausted { lo: window.lo, hi: window.hi })?;
    // both tables share the same uniform knots; keep those present in both
    let knots: Vec<f64> = full
        .spline
        .knots()
        .iter()
        .copied()
        .filter(|y| convex.spline.knots().binary_search_by(|k| k.partial_cmp(y).unwrap()).is_ok())
        .collect();
    let cvals: Vec<f64> = knots.iter().map(|&y| 0.5 * convex.spline.value(y)).collect();
    let dvals: Vec<f64> = knots
        .iter()
        .zip(&cvals)
        .map(|(&y, c)| 0.5 * full.spline.value(y) - c)
        .collect();
    let convex_part = CubicSpline::natural(knots.clone(), cvals);
    let perturbation = CubicSpline::natural(knots.clone(), dvals);
    let mut sup_delta: f64 = 0.0;
    let mut sup_delta_d1: f64 = 0.0;
    for &y in knots.iter().filter(|y| common.contains(**y)) {
        let (v, d1, _) = perturbation.eval(y);
        sup_delta = sup_delta.max(v.abs());
        sup_delta_d1 = sup_delta_d1.max(d1.abs());
    }
    Ok(RenormSplitting {
        convex_part,
        perturbation,
        window: common,
        sup_delta,
        sup_delta_d1,
    })
}

/// Lower bound for `(½R(ψ_c))''(y)` from the classical Brascamp–Lieb
/// inequality on the fiber measure `∝ exp(−ψ_c(y+z) − ψ_c(y−z)) dz`:
/// `(Rψ_c)'' = ⟨F_yy⟩ − var(F_y) ≥ ⟨F_yy⟩ − ⟨(∂_z F_y)² / F_zz⟩`.
pub fn convex_curvature_floor(p: &PotentialSpec, y: f64) -> Result<f64> {
    let c = p.convex_only();
    let q = c.clone();
    let mu = OneDMeasure::normalize(move |z| -(q.value(y + z) + q.value(y - z)), Interval::REAL_LINE)?;
    let q = c.clone();
    let fzz = move |z: f64| q.convex_part(y + z)[2] + q.convex_part(y - z)[2];
    let expected_fyy = mu.expect(&fzz);
    let km = KernelMeasure::new(mu, fzz);
    let (q1, q2) = (c.clone(), c);
    let fy = TestFunction::new(
        "F_y",
        move |z| q1.convex_part(y + z)[1] + q1.convex_part(y - z)[1],
        move |z| q2.convex_part(y + z)[2] - q2.convex_part(y - z)[2],
    );
    let bl = km.classical_bl_check(&fy)?;
    Ok(0.5 * (expected_fyy - bl.rhs))
}
