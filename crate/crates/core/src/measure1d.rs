//! One-dimensional Gibbs measures `Z⁻¹ exp(logdens(x)) dx` on a (possibly
//! half-infinite) interval.
//!
//! Construction locates the mode, truncates to the window where the log
//! density is within `log_drop` of its maximum, computes `log Z` with
//! max-shifted adaptive Gauss–Kronrod quadrature, and caches a composite
//! Gauss–Legendre table (nodes, normalized density, running CDF) used by all
//! expectations afterwards.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quad::{Adaptive, CompositeRule, PanelRule};

pub type LogDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Largest window the mode/tail search may explore.
const MAX_WINDOW_LENGTH: f64 = 1e6;
/// Oscillatory quadrature panel budget.
const MAX_OSC_PANELS: usize = 10_000_000;
const PANEL_ORDER: usize = 16;

fn panel_rule() -> &'static PanelRule {
    static RULE: OnceLock<PanelRule> = OnceLock::new();
    RULE.get_or_init(|| PanelRule::new(PANEL_ORDER))
}

/// Quadrature settings (`quad.abs_tol`, `quad.log_drop` in run configs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub log_drop: f64,
    /// Panels of the cached Gauss–Legendre table.
    pub panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            log_drop: 40.0,
            panels: 256,
        }
    }
}

/// Where the truncation window sits and whether a support wall cut it
/// before the log density dropped by `log_drop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowInfo {
    pub window: Interval,
    pub argmax: f64,
    pub log_max: f64,
    pub clamped_lo: bool,
    pub clamped_hi: bool,
}

fn start_point(support: Interval) -> f64 {
    match (support.lo.is_finite(), support.hi.is_finite()) {
        (false, false) => 0.0,
        (true, false) => {
            if support.lo < 0.0 {
                0.0
            } else {
                support.lo + 1.0
            }
        }
        (false, true) => {
            if support.hi > 0.0 {
                0.0
            } else {
                support.hi - 1.0
            }
        }
        (true, true) => support.mid(),
    }
}

fn wall_point(wall: f64, inward: f64) -> f64 {
    wall + inward * (wall.abs().max(1.0) * 1e-13)
}

struct Sample {
    x: f64,
    v: f64,
}

/// Scans outward from a starting point with geometrically growing steps.
fn scan_side(
    logdens: &dyn Fn(f64) -> f64,
    x0: f64,
    dir: f64,
    support: Interval,
    drop: f64,
    best: &mut f64,
) -> Result<(Vec<Sample>, bool)> {
    let mut out = Vec::new();
    let mut step = 0.02;
    let mut x = x0;
    loop {
        let mut next = x + dir * step;
        let mut at_wall = false;
        if dir > 0.0 && next >= support.hi {
            next = wall_point(support.hi, -1.0);
            at_wall = true;
        } else if dir < 0.0 && next <= support.lo {
            next = wall_point(support.lo, 1.0);
            at_wall = true;
        }
        let v = logdens(next);
        if v.is_nan() {
            return Err(Error::DegenerateDensity);
        }
        if v == f64::INFINITY {
            return Err(Error::NonIntegrable(format!("log density is +inf at {next}")));
        }
        if v > *best {
            *best = v;
        }
        out.push(Sample { x: next, v });
        if at_wall {
            return Ok((out, true));
        }
        if v < *best - drop - 10.0 {
            return Ok((out, false));
        }
        if (next - x0).abs() > MAX_WINDOW_LENGTH {
            return Err(Error::NonIntegrable(format!(
                "log density does not decay within {MAX_WINDOW_LENGTH} of {x0}"
            )));
        }
        x = next;
        step *= 1.05;
    }
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Locates the mode and the truncation window of `exp(logdens)`.
pub fn find_window(logdens: &dyn Fn(f64) -> f64, support: Interval, log_drop: f64) -> Result<WindowInfo> {
    let x0 = start_point(support);
    let v0 = logdens(x0);
    if v0.is_nan() {
        return Err(Error::DegenerateDensity);
    }
    let mut best = v0;
    let (right, wall_hi) = scan_side(logdens, x0, 1.0, support, log_drop, &mut best)?;
    let (left, wall_lo) = scan_side(logdens, x0, -1.0, support, log_drop, &mut best)?;
    if !best.is_finite() {
        return Err(Error::DegenerateDensity);
    }

    // samples in increasing x
    let mut samples: Vec<Sample> = left.into_iter().rev().collect();
    samples.push(Sample { x: x0, v: v0 });
    samples.extend(right);
    let imax = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.v.partial_cmp(&b.1.v).unwrap())
        .map(|(i, _)| i)
        .ok_or(Error::DegenerateDensity)?;
    let lo_b = samples[imax.saturating_sub(1)].x;
    let hi_b = samples[(imax + 1).min(samples.len() - 1)].x;
    let (mut argmax, mut log_max) = (samples[imax].x, samples[imax].v);
    if hi_b > lo_b {
        let (xm, vm) = golden_max(logdens, lo_b, hi_b);
        if vm > log_max {
            argmax = xm;
            log_max = vm;
        }
    }
    if !log_max.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    let threshold = log_max - log_drop;

    // walk outward from the mode to the first sample below threshold
    let mut hi_idx = samples.len() - 1;
    for (i, s) in samples.iter().enumerate().skip(imax) {
        if s.v < threshold {
            hi_idx = i;
            break;
        }
    }
    let mut lo_idx = 0;
    for i in (0..=imax).rev() {
        if samples[i].v < threshold {
            lo_idx = i;
            break;
        }
    }
    let last = samples.len() - 1;
    let clamped_hi = wall_hi && hi_idx == last && samples[last].v >= threshold;
    let clamped_lo = wall_lo && lo_idx == 0 && samples[0].v >= threshold;
    let hi = if wall_hi && hi_idx == last { support.hi } else { samples[hi_idx].x };
    let lo = if wall_lo && lo_idx == 0 { support.lo } else { samples[lo_idx].x };
    Ok(WindowInfo {
        window: Interval::new(lo, hi),
        argmax,
        log_max,
        clamped_lo,
        clamped_hi,
    })
}

/// `log ∫ exp(logdens)` over the truncation window, without building a table.
pub fn log_partition(
    logdens: &dyn Fn(f64) -> f64,
    support: Interval,
    cfg: &QuadConfig,
) -> Result<(f64, WindowInfo)> {
    let info = find_window(logdens, support, cfg.log_drop)?;
    let shifted = |x: f64| {
        let v = logdens(x);
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            (v - info.log_max).exp()
        }
    };
    let adaptive = Adaptive {
        abs_tol: cfg.abs_tol,
        rel_tol: cfg.rel_tol,
        max_panels: 20_000,
    };
    let out = adaptive.integrate(&shifted, info.window.lo, info.window.hi, 8);
    if !out.converged || !(out.value > 0.0) || !out.value.is_finite() {
        return Err(Error::NonIntegrable(format!(
            "adaptive quadrature on {} ended at {} ± {}",
            info.window, out.value, out.error
        )));
    }
    Ok((info.log_max + out.value.ln(), info))
}

/// A normalized one-dimensional Gibbs measure with cached quadrature data.
#[derive(Clone)]
pub struct OneDMeasure {
    logdens: LogDensity,
    support: Interval,
    info: WindowInfo,
    log_normalizer: f64,
    cfg: QuadConfig,
    table: CompositeRule,
    density: Vec<f64>,
    cdf_at_nodes: Vec<f64>,
    tail_at_nodes: Vec<f64>,
    /// `M` and `1 − M` at the left edge of each panel (plus the final edge).
    cdf_edges: Vec<f64>,
    tail_edges: Vec<f64>,
    median: f64,
}

impl std::fmt::Debug for OneDMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OneDMeasure")
            .field("support", &self.support)
            .field("window", &self.info.window)
            .field("log_normalizer", &self.log_normalizer)
            .finish()
    }
}

/// Mean, variance and central moments up to a given order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// `⟨|x − m|^k⟩` for k = 0..=kmax
    pub absolute: Vec<f64>,
    /// `⟨(x − m)^k⟩` for k = 0..=kmax
    pub signed: Vec<f64>,
    /// `⟨|x̂|^k⟩ = ⟨|x − m|^k⟩ / s^k`
    pub normalized_absolute: Vec<f64>,
    /// `⟨x̂^k⟩`
    pub normalized_signed: Vec<f64>,
}

impl Moments {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

impl OneDMeasure {
    pub fn normalize(logdens: impl Fn(f64) -> f64 + Send + Sync + 'static, support: Interval) -> Result<Self> {
        Self::normalize_with(Arc::new(logdens), support, QuadConfig::default())
    }

    pub fn normalize_with(logdens: LogDensity, support: Interval, cfg: QuadConfig) -> Result<Self> {
        let (log_normalizer, info) = log_partition(logdens.as_ref(), support, &cfg)?;
        let rule = panel_rule();
        let table = CompositeRule::new(info.window.lo, info.window.hi, cfg.panels.max(1), rule);
        let density: Vec<f64> = table
            .x
            .iter()
            .map(|&x| {
                let v = logdens(x);
                if v == f64::NEG_INFINITY {
                    0.0
                } else {
                    (v - log_normalizer).exp()
                }
            })
            .collect();
        let cdf_at_nodes = table.cumulative(rule, &density);
        let order = table.order;
        let mut panel_mass = Vec::with_capacity(table.panels);
        for p in 0..table.panels {
            let r = p * order..(p + 1) * order;
            panel_mass.push(density[r.clone()].iter().zip(&table.w[r]).map(|(d, w)| d * w).sum::<f64>());
        }
        let mut cdf_edges = vec![0.0; table.panels + 1];
        for p in 0..table.panels {
            cdf_edges[p + 1] = cdf_edges[p] + panel_mass[p];
        }
        let mut tail_edges = vec![0.0; table.panels + 1];
        for p in (0..table.panels).rev() {
            tail_edges[p] = tail_edges[p + 1] + panel_mass[p];
        }
        let mut tail_at_nodes = vec![0.0; density.len()];
        for p in 0..table.panels {
            for i in 0..order {
                let k = p * order + i;
                let within = cdf_at_nodes[k] - cdf_edges[p];
                tail_at_nodes[k] = tail_edges[p + 1] + (panel_mass[p] - within).max(0.0);
            }
        }
        let mut m = OneDMeasure {
            logdens,
            support,
            info,
            log_normalizer,
            cfg,
            table,
            density,
            cdf_at_nodes,
            tail_at_nodes,
            cdf_edges,
            tail_edges,
            median: 0.0,
        };
        m.median = m.locate_median();
        Ok(m)
    }

    fn locate_median(&self) -> f64 {
        let (mut a, mut b) = (self.info.window.lo, self.info.window.hi);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if self.left_mass(c) < 0.5 {
                a = c;
            } else {
                b = c;
            }
            if b - a < 1e-13 * (1.0 + c.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn window(&self) -> Interval {
        self.info.window
    }

    pub fn window_info(&self) -> WindowInfo {
        self.info
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn config(&self) -> &QuadConfig {
        &self.cfg
    }

    pub fn log_density_fn(&self) -> &LogDensity {
        &self.logdens
    }

    /// Normalized Lebesgue density.
    pub fn density(&self, x: f64) -> f64 {
        if !self.support.contains_interior(x) {
            return 0.0;
        }
        let v = (self.logdens)(x);
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            (v - self.log_normalizer).exp()
        }
    }

    /// Quadrature nodes and their probability weights.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.table
            .x
            .iter()
            .zip(self.table.w.iter().zip(&self.density))
            .map(|(&x, (w, d))| (x, w * d))
    }

    pub fn node_points(&self) -> &[f64] {
        &self.table.x
    }

    /// Normalized density at each node (same order as [`Self::node_points`]).
    pub fn node_density(&self) -> &[f64] {
        &self.density
    }

    pub fn node_lebesgue_weights(&self) -> &[f64] {
        &self.table.w
    }

    /// `M_μ` at each node.
    pub fn node_cdf(&self) -> &[f64] {
        &self.cdf_at_nodes
    }

    /// `1 − M_μ` at each node, accumulated from the right.
    pub fn node_tail(&self) -> &[f64] {
        &self.tail_at_nodes
    }

    pub fn table(&self) -> &CompositeRule {
        &self.table
    }

    pub fn panel_rule(&self) -> &'static PanelRule {
        panel_rule()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes().map(|(x, w)| w * f(x)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.nodes().map(|(_, w)| w).sum()
    }

    fn panel_of(&self, x: f64) -> usize {
        let h = self.table.panel_width();
        (((x - self.table.a) / h).floor().max(0.0) as usize).min(self.table.panels - 1)
    }

    fn density_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        crate::quad::fixed(|x| self.density(x), a, b, panel_rule())
    }

    fn left_mass(&self, x: f64) -> f64 {
        let w = self.info.window;
        if x <= w.lo {
            return 0.0;
        }
        if x >= w.hi {
            return self.cdf_edges[self.table.panels];
        }
        let p = self.panel_of(x);
        let left = self.table.a + p as f64 * self.table.panel_width();
        self.cdf_edges[p] + self.density_integral(left, x)
    }

    fn right_mass(&self, x: f64) -> f64 {
        let w = self.info.window;
        if x >= w.hi {
            return 0.0;
        }
        if x <= w.lo {
            return self.tail_edges[0];
        }
        let p = self.panel_of(x);
        let right = self.table.a + (p + 1) as f64 * self.table.panel_width();
        self.tail_edges[p + 1] + self.density_integral(x, right.min(w.hi))
    }

    /// `M_μ(x) = μ((−∞, x))`, evaluated from whichever tail is smaller.
    pub fn cdf(&self, x: f64) -> f64 {
        let v = if x <= self.median {
            self.left_mass(x)
        } else {
            1.0 - self.right_mass(x)
        };
        v.clamp(0.0, 1.0)
    }

    /// `1 − M_μ(x) = μ((x, ∞))`, evaluated from whichever tail is smaller.
    pub fn survival(&self, x: f64) -> f64 {
        let v = if x >= self.median {
            self.right_mass(x)
        } else {
            1.0 - self.left_mass(x)
        };
        v.clamp(0.0, 1.0)
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn central_moments(&self, kmax: usize) -> Result<Moments> {
        if kmax > 8 {
            return Err(Error::InvalidParameter(format!("kmax = {kmax} > 8")));
        }
        let mean = self.expect(|x| x);
        let mut absolute = vec![0.0; kmax + 1];
        let mut signed = vec![0.0; kmax + 1];
        for (x, w) in self.nodes() {
            let d = x - mean;
            let mut p: f64 = 1.0;
            for k in 0..=kmax {
                absolute[k] += w * p.abs();
                signed[k] += w * p;
                p *= d;
            }
        }
        let variance = self.expect(|x| (x - mean) * (x - mean));
        let s = variance.sqrt();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NonIntegrable("zero or infinite variance".into()));
        }
        let normalized_absolute = absolute.iter().enumerate().map(|(k, a)| a / s.powi(k as i32)).collect();
        let normalized_signed = signed.iter().enumerate().map(|(k, a)| a / s.powi(k as i32)).collect();
        Ok(Moments {
            mean,
            variance,
            absolute,
            signed,
            normalized_absolute,
            normalized_signed,
        })
    }

    /// `⟨exp(i x ξ)⟩`, with panels no wider than a quarter period.
    pub fn char_fn(&self, xi: f64) -> Result<Complex64> {
        if !(xi.abs() <= 1e4) {
            return Err(Error::InvalidParameter(format!("|xi| = {} exceeds 1e4", xi.abs())));
        }
        if xi == 0.0 {
            return Ok(Complex64::new(self.total_mass(), 0.0));
        }
        let width = self.info.window.width();
        let needed = (width * 4.0 * xi.abs() / std::f64::consts::PI).ceil() as usize;
        if needed <= self.table.panels {
            let (mut re, mut im) = (0.0, 0.0);
            for (x, w) in self.nodes() {
                let (s, c) = (xi * x).sin_cos();
                re += w * c;
                im += w * s;
            }
            return Ok(Complex64::new(re, im));
        }
        if needed > MAX_OSC_PANELS {
            return Err(Error::OscillationBudgetExceeded {
                panels: needed,
                budget: MAX_OSC_PANELS,
            });
        }
        let rule = panel_rule();
        let h = width / needed as f64;
        let a = self.info.window.lo;
        let (mut re, mut im) = (0.0, 0.0);
        for p in 0..needed {
            let left = a + h * p as f64;
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let x = left + 0.5 * h * (t + 1.0);
                let w = 0.5 * h * wt * self.density(x);
                let (s, c) = (xi * x).sin_cos();
                re += w * c;
                im += w * s;
            }
        }
        Ok(Complex64::new(re, im))
    }

    /// Largest frequency the cached table resolves under the quarter-period rule.
    pub fn table_frequency_limit(&self) -> f64 {
        self.table.panels as f64 * std::f64::consts::PI / (4.0 * self.info.window.width())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn std_gaussian() -> OneDMeasure {
        OneDMeasure::normalize(|x| -0.5 * x * x, Interval::REAL_LINE).unwrap()
    }

    fn unit_exponential() -> OneDMeasure {
        OneDMeasure::normalize(|x| -x, Interval::new(0.0, f64::INFINITY)).unwrap()
    }

    #[test]
    fn gaussian_normalizer() {
        let m = std_gaussian();
        assert!((m.log_normalizer() - 0.5 * (2.0 * PI).ln()).abs() < 1e-10);
        assert!((m.total_mass() - 1.0).abs() < 1e-10);
        // truncation rule: density at window edges is below e^-40 of the max
        let w = m.window();
        assert!(-0.5 * w.lo * w.lo < -40.0 && -0.5 * w.hi * w.hi < -40.0);
    }

    #[test]
    fn exponential_normalizer_and_moments() {
        let m = unit_exponential();
        assert!(m.log_normalizer().abs() < 1e-10);
        let mo = m.central_moments(4).unwrap();
        assert!((mo.mean - 1.0).abs() < 1e-10);
        assert!((mo.variance - 1.0).abs() < 1e-10);
        assert!((mo.normalized_signed[3] - 2.0).abs() < 1e-9);
        assert!((mo.normalized_signed[4] - 9.0).abs() < 1e-8);
        assert!((m.cdf(2f64.ln()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_moments() {
        let mo = std_gaussian().central_moments(4).unwrap();
        assert!(mo.mean.abs() < 1e-13);
        assert!((mo.variance - 1.0).abs() < 1e-11);
        assert!(mo.normalized_signed[3].abs() < 1e-12);
        assert!((mo.normalized_signed[4] - 3.0).abs() < 1e-10);
        assert!((mo.normalized_absolute[3] - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-10);
        assert!(std_gaussian().central_moments(9).is_err());
    }

    #[test]
    fn cosine_perturbed_normalizer_matches_trapezoid_sweep() {
        let ld = |x: f64| -0.5 * x * x - 1.25 * x.cos();
        let m = OneDMeasure::normalize(ld, Interval::REAL_LINE).unwrap();
        // independent oracle: trapezoid rule with 2e5 nodes on [-14, 14]
        let n = 200_000;
        let (a, b) = (-14.0, 14.0);
        let h = (b - a) / n as f64;
        let mut s = 0.5 * ((ld(a)).exp() + (ld(b)).exp());
        for i in 1..n {
            s += ld(a + h * i as f64).exp();
        }
        let oracle = (s * h).ln();
        assert!((m.log_normalizer() - oracle).abs() < 1e-11, "{} vs {}", m.log_normalizer(), oracle);
    }

    #[test]
    fn gaussian_cdf_values() {
        let m = std_gaussian();
        assert!((m.cdf(0.0) - 0.5).abs() < 1e-13);
        assert!((m.cdf(1.959964) - 0.975).abs() < 1e-7);
        assert!((m.survival(1.959964) - 0.025).abs() < 1e-7);
        // far tail from the complementary side keeps relative accuracy
        let oracle = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        for x in [3.0, 5.0, 7.0] {
            let exact = statrs::distribution::ContinuousCDF::sf(&oracle, x);
            let t = m.survival(x);
            assert!(((t - exact) / exact).abs() < 1e-6, "{x}: {t} vs {exact}");
            let c = m.cdf(-x);
            assert!(((c - exact) / exact).abs() < 1e-6, "{x}: {c} vs {exact}");
        }
        assert_eq!(m.cdf(-1e3), 0.0);
        assert_eq!(m.cdf(1e3), 1.0);
    }

    #[test]
    fn gaussian_char_fn() {
        let m = std_gaussian();
        let c = m.char_fn(1.0).unwrap();
        assert!((c.re - (-0.5f64).exp()).abs() < 1e-12);
        assert!(c.im.abs() < 1e-13);
        let c0 = m.char_fn(0.0).unwrap();
        assert!((c0.re - 1.0).abs() < 1e-10 && c0.im == 0.0);
        // beyond the cached table the quarter-period rule kicks in
        let c = m.char_fn(40.0).unwrap();
        assert!(c.norm() < 1e-12);
        assert!(m.char_fn(2e4).is_err());
    }

    #[test]
    fn tilted_cosine_char_fn_matches_brute_force() {
        let sigma = 0.7;
        let ld = move |x: f64| sigma * x - 0.5 * x * x - 1.25 * x.cos();
        let m = OneDMeasure::normalize(ld, Interval::REAL_LINE).unwrap();
        let c = m.char_fn(2.0).unwrap();
        // oracle: 1e6-node trapezoid on [-15, 16]
        let n = 1_000_000;
        let (a, b) = (-15.0, 16.0);
        let h = (b - a) / n as f64;
        let (mut z, mut re, mut im) = (0.0, 0.0, 0.0);
        for i in 0..=n {
            let x = a + h * i as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 } * ld(x).exp();
            z += w;
            re += w * (2.0 * x).cos();
            im += w * (2.0 * x).sin();
        }
        assert!((c.re - re / z).abs() < 1e-10);
        assert!((c.im - im / z).abs() < 1e-10);
    }

    #[test]
    fn degenerate_and_non_integrable_densities() {
        assert!(matches!(
            OneDMeasure::normalize(|_| f64::NAN, Interval::REAL_LINE),
            Err(Error::DegenerateDensity)
        ));
        assert!(matches!(
            OneDMeasure::normalize(|x| 1e-9 * x, Interval::REAL_LINE),
            Err(Error::NonIntegrable(_))
        ));
    }

    #[test]
    fn walls_clamp_the_window() {
        let info = find_window(&|x: f64| -0.5 * x * x, Interval::new(-1.0, 2.0), 40.0).unwrap();
        assert!(info.clamped_lo && info.clamped_hi);
        assert_eq!(info.window, Interval::new(-1.0, 2.0));
        let info = find_window(&|x: f64| -0.5 * x * x, Interval::new(-20.0, 20.0), 40.0).unwrap();
        assert!(!info.clamped_lo && !info.clamped_hi);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn char_fn_conjugate_symmetry_and_bound(xi in -30.0f64..30.0) {
                let m = OneDMeasure::normalize(|x: f64| 0.7 * x - 0.5 * x * x - 1.25 * x.cos(), Interval::REAL_LINE).unwrap();
                let a = m.char_fn(xi).unwrap();
                let b = m.char_fn(-xi).unwrap();
                prop_assert!(a.norm() <= 1.0 + 1e-9);
                prop_assert!((a - b.conj()).norm() < 1e-12);
            }

            #[test]
            fn cdf_is_monotone(x in -6.0f64..6.0, dx in 0.0f64..2.0) {
                let m = OneDMeasure::normalize(|x: f64| -0.5 * x * x - 1.25 * x.cos(), Interval::REAL_LINE).unwrap();
                prop_assert!(m.cdf(x) <= m.cdf(x + dx) + 1e-15);
                prop_assert!((m.cdf(x) + m.survival(x) - 1.0).abs() < 1e-12);
            }

            #[test]
            fn moments_are_translation_covariant(beta in 0.0f64..2.0) {
                let a = 3.7;
                let base = OneDMeasure::normalize(move |x: f64| -0.5 * x * x - beta * x.cos(), Interval::REAL_LINE).unwrap();
                let shifted = OneDMeasure::normalize(move |x: f64| { let y = x - a; -0.5 * y * y - beta * y.cos() }, Interval::REAL_LINE).unwrap();
                let m0 = base.central_moments(5).unwrap();
                let m1 = shifted.central_moments(5).unwrap();
                prop_assert!((m1.mean - m0.mean - a).abs() < 1e-10);
                for k in 2..=5 {
                    prop_assert!((m1.signed[k] - m0.signed[k]).abs() < 1e-9);
                }
            }
        }
    }
}
