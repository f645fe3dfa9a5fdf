//! Exponential tilting `μ^σ(dx) = exp(−φ*(σ) + σx − ψ(x)) dx`, the Cramér
//! transform `φ(m) = σm − φ*(σ)`, the local CLT density of the normalized
//! sum at the origin, and the coarse-grained Hamiltonian `H̄_K` obtained
//! from it.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::measure1d::{log_partition, OneDMeasure, QuadConfig};
use crate::potential::{PotentialSpec, SingleSite};
use crate::quad::PanelRule;

const NEWTON_MAX_ITER: usize = 100;
/// Half-width (in units of `ξ̂`) of the Fourier panels.
const FOURIER_PANEL: f64 = 0.25;
const FOURIER_MAX_PANELS: usize = 40_000;

fn fourier_rule() -> &'static PanelRule {
    static RULE: OnceLock<PanelRule> = OnceLock::new();
    RULE.get_or_init(|| PanelRule::new(16))
}

/// The tilted measure `μ^σ` with its mean, standard deviation and
/// normalized moments.
#[derive(Clone)]
pub struct TiltedMeasure {
    pub base: PotentialSpec,
    pub sigma: f64,
    pub log_phi_star: f64,
    pub mean: f64,
    pub std: f64,
    /// `⟨x̂^k⟩`, k = 0..=5
    pub normalized_moments: Vec<f64>,
    /// `⟨|x̂|^k⟩`, k = 0..=5
    pub normalized_abs_moments: Vec<f64>,
    measure: OneDMeasure,
}

impl std::fmt::Debug for TiltedMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TiltedMeasure")
            .field("base", &self.base.label())
            .field("sigma", &self.sigma)
            .field("mean", &self.mean)
            .field("std", &self.std)
            .finish()
    }
}

impl TiltedMeasure {
    pub fn new(p: &PotentialSpec, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
        }
        let q = p.clone();
        let measure = OneDMeasure::normalize_with(
            Arc::new(move |x| sigma * x - q.value(x)),
            p.support(),
            QuadConfig::default(),
        )?;
        let mo = measure.central_moments(5)?;
        Ok(TiltedMeasure {
            base: p.clone(),
            sigma,
            log_phi_star: measure.log_normalizer(),
            mean: mo.mean,
            std: mo.std(),
            normalized_moments: mo.normalized_signed,
            normalized_abs_moments: mo.normalized_absolute,
            measure,
        })
    }

    pub fn measure(&self) -> &OneDMeasure {
        &self.measure
    }

    /// `φ(m) = σm − φ*(σ)` at this measure's mean.
    pub fn phi(&self) -> f64 {
        self.sigma * self.mean - self.log_phi_star
    }

    /// `⟨exp(i x̂ ξ̂)⟩`.
    pub fn normalized_char_fn(&self, xi_hat: f64) -> Result<Complex64> {
        let eta = xi_hat / self.std;
        let c = self.measure.char_fn(eta)?;
        Ok(c * Complex64::from_polar(1.0, -eta * self.mean))
    }
}

/// `φ*(σ) = log ∫ exp(σx − ψ(x)) dx`.
pub fn phi_star(p: &PotentialSpec, sigma: f64) -> Result<f64> {
    let q = p.clone();
    let (v, _) = log_partition(&move |x| sigma * x - q.value(x), p.support(), &QuadConfig::default())?;
    Ok(v)
}

/// Solves `mean(μ^σ) = m` by safeguarded Newton steps `Δσ = −(mean − m)/s²`.
pub fn solve_sigma(p: &PotentialSpec, m: f64) -> Result<TiltedMeasure> {
    solve_sigma_from(p, m, 0.0)
}

pub fn solve_sigma_from(p: &PotentialSpec, m: f64, seed: f64) -> Result<TiltedMeasure> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut sigma = seed;
    let mut last_residual = f64::NAN;
    for _ in 0..NEWTON_MAX_ITER {
        let t = TiltedMeasure::new(p, sigma)?;
        let r = t.mean - m;
        last_residual = r;
        if r.abs() <= 1e-10 * t.std.max(1.0) {
            return Ok(t);
        }
        if r > 0.0 {
            hi = hi.min(sigma);
        } else {
            lo = lo.max(sigma);
        }
        let var = t.std * t.std;
        // a Newton step never moves more than 10 standard deviations in m
        let step = (-r / var).clamp(-10.0 / t.std, 10.0 / t.std);
        let mut next = sigma + step;
        if lo.is_finite() && hi.is_finite() && !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == sigma {
            break;
        }
        sigma = next;
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        state: format!("target m = {m}, sigma = {sigma}, bracket [{lo}, {hi}], residual {last_residual}"),
    })
}

/// One grid point of a Cramér profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub m: f64,
    pub sigma: f64,
    pub phi: f64,
    pub phi_dd: f64,
    pub s: f64,
    pub s_dm: f64,
    pub s_dmm: f64,
    /// `|dm/dσ − s²| / s²` with `dm/dσ` by central differences
    pub dm_dsigma_residual: f64,
    /// `|ds²/dσ − s³⟨x̂³⟩| / s²`
    pub ds2_dsigma_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CramerProfile {
    pub potential: String,
    pub points: Vec<ProfilePoint>,
}

impl CramerProfile {
    pub fn m_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.m).collect()
    }
}

pub fn cramer_profile(p: &PotentialSpec, m_grid: &[f64]) -> Result<CramerProfile> {
    if m_grid.len() < 9 {
        return Err(Error::InvalidParameter(format!("profile needs >= 9 points, got {}", m_grid.len())));
    }
    if !m_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("m grid must be strictly increasing".into()));
    }
    // continuation: each Newton solve starts from the previous σ
    let mut tilted = Vec::with_capacity(m_grid.len());
    let mut seed = 0.0;
    for &m in m_grid {
        let t = solve_sigma_from(p, m, seed)?;
        seed = t.sigma;
        tilted.push(t);
    }
    let points = tilted
        .par_iter()
        .map(|t| profile_point(p, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(CramerProfile {
        potential: p.label().to_string(),
        points,
    })
}

fn profile_point(p: &PotentialSpec, t: &TiltedMeasure) -> Result<ProfilePoint> {
    let m = t.mean;
    let s = t.std;
    let h = 1e-3 * s.max(0.1);
    let sp = solve_sigma_from(p, m + h, t.sigma)?.std;
    let sm = solve_sigma_from(p, m - h, t.sigma)?.std;
    let d = 1e-3 / s;
    let up = TiltedMeasure::new(p, t.sigma + d)?;
    let dn = TiltedMeasure::new(p, t.sigma - d)?;
    let var = s * s;
    let dm_dsigma = (up.mean - dn.mean) / (2.0 * d);
    let dvar_dsigma = (up.std * up.std - dn.std * dn.std) / (2.0 * d);
    Ok(ProfilePoint {
        m,
        sigma: t.sigma,
        phi: t.phi(),
        phi_dd: 1.0 / var,
        s,
        s_dm: (sp - sm) / (2.0 * h),
        s_dmm: (sp - 2.0 * s + sm) / (h * h),
        dm_dsigma_residual: (dm_dsigma - var).abs() / var,
        ds2_dsigma_residual: (dvar_dsigma - s * var * t.normalized_moments[3]).abs() / var,
    })
}

/// Local CLT density of `Σ x̂_i / √K` at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    #[serde(rename = "K")]
    pub k: usize,
    pub sigma: f64,
    pub g0: f64,
    /// `|g0 − 1/√(2π)|`
    pub error: f64,
    /// Fourier nodes used on the half line.
    pub xi_budget: usize,
    /// `max |h(ξ̂) − ½ξ̂²| / |ξ̂|³` over `0 < |ξ̂| ≤ 0.5`
    pub h_expansion_c: f64,
    /// the same constant over `0 < |ξ̂| ≤ 0.25`
    pub h_expansion_c_half: f64,
    /// `max |⟨exp(i x̂ ξ̂)⟩|` over the evaluated `|ξ̂| ≥ 1`
    pub decay_witness: f64,
}

/// `2π g_{K,σ}(0) = ∫ ⟨exp(i x̂ ξ̂/√K)⟩^K dξ̂`, integrated panel by panel on
/// the half line until the integrand modulus stays below `1e−16`.
pub fn clt_density(p: &PotentialSpec, sigma: f64, k: usize) -> Result<CltResult> {
    let t = TiltedMeasure::new(p, sigma)?;
    clt_from_tilted(&t, k)
}

pub fn clt_from_tilted(t: &TiltedMeasure, k: usize) -> Result<CltResult> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("K = {k} < 2")));
    }
    let rule = fourier_rule();
    let root_k = (k as f64).sqrt();
    let mut integral = 0.0;
    let mut nodes = 0;
    let mut decay_witness: f64 = 0.0;
    let mut quiet_panels = 0;
    for panel in 0.. {
        if panel >= FOURIER_MAX_PANELS {
            return Err(Error::OscillationBudgetExceeded {
                panels: panel,
                budget: FOURIER_MAX_PANELS,
            });
        }
        let a = panel as f64 * FOURIER_PANEL;
        let mut panel_max: f64 = 0.0;
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let xi_hat = a + 0.5 * FOURIER_PANEL * (u + 1.0);
            let c = t.normalized_char_fn(xi_hat / root_k)?;
            if xi_hat / root_k >= 1.0 {
                decay_witness = decay_witness.max(c.norm());
            }
            let ck = c.powu(k as u32);
            panel_max = panel_max.max(ck.norm());
            integral += 0.5 * FOURIER_PANEL * w * ck.re;
            nodes += 1;
        }
        if panel_max < 1e-16 {
            quiet_panels += 1;
            if quiet_panels >= 2 {
                break;
            }
        } else {
            quiet_panels = 0;
        }
    }
    let g0 = integral / PI;
    if !(g0 > 0.0) {
        return Err(Error::NonIntegrable(format!("local CLT density g0 = {g0}")));
    }
    let h_expansion_c = h_expansion_constant(t, 0.5)?;
    let h_expansion_c_half = h_expansion_constant(t, 0.25)?;
    Ok(CltResult {
        k,
        sigma: t.sigma,
        g0,
        error: (g0 - 1.0 / (2.0 * PI).sqrt()).abs(),
        xi_budget: nodes,
        h_expansion_c,
        h_expansion_c_half,
        decay_witness,
    })
}

/// `max |h(ξ̂) − ½ξ̂²| / |ξ̂|³` with `h = −log⟨exp(i x̂ ξ̂)⟩`, sampled on
/// `[0.05·r, r]`; below that the ratio is dominated by rounding.
fn h_expansion_constant(t: &TiltedMeasure, r: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..=64 {
        let xi = r * (0.05 + 0.95 * i as f64 / 64.0);
        for sgn in [1.0, -1.0] {
            let h = -t.normalized_char_fn(sgn * xi)?.ln();
            let dev = (h - Complex64::new(0.5 * xi * xi, 0.0)).norm() / (xi * xi * xi);
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

/// Errors `e_K` for a sorted list of `K`, plus whether `e_K √K` stays within
/// four times its value at the smallest `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltCurve {
    pub results: Vec<CltResult>,
    pub scaled_bound_holds: bool,
}

pub fn clt_error_curve(p: &PotentialSpec, sigma: f64, ks: &[usize]) -> Result<CltCurve> {
    if ks.is_empty() || !ks.windows(2).all(|w| w[1] > w[0]) || ks[0] < 2 {
        return Err(Error::InvalidParameter(format!("Ks must be sorted and >= 2: {ks:?}")));
    }
    let t = TiltedMeasure::new(p, sigma)?;
    let results = ks
        .par_iter()
        .map(|&k| clt_from_tilted(&t, k))
        .collect::<Result<Vec<_>>>()?;
    let first = results[0].error * (results[0].k as f64).sqrt();
    let scaled_bound_holds = results
        .iter()
        .all(|r| r.error * (r.k as f64).sqrt() <= 4.0 * first.max(f64::MIN_POSITIVE) || r.error <= 1e-12);
    Ok(CltCurve {
        results,
        scaled_bound_holds,
    })
}

/// `H̄_K(m) = φ(m) − (log g_{K,σ(m)}(0) − log s)/K`.
pub fn hbar(p: &PotentialSpec, m: f64, k: usize, seed: f64) -> Result<(f64, TiltedMeasure)> {
    let t = solve_sigma_from(p, m, seed)?;
    let g = clt_from_tilted(&t, k)?;
    let value = t.phi() - (g.g0.ln() - t.std.ln()) / k as f64;
    Ok((value, t))
}

/// `(H̄_K(m), H̄_K''(m))`, the latter by a five-point stencil of step `1e−2·s`.
pub fn coarse_grained_hamiltonian(p: &PotentialSpec, m: f64, k: usize) -> Result<(f64, f64)> {
    let (h0, t) = hbar(p, m, k, 0.0)?;
    let d = 1e-2 * t.std;
    let mut v = [0.0; 4];
    for (slot, off) in v.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
        *slot = hbar(p, m + off * d, k, t.sigma)?.0;
    }
    let dd = (-v[0] + 16.0 * v[1] - 30.0 * h0 + 16.0 * v[2] - v[3]) / (12.0 * d * d);
    Ok((h0, dd))
}

/// `H̄_2(m) = −½ log(√2 ∫ exp(−ψ(m+u) − ψ(m−u)) du)`, the `√2` being the
/// arc-length element of `{x₁ + x₂ = 2m}` in the coordinate `u`.
pub fn direct_hbar2(p: &PotentialSpec, m: f64) -> Result<f64> {
    p.require_admissible()?;
    let q = p.clone();
    let (log_int, _) = log_partition(
        &move |u| -(q.value(m + u) + q.value(m - u)),
        Interval::REAL_LINE,
        &QuadConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            ..QuadConfig::default()
        },
    )?;
    Ok(-0.5 * (0.5 * 2f64.ln() + log_int))
}

/// `(1/s) d/dσ ⟨x̂³⟩` two ways: central differences in `σ`, and the moment
/// formula `⟨x̂⁴⟩ − 3 − (3/2)⟨x̂³⟩²` from the tilting calculus.
pub fn third_moment_sigma_derivative(p: &PotentialSpec, sigma: f64) -> Result<(f64, f64)> {
    let t = TiltedMeasure::new(p, sigma)?;
    let d = 1e-3 / t.std;
    let up = TiltedMeasure::new(p, sigma + d)?;
    let dn = TiltedMeasure::new(p, sigma - d)?;
    let fd = (up.normalized_moments[3] - dn.normalized_moments[3]) / (2.0 * d * t.std);
    let m3 = t.normalized_moments[3];
    let formula = t.normalized_moments[4] - 3.0 - 1.5 * m3 * m3;
    Ok((fd, formula))
}

/// Moment and characteristic-function assumptions over a range of tilts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub sigmas: Vec<f64>,
    pub s_max: f64,
    /// `max_σ ⟨|x̂|^k⟩`, k = 0..=5
    pub abs_moment_max: Vec<f64>,
    /// `max_σ sup_ξ |s ξ ⟨exp(ixξ)⟩|` over `|ξ| ≤ xi_max`
    pub char_sup: f64,
}

/// Evaluates the assumptions at `n_sigma` tilts spanning `σ(m_lo)..σ(m_hi)`.
pub fn assumption_suite(p: &PotentialSpec, m_lo: f64, m_hi: f64, n_sigma: usize, xi_max: f64) -> Result<AssumptionReport> {
    let a = solve_sigma(p, m_lo)?.sigma;
    let b = solve_sigma(p, m_hi)?.sigma;
    let sigmas = Interval::new(a.min(b), a.max(b)).linspace(n_sigma.max(2));
    // dense where |char| is non-negligible, geometric beyond
    let mut xis: Vec<f64> = (0..=1000).map(|i| 0.02 * i as f64).filter(|x| *x <= xi_max).collect();
    let mut x = 20.0;
    while x < xi_max {
        x *= 1.02;
        xis.push(x.min(xi_max));
    }
    let rows = sigmas
        .par_iter()
        .map(|&sigma| {
            let t = TiltedMeasure::new(p, sigma)?;
            let mut sup: f64 = 0.0;
            for &xi in &xis {
                let c = t.measure().char_fn(xi)?;
                sup = sup.max(t.std * xi * c.norm());
            }
            Ok((t.std, t.normalized_abs_moments.clone(), sup))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut abs_moment_max = vec![0.0f64; 6];
    let (mut s_max, mut char_sup) = (0.0f64, 0.0f64);
    for (s, mo, sup) in rows {
        s_max = s_max.max(s);
        char_sup = char_sup.max(sup);
        for (slot, v) in abs_moment_max.iter_mut().zip(mo) {
            *slot = slot.max(v);
        }
    }
    Ok(AssumptionReport {
        sigmas,
        s_max,
        abs_moment_max,
        char_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{cosine_perturbed, gaussian};

    #[test]
    fn gaussian_phi_star() {
        let g = gaussian();
        assert!((phi_star(&g, 0.0).unwrap() - 0.5 * (2.0 * PI).ln()).abs() < 1e-10);
        assert!((phi_star(&g, 1.0).unwrap() - 0.5 - 0.5 * (2.0 * PI).ln()).abs() < 1e-10);
    }

    #[test]
    fn cosine_phi_star_matches_trapezoid() {
        let ld = |x: f64| 0.7 * x - 0.5 * x * x - 1.25 * x.cos();
        let n = 400_000;
        let (a, b) = (-14.0, 16.0);
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (ld(a).exp() + ld(b).exp());
        for i in 1..n {
            s += ld(a + h * i as f64).exp();
        }
        let oracle = (s * h).ln();
        assert!((phi_star(&cosine_perturbed(1.25), 0.7).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn newton_solves() {
        let t = solve_sigma(&gaussian(), 2.0).unwrap();
        assert!((t.sigma - 2.0).abs() < 1e-9 && (t.std - 1.0).abs() < 1e-9);
        let p = cosine_perturbed(1.25);
        let base = TiltedMeasure::new(&p, 0.0).unwrap();
        assert!(solve_sigma(&p, base.mean).unwrap().sigma.abs() < 1e-9);
        let t = solve_sigma(&p, 0.5).unwrap();
        assert!((t.mean - 0.5).abs() < 1e-10);
        // bisection oracle on the same objective
        let (mut lo, mut hi) = (-5.0, 5.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if TiltedMeasure::new(&p, mid).unwrap().mean < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((t.sigma - 0.5 * (lo + hi)).abs() < 1e-8);
    }

    #[test]
    fn gaussian_profile() {
        let grid: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let prof = cramer_profile(&gaussian(), &grid).unwrap();
        for pt in &prof.points {
            assert!((pt.phi_dd - 1.0).abs() < 1e-8);
            assert!((pt.s - 1.0).abs() < 1e-9);
            assert!(pt.s_dm.abs() < 1e-5);
            assert!(pt.dm_dsigma_residual < 1e-4);
        }
        assert!(cramer_profile(&gaussian(), &grid[..5]).is_err());
    }

    #[test]
    fn cosine_profile_identities() {
        let grid: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let prof = cramer_profile(&cosine_perturbed(1.25), &grid).unwrap();
        for w in prof.points.windows(2) {
            assert!(w[1].sigma > w[0].sigma);
        }
        for pt in &prof.points {
            assert!((pt.phi_dd * pt.s * pt.s - 1.0).abs() < 1e-4);
            assert!(pt.dm_dsigma_residual < 1e-4, "{pt:?}");
            assert!(pt.ds2_dsigma_residual < 1e-4, "{pt:?}");
            assert!(pt.s_dm.is_finite() && (pt.s * pt.s_dmm).is_finite());
        }
    }

    #[test]
    fn gaussian_clt_is_exact() {
        for k in [2, 5, 64] {
            let r = clt_density(&gaussian(), 0.3, k).unwrap();
            assert!(r.error < 1e-8, "{r:?}");
        }
        assert!(clt_density(&gaussian(), 0.0, 1).is_err());
    }

    #[test]
    fn clt_matches_direct_convolution_at_k4() {
        let p = cosine_perturbed(1.25);
        let t = TiltedMeasure::new(&p, 0.7).unwrap();
        let r = clt_from_tilted(&t, 4).unwrap();
        // oracle: density of x₁+…+x₄ at 4m by repeated trapezoid convolution
        let h = 0.01;
        let lo = t.mean - 12.0;
        let n = 2401;
        let dens: Vec<f64> = (0..n).map(|i| t.measure().density(lo + h * i as f64)).collect();
        let conv = |a: &[f64], b: &[f64]| {
            let mut out = vec![0.0; a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y * h;
                }
            }
            out
        };
        let d2 = conv(&dens, &dens);
        let d4 = conv(&d2, &d2);
        // grid point of the 4-fold sum: 4·lo + h·idx
        let idx = ((4.0 * t.mean - 4.0 * lo) / h).round() as usize;
        let frac = (4.0 * t.mean - 4.0 * lo) / h - idx as f64;
        let at = d4[idx] + frac * (d4[idx + 1] - d4[idx]);
        let g0 = at * 2.0 * t.std;
        assert!((g0 - r.g0).abs() < 1e-6, "{g0} vs {}", r.g0);
    }

    #[test]
    fn h_expansion_is_stable() {
        let r = clt_density(&cosine_perturbed(1.25), 0.7, 16).unwrap();
        assert!(r.h_expansion_c.is_finite() && r.h_expansion_c < 10.0);
        assert!((r.h_expansion_c - r.h_expansion_c_half).abs() <= 0.5 * r.h_expansion_c);
        assert!(r.decay_witness < 1.0);
    }

    #[test]
    fn hbar2_two_routes_agree() {
        let g = gaussian();
        let (h, dd) = coarse_grained_hamiltonian(&g, 0.4, 2).unwrap();
        assert!((h - (0.08 - 0.25 * (2.0 * PI).ln())).abs() < 1e-9);
        assert!((dd - 1.0).abs() < 1e-6);
        let p = cosine_perturbed(1.25);
        for m in [-1.3, 0.0, 0.8] {
            let via_clt = coarse_grained_hamiltonian(&p, m, 2).unwrap().0;
            let direct = direct_hbar2(&p, m).unwrap();
            assert!((via_clt - direct).abs() < 1e-6, "{m}: {via_clt} vs {direct}");
        }
        assert!((direct_hbar2(&p, 1.1).unwrap() - direct_hbar2(&p, -1.1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn third_moment_derivative_two_ways() {
        let (fd, formula) = third_moment_sigma_derivative(&cosine_perturbed(1.25), 0.7).unwrap();
        assert!((fd - formula).abs() < 1e-3, "{fd} vs {formula}");
    }

    #[test]
    fn symmetric_clt_decays() {
        let c = clt_error_curve(&cosine_perturbed(1.25), 0.0, &[4, 16, 64]).unwrap();
        for w in c.results.windows(2) {
            let ratio = w[1].error / w[0].error;
            assert!(ratio <= 0.5 + 1e-9, "{ratio}");
        }
    }

    #[test]
    fn fifth_absolute_moment_of_strong_tilt() {
        // at σ = −1.5 the tilted cosine measure straddles two wells and
        // ⟨|x̂|⁵⟩ exceeds 12, about twice the Gaussian value 8√(2/π)
        let sigma = -1.5;
        let ld = |x: f64| sigma * x - 0.5 * x * x - 1.25 * x.cos();
        let n = 400_000;
        let (a, b) = (-22.0, 18.0);
        let h = (b - a) / n as f64;
        let xs: Vec<f64> = (0..=n).map(|i| a + h * i as f64).collect();
        let w: Vec<f64> = xs.iter().map(|&x| ld(x).exp()).collect();
        let z: f64 = w.iter().sum();
        let mean = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / z;
        let var = xs.iter().zip(&w).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / z;
        let m5 = xs.iter().zip(&w).map(|(x, w)| ((x - mean).abs() / var.sqrt()).powi(5) * w).sum::<f64>() / z;
        let t = TiltedMeasure::new(&cosine_perturbed(1.25), sigma).unwrap();
        assert!((t.normalized_abs_moments[5] - m5).abs() < 1e-8 * m5, "{} vs {m5}", t.normalized_abs_moments[5]);
        assert!((m5 - 12.609).abs() < 1e-3, "{m5}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]

            #[test]
            fn phi_dd_times_variance_is_one(sigma in -2.0f64..2.0, beta in 0.0f64..1.5) {
                let p = cosine_perturbed(beta);
                let t = TiltedMeasure::new(&p, sigma).unwrap();
                let d = 1e-3 / t.std;
                let up = TiltedMeasure::new(&p, sigma + d).unwrap();
                let dn = TiltedMeasure::new(&p, sigma - d).unwrap();
                // dσ/dm from differences of m, against 1/s²
                let dsigma_dm = 2.0 * d / (up.mean - dn.mean);
                prop_assert!((dsigma_dm * t.std * t.std - 1.0).abs() < 1e-4);
            }

            #[test]
            fn normalized_char_fn_is_bounded(xi in -40.0f64..40.0, sigma in -1.0f64..1.0) {
                let t = TiltedMeasure::new(&cosine_perturbed(1.25), sigma).unwrap();
                prop_assert!(t.normalized_char_fn(xi).unwrap().norm() <= 1.0 + 1e-9);
            }
        }
    }
}
