//! Single-site potentials `ψ = ψ_c + δψ` with a strictly convex part and a
//! bounded perturbation, plus a small catalog of named instances.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Step for the central difference of `δψ'` when `δψ''` is not supplied.
pub const PERTURBATION_FD_STEP: f64 = 1e-4;

/// Anything that can serve as a single-site potential inside a Gibbs
/// integral: analytic specs and tabulated renormalized potentials.
pub trait SingleSite: Send + Sync {
    /// `ψ(x)`; `+∞` outside the support.
    fn value(&self, x: f64) -> f64;
    fn support(&self) -> Interval;
    /// `(ψ, ψ', ψ'')` at an interior point.
    fn derivatives(&self, x: f64) -> Result<(f64, f64, f64)>;
}

type ConvexFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;
type PerturbFn = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;
type CurvatureFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A potential with an explicit splitting. Immutable once built.
#[derive(Clone)]
pub struct PotentialSpec {
    label: String,
    params: BTreeMap<String, f64>,
    convex: ConvexFn,
    perturbation: PerturbFn,
    perturbation_dd: Option<CurvatureFn>,
    support: Interval,
    renormalizable: bool,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("label", &self.label)
            .field("params", &self.params)
            .field("support", &self.support)
            .field("renormalizable", &self.renormalizable)
            .finish()
    }
}

impl PotentialSpec {
    /// `convex` returns `[ψ_c, ψ_c', ψ_c'']`, `perturbation` returns `[δψ, δψ']`.
    pub fn new(
        label: impl Into<String>,
        convex: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
        perturbation: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        PotentialSpec {
            label: label.into(),
            params: BTreeMap::new(),
            convex: Arc::new(convex),
            perturbation: Arc::new(perturbation),
            perturbation_dd: None,
            support: Interval::REAL_LINE,
            renormalizable: true,
        }
    }

    pub fn with_perturbation_curvature(mut self, dd: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.perturbation_dd = Some(Arc::new(dd));
        self
    }

    pub fn with_support(mut self, support: Interval) -> Self {
        self.support = support;
        self
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    fn not_renormalizable(mut self) -> Self {
        self.renormalizable = false;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_renormalizable(&self) -> bool {
        self.renormalizable
    }

    pub fn convex_part(&self, x: f64) -> [f64; 3] {
        (self.convex)(x)
    }

    pub fn perturbation(&self, x: f64) -> [f64; 2] {
        (self.perturbation)(x)
    }

    /// `δψ''`, analytic when supplied, otherwise a central difference of `δψ'`.
    pub fn perturbation_curvature(&self, x: f64) -> f64 {
        match &self.perturbation_dd {
            Some(dd) => dd(x),
            None => {
                let h = PERTURBATION_FD_STEP;
                ((self.perturbation)(x + h)[1] - (self.perturbation)(x - h)[1]) / (2.0 * h)
            }
        }
    }

    /// `(ψ, ψ', ψ'')` at `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        if !self.support.contains_interior(x) {
            return Err(Error::OutOfSupport {
                x,
                lo: self.support.lo,
                hi: self.support.hi,
            });
        }
        let [c, c1, c2] = (self.convex)(x);
        let [d, d1] = (self.perturbation)(x);
        Ok((c + d, c1 + d1, c2 + self.perturbation_curvature(x)))
    }

    /// Same potential with only the convex part (`δψ ≡ 0`).
    pub fn convex_only(&self) -> PotentialSpec {
        PotentialSpec {
            label: format!("{}:convex", self.label),
            params: self.params.clone(),
            convex: self.convex.clone(),
            perturbation: Arc::new(|_| [0.0, 0.0]),
            perturbation_dd: Some(Arc::new(|_| 0.0)),
            support: self.support,
            renormalizable: self.renormalizable,
        }
    }

    /// Requires the potential to belong to the perturbed strictly convex class.
    pub fn require_admissible(&self) -> Result<()> {
        if !self.renormalizable {
            return Err(Error::NonAdmissible(self.label.clone()));
        }
        Ok(())
    }
}

impl SingleSite for PotentialSpec {
    fn value(&self, x: f64) -> f64 {
        if !self.support.contains_interior(x) {
            return f64::INFINITY;
        }
        (self.convex)(x)[0] + (self.perturbation)(x)[0]
    }

    fn support(&self) -> Interval {
        self.support
    }

    fn derivatives(&self, x: f64) -> Result<(f64, f64, f64)> {
        self.eval(x)
    }
}

/// Names accepted by [`catalog`].
pub const CATALOG: [&str; 4] = ["gaussian", "cosine-perturbed", "quartic-plus-cosine", "barthe-wolff"];

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> Result<f64> {
    let v = params.get(key).copied().unwrap_or(default);
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{key} = {v}")));
    }
    Ok(v)
}

/// Builds a named potential.
///
/// * `gaussian {a = 1}`: `ψ_c = a x²/2`, `δψ = 0`
/// * `cosine-perturbed {beta = 1.25}`: `ψ_c = x²/2`, `δψ = β cos x`
/// * `quartic-plus-cosine {beta = 1.25}`: `ψ_c = x⁴/4 + x²/2`, `δψ = β cos x`
/// * `barthe-wolff`: `ψ = x` on `(0, ∞)`; rejected by renormalization
pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<PotentialSpec> {
    let spec = match name {
        "gaussian" => {
            let a = param(params, "a", 1.0)?;
            if a <= 0.0 {
                return Err(Error::InvalidParameter(format!("a = {a} must be positive")));
            }
            PotentialSpec::new(name, move |x| [0.5 * a * x * x, a * x, a], |_| [0.0, 0.0])
                .with_perturbation_curvature(|_| 0.0)
        }
        "cosine-perturbed" => {
            let beta = param(params, "beta", 1.25)?;
            PotentialSpec::new(
                name,
                |x| [0.5 * x * x, x, 1.0],
                move |x| [beta * x.cos(), -beta * x.sin()],
            )
            .with_perturbation_curvature(move |x| -beta * x.cos())
        }
        "quartic-plus-cosine" => {
            let beta = param(params, "beta", 1.25)?;
            PotentialSpec::new(
                name,
                |x| {
                    let x2 = x * x;
                    [0.25 * x2 * x2 + 0.5 * x2, x2 * x + x, 3.0 * x2 + 1.0]
                },
                move |x| [beta * x.cos(), -beta * x.sin()],
            )
            .with_perturbation_curvature(move |x| -beta * x.cos())
        }
        "barthe-wolff" => PotentialSpec::new(name, |x| [x, 1.0, 0.0], |_| [0.0, 0.0])
            .with_perturbation_curvature(|_| 0.0)
            .with_support(Interval::new(0.0, f64::INFINITY))
            .not_renormalizable(),
        other => return Err(Error::UnknownPotential(other.to_string())),
    };
    Ok(spec.with_params(params.clone()))
}

/// Convenience: catalog entry with a single `beta` parameter.
pub fn cosine_perturbed(beta: f64) -> PotentialSpec {
    let mut params = BTreeMap::new();
    params.insert("beta".to_string(), beta);
    catalog("cosine-perturbed", &params).expect("finite beta")
}

pub fn gaussian() -> PotentialSpec {
    catalog("gaussian", &BTreeMap::new()).expect("catalog entry")
}

/// Observed splitting constants on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    pub c0_observed: f64,
    pub b0_observed: f64,
    pub b1_observed: f64,
    pub osc_delta: f64,
    pub grid_window: Interval,
    pub admissible: bool,
}

pub fn validate_splitting(p: &PotentialSpec, window: Interval, n: usize) -> Result<SplittingReport> {
    if n < 64 {
        return Err(Error::InvalidParameter(format!("grid of {n} points, need >= 64")));
    }
    let sup = p.support();
    if !window.is_finite() || window.lo < sup.lo || window.hi > sup.hi {
        return Err(Error::OutOfSupport {
            x: if window.lo < sup.lo { window.lo } else { window.hi },
            lo: sup.lo,
            hi: sup.hi,
        });
    }
    let mut c0 = f64::INFINITY;
    let mut b0 = 0.0f64;
    let mut b1 = 0.0f64;
    let mut dmin = f64::INFINITY;
    let mut dmax = f64::NEG_INFINITY;
    for x in window.linspace(n) {
        let [_, _, c2] = p.convex_part(x);
        let [d, d1] = p.perturbation(x);
        c0 = c0.min(c2);
        b0 = b0.max(d.abs());
        b1 = b1.max(d1.abs());
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    let admissible = c0 > 0.0 && b0.is_finite() && b1.is_finite();
    Ok(SplittingReport {
        c0_observed: c0,
        b0_observed: b0,
        b1_observed: b1,
        osc_delta: dmax - dmin,
        grid_window: window,
        admissible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eval_gaussian_at_origin() {
        assert_eq!(gaussian().eval(0.0).unwrap(), (0.0, 0.0, 1.0));
    }

    #[test]
    fn eval_cosine_perturbed() {
        let p = cosine_perturbed(1.25);
        assert_eq!(p.eval(0.0).unwrap(), (1.25, 0.0, -0.25));
        let (v, d1, d2) = p.eval(PI).unwrap();
        assert!((v - (PI * PI / 2.0 - 1.25)).abs() < 1e-14);
        assert!((d1 - PI).abs() < 1e-14);
        assert!((d2 - 2.25).abs() < 1e-14);
    }

    #[test]
    fn finite_difference_curvature_matches_analytic() {
        let p = PotentialSpec::new("fd", |x| [0.5 * x * x, x, 1.0], |x| [1.25 * x.cos(), -1.25 * x.sin()]);
        for x in [-2.0, 0.0, 0.3, PI] {
            let (_, _, d2) = p.eval(x).unwrap();
            assert!((d2 - (1.0 - 1.25 * f64::cos(x))).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn barthe_wolff_support_and_flags() {
        let p = catalog("barthe-wolff", &BTreeMap::new()).unwrap();
        assert_eq!(p.eval(2.5).unwrap().0, 2.5);
        assert!(matches!(p.eval(-1.0), Err(Error::OutOfSupport { .. })));
        assert!(p.value(-1.0).is_infinite());
        assert!(!p.is_renormalizable());
        let r = validate_splitting(&p, Interval::new(0.1, 10.0), 128).unwrap();
        assert!(!r.admissible);
        assert_eq!(r.c0_observed, 0.0);
    }

    #[test]
    fn unknown_potential_is_rejected() {
        assert!(matches!(catalog("lennard-jones", &BTreeMap::new()), Err(Error::UnknownPotential(_))));
    }

    #[test]
    fn splitting_report_gaussian_and_cosine() {
        let w = Interval::symmetric(6.0);
        let g = validate_splitting(&gaussian(), w, 257).unwrap();
        assert_eq!((g.c0_observed, g.b0_observed, g.b1_observed, g.osc_delta), (1.0, 0.0, 0.0, 0.0));
        assert!(g.admissible);

        // grid of 1201 points over [-6, 6] contains 0, ±π (step 0.01) only approximately
        let c = validate_splitting(&cosine_perturbed(1.25), w, 1201).unwrap();
        assert_eq!(c.c0_observed, 1.0);
        assert!((c.b0_observed - 1.25).abs() < 1e-12);
        assert!((c.b1_observed - 1.25).abs() < 1e-4);
        assert!((c.osc_delta - 2.5).abs() < 1e-4);
        assert!(c.osc_delta <= 2.0 * c.b0_observed);
        assert!(c.admissible);
    }

    #[test]
    fn small_grids_and_windows_outside_support_error() {
        assert!(validate_splitting(&gaussian(), Interval::symmetric(1.0), 10).is_err());
        let bw = catalog("barthe-wolff", &BTreeMap::new()).unwrap();
        assert!(matches!(
            validate_splitting(&bw, Interval::new(-1.0, 1.0), 100),
            Err(Error::OutOfSupport { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn eval_value_is_sum_of_parts(x in -20.0f64..20.0, beta in 0.0f64..3.0) {
                let p = cosine_perturbed(beta);
                let (v, _, _) = p.eval(x).unwrap();
                prop_assert_eq!(v, p.convex_part(x)[0] + p.perturbation(x)[0]);
            }

            #[test]
            fn enlarging_window_never_decreases_oscillation(a in 0.1f64..5.0, extra in 0.0f64..5.0) {
                let p = cosine_perturbed(1.25);
                let small = validate_splitting(&p, Interval::symmetric(a), 512).unwrap();
                let big = validate_splitting(&p, Interval::symmetric(a + extra), 512).unwrap();
                // extrema of cos are quadratic, so grid resolution costs at most β·h²/2
                let h = 2.0 * (a + extra) / 511.0;
                prop_assert!(big.osc_delta + 1.25 * h * h >= small.osc_delta);
            }
        }
    }
}
