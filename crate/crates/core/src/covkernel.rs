//! Kernel representation of one-dimensional covariances,
//! `cov_μ(f, g) = ∫∫ f'(x) K_μ(x, y) g'(y) dx dy` with
//! `K_μ(x, y) = M_μ(min(x, y)) (1 − M_μ)(max(x, y))`, and the Brascamp–Lieb
//! type inequalities built on it.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure1d::{OneDMeasure, QuadConfig};
use crate::potential::{validate_splitting, PotentialSpec, SingleSite};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A differentiable test function with its derivative.
#[derive(Clone)]
pub struct TestFunction {
    pub label: String,
    f: RealFn,
    df: RealFn,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({})", self.label)
    }
}

impl TestFunction {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            label: label.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    pub fn identity() -> Self {
        TestFunction::new("x", |x| x, |_| 1.0)
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::new(format!("{c}"), move |_| c, |_| 0.0)
    }

    /// `Σ c_k x^k`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let label = format!("poly{coeffs:?}");
        let c1 = coeffs.clone();
        TestFunction::new(
            label,
            move |x| c1.iter().rev().fold(0.0, |acc, c| acc * x + c),
            move |x| {
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
            },
        )
    }

    pub fn tanh(a: f64, b: f64) -> Self {
        TestFunction::new(
            format!("tanh({a}x+{b})"),
            move |x| (a * x + b).tanh(),
            move |x| {
                let c = (a * x + b).cosh();
                a / (c * c)
            },
        )
    }

    pub fn sin() -> Self {
        TestFunction::new("sin", f64::sin, f64::cos)
    }
}

/// Random pairs `(f, g)` with `f` a polynomial of degree ≤ 3 and
/// `g = tanh(ax + b)`, reproducible from `seed`.
pub fn random_family(seed: u64, count: usize) -> Vec<(TestFunction, TestFunction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let deg = rng.gen_range(1..=3);
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let b = rng.gen_range(-2.0..2.0);
            (TestFunction::polynomial(coeffs), TestFunction::tanh(a, b))
        })
        .collect()
}

/// `∫ f g dμ − ∫ f dμ ∫ g dμ` by direct quadrature (two passes).
pub fn covariance_direct(mu: &OneDMeasure, f: &TestFunction, g: &TestFunction) -> Result<f64> {
    let ef = mu.expect(|x| f.value(x));
    let eg = mu.expect(|x| g.value(x));
    let c = mu.expect(|x| (f.value(x) - ef) * (g.value(x) - eg));
    if !c.is_finite() {
        return Err(Error::NonIntegrable(format!("cov({}, {})", f.label, g.label)));
    }
    Ok(c)
}

/// Inequality verdict shared by the Brascamp–Lieb style checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlVerdict {
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
}

impl BlVerdict {
    fn new(case: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        BlVerdict {
            case: case.into(),
            lhs,
            rhs,
            ratio,
            holds: lhs <= rhs * (1.0 + 1e-9),
        }
    }
}

/// A one-dimensional Gibbs measure together with the curvature `H''` of its
/// Hamiltonian.
#[derive(Clone)]
pub struct KernelMeasure {
    measure: OneDMeasure,
    hamiltonian_dd: RealFn,
}

impl KernelMeasure {
    pub fn new(measure: OneDMeasure, hamiltonian_dd: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        KernelMeasure {
            measure,
            hamiltonian_dd: Arc::new(hamiltonian_dd),
        }
    }

    /// `ν^σ(dx) ∝ exp(σx − ψ(x)) dx` with `H'' = ψ''`.
    pub fn tilted(p: &PotentialSpec, sigma: f64) -> Result<Self> {
        let q = p.clone();
        let measure = OneDMeasure::normalize_with(
            Arc::new(move |x| sigma * x - q.value(x)),
            p.support(),
            QuadConfig::default(),
        )?;
        let q = p.clone();
        Ok(KernelMeasure::new(measure, move |x| {
            q.eval(x).map(|v| v.2).unwrap_or(f64::NAN)
        }))
    }

    pub fn measure(&self) -> &OneDMeasure {
        &self.measure
    }

    pub fn hamiltonian_dd(&self, x: f64) -> f64 {
        (self.hamiltonian_dd)(x)
    }

    /// `M_μ(min(x,y)) · (1 − M_μ)(max(x,y))`.
    pub fn kernel_eval(&self, x: f64, y: f64) -> f64 {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        self.measure.cdf(a) * self.measure.survival(b)
    }

    /// Running integrals `A_i = ∫_{lo}^{x_i} M h` and `B_i = ∫_{x_i}^{hi} (1−M) h`
    /// at the table nodes, each accumulated from its own end.
    fn sweep(&self, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mu = &self.measure;
        let table = mu.table();
        let rule = mu.panel_rule();
        let m = mu.node_cdf();
        let t = mu.node_tail();
        let left: Vec<f64> = m.iter().zip(h).map(|(a, b)| a * b).collect();
        let right: Vec<f64> = t.iter().zip(h).map(|(a, b)| a * b).collect();
        let a = table.cumulative(rule, &left);
        let order = table.order;
        let within = table.cumulative(rule, &right);
        let mut panel_total = vec![0.0; table.panels];
        for p in 0..table.panels {
            let r = p * order..(p + 1) * order;
            panel_total[p] = right[r.clone()].iter().zip(&table.w[r]).map(|(v, w)| v * w).sum();
        }
        let mut after = vec![0.0; table.panels + 1];
        for p in (0..table.panels).rev() {
            after[p] = after[p + 1] + panel_total[p];
        }
        let mut b = vec![0.0; h.len()];
        let mut edge = 0.0;
        for p in 0..table.panels {
            for i in 0..order {
                let k = p * order + i;
                let inside = within[k] - edge;
                b[k] = after[p + 1] + (panel_total[p] - inside);
            }
            edge += panel_total[p];
        }
        (a, b)
    }

    /// `∫∫ f'(x) K_μ(x,y) g'(y) dx dy`, through the separable form
    /// `∫ f'(x) [(1−M)(x) ∫_{y<x} M g' + M(x) ∫_{y>x} (1−M) g'] dx`.
    pub fn covariance_kernel(&self, f: &TestFunction, g: &TestFunction) -> Result<f64> {
        let mu = &self.measure;
        let x = mu.node_points();
        let gp: Vec<f64> = x.iter().map(|&v| g.deriv(v)).collect();
        let (a, b) = self.sweep(&gp);
        let m = mu.node_cdf();
        let t = mu.node_tail();
        let w = mu.node_lebesgue_weights();
        let mut total = 0.0;
        for i in 0..x.len() {
            let inner = t[i] * a[i] + m[i] * b[i];
            total += w[i] * f.deriv(x[i]) * inner;
        }
        if !total.is_finite() {
            return Err(Error::NonIntegrable(format!("kernel cov({}, {})", f.label, g.label)));
        }
        Ok(total)
    }

    /// `sup_x |∫ K_μ(x,y) H''(y) dy − μ(x)| / max μ` over 64 probes spread
    /// over the central quantile range.
    pub fn kernel_identity_residual(&self) -> Result<f64> {
        let mu = &self.measure;
        let x = mu.node_points();
        let hdd: Vec<f64> = x.iter().map(|&v| self.hamiltonian_dd(v)).collect();
        if hdd.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonIntegrable("H'' not finite on the window".into()));
        }
        let (a, b) = self.sweep(&hdd);
        let m = mu.node_cdf();
        let t = mu.node_tail();
        let dens = mu.node_density();
        let max_density = dens.iter().cloned().fold(0.0, f64::max);
        // probe the nodes whose CDF values are closest to 64 evenly spaced quantiles
        let mut worst: f64 = 0.0;
        for k in 0..64 {
            let q = 1e-4 + (1.0 - 2e-4) * k as f64 / 63.0;
            let i = m.partition_point(|v| *v < q).min(x.len() - 1);
            let lhs = t[i] * a[i] + m[i] * b[i];
            worst = worst.max((lhs - dens[i]).abs());
        }
        Ok(worst / max_density)
    }

    /// `var_μ(f) ≤ ∫ |f'|² / H'' dμ`.
    pub fn classical_bl_check(&self, f: &TestFunction) -> Result<BlVerdict> {
        let mu = &self.measure;
        for &x in mu.node_points() {
            let h = self.hamiltonian_dd(x);
            if !(h > 0.0) {
                return Err(Error::NonConvexHamiltonian { x, value: h });
            }
        }
        let var = covariance_direct(mu, f, f)?;
        let bound = mu.expect(|x| {
            let d = f.deriv(x);
            d * d / self.hamiltonian_dd(x)
        });
        Ok(BlVerdict::new(format!("classical-bl:{}", f.label), var, bound))
    }
}

/// Asymmetric Brascamp–Lieb inequality for `ν ∝ exp(σx − ψ)`:
/// `|cov_ν(f,g)| ≤ exp(3 osc δψ) · sup |g'/ψ_c''| · ∫ |f'| dν`,
/// with `osc δψ` and the supremum taken over the measure's window.
pub fn asymmetric_bl_check(p: &PotentialSpec, sigma: f64, f: &TestFunction, g: &TestFunction) -> Result<BlVerdict> {
    p.require_admissible()?;
    let km = KernelMeasure::tilted(p, sigma)?;
    let mu = km.measure();
    let window = mu.window();
    let split = validate_splitting(p, window, 4096)?;
    let lhs = covariance_direct(mu, f, g)?.abs();
    let mut sup_ratio: f64 = 0.0;
    for x in window.linspace(4097).into_iter().chain(mu.node_points().iter().copied()) {
        let c2 = p.convex_part(x)[2];
        sup_ratio = sup_ratio.max((g.deriv(x) / c2).abs());
    }
    let l1 = mu.expect(|x| f.deriv(x).abs());
    let rhs = (3.0 * split.osc_delta).exp() * sup_ratio * l1;
    Ok(BlVerdict::new(
        format!("asymmetric-bl:{}:sigma={sigma}:{}:{}", p.label(), f.label, g.label),
        lhs,
        rhs,
    ))
}

/// Csiszár–Kullback–Pinsker comparison with the constant √2:
/// `∫ |f − f̄| dμ ≤ f̄ · √(2 ∫ (f/f̄) log(f/f̄) dμ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkpVerdict {
    pub l1: f64,
    pub entropy_bound: f64,
    pub holds: bool,
}

pub fn ckp_check(mu: &OneDMeasure, f: &TestFunction) -> Result<CkpVerdict> {
    for &x in mu.node_points() {
        let v = f.value(x);
        if v < 0.0 {
            return Err(Error::NegativeFunction { x, value: v });
        }
    }
    let mean = mu.expect(|x| f.value(x));
    if !(mean > 0.0) {
        return Err(Error::NonPositiveFunction);
    }
    let l1 = mu.expect(|x| (f.value(x) - mean).abs());
    let ent = mu
        .expect(|x| {
            let r = f.value(x) / mean;
            if r > 0.0 {
                r * r.ln()
            } else {
                0.0
            }
        })
        .max(0.0);
    let entropy_bound = mean * (2.0 * ent).sqrt();
    Ok(CkpVerdict {
        l1,
        entropy_bound,
        holds: l1 <= entropy_bound * (1.0 + 1e-9) + 1e-14 * mean,
    })
}
