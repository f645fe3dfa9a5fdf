//! Quadrature primitives: Gauss–Legendre rules, composite panel tables with
//! spectral integration matrices, and adaptive Gauss–Kronrod (7/15).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn legendre_values(kmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; kmax + 1];
    p[0] = 1.0;
    if kmax >= 1 {
        p[1] = x;
    }
    for k in 2..=kmax {
        p[k] = ((2 * k - 1) as f64 * x * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    p
}

/// A Gauss–Legendre rule on `[-1, 1]` together with its indefinite
/// integration matrix `S[i][j] = ∫_{-1}^{t_i} ℓ_j(t) dt`.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub integration: Vec<Vec<f64>>,
}

impl PanelRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        let n = order;
        let p_at: Vec<Vec<f64>> = nodes.iter().map(|&t| legendre_values(n, t)).collect();
        let mut integration = vec![vec![0.0; n]; n];
        for i in 0..n {
            let pi = &p_at[i];
            for j in 0..n {
                let pj = &p_at[j];
                let mut acc = 0.5 * (nodes[i] + 1.0);
                for k in 1..n {
                    acc += 0.5 * pj[k] * (pi[k + 1] - pi[k - 1]);
                }
                integration[i][j] = weights[j] * acc;
            }
        }
        PanelRule {
            nodes,
            weights,
            integration,
        }
    }
}

/// Composite Gauss–Legendre table on `[a, b]` split into equal panels.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub a: f64,
    pub b: f64,
    pub panels: usize,
    pub order: usize,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, rule: &PanelRule) -> Self {
        let order = rule.nodes.len();
        let h = (b - a) / panels as f64;
        let mut x = Vec::with_capacity(panels * order);
        let mut w = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let left = a + h * p as f64;
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                x.push(left + 0.5 * h * (t + 1.0));
                w.push(0.5 * h * wt);
            }
        }
        CompositeRule {
            a,
            b,
            panels,
            order,
            x,
            w,
        }
    }

    pub fn panel_width(&self) -> f64 {
        (self.b - self.a) / self.panels as f64
    }

    /// Running integral `∫_a^{x_i} g` at every node, given samples `g(x_i)`.
    pub fn cumulative(&self, rule: &PanelRule, samples: &[f64]) -> Vec<f64> {
        let h = self.panel_width();
        let mut out = vec![0.0; samples.len()];
        let mut base = 0.0;
        for p in 0..self.panels {
            let off = p * self.order;
            let seg = &samples[off..off + self.order];
            for i in 0..self.order {
                let s: f64 = rule.integration[i]
                    .iter()
                    .zip(seg)
                    .map(|(m, g)| m * g)
                    .sum();
                out[off + i] = base + 0.5 * h * s;
            }
            base += seg
                .iter()
                .zip(&self.w[off..off + self.order])
                .map(|(g, w)| g * w)
                .sum::<f64>();
        }
        out
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel: (integral, error estimate).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kron * h;
    let resabs = abs_sum * h.abs();
    let resasc = asc * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOutcome {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

impl Adaptive {
    /// Integrates `f` over `[a, b]`, starting from `initial` equal panels and
    /// bisecting the worst panel until the global error target is met.
    /// Features narrower than the initial panels' node spacing go unseen.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, initial: usize) -> AdaptiveOutcome {
        let initial = initial.max(1);
        let h = (b - a) / initial as f64;
        let mut heap = BinaryHeap::with_capacity(initial * 4);
        let (mut total, mut err) = (0.0, 0.0);
        for i in 0..initial {
            let lo = a + h * i as f64;
            let hi = if i + 1 == initial { b } else { lo + h };
            let (v, e) = gk15(f, lo, hi);
            total += v;
            err += e;
            heap.push(Piece { a: lo, b: hi, value: v, error: e });
        }
        let mut panels = initial;
        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.abs());
            if err <= tol {
                return AdaptiveOutcome { value: total, error: err, panels, converged: true };
            }
            if panels >= self.max_panels {
                return AdaptiveOutcome { value: total, error: err, panels, converged: false };
            }
            let worst = heap.pop().expect("heap never empty");
            let mid = 0.5 * (worst.a + worst.b);
            let (v1, e1) = gk15(f, worst.a, mid);
            let (v2, e2) = gk15(f, mid, worst.b);
            total += v1 + v2 - worst.value;
            err += e1 + e2 - worst.error;
            heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
            heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
            panels += 1;
        }
    }
}

/// Plain Gauss–Legendre integral of `f` over `[a, b]` with a given rule.
pub fn fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: &PanelRule) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * f(c + h * t))
        .sum::<f64>()
        * h
}
