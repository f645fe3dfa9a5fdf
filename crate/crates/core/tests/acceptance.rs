//! Acceptance gate: thirteen criteria, each printed as one PASS/FAIL line
//! with its measured values and wall time. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renorm_lab::covkernel::{asymmetric_bl_check, covariance_direct, random_family, KernelMeasure, TestFunction};
use renorm_lab::cramer::{assumption_suite, clt_density, clt_error_curve, coarse_grained_hamiltonian, cramer_profile, hbar, solve_sigma};
use renorm_lab::ensemble::{
    be_hs_lower_bound, hierarchy_suite, macro_gradient_identity, marginal_check, CanonicalEnsemble, FieldFunction, HierarchyGrids,
    FIELD_FAMILY,
};
use renorm_lab::potential::{catalog, cosine_perturbed, gaussian};
use renorm_lab::renorm::{convexity_report, iterate, knot_quad_config, renorm_at, renormalize};
use renorm_lab::spectral::{default_nodes, default_spacings, scaling_probe, sg_constant, uniformity_ratio};
use renorm_lab::{Interval, OneDMeasure, Result};

type Outcome = Result<(bool, String)>;

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn c1_gaussian_exactness() -> Outcome {
    let g = gaussian();
    let grid: Vec<f64> = Interval::symmetric(3.0).linspace(13);
    let prof = cramer_profile(&g, &grid)?;
    let phi_dd = prof.points.iter().map(|p| (p.phi_dd - 1.0).abs()).fold(0.0, f64::max);
    let s = prof.points.iter().map(|p| (p.s - 1.0).abs()).fold(0.0, f64::max);
    let tab = renormalize(&g, Interval::symmetric(24.0), 8193)?;
    let mut r_dd: f64 = 0.0;
    for y in Interval::symmetric(3.0).linspace(61) {
        r_dd = r_dd.max((tab.eval(y)?.2 - 2.0).abs());
    }
    let mut h_dd: f64 = 0.0;
    for m in [-2.0, 0.0, 1.5] {
        h_dd = h_dd.max((coarse_grained_hamiltonian(&g, m, 2)?.1 - 1.0).abs());
    }
    let g0 = (clt_density(&g, 0.3, 16)?.g0 - 1.0 / (2.0 * PI).sqrt()).abs();
    let mut sg = Vec::new();
    for n in [2, 3] {
        let e = CanonicalEnsemble::build(&g, n, 0.0, default_nodes(n))?;
        sg.push(sg_constant(&e, &default_spacings(n))?.best());
    }
    let sg_ok = sg.iter().all(|r| (r - 1.0).abs() <= 0.01);
    let ok = phi_dd <= 1e-6 && s <= 1e-6 && r_dd <= 1e-6 && h_dd <= 1e-6 && g0 <= 1e-6 && sg_ok;
    Ok((
        ok,
        format!("|φ″−1|={phi_dd:.1e} |s−1|={s:.1e} |(Rψ)″−2|={r_dd:.1e} |H̄₂″−1|={h_dd:.1e} |g(0)−1/√(2π)|={g0:.1e} ρ₁(N=2,3)={sg:.5?}"),
    ))
}

fn c2_kernel_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [1.0, 0.5, 2.0] {
        let mu = OneDMeasure::normalize(move |x| -0.5 * a * x * x, Interval::REAL_LINE)?;
        worst = worst.max(KernelMeasure::new(mu, move |_| a).kernel_identity_residual()?);
    }
    let tilted = KernelMeasure::tilted(&cosine_perturbed(1.25), 0.7)?.kernel_identity_residual()?;
    worst = worst.max(tilted);
    Ok((worst <= 1e-5, format!("max residual {worst:.2e} (tilted cosine {tilted:.2e})")))
}

fn c3_covariance_equivalence() -> Outcome {
    let measures = [
        KernelMeasure::tilted(&gaussian(), 0.0)?,
        KernelMeasure::tilted(&cosine_perturbed(1.25), 0.7)?,
        KernelMeasure::tilted(&cosine_perturbed(0.5), -1.0)?,
    ];
    let mut worst: f64 = 0.0;
    for (i, (f, g)) in random_family(2024, 30).iter().enumerate() {
        let km = &measures[i % measures.len()];
        let k = km.covariance_kernel(f, g)?;
        let d = covariance_direct(km.measure(), f, g)?;
        worst = worst.max((k - d).abs() / d.abs().max(1e-14));
    }
    Ok((worst <= 1e-6, format!("30 cases, max relative gap {worst:.2e}")))
}

fn c4_asymmetric_bl() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let family = random_family(4, 100);
    let mut held = 0;
    let mut max_ratio: f64 = 0.0;
    for (i, (f, g)) in family.iter().enumerate() {
        let beta = if i % 2 == 0 { 0.5 } else { 1.25 };
        let sigma = rng.gen_range(-1.5..1.5);
        let v = asymmetric_bl_check(&cosine_perturbed(beta), sigma, f, g)?;
        held += v.holds as usize;
        max_ratio = max_ratio.max(v.ratio);
    }
    let x = TestFunction::identity();
    let tight = asymmetric_bl_check(&gaussian(), 0.0, &x, &x)?;
    let ok = held == 100 && (tight.ratio - 1.0).abs() <= 1e-6;
    Ok((ok, format!("{held}/100 hold, max lhs/rhs {max_ratio:.3}; Gaussian lhs/rhs {:.9}", tight.ratio)))
}

fn c5_coarse_graining_equivalence() -> Outcome {
    let cfg = knot_quad_config();
    let mut worst: f64 = 0.0;
    for p in [gaussian(), cosine_perturbed(1.25)] {
        let mut seed = 0.0;
        for m in Interval::symmetric(3.0).linspace(25) {
            let (h, t) = hbar(&p, m, 2, seed)?;
            seed = t.sigma;
            let r = renorm_at(&p, m, &cfg)?.0;
            worst = worst.max((r - 2.0 * h - 0.5 * 2f64.ln()).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max |Rψ − 2H̄₂ − ½log2| = {worst:.2e} over 25 m-points, two potentials")))
}

fn c6_convexification() -> Outcome {
    let p = cosine_perturbed(1.25);
    let window = Interval::symmetric(3.0);
    let base = convexity_report(&p, window)?.min_d2;
    let gens = iterate(&p, 6, Interval::symmetric(24.0), 8193)?;
    let mins: Vec<f64> = gens
        .iter()
        .map(|t| convexity_report(t, window).map(|r| r.min_d2))
        .collect::<Result<_>>()?;
    let first = (0..5).find(|&k| mins[k] > 0.0 && mins[k + 1] > 0.0);
    let detail = format!("min ψ″ = {base:.3}; min (R^Mψ)″, M=1..6: {mins:.3?}");
    Ok(match first {
        Some(k) => (true, format!("{detail}; convex from M = {}", k + 1)),
        None => (false, detail),
    })
}

fn c7_clt_rate() -> Outcome {
    let c = clt_error_curve(&cosine_perturbed(1.25), 0.7, &[4, 16, 64, 256])?;
    let e: Vec<f64> = c.results.iter().map(|r| r.error).collect();
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let scaled: Vec<f64> = c.results.iter().map(|r| r.error * (r.k as f64).sqrt()).collect();
    Ok((decreasing && c.scaled_bound_holds, format!("e_K = [{}], e_K√K = [{}]", sci(&e), sci(&scaled))))
}

fn c8_convexification_rate() -> Outcome {
    let p = cosine_perturbed(1.25);
    let mut ratios = Vec::new();
    for m in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let t = solve_sigma(&p, m)?;
        let s2 = t.std * t.std;
        let mut q = Vec::new();
        for k in [2, 4, 8, 16] {
            let dd = coarse_grained_hamiltonian(&p, m, k)?.1;
            q.push(k as f64 * s2 * (1.0 / s2 - dd).abs());
        }
        let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = q.iter().cloned().fold(f64::INFINITY, f64::min);
        ratios.push(max / min);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    Ok((worst <= 10.0, format!("max/min of K·s²·|φ″ − H̄_K″| per m: {ratios:.2?}")))
}

fn c9_hierarchy() -> Outcome {
    let p = cosine_perturbed(1.25);
    let grids = HierarchyGrids::default();
    let (mut ent, mut prod, mut pyth, mut mac): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for name in FIELD_FAMILY {
        let f = FieldFunction::by_name(name)?;
        let r = hierarchy_suite(&p, 0.3, &f, &grids)?;
        ent = ent.max(r.entropy_residual);
        prod = prod.max(r.product_residual);
        pyth = pyth.max(r.pythagoras_residual);
        for y in [[0.3, 0.3], [0.8, -0.2], [-1.1, 1.7]] {
            mac = mac.max(macro_gradient_identity(&p, y, &f)?);
        }
    }
    let ok = ent <= 1e-6 && prod <= 1e-8 && pyth <= 1e-12 && mac <= 1e-4;
    Ok((
        ok,
        format!("entropy {ent:.1e}, product {prod:.1e}, Pythagoras {pyth:.1e}, macro-gradient {mac:.1e}"),
    ))
}

fn c10_marginal() -> Outcome {
    let mut rows = Vec::new();
    let mut ok = true;
    for p in [gaussian(), cosine_perturbed(1.25)] {
        let tab = renormalize(&p, Interval::symmetric(24.0), 8193)?;
        for m in [0.0, 0.5] {
            let err = marginal_check(&p, m, &tab)?;
            ok &= err <= 1e-3;
            rows.push(format!("{} m={m}: {err:.1e}", p.label()));
        }
    }
    Ok((ok, rows.join(", ")))
}

fn c11_barthe_wolff() -> Outcome {
    let bw = catalog("barthe-wolff", &Default::default())?;
    let target = PI * PI / 8.0;
    let mut vals = Vec::new();
    for m in [0.5, 1.0, 2.0, 4.0] {
        let e = CanonicalEnsemble::build(&bw, 2, m, default_nodes(2))?;
        vals.push(sg_constant(&e, &default_spacings(2))?.best() * m * m);
    }
    let ok = vals.iter().all(|v| (v / target - 1.0).abs() <= 0.02);
    Ok((ok, format!("ρ₁m² = {vals:.5?} vs π²/8 = {target:.5}")))
}

fn c12_uniformity() -> Outcome {
    let p = cosine_perturbed(1.25);
    let rows = scaling_probe(&p, &[2, 3, 4], &[-2.0, -1.0, 0.0, 1.0, 2.0])?;
    let ratio = uniformity_ratio(&rows);
    let mut above = true;
    for r in &rows {
        above &= r.rho1 >= be_hs_lower_bound(&p, r.n)?;
    }
    let min = rows.iter().min_by(|a, b| a.rho1.total_cmp(&b.rho1)).unwrap();
    let max = rows.iter().max_by(|a, b| a.rho1.total_cmp(&b.rho1)).unwrap();
    Ok((
        ratio <= 3.0 && above,
        format!(
            "max/min ρ₁ = {ratio:.3} (max {:.4} at N={} m={}, min {:.4} at N={} m={}); all above c₀e^(−N·osc): {above}",
            max.rho1, max.n, max.m, min.rho1, min.n, min.m
        ),
    ))
}

fn c13_assumptions() -> Outcome {
    let r = assumption_suite(&cosine_perturbed(1.25), -3.0, 3.0, 61, 200.0)?;
    let moments_ok = r.abs_moment_max.iter().all(|v| *v <= 10.0);
    let ok = r.s_max <= 2.0 && moments_ok && r.char_sup <= 10.0;
    Ok((
        ok,
        format!(
            "s_max={:.3}, max⟨|x̂|^k⟩ k=0..5: {:.3?}, sup|sξ·char|={:.3}",
            r.s_max, r.abs_moment_max, r.char_sup
        ),
    ))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 13] = [
        ("Gaussian exactness", 5, c1_gaussian_exactness),
        ("kernel identity", 10, c2_kernel_identity),
        ("covariance equivalence", 30, c3_covariance_equivalence),
        ("asymmetric Brascamp–Lieb", 60, c4_asymmetric_bl),
        ("coarse-graining equivalence", 20, c5_coarse_graining_equivalence),
        ("convexification", 180, c6_convexification),
        ("local CLT rate", 60, c7_clt_rate),
        ("convexification rate", 180, c8_convexification_rate),
        ("hierarchic identities N=4", 300, c9_hierarchy),
        ("marginal = renormalized ensemble", 300, c10_marginal),
        ("Barthe–Wolff scaling", 60, c11_barthe_wolff),
        ("uniformity in N and m", 900, c12_uniformity),
        ("assumption suite", 60, c13_assumptions),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (ok, detail) = match outcome {
            Ok(Ok((ok, detail))) => (ok, detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        let pass = ok && in_time;
        failures += (!pass) as usize;
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.1} s / {budget} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
