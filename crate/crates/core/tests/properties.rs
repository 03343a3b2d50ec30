//! Cross-module invariants and the heavier Monte Carlo / Simpson
//! oracles that don't belong next to any single module.

mod common;

use approx::assert_relative_eq;
use distdelay::channel::{sample_channel_gain, trial_rng, wishart_pdf, ChannelSpec};
use distdelay::distortion::{
    d_delay_siso, d_infinite, d_zero, ergodic_capacity, log_det_moment,
};
use distdelay::effcap::{effective_capacity_mc_detailed, effective_capacity_quadrature, QosSpec};
use distdelay::specfun::{gamma, laguerre_rule, tricomi_psi};
use proptest::prelude::*;

const RHO_15DB: f64 = 31.622_776_601_683_793;

// ---------------------------------------------------------------------------
// Tricomi Ψ against the GR 3.383.5 integral identity
// ---------------------------------------------------------------------------

/// ∫₀^∞ e^{-px} x^{q-1} (1+ax)^{-v} dx = a^{-q} Γ(q) Ψ(q, q+1-v; p/a)
fn gr_3383_5_left(p: f64, q: f64, v: f64, a: f64) -> f64 {
    common::semi_infinite_oracle(&|x: f64| (-p * x).exp() * x.powf(q - 1.0) * (1.0 + a * x).powf(-v), 90.0)
}

#[test]
fn tricomi_psi_direct_integral_check() {
    // q = 1, v = 0.5, a = 1: ∫ e^{-t}(1+t)^{-1/2} dt = Ψ(1, 1.5; 1)
    let left = gr_3383_5_left(1.0, 1.0, 0.5, 1.0);
    let right = tricomi_psi(1.0, 1.5, 1.0).unwrap();
    assert_relative_eq!(left, right, max_relative = 1e-8);
}

#[test]
fn tricomi_psi_gr_identity_general_point() {
    // p = 1, q = 2, v = 1.3, a = 2
    let (p, q, v, a) = (1.0, 2.0, 1.3, 2.0);
    let left = gr_3383_5_left(p, q, v, a);
    let right = a.powf(-q) * gamma(q).unwrap() * tricomi_psi(q, q + 1.0 - v, p / a).unwrap();
    assert_relative_eq!(left, right, max_relative = 1e-8);
}

// ---------------------------------------------------------------------------
// Distortion extremes against brute-force Monte Carlo
// ---------------------------------------------------------------------------

#[test]
fn d_zero_siso_matches_ten_million_draw_mc() {
    let rho = RHO_15DB;
    let eta = 2.0;
    let channel = ChannelSpec::new(1, 1, rho).unwrap();
    let analytic = d_zero(&channel, eta).unwrap();
    let n = 10_000_000usize;
    let mut rng = trial_rng(77, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let x = sample_channel_gain(&channel, &mut rng).eigenvalues()[0];
        let y = (-eta * (rho * x).ln_1p()).exp();
        sum += y;
        sum_sq += y * y;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
    assert!(
        (analytic - mean).abs() <= 3.0 * se,
        "d_zero {analytic} vs MC {mean} ± {se}"
    );
}

#[test]
fn wishart_moment_triple_route_2x2() {
    // E[Π (1+(ρ/M_t)λ_i)^{-c}] three ways: Monte Carlo, 2-D quadrature
    // against the ordered-cone Wishart pdf, and the Hankel determinant.
    let channel = ChannelSpec::new(2, 2, 10.0).unwrap();
    let a = channel.snr_per_tx();
    let rule = laguerre_rule(96).unwrap();
    let n_mc = 400_000usize;
    for c in [0.5, 1.0, 2.0] {
        let hankel = log_det_moment(&channel, c).unwrap().exp();

        // tensorized quadrature over the symmetric square, halved; the
        // pdf already carries e^{-(x+y)}, matching the lifted weights
        let mut quad = 0.0;
        for (i, &x) in rule.nodes.iter().enumerate() {
            for (j, &y) in rule.nodes.iter().enumerate() {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                let pdf = wishart_pdf(&channel, &[lo, hi]).unwrap();
                let f = (1.0 + a * lo).powf(-c) * (1.0 + a * hi).powf(-c) * pdf;
                quad += 0.5 * rule.lifted_weights[i] * rule.lifted_weights[j] * f;
            }
        }

        let mut rng = trial_rng(4242, 0);
        let mut sum = 0.0;
        for _ in 0..n_mc {
            let s = sample_channel_gain(&channel, &mut rng);
            sum += s
                .eigenvalues()
                .iter()
                .map(|&l| (-c * (a * l).ln_1p()).exp())
                .product::<f64>();
        }
        let mc = sum / n_mc as f64;

        // the fixed tensor rule carries its own ~1e-6 truncation
        assert_relative_eq!(hankel, quad, max_relative = 1e-5);
        let rel = (mc - hankel).abs() / hankel;
        assert!(rel < 0.01, "c={c}: MC {mc} vs Hankel {hankel} (rel {rel:.4})");
    }
}

// ---------------------------------------------------------------------------
// Effective capacity: MC vs quadrature across (θ, ρ) pairs
// ---------------------------------------------------------------------------

#[test]
fn effcap_mc_and_quadrature_agree_on_scalar_and_simo() {
    let pairs = [
        (1usize, 1usize, 10.0, 5e-4),
        (1, 1, RHO_15DB, 1e-3),
        (1, 1, 100.0, 5e-3),
        (1, 2, 10.0, 1e-3),
        (1, 2, RHO_15DB, 5e-4),
    ];
    for (i, &(mt, mr, rho, theta)) in pairs.iter().enumerate() {
        let channel = ChannelSpec::new(mt, mr, rho).unwrap();
        let qos = QosSpec::new(theta, 1e5, 2e-3, 1.0).unwrap();
        let mc = effective_capacity_mc_detailed(&channel, &qos, 150_000, 600 + i as u64).unwrap();
        let quad = effective_capacity_quadrature(&channel, &qos).unwrap();
        assert!(
            (mc.value - quad).abs() <= 3.0 * mc.std_error,
            "pair {i}: MC {} vs quadrature {quad} ± {}",
            mc.value,
            mc.std_error
        );
    }
}

// ---------------------------------------------------------------------------
// Large-delay asymptotics of the exact bound
// ---------------------------------------------------------------------------

#[test]
fn log_distortion_affine_in_lambda_with_d_infinite_intercept() {
    // ln D(λ) over λ ∈ [0.01, 0.1]: straight line (R² >= 0.999) whose
    // intercept is ln D_∞, the e^{C/τ_n} approach to the floor.
    for rho in [10.0, RHO_15DB, 100.0] {
        let lambdas: Vec<f64> = (1..=10).map(|i| 0.01 * i as f64).collect();
        let ys: Vec<f64> = lambdas
            .iter()
            .map(|&l| d_delay_siso(rho, 1.0, 1.0 / l).unwrap().ln())
            .collect();
        let n = lambdas.len() as f64;
        let mx = lambdas.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = lambdas.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = lambdas.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r2 = sxy * sxy / (sxx * syy);
        assert!(r2 >= 0.999, "R² = {r2} at rho={rho}");
        let d_inf = d_infinite(&ChannelSpec::new(1, 1, rho).unwrap(), 1.0).unwrap();
        assert!(
            (intercept - d_inf.ln()).abs() < 0.02 * d_inf.ln().abs(),
            "intercept {intercept} vs ln D_∞ {} at rho={rho}",
            d_inf.ln()
        );
    }
}

#[test]
fn distortion_nonincreasing_in_snr() {
    for eta in [1.0, 2.0] {
        for tau_n in [1.0, 2.0, 5.0, 50.0] {
            let mut prev = f64::INFINITY;
            for rho in [1.0, 3.0, 10.0, RHO_15DB, 100.0, 1000.0] {
                let d = d_delay_siso(rho, eta, tau_n).unwrap();
                assert!(d < prev, "not decreasing in rho at eta={eta}, tau={tau_n}, rho={rho}");
                prev = d;
            }
        }
    }
}

#[test]
fn ergodic_capacity_two_routes_agree_on_mimo() {
    // marginal-density quadrature vs central difference of the
    // determinant-moment generating function at s = 0
    for (mt, mr) in [(2usize, 2usize), (2, 3), (1, 4)] {
        let channel = ChannelSpec::new(mt, mr, 10.0).unwrap();
        let marginal = ergodic_capacity(&channel).unwrap();
        let h = 1e-4;
        let fd = -(log_det_moment(&channel, h).unwrap() - log_det_moment(&channel, 0.0).unwrap()) / h;
        assert_relative_eq!(marginal, fd, max_relative = 1e-3);
    }
}

// ---------------------------------------------------------------------------
// Randomized invariants
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jensen_sandwich_random_parameters(
        rho in 0.5f64..200.0,
        eta in 0.25f64..3.0,
        tau_n in 1.0f64..40.0,
    ) {
        let channel = ChannelSpec::new(1, 1, rho).unwrap();
        let lo = d_infinite(&channel, eta).unwrap();
        let hi = d_zero(&channel, eta).unwrap();
        let mid = d_delay_siso(rho, eta, tau_n).unwrap();
        prop_assert!(lo <= mid * (1.0 + 1e-9) && mid <= hi * (1.0 + 1e-9),
            "rho={rho} eta={eta} tau={tau_n}: {lo} / {mid} / {hi}");
    }

    #[test]
    fn delay_monotonicity_random_parameters(
        rho in 0.5f64..200.0,
        eta in 0.25f64..3.0,
        tau_n in 1.0f64..20.0,
    ) {
        let d1 = d_delay_siso(rho, eta, tau_n).unwrap();
        let d2 = d_delay_siso(rho, eta, tau_n * 1.5).unwrap();
        prop_assert!(d2 <= d1 * (1.0 + 1e-9), "rho={rho} eta={eta} tau={tau_n}: {d2} > {d1}");
    }

    #[test]
    fn hankel_moment_between_zero_and_one(
        rho in 0.5f64..100.0,
        s in 0.01f64..4.0,
        mt in 1usize..=3,
        mr in 1usize..=3,
    ) {
        let channel = ChannelSpec::new(mt, mr, rho).unwrap();
        let lm = log_det_moment(&channel, s).unwrap();
        // E[det^{-s}] ∈ (0, 1) for s > 0 since det(I + ...) >= 1
        prop_assert!(lm < 1e-12 && lm.is_finite(), "log moment {lm} at {mt}x{mr} rho={rho} s={s}");
    }
}
