//! Shared oracle helpers for the integration suites: a plain composite
//! Simpson integrator independent of the library's quadrature stack.

/// Composite Simpson on [a, b] with n panels (n even).
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2) && n >= 2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// ∫₀^∞ f(x) dx for an exponentially decaying integrand: fine Simpson on
/// [0, 1] (resolves high-SNR knees near the origin) plus [1, cutoff].
pub fn semi_infinite_oracle<F: Fn(f64) -> f64>(f: &F, cutoff: f64) -> f64 {
    simpson(f, 0.0, 1.0, 20_000) + simpson(f, 1.0, cutoff, 40_000)
}
