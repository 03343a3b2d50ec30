//! Confluent hypergeometric ₁F₁ and the Tricomi function Ψ.

use super::gamma::{gamma, recip_gamma};
use super::SpecFunError;

const MAX_TERMS: usize = 10_000;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.trunc()
}

/// Kummer confluent hypergeometric function ₁F₁(a; b; z).
///
/// Direct series with Kahan-compensated summation; for z < 0 the Kummer
/// transformation ₁F₁(a;b;z) = e^z ₁F₁(b-a;b;-z) keeps all terms
/// positive when b > a. Arguments in this crate stay moderate
/// (|z| <= ~10) so the series converges quickly.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64, SpecFunError> {
    if is_nonpositive_integer(b) {
        return Err(SpecFunError::Pole(format!(
            "1F1 undefined for b a nonpositive integer, got b={b}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 {
        return Ok(z.exp() * hyp1f1(b - a, b, -z)?);
    }
    let mut sum = 1.0f64;
    let mut comp = 0.0f64; // Kahan compensation
    let mut term = 1.0f64;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() <= sum.abs() * f64::EPSILON {
            return Ok(sum);
        }
    }
    Err(SpecFunError::NoConvergence(format!(
        "1F1({a}; {b}; {z}) did not converge within {MAX_TERMS} terms"
    )))
}

/// Tricomi (degenerate) hypergeometric function Ψ(x, y; z) for z > 0,
/// through its two-term ₁F₁ reduction:
///
///   Ψ(x,y;z) = Γ(1-y)/Γ(x-y+1) ₁F₁(x;y;z)
///            + Γ(y-1)/Γ(x) z^{1-y} ₁F₁(x-y+1;2-y;z)
///
/// The reduction degenerates when y is an integer (a pole of one of the
/// gamma prefactors); that case is reported as an error.
pub fn tricomi_psi(x: f64, y: f64, z: f64) -> Result<f64, SpecFunError> {
    if !(z > 0.0) {
        return Err(SpecFunError::Domain(format!("Psi requires z > 0, got {z}")));
    }
    if y == y.trunc() {
        return Err(SpecFunError::Pole(format!(
            "Psi reduction degenerates at integer y, got y={y}"
        )));
    }
    // 1/Γ at a pole is 0, vanishing that term.
    let term1 = gamma(1.0 - y)? * recip_gamma(x - y + 1.0) * hyp1f1(x, y, z)?;
    let term2 = gamma(y - 1.0)? * recip_gamma(x) * z.powf(1.0 - y) * hyp1f1(x - y + 1.0, 2.0 - y, z)?;
    Ok(term1 + term2)
}
