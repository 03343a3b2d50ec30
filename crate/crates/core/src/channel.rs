//! i.i.d. Rayleigh block-fading MIMO channel: random eigenvalue samples,
//! analytic eigenvalue densities, and per-frame mutual information.
//!
//! The channel is y = √(ρ/M_t)·H·x + w with H holding i.i.d. CN(0,1)
//! entries, redrawn independently every frame. All randomness flows
//! through ChaCha8 streams so that a draw is a pure function of
//! (seed, stream, position); the generator choice is part of the
//! reproducibility contract and must not change silently.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::specfun::{lgamma, SpecFunError};

/// Maximum min(M_t, M_r): the eigensolver runs on the M_*×M_* Gram
/// matrix, which we keep small. The larger dimension may grow into the
/// hundreds (Gaussian-approximation validation needs e.g. 2×64).
pub const MAX_MIN_ANTENNAS: usize = 8;
const MAX_MAX_ANTENNAS: usize = 4096;

/// Channel configuration: antenna counts and linear SNR ρ.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelSpec {
    mt: usize,
    mr: usize,
    snr: f64,
}

/// Errors from channel construction and evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("invalid antenna counts mt={mt}, mr={mr}: need mt,mr >= 1, min <= {MAX_MIN_ANTENNAS}, max <= {MAX_MAX_ANTENNAS}")]
    InvalidAntennas { mt: usize, mr: usize },
    #[error("snr must be positive and finite, got {0}")]
    InvalidSnr(f64),
    #[error("eigenvalue sample does not conform to the channel spec: {0}")]
    SampleMismatch(String),
}

impl ChannelSpec {
    pub fn new(mt: usize, mr: usize, snr: f64) -> Result<Self, ChannelError> {
        if mt < 1 || mr < 1 || mt.min(mr) > MAX_MIN_ANTENNAS || mt.max(mr) > MAX_MAX_ANTENNAS {
            return Err(ChannelError::InvalidAntennas { mt, mr });
        }
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(ChannelError::InvalidSnr(snr));
        }
        Ok(Self { mt, mr, snr })
    }

    pub fn mt(&self) -> usize {
        self.mt
    }

    pub fn mr(&self) -> usize {
        self.mr
    }

    /// Linear SNR ρ.
    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// Same channel geometry at a different SNR.
    pub fn with_snr(&self, snr: f64) -> Result<Self, ChannelError> {
        Self::new(self.mt, self.mr, snr)
    }

    /// M_* = min(M_t, M_r): number of nonzero eigenvalues of HH^H.
    pub fn m_star(&self) -> usize {
        self.mt.min(self.mr)
    }

    /// M^* = max(M_t, M_r).
    pub fn m_sup(&self) -> usize {
        self.mt.max(self.mr)
    }

    /// d = M^* - M_*.
    pub fn diversity_gap(&self) -> usize {
        self.m_sup() - self.m_star()
    }

    /// ρ/M_t, the per-eigenvalue SNR scale in ln det(I + (ρ/M_t)HH^H).
    pub fn snr_per_tx(&self) -> f64 {
        self.snr / self.mt as f64
    }
}

/// Ordered (ascending) eigenvalues of HH^H for one channel realization.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EigenSample {
    eigenvalues: Vec<f64>,
}

impl EigenSample {
    /// Validating constructor: ascending, nonnegative.
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self, ChannelError> {
        if eigenvalues.is_empty() {
            return Err(ChannelError::SampleMismatch("empty eigenvalue vector".into()));
        }
        for w in eigenvalues.windows(2) {
            if w[0] > w[1] {
                return Err(ChannelError::SampleMismatch("eigenvalues not ascending".into()));
            }
        }
        if eigenvalues[0] < 0.0 {
            return Err(ChannelError::SampleMismatch("negative eigenvalue".into()));
        }
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Reproducible per-trial random stream: a pure function of
/// (seed, stream). ChaCha8 supports 2^64 independent streams, so
/// parallel trials can each own one without coordination.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex<f64> {
    // CN(0,1): real and imaginary parts N(0, 1/2)
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * scale, im * scale)
}

/// Draw H with i.i.d. CN(0,1) entries and return the sorted eigenvalues
/// of HH^H.
///
/// For M_* = 1 the single nonzero eigenvalue is ‖h‖², a sum of M^*
/// unit-mean exponentials, and no eigensolver is needed. Otherwise the
/// M_*×M_* Gram matrix of the channel matrix is diagonalized.
pub fn sample_channel_gain<R: Rng>(spec: &ChannelSpec, rng: &mut R) -> EigenSample {
    let m = spec.m_star();
    let n = spec.m_sup();
    if m == 1 {
        let mut sum = 0.0;
        for _ in 0..n {
            let h = complex_gaussian(rng);
            sum += h.norm_sqr();
        }
        return EigenSample { eigenvalues: vec![sum] };
    }

    // Rows of the m×n matrix A are drawn in a fixed order so the stream
    // layout is part of the reproducibility contract.
    let mut a = DMatrix::<Complex<f64>>::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = complex_gaussian(rng);
        }
    }
    // Gram matrix AA^H is m×m Hermitian PSD with the same nonzero
    // spectrum as HH^H.
    let gram = &a * a.adjoint();
    let eigen = gram.symmetric_eigen();
    let mut lambda: Vec<f64> = eigen.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    lambda.sort_by(|x, y| x.partial_cmp(y).unwrap());
    EigenSample { eigenvalues: lambda }
}

/// Per-frame mutual information R = Kη·ln det(I + (ρ/M_t)HH^H) in nats.
pub fn mutual_information(spec: &ChannelSpec, sample: &EigenSample, eta: f64, k: usize) -> f64 {
    let a = spec.snr_per_tx();
    let log_det: f64 = sample
        .eigenvalues
        .iter()
        .map(|&lam| (a * lam).ln_1p())
        .sum();
    k as f64 * eta * log_det
}

/// Joint density of the ordered eigenvalues of HH^H (Wishart form):
///
///   f(λ) = K⁻¹ ∏ λ_i^d ∏_{i<j} (λ_i - λ_j)² exp(-Σ λ_i)
///
/// normalized over the ordered cone 0 <= λ_1 <= … <= λ_{M_*}, with
/// ln K = Σ_{i=1}^{M_*} [ln Γ(i) + ln Γ(d+i)].
pub fn wishart_pdf(spec: &ChannelSpec, eigenvalues: &[f64]) -> Result<f64, ChannelError> {
    let m = spec.m_star();
    if eigenvalues.len() != m {
        return Err(ChannelError::SampleMismatch(format!(
            "expected {m} eigenvalues, got {}",
            eigenvalues.len()
        )));
    }
    for w in eigenvalues.windows(2) {
        if w[0] > w[1] {
            return Err(ChannelError::SampleMismatch("eigenvalues not ascending".into()));
        }
    }
    if eigenvalues[0] < 0.0 {
        return Ok(0.0);
    }
    let d = spec.diversity_gap() as f64;
    let mut log_density = -wishart_log_norm(spec);
    for &lam in eigenvalues {
        if lam == 0.0 && d > 0.0 {
            return Ok(0.0);
        }
        log_density += d * lam.ln() - lam;
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let diff = eigenvalues[i] - eigenvalues[j];
            if diff == 0.0 {
                return Ok(0.0);
            }
            log_density += 2.0 * diff.abs().ln();
        }
    }
    Ok(log_density.exp())
}

/// ln of the Wishart normalization over the ordered cone.
pub(crate) fn wishart_log_norm(spec: &ChannelSpec) -> f64 {
    let m = spec.m_star();
    let d = spec.diversity_gap();
    let mut acc = 0.0;
    for i in 1..=m {
        acc += lgamma(i as f64).expect("positive integer") + lgamma((d + i) as f64).expect("positive integer");
    }
    acc
}

/// Density of one unordered eigenvalue of HH^H,
///
///   f₁(λ) = (1/M_*) Σ_{k=0}^{M_*-1} φ_k(λ)²
///
/// with φ_k the orthonormal Laguerre functions
/// φ_k(λ) = √(k!/(k+d)!)·λ^{d/2}·e^{-λ/2}·L_k^{(d)}(λ). A linear
/// statistic satisfies E[Σ g(λ_i)] = M_* ∫ g f₁. The recurrence runs on
/// the normalized functions directly, which stay O(1) even for the
/// large diversity gaps of tall arrays.
pub fn eigenvalue_marginal_density(spec: &ChannelSpec, lam: f64) -> f64 {
    if lam < 0.0 {
        return 0.0;
    }
    let m = spec.m_star();
    let d = spec.diversity_gap() as f64;
    // φ_0 in the log domain; underflows cleanly to 0 in the far tail.
    let log_phi0 = 0.5 * (d * lam.max(1e-300).ln() - lam - lgamma(d + 1.0).expect("d+1 > 0"));
    let phi0 = if lam == 0.0 && d > 0.0 { 0.0 } else { log_phi0.exp() };
    if m == 1 {
        return phi0 * phi0;
    }
    let mut sum = phi0 * phi0;
    let mut prev = 0.0f64;
    let mut cur = phi0;
    for k in 0..(m - 1) {
        let kf = k as f64;
        let next = ((2.0 * kf + d + 1.0 - lam) * cur - (kf * (kf + d)).sqrt() * prev)
            / ((kf + 1.0) * (kf + 1.0 + d)).sqrt();
        sum += next * next;
        prev = cur;
        cur = next;
    }
    sum / m as f64
}

/// Convenience: moments of a scalar function against the unordered
/// eigenvalue marginal, M_* ∫ g(λ) f₁(λ) dλ = E[Σ_i g(λ_i)].
pub fn eigen_linear_statistic<F: Fn(f64) -> f64>(
    spec: &ChannelSpec,
    g: F,
    quad: crate::specfun::QuadratureSpec,
) -> Result<f64, SpecFunError> {
    let m = spec.m_star() as f64;
    let integral = crate::specfun::integrate_semiinfinite(
        |lam| g(lam) * eigenvalue_marginal_density(spec, lam),
        quad,
    )?;
    Ok(m * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{gamma_lower_incomplete, integrate_semiinfinite, laguerre_rule, QuadratureKind, QuadratureSpec};
    use approx::assert_relative_eq;

    #[test]
    fn spec_validation() {
        assert!(ChannelSpec::new(1, 1, 10.0).is_ok());
        assert!(ChannelSpec::new(2, 64, 10.0).is_ok());
        assert!(ChannelSpec::new(0, 1, 10.0).is_err());
        assert!(ChannelSpec::new(9, 9, 10.0).is_err());
        assert!(ChannelSpec::new(1, 1, 0.0).is_err());
        assert!(ChannelSpec::new(1, 1, f64::NAN).is_err());
        let c = ChannelSpec::new(2, 3, 4.0).unwrap();
        assert_eq!((c.m_star(), c.m_sup(), c.diversity_gap()), (2, 3, 1));
        assert_relative_eq!(c.snr_per_tx(), 2.0);
    }

    #[test]
    fn fixed_seed_bit_reproducible() {
        let spec = ChannelSpec::new(2, 2, 10.0).unwrap();
        let draw = || {
            let mut rng = trial_rng(42, 7);
            (0..10)
                .map(|_| sample_channel_gain(&spec, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn siso_eigenvalue_mean_is_one() {
        let spec = ChannelSpec::new(1, 1, 1.0).unwrap();
        let mut rng = trial_rng(1, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| sample_channel_gain(&spec, &mut rng).eigenvalues()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean={mean}");
    }

    #[test]
    fn trace_mean_is_mt_times_mr() {
        let spec = ChannelSpec::new(2, 2, 1.0).unwrap();
        let mut rng = trial_rng(2, 0);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| sample_channel_gain(&spec, &mut rng).eigenvalues().iter().sum::<f64>())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 4.0).abs() < 0.05, "mean trace={mean}");
    }

    #[test]
    fn simo_gain_matches_chi_square_ks() {
        // 1×m combined gain has pdf x^{m-1}e^{-x}/(m-1)!; KS test at the
        // 1% level: critical value 1.628/√n.
        let m = 3;
        let spec = ChannelSpec::new(1, m, 1.0).unwrap();
        let mut rng = trial_rng(3, 0);
        let n = 100_000usize;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| sample_channel_gain(&spec, &mut rng).eigenvalues()[0])
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gamma_m = crate::specfun::gamma(m as f64).unwrap();
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let cdf = gamma_lower_incomplete(m as f64, x).unwrap() / gamma_m;
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        let critical = 1.628 / (n as f64).sqrt();
        assert!(ks < critical, "KS statistic {ks} >= {critical}");
    }

    #[test]
    fn siso_ecdf_vs_exponential() {
        let spec = ChannelSpec::new(1, 1, 1.0).unwrap();
        let mut rng = trial_rng(4, 0);
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| sample_channel_gain(&spec, &mut rng).eigenvalues()[0])
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut sup: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let cdf = 1.0 - (-x).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            sup = sup.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        assert!(sup < 0.002, "sup distance {sup}");
    }

    #[test]
    fn mutual_information_values() {
        let spec = ChannelSpec::new(1, 1, std::f64::consts::E - 1.0).unwrap();
        let s = EigenSample::new(vec![1.0]).unwrap();
        assert_relative_eq!(mutual_information(&spec, &s, 1.0, 1), 1.0, max_relative = 1e-14);

        let zero = EigenSample::new(vec![0.0]).unwrap();
        assert_eq!(mutual_information(&spec, &zero, 1.0, 1), 0.0);

        let spec22 = ChannelSpec::new(2, 2, 2.0).unwrap();
        let s22 = EigenSample::new(vec![1.0, 3.0]).unwrap();
        assert_relative_eq!(
            mutual_information(&spec22, &s22, 1.0, 10),
            10.0 * (2.0f64.ln() + 4.0f64.ln()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn mutual_information_monotone() {
        let sample = EigenSample::new(vec![0.3, 1.7]).unwrap();
        let mut prev = 0.0;
        for snr in [0.1, 1.0, 5.0, 50.0] {
            let spec = ChannelSpec::new(2, 2, snr).unwrap();
            let mi = mutual_information(&spec, &sample, 1.0, 1);
            assert!(mi > prev);
            prev = mi;
        }
        let spec = ChannelSpec::new(2, 2, 5.0).unwrap();
        let bigger = EigenSample::new(vec![0.4, 1.7]).unwrap();
        assert!(
            mutual_information(&spec, &bigger, 1.0, 1) > mutual_information(&spec, &sample, 1.0, 1)
        );
    }

    #[test]
    fn wishart_pdf_scalar_cases() {
        let siso = ChannelSpec::new(1, 1, 1.0).unwrap();
        for lam in [0.1, 1.0, 3.0] {
            assert_relative_eq!(
                wishart_pdf(&siso, &[lam]).unwrap(),
                (-lam).exp(),
                max_relative = 1e-12
            );
        }
        let simo = ChannelSpec::new(1, 4, 1.0).unwrap();
        for lam in [0.5f64, 2.0, 6.0] {
            let expected = lam.powi(3) * (-lam).exp() / 6.0;
            assert_relative_eq!(wishart_pdf(&simo, &[lam]).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn wishart_pdf_2x2_normalizes_over_ordered_cone() {
        // The integrand without exp(-Σλ) is polynomial, so a tensorized
        // Gauss-Laguerre rule is exact; the cone integral is half the
        // symmetric square.
        let spec = ChannelSpec::new(2, 2, 1.0).unwrap();
        let rule = laguerre_rule(24).unwrap();
        let mut total = 0.0;
        for (i, &x) in rule.nodes.iter().enumerate() {
            for (j, &y) in rule.nodes.iter().enumerate() {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                let f = wishart_pdf(&spec, &[lo, hi]).unwrap();
                total += rule.lifted_weights[i] * rule.lifted_weights[j] * 0.5 * f;
            }
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn marginal_density_reduces_to_chi_square_for_m1() {
        let spec = ChannelSpec::new(1, 3, 1.0).unwrap();
        for lam in [0.2, 1.0, 4.0] {
            let expected = lam * lam * (-lam).exp() / 2.0;
            assert_relative_eq!(
                eigenvalue_marginal_density(&spec, lam),
                expected,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn marginal_density_normalizes_and_matches_trace() {
        let quad = QuadratureSpec { node_count: 64, kind: QuadratureKind::GaussLaguerre, rel_tol: 1e-10 };
        for (mt, mr) in [(2usize, 2usize), (3, 5), (2, 64)] {
            let spec = ChannelSpec::new(mt, mr, 1.0).unwrap();
            let mass =
                integrate_semiinfinite(|lam| eigenvalue_marginal_density(&spec, lam), quad).unwrap();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
            // E[Σ λ_i] = tr E[HH^H] = M_t M_r
            let trace = eigen_linear_statistic(&spec, |lam| lam, quad).unwrap();
            assert_relative_eq!(trace, (mt * mr) as f64, max_relative = 1e-9);
        }
    }
}
