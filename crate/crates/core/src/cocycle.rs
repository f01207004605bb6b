//! Schrödinger cocycles: one-step and κ-block transfer matrices,
//! renormalized Lyapunov-exponent estimation (real and complexified phase),
//! quantized acceleration, fibered rotation number, and the explicit
//! zero-energy conjugacy of the mosaic block.

use crate::models::{ModelSpec, Variant};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

const TAU2PI: f64 = 2.0 * std::f64::consts::PI;

/// a_κ from the Chebyshev-type recurrence a_k = E·a_{k−1} − a_{k−2},
/// seeds a₀ = 0, a₁ = 1 (equals U_{κ−1}(E/2)).
pub fn chebyshev_a(kappa: u32, energy: f64) -> f64 {
    let (mut prev, mut cur) = (0.0_f64, 1.0_f64);
    if kappa == 0 {
        return prev;
    }
    for _ in 1..kappa {
        let next = energy * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed form of a_κ away from E = ±2 (for cross-checks).
pub fn chebyshev_a_closed(kappa: u32, energy: f64) -> f64 {
    let disc = energy * energy - 4.0;
    if disc.abs() < 1e-12 {
        // a_κ(2) = κ, a_κ(−2) = (−1)^{κ−1} κ
        return if energy > 0.0 {
            kappa as f64
        } else {
            (-1.0_f64).powi(kappa as i32 - 1) * kappa as f64
        };
    }
    let s = disc.sqrt_or_im();
    let ep = (Complex64::new(energy, 0.0) + s) / 2.0;
    let em = (Complex64::new(energy, 0.0) - s) / 2.0;
    ((ep.powu(kappa) - em.powu(kappa)) / s).re
}

trait SqrtOrIm {
    fn sqrt_or_im(self) -> Complex64;
}
impl SqrtOrIm for f64 {
    fn sqrt_or_im(self) -> Complex64 {
        if self >= 0.0 {
            Complex64::new(self.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-self).sqrt())
        }
    }
}

pub type Mat2 = [[f64; 2]; 2];
pub type CMat2 = [[Complex64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat_det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Max-norm (largest entry magnitude), used for renormalization.
pub fn mat_norm(a: &Mat2) -> f64 {
    a.iter()
        .flatten()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn cmat_mul(a: &CMat2, b: &CMat2) -> CMat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn cmat_norm(a: &CMat2) -> f64 {
    a.iter()
        .flatten()
        .fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// A transfer-matrix cocycle over the rotation by `frequency()`.
#[derive(Debug, Clone, Copy)]
pub enum Cocycle {
    /// One-step Schrödinger cocycle S_E(θ, n) = [[E−V(θ+nα, n), −1], [1, 0]].
    /// For mosaic models the fiber carries the site index n mod κ.
    OneStep { model: ModelSpec, energy: f64 },
    /// κ-fold mosaic block D_E(θ) over the rotation by κα.
    Block { model: ModelSpec, energy: f64 },
}

impl Cocycle {
    pub fn one_step(model: ModelSpec, energy: f64) -> Self {
        Cocycle::OneStep { model, energy }
    }

    pub fn block(model: ModelSpec, energy: f64) -> Result<Self> {
        match model.variant {
            Variant::Mosaic { .. } => Ok(Cocycle::Block { model, energy }),
            _ => Err(Error::Domain("block cocycle requires a mosaic model".into())),
        }
    }

    pub fn model(&self) -> &ModelSpec {
        match self {
            Cocycle::OneStep { model, .. } | Cocycle::Block { model, .. } => model,
        }
    }

    pub fn energy(&self) -> f64 {
        match self {
            Cocycle::OneStep { energy, .. } | Cocycle::Block { energy, .. } => *energy,
        }
    }

    /// Base rotation: α for one-step, κα for the block.
    pub fn frequency(&self) -> f64 {
        match self {
            Cocycle::OneStep { model, .. } => model.alpha,
            Cocycle::Block { model, .. } => model.alpha * model.period() as f64,
        }
    }

    /// Analyticity half-width of the fiber map.
    pub fn strip_half_width(&self) -> f64 {
        let model = self.model();
        let tau = match model.variant {
            Variant::Gaa { tau, .. } => tau.abs(),
            Variant::LongRangeDual { .. } | Variant::Peaky { .. } => {
                crate::models::reduce_to_gaa(model).expect("reducible").tau.abs()
            }
            Variant::Amo { .. } | Variant::Mosaic { .. } => return f64::INFINITY,
        };
        if tau == 0.0 {
            f64::INFINITY
        } else {
            (1.0 + (1.0 - tau * tau).sqrt()).ln() / TAU2PI - tau.ln() / TAU2PI
        }
    }

    /// Fiber matrix at step n over the base point θ (phase shift by n times
    /// the base rotation happens here).
    pub fn matrix(&self, theta: f64, n: i64) -> Mat2 {
        match self {
            Cocycle::OneStep { model, energy } => {
                let v = model.potential(theta, n);
                [[energy - v, -1.0], [1.0, 0.0]]
            }
            Cocycle::Block { model, energy } => {
                block_matrix(model, *energy, theta + n as f64 * self.frequency())
                    .expect("block cocycle holds a mosaic model")
            }
        }
    }

    /// Fiber matrix at complexified phase θ + iε.
    pub fn matrix_c(&self, theta: Complex64, n: i64) -> Result<CMat2> {
        if theta.im.abs() >= self.strip_half_width() {
            return Err(Error::Domain(format!(
                "phase Im = {} outside analyticity strip (half-width {})",
                theta.im,
                self.strip_half_width()
            )));
        }
        Ok(match self {
            Cocycle::OneStep { model, energy } => {
                let v = potential_c(model, theta, n);
                [
                    [Complex64::new(*energy, 0.0) - v, (-1.0).into()],
                    [(1.0).into(), (0.0).into()],
                ]
            }
            Cocycle::Block { model, energy } => {
                let (lambda, kappa) = match model.variant {
                    Variant::Mosaic { lambda, kappa } => (lambda, kappa),
                    _ => unreachable!(),
                };
                let ak = chebyshev_a(kappa, *energy);
                let ak1 = chebyshev_a(kappa - 1, *energy);
                // a_{−1} = −1 continues the recurrence below a_0
                let ak2 = if kappa >= 2 { chebyshev_a(kappa - 2, *energy) } else { -1.0 };
                let z = theta + n as f64 * self.frequency();
                let w = Complex64::new(*energy, 0.0) - 2.0 * lambda * (TAU2PI * z).cos();
                [
                    [ak * w - ak1, Complex64::new(-ak, 0.0)],
                    [ak1 * w - ak2, Complex64::new(-ak1, 0.0)],
                ]
            }
        })
    }
}

fn potential_c(model: &ModelSpec, phase: Complex64, n: i64) -> Complex64 {
    let z = phase + n as f64 * model.alpha;
    let c = (TAU2PI * z).cos();
    match model.variant {
        Variant::Amo { lambda } => 2.0 * lambda * c,
        Variant::Gaa { lambda, tau } => 2.0 * lambda * c / (1.0 - tau * c),
        Variant::Mosaic { lambda, kappa } => {
            if n.rem_euclid(kappa as i64) == 0 {
                2.0 * lambda * c
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        Variant::LongRangeDual { lambda, p } => {
            let e = (-p).exp();
            4.0 / lambda * (-e * e + e * c) / (1.0 + e * e - 2.0 * e * c)
        }
        Variant::Peaky { lambda, k_peak } => {
            let s = (std::f64::consts::PI * z).sin();
            lambda / (1.0 + 4.0 * k_peak * s * s)
        }
    }
}

/// Closed-form mosaic block D_E(θ) = S(θ,κ−1)···S(θ,0), entries built from
/// the a_κ recurrence.
pub fn block_matrix(model: &ModelSpec, energy: f64, theta: f64) -> Result<Mat2> {
    let (lambda, kappa) = match model.variant {
        Variant::Mosaic { lambda, kappa } => (lambda, kappa),
        _ => return Err(Error::Domain("block_matrix requires a mosaic model".into())),
    };
    let ak = chebyshev_a(kappa, energy);
    let ak1 = chebyshev_a(kappa - 1, energy);
    let ak2 = if kappa >= 2 { chebyshev_a(kappa - 2, energy) } else { -1.0 };
    let w = energy - 2.0 * lambda * (TAU2PI * theta).cos();
    Ok([[ak * w - ak1, -ak], [ak1 * w - ak2, -ak1]])
}

/// Renormalized Lyapunov-exponent estimate.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovEstimate {
    /// nats per step of the iterated cocycle (per block step for `Block`)
    pub value: f64,
    pub steps: u64,
    pub theta_samples: usize,
    /// standard deviation across the θ samples
    pub dispersion: f64,
    /// pseudo-period guard N ≤ q_{n+1}²/100 on the frequency's convergents
    pub converged: bool,
}

const RESCALE_PERIOD: u64 = 32;

fn kahan_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let y = x - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

fn pseudo_period_guard(frequency: f64, steps: u64) -> bool {
    let frac = frequency.rem_euclid(1.0);
    if frac < 1e-12 || frac > 1.0 - 1e-12 {
        return false;
    }
    match crate::arithmetic::cf_expand(frac, 40) {
        Ok(cf) => {
            let q_last = *cf.q.last().unwrap_or(&1) as f64;
            (steps as f64) <= q_last * q_last / 100.0
        }
        Err(_) => false,
    }
}

/// Finite-scale growth rate (1/N)·ln‖A_N(θ)‖ of the renormalized product at
/// one base point (used for uniform upper-bound checks).
pub fn log_norm_rate(cocycle: &Cocycle, theta0: f64, steps: u64) -> f64 {
    log_growth(cocycle, theta0, steps)
}

fn log_growth(cocycle: &Cocycle, theta0: f64, steps: u64) -> f64 {
    let mut prod = [[1.0, 0.0], [0.0, 1.0]];
    let (mut log_sum, mut comp) = (0.0, 0.0);
    for n in 0..steps {
        prod = mat_mul(&cocycle.matrix(theta0, n as i64), &prod);
        if (n + 1) % RESCALE_PERIOD == 0 {
            let norm = mat_norm(&prod);
            assert!(norm.is_finite() && norm > 0.0, "renormalization failed");
            kahan_add(&mut log_sum, &mut comp, norm.ln());
            for row in prod.iter_mut() {
                for x in row.iter_mut() {
                    *x /= norm;
                }
            }
        }
    }
    let norm = mat_norm(&prod);
    kahan_add(&mut log_sum, &mut comp, norm.ln());
    log_sum / steps as f64
}

/// Lyapunov exponent by renormalized products, averaged over equidistributed
/// θ offsets seeded at `seed`.
pub fn lyapunov(cocycle: &Cocycle, steps: u64, theta_samples: usize, seed: u64) -> LyapunovEstimate {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let base: f64 = rng.gen();
    let samples: Vec<f64> = (0..theta_samples)
        .map(|j| (base + j as f64 / theta_samples as f64).rem_euclid(1.0))
        .collect();
    let values: Vec<f64> = samples
        .iter()
        .map(|&t0| log_growth(cocycle, t0, steps))
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / values.len().max(1) as f64;
    LyapunovEstimate {
        value: mean.max(-1e-9),
        steps,
        theta_samples,
        dispersion: var.sqrt(),
        converged: pseudo_period_guard(cocycle.frequency(), steps),
    }
}

/// Lyapunov exponent of the phase-complexified cocycle A(· + iε).
pub fn lyapunov_complexified(
    cocycle: &Cocycle,
    epsilon: f64,
    steps: u64,
    theta_samples: usize,
    seed: u64,
) -> Result<f64> {
    if epsilon.abs() >= cocycle.strip_half_width() {
        return Err(Error::Domain(format!(
            "epsilon = {epsilon} beyond analyticity half-width {}",
            cocycle.strip_half_width()
        )));
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let base: f64 = rng.gen();
    let mut total = 0.0;
    for j in 0..theta_samples {
        let t0 = (base + j as f64 / theta_samples as f64).rem_euclid(1.0);
        let theta = Complex64::new(t0, epsilon);
        let mut prod: CMat2 = [
            [(1.0).into(), (0.0).into()],
            [(0.0).into(), (1.0).into()],
        ];
        let (mut log_sum, mut comp) = (0.0, 0.0);
        for n in 0..steps {
            prod = cmat_mul(&cocycle.matrix_c(theta, n as i64)?, &prod);
            if (n + 1) % RESCALE_PERIOD == 0 {
                let norm = cmat_norm(&prod);
                kahan_add(&mut log_sum, &mut comp, norm.ln());
                for row in prod.iter_mut() {
                    for x in row.iter_mut() {
                        *x /= norm;
                    }
                }
            }
        }
        kahan_add(&mut log_sum, &mut comp, cmat_norm(&prod).ln());
        total += log_sum / steps as f64;
    }
    Ok(total / theta_samples as f64)
}

/// Acceleration at ε: central-difference slope of L(ε)/2π plus the nearest
/// half-integer (integer for SL(2,R) fibers). `resolved` is false near a
/// kink of the piecewise-linear L.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Acceleration {
    pub raw: f64,
    pub quantized: f64,
    pub resolved: bool,
}

pub fn acceleration(
    cocycle: &Cocycle,
    epsilon: f64,
    delta: f64,
    steps: u64,
    theta_samples: usize,
    seed: u64,
) -> Result<Acceleration> {
    let hw = cocycle.strip_half_width();
    if epsilon.abs() + delta >= hw {
        return Err(Error::Domain(format!(
            "[eps-delta, eps+delta] = [{}, {}] not inside strip of half-width {hw}",
            epsilon - delta,
            epsilon + delta
        )));
    }
    let l_plus = lyapunov_complexified(cocycle, epsilon + delta, steps, theta_samples, seed)?;
    let l_minus = lyapunov_complexified(cocycle, epsilon - delta, steps, theta_samples, seed)?;
    let raw = (l_plus - l_minus) / (2.0 * TAU2PI * delta);
    let quantized = (raw * 2.0).round() / 2.0;
    Ok(Acceleration {
        raw,
        quantized,
        resolved: (raw - quantized).abs() <= 0.15,
    })
}

/// Fibered rotation number in [0, 1/2]: cumulative projective angle with a
/// continuous branch, folded only in the final average.
///
/// For the one-step Schrödinger fiber [[E−V,−1],[1,0]] the image of
/// (cos φ, sin φ) has second coordinate cos φ, independent of E−V, so along
/// the path t ↦ [[t(E−V),−1],[1,0]] from the quarter rotation the image
/// angle never crosses the horizontal axis. The continuous lift of the
/// per-step increment therefore lies in (−π/2, 3π/2), which disambiguates
/// increments near π (a (−π, π] branch randomly drops full half-turns there
/// once the potential fluctuates). Block fibers have no such normal form and
/// use the plain principal branch.
pub fn rotation_number(cocycle: &Cocycle, theta0: f64, steps: u64) -> f64 {
    let schroedinger = matches!(cocycle, Cocycle::OneStep { .. });
    let mut v = [1.0_f64, 0.0_f64];
    let mut total_angle = 0.0;
    for n in 0..steps {
        let m = cocycle.matrix(theta0, n as i64);
        let w = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        // signed angle from v to w in (−π, π]
        let cross = v[0] * w[1] - v[1] * w[0];
        let dot = v[0] * w[0] + v[1] * w[1];
        let principal = cross.atan2(dot);
        total_angle += if schroedinger {
            // re-center the branch cut at −π/2: increment in (−π/2, 3π/2)
            let shifted = principal - std::f64::consts::FRAC_PI_2;
            let wrapped = shifted - TAU2PI * (shifted / TAU2PI).round();
            std::f64::consts::FRAC_PI_2 + wrapped
        } else {
            principal
        };
        let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
        v = [w[0] / norm, w[1] / norm];
    }
    let rho = (total_angle / (TAU2PI * steps as f64)).rem_euclid(1.0);
    // fold to [0, 1/2]
    if rho > 0.5 {
        1.0 - rho
    } else {
        rho
    }
}

/// Zero-energy conjugacy of the mosaic block at E_l = 2 cos(πl/κ): solves
/// 2λ cos 2πθ = h(θ+κα) − h(θ) in closed Fourier form and reports the
/// residual of B(θ+κα)⁻¹ D_{E_l}(θ) B(θ) ∓ Id on a θ grid.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroEnergyConjugacy {
    pub critical_energy: f64,
    /// ĥ₊₁ (ĥ₋₁ is its conjugate; h is real)
    pub h_hat_re: f64,
    pub h_hat_im: f64,
    /// sign s with B⁻¹ D B = s·Id
    pub sign: f64,
    pub residual: f64,
}

pub fn zero_energy_conjugacy(model: &ModelSpec, l: u32) -> Result<ZeroEnergyConjugacy> {
    let (lambda, kappa) = match model.variant {
        Variant::Mosaic { lambda, kappa } => (lambda, kappa),
        _ => return Err(Error::Domain("zero_energy_conjugacy requires mosaic".into())),
    };
    if l == 0 || l >= kappa {
        return Err(Error::Domain(format!(
            "root index l must satisfy 1 <= l <= kappa-1, got {l}"
        )));
    }
    let freq = kappa as f64 * model.alpha;
    if crate::arithmetic::dist_to_integers(freq) < 1e-10 {
        return Err(Error::Singular(
            "kappa*alpha within 1e-10 of an integer: small divisor blows up".into(),
        ));
    }
    let energy = 2.0 * (std::f64::consts::PI * l as f64 / kappa as f64).cos();
    let h_hat = lambda / (Complex64::new(0.0, TAU2PI * freq).exp() - 1.0);
    let sign = -chebyshev_a(kappa - 1, energy);
    let h = |theta: f64| 2.0 * (h_hat * Complex64::new(0.0, TAU2PI * theta).exp()).re;

    let grid = 2048usize;
    let mut residual = 0.0_f64;
    for i in 0..grid {
        let theta = i as f64 / grid as f64;
        let d = block_matrix(model, energy, theta)?;
        let b = [[1.0, 0.0], [h(theta), 1.0]];
        let b_shift_inv = [[1.0, 0.0], [-h(theta + freq), 1.0]];
        let conj = mat_mul(&b_shift_inv, &mat_mul(&d, &b));
        let target = [[sign, 0.0], [0.0, sign]];
        for r in 0..2 {
            for c in 0..2 {
                residual = residual.max((conj[r][c] - target[r][c]).abs());
            }
        }
    }
    Ok(ZeroEnergyConjugacy {
        critical_energy: energy,
        h_hat_re: h_hat.re,
        h_hat_im: h_hat.im,
        sign,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden_mean;
    use crate::models::{ModelSpec, Variant};

    fn amo(lambda: f64) -> ModelSpec {
        ModelSpec::new(Variant::Amo { lambda }, golden_mean()).unwrap()
    }

    fn mosaic(lambda: f64, kappa: u32) -> ModelSpec {
        ModelSpec::new(Variant::Mosaic { lambda, kappa }, golden_mean()).unwrap()
    }

    fn free() -> ModelSpec {
        amo(0.0)
    }

    #[test]
    fn chebyshev_small_cases() {
        for e in [-1.0, 0.0, 3.0] {
            assert_eq!(chebyshev_a(2, e), e);
        }
        for e in [0.0, 2.0] {
            assert_eq!(chebyshev_a(3, e), e * e - 1.0);
        }
        assert_eq!(chebyshev_a(5, 2.0), 5.0);
        assert_eq!(chebyshev_a(4, -2.0), -4.0);
    }

    #[test]
    fn chebyshev_matches_closed_form() {
        for kappa in [2u32, 3, 5, 8] {
            for e in [-3.5, -1.2, 0.7, 1.9, 2.4] {
                let rec = chebyshev_a(kappa, e);
                let closed = chebyshev_a_closed(kappa, e);
                assert!((rec - closed).abs() < 1e-9, "kappa={kappa} E={e}: {rec} vs {closed}");
            }
        }
    }

    #[test]
    fn block_matches_direct_product() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for kappa in [1u32, 2, 3, 5] {
            let model = mosaic(1.4, kappa);
            for _ in 0..40 {
                let e: f64 = rng.gen_range(-4.0..4.0);
                let theta: f64 = rng.gen();
                let closed = block_matrix(&model, e, theta).unwrap();
                let cocycle = Cocycle::one_step(model, e);
                let mut prod = [[1.0, 0.0], [0.0, 1.0]];
                for n in 0..kappa as i64 {
                    prod = mat_mul(&cocycle.matrix(theta, n), &prod);
                }
                for r in 0..2 {
                    for c in 0..2 {
                        assert!(
                            (closed[r][c] - prod[r][c]).abs() < 1e-12,
                            "kappa={kappa} E={e}"
                        );
                    }
                }
                let scale = mat_norm(&closed).max(1.0);
                assert!((mat_det(&closed) - 1.0).abs() < 1e-12 * scale * scale);
            }
        }
    }

    #[test]
    fn block_k2_zero_energy_form() {
        let lambda = 1.3;
        let model = mosaic(lambda, 2);
        for theta in [0.0, 0.21, 0.77] {
            let m = block_matrix(&model, 0.0, theta).unwrap();
            let c = 2.0 * lambda * (TAU2PI * theta).cos();
            assert!((m[0][0] + 1.0).abs() < 1e-14);
            assert!(m[0][1].abs() < 1e-14);
            assert!((m[1][0] + c).abs() < 1e-14);
            assert!((m[1][1] + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn free_lyapunov() {
        let c = Cocycle::one_step(free(), 0.0);
        let est = lyapunov(&c, 10_000, 4, 1);
        assert!(est.value.abs() < 2e-3, "L={}", est.value);

        let c = Cocycle::one_step(free(), 3.0);
        let est = lyapunov(&c, 10_000, 4, 1);
        let expect = ((3.0 + 5.0_f64.sqrt()) / 2.0).ln();
        assert!((est.value - expect).abs() < 1e-3, "L={}", est.value);
    }

    #[test]
    fn amo_lyapunov_matches_formula() {
        // E = 0 lies in the AMO spectrum for every lambda (spectral symmetry).
        let c = Cocycle::one_step(amo(2.0), 0.0);
        let est = lyapunov(&c, 200_000, 8, 2);
        assert!(
            (est.value - 2.0_f64.ln()).abs() < 0.01,
            "L={} disp={}",
            est.value,
            est.dispersion
        );
        assert!(est.converged);
    }

    #[test]
    fn mosaic_block_identity() {
        // L(T_alpha, S) = (1/kappa) L(kappa alpha, D)
        let model = mosaic(2.0, 2);
        let e = 1.0;
        let per_site = lyapunov(&Cocycle::one_step(model, e), 100_000, 8, 3);
        let per_block = lyapunov(&Cocycle::block(model, e).unwrap(), 50_000, 8, 3);
        assert!(
            (per_site.value - per_block.value / 2.0).abs()
                < 2.0 * (per_site.dispersion + per_block.dispersion) + 5e-3,
            "site {} block/2 {}",
            per_site.value,
            per_block.value / 2.0
        );
    }

    #[test]
    fn complexified_matches_real_at_zero() {
        let c = Cocycle::one_step(amo(2.0), 0.5);
        let l0 = lyapunov(&c, 50_000, 8, 4).value;
        let lc = lyapunov_complexified(&c, 0.0, 50_000, 8, 4).unwrap();
        assert!((l0 - lc).abs() < 5e-3);
    }

    #[test]
    fn complexified_large_epsilon_asymptics() {
        // AMO lambda=1, eps=1: L ~ 2*pi*eps + ln(lambda)
        let c = Cocycle::one_step(amo(1.0), 0.5);
        let l = lyapunov_complexified(&c, 1.0, 20_000, 4, 5).unwrap();
        assert!((l - TAU2PI).abs() < 1e-2, "L={l}");

        // Mosaic block kappa=2, lambda=2, E in spectrum (E=0), eps=2:
        // L ~ 2*pi*eps + ln|lambda*a_2(E)|... a_2(0)=0 is degenerate; use E=1.
        let model = mosaic(2.0, 2);
        let c = Cocycle::block(model, 1.0).unwrap();
        let l = lyapunov_complexified(&c, 2.0, 20_000, 4, 5).unwrap();
        let expect = 2.0 * TAU2PI + (2.0_f64 * chebyshev_a(2, 1.0)).abs().ln();
        assert!((l - expect).abs() < 1e-2, "L={l} expect={expect}");
    }

    #[test]
    fn strip_limit_enforced() {
        let gaa = ModelSpec::new(Variant::Gaa { lambda: 1.0, tau: 0.5 }, golden_mean()).unwrap();
        let c = Cocycle::one_step(gaa, 0.5);
        let hw = c.strip_half_width();
        assert!(hw > 0.0 && hw.is_finite());
        assert!(lyapunov_complexified(&c, hw + 0.01, 100, 1, 0).is_err());
        assert!(lyapunov_complexified(&c, hw * 0.5, 1000, 1, 0).is_ok());
    }

    #[test]
    fn acceleration_constant_cocycle() {
        let c = Cocycle::one_step(free(), 1.0);
        let a = acceleration(&c, 0.3, 0.02, 20_000, 4, 6).unwrap();
        assert_eq!(a.quantized, 0.0);
        assert!(a.resolved);
    }

    #[test]
    fn acceleration_mosaic_supercritical() {
        let model = mosaic(2.0, 2);
        // E=1 is supercritical for lambda=2 (|lambda*E|=2>1)
        let c = Cocycle::block(model, 1.0).unwrap();
        let a = acceleration(&c, 0.5, 0.02, 20_000, 4, 7).unwrap();
        assert_eq!(a.quantized, 1.0, "raw={}", a.raw);
        assert!(a.resolved);
    }

    #[test]
    fn acceleration_uniformly_hyperbolic() {
        let c = Cocycle::one_step(amo(1.0), 10.0);
        let a = acceleration(&c, 0.05, 0.02, 20_000, 4, 8).unwrap();
        assert_eq!(a.quantized, 0.0);
        let l = lyapunov(&c, 20_000, 4, 8);
        assert!(l.value > 0.0);
    }

    #[test]
    fn rotation_number_free_case() {
        for r in [0.1, 0.25, 0.4] {
            let e = 2.0 * (TAU2PI * r).cos();
            let c = Cocycle::one_step(free(), e);
            let rho = rotation_number(&c, 0.0, 100_000);
            assert!((rho - r).abs() < 1e-3, "r={r} rho={rho}");
        }
    }

    #[test]
    fn rotation_number_off_spectrum_tails() {
        let below = rotation_number(&Cocycle::one_step(free(), -3.0), 0.0, 10_000);
        let above = rotation_number(&Cocycle::one_step(free(), 3.0), 0.0, 10_000);
        assert!((below - 0.5).abs() < 1e-3, "below={below}");
        assert!(above < 1e-3, "above={above}");
    }

    #[test]
    fn one_step_det_is_one() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let models = [amo(2.0), mosaic(1.5, 3)];
        for m in models {
            let c = Cocycle::one_step(m, 0.7);
            for _ in 0..50 {
                let theta: f64 = rng.gen();
                let n: i64 = rng.gen_range(0..100);
                assert!((mat_det(&c.matrix(theta, n)) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_energy_conjugacy_golden() {
        let model = mosaic(1.0, 2);
        let z = zero_energy_conjugacy(&model, 1).unwrap();
        assert_eq!(z.critical_energy, 2.0 * (std::f64::consts::PI / 2.0).cos());
        let h_abs = (z.h_hat_re * z.h_hat_re + z.h_hat_im * z.h_hat_im).sqrt();
        assert!((h_abs - 0.740202).abs() < 1e-5, "|h1|={h_abs}");
        assert!(z.residual < 1e-10, "residual={}", z.residual);
    }

    #[test]
    fn zero_energy_conjugacy_bad_index() {
        let model = mosaic(1.0, 2);
        assert!(zero_energy_conjugacy(&model, 0).is_err());
        assert!(zero_energy_conjugacy(&model, 2).is_err());
    }

    #[test]
    fn complexified_le_even_and_convex() {
        let c = Cocycle::one_step(amo(1.0), 0.5);
        let eps: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let l: Vec<f64> = eps
            .iter()
            .map(|&e| lyapunov_complexified(&c, e, 20_000, 4, 9).unwrap())
            .collect();
        let l_neg: Vec<f64> = eps
            .iter()
            .map(|&e| lyapunov_complexified(&c, -e, 20_000, 4, 9).unwrap())
            .collect();
        for i in 0..eps.len() {
            assert!((l[i] - l_neg[i]).abs() < 1e-2, "eps={} not even", eps[i]);
        }
        for i in 1..eps.len() - 1 {
            let second = l[i + 1] - 2.0 * l[i] + l[i - 1];
            assert!(second >= -1e-2, "eps={} second diff {second}", eps[i]);
        }
    }
}
