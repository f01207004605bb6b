//! Potential definitions for the five model families, reductions to the
//! generalized Aubry-Andre (GAA) form, and the closed-form Lyapunov-exponent
//! and mobility-edge formulas.

use crate::{Error, Result};
use serde::Serialize;

/// Parameter record for one quasiperiodic model. `alpha` is the frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Variant {
    /// Almost Mathieu: V(θ) = 2λ cos 2πθ.
    Amo { lambda: f64 },
    /// Generalized Aubry-Andre: V(θ) = 2λ cos 2πθ / (1 − τ cos 2πθ).
    Gaa { lambda: f64, tau: f64 },
    /// Mosaic: V(θ, n) = 2λ cos 2πθ on n ∈ κZ, 0 elsewhere.
    Mosaic { lambda: f64, kappa: u32 },
    /// Dual of the exponential long-range hopping model:
    /// V(θ) = (4/λ)(−e^{−2p} + e^{−p} cos 2πθ)/(1 + e^{−2p} − 2e^{−p} cos 2πθ).
    LongRangeDual { lambda: f64, p: f64 },
    /// Peaky: V(θ) = λ/(1 + 4K sin² πθ).
    Peaky { lambda: f64, k_peak: f64 },
}

impl ModelSpec {
    pub fn new(variant: Variant, alpha: f64) -> Result<Self> {
        match variant {
            Variant::Gaa { tau, .. } if tau.abs() > 1.0 => Err(Error::Domain(format!(
                "GAA requires |tau| <= 1, got {tau}"
            ))),
            Variant::Mosaic { lambda, kappa } if kappa < 1 || lambda == 0.0 => Err(
                Error::Domain("mosaic requires kappa >= 1 and lambda != 0".into()),
            ),
            Variant::LongRangeDual { p, .. } if p <= 0.0 => {
                Err(Error::Domain("long-range dual requires p > 0".into()))
            }
            Variant::Peaky { lambda, k_peak } if k_peak <= 0.0 || lambda <= 0.0 => {
                Err(Error::Domain("peaky requires K > 0 and lambda > 0".into()))
            }
            _ => Ok(ModelSpec { variant, alpha }),
        }
    }

    /// GAA with |τ| = 1 is the unbounded (tan²-type) limit.
    pub fn is_unbounded(&self) -> bool {
        matches!(self.variant, Variant::Gaa { tau, .. } if tau.abs() == 1.0)
    }

    /// Block period: κ for mosaic, 1 otherwise.
    pub fn period(&self) -> u32 {
        match self.variant {
            Variant::Mosaic { kappa, .. } => kappa,
            _ => 1,
        }
    }

    /// sup |V|, for the a-priori spectrum bound ‖H‖ ≤ 2 + sup|V|.
    pub fn potential_bound(&self) -> f64 {
        match self.variant {
            Variant::Amo { lambda } | Variant::Mosaic { lambda, .. } => 2.0 * lambda.abs(),
            Variant::Gaa { lambda, tau } => 2.0 * lambda.abs() / (1.0 - tau.abs()),
            Variant::LongRangeDual { lambda, p } => {
                // |V₃| ≤ (4/λ)(e^{−2p} + e^{−p})/(1 − e^{−p})²
                let e = (-p).exp();
                4.0 / lambda.abs() * (e * e + e) / (1.0 - e).powi(2)
            }
            Variant::Peaky { lambda, .. } => lambda,
        }
    }

    /// Potential sample V(θ + nα) (site-dependent for mosaic).
    pub fn potential(&self, theta: f64, n: i64) -> f64 {
        let phase = theta + n as f64 * self.alpha;
        match self.variant {
            Variant::Amo { lambda } => 2.0 * lambda * cos2pi(phase),
            Variant::Gaa { lambda, tau } => {
                2.0 * lambda * cos2pi(phase) / (1.0 - tau * cos2pi(phase))
            }
            Variant::Mosaic { lambda, kappa } => {
                if n.rem_euclid(kappa as i64) == 0 {
                    2.0 * lambda * cos2pi(phase)
                } else {
                    0.0
                }
            }
            Variant::LongRangeDual { lambda, p } => {
                let e = (-p).exp();
                4.0 / lambda * (-e * e + e * cos2pi(phase)) / (1.0 + e * e - 2.0 * e * cos2pi(phase))
            }
            Variant::Peaky { lambda, k_peak } => {
                let s = (std::f64::consts::PI * phase).sin();
                lambda / (1.0 + 4.0 * k_peak * s * s)
            }
        }
    }
}

fn cos2pi(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x).cos()
}

/// Affine reduction of a potential to GAA form:
/// V(θ) = shift + 2λ̃ cos 2πθ / (1 − τ cos 2πθ), spectra related by E ↦ s·E.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaaReduction {
    pub lambda_eff: f64,
    pub tau: f64,
    pub energy_shift: f64,
    pub energy_scale: f64,
}

impl GaaReduction {
    pub fn gaa_potential(&self, phase: f64) -> f64 {
        self.energy_shift + 2.0 * self.lambda_eff * cos2pi(phase) / (1.0 - self.tau * cos2pi(phase))
    }
}

/// Reduce AMO / GAA / long-range-dual / peaky to GAA form.
pub fn reduce_to_gaa(model: &ModelSpec) -> Result<GaaReduction> {
    match model.variant {
        Variant::Amo { lambda } => Ok(GaaReduction {
            lambda_eff: lambda,
            tau: 0.0,
            energy_shift: 0.0,
            energy_scale: 1.0,
        }),
        Variant::Gaa { lambda, tau } => Ok(GaaReduction {
            lambda_eff: lambda,
            tau,
            energy_shift: 0.0,
            energy_scale: 1.0,
        }),
        Variant::LongRangeDual { lambda, p } => Ok(GaaReduction {
            lambda_eff: p.tanh() / (lambda * p.cosh()),
            tau: 1.0 / p.cosh(),
            energy_shift: -2.0 * (-p).exp() / (lambda * p.cosh()),
            // The hopping model's spectrum is (λ/2)·Σ(V₃).
            energy_scale: lambda / 2.0,
        }),
        Variant::Peaky { lambda, k_peak } => {
            let d = 2.0 * k_peak + 1.0;
            Ok(GaaReduction {
                lambda_eff: lambda * k_peak / (d * d),
                tau: 2.0 * k_peak / d,
                energy_shift: lambda / d,
                energy_scale: 1.0,
            })
        }
        Variant::Mosaic { .. } => Err(Error::NotApplicable(
            "mosaic does not reduce to GAA form".into(),
        )),
    }
}

/// Closed-form Lyapunov exponent asserted on the spectrum.
///
/// Off the spectrum this is still evaluated as a total function; only the
/// joint (in-spectrum ∧ formula) classification is meaningful.
pub fn closed_form_le(model: &ModelSpec, energy: f64) -> f64 {
    match model.variant {
        Variant::Amo { lambda } => lambda.abs().ln().max(0.0),
        Variant::Gaa { lambda, tau } => gaa_le(lambda, tau, energy),
        Variant::Mosaic { lambda, kappa } => {
            let a = crate::cocycle::chebyshev_a(kappa, energy);
            (lambda * a).abs().ln().max(0.0) / kappa as f64
        }
        Variant::LongRangeDual { .. } | Variant::Peaky { .. } => {
            let red = reduce_to_gaa(model).expect("reducible variant");
            gaa_le(red.lambda_eff, red.tau, energy - red.energy_shift)
        }
    }
}

/// L = max{ ln[(|τE+2λ| + √((τE+2λ)²−4τ²)) / (2(1+√(1−τ²)))], 0 }.
///
/// When (τE+2λ)² < 4τ² the eigenvalue pair is complex with modulus |τ|, so
/// the ln argument becomes |τ|/(1+√(1−τ²)) < 1 and the max clamps to 0.
/// |τ| = 1 uses the unbounded-limit form with √((E+2λτ)²−4).
fn gaa_le(lambda: f64, tau: f64, energy: f64) -> f64 {
    if tau.abs() >= 1.0 {
        let t = energy + 2.0 * lambda * tau;
        let disc = t * t - 4.0;
        if disc <= 0.0 {
            return 0.0;
        }
        return (((t.abs() + disc.sqrt()) / 2.0).ln()).max(0.0);
    }
    if tau == 0.0 {
        return lambda.abs().ln().max(0.0);
    }
    let t = tau * energy + 2.0 * lambda;
    let disc = t * t - 4.0 * tau * tau;
    let denom = 2.0 * (1.0 + (1.0 - tau * tau).sqrt());
    if disc <= 0.0 {
        // complex pair: modulus |τ|, always below the denominator scale
        return (tau.abs() * 2.0 / denom).ln().max(0.0);
    }
    ((t.abs() + disc.sqrt()) / denom).ln().max(0.0)
}

/// Predicted mobility edges: the critical relation plus its real roots
/// inside the a-priori spectrum bound.
#[derive(Debug, Clone, Serialize)]
pub struct MePrediction {
    pub relation: String,
    pub critical_energies: Vec<f64>,
}

pub fn me_prediction(model: &ModelSpec) -> MePrediction {
    match model.variant {
        Variant::Amo { lambda } => MePrediction {
            relation: format!("|lambda| = 1 (no energy-dependent ME; lambda = {lambda})"),
            critical_energies: vec![],
        },
        Variant::Gaa { lambda, tau } => {
            let mut roots = vec![];
            if tau != 0.0 {
                roots.push(2.0 * (1.0 - lambda.abs()) / (lambda.signum() * tau));
            }
            MePrediction {
                relation: "sgn(lambda) tau E = 2(1 - |lambda|)".into(),
                critical_energies: roots,
            }
        }
        Variant::Mosaic { lambda, kappa } => MePrediction {
            relation: format!("|lambda a_{kappa}(E)| = 1"),
            critical_energies: mosaic_critical_energies(lambda, kappa),
        },
        Variant::LongRangeDual { lambda, p } => MePrediction {
            relation: "sgn(lambda) E = 2 cosh p - 2/|lambda|".into(),
            critical_energies: vec![lambda.signum() * (2.0 * p.cosh() - 2.0 / lambda.abs())],
        },
        Variant::Peaky { k_peak, .. } => MePrediction {
            relation: "E = 2 + 1/K".into(),
            critical_energies: vec![2.0 + 1.0 / k_peak],
        },
    }
}

/// Real roots of a_κ(E) = ±1/λ inside the a-priori bound, found by a sign
/// scan plus bisection and a Newton polish.
fn mosaic_critical_energies(lambda: f64, kappa: u32) -> Vec<f64> {
    use crate::cocycle::chebyshev_a;
    let bound = 2.0 + 2.0 * lambda.abs() + 1e-9;
    let mut roots: Vec<f64> = Vec::new();
    for target in [1.0 / lambda, -1.0 / lambda] {
        let f = |e: f64| chebyshev_a(kappa, e) - target;
        let steps = 40_000usize;
        let h = 2.0 * bound / steps as f64;
        let mut prev_e = -bound;
        let mut prev_f = f(prev_e);
        for i in 1..=steps {
            let e = -bound + i as f64 * h;
            let fe = f(e);
            if prev_f == 0.0 {
                roots.push(prev_e);
            } else if prev_f * fe < 0.0 {
                let (mut lo, mut hi) = (prev_e, e);
                let (mut flo, _) = (prev_f, fe);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if flo * fm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_e = e;
            prev_f = fe;
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
}
