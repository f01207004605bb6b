//! Per-energy dynamical classification, numeric mobility-edge detection,
//! coexistence-window verdicts, and phase-diagram sweeps.

use crate::cocycle::{acceleration, lyapunov, lyapunov_complexified, Acceleration, Cocycle,
    LyapunovEstimate};
use crate::models::{self, ModelSpec, Variant};
use crate::spectrum::{spectrum_probe, SpectrumMembership, SpectrumProbe};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Numerical budgets and tolerances for classification.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyConfig {
    /// cocycle iteration length for Lyapunov estimates
    pub steps: u64,
    /// θ offsets averaged per Lyapunov estimate
    pub theta_samples: usize,
    pub seed: u64,
    /// truncation size for spectrum membership
    pub box_size: usize,
    /// θ grid for spectrum membership
    pub spectrum_thetas: usize,
    /// strip offsets for the subcritical test (L(ε) = 0 on a strip)
    pub eps_grid: Vec<f64>,
    /// half-width of the critical band around a predicted critical energy;
    /// 0 disables prediction-based banding (purely numeric labels)
    pub band_halfwidth: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            steps: 30_000,
            theta_samples: 4,
            seed: 7,
            box_size: 1024,
            spectrum_thetas: 16,
            eps_grid: vec![0.02, 0.05, 0.1],
            band_halfwidth: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyClass {
    Subcritical,
    CriticalBand,
    Supercritical,
    OutsideSpectrum,
    Undetermined,
}

impl EnergyClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergyClass::Subcritical => "subcritical",
            EnergyClass::CriticalBand => "critical-band",
            EnergyClass::Supercritical => "supercritical",
            EnergyClass::OutsideSpectrum => "outside-spectrum",
            EnergyClass::Undetermined => "undetermined",
        }
    }
}

/// Classification of one energy with the evidence behind it.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub energy: f64,
    pub class: EnergyClass,
    pub le_numeric: LyapunovEstimate,
    pub le_formula: f64,
    /// L at the ε offsets actually tested (inside the analyticity strip)
    pub le_strip: Vec<(f64, f64)>,
    pub accel: Option<Acceleration>,
    pub membership: SpectrumMembership,
    pub le_tolerance: f64,
}

pub fn classify_energy(
    model: &ModelSpec,
    energy: f64,
    cfg: &ClassifyConfig,
) -> Result<Classification> {
    let probe = spectrum_probe(model, cfg.box_size, cfg.spectrum_thetas)?;
    Ok(classify_with_probe(model, energy, cfg, &probe))
}

/// Classification against a prebuilt spectrum probe (the probe does not
/// depend on the energy, so sweeps build it once).
pub fn classify_with_probe(
    model: &ModelSpec,
    energy: f64,
    cfg: &ClassifyConfig,
    probe: &SpectrumProbe,
) -> Classification {
    let membership = probe.membership(energy);
    let cocycle = Cocycle::one_step(*model, energy);
    let le_numeric = lyapunov(&cocycle, cfg.steps, cfg.theta_samples, cfg.seed);
    let le_formula = models::closed_form_le(model, energy);
    let se = le_numeric.dispersion / (cfg.theta_samples as f64).sqrt();
    let tol = (0.01_f64).max(3.0 * se);
    let positive = le_numeric.value > tol;

    let hw = cocycle.strip_half_width();
    let mut le_strip = Vec::new();
    let mut accel = None;

    let class = if !membership.in_spectrum {
        // outside verdict needs L > 0 and zero acceleration
        let delta = 0.02_f64.min(hw / 8.0);
        let eps = (2.0 * delta).min(hw / 4.0);
        accel = acceleration(&cocycle, eps, delta, cfg.steps, cfg.theta_samples, cfg.seed).ok();
        match (&accel, positive) {
            (Some(a), true) if a.quantized == 0.0 => EnergyClass::OutsideSpectrum,
            _ => EnergyClass::Undetermined,
        }
    } else if near_predicted_edge(model, energy, cfg.band_halfwidth) {
        EnergyClass::CriticalBand
    } else if positive {
        EnergyClass::Supercritical
    } else {
        // L(0) ≈ 0: subcritical iff L stays 0 on a strip
        let mut flat = true;
        let mut tested = false;
        for &eps in &cfg.eps_grid {
            let eps = if eps < 0.9 * hw { eps } else { continue };
            if let Ok(l) = lyapunov_complexified(
                &cocycle,
                eps,
                cfg.steps / 2,
                cfg.theta_samples,
                cfg.seed,
            ) {
                tested = true;
                le_strip.push((eps, l));
                if l > tol.max(0.02) {
                    flat = false;
                }
            }
        }
        if !tested {
            EnergyClass::Undetermined
        } else if flat {
            EnergyClass::Subcritical
        } else {
            EnergyClass::CriticalBand
        }
    };

    Classification {
        energy,
        class,
        le_numeric,
        le_formula,
        le_strip,
        accel,
        membership,
        le_tolerance: tol,
    }
}

fn near_predicted_edge(model: &ModelSpec, energy: f64, halfwidth: f64) -> bool {
    if halfwidth <= 0.0 {
        return false;
    }
    models::me_prediction(model)
        .critical_energies
        .iter()
        .any(|c| (c - energy).abs() < halfwidth)
}

/// One detected subcritical↔supercritical flip.
#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub energy: f64,
    /// energies of the flanking definite cells
    pub below: f64,
    pub above: f64,
    pub nearest_predicted: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeDetection {
    pub crossings: Vec<Crossing>,
    pub diagnostic: String,
}

/// Scans an energy grid for classification flips between in-spectrum cells.
/// Cells without a definite label are skipped; critical-band cells count as
/// the zero-exponent side. Each flip is located by extrapolating e^L from
/// the supercritical flank to 1: e^L is the smooth effective coupling whose
/// unit circle crossing defines the edge, so a least-squares line through
/// the supercritical cells pins the edge even when the flip spans a
/// spectral gap. When too few supercritical cells are available the flip
/// falls back to the midpoint of the flanking cells (`below`/`above`).
pub fn detect_me(model: &ModelSpec, e_grid: &[f64], cfg: &ClassifyConfig) -> Result<MeDetection> {
    if e_grid.len() < 2 {
        return Err(Error::Domain("detect_me: grid needs at least 2 energies".into()));
    }
    let spacing = (e_grid[e_grid.len() - 1] - e_grid[0]) / (e_grid.len() as f64 - 1.0);
    if spacing > 0.01 + 1e-12 {
        return Err(Error::Domain(format!(
            "detect_me: grid spacing {spacing:.4} exceeds 0.01"
        )));
    }
    let probe = spectrum_probe(model, cfg.box_size, cfg.spectrum_thetas)?;
    let cells: Vec<Classification> = e_grid
        .par_iter()
        .map(|&e| classify_with_probe(model, e, cfg, &probe))
        .collect();

    // (energy, is_supercritical, numeric L) for labelled in-spectrum cells
    let definite: Vec<(f64, bool, f64)> = cells
        .iter()
        .filter(|c| {
            c.membership.in_spectrum
                && matches!(
                    c.class,
                    EnergyClass::Subcritical
                        | EnergyClass::CriticalBand
                        | EnergyClass::Supercritical
                )
        })
        .map(|c| {
            (
                c.energy,
                c.class == EnergyClass::Supercritical,
                c.le_numeric.value,
            )
        })
        .collect();
    if definite.is_empty() {
        return Ok(MeDetection {
            crossings: vec![],
            diagnostic: "no in-spectrum cells with a definite label".into(),
        });
    }
    let predicted = models::me_prediction(model);
    let mut crossings = Vec::new();
    for i in 1..definite.len() {
        let (e0, s0, _) = definite[i - 1];
        let (e1, s1, _) = definite[i];
        if s0 != s1 {
            let (super_idx, forward) = if s1 { (i, true) } else { (i - 1, false) };
            let period = model.period() as f64;
            let energy =
                extrapolated_edge(&definite, super_idx, forward, period, e0.min(e1), e0.max(e1))
                    .unwrap_or(0.5 * (e0 + e1));
            let nearest = predicted
                .critical_energies
                .iter()
                .cloned()
                .min_by(|a, b| {
                    (a - energy).abs().partial_cmp(&(b - energy).abs()).unwrap()
                });
            crossings.push(Crossing {
                energy,
                below: e0,
                above: e1,
                nearest_predicted: nearest,
                gap: nearest.map(|p| (p - energy).abs()),
            });
        }
    }
    Ok(MeDetection {
        crossings,
        diagnostic: format!(
            "{} definite cells of {} grid points",
            definite.len(),
            e_grid.len()
        ),
    })
}

/// Least-squares line through e^{κL} over the supercritical cells flanking
/// a flip, solved for e^{κL} = 1 (κL is the per-block exponent, whose
/// exponential is the smooth effective coupling). Walks outward from the flip, keeps at most 30
/// supercritical cells within 0.3 of it, and requires the root to fall
/// strictly between the flanking cells.
fn extrapolated_edge(
    definite: &[(f64, bool, f64)],
    super_idx: usize,
    forward: bool,
    period: f64,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let (e_start, _, _) = definite[super_idx];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut idx = super_idx as isize;
    while idx >= 0 && (idx as usize) < definite.len() && xs.len() < 30 {
        let (e, is_super, le) = definite[idx as usize];
        if (e - e_start).abs() > 0.3 {
            break;
        }
        if is_super {
            xs.push(e);
            ys.push((period * le).exp());
        }
        idx += if forward { 1 } else { -1 };
    }
    if xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    if b.abs() < 1e-12 {
        return None;
    }
    let root = (1.0 - a) / b;
    (root.is_finite() && root > lo && root < hi).then_some(root)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoexistenceCase {
    AllSubcritical,
    AllSupercritical,
    Coexistence,
    Inconclusive,
}

/// Verdict from closed-form sufficient conditions plus a numeric check of
/// whether the predicted critical energies fall inside the box spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct CoexistenceVerdict {
    pub case: CoexistenceCase,
    pub reason: String,
    /// numeric spectrum extent
    pub spectrum_window: (f64, f64),
    /// predicted critical energies inside the window
    pub edges_in_window: Vec<f64>,
}

pub fn coexistence_window(model: &ModelSpec, box_size: usize) -> Result<CoexistenceVerdict> {
    let probe = spectrum_probe(model, box_size, 8)?;
    let (lo, hi) = probe.bounds();
    let edges_in_window: Vec<f64> = models::me_prediction(model)
        .critical_energies
        .iter()
        .cloned()
        .filter(|&e| e > lo && e < hi)
        .collect();

    let (case, reason) = match model.variant {
        Variant::Amo { lambda } => {
            let l = lambda.abs();
            if l < 1.0 {
                (CoexistenceCase::AllSubcritical, format!("|λ| = {l} < 1"))
            } else if l > 1.0 {
                (CoexistenceCase::AllSupercritical, format!("|λ| = {l} > 1"))
            } else {
                (CoexistenceCase::Inconclusive, "critical coupling |λ| = 1".into())
            }
        }
        Variant::Mosaic { lambda, kappa: 2 } => {
            let l = lambda.abs();
            let e_max = lo.abs().max(hi.abs());
            if l > std::f64::consts::SQRT_2 / 2.0 {
                (
                    CoexistenceCase::Coexistence,
                    format!("|λ| = {l} > √2/2: both regimes provably nonempty"),
                )
            } else if l * e_max < 1.0 {
                (
                    CoexistenceCase::AllSubcritical,
                    format!("numeric bound |λ|·max|E| = {:.3} < 1", l * e_max),
                )
            } else {
                (CoexistenceCase::Inconclusive, "no sufficient condition met".into())
            }
        }
        Variant::Mosaic { .. } => (
            CoexistenceCase::Inconclusive,
            "no closed sufficient condition for this κ; see edges_in_window".into(),
        ),
        Variant::Gaa { .. } | Variant::LongRangeDual { .. } | Variant::Peaky { .. } => {
            let red = models::reduce_to_gaa(model)?;
            let (l, t) = (red.lambda_eff.abs(), red.tau.abs());
            if l < (1.0 - t) * (1.0 - t) {
                (
                    CoexistenceCase::AllSubcritical,
                    format!("|λ̃| = {l:.4} < (1−|τ|)² = {:.4}", (1.0 - t) * (1.0 - t)),
                )
            } else if l > (1.0 + t) * (1.0 + t) {
                (
                    CoexistenceCase::AllSupercritical,
                    format!("|λ̃| = {l:.4} > (1+|τ|)² = {:.4}", (1.0 + t) * (1.0 + t)),
                )
            } else if 1.0 - t < l && l < 1.0 + t {
                (
                    CoexistenceCase::Coexistence,
                    format!("1−|τ| = {:.4} < |λ̃| = {l:.4} < 1+|τ| = {:.4}", 1.0 - t, 1.0 + t),
                )
            } else {
                (CoexistenceCase::Inconclusive, "between sufficient conditions".into())
            }
        }
    };
    Ok(CoexistenceVerdict {
        case,
        reason,
        spectrum_window: (lo, hi),
        edges_in_window,
    })
}

/// Phase diagram over an energy × coupling grid.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagram {
    pub energies: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// row-major: cells[i][j] is (λᵢ, Eⱼ)
    pub cells: Vec<Vec<Classification>>,
    /// predicted critical energies per λ (empty when no prediction exists)
    pub predicted: Vec<Vec<f64>>,
}

const SWEEP_CELL_CAP: usize = 1_000_000;

/// Replace the coupling constant of a model, keeping everything else.
pub fn with_lambda(model: &ModelSpec, lambda: f64) -> Result<ModelSpec> {
    let variant = match model.variant {
        Variant::Amo { .. } => Variant::Amo { lambda },
        Variant::Gaa { tau, .. } => Variant::Gaa { lambda, tau },
        Variant::Mosaic { kappa, .. } => Variant::Mosaic { lambda, kappa },
        Variant::LongRangeDual { p, .. } => Variant::LongRangeDual { lambda, p },
        Variant::Peaky { k_peak, .. } => Variant::Peaky { lambda, k_peak },
    };
    ModelSpec::new(variant, model.alpha)
}

pub fn sweep(
    base: &ModelSpec,
    e_grid: &[f64],
    lambdas: &[f64],
    cfg: &ClassifyConfig,
) -> Result<PhaseDiagram> {
    if e_grid.is_empty() || lambdas.is_empty() {
        return Err(Error::Domain("sweep: empty grid".into()));
    }
    let total = e_grid.len() * lambdas.len();
    if total > SWEEP_CELL_CAP {
        return Err(Error::Domain(format!(
            "sweep: {total} cells exceed the {SWEEP_CELL_CAP} budget"
        )));
    }
    let mut cells = Vec::with_capacity(lambdas.len());
    let mut predicted = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let model = with_lambda(base, lambda)?;
        let probe = spectrum_probe(&model, cfg.box_size, cfg.spectrum_thetas)?;
        let mut row: Vec<Classification> = e_grid
            .par_iter()
            .map(|&e| classify_with_probe(&model, e, cfg, &probe))
            .collect();
        // refine cells on label boundaries with a 10× step budget
        let boundary: Vec<usize> = (0..row.len())
            .filter(|&j| {
                (j > 0 && row[j - 1].class != row[j].class)
                    || (j + 1 < row.len() && row[j + 1].class != row[j].class)
            })
            .collect();
        let refined: Vec<(usize, Classification)> = boundary
            .par_iter()
            .map(|&j| {
                let mut fine = cfg.clone();
                fine.steps = cfg.steps * 10;
                (j, classify_with_probe(&model, e_grid[j], &fine, &probe))
            })
            .collect();
        for (j, c) in refined {
            row[j] = c;
        }
        predicted.push(models::me_prediction(&model).critical_energies);
        cells.push(row);
    }
    Ok(PhaseDiagram {
        energies: e_grid.to_vec(),
        lambdas: lambdas.to_vec(),
        cells,
        predicted,
    })
}

/// Evenly spaced grid helper, inclusive of both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n as f64 - 1.0))
        .collect()
}
