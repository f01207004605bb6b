//! Finite-volume spectral tools: tridiagonal restrictions with Dirichlet
//! boundary conditions, Sturm-sequence eigenvalues, inverse-iteration
//! eigenvectors, the integrated density of states, the Thouless formula,
//! inverse participation ratios, and spectrum-membership tests.

use crate::models::{ModelSpec, Variant};
use crate::{Error, Result};
use serde::Serialize;

/// Tridiagonal restriction of H = Δ + V to a box of size N with Dirichlet
/// boundary conditions; all off-diagonal entries are 1.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    pub diagonal: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn from_model(model: &ModelSpec, theta: f64, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Domain(format!("box size {size} too small")));
        }
        Ok(TridiagonalOperator {
            diagonal: (0..size as i64).map(|n| model.potential(theta, n)).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0usize;
        let mut q = 1.0_f64;
        for (i, &d) in self.diagonal.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - 1.0 / q };
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues, sorted ascending, by bisection on the Sturm count.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.size();
        // Gershgorin bounds: off-diagonals are 1 (row sums at most 2).
        let lo0 = self.diagonal.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0;
        let hi0 = self.diagonal.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let (mut lo, mut hi) = (lo0, hi0);
            // invariant: count_below(lo) <= k < count_below(hi)
            for _ in 0..120 {
                let mid = 0.5 * (lo + hi);
                if self.count_below(mid) <= k {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    /// Eigenvector by inverse iteration at the given eigenvalue, normalized
    /// in ℓ². Vectors for clustered eigenvalues can be re-orthogonalized by
    /// passing the already-computed cluster members.
    pub fn eigenvector(&self, eigenvalue: f64, orthogonal_to: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.size();
        let shift = eigenvalue + 1e-12 * (1.0 + eigenvalue.abs());
        let mut v: Vec<f64> = (0..n)
            .map(|i| ((i as f64 * 0.7391 + 0.113).sin()).abs() + 0.01)
            .collect();
        normalize(&mut v);
        let mut residual = f64::INFINITY;
        for _ in 0..8 {
            let mut w = solve_shifted(&self.diagonal, shift, &v)?;
            for u in orthogonal_to {
                let dot: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= dot * ui;
                }
            }
            normalize(&mut w);
            v = w;
            residual = self.residual(eigenvalue, &v);
            if residual < 1e-10 {
                break;
            }
        }
        if residual > 1e-8 {
            return Err(Error::Convergence(format!(
                "inverse iteration residual {residual} at eigenvalue {eigenvalue}"
            )));
        }
        Ok(v)
    }

    /// ‖(H − E)ψ‖ for a normalized ψ.
    pub fn residual(&self, eigenvalue: f64, psi: &[f64]) -> f64 {
        let n = self.size();
        let mut s = 0.0;
        for i in 0..n {
            let mut r = (self.diagonal[i] - eigenvalue) * psi[i];
            if i > 0 {
                r += psi[i - 1];
            }
            if i + 1 < n {
                r += psi[i + 1];
            }
            s += r * r;
        }
        s.sqrt()
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(norm > 0.0);
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Solve (T − E·I) x = b for tridiagonal T with the given diagonal and unit
/// off-diagonals.
pub(crate) fn solve_tridiagonal(diagonal: &[f64], energy: f64, b: &[f64]) -> Result<Vec<f64>> {
    solve_shifted(diagonal, energy, b)
}

/// Solve (T − shift·I) x = b for tridiagonal T (off-diagonals 1) by Gaussian
/// elimination with partial pivoting; fill-in is one extra superdiagonal.
fn solve_shifted(diagonal: &[f64], shift: f64, b: &[f64]) -> Result<Vec<f64>> {
    let n = diagonal.len();
    // bands: main d, first super u1, second super u2; subdiagonal eliminated.
    let mut d: Vec<f64> = diagonal.iter().map(|&x| x - shift).collect();
    let mut u1 = vec![1.0_f64; n.saturating_sub(1)];
    let mut u2 = vec![0.0_f64; n.saturating_sub(2)];
    let mut rhs = b.to_vec();
    for i in 0..n - 1 {
        let sub = 1.0_f64; // subdiagonal entry below row i
        if d[i].abs() >= sub.abs() {
            if d[i] == 0.0 {
                d[i] = 1e-300;
            }
            let m = sub / d[i];
            d[i + 1] -= m * u1[i];
            if i + 1 < n - 1 {
                u1[i + 1] -= m * if i < u2.len() { u2[i] } else { 0.0 };
            }
            rhs[i + 1] -= m * rhs[i];
        } else {
            // swap rows i and i+1, then eliminate
            let (di, u1i) = (d[i], u1[i]);
            let u2i = if i < u2.len() { u2[i] } else { 0.0 };
            d[i] = sub;
            u1[i] = d[i + 1];
            let new_u2 = if i + 1 < n - 1 { u1[i + 1] } else { 0.0 };
            if i < u2.len() {
                u2[i] = new_u2;
            }
            let m = di / sub;
            d[i + 1] = u1i - m * u1[i];
            if i + 1 < n - 1 {
                u1[i + 1] = u2i - m * new_u2;
            }
            rhs.swap(i, i + 1);
            rhs[i + 1] -= m * rhs[i];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = 1e-300;
    }
    // back substitution
    let mut x = vec![0.0_f64; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("shifted solve produced non-finite entries".into()));
    }
    Ok(x)
}

/// A-priori spectrum enclosure [−2 − sup|V|, 2 + sup|V|].
pub fn spectrum_bounds(model: &ModelSpec) -> (f64, f64) {
    let b = 2.0 + model.potential_bound();
    (-b, b)
}

/// Empirical integrated density of states built from the merged eigenvalue
/// multiset over a θ grid.
#[derive(Debug, Clone, Serialize)]
pub struct IdsTable {
    /// sorted merged eigenvalues
    pub energies: Vec<f64>,
    pub box_size: usize,
    pub theta_samples: usize,
}

pub fn ids_table(model: &ModelSpec, box_size: usize, theta_samples: usize) -> Result<IdsTable> {
    if theta_samples == 0 {
        return Err(Error::Domain("theta_samples must be positive".into()));
    }
    let mut energies = Vec::with_capacity(box_size * theta_samples);
    for j in 0..theta_samples {
        let theta = j as f64 / theta_samples as f64 + 0.5 / theta_samples as f64;
        let op = TridiagonalOperator::from_model(model, theta, box_size)?;
        energies.extend(op.eigenvalues());
    }
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(IdsTable {
        energies,
        box_size,
        theta_samples,
    })
}

impl IdsTable {
    /// N(E): fraction of states at or below E.
    pub fn ids(&self, energy: f64) -> f64 {
        let idx = self.energies.partition_point(|&e| e <= energy);
        idx as f64 / self.energies.len() as f64
    }

    /// Thouless formula L(E) = ∫ ln|E − E′| dN(E′), with each atom replaced
    /// by the exact average of ln|E − ·| over its spacing cell so the
    /// logarithmic singularity is integrated rather than sampled.
    pub fn thouless_le(&self, energy: f64) -> f64 {
        let es = &self.energies;
        let m = es.len();
        let mut total = 0.0;
        for j in 0..m {
            let left = if j == 0 {
                es[0] - 0.5 * (es[1] - es[0])
            } else {
                0.5 * (es[j - 1] + es[j])
            };
            let right = if j == m - 1 {
                es[m - 1] + 0.5 * (es[m - 1] - es[m - 2])
            } else {
                0.5 * (es[j] + es[j + 1])
            };
            let width = (right - left).max(1e-12);
            total += log_abs_integral(energy - right, energy - left) / width;
        }
        total / m as f64
    }

    pub fn mean_spacing(&self) -> f64 {
        let m = self.energies.len();
        (self.energies[m - 1] - self.energies[0]) / (m as f64 - 1.0)
    }
}

/// ∫ ln|u| du over [a, b] (antiderivative u ln|u| − u, continuous at 0).
fn log_abs_integral(a: f64, b: f64) -> f64 {
    let f = |u: f64| if u == 0.0 { 0.0 } else { u * u.abs().ln() - u };
    f(b) - f(a)
}

/// Inverse participation ratio Σψ⁴ / (Σψ²)² of a box eigenvector.
pub fn ipr(psi: &[f64]) -> f64 {
    let s2: f64 = psi.iter().map(|x| x * x).sum();
    let s4: f64 = psi.iter().map(|x| x * x * x * x).sum();
    s4 / (s2 * s2)
}

/// Finite-volume spectrum membership: E is accepted when some θ in a grid of
/// `theta_samples` boxes has an eigenvalue within 10 mean level spacings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumMembership {
    pub in_spectrum: bool,
    pub min_distance: f64,
    pub tolerance: f64,
}

pub fn in_spectrum(
    model: &ModelSpec,
    energy: f64,
    box_size: usize,
    theta_samples: usize,
) -> Result<SpectrumMembership> {
    let probe = spectrum_probe(model, box_size, theta_samples)?;
    Ok(probe.membership(energy))
}

/// Precomputed merged eigenvalue list for repeated membership queries at
/// many energies (the eigenvalues do not depend on E).
#[derive(Debug, Clone)]
pub struct SpectrumProbe {
    energies: Vec<f64>,
    tolerance: f64,
    theta_samples: usize,
}

pub fn spectrum_probe(
    model: &ModelSpec,
    box_size: usize,
    theta_samples: usize,
) -> Result<SpectrumProbe> {
    let mut energies = Vec::with_capacity(box_size * theta_samples);
    for j in 0..theta_samples {
        let theta = j as f64 / theta_samples as f64 + 0.5 / theta_samples as f64;
        let op = TridiagonalOperator::from_model(model, theta, box_size)?;
        energies.extend(op.eigenvalues());
    }
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // 20 mean spacings of the merged multiset: wide enough to expect a
    // crowd of eigenvalues inside the spectrum, narrow enough to resolve
    // spectral gaps down to that scale.
    let spacing =
        (energies[energies.len() - 1] - energies[0]) / (energies.len() as f64 - 1.0);
    Ok(SpectrumProbe {
        energies,
        tolerance: 20.0 * spacing,
        theta_samples,
    })
}

impl SpectrumProbe {
    /// An energy counts as in-spectrum when eigenvalues of the merged θ-grid
    /// multiset crowd it from both sides (half a θ sample's worth within the
    /// tolerance window on each side). Isolated Dirichlet edge states inside
    /// spectral gaps fail the density requirement; points just off a band
    /// edge fail it on the gap side.
    pub fn membership(&self, energy: f64) -> SpectrumMembership {
        let lo = self.energies.partition_point(|&e| e < energy - self.tolerance);
        let mid = self.energies.partition_point(|&e| e < energy);
        let hi = self.energies.partition_point(|&e| e <= energy + self.tolerance);
        let need = (self.theta_samples / 2).max(1);
        let mut min_distance = f64::INFINITY;
        if mid < self.energies.len() {
            min_distance = min_distance.min((self.energies[mid] - energy).abs());
        }
        if mid > 0 {
            min_distance = min_distance.min((self.energies[mid - 1] - energy).abs());
        }
        SpectrumMembership {
            in_spectrum: mid - lo >= need && hi - mid >= need,
            min_distance,
            tolerance: self.tolerance,
        }
    }

    /// Numeric spectrum extent (smallest and largest box eigenvalue).
    pub fn bounds(&self) -> (f64, f64) {
        (self.energies[0], self.energies[self.energies.len() - 1])
    }
}

/// Candidate reducibility energies E_l = 2 cos(πl/κ), l = 1..κ−1.
pub fn special_energies(model: &ModelSpec) -> Result<Vec<f64>> {
    match model.variant {
        Variant::Mosaic { kappa, .. } => Ok((1..kappa)
            .map(|l| 2.0 * (std::f64::consts::PI * l as f64 / kappa as f64).cos())
            .collect()),
        _ => Err(Error::NotApplicable("special energies are mosaic-only".into())),
    }
}

/// Exact mirror conjugation for the even-κ mosaic: with D = diag((−1)ⁿ),
/// D H_θ D = −H_{θ+1/2}. Returns the max-norm residual of the identity on
/// the box.
pub fn mirror_symmetry_residual(model: &ModelSpec, theta: f64, size: usize) -> Result<f64> {
    let kappa = match model.variant {
        Variant::Mosaic { kappa, .. } if kappa % 2 == 0 => kappa,
        Variant::Mosaic { .. } => {
            return Err(Error::NotApplicable(
                "mirror conjugation holds for even kappa only".into(),
            ))
        }
        _ => return Err(Error::NotApplicable("mirror symmetry is mosaic-only".into())),
    };
    let _ = kappa;
    let h = TridiagonalOperator::from_model(model, theta, size)?;
    let h_shift = TridiagonalOperator::from_model(model, theta + 0.5, size)?;
    // D H D keeps the diagonal and flips off-diagonals to −1; −H_{θ+1/2} has
    // off-diagonals −1 and diagonal −V(θ+1/2). So the residual reduces to the
    // diagonal identity V(θ, n) = −V(θ+1/2, n).
    let mut residual = 0.0_f64;
    for i in 0..size {
        residual = residual.max((h.diagonal[i] + h_shift.diagonal[i]).abs());
    }
    Ok(residual)
}
