//! Determinant sequences, restricted Green's functions, (ξ,k)-regularity of
//! sites, and structural identities of the localization machinery: the
//! transfer-matrix/determinant relation, the GAA reflection/degree lemma, the
//! mosaic determinant recurrences, and ε-uniformity of interpolation nodes.

use crate::cocycle::{mat_mul, mat_norm, Cocycle, Mat2};
use crate::models::{ModelSpec, Variant};
use crate::{Error, Result};
use serde::Serialize;

const TAU2PI: f64 = 2.0 * std::f64::consts::PI;

/// A real number stored as sign · e^{ln_abs}, immune to overflow in long
/// determinant recurrences.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogSigned {
    /// −1, 0 or 1
    pub sign: i8,
    /// ln of the magnitude; −∞ when sign = 0
    pub ln_abs: f64,
}

impl LogSigned {
    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            LogSigned { sign: 0, ln_abs: f64::NEG_INFINITY }
        } else {
            LogSigned { sign: if x > 0.0 { 1 } else { -1 }, ln_abs: x.abs().ln() }
        }
    }

    /// Back to f64 (may overflow to ±∞ for huge magnitudes).
    pub fn value(&self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }

    /// Signed ratio self / other as f64.
    pub fn ratio(&self, other: &LogSigned) -> f64 {
        (self.sign * other.sign) as f64 * (self.ln_abs - other.ln_abs).exp()
    }
}

/// P_k = det[(H−E)|[0,k−1]] and Q_k = det[(H−E)|[1,k]] for k = 0..kmax, via
/// the tridiagonal three-term recurrence in rescaled arithmetic.
#[derive(Debug, Clone)]
pub struct DeterminantSequence {
    pub p: Vec<LogSigned>,
    pub q: Vec<LogSigned>,
    pub energy: f64,
    pub theta: f64,
}

/// Determinant recurrence d_k = (V(start+k−1) − E) d_{k−1} − d_{k−2} with
/// rescaling; returns d_0..d_kmax.
fn det_recurrence(
    model: &ModelSpec,
    theta: f64,
    energy: f64,
    start: i64,
    kmax: usize,
) -> Vec<LogSigned> {
    let mut out = Vec::with_capacity(kmax + 1);
    let (mut prev, mut cur) = (0.0_f64, 1.0_f64); // d_{−1} = 0, d_0 = 1
    let mut offset = 0.0_f64; // common log factor
    out.push(LogSigned::from_f64(1.0));
    for k in 1..=kmax {
        let v = model.potential(theta, start + k as i64 - 1);
        let next = (v - energy) * cur - prev;
        prev = cur;
        cur = next;
        let scale = prev.abs().max(cur.abs());
        if scale > 1e120 {
            prev /= scale;
            cur /= scale;
            offset += scale.ln();
        }
        let mut ls = LogSigned::from_f64(cur);
        ls.ln_abs += offset;
        out.push(ls);
    }
    out
}

pub fn det_sequences(
    model: &ModelSpec,
    theta: f64,
    energy: f64,
    kmax: usize,
) -> Result<DeterminantSequence> {
    if kmax < 2 {
        return Err(Error::Domain("det_sequences: kmax must be at least 2".into()));
    }
    Ok(DeterminantSequence {
        p: det_recurrence(model, theta, energy, 0, kmax),
        q: det_recurrence(model, theta, energy, 1, kmax),
        energy,
        theta,
    })
}

/// Max entrywise deviation between the renormalized k-step transfer product
/// and its determinant form (−1)^k [[P_k, Q_{k−1}], [−P_{k−1}, −Q_{k−2}]],
/// both scaled to unit max-norm. Valid up to k where the log form holds.
pub fn transfer_identity_residual(
    model: &ModelSpec,
    theta: f64,
    energy: f64,
    k: usize,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain("transfer_identity_residual: k >= 2".into()));
    }
    let seq = det_sequences(model, theta, energy, k)?;
    // log-form matrix entries with the (−1)^k factor folded into signs
    let flip = if k % 2 == 0 { 1 } else { -1 };
    let entries: [LogSigned; 4] = [
        seq.p[k],
        seq.q[k - 1],
        LogSigned { sign: -seq.p[k - 1].sign, ln_abs: seq.p[k - 1].ln_abs },
        LogSigned { sign: -seq.q[k - 2].sign, ln_abs: seq.q[k - 2].ln_abs },
    ];
    let max_ln = entries
        .iter()
        .map(|e| e.ln_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = entries
        .iter()
        .map(|e| (flip * e.sign) as f64 * (e.ln_abs - max_ln).exp())
        .collect();
    let det_form: Mat2 = [[scaled[0], scaled[1]], [scaled[2], scaled[3]]];

    // renormalized direct product
    let cocycle = Cocycle::one_step(*model, energy);
    let mut prod: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut _ln = 0.0;
    for n in 0..k as i64 {
        prod = mat_mul(&cocycle.matrix(theta, n), &prod);
        let norm = mat_norm(&prod);
        _ln += norm.ln();
        for row in prod.iter_mut() {
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
    }
    let norm = mat_norm(&prod);
    let mut residual = 0.0_f64;
    for r in 0..2 {
        for c in 0..2 {
            residual = residual.max((prod[r][c] / norm - det_form[r][c]).abs());
        }
    }
    Ok(residual)
}

/// Boundary Green's values of the Dirichlet restriction to [n₁, n₂] at an
/// interior site n, by determinant ratios, cross-checked against a direct
/// solve.
#[derive(Debug, Clone, Serialize)]
pub struct GreenEvaluation {
    pub n1: i64,
    pub n2: i64,
    pub site: i64,
    pub energy: f64,
    /// G(n, n₁) with sign
    pub g_left: f64,
    /// G(n, n₂) with sign
    pub g_right: f64,
    /// relative disagreement between ratio and direct-solve values
    pub cross_check: f64,
}

pub fn green(
    model: &ModelSpec,
    theta: f64,
    energy: f64,
    n1: i64,
    n2: i64,
    n: i64,
) -> Result<GreenEvaluation> {
    if !(n1 <= n && n <= n2) {
        return Err(Error::Domain(format!("site {n} outside [{n1}, {n2}]")));
    }
    let len = (n2 - n1 + 1) as usize;
    // forward[j] = det over [n1, n1+j−1]; backward[j] = det over [n2−j+1, n2]
    let forward = det_recurrence(model, theta, energy, n1, len);
    let diag_rev: Vec<f64> = (0..len)
        .map(|j| model.potential(theta, n2 - j as i64))
        .collect();
    let backward = {
        // same recurrence run from the right end inward
        let mut out = Vec::with_capacity(len + 1);
        let (mut prev, mut cur) = (0.0_f64, 1.0_f64);
        let mut offset = 0.0_f64;
        out.push(LogSigned::from_f64(1.0));
        for item in diag_rev.iter().take(len) {
            let next = (item - energy) * cur - prev;
            prev = cur;
            cur = next;
            let scale = prev.abs().max(cur.abs());
            if scale > 1e120 {
                prev /= scale;
                cur /= scale;
                offset += scale.ln();
            }
            let mut ls = LogSigned::from_f64(cur);
            ls.ln_abs += offset;
            out.push(ls);
        }
        out
    };

    let total = forward[len];
    let scale_ln = forward
        .iter()
        .map(|e| e.ln_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    if total.sign == 0 || total.ln_abs < scale_ln + (1e-12_f64).ln() {
        let gap = nearest_restriction_eigenvalue_gap(model, theta, energy, n1, len);
        return Err(Error::Singular(format!(
            "restriction to [{n1}, {n2}] is near-singular at E={energy}: eigenvalue gap {gap:.3e}"
        )));
    }

    // G(i, j) = (−1)^{i+j} Δ_{n1,min−1} Δ_{max+1,n2} / Δ  (hopping entries 1)
    let left_idx = (n - n1) as usize; // Δ_{n+1,n2} = backward over n2−n sites
    let delta_right = backward[(n2 - n) as usize];
    let delta_left = forward[left_idx]; // Δ_{n1,n−1}
    let sign_ln = |a: &LogSigned| a.ratio(&total);
    let parity = |d: i64| if d % 2 == 0 { 1.0 } else { -1.0 };
    let g_left = parity(n - n1) * sign_ln(&delta_right);
    let g_right = parity(n2 - n) * sign_ln(&delta_left);

    // direct tridiagonal solves for cross-validation
    let diag: Vec<f64> = (0..len)
        .map(|j| model.potential(theta, n1 + j as i64))
        .collect();
    let mut cross_check = 0.0_f64;
    for (col, expect) in [(0usize, g_left), (len - 1, g_right)] {
        let mut b = vec![0.0; len];
        b[col] = 1.0;
        let x = crate::spectrum::solve_tridiagonal(&diag, energy, &b)?;
        let direct = x[(n - n1) as usize];
        let denom = expect.abs().max(direct.abs()).max(1e-300);
        cross_check = cross_check.max((direct - expect).abs() / denom);
    }
    if cross_check > 1e-6 {
        return Err(Error::Convergence(format!(
            "Green ratio and direct solve disagree (relative {cross_check:.3e})"
        )));
    }
    Ok(GreenEvaluation {
        n1,
        n2,
        site: n,
        energy,
        g_left,
        g_right,
        cross_check,
    })
}

fn nearest_restriction_eigenvalue_gap(
    model: &ModelSpec,
    theta: f64,
    energy: f64,
    n1: i64,
    len: usize,
) -> f64 {
    let diag: Vec<f64> = (0..len)
        .map(|j| model.potential(theta, n1 + j as i64))
        .collect();
    let op = crate::spectrum::TridiagonalOperator { diagonal: diag };
    op.eigenvalues()
        .iter()
        .map(|e| (e - energy).abs())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegularityFlag {
    Regular,
    Singular,
    /// every admissible window was near-singular
    Undecidable,
}

/// (ξ,k)-regularity verdict for one site.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub site: i64,
    pub scale: usize,
    pub xi: f64,
    pub flag: RegularityFlag,
    /// witness window when regular
    pub window: Option<(i64, i64)>,
}

/// Scans windows [n₁, n₁+k−1] ∋ n with margins |n − nᵢ| ≥ k/7 at stride
/// max(1, k/50); the site is regular iff some window gives both boundary
/// Green's values below e^{−ξ|n−nᵢ|}.
pub fn classify_site(
    model: &ModelSpec,
    theta: f64,
    energy: f64,
    n: i64,
    k: usize,
    xi: f64,
) -> Result<RegularityReport> {
    if k < 7 {
        return Err(Error::Domain("classify_site: k must be at least 7".into()));
    }
    let margin = (k as f64 / 7.0).ceil() as i64;
    let k_i = k as i64;
    let lo = n - (k_i - 1) + margin;
    let hi = n - margin;
    if lo > hi {
        return Err(Error::Domain("classify_site: no admissible window".into()));
    }
    let stride = (k / 50).max(1) as i64;
    let mut any_computed = false;
    let mut n1 = lo;
    while n1 <= hi {
        let n2 = n1 + k_i - 1;
        match green(model, theta, energy, n1, n2, n) {
            Ok(g) => {
                any_computed = true;
                let ok_left = g.g_left.abs() < (-xi * (n - n1) as f64).exp();
                let ok_right = g.g_right.abs() < (-xi * (n2 - n) as f64).exp();
                if ok_left && ok_right {
                    return Ok(RegularityReport {
                        site: n,
                        scale: k,
                        xi,
                        flag: RegularityFlag::Regular,
                        window: Some((n1, n2)),
                    });
                }
            }
            Err(Error::Singular(_)) => {}
            Err(e) => return Err(e),
        }
        n1 += stride;
    }
    Ok(RegularityReport {
        site: n,
        scale: k,
        xi,
        flag: if any_computed {
            RegularityFlag::Singular
        } else {
            RegularityFlag::Undecidable
        },
        window: None,
    })
}

/// Reflection symmetry and degree certification of g_k(θ) = Q_k(θ) ·
/// Π_{j=1..k} (1 − τ cos 2π(θ+jα)) for the GAA model: g_k is symmetric about
/// θ = −(k+1)α/2 and a trigonometric polynomial of degree ≤ k.
/// Returns (max reflection asymmetry, max above-degree-k Fourier amplitude
/// relative to the largest amplitude).
pub fn gaa_structure_check(
    model: &ModelSpec,
    energy: f64,
    k: usize,
    grid: usize,
) -> Result<(f64, f64)> {
    let (_lambda, tau) = match model.variant {
        Variant::Gaa { lambda, tau } if tau.abs() < 1.0 => (lambda, tau),
        Variant::Gaa { .. } => {
            return Err(Error::Domain("gaa_structure_check needs |tau| < 1".into()))
        }
        _ => return Err(Error::Domain("gaa_structure_check needs a GAA model".into())),
    };
    if grid <= 4 * k {
        return Err(Error::Domain(format!(
            "grid {grid} must exceed 4k = {} (aliasing guard)",
            4 * k
        )));
    }
    let alpha = model.alpha;
    let g_of = |theta: f64| -> f64 {
        let q = det_recurrence(model, theta, energy, 1, k)[k];
        let mut ln_weight = 0.0;
        for j in 1..=k {
            ln_weight += (1.0 - tau * (TAU2PI * (theta + j as f64 * alpha)).cos()).ln();
        }
        q.sign as f64 * (q.ln_abs + ln_weight).exp()
    };

    // reflection about θ* = −(k+1)α/2
    let shift = (k + 1) as f64 * alpha / 2.0;
    let probes = 64usize;
    let mut asymmetry = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..probes {
        let t = i as f64 / probes as f64;
        let a = g_of(t - shift);
        let b = g_of(-t - shift);
        asymmetry = asymmetry.max((a - b).abs());
        scale = scale.max(a.abs());
    }
    let asymmetry = asymmetry / scale.max(1e-300);

    // degree certification via DFT of grid samples
    let samples: Vec<f64> = (0..grid).map(|i| g_of(i as f64 / grid as f64)).collect();
    let mut max_amp = 0.0_f64;
    let mut max_high = 0.0_f64;
    for m in 0..grid {
        let (mut re, mut im) = (0.0_f64, 0.0_f64);
        for (i, &s) in samples.iter().enumerate() {
            let phase = TAU2PI * (m * i % grid) as f64 / grid as f64;
            re += s * phase.cos();
            im -= s * phase.sin();
        }
        let amp = (re * re + im * im).sqrt();
        max_amp = max_amp.max(amp);
        let mode = m.min(grid - m);
        if mode > k {
            max_high = max_high.max(amp);
        }
    }
    Ok((asymmetry, max_high / max_amp.max(1e-300)))
}

/// The three κ=2 mosaic determinant identities
///   E·Q_{2k−2}(θ) = −Q_{2k−1}(θ) − Q_{2k−3}(θ)
///   E·P_{2k}(θ) = −Q_{2k+1}(θ−2α) − Q_{2k−1}(θ)
///   E²·P_{2k−1}(θ) = Q_{2k+1}(θ−2α) + Q_{2k−1}(θ) + Q_{2k−1}(θ−2α) + Q_{2k−3}(θ)
/// as residuals relative to the magnitude of the two sides.
pub fn mosaic_recurrence_check(
    model: &ModelSpec,
    energy: f64,
    theta: f64,
    k: usize,
) -> Result<[f64; 3]> {
    match model.variant {
        Variant::Mosaic { kappa: 2, .. } => {}
        _ => return Err(Error::Domain("mosaic_recurrence_check needs kappa = 2".into())),
    }
    if k < 2 {
        return Err(Error::Domain("mosaic_recurrence_check: k >= 2".into()));
    }
    let kmax = 2 * k + 1;
    let seq = det_sequences(model, theta, energy, kmax)?;
    let seq_shift = det_sequences(model, theta - 2.0 * model.alpha, energy, kmax)?;
    let q = |j: usize| seq.q[j].value();
    let qs = |j: usize| seq_shift.q[j].value();
    let p = |j: usize| seq.p[j].value();

    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
    let r1 = rel(energy * q(2 * k - 2), -q(2 * k - 1) - q(2 * k - 3));
    let r2 = rel(energy * p(2 * k), -qs(2 * k + 1) - q(2 * k - 1));
    let r3 = rel(
        energy * energy * p(2 * k - 1),
        qs(2 * k + 1) + q(2 * k - 1) + qs(2 * k - 1) + q(2 * k - 3),
    );
    Ok([r1, r2, r3])
}

/// ε-uniformity of a node set {θⱼ}: smallest ε with
/// max_{x∈[−1,1]} max_i Π_{j≠i} |x−xⱼ|/|xᵢ−xⱼ| ≤ e^{kε}, xⱼ = cos 2πθⱼ,
/// the max taken over 4(k+1) Chebyshev points plus endpoints.
pub fn uniformity(nodes: &[f64]) -> Result<f64> {
    let k = nodes.len().checked_sub(1).filter(|&k| k >= 1).ok_or_else(|| {
        Error::Domain("uniformity: need at least 2 nodes".into())
    })?;
    let xs: Vec<f64> = nodes.iter().map(|t| (TAU2PI * t).cos()).collect();
    for i in 0..xs.len() {
        for j in 0..i {
            if (xs[i] - xs[j]).abs() <= 1e-12 {
                return Err(Error::Singular(format!(
                    "uniformity: projected nodes {i} and {j} coincide"
                )));
            }
        }
    }
    let denom: Vec<f64> = (0..xs.len())
        .map(|i| {
            (0..xs.len())
                .filter(|&j| j != i)
                .map(|j| (xs[i] - xs[j]).abs().ln())
                .sum::<f64>()
        })
        .collect();
    let m = 4 * (k + 1);
    let mut grid: Vec<f64> = (0..m)
        .map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * m) as f64).cos())
        .collect();
    grid.push(-1.0);
    grid.push(1.0);
    let mut max_log = f64::NEG_INFINITY;
    for &x in &grid {
        let terms: Vec<f64> = xs.iter().map(|xj| (x - xj).abs().max(1e-300).ln()).collect();
        let total: f64 = terms.iter().sum();
        for i in 0..xs.len() {
            max_log = max_log.max(total - terms[i] - denom[i]);
        }
    }
    Ok(max_log / k as f64)
}

/// The two-block node sequence around sites 0 and y used in the localization
/// argument: k = 2⌊3y/8⌋+1 points θ + mα with m running over the two blocks.
pub fn two_block_nodes(theta: f64, alpha: f64, y: i64) -> (usize, Vec<f64>) {
    let k = 2 * (3 * y / 8) + 1;
    let n1 = -(3 * k / 4);
    let n2 = y - 3 * k / 4;
    let half = ((k + 1) / 2) as usize;
    let mut nodes = Vec::with_capacity(k as usize + 1);
    for j in 0..=k {
        let m = if (j as usize) < half {
            n1 + (k - 1) / 2 + j
        } else {
            n2 + (k - 1) / 2 + j - half as i64
        };
        nodes.push(theta + m as f64 * alpha);
    }
    (k as usize, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden_mean;
    use rand::{Rng, SeedableRng};

    fn amo(lambda: f64) -> ModelSpec {
        ModelSpec::new(Variant::Amo { lambda }, golden_mean()).unwrap()
    }

    fn mosaic2(lambda: f64) -> ModelSpec {
        ModelSpec::new(Variant::Mosaic { lambda, kappa: 2 }, golden_mean()).unwrap()
    }

    #[test]
    fn empty_determinant_is_one() {
        let seq = det_sequences(&amo(1.0), 0.2, 0.5, 4).unwrap();
        assert_eq!(seq.p[0].value(), 1.0);
        assert_eq!(seq.q[0].value(), 1.0);
    }

    #[test]
    fn free_zero_energy_pattern() {
        // V ≡ 0, E = 0: P_k = −P_{k−2} gives 1, 0, −1, 0, 1, …
        let seq = det_sequences(&amo(0.0), 0.0, 0.0, 8).unwrap();
        let expect = [1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0];
        for (k, &e) in expect.iter().enumerate() {
            assert_eq!(seq.p[k].value(), e, "k={k}");
        }
    }

    #[test]
    fn transfer_identity_small_k() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let model = amo(2.0);
        for _ in 0..20 {
            let theta: f64 = rng.gen();
            let e: f64 = rng.gen_range(-4.0..4.0);
            let r = transfer_identity_residual(&model, theta, e, 5).unwrap();
            assert!(r < 1e-10, "residual {r}");
        }
    }

    #[test]
    fn transfer_identity_long_log_form() {
        for k in [60usize, 1000, 10_000] {
            let r = transfer_identity_residual(&amo(2.0), 0.371, 0.3, k).unwrap();
            assert!(r < 1e-8, "k={k} residual {r}");
        }
    }

    #[test]
    fn green_single_site() {
        let model = amo(1.5);
        let e = 0.4;
        let g = green(&model, 0.3, e, 7, 7, 7).unwrap();
        let expect = 1.0 / (model.potential(0.3, 7) - e);
        assert!((g.g_left - expect).abs() < 1e-12);
        assert!((g.g_right - expect).abs() < 1e-12);
    }

    #[test]
    fn green_ratio_matches_direct_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let model = amo(1.3);
        let mut checked = 0;
        while checked < 100 {
            let theta: f64 = rng.gen();
            let e: f64 = rng.gen_range(-4.0..4.0);
            let n1: i64 = rng.gen_range(-30..30);
            let len: i64 = rng.gen_range(3..=64);
            let n2 = n1 + len - 1;
            let n = rng.gen_range(n1..=n2);
            match green(&model, theta, e, n1, n2, n) {
                Ok(g) => {
                    assert!(g.cross_check < 1e-9, "cross check {}", g.cross_check);
                    checked += 1;
                }
                Err(Error::Singular(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn green_reconstruction_from_boundary() {
        // u an eigenvector of a larger truncation, [n1, n2] interior:
        // u(n) = −G(n, n1) u(n1−1) − G(n, n2) u(n2+1).
        let model = amo(1.2);
        let theta = 0.21;
        let size = 200usize;
        let op = crate::spectrum::TridiagonalOperator::from_model(&model, theta, size).unwrap();
        let eigs = op.eigenvalues();
        let e = eigs[size / 3];
        let u = op.eigenvector(e, &[]).unwrap();
        let (n1, n2) = (60i64, 140i64);
        let mut worst = 0.0_f64;
        for n in [70i64, 100, 130] {
            let g = green(&model, theta, e, n1, n2, n).unwrap();
            let residual = (u[n as usize]
                + g.g_left * u[(n1 - 1) as usize]
                + g.g_right * u[(n2 + 1) as usize])
                .abs();
            worst = worst.max(residual);
        }
        assert!(worst < 1e-8, "reconstruction residual {worst}");
    }

    #[test]
    fn site_margin_filter() {
        // windows must keep |n − nᵢ| ≥ k/7; with k = 14, margin 2, a window
        // placing n at distance 1 from an edge is never a witness.
        let model = amo(2.0);
        let report = classify_site(&model, 0.37, 0.3, 100, 14, 0.01).unwrap();
        if let Some((n1, n2)) = report.window {
            assert!(100 - n1 >= 2 && n2 - 100 >= 2);
        }
    }

    #[test]
    fn supercritical_sites_regular() {
        // Mosaic kappa=2, lambda=2, supercritical energy: most deep sites are
        // regular at xi below the Lyapunov exponent.
        let model = mosaic2(2.0);
        let e = crate::spectrum::in_spectrum(&model, 1.0, 600, 8).unwrap();
        assert!(e.in_spectrum);
        let le = crate::models::closed_form_le(&model, 1.0);
        assert!(le > 0.0);
        let xi = 0.8 * le;
        let mut regular = 0;
        let total = 20;
        for i in 0..total {
            let n = 300 + 5 * i;
            let r = classify_site(&model, 0.37, 1.0, n, 200, xi).unwrap();
            if r.flag == RegularityFlag::Regular {
                regular += 1;
            }
        }
        assert!(regular * 10 >= total * 9, "{regular}/{total} regular");
    }

    #[test]
    fn free_sites_singular() {
        // L = 0: Green's values decay only polynomially, so no exponential
        // witness exists.
        let model = amo(0.0);
        for n in [100i64, 137, 250] {
            let r = classify_site(&model, 0.0, 0.3, n, 100, 0.1).unwrap();
            assert_ne!(r.flag, RegularityFlag::Regular, "site {n}");
        }
    }

    #[test]
    fn regularity_monotone_in_xi() {
        let model = mosaic2(2.0);
        let r_strong = classify_site(&model, 0.37, 1.0, 320, 200, 0.4).unwrap();
        if r_strong.flag == RegularityFlag::Regular {
            let r_weak = classify_site(&model, 0.37, 1.0, 320, 200, 0.2).unwrap();
            assert_eq!(r_weak.flag, RegularityFlag::Regular);
        }
    }

    #[test]
    fn gaa_symmetry_and_degree() {
        let model = ModelSpec::new(Variant::Gaa { lambda: 1.0, tau: 0.5 }, golden_mean()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..3 {
            let e: f64 = rng.gen_range(-3.0..3.0);
            let (asym, high) = gaa_structure_check(&model, e, 32, 160).unwrap();
            assert!(asym < 1e-9, "asymmetry {asym}");
            assert!(high < 1e-9, "high-mode amplitude {high}");
        }
    }

    #[test]
    fn gaa_degeneration_tau_zero() {
        let model = ModelSpec::new(Variant::Gaa { lambda: 1.0, tau: 0.0 }, golden_mean()).unwrap();
        let (asym, high) = gaa_structure_check(&model, 0.7, 16, 80).unwrap();
        assert!(asym < 1e-9 && high < 1e-9);
    }

    #[test]
    fn gaa_check_rejects_small_grid() {
        let model = ModelSpec::new(Variant::Gaa { lambda: 1.0, tau: 0.5 }, golden_mean()).unwrap();
        assert!(gaa_structure_check(&model, 0.0, 32, 128).is_err());
    }

    #[test]
    fn mosaic_recurrences_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let lambda: f64 = rng.gen_range(0.2..2.5);
            let model = mosaic2(lambda);
            let e: f64 = rng.gen_range(-2.5..2.5);
            let theta: f64 = rng.gen();
            let k: usize = rng.gen_range(2..=40);
            let rs = mosaic_recurrence_check(&model, e, theta, k).unwrap();
            for (i, r) in rs.iter().enumerate() {
                assert!(*r < 1e-10, "identity {i} residual {r} (lambda={lambda}, E={e}, k={k})");
            }
        }
    }

    #[test]
    fn mosaic_recurrence_zero_energy() {
        // E = 0 collapses the first identity to Q_{2k−1} = −Q_{2k−3}.
        let model = mosaic2(1.5);
        let seq = det_sequences(&model, 0.31, 0.0, 21).unwrap();
        for k in 2..=10usize {
            let a = seq.q[2 * k - 1].value();
            let b = seq.q[2 * k - 3].value();
            assert!((a + b).abs() < 1e-10 * a.abs().max(1.0), "k={k}");
        }
    }

    #[test]
    fn uniformity_rejects_repeated_node() {
        assert!(uniformity(&[0.1, 0.2, 0.9]).is_err()); // cos2π·0.1 = cos2π·0.9
    }

    #[test]
    fn uniformity_chebyshev_nodes() {
        let k = 32usize;
        let nodes: Vec<f64> = (0..=k)
            .map(|j| (2 * j + 1) as f64 / (4 * (k + 1)) as f64)
            .collect();
        let eps = uniformity(&nodes).unwrap();
        assert!(eps <= 0.05, "eps_min = {eps}");
    }

    #[test]
    fn uniformity_two_block_construction() {
        // theta in the non-resonant phase set, golden alpha, k = 201.
        let alpha = golden_mean();
        let theta = 0.1318;
        let (member, _) = crate::arithmetic::in_theta_set(theta, alpha, 2.0, 1e-9, 10_000);
        assert!(member);
        let (k, nodes) = two_block_nodes(theta, alpha, 268);
        assert_eq!(k, 201);
        assert_eq!(nodes.len(), 202);
        let eps = uniformity(&nodes).unwrap();
        assert!(eps <= 0.1, "eps_min = {eps}");
    }

    #[test]
    fn jensen_average_limit() {
        // (1/k) Σ ln(1 − τ cos 2π(θ+jα)) → ln((1+√(1−τ²))/2)
        let alpha = golden_mean();
        let k = 100_000usize;
        for tau in [0.3, 0.7] {
            let mut sum = 0.0;
            for j in 1..=k {
                sum += (1.0 - tau * (TAU2PI * (0.11 + j as f64 * alpha)).cos()).ln();
            }
            let avg = sum / k as f64;
            let expect = ((1.0 + (1.0 - tau * tau as f64).sqrt()) / 2.0).ln();
            assert!((avg - expect).abs() < 1e-2, "tau={tau}: {avg} vs {expect}");
        }
    }
}
