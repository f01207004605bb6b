//! Continued fractions, Diophantine certificates, resonant-phase tests and
//! the small-divisor sine-sum estimate.

use crate::{Error, Result};

/// Distance from `x` to the nearest integer.
pub fn dist_to_integers(x: f64) -> f64 {
    let f = x - x.round();
    f.abs()
}

/// Continued-fraction expansion of a real number in (0,1), with convergents.
#[derive(Debug, Clone)]
pub struct ContinuedFraction {
    pub x: f64,
    pub partial_quotients: Vec<i64>,
    /// p_0..p_depth with seeds p0=0, p1=1.
    pub p: Vec<i64>,
    /// q_0..q_depth with seeds q0=1, q1=a1.
    pub q: Vec<i64>,
    /// Expansion hit a (numerically) zero remainder before the requested depth.
    pub terminated: bool,
}

impl ContinuedFraction {
    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// Convergent denominators q_1..q_k as usize, skipping the q_0 = 1 seed.
    pub fn denominators(&self) -> Vec<i64> {
        self.q[1..].to_vec()
    }
}

/// Expand `x` ∈ (0,1) to at most `depth` partial quotients.
///
/// Quotients come from integer Euclid on a dyadic approximation of `x`
/// (63 fractional bits). When a convergent lands within 10⁻¹⁵ of `x`, the
/// input is treated as rational: the expansion is redone canonically on
/// that convergent and flagged `terminated`.
pub fn cf_expand(x: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("cf_expand: x={x} not in (0,1)")));
    }
    if depth == 0 {
        return Err(Error::Domain("cf_expand: depth must be positive".into()));
    }

    // Exact Euclid on round(x * 2^63) / 2^63.
    const SCALE: i128 = 1 << 63;
    let mut num: i128 = (x * SCALE as f64).round() as i128;
    let mut den: i128 = SCALE;

    let mut a: Vec<i64> = Vec::with_capacity(depth);
    let mut p: Vec<i64> = vec![0, 1];
    let mut q: Vec<i64> = vec![1];
    let mut rational: Option<(i64, i64)> = None;

    for k in 1..=depth {
        if num == 0 {
            rational = Some((p[k - 1], q[k - 1]));
            break;
        }
        let ak = (den / num) as i64;
        let r = den % num;
        den = num;
        num = r;

        a.push(ak);
        let (pk, qk) = if k == 1 {
            (1, ak)
        } else {
            let pk = ak
                .checked_mul(p[k - 1])
                .and_then(|v| v.checked_add(p[k - 2]))
                .ok_or_else(|| Error::Domain("cf_expand: convergent overflow".into()))?;
            let qk = ak
                .checked_mul(q[k - 1])
                .and_then(|v| v.checked_add(q[k - 2]))
                .ok_or_else(|| Error::Domain("cf_expand: convergent overflow".into()))?;
            (pk, qk)
        };
        if k == 1 {
            q.push(qk);
        } else {
            p.push(pk);
            q.push(qk);
        }
        if (x - pk as f64 / qk as f64).abs() < 1e-15 {
            rational = Some((pk, qk));
            break;
        }
    }
    p.truncate(a.len() + 1);

    if let Some((rp, rq)) = rational {
        // Canonical expansion of the detected rational rp/rq.
        let mut a = Vec::new();
        let mut p = vec![0i64, 1];
        let mut q = vec![1i64];
        let (mut num, mut den) = (rp, rq);
        let mut k = 0usize;
        while num != 0 && k < depth {
            k += 1;
            let ak = den / num;
            let r = den % num;
            den = num;
            num = r;
            a.push(ak);
            if k == 1 {
                q.push(ak);
            } else {
                p.push(ak * p[k - 1] + p[k - 2]);
                q.push(ak * q[k - 1] + q[k - 2]);
            }
        }
        p.truncate(a.len() + 1);
        return Ok(ContinuedFraction {
            x,
            partial_quotients: a,
            p,
            q,
            terminated: true,
        });
    }

    Ok(ContinuedFraction {
        x,
        partial_quotients: a,
        p,
        q,
        terminated: false,
    })
}

/// Two-sided best-approximation check 1/(2q_{n+1}) ≤ ‖q_n α‖ ≤ 1/q_{n+1}
/// for every computed n. Returns (holds, minimal slack).
pub fn best_approx_check(cf: &ContinuedFraction) -> Result<(bool, f64)> {
    if cf.terminated {
        return Err(Error::NotApplicable(
            "best_approx_check: terminated (rational) expansion".into(),
        ));
    }
    if cf.depth() < 2 {
        return Err(Error::Domain("best_approx_check: depth < 2".into()));
    }
    let alpha = cf.x;
    let mut min_slack = f64::INFINITY;
    let mut ok = true;
    // q[n] pairs with q[n+1]; q vector is [q_0, q_1, ..]. Uses |q_nα − p_n|
    // with the matching convergent numerator (for n = 0 the nearest integer
    // to q_0 α need not be p_0).
    for n in 0..cf.q.len() - 1 {
        let qn = cf.q[n] as f64;
        let qn1 = cf.q[n + 1] as f64;
        let dist = (qn * alpha - cf.p[n] as f64).abs();
        let lower = 1.0 / (2.0 * qn1);
        let upper = 1.0 / qn1;
        let slack = (dist - lower).min(upper - dist);
        min_slack = min_slack.min(slack);
        if slack < 0.0 {
            ok = false;
        }
    }
    Ok((ok, min_slack))
}

/// Minimizing index and centered log-sine sum over one denominator block:
/// S = Σ_{l≠l₀} ln|sin π(x+lα)| + (q_n−1)·ln 2 with l₀ the minimizer.
pub fn min_sin_sum(x: f64, alpha: f64, q_n: usize) -> Result<(usize, f64)> {
    if q_n == 0 {
        return Err(Error::Domain("min_sin_sum: q_n must be positive".into()));
    }
    let mut l0 = 0usize;
    let mut min_abs = f64::INFINITY;
    let mut terms = Vec::with_capacity(q_n);
    for l in 0..q_n {
        let s = (std::f64::consts::PI * (x + l as f64 * alpha)).sin().abs();
        if s < 1e-300 {
            return Err(Error::Singular(format!(
                "min_sin_sum: sin π(x+lα) vanishes at l={l}"
            )));
        }
        if s < min_abs {
            min_abs = s;
            l0 = l;
        }
        terms.push(s);
    }
    let mut sum = 0.0;
    for (l, s) in terms.iter().enumerate() {
        if l != l0 {
            sum += s.ln();
        }
    }
    sum += (q_n as f64 - 1.0) * std::f64::consts::LN_2;
    Ok((l0, sum))
}

/// Membership test for Θ(η) = {θ : ‖2θ − kα‖ ≥ η/|k|^σ for all k ≠ 0},
/// checked on 0 < |k| ≤ kmax. Returns (member, sup of admissible η).
pub fn in_theta_set(theta: f64, alpha: f64, sigma: f64, eta: f64, kmax: i64) -> (bool, f64) {
    let mut eta_max = f64::INFINITY;
    for k in 1..=kmax {
        for sk in [k, -k] {
            let d = dist_to_integers(2.0 * theta - sk as f64 * alpha);
            let scaled = d * (k as f64).powf(sigma);
            eta_max = eta_max.min(scaled);
        }
    }
    (eta_max >= eta, eta_max)
}

/// Finite-range Diophantine certificate: ‖kα‖ ≥ γ/|k|^σ for 0 < |k| ≤ kmax.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiophantineProfile {
    pub gamma: f64,
    pub sigma: f64,
    pub verified_range: i64,
    pub holds_on_range: bool,
}

pub fn diophantine_check(alpha: f64, gamma: f64, sigma: f64, kmax: i64) -> DiophantineProfile {
    let mut holds = true;
    for k in 1..=kmax {
        let d = dist_to_integers(k as f64 * alpha);
        if d < gamma / (k as f64).powf(sigma) {
            holds = false;
            break;
        }
    }
    DiophantineProfile {
        gamma,
        sigma,
        verified_range: kmax,
        holds_on_range: holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden_mean;

    #[test]
    fn golden_mean_expansion() {
        let cf = cf_expand(golden_mean(), 8).unwrap();
        assert_eq!(cf.partial_quotients, vec![1; 8]);
        assert_eq!(cf.q, vec![1, 1, 2, 3, 5, 8, 13, 21, 34]);
        assert!(!cf.terminated);
    }

    #[test]
    fn sqrt2_minus_one_expansion() {
        let cf = cf_expand(2.0_f64.sqrt() - 1.0, 4).unwrap();
        assert_eq!(cf.partial_quotients, vec![2, 2, 2, 2]);
        assert_eq!(cf.q, vec![1, 2, 5, 12, 29]);
    }

    #[test]
    fn rational_terminates() {
        let cf = cf_expand(0.3, 10).unwrap();
        assert_eq!(cf.partial_quotients, vec![3, 3]);
        assert!(cf.terminated);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(cf_expand(1.5, 4).is_err());
        assert!(cf_expand(0.0, 4).is_err());
    }

    #[test]
    fn determinant_identity_exact() {
        let cf = cf_expand(golden_mean(), 20).unwrap();
        for k in 1..cf.p.len() - 1 {
            let det = cf.p[k + 1] * cf.q[k] - cf.p[k] * cf.q[k + 1];
            assert_eq!(det.abs(), 1, "k={k}");
        }
    }

    #[test]
    fn convergent_quality() {
        for x in [golden_mean(), 2.0_f64.sqrt() - 1.0, std::f64::consts::PI - 3.0] {
            let cf = cf_expand(x, 12).unwrap();
            for k in 1..cf.q.len() - 1 {
                let approx = cf.p[k] as f64 / cf.q[k] as f64;
                let bound = 1.0 / (cf.q[k] as f64 * cf.q[k + 1] as f64);
                assert!((x - approx).abs() < bound, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn convergents_alternate_around_x() {
        let x = golden_mean();
        let cf = cf_expand(x, 10).unwrap();
        for k in 1..cf.q.len() - 1 {
            let e0 = cf.p[k] as f64 / cf.q[k] as f64 - x;
            let e1 = cf.p[k + 1] as f64 / cf.q[k + 1] as f64 - x;
            assert!(e0 * e1 < 0.0, "k={k}");
        }
    }

    #[test]
    fn best_approx_golden() {
        let cf = cf_expand(golden_mean(), 10).unwrap();
        let (ok, slack) = best_approx_check(&cf).unwrap();
        assert!(ok, "min slack {slack}");
        // Spot check the q_n = 5 row: ‖5α‖ ≈ 0.0901699, bounds [1/16, 1/8].
        let d = dist_to_integers(5.0 * golden_mean());
        assert!((d - 0.0901699).abs() < 1e-6);
        assert!((1.0 / 16.0..=1.0 / 8.0).contains(&d));
    }

    #[test]
    fn best_approx_sqrt2() {
        let cf = cf_expand(2.0_f64.sqrt() - 1.0, 5).unwrap();
        let (ok, _) = best_approx_check(&cf).unwrap();
        assert!(ok);
    }

    #[test]
    fn best_approx_rejects_terminated() {
        let cf = cf_expand(0.3, 5).unwrap();
        assert!(best_approx_check(&cf).is_err());
    }

    #[test]
    fn sin_sum_trivial_block() {
        let (_, s) = min_sin_sum(0.1, golden_mean(), 1).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn sin_sum_bound_golden() {
        let alpha = golden_mean();
        for q in [13usize, 34, 89, 233, 610, 1597, 10946] {
            for x in [0.013, 0.1, 0.37] {
                let (_, s) = min_sin_sum(x, alpha, q).unwrap();
                assert!(
                    s.abs() <= 10.0 * (q as f64).ln(),
                    "q={q} x={x} S={s}"
                );
            }
        }
    }

    #[test]
    fn theta_set_exact_resonances() {
        let alpha = golden_mean();
        let (ok, _) = in_theta_set(alpha / 2.0, alpha, 2.0, 1e-6, 100);
        assert!(!ok);
        let (ok, _) = in_theta_set((1.0 + alpha) / 2.0, alpha, 2.0, 1e-6, 100);
        assert!(!ok);
    }

    #[test]
    fn theta_set_generic_phase() {
        use rand::{Rng, SeedableRng};
        let alpha = golden_mean();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let theta: f64 = rng.gen();
        let (ok, eta_max) = in_theta_set(theta, alpha, 2.0, 1e-9, 10_000);
        assert!(ok);
        assert!(eta_max > 0.0);
    }

    #[test]
    fn theta_set_monotone_in_eta() {
        let alpha = golden_mean();
        let theta = 0.1318;
        let (_, eta_max) = in_theta_set(theta, alpha, 2.0, 0.0, 1000);
        let (at_max, _) = in_theta_set(theta, alpha, 2.0, eta_max, 1000);
        let (below, _) = in_theta_set(theta, alpha, 2.0, eta_max * 0.5, 1000);
        assert!(at_max);
        assert!(below);
        let (above, _) = in_theta_set(theta, alpha, 2.0, eta_max * 1.01, 1000);
        assert!(!above);
    }

    #[test]
    fn golden_is_diophantine_on_range() {
        let prof = diophantine_check(golden_mean(), 0.3, 2.0, 10_000);
        assert!(prof.holds_on_range);
    }
}
