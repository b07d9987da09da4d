//! Log-domain normal CDF helpers.

use libm::erfc;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Scaled complementary error function `exp(t²)·erfc(t)`.
pub fn erfcx(t: f64) -> f64 {
    if t < 3.0 {
        return (t * t).exp() * erfc(t);
    }
    // Continued fraction t + (1/2)/(t + 1/(t + (3/2)/(t + ...))), evaluated
    // backwards. 80 terms reach full precision for t >= 3.
    let mut f = t;
    for k in (1..=80).rev() {
        f = t + (k as f64 * 0.5) / f;
    }
    FRAC_1_SQRT_PI / f
}

/// `ln Φ(z)` for the standard normal CDF, accurate deep into the lower tail.
pub fn log_ndtr(z: f64) -> f64 {
    let t = -z * std::f64::consts::FRAC_1_SQRT_2;
    if z > 5.0 {
        (-0.5 * erfc(-t)).ln_1p()
    } else if t < 3.0 {
        (0.5 * erfc(t)).ln()
    } else {
        (0.5 * erfcx(t)).ln() - t * t
    }
}

/// `ln φ(z)` for the standard normal density.
pub fn log_npdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Inverse Mills ratio `φ(z)/Φ(z)`.
pub fn mills(z: f64) -> f64 {
    (log_npdf(z) - log_ndtr(z)).exp()
}

/// Two-sided normal tail probability `P(|Z| ≥ |z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_branches_agree() {
        for &t in &[3.0_f64, 3.5, 4.0, 5.0] {
            let direct = (t * t).exp() * erfc(t);
            let mut f = t;
            for k in (1..=80).rev() {
                f = t + (k as f64 * 0.5) / f;
            }
            let cf = FRAC_1_SQRT_PI / f;
            assert!((direct - cf).abs() / direct < 1e-12, "t={t}: {direct} vs {cf}");
        }
    }

    #[test]
    fn log_ndtr_matches_direct_and_asymptotic() {
        for &z in &[-4.0, -1.0, 0.0, 1.0, 4.0] {
            let direct = (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln();
            assert!((log_ndtr(z) - direct).abs() < 1e-13);
        }
        // Mills ratio asymptote: ln Φ(z) ≈ ln φ(z) − ln(−z) for z → −∞.
        let z = -40.0_f64;
        let asym = log_npdf(z) - (-z).ln() + (1.0 - 1.0 / (z * z)).ln();
        assert!((log_ndtr(z) - asym).abs() < 1e-5);
        assert!(log_ndtr(-1e3).is_finite());
        assert!(log_ndtr(40.0) == 0.0 || log_ndtr(40.0).abs() < 1e-300);
    }

    #[test]
    fn mills_ratio_tail() {
        assert!((mills(-50.0) / 50.0 - 1.0).abs() < 1e-3);
        assert!(mills(10.0) < 1e-20);
    }

    #[test]
    fn two_sided() {
        assert!((two_sided_p(0.0) - 1.0).abs() < 1e-15);
        assert!((two_sided_p(1.959_963_984_540_054) - 0.05).abs() < 1e-12);
    }
}
