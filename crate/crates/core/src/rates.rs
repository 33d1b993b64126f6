//! Expected squared distance (in units of `init_scale²`) of the disk methods
//! under the uniform disk law.
//!
//! All sums are accumulated in log space with a running maximum shift so that
//! `t` up to a few thousand stays usable even though the individual terms
//! leave double range; the `ln_*` variants return the logarithm directly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::recurrence::fmt_f64;

fn check(center: f64, radius: f64) -> Result<()> {
    if !(center.is_finite() && center > 0.0) {
        return Err(invalid("center", format!("must be positive, got {center}")));
    }
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(invalid("radius", format!("must be nonnegative, got {radius}")));
    }
    if radius >= center {
        return Err(invalid("radius", format!("R < C is required, got R = {radius} and C = {center}")));
    }
    Ok(())
}

/// Log-sum-exp over a stream, shifting by the running maximum and
/// compensating the scaled partial sums.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
    comp: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }

    fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.max {
            let rescale = (self.max - ln_term).exp();
            self.sum *= rescale;
            self.comp *= rescale;
            self.max = ln_term;
        }
        // Kahan summation of exp(ln_term − max).
        let y = (ln_term - self.max).exp() - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `ln(C^{2k}/K²_{k,R}) = 2k·ln(C/R) + ln(k+1)`.
fn ln_inverse_gd(center: f64, radius: f64, k: usize) -> f64 {
    2.0 * k as f64 * (center / radius).ln() + ((k + 1) as f64).ln()
}

/// `ln ξ_opt(t) = −ln Σ_{k=0}^{t} C^{2k}/K²_{k,R}`.
pub fn ln_xi_opt(center: f64, radius: f64, t: usize) -> Result<f64> {
    check(center, radius)?;
    if radius == 0.0 {
        return Ok(if t == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let mut acc = LogSum::new();
    for k in 0..=t {
        acc.add(ln_inverse_gd(center, radius, k));
    }
    Ok(-acc.ln())
}

/// `ln ξ_asymp(t)` where, with `s = (R/C)²`,
/// `ξ_asymp(t) = (1 − s)² Σ_{k=1}^{t} (K²_{k,R}/C^{2k}) s^{2(t−k)} + s^{2t}`.
pub fn ln_xi_asymp(center: f64, radius: f64, t: usize) -> Result<f64> {
    check(center, radius)?;
    if t == 0 {
        return Ok(0.0);
    }
    if radius == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_s = 2.0 * (radius / center).ln();
    let ln_one_minus_s = (-(ln_s.exp())).ln_1p();
    let mut acc = LogSum::new();
    for k in 1..=t {
        acc.add(2.0 * ln_one_minus_s - ln_inverse_gd(center, radius, k) + 2.0 * (t - k) as f64 * ln_s);
    }
    acc.add(2.0 * t as f64 * ln_s);
    Ok(acc.ln())
}

/// `ln ξ_GD(t) = ln(K²_{t,R}/C^{2t})`.
pub fn ln_xi_gd(center: f64, radius: f64, t: usize) -> Result<f64> {
    check(center, radius)?;
    if radius == 0.0 {
        return Ok(if t == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(-ln_inverse_gd(center, radius, t))
}

/// Expected error of the optimal averaged method after `t` steps.
pub fn xi_opt(center: f64, radius: f64, t: usize) -> Result<f64> {
    Ok(ln_xi_opt(center, radius, t)?.exp())
}

/// Expected error of the constant-averaging method after `t` steps.
pub fn xi_asymp(center: f64, radius: f64, t: usize) -> Result<f64> {
    Ok(ln_xi_asymp(center, radius, t)?.exp())
}

/// Expected error of gradient descent with step `1/C` after `t` steps.
pub fn xi_gd(center: f64, radius: f64, t: usize) -> Result<f64> {
    Ok(ln_xi_gd(center, radius, t)?.exp())
}

/// `lim ξ_opt/ξ_GD = 1 − R²/C²`.
pub fn limiting_ratio(center: f64, radius: f64) -> Result<f64> {
    check(center, radius)?;
    Ok(1.0 - (radius / center).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub t: usize,
    pub xi_opt: f64,
    pub xi_asymp: f64,
    pub xi_gd: f64,
}

/// Predictions for `t = 0..=iters`.
pub fn predictions(center: f64, radius: f64, iters: usize) -> Result<Vec<RatePrediction>> {
    check(center, radius)?;
    let mut out = Vec::with_capacity(iters + 1);
    // ξ_opt reuses one running sum instead of recomputing it for every t.
    let mut opt = LogSum::new();
    for t in 0..=iters {
        if radius > 0.0 {
            opt.add(ln_inverse_gd(center, radius, t));
        }
        let xi_opt = if radius > 0.0 {
            (-opt.ln()).exp()
        } else {
            xi_gd(center, radius, t)?
        };
        out.push(RatePrediction {
            t,
            xi_opt,
            xi_asymp: xi_asymp(center, radius, t)?,
            xi_gd: xi_gd(center, radius, t)?,
        });
    }
    Ok(out)
}

/// Writes predictions in the trajectory CSV schema, one method per rate
/// (`theory:opt`, `theory:asymp`, `theory:gd`), scaled by `init_scale²`.
pub fn write_predictions_csv<W: Write>(
    experiment: &str,
    preds: &[RatePrediction],
    init_scale: f64,
    w: W,
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["experiment", "method", "seed", "t", "dist", "field_evals", "predicted"])?;
    let s2 = init_scale * init_scale;
    let series: [(&str, fn(&RatePrediction) -> f64); 3] = [
        ("theory:asymp", |p| p.xi_asymp),
        ("theory:gd", |p| p.xi_gd),
        ("theory:opt", |p| p.xi_opt),
    ];
    for (name, get) in series {
        for p in preds {
            wr.write_record([
                experiment.to_string(),
                name.to_string(),
                "0".to_string(),
                p.t.to_string(),
                String::new(),
                p.t.to_string(),
                fmt_f64(s2 * get(p)),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn hand_values() {
        assert_eq!(xi_opt(2.0, 1.0, 0).unwrap(), 1.0);
        assert!(close(xi_opt(2.0, 1.0, 1).unwrap(), 1.0 / 9.0, 1e-14));
        assert!(close(xi_opt(2.0, 1.0, 2).unwrap(), 1.0 / 57.0, 1e-14));
        assert_eq!(xi_asymp(2.0, 1.0, 0).unwrap(), 1.0);
        assert!(close(xi_asymp(2.0, 1.0, 1).unwrap(), 17.0 / 128.0, 1e-14));
        assert_eq!(xi_gd(2.0, 1.0, 0).unwrap(), 1.0);
        assert!(close(xi_gd(2.0, 1.0, 2).unwrap(), 1.0 / 48.0, 1e-14));
        assert!(close(limiting_ratio(2.0, 1.0).unwrap(), 0.75, 1e-15));
        assert_eq!(limiting_ratio(2.0, 0.0).unwrap(), 1.0);
        assert!(limiting_ratio(2.0, 2.0 - 1e-9).unwrap() < 1e-8);
        assert!(xi_opt(1.0, 1.0, 3).is_err());
        assert!(xi_asymp(1.0, 2.0, 3).is_err());
        assert!(xi_gd(1.0, 1.0, 3).is_err());
    }

    /// ξ_asymp is the squared norm of the asymptotic method's polynomial
    /// `s^t + (1 − s) Σ_{k=1}^t (1 − λ/C)^k s^{t−k}` under the disk law,
    /// computed here by direct quadrature.
    #[test]
    fn asymp_matches_polynomial_quadrature() {
        use crate::polynomial::ResidualPolynomial;
        use crate::spectra::{expected_error_quadrature, DiskDistribution, SpectralModel};
        let (c, r) = (2.0, 1.0);
        let s: f64 = (r / c) * (r / c);
        let model = SpectralModel::Disk(DiskDistribution::uniform(c, r).unwrap());
        for t in 0..12 {
            let mut coeffs = vec![0.0; t + 1];
            coeffs[0] = s.powi(t as i32);
            let mut pow = vec![1.0];
            for k in 1..=t {
                pow = crate::polynomial::poly_mul_linear(&pow, 1.0, -1.0 / c);
                crate::polynomial::poly_add_scaled(&mut coeffs, &pow, (1.0 - s) * s.powi((t - k) as i32));
            }
            let p = ResidualPolynomial::new(coeffs).unwrap();
            let q = expected_error_quadrature(&p, &model, 1.0).unwrap();
            assert!(close(xi_asymp(c, r, t).unwrap(), q, 1e-9), "t={t}");
        }
    }

    #[test]
    fn opt_times_weight_sum_is_one() {
        let w = crate::recurrence::disk_weights(2.0, 1.0, 300).unwrap();
        for t in 0..=299 {
            let prod = (ln_xi_opt(2.0, 1.0, t).unwrap() + w.ln_big_b(t + 1)).exp();
            assert!((prod - 1.0).abs() <= 1e-12, "t={t}");
        }
    }

    #[test]
    fn ordering_and_monotonicity() {
        for &(c, r) in &[(2.0, 1.0), (10.0, 9.0), (5.0, 1.0)] {
            let mut prev = (0.0, 0.0, 0.0);
            for t in 0..=1000 {
                let o = ln_xi_opt(c, r, t).unwrap();
                let a = ln_xi_asymp(c, r, t).unwrap();
                let g = ln_xi_gd(c, r, t).unwrap();
                assert!(o <= a + 1e-12, "({c},{r}) t={t}");
                if t == 0 {
                    assert_eq!((o, a, g), (0.0, 0.0, 0.0));
                } else {
                    assert!(o < 0.0 && a < 0.0 && g < 0.0);
                    if t >= 2 {
                        assert!(o < prev.0 && a < prev.1 && g < prev.2, "({c},{r}) t={t}");
                    }
                }
                prev = (o, a, g);
            }
        }
    }

    #[test]
    fn limiting_ratios() {
        let g = ln_xi_gd(2.0, 1.0, 200).unwrap();
        let ro = (ln_xi_opt(2.0, 1.0, 200).unwrap() - g).exp();
        let ra = (ln_xi_asymp(2.0, 1.0, 200).unwrap() - g).exp();
        assert!(close(ro, 0.75, 0.02));
        assert!(close(ra, 0.75, 0.02));
    }

    #[test]
    fn prediction_table_consistent() {
        let p = predictions(2.0, 1.0, 40).unwrap();
        for row in &p {
            assert!(close(row.xi_opt, xi_opt(2.0, 1.0, row.t).unwrap(), 1e-13));
        }
        let mut buf = Vec::new();
        write_predictions_csv("disk", &p, 1.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 41);
        assert!(text.contains("disk,theory:opt,0,1,,1,1.11111111111111"), "{text}");
    }
}
