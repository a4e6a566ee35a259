use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratlin::rational::to_f64;
use crate::ratlin::Rational;

/// `ε` and the constant `C` standing in for the `O(log ℓ)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionParams {
    pub eps: f64,
    pub c: f64,
}

fn binary_entropy(x: f64) -> f64 {
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// `(1 - H(x)) - (1 - 2x)² / (2 ln 2)`; nonnegative up to rounding.
pub fn entropy_gap(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::input(format!("entropy gap needs 0 < x < 1, got {x}")));
    }
    let d = 1.0 - 2.0 * x;
    Ok(1.0 - binary_entropy(x) - d * d / (2.0 * std::f64::consts::LN_2))
}

fn check_params(p: &CorruptionParams) -> Result<()> {
    if !(p.eps.is_finite() && p.eps >= 0.0 && p.c.is_finite() && p.c >= 0.0) {
        return Err(Error::input(format!("need eps >= 0 and C >= 0, got {p:?}")));
    }
    Ok(())
}

/// `2^(-ε²ℓ/(16 ln 2) + C log₂ ℓ)`.
pub fn corruption_rhs(p: &CorruptionParams, l: usize) -> Result<f64> {
    check_params(p)?;
    if l == 0 {
        return Err(Error::input("l must be at least 1"));
    }
    let l = l as f64;
    Ok((-p.eps * p.eps * l / (16.0 * std::f64::consts::LN_2) + p.c * l.log2()).exp2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftLb {
    pub n: usize,
    pub l: usize,
    pub rho: f64,
    pub eps: f64,
    pub c: f64,
    /// `log₂` of the unclamped bound.
    pub log2_raw: f64,
    pub raw: f64,
    /// `max(1, raw)`.
    pub value: f64,
}

/// `(1/ρ - ε) · 2^(ε²ℓ/(16 ln 2) - C log₂ ℓ)` with `ℓ = ⌊(n+1)/4⌋`, clamped
/// below at 1. Without `eps`, uses `ε = 1/(2ρ)`.
pub fn shift_rank_lb(n: usize, rho: &Rational, eps: Option<f64>, c: f64) -> Result<ShiftLb> {
    if n < 3 {
        return Err(Error::input("n must be at least 3"));
    }
    let rho_f = to_f64(rho);
    if !(rho_f >= 1.0) || !rho_f.is_finite() {
        return Err(Error::input("rho must be at least 1"));
    }
    let eps = eps.unwrap_or(1.0 / (2.0 * rho_f));
    check_params(&CorruptionParams { eps, c })?;
    if eps == 0.0 || eps >= 1.0 / rho_f {
        return Err(Error::input(format!("eps = {eps} must lie in (0, 1/rho)")));
    }
    let l = (n + 1) / 4;
    let lf = l as f64;
    let log2_raw = (1.0 / rho_f - eps).log2() + eps * eps * lf / (16.0 * std::f64::consts::LN_2) - c * lf.log2();
    let raw = log2_raw.exp2();
    Ok(ShiftLb {
        n,
        l,
        rho: rho_f,
        eps,
        c,
        log2_raw,
        raw,
        value: raw.max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::{rat, ratio};

    #[test]
    fn entropy_values() {
        assert!(entropy_gap(0.5).unwrap().abs() < 1e-15);
        let g = entropy_gap(0.25).unwrap();
        assert!((g - (0.188_721_875_540_867 - 0.180_336_880_111_120)).abs() < 1e-12);
        for x in [0.01, 0.2, 0.37] {
            assert!((entropy_gap(x).unwrap() - entropy_gap(1.0 - x).unwrap()).abs() < 1e-12);
        }
        assert!(entropy_gap(0.0).is_err() && entropy_gap(1.0).is_err() && entropy_gap(f64::NAN).is_err());
    }

    #[test]
    fn rhs_values() {
        let p = CorruptionParams { eps: 0.0, c: 0.0 };
        assert_eq!(corruption_rhs(&p, 100).unwrap(), 1.0);
        let p = CorruptionParams { eps: 1.0, c: 0.0 };
        assert!((corruption_rhs(&p, 16).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        let p = CorruptionParams { eps: 0.3, c: 0.0 };
        let (a, b) = (corruption_rhs(&p, 40).unwrap(), corruption_rhs(&p, 80).unwrap());
        assert!((a * a - b).abs() < 1e-12);
        assert!(corruption_rhs(&p, 0).is_err());
    }

    #[test]
    fn shift_lb_examples() {
        let r = shift_rank_lb(15, &rat(1), Some(0.5), 0.0).unwrap();
        assert_eq!(r.l, 4);
        assert!((r.raw - 0.5 * (4.0 / (64.0 * std::f64::consts::LN_2)).exp2()).abs() < 1e-12);
        assert!((r.raw - 0.533).abs() < 1e-3);
        assert_eq!(r.value, 1.0);
        let r = shift_rank_lb(4443, &rat(1), Some(0.5), 0.0).unwrap();
        assert_eq!(r.l, 1111);
        assert!((r.log2_raw - (1111.0 / (64.0 * std::f64::consts::LN_2) - 1.0)).abs() < 1e-9);
        assert!((r.log2_raw - 24.04).abs() < 0.01);
        assert_eq!(shift_rank_lb(15, &rat(1), None, 0.0).unwrap().eps, 0.5);
        assert!(shift_rank_lb(15, &rat(2), Some(0.5), 0.0).is_err());
        assert!(shift_rank_lb(15, &ratio(1, 2), None, 0.0).is_err());
    }
}
