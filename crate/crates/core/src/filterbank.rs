//! Orthogonal wavelet filter banks and their perfect-reconstruction checks.
//!
//! Analysis low-pass vectors are stored in the usual Daubechies orientation
//! (`dec_lo` sums to √2, largest taps first for `db*`). The remaining three
//! filters follow from the quadrature-mirror relations
//!
//! ```text
//! dec_hi[n] = (-1)^n dec_lo[N-1-n]
//! rec_lo[n] = (-1)^n dec_hi[n]      (F_L(z) =  H_H(-z))
//! rec_hi[n] = -(-1)^n dec_lo[n]     (F_H(z) = -H_L(-z))
//! ```
//!
//! so that `rec_lo` and `rec_hi` are the time reversals of the analysis pair.

use std::f64::consts::SQRT_2;
use std::fmt;

use crate::error::{Error, Result};

/// Names accepted by [`builtin_filter`]. `sym2` and `sym3` are accepted as
/// aliases since they coincide with `db2` and `db3`.
pub const SUPPORTED_FILTERS: &[&str] = &["haar", "db1", "db2", "db3", "db4", "db5", "sym4", "sym5"];

const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB2: [f64; 4] = [
    0.48296291314453416,
    0.8365163037378079,
    0.2241438680420134,
    -0.12940952255126037,
];

const DB3: [f64; 6] = [
    0.33267055295008263,
    0.8068915093110925,
    0.45987750211849154,
    -0.13501102001025458,
    -0.08544127388202666,
    0.03522629188570953,
];

const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DB5: [f64; 10] = [
    0.16010239797419293,
    0.6038292697971896,
    0.7243085284377729,
    0.13842814590132074,
    -0.24229488706638203,
    -0.032244869584638375,
    0.07757149384004572,
    -0.006241490212798274,
    -0.012580751999081999,
    0.0033357252854737712,
];

const SYM4: [f64; 8] = [
    0.0322231006040427,
    -0.012603967262037833,
    -0.09921954357684722,
    0.29785779560527736,
    0.8037387518059161,
    0.49761866763201545,
    -0.02963552764599851,
    -0.07576571478927333,
];

const SYM5: [f64; 10] = [
    0.019538882735286728,
    -0.021101834024758855,
    -0.17532808990845047,
    0.01660210576452232,
    0.6339789634582119,
    0.7234076904024206,
    0.1993975339773936,
    -0.039134249302383094,
    0.029519490925774643,
    0.027333068345077982,
];

/// Tolerance every builtin bank must meet at load time.
pub const BUILTIN_TOLERANCE: f64 = 1e-10;

/// An orthogonal two-channel filter bank.
///
/// Fields are public so diagnostics can be run on deliberately broken banks;
/// [`builtin_filter`] and [`qmf_complete`] only hand out verified ones.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    pub name: String,
    pub degree: usize,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl WaveletFilter {
    /// Number of taps `N = 2d`.
    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }

    /// Haar is the only bank whose truncated operators are already orthogonal.
    pub fn needs_boundary_treatment(&self) -> bool {
        self.len() > 2
    }
}

impl fmt::Display for WaveletFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} taps)", self.name, self.len())
    }
}

/// Result of [`verify_pr`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrReport {
    pub max_residual: f64,
    pub center_power: usize,
}

impl PrReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// Look up one of the embedded orthogonal banks.
pub fn builtin_filter(name: &str) -> Result<WaveletFilter> {
    let lower = name.trim().to_ascii_lowercase();
    let (canonical, taps): (&str, &[f64]) = match lower.as_str() {
        "haar" => ("haar", &DB1),
        "db1" => ("db1", &DB1),
        "db2" | "sym2" => (if lower == "sym2" { "sym2" } else { "db2" }, &DB2),
        "db3" | "sym3" => (if lower == "sym3" { "sym3" } else { "db3" }, &DB3),
        "db4" => ("db4", &DB4),
        "db5" => ("db5", &DB5),
        "sym4" => ("sym4", &SYM4),
        "sym5" => ("sym5", &SYM5),
        _ => {
            return Err(Error::UnknownWavelet {
                name: name.to_string(),
                supported: SUPPORTED_FILTERS.join(", "),
            })
        }
    };
    let mut filter = complete(canonical, taps);
    check_bank(&filter, BUILTIN_TOLERANCE)?;
    filter.name = canonical.to_string();
    Ok(filter)
}

/// Every builtin bank, in [`SUPPORTED_FILTERS`] order.
pub fn all_builtin() -> Vec<WaveletFilter> {
    SUPPORTED_FILTERS
        .iter()
        .map(|name| builtin_filter(name).expect("embedded bank failed verification"))
        .collect()
}

/// Derive the full bank from an analysis low-pass vector.
pub fn qmf_complete(dec_lo: &[f64]) -> Result<WaveletFilter> {
    if dec_lo.is_empty() || !dec_lo.len().is_multiple_of(2) {
        return Err(Error::InvalidFilter(format!(
            "low-pass length must be even and positive, got {}",
            dec_lo.len()
        )));
    }
    let sum: f64 = dec_lo.iter().sum();
    if (sum - SQRT_2).abs() > 1e-8 {
        return Err(Error::InvalidFilter(format!(
            "low-pass taps must sum to sqrt(2), got {sum}"
        )));
    }
    let filter = complete("custom", dec_lo);
    check_bank(&filter, 1e-8)?;
    Ok(filter)
}

fn complete(name: &str, dec_lo: &[f64]) -> WaveletFilter {
    let n = dec_lo.len();
    let alt = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let dec_hi: Vec<f64> = (0..n).map(|k| alt(k) * dec_lo[n - 1 - k]).collect();
    let rec_lo: Vec<f64> = (0..n).map(|k| alt(k) * dec_hi[k]).collect();
    let rec_hi: Vec<f64> = (0..n).map(|k| -alt(k) * dec_lo[k]).collect();
    WaveletFilter {
        name: name.to_string(),
        degree: n / 2,
        dec_lo: dec_lo.to_vec(),
        dec_hi,
        rec_lo,
        rec_hi,
    }
}

fn check_bank(filter: &WaveletFilter, tol: f64) -> Result<()> {
    let pr = verify_pr(filter, tol);
    let alias = verify_alias(filter, tol);
    if !pr.passes(tol) || alias > tol {
        return Err(Error::InvalidFilter(format!(
            "{}: perfect-reconstruction residual {:e}, alias residual {:e} (tolerance {:e})",
            filter.name, pr.max_residual, alias, tol
        )));
    }
    Ok(())
}

/// Coefficients of the product of two polynomials in `z^-1`.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

/// Coefficients of `H(-z)`.
fn modulate(h: &[f64]) -> Vec<f64> {
    h.iter()
        .enumerate()
        .map(|(k, &x)| if k % 2 == 0 { x } else { -x })
        .collect()
}

/// Coefficient sequence of `H_L(z)F_L(z) + H_H(z)F_H(z)`.
pub fn pr_polynomial(filter: &WaveletFilter) -> Vec<f64> {
    poly_add(
        &poly_mul(&filter.dec_lo, &filter.rec_lo),
        &poly_mul(&filter.dec_hi, &filter.rec_hi),
    )
}

/// Coefficient sequence of `H_L(-z)F_L(z) + H_H(-z)F_H(z)`.
pub fn alias_polynomial(filter: &WaveletFilter) -> Vec<f64> {
    poly_add(
        &poly_mul(&modulate(&filter.dec_lo), &filter.rec_lo),
        &poly_mul(&modulate(&filter.dec_hi), &filter.rec_hi),
    )
}

/// Perfect-reconstruction diagnostic. The center power is the position of
/// the dominant coefficient; every other coefficient should vanish and the
/// center should equal two.
pub fn verify_pr(filter: &WaveletFilter, _tol: f64) -> PrReport {
    let poly = pr_polynomial(filter);
    let center_power = poly
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |best, (k, &c)| {
            if c.abs() > best.1 {
                (k, c.abs())
            } else {
                best
            }
        })
        .0;
    let max_residual = poly
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            if k == center_power {
                (c - 2.0).abs()
            } else {
                c.abs()
            }
        })
        .fold(0.0, f64::max);
    PrReport {
        max_residual,
        center_power,
    }
}

/// Largest alias-cancellation coefficient magnitude.
pub fn verify_alias(filter: &WaveletFilter, _tol: f64) -> f64 {
    alias_polynomial(filter)
        .iter()
        .fold(0.0, |m, c| f64::max(m, c.abs()))
}

/// `⟨h, shift_{2k}(h)⟩` for `k = 0, 1, …`; the unit impulse for orthonormal
/// low-pass filters.
pub fn double_shift_autocorrelation(h: &[f64]) -> Vec<f64> {
    (0..h.len().div_ceil(2))
        .map(|k| {
            h.iter()
                .zip(h.iter().skip(2 * k))
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_taps() {
        let f = builtin_filter("haar").unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(f.dec_lo.len(), 2);
        assert!((f.dec_lo[0] - r).abs() < 1e-16 && (f.dec_lo[1] - r).abs() < 1e-16);
        assert!((f.dec_hi[0] - r).abs() < 1e-16 && (f.dec_hi[1] + r).abs() < 1e-16);
        assert_eq!(f.dec_lo, builtin_filter("db1").unwrap().dec_lo);
    }

    #[test]
    fn db2_closed_form() {
        let f = builtin_filter("db2").unwrap();
        let s3 = 3f64.sqrt();
        let d = 4.0 * SQRT_2;
        let closed = [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
        for (a, b) in f.dec_lo.iter().zip(closed) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
        let closed_bank = qmf_complete(&closed).unwrap();
        assert!(verify_pr(&closed_bank, 1e-12).max_residual < 1e-12);
    }

    #[test]
    fn unknown_name_lists_supported() {
        let err = builtin_filter("db9").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("db9") && msg.contains("sym5") && msg.contains("haar"));
    }

    #[test]
    fn sym_aliases_match_db() {
        assert_eq!(
            builtin_filter("sym2").unwrap().dec_lo,
            builtin_filter("db2").unwrap().dec_lo
        );
        assert_eq!(
            builtin_filter("sym3").unwrap().dec_lo,
            builtin_filter("db3").unwrap().dec_lo
        );
        assert_ne!(
            builtin_filter("sym4").unwrap().dec_lo,
            builtin_filter("db4").unwrap().dec_lo
        );
    }

    #[test]
    fn invariants_of_every_builtin() {
        for f in all_builtin() {
            let n = f.len();
            assert_eq!(n, 2 * f.degree);
            assert!([&f.dec_hi, &f.rec_lo, &f.rec_hi].iter().all(|v| v.len() == n));
            assert!((f.dec_lo.iter().sum::<f64>() - SQRT_2).abs() < 1e-10, "{f}");
            assert!(f.dec_hi.iter().sum::<f64>().abs() < 1e-10, "{f}");
            for k in 0..n {
                let alt = if k % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(f.rec_lo[k], alt * f.dec_hi[k]);
                assert_eq!(f.rec_hi[k], -alt * f.dec_lo[k]);
                assert_eq!(f.rec_lo[k], f.dec_lo[n - 1 - k]);
            }
            let pr = verify_pr(&f, 1e-10);
            assert!(pr.max_residual < 1e-10, "{f}: {pr:?}");
            assert_eq!(pr.center_power, n - 1);
            assert!(verify_alias(&f, 1e-10) < 1e-10, "{f}");
            let acf = double_shift_autocorrelation(&f.dec_lo);
            assert!((acf[0] - 1.0).abs() < 1e-10);
            assert!(acf[1..].iter().all(|c| c.abs() < 1e-10), "{f}: {acf:?}");
        }
    }

    // (1/√2)² rounds to 0.5 + 2^-53, so the center lands within an ulp or two of 2.
    #[test]
    fn haar_products_are_exact_to_rounding() {
        let f = builtin_filter("haar").unwrap();
        assert!(verify_pr(&f, 0.0).max_residual <= 1e-15);
        assert_eq!(verify_alias(&f, 0.0), 0.0);
    }

    // Polynomial oracle: expand the product by direct evaluation at sample
    // points and compare with the coefficient form.
    #[test]
    fn db4_pr_against_pointwise_evaluation() {
        let f = builtin_filter("db4").unwrap();
        let eval = |c: &[f64], z: f64| c.iter().rev().fold(0.0, |acc, &x| acc * z + x);
        let pr = pr_polynomial(&f);
        for &z in &[0.3, -0.7, 1.1, 2.0] {
            let lhs = eval(&f.dec_lo, z) * eval(&f.rec_lo, z) + eval(&f.dec_hi, z) * eval(&f.rec_hi, z);
            assert!((lhs - 2.0 * z.powi(7)).abs() < 1e-9 * (1.0 + z.abs().powi(14)));
            assert!((eval(&pr, z) - lhs).abs() < 1e-9 * (1.0 + z.abs().powi(14)));
        }
        assert!(verify_pr(&f, 1e-10).max_residual < 1e-10);
    }

    #[test]
    fn negated_synthesis_pair_flips_center() {
        let mut f = builtin_filter("db3").unwrap();
        f.rec_lo.iter_mut().for_each(|x| *x = -*x);
        f.rec_hi.iter_mut().for_each(|x| *x = -*x);
        let pr = verify_pr(&f, 1e-10);
        assert_eq!(pr.center_power, 5);
        assert!((pr_polynomial(&f)[5] + 2.0).abs() < 1e-12);
        assert!((pr.max_residual - 4.0).abs() < 1e-12);
    }

    #[test]
    fn negated_low_pass_synthesis_breaks_pr() {
        let mut f = builtin_filter("haar").unwrap();
        f.rec_lo.iter_mut().for_each(|x| *x = -*x);
        // [-1, 0, -1]: both outer terms survive, the center cancels.
        let poly = pr_polynomial(&f);
        assert!((poly[0] + 1.0).abs() < 1e-15 && poly[1].abs() < 1e-15 && (poly[2] + 1.0).abs() < 1e-15);
        assert!(verify_pr(&f, 1e-10).max_residual >= 1.0);
    }

    #[test]
    fn broken_qmf_sign_shows_in_alias() {
        for mut f in all_builtin() {
            let k = (0..f.len())
                .max_by(|&a, &b| f.rec_hi[a].abs().total_cmp(&f.rec_hi[b].abs()))
                .unwrap();
            let entry = f.rec_hi[k];
            f.rec_hi[k] = -entry;
            // The alias sum was zero; the flip adds -2 rec_hi[k] z^-k H_H(-z).
            let expected = 2.0 * entry.abs() * f.dec_hi.iter().fold(0.0, |m, x| f64::max(m, x.abs()));
            let got = verify_alias(&f, 1e-10);
            assert!((got - expected).abs() < 1e-10, "{}: {got} vs {expected}", f.name);
            assert!(got > 0.1);
        }
    }

    #[test]
    fn qmf_complete_preconditions() {
        assert!(matches!(qmf_complete(&[1.0, 1.0]), Err(Error::InvalidFilter(_))));
        assert!(matches!(qmf_complete(&[SQRT_2]), Err(Error::InvalidFilter(_))));
        let haar = qmf_complete(&DB1).unwrap();
        let builtin = builtin_filter("haar").unwrap();
        assert_eq!(haar.dec_hi, builtin.dec_hi);
        assert_eq!(haar.rec_lo, builtin.rec_lo);
        assert_eq!(haar.rec_hi, builtin.rec_hi);
        // Non-orthogonal low-pass with the right sum fails the PR check.
        assert!(qmf_complete(&[0.5, 0.5, 0.2071067811865476, 0.2071067811865476]).is_err());
    }
}
