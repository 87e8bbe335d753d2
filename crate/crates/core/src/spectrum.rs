//! Linearization of renormalization at fixed points and cycles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kneading::Word;
use crate::linalg::{eigenvalues, inverse_iteration, power_iteration, Matrix};
use crate::renorm::renormalize;
use crate::scalar::Scalar;
use crate::series::{sup_distance, PowerGerm};
use crate::solver::{fixed_point, operator_jacobian, CycleResult, FixedPointResult, SolverConfig};

/// Eigenvalues of modulus above this count as unstable.
pub const UNSTABLE_THRESHOLD: f64 = 1.0 + 1e-6;
/// Largest movement across truncations for an eigenvalue to count as converged.
pub const DRIFT_FILTER: f64 = 1e-3;
/// Truncation offset used by the drift filter.
pub const DRIFT_STEP: usize = 8;
/// `jacobian` refuses base points farther than this from a fixed point.
pub const FIXED_POINT_GATE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub re: Scalar,
    pub im: Scalar,
    pub modulus: Scalar,
    /// False when the eigenvalue moves by more than [`DRIFT_FILTER`] between truncations.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by decreasing modulus.
    pub eigenvalues: Vec<SpectralEntry>,
    /// The dominant eigenvalue when it is real and unstable.
    pub lambda_star: Option<Scalar>,
    pub unstable_count: usize,
    /// Unstable eigenvalues that survive the drift filter.
    pub converged_unstable_count: usize,
    pub unstable_vector: Vec<Scalar>,
    /// Change of `lambda_star` from truncation `N - 8` to `N`.
    pub drift: Option<Scalar>,
    /// `lambda_star` again, by power iteration.
    pub power_lambda: Option<Scalar>,
    /// Largest converged modulus among the stable eigenvalues.
    pub max_stable_modulus: Option<Scalar>,
    pub truncation: Option<usize>,
}

impl SpectrumReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,modulus,converged_flag\n");
        for e in &self.eigenvalues {
            out.push_str(&format!("{},{},{},{}\n", e.re, e.im, e.modulus, e.converged as u8));
        }
        out
    }

    /// `lambda_star` counts as converged once its drift is below `1e-6`.
    pub fn is_converged(&self) -> bool {
        matches!((self.lambda_star, self.drift), (Some(_), Some(d)) if d < 1e-6)
    }

    fn refresh_counts(&mut self) {
        self.converged_unstable_count = self
            .eigenvalues
            .iter()
            .filter(|e| e.converged && e.modulus > UNSTABLE_THRESHOLD)
            .count();
        self.max_stable_modulus = self
            .eigenvalues
            .iter()
            .filter(|e| e.converged && !(e.modulus > UNSTABLE_THRESHOLD))
            .map(|e| e.modulus)
            .reduce(Scalar::max);
    }
}

/// Derivative of the stationary operator of `word` at the fixed point `at`,
/// in the solver's scaled even coordinates.
pub fn jacobian(word: &Word, at: &PowerGerm, degree: usize, cfg: &SolverConfig) -> Result<Matrix> {
    let letter = word.composite();
    let r = renormalize(at, &letter, &cfg.series)?;
    let residual = sup_distance(&r.germ, at, cfg.certificate_radius(), cfg.certificate_samples)?;
    if residual > FIXED_POINT_GATE {
        return Err(Error::NotFixedPoint {
            residual: residual.to_f64(),
        });
    }
    operator_jacobian(at, letter.period, degree, cfg)
}

/// Full spectrum, unstable count, dominant eigenvector and a power-iteration check.
pub fn eigen_analysis(j: &Matrix) -> Result<SpectrumReport> {
    let mut ev = eigenvalues(j)?;
    ev.sort_by(|a, b| {
        b.modulus()
            .partial_cmp(&a.modulus())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let entries: Vec<SpectralEntry> = ev
        .iter()
        .map(|e| SpectralEntry {
            re: e.re,
            im: e.im,
            modulus: e.modulus(),
            converged: true,
        })
        .collect();
    let unstable_count = entries.iter().filter(|e| e.modulus > UNSTABLE_THRESHOLD).count();
    let dominant = ev.first().filter(|e| e.is_real() && e.modulus() > UNSTABLE_THRESHOLD);
    let lambda_star = dominant.map(|e| e.re);
    let unstable_vector = match lambda_star {
        Some(l) => inverse_iteration(j, l, 4)?,
        None => Vec::new(),
    };
    let power_lambda = lambda_star.and_then(|_| power_iteration(j, 2000, 1e-24).ok().map(|(l, _)| l));
    let mut report = SpectrumReport {
        eigenvalues: entries,
        lambda_star,
        unstable_count,
        converged_unstable_count: 0,
        unstable_vector,
        drift: None,
        power_lambda,
        max_stable_modulus: None,
        truncation: None,
    };
    report.refresh_counts();
    Ok(report)
}

fn near(e: &SpectralEntry, others: &[SpectralEntry], tol: f64) -> bool {
    others.iter().any(|o| (e.re - o.re).hypot(e.im - o.im) <= tol)
}

/// Solves at `N - 8`, `N` and `N + 8` and filters the spectrum at `N` by drift.
pub fn analyze_fixed_point(
    word: &Word,
    degree: usize,
    depth: usize,
    cfg: &SolverConfig,
) -> Result<(FixedPointResult, SpectrumReport)> {
    analyze_fixed_point_with(word, degree, depth, cfg, DRIFT_FILTER)
}

/// [`analyze_fixed_point`] with a custom drift filter.
pub fn analyze_fixed_point_with(
    word: &Word,
    degree: usize,
    depth: usize,
    cfg: &SolverConfig,
    drift_tol: f64,
) -> Result<(FixedPointResult, SpectrumReport)> {
    if degree < DRIFT_STEP + 4 {
        return Err(Error::InvalidArgument(format!("truncation {degree} too small for the drift filter")));
    }
    let mut reports = Vec::with_capacity(3);
    let mut center = None;
    for n in [degree - DRIFT_STEP, degree, degree + DRIFT_STEP] {
        let fp = fixed_point(word, n, depth, cfg)?;
        let report = eigen_analysis(&jacobian(word, &fp.germ, n, cfg)?)?;
        if n == degree {
            center = Some(fp);
        }
        reports.push(report);
    }
    let low = reports.remove(0);
    let mut mid = reports.remove(0);
    let high = reports.remove(0);
    for e in mid.eigenvalues.iter_mut() {
        e.converged = near(e, &low.eigenvalues, drift_tol) && near(e, &high.eigenvalues, drift_tol);
    }
    mid.drift = match (mid.lambda_star, low.lambda_star) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    mid.truncation = Some(degree);
    mid.refresh_counts();
    Ok((center.unwrap(), mid))
}

/// `(dominant |eigenvalue| of D_k ... D_1)^{1/k}` around the cycle.
pub fn cocycle_expansion(cycle: &CycleResult, cfg: &SolverConfig) -> Result<Scalar> {
    let k = cycle.germs.len();
    if k == 0 || k != cycle.word.len() {
        return Err(Error::InvalidArgument("cycle and word lengths differ".into()));
    }
    let mut product: Option<Matrix> = None;
    for (g, letter) in cycle.germs.iter().zip(cycle.word.letters()) {
        let d = operator_jacobian(g, letter.period, cycle.truncation, cfg)?;
        product = Some(match product {
            None => d,
            Some(p) => d.mul(&p)?,
        });
    }
    let ev = eigenvalues(&product.unwrap())?;
    let top = ev
        .iter()
        .map(|e| e.modulus())
        .fold(Scalar::ZERO, Scalar::max);
    Ok(Scalar::from_f64(top.to_f64().powf(1.0 / k as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kneading::CopyLabel;

    fn s(x: f64) -> Scalar {
        Scalar::from_f64(x)
    }

    #[test]
    fn identity_has_no_unstable_direction() {
        let r = eigen_analysis(&Matrix::identity(5)).unwrap();
        assert_eq!(r.unstable_count, 0);
        assert!(r.lambda_star.is_none());
        assert!(r.eigenvalues.iter().all(|e| e.modulus == s(1.0)));
    }

    #[test]
    fn diagonal_case() {
        let r = eigen_analysis(&Matrix::from_diagonal(&[s(0.5), s(3.0), s(0.1)])).unwrap();
        assert_eq!(r.unstable_count, 1);
        assert_eq!(r.lambda_star, Some(s(3.0)));
        let v = &r.unstable_vector;
        assert_eq!(v[1], s(1.0));
        assert!(v[0].abs().to_f64() < 1e-60 && v[2].abs().to_f64() < 1e-60);
        assert!((r.power_lambda.unwrap() - 3.0).abs().to_f64() < 1e-20);
        let csv = r.to_csv();
        assert!(csv.starts_with("re,im,modulus,converged_flag\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn jacobian_rejects_non_fixed_points() {
        let cfg = SolverConfig::default();
        let p = PowerGerm::quadratic(s(-1.3), 30, s(2.5)).unwrap();
        assert!(jacobian(&Word::single(CopyLabel::doubling()), &p, 30, &cfg).is_err());
    }

    #[test]
    fn doubling_spectrum() {
        let cfg = SolverConfig::default();
        let w = Word::single(CopyLabel::doubling());
        let (fp, r) = analyze_fixed_point(&w, 30, 4, &cfg).unwrap();
        let l = r.lambda_star.unwrap();
        assert!((l - 4.669201609).abs().to_f64() < 1e-6, "lambda_star {l}");
        assert_eq!(r.converged_unstable_count, 1);
        assert!(r.drift.unwrap() < 1e-6);
        assert!((r.power_lambda.unwrap() - l).abs().to_f64() < 1e-8);
        // The unstable direction moves the constant term.
        assert!(r.unstable_vector[0].abs() > 1e-3);
        let cyc = fp.as_cycle();
        let g = cocycle_expansion(&cyc, &cfg).unwrap();
        assert!((g - l).abs().to_f64() < 1e-8);
    }
}
