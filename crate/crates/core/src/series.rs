//! Truncated power-series germs `a_0 + a_1 z + ... + a_N z^N` and the
//! operations renormalization is built from: evaluation, composition,
//! affine normalization and disk sup-norms.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cabs, ComplexScalar, Scalar};

pub const GERM_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    General,
    Even,
}

/// Numerical policy shared by the series operations.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesConfig {
    /// Radius every normalized germ is clamped to.
    pub reference_radius: Scalar,
    /// Largest admissible `|a_N| (kappa rho)^N`.
    pub tail_tol: f64,
    /// `kappa`: fraction of the germ radius at which the tail is policed.
    pub tail_radius_fraction: f64,
    /// Odd coefficients below this are zeroed after even-preserving operations.
    pub flush_tol: f64,
    /// Circle samples used by [`sup_norm`].
    pub norm_samples: usize,
    /// `|a_2|` below this is a degenerate quadratic term.
    pub quadratic_tol: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            reference_radius: Scalar::from_f64(2.5),
            tail_tol: 1e-8,
            tail_radius_fraction: 0.5,
            flush_tol: 1e-24,
            norm_samples: 256,
            quadratic_tol: 1e-12,
        }
    }
}

impl SeriesConfig {
    pub fn with_radius(mut self, radius: f64) -> Self {
        self.reference_radius = Scalar::from_f64(radius);
        self
    }
}

/// Truncated Taylor expansion at 0 together with the disk it is trusted on.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerGerm {
    coeffs: Vec<Scalar>,
    radius: Scalar,
    parity: Parity,
    normalized: bool,
}

impl PowerGerm {
    pub fn new(coeffs: Vec<Scalar>, radius: Scalar) -> Result<PowerGerm> {
        if coeffs.len() < 5 {
            return Err(Error::InvalidArgument(format!(
                "germ needs degree >= 4, got {}",
                coeffs.len().saturating_sub(1)
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("coefficient a_{k} is not finite")));
        }
        Ok(PowerGerm::from_parts(coeffs, radius))
    }

    fn from_parts(coeffs: Vec<Scalar>, radius: Scalar) -> PowerGerm {
        let parity = if coeffs.iter().skip(1).step_by(2).all(|c| c.is_zero()) {
            Parity::Even
        } else {
            Parity::General
        };
        let normalized = coeffs[1].is_zero() && coeffs[2] == Scalar::ONE;
        PowerGerm {
            coeffs,
            radius,
            parity,
            normalized,
        }
    }

    /// `c + z^2` truncated at `degree`.
    pub fn quadratic(c: Scalar, degree: usize, radius: Scalar) -> Result<PowerGerm> {
        let mut coeffs = vec![Scalar::ZERO; degree + 1];
        coeffs[0] = c;
        if degree >= 2 {
            coeffs[2] = Scalar::ONE;
        }
        PowerGerm::new(coeffs, radius)
    }

    pub fn monomial(k: usize, degree: usize, radius: Scalar) -> Result<PowerGerm> {
        let mut coeffs = vec![Scalar::ZERO; degree + 1];
        if k <= degree {
            coeffs[k] = Scalar::ONE;
        }
        PowerGerm::new(coeffs, radius)
    }

    pub fn identity(degree: usize, radius: Scalar) -> Result<PowerGerm> {
        PowerGerm::monomial(1, degree, radius)
    }

    pub fn zero(degree: usize, radius: Scalar) -> Result<PowerGerm> {
        PowerGerm::new(vec![Scalar::ZERO; degree + 1], radius)
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).copied().unwrap_or(Scalar::ZERO)
    }

    pub fn constant(&self) -> Scalar {
        self.coeffs[0]
    }

    /// Truncation degree N.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn radius(&self) -> Scalar {
        self.radius
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_even(&self) -> bool {
        self.parity == Parity::Even
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn with_radius(&self, radius: Scalar) -> Result<PowerGerm> {
        PowerGerm::new(self.coeffs.clone(), radius)
    }

    /// Drops or zero-pads coefficients to the given degree.
    pub fn truncate(&self, degree: usize) -> Result<PowerGerm> {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, Scalar::ZERO);
        PowerGerm::new(coeffs, self.radius)
    }

    /// `|a_N| rho^N`.
    pub fn tail_diagnostic(&self) -> Scalar {
        self.tail_at(self.radius)
    }

    pub fn tail_at(&self, r: Scalar) -> Scalar {
        self.coeffs[self.degree()].abs() * r.powi(self.degree() as i32)
    }

    /// The tail at the policed radius `kappa * rho`.
    pub fn policed_tail(&self, cfg: &SeriesConfig) -> Scalar {
        self.tail_at(self.radius * cfg.tail_radius_fraction)
    }

    pub fn check_tail(&self, cfg: &SeriesConfig) -> Result<()> {
        let tail = self.policed_tail(cfg);
        if !tail.is_finite() || tail > cfg.tail_tol {
            return Err(Error::TailBlowup {
                tail: tail.to_f64(),
                tol: cfg.tail_tol,
            });
        }
        Ok(())
    }

    fn check_domain(&self, modulus: Scalar) -> Result<()> {
        // A relative slack of a few ulps keeps boundary points admissible.
        if modulus > self.radius * (1.0 + 1e-30) {
            return Err(Error::DomainExceeded {
                point: modulus.to_f64(),
                radius: self.radius.to_f64(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: Scalar) -> Result<Scalar> {
        self.check_domain(x.abs())?;
        Ok(self.eval_unchecked(x))
    }

    /// Horner evaluation without the trust-disk check.
    pub fn eval_unchecked(&self, x: Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(Scalar::ZERO, |acc, &a| acc * x + a)
    }

    /// Value and first derivative at a real point, no domain check.
    pub fn eval_with_derivative(&self, x: Scalar) -> (Scalar, Scalar) {
        let mut p = Scalar::ZERO;
        let mut dp = Scalar::ZERO;
        for &a in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp)
    }

    pub fn eval_complex(&self, z: ComplexScalar) -> Result<ComplexScalar> {
        self.check_domain(cabs(z))?;
        Ok(self.eval_complex_unchecked(z))
    }

    pub fn eval_complex_unchecked(&self, z: ComplexScalar) -> ComplexScalar {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(Scalar::ZERO, Scalar::ZERO), |acc, &a| acc * z + Complex::new(a, Scalar::ZERO))
    }

    pub fn sub(&self, other: &PowerGerm) -> Result<PowerGerm> {
        let n = self.degree().min(other.degree());
        let coeffs = (0..=n).map(|k| self.coeffs[k] - other.coeffs[k]).collect();
        PowerGerm::new(coeffs, self.radius.min(other.radius))
    }

    /// Serializes to the germ JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GermDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<PowerGerm> {
        let doc: GermDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// On-disk form of a [`PowerGerm`]; every scalar is a decimal string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermDocument {
    pub schema_version: u32,
    pub parity: Parity,
    pub radius: Scalar,
    pub coeffs: Vec<Scalar>,
}

impl From<&PowerGerm> for GermDocument {
    fn from(g: &PowerGerm) -> Self {
        GermDocument {
            schema_version: GERM_SCHEMA_VERSION,
            parity: g.parity,
            radius: g.radius,
            coeffs: g.coeffs.clone(),
        }
    }
}

impl TryFrom<GermDocument> for PowerGerm {
    type Error = Error;

    fn try_from(doc: GermDocument) -> Result<PowerGerm> {
        if doc.schema_version != GERM_SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported germ schema {}", doc.schema_version)));
        }
        let germ = PowerGerm::new(doc.coeffs, doc.radius)?;
        if doc.parity == Parity::Even && !germ.is_even() {
            return Err(Error::Parse("germ marked even has odd coefficients".into()));
        }
        Ok(germ)
    }
}

/// `a * b` truncated at degree `n`.
pub(crate) fn mul_truncated(a: &[Scalar], b: &[Scalar], n: usize) -> Vec<Scalar> {
    let mut out = vec![Scalar::ZERO; n + 1];
    for (i, &x) in a.iter().enumerate().take(n + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n + 1 - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Coefficients of `f o g` up to degree `n`, Horner-in-series.
pub(crate) fn compose_coeffs(f: &[Scalar], g: &[Scalar], n: usize) -> Vec<Scalar> {
    let mut acc = vec![Scalar::ZERO; n + 1];
    let top = f.len() - 1;
    acc[0] = f[top];
    for k in (0..top).rev() {
        acc = mul_truncated(&acc, g, n);
        acc[0] += f[k];
    }
    acc
}

fn flush_odd(coeffs: &mut [Scalar], tol: f64) {
    if coeffs.iter().skip(1).step_by(2).all(|c| c.abs() < tol) {
        for c in coeffs.iter_mut().skip(1).step_by(2) {
            *c = Scalar::ZERO;
        }
    }
}

/// `f o g`, truncated at `min(N_f, N_g)` on the trust disk of `g`.
pub fn compose(f: &PowerGerm, g: &PowerGerm, cfg: &SeriesConfig) -> Result<PowerGerm> {
    f.check_domain(g.constant().abs())?;
    let out = compose_unchecked(f, g, cfg);
    out.check_tail(cfg)?;
    Ok(out)
}

/// Composition without the domain and tail checks.
pub fn compose_unchecked(f: &PowerGerm, g: &PowerGerm, cfg: &SeriesConfig) -> PowerGerm {
    let n = f.degree().min(g.degree());
    let mut coeffs = compose_coeffs(&f.coeffs, &g.coeffs, n);
    if g.is_even() {
        flush_odd(&mut coeffs, cfg.flush_tol);
    }
    PowerGerm::from_parts(coeffs, g.radius)
}

/// Affine normalization `lambda f(z / lambda)` with `lambda = f''(0)/2`.
pub fn normalize(f: &PowerGerm, cfg: &SeriesConfig) -> Result<(PowerGerm, Scalar)> {
    if !f.coeffs[1].is_zero() {
        return Err(Error::InvalidArgument(format!(
            "normalize needs a critical point at 0, a_1 = {}",
            f.coeffs[1]
        )));
    }
    let lambda = f.coeffs[2];
    if lambda.abs() < cfg.quadratic_tol {
        return Err(Error::DegenerateQuadraticTerm { a2: lambda.to_f64() });
    }
    Ok((normalize_with(f, lambda, cfg), lambda))
}

pub(crate) fn normalize_with(f: &PowerGerm, lambda: Scalar, cfg: &SeriesConfig) -> PowerGerm {
    let inv = lambda.recip();
    let mut scale = lambda;
    let mut coeffs = Vec::with_capacity(f.coeffs.len());
    for (k, &a) in f.coeffs.iter().enumerate() {
        coeffs.push(match k {
            1 => Scalar::ZERO,
            2 => Scalar::ONE,
            _ => a * scale,
        });
        scale *= inv;
    }
    if f.is_even() {
        flush_odd(&mut coeffs, cfg.flush_tol);
    }
    let radius = (f.radius * lambda.abs()).min(cfg.reference_radius);
    PowerGerm::from_parts(coeffs, radius)
}

/// Sup-norm estimate on the circle `|z| = r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// Largest `|f|` over the circle samples.
    pub sampled_sup: Scalar,
    /// `sum |a_k| r^k`, an upper bound for the true sup.
    pub coeff_bound: Scalar,
    pub radius: Scalar,
    pub samples: usize,
}

fn circle_point(r: Scalar, j: usize, samples: usize) -> ComplexScalar {
    if j == 0 {
        return Complex::new(r, Scalar::ZERO);
    }
    let theta = Scalar::PI * 2.0 * (j as f64) / (samples as f64);
    Complex::new(r * theta.cos(), r * theta.sin())
}

pub fn sup_norm(f: &PowerGerm, r: Scalar, samples: usize) -> Result<NormReport> {
    if !(r > 0.0) || r > f.radius * (1.0 + 1e-30) {
        return Err(Error::InvalidArgument(format!(
            "norm radius {r} outside (0, {}]",
            f.radius
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let coeff_bound = f.coeffs.iter().rev().fold(Scalar::ZERO, |acc, a| acc * r + a.abs());
    let sampled = (0..samples)
        .map(|j| cabs(f.eval_complex_unchecked(circle_point(r, j, samples))))
        .fold(Scalar::ZERO, Scalar::max);
    Ok(NormReport {
        // Rounding can push an attained bound a few ulps over; the true sup cannot exceed it.
        sampled_sup: sampled.min(coeff_bound),
        coeff_bound,
        radius: r,
        samples,
    })
}

/// Sampled sup of `|f - g|` on `|z| = r`.
pub fn sup_distance(f: &PowerGerm, g: &PowerGerm, r: Scalar, samples: usize) -> Result<Scalar> {
    let d = f.sub(g)?;
    let d = d.with_radius(r.max(d.radius))?;
    Ok(sup_norm(&d, r, samples)?.sampled_sup)
}
