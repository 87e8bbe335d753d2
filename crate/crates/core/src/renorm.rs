//! The renormalization operator on truncated germs: p-fold iteration,
//! restrictive intervals on the real line, and affine normalization.

use serde::{Deserialize, Serialize};

pub use crate::kneading::{CopyLabel, Word};

use crate::error::{Error, Result};
use crate::kneading::{C, L, R};
use crate::scalar::Scalar;
use crate::series::{compose_unchecked, normalize, PowerGerm, SeriesConfig};

/// The central interval `J = [lo, hi]` on which `f^p` returns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictiveInterval {
    pub lo: Scalar,
    pub hi: Scalar,
}

impl RestrictiveInterval {
    pub fn contains(&self, x: Scalar) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> Scalar {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Renormalized {
    pub germ: PowerGerm,
    pub lambda: Scalar,
    pub interval: RestrictiveInterval,
}

const SCAN_POINTS: usize = 4000;
const BOUNDARY_TOL: f64 = 1e-10;

/// Real orbit of `x` under `f`, `None` once it leaves the trust disk.
fn orbit_point(f: &PowerGerm, x: Scalar, steps: usize) -> Option<Scalar> {
    let mut y = x;
    for _ in 0..steps {
        if y.abs() > f.radius() {
            return None;
        }
        y = f.eval_unchecked(y);
    }
    Some(y)
}

/// `f^p(x)` and its derivative by the chain rule.
fn iterate_with_derivative(f: &PowerGerm, x: Scalar, p: usize) -> Option<(Scalar, Scalar)> {
    let mut y = x;
    let mut d = Scalar::ONE;
    for _ in 0..p {
        if y.abs() > f.radius() || !y.is_finite() {
            return None;
        }
        let (v, dv) = f.eval_with_derivative(y);
        d *= dv;
        y = v;
    }
    Some((y, d))
}

fn refine_fixed_point(f: &PowerGerm, p: usize, mut a: Scalar, mut b: Scalar) -> Option<Scalar> {
    let h = |x: Scalar| orbit_point(f, x, p).map(|y| y - x);
    let mut ha = h(a)?;
    for _ in 0..200 {
        let m = (a + b) * 0.5;
        let hm = h(m)?;
        if hm.is_zero() {
            return Some(m);
        }
        if (hm.signum() > 0) == (ha.signum() > 0) {
            a = m;
            ha = hm;
        } else {
            b = m;
        }
        if (b - a).abs() < (a.abs() + 1.0) * 1e-31 {
            break;
        }
    }
    // One Newton step cleans up the last bits.
    let x = (a + b) * 0.5;
    let (y, d) = iterate_with_derivative(f, x, p)?;
    let step = (y - x) / (d - 1.0);
    Some(if step.abs() < (b - a).abs() { x - step } else { x })
}

fn check_real_normalized(f: &PowerGerm) -> Result<()> {
    if !f.is_normalized() {
        return Err(Error::InvalidArgument("germ must be normalized (a_1 = 0, a_2 = 1)".into()));
    }
    Ok(())
}

/// Finds `J = [-|q|, |q|]` where `q` is the expanding fixed point of `f^p`
/// closest to 0, and checks that `f^p` returns `J` into itself.
pub fn restrictive_interval(f: &PowerGerm, p: usize) -> Result<RestrictiveInterval> {
    check_real_normalized(f)?;
    if p < 2 {
        return Err(Error::InvalidArgument(format!("period must be >= 2, got {p}")));
    }
    let not = |reason: String| Error::NotRenormalizable { period: p, reason };
    let rho = f.radius();
    let grid: Vec<(Scalar, Option<Scalar>)> = (0..=SCAN_POINTS)
        .map(|i| {
            let x = rho * (2.0 * i as f64 / SCAN_POINTS as f64 - 1.0);
            (x, orbit_point(f, x, p).map(|y| y - x))
        })
        .collect();
    let mut best: Option<Scalar> = None;
    for w in grid.windows(2) {
        let ((a, Some(ha)), (b, Some(hb))) = (w[0], w[1]) else {
            continue;
        };
        if ha.signum() * hb.signum() > 0 {
            continue;
        }
        let Some(q) = refine_fixed_point(f, p, a, b) else {
            continue;
        };
        let Some((_, d)) = iterate_with_derivative(f, q, p) else {
            continue;
        };
        if d > 1.0 && best.map_or(true, |b| q.abs() < b.abs()) {
            best = Some(q);
        }
    }
    let q = best.ok_or_else(|| not("no expanding fixed point of the iterate on the real line".into()))?;
    let beta = q.abs();
    if beta.is_zero() {
        return Err(not("expanding fixed point at the critical point".into()));
    }
    let j = RestrictiveInterval { lo: -beta, hi: beta };

    let tol = beta * BOUNDARY_TOL;
    let v = orbit_point(f, Scalar::ZERO, p).ok_or_else(|| not("critical orbit leaves the disk".into()))?;
    if v.abs() > beta + tol {
        return Err(not(format!("critical value {v} of the iterate leaves J")));
    }
    let back = orbit_point(f, -q, p).ok_or_else(|| not("boundary orbit leaves the disk".into()))?;
    if (back.abs() - beta).abs() > tol {
        return Err(not(format!("iterate does not map the boundary of J to itself ({back})")));
    }

    // Image hulls f^k(J), k = 1..p-1, must avoid the critical point.
    let (mut lo, mut hi) = (j.lo, j.hi);
    for k in 1..p {
        let (fa, fb) = (f.eval_unchecked(lo), f.eval_unchecked(hi));
        let (mut nlo, mut nhi) = (fa.min(fb), fa.max(fb));
        if lo <= Scalar::ZERO && hi >= Scalar::ZERO {
            let f0 = f.eval_unchecked(Scalar::ZERO);
            nlo = nlo.min(f0);
            nhi = nhi.max(f0);
        }
        if nlo <= Scalar::ZERO && nhi >= Scalar::ZERO {
            return Err(not(format!("f^{k}(J) contains the critical point")));
        }
        if nlo.abs() > rho || nhi.abs() > rho {
            return Err(not(format!("f^{k}(J) leaves the trust disk")));
        }
        lo = nlo;
        hi = nhi;
    }
    Ok(j)
}

/// Symbols of `f^k(0)`, `k = 1..p-1`: `-1` left of 0, `+1` right, `0` on it.
pub fn itinerary(f: &PowerGerm, p: usize, zero_tol: f64) -> Result<Vec<i8>> {
    check_real_normalized(f)?;
    let mut out = Vec::with_capacity(p.saturating_sub(1));
    let mut x = Scalar::ZERO;
    for k in 1..p {
        x = f.eval_unchecked(x);
        if !x.is_finite() || x.abs() > f.radius() {
            return Err(Error::OrbitEscape { step: k });
        }
        out.push(if x.abs() <= zero_tol {
            C
        } else if x.is_sign_negative() {
            L
        } else {
            R
        });
    }
    Ok(out)
}

/// True when some orbit point sits on the critical point.
pub fn is_degenerate(signature: &[i8]) -> bool {
    signature.contains(&C)
}

/// `f^p` by repeated composition, domain-checked at every step.
pub fn iterate(f: &PowerGerm, p: usize, cfg: &SeriesConfig) -> Result<PowerGerm> {
    let mut g = f.clone();
    for _ in 1..p {
        let c = g.constant().abs();
        if c > f.radius() {
            return Err(Error::DomainExceeded {
                point: c.to_f64(),
                radius: f.radius().to_f64(),
            });
        }
        g = compose_unchecked(f, &g, cfg);
    }
    Ok(g)
}

/// One renormalization step `N(f^p)` for the copy `label`.
pub fn renormalize(f: &PowerGerm, label: &CopyLabel, cfg: &SeriesConfig) -> Result<Renormalized> {
    let interval = restrictive_interval(f, label.period)?;
    let found = itinerary(f, label.period, cfg.flush_tol)?;
    if found != label.signature {
        return Err(Error::KneadingMismatch {
            expected: label.signature.clone(),
            found,
        });
    }
    let (germ, lambda) = renormalize_unchecked(f, label.period, cfg)?;
    Ok(Renormalized { germ, lambda, interval })
}

/// The algebraic part of [`renormalize`]: iterate, normalize and police the tail.
/// Newton solvers call this on perturbed germs, where the real-line checks
/// are already settled at the base point.
pub fn renormalize_unchecked(f: &PowerGerm, p: usize, cfg: &SeriesConfig) -> Result<(PowerGerm, Scalar)> {
    let g = iterate(f, p, cfg)?;
    let (h, lambda) = normalize(&g, cfg)?;
    h.check_tail(cfg)?;
    Ok((h, lambda))
}

/// Applies the letters of `word` in order.
pub fn renormalize_word(f: &PowerGerm, word: &Word, cfg: &SeriesConfig) -> Result<(PowerGerm, Vec<Scalar>)> {
    let mut g = f.clone();
    let mut lambdas = Vec::with_capacity(word.len());
    for letter in word.letters() {
        let r = renormalize(&g, letter, cfg)?;
        lambdas.push(r.lambda);
        g = r.germ;
    }
    Ok((g, lambdas))
}

/// The affine conjugate `a f(z / a)`, radius scaled by `|a|`.
pub fn conjugate(f: &PowerGerm, a: Scalar) -> Result<PowerGerm> {
    if a.is_zero() {
        return Err(Error::InvalidArgument("conjugacy scale must be nonzero".into()));
    }
    let inv = a.recip();
    let mut scale = a;
    let coeffs = f
        .coeffs()
        .iter()
        .map(|&c| {
            let v = c * scale;
            scale *= inv;
            v
        })
        .collect();
    PowerGerm::new(coeffs, f.radius() * a.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kneading::{L, R};

    fn s(x: f64) -> Scalar {
        Scalar::from_f64(x)
    }

    fn quad(c: f64) -> PowerGerm {
        PowerGerm::quadratic(s(c), 16, s(2.5)).unwrap()
    }

    fn cfg() -> SeriesConfig {
        SeriesConfig::default()
    }

    /// Root of `g` in `[a, b]` by f64 bisection; an oracle independent of the library.
    fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let ga = g(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (g(m) > 0.0) == (ga > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn basilica_interval_is_golden() {
        let j = restrictive_interval(&quad(-1.0), 2).unwrap();
        let q = bisect(|x| x * x * x * x - 2.0 * x * x - x, -0.9, -0.1);
        assert!((j.hi.to_f64() + q).abs() < 1e-14);
        assert!((j.hi.to_f64() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
        assert_eq!(j.lo, -j.hi);
    }

    #[test]
    fn outside_the_doubling_window_is_not_renormalizable() {
        assert!(matches!(
            restrictive_interval(&quad(0.3), 2),
            Err(Error::NotRenormalizable { period: 2, .. })
        ));
        assert!(matches!(
            restrictive_interval(&quad(-0.5), 2),
            Err(Error::NotRenormalizable { .. })
        ));
    }

    #[test]
    fn period_three_center_interval() {
        let c = bisect(|c| c * c * c + 2.0 * c * c + c + 1.0, -1.8, -1.7);
        let f = quad(c);
        let j = restrictive_interval(&f, 3).unwrap();
        assert!(j.contains(Scalar::ZERO));
        let v = orbit_point(&f, Scalar::ZERO, 3).unwrap();
        assert!(v.abs().to_f64() < 1e-12 && j.contains(v));
    }

    #[test]
    fn itinerary_examples() {
        assert_eq!(itinerary(&quad(-1.0), 2, 0.0).unwrap(), vec![L]);
        let c = bisect(|c| c * c * c + 2.0 * c * c + c + 1.0, -1.8, -1.7);
        assert_eq!(itinerary(&quad(c), 3, 0.0).unwrap(), vec![L, R]);
        let orbit1 = c * c + c;
        assert!((orbit1 - 1.3247).abs() < 1e-4);
        let sig = itinerary(&quad(0.0), 5, 0.0).unwrap();
        assert!(is_degenerate(&sig) && sig.iter().all(|&x| x == C));
        let f = PowerGerm::quadratic(s(-3.0), 8, s(2.5)).unwrap();
        assert!(matches!(itinerary(&f, 3, 0.0), Err(Error::OrbitEscape { step: 1 })));
    }

    #[test]
    fn renormalize_basilica() {
        let r = renormalize(&quad(-1.0), &CopyLabel::doubling(), &cfg()).unwrap();
        assert_eq!(r.lambda, s(-2.0));
        let mut want = vec![Scalar::ZERO; 17];
        want[2] = Scalar::ONE;
        want[4] = s(-0.125);
        assert_eq!(r.germ.coeffs(), &want[..]);
        assert!(r.germ.is_even());
    }

    #[test]
    fn wrong_label_is_a_kneading_mismatch() {
        assert!(matches!(
            renormalize(&quad(-1.0), &CopyLabel::tripling(), &cfg()),
            Err(Error::NotRenormalizable { .. }) | Err(Error::KneadingMismatch { .. })
        ));
        let c = bisect(|c| c * c * c + 2.0 * c * c + c + 1.0, -1.8, -1.7);
        let bad = CopyLabel::new(vec![L, L]).unwrap();
        assert!(matches!(
            renormalize(&quad(c), &bad, &cfg()),
            Err(Error::KneadingMismatch { .. })
        ));
    }

    #[test]
    fn period_four_center_renormalizes_twice_to_zero() {
        let c2 = bisect(
            |c| {
                let mut x = 0.0;
                for _ in 0..4 {
                    x = x * x + c;
                }
                x
            },
            -1.5,
            -1.2,
        );
        let d = CopyLabel::doubling();
        let f = PowerGerm::quadratic(s(c2), 24, s(2.5)).unwrap();
        let once = renormalize(&f, &d, &cfg()).unwrap();
        assert!(once.germ.constant() < -0.9);
        let twice = renormalize(&once.germ, &d, &cfg()).unwrap();
        assert!(twice.germ.constant().abs().to_f64() < 1e-8);
    }

    #[test]
    fn conjugacy_invariance() {
        let f = renormalize(&quad(-1.4), &CopyLabel::doubling(), &cfg()).unwrap().germ;
        let d = CopyLabel::doubling();
        let base = renormalize(&f, &d, &cfg()).unwrap().germ;
        for a in [0.3, -1.7, 2.9] {
            let g = conjugate(&f, s(a)).unwrap();
            let (back, lambda) = normalize(&g, &cfg()).unwrap();
            assert!((lambda * a - 1.0).abs().to_f64() < 1e-30);
            let back = back.with_radius(f.radius()).unwrap();
            let out = renormalize(&back, &d, &cfg()).unwrap().germ;
            for (x, y) in out.coeffs().iter().zip(base.coeffs()) {
                assert!((*x - *y).abs().to_f64() < 1e-20, "a = {a}");
            }
        }
    }

    #[test]
    fn even_input_gives_even_output() {
        let r = renormalize(&quad(-1.41), &CopyLabel::doubling(), &cfg()).unwrap();
        assert!(r.germ.is_even());
        let r2 = renormalize(&r.germ, &CopyLabel::doubling(), &cfg()).unwrap();
        assert!(r2.germ.is_even());
    }
}
