//! One-parameter unimodal families and their superstable cascades.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kneading::{self, compare, itinerary_with, CopyLabel, Word, C};
use crate::paramspace::{center_of_kneading, order_bisect, CascadeTable, MAX_PERIOD};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// `x^2 + c`, critical point 0.
    Quadratic,
    /// `mu x (1 - x)`, critical point 1/2.
    Logistic,
    /// `mu sin(pi x)`, critical point 1/2.
    Sine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnimodalFamily {
    pub name: String,
    pub kind: FamilyKind,
    pub parameter_range: [Scalar; 2],
    pub critical_point: Scalar,
}

impl UnimodalFamily {
    pub fn quadratic() -> UnimodalFamily {
        UnimodalFamily {
            name: "quadratic".into(),
            kind: FamilyKind::Quadratic,
            parameter_range: [Scalar::from_f64(-2.0), Scalar::from_f64(0.25)],
            critical_point: Scalar::ZERO,
        }
    }

    pub fn logistic() -> UnimodalFamily {
        UnimodalFamily {
            name: "logistic".into(),
            kind: FamilyKind::Logistic,
            parameter_range: [Scalar::from_f64(2.0), Scalar::from_f64(4.0)],
            critical_point: Scalar::from_f64(0.5),
        }
    }

    pub fn sine() -> UnimodalFamily {
        UnimodalFamily {
            name: "sine".into(),
            kind: FamilyKind::Sine,
            parameter_range: [Scalar::from_f64(0.5), Scalar::ONE],
            critical_point: Scalar::from_f64(0.5),
        }
    }

    pub fn builtins() -> Vec<UnimodalFamily> {
        vec![Self::quadratic(), Self::logistic(), Self::sine()]
    }

    pub fn eval(&self, mu: Scalar, x: Scalar) -> Scalar {
        match self.kind {
            FamilyKind::Quadratic => x.sqr() + mu,
            FamilyKind::Logistic => mu * x * (Scalar::ONE - x),
            FamilyKind::Sine => mu * (Scalar::PI * x).sin(),
        }
    }

    /// `(f, df/dx, df/dmu)`.
    pub fn eval_jet(&self, mu: Scalar, x: Scalar) -> (Scalar, Scalar, Scalar) {
        match self.kind {
            FamilyKind::Quadratic => (x.sqr() + mu, x * 2.0, Scalar::ONE),
            FamilyKind::Logistic => {
                let q = x * (Scalar::ONE - x);
                (mu * q, mu * (Scalar::ONE - x * 2.0), q)
            }
            FamilyKind::Sine => {
                let t = Scalar::PI * x;
                let (s, c) = (t.sin(), t.cos());
                (mu * s, mu * Scalar::PI * c, s)
            }
        }
    }

    /// `+1` for a minimum at the critical point, `-1` for a maximum.
    pub fn orientation(&self) -> i8 {
        match self.kind {
            FamilyKind::Quadratic => 1,
            _ => -1,
        }
    }

    pub fn kneading(&self, mu: Scalar, depth: usize) -> Vec<i8> {
        itinerary_with(|x| self.eval(mu, x), self.critical_point, self.orientation(), depth, 0.0)
    }

    /// `f_mu^n(x_c) - x_c` and its `mu`-derivative.
    pub fn orbit_with_mu_derivative(&self, mu: Scalar, n: usize) -> (Scalar, Scalar) {
        let mut x = self.critical_point;
        let mut v = Scalar::ZERO;
        for _ in 0..n {
            let (f, fx, fm) = self.eval_jet(mu, x);
            v = fx * v + fm;
            x = f;
        }
        (x - self.critical_point, v)
    }

    /// Checks `f'(x_c) = 0` and kneading monotonicity on a grid of `samples` parameters.
    pub fn check_invariants(&self, samples: usize, depth: usize) -> Result<()> {
        let [lo, hi] = self.parameter_range;
        let mut prev: Option<Vec<i8>> = None;
        let mut direction = Ordering::Equal;
        for i in 0..=samples {
            let mu = lo + (hi - lo) * (i as f64 / samples as f64);
            let (_, fx, _) = self.eval_jet(mu, self.critical_point);
            if fx.abs() >= 1e-20 {
                return Err(Error::NotAdmissible(format!(
                    "{}: f'(x_c) = {} at mu = {mu}",
                    self.name,
                    fx.to_decimal(3)
                )));
            }
            let k = self.kneading(mu, depth);
            if let Some(p) = &prev {
                let o = compare(p, &k);
                if o != Ordering::Equal {
                    if direction != Ordering::Equal && o != direction {
                        return Err(Error::NotAdmissible(format!("{}: kneading not monotone near {mu}", self.name)));
                    }
                    direction = o;
                }
            }
            prev = Some(k);
        }
        Ok(())
    }

    /// The superattracting parameter with the given center kneading.
    pub fn center_of_kneading(&self, target: &[i8]) -> Result<Scalar> {
        if self.kind == FamilyKind::Quadratic {
            return center_of_kneading(target);
        }
        let p = target.len();
        if p == 0 || target[p - 1] != C {
            return Err(Error::InvalidArgument("center kneading must end in C".into()));
        }
        if p > MAX_PERIOD {
            return Err(Error::PrecisionExhausted(format!("period {p} exceeds {MAX_PERIOD}")));
        }
        let [lo, hi] = self.parameter_range;
        let cmp = |mu: Scalar| compare(&self.kneading(mu, p), target);
        let b = order_bisect(lo, hi, cmp, 1e-31)?;
        let mut mu = b.mid();
        let (mut f, mut df) = self.orbit_with_mu_derivative(mu, p);
        let mut last = Scalar::from_f64(f64::INFINITY);
        for _ in 0..12 {
            if f.is_zero() || df.is_zero() {
                break;
            }
            let step = f / df;
            if step.abs() >= last.abs() {
                break;
            }
            let (ft, dft) = self.orbit_with_mu_derivative(mu - step, p);
            if ft.abs() > f.abs() {
                break;
            }
            mu -= step;
            f = ft;
            df = dft;
            last = step;
        }
        let found = self.kneading(mu, p - 1);
        if found[..] != target[..p - 1] {
            return Err(Error::BracketNotFound(format!(
                "{}: kneading {} not realized (nearest {})",
                self.name,
                kneading::to_letters(target),
                kneading::to_letters(&found)
            )));
        }
        let scaled = f.abs() / df.abs().max(Scalar::ONE);
        if f.abs() >= 1e-25 && scaled >= 1e-31 {
            return Err(Error::PrecisionExhausted(format!(
                "{}: residual {} at period {p}",
                self.name,
                f.to_decimal(3)
            )));
        }
        Ok(mu)
    }
}

impl FromStr for UnimodalFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<UnimodalFamily> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quadratic" => Ok(Self::quadratic()),
            "logistic" => Ok(Self::logistic()),
            "sine" => Ok(Self::sine()),
            other => Err(Error::Parse(format!("unknown family `{other}`"))),
        }
    }
}

/// Superstable parameters `mu_n` of `letter^n`, `n = 1..=n_max`.
pub fn superstable_params(family: &UnimodalFamily, letter: &CopyLabel, n_max: usize) -> Result<Vec<Scalar>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    if (n_max as f64) * (letter.period as f64).log2() > 14.0 + 1e-9 {
        return Err(Error::PrecisionExhausted(format!(
            "{n_max} levels of period {} exceed the precision budget",
            letter.period
        )));
    }
    (1..=n_max)
        .map(|n| family.center_of_kneading(&Word::repeat(letter, n).center_kneading()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub delta_estimate: Scalar,
    pub mu_limit: Scalar,
    /// Largest deviation of `log |gap_n|` from its affine fit over the last five gaps.
    pub fit_residual: Scalar,
    pub ratios: Vec<Scalar>,
}

/// Least squares in [`Scalar`]; returns the largest residual.
fn fit_residual(xs: &[Scalar], ys: &[Scalar]) -> Scalar {
    let n = xs.len() as f64;
    let mx = xs.iter().copied().sum::<Scalar>() / n;
    let my = ys.iter().copied().sum::<Scalar>() / n;
    let sxy: Scalar = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: Scalar = xs.iter().map(|&x| (x - mx).sqr()).sum();
    let slope = sxy / sxx;
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (y - my - slope * (x - mx)).abs())
        .fold(Scalar::ZERO, Scalar::max)
}

pub fn scaling_report(params: &[Scalar]) -> Result<ScalingReport> {
    if params.len() < 6 {
        return Err(Error::InsufficientRows {
            needed: 6,
            got: params.len(),
        });
    }
    let table = CascadeTable::from_params(1, params);
    let gaps: Vec<(Scalar, Scalar)> = table
        .rows
        .iter()
        .filter_map(|r| r.gap.filter(|g| !g.is_zero()).map(|g| (Scalar::from_f64(r.n as f64), g.abs().ln())))
        .collect();
    let tail = &gaps[gaps.len().saturating_sub(5)..];
    let (xs, ys): (Vec<Scalar>, Vec<Scalar>) = tail.iter().copied().unzip();
    Ok(ScalingReport {
        delta_estimate: table
            .delta_extrapolated
            .ok_or_else(|| Error::DegenerateRatios("no gap ratios".into()))?,
        mu_limit: table.c_limit.unwrap(),
        fit_residual: fit_residual(&xs, &ys),
        ratios: table.rows.iter().filter_map(|r| r.ratio).collect(),
    })
}

/// One family's cascade for one letter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyCascade {
    pub family: String,
    pub letter: CopyLabel,
    pub params: Vec<Scalar>,
    pub report: ScalingReport,
}

pub fn family_cascade(family: &UnimodalFamily, letter: &CopyLabel, n_max: usize) -> Result<FamilyCascade> {
    let params = superstable_params(family, letter, n_max)?;
    let report = scaling_report(&params)?;
    Ok(FamilyCascade {
        family: family.name.clone(),
        letter: letter.clone(),
        params,
        report,
    })
}

/// Largest pairwise relative difference of the delta estimates.
pub fn max_relative_spread(cascades: &[FamilyCascade]) -> Scalar {
    let mut worst = Scalar::ZERO;
    for a in cascades {
        for b in cascades {
            let (x, y) = (a.report.delta_estimate, b.report.delta_estimate);
            worst = worst.max((x - y).abs() / x.abs().max(y.abs()));
        }
    }
    worst
}

/// CSV with columns `family,letter,n,mu_n,ratio`.
pub fn cascades_csv(cascades: &[FamilyCascade]) -> String {
    let mut out = String::from("family,letter,n,mu_n,ratio\n");
    for fc in cascades {
        let table = CascadeTable::from_params(1, &fc.params);
        for r in &table.rows {
            let ratio = r.ratio.map(|x| x.to_decimal(34)).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", fc.family, fc.letter, r.n, r.c.to_decimal(34), ratio);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramspace::tuned_cascade;

    fn s(x: f64) -> Scalar {
        Scalar::from_f64(x)
    }

    #[test]
    fn built_in_families_are_unimodal_and_monotone() {
        for f in UnimodalFamily::builtins() {
            f.check_invariants(200, 40).unwrap();
        }
    }

    #[test]
    fn quadratic_matches_the_parameter_cascade() {
        let d = CopyLabel::doubling();
        let mine = superstable_params(&UnimodalFamily::quadratic(), &d, 8).unwrap();
        assert_eq!(mine, tuned_cascade(&d, 8).unwrap().params());
    }

    #[test]
    fn logistic_cascade() {
        let fc = family_cascade(&UnimodalFamily::logistic(), &CopyLabel::doubling(), 10).unwrap();
        assert!((fc.params[0] - (s(5.0).sqrt() + 1.0)).abs().to_f64() < 1e-25);
        assert!((fc.report.mu_limit - 3.5699457).abs().to_f64() < 1e-7);
        assert!((fc.report.delta_estimate - 4.669202).abs().to_f64() < 1e-4);
    }

    #[test]
    fn geometric_input_is_exact() {
        let params: Vec<Scalar> = (1..=8).map(|n| Scalar::ONE + s(3.0).powi(-n)).collect();
        let r = scaling_report(&params).unwrap();
        assert!((r.delta_estimate - 3.0).abs().to_f64() < 1e-28);
        assert!((r.mu_limit - 1.0).abs().to_f64() < 1e-28);
        assert!(r.fit_residual < 1e-20);
        assert!(matches!(
            scaling_report(&params[..5]),
            Err(Error::InsufficientRows { needed: 6, got: 5 })
        ));
    }

    #[test]
    fn names_parse() {
        assert_eq!("Sine".parse::<UnimodalFamily>().unwrap().kind, FamilyKind::Sine);
        assert!("tent".parse::<UnimodalFamily>().is_err());
    }
}
