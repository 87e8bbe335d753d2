//! Newton solvers for fixed points and periodic orbits of renormalization.
//!
//! Unknowns are the even coefficients `a_0, a_4, a_6, ...` of a normalized
//! germ (`a_2 = 1`), scaled to `b_k = a_k rho^k`. A cycle of length `k` is
//! solved by multi-shooting: `R_{l_i}(g_i) = g_{i+1 mod k}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kneading::{CopyLabel, Word};
use crate::linalg::{solve_checked, Matrix};
use crate::paramspace::tuned_cascade;
use crate::renorm::{renormalize, renormalize_unchecked};
use crate::scalar::Scalar;
use crate::series::{sup_distance, PowerGerm, SeriesConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub series: SeriesConfig,
    /// Required sup-norm residual on the certificate circle.
    pub tol: f64,
    /// Central-difference step in scaled coordinates.
    pub fd_step: f64,
    pub max_steps: usize,
    pub max_halvings: usize,
    pub max_increases: usize,
    pub max_condition: f64,
    pub certificate_samples: usize,
    /// Newton stops once the scaled residual falls below this.
    pub stop_residual: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            series: SeriesConfig::default(),
            tol: 1e-10,
            fd_step: 1e-8,
            max_steps: 50,
            max_halvings: 5,
            max_increases: 3,
            max_condition: 1e14,
            certificate_samples: 512,
            stop_residual: 1e-26,
        }
    }
}

impl SolverConfig {
    pub fn certificate_radius(&self) -> Scalar {
        self.series.reference_radius * 0.5
    }
}

/// Coordinates on normalized even germs of degree `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvenChart {
    pub degree: usize,
    pub scale: Scalar,
}

impl EvenChart {
    pub fn new(degree: usize, cfg: &SeriesConfig) -> Result<EvenChart> {
        if degree < 4 {
            return Err(Error::InvalidArgument(format!("truncation {degree} < 4")));
        }
        Ok(EvenChart {
            degree,
            scale: cfg.reference_radius,
        })
    }

    /// Coefficient indices of the unknowns.
    pub fn indices(&self) -> Vec<usize> {
        std::iter::once(0).chain((4..=self.degree).step_by(2)).collect()
    }

    pub fn dim(&self) -> usize {
        1 + (self.degree - 2) / 2
    }

    pub fn unknowns(&self, g: &PowerGerm) -> Vec<Scalar> {
        self.indices()
            .into_iter()
            .map(|k| g.coeff(k) * self.scale.powi(k as i32))
            .collect()
    }

    pub fn germ(&self, x: &[Scalar], radius: Scalar) -> Result<PowerGerm> {
        let mut coeffs = vec![Scalar::ZERO; self.degree + 1];
        coeffs[2] = Scalar::ONE;
        for (&k, &b) in self.indices().iter().zip(x) {
            coeffs[k] = b / self.scale.powi(k as i32);
        }
        PowerGerm::new(coeffs, radius)
    }
}

/// `b -> chart(R_p(germ(b)))`.
fn operator(chart: &EvenChart, p: usize, x: &[Scalar], cfg: &SolverConfig) -> Result<Vec<Scalar>> {
    let g = chart.germ(x, cfg.series.reference_radius)?;
    let (h, _) = renormalize_unchecked(&g, p, &cfg.series)?;
    Ok(chart.unknowns(&h))
}

/// Central-difference derivative of the scaled coefficient map of `R_p` at `at`.
pub fn operator_jacobian(at: &PowerGerm, p: usize, degree: usize, cfg: &SolverConfig) -> Result<Matrix> {
    let chart = EvenChart::new(degree, &cfg.series)?;
    let x = chart.unknowns(&at.truncate(degree)?);
    let h = cfg.fd_step;
    let cols = (0..x.len())
        .into_par_iter()
        .map(|j| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = operator(&chart, p, &xp, cfg)?;
            let fm = operator(&chart, p, &xm, cfg)?;
            Ok(fp.iter().zip(&fm).map(|(&a, &b)| (a - b) / (2.0 * h)).collect())
        })
        .collect::<Result<Vec<Vec<Scalar>>>>()?;
    Matrix::from_columns(&cols)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    #[serde(with = "germ_serde")]
    pub germ: PowerGerm,
    pub lambda: Scalar,
    /// Sup of `|R f - f|` on the certificate circle.
    pub residual: Scalar,
    pub iterations: usize,
    pub truncation: usize,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    #[serde(with = "germs_serde")]
    pub germs: Vec<PowerGerm>,
    pub word: Word,
    pub lambdas: Vec<Scalar>,
    pub residuals: Vec<Scalar>,
    pub shift_consistency: Scalar,
    pub iterations: usize,
    pub truncation: usize,
}

/// Germs serialize as their JSON documents.
mod germ_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::series::{GermDocument, PowerGerm};

    pub fn serialize<S: Serializer>(g: &PowerGerm, s: S) -> Result<S::Ok, S::Error> {
        GermDocument::from(g).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PowerGerm, D::Error> {
        GermDocument::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

mod germs_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::series::{GermDocument, PowerGerm};

    pub fn serialize<S: Serializer>(gs: &[PowerGerm], s: S) -> Result<S::Ok, S::Error> {
        gs.iter().map(GermDocument::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PowerGerm>, D::Error> {
        Vec::<GermDocument>::deserialize(d)?
            .into_iter()
            .map(|doc| doc.try_into().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Largest cascade depth the precision budget allows for a letter.
fn cascade_levels(letter: &CopyLabel) -> usize {
    ((14.0 + 1e-9) / (letter.period as f64).log2()).floor() as usize
}

/// Accumulation point of the cascade of the composite letter of `word`.
pub fn cascade_limit(word: &Word) -> Result<Scalar> {
    let letter = word.composite();
    let n = cascade_levels(&letter);
    if n < 3 {
        return Err(Error::PrecisionExhausted(format!(
            "word {word} of period {} leaves fewer than 3 cascade levels",
            letter.period
        )));
    }
    tuned_cascade(&letter, n)?
        .c_limit
        .ok_or_else(|| Error::PrecisionExhausted(format!("no cascade limit for {word}")))
}

/// `depth` rounds of renormalization along `word`, applied to the truncated
/// quadratic at the accumulation point of the word's cascade.
pub fn seed_from_cascade(word: &Word, depth: usize, degree: usize, cfg: &SeriesConfig) -> Result<PowerGerm> {
    let c = cascade_limit(word)?;
    let mut g = PowerGerm::quadratic(c, degree, cfg.reference_radius)?;
    for _ in 0..depth {
        for letter in word.letters() {
            g = renormalize(&g, letter, cfg)?.germ;
        }
    }
    Ok(g)
}

/// Seeds for every point of the cycle of `word`.
pub fn seed_cycle(word: &Word, depth: usize, degree: usize, cfg: &SeriesConfig) -> Result<Vec<PowerGerm>> {
    let mut g = seed_from_cascade(word, depth, degree, cfg)?;
    let mut out = vec![g.clone()];
    for letter in &word.letters()[..word.len() - 1] {
        g = renormalize(&g, letter, cfg)?.germ;
        out.push(g.clone());
    }
    Ok(out)
}

fn max_abs(v: &[Scalar]) -> Scalar {
    v.iter().map(|x| x.abs()).fold(Scalar::ZERO, Scalar::max)
}

struct Shooting<'a> {
    chart: EvenChart,
    periods: Vec<usize>,
    cfg: &'a SolverConfig,
}

impl Shooting<'_> {
    fn m(&self) -> usize {
        self.chart.dim()
    }

    fn residual(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        let (m, k) = (self.m(), self.periods.len());
        let mut out = Vec::with_capacity(m * k);
        for i in 0..k {
            let image = operator(&self.chart, self.periods[i], &x[i * m..(i + 1) * m], self.cfg)?;
            let next = &x[((i + 1) % k) * m..((i + 1) % k + 1) * m];
            out.extend(image.iter().zip(next).map(|(&a, &b)| a - b));
        }
        Ok(out)
    }

    fn jacobian(&self, x: &[Scalar]) -> Result<Matrix> {
        let (m, k) = (self.m(), self.periods.len());
        let mut j = Matrix::zeros(m * k, m * k);
        for i in 0..k {
            let g = self.chart.germ(&x[i * m..(i + 1) * m], self.cfg.series.reference_radius)?;
            let d = operator_jacobian(&g, self.periods[i], self.chart.degree, self.cfg)?;
            let next = (i + 1) % k;
            for r in 0..m {
                for c in 0..m {
                    j[(i * m + r, i * m + c)] += d[(r, c)];
                }
                j[(i * m + r, next * m + r)] -= Scalar::ONE;
            }
        }
        Ok(j)
    }
}

/// Damped Newton on the shooting system; returns the unknowns and the step count.
fn newton(sys: &Shooting<'_>, mut x: Vec<Scalar>) -> Result<(Vec<Scalar>, usize)> {
    let cfg = sys.cfg;
    let mut g = sys.residual(&x)?;
    let mut norm = max_abs(&g);
    let mut increases = 0;
    for step in 0..cfg.max_steps {
        if norm < cfg.stop_residual {
            return Ok((x, step));
        }
        let j = sys.jacobian(&x)?;
        let rhs: Vec<Scalar> = g.iter().map(|&v| -v).collect();
        let (dx, _) = solve_checked(&j, &rhs, cfg.max_condition)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<Scalar> = x.iter().zip(&dx).map(|(&a, &d)| a + d * t).collect();
            if let Ok(gt) = sys.residual(&trial) {
                let nt = max_abs(&gt);
                if nt < norm {
                    accepted = Some((trial, gt, nt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xt, gt, nt)) => {
                x = xt;
                g = gt;
                norm = nt;
                increases = 0;
            }
            None => {
                // No decrease along the Newton direction: either the rounding
                // floor is reached or the iteration is failing.
                if norm < Scalar::from_f64(cfg.tol * 1e-6) {
                    return Ok((x, step));
                }
                increases += 1;
                if increases >= cfg.max_increases {
                    return Err(Error::NewtonDiverged {
                        iterations: step + 1,
                        residual: norm.to_f64(),
                    });
                }
                let trial: Vec<Scalar> = x.iter().zip(&dx).map(|(&a, &d)| a + d).collect();
                match sys.residual(&trial) {
                    Ok(gt) => {
                        x = trial;
                        norm = max_abs(&gt);
                        g = gt;
                    }
                    Err(_) => {
                        return Err(Error::NewtonDiverged {
                            iterations: step + 1,
                            residual: norm.to_f64(),
                        })
                    }
                }
            }
        }
    }
    if norm < Scalar::from_f64(cfg.tol * 1e-6) {
        return Ok((x, cfg.max_steps));
    }
    Err(Error::NewtonDiverged {
        iterations: cfg.max_steps,
        residual: norm.to_f64(),
    })
}

fn check_seed(seed: &PowerGerm, chart: &EvenChart, cfg: &SolverConfig) -> Result<PowerGerm> {
    if !seed.is_even() || !seed.is_normalized() {
        return Err(Error::InvalidArgument("seed must be an even normalized germ".into()));
    }
    let mut coeffs = seed.coeffs().to_vec();
    coeffs.resize(chart.degree + 1, Scalar::ZERO);
    PowerGerm::new(coeffs, cfg.series.reference_radius)
}

/// Sup of `|R_l(g) - h|` on the certificate circle.
fn certificate(g: &PowerGerm, letter: &CopyLabel, h: &PowerGerm, cfg: &SolverConfig) -> Result<(Scalar, Scalar)> {
    let r = renormalize(g, letter, &cfg.series)?;
    let d = sup_distance(&r.germ, h, cfg.certificate_radius(), cfg.certificate_samples)?;
    Ok((d, r.lambda))
}

/// Fixed point of renormalization with stationary combinatorics `word`.
pub fn solve_fixed_point(word: &Word, degree: usize, seed: &PowerGerm, cfg: &SolverConfig) -> Result<FixedPointResult> {
    let chart = EvenChart::new(degree, &cfg.series)?;
    let seed = check_seed(seed, &chart, cfg)?;
    let letter = word.composite();
    let (seed_res, _) = certificate(&seed, &letter, &seed, cfg)?;
    if seed_res > 0.1 {
        return Err(Error::InvalidArgument(format!(
            "seed residual {} exceeds 0.1",
            seed_res.to_decimal(3)
        )));
    }
    let sys = Shooting {
        chart,
        periods: vec![letter.period],
        cfg,
    };
    let (x, iterations) = newton(&sys, chart.unknowns(&seed))?;
    let germ = chart.germ(&x, cfg.series.reference_radius)?;
    let (residual, lambda) = certificate(&germ, &letter, &germ, cfg)?;
    if residual > cfg.tol {
        return Err(Error::NotFixedPoint {
            residual: residual.to_f64(),
        });
    }
    Ok(FixedPointResult {
        germ,
        lambda,
        residual,
        iterations,
        truncation: degree,
        word: word.clone(),
    })
}

/// Seeds at `depth` and solves.
pub fn fixed_point(word: &Word, degree: usize, depth: usize, cfg: &SolverConfig) -> Result<FixedPointResult> {
    let seed = seed_from_cascade(word, depth, degree, &cfg.series)?;
    solve_fixed_point(word, degree, &seed, cfg)
}

/// Periodic orbit `g_1 -> g_2 -> ... -> g_1` of renormalization along `word`.
pub fn solve_periodic(word: &Word, degree: usize, seeds: &[PowerGerm], cfg: &SolverConfig) -> Result<CycleResult> {
    let k = word.len();
    if seeds.len() != k {
        return Err(Error::InvalidArgument(format!("{} seeds for a word of length {k}", seeds.len())));
    }
    let chart = EvenChart::new(degree, &cfg.series)?;
    let mut x = Vec::with_capacity(k * chart.dim());
    for s in seeds {
        x.extend(chart.unknowns(&check_seed(s, &chart, cfg)?));
    }
    let sys = Shooting {
        chart,
        periods: word.letters().iter().map(|l| l.period).collect(),
        cfg,
    };
    let (x, iterations) = newton(&sys, x)?;
    let m = chart.dim();
    let germs = (0..k)
        .map(|i| chart.germ(&x[i * m..(i + 1) * m], cfg.series.reference_radius))
        .collect::<Result<Vec<_>>>()?;
    let mut residuals = Vec::with_capacity(k);
    let mut lambdas = Vec::with_capacity(k);
    for (i, letter) in word.letters().iter().enumerate() {
        let (d, lambda) = certificate(&germs[i], letter, &germs[(i + 1) % k], cfg)?;
        residuals.push(d);
        lambdas.push(lambda);
    }
    let shift_consistency = residuals.iter().copied().fold(Scalar::ZERO, Scalar::max);
    if shift_consistency > 1e-8 {
        return Err(Error::ShiftInconsistent {
            consistency: shift_consistency.to_f64(),
        });
    }
    Ok(CycleResult {
        germs,
        word: word.clone(),
        lambdas,
        residuals,
        shift_consistency,
        iterations,
        truncation: degree,
    })
}

/// Seeds from the cascade of `word` at `depth` rounds and solves the cycle.
pub fn periodic_orbit(word: &Word, degree: usize, depth: usize, cfg: &SolverConfig) -> Result<CycleResult> {
    let seeds = seed_cycle(word, depth, degree, &cfg.series)?;
    solve_periodic(word, degree, &seeds, cfg)
}

impl FixedPointResult {
    /// The stationary solution viewed as a cycle of length one.
    pub fn as_cycle(&self) -> CycleResult {
        CycleResult {
            germs: vec![self.germ.clone()],
            word: self.word.clone(),
            lambdas: vec![self.lambda],
            residuals: vec![self.residual],
            shift_consistency: self.residual,
            iterations: self.iterations,
            truncation: self.truncation,
        }
    }
}

impl CycleResult {
    /// Smallest distance on the certificate circle between this cycle's germs
    /// and any germ of `other`.
    pub fn distance_to(&self, other: &[PowerGerm], cfg: &SolverConfig) -> Result<Scalar> {
        let mut best = Scalar::from_f64(f64::INFINITY);
        for g in &self.germs {
            for h in other {
                best = best.min(sup_distance(g, h, cfg.certificate_radius(), cfg.certificate_samples)?);
            }
        }
        Ok(best)
    }

    /// Largest distance between `germs[i]` and `other[(i + shift) mod k]`.
    pub fn rotation_distance(&self, other: &CycleResult, shift: usize, cfg: &SolverConfig) -> Result<Scalar> {
        let k = self.germs.len();
        if other.germs.len() != k {
            return Err(Error::InvalidArgument("cycles of different length".into()));
        }
        let mut worst = Scalar::ZERO;
        for i in 0..k {
            let d = sup_distance(
                &self.germs[i],
                &other.germs[(i + shift) % k],
                cfg.certificate_radius(),
                cfg.certificate_samples,
            )?;
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubling() -> Word {
        Word::single(CopyLabel::doubling())
    }

    #[test]
    fn chart_round_trips() {
        let cfg = SolverConfig::default();
        let chart = EvenChart::new(10, &cfg.series).unwrap();
        assert_eq!(chart.indices(), vec![0, 4, 6, 8, 10]);
        assert_eq!(chart.dim(), 5);
        let g = PowerGerm::quadratic(Scalar::from_f64(-1.4), 10, Scalar::from_f64(2.5)).unwrap();
        let back = chart.germ(&chart.unknowns(&g), g.radius()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn zero_depth_seed_is_the_truncated_quadratic() {
        let cfg = SeriesConfig::default();
        let g = seed_from_cascade(&doubling(), 0, 30, &cfg).unwrap();
        assert_eq!(g.degree(), 30);
        assert!((g.constant() + 1.401155189).abs().to_f64() < 1e-8);
        assert!(g.coeffs()[3..].iter().all(|c| c.is_zero()));
    }

    #[test]
    fn depth_four_seed_is_close() {
        let cfg = SeriesConfig::default();
        let g = seed_from_cascade(&doubling(), 4, 30, &cfg).unwrap();
        assert!((g.constant() + 1.527633).abs().to_f64() < 3e-3);
        let r = renormalize(&g, &CopyLabel::doubling(), &cfg).unwrap();
        let d = sup_distance(&r.germ, &g, Scalar::from_f64(1.25), 512).unwrap();
        assert!(d < 1e-3, "seed residual {d}");
    }

    #[test]
    fn doubling_fixed_point() {
        let cfg = SolverConfig::default();
        let fp = fixed_point(&doubling(), 30, 4, &cfg).unwrap();
        assert!(fp.residual < 1e-10, "residual {}", fp.residual);
        assert!((fp.germ.constant() + 1.527633).abs().to_f64() < 1e-6);
        assert!((fp.lambda + 2.502908).abs().to_f64() < 1e-6);
        assert!(fp.germ.is_even() && fp.germ.is_normalized());
        // Newton started at the solution stays there.
        let again = solve_fixed_point(&doubling(), 30, &fp.germ, &cfg).unwrap();
        assert!(again.iterations <= 2);
        assert!((again.residual - fp.residual).abs() < 10.0 * cfg.tol);
    }

    #[test]
    fn seed_independence_and_truncation_stability() {
        let cfg = SolverConfig::default();
        let sols: Vec<_> = [3, 4, 5].iter().map(|&d| fixed_point(&doubling(), 30, d, &cfg).unwrap()).collect();
        for a in &sols {
            for b in &sols {
                let d = sup_distance(&a.germ, &b.germ, cfg.certificate_radius(), 512).unwrap();
                assert!(d < 10.0 * cfg.tol);
            }
        }
        let wide = fixed_point(&doubling(), 38, 4, &cfg).unwrap();
        for k in 0..=30 {
            assert!((wide.germ.coeff(k) - sols[1].germ.coeff(k)).abs().to_f64() < 1e-8, "a_{k}");
        }
    }

    #[test]
    fn doubled_word_reproduces_the_fixed_point() {
        let cfg = SolverConfig::default();
        let fp = fixed_point(&doubling(), 30, 4, &cfg).unwrap();
        let w = Word::repeat(&CopyLabel::doubling(), 2);
        let cyc = solve_periodic(&w, 30, &[fp.germ.clone(), fp.germ.clone()], &cfg).unwrap();
        assert!(cyc.shift_consistency < 1e-10);
        assert!(cyc.distance_to(&[fp.germ.clone()], &cfg).unwrap() < 1e-9);
    }

    #[test]
    fn rejects_bad_seeds() {
        let cfg = SolverConfig::default();
        let far = PowerGerm::quadratic(Scalar::from_f64(-1.0), 30, Scalar::from_f64(2.5)).unwrap();
        assert!(solve_fixed_point(&doubling(), 30, &far, &cfg).is_err());
        let w = Word::repeat(&CopyLabel::doubling(), 2);
        assert!(solve_periodic(&w, 30, &[far], &cfg).is_err());
    }
}
