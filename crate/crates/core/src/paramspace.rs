//! Real quadratic family `P_c(x) = x^2 + c`: superattracting centers,
//! tuned cascades, windows of real copies, the straightened
//! renormalization on the real line, and escape times.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kneading::{self, compare, quadratic_kneading, CopyLabel, Word, C, L, R};
use crate::scalar::{ComplexScalar, Scalar};

/// Longest orbit the double-double scalar resolves reliably.
pub const MAX_PERIOD: usize = 1 << 14;
/// Gaps below this are indistinguishable from rounding.
pub const MIN_GAP: f64 = 1e-26;

const CENTER_RESIDUAL: f64 = 1e-25;
/// Longest critical orbit followed by [`sigma_real`].
pub const MAX_SIGMA_ORBIT: usize = 1 << 16;

pub fn quadratic_orbit(c: Scalar, steps: usize) -> Scalar {
    let mut x = Scalar::ZERO;
    for _ in 0..steps {
        x = x.sqr() + c;
    }
    x
}

/// `P_c^n(0)` and its `c`-derivative.
pub fn orbit_with_c_derivative(c: Scalar, n: usize) -> (Scalar, Scalar) {
    let mut x = Scalar::ZERO;
    let mut v = Scalar::ZERO;
    for _ in 0..n {
        v = x * v * 2.0 + 1.0;
        x = x.sqr() + c;
    }
    (x, v)
}

/// Aitken's delta-squared extrapolation of the last three terms.
pub fn aitken(x0: Scalar, x1: Scalar, x2: Scalar) -> Scalar {
    let denom = x2 - x1 * 2.0 + x0;
    if denom.is_zero() {
        return x2;
    }
    x2 - (x2 - x1).sqr() / denom
}

/// Result of an order bisection; `tie` is set when a probe compared equal.
#[derive(Clone, Copy, Debug)]
pub struct Bracket {
    pub lo: Scalar,
    pub hi: Scalar,
    pub tie: Option<Scalar>,
}

impl Bracket {
    pub fn mid(&self) -> Scalar {
        self.tie.unwrap_or((self.lo + self.hi) * 0.5)
    }
}

/// Bisects a comparator that is monotone in the parameter: `cmp(lo)` and
/// `cmp(hi)` must be opposite strict orders. Stops at width `tol` or on an
/// exact tie.
pub fn order_bisect<F: Fn(Scalar) -> Ordering>(lo: Scalar, hi: Scalar, cmp: F, tol: f64) -> Result<Bracket> {
    let (mut lo, mut hi) = (lo, hi);
    let at_lo = cmp(lo);
    let at_hi = cmp(hi);
    if at_lo == Ordering::Equal {
        return Ok(Bracket { lo, hi: lo, tie: Some(lo) });
    }
    if at_hi == Ordering::Equal {
        return Ok(Bracket { lo: hi, hi, tie: Some(hi) });
    }
    if at_lo == at_hi {
        return Err(Error::BracketNotFound(format!(
            "target not bracketed by [{}, {}]",
            lo.to_decimal(17),
            hi.to_decimal(17)
        )));
    }
    for _ in 0..400 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let m = (lo + hi) * 0.5;
        if m == lo || m == hi {
            break;
        }
        match cmp(m) {
            Ordering::Equal => return Ok(Bracket { lo, hi, tie: Some(m) }),
            o if o == at_lo => lo = m,
            _ => hi = m,
        }
    }
    Ok(Bracket { lo, hi, tie: None })
}

/// Extent of the set where `cmp` is `Equal`, given one point `m` of it
/// inside `[lo, hi]`.
pub fn tie_extent<F: Fn(Scalar) -> Ordering>(lo: Scalar, hi: Scalar, m: Scalar, cmp: F, tol: f64) -> (Scalar, Scalar) {
    let edge = |mut inside: Scalar, mut outside: Scalar| {
        for _ in 0..400 {
            if (inside - outside).abs() <= tol {
                break;
            }
            let mid = (inside + outside) * 0.5;
            if cmp(mid) == Ordering::Equal {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    (edge(m, lo), edge(m, hi))
}

fn check_period(p: usize) -> Result<()> {
    if p > MAX_PERIOD {
        return Err(Error::PrecisionExhausted(format!("period {p} exceeds {MAX_PERIOD}")));
    }
    Ok(())
}

/// Newton on `c -> P_c^p(0)`, starting from a kneading-bisection estimate.
fn polish_center(c0: Scalar, p: usize) -> (Scalar, Scalar, Scalar) {
    let mut c = c0;
    let (mut f, mut df) = orbit_with_c_derivative(c, p);
    let mut last_step = Scalar::from_f64(f64::INFINITY);
    for _ in 0..12 {
        if f.is_zero() || df.is_zero() {
            break;
        }
        let step = f / df;
        if step.abs() >= last_step.abs() {
            break;
        }
        let trial = c - step;
        let (ft, dft) = orbit_with_c_derivative(trial, p);
        if ft.abs() > f.abs() {
            break;
        }
        c = trial;
        f = ft;
        df = dft;
        last_step = step;
    }
    (c, f, df)
}

/// The superattracting parameter whose kneading is `kneading` (which must
/// end in `C`).
pub fn center_of_kneading(kneading: &[i8]) -> Result<Scalar> {
    let p = kneading.len();
    if p == 0 || *kneading.last().unwrap() != C {
        return Err(Error::InvalidArgument("center kneading must end in C".into()));
    }
    check_period(p)?;
    if p == 1 {
        return Ok(Scalar::ZERO);
    }
    let cmp = |c: Scalar| compare(&quadratic_kneading(c, p, 0.0), kneading);
    let b = order_bisect(Scalar::from_f64(-2.0), Scalar::from_f64(0.25), cmp, 1e-31).map_err(|_| {
        Error::NotAdmissible(format!("kneading {} not realized", kneading::to_letters(kneading)))
    })?;
    let (c, f, df) = polish_center(b.mid(), p);
    let found = quadratic_kneading(c, p - 1, 0.0);
    if found[..] != kneading[..p - 1] {
        return Err(Error::NotAdmissible(format!(
            "kneading {} not realized (nearest {})",
            kneading::to_letters(kneading),
            kneading::to_letters(&found)
        )));
    }
    // Deep periods amplify rounding by |dF/dc|; then accept c resolved to full precision.
    let scaled = f.abs() / df.abs().max(Scalar::ONE);
    if f.abs() >= CENTER_RESIDUAL && scaled >= Scalar::from_f64(1e-31) {
        return Err(Error::PrecisionExhausted(format!(
            "center residual {} for period {p}",
            f.to_decimal(3)
        )));
    }
    Ok(c)
}

pub fn center_of_period(word: &Word) -> Result<Scalar> {
    check_period(word.period())?;
    center_of_kneading(&word.center_kneading())
}

/// `|P_c^p(0)|` at the returned center, for reporting.
pub fn center_residual(c: Scalar, p: usize) -> Scalar {
    quadratic_orbit(c, p).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeRow {
    pub n: usize,
    pub c: Scalar,
    /// `c_{n-1} - c_n`.
    pub gap: Option<Scalar>,
    /// `gap_n / gap_{n+1}`.
    pub ratio: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeTable {
    pub rows: Vec<CascadeRow>,
    pub delta_extrapolated: Option<Scalar>,
    pub c_limit: Option<Scalar>,
}

impl CascadeTable {
    /// Fills gaps, ratios and extrapolations from a list of parameters.
    pub fn from_params(first_n: usize, params: &[Scalar]) -> CascadeTable {
        let mut rows: Vec<CascadeRow> = params
            .iter()
            .enumerate()
            .map(|(i, &c)| CascadeRow {
                n: first_n + i,
                c,
                gap: (i > 0).then(|| params[i - 1] - c),
                ratio: None,
            })
            .collect();
        for i in 1..rows.len().saturating_sub(1) {
            let (g0, g1) = (rows[i].gap.unwrap(), rows[i + 1].gap.unwrap());
            if !g1.is_zero() {
                rows[i].ratio = Some(g0 / g1);
            }
        }
        let ratios: Vec<Scalar> = rows.iter().filter_map(|r| r.ratio).collect();
        let delta_extrapolated = match ratios.len() {
            0 => None,
            1 | 2 => ratios.last().copied(),
            k => Some(aitken(ratios[k - 3], ratios[k - 2], ratios[k - 1])),
        };
        let c_limit = match params.len() {
            0 => None,
            1 | 2 => params.last().copied(),
            k => Some(aitken(params[k - 3], params[k - 2], params[k - 1])),
        };
        CascadeTable {
            rows,
            delta_extrapolated,
            c_limit,
        }
    }

    pub fn params(&self) -> Vec<Scalar> {
        self.rows.iter().map(|r| r.c).collect()
    }

    pub fn ratio(&self, n: usize) -> Option<Scalar> {
        self.rows.iter().find(|r| r.n == n).and_then(|r| r.ratio)
    }

    /// CSV with columns `n,c_n,gap,ratio`; empty cells where undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,c_n,gap,ratio\n");
        for r in &self.rows {
            let opt = |x: Option<Scalar>| x.map(|v| v.to_decimal(34)).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.n, r.c.to_decimal(34), opt(r.gap), opt(r.ratio));
        }
        out
    }
}

/// Centers of `letter^n`, `n = 1..=n_max`.
pub fn tuned_cascade(letter: &CopyLabel, n_max: usize) -> Result<CascadeTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    if (n_max as f64) * (letter.period as f64).log2() > 14.0 + 1e-9 {
        return Err(Error::PrecisionExhausted(format!(
            "{n_max} levels of period {} exceed the precision budget",
            letter.period
        )));
    }
    let mut params = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let c = center_of_period(&Word::repeat(letter, n))?;
        if let Some(&prev) = params.last() {
            let gap: Scalar = prev - c;
            if gap.abs() < MIN_GAP {
                return Err(Error::PrecisionExhausted(format!("cascade gap {} at n = {n}", gap.to_decimal(3))));
            }
        }
        params.push(c);
    }
    Ok(CascadeTable::from_params(1, &params))
}

/// Least-squares line through `(x, y)` and its largest residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub r_squared: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    LineFit {
        slope,
        intercept,
        max_residual,
        r_squared: if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 },
    }
}

/// Fit of `log|c_n - c_limit|` against `n` over `n_range`.
pub fn cascade_geometric_fit(table: &CascadeTable, n_range: std::ops::RangeInclusive<usize>) -> Result<LineFit> {
    let limit = table.c_limit.ok_or(Error::InsufficientRows { needed: 3, got: table.rows.len() })?;
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| n_range.contains(&r.n))
        .map(|r| (r.n as f64, (r.c - limit).abs().ln().to_f64()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientRows { needed: 3, got: pts.len() });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(line_fit(&xs, &ys))
}

/// Closest returns of the superattracting cycles along a cascade:
/// `d_n = P_{c_n}^{p^{n-1}}(0)` and the ratios `d_n / d_{n+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitScaling {
    pub distances: Vec<Scalar>,
    pub ratios: Vec<Scalar>,
    pub alpha_extrapolated: Scalar,
}

pub fn orbit_scaling(letter: &CopyLabel, table: &CascadeTable) -> Result<OrbitScaling> {
    let distances: Vec<Scalar> = table
        .rows
        .iter()
        .map(|r| quadratic_orbit(r.c, letter.period.pow(r.n as u32 - 1)))
        .collect();
    let ratios: Vec<Scalar> = distances.windows(2).map(|w| w[0] / w[1]).collect();
    let k = ratios.len();
    if k < 3 {
        return Err(Error::InsufficientRows { needed: 4, got: distances.len() });
    }
    let alpha_extrapolated = aitken(ratios[k - 3], ratios[k - 2], ratios[k - 1]);
    Ok(OrbitScaling {
        distances,
        ratios,
        alpha_extrapolated,
    })
}

/// Real trace of a (tuned) copy: `tip < center < root`; the window keeps
/// `[tip, center]` and drops the cusp side `(center, root]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopyDescriptor {
    pub word: String,
    pub period: usize,
    pub kneading: String,
    pub center: Scalar,
    pub root: Scalar,
    pub tip: Scalar,
    pub window: [Scalar; 2],
    pub primitive: bool,
    /// Largest residual of the tangency system solved for the root.
    pub root_residual: Scalar,
}

impl CopyDescriptor {
    pub fn contains(&self, c: Scalar) -> bool {
        c >= self.window[0] && c <= self.window[1]
    }
}

/// Continuation in the multiplier `m: 0 -> target` of a `q`-cycle born at
/// the center `c0` (where `x = 0` is on the cycle).
fn multiplier_continuation(c0: Scalar, q: usize, target: f64) -> Result<(Scalar, Scalar)> {
    let fail = |msg: String| Error::TangencySolveFailed(msg);
    let (mut c, mut x) = (c0, Scalar::ZERO);
    let steps = 40;
    for s in 1..=steps {
        let m = Scalar::from_f64(target * s as f64 / steps as f64);
        let mut converged = false;
        for _ in 0..60 {
            // Orbit with derivatives: u = dx/dx0, v = dx/dc, w = du/dx0, y = du/dc.
            let (mut xk, mut u, mut v, mut w, mut y) = (x, Scalar::ONE, Scalar::ZERO, Scalar::ZERO, Scalar::ZERO);
            for _ in 0..q {
                let (nu, nv) = (xk * u * 2.0, xk * v * 2.0 + 1.0);
                let (nw, ny) = ((u.sqr() + xk * w) * 2.0, (v * u + xk * y) * 2.0);
                xk = xk.sqr() + c;
                u = nu;
                v = nv;
                w = nw;
                y = ny;
            }
            let f1 = xk - x;
            let f2 = u - m;
            let (a11, a12, a21, a22) = (u - 1.0, v, w, y);
            let det = a11 * a22 - a12 * a21;
            if det.is_zero() || !det.is_finite() {
                return Err(fail(format!("singular tangency Jacobian at m = {}", m.to_f64())));
            }
            let dx = (f1 * a22 - f2 * a12) / det;
            let dc = (a11 * f2 - a21 * f1) / det;
            x -= dx;
            c -= dc;
            if dx.abs() + dc.abs() < Scalar::from_f64(1e-31) {
                converged = true;
                break;
            }
        }
        if !converged || !c.is_finite() {
            return Err(fail(format!("no convergence at multiplier {}", m.to_f64())));
        }
    }
    Ok((c, x))
}

/// Residuals `(P_c^q(x) - x, (P_c^q)'(x) - m)`.
pub fn tangency_residual(c: Scalar, x: Scalar, q: usize, m: f64) -> (Scalar, Scalar) {
    let (mut xk, mut u) = (x, Scalar::ONE);
    for _ in 0..q {
        u = xk * u * 2.0;
        xk = xk.sqr() + c;
    }
    (xk - x, u - m)
}

/// Parameter where the critical value lands on the orientation-reversed
/// boundary fixed point of the renormalized map: kneading `w * (L R^inf)`.
pub fn tip_of(word: &Word, lo: Scalar, hi: Scalar) -> Result<Scalar> {
    let p = word.period();
    let depth = p * 48 + 16;
    let target = word.tune(&tip_tail(depth), depth);
    let cmp = |c: Scalar| compare(&quadratic_kneading(c, depth, 0.0), &target);
    Ok(order_bisect(lo, hi, cmp, 1e-30)?.mid())
}

fn tip_tail(depth: usize) -> Vec<i8> {
    let mut t = vec![R; depth];
    t[0] = L;
    t
}

/// Window, center, root and tip of the copy `word`.
pub fn real_window(word: &Word) -> Result<CopyDescriptor> {
    let p = word.period();
    check_period(p)?;
    let kn = word.center_kneading();
    let center = center_of_kneading(&kn)?;
    let last = word.letters().last().unwrap();
    let satellite = last.period == 2;
    let (root, x, q, m) = if p == 2 {
        (Scalar::from_f64(-0.75), Scalar::from_f64(-0.5), 1, -1.0)
    } else if satellite {
        // The cycle of half the period reaches multiplier -1 here.
        let parent = p / 2;
        let parent_center = center_of_kneading(&Word(word.letters()[..word.len() - 1].to_vec()).center_kneading())?;
        let (c, x) = multiplier_continuation(parent_center, parent, -1.0)?;
        (c, x, parent, -1.0)
    } else {
        let (c, x) = multiplier_continuation(center, p, 1.0)?;
        (c, x, p, 1.0)
    };
    let (r1, r2) = tangency_residual(root, x, q, m);
    let root_residual = r1.abs().max(r2.abs());
    if root <= center {
        return Err(Error::TangencySolveFailed(format!(
            "root {} not on the cusp side of center {}",
            root.to_decimal(17),
            center.to_decimal(17)
        )));
    }
    // The tip lies between the center and the next lower structure; search
    // from -2 (or the parent tip) up to the center.
    let lo = if word.len() > 1 {
        real_window(&Word(word.letters()[..word.len() - 1].to_vec()))?.tip
    } else {
        Scalar::from_f64(-2.0)
    };
    let tip = tip_of(word, lo, center)?;
    Ok(CopyDescriptor {
        word: word.to_string(),
        period: p,
        kneading: kneading::to_letters(&kn),
        center,
        root,
        tip,
        window: [tip, center],
        primitive: !satellite,
        root_residual,
    })
}

/// Affine-free kneading of the `p`-renormalization of `P_c`; positions off
/// multiples of `p` must repeat the label's signature.
pub fn renormalized_kneading(c: Scalar, letter: &CopyLabel, depth: usize, zero_tol: f64) -> Result<Vec<i8>> {
    let p = letter.period;
    let sign = letter.sign();
    let mut out = Vec::with_capacity(depth);
    let mut x = Scalar::ZERO;
    for m in 0..depth {
        for j in 0..p - 1 {
            x = x.sqr() + c;
            let s = if x.is_sign_negative() { L } else { R };
            if x.abs() <= zero_tol || s != letter.signature[j] {
                return Err(Error::NotRenormalizable {
                    period: p,
                    reason: format!("orbit leaves the copy at step {}", m * p + j + 1),
                });
            }
        }
        x = x.sqr() + c;
        let s = if x.abs() <= zero_tol {
            C
        } else if x.is_sign_negative() {
            -sign
        } else {
            sign
        };
        out.push(s);
        if s == C {
            break;
        }
    }
    Ok(out)
}

/// Options for [`sigma_real`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaOptions {
    pub depth: usize,
    /// Orbit points closer than this to 0 count as hitting it.
    pub zero_tol: f64,
    /// Largest tolerated width of a kneading tie.
    pub tie_tol: f64,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        SigmaOptions {
            depth: 40,
            zero_tol: 1e-24,
            tie_tol: 1e-9,
        }
    }
}

/// The straightened renormalization `c -> c'` on the real line.
pub fn sigma_real(c: Scalar, letter: &CopyLabel, opts: &SigmaOptions) -> Result<Scalar> {
    if letter.period * opts.depth > MAX_SIGMA_ORBIT {
        return Err(Error::PrecisionExhausted(format!(
            "orbit length {} exceeds {MAX_SIGMA_ORBIT}",
            letter.period * opts.depth
        )));
    }
    let window = real_window(&Word::single(letter.clone()))?;
    if c < window.tip || c > window.root {
        return Err(Error::NotRenormalizable {
            period: letter.period,
            reason: format!("parameter {} outside [{}, {}]", c.to_decimal(17), window.tip.to_decimal(17), window.root.to_decimal(17)),
        });
    }
    let target = renormalized_kneading(c, letter, opts.depth, opts.zero_tol)?;
    let cmp = |x: Scalar| compare(&quadratic_kneading(x, opts.depth, 0.0), &target);
    let (lo, hi) = (Scalar::from_f64(-2.0), Scalar::from_f64(0.25));
    let b = order_bisect(lo, hi, cmp, 1e-30)?;
    match b.tie {
        None => Ok(b.mid()),
        Some(m) => {
            let (a, z) = tie_extent(b.lo, b.hi, m, cmp, 1e-30);
            let width = (z - a).to_f64();
            // A tie ending in C is a center and is resolved exactly.
            if target.last() != Some(&C) && width > opts.tie_tol {
                return Err(Error::KneadingTieAtDepthK { depth: opts.depth, width });
            }
            Ok((a + z) * 0.5)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisiurewiczRow {
    pub n: usize,
    pub c: Scalar,
    /// `|c_n + 2| 4^n`.
    pub scaled: Scalar,
    /// `|c_n + 2| / |c_{n-1} + 2|`.
    pub ratio: Option<Scalar>,
}

pub const MISIUREWICZ_MAX_N: usize = 20;

/// Centers with kneading `L R^{n-2} C`, approaching `-2` at rate `4^{-n}`.
pub fn misiurewicz_cascade(n_max: usize) -> Result<Vec<MisiurewiczRow>> {
    if n_max > MISIUREWICZ_MAX_N {
        return Err(Error::PrecisionExhausted(format!(
            "n = {n_max} exceeds the supported {MISIUREWICZ_MAX_N}"
        )));
    }
    let mut rows: Vec<MisiurewiczRow> = Vec::new();
    for n in 2..=n_max {
        let label = CopyLabel::leftmost(n)?;
        let c = center_of_kneading(&label.center_kneading())
            .map_err(|e| Error::BracketNotFound(format!("n = {n}: {e}")))?;
        let dist = (c + 2.0).abs();
        rows.push(MisiurewiczRow {
            n,
            c,
            scaled: dist * Scalar::from_f64(4.0).powi(n as i32),
            ratio: rows.last().map(|r| dist / (r.c + 2.0).abs()),
        });
    }
    Ok(rows)
}

/// Steps until `|P_c^k(0)| > r_esc`, or `None` if the orbit stays bounded
/// for `max_iter` steps.
pub fn escape_time(c: ComplexScalar, max_iter: usize, r_esc: f64) -> Option<usize> {
    let r2 = Scalar::from_f64(r_esc * r_esc);
    let mut z = Complex::new(Scalar::ZERO, Scalar::ZERO);
    for k in 1..=max_iter {
        z = Complex::new(z.re.sqr() - z.im.sqr() + c.re, z.re * z.im * 2.0 + c.im);
        if z.re.sqr() + z.im.sqr() > r2 {
            return Some(k);
        }
    }
    None
}

/// [`escape_time`] in plain `f64`.
pub fn escape_time_f64(c_re: f64, c_im: f64, max_iter: usize, r_esc: f64) -> Option<usize> {
    let r2 = r_esc * r_esc;
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for k in 1..=max_iter {
        let nx = x * x - y * y + c_re;
        y = 2.0 * x * y + c_im;
        x = nx;
        if x * x + y * y > r2 {
            return Some(k);
        }
    }
    None
}
