//! Membership grids of the parameter plane near Feigenbaum points, the gap
//! statistic `r(eps)` and zoom comparisons.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ComplexScalar, Scalar};

pub const ESCAPE_RADIUS: f64 = 2.0;
pub const MIN_RESOLUTION: usize = 64;
pub const MIN_SCALE: f64 = 1e-13;
/// The doubling Feigenbaum point `c_*`, to 34 digits.
pub const FEIGENBAUM_POINT: &str = "-1.401155189092050603128410327208547";

pub fn feigenbaum_point() -> ComplexScalar {
    Complex::new(FEIGENBAUM_POINT.parse().unwrap(), Scalar::ZERO)
}

/// Below this pixel pitch the orbit is followed in [`Scalar`].
const F64_PITCH_FLOOR: f64 = 1e-12;

/// The iteration budget `1000 eps^{-1/2}` used for zoom sequences.
pub fn max_iter_for(eps: f64) -> usize {
    (1e3 * eps.powf(-0.5)).ceil() as usize
}

/// Square window of half-width `scale`; row 0 is the top edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipGrid {
    pub center: [Scalar; 2],
    pub scale: Scalar,
    pub resolution: usize,
    pub max_iter: usize,
    pub sampling: Sampling,
    /// Row-major; `true` for orbits still bounded after `max_iter` steps.
    pub cells: Vec<bool>,
    /// Escape step per pixel, `0` for members.
    pub escape: Vec<u32>,
}

impl MembershipGrid {
    pub fn pitch(&self) -> Scalar {
        self.scale * 2.0 / self.resolution as f64
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.resolution + col]
    }

    pub fn member_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> ComplexScalar {
        pixel_center(self.center, self.scale, self.resolution, row, col)
    }

    /// Binary PGM; members are 255, escapes are log-scaled into `0..=254`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.resolution;
        let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
        let top = ((self.max_iter + 1) as f64).ln();
        out.extend(self.cells.iter().zip(&self.escape).map(|(&m, &k)| {
            if m {
                255
            } else {
                ((254.0 * ((k as f64) + 1.0).ln() / top).floor() as u8).min(254)
            }
        }));
        out
    }
}

fn pixel_center(center: [Scalar; 2], scale: Scalar, res: usize, row: usize, col: usize) -> ComplexScalar {
    let pitch = scale * 2.0 / res as f64;
    let re = center[0] - scale + pitch * (col as f64 + 0.5);
    let im = center[1] + scale - pitch * (row as f64 + 0.5);
    Complex::new(re, im)
}

/// How a pixel is classified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Member iff the orbit of the pixel center stays bounded.
    PixelCenter,
    /// Also a member when the exterior distance estimate at the pixel center
    /// is below half a pitch, so filaments thinner than a pixel register.
    DistanceEstimate,
}

/// `|z|^2` beyond which the distance estimate is read off.
const DE_BAILOUT2: f64 = 1e20;

/// Result of following one orbit: escape step (if any) and, for escapes,
/// the exterior distance estimate.
type Orbit = (Option<u32>, f64);

/// Escape step of `z -> z^2 + c`. Orbits that revisit a saved point to
/// rounding are attracted to a cycle and stop early.
fn orbit_f64(cr: f64, ci: f64, max_iter: usize, estimate: bool) -> Orbit {
    let r2 = ESCAPE_RADIUS * ESCAPE_RADIUS;
    let (mut x, mut y, mut dx, mut dy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut sx, mut sy) = (0.0f64, 0.0f64);
    let mut window = 8usize;
    let mut since = 0usize;
    for k in 1..=max_iter {
        if estimate {
            let ndx = 2.0 * (x * dx - y * dy) + 1.0;
            dy = 2.0 * (x * dy + y * dx);
            dx = ndx;
        }
        let nx = x * x - y * y + cr;
        y = 2.0 * x * y + ci;
        x = nx;
        if x * x + y * y > r2 {
            if !estimate {
                return (Some(k as u32), f64::INFINITY);
            }
            // Escape is fast from here; follow the orbit out to the bailout.
            for _ in 0..64 {
                let m2 = x * x + y * y;
                if m2 > DE_BAILOUT2 {
                    let r = m2.sqrt();
                    return (Some(k as u32), r * r.ln() / dx.hypot(dy));
                }
                let ndx = 2.0 * (x * dx - y * dy) + 1.0;
                dy = 2.0 * (x * dy + y * dx);
                dx = ndx;
                let nx = x * x - y * y + cr;
                y = 2.0 * x * y + ci;
                x = nx;
            }
            return (Some(k as u32), f64::INFINITY);
        }
        if (x - sx).abs() < 1e-16 && (y - sy).abs() < 1e-16 {
            return (None, 0.0);
        }
        since += 1;
        if since == window {
            sx = x;
            sy = y;
            since = 0;
            window *= 2;
        }
    }
    (None, 0.0)
}

fn orbit_dd(c: ComplexScalar, max_iter: usize, estimate: bool) -> Orbit {
    let r2 = ESCAPE_RADIUS * ESCAPE_RADIUS;
    let (mut x, mut y) = (Scalar::ZERO, Scalar::ZERO);
    let (mut dx, mut dy) = (0.0f64, 0.0f64);
    let (mut sx, mut sy) = (Scalar::ZERO, Scalar::ZERO);
    let mut window = 8usize;
    let mut since = 0usize;
    for k in 1..=max_iter {
        if estimate {
            let (xf, yf) = (x.to_f64(), y.to_f64());
            let ndx = 2.0 * (xf * dx - yf * dy) + 1.0;
            dy = 2.0 * (xf * dy + yf * dx);
            dx = ndx;
        }
        let nx = x.sqr() - y.sqr() + c.re;
        y = x * y * 2.0 + c.im;
        x = nx;
        if (x.sqr() + y.sqr()).hi() > r2 {
            if !estimate {
                return (Some(k as u32), f64::INFINITY);
            }
            let (cr, ci) = (c.re.to_f64(), c.im.to_f64());
            let (mut x, mut y) = (x.to_f64(), y.to_f64());
            for _ in 0..64 {
                let m2 = x * x + y * y;
                if m2 > DE_BAILOUT2 {
                    let r = m2.sqrt();
                    return (Some(k as u32), r * r.ln() / dx.hypot(dy));
                }
                let ndx = 2.0 * (x * dx - y * dy) + 1.0;
                dy = 2.0 * (x * dy + y * dx);
                dx = ndx;
                let nx = x * x - y * y + cr;
                y = 2.0 * x * y + ci;
                x = nx;
            }
            return (Some(k as u32), f64::INFINITY);
        }
        if (x - sx).abs() < 1e-30 && (y - sy).abs() < 1e-30 {
            return (None, 0.0);
        }
        since += 1;
        if since == window {
            sx = x;
            sy = y;
            since = 0;
            window *= 2;
        }
    }
    (None, 0.0)
}

/// Samples membership at pixel centers; rows are rendered in parallel.
pub fn render_grid(center: ComplexScalar, scale: Scalar, resolution: usize, max_iter: usize) -> Result<MembershipGrid> {
    render_grid_with(center, scale, resolution, max_iter, Sampling::PixelCenter)
}

pub fn render_grid_with(
    center: ComplexScalar,
    scale: Scalar,
    resolution: usize,
    max_iter: usize,
    sampling: Sampling,
) -> Result<MembershipGrid> {
    if resolution < MIN_RESOLUTION || !resolution.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} must be a power of two >= {MIN_RESOLUTION}"
        )));
    }
    if !(scale > MIN_SCALE) {
        return Err(Error::InvalidArgument(format!("scale {scale} below {MIN_SCALE:e}")));
    }
    if max_iter == 0 || max_iter > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!("max_iter {max_iter} out of range")));
    }
    let c = [center.re, center.im];
    let pitch = (scale * 2.0 / resolution as f64).to_f64();
    let use_dd = pitch < F64_PITCH_FLOOR;
    let estimate = sampling == Sampling::DistanceEstimate;
    let rows: Vec<Vec<(bool, u32)>> = (0..resolution)
        .into_par_iter()
        .map(|row| {
            (0..resolution)
                .map(|col| {
                    let p = pixel_center(c, scale, resolution, row, col);
                    let (esc, de) = if use_dd {
                        orbit_dd(p, max_iter, estimate)
                    } else {
                        orbit_f64(p.re.to_f64(), p.im.to_f64(), max_iter, estimate)
                    };
                    let member = esc.is_none() || (estimate && de < 0.5 * pitch);
                    (member, if member { 0 } else { esc.unwrap_or(0) })
                })
                .collect()
        })
        .collect();
    let flat: Vec<(bool, u32)> = rows.into_iter().flatten().collect();
    Ok(MembershipGrid {
        center: c,
        scale,
        resolution,
        max_iter,
        sampling,
        cells: flat.iter().map(|e| e.0).collect(),
        escape: flat.iter().map(|e| e.1).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub epsilon: Scalar,
    /// Largest empty disk radius, clipped to the window, over `eps`.
    pub r_estimate: Scalar,
    pub gap_center: [Scalar; 2],
    pub max_iter_used: usize,
    /// Set when no pixel escaped; `r_estimate` is then 0.
    pub all_member: bool,
}

/// One-dimensional squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let mut started = false;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            started = true;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if !started {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact squared Euclidean distance, in pixels, from each pixel to the nearest `true` pixel.
pub fn distance_transform(cells: &[bool], res: usize) -> Vec<f64> {
    let mut tmp = vec![0f64; res * res];
    let mut col_in = vec![0f64; res];
    let mut col_out = vec![0f64; res];
    for c in 0..res {
        for r in 0..res {
            col_in[r] = if cells[r * res + c] { 0.0 } else { f64::INFINITY };
        }
        edt_1d(&col_in, &mut col_out);
        for r in 0..res {
            tmp[r * res + c] = col_out[r];
        }
    }
    let mut out = vec![0f64; res * res];
    for r in 0..res {
        edt_1d(&tmp[r * res..(r + 1) * res], &mut out[r * res..(r + 1) * res]);
    }
    out
}

pub fn gap_radius(grid: &MembershipGrid) -> Result<GapReport> {
    let n = grid.resolution;
    let members = grid.member_count();
    if members == 0 {
        return Err(Error::AllEmpty);
    }
    let center_of = |r: usize, c: usize| {
        let p = grid.pixel_center(r, c);
        [p.re, p.im]
    };
    if members == n * n {
        return Ok(GapReport {
            epsilon: grid.scale,
            r_estimate: Scalar::ZERO,
            gap_center: grid.center,
            max_iter_used: grid.max_iter,
            all_member: true,
        });
    }
    let d2 = distance_transform(&grid.cells, n);
    let mut best = (0.0f64, 0usize, 0usize);
    for r in 0..n {
        for c in 0..n {
            if grid.cells[r * n + c] {
                continue;
            }
            let edge = [c as f64 + 0.5, (n - c) as f64 - 0.5, r as f64 + 0.5, (n - r) as f64 - 0.5]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let d = d2[r * n + c].sqrt().min(edge);
            if d > best.0 {
                best = (d, r, c);
            }
        }
    }
    // pitch / eps = 2 / n exactly.
    Ok(GapReport {
        epsilon: grid.scale,
        r_estimate: Scalar::from_f64(best.0 * 2.0 / n as f64),
        gap_center: center_of(best.1, best.2),
        max_iter_used: grid.max_iter,
        all_member: false,
    })
}

/// Fraction of pixels where two equally shaped grids disagree.
pub fn self_similarity_distance(a: &MembershipGrid, b: &MembershipGrid) -> Result<Scalar> {
    if a.resolution != b.resolution {
        return Err(Error::MismatchedShape(a.resolution, b.resolution));
    }
    let diff = a.cells.iter().zip(&b.cells).filter(|(x, y)| x != y).count();
    Ok(Scalar::from_f64(diff as f64 / a.cells.len() as f64))
}

/// `r(eps)` on a zoom sequence around `center`.
pub fn hairiness_series(
    center: ComplexScalar,
    epsilons: &[f64],
    resolution: usize,
    iter_factor: usize,
    sampling: Sampling,
) -> Result<Vec<GapReport>> {
    epsilons
        .iter()
        .map(|&eps| {
            let g = render_grid_with(center, Scalar::from_f64(eps), resolution, max_iter_for(eps) * iter_factor, sampling)?;
            gap_radius(&g)
        })
        .collect()
}

/// Mismatch between the windows of half-width `eps` and `eps / lambda`.
/// The outer window iterates `iter_factor * max_iter_for(eps)` steps and the
/// inner one `inner_iter_factor` times that.
pub fn zoom_mismatch(
    center: ComplexScalar,
    eps: f64,
    lambda: Scalar,
    resolution: usize,
    iter_factor: usize,
    inner_iter_factor: usize,
    sampling: Sampling,
) -> Result<Scalar> {
    let outer = Scalar::from_f64(eps);
    let inner = outer / lambda;
    let m = max_iter_for(eps) * iter_factor;
    let a = render_grid_with(center, outer, resolution, m, sampling)?;
    let b = render_grid_with(center, inner, resolution, m * inner_iter_factor, sampling)?;
    self_similarity_distance(&a, &b)
}

/// CSV rows `epsilon,r,max_iter`.
pub fn gap_csv(reports: &[GapReport]) -> String {
    let mut out = String::from("epsilon,r,max_iter\n");
    for r in reports {
        out.push_str(&format!("{:e},{},{}\n", r.epsilon.to_f64(), r.r_estimate.to_decimal(17), r.max_iter_used));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Scalar {
        Scalar::from_f64(x)
    }

    fn z(re: f64, im: f64) -> ComplexScalar {
        Complex::new(s(re), s(im))
    }

    fn grid_of(cells: Vec<bool>, res: usize) -> MembershipGrid {
        MembershipGrid {
            center: [s(0.0), s(0.0)],
            scale: s(1.0),
            resolution: res,
            max_iter: 10,
            sampling: Sampling::PixelCenter,
            escape: vec![0; cells.len()],
            cells,
        }
    }

    #[test]
    fn whole_set_overview() {
        let g = render_grid(z(0.0, 0.0), s(2.5), 64, 100).unwrap();
        // Pixel centers sit half a pitch off the axes; c = 0 is in the pixel at (31, 32).
        let p = g.pixel_center(31, 32);
        assert!(p.re.to_f64().abs() < 0.08 && p.im.to_f64().abs() < 0.08);
        assert!(g.get(31, 32));
        // c near 1.
        let col = ((1.0 + 2.5) / (5.0 / 64.0)) as usize;
        assert!(!g.get(31, col));
        assert_eq!(g, render_grid(z(0.0, 0.0), s(2.5), 64, 100).unwrap());
    }

    #[test]
    fn raising_max_iter_only_removes_members() {
        let lo = render_grid(z(-0.75, 0.1), s(0.05), 64, 50).unwrap();
        let hi = render_grid(z(-0.75, 0.1), s(0.05), 64, 500).unwrap();
        assert!(lo.cells.iter().zip(&hi.cells).all(|(&a, &b)| a || !b));
        assert!(gap_radius(&hi).unwrap().r_estimate >= gap_radius(&lo).unwrap().r_estimate);
    }

    #[test]
    fn sub_window_reproduces_parent_pixels() {
        let parent = render_grid(z(-1.25, 0.05), s(0.25), 128, 300).unwrap();
        let pitch = 0.5 / 128.0;
        // Child covers parent columns 32..96 and rows 16..80.
        let child_center = z(-1.25 - 0.25 + 64.0 * pitch, 0.05 + 0.25 - 48.0 * pitch);
        let child = render_grid(child_center, s(0.125), 64, 300).unwrap();
        for r in 0..64 {
            for c in 0..64 {
                assert_eq!(child.get(r, c), parent.get(r + 16, c + 32), "({r}, {c})");
            }
        }
    }

    #[test]
    fn gap_statistic_cases() {
        let res = 64;
        let g = grid_of(vec![true; res * res], res);
        let r = gap_radius(&g).unwrap();
        assert!(r.all_member && r.r_estimate == s(0.0));
        assert!(matches!(gap_radius(&grid_of(vec![false; res * res], res)), Err(Error::AllEmpty)));
        let mut cells = vec![false; res * res];
        cells[0] = true;
        let r = gap_radius(&grid_of(cells, res)).unwrap();
        // The window center is farthest from the edge: 31.5 pixels of 32 per unit.
        assert_eq!(r.r_estimate, s(31.5 / 32.0));
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let res = 64;
        let mut cells = vec![false; res * res];
        for &(r, c) in &[(3usize, 7usize), (40, 2), (63, 63), (20, 50), (33, 33)] {
            cells[r * res + c] = true;
        }
        let d = distance_transform(&cells, res);
        for r in 0..res {
            for c in 0..res {
                let want = (0..res * res)
                    .filter(|&k| cells[k])
                    .map(|k| {
                        let (a, b) = ((k / res) as f64 - r as f64, (k % res) as f64 - c as f64);
                        a * a + b * b
                    })
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(d[r * res + c], want);
            }
        }
    }

    #[test]
    fn mismatch_extremes_and_shapes() {
        let a = grid_of(vec![true; 64 * 64], 64);
        let b = grid_of(vec![false; 64 * 64], 64);
        assert_eq!(self_similarity_distance(&a, &a).unwrap(), s(0.0));
        assert_eq!(self_similarity_distance(&a, &b).unwrap(), s(1.0));
        let c = grid_of(vec![true; 128 * 128], 128);
        assert!(matches!(self_similarity_distance(&a, &c), Err(Error::MismatchedShape(64, 128))));
    }

    #[test]
    fn pgm_header_is_exact() {
        let g = render_grid(z(-0.5, 0.0), s(1.5), 64, 64).unwrap();
        let pgm = g.to_pgm();
        assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
        assert_eq!(pgm.len(), 13 + 64 * 64);
        assert!(pgm[13..].iter().zip(&g.cells).all(|(&v, &m)| (v == 255) == m));
    }

    #[test]
    fn distance_estimate_thickens_the_set() {
        let c = z(-1.401155189092, 0.0);
        let plain = render_grid(c, s(1e-3), 64, 5000).unwrap();
        let thick = render_grid_with(c, s(1e-3), 64, 5000, Sampling::DistanceEstimate).unwrap();
        assert!(plain.cells.iter().zip(&thick.cells).all(|(&a, &b)| !a || b));
        assert!(thick.member_count() > plain.member_count());
        assert!(gap_radius(&thick).unwrap().r_estimate < gap_radius(&plain).unwrap().r_estimate);
    }

    #[test]
    fn deep_pitch_uses_double_double() {
        let c = z(-1.401155189092, 0.0);
        let g = render_grid(c, s(1e-11), 64, 2000).unwrap();
        assert_eq!(g.cells.len(), 64 * 64);
        let p0 = g.pixel_center(0, 0);
        let p1 = g.pixel_center(0, 1);
        assert!(((p1.re - p0.re) - g.pitch()).abs().to_f64() < 1e-40);
    }
}
