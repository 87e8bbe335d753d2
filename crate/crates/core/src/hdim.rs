//! Nested windows of iterated tuning and Moran-type dimension estimates of
//! their limit Cantor set.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kneading::{CopyLabel, Word};
use crate::paramspace::{center_of_period, real_window, tip_of, MAX_PERIOD};
use crate::scalar::Scalar;

/// Children narrower than this cannot be resolved in [`Scalar`].
pub const MIN_WIDTH: f64 = 1e-26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalNode {
    pub address: Word,
    pub interval: [Scalar; 2],
    pub children: Vec<IntervalNode>,
    /// Components of the parent minus its children, left to right.
    pub gaps: Vec<[Scalar; 2]>,
}

impl IntervalNode {
    pub fn leaf(address: Word, lo: Scalar, hi: Scalar) -> IntervalNode {
        IntervalNode {
            address,
            interval: [lo, hi],
            children: Vec::new(),
            gaps: Vec::new(),
        }
    }

    pub fn width(&self) -> Scalar {
        self.interval[1] - self.interval[0]
    }

    /// Attaches children and fills in the gaps.
    pub fn with_children(mut self, mut children: Vec<IntervalNode>) -> IntervalNode {
        children.sort_by(|a, b| a.interval[0].partial_cmp(&b.interval[0]).unwrap());
        let mut gaps = Vec::with_capacity(children.len() + 1);
        let mut edge = self.interval[0];
        for c in &children {
            gaps.push([edge, c.interval[0]]);
            edge = c.interval[1];
        }
        gaps.push([edge, self.interval[1]]);
        self.children = children;
        self.gaps = gaps;
        self
    }

    /// Height of the subtree; a leaf has depth 0.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// All nodes whose address has `len` letters.
    pub fn nodes_at(&self, len: usize) -> Vec<&IntervalNode> {
        if self.address.len() == len {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.nodes_at(len)).collect()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(IntervalNode::node_count).sum::<usize>()
    }

    /// Nesting and disjointness of every child family.
    pub fn check_invariants(&self) -> Result<()> {
        let mut prev: Option<Scalar> = None;
        for c in &self.children {
            if !(c.interval[0] > self.interval[0] && c.interval[1] < self.interval[1]) {
                return Err(Error::NotAdmissible(format!("child {} not strictly inside {}", c.address, self.address)));
            }
            if !(c.interval[0] < c.interval[1]) {
                return Err(Error::NotAdmissible(format!("empty interval at {}", c.address)));
            }
            if c.address.len() != self.address.len() + 1 || c.address.0[..self.address.len()] != self.address.0[..] {
                return Err(Error::NotAdmissible(format!("address {} does not extend {}", c.address, self.address)));
            }
            if let Some(p) = prev {
                if !(c.interval[0] > p) {
                    return Err(Error::NotAdmissible(format!("children of {} overlap", self.address)));
                }
            }
            prev = Some(c.interval[1]);
            c.check_invariants()?;
        }
        Ok(())
    }

    /// JSON export: one record per node with 34-digit endpoints.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Flat {
            address: String,
            level: usize,
            lo: Scalar,
            hi: Scalar,
        }
        fn walk(n: &IntervalNode, out: &mut Vec<Flat>) {
            out.push(Flat {
                address: n.address.to_string(),
                level: n.address.len(),
                lo: n.interval[0],
                hi: n.interval[1],
            });
            for c in &n.children {
                walk(c, out);
            }
        }
        let mut flat = Vec::new();
        walk(self, &mut flat);
        Ok(serde_json::to_string_pretty(&flat)?)
    }
}

fn extend(address: &Word, letter: &CopyLabel) -> Word {
    let mut v = address.0.clone();
    v.push(letter.clone());
    Word(v)
}

fn grow(node: IntervalNode, letters: &[CopyLabel], remaining: usize) -> Result<IntervalNode> {
    if remaining == 0 {
        return Ok(node);
    }
    let children = letters
        .par_iter()
        .map(|l| {
            let word = extend(&node.address, l);
            if word.period() > MAX_PERIOD {
                return Err(Error::PrecisionExhausted(format!("period {} of {word}", word.period())));
            }
            let center = center_of_period(&word)?;
            let tip = tip_of(&word, node.interval[0], center)?;
            if !((center - tip) > MIN_WIDTH) {
                return Err(Error::PrecisionExhausted(format!(
                    "window of {word} has width {}",
                    (center - tip).to_decimal(3)
                )));
            }
            grow(IntervalNode::leaf(word, tip, center), letters, remaining - 1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(node.with_children(children))
}

/// Root `[-2, 0]` with one child window per letter at level 0, refined `depth` times.
pub fn build_hierarchy(letters: &[CopyLabel], depth: usize) -> Result<IntervalNode> {
    if letters.len() < 2 {
        return Err(Error::InvalidArgument("need at least two letters".into()));
    }
    let max_log = letters.iter().map(|l| (l.period as f64).log2()).fold(0.0, f64::max);
    if depth as f64 * max_log > 14.0 + 1e-9 {
        return Err(Error::PrecisionExhausted(format!("depth {depth} exceeds the precision budget")));
    }
    let windows = letters
        .iter()
        .map(|l| real_window(&Word::single(l.clone())))
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in windows.iter().enumerate() {
        for b in &windows[i + 1..] {
            if a.window[1] >= b.window[0] && b.window[1] >= a.window[0] {
                return Err(Error::NotAdmissible(format!("windows {} and {} overlap", a.word, b.word)));
            }
        }
    }
    let root = IntervalNode::leaf(Word(Vec::new()), Scalar::from_f64(-2.0), Scalar::ZERO);
    let tree = grow(root, letters, depth + 1)?;
    tree.check_invariants()?;
    Ok(tree)
}

/// Solves `sum r_j^d = 1` on `(0, 1)`.
pub fn moran(ratios: &[Scalar]) -> Result<Scalar> {
    if ratios.len() < 2 {
        return Err(Error::DegenerateRatios(format!("{} children; a Cantor estimate needs two", ratios.len())));
    }
    if ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::DegenerateRatios("a child is not smaller than its parent".into()));
    }
    let f = |d: f64| ratios.iter().map(|r| (r.ln() * d).exp()).sum::<Scalar>() - 1.0;
    if !(f(1.0) < 0.0) {
        return Err(Error::DegenerateRatios("children cover the parent".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        if f(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(Scalar::from_f64(0.5 * (lo + hi)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub level: usize,
    pub d: Scalar,
    pub min_ratio: Scalar,
    pub max_ratio: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub d: Scalar,
    pub per_level: Vec<LevelEstimate>,
    /// Smallest and largest child or gap length over its parent length.
    pub geometry: (Scalar, Scalar),
}

impl DimensionReport {
    /// CSV with columns `level,d_level,min_ratio,max_ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,d_level,min_ratio,max_ratio\n");
        for l in &self.per_level {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                l.level,
                l.d.to_decimal(17),
                l.min_ratio.to_decimal(17),
                l.max_ratio.to_decimal(17)
            );
        }
        out
    }
}

/// Per-node Moran solutions, aggregated per level by the parent-length
/// weighted geometric mean. Level `n` uses the parents of the level-`n` nodes.
pub fn dim_estimate(tree: &IntervalNode) -> Result<DimensionReport> {
    let depth = tree.depth();
    if depth < 3 {
        return Err(Error::InvalidArgument(format!("tree depth {depth} < 3")));
    }
    let mut per_level = Vec::with_capacity(depth);
    let (mut gmin, mut gmax) = (Scalar::from_f64(f64::INFINITY), Scalar::ZERO);
    for level in 0..depth {
        let parents = tree.nodes_at(tree.address.len() + level);
        let (mut num, mut den) = (Scalar::ZERO, Scalar::ZERO);
        let (mut lmin, mut lmax) = (Scalar::from_f64(f64::INFINITY), Scalar::ZERO);
        for p in parents {
            let w = p.width();
            let ratios: Vec<Scalar> = p.children.iter().map(|c| c.width() / w).collect();
            let d = moran(&ratios)?;
            num += w * d.ln();
            den += w;
            for r in ratios.iter().chain(p.gaps.iter().map(|g| (g[1] - g[0]) / w).collect::<Vec<_>>().iter()) {
                lmin = lmin.min(*r);
                lmax = lmax.max(*r);
            }
        }
        gmin = gmin.min(lmin);
        gmax = gmax.max(lmax);
        per_level.push(LevelEstimate {
            level,
            d: (num / den).exp(),
            min_ratio: lmin,
            max_ratio: lmax,
        });
    }
    Ok(DimensionReport {
        d: per_level.last().unwrap().d,
        per_level,
        geometry: (gmin, gmax),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Scalar {
        Scalar::from_f64(x)
    }

    fn thirds(address: Word, lo: Scalar, hi: Scalar, depth: usize) -> IntervalNode {
        let node = IntervalNode::leaf(address.clone(), lo, hi);
        if depth == 0 {
            return node;
        }
        let w = (hi - lo) / 3.0;
        let kids = [(lo, lo + w, 2), (hi - w, hi, 3)]
            .into_iter()
            .map(|(a, b, p)| thirds(extend(&address, &CopyLabel::leftmost(p).unwrap()), a, b, depth - 1))
            .collect();
        node.with_children(kids)
    }

    #[test]
    fn middle_thirds() {
        let t = thirds(Word(Vec::new()), s(0.0), s(1.0), 5);
        let r = dim_estimate(&t).unwrap();
        let want = 2f64.ln() / 3f64.ln();
        assert!((r.d.to_f64() - want).abs() < 1e-10);
        assert!(r.per_level.iter().all(|l| (l.d.to_f64() - want).abs() < 1e-10));
        assert!((r.geometry.1 - s(1.0) / 3.0).abs().to_f64() < 1e-30);
    }

    #[test]
    fn single_child_is_degenerate() {
        assert!(matches!(moran(&[s(0.5)]), Err(Error::DegenerateRatios(_))));
        assert!(matches!(moran(&[s(0.5), s(1.0)]), Err(Error::DegenerateRatios(_))));
        assert!(matches!(moran(&[s(0.6), s(0.5)]), Err(Error::DegenerateRatios(_))));
    }

    #[test]
    fn base_levels_of_the_two_three_family() {
        let letters = [CopyLabel::doubling(), CopyLabel::tripling()];
        let t = build_hierarchy(&letters, 1).unwrap();
        assert_eq!(t.children.len(), 2);
        let w2 = real_window(&Word::single(CopyLabel::doubling())).unwrap();
        let w3 = real_window(&Word::single(CopyLabel::tripling())).unwrap();
        let got: Vec<[Scalar; 2]> = t.children.iter().map(|c| c.interval).collect();
        assert_eq!(got, vec![w3.window, w2.window]);
        let level1 = t.nodes_at(2);
        assert_eq!(level1.len(), 4);
        let w: Word = "2,3".parse().unwrap();
        let node = level1.iter().find(|n| n.address == w).unwrap();
        let c = center_of_period(&w).unwrap();
        assert!(c >= node.interval[0] && c <= node.interval[1]);
    }

    #[test]
    fn rejects_overlapping_or_lonely_families() {
        assert!(build_hierarchy(&[CopyLabel::doubling()], 2).is_err());
        let same = [CopyLabel::doubling(), CopyLabel::doubling()];
        assert!(build_hierarchy(&same, 1).is_err());
    }
}
