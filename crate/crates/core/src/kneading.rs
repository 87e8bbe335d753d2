//! Kneading sequences of real unimodal maps, their order, and the star
//! product that realizes tuning on them.
//!
//! Symbols are `L = -1`, `C = 0`, `R = +1`, taken relative to the critical
//! point with the orientation of a map that has a minimum there. A sequence
//! stops at its first `C`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const L: i8 = -1;
pub const C: i8 = 0;
pub const R: i8 = 1;

/// Symbol of a point relative to the critical point `crit`.
pub fn symbol(x: Scalar, crit: Scalar, orient: i8, zero_tol: f64) -> i8 {
    let d = x - crit;
    if d.abs() <= zero_tol {
        C
    } else if d.is_sign_negative() {
        -orient
    } else {
        orient
    }
}

/// Itinerary of the critical value under `f`: symbols of `f^k(crit)` for
/// `k = 1..=depth`, truncated after the first `C`.
pub fn itinerary_with<F: FnMut(Scalar) -> Scalar>(
    mut f: F,
    crit: Scalar,
    orient: i8,
    depth: usize,
    zero_tol: f64,
) -> Vec<i8> {
    let mut out = Vec::with_capacity(depth);
    let mut x = f(crit);
    for _ in 0..depth {
        let s = if x.is_finite() {
            symbol(x, crit, orient, zero_tol)
        } else {
            R
        };
        out.push(s);
        if s == C {
            break;
        }
        x = f(x);
    }
    out
}

/// Kneading sequence of `P_c(x) = x^2 + c`.
pub fn quadratic_kneading(c: Scalar, depth: usize, zero_tol: f64) -> Vec<i8> {
    itinerary_with(|x| x.sqr() + c, Scalar::ZERO, 1, depth, zero_tol)
}

/// Kneading order: `Less` means the sequence belongs to a smaller `c`.
/// Sequences that agree on their common length compare `Equal`.
pub fn compare(a: &[i8], b: &[i8]) -> Ordering {
    let mut flipped = false;
    for (&x, &y) in a.iter().zip(b) {
        if x != y {
            let o = x.cmp(&y);
            return if flipped { o.reverse() } else { o };
        }
        if x == C {
            return Ordering::Equal;
        }
        if x == L {
            flipped = !flipped;
        }
    }
    Ordering::Equal
}

/// `(-1)^{#L}` of a block.
pub fn block_sign(block: &[i8]) -> i8 {
    if block.iter().filter(|&&s| s == L).count() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Star product `A * B` where `A = prefix C` is a center kneading; output
/// stops after the first `C` or at `limit` symbols.
pub fn star(prefix: &[i8], b: &[i8], limit: usize) -> Vec<i8> {
    let s = block_sign(prefix);
    let mut out = Vec::new();
    for &x in b {
        for &y in prefix {
            if out.len() == limit {
                return out;
            }
            out.push(y);
        }
        if out.len() == limit {
            return out;
        }
        out.push(s * x);
        if x == C {
            break;
        }
    }
    out
}

pub fn to_letters(k: &[i8]) -> String {
    k.iter()
        .map(|&s| match s {
            L => 'L',
            C => 'C',
            _ => 'R',
        })
        .collect()
}

/// A real Mandelbrot copy, identified by the itinerary of its center.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CopyLabel {
    pub period: usize,
    /// Symbols of `f^k(0)`, `k = 1..p-1`, at the center; `+1` right of 0.
    pub signature: Vec<i8>,
}

impl CopyLabel {
    pub fn new(signature: Vec<i8>) -> Result<CopyLabel> {
        if signature.is_empty() {
            return Err(Error::InvalidArgument("a copy has period >= 2".into()));
        }
        if signature.iter().any(|&s| s != L && s != R) {
            return Err(Error::InvalidArgument("signature symbols must be L or R".into()));
        }
        if signature[0] != L {
            // The critical value sits left of 0 for every copy inside [-2, -3/4].
            return Err(Error::NotAdmissible(format!(
                "signature {} must start with L",
                to_letters(&signature)
            )));
        }
        Ok(CopyLabel {
            period: signature.len() + 1,
            signature,
        })
    }

    pub fn doubling() -> CopyLabel {
        CopyLabel::new(vec![L]).unwrap()
    }

    /// The period-3 copy, center near -1.7549.
    pub fn tripling() -> CopyLabel {
        CopyLabel::new(vec![L, R]).unwrap()
    }

    /// The primitive copy `L R^{p-2}` of period `p`; the doubling copy for `p = 2`.
    pub fn leftmost(period: usize) -> Result<CopyLabel> {
        if period < 2 {
            return Err(Error::InvalidArgument(format!("period must be >= 2, got {period}")));
        }
        let mut sig = vec![L];
        sig.resize(period - 1, R);
        CopyLabel::new(sig)
    }

    pub fn center_kneading(&self) -> Vec<i8> {
        let mut k = self.signature.clone();
        k.push(C);
        k
    }

    pub fn sign(&self) -> i8 {
        block_sign(&self.signature)
    }
}

impl fmt::Display for CopyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.signature.len() == 1 || *self == CopyLabel::leftmost(self.period).unwrap() {
            write!(f, "{}", self.period)
        } else {
            write!(f, "{}", to_letters(&self.signature))
        }
    }
}

impl FromStr for CopyLabel {
    type Err = Error;

    /// Accepts a period (`"3"`, or `"doubling"`/`"tripling"`) or an explicit
    /// signature such as `"LRL"`.
    fn from_str(s: &str) -> Result<CopyLabel> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "doubling" => return Ok(CopyLabel::doubling()),
            "tripling" | "period-3" => return Ok(CopyLabel::tripling()),
            _ => {}
        }
        if let Ok(p) = t.parse::<usize>() {
            return CopyLabel::leftmost(p);
        }
        let sig = t
            .chars()
            .map(|ch| match ch {
                'L' | 'l' => Ok(L),
                'R' | 'r' => Ok(R),
                _ => Err(Error::Parse(format!("bad copy label `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        CopyLabel::new(sig)
    }
}

/// A finite sequence of copies, read as iterated tuning.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<CopyLabel>);

impl Word {
    pub fn new(letters: Vec<CopyLabel>) -> Result<Word> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("empty word".into()));
        }
        Ok(Word(letters))
    }

    pub fn single(letter: CopyLabel) -> Word {
        Word(vec![letter])
    }

    pub fn repeat(letter: &CopyLabel, n: usize) -> Word {
        Word(vec![letter.clone(); n])
    }

    pub fn letters(&self) -> &[CopyLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of the letter periods.
    pub fn period(&self) -> usize {
        self.0.iter().map(|l| l.period).product()
    }

    pub fn rotate(&self, k: usize) -> Word {
        let mut v = self.0.clone();
        let n = v.len().max(1);
        v.rotate_left(k % n);
        Word(v)
    }

    /// The composite copy `l_1 * l_2 * ... * l_n` as a single label.
    pub fn composite(&self) -> CopyLabel {
        let k = self.center_kneading();
        CopyLabel {
            period: k.len(),
            signature: k[..k.len() - 1].to_vec(),
        }
    }

    /// Kneading of the tuned center.
    pub fn center_kneading(&self) -> Vec<i8> {
        self.tune(&[C], usize::MAX)
    }

    /// `l_1 * (l_2 * (... * (l_n * tail)))`, cut at `limit` symbols.
    pub fn tune(&self, tail: &[i8], limit: usize) -> Vec<i8> {
        let mut k = tail.to_vec();
        for l in self.0.iter().rev() {
            k = star(&l.signature, &k, limit);
        }
        k
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Comma-separated labels, e.g. `"2,3"`.
    fn from_str(s: &str) -> Result<Word> {
        Word::new(s.split(',').map(str::parse).collect::<Result<Vec<_>>>()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kn(c: f64) -> Vec<i8> {
        quadratic_kneading(Scalar::from_f64(c), 60, 0.0)
    }

    #[test]
    fn known_sequences() {
        assert_eq!(to_letters(&kn(-1.0)), "LC");
        assert_eq!(to_letters(&kn(0.0)), "C");
        assert!(kn(0.1).iter().all(|&s| s == R));
        assert!(kn(-0.5).iter().all(|&s| s == L));
        let k = kn(-2.0);
        assert_eq!(k[0], L);
        assert!(k[1..].iter().all(|&s| s == R));
    }

    #[test]
    fn centers_match_star_products() {
        let d = CopyLabel::doubling();
        assert_eq!(to_letters(&Word::repeat(&d, 2).center_kneading()), "LRLC");
        assert_eq!(to_letters(&Word::repeat(&d, 3).center_kneading()), "LRLLLRLC");
        let w: Word = "3,2".parse().unwrap();
        assert_eq!(to_letters(&w.center_kneading()), "LRRLRC");
        assert_eq!(w.period(), 6);
        assert_eq!(w.composite().period, 6);
    }

    #[test]
    fn order_matches_parameter_order_on_landmarks() {
        let cs = [-2.0, -1.9, -1.7548776662466927, -1.5, -1.3107026413368328, -1.0, -0.5, 0.0, 0.2];
        for w in cs.windows(2) {
            assert_ne!(compare(&kn(w[0]), &kn(w[1])), Ordering::Greater, "{w:?}");
        }
        assert_eq!(compare(&kn(-1.9), &kn(-1.0)), Ordering::Less);
    }

    #[test]
    fn labels_parse_and_print() {
        assert_eq!("2".parse::<CopyLabel>().unwrap(), CopyLabel::doubling());
        assert_eq!("3".parse::<CopyLabel>().unwrap(), CopyLabel::tripling());
        assert_eq!("LRR".parse::<CopyLabel>().unwrap().period, 4);
        assert!("RL".parse::<CopyLabel>().is_err());
        assert!("1".parse::<CopyLabel>().is_err());
        let w: Word = "2,3,LRL".parse().unwrap();
        assert_eq!(w.to_string(), "2,3,LRL");
        let json = serde_json::to_string(&CopyLabel::tripling()).unwrap();
        assert_eq!(json, r#"{"period":3,"signature":[-1,1]}"#);
    }

    #[test]
    fn tuning_preserves_order() {
        let d = CopyLabel::doubling();
        let lo = star(&d.signature, &kn(-1.9), 40);
        let hi = star(&d.signature, &kn(-1.2), 40);
        assert_eq!(compare(&lo, &hi), Ordering::Less);
    }

    proptest! {
        #[test]
        fn kneading_order_agrees_with_parameter_order(a in -2.0f64..0.25, b in -2.0f64..0.25) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert_ne!(compare(&kn(lo), &kn(hi)), Ordering::Greater);
        }
    }
}
