//! Bisection on monotone predicates.

use super::SolverError;

/// Final bracket: `pred(lo)` is false and `pred(hi)` is true (or the reverse,
/// matching the orientation found at the original ends).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// Narrows `[lo, hi]` around the point where `pred` changes value until the
/// bracket is at most `tol` wide.
pub fn bisect_bracket<P>(mut pred: P, lo: f64, hi: f64, tol: f64) -> Result<Bracket, SolverError>
where
    P: FnMut(f64) -> bool,
{
    if !(lo < hi) || !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(SolverError::Malformed(format!("bad bisection bracket [{lo}, {hi}] with tolerance {tol}")));
    }
    let at_lo = pred(lo);
    if at_lo == pred(hi) {
        return Err(SolverError::NoSignChange);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if pred(mid) == at_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Bracket { lo: a, hi: b })
}

/// Midpoint of the final bracket.
pub fn bisect<P>(pred: P, lo: f64, hi: f64, tol: f64) -> Result<f64, SolverError>
where
    P: FnMut(f64) -> bool,
{
    let b = bisect_bracket(pred, lo, hi, tol)?;
    Ok(0.5 * (b.lo + b.hi))
}

/// Largest `n` in `[lo, hi]` with `pred(n)` true, assuming `pred` is true on
/// a prefix. Returns `None` when `pred(lo)` is false.
pub fn largest_feasible<P>(mut pred: P, lo: usize, hi: usize) -> Option<usize>
where
    P: FnMut(usize) -> bool,
{
    if lo > hi || !pred(lo) {
        return None;
    }
    if pred(hi) {
        return Some(hi);
    }
    let (mut good, mut bad) = (lo, hi);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_threshold() {
        let x = bisect(|x| x * x > 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn decreasing_predicate() {
        let b = bisect_bracket(|x| x < 0.25, 0.0, 1.0, 1e-9).unwrap();
        assert!(b.lo < 0.25 + 1e-9 && b.hi >= 0.25 - 1e-9);
    }

    #[test]
    fn no_sign_change() {
        assert_eq!(bisect(|_| true, 0.0, 1.0, 1e-3), Err(SolverError::NoSignChange));
    }

    #[test]
    fn integer_prefix() {
        assert_eq!(largest_feasible(|n| n <= 37, 1, 128), Some(37));
        assert_eq!(largest_feasible(|n| n <= 500, 1, 128), Some(128));
        assert_eq!(largest_feasible(|_| false, 1, 128), None);
    }
}
