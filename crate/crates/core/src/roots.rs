//! Bracketed scalar root finding: grid scan, bisection, secant polish.

use crate::error::{Error, Result};

/// Bracket width at which bisection stops.
pub const BRACKET_TOL: f64 = 1e-12;

/// Finds every sign change of `f` on a uniform grid over `[lo, hi]` and
/// refines each one. Exact zeros at grid points are returned as roots.
pub fn find_roots<F>(f: F, lo: f64, hi: f64, intervals: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let step = (hi - lo) / intervals as f64;
    let grid: Vec<f64> = (0..=intervals)
        .map(|i| {
            if i == intervals {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();

    let mut roots = Vec::new();
    for i in 0..intervals {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (values[i], values[i + 1]);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect_secant(&f, a, b, fa, fb)?);
        }
    }
    if values[intervals] == 0.0 {
        roots.push(hi);
    }
    Ok(roots)
}

/// Bisection down to `BRACKET_TOL`, then one secant step kept only if it
/// stays inside the final bracket and lowers the residual.
pub fn bisect_secant<F>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64, mut fhi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (lo0, hi0) = (lo, hi);
    for _ in 0..200 {
        if hi - lo <= BRACKET_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(Error::NoConvergence {
            lo: lo0,
            hi: hi0,
            residual: f64::NAN,
        });
    }
    let mut best = if flo.abs() < fhi.abs() {
        (lo, flo)
    } else {
        (hi, fhi)
    };
    if fhi != flo {
        let x = lo - flo * (hi - lo) / (fhi - flo);
        if x >= lo && x <= hi {
            let fx = f(x);
            if fx.abs() < best.1.abs() {
                best = (x, fx);
            }
        }
    }
    if hi - lo > BRACKET_TOL * 16.0 {
        return Err(Error::NoConvergence {
            lo: lo0,
            hi: hi0,
            residual: best.1,
        });
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_all_roots_of_a_cubic() {
        let f = |x: f64| (x - 0.1) * (x - 0.5) * (x + 0.3);
        let roots = find_roots(f, -1.0, 1.0, 97).unwrap();
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([-0.3, 0.1, 0.5]) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_zero_is_reported() {
        let roots = find_roots(|x: f64| x.sin(), 0.0, 1.0, 10).unwrap();
        assert_eq!(roots, vec![0.0]);
    }

    #[test]
    fn transcendental_root() {
        // x = cos x
        let r = find_roots(|x: f64| x - x.cos(), 0.0, 1.0, 8).unwrap();
        assert!((r[0] - 0.739_085_133_215_160_6).abs() < 1e-13);
    }

    #[test]
    fn non_finite_bracket_fails() {
        let f = |x: f64| if x > 0.5 { f64::NAN } else { -1.0 };
        let err = bisect_secant(&f, 0.0, 1.0, -1.0, 1.0);
        assert!(err.is_err());
    }
}
