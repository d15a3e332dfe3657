//! Bounded one-dimensional minimization: a uniform grid scan to locate the
//! global basin, then Brent's golden-section/parabolic search inside it.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    /// The objective was flat around the minimum and `x` is the midpoint of
    /// the flat region.
    pub flat: bool,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Minimize `f` on `[lo, hi]`.
///
/// `grid` intervals are scanned first; Brent's method then refines within
/// the two cells around the best grid point until the bracket is smaller
/// than `rel_tol * |x| + abs_tol`. If the objective stays within `flat_tol`
/// of its minimum over more than two grid cells the midpoint of that
/// region is returned; a region spanning the whole interval is an error.
pub fn minimize_bounded<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    grid: usize,
    rel_tol: f64,
    abs_tol: f64,
    flat_tol: f64,
) -> Result<Minimum> {
    assert!(hi > lo && grid >= 2);
    let step = (hi - lo) / grid as f64;
    let xs: Vec<f64> = (0..=grid).map(|k| if k == grid { hi } else { lo + k as f64 * step }).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let (best, &fbest) = fs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");

    let level = fbest + flat_tol;
    let mut left = best;
    while left > 0 && fs[left - 1] <= level {
        left -= 1;
    }
    let mut right = best;
    while right < grid && fs[right + 1] <= level {
        right += 1;
    }
    if left == 0 && right == grid {
        return Err(Error::DegenerateFit(format!(
            "objective is flat over the whole interval [{lo}, {hi}]"
        )));
    }
    if right - left > 2 {
        let x = (xs[left] + xs[right]) / 2.0;
        return Ok(Minimum {
            x,
            value: f(x),
            flat: true,
        });
    }

    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(grid)];
    let (x, value) = brent(&f, a, b, xs[best], fbest, rel_tol, abs_tol);
    Ok(if value <= fbest {
        Minimum { x, value, flat: false }
    } else {
        Minimum {
            x: xs[best],
            value: fbest,
            flat: false,
        }
    })
}

/// Brent's minimizer on `[a, b]` starting from an interior guess.
fn brent<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, x0: f64, f0: f64, rel_tol: f64, abs_tol: f64) -> (f64, f64) {
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let tol1 = rel_tol * x.abs() + abs_tol;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if mid >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}
