//! One-dimensional root and minimum refinement on bracketing intervals.

use crate::scalar::Real;

/// Illinois false position on `[a, b]` with `f(a) f(b) <= 0`.
pub fn bracket_root<T: Real, F: FnMut(T) -> T>(mut f: F, mut a: T, mut b: T, xtol: T) -> T {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return a;
    }
    if fb == T::zero() {
        return b;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !x.is_finite() || x <= a.min(b) || x >= a.max(b) {
            x = (a + b) * T::lit(0.5);
        }
        let fx = f(x);
        if fx == T::zero() {
            return x;
        }
        if (fx > T::zero()) == (fb > T::zero()) {
            b = x;
            fb = fx;
            if side == -1 {
                fa = fa * T::lit(0.5);
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb = fb * T::lit(0.5);
            }
            side = 1;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_min<T: Real, F: FnMut(T) -> T>(mut f: F, mut a: T, mut b: T, xtol: T) -> (T, T) {
    let invphi = T::lit(0.618_033_988_749_894_8);
    let mut x1 = b - invphi * (b - a);
    let mut x2 = a + invphi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (b - a).abs() <= xtol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
