//! Scalar numerical routines shared by the solvers.

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Absolute tolerance `tol`, recursion limited to `max_depth` levels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns `None` when `f(lo)` and `f(hi)` share a strict sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section maximisation of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while hi - lo > tol && iters < 300 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        iters += 1;
    }
    // endpoints are not probed by the interior bracketing
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Euclidean projection onto `{x : 0 <= x_i <= upper, sum x_i <= cap}`.
pub fn project_capped_box(x: &[f64], upper: f64, cap: f64) -> Vec<f64> {
    let clamped: Vec<f64> = x.iter().map(|&xi| xi.clamp(0.0, upper)).collect();
    if clamped.iter().sum::<f64>() <= cap {
        return clamped;
    }
    let shifted_sum = |tau: f64| -> f64 { x.iter().map(|&xi| (xi - tau).clamp(0.0, upper)).sum() };
    let hi0 = x.iter().cloned().fold(0.0_f64, f64::max);
    let tau = bisect(|t| shifted_sum(t) - cap, 0.0, hi0.max(0.0), 1e-15).unwrap_or(0.0);
    let mut out: Vec<f64> = x.iter().map(|&xi| (xi - tau).clamp(0.0, upper)).collect();
    // rounding in tau can leave the sum a hair above the cap
    let excess = out.iter().sum::<f64>() - cap;
    if excess > 0.0 {
        let positive = out.iter().filter(|&&b| b > 0.0).count().max(1) as f64;
        for b in out.iter_mut().filter(|b| **b > 0.0) {
            *b = (*b - excess / positive).max(0.0);
        }
    }
    out
}

/// Pairwise (cascade) summation; result does not depend on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Formats `x` in positional notation with `digits` significant digits,
/// trailing zeros trimmed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits_str: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let n = digits_str.len() as i32;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits_str);
    } else if exp + 1 >= n {
        out.push_str(&digits_str);
        for _ in 0..(exp + 1 - n) {
            out.push('0');
        }
    } else {
        let split = (exp + 1) as usize;
        out.push_str(&digits_str[..split]);
        out.push('.');
        out.push_str(&digits_str[split..]);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_matches_polynomial_integral() {
        let v = adaptive_simpson(&|x: f64| x.powi(5), 0.0, 0.6, 1e-12, 60);
        assert!((v - 0.6f64.powi(6) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn projection_respects_cap_and_box() {
        let p = project_capped_box(&[0.9, 0.7, -0.2, 0.4], 0.8, 1.0);
        assert!(p.iter().all(|&b| (0.0..=0.8).contains(&b)));
        assert!(p.iter().sum::<f64>() <= 1.0 + 1e-15);
        let inside = project_capped_box(&[0.1, 0.2], 1.0, 1.0);
        assert_eq!(inside, vec![0.1, 0.2]);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(1.0 / 6.0, 12), "0.166666666667");
        assert_eq!(fmt_sig(0.5, 12), "0.5");
        assert_eq!(fmt_sig(4.0 / 3.0, 12), "1.33333333333");
        assert_eq!(fmt_sig(1234.5, 12), "1234.5");
        assert_eq!(fmt_sig(-0.03125, 12), "-0.03125");
        assert_eq!(fmt_sig(1e-5 / 3.0, 12), "0.00000333333333333");
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(1e15, 12), "1000000000000000");
    }
}
