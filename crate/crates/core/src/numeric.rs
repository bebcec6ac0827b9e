//! Small numerical kernels shared by the solvers: log-domain arithmetic,
//! compensated accumulation and bracketing 1-D searches.

use std::f64::consts::LN_2;

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`. Returns `-inf` when the difference vanishes.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `ln Σ e^{x_i}` over a slice, stable for arbitrary magnitudes.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `-x ln x` with the `0 ln 0 = 0` convention.
pub fn neg_x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Running sum of positive terms given by their logarithms.
///
/// Terms are added as `exp(ln_x - k ln 2)` into a Neumaier-compensated sum and
/// the binary exponent `k` is raised in whole steps, so rescaling is exact.
#[derive(Clone, Debug, Default)]
pub struct LogAccumulator {
    exponent: i32,
    sum: f64,
    comp: f64,
}

impl LogAccumulator {
    const RESCALE_AT: f64 = 512.0;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_ln(&mut self, ln_x: f64) {
        if ln_x == f64::NEG_INFINITY {
            return;
        }
        let mut scaled = ln_x - self.exponent as f64 * LN_2;
        if scaled > Self::RESCALE_AT * LN_2 {
            let shift = (scaled / LN_2).floor() as i32;
            self.sum = ldexp(self.sum, -shift);
            self.comp = ldexp(self.comp, -shift);
            self.exponent += shift;
            scaled = ln_x - self.exponent as f64 * LN_2;
        }
        let term = scaled.exp();
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    /// Logarithm of the accumulated total, `-inf` if nothing was added.
    pub fn ln_total(&self) -> f64 {
        let total = self.sum + self.comp;
        if total <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total.ln() + self.exponent as f64 * LN_2
    }
}

fn ldexp(x: f64, exp: i32) -> f64 {
    // Split to stay inside the normal exponent range for large shifts.
    let mut value = x;
    let mut remaining = exp;
    while remaining != 0 {
        let step = remaining.clamp(-1000, 1000);
        value *= 2f64.powi(step);
        remaining -= step;
    }
    value
}

/// Sum with Neumaier compensation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `tol`. Returns the best abscissa
/// seen together with its value.
pub fn golden_section_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimizes `f` over `[a, b]` for functions with at most one interior local
/// minimum: a uniform scan of `scan` points (endpoints included) brackets the
/// best sample, then golden-section refines inside the bracket.
pub fn scan_golden_min<F>(mut f: F, a: f64, b: f64, scan: usize, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if b <= a {
        return (a, f(a));
    }
    let n = scan.max(3);
    let step = (b - a) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best = (a, f64::INFINITY);
    for i in 0..n {
        let x = if i + 1 == n { b } else { a + step * i as f64 };
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let lo = if best_i == 0 {
        a
    } else {
        a + step * (best_i - 1) as f64
    };
    let hi = if best_i + 1 >= n {
        b
    } else {
        a + step * (best_i + 1) as f64
    };
    let (x, v) = golden_section_min(&mut f, lo, hi, tol);
    if v < best.1 {
        (x, v)
    } else {
        best
    }
}

/// Bisection for the boundary of a monotone predicate: `pred(lo)` holds and
/// `pred(hi)` fails. Returns the final `(lo, hi)` bracket once narrower than
/// `width` or when floating-point resolution is exhausted.
pub fn bisect_predicate<F>(mut pred: F, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64)
where
    F: FnMut(f64) -> bool,
{
    while hi - lo > width {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}
