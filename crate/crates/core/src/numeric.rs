//! Small numerical kernels shared by the equilibrium code.

/// Composite Simpson rule for `f` on `[a, b]` with `panels` subintervals.
///
/// `panels` is rounded up to the next even number.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let y = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += y;
        } else {
            even += y;
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

/// Outcome of [`bisect_increasing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub iterations: usize,
    /// Final bracket width was below the tolerance.
    pub converged: bool,
}

/// Solves `f(x) = target` for nondecreasing `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol` or after `max_iter` halvings.
/// A target outside `[f(lo), f(hi)]` returns the nearer endpoint.
pub fn bisect_increasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Bisection {
    if target <= f(lo) {
        return Bisection { root: lo, iterations: 0, converged: true };
    }
    if target >= f(hi) {
        return Bisection { root: hi, iterations: 0, converged: true };
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Bisection { root: 0.5 * (lo + hi), iterations, converged: hi - lo <= tol }
}
