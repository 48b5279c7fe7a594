//! Bracketed one-dimensional searches used by the MPP tracker.
//!
//! Both routines are derivative free and only assume the shape they need:
//! unimodality for the golden-section maximizer, monotonicity for bisection.

use crate::scalar::{effective_tol, Scalar};

/// Outcome of a bracketed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome<T> {
    /// Abscissa of the located point.
    pub x: T,
    /// Objective value at `x`.
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search.
///
/// Iterates until the bracket width drops below `rel_tol` relative to the
/// bracket midpoint, or `max_iter` iterations have run.
pub fn golden_section_max<T, F>(f: F, lo: T, hi: T, rel_tol: T, max_iter: usize) -> SearchOutcome<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    let tol = effective_tol(rel_tol);
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };

    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let scale = ((a + b) / T::lit(2.0)).abs().max(T::min_positive_value());
        if b - a <= tol * scale {
            converged = true;
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }

    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    SearchOutcome {
        x,
        value,
        iterations,
        converged,
    }
}

/// Solves `f(x) = target` for a non-decreasing `f` on `[lo, hi]` by bisection.
///
/// Converges once `|f(x) - target| <= rel_tol * |target|`. The bracket must
/// satisfy `f(lo) <= target <= f(hi)`; the caller checks that.
pub fn bisect_increasing<T, F>(
    f: F,
    target: T,
    lo: T,
    hi: T,
    rel_tol: T,
    max_iter: usize,
) -> SearchOutcome<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    let tol = effective_tol(rel_tol) * target.abs();
    let (mut lo, mut hi) = (lo, hi);
    let mut mid = (lo + hi) / T::lit(2.0);
    let mut value = f(mid);
    let mut iterations = 1;

    loop {
        if (value - target).abs() <= tol {
            return SearchOutcome {
                x: mid,
                value,
                iterations,
                converged: true,
            };
        }
        if iterations >= max_iter || hi - lo <= T::epsilon() * mid.abs() {
            return SearchOutcome {
                x: mid,
                value,
                iterations,
                converged: false,
            };
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = (lo + hi) / T::lit(2.0);
        value = f(mid);
        iterations += 1;
    }
}
