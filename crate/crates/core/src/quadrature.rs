//! Numerical integration for period integrals and the interval charts.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Evaluation budget of [`adaptive_simpson`].
pub const SIMPSON_BUDGET: usize = 200_000;

struct Cell {
    err: f64,
    a: f64,
    b: f64,
    /// f at a, a+h/4, a+h/2, a+3h/4, b
    f: [f64; 5],
    value: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn simpson_cell(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, evals: &mut usize) -> Cell {
    let m = 0.5 * (a + b);
    let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    *evals += 2;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let halves = (m - a) / 6.0 * (fa + 4.0 * flm + fm) + (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = halves - whole;
    Cell {
        err: delta.abs() / 15.0,
        a,
        b,
        f: [fa, flm, fm, frm, fb],
        value: halves + delta / 15.0,
    }
}

/// Globally adaptive Simpson quadrature of `f` over `[a, b]`: the cell with
/// the largest error estimate is split until the summed estimate drops below
/// `tol` or [`SIMPSON_BUDGET`] evaluations are spent. `b < a` flips the sign.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut evals = 3;
    let first = simpson_cell(&f, a, b, f(a), f(0.5 * (a + b)), f(b), &mut evals);
    let mut total = first.err;
    let mut heap = BinaryHeap::from([first]);
    while total > tol && evals < SIMPSON_BUDGET {
        let c = heap.pop().expect("heap is never empty");
        let m = 0.5 * (c.a + c.b);
        if (c.b - c.a).abs() < 64.0 * f64::EPSILON * m.abs().max(f64::MIN_POSITIVE) {
            heap.push(c);
            break;
        }
        let [fa, flm, fm, frm, fb] = c.f;
        let l = simpson_cell(&f, c.a, m, fa, flm, fm, &mut evals);
        let r = simpson_cell(&f, m, c.b, fm, frm, fb, &mut evals);
        total += l.err + r.err - c.err;
        heap.push(l);
        heap.push(r);
    }
    let mut cells: Vec<f64> = heap.into_iter().map(|c| c.value).collect();
    // sum small contributions first
    cells.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    cells.iter().sum()
}

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`, as `(node, weight)`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-type initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Shared 16-point rule.
pub(crate) fn gl16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Fixed 16-point Gauss–Legendre integral over `[a, b]`.
pub fn gauss16(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * gl16().iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>()
}
