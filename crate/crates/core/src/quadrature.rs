//! Gauss rules and a globally adaptive Gauss–Legendre integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = KahanSum::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Generalized Gauss–Laguerre rule for the weight `t^α e^{−t}` on `[0, ∞)`,
/// with weights normalized to sum to one.
///
/// Normalizing removes `Γ(α+1)` entirely, so large `α` cannot overflow.
/// Nodes come from the Jacobi matrix by Golub–Welsch; only the first
/// component of each eigenvector is tracked, which keeps the cost `O(n²)`.
pub fn gauss_laguerre_normalized(n: usize, alpha: f64) -> Result<Rule> {
    if n == 0 {
        return Err(Error::Usage("Gauss–Laguerre rule needs at least one node".into()));
    }
    if !alpha.is_finite() || alpha <= -1.0 {
        return Err(Error::param("alpha", format!("must exceed −1, got {alpha}")));
    }
    let mut diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    // off[i] couples rows i and i+1
    let mut off: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 < n {
                let k = (i + 1) as f64;
                (k * (k + alpha)).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first)?;

    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(first.into_iter().map(|z| z * z)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    })
}

/// Implicit QL on a symmetric tridiagonal matrix, applying the rotations to a
/// single row of the eigenvector matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::Numeric(format!(
                    "tridiagonal eigensolver did not converge for eigenvalue {l} of {n}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Settings for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Gauss–Legendre nodes per half panel.
    pub order: usize,
}

impl Default for AdaptiveSpec {
    fn default() -> Self {
        AdaptiveSpec {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_panels: 4000,
            order: 10,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Integrates `f` over the span of `breakpoints` (ascending), refining the
/// panel with the largest error estimate until the total estimate meets
/// `max(abs_tol, rel_tol·|I|)`.
///
/// A panel's value is the rule applied to its two halves; its error is the
/// difference from the rule applied to the whole panel.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    spec: &AdaptiveSpec,
) -> Result<Integral> {
    if breakpoints.len() < 2 {
        return Err(Error::Usage("adaptive integration needs at least two breakpoints".into()));
    }
    let rule = gauss_legendre(spec.order);
    let mut eval = |a: f64, b: f64| -> Panel {
        let on = |f: &mut F, lo: f64, hi: f64| -> f64 {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            half * rule.integrate(|x| f(mid + half * x))
        };
        let whole = on(&mut f, a, b);
        let m = 0.5 * (a + b);
        let split = on(&mut f, a, m) + on(&mut f, m, b);
        let error = (split - whole).abs();
        Panel {
            a,
            b,
            value: split,
            error: if error.is_nan() { f64::INFINITY } else { error },
        }
    };

    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let p = eval(w[0], w[1]);
            total += p.value;
            total_err += p.error;
            heap.push(p);
        }
    }
    let tolerance = |total: f64| spec.abs_tol.max(spec.rel_tol * total.abs());
    while total_err > tolerance(total) && heap.len() < spec.max_panels {
        let worst = heap.pop().expect("heap is non-empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // cannot subdivide further in floating point
            heap.push(Panel { error: 0.0, ..worst });
            total_err = heap.iter().map(|p| p.error).sum();
            continue;
        }
        let left = eval(worst.a, m);
        let right = eval(m, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let mut sum = KahanSum::default();
    let mut err = 0.0;
    for p in heap.iter() {
        sum.add(p.value);
        err += p.error;
    }
    let result = Integral {
        value: sum.value(),
        error: err,
        panels: heap.len(),
    };
    if !result.value.is_finite() || result.error > tolerance(result.value) {
        return Err(Error::Numeric(format!(
            "adaptive quadrature did not converge: value {:e}, error estimate {:e}, {} panels",
            result.value, result.error, result.panels
        )));
    }
    Ok(result)
}
