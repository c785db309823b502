//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the library's solvers: minimizers are found by
//! derivative-free search and quadratic systems by dense LU.

#![allow(dead_code, clippy::needless_range_loop)]

use dyknet_core::functions::{AffineFunction, QuadraticFunction};
use dyknet_core::protocol::SimState;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizes a convex function on `[lo, hi]`: grid scan, then golden-section
/// refinement around the best grid point. Returns `(argmin, min)`.
pub fn minimize_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const GRID: usize = 400;
    let h = (hi - lo) / GRID as f64;
    let best = (0..=GRID)
        .map(|k| (k, f(lo + h * k as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0;
    // For a convex function the minimizer lies next to the best grid point.
    let mut a = lo + h * best.saturating_sub(1) as f64;
    let mut b = lo + h * (best + 1).min(GRID) as f64;
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimizes a convex function on the box `center ± radius` in one or two
/// dimensions (nested 1-D search for two).
pub fn minimize_box(f: &dyn Fn(&[f64]) -> f64, center: &[f64], radius: f64) -> Vec<f64> {
    match center.len() {
        1 => {
            let (x, _) = minimize_1d(&|t| f(&[t]), center[0] - radius, center[0] + radius);
            vec![x]
        }
        2 => {
            let inner =
                |x0: f64| minimize_1d(&|t| f(&[x0, t]), center[1] - radius, center[1] + radius);
            let (x0, _) = minimize_1d(&|x0| inner(x0).1, center[0] - radius, center[0] + radius);
            vec![x0, inner(x0).0]
        }
        m => panic!("brute-force search supports m <= 2, got {m}"),
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn dense_hessian(q: &QuadraticFunction) -> DMatrix<f64> {
    let v = DVector::from_column_slice(q.direction());
    &v * v.transpose() + DMatrix::identity(v.len(), v.len()) * q.ridge()
}

/// `1/2 x^T A x + b^T x + c` evaluated from the dense matrix.
pub fn dense_eval(q: &QuadraticFunction, x: &[f64]) -> f64 {
    let x = DVector::from_column_slice(x);
    let b = DVector::from_column_slice(q.linear());
    0.5 * x.dot(&(dense_hessian(q) * &x)) + b.dot(&x) + q.constant()
}

/// Prox point of a quadratic by dense LU: `(A + sI) x = s c - b`.
pub fn dense_prox(q: &QuadraticFunction, s: f64, center: &[f64]) -> Vec<f64> {
    let m = center.len();
    let lhs = dense_hessian(q) + DMatrix::identity(m, m) * s;
    let rhs = DVector::from_column_slice(center) * s - DVector::from_column_slice(q.linear());
    lhs.lu().solve(&rhs).unwrap().iter().copied().collect()
}

pub fn affine_eval(f: &AffineFunction, x: &[f64]) -> f64 {
    f.gradient.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + f.offset
}

/// Well-conditioned random quadratic of dimension `m`.
pub fn random_quadratic(rng: &mut impl Rng, m: usize) -> QuadraticFunction {
    let v = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
    let b = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    QuadraticFunction::new(v, rng.gen_range(0.1..1.0), b, rng.gen_range(-1.0..1.0)).unwrap()
}

pub fn random_vec(rng: &mut impl Rng, m: usize, scale: f64) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Total node plus in-flight weight, summed straight from the state fields.
pub fn total_weight(state: &SimState) -> f64 {
    let nodes: f64 = state.nodes().iter().map(|n| n.s).sum();
    let edges: f64 = state
        .topology()
        .edges()
        .iter()
        .zip(state.channels())
        .map(|(&(i, _), ch)| state.nodes()[i].sigma_s - ch.rho_s)
        .sum();
    nodes + edges
}

/// `sum y + in-flight y + sum z`, summed straight from the state fields.
pub fn total_mass(state: &SimState) -> Vec<f64> {
    let m = state.problem().dim();
    let mut total = vec![0.0; m];
    for n in state.nodes() {
        for k in 0..m {
            total[k] += n.y[k] + n.z[k];
        }
    }
    for (&(i, _), ch) in state.topology().edges().iter().zip(state.channels()) {
        for k in 0..m {
            total[k] += state.nodes()[i].sigma_y[k] - ch.rho_y[k];
        }
    }
    total
}

/// `|V|` times the average anchor, from the problem data.
pub fn anchor_mass(state: &SimState) -> Vec<f64> {
    let m = state.problem().dim();
    let mut total = vec![0.0; m];
    for xb in state.problem().xbar() {
        for k in 0..m {
            total[k] += xb[k];
        }
    }
    total
}

/// Random strongly connected digraph: a random Hamiltonian cycle plus extra
/// random edges. Returns 0-based edges.
pub fn random_strong_graph(rng: &mut impl Rng, n: usize) -> Vec<(usize, usize)> {
    use rand::seq::SliceRandom;
    if n == 1 {
        return vec![];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|k| (order[k], order[(k + 1) % n])).collect();
    for a in 0..n {
        for b in 0..n {
            if a != b && !edges.contains(&(a, b)) && rng.gen_bool(0.25) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Ordinary least squares of `y` on `x`: `(slope, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}
