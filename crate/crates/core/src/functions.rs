//! Per-node convex objectives and the affine-minorant machinery used by the
//! dual block update.
//!
//! Sign convention for dual variables: a prox step at `center` with weight
//! `s` returns `z = s * (center - x)`, which is a subgradient of `f` at `x`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm, norm_sq, sub, zeros};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("prox weight must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("point is outside the conjugate domain (distance {distance:e})")]
    OutsideConjugateDomain { distance: f64 },
    #[error("ridge parameter must be positive, got {0}")]
    InvalidRidge(f64),
}

fn check_dim(expected: usize, v: &[f64]) -> Result<(), FunctionError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(FunctionError::DimensionMismatch {
            expected,
            found: v.len(),
        })
    }
}

fn check_scale(s: f64) -> Result<(), FunctionError> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(FunctionError::NonPositiveScale(s))
    }
}

/// `f(x) = gradient^T x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub gradient: Vec<f64>,
    pub offset: f64,
}

impl AffineFunction {
    pub fn new(gradient: Vec<f64>, offset: f64) -> Self {
        AffineFunction { gradient, offset }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.gradient, x) + self.offset
    }

    /// Conjugate of an affine function: `-offset` at `z = gradient`, `+inf`
    /// elsewhere. Points within `1e-9 * (1 + |gradient|)` count as equal.
    pub fn conjugate_value(&self, z: &[f64]) -> Result<f64, FunctionError> {
        check_dim(self.dim(), z)?;
        let distance = norm(&sub(z, &self.gradient));
        if distance <= 1e-9 * (1.0 + norm(&self.gradient)) {
            Ok(-self.offset)
        } else {
            Err(FunctionError::OutsideConjugateDomain { distance })
        }
    }
}

/// `f(x) = 1/2 x^T (v v^T + r I) x + b^T x + c` with `r > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFunction {
    v: Vec<f64>,
    r: f64,
    b: Vec<f64>,
    c: f64,
}

impl QuadraticFunction {
    pub fn new(v: Vec<f64>, r: f64, b: Vec<f64>, c: f64) -> Result<Self, FunctionError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(FunctionError::InvalidRidge(r));
        }
        check_dim(v.len(), &b)?;
        Ok(QuadraticFunction { v, r, b, c })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn direction(&self) -> &[f64] {
        &self.v
    }

    pub fn ridge(&self) -> f64 {
        self.r
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Gradient-Lipschitz constant, the largest eigenvalue `|v|^2 + r`.
    pub fn lipschitz(&self) -> f64 {
        norm_sq(&self.v) + self.r
    }

    /// `(v v^T + r I) x`
    pub fn hessian_apply(&self, x: &[f64]) -> Vec<f64> {
        let vx = dot(&self.v, x);
        x.iter()
            .zip(&self.v)
            .map(|(xi, vi)| self.r * xi + vi * vx)
            .collect()
    }

    /// Solves `(v v^T + (r + shift) I) x = rhs` in closed form
    /// (Sherman-Morrison on the rank-one term).
    pub fn shifted_solve(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let rho = self.r + shift;
        let coef = dot(&self.v, rhs) / (rho + norm_sq(&self.v));
        rhs.iter()
            .zip(&self.v)
            .map(|(w, vi)| (w - vi * coef) / rho)
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.hessian_apply(x)) + dot(&self.b, x) + self.c
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.hessian_apply(x);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi += bi;
        }
        g
    }
}

/// Per-node objective `f_i`. All variants have full domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    Zero { dim: usize },
    Affine(AffineFunction),
    Quadratic(QuadraticFunction),
}

/// How the dual block update treats a node's objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Treatment {
    /// Exact prox step.
    #[serde(rename = "prox")]
    Proximable,
    /// Two-piece affine minorant step driven by subgradients.
    #[serde(rename = "subdiff")]
    Subdifferentiable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub function: Objective,
    pub treatment: Treatment,
}

impl ObjectiveSpec {
    pub fn new(function: Objective, treatment: Treatment) -> Self {
        ObjectiveSpec {
            function,
            treatment,
        }
    }

    pub fn dim(&self) -> usize {
        self.function.dim()
    }
}

/// Primal and dual output of a prox-type step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Zero { dim } => *dim,
            Objective::Affine(a) => a.dim(),
            Objective::Quadratic(q) => q.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        check_dim(self.dim(), x)?;
        Ok(match self {
            Objective::Zero { .. } => 0.0,
            Objective::Affine(a) => a.eval(x),
            Objective::Quadratic(q) => q.eval(x),
        })
    }

    /// A member of the subdifferential at `x` (the gradient, since every
    /// variant is smooth).
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>, FunctionError> {
        check_dim(self.dim(), x)?;
        Ok(match self {
            Objective::Zero { dim } => zeros(*dim),
            Objective::Affine(a) => a.gradient.clone(),
            Objective::Quadratic(q) => q.gradient(x),
        })
    }

    /// Affine minorant touching `f` at `x`.
    pub fn tangent_at(&self, x: &[f64]) -> Result<AffineFunction, FunctionError> {
        let g = self.subgradient(x)?;
        let value = self.eval(x)?;
        let offset = value - dot(&g, x);
        Ok(AffineFunction::new(g, offset))
    }

    /// `x = argmin f(.) + (s/2)|. - center|^2`, `z = s (center - x)`.
    pub fn prox(&self, s: f64, center: &[f64]) -> Result<ProxPoint, FunctionError> {
        check_scale(s)?;
        check_dim(self.dim(), center)?;
        Ok(match self {
            Objective::Zero { dim } => ProxPoint {
                x: center.to_vec(),
                z: zeros(*dim),
            },
            Objective::Affine(a) => ProxPoint {
                x: center
                    .iter()
                    .zip(&a.gradient)
                    .map(|(c, g)| c - g / s)
                    .collect(),
                z: a.gradient.clone(),
            },
            Objective::Quadratic(q) => {
                let rhs: Vec<f64> = center.iter().zip(&q.b).map(|(c, b)| s * c - b).collect();
                let x = q.shifted_solve(s, &rhs);
                let z = center.iter().zip(&x).map(|(c, xi)| s * (c - xi)).collect();
                ProxPoint { x, z }
            }
        })
    }

    /// Fenchel conjugate `f*(z)`.
    pub fn conjugate_value(&self, z: &[f64]) -> Result<f64, FunctionError> {
        check_dim(self.dim(), z)?;
        match self {
            Objective::Zero { .. } => {
                let distance = norm(z);
                if distance <= 1e-9 {
                    Ok(0.0)
                } else {
                    Err(FunctionError::OutsideConjugateDomain { distance })
                }
            }
            Objective::Affine(a) => a.conjugate_value(z),
            Objective::Quadratic(q) => {
                let w = sub(z, &q.b);
                Ok(0.5 * dot(&w, &q.shifted_solve(0.0, &w)) - q.c)
            }
        }
    }

    /// Gradient-Lipschitz constant (0 for the affine variants).
    pub fn lipschitz(&self) -> f64 {
        match self {
            Objective::Quadratic(q) => q.lipschitz(),
            _ => 0.0,
        }
    }
}

/// Result of one minorant step: the prox point of the two-piece model and
/// the new single affine model that reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleStep {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub model: AffineFunction,
}

/// Exact minimizer of `max{prev, tangent}(x) + (s/2)|x - center|^2`.
///
/// Tries each piece's unconstrained minimizer first; otherwise the solution
/// sits on the kink `prev(x) = tangent(x)` with the convex-combination slope
/// `theta * a_prev + (1 - theta) * a_tangent`. The returned model is
/// `z^T (. - x) + max{prev, tangent}(x)`, which has the same prox point.
pub fn bundle_prox(
    prev: &AffineFunction,
    tangent: &AffineFunction,
    s: f64,
    center: &[f64],
) -> Result<BundleStep, FunctionError> {
    check_scale(s)?;
    let m = center.len();
    check_dim(m, &prev.gradient)?;
    check_dim(m, &tangent.gradient)?;

    let step =
        |slope: &[f64]| -> Vec<f64> { center.iter().zip(slope).map(|(c, a)| c - a / s).collect() };
    let max_at = |x: &[f64]| prev.eval(x).max(tangent.eval(x));

    let diff = sub(&prev.gradient, &tangent.gradient);
    let diff_sq = norm_sq(&diff);
    let scale_sq = 1.0 + norm_sq(&prev.gradient).max(norm_sq(&tangent.gradient));

    let z: Vec<f64> = if diff_sq <= 1e-28 * scale_sq {
        // Parallel pieces: the max is the piece with the larger offset.
        if prev.offset >= tangent.offset {
            prev.gradient.clone()
        } else {
            tangent.gradient.clone()
        }
    } else {
        let x_prev = step(&prev.gradient);
        let x_tan = step(&tangent.gradient);
        if prev.eval(&x_prev) >= tangent.eval(&x_prev) {
            prev.gradient.clone()
        } else if tangent.eval(&x_tan) >= prev.eval(&x_tan) {
            tangent.gradient.clone()
        } else {
            let db = prev.offset - tangent.offset;
            let theta = ((s * (dot(&diff, center) + db) - dot(&diff, &tangent.gradient)) / diff_sq)
                .clamp(0.0, 1.0);
            prev.gradient
                .iter()
                .zip(&tangent.gradient)
                .map(|(a1, a2)| theta * a1 + (1.0 - theta) * a2)
                .collect()
        }
    };
    let x = step(&z);
    let value = max_at(&x);
    let model = AffineFunction::new(z.clone(), value - dot(&z, &x));
    Ok(BundleStep { x, z, model })
}

/// Random strongly convex quadratic `1/2 x^T (v v^T + r I) x + b^T x` with
/// `v ~ U(0,1)^m`, `r ~ U(0,1)` and `b` chosen so that the gradient at the
/// all-ones vector equals `target_gradient`.
pub fn make_paper_quadratic<R: Rng + ?Sized>(
    target_gradient: &[f64],
    rng: &mut R,
) -> QuadraticFunction {
    let m = target_gradient.len();
    let v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let mut r = rng.gen::<f64>();
    while r <= 0.0 {
        r = rng.gen::<f64>();
    }
    let ones = vec![1.0; m];
    let mut q = QuadraticFunction {
        v,
        r,
        b: zeros(m),
        c: 0.0,
    };
    let a_ones = q.hessian_apply(&ones);
    q.b = sub(target_gradient, &a_ones);
    q
}
