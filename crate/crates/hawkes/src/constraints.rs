//! Parameter transforms onto the feasible region and the stability-preserving
//! reparametrization of the bivariate productivity matrix.

use serde::{Deserialize, Serialize};

use crate::error::{HawkesError, Result};

/// Smooth scalar bijection between an unconstrained coordinate and a
/// feasible natural-scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    /// natural = exp(z); positivity.
    Log,
    /// natural = lo + (hi - lo) * sigmoid(z).
    Logit { lo: f64, hi: f64 },
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Transform {
    pub fn from_unconstrained(&self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Log => z.exp(),
            Transform::Logit { lo, hi } => lo + (hi - lo) * sigmoid(z),
        }
    }

    pub fn to_unconstrained(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(HawkesError::Domain(format!("non-finite parameter {x}")));
        }
        match self {
            Transform::Identity => Ok(x),
            Transform::Log => {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(HawkesError::Infeasible(format!("log transform needs x > 0, got {x}")))
                }
            }
            Transform::Logit { lo, hi } => {
                if x > *lo && x < *hi {
                    Ok(((x - lo) / (hi - x)).ln())
                } else {
                    Err(HawkesError::Infeasible(format!(
                        "logit transform needs {lo} < x < {hi}, got {x}"
                    )))
                }
            }
        }
    }

    /// Bounds in natural scale, where meaningful.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Transform::Identity => None,
            Transform::Log => Some((0.0, f64::INFINITY)),
            Transform::Logit { lo, hi } => Some((*lo, *hi)),
        }
    }
}

/// One block of the transform layer. Scalar blocks map one coordinate; the
/// coupled blocks map several at once so the feasible region (ordering and
/// positivity constraints between parameters) is closed under the inverse map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransformBlock {
    Scalar(Transform),
    /// Appendix-style 4-parameter block (theta, lambda_b, lambda_f, b) with
    /// -pi/2 <= theta <= pi/2, 0 <= lambda_f <= lambda_b <= 1, 0 <= b <= 1 - lambda_b.
    Branching,
    /// (phi0, phi1) pair for the nonstationary range, parameterized through
    /// the positive values of phi0 + phi1*u at u = u_lo and u = u_hi; keeps
    /// the range positive over the whole observed covariate interval.
    PhiPair { u_lo: f64, u_hi: f64 },
}

impl TransformBlock {
    pub fn arity(&self) -> usize {
        match self {
            TransformBlock::Scalar(_) => 1,
            TransformBlock::Branching => 4,
            TransformBlock::PhiPair { .. } => 2,
        }
    }

    fn from_unconstrained(&self, z: &[f64], out: &mut Vec<f64>) {
        match self {
            TransformBlock::Scalar(t) => out.push(t.from_unconstrained(z[0])),
            TransformBlock::Branching => {
                use std::f64::consts::FRAC_PI_2;
                let theta = -FRAC_PI_2 + std::f64::consts::PI * sigmoid(z[0]);
                let lambda_b = sigmoid(z[1]);
                let lambda_f = lambda_b * sigmoid(z[2]);
                let b = (1.0 - lambda_b) * sigmoid(z[3]);
                out.extend_from_slice(&[theta, lambda_b, lambda_f, b]);
            }
            TransformBlock::PhiPair { u_lo, u_hi } => {
                let at_lo = z[0].exp();
                let at_hi = z[1].exp();
                let phi1 = (at_hi - at_lo) / (u_hi - u_lo);
                let phi0 = at_lo - phi1 * u_lo;
                out.extend_from_slice(&[phi0, phi1]);
            }
        }
    }

    fn to_unconstrained(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HawkesError::Domain("non-finite parameter".into()));
        }
        match self {
            TransformBlock::Scalar(t) => out.push(t.to_unconstrained(x[0])?),
            TransformBlock::Branching => {
                use std::f64::consts::FRAC_PI_2;
                let (theta, lambda_b, lambda_f, b) = (x[0], x[1], x[2], x[3]);
                let block = BranchingBlock {
                    theta,
                    lambda_b,
                    lambda_f,
                    b,
                };
                block.validate_interior()?;
                let logit = |p: f64| (p / (1.0 - p)).ln();
                out.push(logit((theta + FRAC_PI_2) / std::f64::consts::PI));
                out.push(logit(lambda_b));
                out.push(logit(lambda_f / lambda_b));
                out.push(logit(b / (1.0 - lambda_b)));
            }
            TransformBlock::PhiPair { u_lo, u_hi } => {
                let (phi0, phi1) = (x[0], x[1]);
                let at_lo = phi0 + phi1 * u_lo;
                let at_hi = phi0 + phi1 * u_hi;
                if at_lo <= 0.0 || at_hi <= 0.0 {
                    return Err(HawkesError::Infeasible(format!(
                        "phi0 + phi1*u must be > 0 on [{u_lo}, {u_hi}]"
                    )));
                }
                out.push(at_lo.ln());
                out.push(at_hi.ln());
            }
        }
        Ok(())
    }
}

/// Ordered list of transform blocks covering a full natural parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformLayer {
    pub blocks: Vec<TransformBlock>,
}

impl TransformLayer {
    pub fn new(blocks: Vec<TransformBlock>) -> Self {
        Self { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.arity()).sum()
    }

    pub fn from_unconstrained(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim());
        let mut out = Vec::with_capacity(z.len());
        let mut i = 0;
        for b in &self.blocks {
            let a = b.arity();
            b.from_unconstrained(&z[i..i + a], &mut out);
            i += a;
        }
        out
    }

    pub fn to_unconstrained(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(HawkesError::Domain(format!(
                "expected {} parameters, got {}",
                self.dim(),
                x.len()
            )));
        }
        let mut out = Vec::with_capacity(x.len());
        let mut i = 0;
        for b in &self.blocks {
            let a = b.arity();
            b.to_unconstrained(&x[i..i + a], &mut out)?;
            i += a;
        }
        Ok(out)
    }
}

/// The four-parameter reparametrization of the bivariate productivity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchingBlock {
    pub theta: f64,
    pub lambda_b: f64,
    pub lambda_f: f64,
    pub b: f64,
}

impl BranchingBlock {
    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::FRAC_PI_2;
        if !(self.theta >= -FRAC_PI_2 && self.theta <= FRAC_PI_2) {
            return Err(HawkesError::Infeasible(format!("theta {} outside [-pi/2, pi/2]", self.theta)));
        }
        if !(0.0 <= self.lambda_f && self.lambda_f <= self.lambda_b && self.lambda_b <= 1.0) {
            return Err(HawkesError::Infeasible(format!(
                "need 0 <= lambda_f <= lambda_b <= 1, got ({}, {})",
                self.lambda_f, self.lambda_b
            )));
        }
        if !(0.0 <= self.b && self.b <= 1.0 - self.lambda_b) {
            return Err(HawkesError::Infeasible(format!(
                "need 0 <= b <= 1 - lambda_b, got b = {}",
                self.b
            )));
        }
        Ok(())
    }

    fn validate_interior(&self) -> Result<()> {
        self.validate()?;
        // the smooth bijection only covers the open region
        if self.lambda_b <= 0.0
            || self.lambda_b >= 1.0
            || self.lambda_f <= 0.0
            || self.lambda_f >= self.lambda_b
            || self.b <= 0.0
            || self.b >= 1.0 - self.lambda_b
            || self.theta.abs() >= std::f64::consts::FRAC_PI_2
        {
            return Err(HawkesError::Infeasible(
                "branching block on the boundary of its feasible region".into(),
            ));
        }
        Ok(())
    }
}

/// Productivity matrix entries produced by the branching block, named per the
/// bivariate convention (mark 0 = "b", mark 1 = "f").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductivityMatrix2 {
    pub alpha_b: f64,
    pub alpha_f: f64,
    /// cross entry with the asymmetry bump `b` added; `alpha_bf >= alpha_fb`.
    pub alpha_bf: f64,
    pub alpha_fb: f64,
}

impl ProductivityMatrix2 {
    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.alpha_b, self.alpha_bf],
            [self.alpha_fb, self.alpha_f],
        ]
    }
}

/// Build the 2x2 productivity matrix `A` from a branching block:
/// `A~ = R(theta) diag(lambda_b, lambda_f) R(theta)^-1`, then
/// `alpha_bf = A~_12 + b` for asymmetry. Rejects blocks whose resulting `A`
/// has spectral radius >= 1.
pub fn build_branching_matrix(block: &BranchingBlock) -> Result<ProductivityMatrix2> {
    block.validate()?;
    let (s, c) = block.theta.sin_cos();
    let (lb, lf) = (block.lambda_b, block.lambda_f);
    let a11 = lb * c * c + lf * s * s;
    let a22 = lb * s * s + lf * c * c;
    let a12 = (lb - lf) * s * c;
    let m = ProductivityMatrix2 {
        alpha_b: a11,
        alpha_f: a22,
        alpha_bf: a12 + block.b,
        alpha_fb: a12,
    };
    let radius = spectral_radius2(&m.as_matrix());
    if radius >= 1.0 {
        return Err(HawkesError::Unstable { radius });
    }
    Ok(m)
}

/// Spectral radius of a 2x2 matrix via the closed-form quadratic roots;
/// complex pairs are handled through their common modulus `sqrt(det)`.
pub fn spectral_radius2(a: &[[f64; 2]; 2]) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (0.5 * (tr + s)).abs().max((0.5 * (tr - s)).abs())
    } else {
        det.sqrt()
    }
}

/// Spectral radius for an arbitrary square matrix: closed form for k <= 2,
/// power iteration on `A^T A`-free absolute iteration otherwise.
pub fn spectral_radius_general(a: &[Vec<f64>]) -> f64 {
    let k = a.len();
    match k {
        0 => 0.0,
        1 => a[0][0].abs(),
        2 => spectral_radius2(&[[a[0][0], a[0][1]], [a[1][0], a[1][1]]]),
        _ => {
            let m = nalgebra::DMatrix::from_fn(k, k, |i, j| a[i][j]);
            m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
        }
    }
}
