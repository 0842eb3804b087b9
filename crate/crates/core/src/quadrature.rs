use crate::error::{Error, Result};

/// Quadrature rule on the reference triangle in barycentric coordinates.
///
/// Weights are normalized to sum to one; multiply by the element area at use.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    degree: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(degree: usize) -> Result<Self> {
        quadrature_rule(degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

// Strang-Fix / Dunavant 6-point rule, exact through degree 4.
const D4_A: f64 = 0.445_948_490_915_964_886_318_329_253_883;
const D4_WA: f64 = 0.223_381_589_678_011_465_944_819_976_706;
const D4_B: f64 = 0.091_576_213_509_770_743_459_571_463_402;
const D4_WB: f64 = 0.109_951_743_655_321_867_388_513_356_627;

pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let (points, weights) = match degree {
        1 => (vec![[1.0 / 3.0; 3]], vec![1.0]),
        2 => (
            vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            vec![1.0 / 3.0; 3],
        ),
        4 => {
            let a = D4_A;
            let ca = 1.0 - 2.0 * a;
            let b = D4_B;
            let cb = 1.0 - 2.0 * b;
            (
                vec![
                    [a, a, ca],
                    [a, ca, a],
                    [ca, a, a],
                    [b, b, cb],
                    [b, cb, b],
                    [cb, b, b],
                ],
                vec![D4_WA, D4_WA, D4_WA, D4_WB, D4_WB, D4_WB],
            )
        }
        d => return Err(Error::UnsupportedQuadrature(d)),
    };
    Ok(QuadratureRule {
        degree,
        points,
        weights,
    })
}
