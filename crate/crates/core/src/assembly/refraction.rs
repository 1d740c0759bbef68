use std::fmt;

use crate::mesh::Domain;
use crate::{Error, Result};

/// Index of refraction `n(x)`, constant or affine in the coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefractionField {
    Constant(f64),
    /// `n(x) = a + b1 x1 + b2 x2`
    Affine { a: f64, b1: f64, b2: f64 },
}

impl RefractionField {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            RefractionField::Constant(c) => c,
            RefractionField::Affine { a, b1, b2 } => a + b1 * x + b2 * y,
        }
    }

    pub fn gradient(&self) -> [f64; 2] {
        match *self {
            RefractionField::Constant(_) => [0.0, 0.0],
            RefractionField::Affine { b1, b2, .. } => [b1, b2],
        }
    }

    /// `1 / (n - 1)`
    pub fn inv_contrast(&self, x: f64, y: f64) -> f64 {
        1.0 / (self.value(x, y) - 1.0)
    }

    /// `n / (n - 1)`
    pub fn weighted_contrast(&self, x: f64, y: f64) -> f64 {
        let n = self.value(x, y);
        n / (n - 1.0)
    }

    /// Gradient of `1/(n-1)`, which is also the gradient of `n/(n-1)`.
    pub fn contrast_gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let d = self.value(x, y) - 1.0;
        let g = self.gradient();
        [-g[0] / (d * d), -g[1] / (d * d)]
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RefractionField::Constant(_)) || self.gradient() == [0.0, 0.0]
    }

    /// Checks `min n >= 1 + delta` with some `delta > 0` over the domain. An
    /// affine field attains its minimum at a corner of the polygon.
    pub fn check_contrast(&self, domain: Domain) -> Result<()> {
        let (min, at) = domain
            .corners()
            .iter()
            .map(|&[x, y]| (self.value(x, y), [x, y]))
            .fold((f64::INFINITY, [0.0, 0.0]), |acc, c| if c.0 < acc.0 { c } else { acc });
        if min.is_finite() && min > 1.0 {
            Ok(())
        } else {
            Err(Error::RefractionCondition {
                min,
                x: at[0],
                y: at[1],
            })
        }
    }
}

impl fmt::Display for RefractionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RefractionField::Constant(c) => write!(f, "{c}"),
            RefractionField::Affine { a, b1, b2 } => write!(f, "affine {a} {b1} {b2}"),
        }
    }
}
