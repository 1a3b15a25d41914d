use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Slice2D;

/// Smooth multiplicative field `exp(sum c_pq x^p y^q)` over `[-1, 1]^2`.
///
/// Coefficients are ordered `p = 0..=order`, then `q = 0..=order - p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasFieldParams {
    pub order: usize,
    pub coefficients: Vec<f64>,
}

impl BiasFieldParams {
    pub fn coefficient_count(order: usize) -> usize {
        (order + 1) * (order + 2) / 2
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            coefficients: vec![0.0; Self::coefficient_count(order)],
        }
    }

    /// `(p, q)` exponent pairs in coefficient order.
    pub fn monomials(order: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..=order).flat_map(move |p| (0..=order - p).map(move |q| (p, q)))
    }

    pub fn validate(&self) -> Result<()> {
        let want = Self::coefficient_count(self.order);
        if self.coefficients.len() != want {
            return Err(Error::Parameter(format!(
                "order {} needs {want} coefficients, got {}",
                self.order,
                self.coefficients.len()
            )));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("bias coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Normalized coordinate of pixel `i` out of `n`.
pub(crate) fn unit_coord(i: usize, n: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        -1.0 + 2.0 * i as f64 / (n - 1) as f64
    }
}

/// Bias field values in slice layout.
pub fn bias_field(shape: [usize; 2], p: &BiasFieldParams) -> Result<Vec<f64>> {
    p.validate()?;
    let [nx, ny] = shape;
    let powers = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let x = unit_coord(i, n);
                let mut row = Vec::with_capacity(p.order + 1);
                let mut acc = 1.0;
                for _ in 0..=p.order {
                    row.push(acc);
                    acc *= x;
                }
                row
            })
            .collect()
    };
    let (px, py) = (powers(nx), powers(ny));
    let terms: Vec<(usize, usize, f64)> = BiasFieldParams::monomials(p.order)
        .zip(&p.coefficients)
        .filter(|(_, &c)| c != 0.0)
        .map(|((a, b), &c)| (a, b, c))
        .collect();
    let mut field = Vec::with_capacity(nx * ny);
    for yj in &py {
        for xi in &px {
            let poly: f64 = terms.iter().map(|&(a, b, c)| c * xi[a] * yj[b]).sum();
            field.push(poly.exp());
        }
    }
    Ok(field)
}

pub fn apply_bias_field(slice: &Slice2D, p: &BiasFieldParams) -> Result<Slice2D> {
    let field = bias_field(slice.shape(), p)?;
    slice.with_data(slice.data().iter().zip(field).map(|(v, f)| v * f).collect())
}
