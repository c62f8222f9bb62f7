use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform P2 mesh of `[start, start + length]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    start: f64,
    length: f64,
    num_elements: usize,
}

impl Mesh1D {
    pub fn new(start: f64, length: f64, num_elements: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() || !start.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "domain [{start}, {start} + {length}] is empty or not finite"
            )));
        }
        if num_elements == 0 {
            return Err(Error::InvalidMesh("mesh needs at least one element".into()));
        }
        Ok(Self {
            start,
            length,
            num_elements,
        })
    }

    /// Mesh of the unit cell `Y = (0, 1)`.
    pub fn unit_cell(num_elements: usize) -> Result<Self> {
        Self::new(0.0, 1.0, num_elements)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn num_nodes(&self) -> usize {
        2 * self.num_elements + 1
    }

    pub fn element_size(&self) -> f64 {
        self.length / self.num_elements as f64
    }

    /// Coordinate of global node `i` (vertices are even, midpoints odd).
    pub fn node(&self, i: usize) -> f64 {
        let last = 2 * self.num_elements;
        if i == last {
            self.end()
        } else {
            self.start + self.length * (i as f64 / last as f64)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_nodes()).map(|i| self.node(i)).collect()
    }

    /// Left vertex of element `e`.
    pub fn element_start(&self, e: usize) -> f64 {
        self.node(2 * e)
    }

    /// Element containing `x` and the reference coordinate `ξ ∈ [0, 1]`.
    /// Points on an interior vertex belong to the element on their right.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let tol = 1e-12 * self.length.max(1.0);
        if !(x >= self.start - tol && x <= self.end() + tol) {
            return Err(Error::OutOfDomain {
                x,
                start: self.start,
                end: self.end(),
            });
        }
        let t = ((x - self.start) / self.length * self.num_elements as f64)
            .clamp(0.0, self.num_elements as f64);
        let e = (t.floor() as usize).min(self.num_elements - 1);
        let xi = (t - e as f64).clamp(0.0, 1.0);
        Ok((e, xi))
    }

    /// Same domain and element count, compared to round-off.
    pub fn matches(&self, other: &Mesh1D) -> bool {
        let tol = 1e-12 * self.length.abs().max(1.0);
        self.num_elements == other.num_elements
            && (self.start - other.start).abs() <= tol
            && (self.length - other.length).abs() <= tol
    }
}
