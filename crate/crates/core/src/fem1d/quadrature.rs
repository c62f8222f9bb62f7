//! Reference-element data on `ξ ∈ [0, 1]`: 3-point Gauss–Legendre rule and
//! P2 Lagrange shape functions with nodes at `0, 1/2, 1`.

/// Gauss points on `[0, 1]`.
pub const GAUSS_POINTS: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];

/// Gauss weights on `[0, 1]` (they sum to one).
pub const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

#[inline]
pub fn shape(xi: f64) -> [f64; 3] {
    [
        (1.0 - xi) * (1.0 - 2.0 * xi),
        4.0 * xi * (1.0 - xi),
        xi * (2.0 * xi - 1.0),
    ]
}

/// Derivatives with respect to `ξ`; divide by the element size for `d/dx`.
#[inline]
pub fn shape_derivative(xi: f64) -> [f64; 3] {
    [4.0 * xi - 3.0, 4.0 - 8.0 * xi, 4.0 * xi - 1.0]
}

/// `∫_0^1 f(ξ) dξ` with the 3-point rule.
pub fn integrate(f: impl Fn(f64) -> f64) -> f64 {
    GAUSS_POINTS
        .iter()
        .zip(GAUSS_WEIGHTS.iter())
        .map(|(&x, &w)| w * f(x))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_up_to_degree_five() {
        for degree in 0..=5 {
            let exact = 1.0 / (degree as f64 + 1.0);
            let approx = integrate(|x| x.powi(degree));
            assert!(
                ((approx - exact) / exact).abs() < 1e-13,
                "degree {degree}: {approx} vs {exact}"
            );
        }
        // degree 6 is the first miss
        assert!((integrate(|x| x.powi(6)) - 1.0 / 7.0).abs() > 1e-6);
    }

    #[test]
    fn shape_functions_form_a_partition_of_unity() {
        for &xi in &[0.0, 0.1, 0.5, 0.77, 1.0] {
            let n = shape(xi);
            let d = shape_derivative(xi);
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(d.iter().sum::<f64>().abs() < 1e-14);
        }
        assert_eq!(shape(0.0), [1.0, 0.0, 0.0]);
        assert_eq!(shape(0.5), [0.0, 1.0, 0.0]);
        assert_eq!(shape(1.0), [0.0, 0.0, 1.0]);
    }
}
