//! Fixed-rule quadratures used by the ensemble averages.

use nalgebra::{DMatrix, SymmetricEigen};

/// Trapezoid nodes and weights on `[a, b]`; `n ≥ 2`.
pub fn trapezoid(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2, "trapezoid rule needs at least two nodes");
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            (a + h * i as f64, w)
        })
        .collect()
}

/// Gauss–Hermite rule for `∫ f(x) e^{−x²} dx`, via the Golub–Welsch
/// eigenproblem of the Jacobi matrix. Nodes are returned in ascending order.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = off;
        jacobi[(k - 1, k)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// Nodes `x` and probabilities for averaging over `x ~ Normal(0, sigma)`.
pub fn gaussian_average(sigma: f64, n: usize) -> Vec<(f64, f64)> {
    let scale = std::f64::consts::SQRT_2 * sigma;
    let norm = std::f64::consts::PI.sqrt();
    gauss_hermite(n)
        .into_iter()
        .map(|(x, w)| (scale * x, w / norm))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let rule = gauss_hermite(12);
        let pi_sqrt = std::f64::consts::PI.sqrt();
        let m0: f64 = rule.iter().map(|(_, w)| w).sum();
        let m2: f64 = rule.iter().map(|(x, w)| w * x * x).sum();
        let m4: f64 = rule.iter().map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - pi_sqrt).abs() < 1e-12);
        assert!((m2 - pi_sqrt / 2.0).abs() < 1e-12);
        assert!((m4 - 3.0 * pi_sqrt / 4.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_average_has_unit_variance_scaling() {
        let rule = gaussian_average(0.3, 10);
        let var: f64 = rule.iter().map(|(x, p)| p * x * x).sum();
        assert!((var - 0.09).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let s: f64 = trapezoid(-1.0, 3.0, 7).iter().map(|(x, w)| w * (2.0 * x + 1.0)).sum();
        assert!((s - 12.0).abs() < 1e-14);
    }
}
