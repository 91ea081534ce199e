//! Radial quadrature of the conserved energy and the static functionals.
//!
//! All integrals are `4π ∫ f(r) r² dr` evaluated with the composite trapezoid rule
//! on the sampling grid; radial derivatives use centred differences with
//! `φ'(0) = 0` and a one-sided difference at the outer end.

use std::f64::consts::PI;

use crate::{RadialGrid, Result};

/// Centred finite-difference derivative of a radial profile.
pub fn radial_derivative(phi: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = phi.len();
    let inv2 = 0.5 / grid.dr();
    let mut d = vec![0.0; n];
    for j in 1..n - 1 {
        d[j] = (phi[j + 1] - phi[j - 1]) * inv2;
    }
    d[n - 1] = (phi[n - 1] - phi[n - 2]) / grid.dr();
    d
}

/// `4π ∫ f r² dr` by the trapezoid rule over the first `len` samples of `f`.
pub(crate) fn radial_trapezoid(grid: &RadialGrid, len: usize, f: impl Fn(usize) -> f64) -> f64 {
    if len < 2 {
        return 0.0;
    }
    let dr = grid.dr();
    let mut sum = 0.0;
    // j = 0 carries weight r² = 0.
    for j in 1..len - 1 {
        let r = grid.r(j);
        sum += f(j) * r * r;
    }
    let r_last = grid.r(len - 1);
    sum += 0.5 * f(len - 1) * r_last * r_last;
    4.0 * PI * dr * sum
}

/// Stationary energy `J(φ) = ∫ ½(|∇φ|² + φ²) - ¼ φ⁴ dx`.
pub fn functional_j(phi: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.check_len("phi", phi.len())?;
    let d = radial_derivative(phi, grid);
    Ok(radial_trapezoid(grid, phi.len(), |j| {
        let p = phi[j];
        0.5 * (d[j] * d[j] + p * p) - 0.25 * p * p * p * p
    }))
}

/// Scaling functional `K(φ) = ∫ |∇φ|² + φ² - φ⁴ dx`.
pub fn functional_k(phi: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.check_len("phi", phi.len())?;
    let d = radial_derivative(phi, grid);
    Ok(radial_trapezoid(grid, phi.len(), |j| {
        let p = phi[j];
        d[j] * d[j] + p * p - p * p * p * p
    }))
}

/// Conserved energy `E(u0, u1) = J(u0) + ½ ∫ u1² dx`.
///
/// With `u1 = 0` the kinetic part is exactly zero, so `E(u0, 0) == J(u0)` bit for bit.
pub fn functional_e(u0: &[f64], u1: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.check_len("u1", u1.len())?;
    let potential = functional_j(u0, grid)?;
    let kinetic = radial_trapezoid(grid, u1.len(), |j| 0.5 * u1[j] * u1[j]);
    Ok(potential + kinetic)
}

/// `‖∇φ‖² + ‖φ‖²`, the squared H¹ norm in the same quadrature.
pub fn h1_norm_sq(phi: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.check_len("phi", phi.len())?;
    let d = radial_derivative(phi, grid);
    Ok(radial_trapezoid(grid, phi.len(), |j| d[j] * d[j] + phi[j] * phi[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_CFL;

    fn grid(dr: f64) -> RadialGrid {
        RadialGrid::with_extent(dr, 12.0, DEFAULT_CFL).unwrap()
    }

    fn sample(g: &RadialGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        g.radii().map(f).collect()
    }

    #[test]
    fn zero_field() {
        let g = grid(0.01);
        let z = vec![0.0; g.n_points()];
        assert_eq!(functional_j(&z, &g).unwrap(), 0.0);
        assert_eq!(functional_k(&z, &g).unwrap(), 0.0);
        assert_eq!(functional_e(&z, &z, &g).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_sampling_is_rejected() {
        let g = grid(0.01);
        let short = vec![0.0; 10];
        assert!(functional_j(&short, &g).is_err());
        let z = vec![0.0; g.n_points()];
        assert!(functional_e(&z, &short, &g).is_err());
    }

    // Closed-form Gaussian moments: ∫ r^2 e^{-a r^2} dr = √π / (4 a^{3/2}),
    // ∫ r^4 e^{-a r^2} dr = 3√π / (8 a^{5/2}).
    fn m2(a: f64) -> f64 {
        PI.sqrt() / (4.0 * a.powf(1.5))
    }
    fn m4(a: f64) -> f64 {
        3.0 * PI.sqrt() / (8.0 * a.powf(2.5))
    }

    #[test]
    fn small_gaussian_matches_quadratic_part() {
        let g = grid(0.005);
        let eps = 1e-3;
        let u0 = sample(&g, |r| eps * (-r * r).exp());
        let z = vec![0.0; g.n_points()];
        let e = functional_e(&u0, &z, &g).unwrap();
        let quad = 4.0 * PI * 0.5 * eps * eps * (4.0 * m4(2.0) + m2(2.0));
        assert!(e > 0.0);
        // quadrature error O(dr²) dominates the O(ε⁴) quartic part here
        assert!((e - quad).abs() / quad < 1e-4, "e = {e}, quad = {quad}");
        let k = functional_k(&u0, &g).unwrap();
        assert!(k > 0.0);
    }

    #[test]
    fn energy_with_zero_velocity_equals_j() {
        let g = grid(0.01);
        let u0 = sample(&g, |r| 3.0 * (-r * r).exp() * (2.0 * r).cos());
        let z = vec![0.0; g.n_points()];
        assert_eq!(
            functional_e(&u0, &z, &g).unwrap().to_bits(),
            functional_j(&u0, &g).unwrap().to_bits()
        );
    }

    #[test]
    fn j_is_second_order_in_dr() {
        let phi = |r: f64| 2.0 * (-r * r).exp();
        let exact = {
            // J = 4π[½ A²(4 m4(2) + m2(2)) - ¼ A⁴ m2(4)]
            let a: f64 = 2.0;
            4.0 * PI * (0.5 * a * a * (4.0 * m4(2.0) + m2(2.0)) - 0.25 * a.powi(4) * m2(4.0))
        };
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dr| {
                let g = grid(dr);
                (functional_j(&sample(&g, phi), &g).unwrap() - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order}, errs {errs:?}");
        }
    }
}
