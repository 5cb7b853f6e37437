//! Quadrature oracle for the mean rectified drive of the detuning system.

use std::f64::consts::PI;

/// Midpoint quadrature of a function over the torus [0, 2pi]^2, normalized
/// by the domain area.
fn torus_mean(resolution: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let h = 2.0 * PI / resolution as f64;
    let mut sum = 0.0;
    for i in 0..resolution {
        let a = (i as f64 + 0.5) * h;
        for j in 0..resolution {
            let b = (j as f64 + 0.5) * h;
            sum += f(a, b);
        }
    }
    sum / (resolution * resolution) as f64
}

/// Mean of |sin a + sin b| over the torus.
///
/// The sum-to-product identity factorizes the integrand into
/// 2 |sin u| |cos v| with independent uniform angles, so the exact value
/// is 2 * (2/pi) * (2/pi) = 8/pi^2. Note the factorization needs the sum
/// of sines; the product |sin a sin b| would give 4/pi^2 instead.
pub fn theta_average_oracle(resolution: usize) -> f64 {
    assert!(resolution >= 64, "resolution must be at least 64 per axis");
    torus_mean(resolution, |a, b| (a.sin() + b.sin()).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_the_closed_form() {
        let exact = 8.0 / (PI * PI);
        let got = theta_average_oracle(1024);
        assert!(
            (got - exact).abs() < 1e-4,
            "quadrature {got} vs closed form {exact}"
        );
    }

    #[test]
    fn single_rectified_sine_integrates_to_two_over_pi() {
        let got = torus_mean(1024, |a, _b| a.sin().abs());
        assert!((got - 2.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn refinement_converges() {
        let exact = 8.0 / (PI * PI);
        let coarse = theta_average_oracle(256);
        let mid = theta_average_oracle(512);
        let fine = theta_average_oracle(1024);
        let change_1 = (mid - coarse).abs();
        let change_2 = (fine - mid).abs();
        assert!(change_2 < change_1 || change_2 < 1e-12);
        assert!((fine - exact).abs() <= (coarse - exact).abs());
    }
}
