//! Quintic spline smoothing kernel, the sole interpolation basis of the solver.
//!
//! Compact support on `[0, 3h)`. With `q = r/h`:
//!
//! ```text
//! W(q) = sigma * [ (3-q)^5 - 6(2-q)^5 + 15(1-q)^5 ]   0 <= q < 1
//!        sigma * [ (3-q)^5 - 6(2-q)^5 ]               1 <= q < 2
//!        sigma * (3-q)^5                              2 <= q < 3
//!        0                                            q >= 3
//! ```
//!
//! with normalization `sigma = 7/(478 pi h^2)` in 2D and `1/(120 pi h^3)` in
//! 3D. The unit-integral property and the gradient are pinned by quadrature
//! and finite-difference tests.

use std::f64::consts::PI;

use crate::domain::MAX_DIM;

/// Quintic spline kernel for a fixed smoothing length and dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticKernel {
    h: f64,
    inv_h: f64,
    dim: usize,
    sigma: f64,
}

impl QuinticKernel {
    pub fn new(h: f64, dim: usize) -> Self {
        assert!(h > 0.0, "smoothing length must be positive, got {h}");
        let sigma = match dim {
            2 => 7.0 / (478.0 * PI * h * h),
            3 => 1.0 / (120.0 * PI * h * h * h),
            other => panic!("kernel supports dim 2 or 3, got {other}"),
        };
        Self {
            h,
            inv_h: 1.0 / h,
            dim,
            sigma,
        }
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radius beyond which the kernel and its gradient vanish.
    #[inline]
    pub fn support_radius(&self) -> f64 {
        3.0 * self.h
    }

    /// Kernel weight at distance `r >= 0`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "kernel distance must be non-negative, got {r}");
        let q = r * self.inv_h;
        if q >= 3.0 {
            return 0.0;
        }
        let t3 = (3.0 - q).powi(5);
        let mut w = t3;
        if q < 2.0 {
            w -= 6.0 * (2.0 - q).powi(5);
        }
        if q < 1.0 {
            w += 15.0 * (1.0 - q).powi(5);
        }
        self.sigma * w
    }

    /// Weight at zero separation (the self contribution in density sums).
    #[inline]
    pub fn w0(&self) -> f64 {
        66.0 * self.sigma
    }

    /// Radial derivative dW/dr at distance `r`.
    #[inline]
    pub fn grad_scalar(&self, r: f64) -> f64 {
        let q = r * self.inv_h;
        if q >= 3.0 {
            return 0.0;
        }
        let mut dw = -5.0 * (3.0 - q).powi(4);
        if q < 2.0 {
            dw += 30.0 * (2.0 - q).powi(4);
        }
        if q < 1.0 {
            dw -= 75.0 * (1.0 - q).powi(4);
        }
        self.sigma * dw * self.inv_h
    }

    /// Kernel value and radial derivative in one evaluation (the solver's
    /// per-edge hot path).
    #[inline]
    pub fn value_and_grad(&self, r: f64) -> (f64, f64) {
        let q = r * self.inv_h;
        if q >= 3.0 {
            return (0.0, 0.0);
        }
        let a = 3.0 - q;
        let a2 = a * a;
        let a4 = a2 * a2;
        let mut w = a4 * a;
        let mut dw = -5.0 * a4;
        if q < 2.0 {
            let b = 2.0 - q;
            let b2 = b * b;
            let b4 = b2 * b2;
            w -= 6.0 * (b4 * b);
            dw += 30.0 * b4;
        }
        if q < 1.0 {
            let c = 1.0 - q;
            let c2 = c * c;
            let c4 = c2 * c2;
            w += 15.0 * (c4 * c);
            dw -= 75.0 * c4;
        }
        (self.sigma * w, self.sigma * dw * self.inv_h)
    }

    /// Gradient of W evaluated at separation `displacement` (length `r`):
    /// `dW/dr * displacement / r`. Zero at r = 0 and outside the support.
    #[inline]
    pub fn gradient(&self, displacement: &[f64], r: f64) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        if r <= 0.0 || r >= self.support_radius() {
            return out;
        }
        let scale = self.grad_scalar(r) / r;
        for (o, d) in out.iter_mut().zip(displacement) {
            *o = scale * d;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// 16-point Gauss-Legendre nodes/weights on [-1, 1], for the quadrature
    /// oracle. Exact for polynomials up to degree 31, far beyond the
    /// integrands here (degree <= 7 per spline piece).
    const GL16: [(f64, f64); 16] = [
        (-0.9894009349916499, 0.027152459411754095),
        (-0.9445750230732326, 0.062253523938647893),
        (-0.8656312023878318, 0.095158511682492785),
        (-0.7554044083550030, 0.124628971255533872),
        (-0.6178762444026438, 0.149595988816576732),
        (-0.4580167776572274, 0.169156519395002538),
        (-0.2816035507792589, 0.182603415044923589),
        (-0.0950125098376374, 0.189450610455068496),
        (0.0950125098376374, 0.189450610455068496),
        (0.2816035507792589, 0.182603415044923589),
        (0.4580167776572274, 0.169156519395002538),
        (0.6178762444026438, 0.149595988816576732),
        (0.7554044083550030, 0.124628971255533872),
        (0.8656312023878318, 0.095158511682492785),
        (0.9445750230732326, 0.062253523938647893),
        (0.9894009349916499, 0.027152459411754095),
    ];

    fn gauss<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        GL16.iter()
            .map(|&(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integrate W over its support in `dim` dimensions via the radial
    /// measure, splitting at the spline knots.
    fn integral_over_support(kernel: &QuinticKernel, dim: usize) -> f64 {
        let h = kernel.h();
        let shell = |r: f64| match dim {
            2 => 2.0 * std::f64::consts::PI * r,
            3 => 4.0 * std::f64::consts::PI * r * r,
            _ => unreachable!(),
        };
        [0.0, 1.0, 2.0, 3.0]
            .windows(2)
            .map(|seg| gauss(seg[0] * h, seg[1] * h, |r| kernel.value(r) * shell(r)))
            .sum()
    }

    #[test]
    fn vanishes_at_and_beyond_support() {
        let k = QuinticKernel::new(0.02, 2);
        assert_eq!(k.value(3.0 * 0.02), 0.0);
        assert_eq!(k.value(4.0 * 0.02), 0.0);
        assert_eq!(k.grad_scalar(3.5 * 0.02), 0.0);
    }

    #[test]
    fn unit_integral_in_2d_and_3d() {
        for (dim, h) in [(2, 0.02), (2, 1.7), (3, 0.05), (3, 3.0)] {
            let k = QuinticKernel::new(h, dim);
            let integral = integral_over_support(&k, dim);
            assert_relative_eq!(integral, 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn gradient_zero_at_origin_and_antisymmetric() {
        let k = QuinticKernel::new(0.1, 2);
        let g0 = k.gradient(&[0.0, 0.0], 0.0);
        assert_eq!(g0[0], 0.0);
        assert_eq!(g0[1], 0.0);

        let d = [0.07f64, -0.04];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let neg = [-d[0], -d[1]];
        let g = k.gradient(&d, r);
        let gn = k.gradient(&neg, r);
        assert_eq!(g[0], -gn[0]);
        assert_eq!(g[1], -gn[1]);
    }

    #[test]
    fn radial_derivative_matches_finite_differences() {
        let k = QuinticKernel::new(0.3, 3);
        let eps = 1e-7;
        for &q in &[0.1, 0.5, 0.9, 1.3, 1.9, 2.4, 2.9] {
            let r = q * k.h();
            let fd = (k.value(r + eps) - k.value(r - eps)) / (2.0 * eps);
            assert_relative_eq!(k.grad_scalar(r), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn monotone_non_increasing_on_support() {
        let k = QuinticKernel::new(1.0, 2);
        let mut prev = k.value(0.0);
        for i in 1..=300 {
            let r = 3.0 * i as f64 / 300.0;
            let w = k.value(r);
            assert!(w <= prev + 1e-15, "kernel increased at r = {r}");
            prev = w;
        }
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        // Sum of W over a uniform lattice times cell volume approximates 1
        // for an interior point, at h = 1.0 * dx.
        for dim in [2usize, 3] {
            let dx = 0.1;
            let k = QuinticKernel::new(dx, dim);
            let mut total = 0.0;
            let reach = 3i64;
            let mut idx = vec![0i64; dim];
            fn visit(idx: &mut Vec<i64>, axis: usize, reach: i64, f: &mut dyn FnMut(&[i64])) {
                if axis == idx.len() {
                    f(idx);
                    return;
                }
                for v in -reach..=reach {
                    idx[axis] = v;
                    visit(idx, axis + 1, reach, f);
                }
            }
            visit(&mut idx, 0, reach, &mut |offsets: &[i64]| {
                let r2: f64 = offsets.iter().map(|&o| (o as f64 * dx).powi(2)).sum();
                total += k.value(r2.sqrt());
            });
            let discrete = total * dx.powi(dim as i32);
            assert_abs_diff_eq!(discrete, 1.0, epsilon = 0.02);
        }
    }

    #[test]
    #[should_panic]
    fn unsupported_dimension_panics() {
        QuinticKernel::new(1.0, 4);
    }
}
