//! Compactly supported smoothing kernels on `[-1, 1]` and the boundary
//! kernel coefficients.
//!
//! Exact convolution against piecewise-constant estimates only needs the
//! partial integrals `K(u) = ∫_{-1}^u k`, `M(u) = ∫_{-1}^u v k(v) dv` and
//! `S(u) = ∫_{-1}^u v² k(v) dv`. The triweight kernel provides them as
//! polynomials; other kernels inherit adaptive-quadrature defaults.

use crate::error::{Error, Result};

/// Absolute tolerance of the quadrature fallback for kernels without closed
/// forms.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// Symmetric probability density supported on `[-1, 1]`.
pub trait Kernel: Send + Sync + std::fmt::Debug {
    /// `k(u)`; zero outside `[-1, 1]`.
    fn density(&self, u: f64) -> f64;

    /// `k'(u)`; zero outside `(-1, 1)`.
    fn derivative(&self, u: f64) -> f64;

    /// `K(u) = ∫_{-1}^u k(v) dv`.
    fn antiderivative(&self, u: f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        adaptive_simpson(&|v| self.density(v), -1.0, u, QUADRATURE_TOL)
    }

    /// `M(u) = ∫_{-1}^u v k(v) dv`.
    fn first_moment_integral(&self, u: f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        adaptive_simpson(&|v| v * self.density(v), -1.0, u, QUADRATURE_TOL)
    }

    /// `S(u) = ∫_{-1}^u v² k(v) dv`.
    fn second_moment_integral(&self, u: f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        adaptive_simpson(&|v| v * v * self.density(v), -1.0, u, QUADRATURE_TOL)
    }

    /// `∫ u² k(u) du`.
    fn second_moment(&self) -> f64 {
        self.second_moment_integral(1.0)
    }

    /// `∫ k(u)² du`.
    fn roughness(&self) -> f64 {
        adaptive_simpson(&|v| self.density(v).powi(2), -1.0, 1.0, QUADRATURE_TOL)
    }
}

/// `k(u) = (35/32)(1 - u²)³` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Triweight;

const TRIWEIGHT_C: f64 = 35.0 / 32.0;

impl Kernel for Triweight {
    fn density(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        let w = 1.0 - u * u;
        TRIWEIGHT_C * w * w * w
    }

    fn derivative(&self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u * u;
        -6.0 * TRIWEIGHT_C * u * w * w
    }

    fn antiderivative(&self, u: f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        let u2 = u * u;
        // u - u³ + 3u⁵/5 - u⁷/7, which equals -16/35 at u = -1
        let p = u * (1.0 + u2 * (-1.0 + u2 * (0.6 - u2 / 7.0)));
        TRIWEIGHT_C * p + 0.5
    }

    fn first_moment_integral(&self, u: f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        let w = 1.0 - u * u;
        -TRIWEIGHT_C / 8.0 * w * w * w * w
    }

    fn second_moment_integral(&self, u: f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        let u2 = u * u;
        // u³/3 - 3u⁵/5 + 3u⁷/7 - u⁹/9, which equals -16/315 at u = -1
        let p = u * u2 * (1.0 / 3.0 + u2 * (-0.6 + u2 * (3.0 / 7.0 - u2 / 9.0)));
        TRIWEIGHT_C * p + 1.0 / 18.0
    }

    fn second_moment(&self) -> f64 {
        1.0 / 9.0
    }

    fn roughness(&self) -> f64 {
        350.0 / 429.0
    }
}

/// `k(u) = (15/16)(1 - u²)²`. Only the density and its derivative are given
/// in closed form; everything else goes through quadrature.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Biweight;

impl Kernel for Biweight {
    fn density(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        let w = 1.0 - u * u;
        15.0 / 16.0 * w * w
    }

    fn derivative(&self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        -15.0 / 4.0 * u * (1.0 - u * u)
    }
}

/// Coefficients of the boundary kernel `φ(s) k(u) + ψ(s) u k(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCoefficients {
    pub s: f64,
    pub phi: f64,
    pub psi: f64,
}

/// Solves
///
/// ```text
/// φ K(s) + ψ M(s) = 1
/// φ M(s) + ψ S(s) = 0
/// ```
///
/// so that the boundary kernel integrates to one and has zero first moment
/// over `[-1, s]`.
pub fn boundary_coefficients(kernel: &dyn Kernel, s: f64) -> Result<BoundaryCoefficients> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Config(format!("boundary ratio must lie in [0, 1], got {s}")));
    }
    let k0 = kernel.antiderivative(s);
    let m1 = kernel.first_moment_integral(s);
    let s2 = kernel.second_moment_integral(s);
    let det = k0 * s2 - m1 * m1;
    if !(det.abs() > 1e-300) || !det.is_finite() {
        return Err(Error::SingularBoundarySystem(s));
    }
    Ok(BoundaryCoefficients {
        s,
        phi: s2 / det,
        psi: -m1 / det,
    })
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
