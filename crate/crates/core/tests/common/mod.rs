//! Reference implementations used as oracles by the integration tests. None
//! of these call into the library's own numerics.

#![allow(dead_code)]

pub fn triweight(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        35.0 / 32.0 * (1.0 - u * u).powi(3)
    }
}

pub fn triweight_second_derivative(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        35.0 / 32.0 * (1.0 - u * u) * (30.0 * u * u - 6.0)
    }
}

pub const TRIWEIGHT_MU2: f64 = 1.0 / 9.0;
pub const TRIWEIGHT_ROUGHNESS: f64 = 350.0 / 429.0;

/// Recursive Simpson rule with Richardson correction. Panels also stop once
/// the correction is at the level of round-off.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, s: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (0.5 * (a + m), 0.5 * (m + b));
        let (fl, fr) = (f(l), f(r));
        let sl = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
        let sr = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
        let err = (sl + sr - s).abs();
        if depth == 0 || err <= 15.0 * tol || err <= 1e-15 * (sl.abs() + sr.abs()) {
            sl + sr + (sl + sr - s) / 15.0
        } else {
            rec(f, a, m, fa, fl, fm, sl, tol / 2.0, depth - 1) + rec(f, m, b, fm, fr, fb, sr, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, s, tol, 30)
}

/// `Σ_j value_j ∫ g` over each `(start, end, value)` piece intersected with
/// `[lo, hi]`; `g` is integrated piece by piece so every panel is smooth.
pub fn piecewise_integral(pieces: &[(f64, f64, f64)], lo: f64, hi: f64, g: &dyn Fn(f64) -> f64, tol: f64) -> f64 {
    pieces
        .iter()
        .map(|&(a, c, v)| {
            let (a, c) = (a.max(lo), c.min(hi));
            if c > a {
                v * simpson(g, a, c, tol)
            } else {
                0.0
            }
        })
        .sum()
}

/// Boundary-kernel coefficients at ratio `s`, from moments of the triweight
/// over `[-1, s]` computed by quadrature.
pub fn boundary_coefficients_by_quadrature(s: f64) -> (f64, f64) {
    let m0 = simpson(&|u| triweight(u), -1.0, s, 1e-15);
    let m1 = simpson(&|u| u * triweight(u), -1.0, s, 1e-15);
    let m2 = simpson(&|u| u * u * triweight(u), -1.0, s, 1e-15);
    let det = m0 * m2 - m1 * m1;
    (m2 / det, -m1 / det)
}

/// Weights `(φ, ψ')` of `k(y)` and `y k(y)` at evaluation point `x` for the
/// standard or boundary-corrected smoother on `[0, upper]`.
pub fn kernel_weights(x: f64, b: f64, upper: f64, corrected: bool) -> (f64, f64) {
    if !corrected {
        (1.0, 0.0)
    } else if x <= b {
        boundary_coefficients_by_quadrature(x / b)
    } else if x >= upper - b {
        let (phi, psi) = boundary_coefficients_by_quadrature((upper - x) / b);
        (phi, -psi)
    } else {
        (1.0, 0.0)
    }
}

/// `∫ k_b(x-u) est(u) du` over `[(x-b)∨0, (x+b)∧upper]` by quadrature, with
/// `est` given as `(start, end, value)` pieces.
pub fn convolution_by_quadrature(pieces: &[(f64, f64, f64)], b: f64, x: f64, upper: f64, corrected: bool) -> f64 {
    let lo = (x - b).max(0.0);
    let hi = (x + b).min(upper);
    let (phi, psi) = kernel_weights(x, b, upper, corrected);
    let kernel = |u: f64| {
        let y = (x - u) / b;
        (phi + psi * y) * triweight(y) / b
    };
    piecewise_integral(pieces, lo, hi, &kernel, 1e-14)
}

/// Lower convex hull of a finite point set by brute force: a point is a
/// vertex when it is the lowest point at its time and lies strictly below
/// every chord between points on either side of it, or is an extreme time.
pub fn brute_force_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut lowest: Vec<(f64, f64)> = Vec::new();
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for p in sorted {
        if lowest.last().map(|q| q.0) != Some(p.0) {
            lowest.push(p);
        }
    }
    let n = lowest.len();
    let mut hull = Vec::new();
    for (k, &p) in lowest.iter().enumerate() {
        if k == 0 || k == n - 1 {
            hull.push(p);
            continue;
        }
        let mut below_all = true;
        for i in 0..k {
            for j in k + 1..n {
                let (a, c) = (lowest[i], lowest[j]);
                let chord = a.1 + (c.1 - a.1) * (p.0 - a.0) / (c.0 - a.0);
                let scale = 1.0 + chord.abs().max(p.1.abs());
                if p.1 >= chord - 1e-12 * scale {
                    below_all = false;
                }
            }
        }
        if below_all {
            hull.push(p);
        }
    }
    hull
}

/// D'Agostino-Pearson K² omnibus normality statistic and its chi-square(2)
/// p-value.
pub fn dagostino_pearson(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let moment = |p: i32| data.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));

    let g1 = m3 / m2.powf(1.5);
    let y = g1 * ((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0))).sqrt();
    let beta2 =
        3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) / ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    let w2 = -1.0 + (2.0 * (beta2 - 1.0)).sqrt();
    let delta = 1.0 / (0.5 * w2.ln()).sqrt();
    let alpha = (2.0 / (w2 - 1.0)).sqrt();
    let ya = y / alpha;
    let z_skew = delta * (ya + (ya * ya + 1.0).sqrt()).ln();

    let b2 = m4 / (m2 * m2);
    let mean_b2 = 3.0 * (n - 1.0) / (n + 1.0);
    let var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0).powi(2) * (n + 3.0) * (n + 5.0));
    let x = (b2 - mean_b2) / var_b2.sqrt();
    let sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0))
        * (6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0))).sqrt();
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + (1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)).sqrt());
    let term = (1.0 - 2.0 / a) / (1.0 + x * (2.0 / (a - 4.0)).sqrt());
    let z_kurt = ((1.0 - 2.0 / (9.0 * a)) - term.cbrt()) / (2.0 / (9.0 * a)).sqrt();

    let k2 = z_skew * z_skew + z_kurt * z_kurt;
    // chi-square with two degrees of freedom
    (k2, (-0.5 * k2).exp())
}
