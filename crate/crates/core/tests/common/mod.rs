//! Shared brute-force oracles, independent of the library's quadrature
//! and spectral paths: they integrate analytic closures on refined
//! lattices with their own indicator and Simpson rules.

#![allow(dead_code)]

/// Midpoint quadrature of `f` over the ball |y - c| < r inside one period,
/// on an m^3 lattice of the bounding cube.
pub fn ball_integral(
    f: &dyn Fn([f64; 3]) -> f64,
    center: [f64; 3],
    r: f64,
    m: usize,
) -> f64 {
    let h = 2.0 * r / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let y = [
                    -r + (i as f64 + 0.5) * h,
                    -r + (j as f64 + 0.5) * h,
                    -r + (k as f64 + 0.5) * h,
                ];
                if y[0] * y[0] + y[1] * y[1] + y[2] * y[2] < r * r {
                    acc += f([center[0] + y[0], center[1] + y[1], center[2] + y[2]]);
                }
            }
        }
    }
    acc * h * h * h
}

/// Midpoint quadrature over the vertical cylinder |y_h| < r, x3 over one
/// period of length `lz`.
pub fn cylinder_integral(
    f: &dyn Fn([f64; 3]) -> f64,
    center: [f64; 3],
    r: f64,
    lz: f64,
    m: usize,
    mz: usize,
) -> f64 {
    let h = 2.0 * r / m as f64;
    let hz = lz / mz as f64;
    let mut acc = 0.0;
    for k in 0..mz {
        let z = (k as f64 + 0.5) * hz;
        for j in 0..m {
            for i in 0..m {
                let y = [-r + (i as f64 + 0.5) * h, -r + (j as f64 + 0.5) * h];
                if y[0] * y[0] + y[1] * y[1] < r * r {
                    acc += f([center[0] + y[0], center[1] + y[1], z]);
                }
            }
        }
    }
    acc * h * h * hz
}

/// Composite Simpson over [a, b].
pub fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = g(a) + g(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Mixed norm ||f||_{L^q_t L^p_x} over the parabolic cylinder
/// B_r(center) x (t0 - r^2, t0], all from the analytic closure.
pub fn oracle_mixed_norm_ball(
    f: &dyn Fn([f64; 3], f64) -> f64,
    center: [f64; 3],
    t0: f64,
    r: f64,
    p: f64,
    q: f64,
    m: usize,
    panels: usize,
) -> f64 {
    let space_lp = |t: f64| -> f64 {
        ball_integral(&|x| f(x, t).abs().powf(p), center, r, m).powf(1.0 / p)
    };
    let a = t0 - r * r;
    simpson(&|t| space_lp(t).powf(q), a, t0, panels).powf(1.0 / q)
}

/// Same over the vertical cylinder with one x3 period.
#[allow(clippy::too_many_arguments)]
pub fn oracle_mixed_norm_cylinder(
    f: &dyn Fn([f64; 3], f64) -> f64,
    center: [f64; 3],
    t0: f64,
    r: f64,
    lz: f64,
    p: f64,
    q: f64,
    m: usize,
    panels: usize,
) -> f64 {
    let space_lp = |t: f64| -> f64 {
        cylinder_integral(&|x| f(x, t).abs().powf(p), center, r, lz, m, m).powf(1.0 / p)
    };
    let a = t0 - r * r;
    simpson(&|t| space_lp(t).powf(q), a, t0, panels).powf(1.0 / q)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
