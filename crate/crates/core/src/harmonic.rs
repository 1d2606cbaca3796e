//! Closed-form harmonic samples: trivariate polynomials and point
//! potentials, with exact derivatives and Laplacians.

use crate::error::{Error, Result};
use crate::scalar::lit;

/// Trivariate polynomial with f64 coefficients on monomials
/// x^i y^j z^k; small degrees only.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly3 {
    /// (i, j, k, coefficient)
    pub terms: Vec<(u32, u32, u32, f64)>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn monomial(i: u32, j: u32, k: u32, c: f64) -> Self {
        Self {
            terms: vec![(i, j, k, c)],
        }
    }

    fn push(&mut self, i: u32, j: u32, k: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        for t in &mut self.terms {
            if t.0 == i && t.1 == j && t.2 == k {
                t.3 += c;
                return;
            }
        }
        self.terms.push((i, j, k, c));
    }

    pub fn add(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for &(i, j, k, c) in &other.terms {
            out.push(i, j, k, c);
        }
        out.compact()
    }

    pub fn scale(&self, s: f64) -> Poly3 {
        Poly3 {
            terms: self
                .terms
                .iter()
                .map(|&(i, j, k, c)| (i, j, k, c * s))
                .collect(),
        }
    }

    fn compact(mut self) -> Poly3 {
        self.terms.retain(|t| t.3 != 0.0);
        self.terms.sort_by_key(|t| (t.0, t.1, t.2));
        self
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0 + t.1 + t.2).max().unwrap_or(0)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for &(i, j, k, c) in &self.terms {
            acc += c * x[0].powi(i as i32) * x[1].powi(j as i32) * x[2].powi(k as i32);
        }
        acc
    }

    /// Partial derivative along an axis, exact on coefficients.
    pub fn diff(&self, axis: usize) -> Poly3 {
        let mut out = Poly3::zero();
        for &(i, j, k, c) in &self.terms {
            match axis {
                0 => {
                    if i > 0 {
                        out.push(i - 1, j, k, c * i as f64);
                    }
                }
                1 => {
                    if j > 0 {
                        out.push(i, j - 1, k, c * j as f64);
                    }
                }
                _ => {
                    if k > 0 {
                        out.push(i, j, k - 1, c * k as f64);
                    }
                }
            }
        }
        out.compact()
    }

    pub fn laplacian(&self) -> Poly3 {
        self.diff(0)
            .diff(0)
            .add(&self.diff(1).diff(1))
            .add(&self.diff(2).diff(2))
    }

    /// Average over x3 in [-1, 1]: a polynomial in (x1, x2).
    pub fn mean_x3(&self) -> Poly3 {
        let mut out = Poly3::zero();
        for &(i, j, k, c) in &self.terms {
            // (1/2) int_{-1}^{1} z^k dz = 1/(k+1) for even k, 0 for odd.
            if k % 2 == 0 {
                out.push(i, j, 0, c / (k as f64 + 1.0));
            }
        }
        out.compact()
    }

    /// Average over (x1, x2) in [-1, 1]^2: a polynomial in x3.
    pub fn mean_x1x2(&self) -> Poly3 {
        let mut out = Poly3::zero();
        for &(i, j, k, c) in &self.terms {
            if i % 2 == 0 && j % 2 == 0 {
                out.push(0, 0, k, c / ((i as f64 + 1.0) * (j as f64 + 1.0)));
            }
        }
        out.compact()
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.3.abs()).fold(0.0, f64::max)
    }
}

/// The harmonic polynomials of exact degree `l` (dimension 2l + 1), built
/// as the nullspace of the Laplacian on the monomial basis.
pub fn harmonic_basis(l: u32) -> Vec<Poly3> {
    let monos: Vec<(u32, u32, u32)> = {
        let mut m = Vec::new();
        for i in 0..=l {
            for j in 0..=(l - i) {
                m.push((i, j, l - i - j));
            }
        }
        m
    };
    let dim = monos.len();
    let lower: Vec<(u32, u32, u32)> = if l >= 2 {
        let mut m = Vec::new();
        for i in 0..=(l - 2) {
            for j in 0..=(l - 2 - i) {
                m.push((i, j, l - 2 - i - j));
            }
        }
        m
    } else {
        Vec::new()
    };
    let rows = lower.len();

    // Laplacian matrix: rows over degree-(l-2) monomials.
    let mut mat = vec![vec![0.0f64; dim]; rows];
    for (col, &(i, j, k)) in monos.iter().enumerate() {
        let p = Poly3::monomial(i, j, k, 1.0);
        for (ri, rj, rk, c) in p.laplacian().terms {
            let row = lower
                .iter()
                .position(|&(a, b, d)| (a, b, d) == (ri, rj, rk))
                .expect("laplacian stays in the lower space");
            mat[row][col] = c;
        }
    }

    // Row reduce; free columns span the nullspace.
    let mut pivot_cols = Vec::new();
    let mut r = 0usize;
    for c in 0..dim {
        if r >= rows {
            break;
        }
        let (best, best_val) = (r..rows)
            .map(|rr| (rr, mat[rr][c].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if best_val < 1e-12 {
            continue;
        }
        mat.swap(r, best);
        let piv = mat[r][c];
        for cc in 0..dim {
            mat[r][cc] /= piv;
        }
        for rr in 0..rows {
            if rr != r && mat[rr][c] != 0.0 {
                let f = mat[rr][c];
                for cc in 0..dim {
                    mat[rr][cc] -= f * mat[r][cc];
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }

    let mut basis = Vec::new();
    for free in 0..dim {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut coeffs = vec![0.0f64; dim];
        coeffs[free] = 1.0;
        for (pr, &pc) in pivot_cols.iter().enumerate() {
            coeffs[pc] = -mat[pr][free];
        }
        let mut p = Poly3::zero();
        for (ci, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                let (i, j, k) = monos[ci];
                p.push(i, j, k, c);
            }
        }
        basis.push(p.compact());
    }
    basis
}

/// A harmonic sample with closed-form derivatives.
#[derive(Debug, Clone)]
pub enum HarmonicSample {
    Polynomial(Poly3),
    /// Newtonian point potential 1/|x - pole|, harmonic away from the
    /// pole (the Poisson-kernel building block); the pole must avoid the
    /// sample region.
    PointPotential { pole: [f64; 3] },
}

impl HarmonicSample {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            HarmonicSample::Polynomial(p) => p.eval(x),
            HarmonicSample::PointPotential { pole } => 1.0 / dist(x, *pole),
        }
    }

    pub fn grad(&self, x: [f64; 3]) -> [f64; 3] {
        match self {
            HarmonicSample::Polynomial(p) => {
                [p.diff(0).eval(x), p.diff(1).eval(x), p.diff(2).eval(x)]
            }
            HarmonicSample::PointPotential { pole } => {
                let r = dist(x, *pole);
                let r3 = r * r * r;
                [
                    -(x[0] - pole[0]) / r3,
                    -(x[1] - pole[1]) / r3,
                    -(x[2] - pole[2]) / r3,
                ]
            }
        }
    }

    /// Max |Lap f| over the points, relative to a second-derivative scale.
    pub fn harmonicity_residual(&self, points: &[[f64; 3]]) -> f64 {
        match self {
            HarmonicSample::Polynomial(p) => {
                let lap = p.laplacian();
                let scale: f64 = p
                    .terms
                    .iter()
                    .map(|t| t.3.abs() * ((t.0 + t.1 + t.2) as f64).max(1.0))
                    .sum::<f64>()
                    .max(1e-300);
                points
                    .iter()
                    .map(|&x| lap.eval(x).abs() / scale)
                    .fold(0.0, f64::max)
            }
            HarmonicSample::PointPotential { pole } => points
                .iter()
                .map(|&x| {
                    let r = dist(x, *pole);
                    let y2 = (x[0] - pole[0]).powi(2)
                        + (x[1] - pole[1]).powi(2)
                        + (x[2] - pole[2]).powi(2);
                    let lap = 3.0 * y2 / r.powi(5) - 3.0 / r.powi(3);
                    (lap / (3.0 / r.powi(3))).abs()
                })
                .fold(0.0, f64::max),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            HarmonicSample::Polynomial(p) => {
                let parts: Vec<String> = p
                    .terms
                    .iter()
                    .map(|&(i, j, k, c)| format!("{c}*x^{i}y^{j}z^{k}"))
                    .collect();
                format!("poly[{}]", parts.join(" + "))
            }
            HarmonicSample::PointPotential { pole } => format!(
                "point_potential[pole=({}, {}, {})]",
                pole[0], pole[1], pole[2]
            ),
        }
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// The harmonic polynomials up to `max_degree`, optionally with point
/// potentials whose poles sit outside the unit cube.
pub fn harmonic_library(max_degree: u32, include_potentials: bool) -> Vec<HarmonicSample> {
    let mut out = Vec::new();
    for l in 0..=max_degree {
        for p in harmonic_basis(l) {
            out.push(HarmonicSample::Polynomial(p));
        }
    }
    if include_potentials {
        out.push(HarmonicSample::PointPotential {
            pole: [2.5, 0.3, -0.4],
        });
        out.push(HarmonicSample::PointPotential {
            pole: [-1.9, 2.1, 1.4],
        });
    }
    out
}

/// Degree filter strings of the CLI (`degree<=4`).
pub fn parse_degree_filter(s: &str) -> Result<u32> {
    let t = s.trim().replace(' ', "");
    if let Some(rest) = t.strip_prefix("degree<=") {
        let d: u32 = rest
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad degree filter '{s}'")))?;
        if d > 6 {
            return Err(Error::InvalidParam("library holds degrees <= 6".into()));
        }
        return Ok(d);
    }
    Err(Error::InvalidParam(format!(
        "expected a filter like 'degree<=4', got '{s}'"
    )))
}

/// Lift an f64 point into the working scalar type.
pub fn lift_point<T: crate::scalar::Scalar>(x: [f64; 3]) -> [T; 3] {
    [lit(x[0]), lit(x[1]), lit(x[2])]
}
