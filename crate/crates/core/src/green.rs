//! Green matrices of the first-order problem and resolvent kernels
//! `Γ = -g₁₂` of the quasi-differential operator.
//!
//! With `D = α + βZ(b)` (all at spectral parameter `μ`):
//!
//! ```text
//! G(t, τ) =  Z(t) D⁻¹ α Z(τ)⁻¹          τ ≤ t
//! G(t, τ) = -Z(t) D⁻¹ β Z(b) Z(τ)⁻¹     τ > t
//! ```
//!
//! The diagonal takes the `τ ≤ t` branch.

use crate::boundary::LinearBC;
use crate::coeffs::{CoefficientSet, ShinZettlMatrix};
use crate::linalg::{block, condition_number, dot_conj, inverse};
use crate::propagator::{boundary_matrix, propagate, Mesh, Trajectory, SINGULAR_COND};
use crate::quadrature::GaussLegendre;
use crate::{CMat, CVec, Error, Result, C64};

/// Sample points shared by `t` and `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// `n` equispaced points including both end points.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least two points".into(),
            ));
        }
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty interval ({a}, {b})")));
        }
        let points = (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "grid points must be strictly increasing (at least two)".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut w = vec![0.0; n];
        for k in 0..n - 1 {
            let h = self.points[k + 1] - self.points[k];
            w[k] += 0.5 * h;
            w[k + 1] += 0.5 * h;
        }
        w
    }
}

/// `G(t_i, τ_j)`, `2s × 2s` per grid pair, stored row-major in `(i, j)`.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    grid: Grid,
    values: Vec<CMat>,
    jumps: Vec<CMat>,
    lambda: C64,
    bc: LinearBC,
}

impl GreenMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn bc(&self) -> &LinearBC {
        &self.bc
    }

    pub fn get(&self, i: usize, j: usize) -> &CMat {
        &self.values[i * self.grid.len() + j]
    }

    /// `G(t_i, t_i⁺) - G(t_i, t_i⁻)`; equals `-I` up to rounding.
    pub fn diagonal_jump(&self, i: usize) -> &CMat {
        &self.jumps[i]
    }
}

/// Assemble the Green matrix of `w' = A(·; μ) w + φ`, `αw(a) + βw(b) = 0` on
/// `grid × grid`. Propagation uses a mesh containing every grid point.
pub fn green_matrix(
    a: &ShinZettlMatrix,
    bc: &LinearBC,
    grid: &Grid,
    max_step: f64,
) -> Result<GreenMatrix> {
    if bc.s() != a.s() {
        return Err(Error::DimensionMismatch(format!(
            "boundary condition has s = {}, system has s = {}",
            bc.s(),
            a.s()
        )));
    }
    let mesh = Mesh::with_points(a.breakpoints(), grid.points(), max_step)?;
    let fs = propagate(a, &mesh)?;
    let d = boundary_matrix(&fs, bc);
    let cond = condition_number(&d);
    if !(cond < SINGULAR_COND) {
        return Err(Error::NotInResolventSet {
            lambda: a.lambda(),
            cond,
        });
    }
    let d_inv = inverse(&d).ok_or(Error::NotInResolventSet {
        lambda: a.lambda(),
        cond,
    })?;
    let n = grid.len();
    let z: Vec<CMat> = grid
        .points()
        .iter()
        .map(|&t| fs.eval(t))
        .collect::<Result<_>>()?;
    let z_inv: Vec<CMat> = z
        .iter()
        .map(|m| inverse(m).ok_or_else(|| Error::InvalidArgument("singular propagator".into())))
        .collect::<Result<_>>()?;
    let left: Vec<CMat> = z.iter().map(|zi| zi * &d_inv).collect();
    let lower: Vec<CMat> = z_inv.iter().map(|zi| bc.alpha() * zi).collect();
    let beta_zb = -(bc.beta() * fs.end());
    let upper: Vec<CMat> = z_inv.iter().map(|zi| &beta_zb * zi).collect();

    let row = |i: usize| -> Vec<CMat> {
        (0..n)
            .map(|j| {
                if j <= i {
                    &left[i] * &lower[j]
                } else {
                    &left[i] * &upper[j]
                }
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<CMat>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<CMat>> = (0..n).map(row).collect();

    let jumps = (0..n).map(|i| &left[i] * (&upper[i] - &lower[i])).collect();
    Ok(GreenMatrix {
        grid: grid.clone(),
        values: rows.into_iter().flatten().collect(),
        jumps,
        lambda: a.lambda(),
        bc: bc.clone(),
    })
}

/// Samples `Γ(t_i, τ_j)` of the resolvent kernel, `s × s` each.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    grid: Grid,
    values: Vec<CMat>,
    mu: C64,
    bc: LinearBC,
}

impl GreenKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn bc(&self) -> &LinearBC {
        &self.bc
    }

    pub fn s(&self) -> usize {
        self.bc.s()
    }

    pub fn get(&self, i: usize, j: usize) -> &CMat {
        &self.values[i * self.grid.len() + j]
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    /// `max_{i,j}` of the largest entry of `Γ(t_i, τ_j) - Γ(τ_j, t_i)*`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = self.get(i, j) - self.get(j, i).adjoint();
                worst = worst.max(crate::linalg::max_abs(&d));
            }
        }
        worst
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument(
                "kernels live on different grids".into(),
            ));
        }
        if self.s() != other.s() {
            return Err(Error::DimensionMismatch("kernels have different s".into()));
        }
        Ok(())
    }
}

/// `Γ = -g₁₂`.
pub fn green_kernel(gm: &GreenMatrix) -> GreenKernel {
    let s = gm.bc.s();
    GreenKernel {
        grid: gm.grid.clone(),
        values: gm.values.iter().map(|g| -block(g, s, 0, 1)).collect(),
        mu: gm.lambda,
        bc: gm.bc.clone(),
    }
}

/// `Γ` for coefficients `c` at `μ` in one call.
pub fn kernel_for(
    c: &CoefficientSet,
    bc: &LinearBC,
    mu: C64,
    grid: &Grid,
    max_step: f64,
) -> Result<GreenKernel> {
    Ok(green_kernel(&green_matrix(
        &c.shin_zettl(mu),
        bc,
        grid,
        max_step,
    )?))
}

/// `(L - μ)⁻¹ f` on the kernel grid by trapezoid quadrature.
pub fn apply_resolvent(kernel: &GreenKernel, f: &[CVec]) -> Result<Vec<CVec>> {
    let n = kernel.grid.len();
    if f.len() != n {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has {} samples, grid has {n}",
            f.len()
        )));
    }
    let s = kernel.s();
    if f.iter().any(|v| v.len() != s) {
        return Err(Error::DimensionMismatch(format!(
            "samples must have length {s}"
        )));
    }
    let w = kernel.grid.trapezoid_weights();
    Ok((0..n)
        .map(|i| {
            let mut acc = CVec::zeros(s);
            for j in 0..n {
                acc += kernel.get(i, j) * &f[j] * C64::new(w[j], 0.0);
            }
            acc
        })
        .collect())
}

fn tensor_trapezoid<F: Fn(usize, usize) -> f64>(grid: &Grid, f: F) -> f64 {
    let w = grid.trapezoid_weights();
    w.iter()
        .enumerate()
        .map(|(i, wi)| {
            wi * w
                .iter()
                .enumerate()
                .map(|(j, wj)| wj * f(i, j))
                .sum::<f64>()
        })
        .sum()
}

/// `(∬ ‖Γ(t, τ)‖_F² dt dτ)^{1/2}`.
pub fn hs_norm(kernel: &GreenKernel) -> f64 {
    tensor_trapezoid(&kernel.grid, |i, j| kernel.get(i, j).norm_squared()).sqrt()
}

pub fn hs_distance(k1: &GreenKernel, k2: &GreenKernel) -> Result<f64> {
    k1.check_same_grid(k2)?;
    Ok(tensor_trapezoid(&k1.grid, |i, j| {
        (k1.get(i, j) - k2.get(i, j)).norm_squared()
    })
    .sqrt())
}

/// `max_{i,j} ‖Γ₁(t_i, τ_j) - Γ₂(t_i, τ_j)‖_F`.
pub fn sup_kernel_distance(k1: &GreenKernel, k2: &GreenKernel) -> Result<f64> {
    k1.check_same_grid(k2)?;
    Ok(k1
        .values
        .iter()
        .zip(&k2.values)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

/// Whether `D(μ) = α + βZ_μ(b)` is invertible, with its condition number.
pub fn in_resolvent_set(a: &ShinZettlMatrix, bc: &LinearBC, max_step: f64) -> Result<(bool, f64)> {
    let mesh = Mesh::uniform(a.breakpoints(), max_step)?;
    let fs = propagate(a, &mesh)?;
    let cond = condition_number(&boundary_matrix(&fs, bc));
    Ok((cond < SINGULAR_COND, cond))
}

/// Left minus right side of the Lagrange identity
///
/// ```text
/// ∫ (D²y·z̄ - y·\overline{D^{2}z}) dt = (D¹y·z̄ - y·\overline{D^{1}z}) |_a^b
/// ```
///
/// where `y` is a trajectory for `c` with `D²y = -f_y` and `z` is a trajectory
/// for the adjoint coefficients with `D^{2}z = -f_z` (both at `λ = 0`).
pub fn greens_formula_residual<Fy, Fz>(
    c: &CoefficientSet,
    y: &Trajectory,
    f_y: Fy,
    z: &Trajectory,
    f_z: Fz,
) -> Result<C64>
where
    Fy: Fn(f64) -> CVec,
    Fz: Fn(f64) -> CVec,
{
    let s = c.dim();
    if y.s() != s || z.s() != s {
        return Err(Error::DimensionMismatch(
            "trajectories do not match the coefficient dimension".into(),
        ));
    }
    if y.nodes() != z.nodes() {
        return Err(Error::InvalidArgument("trajectory grids differ".into()));
    }
    let gl = GaussLegendre::new(4);
    let nodes = y.nodes();
    let mut lhs = C64::new(0.0, 0.0);
    for k in 0..nodes.len() - 1 {
        for (t, w) in gl.mapped(nodes[k], nodes[k + 1]) {
            let yv = y.eval_in_step(k, t).rows(0, s).into_owned();
            let zv = z.eval_in_step(k, t).rows(0, s).into_owned();
            let d2y = -f_y(t);
            let d2z = -f_z(t);
            lhs += (dot_conj(&d2y, &zv) - dot_conj(&yv, &d2z)) * w;
        }
    }
    let term = |wy: &CVec, wz: &CVec| {
        let (yy, dy) = (wy.rows(0, s).into_owned(), wy.rows(s, s).into_owned());
        let (zz, dz) = (wz.rows(0, s).into_owned(), wz.rows(s, s).into_owned());
        dot_conj(&dy, &zz) - dot_conj(&yy, &dz)
    };
    let rhs = term(y.end(), z.end()) - term(y.start(), z.start());
    Ok(lhs - rhs)
}
