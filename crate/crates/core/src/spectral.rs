//! Eigenvalues and eigenfunctions through the characteristic matrix
//! `D(λ) = α + β Z_λ(b)`: `λ` is an eigenvalue iff `D(λ)` is singular, and the
//! geometric multiplicity is `dim ker D(λ)`.
//!
//! Detection works with the smallest singular value of `D(λ)` rather than its
//! determinant, which over- and underflows for larger systems.

use std::f64::consts::PI;

use serde::Serialize;

use crate::boundary::LinearBC;
use crate::coeffs::CoefficientSet;
use crate::linalg::{dot_conj, null_space, singular_values};
use crate::propagator::{boundary_matrix, propagate, FundamentalSolution, Mesh, Trajectory};
use crate::{CMat, CVec, Error, Result, C64};

/// Relative singular-value threshold for accepting an eigenvalue.
pub const ACCEPT_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub lambda: C64,
    pub multiplicity: usize,
    /// Smallest singular value of `D(λ)`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub lambda: C64,
    pub trajectory: Trajectory,
    /// `‖α w(a) + β w(b)‖`.
    pub bc_residual: f64,
}

/// Real-axis scan result; warnings flag brackets that may hide more than one
/// eigenvalue.
#[derive(Debug, Clone, Default)]
pub struct ScanOutcome {
    pub eigenvalues: Vec<Eigenvalue>,
    pub warnings: Vec<String>,
}

/// Axis-aligned rectangle `[re_lo, re_hi] × [im_lo, im_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Self> {
        if !(re_lo < re_hi && im_lo < im_hi) {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle [{re_lo}, {re_hi}] x [{im_lo}, {im_hi}]"
            )));
        }
        Ok(Self {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        })
    }

    fn center(&self) -> C64 {
        C64::new(
            0.5 * (self.re_lo + self.re_hi),
            0.5 * (self.im_lo + self.im_hi),
        )
    }

    fn diameter(&self) -> f64 {
        (self.re_hi - self.re_lo).hypot(self.im_hi - self.im_lo)
    }

    fn contains(&self, z: C64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    fn grown(&self, d: f64) -> Self {
        Self {
            re_lo: self.re_lo - d,
            re_hi: self.re_hi + d,
            im_lo: self.im_lo - d,
            im_hi: self.im_hi + d,
        }
    }

    /// Split into quadrants at a slightly off-centre point.
    fn quadrants(&self, shift: f64) -> [Rect; 4] {
        let xm = self.re_lo + (0.5 + shift) * (self.re_hi - self.re_lo);
        let ym = self.im_lo + (0.5 - 0.7 * shift) * (self.im_hi - self.im_lo);
        [
            Rect {
                re_lo: self.re_lo,
                re_hi: xm,
                im_lo: self.im_lo,
                im_hi: ym,
            },
            Rect {
                re_lo: xm,
                re_hi: self.re_hi,
                im_lo: self.im_lo,
                im_hi: ym,
            },
            Rect {
                re_lo: self.re_lo,
                re_hi: xm,
                im_lo: ym,
                im_hi: self.im_hi,
            },
            Rect {
                re_lo: xm,
                re_hi: self.re_hi,
                im_lo: ym,
                im_hi: self.im_hi,
            },
        ]
    }
}

/// A coefficient set with a boundary condition and a propagation mesh.
#[derive(Debug, Clone)]
pub struct SpectralProblem {
    coeffs: CoefficientSet,
    bc: LinearBC,
    mesh: Mesh,
}

impl SpectralProblem {
    pub fn new(coeffs: CoefficientSet, bc: LinearBC, max_step: f64) -> Result<Self> {
        if coeffs.dim() != bc.s() {
            return Err(Error::DimensionMismatch(format!(
                "coefficients have s = {}, boundary condition has s = {}",
                coeffs.dim(),
                bc.s()
            )));
        }
        let mesh = Mesh::uniform(coeffs.breakpoints(), max_step)?;
        Ok(Self { coeffs, bc, mesh })
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn bc(&self) -> &LinearBC {
        &self.bc
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// `D(λ) = α + β Z_λ(b)`.
    pub fn char_matrix(&self, lambda: C64) -> CMat {
        let fs = propagate(&self.coeffs.shin_zettl(lambda), &self.mesh)
            .expect("mesh built from the coefficient breakpoints");
        boundary_matrix(&fs, &self.bc)
    }

    pub fn char_det(&self, lambda: C64) -> C64 {
        self.char_matrix(lambda).determinant()
    }

    /// `(σ_min, σ_max)` of `D(λ)`.
    fn sigma_extremes(&self, lambda: C64) -> (f64, f64) {
        let sv = singular_values(&self.char_matrix(lambda));
        (sv[sv.len() - 1], sv[0])
    }

    fn sigma_min_real(&self, x: f64) -> f64 {
        self.sigma_extremes(C64::new(x, 0.0)).0
    }

    /// Build an [`Eigenvalue`] at `lambda` if `D(λ)` is numerically singular.
    fn accept(&self, lambda: C64) -> Option<Eigenvalue> {
        let sv = singular_values(&self.char_matrix(lambda));
        let (min, max) = (sv[sv.len() - 1], sv[0]);
        if min > ACCEPT_RTOL * max {
            return None;
        }
        let multiplicity = sv.iter().filter(|&&x| x <= ACCEPT_RTOL * max).count();
        Some(Eigenvalue {
            lambda,
            multiplicity,
            residual: min,
        })
    }

    /// Scan `σ_min(D(λ))` on `scan_points` equispaced real points, bracket the
    /// interior local minima and refine each by golden-section search to width
    /// `1e-10·max(1, |λ|)`.
    pub fn eigenvalues_real_scan(
        &self,
        lo: f64,
        hi: f64,
        scan_points: usize,
    ) -> Result<ScanOutcome> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]")));
        }
        if scan_points < 3 {
            return Err(Error::InvalidArgument(
                "need at least three scan points".into(),
            ));
        }
        let xs: Vec<f64> = (0..scan_points)
            .map(|i| lo + (hi - lo) * i as f64 / (scan_points - 1) as f64)
            .collect();
        let eval = |x: &f64| self.sigma_min_real(*x);
        #[cfg(feature = "parallel")]
        let sig: Vec<f64> = {
            use rayon::prelude::*;
            xs.par_iter().map(eval).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let sig: Vec<f64> = xs.iter().map(eval).collect();

        let mut out = ScanOutcome::default();
        for i in 1..scan_points - 1 {
            if !(sig[i] <= sig[i - 1] && sig[i] < sig[i + 1]) {
                continue;
            }
            let (a, b) = (xs[i - 1], xs[i + 1]);
            if let Some(note) = self.bracket_warning(a, b) {
                out.warnings.push(note);
            }
            let x = golden_section(|x| self.sigma_min_real(x), a, b);
            if let Some(ev) = self.accept(C64::new(x, 0.0)) {
                out.eigenvalues.push(ev);
            }
        }
        out.eigenvalues
            .sort_by(|p, q| p.lambda.re.partial_cmp(&q.lambda.re).unwrap());
        Ok(out)
    }

    /// Resample a bracket; more than one interior minimum means the scan was too coarse.
    fn bracket_warning(&self, a: f64, b: f64) -> Option<String> {
        const N: usize = 17;
        let s: Vec<f64> = (0..N)
            .map(|k| self.sigma_min_real(a + (b - a) * k as f64 / (N - 1) as f64))
            .collect();
        let minima = (1..N - 1)
            .filter(|&k| s[k] <= s[k - 1] && s[k] < s[k + 1])
            .count();
        (minima > 1).then(|| {
            format!(
                "bracket [{a}, {b}] shows {minima} local minima of sigma_min; rescan with more points"
            )
        })
    }

    /// Winding number of `det D(λ)` around the rectangle boundary.
    pub fn winding_number(&self, rect: &Rect) -> Result<i64> {
        let coarse = self.winding_with(rect, 64)?;
        let fine = self.winding_with(rect, 128)?;
        if coarse != fine {
            return Err(Error::Contour(format!(
                "winding number unstable under refinement ({coarse} vs {fine}) on {rect:?}"
            )));
        }
        Ok(fine)
    }

    fn winding_with(&self, rect: &Rect, per_edge: usize) -> Result<i64> {
        let corners = [
            C64::new(rect.re_lo, rect.im_lo),
            C64::new(rect.re_hi, rect.im_lo),
            C64::new(rect.re_hi, rect.im_hi),
            C64::new(rect.re_lo, rect.im_hi),
        ];
        let mut total = 0.0;
        for e in 0..4 {
            let (z0, z1) = (corners[e], corners[(e + 1) % 4]);
            let mut prev_z = z0;
            let mut prev_v = self.contour_value(z0)?;
            for k in 1..=per_edge {
                let z = z0 + (z1 - z0) * (k as f64 / per_edge as f64);
                let v = self.contour_value(z)?;
                total += self.arg_increment(prev_z, prev_v, z, v, 0)?;
                prev_z = z;
                prev_v = v;
            }
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }

    fn contour_value(&self, z: C64) -> Result<C64> {
        let d = self.char_matrix(z);
        let sv = singular_values(&d);
        if sv[sv.len() - 1] <= 1e-10 * sv[0] {
            return Err(Error::Contour(format!(
                "characteristic matrix singular on contour at {z}"
            )));
        }
        Ok(d.determinant())
    }

    /// Argument change from `v0 = det D(z0)` to `v1 = det D(z1)`, bisecting
    /// until each sub-increment is below π/4.
    fn arg_increment(&self, z0: C64, v0: C64, z1: C64, v1: C64, depth: usize) -> Result<f64> {
        let d = (v1 / v0).arg();
        if d.abs() < PI / 4.0 {
            return Ok(d);
        }
        if depth > 30 {
            return Err(Error::Contour(format!(
                "argument increment not resolved between {z0} and {z1}"
            )));
        }
        let zm = 0.5 * (z0 + z1);
        let vm = self.contour_value(zm)?;
        Ok(self.arg_increment(z0, v0, zm, vm, depth + 1)?
            + self.arg_increment(zm, vm, z1, v1, depth + 1)?)
    }

    /// Eigenvalues inside `rect` by the argument principle with recursive
    /// quadrisection and Newton polishing.
    pub fn eigenvalues_complex(&self, rect: Rect, max_depth: usize) -> Result<Vec<Eigenvalue>> {
        let count = match self.winding_number(&rect) {
            Ok(n) => (n, rect),
            Err(Error::Contour(_)) => {
                let moved = rect.grown(1e-6);
                (self.winding_number(&moved)?, moved)
            }
            Err(e) => return Err(e),
        };
        let (n, rect) = count;
        let mut found = Vec::new();
        self.isolate(rect, n, max_depth, &mut found)?;
        found.sort_by(|p, q| {
            p.lambda
                .re
                .partial_cmp(&q.lambda.re)
                .unwrap()
                .then(p.lambda.im.partial_cmp(&q.lambda.im).unwrap())
        });
        Ok(found)
    }

    fn isolate(
        &self,
        rect: Rect,
        count: i64,
        depth_left: usize,
        out: &mut Vec<Eigenvalue>,
    ) -> Result<()> {
        if count <= 0 {
            if count < 0 {
                return Err(Error::Contour(format!(
                    "negative winding number {count} on {rect:?}"
                )));
            }
            return Ok(());
        }
        let tiny = rect.diameter() <= 1e-9 * rect.center().norm().max(1.0);
        if count == 1 || depth_left == 0 || tiny {
            if let Some(root) = self.newton(rect.center(), count as usize, &rect) {
                if let Some(ev) = self.accept(root) {
                    out.push(ev);
                    return Ok(());
                }
            }
            if depth_left == 0 || tiny {
                return Err(Error::Contour(format!(
                    "could not polish {count} root(s) in {rect:?}"
                )));
            }
        }
        for shift in [0.0123, -0.0311, 0.0457] {
            let quads = rect.quadrants(shift);
            let counts: Result<Vec<i64>> = quads.iter().map(|q| self.winding_number(q)).collect();
            match counts {
                Ok(cs) => {
                    if cs.iter().sum::<i64>() != count {
                        continue;
                    }
                    for (q, c) in quads.iter().zip(cs) {
                        self.isolate(*q, c, depth_left - 1, out)?;
                    }
                    return Ok(());
                }
                Err(Error::Contour(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Contour(format!(
            "subdivision of {rect:?} failed to conserve {count} root(s)"
        )))
    }

    /// Newton iteration on `det D(λ)` with a central-difference derivative;
    /// `m` is the expected multiplicity of the root.
    fn newton(&self, start: C64, m: usize, rect: &Rect) -> Option<C64> {
        let mut z = start;
        let margin = rect.grown(0.05 * rect.diameter());
        for _ in 0..60 {
            let f = self.char_det(z);
            if f == C64::new(0.0, 0.0) {
                return Some(z);
            }
            let h = 1e-6 * z.norm().max(1.0);
            let df = (self.char_det(z + h) - self.char_det(z - h)) / (2.0 * h);
            if df == C64::new(0.0, 0.0) || !df.is_finite() {
                return None;
            }
            let step = f / df * m as f64;
            z -= step;
            if !margin.contains(z) {
                return None;
            }
            if step.norm() <= 1e-13 * z.norm().max(1.0) {
                return Some(z);
            }
        }
        self.accept(z).map(|_| z)
    }

    /// Normalised eigenfunctions at an accepted eigenvalue, one per null vector.
    pub fn eigenfunctions(&self, ev: &Eigenvalue) -> Result<Vec<Eigenfunction>> {
        let d = self.char_matrix(ev.lambda);
        let sv = singular_values(&d);
        let thresh = ACCEPT_RTOL * sv[0];
        if sv[sv.len() - 1] > thresh {
            return Err(Error::InvalidArgument(format!(
                "λ = {} is not an eigenvalue (σ_min = {:e})",
                ev.lambda,
                sv[sv.len() - 1]
            )));
        }
        let fs = propagate(&self.coeffs.shin_zettl(ev.lambda), &self.mesh)?;
        let gram = top_block_gram(&fs)?;
        let inner = |u: &CVec, v: &CVec| (v.adjoint() * &gram * u)[(0, 0)];
        let mut vectors: Vec<CVec> = Vec::new();
        for mut c in null_space(&d, thresh) {
            for prev in &vectors {
                let proj = inner(&c, prev);
                c -= prev * proj;
            }
            let norm = inner(&c, &c).re.sqrt();
            if norm == 0.0 {
                continue;
            }
            c /= C64::new(norm, 0.0);
            vectors.push(c);
        }
        let basis: Vec<Trajectory> = vectors
            .iter()
            .map(|c| {
                let mut traj = Trajectory::homogeneous(&fs, c);
                fix_phase(&mut traj);
                traj
            })
            .collect();
        Ok(basis
            .into_iter()
            .map(|trajectory| {
                let bc_residual = self.bc.residual(trajectory.start(), trajectory.end());
                Eigenfunction {
                    lambda: ev.lambda,
                    trajectory,
                    bc_residual,
                }
            })
            .collect())
    }
}

/// `∫ y₁ · ȳ₂ dt` for two trajectories on the same nodes.
pub fn l2_inner(t1: &Trajectory, t2: &Trajectory) -> C64 {
    let s = t1.s();
    let gl = crate::quadrature::GaussLegendre::new(4);
    let nodes = t1.nodes();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..nodes.len() - 1 {
        for (t, w) in gl.mapped(nodes[k], nodes[k + 1]) {
            let a = t1.eval_in_step(k, t).rows(0, s).into_owned();
            let b = t2.eval_in_step(k, t).rows(0, s).into_owned();
            acc += dot_conj(&a, &b) * w;
        }
    }
    acc
}

/// `∫ Z(t)* P Z(t) dt` with `P` the projection onto the `y` block, so that
/// `‖y‖² = c* M c` for `w = Z c`. Uses the propagator between nodes.
fn top_block_gram(fs: &FundamentalSolution) -> Result<CMat> {
    let n = fs.dim();
    let s = n / 2;
    let gl = crate::quadrature::GaussLegendre::new(6);
    let nodes = fs.mesh().nodes();
    let mut m = CMat::zeros(n, n);
    for k in 0..nodes.len() - 1 {
        for (t, w) in gl.mapped(nodes[k], nodes[k + 1]) {
            let z = fs.eval(t)?;
            let top = z.rows(0, s);
            m += top.adjoint() * top * C64::new(w, 0.0);
        }
    }
    Ok(m)
}

/// Rotate so that the first significant component of `y` is real positive.
fn fix_phase(traj: &mut Trajectory) {
    let s = traj.s();
    let peak = traj
        .values()
        .iter()
        .flat_map(|w| w.rows(0, s).iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    let thresh = 1e-8 * peak;
    let lead = traj
        .values()
        .iter()
        .find_map(|w| w.rows(0, s).iter().copied().find(|z| z.norm() > thresh));
    if let Some(z) = lead {
        traj.scale(z.conj() / z.norm());
    }
}

/// `det(α + β Z_λ(b))` for one-off evaluations.
pub fn char_det(c: &CoefficientSet, bc: &LinearBC, lambda: C64, max_step: f64) -> Result<C64> {
    Ok(SpectralProblem::new(c.clone(), bc.clone(), max_step)?.char_det(lambda))
}

/// Golden-section minimisation of a unimodal function on `[a, b]` down to
/// width `1e-10·max(1, |x|)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= 1e-10 * mid.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}
