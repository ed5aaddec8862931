//! Fundamental matrices of `w' = A(t; λ) w` and inhomogeneous two-point solves.
//!
//! A step whose piece of `A` is constant uses the exact exponential
//! `exp(h A)`. Otherwise the fourth-order commutator-free Magnus scheme with
//! two Gauss nodes is used:
//!
//! ```text
//! Φ = exp(h (β₂ A₁ + β₁ A₂)) · exp(h (β₁ A₁ + β₂ A₂)),   β₁,₂ = 1/4 ± √3/6,
//! ```
//!
//! with `A₁, A₂` evaluated at `t + (1/2 ∓ √3/6) h`. Steps never straddle a
//! breakpoint of `A`.

use crate::boundary::LinearBC;
use crate::coeffs::ShinZettlMatrix;
use crate::linalg::{condition_number, expm, identity, spectral_norm};
use crate::poly::{merge_breakpoints, PiecewiseMatrixPoly};
use crate::quadrature::GaussLegendre;
use crate::{CMat, CVec, Error, Result, C64};

/// Condition number above which `D(λ) = α + βZ(b)` counts as singular.
pub const SINGULAR_COND: f64 = 1e12;

const NODE_RTOL: f64 = 1e-13;

/// Gauss points per step for the particular-solution integral.
const PARTICULAR_GAUSS_POINTS: usize = 6;

/// Strictly increasing nodes over `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    max_step: f64,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh("need at least two nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node".into()));
        }
        let mut max_step: f64 = 0.0;
        for w in nodes.windows(2) {
            let h = w[1] - w[0];
            if h <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "nonpositive step {h:e} at t = {}",
                    w[0]
                )));
            }
            max_step = max_step.max(h);
        }
        Ok(Self { nodes, max_step })
    }

    /// Subdivide every gap of `breakpoints` into equal steps no longer than `max_step`.
    pub fn uniform(breakpoints: &[f64], max_step: f64) -> Result<Self> {
        Self::with_points(breakpoints, &[], max_step)
    }

    /// Like [`Mesh::uniform`], but `points` are also forced to be nodes.
    pub fn with_points(breakpoints: &[f64], points: &[f64], max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) || !max_step.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "max_step must be positive, got {max_step}"
            )));
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidMesh("need at least two breakpoints".into()));
        }
        let (a, b) = (breakpoints[0], breakpoints[breakpoints.len() - 1]);
        let inner: Vec<f64> = points.iter().copied().filter(|&x| x > a && x < b).collect();
        let skeleton = merge_breakpoints(breakpoints, &inner);
        let mut nodes = vec![skeleton[0]];
        for w in skeleton.windows(2) {
            let len = w[1] - w[0];
            let n = (len / max_step).ceil().max(1.0) as usize;
            for j in 1..n {
                nodes.push(w[0] + len * j as f64 / n as f64);
            }
            nodes.push(w[1]);
        }
        let mut mesh = Self::new(nodes)?;
        mesh.max_step = mesh.max_step.max(0.0);
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Every step split in two.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().unwrap());
        Self {
            nodes,
            max_step: 0.5 * self.max_step,
        }
    }

    /// Index `k` with `nodes[k] <= t <= nodes[k+1]`, preferring an exact node match.
    fn locate(&self, t: f64) -> Option<usize> {
        let (a, b) = self.interval();
        if !(t >= a && t <= b) {
            return None;
        }
        let i = self.nodes.partition_point(|&x| x <= t);
        Some(i.saturating_sub(1).min(self.nodes.len() - 2))
    }

    fn has_node(&self, t: f64) -> bool {
        let tol = NODE_RTOL * (self.interval().1 - self.interval().0).abs().max(1.0);
        let i = self.nodes.partition_point(|&x| x < t - tol);
        i < self.nodes.len() && (self.nodes[i] - t).abs() <= tol
    }
}

/// One step's transfer matrix over `[t0, t0 + h]` inside piece `piece`.
fn step_transfer(m: &PiecewiseMatrixPoly, piece: usize, t0: f64, h: f64) -> CMat {
    if h == 0.0 {
        return identity(m.dim());
    }
    let hc = C64::new(h, 0.0);
    if m.piece_is_constant(piece) {
        return expm(&(&m.pieces()[piece][0] * hc));
    }
    let r = 3f64.sqrt() / 6.0;
    let (c1, c2) = (0.5 - r, 0.5 + r);
    let (b1, b2) = (0.25 + r, 0.25 - r);
    let a1 = m.eval_in_piece(piece, t0 + c1 * h);
    let a2 = m.eval_in_piece(piece, t0 + c2 * h);
    let first = expm(&((&a1 * C64::new(b1, 0.0) + &a2 * C64::new(b2, 0.0)) * hc));
    let second = expm(&((&a1 * C64::new(b2, 0.0) + &a2 * C64::new(b1, 0.0)) * hc));
    second * first
}

/// `Z(t)` sampled on a mesh, with `Z(t₀) = I` and `Z(t_{k+1}) = Φ_k Z(t_k)`.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    mesh: Mesh,
    lambda: C64,
    system: PiecewiseMatrixPoly,
    pieces: Vec<usize>,
    samples: Vec<CMat>,
    transfers: Vec<CMat>,
}

/// Propagate over a mesh that spans the whole interval of `a`.
pub fn propagate(a: &ShinZettlMatrix, mesh: &Mesh) -> Result<FundamentalSolution> {
    let (a0, b0) = a.interval();
    let (m0, m1) = mesh.interval();
    let tol = NODE_RTOL * (b0 - a0).abs().max(1.0);
    if (a0 - m0).abs() > tol || (b0 - m1).abs() > tol {
        return Err(Error::IntervalMismatch(a0, b0, m0, m1));
    }
    propagate_segment(a, mesh)
}

/// Propagate over a mesh covering a sub-interval `[c, d]` of `a`'s interval,
/// starting from `Z(c) = I`.
pub fn propagate_segment(a: &ShinZettlMatrix, mesh: &Mesh) -> Result<FundamentalSolution> {
    let system = a.matrix();
    let (a0, b0) = system.interval();
    let (m0, m1) = mesh.interval();
    let tol = NODE_RTOL * (b0 - a0).abs().max(1.0);
    if m0 < a0 - tol || m1 > b0 + tol {
        return Err(Error::IntervalMismatch(a0, b0, m0, m1));
    }
    for &bp in system.breakpoints() {
        if bp > m0 && bp < m1 && !mesh.has_node(bp) {
            return Err(Error::MissingBreakpoint(bp));
        }
    }
    let nodes = mesh.nodes();
    let pieces: Vec<usize> = nodes
        .windows(2)
        .map(|w| {
            system
                .piece_index((0.5 * (w[0] + w[1])).clamp(a0, b0))
                .expect("mesh inside interval")
        })
        .collect();
    let step = |k: usize| step_transfer(system, pieces[k], nodes[k], nodes[k + 1] - nodes[k]);
    #[cfg(feature = "parallel")]
    let transfers: Vec<CMat> = {
        use rayon::prelude::*;
        (0..pieces.len()).into_par_iter().map(step).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let transfers: Vec<CMat> = (0..pieces.len()).map(step).collect();

    let mut samples = Vec::with_capacity(nodes.len());
    samples.push(identity(system.dim()));
    for phi in &transfers {
        let next = phi * samples.last().unwrap();
        samples.push(next);
    }
    Ok(FundamentalSolution {
        mesh: mesh.clone(),
        lambda: a.lambda(),
        system: system.clone(),
        pieces,
        samples,
        transfers,
    })
}

impl FundamentalSolution {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn transfers(&self) -> &[CMat] {
        &self.transfers
    }

    /// `Z` at the last node.
    pub fn end(&self) -> &CMat {
        self.samples.last().unwrap()
    }

    /// `Z(t)` anywhere on the mesh interval; off-node values use one partial
    /// step from the node to the left.
    pub fn eval(&self, t: f64) -> Result<CMat> {
        let k = self.mesh.locate(t).ok_or_else(|| {
            let (a, b) = self.mesh.interval();
            Error::OutOfDomain { t, a, b }
        })?;
        let nodes = self.mesh.nodes();
        if t == nodes[k] {
            return Ok(self.samples[k].clone());
        }
        if t == nodes[k + 1] {
            return Ok(self.samples[k + 1].clone());
        }
        Ok(step_transfer(&self.system, self.pieces[k], nodes[k], t - nodes[k]) * &self.samples[k])
    }

    /// `max_k |det Z(t_k) - 1|`.
    pub fn det_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|z| (z.determinant() - C64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// `max_k ‖Z(t_k)* J Z(t_k) - J‖` with `J = [[0, -I], [I, 0]]`.
    pub fn symplectic_defect(&self) -> f64 {
        let j = symplectic_form(self.dim() / 2);
        self.samples
            .iter()
            .map(|z| spectral_norm(&(z.adjoint() * &j * z - &j)))
            .fold(0.0, f64::max)
    }
}

/// `J = [[0, -I], [I, 0]]` of size `2s`.
pub fn symplectic_form(s: usize) -> CMat {
    let mut j = CMat::zeros(2 * s, 2 * s);
    for i in 0..s {
        j[(i, s + i)] = C64::new(-1.0, 0.0);
        j[(s + i, i)] = C64::new(1.0, 0.0);
    }
    j
}

/// `max ‖Z₁(t) - Z₂(t)‖` over the union of both meshes' nodes.
pub fn sup_distance(z1: &FundamentalSolution, z2: &FundamentalSolution) -> Result<f64> {
    let (a1, b1) = z1.mesh.interval();
    let (a2, b2) = z2.mesh.interval();
    let tol = NODE_RTOL * (b1 - a1).abs().max(1.0);
    if (a1 - a2).abs() > tol || (b1 - b2).abs() > tol {
        return Err(Error::IntervalMismatch(a1, b1, a2, b2));
    }
    if z1.dim() != z2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            z1.dim(),
            z2.dim()
        )));
    }
    let mut nodes = merge_breakpoints(z1.mesh.nodes(), z2.mesh.nodes());
    // Snap the end points so both evaluations stay in range.
    nodes[0] = a1.max(a2);
    let last = nodes.len() - 1;
    nodes[last] = b1.min(b2);
    let mut best: f64 = 0.0;
    for t in nodes {
        best = best.max(spectral_norm(&(z1.eval(t)? - z2.eval(t)?)));
    }
    Ok(best)
}

/// `D(λ) = α + β Z(b)`.
pub fn boundary_matrix(fs: &FundamentalSolution, bc: &LinearBC) -> CMat {
    bc.alpha() + bc.beta() * fs.end()
}

/// Samples of `w = (y, D¹y)` on a mesh plus one-sided derivatives per step,
/// so values between nodes come from cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    s: usize,
    nodes: Vec<f64>,
    values: Vec<CVec>,
    /// Per step `k`: `(w'(t_k⁺), w'(t_{k+1}⁻))`.
    slopes: Vec<(CVec, CVec)>,
}

impl Trajectory {
    pub fn new(
        s: usize,
        nodes: Vec<f64>,
        values: Vec<CVec>,
        slopes: Vec<(CVec, CVec)>,
    ) -> Result<Self> {
        if nodes.len() != values.len() || slopes.len() + 1 != nodes.len() {
            return Err(Error::DimensionMismatch(
                "trajectory nodes, values and slopes disagree".into(),
            ));
        }
        if values.iter().any(|v| v.len() != 2 * s) {
            return Err(Error::DimensionMismatch(format!(
                "trajectory vectors must have length {}",
                2 * s
            )));
        }
        Ok(Self {
            s,
            nodes,
            values,
            slopes,
        })
    }

    /// Build `w(t_k) = Z(t_k) c` for a homogeneous solution.
    pub fn homogeneous(fs: &FundamentalSolution, c: &CVec) -> Self {
        let values: Vec<CVec> = fs.samples.iter().map(|z| z * c).collect();
        let nodes = fs.mesh.nodes().to_vec();
        let slopes = (0..nodes.len() - 1)
            .map(|k| {
                let p = fs.pieces[k];
                let left = fs.system.eval_in_piece(p, nodes[k]) * &values[k];
                let right = fs.system.eval_in_piece(p, nodes[k + 1]) * &values[k + 1];
                (left, right)
            })
            .collect();
        Self {
            s: fs.dim() / 2,
            nodes,
            values,
            slopes,
        }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[CVec] {
        &self.values
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn start(&self) -> &CVec {
        &self.values[0]
    }

    pub fn end(&self) -> &CVec {
        self.values.last().unwrap()
    }

    /// Interpolated `w(t)` inside step `k`.
    pub fn eval_in_step(&self, k: usize, t: f64) -> CVec {
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let h = t1 - t0;
        let x = (t - t0) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        let (d0, d1) = &self.slopes[k];
        &self.values[k] * C64::new(h00, 0.0)
            + d0 * C64::new(h10 * h, 0.0)
            + &self.values[k + 1] * C64::new(h01, 0.0)
            + d1 * C64::new(h11 * h, 0.0)
    }

    pub fn eval(&self, t: f64) -> Result<CVec> {
        let (a, b) = self.interval();
        if !(t >= a && t <= b) {
            return Err(Error::OutOfDomain { t, a, b });
        }
        let i = self.nodes.partition_point(|&x| x <= t);
        let k = i.saturating_sub(1).min(self.nodes.len() - 2);
        Ok(self.eval_in_step(k, t))
    }

    /// `∫ g(t, w(t)) dt` with a Gauss–Legendre rule per step on the interpolant.
    pub fn integrate<G: FnMut(f64, &CVec) -> C64>(&self, points: usize, mut g: G) -> C64 {
        let gl = GaussLegendre::new(points);
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.nodes.len() - 1 {
            for (t, w) in gl.mapped(self.nodes[k], self.nodes[k + 1]) {
                let v = self.eval_in_step(k, t);
                acc += g(t, &v) * w;
            }
        }
        acc
    }

    /// `‖y‖_{L²}` of the top block.
    pub fn l2_norm_y(&self) -> f64 {
        let s = self.s;
        self.integrate(4, |_, w| C64::new(w.rows(0, s).norm_squared(), 0.0))
            .re
            .sqrt()
    }

    pub fn scale(&mut self, factor: C64) {
        for v in &mut self.values {
            *v *= factor;
        }
        for (l, r) in &mut self.slopes {
            *l *= factor;
            *r *= factor;
        }
    }
}

/// Top (`k = 0`, `y`) or bottom (`k = 1`, `D¹y`) block of a trajectory.
pub fn quasi_derivative(traj: &Trajectory, k: usize) -> Result<Vec<CVec>> {
    if k > 1 {
        return Err(Error::InvalidArgument(format!(
            "quasi-derivative order must be 0 or 1, got {k}"
        )));
    }
    let s = traj.s;
    Ok(traj
        .values
        .iter()
        .map(|w| w.rows(k * s, s).into_owned())
        .collect())
}

/// Solve `w' = A w + (0, -f)`, `α w(a) + β w(b) = 0` by variation of
/// parameters; equivalently `-D²y - λy = f` with the boundary condition.
pub fn solve_inhomogeneous<F>(
    a: &ShinZettlMatrix,
    f: F,
    bc: &LinearBC,
    mesh: &Mesh,
) -> Result<Trajectory>
where
    F: Fn(f64) -> CVec,
{
    let s = a.s();
    if bc.s() != s {
        return Err(Error::DimensionMismatch(format!(
            "boundary condition has s = {}, system has s = {s}",
            bc.s()
        )));
    }
    let fs = propagate(a, mesh)?;
    let d = boundary_matrix(&fs, bc);
    let cond = condition_number(&d);
    if !(cond < SINGULAR_COND) {
        return Err(Error::NotInResolventSet {
            lambda: a.lambda(),
            cond,
        });
    }
    let forcing = |t: f64| -> CVec {
        let fv = f(t);
        assert_eq!(fv.len(), s, "right-hand side must have length s");
        let mut phi = CVec::zeros(2 * s);
        phi.rows_mut(s, s).copy_from(&(-fv));
        phi
    };
    let system = a.matrix();
    let nodes = mesh.nodes();
    let gl = GaussLegendre::new(PARTICULAR_GAUSS_POINTS);

    // p_{k+1} = Φ_k p_k + ∫_{t_k}^{t_{k+1}} Φ(t_{k+1} ← τ) φ(τ) dτ
    let mut particular = Vec::with_capacity(nodes.len());
    particular.push(CVec::zeros(2 * s));
    for k in 0..nodes.len() - 1 {
        let (t0, t1) = (nodes[k], nodes[k + 1]);
        let piece = fs.pieces[k];
        let mut local = CVec::zeros(2 * s);
        for (tau, w) in gl.mapped(t0, t1) {
            let back = step_transfer(system, piece, tau, t1 - tau);
            local += back * forcing(tau) * C64::new(w, 0.0);
        }
        let next = &fs.transfers[k] * &particular[k] + local;
        particular.push(next);
    }
    let lu = d.clone().lu();
    let rhs = -(bc.beta() * particular.last().unwrap());
    let c = lu.solve(&rhs).ok_or(Error::NotInResolventSet {
        lambda: a.lambda(),
        cond,
    })?;
    let values: Vec<CVec> = fs
        .samples
        .iter()
        .zip(&particular)
        .map(|(z, p)| z * &c + p)
        .collect();
    let slopes = (0..nodes.len() - 1)
        .map(|k| {
            let p = fs.pieces[k];
            let left = system.eval_in_piece(p, nodes[k]) * &values[k] + forcing(nodes[k]);
            let right =
                system.eval_in_piece(p, nodes[k + 1]) * &values[k + 1] + forcing(nodes[k + 1]);
            (left, right)
        })
        .collect();
    Ok(Trajectory {
        s,
        nodes: nodes.to_vec(),
        values,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{CanonicalBC, Variant};
    use crate::coeffs::CoefficientSet;
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn dirichlet(s: usize) -> LinearBC {
        CanonicalBC::new(CMat::identity(2 * s, 2 * s), Variant::LK)
            .unwrap()
            .to_linear()
    }

    #[test]
    fn free_particle_is_shear() {
        let set = CoefficientSet::free(0.0, 1.0, 1).unwrap();
        let a = set.shin_zettl(c(0.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.1).unwrap();
        let fs = propagate(&a, &mesh).unwrap();
        for (t, z) in mesh.nodes().iter().zip(fs.samples()) {
            let want = CMat::from_row_slice(2, 2, &[c(1.0), c(*t), c(0.0), c(1.0)]);
            assert!((z - want).norm() < 1e-14);
        }
        let z = fs.eval(0.333).unwrap();
        assert!((z[(0, 1)] - c(0.333)).norm() < 1e-14);
    }

    #[test]
    fn unit_frequency_rotation() {
        let set = CoefficientSet::free(0.0, PI, 1).unwrap();
        let a = set.shin_zettl(c(1.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.05).unwrap();
        let fs = propagate(&a, &mesh).unwrap();
        let want = CMat::identity(2, 2) * c(-1.0);
        assert!((fs.end() - want).norm() < 1e-12);
        assert!(fs.det_defect() < 1e-12);
        assert!(fs.symplectic_defect() < 1e-12);
    }

    #[test]
    fn mesh_must_contain_breakpoints() {
        let q = PiecewiseMatrixPoly::step(0.0, 1.0, 0.37, CMat::zeros(1, 1), CMat::identity(1, 1))
            .unwrap();
        let set = CoefficientSet::with_unit_p(q, true).unwrap();
        let a = set.shin_zettl(c(0.0));
        let mesh = Mesh::uniform(&[0.0, 1.0], 0.1).unwrap();
        assert!(matches!(
            propagate(&a, &mesh),
            Err(Error::MissingBreakpoint(_))
        ));
        assert!(Mesh::uniform(&[0.0, 1.0], 0.0).is_err());
        assert!(Mesh::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn mesh_uniform_respects_max_step_and_points() {
        let mesh = Mesh::with_points(&[0.0, 0.3, 1.0], &[0.55], 0.1).unwrap();
        assert!(mesh.max_step() <= 0.1 + 1e-15);
        assert!(mesh.has_node(0.3));
        assert!(mesh.has_node(0.55));
        assert_eq!(mesh.refined().len(), 2 * mesh.len() - 1);
    }

    #[test]
    fn dirichlet_constant_load() {
        let set = CoefficientSet::free(0.0, 1.0, 1).unwrap();
        let a = set.shin_zettl(c(0.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.01).unwrap();
        let traj = solve_inhomogeneous(&a, |_| CVec::from_element(1, c(1.0)), &dirichlet(1), &mesh)
            .unwrap();
        let y = quasi_derivative(&traj, 0).unwrap();
        let err = mesh
            .nodes()
            .iter()
            .zip(&y)
            .map(|(t, v)| (v[0] - c(t * (1.0 - t) / 2.0)).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "err = {err:e}");
    }

    #[test]
    fn dirichlet_sine_load() {
        let set = CoefficientSet::free(0.0, 1.0, 1).unwrap();
        let a = set.shin_zettl(c(0.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.01).unwrap();
        let f = |t: f64| CVec::from_element(1, c(PI * PI * (PI * t).sin()));
        let traj = solve_inhomogeneous(&a, f, &dirichlet(1), &mesh).unwrap();
        let err = mesh
            .nodes()
            .iter()
            .zip(traj.values())
            .map(|(t, w)| (w[0] - c((PI * t).sin())).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "err = {err:e}");
        // Interpolated values between nodes are accurate too.
        let mid = traj.eval(0.505).unwrap();
        assert!((mid[0] - c((PI * 0.505).sin())).norm() < 1e-8);
    }

    #[test]
    fn zero_load_gives_zero() {
        let set = CoefficientSet::free(0.0, 1.0, 2).unwrap();
        let a = set.shin_zettl(c(-1.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.1).unwrap();
        let traj = solve_inhomogeneous(&a, |_| CVec::zeros(2), &dirichlet(2), &mesh).unwrap();
        assert!(traj.values().iter().all(|w| w.norm() == 0.0));
    }

    #[test]
    fn singular_boundary_matrix_is_rejected() {
        let set = CoefficientSet::free(0.0, PI, 1).unwrap();
        let a = set.shin_zettl(c(1.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.1).unwrap();
        let err = solve_inhomogeneous(&a, |_| CVec::from_element(1, c(1.0)), &dirichlet(1), &mesh)
            .unwrap_err();
        assert!(matches!(err, Error::NotInResolventSet { .. }));
        assert!(err.to_string().contains("not in the resolvent set"));
    }

    #[test]
    fn quasi_derivative_of_linear_function() {
        // y = t solves -y'' = 0 with y(0) = 0, y(1) = 1; use inhomogeneous
        // boundary data through a homogeneous trajectory instead.
        let set = CoefficientSet::free(0.0, 1.0, 1).unwrap();
        let a = set.shin_zettl(c(0.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.25).unwrap();
        let fs = propagate(&a, &mesh).unwrap();
        let traj = Trajectory::homogeneous(&fs, &CVec::from_vec(vec![c(0.0), c(1.0)]));
        let y = quasi_derivative(&traj, 0).unwrap();
        let dy = quasi_derivative(&traj, 1).unwrap();
        for ((t, y), d) in mesh.nodes().iter().zip(&y).zip(&dy) {
            assert!((y[0] - c(*t)).norm() < 1e-15);
            assert!((d[0] - c(1.0)).norm() < 1e-15);
        }
        assert!(quasi_derivative(&traj, 2).is_err());
    }

    #[test]
    fn quasi_derivative_jumps_across_step_in_q() {
        // Q = 1(t > 1/2). Solutions keep D¹y continuous, so y' = D¹y + Q y
        // jumps by +y(1/2); equivalently a C¹ function would see D¹y jump by -y(1/2).
        let q = PiecewiseMatrixPoly::step(0.0, 1.0, 0.5, CMat::zeros(1, 1), CMat::identity(1, 1))
            .unwrap();
        let set = CoefficientSet::with_unit_p(q.clone(), true).unwrap();
        let a = set.shin_zettl(c(0.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.05).unwrap();
        let fs = propagate(&a, &mesh).unwrap();
        let traj = Trajectory::homogeneous(&fs, &CVec::from_vec(vec![c(0.3), c(1.0)]));
        let k = mesh.nodes().iter().position(|&t| t == 0.5).unwrap();
        let y_mid = traj.values()[k][0];
        // y' from the first row of the system on either side of the breakpoint.
        let y_prime_left = traj.slopes[k - 1].1[0];
        let y_prime_right = traj.slopes[k].0[0];
        assert!((y_prime_right - y_prime_left - y_mid).norm() < 1e-14);

        // For a smooth y(t) = sin t, D¹y = y' - Q y jumps by -y(1/2).
        let quasi = |t: f64| t.cos() - q.eval(t).unwrap()[(0, 0)].re * t.sin();
        let jump = quasi(0.5) - (0.5f64.cos() - 0.0);
        assert!((jump + 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn sup_distance_examples() {
        let set = CoefficientSet::free(0.0, 1.0, 1).unwrap();
        let a = set.shin_zettl(c(0.0));
        let mesh = Mesh::uniform(a.breakpoints(), 0.1).unwrap();
        let z1 = propagate(&a, &mesh).unwrap();
        assert_eq!(sup_distance(&z1, &z1).unwrap(), 0.0);
        let zero =
            ShinZettlMatrix::from_matrix(PiecewiseMatrixPoly::zeros(0.0, 1.0, 2).unwrap(), c(0.0))
                .unwrap();
        let id = propagate(&zero, &mesh).unwrap();
        // ‖[[0, t], [0, 0]]‖ = t, maximal at t = 1.
        assert!((sup_distance(&z1, &id).unwrap() - 1.0).abs() < 1e-14);

        let other = CoefficientSet::free(0.0, 2.0, 1)
            .unwrap()
            .shin_zettl(c(0.0));
        let z3 = propagate(&other, &Mesh::uniform(other.breakpoints(), 0.1).unwrap()).unwrap();
        assert!(sup_distance(&z1, &z3).is_err());
    }
}
