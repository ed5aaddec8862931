//! Coefficient sets `(p⁻¹, Q)` and the block system matrix
//!
//! ```text
//! A(t; λ) = [  p⁻¹Q           p⁻¹   ]
//!           [ -Qp⁻¹Q - λI    -Qp⁻¹  ]
//! ```
//!
//! acting on `w = (y, D¹y)` with `D¹y = p y' - Q y`.

use crate::poly::{merge_breakpoints, PiecewiseMatrixPoly};
use crate::{CMat, Error, Result, C64};

const HERMITIAN_TOL: f64 = 1e-12;

/// The pair `(p⁻¹, Q)` on a common mesh together with the products that enter
/// the first-order system. All five functions share one breakpoint list.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    p_inv: PiecewiseMatrixPoly,
    q: PiecewiseMatrixPoly,
    p_inv_q: PiecewiseMatrixPoly,
    q_p_inv: PiecewiseMatrixPoly,
    q_p_inv_q: PiecewiseMatrixPoly,
    hermitian: bool,
}

impl CoefficientSet {
    /// Form the products on the merged mesh. With `hermitian` set, `p⁻¹` and
    /// `Q` are sampled inside every piece and rejected if `‖F - F*‖ > 1e-12`.
    pub fn new(
        p_inv: PiecewiseMatrixPoly,
        q: PiecewiseMatrixPoly,
        hermitian: bool,
    ) -> Result<Self> {
        if p_inv.dim() != q.dim() {
            return Err(Error::DimensionMismatch(format!(
                "p_inv is {0}x{0} but Q is {1}x{1}",
                p_inv.dim(),
                q.dim()
            )));
        }
        if !p_inv.same_interval(&q) {
            let (a1, b1) = p_inv.interval();
            let (a2, b2) = q.interval();
            return Err(Error::IntervalMismatch(a1, b1, a2, b2));
        }
        let mesh = merge_breakpoints(p_inv.breakpoints(), q.breakpoints());
        let p_inv = p_inv.refine(&mesh);
        let q = q.refine(&mesh);
        if hermitian {
            check_hermitian(&p_inv, "p_inv")?;
            check_hermitian(&q, "Q")?;
        }
        let p_inv_q = p_inv.mul(&q)?;
        let q_p_inv = q.mul(&p_inv)?;
        let q_p_inv_q = q_p_inv.mul(&q)?;
        Ok(Self {
            p_inv,
            q,
            p_inv_q,
            q_p_inv,
            q_p_inv_q,
            hermitian,
        })
    }

    /// Scalar or matrix problem with `p ≡ I` and the given `Q`.
    pub fn with_unit_p(q: PiecewiseMatrixPoly, hermitian: bool) -> Result<Self> {
        let (a, b) = q.interval();
        let p_inv = PiecewiseMatrixPoly::identity(a, b, q.dim())?;
        Self::new(p_inv, q, hermitian)
    }

    /// `-y''` on `(a, b)` with values in `ℂ^s`.
    pub fn free(a: f64, b: f64, s: usize) -> Result<Self> {
        Self::with_unit_p(PiecewiseMatrixPoly::zeros(a, b, s)?, true)
    }

    pub fn dim(&self) -> usize {
        self.p_inv.dim()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.p_inv.interval()
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.p_inv.breakpoints()
    }

    pub fn p_inv(&self) -> &PiecewiseMatrixPoly {
        &self.p_inv
    }

    pub fn q(&self) -> &PiecewiseMatrixPoly {
        &self.q
    }

    pub fn p_inv_q(&self) -> &PiecewiseMatrixPoly {
        &self.p_inv_q
    }

    pub fn q_p_inv(&self) -> &PiecewiseMatrixPoly {
        &self.q_p_inv
    }

    pub fn q_p_inv_q(&self) -> &PiecewiseMatrixPoly {
        &self.q_p_inv_q
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// L¹ norms of `p⁻¹`, `p⁻¹Q`, `Qp⁻¹`, `Qp⁻¹Q`. Always finite for
    /// piecewise polynomial data on a bounded interval.
    pub fn integrability_norms(&self) -> [f64; 4] {
        [
            self.p_inv.l1_norm(),
            self.p_inv_q.l1_norm(),
            self.q_p_inv.l1_norm(),
            self.q_p_inv_q.l1_norm(),
        ]
    }

    /// Coefficients of the formally adjoint expression: `(p⁻¹)*` and `Q*`.
    pub fn adjoint(&self) -> Self {
        Self::new(self.p_inv.adjoint(), self.q.adjoint(), self.hermitian)
            .expect("adjoint of a valid set is valid")
    }

    /// The block system matrix at spectral parameter `lambda`.
    pub fn shin_zettl(&self, lambda: C64) -> ShinZettlMatrix {
        ShinZettlMatrix::new(self, lambda)
    }
}

fn check_hermitian(f: &PiecewiseMatrixPoly, which: &'static str) -> Result<()> {
    for (i, t) in f.interior_samples() {
        let v = f.eval_in_piece(i, t);
        let defect = (&v - v.adjoint()).norm();
        if defect > HERMITIAN_TOL * v.norm().max(1.0) {
            return Err(Error::NotHermitian { which, t, defect });
        }
    }
    Ok(())
}

/// `A(t; λ)` stored as a single piecewise polynomial of dimension `2s`.
///
/// The coefficients of `A(·; 0)` are made exactly traceless at assembly time,
/// so `det Z = 1` for the propagator is not at the mercy of rounding in
/// `tr(p⁻¹Q) - tr(Qp⁻¹)`.
#[derive(Debug, Clone)]
pub struct ShinZettlMatrix {
    s: usize,
    lambda: C64,
    matrix: PiecewiseMatrixPoly,
}

impl ShinZettlMatrix {
    pub fn new(c: &CoefficientSet, lambda: C64) -> Self {
        let s = c.dim();
        let lower_left = c.q_p_inv_q().scale(C64::new(-1.0, 0.0));
        let lower_right = c.q_p_inv().scale(C64::new(-1.0, 0.0));
        let mut matrix =
            PiecewiseMatrixPoly::from_blocks([c.p_inv_q(), c.p_inv(), &lower_left, &lower_right])
                .expect("coefficient set functions share interval and dimension");
        for piece in matrix.pieces_mut() {
            for coeff in piece.iter_mut() {
                let tr = coeff.trace();
                // Fold the rounding residue into the last diagonal entry.
                coeff[(2 * s - 1, 2 * s - 1)] -= tr;
            }
        }
        if lambda != C64::new(0.0, 0.0) {
            let mut shift = CMat::zeros(2 * s, 2 * s);
            for i in 0..s {
                shift[(s + i, i)] = -lambda;
            }
            matrix = matrix.add_constant(&shift);
        }
        Self { s, lambda, matrix }
    }

    /// Wrap an arbitrary `2s × 2s` piecewise polynomial system matrix.
    pub fn from_matrix(matrix: PiecewiseMatrixPoly, lambda: C64) -> Result<Self> {
        if !matrix.dim().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "system matrix must have even dimension, got {}",
                matrix.dim()
            )));
        }
        Ok(Self {
            s: matrix.dim() / 2,
            lambda,
            matrix,
        })
    }

    /// Block size `s`.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn matrix(&self) -> &PiecewiseMatrixPoly {
        &self.matrix
    }

    pub fn interval(&self) -> (f64, f64) {
        self.matrix.interval()
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.matrix.breakpoints()
    }

    pub fn eval(&self, t: f64) -> Result<CMat> {
        self.matrix.eval(t)
    }

    /// `A_self - A_other` on the merged mesh, at this matrix's `λ`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        Self::from_matrix(self.matrix.sub(&other.matrix)?, self.lambda - other.lambda)
    }
}
