//! Piecewise polynomial matrix-valued functions on a bounded interval.
//!
//! Each piece stores the coefficient matrices of a polynomial in the local
//! variable `t - left`, where `left` is the piece's left breakpoint. At an
//! interior breakpoint the right-hand piece is active; at `b` the last piece
//! is used.

use crate::linalg::spectral_norm;
use crate::quadrature::GaussLegendre;
use crate::{CMat, Error, Result, C64};

/// Relative tolerance under which two breakpoints are treated as equal.
const BREAKPOINT_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMatrixPoly {
    dim: usize,
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<CMat>>,
}

impl PiecewiseMatrixPoly {
    /// Build from breakpoints `a = x0 < x1 < ... < xn = b` and one coefficient
    /// list per piece (`pieces[i][k]` multiplies `(t - x_i)^k`).
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<CMat>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two breakpoints".into(),
            ));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if pieces.len() != breakpoints.len() - 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                pieces.len()
            )));
        }
        let dim = match pieces.first().and_then(|p| p.first()) {
            Some(m) => m.nrows(),
            None => return Err(Error::InvalidArgument("empty piece".into())),
        };
        if dim == 0 {
            return Err(Error::DimensionMismatch("matrix dimension is zero".into()));
        }
        for (i, piece) in pieces.iter().enumerate() {
            if piece.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "piece {i} has no coefficients"
                )));
            }
            for (k, m) in piece.iter().enumerate() {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "piece {i} coefficient {k} is {}x{}, expected {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            breakpoints,
            pieces,
        })
    }

    pub fn constant(a: f64, b: f64, value: CMat) -> Result<Self> {
        if value.nrows() != value.ncols() {
            return Err(Error::DimensionMismatch("value must be square".into()));
        }
        Self::new(vec![a, b], vec![vec![value]])
    }

    pub fn zeros(a: f64, b: f64, dim: usize) -> Result<Self> {
        Self::constant(a, b, CMat::zeros(dim, dim))
    }

    pub fn identity(a: f64, b: f64, dim: usize) -> Result<Self> {
        Self::constant(a, b, CMat::identity(dim, dim))
    }

    /// One constant value per piece.
    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<CMat>) -> Result<Self> {
        Self::new(breakpoints, values.into_iter().map(|v| vec![v]).collect())
    }

    /// `left` on `[a, t0)`, `right` on `[t0, b]`.
    pub fn step(a: f64, b: f64, t0: f64, left: CMat, right: CMat) -> Result<Self> {
        if !(a < t0 && t0 < b) {
            return Err(Error::InvalidArgument(format!(
                "step location {t0} must lie strictly inside ({a}, {b})"
            )));
        }
        Self::piecewise_constant(vec![a, t0, b], vec![left, right])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Vec<CMat>] {
        &self.pieces
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece_degree(&self, i: usize) -> usize {
        self.pieces[i].len() - 1
    }

    pub fn degree(&self) -> usize {
        (0..self.pieces.len())
            .map(|i| self.piece_degree(i))
            .max()
            .unwrap_or(0)
    }

    /// True when all non-constant coefficients of piece `i` vanish exactly.
    pub fn piece_is_constant(&self, i: usize) -> bool {
        self.pieces[i][1..]
            .iter()
            .all(|m| m.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = self.interval();
        t >= a && t <= b
    }

    /// Index of the piece that is active at `t` (right-limit convention).
    pub fn piece_index(&self, t: f64) -> Result<usize> {
        let (a, b) = self.interval();
        if !(t >= a && t <= b) {
            return Err(Error::OutOfDomain { t, a, b });
        }
        let n = self.pieces.len();
        // Largest i with breakpoints[i] <= t, clamped to the last piece.
        let i = self.breakpoints.partition_point(|&x| x <= t);
        Ok(i.saturating_sub(1).min(n - 1))
    }

    pub fn eval(&self, t: f64) -> Result<CMat> {
        let i = self.piece_index(t)?;
        Ok(self.eval_in_piece(i, t))
    }

    /// Evaluate piece `i`'s polynomial at `t` without any domain check.
    pub fn eval_in_piece(&self, i: usize, t: f64) -> CMat {
        let x = C64::new(t - self.breakpoints[i], 0.0);
        let coeffs = &self.pieces[i];
        let mut acc = coeffs[coeffs.len() - 1].clone();
        for c in coeffs.iter().rev().skip(1) {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn same_interval(&self, other: &Self) -> bool {
        let (a1, b1) = self.interval();
        let (a2, b2) = other.interval();
        let scale = (b1 - a1).abs().max(1.0);
        (a1 - a2).abs() <= BREAKPOINT_RTOL * scale && (b1 - b2).abs() <= BREAKPOINT_RTOL * scale
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.same_interval(other) {
            let (a1, b1) = self.interval();
            let (a2, b2) = other.interval();
            return Err(Error::IntervalMismatch(a1, b1, a2, b2));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        Ok(())
    }

    /// Re-express on a mesh that contains every current breakpoint plus `extra`
    /// (points outside the interval are ignored). Values are unchanged.
    pub fn refine(&self, extra: &[f64]) -> Self {
        let (a, b) = self.interval();
        let inner: Vec<f64> = extra.iter().copied().filter(|&x| x > a && x < b).collect();
        let mesh = merge_breakpoints(&self.breakpoints, &inner);
        if mesh.len() == self.breakpoints.len() {
            return self.clone();
        }
        let pieces = mesh
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let src = self.piece_index(mid).expect("inside interval");
                taylor_shift(&self.pieces[src], w[0] - self.breakpoints[src])
            })
            .collect();
        Self {
            dim: self.dim,
            breakpoints: mesh,
            pieces,
        }
    }

    /// Pointwise product `self(t) · other(t)`; degrees add.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mesh = merge_breakpoints(&self.breakpoints, &other.breakpoints);
        let lhs = self.refine(&mesh);
        let rhs = other.refine(&mesh);
        let pieces = lhs
            .pieces
            .iter()
            .zip(&rhs.pieces)
            .map(|(p, q)| {
                let mut out = vec![CMat::zeros(self.dim, self.dim); p.len() + q.len() - 1];
                for (i, pi) in p.iter().enumerate() {
                    for (j, qj) in q.iter().enumerate() {
                        out[i + j] += pi * qj;
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            breakpoints: lhs.breakpoints,
            pieces,
        })
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let mesh = merge_breakpoints(&self.breakpoints, &other.breakpoints);
        let lhs = self.refine(&mesh);
        let rhs = other.refine(&mesh);
        let s = C64::new(sign, 0.0);
        let pieces = lhs
            .pieces
            .iter()
            .zip(&rhs.pieces)
            .map(|(p, q)| {
                let n = p.len().max(q.len());
                (0..n)
                    .map(|k| {
                        let mut m = p
                            .get(k)
                            .cloned()
                            .unwrap_or_else(|| CMat::zeros(self.dim, self.dim));
                        if let Some(qk) = q.get(k) {
                            m += qk * s;
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            breakpoints: lhs.breakpoints,
            pieces,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.map_coeffs(|m| m * factor)
    }

    /// Add a constant matrix to every piece.
    pub fn add_constant(&self, value: &CMat) -> Self {
        let mut out = self.clone();
        for piece in &mut out.pieces {
            piece[0] += value;
        }
        out
    }

    /// Pointwise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.map_coeffs(|m| m.adjoint())
    }

    pub fn map_coeffs<F: Fn(&CMat) -> CMat>(&self, f: F) -> Self {
        Self {
            dim: self.dim,
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| p.iter().map(&f).collect())
                .collect(),
        }
    }

    /// Assemble a `2s × 2s` function from four `s × s` blocks.
    pub fn from_blocks(blocks: [&Self; 4]) -> Result<Self> {
        let first = blocks[0];
        for other in &blocks[1..] {
            first.check_compatible(other)?;
        }
        let mut mesh = first.breakpoints.clone();
        for other in &blocks[1..] {
            mesh = merge_breakpoints(&mesh, &other.breakpoints);
        }
        let refined: Vec<Self> = blocks.iter().map(|f| f.refine(&mesh)).collect();
        let s = first.dim;
        let pieces = (0..mesh.len() - 1)
            .map(|i| {
                let deg = refined.iter().map(|f| f.pieces[i].len()).max().unwrap();
                (0..deg)
                    .map(|k| {
                        let mut m = CMat::zeros(2 * s, 2 * s);
                        for (bi, f) in refined.iter().enumerate() {
                            if let Some(c) = f.pieces[i].get(k) {
                                let (r, col) = (bi / 2, bi % 2);
                                m.view_mut((r * s, col * s), (s, s)).copy_from(c);
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            dim: 2 * s,
            breakpoints: mesh,
            pieces,
        })
    }

    pub(crate) fn pieces_mut(&mut self) -> &mut [Vec<CMat>] {
        &mut self.pieces
    }

    /// `∫ₐᵇ ‖f(t)‖₂ dt` with per-piece Gauss–Legendre of order `2·deg + 4`.
    pub fn l1_norm(&self) -> f64 {
        (0..self.pieces.len())
            .map(|i| {
                let (lo, hi) = (self.breakpoints[i], self.breakpoints[i + 1]);
                if self.piece_is_constant(i) {
                    return (hi - lo) * spectral_norm(&self.pieces[i][0]);
                }
                GaussLegendre::for_degree(self.piece_degree(i))
                    .integrate(lo, hi, |t| spectral_norm(&self.eval_in_piece(i, t)))
            })
            .sum()
    }

    /// Sample points strictly inside each piece (midpoint and two Gauss points).
    pub fn interior_samples(&self) -> Vec<(usize, f64)> {
        let gl = GaussLegendre::new(3);
        let mut out = Vec::new();
        for i in 0..self.pieces.len() {
            let (lo, hi) = (self.breakpoints[i], self.breakpoints[i + 1]);
            for (t, _) in gl.mapped(lo, hi) {
                out.push((i, t));
            }
        }
        out
    }
}

/// Sorted union of two breakpoint lists with near-duplicates removed.
pub fn merge_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let span = all.last().unwrap_or(&0.0) - all.first().unwrap_or(&0.0);
    let tol = BREAKPOINT_RTOL * span.abs().max(1.0);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match out.last() {
            Some(&last) if (x - last).abs() <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

/// Coefficients of `p(x + delta)` given those of `p(x)`.
fn taylor_shift(coeffs: &[CMat], delta: f64) -> Vec<CMat> {
    if delta == 0.0 || coeffs.len() == 1 {
        return coeffs.to_vec();
    }
    // Repeated synthetic division by (x - (-delta)).
    let mut c = coeffs.to_vec();
    let n = c.len();
    let d = C64::new(delta, 0.0);
    for i in 0..n - 1 {
        for j in (i..n - 1).rev() {
            let next = c[j + 1].clone();
            c[j] += next * d;
        }
    }
    c
}
