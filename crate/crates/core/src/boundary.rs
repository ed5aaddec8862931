//! Boundary triplet `(ℂ^{2s}, Γ₁, Γ₂)` with
//! `Γ₁y = (D¹y(a), -D¹y(b))`, `Γ₂y = (y(a), y(b))`, canonical conditions
//! `(K - I)Γ₁y ± i(K + I)Γ₂y = 0` and their classification.
//!
//! Vectors `w = (y, D¹y)` always carry `y` in the top block.

use serde::{Deserialize, Serialize};

use crate::linalg::{block, dot_conj, from_blocks, spectral_norm};
use crate::{CMat, CVec, Error, Result, C64};

/// Default tolerance on `‖K*K - I‖` for the self-adjoint verdict.
pub const DEFAULT_UNITARY_TOL: f64 = 1e-10;
/// Default slack on `‖K‖ ≤ 1` for the contraction verdicts.
pub const DEFAULT_CONTRACTION_SLACK: f64 = 1e-12;

/// `α w(a) + β w(b) = 0` with `α, β ∈ ℂ^{2s×2s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBC {
    alpha: CMat,
    beta: CMat,
    s: usize,
}

impl LinearBC {
    pub fn new(alpha: CMat, beta: CMat) -> Result<Self> {
        let n = alpha.nrows();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "alpha must be 2s x 2s, got {}x{}",
                alpha.nrows(),
                alpha.ncols()
            )));
        }
        for (name, m) in [("alpha", &alpha), ("beta", &beta)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self {
            alpha,
            beta,
            s: n / 2,
        })
    }

    /// `y(a) = y(b) = 0`.
    pub fn dirichlet(s: usize) -> Self {
        CanonicalBC::new(CMat::identity(2 * s, 2 * s), Variant::LK)
            .expect("square")
            .to_linear()
    }

    /// `D¹y(a) = D¹y(b) = 0`.
    pub fn neumann(s: usize) -> Self {
        CanonicalBC::new(-CMat::identity(2 * s, 2 * s), Variant::LK)
            .expect("square")
            .to_linear()
    }

    /// `w(a) = w(b)`.
    pub fn periodic(s: usize) -> Self {
        let i = CMat::identity(2 * s, 2 * s);
        Self::new(i.clone(), -i).expect("square")
    }

    pub fn alpha(&self) -> &CMat {
        &self.alpha
    }

    pub fn beta(&self) -> &CMat {
        &self.beta
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `‖α w(a) + β w(b)‖`.
    pub fn residual(&self, w_a: &CVec, w_b: &CVec) -> f64 {
        (&self.alpha * w_a + &self.beta * w_b).norm()
    }

    /// Spectral-norm distances `(‖α - α'‖, ‖β - β'‖)`.
    pub fn distance(&self, other: &Self) -> (f64, f64) {
        (
            spectral_norm(&(&self.alpha - &other.alpha)),
            spectral_norm(&(&self.beta - &other.beta)),
        )
    }
}

/// Sign of the `i(K + I)` term: `LK` uses `+i`, `LUpperK` uses `-i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "LK")]
    LK,
    #[serde(rename = "LUpperK")]
    LUpperK,
}

impl Variant {
    fn sign(self) -> C64 {
        match self {
            Variant::LK => C64::new(0.0, 1.0),
            Variant::LUpperK => C64::new(0.0, -1.0),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::LK => write!(f, "LK"),
            Variant::LUpperK => write!(f, "LUpperK"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalBC {
    k: CMat,
    variant: Variant,
}

impl CanonicalBC {
    pub fn new(k: CMat, variant: Variant) -> Result<Self> {
        if k.nrows() != k.ncols() || k.nrows() == 0 || !k.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "K must be 2s x 2s, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(Self { k, variant })
    }

    pub fn k(&self) -> &CMat {
        &self.k
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn s(&self) -> usize {
        self.k.nrows() / 2
    }

    /// Rewrite `MΓ₁y + NΓ₂y = 0` (`M = K - I`, `N = ±i(K + I)`) as
    /// `α w(a) + β w(b) = 0`.
    pub fn to_linear(&self) -> LinearBC {
        canonical_to_linear(self)
    }

    pub fn classify(&self, tol: f64) -> ExtensionClass {
        classify(self, tol)
    }
}

pub fn canonical_to_linear(bc: &CanonicalBC) -> LinearBC {
    let s = bc.s();
    let id = CMat::identity(2 * s, 2 * s);
    let m = &bc.k - &id;
    let n = (&bc.k + &id) * bc.variant.sign();
    let alpha = from_blocks(
        &block(&n, s, 0, 0),
        &block(&m, s, 0, 0),
        &block(&n, s, 1, 0),
        &block(&m, s, 1, 0),
    );
    let beta = from_blocks(
        &block(&n, s, 0, 1),
        &(-block(&m, s, 0, 1)),
        &block(&n, s, 1, 1),
        &(-block(&m, s, 1, 1)),
    );
    LinearBC::new(alpha, beta).expect("blocks are 2s x 2s")
}

/// `Γ₁ = (D¹y(a), -D¹y(b))`, `Γ₂ = (y(a), y(b))` from `w(a)`, `w(b)`.
pub fn boundary_maps(w_a: &CVec, w_b: &CVec) -> Result<(CVec, CVec)> {
    if w_a.len() != w_b.len() || !w_a.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "boundary vectors have lengths {} and {}",
            w_a.len(),
            w_b.len()
        )));
    }
    let s = w_a.len() / 2;
    let mut g1 = CVec::zeros(2 * s);
    let mut g2 = CVec::zeros(2 * s);
    g1.rows_mut(0, s).copy_from(&w_a.rows(s, s));
    g1.rows_mut(s, s).copy_from(&(-w_b.rows(s, s)));
    g2.rows_mut(0, s).copy_from(&w_a.rows(0, s));
    g2.rows_mut(s, s).copy_from(&w_b.rows(0, s));
    Ok((g1, g2))
}

/// `(Γ₁w, Γ₂z) - (Γ₂w, Γ₁z)` for boundary data of two functions.
pub fn abstract_boundary_form(w_a: &CVec, w_b: &CVec, z_a: &CVec, z_b: &CVec) -> Result<C64> {
    let (g1w, g2w) = boundary_maps(w_a, w_b)?;
    let (g1z, g2z) = boundary_maps(z_a, z_b)?;
    Ok(dot_conj(&g1w, &g2z) - dot_conj(&g2w, &g1z))
}

/// `[D¹y·z̄ - y·\overline{D¹z}](a) - [D¹y·z̄ - y·\overline{D¹z}](b)`, the
/// boundary term that `(L*y, z) - (y, L*z)` reduces to.
pub fn wronskian_boundary_term(w_a: &CVec, w_b: &CVec, z_a: &CVec, z_b: &CVec) -> C64 {
    let s = w_a.len() / 2;
    let at = |w: &CVec, z: &CVec| {
        let y = w.rows(0, s).into_owned();
        let dy = w.rows(s, s).into_owned();
        let zz = z.rows(0, s).into_owned();
        let dz = z.rows(s, s).into_owned();
        dot_conj(&dy, &zz) - dot_conj(&y, &dz)
    };
    at(w_a, z_a) - at(w_b, z_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExtensionKind {
    SelfAdjoint,
    MaximalDissipative,
    MaximalAccumulative,
    OutsideTheorem,
}

impl std::fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExtensionKind::SelfAdjoint => "SelfAdjoint",
            ExtensionKind::MaximalDissipative => "MaximalDissipative",
            ExtensionKind::MaximalAccumulative => "MaximalAccumulative",
            ExtensionKind::OutsideTheorem => "OutsideTheorem",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionClass {
    pub kind: ExtensionKind,
    pub norm_k: f64,
    pub unitary_defect: f64,
}

impl std::fmt::Display for ExtensionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}, norm_K={}", self.kind, self.norm_k)
    }
}

/// Classify with one tolerance used both for the unitary defect and the
/// contraction slack.
pub fn classify(bc: &CanonicalBC, tol: f64) -> ExtensionClass {
    classify_with(bc, tol, tol)
}

/// Classify with the default tolerances.
pub fn classify_default(bc: &CanonicalBC) -> ExtensionClass {
    classify_with(bc, DEFAULT_UNITARY_TOL, DEFAULT_CONTRACTION_SLACK)
}

pub fn classify_with(bc: &CanonicalBC, unitary_tol: f64, contraction_slack: f64) -> ExtensionClass {
    let k = &bc.k;
    let n = k.nrows();
    let norm_k = spectral_norm(k);
    let unitary_defect = spectral_norm(&(k.adjoint() * k - CMat::identity(n, n)));
    let kind = if unitary_defect <= unitary_tol {
        ExtensionKind::SelfAdjoint
    } else if norm_k <= 1.0 + contraction_slack {
        match bc.variant {
            Variant::LK => ExtensionKind::MaximalDissipative,
            Variant::LUpperK => ExtensionKind::MaximalAccumulative,
        }
    } else {
        ExtensionKind::OutsideTheorem
    };
    ExtensionClass {
        kind,
        norm_k,
        unitary_defect,
    }
}

/// Block-diagonality test for `K`: returns `(separated, max(‖K₁₂‖, ‖K₂₁‖))`.
pub fn is_separated(k: &CMat, tol: f64) -> (bool, f64) {
    let s = k.nrows() / 2;
    let residual = spectral_norm(&block(k, s, 0, 1)).max(spectral_norm(&block(k, s, 1, 0)));
    (residual <= tol, residual)
}

/// Separated conditions from `K = diag(K_a, K_b)`:
/// `(K_a - I)D¹y(a) ± i(K_a + I)y(a) = 0`, `-(K_b - I)D¹y(b) ± i(K_b + I)y(b) = 0`.
pub fn separated_conditions(k_a: &CMat, k_b: &CMat, variant: Variant) -> Result<LinearBC> {
    let s = k_a.nrows();
    if k_a.ncols() != s || k_b.nrows() != s || k_b.ncols() != s {
        return Err(Error::DimensionMismatch(
            "K_a and K_b must both be s x s".into(),
        ));
    }
    let id = CMat::identity(s, s);
    let sign = variant.sign();
    let zero = CMat::zeros(s, s);
    let alpha = from_blocks(&((k_a + &id) * sign), &(k_a - &id), &zero, &zero);
    let beta = from_blocks(&zero, &zero, &((k_b + &id) * sign), &(-(k_b - &id)));
    LinearBC::new(alpha, beta)
}

/// `diag(K_a, K_b)`.
pub fn block_diagonal(k_a: &CMat, k_b: &CMat) -> CMat {
    let s = k_a.nrows();
    let zero = CMat::zeros(s, s);
    from_blocks(k_a, &zero, &zero, k_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cvec(v: &[f64]) -> CVec {
        CVec::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn boundary_maps_scalar() {
        let (g1, g2) = boundary_maps(&cvec(&[1.0, 2.0]), &cvec(&[3.0, 4.0])).unwrap();
        assert_eq!(g1, cvec(&[2.0, -4.0]));
        assert_eq!(g2, cvec(&[1.0, 3.0]));
        let (g1, g2) = boundary_maps(&CVec::zeros(2), &CVec::zeros(2)).unwrap();
        assert_eq!(g1.norm() + g2.norm(), 0.0);
    }

    #[test]
    fn boundary_maps_blocks() {
        let w_a = cvec(&[1.0, 0.0, 0.0, 1.0]);
        let w_b = cvec(&[5.0, 6.0, 7.0, 8.0]);
        let (g1, g2) = boundary_maps(&w_a, &w_b).unwrap();
        assert_eq!(g1, cvec(&[0.0, 1.0, -7.0, -8.0]));
        assert_eq!(g2, cvec(&[1.0, 0.0, 5.0, 6.0]));
        assert!(boundary_maps(&cvec(&[1.0, 2.0]), &cvec(&[1.0])).is_err());
    }

    #[test]
    fn dirichlet_and_neumann_from_k() {
        let d = LinearBC::dirichlet(1);
        assert_eq!(
            d.alpha(),
            &CMat::from_row_slice(2, 2, &[c(0.0, 2.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
        );
        assert_eq!(
            d.beta(),
            &CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)])
        );
        let n = LinearBC::neumann(1);
        assert_eq!(
            n.alpha(),
            &CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
        );
        assert_eq!(
            n.beta(),
            &CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)])
        );
    }

    #[test]
    fn zero_k_gives_impedance_conditions() {
        // K = 0, LK: D¹y(a) = i y(a) and D¹y(b) = -i y(b).
        let bc = CanonicalBC::new(CMat::zeros(2, 2), Variant::LK)
            .unwrap()
            .to_linear();
        let y_a = c(0.7, -0.2);
        let y_b = c(-1.1, 0.4);
        let w_a = CVec::from_vec(vec![y_a, c(0.0, 1.0) * y_a]);
        let w_b = CVec::from_vec(vec![y_b, c(0.0, -1.0) * y_b]);
        assert!(bc.residual(&w_a, &w_b) < 1e-15);
        let wrong_b = CVec::from_vec(vec![y_b, c(0.0, 1.0) * y_b]);
        assert!(bc.residual(&w_a, &wrong_b) > 0.1);
    }

    #[test]
    fn classification_examples() {
        let id = CMat::identity(2, 2);
        let sa = CanonicalBC::new(id.clone(), Variant::LK)
            .unwrap()
            .classify(1e-10);
        assert_eq!(sa.kind, ExtensionKind::SelfAdjoint);
        let zero = CanonicalBC::new(CMat::zeros(2, 2), Variant::LK).unwrap();
        let cl = classify_default(&zero);
        assert_eq!(cl.kind, ExtensionKind::MaximalDissipative);
        assert_eq!(cl.norm_k, 0.0);
        let acc = CanonicalBC::new(CMat::zeros(2, 2), Variant::LUpperK).unwrap();
        assert_eq!(
            classify_default(&acc).kind,
            ExtensionKind::MaximalAccumulative
        );
        let big = CanonicalBC::new(id * c(2.0, 0.0), Variant::LK).unwrap();
        let cl = classify_default(&big);
        assert_eq!(cl.kind, ExtensionKind::OutsideTheorem);
        assert!((cl.norm_k - 2.0).abs() < 1e-14);
    }

    #[test]
    fn separated_examples() {
        let ka = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(0.5, 0.0), c(-1.0, 3.0)]);
        let kb = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(4.0, 0.0), c(1.0, 1.0)]);
        let k = block_diagonal(&ka, &kb);
        assert_eq!(is_separated(&k, 1e-12), (true, 0.0));
        let mut coupled = k.clone();
        for i in 0..2 {
            coupled[(i, 2 + i)] = c(1.0, 0.0);
        }
        let (sep, res) = is_separated(&coupled, 1e-12);
        assert!(!sep);
        assert!((res - 1.0).abs() < 1e-14);
        assert!(is_separated(&CMat::identity(4, 4), 1e-12).0);

        for variant in [Variant::LK, Variant::LUpperK] {
            let direct = separated_conditions(&ka, &kb, variant).unwrap();
            let via_k = CanonicalBC::new(k.clone(), variant).unwrap().to_linear();
            assert!((direct.alpha() - via_k.alpha()).norm() < 1e-15);
            assert!((direct.beta() - via_k.beta()).norm() < 1e-15);
        }
    }

    #[test]
    fn mixed_dirichlet_neumann() {
        let one = CMat::identity(1, 1);
        let bc = separated_conditions(&one, &(-one.clone()), Variant::LK).unwrap();
        // y(a) = 0, D¹y(b) = 0 satisfied; y(a) != 0 violated.
        assert!(bc.residual(&cvec(&[0.0, 3.0]), &cvec(&[2.0, 0.0])) < 1e-15);
        assert!(bc.residual(&cvec(&[1.0, 0.0]), &cvec(&[0.0, 0.0])) > 1.0);
        assert!(bc.residual(&cvec(&[0.0, 0.0]), &cvec(&[0.0, 1.0])) > 1.0);
    }

    #[test]
    fn unimodular_separated_is_self_adjoint() {
        let ka = CMat::from_element(1, 1, C64::from_polar(1.0, 0.7));
        let k = block_diagonal(&ka, &ka);
        let cl = classify_default(&CanonicalBC::new(k, Variant::LK).unwrap());
        assert_eq!(cl.kind, ExtensionKind::SelfAdjoint);
    }

    #[test]
    fn periodic_preset() {
        let p = LinearBC::periodic(2);
        let w = cvec(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.residual(&w, &w), 0.0);
    }
}
