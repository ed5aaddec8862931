//! ε-families of coefficient sets and boundary conditions, and the
//! quantities that govern norm-resolvent convergence `L_ε → L₀`:
//!
//! 1. `‖p⁻¹_ε - p⁻¹₀‖₁`
//! 2. `‖(p⁻¹Q)_ε - (p⁻¹Q)₀‖₁`
//! 3. `‖(Qp⁻¹)_ε - (Qp⁻¹)₀‖₁`
//! 4. `‖(Qp⁻¹Q)_ε - (Qp⁻¹Q)₀‖₁`
//! 5. `‖α(ε) - α(0)‖`, `‖β(ε) - β(0)‖`
//!
//! plus the sup-norm deviation from `I` of the propagator of `A_ε - A₀` and the
//! Hilbert–Schmidt distance between resolvent kernels at a fixed `μ`.

use serde::Serialize;

use crate::boundary::LinearBC;
use crate::coeffs::CoefficientSet;
use crate::green::{hs_distance, in_resolvent_set, kernel_for, sup_kernel_distance, Grid};
use crate::linalg::spectral_norm;
use crate::poly::PiecewiseMatrixPoly;
use crate::propagator::{propagate, Mesh};
use crate::{CMat, Error, Result, C64};

/// Relative spacing under which two ε values are considered equal.
const EPS_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub eps: f64,
    pub coeffs: CoefficientSet,
    pub bc: LinearBC,
}

/// Members for `ε > 0` sorted by decreasing `ε`, plus the limit member `ε = 0`.
#[derive(Debug, Clone)]
pub struct Family {
    members: Vec<FamilyMember>,
    limit: FamilyMember,
    mu: C64,
}

impl Family {
    pub fn new(limit: FamilyMember, mut members: Vec<FamilyMember>, mu: C64) -> Result<Self> {
        if limit.eps != 0.0 {
            return Err(Error::InvalidArgument(
                "limit member must have eps = 0".into(),
            ));
        }
        let s = limit.coeffs.dim();
        for m in &members {
            if !(m.eps > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "family members need eps > 0, got {}",
                    m.eps
                )));
            }
            if m.coeffs.dim() != s || m.bc.s() != s || limit.bc.s() != s {
                return Err(Error::DimensionMismatch(format!(
                    "member eps = {} does not share s = {s}",
                    m.eps
                )));
            }
            if !m.coeffs.p_inv().same_interval(limit.coeffs.p_inv()) {
                let (a1, b1) = m.coeffs.interval();
                let (a2, b2) = limit.coeffs.interval();
                return Err(Error::IntervalMismatch(a1, b1, a2, b2));
            }
        }
        members.sort_by(|x, y| y.eps.partial_cmp(&x.eps).unwrap());
        Ok(Self { members, limit, mu })
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn limit(&self) -> &FamilyMember {
        &self.limit
    }

    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.eps).collect()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.limit.coeffs.interval()
    }

    /// Member with the given ε; `0` returns the limit member.
    pub fn member(&self, eps: f64) -> Result<&FamilyMember> {
        if eps == 0.0 {
            return Ok(&self.limit);
        }
        self.members
            .iter()
            .find(|m| (m.eps - eps).abs() <= EPS_RTOL * eps.abs().max(1.0))
            .ok_or_else(|| Error::InvalidArgument(format!("no family member with eps = {eps}")))
    }

    /// Replace the boundary condition of every `ε > 0` member by
    /// `α(ε) = α(0)·R(θ)`, `β(ε) = β(0)`, where `R(θ)` rotates `(y(a), D¹y(a))`.
    /// `α(ε)` then stays a fixed distance from `α(0)`.
    pub fn with_rotated_alpha(&self, angle: f64) -> Self {
        let s = self.limit.bc.s();
        let (cos, sin) = (C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0));
        let id = CMat::identity(s, s);
        let rot =
            crate::linalg::from_blocks(&(&id * cos), &(&id * -sin), &(&id * sin), &(&id * cos));
        let alpha = self.limit.bc.alpha() * rot;
        let bc = LinearBC::new(alpha, self.limit.bc.beta().clone()).expect("same shape");
        let mut out = self.clone();
        for m in &mut out.members {
            m.bc = bc.clone();
        }
        out
    }
}

/// The six hypothesis distances for one ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisDistances {
    pub cond1: f64,
    pub cond2: f64,
    pub cond3: f64,
    pub cond4: f64,
    pub cond5_alpha: f64,
    pub cond5_beta: f64,
}

impl HypothesisDistances {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.cond1,
            self.cond2,
            self.cond3,
            self.cond4,
            self.cond5_alpha,
            self.cond5_beta,
        ]
    }
}

pub fn hypothesis_distances(fam: &Family, eps: f64) -> Result<HypothesisDistances> {
    let m = fam.member(eps)?;
    let l = &fam.limit;
    let (da, db) = m.bc.distance(&l.bc);
    Ok(HypothesisDistances {
        cond1: m.coeffs.p_inv().sub(l.coeffs.p_inv())?.l1_norm(),
        cond2: m.coeffs.p_inv_q().sub(l.coeffs.p_inv_q())?.l1_norm(),
        cond3: m.coeffs.q_p_inv().sub(l.coeffs.q_p_inv())?.l1_norm(),
        cond4: m.coeffs.q_p_inv_q().sub(l.coeffs.q_p_inv_q())?.l1_norm(),
        cond5_alpha: da,
        cond5_beta: db,
    })
}

/// Breakpoints of `A_ε - A₀`.
pub fn difference_breakpoints(fam: &Family, eps: f64) -> Result<Vec<f64>> {
    let m = fam.member(eps)?;
    let r = m
        .coeffs
        .shin_zettl(C64::new(0.0, 0.0))
        .difference(&fam.limit.coeffs.shin_zettl(C64::new(0.0, 0.0)))?;
    Ok(r.breakpoints().to_vec())
}

/// `sup_k ‖Z(t_k) - I‖` for `Z' = (A_ε - A₀) Z`, `Z(a) = I`, at `λ = 0`.
pub fn mm_deviation_on(fam: &Family, eps: f64, mesh: &Mesh) -> Result<f64> {
    let m = fam.member(eps)?;
    let zero = C64::new(0.0, 0.0);
    let r = m
        .coeffs
        .shin_zettl(zero)
        .difference(&fam.limit.coeffs.shin_zettl(zero))?;
    let fs = propagate(&r, mesh)?;
    let id = CMat::identity(fs.dim(), fs.dim());
    Ok(fs
        .samples()
        .iter()
        .map(|z| spectral_norm(&(z - &id)))
        .fold(0.0, f64::max))
}

/// [`mm_deviation_on`] with a uniform mesh over the merged breakpoints.
pub fn mm_deviation(fam: &Family, eps: f64, max_step: f64) -> Result<f64> {
    let mesh = Mesh::uniform(&difference_breakpoints(fam, eps)?, max_step)?;
    mm_deviation_on(fam, eps, &mesh)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub eps: f64,
    pub hypotheses: HypothesisDistances,
    pub mm_dev: f64,
    pub hs_dist: Option<f64>,
    pub sup_dist: Option<f64>,
    pub status: String,
}

/// Per-ε ladder plus verdict flags. Monotonicity is recorded, not enforced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub mu: C64,
    pub interval: (f64, f64),
    pub rows: Vec<ReportRow>,
    /// Every hypothesis column decays along the ladder.
    pub hypotheses_vanish: bool,
    /// `hs_dist` strictly decreases along the ladder (skipped members ignored).
    pub hs_decreasing: bool,
    /// `mm_dev` strictly decreases along the ladder.
    pub mm_decreasing: bool,
    /// `hs_dist ≤ (b - a)·sup_dist` on every computed row.
    pub chain_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSettings {
    pub grid_n: usize,
    pub max_step: f64,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self {
            grid_n: 201,
            max_step: 0.02,
        }
    }
}

/// Column decays if its last value is negligible, or it never increases and
/// ends at most half its first value.
fn column_vanishes(col: &[f64]) -> bool {
    let (Some(&first), Some(&last)) = (col.first(), col.last()) else {
        return true;
    };
    if last <= 1e-12 {
        return true;
    }
    col.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) && last <= 0.5 * first
}

fn strictly_decreasing(col: &[f64]) -> bool {
    col.windows(2).all(|w| w[1] < w[0])
}

/// Build the ladder report at `fam.mu()`.
pub fn resolvent_distances(
    fam: &Family,
    settings: ConvergenceSettings,
) -> Result<ConvergenceReport> {
    let (a, b) = fam.interval();
    let mu = fam.mu;
    let limit = &fam.limit;
    let (ok, cond) = in_resolvent_set(&limit.coeffs.shin_zettl(mu), &limit.bc, settings.max_step)?;
    if !ok {
        return Err(Error::NotInResolventSet { lambda: mu, cond });
    }
    let grid = Grid::uniform(a, b, settings.grid_n)?;
    let k0 = kernel_for(&limit.coeffs, &limit.bc, mu, &grid, settings.max_step)?;

    let row = |m: &FamilyMember| -> Result<ReportRow> {
        let hypotheses = hypothesis_distances(fam, m.eps)?;
        let mm_dev = mm_deviation(fam, m.eps, settings.max_step)?;
        let (hs_dist, sup_dist, status) =
            match kernel_for(&m.coeffs, &m.bc, mu, &grid, settings.max_step) {
                Ok(k) => (
                    Some(hs_distance(&k, &k0)?),
                    Some(sup_kernel_distance(&k, &k0)?),
                    "ok".to_string(),
                ),
                Err(Error::NotInResolventSet { cond, .. }) => {
                    (None, None, format!("skipped: singular D (cond {cond:.3e})"))
                }
                Err(e) => return Err(e),
            };
        Ok(ReportRow {
            eps: m.eps,
            hypotheses,
            mm_dev,
            hs_dist,
            sup_dist,
            status,
        })
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<ReportRow> = {
        use rayon::prelude::*;
        fam.members.par_iter().map(row).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<ReportRow> = fam.members.iter().map(row).collect::<Result<_>>()?;

    let hypotheses_vanish = (0..6).all(|c| {
        let col: Vec<f64> = rows.iter().map(|r| r.hypotheses.as_array()[c]).collect();
        column_vanishes(&col)
    });
    let hs: Vec<f64> = rows.iter().filter_map(|r| r.hs_dist).collect();
    let mm: Vec<f64> = rows.iter().map(|r| r.mm_dev).collect();
    // Trapezoid weights sum to b - a, so the discrete chain holds up to rounding.
    let chain_holds = rows.iter().all(|r| match (r.hs_dist, r.sup_dist) {
        (Some(h), Some(s)) => h <= (b - a) * s * (1.0 + 1e-12) + 1e-15,
        _ => true,
    });
    Ok(ConvergenceReport {
        mu,
        interval: (a, b),
        rows,
        hypotheses_vanish,
        hs_decreasing: strictly_decreasing(&hs),
        mm_decreasing: strictly_decreasing(&mm),
        chain_holds,
    })
}

/// `Q_ε = c·r_ε(t)·I` with the linear ramp `r_ε` from 0 at `t₀ - ε/2` to 1 at
/// `t₀ + ε/2`; `Q₀ = c·1(t ≥ t₀)·I`, i.e. `q₀ = c δ(t - t₀)`. `p ≡ I`.
pub fn mollified_step(
    a: f64,
    b: f64,
    t0: f64,
    strength: f64,
    width: f64,
    s: usize,
) -> Result<PiecewiseMatrixPoly> {
    let (lo, hi) = (t0 - 0.5 * width, t0 + 0.5 * width);
    if !(lo > a && hi < b) {
        return Err(Error::InvalidArgument(format!(
            "ramp [{lo}, {hi}] escapes the interval ({a}, {b})"
        )));
    }
    let id = CMat::identity(s, s);
    let c = C64::new(strength, 0.0);
    PiecewiseMatrixPoly::new(
        vec![a, lo, hi, b],
        vec![
            vec![CMat::zeros(s, s)],
            vec![CMat::zeros(s, s), &id * (c / width)],
            vec![&id * c],
        ],
    )
}

pub fn make_mollified_delta_family(
    interval: (f64, f64),
    s: usize,
    t0: f64,
    strength: f64,
    widths: &[f64],
    bc: &LinearBC,
    mu: C64,
) -> Result<Family> {
    let (a, b) = interval;
    let c = C64::new(strength, 0.0);
    let q0 = PiecewiseMatrixPoly::step(a, b, t0, CMat::zeros(s, s), CMat::identity(s, s) * c)?;
    let limit = FamilyMember {
        eps: 0.0,
        coeffs: CoefficientSet::with_unit_p(q0, true)?,
        bc: bc.clone(),
    };
    let members = widths
        .iter()
        .map(|&w| {
            Ok(FamilyMember {
                eps: w,
                coeffs: CoefficientSet::with_unit_p(
                    mollified_step(a, b, t0, strength, w, s)?,
                    true,
                )?,
                bc: bc.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Family::new(limit, members, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(widths: &[f64], strength: f64) -> Family {
        make_mollified_delta_family(
            (0.0, 1.0),
            1,
            0.5,
            strength,
            widths,
            &LinearBC::dirichlet(1),
            C64::new(-1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn limit_against_itself_is_zero() {
        let fam = family(&[0.2], 1.0);
        let d = hypothesis_distances(&fam, 0.0).unwrap();
        assert_eq!(d.as_array(), [0.0; 6]);
    }

    #[test]
    fn ramp_distances_match_closed_forms() {
        let widths = [0.2, 0.1, 0.05];
        let c = 3.0;
        let fam = family(&widths, c);
        for &w in &widths {
            let d = hypothesis_distances(&fam, w).unwrap();
            assert_eq!(d.cond1, 0.0);
            assert!((d.cond2 - c * w / 4.0).abs() < 1e-12);
            assert!((d.cond3 - c * w / 4.0).abs() < 1e-12);
            assert!((d.cond4 - c * c * w / 4.0).abs() < 1e-12);
            assert_eq!(d.cond5_alpha, 0.0);
        }
        assert!(hypothesis_distances(&fam, 0.3).is_err());
    }

    #[test]
    fn zero_strength_family_is_constant() {
        let fam = family(&[0.2, 0.1], 0.0);
        let rep = resolvent_distances(
            &fam,
            ConvergenceSettings {
                grid_n: 21,
                max_step: 0.1,
            },
        )
        .unwrap();
        for r in &rep.rows {
            assert_eq!(r.hypotheses.as_array(), [0.0; 6]);
            assert_eq!(r.mm_dev, 0.0);
            assert_eq!(r.hs_dist, Some(0.0));
        }
    }

    #[test]
    fn rotated_alpha_is_a_fixed_distance_away() {
        let fam = family(&[0.2, 0.1], 1.0).with_rotated_alpha(std::f64::consts::FRAC_PI_4);
        let d1 = hypothesis_distances(&fam, 0.2).unwrap().cond5_alpha;
        let d2 = hypothesis_distances(&fam, 0.1).unwrap().cond5_alpha;
        assert!(d1 > 0.5);
        assert_eq!(d1, d2);
        assert_eq!(hypothesis_distances(&fam, 0.1).unwrap().cond5_beta, 0.0);
    }

    #[test]
    fn constant_shift_deviation() {
        // Scalar R ≡ ε on (0, 1) embedded as the (0,0) entry of a 2x2 system.
        let eps = 0.3;
        let mut r = CMat::zeros(2, 2);
        r[(0, 0)] = C64::new(eps, 0.0);
        let sys = crate::ShinZettlMatrix::from_matrix(
            PiecewiseMatrixPoly::constant(0.0, 1.0, r).unwrap(),
            C64::new(0.0, 0.0),
        )
        .unwrap();
        let mesh = Mesh::uniform(sys.breakpoints(), 0.05).unwrap();
        let fs = propagate(&sys, &mesh).unwrap();
        let dev = fs
            .samples()
            .iter()
            .map(|z| spectral_norm(&(z - CMat::identity(2, 2))))
            .fold(0.0, f64::max);
        assert!((dev - (eps.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn ramp_must_fit() {
        assert!(mollified_step(0.0, 1.0, 0.05, 1.0, 0.2, 1).is_err());
    }

    #[test]
    fn mm_deviation_decreases() {
        let fam = family(&[0.2, 0.1, 0.05], 1.0);
        let devs: Vec<f64> = fam
            .epsilons()
            .iter()
            .map(|&e| mm_deviation(&fam, e, 0.01).unwrap())
            .collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    }
}
