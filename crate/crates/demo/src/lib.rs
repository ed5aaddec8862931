//! WebAssembly bindings for the static page in `www/`.
//!
//! The model is `-y'' + c·δ(t - t0) y = λ y` on `(0, 1)` with Dirichlet ends,
//! encoded as the step `Q = c·𝟙(t > t0)`. Three operations are exported:
//! the σ_min curve of the characteristic matrix, eigenpairs, and a Green
//! kernel heatmap.

use distsl::green::kernel_for;
use distsl::linalg::singular_values;
use distsl::spectral::SpectralProblem;
use distsl::{CMat, CoefficientSet, Grid, LinearBC, PiecewiseMatrixPoly, C64};
use wasm_bindgen::prelude::*;

const MAX_STEP: f64 = 0.05;

fn problem(strength: f64, t0: f64) -> Result<SpectralProblem, String> {
    if !(t0 > 0.0 && t0 < 1.0) {
        return Err(format!("t0 = {t0} must lie inside (0, 1)"));
    }
    let q = PiecewiseMatrixPoly::step(
        0.0,
        1.0,
        t0,
        CMat::zeros(1, 1),
        CMat::identity(1, 1) * C64::new(strength, 0.0),
    )
    .map_err(|e| e.to_string())?;
    let set = CoefficientSet::with_unit_p(q, true).map_err(|e| e.to_string())?;
    SpectralProblem::new(set, LinearBC::dirichlet(1), MAX_STEP).map_err(|e| e.to_string())
}

/// `[λ, σ_min(D(λ)) / σ_max(D(λ))]` pairs, flattened, on `n` points of `[lo, hi]`.
pub fn sigma_curve(strength: f64, t0: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    if n < 2 || lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err("need n >= 2 and lo < hi".into());
    }
    let sp = problem(strength, t0)?;
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let l = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let sv = singular_values(&sp.char_matrix(C64::new(l, 0.0)));
        out.push(l);
        out.push(sv[sv.len() - 1] / sv[0]);
    }
    Ok(out)
}

/// Eigenvalues in `[lo, hi]` followed by each normalised eigenfunction sampled
/// at `samples` points: `[count, λ₁..λₖ, y₁(t₀..), y₂(t₀..), ...]`.
pub fn eigenpairs(
    strength: f64,
    t0: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<f64>, String> {
    let sp = problem(strength, t0)?;
    let evs = sp
        .eigenvalues_real_scan(lo, hi, 400)
        .map_err(|e| e.to_string())?
        .eigenvalues;
    let mut out = vec![evs.len() as f64];
    out.extend(evs.iter().map(|e| e.lambda.re));
    for ev in &evs {
        let efs = sp.eigenfunctions(ev).map_err(|e| e.to_string())?;
        let tr = &efs[0].trajectory;
        for i in 0..samples {
            let t = i as f64 / (samples - 1).max(1) as f64;
            out.push(tr.eval(t).map_err(|e| e.to_string())?[0].re);
        }
    }
    Ok(out)
}

/// Row-major `n × n` values of the resolvent kernel at real `mu`.
pub fn green_heatmap(strength: f64, t0: f64, mu: f64, n: usize) -> Result<Vec<f64>, String> {
    let sp = problem(strength, t0)?;
    let grid = Grid::uniform(0.0, 1.0, n).map_err(|e| e.to_string())?;
    let k = kernel_for(sp.coeffs(), sp.bc(), C64::new(mu, 0.0), &grid, MAX_STEP)
        .map_err(|e| e.to_string())?;
    Ok(k.values().iter().map(|g| g[(0, 0)].re).collect())
}

#[wasm_bindgen(js_name = sigmaCurve)]
pub fn sigma_curve_js(
    strength: f64,
    t0: f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    sigma_curve(strength, t0, lo, hi, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = eigenpairs)]
pub fn eigenpairs_js(
    strength: f64,
    t0: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    eigenpairs(strength, t0, lo, hi, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = greenHeatmap)]
pub fn green_heatmap_js(strength: f64, t0: f64, mu: f64, n: usize) -> Result<Vec<f64>, JsError> {
    green_heatmap(strength, t0, mu, n).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_case_has_n_squared_pi_squared() {
        let out = eigenpairs(0.0, 0.5, 1.0, 50.0, 11).unwrap();
        assert_eq!(out[0], 2.0);
        assert!((out[1] - PI * PI).abs() < 1e-8);
        assert!((out[2] - 4.0 * PI * PI).abs() < 1e-7);
        // sqrt(2) sin(pi t) at t = 1/2.
        assert!((out[3 + 5] - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn sigma_dips_at_eigenvalue() {
        let out = sigma_curve(0.0, 0.5, 9.0, 10.5, 31).unwrap();
        let (argmin, _) =
            out.chunks(2)
                .map(|p| (p[0], p[1]))
                .fold(
                    (0.0, f64::INFINITY),
                    |acc, p| if p.1 < acc.1 { p } else { acc },
                );
        assert!((argmin - PI * PI).abs() < 0.06);
    }

    #[test]
    fn heatmap_is_symmetric_and_vanishes_on_edges() {
        let n = 9;
        let h = green_heatmap(5.0, 0.3, -1.0, n).unwrap();
        for i in 0..n {
            assert!(h[i].abs() < 1e-12 && h[i * n].abs() < 1e-12);
            for j in 0..n {
                assert!((h[i * n + j] - h[j * n + i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_t0_outside() {
        assert!(sigma_curve(1.0, 1.5, 0.0, 1.0, 3).is_err());
    }
}
