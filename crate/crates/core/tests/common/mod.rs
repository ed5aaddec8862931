//! Random problem generators shared by the integration tests.
#![allow(dead_code)]

use distsl::linalg::{expm, spectral_norm};
use distsl::{CMat, PiecewiseMatrixPoly, C64};
use rand::Rng;

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn random_cmat<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let m = random_cmat(rng, n, scale);
    (&m + m.adjoint()) * c(0.5)
}

/// `exp(iH)` for a random Hermitian `H`.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    expm(&(random_hermitian(rng, n, 2.0) * C64::new(0.0, 1.0)))
}

/// Random matrix rescaled to spectral norm `norm`.
pub fn random_contraction<R: Rng>(rng: &mut R, n: usize, norm: f64) -> CMat {
    let m = random_cmat(rng, n, 1.0);
    let k = spectral_norm(&m);
    m * c(norm / k)
}

/// Random piecewise polynomial on `[a, b]` with up to `max_pieces` pieces of
/// degree up to `max_degree`; Hermitian coefficients when asked.
pub fn random_poly<R: Rng>(
    rng: &mut R,
    (a, b): (f64, f64),
    s: usize,
    hermitian: bool,
    max_pieces: usize,
    max_degree: usize,
    scale: f64,
) -> PiecewiseMatrixPoly {
    let n = rng.gen_range(1..=max_pieces);
    let mut inner: Vec<f64> = (1..n)
        .map(|_| rng.gen_range(a + 0.1 * (b - a)..b - 0.1 * (b - a)))
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
    let mut bps = vec![a];
    bps.extend(inner);
    bps.push(b);
    let pieces = (0..bps.len() - 1)
        .map(|_| {
            let d = rng.gen_range(0..=max_degree);
            (0..=d)
                .map(|_| {
                    if hermitian {
                        random_hermitian(rng, s, scale)
                    } else {
                        random_cmat(rng, s, scale)
                    }
                })
                .collect()
        })
        .collect();
    PiecewiseMatrixPoly::new(bps, pieces).unwrap()
}

/// `I + (random perturbation)` as `p⁻¹`.
pub fn random_p_inv<R: Rng>(
    rng: &mut R,
    interval: (f64, f64),
    s: usize,
    hermitian: bool,
) -> PiecewiseMatrixPoly {
    random_poly(rng, interval, s, hermitian, 2, 1, 0.3).add_constant(&CMat::identity(s, s))
}
