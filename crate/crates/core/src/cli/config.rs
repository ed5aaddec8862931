//! Problem configuration: a single TOML file with explicit matrices.
//!
//! Complex numbers are `[re, im]` pairs. A matrix is either a row-major list
//! of `n * n` pairs or one of the names `"identity"`, `"zero"`,
//! `"-identity"`. A piecewise polynomial is either `"identity"` / `"zero"` or
//! a table `{ breakpoints = [...], pieces = [{ degree = d, coeffs = [...] }] }`
//! where `coeffs` holds `d + 1` row-major matrices, the coefficient of
//! `(t - left)^k` coming k-th.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{
    block_diagonal, canonical_to_linear, separated_conditions, CanonicalBC, LinearBC, Variant,
};
use crate::coeffs::CoefficientSet;
use crate::poly::PiecewiseMatrixPoly;
use crate::{CMat, Error, Result, C64};

pub const DEFAULT_MAX_STEP: f64 = 0.05;
pub const DEFAULT_GRID_N: usize = 201;
pub const DEFAULT_SCAN_POINTS: usize = 400;
pub const DEFAULT_MAX_DEPTH: usize = 10;
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub interval: [f64; 2],
    pub dim: usize,
    #[serde(default = "yes")]
    pub hermitian: bool,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default, rename = "task")]
    pub tasks: Vec<TaskSpec>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    #[serde(default = "identity_poly")]
    pub p_inv: PolySpec,
    #[serde(default = "zero_poly")]
    pub q: PolySpec,
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        Self {
            p_inv: identity_poly(),
            q: zero_poly(),
        }
    }
}

fn identity_poly() -> PolySpec {
    PolySpec::Named("identity".into())
}

fn zero_poly() -> PolySpec {
    PolySpec::Named("zero".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Named(String),
    Explicit {
        breakpoints: Vec<f64>,
        pieces: Vec<PieceSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub degree: usize,
    pub coeffs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Named(String),
    Entries(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<CanonicalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separated: Option<SeparatedSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalSpec {
    #[serde(rename = "K")]
    pub k: MatrixSpec,
    #[serde(default = "lk")]
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub alpha: MatrixSpec,
    pub beta: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparatedSpec {
    #[serde(rename = "K_a")]
    pub k_a: MatrixSpec,
    #[serde(rename = "K_b")]
    pub k_b: MatrixSpec,
    #[serde(default = "lk")]
    pub variant: Variant,
}

fn lk() -> Variant {
    Variant::LK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            max_step: DEFAULT_MAX_STEP,
            grid_n: DEFAULT_GRID_N,
        }
    }
}

fn default_max_step() -> f64 {
    DEFAULT_MAX_STEP
}

fn default_grid_n() -> usize {
    DEFAULT_GRID_N
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskSpec {
    /// Exactly one of `window` (real scan) or `rectangle`
    /// (`[re_lo, re_hi, im_lo, im_hi]`, argument principle).
    Eig {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rectangle: Option<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scan_points: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_depth: Option<usize>,
        #[serde(default, skip_serializing_if = "is_false")]
        eigenfunctions: bool,
    },
    Green {
        mu: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_n: Option<usize>,
    },
    Classify {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
    /// Mollified-delta family `Q₀ = c·𝟙(t > t0)` on the configured interval
    /// and boundary; the configured coefficients are not used.
    Converge {
        t0: f64,
        strength: f64,
        widths: Vec<f64>,
        mu: [f64; 2],
        /// Rotation angle for the violated-boundary control run.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        negative_control: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_n: Option<usize>,
    },
    Check {
        #[serde(default = "all_suites")]
        suites: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
}

fn is_false(b: &bool) -> bool {
    !*b
}

pub const SUITES: [&str; 5] = [
    "liouville",
    "symplectic",
    "green_jump",
    "triplet",
    "lagrange",
];

fn all_suites() -> Vec<String> {
    SUITES.iter().map(|s| s.to_string()).collect()
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskSpec::Eig { .. } => "eig",
            TaskSpec::Green { .. } => "green",
            TaskSpec::Classify { .. } => "classify",
            TaskSpec::Converge { .. } => "converge",
            TaskSpec::Check { .. } => "check",
        }
    }

    fn validate(&self, idx: usize, a: f64, b: f64) -> Result<()> {
        let field = |name: &str| format!("task[{idx}].{name}");
        match self {
            TaskSpec::Eig {
                window,
                rectangle,
                scan_points,
                ..
            } => {
                match (window, rectangle) {
                    (Some([lo, hi]), None) if lo < hi => {}
                    (Some(_), None) => {
                        return Err(cfg(format!("{}: need lo < hi", field("window"))))
                    }
                    (None, Some([rl, rh, il, ih])) if rl < rh && il < ih => {}
                    (None, Some(_)) => {
                        return Err(cfg(format!("{}: degenerate rectangle", field("rectangle"))))
                    }
                    _ => {
                        return Err(cfg(format!(
                            "task[{idx}]: eig needs exactly one of `window` or `rectangle`"
                        )))
                    }
                }
                if matches!(scan_points, Some(n) if *n < 2) {
                    return Err(cfg(format!("{}: need at least 2", field("scan_points"))));
                }
            }
            TaskSpec::Green { grid_n, .. } => {
                if matches!(grid_n, Some(n) if *n < 2) {
                    return Err(cfg(format!("{}: need at least 2", field("grid_n"))));
                }
            }
            TaskSpec::Classify { tol } | TaskSpec::Check { tol, .. } => {
                if matches!(tol, Some(t) if !(*t > 0.0)) {
                    return Err(cfg(format!("{}: must be positive", field("tol"))));
                }
                if let TaskSpec::Check { suites, .. } = self {
                    for s in suites {
                        if !SUITES.contains(&s.as_str()) {
                            return Err(cfg(format!(
                                "{}: unknown suite `{s}` (known: {})",
                                field("suites"),
                                SUITES.join(", ")
                            )));
                        }
                    }
                }
            }
            TaskSpec::Converge { t0, widths, .. } => {
                if widths.is_empty() {
                    return Err(cfg(format!("{}: empty", field("widths"))));
                }
                for &w in widths {
                    if !(w > 0.0) || t0 - w / 2.0 <= a || t0 + w / 2.0 >= b {
                        return Err(cfg(format!(
                            "{}: ramp of width {w} around t0 = {t0} leaves ({a}, {b})",
                            field("widths")
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn cfg(msg: String) -> Error {
    Error::Config(msg)
}

/// Boundary condition after preset expansion.
#[derive(Debug, Clone)]
pub enum ResolvedBoundary {
    Canonical(CanonicalBC),
    Separated {
        k_a: CMat,
        k_b: CMat,
        variant: Variant,
        linear: LinearBC,
    },
    Linear(LinearBC),
}

impl ResolvedBoundary {
    pub fn linear(&self) -> LinearBC {
        match self {
            ResolvedBoundary::Canonical(c) => canonical_to_linear(c),
            ResolvedBoundary::Separated { linear, .. } => linear.clone(),
            ResolvedBoundary::Linear(l) => l.clone(),
        }
    }

    /// Canonical form, when one was given (separated specs give `diag(K_a, K_b)`).
    pub fn canonical(&self) -> Option<CanonicalBC> {
        match self {
            ResolvedBoundary::Canonical(c) => Some(c.clone()),
            ResolvedBoundary::Separated {
                k_a, k_b, variant, ..
            } => CanonicalBC::new(block_diagonal(k_a, k_b), *variant).ok(),
            ResolvedBoundary::Linear(_) => None,
        }
    }
}

/// Validated numerical objects built from a config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub coeffs: CoefficientSet,
    pub boundary: ResolvedBoundary,
    pub mesh: MeshSpec,
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ProblemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<ProblemConfig> {
    let config: ProblemConfig =
        toml::from_str(text).map_err(|e| cfg(e.to_string().trim_end().to_string()))?;
    config.build()?;
    Ok(config)
}

impl ProblemConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg(e.to_string()))
    }

    /// Validate and assemble coefficients and boundary condition.
    pub fn build(&self) -> Result<Problem> {
        let [a, b] = self.interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(cfg(format!("interval: need finite a < b, got [{a}, {b}]")));
        }
        let s = self.dim;
        if s == 0 {
            return Err(cfg("dim: must be at least 1".into()));
        }
        if !(self.mesh.max_step > 0.0) {
            return Err(cfg("mesh.max_step: must be positive".into()));
        }
        if self.mesh.grid_n < 2 {
            return Err(cfg("mesh.grid_n: need at least 2".into()));
        }
        let p_inv = build_poly(&self.coefficients.p_inv, "coefficients.p_inv", a, b, s)?;
        let q = build_poly(&self.coefficients.q, "coefficients.q", a, b, s)?;
        let coeffs = CoefficientSet::new(p_inv, q, self.hermitian)
            .map_err(|e| cfg(format!("coefficients: {e}")))?;
        let boundary = build_boundary(&self.boundary, s)?;
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate(i, a, b)?;
        }
        Ok(Problem {
            coeffs,
            boundary,
            mesh: self.mesh,
        })
    }
}

fn build_matrix(spec: &MatrixSpec, field: &str, n: usize) -> Result<CMat> {
    match spec {
        MatrixSpec::Named(name) => match name.as_str() {
            "identity" => Ok(CMat::identity(n, n)),
            "-identity" => Ok(-CMat::identity(n, n)),
            "zero" => Ok(CMat::zeros(n, n)),
            other => Err(cfg(format!(
                "{field}: unknown matrix name `{other}` (expected identity, -identity or zero)"
            ))),
        },
        MatrixSpec::Entries(e) => {
            if e.len() != n * n {
                return Err(cfg(format!(
                    "{field}: expected {n}x{n} = {} entries, got {}",
                    n * n,
                    e.len()
                )));
            }
            Ok(CMat::from_row_iterator(
                n,
                n,
                e.iter().map(|&[re, im]| C64::new(re, im)),
            ))
        }
    }
}

fn build_poly(
    spec: &PolySpec,
    field: &str,
    a: f64,
    b: f64,
    s: usize,
) -> Result<PiecewiseMatrixPoly> {
    let poly = match spec {
        PolySpec::Named(name) => match name.as_str() {
            "identity" => PiecewiseMatrixPoly::identity(a, b, s),
            "zero" => PiecewiseMatrixPoly::zeros(a, b, s),
            other => {
                return Err(cfg(format!(
                    "{field}: unknown name `{other}` (expected identity or zero)"
                )))
            }
        },
        PolySpec::Explicit { breakpoints, pieces } => {
            if pieces.len() + 1 != breakpoints.len() {
                return Err(cfg(format!(
                    "{field}: {} breakpoints need {} pieces, got {}",
                    breakpoints.len(),
                    breakpoints.len().saturating_sub(1),
                    pieces.len()
                )));
            }
            let mut out = Vec::with_capacity(pieces.len());
            for (i, p) in pieces.iter().enumerate() {
                let per = s * s;
                if p.coeffs.len() != (p.degree + 1) * per {
                    return Err(cfg(format!(
                        "{field}.pieces[{i}].coeffs: degree {} with {s}x{s} matrices needs {} entries, got {}",
                        p.degree,
                        (p.degree + 1) * per,
                        p.coeffs.len()
                    )));
                }
                out.push(
                    p.coeffs
                        .chunks(per)
                        .map(|c| CMat::from_row_iterator(s, s, c.iter().map(|&[re, im]| C64::new(re, im))))
                        .collect(),
                );
            }
            PiecewiseMatrixPoly::new(breakpoints.clone(), out)
        }
    }
    .map_err(|e| cfg(format!("{field}: {e}")))?;
    let (pa, pb) = poly.interval();
    let tol = 1e-13 * (b - a).abs().max(1.0);
    if (pa - a).abs() > tol || (pb - b).abs() > tol {
        return Err(cfg(format!(
            "{field}: breakpoints span [{pa}, {pb}] but the interval is [{a}, {b}]"
        )));
    }
    Ok(poly)
}

fn build_boundary(spec: &BoundarySpec, s: usize) -> Result<ResolvedBoundary> {
    let mut given = Vec::new();
    if spec.preset.is_some() {
        given.push("preset");
    }
    if spec.canonical.is_some() {
        given.push("canonical");
    }
    if spec.linear.is_some() {
        given.push("linear");
    }
    if spec.separated.is_some() {
        given.push("separated");
    }
    if given.len() != 1 {
        return Err(cfg(format!(
            "boundary: exactly one boundary spec must be given (preset, canonical, linear or separated); found {}",
            if given.is_empty() { "none".to_string() } else { given.join(", ") }
        )));
    }
    let n = 2 * s;
    let wrap = |field: &'static str| move |e: Error| cfg(format!("{field}: {e}"));
    if let Some(p) = &spec.preset {
        return match p.as_str() {
            "dirichlet" => Ok(ResolvedBoundary::Canonical(
                CanonicalBC::new(CMat::identity(n, n), Variant::LK).map_err(wrap("boundary.preset"))?,
            )),
            "neumann" => Ok(ResolvedBoundary::Canonical(
                CanonicalBC::new(-CMat::identity(n, n), Variant::LK).map_err(wrap("boundary.preset"))?,
            )),
            "periodic" => Ok(ResolvedBoundary::Linear(LinearBC::periodic(s))),
            other => Err(cfg(format!(
                "boundary.preset: unknown preset `{other}` (expected dirichlet, neumann or periodic)"
            ))),
        };
    }
    if let Some(c) = &spec.canonical {
        let k = build_matrix(&c.k, "boundary.canonical.K", n)?;
        return Ok(ResolvedBoundary::Canonical(
            CanonicalBC::new(k, c.variant).map_err(wrap("boundary.canonical"))?,
        ));
    }
    if let Some(l) = &spec.linear {
        let alpha = build_matrix(&l.alpha, "boundary.linear.alpha", n)?;
        let beta = build_matrix(&l.beta, "boundary.linear.beta", n)?;
        return Ok(ResolvedBoundary::Linear(
            LinearBC::new(alpha, beta).map_err(wrap("boundary.linear"))?,
        ));
    }
    let sp = spec.separated.as_ref().expect("one spec present");
    let k_a = build_matrix(&sp.k_a, "boundary.separated.K_a", s)?;
    let k_b = build_matrix(&sp.k_b, "boundary.separated.K_b", s)?;
    let linear =
        separated_conditions(&k_a, &k_b, sp.variant).map_err(wrap("boundary.separated"))?;
    Ok(ResolvedBoundary::Separated {
        k_a,
        k_b,
        variant: sp.variant,
        linear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREE: &str = r#"
interval = [0.0, 3.141592653589793]
dim = 1

[boundary.canonical]
K = "identity"
"#;

    #[test]
    fn minimal_dirichlet_config() {
        let c = parse_config_str(FREE).unwrap();
        let p = c.build().unwrap();
        let can = p.boundary.canonical().unwrap();
        assert_eq!(can.k(), &CMat::identity(2, 2));
        assert_eq!(can.variant(), Variant::LK);
        assert!(p.coeffs.is_hermitian());
        assert_eq!(c.mesh, MeshSpec::default());
    }

    #[test]
    fn two_boundary_specs_rejected() {
        let text = format!("{FREE}\n[boundary.linear]\nalpha = \"identity\"\nbeta = \"zero\"\n");
        let e = parse_config_str(&text).unwrap_err().to_string();
        assert!(e.contains("exactly one boundary spec"), "{e}");
    }

    #[test]
    fn wrong_k_size_names_field() {
        let entries = ["[1.0, 0.0]"; 9].join(", ");
        let text =
            format!("interval = [0.0, 1.0]\ndim = 2\n[boundary.canonical]\nK = [{entries}]\n");
        let e = parse_config_str(&text).unwrap_err().to_string();
        assert!(e.contains("boundary.canonical.K"), "{e}");
        assert!(e.contains("16"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = parse_config_str("interval = [0.0, 1.0]\ndim = \"two\"\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = format!("{FREE}\n[mesh]\nmax_stepp = 0.1\n");
        assert!(parse_config_str(&text).is_err());
    }

    #[test]
    fn explicit_step_potential() {
        let text = r#"
interval = [0.0, 1.0]
dim = 1
[coefficients.q]
breakpoints = [0.0, 0.5, 1.0]
pieces = [{ degree = 0, coeffs = [[0.0, 0.0]] }, { degree = 1, coeffs = [[10.0, 0.0], [2.0, 0.0]] }]
[boundary]
preset = "dirichlet"
"#;
        let p = parse_config_str(text).unwrap().build().unwrap();
        assert!((p.coeffs.q().eval(0.75).unwrap()[(0, 0)].re - 10.5).abs() < 1e-14);
        let bad = text.replace("[2.0, 0.0]]", "]");
        let e = parse_config_str(&bad).unwrap_err().to_string();
        assert!(e.contains("coefficients.q.pieces[1].coeffs"), "{e}");
    }

    #[test]
    fn presets() {
        for (name, canonical) in [("dirichlet", true), ("neumann", true), ("periodic", false)] {
            let text = format!("interval = [0.0, 1.0]\ndim = 2\n[boundary]\npreset = \"{name}\"\n");
            let p = parse_config_str(&text).unwrap().build().unwrap();
            assert_eq!(p.boundary.canonical().is_some(), canonical);
            assert_eq!(p.boundary.linear().s(), 2);
        }
    }

    #[test]
    fn eig_task_needs_one_region() {
        let text = format!("{FREE}\n[[task]]\nkind = \"eig\"\n");
        assert!(parse_config_str(&text).is_err());
        let text = format!("{FREE}\n[[task]]\nkind = \"eig\"\nwindow = [0.5, 20.0]\n");
        assert!(parse_config_str(&text).is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
interval = [0.0, 1.0]
dim = 2
hermitian = false
[coefficients.q]
breakpoints = [0.0, 1.0]
pieces = [{ degree = 0, coeffs = [[1.0, 0.5], [0.0, 0.0], [0.0, 0.0], [2.0, 0.0]] }]
[boundary.separated]
K_a = "zero"
K_b = [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]]
variant = "LUpperK"
[mesh]
max_step = 0.1
[[task]]
kind = "classify"
[[task]]
kind = "converge"
t0 = 0.5
strength = 1.0
widths = [0.2, 0.1]
mu = [-1.0, 0.0]
negative_control = 0.7
[[task]]
kind = "check"
"#;
        let c = parse_config_str(text).unwrap();
        let again = parse_config_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
