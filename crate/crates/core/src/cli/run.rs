//! Task execution and report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::{
    Problem, ProblemConfig, TaskSpec, DEFAULT_CLASSIFY_TOL, DEFAULT_MAX_DEPTH, DEFAULT_SCAN_POINTS,
};
use crate::boundary::{
    abstract_boundary_form, classify, is_separated, wronskian_boundary_term, LinearBC,
};
use crate::convergence::{
    make_mollified_delta_family, resolvent_distances, ConvergenceReport, ConvergenceSettings,
};
use crate::green::{green_matrix, kernel_for, Grid};
use crate::propagator::{propagate, solve_inhomogeneous, Mesh, SINGULAR_COND};
use crate::spectral::{Eigenvalue, Rect, SpectralProblem, ACCEPT_RTOL};
use crate::{linalg, CVec, Error, Result, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskOutcome {
    pub index: usize,
    pub kind: String,
    pub files: Vec<String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub tasks: Vec<TaskOutcome>,
    pub exit_code: i32,
}

/// Run every task in order, writing `NN_kind.csv` files and `manifest.json`
/// into `out_dir`. Task failures are recorded and do not stop later tasks.
pub fn run(config: &ProblemConfig, out_dir: &Path) -> Result<ReportBundle> {
    let start = Instant::now();
    let problem = config.build()?;
    std::fs::create_dir_all(out_dir)?;
    let mut tasks = Vec::with_capacity(config.tasks.len());
    for (index, spec) in config.tasks.iter().enumerate() {
        let t0 = Instant::now();
        let stem = format!("{:02}_{}", index + 1, spec.kind());
        let mut done = Done::default();
        let result = run_task(&problem, spec, out_dir, &stem, &mut done);
        let (status, error, code) = match result {
            Ok(()) => ("ok".to_string(), None, EXIT_OK),
            Err(e) => ("failed".to_string(), Some(e.to_string()), exit_code(&e)),
        };
        tasks.push(TaskOutcome {
            index: index + 1,
            kind: spec.kind().to_string(),
            files: done.files,
            status,
            message: done.message,
            error,
            warnings: done.warnings,
            wall_time_s: t0.elapsed().as_secs_f64(),
            exit_code: code,
        });
    }
    let exit = tasks
        .iter()
        .map(|t| t.exit_code)
        .max_by_key(|&c| match c {
            EXIT_IO => 3,
            EXIT_NUMERICAL => 2,
            EXIT_CONFIG => 1,
            _ => 0,
        })
        .unwrap_or(EXIT_OK);
    let manifest = json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "config_toml": config.to_toml()?,
        "tolerances": {
            "eigen_accept_rtol": ACCEPT_RTOL,
            "singular_cond": SINGULAR_COND,
            "mesh_max_step": config.mesh.max_step,
            "grid_n": config.mesh.grid_n,
        },
        "tasks": tasks,
        "exit_code": exit,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&manifest_path, &(text + "\n"))?;
    Ok(ReportBundle {
        out_dir: out_dir.to_path_buf(),
        manifest: manifest_path,
        tasks,
        exit_code: exit,
    })
}

#[derive(Default)]
struct Done {
    files: Vec<String>,
    message: Option<String>,
    warnings: Vec<String>,
}

impl Done {
    fn write(&mut self, dir: &Path, name: String, body: &str) -> Result<()> {
        write_atomic(&dir.join(&name), body)?;
        self.files.push(name);
        Ok(())
    }
}

fn run_task(p: &Problem, spec: &TaskSpec, dir: &Path, stem: &str, done: &mut Done) -> Result<()> {
    match spec {
        TaskSpec::Eig {
            window,
            rectangle,
            scan_points,
            max_depth,
            eigenfunctions,
        } => {
            let sp = SpectralProblem::new(p.coeffs.clone(), p.boundary.linear(), p.mesh.max_step)?;
            let mut evs = if let Some([lo, hi]) = window {
                let out =
                    sp.eigenvalues_real_scan(*lo, *hi, scan_points.unwrap_or(DEFAULT_SCAN_POINTS))?;
                done.warnings = out.warnings;
                out.eigenvalues
            } else {
                let [rl, rh, il, ih] = rectangle.expect("validated");
                sp.eigenvalues_complex(
                    Rect::new(rl, rh, il, ih)?,
                    max_depth.unwrap_or(DEFAULT_MAX_DEPTH),
                )?
            };
            sort_eigenvalues(&mut evs);
            done.write(dir, format!("{stem}.csv"), &eigenvalue_csv(&evs))?;
            done.message = Some(format!("{} eigenvalue(s)", evs.len()));
            if *eigenfunctions {
                for (i, ev) in evs.iter().enumerate() {
                    for (m, ef) in sp.eigenfunctions(ev)?.iter().enumerate() {
                        let tr = &ef.trajectory;
                        let mut csv = String::from("t");
                        for k in 0..2 * tr.s() {
                            let _ = write!(csv, ",w{}_re,w{}_im", k + 1, k + 1);
                        }
                        csv.push('\n');
                        for (t, w) in tr.nodes().iter().zip(tr.values()) {
                            csv.push_str(&num(*t));
                            push_complex(&mut csv, w.iter());
                            csv.push('\n');
                        }
                        done.write(dir, format!("{stem}_ef{i}_{m}.csv"), &csv)?;
                    }
                }
            }
        }
        TaskSpec::Green { mu, grid_n } => {
            let (a, b) = p.coeffs.interval();
            let grid = Grid::uniform(a, b, grid_n.unwrap_or(p.mesh.grid_n))?;
            let mu = C64::new(mu[0], mu[1]);
            let k = kernel_for(&p.coeffs, &p.boundary.linear(), mu, &grid, p.mesh.max_step)?;
            let s = k.s();
            let mut csv = String::from("t,tau");
            for r in 0..s {
                for c in 0..s {
                    let _ = write!(csv, ",g{}{}_re,g{}{}_im", r + 1, c + 1, r + 1, c + 1);
                }
            }
            csv.push('\n');
            let pts = grid.points();
            for (i, &t) in pts.iter().enumerate() {
                for (j, &tau) in pts.iter().enumerate() {
                    csv.push_str(&num(t));
                    csv.push(',');
                    csv.push_str(&num(tau));
                    push_complex(&mut csv, k.get(i, j).transpose().iter());
                    csv.push('\n');
                }
            }
            done.write(dir, format!("{stem}.csv"), &csv)?;
            done.message = Some(format!("hs_norm={}", crate::green::hs_norm(&k)));
        }
        TaskSpec::Classify { tol } => {
            let can = p.boundary.canonical().ok_or_else(|| {
                Error::InvalidArgument(
                    "classify needs a canonical or separated boundary spec".into(),
                )
            })?;
            let tol = tol.unwrap_or(DEFAULT_CLASSIFY_TOL);
            let class = classify(&can, tol);
            let (sep, sep_res) = is_separated(can.k(), tol);
            let csv = format!(
                "kind,norm_K,unitary_defect,separated,separated_residual\n{},{},{},{},{}\n",
                class.kind,
                num(class.norm_k),
                num(class.unitary_defect),
                sep,
                num(sep_res)
            );
            done.write(dir, format!("{stem}.csv"), &csv)?;
            done.message = Some(class.to_string());
        }
        TaskSpec::Converge {
            t0,
            strength,
            widths,
            mu,
            negative_control,
            grid_n,
        } => {
            let settings = ConvergenceSettings {
                grid_n: grid_n.unwrap_or(p.mesh.grid_n),
                max_step: p.mesh.max_step,
            };
            let fam = make_mollified_delta_family(
                p.coeffs.interval(),
                p.coeffs.dim(),
                *t0,
                *strength,
                widths,
                &p.boundary.linear(),
                C64::new(mu[0], mu[1]),
            )?;
            let rep = resolvent_distances(&fam, settings)?;
            done.write(dir, format!("{stem}.csv"), &report_csv(&rep))?;
            let mut msg = verdict(&rep);
            if let Some(angle) = negative_control {
                let neg = resolvent_distances(&fam.with_rotated_alpha(*angle), settings)?;
                done.write(dir, format!("{stem}_negative.csv"), &report_csv(&neg))?;
                msg.push_str("; negative control: ");
                msg.push_str(&verdict(&neg));
            }
            done.message = Some(msg);
        }
        TaskSpec::Check { suites, tol } => {
            let mut csv = String::from("suite,value,tolerance,status\n");
            let mut failed = Vec::new();
            for suite in suites {
                let (value, default_tol) = check_suite(p, suite)?;
                let tol = tol.unwrap_or(default_tol);
                let status = match value {
                    None => "skipped",
                    Some(v) if v <= tol => "ok",
                    Some(_) => {
                        failed.push(suite.clone());
                        "fail"
                    }
                };
                let _ = writeln!(
                    csv,
                    "{suite},{},{},{status}",
                    value.map(num).unwrap_or_default(),
                    num(tol)
                );
            }
            done.write(dir, format!("{stem}.csv"), &csv)?;
            if !failed.is_empty() {
                return Err(Error::CheckFailed(failed.join(", ")));
            }
            done.message = Some(format!("{} suite(s) passed or skipped", suites.len()));
        }
    }
    Ok(())
}

fn verdict(rep: &ConvergenceReport) -> String {
    format!(
        "hypotheses_vanish={}, hs_decreasing={}, mm_decreasing={}, chain_holds={}",
        rep.hypotheses_vanish, rep.hs_decreasing, rep.mm_decreasing, rep.chain_holds
    )
}

fn sort_eigenvalues(evs: &mut [Eigenvalue]) {
    evs.sort_by(|x, y| {
        x.lambda
            .re
            .total_cmp(&y.lambda.re)
            .then(x.lambda.im.total_cmp(&y.lambda.im))
    });
}

/// Seventeen significant digits, fixed layout.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_complex<'a>(csv: &mut String, it: impl Iterator<Item = &'a C64>) {
    for z in it {
        csv.push(',');
        csv.push_str(&num(z.re));
        csv.push(',');
        csv.push_str(&num(z.im));
    }
}

pub fn eigenvalue_csv(evs: &[Eigenvalue]) -> String {
    let mut csv = String::from("index,re,im,multiplicity,residual\n");
    for (i, ev) in evs.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{},{},{},{}",
            num(ev.lambda.re),
            num(ev.lambda.im),
            ev.multiplicity,
            num(ev.residual)
        );
    }
    csv
}

pub fn report_csv(rep: &ConvergenceReport) -> String {
    let mut csv = String::from(
        "eps,cond1,cond2,cond3,cond4,cond5_alpha,cond5_beta,mm_dev,hs_dist,sup_dist,status\n",
    );
    for r in &rep.rows {
        csv.push_str(&num(r.eps));
        for v in r.hypotheses.as_array() {
            csv.push(',');
            csv.push_str(&num(v));
        }
        let _ = writeln!(
            csv,
            ",{},{},{},{}",
            num(r.mm_dev),
            r.hs_dist.map(num).unwrap_or_default(),
            r.sup_dist.map(num).unwrap_or_default(),
            r.status.replace(',', ";")
        );
    }
    csv
}

/// Write via a temporary sibling and rename.
pub fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Value of one invariant suite (None when it does not apply) and its default
/// tolerance.
fn check_suite(p: &Problem, suite: &str) -> Result<(Option<f64>, f64)> {
    let c = &p.coeffs;
    let mesh = Mesh::uniform(c.breakpoints(), p.mesh.max_step)?;
    let probes = [C64::new(0.0, 0.0), C64::new(1.0, 1.0), C64::new(-2.5, 0.5)];
    match suite {
        "liouville" => {
            let mut worst = 0.0f64;
            for &l in &probes {
                worst = worst.max(propagate(&c.shin_zettl(l), &mesh)?.det_defect());
            }
            Ok((Some(worst), 1e-10))
        }
        "symplectic" => {
            if !c.is_hermitian() {
                return Ok((None, 1e-10));
            }
            let mut worst = 0.0f64;
            for l in [0.0, 2.0, -3.0] {
                let fs = propagate(&c.shin_zettl(C64::new(l, 0.0)), &mesh)?;
                let scale = fs
                    .samples()
                    .iter()
                    .map(linalg::spectral_norm)
                    .fold(1.0f64, f64::max);
                worst = worst.max(fs.symplectic_defect() / (scale * scale));
            }
            Ok((Some(worst), 1e-10))
        }
        "green_jump" => {
            let (a, b) = c.interval();
            let grid = Grid::uniform(a, b, 21)?;
            let bc = p.boundary.linear();
            for mu in [C64::new(0.0, 1.0), C64::new(-1.0, 0.5), C64::new(0.5, 3.0)] {
                match green_matrix(&c.shin_zettl(mu), &bc, &grid, p.mesh.max_step) {
                    Ok(gm) => {
                        let n = 2 * c.dim();
                        let worst = (1..grid.len() - 1)
                            .map(|i| (gm.diagonal_jump(i) + crate::CMat::identity(n, n)).norm())
                            .fold(0.0, f64::max);
                        return Ok((Some(worst), 1e-9));
                    }
                    Err(Error::NotInResolventSet { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok((None, 1e-9))
        }
        "triplet" => {
            let fs = propagate(&c.shin_zettl(probes[1]), &mesh)?;
            let adj = propagate(&c.adjoint().shin_zettl(probes[1].conj()), &mesh)?;
            let (za, zb) = (&fs.samples()[0], fs.end());
            let (ua, ub) = (&adj.samples()[0], adj.end());
            let mut worst = 0.0f64;
            for j in 0..za.ncols() {
                for k in 0..ua.ncols() {
                    let (wa, wb): (CVec, CVec) = (za.column(j).into(), zb.column(j).into());
                    let (va, vb): (CVec, CVec) = (ua.column(k).into(), ub.column(k).into());
                    let lhs = abstract_boundary_form(&wa, &wb, &va, &vb)?;
                    let rhs = wronskian_boundary_term(&wa, &wb, &va, &vb);
                    let scale = (wa.norm() + wb.norm()) * (va.norm() + vb.norm());
                    worst = worst.max((lhs - rhs).norm() / scale.max(1.0));
                }
            }
            Ok((Some(worst), 1e-12))
        }
        "lagrange" => {
            let s = c.dim();
            let f_y = move |_t: f64| CVec::from_element(s, C64::new(1.0, 0.0));
            let f_z = move |t: f64| CVec::from_fn(s, |i, _| C64::new(1.0 + t, 0.5 * i as f64));
            let adj = c.adjoint();
            let zero = C64::new(0.0, 0.0);
            for bc in [
                p.boundary.linear(),
                LinearBC::dirichlet(s),
                LinearBC::neumann(s),
            ] {
                let y = solve_inhomogeneous(&c.shin_zettl(zero), f_y, &bc, &mesh);
                let z = solve_inhomogeneous(&adj.shin_zettl(zero), f_z, &bc, &mesh);
                match (y, z) {
                    (Ok(y), Ok(z)) => {
                        let r = crate::green::greens_formula_residual(c, &y, f_y, &z, f_z)?;
                        return Ok((Some(r.norm()), 1e-7));
                    }
                    (Err(Error::NotInResolventSet { .. }), _)
                    | (_, Err(Error::NotInResolventSet { .. })) => continue,
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
            Ok((None, 1e-7))
        }
        other => Err(Error::Config(format!("unknown check suite `{other}`"))),
    }
}
