//! Batch runs over a hierarchy of uniformly refined meshes, producing the
//! per-level table (energies, majorant, bounds) and the output files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::dual_solver::{solve_two_phase, DualSolveOptions};
use crate::error::{Error, Result};
use crate::io::{write_csv, write_majorant_log, write_vtk};
use crate::majorant::{energy_bounds, optimize_majorant, MajorantOptions};
use crate::mesh::TriMesh;
use crate::problems::{example1_spec, example2_spec, reference_solution, ProblemSpec};

/// Slack allowed when checking `majorant >= J(v) - J_ref` at every sweep.
pub const BOUND_SLACK: f64 = 1e-10;

/// What the energy gap is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// Closed-form minimal energy of the problem.
    Exact,
    /// Discrete solution one level above the finest requested level.
    LevelPlusOne,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// 1 or 2.
    pub example: u8,
    pub levels: usize,
    pub majorant_iters: usize,
    pub qp_tol: f64,
    pub reference: Reference,
    pub output_dir: PathBuf,
    pub emit_vtk: bool,
    pub friedrichs_override: Option<f64>,
}

impl RunConfig {
    /// Defaults: five levels, 1000 sweeps, KKT tolerance 1e-9; the exact
    /// energy for Example I and the level-plus-one reference for Example II.
    pub fn new(example: u8, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            example,
            levels: 5,
            majorant_iters: 1000,
            qp_tol: 1e-9,
            reference: if example == 1 {
                Reference::Exact
            } else {
                Reference::LevelPlusOne
            },
            output_dir: output_dir.into(),
            emit_vtk: false,
            friedrichs_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.example, 1 | 2) {
            return Err(Error::Configuration(format!(
                "unknown example {}",
                self.example
            )));
        }
        if self.levels == 0 {
            return Err(Error::Configuration("levels must be at least 1".into()));
        }
        if !(self.qp_tol > 0.0) {
            return Err(Error::Configuration(format!(
                "qp tolerance must be positive, got {}",
                self.qp_tol
            )));
        }
        if let Some(c) = self.friedrichs_override {
            if !(c > 0.0) {
                return Err(Error::Configuration(format!(
                    "Friedrichs constant must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// The benchmark problem with the configured Friedrichs constant.
    pub fn problem(&self) -> Result<ProblemSpec> {
        self.validate()?;
        let mut p = if self.example == 1 {
            example1_spec()
        } else {
            example2_spec()
        };
        if let Some(c) = self.friedrichs_override {
            p.friedrichs_c = c;
        }
        Ok(p)
    }

    fn stem(&self) -> String {
        format!("example{}", self.example)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.csv", self.stem()))
    }

    pub fn log_path(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}_majorant.log", self.stem()))
    }

    pub fn vtk_path(&self, level: usize) -> PathBuf {
        self.output_dir
            .join(format!("{}_level{level}.vtk", self.stem()))
    }
}

/// One row of the result table.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub num_nodes: usize,
    pub j_primal: f64,
    pub i_dual: f64,
    /// `J(u_lambda) - J_ref`
    pub gap: f64,
    pub majorant_total: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub beta: f64,
    /// `J(u_lambda) - majorant`, a guaranteed lower bound of `J(u)`.
    pub energy_lower: f64,
    pub kkt_residual: f64,
    pub qp_iterations: usize,
    pub qp_converged: bool,
    pub sweeps: usize,
    /// Smallest majorant total over all sweeps.
    pub min_sweep_total: f64,
    /// The majorant stayed above the gap at every sweep.
    pub bound_holds: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub records: Vec<LevelRecord>,
    pub reference_energy: f64,
    /// Majorant total after every sweep, per level.
    pub histories: Vec<(usize, Vec<f64>)>,
}

impl ExperimentReport {
    pub fn all_bounds_hold(&self) -> bool {
        self.records.iter().all(|r| r.bound_holds)
    }
}

/// Runs all levels, writing the CSV after each level so that a failure
/// leaves the rows computed so far on disk.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport> {
    let problem = config.problem()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let qp = DualSolveOptions {
        tol: config.qp_tol,
        ..DualSolveOptions::default()
    };
    let reference_energy = match config.reference {
        Reference::Exact => {
            problem
                .exact
                .as_ref()
                .ok_or_else(|| Error::MissingExactSolution(problem.name.clone()))?
                .energy
        }
        Reference::LevelPlusOne => reference_solution(&problem, config.levels, &qp)?.2,
    };
    let majorant_opts = MajorantOptions {
        sweeps: config.majorant_iters,
        ..MajorantOptions::default()
    };

    let mut report = ExperimentReport {
        records: Vec::new(),
        reference_energy,
        histories: Vec::new(),
    };
    for (i, mesh) in problem
        .mesh_hierarchy(config.levels)?
        .into_iter()
        .enumerate()
    {
        let level = i + 1;
        let outcome = solve_level(
            config,
            &problem,
            &mesh,
            level,
            &qp,
            &majorant_opts,
            reference_energy,
        )
        .map(|(record, history)| {
            report.records.push(record);
            report.histories.push((level, history));
        });
        write_outputs(config, &report)?;
        outcome?;
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn solve_level(
    config: &RunConfig,
    problem: &ProblemSpec,
    mesh: &TriMesh,
    level: usize,
    qp: &DualSolveOptions,
    majorant_opts: &MajorantOptions,
    reference_energy: f64,
) -> Result<(LevelRecord, Vec<f64>)> {
    let sol = solve_two_phase(mesh, problem, qp)?;
    let maj = optimize_majorant(
        mesh,
        &sol.u_lambda,
        &sol.lambda,
        problem.friedrichs_c,
        problem.alpha_plus,
        problem.alpha_minus,
        majorant_opts,
    )?;
    let bounds = energy_bounds(sol.primal_energy, maj.total, Some(reference_energy))?;
    let min_sweep_total = maj.history.iter().copied().fold(maj.total, f64::min);
    if config.emit_vtk {
        write_vtk(
            mesh,
            &[("u_lambda", &sol.u_lambda)],
            &[
                ("lambda", &sol.lambda),
                ("mu", &maj.mu),
                ("density1", &maj.density1),
                ("density2", &maj.density2),
                ("density3", &maj.density3),
            ],
            &config.vtk_path(level),
        )?;
    }
    let record = LevelRecord {
        level,
        num_nodes: mesh.num_nodes(),
        j_primal: sol.primal_energy,
        i_dual: sol.dual_energy,
        gap: bounds.gap_lower,
        majorant_total: maj.total,
        m1: maj.m1,
        m2: maj.m2,
        m3: maj.m3,
        beta: maj.beta,
        energy_lower: bounds.energy_lower,
        kkt_residual: sol.kkt_residual,
        qp_iterations: sol.iterations,
        qp_converged: sol.converged,
        sweeps: maj.iterations,
        min_sweep_total,
        bound_holds: min_sweep_total >= bounds.gap_lower - BOUND_SLACK,
    };
    Ok((record, maj.history))
}

fn write_outputs(config: &RunConfig, report: &ExperimentReport) -> Result<()> {
    write_csv(&report.records, &config.csv_path())?;
    write_majorant_log(&report.histories, &config.log_path())
}

/// Human-readable table, one line per level.
pub fn format_table(report: &ExperimentReport) -> String {
    let mut out = format!(
        "{:>5} {:>6} {:>22} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>5}\n",
        "level", "nodes", "J (I*)", "gap", "majorant", "m1", "m2", "m3", "J-M", "bound"
    );
    for r in &report.records {
        out.push_str(&format!(
            "{:>5} {:>6} {:>22} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.4} {:>5}\n",
            r.level,
            r.num_nodes,
            format!("{:.4} ({:.4})", r.j_primal, r.i_dual),
            r.gap,
            r.majorant_total,
            r.m1,
            r.m2,
            r.m3,
            r.energy_lower,
            if r.bound_holds { "ok" } else { "FAIL" }
        ));
    }
    out
}

/// Reads back the table written by [`run_experiment`] as raw string rows.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record?.iter().map(str::to_string).collect());
    }
    Ok(rows)
}
