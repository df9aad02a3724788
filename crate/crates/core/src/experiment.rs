//! JSON-configured experiments, presets and output files.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmcg::{cmcg_solve, fw_solve, CmcgOptions, ConvergenceRecord, Controllability, Row};
use crate::dg::{Coefficients, DgOperator, DgSpace, Forcing, MaterialField, SourceSpec};
use crate::error::{Error, Result};
use crate::exact::{cavity_series, plane_wave, plane_wave_boundary, relative_error, waveguide_series, xi, ExactSolution};
use crate::frequency::{FrequencySystem, SolverOptions};
use crate::mesh::{BoundaryKind, Mesh, Point, Rect};
use crate::propagation::Propagator;
use crate::time::{cfl_constant, Integrator, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrapBody {
    /// `[-0.5, 0.5]^2`
    Square,
    /// `|x| < 0.5`
    Disk,
}

impl TrapBody {
    pub fn contains(self, p: Point) -> bool {
        match self {
            Self::Square => p[0].abs() < 0.5 && p[1].abs() < 0.5,
            Self::Disk => p[0].hypot(p[1]) < 0.5,
        }
    }
}

/// Gaussian current `amplitude * exp(-|x - center|^2 / width^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSource {
    pub center: Point,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

impl GaussianSource {
    pub fn eval(&self, p: Point) -> f64 {
        let d2 = (p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2);
        self.amplitude * (-d2 / (self.width * self.width)).exp()
    }
}

fn one() -> f64 {
    1.0
}

fn default_waveguide_modes() -> usize {
    50
}

fn default_cavity_modes() -> usize {
    201
}

fn default_trap_eps() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Experiment {
    /// Plane wave in `(0,1)^2` with impedance data on the whole boundary.
    Planewave { omega: f64, theta: f64 },
    /// `(0,4) x (0,1)`, PEC except the impedance end `x = 4` with `g = xi`.
    Waveguide {
        omega: f64,
        theta: f64,
        #[serde(default = "default_waveguide_modes")]
        n_max: usize,
    },
    /// PEC unit square driven by a constant current, `w = omega_r + sqrt(2) pi delta`.
    Cavity {
        omega_r: f64,
        delta: f64,
        #[serde(default = "default_cavity_modes")]
        n_max: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Dipole inside a high-permittivity body in `(-1,1)^2`, impedance boundary.
    Trap {
        omega: f64,
        body: TrapBody,
        source: GaussianSource,
        #[serde(default = "default_trap_eps")]
        eps_inside: f64,
    },
    /// Uniform medium in a rectangle with a Gaussian current.
    Custom {
        omega: f64,
        domain: Rect,
        boundary: BoundaryKind,
        #[serde(default)]
        coefficients: Coefficients,
        source: GaussianSource,
    },
}

impl Experiment {
    pub fn omega(&self) -> f64 {
        match *self {
            Self::Planewave { omega, .. }
            | Self::Waveguide { omega, .. }
            | Self::Trap { omega, .. }
            | Self::Custom { omega, .. } => omega,
            Self::Cavity { omega_r, delta, .. } => omega_r + 2f64.sqrt() * PI * delta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Planewave { .. } => "planewave",
            Self::Waveguide { .. } => "waveguide",
            Self::Cavity { .. } => "cavity",
            Self::Trap { .. } => "trap",
            Self::Custom { .. } => "custom",
        }
    }

    pub fn domain(&self) -> Rect {
        match self {
            Self::Planewave { .. } | Self::Cavity { .. } => Rect::unit(),
            Self::Waveguide { .. } => Rect::new(0.0, 4.0, 0.0, 1.0),
            Self::Trap { .. } => Rect::new(-1.0, 1.0, -1.0, 1.0),
            Self::Custom { domain, .. } => *domain,
        }
    }

    pub fn boundary(&self, p: Point) -> BoundaryKind {
        match self {
            Self::Planewave { .. } | Self::Trap { .. } => BoundaryKind::Impedance,
            Self::Cavity { .. } => BoundaryKind::Pec,
            Self::Waveguide { .. } => {
                let d = self.domain();
                if p[0] > d.x1 - d.tolerance() {
                    BoundaryKind::Impedance
                } else {
                    BoundaryKind::Pec
                }
            }
            Self::Custom { boundary, .. } => *boundary,
        }
    }

    fn coefficients(&self, centroid: Point) -> Coefficients {
        match self {
            Self::Trap { body, eps_inside, .. } if body.contains(centroid) => Coefficients {
                eps: *eps_inside,
                ..Coefficients::default()
            },
            Self::Custom { coefficients, .. } => *coefficients,
            _ => Coefficients::default(),
        }
    }

    /// Analytic reference, where one exists.
    pub fn exact(&self) -> Result<Option<ExactSolution>> {
        match *self {
            Self::Planewave { omega, theta } => plane_wave(theta, omega).map(Some),
            Self::Waveguide { omega, theta, n_max } => waveguide_series(theta, omega, n_max).map(Some),
            Self::Cavity { n_max, amplitude, .. } => cavity_series(self.omega(), amplitude, n_max).map(Some),
            Self::Trap { .. } | Self::Custom { .. } => Ok(None),
        }
    }

    fn validate(&self) -> Result<()> {
        let omega = self.omega();
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Config(format!("angular frequency must be positive, got {omega}")));
        }
        match self {
            Self::Trap { source, eps_inside, .. } => {
                if !(source.width > 0.0 && *eps_inside > 0.0) {
                    return Err(Error::Config("trap needs positive source width and permittivity".into()));
                }
            }
            Self::Custom { source, domain, .. } => {
                if !(source.width > 0.0) {
                    return Err(Error::Config("source width must be positive".into()));
                }
                if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
                    return Err(Error::Config("degenerate domain".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeshSpec {
    /// `nx x ny` cells over the experiment's rectangle, four triangles per cell.
    Cartesian { nx: usize, ny: usize },
    /// Gmsh 2.2 file; relative paths are resolved against the config file.
    Msh { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cmcg,
    Fw,
    Fs,
}

impl SolverKind {
    /// History file written by this solver.
    pub fn history_file(self) -> &'static str {
        match self {
            Self::Cmcg => "cmcg.txt",
            Self::Fw => "full_wave.txt",
            Self::Fs => "fs.txt",
        }
    }
}

fn default_tolerance() -> f64 {
    1e-4
}

fn default_periods() -> usize {
    100
}

fn default_penalty() -> f64 {
    DgOperator::DEFAULT_PENALTY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: Experiment,
    pub mesh: MeshSpec,
    pub degree: usize,
    /// Defaults to RK2 for `q = 1` and RK4 for `q = 3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    pub solver: SolverKind,
    /// CG relative residual target.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Simulated-period budget.
    #[serde(default = "default_periods")]
    pub max_periods: usize,
    /// Interior flux jump weight.
    #[serde(default = "default_penalty")]
    pub flux_penalty: f64,
    /// Overrides the CFL constant of the degree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub frequency_solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config; relative msh paths become relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut c = Self::from_json(&text)?;
        if let MeshSpec::Msh { path: p } = &mut c.mesh {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn integrator(&self) -> Result<Integrator> {
        match self.integrator {
            Some(i) => Ok(i),
            None => Integrator::for_degree(self.degree),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("invalid experiment name {:?}", self.name));
        }
        if self.degree != 1 && self.degree != 3 {
            return bad(format!("unsupported polynomial degree {}", self.degree));
        }
        self.integrator()?.check_pairing(self.degree).map_err(|e| Error::Config(e.to_string()))?;
        self.experiment.validate()?;
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_periods == 0 || (self.solver == SolverKind::Cmcg && self.max_periods < 2) {
            return bad(format!("period budget {} is too small", self.max_periods));
        }
        if !(self.flux_penalty > 0.0) {
            return bad(format!("flux penalty must be positive, got {}", self.flux_penalty));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0) {
                return bad(format!("CFL constant must be positive, got {c}"));
            }
        }
        if let MeshSpec::Cartesian { nx, ny } = self.mesh {
            if nx == 0 || ny == 0 {
                return bad("cartesian mesh needs positive dimensions".into());
            }
        }
        Ok(())
    }
}

/// Discretized experiment.
pub struct Problem {
    pub config: ExperimentConfig,
    pub op: DgOperator,
    pub forcing: Forcing,
    pub grid: TimeGrid,
    pub integrator: Integrator,
    pub exact: Option<ExactSolution>,
}

impl Problem {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let ex = &config.experiment;
        let classify = |p: Point| ex.boundary(p);
        let mesh = match &config.mesh {
            MeshSpec::Cartesian { nx, ny } => Mesh::cartesian(*nx, *ny, ex.domain(), &classify)?,
            MeshSpec::Msh { path } => Mesh::import_msh(path, &classify)?,
        };
        let materials = MaterialField::from_fn(&mesh, |c| ex.coefficients(c), 1.0)?;
        let space = DgSpace::new(mesh, config.degree)?;
        let op = DgOperator::with_penalty(space, materials, config.flux_penalty)?;
        let omega = ex.omega();
        let forcing = match *ex {
            Experiment::Planewave { theta, .. } => {
                let g = move |x: Point, n: Point| plane_wave_boundary(theta, omega, x, n);
                op.forcing(&SourceSpec { omega, j: None, g: Some(&g) })?
            }
            Experiment::Waveguide { theta, .. } => {
                let g = move |x: Point, _n: Point| xi(theta, omega, x);
                op.forcing(&SourceSpec { omega, j: None, g: Some(&g) })?
            }
            Experiment::Cavity { amplitude, .. } => {
                let j = move |_x: Point| Complex64::new(amplitude, 0.0);
                op.forcing(&SourceSpec { omega, j: Some(&j), g: None })?
            }
            Experiment::Trap { source, .. } | Experiment::Custom { source, .. } => {
                let j = move |x: Point| Complex64::new(source.eval(x), 0.0);
                op.forcing(&SourceSpec { omega, j: Some(&j), g: None })?
            }
        };
        let integrator = config.integrator()?;
        let cfl = match config.cfl {
            Some(c) => c,
            None => cfl_constant(config.degree)?,
        };
        let grid = TimeGrid::from_cfl(&op, omega, cfl)?;
        Ok(Self {
            config: config.clone(),
            op,
            forcing,
            grid,
            integrator,
            exact: ex.exact()?,
        })
    }

    pub fn propagator(&self) -> Result<Propagator<'_>> {
        Propagator::new(&self.op, self.forcing.clone(), self.grid, self.integrator)
    }

    /// Frequency-domain solution of the same discretization.
    pub fn solve_frequency(&self) -> Result<crate::frequency::FrequencySolution> {
        FrequencySystem::assemble(&self.op, &self.forcing)?.solve(&self.config.frequency_solver)
    }
}

/// Relative weighted distance to a discrete reference field.
pub fn relative_distance(op: &DgOperator, u: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    let diff: Vec<Complex64> = u.iter().zip(reference).map(|(a, b)| a - b).collect();
    let den = op.norm_complex(reference)?;
    if den == 0.0 {
        return Err(Error::Reference("reference field has zero norm".into()));
    }
    Ok(op.norm_complex(&diff)? / den)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub solver: SolverKind,
    pub ndofs: usize,
    pub steps_per_period: usize,
    pub history: ConvergenceRecord,
    pub final_error: f64,
    /// CG reached its residual target (CMCG only).
    pub converged: Option<bool>,
    pub output_dir: PathBuf,
    /// Final filtered (or frequency-domain) field.
    #[serde(skip)]
    pub field: Vec<Complex64>,
}

/// Final complex field with enough metadata to locate every dof.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub name: String,
    pub kind: String,
    pub solver: SolverKind,
    pub omega: f64,
    pub degree: usize,
    /// Dof `k * 3 np + field * np + i`, fields `(E, H1, H2)`.
    pub nodes_per_element: usize,
    pub vertices: Vec<Point>,
    pub elements: Vec<[usize; 3]>,
    /// Physical coordinates of node `i` of element `k` at index `k * np + i`.
    pub nodes: Vec<Point>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub error: f64,
}

impl SolutionFile {
    fn new(problem: &Problem, field: &[Complex64], error: f64) -> Self {
        let space = problem.op.space();
        let mesh = space.mesh();
        let np = space.np();
        let nodes = (0..space.num_elements())
            .flat_map(|k| (0..np).map(move |i| (k, i)))
            .map(|(k, i)| space.node(k, i))
            .collect();
        Self {
            name: problem.config.name.clone(),
            kind: problem.config.experiment.name().into(),
            solver: problem.config.solver,
            omega: problem.config.experiment.omega(),
            degree: space.degree(),
            nodes_per_element: np,
            vertices: mesh.vertices().to_vec(),
            elements: mesh.elements().to_vec(),
            nodes,
            re: field.iter().map(|z| z.re).collect(),
            im: field.iter().map(|z| z.im).collect(),
            error,
        }
    }
}

/// Runs `config`, writing the history file and `solution.json` into `out_dir`.
/// The history written so far is kept when the solver fails.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let problem = Problem::build(config)?;
    std::fs::create_dir_all(out_dir)?;
    let history_path = out_dir.join(config.solver.history_file());
    let mut history = ConvergenceRecord::new();
    let result = solve(&problem, &mut history);
    std::fs::write(&history_path, history.to_text())?;
    let (field, final_error, converged) = result?;
    let solution = SolutionFile::new(&problem, &field, final_error);
    std::fs::write(out_dir.join("solution.json"), serde_json::to_string(&solution)?)?;
    Ok(RunSummary {
        name: config.name.clone(),
        solver: config.solver,
        ndofs: problem.op.ndofs(),
        steps_per_period: problem.grid.steps,
        history,
        final_error,
        converged,
        output_dir: out_dir.to_path_buf(),
        field,
    })
}

fn solve(problem: &Problem, history: &mut ConvergenceRecord) -> Result<(Vec<Complex64>, f64, Option<bool>)> {
    let config = &problem.config;
    if config.solver == SolverKind::Fs {
        let sol = problem.solve_frequency()?;
        let err = match &problem.exact {
            Some(ex) => relative_error(&problem.op, &sol.field, ex)?,
            None => 0.0,
        };
        history.push(Row { periods: 0, err, misfit: sol.residual })?;
        return Ok((sol.field, err, None));
    }

    let reference = match problem.exact {
        Some(_) => None,
        None => Some(problem.solve_frequency()?.field),
    };
    let op = &problem.op;
    let mut monitor = |u: &[Complex64]| -> Result<f64> {
        match (&problem.exact, &reference) {
            (Some(ex), _) => relative_error(op, u, ex),
            (None, Some(r)) => relative_distance(op, u, r),
            (None, None) => unreachable!("reference computed above"),
        }
    };
    let prop = problem.propagator()?;
    match config.solver {
        SolverKind::Cmcg => {
            let ctl = Controllability::initialize(&prop)?;
            let options = CmcgOptions {
                tolerance: config.tolerance,
                max_periods: config.max_periods,
                residual_check: None,
            };
            let out = cmcg_solve(&ctl, &options, &mut monitor, history)?;
            let err = history.last().map_or(f64::NAN, |r| r.err);
            Ok((out.filtered, err, Some(out.converged)))
        }
        SolverKind::Fw => {
            let out = fw_solve(&prop, config.max_periods, &mut monitor, history)?;
            let err = history.last().map_or(f64::NAN, |r| r.err);
            Ok((out.filtered, err, None))
        }
        SolverKind::Fs => unreachable!(),
    }
}

/// Process exit code: 1 for configuration and input errors, 2 for solver failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::InvalidMesh(_)
        | Error::MshParse { .. }
        | Error::UnsupportedElement { .. }
        | Error::UnsupportedDegree(_)
        | Error::Json(_)
        | Error::Io(_) => 1,
        Error::Divergence { .. }
        | Error::Filter(_)
        | Error::CgBreakdown { .. }
        | Error::NoConvergence { .. }
        | Error::Reference(_)
        | Error::DimensionMismatch { .. } => 2,
    }
}

fn cartesian(nx: usize, ny: usize) -> MeshSpec {
    MeshSpec::Cartesian { nx, ny }
}

fn make(name: &str, experiment: Experiment, mesh: MeshSpec, degree: usize, max_periods: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        experiment,
        mesh,
        degree,
        integrator: None,
        solver: SolverKind::Cmcg,
        tolerance: default_tolerance(),
        max_periods,
        flux_penalty: default_penalty(),
        cfl: None,
        frequency_solver: SolverOptions::default(),
        output_dir: None,
    }
}

/// The reference experiments. The two trap presets expect `trap_square.msh` and
/// `trap_disk.msh` next to the config (or in the working directory).
pub fn presets() -> Vec<ExperimentConfig> {
    let s2pi = 2f64.sqrt() * PI;
    let planewave = |omega| Experiment::Planewave { omega, theta: PI / 4.0 };
    let waveguide = |omega| Experiment::Waveguide { omega, theta: PI / 6.0, n_max: default_waveguide_modes() };
    let cavity = |r: f64, d: f64| Experiment::Cavity {
        omega_r: r * s2pi,
        delta: d,
        n_max: default_cavity_modes(),
        amplitude: 1.0,
    };
    vec![
        make("planewave-10pi", planewave(10.0 * PI), cartesian(32, 32), 1, 100),
        make("planewave-40pi", planewave(40.0 * PI), cartesian(32, 32), 3, 500),
        make("waveguide-2pi", waveguide(2.0 * PI), cartesian(64, 16), 1, 1000),
        make("waveguide-6pi", waveguide(6.0 * PI), cartesian(32, 8), 3, 1000),
        make("cavity-3-d8", cavity(3.0, 1.0 / 8.0), cartesian(32, 32), 1, 100),
        make("cavity-3-d64", cavity(3.0, 1.0 / 64.0), cartesian(32, 32), 1, 100),
        make("cavity-5-d8", cavity(5.0, 1.0 / 8.0), cartesian(8, 8), 3, 100),
        make("cavity-5-d64", cavity(5.0, 1.0 / 64.0), cartesian(8, 8), 3, 100),
        make(
            "trap-square",
            Experiment::Trap {
                omega: 10.0 * PI,
                body: TrapBody::Square,
                source: GaussianSource { center: [0.25, 0.0], width: 0.05, amplitude: 1.0 },
                eps_inside: 4.0,
            },
            MeshSpec::Msh { path: "trap_square.msh".into() },
            3,
            1000,
        ),
        make(
            "trap-disk",
            Experiment::Trap {
                omega: 20.0 * PI,
                body: TrapBody::Disk,
                source: GaussianSource {
                    center: [2f64.sqrt() / 4.0, 0.5 - 2f64.sqrt() / 4.0],
                    width: 0.05,
                    amplitude: 1.0,
                },
                eps_inside: 4.0,
            },
            MeshSpec::Msh { path: "trap_disk.msh".into() },
            3,
            1000,
        ),
    ]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    presets().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_table() {
        let all = presets();
        assert_eq!(all.len(), 10);
        assert_eq!(all.iter().filter(|c| matches!(c.mesh, MeshSpec::Cartesian { .. })).count(), 8);
        let wg = preset("waveguide-6pi").unwrap();
        assert_eq!((wg.mesh.clone(), wg.degree), (cartesian(32, 8), 3));
        let trap = preset("trap-square").unwrap();
        match trap.experiment {
            Experiment::Trap { omega, body, source, eps_inside } => {
                assert_eq!(body, TrapBody::Square);
                assert_eq!(source.center, [0.25, 0.0]);
                assert_eq!(source.width, 0.05);
                assert_eq!(eps_inside, 4.0);
                assert!((omega - 10.0 * PI).abs() < 1e-12);
            }
            _ => panic!(),
        }
        for c in &all {
            c.validate().unwrap();
        }
    }

    #[test]
    fn config_roundtrip() {
        for c in presets() {
            assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        }
    }

    #[test]
    fn rejects_bad_pairing() {
        let mut c = preset("cavity-5-d8").unwrap();
        c.integrator = Some(Integrator::Rk2);
        let e = c.validate().unwrap_err();
        assert_eq!(exit_code(&e), 1);
        c.integrator = None;
        c.degree = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn minimal_json() {
        let text = r#"{"name": "pw", "experiment": {"kind": "planewave", "omega": 6.0, "theta": 0.3},
            "mesh": {"type": "cartesian", "nx": 2, "ny": 2}, "degree": 1, "solver": "fs"}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.max_periods, 100);
        assert_eq!(c.tolerance, 1e-4);
        assert_eq!(c.flux_penalty, 2.0);
        assert!(ExperimentConfig::from_json(&text.replace("\"fs\"", "\"xyz\"")).is_err());
    }

    #[test]
    fn cavity_frequency_shift() {
        let c = preset("cavity-3-d64").unwrap();
        let expected = 3.0 * 2f64.sqrt() * PI + 2f64.sqrt() * PI / 64.0;
        assert!((c.experiment.omega() - expected).abs() < 1e-12);
    }

    #[test]
    fn trap_bodies() {
        assert!(TrapBody::Square.contains([0.45, -0.45]));
        assert!(!TrapBody::Disk.contains([0.45, -0.45]));
        assert!(TrapBody::Disk.contains([0.0, 0.49]));
    }
}
