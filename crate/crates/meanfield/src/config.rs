//! Configuration files: four sections, defaults for every key, and a
//! validator that reports every violation at once.
//!
//! The file format is sectioned key-value text ([TOML]):
//!
//! ```text
//! [domain]
//! dim = 1             # 1 or 2
//! half_width = 4.0    # box is [-half_width, half_width)^dim
//! points = 256        # lattice points per axis, a power of two >= 8
//! horizon = 1.0
//! time_steps = 256
//! viscosity = 0.5
//!
//! [problem]
//! control_cost = "quadratic-capped"   # with control_bound as its strength
//! running_coupling = "quadratic"      # with running_strength
//! terminal_coupling = "quadratic"     # with terminal_strength
//! initial_density = "gaussian"        # gaussian | delta | two-bumps
//!
//! [solver]
//! tolerance = 1e-7
//! eps_ladder = [1.0, 0.3, 0.1, 0.03, 0.01]   # omit to derive from couplings
//!
//! [run]
//! seed = 1
//! output_dir = "out"
//! ```
//!
//! Validation never stops at the first problem: unknown sections, unknown
//! keys, type mismatches, and out-of-range values are all collected and
//! returned together, each message naming the offending key and stating the
//! accepted range in words. The `MEANFIELD_OUTPUT_DIR` environment variable,
//! when set, overrides `run.output_dir`.
//!
//! [TOML]: https://toml.io

use std::path::{Path, PathBuf};

use toml::Value;

use crate::error::{Error, Result};
use crate::grid::{DomainSpec, HeatKernelSpec, KernelConvention, KernelOps, ScalarField, VectorField};
use crate::hjb::HjbParams;
use crate::mfg::{Coupling, EpsSchedule, MfgParams, MfgProblem};
use crate::presets;

/// One coupling's configuration: a preset name plus its numbers.
#[derive(Debug, Clone)]
pub struct CouplingSettings {
    pub name: String,
    /// Strength of the single-parameter presets.
    pub strength: f64,
    /// Jump parameters, read only by the `step` preset.
    pub jump_location: f64,
    pub jump_height: f64,
    pub base_slope: f64,
}

impl CouplingSettings {
    fn with_defaults(name: &str, strength: f64) -> Self {
        Self {
            name: name.into(),
            strength,
            jump_location: 0.4,
            jump_height: 0.5,
            base_slope: 1.0,
        }
    }

    /// Resolve into a coupling object.
    pub fn build(&self) -> Result<Coupling> {
        if self.name == "step" {
            presets::step_coupling(self.jump_location, self.jump_height, self.base_slope)
        } else {
            presets::coupling(&self.name, self.strength)
        }
    }
}

/// The `[problem]` section: cost and coupling names, initial density, and
/// the driving field of standalone forward runs.
#[derive(Debug, Clone)]
pub struct ProblemSettings {
    pub control_cost: String,
    pub control_bound: f64,
    pub running: CouplingSettings,
    pub terminal: CouplingSettings,
    pub initial_density: String,
    pub initial_center: [f64; 2],
    pub initial_sigma: f64,
    /// Drift preset for runs that do not compute a best response
    /// (standalone forward solves and particle marches).
    pub drift_preset: String,
    pub drift_amplitude: f64,
}

/// The `[solver]` section.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Explicit regularization ladder; `None` derives one from the couplings.
    pub schedule: Option<EpsSchedule>,
    pub theta0: f64,
    pub theta_backoff: f64,
    pub theta_min: f64,
    pub max_outer: usize,
    pub tolerance: f64,
    pub grad_tol: f64,
    pub stagnant_levels: usize,
    pub picard_tol: f64,
    pub picard_max_iterations: usize,
    pub max_halvings: usize,
    pub kernel_convention: KernelConvention,
}

/// The `[run]` section.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Field-dump cadence in time steps.
    pub dump_stride: usize,
    pub particle_count: usize,
}

/// Everything a run needs, fully validated.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub domain: DomainSpec,
    pub problem: ProblemSettings,
    pub solver: SolverSettings,
    pub run: RunSettings,
}

pub const INITIAL_DENSITY_NAMES: [&str; 3] = ["gaussian", "delta", "two-bumps"];
pub const DRIFT_NAMES: [&str; 3] = ["zero", "constant", "sine"];

impl SolverConfig {
    /// Resolve the problem section into fields and cost objects.
    pub fn build_problem(&self) -> Result<MfgProblem> {
        let domain = self.domain;
        let (lagrangian, hamiltonian) =
            presets::control_cost(&self.problem.control_cost, domain.dim, self.problem.control_bound)?;
        let running = self.problem.running.build()?;
        let terminal = self.problem.terminal.build()?;
        let rho0 = self.build_initial_density()?;
        Ok(MfgProblem {
            lagrangian,
            hamiltonian,
            running,
            terminal,
            rho0,
        })
    }

    pub fn build_initial_density(&self) -> Result<ScalarField> {
        let domain = &self.domain;
        let center = self.problem.initial_center;
        let sigma = self.problem.initial_sigma;
        match self.problem.initial_density.as_str() {
            "gaussian" => Ok(ScalarField::gaussian(domain, &center, sigma)),
            "delta" => Ok(ScalarField::grid_delta(domain, &center)),
            "two-bumps" => {
                let mut a = ScalarField::gaussian(domain, &center, sigma);
                let mirrored = [-center[0], -center[1]];
                let b = ScalarField::gaussian(domain, &mirrored, sigma);
                a.scale(0.5);
                a.axpy(0.5, &b);
                Ok(a)
            }
            other => Err(Error::InvalidDomain(format!(
                "unknown initial density '{other}' (known: {})",
                INITIAL_DENSITY_NAMES.join(", ")
            ))),
        }
    }

    /// The drift trajectory of standalone forward runs (a single slice,
    /// meaning a time-constant field).
    pub fn build_drift(&self) -> Result<Vec<VectorField>> {
        let domain = &self.domain;
        let amp = self.problem.drift_amplitude;
        let field = match self.problem.drift_preset.as_str() {
            "zero" => VectorField::zeros(domain),
            "constant" => match domain.dim {
                1 => VectorField::constant(domain, &[amp, 0.0]),
                _ => VectorField::constant(domain, &[amp, amp]),
            },
            "sine" => {
                let k = std::f64::consts::PI / domain.half_width;
                VectorField::from_fn(domain, |x| match domain.dim {
                    1 => [amp * (k * x[0]).sin(), 0.0],
                    _ => [amp * (k * x[0]).sin(), amp * (k * x[1]).cos()],
                })
            }
            other => {
                return Err(Error::InvalidDomain(format!(
                    "unknown drift preset '{other}' (known: {})",
                    DRIFT_NAMES.join(", ")
                )))
            }
        };
        Ok(vec![field])
    }

    /// Solver settings resolved against the configured couplings.
    pub fn build_params(&self) -> Result<MfgParams> {
        let schedule = match &self.solver.schedule {
            Some(s) => s.clone(),
            None => {
                let running = self.problem.running.build()?;
                let terminal = self.problem.terminal.build()?;
                EpsSchedule::for_couplings(&running, &terminal)
            }
        };
        Ok(MfgParams {
            schedule,
            theta0: self.solver.theta0,
            theta_backoff: self.solver.theta_backoff,
            theta_min: self.solver.theta_min,
            max_outer: self.solver.max_outer,
            tolerance: self.solver.tolerance,
            grad_tol: self.solver.grad_tol,
            stagnant_levels: self.solver.stagnant_levels,
            hjb: HjbParams {
                picard_tol: self.solver.picard_tol,
                max_iterations: self.solver.picard_max_iterations,
                max_halvings: self.solver.max_halvings,
            },
            initial_control: None,
        })
    }

    /// Spectral engine under the configured kernel convention.
    pub fn kernel_ops(&self) -> KernelOps {
        KernelOps::new(
            &self.domain,
            HeatKernelSpec {
                viscosity: self.domain.viscosity,
                convention: self.solver.kernel_convention,
            },
        )
    }
}

fn default_config() -> SolverConfig {
    SolverConfig {
        domain: DomainSpec {
            dim: 1,
            half_width: 4.0,
            points: 256,
            horizon: 1.0,
            time_steps: 256,
            viscosity: 0.5,
        },
        problem: ProblemSettings {
            control_cost: "quadratic-capped".into(),
            control_bound: 1.0,
            running: CouplingSettings::with_defaults("quadratic", 1.0),
            terminal: CouplingSettings::with_defaults("quadratic", 0.5),
            initial_density: "gaussian".into(),
            initial_center: [0.0, 0.0],
            initial_sigma: 0.5,
            drift_preset: "zero".into(),
            drift_amplitude: 0.0,
        },
        solver: SolverSettings {
            schedule: None,
            theta0: 0.5,
            theta_backoff: 0.7,
            theta_min: 0.01,
            max_outer: 200,
            tolerance: 1e-7,
            grad_tol: 1e-8,
            stagnant_levels: 3,
            picard_tol: 1e-10,
            picard_max_iterations: 200,
            max_halvings: 6,
            kernel_convention: KernelConvention::OperatorConsistent,
        },
        run: RunSettings {
            seed: 1,
            output_dir: "out".into(),
            dump_stride: 16,
            particle_count: 200_000,
        },
    }
}

/// Typed getters that push a violation instead of failing fast.
struct SectionScan<'a> {
    section: &'static str,
    table: Option<&'a toml::Table>,
    violations: &'a mut Vec<String>,
}

impl<'a> SectionScan<'a> {
    fn value(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn push(&mut self, key: &str, message: String) {
        self.violations.push(format!("{}.{key}: {message}", self.section));
    }

    fn f64(&mut self, key: &str, into: &mut f64) {
        match self.value(key) {
            None => {}
            Some(Value::Float(f)) => *into = *f,
            Some(Value::Integer(i)) => *into = *i as f64,
            Some(other) => self.push(key, format!("expected a number, found {}", other.type_str())),
        }
    }

    fn usize(&mut self, key: &str, into: &mut usize) {
        match self.value(key) {
            None => {}
            Some(Value::Integer(i)) if *i >= 0 => *into = *i as usize,
            Some(Value::Integer(i)) => {
                self.push(key, format!("expected a nonnegative integer, got {i}"))
            }
            Some(other) => {
                self.push(key, format!("expected an integer, found {}", other.type_str()))
            }
        }
    }

    fn u64(&mut self, key: &str, into: &mut u64) {
        match self.value(key) {
            None => {}
            Some(Value::Integer(i)) if *i >= 0 => *into = *i as u64,
            Some(Value::Integer(i)) => {
                self.push(key, format!("expected a nonnegative integer, got {i}"))
            }
            Some(other) => {
                self.push(key, format!("expected an integer, found {}", other.type_str()))
            }
        }
    }

    fn string(&mut self, key: &str, into: &mut String) {
        match self.value(key) {
            None => {}
            Some(Value::String(s)) => *into = s.clone(),
            Some(other) => {
                self.push(key, format!("expected a quoted string, found {}", other.type_str()))
            }
        }
    }

    fn bool(&mut self, key: &str, into: &mut Option<bool>) {
        match self.value(key) {
            None => {}
            Some(Value::Boolean(b)) => *into = Some(*b),
            Some(other) => {
                self.push(key, format!("expected true or false, found {}", other.type_str()))
            }
        }
    }

    fn f64_array(&mut self, key: &str) -> Option<Vec<f64>> {
        match self.value(key) {
            None => None,
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Value::Float(f) => out.push(*f),
                        Value::Integer(i) => out.push(*i as f64),
                        other => {
                            self.push(
                                key,
                                format!("expected an array of numbers, found a {}", other.type_str()),
                            );
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Some(other) => {
                self.push(key, format!("expected an array of numbers, found {}", other.type_str()));
                None
            }
        }
    }

    fn check_known_keys(&mut self, known: &[&str]) {
        if let Some(table) = self.table {
            for key in table.keys() {
                if !known.contains(&key.as_str()) {
                    self.violations
                        .push(format!("{}.{key}: unknown key", self.section));
                }
            }
        }
    }
}

/// Parse and validate configuration text. Every problem found is reported;
/// the error lists them all, one per line.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let root: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(Error::ConfigViolations(vec![format!(
                "file is not sectioned key-value text: {e}"
            )]))
        }
    };

    let mut violations: Vec<String> = Vec::new();
    const SECTIONS: [&str; 4] = ["domain", "problem", "solver", "run"];
    for (key, value) in &root {
        if !SECTIONS.contains(&key.as_str()) {
            violations.push(format!(
                "[{key}]: unknown section (known: {})",
                SECTIONS.join(", ")
            ));
        } else if !value.is_table() {
            violations.push(format!("[{key}]: must be a section, not a value"));
        }
    }
    let section = |name: &str| -> Option<&toml::Table> {
        root.get(name).and_then(|v| v.as_table())
    };

    let mut config = default_config();

    // [domain]
    {
        let mut scan = SectionScan {
            section: "domain",
            table: section("domain"),
            violations: &mut violations,
        };
        scan.check_known_keys(&["dim", "half_width", "points", "horizon", "time_steps", "viscosity"]);
        scan.usize("dim", &mut config.domain.dim);
        scan.f64("half_width", &mut config.domain.half_width);
        scan.usize("points", &mut config.domain.points);
        scan.f64("horizon", &mut config.domain.horizon);
        scan.usize("time_steps", &mut config.domain.time_steps);
        scan.f64("viscosity", &mut config.domain.viscosity);

        let d = &config.domain;
        if d.dim != 1 && d.dim != 2 {
            scan.push("dim", format!("must be 1 or 2, got {}", d.dim));
        }
        if !(d.half_width.is_finite() && d.half_width > 0.0) {
            scan.push("half_width", format!("must be a positive number, got {}", d.half_width));
        }
        if d.points < 8 || !d.points.is_power_of_two() {
            scan.push("points", format!("must be a power of two of at least 8, got {}", d.points));
        }
        if !(d.horizon.is_finite() && d.horizon > 0.0) {
            scan.push("horizon", format!("must be a positive number, got {}", d.horizon));
        }
        if d.time_steps < 1 {
            scan.push("time_steps", "must be at least 1".into());
        }
        if !(d.viscosity.is_finite() && d.viscosity > 0.0) {
            scan.push("viscosity", format!("must be a positive number, got {}", d.viscosity));
        }
    }

    // [problem]
    {
        let mut scan = SectionScan {
            section: "problem",
            table: section("problem"),
            violations: &mut violations,
        };
        scan.check_known_keys(&[
            "control_cost",
            "control_bound",
            "running_coupling",
            "running_strength",
            "running_jump_location",
            "running_jump_height",
            "running_base_slope",
            "terminal_coupling",
            "terminal_strength",
            "terminal_jump_location",
            "terminal_jump_height",
            "terminal_base_slope",
            "initial_density",
            "initial_center",
            "initial_sigma",
            "drift_preset",
            "drift_amplitude",
        ]);
        let p = &mut config.problem;
        scan.string("control_cost", &mut p.control_cost);
        scan.f64("control_bound", &mut p.control_bound);
        scan.string("running_coupling", &mut p.running.name);
        scan.f64("running_strength", &mut p.running.strength);
        scan.f64("running_jump_location", &mut p.running.jump_location);
        scan.f64("running_jump_height", &mut p.running.jump_height);
        scan.f64("running_base_slope", &mut p.running.base_slope);
        scan.string("terminal_coupling", &mut p.terminal.name);
        scan.f64("terminal_strength", &mut p.terminal.strength);
        scan.f64("terminal_jump_location", &mut p.terminal.jump_location);
        scan.f64("terminal_jump_height", &mut p.terminal.jump_height);
        scan.f64("terminal_base_slope", &mut p.terminal.base_slope);
        scan.string("initial_density", &mut p.initial_density);
        if let Some(center) = scan.f64_array("initial_center") {
            match center.len() {
                1 => p.initial_center = [center[0], 0.0],
                2 => p.initial_center = [center[0], center[1]],
                n => scan.push(
                    "initial_center",
                    format!("expected one or two coordinates, got {n}"),
                ),
            }
        }
        scan.f64("initial_sigma", &mut p.initial_sigma);
        scan.string("drift_preset", &mut p.drift_preset);
        scan.f64("drift_amplitude", &mut p.drift_amplitude);

        // Resolve the names now so every naming problem is listed with the
        // others, using the resolver's own wording.
        if let Err(e) = presets::control_cost(&p.control_cost, 1, p.control_bound) {
            scan.push("control_cost", e.to_string());
        }
        if let Err(e) = p.running.build() {
            scan.push("running_coupling", e.to_string());
        }
        if let Err(e) = p.terminal.build() {
            scan.push("terminal_coupling", e.to_string());
        }
        if !INITIAL_DENSITY_NAMES.contains(&p.initial_density.as_str()) {
            scan.push(
                "initial_density",
                format!(
                    "unknown initial density '{}' (known: {})",
                    p.initial_density,
                    INITIAL_DENSITY_NAMES.join(", ")
                ),
            );
        }
        if !DRIFT_NAMES.contains(&p.drift_preset.as_str()) {
            scan.push(
                "drift_preset",
                format!(
                    "unknown drift preset '{}' (known: {})",
                    p.drift_preset,
                    DRIFT_NAMES.join(", ")
                ),
            );
        }
        if !(p.initial_sigma.is_finite() && p.initial_sigma > 0.0) {
            scan.push(
                "initial_sigma",
                format!("must be a positive number, got {}", p.initial_sigma),
            );
        }
    }

    // [solver]
    {
        let mut scan = SectionScan {
            section: "solver",
            table: section("solver"),
            violations: &mut violations,
        };
        scan.check_known_keys(&[
            "eps_ladder",
            "exact_final",
            "theta0",
            "theta_backoff",
            "theta_min",
            "max_outer",
            "tolerance",
            "grad_tol",
            "stagnant_levels",
            "picard_tol",
            "picard_max_iterations",
            "max_halvings",
            "kernel_convention",
        ]);
        let ladder = scan.f64_array("eps_ladder");
        let mut exact_final: Option<bool> = None;
        scan.bool("exact_final", &mut exact_final);
        if ladder.is_some() || exact_final.is_some() {
            let schedule = EpsSchedule {
                ladder: ladder.unwrap_or_default(),
                // An explicit empty ladder means "exact level only".
                exact_final: exact_final.unwrap_or(true),
            };
            if let Err(e) = schedule.validate() {
                scan.push("eps_ladder", e.to_string());
            } else {
                config.solver.schedule = Some(schedule);
            }
        }
        let s = &mut config.solver;
        scan.f64("theta0", &mut s.theta0);
        scan.f64("theta_backoff", &mut s.theta_backoff);
        scan.f64("theta_min", &mut s.theta_min);
        scan.usize("max_outer", &mut s.max_outer);
        scan.f64("tolerance", &mut s.tolerance);
        scan.f64("grad_tol", &mut s.grad_tol);
        scan.usize("stagnant_levels", &mut s.stagnant_levels);
        scan.f64("picard_tol", &mut s.picard_tol);
        scan.usize("picard_max_iterations", &mut s.picard_max_iterations);
        scan.usize("max_halvings", &mut s.max_halvings);
        let mut convention = String::from("operator-consistent");
        scan.string("kernel_convention", &mut convention);
        match convention.as_str() {
            "operator-consistent" => s.kernel_convention = KernelConvention::OperatorConsistent,
            "viscosity-squared" => s.kernel_convention = KernelConvention::ViscositySquared,
            other => scan.push(
                "kernel_convention",
                format!("unknown convention '{other}' (known: operator-consistent, viscosity-squared)"),
            ),
        }

        let s = &config.solver;
        if !(s.theta0 > 0.0 && s.theta0 <= 1.0) {
            scan.push("theta0", format!("must lie in (0, 1], got {}", s.theta0));
        }
        if !(s.theta_backoff > 0.0 && s.theta_backoff < 1.0) {
            scan.push(
                "theta_backoff",
                format!("must lie strictly between 0 and 1, got {}", s.theta_backoff),
            );
        }
        if !(s.theta_min > 0.0 && s.theta_min <= s.theta0) {
            scan.push(
                "theta_min",
                format!(
                    "must be positive and no larger than theta0 ({}), got {}",
                    s.theta0, s.theta_min
                ),
            );
        }
        if s.max_outer < 1 {
            scan.push("max_outer", "must be at least 1".into());
        }
        if !(s.tolerance.is_finite() && s.tolerance > 0.0) {
            scan.push("tolerance", format!("must be a positive number, got {}", s.tolerance));
        }
        if !(s.grad_tol >= 0.0) {
            scan.push("grad_tol", format!("must be nonnegative, got {}", s.grad_tol));
        }
        if s.stagnant_levels < 1 {
            scan.push("stagnant_levels", "must be at least 1".into());
        }
        if !(s.picard_tol.is_finite() && s.picard_tol > 0.0) {
            scan.push("picard_tol", format!("must be a positive number, got {}", s.picard_tol));
        }
        if s.picard_max_iterations < 1 {
            scan.push("picard_max_iterations", "must be at least 1".into());
        }
    }

    // [run]
    {
        let mut scan = SectionScan {
            section: "run",
            table: section("run"),
            violations: &mut violations,
        };
        scan.check_known_keys(&["seed", "output_dir", "dump_stride", "particle_count"]);
        let mut output_dir = config.run.output_dir.to_string_lossy().into_owned();
        scan.u64("seed", &mut config.run.seed);
        scan.string("output_dir", &mut output_dir);
        config.run.output_dir = output_dir.into();
        scan.usize("dump_stride", &mut config.run.dump_stride);
        scan.usize("particle_count", &mut config.run.particle_count);
        if config.run.dump_stride < 1 {
            scan.push("dump_stride", "must be at least 1".into());
        }
        if config.run.particle_count < 1 {
            scan.push("particle_count", "must be at least 1".into());
        }
    }

    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::ConfigViolations(violations))
    }
}

/// Load a configuration file and apply the `MEANFIELD_OUTPUT_DIR` override.
pub fn load_config(path: &Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut config = parse_config(&text)?;
    if let Ok(dir) = std::env::var("MEANFIELD_OUTPUT_DIR") {
        if !dir.is_empty() {
            config.run.output_dir = dir.into();
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn empty_text_yields_full_defaults() {
        let config = parse_config("").unwrap();
        assert_eq!(config.domain.points, 256);
        assert_eq!(config.domain.dim, 1);
        assert_eq!(config.run.seed, 1);
        assert_eq!(config.problem.control_cost, "quadratic-capped");
        // Defaults resolve into a runnable problem and parameters.
        let problem = config.build_problem().unwrap();
        assert!((problem.rho0.mass() - 1.0).abs() < 1e-12);
        let params = config.build_params().unwrap();
        // Quadratic couplings are differentiable: exact level only.
        assert_eq!(params.schedule.levels(), vec![0.0]);
    }

    #[test]
    fn explicit_values_land_where_they_should() {
        let text = r#"
            [domain]
            dim = 1
            points = 64
            time_steps = 32
            horizon = 0.5

            [problem]
            control_cost = "ball-indicator"
            control_bound = 2.0
            running_coupling = "step"
            running_jump_location = 0.3
            running_jump_height = 0.25
            initial_density = "two-bumps"
            initial_center = [0.8]

            [solver]
            eps_ladder = [0.5, 0.1]
            exact_final = false
            tolerance = 1e-5

            [run]
            seed = 99
            output_dir = "scratch"
        "#;
        let config = parse_config(text).unwrap();
        assert_eq!(config.domain.points, 64);
        assert_eq!(config.problem.control_bound, 2.0);
        assert_eq!(config.run.seed, 99);
        assert_eq!(config.run.output_dir, PathBuf::from("scratch"));
        let params = config.build_params().unwrap();
        assert_eq!(params.schedule.levels(), vec![0.5, 0.1]);
        assert_eq!(params.tolerance, 1e-5);
        let problem = config.build_problem().unwrap();
        assert_eq!(problem.running.jump_points().len(), 1);
        assert!(problem.hamiltonian.lipschitz_bound().is_some());
        // Two bumps centered at +-0.8 with unit total mass.
        assert!((problem.rho0.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_violation_is_reported_at_once() {
        let text = r#"
            [domain]
            dim = 3
            points = 100
            viscosity = -0.5
            typo_key = 1

            [problem]
            control_cost = "cubic"
            initial_sigma = 0.0

            [solver]
            theta0 = 2.0

            [mystery]
            x = 1
        "#;
        let err = parse_config(text).unwrap_err();
        let Error::ConfigViolations(list) = err else {
            panic!("expected the violation list, got {err}");
        };
        let joined = list.join("\n");
        for needle in [
            "domain.dim",
            "domain.points",
            "domain.viscosity",
            "domain.typo_key",
            "problem.control_cost",
            "problem.initial_sigma",
            "solver.theta0",
            "[mystery]",
        ] {
            assert!(joined.contains(needle), "missing '{needle}' in:\n{joined}");
        }
        assert!(list.len() >= 8, "expected at least 8 violations:\n{joined}");
        // Messages state bounds in words.
        assert!(joined.contains("power of two"), "{joined}");
        assert!(joined.contains("must be 1 or 2"), "{joined}");
    }

    #[test]
    fn type_mismatches_are_named() {
        let text = r#"
            [domain]
            points = "many"

            [run]
            seed = -4
        "#;
        let err = parse_config(text).unwrap_err();
        let Error::ConfigViolations(list) = err else {
            panic!("expected violations");
        };
        let joined = list.join("\n");
        assert!(joined.contains("domain.points: expected an integer"), "{joined}");
        assert!(joined.contains("run.seed: expected a nonnegative integer"), "{joined}");
    }

    #[test]
    fn unparseable_text_is_one_clear_violation() {
        let err = parse_config("this is not a config").unwrap_err();
        assert!(matches!(err, Error::ConfigViolations(ref v) if v.len() == 1));
    }

    #[test]
    fn output_dir_env_override_applies_on_load() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "[run]\noutput_dir = \"from_file\"").unwrap();
        std::env::set_var("MEANFIELD_OUTPUT_DIR", "from_env");
        let config = load_config(file.path()).unwrap();
        std::env::remove_var("MEANFIELD_OUTPUT_DIR");
        assert_eq!(config.run.output_dir, PathBuf::from("from_env"));
        let config = load_config(file.path()).unwrap();
        assert_eq!(config.run.output_dir, PathBuf::from("from_file"));
    }
}
