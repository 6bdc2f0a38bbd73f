//! Command-line front end: five subcommands over one configuration file.
//!
//! ```text
//! meanfield <subcommand> [--config <path>] [--output <dir>] [options]
//!
//! solve-fp             march the density forward under the configured drift
//! solve-hjb            solve the value function backward from its couplings
//! solve-mfg            run the coupled equilibrium iteration
//! simulate-particles   cross-check the forward solve with a particle cloud
//! verify               run the fourteen-check self-verification suite
//! ```
//!
//! Every run writes its artifacts (field dumps, CSV profiles, a JSON report)
//! into the configured output directory. Exit status: 0 on success, 1 on
//! usage or I/O problems, 2 when a solver fails or returns an unconverged
//! state, 3 on configuration violations, 4 when verification fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use meanfield::config::{load_config, parse_config, SolverConfig};
use meanfield::diagnostics::{
    json_string, write_json, EquilibriumReport, FpReport, HjbReport, HypothesisReport,
    ParticleReport, RunReport,
};
use meanfield::error::Error;
use meanfield::fp::solve_fp;
use meanfield::grid::io::{read_field_bin, read_field_csv, write_field_bin, write_field_csv};
use meanfield::grid::{ScalarField, VectorField};
use meanfield::hjb::solve_hjb;
use meanfield::mfg::{coupling_eta, solve_mfg, terminal_eta0};
use meanfield::particles::{compare_fp, generator_identity, ParticleEnsemble};
use meanfield::presets::envelope_report;
use meanfield::verify;

const USAGE: &str = "\
usage: meanfield <subcommand> [options]

subcommands
  solve-fp             march the density forward under the configured drift
  solve-hjb            solve the value function backward from its couplings
  solve-mfg            run the coupled equilibrium iteration
  simulate-particles   cross-check the forward solve with a particle cloud
  verify               run the fourteen-check self-verification suite

common options
  --config <path>      configuration file (built-in defaults when omitted)
  --output <dir>       output directory (overrides the file and the
                       MEANFIELD_OUTPUT_DIR environment variable)
  -h, --help           this text

subcommand options
  solve-fp   --initial <file>    initial density from a field dump (.csv or
                                 binary) instead of the configured preset
  solve-hjb  --source <file>     running coupling layer, constant in time
             --terminal <file>   terminal coupling layer
                                 (defaults derive both layers from the
                                 configured couplings and initial density)
  simulate-particles
             --control <file>    drift field from a dump, constant in time
             --particles <n>     particle count override

exit status
  0 success; 1 usage or I/O; 2 solver failure or unconverged result;
  3 configuration violations; 4 verification failure
";

struct Cli {
    command: String,
    config: Option<PathBuf>,
    output: Option<PathBuf>,
    initial: Option<PathBuf>,
    source: Option<PathBuf>,
    terminal: Option<PathBuf>,
    control: Option<PathBuf>,
    particles: Option<usize>,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let mut it = args.iter();
    let command = match it.next() {
        Some(c) if c == "-h" || c == "--help" => return Err(String::new()),
        Some(c) => c.clone(),
        None => return Err("missing subcommand".into()),
    };
    let known = ["solve-fp", "solve-hjb", "solve-mfg", "simulate-particles", "verify"];
    if !known.contains(&command.as_str()) {
        return Err(format!("unknown subcommand '{command}'"));
    }
    let mut cli = Cli {
        command,
        config: None,
        output: None,
        initial: None,
        source: None,
        terminal: None,
        control: None,
        particles: None,
    };
    while let Some(flag) = it.next() {
        let mut path_arg = |slot: &mut Option<PathBuf>| -> Result<(), String> {
            match it.next() {
                Some(v) => {
                    *slot = Some(v.into());
                    Ok(())
                }
                None => Err(format!("{flag} needs a value")),
            }
        };
        match flag.as_str() {
            "-h" | "--help" => return Err(String::new()),
            "--config" => path_arg(&mut cli.config)?,
            "--output" => path_arg(&mut cli.output)?,
            "--initial" => path_arg(&mut cli.initial)?,
            "--source" => path_arg(&mut cli.source)?,
            "--terminal" => path_arg(&mut cli.terminal)?,
            "--control" => path_arg(&mut cli.control)?,
            "--particles" => {
                let v = it.next().ok_or("--particles needs a value")?;
                cli.particles = Some(v.parse().map_err(|_| format!("--particles: '{v}' is not a count"))?);
            }
            other => return Err(format!("unknown option '{other}'")),
        }
    }
    Ok(cli)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(message) => {
            if message.is_empty() {
                print!("{USAGE}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {message}");
            eprint!("{USAGE}");
            return ExitCode::from(1);
        }
    };

    let config = match load(&cli) {
        Ok(c) => c,
        Err(Error::ConfigViolations(list)) => {
            eprintln!("configuration invalid:");
            for v in &list {
                eprintln!("  {v}");
            }
            return ExitCode::from(3);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let outcome = match cli.command.as_str() {
        "solve-fp" => run_solve_fp(&config, &cli),
        "solve-hjb" => run_solve_hjb(&config, &cli),
        "solve-mfg" => run_solve_mfg(&config),
        "simulate-particles" => run_particles(&config, &cli),
        "verify" => run_verify(&config),
        _ => unreachable!("subcommand validated in parse_args"),
    };
    match outcome {
        Ok(code) => code,
        Err(Error::ConfigViolations(list)) => {
            eprintln!("configuration invalid:");
            for v in &list {
                eprintln!("  {v}");
            }
            ExitCode::from(3)
        }
        Err(Error::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("solver error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> meanfield::Result<SolverConfig> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => {
            let mut c = parse_config("")?;
            if let Ok(dir) = std::env::var("MEANFIELD_OUTPUT_DIR") {
                if !dir.is_empty() {
                    c.run.output_dir = dir.into();
                }
            }
            c
        }
    };
    if let Some(dir) = &cli.output {
        config.run.output_dir = dir.clone();
    }
    std::fs::create_dir_all(&config.run.output_dir)?;
    Ok(config)
}

/// Load a field dump, choosing the format by extension.
fn load_field(path: &Path, config: &SolverConfig) -> meanfield::Result<ScalarField> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_field_csv(path, &config.domain),
        _ => read_field_bin(path, &config.domain).map(|(field, _)| field),
    }
}

fn dump_name(stem: &str, index: usize) -> String {
    format!("{stem}_{index:04}.fld")
}

/// Write every `stride`-th slice (plus the final one) as binary dumps.
fn dump_slices(
    dir: &Path,
    stem: &str,
    slices: &[ScalarField],
    stride: usize,
    time_steps: u32,
) -> meanfield::Result<Vec<String>> {
    let mut written = Vec::new();
    let last = slices.len() - 1;
    for (k, slice) in slices.iter().enumerate() {
        if k % stride != 0 && k != last {
            continue;
        }
        let name = dump_name(stem, k);
        write_field_bin(&dir.join(&name), slice, time_steps)?;
        written.push(name);
    }
    Ok(written)
}

fn run_solve_fp(config: &SolverConfig, cli: &Cli) -> meanfield::Result<ExitCode> {
    let ops = config.kernel_ops();
    let rho0 = match &cli.initial {
        Some(path) => load_field(path, config)?,
        None => config.build_initial_density()?,
    };
    let controls = config.build_drift()?;
    let traj = solve_fp(&rho0, &controls, &ops)?;

    let dir = &config.run.output_dir;
    let mut report = RunReport::new("solve-fp", config.domain);
    report.density = Some(FpReport::from_trajectory(&traj));
    let dumped = dump_slices(
        dir,
        "density",
        &traj.slices,
        config.run.dump_stride,
        config.domain.time_steps as u32,
    )?;
    write_field_csv(&dir.join("density_final.csv"), traj.final_slice())?;
    report
        .notes
        .push(format!("{} binary slices and density_final.csv", dumped.len()));
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "solve-fp: {} steps, mass drift {:.2e}, dumps in {}",
        config.domain.time_steps,
        traj.diagnostics.mass_drift,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_solve_hjb(config: &SolverConfig, cli: &Cli) -> meanfield::Result<ExitCode> {
    let domain = config.domain;
    let ops = config.kernel_ops();
    let problem = config.build_problem()?;
    let params = config.build_params()?;

    // Coupling layers: from files when given, otherwise derived from the
    // configured couplings applied to the configured initial density.
    let eta: Vec<ScalarField> = match &cli.source {
        Some(path) => {
            let slice = load_field(path, config)?;
            (0..=domain.time_steps)
                .map(|k| {
                    let mut s = slice.clone();
                    s.time_index = k;
                    s
                })
                .collect()
        }
        None => {
            let rho = vec![problem.rho0.clone(); domain.time_steps + 1];
            coupling_eta(&rho, &problem.running, 0.0)?
        }
    };
    let eta0 = match &cli.terminal {
        Some(path) => load_field(path, config)?,
        None => terminal_eta0(&problem.rho0, &problem.terminal, 0.0)?,
    };

    let traj = solve_hjb(&eta, &eta0, &problem.hamiltonian, &params.hjb, &ops)?;

    let dir = &config.run.output_dir;
    let mut report = RunReport::new("solve-hjb", domain);
    report.value = Some(HjbReport::from_diagnostics(&traj.diagnostics));
    let dumped = dump_slices(
        dir,
        "value",
        &traj.p,
        config.run.dump_stride,
        domain.time_steps as u32,
    )?;
    write_field_csv(&dir.join("value_initial.csv"), &traj.p[0])?;
    report
        .notes
        .push(format!("{} binary slices and value_initial.csv", dumped.len()));
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "solve-hjb: contraction ratio {:.3}, residual {:.2e}, dumps in {}",
        traj.diagnostics.contraction_ratio,
        traj.diagnostics.mild_residual,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_solve_mfg(config: &SolverConfig) -> meanfield::Result<ExitCode> {
    let domain = config.domain;
    let ops = config.kernel_ops();
    let problem = config.build_problem()?;
    let params = config.build_params()?;
    let state = solve_mfg(&problem, &params, &ops)?;

    let dir = &config.run.output_dir;
    let stride = config.run.dump_stride;
    dump_slices(dir, "density", &state.rho.slices, stride, domain.time_steps as u32)?;
    dump_slices(dir, "value", &state.value.p, stride, domain.time_steps as u32)?;
    // Control components as scalar dumps, one file per axis.
    for axis in 0..domain.dim {
        let stem = ["control_x", "control_y"][axis];
        let slices: meanfield::Result<Vec<ScalarField>> = state
            .control
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let mut s = ScalarField::from_data(&domain, u.component(axis).to_vec())?;
                s.time_index = k;
                Ok(s)
            })
            .collect();
        dump_slices(dir, stem, &slices?, stride, domain.time_steps as u32)?;
    }

    // Sweep history as CSV.
    let mut history = String::from("sweep,eps,theta,delta_rho,delta_u,fenchel_sup,cost\n");
    for (i, rec) in state.history.iter().enumerate() {
        history.push_str(&format!(
            "{i},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            rec.eps, rec.theta, rec.delta_rho, rec.delta_u, rec.fenchel_sup, rec.cost
        ));
    }
    std::fs::write(dir.join("residual_history.csv"), history)?;

    let mut report = RunReport::new("solve-mfg", domain);
    report.equilibrium = Some(EquilibriumReport::from_state(&state));
    report.hypotheses = Some(HypothesisReport {
        running_cost_envelope: envelope_report(&problem.running),
        conjugate_envelope: envelope_report(&problem.terminal),
    });
    write_json(&dir.join("report.json"), &report)?;

    println!(
        "solve-mfg: {} sweeps, cost {:.6}, worst residual {:.2e}, dumps in {}",
        state.outer_iterations,
        state.cost,
        state.residuals.max_component().max(state.residuals.fenchel_sup),
        dir.display()
    );
    if state.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        match &state.warning {
            Some(w) => eprintln!("not converged: {w}"),
            None => eprintln!("not converged within the sweep budget"),
        }
        Ok(ExitCode::from(2))
    }
}

fn run_particles(config: &SolverConfig, cli: &Cli) -> meanfield::Result<ExitCode> {
    let domain = config.domain;
    let ops = config.kernel_ops();
    let rho0 = config.build_initial_density()?;
    let controls = match &cli.control {
        Some(path) => {
            // A stored scalar dump is taken as the x-component of the drift.
            let slice = load_field(path, config)?;
            let mut v = VectorField::zeros(&domain);
            v.component_mut(0).copy_from_slice(slice.values());
            vec![v]
        }
        None => config.build_drift()?,
    };
    let traj = solve_fp(&rho0, &controls, &ops)?;

    let count = cli.particles.unwrap_or(config.run.particle_count);
    let seed = config.run.seed;
    let mut ensemble = ParticleEnsemble::sample_from_density(&rho0, count, seed)?;
    let comparison = compare_fp(&mut ensemble, &controls, &traj, config.run.dump_stride);

    let dir = &config.run.output_dir;
    let mut profile = String::from("time_index,time,l1_distance\n");
    for (k, d) in comparison.time_indices.iter().zip(&comparison.distances) {
        profile.push_str(&format!("{k},{:.17e},{:.17e}\n", domain.time(*k), d));
    }
    std::fs::write(dir.join("distance_profile.csv"), profile)?;

    let mut report = RunReport::new("simulate-particles", domain);
    report.seed = Some(seed);
    report.density = Some(FpReport::from_trajectory(&traj));
    report.particles = Some(ParticleReport::from_comparison(&comparison, count));
    write_json(&dir.join("report.json"), &report)?;

    println!(
        "simulate-particles: {count} particles ({}), max distance {:.4}, profile in {}",
        generator_identity(seed),
        comparison.max_distance,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_verify(config: &SolverConfig) -> meanfield::Result<ExitCode> {
    let reports = verify::run_all();
    for r in &reports {
        println!("{}", r.line());
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{passed}/{} checks passed", reports.len());
    let dir = &config.run.output_dir;
    std::fs::write(dir.join("verify_report.json"), json_string(&reports)?)?;
    if passed == reports.len() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}
