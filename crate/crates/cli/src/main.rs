//! `sawfilt` — ladder filter design, simulation, and measurement extraction
//! for SH-SAW resonator technology.
//!
//! Subcommands chain through ordinary files: `design` turns a project config
//! into a design document, `simulate` sweeps a design into a Touchstone
//! .s2p, `report` reads a sweep back into scalar metrics, and `fit` /
//! `bodeq` extract resonator models and Q curves from measured one-port
//! data. Every run is deterministic: same inputs and seed, same bytes out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sawfilt_cli::config::load_config;
use sawfilt_cli::docs::{
    read_json, write_atomic, write_json_atomic, DesignDocument, MetricsDocument, ResonatorPlan,
    TOOL_NAME,
};
use sawfilt_cli::error::{Context, Result, ShellError};
use sawfilt_cli::touchstone::{read_touchstone, write_touchstone, TouchstoneData, ValueFormat};
use sawfilt_core::{
    bode_q, dimension_from_c0, fit_mbvd, init_design, make_grid, metrics, optimize, scale_fingers,
    select_period, simulate, ApodizationWindow, GridSpacing, OnePortResponse, StageRole,
    TwoPortResponse,
};

#[derive(Parser)]
#[command(
    name = "sawfilt",
    version,
    about = "SAW ladder filter design and extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a multi-branch mBVD model to one-port data
    Fit {
        /// Touchstone .s1p input (S, Y, or Z)
        input: PathBuf,
        /// Number of motional branches to fit
        #[arg(long, default_value_t = 1)]
        branches: usize,
        /// Seed for the fit's randomized simplex starts
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON fit report
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Extract a reflection-based Q curve from one-port data
    Bodeq {
        /// Touchstone .s1p input
        input: PathBuf,
        /// Output CSV (frequency_hz, q)
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Synthesize, optimize, and dimension a ladder filter
    Design {
        /// Project config JSON
        config: PathBuf,
        /// Output design document JSON
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sweep a designed filter and write a 2-port Touchstone file
    Simulate {
        /// Design document from `design`
        design: PathBuf,
        /// Sweep grid as f_start:f_stop:n (Hz, linear)
        #[arg(long)]
        grid: String,
        /// Output .s2p
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compute passband/stopband metrics from a simulated or measured .s2p
    Report {
        /// 2-port Touchstone input
        s2p: PathBuf,
        /// Project config JSON (for the targets)
        config: PathBuf,
        /// Output metrics JSON; plot CSVs go to the config's output_dir
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Fit {
            input,
            branches,
            seed,
            output,
        } => cmd_fit(&input, branches, seed, &output),
        Command::Bodeq { input, output } => cmd_bodeq(&input, &output),
        Command::Design { config, output } => cmd_design(&config, &output),
        Command::Simulate {
            design,
            grid,
            output,
        } => cmd_simulate(&design, &grid, &output),
        Command::Report {
            s2p,
            config,
            output,
        } => cmd_report(&s2p, &config, &output),
    }
}

fn read_one_port(path: &Path) -> Result<OnePortResponse> {
    let text = fs::read_to_string(path).context(&format!("cannot read {}", path.display()))?;
    let ts =
        read_touchstone(&text).map_err(|e| ShellError(format!("{}: {}", path.display(), e)))?;
    ts.to_one_port_admittance()
        .map_err(|e| ShellError(format!("{}: {}", path.display(), e)))
}

fn read_two_port(path: &Path) -> Result<TwoPortResponse> {
    let text = fs::read_to_string(path).context(&format!("cannot read {}", path.display()))?;
    let ts =
        read_touchstone(&text).map_err(|e| ShellError(format!("{}: {}", path.display(), e)))?;
    ts.to_two_port_s()
        .map_err(|e| ShellError(format!("{}: {}", path.display(), e)))
}

fn cmd_fit(input: &Path, branches: usize, seed: u64, output: &Path) -> Result<ExitCode> {
    let data = read_one_port(input)?;
    let report = fit_mbvd(&data, branches, seed)?;
    write_json_atomic(output, &report)?;
    println!(
        "wrote {} (residual {:.3e}, {} passes, converged: {})",
        output.display(),
        report.residual,
        report.n_iterations,
        report.converged
    );
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_bodeq(input: &Path, output: &Path) -> Result<ExitCode> {
    let data = read_one_port(input)?;
    let curve = bode_q(&data)?;
    let mut csv = String::from("frequency_hz,q\n");
    for (f, q) in curve.grid().points().iter().zip(curve.values()) {
        match q {
            Some(q) => csv.push_str(&format!("{f:.16e},{q:.16e}\n")),
            // undefined points (|S11| at or beyond 1) keep the row but
            // leave the value empty
            None => csv.push_str(&format!("{f:.16e},\n")),
        }
    }
    write_atomic(output, csv.as_bytes())?;
    println!("wrote {}", output.display());
    Ok(ExitCode::SUCCESS)
}

fn role_name(role: StageRole) -> &'static str {
    match role {
        StageRole::Shunt => "shunt",
        StageRole::Series => "series",
    }
}

fn cmd_design(config_path: &Path, output: &Path) -> Result<ExitCode> {
    let lc = load_config(config_path)?;
    let c = &lc.config;
    let tech = &c.technology;

    // seed both static capacitances at the geometric middle of the
    // realizable range; the optimizer moves them from there
    let c0_seed = (tech.c0_bounds_f[0] * tech.c0_bounds_f[1]).sqrt();
    let t0 = init_design(
        &c.targets,
        tech.k2,
        tech.q_shunt,
        tech.q_series,
        c0_seed,
        c0_seed,
    )?;
    let grid = make_grid(
        c.grid.f_start_hz,
        c.grid.f_stop_hz,
        c.grid.n,
        c.grid.spacing,
    )?;
    let (topology, m) = optimize(&t0, &c.targets, &grid)?;

    let mut resonators = Vec::new();
    for role in [StageRole::Shunt, StageRole::Series] {
        let model = topology
            .stages
            .iter()
            .find(|(r, _)| *r == role)
            .map(|(_, m)| m)
            .expect("canonical ladder holds both roles");
        let [c_lo, c_hi] = tech.c0_bounds_f;
        if !(c_lo <= model.c_0 && model.c_0 <= c_hi) {
            return Err(ShellError(format!(
                "optimized {} capacitance {:.4e} F falls outside the realizable range [{:.4e}, {:.4e}] F",
                role_name(role),
                model.c_0,
                c_lo,
                c_hi
            )));
        }
        let f_s = model.main_branch().series_resonance_hz();
        let (lambda_um, k2_at_lambda) = select_period(&lc.dispersion, f_s)?;
        // dimension the uniform-overlap equivalent, then scale the electrode
        // count for the apodization window
        let layout = dimension_from_c0(
            model.c_0,
            lambda_um,
            &tech.capacitance,
            &ApodizationWindow::Uniform,
            (tech.aperture_bounds_um[0], tech.aperture_bounds_um[1]),
        )?;
        let n_e_apodized =
            scale_fingers(layout.n_e, &c.apodization.window, c.apodization.calibration)?;
        resonators.push(ResonatorPlan {
            role,
            f_s_hz: f_s,
            lambda_um,
            k2_at_lambda,
            c0_target_f: model.c_0,
            c0_realized_f: layout.c0,
            aperture_um: layout.aperture_um,
            n_e_conventional: layout.n_e,
            n_e_apodized,
            window: c.apodization.window,
        });
    }

    let doc = DesignDocument {
        tool: TOOL_NAME.into(),
        config_sha256: lc.sha256,
        targets: c.targets.clone(),
        topology,
        metrics: m,
        resonators,
    };
    write_json_atomic(output, &doc)?;
    println!(
        "wrote {} (il {:.2} dB, fbw {:.2}%, rejection {:.1} dB)",
        output.display(),
        m.il_db,
        100.0 * m.fbw_3db,
        m.oob_rejection_db
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_grid_arg(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || ShellError(format!("grid must be f_start:f_stop:n, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let f0: f64 = parts[0].parse().map_err(|_| bad())?;
    let f1: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    Ok((f0, f1, n))
}

fn cmd_simulate(design_path: &Path, grid_arg: &str, output: &Path) -> Result<ExitCode> {
    let doc: DesignDocument = read_json(design_path)?;
    let (f0, f1, n) = parse_grid_arg(grid_arg)?;
    let grid = make_grid(f0, f1, n, GridSpacing::Linear)?;
    let resp = simulate(&doc.topology, &grid, doc.targets.z_ref)?;
    let ts = TouchstoneData::from_two_port_s(&resp);
    let text = write_touchstone(&ts, ValueFormat::Ri, Some(&doc.config_sha256));
    write_atomic(output, text.as_bytes())?;
    println!("wrote {} ({} points)", output.display(), n);
    Ok(ExitCode::SUCCESS)
}

/// Selects which scattering entry a level-curve CSV plots.
type TracePick = fn(&sawfilt_core::SPoint) -> sawfilt_core::Complex;

fn cmd_report(s2p_path: &Path, config_path: &Path, output: &Path) -> Result<ExitCode> {
    let resp = read_two_port(s2p_path)?;
    let lc = load_config(config_path)?;
    let m = metrics(&resp, &lc.config.targets)?;
    let doc = MetricsDocument {
        tool: TOOL_NAME.into(),
        config_sha256: lc.sha256.clone(),
        metrics: m,
    };
    write_json_atomic(output, &doc)?;

    // plot-ready level curves beside the metrics, named after it
    let stem = output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    let out_dir = lc.base_dir.join(&lc.config.output_dir);
    let mut paths = vec![output.to_path_buf()];
    let picks: [(&str, TracePick); 2] = [("s21_db", |p| p.s21), ("s11_db", |p| p.s11)];
    for (suffix, pick) in picks {
        let mut csv = format!("frequency_hz,{suffix}\n");
        for (f, p) in resp.grid().points().iter().zip(resp.samples()) {
            let db = 20.0 * pick(p).norm().log10();
            if db.is_finite() {
                csv.push_str(&format!("{f:.16e},{db:.16e}\n"));
            } else {
                csv.push_str(&format!("{f:.16e},\n"));
            }
        }
        let path = out_dir.join(format!("{stem}_{suffix}.csv"));
        write_atomic(&path, csv.as_bytes())?;
        paths.push(path);
    }
    println!(
        "wrote {} (il {:.2} dB, fbw {:.2}%, rejection {:.1} dB)",
        paths
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", "),
        m.il_db,
        100.0 * m.fbw_3db,
        m.oob_rejection_db
    );
    Ok(ExitCode::SUCCESS)
}
