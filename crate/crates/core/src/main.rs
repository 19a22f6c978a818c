use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use kp2lab::burgers::u_b;
use kp2lab::experiment::{
    all_pass, eigen_suite, format_checks, kernel_suite, phase_report, profile_report, run_simulation,
    simulation_checks, Check, ExperimentConfig, SimulationRun, SnapshotFiles,
};
use kp2lab::grid::{read_snapshot, write_snapshot};
use kp2lab::{Error, Result};

#[derive(Parser)]
#[command(name = "kp2lab", version, about = "Modulating line solitons of KP-II: experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (TOML, flat sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Residuals of the resonant modes and their adjoints.
    VerifyEigen,
    /// Kernel decay fits, asymptotic comparators and the phase-limit integral.
    Kernels,
    /// Full run: flow, auxiliary flow, both extractions, decomposition norms.
    Simulate,
    /// Extracted modulations against the self-similar Burgers pair.
    CompareProfile,
    /// Phase plateau and cone diagnostics.
    Phase,
}

fn csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_track_csv(path: &Path, run: &SimulationRun, projected: bool, cfg: &ExperimentConfig) -> Result<()> {
    let track = if projected { &run.projected } else { &run.fit };
    let constants = cfg.constants();
    let mut rows = Vec::new();
    for i in 0..track.len() {
        let xy = track.phase_y(i);
        let b = track.b(i, &constants);
        for (iy, y) in track.ys.iter().enumerate() {
            rows.push(format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                track.times[i], y, track.c[i][iy], track.phase[i][iy], xy[iy], b[iy]
            ));
        }
    }
    csv(path, "t,y,c,x,xy,b", rows)
}

fn write_snapshots(dir: &Path, run: &SimulationRun, which: SnapshotFiles) -> Result<Check> {
    let n = run.trajectory.snapshots.len();
    let indices: Vec<usize> = match which {
        SnapshotFiles::None => return Ok(Check::new("snapshot reload", true, "no snapshots written")),
        SnapshotFiles::Last => vec![n - 1],
        SnapshotFiles::All => (0..n).collect(),
    };
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut exact = true;
    for i in &indices {
        let path = snap_dir.join(format!("u_{i:04}.bin"));
        let f = &run.trajectory.snapshots[*i];
        write_snapshot(BufWriter::new(File::create(&path)?), f)?;
        let back = read_snapshot(File::open(&path)?)?;
        exact &= back.grid() == f.grid()
            && back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    Ok(Check::new("snapshot reload bit-exact", exact, format!("{} file(s)", indices.len())))
}

fn write_run_files(dir: &Path, run: &SimulationRun, cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let traj = &run.trajectory;
    csv(
        &dir.join("conserved.csv"),
        "t,l2,hamiltonian",
        traj.times.iter().zip(&traj.conserved).map(|(t, (l, h))| format!("{t},{l:.15e},{h:.15e}")),
    )?;
    write_track_csv(&dir.join("track.csv"), run, true, cfg)?;
    write_track_csv(&dir.join("track_fit.csv"), run, false, cfg)?;
    csv(
        &dir.join("agreement.csv"),
        "t,max_dc,max_dx",
        run.agreement.iter().map(|a| format!("{},{:.6e},{:.6e}", a.t, a.dc, a.dx)),
    )?;
    if !run.decomposition.is_empty() {
        csv(
            &dir.join("decomposition.csv"),
            "t,v_l2,v2_l2,k_l2",
            run.decomposition.iter().map(|d| format!("{},{:.9e},{:.9e},{:.9e}", d.t, d.v, d.v2, d.k)),
        )?;
    }
    Ok(vec![write_snapshots(dir, run, cfg.solver.snapshot_files)?])
}

fn verify_eigen(cfg: &ExperimentConfig, dir: &Path, report: &mut String) -> Result<Vec<Check>> {
    let r = eigen_suite(cfg)?;
    let stride = 16;
    let mut rows = Vec::new();
    for p in &r.pairs {
        for (i, x) in r.window.xs().iter().enumerate().step_by(stride) {
            rows.push(format!(
                "{},{x},{:.12e},{:.12e},{:.12e},{:.12e}",
                p.eta, p.g[i].re, p.g[i].im, p.g_star[i].re, p.g_star[i].im
            ));
        }
    }
    csv(&dir.join("modes.csv"), "eta,x,Re g,Im g,Re g*,Im g*", rows)?;
    let _ = writeln!(report, "eta  lambda  residual  adjoint_residual  biorthogonality");
    for row in &r.rows {
        let _ = writeln!(
            report,
            "{}  {:.6e}{:+.6e}i  {:.3e}  {:.3e}  [[{:.4}, {:.4}], [{:.4}, {:.4}]]",
            row.eta,
            row.lambda.re,
            row.lambda.im,
            row.residual,
            row.adjoint_residual,
            row.biorth[0][0],
            row.biorth[0][1],
            row.biorth[1][0],
            row.biorth[1][1]
        );
    }
    Ok(r.checks())
}

fn kernels(cfg: &ExperimentConfig, dir: &Path, report: &mut String) -> Result<Vec<Check>> {
    let r = kernel_suite(cfg)?;
    let names = ["K1", "K2", "K3", "dyK3"];
    let mut rows = Vec::new();
    for (t, norms) in &r.norms {
        for (name, n) in names.iter().zip(norms) {
            rows.push(format!("{t:.6},{name},{:.9e},{:.9e},{:.9e}", n.l1, n.l2, n.linf));
        }
    }
    csv(&dir.join("kernels.csv"), "t,kernel,L1,L2,Linf", rows)?;
    csv(
        &dir.join("slopes.csv"),
        "kernel,claimed_exponent,fitted,ci_lo,ci_hi",
        r.slopes.iter().map(|s| {
            format!(
                "{},{}/{},{:.6},{:.6},{:.6}",
                s.spec.name, s.spec.claimed.0, s.spec.claimed.1, s.fit.slope, s.fit.ci_lo, s.fit.ci_hi
            )
        }),
    )?;
    csv(
        &dir.join("comparators.csv"),
        "t,asymp1,asymp2,asymp3,k1,dk3,k3",
        r.comparators.iter().map(|(t, c)| {
            format!("{t:.6},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}", c.asymp1, c.asymp2, c.asymp3, c.k1, c.dk3, c.k3)
        }),
    )?;
    let _ = writeln!(
        report,
        "phase limit: inside {:.6} (half mass {:.6}, tail {:.2e}); outside {:.3e}",
        r.phase_inside.value, r.phase_inside.half_mass, r.phase_inside.tail_fraction, r.phase_outside.value
    );
    for (t, v) in &r.high_freq {
        let _ = writeln!(report, "high-frequency ratio at t = {t}: {v:.4}");
    }
    Ok(r.checks())
}

/// Periodic images start to matter at these times: the modulation fronts move
/// along y at speed 4 from y = 0, and radiation shed behind the crest drifts
/// back at speed 4 or more in the co-moving frame.
fn write_reentry(cfg: &ExperimentConfig, report: &mut String) {
    let _ = writeln!(report, "modulation fronts reach y = +-ly/2 at t = {:.1}", cfg.grid.ly / 8.0);
    let sponge = if cfg.solver.sponge { "damped by the sponge" } else { "no sponge" };
    let _ = writeln!(report, "rear radiation re-enters ahead of the crest from t = {:.1} ({sponge})", cfg.grid.lx / 4.0);
}

fn simulate_cmd(cfg: &ExperimentConfig, seed: u64, dir: &Path, report: &mut String) -> Result<Vec<Check>> {
    write_reentry(cfg, report);
    let run = run_simulation(cfg, seed, cfg.solver.aux_flow)?;
    let mut checks = simulation_checks(&run, cfg);
    checks.extend(write_run_files(dir, &run, cfg)?);
    let (dl, dh) = run.trajectory.relative_drift();
    let _ = writeln!(report, "relative drift: l2 {dl:.3e}, hamiltonian {dh:.3e}");
    let _ = writeln!(report, "modulation mass {:.6e}", run.projected.initial_mass());
    Ok(checks)
}

fn compare_profile(cfg: &ExperimentConfig, seed: u64, dir: &Path, report: &mut String) -> Result<Vec<Check>> {
    write_reentry(cfg, report);
    let run = run_simulation(cfg, seed, false)?;
    let mut checks = write_run_files(dir, &run, cfg)?;
    let r = profile_report(&run.projected)?;
    let track = &run.projected;
    let mut rows = Vec::new();
    for &t in track.times.iter().filter(|t| **t > 0.0) {
        for y in &track.ys {
            rows.push(format!("{t},{y},{:.12e},{:.12e}", u_b(t, *y, &r.pair.plus), u_b(t, *y, &r.pair.minus)));
        }
    }
    csv(&dir.join("profiles.csv"), "t,y,uB_plus,uB_minus", rows)?;
    csv(
        &dir.join("comparator.csv"),
        "t,dev_L2,dev_normalized",
        r.deviations.iter().map(|d| format!("{},{:.9e},{:.9e}", d.t, d.dev_l2, d.dev_normalized)),
    )?;
    let _ = writeln!(report, "mass M = {:.6e}", r.mass);
    let _ = writeln!(report, "m_plus = {:.6e}", r.pair.plus.m());
    let _ = writeln!(report, "m_minus = {:.6e}", r.pair.minus.m());
    let _ = writeln!(
        report,
        "linear thirds = [{:.3e}, {:.3e}, {:.3e}]",
        r.linear_thirds[0], r.linear_thirds[1], r.linear_thirds[2]
    );
    checks.extend(r.checks());
    Ok(checks)
}

fn phase(cfg: &ExperimentConfig, seed: u64, dir: &Path, report: &mut String) -> Result<Vec<Check>> {
    write_reentry(cfg, report);
    let run = run_simulation(cfg, seed, false)?;
    let mut checks = write_run_files(dir, &run, cfg)?;
    let r = phase_report(&run, cfg, seed)?;
    let d = &r.diagnostics;
    let _ = writeln!(report, "{{");
    let _ = writeln!(report, "  \"sup_shift\": {:.9e},", d.sup_shift);
    let _ = writeln!(report, "  \"plateau_h\": {:.9e},", d.plateau_h);
    let _ = writeln!(report, "  \"inside_dev\": {:.9e},", d.inside_dev);
    let _ = writeln!(report, "  \"outside_sup\": {:.9e},", d.outside_sup);
    let _ = writeln!(report, "  \"predicted_h\": {:.9e}", r.predicted_h);
    let _ = writeln!(report, "}}");
    if let Some(f) = &r.refined {
        let _ = writeln!(report, "refined plateau_h = {:.9e}", f.plateau_h);
    }
    csv(
        &dir.join("outside_cone.csv"),
        "t,outside_sup",
        r.outside.iter().map(|(t, v)| format!("{t},{v:.9e}")),
    )?;
    checks.extend(r.checks());
    Ok(checks)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => return Err(Error::Config("--config <path> is required".into())),
    };
    let seed = cli.seed.unwrap_or(cfg.experiment.seed);
    fs::create_dir_all(&cli.out)?;
    let mut report = String::new();
    let _ = writeln!(report, "experiment = {}", cfg.experiment.name);
    let _ = writeln!(report, "seed = {seed}");
    info!("running {} into {}", cfg.experiment.name, cli.out.display());
    let checks = match cli.command {
        Command::VerifyEigen => verify_eigen(&cfg, &cli.out, &mut report)?,
        Command::Kernels => kernels(&cfg, &cli.out, &mut report)?,
        Command::Simulate => simulate_cmd(&cfg, seed, &cli.out, &mut report)?,
        Command::CompareProfile => compare_profile(&cfg, seed, &cli.out, &mut report)?,
        Command::Phase => phase(&cfg, seed, &cli.out, &mut report)?,
    };
    let summary = format_checks(&checks);
    report.push_str(&summary);
    fs::write(cli.out.join("report.txt"), &report)?;
    print!("{summary}");
    Ok(all_pass(&checks))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
