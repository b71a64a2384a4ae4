use std::fs;
use std::io::Write;
use std::path::Path;

use hyperchoreo::continuation::{self, ContinuationOptions, FamilyMember};
use hyperchoreo::geometry::{lift_to_hyperboloid, DiskPoint};
use hyperchoreo::optimizer::{self, PhaseStatus};
use hyperchoreo::verify::{verify_all, Thresholds, Verification};
use hyperchoreo::{
    Choreography, Configuration, Curvature, Phase1Options, Phase2Options, PhaseReport, TrigPath,
};
use rayon::prelude::*;

use crate::args::{
    Cli, Command, ExportArgs, ExportFormat, ProblemArgs, SearchArgs, SeedSource, SolveArgs, SweepArgs,
    VerifyArgs,
};
use crate::file::{write_atomic, SolutionFile};
use crate::{is_infeasible, CliError, SystemClock};

/// Solutions whose actions agree to this relative tolerance count as one.
pub const DISTINCT_ACTION: f64 = 1e-6;

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Export(a) => export(a, out),
        Command::Search(a) => search(a, out),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

fn configuration(p: &ProblemArgs, fallback: Option<&Configuration>) -> Result<Configuration, CliError> {
    let missing = |flag: &str| CliError::Usage(format!("--{flag} is required without a seed file"));
    let n = p.n.or(fallback.map(|c| c.bodies)).ok_or_else(|| missing("n"))?;
    let curvature = match p.radius {
        Some(r) => r.curvature()?,
        None => fallback.map(|c| c.curvature).ok_or_else(|| missing("R"))?,
    };
    let omega = p.omega.or(fallback.map(|c| c.omega)).unwrap_or(0.0);
    let k = p.bandwidth.or(fallback.map(|c| c.bandwidth)).ok_or_else(|| missing("K"))?;
    Ok(Configuration::new(n, curvature, omega, k)?)
}

fn phase2_options(p: &ProblemArgs) -> Phase2Options {
    Phase2Options {
        bandwidth: p.bandwidth2,
        ..Phase2Options::default()
    }
}

fn random_seed(config: &Configuration, modes: usize, rng: u64) -> Result<TrigPath, CliError> {
    optimizer::random_seed(config, modes.min(config.bandwidth), rng).map_err(|e| match e {
        e if is_infeasible(&e) => CliError::InfeasibleSeed(e.to_string()),
        e => e.into(),
    })
}

fn two_phase(config: &Configuration, seed: &TrigPath, opts2: &Phase2Options) -> Result<Choreography, CliError> {
    let clock = SystemClock::new();
    optimizer::solve_timed(config, seed, &Phase1Options::default(), opts2, &clock).map_err(|e| {
        if is_infeasible(&e) {
            CliError::InfeasibleSeed(e.to_string())
        } else {
            e.into()
        }
    })
}

/// A solve is accepted when its last phase succeeded and it passes the
/// default verification thresholds.
fn accepted(c: &Choreography) -> bool {
    c.report.last().is_some_and(|p| p.status.is_success()) && verify_all(c, &Thresholds::default()).passed
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (config, seed) = match &a.seed {
        SeedSource::File(path) => {
            let file = SolutionFile::read(path)?;
            let config = configuration(&a.problem, Some(&file.configuration()?))?;
            let seed = optimizer::fit_bandwidth(&file.path()?, config.bandwidth)?;
            (config, seed)
        }
        SeedSource::Random(rng) => {
            let config = configuration(&a.problem, None)?;
            let seed = random_seed(&config, a.problem.seed_modes, *rng)?;
            (config, seed)
        }
    };
    let choreo = two_phase(&config, &seed, &phase2_options(&a.problem))?;
    write_report(&choreo, out).map_err(io_err)?;
    if !accepted(&choreo) {
        return Err(CliError::NotConverged("solve did not converge; no file written".into()));
    }
    SolutionFile::from_choreography(&choreo).write(&a.out)
}

/// The two-column phase table.
pub fn write_report(c: &Choreography, out: &mut dyn Write) -> std::io::Result<()> {
    let phases: Vec<(&str, &PhaseReport)> = [("Phase 1: BFGS", &c.report.phase1), ("Phase 2: Newton", &c.report.phase2)]
        .into_iter()
        .filter_map(|(name, p)| p.as_ref().map(|p| (name, p)))
        .collect();
    let row = |out: &mut dyn Write, label: &str, cell: &dyn Fn(&PhaseReport) -> String| {
        write!(out, "{label:<34}")?;
        for (_, p) in &phases {
            write!(out, "{:>22}", cell(p))?;
        }
        writeln!(out)
    };
    write!(out, "{:<34}", "")?;
    for (name, _) in &phases {
        write!(out, "{name:>22}")?;
    }
    writeln!(out)?;
    row(out, "Action", &|p| format!("{:.15}", p.action))?;
    row(out, "Number of coefficients", &|p| p.coefficient_count.to_string())?;
    row(out, "Computer time (s)", &|p| format!("{:.4}", p.wall_time_seconds))?;
    row(out, "Number of iterations", &|p| p.iterations.to_string())?;
    row(out, "Relative 2-norm of the gradient", &|p| format!("{:.2e}", p.gradient_rel_norm))?;
    row(out, "Smallest coefficient", &|p| format!("{:.2e}", p.smallest_coefficient))?;
    row(out, "Relative 2-norm of the residual", &|p| format!("{:.2e}", p.residual_rel_norm))?;
    row(out, "Status", &|p| format!("{:?}", p.status))
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let choreo = SolutionFile::read(&a.file)?.choreography()?;
    let thresholds = Thresholds {
        decay: a.decay,
        gradient: a.gradient,
        residual: a.residual,
    };
    let v = verify_all(&choreo, &thresholds);
    write_verification(&v, &thresholds, out).map_err(io_err)?;
    if v.passed {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("{} fails verification", a.file.display())))
    }
}

fn write_verification(v: &Verification, t: &Thresholds, out: &mut dyn Write) -> std::io::Result<()> {
    let line = |out: &mut dyn Write, name: &str, value: Option<f64>, limit: f64| {
        let (shown, verdict) = match value {
            Some(x) => (format!("{x:.3e}"), if x <= limit { "pass" } else { "fail" }),
            None => ("n/a".to_string(), "fail"),
        };
        writeln!(out, "{name:<22}{shown:>12}  <= {limit:.0e}  {verdict}")
    };
    line(out, "smallest coefficient", Some(v.decay), t.decay)?;
    line(out, "gradient norm", v.gradient, t.gradient)?;
    line(out, "residual", v.residual, t.residual)?;
    if let Some(e) = &v.error {
        writeln!(out, "error: {e}")?;
    }
    writeln!(out, "{}", if v.passed { "pass" } else { "fail" })
}

fn sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let family = SolutionFile::read(&a.family)?.choreography()?;
    let label = a.label.clone().unwrap_or_else(|| {
        a.family
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    if a.radii.is_empty() {
        return Err(CliError::Usage("--R-list is empty".into()));
    }
    let mut radii = a.radii.clone();
    radii.sort_by(|x, y| y.total_cmp(x));
    radii.dedup();
    let opts = ContinuationOptions::default();
    let planar = continuation::planar_limit_of(&family, &opts)
        .map_err(|e| CliError::NotConverged(format!("no planar limit: {e}")))?;
    let result = continuation::continue_in_radius(&planar, &radii, &opts)?;
    let csv = sweep_csv(&label, &result.members)?;
    match &a.out {
        Some(path) => write_atomic(path, &csv)?,
        None => out.write_all(&csv).map_err(io_err)?,
    }
    match result.failed_at {
        Some(r) => Err(CliError::NotConverged(format!("continuation failed at R = {r}"))),
        None => Ok(()),
    }
}

/// Rows `family, R, diff, slope` in increasing `R`; the slope column is empty
/// with fewer than three members.
pub fn sweep_csv(label: &str, members: &[FamilyMember]) -> Result<Vec<u8>, CliError> {
    let slope = continuation::convergence_rate(members).ok();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Malformed(e.to_string());
    w.write_record(["family", "R", "diff", "slope"]).map_err(csv_err)?;
    let mut rows: Vec<&FamilyMember> = members.iter().collect();
    rows.sort_by(|x, y| x.radius.get().total_cmp(&y.radius.get()));
    for m in rows {
        w.write_record([
            label.to_string(),
            m.radius.get().to_string(),
            format!("{:e}", m.diff_to_planar),
            slope.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Malformed(e.to_string()))
}

fn export(a: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = SolutionFile::read(&a.file)?;
    let config = file.configuration()?;
    let path = file.path()?;
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let text = match a.format {
        ExportFormat::Csv => orbit_csv(&path, &config, a.samples)?,
        ExportFormat::Coeffs => coeffs_csv(&path),
    };
    match &a.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => out.write_all(text.as_bytes()).map_err(io_err),
    }
}

/// Samples of every body in the frame of the file, with hyperboloid lifts
/// when the curvature is negative. Floats use shortest round-trip form.
pub fn orbit_csv(path: &TrigPath, config: &Configuration, samples: usize) -> Result<String, CliError> {
    let n = config.bodies;
    let mut header = vec!["t".to_string()];
    for j in 0..n {
        header.push(format!("re_z{j}"));
        header.push(format!("im_z{j}"));
    }
    let radius = match config.curvature {
        Curvature::Hyperbolic(r) => Some(r),
        Curvature::Planar => None,
    };
    if radius.is_some() {
        for j in 0..n {
            header.extend([format!("x1_{j}"), format!("x2_{j}"), format!("x3_{j}")]);
        }
    }
    let mut text = header.join(",");
    text.push('\n');
    for m in 0..samples {
        let t = hyperchoreo::trigpath::node(m, samples);
        let z: Vec<_> = (0..n).map(|j| path.eval(t + config.phase_offset(j))).collect();
        let mut row = vec![t.to_string()];
        for zj in &z {
            row.push(zj.re.to_string());
            row.push(zj.im.to_string());
        }
        if let Some(r) = radius {
            for zj in &z {
                let x = lift_to_hyperboloid(DiskPoint(*zj), r)?;
                row.extend([x.x1.to_string(), x.x2.to_string(), x.x3.to_string()]);
            }
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    Ok(text)
}

pub fn coeffs_csv(path: &TrigPath) -> String {
    let mut text = String::from("k,abs\n");
    for (k, c) in path.modes().zip(path.coeffs()) {
        text.push_str(&format!("{k},{:e}\n", c.norm()));
    }
    text
}

/// Outcome of one search trial.
struct Trial {
    rng: u64,
    action: f64,
}

fn search(a: &SearchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = configuration(&a.problem, None)?;
    let opts2 = phase2_options(&a.problem);
    let modes = a.problem.seed_modes;
    // Phase 1 only; collection preserves trial order whatever the scheduling.
    let trials: Vec<Option<Trial>> = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let rng = a.rng.wrapping_add(i);
            let seed = random_seed(&config, modes, rng).ok()?;
            let p1 = optimizer::phase1_bfgs(&seed.to_vars(), &config, &Phase1Options::default()).ok()?;
            (p1.status == PhaseStatus::Converged).then_some(Trial { rng, action: p1.action })
        })
        .collect();
    let representatives = distinct_by_action(trials.into_iter().flatten().collect());
    let refined: Vec<Choreography> = representatives
        .par_iter()
        .filter_map(|t| {
            let seed = random_seed(&config, modes, t.rng).ok()?;
            two_phase(&config, &seed, &opts2).ok().filter(accepted)
        })
        .collect();
    let mut found: Vec<Choreography> = Vec::new();
    for c in refined {
        let action = final_action(&c);
        let dup = found.iter().any(|f| {
            let b = final_action(f);
            (action - b).abs() <= DISTINCT_ACTION * b.abs()
        });
        if !dup {
            found.push(c);
        }
    }
    found.sort_by(|x, y| final_action(x).total_cmp(&final_action(y)));
    if found.is_empty() {
        return Err(CliError::NotConverged(format!("no trial of {} converged", a.trials)));
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    writeln!(out, "{:<18}{:>22}{:>12}{:>12}", "file", "action", "gradient", "residual").map_err(io_err)?;
    for (i, c) in found.iter().enumerate() {
        let name = format!("solution-{i:02}.json");
        SolutionFile::from_choreography(c).write(&a.out_dir.join(&name))?;
        let p = c.report.last().expect("two-phase report");
        writeln!(
            out,
            "{name:<18}{:>22.15}{:>12.2e}{:>12.2e}",
            p.action, p.gradient_rel_norm, p.residual_rel_norm
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn final_action(c: &Choreography) -> f64 {
    c.report.last().map_or(f64::NAN, |p| p.action)
}

/// Sorts by action (then seed) and keeps the first trial of each cluster.
fn distinct_by_action(mut trials: Vec<Trial>) -> Vec<Trial> {
    trials.sort_by(|x, y| x.action.total_cmp(&y.action).then(x.rng.cmp(&y.rng)));
    let mut kept: Vec<Trial> = Vec::new();
    for t in trials {
        if kept
            .last()
            .is_none_or(|k| (t.action - k.action).abs() > DISTINCT_ACTION * k.action.abs())
        {
            kept.push(t);
        }
    }
    kept
}
