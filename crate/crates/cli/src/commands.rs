use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use pharmonic_core::imaging::ppm::{decode_ppm, write_ppm};
use pharmonic_core::imaging::{
    decompose, field_to_chroma, image_to_field, recompose, ChromaImage, DEFAULT_FALLBACK,
};
use pharmonic_core::vtk::write_vtk;
use pharmonic_core::{
    build_rect_mesh, run_flow_with, stationarity_check, total_energy_unregularized, Control,
    Execution, FlowTrace, NodalField, QuarticSplitting, TriMesh,
};

use crate::config::{parse_entries, parse_override, resolve, RunConfig};
use crate::error::CliError;
use crate::manifest::RunManifest;

/// A resolved configuration plus the raw config file, for hashing.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub config: RunConfig,
    pub config_source: Option<(PathBuf, Vec<u8>)>,
    pub out_dir: PathBuf,
}

impl Invocation {
    pub fn load(config: Option<&Path>, sets: &[String], out_dir: &Path) -> Result<Self, CliError> {
        let (file_entries, source) = match config {
            Some(path) => {
                let bytes = std::fs::read(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let text = String::from_utf8(bytes.clone()).map_err(|_| {
                    CliError::Config(format!("{}: not valid UTF-8", path.display()))
                })?;
                let entries = parse_entries(&text, &path.display().to_string())?;
                (entries, Some((path.to_path_buf(), bytes)))
            }
            None => (Vec::new(), None),
        };
        let overrides = sets
            .iter()
            .enumerate()
            .map(|(i, s)| parse_override(s, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            config: resolve(&file_entries, &overrides)?,
            config_source: source,
            out_dir: out_dir.to_path_buf(),
        })
    }

    pub fn from_config(config: RunConfig, out_dir: &Path) -> Self {
        Self {
            config,
            config_source: None,
            out_dir: out_dir.to_path_buf(),
        }
    }

    fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command, &self.config);
        if let Some((path, bytes)) = &self.config_source {
            m.set("input.config.path", path.display());
            m.hash_input("config", bytes);
        }
        m
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    manifest.add_output(path);
    Ok(())
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub trace: FlowTrace,
    pub final_field: NodalField,
    pub j_unregularized: f64,
    pub out_dir: PathBuf,
}

fn snapshot(
    dir: &Path,
    mesh: &TriMesh,
    u: &NodalField,
    k: usize,
    t: f64,
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("u_{k:05}.vtk"));
    let field = (u.n_components() <= 3).then_some(u);
    write_vtk(&path, mesh, field, &format!("pharmonic step {k} t={t}"))
        .map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Runs one synthetic flow and writes trace, snapshots, resolved config and manifest.
fn execute_run(inv: &Invocation, command: &str) -> Result<RunSummary, CliError> {
    let cfg = &inv.config;
    let mut manifest = inv.manifest(command);
    let out = &inv.out_dir;
    let snap_dir = out.join("snapshots");
    create_dir(&snap_dir)?;

    let (mesh, u0) = manifest.time("setup", || -> Result<_, CliError> {
        let mesh = build_rect_mesh(cfg.nx, cfg.ny, cfg.lx, cfg.ly)?;
        let u0 = cfg.preset().build(&mesh, cfg.components)?;
        Ok((mesh, u0))
    })?;
    manifest.describe_mesh(
        &mesh,
        &format!(
            "rectangle {}x{} cells on [0,{}]x[0,{}]",
            cfg.nx, cfg.ny, cfg.lx, cfg.ly
        ),
    );
    if cfg.components > 3 {
        warn!(
            "{} components: VTK snapshots carry the mesh only",
            cfg.components
        );
    }
    let g = u0.clone();
    let tau = cfg.solver.tau;

    let mut snapshots = vec![snapshot(&snap_dir, &mesh, &u0, 0, 0.0)?];
    let mut snap_error = None;
    let outcome = manifest.time("flow", || {
        run_flow_with(
            &mesh,
            &u0,
            &g,
            &cfg.solver,
            &QuarticSplitting,
            |k, _, u, rec| {
                if cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0 {
                    match snapshot(&snap_dir, &mesh, u, k, rec.time) {
                        Ok(p) => snapshots.push(p),
                        Err(e) => {
                            snap_error = Some(e);
                            return Control::Stop;
                        }
                    }
                }
                info!("step {k} t={} energy={:e}", rec.time, rec.energy.total);
                Control::Continue
            },
        )
    })?;
    if let Some(e) = snap_error {
        return Err(e);
    }
    let last = outcome.trace.last().expect("trace has the initial record");
    if snapshots.len() == 1
        || !snapshots
            .last()
            .unwrap()
            .ends_with(format!("u_{:05}.vtk", last.step))
    {
        snapshots.push(snapshot(
            &snap_dir,
            &mesh,
            &outcome.final_field,
            last.step,
            last.step as f64 * tau,
        )?);
    }
    for p in &snapshots {
        manifest.add_output(p);
    }

    let j_unregularized = total_energy_unregularized(&mesh, &outcome.final_field, &g, &cfg.solver)?;
    manifest.set("steps", last.step);
    manifest.set("final.e_total", last.energy.total);
    manifest.set("final.constraint_l2", last.constraint_l2);
    manifest.set("final.j_unregularized", j_unregularized);
    write_text(
        &out.join("trace.csv"),
        &outcome.trace.to_csv(),
        &mut manifest,
    )?;
    write_text(
        &out.join("resolved.conf"),
        &cfg.to_config_text(),
        &mut manifest,
    )?;
    manifest.write(&out.join("manifest.txt"))?;
    Ok(RunSummary {
        trace: outcome.trace,
        final_field: outcome.final_field,
        j_unregularized,
        out_dir: out.clone(),
    })
}

pub fn cmd_run(inv: &Invocation) -> Result<RunSummary, CliError> {
    let summary = execute_run(inv, "run")?;
    let last = summary.trace.last().unwrap();
    println!(
        "run: {} steps, J = {:e}, constraint_l2 = {:e}, output in {}",
        last.step,
        last.energy.total,
        last.constraint_l2,
        summary.out_dir.display()
    );
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct DenoiseSummary {
    pub trace: FlowTrace,
    pub j_initial: f64,
    pub j_final: f64,
    pub stopped_early: bool,
    pub clamp_count: usize,
}

pub fn cmd_denoise(
    inv: &Invocation,
    input: &Path,
    output: &Path,
) -> Result<DenoiseSummary, CliError> {
    let cfg = &inv.config;
    let mut manifest = inv.manifest("denoise");
    create_dir(&inv.out_dir)?;

    let bytes = std::fs::read(input).map_err(|e| io_err(input, e))?;
    manifest.set("input.image.path", input.display());
    manifest.hash_input("image", &bytes);
    let img = decode_ppm(&bytes).map_err(|e| io_err(input, e))?;
    let chroma = decompose(&img, DEFAULT_FALLBACK);
    let (mesh, g, u0) = image_to_field(&chroma)?;
    manifest.describe_mesh(
        &mesh,
        &format!("pixel grid {}x{} with unit spacing", img.width, img.height),
    );

    let threshold = cfg.stationarity_threshold;
    let mut stationary_error = None;
    let outcome = manifest.time("flow", || {
        run_flow_with(
            &mesh,
            &u0,
            &g,
            &cfg.solver,
            &QuarticSplitting,
            |k, prev, u, rec| {
                info!("step {k} t={} energy={:e}", rec.time, rec.energy.total);
                if threshold > 0.0 {
                    match stationarity_check(&mesh, u, prev, cfg.solver.tau, threshold) {
                        Ok(true) => return Control::Stop,
                        Ok(false) => {}
                        Err(e) => {
                            stationary_error = Some(e);
                            return Control::Stop;
                        }
                    }
                }
                Control::Continue
            },
        )
    })?;
    if let Some(e) = stationary_error {
        return Err(e.into());
    }

    let denoised: ChromaImage = field_to_chroma(
        &outcome.final_field,
        &mesh,
        img.width,
        img.height,
        &chroma.brightness,
    )?;
    let projected = NodalField::new(3, denoised.chroma.iter().flatten().copied().collect())?;
    let j_initial = total_energy_unregularized(&mesh, &u0, &g, &cfg.solver)?;
    let j_final = total_energy_unregularized(&mesh, &projected, &g, &cfg.solver)?;
    let (out_img, clamp_count) = recompose(&denoised);
    write_ppm(output, &out_img, cfg.ppm_format).map_err(|e| io_err(output, e))?;
    manifest.add_output(output);

    let last = outcome.trace.last().unwrap();
    manifest.set("steps", last.step);
    manifest.set("stopped_early", outcome.stopped_early);
    manifest.set("j_initial", j_initial);
    manifest.set("j_final", j_final);
    manifest.set("clamp_count", clamp_count);
    manifest.set(
        "fallback_count",
        chroma.fallback_count + denoised.fallback_count,
    );
    write_text(
        &inv.out_dir.join("trace.csv"),
        &outcome.trace.to_csv(),
        &mut manifest,
    )?;
    write_text(
        &inv.out_dir.join("resolved.conf"),
        &cfg.to_config_text(),
        &mut manifest,
    )?;
    manifest.write(&inv.out_dir.join("manifest.txt"))?;
    println!(
        "denoise: {} steps{}, J initial = {:e}, J final = {:e}, wrote {}",
        last.step,
        if outcome.stopped_early {
            " (stationary)"
        } else {
            ""
        },
        j_initial,
        j_final,
        output.display()
    );
    Ok(DenoiseSummary {
        trace: outcome.trace,
        j_initial,
        j_final,
        stopped_early: outcome.stopped_early,
        clamp_count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Delta,
    Eps,
    Tau,
    H,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "delta" => Some(SweepAxis::Delta),
            "eps" => Some(SweepAxis::Eps),
            "tau" => Some(SweepAxis::Tau),
            "h" => Some(SweepAxis::H),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delta => "delta",
            SweepAxis::Eps => "eps",
            SweepAxis::Tau => "tau",
            SweepAxis::H => "h",
        }
    }

    /// Applies the axis value. For `h` the cell counts become `round(L / h)`.
    pub fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepAxis::Delta => cfg.solver.delta = value,
            SweepAxis::Eps => cfg.solver.eps = value,
            SweepAxis::Tau => cfg.solver.tau = value,
            SweepAxis::H => {
                cfg.nx = ((cfg.lx / value).round() as usize).max(1);
                cfg.ny = ((cfg.ly / value).round() as usize).max(1);
            }
        }
    }
}

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "axis",
    "value",
    "steps",
    "e_diffusion",
    "e_pterm",
    "e_penalty",
    "e_fidelity",
    "e_total",
    "j_unregularized",
    "cum_dissipation",
    "constraint_l2",
    "max_modulus",
    "max_modulus_run",
];

#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub runs: Vec<(f64, RunSummary)>,
    pub csv: String,
    /// Least-squares slope of `ln constraint_l2` against `ln delta` (delta axis only).
    pub delta_slope: Option<f64>,
}

pub fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("invalid sweep value {v:?}")))
        })
        .collect()
}

/// Slope of the least-squares line through `(x, y)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn run_all(
    jobs: Vec<(f64, Invocation)>,
    exec: Execution,
) -> Vec<(f64, Result<RunSummary, CliError>)> {
    let one = |(v, inv): (f64, Invocation)| (v, execute_run(&inv, "sweep-run"));
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            jobs.into_par_iter().map(one).collect()
        }
        _ => jobs.into_iter().map(one).collect(),
    }
}

pub fn cmd_sweep(
    inv: &Invocation,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepSummary, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(CliError::Config(format!(
            "sweep values must be positive, got {v}"
        )));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(
            "sweep values must be sorted strictly descending".into(),
        ));
    }
    let mut manifest = inv.manifest("sweep");
    manifest.set("sweep.axis", axis.name());
    manifest.set(
        "sweep.values",
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    create_dir(&inv.out_dir)?;

    let mut jobs = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = inv.config.clone();
        axis.apply(&mut cfg, v);
        cfg.validate()
            .map_err(|e| e.context(&format!("{}={v}", axis.name())))?;
        let dir = inv.out_dir.join(format!("{}_{v}", axis.name()));
        jobs.push((
            v,
            Invocation {
                config: cfg,
                config_source: inv.config_source.clone(),
                out_dir: dir,
            },
        ));
    }
    let results = manifest.time("runs", || run_all(jobs, inv.config.solver.execution));

    let mut runs = Vec::with_capacity(results.len());
    for (v, r) in results {
        let summary = r.map_err(|e| e.context(&format!("{}={v}", axis.name())))?;
        runs.push((v, summary));
    }

    let mut csv = SUMMARY_COLUMNS.join(",");
    csv.push('\n');
    for (v, run) in &runs {
        let last = run.trace.last().unwrap();
        let e = &last.energy;
        let peak = run
            .trace
            .records
            .iter()
            .map(|r| r.max_modulus)
            .fold(0.0, f64::max);
        let _ = writeln!(
            csv,
            "{},{v},{},{},{},{},{},{},{},{},{},{},{peak}",
            axis.name(),
            last.step,
            e.diffusion,
            e.p_term,
            e.penalty,
            e.fidelity,
            e.total,
            run.j_unregularized,
            last.cumulative_dissipation,
            last.constraint_l2,
            last.max_modulus,
        );
        manifest.add_output(&run.out_dir.join("trace.csv"));
        manifest.add_output(&run.out_dir.join("manifest.txt"));
    }
    let summary_path = inv.out_dir.join("summary.csv");
    write_text(&summary_path, &csv, &mut manifest)?;

    let delta_slope = if axis == SweepAxis::Delta {
        let pts: Vec<(f64, f64)> = runs
            .iter()
            .map(|(v, r)| (v.ln(), r.trace.last().unwrap().constraint_l2.ln()))
            .collect();
        if pts.iter().all(|p| p.1.is_finite()) {
            fit_slope(&pts)
        } else {
            None
        }
    } else {
        None
    };
    match delta_slope {
        Some(s) => {
            manifest.set("delta_slope", s);
            println!(
                "sweep delta: {} runs, log-log slope of constraint_l2 vs delta = {s}",
                runs.len()
            );
        }
        None => println!("sweep {}: {} runs", axis.name(), runs.len()),
    }
    manifest.write(&inv.out_dir.join("manifest.txt"))?;
    Ok(SweepSummary {
        runs,
        csv,
        delta_slope,
    })
}
