use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use mcf_core::models::{GammaParams, GaussianParams, ModelParams, SkewNormalParams};
use mcf_core::optimizer::auto_radius;
use mcf_core::pca::DEFAULT_EIGEN_TOL;
use mcf_core::tail::{DENSITY_NOISE_FLOOR, SIGNIFICANCE_SE};
use mcf_core::{
    cumulant_profile, evaluate, first_principal_component, mcf, standard_error, verify_tail_dominance, DataMatrix,
    Direction, OptimizerConfig, Radius, TailDominanceReport,
};
use ndarray::{array, Array2};
use serde::Serialize;
use serde_json::Value;

use crate::args::{AnalysisArgs, Model, OptimizerArgs, SimulateArgs, TailcheckArgs};
use crate::csvio::{default_columns, format_value, read_csv, write_matrix, write_rows, Table};
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
const MIN_SIMULATED: usize = 30;
const PROFILE_POINTS: usize = 65;
const STANDARDIZED_TOL: f64 = 1e-3;
const DEFAULT_TAIL_RADII: usize = 12;

/// `dir/stem.<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    match path {
        Some(p) => {
            let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(p, std::io::Error::other(e)))?;
            text.push('\n');
            fs::write(p, text).map_err(|e| CliError::io(p, e))
        }
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn reference_params(model: Model) -> ModelParams {
    let sigma = array![[1.2, 0.0], [0.0, 0.5143]];
    match model {
        Model::Gaussian => ModelParams::Gaussian(GaussianParams::new(sigma).expect("valid reference")),
        Model::SkewNormal => ModelParams::SkewNormal(
            SkewNormalParams::new(sigma, array![4.365, -1.455]).expect("valid reference"),
        ),
        Model::Gamma => ModelParams::Gamma(GammaParams::new(2.0, vec![0.5, 4.0]).expect("valid reference")),
    }
}

/// Parameters given inline (text starting with `{`) or as a file path.
pub fn parse_params(model: Model, spec: Option<&str>) -> Result<ModelParams> {
    let Some(spec) = spec else {
        return Ok(reference_params(model));
    };
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        let path = Path::new(spec);
        fs::read_to_string(path).map_err(|e| CliError::io(path, e))?
    };
    let params: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: e.line() as u64,
        message: format!("params JSON: {e}"),
    })?;
    let tagged = serde_json::json!({ "model": model.name(), "params": params });
    serde_json::from_value(tagged).map_err(|e| CliError::Params(e.to_string()))
}

#[derive(Debug, Serialize)]
struct SimulateSidecar<'a> {
    schema_version: u32,
    command: &'static str,
    model: &'static str,
    params: Value,
    /// Population mean that was subtracted from every draw.
    mu: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    n_samples: usize,
    seed: u64,
    columns: Vec<String>,
    data_file: &'a str,
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    if args.n_samples < MIN_SIMULATED {
        return Err(CliError::Usage(format!(
            "--n must be at least {MIN_SIMULATED}, got {}",
            args.n_samples
        )));
    }
    let model = parse_params(args.model, args.params.as_deref())?;
    let data = model.sample(args.n_samples, args.seed)?;
    let columns = default_columns(model.dim());
    write_matrix(&args.output, &columns, data.values())?;
    let tagged = serde_json::to_value(&model).map_err(|e| CliError::Params(e.to_string()))?;
    let sidecar = SimulateSidecar {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        model: model.name(),
        params: tagged["params"].clone(),
        mu: model.mean().to_vec(),
        covariance: rows(&model.covariance()),
        n_samples: args.n_samples,
        seed: args.seed,
        columns,
        data_file: &args.output.to_string_lossy(),
    };
    let sidecar_path = sibling(&args.output, "params.json");
    write_json(Some(&sidecar_path), &sidecar)?;
    Ok(vec![args.output.clone(), sidecar_path])
}

/// Seeds and tolerances echoed into every result.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
    pub ess_min: f64,
    pub eigen_tol: f64,
}

impl Settings {
    fn from_args(opt: &OptimizerArgs) -> Self {
        Settings {
            optimizer: opt.config(),
            ess_min: opt.ess_min,
            eigen_tol: DEFAULT_EIGEN_TOL,
        }
    }
}

fn check_ess_min(ess_min: f64, n: usize) -> Result<()> {
    if ess_min > 1.0 && ess_min <= n as f64 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--ess-min must lie in (1, {n}], got {ess_min}")))
    }
}

/// Warnings about the input itself, before any analysis.
pub fn input_warnings(table: &Table) -> Vec<String> {
    let mut out = Vec::new();
    let std_n = table.data.column_std();
    let n = table.data.n_obs() as f64;
    let unit = |s: f64| (s - 1.0).abs() <= STANDARDIZED_TOL || (s * (n / (n - 1.0)).sqrt() - 1.0).abs() <= STANDARDIZED_TOL;
    if std_n.iter().all(|s| unit(*s)) {
        out.push(
            "input appears standardized (every column has unit variance): rescaling variables changes \
             the cumulant function, so the detected directions may have lost their validity; analyze \
             the data in its physical units"
                .to_string(),
        );
    }
    for (name, s) in table.columns.iter().zip(std_n.iter()) {
        if *s == 0.0 {
            out.push(format!("column {name} is constant and carries no information; analysis proceeds"));
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct MaximumOut {
    pub theta: Vec<f64>,
    pub g: f64,
    pub basin_count: usize,
    pub ess: f64,
    pub standard_error: f64,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeOut {
    pub schema_version: u32,
    pub command: &'static str,
    pub input: String,
    pub n_obs: usize,
    pub dim: usize,
    pub columns: Vec<String>,
    pub radius_used: f64,
    pub radius_mode: &'static str,
    pub maxima: Vec<MaximumOut>,
    pub pc1: Vec<f64>,
    pub pc1_eigenvalue: f64,
    /// ESS at the top maximum.
    pub ess: f64,
    pub warnings: Vec<String>,
    pub settings: Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<String>,
}

struct Analysis {
    centered: DataMatrix,
    out: AnalyzeOut,
    directions: Vec<Direction>,
}

fn analysis(args: &AnalysisArgs, command: &'static str) -> Result<Analysis> {
    let settings = Settings::from_args(&args.opt);
    settings.optimizer.validate()?;
    let table = read_csv(&args.input)?;
    check_ess_min(settings.ess_min, table.data.n_obs())?;
    let radius = args.opt.radius.map(Radius::new).transpose()?;
    let mut warnings = input_warnings(&table);
    let res = mcf(&table.data, &settings.optimizer, radius, settings.ess_min)?;
    warnings.extend(res.warnings.iter().cloned());
    let centered = table.data.center();
    let pc1 = first_principal_component(&centered)?;
    let r = Radius::new(res.radius_used)?;
    let n = centered.n_obs();
    let mut maxima = Vec::with_capacity(res.maxima.len());
    for m in &res.maxima {
        let ess = evaluate(&centered, r, &m.direction)?.ess;
        maxima.push(MaximumOut {
            theta: m.direction.to_vec(),
            g: m.g_value,
            basin_count: m.basin_count,
            ess,
            standard_error: standard_error(ess, n),
        });
    }
    let out = AnalyzeOut {
        schema_version: SCHEMA_VERSION,
        command,
        input: args.input.to_string_lossy().into_owned(),
        n_obs: n,
        dim: centered.dim(),
        columns: table.columns.clone(),
        radius_used: res.radius_used,
        radius_mode: if radius.is_some() { "fixed" } else { "auto" },
        maxima,
        pc1: pc1.eigenvector.to_vec(),
        pc1_eigenvalue: pc1.eigenvalue,
        ess: res.ess_at_radius,
        warnings,
        settings,
        profile_file: None,
    };
    Ok(Analysis {
        centered,
        directions: res.maxima.iter().map(|m| m.direction.clone()).collect(),
        out,
    })
}

/// Plot-ready `maximum,radius,g,ess` rows on `[0, 2 r]`.
fn write_profile(path: &Path, data: &DataMatrix, dirs: &[Direction], radius: f64) -> Result<()> {
    let radii: Vec<Radius> = (0..PROFILE_POINTS)
        .map(|k| Radius::new(2.0 * radius * k as f64 / (PROFILE_POINTS - 1) as f64))
        .collect::<mcf_core::Result<_>>()?;
    let mut lines = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let p = cumulant_profile(data, d, &radii)?;
        for k in 0..p.radii.len() {
            lines.push(vec![
                i.to_string(),
                format_value(p.radii[k]),
                format_value(p.values[k]),
                format_value(p.ess[k]),
            ]);
        }
    }
    let header = ["maximum", "radius", "g", "ess"].map(String::from);
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_rows(BufWriter::new(file), &header, lines.into_iter()).map_err(|e| CliError::io(path, e))
}

pub fn run_analyze(args: &AnalysisArgs) -> Result<AnalyzeOut> {
    let mut a = analysis(args, "analyze")?;
    if let Some(out) = &args.output {
        let profile = sibling(out, "profile.csv");
        write_profile(&profile, &a.centered, &a.directions, a.out.radius_used)?;
        a.out.profile_file = Some(profile.to_string_lossy().into_owned());
    }
    write_json(args.output.as_deref(), &a.out)?;
    Ok(a.out)
}

#[derive(Debug, Serialize)]
pub struct ComparedMaximum {
    pub theta: Vec<f64>,
    pub g: f64,
    pub basin_count: usize,
    /// Angle to `pc1` itself.
    pub angle_to_pc1_deg: f64,
    /// Angle to the nearer of `pc1` and `-pc1`.
    pub axis_angle_to_pc1_deg: f64,
}

#[derive(Debug, Serialize)]
pub struct ComparePcaOut {
    pub schema_version: u32,
    pub command: &'static str,
    pub input: String,
    pub n_obs: usize,
    pub dim: usize,
    pub radius_used: f64,
    pub radius_mode: &'static str,
    pub pc1: Vec<f64>,
    pub pc1_eigenvalue: f64,
    pub maxima: Vec<ComparedMaximum>,
    pub min_axis_angle_to_pc1_deg: f64,
    /// Angles between every pair of maxima, in reported order.
    pub pairwise_angles_deg: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
    pub settings: Settings,
}

pub fn run_compare_pca(args: &AnalysisArgs) -> Result<ComparePcaOut> {
    let a = analysis(args, "compare-pca")?;
    let pc1 = Direction::new(&a.out.pc1)?;
    let maxima: Vec<ComparedMaximum> = a
        .directions
        .iter()
        .zip(&a.out.maxima)
        .map(|(d, m)| ComparedMaximum {
            theta: m.theta.clone(),
            g: m.g,
            basin_count: m.basin_count,
            angle_to_pc1_deg: d.angle_deg(&pc1),
            axis_angle_to_pc1_deg: d.axis_angle_deg(&pc1),
        })
        .collect();
    let pairwise = a
        .directions
        .iter()
        .map(|x| a.directions.iter().map(|y| x.angle_deg(y)).collect())
        .collect();
    let out = ComparePcaOut {
        schema_version: SCHEMA_VERSION,
        command: "compare-pca",
        input: a.out.input,
        n_obs: a.out.n_obs,
        dim: a.out.dim,
        radius_used: a.out.radius_used,
        radius_mode: a.out.radius_mode,
        pc1: a.out.pc1,
        pc1_eigenvalue: a.out.pc1_eigenvalue,
        min_axis_angle_to_pc1_deg: maxima.iter().map(|m| m.axis_angle_to_pc1_deg).fold(f64::INFINITY, f64::min),
        maxima,
        pairwise_angles_deg: pairwise,
        warnings: a.out.warnings,
        settings: a.out.settings,
    };
    write_json(args.output.as_deref(), &out)?;
    Ok(out)
}

pub fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{flag}: not a number: {s:?}")))
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct TailSettings {
    pub ess_min: f64,
    pub seed: u64,
    pub density_noise_floor: f64,
    pub significance_se: f64,
}

#[derive(Debug, Serialize)]
pub struct TailcheckOut {
    pub schema_version: u32,
    pub command: &'static str,
    pub input: String,
    pub theta_a: Vec<f64>,
    pub theta_b: Vec<f64>,
    pub radii: Vec<f64>,
    #[serde(flatten)]
    pub report: TailDominanceReport,
    pub stable_dominance: bool,
    pub unreliable_radii: Vec<f64>,
    pub warnings: Vec<String>,
    pub settings: TailSettings,
}

pub fn run_tailcheck(args: &TailcheckArgs) -> Result<TailcheckOut> {
    let table = read_csv(&args.input)?;
    check_ess_min(args.ess_min, table.data.n_obs())?;
    let data = table.data.center();
    let theta_a = Direction::new(&parse_list("--theta-a", &args.theta_a)?)?;
    let theta_b = Direction::new(&parse_list("--theta-b", &args.theta_b)?)?;
    let radii: Vec<f64> = match &args.radii {
        Some(text) => parse_list("--radii", text)?,
        None => {
            let top = auto_radius(&data, args.ess_min, args.seed)?.radius.value();
            (1..=DEFAULT_TAIL_RADII)
                .map(|k| 2.0 * top * k as f64 / DEFAULT_TAIL_RADII as f64)
                .collect()
        }
    };
    let typed: Vec<Radius> = radii.iter().map(|r| Radius::new(*r)).collect::<mcf_core::Result<_>>()?;
    let report = verify_tail_dominance(&data, &theta_a, &theta_b, &typed, args.ess_min)?;
    let mut warnings = input_warnings(&table);
    if report.z_star.is_none() {
        warnings.push("no upper-tail crossing found: the density along theta_a never stays above theta_b".into());
    }
    let unreliable = report.unreliable_radii();
    if !unreliable.is_empty() {
        warnings.push(format!(
            "{} of {} radii have ESS below {} and are excluded from s_star_estimate",
            unreliable.len(),
            radii.len(),
            args.ess_min
        ));
    }
    let out = TailcheckOut {
        schema_version: SCHEMA_VERSION,
        command: "tailcheck",
        input: args.input.to_string_lossy().into_owned(),
        theta_a: theta_a.to_vec(),
        theta_b: theta_b.to_vec(),
        radii,
        stable_dominance: report.stable_dominance(),
        unreliable_radii: unreliable,
        report,
        warnings,
        settings: TailSettings {
            ess_min: args.ess_min,
            seed: args.seed,
            density_noise_floor: DENSITY_NOISE_FLOOR,
            significance_se: SIGNIFICANCE_SE,
        },
    };
    write_json(args.output.as_deref(), &out)?;
    Ok(out)
}
