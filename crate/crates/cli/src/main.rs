//! Command-line driver: domain ingestion, kernel assembly with cached
//! artifacts, point evaluation to CSV/JSON, and convergence studies.

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use szegokit::artifact::{DomainSpec, KernelSuite};
use szegokit::geometry::{BoundaryGrid, Curve, Domain};
use szegokit::reference;
use szegokit::szego::BasePoint;
use szegokit::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "szegokit",
    about = "Szegő, Garabedian, Bergman and Poisson kernels of smooth multiply \
             connected plane domains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kernel {
    Szego,
    Garabedian,
    Bergman,
    Lambda,
    Poisson,
    Ahlfors,
    Omega,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the kernel package for a domain and cache it as a JSON
    /// artifact.
    Assemble {
        /// Domain spec file (JSON).
        #[arg(long)]
        domain: PathBuf,
        /// Grid nodes per curve (even, ≥ 16).
        #[arg(long)]
        n: usize,
        /// Base point: "auto" or "re,im".
        #[arg(long, default_value = "auto")]
        a: String,
        /// Artifact output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a kernel at point pairs from a CSV file.
    Eval {
        /// Cached artifact produced by `assemble`.
        #[arg(long, conflicts_with = "domain")]
        artifact: Option<PathBuf>,
        /// Domain spec file; assembles on the fly when no artifact is given.
        #[arg(long, requires = "n")]
        domain: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "auto")]
        a: String,
        #[arg(long)]
        kernel: Kernel,
        /// CSV of rows `re z, im z, re w, im w` (w ignored for ahlfors and
        /// omega; for poisson, w is snapped to the nearest boundary node).
        #[arg(long)]
        points: PathBuf,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// For poisson: also report Σ p(z,·)·weights per evaluation point.
        #[arg(long)]
        sum_check: bool,
        /// Which harmonic measure ω_j to evaluate (1-based).
        #[arg(long, default_value_t = 1)]
        index: usize,
    },
    /// Max-error table against oracles (discs, concentric annuli) or against
    /// the largest-N run (--self) as the grid is refined.
    Convergence {
        #[arg(long)]
        domain: PathBuf,
        /// Comma-separated list of grid sizes, e.g. 32,64,128.
        #[arg(long)]
        n: String,
        #[arg(long, default_value = "auto")]
        a: String,
        /// Compare against the largest-N assembly instead of an oracle.
        #[arg(long = "self")]
        self_mode: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the canonical fixture domains as domain-spec files.
    Fixtures {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

/// Input errors exit with 2, numeric failures with 1.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn from_core(e: CoreError) -> CliError {
        let code = match &e {
            CoreError::InvalidCurve { .. }
            | CoreError::Geometry(_)
            | CoreError::Artifact(_)
            | CoreError::Io(_)
            | CoreError::OutsideDomain { .. }
            | CoreError::OnBoundary { .. } => 2,
            CoreError::Solve(_)
            | CoreError::BasePoint { .. }
            | CoreError::ZeroLocation(_)
            | CoreError::NearSingular(_) => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            let kind = if e.code == 2 { "input" } else { "numeric" };
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.message, "kind": kind })
            );
            std::process::ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Assemble { domain, n, a, out } => cmd_assemble(&domain, n, &a, &out),
        Command::Eval {
            artifact,
            domain,
            n,
            a,
            kernel,
            points,
            out,
            format,
            sum_check,
            index,
        } => {
            let suite = match (artifact, domain) {
                (Some(path), _) => KernelSuite::load(&path).map_err(CliError::from_core)?,
                (None, Some(dpath)) => {
                    let n = n.ok_or_else(|| CliError::input("--n required with --domain"))?;
                    assemble_suite(&dpath, n, &a)?
                }
                (None, None) => {
                    return Err(CliError::input("eval needs --artifact or --domain"));
                }
            };
            cmd_eval(
                &suite,
                kernel,
                &points,
                out.as_deref(),
                format,
                sum_check,
                index,
            )
        }
        Command::Convergence {
            domain,
            n,
            a,
            self_mode,
            out,
        } => cmd_convergence(&domain, &n, &a, self_mode, out.as_deref()),
        Command::Fixtures { out_dir } => cmd_fixtures(&out_dir),
    }
}

fn parse_base(a: &str) -> Result<BasePoint, CliError> {
    if a == "auto" {
        return Ok(BasePoint::Auto);
    }
    let parts: Vec<&str> = a.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::input(format!(
            "base point {a:?} is neither \"auto\" nor \"re,im\""
        )));
    }
    let re: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("bad base point component {:?}", parts[0])))?;
    let im: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("bad base point component {:?}", parts[1])))?;
    Ok(BasePoint::Fixed(Complex64::new(re, im)))
}

fn assemble_suite(domain_path: &Path, n: usize, a: &str) -> Result<KernelSuite, CliError> {
    let spec = DomainSpec::load(domain_path).map_err(CliError::from_core)?;
    let domain = spec.to_domain().map_err(CliError::from_core)?;
    let base = parse_base(a)?;
    KernelSuite::assemble(&domain, n, base).map_err(CliError::from_core)
}

fn cmd_assemble(domain_path: &Path, n: usize, a: &str, out: &Path) -> Result<(), CliError> {
    let suite = assemble_suite(domain_path, n, a)?;
    suite.save(out).map_err(CliError::from_core)?;
    let s = &suite.szego;
    let summary = serde_json::json!({
        "artifact": out.display().to_string(),
        "connectivity": s.connectivity(),
        "grid_n": s.grid().nodes_per_curve(),
        "base": [s.base().re, s.base().im],
        "zeros": s.zeros().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "s_at_base": s.s_at_base(),
        "system_condition_estimate": s.condition_estimate(),
        "lambda_hermitian_defect": suite.bergman.hermitian_defect(),
        "periods_imag_defect": suite.poisson.periods_imag_defect(),
    });
    println!("{summary}");
    Ok(())
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct EvalRow {
    z: Complex64,
    w: Complex64,
    value: Option<Complex64>,
    near_boundary: bool,
    error: Option<String>,
}

fn cmd_eval(
    suite: &KernelSuite,
    kernel: Kernel,
    points: &Path,
    out: Option<&Path>,
    format: Format,
    sum_check: bool,
    index: usize,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(points)
        .map_err(|e| CliError::input(format!("points file: {e}")))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        let nums = match nums {
            Some(v) if v.len() >= 2 => v,
            // Tolerate one header line.
            _ if lineno == 0 => continue,
            _ => {
                return Err(CliError::input(format!(
                    "points file line {}: expected `re z, im z[, re w, im w]`",
                    lineno + 1
                )))
            }
        };
        let z = Complex64::new(nums[0], nums[1]);
        let w = if nums.len() >= 4 {
            Complex64::new(nums[2], nums[3])
        } else {
            Complex64::default()
        };
        rows.push(evaluate_point(suite, kernel, z, w, index));
    }

    if sum_check && kernel == Kernel::Poisson {
        let grid = suite.szego.grid();
        for row in &rows {
            if row.error.is_some() {
                continue;
            }
            let mut sum = 0.0;
            for k in 0..grid.len() {
                sum += suite
                    .poisson
                    .poisson_kernel(row.z, k)
                    .map_err(CliError::from_core)?
                    .value
                    * grid.weights()[k];
            }
            println!(
                "sum-check,{},{},{}",
                fmt17(row.z.re),
                fmt17(row.z.im),
                fmt17(sum)
            );
        }
    }

    let rendered = match format {
        Format::Csv => render_csv(&rows),
        Format::Json => render_json(&rows),
    };
    match out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| CliError::input(format!("writing output: {e}")))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn evaluate_point(
    suite: &KernelSuite,
    kernel: Kernel,
    z: Complex64,
    w: Complex64,
    index: usize,
) -> EvalRow {
    let result: Result<(Complex64, bool), CoreError> = (|| match kernel {
        Kernel::Szego => suite
            .szego
            .szego_eval(z, w)
            .map(|f| (f.value, f.near_boundary)),
        Kernel::Garabedian => suite
            .szego
            .garabedian_eval(z, w)
            .map(|f| (f.value, f.near_boundary)),
        Kernel::Bergman => suite
            .bergman
            .bergman_eval(z, w)
            .map(|f| (f.value, f.near_boundary)),
        Kernel::Lambda => suite
            .bergman
            .lambda_kernel_eval(z, w)
            .map(|f| (f.value, f.near_boundary)),
        Kernel::Ahlfors => suite
            .szego
            .ahlfors_eval(z)
            .map(|f| (f.value, f.near_boundary)),
        Kernel::Poisson => {
            let (node, _) = suite.szego.grid().nearest_node(w);
            suite
                .poisson
                .poisson_kernel(z, node)
                .map(|r| (Complex64::new(r.value, r.imag_residual), r.near_boundary))
        }
        Kernel::Omega => {
            let all = suite.poisson.omega_all(z)?;
            let j = index
                .checked_sub(1)
                .filter(|&j| j < all.len())
                .ok_or_else(|| {
                    CoreError::Geometry(format!(
                        "omega index {index} out of range 1..={}",
                        all.len()
                    ))
                })?;
            Ok((
                Complex64::new(all[j].value, all[j].imag_residual),
                all[j].near_boundary,
            ))
        }
    })();
    match result {
        Ok((value, near_boundary)) => EvalRow {
            z,
            w,
            value: Some(value),
            near_boundary,
            error: None,
        },
        Err(e) => EvalRow {
            z,
            w,
            value: None,
            near_boundary: false,
            error: Some(error_code(&e)),
        },
    }
}

fn error_code(e: &CoreError) -> String {
    match e {
        CoreError::OutsideDomain { .. } => "outside-domain".into(),
        CoreError::OnBoundary { .. } => "on-boundary".into(),
        CoreError::NearSingular(_) => "near-singular".into(),
        other => format!("error: {other}"),
    }
}

fn render_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from("re_z,im_z,re_w,im_w,re_value,im_value,near_boundary,error\n");
    for r in rows {
        let (re_v, im_v) = match r.value {
            Some(v) => (fmt17(v.re), fmt17(v.im)),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt17(r.z.re),
            fmt17(r.z.im),
            fmt17(r.w.re),
            fmt17(r.w.im),
            re_v,
            im_v,
            if r.near_boundary { 1 } else { 0 },
            r.error.clone().unwrap_or_default()
        ));
    }
    out
}

fn render_json(rows: &[EvalRow]) -> String {
    let items: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "z": [r.z.re, r.z.im],
                "w": [r.w.re, r.w.im],
                "value": r.value.map(|v| vec![v.re, v.im]),
                "near_boundary": r.near_boundary,
                "error": r.error,
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&items).expect("rows serialize");
    text.push('\n');
    text
}

/// Closed-form oracle for circle and concentric-annulus domains, rescaled
/// from the unit cases.
enum Oracle {
    Circle {
        center: Complex64,
        radius: f64,
    },
    Annulus {
        center: Complex64,
        inner: f64,
        outer: f64,
    },
}

impl Oracle {
    fn detect(domain: &Domain) -> Option<Oracle> {
        let circles: Vec<(Complex64, f64)> = domain
            .curves()
            .iter()
            .map(|c| match c {
                Curve::Circle { center, radius, .. } => Some((*center, *radius)),
                Curve::Trig { .. } => None,
            })
            .collect::<Option<Vec<_>>>()?;
        match circles.len() {
            1 => Some(Oracle::Circle {
                center: circles[0].0,
                radius: circles[0].1,
            }),
            2 => {
                let (outer_idx, inner_idx) = if domain.outer_index() == 0 {
                    (0, 1)
                } else {
                    (1, 0)
                };
                let (c0, r0) = circles[outer_idx];
                let (c1, r1) = circles[inner_idx];
                if (c0 - c1).norm() < 1e-12 {
                    Some(Oracle::Annulus {
                        center: c0,
                        inner: r1,
                        outer: r0,
                    })
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn szego(&self, z: Complex64, w: Complex64) -> Option<Complex64> {
        match self {
            Oracle::Circle { center, radius } => {
                Some(reference::circle_szego(*center, *radius, z, w))
            }
            Oracle::Annulus {
                center,
                inner,
                outer,
            } => reference::annulus_szego(
                inner / outer,
                (z - center) / outer,
                (w - center) / outer,
                1e-13,
            )
            .ok()
            .map(|v| v / outer),
        }
    }

    fn bergman(&self, z: Complex64, w: Complex64) -> Option<Complex64> {
        match self {
            Oracle::Circle { center, radius } => {
                Some(reference::circle_bergman(*center, *radius, z, w))
            }
            Oracle::Annulus {
                center,
                inner,
                outer,
            } => reference::annulus_bergman(
                inner / outer,
                (z - center) / outer,
                (w - center) / outer,
                1e-13,
            )
            .ok()
            .map(|v| v / (outer * outer)),
        }
    }
}

/// Deterministic interior point pairs for error measurement.
fn sample_pairs(grid: &BoundaryGrid) -> Vec<(Complex64, Complex64)> {
    let outer = grid.domain().outer_index();
    let range = grid.curve_range(outer);
    let n = range.len();
    let mut points = Vec::new();
    for s in 0..8 {
        let k = range.start + s * n / 8;
        let z0 = grid.nodes()[k];
        let mut feature = 0.5 * grid.diameter();
        for c in 0..grid.curve_count() {
            if c == outer {
                continue;
            }
            for j in grid.curve_range(c) {
                feature = feature.min((grid.nodes()[j] - z0).norm());
            }
        }
        let normal = Complex64::new(0.0, 1.0) * grid.tangents()[k];
        let p = z0 + 0.3 * feature * normal;
        if grid.contains(p).unwrap_or(false) {
            points.push(p);
        }
    }
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        pairs.push((points[i], points[(i + 3) % points.len()]));
    }
    pairs
}

fn cmd_convergence(
    domain_path: &Path,
    n_list: &str,
    a: &str,
    self_mode: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let spec = DomainSpec::load(domain_path).map_err(CliError::from_core)?;
    let domain = spec.to_domain().map_err(CliError::from_core)?;
    let mut sizes: Vec<usize> = n_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::input(format!("bad grid size {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(CliError::input("convergence needs at least two grid sizes"));
    }
    let base = parse_base(a)?;

    let oracle = Oracle::detect(&domain);
    if oracle.is_none() && !self_mode {
        return Err(CliError::input(
            "no closed-form oracle for this domain; pass --self to compare \
             against the largest grid",
        ));
    }

    // Resolve an auto base point once, on the finest grid, so every row of
    // the study uses the same package and errors decay monotonically.
    let finest = KernelSuite::assemble(&domain, *sizes.last().unwrap(), base)
        .map_err(CliError::from_core)?;
    let base = BasePoint::Fixed(finest.szego.base());

    let mut suites: Vec<(usize, KernelSuite)> = sizes[..sizes.len() - 1]
        .iter()
        .map(|&n| {
            KernelSuite::assemble(&domain, n, base)
                .map(|s| (n, s))
                .map_err(CliError::from_core)
        })
        .collect::<Result<Vec<_>, _>>()?;
    suites.push((*sizes.last().unwrap(), finest));

    let reference_suite = &suites.last().expect("nonempty").1;
    let pairs = sample_pairs(reference_suite.szego.grid());

    let mut csv = String::from("n,szego_max_err,bergman_max_err\n");
    let rows = if self_mode {
        &suites[..suites.len() - 1]
    } else {
        &suites[..]
    };
    for (n, suite) in rows {
        let mut szego_err = 0.0f64;
        let mut bergman_err = 0.0f64;
        for &(z, w) in &pairs {
            let s = suite
                .szego
                .szego_eval(z, w)
                .map_err(CliError::from_core)?
                .value;
            let k = suite
                .bergman
                .bergman_eval(z, w)
                .map_err(CliError::from_core)?
                .value;
            let (s_ref, k_ref) = match (&oracle, self_mode) {
                (Some(o), false) => match (o.szego(z, w), o.bergman(z, w)) {
                    (Some(sr), Some(kr)) => (sr, kr),
                    _ => continue,
                },
                _ => (
                    reference_suite
                        .szego
                        .szego_eval(z, w)
                        .map_err(CliError::from_core)?
                        .value,
                    reference_suite
                        .bergman
                        .bergman_eval(z, w)
                        .map_err(CliError::from_core)?
                        .value,
                ),
            };
            szego_err = szego_err.max((s - s_ref).norm());
            bergman_err = bergman_err.max((k - k_ref).norm());
        }
        csv.push_str(&format!(
            "{n},{},{}\n",
            fmt17(szego_err),
            fmt17(bergman_err)
        ));
    }

    match out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| CliError::input(format!("writing output: {e}")))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_fixtures(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("creating {}: {e}", out_dir.display())))?;
    for fixture in reference::fixtures() {
        let spec = DomainSpec::from_domain(&fixture.domain);
        let path = out_dir.join(format!("{}.domain.json", fixture.name));
        std::fs::write(&path, spec.to_json())
            .map_err(|e| CliError::input(format!("writing {}: {e}", path.display())))?;
        println!(
            "{}\tcurves={}\trecommended_n={}\toracle={}\t{}",
            fixture.name,
            fixture.domain.connectivity(),
            fixture.recommended_n,
            fixture.has_oracle,
            path.display()
        );
    }
    Ok(())
}
