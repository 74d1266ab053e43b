mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use qmc_sphere::experiments::{
    default_n_grid, decay_fit, equal_area_study, expect_equal_area_wce, expect_random_wce, integration_study,
    random_study, s_star_table, Family, FitReport, DEFAULT_S_GRID,
};
use qmc_sphere::harmonic::{design_strength, dgs_lower_bound};
use qmc_sphere::io::{format_pointset, read_pointset, write_pointset};
use qmc_sphere::optimize::{optimize, DesignPenalty, Init, Objective, ObjectiveKind, OptOptions};
use qmc_sphere::pointgen::{equal_area_partition, polytope, random_uniform, randomized_equal_area, spiral, Polytope};
use qmc_sphere::quality::{
    cap_l2_discrepancy, cap_l2_discrepancy_direct, cap_linf_discrepancy_estimate, franke, wce, wce_harmonic,
    SobolevSpace, FRANKE_INTEGRAL,
};
use qmc_sphere::{Error, PointSet};
use serde::Serialize;

use output::{emit, Format};

#[derive(Parser)]
#[command(name = "qmc-sphere", version, about = "Point sets on the sphere and their QMC quality")]
struct Cli {
    /// Output format for tables.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a point set.
    Gen(GenArgs),
    /// Worst-case error of the equal-weight rule.
    Wce(WceArgs),
    /// Spherical cap discrepancies.
    Disc(DiscArgs),
    /// Spherical design strength.
    DesignCheck(DesignArgs),
    /// Optimize a pair energy.
    Opt(OptArgs),
    /// Fit value ~ alpha N^-beta to a CSV table.
    Fit(FitArgs),
    /// Monte Carlo expectation of wce^2 for random constructions.
    Expect(ExpectArgs),
    /// Equal-weight integration of a test function.
    Integrate(IntegrateArgs),
    /// Decay exponents over s and the s* estimate per family.
    Sstar(SstarArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    Random,
    Spiral,
    EqualArea,
    RandomizedEqualArea,
    Polytope,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Number of points (not used for polytopes).
    #[arg(long)]
    n: Option<usize>,
    /// Sphere dimension (random points only).
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// tetrahedron, octahedron, cube or icosahedron.
    #[arg(long)]
    polytope: Option<String>,
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelKind {
    Cf,
    Gd,
    Canonical,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "gd")]
    kernel: KernelKind,
    /// Smoothness; cf is fixed at 1.5.
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Args)]
struct WceArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Also evaluate the harmonic sum up to this degree.
    #[arg(long)]
    ell_max: Option<usize>,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("kind").required(true).args(["l2", "l2_direct", "linf_est"])))]
struct DiscArgs {
    /// Closed-form cap L2 discrepancy.
    #[arg(long)]
    l2: bool,
    /// Monte Carlo estimate of the cap L2 discrepancy.
    #[arg(long)]
    l2_direct: bool,
    /// Lower-bound estimate of the cap L-infinity discrepancy.
    #[arg(long)]
    linf_est: bool,
    #[arg(long, default_value_t = 100_000)]
    centers: usize,
    #[arg(long, default_value_t = 64)]
    theta_nodes: usize,
    /// Random cap centers added to the point-centered ones (--linf-est).
    #[arg(long, default_value_t = 0)]
    extra_centers: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, default_value_t = 10)]
    t_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    /// Maximize the sum of |x_i - x_j|^(2s-d).
    Distance,
    Coulomb,
    Log,
    /// Minimize the reproducing-kernel energy (kernel from --kernel, --s).
    Kernel,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long, value_enum)]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "gd")]
    kernel: KernelKind,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    grad_tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Starting configuration for the first restart.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Weight of the design penalty (needs --penalty-degree).
    #[arg(long, requires = "penalty_degree")]
    penalty_mu: Option<f64>,
    #[arg(long, requires = "penalty_mu")]
    penalty_degree: Option<usize>,
    /// Where to write the optimized points.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Column holding N.
    #[arg(long, default_value = "N")]
    n_column: String,
    /// Column holding the decaying value.
    #[arg(long, default_value = "wce")]
    value: String,
    /// Columns that identify a series (default: those of family, kernel, s present).
    #[arg(long, value_delimiter = ',')]
    group: Option<Vec<String>>,
    /// CSV file; `-` reads stdin.
    file: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Random,
    EqualArea,
}

#[derive(Args)]
struct ExpectArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Sphere dimension (random model only).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Point counts, comma separated. Three or more also report a fit.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Function {
    Franke,
    Const,
}

#[derive(Args)]
struct FamilyArgs {
    /// Families: random, spiral, equal-area, randomized-equal-area, optimized.
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,
    /// Point counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration budget of the optimized family.
    #[arg(long, default_value_t = 40)]
    max_iter: usize,
    /// Smoothness whose distance sum the optimized family maximizes.
    #[arg(long, default_value_t = 1.5)]
    opt_s: f64,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long, value_enum, default_value = "franke")]
    function: Function,
    /// Value of the constant function.
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    #[command(flatten)]
    families: FamilyArgs,
    /// Point-set files; each forms its own series.
    files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SstarTable {
    Estimates,
    Fits,
    Wce,
}

#[derive(Args)]
struct SstarArgs {
    #[command(flatten)]
    families: FamilyArgs,
    /// Smoothness grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    s_grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "estimates")]
    table: SstarTable,
    /// Point-set files fitted together as one extra family.
    #[arg(long, num_args = 1..)]
    files: Vec<PathBuf>,
    /// Name of the family formed by --files.
    #[arg(long, default_value = "files")]
    files_name: String,
}

/// An error attributable to a command-line flag; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Turns a parameter rejection by the library into a usage error on `flag`.
fn flagged<T>(r: qmc_sphere::Result<T>, flag: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter(m) => usage(format!("invalid {flag}: {m}")),
        other => other.into(),
    })
}

fn seed_or_auto(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn load(path: &Path) -> Result<PointSet> {
    read_pointset(path).map_err(|e| match e {
        Error::Io(io) => anyhow::Error::new(io).context(format!("cannot read {}", path.display())),
        other => other.into(),
    })
}

fn label(x: &PointSet, path: &Path) -> String {
    x.label().map(str::to_string).unwrap_or_else(|| path.display().to_string())
}

fn space(k: &KernelArgs, d: usize) -> Result<SobolevSpace> {
    match k.kernel {
        KernelKind::Cf => {
            if d != 2 {
                return Err(usage(format!("--kernel cf needs points on S^2, got S^{d}")));
            }
            if k.s.is_some_and(|s| s != 1.5) {
                return Err(usage("--kernel cf has fixed smoothness --s 1.5"));
            }
            Ok(SobolevSpace::cui_freeden())
        }
        KernelKind::Gd => {
            let s = k.s.ok_or_else(|| usage("--kernel gd requires --s"))?;
            flagged(SobolevSpace::gen_distance(d, s), "--s")
        }
        KernelKind::Canonical => {
            let s = k.s.ok_or_else(|| usage("--kernel canonical requires --s"))?;
            flagged(SobolevSpace::canonical(d, s), "--s")
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let need_n = || a.n.ok_or_else(|| usage(format!("--kind {} requires --n", kebab(&format!("{:?}", a.kind)))));
    let mut seed = None;
    let x = match a.kind {
        GenKind::Random => {
            let s = seed_or_auto(a.seed);
            seed = Some(s);
            flagged(random_uniform(a.d, need_n()?, s), "--n/--d")?
        }
        GenKind::Spiral => flagged(spiral(need_n()?), "--n")?,
        GenKind::EqualArea => flagged(equal_area_partition(need_n()?), "--n")?.centers(),
        GenKind::RandomizedEqualArea => {
            let s = seed_or_auto(a.seed);
            seed = Some(s);
            flagged(randomized_equal_area(need_n()?, s), "--n")?
        }
        GenKind::Polytope => {
            let name = a.polytope.as_deref().ok_or_else(|| usage("--kind polytope requires --polytope"))?;
            polytope(flagged(name.parse::<Polytope>(), "--polytope")?)
        }
    };
    let mut text = format_pointset(&x);
    let kind = format!("{:?}", a.kind);
    let mut note = format!("# kind={}", kebab(&kind));
    if let Some(s) = seed {
        note += &format!(" seed={s}");
    }
    let header_end = text.find('\n').map_or(0, |i| i + 1);
    text.insert_str(header_end, &(note + "\n"));
    match &a.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn kebab(camel: &str) -> String {
    let mut s = String::new();
    for (i, c) in camel.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            s.push('-');
        }
        s.push(c.to_ascii_lowercase());
    }
    s
}

#[derive(Serialize)]
struct WceOut {
    file: String,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    kernel: String,
    s: f64,
    wce: f64,
    energy: f64,
    a0: f64,
    ell_max: Option<usize>,
    harmonic_estimate: Option<f64>,
    tail_bound: Option<f64>,
    refined_bound: Option<f64>,
}

fn cmd_wce(a: &WceArgs, fmt: Format) -> Result<()> {
    let mut rows = Vec::new();
    for path in &a.files {
        let x = load(path)?;
        let sp = space(&a.kernel, x.dim())?;
        let r = wce(&sp, &x)?;
        let h = a.ell_max.map(|l| flagged(wce_harmonic(&sp, &x, l), "--ell-max")).transpose()?;
        rows.push(WceOut {
            file: label(&x, path),
            n: r.n,
            d: r.d,
            kernel: r.kernel,
            s: r.s,
            wce: r.wce,
            energy: r.energy,
            a0: r.a0,
            ell_max: a.ell_max,
            harmonic_estimate: h.as_ref().map(|h| h.estimate),
            tail_bound: h.as_ref().map(|h| h.tail_bound),
            refined_bound: h.as_ref().map(|h| h.refined_bound),
        });
    }
    emit(fmt, "wce", None, &rows)
}

#[derive(Serialize)]
struct L2Out {
    file: String,
    #[serde(rename = "N")]
    n: usize,
    l2: f64,
}

#[derive(Serialize)]
struct L2DirectOut {
    file: String,
    #[serde(rename = "N")]
    n: usize,
    value: f64,
    std_error: f64,
    squared: f64,
    squared_std_error: f64,
    n_centers: usize,
    n_theta: usize,
}

#[derive(Serialize)]
struct LinfOut {
    file: String,
    #[serde(rename = "N")]
    n: usize,
    linf: f64,
    l2: f64,
    candidate_gap: bool,
    n_candidates: usize,
}

fn cmd_disc(a: &DiscArgs, fmt: Format) -> Result<()> {
    let sets: Vec<(String, PointSet)> = a
        .files
        .iter()
        .map(|p| load(p).map(|x| (label(&x, p), x)))
        .collect::<Result<_>>()?;
    if a.l2 {
        let rows = sets
            .iter()
            .map(|(f, x)| {
                Ok(L2Out {
                    file: f.clone(),
                    n: x.len(),
                    l2: cap_l2_discrepancy(x)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return emit(fmt, "disc-l2", None, &rows);
    }
    let seed = seed_or_auto(a.seed);
    if a.l2_direct {
        let rows = sets
            .iter()
            .map(|(f, x)| {
                let e = flagged(cap_l2_discrepancy_direct(x, a.centers, a.theta_nodes, seed), "--centers/--theta-nodes")?;
                Ok(L2DirectOut {
                    file: f.clone(),
                    n: x.len(),
                    value: e.value,
                    std_error: e.std_error,
                    squared: e.squared,
                    squared_std_error: e.squared_std_error,
                    n_centers: e.n_centers,
                    n_theta: e.n_theta,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return emit(fmt, "disc-l2-direct", Some(seed), &rows);
    }
    let rows = sets
        .iter()
        .map(|(f, x)| {
            let e = cap_linf_discrepancy_estimate(x, a.extra_centers, seed)?;
            Ok(LinfOut {
                file: f.clone(),
                n: x.len(),
                linf: e.value,
                l2: e.l2,
                candidate_gap: e.candidate_gap,
                n_candidates: e.n_candidates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(fmt, "disc-linf", Some(seed), &rows)
}

#[derive(Serialize)]
struct DesignOut {
    file: String,
    #[serde(rename = "N")]
    n: usize,
    t_max: usize,
    tol: f64,
    strength: usize,
    /// Fewest points any design of this strength can have.
    dgs_bound: Option<u64>,
}

fn cmd_design(a: &DesignArgs, fmt: Format) -> Result<()> {
    let mut rows = Vec::new();
    for path in &a.files {
        let x = load(path)?;
        let strength = flagged(design_strength(&x, a.t_max, a.tol), "--t-max/--tol")?;
        rows.push(DesignOut {
            file: label(&x, path),
            n: x.len(),
            t_max: a.t_max,
            tol: a.tol,
            strength,
            dgs_bound: dgs_lower_bound(x.dim(), strength).ok(),
        });
    }
    emit(fmt, "design-check", None, &rows)
}

#[derive(Serialize)]
struct OptOut {
    objective: String,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    objective_value: f64,
    maximize: bool,
    iterations: usize,
    grad_norm: f64,
    restarts_used: usize,
    best_restart: usize,
    failed_restarts: usize,
    points_file: String,
}

fn cmd_opt(a: &OptArgs, fmt: Format) -> Result<()> {
    let init_set = a.init.as_deref().map(load).transpose()?;
    let d = init_set.as_ref().map_or(a.d, PointSet::dim);
    let n = match (&init_set, a.n) {
        (Some(x), Some(n)) if x.len() != n => {
            return Err(usage(format!("--n {n} disagrees with the {} points of --init", x.len())))
        }
        (Some(x), _) => x.len(),
        (None, Some(n)) => n,
        (None, None) => return Err(usage("opt requires --n or --init")),
    };
    let kind = match a.objective {
        ObjectiveArg::Distance => ObjectiveKind::DistanceSum {
            s: a.s.ok_or_else(|| usage("--objective distance requires --s"))?,
        },
        ObjectiveArg::Coulomb => ObjectiveKind::Coulomb,
        ObjectiveArg::Log => ObjectiveKind::LogEnergy,
        ObjectiveArg::Kernel => {
            let k = KernelArgs { kernel: a.kernel, s: a.s };
            ObjectiveKind::KernelEnergy {
                kernel: space(&k, d)?.spec().clone(),
            }
        }
    };
    let tag = match &kind {
        ObjectiveKind::DistanceSum { s } => format!("distance-s{s}"),
        ObjectiveKind::KernelEnergy { kernel } => format!("kernel-{}-s{}", kernel.tag(), kernel.smoothness()),
        ObjectiveKind::Coulomb => "coulomb".into(),
        ObjectiveKind::LogEnergy => "log".into(),
    };
    let mut obj = flagged(Objective::new(kind, d), "--s")?;
    if let (Some(mu), Some(degree)) = (a.penalty_mu, a.penalty_degree) {
        obj = flagged(obj.with_penalty(DesignPenalty { mu, degree }), "--penalty-mu/--penalty-degree")?;
    }
    let seed = seed_or_auto(a.seed);
    let opts = OptOptions {
        max_iter: a.max_iter,
        grad_tol: a.grad_tol,
        restarts: a.restarts,
        seed,
    };
    let init = match init_set {
        Some(x) => Init::Points(x),
        None => Init::Seed(seed),
    };
    let r = flagged(optimize(&obj, n, init, &opts), "--n/--restarts")?;
    write_pointset(r.points(), &a.output)?;
    let row = OptOut {
        objective: tag,
        n,
        d,
        objective_value: r.objective_value,
        maximize: r.maximize,
        iterations: r.iterations,
        grad_norm: r.grad_norm,
        restarts_used: r.restarts_used,
        best_restart: r.best_restart,
        failed_restarts: r.failed_restarts,
        points_file: a.output.display().to_string(),
    };
    emit(fmt, "opt", Some(r.seed), &[row])
}

fn cmd_fit(a: &FitArgs, fmt: Format) -> Result<()> {
    let reader: Box<dyn std::io::Read> = if a.file.as_os_str() == "-" {
        Box::new(std::io::stdin())
    } else {
        Box::new(std::fs::File::open(&a.file).with_context(|| format!("opening {}", a.file.display()))?)
    };
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str, flag: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| usage(format!("{flag}: no column '{name}' in {}", a.file.display())))
    };
    let n_col = col(&a.n_column, "--n-column")?;
    let v_col = col(&a.value, "--value")?;
    let group_cols: Vec<usize> = match &a.group {
        Some(g) => g.iter().map(|c| col(c, "--group")).collect::<Result<_>>()?,
        None => ["family", "kernel", "s"]
            .iter()
            .filter_map(|c| headers.iter().position(|h| h == *c))
            .collect(),
    };
    let mut series: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let n: usize = rec[n_col]
            .parse()
            .with_context(|| format!("row {line}: bad N '{}'", &rec[n_col]))?;
        let v: f64 = rec[v_col]
            .parse()
            .with_context(|| format!("row {line}: bad value '{}'", &rec[v_col]))?;
        let key = group_cols
            .iter()
            .map(|&c| format!("{}={}", &headers[c], &rec[c]))
            .collect::<Vec<_>>()
            .join(" ");
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, data)) => data.push((n, v)),
            None => series.push((key, vec![(n, v)])),
        }
    }
    if series.is_empty() {
        bail!("{}: no data rows", a.file.display());
    }
    let fits: Vec<FitReport> = series
        .into_iter()
        .map(|(k, data)| decay_fit(&data).map(|f| f.with_series(k)))
        .collect::<qmc_sphere::Result<_>>()?;
    emit(fmt, "fit", None, &fits)
}

fn cmd_expect(a: &ExpectArgs, fmt: Format) -> Result<()> {
    let seed = seed_or_auto(a.seed);
    let d = match a.model {
        Model::Random => a.d,
        Model::EqualArea => 2,
    };
    let sp = space(&a.kernel, d)?;
    let fit = a.n.len() >= 3;
    match a.model {
        Model::Random => {
            let (rows, fit) = if fit {
                let (rows, f) = flagged(random_study(&sp, &a.n, a.trials, seed), "--n/--trials")?;
                (rows, Some(f))
            } else {
                let rows = a
                    .n
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| {
                        flagged(
                            expect_random_wce(&sp, n, a.trials, qmc_sphere::rng::derive_seed(seed, i as u64)),
                            "--n/--trials",
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                (rows, None)
            };
            emit(fmt, "expect-random", Some(seed), &rows)?;
            if let Some(f) = fit {
                eprintln!("fit of sqrt(E[wce^2]): beta={} alpha={} residual={}", f.beta, f.alpha, f.residual);
            }
        }
        Model::EqualArea => {
            if fit {
                let st = flagged(equal_area_study(&sp, &a.n, a.trials, seed), "--n/--trials")?;
                emit(fmt, "expect-equal-area", Some(seed), &st.rows)?;
                eprintln!(
                    "fit of rms wce: beta={} (expected {} +- {}, within={})",
                    st.fit.beta, st.expected_beta, st.tolerance, st.within
                );
            } else {
                let rows = a
                    .n
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| {
                        flagged(
                            expect_equal_area_wce(&sp, n, a.trials, qmc_sphere::rng::derive_seed(seed, i as u64)),
                            "--n/--trials",
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                emit(fmt, "expect-equal-area", Some(seed), &rows)?;
            }
        }
    }
    Ok(())
}

/// Families named on the command line, plus the seed they use if any.
fn families(a: &FamilyArgs) -> Result<(Vec<Family>, Option<u64>)> {
    let needs_seed = a.family.iter().any(|f| f == "random" || f == "randomized-equal-area");
    let seed = needs_seed.then(|| seed_or_auto(a.seed));
    let fams = a
        .family
        .iter()
        .map(|f| {
            Ok(match f.as_str() {
                "random" => Family::Random {
                    d: 2,
                    seed: seed.unwrap_or_default(),
                },
                "spiral" => Family::Spiral,
                "equal-area" => Family::EqualArea,
                "randomized-equal-area" => Family::RandomizedEqualArea {
                    seed: seed.unwrap_or_default(),
                },
                "optimized" => Family::Optimized {
                    s: a.opt_s,
                    max_iter: a.max_iter,
                },
                other => return Err(usage(format!("--family: unknown family '{other}'"))),
            })
        })
        .collect::<Result<_>>()?;
    Ok((fams, seed))
}

fn file_family(name: &str, files: &[PathBuf]) -> Result<Family> {
    Ok(Family::Sets {
        name: name.to_string(),
        sets: files.iter().map(|p| load(p)).collect::<Result<_>>()?,
    })
}

fn cmd_integrate(a: &IntegrateArgs, fmt: Format) -> Result<()> {
    let (mut fams, seed) = families(&a.families)?;
    if !fams.is_empty() && a.families.n.is_empty() {
        return Err(usage("--family requires --n"));
    }
    for p in &a.files {
        let x = load(p)?;
        fams.push(Family::Sets {
            name: label(&x, p),
            sets: vec![x],
        });
    }
    if fams.is_empty() {
        return Err(usage("integrate needs point-set files or --family"));
    }
    let c = a.value;
    let rows = match a.function {
        Function::Franke => integration_study(&fams, &a.families.n, franke, FRANKE_INTEGRAL)?,
        Function::Const => integration_study(&fams, &a.families.n, |_| c, c)?,
    };
    emit(fmt, "integrate", seed, &rows)
}

fn cmd_sstar(a: &SstarArgs, fmt: Format) -> Result<()> {
    let mut fa = FamilyArgs {
        family: a.families.family.clone(),
        n: a.families.n.clone(),
        seed: a.families.seed,
        max_iter: a.families.max_iter,
        opt_s: a.families.opt_s,
    };
    if fa.family.is_empty() && a.files.is_empty() {
        fa.family = ["random", "spiral", "equal-area", "randomized-equal-area"].map(String::from).to_vec();
    }
    let (mut fams, seed) = families(&fa)?;
    if !a.files.is_empty() {
        fams.push(file_family(&a.files_name, &a.files)?);
    }
    let n_grid = if fa.n.is_empty() { default_n_grid() } else { fa.n };
    let s_grid = if a.s_grid.is_empty() { DEFAULT_S_GRID.to_vec() } else { a.s_grid.clone() };
    let t = flagged(s_star_table(&fams, &s_grid, &n_grid), "--s-grid/--n")?;
    match a.table {
        SstarTable::Estimates => emit(fmt, "sstar-estimates", seed, &t.estimates),
        SstarTable::Fits => emit(fmt, "sstar-fits", seed, &t.fits),
        SstarTable::Wce => emit(fmt, "sstar-wce", seed, &t.wce),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let fmt = cli.format;
    match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Wce(a) => cmd_wce(a, fmt),
        Cmd::Disc(a) => cmd_disc(a, fmt),
        Cmd::DesignCheck(a) => cmd_design(a, fmt),
        Cmd::Opt(a) => cmd_opt(a, fmt),
        Cmd::Fit(a) => cmd_fit(a, fmt),
        Cmd::Expect(a) => cmd_expect(a, fmt),
        Cmd::Integrate(a) => cmd_integrate(a, fmt),
        Cmd::Sstar(a) => cmd_sstar(a, fmt),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors repeat their source's text; print each message once.
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    msg += if msg.is_empty() { "" } else { ": " };
                    msg += &cause;
                }
            }
            eprintln!("error: {msg}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
