use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use raylanding::angle_arith::{
    enum_critical_pairs, enum_misiurewicz_quadratic, enum_misiurewicz_tricorn,
    enum_parabolic_quadratic, misiurewicz_count_quadratic, misiurewicz_count_tricorn,
    RationalAngle,
};
use raylanding::batch;
use raylanding::dynamics::Family;
use raylanding::io::{self, AngleList};
use raylanding::landing::{cluster, land_angles, ClusterSet, LandingRecord, LandingTarget};
use raylanding::measures::{
    convergence_report, measure_from_clusters, reference_sample, EmpiricalMeasure, RowKind};
use raylanding::rays::{trace_ray, RaySchedule};
use serde_json::json;

/// Moments compared by `compare`, matching the convergence acceptance check.
const COMPARE_MOMENTS: usize = 4;

#[derive(Parser, Debug)]
#[command(name = "raylanding", version, about = "External-ray landing experiments for the quadratic family and the Tricorn")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Write an angle set with its header.
    Enumerate,
    /// Trace parameter rays, one CSV per angle.
    Trace,
    /// Trace, refine and cluster an angle set into a landing table.
    Land,
    /// Re-cluster an existing landing table.
    Cluster,
    /// Convergence report against a uniform-angle reference sample.
    Compare,
    /// Check every closed-form cardinality and bound by enumeration.
    VerifyCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// mandelbrot or tricorn.
    #[arg(long, global = true, default_value = "mandelbrot")]
    family: Family,
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    k: Option<u32>,
    /// Use the periodic set P(n) and parabolic refinement.
    #[arg(long, global = true)]
    parabolic: bool,
    /// Final potential level of traced rays.
    #[arg(long, global = true, default_value_t = 1e-8)]
    potential: f64,
    /// Newton tolerance per ray level.
    #[arg(long, global = true, default_value_t = 1e-13)]
    tol: f64,
    /// Clustering radius.
    #[arg(long, global = true, default_value_t = 1e-6)]
    epsilon: f64,
    /// Seed of the reference sample.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file, or directory for `trace`. Standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    emit: Emit,
    /// Largest n for `verify-counts`, or last row of `compare`.
    #[arg(long, global = true)]
    max_n: Option<u32>,
    /// Reference sample size for `compare`.
    #[arg(long, global = true, default_value_t = 4096)]
    ref_count: usize,
    /// Single angle `p/q` for `trace`.
    #[arg(long, global = true)]
    theta: Option<RationalAngle>,
    /// Input file: an angle list, or a landing table for `cluster`.
    #[arg(long, global = true)]
    from: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl ToString) -> Failure {
    Failure::Usage(msg.to_string())
}

struct Run {
    command: Command,
    opts: Opts,
    schedule: RaySchedule,
}

impl Run {
    fn new(command: Command, opts: Opts) -> Result<Self, Failure> {
        let schedule = RaySchedule {
            t_end: opts.potential,
            newton_tol: opts.tol,
            ..RaySchedule::default()
        };
        schedule.validate().map_err(usage)?;
        if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
            return Err(usage("--epsilon must be positive"));
        }
        if opts.parabolic && opts.family == Family::Tricorn {
            return Err(usage("--parabolic is only available for the mandelbrot family"));
        }
        Ok(Run {
            command,
            opts,
            schedule,
        })
    }

    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Enumerate => "enumerate",
            Command::Trace => "trace",
            Command::Land => "land",
            Command::Cluster => "cluster",
            Command::Compare => "compare",
            Command::VerifyCounts => "verify-counts",
        }
    }

    /// Every setting that can influence output. Worker count is left out:
    /// results do not depend on it.
    fn config(&self) -> serde_json::Value {
        let o = &self.opts;
        json!({
            "tool": format!("raylanding {}", env!("CARGO_PKG_VERSION")),
            "command": self.command_name(),
            "family": o.family,
            "n": o.n,
            "k": o.k,
            "parabolic": o.parabolic,
            "schedule": self.schedule,
            "epsilon": o.epsilon,
            "seed": o.seed,
            "ref_count": o.ref_count,
            "max_n": o.max_n,
            "theta": o.theta.as_ref().map(|t| t.to_string()),
            "from": o.from.as_ref().map(|p| p.display().to_string()),
        })
    }

    fn header(&self) -> Vec<String> {
        let c = self.config();
        let mut keys: Vec<(&String, &serde_json::Value)> = c.as_object().unwrap().iter().collect();
        keys.sort_by_key(|kv| kv.0);
        vec![keys
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => format!("{k}={}", s.replace(' ', "_")),
                v => format!("{k}={v}"),
            })
            .collect::<Vec<_>>()
            .join(" ")]
    }

    fn emit(&self, text: &str) -> Outcome {
        match &self.opts.out {
            Some(path) => write_file(path, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn indices(&self) -> Result<(u32, u32), Failure> {
        let n = self.opts.n.ok_or_else(|| usage("--n is required"))?;
        if self.opts.parabolic {
            if n == 0 {
                return Err(usage("--n must be at least 1"));
            }
            return Ok((n, 0));
        }
        let k = self.opts.k.ok_or_else(|| usage("--k is required unless --parabolic is given"))?;
        Ok((n, k))
    }

    fn target(&self, n: u32, k: u32) -> LandingTarget {
        if self.opts.parabolic {
            LandingTarget::Parabolic { q: n }
        } else {
            LandingTarget::Misiurewicz { n, k }
        }
    }

    fn base(&self) -> i64 {
        match self.opts.family {
            Family::Mandelbrot => 2,
            Family::Tricorn => -2,
        }
    }

    fn enumerate(&self, n: u32, k: u32) -> Result<Vec<RationalAngle>, Failure> {
        let r = match (self.opts.family, self.opts.parabolic) {
            (_, true) => enum_parabolic_quadratic(n),
            (Family::Mandelbrot, false) => enum_misiurewicz_quadratic(n, k),
            (Family::Tricorn, false) => enum_misiurewicz_tricorn(n, k),
        };
        r.map_err(usage)
    }

    /// Angles from `--from`, else from `--n`/`--k`.
    fn angle_list(&self) -> Result<AngleList, Failure> {
        if let Some(path) = &self.opts.from {
            let list = io::read_angle_list(&read_file(path)?).map_err(usage)?;
            if list.base != self.base() {
                return Err(usage(format!(
                    "{} holds base {} angles but --family {} uses base {}",
                    path.display(),
                    list.base,
                    self.opts.family,
                    self.base()
                )));
            }
            if self.opts.parabolic != (list.k == 0) {
                return Err(usage("--parabolic must match the angle file (k=0 marks P(n))"));
            }
            return Ok(list);
        }
        let (n, k) = self.indices()?;
        Ok(AngleList {
            base: self.base(),
            n,
            k,
            angles: self.enumerate(n, k)?,
        })
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_enumerate(run: &Run) -> Outcome {
    let (n, k) = run.indices()?;
    let list = AngleList {
        base: run.base(),
        n,
        k,
        angles: run.enumerate(n, k)?,
    };
    if run.opts.emit != Emit::Csv {
        return run.emit(&io::json_document(&run.config(), &list.angles));
    }
    run.emit(&io::angle_list(&list, &run.header()))
}

fn cmd_trace(run: &Run) -> Outcome {
    let angles = match &run.opts.theta {
        Some(t) => vec![t.clone()],
        None => run.angle_list()?.angles,
    };
    if angles.len() > 1 && run.opts.out.is_none() {
        return Err(usage("--out <dir> is required when tracing more than one angle"));
    }
    let family = run.opts.family;
    let traces = batch::map(&angles, |t| trace_ray(family, t, &run.schedule));
    let header = run.header();
    let mut stalled = Vec::new();
    for (theta, tr) in angles.iter().zip(traces) {
        let tr = tr.map_err(usage)?;
        if !tr.reached() {
            stalled.push(theta.to_string());
        }
        let (text, ext) = match run.opts.emit {
            Emit::Json => (io::json_document(&run.config(), &tr), "json"),
            _ => (io::trace_csv(&tr, &header), "csv"),
        };
        match (&run.opts.out, angles.len()) {
            (None, _) => print!("{text}"),
            (Some(dir), _) => write_file(&dir.join(format!("{}.{ext}", theta.file_stem())), &text)?,
        }
    }
    if stalled.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("rays stalled: {}", stalled.join(" "))))
    }
}

/// Writes the landing table (or its JSON / SVG rendering) for `records`.
fn emit_landings(
    run: &Run,
    records: &[LandingRecord],
    clusters: &Result<ClusterSet, String>,
    failures: &[(RationalAngle, String)],
    normalizer: usize,
) -> Outcome {
    let cs = clusters.as_ref().ok();
    let mut header = run.header();
    if let Err(e) = clusters {
        header.push(format!("clustering failed: {e}"));
    }
    match run.opts.emit {
        Emit::Csv => run.emit(&io::landing_table(records, cs, failures, &header)),
        Emit::Json => {
            let summary: Vec<_> = cs
                .map(|cs| {
                    cs.clusters
                        .iter()
                        .enumerate()
                        .map(|(id, c)| {
                            json!({
                                "id": id,
                                "re": c.representative.re,
                                "im": c.representative.im,
                                "multiplicity": c.multiplicity(),
                                "diameter": c.diameter,
                                "angles": c.angles.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                            })
                        })
                        .collect()
                })
                .unwrap_or_default();
            let failed: Vec<_> = failures
                .iter()
                .map(|(t, m)| json!({ "theta": t.to_string(), "error": m }))
                .collect();
            let data = json!({ "records": records, "clusters": summary, "failures": failed });
            run.emit(&io::json_document(&run.config(), &data))
        }
        Emit::Svg => {
            let mu = match cs {
                Some(cs) => measure_from_clusters(cs, normalizer.max(1)).map_err(usage)?,
                None => EmpiricalMeasure::from_atoms(
                    records.iter().map(|r| (r.c_refined, 1.0 / normalizer.max(1) as f64)).collect(),
                ),
            };
            run.emit(&io::atoms_svg(&[(&mu, "black")], &header))
        }
    }
}

fn cmd_land(run: &Run) -> Outcome {
    let list = run.angle_list()?;
    let target = run.target(list.n, list.k);
    let results = land_angles(run.opts.family, &list.angles, target, &run.schedule);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (theta, r) in list.angles.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((theta.clone(), e.to_string())),
        }
    }
    let clusters = cluster(&records, run.opts.epsilon).map_err(|e| e.to_string());
    let refined = records.iter().filter(|r| r.is_refined()).count();
    eprintln!(
        "{} angles, {} landed, {} refined, {}",
        list.angles.len(),
        records.len(),
        refined,
        match &clusters {
            Ok(cs) => format!("{} clusters", cs.clusters.len()),
            Err(e) => e.clone(),
        }
    );
    emit_landings(run, &records, &clusters, &failures, list.angles.len())?;
    finish_landings(&clusters, &failures)
}

fn finish_landings(clusters: &Result<ClusterSet, String>, failures: &[(RationalAngle, String)]) -> Outcome {
    if let Err(e) = clusters {
        return Err(Failure::Numerical(e.clone()));
    }
    if !failures.is_empty() {
        return Err(Failure::Numerical(format!("{} angles failed to land", failures.len())));
    }
    Ok(())
}

fn cmd_cluster(run: &Run) -> Outcome {
    let path = run.opts.from.as_ref().ok_or_else(|| usage("--from <landing table> is required"))?;
    let records = io::read_landing_table(&read_file(path)?).map_err(usage)?;
    let clusters = cluster(&records, run.opts.epsilon).map_err(|e| e.to_string());
    if let Ok(cs) = &clusters {
        eprintln!("{} records, {} clusters", records.len(), cs.clusters.len());
    }
    emit_landings(run, &records, &clusters, &[], records.len())?;
    finish_landings(&clusters, &[])
}

fn cmd_compare(run: &Run) -> Outcome {
    let kind = if run.opts.parabolic { RowKind::Parabolic } else { RowKind::Misiurewicz };
    let (n, k) = match (run.opts.max_n, run.opts.n) {
        // rows past the first pick k(n) = n/2 + 1 themselves
        (Some(_), Some(n)) if !run.opts.parabolic => (n, n / 2 + 1),
        _ => run.indices()?,
    };
    let indices: Vec<(u32, u32)> = match run.opts.max_n {
        Some(max_n) if max_n < n => return Err(usage("--max-n must be at least --n")),
        Some(max_n) => (n..=max_n)
            .map(|m| if run.opts.parabolic { (m, 0) } else { (m, m / 2 + 1) })
            .collect(),
        None => vec![(n, k)],
    };
    let reference = reference_sample(run.opts.family, run.opts.ref_count, run.opts.seed, &run.schedule)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let report = convergence_report(run.opts.family, kind, &indices, &run.schedule, &reference, COMPARE_MOMENTS);
    let header = run.header();
    match run.opts.emit {
        Emit::Csv => run.emit(&io::report_csv(&report, &header)),
        Emit::Json => run.emit(&io::json_document(&run.config(), &report)),
        Emit::Svg => {
            let (n, k) = *indices.last().unwrap();
            let (angles, _, target) = raylanding::measures::row_angles(run.opts.family, kind, n, k).map_err(usage)?;
            let records: Vec<_> = land_angles(run.opts.family, &angles, target, &run.schedule)
                .into_iter()
                .filter_map(Result::ok)
                .collect();
            let (mu, _) = raylanding::measures::row_measure(&records, angles.len(), run.opts.epsilon);
            run.emit(&io::atoms_svg(&[(&reference.measure, "grey"), (&mu, "crimson")], &header))
        }
    }
}

/// Formula families checked by enumeration; bound checks count as violations
/// but not as families.
fn cmd_verify_counts(run: &Run) -> Outcome {
    let max_n = run.opts.max_n.unwrap_or(16);
    if max_n < 2 {
        return Err(usage("--max-n must be at least 2"));
    }
    let mut violations: Vec<String> = Vec::new();
    let mut check = |what: String, got: usize, want: i128| {
        if got as i128 != want {
            violations.push(format!("{what}: enumerated {got}, formula {want}"));
        }
    };
    let pairs: Vec<(u32, u32)> = (3..=max_n).flat_map(|n| (2..n).map(move |k| (n, k))).collect();
    let quad = batch::map(&pairs, |&(n, k)| enum_misiurewicz_quadratic(n, k).map(|v| v.len()));
    let anti = batch::map(&pairs, |&(n, k)| enum_misiurewicz_tricorn(n, k).map(|v| v.len()));
    for ((&(n, k), q), a) in pairs.iter().zip(quad).zip(anti) {
        check(format!("C({n},{k})"), q.map_err(usage)?, misiurewicz_count_quadratic(n, k));
        check(format!("C*({n},{k})"), a.map_err(usage)?, misiurewicz_count_tricorn(n, k));
    }
    for n in 1..=max_n {
        check(format!("P({n})"), enum_parabolic_quadratic(n).map_err(usage)?.len(), (1i128 << n) - 1);
    }
    let d: i128 = 4;
    for m in 2..=6u32 {
        for n in 1..m {
            let card = enum_critical_pairs(4, m, n).map_err(usage)?.len() as i128;
            let lo = d.pow(m) - d.pow(n);
            if card < lo || card > 2 * lo {
                violations.push(format!("S({m},{n}) = {card} outside [{lo}, {}]", 2 * lo));
            }
        }
    }
    for v in &violations {
        eprintln!("violation: {v}");
    }
    let line = format!("{}: 3 formula families, {} violations\n", if violations.is_empty() { "OK" } else { "FAIL" }, violations.len());
    run.emit(&line)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("{} cardinality violations", violations.len())))
    }
}

fn dispatch(run: &Run) -> Outcome {
    batch::with_workers(run.opts.workers, || match run.command {
        Command::Enumerate => cmd_enumerate(run),
        Command::Trace => cmd_trace(run),
        Command::Land => cmd_land(run),
        Command::Cluster => cmd_cluster(run),
        Command::Compare => cmd_compare(run),
        Command::VerifyCounts => cmd_verify_counts(run),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Run::new(cli.command, cli.opts).and_then(|run| dispatch(&run));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
