//! Plain-text stage files: angle lists, per-angle trace CSVs, landing tables,
//! convergence reports and an atom scatter SVG.
//!
//! Every writer returns the full file contents. Output depends only on its
//! inputs (floats use the shortest round-trip rendering), so reruns are
//! byte-identical.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::angle_arith::RationalAngle;
use crate::dynamics::Family;
use crate::error::FormatError;
use crate::landing::{ClusterSet, LandingKind, LandingRecord};
use crate::measures::{ConvergenceReport, EmpiricalMeasure};
use crate::rays::RayTrace;

pub const TRACE_COLUMNS: [&str; 6] = ["t", "depth", "re(c)", "im(c)", "residual", "iters"];
pub const LANDING_COLUMNS: [&str; 12] = [
    "theta",
    "family",
    "n",
    "k",
    "re(c)",
    "im(c)",
    "kind",
    "residual",
    "strictness",
    "cycle_period",
    "cluster_id",
    "multiplicity",
];
pub const REPORT_COLUMNS: [&str; 12] = [
    "n",
    "k",
    "cardinality",
    "expected_cardinality",
    "landed",
    "landed_fraction",
    "refined",
    "clusters",
    "star_discrepancy",
    "moment_distance",
    "non_monotone",
    "note",
];

fn comment_lines(out: &mut String, header: &[String]) {
    for h in header {
        for line in h.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
}

fn csv_body(columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 fields")
}

/// Shortest round-trip rendering, in exponent form outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleList {
    pub base: i64,
    pub n: u32,
    pub k: u32,
    pub angles: Vec<RationalAngle>,
}

/// Angle list: `# base=<m> n=<n> k=<k> count=<N>`, extra header lines, then
/// one `p/q` per line.
pub fn angle_list(list: &AngleList, header: &[String]) -> String {
    let mut out = format!(
        "# base={} n={} k={} count={}\n",
        list.base,
        list.n,
        list.k,
        list.angles.len()
    );
    comment_lines(&mut out, header);
    for a in &list.angles {
        let _ = writeln!(out, "{a}");
    }
    out
}

fn header_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.trim_start_matches('#')
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

pub fn read_angle_list(text: &str) -> Result<AngleList, FormatError> {
    let first = text.lines().next().unwrap_or("");
    let field = |key: &str| -> Result<i64, FormatError> {
        header_field(first, key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| FormatError::Header(format!("{key}= in first line")))
    };
    let (base, n, k, count) = (field("base")?, field("n")?, field("k")?, field("count")?);
    let mut angles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let a = line.parse().map_err(|e: crate::error::AngleError| FormatError::Line {
            line: i + 1,
            msg: e.to_string(),
        })?;
        angles.push(a);
    }
    if angles.len() as i64 != count {
        return Err(FormatError::Header(format!(
            "count={count} but {} angles listed",
            angles.len()
        )));
    }
    Ok(AngleList {
        base,
        n: n as u32,
        k: k as u32,
        angles,
    })
}

/// Trace CSV for one angle; the header records family, schedule and angle.
pub fn trace_csv(trace: &RayTrace, header: &[String]) -> String {
    let s = &trace.schedule;
    let mut out = String::new();
    let mut lines = vec![
        format!("family={} theta={}", trace.family, trace.theta),
        format!(
            "t_start={} t_end={} substeps_per_halving={} newton_tol={} newton_max_iters={} depth_threshold={}",
            s.t_start, s.t_end, s.substeps_per_halving, s.newton_tol, s.newton_max_iters, s.depth_threshold
        ),
        format!("status={:?}", trace.status),
    ];
    lines.extend_from_slice(header);
    comment_lines(&mut out, &lines);
    out + &csv_body(
        &TRACE_COLUMNS,
        trace.levels.iter().map(|l| {
            vec![
                num(l.t),
                l.depth.to_string(),
                num(l.c.re),
                num(l.c.im),
                num(l.residual),
                l.iters.to_string(),
            ]
        }),
    )
}

/// Landing table. Rows follow `records`; cluster columns are blank without a
/// clustering. Failed angles are listed as trailing comment lines.
pub fn landing_table(
    records: &[LandingRecord],
    clusters: Option<&ClusterSet>,
    failures: &[(RationalAngle, String)],
    header: &[String],
) -> String {
    let mut out = String::new();
    comment_lines(&mut out, header);
    out += &csv_body(
        &LANDING_COLUMNS,
        records.iter().enumerate().map(|(i, r)| {
            let id = clusters.map(|cs| cs.assignment[i]);
            vec![
                r.theta.to_string(),
                r.family.to_string(),
                r.n.to_string(),
                r.k.to_string(),
                num(r.c_refined.re),
                num(r.c_refined.im),
                r.kind.to_string(),
                num(r.residual),
                num(r.strictness),
                opt(r.cycle_period),
                opt(id),
                opt(id.map(|id| clusters.unwrap().clusters[id].multiplicity())),
            ]
        }),
    );
    for (theta, msg) in failures {
        let _ = writeln!(out, "# failed {theta}: {msg}");
    }
    out
}

/// Reads the records back. The table keeps only the refined position, so it
/// stands in for the ray endpoint as well.
pub fn read_landing_table(text: &str) -> Result<Vec<LandingRecord>, FormatError> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let line = i + 2;
        let bad = |msg: String| FormatError::Line { line, msg };
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.len() != LANDING_COLUMNS.len() {
            return Err(bad(format!("expected {} fields, got {}", LANDING_COLUMNS.len(), row.len())));
        }
        let f = |j: usize| -> Result<f64, FormatError> {
            row[j].parse().map_err(|_| bad(format!("bad number in {}", LANDING_COLUMNS[j])))
        };
        let u = |j: usize| -> Result<u32, FormatError> {
            row[j].parse().map_err(|_| bad(format!("bad integer in {}", LANDING_COLUMNS[j])))
        };
        let theta: RationalAngle = row[0].parse().map_err(|e: crate::error::AngleError| bad(e.to_string()))?;
        let family: Family = row[1].parse().map_err(|_| bad(format!("bad family {:?}", &row[1])))?;
        let kind: LandingKind = row[6].parse().map_err(bad)?;
        let c = Complex64::new(f(4)?, f(5)?);
        out.push(LandingRecord {
            theta,
            family,
            n: u(2)?,
            k: u(3)?,
            c_ray: c,
            c_refined: c,
            kind,
            residual: f(7)?,
            strictness: f(8)?,
            cycle_period: if row[9].is_empty() { None } else { Some(u(9)?) },
        });
    }
    Ok(out)
}

pub fn report_csv(report: &ConvergenceReport, header: &[String]) -> String {
    let mut out = String::new();
    let mut lines = vec![
        format!(
            "family={} kind={:?} moments={} slack={}",
            report.family, report.kind, report.moments, report.slack
        ),
        format!(
            "reference count={} landed={} seed={} mean={} series_mean={}",
            report.reference_count,
            report.reference_landed,
            report.reference_seed,
            report.reference_mean,
            opt(report.series_mean)
        ),
    ];
    lines.extend_from_slice(header);
    comment_lines(&mut out, &lines);
    out + &csv_body(
        &REPORT_COLUMNS,
        report.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.k.to_string(),
                r.cardinality.to_string(),
                opt(r.expected_cardinality),
                r.landed.to_string(),
                num(r.landed_fraction),
                r.refined.to_string(),
                opt(r.clusters),
                num(r.star_discrepancy),
                r.moment_distance.map(num).unwrap_or_default(),
                r.non_monotone.to_string(),
                r.note.clone(),
            ]
        }),
    )
}

/// Pretty JSON of `{ "config": ..., "data": ... }` with a trailing newline.
pub fn json_document<T: serde::Serialize>(config: &serde_json::Value, data: &T) -> String {
    let doc = serde_json::json!({ "config": config, "data": data });
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

const SVG_SIZE: f64 = 800.0;
const SVG_MAX_RADIUS: f64 = 12.0;

/// Scatter of measure atoms, one colour per layer, circle area proportional
/// to weight.
pub fn atoms_svg(layers: &[(&EmpiricalMeasure, &str)], header: &[String]) -> String {
    let pts = layers.iter().flat_map(|(m, _)| m.atoms.iter().map(|a| a.0));
    let (mut lo, mut hi) = (Complex64::new(-2.0, -1.0), Complex64::new(0.5, 1.0));
    for c in pts.filter(|c| c.is_finite()) {
        lo = Complex64::new(lo.re.min(c.re), lo.im.min(c.im));
        hi = Complex64::new(hi.re.max(c.re), hi.im.max(c.im));
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im) * 1.1;
    let mid = (lo + hi) / 2.0;
    let scale = SVG_SIZE / span;
    let wmax = layers
        .iter()
        .flat_map(|(m, _)| m.atoms.iter().map(|a| a.1))
        .fold(0.0, f64::max);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\">\n"
    );
    for h in header {
        let _ = writeln!(out, "<!-- {} -->", h.replace("--", "- -"));
    }
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for (m, colour) in layers {
        let _ = writeln!(out, "<g fill=\"{colour}\" fill-opacity=\"0.6\">");
        for &(c, w) in &m.atoms {
            if !c.is_finite() || w <= 0.0 {
                continue;
            }
            let x = SVG_SIZE / 2.0 + (c.re - mid.re) * scale;
            let y = SVG_SIZE / 2.0 - (c.im - mid.im) * scale;
            let r = SVG_MAX_RADIUS * (w / wmax).sqrt();
            let _ = writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{:.3}\"/>", r.max(0.5));
        }
        let _ = writeln!(out, "</g>");
    }
    out + "</svg>\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle_arith::enum_misiurewicz_tricorn;
    use crate::landing::{cluster, Refinement};
    use crate::rays::{trace_ray, RaySchedule};

    fn record(theta: &str, c: Complex64, kind: LandingKind, period: Option<u32>) -> LandingRecord {
        LandingRecord::new(
            theta.parse().unwrap(),
            Family::Mandelbrot,
            (4, 2),
            c + 1e-9,
            Refinement {
                c,
                kind,
                residual: 3.5e-15,
                strictness: f64::NAN,
                cycle_period: period,
            },
        )
    }

    #[test]
    fn angle_list_round_trip() {
        let list = AngleList {
            base: -2,
            n: 3,
            k: 2,
            angles: enum_misiurewicz_tricorn(3, 2).unwrap(),
        };
        let text = angle_list(&list, &["command=enumerate".into()]);
        assert!(text.starts_with("# base=-2 n=3 k=2 count=3\n# command=enumerate\n"));
        assert_eq!(read_angle_list(&text).unwrap(), list);
        let broken = text.replace("count=3", "count=4");
        assert!(read_angle_list(&broken).is_err());
        assert!(read_angle_list("1/2\n").is_err());
    }

    #[test]
    fn landing_table_round_trip() {
        let recs = vec![
            record("1/6", Complex64::new(-0.1, 0.3), LandingKind::Misiurewicz { n: 4, k: 2 }, Some(2)),
            record("5/6", Complex64::new(0.1 / 3.0, -1.0 / 7.0), LandingKind::Parabolic { q: 3 }, None),
            record("1/2", Complex64::new(-2.0, 0.0), LandingKind::Unrefined, Some(1)),
        ];
        let cs = cluster(&recs, 1e-6).unwrap();
        let text = landing_table(&recs, Some(&cs), &[("1/3".parse().unwrap(), "stalled".into())], &[]);
        assert!(text.starts_with("theta,family,n,k,re(c),im(c),kind,residual,strictness,cycle_period,cluster_id,multiplicity\n"));
        assert!(text.contains("\"misiurewicz(4,2)\""));
        assert!(text.ends_with("# failed 1/3: stalled\n"));
        let back = read_landing_table(&text).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.theta, b.theta);
            assert_eq!(a.c_refined, b.c_refined);
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.cycle_period, b.cycle_period);
            assert_eq!(a.residual, b.residual);
            assert!(b.strictness.is_nan());
        }
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let tr = trace_ray(Family::Mandelbrot, &"1/2".parse().unwrap(), &RaySchedule::default()).unwrap();
        let text = trace_csv(&tr, &[]);
        let first = text.lines().next().unwrap();
        assert_eq!(first, "# family=mandelbrot theta=1/2");
        assert!(text.contains("\nt,depth,re(c),im(c),residual,iters\n"));
        let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(rows, tr.levels.len());
        assert_eq!(text, trace_csv(&tr, &[]));
    }

    #[test]
    fn svg_draws_one_circle_per_atom() {
        let mu = EmpiricalMeasure::from_atoms(vec![(Complex64::new(0.25, 0.0), 1.0 / 3.0), (Complex64::new(-0.75, 0.0), 2.0 / 3.0)]);
        let svg = atoms_svg(&[(&mu, "black")], &["n=2".into()]);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("<!-- n=2 -->"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
