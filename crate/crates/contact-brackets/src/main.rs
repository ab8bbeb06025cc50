//! CLI front end. Exit codes: 0 success, 1 verification failure,
//! 2 usage/config error, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use contact_brackets::chart::{Chart, ChartPoint};
use contact_brackets::config::{LoadedSpec, Model};
use contact_brackets::error::{Error, Result};
use contact_brackets::expr::Expression;
use contact_brackets::extended::{
    darboux_inverse, darboux_point, integrate_flow, tilde_point, Method,
};
use contact_brackets::report::csv_table;
use contact_brackets::sample::SplitMix64;
use contact_brackets::variational::{omega_basis_table, solve_bvp};
use contact_brackets::verify::{run_suite, Suite, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "contact-brackets",
    about = "Contact geometry of mechanical systems: flows, Jacobi brackets, \
             variational solvers and verification suites",
    version
)]
struct Cli {
    /// System spec file (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Seed for every randomized sample in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Tolerance override for on-section constraint checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Euler,
    Rk4,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the dynamics of a spec from an initial point.
    Simulate {
        /// Flow span LO:HI.
        #[arg(long)]
        span: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
        method: MethodArg,
        /// Initial coordinates, e.g. "q=0,p=1". Unset coordinates are 0;
        /// the base coordinate comes from the span.
        #[arg(long)]
        init: Option<String>,
    },
    /// Evaluate the Jacobi bracket [f, g] at seeded or explicit points.
    Bracket {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        /// Number of seeded sample points when none are given explicitly.
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Explicit points, e.g. --point "q=0,p=2,s=0" (repeatable).
        #[arg(long)]
        point: Vec<String>,
        /// Section VAR=LEVEL (VAR must be the last chart coordinate):
        /// samples on the section and adds the canonical-bracket column.
        #[arg(long)]
        section: Option<String>,
    },
    /// Run a verification suite and write its JSON report.
    Verify {
        /// contact | poisson-subalgebra | omega | poincare | darboux |
        /// schwinger-weiss | all
        #[arg(long)]
        suite: String,
        /// Extra probe points for the contact suite (repeatable).
        #[arg(long)]
        probe: Vec<String>,
    },
    /// Solve the two-point boundary value problem of a spec.
    SolveBvp {
        #[arg(long)]
        span: String,
        /// Number of grid intervals.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Initial position components, comma separated.
        #[arg(long)]
        q0: String,
        /// Final position components, comma separated.
        #[arg(long)]
        q1: String,
    },
    /// Transform points to free-particle Darboux coordinates (and back).
    Darboux {
        #[arg(long)]
        point: Vec<String>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Map (Q, P, W) points back to (q, p, s).
        #[arg(long)]
        inverse: bool,
        /// Also emit the shifted coordinates (Q̃, P̃, W̃).
        #[arg(long)]
        tilde: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(tol) = cli.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::Config(format!("--tol must be positive, got {tol}")));
        }
    }
    match &cli.command {
        Command::Simulate {
            span,
            dt,
            method,
            init,
        } => cmd_simulate(cli, span, *dt, *method, init.as_deref()),
        Command::Bracket {
            f,
            g,
            count,
            point,
            section,
        } => cmd_bracket(cli, f, g, *count, point, section.as_deref()),
        Command::Verify { suite, probe } => cmd_verify(cli, suite, probe),
        Command::SolveBvp { span, n, q0, q1 } => cmd_solve_bvp(cli, span, *n, q0, q1),
        Command::Darboux {
            point,
            count,
            inverse,
            tilde,
        } => cmd_darboux(cli, point, *count, *inverse, *tilde),
    }
}

fn load_spec(cli: &Cli) -> Result<LoadedSpec> {
    let path = cli
        .spec
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --spec".to_string()))?;
    LoadedSpec::load(path)
}

fn parse_span(text: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("span must be LO:HI, got `{text}`")))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad span bound `{lo}`")))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad span bound `{hi}`")))?;
    Ok((lo, hi))
}

fn parse_assignment(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected name=value, got `{part}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad value in `{part}`")))?;
        out.push((name.trim().to_string(), value));
    }
    Ok(out)
}

fn assignment_to_point(chart: &Arc<Chart>, assignment: &[(String, f64)]) -> Result<ChartPoint> {
    let mut values = vec![0.0; chart.dim()];
    for (name, value) in assignment {
        let i = chart
            .index_of(name)
            .ok_or_else(|| Error::UnknownCoordinate {
                name: name.clone(),
                chart: chart.id().to_string(),
            })?;
        values[i] = *value;
    }
    ChartPoint::new(chart, values)
}

fn parse_components(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{c}`")))
        })
        .collect()
}

fn write_output(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn point_json(p: &ChartPoint) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (name, value) in p.chart().coords().iter().zip(p.values()) {
        map.insert(name.clone(), json!(value));
    }
    serde_json::Value::Object(map)
}

// ---------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------

fn cmd_simulate(
    cli: &Cli,
    span: &str,
    dt: f64,
    method: MethodArg,
    init: Option<&str>,
) -> Result<ExitCode> {
    let loaded = load_spec(cli)?;
    let span = parse_span(span)?;
    let chart = loaded.chart().clone();
    let assignment = init.map(parse_assignment).transpose()?.unwrap_or_default();
    let mut start = assignment_to_point(&chart, &assignment)?;
    if let Some(base) = chart.base_index() {
        start = start.with_value(base, span.0)?;
    }
    let method = match method {
        MethodArg::Euler => Method::Euler,
        MethodArg::Rk4 => Method::Rk4,
    };

    let (field, exclude) = match &loaded.model {
        Model::NonRelativistic(s) => (s.dynamics_field(), s.exclude().cloned()),
        Model::Relativistic(s) => (s.landau_field(), None),
    };
    let trajectory = integrate_flow(&field, &start, span, dt, method, exclude.as_ref())?;

    let mut header: Vec<&str> = vec!["s"];
    let coord_names: Vec<String> = chart.coords().to_vec();
    header.extend(coord_names.iter().map(|s| s.as_str()));
    let extra: Vec<&str> = match &loaded.model {
        Model::NonRelativistic(_) => vec!["H"],
        Model::Relativistic(_) => vec!["p0", "T", "Q1", "Q2", "Q3"],
    };
    header.extend(&extra);

    let mut rows = Vec::with_capacity(trajectory.samples().len());
    for (t, point) in trajectory.samples() {
        let mut row = vec![*t];
        row.extend_from_slice(point.values());
        match &loaded.model {
            Model::NonRelativistic(s) => row.push(s.hamiltonian().evaluate(point)?),
            Model::Relativistic(s) => {
                let nw = s.newton_wigner(point)?;
                row.push(s.p0(point)?);
                row.push(nw.t);
                row.extend_from_slice(&nw.q);
            }
        }
        rows.push(row);
    }

    let text = match cli.format {
        Format::Csv => csv_table(&header, &rows),
        Format::Json => {
            let mut out = serde_json::to_string_pretty(&json!({
                "header": header,
                "rows": rows,
            }))?;
            out.push('\n');
            out
        }
    };
    write_output(cli, &text)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// bracket
// ---------------------------------------------------------------------

fn cmd_bracket(
    cli: &Cli,
    f_text: &str,
    g_text: &str,
    count: usize,
    explicit: &[String],
    section: Option<&str>,
) -> Result<ExitCode> {
    let loaded = load_spec(cli)?;
    let chart = loaded.chart().clone();
    let f = Expression::parse(f_text, &chart)?;
    let g = Expression::parse(g_text, &chart)?;
    let mut rng = SplitMix64::new(cli.seed);
    let contact = loaded.contact(&mut rng)?;

    let section = section
        .map(
            |text| -> Result<(usize, f64, Arc<Chart>, Expression, Expression)> {
                let assignment = parse_assignment(text)?;
                if assignment.len() != 1 {
                    return Err(Error::Config(
                        "--section takes a single VAR=LEVEL".to_string(),
                    ));
                }
                let (name, level) = &assignment[0];
                let index = chart
                    .index_of(name)
                    .ok_or_else(|| Error::UnknownCoordinate {
                        name: name.clone(),
                        chart: chart.id().to_string(),
                    })?;
                if index != chart.dim() - 1 {
                    return Err(Error::Config(format!(
                        "--section variable must be the final chart coordinate `{}`",
                        chart.coord_name(chart.dim() - 1)
                    )));
                }
                // Section coordinates: the first 2n chart names.
                let names: Vec<&str> = chart.coords()[..chart.dim() - 1]
                    .iter()
                    .map(|s| s.as_str())
                    .collect();
                let section_chart = Chart::new(&format!("{}-section", chart.id()), &names);
                let f2 = Expression::parse(f_text, &section_chart)?;
                let g2 = Expression::parse(g_text, &section_chart)?;
                Ok((index, *level, section_chart, f2, g2))
            },
        )
        .transpose()?;

    let mut points = Vec::new();
    for text in explicit {
        points.push(assignment_to_point(&chart, &parse_assignment(text)?)?);
    }
    if points.is_empty() {
        points = loaded.sample(count, &mut rng)?;
    }
    if let Some((index, level, _, _, _)) = &section {
        points = points
            .into_iter()
            .map(|p| p.with_value(*index, *level))
            .collect::<Result<_>>()?;
    }

    let mut records = Vec::new();
    for p in &points {
        let jacobi = contact.jacobi_bracket(&f, &g, p)?;
        let mut record = serde_json::Map::new();
        record.insert("point".to_string(), point_json(p));
        record.insert("jacobi".to_string(), json!(jacobi));
        if let Some((_, _, section_chart, f2, g2)) = &section {
            let n = (chart.dim() - 1) / 2;
            let at = ChartPoint::new(section_chart, p.values()[..chart.dim() - 1].to_vec())?;
            // Canonical bracket on the section: Σ_a f_{P_a} g_{Q_a} − f_{Q_a} g_{P_a}.
            let mut value = 0.0;
            for a in 0..n {
                value += f2.differentiate_index(n + a).evaluate(&at)?
                    * g2.differentiate_index(a).evaluate(&at)?
                    - f2.differentiate_index(a).evaluate(&at)?
                        * g2.differentiate_index(n + a).evaluate(&at)?;
            }
            record.insert("section".to_string(), json!(value));
        }
        records.push(serde_json::Value::Object(record));
    }

    let payload = json!({
        "f": f_text,
        "g": g_text,
        "seed": cli.seed,
        "values": records,
    });
    let mut text = serde_json::to_string_pretty(&payload)?;
    text.push('\n');
    write_output(cli, &text)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------

fn cmd_verify(cli: &Cli, suite: &str, probes: &[String]) -> Result<ExitCode> {
    let suite = Suite::parse(suite)?;
    let mut options = VerifyOptions::default();
    if let Some(path) = &cli.spec {
        options.spec = Some(LoadedSpec::load(path)?);
    }
    for probe in probes {
        options.probes.push(parse_assignment(probe)?);
    }
    let report = run_suite(suite, cli.seed, &options)?;
    write_output(cli, &report.to_json())?;
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

// ---------------------------------------------------------------------
// solve-bvp
// ---------------------------------------------------------------------

fn cmd_solve_bvp(cli: &Cli, span: &str, n: usize, q0: &str, q1: &str) -> Result<ExitCode> {
    let loaded = load_spec(cli)?;
    let spec = match &loaded.model {
        Model::NonRelativistic(s) => s,
        Model::Relativistic(_) => {
            return Err(Error::Config(
                "solve-bvp runs on nonrelativistic specs".to_string(),
            ))
        }
    };
    let span = parse_span(span)?;
    let q0 = parse_components(q0)?;
    let q1 = parse_components(q1)?;
    if n < 2 {
        return Err(Error::Config(format!(
            "--n must be at least 2 grid intervals, got {n}"
        )));
    }
    let section = solve_bvp(spec, &q0, &q1, span, n)?;
    let table = omega_basis_table(&section, spec)?;

    let mut header: Vec<&str> = vec!["s"];
    let names: Vec<String> = spec.chart().coords()[..2 * spec.n()].to_vec();
    header.extend(names.iter().map(|s| s.as_str()));
    let mut rows = Vec::new();
    for (k, sk) in section.grid().iter().enumerate() {
        let mut row = vec![*sk];
        row.extend_from_slice(&section.u()[k]);
        row.extend_from_slice(&section.p()[k]);
        rows.push(row);
    }

    let omega_json = json!({
        "max_node_spread": table.max_spread,
        "per_node": table
            .per_node
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>(),
    });

    match cli.format {
        Format::Json => {
            let payload = json!({
                "header": header,
                "solution": rows,
                "omega": omega_json,
            });
            let mut text = serde_json::to_string_pretty(&payload)?;
            text.push('\n');
            write_output(cli, &text)?;
        }
        Format::Csv => {
            let out = cli.out.as_ref().ok_or_else(|| {
                Error::Config(
                    "solve-bvp with --format csv needs --out (the Ω table is written to \
                     OUT.omega.json)"
                        .to_string(),
                )
            })?;
            std::fs::write(out, csv_table(&header, &rows))?;
            let mut omega_text = serde_json::to_string_pretty(&omega_json)?;
            omega_text.push('\n');
            let mut omega_path = out.as_os_str().to_owned();
            omega_path.push(".omega.json");
            std::fs::write(PathBuf::from(omega_path), omega_text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// darboux
// ---------------------------------------------------------------------

fn cmd_darboux(
    cli: &Cli,
    explicit: &[String],
    count: usize,
    inverse: bool,
    tilde: bool,
) -> Result<ExitCode> {
    let source = if inverse {
        contact_brackets::extended::darboux_chart()
    } else {
        contact_brackets::extended::nonrel_chart(1)
    };
    let mut points = Vec::new();
    for text in explicit {
        points.push(assignment_to_point(&source, &parse_assignment(text)?)?);
    }
    if points.is_empty() {
        // Stay away from p = 0 (or P = 0), where the transform degenerates.
        let momentum = if inverse { "P" } else { "p" };
        let sb = contact_brackets::sample::SampleBox::from_named(
            &source,
            &[(momentum, (0.5, 2.0))],
            (-2.0, 2.0),
        )?;
        let mut rng = SplitMix64::new(cli.seed);
        points = contact_brackets::sample::sample_points(&sb, None, count, &mut rng)?;
    }

    let mut header: Vec<&str> = source.coords().iter().map(|s| s.as_str()).collect();
    let target_names: Vec<&str> = if inverse {
        vec!["q", "p", "s"]
    } else if tilde {
        vec!["Q", "P", "W", "Qt", "Pt", "Wt"]
    } else {
        vec!["Q", "P", "W"]
    };
    header.extend(&target_names);

    let mut rows = Vec::new();
    for p in &points {
        let mut row = p.values().to_vec();
        if inverse {
            row.extend_from_slice(darboux_inverse(p)?.values());
        } else {
            let d = darboux_point(p)?;
            row.extend_from_slice(d.values());
            if tilde {
                row.extend_from_slice(tilde_point(&d)?.values());
            }
        }
        rows.push(row);
    }

    let text = match cli.format {
        Format::Csv => csv_table(&header, &rows),
        Format::Json => {
            let mut out = serde_json::to_string_pretty(&json!({
                "header": header,
                "rows": rows,
            }))?;
            out.push('\n');
            out
        }
    };
    write_output(cli, &text)?;
    Ok(ExitCode::SUCCESS)
}
