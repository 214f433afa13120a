use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use iet_flips::denjoy::{self, DenjoyParams};
use iet_flips::io::{self, LoadedIet};
use iet_flips::numfield::MAX_DIGITS;
use iet_flips::scalar::parse_rational;
use iet_flips::selfsim::{associated_matrix, self_similarity_check};
use iet_flips::{rauzy, reference, search, AlgebraicNumber, Direction, Iet, IntMatrix, PiecewiseMap, Scalar};

const TABLE1: &str = include_str!("../golden/table1.csv");
const TABLE2: &str = include_str!("../golden/table2.csv");

#[derive(Parser)]
#[command(
    name = "iet",
    version,
    about = "Interval exchanges with flips: induction, self-similarity, blow-ups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rauzy cycle, return itineraries and self-similarity of the reference IET.
    ReproduceLemma1 {
        /// Directory holding table1.csv and table2.csv (defaults to the built-in copies).
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Affine IET with wandering intervals blown up from the reference IET.
    ReproduceTheoremA {
        #[arg(long, default_value_t = 5000)]
        gaps: usize,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Bounded search of the Rauzy graph on n letters.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 14)]
        max_len: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also allow permutations without flips.
        #[arg(long)]
        no_flips: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rauzy steps of an IET, with cycle detection.
    Induct {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 14)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Orbit of a rational point.
    Orbit {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        inverse: bool,
        #[arg(long, default_value_t = 12)]
        digits: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Characteristic polynomial, factors, real spectrum and screen of a matrix.
    Spectral {
        /// JSON array of integer rows (defaults to the reference matrix).
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        digits: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Image of one rational point.
    Eval {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        x: String,
        #[arg(long)]
        inverse: bool,
        #[arg(long, default_value_t = 12)]
        digits: usize,
    },
}

enum Failure {
    Mismatch(String),
    Usage(String),
    Construction(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Mismatch(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Construction(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Mismatch(m) | Failure::Usage(m) | Failure::Construction(m) => m,
        }
    }
}

fn build<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Construction(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::ReproduceLemma1 { golden, out } => lemma1(golden.as_deref(), out.as_deref()),
        Cmd::ReproduceTheoremA {
            gaps,
            out,
            steps,
            seeds,
            seed,
        } => theorem_a(gaps, out.as_deref(), steps, seeds, seed),
        Cmd::Search {
            n,
            max_len,
            jobs,
            no_flips,
            out,
        } => search_cmd(n, max_len, jobs, !no_flips, out.as_deref()),
        Cmd::Induct { spec, steps, out } => induct(spec.as_deref(), steps, out.as_deref()),
        Cmd::Orbit {
            spec,
            x,
            steps,
            inverse,
            digits,
            out,
        } => orbit(spec.as_deref(), &x, steps, inverse, digits, out.as_deref()),
        Cmd::Spectral { matrix, digits, out } => spectral(matrix.as_deref(), digits, out.as_deref()),
        Cmd::Eval {
            spec,
            x,
            inverse,
            digits,
        } => eval(spec.as_deref(), &x, inverse, digits),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn emit_in(dir: Option<&Path>, name: &str, text: &str) -> Result<(), Failure> {
    if let Some(d) = dir {
        fs::create_dir_all(d).map_err(|e| Failure::Usage(format!("{}: {e}", d.display())))?;
        let p = d.join(name);
        fs::write(&p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("plain data")
}

fn check_digits(digits: usize) -> Result<(), Failure> {
    if digits == 0 || digits > MAX_DIGITS {
        return Err(Failure::Usage(format!("--digits must be in 1..={MAX_DIGITS}")));
    }
    Ok(())
}

fn load(spec: Option<&Path>) -> Result<LoadedIet, Failure> {
    match spec {
        None => Ok(LoadedIet::Exact(reference::exact())),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            io::iet_from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn first_difference(label: &str, got: &str, want: &str) -> Option<String> {
    if got == want {
        return None;
    }
    let (g, w): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    let line = (0..g.len().max(w.len())).find(|&i| g.get(i) != w.get(i)).unwrap_or(0);
    Some(format!(
        "{label} line {}: computed {:?}, expected {:?}",
        line + 1,
        g.get(line).unwrap_or(&""),
        w.get(line).unwrap_or(&"")
    ))
}

fn lemma1(golden: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let (want1, want2) = match golden {
        None => (TABLE1.to_string(), TABLE2.to_string()),
        Some(d) => {
            let read = |n: &str| {
                fs::read_to_string(d.join(n)).map_err(|e| Failure::Usage(format!("{}: {e}", d.join(n).display())))
            };
            (read("table1.csv")?, read("table2.csv")?)
        }
    };
    let e = reference::exact();
    let a = reference::matrix();
    let steps = rauzy::rauzy_run(&e, 15).map_err(build)?;
    let table1 = rauzy::run_to_csv(&steps);
    let cycle = rauzy::rauzy_cycle_detect(&e, 14).map_err(build)?;
    let theta1 = reference::spectral().theta1.clone();
    let zero = AlgebraicNumber::from_int(0);
    let d = AlgebraicNumber::from_int(1) / theta1.clone();
    let (assoc, its) = associated_matrix(&e, &zero, &d).map_err(build)?;
    let table2 = its.to_csv();
    let selfsim = self_similarity_check(&e, &zero, &d).map_err(build)?;

    let mut mismatches = Vec::new();
    mismatches.extend(first_difference("table 1", &table1, &want1));
    mismatches.extend(first_difference("table 2", &table2, &want2));
    let cycle_ok = match &cycle {
        Some(c) => c.len() == 14 && c.product == a && c.scale == theta1,
        None => false,
    };
    if !cycle_ok {
        mismatches.push("Rauzy cycle product is not the reference matrix".into());
    }
    if assoc != a {
        mismatches.push("associated matrix is not the reference matrix".into());
    }
    if let Err(m) = &selfsim {
        mismatches.push(format!("self-similarity: {m}"));
    }
    let report = json!({
        "config": {"command": "reproduce-lemma1", "golden": golden.map(|p| p.display().to_string())},
        "matrix": a.rows(),
        "cycle_product": cycle.as_ref().map(|c| c.product.rows()),
        "cycle_length": cycle.as_ref().map(|c| c.len()),
        "scale": cycle.as_ref().map(|c| c.scale.to_string()),
        "associated_matrix": assoc.rows(),
        "self_similar": selfsim.is_ok(),
        "table1_matches": first_difference("", &table1, &want1).is_none(),
        "table2_matches": first_difference("", &table2, &want2).is_none(),
        "mismatches": mismatches,
    });
    emit_in(out, "table1.csv", &table1)?;
    emit_in(out, "table2.csv", &table2)?;
    emit_in(out, "lemma1.json", &pretty(&report))?;
    if out.is_none() {
        emit(None, &pretty(&report))?;
    }
    match mismatches.into_iter().next() {
        None => Ok(()),
        Some(m) => Err(Failure::Mismatch(m)),
    }
}

fn theorem_a(gaps: usize, out: Option<&Path>, steps: usize, seeds: usize, seed: u64) -> Result<(), Failure> {
    if gaps == 0 || seeds == 0 {
        return Err(Failure::Usage("--gaps and --seeds must be positive".into()));
    }
    if steps < 10_000 {
        return Err(Failure::Usage("--steps must be at least 10000".into()));
    }
    let spectral = io::spectral_report(&reference::matrix(), 12).map_err(build)?;
    let params = DenjoyParams {
        gaps,
        seed,
        ..DenjoyParams::default()
    };
    let e = reference::exact();
    let b = denjoy::denjoy_build(&e, &reference::matrix(), &reference::substitution(), &params).map_err(build)?;
    let ef = reference::float();
    let probe = denjoy::ergodic_probe(&ef, &denjoy::random_seeds(&ef, seeds, seed), steps, seed).map_err(build)?;
    let occupancy = b.aiet.aiet.as_ref().map(|t| {
        let y0 = t.breakpoints()[0] + 0.5 * (t.breakpoints()[t.pieces()] - t.breakpoints()[0]);
        let (time, mass) = denjoy::gap_occupancy(t, &b.gaps, 10, y0, 100_000);
        json!({"largest_gaps": 10, "time_fraction": time, "gap_mass": mass})
    });
    let cert = &b.certificate;
    let inconclusive = gaps < 100;
    let probe_ok = probe.max_deviation() <= 5e-3;
    let density = if inconclusive {
        "inconclusive"
    } else if cert.dense && cert.two_sided_density {
        "pass"
    } else {
        "fail"
    };
    let report = json!({
        "config": {"command": "reproduce-theorem-a", "params": params, "probe_steps": steps, "probe_seeds": seeds},
        "spectral": spectral,
        "log_slopes": {
            "w": b.log_slopes.w,
            "sign": b.log_slopes.sign,
            "theta2": b.log_slopes.theta2.to_decimal(12).map_err(build)?,
            "eigen_identity": b.log_slopes.eigen_identity,
            "orthogonal_to_lengths": b.log_slopes.orthogonal,
        },
        "blowup": b.blowup,
        "aiet": {
            "breakpoints": b.aiet.aiet.as_ref().map(|t| t.breakpoints().to_vec()),
            "anchors": b.aiet.aiet.as_ref().map(|t| t.anchors().to_vec()),
            "slopes": b.aiet.slopes,
            "flips": b.aiet.flips,
            "truncation_tail": b.aiet.truncation_tail,
            "excluded_gaps": [b.aiet.boundary.0, b.aiet.boundary.1],
        },
        "certificate": cert,
        "density_status": density,
        "ergodic_probe": probe,
        "probe_tolerance": 5e-3,
        "gap_occupancy": occupancy,
        "passed": cert.passed() && probe_ok && !inconclusive,
    });
    emit_in(out, "certificate.json", &pretty(&report))?;
    emit_in(out, "gaps.csv", &b.gaps.to_csv())?;
    if out.is_none() {
        emit(None, &pretty(&report))?;
    }
    if inconclusive {
        return Err(Failure::Mismatch(format!("{gaps} gaps are too few to certify density")));
    }
    if !cert.passed() {
        return Err(Failure::Mismatch("wandering certificate failed".into()));
    }
    if !probe_ok {
        return Err(Failure::Mismatch(format!(
            "ergodic probe deviates by {}",
            probe.max_deviation()
        )));
    }
    Ok(())
}

fn search_cmd(n: usize, max_len: usize, jobs: usize, flips: bool, out: Option<&Path>) -> Result<(), Failure> {
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be positive".into()));
    }
    let g = search::rauzy_graph_build(n, flips).map_err(|e| Failure::Usage(e.to_string()))?;
    let r = search::cycle_search(&g, max_len, jobs, true).map_err(|e| match e {
        search::SearchError::TooLong(_) => Failure::Usage(e.to_string()),
        _ => build(e),
    })?;
    let mut report = serde_json::to_value(&r).expect("plain data");
    report["config"] = json!({"command": "search", "n": n, "require_flips": flips, "max_len": max_len, "jobs": jobs});
    emit(out, &pretty(&report))
}

fn induct(spec: Option<&Path>, steps: usize, out: Option<&Path>) -> Result<(), Failure> {
    let body = match load(spec)? {
        LoadedIet::Exact(e) => induct_report(&e, steps)?,
        LoadedIet::Rational(e) => induct_report(&e, steps)?,
    };
    let report = json!({
        "config": {"command": "induct", "spec": spec.map(|p| p.display().to_string()), "steps": steps},
        "induction": body,
    });
    emit(out, &pretty(&report))
}

fn induct_report<S: Scalar + std::fmt::Display>(e: &Iet<S>, steps: usize) -> Result<Value, Failure> {
    let (run, stop) = match rauzy::rauzy_run(e, steps) {
        Ok(r) => (r, None),
        Err(rauzy::RauzyError::DegenerateStep(k)) => (rauzy::rauzy_run(e, k).map_err(build)?, Some(k)),
        Err(err) => return Err(build(err)),
    };
    let cycle = match rauzy::rauzy_cycle_detect(e, steps) {
        Ok(c) => c,
        Err(rauzy::RauzyError::DegenerateStep(_)) => None,
        Err(err) => return Err(build(err)),
    };
    Ok(json!({
        "table": rauzy::run_to_csv(&run),
        "degenerate_at": stop,
        "cycle": cycle.map(|c| json!({"length": c.len(), "types": c.types(), "product": c.product.rows(), "scale": c.scale.to_string()})),
    }))
}

fn point(x: &str) -> Result<num_rational::BigRational, Failure> {
    parse_rational(x).ok_or_else(|| Failure::Usage(format!("--x must be p/q, got {x:?}")))
}

fn render_exact(a: &AlgebraicNumber, digits: usize) -> Result<String, Failure> {
    match a.as_rational() {
        Some(r) => Ok(r.to_string()),
        None => a.to_decimal(digits).map_err(build),
    }
}

fn orbit(
    spec: Option<&Path>,
    x: &str,
    steps: usize,
    inverse: bool,
    digits: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    check_digits(digits)?;
    let x0 = point(x)?;
    let dir = if inverse {
        Direction::Inverse
    } else {
        Direction::Forward
    };
    let (points, word, stop) = match load(spec)? {
        LoadedIet::Exact(e) => {
            let seg = iet_flips::iet::iet_orbit(&e, &AlgebraicNumber::from_rational(x0), steps, dir);
            let pts = seg
                .points
                .iter()
                .map(|p| render_exact(p, digits))
                .collect::<Result<Vec<_>, _>>()?;
            (pts, seg.word, seg.terminated_at_discontinuity)
        }
        LoadedIet::Rational(e) => {
            let seg = iet_flips::iet::iet_orbit(&e, &x0, steps, dir);
            (
                seg.points.iter().map(ToString::to_string).collect(),
                seg.word,
                seg.terminated_at_discontinuity,
            )
        }
    };
    let report = json!({
        "config": {"command": "orbit", "spec": spec.map(|p| p.display().to_string()), "x": x, "steps": steps, "inverse": inverse, "digits": digits},
        "points": points,
        "word": word,
        "stopped_at_discontinuity": stop,
    });
    emit(out, &pretty(&report))
}

fn spectral(matrix: Option<&Path>, digits: usize, out: Option<&Path>) -> Result<(), Failure> {
    check_digits(digits)?;
    let m = match matrix {
        None => reference::matrix(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            let rows: Vec<Vec<i64>> =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            IntMatrix::new(rows).map_err(|e| Failure::Usage(e.to_string()))?
        }
    };
    let r = io::spectral_report(&m, digits).map_err(build)?;
    let report = json!({
        "config": {"command": "spectral", "matrix": matrix.map(|p| p.display().to_string()), "digits": digits},
        "spectral": r,
    });
    emit(out, &pretty(&report))
}

fn eval(spec: Option<&Path>, x: &str, inverse: bool, digits: usize) -> Result<(), Failure> {
    check_digits(digits)?;
    let x0 = point(x)?;
    let dir = if inverse {
        Direction::Inverse
    } else {
        Direction::Forward
    };
    let image = match load(spec)? {
        LoadedIet::Exact(e) => {
            let y = e.eval(&AlgebraicNumber::from_rational(x0), dir).map_err(build)?;
            render_exact(&y, digits)?
        }
        LoadedIet::Rational(e) => e.eval(&x0, dir).map_err(build)?.to_string(),
    };
    let report = json!({
        "config": {"command": "eval", "spec": spec.map(|p| p.display().to_string()), "x": x, "inverse": inverse, "digits": digits},
        "image": image,
    });
    emit(None, &pretty(&report))
}
