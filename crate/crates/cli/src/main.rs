//! `heisenlab`: group arithmetic, automorphism tools, lemma verification
//! suites and leaf-conjugacy construction from scenario files.
//!
//! Exit codes: 0 all pass, 1 check failure (reports are still written),
//! 2 malformed input or scenario gate failure.

use clap::{Args, Parser, Subcommand};
use heisenlab_core::auto::{
    conjugate_to_diagonal, from_derivative, is_partially_hyperbolic, GMatrix,
};
use heisenlab_core::conjugacy::{build_leaf_conjugacy, semiconjugacy, verify_leaf_conjugacy};
use heisenlab_core::dynamics::{run_suite, CheckOutcome};
use heisenlab_core::heis::{exp_h, log_h, FrameVector, HPoint, Lattice};
use heisenlab_core::report::{csv_map_row, Report, CSV_MAP_HEADER};
use heisenlab_core::scenario::Scenario;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "heisenlab", version, about = "Heisenberg nilmanifold dynamics laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Heisenberg group arithmetic on points.
    Group {
        #[command(subcommand)]
        op: GroupOp,
    },
    /// Automorphism-matrix tools.
    Auto {
        #[command(subcommand)]
        op: AutoOp,
    },
    /// Run verification checks against a scenario.
    Verify(VerifyArgs),
    /// Semiconjugacy and leaf-conjugacy construction.
    Conjugacy {
        #[command(subcommand)]
        op: ConjugacyOp,
    },
}

#[derive(Subcommand)]
enum GroupOp {
    /// Group product a·b.
    Mul {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Group inverse.
    Inv {
        #[arg(long)]
        a: String,
    },
    /// Reduce into the fundamental domain of Γ_k.
    Reduce {
        #[arg(long)]
        p: String,
        #[arg(long)]
        k: u32,
    },
    /// Exponential of a frame vector.
    Exp {
        #[arg(long)]
        w: String,
    },
    /// Logarithm of a point.
    Log {
        #[arg(long)]
        p: String,
    },
}

#[derive(Subcommand)]
enum AutoOp {
    /// Partial-hyperbolicity test of a matrix in G.
    CheckPh(MatrixArgs),
    /// The automorphism generated by a derivative at the identity.
    FromDerivative(MatrixArgs),
    /// Diagonal normal form P T P⁻¹ = D.
    Normalize(MatrixArgs),
    /// Recover the algebraic part of a scenario's lift.
    AlgebraicPart {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
}

#[derive(Args)]
struct MatrixArgs {
    /// 2x2 block as JSON, e.g. [[2,1],[1,1]].
    #[arg(long = "A")]
    a: String,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Base sample count of the sweeps.
    #[arg(long)]
    samples: Option<usize>,
    /// Splitting horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Splitting invariance-residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated subset of checks (default: all).
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Include per-check wall-clock timings (non-canonical output).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum ConjugacyOp {
    /// Build the semiconjugacy H and report its certificate.
    Semiconj {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        truncation: usize,
        /// Sample H on an n×n×1 grid and write it as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the leaf conjugacy h and run its verification.
    Leafconj {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        truncation: usize,
        #[arg(long, default_value_t = 20)]
        leaves: usize,
        #[arg(long, default_value_t = 5)]
        points: usize,
        /// Sample h on a grid and write it as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Same-center-leaf query for a pair of points.
    CenterTest {
        /// Scenario file; omitted means the built-in unperturbed example.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Lattice index of the built-in example (used without --scenario).
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 25)]
        truncation: usize,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Number formatting for small stdout answers: integers print bare.
fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn fmt_point(p: &HPoint) -> String {
    format!("[{},{},{}]", fmt_num(p.x), fmt_num(p.y), fmt_num(p.z))
}

fn parse_point(s: &str) -> anyhow::Result<HPoint> {
    Ok(serde_json::from_str(s)?)
}

fn parse_block(s: &str) -> anyhow::Result<[[f64; 2]; 2]> {
    Ok(serde_json::from_str(s)?)
}

fn load_scenario(path: &PathBuf) -> anyhow::Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Ok(Scenario::from_json(&text)?)
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Group { op } => run_group(op),
        Command::Auto { op } => run_auto(op),
        Command::Verify(args) => run_verify(args),
        Command::Conjugacy { op } => run_conjugacy(op),
    }
}

fn run_group(op: GroupOp) -> anyhow::Result<ExitCode> {
    match op {
        GroupOp::Mul { a, b } => {
            let r = parse_point(&a)?.mul(&parse_point(&b)?);
            println!("{}", fmt_point(&r));
        }
        GroupOp::Inv { a } => {
            println!("{}", fmt_point(&parse_point(&a)?.inv()));
        }
        GroupOp::Reduce { p, k } => {
            if k < 1 {
                anyhow::bail!("k must be >= 1");
            }
            let (gamma, q) = Lattice::new(k).reduce(&parse_point(&p)?);
            println!(
                "{{\"gamma\":{},\"q\":{}}}",
                fmt_point(&gamma.point()),
                fmt_point(&q)
            );
        }
        GroupOp::Exp { w } => {
            let v: [f64; 3] = serde_json::from_str(&w)?;
            println!("{}", fmt_point(&exp_h(&FrameVector::from_array(v))));
        }
        GroupOp::Log { p } => {
            let l = log_h(&parse_point(&p)?);
            println!("[{},{},{}]", fmt_num(l.vx), fmt_num(l.vy), fmt_num(l.vz));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_auto(op: AutoOp) -> anyhow::Result<ExitCode> {
    match op {
        AutoOp::CheckPh(m) => {
            let g = GMatrix::new(parse_block(&m.a)?, m.alpha, m.beta);
            let check = is_partially_hyperbolic(&g);
            let ev = check
                .eigenvalues
                .map(|e| format!("[{},{},{}]", e[0], e[1], e[2]))
                .unwrap_or_else(|| "null".into());
            println!(
                "{{\"pass\":{},\"eigenvalues\":{}}}",
                check.partially_hyperbolic, ev
            );
            Ok(if check.partially_hyperbolic {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        AutoOp::FromDerivative(m) => {
            let g = GMatrix::new(parse_block(&m.a)?, m.alpha, m.beta);
            let phi = from_derivative(&g)?;
            println!("{}", serde_json::to_string(&phi)?);
            Ok(ExitCode::SUCCESS)
        }
        AutoOp::Normalize(m) => {
            let g = GMatrix::new(parse_block(&m.a)?, m.alpha, m.beta);
            match conjugate_to_diagonal(&g) {
                Ok((p, d)) => {
                    println!(
                        "{{\"P\":{},\"D\":{}}}",
                        serde_json::to_string(&p)?,
                        serde_json::to_string(&d)?
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        AutoOp::AlgebraicPart { scenario, samples } => {
            let sc = load_scenario(&scenario)?;
            let f = match sc.build() {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            use heisenlab_core::auto::algebraic_part;
            let mut state = sc.seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let phi = algebraic_part(&|p: &HPoint| f.apply(p), f.lattice(), samples, |_| {
                HPoint::new(next(), next(), next())
            })?;
            println!("{}", serde_json::to_string(&phi)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mut sc = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    let f = match sc.build() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let mut params = sc.verify_params();
    if let Some(s) = args.samples {
        params.samples = s;
    }
    if let Some(h) = args.horizon {
        params.split_horizon = h;
    }
    if let Some(t) = args.tol {
        params.residual_tol = t;
    }

    let outcomes = if args.timings {
        let mut withs = Vec::new();
        let names: Vec<String> = if args.checks.is_empty() {
            heisenlab_core::dynamics::CHECK_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect()
        } else {
            args.checks.clone()
        };
        for name in names {
            let start = std::time::Instant::now();
            let outs = run_suite(&f, std::slice::from_ref(&name), &params)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            withs.push((outs.into_iter().next().unwrap(), ms));
        }
        withs
    } else {
        run_suite(&f, &args.checks, &params)?
            .into_iter()
            .map(|o| (o, f64::NAN))
            .collect()
    };

    let timing: Vec<f64> = outcomes.iter().map(|(_, ms)| *ms).collect();
    let mut report = Report::new(
        sc.hash(),
        sc.seed,
        outcomes.into_iter().map(|(o, _)| o).collect(),
    );
    if args.timings {
        for (rec, ms) in report.checks.iter_mut().zip(timing) {
            rec.runtime_ms = Some(ms);
        }
    }
    let all_pass = report.all_pass();
    let content = if args.timings {
        report.to_json_with_timings()
    } else {
        report.to_canonical_json()
    };
    write_or_print(&args.out, &content)?;
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_conjugacy(op: ConjugacyOp) -> anyhow::Result<ExitCode> {
    match op {
        ConjugacyOp::Semiconj { scenario, out, truncation, csv, grid, seed } => {
            let mut sc = load_scenario(&scenario)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            let f = match sc.build() {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            let h = semiconjugacy(&f, truncation)?;
            // Conjugacy residual over a deterministic grid.
            let mut worst = 0.0f64;
            let n = grid.max(2);
            for i in 0..n {
                for j in 0..n {
                    let p = HPoint::new(
                        (i as f64 + 0.5) / n as f64,
                        (j as f64 + 0.5) / n as f64,
                        0.2 / f.lattice().k as f64,
                    );
                    worst = worst.max(h.conjugacy_residual(&p)?);
                }
            }
            let mut outcome = CheckOutcome::empty("semiconj");
            let mut c = BTreeMap::new();
            c.insert("tail_bound".to_string(), h.tail_bound);
            c.insert("delta_sup".to_string(), h.delta_sup);
            c.insert("truncation".to_string(), truncation as f64);
            c.insert("worst_conjugacy_residual".to_string(), worst);
            c.insert("lambda_s".to_string(), h.lambda_s);
            c.insert("lambda_u".to_string(), h.lambda_u);
            outcome.constants = c;
            outcome.pass = worst <= 2.0 * h.tail_bound + 1e-12;
            outcome.worst_margin = 2.0 * h.tail_bound + 1e-12 - worst;
            outcome.samples = (n * n) as u64;
            let pass = outcome.pass;
            let report = Report::new(sc.hash(), sc.seed, vec![outcome]);
            write_or_print(&out, &report.to_canonical_json())?;
            if let Some(path) = csv {
                let mut s = String::from(CSV_MAP_HEADER);
                s.push('\n');
                for i in 0..=n {
                    for j in 0..=n {
                        let p = HPoint::new(i as f64 / n as f64, j as f64 / n as f64, 0.0);
                        let hv = h.eval(&p)?;
                        s.push_str(&csv_map_row(&p, &HPoint::new(hv[0], hv[1], 0.0)));
                        s.push('\n');
                    }
                }
                std::fs::write(path, s)?;
            }
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        ConjugacyOp::Leafconj {
            scenario,
            out,
            truncation,
            leaves,
            points,
            csv,
            grid,
            seed,
        } => {
            let mut sc = load_scenario(&scenario)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            let f = match sc.build() {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            let lc = build_leaf_conjugacy(&f, truncation)?;
            let rep = verify_leaf_conjugacy(&lc, leaves, points, sc.seed)?;
            let mut outcome = CheckOutcome::empty("leafconj");
            let mut c = BTreeMap::new();
            c.insert("phi1_residual".to_string(), rep.phi1_residual);
            c.insert("corner_residual".to_string(), rep.corner_residual);
            c.insert("seam_residual".to_string(), rep.seam_residual);
            c.insert("equivariance_residual".to_string(), rep.equivariance_residual);
            c.insert("same_leaf_ok".to_string(), rep.same_leaf_ok as f64);
            c.insert("leaves".to_string(), rep.leaves as f64);
            c.insert("fiber_index_residual".to_string(), rep.fiber_index_residual);
            c.insert("vertical_fiber_spread".to_string(), rep.vertical_fiber_spread);
            outcome.constants = c;
            outcome.pass = rep.pass;
            outcome.worst_margin = if rep.pass { 1e-6 - rep.equivariance_residual } else { -1.0 };
            outcome.samples = (leaves * points) as u64;
            let report = Report::new(sc.hash(), sc.seed, vec![outcome]);
            write_or_print(&out, &report.to_canonical_json())?;
            if let Some(path) = csv {
                let mut s = String::from(CSV_MAP_HEADER);
                s.push('\n');
                let n = grid.max(2);
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..2 {
                            let p = HPoint::new(
                                i as f64 / n as f64,
                                j as f64 / n as f64,
                                l as f64 * 0.25 / f.lattice().k as f64,
                            );
                            let hp = lc.eval(&p)?;
                            s.push_str(&csv_map_row(&p, &hp));
                            s.push('\n');
                        }
                    }
                }
                std::fs::write(path, s)?;
            }
            Ok(if rep.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        ConjugacyOp::CenterTest { scenario, k, p, q, truncation } => {
            let sc = match scenario {
                Some(path) => load_scenario(&path)?,
                None => Scenario::paper_example(k, 0.0, 0),
            };
            let f = match sc.build() {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(2));
                }
            };
            let h = semiconjugacy(&f, truncation)?;
            let pp = parse_point(&p)?;
            let qq = parse_point(&q)?;
            let same = h.center_leaf_test(&pp, &qq)?;
            println!("{same}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
