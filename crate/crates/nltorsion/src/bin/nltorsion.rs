//! Command-line front end: solve the radial and 2D problems, simulate exit
//! times, and run the shape-comparison and verification experiments.

use clap::{Args, Parser, Subcommand};
use nltorsion::experiments::{
    ball_family_profiles, large_drift_trend, planar_family_profiles, profile_inequality_defects,
    profiles_strictly_below, run_shape_comparison, torsion_convergence_study,
    verify_drift_dominance, verify_level_set_induction, verify_profile_inequalities, write_dat,
    write_json, ExperimentConfig,
};
use nltorsion::functionals::{evaluate, level_set_segments};
use nltorsion::geometry::{build_mask, Domain2D};
use nltorsion::montecarlo::{simulate_exit, DriftPolicy};
use nltorsion::pde2d::{optimal_drift_of, solve_nonlinear};
use nltorsion::radial::{check_flux_ode, solve_radial};
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "nltorsion",
    version,
    about = "Exit-time PDE toolkit: drift diffusion and optimal trapping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ShapeArgs {
    /// disk | ellipse | rectangle | square | annulus | stadium
    #[arg(long)]
    shape: String,
    /// disk radius
    #[arg(long)]
    radius: Option<f64>,
    /// ellipse semi-axis along x
    #[arg(long)]
    a: Option<f64>,
    /// ellipse semi-axis along y
    #[arg(long)]
    b: Option<f64>,
    /// rectangle width (also the side of a square)
    #[arg(long)]
    width: Option<f64>,
    /// rectangle height
    #[arg(long)]
    height: Option<f64>,
    /// annulus inner radius
    #[arg(long)]
    r0: Option<f64>,
    /// annulus outer radius
    #[arg(long)]
    r1: Option<f64>,
    /// stadium cap radius
    #[arg(long)]
    r: Option<f64>,
    /// stadium straight length
    #[arg(long)]
    l: Option<f64>,
}

impl ShapeArgs {
    fn to_domain(&self) -> nltorsion::Result<Domain2D> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                nltorsion::Error::InvalidParameter(format!(
                    "shape `{}` requires --{name}",
                    self.shape
                ))
            })
        };
        match self.shape.as_str() {
            "disk" => Domain2D::disk(need(self.radius, "radius")?),
            "ellipse" => Domain2D::ellipse(need(self.a, "a")?, need(self.b, "b")?),
            "rectangle" => {
                Domain2D::rectangle(need(self.width, "width")?, need(self.height, "height")?)
            }
            "square" => {
                let side = need(self.width, "width")?;
                Domain2D::rectangle(side, side)
            }
            "annulus" => Domain2D::annulus(need(self.r0, "r0")?, need(self.r1, "r1")?),
            "stadium" => Domain2D::stadium(need(self.r, "r")?, need(self.l, "l")?),
            other => Err(nltorsion::Error::InvalidParameter(format!(
                "unknown shape `{other}`"
            ))),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the radial problem on a d-ball and write the profile as CSV.
    SolveRadial {
        #[arg(long, default_value_t = 2)]
        dim: u32,
        /// drift cap
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 4096)]
        nodes: usize,
        /// output CSV with columns r,g,w
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the nonlinear trapping problem on a 2D domain.
    Solve2d {
        #[command(flatten)]
        shape: ShapeArgs,
        /// grid spacing
        #[arg(long)]
        h: f64,
        /// drift cap B
        #[arg(long, default_value_t = 0.0)]
        cap: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// field CSV with columns x,y,u
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON report
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Estimate the expected exit time by path simulation.
    Simulate {
        #[command(flatten)]
        shape: ShapeArgs,
        /// zero | radial-inward | coupled
        #[arg(long, default_value = "zero")]
        policy: String,
        /// drift cap B
        #[arg(long, default_value_t = 0.0)]
        cap: f64,
        /// start point as `x,y`
        #[arg(long, default_value = "0,0")]
        x0: String,
        #[arg(long, default_value_t = 1e-5)]
        dt: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// grid spacing for the `coupled` policy field
        #[arg(long, default_value_t = 1.0 / 128.0)]
        h: f64,
        /// JSON output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equal-volume comparison of the shape family.
    CompareShapes {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check the exact identities and inequalities of the theory.
    VerifyLemmas {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Superlevel-set extraction, re-solving, and contour output.
    Levelsets {
        #[arg(long)]
        config: Option<PathBuf>,
        /// drift cap B
        #[arg(long, default_value_t = 1.0)]
        cap: f64,
        /// levels as fractions of the maximum
        #[arg(long, default_value = "0.1,0.3,0.5")]
        eps_fracs: String,
    },
    /// Grid-convergence study against the closed-form disk solution.
    Convergence {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Solve2dReport {
    iterations: usize,
    residual: f64,
    policy_sweeps: usize,
    u_max: f64,
    u_l1: f64,
    grad_l1: f64,
    flux: f64,
}

fn load_config(path: &Option<PathBuf>) -> nltorsion::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn parse_point(text: &str) -> nltorsion::Result<(f64, f64)> {
    let mut it = text.split(',');
    let parse = |s: Option<&str>| {
        s.and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| nltorsion::Error::InvalidParameter(format!("bad point `{text}`")))
    };
    let x = parse(it.next())?;
    let y = parse(it.next())?;
    Ok((x, y))
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> nltorsion::Result<()> {
    match cli.command {
        Command::SolveRadial {
            dim,
            b,
            radius,
            nodes,
            out,
        } => {
            let sol = solve_radial(dim, b, radius, nodes)?;
            println!(
                "d={dim} b={b} R={radius}: u(0) = {:.10}, w(R) = {:.10}",
                sol.center_value(),
                sol.w.last().unwrap()
            );
            sol.write_csv(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Solve2d {
            shape,
            h,
            cap,
            tol,
            out,
            report,
        } => {
            let dom = shape.to_domain()?;
            let mask = Arc::new(build_mask(&dom, h)?);
            let (u, rep) = solve_nonlinear(&mask, cap, tol)?;
            let fun = evaluate(&u, cap);
            println!(
                "{dom} h={h} cap={cap}: u_max = {:.8} after {} sweeps ({} iterations, residual {:.2e})",
                fun.u_max, rep.policy_sweeps, rep.iterations, rep.residual
            );
            if let Some(path) = out {
                u.write_csv(&path)?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = report {
                write_json(
                    &path,
                    &Solve2dReport {
                        iterations: rep.iterations,
                        residual: rep.residual,
                        policy_sweeps: rep.policy_sweeps,
                        u_max: fun.u_max,
                        u_l1: fun.u_l1,
                        grad_l1: fun.grad_l1,
                        flux: fun.flux,
                    },
                )?;
                println!("wrote {}", path.display());
            }
        }
        Command::Simulate {
            shape,
            policy,
            cap,
            x0,
            dt,
            paths,
            seed,
            h,
            out,
        } => {
            let dom = shape.to_domain()?;
            let start = parse_point(&x0)?;
            let pol = match policy.as_str() {
                "zero" => DriftPolicy::Zero,
                "radial-inward" => DriftPolicy::RadialInward(cap),
                "coupled" => {
                    let mask = Arc::new(build_mask(&dom, h)?);
                    let (u, _) = solve_nonlinear(&mask, cap, 1e-8)?;
                    DriftPolicy::Interpolated {
                        field: optimal_drift_of(&u, cap),
                        sign_flip: true,
                    }
                }
                other => {
                    return Err(nltorsion::Error::InvalidParameter(format!(
                        "unknown policy `{other}`"
                    )))
                }
            };
            let est = simulate_exit(&dom, &pol, start, dt, paths, seed)?;
            println!(
                "mean exit time {:.6} +- {:.2e} ({} paths, dt={dt})",
                est.mean, est.stderr, est.n_paths
            );
            if let Some(path) = out {
                write_json(&path, &est)?;
                println!("wrote {}", path.display());
            }
        }
        Command::CompareShapes { config } => {
            let cfg = load_config(&config)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let table = run_shape_comparison(&cfg)?;
            println!(
                "{:<12} {:>5} {:>12} {:>12} {:>12} {:>12}",
                "shape", "cap", "u_max", "u_l1", "grad_l1", "flux"
            );
            for r in &table.rows {
                println!(
                    "{:<12} {:>5} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                    r.shape, r.cap, r.report.u_max, r.report.u_l1, r.report.grad_l1, r.report.flux
                );
            }
            for (cap, flags) in &table.disk_is_max {
                let cols: Vec<&str> = flags
                    .iter()
                    .filter(|(_, &v)| v)
                    .map(|(k, _)| k.as_str())
                    .collect();
                println!("cap {cap}: disk strictly maximizes {}", cols.join(", "));
            }
            table.write_csv(&cfg.out_dir.join("comparison.csv"))?;
            write_json(&cfg.out_dir.join("comparison.json"), &table)?;
            println!("wrote {}", cfg.out_dir.join("comparison.csv").display());
        }
        Command::VerifyLemmas { config } => {
            let cfg = load_config(&config)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let h = cfg.finest();
            let cap = cfg.caps.iter().copied().find(|&c| c > 0.0).unwrap_or(1.0);

            // drift comparison: the coupled solution dominates every
            // admissible drift field
            println!("== drift dominance (cap {cap}, 20 random fields) ==");
            let mut dominance = Vec::new();
            for dom in [
                Domain2D::disk((cfg.area / std::f64::consts::PI).sqrt())?,
                Domain2D::rectangle(cfg.area.sqrt(), cfg.area.sqrt())?,
            ] {
                let mask = Arc::new(build_mask(&dom, h)?);
                let rep = verify_drift_dominance(&mask, cap, 20, cfg.seed, cfg.tol)?;
                println!(
                    "{:<12} worst excess {:+.3e}, self excess {:+.3e}, outward gap {:.4}",
                    dom.label(),
                    rep.worst_excess,
                    rep.self_excess,
                    rep.outward_center_gap.unwrap_or(f64::NAN)
                );
                dominance.push((dom.label(), rep));
            }
            write_json(&cfg.out_dir.join("dominance.json"), &dominance)?;

            // the exact flux ODE on balls
            println!("== ball flux ODE h'(c) = b (h + c)/|dB_c| ==");
            let grid: Vec<f64> = (0..=360).map(|i| 1.0 + 9.0 * i as f64 / 360.0).collect();
            for d in [2u32, 3] {
                for b in [0.5, 1.0] {
                    let dev = check_flux_ode(d, b, &grid)?;
                    println!("d={d} b={b}: max deviation {dev:.3e}");
                }
            }

            // profile inequalities: ball equality, families strictly below
            println!("== volume profiles: ball equality / family strictness ==");
            let cball: Vec<f64> = (0..=160).map(|i| 1.0 + 9.0 * i as f64 / 160.0).collect();
            let mut defect_reports = Vec::new();
            for d in [2u32, 3] {
                for b in [0.5, 1.0] {
                    let ball = ball_family_profiles(d, b, &cball)?;
                    let eq = verify_profile_inequalities(&ball);
                    let worst = eq.max_defect.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
                    println!("ball d={d} b={b}: max |equality defect| {worst:.3e}");
                    defect_reports.push(eq);
                }
            }
            let cfam: Vec<f64> = (0..=16).map(|i| 1.0 + 9.0 * i as f64 / 16.0).collect();
            let ball2 = ball_family_profiles(2, cap, &cfam)?;
            let ucap = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
            for shape in [
                Domain2D::rectangle(1.0, 1.0)?,
                Domain2D::ellipse(2.0 * ucap, ucap)?,
            ] {
                let fam = planar_family_profiles(&shape, cap, &cfam, h, cfg.tol)?;
                let d = profile_inequality_defects(&fam, &ball2);
                let below = profiles_strictly_below(&fam, &ball2);
                println!(
                    "{:<12} min margins {:?} (profiles below ball: {below})",
                    d.label,
                    d.min_margin.map(|m| (m * 1e4).round() / 1e4)
                );
                write_dat(
                    &cfg.out_dir.join(format!("profile_f_{}.dat", d.label)),
                    &fam.c
                        .iter()
                        .copied()
                        .zip(fam.f.iter().copied())
                        .collect::<Vec<_>>(),
                )?;
                defect_reports.push(d);
            }
            write_json(&cfg.out_dir.join("profile_defects.json"), &defect_reports)?;

            // large-drift asymptotics
            println!("== large-drift trend ln u(0) / (b R/2) on the unit disk ==");
            let trend = large_drift_trend(2, 1.0, &[5.0, 10.0, 20.0, 40.0])?;
            for (b, ratio) in &trend {
                println!("b={b:>4}: ratio {ratio:.5}");
            }
            write_dat(&cfg.out_dir.join("trend.dat"), &trend)?;
            println!("wrote reports to {}", cfg.out_dir.display());
        }
        Command::Levelsets {
            config,
            cap,
            eps_fracs,
        } => {
            let cfg = load_config(&config)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let fracs: Vec<f64> = eps_fracs
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| {
                        nltorsion::Error::InvalidParameter(format!("bad fraction `{s}`: {e}"))
                    })
                })
                .collect::<nltorsion::Result<_>>()?;
            let h = cfg.finest();
            let mut reports = Vec::new();
            for dom in [
                Domain2D::disk((cfg.area / std::f64::consts::PI).sqrt())?,
                Domain2D::rectangle(cfg.area.sqrt(), cfg.area.sqrt())?,
            ] {
                let rep = verify_level_set_induction(&dom, cap, &fracs, h, cfg.tol)?;
                println!(
                    "{:<12} cap={cap}: max re-solve defect {:.3e}",
                    rep.shape, rep.max_defect
                );
                // contour data for plotting (blank-line separated segments)
                let mask = Arc::new(build_mask(&dom, h)?);
                let (u, _) = solve_nonlinear(&mask, cap, cfg.tol)?;
                let u_max = u.max_value();
                let mut text = String::new();
                for frac in [0.05, 0.2, 0.4, 0.6, 0.8] {
                    for ((x1, y1), (x2, y2)) in level_set_segments(&u, frac * u_max) {
                        text.push_str(&format!("{x1:.8e} {y1:.8e}\n{x2:.8e} {y2:.8e}\n\n"));
                    }
                }
                let path = cfg.out_dir.join(format!("contours_{}.dat", rep.shape));
                std::fs::write(&path, text)?;
                println!("wrote {}", path.display());
                reports.push(rep);
            }
            write_json(&cfg.out_dir.join("levelsets.json"), &reports)?;
        }
        Command::Convergence { config } => {
            let cfg = load_config(&config)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let study = torsion_convergence_study(&cfg.spacings, cfg.tol)?;
            for (i, &h) in study.spacings.iter().enumerate() {
                println!(
                    "h = {h:.6}: sup error {:.3e}, center error {:.3e}",
                    study.sup_errors[i], study.center_errors[i]
                );
            }
            println!("observed order: {:.3}", study.observed_order);
            let rows: Vec<(f64, f64)> = study
                .spacings
                .iter()
                .copied()
                .zip(study.sup_errors.iter().copied())
                .collect();
            write_dat(&cfg.out_dir.join("convergence.dat"), &rows)?;
            write_json(&cfg.out_dir.join("convergence.json"), &study)?;
            println!("wrote {}", cfg.out_dir.join("convergence.dat").display());
        }
    }
    Ok(())
}
