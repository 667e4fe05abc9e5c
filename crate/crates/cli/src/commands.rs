//! Subcommand implementations. All file output happens here.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lsuq_core::assembly::{assemble_system, P1Space, PlaneWave};
use lsuq_core::bayes::{
    angle_grid, angular_l2, inversion_convergence, posterior_boundary, truth_boundary, BayesSetup,
};
use lsuq_core::forward_uq::{convergence_report, Pipeline, SampleCache};
use lsuq_core::geometry::ParamVector;
use lsuq_core::mesh::unit_disk_mesh;
use lsuq_core::oracle::{mie_solve, oracle_errors, DiskScatterer};
use lsuq_core::qmc::{to_param, write_generating_data, QmcRule};
use lsuq_core::quadrature::TriangleQuadrature;
use lsuq_core::solver::{solve_ls, DiscreteSolution, SolverKind};
use lsuq_core::{Error, Result};

use crate::config::RunConfig;
use crate::rules::{family, study_rules};
use crate::QmcGenArgs;

/// `dir/stem.suffix` next to `out`.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_echo(out: &Path, cfg: &RunConfig) -> Result<()> {
    write(&sidecar(out, "config_echo.toml"), &cfg.echo())
}

fn param_vector(cfg: &RunConfig, y: Option<Vec<f64>>) -> Result<ParamVector> {
    let s = cfg.geometry.s;
    let mut v = y.unwrap_or_default();
    if v.len() > s {
        return Err(Error::Dimension { expected: s, got: v.len() });
    }
    v.resize(s, 0.0);
    ParamVector::new(v)
}

pub fn mesh_info(config: Option<&Path>, level: Option<u32>, y: Option<Vec<f64>>, dump: Option<PathBuf>) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(config)?;
    if let Some(level) = level {
        cfg.mesh.level = level;
    }
    let reference = unit_disk_mesh(cfg.mesh.level)?;
    let mesh = match y {
        Some(y) => {
            let pipeline = Pipeline::new(cfg.pipeline_config()?)?;
            let shape = pipeline.shape(&param_vector(&cfg, Some(y))?)?;
            if shape.is_clamped() {
                eprintln!("warning: radius clamped at rho_floor");
            }
            reference.pushforward(&shape)
        }
        None => reference,
    };
    println!("level           {}", mesh.level());
    println!("vertices        {}", mesh.vertex_count());
    println!("triangles       {}", mesh.triangle_count());
    println!("boundary nodes  {}", mesh.boundary_vertices().len());
    println!("mesh size h     {:.6}", mesh.mesh_size());
    println!("min angle (deg) {:.3}", mesh.min_angle_degrees());
    println!("area            {:.10}", mesh.total_area());
    if let Some(path) = dump {
        let mut buf = Vec::new();
        mesh.write_dump(&mut buf)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, buf)?;
    }
    Ok(())
}

pub fn solve(config: Option<&Path>, y: Option<Vec<f64>>, level: Option<u32>, out: &Path) -> Result<()> {
    let mut cfg = RunConfig::load_or_default(config)?;
    if let Some(level) = level {
        cfg.mesh.level = level;
    }
    let pipeline = Pipeline::new(cfg.pipeline_config()?)?;
    let y = param_vector(&cfg, y)?;
    let sample = pipeline.solve(&y)?;
    let mesh = sample.solution.space().mesh();
    let mut text = String::from("vertex,x,y,re,im\n");
    for (i, (v, c)) in mesh.vertices().iter().zip(sample.solution.coefficients().iter()).enumerate() {
        writeln!(text, "{i},{:.17e},{:.17e},{:.17e},{:.17e}", v[0], v[1], c.re, c.im).unwrap();
    }
    write(out, &text)?;
    let mut obs = String::from("k,x,y,re,im\n");
    for (k, p) in pipeline.config().observation.points().iter().enumerate() {
        let (re, im) = (sample.observation[2 * k], sample.observation[2 * k + 1]);
        writeln!(obs, "{k},{:.17e},{:.17e},{re:.17e},{im:.17e}", p[0], p[1]).unwrap();
    }
    write(&sidecar(out, "obs.csv"), &obs)?;
    write_echo(out, &cfg)?;
    println!(
        "solved {} dofs; observations written to {}",
        mesh.vertex_count(),
        sidecar(out, "obs.csv").display()
    );
    Ok(())
}

pub fn forward(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = RunConfig::load_or_default(config)?;
    let pipeline = Pipeline::new(cfg.pipeline_config()?)?;
    let f = &cfg.forward;
    let rules = study_rules(&cfg, &f.n_list, f.n_ref, &f.rules)?;
    let report = convergence_report(&pipeline, &rules, &f.n_list, f.n_ref, cfg.error_norm()?, f.record_timing)?;
    write(out, &report.to_csv())?;
    write(&sidecar(out, "slopes.csv"), &report.slopes_csv())?;
    write_echo(out, &cfg)?;
    for (rule, slope) in &report.slopes {
        println!("{rule}: fitted slope {slope:.3}");
    }
    Ok(())
}

pub fn invert(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = RunConfig::load_or_default(config)?;
    let pipeline = Pipeline::new(cfg.pipeline_config()?)?;
    let b = &cfg.bayes;
    let model = cfg.radius_model()?;
    let setup = BayesSetup::synthesize(&pipeline, cfg.ground_truth()?, b.sigma, b.noise_seed)?;
    let angles = angle_grid(b.angles);
    let n_max = b.n_ref.max(b.n);
    let n_min = b.n_list.first().copied().unwrap_or(b.n).min(b.n);
    let rule = family(&b.rule, &cfg, cfg.geometry.s, n_min, n_max)?(b.n)?;
    let posterior = posterior_boundary(&pipeline, &model, &setup, &rule, b.n, &angles, &mut SampleCache::new())?;
    let truth = truth_boundary(&model, &setup, &angles)?;
    write(out, &posterior.to_csv(&truth))?;
    println!(
        "Z = {:.6e}; L2 distance to truth: prior mean {:.6}, posterior mean {:.6}",
        posterior.z,
        angular_l2(&posterior.prior_mean, &truth),
        angular_l2(&posterior.posterior_mean, &truth)
    );
    if !b.n_list.is_empty() {
        let rules = study_rules(&cfg, &b.n_list, b.n_ref, std::slice::from_ref(&b.rule))?;
        let report = inversion_convergence(&pipeline, &model, &setup, &rules, &b.n_list, b.n_ref, &angles)?;
        write(&sidecar(out, "rates.csv"), &report.to_csv())?;
        write(&sidecar(out, "rates.slopes.csv"), &report.slopes_csv())?;
        for (rule, slope) in &report.slopes {
            println!("{rule}: inversion slope {slope:.3}");
        }
    }
    write_echo(out, &cfg)?;
    Ok(())
}

pub fn oracle_compare(level: u32, kin: f64, kappa0: f64, radius: f64, quad_order: usize, out: &Path) -> Result<()> {
    let wave = PlaneWave::new(kappa0, [1.0, 0.0])?;
    let mie = mie_solve(
        DiskScatterer {
            radius,
            kappa_in: kin,
            kappa0,
        },
        wave.direction(),
    )?;
    let quad = TriangleQuadrature::of_order(quad_order)?;
    let beta = kin * kin - kappa0 * kappa0;
    let mut text = String::from("h,L2_error,H1_error\n");
    for l in 1..=level {
        let space = P1Space::new(unit_disk_mesh(l)?.scaled(radius));
        let system = assemble_system(
            &space,
            kappa0,
            &|_| beta,
            &|x| wave.eval(x),
            &quad,
            lsuq_core::assembly::DEFAULT_NEAR_THRESHOLD,
        )?;
        let coefficients = solve_ls(&system, SolverKind::Direct)?;
        let errors = oracle_errors(&DiscreteSolution::new(space, coefficients)?, &mie)?;
        writeln!(text, "{:.17e},{:.17e},{:.17e}", errors.h, errors.l2, errors.h1).unwrap();
        println!("level {l}: h = {:.4}, L2 = {:.3e}, H1 = {:.3e}", errors.h, errors.l2, errors.h1);
    }
    write(out, &text)
}

pub fn qmc_gen(args: QmcGenArgs) -> Result<()> {
    let cfg = RunConfig::load_or_default(args.config.config.as_deref())?;
    let s = args.s.unwrap_or(cfg.geometry.s);
    let rule = match args.rule.as_str() {
        "lattice" => {
            let rlr = family("rlr", &cfg, s, args.n, args.n)?(args.n)?;
            let z = match rlr.generating_data() {
                Some(lsuq_core::qmc::GeneratingData::Lattice { z, .. }) => z.clone(),
                _ => unreachable!("rlr rules carry a generating vector"),
            };
            QmcRule::lattice(args.n, z)?
        }
        name => family(name, &cfg, s, args.n, args.n)?(args.n)?,
    };
    let points = rule.generate(args.shift_index)?;
    let mut text = String::new();
    let header: Vec<String> = (1..=s).map(|j| format!("{}{j}", if args.params { "y" } else { "t" })).collect();
    writeln!(text, "i,{}", header.join(",")).unwrap();
    for (i, t) in points.iter().enumerate() {
        let row: Vec<String> = if args.params {
            to_param(t).as_slice().iter().map(|v| format!("{v:.17e}")).collect()
        } else {
            t.iter().map(|v| format!("{v:.17e}")).collect()
        };
        writeln!(text, "{i},{}", row.join(",")).unwrap();
    }
    write(&args.out, &text)?;
    if let Some(path) = &args.generating_data_out {
        let data = rule
            .generating_data()
            .ok_or_else(|| Error::Parameter("Monte Carlo rules have no generating data".into()))?;
        write_generating_data(path, data)?;
    }
    println!("{} points of {} in dimension {s}", points.len(), rule.kind().name());
    Ok(())
}
