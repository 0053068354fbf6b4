use std::io::{self, BufWriter, Write};

use handbmc::angles::all_finger_angles;
use handbmc::camera::{solve_zroot, zroot_candidates};
use handbmc::gradcheck;
use handbmc::hand::{FINGER_NAMES, NUM_FINGERS};
use handbmc::io::{read_25d, read_poses, write_poses};
use handbmc::limits::{fit_limits_with, load_limits, save_limits, FitOptions};
use handbmc::losses::{bmc_loss, BmcObjective, LossReport};
use handbmc::synthetic::{self, perturb};
use handbmc::{DegeneracyPolicy, HandPose, ProjectionConfig};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::failure::{exit_code, Failure, EXIT_NUMERICAL, EXIT_OK, EXIT_VIOLATION};
use crate::{EvaluateArgs, FitArgs, GradCheckArgs, ProjectArgs, SolveDepthArgs, ValidateArgs};

const GRAD_CHECK_SAMPLES: usize = 200;
const GRAD_CHECK_TOLERANCE: f64 = 1e-4;
/// Points closer than this to a kink are not checked.
const KINK_CLEARANCE: f64 = 1e-3;

fn emit(lines: &[Value]) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for line in lines {
        writeln!(out, "{line}").map_err(|e| Failure::input(format!("cannot write output: {e}")))?;
    }
    out.flush().map_err(|e| Failure::input(format!("cannot write output: {e}")))
}

fn error_line(index: usize, e: &handbmc::Error) -> Value {
    json!({ "index": index, "error": e.to_string(), "exit_code": exit_code(e) })
}

fn report_json(index: usize, r: &LossReport, gradient: bool) -> Value {
    let mut line = json!({
        "index": index,
        "bone_length": r.bone_length,
        "root_bone": r.root_bone,
        "angle": r.angle,
        "total": r.total,
        "feasible": r.feasible,
        "degenerate": r.degenerate,
        "violated": r.violated_terms(),
        "violations": r.violations,
    });
    if gradient {
        line["gradient"] = json!(r.gradient.gradient);
        line["nondifferentiable"] = json!(r.gradient.nondifferentiable);
    }
    line
}

/// Worst per-sample outcome: numerical failure over violation over success.
fn worst(codes: impl IntoIterator<Item = u8>) -> u8 {
    codes.into_iter().fold(EXIT_OK, |acc, c| match (acc, c) {
        (EXIT_NUMERICAL, _) | (_, EXIT_NUMERICAL) => EXIT_NUMERICAL,
        (a, c) => a.max(c),
    })
}

fn bone_name(bone: usize) -> String {
    if bone < NUM_FINGERS {
        format!("{} root", FINGER_NAMES[bone])
    } else {
        let level = ["proximal", "middle", "distal"][(bone - NUM_FINGERS) % 3];
        format!("{} {level}", FINGER_NAMES[(bone - NUM_FINGERS) / 3])
    }
}

fn policy(lenient: bool) -> DegeneracyPolicy {
    if lenient {
        DegeneracyPolicy::lenient()
    } else {
        DegeneracyPolicy::Strict
    }
}

pub fn fit_limits(args: FitArgs, config: &RunConfig) -> Result<u8, Failure> {
    let poses = read_poses(&args.poses)?;
    let options = FitOptions {
        quantile: args.quantile.or(config.quantile).unwrap_or(0.0),
        lenient: args.lenient || config.lenient.unwrap_or(false),
        source: args.source.unwrap_or_else(|| args.poses.display().to_string()),
        length_unit: args.length_unit,
    };
    let outcome = fit_limits_with(&poses, &options)?;
    for (index, reason) in &outcome.skipped {
        eprintln!("warning: skipped sample {index}: {reason}");
    }
    for bone in &outcome.degenerate_hulls {
        eprintln!("warning: angle samples of finger bone {bone} are collinear; using a thin enclosing rectangle");
    }
    save_limits(&outcome.limits, &args.out)?;

    let limits = &outcome.limits;
    let mut out = format!(
        "fitted {} of {} samples (quantile {}), written to {}\n",
        limits.metadata.samples,
        poses.len(),
        options.quantile,
        args.out.display()
    );
    for (b, iv) in limits.bone_length.iter().enumerate() {
        out += &format!("  bone {b:>2} {:<12} [{:.6}, {:.6}]\n", bone_name(b), iv.lower(), iv.upper());
    }
    for (g, (c, d)) in limits.curvature.iter().zip(&limits.angular_distance).enumerate() {
        out += &format!(
            "  palm gap {g}     curvature [{:.6}, {:.6}]  spread [{:.6}, {:.6}]\n",
            c.lower(),
            c.upper(),
            d.lower(),
            d.upper()
        );
    }
    print!("{out}");
    Ok(EXIT_OK)
}

pub fn evaluate(args: EvaluateArgs, config: &RunConfig) -> Result<u8, Failure> {
    let limits = load_limits(config.limits_path(args.limits)?)?;
    let weights = config.weights(args.weights.as_deref())?;
    let poses = read_poses(&args.poses)?;
    let policy = policy(args.lenient || config.lenient.unwrap_or(false));
    let results: Vec<_> = poses
        .par_iter()
        .map(|p| bmc_loss(p, &limits, &weights, policy))
        .collect();
    let mut lines = Vec::with_capacity(results.len());
    let mut codes = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(r) if !r.total.is_finite() => {
                lines.push(report_json(i, r, args.gradient));
                codes.push(EXIT_NUMERICAL);
            }
            Ok(r) => {
                lines.push(report_json(i, r, args.gradient));
                codes.push(if r.feasible { EXIT_OK } else { EXIT_VIOLATION });
            }
            Err(e) => {
                lines.push(error_line(i, e));
                codes.push(exit_code(e).max(EXIT_NUMERICAL));
            }
        }
    }
    emit(&lines)?;
    Ok(worst(codes))
}

pub fn validate(args: ValidateArgs) -> Result<u8, Failure> {
    let poses = read_poses(&args.poses)?;
    let results: Vec<_> = poses.par_iter().map(all_finger_angles).collect();
    let lines: Vec<Value> = results
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Ok(_) => json!({ "index": i, "ok": true }),
            Err(e) => json!({ "index": i, "ok": false, "error": e.to_string() }),
        })
        .collect();
    emit(&lines)?;
    Ok(if results.iter().all(|r| r.is_ok()) { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn project(args: ProjectArgs, config: &RunConfig) -> Result<u8, Failure> {
    let limits = load_limits(config.limits_path(args.limits)?)?;
    let weights = config.weights(args.weights.as_deref())?;
    let mut projection: ProjectionConfig = config.projection.unwrap_or_default();
    if let Some(n) = args.max_iterations {
        projection.max_iterations = n;
    }
    if let Some(t) = args.threshold {
        projection.threshold = t;
    }
    if let Some(a) = args.anchor {
        projection.anchor = a;
    }
    projection.validate()?;
    let poses = read_poses(&args.poses)?;
    let results: Vec<_> = poses
        .par_iter()
        .map(|p| handbmc::project_to_feasible(p, &limits, &weights, &projection))
        .collect();

    let mut corrected: Vec<HandPose> = Vec::with_capacity(poses.len());
    let mut lines = Vec::with_capacity(poses.len());
    let mut codes = Vec::with_capacity(poses.len());
    for (i, (input, r)) in poses.iter().zip(&results).enumerate() {
        match r {
            Ok(r) => {
                corrected.push(r.pose.clone());
                lines.push(json!({
                    "index": i,
                    "input": input,
                    "output": r.pose,
                    "iterations": r.iterations,
                    "converged": r.converged,
                    "stalled": r.stalled,
                    "bone_length": r.report.bone_length,
                    "root_bone": r.report.root_bone,
                    "angle": r.report.angle,
                    "total": r.report.total,
                    "violated": r.report.violated_terms(),
                }));
                codes.push(if !r.report.total.is_finite() {
                    EXIT_NUMERICAL
                } else if r.converged {
                    EXIT_OK
                } else {
                    EXIT_VIOLATION
                });
            }
            Err(e) => {
                corrected.push(input.clone());
                lines.push(error_line(i, e));
                codes.push(exit_code(e).max(EXIT_NUMERICAL));
            }
        }
    }
    write_poses(&corrected, &args.out)?;
    emit(&lines)?;
    Ok(worst(codes))
}

pub fn solve_depth(args: SolveDepthArgs, config: &RunConfig) -> Result<u8, Failure> {
    let camera = config.camera(args.camera)?;
    let reference = config.reference(args.reference)?;
    let samples = read_25d(&args.input)?;
    let mut lines = Vec::with_capacity(samples.len());
    let mut codes = Vec::with_capacity(samples.len());
    for (i, data) in samples.iter().enumerate() {
        let solved = zroot_candidates(data, &camera, reference)
            .and_then(|roots| Ok((roots, solve_zroot(data, &camera, reference)?)));
        match solved {
            Ok((roots, z)) => {
                lines.push(json!({ "index": i, "zroot": z, "roots": roots }));
                codes.push(EXIT_OK);
            }
            Err(e) => {
                lines.push(error_line(i, &e));
                codes.push(exit_code(&e));
            }
        }
    }
    emit(&lines)?;
    Ok(worst(codes))
}

pub fn grad_check(args: GradCheckArgs, config: &RunConfig) -> Result<u8, Failure> {
    let file = config.grad_check.as_ref();
    let samples = args
        .samples
        .or(file.and_then(|g| g.samples))
        .unwrap_or(GRAD_CHECK_SAMPLES);
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let step = args
        .step
        .or(file.and_then(|g| g.step))
        .unwrap_or(gradcheck::DEFAULT_STEP);
    let tolerance = args
        .tolerance
        .or(file.and_then(|g| g.tolerance))
        .unwrap_or(GRAD_CHECK_TOLERANCE);
    if samples == 0 {
        return Err(Failure::input("--samples must be positive"));
    }
    if !(step > 0.0 && step.is_finite()) || !(tolerance > 0.0) {
        return Err(Failure::input("step and tolerance must be positive"));
    }

    let corpus = synthetic::corpus(seed, 200)?;
    let limits = handbmc::limits::fit_limits(&corpus, 0.0)?;
    let weights = config.weights(None)?;
    let objective = BmcObjective {
        limits: &limits,
        weights: &weights,
        policy: DegeneracyPolicy::Strict,
    };
    let mut rng = synthetic::rng(seed.wrapping_add(1));
    let (mut max_error, mut checked, mut skipped) = (0.0f64, 0usize, 0usize);
    while checked < samples {
        if skipped > 100 * samples {
            return Err(Failure {
                code: EXIT_NUMERICAL,
                message: format!("only {checked} of {samples} poses are clear of kinks"),
            });
        }
        let base = &corpus[rng.random_range(0..corpus.len())];
        let amplitude = [0.01, 0.03, 0.1][checked % 3];
        let pose = perturb(base, &mut rng, amplitude)?;
        let mut check = match gradcheck::check(&objective, &pose, step) {
            Ok(c) => c,
            Err(e) if e.is_degeneracy() => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if check.report.kink_margin.is_some_and(|m| m < KINK_CLEARANCE) {
            skipped += 1;
            continue;
        }
        if args.inject_gradient_bug {
            let g = &mut check.report.gradient;
            let scale = g.iter().flatten().fold(1e-3f64, |m, x| m.max(x.abs()));
            g[0][0] += 0.01 * scale;
            check.relative_error = gradcheck::relative_error(g, &check.numeric);
        }
        if !check.relative_error.is_finite() {
            return Err(Failure {
                code: EXIT_NUMERICAL,
                message: format!("non-finite gradient error at sample {checked}"),
            });
        }
        max_error = max_error.max(check.relative_error);
        checked += 1;
    }
    let pass = max_error < tolerance;
    emit(&[json!({
        "samples": checked,
        "skipped_near_kinks": skipped,
        "seed": seed,
        "step": step,
        "tolerance": tolerance,
        "max_relative_error": max_error,
        "pass": pass,
    })])?;
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
}
