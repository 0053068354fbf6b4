//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! with a failure status if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use handbmc::angles::{
    all_finger_angles, extract_angles, octant_lookup, reconstruct_direction, synthesize_pose,
    unsigned_angles, AnglePair, BoneFrame,
};
use handbmc::camera::{decompose_25d, project, reconstruct, solve_zroot, zroot_candidates, CameraIntrinsics, ReferencePair};
use handbmc::gradcheck;
use handbmc::hand::{finger_joint, BoneSet, HandPose, NUM_FINGER_BONES, NUM_JOINTS};
use handbmc::hull::hull_distance;
use handbmc::limits::{load_limits, parse_limits, save_limits, LimitSet};
use handbmc::losses::{bmc_value, BmcObjective, DegeneracyPolicy, LossWeights};
use handbmc::palm::palm_descriptor;
use handbmc::projection::{project_to_feasible, ProjectionConfig};
use handbmc::synthetic::{self, perturb, random_hand, random_rotation, random_translation};
use handbmc::{Error, Vec3};
use rand::Rng;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let (corpus, limits) = fitted(11, 200);
    let weights = LossWeights::default();
    let objective = BmcObjective {
        limits: &limits,
        weights: &weights,
        policy: DegeneracyPolicy::Strict,
    };
    let mut rng = synthetic::rng(12);
    let (mut worst, mut accepted, mut rejected) = (0.0f64, 0, 0);
    while accepted < 200 {
        let base = &corpus[rng.random_range(0..corpus.len())];
        let amplitude = [0.01, 0.03, 0.1][accepted % 3];
        let pose = perturb(base, &mut rng, amplitude).unwrap();
        let check = match gradcheck::check(&objective, &pose, 1e-5) {
            Ok(c) => c,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        if check.report.kink_margin.is_some_and(|m| m < 1e-3) {
            rejected += 1;
            continue;
        }
        worst = worst.max(check.relative_error);
        accepted += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-4 && secs < 30.0,
        format!("max relative error {worst:.3e} over {accepted} poses ({rejected} near kinks skipped), {secs:.1} s"),
    )
}

fn rigid_invariance() -> Outcome {
    let (corpus, limits) = fitted(21, 200);
    let weights = LossWeights::default();
    let mut rng = synthetic::rng(22);
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for i in 0..1000 {
        let pose = perturb(&corpus[i % corpus.len()], &mut rng, 0.05).unwrap();
        let r = random_rotation(&mut rng);
        let t = random_translation(&mut rng, 5.0);
        let l0 = bmc_value(&pose, &limits, &weights, DegeneracyPolicy::Strict).unwrap();
        let l1 = bmc_value(&pose.transformed(&r, t), &limits, &weights, DegeneracyPolicy::Strict).unwrap();
        if l0 > 0.0 {
            nonzero += 1;
        }
        worst = worst.max((l1 - l0).abs() / l0.max(1.0));
    }
    outcome(
        worst < 1e-9,
        format!("max scaled difference {worst:.3e} over 1000 triples ({nonzero} with nonzero loss)"),
    )
}

fn zero_loss_fitting() -> Outcome {
    let weights = LossWeights::default();
    let mut worst = 0.0f64;
    let mut total = 0;
    for (seed, n) in [(31, 10), (32, 57), (33, 400)] {
        let (corpus, limits) = fitted(seed, n);
        for pose in &corpus {
            worst = worst.max(bmc_value(pose, &limits, &weights, DegeneracyPolicy::Strict).unwrap());
            total += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max L_BMC {worst:.3e} over {total} samples of corpora sized 10, 57, 400"),
    )
}

fn angle_round_trip() -> Outcome {
    let mut rng = synthetic::rng(41);
    let mut direct = 0.0f64;
    for _ in 0..10_000 {
        let a = AnglePair::new(rng.random_range(-PI + 1e-6..PI - 1e-6), rng.random_range(-FRAC_PI_2 + 1e-3..FRAC_PI_2 - 1e-3));
        let r = random_rotation(&mut rng);
        let frame = BoneFrame {
            x: Vec3::new(r[0][0], r[1][0], r[2][0]),
            y: Vec3::new(r[0][1], r[1][1], r[2][1]),
            z: Vec3::new(r[0][2], r[1][2], r[2][2]),
        };
        let world = frame.to_world(reconstruct_direction(&a));
        let b = extract_angles(world, &frame).unwrap();
        direct = direct.max((b.flexion - a.flexion).abs()).max((b.abduction - a.abduction).abs());
    }
    let mut fk = 0.0f64;
    for _ in 0..1000 {
        let roots = synthetic::random_root_bones(&mut rng);
        let lengths: [f64; NUM_FINGER_BONES] = std::array::from_fn(|_| rng.random_range(0.2..0.7));
        let angles: [AnglePair; NUM_FINGER_BONES] =
            std::array::from_fn(|_| AnglePair::new(rng.random_range(-2.5..2.5), rng.random_range(-1.2..1.2)));
        let pose = synthesize_pose([0.3, -0.1, 2.0], roots, lengths, angles).unwrap();
        let back = all_finger_angles(&pose).unwrap();
        for (a, b) in angles.iter().zip(&back) {
            fk = fk.max((a.flexion - b.flexion).abs()).max((a.abduction - b.abduction).abs());
        }
    }
    outcome(
        direct < 1e-9 && fk < 1e-9,
        format!("reconstruct→extract max error {direct:.3e} (10⁴ pairs), forward-kinematics max error {fk:.3e} (1000 poses)"),
    )
}

fn worked_example() -> Outcome {
    let a = Vec3::new(1.0, 0.0, 1.0);
    let b = Vec3::new(-1.0, 0.0, 1.0);
    let ua = unsigned_angles(a).unwrap();
    let ub = unsigned_angles(b).unwrap();
    let sb = octant_lookup(ub, b);
    let signed = extract_angles(b, &BoneFrame::identity()).unwrap();
    let errors = [
        (ua.flexion - FRAC_PI_4).abs(),
        ua.abduction.abs(),
        (ub.flexion - FRAC_PI_4).abs(),
        ub.abduction.abs(),
        (sb.flexion + FRAC_PI_4).abs(),
        sb.abduction.abs(),
        (signed.flexion + FRAC_PI_4).abs(),
        signed.abduction.abs(),
    ];
    let worst = errors.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= 1e-12,
        format!("(1,0,1) → {:?}, (−1,0,1) → {:?} then {:?}; max error {worst:.1e}", ua.as_array(), ub.as_array(), sb.as_array()),
    )
}

fn hull_oracles() -> Outcome {
    let mut rng = synthetic::rng(61);
    let (mut disagreements, mut skipped) = (0, 0);
    for _ in 0..10_000 {
        let poly = random_decagon(&mut rng);
        let hull = hull_from(poly);
        let p = [rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0)];
        if boundary_distance(&poly, p) <= 1e-12 {
            skipped += 1;
            continue;
        }
        if hull.contains_point(p) != (winding_number(&poly, p) != 0) {
            disagreements += 1;
        }
    }

    let mut worst = 0.0f64;
    let mut worst_global = 0.0f64;
    let mut tested = 0;
    while tested < 1000 {
        let poly = random_decagon(&mut rng);
        let hull = hull_from(poly);
        let p = [rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0)];
        if hull.contains_point(p) {
            continue;
        }
        let d = hull_distance(&hull, &AnglePair::new(p[0], p[1]));
        let (per_edge, global) = dense_hull_distance(&poly, p, 100_000);
        worst = worst.max((d - per_edge).abs());
        worst_global = worst_global.max(d - global);
        tested += 1;
    }
    outcome(
        disagreements == 0 && worst < 1e-3,
        format!(
            "containment disagreements {disagreements}/10⁴ ({skipped} within 1e-12 of an edge); \
             distance vs dense sampling max error {worst:.2e} over 1000 exterior points \
             (formula exceeds the unrestricted sample minimum by at most {worst_global:.2e})"
        ),
    )
}

fn depth_recovery() -> Outcome {
    let mut rng = synthetic::rng(71);
    let reference = ReferencePair::default();
    let (mut worst_rel, mut worst_px) = (0.0f64, 0.0f64);
    let (mut scenes, mut ambiguous) = (0, 0);
    while scenes < 1000 {
        let hand = random_hand(&mut rng).unwrap().scaled(rng.random_range(0.06..0.12));
        let r = random_rotation(&mut rng);
        let z = rng.random_range(0.3..1.5);
        let t = [rng.random_range(-0.2..0.2) * z, rng.random_range(-0.15..0.15) * z, z];
        let pose = hand.transformed(&r, t);
        let f = rng.random_range(400.0..900.0);
        let camera = CameraIntrinsics::pinhole(f, f * rng.random_range(0.95..1.05), 320.0, 240.0).unwrap();
        let Ok((data, s)) = decompose_25d(&pose, &camera, reference) else {
            continue;
        };
        let truth = pose.joint(0)[2] / s;
        // The larger admissible root is chosen; scenes where the true root is
        // the smaller of two admissible ones cannot be recovered by any
        // root-selection rule and are not counted.
        let roots = zroot_candidates(&data, &camera, reference).unwrap();
        let admissible: Vec<f64> = roots
            .iter()
            .copied()
            .filter(|&z| z > 0.0 && data.zr.iter().all(|&r| z + r > 0.0))
            .collect();
        if admissible.len() == 2 && (admissible[0] - admissible[1]).abs() > 1e-9 * truth && (truth - admissible[0].min(admissible[1])).abs() < (truth - admissible[0].max(admissible[1])).abs() {
            ambiguous += 1;
            continue;
        }
        let z_hat = solve_zroot(&data, &camera, reference).unwrap();
        worst_rel = worst_rel.max((z_hat - truth).abs() / truth);
        let rebuilt = reconstruct(&data, &camera, z_hat).unwrap();
        let uv = project(&rebuilt, &camera).unwrap();
        for j in 0..NUM_JOINTS {
            worst_px = worst_px.max((uv[j][0] - data.uv[j][0]).abs()).max((uv[j][1] - data.uv[j][1]).abs());
        }
        scenes += 1;
    }
    outcome(
        worst_rel < 1e-6 && worst_px < 1e-9,
        format!(
            "max relative root-depth error {worst_rel:.3e}, max reprojection error {worst_px:.3e} px over {scenes} scenes \
             ({ambiguous} two-root scenes with the smaller root true were regenerated)"
        ),
    )
}

fn projection_descent() -> Outcome {
    let (corpus, limits) = fitted(81, 200);
    let weights = LossWeights::default();
    let config = ProjectionConfig::default();
    let mut rng = synthetic::rng(82);
    let (mut monotone, mut converged, mut iterations) = (true, 0, 0usize);
    for i in 0..100 {
        let pose = perturb(&corpus[i], &mut rng, 0.03).unwrap();
        let result = project_to_feasible(&pose, &limits, &weights, &config).unwrap();
        monotone &= result.trace.windows(2).all(|w| w[1] <= w[0]);
        if result.report.total < 1e-6 && result.iterations <= 2000 {
            converged += 1;
        }
        iterations = iterations.max(result.iterations);
    }
    outcome(
        monotone && converged >= 95,
        format!("traces monotone: {monotone}; {converged}/100 reached L_BMC < 1e-6 (max {iterations} iterations)"),
    )
}

fn same_bits(a: &LimitSet, b: &LimitSet) -> bool {
    let bits = |s: &LimitSet| -> Vec<u64> {
        let mut v = Vec::new();
        for i in s.bone_length.iter().chain(&s.curvature).chain(&s.angular_distance) {
            v.push(i.lower().to_bits());
            v.push(i.upper().to_bits());
        }
        for h in &s.angle_hulls {
            v.extend(h.vertices().iter().flatten().map(|x| x.to_bits()));
        }
        v.push(s.metadata.quantile.to_bits());
        v
    };
    bits(a) == bits(b) && a.metadata == b.metadata
}

fn limit_file_round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut exact = true;
    for seed in 0..20 {
        let corpus = synthetic::corpus(900 + seed, 60).unwrap();
        let q = [0.0, 0.05, 0.1][seed as usize % 3];
        let limits = handbmc::limits::fit_limits(&corpus, q).unwrap();
        let path = dir.path().join(format!("limits{seed}.json"));
        save_limits(&limits, &path).unwrap();
        let back = load_limits(&path).unwrap();
        exact &= same_bits(&limits, &back) && back == limits;
    }

    let (_, limits) = fitted(91, 40);
    let good = serde_json::to_string_pretty(&limits.to_json()).unwrap();
    let mut value = limits.to_json();
    let mut cases: Vec<(String, String)> = Vec::new();
    let cut = good.find("\"angular_distance\"").unwrap();
    cases.push((good[..cut].to_string(), "angular_distance".into()));
    cases.push((good[..good.len() - 2].to_string(), "angle_hulls".into()));
    value["bone_length"][3] = serde_json::json!([0.5, 0.1]);
    cases.push((value.to_string(), "bone_length[3]".into()));
    let mut value = limits.to_json();
    value["angle_hulls"][2][4][1] = serde_json::json!("x");
    cases.push((value.to_string(), "angle_hulls[2][4][1]".into()));
    let mut value = limits.to_json();
    value.as_object_mut().unwrap().remove("curvature");
    cases.push((value.to_string(), "curvature".into()));
    let mut value = limits.to_json();
    value["metadata"].as_object_mut().unwrap().remove("samples");
    cases.push((value.to_string(), "metadata.samples".into()));
    let mut value = limits.to_json();
    let v = value["angle_hulls"][7].as_array_mut().unwrap();
    v.reverse();
    cases.push((value.to_string(), "angle_hulls[7]".into()));

    let mut named = 0;
    let mut misses = Vec::new();
    for (text, want) in &cases {
        match parse_limits(text) {
            Err(Error::Schema { path, .. }) if &path == want => named += 1,
            other => misses.push(format!("{want}: {other:?}")),
        }
    }
    outcome(
        exact && misses.is_empty(),
        format!(
            "20 fitted sets round-trip bit-exactly: {exact}; {named}/{} malformed files named the offending field{}",
            cases.len(),
            if misses.is_empty() { String::new() } else { format!(" (misses: {})", misses.join("; ")) }
        ),
    )
}

fn flat_palm_curvature() -> Outcome {
    let mut rng = synthetic::rng(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut spreads: Vec<f64> = (0..5).map(|_| rng.random_range(-1.2..1.2)).collect();
        spreads.sort_by(f64::total_cmp);
        if spreads.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let r = random_rotation(&mut rng);
        let t = random_translation(&mut rng, 1.0);
        let mut joints = [[0.0; 3]; NUM_JOINTS];
        for (f, s) in spreads.iter().enumerate() {
            let len = rng.random_range(0.5..1.2);
            let (sn, cs) = s.sin_cos();
            for level in 0..4 {
                let l = len + 0.3 * level as f64;
                joints[finger_joint(f, level)] = [sn * l, 0.0, cs * l];
            }
        }
        let pose = HandPose::new(joints).unwrap().transformed(&r, t);
        let bones: BoneSet = BoneSet::from_joints(&pose.to_vec3());
        let palm = palm_descriptor(&bones).unwrap();
        for c in palm.curvatures {
            worst = worst.max(c.abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |c_i| {worst:.3e} over coplanar fans under random rigid motions"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient correctness", gradient_correctness),
        ("rigid invariance", rigid_invariance),
        ("zero-loss fitting", zero_loss_fitting),
        ("angle round-trip", angle_round_trip),
        ("worked octant example", worked_example),
        ("hull oracle equivalence", hull_oracles),
        ("depth recovery", depth_recovery),
        ("projection descent", projection_descent),
        ("limit-file round-trip", limit_file_round_trip),
        ("flat-palm curvature", flat_palm_curvature),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
