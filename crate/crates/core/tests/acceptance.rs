//! Acceptance suite: one PASS/FAIL line per criterion, run sequentially so
//! the timing checks are not disturbed by other tests.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cmr_pipeline::artifacts::{
    apply_bias_field, apply_gamma, apply_ghosting, apply_motion, augment_slice, compose_segments, fft2_centered,
    ifft2_centered, motion_segments, rigid_transform, sample_one_of, AugmentationPolicy, BiasFieldParams, GammaParams,
    GhostingParams, MotionParams, PolicyWeights, TransformKind,
};
use cmr_pipeline::metrics::{dice, hd95, surface_distance_percentile};
use cmr_pipeline::phantom::{write_cohort, PhantomSpec};
use cmr_pipeline::pipeline::{self, PipelineConfig, RunContext};
use cmr_pipeline::seed::{derive_slice_seed, rng_from_seed};
use cmr_pipeline::standardize::{
    fit_landmarks, mapping_for, standardize, volume_landmarks, Foreground, DEFAULT_PERCENTILES,
};
use cmr_pipeline::volume::{canonical_orientation, reorient_to_canonical, resample, Interpolation, SliceSource};
use cmr_pipeline::{Grid, LabelVolume, Slice2D, Volume};
use common::{brute_dice, brute_hd95, dft2_centered, max_abs_diff, random_mask, rng, to_complex};
use nalgebra::{Matrix3, Matrix4, Rotation3};
use rand::seq::IndexedRandom;
use rand::Rng;

type Check = Result<String, String>;

/// Name, time budget in seconds, check.
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_slice(seed: u64, shape: [usize; 2]) -> Slice2D {
    let mut r = rng(seed);
    let data = (0..shape[0] * shape[1]).map(|_| r.random_range(-1.0..1.0)).collect();
    Slice2D::new(shape, [1.0, 1.0], data, SliceSource::default()).unwrap()
}

fn phantom_slice(shape: [usize; 2], spacing: [f64; 2]) -> Slice2D {
    let (cx, cy) = (shape[0] as f64 / 2.0, shape[1] as f64 / 2.0);
    let s = Slice2D::from_fn(shape, |i, j| {
        let r = ((i as f64 - cx).powi(2) + (0.8 * (j as f64 - cy)).powi(2)).sqrt() * 64.0 / shape[0] as f64;
        if r < 8.0 {
            200.0
        } else if r < 12.0 {
            80.0
        } else {
            20.0 + i as f64 * 0.5
        }
    })
    .unwrap();
    Slice2D::new(shape, spacing, s.data().to_vec(), SliceSource::default()).unwrap()
}

fn peak(s: &[f64]) -> f64 {
    s.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn neutral_identity() -> Check {
    let mut worst = [0.0f64; 4];
    for (n, shape) in [[16, 16], [33, 20], [64, 48], [256, 256]].into_iter().enumerate() {
        for s in [random_slice(n as u64, shape), phantom_slice(shape, [1.25, 1.25])] {
            let p = peak(s.data());
            let rel = |out: &Slice2D| max_abs_diff(out.data(), s.data()) / p;
            for axis in [0, 1] {
                worst[0] = worst[0].max(rel(&apply_motion(&s, &MotionParams::none(axis)).unwrap()));
                let g = GhostingParams {
                    num_ghosts: 4,
                    axis,
                    intensity: 0.0,
                    restore_center: 0.0,
                };
                worst[1] = worst[1].max(rel(&apply_ghosting(&s, &g).unwrap()));
            }
            for order in 0..=4 {
                worst[2] = worst[2].max(rel(&apply_bias_field(&s, &BiasFieldParams::zeros(order)).unwrap()));
            }
            worst[3] = worst[3].max(rel(&apply_gamma(&s, &GammaParams { log_gamma: 0.0 }).unwrap()));
        }
    }
    ensure(worst[0] <= 1e-5 && worst[1] <= 1e-5, || {
        format!("motion/ghosting error {worst:?}")
    })?;
    ensure(worst[2] <= 1e-6 && worst[3] <= 1e-6, || {
        format!("bias/gamma error {worst:?}")
    })?;
    Ok(format!(
        "max rel err motion {:.1e}, ghosting {:.1e}, bias {:.1e}, gamma {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

/// Impulse response of zeroing every ghost line: along the impulse's
/// phase-encode line, `delta - (comb - 1) / L`, with `comb = L / n` at
/// multiples of `L / n` and 0 elsewhere.
fn ghost_closed_form(shape: [usize; 2], at: [usize; 2], axis: usize, n: usize) -> Vec<f64> {
    let l = shape[axis];
    let mut out = vec![0.0; shape[0] * shape[1]];
    for j in 0..shape[1] {
        for i in 0..shape[0] {
            let (along, across, a0, c0) = if axis == 1 {
                (j, i, at[1], at[0])
            } else {
                (i, j, at[0], at[1])
            };
            if across != c0 {
                continue;
            }
            let d = (along + l - a0) % l;
            let comb = if d.is_multiple_of(l / n) { (l / n) as f64 } else { 0.0 };
            let delta = if d == 0 { 1.0 } else { 0.0 };
            out[i + shape[0] * j] = delta - (comb - 1.0) / l as f64;
        }
    }
    out
}

fn fourier_oracles() -> Check {
    let mut r = rng(100);
    let (mut fwd, mut round) = (0.0f64, 0.0f64);
    for n in 0..40 {
        let shape = if n < 2 {
            [8 + 56 * n, 8 + 56 * n]
        } else {
            [r.random_range(8..=64), r.random_range(8..=64)]
        };
        let s = random_slice(1000 + n as u64, shape);
        let k = fft2_centered(&s).unwrap();
        let direct = dft2_centered(&to_complex(s.data()), shape, false);
        let scale = direct.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let e = k
            .data()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        fwd = fwd.max(e / scale);
        let back = ifft2_centered(&k, &s).unwrap();
        round = round.max(max_abs_diff(back.data(), s.data()) / peak(s.data()));
    }
    ensure(fwd <= 1e-5 && round <= 1e-5, || {
        format!("fft vs dft {fwd:.1e}, round trip {round:.1e}")
    })?;

    // every segment from one translated copy equals the spatial translation
    let mut motion = 0.0f64;
    for (shape, shift, axis) in [
        ([40, 36], (3i64, -2i64), 1),
        ([48, 48], (-4, 5), 0),
        ([64, 40], (2, 2), 1),
    ] {
        let s = phantom_slice(shape, [1.5, 1.5]);
        let t = [shift.0 as f64 * 1.5, shift.1 as f64 * 1.5];
        let moved = fft2_centered(&rigid_transform(&s, 0.0, t).unwrap()).unwrap();
        let segments = motion_segments(shape[axis], &[0.3, 0.6]);
        let out = ifft2_centered(
            &compose_segments(&[&moved, &moved, &moved], &segments, axis).unwrap(),
            &s,
        )
        .unwrap();
        let m = 1 + shift.0.unsigned_abs().max(shift.1.unsigned_abs()) as usize;
        for j in m..shape[1] - m {
            for i in m..shape[0] - m {
                let want = s.get((i as i64 - shift.0) as usize, (j as i64 - shift.1) as usize);
                motion = motion.max((out.get(i, j) - want).abs() / peak(s.data()));
            }
        }
    }
    ensure(motion <= 1e-3, || {
        format!("uniform translation interior error {motion:.1e}")
    })?;

    let mut ghost = 0.0f64;
    for (shape, at) in [([32, 32], [13, 9]), ([24, 64], [5, 40]), ([64, 16], [60, 3])] {
        for axis in [0, 1] {
            for n in [2, 4, 8] {
                if shape[axis] % n != 0 {
                    continue;
                }
                let s = Slice2D::from_fn(shape, |i, j| if [i, j] == at { 1.0 } else { 0.0 }).unwrap();
                let p = GhostingParams {
                    num_ghosts: n,
                    axis,
                    intensity: 1.0,
                    restore_center: 0.0,
                };
                let out = apply_ghosting(&s, &p).unwrap();
                ghost = ghost.max(max_abs_diff(out.data(), &ghost_closed_form(shape, at, axis, n)));
            }
        }
    }
    ensure(ghost <= 1e-5, || format!("impulse ghosting error {ghost:.1e}"))?;
    Ok(format!(
        "40 slices: fft vs dft {fwd:.1e}, round trip {round:.1e}; translation {motion:.1e}; ghost comb {ghost:.1e}"
    ))
}

const SPACINGS: [f64; 6] = [0.5, 1.0, 1.25, 1.5, 2.0, 3.0];

fn labels_from(mask: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> LabelVolume {
    let grid = Grid::with_spacing(shape, spacing, [0.0; 3]).unwrap();
    Volume::new(grid, mask.iter().map(|&m| m as u16).collect()).unwrap()
}

fn metric_oracles() -> Check {
    let mut r = rng(200);
    let pairs = 1200;
    let mut defined = 0;
    for n in 0..pairs {
        let shape = [r.random_range(4..=8), r.random_range(4..=8), 4];
        let spacing = [0, 1, 2].map(|_| *SPACINGS.choose(&mut r).unwrap());
        let (a, b) = (random_mask(&mut r, shape), random_mask(&mut r, shape));
        let (la, lb) = (labels_from(&a, shape, spacing), labels_from(&b, shape, spacing));
        let (d, want_d) = (dice(&la, &lb, 1).unwrap(), brute_dice(&a, &b));
        ensure(d == want_d, || format!("pair {n}: dice {d} vs {want_d}"))?;
        let (h, want_h) = (hd95(&la, &lb, 1, spacing).unwrap(), brute_hd95(&a, &b, shape, spacing));
        ensure(h == want_h, || format!("pair {n}: hd95 {h:?} vs {want_h:?}"))?;
        defined += h.is_some() as usize;
        for f in [0.5, 2.0, 4.0] {
            let scaled = surface_distance_percentile(&a, &b, shape, spacing.map(|s| s * f), 95.0);
            ensure(scaled == h.map(|v| v * f), || {
                format!("pair {n}: hd95 x{f} gives {scaled:?} from {h:?}")
            })?;
        }
    }
    Ok(format!(
        "{pairs} pairs bitwise equal ({defined} with defined hd95); scaling exact"
    ))
}

fn policy_frequencies() -> Check {
    let weights = PolicyWeights::default();
    let draws = 120_000;
    let mut counts = [0usize; 4];
    for n in 0..draws {
        let seed = derive_slice_seed(0, &format!("P{:03}-1-ED", n / 1000), 0, n % 1000);
        let kind = sample_one_of(&weights, &mut rng_from_seed(seed)).unwrap();
        counts[TransformKind::ALL.iter().position(|&k| k == kind).unwrap()] += 1;
    }
    let freq = counts.map(|c| c as f64 / draws as f64);
    let want = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    let dev = freq.iter().zip(want).map(|(f, w)| (f - w).abs()).fold(0.0, f64::max);
    ensure(dev <= 0.01, || format!("frequencies {freq:?}"))?;
    Ok(format!(
        "{draws} draws: {:.4} {:.4} {:.4} {:.4} (max dev {dev:.4})",
        freq[0], freq[1], freq[2], freq[3]
    ))
}

fn std_volume(seed: u64) -> Volume {
    let mut r = rng(seed);
    let grid = Grid::with_spacing([24, 24, 4], [1.0; 3], [0.0; 3]).unwrap();
    let gain = r.random_range(0.5..3.0);
    Volume::from_fn(grid, |_, _, _| {
        gain * if r.random_bool(0.6) {
            r.random_range(0.0..30.0)
        } else {
            r.random_range(80.0..400.0)
        }
    })
}

fn standardization_properties() -> Check {
    let train: Vec<Volume> = (0..5).map(std_volume).collect();
    let model = fit_landmarks(&train, &DEFAULT_PERCENTILES, Foreground::None).unwrap();
    let m = mapping_for(&std_volume(99), &model).unwrap();
    let mut r = rng(300);
    for _ in 0..1_000_000 {
        let (a, b) = (r.random_range(-500.0..2000.0), r.random_range(-500.0..2000.0));
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        ensure(m.apply(x) <= m.apply(y), || format!("f({x}) > f({y})"))?;
    }

    let mut pin = 0.0f64;
    for seed in 100..120 {
        let v = std_volume(seed);
        let m = mapping_for(&v, &model).unwrap();
        let marks = volume_landmarks(&v, &DEFAULT_PERCENTILES, Foreground::None).unwrap();
        for (x, s) in marks.iter().zip(model.standard_scale()) {
            pin = pin.max((m.apply(*x) - s).abs());
        }
    }
    ensure(pin <= 1e-6, || format!("landmark pinning error {pin:.1e}"))?;

    let mut inv = 0.0f64;
    for seed in 200..220 {
        let v = std_volume(seed);
        let a = r.random_range(0.05..20.0);
        let b = r.random_range(-500.0..500.0);
        let sv = standardize(&v, &model).unwrap();
        let sw = standardize(&v.map(|x| a * x + b), &model).unwrap();
        inv = inv.max(max_abs_diff(sv.data(), sw.data()));
    }
    ensure(inv <= 1e-4, || format!("affine invariance error {inv:.1e}"))?;
    Ok(format!(
        "1e6 pairs monotone; pinning {pin:.1e}; affine invariance {inv:.1e}"
    ))
}

fn affine_from(linear: Matrix3<f64>, offset: [f64; 3]) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&linear);
    for row in 0..3 {
        m[(row, 3)] = offset[row];
    }
    m
}

/// World position of every voxel center mapped to its value.
fn world_map(v: &Volume) -> Vec<([f64; 3], f64)> {
    let [nx, ny, nz] = v.shape();
    let mut out = Vec::with_capacity(v.data().len());
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                out.push((v.grid().world([i as f64, j as f64, k as f64]), v.get(i, j, k)));
            }
        }
    }
    out.sort_by_key(|p| p.0.map(|c| (c * 1e3).round() as i64));
    out
}

fn geometry_suite() -> Check {
    let mut r = rng(400);
    let mut world = 0.0f64;
    for n in 0..300 {
        let mut perm = [0usize, 1, 2];
        for a in (1..3).rev() {
            perm.swap(a, r.random_range(0..=a));
        }
        let mut linear = Matrix3::zeros();
        for (a, &w) in perm.iter().enumerate() {
            let sign = if r.random_bool(0.5) { -1.0 } else { 1.0 };
            linear[(w, a)] = sign * r.random_range(0.5..4.0);
        }
        let tilt = Rotation3::from_euler_angles(
            r.random_range(-0.3..0.3),
            r.random_range(-0.3..0.3),
            r.random_range(-0.3..0.3),
        );
        let offset = [0, 1, 2].map(|_| r.random_range(-100.0..100.0));
        let shape = [r.random_range(1..8), r.random_range(1..8), r.random_range(1..5)];
        let grid = Grid::new(shape, affine_from(tilt.matrix() * linear, offset)).unwrap();
        let v = Volume::from_fn(grid, |i, j, k| (i + 8 * j + 64 * k) as f64);
        let once = reorient_to_canonical(&v).unwrap();
        ensure(canonical_orientation(once.affine()).unwrap().is_identity(), || {
            format!("trial {n}: not canonical")
        })?;
        ensure(reorient_to_canonical(&once).unwrap() == once, || {
            format!("trial {n}: not idempotent")
        })?;
        for (a, b) in world_map(&v).iter().zip(world_map(&once)) {
            ensure(a.1 == b.1, || format!("trial {n}: values moved"))?;
            world = world.max((0..3).map(|c| (a.0[c] - b.0[c]).abs()).fold(0.0, f64::max));
        }
    }
    ensure(world <= 1e-6, || format!("world coordinate error {world:.1e} mm"))?;

    let mut tri = 0.0f64;
    let mut new_labels = 0;
    for _ in 0..100 {
        let c: Vec<f64> = (0..4).map(|_| r.random_range(-5.0..5.0)).collect();
        let sp = [
            r.random_range(0.5..2.5),
            r.random_range(0.5..2.5),
            r.random_range(2.0..9.0),
        ];
        let target = [
            r.random_range(0.3..3.0),
            r.random_range(0.3..3.0),
            r.random_range(1.0..10.0),
        ];
        let grid = Grid::with_spacing([9, 8, 4], sp, [0.0; 3]).unwrap();
        let f = |x: f64, y: f64, z: f64| c[0] + c[1] * x + c[2] * y + c[3] * z;
        let v = Volume::from_fn(grid.clone(), |i, j, k| {
            f(i as f64 * sp[0], j as f64 * sp[1], k as f64 * sp[2])
        });
        let out = resample(&v, target, Interpolation::Trilinear).unwrap();
        let scale = peak(v.data()).max(1.0);
        let [nx, ny, nz] = out.shape();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let (x, y, z) = (i as f64 * target[0], j as f64 * target[1], k as f64 * target[2]);
                    if x <= 8.0 * sp[0] && y <= 7.0 * sp[1] && z <= 3.0 * sp[2] {
                        tri = tri.max((out.get(i, j, k) - f(x, y, z)).abs() / scale);
                    }
                }
            }
        }
        let codes = [0u16, 1, 2, 3, 9];
        let labels: LabelVolume = Volume::from_fn(grid, |_, _, _| codes[r.random_range(0..codes.len())]);
        let before = labels.codes();
        let after = resample(&labels, target, Interpolation::Nearest).unwrap().codes();
        new_labels += after.iter().filter(|c| !before.contains(c)).count();
    }
    ensure(tri <= 1e-5, || format!("trilinear error {tri:.1e}"))?;
    ensure(new_labels == 0, || format!("{new_labels} new label codes"))?;
    Ok(format!(
        "300 affines idempotent, world err {world:.1e} mm; trilinear {tri:.1e}; no new labels"
    ))
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            (
                e.path().strip_prefix(dir).unwrap().to_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cmr-pipeline"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = root.path();
    let data = root.join("data");
    let spec = PhantomSpec {
        shape: [112, 112, 4],
        spacing: [1.6, 1.6, 8.0],
        ..Default::default()
    };
    write_cohort(&data, &spec, 5, &[1, 2, 3, 4]).map_err(|e| e.to_string())?;
    let cfg = root.join("config.toml");
    std::fs::write(&cfg, "[crop]\nsize = [144, 144]\n\n[augment]\ncopies = 2\n").unwrap();
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let mut trees = Vec::new();
    for jobs in ["1", "8"] {
        let run = root.join(format!("jobs{jobs}"));
        let (pre, aug) = (run.join("pre"), run.join("aug"));
        cli(&[
            "preprocess",
            "--manifest",
            &s(&data),
            "--output",
            &s(&pre),
            "--config",
            &s(&cfg),
            "--seed",
            "5",
            "--jobs",
            jobs,
        ])?;
        let manifest = pre.join("manifest.json");
        cli(&[
            "augment",
            "--manifest",
            &s(&manifest),
            "--output",
            &s(&aug),
            "--config",
            &s(&cfg),
            "--seed",
            "5",
            "--jobs",
            jobs,
        ])?;
        trees.push(tree(&run));
    }
    let (a, b) = (&trees[0], &trees[1]);
    ensure(a.keys().eq(b.keys()), || "output file lists differ".into())?;
    let differing: Vec<_> = a
        .iter()
        .filter(|(k, v)| b[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    ensure(differing.is_empty(), || format!("files differ: {differing:?}"))?;
    let bytes: usize = a.values().map(Vec::len).sum();
    Ok(format!(
        "40 cases x 2 copies: {} files ({:.1} MB) bitwise identical",
        a.len(),
        bytes as f64 / 1e6
    ))
}

fn performance() -> Check {
    let policy = AugmentationPolicy::default();
    let s = phantom_slice([256, 256], [1.25, 1.25]);
    augment_slice(&s, &policy, 0).unwrap();
    let mut times = Vec::new();
    for seed in 1..=200u64 {
        let t = Instant::now();
        let (out, _) = augment_slice(&s, &policy, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)).unwrap();
        times.push(t.elapsed());
        std::hint::black_box(out);
    }
    times.sort();
    let worst = *times.last().unwrap();
    let median = times[times.len() / 2];
    ensure(worst < Duration::from_millis(20), || {
        format!("256x256 augment worst {worst:?}")
    })?;

    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = root.path().join("data");
    write_cohort(&data, &PhantomSpec::default(), 20, &[1, 2, 3, 4]).map_err(|e| e.to_string())?;
    let ctx = RunContext::new(PipelineConfig::default(), 0).with_jobs(0);
    let t = Instant::now();
    let report = pipeline::preprocess(&ctx, &data, &root.path().join("pre"), None).map_err(|e| e.to_string())?;
    let cohort = t.elapsed();
    ensure(report.succeeded() && report.cases_ok == 160, || {
        format!("{} of 160 cases ok", report.cases_ok)
    })?;
    ensure(cohort < Duration::from_secs(120), || {
        format!("160-case preprocess took {cohort:?}")
    })?;
    Ok(format!(
        "256x256 augment median {:.2} ms, worst {:.2} ms; 160 cases preprocessed in {:.1} s on {} thread(s)",
        median.as_secs_f64() * 1e3,
        worst.as_secs_f64() * 1e3,
        cohort.as_secs_f64(),
        rayon::current_num_threads()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("neutral-parameter identity", 10, neutral_identity),
        ("fourier oracles", 60, fourier_oracles),
        ("metric oracle equivalence", 120, metric_oracles),
        ("policy frequencies", 60, policy_frequencies),
        ("standardization properties", 60, standardization_properties),
        ("geometry suite", 60, geometry_suite),
        ("determinism jobs 1 vs 8", 300, determinism),
        ("performance", 300, performance),
    ];
    let mut failed = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (name, limit, check) in criteria {
        let t = Instant::now();
        let result = check();
        let elapsed = t.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= Duration::from_secs(limit) {
                Ok(msg)
            } else {
                Err(format!("{msg}; over the {limit} s budget"))
            }
        });
        let (tag, msg) = match &result {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        failed += result.is_err() as usize;
        println!("{tag} {name:<28} {:>7.2} s  {msg}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
