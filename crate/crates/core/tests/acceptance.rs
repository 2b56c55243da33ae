//! Acceptance suite: each criterion prints one PASS/FAIL line and the
//! process exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qhsl_core::color::{decode_hs, ChromaState, LightnessMapping};
use qhsl_core::image::{
    chroma_amplitudes, simulate_preparation, Backend, Pixel, QhslImage, StructuredState,
};
use qhsl_core::io::{format_dump, image_to_rgb};
use qhsl_core::retrieval::{
    estimate_phi, estimate_theta, measure_hs_exact, measure_hs_sampled, retrieve_image, RetrievalMode,
};
use qhsl_core::sim::{build_adder, build_comparator, extract_bits, run_on_basis, AdderRegisters};
use qhsl_core::transforms::{
    apply_transform_circuit, hue_shift, pseudocolor, pseudocolor_via_circuit, saturation_shift,
    solve_rotation_angles, synthesize_leq_controls, PseudocolorInterval, PseudocolorMap, RegionMethod, Transform,
};

type Outcome = Result<String, String>;

const BUDGET: usize = 26;

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn degree_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn saturation_of(theta: f64) -> f64 {
    (3.0 * theta / PI - 1.0).clamp(0.0, 1.0)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = (i % 3) as u32;
        let q = [0, 2, 8][(i / 3) % 3];
        let img = QhslImage::random(n, q, &mut rng);
        let report = retrieve_image(&StructuredState::from_image(&img), RetrievalMode::Exact, img.mapping())
            .map_err(|e| e.to_string())?;
        for addr in img.addresses() {
            let src = img.pixel(addr);
            let got = report.pixel(addr);
            ensure(got.lightness == src.lightness, || {
                format!("image {i} {addr:?}: L {} vs {}", got.lightness, src.lightness)
            })?;
            let theta = src.chroma.theta();
            worst = worst.max((got.theta - theta).abs());
            ensure((got.saturation - saturation_of(theta)).abs() < 1e-9, || {
                format!("image {i} {addr:?}: S {} vs {}", got.saturation, saturation_of(theta))
            })?;
            if theta.sin() > 1e-6 {
                let dphi = angle_diff(got.phi, src.chroma.phi());
                worst = worst.max(dphi);
                ensure(!got.hue_undefined, || format!("image {i} {addr:?}: hue flagged undefined"))?;
                ensure(degree_diff(got.hue, src.chroma.phi().to_degrees()) < 1e-7, || {
                    format!("image {i} {addr:?}: H {}", got.hue)
                })?;
            }
        }
    }
    ensure(worst < 1e-9, || format!("max angle error {worst:.3e}"))?;
    Ok(format!("max angle error {worst:.2e}"))
}

fn backend_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = (i % 3) as u32;
        let q = (i / 3 % 4) as u32;
        let img = QhslImage::random(n, q, &mut rng);
        let dense = simulate_preparation(&img, BUDGET).map_err(|e| e.to_string())?;
        let structured = StructuredState::from_image(&img).to_dense(BUDGET).map_err(|e| e.to_string())?;
        for (a, b) in dense.amplitudes().iter().zip(structured.amplitudes()) {
            worst = worst.max((a - b).norm());
        }
    }
    ensure(worst < 1e-10, || format!("max |Δ| {worst:.3e}"))?;
    Ok(format!("max |Δ| {worst:.2e}"))
}

fn moon_map() -> PseudocolorMap {
    let iv = |lo, hi, hue| PseudocolorInterval { lo, hi, hue };
    PseudocolorMap::new(
        8,
        vec![iv(0, 37, 0.0), iv(38, 96, 60.0), iv(97, 200, 240.0), iv(201, 255, 120.0)],
    )
    .expect("valid map")
}

fn pseudocolor_angles() -> Outcome {
    let got = solve_rotation_angles(&moon_map());
    let expected = [-PI / 3.0, -PI, 2.0 * PI / 3.0, 2.0 * PI / 3.0];
    ensure(got.len() == 4, || format!("{} angles", got.len()))?;
    for (g, e) in got.iter().zip(expected) {
        ensure((g - e).abs() < 1e-12, || format!("{got:?}"))?;
    }
    Ok(format!("{got:.6?}"))
}

fn threshold_synthesis() -> Outcome {
    for xi in 0u64..=255 {
        let patterns = synthesize_leq_controls(xi, 8).map_err(|e| e.to_string())?;
        ensure(patterns.len() == xi.count_ones() as usize + 1, || {
            format!("ξ={xi}: {} patterns", patterns.len())
        })?;
        for v in 0u64..=255 {
            let hits = patterns.iter().filter(|p| p.matches(v)).count();
            let want = usize::from(v <= xi);
            ensure(hits == want, || format!("ξ={xi} v={v}: {hits} matching patterns"))?;
        }
    }
    Ok("256 thresholds".into())
}

fn arithmetic_oracles() -> Outcome {
    let w = 8;
    let regs = AdderRegisters {
        addend: (0..w).collect(),
        target: (w..2 * w).collect(),
        carry_out: 2 * w,
        scratch: (2 * w + 1..3 * w + 1).collect(),
    };
    let nq = 3 * w + 1;
    let adder = build_adder(&regs, nq).map_err(|e| e.to_string())?;
    for a in 0u64..256 {
        for b in 0u64..256 {
            let out = run_on_basis(&adder, a | b << w).map_err(|e| e.to_string())?;
            let sum = a + b;
            ensure(extract_bits(out, &regs.addend) == a, || format!("{a}+{b}: addend changed"))?;
            ensure(extract_bits(out, &regs.target) == sum & 0xff, || format!("{a}+{b}: wrong sum"))?;
            ensure(extract_bits(out, &[regs.carry_out]) == sum >> 8, || format!("{a}+{b}: wrong carry"))?;
            ensure(extract_bits(out, &regs.scratch) == 0, || format!("{a}+{b}: dirty scratch"))?;
        }
    }

    let grey = ChromaState::canonical(PI / 3.0, 0.0);
    let img = QhslImage::uniform(0, 8, LightnessMapping::Average, Pixel { chroma: grey, lightness: 200 })
        .map_err(|e| e.to_string())?;
    let out = apply_transform_circuit(&img, Transform::LightnessAdd(100), None, RegionMethod::Patterns, Backend::Structured)
        .map_err(|e| e.to_string())?;
    let l = out.pixels()[0].lightness;
    ensure(l == 255, || format!("200+100 gave {l}"))?;

    for w in 1..=8usize {
        let a: Vec<usize> = (0..w).collect();
        let b: Vec<usize> = (w..2 * w).collect();
        let (gt, lt) = (2 * w, 2 * w + 1);
        let cmp = build_comparator(&a, &b, gt, lt, 2 * w + 2).map_err(|e| e.to_string())?;
        for x in 0u64..1 << w {
            for y in 0u64..1 << w {
                let input = x | y << w;
                let out = run_on_basis(&cmp, input).map_err(|e| e.to_string())?;
                let want = input | u64::from(x > y) << gt | u64::from(x < y) << lt;
                ensure(out == want, || format!("width {w}: compare {x} {y}"))?;
            }
        }
    }
    Ok("65536 sums, widths 1-8 compared, 200+100 -> 255".into())
}

fn complementary_color() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..10 {
        let img = QhslImage::random(2, 8, &mut rng);
        let once = hue_shift(&img, PI, None).map_err(|e| e.to_string())?;
        for addr in img.addresses() {
            let before = decode_hs(&img.pixel(addr).chroma);
            let after = decode_hs(&once.pixel(addr).chroma);
            if before.hue_undefined {
                continue;
            }
            let want = (before.hue + 180.0).rem_euclid(360.0);
            ensure(degree_diff(after.hue, want) < 1e-9, || {
                format!("image {i} {addr:?}: hue {} vs {want}", after.hue)
            })?;
        }
        let twice = hue_shift(&once, PI, None).map_err(|e| e.to_string())?;
        for (a, b) in img.pixels().iter().zip(twice.pixels()) {
            ensure(a.lightness == b.lightness && a.chroma.theta() == b.chroma.theta(), || {
                format!("image {i}: lightness or polar angle changed")
            })?;
            ensure(angle_diff(a.chroma.phi(), b.chroma.phi()) <= 4.0 * f64::EPSILON * TAU, || {
                format!("image {i}: azimuth drift")
            })?;
        }
        let dumps = (format_dump(&img).map_err(|e| e.to_string())?, format_dump(&twice).map_err(|e| e.to_string())?);
        ensure(dumps.0 == dumps.1, || format!("image {i}: dump differs"))?;
        let (ra, rb) = (image_to_rgb(&img), image_to_rgb(&twice));
        ensure(ra.map_err(|e| e.to_string())? == rb.map_err(|e| e.to_string())?, || {
            format!("image {i}: RGB differs")
        })?;
    }
    Ok("10 images, dump and RGB identical after two shifts".into())
}

fn saturation_endpoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = QhslImage::random(2, 4, &mut rng);
    let with_theta = |theta: f64| {
        base.map_pixels(|_, p| Pixel {
            chroma: ChromaState::canonical(theta, p.chroma.phi()),
            lightness: p.lightness,
        })
        .map_err(|e| e.to_string())
    };
    let check = |img: &QhslImage, want: f64, what: &str| -> Result<(), String> {
        for p in img.pixels() {
            let s = decode_hs(&p.chroma).saturation;
            ensure(s == want, || format!("{what}: S = {s}"))?;
        }
        Ok(())
    };
    let up = saturation_shift(&with_theta(PI / 3.0)?, PI / 3.0, None).map_err(|e| e.to_string())?;
    check(&up, 1.0, "S=0 + π/3")?;
    let down = saturation_shift(&with_theta(2.0 * PI / 3.0)?, -PI / 3.0, None).map_err(|e| e.to_string())?;
    check(&down, 0.0, "S=1 - π/3")?;

    let meridian = QhslImage::uniform(1, 2, LightnessMapping::Average, Pixel {
        chroma: ChromaState::canonical(PI / 3.0, 0.0),
        lightness: 1,
    })
    .map_err(|e| e.to_string())?;
    let via = apply_transform_circuit(&meridian, Transform::SaturationShift(PI / 3.0), None, RegionMethod::Patterns, Backend::Structured)
        .map_err(|e| e.to_string())?;
    check(&via, 1.0, "circuit S=0 + π/3")?;
    Ok("both endpoints reached".into())
}

fn pseudocolor_pipeline() -> Outcome {
    let map = moon_map();
    let grey = ChromaState::canonical(PI / 3.0, 0.0);
    let pixels = (0..256u32).map(|l| Pixel { chroma: grey, lightness: l }).collect();
    let ramp = QhslImage::new(4, 8, LightnessMapping::Average, pixels).map_err(|e| e.to_string())?;

    let oracle_hue = |l: u32| {
        let bounds = [(0, 37, 0.0), (38, 96, 60.0), (97, 200, 240.0), (201, 255, 120.0)];
        bounds.iter().find(|(lo, hi, _)| (*lo..=*hi).contains(&l)).map(|b| b.2).unwrap()
    };
    let check = |img: &QhslImage, what: &str| -> Result<(), String> {
        for addr in img.addresses() {
            let l_in = ramp.pixel(addr).lightness;
            let p = img.pixel(addr);
            let d = decode_hs(&p.chroma);
            ensure(p.lightness == 127, || format!("{what} {addr:?}: L {}", p.lightness))?;
            ensure((d.saturation - 1.0).abs() < 1e-12, || format!("{what} {addr:?}: S {}", d.saturation))?;
            ensure(degree_diff(d.hue, oracle_hue(l_in)) < 1e-9, || {
                format!("{what} {addr:?}: H {} for L {l_in}", d.hue)
            })?;
        }
        Ok(())
    };
    check(&pseudocolor(&ramp, &map).map_err(|e| e.to_string())?, "pixel")?;
    let by_patterns =
        pseudocolor_via_circuit(&ramp, &map, RegionMethod::Patterns, Backend::Structured).map_err(|e| e.to_string())?;
    let by_comparator =
        pseudocolor_via_circuit(&ramp, &map, RegionMethod::Comparator, Backend::Structured).map_err(|e| e.to_string())?;
    check(&by_patterns, "patterns")?;
    check(&by_comparator, "comparator")?;
    for addr in ramp.addresses() {
        let (a, b) = (by_patterns.pixel(addr), by_comparator.pixel(addr));
        ensure(a.lightness == b.lightness, || format!("{addr:?}: lightness differs"))?;
        ensure(
            (a.chroma.theta() - b.chroma.theta()).abs() < 1e-12 && angle_diff(a.chroma.phi(), b.chroma.phi()) < 1e-12,
            || format!("{addr:?}: chroma differs"),
        )?;
    }
    Ok("256 ramp pixels, both circuit paths agree".into())
}

fn sampled_statistics() -> Outcome {
    let state = ChromaState::canonical(PI / 2.0, 0.7);
    let amps = chroma_amplitudes(&state);
    let mut medians = Vec::new();
    for shots in [1_000u64, 10_000, 100_000] {
        let mut errors = Vec::with_capacity(50);
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stats = measure_hs_sampled(amps, shots, &mut rng).map_err(|e| e.to_string())?;
            let theta = estimate_theta(&stats).map_err(|e| e.to_string())?;
            errors.push((theta - PI / 2.0).abs());
        }
        errors.sort_by(f64::total_cmp);
        medians.push((errors[24] + errors[25]) / 2.0);
    }
    ensure(medians.windows(2).all(|w| w[1] < w[0]), || format!("medians {medians:?}"))?;
    ensure(medians[2] < 0.01, || format!("median at 1e5 shots {:.3e}", medians[2]))?;
    Ok(format!("median errors {:.2e} {:.2e} {:.2e}", medians[0], medians[1], medians[2]))
}

fn quadrant_sweep() -> Outcome {
    let mut worst = 0.0f64;
    for deg in 0..360 {
        let phi = f64::from(deg).to_radians();
        let amps = chroma_amplitudes(&ChromaState::canonical(PI / 2.0, phi));
        let est = estimate_phi(&measure_hs_exact(amps));
        ensure(!est.hue_undefined, || format!("{deg}°: hue undefined"))?;
        worst = worst.max(angle_diff(est.phi, phi));
    }
    ensure(worst < 1e-9, || format!("max error {worst:.3e}"))?;
    Ok(format!("max error {worst:.2e}"))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    // Accept and ignore libtest flags such as `--nocapture`.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria = [
        Criterion { name: "exact round trip", limit: Some(Duration::from_secs(10)), run: exact_round_trip },
        Criterion { name: "backend equivalence", limit: Some(Duration::from_secs(30)), run: backend_equivalence },
        Criterion { name: "pseudocolor rotation angles", limit: None, run: pseudocolor_angles },
        Criterion { name: "threshold synthesis", limit: Some(Duration::from_secs(5)), run: threshold_synthesis },
        Criterion { name: "adder and comparator oracles", limit: Some(Duration::from_secs(60)), run: arithmetic_oracles },
        Criterion { name: "complementary color", limit: None, run: complementary_color },
        Criterion { name: "saturation endpoints", limit: None, run: saturation_endpoints },
        Criterion { name: "pseudocolor pipeline", limit: None, run: pseudocolor_pipeline },
        Criterion { name: "sampled retrieval statistics", limit: None, run: sampled_statistics },
        Criterion { name: "quadrant sweep", limit: None, run: quadrant_sweep },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, c.limit) {
            if elapsed > limit {
                outcome = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {} ({detail}) [{elapsed:.2?}]", i + 1, c.name),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {} ({detail}) [{elapsed:.2?}]", i + 1, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
