//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with --nocapture to see them). Numeric tolerances are pinned here.

use henon_core::asymptotics::{bessel_ik, verify_superexp_decay, TailSource};
use henon_core::continuation::{sweep, verify_identity_suite, SweepConfig, SweepResult};
use henon_core::linearization::{
    assemble_refined, degeneracy, eigen_extrapolated, profile_dv_at, MeshParams, WeightKind,
};
use henon_core::nonlinearity::NonlinearitySpec;
use henon_core::radial_ode::{k_of_alpha, shoot_ground_state, ProblemSpec, RadialProfile, ShootOptions};
use henon_core::spectral_geometry::{
    degeneracy_condition_roots, harmonic_dim_oracle, multiplicity, symmetric_morse_index_one_sided,
    Side,
};
use std::sync::OnceLock;
use std::time::Instant;

struct Case {
    n: u32,
    p: f64,
    alpha: f64,
    spec: ProblemSpec,
    profile: RadialProfile,
}

/// The (N, p, alpha) grid of criterion 1, admissible combinations solved
/// once and shared across criteria 1, 7 and 9.
fn solved_cases() -> &'static (Vec<Case>, f64) {
    static CASES: OnceLock<(Vec<Case>, f64)> = OnceLock::new();
    CASES.get_or_init(|| {
        let start = Instant::now();
        let mut cases = Vec::new();
        let mut skipped = 0;
        for &n in &[3u32, 4, 5] {
            for &p in &[2.0f64, 3.0] {
                for &alpha in &[0.5f64, 1.0, 1.5, 2.5, 3.3] {
                    let spec =
                        ProblemSpec::new(n, alpha, NonlinearitySpec::power(p).unwrap()).unwrap();
                    if !spec.is_admissible() {
                        skipped += 1;
                        continue;
                    }
                    let profile = shoot_ground_state(&spec, &ShootOptions::default())
                        .unwrap_or_else(|e| panic!("solve N={n} p={p} alpha={alpha}: {e}"));
                    cases.push(Case { n, p, alpha, spec, profile });
                }
            }
        }
        // N = 5, p = 3 needs alpha > 1 (strictly): alpha = 0.5 and 1.0 drop.
        assert_eq!(skipped, 2, "expected exactly the two N=5, p=3 low-alpha exclusions");
        (cases, start.elapsed().as_secs_f64())
    })
}

fn verdict(id: u32, name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("ACCEPTANCE {id:2} {name}: PASS");
    } else {
        println!("ACCEPTANCE {id:2} {name}: FAIL");
        for f in failures {
            println!("    {f}");
        }
        panic!("criterion {id} failed with {} violation(s)", failures.len());
    }
}

#[test]
fn criterion_01_spectral_identity() {
    let start = Instant::now();
    let (cases, solve_time) = solved_cases();
    let mut failures = Vec::new();
    let mesh = MeshParams::default();
    for case in cases {
        let s = eigen_extrapolated(&case.profile, &case.spec, &mesh, WeightKind::Km2Weight, 1)
            .unwrap();
        let rel = (s.eigenvalues[0] + case.spec.k).abs() / case.spec.k;
        if rel > 1e-4 {
            failures.push(format!(
                "N={} p={} alpha={}: lambda1 = {} vs -k = {}, rel {rel:.2e}",
                case.n, case.p, case.alpha, s.eigenvalues[0], -case.spec.k
            ));
        }
        // Eigenvector against the B-normalized V' trace.
        let op = assemble_refined(&case.profile, &case.spec, &mesh).unwrap();
        let mut w = profile_dv_at(&case.profile, &op.dof_nodes).unwrap();
        let norm =
            w.iter().zip(&op.b_km2).map(|(x, b)| b * x * x).sum::<f64>().sqrt();
        for x in &mut w {
            *x /= norm;
        }
        let mut v = s.eigenvectors[0].clone();
        let dot: f64 = v.iter().zip(&w).zip(&op.b_km2).map(|((a, b), m)| m * a * b).sum();
        if dot < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        let err: f64 = v
            .iter()
            .zip(&w)
            .zip(&op.b_km2)
            .map(|((a, b), m)| m * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if err > 1e-3 {
            failures.push(format!(
                "N={} p={} alpha={}: eigenvector L2(km2) error {err:.2e}",
                case.n, case.p, case.alpha
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64() + solve_time;
    if elapsed > 60.0 {
        failures.push(format!("runtime {elapsed:.1} s exceeds the 60 s budget"));
    }
    println!(
        "    [criterion 1: {} admissible cases, {elapsed:.1} s including solves]",
        cases.len()
    );
    verdict(1, "spectral identity lambda1 = -k", &failures);
}

fn sweep_29() -> &'static (SweepConfig, SweepResult, f64) {
    static SWEEP: OnceLock<(SweepConfig, SweepResult, f64)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let cfg = SweepConfig::new(3, NonlinearitySpec::power(3.0).unwrap(), 0.2, 5.8, 29);
        let result = sweep(&cfg);
        (cfg, result, start.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_02_morse_index_agreement_and_jumps() {
    let (cfg, result, elapsed) = sweep_29();
    let mut failures = Vec::new();
    assert_eq!(result.samples.len(), 29);
    for s in &result.samples {
        if let Some(e) = &s.error {
            failures.push(format!("alpha {}: solve failed: {e}", s.alpha));
            continue;
        }
        if s.m_numeric != s.m_closed {
            failures.push(format!(
                "alpha {}: m_numeric {:?} != m_closed {:?}",
                s.alpha, s.m_numeric, s.m_closed
            ));
        }
    }
    let expected = [(2.0, 5i64), (4.0, 7i64)];
    if result.detected_jumps.len() != expected.len() {
        failures.push(format!("expected 2 jumps, found {:?}", result.detected_jumps));
    }
    for (jump, (center, size)) in result.detected_jumps.iter().zip(expected.iter()) {
        if !(jump.alpha_lo >= center - 0.2 - 1e-12 && jump.alpha_hi <= center + 0.2 + 1e-12) {
            failures.push(format!(
                "jump ({}, {}) outside ({} +- 0.2)",
                jump.alpha_lo, jump.alpha_hi, center
            ));
        }
        if jump.size != *size {
            failures.push(format!("jump at {center}: size {} vs {size}", jump.size));
        }
    }
    let identity = verify_identity_suite(cfg, result, 1e-4);
    if !identity.pass() {
        failures.push(format!("identity suite: {:?}", identity.details));
    }
    if *elapsed > 120.0 {
        failures.push(format!("runtime {elapsed:.1} s exceeds the 120 s budget"));
    }
    println!("    [criterion 2: 29 samples in {elapsed:.1} s]");
    verdict(2, "numeric Morse index equals closed form with predicted jumps", &failures);
}

#[test]
fn criterion_03_multiplicity_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 3..=7u32 {
        for i in 0..=6u32 {
            let formula = multiplicity(i, n).unwrap();
            let oracle = harmonic_dim_oracle(i, n).unwrap();
            if formula != oracle {
                failures.push(format!("i={i}, N={n}: formula {formula} vs oracle {oracle}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > 5.0 {
        failures.push(format!("runtime {elapsed:.2} s exceeds the 5 s budget"));
    }
    verdict(3, "spherical-harmonic multiplicity equals brute-force nullity", &failures);
}

#[test]
fn criterion_04_degeneracy_values_scan() {
    let mut failures = Vec::new();
    for n in [3u32, 5] {
        let roots = degeneracy_condition_roots(n, 12, 1e-3, 20.0, 1e-3).unwrap();
        for (i, alpha) in &roots {
            let nearest = 2.0 * (alpha / 2.0).round();
            if nearest <= 0.0 || (alpha - nearest).abs() >= 1e-9 {
                failures.push(format!("N={n}: off-even root at alpha = {alpha} (i = {i})"));
            }
            if (alpha - 2.0 * (*i as f64 - 1.0)).abs() >= 1e-9 {
                failures.push(format!("N={n}: root for i={i} at {alpha}, want {}", 2.0 * (*i as f64 - 1.0)));
            }
        }
        // Every even value 2, 4, ..., 20 is hit by exactly one index.
        let mut expected: Vec<f64> = (1..=10).map(|j| 2.0 * j as f64).collect();
        expected.retain(|e| *e < 20.0);
        for e in expected {
            let count = roots.iter().filter(|(_, a)| (a - e).abs() < 1e-9).count();
            if count != 1 {
                failures.push(format!("N={n}: even value {e} found {count} times"));
            }
        }
    }
    verdict(4, "degeneracy condition holds only at even alpha", &failures);
}

#[test]
fn criterion_05_symmetric_jump_is_one() {
    let mut failures = Vec::new();
    for n in [3u32, 4, 5] {
        for i in 1..=5u32 {
            let alpha = 2.0 * i as f64;
            let below = symmetric_morse_index_one_sided(alpha, n, Side::Below).unwrap();
            let above = symmetric_morse_index_one_sided(alpha, n, Side::Above).unwrap();
            if above - below != 1 {
                failures.push(format!("N={n}, alpha={alpha}: jump {} != 1", above - below));
            }
        }
    }
    verdict(5, "symmetric Morse index jumps by one at each even alpha", &failures);
}

/// Frozen from the rtol = 1e-12 bisection oracle before this test was
/// sealed.
const A_STAR_PIN: f64 = 4.3373876799756506;

#[test]
fn criterion_06_shooting_self_consistency() {
    let mut failures = Vec::new();
    let spec = ProblemSpec::new(3, 0.0, NonlinearitySpec::power(3.0).unwrap()).unwrap();
    let coarse = shoot_ground_state(&spec, &ShootOptions { rtol: 1e-10, ..Default::default() })
        .unwrap()
        .a_star;
    let fine = shoot_ground_state(&spec, &ShootOptions { rtol: 1e-12, ..Default::default() })
        .unwrap()
        .a_star;
    let rel = (coarse - fine).abs() / fine;
    if rel > 1e-8 {
        failures.push(format!("a*({coarse}) vs a*({fine}): rel {rel:.2e} > 1e-8"));
    }
    let pin_rel = (fine - A_STAR_PIN).abs() / A_STAR_PIN;
    if pin_rel > 1e-9 {
        failures.push(format!("a* = {fine} drifted from the pinned {A_STAR_PIN} by {pin_rel:.2e}"));
    }
    verdict(6, "a* agrees across integrator tolerances and matches the pin", &failures);
}

#[test]
fn criterion_07_decay_rate_and_radial_bound() {
    let (cases, _) = solved_cases();
    let mut failures = Vec::new();
    for case in cases {
        let sm = case.spec.mass().sqrt();
        let d = case.profile.delta_fit;
        if !(d >= sm - 0.05 && d <= sm + 0.01) {
            failures.push(format!(
                "N={} p={} alpha={}: delta_fit = {d} outside [{}, {}]",
                case.n,
                case.p,
                case.alpha,
                sm - 0.05,
                sm + 0.01
            ));
        }
        // Pointwise bound V(t) <= (k-1)^(-1/2) ||t^(k/2) V'|| t^(-(k-1)/2).
        let c = case.profile.energy_grad.sqrt() / (case.spec.k - 1.0).sqrt();
        for i in 1..case.profile.grid.len() {
            let t = case.profile.grid[i];
            if case.profile.v[i] > c * t.powf(-(case.spec.k - 1.0) / 2.0) * (1.0 + 1e-9) {
                failures.push(format!(
                    "N={} p={} alpha={}: radial bound violated at t = {t}",
                    case.n, case.p, case.alpha
                ));
                break;
            }
        }
    }
    verdict(7, "fitted decay rate in window and pointwise radial bound", &failures);
}

#[test]
fn criterion_08_bessel_machinery() {
    let mut failures = Vec::new();
    // Wronskian grid.
    let svals: Vec<f64> = (0..60).map(|j| 0.1 * (200.0f64).powf(j as f64 / 59.0)).collect();
    for &nu in &[0.5, 1.0, 1.5, 2.3, 4.0] {
        for &s in &svals {
            let p = bessel_ik(nu, s).unwrap();
            let w = p.wronskian();
            let rel = (w + 1.0 / s).abs() * s;
            if rel > 1e-10 {
                failures.push(format!("wronskian nu={nu} s={s:.3}: rel {rel:.2e}"));
            }
        }
    }
    // Half-integer closed forms.
    for &s in &[0.2, 1.0, 3.0, 10.0, 19.0, 30.0] {
        let p = bessel_ik(0.5, s).unwrap();
        let i_exact = (2.0 / (std::f64::consts::PI * s)).sqrt() * s.sinh();
        let k_exact = (std::f64::consts::PI / (2.0 * s)).sqrt() * (-s).exp();
        if (p.i - i_exact).abs() / i_exact > 1e-9 || (p.k - k_exact).abs() / k_exact > 1e-9 {
            failures.push(format!("half-integer forms at s={s}: I {} vs {i_exact}, K {} vs {k_exact}", p.i, p.k));
        }
    }
    // Weighted tail decay of the forced solution.
    let grid: Vec<f64> = (1..=80).map(|j| 0.5 * j as f64).collect();
    let rep = verify_superexp_decay(TailSource::Square, 2.0, 1.0, 3, &grid).unwrap();
    if rep.last_decade_ratio < 10.0 {
        failures.push(format!("weighted tail ratio {} < 10", rep.last_decade_ratio));
    }
    if !rep.monotone_last_decade {
        failures.push("weighted tail not monotone over the last decade".into());
    }
    verdict(8, "Bessel identities and super-exponential tail decay", &failures);
}

#[test]
fn criterion_09_nondegeneracy() {
    let (cases, _) = solved_cases();
    let mut failures = Vec::new();
    for case in cases {
        match degeneracy(&case.profile, &case.spec, &MeshParams::default()) {
            Ok(d) => {
                if d.n_alpha != 0 || d.unresolved {
                    failures.push(format!(
                        "N={} p={} alpha={}: n_alpha = {}, unresolved = {}",
                        case.n, case.p, case.alpha, d.n_alpha, d.unresolved
                    ));
                }
            }
            Err(e) => failures.push(format!(
                "N={} p={} alpha={}: degeneracy failed: {e}",
                case.n, case.p, case.alpha
            )),
        }
    }
    verdict(9, "every admissible catalogue case is nondegenerate", &failures);
}

#[test]
fn criterion_10_determinism_and_schema() {
    let mut failures = Vec::new();
    let bin = env!("CARGO_BIN_EXE_henon");
    let tmp = std::env::temp_dir().join(format!("henon-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let run = |args: &[&str]| -> (Vec<u8>, std::process::ExitStatus) {
        let out = std::process::Command::new(bin)
            .args(args)
            .env("HENON_CACHE_DIR", tmp.join("cache"))
            .output()
            .expect("spawn henon");
        (out.stdout, out.status)
    };

    let jobs: Vec<Vec<&str>> = vec![
        vec!["solve", "--N", "3", "--alpha", "2", "--F", "pow:p=3"],
        vec!["census", "--N", "4", "--alpha", "6"],
        vec!["morse-table", "--N", "3", "--alpha", "0.5:9.5:0.5"],
        vec!["bessel", "--nu", "1.3", "--s", "2.5"],
        vec![
            "sweep", "--N", "3", "--F", "pow:p=3", "--alpha", "1.6:2.4", "--samples", "3",
            "--mesh", "1200", "--no-cache",
        ],
        vec!["check-F", "--F", "pow:p=3"],
        vec!["verify-decay", "--h", "s2", "--alpha", "2", "--m", "1", "--t", "1:30:1"],
    ];
    for job in &jobs {
        let (a, st_a) = run(job);
        let (b, st_b) = run(job);
        if !st_a.success() || !st_b.success() {
            failures.push(format!("{job:?}: exit {st_a:?} / {st_b:?}"));
            continue;
        }
        if a != b {
            failures.push(format!("{job:?}: repeated runs differ ({} vs {} bytes)", a.len(), b.len()));
        }
        // Schema round-trip for the JSON artifacts.
        if job[0] != "morse-table" || job.contains(&"--format") {
            // morse-table default is JSON here; parse everything JSON-shaped.
        }
        let text = String::from_utf8_lossy(&a);
        if text.trim_start().starts_with('{') {
            let parsed: Result<serde_json::Value, _> = serde_json::from_str(&text);
            match parsed {
                Ok(v) => {
                    if v.get("schema").and_then(|s| s.as_u64()) != Some(1) {
                        failures.push(format!("{job:?}: missing schema field"));
                    }
                }
                Err(e) => failures.push(format!("{job:?}: invalid JSON: {e}")),
            }
        }
    }

    // Typed round-trips through the emitting structs.
    use henon_cli::run::{
        BesselArtifact, CensusArtifact, CheckFArtifact, DecayArtifact, MorseTableArtifact,
        SolveArtifact, SweepArtifact,
    };
    let typed = |args: &[&str], parse: &dyn Fn(&[u8]) -> bool| {
        let (bytes, st) = run(args);
        st.success() && parse(&bytes)
    };
    let checks: Vec<(Vec<&str>, Box<dyn Fn(&[u8]) -> bool>)> = vec![
        (
            vec!["solve", "--N", "3", "--alpha", "2", "--F", "pow:p=3"],
            Box::new(|b: &[u8]| serde_json::from_slice::<SolveArtifact>(b).is_ok()),
        ),
        (
            vec!["census", "--N", "5", "--alpha", "4"],
            Box::new(|b: &[u8]| serde_json::from_slice::<CensusArtifact>(b).is_ok()),
        ),
        (
            vec!["morse-table", "--N", "4", "--alpha", "1:5:1"],
            Box::new(|b: &[u8]| serde_json::from_slice::<MorseTableArtifact>(b).is_ok()),
        ),
        (
            vec!["bessel", "--nu", "0.5", "--s", "2"],
            Box::new(|b: &[u8]| serde_json::from_slice::<BesselArtifact>(b).is_ok()),
        ),
        (
            vec!["check-F", "--F", "rat:q=3,p=2,m=1"],
            Box::new(|b: &[u8]| serde_json::from_slice::<CheckFArtifact>(b).is_ok()),
        ),
        (
            vec!["verify-decay", "--h", "s2", "--alpha", "2", "--m", "1", "--t", "1:20:1"],
            Box::new(|b: &[u8]| serde_json::from_slice::<DecayArtifact>(b).is_ok()),
        ),
        (
            vec![
                "sweep", "--N", "3", "--F", "pow:p=3", "--alpha", "1.6:2.4", "--samples", "3",
                "--mesh", "1200",
            ],
            Box::new(|b: &[u8]| serde_json::from_slice::<SweepArtifact>(b).is_ok()),
        ),
    ];
    for (args, parse) in &checks {
        if !typed(args, parse.as_ref()) {
            failures.push(format!("{args:?}: artifact does not round-trip into its type"));
        }
    }

    // Cached and fresh sweep runs must be byte-identical.
    let sweep_job = [
        "sweep", "--N", "3", "--F", "pow:p=3", "--alpha", "1.6:2.4", "--samples", "3",
        "--mesh", "1200",
    ];
    let (fresh, _) = run(&sweep_job);
    let (cached, _) = run(&sweep_job);
    if fresh != cached {
        failures.push("cached sweep differs from fresh sweep".into());
    }
    std::fs::remove_dir_all(&tmp).ok();
    verdict(10, "byte-identical reruns and schema round-trip", &failures);
}
