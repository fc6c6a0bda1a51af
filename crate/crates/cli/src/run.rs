//! Command dispatch: builds problem objects from the parsed config, runs the
//! core routines, and renders versioned artifacts (schema: 1) as JSON or CSV.

use crate::args::{parse_range, AlphaArg, RawConfig, UsageError};
use crate::cache;
use henon_core::asymptotics::{bessel_ik, verify_superexp_decay, BesselPair, DecayReport, TailSource};
use henon_core::continuation::{sweep, verify_identity_suite, IdentityReport, SweepConfig, SweepResult};
use henon_core::linearization::{
    assemble, degeneracy_from_spectrum, eigen_extrapolated, full_morse_index, MeshParams,
    SpectrumResult, WeightKind,
};
use henon_core::nonlinearity::{check_assumptions, default_scan_grid, AssumptionReport, NonlinearitySpec};
use henon_core::radial_ode::{shoot_ground_state, ProblemSpec, RadialProfile, ShootOptions};
use henon_core::spectral_geometry::{
    branch_census, kernel_dimension, morse_index_one_sided, symmetric_morse_index_one_sided,
    BranchReport, Side,
};
use serde::{Deserialize, Serialize};

pub enum Outcome {
    /// Artifact bytes, one-line summary, optional output path.
    Done { bytes: Vec<u8>, summary: String, out: Option<String> },
}

#[derive(Debug)]
pub enum RunError {
    Usage(UsageError),
    Core(henon_core::Error),
    Io(std::io::Error),
}

impl From<henon_core::Error> for RunError {
    fn from(e: henon_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<UsageError> for RunError {
    fn from(e: UsageError) -> Self {
        RunError::Usage(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn require<T: Clone>(v: &Option<T>, what: &str) -> Result<T, RunError> {
    v.clone().ok_or_else(|| RunError::Usage(UsageError(format!("missing --{what}"))))
}

fn single_alpha(cfg: &RawConfig) -> Result<f64, RunError> {
    match parse_range(&require(&cfg.alpha, "alpha")?, "alpha")? {
        AlphaArg::Single(a) => Ok(a),
        _ => Err(RunError::Usage(UsageError("this command takes a single --alpha".into()))),
    }
}

fn format_of(cfg: &RawConfig) -> Result<Format, RunError> {
    match cfg.format.as_deref() {
        None | Some("json") => Ok(Format::Json),
        Some("csv") => Ok(Format::Csv),
        Some(other) => Err(RunError::Usage(UsageError(format!("unknown --format `{other}`")))),
    }
}

#[derive(PartialEq, Clone, Copy)]
pub enum Format {
    Json,
    Csv,
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, RunError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| RunError::Core(henon_core::Error::Numeric(format!("serialize: {e}"))))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn problem_from(cfg: &RawConfig, alpha: f64) -> Result<(ProblemSpec, ShootOptions), RunError> {
    let n = require(&cfg.n, "N")?;
    let f = NonlinearitySpec::parse(&require(&cfg.f, "F")?)?;
    let spec = ProblemSpec::new(n, alpha, f)?;
    let mut opts = ShootOptions::default();
    if let Some(r) = cfg.rtol {
        opts.rtol = r;
    }
    if let Some(t) = cfg.shoot_tol {
        opts.shoot_tol = t;
    }
    if let Some(t) = cfg.t_max {
        opts.t_max = Some(t);
    }
    if let Some(a) = cfg.a_cap {
        opts.a_cap = a;
    }
    if !(opts.rtol > 0.0 && opts.shoot_tol > 0.0) {
        return Err(RunError::Usage(UsageError("tolerances must be positive".into())));
    }
    Ok((spec, opts))
}

fn mesh_from(cfg: &RawConfig) -> MeshParams {
    let mut mesh = MeshParams::default();
    if let Some(nodes) = cfg.mesh {
        mesh.nodes = nodes;
    }
    mesh.t_end = cfg.t_end;
    mesh
}

/// Structural warnings attached to solves when the sampled assumption checks
/// fail; never a hard stop.
fn assumption_warnings(spec: &ProblemSpec) -> Vec<String> {
    let grid = default_scan_grid(100.0);
    match check_assumptions(&spec.f, spec.alpha, &grid) {
        Ok(rep) if rep.passes_core() => Vec::new(),
        Ok(rep) => rep
            .failures
            .iter()
            .map(|w| format!("{} fails near u = {:.6}: {}", w.check, w.u, w.detail))
            .collect(),
        Err(e) => vec![format!("assumption check errored: {e}")],
    }
}

#[derive(Serialize, Deserialize)]
pub struct SolveArtifact {
    pub schema: u32,
    pub command: String,
    pub f: String,
    pub n: u32,
    pub alpha: f64,
    pub k: f64,
    pub mass: f64,
    pub a_star: f64,
    pub delta_fit: f64,
    pub energy_grad: f64,
    pub energy_l2: f64,
    pub handoff_t: f64,
    pub grid_points: usize,
    pub rtol: f64,
    pub shoot_tol: f64,
    pub admissible: bool,
    pub warnings: Vec<String>,
}

fn solve_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let alpha = single_alpha(cfg)?;
    let (spec, opts) = problem_from(cfg, alpha)?;
    let profile = shoot_ground_state(&spec, &opts)?;
    let summary = format!(
        "solve N={} alpha={} F={}: a* = {:.12}, delta_fit = {:.6}, k = {:.6}",
        spec.n, spec.alpha, spec.f.source, profile.a_star, profile.delta_fit, spec.k
    );
    let bytes = match format_of(cfg)? {
        Format::Json => to_json(&SolveArtifact {
            schema: 1,
            command: "solve".into(),
            f: spec.f.source.clone(),
            n: spec.n,
            alpha: spec.alpha,
            k: spec.k,
            mass: spec.mass(),
            a_star: profile.a_star,
            delta_fit: profile.delta_fit,
            energy_grad: profile.energy_grad,
            energy_l2: profile.energy_l2,
            handoff_t: profile.handoff_t(),
            grid_points: profile.grid.len(),
            rtol: opts.rtol,
            shoot_tol: opts.shoot_tol,
            admissible: spec.is_admissible(),
            warnings: assumption_warnings(&spec),
        })?,
        Format::Csv => profile_csv(&profile),
    };
    Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
}

fn profile_csv(p: &RadialProfile) -> Vec<u8> {
    let mut s = String::from("t,V,dV\n");
    for i in 0..p.grid.len() {
        s.push_str(&format!("{},{},{}\n", p.grid[i], p.v[i], p.dv[i]));
    }
    s.into_bytes()
}

#[derive(Serialize, Deserialize)]
pub struct SpectrumArtifact {
    pub schema: u32,
    pub command: String,
    pub f: String,
    pub n: u32,
    pub alpha: f64,
    pub k: f64,
    pub which_weight: WeightKind,
    pub a_star: f64,
    /// Richardson-extrapolated values.
    pub eigenvalues: Vec<f64>,
    pub eigenvalues_fine: Vec<f64>,
    pub refinement: Vec<f64>,
    pub negative_count: usize,
    pub rayleigh_v_prime: f64,
    pub full_morse_index: u64,
    /// Near-zero count for the t^k weight (None when the band is ambiguous).
    pub n_alpha: Option<u8>,
    pub mesh_nodes: usize,
}

fn spectrum_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let alpha = single_alpha(cfg)?;
    let (spec, opts) = problem_from(cfg, alpha)?;
    let which = match cfg.weight.as_deref() {
        None | Some("km2") => WeightKind::Km2Weight,
        Some("k") => WeightKind::KWeight,
        Some(other) => return Err(RunError::Usage(UsageError(format!("unknown --weight `{other}`")))),
    };
    let n_eigs = cfg.n_eigs.unwrap_or(6);
    if n_eigs == 0 {
        return Err(RunError::Usage(UsageError("--n-eigs must be positive".into())));
    }
    let mesh = mesh_from(cfg);
    let profile = shoot_ground_state(&spec, &opts)?;
    let spectrum = eigen_extrapolated(&profile, &spec, &mesh, which, n_eigs)?;
    let op = assemble(&profile, &spec, &mesh)?;
    let dv = henon_core::linearization::profile_dv_at(&profile, &op.dof_nodes)?;
    let rayleigh = op.rayleigh(WeightKind::Km2Weight, &dv);
    let m_full = full_morse_index(&op, &spec)?;
    let n_alpha = if which == WeightKind::KWeight {
        degeneracy_from_spectrum(&spectrum).ok().map(|d| d.n_alpha)
    } else {
        eigen_extrapolated(&profile, &spec, &mesh, WeightKind::KWeight, 6)
            .ok()
            .and_then(|s| degeneracy_from_spectrum(&s).ok())
            .map(|d| d.n_alpha)
    };
    let summary = format!(
        "spectrum N={} alpha={} F={} weight={:?}: lambda1 = {:.8} (-k = {:.8}), negatives = {}, m = {}",
        spec.n,
        spec.alpha,
        spec.f.source,
        which,
        spectrum.eigenvalues[0],
        -spec.k,
        spectrum.negative_count,
        m_full
    );
    let bytes = match format_of(cfg)? {
        Format::Json => to_json(&SpectrumArtifact {
            schema: 1,
            command: "spectrum".into(),
            f: spec.f.source.clone(),
            n: spec.n,
            alpha: spec.alpha,
            k: spec.k,
            which_weight: which,
            a_star: profile.a_star,
            eigenvalues: spectrum.eigenvalues.clone(),
            eigenvalues_fine: spectrum.eigenvalues_fine.clone(),
            refinement: spectrum.refinement.clone(),
            negative_count: spectrum.negative_count,
            rayleigh_v_prime: rayleigh,
            full_morse_index: m_full,
            n_alpha,
            mesh_nodes: mesh.nodes,
        })?,
        Format::Csv => eigenvector_csv(&spectrum),
    };
    Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
}

fn eigenvector_csv(s: &SpectrumResult) -> Vec<u8> {
    let mut out = String::from("t");
    for j in 0..s.eigenvectors.len() {
        out.push_str(&format!(",v{}", j + 1));
    }
    out.push('\n');
    for (i, t) in s.dof_nodes.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for v in &s.eigenvectors {
            out.push_str(&format!(",{}", v[i]));
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[derive(Serialize, Deserialize)]
pub struct MorseRow {
    pub alpha: f64,
    pub m_below: u64,
    pub m_above: u64,
    pub m_sym_below: u64,
    pub m_sym_above: u64,
    pub is_bifurcation_value: bool,
    pub kernel_dim: u64,
}

#[derive(Serialize, Deserialize)]
pub struct MorseTableArtifact {
    pub schema: u32,
    pub command: String,
    pub n: u32,
    pub n_alpha: u8,
    pub rows: Vec<MorseRow>,
}

fn morse_table_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let n = require(&cfg.n, "N")?;
    let n_alpha = cfg.n_alpha.unwrap_or(0);
    let (lo, hi, step) = match parse_range(&require(&cfg.alpha, "alpha")?, "alpha")? {
        AlphaArg::Range { lo, hi, step: Some(step) } if step > 0.0 && lo <= hi => (lo, hi, step),
        AlphaArg::Single(a) => (a, a, 1.0),
        _ => return Err(RunError::Usage(UsageError("morse-table wants --alpha LO:HI:STEP".into()))),
    };
    let mut rows = Vec::new();
    let mut j = 0u64;
    loop {
        let alpha = lo + step * j as f64;
        if alpha > hi + 1e-12 {
            break;
        }
        let nearest = 2.0 * (alpha / 2.0).round();
        let at_even = nearest > 0.0 && (alpha - nearest).abs() < 1e-9;
        rows.push(MorseRow {
            alpha,
            m_below: morse_index_one_sided(alpha, n, Side::Below)?,
            m_above: morse_index_one_sided(alpha, n, Side::Above)?,
            m_sym_below: symmetric_morse_index_one_sided(alpha, n, Side::Below)?,
            m_sym_above: symmetric_morse_index_one_sided(alpha, n, Side::Above)?,
            is_bifurcation_value: at_even,
            kernel_dim: if at_even { kernel_dimension(nearest, n, n_alpha)? } else { n_alpha as u64 },
        });
        j += 1;
    }
    let summary = format!("morse-table N={n}: {} rows on [{lo}, {hi}]", rows.len());
    let bytes = match format_of(cfg)? {
        Format::Json => to_json(&MorseTableArtifact {
            schema: 1,
            command: "morse-table".into(),
            n,
            n_alpha,
            rows,
        })?,
        Format::Csv => {
            let mut s =
                String::from("alpha,m_below,m_above,m_sym_below,m_sym_above,is_bifurcation,kernel_dim\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.alpha,
                    r.m_below,
                    r.m_above,
                    r.m_sym_below,
                    r.m_sym_above,
                    r.is_bifurcation_value,
                    r.kernel_dim
                ));
            }
            s.into_bytes()
        }
    };
    Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
}

#[derive(Serialize, Deserialize)]
pub struct SweepArtifact {
    pub schema: u32,
    pub command: String,
    pub f: String,
    pub n: u32,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub samples: usize,
    pub mesh_nodes: usize,
    pub rtol: f64,
    pub shoot_tol: f64,
    pub cache_key: String,
    pub result: SweepResult,
    pub identity: IdentityReport,
}

fn sweep_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let n = require(&cfg.n, "N")?;
    let f = NonlinearitySpec::parse(&require(&cfg.f, "F")?)?;
    let (lo, hi) = match parse_range(&require(&cfg.alpha, "alpha")?, "alpha")? {
        AlphaArg::Range { lo, hi, step: None } => (lo, hi),
        AlphaArg::Range { lo, hi, step: Some(_) } => (lo, hi),
        AlphaArg::Single(a) => (a, a),
    };
    if lo > hi {
        return Err(RunError::Usage(UsageError(format!("--alpha range {lo}:{hi} has lower > upper"))));
    }
    let samples = cfg.samples.unwrap_or(29);
    let mut sc = SweepConfig::new(n, f, lo, hi, samples);
    sc.mesh = mesh_from(cfg);
    if let Some(r) = cfg.rtol {
        sc.shoot.rtol = r;
    }
    if let Some(t) = cfg.shoot_tol {
        sc.shoot.shoot_tol = t;
    }

    // Cache key over the canonical job description.
    let key_src = serde_json::to_vec(&(
        "sweep", n, &sc.f.source, lo, hi, samples, sc.mesh.nodes, sc.mesh.t_end, sc.shoot.rtol,
        sc.shoot.shoot_tol,
    ))
    .expect("key serialization");
    let key = cache::fnv1a64(&key_src);
    let dir = cache::cache_dir(cfg.cache_dir.as_deref());
    let path = cache::cache_path(&dir, key);
    let no_cache = cfg.no_cache.unwrap_or(false);

    if !no_cache {
        if let Some(bytes) = cache::read(&path) {
            let summary = format!("sweep N={n} [{lo}, {hi}] x{samples}: cached ({})", path.display());
            return Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() });
        }
    }

    let result = sweep(&sc);
    let identity = verify_identity_suite(&sc, &result, 1e-4);
    let ok = result.samples.iter().filter(|s| s.error.is_none()).count();
    let summary = format!(
        "sweep N={n} [{lo}, {hi}] x{samples}: {ok}/{} solved, {} jumps, identity pass = {}",
        result.samples.len(),
        result.detected_jumps.len(),
        identity.pass()
    );
    let artifact = SweepArtifact {
        schema: 1,
        command: "sweep".into(),
        f: sc.f.source.clone(),
        n,
        alpha_lo: lo,
        alpha_hi: hi,
        samples,
        mesh_nodes: sc.mesh.nodes,
        rtol: sc.shoot.rtol,
        shoot_tol: sc.shoot.shoot_tol,
        cache_key: format!("{key:016x}"),
        result,
        identity,
    };
    let bytes = to_json(&artifact)?;
    if !no_cache {
        cache::write_atomic(&path, &bytes)?;
    }
    Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
}

#[derive(Serialize, Deserialize)]
pub struct BesselArtifact {
    pub schema: u32,
    pub command: String,
    pub pair: BesselPair,
}

fn bessel_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let nu = require(&cfg.nu, "nu")?;
    match parse_range(&require(&cfg.s, "s")?, "s")? {
        AlphaArg::Single(s) => {
            let pair = bessel_ik(nu, s)?;
            let summary = format!(
                "bessel nu={nu} s={s}: I = {:.12e}, K = {:.12e} [{:?}]",
                pair.i, pair.k, pair.regime
            );
            let bytes = to_json(&BesselArtifact { schema: 1, command: "bessel".into(), pair })?;
            Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
        }
        AlphaArg::Range { lo, hi, step } => {
            let step = step.ok_or_else(|| {
                RunError::Usage(UsageError("bessel range wants --s LO:HI:STEP".into()))
            })?;
            if !(step > 0.0 && lo > 0.0 && lo <= hi) {
                return Err(RunError::Usage(UsageError("bad --s range".into())));
            }
            let mut out = String::from("s,I,K\n");
            let mut j = 0u64;
            loop {
                let s = lo + step * j as f64;
                if s > hi + 1e-12 {
                    break;
                }
                let p = bessel_ik(nu, s)?;
                out.push_str(&format!("{},{},{}\n", s, p.i, p.k));
                j += 1;
            }
            let summary = format!("bessel nu={nu} s in [{lo}, {hi}]: {j} rows");
            Ok(Outcome::Done { bytes: out.into_bytes(), summary, out: cfg.out.clone() })
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct DecayArtifact {
    pub schema: u32,
    pub command: String,
    pub h: String,
    pub alpha: f64,
    pub m: f64,
    pub n: u32,
    pub report: DecayReport,
}

fn verify_decay_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let h_id = require(&cfg.h, "h")?;
    let h = TailSource::parse(&h_id)?;
    let alpha = single_alpha(cfg)?;
    let m = cfg.m.unwrap_or(1.0);
    let n = cfg.n.unwrap_or(3);
    let grid = match cfg.t.as_deref() {
        None => (1..=80).map(|j| 0.5 * j as f64).collect::<Vec<f64>>(),
        Some(spec) => match parse_range(spec, "t")? {
            AlphaArg::Range { lo, hi, step: Some(step) } if lo > 0.0 && step > 0.0 && lo < hi => {
                let mut g = Vec::new();
                let mut t = lo;
                while t <= hi + 1e-12 {
                    g.push(t);
                    t += step;
                }
                g
            }
            _ => return Err(RunError::Usage(UsageError("--t wants LO:HI:STEP with 0 < LO < HI".into()))),
        },
    };
    let report = verify_superexp_decay(h, alpha, m, n, &grid)?;
    let summary = format!(
        "verify-decay h={h_id} alpha={alpha} m={m}: last-decade ratio = {:.3}, monotone = {}",
        report.last_decade_ratio, report.monotone_last_decade
    );
    let bytes = match format_of(cfg)? {
        Format::Json => to_json(&DecayArtifact {
            schema: 1,
            command: "verify-decay".into(),
            h: h_id,
            alpha,
            m,
            n,
            report,
        })?,
        Format::Csv => {
            let mut s = String::from("t,Z,weighted\n");
            for i in 0..report.t.len() {
                s.push_str(&format!("{},{},{}\n", report.t[i], report.z[i], report.weighted[i]));
            }
            s.into_bytes()
        }
    };
    Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
}

#[derive(Serialize, Deserialize)]
pub struct CensusArtifact {
    pub schema: u32,
    pub command: String,
    pub n: u32,
    pub report: BranchReport,
}

fn census_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let n = require(&cfg.n, "N")?;
    let alpha = single_alpha(cfg)?;
    let report = branch_census(alpha, n)?;
    let groups: Vec<String> = report.groups.iter().map(|g| g.to_string()).collect();
    let summary = format!(
        "census N={n} alpha={alpha}: {} branch(es): {}",
        report.branch_count,
        groups.join(", ")
    );
    let bytes = to_json(&CensusArtifact { schema: 1, command: "census".into(), n, report })?;
    Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
}

#[derive(Serialize, Deserialize)]
pub struct CheckFArtifact {
    pub schema: u32,
    pub command: String,
    pub f: String,
    pub alpha: f64,
    pub u_max: f64,
    pub report: AssumptionReport,
}

fn check_f_cmd(cfg: &RawConfig) -> Result<Outcome, RunError> {
    let f_src = require(&cfg.f, "F")?;
    let f = NonlinearitySpec::parse(&f_src)?;
    let alpha = match &cfg.alpha {
        Some(_) => single_alpha(cfg)?,
        None => 0.0,
    };
    let u_max = cfg.u_max.unwrap_or(100.0);
    if !(u_max > 0.0) {
        return Err(RunError::Usage(UsageError("--u-max must be positive".into())));
    }
    let grid = default_scan_grid(u_max);
    let report = check_assumptions(&f, alpha, &grid)?;
    let summary = format!(
        "check-F {f_src}: theta = {:?}, phi = {:?}, core assumptions pass = {}",
        report.theta,
        report.phi,
        report.passes_core()
    );
    let bytes = to_json(&CheckFArtifact {
        schema: 1,
        command: "check-F".into(),
        f: f_src,
        alpha,
        u_max,
        report,
    })?;
    Ok(Outcome::Done { bytes, summary, out: cfg.out.clone() })
}

pub fn run(cfg: &RawConfig) -> Result<Outcome, RunError> {
    match cfg.command.as_deref() {
        Some("solve") => solve_cmd(cfg),
        Some("spectrum") => spectrum_cmd(cfg),
        Some("morse-table") => morse_table_cmd(cfg),
        Some("sweep") => sweep_cmd(cfg),
        Some("bessel") => bessel_cmd(cfg),
        Some("verify-decay") => verify_decay_cmd(cfg),
        Some("census") => census_cmd(cfg),
        Some("check-F") => check_f_cmd(cfg),
        Some(other) => Err(RunError::Usage(UsageError(format!("unknown command `{other}`")))),
        None => Err(RunError::Usage(UsageError("missing command".into()))),
    }
}
