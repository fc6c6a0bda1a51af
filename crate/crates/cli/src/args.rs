//! Flag parsing and config-file merging. Flags override file values; unknown
//! keys are rejected in both.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub command: Option<String>,
    pub n: Option<u32>,
    /// Single value "2.0" or range "lo:hi[:step]".
    pub alpha: Option<String>,
    pub f: Option<String>,
    pub rtol: Option<f64>,
    pub shoot_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub a_cap: Option<f64>,
    pub mesh: Option<usize>,
    pub t_end: Option<f64>,
    pub n_eigs: Option<usize>,
    pub weight: Option<String>,
    pub nu: Option<f64>,
    pub s: Option<String>,
    pub h: Option<String>,
    pub m: Option<f64>,
    pub t: Option<String>,
    pub samples: Option<usize>,
    pub u_max: Option<f64>,
    pub n_alpha: Option<u8>,
    pub format: Option<String>,
    pub out: Option<String>,
    pub cache_dir: Option<String>,
    pub no_cache: Option<bool>,
    /// Reserved: every algorithm is deterministic; accepted for interface
    /// stability.
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const USAGE: &str = "usage: henon <command> [flags]

commands:
  solve         ground state of the reduced equation   (--N --alpha --F)
  spectrum      weighted eigenvalues around a solution (--N --alpha --F [--weight k|km2] [--n-eigs] [--mesh] [--T])
  morse-table   closed-form index table over alpha     (--N --alpha LO:HI:STEP)
  sweep         alpha sweep with jump detection        (--N --F --alpha LO:HI --samples)
  bessel        modified Bessel I/K values             (--nu --s VAL | --s LO:HI:STEP)
  verify-decay  weighted tail decay of forced solution (--h s2|slog|s32 --alpha --m [--N] [--t LO:HI:STEP])
  census        nonradial branch census at even alpha  (--N --alpha)
  check-F       assumption checks for a nonlinearity   (--F [--alpha] [--u-max])

common flags:
  --config FILE   JSON config; explicit flags override it
  --format FMT    json (default) or csv
  --out PATH      write the artifact to a file (atomic) instead of stdout
  --cache-dir P   sweep cache directory (or HENON_CACHE_DIR)
  --no-cache      bypass the sweep cache
  --rtol --shoot-tol --t-max --a-cap --mesh --T --n-eigs --n-alpha --m --nu --u-max --samples --seed
";

fn set_field(cfg: &mut RawConfig, key: &str, value: Option<String>) -> Result<bool, UsageError> {
    // Returns whether the flag consumed a value.
    let need = |v: Option<String>| -> Result<String, UsageError> {
        v.ok_or_else(|| UsageError(format!("flag --{key} needs a value")))
    };
    match key {
        "N" => cfg.n = Some(parse_num(&need(value)?, "N")?),
        "alpha" => cfg.alpha = Some(need(value)?),
        "F" => cfg.f = Some(need(value)?),
        "rtol" => cfg.rtol = Some(parse_num(&need(value)?, "rtol")?),
        "shoot-tol" => cfg.shoot_tol = Some(parse_num(&need(value)?, "shoot-tol")?),
        "t-max" => cfg.t_max = Some(parse_num(&need(value)?, "t-max")?),
        "a-cap" => cfg.a_cap = Some(parse_num(&need(value)?, "a-cap")?),
        "mesh" => cfg.mesh = Some(parse_num(&need(value)?, "mesh")?),
        "T" => cfg.t_end = Some(parse_num(&need(value)?, "T")?),
        "n-eigs" => cfg.n_eigs = Some(parse_num(&need(value)?, "n-eigs")?),
        "weight" => cfg.weight = Some(need(value)?),
        "nu" => cfg.nu = Some(parse_num(&need(value)?, "nu")?),
        "s" => cfg.s = Some(need(value)?),
        "h" => cfg.h = Some(need(value)?),
        "m" => cfg.m = Some(parse_num(&need(value)?, "m")?),
        "t" => cfg.t = Some(need(value)?),
        "samples" => cfg.samples = Some(parse_num(&need(value)?, "samples")?),
        "u-max" => cfg.u_max = Some(parse_num(&need(value)?, "u-max")?),
        "n-alpha" => cfg.n_alpha = Some(parse_num(&need(value)?, "n-alpha")?),
        "format" => cfg.format = Some(need(value)?),
        "out" => cfg.out = Some(need(value)?),
        "cache-dir" => cfg.cache_dir = Some(need(value)?),
        "no-cache" => {
            cfg.no_cache = Some(true);
            return Ok(false);
        }
        "seed" => cfg.seed = Some(parse_num(&need(value)?, "seed")?),
        other => return Err(UsageError(format!("unknown flag --{other}"))),
    }
    Ok(true)
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, UsageError> {
    s.parse().map_err(|_| UsageError(format!("bad value `{s}` for --{what}")))
}

/// Parses argv (without the binary name). A `--config FILE` is loaded first
/// and every explicit flag overrides it.
pub fn parse(args: &[String]) -> Result<RawConfig, UsageError> {
    if args.is_empty() {
        return Err(UsageError("missing command".into()));
    }
    let mut flags = RawConfig::default();
    let mut config_path: Option<String> = None;
    let command = args[0].clone();
    if command.starts_with('-') {
        return Err(UsageError(format!("expected a command, got `{command}`")));
    }
    let mut i = 1;
    while i < args.len() {
        let arg = &args[i];
        let Some(key) = arg.strip_prefix("--") else {
            return Err(UsageError(format!("unexpected argument `{arg}`")));
        };
        if key == "config" {
            let v = args
                .get(i + 1)
                .ok_or_else(|| UsageError("flag --config needs a value".into()))?;
            config_path = Some(v.clone());
            i += 2;
            continue;
        }
        let value = if key == "no-cache" { None } else { args.get(i + 1).cloned() };
        let consumed = set_field(&mut flags, key, value)?;
        i += if consumed { 2 } else { 1 };
    }

    let mut cfg = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| UsageError(format!("cannot read config {path}: {e}")))?;
            serde_json::from_str::<RawConfig>(&text)
                .map_err(|e| UsageError(format!("bad config {path}: {e}")))?
        }
        None => RawConfig::default(),
    };
    merge(&mut cfg, flags);
    if let Some(file_cmd) = &cfg.command {
        if file_cmd != &command {
            return Err(UsageError(format!(
                "config file says command `{file_cmd}` but `{command}` was given"
            )));
        }
    }
    cfg.command = Some(command);
    Ok(cfg)
}

macro_rules! take {
    ($dst:expr, $src:expr, $($field:ident),+) => {
        $(if $src.$field.is_some() { $dst.$field = $src.$field; })+
    };
}

fn merge(base: &mut RawConfig, over: RawConfig) {
    take!(
        base, over, command, n, alpha, f, rtol, shoot_tol, t_max, a_cap, mesh, t_end, n_eigs,
        weight, nu, s, h, m, t, samples, u_max, n_alpha, format, out, cache_dir, no_cache, seed
    );
}

/// "lo:hi:step" or "lo:hi" or a single number.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaArg {
    Single(f64),
    Range { lo: f64, hi: f64, step: Option<f64> },
}

pub fn parse_range(s: &str, what: &str) -> Result<AlphaArg, UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| -> Result<f64, UsageError> {
        x.parse().map_err(|_| UsageError(format!("bad number `{x}` in --{what}")))
    };
    match parts.as_slice() {
        [one] => Ok(AlphaArg::Single(num(one)?)),
        [lo, hi] => Ok(AlphaArg::Range { lo: num(lo)?, hi: num(hi)?, step: None }),
        [lo, hi, step] => Ok(AlphaArg::Range { lo: num(lo)?, hi: num(hi)?, step: Some(num(step)?) }),
        _ => Err(UsageError(format!("bad range `{s}` for --{what} (want lo:hi[:step])"))),
    }
}
