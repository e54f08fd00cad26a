//! Resolution of `--map` arguments: built-in names, on-the-fly specs, or files.
//!
//! Simplification maps:
//!   builtin:rk            the R_k family over equality
//!   simp:<S>,<T>          computed from two language specs (cached)
//!   <path>                a map file
//!
//! Branching maps:
//!   builtin:rcc5-split:<r>  the PP split of RCC-5 into its tractable fragment
//!   builtin:delta           the radius-3 delta map
//!   triple:<S>,<T>,<r>      synthesized from the languages' basic definitions
//!   <path>                  a map dump

use std::path::PathBuf;

use shortcut_csp::branchmap::BranchingMap;
use shortcut_csp::language::{Language, DEFAULT_ARITY_CAP};
use shortcut_csp::oracle::Oracle;
use shortcut_csp::simpmap::SimplificationMap;

use crate::{CliResult, Failure};

/// Directory for computed simplification maps.
pub const CACHE_ENV: &str = "SHORTCUT_CSP_CACHE";

fn cache_path(spec: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    let name: String = spec.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    Some(PathBuf::from(dir).join(format!("{name}.json")))
}

pub fn simp_map(spec: &str, oracle: &Oracle) -> CliResult<SimplificationMap> {
    if spec == "builtin:rk" {
        return Ok(SimplificationMap::builtin_rk(oracle)?);
    }
    if let Some(rest) = spec.strip_prefix("simp:") {
        let (s, t) = rest
            .split_once(',')
            .ok_or_else(|| Failure::usage(format!("expected simp:<source>,<target>, got `{spec}`")))?;
        let cached = cache_path(spec);
        if let Some(p) = cached.as_ref().filter(|p| p.is_file()) {
            let text = std::fs::read_to_string(p)?;
            return Ok(SimplificationMap::from_json(&text, oracle)?);
        }
        let map = SimplificationMap::compute(&Language::load(s)?, &Language::load(t)?, oracle, DEFAULT_ARITY_CAP)?;
        if let Some(p) = cached {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&p, map.to_json())?;
        }
        return Ok(map);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::module(format!("{spec}: {e}")))?;
    Ok(SimplificationMap::from_json(&text, oracle)?)
}

pub fn branch_map(spec: &str, oracle: &Oracle) -> CliResult<BranchingMap> {
    let parse_r = |r: &str| r.parse::<usize>().map_err(|_| Failure::usage(format!("bad radius in `{spec}`")));
    if let Some(r) = spec.strip_prefix("builtin:rcc5-split:") {
        return Ok(BranchingMap::rcc5_pp_split(parse_r(r)?, oracle)?);
    }
    if spec == "builtin:delta" {
        return Ok(BranchingMap::delta(oracle)?);
    }
    if let Some(rest) = spec.strip_prefix("triple:") {
        let parts: Vec<&str> = rest.split(',').collect();
        let [s, t, r] = parts[..] else {
            return Err(Failure::usage(format!("expected triple:<source>,<target>,<r>, got `{spec}`")));
        };
        return Ok(BranchingMap::synthesize_from_backdoor_triple(
            &Language::load(s)?,
            &Language::load(t)?,
            parse_r(r)?,
            oracle,
        )?);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::module(format!("{spec}: {e}")))?;
    Ok(BranchingMap::from_json(&text, oracle)?)
}
