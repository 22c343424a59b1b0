//! The policy mini-grammar used on the command line and in sweep configs:
//! `beta:<alpha>,<beta>`, `point:<lambda>`, or `file:<path>`, optionally
//! followed by a transform suffix `|D`, `|U`, or `|Du:<gamma-file>`.

use anyhow::{anyhow, bail, Context, Result};
use mixdat::policy::{Policy, UntiedScheme, WeightingFunction};
use std::fs;

/// A parsed policy spec: either a plain policy or an untied scheme
/// (policy plus weighting), depending on the transform suffix.
#[derive(Debug, Clone)]
pub enum ParsedPolicy {
    Plain(Policy),
    Untied(UntiedScheme),
}

impl ParsedPolicy {
    pub fn into_plain(self, what: &str) -> Result<Policy> {
        match self {
            ParsedPolicy::Plain(p) => Ok(p),
            ParsedPolicy::Untied(_) => {
                bail!("{what} needs a plain policy, but the spec produced a policy+gamma scheme (drop the `|U` suffix)")
            }
        }
    }

    pub fn into_untied(self, what: &str) -> Result<UntiedScheme> {
        match self {
            ParsedPolicy::Untied(s) => Ok(s),
            ParsedPolicy::Plain(_) => {
                bail!("{what} needs a policy+gamma scheme; append `|U` to derive one from a plain policy")
            }
        }
    }
}

/// Parses a policy spec, building analytic policies on `n_bins` bins.
pub fn parse_policy_spec(spec: &str, n_bins: usize) -> Result<ParsedPolicy> {
    let (base, suffix) = match spec.split_once('|') {
        Some((b, s)) => (b, Some(s)),
        None => (spec, None),
    };
    let policy = parse_base(base, n_bins)?;
    match suffix {
        None => Ok(ParsedPolicy::Plain(policy)),
        Some("D") => Ok(ParsedPolicy::Plain(policy.mix_to_dat())),
        Some("U") => Ok(ParsedPolicy::Untied(policy.dat_to_untied())),
        Some(s) if s.starts_with("Du:") => {
            let gamma_path = &s[3..];
            if gamma_path.is_empty() {
                bail!("bad policy spec `{spec}`: `|Du:` needs a gamma file path");
            }
            let text = fs::read_to_string(gamma_path)
                .with_context(|| format!("reading gamma file `{gamma_path}`"))?;
            let weighting = WeightingFunction::from_text(&text)
                .map_err(|e| anyhow!("bad gamma file `{gamma_path}`: {e}"))?;
            let scheme = UntiedScheme::new(policy, weighting)
                .map_err(|e| anyhow!("bad policy spec `{spec}`: {e}"))?;
            Ok(ParsedPolicy::Plain(scheme.to_dat_policy()))
        }
        Some(other) => bail!("bad policy spec `{spec}`: unknown transform suffix `{other}` (use D, U, or Du:<gamma-file>)"),
    }
}

fn parse_base(base: &str, n_bins: usize) -> Result<Policy> {
    if let Some(args) = base.strip_prefix("beta:") {
        let (a, b) = args
            .split_once(',')
            .ok_or_else(|| anyhow!("bad policy spec `{base}`: expected `beta:<alpha>,<beta>`"))?;
        let alpha: f64 = a
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad policy spec `{base}`: alpha `{a}` is not a number"))?;
        let beta: f64 = b
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad policy spec `{base}`: beta `{b}` is not a number"))?;
        Policy::beta(alpha, beta, n_bins).map_err(|e| anyhow!("bad policy spec `{base}`: {e}"))
    } else if let Some(arg) = base.strip_prefix("point:") {
        let lambda: f64 = arg
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad policy spec `{base}`: lambda `{arg}` is not a number"))?;
        Policy::point_mass(lambda, n_bins).map_err(|e| anyhow!("bad policy spec `{base}`: {e}"))
    } else if let Some(path) = base.strip_prefix("file:") {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading policy file `{path}`"))?;
        Policy::from_text(&text).map_err(|e| anyhow!("bad policy file `{path}`: {e}"))
    } else {
        bail!(
            "bad policy spec `{base}`: expected `beta:<a>,<b>`, `point:<lambda>`, or `file:<path>`"
        )
    }
}
