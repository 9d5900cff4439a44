use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde_json::Value;
use sos_transport::builtin;
use sos_transport::linops::OperatorDescriptor;
use sos_transport::{LinearFunctional, OperatorExpr, Polynomial};

pub fn read_text(source: &str) -> Result<String> {
    if source == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(source).with_context(|| format!("reading {source}"))
}

pub fn read_json<T: DeserializeOwned>(source: &str) -> Result<T> {
    let text = read_text(source)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {source}"))
}

fn is_file(source: &str) -> bool {
    source == "-" || Path::new(source).exists()
}

/// A polynomial file, or a builtin polynomial name.
pub fn polynomial(source: &str) -> Result<Polynomial> {
    if !is_file(source) {
        if let Some(p) = builtin::polynomial(source) {
            return Ok(p);
        }
        bail!(
            "{source}: no such file or builtin polynomial (builtins: {})",
            builtin::POLYNOMIAL_NAMES.join(", ")
        );
    }
    read_json(source)
}

/// Polynomials from each source: builtin names, or files holding one
/// polynomial or an array of them.
pub fn polynomials(sources: &[String]) -> Result<Vec<Polynomial>> {
    let mut out = Vec::new();
    for source in sources {
        if !is_file(source) {
            out.push(polynomial(source)?);
            continue;
        }
        match read_json::<Value>(source)? {
            Value::Array(items) => {
                for item in items {
                    out.push(serde_json::from_value(item).with_context(|| format!("parsing {source}"))?);
                }
            }
            v => out.push(serde_json::from_value(v).with_context(|| format!("parsing {source}"))?),
        }
    }
    Ok(out)
}

/// `gaussian-full`, `gaussian-orthant` (needing `n`), or a functional file.
pub fn functional(source: &str, n: Option<usize>) -> Result<LinearFunctional> {
    let need_n = || n.ok_or_else(|| anyhow!("--n is needed for the builtin functional {source}"));
    match source {
        "gaussian-full" | "full" => Ok(LinearFunctional::gaussian_full(need_n()?)),
        "gaussian-orthant" | "orthant" => Ok(LinearFunctional::gaussian_orthant(need_n()?)),
        _ if is_file(source) => read_json(source),
        _ => bail!("{source}: no such file or builtin functional (builtins: gaussian-full, gaussian-orthant)"),
    }
}

/// An operator descriptor file, or a builtin operator name. `bound` is the
/// degree bound of bounded builtins.
pub fn operator(source: &str, bound: Option<u32>) -> Result<OperatorExpr> {
    if !is_file(source) {
        return builtin::operator(source, bound).map_err(|e| {
            anyhow!(
                "{source}: no such file or builtin operator ({e}; builtins: {})",
                builtin::OPERATOR_NAMES.join(", ")
            )
        });
    }
    let d: OperatorDescriptor = read_json(source)?;
    OperatorExpr::try_from(d).with_context(|| format!("invalid operator in {source}"))
}
