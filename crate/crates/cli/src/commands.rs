use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use orbispec::catalog::{catalog, catalog_entry, verify_entry};
use orbispec::crystal::{CrystalGroup, GroupSpec, DEFAULT_ORDER_CAP};
use orbispec::heat::{assemble_expansion, manifold_discriminator, parity_invariants, ParityInvariant};
use orbispec::krawtchouk::{integer_zeros, krawtchouk, reflection_trace_check};
use orbispec::linalg::{format_rational, Rational};
use orbispec::spectrum::{isospectral_compare, spectrum_table, Comparison};
use orbispec::strata::{strata, Stratum};
use orbispec::trace::TraceEngine;
use orbispec::Error;
use serde_json::{json, Value};

use crate::output::to_json;
use crate::{Cli, Command, Format};

#[derive(Debug)]
pub enum CliError {
    Core { error: Error, file: Option<PathBuf> },
    Io { file: PathBuf, message: String },
    ClaimsFailed(Value),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core { error, .. } if !error.is_validation() => 1,
            CliError::ClaimsFailed(_) => 1,
            _ => 2,
        }
    }

    pub fn report(&self) -> Value {
        match self {
            CliError::Core { error, file } => json!({
                "error": error.kind(),
                "message": error.to_string(),
                "file": file.as_ref().map(|f| f.display().to_string()),
            }),
            CliError::Io { file, message } => json!({
                "error": "Io",
                "message": message,
                "file": file.display().to_string(),
            }),
            CliError::ClaimsFailed(results) => json!({
                "error": "ClaimsFailed",
                "results": results,
            }),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core { error, file: Some(file) } => write!(f, "{}: {error}", file.display()),
            CliError::Core { error, file: None } => write!(f, "{error}"),
            CliError::Io { file, message } => write!(f, "{}: {message}", file.display()),
            CliError::ClaimsFailed(_) => write!(f, "some catalog claims failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        CliError::Core { error, file: None }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn load_group(path: &Path) -> CliResult<CrystalGroup> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        file: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let with_file = |error: Error| CliError::Core {
        error,
        file: Some(path.to_path_buf()),
    };
    GroupSpec::from_json(&text)
        .and_then(|spec| spec.build(DEFAULT_ORDER_CAP))
        .map_err(with_file)
}

fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn stratum_json(s: &Stratum) -> Value {
    json!({
        "dim": s.dim,
        "codim": s.codim,
        "volume2": format_rational(&s.volume2),
        "volume": s.volume(),
        "isotropy_order": s.isotropy_order(),
        "primary": s.is_primary(),
        "iso_max_types": s.iso_max_types.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "component_count_upstairs": s.component_count_upstairs,
        "base_point": rationals(&s.base_point),
        "kernel_basis": s.kernel_basis,
        "singular_component": s.singular_component,
    })
}

fn parity_json(b: &ParityInvariant) -> Value {
    json!({
        "k_epsilon": b.k_epsilon,
        "value": b.value_f64(),
        "exact": b.value,
    })
}

fn comparison_json(c: &Comparison) -> Value {
    match c {
        Comparison::Equal => json!({"result": "equal"}),
        Comparison::FirstDifference { mu2, a, b } => json!({
            "result": "first_difference",
            "mu2": format_rational(mu2),
            "a": a,
            "b": b,
        }),
    }
}

pub fn run(cli: &Cli) -> CliResult<String> {
    let cap = cli.enum_cap;
    match &cli.command {
        Command::Validate { file } => {
            let g = load_group(file)?;
            Ok(to_json(&json!({
                "valid": true,
                "dimension": g.dim(),
                "order": g.order(),
                "generators": g.generators().len(),
            })))
        }
        Command::Spectrum {
            group,
            p,
            max_norm2,
            format,
        } => {
            let g = load_group(group)?;
            let table = spectrum_table(&g, *p, max_norm2, cap)?;
            Ok(match format {
                Format::Json => table.to_json(),
                Format::Csv => table.to_csv().trim_end().to_string(),
            })
        }
        Command::Compare { a, b, p, max_norm2 } => {
            let ga = load_group(a)?;
            let gb = load_group(b)?;
            let ta = spectrum_table(&ga, *p, max_norm2, cap)?;
            let tb = spectrum_table(&gb, *p, max_norm2, cap)?;
            let mut out = comparison_json(&isospectral_compare(&ta, &tb)?);
            out["p"] = json!(p);
            out["bound"] = json!(format_rational(max_norm2));
            Ok(to_json(&out))
        }
        Command::Strata { group } => {
            let g = load_group(group)?;
            let st = strata(&g);
            Ok(to_json(&json!({
                "dimension": g.dim(),
                "order": g.order(),
                "strata": st.iter().map(stratum_json).collect::<Vec<_>>(),
            })))
        }
        Command::Heat { group, p } => {
            let g = load_group(group)?;
            let st = strata(&g);
            let expansion = assemble_expansion(&g, &st, *p)?;
            let (plus, minus) = parity_invariants(&g, &st, *p)?;
            let verdict = if g.dim() >= 1 {
                let p0 = assemble_expansion(&g, &st, 0)?;
                let p1 = assemble_expansion(&g, &st, 1)?;
                match manifold_discriminator(&g, &st, &p0, &p1) {
                    Ok(v) => serde_json::to_value(v).expect("verdict serializes"),
                    Err(e @ Error::NotApplicable(_)) => json!({"verdict": "NotApplicable", "reason": e.to_string()}),
                    Err(e) => return Err(e.into()),
                }
            } else {
                Value::Null
            };
            Ok(to_json(&json!({
                "p": p,
                "dimension": g.dim(),
                "order": g.order(),
                "expansion": expansion.to_json_value(),
                "parity": {"plus": parity_json(&plus), "minus": parity_json(&minus)},
                "manifold_test": verdict,
            })))
        }
        Command::TraceCheck { group, p, t, max_norm2 } => {
            let g = load_group(group)?;
            let st = strata(&g);
            let expansion = assemble_expansion(&g, &st, *p)?;
            let mut engine = TraceEngine::new(&g, cap);
            // smallest t needs the largest bound; do it first so later
            // samples reuse the shells
            let mut order: Vec<usize> = (0..t.len()).collect();
            order.sort_by(|&i, &j| t[i].partial_cmp(&t[j]).unwrap_or(std::cmp::Ordering::Equal));
            let mut samples = vec![Value::Null; t.len()];
            for i in order {
                let s = engine.truncated_trace(*p, t[i], max_norm2)?;
                let expansion_value = expansion.evaluate(t[i]);
                samples[i] = json!({
                    "p": p,
                    "t": s.t,
                    "value": s.value,
                    "tail_estimate": s.tail_estimate,
                    "truncation_bound": format_rational(&s.truncation_bound),
                    "expansion_value": expansion_value,
                    "residual": (s.value - expansion_value).abs(),
                });
            }
            let out = if samples.len() == 1 {
                samples.pop().expect("one sample")
            } else {
                Value::Array(samples)
            };
            Ok(to_json(&out))
        }
        Command::Krawtchouk { d, p, k } => {
            if p > d {
                return Err(Error::InvalidDegree { d: *d, p: *p }.into());
            }
            let out = match k {
                Some(k) => {
                    if k > d {
                        return Err(Error::InvalidCodim { d: *d, k: *k }.into());
                    }
                    let (trace, value) = reflection_trace_check(*d, *k, *p);
                    json!({"d": d, "p": p, "k": k, "value": value, "reflection_trace": trace})
                }
                None => json!({
                    "d": d,
                    "p": p,
                    "values": (0..=*d).map(|k| krawtchouk(*d, *p, k)).collect::<Vec<_>>(),
                    "zeros": integer_zeros(*d, *p),
                }),
            };
            Ok(to_json(&out))
        }
        Command::Catalog(args) => {
            if args.list {
                let entries: Vec<Value> = catalog()
                    .iter()
                    .map(|e| {
                        json!({
                            "name": e.name,
                            "dimension": e.group.dim(),
                            "order": e.group.order(),
                            "claims": e.claims.iter().map(|c| c.describe()).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                return Ok(to_json(&Value::Array(entries)));
            }
            if let Some(name) = &args.emit {
                return Ok(catalog_entry(name)?.group.to_spec().to_json());
            }
            let name = args.verify.as_deref().unwrap_or("");
            let entries = if name.is_empty() {
                catalog()
            } else {
                vec![catalog_entry(name)?]
            };
            let mut results = Vec::new();
            for e in &entries {
                results.extend(verify_entry(e, cap)?);
            }
            let all = results.iter().all(|r| r.passed);
            let value = serde_json::to_value(&results).expect("results serialize");
            if all {
                Ok(to_json(&value))
            } else {
                Err(CliError::ClaimsFailed(value))
            }
        }
    }
}
