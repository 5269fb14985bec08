//! Named problem families, expanded into fully explicit scenarios.
//!
//! Every preset lives on `[0, L]` (1D, `n` nodes) or `[0, L]²` when `dim = 2`
//! is set. Parameters are overridden with `--set key=value`.

use std::collections::BTreeMap;

use crate::error::{CliError, CliResult};
use crate::scenario::{Component, Domain, GraphBlock, Initial, ReactionSpec, Scenario, TimeSpec};

pub const PRESETS: &[&str] = &[
    "Pp_dirichlet",
    "Pp_neumann",
    "Pp_gamma",
    "PF_gamma",
    "NR",
    "NR_dirichlet",
    "NR_gamma_M",
];

/// Keys common to every preset.
const COMMON: &[(&str, f64)] = &[
    ("dim", 1.0),
    ("length", 1.0),
    ("n", 201.0),
    ("diffusion", 1.0),
    ("t_end", 1.0),
    ("dt_init", 1e-3),
    ("dt_min", 1e-12),
    ("blowup_threshold", 1e8),
    ("safety", 0.05),
];

fn own_keys(name: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match name {
        "Pp_dirichlet" | "Pp_neumann" => &[("p", 3.0), ("c", 12.0)],
        "Pp_gamma" => &[("p", 3.0), ("c", 12.0), ("alpha", 1.0), ("q", 2.5)],
        "PF_gamma" => &[
            ("p", 3.0),
            ("cplus", 1.0),
            ("c", 12.0),
            ("alpha", 1.0),
            ("q", 2.5),
        ],
        "NR" | "NR_gamma_M" => &[
            ("a", 1.0),
            ("b", 1.0),
            ("u10", 400.0),
            ("c2", 18.0),
            ("alpha1", 1.0),
            ("alpha2", 1.0),
            ("gamma1", 2.5),
            ("gamma2", 2.5),
        ],
        "NR_dirichlet" => &[("a", 1.0), ("b", 1.0), ("u10", 400.0), ("c2", 18.0)],
        _ => return None,
    })
}

/// Parameter table of a preset with defaults, in a stable order.
pub fn preset_parameters(name: &str) -> CliResult<Vec<(&'static str, f64)>> {
    let own = own_keys(name).ok_or_else(|| unknown_preset(name))?;
    let mut keys: Vec<(&'static str, f64)> = COMMON.to_vec();
    keys.extend_from_slice(own);
    if name == "NR_gamma_M" {
        // 0 selects the default M = u10 + sup u20 + 2.
        keys.push(("m", 0.0));
    }
    Ok(keys)
}

fn unknown_preset(name: &str) -> CliError {
    CliError::Usage(format!(
        "unknown preset '{name}'; available: {}",
        PRESETS.join(", ")
    ))
}

/// Parses `key=value` overrides.
pub fn parse_sets(items: &[String]) -> CliResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{item}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--set {k}: '{v}' is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn boundary_power(alpha: f64, q: f64) -> GraphBlock {
    if alpha == 0.0 {
        GraphBlock::ExtendedNeumann {}
    } else {
        GraphBlock::ExtendedPower { alpha, q }
    }
}

/// Expands a preset with overrides into an explicit scenario.
pub fn expand_preset(name: &str, set: &BTreeMap<String, f64>) -> CliResult<Scenario> {
    let defaults = preset_parameters(name)?;
    for key in set.keys() {
        if !defaults.iter().any(|(k, _)| k == key) {
            let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
            return Err(CliError::Usage(format!(
                "preset {name} has no parameter '{key}'; known: {}",
                known.join(", ")
            )));
        }
    }
    let get = |k: &str| -> f64 {
        set.get(k).copied().unwrap_or_else(|| {
            defaults
                .iter()
                .find(|(d, _)| *d == k)
                .map(|(_, v)| *v)
                .expect("key listed in defaults")
        })
    };
    let count = |k: &str| -> CliResult<usize> {
        let v = get(k);
        if v.fract() != 0.0 || v < 1.0 {
            return Err(CliError::Usage(format!(
                "--set {k}: expected a positive integer, got {v}"
            )));
        }
        Ok(v as usize)
    };

    let dim = count("dim")?;
    let domain = Domain {
        dim,
        lengths: vec![get("length"); dim],
        counts: vec![count("n")?; dim],
    };
    let time = TimeSpec {
        t_end: get("t_end"),
        dt_init: get("dt_init"),
        dt_min: get("dt_min"),
        blowup_threshold: get("blowup_threshold"),
        safety: get("safety"),
        max_steps: 1_000_000,
    };
    let diffusion = get("diffusion");
    let comp = |boundary: GraphBlock, initial: Initial| Component {
        diffusion,
        interior_graph: GraphBlock::Zero {},
        boundary_graph: boundary,
        initial,
    };

    let (components, reaction) = match name {
        "Pp_dirichlet" | "Pp_neumann" | "Pp_gamma" | "PF_gamma" => {
            let boundary = match name {
                "Pp_dirichlet" => GraphBlock::Dirichlet {},
                "Pp_neumann" => GraphBlock::ExtendedNeumann {},
                _ => boundary_power(get("alpha"), get("q")),
            };
            let reaction = if name == "PF_gamma" {
                ReactionSpec::PowerPlus {
                    p: get("p"),
                    c: get("cplus"),
                }
            } else {
                ReactionSpec::Power { p: get("p") }
            };
            (
                vec![comp(boundary, Initial::EigenMultiple { c: get("c") })],
                reaction,
            )
        }
        _ => {
            let (b1, b2) = if name == "NR_dirichlet" {
                (GraphBlock::Dirichlet {}, GraphBlock::Dirichlet {})
            } else {
                (
                    boundary_power(get("alpha1"), get("gamma1")),
                    boundary_power(get("alpha2"), get("gamma2")),
                )
            };
            let mut c1 = comp(b1, Initial::Constant { value: get("u10") });
            let mut c2 = comp(b2, Initial::EigenMultiple { c: get("c2") });
            if name == "NR_gamma_M" {
                let m = match get("m") {
                    m if m > 0.0 => m,
                    _ => get("u10").abs() + c2_sup(&domain, get("c2")) + 2.0,
                };
                c1.interior_graph = GraphBlock::Obstacle { m };
                c2.interior_graph = GraphBlock::Obstacle { m };
            }
            (
                vec![c1, c2],
                ReactionSpec::Nuclear {
                    a: get("a"),
                    b: get("b"),
                },
            )
        }
    };

    let sc = Scenario {
        name: Some(name.to_string()),
        domain,
        components,
        reaction,
        time,
        pair: None,
    };
    sc.validate()?;
    Ok(sc)
}

/// `sup |c φ₁|` for the normalized sine eigenfunction of the box.
fn c2_sup(domain: &Domain, c: f64) -> f64 {
    // φ₁ = Π (π / (2 L)) sin(π x / L) has unit integral; its peak is Π π / (2 L).
    domain
        .lengths
        .iter()
        .map(|l| std::f64::consts::PI / (2.0 * l))
        .product::<f64>()
        * c.abs()
}
