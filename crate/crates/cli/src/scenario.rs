//! JSON scenario documents: schema, validation with path-addressed errors,
//! and conversion into solver objects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mmrd::{
    build_mesh, make_graph, principal_eigenpair, ComponentSpec, EigenMethod, Field64, GraphSpec,
    Mesh64, Problem64, Reaction64, TimeControl64,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub domain: Domain,
    pub components: Vec<Component>,
    pub reaction: ReactionSpec,
    pub time: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub diffusion: f64,
    pub interior_graph: GraphBlock,
    pub boundary_graph: GraphBlock,
    pub initial: Initial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphBlock {
    Zero {},
    Linear { alpha: f64 },
    Power { alpha: f64, q: f64 },
    Dirichlet {},
    ExtendedPower { alpha: f64, q: f64 },
    ExtendedNeumann {},
    Obstacle { m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Constant {
        value: f64,
    },
    /// `c φ₁` with `φ₁` the principal Dirichlet eigenfunction, `∫φ₁ = 1`.
    EigenMultiple {
        c: f64,
    },
    /// `height · exp(1 - 1/(1 - ρ²))` for `ρ = |x - center| / width < 1`.
    Bump {
        center: Vec<f64>,
        width: f64,
        height: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSpec {
    Zero {},
    Power { p: f64 },
    PowerPlus { p: f64, c: f64 },
    Nuclear { a: f64, b: f64 },
    Table { u: Vec<f64>, f: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    #[serde(default = "default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_dt_init() -> f64 {
    1e-3
}
fn default_dt_min() -> f64 {
    1e-12
}
fn default_blowup() -> f64 {
    1e8
}
fn default_safety() -> f64 {
    0.05
}
fn default_max_steps() -> usize {
    1_000_000
}

impl TimeSpec {
    pub fn with_end(t_end: f64) -> Self {
        Self {
            t_end,
            dt_init: default_dt_init(),
            dt_min: default_dt_min(),
            blowup_threshold: default_blowup(),
            safety: default_safety(),
            max_steps: default_max_steps(),
        }
    }
}

/// Second problem of a comparison and the a-priori override flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub second: ScenarioRef,
    #[serde(default)]
    pub override_a3: bool,
    #[serde(default)]
    pub override_a4: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioRef {
    /// Scenario file, relative to the referring file's directory.
    Path {
        path: PathBuf,
    },
    Preset {
        name: String,
        #[serde(default)]
        set: BTreeMap<String, f64>,
    },
    Inline {
        scenario: Box<Scenario>,
    },
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::at(
            if path == "." { String::new() } else { path },
            e.inner().to_string(),
        )
    })?;
    sc.validate()?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Scenario { path: p, message } => {
            CliError::at(format!("{}: {p}", path.display()), message)
        }
        other => other,
    })
}

fn positive(path: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::at(
            path,
            format!("must be a finite number > 0, got {v}"),
        ))
    }
}

fn nonnegative(path: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::at(
            path,
            format!("must be a finite number >= 0, got {v}"),
        ))
    }
}

fn exponent(path: &str, v: f64, lower: f64) -> CliResult<()> {
    if v > lower && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::at(path, format!("must be > {lower}, got {v}")))
    }
}

impl GraphBlock {
    fn validate(&self, at: &str) -> CliResult<()> {
        match *self {
            GraphBlock::Linear { alpha } => nonnegative(&format!("{at}.alpha"), alpha),
            GraphBlock::Power { alpha, q } | GraphBlock::ExtendedPower { alpha, q } => {
                nonnegative(&format!("{at}.alpha"), alpha)?;
                exponent(&format!("{at}.q"), q, 1.0)
            }
            GraphBlock::Obstacle { m } => positive(&format!("{at}.m"), m),
            _ => Ok(()),
        }
    }

    pub fn spec(&self) -> GraphSpec<f64> {
        match *self {
            GraphBlock::Zero {} => GraphSpec::Zero,
            GraphBlock::Linear { alpha } => GraphSpec::Linear { alpha },
            GraphBlock::Power { alpha, q } => GraphSpec::Power { alpha, q },
            GraphBlock::Dirichlet {} => GraphSpec::Dirichlet,
            GraphBlock::ExtendedPower { alpha, q } => GraphSpec::ExtendedPower { alpha, q },
            GraphBlock::ExtendedNeumann {} => GraphSpec::ExtendedNeumann,
            GraphBlock::Obstacle { m } => GraphSpec::Obstacle { m },
        }
    }
}

impl ReactionSpec {
    pub fn reaction(&self, m: usize) -> Reaction64 {
        match self {
            ReactionSpec::Zero {} => Reaction64::Zero { m },
            ReactionSpec::Power { p } => Reaction64::Power { p: *p },
            ReactionSpec::PowerPlus { p, c } => Reaction64::PowerPlus { p: *p, c: *c },
            ReactionSpec::Nuclear { a, b } => Reaction64::Nuclear { a: *a, b: *b },
            ReactionSpec::Table { u, f } => Reaction64::Table {
                u: u.clone(),
                f: f.clone(),
            },
        }
    }

    fn validate(&self, m: usize) -> CliResult<()> {
        let wants = |n: usize| {
            if m == n {
                Ok(())
            } else {
                Err(CliError::at(
                    "reaction.kind",
                    format!("reaction has {n} component(s) but {m} are defined"),
                ))
            }
        };
        match *self {
            ReactionSpec::Zero {} => Ok(()),
            ReactionSpec::Power { p } => {
                exponent("reaction.p", p, 2.0)?;
                wants(1)
            }
            ReactionSpec::PowerPlus { p, c } => {
                exponent("reaction.p", p, 2.0)?;
                nonnegative("reaction.c", c)?;
                wants(1)
            }
            ReactionSpec::Nuclear { a, b } => {
                nonnegative("reaction.a", a)?;
                positive("reaction.b", b)?;
                wants(2)
            }
            ReactionSpec::Table { .. } => {
                self.reaction(1)
                    .validate()
                    .map_err(|e| CliError::at("reaction", e.to_string()))?;
                wants(1)
            }
        }
    }
}

impl TimeSpec {
    fn validate(&self) -> CliResult<()> {
        positive("time.t_end", self.t_end)?;
        positive("time.dt_init", self.dt_init)?;
        positive("time.dt_min", self.dt_min)?;
        if self.dt_min > self.dt_init {
            return Err(CliError::at("time.dt_min", "must not exceed time.dt_init"));
        }
        if !(self.blowup_threshold >= 1e3) {
            return Err(CliError::at("time.blowup_threshold", "must be >= 1e3"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(CliError::at("time.safety", "must lie in (0, 1]"));
        }
        if self.max_steps == 0 {
            return Err(CliError::at("time.max_steps", "must be positive"));
        }
        Ok(())
    }

    pub fn time_control(&self) -> TimeControl64 {
        TimeControl64 {
            t_end: self.t_end,
            dt_init: self.dt_init,
            dt_min: self.dt_min,
            blowup_threshold: self.blowup_threshold,
            safety: self.safety,
            max_steps: self.max_steps,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> CliResult<()> {
        let d = &self.domain;
        if d.dim != 1 && d.dim != 2 {
            return Err(CliError::at(
                "domain.dim",
                format!("must be 1 or 2, got {}", d.dim),
            ));
        }
        if d.lengths.len() != d.dim {
            return Err(CliError::at(
                "domain.lengths",
                format!("needs {} entries", d.dim),
            ));
        }
        if d.counts.len() != d.dim {
            return Err(CliError::at(
                "domain.counts",
                format!("needs {} entries", d.dim),
            ));
        }
        for (i, l) in d.lengths.iter().enumerate() {
            positive(&format!("domain.lengths[{i}]"), *l)?;
        }
        for (i, c) in d.counts.iter().enumerate() {
            if *c < 3 {
                return Err(CliError::at(format!("domain.counts[{i}]"), "must be >= 3"));
            }
        }
        if self.components.is_empty() {
            return Err(CliError::at("components", "needs at least one component"));
        }
        for (k, c) in self.components.iter().enumerate() {
            let at = format!("components[{k}]");
            positive(&format!("{at}.diffusion"), c.diffusion)?;
            c.interior_graph.validate(&format!("{at}.interior_graph"))?;
            c.boundary_graph.validate(&format!("{at}.boundary_graph"))?;
            match &c.initial {
                Initial::Constant { value } if !value.is_finite() => {
                    return Err(CliError::at(
                        format!("{at}.initial.value"),
                        "must be finite",
                    ));
                }
                Initial::EigenMultiple { c } if !c.is_finite() => {
                    return Err(CliError::at(format!("{at}.initial.c"), "must be finite"));
                }
                Initial::Bump {
                    center,
                    width,
                    height,
                } => {
                    if center.len() != d.dim {
                        return Err(CliError::at(
                            format!("{at}.initial.center"),
                            format!("needs {} entries", d.dim),
                        ));
                    }
                    positive(&format!("{at}.initial.width"), *width)?;
                    if !height.is_finite() {
                        return Err(CliError::at(
                            format!("{at}.initial.height"),
                            "must be finite",
                        ));
                    }
                }
                _ => {}
            }
        }
        self.reaction.validate(self.components.len())?;
        self.time.validate()?;
        if let Some(PairSpec {
            second: ScenarioRef::Inline { scenario },
            ..
        }) = &self.pair
        {
            scenario.validate().map_err(|e| match e {
                CliError::Scenario { path, message } => {
                    CliError::at(format!("pair.second.scenario.{path}"), message)
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn mesh(&self) -> CliResult<Mesh64> {
        Ok(build_mesh(
            self.domain.dim,
            &self.domain.lengths,
            &self.domain.counts,
        )?)
    }

    /// Builds the solver problem (initial data before domain projection).
    pub fn problem(&self) -> CliResult<Problem64> {
        let mesh = self.mesh()?;
        let mut phi1: Option<Field64> = None;
        let mut comps = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let initial = match &c.initial {
                Initial::Constant { value } => Field64::constant(&mesh, *value),
                Initial::EigenMultiple { c } => {
                    if phi1.is_none() {
                        phi1 = Some(principal_eigenpair(&mesh, EigenMethod::Analytic)?.phi1);
                    }
                    phi1.as_ref().expect("computed above").map(|v| *c * v)
                }
                Initial::Bump {
                    center,
                    width,
                    height,
                } => Field64::from_fn(&mesh, |x| {
                    let rho2 = center
                        .iter()
                        .enumerate()
                        .map(|(d, c0)| ((x[d] - c0) / width).powi(2))
                        .sum::<f64>();
                    if rho2 < 1.0 {
                        height * (1.0 - 1.0 / (1.0 - rho2)).exp()
                    } else {
                        0.0
                    }
                }),
            };
            comps.push(ComponentSpec {
                diffusion: c.diffusion,
                interior_graph: make_graph(c.interior_graph.spec())?,
                boundary_graph: make_graph(c.boundary_graph.spec())?,
                initial,
            });
        }
        let reaction = self.reaction.reaction(self.components.len());
        Ok(Problem64::new(mesh, comps, reaction)?)
    }

    /// Coefficients `(a, b)` when the reaction is the coupled system.
    pub fn nuclear_coefficients(&self) -> Option<(f64, f64)> {
        match self.reaction {
            ReactionSpec::Nuclear { a, b } => Some((a, b)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Resolves the second scenario of a pair; `base` is the directory of the
/// referring file.
pub fn resolve_ref(r: &ScenarioRef, base: &Path) -> CliResult<Scenario> {
    match r {
        ScenarioRef::Path { path } => load_scenario(&base.join(path)),
        ScenarioRef::Preset { name, set } => crate::presets::expand_preset(name, set),
        ScenarioRef::Inline { scenario } => Ok((**scenario).clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"dim": 1, "lengths": [1.0], "counts": [11]},
        "components": [{
            "diffusion": 1.0,
            "interior_graph": {"kind": "zero"},
            "boundary_graph": {"kind": "extended_power", "alpha": 1.0, "q": 2.5},
            "initial": {"kind": "eigen_multiple", "c": 12.0}
        }],
        "reaction": {"kind": "power", "p": 3.0},
        "time": {"t_end": 0.5}
    }"#;

    #[test]
    fn parses_and_fills_time_defaults() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(sc.time.dt_init, 1e-3);
        assert_eq!(sc.time.blowup_threshold, 1e8);
        let p = sc.problem().unwrap();
        assert_eq!(p.m(), 1);
        let again = parse_scenario(&sc.to_json()).unwrap();
        assert_eq!(again, sc);
    }

    #[test]
    fn bad_exponent_names_its_path() {
        let text = MINIMAL.replace("\"q\": 2.5", "\"q\": 1.0");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.starts_with("components[0].boundary_graph.q:"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = MINIMAL.replace("\"t_end\": 0.5", "\"t_end\": 0.5, \"tend\": 1");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.starts_with("time.tend:"), "{err}");
        let text = MINIMAL.replace("\"kind\": \"zero\"", "\"kind\": \"zero\", \"alpha\": 1");
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(
            err.contains("components[0].interior_graph") && err.contains("alpha"),
            "{err}"
        );
    }

    #[test]
    fn component_count_must_match_reaction() {
        let text = MINIMAL.replace(
            "\"kind\": \"power\", \"p\": 3.0",
            "\"kind\": \"nuclear\", \"a\": 1, \"b\": 1",
        );
        let err = parse_scenario(&text).unwrap_err().to_string();
        assert!(err.starts_with("reaction.kind:"), "{err}");
    }

    #[test]
    fn bump_initial_data() {
        let text = MINIMAL.replace(
            "{\"kind\": \"eigen_multiple\", \"c\": 12.0}",
            "{\"kind\": \"bump\", \"center\": [0.5], \"width\": 0.2, \"height\": 3.0}",
        );
        let p = parse_scenario(&text).unwrap().problem().unwrap();
        let u = &p.components()[0].initial;
        assert_eq!(u.0[5], 3.0);
        assert_eq!(u.0[0], 0.0);
        assert_eq!(u.0[3], 0.0);
    }
}
