//! Scenario files.
//!
//! A scenario is a TOML document with one-based robot labels:
//!
//! ```toml
//! [robots]
//! count = 2
//! radius = 1.0
//!
//! [graph]
//! edges = [[1, 2]]
//!
//! [[targets]]
//! edge = [1, 2]
//! d_star = 3.0        # or cos_star = 0.7778
//!
//! [initial]
//! positions = [[0.0, 0.0], [2.5, 0.0]]
//!
//! [control]
//! gain = 50.0
//! controller = "geometric"   # or "bearing"
//!
//! [integration]
//! dt = 1e-3
//! t_final = 10.0
//! output_decimation = 10
//! early_stop_tol = 1e-10     # 0 disables early stopping
//! seed = 0
//! ```
//!
//! All targets must use the same kind, either `d_star` or `cos_star`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{AngleConstraint, ConstraintSet, ControllerKind};
use crate::error::FormationError;
use crate::graph::FormationGraph;
use crate::rigidity::Configuration;
use crate::simulator::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioErrorKind {
    /// Syntax or structure.
    Parse,
    /// A desired distance or cosine outside the feasible range.
    InfeasibleTarget,
    /// Initial disks overlap or touch.
    InfeasibleInitial,
    /// Anything else that fails validation.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}[{section}]: {message}", line.map(|l| format!("line {l}, ")).unwrap_or_default())]
pub struct ScenarioError {
    pub kind: ScenarioErrorKind,
    pub section: String,
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub robots: RobotsSection,
    pub graph: GraphSection,
    pub targets: Vec<TargetEntry>,
    pub initial: InitialSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub integration: IntegrationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsSection {
    pub count: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub edge: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cos_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub positions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default = "default_gain")]
    pub gain: f64,
    #[serde(default)]
    pub controller: ControllerKind,
}

fn default_gain() -> f64 {
    1.0
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            gain: default_gain(),
            controller: ControllerKind::Geometric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSection {
    pub dt: f64,
    pub t_final: f64,
    pub output_decimation: usize,
    pub early_stop_tol: f64,
    pub seed: u64,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 10.0,
            output_decimation: 10,
            early_stop_tol: 1e-10,
            seed: 0,
        }
    }
}

/// Line of the first header matching `[name]` or `[[name]]`, counting from 1.
fn section_line(src: &str, name: &str, nth: usize) -> Option<usize> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            t == format!("[{name}]") || t == format!("[[{name}]]")
        })
        .nth(nth)
        .map(|(i, _)| i + 1)
}

impl ScenarioFile {
    pub fn parse(src: &str) -> Result<Self, ScenarioError> {
        toml::from_str(src).map_err(|e| {
            let line = e
                .span()
                .map(|s| src[..s.start.min(src.len())].lines().count().max(1));
            ScenarioError {
                kind: ScenarioErrorKind::Parse,
                section: "document".into(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Validates and converts to a zero-based [`Scenario`].
    ///
    /// `src` is only used to attach line numbers to errors.
    pub fn to_scenario(&self, src: Option<&str>) -> Result<Scenario, ScenarioError> {
        let err = |kind, section: &str, nth: usize, message: String| ScenarioError {
            kind,
            section: section.to_string(),
            line: src.and_then(|s| section_line(s, section, nth)),
            message,
        };
        use ScenarioErrorKind::*;

        let n = self.robots.count;
        if n == 0 {
            return Err(err(Invalid, "robots", 0, "count must be at least 1".into()));
        }
        let r = self.robots.radius;
        if !(r > 0.0 && r.is_finite()) {
            return Err(err(
                Invalid,
                "robots",
                0,
                format!("radius must be positive, got {r}"),
            ));
        }
        let zero_based = |pair: [usize; 2]| -> Option<(usize, usize)> {
            (pair[0] >= 1 && pair[1] >= 1).then(|| (pair[0] - 1, pair[1] - 1))
        };
        let mut pairs = Vec::new();
        for e in &self.graph.edges {
            pairs.push(zero_based(*e).ok_or_else(|| {
                err(
                    Invalid,
                    "graph",
                    0,
                    format!("labels are one-based, got {{{}, {}}}", e[0], e[1]),
                )
            })?);
        }
        let graph =
            FormationGraph::new(n, &pairs).map_err(|e| err(Invalid, "graph", 0, one_based(&e)))?;

        let uses_distance = self.targets.first().is_some_and(|t| t.d_star.is_some());
        let mut constraints = Vec::new();
        for (k, t) in self.targets.iter().enumerate() {
            let edge = zero_based(t.edge).ok_or_else(|| {
                err(
                    Invalid,
                    "targets",
                    k,
                    format!("labels are one-based, got {{{}, {}}}", t.edge[0], t.edge[1]),
                )
            })?;
            let label = format!("{{{}, {}}}", t.edge[0], t.edge[1]);
            let c = match (t.d_star, t.cos_star) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(err(
                        Parse,
                        "targets",
                        k,
                        format!("edge {label} needs exactly one of d_star or cos_star"),
                    ))
                }
                (Some(d), None) => {
                    if !uses_distance {
                        return Err(err(
                            Parse,
                            "targets",
                            k,
                            "mixed d_star and cos_star targets".into(),
                        ));
                    }
                    AngleConstraint::from_distance(edge, d, r).map_err(|_| {
                        err(
                            InfeasibleTarget,
                            "targets",
                            k,
                            format!("edge {label}: d_star = {d} must exceed 2r = {}", 2.0 * r),
                        )
                    })?
                }
                (None, Some(c)) => {
                    if uses_distance {
                        return Err(err(
                            Parse,
                            "targets",
                            k,
                            "mixed d_star and cos_star targets".into(),
                        ));
                    }
                    AngleConstraint::from_cos(edge, c).map_err(|_| {
                        err(
                            InfeasibleTarget,
                            "targets",
                            k,
                            format!("edge {label}: cos_star = {c} must lie in (1/2, 1)"),
                        )
                    })?
                }
            };
            constraints.push(c);
        }
        let constraints = ConstraintSet::new(&graph, &constraints)
            .map_err(|e| err(Invalid, "targets", 0, one_based(&e)))?;

        if self.initial.positions.len() != n {
            return Err(err(
                Invalid,
                "initial",
                0,
                format!(
                    "expected {n} positions, found {}",
                    self.initial.positions.len()
                ),
            ));
        }
        let pts: Vec<_> = self
            .initial
            .positions
            .iter()
            .map(|p| nalgebra::Vector2::new(p[0], p[1]))
            .collect();
        let initial = Configuration::from_points(&pts);

        let mut s = Scenario::new(graph, r, initial, constraints).map_err(|e| match e {
            FormationError::Infeasible { i, j, distance, .. } => err(
                InfeasibleInitial,
                "initial",
                0,
                format!(
                    "robots {} and {} start {distance} apart, not clear of 2r = {}",
                    i + 1,
                    j + 1,
                    2.0 * r
                ),
            ),
            other => err(InfeasibleInitial, "initial", 0, one_based(&other)),
        })?;
        s.gain = self.control.gain;
        s.controller = self.control.controller;
        let i = &self.integration;
        s.dt = i.dt;
        s.t_final = i.t_final;
        s.output_decimation = i.output_decimation;
        s.early_stop_tol = (i.early_stop_tol > 0.0).then_some(i.early_stop_tol);
        s.seed = i.seed;
        s.validate().map_err(|e| {
            let section = match e {
                FormationError::InvalidParameter(ref m) if m.starts_with("gain") => "control",
                _ => "integration",
            };
            err(Invalid, section, 0, e.to_string())
        })?;
        Ok(s)
    }

    /// File form of an in-memory scenario (desired cosines, one-based labels).
    pub fn from_scenario(s: &Scenario) -> Self {
        let edges: Vec<[usize; 2]> = s
            .graph
            .edges()
            .iter()
            .map(|&(i, j)| [i + 1, j + 1])
            .collect();
        Self {
            robots: RobotsSection {
                count: s.graph.n_vertices(),
                radius: s.radius,
            },
            targets: s
                .constraints
                .as_slice()
                .iter()
                .map(|k| TargetEntry {
                    edge: [k.edge.0 + 1, k.edge.1 + 1],
                    d_star: None,
                    cos_star: Some(k.cos_star),
                })
                .collect(),
            graph: GraphSection { edges },
            initial: InitialSection {
                positions: s.initial.points().iter().map(|p| [p.x, p.y]).collect(),
            },
            control: ControlSection {
                gain: s.gain,
                controller: s.controller,
            },
            integration: IntegrationSection {
                dt: s.dt,
                t_final: s.t_final,
                output_decimation: s.output_decimation,
                early_stop_tol: s.early_stop_tol.unwrap_or(0.0),
                seed: s.seed,
            },
        }
    }
}

/// Error text with vertex labels shifted to the one-based file convention.
fn one_based(e: &FormationError) -> String {
    match e {
        FormationError::SelfLoop(v) => format!("self-loop on robot {}", v + 1),
        FormationError::DuplicateEdge(i, j) => format!("duplicate edge {{{}, {}}}", i + 1, j + 1),
        FormationError::VertexOutOfRange { vertex, n } => {
            format!("robot {} out of range 1..={n}", vertex + 1)
        }
        FormationError::UnknownEdge(i, j) => {
            format!(
                "target for {{{}, {}}} which is not a graph edge",
                i + 1,
                j + 1
            )
        }
        FormationError::MissingConstraint(i, j) => {
            format!("edge {{{}, {}}} has no target", i + 1, j + 1)
        }
        other => other.to_string(),
    }
}

/// Parses and validates scenario text in one go.
pub fn load_scenario(src: &str) -> Result<Scenario, ScenarioError> {
    ScenarioFile::parse(src)?.to_scenario(Some(src))
}

/// The bundled four-robot rectangle scenario.
pub const RECT4: &str = include_str!("../../../scenarios/rect4.scn");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_rectangle_matches_builtin() {
        let s = load_scenario(RECT4).unwrap();
        let b = Scenario::rectangle();
        assert_eq!(s.graph, b.graph);
        assert_eq!(s.initial, b.initial);
        assert_eq!(s.constraints, b.constraints);
        assert_eq!(s.gain, 50.0);
        assert_eq!(s.radius, 1.0);
    }

    fn with_targets(targets: &str, initial: &str) -> String {
        format!(
            "[robots]\ncount = 2\nradius = 1.0\n\n[graph]\nedges = [[1, 2]]\n\n{targets}\n[initial]\npositions = {initial}\n"
        )
    }

    #[test]
    fn infeasible_target_distance() {
        let src = with_targets(
            "[[targets]]\nedge = [1, 2]\nd_star = 1.5\n",
            "[[0.0, 0.0], [3.0, 0.0]]",
        );
        let e = load_scenario(&src).unwrap_err();
        assert_eq!(e.kind, ScenarioErrorKind::InfeasibleTarget);
        assert_eq!(e.section, "targets");
        assert_eq!(e.line, Some(8));
    }

    #[test]
    fn overlapping_start() {
        let src = with_targets(
            "[[targets]]\nedge = [1, 2]\nd_star = 3.0\n",
            "[[0.0, 0.0], [1.5, 0.0]]",
        );
        let e = load_scenario(&src).unwrap_err();
        assert_eq!(e.kind, ScenarioErrorKind::InfeasibleInitial);
        assert!(e.message.contains("robots 1 and 2"));
    }

    #[test]
    fn target_kind_rules() {
        let both = with_targets(
            "[[targets]]\nedge = [1, 2]\nd_star = 3.0\ncos_star = 0.8\n",
            "[[0.0, 0.0], [3.0, 0.0]]",
        );
        assert_eq!(
            load_scenario(&both).unwrap_err().kind,
            ScenarioErrorKind::Parse
        );

        let mixed = "[robots]\ncount = 3\nradius = 1.0\n[graph]\nedges = [[1, 2], [2, 3]]\n\
            [[targets]]\nedge = [1, 2]\nd_star = 3.0\n[[targets]]\nedge = [2, 3]\ncos_star = 0.8\n\
            [initial]\npositions = [[0.0, 0.0], [3.0, 0.0], [6.0, 0.0]]\n";
        let e = load_scenario(mixed).unwrap_err();
        assert_eq!(e.kind, ScenarioErrorKind::Parse);
        assert!(e.message.contains("mixed"));
        assert_eq!(e.line, Some(9));
    }

    #[test]
    fn structural_errors_carry_context() {
        let e = load_scenario("[robots]\ncount = 2\nradius = 'x'\n").unwrap_err();
        assert_eq!(e.kind, ScenarioErrorKind::Parse);
        assert_eq!(e.line, Some(3));

        let src = with_targets(
            "[[targets]]\nedge = [1, 3]\nd_star = 3.0\n",
            "[[0.0, 0.0], [3.0, 0.0]]",
        );
        let e = load_scenario(&src).unwrap_err();
        assert!(e.message.contains("not a graph edge") || e.message.contains("out of range"));

        let src = with_targets("[[targets]]\nedge = [1, 2]\nd_star = 3.0\n", "[[0.0, 0.0]]");
        assert_eq!(load_scenario(&src).unwrap_err().section, "initial");
    }

    #[test]
    fn file_form_round_trip() {
        let s = Scenario::rectangle();
        let text = ScenarioFile::from_scenario(&s).to_toml();
        let back = load_scenario(&text).unwrap();
        assert_eq!(back.constraints, s.constraints);
        assert_eq!(back.initial, s.initial);
        assert_eq!(back.gain, s.gain);
    }
}
