//! Run configuration read from a TOML file.
//!
//! Every section and key is optional; absent keys take the defaults below.
//! Unknown keys are rejected. Expression-valued keys are parsed eagerly by
//! [`RunConfig::validate`], so a malformed expression is reported before
//! any computation starts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::exhaustion::{ExhaustionOptions, SplitMode, Supersolution};
use crate::expr::{Expr, ExprError, Var};
use crate::field::ScalarField;
use crate::geometry::{
    build_exhaustion, build_half_plane_exhaustion, Exhaustion, GeometryError, Grid, Point,
    SpacingRule,
};
use crate::nonlinearity::{Nonlinearity, NonlinearityError};
use crate::operator::{Coefficient, EllipticCoefficients, ZeroOrderMode};
use crate::par::Execution;
use crate::solver::{Scheme, SolveOptions};
use crate::thinness::{CriterionOptions, GreenKernel, SetA, ThinnessCertificate, Witness};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("`{field}`: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    fn field(field: &str, message: impl ToString) -> Self {
        ConfigError::Field {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

fn expr(field: &str, text: &str) -> Result<Expr, ConfigError> {
    Expr::parse(text).map_err(|e: ExprError| ConfigError::field(field, e))
}

/// A number or a list of numbers.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn per_axis(&self, dim: usize) -> Option<Vec<f64>> {
        match self {
            OneOrMany::One(v) => Some(vec![*v; dim]),
            OneOrMany::Many(v) if v.len() == dim => Some(v.clone()),
            OneOrMany::Many(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    #[default]
    Box,
    HalfPlane,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExhaustionConfig {
    pub factor: f64,
    pub stages: usize,
    /// Half-plane mode: `y` of the bottom face (defaults to one spacing).
    pub delta: Option<f64>,
    /// Half-plane mode: radius of the first truncation.
    pub base_radius: f64,
    /// Overrides `domain.spacing`: node count of the finest stage along `x`.
    pub finest_nodes: Option<usize>,
    pub anchor: Option<Vec<f64>>,
}

impl Default for ExhaustionConfig {
    fn default() -> Self {
        Self {
            factor: 2.0,
            stages: 4,
            delta: None,
            base_radius: 4.0,
            finest_nodes: None,
            anchor: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub dim: Option<usize>,
    pub bbox: Vec<[f64; 2]>,
    pub spacing: OneOrMany,
    pub exhaustion: Option<ExhaustionConfig>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            kind: DomainKind::Box,
            dim: None,
            bbox: vec![[0.0, 1.0], [0.0, 1.0]],
            spacing: OneOrMany::One(1.0 / 16.0),
            exhaustion: None,
        }
    }
}

impl DomainConfig {
    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::HalfPlane => 2,
            DomainKind::Box => self.dim.unwrap_or(self.bbox.len()),
        }
    }

    fn bbox(&self) -> Result<Vec<(f64, f64)>, ConfigError> {
        let dim = self.dim();
        if !(1..=2).contains(&dim) {
            return Err(ConfigError::field(
                "domain.dim",
                format!("{dim} is not 1 or 2"),
            ));
        }
        if self.bbox.len() != dim {
            return Err(ConfigError::field(
                "domain.bbox",
                format!("expected {dim} intervals"),
            ));
        }
        Ok(self.bbox.iter().map(|b| (b[0], b[1])).collect())
    }

    fn spacing(&self) -> Result<Vec<f64>, ConfigError> {
        self.spacing.per_axis(self.dim()).ok_or_else(|| {
            ConfigError::field("domain.spacing", "expected one value or one per axis")
        })
    }

    fn geometry(e: GeometryError) -> ConfigError {
        ConfigError::field("domain", e)
    }

    /// The single grid of a box domain, or the finest stage of an exhaustion.
    pub fn grid(&self) -> Result<Arc<Grid>, ConfigError> {
        if self.exhaustion.is_some() || self.kind == DomainKind::HalfPlane {
            let exh = self.exhaustion()?;
            return Ok(exh.stages().last().expect("stages").clone());
        }
        let bbox = self.bbox()?;
        Ok(Arc::new(
            Grid::new_box(&bbox, &self.spacing()?).map_err(Self::geometry)?,
        ))
    }

    pub fn exhaustion(&self) -> Result<Exhaustion, ConfigError> {
        let cfg = self.exhaustion.clone().unwrap_or_default();
        let rule = match cfg.finest_nodes {
            Some(n) => SpacingRule::FinestNodes(n),
            None => SpacingRule::Fixed(self.spacing()?[0]),
        };
        let exh = match self.kind {
            DomainKind::Box => build_exhaustion(&self.bbox()?, cfg.factor, cfg.stages, rule),
            DomainKind::HalfPlane => build_half_plane_exhaustion(
                cfg.base_radius,
                cfg.factor,
                cfg.stages,
                rule,
                cfg.delta,
            ),
        }
        .map_err(Self::geometry)?;
        match &cfg.anchor {
            Some(a) => {
                let p = point("domain.exhaustion.anchor", a)?;
                exh.with_anchor(p)
                    .map_err(|e| ConfigError::field("domain.exhaustion.anchor", e))
            }
            None => Ok(exh),
        }
    }
}

fn point(field: &str, v: &[f64]) -> Result<Point, ConfigError> {
    match v {
        [x] => Ok([*x, 0.0]),
        [x, y] => Ok([*x, *y]),
        _ => Err(ConfigError::field(field, "expected 1 or 2 coordinates")),
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZeroOrderSetting {
    #[default]
    CZero,
    CNonpos,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    pub a11: String,
    pub a12: String,
    pub a22: String,
    pub b1: String,
    pub b2: String,
    pub c: String,
    pub zero_order_mode: ZeroOrderSetting,
    pub ellipticity_eps: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            a11: "1".into(),
            a12: "0".into(),
            a22: "1".into(),
            b1: "0".into(),
            b2: "0".into(),
            c: "0".into(),
            zero_order_mode: ZeroOrderSetting::CZero,
            ellipticity_eps: crate::operator::DEFAULT_ELLIPTICITY_EPS,
        }
    }
}

impl OperatorConfig {
    pub fn coefficients(&self) -> Result<EllipticCoefficients, ConfigError> {
        let coef = |name: &str, text: &str| -> Result<Coefficient, ConfigError> {
            Ok(expr(&format!("operator.{name}"), text)?.into())
        };
        let mode = match self.zero_order_mode {
            ZeroOrderSetting::CZero => ZeroOrderMode::Zero,
            ZeroOrderSetting::CNonpos => ZeroOrderMode::NonPositive,
        };
        let mut k = EllipticCoefficients::laplacian()
            .with_diffusion(
                coef("a11", &self.a11)?,
                coef("a12", &self.a12)?,
                coef("a22", &self.a22)?,
            )
            .with_drift(coef("b1", &self.b1)?, coef("b2", &self.b2)?)
            .with_c(coef("c", &self.c)?)
            .with_mode(mode);
        k.ellipticity_eps = self.ellipticity_eps;
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SplitSetting {
    Domination,
    Sum,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    pub phi: String,
    pub differentiable: bool,
    pub boundary_f: String,
    /// An expression in `x`, `y`, or `constant <value>`.
    pub super_s: String,
    /// Second nonlinearity for the split experiment of `exhaust`.
    pub phi2: Option<String>,
    pub split_mode: Option<SplitSetting>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            phi: "max(t, 0)".into(),
            differentiable: false,
            boundary_f: "1".into(),
            super_s: "constant 1".into(),
            phi2: None,
            split_mode: None,
        }
    }
}

impl NonlinearityConfig {
    fn build(&self, field: &str, text: &str, dim: usize) -> Result<Nonlinearity, ConfigError> {
        Nonlinearity::from_expr(expr(field, text)?, dim)
            .map(|p| p.with_differentiable(self.differentiable))
            .map_err(|e: NonlinearityError| ConfigError::field(field, e))
    }

    pub fn phi(&self, dim: usize) -> Result<Nonlinearity, ConfigError> {
        self.build("nonlinearity.phi", &self.phi, dim)
    }

    pub fn phi2(&self, dim: usize) -> Result<Option<Nonlinearity>, ConfigError> {
        self.phi2
            .as_deref()
            .map(|t| self.build("nonlinearity.phi2", t, dim))
            .transpose()
    }

    pub fn split_mode(&self) -> Option<SplitMode> {
        self.split_mode.map(|m| match m {
            SplitSetting::Domination => SplitMode::Domination,
            SplitSetting::Sum => SplitMode::Sum,
        })
    }

    fn boundary_expr(&self) -> Result<Expr, ConfigError> {
        let e = expr("nonlinearity.boundary_f", &self.boundary_f)?;
        if e.uses(Var::T) {
            return Err(ConfigError::field(
                "nonlinearity.boundary_f",
                "must not depend on t",
            ));
        }
        Ok(e)
    }

    /// Boundary data `f` sampled at every node of `grid`.
    pub fn boundary_f(&self, grid: &Grid) -> Result<ScalarField, ConfigError> {
        let e = self.boundary_expr()?;
        ScalarField::try_from_fn(grid, |p| e.eval(&crate::expr::Bindings::xy(p[0], p[1])))
            .map_err(|err| ConfigError::field("nonlinearity.boundary_f", err))
    }

    pub fn supersolution(&self) -> Result<Supersolution, ConfigError> {
        let text = self.super_s.trim();
        if let Some(rest) = text.strip_prefix("constant") {
            let c: f64 = rest.trim().parse().map_err(|_| {
                ConfigError::field("nonlinearity.super_s", format!("bad constant `{rest}`"))
            })?;
            return Ok(Supersolution::Constant(c));
        }
        let e = expr("nonlinearity.super_s", text)?;
        if e.uses(Var::T) {
            return Err(ConfigError::field(
                "nonlinearity.super_s",
                "must not depend on t",
            ));
        }
        Ok(Supersolution::Expr(Arc::new(e)))
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub scheme: String,
    pub tol: f64,
    pub max_iter: usize,
    pub omega: f64,
    pub parallel: bool,
    /// Scheme used by `exhaust`.
    pub exhaustion_scheme: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            scheme: d.scheme.to_string(),
            tol: d.tol,
            max_iter: d.max_iter,
            omega: d.omega,
            parallel: true,
            exhaustion_scheme: ExhaustionOptions::default().solve.scheme.to_string(),
        }
    }
}

impl SolverConfig {
    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    fn scheme(field: &str, text: &str) -> Result<Scheme, ConfigError> {
        text.parse().map_err(|e| ConfigError::field(field, e))
    }

    pub fn options(&self) -> Result<SolveOptions, ConfigError> {
        if !(self.tol > 0.0) {
            return Err(ConfigError::field("solver.tol", "must be positive"));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(ConfigError::field("solver.omega", "must lie in (0, 1]"));
        }
        Ok(SolveOptions {
            scheme: Self::scheme("solver.scheme", &self.scheme)?,
            tol: self.tol,
            max_iter: self.max_iter,
            omega: self.omega,
            validate: true,
            exec: self.execution(),
        })
    }

    pub fn exhaustion_options(&self) -> Result<ExhaustionOptions, ConfigError> {
        let solve = SolveOptions {
            scheme: Self::scheme("solver.exhaustion_scheme", &self.exhaustion_scheme)?,
            ..self.options()?
        };
        Ok(ExhaustionOptions {
            solve,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelSetting {
    #[default]
    Halfplane,
    Interval,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ThinnessConfig {
    /// Predicate in `x`, `y`; nonzero means "in A". Empty means `A = ∅`.
    pub set_a: String,
    pub witness: String,
    pub margin: f64,
    pub tol: f64,
    pub kernel: KernelSetting,
    /// Interval kernel: the interval `(a, b)`.
    pub interval: [f64; 2],
    pub c0: f64,
    pub anchor: Vec<f64>,
    pub radii: Vec<f64>,
    pub cell: f64,
    pub order: usize,
    /// `thin-check`: derive the certificate from an exhaustion run instead.
    pub probe: bool,
}

impl Default for ThinnessConfig {
    fn default() -> Self {
        let c = CriterionOptions::default();
        Self {
            set_a: "y > 1".into(),
            witness: "min(1, sqrt(y))".into(),
            margin: 0.1,
            tol: 1e-9,
            kernel: KernelSetting::Halfplane,
            interval: [0.0, 1.0],
            c0: 1.0,
            anchor: c.anchor.to_vec(),
            radii: c.radii,
            cell: c.cell,
            order: c.order,
            probe: false,
        }
    }
}

impl ThinnessConfig {
    pub fn set_a(&self) -> Result<SetA, ConfigError> {
        if self.set_a.trim().is_empty() {
            return Ok(SetA::empty());
        }
        let e = expr("thinness.set_a", &self.set_a)?;
        if e.uses(Var::T) {
            return Err(ConfigError::field("thinness.set_a", "must not depend on t"));
        }
        Ok(SetA::Predicate(Arc::new(e)))
    }

    pub fn certificate(&self) -> Result<ThinnessCertificate, ConfigError> {
        let w = expr("thinness.witness", &self.witness)?;
        if w.uses(Var::T) {
            return Err(ConfigError::field(
                "thinness.witness",
                "must not depend on t",
            ));
        }
        Ok(ThinnessCertificate {
            set_a: self.set_a()?,
            witness: Witness::Expr(Arc::new(w)),
            margin: self.margin,
        })
    }

    pub fn kernel(&self) -> GreenKernel {
        match self.kernel {
            KernelSetting::Halfplane => GreenKernel::HalfPlane,
            KernelSetting::Interval => GreenKernel::Interval {
                a: self.interval[0],
                b: self.interval[1],
            },
        }
    }

    pub fn criterion_options(&self, exec: Execution) -> Result<CriterionOptions, ConfigError> {
        Ok(CriterionOptions {
            anchor: point("thinness.anchor", &self.anchor)?,
            radii: self.radii.clone(),
            cell: self.cell,
            order: self.order,
            exec,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleSetting {
    #[default]
    Interval,
    Halfplane,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    pub oracle: OracleSetting,
    pub source: Vec<f64>,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self {
            oracle: OracleSetting::Interval,
            source: vec![0.5],
        }
    }
}

impl GreenConfig {
    pub fn source(&self) -> Result<Point, ConfigError> {
        point("green.source", &self.source)
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Significant digits of numeric CSV fields.
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            precision: 17,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub operator: OperatorConfig,
    pub nonlinearity: NonlinearityConfig,
    pub solver: SolverConfig,
    pub thinness: ThinnessConfig,
    pub green: GreenConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

impl std::str::FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    /// Parses every expression and resolves every enumerated setting.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let dim = self.domain.dim();
        self.domain.bbox()?;
        self.domain.spacing()?;
        self.operator
            .coefficients()?
            .check_variables(dim)
            .map_err(|e| ConfigError::field("operator", e))?;
        self.nonlinearity.phi(dim)?;
        self.nonlinearity.phi2(dim)?;
        if self.nonlinearity.phi2.is_some() != self.nonlinearity.split_mode.is_some() {
            return Err(ConfigError::field(
                "nonlinearity.split_mode",
                "phi2 and split_mode go together",
            ));
        }
        self.nonlinearity.boundary_expr()?;
        self.nonlinearity.supersolution()?;
        self.solver.options()?;
        self.solver.exhaustion_options()?;
        self.thinness.certificate()?;
        self.thinness.criterion_options(Execution::Sequential)?;
        self.green.source()?;
        if self.output.precision == 0 {
            return Err(ConfigError::field("output.precision", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg: RunConfig = "".parse().unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.domain.grid().unwrap().counts(), [17, 17]);
        assert_eq!(cfg.output.precision, 17);
    }

    #[test]
    fn full_config_round_trip() {
        let text = r#"
            [domain]
            kind = "half_plane"
            spacing = 0.5
            [domain.exhaustion]
            factor = 2.0
            stages = 3
            base_radius = 2.0
            [operator]
            b1 = "0.5"
            c = "-1"
            zero_order_mode = "c_nonpos"
            [nonlinearity]
            phi = "(y > 1) * max(t, 0)"
            super_s = "constant 2"
            [solver]
            scheme = "newton"
            tol = 1e-11
            [thinness]
            radii = [2, 4, 8, 16]
        "#;
        let cfg: RunConfig = text.parse().unwrap();
        let exh = cfg.domain.exhaustion().unwrap();
        assert_eq!(exh.stages().len(), 3);
        assert_eq!(cfg.solver.options().unwrap().scheme, Scheme::Newton);
        assert!(
            matches!(cfg.nonlinearity.supersolution().unwrap(), Supersolution::Constant(c) if c == 2.0)
        );
        assert_eq!(
            cfg.operator.coefficients().unwrap().mode,
            ZeroOrderMode::NonPositive
        );
    }

    fn field_of(text: &str) -> String {
        match text.parse::<RunConfig>() {
            Err(ConfigError::Field { field, .. }) => field,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            field_of("[nonlinearity]\nphi = \"max(t,\""),
            "nonlinearity.phi"
        );
        assert_eq!(field_of("[operator]\na11 = \"t\""), "operator");
        assert_eq!(field_of("[solver]\nscheme = \"bogus\""), "solver.scheme");
        assert_eq!(
            field_of("[domain]\nspacing = [0.1, 0.1, 0.1]"),
            "domain.spacing"
        );
        assert_eq!(
            field_of("[nonlinearity]\nsuper_s = \"constant x\""),
            "nonlinearity.super_s"
        );
        assert!(matches!(
            "[solver]\nbogus = 1".parse::<RunConfig>(),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn parse_error_carries_offset() {
        let err = "[nonlinearity]\nphi = \"max(t, 0) +\""
            .parse::<RunConfig>()
            .unwrap_err()
            .to_string();
        assert!(err.contains("offset"), "{err}");
    }
}
