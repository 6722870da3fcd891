//! JSON problem files: right-hand side, history, delay and solver settings.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::hist_space::{GridFunction, PNorm, VecNorm};
use crate::rhs::{Builtin, Matrix, RhsModel};
use crate::sensitivity::SensitivityDirection;
use crate::solver::SolveConfig;

/// Parses JSON and reports failures with the path of the offending field.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            Error::InvalidSpec(inner.to_string())
        } else {
            Error::InvalidSpec(format!("field `{path}`: {inner}"))
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhsSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: Map<String, Value>,
    },
    Expr {
        expr: Vec<String>,
    },
}

/// Scalar or per-component vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Component {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Component {
    fn expand(&self, dim: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            Component::Scalar(v) => Ok(vec![*v; dim]),
            Component::Vector(v) if v.len() == dim => Ok(v.clone()),
            Component::Vector(v) => Err(Error::InvalidSpec(format!(
                "field `{field}` has {} components, expected {dim}",
                v.len()
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearParams {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PureDelayParams {
    a: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MackeyGlassParams {
    #[serde(default = "two")]
    beta: f64,
    #[serde(default = "one")]
    gamma: f64,
    #[serde(default = "ten")]
    n: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IkedaParams {
    mu: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    value: Component,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn ten() -> f64 {
    10.0
}

fn params<T: DeserializeOwned>(name: &str, p: &Map<String, Value>) -> Result<T> {
    serde_path_to_error::deserialize(Value::Object(p.clone())).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            format!("rhs.params ({name})")
        } else {
            format!("rhs.params.{path} ({name})")
        };
        Error::InvalidSpec(format!("field `{field}`: {}", e.into_inner()))
    })
}

fn square(rows: Vec<Vec<f64>>, dim: usize, field: &str) -> Result<Matrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidSpec(format!(
            "field `{field}` must be a {dim}x{dim} matrix"
        )));
    }
    Matrix::from_rows(&rows)
        .ok_or_else(|| Error::InvalidSpec(format!("field `{field}` is not square")))
}

impl RhsSpec {
    pub fn build(&self, dim: usize) -> Result<RhsModel> {
        let model = match self {
            RhsSpec::Expr { expr } => RhsModel::from_exprs(expr)?,
            RhsSpec::Builtin { builtin, params: p } => {
                let b = match builtin.as_str() {
                    "linear" => {
                        let lp: LinearParams = params(builtin, p)?;
                        Builtin::Linear {
                            a: square(lp.a, dim, "rhs.params.a")?,
                            b: square(lp.b, dim, "rhs.params.b")?,
                        }
                    }
                    "pure_delay" => Builtin::PureDelay {
                        a: params::<PureDelayParams>(builtin, p)?.a,
                        dim,
                    },
                    "logistic" => {
                        params::<NoParams>(builtin, p)?;
                        Builtin::Logistic { dim }
                    }
                    "mackey_glass" => {
                        let mg: MackeyGlassParams = params(builtin, p)?;
                        Builtin::MackeyGlass {
                            beta: mg.beta,
                            gamma: mg.gamma,
                            n: mg.n,
                            dim,
                        }
                    }
                    "ikeda" => Builtin::Ikeda {
                        mu: params::<IkedaParams>(builtin, p)?.mu,
                        dim,
                    },
                    "constant" => Builtin::Constant {
                        value: params::<ConstantParams>(builtin, p)?
                            .value
                            .expand(dim, "rhs.params.value")?,
                    },
                    other => {
                        return Err(Error::InvalidSpec(format!(
                            "field `rhs.builtin`: unknown model `{other}`, expected one of \
                             linear, pure_delay, logistic, mackey_glass, ikeda, constant"
                        )))
                    }
                };
                RhsModel::builtin(b)
            }
        };
        if model.dim() != dim {
            return Err(Error::InvalidSpec(format!(
                "field `dim`: {dim} does not match the right-hand side dimension {}",
                model.dim()
            )));
        }
        Ok(model)
    }
}

/// History generator, sampled on the grid of step `h` over `[-R, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum HistoryGenerator {
    /// `phi = value`.
    Const { value: Component },
    /// `phi(theta) = value + slope theta`.
    Linear { value: Component, slope: Component },
    /// `phi(theta) = offset + scale |theta - center|`.
    Kink {
        center: f64,
        #[serde(default = "default_scale")]
        scale: Component,
        #[serde(default = "default_offset")]
        offset: Component,
    },
    /// Node values, one row per node; with `t`, arbitrary sample times
    /// covering `[-R, 0]` that are linearly interpolated onto the grid.
    Samples {
        #[serde(default)]
        t: Option<Vec<f64>>,
        values: Vec<Vec<f64>>,
    },
}

fn default_scale() -> Component {
    Component::Scalar(1.0)
}

fn default_offset() -> Component {
    Component::Scalar(0.0)
}

impl HistoryGenerator {
    pub fn build(&self, lag: f64, segments: usize, dim: usize) -> Result<GridFunction> {
        match self {
            HistoryGenerator::Const { value } => {
                GridFunction::constant(-lag, 0.0, segments, &value.expand(dim, "phi.params.value")?)
            }
            HistoryGenerator::Linear { value, slope } => {
                let v = value.expand(dim, "phi.params.value")?;
                let s = slope.expand(dim, "phi.params.slope")?;
                GridFunction::from_fn(-lag, 0.0, segments, dim, |t, row| {
                    for (i, x) in row.iter_mut().enumerate() {
                        *x = v[i] + s[i] * t;
                    }
                })
            }
            HistoryGenerator::Kink {
                center,
                scale,
                offset,
            } => {
                let s = scale.expand(dim, "phi.params.scale")?;
                let o = offset.expand(dim, "phi.params.offset")?;
                GridFunction::from_fn(-lag, 0.0, segments, dim, |t, row| {
                    for (i, x) in row.iter_mut().enumerate() {
                        *x = o[i] + s[i] * (t - center).abs();
                    }
                })
            }
            HistoryGenerator::Samples { t: None, values } => {
                if values.len() != segments + 1 {
                    return Err(Error::InvalidSpec(format!(
                        "field `phi.params.values`: {} rows, expected {} nodes",
                        values.len(),
                        segments + 1
                    )));
                }
                let g = GridFunction::from_rows(-lag, 0.0, values)?;
                if g.dim() != dim {
                    return Err(Error::InvalidSpec(format!(
                        "field `phi.params.values`: rows have {} components, expected {dim}",
                        g.dim()
                    )));
                }
                Ok(g)
            }
            HistoryGenerator::Samples { t: Some(t), values } => {
                if t.len() != values.len() || t.len() < 2 {
                    return Err(Error::InvalidSpec(
                        "field `phi.params.t`: needs at least two times, one per row of `values`"
                            .into(),
                    ));
                }
                if t.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidSpec(
                        "field `phi.params.t`: times must increase".into(),
                    ));
                }
                let tol = 1e-9 * lag.max(1.0);
                if t[0] > -lag + tol || t[t.len() - 1] < -tol {
                    return Err(Error::InvalidSpec(format!(
                        "field `phi.params.t`: samples must cover [-{lag}, 0]"
                    )));
                }
                if values.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidSpec(format!(
                        "field `phi.params.values`: every row needs {dim} components"
                    )));
                }
                GridFunction::from_fn(-lag, 0.0, segments, dim, |s, row| {
                    let k = t.partition_point(|&x| x <= s).clamp(1, t.len() - 1);
                    let w = ((s - t[k - 1]) / (t[k] - t[k - 1])).clamp(0.0, 1.0);
                    for (i, x) in row.iter_mut().enumerate() {
                        *x = (1.0 - w) * values[k - 1][i] + w * values[k][i];
                    }
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HistorySpec {
    Grid(GridFunction),
    Generator(HistoryGenerator),
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub rhs: RhsSpec,
    pub dim: usize,
    /// Length of the history interval.
    #[serde(rename = "R")]
    pub lag: f64,
    pub r: f64,
    pub phi: HistorySpec,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub vec_norm: VecNorm,
    pub h: f64,
    pub t_end: f64,
    /// Any `SolveConfig` field other than `p_norm`, `h` and `t_end`.
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

/// Everything a solve needs, validated.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: RhsModel,
    pub phi: GridFunction,
    pub r: f64,
    pub cfg: SolveConfig,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        from_json_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Grid intervals on `[-R, 0]`; `R / h` must be an integer.
    pub fn segments(&self) -> Result<usize> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "field `h`: must be positive, got {}",
                self.h
            )));
        }
        if !(self.lag > 0.0 && self.lag.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "field `R`: must be positive, got {}",
                self.lag
            )));
        }
        let ratio = self.lag / self.h;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidSpec(format!(
                "field `h`: R / h = {ratio} is not an integer"
            )));
        }
        Ok(m as usize)
    }

    pub fn config(&self) -> Result<SolveConfig> {
        let p_norm = PNorm::new(self.p, self.vec_norm)
            .map_err(|e| Error::InvalidSpec(format!("field `p`: {e}")))?;
        let mut cfg = SolveConfig::new(self.h, self.t_end).with_p_norm(p_norm);
        if !self.overrides.is_empty() {
            let mut base = serde_json::to_value(&cfg)?;
            let obj = base
                .as_object_mut()
                .expect("config serializes to an object");
            for (k, v) in &self.overrides {
                if matches!(k.as_str(), "p_norm" | "h" | "t_end") || !obj.contains_key(k) {
                    return Err(Error::InvalidSpec(format!(
                        "field `overrides.{k}`: not an overridable solver setting"
                    )));
                }
                obj.insert(k.clone(), v.clone());
            }
            cfg = serde_path_to_error::deserialize(base).map_err(|e| {
                let path = e.path().to_string();
                Error::InvalidSpec(format!("field `overrides.{path}`: {}", e.into_inner()))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn history(&self) -> Result<GridFunction> {
        let segments = self.segments()?;
        let phi = match &self.phi {
            HistorySpec::Grid(g) => g.clone(),
            HistorySpec::Generator(gen) => gen.build(self.lag, segments, self.dim)?,
        };
        let tol = 1e-9 * self.lag;
        if (phi.a() + self.lag).abs() > tol || phi.b().abs() > tol {
            return Err(Error::InvalidSpec(format!(
                "field `phi`: domain [{}, {}] is not [-{}, 0]",
                phi.a(),
                phi.b(),
                self.lag
            )));
        }
        if phi.segments() != segments {
            return Err(Error::InvalidSpec(format!(
                "field `phi`: {} intervals, but R / h = {segments}",
                phi.segments()
            )));
        }
        if phi.dim() != self.dim {
            return Err(Error::InvalidSpec(format!(
                "field `phi`: dimension {} differs from dim = {}",
                phi.dim(),
                self.dim
            )));
        }
        Ok(phi)
    }

    pub fn build(&self) -> Result<Problem> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("field `dim`: must be at least 1".into()));
        }
        if !(self.r >= 0.0 && self.r <= self.lag) {
            return Err(Error::InvalidSpec(format!(
                "field `r`: {} is outside [0, R = {}]",
                self.r, self.lag
            )));
        }
        let cfg = self.config()?;
        Ok(Problem {
            model: self.rhs.build(self.dim)?,
            phi: self.history()?,
            r: self.r,
            cfg,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChiSpec {
    Zero(ZeroTag),
    Grid(GridFunction),
    Generator(HistoryGenerator),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroTag {
    Zero,
}

/// `{"chi": GridFunction | "zero" | generator, "xi": real}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionSpec {
    pub chi: ChiSpec,
    #[serde(default)]
    pub xi: f64,
}

impl DirectionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        from_json_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Direction on the grid of `phi`.
    pub fn build(&self, phi: &GridFunction) -> Result<SensitivityDirection> {
        if !self.xi.is_finite() {
            return Err(Error::InvalidSpec("field `xi`: must be finite".into()));
        }
        let chi = match &self.chi {
            ChiSpec::Zero(_) => GridFunction::zeros(phi.a(), phi.b(), phi.segments(), phi.dim())?,
            ChiSpec::Grid(g) => g.clone(),
            ChiSpec::Generator(gen) => gen.build(-phi.a(), phi.segments(), phi.dim())?,
        };
        if !chi.same_grid(phi) {
            return Err(Error::InvalidSpec(
                "field `chi`: grid differs from the history grid".into(),
            ));
        }
        Ok(SensitivityDirection { chi, xi: self.xi })
    }
}
