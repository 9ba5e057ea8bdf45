//! JSON system definitions: a chart plus named objects written in the
//! expression grammar.

use std::collections::BTreeMap;
use std::path::Path;

use geomech_core::expr::{parse_with, Chart, ChartError, Definitions, Expr, Flavor, ParseError};
use geomech_core::geometry::{sort_with_sign, Form, PForm, Scalar, Tensor11, VectorField, VolumeForm};
use geomech_core::lagrangian::{build_structures, sode, sode_symbolic, SYMBOLIC_SODE_MAX_DIM};
use geomech_core::symplectic::{canonical_symplectic, hamiltonian_vector_field, SymplecticForm};
use geomech_core::Region;
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}:{column}: {message}")]
    Json {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{file}:{line}:{column}: in {object}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        object: String,
        message: String,
    },
    #[error("{object}: {message}")]
    Invalid { object: String, message: String },
    #[error("undefined {kind} `{name}`")]
    Undefined { kind: &'static str, name: String },
    #[error("{object}: expected {expected} components, found {found}")]
    Dimension {
        object: String,
        expected: usize,
        found: usize,
    },
    #[error("chart: {0}")]
    Chart(#[from] ChartError),
}

fn invalid(object: impl Into<String>, message: impl ToString) -> SpecError {
    SpecError::Invalid {
        object: object.into(),
        message: message.to_string(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    dim: usize,
    names: Option<Vec<String>>,
    #[serde(default = "plain")]
    flavor: Flavor,
    #[serde(rename = "box")]
    bounds: Option<RawBox>,
}

fn plain() -> Flavor {
    Flavor::Plain
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawBox {
    Uniform([f64; 2]),
    PerAxis(Vec<[f64; 2]>),
}

impl RawBox {
    fn region(&self, dim: usize) -> Result<Region, SpecError> {
        let pairs = match self {
            RawBox::Uniform(p) => vec![*p; dim],
            RawBox::PerAxis(v) if v.len() == dim => v.clone(),
            RawBox::PerAxis(v) => {
                return Err(SpecError::Dimension {
                    object: "chart.box".into(),
                    expected: dim,
                    found: v.len(),
                })
            }
        };
        if pairs.iter().any(|[a, b]| !(a < b)) {
            return Err(invalid("chart.box", "every interval needs lo < hi"));
        }
        Ok(Region::new(pairs.iter().map(|p| p[0]).collect(), pairs.iter().map(|p| p[1]).collect()))
    }
}

/// Parses `lo,hi` (all axes) or `lo:hi,lo:hi,…` (per axis).
pub fn parse_box(text: &str, dim: usize) -> Result<Region, SpecError> {
    let err = || invalid("--box", format!("cannot read `{text}`; use lo,hi or lo:hi,lo:hi,..."));
    let raw = if text.contains(':') {
        let axes = text
            .split(',')
            .map(|a| {
                let (lo, hi) = a.split_once(':').ok_or_else(err)?;
                Ok([lo.trim().parse().map_err(|_| err())?, hi.trim().parse().map_err(|_| err())?])
            })
            .collect::<Result<Vec<[f64; 2]>, SpecError>>()?;
        RawBox::PerAxis(axes)
    } else {
        let v: Vec<f64> = text.split(',').map(|s| s.trim().parse().map_err(|_| err())).collect::<Result<_, _>>()?;
        match v[..] {
            [lo, hi] => RawBox::Uniform([lo, hi]),
            _ => return Err(err()),
        }
    };
    raw.region(dim)
}

/// A loaded system.
#[derive(Debug)]
pub struct System {
    pub file: String,
    pub chart: Chart,
    pub region: Region,
    pub description: Option<String>,
    scalars: BTreeMap<String, Expr>,
    vectors: BTreeMap<String, VectorField>,
    base_vectors: BTreeMap<String, VectorField>,
    forms: BTreeMap<String, PForm>,
    tensors: BTreeMap<String, Tensor11>,
    volumes: BTreeMap<String, VolumeForm>,
}

/// Locates expression text inside the raw file for error positions.
struct Locator<'a> {
    file: &'a str,
    text: &'a str,
}

impl Locator<'_> {
    fn parse_error(&self, object: &str, expr_text: &str, err: ParseError) -> SpecError {
        let needle = serde_json::to_string(expr_text).unwrap_or_default();
        let key = serde_json::to_string(object.rsplit('.').next().unwrap_or(object)).unwrap_or_default();
        let from = self.text.find(&key).unwrap_or(0);
        let (line, column) = match self.text[from..].find(&needle) {
            Some(off) => {
                let at = from + off;
                let line = self.text[..at].matches('\n').count() + 1;
                let col = self.text[..at].rsplit('\n').next().map_or(0, |l| l.chars().count());
                // +1 for 1-based, +1 for the opening quote
                (line, col + 1 + err.column)
            }
            None => (0, err.column),
        };
        SpecError::Parse {
            file: self.file.to_string(),
            line,
            column,
            object: object.to_string(),
            message: err.message,
        }
    }
}

fn default_names(dim: usize, flavor: Flavor) -> Vec<String> {
    let n = dim / 2;
    match flavor {
        Flavor::Plain => (1..=dim).map(|i| format!("x{i}")).collect(),
        Flavor::Tangent => Chart::tangent(n).names().to_vec(),
        Flavor::Cotangent => Chart::cotangent(n).names().to_vec(),
    }
}

fn as_str<'v>(object: &str, v: &'v Value) -> Result<&'v str, SpecError> {
    v.as_str().ok_or_else(|| invalid(object, "expected an expression string"))
}

fn as_object<'v>(object: &str, v: &'v Value) -> Result<&'v Map<String, Value>, SpecError> {
    v.as_object().ok_or_else(|| invalid(object, "expected a JSON object"))
}

impl System {
    pub fn load(path: &Path) -> Result<System, SpecError> {
        let file = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
            file: file.clone(),
            source,
        })?;
        System::from_str(&file, &text)
    }

    pub fn from_str(file: &str, text: &str) -> Result<System, SpecError> {
        let json_err = |e: serde_json::Error| SpecError::Json {
            file: file.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let root: Value = serde_json::from_str(text).map_err(json_err)?;
        let root = as_object("system", &root)?;
        for key in root.keys() {
            if !["chart", "description", "scalars", "vectors", "forms", "tensors11", "volumes"].contains(&key.as_str()) {
                return Err(invalid("system", format!("unknown key `{key}`")));
            }
        }
        let raw_chart: RawChart =
            serde_json::from_value(root.get("chart").cloned().ok_or_else(|| invalid("system", "missing `chart`"))?)
                .map_err(|e| invalid("chart", e))?;
        let names = raw_chart.names.clone().unwrap_or_else(|| default_names(raw_chart.dim, raw_chart.flavor));
        if names.len() != raw_chart.dim {
            return Err(SpecError::Dimension {
                object: "chart.names".into(),
                expected: raw_chart.dim,
                found: names.len(),
            });
        }
        let chart = Chart::new(&names, raw_chart.flavor)?;
        let region = match &raw_chart.bounds {
            Some(b) => b.region(chart.dim())?,
            None => Region::default_box(chart.dim()),
        };
        let mut sys = System {
            file: file.to_string(),
            chart,
            region,
            description: root.get("description").and_then(Value::as_str).map(str::to_string),
            scalars: BTreeMap::new(),
            vectors: BTreeMap::new(),
            base_vectors: BTreeMap::new(),
            forms: BTreeMap::new(),
            tensors: BTreeMap::new(),
            volumes: BTreeMap::new(),
        };
        let loc = Locator { file, text };
        let empty = Map::new();
        let section = |key: &str| -> Result<&Map<String, Value>, SpecError> {
            root.get(key).map_or(Ok(&empty), |v| as_object(key, v))
        };
        let mut defs = Definitions::new();
        for (name, v) in section("scalars")? {
            let object = format!("scalars.{name}");
            let e = sys.expr(&loc, &object, as_str(&object, v)?, &sys.chart.clone(), &defs)?;
            defs.insert(name.clone(), e.clone());
            sys.scalars.insert(name.clone(), e);
        }
        for (name, v) in section("volumes")? {
            let object = format!("volumes.{name}");
            let e = sys.expr(&loc, &object, as_str(&object, v)?, &sys.chart.clone(), &defs)?;
            sys.volumes.insert(name.clone(), VolumeForm::new(sys.chart.clone(), e).map_err(|e| invalid(&object, e))?);
        }
        for (name, v) in section("forms")? {
            let form = sys.parse_form(&loc, &format!("forms.{name}"), v, &defs)?;
            sys.forms.insert(name.clone(), form);
        }
        for (name, v) in section("tensors11")? {
            let object = format!("tensors11.{name}");
            let rows = v.as_array().ok_or_else(|| invalid(&object, "expected an array of rows"))?;
            let n = sys.chart.dim();
            if rows.len() != n {
                return Err(SpecError::Dimension {
                    object,
                    expected: n,
                    found: rows.len(),
                });
            }
            let mut comps = Vec::with_capacity(n);
            for (i, row) in rows.iter().enumerate() {
                let obj = format!("{object}[{i}]");
                let row = row.as_array().ok_or_else(|| invalid(&obj, "expected a row array"))?;
                if row.len() != n {
                    return Err(SpecError::Dimension {
                        object: obj,
                        expected: n,
                        found: row.len(),
                    });
                }
                comps.push(
                    row.iter()
                        .map(|c| sys.expr(&loc, &obj, as_str(&obj, c)?, &sys.chart.clone(), &defs))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            sys.tensors.insert(name.clone(), Tensor11::new(sys.chart.clone(), comps).map_err(|e| invalid(&object, e))?);
        }
        for (name, v) in section("vectors")? {
            let object = format!("vectors.{name}");
            sys.define_vector(&loc, &object, name, v, &defs)?;
        }
        Ok(sys)
    }

    fn expr(&self, loc: &Locator, object: &str, text: &str, chart: &Chart, defs: &Definitions) -> Result<Expr, SpecError> {
        let e = parse_with(text, chart, defs).map_err(|e| loc.parse_error(object, text, e))?;
        if let Some(i) = e.max_var().filter(|&i| i >= chart.dim()) {
            return Err(invalid(object, format!("references coordinate {i} outside the chart")));
        }
        Ok(e.simplify())
    }

    fn components(&self, loc: &Locator, object: &str, v: &Value, chart: &Chart, defs: &Definitions) -> Result<Vec<Expr>, SpecError> {
        let arr = v.as_array().ok_or_else(|| invalid(object, "expected an array of component expressions"))?;
        if arr.len() != chart.dim() {
            return Err(SpecError::Dimension {
                object: object.to_string(),
                expected: chart.dim(),
                found: arr.len(),
            });
        }
        arr.iter().map(|c| self.expr(loc, object, as_str(object, c)?, chart, defs)).collect()
    }

    fn define_vector(&mut self, loc: &Locator, object: &str, name: &str, v: &Value, defs: &Definitions) -> Result<(), SpecError> {
        if v.is_array() {
            let comps = self.components(loc, object, v, &self.chart.clone(), defs)?;
            self.vectors.insert(name.to_string(), VectorField::new(self.chart.clone(), comps).map_err(|e| invalid(object, e))?);
            return Ok(());
        }
        let spec = as_object(object, v)?;
        if let Some(base) = spec.get("base") {
            if self.chart.flavor() == Flavor::Plain {
                return Err(invalid(object, "`base` fields need a tangent or cotangent chart"));
            }
            let b = self.chart.base();
            let comps = self.components(loc, object, base, &b, defs)?;
            self.base_vectors.insert(name.to_string(), VectorField::new(b, comps).map_err(|e| invalid(object, e))?);
        } else if let Some(h) = spec.get("hamiltonian") {
            let h = self.scalar(as_str(object, h)?)?;
            let omega = self.symplectic(spec.get("omega").and_then(Value::as_str))?;
            let x = hamiltonian_vector_field(&Scalar::Expr(h), &omega).map_err(|e| invalid(object, e))?;
            self.vectors.insert(name.to_string(), x);
        } else if let Some(l) = spec.get("lagrangian") {
            let l = self.scalar(as_str(object, l)?)?;
            let sys = build_structures(&l, &self.chart, &[]).map_err(|e| invalid(object, e))?;
            let gamma = if self.chart.base_dim() <= SYMBOLIC_SODE_MAX_DIM {
                sode_symbolic(&sys).map_err(|e| invalid(object, e))?
            } else {
                sode(&sys)
            };
            self.vectors.insert(name.to_string(), gamma);
        } else {
            return Err(invalid(object, "expected components, {\"base\": …}, {\"hamiltonian\": …} or {\"lagrangian\": …}"));
        }
        Ok(())
    }

    fn parse_form(&self, loc: &Locator, object: &str, v: &Value, defs: &Definitions) -> Result<PForm, SpecError> {
        let spec = as_object(object, v)?;
        let degree = spec
            .get("degree")
            .and_then(Value::as_u64)
            .ok_or_else(|| invalid(object, "missing integer `degree`"))? as usize;
        let comps = as_object(object, spec.get("components").unwrap_or(&Value::Null))
            .map_err(|_| invalid(object, "missing `components` object"))?;
        let mut terms = Vec::new();
        for (key, c) in comps {
            let idx = key
                .split(',')
                .map(|n| {
                    self.chart
                        .index_of(n.trim())
                        .ok_or_else(|| invalid(object, format!("unknown coordinate `{}` in `{key}`", n.trim())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if idx.len() != degree {
                return Err(SpecError::Dimension {
                    object: format!("{object}.{key}"),
                    expected: degree,
                    found: idx.len(),
                });
            }
            let e = self.expr(loc, &format!("{object}.{key}"), as_str(object, c)?, &self.chart, defs)?;
            let Some((sorted, odd)) = sort_with_sign(&idx) else {
                continue;
            };
            terms.push((sorted, if odd { (-e).simplify() } else { e }));
        }
        let mut acc = PForm::new(self.chart.clone(), degree, vec![]).map_err(|e| invalid(object, e))?;
        for t in terms {
            acc = acc.add(&Form::from_terms(self.chart.clone(), degree, [t]));
        }
        Ok(acc)
    }

    /// Names of the defined scalars, sorted.
    pub fn scalar_names(&self) -> impl Iterator<Item = &str> {
        self.scalars.keys().map(String::as_str)
    }

    pub fn scalar(&self, name: &str) -> Result<Expr, SpecError> {
        self.scalars.get(name).cloned().ok_or_else(|| SpecError::Undefined {
            kind: "scalar",
            name: name.to_string(),
        })
    }

    pub fn vector(&self, name: &str) -> Result<VectorField, SpecError> {
        self.vectors.get(name).cloned().ok_or_else(|| SpecError::Undefined {
            kind: "vector field",
            name: name.to_string(),
        })
    }

    pub fn base_vector(&self, name: &str) -> Result<VectorField, SpecError> {
        self.base_vectors.get(name).cloned().ok_or_else(|| SpecError::Undefined {
            kind: "base vector field",
            name: name.to_string(),
        })
    }

    pub fn form(&self, name: &str) -> Result<PForm, SpecError> {
        self.forms.get(name).cloned().ok_or_else(|| SpecError::Undefined {
            kind: "form",
            name: name.to_string(),
        })
    }

    pub fn tensor(&self, name: &str) -> Result<Tensor11, SpecError> {
        self.tensors.get(name).cloned().ok_or_else(|| SpecError::Undefined {
            kind: "tensor",
            name: name.to_string(),
        })
    }

    /// A named volume, or the coordinate volume when `name` is absent.
    pub fn volume(&self, name: Option<&str>) -> Result<VolumeForm, SpecError> {
        match name {
            None => Ok(VolumeForm::standard(self.chart.clone())),
            Some(n) => self.volumes.get(n).cloned().ok_or_else(|| SpecError::Undefined {
                kind: "volume",
                name: n.to_string(),
            }),
        }
    }

    /// A named 2-form, or the canonical form of a cotangent chart.
    pub fn symplectic(&self, name: Option<&str>) -> Result<SymplecticForm, SpecError> {
        let form = match name {
            Some(n) => self.form(n)?,
            None if self.chart.flavor() == Flavor::Cotangent => {
                return canonical_symplectic(&self.chart).map_err(|e| invalid("omega", e));
            }
            None => return Err(invalid("omega", "no symplectic form named and the chart is not cotangent")),
        };
        SymplecticForm::unchecked(form).map_err(|e| invalid(name.unwrap_or("omega"), e))
    }
}
