use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;

use gbdt_core::explicit::{MethodChoice, SMethod};
use gbdt_core::grid::Grid;
use gbdt_core::linalg::ComplexMatrix;
use gbdt_core::seed::SeedPotential;
use gbdt_core::triple::{
    from_nested, make_example1, make_example2, make_example3, make_example4, random_example3,
    random_example4, seeded_rng, NestedMatrix, ParameterTriple, Sign, TripleDocument,
};

use crate::TripleArgs;

/// Error raised while reading or interpreting input; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0:#}")]
pub struct ParseError(pub anyhow::Error);

pub fn parse_err<T>(r: Result<T>) -> std::result::Result<T, ParseError> {
    r.map_err(ParseError)
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Auto,
    Sylvester,
    #[serde(alias = "van-loan")]
    Vanloan,
    Quadrature,
}

impl MethodName {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "auto" => MethodName::Auto,
            "sylvester" => MethodName::Sylvester,
            "vanloan" | "van-loan" => MethodName::Vanloan,
            "quadrature" => MethodName::Quadrature,
            other => bail!("unknown method `{other}` (auto | sylvester | vanloan | quadrature)"),
        })
    }

    pub fn choice(self) -> MethodChoice {
        match self {
            MethodName::Auto => MethodChoice::Auto,
            MethodName::Sylvester => SMethod::Sylvester.into(),
            MethodName::Vanloan => SMethod::VanLoan.into(),
            MethodName::Quadrature => SMethod::Quadrature.into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Text(String),
    Parts { min: f64, max: f64, step: f64 },
}

impl GridSpec {
    fn grid(&self) -> Result<Grid> {
        Ok(match self {
            GridSpec::Text(s) => Grid::parse(s)?,
            GridSpec::Parts { min, max, step } => Grid::new(*min, *max, *step)?,
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub x: Option<GridSpec>,
    pub y: Option<GridSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub ode: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physical {
    pub hbar_vf: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleConfig {
    pub id: u8,
    #[serde(rename = "calA")]
    pub cal_a: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub sign1: Option<String>,
    pub sign2: Option<String>,
    pub n: Option<usize>,
    pub rng_seed: Option<u64>,
    pub h1: Option<Vec<f64>>,
    pub h2: Option<Vec<f64>>,
    pub skew: Option<Vec<Vec<f64>>>,
}

/// Config file: a serialized triple (`n`, `A`, `S0`, `Pi0`) or an
/// `example` section, plus optional run sections.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    #[serde(rename = "A")]
    pub a: Option<NestedMatrix>,
    #[serde(rename = "S0")]
    pub s0: Option<NestedMatrix>,
    #[serde(rename = "Pi0")]
    pub pi0: Option<NestedMatrix>,
    pub example: Option<ExampleConfig>,
    pub seed: Option<SeedPotential>,
    #[serde(default)]
    pub grids: Grids,
    pub h: Option<Vec<[f64; 2]>>,
    pub method: Option<MethodName>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub physical: Option<Physical>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    fn inline_triple(&self) -> Option<Result<TripleDocument>> {
        if self.a.is_none() && self.s0.is_none() && self.pi0.is_none() {
            return None;
        }
        Some(match (&self.a, &self.s0, &self.pi0) {
            (Some(a), Some(s0), Some(pi0)) => Ok(TripleDocument {
                n: self.n.unwrap_or(a.len()),
                a: a.clone(),
                s0: s0.clone(),
                pi0: pi0.clone(),
            }),
            _ => Err(anyhow::anyhow!("config triple needs all of A, S0 and Pi0")),
        })
    }
}

/// Where the triple comes from, before validation.
pub enum TripleSource {
    Document(TripleDocument),
    Example(ExampleConfig),
}

fn sign(s: Option<&str>) -> Result<Sign> {
    match s.map(str::trim) {
        None | Some("+") | Some("plus") | Some("+1") | Some("1") => Ok(Sign::Plus),
        Some("-") | Some("minus") | Some("-1") => Ok(Sign::Minus),
        Some(other) => bail!("sign must be + or -, got `{other}`"),
    }
}

fn real_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number `{v}` in `{s}`")))
        .collect()
}

fn read_document(arg: &str) -> Result<TripleDocument> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading triple file {arg}"))?
    };
    serde_json::from_str(&text).context("parsing triple JSON")
}

impl TripleArgs {
    fn example_config(&self, base: Option<&ExampleConfig>) -> Result<Option<ExampleConfig>> {
        let id = match (self.example, base) {
            (Some(id), Some(b)) if b.id == id => b.clone(),
            (Some(id), _) => ExampleConfig {
                id,
                ..Default::default()
            },
            (None, Some(b)) => b.clone(),
            (None, None) => return Ok(None),
        };
        let mut e = id;
        e.cal_a = self.cal_a.or(e.cal_a);
        e.m1 = self.m1.or(e.m1);
        e.m2 = self.m2.or(e.m2);
        e.sign1 = self.sign1.clone().or(e.sign1);
        e.sign2 = self.sign2.clone().or(e.sign2);
        e.n = self.n.or(e.n);
        e.rng_seed = self.rng_seed.or(e.rng_seed);
        if let Some(h) = &self.h1 {
            e.h1 = Some(real_list(h)?);
        }
        if let Some(h) = &self.h2 {
            e.h2 = Some(real_list(h)?);
        }
        if let Some(s) = &self.skew {
            e.skew = Some(serde_json::from_str(s).context("parsing --skew as a nested real matrix")?);
        }
        Ok(Some(e))
    }

    /// Picks the triple source; command-line flags override the config file.
    pub fn source(&self, cfg: &RunConfig) -> Result<TripleSource> {
        if let Some(arg) = &self.triple {
            if self.example.is_some() {
                bail!("--triple and --example are mutually exclusive");
            }
            return Ok(TripleSource::Document(read_document(arg)?));
        }
        if let Some(e) = self.example_config(cfg.example.as_ref())? {
            if self.example.is_none() && cfg.inline_triple().is_some() {
                bail!("config has both a triple and an example section");
            }
            return Ok(TripleSource::Example(e));
        }
        match cfg.inline_triple() {
            Some(doc) => Ok(TripleSource::Document(doc?)),
            None => bail!("no triple given (use --example, --triple or --config)"),
        }
    }
}

impl ExampleConfig {
    pub fn build(&self) -> std::result::Result<ParameterTriple, BuildError> {
        let input = |r: Result<_>| r.map_err(BuildError::Input);
        match self.id {
            1 => Ok(make_example1(
                self.cal_a.unwrap_or(1.0),
                self.m1.unwrap_or(1.0),
                self.m2.unwrap_or(1.0),
                input(sign(self.sign1.as_deref()))?,
                input(sign(self.sign2.as_deref()))?,
            )?),
            2 => Ok(make_example2()),
            3 | 4 => {
                let explicit_h = self.h1.is_some() || self.h2.is_some();
                if explicit_h {
                    let (h1, h2) = match (&self.h1, &self.h2) {
                        (Some(a), Some(b)) => (a.clone(), b.clone()),
                        _ => return Err(BuildError::Input(anyhow::anyhow!("both --h1 and --h2 are required"))),
                    };
                    if self.id == 3 {
                        let n = h1.len();
                        let skew = match &self.skew {
                            Some(rows) => {
                                let nested: NestedMatrix =
                                    rows.iter().map(|r| r.iter().map(|&v| [v, 0.0]).collect()).collect();
                                from_nested(&nested)?
                            }
                            None => ComplexMatrix::zeros(n, n),
                        };
                        Ok(make_example3(&skew, &h1, &h2)?)
                    } else {
                        Ok(make_example4(&h1, &h2, None)?)
                    }
                } else {
                    let seed = self.rng_seed.ok_or_else(|| {
                        BuildError::Input(anyhow::anyhow!(
                            "randomized example {} requires --rng-seed",
                            self.id
                        ))
                    })?;
                    let n = self
                        .n
                        .ok_or_else(|| BuildError::Input(anyhow::anyhow!("example {} requires --n", self.id)))?;
                    if n == 0 {
                        return Err(BuildError::Input(anyhow::anyhow!("--n must be at least 1")));
                    }
                    let mut rng = seeded_rng(seed);
                    Ok(if self.id == 3 {
                        random_example3(&mut rng, n)?
                    } else {
                        random_example4(&mut rng, n)?
                    })
                }
            }
            other => Err(BuildError::Input(anyhow::anyhow!("unknown example {other} (1-4)"))),
        }
    }
}

/// Either unusable input (exit 2) or a triple that fails validation (exit 1).
#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("{0:#}")]
    Input(anyhow::Error),
    #[error(transparent)]
    Invalid(#[from] gbdt_core::Error),
}

impl TripleSource {
    pub fn build(&self) -> std::result::Result<ParameterTriple, BuildError> {
        match self {
            TripleSource::Example(e) => e.build(),
            TripleSource::Document(doc) => {
                let a = from_nested(&doc.a).map_err(|e| BuildError::Input(e.into()))?;
                let s0 = from_nested(&doc.s0).map_err(|e| BuildError::Input(e.into()))?;
                let pi0 = from_nested(&doc.pi0).map_err(|e| BuildError::Input(e.into()))?;
                if a.rows() != doc.n || s0.rows() != doc.n || pi0.rows() != doc.n {
                    return Err(BuildError::Input(anyhow::anyhow!(
                        "declared n = {} does not match the matrix sizes",
                        doc.n
                    )));
                }
                Ok(gbdt_core::triple::validate_triple(a, s0, pi0)?)
            }
        }
    }
}

/// Resolves `--xgrid` / `--x` against the config; `default` when neither is set.
pub fn resolve_grid(flag_grid: Option<&str>, flag_point: Option<f64>, cfg: Option<&GridSpec>, default: &str) -> Result<Grid> {
    match (flag_grid, flag_point) {
        (Some(_), Some(_)) => bail!("give either a grid or a single point, not both"),
        (Some(g), None) => Ok(Grid::parse(g)?),
        (None, Some(x)) => {
            if !x.is_finite() {
                bail!("point must be finite");
            }
            Ok(Grid::point(x))
        }
        (None, None) => match cfg {
            Some(spec) => spec.grid(),
            None => Ok(Grid::parse(default)?),
        },
    }
}

/// `e<k>` (1-based), `0`, a comma list of reals, or JSON `[[re, im], ..]`.
pub fn parse_h(spec: &str, n: usize) -> Result<Vec<Complex64>> {
    let s = spec.trim();
    let h: Vec<Complex64> = if s == "0" {
        vec![Complex64::new(0.0, 0.0); n]
    } else if let Some(k) = s.strip_prefix('e') {
        let k: usize = k.parse().with_context(|| format!("bad basis vector `{s}`"))?;
        if k == 0 || k > n {
            bail!("basis vector e{k} out of range for n = {n}");
        }
        (0..n)
            .map(|j| Complex64::new(if j + 1 == k { 1.0 } else { 0.0 }, 0.0))
            .collect()
    } else if s.starts_with('[') {
        let pairs: Vec<[f64; 2]> = serde_json::from_str(s).context("parsing h as [[re, im], ..]")?;
        pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    } else {
        real_list(s)?.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    };
    if h.len() != n {
        bail!("h has {} entries, expected {n}", h.len());
    }
    if h.iter().any(|z| !z.is_finite()) {
        bail!("h must be finite");
    }
    Ok(h)
}

pub fn h_from_config(pairs: &[[f64; 2]], n: usize) -> Result<Vec<Complex64>> {
    if pairs.len() != n {
        bail!("config h has {} entries, expected {n}", pairs.len());
    }
    Ok(pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
}
