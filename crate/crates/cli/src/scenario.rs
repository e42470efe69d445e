//! Scenario files.
//!
//! Line-oriented `key = value` pairs; `#` starts a comment. Top-level keys
//! come first, then optional sections:
//!
//! ```text
//! name = dephasing
//! dimension = 2
//! convention = trace2          # or custom-f, with a [structure] section
//! picture = heisenberg         # or schroedinger
//! t_final = 5
//! dt = 0.01
//! stride = 10                  # output every stride * dt
//! method = formula
//! r0 = 1 0 0                   # or rho0 = re im re im ... (row-major)
//!
//! [structure]                  # custom-f only, 1-based indices
//! f = 1 2 3 0.5
//!
//! [hamiltonian]
//! bloch = 0 0 1                # or matrix = re im ... ; optional scalar = c
//!
//! [lindblad]                   # repeat for more channels
//! bloch = 0 0 1
//! gamma = constant 1           # exp g0 tau | table t v t v ...
//!
//! [series]
//! order = 20
//! nodes = 32
//!
//! [mc]
//! trajectories = 10000
//! seed = 42
//! estimator = matrix           # or bloch
//!
//! [compare]
//! methods = formula series oracle
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use bloch_core::linalg::hermitian_residual;
use bloch_core::{GammaProfile, Picture, C64};

use crate::CMatrix;

const HERMITIAN_TOL: f64 = 1e-10;

/// One validation problem; `line` is 1-based, 0 when it concerns the file
/// as a whole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "scenario: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Method {
    Formula,
    Series,
    Perturbation,
    Mc,
    Oracle,
    Compare,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Formula => "formula",
            Self::Series => "series",
            Self::Perturbation => "perturbation",
            Self::Mc => "mc",
            Self::Oracle => "oracle",
            Self::Compare => "compare",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "formula" => Self::Formula,
            "series" => Self::Series,
            "perturbation" => Self::Perturbation,
            "mc" => Self::Mc,
            "oracle" => Self::Oracle,
            "compare" => Self::Compare,
            _ => return Err(format!("unknown method `{s}`")),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Convention {
    /// Generalized Gell-Mann basis with `Tr(λ_i λ_j) = 2 δ_ij`.
    Trace2,
    /// User structure constants `(i, j, k, f_ijk)`, 1-based.
    CustomF(Vec<(usize, usize, usize, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Bloch {
        scalar: f64,
        vector: Vec<f64>,
    },
    /// Row-major entries.
    Matrix(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lindblad {
    pub operator: Operator,
    pub gamma: GammaProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    R0(Vec<f64>),
    Rho0(Vec<C64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Matrix,
    Bloch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub dimension: usize,
    pub convention: Convention,
    pub picture: Picture,
    pub t_final: f64,
    pub dt: f64,
    pub stride: usize,
    pub method: Method,
    pub initial: Initial,
    pub hamiltonian: Operator,
    pub lindblads: Vec<Lindblad>,
    /// Truncation order; series defaults to 20, perturbation to 2.
    pub order: Option<usize>,
    pub nodes: usize,
    pub trajectories: usize,
    pub seed: u64,
    /// `None` picks the matrix estimator for trace2 and the Bloch one otherwise.
    pub estimator: Option<Estimator>,
    pub compare: Vec<Method>,
}

pub const DEFAULT_SERIES_ORDER: usize = 20;
pub const DEFAULT_PERTURBATION_ORDER: usize = 2;

impl Scenario {
    pub fn bloch_dim(&self) -> usize {
        self.dimension * self.dimension - 1
    }

    pub fn output_step(&self) -> f64 {
        self.stride as f64 * self.dt
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator.unwrap_or(match self.convention {
            Convention::Trace2 => Estimator::Matrix,
            Convention::CustomF(_) => Estimator::Bloch,
        })
    }

    /// Methods run by `compare`, defaulting to every deterministic path the
    /// convention supports.
    pub fn compare_methods(&self) -> Vec<Method> {
        if !self.compare.is_empty() {
            return self.compare.clone();
        }
        match self.convention {
            Convention::Trace2 => vec![Method::Formula, Method::Series, Method::Oracle],
            Convention::CustomF(_) => vec![Method::Formula, Method::Series],
        }
    }

    /// Checks that do not depend on source lines; run again after command
    /// line overrides.
    pub fn validate(&self) -> Vec<ParseError> {
        let mut errors = Vec::new();
        let mut bad = |m: String| {
            errors.push(ParseError {
                line: 0,
                message: m,
            })
        };
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            bad(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            ));
        }
        if self.stride == 0 {
            bad("stride must be at least 1".into());
        }
        if self.dt > 0.0 && self.stride > 0 && self.t_final > 0.0 {
            let n = self.t_final / self.output_step();
            if (n.round() - n).abs() > 1e-9 * n.max(1.0) {
                bad(format!(
                    "t_final {} is not a multiple of the output step {}",
                    self.t_final,
                    self.output_step()
                ));
            }
        }
        if self.trajectories == 0 {
            bad("trajectories must be at least 1".into());
        }
        if self.nodes == 0 {
            bad("nodes must be at least 1".into());
        }
        let custom = matches!(self.convention, Convention::CustomF(_));
        let needs_matrices = |m: Method| {
            m == Method::Oracle || (m == Method::Mc && self.estimator() == Estimator::Matrix)
        };
        let mut methods = vec![self.method];
        if self.method == Method::Compare {
            methods = self.compare_methods();
            if methods.len() < 2 {
                bad("compare needs at least two methods".into());
            }
            if methods.contains(&Method::Compare) {
                bad("compare cannot include itself".into());
            }
        }
        for m in methods {
            if custom && needs_matrices(m) {
                bad(format!(
                    "method {m} needs matrices, which custom-f scenarios do not have"
                ));
            }
            if m == Method::Perturbation {
                if let Some(order) = self.order {
                    if order > 2 {
                        bad(format!("perturbation order {order} exceeds 2"));
                    }
                }
                match self.lindblads.as_slice() {
                    [l] if l.gamma.as_constant().is_none() => {
                        bad("perturbation needs a constant gamma".into())
                    }
                    [_] => {}
                    _ => bad("perturbation needs exactly one lindblad".into()),
                }
            }
        }
        if custom && self.estimator == Some(Estimator::Matrix) {
            bad("the matrix estimator needs the trace2 convention".into());
        }
        errors
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Top,
    Structure,
    Hamiltonian,
    Lindblad,
    Series,
    Mc,
    Compare,
}

impl Section {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "structure" => Self::Structure,
            "hamiltonian" => Self::Hamiltonian,
            "lindblad" => Self::Lindblad,
            "series" => Self::Series,
            "mc" => Self::Mc,
            "compare" => Self::Compare,
            _ => return None,
        })
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Self::Top => &[
                "name",
                "dimension",
                "convention",
                "picture",
                "t_final",
                "dt",
                "stride",
                "method",
                "r0",
                "rho0",
            ],
            Self::Structure => &["f"],
            Self::Hamiltonian | Self::Lindblad => &["bloch", "scalar", "matrix", "gamma"],
            Self::Series => &["order", "nodes"],
            Self::Mc => &["trajectories", "seed", "estimator"],
            Self::Compare => &["methods"],
        }
    }
}

/// Key/value pairs of one section instance with their line numbers.
#[derive(Default)]
struct Block {
    line: usize,
    values: BTreeMap<&'static str, (String, usize)>,
    repeated: Vec<(String, usize)>,
}

impl Block {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.values.remove(key)
    }
}

struct Collector {
    errors: Vec<ParseError>,
}

impl Collector {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ParseError {
            line,
            message: message.into(),
        });
    }

    fn parse<T: FromStr>(&mut self, value: &str, line: usize, key: &str) -> Option<T> {
        match value.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err(line, format!("`{key}`: cannot parse `{value}`"));
                None
            }
        }
    }

    fn numbers(&mut self, value: &str, line: usize, key: &str) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for tok in value.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    self.err(line, format!("`{key}`: `{tok}` is not a finite number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn complex(&mut self, value: &str, line: usize, key: &str, n: usize) -> Option<Vec<C64>> {
        let xs = self.numbers(value, line, key)?;
        if xs.len() != 2 * n * n {
            self.err(
                line,
                format!(
                    "`{key}` needs {} numbers ({n}x{n} complex entries as re im pairs), found {}",
                    2 * n * n,
                    xs.len()
                ),
            );
            return None;
        }
        Some(xs.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
    }

    fn gamma(&mut self, value: &str, line: usize) -> Option<GammaProfile> {
        let toks: Vec<&str> = value.split_whitespace().collect();
        let mut nums = |toks: &[&str]| self.numbers(&toks.join(" "), line, "gamma");
        let profile = match toks.first().copied() {
            Some("constant") => match nums(&toks[1..])?.as_slice() {
                [g] => GammaProfile::Constant(*g),
                _ => return self.fail(line, "`gamma = constant` takes one value"),
            },
            Some("exp") => match nums(&toks[1..])?.as_slice() {
                [g, tau] => GammaProfile::ExponentialDecay {
                    gamma0: *g,
                    tau: *tau,
                },
                _ => return self.fail(line, "`gamma = exp` takes gamma0 and tau"),
            },
            Some("table") => {
                let xs = nums(&toks[1..])?;
                if xs.is_empty() || xs.len() % 2 != 0 {
                    return self.fail(line, "`gamma = table` takes time/value pairs");
                }
                GammaProfile::Tabulated {
                    times: xs.iter().step_by(2).copied().collect(),
                    values: xs.iter().skip(1).step_by(2).copied().collect(),
                }
            }
            Some(_) if toks.len() == 1 => {
                GammaProfile::Constant(self.parse(toks[0], line, "gamma")?)
            }
            _ => return self.fail(line, format!("cannot parse gamma `{value}`")),
        };
        if let Err(e) = profile.validate() {
            return self.fail(line, e.to_string());
        }
        Some(profile)
    }

    fn fail<T>(&mut self, line: usize, message: impl Into<String>) -> Option<T> {
        self.err(line, message);
        None
    }
}

/// Parses and validates a scenario, reporting every problem found.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ParseError>> {
    let mut c = Collector { errors: Vec::new() };
    let mut top = Block::default();
    let mut structure: Option<Block> = None;
    let mut hamiltonian: Option<Block> = None;
    let mut lindblads: Vec<Block> = Vec::new();
    let mut series: Option<Block> = None;
    let mut mc: Option<Block> = None;
    let mut compare: Option<Block> = None;
    let mut section = Section::Top;
    let last_line = text.lines().count();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                c.err(line, format!("malformed section header `{content}`"));
                continue;
            };
            let Some(s) = Section::parse(name.trim()) else {
                c.err(line, format!("unknown section `[{}]`", name.trim()));
                section = Section::Top;
                continue;
            };
            section = s;
            let fresh = Block {
                line,
                ..Block::default()
            };
            let slot = match s {
                Section::Lindblad => {
                    lindblads.push(fresh);
                    continue;
                }
                Section::Structure => &mut structure,
                Section::Hamiltonian => &mut hamiltonian,
                Section::Series => &mut series,
                Section::Mc => &mut mc,
                Section::Compare => &mut compare,
                Section::Top => unreachable!(),
            };
            if slot.is_some() {
                c.err(
                    line,
                    format!("section `[{}]` appears more than once", name.trim()),
                );
            }
            *slot = Some(fresh);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            c.err(line, format!("expected `key = value`, found `{content}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim().to_string());
        let Some(&known) = section.keys().iter().find(|k| **k == key) else {
            c.err(line, format!("unknown key `{key}`"));
            continue;
        };
        let block = match section {
            Section::Top => &mut top,
            Section::Structure => structure.as_mut().expect("section opened"),
            Section::Hamiltonian => hamiltonian.as_mut().expect("section opened"),
            Section::Lindblad => lindblads.last_mut().expect("section opened"),
            Section::Series => series.as_mut().expect("section opened"),
            Section::Mc => mc.as_mut().expect("section opened"),
            Section::Compare => compare.as_mut().expect("section opened"),
        };
        if section == Section::Structure {
            block.repeated.push((value, line));
        } else if block.values.insert(known, (value, line)).is_some() {
            c.err(line, format!("duplicate key `{key}`"));
        }
    }

    let eof = last_line.max(1);
    let required = |c: &mut Collector, b: &mut Block, key: &str| -> Option<(String, usize)> {
        let v = b.take(key);
        if v.is_none() {
            c.err(eof, format!("missing required key `{key}`"));
        }
        v
    };

    let name = required(&mut c, &mut top, "name").map(|(v, l)| {
        if v.is_empty()
            || !v
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || "_-.".contains(ch))
        {
            c.err(
                l,
                format!("name `{v}` must be non-empty and use only letters, digits, `_`, `-`, `.`"),
            );
        }
        v
    });
    let dimension = required(&mut c, &mut top, "dimension")
        .and_then(|(v, l)| c.parse::<usize>(&v, l, "dimension").map(|n| (n, l)))
        .and_then(|(n, l)| {
            if n < 2 {
                c.fail(l, format!("dimension must be at least 2, got {n}"))
            } else {
                Some(n)
            }
        });
    let t_final =
        required(&mut c, &mut top, "t_final").and_then(|(v, l)| c.parse::<f64>(&v, l, "t_final"));
    let dt = required(&mut c, &mut top, "dt").and_then(|(v, l)| c.parse::<f64>(&v, l, "dt"));
    let stride = match top.take("stride") {
        Some((v, l)) => c.parse::<usize>(&v, l, "stride"),
        None => Some(1),
    };
    let method = match top.take("method") {
        Some((v, l)) => v.parse::<Method>().map_err(|e| c.err(l, e)).ok(),
        None => Some(Method::Formula),
    };
    let picture = match top.take("picture") {
        Some((v, l)) => match v.as_str() {
            "heisenberg" => Some(Picture::Heisenberg),
            "schroedinger" | "schrodinger" => Some(Picture::Schroedinger),
            _ => c.fail(l, format!("unknown picture `{v}`")),
        },
        None => Some(Picture::Heisenberg),
    };
    let convention_raw = top.take("convention");
    let custom = matches!(&convention_raw, Some((v, _)) if v == "custom-f");
    if let Some((v, l)) = &convention_raw {
        if v != "trace2" && v != "custom-f" {
            c.err(*l, format!("unknown convention `{v}` (trace2 or custom-f)"));
        }
    }
    let d = dimension.map(|n| n * n - 1);

    let convention = if custom {
        match structure.take() {
            None => {
                let l = convention_raw.as_ref().map_or(eof, |(_, l)| *l);
                c.fail(l, "custom-f convention needs a [structure] section")
            }
            Some(block) => {
                let mut entries = Vec::new();
                for (v, l) in &block.repeated {
                    let Some(xs) = c.numbers(v, *l, "f") else {
                        continue;
                    };
                    let [i, j, k, f] = xs.as_slice() else {
                        c.err(*l, "`f` takes three indices and a value");
                        continue;
                    };
                    let idx = [*i, *j, *k];
                    if idx.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
                        c.err(*l, "structure indices must be positive integers");
                        continue;
                    }
                    let idx = idx.map(|x| x as usize);
                    if let Some(d) = d {
                        if idx.iter().any(|&x| x > d) {
                            c.err(*l, format!("structure index out of range 1..={d}"));
                            continue;
                        }
                    }
                    entries.push((idx[0], idx[1], idx[2], *f));
                }
                if let Some(d) = d {
                    let zero_based = entries
                        .iter()
                        .map(|&(i, j, k, f)| ((i - 1, j - 1, k - 1), f));
                    if let Err(e) = bloch_core::StructureTensor::from_entries(d, zero_based) {
                        c.err(block.line, format!("structure constants: {e}"));
                    }
                }
                Some(Convention::CustomF(entries))
            }
        }
    } else {
        if let Some(block) = structure.take() {
            c.err(
                block.line,
                "[structure] is only allowed with convention = custom-f",
            );
        }
        Some(Convention::Trace2)
    };

    let operator =
        |c: &mut Collector, block: &mut Block, what: &str, hermitian: bool| -> Option<Operator> {
            let bloch = block.take("bloch");
            let matrix = block.take("matrix");
            let scalar = block.take("scalar");
            match (bloch, matrix) {
                (Some(_), Some((_, l))) => c.fail(
                    l,
                    format!("{what}: give either `bloch` or `matrix`, not both"),
                ),
                (None, None) => c.fail(block.line, format!("{what}: needs `bloch` or `matrix`")),
                (Some((v, l)), None) => {
                    let vector = c.numbers(&v, l, "bloch")?;
                    if let Some(d) = d {
                        if vector.len() != d {
                            return c.fail(
                                l,
                                format!(
                                    "{what}: `bloch` needs {d} components, found {}",
                                    vector.len()
                                ),
                            );
                        }
                    }
                    let scalar = match scalar {
                        Some((v, l)) => c.parse::<f64>(&v, l, "scalar")?,
                        None => 0.0,
                    };
                    Some(Operator::Bloch { scalar, vector })
                }
                (None, Some((v, l))) => {
                    if let Some((_, sl)) = scalar {
                        c.err(sl, format!("{what}: `scalar` only applies to `bloch`"));
                    }
                    if custom {
                        return c.fail(l, format!("{what}: matrices need the trace2 convention"));
                    }
                    let n = dimension?;
                    let entries = c.complex(&v, l, "matrix", n)?;
                    if hermitian {
                        let m = CMatrix::from_row_slice(n, n, &entries);
                        let residual = hermitian_residual(&m);
                        if residual > HERMITIAN_TOL {
                            return c.fail(
                                l,
                                format!(
                                    "{what}: matrix is not Hermitian (residual {residual:.1e})"
                                ),
                            );
                        }
                    }
                    Some(Operator::Matrix(entries))
                }
            }
        };

    let hamiltonian = match hamiltonian.as_mut() {
        Some(block) => {
            if let Some((_, l)) = block.take("gamma") {
                c.err(l, "`gamma` belongs in a [lindblad] section");
            }
            operator(&mut c, block, "hamiltonian", true)
        }
        None => d.map(|d| Operator::Bloch {
            scalar: 0.0,
            vector: vec![0.0; d],
        }),
    };

    let mut channels = Vec::new();
    let mut channels_ok = true;
    for block in &mut lindblads {
        let op = operator(&mut c, block, "lindblad", true);
        let gamma = match block.take("gamma") {
            Some((v, l)) => c.gamma(&v, l),
            None => Some(GammaProfile::Constant(1.0)),
        };
        match (op, gamma) {
            (Some(operator), Some(gamma)) => channels.push(Lindblad { operator, gamma }),
            _ => channels_ok = false,
        }
    }

    let r0 = top.take("r0");
    let rho0 = top.take("rho0");
    let initial = match (r0, rho0) {
        (Some((_, l1)), Some((_, l2))) => {
            c.err(
                l2.max(l1),
                format!("give exactly one of `r0` (line {l1}) and `rho0` (line {l2})"),
            );
            None
        }
        (None, None) => c.fail(eof, "missing initial state: give `r0` or `rho0`"),
        (Some((v, l)), None) => {
            let r = c.numbers(&v, l, "r0");
            match (r, d) {
                (Some(r), Some(d)) if r.len() != d => {
                    c.fail(l, format!("`r0` needs {d} components, found {}", r.len()))
                }
                (r, _) => r.map(Initial::R0),
            }
        }
        (None, Some((v, l))) => {
            if custom {
                c.fail(l, "`rho0` needs the trace2 convention")
            } else {
                dimension
                    .and_then(|n| c.complex(&v, l, "rho0", n))
                    .map(Initial::Rho0)
            }
        }
    };

    let (mut order, mut nodes) = (None, Some(bloch_core::propagator::DEFAULT_QUADRATURE_NODES));
    if let Some(b) = series.as_mut() {
        if let Some((v, l)) = b.take("order") {
            order = c.parse::<usize>(&v, l, "order").map(Some).unwrap_or(None);
        }
        if let Some((v, l)) = b.take("nodes") {
            nodes = c.parse::<usize>(&v, l, "nodes");
        }
    }
    let (mut trajectories, mut seed, mut estimator) = (Some(1000usize), Some(0u64), Some(None));
    if let Some(b) = mc.as_mut() {
        if let Some((v, l)) = b.take("trajectories") {
            trajectories = c.parse::<usize>(&v, l, "trajectories");
        }
        if let Some((v, l)) = b.take("seed") {
            seed = c.parse::<u64>(&v, l, "seed");
        }
        if let Some((v, l)) = b.take("estimator") {
            estimator = match v.as_str() {
                "matrix" => Some(Some(Estimator::Matrix)),
                "bloch" => Some(Some(Estimator::Bloch)),
                _ => c.fail(l, format!("unknown estimator `{v}` (matrix or bloch)")),
            };
        }
    }
    let mut compare_methods = Some(Vec::new());
    if let Some(b) = compare.as_mut() {
        if let Some((v, l)) = b.take("methods") {
            let parsed: Result<Vec<Method>, String> =
                v.split_whitespace().map(str::parse).collect();
            compare_methods = parsed.map_err(|e| c.err(l, e)).ok();
        }
    }

    let scenario = (|| {
        Some(Scenario {
            name: name?,
            dimension: dimension?,
            convention: convention?,
            picture: picture?,
            t_final: t_final?,
            dt: dt?,
            stride: stride?,
            method: method?,
            initial: initial?,
            hamiltonian: hamiltonian?,
            lindblads: channels_ok.then_some(channels)?,
            order,
            nodes: nodes?,
            trajectories: trajectories?,
            seed: seed?,
            estimator: estimator?,
            compare: compare_methods?,
        })
    })();

    if let Some(s) = &scenario {
        c.errors.extend(s.validate());
    }
    match scenario {
        Some(s) if c.errors.is_empty() => Ok(s),
        _ => {
            c.errors.sort_by_key(|e| e.line);
            Err(c.errors)
        }
    }
}

fn join<T: fmt::Display>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_complex(xs: &[C64]) -> String {
    join(xs.iter().flat_map(|z| [z.re, z.im]))
}

fn write_operator(out: &mut String, op: &Operator) {
    match op {
        Operator::Bloch { scalar, vector } => {
            writeln!(out, "bloch = {}", join(vector)).unwrap();
            if *scalar != 0.0 {
                writeln!(out, "scalar = {scalar}").unwrap();
            }
        }
        Operator::Matrix(m) => writeln!(out, "matrix = {}", join_complex(m)).unwrap(),
    }
}

fn gamma_text(g: &GammaProfile) -> String {
    match g {
        GammaProfile::Constant(x) => format!("constant {x}"),
        GammaProfile::ExponentialDecay { gamma0, tau } => format!("exp {gamma0} {tau}"),
        GammaProfile::Tabulated { times, values } => format!(
            "table {}",
            join(times.iter().zip(values).flat_map(|(t, v)| [*t, *v]))
        ),
    }
}

/// Renders a scenario that [`parse_scenario`] reads back unchanged. Floats
/// use the shortest representation that round-trips.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "name = {}", s.name).unwrap();
    writeln!(w, "dimension = {}", s.dimension).unwrap();
    let convention = match s.convention {
        Convention::Trace2 => "trace2",
        Convention::CustomF(_) => "custom-f",
    };
    writeln!(w, "convention = {convention}").unwrap();
    let picture = match s.picture {
        Picture::Heisenberg => "heisenberg",
        Picture::Schroedinger => "schroedinger",
    };
    writeln!(w, "picture = {picture}").unwrap();
    writeln!(w, "t_final = {}", s.t_final).unwrap();
    writeln!(w, "dt = {}", s.dt).unwrap();
    writeln!(w, "stride = {}", s.stride).unwrap();
    writeln!(w, "method = {}", s.method).unwrap();
    match &s.initial {
        Initial::R0(r) => writeln!(w, "r0 = {}", join(r)).unwrap(),
        Initial::Rho0(m) => writeln!(w, "rho0 = {}", join_complex(m)).unwrap(),
    }
    if let Convention::CustomF(entries) = &s.convention {
        writeln!(w, "\n[structure]").unwrap();
        for (i, j, k, f) in entries {
            writeln!(w, "f = {i} {j} {k} {f}").unwrap();
        }
    }
    writeln!(w, "\n[hamiltonian]").unwrap();
    write_operator(w, &s.hamiltonian);
    for l in &s.lindblads {
        writeln!(w, "\n[lindblad]").unwrap();
        write_operator(w, &l.operator);
        writeln!(w, "gamma = {}", gamma_text(&l.gamma)).unwrap();
    }
    writeln!(w, "\n[series]").unwrap();
    if let Some(order) = s.order {
        writeln!(w, "order = {order}").unwrap();
    }
    writeln!(w, "nodes = {}", s.nodes).unwrap();
    writeln!(w, "\n[mc]").unwrap();
    writeln!(w, "trajectories = {}", s.trajectories).unwrap();
    writeln!(w, "seed = {}", s.seed).unwrap();
    if let Some(e) = s.estimator {
        let e = match e {
            Estimator::Matrix => "matrix",
            Estimator::Bloch => "bloch",
        };
        writeln!(w, "estimator = {e}").unwrap();
    }
    if !s.compare.is_empty() {
        writeln!(w, "\n[compare]").unwrap();
        writeln!(w, "methods = {}", join(&s.compare)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEPHASING: &str = "\
name = dephasing
dimension = 2
t_final = 1
dt = 0.01
stride = 10
r0 = 1 0 0

[hamiltonian]
bloch = 0 0 1

[lindblad]
bloch = 0 0 0.5
";

    #[test]
    fn minimal_scenario() {
        let s = parse_scenario(DEPHASING).unwrap();
        assert_eq!(s.dimension, 2);
        assert_eq!(s.method, Method::Formula);
        assert_eq!(s.convention, Convention::Trace2);
        assert_eq!(s.lindblads.len(), 1);
        assert_eq!(s.lindblads[0].gamma, GammaProfile::Constant(1.0));
        assert!((s.output_step() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn both_initial_states_is_an_error() {
        let text =
            format!("{DEPHASING}").replace("r0 = 1 0 0", "r0 = 1 0 0\nrho0 = 1 0 0 0 0 0 0 0");
        let errs = parse_scenario(&text).unwrap_err();
        assert!(
            errs.iter()
                .any(|e| e.message.contains("r0") && e.message.contains("rho0")),
            "{errs:?}"
        );
    }

    #[test]
    fn custom_structure() {
        let text = "\
name = half-qubit
dimension = 2
convention = custom-f
t_final = 1
dt = 0.1
r0 = 1 1 1

[structure]
f = 1 2 3 0.5

[hamiltonian]
bloch = 0 0 1

[lindblad]
bloch = 0 0 1
gamma = exp 1 2
";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.convention, Convention::CustomF(vec![(1, 2, 3, 0.5)]));
        assert_eq!(s.estimator(), Estimator::Bloch);
        assert_eq!(
            s.lindblads[0].gamma,
            GammaProfile::ExponentialDecay {
                gamma0: 1.0,
                tau: 2.0
            }
        );
    }

    #[test]
    fn collects_every_error_with_lines() {
        let text = "\
name = x
dimension = 2
t_final = 1
colour = red
r0 = 1 0

[hamiltonian]
bloch = 0 0 1 4

[lindblad]
bloch = 0 0 1
gamma = table 0 1 0 2

[bogus]
";
        let errs = parse_scenario(text).unwrap_err();
        let lines: Vec<usize> = errs.iter().map(|e| e.line).collect();
        assert!(lines.contains(&4), "unknown key: {errs:?}");
        assert!(lines.contains(&5), "r0 length: {errs:?}");
        assert!(lines.contains(&8), "bloch length: {errs:?}");
        assert!(lines.contains(&12), "gamma table: {errs:?}");
        assert!(lines.contains(&14), "unknown section: {errs:?}");
        assert!(
            errs.iter().any(|e| e.message.contains("`dt`")),
            "missing dt: {errs:?}"
        );
    }

    #[test]
    fn non_hermitian_matrix_rejected() {
        let text = DEPHASING.replace("bloch = 0 0 1\n", "matrix = 0 0 1 0 0 0 0 0\n");
        let errs = parse_scenario(&text).unwrap_err();
        assert!(
            errs.iter()
                .any(|e| e.line == 9 && e.message.contains("Hermitian")),
            "{errs:?}"
        );
    }

    #[test]
    fn custom_f_rejects_matrix_methods() {
        let text = "\
name = q
dimension = 2
convention = custom-f
method = oracle
t_final = 1
dt = 0.1
r0 = 0 0 1

[structure]
f = 1 2 3 1
";
        let errs = parse_scenario(text).unwrap_err();
        assert!(
            errs.iter().any(|e| e.message.contains("needs matrices")),
            "{errs:?}"
        );
    }

    #[test]
    fn inconsistent_structure_reported() {
        let text = "\
name = q
dimension = 2
convention = custom-f
t_final = 1
dt = 0.1
r0 = 0 0 1

[structure]
f = 1 2 3 1
f = 2 1 3 1
";
        let errs = parse_scenario(text).unwrap_err();
        assert!(
            errs.iter()
                .any(|e| e.line == 8 && e.message.contains("structure")),
            "{errs:?}"
        );
    }

    #[test]
    fn grid_must_divide() {
        let text = DEPHASING.replace("t_final = 1", "t_final = 1.05");
        let errs = parse_scenario(&text).unwrap_err();
        assert!(
            errs.iter().any(|e| e.message.contains("multiple")),
            "{errs:?}"
        );
    }

    #[test]
    fn round_trip_examples() {
        let s = parse_scenario(DEPHASING).unwrap();
        assert_eq!(parse_scenario(&serialize_scenario(&s)).unwrap(), s);
    }
}
