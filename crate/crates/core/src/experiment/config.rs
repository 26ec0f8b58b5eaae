//! Flat `key = value` scenario files.
//!
//! ```text
//! # formation, two agents
//! n = 2
//! chi_lo = -1 -1
//! chi_hi = 1 1
//! y_lo = -1 -1
//! y_hi = 1 1
//! A.0 = 1 0 0 1
//! B.0 = -1 0 0 -1
//! c.0 = 0.4 0
//! A.1 = 1 0 0 1
//! B.1 = -1 0 0 -1
//! c.1 = -0.4 0
//! phi = boundary 1.5
//! online = tracking
//! L_f = 1.4142135623730951
//! L_phi = 0.4444444444444444
//! D_lambda = 2
//! rho = 0.5
//! k = 2
//! horizon = 10000
//! variant = da
//! seed = 42
//! topology = complete
//! ```
//!
//! Matrices are row-major with `d_x` (for `A.i`) or `d_y` (for `B.i`)
//! columns; the row count is inferred. `d_x` and `d_y` default to the box
//! dimensions. `phi.i` overrides `phi` for agent `i`. Optional keys:
//! `graph_seed`, `epsilon` (`auto` or a number), `inner_tol`, `inner_max_iters`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Epsilon, TopologyKind};
use crate::numerics::Matrix;
use crate::problem::{BoundaryPenaltyCost, BoxSet, LocalConstraint, LocalCost, OnlineCost, ProblemSpec};
use crate::solver::{SolverConfig, Variant};

use super::scenario::{build_formation_scenario, ScenarioConfig};

#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub spec: ProblemSpec,
    pub solver: SolverConfig,
    pub topology: TopologyKind,
    pub graph_seed: u64,
    pub epsilon: Epsilon,
}

impl ScenarioFile {
    /// The formation scenario expressed as an explicit file.
    pub fn formation(cfg: &ScenarioConfig, topology: TopologyKind) -> Result<Self> {
        Ok(Self {
            spec: build_formation_scenario(cfg)?,
            solver: SolverConfig {
                seed: cfg.seed,
                inner_tol: cfg.inner_tol,
                inner_max_iters: cfg.inner_max_iters,
                ..SolverConfig::new(cfg.variant, cfg.k, cfg.rho, cfg.horizon)
            },
            topology,
            graph_seed: cfg.graph_seed,
            epsilon: Epsilon::Auto,
        })
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", no + 1)))?;
            let key = k.trim().to_string();
            if map.insert(key.clone(), (no + 1, v.trim().to_string())).is_some() {
                return Err(Error::config(format!("line {}: duplicate key {key}", no + 1)));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(usize, String)> {
        self.take(key)
            .ok_or_else(|| Error::config(format!("missing key {key}")))
    }

    fn scalar<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key)
            .map(|(line, v)| {
                v.parse()
                    .map_err(|_| Error::config(format!("line {line}: cannot parse {key} = {v}")))
            })
            .transpose()
    }

    fn required_scalar<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.scalar(key)?
            .ok_or_else(|| Error::config(format!("missing key {key}")))
    }

    fn floats(&mut self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.required(key)?;
        parse_floats(&v).map_err(|_| Error::config(format!("line {line}: {key} must be whitespace-separated numbers")))
    }
}

fn parse_floats(v: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    v.split_whitespace().map(str::parse).collect()
}

fn parse_local_cost(line: usize, v: &str) -> Result<LocalCost> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::config(format!("line {line}: bad number {s:?} in local cost")))
    };
    match parts.as_slice() {
        ["zero"] => Ok(LocalCost::Zero),
        ["quadratic", w] => Ok(LocalCost::Quadratic { weight: num(w)? }),
        ["boundary", s] => Ok(LocalCost::BoundaryPenalty(BoundaryPenaltyCost { half_width: num(s)? })),
        _ => Err(Error::config(format!(
            "line {line}: local cost must be `zero`, `quadratic W` or `boundary S`, got {v:?}"
        ))),
    }
}

fn matrix(key: &str, data: Vec<f64>, cols: usize) -> Result<Matrix> {
    if cols == 0 || data.is_empty() || !data.len().is_multiple_of(cols) {
        return Err(Error::config(format!(
            "{key} has {} entries, not a multiple of {cols} columns",
            data.len()
        )));
    }
    Matrix::new(data.len() / cols, cols, data).map_err(|e| Error::config(format!("{key}: {e}")))
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::config(other.to_string()),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioFile> {
    let mut e = Entries::parse(text)?;
    let n: usize = e.required_scalar("n")?;
    if n == 0 {
        return Err(Error::config("n must be at least 1"));
    }
    let chi = BoxSet::new(e.floats("chi_lo")?, e.floats("chi_hi")?).map_err(cfg_err)?;
    let y_set = BoxSet::new(e.floats("y_lo")?, e.floats("y_hi")?).map_err(cfg_err)?;
    let d_x = e.scalar("d_x")?.unwrap_or(chi.dim());
    let d_y = e.scalar("d_y")?.unwrap_or(y_set.dim());
    if d_x != chi.dim() || d_y != y_set.dim() {
        return Err(Error::config("d_x / d_y disagree with the box bounds"));
    }
    let default_phi = e.take("phi").map(|(l, v)| parse_local_cost(l, &v)).transpose()?;
    let mut constraints = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let a = matrix(&format!("A.{i}"), e.floats(&format!("A.{i}"))?, d_x)?;
        let b = matrix(&format!("B.{i}"), e.floats(&format!("B.{i}"))?, d_y)?;
        let c = e.floats(&format!("c.{i}"))?;
        constraints.push(LocalConstraint::new(a, b, c).map_err(cfg_err)?);
        let p = match e.take(&format!("phi.{i}")) {
            Some((l, v)) => parse_local_cost(l, &v)?,
            None => default_phi.ok_or_else(|| Error::config(format!("no local cost for agent {i}")))?,
        };
        phi.push(p);
    }
    let online = match e.take("online") {
        None => OnlineCost::Tracking,
        Some((_, v)) if v == "tracking" => OnlineCost::Tracking,
        Some((_, v)) if v == "zero" => OnlineCost::Zero,
        Some((l, v)) => {
            return Err(Error::config(format!(
                "line {l}: online must be tracking or zero, got {v}"
            )))
        }
    };
    let spec = ProblemSpec::new(
        chi,
        y_set,
        constraints,
        phi,
        online,
        e.required_scalar("L_f")?,
        e.required_scalar("L_phi")?,
        e.required_scalar("D_lambda")?,
    )
    .map_err(cfg_err)?;

    let variant = match e.take("variant") {
        Some((l, v)) => v
            .parse()
            .map_err(|err: Error| Error::config(format!("line {l}: {err}")))?,
        None => Variant::DualAveraging,
    };
    let mut solver = SolverConfig::new(
        variant,
        e.required_scalar("k")?,
        e.required_scalar("rho")?,
        e.required_scalar("horizon")?,
    );
    solver.seed = e.scalar("seed")?.unwrap_or(0);
    if let Some(tol) = e.scalar("inner_tol")? {
        solver.inner_tol = tol;
    }
    if let Some(it) = e.scalar("inner_max_iters")? {
        solver.inner_max_iters = it;
    }
    solver.validate().map_err(cfg_err)?;

    let topology = match e.take("topology") {
        Some((l, v)) => v
            .parse()
            .map_err(|err: Error| Error::config(format!("line {l}: {err}")))?,
        None => TopologyKind::Complete,
    };
    let graph_seed = e.scalar("graph_seed")?.unwrap_or(0);
    let epsilon = match e.take("epsilon") {
        None => Epsilon::Auto,
        Some((_, v)) if v == "auto" => Epsilon::Auto,
        Some((l, v)) => Epsilon::Value(
            v.parse()
                .map_err(|_| Error::config(format!("line {l}: epsilon must be auto or a number")))?,
        ),
    };
    if let Some((key, (line, _))) = e.map.iter().next() {
        return Err(Error::config(format!("line {line}: unknown key {key}")));
    }
    Ok(ScenarioFile {
        spec,
        solver,
        topology,
        graph_seed,
        epsilon,
    })
}

pub fn read_config(path: &Path) -> Result<ScenarioFile> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn local_cost_str(p: &LocalCost) -> String {
    match p {
        LocalCost::Zero => "zero".into(),
        LocalCost::Quadratic { weight } => format!("quadratic {weight:?}"),
        LocalCost::BoundaryPenalty(b) => format!("boundary {:?}", b.half_width),
    }
}

/// Inverse of [`parse_config`]; every number round-trips exactly.
pub fn write_config(f: &ScenarioFile) -> String {
    let s = &f.spec;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("n", s.n.to_string());
    kv("d_x", s.d_x.to_string());
    kv("d_y", s.d_y.to_string());
    kv("chi_lo", join(s.chi.lo()));
    kv("chi_hi", join(s.chi.hi()));
    kv("y_lo", join(s.y_set.lo()));
    kv("y_hi", join(s.y_set.hi()));
    for (i, (con, p)) in s.constraints.iter().zip(&s.phi).enumerate() {
        kv(&format!("A.{i}"), join(con.a().as_slice()));
        kv(&format!("B.{i}"), join(con.b().as_slice()));
        kv(&format!("c.{i}"), join(con.c()));
        kv(&format!("phi.{i}"), local_cost_str(p));
    }
    kv(
        "online",
        match s.online {
            OnlineCost::Tracking => "tracking".into(),
            OnlineCost::Zero => "zero".into(),
        },
    );
    kv("L_f", format!("{:?}", s.l_f));
    kv("L_phi", format!("{:?}", s.l_phi));
    kv("D_lambda", format!("{:?}", s.d_lambda));
    let c = &f.solver;
    kv("rho", format!("{:?}", c.rho));
    kv("k", format!("{:?}", c.k));
    kv("horizon", c.horizon.to_string());
    kv("variant", c.variant.to_string());
    kv("seed", c.seed.to_string());
    kv("inner_tol", format!("{:?}", c.inner_tol));
    kv("inner_max_iters", c.inner_max_iters.to_string());
    kv("topology", f.topology.to_string());
    kv("graph_seed", f.graph_seed.to_string());
    kv(
        "epsilon",
        match f.epsilon {
            Epsilon::Auto => "auto".into(),
            Epsilon::Value(v) => format!("{v:?}"),
        },
    );
    out
}
