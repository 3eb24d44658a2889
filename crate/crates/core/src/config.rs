//! Run configuration in TOML.
//!
//! ```toml
//! [params]
//! lambda = 1
//! q = 4
//!
//! [grid]
//! dim = 1
//! extent = 1
//! nodes = 63
//!
//! [scheme]
//! kind = "imex"
//! dt = 1e-3
//! t_end = 1
//!
//! [initial]
//! kind = "bump"
//! width = 0.2
//! ```
//!
//! Every key is optional; integers are accepted where numbers are expected.
//! Errors carry the line number of the offending key. The [`fmt::Display`]
//! output lists every key with lossless floats and parses back to an equal
//! [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::error::{PcglError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::integrator::{Forcing, Scheme, SchemeConfig};
use crate::io::{read_field_csv, read_snapshot};
use crate::region::ParamSet;

/// A field on the configured grid, used for initial data and for a
/// time-independent force.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Zero,
    /// `amplitude · e · exp(−1/(1 − s²))` in the first component for
    /// `s = |x − center| / width < 1`, zero elsewhere.
    Bump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// Uniform noise in `[−amplitude, amplitude]²`. With `cells = 0` every node
    /// is independent, otherwise the noise is constant on a `cells^N` lattice.
    Noise {
        seed: u64,
        amplitude: f64,
        cells: usize,
    },
    /// `amplitude · Π sin(k π x / L)` in the first component.
    Mode {
        modes: Vec<usize>,
        amplitude: f64,
    },
    /// A field CSV (`.csv`) or binary snapshot (any other extension).
    File(PathBuf),
}

impl FieldSpec {
    pub fn build(&self, grid: &Grid<f64>) -> Result<Field<f64>> {
        match self {
            FieldSpec::Zero => Ok(Field::zeros(grid)),
            FieldSpec::Bump { center, width, amplitude } => Ok(Field::from_fn(grid, |x| {
                let r2: f64 = (0..grid.dim()).map(|a| (x[a] - center[a]).powi(2)).sum();
                let s2 = r2 / (width * width);
                let v = if s2 < 1.0 { amplitude * (1.0 - 1.0 / (1.0 - s2)).exp() } else { 0.0 };
                [v, 0.0]
            })),
            FieldSpec::Noise { seed, amplitude, cells } => Ok(if *cells == 0 {
                Field::noise(grid, *seed, *amplitude)
            } else {
                Field::step_noise(grid, *seed, *amplitude, *cells)
            }),
            FieldSpec::Mode { modes, amplitude } => Ok(Field::from_fn(grid, |x| {
                let v = (0..grid.dim())
                    .map(|a| {
                        let rel = (x[a] - grid.origin(a)) / grid.extent(a);
                        (modes[a] as f64 * std::f64::consts::PI * rel).sin()
                    })
                    .product::<f64>();
                [amplitude * v, 0.0]
            })),
            FieldSpec::File(path) => {
                let f = File::open(path)?;
                let field = if path.extension().is_some_and(|e| e == "csv") {
                    read_field_csv(BufReader::new(f), grid)?
                } else {
                    let raw: Field<f64> = read_snapshot(BufReader::new(f))?;
                    if raw.grid().node_counts() != grid.node_counts() {
                        return Err(PcglError::ShapeMismatch(format!(
                            "snapshot {} has nodes {:?}, the grid has {:?}",
                            path.display(),
                            raw.grid().node_counts(),
                            grid.node_counts()
                        )));
                    }
                    Field::from_values(grid, raw.into_values())?
                };
                Ok(field)
            }
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Zero => writeln!(f, "kind = \"zero\""),
            FieldSpec::Bump { center, width, amplitude } => {
                writeln!(f, "kind = \"bump\"")?;
                writeln!(f, "center = {}", join_f64(center))?;
                writeln!(f, "width = {width:.16e}")?;
                writeln!(f, "amplitude = {amplitude:.16e}")
            }
            FieldSpec::Noise { seed, amplitude, cells } => {
                writeln!(f, "kind = \"noise\"")?;
                writeln!(f, "seed = {seed}")?;
                writeln!(f, "amplitude = {amplitude:.16e}")?;
                writeln!(f, "cells = {cells}")
            }
            FieldSpec::Mode { modes, amplitude } => {
                writeln!(f, "kind = \"mode\"")?;
                writeln!(f, "modes = {}", join_usize(modes))?;
                writeln!(f, "amplitude = {amplitude:.16e}")
            }
            FieldSpec::File(p) => {
                writeln!(f, "kind = \"file\"")?;
                writeln!(f, "path = {}", quoted(&p.to_string_lossy()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub extent: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl GridSpec {
    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn build(&self) -> Result<Grid<f64>> {
        Grid::new(&self.extent, &self.nodes)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifySpec {
    pub seed: u64,
    /// Random fields per identity check.
    pub samples: usize,
    pub mu: f64,
    pub nu: f64,
    /// Random samples per auxiliary inequality.
    pub sweep_samples: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { seed: 42, samples: 100, mu: 1.0, nu: 1.0, sweep_samples: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ParamSet<f64>,
    pub grid: GridSpec,
    pub scheme: SchemeConfig<f64>,
    pub forcing: FieldSpec,
    pub initial: FieldSpec,
    pub output: PathBuf,
    pub verify: VerifySpec,
    /// Box widths of the nested-domain plan, smallest first.
    pub exhaustion_widths: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses `text`; relative file paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut doc = Document::parse(text)?;

        let mut g = doc.take_section("grid");
        let dim_line = g.line_of("dim");
        let dim = g.usize("dim")?.unwrap_or(1);
        if !(dim == 1 || dim == 2) {
            return Err(config_err(dim_line, format!("dim must be 1 or 2, got {dim}")));
        }
        let extent = g.f64_list("extent", dim)?.unwrap_or_else(|| vec![1.0; dim]);
        let nodes = g.usize_list("nodes", dim)?.unwrap_or_else(|| vec![63; dim]);
        let grid = GridSpec { extent, nodes };
        grid.build().map_err(|e| g.err_at_header(e.to_string()))?;
        g.finish()?;

        let mut s = doc.take_section("params");
        let mut params = ParamSet::new(dim);
        for (key, slot) in [
            ("lambda", &mut params.lambda),
            ("kappa", &mut params.kappa),
            ("alpha", &mut params.alpha),
            ("beta", &mut params.beta),
            ("gamma", &mut params.gamma),
            ("p", &mut params.p),
            ("q", &mut params.q),
        ] {
            if let Some(v) = s.f64(key)? {
                *slot = v;
            }
        }
        params.validate().map_err(|e| s.err_at_header(e.to_string()))?;
        s.finish()?;

        let mut s = doc.take_section("scheme");
        let kind = match s.string("kind")? {
            None => Scheme::ImexSplit,
            Some((line, v)) => match v.as_str() {
                "imex" => Scheme::ImexSplit,
                "implicit" => Scheme::FullyImplicit,
                _ => return Err(config_err(line, format!("key 'kind': expected 'imex' or 'implicit', got '{v}'"))),
            },
        };
        let mut scheme = SchemeConfig::new(kind, 1e-3, 1.0);
        for (key, slot) in [
            ("dt", &mut scheme.dt),
            ("t_end", &mut scheme.t_end),
            ("mu", &mut scheme.mu),
            ("nu", &mut scheme.nu),
            ("damping", &mut scheme.damping),
            ("prox_tol", &mut scheme.prox.tol),
            ("sigma_reg", &mut scheme.prox.sigma_reg),
        ] {
            if let Some(v) = s.f64(key)? {
                *slot = v;
            }
        }
        if let Some(v) = s.usize("prox_max_iter")? {
            scheme.prox.max_iter = v;
        }
        if let Some(v) = s.usize("max_fixed_point")? {
            scheme.max_fixed_point = v;
        }
        scheme.validate().map_err(|e| s.err_at_header(e.to_string()))?;
        s.finish()?;

        let mut s = doc.take_section("initial");
        let initial = field_spec(&mut s, &grid, base)?;
        s.finish()?;
        let mut s = doc.take_section("forcing");
        let forcing = field_spec(&mut s, &grid, base)?;
        s.finish()?;

        let mut s = doc.take_section("output");
        let output = s.string("dir")?.map_or_else(|| PathBuf::from("out"), |(_, v)| PathBuf::from(v));
        if let Some(v) = s.usize("snapshot_stride")? {
            scheme.snapshot_stride = v;
        }
        s.finish()?;

        let mut s = doc.take_section("verify");
        let mut verify = VerifySpec::default();
        if let Some(v) = s.u64("seed")? {
            verify.seed = v;
        }
        if let Some(v) = s.usize("samples")? {
            verify.samples = v;
        }
        if let Some(v) = s.f64("mu")? {
            verify.mu = v;
        }
        if let Some(v) = s.f64("nu")? {
            verify.nu = v;
        }
        if let Some(v) = s.usize("sweep_samples")? {
            verify.sweep_samples = v;
        }
        s.finish()?;

        let mut s = doc.take_section("exhaustion");
        let wline = s.line_of("widths");
        let exhaustion_widths = s.f64_list_any("widths")?.unwrap_or_default();
        if exhaustion_widths.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err(wline, "key 'widths': box widths must increase strictly".into()));
        }
        s.finish()?;

        doc.finish()?;
        Ok(Self { params, grid, scheme, forcing, initial, output, verify, exhaustion_widths })
    }

    pub fn forcing_field(&self, grid: &Grid<f64>) -> Result<Forcing<f64>> {
        Ok(match self.forcing {
            FieldSpec::Zero => Forcing::Zero,
            ref spec => Forcing::Constant(spec.build(grid)?),
        })
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(f, "[params]")?;
        for (k, v) in [
            ("lambda", p.lambda),
            ("kappa", p.kappa),
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("gamma", p.gamma),
            ("p", p.p),
            ("q", p.q),
        ] {
            writeln!(f, "{k} = {v:.16e}")?;
        }
        writeln!(f, "\n[grid]")?;
        writeln!(f, "dim = {}", self.grid.dim())?;
        writeln!(f, "extent = {}", join_f64(&self.grid.extent))?;
        writeln!(f, "nodes = {}", join_usize(&self.grid.nodes))?;

        let s = &self.scheme;
        writeln!(f, "\n[scheme]")?;
        let kind = match s.scheme {
            Scheme::ImexSplit => "imex",
            Scheme::FullyImplicit => "implicit",
        };
        writeln!(f, "kind = {}", quoted(kind))?;
        for (k, v) in [
            ("dt", s.dt),
            ("t_end", s.t_end),
            ("mu", s.mu),
            ("nu", s.nu),
            ("damping", s.damping),
            ("prox_tol", s.prox.tol),
            ("sigma_reg", s.prox.sigma_reg),
        ] {
            writeln!(f, "{k} = {v:.16e}")?;
        }
        writeln!(f, "prox_max_iter = {}", s.prox.max_iter)?;
        writeln!(f, "max_fixed_point = {}", s.max_fixed_point)?;

        writeln!(f, "\n[initial]")?;
        self.initial.write(f)?;
        writeln!(f, "\n[forcing]")?;
        self.forcing.write(f)?;

        writeln!(f, "\n[output]")?;
        writeln!(f, "dir = {}", quoted(&self.output.to_string_lossy()))?;
        writeln!(f, "snapshot_stride = {}", s.snapshot_stride)?;

        let v = &self.verify;
        writeln!(f, "\n[verify]")?;
        writeln!(f, "seed = {}", v.seed)?;
        writeln!(f, "samples = {}", v.samples)?;
        writeln!(f, "mu = {:.16e}", v.mu)?;
        writeln!(f, "nu = {:.16e}", v.nu)?;
        writeln!(f, "sweep_samples = {}", v.sweep_samples)?;

        if !self.exhaustion_widths.is_empty() {
            writeln!(f, "\n[exhaustion]")?;
            writeln!(f, "widths = {}", join_f64(&self.exhaustion_widths))?;
        }
        Ok(())
    }
}

fn join_f64(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(", "))
}

fn join_usize(xs: &[usize]) -> String {
    format!("[{}]", xs.iter().map(usize::to_string).collect::<Vec<_>>().join(", "))
}

/// TOML basic string.
fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if c.is_control() => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn config_err(line: usize, message: String) -> PcglError {
    PcglError::Config { line, message }
}

fn field_spec(s: &mut Section, grid: &GridSpec, base: &Path) -> Result<FieldSpec> {
    let dim = grid.dim();
    let Some((line, kind)) = s.string("kind")? else {
        return Ok(FieldSpec::Zero);
    };
    let spec = match kind.as_str() {
        "zero" => FieldSpec::Zero,
        "bump" => {
            let center = s.f64_list("center", dim)?.unwrap_or_else(|| grid.extent.iter().map(|e| e / 2.0).collect());
            let wline = s.line_of("width");
            let width = s.f64("width")?.unwrap_or(0.25);
            if !(width > 0.0) {
                return Err(config_err(wline, format!("key 'width': must be positive, got {width}")));
            }
            FieldSpec::Bump { center, width, amplitude: s.f64("amplitude")?.unwrap_or(1.0) }
        }
        "noise" => FieldSpec::Noise {
            seed: s.u64("seed")?.unwrap_or(42),
            amplitude: s.f64("amplitude")?.unwrap_or(1.0),
            cells: s.usize("cells")?.unwrap_or(0),
        },
        "mode" => FieldSpec::Mode {
            modes: s.usize_list("modes", dim)?.unwrap_or_else(|| vec![1; dim]),
            amplitude: s.f64("amplitude")?.unwrap_or(1.0),
        },
        "file" => {
            let Some((pline, raw)) = s.string("path")? else {
                return Err(config_err(line, "key 'path' is required when kind = file".into()));
            };
            let joined = base.join(&raw);
            let path = joined
                .canonicalize()
                .map_err(|e| config_err(pline, format!("key 'path': cannot open '{}': {e}", joined.display())))?;
            FieldSpec::File(path)
        }
        _ => {
            return Err(config_err(line, format!("key 'kind': expected zero, bump, noise, mode or file, got '{kind}'")))
        }
    };
    Ok(spec)
}

/// Top-level tables of a parsed document, with line numbers.
struct Document {
    sections: BTreeMap<String, Section>,
}

struct Section {
    name: String,
    header_line: usize,
    entries: BTreeMap<String, (usize, toml_edit::Value)>,
}

fn line_at(text: &str, span: Option<std::ops::Range<usize>>) -> usize {
    span.map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let doc = toml_edit::Document::parse(text)
            .map_err(|e| config_err(line_at(text, e.span()), e.message().trim().to_string()))?;
        let root = doc.as_table();
        let mut sections = BTreeMap::new();
        for (name, item) in root.iter() {
            let line = line_at(text, root.key(name).and_then(|k| k.span()));
            let Some(table) = item.as_table() else {
                return Err(if item.is_value() {
                    config_err(line, format!("key '{name}' appears before any section header"))
                } else {
                    config_err(line, format!("[{name}] must be a plain section"))
                });
            };
            if !SECTIONS.contains(&name) {
                return Err(config_err(line, format!("unknown section [{name}]")));
            }
            let mut entries = BTreeMap::new();
            for (key, item) in table.iter() {
                let kline = line_at(text, table.key(key).and_then(|k| k.span()));
                let Some(value) = item.as_value() else {
                    return Err(config_err(kline, format!("key '{key}' in [{name}] must be a plain value")));
                };
                entries.insert(key.to_string(), (kline, value.clone()));
            }
            sections.insert(name.to_string(), Section { name: name.to_string(), header_line: line, entries });
        }
        Ok(Self { sections })
    }

    fn take_section(&mut self, name: &str) -> Section {
        self.sections.remove(name).unwrap_or_else(|| Section {
            name: name.to_string(),
            header_line: 0,
            entries: BTreeMap::new(),
        })
    }

    fn finish(self) -> Result<()> {
        match self.sections.into_values().next() {
            Some(s) => Err(config_err(s.header_line, format!("unknown section [{}]", s.name))),
            None => Ok(()),
        }
    }
}

const SECTIONS: [&str; 8] = ["params", "grid", "scheme", "forcing", "initial", "output", "verify", "exhaustion"];

fn as_number(v: &toml_edit::Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

fn as_count(v: &toml_edit::Value) -> Option<u64> {
    v.as_integer().and_then(|i| u64::try_from(i).ok())
}

impl Section {
    fn string(&mut self, key: &str) -> Result<Option<(usize, String)>> {
        let Some((line, v)) = self.entries.remove(key) else {
            return Ok(None);
        };
        match v.as_str() {
            Some(s) => Ok(Some((line, s.to_string()))),
            None => Err(config_err(line, format!("key '{key}': expected a string, got {}", v.type_name()))),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(self.header_line, |e| e.0)
    }

    fn err_at_header(&self, message: String) -> PcglError {
        config_err(self.header_line, format!("[{}]: {message}", self.name))
    }

    fn scalar<V>(&mut self, key: &str, what: &str, get: impl Fn(&toml_edit::Value) -> Option<V>) -> Result<Option<V>> {
        let Some((line, v)) = self.entries.remove(key) else {
            return Ok(None);
        };
        get(&v)
            .map(Some)
            .ok_or_else(|| config_err(line, format!("key '{key}': expected {what}, got {}", v.type_name())))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        let line = self.line_of(key);
        match self.scalar(key, "a number", as_number)? {
            Some(v) if !v.is_finite() => Err(config_err(line, format!("key '{key}': value must be finite"))),
            v => Ok(v),
        }
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        self.scalar(key, "a nonnegative integer", as_count)
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    /// A single value or an array of values.
    fn list<V>(
        &mut self,
        key: &str,
        what: &str,
        get: impl Fn(&toml_edit::Value) -> Option<V>,
    ) -> Result<Option<(usize, Vec<V>)>> {
        let Some((line, v)) = self.entries.remove(key) else {
            return Ok(None);
        };
        let bad =
            |v: &toml_edit::Value| config_err(line, format!("key '{key}': expected {what}, got {}", v.type_name()));
        let items = match v.as_array() {
            Some(arr) => arr.iter().map(|x| get(x).ok_or_else(|| bad(x))).collect::<Result<Vec<_>>>()?,
            None => vec![get(&v).ok_or_else(|| bad(&v))?],
        };
        Ok(Some((line, items)))
    }

    /// A list of exactly `dim` entries, or one entry repeated `dim` times.
    fn broadcast<V: Clone>(
        &mut self,
        key: &str,
        dim: usize,
        what: &str,
        get: impl Fn(&toml_edit::Value) -> Option<V>,
    ) -> Result<Option<Vec<V>>> {
        let Some((line, items)) = self.list(key, what, get)? else {
            return Ok(None);
        };
        match items.len() {
            1 => Ok(Some(vec![items[0].clone(); dim])),
            n if n == dim => Ok(Some(items)),
            n => Err(config_err(line, format!("key '{key}': expected 1 or {dim} values, got {n}"))),
        }
    }

    fn f64_list(&mut self, key: &str, dim: usize) -> Result<Option<Vec<f64>>> {
        self.broadcast(key, dim, "a number", as_number)
    }

    fn usize_list(&mut self, key: &str, dim: usize) -> Result<Option<Vec<usize>>> {
        self.broadcast(key, dim, "a nonnegative integer", |v| as_count(v).map(|c| c as usize))
    }

    fn f64_list_any(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        Ok(self.list(key, "a number", as_number)?.map(|(_, v)| v))
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            Some((key, (line, _))) => Err(config_err(line, format!("unknown key '{key}' in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("."))
    }

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.params, ParamSet::new(1));
        assert_eq!(cfg.grid.nodes, vec![63]);
        assert_eq!(cfg.initial, FieldSpec::Zero);
        assert_eq!(cfg.scheme.scheme, Scheme::ImexSplit);
    }

    #[test]
    fn echo_round_trips() {
        let text = "[params]\nalpha = 0.3\nbeta = -1e-1\nq = 4\n[grid]\ndim = 2\nnodes = [7, 9]\nextent = 1\n\
                    [scheme]\nkind = 'implicit'\ndt = 0.1\nt_end = 0.7\n[initial]\nkind = 'bump'\nwidth = 0.3\n\
                    [forcing]\nkind = 'mode'\nmodes = 2\namplitude = 0.1\n[exhaustion]\nwidths = [0.5, 1]\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.grid.extent, vec![1.0, 1.0]);
        let again = parse(&cfg.to_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn errors_name_key_and_line() {
        let e = parse("[params]\nlambda = 1\nkapa = 2\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3") && msg.contains("kapa"), "{msg}");

        let e = parse("[scheme]\n\ndt = 'fast'\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("'dt'"), "{e}");

        let e = parse("[scheme]\ndt = 0.1\ndt = 0.2\n").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");

        let e = parse("[nope]\n").unwrap_err().to_string();
        assert!(e.contains("line 1") && e.contains("nope"), "{e}");

        let e = parse("p = 2\n").unwrap_err().to_string();
        assert!(e.contains("before any section"), "{e}");

        let e = parse("[params]\np = 1\n").unwrap_err().to_string();
        assert!(e.contains("line 1") && e.contains("p must exceed"), "{e}");

        let e = parse("[initial]\nkind = 'file'\npath = '/definitely/missing.csv'\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("path"), "{e}");
    }

    #[test]
    fn mode_field_matches_sine() {
        let cfg = parse("[grid]\nnodes = 3\n[initial]\nkind = 'mode'\nmodes = 1\n").unwrap();
        let g = cfg.grid.build().unwrap();
        let u = cfg.initial.build(&g).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (v, want) in u.values().iter().zip([s, 1.0, s]) {
            assert!((v[0] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn bump_is_compactly_supported() {
        let cfg = parse("[grid]\nextent = 4\nnodes = 31\n[initial]\nkind = 'bump'\nwidth = 0.5\n").unwrap();
        let g = cfg.grid.build().unwrap();
        let u = cfg.initial.build(&g).unwrap();
        let child = g.concentric_child(&[1.0]).unwrap();
        assert!(u.supported_in(&child).unwrap());
        assert!((u.max_magnitude() - 1.0).abs() < 1e-12);
    }
}
