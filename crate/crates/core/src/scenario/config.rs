//! Line-oriented scenario files: `[section]` headers, `key = value` lines,
//! `#` comments. Values are numbers, words, or comma-separated lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectra::{AtomSpec, ModeFamily, ModeIndex};

/// Which model(s) a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Markov,
    NonMarkov,
    Simulate,
    All,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Markov => "markov",
            Model::NonMarkov => "nonmarkov",
            Model::Simulate => "simulate",
            Model::All => "all",
        }
    }

    pub fn includes(&self, other: Model) -> bool {
        *self == Model::All || *self == other
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "markov" => Ok(Model::Markov),
            "nonmarkov" => Ok(Model::NonMarkov),
            "simulate" => Ok(Model::Simulate),
            "all" => Ok(Model::All),
            _ => Err(format!("unknown model '{s}' (markov, nonmarkov, simulate, all)")),
        }
    }
}

/// Guided modes of an SI waveguide bath.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeSelection {
    /// Every mode whose evanescent weight matters at the atom separation.
    Auto { with_te: bool },
    List(Vec<ModeIndex>),
}

/// The bath the atoms couple to.
#[derive(Debug, Clone, PartialEq)]
pub enum BathConfig {
    /// Exact single TM mode for z-dipoles, dimensionless.
    TmMode { gamma: f64, cutoff: f64, light_speed: f64 },
    /// Square-root model of a cutoff or band edge, dimensionless.
    NearCutoff { gamma: f64, cutoff: f64, light_speed: f64 },
    /// Rectangular guide in SI units.
    Waveguide { a: f64, b: f64, modes: ModeSelection },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub window_factor: f64,
    pub n_modes: usize,
    pub t_max: f64,
    pub n_steps: usize,
    pub output_stride: usize,
    pub tol: f64,
    /// Non-Markovian validity margins above this are reported as warnings.
    pub validity_threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            window_factor: 50.0,
            n_modes: 1500,
            t_max: 1.0,
            n_steps: 400,
            output_stride: 1,
            tol: 1e-8,
            validity_threshold: 0.3,
        }
    }
}

/// Detuning sweep at fixed separation in transition wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// `ω_a - ω_c` values.
    pub detunings: Vec<f64>,
    pub z_over_lambda: f64,
    /// Run length per point in units of the Markov exchange period `π/Δ12`.
    pub periods: f64,
}

/// SI inputs of a physical realization together with the dimensionless
/// values quoted for the corresponding figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationConfig {
    /// Transition angular frequency, rad/s.
    pub omega_a: f64,
    /// Dipole moment in units of `e a0`, if known.
    pub dipole_ea0: Option<f64>,
    /// Reference decay rate in s⁻¹.
    pub gamma: f64,
    pub quoted_cutoff: f64,
    pub quoted_detuning: f64,
    pub quoted_z_over_lambda: f64,
}

/// Wall-loss inputs, SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub a: f64,
    pub b: f64,
    pub m: u32,
    pub n: u32,
    pub surface_resistance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: Model,
    pub bath: BathConfig,
    pub atoms: [AtomSpec; 2],
    pub grid: GridConfig,
    pub sweep: Option<SweepConfig>,
    pub realization: Option<RealizationConfig>,
    pub loss: Option<LossConfig>,
    pub output: OutputConfig,
}

impl ScenarioConfig {
    /// Transition frequency of the first atom.
    pub fn omega_a(&self) -> f64 {
        self.atoms[0].omega_a
    }

    pub fn z12(&self) -> f64 {
        (self.atoms[1].position[2] - self.atoms[0].position[2]).abs()
    }

    pub fn cutoff(&self) -> Option<f64> {
        match self.bath {
            BathConfig::TmMode { cutoff, .. } | BathConfig::NearCutoff { cutoff, .. } => Some(cutoff),
            BathConfig::Waveguide { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(0, msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("scenario name '{}' must be non-empty and contain no path separators", self.name));
        }
        if self.atoms[0].omega_a != self.atoms[1].omega_a {
            return bad("both atoms must share one transition frequency".into());
        }
        match self.bath {
            BathConfig::TmMode { gamma, cutoff, light_speed } | BathConfig::NearCutoff { gamma, cutoff, light_speed } => {
                if !(gamma > 0.0 && cutoff > 0.0 && light_speed > 0.0) {
                    return bad("bath gamma, cutoff and light_speed must be positive".into());
                }
            }
            BathConfig::Waveguide { a, b, .. } => {
                if !(a > 0.0 && b > 0.0) {
                    return bad("waveguide a and b must be positive".into());
                }
                if self.model.includes(Model::NonMarkov) {
                    return bad("model nonmarkov needs a single-mode bath (kind tm_mode or near_cutoff)".into());
                }
            }
        }
        let g = &self.grid;
        if !(g.window_factor > 0.0 && g.t_max > 0.0 && g.tol > 0.0 && g.validity_threshold > 0.0) || g.n_modes < 2 || g.n_steps < 1 || g.output_stride < 1 {
            return bad("grid needs window_factor, t_max, tol, validity_threshold > 0, n_modes ≥ 2, n_steps ≥ 1, output_stride ≥ 1".into());
        }
        if let Some(s) = &self.sweep {
            if s.detunings.is_empty() || !(s.z_over_lambda >= 0.0 && s.periods > 0.0) {
                return bad("sweep needs at least one detuning, z_over_lambda ≥ 0 and periods > 0".into());
            }
            if self.cutoff().is_none() {
                return bad("sweeps need a single-mode bath".into());
            }
        }
        Ok(())
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

/// Parsed file before typing; tracks lines for diagnostics.
struct Document {
    sections: BTreeMap<String, Section>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(line, format!("malformed section header '{content}'")))?
                    .trim()
                    .to_string();
                if sections.contains_key(&name) {
                    return Err(Error::config(line, format!("section [{name}] appears twice")));
                }
                sections.insert(name.clone(), Section { line, entries: BTreeMap::new() });
                current = Some(name);
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("expected 'key = value', found '{content}'")))?;
            let section = current
                .as_ref()
                .ok_or_else(|| Error::config(line, "key outside of any [section]"))?;
            let key = key.trim().to_string();
            let entries = &mut sections.get_mut(section).expect("section exists").entries;
            if entries.contains_key(&key) {
                return Err(Error::config(line, format!("key '{key}' repeated in [{section}]")));
            }
            entries.insert(key, Entry { value: value.trim().to_string(), line, used: false });
        }
        Ok(Document { sections })
    }

    fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn section_line(&self, section: &str) -> usize {
        self.sections.get(section).map_or(0, |s| s.line)
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.entries.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn opt<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::config(line, format!("[{section}] {key} = '{v}': {e}"))),
        }
    }

    fn req<T: FromStr>(&mut self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let line = self.section_line(section);
        self.opt(section, key)?
            .ok_or_else(|| Error::config(line, format!("missing required key '{key}' in [{section}]")))
    }

    fn list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<T>()
                        .map_err(|e| Error::config(line, format!("[{section}] {key}: item '{}': {e}", p.trim())))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn vec3(&mut self, section: &str, key: &str, default: [f64; 3]) -> Result<[f64; 3]> {
        let line = self.raw(section, key).map(|(_, l)| l).unwrap_or(0);
        match self.list::<f64>(section, key)? {
            None => Ok(default),
            Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
            Some(v) => Err(Error::config(line, format!("[{section}] {key} needs 3 components, got {}", v.len()))),
        }
    }

    /// Rejects sections and keys nothing consumed.
    fn finish(self) -> Result<()> {
        for (name, s) in &self.sections {
            if !KNOWN_SECTIONS.contains(&name.as_str()) {
                return Err(Error::config(s.line, format!("unknown section [{name}]")));
            }
            if let Some((k, e)) = s.entries.iter().find(|(_, e)| !e.used) {
                return Err(Error::config(e.line, format!("unknown key '{k}' in [{name}]")));
            }
        }
        Ok(())
    }
}

const KNOWN_SECTIONS: [&str; 9] = ["scenario", "bath", "atom1", "atom2", "grid", "sweep", "realization", "loss", "output"];

fn parse_modes(text: &str, line: usize) -> Result<Vec<ModeIndex>> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let (family, digits) = if let Some(d) = item.strip_prefix("TM") {
                (ModeFamily::TM, d)
            } else if let Some(d) = item.strip_prefix("TE") {
                (ModeFamily::TE, d)
            } else {
                return Err(Error::config(line, format!("mode '{item}' must look like TM11 or TE10")));
            };
            let parts: Vec<&str> = digits.split('_').collect();
            let (m, n) = match parts.as_slice() {
                [m, n] => (m.parse::<u32>(), n.parse::<u32>()),
                [mn] if mn.len() == 2 => (mn[..1].parse::<u32>(), mn[1..].parse::<u32>()),
                _ => return Err(Error::config(line, format!("mode '{item}': write TM11 or TM1_12"))),
            };
            let (m, n) = (
                m.map_err(|e| Error::config(line, format!("mode '{item}': {e}")))?,
                n.map_err(|e| Error::config(line, format!("mode '{item}': {e}")))?,
            );
            ModeIndex::new(family, m, n).map_err(|e| Error::config(line, e.to_string()))
        })
        .collect()
}

fn mode_name(m: &ModeIndex) -> String {
    let fam = match m.family {
        ModeFamily::TM => "TM",
        ModeFamily::TE => "TE",
    };
    if m.m < 10 && m.n < 10 {
        format!("{fam}{}{}", m.m, m.n)
    } else {
        format!("{fam}{}_{}", m.m, m.n)
    }
}

/// Parses and validates a scenario file.
pub fn parse(text: &str) -> Result<ScenarioConfig> {
    let mut doc = Document::parse(text)?;
    for required in ["scenario", "bath", "atom1", "atom2"] {
        if !doc.has(required) {
            return Err(Error::config(0, format!("missing section [{required}]")));
        }
    }
    let name: String = doc.req("scenario", "name")?;
    let model: Model = doc.req("scenario", "model")?;

    let kind: String = doc.req("bath", "kind")?;
    let kind_line = doc.section_line("bath");
    let bath = match kind.as_str() {
        "tm_mode" | "near_cutoff" => {
            let gamma = doc.req("bath", "gamma")?;
            let cutoff = doc.req("bath", "cutoff")?;
            let light_speed = doc.opt("bath", "light_speed")?.unwrap_or(1.0);
            if kind == "tm_mode" {
                BathConfig::TmMode { gamma, cutoff, light_speed }
            } else {
                BathConfig::NearCutoff { gamma, cutoff, light_speed }
            }
        }
        "waveguide" => {
            let a = doc.req("bath", "a")?;
            let b = doc.req("bath", "b")?;
            let modes = match doc.raw("bath", "modes") {
                None => ModeSelection::Auto { with_te: true },
                Some((v, _)) if v == "auto" || v == "auto_tm" => ModeSelection::Auto { with_te: v == "auto" },
                Some((v, line)) => ModeSelection::List(parse_modes(&v, line)?),
            };
            BathConfig::Waveguide { a, b, modes }
        }
        other => {
            return Err(Error::config(
                kind_line,
                format!("unknown bath kind '{other}' (tm_mode, near_cutoff, waveguide)"),
            ))
        }
    };

    let mut atoms = [AtomSpec { omega_a: 0.0, dipole: [0.0, 0.0, 1.0], position: [0.0; 3] }; 2];
    for (i, atom) in atoms.iter_mut().enumerate() {
        let sec = if i == 0 { "atom1" } else { "atom2" };
        atom.omega_a = doc.req(sec, "omega_a")?;
        atom.dipole = doc.vec3(sec, "dipole", [0.0, 0.0, 1.0])?;
        atom.position = doc.vec3(sec, "position", [0.0; 3])?;
    }

    let mut grid = GridConfig::default();
    if doc.has("grid") {
        grid.window_factor = doc.opt("grid", "window_factor")?.unwrap_or(grid.window_factor);
        grid.n_modes = doc.opt("grid", "n_modes")?.unwrap_or(grid.n_modes);
        grid.t_max = doc.opt("grid", "t_max")?.unwrap_or(grid.t_max);
        grid.n_steps = doc.opt("grid", "n_steps")?.unwrap_or(grid.n_steps);
        grid.output_stride = doc.opt("grid", "output_stride")?.unwrap_or(grid.output_stride);
        grid.tol = doc.opt("grid", "tol")?.unwrap_or(grid.tol);
        grid.validity_threshold = doc.opt("grid", "validity_threshold")?.unwrap_or(grid.validity_threshold);
    } else if model != Model::Markov {
        return Err(Error::config(0, format!("model {} needs a [grid] section with t_max", model.as_str())));
    }

    let sweep = if doc.has("sweep") {
        Some(SweepConfig {
            detunings: doc
                .list("sweep", "detunings")?
                .ok_or_else(|| Error::config(doc.section_line("sweep"), "missing 'detunings' in [sweep]"))?,
            z_over_lambda: doc.req("sweep", "z_over_lambda")?,
            periods: doc.opt("sweep", "periods")?.unwrap_or(2.5),
        })
    } else {
        None
    };

    let realization = if doc.has("realization") {
        Some(RealizationConfig {
            omega_a: doc.req("realization", "omega_a")?,
            dipole_ea0: doc.opt("realization", "dipole_ea0")?,
            gamma: doc.req("realization", "gamma")?,
            quoted_cutoff: doc.req("realization", "quoted_cutoff")?,
            quoted_detuning: doc.req("realization", "quoted_detuning")?,
            quoted_z_over_lambda: doc.req("realization", "quoted_z_over_lambda")?,
        })
    } else {
        None
    };

    let loss = if doc.has("loss") {
        Some(LossConfig {
            a: doc.req("loss", "a")?,
            b: doc.req("loss", "b")?,
            m: doc.opt("loss", "m")?.unwrap_or(1),
            n: doc.opt("loss", "n")?.unwrap_or(1),
            surface_resistance: doc.req("loss", "surface_resistance")?,
        })
    } else {
        None
    };

    let mut output = OutputConfig::default();
    if doc.has("output") {
        output.dir = doc.opt::<String>("output", "dir")?.map(PathBuf::from);
        if let Some((f, line)) = doc.raw("output", "format") {
            if f != "csv" {
                return Err(Error::config(line, format!("unsupported output format '{f}' (csv)")));
            }
        }
        output.plot = doc.opt("output", "plot")?.unwrap_or(false);
    }

    doc.finish()?;
    let cfg = ScenarioConfig { name, model, bath, atoms, grid, sweep, realization, loss, output };
    cfg.validate()?;
    Ok(cfg)
}

fn push(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Writes a config in the format [`parse`] reads. Floats use the shortest
/// representation that parses back to the same value.
pub fn serialize(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    s.push_str("[scenario]\n");
    push(&mut s, "name", &cfg.name);
    push(&mut s, "model", cfg.model.as_str());

    s.push_str("\n[bath]\n");
    match &cfg.bath {
        BathConfig::TmMode { gamma, cutoff, light_speed } | BathConfig::NearCutoff { gamma, cutoff, light_speed } => {
            let kind = if matches!(cfg.bath, BathConfig::TmMode { .. }) { "tm_mode" } else { "near_cutoff" };
            push(&mut s, "kind", kind);
            push(&mut s, "gamma", gamma);
            push(&mut s, "cutoff", cutoff);
            push(&mut s, "light_speed", light_speed);
        }
        BathConfig::Waveguide { a, b, modes } => {
            push(&mut s, "kind", "waveguide");
            push(&mut s, "a", a);
            push(&mut s, "b", b);
            let m = match modes {
                ModeSelection::Auto { with_te: true } => "auto".to_string(),
                ModeSelection::Auto { with_te: false } => "auto_tm".to_string(),
                ModeSelection::List(list) => list.iter().map(mode_name).collect::<Vec<_>>().join(", "),
            };
            push(&mut s, "modes", m);
        }
    }

    for (i, atom) in cfg.atoms.iter().enumerate() {
        let _ = writeln!(s, "\n[atom{}]", i + 1);
        push(&mut s, "omega_a", atom.omega_a);
        push(&mut s, "dipole", join(&atom.dipole));
        push(&mut s, "position", join(&atom.position));
    }

    let g = &cfg.grid;
    s.push_str("\n[grid]\n");
    push(&mut s, "window_factor", g.window_factor);
    push(&mut s, "n_modes", g.n_modes);
    push(&mut s, "t_max", g.t_max);
    push(&mut s, "n_steps", g.n_steps);
    push(&mut s, "output_stride", g.output_stride);
    push(&mut s, "tol", g.tol);
    push(&mut s, "validity_threshold", g.validity_threshold);

    if let Some(sw) = &cfg.sweep {
        s.push_str("\n[sweep]\n");
        push(&mut s, "detunings", join(&sw.detunings));
        push(&mut s, "z_over_lambda", sw.z_over_lambda);
        push(&mut s, "periods", sw.periods);
    }
    if let Some(r) = &cfg.realization {
        s.push_str("\n[realization]\n");
        push(&mut s, "omega_a", r.omega_a);
        if let Some(d) = r.dipole_ea0 {
            push(&mut s, "dipole_ea0", d);
        }
        push(&mut s, "gamma", r.gamma);
        push(&mut s, "quoted_cutoff", r.quoted_cutoff);
        push(&mut s, "quoted_detuning", r.quoted_detuning);
        push(&mut s, "quoted_z_over_lambda", r.quoted_z_over_lambda);
    }
    if let Some(l) = &cfg.loss {
        s.push_str("\n[loss]\n");
        push(&mut s, "a", l.a);
        push(&mut s, "b", l.b);
        push(&mut s, "m", l.m);
        push(&mut s, "n", l.n);
        push(&mut s, "surface_resistance", l.surface_resistance);
    }
    s.push_str("\n[output]\n");
    if let Some(d) = &cfg.output.dir {
        push(&mut s, "dir", d.display());
    }
    push(&mut s, "format", "csv");
    push(&mut s, "plot", cfg.output.plot);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[scenario]
name = demo
model = markov

[bath]
kind = tm_mode
gamma = 1
cutoff = 500

[atom1]
omega_a = 400

[atom2]
omega_a = 400
position = 0, 0, 0.01
";

    #[test]
    fn minimal_file_parses_with_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.model, Model::Markov);
        assert_eq!(cfg.atoms[1].position, [0.0, 0.0, 0.01]);
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(parse(&serialize(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = MINIMAL.replace("cutoff = 500", "cutoff = fivehundred");
        match parse(&bad) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 8);
                assert!(msg.contains("cutoff"), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
        let unknown = MINIMAL.replace("gamma = 1", "gamma = 1\ncolour = blue");
        assert!(matches!(parse(&unknown), Err(Error::Config { line: 8, .. })));
        let missing = MINIMAL.replace("model = markov\n", "");
        assert!(matches!(parse(&missing), Err(Error::Config { .. })));
    }

    #[test]
    fn mode_lists_round_trip() {
        let text = MINIMAL.replace("kind = tm_mode\ngamma = 1\ncutoff = 500", "kind = waveguide\na = 0.02\nb = 0.01\nmodes = TM11, TE10, TM1_12");
        let cfg = parse(&text).unwrap();
        match &cfg.bath {
            BathConfig::Waveguide { modes: ModeSelection::List(l), .. } => assert_eq!(l.len(), 3),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse(&serialize(&cfg)).unwrap(), cfg);
    }
}
