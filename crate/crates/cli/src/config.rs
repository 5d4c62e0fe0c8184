//! Simulation configuration: a line-oriented `key = value` file with
//! `[material.N]` sections binding isotherm kinetics and slip lengths to
//! solid material codes. Unknown keys are errors; every default the
//! parser applies is recorded so the run manifest can list it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use porevox_core::dimensionless::{ClassRates, PhysicalParams};
use porevox_core::flow::{StokesMode, WallBc};
use porevox_core::geometry::{Axis, MaterialMap};
use porevox_core::kinetics::Isotherm;
use porevox_core::DimensionlessGroups;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown key `{key}` (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("exactly one of `dt_hat` and `dt` must be given")]
    TimestepConflict,
    #[error("key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("default_material {0} has no [material.{0}] section")]
    BadDefaultMaterial(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoKind {
    Inert,
    Henry,
    Langmuir,
    Frumkin,
}

impl fmt::Display for IsoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IsoKind::Inert => "inert",
            IsoKind::Henry => "henry",
            IsoKind::Langmuir => "langmuir",
            IsoKind::Frumkin => "frumkin",
        };
        write!(f, "{s}")
    }
}

/// One `[material.N]` section: physical kinetics for a material code.
#[derive(Debug, Clone)]
pub struct MaterialSpec {
    pub code: u8,
    pub isotherm: IsoKind,
    /// Adsorption rate, m/s.
    pub kappa_a: f64,
    /// Desorption rate, 1/s.
    pub kappa_d: f64,
    /// Maximal adsorbed surface concentration, number/m².
    pub m_inf: f64,
    /// Slip length, m.
    pub slip_beta: f64,
}

/// Fully resolved run configuration. `defaults_applied` lists the keys
/// the parser filled in, for the manifest.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub geometry: PathBuf,
    pub voxel_size: f64,
    pub flow_axis: Axis,
    pub padding_layers: usize,
    /// Reference length L in meters; `None` means the padded domain
    /// extent along the flow axis.
    pub length_scale: Option<f64>,
    pub rho: f64,
    pub mu: f64,
    pub v_in: f64,
    pub p_out: f64,
    pub diffusivity: f64,
    pub c_in: f64,
    pub temperature: f64,
    pub beta_frumkin: f64,
    /// Dimensionless timestep, or a dimensional one in seconds.
    pub dt: TimeSpec,
    /// End time in the same system as `dt`.
    pub t_end: f64,
    /// Snapshot interval in the same system as `dt` (0 = final only).
    pub save_every: f64,
    pub c0_hat: f64,
    pub m0_hat: f64,
    pub tol_steady: f64,
    pub div_tol: f64,
    pub linear_tol: f64,
    pub max_linear_iters: usize,
    pub max_flow_steps: usize,
    pub stokes_mode: StokesMode,
    pub wall_bc: WallBc,
    pub dimensional_mode: bool,
    pub deterministic: bool,
    pub dump_system: bool,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub materials: Vec<MaterialSpec>,
    pub default_material: Option<u8>,
    pub defaults_applied: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeSpec {
    Hat(f64),
    Seconds(f64),
}

impl SimulationConfig {
    /// Dense class list: one class per declared material (sorted by
    /// code), plus a trailing implicit inert class used as the fallback
    /// when `default_material` is not set.
    pub fn classes(&self) -> Vec<MaterialSpec> {
        let mut classes: Vec<MaterialSpec> = self.materials.clone();
        classes.sort_by_key(|m| m.code);
        if self.default_material.is_none() {
            classes.push(MaterialSpec {
                code: 0,
                isotherm: IsoKind::Inert,
                kappa_a: 0.0,
                kappa_d: 0.0,
                m_inf: f64::INFINITY,
                slip_beta: 0.0,
            });
        }
        classes
    }

    pub fn material_map(&self) -> MaterialMap {
        let classes = self.classes();
        let mut map = BTreeMap::new();
        for (i, m) in classes.iter().enumerate() {
            if !(self.default_material.is_none() && i + 1 == classes.len()) {
                map.insert(m.code, i);
            }
        }
        let default_class = match self.default_material {
            Some(code) => classes
                .iter()
                .position(|m| m.code == code)
                .expect("validated default material"),
            None => classes.len() - 1,
        };
        MaterialMap::new(map, default_class, classes.len())
    }

    pub fn physical_params(&self, length_scale: f64) -> PhysicalParams {
        let classes = self
            .classes()
            .iter()
            .map(|m| ClassRates {
                kappa_a: m.kappa_a,
                kappa_d: m.kappa_d,
                m_inf: m.m_inf,
                slip_beta: m.slip_beta,
            })
            .collect();
        PhysicalParams {
            length_scale,
            rho: self.rho,
            mu: self.mu,
            v_in: self.v_in,
            p_out: self.p_out,
            diffusivity: self.diffusivity,
            c_in: self.c_in,
            beta_frumkin: self.beta_frumkin,
            temperature: self.temperature,
            classes,
        }
    }

    /// Per-class isotherm laws with the dimensionless parameters taken
    /// from the computed groups.
    pub fn isotherms(&self, groups: &DimensionlessGroups) -> Vec<Isotherm> {
        self.classes()
            .iter()
            .enumerate()
            .map(|(i, m)| match m.isotherm {
                IsoKind::Inert => Isotherm::Inert,
                IsoKind::Henry => Isotherm::Henry {
                    da_a: groups.da_adsorption[i],
                    da_d: groups.da_desorption[i],
                },
                IsoKind::Langmuir => Isotherm::Langmuir {
                    da_a: groups.da_adsorption[i],
                    da_d: groups.da_desorption[i],
                    m_inf_hat: groups.m_inf_hat[i],
                },
                IsoKind::Frumkin => Isotherm::Frumkin {
                    da_a: groups.da_adsorption[i],
                    da_d: groups.da_desorption[i],
                    m_inf_hat: groups.m_inf_hat[i],
                    beta_hat: groups.beta_hat,
                },
            })
            .collect()
    }

    /// Timestep and horizon in dimensionless time for a given velocity
    /// and length scale.
    pub fn times_hat(&self, v_in: f64, length_scale: f64) -> (f64, f64, f64) {
        let to_hat = v_in / length_scale;
        match self.dt {
            TimeSpec::Hat(dt) => (dt, self.t_end, self.save_every),
            TimeSpec::Seconds(dt) => (
                dt * to_hat,
                self.t_end * to_hat,
                self.save_every * to_hat,
            ),
        }
    }
}

struct RawItem {
    line: usize,
    section: Option<u8>,
    key: String,
    value: String,
}

fn tokenize(text: &str) -> Result<Vec<RawItem>, ConfigError> {
    let mut items = Vec::new();
    let mut section: Option<u8> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(inner) = stripped.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or(ConfigError::Parse {
                line,
                msg: "unterminated section header".into(),
            })?;
            let code = inner
                .strip_prefix("material.")
                .and_then(|c| c.parse::<u8>().ok())
                .filter(|&c| c != 0)
                .ok_or(ConfigError::Parse {
                    line,
                    msg: format!("bad section `{inner}`; expected [material.N] with N in 1..=255"),
                })?;
            section = Some(code);
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or(ConfigError::Parse {
            line,
            msg: "expected `key = value`".into(),
        })?;
        items.push(RawItem {
            line,
            section,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(items)
}

fn parse_f64(item: &RawItem) -> Result<f64, ConfigError> {
    item.value.parse().map_err(|_| ConfigError::BadValue {
        key: item.key.clone(),
        msg: format!("`{}` is not a number", item.value),
    })
}

fn parse_usize(item: &RawItem) -> Result<usize, ConfigError> {
    item.value.parse().map_err(|_| ConfigError::BadValue {
        key: item.key.clone(),
        msg: format!("`{}` is not a nonnegative integer", item.value),
    })
}

fn parse_bool(item: &RawItem) -> Result<bool, ConfigError> {
    match item.value.as_str() {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(ConfigError::BadValue {
            key: item.key.clone(),
            msg: format!("`{other}` is not a boolean"),
        }),
    }
}

pub fn parse_config(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses config text; relative paths are resolved against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<SimulationConfig, ConfigError> {
    let items = tokenize(text)?;
    let mut top: BTreeMap<&str, &RawItem> = BTreeMap::new();
    let mut sections: BTreeMap<u8, BTreeMap<&str, &RawItem>> = BTreeMap::new();
    for item in &items {
        let bucket = match item.section {
            None => &mut top,
            Some(code) => sections.entry(code).or_default(),
        };
        if bucket.insert(item.key.as_str(), item).is_some() {
            return Err(ConfigError::Parse {
                line: item.line,
                msg: format!("duplicate key `{}`", item.key),
            });
        }
    }

    let mut defaults: BTreeMap<String, String> = BTreeMap::new();
    let default_f64 = |key: &'static str,
                           value: f64,
                           defaults: &mut BTreeMap<String, String>,
                           top: &mut BTreeMap<&str, &RawItem>|
     -> Result<f64, ConfigError> {
        match top.remove(key) {
            Some(item) => parse_f64(item),
            None => {
                defaults.insert(key.to_string(), format!("{value}"));
                Ok(value)
            }
        }
    };

    let geometry = top
        .remove("geometry")
        .ok_or(ConfigError::Missing("geometry"))?;
    let geometry_path = {
        let p = PathBuf::from(&geometry.value);
        if p.is_absolute() {
            p
        } else {
            base_dir.join(p)
        }
    };
    let voxel_size = parse_f64(top.remove("voxel_size").ok_or(ConfigError::Missing("voxel_size"))?)?;
    let rho = parse_f64(top.remove("rho").ok_or(ConfigError::Missing("rho"))?)?;
    let mu = parse_f64(top.remove("mu").ok_or(ConfigError::Missing("mu"))?)?;
    let v_in = parse_f64(top.remove("V_in").ok_or(ConfigError::Missing("V_in"))?)?;
    let diffusivity = parse_f64(top.remove("D").ok_or(ConfigError::Missing("D"))?)?;
    let c_in = parse_f64(top.remove("c_in").ok_or(ConfigError::Missing("c_in"))?)?;

    let dt_hat = top.remove("dt_hat").map(parse_f64).transpose()?;
    let dt_sec = top.remove("dt").map(parse_f64).transpose()?;
    let dt = match (dt_hat, dt_sec) {
        (Some(h), None) => TimeSpec::Hat(h),
        (None, Some(s)) => TimeSpec::Seconds(s),
        _ => return Err(ConfigError::TimestepConflict),
    };
    let t_end = parse_f64(top.remove("t_end").ok_or(ConfigError::Missing("t_end"))?)?;
    if !(t_end >= 0.0) {
        return Err(ConfigError::BadValue {
            key: "t_end".into(),
            msg: "must be nonnegative".into(),
        });
    }

    let flow_axis = match top.remove("flow_axis") {
        Some(item) => match item.value.as_str() {
            "x" => Axis::X,
            "y" => Axis::Y,
            "z" => Axis::Z,
            other => {
                return Err(ConfigError::BadValue {
                    key: "flow_axis".into(),
                    msg: format!("`{other}` is not one of x/y/z"),
                })
            }
        },
        None => {
            defaults.insert("flow_axis".into(), "z".into());
            Axis::Z
        }
    };
    let padding_layers = match top.remove("padding_layers") {
        Some(item) => parse_usize(item)?,
        None => {
            defaults.insert("padding_layers".into(), "0".into());
            0
        }
    };
    let length_scale = top.remove("length_scale").map(parse_f64).transpose()?;
    if length_scale.is_none() {
        defaults.insert("length_scale".into(), "domain extent".into());
    }
    let p_out = default_f64("P_out", 0.0, &mut defaults, &mut top)?;
    let temperature = default_f64("T", 293.15, &mut defaults, &mut top)?;
    let beta_frumkin = default_f64("beta_frumkin", 0.0, &mut defaults, &mut top)?;
    let save_every = default_f64("save_every", 0.0, &mut defaults, &mut top)?;
    let c0_hat = default_f64("c0_hat", 1.0, &mut defaults, &mut top)?;
    let m0_hat = default_f64("m0_hat", 0.0, &mut defaults, &mut top)?;
    let tol_steady = default_f64("tol_steady", 1e-6, &mut defaults, &mut top)?;
    let div_tol = default_f64("div_tol", 1e-8, &mut defaults, &mut top)?;
    let linear_tol = default_f64("linear_tol", 1e-11, &mut defaults, &mut top)?;
    let max_linear_iters = match top.remove("max_linear_iters") {
        Some(item) => parse_usize(item)?,
        None => {
            defaults.insert("max_linear_iters".into(), "20000".into());
            20_000
        }
    };
    let max_flow_steps = match top.remove("max_flow_steps") {
        Some(item) => parse_usize(item)?,
        None => {
            defaults.insert("max_flow_steps".into(), "500000".into());
            500_000
        }
    };
    let stokes_mode = match top.remove("stokes_mode") {
        Some(item) => match item.value.as_str() {
            "auto" => StokesMode::Auto,
            "on" => StokesMode::On,
            "off" => StokesMode::Off,
            other => {
                return Err(ConfigError::BadValue {
                    key: "stokes_mode".into(),
                    msg: format!("`{other}` is not one of auto/on/off"),
                })
            }
        },
        None => {
            defaults.insert("stokes_mode".into(), "auto".into());
            StokesMode::Auto
        }
    };
    let wall_bc = match top.remove("wall_bc") {
        Some(item) => match item.value.as_str() {
            "noslip" => WallBc::NoSlip,
            "slip" => WallBc::FreeSlip,
            other => {
                return Err(ConfigError::BadValue {
                    key: "wall_bc".into(),
                    msg: format!("`{other}` is not one of noslip/slip"),
                })
            }
        },
        None => {
            defaults.insert("wall_bc".into(), "noslip".into());
            WallBc::NoSlip
        }
    };
    let bool_key = |key: &'static str,
                        value: bool,
                        defaults: &mut BTreeMap<String, String>,
                        top: &mut BTreeMap<&str, &RawItem>|
     -> Result<bool, ConfigError> {
        match top.remove(key) {
            Some(item) => parse_bool(item),
            None => {
                defaults.insert(key.to_string(), format!("{value}"));
                Ok(value)
            }
        }
    };
    let dimensional_mode = bool_key("dimensional_mode", false, &mut defaults, &mut top)?;
    let deterministic = bool_key("deterministic", true, &mut defaults, &mut top)?;
    let dump_system = bool_key("dump_system", false, &mut defaults, &mut top)?;
    let threads = match top.remove("threads") {
        Some(item) => parse_usize(item)?.max(1),
        None => {
            defaults.insert("threads".into(), "1".into());
            1
        }
    };
    let output_dir = match top.remove("output_dir") {
        Some(item) => {
            let p = PathBuf::from(&item.value);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        }
        None => {
            defaults.insert("output_dir".into(), "out".into());
            base_dir.join("out")
        }
    };
    let default_material = top
        .remove("default_material")
        .map(|item| {
            item.value.parse::<u8>().map_err(|_| ConfigError::BadValue {
                key: "default_material".into(),
                msg: format!("`{}` is not a material code", item.value),
            })
        })
        .transpose()?;

    if let Some((key, item)) = top.iter().next() {
        return Err(ConfigError::UnknownKey {
            key: key.to_string(),
            line: item.line,
        });
    }

    let mut materials = Vec::new();
    for (code, mut keys) in sections {
        let isotherm = match keys.remove("isotherm") {
            Some(item) => match item.value.as_str() {
                "inert" => IsoKind::Inert,
                "henry" => IsoKind::Henry,
                "langmuir" => IsoKind::Langmuir,
                "frumkin" => IsoKind::Frumkin,
                other => {
                    return Err(ConfigError::BadValue {
                        key: format!("material.{code}.isotherm"),
                        msg: format!("`{other}` is not one of inert/henry/langmuir/frumkin"),
                    })
                }
            },
            None => {
                defaults.insert(format!("material.{code}.isotherm"), "inert".into());
                IsoKind::Inert
            }
        };
        let mut num = |key: &'static str, fallback: f64| -> Result<f64, ConfigError> {
            match keys.remove(key) {
                Some(item) => parse_f64(item),
                None => {
                    defaults.insert(format!("material.{code}.{key}"), format!("{fallback}"));
                    Ok(fallback)
                }
            }
        };
        let kappa_a = num("kappa_a", 0.0)?;
        let kappa_d = num("kappa_d", 0.0)?;
        let m_inf = num("m_inf", f64::INFINITY)?;
        let slip_beta = num("slip_beta", 0.0)?;
        if let Some((key, item)) = keys.iter().next() {
            return Err(ConfigError::UnknownKey {
                key: format!("material.{code}.{key}"),
                line: item.line,
            });
        }
        if matches!(isotherm, IsoKind::Langmuir | IsoKind::Frumkin) && !(m_inf > 0.0) {
            return Err(ConfigError::BadValue {
                key: format!("material.{code}.m_inf"),
                msg: "saturating isotherms need m_inf > 0".into(),
            });
        }
        materials.push(MaterialSpec {
            code,
            isotherm,
            kappa_a,
            kappa_d,
            m_inf,
            slip_beta,
        });
    }

    if let Some(code) = default_material {
        if !materials.iter().any(|m| m.code == code) {
            return Err(ConfigError::BadDefaultMaterial(code));
        }
    }

    Ok(SimulationConfig {
        geometry: geometry_path,
        voxel_size,
        flow_axis,
        padding_layers,
        length_scale,
        rho,
        mu,
        v_in,
        p_out,
        diffusivity,
        c_in,
        temperature,
        beta_frumkin,
        dt,
        t_end,
        save_every,
        c0_hat,
        m0_hat,
        tol_steady,
        div_tol,
        linear_tol,
        max_linear_iters,
        max_flow_steps,
        stokes_mode,
        wall_bc,
        dimensional_mode,
        deterministic,
        dump_system,
        threads,
        output_dir,
        materials,
        default_material,
        defaults_applied: defaults,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
geometry = g.vox
voxel_size = 1e-6
rho = 1000
mu = 1e-3
V_in = 1e-3
D = 1e-9
c_in = 2e13
dt_hat = 1e-3
t_end = 0.1
";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str(MINIMAL, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.tol_steady, 1e-6);
        assert_eq!(cfg.div_tol, 1e-8);
        assert_eq!(cfg.c0_hat, 1.0);
        assert!(cfg.deterministic);
        assert!(cfg.defaults_applied.contains_key("tol_steady"));
        assert!(cfg.defaults_applied.contains_key("wall_bc"));
        assert_eq!(cfg.geometry, PathBuf::from("/tmp/g.vox"));
        // one implicit inert class
        assert_eq!(cfg.classes().len(), 1);
        assert_eq!(cfg.material_map().n_classes(), 1);
    }

    #[test]
    fn both_timesteps_conflict() {
        let text = format!("{MINIMAL}dt = 1e-3\n");
        assert!(matches!(
            parse_config_str(&text, Path::new(".")),
            Err(ConfigError::TimestepConflict)
        ));
    }

    #[test]
    fn missing_required_key_is_reported() {
        let text = MINIMAL.replace("rho = 1000\n", "");
        assert!(matches!(
            parse_config_str(&text, Path::new(".")),
            Err(ConfigError::Missing("rho"))
        ));
    }

    #[test]
    fn unknown_keys_fail_closed() {
        let text = format!("{MINIMAL}wibble = 3\n");
        assert!(matches!(
            parse_config_str(&text, Path::new(".")),
            Err(ConfigError::UnknownKey { .. })
        ));
        let text2 = format!("{MINIMAL}[material.2]\nisotherm = henry\nrate = 1\n");
        assert!(matches!(
            parse_config_str(&text2, Path::new(".")),
            Err(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn material_sections_define_classes() {
        let text = format!(
            "{MINIMAL}\
[material.3]
isotherm = langmuir
kappa_a = 1e-2
kappa_d = 1.0
m_inf = 1.4e10
[material.7]
isotherm = inert
slip_beta = 2e-7
"
        );
        let cfg = parse_config_str(&text, Path::new(".")).unwrap();
        assert_eq!(cfg.materials.len(), 2);
        let classes = cfg.classes();
        assert_eq!(classes.len(), 3); // two declared + implicit inert default
        let map = cfg.material_map();
        assert_eq!(map.class_of(3), 0);
        assert_eq!(map.class_of(7), 1);
        assert_eq!(map.class_of(250), 2); // unknown -> implicit default
        assert_eq!(map.default_class(), 2);
    }

    #[test]
    fn default_material_must_exist() {
        let text = format!("{MINIMAL}default_material = 9\n");
        assert!(matches!(
            parse_config_str(&text, Path::new(".")),
            Err(ConfigError::BadDefaultMaterial(9))
        ));
    }

    #[test]
    fn dimensional_timestep_converts() {
        let text = MINIMAL.replace("dt_hat = 1e-3", "dt = 2.0");
        let cfg = parse_config_str(&text, Path::new(".")).unwrap();
        // v_in = 1e-3 m/s, L = 1e-2 m -> t̂ = t·0.1
        let (dt_hat, t_end_hat, _) = cfg.times_hat(1e-3, 1e-2);
        assert!((dt_hat - 0.2).abs() < 1e-15);
        assert!((t_end_hat - 0.01).abs() < 1e-15);
    }
}
