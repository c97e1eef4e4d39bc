//! Experiment configuration.
//!
//! The grammar is TOML restricted to `[section]` headers, `key = value`
//! lines and `#` comments. Every key has a default that depends on the
//! experiment, except `experiment` itself. Parsing walks the whole table
//! and reports every violation at once.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::fit::log_space;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Rate1d,
    Rate2d,
    Green,
    Symbols,
    Bounds,
    Nbound,
    Compose,
    Weyl,
    Birman,
    Threshold,
    ReportAll,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        Self::Rate1d,
        Self::Rate2d,
        Self::Green,
        Self::Symbols,
        Self::Bounds,
        Self::Nbound,
        Self::Compose,
        Self::Weyl,
        Self::Birman,
        Self::Threshold,
        Self::ReportAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rate1d => "rate1d",
            Self::Rate2d => "rate2d",
            Self::Green => "green",
            Self::Symbols => "symbols",
            Self::Bounds => "bounds",
            Self::Nbound => "nbound",
            Self::Compose => "compose",
            Self::Weyl => "weyl",
            Self::Birman => "birman",
            Self::Threshold => "threshold",
            Self::ReportAll => "report-all",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// 1D: Ω = (0, length), Ω₁ = (inclusion_left, inclusion_right).
    pub length: f64,
    pub inclusion_left: f64,
    pub inclusion_right: f64,
    /// 2D: disk of this radius inside a concentric disk of `outer_radius`.
    pub radius: f64,
    pub outer_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// 1D mesh width.
    pub h: f64,
    /// Polar grid: radial intervals across the exterior annulus.
    pub rings: usize,
    pub angles: usize,
    /// Torus points for the Fourier experiments (power of two).
    pub fft_points: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda_sweep: Vec<f64>,
    /// Fixed λ for single-λ experiments.
    pub lambda: f64,
    /// Upper end of the threshold bisection.
    pub lambda_max: f64,
    /// Radii for the circle Weyl oracle.
    pub radii: Vec<f64>,
}

/// μ values, given as fractions of ‖E_λ‖ (of ‖E₁‖ for `threshold`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuGridConfig {
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
    /// Decade used for exponent fits.
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub threshold_fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub solver: f64,
    pub green_residual: f64,
    pub green_ratio_lo: f64,
    pub green_ratio_hi: f64,
    pub nonlocal: f64,
    /// Allowed count excess in the Birman and circle Weyl checks.
    pub count: usize,
    pub root: f64,
    pub homogeneity: f64,
    /// Relative tolerance on ‖E_λ‖ for the spectrum-confinement check.
    pub confinement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig {
    /// `default` or `zero`.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub mu_grid: MuGridConfig,
    pub loads: LoadConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Fully defaulted configuration for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        use ExperimentKind::*;
        let (rings, angles) = match kind {
            Rate2d => (64, 128),
            _ => (16, 128),
        };
        let h = match kind {
            Green => 1.0 / 2048.0,
            _ => 1.0 / 4096.0,
        };
        let lambda_sweep = match kind {
            Rate2d => vec![1e1, 1e2, 1e3, 1e4],
            Bounds => log_space(1.0, 1e6, 7),
            Nbound => log_space(1e2, 1e5, 7),
            _ => vec![1e2, 1e3, 1e4, 1e5, 1e6],
        };
        let (fft_points, trials) = match kind {
            Nbound => (1 << 16, 64),
            Compose => (128, 16),
            _ => (1 << 14, 64),
        };
        Self {
            experiment: kind,
            seed: 7,
            geometry: GeometryConfig {
                length: 1.0,
                inclusion_left: 0.25,
                inclusion_right: 0.5,
                radius: 1.0,
                outer_radius: 1.5,
            },
            grid: GridConfig {
                h,
                rings,
                angles,
                fft_points,
                trials,
            },
            sweep: SweepConfig {
                lambda_sweep,
                lambda: 1e3,
                lambda_max: 1e12,
                radii: vec![0.5, 1.0, 2.0, 4.0],
            },
            mu_grid: MuGridConfig {
                points: 20,
                lo: 0.01,
                hi: 1.0,
                fit_lo: 0.01,
                fit_hi: 0.1,
                threshold_fractions: vec![1e-2, 1e-3, 1e-4],
            },
            loads: LoadConfig { kind: "default".into() },
            tolerances: Tolerances {
                solver: 1e-10,
                green_residual: 1e-6,
                green_ratio_lo: 3.5,
                green_ratio_hi: 4.5,
                nonlocal: 1e-4,
                count: 2,
                root: 1e-10,
                homogeneity: 1e-12,
                confinement: 1e-6,
            },
            output: OutputConfig { dir: "out".into() },
        }
    }

    /// Serializes to the same grammar `parse_config` reads.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Checks every numeric field against the preconditions of the
    /// operations it feeds. Returns all violations.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        let g = &self.geometry;
        need(g.length > 0.0 && g.length.is_finite(), format!("geometry.length = {} must be positive", g.length));
        need(
            0.0 < g.inclusion_left && g.inclusion_left < g.inclusion_right && g.inclusion_right < g.length,
            format!(
                "geometry.inclusion_left/inclusion_right = {}/{} must satisfy 0 < left < right < length",
                g.inclusion_left, g.inclusion_right
            ),
        );
        need(g.radius > 0.0, format!("geometry.radius = {} must be positive", g.radius));
        need(
            g.outer_radius > g.radius,
            format!("geometry.outer_radius = {} must exceed geometry.radius", g.outer_radius),
        );

        let gr = &self.grid;
        need(gr.h > 0.0 && gr.h < g.length, format!("grid.h = {} must lie in (0, length)", gr.h));
        if gr.h > 0.0 {
            for (key, x) in [
                ("geometry.length", g.length),
                ("geometry.inclusion_left", g.inclusion_left),
                ("geometry.inclusion_right", g.inclusion_right),
            ] {
                let k = x / gr.h;
                need((k - k.round()).abs() < 1e-9, format!("{key} = {x} is not a multiple of grid.h = {}", gr.h));
            }
            let cells = |a: f64, b: f64| ((b - a) / gr.h).round();
            need(
                cells(0.0, g.inclusion_left) >= 2.0
                    && cells(g.inclusion_left, g.inclusion_right) >= 2.0
                    && cells(g.inclusion_right, g.length) >= 2.0,
                format!("grid.h = {} leaves fewer than two cells in some 1D piece", gr.h),
            );
        }
        need(gr.rings >= 2, format!("grid.rings = {} must be at least 2", gr.rings));
        need(gr.angles >= 8, format!("grid.angles = {} must be at least 8", gr.angles));
        if gr.rings >= 1 && g.outer_radius > g.radius && g.radius > 0.0 {
            let dr = (g.outer_radius - g.radius) / gr.rings as f64;
            let k = g.radius / dr;
            need(
                (k - k.round()).abs() < 1e-9 && k.round() >= 3.0,
                format!("geometry.radius = {} must be a multiple (>= 3) of the ring width {dr}", g.radius),
            );
        }
        need(
            gr.fft_points.is_power_of_two() && gr.fft_points >= 8,
            format!("grid.fft_points = {} must be a power of two >= 8", gr.fft_points),
        );
        need(gr.trials >= 1, "grid.trials must be at least 1".into());

        let s = &self.sweep;
        for (i, &l) in s.lambda_sweep.iter().enumerate() {
            need(
                l.is_finite() && l >= 1.0,
                format!("sweep.lambda_sweep[{i}] = {l} must be finite and >= 1"),
            );
        }
        need(
            s.lambda_sweep.len() >= 3,
            format!("sweep.lambda_sweep needs at least 3 entries, got {}", s.lambda_sweep.len()),
        );
        need(
            s.lambda_sweep.windows(2).all(|w| w[1] > w[0]),
            "sweep.lambda_sweep must be strictly increasing".into(),
        );
        need(s.lambda.is_finite() && s.lambda >= 1.0, format!("sweep.lambda = {} must be >= 1", s.lambda));
        need(
            s.lambda_max.is_finite() && s.lambda_max > 1.0,
            format!("sweep.lambda_max = {} must exceed 1", s.lambda_max),
        );
        for (i, &r) in s.radii.iter().enumerate() {
            need(r > 0.0 && r.is_finite(), format!("sweep.radii[{i}] = {r} must be positive"));
        }

        let m = &self.mu_grid;
        need(m.points >= 2, format!("mu_grid.points = {} must be at least 2", m.points));
        need(
            0.0 < m.lo && m.lo < m.hi && m.hi <= 1.0,
            format!("mu_grid.lo/hi = {}/{} must satisfy 0 < lo < hi <= 1", m.lo, m.hi),
        );
        need(
            0.0 < m.fit_lo && m.fit_hi >= 10.0 * m.fit_lo * (1.0 - 1e-12) && m.fit_hi <= 1.0,
            format!("mu_grid.fit_lo/fit_hi = {}/{} must span a decade inside (0, 1]", m.fit_lo, m.fit_hi),
        );
        for (i, &f) in m.threshold_fractions.iter().enumerate() {
            need(
                f > 0.0 && f < 1.0,
                format!("mu_grid.threshold_fractions[{i}] = {f} must lie in (0, 1)"),
            );
        }
        need(
            m.threshold_fractions.len() >= 3,
            "mu_grid.threshold_fractions needs at least 3 entries".into(),
        );
        need(
            self.loads.kind == "default" || self.loads.kind == "zero",
            format!("loads.kind = {:?} must be \"default\" or \"zero\"", self.loads.kind),
        );

        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.solver", t.solver),
            ("tolerances.green_residual", t.green_residual),
            ("tolerances.nonlocal", t.nonlocal),
            ("tolerances.root", t.root),
            ("tolerances.homogeneity", t.homogeneity),
            ("tolerances.confinement", t.confinement),
        ] {
            need(v > 0.0 && v < 1.0, format!("{key} = {v} must lie in (0, 1)"));
        }
        need(
            0.0 < t.green_ratio_lo && t.green_ratio_lo < t.green_ratio_hi,
            "tolerances.green_ratio_lo must be positive and below green_ratio_hi".into(),
        );
        need(!self.output.dir.is_empty(), "output.dir must not be empty".into());
        errs
    }
}

/// Every violation found in one configuration text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Self {
        Error::Config(e.to_string())
    }
}

const TOP_KEYS: [&str; 2] = ["experiment", "seed"];
const SECTIONS: [(&str, &[&str]); 7] = [
    ("geometry", &["length", "inclusion_left", "inclusion_right", "radius", "outer_radius"]),
    ("grid", &["h", "rings", "angles", "fft_points", "trials"]),
    ("sweep", &["lambda_sweep", "lambda", "lambda_max", "radii"]),
    ("mu_grid", &["points", "lo", "hi", "fit_lo", "fit_hi", "threshold_fractions"]),
    ("loads", &["kind"]),
    (
        "tolerances",
        &[
            "solver",
            "green_residual",
            "green_ratio_lo",
            "green_ratio_hi",
            "nonlocal",
            "count",
            "root",
            "homogeneity",
            "confinement",
        ],
    ),
    ("output", &["dir"]),
];

fn suggest(key: &str, candidates: &[&str]) -> String {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(key, c), *c))
        .filter(|(d, c)| *d <= 3.max(c.len() / 3))
        .min()
        .map(|(_, c)| format!(" (did you mean `{c}`?)"))
        .unwrap_or_default()
}

struct Reader<'a> {
    errors: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn f64(&mut self, t: &Table, path: &str, key: &str, slot: &mut f64) {
        match t.get(key) {
            None => {}
            Some(Value::Float(v)) => *slot = *v,
            Some(Value::Integer(v)) => *slot = *v as f64,
            Some(v) => self.errors.push(format!("{path}{key}: expected a number, got {}", v.type_str())),
        }
    }

    fn usize(&mut self, t: &Table, path: &str, key: &str, slot: &mut usize) {
        match t.get(key) {
            None => {}
            Some(Value::Integer(v)) if *v >= 0 => *slot = *v as usize,
            Some(v) => self.errors.push(format!("{path}{key}: expected a non-negative integer, got {v}")),
        }
    }

    fn f64_list(&mut self, t: &Table, path: &str, key: &str, slot: &mut Vec<f64>) {
        match t.get(key) {
            None => {}
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(x) => out.push(*x as f64),
                        _ => {
                            self.errors.push(format!("{path}{key}[{i}]: expected a number, got {}", v.type_str()));
                        }
                    }
                }
                *slot = out;
            }
            Some(v) => self.errors.push(format!("{path}{key}: expected an array, got {}", v.type_str())),
        }
    }

    fn string(&mut self, t: &Table, path: &str, key: &str, slot: &mut String) {
        match t.get(key) {
            None => {}
            Some(Value::String(s)) => *slot = s.clone(),
            Some(v) => self.errors.push(format!("{path}{key}: expected a string, got {}", v.type_str())),
        }
    }
}

/// Parses and validates a configuration. When `cli_experiment` is given it
/// fills a missing `experiment` key and must agree with a present one.
pub fn parse_config_for(
    text: &str,
    cli_experiment: Option<ExperimentKind>,
) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![e.to_string()]))?;
    let mut errors = Vec::new();

    let section_names: Vec<&str> = SECTIONS.iter().map(|s| s.0).collect();
    let all_top: Vec<&str> = TOP_KEYS.iter().chain(&section_names).copied().collect();
    for (k, v) in &table {
        if let Some((_, keys)) = SECTIONS.iter().find(|s| s.0 == k) {
            match v {
                Value::Table(sub) => {
                    for sk in sub.keys() {
                        if !keys.contains(&sk.as_str()) {
                            errors.push(format!("unknown key `{k}.{sk}`{}", suggest(sk, keys)));
                        }
                    }
                }
                _ => errors.push(format!("`{k}` must be a [section]")),
            }
        } else if !TOP_KEYS.contains(&k.as_str()) {
            errors.push(format!("unknown key `{k}`{}", suggest(k, &all_top)));
        }
    }

    let kind = match (table.get("experiment"), cli_experiment) {
        (None, Some(k)) => Some(k),
        (None, None) => {
            errors.push("missing required key `experiment`".into());
            None
        }
        (Some(Value::String(s)), cli) => match ExperimentKind::from_name(s) {
            Some(k) if cli.is_none_or(|c| c == k) => Some(k),
            Some(k) => {
                errors.push(format!(
                    "experiment = \"{k}\" in the config disagrees with `{}` on the command line",
                    cli.expect("checked")
                ));
                None
            }
            None => {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                errors.push(format!("unknown experiment \"{s}\"{}", suggest(s, &names)));
                None
            }
        },
        (Some(v), _) => {
            errors.push(format!("experiment: expected a string, got {}", v.type_str()));
            None
        }
    };

    let mut cfg = ExperimentConfig::defaults(kind.unwrap_or(ExperimentKind::Rate1d));
    let empty = Table::new();
    let sec = |name: &str| match table.get(name) {
        Some(Value::Table(t)) => t,
        _ => &empty,
    };
    let mut r = Reader { errors: &mut errors };
    match table.get("seed") {
        None => {}
        Some(Value::Integer(v)) if *v >= 0 => cfg.seed = *v as u64,
        Some(v) => r.errors.push(format!("seed: expected a non-negative integer, got {v}")),
    }
    let (t, p) = (sec("geometry"), "geometry.");
    r.f64(t, p, "length", &mut cfg.geometry.length);
    r.f64(t, p, "inclusion_left", &mut cfg.geometry.inclusion_left);
    r.f64(t, p, "inclusion_right", &mut cfg.geometry.inclusion_right);
    r.f64(t, p, "radius", &mut cfg.geometry.radius);
    r.f64(t, p, "outer_radius", &mut cfg.geometry.outer_radius);
    let (t, p) = (sec("grid"), "grid.");
    r.f64(t, p, "h", &mut cfg.grid.h);
    r.usize(t, p, "rings", &mut cfg.grid.rings);
    r.usize(t, p, "angles", &mut cfg.grid.angles);
    r.usize(t, p, "fft_points", &mut cfg.grid.fft_points);
    r.usize(t, p, "trials", &mut cfg.grid.trials);
    let (t, p) = (sec("sweep"), "sweep.");
    r.f64_list(t, p, "lambda_sweep", &mut cfg.sweep.lambda_sweep);
    r.f64(t, p, "lambda", &mut cfg.sweep.lambda);
    r.f64(t, p, "lambda_max", &mut cfg.sweep.lambda_max);
    r.f64_list(t, p, "radii", &mut cfg.sweep.radii);
    let (t, p) = (sec("mu_grid"), "mu_grid.");
    r.usize(t, p, "points", &mut cfg.mu_grid.points);
    r.f64(t, p, "lo", &mut cfg.mu_grid.lo);
    r.f64(t, p, "hi", &mut cfg.mu_grid.hi);
    r.f64(t, p, "fit_lo", &mut cfg.mu_grid.fit_lo);
    r.f64(t, p, "fit_hi", &mut cfg.mu_grid.fit_hi);
    r.f64_list(t, p, "threshold_fractions", &mut cfg.mu_grid.threshold_fractions);
    r.string(sec("loads"), "loads.", "kind", &mut cfg.loads.kind);
    let (t, p) = (sec("tolerances"), "tolerances.");
    r.f64(t, p, "solver", &mut cfg.tolerances.solver);
    r.f64(t, p, "green_residual", &mut cfg.tolerances.green_residual);
    r.f64(t, p, "green_ratio_lo", &mut cfg.tolerances.green_ratio_lo);
    r.f64(t, p, "green_ratio_hi", &mut cfg.tolerances.green_ratio_hi);
    r.f64(t, p, "nonlocal", &mut cfg.tolerances.nonlocal);
    r.usize(t, p, "count", &mut cfg.tolerances.count);
    r.f64(t, p, "root", &mut cfg.tolerances.root);
    r.f64(t, p, "homogeneity", &mut cfg.tolerances.homogeneity);
    r.f64(t, p, "confinement", &mut cfg.tolerances.confinement);
    r.string(sec("output"), "output.", "dir", &mut cfg.output.dir);

    errors.extend(cfg.validate());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    parse_config_for(text, None)
}

/// `parse_config` with the error folded into the crate error type.
pub fn load_config(text: &str, cli_experiment: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    Ok(parse_config_for(text, cli_experiment)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_rate1d_fills_defaults() {
        let c = parse_config("experiment = \"rate1d\"\n").unwrap();
        assert_eq!(c, ExperimentConfig::defaults(ExperimentKind::Rate1d));
        assert_eq!(c.grid.h, 1.0 / 4096.0);
        assert_eq!(c.sweep.lambda_sweep, vec![1e2, 1e3, 1e4, 1e5, 1e6]);
        assert_eq!(c.tolerances.solver, 1e-10);
    }

    #[test]
    fn negative_lambda_names_the_key() {
        let e = parse_config("experiment = \"rate1d\"\n[sweep]\nlambda_sweep = [100.0, -1.0, 1e4]\n").unwrap_err();
        assert!(e.0.iter().any(|m| m.starts_with("sweep.lambda_sweep[1] = -1")), "{e}");
    }

    #[test]
    fn all_violations_are_reported() {
        let text = "# comment\n[grid]\nhh = 0.1\nangles = 4\n[sweep]\nlambda = -3\n[tolerances]\nsolver = \"tight\"\n";
        let e = parse_config(text).unwrap_err();
        let joined = e.to_string();
        assert!(joined.contains("missing required key `experiment`"), "{joined}");
        assert!(joined.contains("unknown key `grid.hh` (did you mean `h`?)"), "{joined}");
        assert!(joined.contains("grid.angles"), "{joined}");
        assert!(joined.contains("sweep.lambda"), "{joined}");
        assert!(joined.contains("tolerances.solver: expected a number"), "{joined}");
        assert!(e.0.len() >= 5);
    }

    #[test]
    fn misspelled_section_gets_a_suggestion() {
        let e = parse_config("experiment = \"green\"\n[tolerance]\nsolver = 1e-9\n").unwrap_err();
        assert!(e.0[0].contains("did you mean `tolerances`"), "{e}");
        let e = parse_config("experiment = \"rate_1d\"\n").unwrap_err();
        assert!(e.0[0].contains("did you mean `rate1d`"), "{e}");
    }

    #[test]
    fn cli_experiment_must_agree() {
        assert_eq!(
            parse_config_for("", Some(ExperimentKind::Weyl)).unwrap().experiment,
            ExperimentKind::Weyl
        );
        assert!(parse_config_for("experiment = \"green\"", Some(ExperimentKind::Weyl)).is_err());
    }

    #[test]
    fn non_power_of_two_fft_is_rejected() {
        let e = parse_config("experiment = \"nbound\"\n[grid]\nfft_points = 1000\n").unwrap_err();
        assert!(e.0[0].contains("grid.fft_points"));
    }

    #[test]
    fn misaligned_interface_is_rejected() {
        let e = parse_config("experiment = \"green\"\n[geometry]\ninclusion_left = 0.3\n").unwrap_err();
        assert!(e.to_string().contains("geometry.inclusion_left"), "{e}");
    }

    #[test]
    fn hash_depends_on_content() {
        let a = ExperimentConfig::defaults(ExperimentKind::Green);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
