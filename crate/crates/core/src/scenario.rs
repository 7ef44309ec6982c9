//! Scenario description and its TOML configuration format.
//!
//! ```toml
//! name = "example2_sigma1"
//! kind = "additive"          # advection | additive | multiplicative
//! alpha = 0
//! beta = 1
//! gamma = 0
//! delta = 1
//! mu = 1
//! sigma = "const(1)"         # numbers or coefficient syntax
//! phi = "wave"               # wave | wave(δ,μ,β) | logistic | const(c) | file:<csv>
//! t0 = 0
//! T = 1
//! n_steps = 1000
//! z_min = -60
//! z_max = 60
//! n_points = 481
//! seed = 2024
//!
//! [study]                    # optional: grids for refinement studies
//! z_min = -130
//! z_max = 130
//! h = 1.0
//! n_steps = 512
//! safety = 0.5
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::coeffs::CoeffFn;
use crate::det::fd::FrozenCoeffs;
use crate::det::{Profile, SampledProfile, SpatialGrid, WaveParams};
use crate::error::{Error, Result};
use crate::paths::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// `σ∂_zu dW`
    Advection,
    /// `σ dW`
    Additive,
    /// `σu dW`, linear drift
    Multiplicative,
}

impl NoiseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseKind::Advection => "advection",
            NoiseKind::Additive => "additive",
            NoiseKind::Multiplicative => "multiplicative",
        }
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "advection" => Ok(NoiseKind::Advection),
            "additive" => Ok(NoiseKind::Additive),
            "multiplicative" => Ok(NoiseKind::Multiplicative),
            other => Err(Error::field(
                "kind",
                format!("unknown kind `{other}` (expected advection, additive or multiplicative)"),
            )),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the multiplicative transform treats the spatial variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultConvention {
    /// `u = v·e^{−X_t}`, `X_t = ½∫σ² − ∫σ dW`, `v(t0) = φ`.
    #[default]
    SpaceUniform,
    /// `X_t(x) = x + X_t(0)`: `v(t0) = φ·eˣ`, `u = v·e^{−x−X_t(0)}`.
    Literal,
}

impl FromStr for MultConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "space-uniform" => Ok(MultConvention::SpaceUniform),
            "literal" => Ok(MultConvention::Literal),
            other => Err(Error::field(
                "convention",
                format!("unknown convention `{other}` (expected space-uniform or literal)"),
            )),
        }
    }
}

/// `du = (δu_zzz + βuu_z + μu_zz + αu_z + γu)dt + noise·dW` on `[t0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: NoiseKind,
    pub alpha: CoeffFn,
    pub beta: CoeffFn,
    pub gamma: CoeffFn,
    pub delta: CoeffFn,
    pub mu: CoeffFn,
    pub sigma: CoeffFn,
    pub phi: Profile,
    pub t0: f64,
    pub t_end: f64,
    pub convention: MultConvention,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t_end.is_finite()) || self.t0 >= self.t_end {
            return Err(Error::field("T", format!("need t0 < T, got t0 = {} and T = {}", self.t0, self.t_end)));
        }
        if self.kind == NoiseKind::Additive {
            let n = 1024;
            let min = (0..=n)
                .map(|i| self.beta.eval(self.t0 + (self.t_end - self.t0) * i as f64 / n as f64))
                .fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(Error::field(
                    "beta",
                    format!("additive noise requires beta(t) > 0 on [t0, T]; minimum sampled value is {min}"),
                ));
            }
        }
        Ok(())
    }

    /// Drift coefficients at time `t`; `β` is dropped for multiplicative noise.
    pub fn frozen(&self, t: f64) -> FrozenCoeffs {
        FrozenCoeffs {
            delta: self.delta.eval(t),
            mu: self.mu.eval(t),
            beta: if self.kind == NoiseKind::Multiplicative {
                0.0
            } else {
                self.beta.eval(t)
            },
            alpha: self.alpha.eval(t),
            gamma: self.gamma.eval(t),
        }
    }

    pub fn is_noise_free(&self) -> bool {
        self.sigma.is_zero()
    }

    /// Scenario with `σ ≡ 0`.
    pub fn without_noise(&self) -> Self {
        Self {
            sigma: CoeffFn::zero(),
            ..self.clone()
        }
    }
}

/// Grids for refinement studies: coarsest spacing and step count on a
/// domain wide enough for the profile tails to be flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub h: f64,
    pub n_steps: usize,
    pub safety: f64,
}

impl StudyGrid {
    /// Grids of refinement level `k`: `n_steps·2^k` steps and spacing `h/2^k`.
    pub fn level(&self, t0: f64, t_end: f64, k: u32) -> Result<(TimeGrid, SpatialGrid)> {
        let f = 1usize << k;
        let n_points = ((self.z_max - self.z_min) / self.h).round() as usize * f + 1;
        Ok((
            TimeGrid::new(t0, t_end, self.n_steps * f)?,
            SpatialGrid::new(self.z_min, self.z_max, n_points)?,
        ))
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub name: String,
    pub scenario: Scenario,
    pub tgrid: TimeGrid,
    pub sgrid: SpatialGrid,
    pub seed: Option<u64>,
    pub study: StudyGrid,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CoeffField {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    z_min: Option<f64>,
    z_max: Option<f64>,
    h: Option<f64>,
    n_steps: Option<usize>,
    safety: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    kind: String,
    alpha: Option<CoeffField>,
    beta: Option<CoeffField>,
    gamma: Option<CoeffField>,
    delta: Option<CoeffField>,
    mu: Option<CoeffField>,
    sigma: Option<CoeffField>,
    phi: String,
    t0: Option<f64>,
    #[serde(rename = "T")]
    t_end: f64,
    n_steps: usize,
    z_min: f64,
    z_max: f64,
    n_points: usize,
    seed: Option<u64>,
    convention: Option<String>,
    study: Option<RawStudy>,
}

fn coeff(name: &str, raw: Option<CoeffField>) -> Result<CoeffFn> {
    match raw {
        None => Ok(CoeffFn::zero()),
        Some(CoeffField::Number(c)) if c.is_finite() => Ok(CoeffFn::Const(c)),
        Some(CoeffField::Number(c)) => Err(Error::field(name, format!("{c} is not finite"))),
        Some(CoeffField::Text(s)) => s.parse::<CoeffFn>().map_err(|e| Error::field(name, e.to_string())),
    }
}

fn num_args(name: &str, inner: &str, n: usize) -> Result<Vec<f64>> {
    let vals = inner
        .split(',')
        .map(|a| a.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::field("phi", format!("bad argument to {name}: {e}")))?;
    if vals.len() != n || vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::field("phi", format!("{name} takes {n} finite arguments")));
    }
    Ok(vals)
}

/// Wave constants implied by the coefficients at `t0`.
fn auto_wave(kind: NoiseKind, s: &Scenario) -> Result<WaveParams> {
    let t = s.t0;
    let sig = s.sigma.eval(t);
    let (d, m, b) = match kind {
        NoiseKind::Advection => (s.delta.eval(t), s.mu.eval(t) - 0.5 * sig * sig, s.beta.eval(t)),
        NoiseKind::Additive => (s.delta.eval(t), s.mu.eval(t), s.beta.eval(t)),
        NoiseKind::Multiplicative => {
            let b = s.beta.eval(t);
            (s.delta.eval(t), s.mu.eval(t), if b == 0.0 { 1.0 } else { b })
        }
    };
    WaveParams::new(d, m, b).map_err(|e| Error::field("phi", e.to_string()))
}

fn parse_phi(text: &str, base: Option<&Path>) -> Result<Option<Profile>> {
    let t = text.trim();
    if t == "wave" {
        return Ok(None);
    }
    if t == "logistic" {
        return Ok(Some(Profile::LogisticBurgers));
    }
    if let Some(rest) = t.strip_prefix("file:") {
        let p = Path::new(rest.trim());
        let full = match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };
        let body = std::fs::read_to_string(&full)
            .map_err(|e| Error::field("phi", format!("cannot read {}: {e}", full.display())))?;
        let s = SampledProfile::from_csv(&body).map_err(|e| Error::field("phi", e.to_string()))?;
        return Ok(Some(Profile::Sampled(s)));
    }
    let call = |name: &str| -> Option<&str> { t.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')') };
    if let Some(inner) = call("wave") {
        let v = num_args("wave", inner, 3)?;
        let p = WaveParams::new(v[0], v[1], v[2]).map_err(|e| Error::field("phi", e.to_string()))?;
        return Ok(Some(Profile::TravelingWave(p)));
    }
    if let Some(inner) = call("const") {
        let v = num_args("const", inner, 1)?;
        return Ok(Some(Profile::Constant(v[0])));
    }
    Err(Error::field(
        "phi",
        format!("unknown profile `{t}` (expected wave, wave(d,mu,b), logistic, const(c) or file:<path>)"),
    ))
}

impl Config {
    /// Parses configuration text; `base` resolves relative `file:` profiles.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let kind: NoiseKind = raw.kind.parse()?;
        let t0 = raw.t0.unwrap_or(0.0);
        let convention = match raw.convention.as_deref() {
            None => MultConvention::default(),
            Some(c) => c.parse()?,
        };
        let mut scenario = Scenario {
            kind,
            alpha: coeff("alpha", raw.alpha)?,
            beta: coeff("beta", raw.beta)?,
            gamma: coeff("gamma", raw.gamma)?,
            delta: coeff("delta", raw.delta)?,
            mu: coeff("mu", raw.mu)?,
            sigma: coeff("sigma", raw.sigma)?,
            phi: Profile::Constant(0.0),
            t0,
            t_end: raw.t_end,
            convention,
        };
        scenario.validate()?;
        scenario.phi = match parse_phi(&raw.phi, base)? {
            Some(p) => p,
            None => Profile::TravelingWave(auto_wave(kind, &scenario)?),
        };
        let tgrid = TimeGrid::new(t0, raw.t_end, raw.n_steps).map_err(|e| Error::field("n_steps", e.to_string()))?;
        let sgrid =
            SpatialGrid::new(raw.z_min, raw.z_max, raw.n_points).map_err(|e| Error::field("n_points", e.to_string()))?;
        let rs = raw.study.unwrap_or(RawStudy {
            z_min: None,
            z_max: None,
            h: None,
            n_steps: None,
            safety: None,
        });
        let study = StudyGrid {
            z_min: rs.z_min.unwrap_or(sgrid.z_min()),
            z_max: rs.z_max.unwrap_or(sgrid.z_max()),
            h: rs.h.unwrap_or(sgrid.h()),
            n_steps: rs.n_steps.unwrap_or(512),
            safety: rs.safety.unwrap_or(0.5),
        };
        if !(study.z_min < study.z_max) || !(study.h > 0.0) || study.n_steps == 0 {
            return Err(Error::field("study", "need z_min < z_max, h > 0 and n_steps >= 1"));
        }
        if !(study.safety > 0.0 && study.safety <= 1.0) {
            return Err(Error::field("study.safety", format!("{} is outside (0, 1]", study.safety)));
        }
        Ok(Self {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            scenario,
            tgrid,
            sgrid,
            seed: raw.seed,
            study,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, path.parent())
    }
}

/// Configurations shipped with the repository.
pub mod presets {
    use super::Config;
    use crate::error::{Error, Result};

    macro_rules! preset {
        ($file:literal) => {
            include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../presets/", $file))
        };
    }

    pub const NAMES: &[&str] = &[
        "example1",
        "example2_sigma1",
        "example2_sigma_t2",
        "example3",
        "wave_deterministic",
        "additive_deterministic",
        "multiplicative_growth",
        "multiplicative_kdv",
    ];

    pub fn text(name: &str) -> Option<&'static str> {
        Some(match name {
            "example1" => preset!("example1.toml"),
            "example2_sigma1" => preset!("example2_sigma1.toml"),
            "example2_sigma_t2" => preset!("example2_sigma_t2.toml"),
            "example3" => preset!("example3.toml"),
            "wave_deterministic" => preset!("wave_deterministic.toml"),
            "additive_deterministic" => preset!("additive_deterministic.toml"),
            "multiplicative_growth" => preset!("multiplicative_growth.toml"),
            "multiplicative_kdv" => preset!("multiplicative_kdv.toml"),
            _ => return None,
        })
    }

    pub fn load(name: &str) -> Result<Config> {
        let text = text(name).ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
        Config::from_toml_str(text, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
kind = "additive"
beta = 1
delta = 1
mu = 1
sigma = "const(1)"
phi = "wave"
T = 1
n_steps = 100
z_min = -10
z_max = 10
n_points = 41
seed = 3
"#;

    #[test]
    fn parses_base_config() {
        let c = Config::from_toml_str(BASE, None).unwrap();
        assert_eq!(c.scenario.kind, NoiseKind::Additive);
        assert_eq!(c.scenario.alpha, CoeffFn::zero());
        assert_eq!(c.scenario.phi, Profile::TravelingWave(WaveParams::new(1.0, 1.0, 1.0).unwrap()));
        assert_eq!(c.tgrid.n_steps(), 100);
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.study.n_steps, 512);
    }

    #[test]
    fn negative_exponent_names_the_field() {
        let text = BASE.replace("mu = 1", "mu = \"pow(1,-2)\"");
        let err = Config::from_toml_str(&text, None).unwrap_err();
        match &err {
            Error::Field { field, msg } => {
                assert_eq!(field, "mu");
                assert!(msg.contains("negative exponent"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_fields() {
        let unknown = format!("{BASE}\nbogus = 1\n");
        assert!(matches!(Config::from_toml_str(&unknown, None), Err(Error::Config(m)) if m.contains("bogus")));
        let kind = BASE.replace("\"additive\"", "\"diffusive\"");
        assert!(matches!(Config::from_toml_str(&kind, None), Err(Error::Field { field, .. }) if field == "kind"));
        let beta = BASE.replace("beta = 1", "beta = -1");
        assert!(matches!(Config::from_toml_str(&beta, None), Err(Error::Field { field, .. }) if field == "beta"));
        let phi = BASE.replace("\"wave\"", "\"soliton\"");
        assert!(matches!(Config::from_toml_str(&phi, None), Err(Error::Field { field, .. }) if field == "phi"));
        let grid = BASE.replace("n_points = 41", "n_points = 4");
        assert!(matches!(Config::from_toml_str(&grid, None), Err(Error::Field { field, .. }) if field == "n_points"));
    }

    #[test]
    fn auto_wave_uses_shifted_diffusion_for_advection() {
        let text = BASE.replace("\"additive\"", "\"advection\"");
        let c = Config::from_toml_str(&text, None).unwrap();
        assert_eq!(c.scenario.phi, Profile::TravelingWave(WaveParams::new(1.0, 0.5, 1.0).unwrap()));
    }

    #[test]
    fn explicit_profiles() {
        let c = Config::from_toml_str(&BASE.replace("\"wave\"", "\"wave(2, 1, 3)\""), None).unwrap();
        assert_eq!(c.scenario.phi, Profile::TravelingWave(WaveParams::new(2.0, 1.0, 3.0).unwrap()));
        let c = Config::from_toml_str(&BASE.replace("\"wave\"", "\"const(0.5)\""), None).unwrap();
        assert_eq!(c.scenario.phi, Profile::Constant(0.5));
    }

    #[test]
    fn presets_load() {
        for name in presets::NAMES {
            let c = presets::load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&c.name, name);
            assert!(c.seed.is_some(), "{name}");
        }
    }
}
