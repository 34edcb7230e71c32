//! TOML experiment configs.

use std::path::{Path, PathBuf};

use geoconsensus::dynamics::SimulationConfig;
use geoconsensus::manifold::{ManifoldDescriptor, ManifoldKind, SamplingScheme};
use geoconsensus::potential::{radii, MonotoneTable, PotentialSpec};
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSection,
    pub potential: PotentialSection,
    pub particles: ParticlesSection,
    pub sampling: SamplingSection,
    pub time: TimeSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSection {
    /// `"euclidean:n"`, `"sphere"`, `"hyperbolic"` or `"so3"`.
    pub kind: ManifoldKind,
    /// Ambient coordinates of the ball center; the origin when absent.
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    PowerLaw,
    QuadraticPlusQuartic,
    TruncatedPowerLaw,
    Table,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialName,
    pub beta: Option<f64>,
    pub zeta: Option<f64>,
    pub weights: Option<[f64; 2]>,
    /// `[s, g'(s)]` samples of a tabulated potential, `s` starting at 0.
    pub table: Option<Vec<[f64; 2]>>,
    /// `g(0)` of a tabulated potential.
    pub g0: Option<f64>,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Masses {
    Named(MassesName),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassesName {
    Uniform,
}

impl Default for Masses {
    fn default() -> Self {
        Masses::Named(MassesName::Uniform)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    pub n: usize,
    #[serde(default)]
    pub masses: Masses,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    AxisAngle,
    UniformDirection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub scheme: SchemeName,
    pub radius: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Radius `r` of the invariant ball; the sampling radius when absent.
    pub ball_radius: Option<f64>,
}

fn default_stride() -> usize {
    geoconsensus::dynamics::DEFAULT_SNAPSHOT_STRIDE
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_csv")]
    pub csv: PathBuf,
    #[serde(default = "default_jsonl")]
    pub jsonl: PathBuf,
    #[serde(default = "default_report")]
    pub report: PathBuf,
    pub svg: Option<PathBuf>,
}

fn default_csv() -> PathBuf {
    "diagnostics.csv".into()
}

fn default_jsonl() -> PathBuf {
    "trajectory.jsonl".into()
}

fn default_report() -> PathBuf {
    "report.json".into()
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { csv: default_csv(), jsonl: default_jsonl(), report: default_report(), svg: None }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Checks everything that does not need the particles themselves.
    pub fn validate(&self) -> Result<(), Failure> {
        let usage = |msg: String| Err(Failure::Usage(msg));
        let t = &self.time;
        if !(t.dt.is_finite() && t.dt > 0.0) {
            return usage(format!("time.dt = {} must be positive", t.dt));
        }
        if !(t.t_end.is_finite() && t.t_end > 0.0) {
            return usage(format!("time.t_end = {} must be positive", t.t_end));
        }
        if t.snapshot_stride == 0 {
            return usage("time.snapshot_stride must be at least 1".into());
        }
        if self.particles.n == 0 {
            return usage("particles.n must be at least 1".into());
        }
        if let Masses::Explicit(m) = &self.particles.masses {
            if m.len() != self.particles.n {
                return usage(format!("particles.masses has {} entries for n = {}", m.len(), self.particles.n));
            }
        }
        let r_w = radii(&self.descriptor()).r_w;
        let r = self.ball_radius();
        if !(r > 0.0 && r < r_w) {
            return usage(format!(
                "ball radius {r} must lie in (0, r_w) with r_w = {r_w} for {}: beyond r_w the ball is not \
                 uniquely geodesically convex",
                self.manifold.kind
            ));
        }
        let s = self.sampling.radius;
        if !(s > 0.0 && s <= r) {
            return usage(format!("sampling.radius = {s} must lie in (0, ball radius {r}]"));
        }
        self.potential()?;
        Ok(())
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor::for_kind(self.manifold.kind)
    }

    pub fn ball_radius(&self) -> f64 {
        self.time.ball_radius.unwrap_or(self.sampling.radius)
    }

    pub fn scheme(&self) -> SamplingScheme {
        let radius = self.sampling.radius;
        match self.sampling.scheme {
            SchemeName::AxisAngle => SamplingScheme::AxisAngle { radius },
            SchemeName::UniformDirection => SamplingScheme::UniformDirection { radius },
        }
    }

    pub fn potential(&self) -> Result<PotentialSpec, Failure> {
        self.potential.build()
    }

    pub fn simulation<P>(&self, center: P) -> SimulationConfig<P> {
        let t = &self.time;
        SimulationConfig::new(t.dt, t.t_end, t.snapshot_stride, center, self.ball_radius())
            .with_seed(self.sampling.seed)
    }
}

impl PotentialSection {
    pub fn build(&self) -> Result<PotentialSpec, Failure> {
        let p = &self;
        let require = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Failure::Usage(format!("potential.{key} is required for this kind")))
        };
        let unused: Vec<&str> = [
            ("beta", p.beta.is_some() && !matches!(p.kind, PotentialName::PowerLaw | PotentialName::TruncatedPowerLaw)),
            ("zeta", p.zeta.is_some() && p.kind != PotentialName::TruncatedPowerLaw),
            ("weights", p.weights.is_some() && p.kind != PotentialName::QuadraticPlusQuartic),
            ("table", p.table.is_some() && p.kind != PotentialName::Table),
            ("g0", p.g0.is_some() && p.kind != PotentialName::Table),
        ]
        .into_iter()
        .filter_map(|(k, bad)| bad.then_some(k))
        .collect();
        if !unused.is_empty() {
            return Err(Failure::Usage(format!("potential keys {unused:?} do not apply to {:?}", p.kind)));
        }
        let spec = match p.kind {
            PotentialName::PowerLaw => PotentialSpec::power_law(require(p.beta, "beta")?)?,
            PotentialName::TruncatedPowerLaw => {
                PotentialSpec::truncated_power_law(require(p.beta, "beta")?, require(p.zeta, "zeta")?)?
            }
            PotentialName::QuadraticPlusQuartic => PotentialSpec::quadratic_plus_quartic(
                p.weights.ok_or_else(|| Failure::Usage("potential.weights is required for this kind".into()))?,
            )?,
            PotentialName::Table => {
                let samples: Vec<(f64, f64)> = p
                    .table
                    .as_ref()
                    .ok_or_else(|| Failure::Usage("potential.table is required for this kind".into()))?
                    .iter()
                    .map(|s| (s[0], s[1]))
                    .collect();
                PotentialSpec::custom_table(MonotoneTable::new(&samples, p.g0.unwrap_or(0.0))?)
            }
        };
        match p.scale {
            Some(s) => Ok(spec.scaled(s)?),
            None => Ok(spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SO3: &str = r#"
[manifold]
kind = "so3"

[potential]
kind = "power_law"
beta = 2.0

[particles]
n = 10

[sampling]
scheme = "axis_angle"
radius = 0.7
seed = 3

[time]
dt = 0.01
t_end = 1.0
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, Failure> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Failure::Usage(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(SO3).unwrap();
        assert_eq!(cfg.time.snapshot_stride, 10);
        assert_eq!(cfg.ball_radius(), 0.7);
        assert_eq!(cfg.outputs.csv, PathBuf::from("diagnostics.csv"));
        assert!(matches!(cfg.particles.masses, Masses::Named(MassesName::Uniform)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = SO3.replace("beta = 2.0", "beta = 2.0\nbetta = 3.0");
        assert!(parse(&typo).is_err());
    }

    #[test]
    fn keys_of_other_kinds_are_rejected() {
        let stray = SO3.replace("beta = 2.0", "beta = 2.0\nzeta = 0.1");
        assert!(matches!(parse(&stray), Err(Failure::Usage(m)) if m.contains("zeta")));
    }

    #[test]
    fn ball_radius_beyond_r_w_names_the_bound() {
        let wide = SO3.replace("t_end = 1.0", "t_end = 1.0\nball_radius = 1.6");
        match parse(&wide) {
            Err(Failure::Usage(m)) => assert!(m.contains("r_w")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_masses_must_match_n() {
        let masses = SO3.replace("n = 10", "n = 2\nmasses = [0.25, 0.75]");
        assert!(parse(&masses).is_ok());
        let short = SO3.replace("n = 10", "n = 3\nmasses = [0.25, 0.75]");
        assert!(parse(&short).is_err());
    }

    #[test]
    fn nonpositive_dt_is_rejected() {
        assert!(parse(&SO3.replace("dt = 0.01", "dt = 0.0")).is_err());
    }
}
