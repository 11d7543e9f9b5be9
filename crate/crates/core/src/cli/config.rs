//! Run configuration: a flat JSON document plus the figure presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{nominal_period, PERIOD_SAMPLES};
use crate::error::{Error, Result};
use crate::model::{default_half_width, Sector, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    EvolveSingle,
    EvolveTwo,
    EvolveDimerEffective,
    Fig1,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig4,
    Fig5a,
    Fig5b,
    Fig6,
}

impl Experiment {
    pub const FIGURES: [Experiment; 10] = [
        Experiment::Fig1,
        Experiment::Fig2a,
        Experiment::Fig2b,
        Experiment::Fig3a,
        Experiment::Fig3b,
        Experiment::Fig3c,
        Experiment::Fig4,
        Experiment::Fig5a,
        Experiment::Fig5b,
        Experiment::Fig6,
    ];

    pub fn is_figure(self) -> bool {
        Self::FIGURES.contains(&self)
    }

    pub fn is_spectrum(self) -> bool {
        matches!(self, Experiment::Spectrum | Experiment::Fig1)
    }

    /// Sector whose Hamiltonian drives the run.
    pub fn sector(self, requested: Option<Sector>) -> Sector {
        use Experiment::*;
        match self {
            Spectrum => requested.unwrap_or(Sector::Single),
            Fig1 | EvolveSingle | Fig2a | Fig2b => Sector::Single,
            EvolveDimerEffective => Sector::Dimer,
            EvolveTwo | Fig3a | Fig3b | Fig3c | Fig4 | Fig5a | Fig5b | Fig6 => Sector::TwoBoson,
        }
    }

    /// Figure id as used on the command line (`2a`, `6`, ...).
    pub fn figure_id(self) -> Option<&'static str> {
        use Experiment::*;
        Some(match self {
            Fig1 => "1",
            Fig2a => "2a",
            Fig2b => "2b",
            Fig3a => "3a",
            Fig3b => "3b",
            Fig3c => "3c",
            Fig4 => "4",
            Fig5a => "5a",
            Fig5b => "5b",
            Fig6 => "6",
            _ => return None,
        })
    }

    pub fn from_figure_id(id: &str) -> Result<Experiment> {
        let id = id.trim_start_matches("fig");
        Self::FIGURES
            .into_iter()
            .find(|e| e.figure_id() == Some(id))
            .ok_or_else(|| {
                Error::config(
                    "fig",
                    format!("unknown figure `{id}`; expected one of 1, 2a, 2b, 3a, 3b, 3c, 4, 5a, 5b, 6"),
                )
            })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("unit variant");
        f.write_str(v.as_str().expect("string tag"))
    }
}

/// `M`: a fixed half-width or `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HalfWidth {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for HalfWidth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            HalfWidth::Auto => s.serialize_str("auto"),
            HalfWidth::Fixed(m) => s.serialize_u64(*m as u64),
        }
    }
}

impl<'de> Deserialize<'de> for HalfWidth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(usize),
            Text(String),
        }
        match Raw::deserialize(d).map_err(|_| serde::de::Error::custom("M must be a positive integer or \"auto\""))? {
            Raw::Number(m) => Ok(HalfWidth::Fixed(m)),
            Raw::Text(t) if t == "auto" => Ok(HalfWidth::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "M must be a positive integer or \"auto\", got \"{t}\""
            ))),
        }
    }
}

/// How the initial state is prepared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// Ground-state Gaussian of one particle translated by `shift` sites.
    ShiftedGround { shift: i64 },
    /// Lowest `K` eigenstates combined to peak at `j_prime`.
    LocalizedPacket {
        j_prime: i64,
        #[serde(rename = "K")]
        levels: usize,
    },
    /// Two particles in shifted ground-state Gaussians.
    Product { shifts: [i64; 2] },
    /// Dimer Gaussian without staggering, lifted to `|2_j>` unless the run
    /// uses the effective dimer model.
    DimerAttractive {
        #[serde(default)]
        shift: i64,
    },
    /// Dimer Gaussian with the `(-1)^j` phase.
    DimerRepulsive {
        #[serde(default)]
        shift: i64,
    },
}

impl InitialState {
    fn kind(&self) -> &'static str {
        match self {
            InitialState::ShiftedGround { .. } => "shifted-ground",
            InitialState::LocalizedPacket { .. } => "localized-packet",
            InitialState::Product { .. } => "product",
            InitialState::DimerAttractive { .. } => "dimer-attractive",
            InitialState::DimerRepulsive { .. } => "dimer-repulsive",
        }
    }

    fn compatible_with(&self, sector: Sector) -> bool {
        match self {
            InitialState::ShiftedGround { .. } | InitialState::LocalizedPacket { .. } => sector == Sector::Single,
            InitialState::Product { .. } => sector == Sector::TwoBoson,
            InitialState::DimerAttractive { .. } | InitialState::DimerRepulsive { .. } => {
                matches!(sector, Sector::TwoBoson | Sector::Dimer)
            }
        }
    }

    /// Whether the state oscillates as a bound dimer rather than as particles.
    pub fn is_dimer(&self) -> bool {
        matches!(self, InitialState::DimerAttractive { .. } | InitialState::DimerRepulsive { .. })
    }
}

/// Configuration document as written by users. Missing fields fall back to
/// the figure preset, if any.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub hopping: Option<f64>,
    #[serde(rename = "Omega", default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<f64>,
    #[serde(rename = "J_over_Omega", default, skip_serializing_if = "Option::is_none")]
    pub j_over_omega: Option<f64>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<HalfWidth>,
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<Sector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl FromStr for RunConfig {
    type Err = Error;

    /// Accepts a flat config, or a metadata document whose `config` member
    /// holds one.
    fn from_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(inner) = value.get("config").filter(|_| value.get("experiment").is_none()) {
            return Ok(serde_json::from_value(inner.clone())?);
        }
        Ok(serde_json::from_str(text)?)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    pub fn figure(experiment: Experiment) -> Self {
        RunConfig {
            experiment: Some(experiment),
            ..Default::default()
        }
    }

    /// Fills unset fields from the figure preset, then checks consistency.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let experiment = self
            .experiment
            .ok_or_else(|| Error::config("experiment", "missing; expected spectrum, evolve-single, evolve-two, evolve-dimer-effective or fig1 ... fig6"))?;
        let preset = preset(experiment);
        let hopping = self.hopping.or(preset.hopping).unwrap_or(1.0);
        if !(hopping > 0.0 && hopping.is_finite()) {
            return Err(Error::config("J", format!("must be positive, got {hopping}")));
        }
        let trap = match (self.trap, self.j_over_omega) {
            (Some(_), Some(_)) => {
                return Err(Error::config("Omega", "give either Omega or J_over_Omega, not both"));
            }
            (Some(t), None) => t,
            (None, Some(r)) => {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::config("J_over_Omega", format!("must be positive, got {r}")));
                }
                hopping / r
            }
            (None, None) => match preset.j_over_omega {
                Some(r) => hopping / r,
                None => return Err(Error::config("Omega", "missing; give Omega or J_over_Omega")),
            },
        };
        if !(trap >= 0.0 && trap.is_finite()) {
            return Err(Error::config("Omega", format!("must be finite and non-negative, got {trap}")));
        }
        let interaction = self.interaction.or(preset.interaction).unwrap_or(0.0);
        if !interaction.is_finite() {
            return Err(Error::config("U", "must be finite"));
        }

        if self.sector.is_some() && experiment != Experiment::Spectrum {
            return Err(Error::config("sector", format!("only the spectrum experiment takes a sector, not {experiment}")));
        }
        let sector = experiment.sector(self.sector);
        if sector == Sector::Dimer && interaction == 0.0 {
            return Err(Error::config("U", "the dimer model needs U != 0"));
        }
        let half_width = match self.half_width.unwrap_or_default() {
            HalfWidth::Fixed(0) => return Err(Error::config("M", "must be at least 1")),
            HalfWidth::Fixed(m) => m,
            HalfWidth::Auto => {
                if trap == 0.0 {
                    return Err(Error::config("M", "\"auto\" needs a trap (Omega > 0)"));
                }
                default_half_width(hopping, trap, interaction, sector).map_err(|e| Error::config("M", e.to_string()))?
            }
        };
        let spec = SystemSpec::new(hopping, trap, interaction, half_width).map_err(|e| Error::config("J", e.to_string()))?;

        let initial_state = self.initial_state.clone().or(preset.initial_state);
        let seed = self.seed.unwrap_or(0);
        let (initial_state, t_max, samples) = if experiment.is_spectrum() {
            for (field, set) in [
                ("initial_state", self.initial_state.is_some()),
                ("t_max", self.t_max.is_some()),
                ("samples", self.samples.is_some()),
            ] {
                if set {
                    return Err(Error::config(field, "not used by spectrum runs"));
                }
            }
            (None, None, None)
        } else {
            let init = initial_state.ok_or_else(|| Error::config("initial_state", "missing for an evolve run"))?;
            if !init.compatible_with(sector) {
                return Err(Error::config(
                    "initial_state",
                    format!("kind `{}` does not fit the {sector} sector of {experiment}", init.kind()),
                ));
            }
            if init.is_dimer() && interaction == 0.0 {
                return Err(Error::config("U", "dimer states need U != 0"));
            }
            let t_max = match self.t_max {
                Some(t) => t,
                None => match preset.t_max {
                    Some(TimeSpan::Absolute(t)) => t,
                    Some(TimeSpan::Periods(p)) => {
                        let osc = if init.is_dimer() { Sector::Dimer } else { Sector::Single };
                        p * nominal_period(&spec, osc).map_err(|e| Error::config("t_max", e.to_string()))?
                    }
                    None => return Err(Error::config("t_max", "missing for an evolve run")),
                },
            };
            if !(t_max > 0.0 && t_max.is_finite()) {
                return Err(Error::config("t_max", format!("must be positive, got {t_max}")));
            }
            let samples = self.samples.unwrap_or(PERIOD_SAMPLES);
            if samples < 2 {
                return Err(Error::config("samples", "need at least 2"));
            }
            (Some(init), Some(t_max), Some(samples))
        };

        Ok(ResolvedRun {
            experiment,
            spec,
            sector,
            initial_state,
            t_max,
            samples,
            seed,
            output: self.output.clone(),
        })
    }
}

enum TimeSpan {
    Absolute(f64),
    /// Multiples of the nominal oscillation period.
    Periods(f64),
}

#[derive(Default)]
struct Preset {
    hopping: Option<f64>,
    j_over_omega: Option<f64>,
    interaction: Option<f64>,
    initial_state: Option<InitialState>,
    t_max: Option<TimeSpan>,
}

fn preset(experiment: Experiment) -> Preset {
    use Experiment::*;
    use InitialState::*;
    let base = |u: f64, init: Option<InitialState>, t_max: Option<TimeSpan>| Preset {
        hopping: Some(1.0),
        j_over_omega: Some(140.0),
        interaction: Some(u),
        initial_state: init,
        t_max,
    };
    match experiment {
        Fig1 => base(0.0, None, None),
        Fig2a => base(0.0, Some(ShiftedGround { shift: 7 }), Some(TimeSpan::Periods(2.0))),
        Fig2b => base(0.0, Some(LocalizedPacket { j_prime: 7, levels: 21 }), Some(TimeSpan::Periods(2.0))),
        Fig3a => base(-10.0, Some(Product { shifts: [0, 7] }), Some(TimeSpan::Periods(2.0))),
        Fig3b => base(-10.0, Some(Product { shifts: [-7, 7] }), Some(TimeSpan::Periods(2.0))),
        Fig3c => base(-10.0, Some(Product { shifts: [7, 7] }), Some(TimeSpan::Periods(2.0))),
        Fig4 => base(-10.0, Some(DimerAttractive { shift: 0 }), Some(TimeSpan::Absolute(400.0))),
        Fig5a => base(10.0, Some(DimerAttractive { shift: 0 }), Some(TimeSpan::Absolute(400.0))),
        Fig5b => base(10.0, Some(DimerRepulsive { shift: 0 }), Some(TimeSpan::Absolute(400.0))),
        Fig6 => base(10.0, Some(DimerRepulsive { shift: 3 }), Some(TimeSpan::Periods(2.0))),
        Spectrum | EvolveSingle | EvolveTwo | EvolveDimerEffective => Preset::default(),
    }
}

/// Fully specified run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedRun {
    pub experiment: Experiment,
    pub spec: SystemSpec,
    pub sector: Sector,
    pub initial_state: Option<InitialState>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl ResolvedRun {
    /// Explicit config that resolves back to `self`.
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            hopping: Some(self.spec.hopping),
            trap: Some(self.spec.trap),
            j_over_omega: None,
            interaction: Some(self.spec.interaction),
            half_width: Some(HalfWidth::Fixed(self.spec.half_width)),
            experiment: Some(self.experiment),
            sector: (self.experiment == Experiment::Spectrum).then_some(self.sector),
            initial_state: self.initial_state.clone(),
            t_max: self.t_max,
            samples: self.samples,
            seed: matches!(self.initial_state, Some(InitialState::LocalizedPacket { .. })).then_some(self.seed),
            output: self.output.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        text.parse()
    }

    #[test]
    fn figure_preset_resolves_auto_width() {
        let run = RunConfig::figure(Experiment::Fig2a).resolve().unwrap();
        assert_eq!(run.spec.half_width, 31);
        assert_eq!(run.initial_state, Some(InitialState::ShiftedGround { shift: 7 }));
        let tau = std::f64::consts::PI * 140f64.sqrt();
        assert!((run.t_max.unwrap() - 2.0 * tau).abs() < 1e-12);
        assert_eq!(run.samples, Some(400));
    }

    #[test]
    fn resolved_config_round_trips() {
        for fig in Experiment::FIGURES {
            let run = RunConfig::figure(fig).resolve().unwrap();
            let text = serde_json::to_string_pretty(&run.to_config()).unwrap();
            let again = parse(&text).unwrap().resolve().unwrap();
            assert_eq!(run, again, "{fig}");
        }
    }

    #[test]
    fn metadata_wrapper_is_accepted() {
        let text = r#"{"library": "qlattice", "config": {"experiment": "fig1"}, "measured": {}}"#;
        assert_eq!(parse(text).unwrap().experiment, Some(Experiment::Fig1));
    }

    #[test]
    fn tagged_initial_state() {
        let cfg = parse(
            r#"{"J_over_Omega": 140, "U": 0, "M": "auto", "experiment": "evolve-single",
                "initial_state": {"kind": "localized-packet", "j_prime": 7, "K": 21},
                "t_max": 50, "samples": 100}"#,
        )
        .unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.initial_state, Some(InitialState::LocalizedPacket { j_prime: 7, levels: 21 }));
        assert_eq!(run.spec.half_width, 31);
    }

    #[test]
    fn diagnostics_name_line_or_field() {
        let err = parse("{\n  \"experiment\": \"fig1\",\n  \"Jx\": 1\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Jx") && msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 2);

        let err = parse(r#"{"experiment": "fig1", "M": "big"}"#).unwrap_err();
        assert!(err.to_string().contains("auto"));

        let err = parse(r#"{"experiment": "fig1", "Omega": 0.1, "J_over_Omega": 10}"#)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "Omega"));

        let err = parse(r#"{"experiment": "evolve-single", "J_over_Omega": 140, "initial_state": {"kind": "product", "shifts": [0, 7]}, "t_max": 10}"#)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "initial_state"));

        let err = parse(r#"{"experiment": "evolve-two", "J_over_Omega": 140, "initial_state": {"kind": "product", "shifts": [0, 7]}}"#)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "t_max"), "{err}");

        let err = parse(r#"{"experiment": "spectrum", "J_over_Omega": 140, "t_max": 3}"#)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "t_max"));
    }

    #[test]
    fn figure_ids() {
        assert_eq!(Experiment::from_figure_id("2a").unwrap(), Experiment::Fig2a);
        assert_eq!(Experiment::from_figure_id("fig6").unwrap(), Experiment::Fig6);
        assert!(Experiment::from_figure_id("7").is_err());
        assert_eq!(Experiment::Fig5b.to_string(), "fig5b");
    }
}
