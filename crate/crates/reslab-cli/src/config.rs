//! Strict JSON configuration documents and their conversion to system specs.
//!
//! Unknown keys are rejected everywhere (typos in eigenvalue lists are the
//! classic failure mode), complex numbers are written either as a bare float
//! or as a `[re, im]` pair, and every numeric field must be finite.

use reslab::orbit::{FixedPointDatum, PrimitiveOrbit};
use reslab::systems::{
    HorseshoeSuspension, MorseSmaleSystem, SystemSpec, ToralSuspension,
};
use reslab::C64;
use serde::de::Error as _;
use serde::Deserialize;

/// Parsed configuration file: one system plus optional run parameters that
/// subcommand flags may override.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub system: SystemConfig,
    #[serde(default)]
    pub tolerances: Option<TolerancesConfig>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub window: Option<WindowConfig>,
    #[serde(default)]
    pub bump: Option<BumpConfig>,
    #[serde(default)]
    pub strip: Option<StripConfig>,
}

/// One system variant, discriminated by the `type` key.
#[derive(Debug)]
pub enum SystemConfig {
    ToralSuspension(ToralConfig),
    LinearHorseshoe(HorseshoeConfig),
    MorseSmale(MorseSmaleConfig),
    ExplicitOrbits(ExplicitConfig),
}

const SYSTEM_VARIANTS: &[&str] = &[
    "toral_suspension",
    "linear_horseshoe",
    "morse_smale",
    "explicit_orbits",
];

// Hand-rolled so each variant keeps strict field checking; an internally
// tagged derive does not reliably reject unknown keys.
impl<'de> Deserialize<'de> for SystemConfig {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let mut fields = serde_json::Map::deserialize(deserializer)?;
        let tag = fields
            .remove("type")
            .ok_or_else(|| D::Error::missing_field("type"))?;
        let tag: String = serde_json::from_value(tag).map_err(D::Error::custom)?;
        let rest = serde_json::Value::Object(fields);
        let parsed = match tag.as_str() {
            "toral_suspension" => {
                serde_json::from_value(rest).map(SystemConfig::ToralSuspension)
            }
            "linear_horseshoe" => {
                serde_json::from_value(rest).map(SystemConfig::LinearHorseshoe)
            }
            "morse_smale" => serde_json::from_value(rest).map(SystemConfig::MorseSmale),
            "explicit_orbits" => {
                serde_json::from_value(rest).map(SystemConfig::ExplicitOrbits)
            }
            other => return Err(D::Error::unknown_variant(other, SYSTEM_VARIANTS)),
        };
        parsed.map_err(|err| D::Error::custom(format!("system ({tag}): {err}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToralConfig {
    /// 2x2 integer matrix of the torus map, |det| = 1, |trace| > 2.
    pub matrix: [[i64; 2]; 2],
    pub roof: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorseshoeConfig {
    pub expansion: f64,
    pub contraction: f64,
    /// Defaults to the number of symbol weights.
    #[serde(default)]
    pub symbol_count: Option<usize>,
    pub symbol_weights: Vec<f64>,
    pub roof: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseSmaleConfig {
    #[serde(default)]
    pub closed_orbits: Vec<OrbitConfig>,
    #[serde(default)]
    pub fixed_points: Vec<FixedPointConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitConfig {
    pub orbits: Vec<OrbitConfig>,
}

/// Direction convention for configured return-map spectra. The engines work
/// with backward (inverse-time) eigenvalues, where stable directions have
/// modulus > 1; forward spectra are inverted entrywise on ingestion. Weight
/// eigenvalues are convention-independent and never inverted.
#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Backward,
    Forward,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub id: String,
    pub primitive_period: f64,
    /// Linearized return-map spectrum, see [`Convention`].
    pub eigenvalues: Vec<ComplexConfig>,
    pub stable_count: usize,
    pub stable_orientable: bool,
    #[serde(default)]
    pub convention: Convention,
    /// Weight-transport spectrum over one primitive period; defaults to the
    /// trivial scalar weight `[1]`.
    #[serde(default)]
    pub weight_eigenvalues: Option<Vec<ComplexConfig>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    pub id: String,
    /// Spectrum of the generator `A` of the linearized flow `exp(tA)`.
    pub generator_eigenvalues: Vec<ComplexConfig>,
    pub stable_count: usize,
    /// Bundle decay rates; defaults to the trivial scalar bundle `[0]`.
    #[serde(default)]
    pub weight_generator_eigenvalues: Option<Vec<ComplexConfig>>,
}

/// A complex number written either as a bare float or as `[re, im]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexConfig {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexConfig {
    pub fn to_complex(self) -> C64 {
        match self {
            ComplexConfig::Real(re) => C64::new(re, 0.0),
            ComplexConfig::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default)]
    pub seed_diameter: Option<f64>,
    #[serde(default)]
    pub newton_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub l: f64,
    pub d: f64,
    #[serde(default)]
    pub quadrature_order: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    pub beta: f64,
    #[serde(rename = "A", default)]
    pub a: Option<f64>,
}

fn finite(value: f64, what: &str) -> anyhow::Result<()> {
    anyhow::ensure!(value.is_finite(), "config field {what} must be finite, got {value}");
    Ok(())
}

fn finite_complex(value: ComplexConfig, what: &str) -> anyhow::Result<()> {
    let c = value.to_complex();
    finite(c.re, what)?;
    finite(c.im, what)
}

fn validate_orbit(orbit: &OrbitConfig) -> anyhow::Result<()> {
    let id = &orbit.id;
    finite(orbit.primitive_period, &format!("orbit `{id}` primitive_period"))?;
    for e in &orbit.eigenvalues {
        finite_complex(*e, &format!("orbit `{id}` eigenvalue"))?;
    }
    for e in orbit.weight_eigenvalues.iter().flatten() {
        finite_complex(*e, &format!("orbit `{id}` weight eigenvalue"))?;
    }
    Ok(())
}

impl ConfigDocument {
    /// Document invariant beyond schema shape: every numeric field finite.
    pub fn validate(&self) -> anyhow::Result<()> {
        match &self.system {
            SystemConfig::ToralSuspension(t) => finite(t.roof, "system.roof")?,
            SystemConfig::LinearHorseshoe(h) => {
                finite(h.expansion, "system.expansion")?;
                finite(h.contraction, "system.contraction")?;
                finite(h.roof, "system.roof")?;
                for w in &h.symbol_weights {
                    finite(*w, "system.symbol_weights")?;
                }
            }
            SystemConfig::MorseSmale(ms) => {
                for orbit in &ms.closed_orbits {
                    validate_orbit(orbit)?;
                }
                for fp in &ms.fixed_points {
                    let id = &fp.id;
                    for e in &fp.generator_eigenvalues {
                        finite_complex(*e, &format!("fixed point `{id}` eigenvalue"))?;
                    }
                    for e in fp.weight_generator_eigenvalues.iter().flatten() {
                        finite_complex(*e, &format!("fixed point `{id}` weight rate"))?;
                    }
                }
            }
            SystemConfig::ExplicitOrbits(e) => {
                for orbit in &e.orbits {
                    validate_orbit(orbit)?;
                }
            }
        }
        if let Some(h) = self.horizon {
            finite(h, "horizon")?;
        }
        if let Some(t) = &self.tolerances {
            if let Some(s) = t.seed_diameter {
                finite(s, "tolerances.seed_diameter")?;
            }
            if let Some(n) = t.newton_tol {
                finite(n, "tolerances.newton_tol")?;
            }
        }
        if let Some(w) = &self.window {
            finite(w.re_min, "window.re_min")?;
            finite(w.re_max, "window.re_max")?;
            finite(w.im_min, "window.im_min")?;
            finite(w.im_max, "window.im_max")?;
        }
        if let Some(b) = &self.bump {
            finite(b.l, "bump.l")?;
            finite(b.d, "bump.d")?;
        }
        if let Some(s) = &self.strip {
            finite(s.beta, "strip.beta")?;
            if let Some(a) = s.a {
                finite(a, "strip.A")?;
            }
        }
        Ok(())
    }
}

fn to_orbit(cfg: &OrbitConfig) -> reslab::Result<PrimitiveOrbit> {
    let mut eigenvalues: Vec<C64> =
        cfg.eigenvalues.iter().map(|e| e.to_complex()).collect();
    if cfg.convention == Convention::Forward {
        for e in &mut eigenvalues {
            *e = e.inv();
        }
    }
    let weights = match &cfg.weight_eigenvalues {
        Some(list) => list.iter().map(|e| e.to_complex()).collect(),
        None => vec![C64::new(1.0, 0.0)],
    };
    PrimitiveOrbit::new(
        cfg.id.clone(),
        cfg.primitive_period,
        eigenvalues,
        cfg.stable_count,
        cfg.stable_orientable,
        weights,
    )
}

fn to_fixed_point(cfg: &FixedPointConfig) -> reslab::Result<FixedPointDatum> {
    let weights = match &cfg.weight_generator_eigenvalues {
        Some(list) => list.iter().map(|e| e.to_complex()).collect(),
        None => vec![C64::new(0.0, 0.0)],
    };
    FixedPointDatum::new(
        cfg.id.clone(),
        cfg.generator_eigenvalues.iter().map(|e| e.to_complex()).collect(),
        cfg.stable_count,
        weights,
    )
}

impl SystemConfig {
    pub fn to_spec(&self) -> reslab::Result<SystemSpec> {
        let spec = match self {
            SystemConfig::ToralSuspension(t) => SystemSpec::ToralSuspension(ToralSuspension {
                matrix: t.matrix,
                roof: t.roof,
            }),
            SystemConfig::LinearHorseshoe(h) => {
                SystemSpec::HorseshoeSuspension(HorseshoeSuspension {
                    expansion: h.expansion,
                    contraction: h.contraction,
                    symbol_count: h.symbol_count.unwrap_or(h.symbol_weights.len()),
                    symbol_weights: h.symbol_weights.clone(),
                    roof: h.roof,
                })
            }
            SystemConfig::MorseSmale(ms) => {
                let closed_orbits = ms
                    .closed_orbits
                    .iter()
                    .map(to_orbit)
                    .collect::<reslab::Result<Vec<_>>>()?;
                let fixed_points = ms
                    .fixed_points
                    .iter()
                    .map(to_fixed_point)
                    .collect::<reslab::Result<Vec<_>>>()?;
                SystemSpec::MorseSmale(MorseSmaleSystem {
                    closed_orbits,
                    fixed_points,
                })
            }
            SystemConfig::ExplicitOrbits(e) => SystemSpec::ExplicitOrbits {
                orbits: e
                    .orbits
                    .iter()
                    .map(to_orbit)
                    .collect::<reslab::Result<Vec<_>>>()?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigDocument, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[test]
    fn cat_config_round_trips_to_spec() {
        let doc = parse(
            r#"{"system": {"type": "toral_suspension", "matrix": [[2, 1], [1, 1]], "roof": 1.0}}"#,
        )
        .unwrap();
        doc.validate().unwrap();
        let spec = doc.system.to_spec().unwrap();
        match spec {
            SystemSpec::ToralSuspension(t) => {
                assert_eq!(t.matrix, [[2, 1], [1, 1]]);
                assert_eq!(t.roof, 1.0);
            }
            other => panic!("wrong variant: {other:?}"),
        }
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let err = parse(
            r#"{"system": {"type": "toral_suspension", "matrix": [[2, 1], [1, 1]], "roof": 1.0}, "bogus": 3}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn unknown_system_key_rejected() {
        let err = parse(
            r#"{"system": {"type": "toral_suspension", "matrix": [[2, 1], [1, 1]], "roof": 1.0, "lift": 2}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("lift"), "{err}");
    }

    #[test]
    fn unknown_system_type_rejected() {
        let err = parse(r#"{"system": {"type": "solenoid"}}"#).unwrap_err();
        assert!(err.to_string().contains("solenoid"), "{err}");
    }

    #[test]
    fn symbol_count_defaults_to_weight_length() {
        let doc = parse(
            r#"{"system": {"type": "linear_horseshoe", "expansion": 4.0,
                "contraction": 0.25, "symbol_weights": [1.0, 1.0], "roof": 1.0}}"#,
        )
        .unwrap();
        match doc.system.to_spec().unwrap() {
            SystemSpec::HorseshoeSuspension(h) => assert_eq!(h.symbol_count, 2),
            other => panic!("wrong variant: {other:?}"),
        }
    }

    #[test]
    fn forward_convention_inverts_return_spectrum() {
        let doc = parse(
            r#"{"system": {"type": "explicit_orbits", "orbits": [{
                "id": "a", "primitive_period": 2.0,
                "eigenvalues": [0.25], "stable_count": 1,
                "stable_orientable": true, "convention": "forward"}]}}"#,
        )
        .unwrap();
        match doc.system.to_spec().unwrap() {
            SystemSpec::ExplicitOrbits { orbits } => {
                assert_eq!(orbits[0].backward_poincare_eigenvalues[0], C64::new(4.0, 0.0));
                assert_eq!(orbits[0].weight_eigenvalues, vec![C64::new(1.0, 0.0)]);
            }
            other => panic!("wrong variant: {other:?}"),
        }
    }

    #[test]
    fn complex_pair_syntax_accepted() {
        let doc = parse(
            r#"{"system": {"type": "morse_smale", "fixed_points": [{
                "id": "p", "generator_eigenvalues": [[-1.0, 0.5], 2.0],
                "stable_count": 1}]}}"#,
        )
        .unwrap();
        match doc.system.to_spec().unwrap() {
            SystemSpec::MorseSmale(ms) => {
                let fp = &ms.fixed_points[0];
                assert_eq!(fp.generator_eigenvalues[0], C64::new(-1.0, 0.5));
                assert_eq!(fp.weight_generator_eigenvalues, vec![C64::new(0.0, 0.0)]);
            }
            other => panic!("wrong variant: {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected_by_validate() {
        let doc = parse(
            r#"{"system": {"type": "toral_suspension", "matrix": [[2, 1], [1, 1]], "roof": 1e309}}"#,
        );
        // serde_json may reject the overflow itself; if it parses to
        // infinity the document validator must catch it.
        if let Ok(doc) = doc {
            assert!(doc.validate().is_err());
        }
    }
}
