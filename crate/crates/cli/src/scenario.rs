//! Scenario file schema, parsing, validation, and lossless emission.

use anyhow::{anyhow, bail, Context, Result};
use gps_calculus::curves::{Envelope, FlowId, FlowSpec, ServiceCurve};
use gps_calculus::plf::Plf;
use gps_calculus::rational::{parse_rational, to_exact_string, Q};
use gps_calculus::simulator::Scenario;
use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rational literal: `"0.25"`, `"1/3"`, `"1e-9"`, or a plain JSON integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rational(pub Q);

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(de)?;
        let parsed = match &value {
            serde_json::Value::String(s) => parse_rational(s).map_err(D::Error::custom)?,
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    gps_calculus::rational::q(i)
                } else {
                    return Err(D::Error::custom(format!(
                        "non-integer numbers lose precision; write \"{n}\" as a string"
                    )));
                }
            }
            other => {
                return Err(D::Error::custom(format!(
                    "expected a rational literal, got {other}"
                )))
            }
        };
        Ok(Rational(parsed))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&to_exact_string(&self.0))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SegmentSpec {
    pub start: Rational,
    pub jump: Rational,
    pub slope: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum EnvelopeSpec {
    #[serde(rename = "token-buckets")]
    TokenBuckets { pieces: Vec<TokenBucketSpec> },
    #[serde(rename = "unbounded")]
    Unbounded,
    #[serde(rename = "pl-concave")]
    PlConcave { segments: Vec<SegmentSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TokenBucketSpec {
    pub sigma: Rational,
    pub rho: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ArrivalsSpec {
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "pl")]
    Pl { segments: Vec<SegmentSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlowFileSpec {
    pub id: String,
    pub weight: Rational,
    pub envelope: EnvelopeSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<ArrivalsSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum CurveSpec {
    #[serde(rename = "latency-rates")]
    LatencyRates { pieces: Vec<LatencyRateSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LatencyRateSpec {
    #[serde(rename = "R")]
    pub rate: Rational,
    #[serde(rename = "L")]
    pub latency: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ProcessSpec {
    #[serde(rename = "lazy")]
    Lazy,
    #[serde(rename = "pl")]
    Pl { segments: Vec<SegmentSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ServiceFileSpec {
    pub curve: CurveSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptionsSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// On-disk shape of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub flows: Vec<FlowFileSpec>,
    pub service: ServiceFileSpec,
    pub horizon: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsSpec>,
}

/// Fully validated scenario: envelopes concave, curve convex, greedy/lazy
/// shorthands expanded, arrivals checked against declared envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub flows: Vec<FlowSpec>,
    pub curve: ServiceCurve,
    pub process: Plf,
    pub horizon: Q,
    pub flow_of_interest: Option<FlowId>,
    pub grid: Option<String>,
    pub tolerance: Q,
    pub seed: u64,
}

impl ScenarioFile {
    /// Whether every flow has an arrival process (required by `simulate`).
    pub fn fully_specified(&self) -> bool {
        self.flows.iter().all(|f| f.arrivals.is_some())
    }

    /// Simulation input; errors when some flow has no arrivals.
    pub fn to_scenario(&self) -> Result<Scenario> {
        Scenario::new(
            self.flows.clone(),
            self.process.clone(),
            self.horizon.clone(),
        )
        .map_err(|e| anyhow!("{e}"))
    }
}

fn plf_from_segments(specs: &[SegmentSpec]) -> Result<Plf> {
    let segs: Vec<(Q, Q, Q)> = specs
        .iter()
        .map(|s| (s.start.0.clone(), s.jump.0.clone(), s.slope.0.clone()))
        .collect();
    Plf::new(segs).map_err(|e| anyhow!("{e}"))
}

fn build_envelope(spec: &EnvelopeSpec) -> Result<Envelope> {
    match spec {
        EnvelopeSpec::Unbounded => Ok(Envelope::Unbounded),
        EnvelopeSpec::TokenBuckets { pieces } => {
            if pieces.is_empty() {
                bail!("token-buckets needs at least one piece");
            }
            let raw: Vec<(Q, Q)> = pieces
                .iter()
                .map(|p| (p.sigma.0.clone(), p.rho.0.clone()))
                .collect();
            Envelope::from_token_buckets(&raw).map_err(|e| anyhow!("{e}"))
        }
        EnvelopeSpec::PlConcave { segments } => {
            let plf = plf_from_segments(segments)?;
            Envelope::bounded(plf).map_err(|e| anyhow!("envelope not concave: {e}"))
        }
    }
}

fn build_curve(spec: &CurveSpec) -> Result<ServiceCurve> {
    match spec {
        CurveSpec::LatencyRates { pieces } => {
            if pieces.is_empty() {
                bail!("latency-rates needs at least one piece");
            }
            let raw: Vec<(Q, Q)> = pieces
                .iter()
                .map(|p| (p.rate.0.clone(), p.latency.0.clone()))
                .collect();
            ServiceCurve::from_latency_rates(&raw).map_err(|e| anyhow!("{e}"))
        }
    }
}

/// Validates and resolves a raw scenario.
pub fn resolve(raw: &RawScenario) -> Result<ScenarioFile> {
    if raw.flows.is_empty() {
        bail!("flows: at least one flow is required");
    }
    let horizon = raw.horizon.0.clone();
    if !horizon.is_positive() {
        bail!("horizon: must be positive, got {horizon}");
    }
    let curve = build_curve(&raw.service.curve).context("service.curve")?;
    let process = match raw.service.process.as_ref().unwrap_or(&ProcessSpec::Lazy) {
        ProcessSpec::Lazy => curve.plf().clone(),
        ProcessSpec::Pl { segments } => {
            let plf = plf_from_segments(segments).context("service.process")?;
            if !Plf::complies_service(&plf, curve.plf()) {
                bail!("service.process: does not comply with service.curve");
            }
            plf
        }
    };

    let mut flows = Vec::with_capacity(raw.flows.len());
    for (index, f) in raw.flows.iter().enumerate() {
        let path = format!("flows[{index}]");
        if raw.flows.iter().filter(|g| g.id == f.id).count() > 1 {
            bail!("{path}.id: duplicate flow id `{}`", f.id);
        }
        let envelope = build_envelope(&f.envelope).with_context(|| format!("{path}.envelope"))?;
        let arrivals = match &f.arrivals {
            None => None,
            Some(ArrivalsSpec::Greedy) => Some(
                envelope
                    .plf()
                    .ok_or_else(|| {
                        anyhow!("{path}.arrivals: greedy arrivals need a bounded envelope")
                    })?
                    .clone(),
            ),
            Some(ArrivalsSpec::Pl { segments }) => {
                let plf =
                    plf_from_segments(segments).with_context(|| format!("{path}.arrivals"))?;
                if let Some(env) = envelope.plf() {
                    if let Some(w) = Plf::envelope_violation(&plf, env) {
                        bail!(
                            "{path}.arrivals: exceeds the envelope: A(s,t) - E(t-s) = {} \
                             at s = {}, t = {}",
                            gps_calculus::rational::to_decimal(&w.excess, 12),
                            gps_calculus::rational::to_decimal(&w.s, 12),
                            gps_calculus::rational::to_decimal(&w.t, 12),
                        );
                    }
                }
                Some(plf)
            }
        };
        let spec = FlowSpec::new(f.id.as_str(), f.weight.0.clone(), envelope, arrivals)
            .map_err(|e| anyhow!("{path}.weight: {e}"))?;
        flows.push(spec);
    }

    let options = raw.options.clone().unwrap_or_default();
    let flow_of_interest = match &options.flow {
        None => None,
        Some(id) => {
            if !flows.iter().any(|f| f.id.0 == *id) {
                bail!("options.flow: unknown flow id `{id}`");
            }
            Some(FlowId::new(id.clone()))
        }
    };
    Ok(ScenarioFile {
        flows,
        curve,
        process,
        horizon,
        flow_of_interest,
        grid: options.grid,
        tolerance: options.tolerance.map(|r| r.0).unwrap_or_else(Q::zero),
        seed: options.seed.unwrap_or(0),
    })
}

/// Parses and validates a scenario from JSON text.
pub fn parse_scenario_str(text: &str) -> Result<ScenarioFile> {
    let raw: RawScenario = serde_json::from_str(text).context("scenario parse error")?;
    resolve(&raw)
}

/// Parses and validates a scenario file.
pub fn parse_scenario(path: &std::path::Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    parse_scenario_str(&text).with_context(|| format!("in {}", path.display()))
}

/// Lossless emission of the resolved scenario: greedy/lazy shorthands are
/// expanded, envelopes serialize as explicit concave segments, the curve as
/// its latency-rate pieces. Parsing the output reproduces the same resolved
/// scenario.
pub fn emit_scenario(file: &ScenarioFile) -> String {
    let flows: Vec<FlowFileSpec> = file
        .flows
        .iter()
        .map(|f| FlowFileSpec {
            id: f.id.0.clone(),
            weight: Rational(f.weight.clone()),
            envelope: match &f.envelope {
                Envelope::Unbounded => EnvelopeSpec::Unbounded,
                Envelope::Bounded(plf) => EnvelopeSpec::PlConcave {
                    segments: segments_of(plf),
                },
            },
            arrivals: f.arrivals.as_ref().map(|a| ArrivalsSpec::Pl {
                segments: segments_of(a),
            }),
        })
        .collect();
    let pieces = file
        .curve
        .plf()
        .canonical()
        .segments()
        .iter()
        .filter(|s| !s.slope.is_zero())
        .map(|s| {
            // the curve is convex through the origin, so each segment line
            // is a latency-rate piece R (t - L) with L = start - value/R
            let value_at_start = file.curve.eval(&s.start);
            LatencyRateSpec {
                latency: Rational(&s.start - value_at_start / &s.slope),
                rate: Rational(s.slope.clone()),
            }
        })
        .collect::<Vec<_>>();
    let pieces = if pieces.is_empty() {
        vec![LatencyRateSpec {
            rate: Rational(Q::zero()),
            latency: Rational(Q::zero()),
        }]
    } else {
        pieces
    };
    let raw = RawScenario {
        flows,
        service: ServiceFileSpec {
            curve: CurveSpec::LatencyRates { pieces },
            process: Some(ProcessSpec::Pl {
                segments: segments_of(&file.process),
            }),
        },
        horizon: Rational(file.horizon.clone()),
        options: Some(OptionsSpec {
            flow: file.flow_of_interest.as_ref().map(|f| f.0.clone()),
            grid: file.grid.clone(),
            tolerance: Some(Rational(file.tolerance.clone())),
            seed: Some(file.seed),
        }),
    };
    serde_json::to_string_pretty(&raw).expect("scenario serialization cannot fail")
}

fn segments_of(plf: &Plf) -> Vec<SegmentSpec> {
    plf.segments()
        .iter()
        .map(|s| SegmentSpec {
            start: Rational(s.start.clone()),
            jump: Rational(s.jump.clone()),
            slope: Rational(s.slope.clone()),
        })
        .collect()
}

/// Parses a grid spec: either `t0:t1:step` or a comma-separated list.
pub fn parse_grid(spec: &str, fallback_end: &Q) -> Result<Vec<Q>> {
    let _ = fallback_end;
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("grid must be `t0:t1:step` or a comma-separated list");
        }
        let t0 = parse_rational(parts[0]).map_err(|e| anyhow!("{e}"))?;
        let t1 = parse_rational(parts[1]).map_err(|e| anyhow!("{e}"))?;
        let step = parse_rational(parts[2]).map_err(|e| anyhow!("{e}"))?;
        if !step.is_positive() || t1 < t0 || t0.is_negative() {
            bail!("grid needs 0 <= t0 <= t1 and step > 0");
        }
        let mut out = Vec::new();
        let mut t = t0;
        while t <= t1 {
            out.push(t.clone());
            t += &step;
        }
        Ok(out)
    } else {
        let mut out = Vec::new();
        for part in spec.split(',') {
            let t = parse_rational(part.trim()).map_err(|e| anyhow!("{e}"))?;
            if t.is_negative() {
                bail!("grid times must be nonnegative");
            }
            out.push(t);
        }
        if out.windows(2).any(|w| w[0] > w[1]) {
            bail!("grid times must be ascending");
        }
        Ok(out)
    }
}
