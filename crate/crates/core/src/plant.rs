//! Fault-injectable simulator of a two-sided redundant actuator loop.
//!
//! Each side carries two quantized position sensors. A sensor is latched
//! failed when it departs from the model prediction, and the measured
//! position is the median of the healthy sensors (all sensors once none is
//! healthy), so one fault per side is masked and two are not.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::{Block, ModelManifest, RequirementParams};
use crate::trace::{Domain, Signal, Trace, VarKind, VariableMeta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid plant configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid fault: {0}")]
    InvalidFault(String),
    #[error("empty parameter range {0}")]
    EmptyRange(&'static str),
    #[error("fault list is not valid JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorId {
    LeftInner,
    LeftOuter,
    RightInner,
    RightOuter,
}

impl SensorId {
    pub const ALL: [SensorId; 4] = [
        SensorId::LeftInner,
        SensorId::LeftOuter,
        SensorId::RightInner,
        SensorId::RightOuter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorId::LeftInner => "left_inner",
            SensorId::LeftOuter => "left_outer",
            SensorId::RightInner => "right_inner",
            SensorId::RightOuter => "right_outer",
        }
    }

    fn side(self) -> usize {
        match self {
            SensorId::LeftInner | SensorId::LeftOuter => 0,
            SensorId::RightInner | SensorId::RightOuter => 1,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    A,
    B,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FaultKind {
    SensorStuck { sensor: SensorId, value: f64 },
    SensorOutlier { sensor: SensorId, offset: f64 },
    LowPressure { channel: Channel },
    LookupEntryError { cell: usize, delta: f64 },
    GuardShift { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    #[serde(flatten)]
    pub kind: FaultKind,
    /// Activation time in seconds.
    pub at: f64,
}

impl FaultSpec {
    pub fn new(kind: FaultKind, at: f64) -> Self {
        Self { kind, at }
    }

    /// Variables the fault acts on before any propagation.
    pub fn affected_variables(&self) -> Vec<String> {
        match &self.kind {
            FaultKind::SensorStuck { sensor, .. } | FaultKind::SensorOutlier { sensor, .. } => {
                vec![sensor.name().to_string(), format!("{}_fail", sensor.name())]
            }
            FaultKind::LowPressure { channel } => vec![pressure_name(*channel).to_string()],
            FaultKind::LookupEntryError { .. } => vec!["gain".into()],
            FaultKind::GuardShift { .. } => vec!["mode".into(), "sm_location".into()],
        }
    }
}

pub fn parse_faults(text: &str) -> Result<Vec<FaultSpec>, PlantError> {
    serde_json::from_str(text).map_err(|e| PlantError::Json(e.to_string()))
}

fn pressure_name(c: Channel) -> &'static str {
    match c {
        Channel::A => "p_a",
        Channel::B => "p_b",
        Channel::C => "p_c",
    }
}

/// Piecewise-linear gain schedule over the filtered command magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupTable {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl LookupTable {
    /// Cell index and interpolated value; inputs outside the table clamp
    /// to the first or last cell.
    fn lookup(&self, x: f64, values: &[f64]) -> (usize, f64) {
        let bp = &self.breakpoints;
        let cells = bp.len() - 1;
        let cell = bp[1..cells].partition_point(|&b| b <= x);
        let (x0, x1) = (bp[cell], bp[cell + 1]);
        let frac = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        (
            cell,
            values[cell] + (values[cell + 1] - values[cell]) * frac,
        )
    }

    fn cells(&self) -> usize {
        self.breakpoints.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandStep {
    pub time: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub duration: f64,
    pub step: f64,
    /// Pilot command: each step holds its amplitude until the next one;
    /// the command is 0 before the first step.
    pub command: Vec<CommandStep>,
    pub prefilter_tau: f64,
    pub actuator_tau: f64,
    /// Actuator rate limit at nominal pressure, units per second.
    pub rate_limit: f64,
    pub nominal_pressure: f64,
    pub failed_pressure: f64,
    pub sensor_noise: f64,
    pub sensor_quantum: f64,
    pub detection_threshold: f64,
    /// Filtered command level that engages the actuators.
    pub engage_guard: f64,
    pub gain_table: LookupTable,
    pub requirement: RequirementParams,
    pub seed: u64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            duration: 10.0,
            step: 0.01,
            command: square_wave(1.0, 4.0, 1.0, 8.0),
            prefilter_tau: 0.15,
            actuator_tau: 0.1,
            rate_limit: 20.0,
            nominal_pressure: 3.0,
            failed_pressure: 0.1,
            sensor_noise: 0.02,
            sensor_quantum: 0.01,
            detection_threshold: 0.4,
            engage_guard: 0.3,
            gain_table: LookupTable {
                breakpoints: vec![0.0, 0.5, 1.0, 1.5, 2.0],
                values: vec![2.0, 2.0, 2.5, 3.0, 3.0],
            },
            requirement: RequirementParams {
                m: 0.3,
                n: 0.1,
                big_t: 1.2,
                t: 0.5,
            },
            seed: 0,
        }
    }
}

/// Square wave between 0 and `amplitude`, rising at `start` and toggling
/// every half period up to `stop`.
pub fn square_wave(amplitude: f64, period: f64, start: f64, stop: f64) -> Vec<CommandStep> {
    let half = period / 2.0;
    let mut steps = Vec::new();
    let mut k = 0usize;
    loop {
        let time = start + k as f64 * half;
        if time > stop + 1e-9 {
            break;
        }
        let amplitude = if k % 2 == 0 { amplitude } else { 0.0 };
        steps.push(CommandStep { time, amplitude });
        k += 1;
    }
    steps
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        let bad = |m: &str| Err(PlantError::InvalidConfig(m.to_string()));
        let positive = [
            ("duration", self.duration),
            ("step", self.step),
            ("prefilter_tau", self.prefilter_tau),
            ("actuator_tau", self.actuator_tau),
            ("rate_limit", self.rate_limit),
            ("sensor_quantum", self.sensor_quantum),
            ("detection_threshold", self.detection_threshold),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return bad(&format!("{name} must be positive"));
        }
        if self.step > self.duration {
            return bad("step exceeds duration");
        }
        if !(self.sensor_noise >= 0.0) {
            return bad("sensor_noise must be non-negative");
        }
        let t = &self.gain_table;
        if t.breakpoints.len() < 2 || t.breakpoints.len() != t.values.len() {
            return bad("gain table needs matching breakpoint and value arrays of length >= 2");
        }
        if t.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("gain table breakpoints must be strictly increasing");
        }
        if self.command.windows(2).any(|w| !(w[0].time < w[1].time)) {
            return bad("command steps must be strictly increasing in time");
        }
        Ok(())
    }

    fn command_at(&self, t: f64) -> f64 {
        self.command
            .iter()
            .take_while(|s| s.time <= t + 1e-9)
            .last()
            .map_or(0.0, |s| s.amplitude)
    }

    /// The requirement with this configuration's thresholds filled in.
    pub fn requirement_text(&self) -> String {
        let p = &self.requirement;
        format!(
            "alw (rise(cmd >= {}) -> ev[0,{}] alw[0,{}] (abs(cmd - left_act) <= {}))",
            p.m, p.big_t, p.t, p.n
        )
    }

    /// The manifest describing every emitted variable.
    pub fn manifest(&self) -> ModelManifest {
        let real = |name: &str, block: &str| {
            VariableMeta::new(name, Domain::Real, VarKind::PlainSignal, block)
        };
        let boolean = |name: &str, block: &str| {
            VariableMeta::new(name, Domain::Boolean, VarKind::PlainSignal, block)
        };
        let labels = |v: &[&str]| Domain::Enum(v.iter().map(|s| s.to_string()).collect());
        let mut vars = Vec::new();
        for s in SensorId::ALL {
            let block = format!("plant/sensors/{}", s.name());
            vars.push(real(s.name(), &block));
            vars.push(boolean(&format!("{}_fail", s.name()), &block));
        }
        vars.push(real("cmd", "plant/pilot"));
        vars.push(real("cmd_filt", "plant/pilot"));
        for side in ["left", "right"] {
            let block = format!("plant/conditioning/{side}");
            vars.push(real(&format!("{side}_pos"), &block));
            vars.push(boolean(&format!("{side}_healthy"), &block));
        }
        let modes = "plant/controller/mode_logic";
        vars.push(VariableMeta::new(
            "mode",
            labels(&["2", "3", "4"]),
            VarKind::PlainSignal,
            modes,
        ));
        vars.push(VariableMeta::new(
            "sm_location",
            labels(&LOCATIONS),
            VarKind::SmLocation,
            modes,
        ));
        vars.push(VariableMeta::new(
            "sm_transition",
            labels(&TRANSITIONS),
            VarKind::SmTransition,
            modes,
        ));
        let cells: Vec<String> = (0..self.gain_table.cells())
            .map(|c| c.to_string())
            .collect();
        vars.push(VariableMeta::new(
            "gain_cell",
            Domain::Enum(cells),
            VarKind::LookupCellIndex,
            "plant/controller/gain_table",
        ));
        vars.push(real("gain", "plant/controller/gain_table"));
        for side in ["left", "right"] {
            vars.push(real(&format!("{side}_err"), "plant/controller/law"));
            vars.push(real(&format!("{side}_u"), "plant/controller/law"));
        }
        for c in [Channel::A, Channel::B, Channel::C] {
            vars.push(real(pressure_name(c), "plant/hydraulics"));
        }
        vars.push(real("left_act", "plant/actuators/left"));
        vars.push(real("right_act", "plant/actuators/right"));
        let blocks = Block::node(
            "plant",
            vec![
                Block::node(
                    "sensors",
                    SensorId::ALL
                        .iter()
                        .map(|s| Block::leaf(s.name()))
                        .collect(),
                ),
                Block::leaf("pilot"),
                Block::node(
                    "conditioning",
                    vec![Block::leaf("left"), Block::leaf("right")],
                ),
                Block::node(
                    "controller",
                    vec![
                        Block::leaf("mode_logic"),
                        Block::leaf("gain_table"),
                        Block::leaf("law"),
                    ],
                ),
                Block::leaf("hydraulics"),
                Block::node("actuators", vec![Block::leaf("left"), Block::leaf("right")]),
            ],
        );
        ModelManifest::new(blocks, vars, self.requirement_text(), self.requirement)
            .expect("plant manifest is well formed")
    }
}

const LOCATIONS: [&str; 3] = ["Passive", "Standby", "Active"];
const TRANSITIONS: [&str; 4] = ["none", "engage", "release", "isolate"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    Passive,
    Standby,
    Active,
}

impl Location {
    fn code(self) -> f64 {
        self as usize as f64
    }

    fn engaged(self) -> bool {
        self != Location::Passive
    }
}

fn validate_faults(config: &PlantConfig, faults: &[FaultSpec]) -> Result<(), PlantError> {
    for f in faults {
        if !(0.0..=config.duration).contains(&f.at) {
            return Err(PlantError::InvalidFault(format!(
                "activation time {} outside [0, {}]",
                f.at, config.duration
            )));
        }
        if let FaultKind::LookupEntryError { cell, .. } = f.kind {
            if cell >= config.gain_table.values.len() {
                return Err(PlantError::InvalidFault(format!(
                    "lookup entry {cell} does not exist"
                )));
            }
        }
    }
    Ok(())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Fixed-step explicit Euler run of the plant under `faults`.
pub fn simulate(
    config: &PlantConfig,
    faults: &[FaultSpec],
) -> Result<(Trace, ModelManifest), PlantError> {
    config.validate()?;
    validate_faults(config, faults)?;
    let manifest = config.manifest();
    let dt = config.step;
    let steps = (config.duration / dt).round() as usize;
    let active = |f: &FaultSpec, t: f64| t + 1e-9 >= f.at;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let quantize = |v: f64| (v / config.sensor_quantum).round() * config.sensor_quantum;

    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); manifest.variables.len()];
    let col = |name: &str| manifest.position(name).expect("declared variable");
    let sensor_col: Vec<(usize, usize)> = SensorId::ALL
        .iter()
        .map(|s| (col(s.name()), col(&format!("{}_fail", s.name()))))
        .collect();
    let (c_cmd, c_filt) = (col("cmd"), col("cmd_filt"));
    let c_pos = [col("left_pos"), col("right_pos")];
    let c_healthy = [col("left_healthy"), col("right_healthy")];
    let (c_mode, c_loc, c_tr) = (col("mode"), col("sm_location"), col("sm_transition"));
    let (c_cell, c_gain) = (col("gain_cell"), col("gain"));
    let c_err = [col("left_err"), col("right_err")];
    let c_u = [col("left_u"), col("right_u")];
    let c_p = [col("p_a"), col("p_b"), col("p_c")];
    let c_act = [col("left_act"), col("right_act")];

    let mut cmd_filt = 0.0;
    let mut prev_cmd = 0.0;
    let mut act = [0.0f64; 2];
    let mut est = [0.0f64; 2];
    let mut u = [0.0f64; 2];
    let mut pressure = [config.nominal_pressure; 3];
    let mut failed = [false; 4];
    let mut location = Location::Passive;
    let mut times = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        let t = k as f64 * dt;
        times.push(t);
        // integrate from the previous instant
        if k > 0 {
            cmd_filt += dt * (prev_cmd - cmd_filt) / config.prefilter_tau;
            for side in 0..2 {
                let supply = if side == 0 {
                    pressure[0].max(pressure[1])
                } else {
                    pressure[1].max(pressure[2])
                };
                let limit = config.rate_limit * supply / config.nominal_pressure;
                let rate = ((u[side] - act[side]) / config.actuator_tau).clamp(-limit, limit);
                act[side] += dt * rate;
            }
        }
        let cmd = config.command_at(t);
        prev_cmd = cmd;

        pressure = [config.nominal_pressure; 3];
        let mut guard = config.engage_guard;
        let mut table = config.gain_table.values.clone();
        for f in faults.iter().filter(|f| active(f, t)) {
            match f.kind {
                FaultKind::LowPressure { channel } => {
                    pressure[channel as usize] = config.failed_pressure
                }
                FaultKind::GuardShift { delta } => guard += delta,
                FaultKind::LookupEntryError { cell, delta } => table[cell] += delta,
                _ => {}
            }
        }

        // every sensor draws noise each step so faults never shift the stream
        let mut raw = [0.0f64; 4];
        for s in SensorId::ALL {
            let noise = rng.gen_range(-config.sensor_noise..=config.sensor_noise);
            let mut v = quantize(act[s.side()] + noise);
            for f in faults.iter().filter(|f| active(f, t)) {
                match f.kind {
                    FaultKind::SensorStuck { sensor, value } if sensor == s => v = value,
                    FaultKind::SensorOutlier { sensor, offset } if sensor == s => {
                        v = quantize(act[s.side()] + noise + offset)
                    }
                    _ => {}
                }
            }
            raw[s.index()] = v;
        }

        let mut healthy = [false; 2];
        for side in 0..2 {
            let predicted = if k == 0 {
                0.0
            } else {
                est[side] + dt * (u[side] - est[side]) / config.actuator_tau
            };
            let members: Vec<SensorId> = SensorId::ALL
                .iter()
                .copied()
                .filter(|s| s.side() == side)
                .collect();
            for s in &members {
                if (raw[s.index()] - predicted).abs() > config.detection_threshold {
                    failed[s.index()] = true;
                }
            }
            let good: Vec<f64> = members
                .iter()
                .filter(|s| !failed[s.index()])
                .map(|s| raw[s.index()])
                .collect();
            healthy[side] = !good.is_empty();
            let all: Vec<f64> = members.iter().map(|s| raw[s.index()]).collect();
            est[side] = median(if healthy[side] { &good } else { &all });
        }

        let transition = if !(healthy[0] && healthy[1]) && location != Location::Active {
            location = Location::Active;
            3
        } else if location == Location::Passive && cmd_filt >= guard {
            location = Location::Standby;
            1
        } else if location == Location::Standby && cmd_filt < guard {
            location = Location::Passive;
            2
        } else {
            0
        };

        let (cell, gain) = config.gain_table.lookup(cmd_filt.abs(), &table);
        let mut err = [0.0f64; 2];
        for side in 0..2 {
            err[side] = cmd_filt - est[side];
            u[side] = if location.engaged() {
                cmd_filt + gain * err[side]
            } else {
                0.0
            };
        }

        for (s, &(c_raw, c_fail)) in SensorId::ALL.iter().zip(&sensor_col) {
            columns[c_raw].push(raw[s.index()]);
            columns[c_fail].push(f64::from(u8::from(failed[s.index()])));
        }
        columns[c_cmd].push(cmd);
        columns[c_filt].push(cmd_filt);
        for side in 0..2 {
            columns[c_pos[side]].push(est[side]);
            columns[c_healthy[side]].push(f64::from(u8::from(healthy[side])));
            columns[c_err[side]].push(err[side]);
            columns[c_u[side]].push(u[side]);
            columns[c_act[side]].push(act[side]);
        }
        columns[c_mode].push(location.code());
        columns[c_loc].push(location.code());
        columns[c_tr].push(transition as f64);
        columns[c_cell].push(cell as f64);
        columns[c_gain].push(gain);
        for (c, p) in c_p.iter().zip(pressure) {
            columns[*c].push(p);
        }
    }

    let signals = manifest
        .variables
        .iter()
        .zip(columns)
        .map(|(meta, codes)| Signal::from_codes(Arc::new(meta.clone()), times.clone(), codes))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PlantError::InvalidConfig(e.to_string()))?;
    let trace = Trace::new(signals).map_err(|e| PlantError::InvalidConfig(e.to_string()))?;
    Ok((trace, manifest))
}

/// `n` configurations on an amplitude x period grid of square-wave
/// commands; run `i` uses noise seed `seed * 1_000_003 + i`.
pub fn generate_suite(
    base: &PlantConfig,
    n: usize,
    amplitude: (f64, f64),
    period: (f64, f64),
    seed: u64,
) -> Result<Vec<PlantConfig>, PlantError> {
    if n == 0 {
        return Err(PlantError::EmptyRange("count"));
    }
    if !(amplitude.0 <= amplitude.1) {
        return Err(PlantError::EmptyRange("amplitude"));
    }
    if !(period.0 <= period.1) {
        return Err(PlantError::EmptyRange("period"));
    }
    let na = (n as f64).sqrt().ceil() as usize;
    let np = n.div_ceil(na);
    let at = |(lo, hi): (f64, f64), i: usize, count: usize| {
        if count == 1 {
            (lo + hi) / 2.0
        } else {
            lo + (hi - lo) * i as f64 / (count - 1) as f64
        }
    };
    Ok((0..n)
        .map(|i| {
            let (ia, ip) = (i % na, i / na);
            let mut cfg = base.clone();
            cfg.command = square_wave(
                at(amplitude, ia, na),
                at(period, ip, np),
                1.0,
                base.duration - 2.0,
            );
            cfg.seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            cfg
        })
        .collect())
}

/// Default suite ranges: amplitude and square-wave period in seconds.
pub const AMPLITUDE_RANGE: (f64, f64) = (0.6, 1.6);
pub const PERIOD_RANGE: (f64, f64) = (3.0, 6.0);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_wave_alternates() {
        let s = square_wave(1.5, 4.0, 1.0, 8.0);
        let times: Vec<f64> = s.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(s[0].amplitude, 1.5);
        assert_eq!(s[1].amplitude, 0.0);
    }

    #[test]
    fn lookup_interpolates_and_clamps() {
        let t = LookupTable {
            breakpoints: vec![0.0, 1.0, 2.0],
            values: vec![1.0, 3.0, 4.0],
        };
        assert_eq!(t.lookup(0.5, &t.values), (0, 2.0));
        assert_eq!(t.lookup(1.0, &t.values), (1, 3.0));
        assert_eq!(t.lookup(5.0, &t.values), (1, 4.0));
        assert_eq!(t.lookup(-1.0, &t.values), (0, 1.0));
    }

    #[test]
    fn fault_json_shape() {
        let faults = parse_faults(
            r#"[{"kind":"SensorStuck","sensor":"left_inner","value":-1.0,"at":2.0},
                {"kind":"GuardShift","delta":0.5,"at":0.0}]"#,
        )
        .unwrap();
        assert_eq!(
            faults[0],
            FaultSpec::new(
                FaultKind::SensorStuck {
                    sensor: SensorId::LeftInner,
                    value: -1.0
                },
                2.0
            )
        );
        assert_eq!(faults[1].kind, FaultKind::GuardShift { delta: 0.5 });
        assert!(parse_faults("[{\"kind\":\"Meteor\",\"at\":1}]").is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = PlantConfig::default();
        c.step = 0.0;
        assert!(matches!(c.validate(), Err(PlantError::InvalidConfig(_))));
        let mut c = PlantConfig::default();
        c.gain_table.breakpoints = vec![0.0, 0.0, 1.0, 2.0, 3.0];
        assert!(c.validate().is_err());
        let late = FaultSpec::new(FaultKind::GuardShift { delta: 1.0 }, 11.0);
        assert!(matches!(
            simulate(&PlantConfig::default(), &[late]),
            Err(PlantError::InvalidFault(_))
        ));
    }
}
