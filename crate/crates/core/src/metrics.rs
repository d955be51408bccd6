//! Process scheduling and resource telemetry model.
//!
//! The detector runs continuously once started. On board, the language model
//! stays loaded but idle and only decodes while a prompt is being planned; in
//! the cloud configuration it is never loaded locally. Telemetry is a
//! piecewise-constant function of that state.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorState {
    Off,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmState {
    Unloaded,
    LoadedIdle,
    Decoding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deployment {
    Onboard,
    Cloud,
}

impl fmt::Display for Deployment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Deployment::Onboard => "onboard",
            Deployment::Cloud => "cloud",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessState {
    pub detector: DetectorState,
    pub llm: LlmState,
    pub config: Deployment,
}

impl ProcessState {
    /// State at power-on: detector off, model loaded (on board) or absent.
    pub fn initial(config: Deployment) -> Self {
        let llm = match config {
            Deployment::Onboard => LlmState::LoadedIdle,
            Deployment::Cloud => LlmState::Unloaded,
        };
        ProcessState { detector: DetectorState::Off, llm, config }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessEvent {
    PromptReceived,
    DecodeFinished,
    DetectorStarted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal transition {event:?} from {state:?}")]
pub struct IllegalTransition {
    pub state: ProcessState,
    pub event: ProcessEvent,
}

pub fn process_transition(state: ProcessState, event: ProcessEvent) -> Result<ProcessState, IllegalTransition> {
    let illegal = Err(IllegalTransition { state, event });
    let next = match (event, state.config, state.llm) {
        (ProcessEvent::DetectorStarted, _, _) => {
            if state.detector == DetectorState::Active {
                return illegal;
            }
            ProcessState { detector: DetectorState::Active, ..state }
        }
        // the remote call replaces local decoding
        (ProcessEvent::PromptReceived | ProcessEvent::DecodeFinished, Deployment::Cloud, _) => state,
        (ProcessEvent::PromptReceived, Deployment::Onboard, LlmState::LoadedIdle) => {
            ProcessState { llm: LlmState::Decoding, ..state }
        }
        (ProcessEvent::DecodeFinished, Deployment::Onboard, LlmState::Decoding) => {
            ProcessState { llm: LlmState::LoadedIdle, ..state }
        }
        _ => return illegal,
    };
    Ok(next)
}

/// Constants of the resource model. Defaults are the measured Jetson Nano
/// figures for the detector plus planner workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResourceProfile {
    pub baseline_power_w: f64,
    pub decode_power_w: f64,
    pub ram_pct: f64,
    pub swap_pct_cloud: f64,
    pub swap_pct_onboard: f64,
    pub latency_cloud_s: f64,
    pub latency_onboard_nav_s: f64,
    pub latency_onboard_manip_s: f64,
}

impl Default for ResourceProfile {
    fn default() -> Self {
        ResourceProfile {
            baseline_power_w: 6.0,
            decode_power_w: 9.2,
            ram_pct: 92.0,
            swap_pct_cloud: 25.0,
            swap_pct_onboard: 50.0,
            latency_cloud_s: 0.020,
            latency_onboard_nav_s: 8.0,
            latency_onboard_manip_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid resource profile: {0}")]
pub struct ProfileError(pub String);

impl ResourceProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let fields = [
            ("baseline_power_w", self.baseline_power_w),
            ("decode_power_w", self.decode_power_w),
            ("ram_pct", self.ram_pct),
            ("swap_pct_cloud", self.swap_pct_cloud),
            ("swap_pct_onboard", self.swap_pct_onboard),
            ("latency_cloud_s", self.latency_cloud_s),
            ("latency_onboard_nav_s", self.latency_onboard_nav_s),
            ("latency_onboard_manip_s", self.latency_onboard_manip_s),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(ProfileError(format!("{name} must be non-negative, got {v}")));
        }
        if self.decode_power_w < self.baseline_power_w {
            return Err(ProfileError("decode_power_w must be at least baseline_power_w".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Navigation,
    Manipulation,
}

impl PlanKind {
    pub fn of(plan: &crate::plan::Plan) -> Self {
        if plan.is_manipulation() {
            PlanKind::Manipulation
        } else {
            PlanKind::Navigation
        }
    }
}

pub fn decode_duration(profile: &ResourceProfile, kind: PlanKind, config: Deployment) -> f64 {
    match (config, kind) {
        (Deployment::Cloud, _) => profile.latency_cloud_s,
        (Deployment::Onboard, PlanKind::Navigation) => profile.latency_onboard_nav_s,
        (Deployment::Onboard, PlanKind::Manipulation) => profile.latency_onboard_manip_s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub t: f64,
    pub power_w: f64,
    pub ram_pct: f64,
    pub swap_pct: f64,
}

pub fn sample_resources(state: &ProcessState, profile: &ResourceProfile, t: f64) -> MetricsSample {
    debug_assert_eq!(state.detector, DetectorState::Active, "sampling requires an active detector");
    let power_w = if state.llm == LlmState::Decoding { profile.decode_power_w } else { profile.baseline_power_w };
    let swap_pct = match state.config {
        Deployment::Onboard => profile.swap_pct_onboard,
        Deployment::Cloud => profile.swap_pct_cloud,
    };
    MetricsSample { t, power_w, ram_pct: profile.ram_pct, swap_pct }
}

/// Half-open simulation-time window `[start, end)` of local decoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeInterval {
    pub start: f64,
    pub end: f64,
}

impl DecodeInterval {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub task_id: u64,
    pub kind: PlanKind,
    pub latency_s: f64,
}

/// Tracks process state over simulation time and emits fixed-rate samples.
///
/// Samples fall on the grid `k / rate_hz`. A sample at time `t` reports the
/// state in force at `t`; a transition at exactly `t` is already in force.
#[derive(Debug, Clone)]
pub struct MetricsRecorder {
    state: ProcessState,
    profile: ResourceProfile,
    rate_hz: f64,
    next_index: u64,
    samples: Vec<MetricsSample>,
    decode_intervals: Vec<DecodeInterval>,
    open_decode: Option<f64>,
    latencies: Vec<LatencyRecord>,
}

impl MetricsRecorder {
    pub const DEFAULT_RATE_HZ: f64 = 2.0;

    pub fn new(config: Deployment, profile: ResourceProfile, rate_hz: f64) -> Self {
        assert!(rate_hz > 0.0, "sampling rate must be positive");
        MetricsRecorder {
            state: ProcessState::initial(config),
            profile,
            rate_hz,
            next_index: 0,
            samples: Vec::new(),
            decode_intervals: Vec::new(),
            open_decode: None,
            latencies: Vec::new(),
        }
    }

    pub fn state(&self) -> ProcessState {
        self.state
    }

    pub fn profile(&self) -> &ResourceProfile {
        &self.profile
    }

    fn next_t(&self) -> f64 {
        self.next_index as f64 / self.rate_hz
    }

    fn emit_before(&mut self, now: f64, inclusive: bool, out: &mut Vec<MetricsSample>) {
        if self.state.detector != DetectorState::Active {
            return;
        }
        while self.next_t() < now || (inclusive && self.next_t() == now) {
            let s = sample_resources(&self.state, &self.profile, self.next_t());
            self.samples.push(s);
            out.push(s);
            self.next_index += 1;
        }
    }

    /// Apply a transition at simulation time `now`. Samples strictly before
    /// `now` are flushed with the outgoing state and returned.
    pub fn transition(&mut self, event: ProcessEvent, now: f64) -> Result<Vec<MetricsSample>, IllegalTransition> {
        let next = process_transition(self.state, event)?;
        let mut out = Vec::new();
        if event == ProcessEvent::DetectorStarted {
            // sampling starts at the first grid point at or after `now`
            self.next_index = (now * self.rate_hz).ceil() as u64;
        } else {
            self.emit_before(now, false, &mut out);
        }
        if next.llm == LlmState::Decoding && self.state.llm != LlmState::Decoding {
            self.open_decode = Some(now);
        }
        if self.state.llm == LlmState::Decoding && next.llm != LlmState::Decoding {
            if let Some(start) = self.open_decode.take() {
                self.decode_intervals.push(DecodeInterval { start, end: now });
            }
        }
        self.state = next;
        Ok(out)
    }

    /// Advance the clock to `now`, emitting every sample strictly before it.
    pub fn advance(&mut self, now: f64) -> Vec<MetricsSample> {
        let mut out = Vec::new();
        self.emit_before(now, false, &mut out);
        out
    }

    /// Emit remaining samples up to and including `now`.
    pub fn finish(&mut self, now: f64) -> Vec<MetricsSample> {
        let mut out = Vec::new();
        self.emit_before(now, true, &mut out);
        out
    }

    pub fn record_latency(&mut self, task_id: u64, kind: PlanKind, latency_s: f64) {
        self.latencies.push(LatencyRecord { task_id, kind, latency_s });
    }

    pub fn samples(&self) -> &[MetricsSample] {
        &self.samples
    }

    pub fn samples_since(&self, since: f64) -> &[MetricsSample] {
        let start = self.samples.partition_point(|s| s.t < since);
        &self.samples[start..]
    }

    pub fn decode_intervals(&self) -> &[DecodeInterval] {
        &self.decode_intervals
    }

    pub fn latencies(&self) -> &[LatencyRecord] {
        &self.latencies
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(llm: LlmState, config: Deployment) -> ProcessState {
        ProcessState { detector: DetectorState::Active, llm, config }
    }

    #[test]
    fn transitions() {
        let s = state(LlmState::LoadedIdle, Deployment::Onboard);
        assert_eq!(
            process_transition(s, ProcessEvent::PromptReceived).unwrap(),
            state(LlmState::Decoding, Deployment::Onboard)
        );
        let cloud = state(LlmState::Unloaded, Deployment::Cloud);
        assert_eq!(process_transition(cloud, ProcessEvent::PromptReceived).unwrap(), cloud);
        assert!(process_transition(s, ProcessEvent::DecodeFinished).is_err());
        assert!(process_transition(
            state(LlmState::Decoding, Deployment::Onboard),
            ProcessEvent::PromptReceived
        )
        .is_err());
        assert!(process_transition(s, ProcessEvent::DetectorStarted).is_err());
        let off = ProcessState::initial(Deployment::Onboard);
        assert_eq!(process_transition(off, ProcessEvent::DetectorStarted).unwrap(), s);
    }

    #[test]
    fn decode_durations() {
        let p = ResourceProfile::default();
        assert_eq!(decode_duration(&p, PlanKind::Navigation, Deployment::Onboard), 8.0);
        assert_eq!(decode_duration(&p, PlanKind::Manipulation, Deployment::Onboard), 10.0);
        assert_eq!(decode_duration(&p, PlanKind::Navigation, Deployment::Cloud), 0.020);
        assert_eq!(decode_duration(&p, PlanKind::Manipulation, Deployment::Cloud), 0.020);
    }

    #[test]
    fn samples() {
        let p = ResourceProfile::default();
        let s = sample_resources(&state(LlmState::Decoding, Deployment::Onboard), &p, 1.0);
        assert_eq!((s.power_w, s.ram_pct, s.swap_pct), (9.2, 92.0, 50.0));
        let s = sample_resources(&state(LlmState::LoadedIdle, Deployment::Onboard), &p, 1.0);
        assert_eq!(s.power_w, 6.0);
        let s = sample_resources(&state(LlmState::Unloaded, Deployment::Cloud), &p, 1.0);
        assert_eq!((s.power_w, s.swap_pct), (6.0, 25.0));
    }

    #[test]
    fn profile_validation() {
        assert!(ResourceProfile::default().validate().is_ok());
        let p = ResourceProfile { decode_power_w: 5.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ResourceProfile { ram_pct: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn recorder_aligns_samples_with_decode_windows() {
        let mut rec = MetricsRecorder::new(Deployment::Onboard, ResourceProfile::default(), 2.0);
        rec.transition(ProcessEvent::DetectorStarted, 0.0).unwrap();
        rec.advance(1.0);
        rec.transition(ProcessEvent::PromptReceived, 1.0).unwrap();
        rec.advance(9.0);
        rec.transition(ProcessEvent::DecodeFinished, 9.0).unwrap();
        rec.finish(10.0);
        let samples = rec.samples();
        assert_eq!(samples.len(), 21);
        assert_eq!(rec.decode_intervals(), &[DecodeInterval { start: 1.0, end: 9.0 }]);
        for s in samples {
            let expected = if (1.0..9.0).contains(&s.t) { 9.2 } else { 6.0 };
            assert_eq!(s.power_w, expected, "t = {}", s.t);
        }
        assert_eq!(rec.samples_since(9.5).len(), 2);
    }
}
