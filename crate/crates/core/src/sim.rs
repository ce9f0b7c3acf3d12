//! Synchronous round engine, assumption validation and convergence diagnostics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::attack::{attack_broadcast, AttackScript};
use crate::drem::{
    drem_transform, measure, pe_margin, ParameterVector, RegressorKind, RegressorSource,
    RegressorWindow,
};
use crate::error::{Error, Result};
use crate::graph::{
    f_local_violations, robustness_witness, Digraph, NodeSet, DEFAULT_ENUMERATION_CAP,
};
use crate::rcta::{sensor_step, Inbox, Role, SensorState, WeightPolicy};

/// Default horizon.
pub const DEFAULT_ROUNDS: usize = 500;

/// Window length `T` and level `Delta` used to probe persistent excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeProbe {
    pub window: usize,
    pub level: f64,
}

impl Default for PeProbe {
    fn default() -> Self {
        PeProbe {
            window: 4,
            level: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorBehavior {
    Normal { regressor: RegressorKind, mu: f64 },
    Faulty { attack: AttackScript },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub behavior: SensorBehavior,
    /// Initial estimate; ignored for faulty sensors.
    pub initial: Vec<f64>,
}

impl SensorSpec {
    pub fn role(&self) -> Role {
        match self.behavior {
            SensorBehavior::Normal { .. } => Role::Normal,
            SensorBehavior::Faulty { .. } => Role::Faulty,
        }
    }
}

/// Everything needed to simulate one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: Digraph,
    /// Ground truth, never shown to sensors.
    pub theta: ParameterVector,
    pub f: usize,
    /// Claimed persistently excited set.
    pub s_set: NodeSet,
    /// Indexed by node.
    pub sensors: Vec<SensorSpec>,
    pub rounds: usize,
    pub weights: WeightPolicy,
    pub pe_probe: PeProbe,
    /// Salt mixed into every random attack stream.
    pub seed: u64,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn faulty(&self) -> NodeSet {
        self.nodes_with(Role::Faulty)
    }

    pub fn normal(&self) -> NodeSet {
        self.nodes_with(Role::Normal)
    }

    fn nodes_with(&self, role: Role) -> NodeSet {
        self.sensors
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role() == role)
            .map(|(i, _)| i)
            .collect()
    }

    /// Structural well-formedness: sizes, dimensions, gains and sets.
    pub fn check(&self) -> Result<()> {
        let n = self.graph.node_count();
        let d = self.dim();
        if self.sensors.len() != n {
            return Err(Error::InvalidScenario(format!(
                "{} sensor blocks for a graph with {n} nodes",
                self.sensors.len()
            )));
        }
        if self.s_set.is_empty() {
            return Err(Error::InvalidScenario("the set S must be nonempty".into()));
        }
        if let Some(v) = self.s_set.iter().find(|&v| v >= n) {
            return Err(Error::InvalidScenario(format!(
                "S contains unknown node {v}"
            )));
        }
        self.weights.validate()?;
        if self.pe_probe.window == 0 || !(self.pe_probe.level > 0.0) {
            return Err(Error::InvalidScenario(
                "PE probe needs a positive window and level".into(),
            ));
        }
        for (i, sensor) in self.sensors.iter().enumerate() {
            let at = |e: Error| Error::InvalidScenario(format!("sensor {i}: {e}"));
            match &sensor.behavior {
                SensorBehavior::Normal { regressor, mu } => {
                    let rd = regressor.dim().map_err(at)?;
                    if rd != d {
                        return Err(at(Error::DimensionMismatch {
                            expected: d,
                            found: rd,
                        }));
                    }
                    SensorState::normal(sensor.initial.clone(), *mu).map_err(at)?;
                    if sensor.initial.len() != d {
                        return Err(at(Error::DimensionMismatch {
                            expected: d,
                            found: sensor.initial.len(),
                        }));
                    }
                }
                SensorBehavior::Faulty { attack } => {
                    let ad = attack.dim().map_err(at)?;
                    if ad != d {
                        return Err(at(Error::DimensionMismatch {
                            expected: d,
                            found: ad,
                        }));
                    }
                }
            }
        }
        Ok(())
    }
}

/// State of the network at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub round: usize,
    /// Estimate held by each sensor at this round; broadcast value for faulty sensors.
    pub estimates: Vec<Vec<f64>>,
    /// `y_i(k)` for normal sensors.
    pub measurements: Vec<Option<f64>>,
    /// `delta_i(k)` for normal sensors.
    pub deltas: Vec<Option<f64>>,
    /// Per normal sensor and coordinate, the senders retained while moving to round `k + 1`.
    pub retained: Vec<Option<Vec<Vec<usize>>>>,
    /// `estimate - theta` per sensor.
    pub errors: Vec<Vec<f64>>,
    pub error_norms: Vec<f64>,
    /// Per coordinate, the largest absolute error over normal sensors.
    pub max_error: Vec<f64>,
}

impl RoundTrace {
    fn new(round: usize, estimates: Vec<Vec<f64>>, theta: &[f64], normal: &NodeSet) -> Self {
        let n = estimates.len();
        let errors: Vec<Vec<f64>> = estimates
            .iter()
            .map(|e| e.iter().zip(theta).map(|(a, b)| a - b).collect())
            .collect();
        let error_norms = errors
            .iter()
            .map(|e| libm::sqrt(e.iter().map(|x| x * x).sum::<f64>()))
            .collect();
        let max_error = (0..theta.len())
            .map(|l| {
                normal
                    .iter()
                    .map(|i| libm::fabs(errors[i][l]))
                    .fold(0.0, f64::max)
            })
            .collect();
        RoundTrace {
            round,
            estimates,
            measurements: vec![None; n],
            deltas: vec![None; n],
            retained: vec![None; n],
            errors,
            error_norms,
            max_error,
        }
    }
}

/// Round-by-round executor for one scenario.
///
/// Every round reads only round-`k` broadcasts and writes round-`k + 1`
/// estimates, so the order in which sensors are updated is irrelevant.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    round: usize,
    estimates: Vec<Vec<f64>>,
    sources: Vec<Option<RegressorSource>>,
    windows: Vec<Option<RegressorWindow>>,
    attacks: Vec<Option<AttackScript>>,
    normal: NodeSet,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.check()?;
        let d = scenario.dim();
        let mut sources = Vec::new();
        let mut windows = Vec::new();
        let mut attacks = Vec::new();
        let mut estimates = Vec::new();
        for sensor in &scenario.sensors {
            match &sensor.behavior {
                SensorBehavior::Normal { regressor, .. } => {
                    sources.push(Some(RegressorSource::new(regressor.clone())));
                    windows.push(Some(RegressorWindow::new(d)));
                    attacks.push(None);
                    estimates.push(sensor.initial.clone());
                }
                SensorBehavior::Faulty { attack } => {
                    sources.push(None);
                    windows.push(None);
                    let script = attack.reseeded(scenario.seed);
                    estimates.push(attack_broadcast(&script, 0, None));
                    attacks.push(Some(script));
                }
            }
        }
        Ok(Simulation {
            scenario,
            round: 0,
            estimates,
            sources,
            windows,
            attacks,
            normal: scenario.normal(),
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn estimates(&self) -> &[Vec<f64>] {
        &self.estimates
    }

    /// Executes round `k`, updating normal sensors in `order`, and returns its trace.
    pub fn step(&mut self, order: &[usize]) -> Result<RoundTrace> {
        let sc = self.scenario;
        let n = sc.graph.node_count();
        let k = self.round;
        let mut trace = RoundTrace::new(k, self.estimates.clone(), &sc.theta, &self.normal);

        let mut drems = vec![None; n];
        for &i in order {
            let Some(source) = self.sources[i].as_mut() else {
                continue;
            };
            let phi = source.at(k as u64);
            let y = measure(&sc.theta, &phi).map_err(|e| at_round(k, i, e))?;
            let window = self.windows[i].as_mut().expect("normal sensor");
            window.push(phi, y).map_err(|e| at_round(k, i, e))?;
            let drem = drem_transform(window);
            trace.measurements[i] = Some(y);
            trace.deltas[i] = Some(drem.delta);
            drems[i] = Some(drem);
        }

        let mut next = self.estimates.clone();
        for &i in order {
            let SensorBehavior::Normal { mu, .. } = sc.sensors[i].behavior else {
                continue;
            };
            let mut inbox = Inbox::new();
            for &j in sc.graph.in_neighbor_slice(i) {
                let value = match &self.attacks[j] {
                    Some(script) => attack_broadcast(script, k as u64, Some(i)),
                    None => self.estimates[j].clone(),
                };
                inbox.push(j, value).map_err(|e| at_round(k, i, e))?;
            }
            let state = SensorState {
                estimate: self.estimates[i].clone(),
                mu,
                role: Role::Normal,
            };
            let drem = drems[i]
                .as_ref()
                .expect("DREM computed for every normal sensor");
            let out = sensor_step(
                &state,
                &inbox,
                drem,
                sc.f,
                sc.graph.in_degree(i),
                &sc.weights,
            )
            .map_err(|e| at_round(k, i, e))?;
            next[i] = out.state.estimate;
            trace.retained[i] = Some(out.retained);
        }
        for (i, script) in self.attacks.iter().enumerate() {
            if let Some(script) = script {
                next[i] = attack_broadcast(script, k as u64 + 1, None);
            }
        }
        self.estimates = next;
        self.round += 1;
        Ok(trace)
    }

    /// Trace of the current state without advancing.
    pub fn snapshot(&self) -> RoundTrace {
        RoundTrace::new(
            self.round,
            self.estimates.clone(),
            &self.scenario.theta,
            &self.normal,
        )
    }
}

fn at_round(round: usize, sensor: usize, e: Error) -> Error {
    Error::AtRound {
        round,
        sensor,
        source: alloc::boxed::Box::new(e),
    }
}

/// Runs the full horizon, returning traces for rounds `0..=rounds`.
///
/// The last trace only carries estimates and errors.
pub fn run(scenario: &Scenario) -> Result<Vec<RoundTrace>> {
    let order: Vec<usize> = (0..scenario.graph.node_count()).collect();
    run_with_order(scenario, &order)
}

/// [`run`] with an explicit per-round sensor evaluation order (a permutation of all nodes).
pub fn run_with_order(scenario: &Scenario, order: &[usize]) -> Result<Vec<RoundTrace>> {
    let n = scenario.graph.node_count();
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || core::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument(format!(
                "evaluation order is not a permutation of 0..{n}"
            )));
        }
    }
    if order.len() != n {
        return Err(Error::InvalidArgument(format!(
            "evaluation order is not a permutation of 0..{n}"
        )));
    }
    let mut sim = Simulation::new(scenario)?;
    let mut traces = Vec::with_capacity(scenario.rounds + 1);
    for _ in 0..scenario.rounds {
        traces.push(sim.step(order)?);
    }
    traces.push(sim.snapshot());
    Ok(traces)
}

/// Outcome of the strong `(3f + 1)`-robustness check.
#[derive(Debug, Clone, PartialEq)]
pub enum RobustnessVerdict {
    Passed,
    /// A nonempty subset of `V \ S` that is not `(3f + 1)`-reachable.
    Failed {
        witness: NodeSet,
    },
    /// `|V \ S|` exceeded the enumeration cap.
    Undecided {
        outside: usize,
        cap: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeVerdict {
    pub sensor: usize,
    pub in_s: bool,
    /// Minimum windowed sum of `delta^2` over the probed rounds.
    pub margin: f64,
    pub passed: bool,
}

/// Verdicts on the attack, excitation, topology and nonempty-`S_R` assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub required_r: usize,
    pub robustness: RobustnessVerdict,
    pub pe_window: usize,
    pub pe_level: f64,
    /// One verdict per normal sensor; only members of `S` are required to pass.
    pub pe: Vec<PeVerdict>,
    /// Normal sensors with more than `f` faulty in-neighbors.
    pub f_local_violations: Vec<usize>,
    /// `S` intersected with the normal sensors.
    pub s_normal: NodeSet,
}

impl ValidationReport {
    pub fn robustness_passed(&self) -> bool {
        self.robustness == RobustnessVerdict::Passed
    }

    pub fn pe_passed(&self) -> bool {
        self.pe.iter().filter(|v| v.in_s).all(|v| v.passed)
    }

    pub fn f_local_passed(&self) -> bool {
        self.f_local_violations.is_empty()
    }

    pub fn s_normal_nonempty(&self) -> bool {
        !self.s_normal.is_empty()
    }

    pub fn all_passed(&self) -> bool {
        self.robustness_passed()
            && self.pe_passed()
            && self.f_local_passed()
            && self.s_normal_nonempty()
    }
}

/// Checks a scenario against the convergence assumptions.
///
/// Excitation is probed by dry-running every normal sensor's regressor over
/// rounds `d - 1 .. max(rounds, d - 1 + T)`, skipping the zero-padded warm-up.
pub fn validate(scenario: &Scenario, probe: PeProbe) -> Result<ValidationReport> {
    scenario.check()?;
    if probe.window == 0 || !(probe.level > 0.0) {
        return Err(Error::InvalidArgument(
            "PE probe needs a positive window and level".into(),
        ));
    }
    let required_r = 3 * scenario.f + 1;
    let robustness = match robustness_witness(
        &scenario.graph,
        &scenario.s_set,
        required_r,
        DEFAULT_ENUMERATION_CAP,
    ) {
        Ok(None) => RobustnessVerdict::Passed,
        Ok(Some(witness)) => RobustnessVerdict::Failed { witness },
        Err(Error::EnumerationCap { outside, cap }) => {
            RobustnessVerdict::Undecided { outside, cap }
        }
        Err(e) => return Err(e),
    };

    let d = scenario.dim();
    let start = d - 1;
    let end = scenario.rounds.max(start + probe.window);
    let mut pe = Vec::new();
    for (i, sensor) in scenario.sensors.iter().enumerate() {
        let SensorBehavior::Normal { regressor, .. } = &sensor.behavior else {
            continue;
        };
        let mut source = RegressorSource::new(regressor.clone());
        let mut window = RegressorWindow::new(d);
        let mut deltas = Vec::with_capacity(end - start);
        for k in 0..end {
            let phi = source.at(k as u64);
            let y = measure(&scenario.theta, &phi)?;
            window.push(phi, y)?;
            if k >= start {
                deltas.push(drem_transform(&window).delta);
            }
        }
        let margin = pe_margin(&deltas, probe.window)?;
        pe.push(PeVerdict {
            sensor: i,
            in_s: scenario.s_set.contains(i),
            margin,
            passed: margin >= probe.level,
        });
    }

    let faulty = scenario.faulty();
    Ok(ValidationReport {
        required_r,
        robustness,
        pe_window: probe.window,
        pe_level: probe.level,
        pe,
        f_local_violations: f_local_violations(&scenario.graph, &faulty, scenario.f),
        s_normal: scenario.s_set.difference(&faulty),
    })
}

/// `m[k][l]`: the max-error metric per round and coordinate.
pub fn max_error_history(traces: &[RoundTrace]) -> Vec<Vec<f64>> {
    traces.iter().map(|t| t.max_error.clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Window lengths `W` for the contraction ratio.
    pub windows: Vec<usize>,
    /// Allowed absolute increase of `m` between consecutive rounds.
    pub tolerance: f64,
    /// Values at or below `noise_floor * max_k m(k)` are treated as converged
    /// and excluded from ratio and fit computations.
    pub noise_floor: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            windows: vec![1, 5, 10, 20, 50],
            tolerance: 1e-12,
            noise_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    /// `m(round + 1) > m(round) + tolerance`.
    pub round: usize,
    pub increase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateDiagnostics {
    pub coordinate: usize,
    pub initial: f64,
    pub last: f64,
    pub violations: Vec<MonotonicityViolation>,
    /// `(W, rho(W))`; `None` when no window starts above the noise floor.
    pub contraction: Vec<(usize, Option<f64>)>,
    /// Least-squares slope of `ln m(k)` per round over the tail; `None` when
    /// fewer than three usable points exist.
    pub fit_exponent: Option<f64>,
}

impl CoordinateDiagnostics {
    /// Smallest window with `rho(W) < 1`.
    pub fn contracting_window(&self) -> Option<(usize, f64)> {
        self.contraction
            .iter()
            .filter_map(|&(w, rho)| rho.filter(|&r| r < 1.0).map(|r| (w, r)))
            .next()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub rounds: usize,
    pub coordinates: Vec<CoordinateDiagnostics>,
}

impl DiagnosticReport {
    pub fn violation_count(&self) -> usize {
        self.coordinates.iter().map(|c| c.violations.len()).sum()
    }
}

/// Monotonicity, contraction ratios and geometric-rate fit of `m[k][l]`.
pub fn diagnostics(history: &[Vec<f64>], config: &DiagnosticsConfig) -> DiagnosticReport {
    let d = history.first().map_or(0, Vec::len);
    let coordinates = (0..d)
        .map(|l| {
            let m: Vec<f64> = history.iter().map(|row| row[l]).collect();
            coordinate_diagnostics(l, &m, config)
        })
        .collect();
    DiagnosticReport {
        rounds: history.len(),
        coordinates,
    }
}

fn coordinate_diagnostics(
    l: usize,
    m: &[f64],
    config: &DiagnosticsConfig,
) -> CoordinateDiagnostics {
    let violations = m
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + config.tolerance)
        .map(|(k, w)| MonotonicityViolation {
            round: k,
            increase: w[1] - w[0],
        })
        .collect();

    let peak = m.iter().copied().fold(0.0, f64::max);
    let floor = config.noise_floor * peak;
    let active = |v: f64| v > floor && v > 0.0;

    let contraction = config
        .windows
        .iter()
        .map(|&w| {
            let rho = (0..m.len().saturating_sub(w))
                .filter(|&k| w > 0 && active(m[k]))
                .map(|k| m[k + w] / m[k])
                .fold(None, |acc: Option<f64>, r| {
                    Some(acc.map_or(r, |a| a.max(r)))
                });
            (w, rho)
        })
        .collect();

    let live: Vec<usize> = (0..m.len()).filter(|&k| active(m[k])).collect();
    let tail = &live[live.len() / 2..];
    let fit_exponent = if tail.len() >= 3 {
        let points: Vec<(f64, f64)> = tail.iter().map(|&k| (k as f64, libm::log(m[k]))).collect();
        Some(slope(&points))
    } else {
        None
    };

    CoordinateDiagnostics {
        coordinate: l,
        initial: m.first().copied().unwrap_or(0.0),
        last: m.last().copied().unwrap_or(0.0),
        violations,
        contraction,
        fit_exponent,
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
