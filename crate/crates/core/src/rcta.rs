//! Per-sensor resilient combine-then-adapt update.
//!
//! For each coordinate `l` a normal sensor sorts the estimates it received,
//! drops the `f` smallest and `f` largest `l`-th entries, forms a convex
//! combination of the survivors with its own estimate, and then applies a
//! normalized LMS correction driven by the scalar DREM equation for `l`.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::drem::DremTriple;
use crate::error::{Error, Result};

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Normal,
    Faulty,
}

/// Estimate, step-size regularizer `mu` and role of one sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorState {
    pub estimate: Vec<f64>,
    pub mu: f64,
    pub role: Role,
}

impl SensorState {
    pub fn normal(estimate: Vec<f64>, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if estimate.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "estimate entries must be finite".into(),
            ));
        }
        Ok(SensorState {
            estimate,
            mu,
            role: Role::Normal,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub estimate: Vec<f64>,
}

/// Estimates received by one sensor in one round, at most one per sender.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inbox {
    messages: Vec<Message>,
}

impl Inbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sender: usize, estimate: Vec<f64>) -> Result<()> {
        if self.messages.iter().any(|m| m.sender == sender) {
            return Err(Error::InvalidArgument(format!(
                "sender {sender} already delivered a message this round"
            )));
        }
        if let Some(first) = self.messages.first() {
            if first.estimate.len() != estimate.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.estimate.len(),
                    found: estimate.len(),
                });
            }
        }
        self.messages.push(Message { sender, estimate });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }
}

impl FromIterator<(usize, Vec<f64>)> for Inbox {
    /// Panics on a duplicate sender or inconsistent dimension.
    fn from_iter<I: IntoIterator<Item = (usize, Vec<f64>)>>(iter: I) -> Self {
        let mut inbox = Inbox::new();
        for (sender, estimate) in iter {
            inbox.push(sender, estimate).expect("well-formed inbox");
        }
        inbox
    }
}

/// One value that survived trimming on some coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retained {
    pub sender: usize,
    pub value: f64,
}

/// Trims the inbox on coordinate `coord`.
///
/// Values are sorted ascending (ties broken by lower sender id); the `f`
/// smallest and then the `f` largest are removed, removing everything when
/// fewer remain. The result keeps the sorted order.
pub fn trim(inbox: &Inbox, f: usize, coord: usize) -> Vec<Retained> {
    trim_with_comparisons(inbox, f, coord).0
}

/// [`trim`], also reporting how many comparisons the sort performed.
pub fn trim_with_comparisons(inbox: &Inbox, f: usize, coord: usize) -> (Vec<Retained>, usize) {
    let mut values: Vec<Retained> = inbox
        .messages
        .iter()
        .map(|m| Retained {
            sender: m.sender,
            value: m.estimate[coord],
        })
        .collect();
    let mut comparisons = 0usize;
    values.sort_by(|a, b| {
        comparisons += 1;
        compare(a, b)
    });
    let n = values.len();
    let low = f.min(n);
    let high = f.min(n - low);
    values.truncate(n - high);
    values.drain(..low);
    (values, comparisons)
}

fn compare(a: &Retained, b: &Retained) -> Ordering {
    a.value.total_cmp(&b.value).then(a.sender.cmp(&b.sender))
}

/// Convex combination weights for one sensor and one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationWeights {
    pub self_weight: f64,
    /// One weight per retained value, in retained order.
    pub neighbor_weights: Vec<f64>,
    /// Lower bound every weight must respect.
    pub alpha: f64,
}

impl CombinationWeights {
    pub fn check(&self, retained_len: usize) -> Result<()> {
        if self.neighbor_weights.len() != retained_len {
            return Err(Error::WeightContract(format!(
                "{} neighbor weights for {} retained values",
                self.neighbor_weights.len(),
                retained_len
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::WeightContract(format!(
                "floor alpha must be positive, got {}",
                self.alpha
            )));
        }
        let below = core::iter::once(&self.self_weight)
            .chain(&self.neighbor_weights)
            .find(|&&w| !(w >= self.alpha));
        if let Some(w) = below {
            return Err(Error::WeightContract(format!(
                "weight {w} is below the floor {}",
                self.alpha
            )));
        }
        let sum: f64 = self.self_weight + self.neighbor_weights.iter().sum::<f64>();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightContract(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// Chooses combination weights for the survivors of a trim.
pub trait WeightRule {
    /// `in_degree` is the sensor's number of in-neighbors, which bounds the
    /// number of retained values and fixes the per-sensor floor.
    fn weights(&self, retained: &[Retained], in_degree: usize) -> CombinationWeights;
}

/// Shipped weight policies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WeightPolicy {
    /// Equal weight `1 / (1 + |retained|)` on the sensor and each survivor.
    #[default]
    Uniform,
    /// Fixed self weight, remainder split evenly across survivors.
    SelfWeighted { self_weight: f64 },
}

impl WeightPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightPolicy::Uniform => Ok(()),
            WeightPolicy::SelfWeighted { self_weight } => {
                if self_weight > 0.0 && self_weight < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "self weight must lie in (0, 1), got {self_weight}"
                    )))
                }
            }
        }
    }

    /// Weight floor for a sensor with `in_degree` in-neighbors.
    pub fn alpha(&self, in_degree: usize) -> f64 {
        match *self {
            WeightPolicy::Uniform => 1.0 / (1 + in_degree) as f64,
            WeightPolicy::SelfWeighted { self_weight } => {
                if in_degree == 0 {
                    self_weight
                } else {
                    self_weight.min((1.0 - self_weight) / in_degree as f64)
                }
            }
        }
    }
}

impl WeightRule for WeightPolicy {
    fn weights(&self, retained: &[Retained], in_degree: usize) -> CombinationWeights {
        let n = retained.len();
        let alpha = self.alpha(in_degree);
        let (self_weight, each) = match *self {
            WeightPolicy::Uniform => {
                let w = 1.0 / (1 + n) as f64;
                (w, w)
            }
            WeightPolicy::SelfWeighted { self_weight } if n > 0 => {
                (self_weight, (1.0 - self_weight) / n as f64)
            }
            WeightPolicy::SelfWeighted { .. } => (1.0, 0.0),
        };
        CombinationWeights {
            self_weight,
            neighbor_weights: alloc::vec![each; n],
            alpha,
        }
    }
}

/// Resilient combination of the sensor's own `l`-th entry with the survivors.
pub fn resilient_combine(
    own: f64,
    retained: &[Retained],
    weights: &CombinationWeights,
) -> Result<f64> {
    if retained.is_empty() {
        return Ok(own);
    }
    weights.check(retained.len())?;
    Ok(retained
        .iter()
        .zip(&weights.neighbor_weights)
        .fold(weights.self_weight * own, |acc, (r, w)| acc + w * r.value))
}

/// Normalized LMS correction on one coordinate.
///
/// Returns `combined + delta / (mu + delta^2) * (y_bar_l - delta * combined)`.
/// With exact data the error is scaled by [`contraction_factor`].
pub fn adapt(combined: f64, y_bar_l: f64, delta: f64, mu: f64) -> f64 {
    debug_assert!(mu > 0.0);
    combined + delta / (mu + delta * delta) * (y_bar_l - delta * combined)
}

/// `nu = 1 - delta^2 / (mu + delta^2)`, in `(0, 1]` for `mu > 0`.
pub fn contraction_factor(delta: f64, mu: f64) -> f64 {
    1.0 - delta * delta / (mu + delta * delta)
}

/// Outcome of one sensor update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SensorState,
    /// Sender ids retained on each coordinate, in sorted-value order.
    pub retained: Vec<Vec<usize>>,
}

/// One full update of a normal sensor: trim, combine and adapt on every coordinate.
pub fn sensor_step<W: WeightRule + ?Sized>(
    state: &SensorState,
    inbox: &Inbox,
    drem: &DremTriple,
    f: usize,
    in_degree: usize,
    rule: &W,
) -> Result<StepOutcome> {
    if state.role != Role::Normal {
        return Err(Error::InvalidArgument(
            "only normal sensors run the update".into(),
        ));
    }
    let d = state.estimate.len();
    if drem.y_bar.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: drem.y_bar.len(),
        });
    }
    if let Some(m) = inbox.messages().first() {
        if m.estimate.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.estimate.len(),
            });
        }
    }
    let mut estimate = Vec::with_capacity(d);
    let mut retained_ids = Vec::with_capacity(d);
    for l in 0..d {
        let retained = trim(inbox, f, l);
        let weights = rule.weights(&retained, in_degree);
        let combined = resilient_combine(state.estimate[l], &retained, &weights)?;
        estimate.push(adapt(combined, drem.y_bar[l], drem.delta, state.mu));
        retained_ids.push(retained.iter().map(|r| r.sender).collect());
    }
    Ok(StepOutcome {
        state: SensorState {
            estimate,
            mu: state.mu,
            role: Role::Normal,
        },
        retained: retained_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drem::{drem_transform, measure, ParameterVector, RegressorWindow};
    use alloc::vec;

    fn scalar_inbox(values: &[f64]) -> Inbox {
        values
            .iter()
            .enumerate()
            .map(|(j, &v)| (j + 10, vec![v]))
            .collect()
    }

    fn values(r: &[Retained]) -> Vec<f64> {
        r.iter().map(|x| x.value).collect()
    }

    fn inert_drem(d: usize) -> DremTriple {
        drem_transform(&RegressorWindow::new(d))
    }

    #[test]
    fn trim_examples() {
        assert_eq!(
            values(&trim(&scalar_inbox(&[1.0, 5.0, 3.0, 9.0, 2.0]), 1, 0)),
            vec![2.0, 3.0, 5.0]
        );
        assert!(trim(&scalar_inbox(&[4.0, 4.0, 4.0]), 2, 0).is_empty());
        assert!(trim(&Inbox::new(), 3, 0).is_empty());
        assert_eq!(trim(&scalar_inbox(&[1.0, 2.0]), 0, 0).len(), 2);
    }

    #[test]
    fn trim_breaks_ties_by_sender() {
        let inbox: Inbox = [
            (7, vec![1.0]),
            (3, vec![1.0]),
            (5, vec![1.0]),
            (1, vec![0.0]),
        ]
        .into_iter()
        .collect();
        let kept = trim(&inbox, 1, 0);
        // Sorted: (1,0.0) (3,1.0) (5,1.0) (7,1.0); drop first and last.
        assert_eq!(
            kept.iter().map(|r| r.sender).collect::<Vec<_>>(),
            vec![3, 5]
        );
    }

    #[test]
    fn inbox_rejects_duplicate_sender() {
        let mut inbox = Inbox::new();
        inbox.push(1, vec![0.0]).unwrap();
        assert!(inbox.push(1, vec![1.0]).is_err());
        assert!(inbox.push(2, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn combine_examples() {
        let policy = WeightPolicy::Uniform;
        let none: [Retained; 0] = [];
        assert_eq!(
            resilient_combine(0.7, &none, &policy.weights(&none, 3)).unwrap(),
            0.7
        );

        let kept = [
            Retained {
                sender: 1,
                value: 1.0,
            },
            Retained {
                sender: 2,
                value: 3.0,
            },
        ];
        let c = resilient_combine(0.0, &kept, &policy.weights(&kept, 2)).unwrap();
        assert!((c - 4.0 / 3.0).abs() < 1e-15);

        let same = [Retained {
            sender: 1,
            value: 2.0,
        }; 4];
        let w = WeightPolicy::SelfWeighted { self_weight: 0.4 }.weights(&same, 4);
        assert!((resilient_combine(2.0, &same, &w).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn combine_rejects_bad_weights() {
        let kept = [Retained {
            sender: 1,
            value: 1.0,
        }];
        let bad_sum = CombinationWeights {
            self_weight: 0.5,
            neighbor_weights: vec![0.6],
            alpha: 0.1,
        };
        assert!(matches!(
            resilient_combine(0.0, &kept, &bad_sum),
            Err(Error::WeightContract(_))
        ));
        let below_floor = CombinationWeights {
            self_weight: 0.95,
            neighbor_weights: vec![0.05],
            alpha: 0.1,
        };
        assert!(resilient_combine(0.0, &kept, &below_floor).is_err());
        let wrong_len = CombinationWeights {
            self_weight: 1.0,
            neighbor_weights: vec![],
            alpha: 0.1,
        };
        assert!(resilient_combine(0.0, &kept, &wrong_len).is_err());
    }

    #[test]
    fn policies_meet_their_floor() {
        for policy in [
            WeightPolicy::Uniform,
            WeightPolicy::SelfWeighted { self_weight: 0.3 },
        ] {
            for in_degree in 0..8 {
                for kept in 0..=in_degree {
                    let retained = vec![
                        Retained {
                            sender: 0,
                            value: 0.0
                        };
                        kept
                    ];
                    let w = policy.weights(&retained, in_degree);
                    if kept > 0 {
                        w.check(kept).unwrap();
                    }
                    assert!(w.self_weight >= policy.alpha(in_degree));
                }
            }
        }
        assert!(WeightPolicy::SelfWeighted { self_weight: 1.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn adapt_examples() {
        assert_eq!(adapt(1.25, 9.0, 0.0, 0.3), 1.25);
        assert_eq!(adapt(2.5, 2.5 * 1.7, 1.7, 0.3), 2.5);

        // delta = 1, mu = 0.1, theta = 2.5, combined = 0, y_bar = 2.5.
        let next = adapt(0.0, 2.5, 1.0, 0.1);
        assert!((next - 2.5 / 1.1).abs() < 1e-15);
        assert!((next - 2.272_727_272_727_272_7).abs() < 1e-15);
        let nu = contraction_factor(1.0, 0.1);
        assert!((nu - 0.090_909_090_909_090_9).abs() < 1e-15);
        assert!(((next - 2.5) - nu * (0.0 - 2.5)).abs() < 1e-15);
    }

    #[test]
    fn sensor_step_inert_round() {
        let state = SensorState::normal(vec![0.3, -0.2], 0.5).unwrap();
        let out = sensor_step(
            &state,
            &Inbox::new(),
            &inert_drem(2),
            1,
            0,
            &WeightPolicy::Uniform,
        )
        .unwrap();
        assert_eq!(out.state.estimate, state.estimate);
        assert_eq!(out.retained, vec![Vec::<usize>::new(), Vec::new()]);
    }

    #[test]
    fn sensor_step_plain_average() {
        let state = SensorState::normal(vec![1.0], 0.5).unwrap();
        let inbox: Inbox = [(4, vec![4.0])].into_iter().collect();
        let out =
            sensor_step(&state, &inbox, &inert_drem(1), 0, 1, &WeightPolicy::Uniform).unwrap();
        assert_eq!(out.state.estimate, vec![2.5]);
        assert_eq!(out.retained, vec![vec![4]]);
    }

    #[test]
    fn sensor_step_rejects_faulty_state() {
        let state = SensorState {
            estimate: vec![0.0],
            mu: 1.0,
            role: Role::Faulty,
        };
        assert!(sensor_step(
            &state,
            &Inbox::new(),
            &inert_drem(1),
            0,
            0,
            &WeightPolicy::Uniform
        )
        .is_err());
    }

    #[test]
    fn sensor_step_single_round_straight_line() {
        // Sensor with regressors [1,2] then [2,3], mu = 0.4, neighbours at
        // 1.0/-3.0/0.5 on coordinate 0 and f = 1.
        let theta = ParameterVector::new(vec![2.5, -1.0]).unwrap();
        let mut window = RegressorWindow::new(2);
        for phi in [vec![1.0, 2.0], vec![2.0, 3.0]] {
            let y = measure(&theta, &phi).unwrap();
            window.push(phi, y).unwrap();
        }
        let drem = drem_transform(&window);
        let state = SensorState::normal(vec![0.0, 0.0], 0.4).unwrap();
        let inbox: Inbox = [
            (1, vec![1.0, 7.0]),
            (2, vec![-3.0, 0.0]),
            (3, vec![0.5, -1.0]),
        ]
        .into_iter()
        .collect();
        let out = sensor_step(&state, &inbox, &drem, 1, 3, &WeightPolicy::Uniform).unwrap();

        // Hand replay: coordinate 0 keeps 0.5 -> combined 0.25; coordinate 1
        // keeps 0.0 -> combined 0.0. delta = 1, y_bar = [2.5, -1].
        let g = 1.0 / (0.4 + 1.0);
        let want0 = 0.25 + g * (2.5 - 0.25);
        let want1 = 0.0 + g * (-1.0 - 0.0);
        assert_eq!(out.retained, vec![vec![3], vec![2]]);
        assert!((out.state.estimate[0] - want0).abs() < 1e-15);
        assert!((out.state.estimate[1] - want1).abs() < 1e-15);
    }

    #[test]
    fn trim_comparisons_scale_as_n_log_n() {
        // Adversarial-ish: reverse sorted plus a shuffled variant.
        for n in [16usize, 64, 256, 1024, 4096] {
            let rev: Inbox = (0..n).map(|j| (j, vec![(n - j) as f64])).collect();
            let mixed: Inbox = (0..n).map(|j| (j, vec![((j * 7919) % n) as f64])).collect();
            for inbox in [rev, mixed] {
                let (_, count) = trim_with_comparisons(&inbox, 1, 0);
                let bound = 2.0 * n as f64 * libm::log2(n as f64);
                assert!((count as f64) <= bound, "n = {n}: {count} > {bound}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn trim_keeps_middle_band(vals in proptest::collection::vec(-100.0f64..100.0, 0..20), f in 0usize..5) {
                let inbox = scalar_inbox(&vals);
                let kept = trim(&inbox, f, 0);
                let n = vals.len();
                if n > 2 * f {
                    prop_assert_eq!(kept.len(), n - 2 * f);
                    let mut sorted = vals.clone();
                    sorted.sort_by(f64::total_cmp);
                    for r in &kept {
                        prop_assert!(r.value >= sorted[f] && r.value <= sorted[n - 1 - f]);
                    }
                } else {
                    prop_assert!(kept.is_empty());
                }
            }

            #[test]
            fn truth_is_a_fixed_point(theta_l in -10.0f64..10.0, delta in -5.0f64..5.0, mu in 0.01f64..10.0) {
                let next = adapt(theta_l, delta * theta_l, delta, mu);
                prop_assert!((next - theta_l).abs() <= 1e-12 * theta_l.abs().max(1.0));
            }

            #[test]
            fn adapt_scales_error_by_nu(theta_l in -10.0f64..10.0, combined in -10.0f64..10.0, delta in -5.0f64..5.0, mu in 0.01f64..10.0) {
                let next = adapt(combined, delta * theta_l, delta, mu);
                let nu = contraction_factor(delta, mu);
                prop_assert!(nu > 0.0 && nu <= 1.0);
                prop_assert!(((next - theta_l) - nu * (combined - theta_l)).abs() <= 1e-9);
            }
        }
    }
}
