//! Scripted Byzantine broadcasts.
//!
//! A faulty sensor ignores the estimation protocol and sends whatever its
//! script dictates. Scripts see only the round index and the receiver, never
//! the state of normal sensors.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AttackScript {
    /// The same vector every round.
    Constant { value: Vec<f64> },
    /// `offset + slope * k`.
    Ramp { offset: Vec<f64>, slope: Vec<f64> },
    /// `offset + drift * k + amplitude * sin(frequency * k + phase)`, entry-wise.
    Sinusoid {
        offset: Vec<f64>,
        drift: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        phase: Vec<f64>,
    },
    /// Independent uniform draws in `[low, high)` per entry. Keyed by
    /// `(seed, k)`, or by `(seed, k, receiver)` when `per_receiver` is set.
    RandomUniform {
        low: Vec<f64>,
        high: Vec<f64>,
        seed: u64,
        per_receiver: bool,
    },
    /// Replays `sequence`, cycling with its length.
    Replay { sequence: Vec<Vec<f64>> },
    /// Explicit vectors at listed rounds, `default` elsewhere.
    Table {
        default: Vec<f64>,
        rounds: Vec<(u64, Vec<f64>)>,
    },
    /// Different scripts for different receivers (equivocation).
    PerEdge {
        default: Box<AttackScript>,
        receivers: Vec<(usize, AttackScript)>,
    },
}

impl AttackScript {
    /// Checks internal consistency and returns the broadcast dimension.
    pub fn dim(&self) -> Result<usize> {
        let d = match self {
            AttackScript::Constant { value } => same_len(&[value])?,
            AttackScript::Ramp { offset, slope } => same_len(&[offset, slope])?,
            AttackScript::Sinusoid {
                offset,
                drift,
                amplitude,
                frequency,
                phase,
            } => same_len(&[offset, drift, amplitude, frequency, phase])?,
            AttackScript::RandomUniform { low, high, .. } => {
                let d = same_len(&[low, high])?;
                if low.iter().zip(high).any(|(l, h)| !(l < h)) {
                    return Err(Error::InvalidArgument(
                        "random-uniform bounds need low < high on every entry".into(),
                    ));
                }
                d
            }
            AttackScript::Replay { sequence } => {
                if sequence.is_empty() {
                    return Err(Error::InvalidArgument("replay sequence is empty".into()));
                }
                let rows: Vec<&Vec<f64>> = sequence.iter().collect();
                same_len(&rows)?
            }
            AttackScript::Table { default, rounds } => {
                let mut rows: Vec<&Vec<f64>> = alloc::vec![default];
                rows.extend(rounds.iter().map(|(_, v)| v));
                same_len(&rows)?
            }
            AttackScript::PerEdge { default, receivers } => {
                let d = default.dim()?;
                for (receiver, script) in receivers {
                    let found = script.dim()?;
                    if found != d {
                        return Err(Error::DimensionMismatch { expected: d, found });
                    }
                    if receivers.iter().filter(|(r, _)| r == receiver).count() > 1 {
                        return Err(Error::InvalidArgument(format!(
                            "receiver {receiver} listed twice in a per-edge script"
                        )));
                    }
                }
                d
            }
        };
        Ok(d)
    }

    /// Mixes `salt` into every random seed, leaving deterministic kinds untouched.
    pub fn reseeded(&self, salt: u64) -> AttackScript {
        match self {
            AttackScript::RandomUniform {
                low,
                high,
                seed,
                per_receiver,
            } => AttackScript::RandomUniform {
                low: low.clone(),
                high: high.clone(),
                seed: mix(*seed, salt),
                per_receiver: *per_receiver,
            },
            AttackScript::PerEdge { default, receivers } => AttackScript::PerEdge {
                default: Box::new(default.reseeded(salt)),
                receivers: receivers
                    .iter()
                    .map(|(r, s)| (*r, s.reseeded(salt)))
                    .collect(),
            },
            other => other.clone(),
        }
    }
}

fn same_len(rows: &[&Vec<f64>]) -> Result<usize> {
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument(
            "attack vectors must have d >= 1".into(),
        ));
    }
    for row in rows {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "attack parameters must be finite".into(),
            ));
        }
    }
    Ok(d)
}

// splitmix64 finalizer over a combined key.
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The vector a faulty sensor sends at round `k` to `receiver`.
///
/// `receiver = None` asks for the script's default broadcast, which is what
/// traces record. Only [`AttackScript::PerEdge`] and per-receiver random
/// scripts look at the receiver.
pub fn attack_broadcast(script: &AttackScript, k: u64, receiver: Option<usize>) -> Vec<f64> {
    let t = k as f64;
    match script {
        AttackScript::Constant { value } => value.clone(),
        AttackScript::Ramp { offset, slope } => {
            offset.iter().zip(slope).map(|(o, s)| o + s * t).collect()
        }
        AttackScript::Sinusoid {
            offset,
            drift,
            amplitude,
            frequency,
            phase,
        } => (0..offset.len())
            .map(|l| {
                offset[l] + drift[l] * t + amplitude[l] * libm::sin(frequency[l] * t + phase[l])
            })
            .collect(),
        AttackScript::RandomUniform {
            low,
            high,
            seed,
            per_receiver,
        } => {
            let mut key = mix(*seed, k);
            if *per_receiver {
                key = mix(key, receiver.map_or(0, |r| r as u64 + 1));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            low.iter()
                .zip(high)
                .map(|(&l, &h)| rng.gen_range(l..h))
                .collect()
        }
        AttackScript::Replay { sequence } => sequence[(k % sequence.len() as u64) as usize].clone(),
        AttackScript::Table { default, rounds } => rounds
            .iter()
            .find(|(round, _)| *round == k)
            .map_or_else(|| default.clone(), |(_, v)| v.clone()),
        AttackScript::PerEdge { default, receivers } => {
            let script = receiver
                .and_then(|r| receivers.iter().find(|(to, _)| *to == r))
                .map_or(default.as_ref(), |(_, s)| s);
            attack_broadcast(script, k, receiver)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sensor_five() -> AttackScript {
        AttackScript::Sinusoid {
            offset: vec![2.0, 0.0],
            drift: vec![0.05, 0.0],
            amplitude: vec![0.0, 0.5],
            frequency: vec![0.0, 0.2],
            phase: vec![0.0, 0.0],
        }
    }

    #[test]
    fn constant_attacker() {
        let s = AttackScript::Constant {
            value: vec![2.0, -2.0],
        };
        for k in [0, 1, 17, 1000] {
            assert_eq!(attack_broadcast(&s, k, None), vec![2.0, -2.0]);
            assert_eq!(attack_broadcast(&s, k, Some(3)), vec![2.0, -2.0]);
        }
        let zero = AttackScript::Constant {
            value: vec![0.0; 2],
        };
        assert_eq!(attack_broadcast(&zero, 5, None), vec![0.0, 0.0]);
    }

    #[test]
    fn drifting_sinusoid_attacker() {
        let v = attack_broadcast(&sensor_five(), 20, None);
        assert_eq!(v[0], 3.0);
        assert!((v[1] - 0.5 * 4.0f64.sin()).abs() < 1e-15);
        assert!((v[1] - (-0.378_401_247_653_964_4)).abs() < 1e-12);
    }

    #[test]
    fn ramp_and_replay_and_table() {
        let ramp = AttackScript::Ramp {
            offset: vec![1.0],
            slope: vec![-0.5],
        };
        assert_eq!(attack_broadcast(&ramp, 4, None), vec![-1.0]);

        let replay = AttackScript::Replay {
            sequence: vec![vec![1.0], vec![2.0]],
        };
        assert_eq!(attack_broadcast(&replay, 3, None), vec![2.0]);

        let table = AttackScript::Table {
            default: vec![0.0],
            rounds: vec![(5, vec![9.0])],
        };
        assert_eq!(attack_broadcast(&table, 5, None), vec![9.0]);
        assert_eq!(attack_broadcast(&table, 6, None), vec![0.0]);
    }

    #[test]
    fn per_edge_equivocates() {
        let s = AttackScript::PerEdge {
            default: Box::new(AttackScript::Constant { value: vec![1.0] }),
            receivers: vec![(2, AttackScript::Constant { value: vec![-1.0] })],
        };
        assert_eq!(attack_broadcast(&s, 0, Some(2)), vec![-1.0]);
        assert_eq!(attack_broadcast(&s, 0, Some(3)), vec![1.0]);
        assert_eq!(attack_broadcast(&s, 0, None), vec![1.0]);
    }

    #[test]
    fn random_uniform_is_deterministic_and_bounded() {
        let s = AttackScript::RandomUniform {
            low: vec![-1.0, 10.0],
            high: vec![1.0, 11.0],
            seed: 42,
            per_receiver: true,
        };
        for k in 0..100 {
            let a = attack_broadcast(&s, k, Some(1));
            assert_eq!(a, attack_broadcast(&s, k, Some(1)));
            assert!((-1.0..1.0).contains(&a[0]) && (10.0..11.0).contains(&a[1]));
        }
        assert_ne!(
            attack_broadcast(&s, 3, Some(1)),
            attack_broadcast(&s, 3, Some(2))
        );
        let salted = s.reseeded(7);
        assert_ne!(
            attack_broadcast(&s, 3, Some(1)),
            attack_broadcast(&salted, 3, Some(1))
        );
        assert_eq!(salted, s.reseeded(7));
    }

    #[test]
    fn dimension_validation() {
        assert_eq!(sensor_five().dim(), Ok(2));
        assert!(AttackScript::Ramp {
            offset: vec![1.0],
            slope: vec![1.0, 2.0]
        }
        .dim()
        .is_err());
        assert!(AttackScript::RandomUniform {
            low: vec![1.0],
            high: vec![1.0],
            seed: 0,
            per_receiver: false
        }
        .dim()
        .is_err());
        assert!(AttackScript::Replay { sequence: vec![] }.dim().is_err());
        assert!(AttackScript::PerEdge {
            default: Box::new(AttackScript::Constant { value: vec![1.0] }),
            receivers: vec![(
                0,
                AttackScript::Constant {
                    value: vec![1.0, 2.0]
                }
            )],
        }
        .dim()
        .is_err());
    }
}
